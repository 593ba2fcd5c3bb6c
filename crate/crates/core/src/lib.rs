//! Curation and evaluation toolkit for audio-visual speech corpora.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`lip_geometry`] turns per-frame face-mesh landmarks into a stabilized,
//!    uniformly sized lip crop sequence.
//! 2. [`quality_audio`] and [`quality_video`] score each sample; [`curation`]
//!    normalizes those scores over the corpus and splits it into an accepted
//!    and a rejected subset.
//! 3. [`curriculum`] turns that split into a deterministic easy-to-hard
//!    epoch schedule.
//! 4. [`metrics`] scores model transcripts with CER, embedding similarity and
//!    the combined comprehensive score.
//!
//! [`resampler`] is a small double-precision implementation of a query-based
//! spatiotemporal token resampler with an analytic gradient and a
//! finite-difference check.

pub mod curation;
pub mod curriculum;
pub mod error;
pub mod lip_geometry;
pub mod manifest;
pub mod media;
pub mod metrics;
pub mod quality_audio;
pub mod quality_video;
pub mod resampler;
pub mod synthetic;

pub use error::{Error, Result};
