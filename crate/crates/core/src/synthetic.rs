//! Small synthetic corpora with scores that can be worked out by hand.
//!
//! Each sample gets uniform-intensity 64x64 frames (so motion is just the
//! mean step between frame levels), a landmark track whose lip box is
//! 20x10 px centered at (32, 32), a constant clean waveform and a noisy copy
//! with an alternating-sign offset (so the reference SNR is
//! `20 log10(clean / offset)`).

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::lip_geometry::LipIndexSet;
use crate::manifest::{write_sample_manifest, LandmarkTrack, Point, SampleRecord, FACE_MESH_POINTS};
use crate::media::{write_numbered_frames, write_wav, GrayFrame};

pub const FRAME_SIDE: usize = 64;
pub const SAMPLE_RATE: u32 = 16_000;
pub const AUDIO_LEN: usize = 1_600;
pub const CLEAN_LEVEL: i16 = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub id: String,
    pub ref_text: String,
    pub hyp_text: Option<String>,
    /// Amplitude of the alternating offset added to the clean signal.
    pub noise_offset: i16,
    /// Intensity of each frame.
    pub levels: Vec<u8>,
    /// Frames whose landmarks are reported missing.
    pub missing_landmarks: Vec<usize>,
}

impl SyntheticSample {
    pub fn new(id: &str, ref_text: &str, hyp_text: &str, noise_offset: i16, levels: &[u8]) -> Self {
        SyntheticSample {
            id: id.into(),
            ref_text: ref_text.into(),
            hyp_text: Some(hyp_text.into()),
            noise_offset,
            levels: levels.to_vec(),
            missing_landmarks: Vec::new(),
        }
    }
}

/// The four-sample corpus used throughout the tests.
///
/// | id | ref / hyp          | offset | levels            |
/// |----|--------------------|--------|-------------------|
/// | a  | 你好世界 / 你好世界 | 100    | 0, 10, 30         |
/// | b  | 今天天气 / 今天天汽 | 1000   | 50, 50, 50        |
/// | c  | 早上好 / (empty)    | 10000  | 0, 40             |
/// | d  | 谢谢你们 / 谢谢     | 1      | 100, 120, 100, 120 |
pub fn hand_corpus() -> Vec<SyntheticSample> {
    let mut d = SyntheticSample::new("d", "谢谢你们", "谢谢", 1, &[100, 120, 100, 120]);
    d.missing_landmarks = vec![2];
    vec![
        SyntheticSample::new("a", "你好世界", "你好世界", 100, &[0, 10, 30]),
        SyntheticSample::new("b", "今天天气", "今天天汽", 1000, &[50, 50, 50]),
        SyntheticSample::new("c", "早上好", "", 10_000, &[0, 40]),
        d,
    ]
}

/// 468 points at the frame center with four lip points on the corners of a
/// 20x10 box, so the lip centroid is the center too.
pub fn landmark_frame(lips: &LipIndexSet) -> Vec<Point> {
    let c = (FRAME_SIDE / 2) as f64;
    let mut frame = vec![Point::new(c, c); FACE_MESH_POINTS];
    let corners = [(-10.0, -5.0), (10.0, 5.0), (-10.0, 5.0), (10.0, -5.0)];
    for (&i, (dx, dy)) in lips.indices().iter().zip(corners) {
        frame[i] = Point::new(c + dx, c + dy);
    }
    frame
}

fn write_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

/// Writes media for every sample under `dir` plus `dir/manifest.jsonl`
/// (with paths relative to `dir`). Returns the manifest path.
pub fn write_corpus(dir: &Path, samples: &[SyntheticSample], lips: &LipIndexSet) -> Result<PathBuf> {
    for sub in ["audio", "frames", "landmarks"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(write_err(&p))?;
    }
    let clean: Vec<i16> = vec![CLEAN_LEVEL; AUDIO_LEN];
    let mut records = Vec::new();
    for s in samples {
        let noisy: Vec<i16> = (0..AUDIO_LEN)
            .map(|i| {
                let off = if i % 2 == 0 { s.noise_offset } else { -s.noise_offset };
                CLEAN_LEVEL.saturating_add(off)
            })
            .collect();
        let audio = PathBuf::from(format!("audio/{}.wav", s.id));
        let clean_audio = PathBuf::from(format!("audio/{}_clean.wav", s.id));
        write_wav(&dir.join(&audio), SAMPLE_RATE, &noisy)?;
        write_wav(&dir.join(&clean_audio), SAMPLE_RATE, &clean)?;

        let frames_rel = PathBuf::from(format!("frames/{}", s.id));
        let frames: Vec<GrayFrame> = s
            .levels
            .iter()
            .map(|&l| GrayFrame::filled(FRAME_SIDE, FRAME_SIDE, l))
            .collect();
        write_numbered_frames(&dir.join(&frames_rel), "frame", &frames)?;

        let track = LandmarkTrack::new(
            (0..s.levels.len())
                .map(|t| (!s.missing_landmarks.contains(&t)).then(|| landmark_frame(lips)))
                .collect(),
        )?;
        let landmarks = PathBuf::from(format!("landmarks/{}.jsonl", s.id));
        let lm_path = dir.join(&landmarks);
        fs::write(&lm_path, track.to_text()).map_err(write_err(&lm_path))?;

        records.push(SampleRecord {
            id: s.id.clone(),
            audio,
            frames: frames_rel,
            landmarks,
            ref_text: s.ref_text.clone(),
            hyp_text: s.hyp_text.clone(),
            clean_audio: Some(clean_audio),
            ref_emb: None,
            pred_emb: None,
            extra: Default::default(),
        });
    }
    let manifest = dir.join("manifest.jsonl");
    fs::write(&manifest, write_sample_manifest(&records)?).map_err(write_err(&manifest))?;
    Ok(manifest)
}
