//! Corpus scoring and the accept/reject split.
//!
//! Scoring runs in two passes. The first measures each sample on its own
//! (ASR confidence, SNR in dB, lip motion). Between the passes the corpus
//! bounds are reduced: SNR min/max and the 90th-percentile motion. The
//! second pass normalizes, combines and thresholds.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lip_geometry::{apply_crops, plan_crops, LipIndexSet, DEFAULT_GAMMA};
use crate::manifest::{read_landmark_track, write_partition_manifests, SampleRecord};
use crate::media::{read_frame_dir, read_wav};
use crate::quality_audio::{
    asr_confidence, check_unit, normalize_text, snr_reference, weighted_audio_score, SnrClamp,
    SnrEstimator,
};
use crate::quality_video::{motion_magnitude, percentile_90, video_score};

pub const DEFAULT_THRESHOLD: f64 = 0.55;
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnrMode {
    /// Compare against the sample's `clean_audio`.
    Reference,
    /// Blind estimate from frame energies of the sample audio.
    #[default]
    Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurationConfig {
    pub gamma: f64,
    pub w_asr: f64,
    pub w_snr: f64,
    pub w_audio: f64,
    pub w_video: f64,
    pub threshold: f64,
    pub snr_mode: SnrMode,
    pub snr_clamp_db: SnrClamp,
    pub frozen_stats_path: Option<PathBuf>,
    /// Compare transcripts after [`normalize_text`].
    pub normalize_text: bool,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig {
            gamma: DEFAULT_GAMMA,
            w_asr: 0.5,
            w_snr: 0.5,
            w_audio: 0.6,
            w_video: 0.4,
            threshold: DEFAULT_THRESHOLD,
            snr_mode: SnrMode::default(),
            snr_clamp_db: SnrClamp::default(),
            frozen_stats_path: None,
            normalize_text: false,
        }
    }
}

const WEIGHT_TOLERANCE: f64 = 1e-9;

impl CurationConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("w_asr", self.w_asr),
            ("w_snr", self.w_snr),
            ("w_audio", self.w_audio),
            ("w_video", self.w_video),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("{name} = {w} must be non-negative")));
            }
        }
        if (self.w_asr + self.w_snr - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::Config("w_asr + w_snr must equal 1".into()));
        }
        if (self.w_audio + self.w_video - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::Config("w_audio + w_video must equal 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma = {} must be positive", self.gamma)));
        }
        if !self.threshold.is_finite() {
            return Err(Error::Config("threshold must be finite".into()));
        }
        self.snr_clamp_db.validate()
    }
}

/// Normalization bounds for one corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub snr_min: f64,
    pub snr_max: f64,
    pub m_max: f64,
    pub n_samples: usize,
}

impl CorpusStats {
    /// Reads either a bare stats object or a full `report.json`.
    pub fn from_file(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum StatsFile {
            Report { stats: CorpusStats },
            Bare(CorpusStats),
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parsed: StatsFile = serde_json::from_str(&text).map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let stats = match parsed {
            StatsFile::Report { stats } | StatsFile::Bare(stats) => stats,
        };
        if stats.snr_max < stats.snr_min {
            return Err(Error::Decode {
                path: path.to_path_buf(),
                message: "snr_max < snr_min".into(),
            });
        }
        Ok(stats)
    }

    pub fn normalize_snr(&self, snr_db: f64) -> f64 {
        normalize_with_bounds(snr_db, self.snr_min, self.snr_max)
    }
}

/// `(v - min) / (max - min)`, clamped to [0, 1]; 0.5 when `max == min`.
pub fn normalize_with_bounds(v: f64, min: f64, max: f64) -> f64 {
    if max == min {
        0.5
    } else {
        ((v - min) / (max - min)).clamp(0.0, 1.0)
    }
}

/// Min-max normalization over `values`; a constant list maps to 0.5 each.
pub fn min_max_normalize(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Empty("min-max normalization of an empty list"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("min-max input".into()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(values
        .iter()
        .map(|&v| normalize_with_bounds(v, min, max))
        .collect())
}

pub fn weighted_composite_score(s_audio: f64, s_video: f64, w_audio: f64, w_video: f64) -> Result<f64> {
    check_unit("s_audio", s_audio)?;
    check_unit("s_video", s_video)?;
    Ok(w_audio * s_audio + w_video * s_video)
}

/// `0.6 * s_audio + 0.4 * s_video`.
pub fn composite_score(s_audio: f64, s_video: f64) -> Result<f64> {
    weighted_composite_score(s_audio, s_video, 0.6, 0.4)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub accept: Vec<String>,
    pub reject: Vec<String>,
}

/// Splits ids by `s_comp >= threshold`. Both sides keep input order.
pub fn partition<'a, I>(scores: I, threshold: f64) -> Result<Partition>
where
    I: IntoIterator<Item = (&'a str, f64)>,
{
    let mut seen = HashSet::new();
    let mut out = Partition::default();
    for (id, s_comp) in scores {
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id.to_string()));
        }
        if s_comp >= threshold {
            out.accept.push(id.to_string());
        } else {
            out.reject.push(id.to_string());
        }
    }
    Ok(out)
}

/// First-pass, corpus-independent measurements for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMeasurement {
    pub s_asr: f64,
    pub snr_db: f64,
    pub motion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub id: String,
    pub s_asr: f64,
    pub snr_db: f64,
    pub snr_norm: f64,
    pub s_audio: f64,
    pub motion: f64,
    pub s_video: f64,
    pub s_comp: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationReport {
    pub stats: CorpusStats,
    pub frozen_stats: bool,
    pub threshold: f64,
    pub samples: Vec<SampleScore>,
    /// Samples that could not be scored, with the reason.
    pub excluded: Vec<SampleFailure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurationOutcome {
    pub report: CurationReport,
    pub accept: Vec<SampleRecord>,
    pub reject: Vec<SampleRecord>,
}

/// Measures one sample. Paths in `record` must already be resolved.
pub fn measure_sample(
    record: &SampleRecord,
    config: &CurationConfig,
    lips: &LipIndexSet,
) -> Result<SampleMeasurement> {
    let hyp = record
        .hyp_text
        .as_deref()
        .ok_or_else(|| Error::UndefinedScore("missing hyp_text".into()))?;
    let s_asr = if config.normalize_text {
        asr_confidence(&normalize_text(hyp), &normalize_text(&record.ref_text))?
    } else {
        asr_confidence(hyp, &record.ref_text)?
    };

    let audio = read_wav(&record.audio)?;
    let snr_db = match config.snr_mode {
        SnrMode::Reference => {
            let clean_path = record.clean_audio.as_deref().ok_or_else(|| {
                Error::Signal("reference SNR mode needs clean_audio".into())
            })?;
            let clean = read_wav(clean_path)?;
            snr_reference(&clean.samples, &audio.samples, config.snr_clamp_db)?
        }
        SnrMode::Estimate => SnrEstimator {
            clamp: config.snr_clamp_db,
            ..SnrEstimator::default()
        }
        .estimate(&audio.samples, audio.sample_rate)?,
    };

    let track = read_landmark_track(&record.landmarks)?;
    let frames = read_frame_dir(&record.frames)?;
    let plan = plan_crops(&track, lips, config.gamma)?;
    let crops = apply_crops(&frames, &plan)?;
    let motion = motion_magnitude(&crops)?;

    Ok(SampleMeasurement {
        s_asr,
        snr_db,
        motion,
    })
}

/// Corpus bounds from first-pass measurements.
pub fn corpus_stats(measurements: &[SampleMeasurement]) -> Result<CorpusStats> {
    if measurements.is_empty() {
        return Err(Error::Empty("no scored samples"));
    }
    let snr: Vec<f64> = measurements.iter().map(|m| m.snr_db).collect();
    let motion: Vec<f64> = measurements.iter().map(|m| m.motion).collect();
    Ok(CorpusStats {
        snr_min: snr.iter().copied().fold(f64::INFINITY, f64::min),
        snr_max: snr.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        m_max: percentile_90(&motion)?,
        n_samples: measurements.len(),
    })
}

/// Second pass for one sample.
pub fn score_sample(
    id: &str,
    m: &SampleMeasurement,
    stats: &CorpusStats,
    config: &CurationConfig,
) -> Result<SampleScore> {
    let snr_norm = stats.normalize_snr(m.snr_db);
    let s_audio = weighted_audio_score(m.s_asr, snr_norm, config.w_asr, config.w_snr)?;
    let s_video = video_score(m.motion, stats.m_max)?;
    let s_comp = weighted_composite_score(s_audio, s_video, config.w_audio, config.w_video)?;
    Ok(SampleScore {
        id: id.to_string(),
        s_asr: m.s_asr,
        snr_db: m.snr_db,
        snr_norm,
        s_audio,
        motion: m.motion,
        s_video,
        s_comp,
        accepted: s_comp >= config.threshold,
    })
}

/// Scores and partitions a corpus.
///
/// Relative paths in `records` are resolved against `base_dir`. Per-sample
/// work runs on the current rayon pool. Samples that cannot be measured are
/// listed in `report.excluded` and left out of both subsets; the run fails
/// only when nothing could be scored.
pub fn curate_corpus(
    records: &[SampleRecord],
    base_dir: &Path,
    config: &CurationConfig,
    lips: &LipIndexSet,
    frozen: Option<CorpusStats>,
) -> Result<CurationOutcome> {
    config.validate()?;
    if records.is_empty() {
        return Err(Error::Empty("corpus has no samples"));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = records.iter().find(|r| !seen.insert(r.id.as_str())) {
        return Err(Error::DuplicateId(dup.id.clone()));
    }

    let measured: Vec<Result<SampleMeasurement>> = records
        .par_iter()
        .map(|r| measure_sample(&r.resolved(base_dir), config, lips))
        .collect();

    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for (record, m) in records.iter().zip(measured) {
        match m {
            Ok(m) => kept.push((record, m)),
            Err(e) => excluded.push(SampleFailure {
                id: record.id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    if kept.is_empty() {
        return Err(Error::DegenerateCorpus(format!(
            "none of {} samples could be scored; first failure: {} ({})",
            records.len(),
            excluded[0].id,
            excluded[0].reason
        )));
    }

    let measurements: Vec<SampleMeasurement> = kept.iter().map(|(_, m)| *m).collect();
    let (stats, frozen_stats) = match frozen {
        Some(s) => (s, true),
        None => (corpus_stats(&measurements)?, false),
    };

    let samples = kept
        .par_iter()
        .map(|(record, m)| score_sample(&record.id, m, &stats, config).map_err(|e| e.in_sample(&record.id)))
        .collect::<Result<Vec<_>>>()?;

    let split = partition(
        samples.iter().map(|s| (s.id.as_str(), s.s_comp)),
        config.threshold,
    )?;
    let accepted: HashSet<&str> = split.accept.iter().map(String::as_str).collect();
    let (accept, reject) = kept
        .iter()
        .map(|(r, _)| (*r).clone())
        .partition(|r| accepted.contains(r.id.as_str()));

    Ok(CurationOutcome {
        report: CurationReport {
            stats,
            frozen_stats,
            threshold: config.threshold,
            samples,
            excluded,
        },
        accept,
        reject,
    })
}

/// Writes `report.json`, `accept.jsonl` and `reject.jsonl`.
pub fn write_curation_outputs(outcome: &CurationOutcome, out_dir: &Path) -> Result<()> {
    write_partition_manifests(&outcome.accept, &outcome.reject, out_dir)?;
    let path = out_dir.join(REPORT_FILE);
    let mut text = serde_json::to_string_pretty(&outcome.report)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}
