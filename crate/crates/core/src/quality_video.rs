//! Video-side quality: inter-frame motion of the stabilized lip crops.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::GrayFrame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VideoQuality {
    pub motion: f64,
    pub s_video: f64,
}

/// Mean absolute pixel difference over all consecutive frame pairs.
pub fn motion_magnitude(frames: &[GrayFrame]) -> Result<f64> {
    if frames.len() < 2 {
        return Err(Error::Frames(format!(
            "motion needs at least 2 frames, got {}",
            frames.len()
        )));
    }
    let (w, h) = (frames[0].width, frames[0].height);
    if let Some((i, f)) = frames
        .iter()
        .enumerate()
        .find(|(_, f)| f.width != w || f.height != h)
    {
        return Err(Error::Frames(format!(
            "frame {i} is {}x{}, expected {w}x{h}",
            f.width, f.height
        )));
    }
    let pixels = w * h;
    if pixels == 0 {
        return Err(Error::Frames("frames have no pixels".into()));
    }
    let total: u64 = frames
        .windows(2)
        .map(|pair| {
            pair[0]
                .pixels
                .iter()
                .zip(&pair[1].pixels)
                .map(|(&a, &b)| u64::from(a.abs_diff(b)))
                .sum::<u64>()
        })
        .sum();
    Ok(total as f64 / ((frames.len() - 1) * pixels) as f64)
}

/// `min(motion / m_max, 1)`.
pub fn video_score(motion: f64, m_max: f64) -> Result<f64> {
    if !(m_max > 0.0 && m_max.is_finite()) {
        return Err(Error::DegenerateCorpus(format!(
            "motion normalizer must be positive, got {m_max}"
        )));
    }
    if !(motion >= 0.0 && motion.is_finite()) {
        return Err(Error::OutOfRange(format!("motion = {motion} must be non-negative")));
    }
    Ok((motion / m_max).min(1.0))
}

/// Nearest-rank percentile: the element at 1-based rank `ceil(pct/100 * n)`
/// of the ascending sort. `pct` is an integer in 1..=100.
pub fn nearest_rank_percentile(values: &[f64], pct: u32) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("percentile of an empty list"));
    }
    if !(1..=100).contains(&pct) {
        return Err(Error::OutOfRange(format!("percentile {pct} outside 1..=100")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("percentile input".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = (pct as usize * n).div_ceil(100);
    Ok(sorted[rank.max(1) - 1])
}

pub fn percentile_90(values: &[f64]) -> Result<f64> {
    nearest_rank_percentile(values, 90)
}
