//! Audio-side quality signals: transcript agreement and signal-to-noise ratio.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

pub(crate) fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// `1 - d(hyp, ref) / max(|ref|, |hyp|)`, lengths in characters.
pub fn asr_confidence(hyp: &str, reference: &str) -> Result<f64> {
    let h: Vec<char> = hyp.chars().collect();
    let r: Vec<char> = reference.chars().collect();
    let longest = h.len().max(r.len());
    if longest == 0 {
        return Err(Error::UndefinedScore(
            "ASR confidence of two empty strings".into(),
        ));
    }
    Ok(1.0 - levenshtein_chars(&h, &r) as f64 / longest as f64)
}

/// Keeps only alphanumeric characters, lowercased. Drops whitespace and
/// punctuation in every script.
pub fn normalize_text(text: &str) -> String {
    text.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Closed decibel interval SNR values are clamped into.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct SnrClamp {
    pub min_db: f64,
    pub max_db: f64,
}

impl Default for SnrClamp {
    fn default() -> Self {
        SnrClamp {
            min_db: -10.0,
            max_db: 60.0,
        }
    }
}

impl From<[f64; 2]> for SnrClamp {
    fn from([min_db, max_db]: [f64; 2]) -> Self {
        SnrClamp { min_db, max_db }
    }
}

impl From<SnrClamp> for [f64; 2] {
    fn from(c: SnrClamp) -> Self {
        [c.min_db, c.max_db]
    }
}

impl SnrClamp {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_db.is_finite() && self.max_db.is_finite() && self.min_db < self.max_db) {
            return Err(Error::Config(format!(
                "snr clamp must be a finite increasing interval, got [{}, {}]",
                self.min_db, self.max_db
            )));
        }
        Ok(())
    }

    pub fn apply(&self, db: f64) -> f64 {
        if db.is_nan() {
            return self.min_db;
        }
        db.clamp(self.min_db, self.max_db)
    }
}

/// `10 log10(sum s^2 / sum (s - s_hat)^2)`, clamped. Zero noise gives the
/// upper clamp.
pub fn snr_reference(clean: &[f64], noisy: &[f64], clamp: SnrClamp) -> Result<f64> {
    if clean.len() != noisy.len() {
        return Err(Error::LengthMismatch {
            what: "clean vs noisy waveform",
            left: clean.len(),
            right: noisy.len(),
        });
    }
    if clean.is_empty() {
        return Err(Error::Signal("empty waveform".into()));
    }
    let signal: f64 = clean.iter().map(|s| s * s).sum();
    if signal == 0.0 {
        return Err(Error::Signal("clean signal has zero energy".into()));
    }
    let noise: f64 = clean
        .iter()
        .zip(noisy)
        .map(|(s, n)| (s - n) * (s - n))
        .sum();
    if noise == 0.0 {
        return Ok(clamp.max_db);
    }
    Ok(clamp.apply(10.0 * (signal / noise).log10()))
}

/// Frame energies below this are treated as silence.
pub const ENERGY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrEstimator {
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub clamp: SnrClamp,
}

impl Default for SnrEstimator {
    fn default() -> Self {
        SnrEstimator {
            frame_ms: 25.0,
            hop_ms: 10.0,
            clamp: SnrClamp::default(),
        }
    }
}

impl SnrEstimator {
    /// Mean-square energy of each analysis frame.
    pub fn frame_energies(&self, samples: &[f64], sample_rate: u32) -> Result<Vec<f64>> {
        let frame = (f64::from(sample_rate) * self.frame_ms / 1000.0).round() as usize;
        let hop = (f64::from(sample_rate) * self.hop_ms / 1000.0).round() as usize;
        if frame == 0 || hop == 0 {
            return Err(Error::Signal(format!(
                "frame/hop of {}/{} ms is empty at {sample_rate} Hz",
                self.frame_ms, self.hop_ms
            )));
        }
        if samples.len() < frame {
            return Err(Error::Signal(format!(
                "waveform has {} samples, shorter than one {frame}-sample frame",
                samples.len()
            )));
        }
        Ok((0..=(samples.len() - frame) / hop)
            .map(|k| {
                let chunk = &samples[k * hop..k * hop + frame];
                chunk.iter().map(|s| s * s).sum::<f64>() / frame as f64
            })
            .collect())
    }

    /// Blind SNR from frame energies.
    ///
    /// Noise power is the mean energy of the quietest tenth of the frames
    /// (at least one). Signal power is the mean of the remaining frames
    /// minus the noise power. No excess over the noise floor returns the
    /// lower clamp; a silent noise floor under real signal returns the upper.
    pub fn estimate(&self, samples: &[f64], sample_rate: u32) -> Result<f64> {
        let mut energies = self.frame_energies(samples, sample_rate)?;
        energies.sort_by(f64::total_cmp);
        let quiet = (energies.len() / 10).max(1);
        let noise = mean(&energies[..quiet]);
        let rest = if quiet < energies.len() {
            &energies[quiet..]
        } else {
            &energies[..]
        };
        let excess = mean(rest) - noise;
        if excess <= ENERGY_FLOOR {
            return Ok(self.clamp.min_db);
        }
        let noise = noise.max(ENERGY_FLOOR);
        Ok(self.clamp.apply(10.0 * (excess / noise).log10()))
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Blind SNR with 25 ms frames, 10 ms hop and the default clamp.
pub fn snr_estimate(samples: &[f64], sample_rate: u32) -> Result<f64> {
    SnrEstimator::default().estimate(samples, sample_rate)
}

pub(crate) fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("{name} = {v} is outside [0, 1]")))
    }
}

/// Per-sample audio quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AudioQuality {
    pub s_asr: f64,
    pub snr_db: f64,
    pub snr_norm: f64,
    pub s_audio: f64,
}

/// Convex combination of ASR confidence and normalized SNR.
pub fn weighted_audio_score(s_asr: f64, snr_norm: f64, w_asr: f64, w_snr: f64) -> Result<f64> {
    check_unit("s_asr", s_asr)?;
    check_unit("snr_norm", snr_norm)?;
    Ok(w_asr * s_asr + w_snr * snr_norm)
}

/// `0.5 * s_asr + 0.5 * snr_norm`.
pub fn audio_score(s_asr: f64, snr_norm: f64) -> Result<f64> {
    weighted_audio_score(s_asr, snr_norm, 0.5, 0.5)
}
