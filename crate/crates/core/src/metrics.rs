//! Transcript evaluation: CER, embedding similarity and the comprehensive score.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::{read_embedding, EmbeddingVector, PairRecord};
use crate::quality_audio::{levenshtein_chars, normalize_text};

pub const DEFAULT_ALPHA: f64 = 0.5;

/// Character error rate `d(hyp, ref) / |ref|`. Not clipped: long
/// hypotheses can push it above 1.
pub fn cer(hyp: &str, reference: &str) -> Result<f64> {
    let (edits, len) = cer_parts(hyp, reference)?;
    Ok(edits as f64 / len as f64)
}

fn cer_parts(hyp: &str, reference: &str) -> Result<(usize, usize)> {
    let h: Vec<char> = hyp.chars().collect();
    let r: Vec<char> = reference.chars().collect();
    if r.is_empty() {
        return Err(Error::UndefinedScore("CER with an empty reference".into()));
    }
    Ok((levenshtein_chars(&h, &r), r.len()))
}

/// Cosine similarity, clamped to [-1, 1].
pub fn emb_sim(pred: &EmbeddingVector, reference: &EmbeddingVector) -> Result<f64> {
    if pred.len() != reference.len() {
        return Err(Error::LengthMismatch {
            what: "embedding dimensions",
            left: pred.len(),
            right: reference.len(),
        });
    }
    let dot: f64 = pred.values().iter().zip(reference.values()).map(|(a, b)| a * b).sum();
    let np = pred.values().iter().map(|a| a * a).sum::<f64>().sqrt();
    let nr = reference.values().iter().map(|b| b * b).sum::<f64>().sqrt();
    if np == 0.0 || nr == 0.0 {
        return Err(Error::UndefinedScore("cosine similarity of a zero vector".into()));
    }
    Ok((dot / (np * nr)).clamp(-1.0, 1.0))
}

/// `(1 - alpha)(1 - cer) + alpha * emb_sim`.
pub fn comprehensive_score(cer: f64, emb_sim: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::OutOfRange(format!("alpha = {alpha} is outside [0, 1]")));
    }
    Ok((1.0 - alpha) * (1.0 - cer) + alpha * emb_sim)
}

/// Rounds half away from zero at `decimals` places, the way tables print.
pub fn round_half_up(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    // 0.725 is stored as 0.72499999...; the nudge keeps it rounding up.
    let nudged = x * scale;
    (nudged + nudged.signum() * 1e-9).round() / scale
}

/// One hypothesis/reference pair with embeddings already loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPair {
    pub id: String,
    pub hyp: String,
    pub reference: String,
    pub pred_emb: EmbeddingVector,
    pub ref_emb: EmbeddingVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub edits: usize,
    pub ref_len: usize,
    pub cer: f64,
    pub emb_sim: f64,
    pub cs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalFailure {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub alpha: f64,
    pub records: Vec<EvalRecord>,
    pub failures: Vec<EvalFailure>,
    /// Total edits over total reference characters.
    pub corpus_cer_micro: f64,
    /// Mean of per-record CER.
    pub corpus_cer_macro: f64,
    pub corpus_emb_sim: f64,
    pub corpus_cs_micro: f64,
    pub corpus_cs_macro: f64,
}

fn evaluate_pair(pair: &EvalPair, alpha: f64) -> Result<EvalRecord> {
    let (edits, ref_len) = cer_parts(&pair.hyp, &pair.reference)?;
    let cer = edits as f64 / ref_len as f64;
    let emb_sim = emb_sim(&pair.pred_emb, &pair.ref_emb)?;
    Ok(EvalRecord {
        id: pair.id.clone(),
        edits,
        ref_len,
        cer,
        emb_sim,
        cs: comprehensive_score(cer, emb_sim, alpha)?,
    })
}

/// Builds the report from records that already passed per-pair checks.
pub fn aggregate(records: Vec<EvalRecord>, failures: Vec<EvalFailure>, alpha: f64) -> Result<EvalReport> {
    if records.is_empty() {
        return Err(Error::Empty("no pair could be evaluated"));
    }
    let n = records.len() as f64;
    let edits: usize = records.iter().map(|r| r.edits).sum();
    let chars: usize = records.iter().map(|r| r.ref_len).sum();
    let cer_micro = edits as f64 / chars as f64;
    let cer_macro = records.iter().map(|r| r.cer).sum::<f64>() / n;
    let emb = records.iter().map(|r| r.emb_sim).sum::<f64>() / n;
    Ok(EvalReport {
        alpha,
        corpus_cs_micro: comprehensive_score(cer_micro, emb, alpha)?,
        corpus_cs_macro: comprehensive_score(cer_macro, emb, alpha)?,
        corpus_cer_micro: cer_micro,
        corpus_cer_macro: cer_macro,
        corpus_emb_sim: emb,
        records,
        failures,
    })
}

/// Scores every pair; pairs that fail are listed in `failures`.
pub fn evaluate_corpus(pairs: &[EvalPair], alpha: f64) -> Result<EvalReport> {
    comprehensive_score(0.0, 0.0, alpha)?;
    if pairs.is_empty() {
        return Err(Error::Empty("no pairs to evaluate"));
    }
    let results: Vec<Result<EvalRecord>> = pairs.par_iter().map(|p| evaluate_pair(p, alpha)).collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (pair, r) in pairs.iter().zip(results) {
        match r {
            Ok(r) => records.push(r),
            Err(e) => failures.push(EvalFailure {
                id: pair.id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    if records.is_empty() {
        return Err(Error::DegenerateCorpus(format!(
            "all {} pairs failed; first: {} ({})",
            failures.len(),
            failures[0].id,
            failures[0].reason
        )));
    }
    aggregate(records, failures, alpha)
}

/// Loads the embedding files of each manifest pair, resolving relative
/// paths against `base_dir`. Unloadable pairs come back as failures.
pub fn load_pairs(
    records: &[PairRecord],
    base_dir: &Path,
    normalize: bool,
) -> (Vec<EvalPair>, Vec<EvalFailure>) {
    let resolve = |p: &Path| {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base_dir.join(p)
        }
    };
    let loaded: Vec<Result<EvalPair>> = records
        .par_iter()
        .map(|r| {
            let text = |s: &str| if normalize { normalize_text(s) } else { s.to_string() };
            Ok(EvalPair {
                id: r.id.clone(),
                hyp: text(&r.hyp_text),
                reference: text(&r.ref_text),
                pred_emb: read_embedding(&resolve(&r.pred_emb))?,
                ref_emb: read_embedding(&resolve(&r.ref_emb))?,
            })
        })
        .collect();
    let mut pairs = Vec::new();
    let mut failures = Vec::new();
    for (r, p) in records.iter().zip(loaded) {
        match p {
            Ok(p) => pairs.push(p),
            Err(e) => failures.push(EvalFailure {
                id: r.id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    (pairs, failures)
}
