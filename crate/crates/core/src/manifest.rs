//! Line-delimited JSON manifests, landmark tracks and embedding files.
//!
//! Every manifest line is one JSON object. Keys this crate does not know are
//! kept in an `extra` map and written back out unchanged, so tools further
//! down the line can attach their own fields.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Number of points in a face-mesh landmark frame.
pub const FACE_MESH_POINTS: usize = 468;

pub const ACCEPT_MANIFEST: &str = "accept.jsonl";
pub const REJECT_MANIFEST: &str = "reject.jsonl";

/// One corpus sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub audio: PathBuf,
    pub frames: PathBuf,
    pub landmarks: PathBuf,
    pub ref_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyp_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clean_audio: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_emb: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pred_emb: Option<PathBuf>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl SampleRecord {
    /// Returns a copy whose relative paths are joined onto `base`.
    pub fn resolved(&self, base: &Path) -> SampleRecord {
        let join = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        SampleRecord {
            audio: join(&self.audio),
            frames: join(&self.frames),
            landmarks: join(&self.landmarks),
            clean_audio: self.clean_audio.as_deref().map(join),
            ref_emb: self.ref_emb.as_deref().map(join),
            pred_emb: self.pred_emb.as_deref().map(join),
            ..self.clone()
        }
    }
}

/// One line of an evaluation pairs manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub id: String,
    pub hyp_text: String,
    pub ref_text: String,
    pub pred_emb: PathBuf,
    pub ref_emb: PathBuf,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

trait Keyed {
    fn key(&self) -> &str;
    fn check(&self) -> std::result::Result<(), String>;
}

impl Keyed for SampleRecord {
    fn key(&self) -> &str {
        &self.id
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.ref_text.is_empty() {
            return Err(format!("sample {:?}: empty ref_text", self.id));
        }
        Ok(())
    }
}

impl Keyed for PairRecord {
    fn key(&self) -> &str {
        &self.id
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        Ok(())
    }
}

fn parse_records<T: DeserializeOwned + Keyed>(text: &str) -> Result<Vec<T>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(raw).map_err(|e| Error::ManifestLine {
            line,
            message: e.to_string(),
        })?;
        record
            .check()
            .map_err(|message| Error::ManifestLine { line, message })?;
        if !seen.insert(record.key().to_string()) {
            return Err(Error::DuplicateId(record.key().to_string()));
        }
        out.push(record);
    }
    Ok(out)
}

/// Parses a sample manifest; blank lines are skipped, order is preserved.
pub fn parse_sample_manifest(text: &str) -> Result<Vec<SampleRecord>> {
    parse_records(text)
}

pub fn parse_pairs_manifest(text: &str) -> Result<Vec<PairRecord>> {
    parse_records(text)
}

pub fn read_sample_manifest(path: &Path) -> Result<Vec<SampleRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sample_manifest(&text)
}

pub fn read_pairs_manifest(path: &Path) -> Result<Vec<PairRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pairs_manifest(&text)
}

/// Serializes records as one compact JSON object per line.
pub fn write_sample_manifest(records: &[SampleRecord]) -> Result<String> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    Ok(out)
}

/// Writes `accept.jsonl` and `reject.jsonl` into `out_dir`.
///
/// Overlapping ids are rejected before anything touches the filesystem.
pub fn write_partition_manifests(
    accept: &[SampleRecord],
    reject: &[SampleRecord],
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf)> {
    let accepted: HashSet<&str> = accept.iter().map(|r| r.id.as_str()).collect();
    if let Some(dup) = reject.iter().find(|r| accepted.contains(r.id.as_str())) {
        return Err(Error::OverlappingIds(dup.id.clone()));
    }
    let accept_text = write_sample_manifest(accept)?;
    let reject_text = write_sample_manifest(reject)?;

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let accept_path = out_dir.join(ACCEPT_MANIFEST);
    let reject_path = out_dir.join(REJECT_MANIFEST);
    fs::write(&accept_path, accept_text).map_err(|e| Error::io(&accept_path, e))?;
    fs::write(&reject_path, reject_text).map_err(|e| Error::io(&reject_path, e))?;
    Ok((accept_path, reject_path))
}

/// A 2-D point in pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Per-frame face-mesh landmarks for one video. Coordinates are pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkTrack {
    frames: Vec<Option<Vec<Point>>>,
}

impl LandmarkTrack {
    /// Builds a track, checking that every present frame has 468 finite points.
    pub fn new(frames: Vec<Option<Vec<Point>>>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::EmptyTrack);
        }
        for (frame, points) in frames.iter().enumerate() {
            if let Some(points) = points {
                check_frame_points(frame, points)?;
            }
        }
        Ok(LandmarkTrack { frames })
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn frames(&self) -> &[Option<Vec<Point>>] {
        &self.frames
    }

    pub fn present_count(&self) -> usize {
        self.frames.iter().filter(|f| f.is_some()).count()
    }

    /// Serializes back to the one-line-per-frame format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (frame, points) in self.frames.iter().enumerate() {
            let line = LandmarkLine {
                frame,
                points: points.clone(),
            };
            out.push_str(&serde_json::to_string(&line).expect("landmark line serializes"));
            out.push('\n');
        }
        out
    }
}

fn check_frame_points(frame: usize, points: &[Point]) -> Result<()> {
    if points.len() != FACE_MESH_POINTS {
        return Err(Error::LandmarkFrame {
            frame,
            message: format!(
                "expected {FACE_MESH_POINTS} points, got {}",
                points.len()
            ),
        });
    }
    if let Some(i) = points.iter().position(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::LandmarkFrame {
            frame,
            message: format!("point {i} is not finite"),
        });
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct LandmarkLine {
    frame: usize,
    points: Option<Vec<Point>>,
}

/// Parses a landmark track. A `null` points entry marks a frame the detector
/// could not handle; frame indices must run 0, 1, 2, ... without gaps.
pub fn parse_landmark_track(text: &str) -> Result<LandmarkTrack> {
    let mut frames = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let line: LandmarkLine = serde_json::from_str(raw).map_err(|e| Error::ManifestLine {
            line: idx + 1,
            message: e.to_string(),
        })?;
        let expected = frames.len();
        if line.frame != expected {
            return Err(Error::LandmarkFrame {
                frame: line.frame,
                message: format!("frame indices must be dense, expected frame {expected}"),
            });
        }
        if let Some(points) = &line.points {
            check_frame_points(line.frame, points)?;
        }
        frames.push(line.points);
    }
    LandmarkTrack::new(frames)
}

pub fn read_landmark_track(path: &Path) -> Result<LandmarkTrack> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_landmark_track(&text).map_err(|e| match e {
        Error::Io { .. } => e,
        other => Error::Decode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })
}

/// A nonempty vector of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Embedding("empty vector".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Embedding(format!("value {i} is not finite")));
        }
        Ok(EmbeddingVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Parses whitespace-separated decimal floats.
pub fn parse_embedding(text: &str) -> Result<EmbeddingVector> {
    let values = text
        .split_whitespace()
        .enumerate()
        .map(|(i, tok)| {
            tok.parse::<f64>()
                .map_err(|_| Error::Embedding(format!("token {i} ({tok:?}) is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    EmbeddingVector::new(values)
}

pub fn read_embedding(path: &Path) -> Result<EmbeddingVector> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embedding(&text).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TWO: &str = r#"{"id":"s1","audio":"a/1.wav","frames":"f/1","landmarks":"l/1.jsonl","ref_text":"你好"}
{"id":"s2","audio":"a/2.wav","frames":"f/2","landmarks":"l/2.jsonl","ref_text":"早上好","hyp_text":"早上","pred_emb":"e/2.txt"}
"#;

    #[test]
    fn parses_records_in_order() {
        let records = parse_sample_manifest(TWO).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].id, "s1");
        assert_eq!(records[1].id, "s2");
        assert_eq!(records[1].hyp_text.as_deref(), Some("早上"));
        assert_eq!(records[1].pred_emb, Some(PathBuf::from("e/2.txt")));
        assert!(records[0].hyp_text.is_none());
    }

    #[test]
    fn empty_document_is_empty_list() {
        assert!(parse_sample_manifest("").unwrap().is_empty());
        assert!(parse_sample_manifest("\n  \n").unwrap().is_empty());
    }

    #[test]
    fn duplicate_id_is_named() {
        let text = r#"{"id":"s1","audio":"a","frames":"f","landmarks":"l","ref_text":"x"}
{"id":"s1","audio":"b","frames":"g","landmarks":"m","ref_text":"y"}"#;
        let err = parse_sample_manifest(text).unwrap_err();
        assert!(matches!(&err, Error::DuplicateId(id) if id == "s1"));
        assert!(err.to_string().contains("s1"));
    }

    #[test]
    fn missing_field_reports_line() {
        let text = r#"{"id":"s1","audio":"a","frames":"f","landmarks":"l","ref_text":"x"}

{"id":"s2","audio":"a","frames":"f","ref_text":"x"}"#;
        match parse_sample_manifest(text).unwrap_err() {
            Error::ManifestLine { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("landmarks"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn garbage_line_reports_line() {
        let err = parse_sample_manifest("not json").unwrap_err();
        assert!(matches!(err, Error::ManifestLine { line: 1, .. }));
    }

    #[test]
    fn empty_ref_text_rejected() {
        let text = r#"{"id":"s1","audio":"a","frames":"f","landmarks":"l","ref_text":""}"#;
        assert!(matches!(
            parse_sample_manifest(text).unwrap_err(),
            Error::ManifestLine { line: 1, .. }
        ));
    }

    #[test]
    fn unknown_fields_survive_round_trip() {
        let text = r#"{"id":"s1","audio":"a","frames":"f","landmarks":"l","ref_text":"x","speaker":"v3","tags":[1,2]}"#;
        let records = parse_sample_manifest(text).unwrap();
        assert_eq!(records[0].extra["speaker"], Value::from("v3"));
        let again = parse_sample_manifest(&write_sample_manifest(&records).unwrap()).unwrap();
        assert_eq!(again, records);
    }

    fn track_text(frames: &[Option<usize>]) -> String {
        let mut out = String::new();
        for (i, f) in frames.iter().enumerate() {
            match f {
                Some(n) => {
                    let pts: Vec<[f64; 2]> = (0..*n).map(|k| [k as f64, 1.0]).collect();
                    out.push_str(&serde_json::json!({"frame": i, "points": pts}).to_string());
                }
                None => out.push_str(&format!("{{\"frame\": {i}, \"points\": null}}")),
            }
            out.push('\n');
        }
        out
    }

    #[test]
    fn track_all_present() {
        let track = parse_landmark_track(&track_text(&[Some(468); 3])).unwrap();
        assert_eq!(track.frame_count(), 3);
        assert_eq!(track.present_count(), 3);
    }

    #[test]
    fn track_absent_middle_frame() {
        let track = parse_landmark_track(&track_text(&[Some(468), None, Some(468)])).unwrap();
        assert_eq!(track.frame_count(), 3);
        assert!(track.frames()[1].is_none());
        let again = parse_landmark_track(&track.to_text()).unwrap();
        assert_eq!(again, track);
    }

    #[test]
    fn track_wrong_point_count() {
        let err = parse_landmark_track(&track_text(&[Some(467)])).unwrap_err();
        assert!(err.to_string().contains("frame 0: expected 468 points"), "{err}");
    }

    #[test]
    fn track_non_dense_indices() {
        let text = "{\"frame\": 0, \"points\": null}\n{\"frame\": 2, \"points\": null}\n";
        assert!(matches!(
            parse_landmark_track(text).unwrap_err(),
            Error::LandmarkFrame { frame: 2, .. }
        ));
        let text = "{\"frame\": 1, \"points\": null}\n";
        assert!(parse_landmark_track(text).is_err());
    }

    #[test]
    fn track_empty_document() {
        assert!(matches!(parse_landmark_track("").unwrap_err(), Error::EmptyTrack));
    }

    #[test]
    fn embedding_parsing() {
        assert_eq!(parse_embedding("1.0 0.0 0.0").unwrap().len(), 3);
        assert_eq!(parse_embedding(" 1\n2\t3e-1 ").unwrap().values(), &[1.0, 2.0, 0.3]);
        assert!(matches!(parse_embedding("").unwrap_err(), Error::Embedding(m) if m.contains("empty")));
        assert!(matches!(parse_embedding("1.0 nan").unwrap_err(), Error::Embedding(m) if m.contains("finite")));
        assert!(matches!(parse_embedding("1.0 inf").unwrap_err(), Error::Embedding(_)));
        assert!(matches!(parse_embedding("1.0 x").unwrap_err(), Error::Embedding(m) if m.contains("not a number")));
    }

    fn record(id: &str) -> SampleRecord {
        SampleRecord {
            id: id.into(),
            audio: format!("{id}.wav").into(),
            frames: format!("frames/{id}").into(),
            landmarks: format!("{id}.jsonl").into(),
            ref_text: "text".into(),
            hyp_text: None,
            clean_audio: None,
            ref_emb: None,
            pred_emb: None,
            extra: BTreeMap::new(),
        }
    }

    #[test]
    fn partition_manifests_written() {
        let dir = tempfile::tempdir().unwrap();
        let (a, r) =
            write_partition_manifests(&[record("a"), record("b")], &[record("c")], dir.path())
                .unwrap();
        assert_eq!(fs::read_to_string(&a).unwrap().lines().count(), 2);
        assert_eq!(fs::read_to_string(&r).unwrap().lines().count(), 1);
        assert_eq!(read_sample_manifest(&a).unwrap(), vec![record("a"), record("b")]);
    }

    #[test]
    fn partition_manifests_empty() {
        let dir = tempfile::tempdir().unwrap();
        let (a, r) = write_partition_manifests(&[], &[], dir.path()).unwrap();
        assert_eq!(fs::read_to_string(a).unwrap(), "");
        assert_eq!(fs::read_to_string(r).unwrap(), "");
    }

    #[test]
    fn partition_manifests_overlap_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let err = write_partition_manifests(&[record("a")], &[record("a")], &out).unwrap_err();
        assert!(matches!(err, Error::OverlappingIds(id) if id == "a"));
        assert!(!out.exists());
    }

    #[test]
    fn partition_manifests_unwritable() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        assert!(matches!(
            write_partition_manifests(&[record("a")], &[], &blocker.join("sub")).unwrap_err(),
            Error::Io { .. }
        ));
    }

    fn arb_text() -> impl Strategy<Value = String> {
        "[a-z你好\"\\\\ \n]{1,12}"
    }

    fn arb_record() -> impl Strategy<Value = SampleRecord> {
        (
            "[a-z0-9_]{1,8}",
            arb_text(),
            proptest::option::of(arb_text()),
            proptest::option::of("[a-z/]{1,10}"),
            proptest::option::of(any::<i32>()),
        )
            .prop_map(|(id, ref_text, hyp_text, emb, tag)| {
                let mut r = record(&id);
                r.ref_text = ref_text;
                r.hyp_text = hyp_text;
                r.ref_emb = emb.map(PathBuf::from);
                if let Some(tag) = tag {
                    r.extra.insert("tag".into(), Value::from(tag));
                }
                r
            })
    }

    proptest! {
        #[test]
        fn manifest_round_trip(records in proptest::collection::vec(arb_record(), 0..8)) {
            let mut seen = HashSet::new();
            let records: Vec<_> = records.into_iter().filter(|r| seen.insert(r.id.clone())).collect();
            let text = write_sample_manifest(&records).unwrap();
            prop_assert_eq!(parse_sample_manifest(&text).unwrap(), records);
        }
    }
}
