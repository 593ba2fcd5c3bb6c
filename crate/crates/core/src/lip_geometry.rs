//! Lip landmark selection and stabilized crop planning.
//!
//! For each frame with landmarks, the lip subset gives a bounding box and a
//! centroid. One crop size is chosen per video from the mean box size, and
//! each frame is cropped around its centroid. Frames without landmarks get a
//! centroid interpolated from their neighbours.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::{LandmarkTrack, Point, FACE_MESH_POINTS};
use crate::media::GrayFrame;

pub const DEFAULT_GAMMA: f64 = 1.2;

const DEFAULT_LIPS_JSON: &str = include_str!("../config/face_mesh_lips.json");

/// Strictly increasing face-mesh indices that make up the lip region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LipIndexSet(Vec<usize>);

#[derive(Deserialize)]
#[serde(untagged)]
enum LipIndexFile {
    Bare(Vec<usize>),
    Wrapped { indices: Vec<usize> },
}

impl LipIndexSet {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::LipIndices("empty".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::LipIndices("indices must be strictly increasing".into()));
        }
        if let Some(&last) = indices.last() {
            if last >= FACE_MESH_POINTS {
                return Err(Error::LipIndices(format!(
                    "index {last} outside 0..{FACE_MESH_POINTS}"
                )));
            }
        }
        Ok(LipIndexSet(indices))
    }

    /// The 40-point outer plus inner lip contour of the 468-point face mesh.
    pub fn face_mesh_default() -> Self {
        Self::from_json(DEFAULT_LIPS_JSON).expect("bundled lip index set is valid")
    }

    /// Accepts either a bare JSON array or an object with an `indices` array.
    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: LipIndexFile = serde_json::from_str(text)?;
        let indices = match parsed {
            LipIndexFile::Bare(v) | LipIndexFile::Wrapped { indices: v } => v,
        };
        Self::new(indices)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The lip landmarks of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LipPoints(Vec<Point>);

impl LipPoints {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::LipPoints("no points".into()));
        }
        if let Some(p) = points
            .iter()
            .find(|p| !(p.x.is_finite() && p.y.is_finite() && p.x >= 0.0 && p.y >= 0.0))
        {
            return Err(Error::LipPoints(format!(
                "coordinates must be finite and non-negative, got ({}, {})",
                p.x, p.y
            )));
        }
        Ok(LipPoints(points))
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }
}

pub fn select_lip_points(frame_points: &[Point], lips: &LipIndexSet) -> Result<LipPoints> {
    if frame_points.len() != FACE_MESH_POINTS {
        return Err(Error::LengthMismatch {
            what: "landmark frame vs face-mesh size",
            left: frame_points.len(),
            right: FACE_MESH_POINTS,
        });
    }
    LipPoints::new(lips.indices().iter().map(|&i| frame_points[i]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BoundingBox {
    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }
}

pub fn bounding_box(lip: &LipPoints) -> BoundingBox {
    let first = lip.0[0];
    lip.0.iter().skip(1).fold(
        BoundingBox {
            min_x: first.x,
            min_y: first.y,
            max_x: first.x,
            max_y: first.y,
        },
        |b, p| BoundingBox {
            min_x: b.min_x.min(p.x),
            min_y: b.min_y.min(p.y),
            max_x: b.max_x.max(p.x),
            max_y: b.max_y.max(p.y),
        },
    )
}

/// Smallest even integer `>= gamma * max(mean_width, mean_height)`, at least 2.
pub fn crop_size(mean_width: f64, mean_height: f64, gamma: f64) -> Result<u32> {
    if !(mean_width.is_finite() && mean_height.is_finite()) || mean_width < 0.0 || mean_height < 0.0
    {
        return Err(Error::DegenerateGeometry(format!(
            "mean box size must be finite and non-negative, got {mean_width} x {mean_height}"
        )));
    }
    if mean_width == 0.0 && mean_height == 0.0 {
        return Err(Error::DegenerateGeometry("lip box has zero extent".into()));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::DegenerateGeometry(format!("gamma must be positive, got {gamma}")));
    }
    let span = gamma * mean_width.max(mean_height);
    let size = 2.0 * (span / 2.0).ceil();
    if size > f64::from(u32::MAX) {
        return Err(Error::DegenerateGeometry(format!("crop size {size} too large")));
    }
    Ok((size as u32).max(2))
}

pub fn centroid(lip: &LipPoints) -> Point {
    let n = lip.0.len() as f64;
    let (sx, sy) = lip.0.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Point::new(sx / n, sy / n)
}

/// Fills missing centroids.
///
/// Interior gaps are linearly interpolated between the nearest present
/// neighbours. Leading and trailing gaps hold the nearest present value.
pub fn interpolate_centroids(partial: &[Option<Point>]) -> Result<Vec<Point>> {
    let present: Vec<(usize, Point)> = partial
        .iter()
        .enumerate()
        .filter_map(|(t, p)| p.map(|p| (t, p)))
        .collect();
    let (&(first_t, first), &(last_t, last)) = match (present.first(), present.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::AllMissing),
    };

    let mut out = vec![Point::default(); partial.len()];
    out[..=first_t].fill(first);
    out[last_t..].fill(last);
    for pair in present.windows(2) {
        let (t0, p0) = pair[0];
        let (t1, p1) = pair[1];
        out[t0] = p0;
        let span = (t1 - t0) as f64;
        for (t, slot) in out.iter_mut().enumerate().take(t1).skip(t0 + 1) {
            let s = (t - t0) as f64 / span;
            *slot = Point::new(p0.x + (p1.x - p0.x) * s, p0.y + (p1.y - p0.y) * s);
        }
    }
    Ok(out)
}

/// Crop size and per-frame (real-valued) crop centers for one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropPlan {
    pub size: u32,
    pub centers: Vec<Point>,
}

impl CropPlan {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("crop plan serializes")
    }
}

pub fn plan_crops(track: &LandmarkTrack, lips: &LipIndexSet, gamma: f64) -> Result<CropPlan> {
    let mut partial = Vec::with_capacity(track.frame_count());
    let (mut sum_w, mut sum_h, mut present) = (0.0, 0.0, 0usize);
    for (t, frame) in track.frames().iter().enumerate() {
        match frame {
            Some(points) => {
                let lip = select_lip_points(points, lips).map_err(|e| Error::LandmarkFrame {
                    frame: t,
                    message: e.to_string(),
                })?;
                let b = bounding_box(&lip);
                sum_w += b.width();
                sum_h += b.height();
                present += 1;
                partial.push(Some(centroid(&lip)));
            }
            None => partial.push(None),
        }
    }
    if present == 0 {
        return Err(Error::AllMissing);
    }
    let n = present as f64;
    let size = crop_size(sum_w / n, sum_h / n, gamma)?;
    let centers = interpolate_centroids(&partial)?;
    Ok(CropPlan { size, centers })
}

/// Cuts an `S x S` window around each (rounded) center; pixels that fall
/// outside the source frame are zero.
pub fn apply_crops(frames: &[GrayFrame], plan: &CropPlan) -> Result<Vec<GrayFrame>> {
    if frames.len() != plan.centers.len() {
        return Err(Error::LengthMismatch {
            what: "frames vs crop centers",
            left: frames.len(),
            right: plan.centers.len(),
        });
    }
    let size = plan.size as usize;
    let half = i64::from(plan.size / 2);
    Ok(frames
        .iter()
        .zip(&plan.centers)
        .map(|(frame, center)| {
            let x0 = center.x.round() as i64 - half;
            let y0 = center.y.round() as i64 - half;
            let mut pixels = vec![0u8; size * size];
            for (dy, row) in pixels.chunks_exact_mut(size).enumerate() {
                let sy = y0 + dy as i64;
                if sy < 0 || sy >= frame.height as i64 {
                    continue;
                }
                let src_row = &frame.pixels[sy as usize * frame.width..][..frame.width];
                // Clip the window's column range to the source row.
                let lo = (-x0).clamp(0, size as i64) as usize;
                let hi = (frame.width as i64 - x0).clamp(0, size as i64) as usize;
                if lo < hi {
                    let src_lo = (x0 + lo as i64) as usize;
                    row[lo..hi].copy_from_slice(&src_row[src_lo..src_lo + (hi - lo)]);
                }
            }
            GrayFrame {
                width: size,
                height: size,
                pixels,
            }
        })
        .collect())
}
