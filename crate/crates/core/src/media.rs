//! WAV audio and PGM frame I/O.

use std::fs;
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageFormat};

use crate::error::{Error, Result};

/// Mono waveform with samples scaled to [-1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub sample_rate: u32,
    pub samples: Vec<f64>,
}

/// Reads a 16-bit PCM mono WAV file.
pub fn read_wav(path: &Path) -> Result<Waveform> {
    let decode = |message: String| Error::Decode {
        path: path.to_path_buf(),
        message,
    };
    let reader = hound::WavReader::open(path).map_err(|e| decode(e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(decode(format!("expected mono, got {} channels", spec.channels)));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(decode(format!(
            "expected 16-bit PCM, got {} bits {:?}",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| decode(e.to_string()))?;
    Ok(Waveform {
        sample_rate: spec.sample_rate,
        samples,
    })
}

/// Writes raw 16-bit samples as a mono PCM WAV file.
pub fn write_wav(path: &Path, sample_rate: u32, samples: &[i16]) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let encode = |e: hound::Error| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(encode)?;
    for &s in samples {
        writer.write_sample(s).map_err(encode)?;
    }
    writer.finalize().map_err(encode)
}

/// An 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayFrame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::LengthMismatch {
                what: "pixel buffer vs width*height",
                left: pixels.len(),
                right: width * height,
            });
        }
        Ok(GrayFrame {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, level: u8) -> Self {
        GrayFrame {
            width,
            height,
            pixels: vec![level; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        GrayFrame {
            width,
            height,
            pixels,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

pub fn read_pgm(path: &Path) -> Result<GrayFrame> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory_with_format(&bytes, ImageFormat::Pnm)
        .map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .into_luma8();
    let (w, h) = img.dimensions();
    GrayFrame::new(w as usize, h as usize, img.into_raw())
}

/// Writes a binary (P5) PGM.
pub fn write_pgm(path: &Path, frame: &GrayFrame) -> Result<()> {
    let mut buf = Vec::new();
    PnmEncoder::new(&mut buf)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(
            &frame.pixels,
            frame.width as u32,
            frame.height as u32,
            ExtendedColorType::L8,
        )
        .map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn frame_file_name(prefix: &str, index: usize) -> String {
    format!("{prefix}_{index:06}.pgm")
}

/// Reads `frame_000000.pgm`, `frame_000001.pgm`, ... until the first gap.
///
/// Any other `frame_*.pgm` file left over after the gap is an error, since
/// the sequence must be contiguous from zero.
pub fn read_frame_dir(dir: &Path) -> Result<Vec<GrayFrame>> {
    read_numbered_frames(dir, "frame")
}

pub fn read_numbered_frames(dir: &Path, prefix: &str) -> Result<Vec<GrayFrame>> {
    let listed = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok())
        .filter(|entry| {
            let name = entry.file_name();
            let name = name.to_string_lossy();
            name.starts_with(&format!("{prefix}_")) && name.ends_with(".pgm")
        })
        .count();
    let mut frames = Vec::with_capacity(listed);
    loop {
        let path: PathBuf = dir.join(frame_file_name(prefix, frames.len()));
        if !path.exists() {
            break;
        }
        frames.push(read_pgm(&path)?);
    }
    if frames.len() != listed {
        return Err(Error::Frames(format!(
            "{}: {prefix}_*.pgm files are not contiguous from 0 ({} found, {} in sequence)",
            dir.display(),
            listed,
            frames.len()
        )));
    }
    Ok(frames)
}

pub fn write_numbered_frames(dir: &Path, prefix: &str, frames: &[GrayFrame]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, frame) in frames.iter().enumerate() {
        write_pgm(&dir.join(frame_file_name(prefix, i)), frame)?;
    }
    Ok(())
}
