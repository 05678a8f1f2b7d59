//! Gaze recordings and the stimulus they were recorded over.

use std::collections::BTreeMap;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazePoint {
    pub x: f64,
    pub y: f64,
    /// Sample index at the recorder's (uniform) rate.
    pub t: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPath {
    pub participant: String,
    pub points: Vec<GazePoint>,
}

impl ScanPath {
    pub fn new(participant: impl Into<String>, points: Vec<GazePoint>) -> Self {
        ScanPath {
            participant: participant.into(),
            points,
        }
    }

    /// Builds a path from coordinates, numbering samples 0, 1, 2, ...
    pub fn from_xy(participant: impl Into<String>, xy: &[(f64, f64)]) -> Self {
        let points = xy
            .iter()
            .enumerate()
            .map(|(t, &(x, y))| GazePoint { x, y, t: t as u64 })
            .collect();
        ScanPath::new(participant, points)
    }

    /// Clamps every sample into `[0, width) × [0, height)`.
    pub fn clamp_to(&mut self, width: u32, height: u32) {
        let max_x = (width as f64).next_down();
        let max_y = (height as f64).next_down();
        for p in &mut self.points {
            p.x = p.x.clamp(0.0, max_x);
            p.y = p.y.clamp(0.0, max_y);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stimulus {
    pub width: u32,
    pub height: u32,
    pub image: RgbImage,
}

impl Stimulus {
    pub fn from_image(image: RgbImage) -> Result<Self> {
        let (width, height) = image.dimensions();
        if width == 0 || height == 0 {
            return Err(Error::Image("stimulus must be non-empty".into()));
        }
        Ok(Stimulus {
            width,
            height,
            image,
        })
    }

    /// Decodes PNG or JPEG bytes.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory(bytes)?;
        Stimulus::from_image(img.to_rgb8())
    }

    pub fn encode_png(&self) -> Vec<u8> {
        let mut out = std::io::Cursor::new(Vec::new());
        self.image
            .write_to(&mut out, image::ImageFormat::Png)
            .expect("png encoding into memory");
        out.into_inner()
    }
}

const HEADER: [&str; 4] = ["participant", "t", "x", "y"];

/// Parses the `participant,t,x,y` gaze file into one path per participant,
/// ordered by participant id. Sample indices must strictly increase within
/// a participant.
pub fn parse_gaze_csv(bytes: &[u8]) -> Result<Vec<ScanPath>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader.headers().map_err(|e| Error::Csv {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Csv {
            line: 1,
            message: format!("expected header {}", HEADER.join(",")),
        });
    }
    let mut paths: BTreeMap<String, Vec<GazePoint>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::Csv { line, message };
        let participant = record[0].to_string();
        if participant.is_empty() {
            return Err(bad("empty participant".into()));
        }
        let t: u64 = record[1]
            .parse()
            .map_err(|_| bad(format!("t is not a sample index: {:?}", &record[1])))?;
        let coord = |i: usize, name: &str| -> Result<f64> {
            match record[i].parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(bad(format!(
                    "{name} is not a finite number: {:?}",
                    &record[i]
                ))),
            }
        };
        let (x, y) = (coord(2, "x")?, coord(3, "y")?);
        let points = paths.entry(participant).or_default();
        if let Some(prev) = points.last() {
            if t <= prev.t {
                return Err(bad(format!(
                    "t must increase per participant ({} after {})",
                    t, prev.t
                )));
            }
        }
        points.push(GazePoint { x, y, t });
    }
    Ok(paths
        .into_iter()
        .map(|(p, points)| ScanPath::new(p, points))
        .collect())
}

pub fn write_gaze_csv(paths: &[ScanPath]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(HEADER).expect("in-memory write");
    for path in paths {
        for p in &path.points {
            writer
                .write_record([
                    path.participant.clone(),
                    p.t.to_string(),
                    p.x.to_string(),
                    p.y.to_string(),
                ])
                .expect("in-memory write");
        }
    }
    String::from_utf8(writer.into_inner().expect("flush")).expect("utf8 csv")
}
