//! Plain-text and binary artifact formats: CSV tables, binary PGM label
//! grids and saved design files.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::MdsResult;
use crate::cmaes::GenerationRecord;
use crate::error::{Error, Result};
use crate::objectives::{LossWeights, TrajectoryMetrics};
use crate::sim::{SimulatorConfig, Trajectory};
use crate::tasks::{EncoderSection, TaskKind};

pub const LOSS_CSV_HEADER: &str = "generation,best_loss,mean_loss,sigma";

pub fn loss_csv(history: &[GenerationRecord]) -> String {
    let mut out = String::with_capacity(32 * (history.len() + 1));
    out.push_str(LOSS_CSV_HEADER);
    out.push('\n');
    for r in history {
        let _ = writeln!(out, "{},{},{},{}", r.generation, r.best_loss, r.mean_loss, r.sigma);
    }
    out
}

pub fn eigenvalue_csv(mds: &MdsResult) -> String {
    let mut out = String::from("index,eigenvalue,cumulative_fraction\n");
    for (i, (v, c)) in mds.eigenvalues.iter().zip(&mds.cumulative).enumerate() {
        let _ = writeln!(out, "{},{},{}", i + 1, v, c);
    }
    out
}

pub fn novelty_csv(novelty: &[f64]) -> String {
    let mut out = String::from("sample_id,novelty\n");
    for (i, v) in novelty.iter().enumerate() {
        let _ = writeln!(out, "{i},{v}");
    }
    out
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("step,time,node_id,x,y\n");
    for s in 0..traj.step_count() {
        for (p, id) in traj.frame(s).chunks_exact(2).zip(&traj.node_ids) {
            let _ = writeln!(out, "{},{},{},{},{}", s, traj.times[s], id, p[0], p[1]);
        }
    }
    out
}

/// 8-bit greyscale image, row-major from the top row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u8,
    pub pixels: Vec<u8>,
}

impl Pgm {
    /// Label grid with `x` fastest and `y` pointing up; the image stores the
    /// top row first.
    pub fn from_label_grid(labels: &[u8], width: usize, height: usize) -> Result<Self> {
        if labels.len() != width * height || width == 0 || height == 0 {
            return Err(Error::InvalidArgument("label grid size mismatch".into()));
        }
        let mut pixels = Vec::with_capacity(labels.len());
        for row in (0..height).rev() {
            pixels.extend_from_slice(&labels[row * width..(row + 1) * width]);
        }
        let maxval = (*pixels.iter().max().unwrap_or(&1)).max(1);
        Ok(Self { width, height, maxval, pixels })
    }

    pub fn to_label_grid(&self) -> Vec<u8> {
        let mut labels = Vec::with_capacity(self.pixels.len());
        for row in (0..self.height).rev() {
            labels.extend_from_slice(&self.pixels[row * self.width..(row + 1) * self.width]);
        }
        labels
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Parses a binary (`P5`) PGM with an 8-bit sample depth.
pub fn parse_pgm(bytes: &[u8]) -> Result<Pgm> {
    let bad = |m: &str| Error::Parse(format!("PGM: {m}"));
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(bad("missing P5 magic"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(bad("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos || pos - start > 9 {
            return Err(bad("malformed header number"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("malformed header number"))?;
    }
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(bad("header must end with one whitespace byte"));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(bad("zero image dimension"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(bad("only 8-bit images are supported"));
    }
    let count = width.checked_mul(height).ok_or_else(|| bad("image too large"))?;
    let pixels = bytes.get(pos..).filter(|rest| rest.len() >= count).ok_or_else(|| bad("truncated pixel data"))?;
    let pixels = pixels[..count].to_vec();
    if pixels.iter().any(|&p| p as usize > maxval) {
        return Err(bad("pixel exceeds maxval"));
    }
    Ok(Pgm { width, height, maxval: maxval as u8, pixels })
}

/// A saved design, self-contained enough to be re-simulated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFile {
    pub task: TaskKind,
    pub encoder: EncoderSection,
    pub simulator: SimulatorConfig,
    #[serde(default)]
    pub loss_weights: LossWeights,
    pub vector: Vec<f64>,
    #[serde(default)]
    pub loss: Option<f64>,
    #[serde(default)]
    pub metrics: Option<TrajectoryMetrics>,
}

impl DesignFile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Parses a design file and checks that the vector fits its encoder.
pub fn parse_design_file(text: &str) -> Result<DesignFile> {
    let file: DesignFile = serde_json::from_str(text)?;
    if file.vector.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse("design vector holds non-finite values".into()));
    }
    file.simulator.validate()?;
    let mesh = std::sync::Arc::new(crate::tasks::task_mesh(file.task));
    let encoder = file.encoder.build(mesh)?;
    if encoder.param_count() != file.vector.len() {
        return Err(Error::Parse(format!(
            "design vector has {} entries, encoder expects {}",
            file.vector.len(),
            encoder.param_count()
        )));
    }
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::EncoderKind;

    #[test]
    fn loss_csv_header_is_exact() {
        let h = [GenerationRecord { generation: 0, best_loss: -1.5, mean_loss: 2.0, sigma: 0.3 }];
        assert_eq!(loss_csv(&h), "generation,best_loss,mean_loss,sigma\n0,-1.5,2,0.3\n");
    }

    #[test]
    fn pgm_round_trip() {
        let labels: Vec<u8> = (0..12).map(|i| (i % 3) as u8).collect();
        let img = Pgm::from_label_grid(&labels, 4, 3).unwrap();
        let bytes = img.to_bytes();
        assert!(bytes.starts_with(b"P5\n4 3\n2\n"));
        let back = parse_pgm(&bytes).unwrap();
        assert_eq!(back, img);
        assert_eq!(back.to_label_grid(), labels);
    }

    #[test]
    fn pgm_parser_accepts_comments_and_rejects_garbage() {
        let ok = b"P5 # comment\n2 1\n# another\n255\n\x01\x02";
        assert_eq!(parse_pgm(ok).unwrap().pixels, vec![1, 2]);
        for bad in [&b"P6\n1 1\n255\n\x00"[..], b"P5\n1 1\n255", b"P5\n0 1\n255\n", b"P5\n2 2\n1\n\x00\x01\x02\x00", b"P5\n1 1\n65535\n\x00\x00", b"P5\n99999999999 1\n255\n"] {
            assert!(parse_pgm(bad).is_err());
        }
    }

    #[test]
    fn design_file_round_trip_and_validation() {
        let file = DesignFile {
            task: TaskKind::Jump,
            encoder: EncoderSection::default_for(TaskKind::Jump, EncoderKind::Basis),
            simulator: SimulatorConfig::jumper_default(),
            loss_weights: LossWeights::default(),
            vector: vec![0.1; 21],
            loss: Some(-1.0),
            metrics: None,
        };
        let text = file.to_json().unwrap();
        assert_eq!(parse_design_file(&text).unwrap(), file);
        let mut short = file.clone();
        short.vector.pop();
        assert!(parse_design_file(&short.to_json().unwrap()).is_err());
        assert!(parse_design_file("{\"task\": \"jump\", \"bogus\": 1}").is_err());
    }

    #[test]
    fn trajectory_csv_rows() {
        let t = Trajectory { times: vec![0.0, 0.5], node_ids: vec![3, 9], positions: vec![0.0, 1.0, 2.0, 3.0, 0.5, 1.0, 2.0, 3.5], locomotion_axis: 0 };
        let csv = trajectory_csv(&t);
        assert_eq!(csv.lines().count(), 5);
        assert_eq!(csv.lines().nth(4).unwrap(), "1,0.5,9,2,3.5");
    }
}
