//! Recording ingestion, the canonical CSV layout, normalization and
//! rolling-origin splits.
//!
//! CSV layout (header required, comma separated, UTF-8):
//!
//! ```text
//! subject_id,label,seq,ax,ay,az
//! s01,jumping,0,0.12,9.71,-0.40
//! ```
//!
//! `seq` is the 0-based sample index inside the `(subject_id, label)` group and
//! must be contiguous. Rows of different groups may interleave.

use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::activity::Activity;
use crate::error::{Error, Result};
use crate::series::TimeSeries;

pub const CSV_HEADER: [&str; 6] = ["subject_id", "label", "seq", "ax", "ay", "az"];
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 50.0;

/// One triaxial accelerometer recording of a single subject and activity.
///
/// Samples are stored as `f32`, which is the precision the text format
/// round-trips exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub subject_id: String,
    pub label: Activity,
    pub sample_rate_hz: f64,
    pub ax: Vec<f32>,
    pub ay: Vec<f32>,
    pub az: Vec<f32>,
}

impl Recording {
    pub fn new(
        subject_id: impl Into<String>,
        label: Activity,
        sample_rate_hz: f64,
        ax: Vec<f32>,
        ay: Vec<f32>,
        az: Vec<f32>,
    ) -> Result<Self> {
        let rec = Recording {
            subject_id: subject_id.into(),
            label,
            sample_rate_hz,
            ax,
            ay,
            az,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if self.ax.len() != self.ay.len() || self.ax.len() != self.az.len() {
            return Err(Error::LengthMismatch(format!(
                "axis lengths {}, {}, {}",
                self.ax.len(),
                self.ay.len(),
                self.az.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ax.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ax.is_empty()
    }

    pub fn axis(&self, axis: usize) -> &[f32] {
        match axis {
            0 => &self.ax,
            1 => &self.ay,
            2 => &self.az,
            _ => panic!("axis index {axis} out of range"),
        }
    }

    /// Axis `axis` over `range` as a series indexed by sample number.
    pub fn axis_series(&self, axis: usize, range: Range<usize>) -> Result<TimeSeries> {
        if range.end > self.len() || range.start > range.end {
            return Err(Error::InsufficientData {
                needed: range.end,
                available: self.len(),
            });
        }
        let data = self.axis(axis);
        let t = range.clone().map(|i| i as f64).collect();
        let y = data[range].iter().map(|&v| v as f64).collect();
        TimeSeries::new(t, y)
    }

    pub fn axes(&self, range: Range<usize>) -> Result<[TimeSeries; 3]> {
        Ok([
            self.axis_series(0, range.clone())?,
            self.axis_series(1, range.clone())?,
            self.axis_series(2, range)?,
        ])
    }

    /// Wall-clock seconds of sample `index`.
    pub fn seconds(&self, index: usize) -> f64 {
        index as f64 / self.sample_rate_hz
    }
}

pub fn load_csv_path(path: impl AsRef<Path>) -> Result<Vec<Recording>> {
    let file = std::fs::File::open(path)?;
    load_csv(file)
}

/// Parse recordings, grouped by `(subject_id, label)` in order of first appearance.
pub fn load_csv<R: Read>(reader: R) -> Result<Vec<Recording>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing header".into(),
            })
        }
        Some(r) => r.map_err(|e| csv_error(e, 1))?,
    };
    let got: Vec<&str> = header.iter().map(|h| h.trim()).collect();
    if got != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}, got {}", CSV_HEADER.join(","), got.join(",")),
        });
    }

    let mut out: Vec<Recording> = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_error(e, 0))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, got {}", CSV_HEADER.len(), rec.len()),
            });
        }
        let subject = rec[0].trim();
        let label: Activity = rec[1].trim().parse().map_err(|_| Error::Parse {
            line,
            message: format!("unknown label {:?}", &rec[1]),
        })?;
        let seq: usize = rec[2].trim().parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid seq {:?}", &rec[2]),
        })?;
        let mut xyz = [0f32; 3];
        for (k, v) in xyz.iter_mut().enumerate() {
            let field = rec[3 + k].trim();
            *v = match field.parse::<f32>() {
                Ok(v) if v.is_finite() => v,
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: format!("invalid {} value {field:?}", CSV_HEADER[3 + k]),
                    })
                }
            };
        }

        let idx = match out.iter().position(|r| r.subject_id == subject && r.label == label) {
            Some(i) => i,
            None => {
                out.push(Recording {
                    subject_id: subject.to_string(),
                    label,
                    sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
                    ax: Vec::new(),
                    ay: Vec::new(),
                    az: Vec::new(),
                });
                out.len() - 1
            }
        };
        let r = &mut out[idx];
        if seq != r.len() {
            return Err(Error::Parse {
                line,
                message: format!("seq {seq} out of order, expected {}", r.len()),
            });
        }
        r.ax.push(xyz[0]);
        r.ay.push(xyz[1]);
        r.az.push(xyz[2]);
    }
    Ok(out)
}

fn csv_error(e: csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(fallback_line);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

pub fn write_csv_path(path: impl AsRef<Path>, recordings: &[Recording]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_csv(&mut w, recordings)?;
    w.flush()?;
    Ok(())
}

/// Write recordings in the canonical layout. Values use 9 significant digits.
pub fn write_csv<W: Write>(mut w: W, recordings: &[Recording]) -> Result<()> {
    writeln!(w, "{}", CSV_HEADER.join(","))?;
    for r in recordings {
        r.validate()?;
        if r.subject_id.contains([',', '"', '\n', '\r']) {
            return Err(Error::InvalidArgument(format!(
                "subject id {:?} cannot be written unquoted",
                r.subject_id
            )));
        }
        for i in 0..r.len() {
            writeln!(
                w,
                "{},{},{},{:.8e},{:.8e},{:.8e}",
                r.subject_id, r.label, i, r.ax[i], r.ay[i], r.az[i]
            )?;
        }
    }
    Ok(())
}

/// Training range followed by contiguous forecast blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvSplit {
    pub train: Range<usize>,
    pub blocks: Vec<Range<usize>>,
}

impl CvSplit {
    /// End of the last block.
    pub fn end(&self) -> usize {
        self.blocks.last().map_or(self.train.end, |b| b.end)
    }
}

pub fn make_cv_splits(
    rec: &Recording,
    train_len: usize,
    block: usize,
    n_blocks: usize,
) -> Result<CvSplit> {
    if train_len == 0 || block == 0 || n_blocks == 0 {
        return Err(Error::InvalidArgument(
            "train length, block size and block count must be positive".into(),
        ));
    }
    let needed = train_len + block * n_blocks;
    if rec.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            available: rec.len(),
        });
    }
    let blocks = (0..n_blocks)
        .map(|j| train_len + j * block..train_len + (j + 1) * block)
        .collect();
    Ok(CvSplit {
        train: 0..train_len,
        blocks,
    })
}

/// Start offsets of sliding windows of `window` samples every `stride` samples.
pub fn sliding_windows(len: usize, window: usize, stride: usize) -> Vec<Range<usize>> {
    if window == 0 || stride == 0 || len < window {
        return Vec::new();
    }
    (0..=len - window)
        .step_by(stride)
        .map(|s| s..s + window)
        .collect()
}

/// Per-axis z-score transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZScore {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl ZScore {
    /// Statistics over `range`. Axes with (near) zero spread get unit scale.
    pub fn fit(rec: &Recording, range: Range<usize>) -> Result<Self> {
        if range.is_empty() || range.end > rec.len() {
            return Err(Error::InsufficientData {
                needed: range.end.max(1),
                available: rec.len(),
            });
        }
        let mut mean = [0.0; 3];
        let mut std = [1.0; 3];
        for a in 0..3 {
            let v = &rec.axis(a)[range.clone()];
            let n = v.len() as f64;
            let m = v.iter().map(|&x| x as f64).sum::<f64>() / n;
            let var = v.iter().map(|&x| (x as f64 - m).powi(2)).sum::<f64>() / n;
            mean[a] = m;
            let s = var.sqrt();
            std[a] = if s > 1e-9 * m.abs().max(1.0) { s } else { 1.0 };
        }
        Ok(ZScore { mean, std })
    }

    pub fn apply(&self, axis: usize, v: f64) -> f64 {
        (v - self.mean[axis]) / self.std[axis]
    }

    pub fn invert(&self, axis: usize, z: f64) -> f64 {
        z * self.std[axis] + self.mean[axis]
    }

    pub fn apply_series(&self, axis: usize, ts: &TimeSeries) -> Result<TimeSeries> {
        ts.map_values(|v| self.apply(axis, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "subject_id,label,seq,ax,ay,az\n";

    fn rec(n: usize) -> Recording {
        let v: Vec<f32> = (0..n).map(|i| i as f32 * 0.5).collect();
        Recording::new("s1", Activity::Jumping, 50.0, v.clone(), v.clone(), v).unwrap()
    }

    #[test]
    fn header_only_is_empty() {
        assert!(load_csv(HEADER.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn three_rows_one_recording() {
        let text = format!("{HEADER}a,walking,0,1,2,3\na,walking,1,4,5,6\na,walking,2,7,8,9\n");
        let recs = load_csv(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].len(), 3);
        assert_eq!(recs[0].label, Activity::Walking);
        assert_eq!(recs[0].az, vec![3.0, 6.0, 9.0]);
        assert_eq!(recs[0].sample_rate_hz, 50.0);
    }

    #[test]
    fn groups_interleaved_rows() {
        let text = format!(
            "{HEADER}a,walking,0,1,1,1\nb,walking,0,2,2,2\na,running,0,3,3,3\na,walking,1,4,4,4\n"
        );
        let recs = load_csv(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].ax, vec![1.0, 4.0]);
        assert_eq!(recs[1].subject_id, "b");
        assert_eq!(recs[2].label, Activity::Running);
    }

    fn parse_err_line(text: &str) -> u64 {
        match load_csv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn nan_token_names_line() {
        let text = format!("{HEADER}a,walking,0,1,2,3\na,walking,1,NaN,5,6\n");
        assert_eq!(parse_err_line(&text), 3);
    }

    #[test]
    fn ragged_and_bad_fields() {
        assert_eq!(parse_err_line(&format!("{HEADER}a,walking,0,1,2\n")), 2);
        assert_eq!(parse_err_line(&format!("{HEADER}a,walking,0,1,2,x\n")), 2);
        assert_eq!(parse_err_line(&format!("{HEADER}a,falling,0,1,2,3\n")), 2);
        assert_eq!(parse_err_line(&format!("{HEADER}a,walking,1,1,2,3\n")), 2);
        assert_eq!(parse_err_line(&format!("{HEADER}a,walking,0,inf,2,3\n")), 2);
        assert_eq!(parse_err_line("t,label,seq,ax,ay,az\n"), 1);
        assert_eq!(parse_err_line(""), 1);
    }

    #[test]
    fn default_splits() {
        let s = make_cv_splits(&rec(1000), 500, 100, 5).unwrap();
        assert_eq!(s.train, 0..500);
        assert_eq!(s.blocks, vec![500..600, 600..700, 700..800, 800..900, 900..1000]);
    }

    #[test]
    fn smallest_split() {
        let s = make_cv_splits(&rec(6), 4, 2, 1).unwrap();
        assert_eq!(s.train, 0..4);
        assert_eq!(s.blocks, vec![4..6]);
    }

    #[test]
    fn short_recording_fails() {
        assert!(matches!(
            make_cv_splits(&rec(999), 500, 100, 5),
            Err(Error::InsufficientData { needed: 1000, available: 999 })
        ));
    }

    #[test]
    fn zscore_uses_training_range() {
        let r = rec(10);
        let z = ZScore::fit(&r, 0..4).unwrap();
        assert!((z.mean[0] - 0.75).abs() < 1e-12);
        assert!((z.apply(0, 0.75)).abs() < 1e-12);
        assert!((z.invert(0, z.apply(0, 3.0)) - 3.0).abs() < 1e-12);
        let flat = Recording::new("s", Activity::Walking, 50.0, vec![2.0; 5], vec![2.0; 5], vec![2.0; 5])
            .unwrap();
        assert_eq!(ZScore::fit(&flat, 0..5).unwrap().std, [1.0; 3]);
    }

    #[test]
    fn windows_cover_prefix() {
        assert_eq!(sliding_windows(10, 4, 3), vec![0..4, 3..7, 6..10]);
        assert!(sliding_windows(3, 4, 1).is_empty());
    }

    proptest! {
        #[test]
        fn csv_round_trip(
            xs in prop::collection::vec((any::<f32>(), any::<f32>(), any::<f32>()), 0..40),
            label in 0usize..6,
        ) {
            let xs: Vec<_> = xs.into_iter().filter(|(a, b, c)| a.is_finite() && b.is_finite() && c.is_finite()).collect();
            let r = Recording::new(
                "subj-1",
                Activity::ALL[label],
                50.0,
                xs.iter().map(|p| p.0).collect(),
                xs.iter().map(|p| p.1).collect(),
                xs.iter().map(|p| p.2).collect(),
            ).unwrap();
            let mut buf = Vec::new();
            write_csv(&mut buf, std::slice::from_ref(&r)).unwrap();
            let back = load_csv(buf.as_slice()).unwrap();
            if r.is_empty() {
                prop_assert!(back.is_empty());
            } else {
                prop_assert_eq!(back.len(), 1);
                for a in 0..3 {
                    let bits: Vec<u32> = r.axis(a).iter().map(|v| v.to_bits()).collect();
                    let back_bits: Vec<u32> = back[0].axis(a).iter().map(|v| v.to_bits()).collect();
                    prop_assert_eq!(bits, back_bits);
                }
            }
        }

        #[test]
        fn splits_tile(train in 1usize..50, block in 1usize..20, n in 1usize..6, extra in 0usize..10) {
            let r = rec(train + block * n + extra);
            let s = make_cv_splits(&r, train, block, n).unwrap();
            let mut cursor = s.train.end;
            prop_assert_eq!(s.train.start, 0);
            for b in &s.blocks {
                prop_assert_eq!(b.start, cursor);
                prop_assert_eq!(b.len(), block);
                cursor = b.end;
            }
            prop_assert_eq!(cursor, train + block * n);
        }
    }
}
