use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{confusion_counts, ConfusionCounts};
use crate::engine::PipelineStats;
use crate::error::{Error, Result};
use crate::mask::ForegroundMask;
use crate::rgbd::{FrameMasks, Method};

pub const CSV_HEADER: &str = "frame,method,tp,fp,tn,fn,precision,recall,f1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub frame: usize,
    pub counts: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl FrameMetrics {
    pub fn new(frame: usize, counts: ConfusionCounts) -> Self {
        Self {
            frame,
            counts,
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
        }
    }
}

/// Aggregate over the frames past warm-up.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub frames: usize,
    /// Summed counts; precision, recall and f1 are computed from these.
    pub counts: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Mean of the per-frame F1 values.
    pub mean_f1: f64,
    pub min_f1: f64,
}

impl Aggregate {
    pub fn from_series(series: &[FrameMetrics]) -> Self {
        let counts: ConfusionCounts = series.iter().map(|m| m.counts).sum();
        let n = series.len();
        let mean_f1 = if n == 0 {
            0.0
        } else {
            series.iter().map(|m| m.f1).sum::<f64>() / n as f64
        };
        let min_f1 = series.iter().map(|m| m.f1).fold(f64::INFINITY, f64::min);
        Self {
            frames: n,
            counts,
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
            mean_f1,
            min_f1: if n == 0 { 0.0 } else { min_f1 },
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub warmup_frames: usize,
    pub series: BTreeMap<Method, Vec<FrameMetrics>>,
    pub aggregates: BTreeMap<Method, Aggregate>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub throughput: BTreeMap<String, PipelineStats>,
}

impl EvalReport {
    pub fn methods(&self) -> impl Iterator<Item = Method> + '_ {
        self.series.keys().copied()
    }

    pub fn aggregate(&self, method: Method) -> Option<&Aggregate> {
        self.aggregates.get(&method)
    }

    /// Per-frame series of `method` restricted to the frames in `range`.
    pub fn frames_in(&self, method: Method, range: std::ops::Range<usize>) -> Vec<FrameMetrics> {
        self.series
            .get(&method)
            .map(|s| s.iter().filter(|m| range.contains(&m.frame)).copied().collect())
            .unwrap_or_default()
    }

    /// One row per (frame, method), frames ascending.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(usize, Method, &FrameMetrics)> = self
            .series
            .iter()
            .flat_map(|(&method, s)| s.iter().map(move |m| (m.frame, method, m)))
            .collect();
        rows.sort_by_key(|&(frame, method, _)| (frame, method));
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for (frame, method, m) in rows {
            let c = m.counts;
            let _ = writeln!(
                out,
                "{frame},{method},{},{},{},{},{:.6},{:.6},{:.6}",
                c.tp, c.fp, c.tn, c.fn_, m.precision, m.recall, m.f1
            );
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let methods: serde_json::Map<String, serde_json::Value> = self
            .aggregates
            .iter()
            .map(|(m, a)| (m.to_string(), serde_json::to_value(a).expect("aggregate serializes")))
            .collect();
        let fps: serde_json::Map<String, serde_json::Value> = self
            .throughput
            .iter()
            .map(|(k, s)| (k.clone(), serde_json::to_value(s).expect("stats serialize")))
            .collect();
        serde_json::json!({
            "warmup_frames": self.warmup_frames,
            "methods": methods,
            "throughput": fps,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn write_summary(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.summary_json()).expect("summary serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Builds an [`EvalReport`] one frame at a time.
#[derive(Clone, Debug, Default)]
pub struct EvalAccumulator {
    warmup_frames: usize,
    series: BTreeMap<Method, Vec<FrameMetrics>>,
}

impl EvalAccumulator {
    pub fn new(warmup_frames: usize) -> Self {
        Self {
            warmup_frames,
            series: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, frame: usize, method: Method, pred: &ForegroundMask, gt: &ForegroundMask) -> Result<()> {
        let counts = confusion_counts(pred, gt).map_err(|e| Error::Frame {
            index: frame,
            path: Default::default(),
            reason: format!("{method}: {e}"),
        })?;
        let s = self.series.entry(method).or_default();
        if let Some(last) = s.last() {
            if frame <= last.frame {
                return Err(Error::Misaligned(format!(
                    "{method}: frame {frame} arrived after frame {}",
                    last.frame
                )));
            }
        }
        s.push(FrameMetrics::new(frame, counts));
        Ok(())
    }

    /// Scores every mask in `masks` against `gt`.
    pub fn push_masks(&mut self, masks: &FrameMasks, gt: &ForegroundMask) -> Result<()> {
        for (method, mask) in masks.iter() {
            self.push(masks.index, method, mask, gt)?;
        }
        Ok(())
    }

    pub fn finish(self) -> Result<EvalReport> {
        let mut frames = self.series.values().map(|s| s.iter().map(|m| m.frame).collect::<Vec<_>>());
        if let Some(first) = frames.next() {
            if let Some(other) = frames.find(|f| *f != first) {
                return Err(Error::Misaligned(format!(
                    "methods cover different frames ({} vs {})",
                    first.len(),
                    other.len()
                )));
            }
        }
        let warmup = self.warmup_frames;
        let aggregates = self
            .series
            .iter()
            .map(|(&m, s)| {
                let kept: Vec<_> = s.iter().filter(|f| f.frame >= warmup).copied().collect();
                (m, Aggregate::from_series(&kept))
            })
            .collect();
        Ok(EvalReport {
            warmup_frames: warmup,
            series: self.series,
            aggregates,
            throughput: BTreeMap::new(),
        })
    }
}

/// Scores aligned prediction streams against a ground-truth stream. Frame
/// `i` of every stream is frame index `i`.
pub fn evaluate_sequence(
    predictions: &BTreeMap<Method, Vec<ForegroundMask>>,
    ground_truth: &[ForegroundMask],
    warmup_frames: usize,
) -> Result<EvalReport> {
    let mut acc = EvalAccumulator::new(warmup_frames);
    for (&method, preds) in predictions {
        if preds.len() != ground_truth.len() {
            return Err(Error::Misaligned(format!(
                "{method} has {} frames, ground truth has {}",
                preds.len(),
                ground_truth.len()
            )));
        }
        for (i, (p, g)) in preds.iter().zip(ground_truth).enumerate() {
            acc.push(i, method, p, g)?;
        }
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(bits: &[u8]) -> ForegroundMask {
        ForegroundMask::from_bits(bits.len(), 1, bits.to_vec()).unwrap()
    }

    #[test]
    fn perfect_predictions() {
        let gt = vec![mask(&[1, 0, 1]), mask(&[0, 1, 1])];
        let preds = BTreeMap::from([(Method::Depth, gt.clone())]);
        let r = evaluate_sequence(&preds, &gt, 0).unwrap();
        assert!(r.series[&Method::Depth].iter().all(|m| m.f1 == 1.0));
        assert_eq!(r.methods().collect::<Vec<_>>(), vec![Method::Depth]);
    }

    #[test]
    fn warmup_is_excluded_from_aggregates() {
        let gt = vec![mask(&[1, 0]), mask(&[1, 0]), mask(&[1, 0])];
        let preds = BTreeMap::from([(Method::Rgb, vec![mask(&[0, 1]), mask(&[1, 0]), mask(&[1, 0])])]);
        let r = evaluate_sequence(&preds, &gt, 1).unwrap();
        assert_eq!(r.series[&Method::Rgb].len(), 3);
        let a = r.aggregate(Method::Rgb).unwrap();
        assert_eq!(a.frames, 2);
        assert_eq!(a.f1, 1.0);
    }

    #[test]
    fn misaligned_streams() {
        let gt = vec![mask(&[1]), mask(&[1])];
        let preds = BTreeMap::from([(Method::Rgb, vec![mask(&[1])])]);
        assert!(matches!(evaluate_sequence(&preds, &gt, 0), Err(Error::Misaligned(_))));

        let mut acc = EvalAccumulator::new(0);
        acc.push(0, Method::Rgb, &mask(&[1]), &mask(&[1])).unwrap();
        acc.push(1, Method::Rgb, &mask(&[1]), &mask(&[1])).unwrap();
        acc.push(0, Method::Depth, &mask(&[1]), &mask(&[1])).unwrap();
        assert!(acc.clone().finish().is_err());
        assert!(acc.push(1, Method::Rgb, &mask(&[1]), &mask(&[1])).is_err());
    }

    #[test]
    fn csv_layout() {
        let gt = vec![mask(&[1, 1, 0, 0])];
        let preds = BTreeMap::from([
            (Method::Rgb, vec![mask(&[1, 0, 1, 0])]),
            (Method::Fused, vec![mask(&[1, 1, 0, 0])]),
        ]);
        let csv = evaluate_sequence(&preds, &gt, 0).unwrap().to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "0,rgb,1,1,1,1,0.500000,0.500000,0.500000");
        assert_eq!(lines[2], "0,fused,2,0,2,0,1.000000,1.000000,1.000000");
    }
}
