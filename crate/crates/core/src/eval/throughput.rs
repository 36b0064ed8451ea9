use std::collections::BTreeSet;
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::dataset::{encode_mask_png, RawFrame, SequenceReader};
use crate::engine::{run_pipeline, run_sequential, PipelineStats, WorkerPool};
use crate::error::{Error, Result};
use crate::mask::ForegroundMask;
use crate::rgbd::{AosSegmenter, FrameMasks, Method, RgbdSegmenter, StreamGeometry};

/// Engine configurations compared by the benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    /// Sequential, array-of-structures models, no pipelining.
    Baseline,
    /// Parallel structure-of-arrays kernels.
    Opt1,
    /// Opt1 inside the three-stage pipeline.
    Opt2,
}

impl EngineKind {
    pub const ALL: [EngineKind; 3] = [EngineKind::Baseline, EngineKind::Opt1, EngineKind::Opt2];

    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Baseline => "baseline",
            EngineKind::Opt1 => "opt1",
            EngineKind::Opt2 => "opt2",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            EngineKind::Baseline => "sequential AoS",
            EngineKind::Opt1 => "parallel SoA",
            EngineKind::Opt2 => "parallel SoA + pipeline",
        }
    }

    /// The configuration a [`RunConfig`] asks for.
    pub fn from_config(config: &RunConfig) -> Self {
        if config.engine.pipeline {
            EngineKind::Opt2
        } else {
            EngineKind::Opt1
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EngineKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown configuration '{s}', expected baseline, opt1 or opt2")))
    }
}

/// Output of one processed frame together with its ground truth, if loaded.
#[derive(Clone, Debug)]
pub struct Segmented {
    pub masks: FrameMasks,
    pub gt: Option<ForegroundMask>,
}

/// Segments `source` with the chosen engine configuration and hands every
/// frame's masks to `sink` in order.
pub fn run_engine<Src, S>(
    kind: EngineKind,
    config: &RunConfig,
    methods: &BTreeSet<Method>,
    geometry: StreamGeometry,
    source: Src,
    sink: S,
) -> Result<PipelineStats>
where
    Src: Iterator<Item = Result<RawFrame>> + Send,
    S: FnMut(Segmented) -> Result<()> + Send,
{
    match kind {
        EngineKind::Baseline => {
            let mut seg = AosSegmenter::new(config, methods, geometry)?;
            run_sequential(
                source,
                |mut f: RawFrame| {
                    let gt = f.gt.take();
                    Ok(Segmented {
                        masks: seg.process(&f)?,
                        gt,
                    })
                },
                sink,
            )
        }
        EngineKind::Opt1 | EngineKind::Opt2 => {
            let pool = WorkerPool::new(config.engine.workers)?;
            let mut seg = RgbdSegmenter::new(config, methods, geometry, pool)?;
            let planar = source.map(|f| f.and_then(RawFrame::into_frame_set));
            let process = |mut f: crate::dataset::FrameSet| {
                let gt = f.gt.take();
                Ok(Segmented {
                    masks: seg.process(&f)?,
                    gt,
                })
            };
            if kind == EngineKind::Opt2 {
                run_pipeline(planar, process, sink)
            } else {
                run_sequential(planar, process, sink)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThroughputResult {
    pub engine: EngineKind,
    pub workers: usize,
    pub stats: PipelineStats,
    /// Hash over the encoded output masks of every frame, for comparing engines.
    pub digest: u64,
}

/// Runs decode, segment, register, fuse and mask encoding end to end over a
/// stored sequence.
pub fn measure_throughput(
    kind: EngineKind,
    reader: &SequenceReader,
    config: &RunConfig,
    methods: &BTreeSet<Method>,
) -> Result<ThroughputResult> {
    let workers = match kind {
        EngineKind::Baseline => 1,
        _ => WorkerPool::new(config.engine.workers)?.workers(),
    };
    if reader.is_empty() {
        return Ok(ThroughputResult {
            engine: kind,
            workers,
            stats: PipelineStats::default(),
            digest: DefaultHasher::new().finish(),
        });
    }
    let geometry = reader.geometry()?;
    let source = (0..reader.len()).map(|i| reader.read_raw(i, false));
    let mut hasher = DefaultHasher::new();
    let stats = run_engine(kind, config, methods, geometry, source, |s: Segmented| {
        for (method, mask) in s.masks.iter() {
            (s.masks.index, method).hash(&mut hasher);
            encode_mask_png(mask).hash(&mut hasher);
        }
        Ok(())
    })?;
    Ok(ThroughputResult {
        engine: kind,
        workers,
        stats,
        digest: hasher.finish(),
    })
}
