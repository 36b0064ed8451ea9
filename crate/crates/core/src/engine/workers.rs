use std::ops::Range;

use super::layout::PlaneSet;
use crate::error::{Error, Result};

/// A fixed set of workers that each own one contiguous row range.
///
/// Work items are independent, so the result never depends on how many
/// workers run or in which order they finish.
pub struct WorkerPool {
    workers: usize,
    pool: Option<rayon::ThreadPool>,
}

impl WorkerPool {
    /// `workers == 0` picks the machine's available parallelism.
    pub fn new(workers: usize) -> Result<Self> {
        let workers = if workers == 0 {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        } else {
            workers
        };
        let pool = if workers > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .thread_name(|i| format!("rgbd-worker-{i}"))
                .build()
                .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
            Some(pool)
        } else {
            None
        };
        Ok(Self { workers, pool })
    }

    pub fn sequential() -> Self {
        Self {
            workers: 1,
            pool: None,
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Runs `f` once per item, spread over the workers; returns after all finish.
    pub fn run<I, F>(&self, items: Vec<I>, f: F)
    where
        I: Send,
        F: Fn(I) + Sync + Send,
    {
        match &self.pool {
            None => items.into_iter().for_each(f),
            Some(pool) => {
                use rayon::prelude::*;
                pool.install(|| items.into_par_iter().for_each(f));
            }
        }
    }

    /// Row ranges, one per worker, covering `0..height`.
    pub fn partition(&self, height: usize) -> Vec<Range<usize>> {
        row_ranges(height, self.workers)
    }
}

impl Default for WorkerPool {
    fn default() -> Self {
        Self::sequential()
    }
}

impl std::fmt::Debug for WorkerPool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WorkerPool").field("workers", &self.workers).finish()
    }
}

/// Splits `0..height` into at most `parts` contiguous, near-equal, non-empty ranges.
pub fn row_ranges(height: usize, parts: usize) -> Vec<Range<usize>> {
    let parts = parts.clamp(1, height.max(1));
    let base = height / parts;
    let extra = height % parts;
    let mut start = 0;
    (0..parts)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Cuts one row-major plane into disjoint mutable row blocks.
pub fn split_plane_rows<'a, T>(plane: &'a mut [T], width: usize, ranges: &[Range<usize>]) -> Vec<&'a mut [T]> {
    let mut rest = plane;
    let mut out = Vec::with_capacity(ranges.len());
    for r in ranges {
        let (head, tail) = std::mem::take(&mut rest).split_at_mut(r.len() * width);
        out.push(head);
        rest = tail;
    }
    out
}

/// Cuts every plane into row blocks and regroups them per block:
/// `result[block][plane]`.
pub fn split_planes_rows<'a, T>(
    planes: impl IntoIterator<Item = &'a mut [T]>,
    width: usize,
    ranges: &[Range<usize>],
) -> Vec<Vec<&'a mut [T]>>
where
    T: 'a,
{
    let mut blocks: Vec<Vec<&'a mut [T]>> = ranges.iter().map(|_| Vec::new()).collect();
    for plane in planes {
        for (block, piece) in blocks.iter_mut().zip(split_plane_rows(plane, width, ranges)) {
            block.push(piece);
        }
    }
    blocks
}

/// Applies a per-pixel kernel across all planes of `planes`.
///
/// The kernel receives the pixel's linear index and a scratch slice holding
/// that pixel's value from every plane, in plane order; whatever it leaves in
/// the slice is written back. A kernel must depend only on its own pixel;
/// under that contract the result is bitwise identical to a sequential
/// row-major sweep for any worker count.
pub fn par_for_pixels<T, K>(planes: &mut PlaneSet<T>, pool: &WorkerPool, kernel: K)
where
    T: Copy + Default + Send + Sync,
    K: Fn(usize, &mut [T]) + Sync + Send,
{
    let width = planes.width();
    let ranges = pool.partition(planes.height());
    let plane_count = planes.len();
    let blocks = split_planes_rows(planes.planes_mut(), width, &ranges);
    let items: Vec<_> = ranges.into_iter().zip(blocks).collect();
    pool.run(items, |(rows, mut block)| {
        let mut scratch = vec![T::default(); plane_count];
        let first = rows.start * width;
        for j in 0..rows.len() * width {
            for (s, p) in scratch.iter_mut().zip(block.iter()) {
                *s = p[j];
            }
            kernel(first + j, &mut scratch);
            for (s, p) in scratch.iter().zip(block.iter_mut()) {
                p[j] = *s;
            }
        }
    });
}
