//! Three-stage frame pipeline.
//!
//! Stage A pulls and decodes frame `i+1`, stage B processes frame `i` on the
//! calling thread, and stage C emits frame `i-1`. Adjacent stages hand off
//! through rendezvous channels, so at most three frames are alive at once and
//! results leave in source order.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::sync_channel;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineStats {
    pub frames_processed: usize,
    pub wall_time_s: f64,
    pub fps: f64,
    pub ingest_busy_s: f64,
    pub process_busy_s: f64,
    pub emit_busy_s: f64,
    pub max_in_flight: usize,
}

impl PipelineStats {
    pub fn from_parts(frames: usize, wall: Duration, busy: [Duration; 3], max_in_flight: usize) -> Self {
        let wall_time_s = wall.as_secs_f64();
        Self {
            frames_processed: frames,
            wall_time_s,
            fps: fps(frames, wall_time_s),
            ingest_busy_s: busy[0].as_secs_f64(),
            process_busy_s: busy[1].as_secs_f64(),
            emit_busy_s: busy[2].as_secs_f64(),
            max_in_flight,
        }
    }
}

/// Frames per second; zero when nothing ran.
pub fn fps(frames: usize, wall_time_s: f64) -> f64 {
    if frames == 0 || wall_time_s <= 0.0 {
        0.0
    } else {
        frames as f64 / wall_time_s
    }
}

struct Failure {
    frame: usize,
    error: Error,
}

impl Failure {
    fn into_error(self) -> Error {
        Error::Pipeline {
            frame: self.frame,
            source: Box::new(self.error),
        }
    }
}

fn earliest(failures: impl IntoIterator<Item = Option<Failure>>) -> Option<Failure> {
    failures.into_iter().flatten().min_by_key(|f| f.frame)
}

/// Runs source, processor and sink concurrently as a three-stage pipeline.
///
/// On failure the frames already in flight are drained and the error of the
/// earliest failing frame is returned.
pub fn run_pipeline<I, O, Src, P, S>(source: Src, mut processor: P, mut sink: S) -> Result<PipelineStats>
where
    I: Send,
    O: Send,
    Src: Iterator<Item = Result<I>> + Send,
    P: FnMut(I) -> Result<O>,
    S: FnMut(O) -> Result<()> + Send,
{
    let in_flight = AtomicUsize::new(0);
    let max_in_flight = AtomicUsize::new(0);
    let start = Instant::now();

    let (to_process, from_ingest) = sync_channel::<(usize, I)>(0);
    let (to_emit, from_process) = sync_channel::<(usize, O)>(0);

    let (ingest, process, emit) = std::thread::scope(|scope| {
        let in_flight = &in_flight;
        let max_in_flight = &max_in_flight;

        let ingest = scope.spawn(move || {
            let mut busy = Duration::ZERO;
            let mut failure = None;
            let mut source = source;
            let mut index = 0usize;
            loop {
                let t = Instant::now();
                let next = source.next();
                busy += t.elapsed();
                match next {
                    None => break,
                    Some(Err(error)) => {
                        failure = Some(Failure { frame: index, error });
                        break;
                    }
                    Some(Ok(frame)) => {
                        let now = in_flight.fetch_add(1, Ordering::SeqCst) + 1;
                        max_in_flight.fetch_max(now, Ordering::SeqCst);
                        if to_process.send((index, frame)).is_err() {
                            break;
                        }
                        index += 1;
                    }
                }
            }
            (busy, failure)
        });

        let emit = scope.spawn(move || {
            let mut busy = Duration::ZERO;
            let mut failure = None;
            let mut emitted = 0usize;
            for (index, out) in from_process.iter() {
                let t = Instant::now();
                let res = sink(out);
                busy += t.elapsed();
                in_flight.fetch_sub(1, Ordering::SeqCst);
                match res {
                    Ok(()) => emitted += 1,
                    Err(error) => {
                        failure = Some(Failure { frame: index, error });
                        break;
                    }
                }
            }
            (busy, failure, emitted)
        });

        let mut busy = Duration::ZERO;
        let mut failure = None;
        for (index, frame) in from_ingest.iter() {
            let t = Instant::now();
            let res = processor(frame);
            busy += t.elapsed();
            match res {
                Ok(out) => {
                    if to_emit.send((index, out)).is_err() {
                        break;
                    }
                }
                Err(error) => {
                    failure = Some(Failure { frame: index, error });
                    break;
                }
            }
        }
        // Closing both ends lets the other stages finish what they hold.
        drop(to_emit);
        drop(from_ingest);

        let ingest = ingest.join().expect("ingest stage panicked");
        let emit = emit.join().expect("emit stage panicked");
        (ingest, (busy, failure), emit)
    });

    let wall = start.elapsed();
    if let Some(failure) = earliest([ingest.1, process.1, emit.1]) {
        return Err(failure.into_error());
    }
    Ok(PipelineStats::from_parts(
        emit.2,
        wall,
        [ingest.0, process.0, emit.0],
        max_in_flight.load(Ordering::SeqCst),
    ))
}

/// Same contract as [`run_pipeline`] with all three stages on the calling thread.
pub fn run_sequential<I, O, Src, P, S>(source: Src, mut processor: P, mut sink: S) -> Result<PipelineStats>
where
    Src: Iterator<Item = Result<I>>,
    P: FnMut(I) -> Result<O>,
    S: FnMut(O) -> Result<()>,
{
    let start = Instant::now();
    let mut busy = [Duration::ZERO; 3];
    let mut frames = 0usize;
    let mut source = source;
    loop {
        let t = Instant::now();
        let next = source.next();
        busy[0] += t.elapsed();
        let frame = match next {
            None => break,
            Some(Ok(frame)) => frame,
            Some(Err(error)) => return Err(Failure { frame: frames, error }.into_error()),
        };
        let t = Instant::now();
        let out = processor(frame).map_err(|error| Failure { frame: frames, error }.into_error())?;
        busy[1] += t.elapsed();
        let t = Instant::now();
        sink(out).map_err(|error| Failure { frame: frames, error }.into_error())?;
        busy[2] += t.elapsed();
        frames += 1;
    }
    Ok(PipelineStats::from_parts(frames, start.elapsed(), busy, usize::from(frames > 0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numbers(n: usize) -> impl Iterator<Item = Result<u64>> + Send {
        (0..n as u64).map(Ok)
    }

    #[test]
    fn empty_source() {
        let stats = run_pipeline(numbers(0), |x: u64| Ok(x), |_| Ok(())).unwrap();
        assert_eq!(stats.frames_processed, 0);
        assert_eq!(stats.fps, 0.0);
        let stats = run_sequential(numbers(0), |x: u64| Ok(x), |_| Ok(())).unwrap();
        assert_eq!(stats.frames_processed, 0);
    }

    #[test]
    fn single_frame() {
        let mut out = Vec::new();
        let stats = run_pipeline(numbers(1), |x| Ok(x * 10), |y| {
            out.push(y);
            Ok(())
        })
        .unwrap();
        assert_eq!(stats.frames_processed, 1);
        assert_eq!(out, vec![0]);
    }

    #[test]
    fn preserves_order_and_bounds_in_flight() {
        let mut state = 0u64;
        let mut out = Vec::new();
        let stats = run_pipeline(
            numbers(200).map(|r| {
                std::thread::sleep(Duration::from_micros(50));
                r
            }),
            |x| {
                // stateful processor: results depend on temporal order
                state = state.wrapping_mul(31).wrapping_add(x);
                Ok(state)
            },
            |y| {
                out.push(y);
                Ok(())
            },
        )
        .unwrap();
        let mut s = 0u64;
        let expect: Vec<u64> = (0..200)
            .map(|x| {
                s = s.wrapping_mul(31).wrapping_add(x);
                s
            })
            .collect();
        assert_eq!(out, expect);
        assert_eq!(stats.frames_processed, 200);
        assert!(stats.max_in_flight <= 3, "{}", stats.max_in_flight);
    }

    #[test]
    fn source_error_drains_and_names_frame() {
        let mut emitted = Vec::new();
        let src = (0..10u64).map(|i| {
            if i == 6 {
                Err(Error::Config("decode".into()))
            } else {
                Ok(i)
            }
        });
        let err = run_pipeline(src, Ok, |y| {
            emitted.push(y);
            Ok(())
        })
        .unwrap_err();
        assert!(matches!(err, Error::Pipeline { frame: 6, .. }), "{err}");
        assert_eq!(emitted, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn processor_error_names_frame() {
        let err = run_pipeline(
            numbers(10),
            |x| if x == 3 { Err(Error::Config("boom".into())) } else { Ok(x) },
            |_| Ok(()),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Pipeline { frame: 3, .. }));
        let err = run_sequential(
            numbers(10),
            |x| if x == 3 { Err(Error::Config("boom".into())) } else { Ok(x) },
            |_| Ok(()),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Pipeline { frame: 3, .. }));
    }

    #[test]
    fn fps_definition() {
        assert_eq!(fps(300, 10.0), 30.0);
        assert_eq!(fps(0, 10.0), 0.0);
    }
}
