use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rgbd_gmm::dataset::save_mask;
use rgbd_gmm::eval::{measure_throughput, run_engine, EngineKind, EvalAccumulator, Segmented, ThroughputResult};
use rgbd_gmm::{generate_synthetic, Error, Method, Result, RunConfig, ScenarioSpec, SequenceReader};

#[derive(Parser)]
#[command(name = "rgbd-gmm", version, about = "Gaussian mixture background subtraction for RGB-D sequences")]
struct Cli {
    #[command(flatten)]
    global: Global,

    /// Print the complete default configuration as JSON and exit.
    #[arg(long)]
    dump_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct Global {
    /// JSON run configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for the pixel kernels (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Overlap decoding, processing and writing of consecutive frames.
    #[arg(long, global = true, value_parser = clap::value_parser!(bool))]
    pipeline: Option<bool>,

    /// Seed for the synthetic scenario generator.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic sequence with ground truth.
    Synth {
        /// Built-in scenario name.
        #[arg(long, conflicts_with = "spec")]
        scenario: Option<String>,

        /// Scenario description in JSON.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Write per-frame foreground masks for each requested method.
    Segment {
        #[arg(long)]
        manifest: PathBuf,

        /// Comma-separated subset of rgb, depth, fused, augmented.
        #[arg(long, default_value = "fused", value_delimiter = ',')]
        methods: Vec<Method>,
    },
    /// Score predicted masks against the sequence's ground truth.
    Eval {
        #[arg(long)]
        manifest: PathBuf,

        /// Prediction directory for a method, as METHOD=DIR; repeatable.
        #[arg(long = "pred", value_parser = parse_pred, required = true)]
        preds: Vec<(Method, PathBuf)>,
    },
    /// Measure end-to-end frame rate of the engine configurations.
    Bench {
        #[arg(long)]
        manifest: PathBuf,

        /// Comma-separated subset of baseline, opt1, opt2.
        #[arg(long, default_value = "baseline,opt1,opt2", value_delimiter = ',')]
        configs: Vec<EngineKind>,

        #[arg(long, default_value = "fused", value_delimiter = ',')]
        methods: Vec<Method>,
    },
}

fn parse_pred(s: &str) -> std::result::Result<(Method, PathBuf), String> {
    let (m, dir) = s.split_once('=').ok_or_else(|| format!("expected METHOD=DIR, got '{s}'"))?;
    let method = m.parse::<Method>().map_err(|e| e.to_string())?;
    Ok((method, PathBuf::from(dir)))
}

fn load_config(g: &Global) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(w) = g.workers {
        cfg.engine.workers = w;
    }
    if let Some(p) = g.pipeline {
        cfg.engine.pipeline = p;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(g: &Global, default: &str) -> Result<PathBuf> {
    let dir = g.out.clone().unwrap_or_else(|| PathBuf::from(default));
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    Ok(dir)
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.into(),
        source: e,
    }
}

fn mask_name(index: usize) -> String {
    format!("{index:05}.png")
}

fn cmd_synth(g: &Global, scenario: Option<&str>, spec: Option<&Path>) -> Result<()> {
    let mut spec = match (scenario, spec) {
        (_, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            serde_json::from_str::<ScenarioSpec>(&text).map_err(|source| Error::Json {
                path: path.into(),
                source,
            })?
        }
        (name, None) => {
            let name = name.unwrap_or("A");
            ScenarioSpec::builtin(name).ok_or_else(|| {
                Error::Scenario(format!("unknown scenario '{name}', known scenarios: {}", ScenarioSpec::BUILTIN_NAMES.join(", ")))
            })?
        }
    };
    if let Some(seed) = g.seed {
        spec.seed = seed;
    }
    let dir = out_dir(g, "out")?;
    generate_synthetic(&spec, &dir)?;
    println!("{}", dir.join("manifest.json").display());
    Ok(())
}

fn cmd_segment(g: &Global, manifest: &Path, methods: &[Method]) -> Result<()> {
    let cfg = load_config(g)?;
    let reader = SequenceReader::open(manifest)?;
    let methods: BTreeSet<Method> = methods.iter().copied().collect();
    let dir = out_dir(g, "masks")?;
    if reader.is_empty() {
        return Ok(());
    }
    let geometry = reader.geometry()?;
    let streams = rgbd_gmm::rgbd::Streams::for_methods(&methods);
    for m in streams.methods() {
        let d = dir.join(m.name());
        std::fs::create_dir_all(&d).map_err(|e| io_err(&d, e))?;
    }
    let source = (0..reader.len()).map(|i| reader.read_raw(i, false));
    let stats = run_engine(EngineKind::from_config(&cfg), &cfg, &methods, geometry, source, |s: Segmented| {
        for (m, mask) in s.masks.iter() {
            save_mask(mask, dir.join(m.name()).join(mask_name(s.masks.index)))?;
        }
        Ok(())
    })?;
    println!(
        "segmented {} frames ({}) at {:.1} fps into {}",
        stats.frames_processed,
        streams.methods().iter().map(|m| m.name()).collect::<Vec<_>>().join(","),
        stats.fps,
        dir.display()
    );
    Ok(())
}

fn cmd_eval(g: &Global, manifest: &Path, preds: &[(Method, PathBuf)]) -> Result<()> {
    let cfg = load_config(g)?;
    let reader = SequenceReader::open(manifest)?;
    if !reader.manifest().has_ground_truth() {
        return Err(Error::Manifest {
            path: manifest.into(),
            reason: "no ground truth for every frame".into(),
        });
    }
    let mut acc = EvalAccumulator::new(cfg.evaluation.warmup_frames);
    for i in 0..reader.len() {
        let gt = reader.ground_truth(i)?;
        for (method, dir) in preds {
            let path = dir.join(mask_name(i));
            if !path.is_file() {
                return Err(Error::Frame {
                    index: i,
                    path,
                    reason: format!("missing {method} prediction"),
                });
            }
            let pred = rgbd_gmm::dataset::load_mask(&path).map_err(|e| Error::Frame {
                index: i,
                path: path.clone(),
                reason: e.to_string(),
            })?;
            acc.push(i, *method, &pred, &gt)?;
        }
    }
    let report = acc.finish()?;
    let dir = out_dir(g, "eval")?;
    report.write_csv(&dir.join("metrics.csv"))?;
    report.write_summary(&dir.join("summary.json"))?;
    for (m, a) in &report.aggregates {
        println!("{m}: F1 = {:.3} (precision {:.3}, recall {:.3}, {} frames)", a.f1, a.precision, a.recall, a.frames);
    }
    Ok(())
}

fn cmd_bench(g: &Global, manifest: &Path, configs: &[EngineKind], methods: &[Method]) -> Result<()> {
    let cfg = load_config(g)?;
    let reader = SequenceReader::open(manifest)?;
    let methods: BTreeSet<Method> = methods.iter().copied().collect();
    let mut results: Vec<ThroughputResult> = Vec::new();
    for &kind in configs {
        results.push(measure_throughput(kind, &reader, &cfg, &methods)?);
    }
    println!("{:<10} {:<24} {:>7} {:>8} {:>10}", "config", "engine", "workers", "frames", "fps");
    for r in &results {
        println!(
            "{:<10} {:<24} {:>7} {:>8} {:>10.2}",
            r.engine.name(),
            r.engine.describe(),
            r.workers,
            r.stats.frames_processed,
            r.stats.fps
        );
    }
    let identical = results.windows(2).all(|w| w[0].digest == w[1].digest);
    let dir = out_dir(g, "bench")?;
    let by_name: BTreeMap<&str, &ThroughputResult> = results.iter().map(|r| (r.engine.name(), r)).collect();
    let json = serde_json::json!({ "configurations": by_name, "identical_masks": identical });
    let path = dir.join("bench.json");
    std::fs::write(&path, serde_json::to_string_pretty(&json).expect("stats serialize") + "\n")
        .map_err(|e| io_err(&path, e))?;
    if !identical {
        return Err(Error::Misaligned("engine configurations produced different masks".into()));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if cli.dump_config {
        println!("{}", RunConfig::default().to_json());
        return Ok(());
    }
    let g = &cli.global;
    match &cli.command {
        None => Err(Error::Config("no subcommand given; see --help".into())),
        Some(Command::Synth { scenario, spec }) => cmd_synth(g, scenario.as_deref(), spec.as_deref()),
        Some(Command::Segment { manifest, methods }) => cmd_segment(g, manifest, methods),
        Some(Command::Eval { manifest, preds }) => cmd_eval(g, manifest, preds),
        Some(Command::Bench {
            manifest,
            configs,
            methods,
        }) => cmd_bench(g, manifest, configs, methods),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
