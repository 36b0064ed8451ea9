//! Segments a built-in scenario in memory and prints per-method F1.
//!
//! `cargo run --release --example score_scenario -- A [config.json]`

use std::collections::BTreeSet;

use rgbd_gmm::dataset::synth::render_frame;
use rgbd_gmm::eval::{run_engine, EngineKind, EvalAccumulator, Segmented};
use rgbd_gmm::{Method, RunConfig, ScenarioSpec, StreamGeometry};

fn main() -> rgbd_gmm::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map(String::as_str).unwrap_or("A");
    let spec = ScenarioSpec::builtin(name).expect("known scenario");
    let cfg = match args.get(2).filter(|a| !a.starts_with("--")) {
        Some(p) => RunConfig::load(p.as_ref())?,
        None => RunConfig::default(),
    };
    let methods: BTreeSet<Method> = Method::ALL.into_iter().collect();
    let mut acc = EvalAccumulator::new(cfg.evaluation.warmup_frames);
    let source = (0..spec.frame_count).map(|i| Ok(render_frame(&spec, i)));
    let geometry = StreamGeometry::registered(spec.width, spec.height);
    let stats = run_engine(EngineKind::Opt2, &cfg, &methods, geometry, source, |s: Segmented| {
        acc.push_masks(&s.masks, s.gt.as_ref().expect("synthetic frames carry ground truth"))
    })?;
    let report = acc.finish()?;
    if args.iter().any(|a| a == "--frames") {
        for i in 0..spec.frame_count {
            let row: Vec<String> = report
                .methods()
                .map(|m| format!("{m}={:.3}", report.series[&m][i].f1))
                .collect();
            println!("{i:4} {}", row.join(" "));
        }
    }
    for (m, a) in &report.aggregates {
        println!("{m:10} mean F1 {:.4}  pooled F1 {:.4}  min {:.4}", a.mean_f1, a.f1, a.min_f1);
    }
    println!("{:.1} fps", stats.fps);
    Ok(())
}
