use rgbd_gmm::dataset::synth::scenario_a;
use rgbd_gmm::ScenarioSpec;

/// Scenario A scaled down by `factor` in each dimension, `frames` long.
pub fn scaled_a(factor: usize, frames: usize) -> ScenarioSpec {
    let mut spec = scenario_a();
    spec.width /= factor;
    spec.height /= factor;
    spec.frame_count = frames;
    spec.background.horizon_row /= factor;
    for o in &mut spec.objects {
        o.width /= factor;
        o.height /= factor;
        o.checker_px = (o.checker_px / factor).max(1);
        for w in &mut o.waypoints {
            w.x /= factor;
            w.y /= factor;
        }
        if let Some(s) = &mut o.shadow {
            s.dy /= factor as i64;
        }
    }
    spec.events.clear();
    spec
}
