//! Deterministic synthetic RGB-D desk scenes with exact ground truth.
//!
//! A frame is a pure function of `(spec, frame index)`. Noise comes from
//! ChaCha streams keyed by `(seed, frame, row)`, so frames and rows can be
//! rendered in any order or in parallel with identical bytes.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frame::RawFrame;
use super::io::{save_mask, write_color_png, write_depth_png};
use super::manifest::{FrameEntry, SequenceManifest};
use crate::error::{Error, Result};
use crate::mask::ForegroundMask;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    #[inline]
    fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.width && y >= self.y && y < self.y + self.height
    }
}

/// Static scene: a textured wall above `horizon_row`, a desk plane below it
/// receding from `desk_near_mm` at the bottom row to `desk_far_mm` at the horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSpec {
    pub wall_color: [u8; 3],
    pub desk_color: [u8; 3],
    /// Relative amplitude of the sinusoidal texture.
    pub texture_amplitude: f32,
    pub texture_period_px: f32,
    pub horizon_row: usize,
    pub wall_depth_mm: f32,
    pub desk_near_mm: f32,
    pub desk_far_mm: f32,
}

/// Position of an object's top-left corner at a given frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub frame: usize,
    pub x: usize,
    pub y: usize,
}

/// A checkered rectangle moving piecewise-linearly between waypoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub width: usize,
    pub height: usize,
    pub waypoints: Vec<Waypoint>,
    /// How far in front of the background the object sits.
    pub depth_offset_mm: f32,
    pub colors: [[u8; 3]; 2],
    pub checker_px: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shadow: Option<CastShadow>,
}

/// Darkening of the background under a copy of the object's rectangle
/// shifted by `(dx, dy)`. Colour only; depth and ground truth are unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CastShadow {
    pub dx: i64,
    pub dy: i64,
    pub factor: f32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SceneEvent {
    /// Multiplies every colour channel of the whole frame.
    IlluminationGain { start: usize, end: usize, gain: f32 },
    /// Whole-frame gain `1 + amplitude * sin(2π (frame - start) / period_frames)`.
    IlluminationWave {
        start: usize,
        end: usize,
        amplitude: f32,
        period_frames: f32,
    },
    /// Multiplies colour inside `region` by `factor` (< 1 darkens).
    Shadow { start: usize, end: usize, region: Rect, factor: f32 },
    /// Extra additive noise on the background inside `region`, colour and depth.
    BackgroundFlicker {
        start: usize,
        end: usize,
        region: Rect,
        color_stddev: f32,
        depth_stddev_mm: f32,
    },
}

impl SceneEvent {
    /// Active on frames `start..end`.
    fn span(&self) -> (usize, usize) {
        match *self {
            SceneEvent::IlluminationGain { start, end, .. }
            | SceneEvent::IlluminationWave { start, end, .. }
            | SceneEvent::Shadow { start, end, .. }
            | SceneEvent::BackgroundFlicker { start, end, .. } => (start, end),
        }
    }

    fn active(&self, frame: usize) -> bool {
        let (s, e) = self.span();
        (s..e).contains(&frame)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub color_stddev: f32,
    pub depth_stddev_mm: f32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    pub seed: u64,
    pub background: BackgroundSpec,
    pub objects: Vec<ObjectSpec>,
    pub events: Vec<SceneEvent>,
    pub noise: NoiseSpec,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        if self.width == 0 || self.height == 0 {
            return bad(format!("empty frame {}x{}", self.width, self.height));
        }
        let fits = |r: &Rect| r.width > 0 && r.height > 0 && r.x + r.width <= self.width && r.y + r.height <= self.height;
        let bg = &self.background;
        if bg.horizon_row > self.height {
            return bad(format!("horizon_row {} below the frame", bg.horizon_row));
        }
        if !(bg.wall_depth_mm >= 1.0 && bg.desk_near_mm >= 1.0 && bg.desk_far_mm >= 1.0) {
            return bad("background depths must be at least 1 mm".into());
        }
        if !(bg.texture_period_px > 0.0) {
            return bad("texture_period_px must be positive".into());
        }
        for (i, obj) in self.objects.iter().enumerate() {
            if obj.width == 0 || obj.height == 0 || obj.checker_px == 0 {
                return bad(format!("object {i} has an empty size or checker"));
            }
            if obj.waypoints.is_empty() {
                return bad(format!("object {i} has no waypoints"));
            }
            if obj.waypoints.windows(2).any(|w| w[0].frame >= w[1].frame) {
                return bad(format!("object {i} waypoints must have increasing frames"));
            }
            if let Some(sh) = &obj.shadow {
                if !(sh.factor > 0.0) {
                    return bad(format!("object {i}: shadow factor must be positive"));
                }
            }
            for wp in &obj.waypoints {
                let r = Rect { x: wp.x, y: wp.y, width: obj.width, height: obj.height };
                if !fits(&r) {
                    return bad(format!("object {i} leaves the frame at waypoint frame {}", wp.frame));
                }
            }
        }
        for (i, ev) in self.events.iter().enumerate() {
            let (s, e) = ev.span();
            if s >= e || s >= self.frame_count || e > self.frame_count {
                return bad(format!("event {i} span {s}..{e} outside 0..{}", self.frame_count));
            }
            match ev {
                SceneEvent::IlluminationGain { gain, .. } if !(*gain > 0.0) => {
                    return bad(format!("event {i}: illumination gain must be positive"));
                }
                SceneEvent::IlluminationWave { amplitude, period_frames, .. }
                    if !((0.0..1.0).contains(amplitude) && *period_frames > 0.0) =>
                {
                    return bad(format!("event {i}: wave amplitude must be in [0, 1) and period positive"));
                }
                SceneEvent::Shadow { region, factor, .. } => {
                    if !fits(region) || !(*factor > 0.0) {
                        return bad(format!("event {i}: bad shadow region or factor"));
                    }
                }
                SceneEvent::BackgroundFlicker { region, color_stddev, depth_stddev_mm, .. } => {
                    if !fits(region) || *color_stddev < 0.0 || *depth_stddev_mm < 0.0 {
                        return bad(format!("event {i}: bad flicker region or amplitude"));
                    }
                }
                _ => {}
            }
        }
        if self.noise.color_stddev < 0.0 || self.noise.depth_stddev_mm < 0.0 {
            return bad("noise must be non-negative".into());
        }
        Ok(())
    }

    /// Looks up a built-in scenario by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "A" | "a" => Some(scenario_a()),
            "B" | "b" => Some(scenario_b()),
            _ => None,
        }
    }

    pub const BUILTIN_NAMES: [&'static str; 2] = ["A", "B"];
}

impl ObjectSpec {
    /// Top-left corner at `frame`, clamped to the first/last waypoint.
    pub fn position(&self, frame: usize) -> (usize, usize) {
        let wps = &self.waypoints;
        let first = wps[0];
        if frame <= first.frame {
            return (first.x, first.y);
        }
        for w in wps.windows(2) {
            let (a, b) = (w[0], w[1]);
            if frame <= b.frame {
                let t = (frame - a.frame) as f64 / (b.frame - a.frame) as f64;
                let lerp = |p: usize, q: usize| (p as f64 + (q as f64 - p as f64) * t).round() as usize;
                return (lerp(a.x, b.x), lerp(a.y, b.y));
            }
        }
        let last = wps[wps.len() - 1];
        (last.x, last.y)
    }

    fn rect(&self, frame: usize) -> Rect {
        let (x, y) = self.position(frame);
        Rect { x, y, width: self.width, height: self.height }
    }

    /// Shadow footprint at `frame` as half-open `(x0, y0, x1, y1)`, possibly empty.
    fn shadow_box(&self, frame: usize) -> Option<(i64, i64, i64, i64, f32)> {
        let sh = self.shadow?;
        let (x, y) = self.position(frame);
        let (x0, y0) = (x as i64 + sh.dx, y as i64 + sh.dy);
        Some((x0, y0, x0 + self.width as i64, y0 + self.height as i64, sh.factor))
    }
}

/// Waypoints that run an object around the closed polygon `corners`,
/// spending `leg_frames[k]` frames on the leg that starts at corner `k`,
/// until `last_frame`.
pub fn loop_waypoints(corners: &[(usize, usize)], leg_frames: &[usize], phase: usize, last_frame: usize) -> Vec<Waypoint> {
    let mut out = Vec::new();
    let n = corners.len();
    let mut k = phase % n;
    let mut frame = 0;
    loop {
        let (x, y) = corners[k];
        out.push(Waypoint { frame, x, y });
        if frame >= last_frame {
            return out;
        }
        frame += leg_frames[k].max(1);
        k = (k + 1) % n;
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn row_rng(seed: u64, frame: usize, row: usize, stream: u64) -> ChaCha8Rng {
    let key = splitmix(splitmix(seed ^ stream.rotate_left(48)) ^ frame as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(row as u64);
    rng
}

const SENSOR_STREAM: u64 = 1;
const FLICKER_STREAM: u64 = 2;

/// Renders one frame of `spec`; `spec` must already be valid.
pub fn render_frame(spec: &ScenarioSpec, frame: usize) -> RawFrame {
    let (w, h) = (spec.width, spec.height);
    let bg = &spec.background;
    let mut rgb = vec![0u8; w * h * 3];
    let mut depth = vec![0u16; w * h];
    let mut gt = ForegroundMask::new(w, h);

    let gain: f32 = spec
        .events
        .iter()
        .filter(|e| e.active(frame))
        .filter_map(|e| match *e {
            SceneEvent::IlluminationGain { gain, .. } => Some(gain),
            SceneEvent::IlluminationWave { start, amplitude, period_frames, .. } => {
                let phase = std::f32::consts::TAU * (frame - start) as f32 / period_frames;
                Some(1.0 + amplitude * phase.sin())
            }
            _ => None,
        })
        .product();
    let active: Vec<&SceneEvent> = spec.events.iter().filter(|e| e.active(frame)).collect();
    let rects: Vec<(Rect, &ObjectSpec)> = spec.objects.iter().map(|o| (o.rect(frame), o)).collect();
    let shadows: Vec<_> = spec.objects.iter().filter_map(|o| o.shadow_box(frame)).collect();

    let period = bg.texture_period_px;
    let two_pi = std::f32::consts::TAU;
    for y in 0..h {
        let mut sensor = row_rng(spec.seed, frame, y, SENSOR_STREAM);
        let mut flicker = row_rng(spec.seed, frame, y, FLICKER_STREAM);
        let wall = y < bg.horizon_row;
        let bg_depth = if wall {
            bg.wall_depth_mm
        } else {
            let span = (h - bg.horizon_row).max(1) as f32;
            let t = (y - bg.horizon_row) as f32 / span;
            bg.desk_far_mm + (bg.desk_near_mm - bg.desk_far_mm) * t
        };
        for x in 0..w {
            let i = y * w + x;
            let (mut color, mut z) = if wall {
                let tex = (two_pi * x as f32 / period).sin() * (two_pi * y as f32 / (1.7 * period)).cos();
                (bg.wall_color.map(|c| c as f32 * (1.0 + bg.texture_amplitude * tex)), bg_depth)
            } else {
                let tex = (two_pi * (x as f32 + 0.35 * y as f32) / period).sin();
                (bg.desk_color.map(|c| c as f32 * (1.0 + bg.texture_amplitude * tex)), bg_depth)
            };

            let object = rects.iter().rev().find(|(r, _)| r.contains(x, y));
            match object {
                Some((r, obj)) => {
                    let cell = ((x - r.x) / obj.checker_px + (y - r.y) / obj.checker_px) % 2;
                    color = obj.colors[cell].map(f32::from);
                    z = bg_depth - obj.depth_offset_mm;
                    gt.bits_mut()[i] = 1;
                }
                None => {
                    let (xi, yi) = (x as i64, y as i64);
                    for &(x0, y0, x1, y1, f) in &shadows {
                        if xi >= x0 && xi < x1 && yi >= y0 && yi < y1 {
                            color = color.map(|c| c * f);
                        }
                    }
                    for ev in &active {
                        if let SceneEvent::BackgroundFlicker { region, color_stddev, depth_stddev_mm, .. } = ev {
                            if region.contains(x, y) {
                                for c in &mut color {
                                    let n: f32 = StandardNormal.sample(&mut flicker);
                                    *c += color_stddev * n;
                                }
                                let n: f32 = StandardNormal.sample(&mut flicker);
                                z += depth_stddev_mm * n;
                            }
                        }
                    }
                }
            }

            let mut factor = gain;
            for ev in &active {
                if let SceneEvent::Shadow { region, factor: f, .. } = ev {
                    if region.contains(x, y) {
                        factor *= f;
                    }
                }
            }
            for (c, out) in color.iter().zip(&mut rgb[i * 3..i * 3 + 3]) {
                let n: f32 = StandardNormal.sample(&mut sensor);
                *out = (c * factor + spec.noise.color_stddev * n).round().clamp(0.0, 255.0) as u8;
            }
            let n: f32 = StandardNormal.sample(&mut sensor);
            depth[i] = (z + spec.noise.depth_stddev_mm * n).round().clamp(1.0, 65535.0) as u16;
        }
    }

    RawFrame {
        index: frame,
        width: w,
        height: h,
        rgb,
        depth,
        depth_dims: (w, h),
        depth_scale: 1.0,
        gt: Some(gt),
    }
}

/// Renders the whole scenario to `out_dir` and writes `manifest.json` there.
pub fn generate_synthetic(spec: &ScenarioSpec, out_dir: &Path) -> Result<SequenceManifest> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let entries: Vec<FrameEntry> = (0..spec.frame_count)
        .into_par_iter()
        .map(|i| {
            let f = render_frame(spec, i);
            let entry = FrameEntry {
                index: i,
                color: format!("color_{i:05}.png"),
                depth: format!("depth_{i:05}.png"),
                gt: Some(format!("gt_{i:05}.png")),
            };
            write_color_png(&out_dir.join(&entry.color), f.width, f.height, &f.rgb)?;
            write_depth_png(&out_dir.join(&entry.depth), f.width, f.height, &f.depth)?;
            save_mask(f.gt.as_ref().expect("rendered frames carry ground truth"), out_dir.join(entry.gt.as_ref().unwrap()))?;
            Ok(entry)
        })
        .collect::<Result<_>>()?;
    let manifest = SequenceManifest {
        name: spec.name.clone(),
        frame_count: spec.frame_count,
        width: Some(spec.width),
        height: Some(spec.height),
        depth_scale: 1.0,
        registered: true,
        frames: entries,
        calibration: None,
    };
    manifest.write(&out_dir.join("manifest.json"))?;
    Ok(manifest)
}

fn desk_background() -> BackgroundSpec {
    BackgroundSpec {
        wall_color: [150, 140, 120],
        desk_color: [110, 80, 60],
        texture_amplitude: 0.12,
        texture_period_px: 48.0,
        horizon_row: 200,
        wall_depth_mm: 2600.0,
        desk_near_mm: 900.0,
        desk_far_mm: 1800.0,
    }
}

fn scene_objects(last_frame: usize) -> Vec<ObjectSpec> {
    vec![
        ObjectSpec {
            width: 64,
            height: 80,
            waypoints: loop_waypoints(&[(20, 230), (556, 230), (556, 380), (20, 380)], &[30, 7, 30, 7], 0, last_frame),
            depth_offset_mm: 350.0,
            colors: [[200, 60, 50], [40, 170, 210]],
            checker_px: 10,
            shadow: Some(CastShadow { dx: 0, dy: 16, factor: 0.65 }),
        },
        ObjectSpec {
            width: 56,
            height: 72,
            waypoints: loop_waypoints(&[(40, 16), (544, 16), (544, 108), (40, 108)], &[28, 5, 28, 5], 2, last_frame),
            depth_offset_mm: 600.0,
            colors: [[230, 220, 40], [50, 40, 160]],
            checker_px: 8,
            shadow: Some(CastShadow { dx: 0, dy: 14, factor: 0.7 }),
        },
    ]
}

/// Scenario A: two objects sweeping over a desk under an overhead light, a
/// sudden ×1.5 lighting change, a temporary shadow and a patch of flickering
/// background.
pub fn scenario_a() -> ScenarioSpec {
    let frames = 300;
    ScenarioSpec {
        name: "A".into(),
        width: 640,
        height: 480,
        frame_count: frames,
        seed: 7,
        background: desk_background(),
        objects: scene_objects(frames - 1),
        events: vec![
            SceneEvent::IlluminationGain { start: 120, end: 135, gain: 1.5 },
            SceneEvent::Shadow {
                start: 200,
                end: 230,
                region: Rect { x: 300, y: 220, width: 160, height: 120 },
                factor: 0.6,
            },
            SceneEvent::BackgroundFlicker {
                start: 0,
                end: frames,
                region: Rect { x: 420, y: 20, width: 160, height: 140 },
                color_stddev: 4.0,
                depth_stddev_mm: 4.0,
            },
        ],
        noise: NoiseSpec {
            color_stddev: 1.0,
            depth_stddev_mm: 1.0,
        },
    }
}

/// Scenario B: lighting that never settles and two strongly flickering
/// background patches.
pub fn scenario_b() -> ScenarioSpec {
    let frames = 300;
    let events = vec![
        SceneEvent::IlluminationWave {
            start: 0,
            end: frames,
            amplitude: 0.2,
            period_frames: 60.0,
        },
        SceneEvent::BackgroundFlicker {
            start: 0,
            end: frames,
            region: Rect { x: 380, y: 10, width: 240, height: 180 },
            color_stddev: 8.0,
            depth_stddev_mm: 8.0,
        },
        SceneEvent::BackgroundFlicker {
            start: 0,
            end: frames,
            region: Rect { x: 20, y: 260, width: 200, height: 200 },
            color_stddev: 6.0,
            depth_stddev_mm: 6.0,
        },
    ];
    ScenarioSpec {
        name: "B".into(),
        events,
        seed: 11,
        ..scenario_a()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioSpec {
        ScenarioSpec {
            name: "small".into(),
            width: 64,
            height: 48,
            frame_count: 12,
            seed: 3,
            background: BackgroundSpec { horizon_row: 20, ..desk_background() },
            objects: vec![ObjectSpec {
                width: 20,
                height: 20,
                waypoints: vec![Waypoint { frame: 0, x: 10, y: 10 }],
                depth_offset_mm: 300.0,
                colors: [[200, 30, 30], [30, 30, 200]],
                checker_px: 4,
                shadow: None,
            }],
            events: vec![],
            noise: NoiseSpec { color_stddev: 2.0, depth_stddev_mm: 2.0 },
        }
    }

    #[test]
    fn builtins_are_valid() {
        scenario_a().validate().unwrap();
        scenario_b().validate().unwrap();
        assert!(ScenarioSpec::builtin("C").is_none());
    }

    #[test]
    fn resting_rectangle_ground_truth() {
        let spec = small();
        for i in 0..spec.frame_count {
            assert_eq!(render_frame(&spec, i).gt.unwrap().count_foreground(), 400);
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let spec = small();
        assert_eq!(render_frame(&spec, 5), render_frame(&spec, 5));
        let other = ScenarioSpec { seed: 4, ..small() };
        assert_ne!(render_frame(&spec, 5).rgb, render_frame(&other, 5).rgb);
    }

    #[test]
    fn illumination_touches_colour_only() {
        let plain = small();
        let lit = ScenarioSpec {
            events: vec![SceneEvent::IlluminationGain { start: 4, end: 8, gain: 1.5 }],
            ..small()
        };
        for i in 0..plain.frame_count {
            let (a, b) = (render_frame(&plain, i), render_frame(&lit, i));
            assert_eq!(a.depth, b.depth);
            assert_eq!(a.gt, b.gt);
            assert_eq!(a.rgb == b.rgb, !(4..8).contains(&i), "frame {i}");
        }
    }

    #[test]
    fn foreground_depth_is_offset_from_background() {
        let spec = ScenarioSpec { noise: NoiseSpec { color_stddev: 0.0, depth_stddev_mm: 0.0 }, ..small() };
        let f = render_frame(&spec, 0);
        let row = 15;
        // wall row: object at wall depth minus offset
        assert_eq!(f.depth[row * 64 + 15], 2300);
        assert_eq!(f.depth[row * 64 + 40], 2600);
    }

    #[test]
    fn interpolates_waypoints() {
        let obj = ObjectSpec {
            waypoints: vec![Waypoint { frame: 10, x: 0, y: 0 }, Waypoint { frame: 20, x: 100, y: 50 }],
            ..small().objects[0].clone()
        };
        assert_eq!(obj.position(0), (0, 0));
        assert_eq!(obj.position(15), (50, 25));
        assert_eq!(obj.position(30), (100, 50));
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = small();
        s.objects[0].waypoints[0].x = 50;
        assert!(s.validate().is_err());
        let mut s = small();
        s.events.push(SceneEvent::IlluminationGain { start: 3, end: 13, gain: 1.2 });
        assert!(s.validate().is_err());
        let mut s = small();
        s.events.push(SceneEvent::IlluminationGain { start: 3, end: 5, gain: 0.0 });
        assert!(s.validate().is_err());
    }

    #[test]
    fn generation_is_bitwise_reproducible() {
        let spec = ScenarioSpec { frame_count: 3, ..small() };
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let m = generate_synthetic(&spec, a.path()).unwrap();
        generate_synthetic(&spec, b.path()).unwrap();
        assert_eq!(m.frame_count, 3);
        for e in &m.frames {
            for f in [&e.color, &e.depth, e.gt.as_ref().unwrap()] {
                assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
            }
        }
        let loaded: Vec<_> = crate::dataset::load_sequence(a.path().join("manifest.json"))
            .unwrap()
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(loaded.len(), 3);
        assert_eq!(loaded[1], render_frame(&spec, 1).into_frame_set().unwrap());
    }
}
