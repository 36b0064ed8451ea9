//! Depth-to-colour mask registration with pinhole cameras and a rigid transform.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::ForegroundMask;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

/// Depth and colour intrinsics plus the depth→colour extrinsic transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraRig {
    pub depth: Intrinsics,
    pub color: Intrinsics,
    /// Row-major 3×3 rotation.
    pub rotation: [f64; 9],
    pub translation_mm: [f64; 3],
    /// Millimetres per raw depth unit.
    #[serde(default = "unit_scale")]
    pub depth_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

const IDENTITY: [f64; 9] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];

impl CameraRig {
    /// Both cameras share `intrinsics`, no rotation, no offset.
    pub fn identity(intrinsics: Intrinsics) -> Self {
        Self {
            depth: intrinsics,
            color: intrinsics,
            rotation: IDENTITY,
            translation_mm: [0.0; 3],
            depth_scale: 1.0,
        }
    }

    /// Identity rig with a nominal VGA-sized pinhole.
    pub fn identity_for(width: usize, height: usize) -> Self {
        Self::identity(Intrinsics {
            fx: 525.0,
            fy: 525.0,
            cx: (width as f64 - 1.0) / 2.0,
            cy: (height as f64 - 1.0) / 2.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("depth", &self.depth), ("color", &self.color)] {
            if !(k.fx > 0.0 && k.fy > 0.0) {
                return Err(Error::Rig(format!("{name} focal lengths must be positive, got fx={} fy={}", k.fx, k.fy)));
            }
        }
        if !(self.depth_scale > 0.0) {
            return Err(Error::Rig(format!("depth_scale must be positive, got {}", self.depth_scale)));
        }
        let r = &self.rotation;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[k * 3 + i] * r[k * 3 + j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                if (dot - expect).abs() > 1e-9 {
                    return Err(Error::Rig("rotation is not orthonormal".into()));
                }
            }
        }
        Ok(())
    }

    /// Shared intrinsics, no rotation and no offset: depth pixels land on
    /// the same colour pixel at every depth.
    pub fn is_identity(&self) -> bool {
        self.depth == self.color && self.rotation == IDENTITY && self.translation_mm == [0.0; 3]
    }

    /// Maps depth pixel `(u, v)` at `z_mm` into colour pixel coordinates, or
    /// `None` when the point lands behind the colour camera.
    pub fn project(&self, u: f64, v: f64, z_mm: f64) -> Option<(f64, f64)> {
        if self.is_identity() {
            return (z_mm > 0.0).then_some((u, v));
        }
        let d = &self.depth;
        let p = [(u - d.cx) * z_mm / d.fx, (v - d.cy) * z_mm / d.fy, z_mm];
        let r = &self.rotation;
        let t = &self.translation_mm;
        let q: [f64; 3] = std::array::from_fn(|i| r[i * 3] * p[0] + r[i * 3 + 1] * p[1] + r[i * 3 + 2] * p[2] + t[i]);
        if q[2] <= 0.0 {
            return None;
        }
        let c = &self.color;
        Some((c.fx * q[0] / q[2] + c.cx, c.fy * q[1] / q[2] + c.cy))
    }
}

/// Reprojects the foreground of a depth-grid mask into the colour grid.
///
/// Each foreground pixel with a valid (non-zero) depth reading is splatted to
/// its nearest colour pixel; projections outside the colour frame are
/// dropped. The result is dilated with a square kernel of `dilation_radius`.
pub fn register_mask(
    depth_mask: &ForegroundMask,
    depth_raw: &[u16],
    rig: &CameraRig,
    color_dims: (usize, usize),
    dilation_radius: usize,
) -> Result<ForegroundMask> {
    rig.validate()?;
    let (w, h) = depth_mask.dims();
    if depth_raw.len() != w * h {
        return Err(Error::Layout(format!(
            "depth plane has {} pixels, mask is {w}x{h}",
            depth_raw.len()
        )));
    }
    let (cw, ch) = color_dims;
    let mut splat = ForegroundMask::new(cw, ch);
    for (i, (&bit, &raw)) in depth_mask.bits().iter().zip(depth_raw).enumerate() {
        if bit == 0 || raw == 0 {
            continue;
        }
        let z = raw as f64 * rig.depth_scale;
        let Some((x, y)) = rig.project((i % w) as f64, (i / w) as f64, z) else {
            continue;
        };
        let (x, y) = (x.round(), y.round());
        if x < 0.0 || y < 0.0 || x >= cw as f64 || y >= ch as f64 {
            continue;
        }
        splat.bits_mut()[y as usize * cw + x as usize] = 1;
    }
    Ok(dilate(&splat, dilation_radius))
}

/// Square-kernel binary dilation.
pub fn dilate(mask: &ForegroundMask, radius: usize) -> ForegroundMask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = mask.dims();
    let src = mask.bits();
    // separable: horizontal pass then vertical pass
    let mut horiz = vec![0u8; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let lo = x.saturating_sub(radius);
            let hi = (x + radius).min(w - 1);
            horiz[y * w + x] = u8::from(row[lo..=hi].iter().any(|&b| b != 0));
        }
    }
    let mut out = ForegroundMask::new(w, h);
    let bits = out.bits_mut();
    for y in 0..h {
        let lo = y.saturating_sub(radius);
        let hi = (y + radius).min(h - 1);
        for x in 0..w {
            bits[y * w + x] = u8::from((lo..=hi).any(|yy| horiz[yy * w + x] != 0));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::PixelLabel;
    use proptest::prelude::*;

    fn k500() -> Intrinsics {
        Intrinsics {
            fx: 500.0,
            fy: 500.0,
            cx: 320.0,
            cy: 240.0,
        }
    }

    #[test]
    fn offset_projection_hand_case() {
        let rig = CameraRig {
            translation_mm: [50.0, 0.0, 0.0],
            ..CameraRig::identity(k500())
        };
        let mut mask = ForegroundMask::new(640, 480);
        mask.set(320, 240, PixelLabel::Foreground);
        let depth = vec![1000u16; 640 * 480];
        let out = register_mask(&mask, &depth, &rig, (640, 480), 0).unwrap();
        assert_eq!(out.count_foreground(), 1);
        assert_eq!(out.get(345, 240), PixelLabel::Foreground);
    }

    #[test]
    fn identity_projection_is_exact() {
        let rig = CameraRig::identity_for(640, 480);
        for (u, v, z) in [(0.0, 0.0, 1.0), (17.0, 401.0, 733.0), (639.0, 479.0, 65535.0)] {
            assert_eq!(rig.project(u, v, z), Some((u, v)));
        }
        assert_eq!(rig.project(5.0, 5.0, 0.0), None);
    }

    #[test]
    fn invalid_depth_is_not_splatted() {
        let rig = CameraRig::identity(k500());
        let mut mask = ForegroundMask::new(8, 8);
        mask.set(3, 3, PixelLabel::Foreground);
        let depth = vec![0u16; 64];
        let out = register_mask(&mask, &depth, &rig, (8, 8), 1).unwrap();
        assert_eq!(out.count_foreground(), 0);
    }

    #[test]
    fn projection_outside_frame_dropped() {
        let rig = CameraRig {
            translation_mm: [5000.0, 0.0, 0.0],
            ..CameraRig::identity(k500())
        };
        let mask = ForegroundMask::filled(16, 16, PixelLabel::Foreground);
        let out = register_mask(&mask, &vec![1000u16; 256], &rig, (16, 16), 0).unwrap();
        assert_eq!(out.count_foreground(), 0);
    }

    #[test]
    fn degenerate_rig_rejected() {
        let mut rig = CameraRig::identity(k500());
        rig.color.fx = 0.0;
        let mask = ForegroundMask::new(4, 4);
        assert!(matches!(register_mask(&mask, &[1; 16], &rig, (4, 4), 1), Err(Error::Rig(_))));
        let mut rig = CameraRig::identity(k500());
        rig.rotation[1] = 0.5;
        assert!(rig.validate().is_err());
    }

    #[test]
    fn dilation_radius_one() {
        let mut mask = ForegroundMask::new(5, 5);
        mask.set(0, 0, PixelLabel::Foreground);
        mask.set(3, 3, PixelLabel::Foreground);
        let d = dilate(&mask, 1);
        assert_eq!(d.count_foreground(), 4 + 9);
        assert_eq!(d.get(4, 4), PixelLabel::Foreground);
        assert_eq!(d.get(2, 0), PixelLabel::Background);
    }

    proptest! {
        #[test]
        fn identity_rig_round_trip(bits in proptest::collection::vec(any::<bool>(), 12 * 9), z in 300u16..6000) {
            let mask = ForegroundMask::from_bits(12, 9, bits.iter().map(|&b| u8::from(b)).collect()).unwrap();
            let rig = CameraRig::identity_for(12, 9);
            let out = register_mask(&mask, &vec![z; 12 * 9], &rig, (12, 9), 0).unwrap();
            prop_assert_eq!(out, mask);
        }

        #[test]
        fn dilated_count_bounded(bits in proptest::collection::vec(any::<bool>(), 10 * 10), r in 0usize..3) {
            let mask = ForegroundMask::from_bits(10, 10, bits.iter().map(|&b| u8::from(b)).collect()).unwrap();
            let rig = CameraRig {
                translation_mm: [13.0, -7.0, 2.0],
                ..CameraRig::identity_for(10, 10)
            };
            let out = register_mask(&mask, &[1200u16; 100], &rig, (10, 10), r).unwrap();
            prop_assert!(out.count_foreground() <= mask.count_foreground() * (2 * r + 1).pow(2));
        }
    }
}
