use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::frame::{FrameSet, RawFrame};
use super::io::{read_color_png, read_depth_png, read_mask_png};
use crate::error::{Error, Result};
use crate::registration::{CameraRig, Intrinsics};
use crate::rgbd::StreamGeometry;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub index: usize,
    pub color: String,
    pub depth: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub depth: Intrinsics,
    pub color: Intrinsics,
    pub rotation: [f64; 9],
    pub translation_mm: [f64; 3],
}

/// JSON description of a recorded sequence. Frame paths are relative to the
/// manifest's directory unless absolute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceManifest {
    pub name: String,
    pub frame_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    pub depth_scale: f64,
    pub registered: bool,
    pub frames: Vec<FrameEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Calibration>,
}

impl SequenceManifest {
    pub fn rig(&self) -> Option<CameraRig> {
        self.calibration.map(|c| CameraRig {
            depth: c.depth,
            color: c.color,
            rotation: c.rotation,
            translation_mm: c.translation_mm,
            depth_scale: self.depth_scale,
        })
    }

    pub fn has_ground_truth(&self) -> bool {
        !self.frames.is_empty() && self.frames.iter().all(|f| f.gt.is_some())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Random access to the frames of a validated manifest.
#[derive(Clone, Debug)]
pub struct SequenceReader {
    manifest: SequenceManifest,
    root: PathBuf,
    dims: Option<(usize, usize)>,
}

/// Opens a manifest and returns a provider that yields frames in index order.
pub fn load_sequence(manifest_path: impl AsRef<Path>) -> Result<impl Iterator<Item = Result<FrameSet>>> {
    let reader = SequenceReader::open(manifest_path)?;
    Ok((0..reader.len()).map(move |i| reader.read(i)))
}

impl SequenceReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: SequenceManifest = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_manifest(manifest, root, path)
    }

    fn from_manifest(manifest: SequenceManifest, root: PathBuf, path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Manifest {
            path: path.into(),
            reason,
        };
        if manifest.frame_count != manifest.frames.len() {
            return Err(bad(format!(
                "frame_count is {} but {} frames are listed",
                manifest.frame_count,
                manifest.frames.len()
            )));
        }
        if !(manifest.depth_scale > 0.0) {
            return Err(bad(format!("depth_scale must be positive, got {}", manifest.depth_scale)));
        }
        if let Some(rig) = manifest.rig() {
            rig.validate().map_err(|e| bad(e.to_string()))?;
        }
        let dims = match (manifest.width, manifest.height) {
            (Some(w), Some(h)) if w > 0 && h > 0 => Some((w, h)),
            (None, None) => None,
            _ => return Err(bad("width and height must be given together and be positive".into())),
        };
        let reader = Self { manifest, root, dims };
        for (pos, entry) in reader.manifest.frames.iter().enumerate() {
            if entry.index != pos {
                return Err(bad(format!("frame indices must run 0.. contiguously; position {pos} has index {}", entry.index)));
            }
            let files = [Some(&entry.color), Some(&entry.depth), entry.gt.as_ref()];
            for file in files.into_iter().flatten() {
                let full = reader.resolve(file);
                if !full.is_file() {
                    return Err(Error::Frame {
                        index: pos,
                        path: full,
                        reason: "missing file".into(),
                    });
                }
            }
        }
        Ok(reader)
    }

    pub fn manifest(&self) -> &SequenceManifest {
        &self.manifest
    }

    pub fn len(&self) -> usize {
        self.manifest.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.frames.is_empty()
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn resolve(&self, file: &str) -> PathBuf {
        let p = Path::new(file);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    /// Frame dimensions: declared in the manifest, else those of frame 0.
    pub fn dims(&self) -> Result<Option<(usize, usize)>> {
        if self.dims.is_some() || self.is_empty() {
            return Ok(self.dims);
        }
        let f = self.read_raw(0, false)?;
        Ok(Some((f.width, f.height)))
    }

    fn check(&self, index: usize, path: &Path, got: (usize, usize), want: &mut Option<(usize, usize)>) -> Result<()> {
        match *want {
            Some(w) if w != got => Err(Error::Frame {
                index,
                path: path.into(),
                reason: format!("dimension mismatch: expected {}x{}, got {}x{}", w.0, w.1, got.0, got.1),
            }),
            Some(_) => Ok(()),
            None => {
                *want = Some(got);
                Ok(())
            }
        }
    }

    /// Decodes frame `index` with interleaved colour.
    pub fn read_raw(&self, index: usize, with_gt: bool) -> Result<RawFrame> {
        let entry = self.manifest.frames.get(index).ok_or_else(|| Error::Frame {
            index,
            path: self.root.clone(),
            reason: "no such frame".into(),
        })?;
        let frame_err = |path: &Path, e: Error| Error::Frame {
            index,
            path: path.into(),
            reason: e.to_string(),
        };
        let mut dims = self.dims;

        let color_path = self.resolve(&entry.color);
        let (w, h, rgb) = read_color_png(&color_path).map_err(|e| frame_err(&color_path, e))?;
        self.check(index, &color_path, (w, h), &mut dims)?;

        let depth_path = self.resolve(&entry.depth);
        let (dw, dh, depth) = read_depth_png(&depth_path).map_err(|e| frame_err(&depth_path, e))?;
        // unregistered depth lives in its own grid
        if self.manifest.registered {
            self.check(index, &depth_path, (dw, dh), &mut dims)?;
        }

        let gt = match (&entry.gt, with_gt) {
            (Some(gt), true) => {
                let gt_path = self.resolve(gt);
                let mask = read_mask_png(&gt_path).map_err(|e| frame_err(&gt_path, e))?;
                self.check(index, &gt_path, mask.dims(), &mut dims)?;
                Some(mask)
            }
            _ => None,
        };

        Ok(RawFrame {
            index,
            width: w,
            height: h,
            rgb,
            depth,
            depth_dims: (dw, dh),
            depth_scale: self.manifest.depth_scale as f32,
            gt,
        })
    }

    /// Colour and depth grid sizes (from frame 0) plus the rig when depth is unregistered.
    pub fn geometry(&self) -> Result<StreamGeometry> {
        let f = self.read_raw(0, false)?;
        Ok(StreamGeometry {
            color_dims: (f.width, f.height),
            depth_dims: f.depth_dims,
            rig: if self.manifest.registered { None } else { self.manifest.rig() },
        })
    }

    /// Decodes frame `index` into planar layout, including ground truth.
    pub fn read(&self, index: usize) -> Result<FrameSet> {
        self.read_raw(index, true)?.into_frame_set()
    }

    pub fn ground_truth(&self, index: usize) -> Result<crate::mask::ForegroundMask> {
        let entry = &self.manifest.frames[index];
        let gt = entry.gt.as_ref().ok_or_else(|| Error::Frame {
            index,
            path: self.root.clone(),
            reason: "no ground truth listed".into(),
        })?;
        let path = self.resolve(gt);
        read_mask_png(&path).map_err(|e| Error::Frame {
            index,
            path,
            reason: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::io::{save_mask, write_color_png, write_depth_png};
    use crate::mask::ForegroundMask;

    fn write_seq(dir: &Path, n: usize, depth_scale: f64) -> PathBuf {
        let mut frames = Vec::new();
        for i in 0..n {
            let c = format!("c{i}.png");
            let d = format!("d{i}.png");
            let g = format!("g{i}.png");
            write_color_png(&dir.join(&c), 4, 3, &[i as u8; 36]).unwrap();
            write_depth_png(&dir.join(&d), 4, 3, &[1000; 12]).unwrap();
            save_mask(&ForegroundMask::new(4, 3), dir.join(&g)).unwrap();
            frames.push(FrameEntry {
                index: i,
                color: c,
                depth: d,
                gt: Some(g),
            });
        }
        let m = SequenceManifest {
            name: "t".into(),
            frame_count: n,
            width: Some(4),
            height: Some(3),
            depth_scale,
            registered: true,
            frames,
            calibration: None,
        };
        let path = dir.join("manifest.json");
        m.write(&path).unwrap();
        path
    }

    #[test]
    fn yields_frames_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_seq(dir.path(), 3, 1.0);
        let frames: Vec<_> = load_sequence(&path).unwrap().collect::<Result<_>>().unwrap();
        assert_eq!(frames.iter().map(|f| f.index).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(frames[2].color.plane(1)[0], 2);
        assert_eq!(frames[0].depth_mm(0), Some(1000.0));
        assert!(frames[0].gt.is_some());
    }

    #[test]
    fn depth_scale_applies() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_seq(dir.path(), 1, 0.5);
        let f = SequenceReader::open(&path).unwrap().read(0).unwrap();
        assert_eq!(f.depth_mm(3), Some(500.0));
    }

    #[test]
    fn missing_frame_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_seq(dir.path(), 3, 1.0);
        std::fs::remove_file(dir.path().join("d1.png")).unwrap();
        let err = SequenceReader::open(&path).unwrap_err();
        assert!(matches!(err, Error::Frame { index: 1, .. }), "{err}");
        assert!(err.to_string().starts_with("frame 1:"));
    }

    #[test]
    fn dimension_mismatch_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_seq(dir.path(), 3, 1.0);
        write_color_png(&dir.path().join("c2.png"), 2, 2, &[0; 12]).unwrap();
        let reader = SequenceReader::open(&path).unwrap();
        reader.read(1).unwrap();
        assert!(matches!(reader.read(2), Err(Error::Frame { index: 2, .. })));
    }

    #[test]
    fn malformed_manifests() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_seq(dir.path(), 2, 1.0);
        let text = std::fs::read_to_string(&path).unwrap();
        let mut m: SequenceManifest = serde_json::from_str(&text).unwrap();

        m.frame_count = 3;
        m.write(&path).unwrap();
        assert!(matches!(SequenceReader::open(&path), Err(Error::Manifest { .. })));

        m.frame_count = 2;
        m.frames[1].index = 5;
        m.write(&path).unwrap();
        assert!(matches!(SequenceReader::open(&path), Err(Error::Manifest { .. })));

        std::fs::write(&path, "{ not json").unwrap();
        assert!(matches!(SequenceReader::open(&path), Err(Error::Json { .. })));
    }

    #[test]
    fn calibration_schema() {
        let json = r#"{
            "name": "cal", "frame_count": 0, "depth_scale": 1.0, "registered": false, "frames": [],
            "calibration": {
                "depth": {"fx": 570.0, "fy": 570.0, "cx": 320.0, "cy": 240.0},
                "color": {"fx": 525.0, "fy": 525.0, "cx": 319.5, "cy": 239.5},
                "rotation": [1,0,0, 0,1,0, 0,0,1],
                "translation_mm": [25.0, 0.0, 0.0]
            }
        }"#;
        let m: SequenceManifest = serde_json::from_str(json).unwrap();
        let rig = m.rig().unwrap();
        assert_eq!(rig.translation_mm, [25.0, 0.0, 0.0]);
        assert_eq!(rig.color.cx, 319.5);
    }
}
