//! Scalar volumes, slices, label volumes and the CVOL on-disk format.
//!
//! A CVOL item is a JSON sidecar `<name>.json` plus a raw little-endian
//! payload `<name>.raw`, voxels in x-fastest order:
//!
//! ```json
//! {"dims":[nx,ny,nz],"spacing":[sx,sy,sz],"dtype":"f32","order":"x-fastest","endian":"little"}
//! ```
//!
//! Intensity volumes are stored as `f32`, masks as `u8`. A cine sequence is a
//! directory of volumes named `frame_000`, `frame_001`, ...

use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid2, LabelMask};

#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: [usize; 3],
    spacing: [f64; 3],
    voxels: Vec<f32>,
    frame_index: Option<u32>,
}

impl Volume {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], voxels: Vec<f32>) -> Result<Self> {
        let v = Self {
            dims,
            spacing,
            voxels,
            frame_index: None,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn zeros(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        Self::new(dims, spacing, vec![0.0; dims.iter().product()])
    }

    pub fn with_frame_index(mut self, frame: u32) -> Self {
        self.frame_index = Some(frame);
        self
    }

    pub fn with_spacing(mut self, spacing: [f64; 3]) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "volume dims must be positive, got {:?}",
                self.dims
            )));
        }
        if self.spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "volume spacing must be positive, got {:?}",
                self.spacing
            )));
        }
        let expected: usize = self.dims.iter().product();
        if self.voxels.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "dims {:?} need {expected} voxels, got {}",
                self.dims,
                self.voxels.len()
            )));
        }
        if let Some(i) = self.voxels.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite intensity at voxel {i}"
            )));
        }
        Ok(())
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn nz(&self) -> usize {
        self.dims[2]
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn frame_index(&self) -> Option<u32> {
        self.frame_index
    }

    pub fn voxels(&self) -> &[f32] {
        &self.voxels
    }

    pub fn voxels_mut(&mut self) -> &mut [f32] {
        &mut self.voxels
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.dims[1] + y) * self.dims[0] + x
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.voxels[self.index(x, y, z)]
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.voxels
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn extract_slice(&self, z: usize) -> Result<Slice> {
        if z >= self.dims[2] {
            return Err(Error::IndexOutOfRange {
                index: z,
                len: self.dims[2],
            });
        }
        let plane = self.dims[0] * self.dims[1];
        let pixels = self.voxels[z * plane..(z + 1) * plane]
            .iter()
            .map(|&v| f64::from(v))
            .collect();
        Ok(Slice {
            pixels: Grid2::from_vec(self.dims[0], self.dims[1], pixels)?,
            z_index: z,
        })
    }

    pub fn replace_slice(&self, z: usize, s: &Slice) -> Result<Volume> {
        let mut out = self.clone();
        out.replace_slice_in_place(z, s)?;
        Ok(out)
    }

    pub fn replace_slice_in_place(&mut self, z: usize, s: &Slice) -> Result<()> {
        if z >= self.dims[2] {
            return Err(Error::IndexOutOfRange {
                index: z,
                len: self.dims[2],
            });
        }
        if s.pixels.dims() != (self.dims[0], self.dims[1]) {
            return Err(Error::DimensionMismatch(format!(
                "slice {:?} into volume {:?}",
                s.pixels.dims(),
                self.dims
            )));
        }
        let plane = self.dims[0] * self.dims[1];
        for (dst, &src) in self.voxels[z * plane..(z + 1) * plane]
            .iter_mut()
            .zip(s.pixels.data())
        {
            *dst = src as f32;
        }
        Ok(())
    }

    /// Sub-volume `[x0, x0+w) × [y0, y0+h)` over all slices.
    pub fn crop_xy(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Volume> {
        if w == 0 || h == 0 || x0 + w > self.dims[0] || y0 + h > self.dims[1] {
            return Err(Error::InvalidArgument(format!(
                "crop ({x0},{y0},{w},{h}) outside {:?}",
                self.dims
            )));
        }
        let mut voxels = Vec::with_capacity(w * h * self.dims[2]);
        for z in 0..self.dims[2] {
            for y in y0..y0 + h {
                let start = self.index(x0, y, z);
                voxels.extend_from_slice(&self.voxels[start..start + w]);
            }
        }
        Ok(Volume {
            dims: [w, h, self.dims[2]],
            spacing: self.spacing,
            voxels,
            frame_index: self.frame_index,
        })
    }
}

/// One z-plane of a volume in `f64`, the unit of all slice-wise processing.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub pixels: Grid2<f64>,
    pub z_index: usize,
}

impl Slice {
    pub fn new(pixels: Grid2<f64>, z_index: usize) -> Self {
        Self { pixels, z_index }
    }
}

/// Affine rescale of a slice to `[0, 255]`.
pub fn normalize_slice(s: &Slice) -> Result<Slice> {
    let (lo, hi) = s
        .pixels
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !(hi > lo) {
        return Err(Error::Degenerate(format!(
            "slice {} has no dynamic range",
            s.z_index
        )));
    }
    let scale = 255.0 / (hi - lo);
    Ok(Slice {
        pixels: s.pixels.map(|&v| (v - lo) * scale),
        z_index: s.z_index,
    })
}

/// Normalizes every slice of `v`; constant slices are left as they are.
pub fn normalize_volume(v: &Volume) -> Result<Volume> {
    let mut out = v.clone();
    for z in 0..v.nz() {
        let s = v.extract_slice(z)?;
        match normalize_slice(&s) {
            Ok(n) => out.replace_slice_in_place(z, &n)?,
            Err(Error::Degenerate(msg)) => warn!("skipping normalization: {msg}"),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Stack of binary slice labelings, stored as `u8` in {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskVolume {
    dims: [usize; 3],
    labels: Vec<u8>,
}

impl MaskVolume {
    pub fn empty(dims: [usize; 3]) -> Self {
        Self {
            dims,
            labels: vec![0; dims.iter().product()],
        }
    }

    pub fn new(dims: [usize; 3], labels: Vec<u8>) -> Result<Self> {
        if labels.len() != dims.iter().product::<usize>() {
            return Err(Error::DimensionMismatch(format!(
                "mask dims {dims:?} vs {} labels",
                labels.len()
            )));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidArgument("mask values must be 0 or 1".into()));
        }
        Ok(Self { dims, labels })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn slice(&self, z: usize) -> LabelMask {
        let plane = self.dims[0] * self.dims[1];
        let data = self.labels[z * plane..(z + 1) * plane]
            .iter()
            .map(|&l| l == 1)
            .collect();
        Grid2::from_vec(self.dims[0], self.dims[1], data).expect("plane size")
    }

    pub fn set_slice(&mut self, z: usize, m: &LabelMask) {
        assert_eq!(m.dims(), (self.dims[0], self.dims[1]), "slice dims");
        let plane = self.dims[0] * self.dims[1];
        for (dst, &src) in self.labels[z * plane..(z + 1) * plane]
            .iter_mut()
            .zip(m.data())
        {
            *dst = u8::from(src);
        }
    }

    /// Pastes `self` into a larger zeroed mask at offset `(x0, y0)`.
    pub fn embed(&self, full_dims: [usize; 3], x0: usize, y0: usize) -> Result<MaskVolume> {
        if full_dims[2] != self.dims[2]
            || x0 + self.dims[0] > full_dims[0]
            || y0 + self.dims[1] > full_dims[1]
        {
            return Err(Error::DimensionMismatch(format!(
                "cannot embed {:?} at ({x0},{y0}) into {full_dims:?}",
                self.dims
            )));
        }
        let mut out = MaskVolume::empty(full_dims);
        for z in 0..self.dims[2] {
            for y in 0..self.dims[1] {
                let src = (z * self.dims[1] + y) * self.dims[0];
                let dst = (z * full_dims[1] + y + y0) * full_dims[0] + x0;
                out.labels[dst..dst + self.dims[0]]
                    .copy_from_slice(&self.labels[src..src + self.dims[0]]);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    U8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Sidecar {
    dims: [usize; 3],
    spacing: [f64; 3],
    dtype: Dtype,
    order: String,
    endian: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frame_index: Option<u32>,
}

fn cvol_paths(path: &Path) -> (PathBuf, PathBuf) {
    (path.with_extension("json"), path.with_extension("raw"))
}

fn read_sidecar(json: &Path) -> Result<Sidecar> {
    let text = fs::read_to_string(json).map_err(|e| Error::io(json, e))?;
    let sc: Sidecar =
        serde_json::from_str(&text).map_err(|e| Error::format(json, e.to_string()))?;
    if sc.order != "x-fastest" {
        return Err(Error::format(json, format!("unsupported order `{}`", sc.order)));
    }
    if sc.endian != "little" {
        return Err(Error::format(json, format!("unsupported endian `{}`", sc.endian)));
    }
    if sc.dims.contains(&0) {
        return Err(Error::format(json, "zero-sized dims"));
    }
    Ok(sc)
}

fn read_payload(raw: &Path, sc: &Sidecar) -> Result<Vec<u8>> {
    let bytes = fs::read(raw).map_err(|e| Error::io(raw, e))?;
    let width = match sc.dtype {
        Dtype::F32 => 4,
        Dtype::U8 => 1,
    };
    let expected = sc.dims.iter().product::<usize>() * width;
    if bytes.len() != expected {
        return Err(Error::Integrity {
            path: raw.to_path_buf(),
            reason: format!(
                "payload has {} bytes, sidecar dims {:?} need {expected}",
                bytes.len(),
                sc.dims
            ),
        });
    }
    Ok(bytes)
}

fn write_cvol(path: &Path, sc: &Sidecar, payload: &[u8]) -> Result<()> {
    let (json, raw) = cvol_paths(path);
    let text = serde_json::to_string(sc).expect("sidecar serializes");
    fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
    fs::write(&raw, payload).map_err(|e| Error::io(&raw, e))?;
    Ok(())
}

/// Reads a CVOL volume. `path` may carry either extension or none.
pub fn load_volume(path: impl AsRef<Path>) -> Result<Volume> {
    let (json, raw) = cvol_paths(path.as_ref());
    let sc = read_sidecar(&json)?;
    let bytes = read_payload(&raw, &sc)?;
    let voxels: Vec<f32> = match sc.dtype {
        Dtype::F32 => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect(),
        Dtype::U8 => bytes.iter().map(|&b| f32::from(b)).collect(),
    };
    let v = Volume {
        dims: sc.dims,
        spacing: sc.spacing,
        voxels,
        frame_index: sc.frame_index,
    };
    v.validate().map_err(|e| Error::format(&json, e.to_string()))?;
    Ok(v)
}

pub fn save_volume(v: &Volume, path: impl AsRef<Path>) -> Result<()> {
    v.validate()?;
    let sc = Sidecar {
        dims: v.dims,
        spacing: v.spacing,
        dtype: Dtype::F32,
        order: "x-fastest".into(),
        endian: "little".into(),
        frame_index: v.frame_index,
    };
    let payload: Vec<u8> = v.voxels.iter().flat_map(|x| x.to_le_bytes()).collect();
    write_cvol(path.as_ref(), &sc, &payload)
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<MaskVolume> {
    let (json, raw) = cvol_paths(path.as_ref());
    let sc = read_sidecar(&json)?;
    if sc.dtype != Dtype::U8 {
        return Err(Error::format(&json, "mask volumes must have dtype u8"));
    }
    let bytes = read_payload(&raw, &sc)?;
    MaskVolume::new(sc.dims, bytes).map_err(|e| Error::format(&json, e.to_string()))
}

pub fn save_mask(m: &MaskVolume, spacing: [f64; 3], path: impl AsRef<Path>) -> Result<()> {
    let sc = Sidecar {
        dims: m.dims,
        spacing,
        dtype: Dtype::U8,
        order: "x-fastest".into(),
        endian: "little".into(),
        frame_index: None,
    };
    write_cvol(path.as_ref(), &sc, &m.labels)
}

pub fn frame_name(i: usize) -> String {
    format!("frame_{i:03}")
}

/// Loads `frame_000`, `frame_001`, ... until the first missing index.
pub fn load_cine(dir: impl AsRef<Path>) -> Result<Vec<Volume>> {
    let dir = dir.as_ref();
    let mut frames = Vec::new();
    loop {
        let stem = dir.join(frame_name(frames.len()));
        if !stem.with_extension("json").exists() {
            break;
        }
        frames.push(load_volume(&stem)?);
    }
    if frames.is_empty() {
        return Err(Error::format(dir, "no frame_000.json in cine directory"));
    }
    Ok(frames)
}

pub fn save_cine(frames: &[Volume], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, f) in frames.iter().enumerate() {
        save_volume(f, dir.join(frame_name(i)))?;
    }
    Ok(())
}
