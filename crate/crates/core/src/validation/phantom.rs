//! Synthetic short-axis cine stacks with known blood pool and myocardium.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::atlas::AtlasSubject;
use crate::error::{Error, Result};
use crate::volume::{save_cine, save_mask, MaskVolume, Volume};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomIntensities {
    pub bp: f64,
    pub myo: f64,
    /// Tissue surrounding the heart.
    pub bg1: f64,
    /// Right-ventricle-like crescent.
    pub bg2: f64,
}

impl Default for PhantomIntensities {
    fn default() -> Self {
        Self {
            bp: 200.0,
            myo: 80.0,
            bg1: 30.0,
            bg2: 170.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomSpec {
    pub nx: usize,
    pub ny: usize,
    pub n_slices: usize,
    pub spacing: [f64; 3],
    /// LV centre in pixels.
    pub center: [f64; 2],
    /// Blood pool radius at the base (z = 0), tapering linearly to `bp_radius_apex`.
    pub bp_radius_base: f64,
    pub bp_radius_apex: f64,
    pub myo_thickness: f64,
    pub intensities: PhantomIntensities,
    pub noise_sigma: f64,
    /// Per-slice intensity offsets are drawn uniformly from `±slice_offset`.
    pub slice_offset: f64,
    /// Per-slice in-plane centre jitter, uniform in `±jitter` pixels.
    pub jitter: f64,
    pub n_frames: usize,
    /// Fractional blood-pool radius reduction at end-systole.
    pub motion_amplitude: f64,
    /// Seeds the noise only.
    pub seed: u64,
    /// Seeds per-slice offsets and jitter, so changing `seed` leaves the
    /// geometry untouched.
    pub geometry_seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            nx: 128,
            ny: 128,
            n_slices: 12,
            spacing: [1.5, 1.5, 8.0],
            center: [64.0, 64.0],
            bp_radius_base: 22.0,
            bp_radius_apex: 10.0,
            myo_thickness: 7.5,
            intensities: PhantomIntensities::default(),
            noise_sigma: 10.0,
            slice_offset: 15.0,
            jitter: 0.5,
            n_frames: 4,
            motion_amplitude: 0.3,
            seed: 1,
            geometry_seed: 1,
        }
    }
}

/// Cine frames plus end-diastolic truth (frame 0).
#[derive(Debug, Clone)]
pub struct Phantom {
    pub frames: Vec<Volume>,
    pub gt_bp: MaskVolume,
    pub gt_myo: MaskVolume,
}

impl Phantom {
    pub fn end_diastole(&self) -> &Volume {
        &self.frames[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tissue {
    Bp,
    Myo,
    Rv,
    Background,
}

#[derive(Debug, Clone, Copy)]
struct SliceGeometry {
    cx: f64,
    cy: f64,
    r_bp: f64,
    r_epi: f64,
}

impl SliceGeometry {
    fn tissue(&self, x: f64, y: f64) -> Tissue {
        let r = (x - self.cx).hypot(y - self.cy);
        if r <= self.r_bp {
            return Tissue::Bp;
        }
        if r <= self.r_epi {
            return Tissue::Myo;
        }
        // Crescent hugging the septal side, separated by a 2-pixel gap.
        let rv_cx = self.cx - 0.6 * self.r_epi;
        let r_rv = (x - rv_cx).hypot(y - self.cy);
        if r_rv <= 1.1 * self.r_epi && r > self.r_epi + 2.0 {
            return Tissue::Rv;
        }
        Tissue::Background
    }

    /// Bounding half-widths (left, right, vertical) of all drawn structures.
    fn extent(&self) -> (f64, f64, f64) {
        (1.7 * self.r_epi, self.r_epi, 1.1 * self.r_epi)
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("phantom spec: {m}")));
        if self.nx == 0 || self.ny == 0 || self.n_slices == 0 || self.n_frames == 0 {
            return bad("dims, n_slices and n_frames must be positive".into());
        }
        if self.spacing.iter().any(|s| !(*s > 0.0)) {
            return bad("spacing must be positive".into());
        }
        if !(self.bp_radius_base > 0.0 && self.bp_radius_apex > 0.0) {
            return bad("blood pool radius must be positive".into());
        }
        if !(self.myo_thickness >= 2.0) {
            return bad(format!("myo_thickness {} < 2", self.myo_thickness));
        }
        if !(self.noise_sigma >= 0.0 && self.slice_offset >= 0.0 && self.jitter >= 0.0) {
            return bad("noise, offsets and jitter must be >= 0".into());
        }
        if !(0.0..0.9).contains(&self.motion_amplitude) {
            return bad("motion_amplitude must lie in [0, 0.9)".into());
        }
        for z in 0..self.n_slices {
            let (left, right, vert) = self.geometry(z, 0, 0.0, 0.0).extent();
            let (cx, cy) = (self.center[0], self.center[1]);
            let j = self.jitter;
            if cx - left - j < 0.0
                || cx + right + j > (self.nx - 1) as f64
                || cy - vert - j < 0.0
                || cy + vert + j > (self.ny - 1) as f64
            {
                return bad(format!("slice {z} geometry exceeds the {}x{} frame", self.nx, self.ny));
            }
        }
        Ok(())
    }

    pub fn bp_radius(&self, z: usize) -> f64 {
        if self.n_slices == 1 {
            return self.bp_radius_base;
        }
        let t = z as f64 / (self.n_slices - 1) as f64;
        self.bp_radius_base + t * (self.bp_radius_apex - self.bp_radius_base)
    }

    fn frame_scale(&self, frame: usize) -> f64 {
        let phase = 2.0 * std::f64::consts::PI * frame as f64 / self.n_frames as f64;
        1.0 - self.motion_amplitude * (1.0 - phase.cos()) / 2.0
    }

    fn geometry(&self, z: usize, frame: usize, dx: f64, dy: f64) -> SliceGeometry {
        let r_bp = self.bp_radius(z) * self.frame_scale(frame);
        SliceGeometry {
            cx: self.center[0] + dx,
            cy: self.center[1] + dy,
            r_bp,
            r_epi: r_bp + self.myo_thickness,
        }
    }

    /// A copy with the LV shifted and its radii scaled, for atlas subjects.
    pub fn varied(&self, shift: [f64; 2], radius_scale: f64, seed: u64) -> PhantomSpec {
        let mut s = self.clone();
        s.center = [self.center[0] + shift[0], self.center[1] + shift[1]];
        s.bp_radius_base *= radius_scale;
        s.bp_radius_apex *= radius_scale;
        s.seed = seed;
        s.geometry_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
        s
    }
}

/// `n` specs with centre shifts within ±3 px and radius scales in
/// [0.95, 1.05], drawn from `seed`.
pub fn subject_specs(base: &PhantomSpec, n: usize, seed: u64) -> Vec<PhantomSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let shift = [rng.random_range(-3.0..=3.0), rng.random_range(-3.0..=3.0)];
            let scale = rng.random_range(0.95..=1.05);
            base.varied(shift, scale, seed.wrapping_add(1000 + i as u64))
        })
        .collect()
}

pub fn generate_phantom(spec: &PhantomSpec) -> Result<Phantom> {
    spec.validate()?;
    let (nx, ny, nz) = (spec.nx, spec.ny, spec.n_slices);
    let dims = [nx, ny, nz];

    let mut geo_rng = ChaCha8Rng::seed_from_u64(spec.geometry_seed);
    let per_slice: Vec<(f64, f64, f64)> = (0..nz)
        .map(|_| {
            let offset = if spec.slice_offset > 0.0 {
                geo_rng.random_range(-spec.slice_offset..=spec.slice_offset)
            } else {
                0.0
            };
            let (dx, dy) = if spec.jitter > 0.0 {
                (
                    geo_rng.random_range(-spec.jitter..=spec.jitter),
                    geo_rng.random_range(-spec.jitter..=spec.jitter),
                )
            } else {
                (0.0, 0.0)
            };
            (offset, dx, dy)
        })
        .collect();

    let noise = Normal::new(0.0, spec.noise_sigma.max(0.0))
        .map_err(|e| Error::Config(format!("phantom noise: {e}")))?;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut gt_bp = vec![0u8; nx * ny * nz];
    let mut gt_myo = vec![0u8; nx * ny * nz];
    let mut frames = Vec::with_capacity(spec.n_frames);
    let iv = &spec.intensities;
    for f in 0..spec.n_frames {
        let mut vox = Vec::with_capacity(nx * ny * nz);
        for (z, &(offset, dx, dy)) in per_slice.iter().enumerate() {
            let g = spec.geometry(z, f, dx, dy);
            for y in 0..ny {
                for x in 0..nx {
                    let t = g.tissue(x as f64, y as f64);
                    if f == 0 {
                        let i = (z * ny + y) * nx + x;
                        gt_bp[i] = u8::from(t == Tissue::Bp);
                        gt_myo[i] = u8::from(t == Tissue::Myo);
                    }
                    let base = match t {
                        Tissue::Bp => iv.bp,
                        Tissue::Myo => iv.myo,
                        Tissue::Rv => iv.bg2,
                        Tissue::Background => iv.bg1,
                    };
                    let n = if spec.noise_sigma > 0.0 {
                        noise.sample(&mut noise_rng)
                    } else {
                        0.0
                    };
                    vox.push((base + offset + n) as f32);
                }
            }
        }
        frames.push(Volume::new(dims, spec.spacing, vox)?.with_frame_index(f as u32));
    }
    Ok(Phantom {
        frames,
        gt_bp: MaskVolume::new(dims, gt_bp)?,
        gt_myo: MaskVolume::new(dims, gt_myo)?,
    })
}

/// Writes `cine/frame_###`, `gt_bp`, `gt_myo` and `spec.json` under `dir`.
pub fn write_phantom(p: &Phantom, spec: &PhantomSpec, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_cine(&p.frames, dir.join("cine"))?;
    save_mask(&p.gt_bp, spec.spacing, dir.join("gt_bp"))?;
    save_mask(&p.gt_myo, spec.spacing, dir.join("gt_myo"))?;
    let path = dir.join("spec.json");
    let text = serde_json::to_string_pretty(spec).expect("spec serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// End-diastolic volumes and myocardium labels of generated phantoms, ready
/// for atlas building. Ids are `subject_00`, `subject_01`, ...
pub fn phantom_subjects(specs: &[PhantomSpec]) -> Result<Vec<AtlasSubject>> {
    specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let p = generate_phantom(spec)?;
            Ok(AtlasSubject {
                id: format!("subject_{i:02}"),
                volume: p.frames.into_iter().next().expect("at least one frame"),
                labels: p.gt_myo,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_values_are_exact() {
        let spec = PhantomSpec {
            noise_sigma: 0.0,
            slice_offset: 0.0,
            n_frames: 1,
            ..Default::default()
        };
        let p = generate_phantom(&spec).unwrap();
        let mut allowed = [200.0f32, 80.0, 30.0, 170.0];
        allowed.sort_by(f32::total_cmp);
        for &v in p.frames[0].voxels() {
            assert!(allowed.contains(&v), "unexpected value {v}");
        }
    }

    #[test]
    fn bp_area_matches_disk() {
        let spec = PhantomSpec::default();
        let p = generate_phantom(&spec).unwrap();
        for z in 0..spec.n_slices {
            let area = p.gt_bp.slice(z).count() as f64;
            let r = spec.bp_radius(z);
            let disk = std::f64::consts::PI * r * r;
            assert!((area - disk).abs() / disk < 0.03, "z={z}: {area} vs {disk}");
        }
    }

    #[test]
    fn seed_changes_noise_only() {
        let a = generate_phantom(&PhantomSpec::default()).unwrap();
        let b = generate_phantom(&PhantomSpec {
            seed: 99,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(a.gt_bp, b.gt_bp);
        assert_eq!(a.gt_myo, b.gt_myo);
        assert_ne!(a.frames[0].voxels(), b.frames[0].voxels());
    }

    #[test]
    fn oversize_geometry_is_rejected() {
        let spec = PhantomSpec {
            bp_radius_base: 60.0,
            ..Default::default()
        };
        assert!(matches!(generate_phantom(&spec), Err(Error::Config(_))));
    }
}
