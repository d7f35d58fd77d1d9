use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::optimizer::{nelder_mead, NelderMeadOptions};
use super::resample::{Image3, Interpolation};
use super::transform::{AffineDof, AffineTransform};

/// Axis-aligned voxel box, `min` inclusive and `max` exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionBox {
    pub min: [usize; 3],
    pub max: [usize; 3],
}

impl RegionBox {
    pub fn full(dims: [usize; 3]) -> Self {
        Self {
            min: [0; 3],
            max: dims,
        }
    }

    /// Bounding box of a 2D pixel rectangle (inclusive corners) grown by
    /// `margin` and clipped to `dims`.
    pub fn around_2d(bbox: (usize, usize, usize, usize), margin: usize, dims: [usize; 3]) -> Self {
        let (x0, y0, x1, y1) = bbox;
        Self {
            min: [x0.saturating_sub(margin), y0.saturating_sub(margin), 0],
            max: [
                (x1 + 1 + margin).min(dims[0]),
                (y1 + 1 + margin).min(dims[1]),
                dims[2],
            ],
        }
    }

    fn clipped(&self, dims: [usize; 3]) -> Self {
        let mut b = *self;
        for a in 0..3 {
            b.max[a] = b.max[a].min(dims[a]);
            b.min[a] = b.min[a].min(b.max[a]);
        }
        b
    }

    fn halved_xy(&self) -> Self {
        Self {
            min: [self.min[0] / 2, self.min[1] / 2, self.min[2]],
            max: [self.max[0].div_ceil(2), self.max[1].div_ceil(2), self.max[2]],
        }
    }

    pub fn len(&self) -> usize {
        (0..3).map(|a| self.max[a].saturating_sub(self.min[a])).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Mean squared difference between `fixed` and `moving` resampled through
/// `t` (`moving(t⁻¹ p)`), over the fixed grid or a box of it.
pub fn ssd(fixed: &Image3, moving: &Image3, t: &AffineTransform, region: Option<RegionBox>) -> Result<f64> {
    let inv = t.inverse()?;
    Ok(ssd_with_inverse(fixed, moving, &inv, region))
}

fn ssd_with_inverse(fixed: &Image3, moving: &Image3, inv: &AffineTransform, region: Option<RegionBox>) -> f64 {
    let b = region.unwrap_or_else(|| RegionBox::full(fixed.dims)).clipped(fixed.dims);
    let n = b.len();
    if n == 0 {
        return 0.0;
    }
    let [nx, ny, _] = fixed.dims;
    let mut acc = 0.0;
    for z in b.min[2]..b.max[2] {
        for y in b.min[1]..b.max[1] {
            let row = (z * ny + y) * nx;
            let p0 = inv.apply([b.min[0] as f64, y as f64, z as f64]);
            let p1 = inv.apply([b.min[0] as f64 + 1.0, y as f64, z as f64]);
            let step = [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]];
            for (k, x) in (b.min[0]..b.max[0]).enumerate() {
                let k = k as f64;
                let p = [p0[0] + k * step[0], p0[1] + k * step[1], p0[2] + k * step[2]];
                let d = fixed.data[row + x] - moving.sample(p, Interpolation::Linear);
                acc += d * d;
            }
        }
    }
    acc / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegistrationOptions {
    pub dof: AffineDof,
    /// Initial simplex step for translation entries, in full-resolution pixels.
    pub translation_step: f64,
    /// Initial simplex step for entries of the linear part.
    pub linear_step: f64,
    /// 1 = full resolution only, 2 = half then full.
    pub levels: usize,
    /// Simplex step multiplier at the full level when a coarser level ran first.
    pub refine_step_scale: f64,
    pub max_iterations: usize,
    pub f_tol: f64,
    pub x_tol: Option<f64>,
}

impl Default for RegistrationOptions {
    fn default() -> Self {
        Self {
            dof: AffineDof::Full,
            translation_step: 2.0,
            linear_step: 0.05,
            levels: 2,
            refine_step_scale: 0.25,
            max_iterations: 2000,
            f_tol: 1e-8,
            x_tol: Some(1e-2),
        }
    }
}

impl RegistrationOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.translation_step > 0.0 && self.linear_step > 0.0 && self.refine_step_scale > 0.0) {
            return Err(Error::Config("registration steps must be positive".into()));
        }
        if self.levels == 0 || self.levels > 2 {
            return Err(Error::Config(format!(
                "registration levels must be 1 or 2, got {}",
                self.levels
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("registration max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationResult {
    pub transform: AffineTransform,
    pub final_metric: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Smallest in-plane size at which a half-resolution level is still used.
const MIN_PYRAMID_SIDE: usize = 16;

fn steps(t: &AffineTransform, dof: AffineDof, translation: f64, linear: f64) -> Vec<f64> {
    let n = t.param_count(dof);
    let block = if n == 12 { 3 } else { 2 };
    (0..n)
        .map(|i| if i < block * block { linear } else { translation })
        .collect()
}

fn optimize_level(
    fixed: &Image3,
    moving: &Image3,
    init: &AffineTransform,
    region: Option<RegionBox>,
    translation_step: f64,
    linear_step: f64,
    opts: &RegistrationOptions,
) -> Result<(AffineTransform, f64, usize, bool)> {
    let dof = opts.dof;
    let scale = steps(init, dof, translation_step, linear_step);
    let x0 = vec![0.0; scale.len()];
    let nm = NelderMeadOptions {
        max_iterations: opts.max_iterations,
        f_tol: opts.f_tol,
        x_tol: opts.x_tol,
    };
    let r = nelder_mead(
        |p| {
            let t = init.perturbed(p, dof);
            match t.inverse() {
                Ok(inv) => ssd_with_inverse(fixed, moving, &inv, region),
                // Singular candidates are simply very bad.
                Err(_) => f64::MAX,
            }
        },
        &x0,
        &scale,
        &nm,
    )?;
    Ok((init.perturbed(&r.x, dof), r.f, r.iterations, r.converged))
}

/// Finds the affine `t` minimizing `ssd(fixed, moving, t)`, starting at `init`.
///
/// The optimizer varies perturbations of `init`. With two levels the search
/// first runs on 2x in-plane downsampled images, then refines at full
/// resolution with smaller simplex steps.
pub fn register_affine(
    fixed: &Image3,
    moving: &Image3,
    init: &AffineTransform,
    region: Option<RegionBox>,
    opts: &RegistrationOptions,
) -> Result<RegistrationResult> {
    opts.validate()?;
    if init.dim() == 2 && (fixed.dims[2] != 1 || moving.dims[2] != 1) {
        return Err(Error::DimensionMismatch("2D registration needs single-slice images".into()));
    }
    let mut current = init.clone();
    let mut iterations = 0;
    let mut t_step = opts.translation_step;
    let mut l_step = opts.linear_step;

    let use_pyramid = opts.levels == 2
        && fixed.dims[0].min(fixed.dims[1]) >= MIN_PYRAMID_SIDE
        && moving.dims[0].min(moving.dims[1]) >= MIN_PYRAMID_SIDE;
    if use_pyramid {
        let half_fixed = fixed.downsample_xy();
        let half_moving = moving.downsample_xy();
        // Half-level voxel u covers full-level x = 2u + 0.5.
        let to_half = |t: &AffineTransform| t.in_scaled_coordinates([0.5, 0.5, 1.0], [0.5, 0.5, 0.0]);
        let half_init = to_half(&current);
        let (t_half, f_half, it, _) = optimize_level(
            &half_fixed,
            &half_moving,
            &half_init,
            region.map(|r| r.halved_xy()),
            opts.translation_step / 2.0,
            opts.linear_step,
            opts,
        )?;
        debug!("coarse level: metric {f_half:.6} after {it} iterations");
        iterations += it;
        current = t_half.in_scaled_coordinates([2.0, 2.0, 1.0], [-0.25, -0.25, 0.0]);
        t_step *= opts.refine_step_scale;
        l_step *= opts.refine_step_scale;
    }
    let (t, f, it, converged) = optimize_level(fixed, moving, &current, region, t_step, l_step, opts)?;
    debug!("full level: metric {f:.6} after {it} iterations");
    iterations += it;
    Ok(RegistrationResult {
        transform: t,
        final_metric: f.max(0.0),
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::super::resample::resample;
    use super::*;

    fn blob(n: usize) -> Image3 {
        let c = (n as f64 - 1.0) / 2.0;
        let mut data = Vec::new();
        for y in 0..n {
            for x in 0..n {
                let dx = x as f64 - c - 2.0;
                let dy = y as f64 - c + 1.0;
                let r = (dx * dx / 90.0 + dy * dy / 40.0).sqrt();
                data.push(200.0 / (1.0 + (4.0 * (r - 1.0)).exp()) + 40.0 * (x as f64 / n as f64));
            }
        }
        Image3::new([n, n, 1], data)
    }

    #[test]
    fn ssd_examples() {
        let a = Image3::new([2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]);
        let id = AffineTransform::identity(2, a.center());
        assert_eq!(ssd(&a, &a, &id, None).unwrap(), 0.0);
        let b = Image3::new([2, 2, 1], vec![3.0, 4.0, 5.0, 6.0]);
        assert!((ssd(&a, &b, &id, None).unwrap() - 4.0).abs() < 1e-12);
        let c = Image3::new([2, 2, 1], vec![1.0, 2.0, 3.0, 7.0]);
        assert!((ssd(&a, &c, &id, None).unwrap() - 9.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn identical_images_stay_at_identity() {
        let img = blob(48);
        let id = AffineTransform::identity(2, img.center());
        let r = register_affine(&img, &img, &id, None, &RegistrationOptions::default()).unwrap();
        assert!(r.final_metric < 1e-6, "metric {}", r.final_metric);
        assert!(r.transform.is_identity(1e-2));
    }

    #[test]
    fn recovers_translation() {
        let fixed = blob(64);
        let shift = AffineTransform::translation(2, [3.0, 2.0, 0.0]);
        // moving = fixed shifted; the aligning transform undoes the shift.
        let moving = resample(&fixed, &shift, fixed.dims, Interpolation::Linear).unwrap();
        let id = AffineTransform::identity(2, fixed.center());
        let r = register_affine(&fixed, &moving, &id, None, &RegistrationOptions::default()).unwrap();
        let p = r.transform.apply([32.0, 32.0, 0.0]);
        assert!((p[0] - 29.0).abs() < 0.5 && (p[1] - 30.0).abs() < 0.5, "{p:?}");
    }

    #[test]
    fn region_box_halving_covers_original() {
        let b = RegionBox {
            min: [3, 5, 0],
            max: [10, 11, 1],
        };
        let h = b.halved_xy();
        assert_eq!(h.min, [1, 2, 0]);
        assert_eq!(h.max, [5, 6, 1]);
    }
}
