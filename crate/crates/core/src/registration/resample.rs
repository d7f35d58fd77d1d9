use crate::error::Result;
use crate::grid::{Grid2, LabelMask};
use crate::volume::{MaskVolume, Volume};

use super::transform::AffineTransform;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Nearest,
    /// Bilinear on single-slice grids, trilinear otherwise.
    Linear,
}

/// Owned `f64` image on a 3D voxel grid (`nz == 1` for slices).
#[derive(Debug, Clone, PartialEq)]
pub struct Image3 {
    pub dims: [usize; 3],
    pub data: Vec<f64>,
}

impl Image3 {
    pub fn new(dims: [usize; 3], data: Vec<f64>) -> Self {
        assert_eq!(dims.iter().product::<usize>(), data.len(), "image size");
        Self { dims, data }
    }

    pub fn from_volume(v: &Volume) -> Self {
        Self::new(v.dims(), v.voxels().iter().map(|&x| f64::from(x)).collect())
    }

    pub fn from_grid(g: &Grid2<f64>) -> Self {
        Self::new([g.nx(), g.ny(), 1], g.data().to_vec())
    }

    pub fn from_mask(m: &LabelMask) -> Self {
        Self::new([m.nx(), m.ny(), 1], m.data().iter().map(|&b| f64::from(u8::from(b))).collect())
    }

    pub fn center(&self) -> [f64; 3] {
        [
            (self.dims[0] as f64 - 1.0) / 2.0,
            (self.dims[1] as f64 - 1.0) / 2.0,
            (self.dims[2] as f64 - 1.0) / 2.0,
        ]
    }

    #[inline]
    fn at(&self, x: usize, y: usize, z: usize) -> f64 {
        self.data[(z * self.dims[1] + y) * self.dims[0] + x]
    }

    /// Interpolated value at a continuous voxel position; voxels outside the
    /// grid count as zero.
    #[inline]
    pub fn sample(&self, p: [f64; 3], interp: Interpolation) -> f64 {
        match interp {
            Interpolation::Nearest => {
                let (x, y, z) = (p[0].round(), p[1].round(), p[2].round());
                if x < 0.0
                    || y < 0.0
                    || z < 0.0
                    || x >= self.dims[0] as f64
                    || y >= self.dims[1] as f64
                    || z >= self.dims[2] as f64
                {
                    0.0
                } else {
                    self.at(x as usize, y as usize, z as usize)
                }
            }
            Interpolation::Linear if self.dims[2] == 1 => self.sample_bilinear(p[0], p[1], p[2]),
            Interpolation::Linear => self.sample_trilinear(p),
        }
    }

    #[inline]
    fn sample_bilinear(&self, x: f64, y: f64, z: f64) -> f64 {
        let [nx, ny, _] = self.dims;
        if z <= -1.0 || z >= 1.0 || x <= -1.0 || y <= -1.0 || x >= nx as f64 || y >= ny as f64 {
            return 0.0;
        }
        let wz = 1.0 - z.abs();
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (x0, y0) = (x0 as i64, y0 as i64);
        let mut acc = 0.0;
        for (dy, wy) in [(0i64, 1.0 - fy), (1, fy)] {
            let yy = y0 + dy;
            if wy == 0.0 || yy < 0 || yy >= ny as i64 {
                continue;
            }
            for (dx, wx) in [(0i64, 1.0 - fx), (1, fx)] {
                let xx = x0 + dx;
                if wx == 0.0 || xx < 0 || xx >= nx as i64 {
                    continue;
                }
                acc += wx * wy * self.data[yy as usize * nx + xx as usize];
            }
        }
        acc * wz
    }

    #[inline]
    fn sample_trilinear(&self, p: [f64; 3]) -> f64 {
        let [nx, ny, nz] = self.dims;
        if p[0] <= -1.0
            || p[1] <= -1.0
            || p[2] <= -1.0
            || p[0] >= nx as f64
            || p[1] >= ny as f64
            || p[2] >= nz as f64
        {
            return 0.0;
        }
        let f = [p[0].floor(), p[1].floor(), p[2].floor()];
        let fr = [p[0] - f[0], p[1] - f[1], p[2] - f[2]];
        let base = [f[0] as i64, f[1] as i64, f[2] as i64];
        if base[0] >= 0
            && base[1] >= 0
            && base[2] >= 0
            && base[0] + 1 < nx as i64
            && base[1] + 1 < ny as i64
            && base[2] + 1 < nz as i64
        {
            // All eight neighbours inside the grid.
            let i = (base[2] as usize * ny + base[1] as usize) * nx + base[0] as usize;
            let plane = nx * ny;
            let d = &self.data;
            let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
            let c00 = lerp(d[i], d[i + 1], fr[0]);
            let c10 = lerp(d[i + nx], d[i + nx + 1], fr[0]);
            let c01 = lerp(d[i + plane], d[i + plane + 1], fr[0]);
            let c11 = lerp(d[i + plane + nx], d[i + plane + nx + 1], fr[0]);
            return lerp(lerp(c00, c10, fr[1]), lerp(c01, c11, fr[1]), fr[2]);
        }
        let mut acc = 0.0;
        for dz in 0..2i64 {
            let wz = if dz == 0 { 1.0 - fr[2] } else { fr[2] };
            let zz = base[2] + dz;
            if wz == 0.0 || zz < 0 || zz >= nz as i64 {
                continue;
            }
            for dy in 0..2i64 {
                let wy = if dy == 0 { 1.0 - fr[1] } else { fr[1] };
                let yy = base[1] + dy;
                if wy == 0.0 || yy < 0 || yy >= ny as i64 {
                    continue;
                }
                let row = (zz as usize * ny + yy as usize) * nx;
                for dx in 0..2i64 {
                    let wx = if dx == 0 { 1.0 - fr[0] } else { fr[0] };
                    let xx = base[0] + dx;
                    if wx == 0.0 || xx < 0 || xx >= nx as i64 {
                        continue;
                    }
                    acc += wx * wy * wz * self.data[row + xx as usize];
                }
            }
        }
        acc
    }

    /// 2x in-plane box downsampling; z is kept.
    pub fn downsample_xy(&self) -> Image3 {
        let [nx, ny, nz] = self.dims;
        let (hx, hy) = (nx / 2, ny / 2);
        let mut data = Vec::with_capacity(hx * hy * nz);
        for z in 0..nz {
            for y in 0..hy {
                for x in 0..hx {
                    let s = self.at(2 * x, 2 * y, z)
                        + self.at(2 * x + 1, 2 * y, z)
                        + self.at(2 * x, 2 * y + 1, z)
                        + self.at(2 * x + 1, 2 * y + 1, z);
                    data.push(0.25 * s);
                }
            }
        }
        Image3::new([hx, hy, nz], data)
    }
}

/// `out(p) = moving(t⁻¹(p))` on a grid of `out_dims`.
pub fn resample(
    moving: &Image3,
    t: &AffineTransform,
    out_dims: [usize; 3],
    interp: Interpolation,
) -> Result<Image3> {
    let inv = t.inverse()?;
    let mut data = Vec::with_capacity(out_dims.iter().product());
    for z in 0..out_dims[2] {
        for y in 0..out_dims[1] {
            for x in 0..out_dims[0] {
                let src = inv.apply([x as f64, y as f64, z as f64]);
                data.push(moving.sample(src, interp));
            }
        }
    }
    Ok(Image3::new(out_dims, data))
}

pub fn resample_volume(
    v: &Volume,
    t: &AffineTransform,
    out_dims: [usize; 3],
    interp: Interpolation,
) -> Result<Volume> {
    let img = resample(&Image3::from_volume(v), &t.as_3d(), out_dims, interp)?;
    Volume::new(out_dims, v.spacing(), img.data.into_iter().map(|x| x as f32).collect())
}

pub fn resample_mask_volume(
    m: &MaskVolume,
    t: &AffineTransform,
    out_dims: [usize; 3],
) -> Result<MaskVolume> {
    let img = Image3::new(m.dims(), m.labels().iter().map(|&l| f64::from(l)).collect());
    let out = resample(&img, &t.as_3d(), out_dims, Interpolation::Nearest)?;
    MaskVolume::new(out_dims, out.data.into_iter().map(|x| u8::from(x > 0.5)).collect())
}

/// Resamples a slice-sized field onto its own grid.
pub fn resample_field(g: &Grid2<f64>, t: &AffineTransform, interp: Interpolation) -> Result<Grid2<f64>> {
    let out = resample(&Image3::from_grid(g), &t.as_3d(), [g.nx(), g.ny(), 1], interp)?;
    Grid2::from_vec(g.nx(), g.ny(), out.data)
}

pub fn resample_mask(m: &LabelMask, t: &AffineTransform) -> Result<LabelMask> {
    let out = resample(&Image3::from_mask(m), &t.as_3d(), [m.nx(), m.ny(), 1], Interpolation::Nearest)?;
    Grid2::from_vec(m.nx(), m.ny(), out.data.into_iter().map(|x| x > 0.5).collect())
}
