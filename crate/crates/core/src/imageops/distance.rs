//! Exact Euclidean distance transforms.

use crate::error::{Error, Result};
use crate::grid::{DistanceMap, Grid2, LabelMask, ScalarField};

const FAR: f64 = 1e20;

/// Squared Euclidean distance from every pixel to the nearest `feature` pixel
/// (separable lower-envelope transform). Pixels get `1e20` when there is no
/// feature at all.
pub fn edt_squared(feature: &LabelMask) -> ScalarField {
    let (nx, ny) = feature.dims();
    let mut g: Vec<f64> = feature
        .data()
        .iter()
        .map(|&f| if f { 0.0 } else { FAR })
        .collect();
    let n = nx.max(ny);
    let mut f = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];

    for x in 0..nx {
        for y in 0..ny {
            f[y] = g[y * nx + x];
        }
        transform_1d(&f[..ny], &mut d[..ny], &mut v, &mut z);
        for y in 0..ny {
            g[y * nx + x] = d[y];
        }
    }
    for y in 0..ny {
        let row = &mut g[y * nx..(y + 1) * nx];
        f[..nx].copy_from_slice(row);
        transform_1d(&f[..nx], &mut d[..nx], &mut v, &mut z);
        row.copy_from_slice(&d[..nx]);
    }
    Grid2::from_vec(nx, ny, g).expect("same size")
}

fn transform_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let intersect = |q: usize, p: usize| {
        ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64))
    };
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let mut s = intersect(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = intersect(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, dq) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dx = q as f64 - p as f64;
        *dq = dx * dx + f[p];
    }
}

/// Foreground pixels with at least one background pixel among their
/// in-image 8-neighbours.
pub fn boundary_pixels(m: &LabelMask) -> LabelMask {
    let (nx, ny) = m.dims();
    LabelMask::from_fn(nx, ny, |x, y| {
        if !*m.get(x, y) {
            return false;
        }
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (xx, yy) = (x as i64 + dx, y as i64 + dy);
                if (dx, dy) != (0, 0)
                    && xx >= 0
                    && yy >= 0
                    && (xx as usize) < nx
                    && (yy as usize) < ny
                    && !*m.get(xx as usize, yy as usize)
                {
                    return true;
                }
            }
        }
        false
    })
}

/// Signed distance to the mask boundary: zero on boundary pixels, negative
/// in the foreground interior, positive in the background.
pub fn signed_distance(m: &LabelMask) -> Result<DistanceMap> {
    let fg = m.count();
    if fg == 0 || fg == m.len() {
        return Err(Error::Degenerate(
            "signed distance needs both foreground and background pixels".into(),
        ));
    }
    let boundary = boundary_pixels(m);
    let d2 = edt_squared(&boundary);
    Ok(d2.zip_map(m, |&d, &inside| {
        let d = d.sqrt();
        if inside {
            -d
        } else {
            d
        }
    }))
}

/// Distance outside a blood-pool mask, capped at `cap`.
#[derive(Debug, Clone)]
pub struct TruncatedDistance {
    /// `min(distance to the mask boundary, cap)` outside the mask; `cap`
    /// inside, where [`Self::interior`] flags the pixel instead.
    pub distance: ScalarField,
    pub interior: LabelMask,
    pub cap: f64,
}

pub fn truncated_outside_distance(bp: &LabelMask, cap: f64) -> Result<TruncatedDistance> {
    if !bp.any() {
        return Err(Error::Degenerate(
            "truncated distance needs a nonempty mask".into(),
        ));
    }
    if !(cap > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "distance cap must be positive, got {cap}"
        )));
    }
    let d2 = edt_squared(&boundary_pixels(bp));
    let distance = d2.zip_map(bp, |&d, &inside| if inside { cap } else { d.sqrt().min(cap) });
    Ok(TruncatedDistance {
        distance,
        interior: bp.clone(),
        cap,
    })
}
