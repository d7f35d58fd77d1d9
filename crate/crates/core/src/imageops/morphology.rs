//! Disk-structuring-element morphology.
//!
//! A disk of radius `r` holds every offset with Euclidean norm `<= r`.
//! Dilation and erosion are computed exactly through squared distance
//! transforms instead of scanning the structuring element.

use log::warn;

use crate::error::{Error, Result};
use crate::grid::LabelMask;

use super::distance::edt_squared;
use super::hull::convex_hull;

pub fn dilate_disk(m: &LabelMask, radius: f64) -> Result<LabelMask> {
    if !(radius >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dilation radius must be >= 0, got {radius}"
        )));
    }
    if radius == 0.0 || !m.any() {
        return Ok(m.clone());
    }
    let r2 = radius * radius;
    Ok(edt_squared(m).map(|&d| d <= r2))
}

/// Erosion with pixels outside the image counted as background.
pub fn erode_disk(m: &LabelMask, radius: f64) -> Result<LabelMask> {
    if !(radius >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "erosion radius must be >= 0, got {radius}"
        )));
    }
    if radius == 0.0 {
        return Ok(m.clone());
    }
    let (nx, ny) = m.dims();
    let padded = LabelMask::from_fn(nx + 2, ny + 2, |x, y| {
        x == 0 || y == 0 || x == nx + 1 || y == ny + 1 || !*m.get(x - 1, y - 1)
    });
    let d2 = edt_squared(&padded);
    let r2 = radius * radius;
    Ok(LabelMask::from_fn(nx, ny, |x, y| *d2.get(x + 1, y + 1) > r2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl Circle {
    fn contains(&self, p: (f64, f64)) -> bool {
        (p.0 - self.cx).hypot(p.1 - self.cy) <= self.r * (1.0 + 1e-12) + 1e-9
    }

    fn from_two(a: (f64, f64), b: (f64, f64)) -> Circle {
        let cx = (a.0 + b.0) / 2.0;
        let cy = (a.1 + b.1) / 2.0;
        Circle {
            cx,
            cy,
            r: (a.0 - cx).hypot(a.1 - cy),
        }
    }

    fn from_three(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Option<Circle> {
        let d = 2.0 * (a.0 * (b.1 - c.1) + b.0 * (c.1 - a.1) + c.0 * (a.1 - b.1));
        if d.abs() < 1e-12 {
            return None;
        }
        let sa = a.0 * a.0 + a.1 * a.1;
        let sb = b.0 * b.0 + b.1 * b.1;
        let sc = c.0 * c.0 + c.1 * c.1;
        let cx = (sa * (b.1 - c.1) + sb * (c.1 - a.1) + sc * (a.1 - b.1)) / d;
        let cy = (sa * (c.0 - b.0) + sb * (a.0 - c.0) + sc * (b.0 - a.0)) / d;
        Some(Circle {
            cx,
            cy,
            r: (a.0 - cx).hypot(a.1 - cy),
        })
    }
}

/// Smallest circle enclosing the foreground pixel centres.
///
/// Only convex-hull vertices can lie on the minimum circle, so the
/// incremental (Welzl-style) construction runs on the hull alone.
pub fn min_enclosing_circle(m: &LabelMask) -> Option<Circle> {
    let pts: Vec<(i64, i64)> = m
        .foreground()
        .into_iter()
        .map(|(x, y)| (x as i64, y as i64))
        .collect();
    if pts.is_empty() {
        return None;
    }
    let hull: Vec<(f64, f64)> = convex_hull(&pts)
        .into_iter()
        .map(|(x, y)| (x as f64, y as f64))
        .collect();
    Some(welzl(&hull))
}

fn welzl(p: &[(f64, f64)]) -> Circle {
    let mut c = Circle {
        cx: p[0].0,
        cy: p[0].1,
        r: 0.0,
    };
    for i in 1..p.len() {
        if c.contains(p[i]) {
            continue;
        }
        c = Circle {
            cx: p[i].0,
            cy: p[i].1,
            r: 0.0,
        };
        for j in 0..i {
            if c.contains(p[j]) {
                continue;
            }
            c = Circle::from_two(p[i], p[j]);
            for k in 0..j {
                if !c.contains(p[k]) {
                    c = Circle::from_three(p[i], p[j], p[k])
                        .unwrap_or_else(|| Circle::from_two(p[i], p[k]));
                }
            }
        }
    }
    c
}

/// Result of [`erode_by_circumscribed_fraction`].
#[derive(Debug, Clone)]
pub struct Erosion {
    pub mask: LabelMask,
    /// Radius of the minimum enclosing circle of the input.
    pub circumradius: f64,
    /// Integer disk radius actually used.
    pub radius: f64,
}

/// Erodes by a disk of radius `ceil(fraction * R)`, `R` being the radius of the
/// minimum enclosing circle of the mask. An erosion radius that reaches `R`
/// yields an empty mask and a warning.
pub fn erode_by_circumscribed_fraction(m: &LabelMask, fraction: f64) -> Result<Erosion> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "erosion fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let circle = min_enclosing_circle(m)
        .ok_or_else(|| Error::Degenerate("cannot erode an empty mask".into()))?;
    // The epsilon keeps exact products such as 0.15 * 20 from rounding up.
    let radius = (fraction * circle.r - 1e-9).ceil().max(0.0);
    if radius >= circle.r {
        warn!(
            "erosion radius {radius} reaches circumradius {:.3}; mask vanishes",
            circle.r
        );
        return Ok(Erosion {
            mask: LabelMask::empty(m.nx(), m.ny()),
            circumradius: circle.r,
            radius,
        });
    }
    Ok(Erosion {
        mask: erode_disk(m, radius)?,
        circumradius: circle.r,
        radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(n: usize, cx: f64, cy: f64, r: f64) -> LabelMask {
        LabelMask::from_fn(n, n, |x, y| (x as f64 - cx).hypot(y as f64 - cy) <= r)
    }

    fn brute_dilate(m: &LabelMask, r: f64) -> LabelMask {
        let fg = m.foreground();
        LabelMask::from_fn(m.nx(), m.ny(), |x, y| {
            fg.iter()
                .any(|&(a, b)| (x as f64 - a as f64).hypot(y as f64 - b as f64) <= r)
        })
    }

    fn brute_erode(m: &LabelMask, r: f64) -> LabelMask {
        let ri = r.ceil() as i64;
        LabelMask::from_fn(m.nx(), m.ny(), |x, y| {
            for dy in -ri..=ri {
                for dx in -ri..=ri {
                    if ((dx * dx + dy * dy) as f64) > r * r {
                        continue;
                    }
                    let (xx, yy) = (x as i64 + dx, y as i64 + dy);
                    if xx < 0
                        || yy < 0
                        || xx >= m.nx() as i64
                        || yy >= m.ny() as i64
                        || !*m.get(xx as usize, yy as usize)
                    {
                        return false;
                    }
                }
            }
            true
        })
    }

    fn brute_mec_radius(m: &LabelMask) -> f64 {
        let p: Vec<(f64, f64)> = m
            .foreground()
            .into_iter()
            .map(|(x, y)| (x as f64, y as f64))
            .collect();
        let covers = |c: &Circle| p.iter().all(|&q| c.contains(q));
        let mut best = f64::INFINITY;
        for i in 0..p.len() {
            for j in i..p.len() {
                let c = Circle::from_two(p[i], p[j]);
                if c.r < best && covers(&c) {
                    best = c.r;
                }
                for k in j + 1..p.len() {
                    if let Some(c) = Circle::from_three(p[i], p[j], p[k]) {
                        if c.r < best && covers(&c) {
                            best = c.r;
                        }
                    }
                }
            }
        }
        best
    }

    #[test]
    fn dilation_zero_is_identity() {
        let m = disk(9, 4.0, 4.0, 2.0);
        assert_eq!(dilate_disk(&m, 0.0).unwrap(), m);
    }

    #[test]
    fn single_pixel_dilates_to_plus() {
        let mut m = LabelMask::empty(5, 5);
        m.set(2, 2, true);
        let d = dilate_disk(&m, 1.0).unwrap();
        assert_eq!(d.count(), 5);
        assert!(!*d.get(1, 1));
    }

    #[test]
    fn disk_dilation_matches_brute_force() {
        let m = disk(32, 15.0, 16.0, 8.0);
        let fast = dilate_disk(&m, 2.0).unwrap();
        assert_eq!(fast, brute_dilate(&m, 2.0));
        // Radius grows to about 10.
        let r_eq = (fast.count() as f64 / std::f64::consts::PI).sqrt();
        assert!((r_eq - 10.0).abs() < 0.5, "r_eq = {r_eq}");
    }

    #[test]
    fn erosion_matches_brute_force() {
        let m = disk(20, 8.0, 9.0, 7.5).or(&LabelMask::from_fn(20, 20, |x, _| x < 2));
        for r in [1.0, 2.0, 3.0, 1.5] {
            assert_eq!(erode_disk(&m, r).unwrap(), brute_erode(&m, r), "r = {r}");
        }
    }

    #[test]
    fn mec_matches_exhaustive_search() {
        let masks = [
            disk(16, 7.0, 8.0, 5.0),
            LabelMask::from_fn(12, 12, |x, y| x + y < 9 && x > 1),
            LabelMask::from_fn(10, 10, |x, y| (x == 2 && y == 3) || (x == 7 && y == 8) || (x == 8 && y == 1)),
        ];
        for m in &masks {
            let c = min_enclosing_circle(m).unwrap();
            assert!((c.r - brute_mec_radius(m)).abs() < 1e-9);
        }
    }

    #[test]
    fn fifteen_percent_of_radius_twenty() {
        let m = disk(48, 24.0, 24.0, 20.0);
        let e = erode_by_circumscribed_fraction(&m, 0.15).unwrap();
        assert_eq!(e.circumradius, 20.0);
        assert_eq!(e.radius, 3.0);
        assert_eq!(e.mask, brute_erode(&m, 3.0));
        let r_eq = (e.mask.count() as f64 / std::f64::consts::PI).sqrt();
        assert!((r_eq - 17.0).abs() < 0.5, "r_eq = {r_eq}");
    }

    #[test]
    fn erosion_fraction_preconditions() {
        let m = disk(9, 4.0, 4.0, 3.0);
        assert!(erode_by_circumscribed_fraction(&m, 0.0).is_err());
        assert!(erode_by_circumscribed_fraction(&m, 1.0).is_err());
        let mut one = LabelMask::empty(5, 5);
        one.set(2, 2, true);
        let e = erode_by_circumscribed_fraction(&one, 0.15).unwrap();
        assert!(!e.mask.any());
    }
}
