use crate::grid::LabelMask;

type Pt = (i64, i64);

#[inline]
fn cross(o: Pt, a: Pt, b: Pt) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Counter-clockwise convex hull of integer points (monotone chain), without
/// collinear vertices. Returns one or two points for degenerate inputs.
pub fn convex_hull(points: &[Pt]) -> Vec<Pt> {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<Pt> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn inside_hull(hull: &[Pt], p: Pt) -> bool {
    match hull.len() {
        0 => false,
        1 => hull[0] == p,
        2 => {
            let (a, b) = (hull[0], hull[1]);
            cross(a, b, p) == 0
                && p.0 >= a.0.min(b.0)
                && p.0 <= a.0.max(b.0)
                && p.1 >= a.1.min(b.1)
                && p.1 <= a.1.max(b.1)
        }
        n => (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], p) >= 0),
    }
}

/// Rasterized convex hull of the foreground pixel centres. Every pixel whose
/// centre lies in the closed hull polygon is set, so the result is a superset
/// of the input and lattice-convex.
pub fn convex_hull_mask(m: &LabelMask) -> LabelMask {
    let pts: Vec<Pt> = m
        .foreground()
        .into_iter()
        .map(|(x, y)| (x as i64, y as i64))
        .collect();
    if pts.is_empty() {
        return LabelMask::empty(m.nx(), m.ny());
    }
    let hull = convex_hull(&pts);
    let (x0, y0, x1, y1) = m.bounding_box().expect("nonempty");
    let mut out = LabelMask::empty(m.nx(), m.ny());
    for y in y0..=y1 {
        for x in x0..=x1 {
            if inside_hull(&hull, (x as i64, y as i64)) {
                out.set(x, y, true);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_is_fixed_point() {
        let m = LabelMask::from_fn(8, 8, |x, y| (2..6).contains(&x) && (1..5).contains(&y));
        assert_eq!(convex_hull_mask(&m), m);
    }

    #[test]
    fn c_shape_mouth_is_filled() {
        let m = LabelMask::from_fn(7, 7, |x, y| {
            (1..=5).contains(&x) && (1..=5).contains(&y) && !((3..=5).contains(&x) && y == 3)
        });
        let h = convex_hull_mask(&m);
        assert!(*h.get(4, 3));
        assert_eq!(h.count(), 25);
    }

    #[test]
    fn collinear_points_give_segment() {
        let mut m = LabelMask::empty(7, 7);
        m.set(1, 1, true);
        m.set(5, 5, true);
        m.set(3, 3, true);
        let h = convex_hull_mask(&m);
        assert_eq!(h.foreground(), vec![(1, 1), (2, 2), (3, 3), (4, 4), (5, 5)]);
    }

    #[test]
    fn empty_in_empty_out() {
        assert!(!convex_hull_mask(&LabelMask::empty(4, 4)).any());
    }
}
