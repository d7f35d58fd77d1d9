use proptest::prelude::*;

use atlascut::grid::LabelMask;
use atlascut::imageops::{
    boundary_pixels, connected_components, convex_hull_mask, dilate_disk, edt_squared, erode_disk, fill_holes,
    largest_component, otsu_threshold_values, signed_distance,
};

fn mask_strategy(n: usize) -> impl Strategy<Value = LabelMask> {
    proptest::collection::vec(any::<bool>(), n * n).prop_map(move |v| LabelMask::from_vec(n, n, v).unwrap())
}

/// Exhaustive scan over every split `{bin <= t} | {bin > t}`, lowest maximizer.
fn scan_otsu(values: &[u8]) -> usize {
    let n = values.len() as f64;
    let mut best = (f64::NEG_INFINITY, 0);
    for t in 0..255usize {
        let (lo, hi): (Vec<f64>, Vec<f64>) = values.iter().map(|&v| v as f64).partition(|&v| v as usize <= t);
        if lo.is_empty() || hi.is_empty() {
            continue;
        }
        let m0 = lo.iter().sum::<f64>() / lo.len() as f64;
        let m1 = hi.iter().sum::<f64>() / hi.len() as f64;
        let s = lo.len() as f64 / n * hi.len() as f64 / n * (m0 - m1).powi(2);
        if s > best.0 * (1.0 + 1e-12) {
            best = (s, t);
        }
    }
    best.1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn otsu_matches_scan(values in proptest::collection::vec(any::<u8>(), 2..80)) {
        prop_assume!(values.iter().any(|&v| v != values[0]));
        let f: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        prop_assert_eq!(otsu_threshold_values(&f).unwrap() as usize, scan_otsu(&values));
    }

    #[test]
    fn hull_is_convex_superset(m in mask_strategy(12)) {
        prop_assume!(m.any());
        let h = convex_hull_mask(&m);
        prop_assert!(m.is_subset_of(&h));
        prop_assert_eq!(convex_hull_mask(&h), h.clone());
        let pts = h.foreground();
        for &(ax, ay) in &pts {
            for &(bx, by) in &pts {
                if (ax + bx) % 2 == 0 && (ay + by) % 2 == 0 {
                    prop_assert!(*h.get((ax + bx) / 2, (ay + by) / 2));
                }
            }
        }
    }

    #[test]
    fn signed_distance_is_lipschitz_and_exact(m in mask_strategy(10)) {
        prop_assume!(m.any() && m.count() < m.len());
        let d = signed_distance(&m).unwrap();
        let b = boundary_pixels(&m).foreground();
        for i in 0..d.len() {
            let (x, y) = d.coords(i);
            let exact = b
                .iter()
                .map(|&(bx, by)| (x as f64 - bx as f64).hypot(y as f64 - by as f64))
                .fold(f64::INFINITY, f64::min);
            prop_assert!((d.data()[i].abs() - exact).abs() < 1e-9);
            prop_assert_eq!(d.data()[i] < 0.0, *m.get(x, y) && exact > 0.0);
            for j in 0..d.len() {
                let (u, v) = d.coords(j);
                let dist = (x as f64 - u as f64).hypot(y as f64 - v as f64);
                prop_assert!((d.data()[i] - d.data()[j]).abs() <= dist + 1e-9);
            }
        }
    }

    #[test]
    fn erosion_shrinks_and_dilation_grows(m in mask_strategy(12), r in 0.5f64..3.0) {
        let e = erode_disk(&m, r).unwrap();
        let d = dilate_disk(&m, r).unwrap();
        prop_assert!(e.is_subset_of(&m));
        prop_assert!(m.is_subset_of(&d));
    }

    #[test]
    fn fill_holes_is_idempotent_superset(m in mask_strategy(12)) {
        let f = fill_holes(&m);
        prop_assert!(m.is_subset_of(&f));
        prop_assert_eq!(fill_holes(&f), f);
    }

    #[test]
    fn largest_component_is_a_component(m in mask_strategy(12)) {
        let l = largest_component(&m);
        prop_assert!(l.is_subset_of(&m));
        let sizes = connected_components(&m).sizes();
        prop_assert_eq!(l.count(), sizes.iter().copied().max().unwrap_or(0));
    }
}

#[test]
fn edt_of_single_feature_pixel() {
    let mut f = LabelMask::empty(5, 5);
    f.set(0, 0, true);
    let d = edt_squared(&f);
    assert_eq!(*d.get(3, 4), 25.0);
    assert_eq!(*d.get(0, 0), 0.0);
}

#[test]
fn constant_values_have_no_otsu_split() {
    assert!(otsu_threshold_values(&[7.0; 10]).is_err());
}
