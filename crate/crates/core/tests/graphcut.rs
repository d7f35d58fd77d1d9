use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use atlascut::graphcut::{min_cut, quantize, solve, EnergyField, FlowGraph};
use atlascut::grid::{Grid2, LabelMask};

fn random_energy(rng: &mut ChaCha8Rng, nx: usize, ny: usize) -> EnergyField {
    let mut f = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(0.0..2.0)).collect() };
    let fg = Grid2::from_vec(nx, ny, f(nx * ny)).unwrap();
    let bg = Grid2::from_vec(nx, ny, f(nx * ny)).unwrap();
    let h = f((nx - 1) * ny);
    let v = f(nx * (ny - 1));
    EnergyField::new(fg, bg, h, v).unwrap()
}

fn labelings(nx: usize, ny: usize) -> impl Iterator<Item = LabelMask> {
    (0u32..1 << (nx * ny)).map(move |bits| LabelMask::from_fn(nx, ny, |x, y| bits >> (y * nx + x) & 1 == 1))
}

fn brute_force(e: &EnergyField, locked: Option<&LabelMask>) -> i64 {
    labelings(e.nx(), e.ny())
        .filter(|m| locked.is_none_or(|l| l.is_subset_of(m)))
        .map(|m| e.quantized_energy(&m).unwrap())
        .min()
        .unwrap()
}

#[test]
fn matches_brute_force_on_rectangular_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for (nx, ny) in [(2, 2), (3, 2), (2, 5), (4, 3)] {
        for _ in 0..10 {
            let e = random_energy(&mut rng, nx, ny);
            let s = solve(&e, None).unwrap();
            assert_eq!(s.energy, brute_force(&e, None));
            assert_eq!(e.quantized_energy(&s.labels).unwrap(), s.energy);
        }
    }
}

#[test]
fn locked_pixels_are_foreground_and_optimal_under_the_constraint() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let e = random_energy(&mut rng, 3, 3);
        let locked = LabelMask::from_fn(3, 3, |_, _| rng.random_bool(0.25));
        let s = solve(&e, Some(&locked)).unwrap();
        assert!(locked.is_subset_of(&s.labels));
        assert_eq!(e.quantized_energy(&s.labels).unwrap(), brute_force(&e, Some(&locked)));
    }
}

#[test]
fn flow_plus_constant_is_the_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let e = random_energy(&mut rng, 4, 4);
        let s = solve(&e, None).unwrap();
        let constant: i64 = e
            .fg_cost()
            .iter()
            .zip(e.bg_cost())
            .map(|(&f, &b)| quantize(f).min(quantize(b)))
            .sum();
        assert_eq!(s.energy, constant + s.flow);
        assert!(s.flow >= 0);
    }
}

#[test]
fn shifting_both_unaries_keeps_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let e = random_energy(&mut rng, 4, 3);
        // A dyadic shift quantizes exactly.
        let c = 0.375;
        let shift = |v: &[f64]| Grid2::from_vec(4, 3, v.iter().map(|x| x + c).collect()).unwrap();
        let shifted = EnergyField::new(
            shift(e.fg_cost()),
            shift(e.bg_cost()),
            e.horizontal().to_vec(),
            e.vertical().to_vec(),
        )
        .unwrap();
        let a = solve(&e, None).unwrap();
        let b = solve(&shifted, None).unwrap();
        assert_eq!(b.energy - a.energy, 12 * quantize(c));
        assert_eq!(e.quantized_energy(&b.labels).unwrap(), a.energy);
    }
}

#[test]
fn strong_smoothness_makes_labels_uniform() {
    let fg = Grid2::from_fn(6, 6, |x, _| if x < 3 { 0.0 } else { 0.4 });
    let bg = Grid2::filled(6, 6, 0.3);
    let e = EnergyField::new(fg, bg, vec![50.0; 30], vec![50.0; 30]).unwrap();
    let m = min_cut(&e, None).unwrap();
    assert!(m.count() == 0 || m.count() == 36);
}

#[test]
fn raw_flow_graph_chain() {
    // s -> 0 -> 1 -> t with the middle edge the bottleneck.
    let (flow, side) = FlowGraph::new(&[5, 0], &[0, 5], &[(0, 1, 2)]).solve();
    assert_eq!(flow, 2);
    assert_eq!(side, vec![true, false]);
}
