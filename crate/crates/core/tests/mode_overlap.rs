//! Effective coupled number against a Monte-Carlo average of the mode function.

use cavity_detect::physparams::{effective_atom_number, ModeGeometry};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

const LAMBDA: f64 = 675e-9;

fn cavity() -> ModeGeometry {
    ModeGeometry::symmetric(11.8e-3, 10e-3, LAMBDA).unwrap()
}

fn monte_carlo(mode: &ModeGeometry, sigmas: [f64; 3], center: [f64; 3], n: usize, seed: u64) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let d: Vec<Normal<f64>> = (0..3).map(|i| Normal::new(center[i], sigmas[i]).unwrap()).collect();
    let mut acc = 0.0;
    for _ in 0..n {
        let f = mode.mode_function(d[0].sample(&mut rng), d[1].sample(&mut rng), d[2].sample(&mut rng));
        acc += f * f;
    }
    acc / n as f64
}

#[test]
fn quadrature_matches_monte_carlo() {
    let mode = cavity();
    let cases = [
        ([10e-6, 10e-6, 50e-6], [0.0, 0.0, 0.0]),
        ([30e-6, 15e-6, 0.2e-6], [5e-6, -8e-6, 0.1e-6]),
        ([40e-6, 40e-6, 2e-3], [0.0, 20e-6, 1e-3]),
        ([5e-6, 5e-6, 10e-6], [0.0, 0.0, 0.0]),
    ];
    for (i, (s, c)) in cases.into_iter().enumerate() {
        let q = effective_atom_number(1e5, s, c, &mode).unwrap();
        let mc = monte_carlo(&mode, s, c, 1_000_000, 7 + i as u64);
        assert!((q.mean_f2 / mc - 1.0).abs() < 0.01, "case {i}: quadrature {} vs MC {mc}", q.mean_f2);
        assert!((q.n_c - 1e5 * q.mean_f2).abs() <= 1e-9 * q.n_c);
    }
}

#[test]
fn far_cloud_is_flagged() {
    let q = effective_atom_number(1e6, [5e-6; 3], [1e-3, 0.0, 0.0], &cavity()).unwrap();
    assert!(q.far_from_mode);
    assert!(q.n_c < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mean_f2_is_a_fraction(
        sx in 1e-7f64..1e-4, sy in 1e-7f64..1e-4, sz in 1e-8f64..1e-3,
        cx in -5e-5f64..5e-5, cy in -5e-5f64..5e-5, cz in -1e-3f64..1e-3,
    ) {
        let q = effective_atom_number(1.0, [sx, sy, sz], [cx, cy, cz], &cavity()).unwrap();
        prop_assert!(q.mean_f2 >= 0.0 && q.mean_f2 <= 1.0 + 1e-12);
    }

    // Widening a centred cloud transversely can only reduce the overlap.
    #[test]
    fn wider_centred_cloud_couples_less(s in 1e-7f64..1e-4, grow in 1.01f64..4.0, sz in 1e-6f64..1e-3) {
        let mode = cavity();
        let a = effective_atom_number(1.0, [s, s, sz], [0.0; 3], &mode).unwrap();
        let b = effective_atom_number(1.0, [s * grow, s * grow, sz], [0.0; 3], &mode).unwrap();
        prop_assert!(b.mean_f2 < a.mean_f2);
    }

    #[test]
    fn n_c_scales_with_total(n in 1.0f64..1e8, s in 1e-6f64..1e-4) {
        let mode = cavity();
        let a = effective_atom_number(1.0, [s, s, 1e-4], [0.0; 3], &mode).unwrap();
        let b = effective_atom_number(n, [s, s, 1e-4], [0.0; 3], &mode).unwrap();
        prop_assert!((b.n_c - n * a.n_c).abs() <= 1e-12 * b.n_c);
    }
}
