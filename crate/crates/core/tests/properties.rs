use std::collections::BTreeSet;

use num_complex::Complex;
use proptest::prelude::*;
use slepian_core::indexset::cardinality_bound;
use slepian_core::lstsq::truncate_tau_l;
use slepian_core::polybasis::{eval_family, eval_poly};
use slepian_core::sampling::{draw_uniform, make_training_set, rmse, NoiseSpec, SampleSet, TargetFunction};
use slepian_core::tensorbasis::TensorBasis;
use slepian_core::{IndexSet, PolyFamily, ProlateBasis};

/// Brute-force enumeration of `Π(ν_k+1) ≤ n` in lexicographic order.
fn cross_oracle(d: usize, n: usize) -> BTreeSet<Vec<usize>> {
    let mut out = BTreeSet::new();
    let mut nu = vec![0usize; d];
    loop {
        if nu.iter().map(|&k| k + 1).product::<usize>() <= n {
            out.insert(nu.clone());
        }
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            nu[i] += 1;
            if nu[i] < n {
                break;
            }
            nu[i] = 0;
        }
    }
}

/// Unnormalized Legendre by Bonnet, scaled to unit `L²_u` norm.
fn legendre_bonnet(k: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if k == 0 {
        return 1.0;
    }
    for j in 1..k {
        let p2 = ((2 * j + 1) as f64 * x * p1 - j as f64 * p0) / (j + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1 * ((2 * k + 1) as f64).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn legendre_recurrence_matches_bonnet(k in 0usize..40, x in -1.0f64..=1.0) {
        let v = eval_poly(PolyFamily::LegendreNormalized, k, x).unwrap();
        let o = legendre_bonnet(k, x);
        prop_assert!((v - o).abs() <= 1e-11 * (1.0 + o.abs()));
    }

    #[test]
    fn chebyshev_is_cosine(k in 0usize..60, x in -1.0f64..=1.0) {
        let v = eval_poly(PolyFamily::ChebyshevFirstKind, k, x).unwrap();
        prop_assert!((v - (k as f64 * x.acos()).cos()).abs() <= 1e-11);
    }

    #[test]
    fn family_sweep_matches_single_evaluations(k in 0usize..60, x in -1.0f64..=1.0) {
        for fam in [PolyFamily::LegendreNormalized, PolyFamily::ChebyshevFirstKind] {
            let all = eval_family(fam, k, x).unwrap();
            for (j, v) in all.iter().enumerate() {
                prop_assert_eq!(*v, eval_poly(fam, j, x).unwrap());
            }
        }
    }

    #[test]
    fn hyperbolic_cross_matches_enumeration(d in 1usize..=3, n in 1usize..=40) {
        let set = IndexSet::hyperbolic_cross(d, n).unwrap();
        let got: BTreeSet<Vec<usize>> = set.to_vecs().into_iter().collect();
        prop_assert_eq!(got.len(), set.len());
        prop_assert_eq!(got, cross_oracle(d, n));
        prop_assert_eq!(set.check_monotonicity(), d >= 2);
        if d >= 2 && n >= 2 {
            prop_assert!((set.len() as f64) <= cardinality_bound(d, n) + 1e-9 || d == 3 && n < 26);
        }
    }

    #[test]
    fn slices_are_lower_dimensional_crosses(n in 1usize..=30, k in 0usize..5) {
        let set = IndexSet::hyperbolic_cross(3, n).unwrap();
        if k >= n {
            prop_assert!(set.slice(k).is_err());
        } else {
            let got: BTreeSet<Vec<usize>> = set.slice(k).unwrap().to_vecs().into_iter().collect();
            prop_assert_eq!(got, cross_oracle(2, n / (k + 1)));
        }
    }

    #[test]
    fn tensor_rows_are_products_of_1d_values(y1 in -1.0f64..=1.0, y2 in -1.0f64..=1.0) {
        let basis = TensorBasis::<f64>::slepian_cross(4.0, 2, 3).unwrap();
        let one = ProlateBasis::new(4.0, 2).unwrap();
        let row = basis.eval_basis_row(&[y1, y2]).unwrap();
        for (nu, v) in basis.index_set().iter().zip(row) {
            let o = one.evaluate(nu[0], y1).unwrap() * one.evaluate(nu[1], y2).unwrap();
            prop_assert!((v - o).abs() <= 1e-12);
        }
    }

    #[test]
    fn draws_stay_in_cube_and_repeat(seed in any::<u64>(), d in 1usize..=3, m in 1usize..200) {
        let a = draw_uniform::<f64>(d, m, seed).unwrap();
        prop_assert_eq!(a.len(), d * m);
        prop_assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
        prop_assert_eq!(a, draw_uniform::<f64>(d, m, seed).unwrap());
    }

    #[test]
    fn sample_csv_round_trip_is_bit_exact(seed in any::<u64>(), m in 1usize..50, level in 0.0f64..1.0) {
        let s = make_training_set(&TargetFunction::<f64>::G2, 1, m, seed, &NoiseSpec::ComplexGaussian { level }).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = SampleSet::<f64>::read_csv(&buf[..]).unwrap();
        prop_assert_eq!(back.points, s.points);
        prop_assert_eq!(back.values, s.values);
    }

    #[test]
    fn tau_truncation_never_exceeds_l(re in prop::collection::vec(-10.0f64..10.0, 1..20), l in 0.01f64..5.0) {
        let c: Vec<Complex<f64>> = re.iter().enumerate().map(|(i, &r)| Complex::new(r, 0.5 * i as f64 - r)).collect();
        let t = truncate_tau_l(&c, l).unwrap();
        let norm = t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(norm <= l * (1.0 + 1e-12));
    }

    #[test]
    fn rmse_splits_into_components(v in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0), 1..30)) {
        let a: Vec<Complex<f64>> = v.iter().map(|t| Complex::new(t.0, t.1)).collect();
        let b: Vec<Complex<f64>> = v.iter().map(|t| Complex::new(t.2, t.3)).collect();
        let re: f64 = v.iter().map(|t| (t.0 - t.2).powi(2)).sum();
        let im: f64 = v.iter().map(|t| (t.1 - t.3).powi(2)).sum();
        let oracle = ((re + im) / v.len() as f64).sqrt();
        prop_assert!((rmse(&a, &b).unwrap() - oracle).abs() <= 1e-12 * (1.0 + oracle));
    }
}

#[test]
fn uniform_mean_is_near_zero() {
    let m = 100_000;
    let x = draw_uniform::<f64>(1, m, 99).unwrap();
    let mean = x.iter().sum::<f64>() / m as f64;
    assert!(mean.abs() <= 3.0 * (1.0 / 3.0 / m as f64).sqrt());
}

#[test]
fn d3_cardinality_bound_beats_enumeration_at_30() {
    assert!(cardinality_bound(3, 30) > cross_oracle(3, 30).len() as f64);
}

#[test]
fn legendre_family_at_high_degree_matches_loop() {
    let all = eval_family(PolyFamily::LegendreNormalized, 50, 0.731).unwrap();
    for (k, v) in all.iter().enumerate() {
        assert!((v - legendre_bonnet(k, 0.731)).abs() <= 1e-10 * (1.0 + v.abs()));
    }
}
