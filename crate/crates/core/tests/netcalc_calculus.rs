use rand::Rng;
use slepian_core::bounds::{b_dn, eps_condition};
use slepian_core::lstsq::fit_with_test;
use slepian_core::netcalc::{
    concat, identity_net, legendre_net, linear_combination, pad_depth, parallelize, pet_fit, product_net, slepian_net,
    Network, SlepianNetClass,
};
use slepian_core::nettrain::random_network;
use slepian_core::polybasis::eval_poly;
use slepian_core::sampling::{make_test_set, make_training_set, stream_rng, NoiseSpec, TargetFunction, TestSize};
use slepian_core::tensorbasis::TensorBasis;
use slepian_core::{IndexSet, PolyFamily, ProlateBasis};

const CASES: u64 = 100;

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs())))
}

/// Random architecture `(d, …, k)` with 1 to 4 layers.
fn random_arch(rng: &mut impl Rng, d: usize, k: usize) -> Vec<usize> {
    let hidden = rng.gen_range(0..4);
    let mut a = vec![d];
    a.extend((0..hidden).map(|_| rng.gen_range(1..7)));
    a.push(k);
    a
}

fn random_point(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

#[test]
fn concatenation_composes_realizations() {
    for case in 0..CASES {
        let mut rng = stream_rng(1, case);
        let (d, mid, k) = (rng.gen_range(1..4), rng.gen_range(1..4), rng.gen_range(1..3));
        let inner: Network<f64> = random_network(&random_arch(&mut rng, d, mid), 1.0, 2 * case).unwrap();
        let outer: Network<f64> = random_network(&random_arch(&mut rng, mid, k), 1.0, 2 * case + 1).unwrap();
        let c = concat(&outer, &inner).unwrap();
        assert_eq!(c.depth(), outer.depth() + inner.depth() - 1);
        for _ in 0..5 {
            let x = random_point(&mut rng, d);
            let want = outer.realize(&inner.realize(&x).unwrap()).unwrap();
            assert!(close(&c.realize(&x).unwrap(), &want), "case {case}");
        }
    }
}

#[test]
fn parallelization_stacks_outputs() {
    for case in 0..CASES {
        let mut rng = stream_rng(2, case);
        let d = rng.gen_range(1..4);
        let hidden = rng.gen_range(0..4);
        let arch = |rng: &mut rand_chacha::ChaCha8Rng| {
            let mut a = vec![d];
            a.extend((0..hidden).map(|_| rng.gen_range(1..7)));
            a.push(rng.gen_range(1..3));
            a
        };
        let a1 = arch(&mut rng);
        let a2 = arch(&mut rng);
        let n1: Network<f64> = random_network(&a1, 1.0, 3 * case).unwrap();
        let n2: Network<f64> = random_network(&a2, 1.0, 3 * case + 1).unwrap();
        let p = parallelize(&n1, &n2).unwrap();
        assert_eq!(p.size(), n1.size() + n2.size());
        for _ in 0..5 {
            let x = random_point(&mut rng, d);
            let mut want = n1.realize(&x).unwrap();
            want.extend(n2.realize(&x).unwrap());
            assert!(close(&p.realize(&x).unwrap(), &want), "case {case}");
        }
    }
}

#[test]
fn identity_and_padding_are_exact() {
    for case in 0..CASES {
        let mut rng = stream_rng(3, case);
        let (d, l) = (rng.gen_range(1..5), rng.gen_range(1..8));
        let id: Network<f64> = identity_net(d, l).unwrap();
        assert_eq!(id.depth(), l);
        assert!(id.size() <= 2 * d * l);
        let x = random_point(&mut rng, d);
        assert_eq!(id.realize(&x).unwrap(), x);
        let net: Network<f64> = random_network(&random_arch(&mut rng, d, 2), 1.0, case).unwrap();
        let padded = pad_depth(&net, net.depth() + rng.gen_range(0..4)).unwrap();
        assert!(close(&padded.realize(&x).unwrap(), &net.realize(&x).unwrap()));
        let composed = concat(&identity_net(2, 3).unwrap(), &net).unwrap();
        assert!(close(&composed.realize(&x).unwrap(), &net.realize(&x).unwrap()));
    }
    assert_eq!(identity_net::<f64>(1, 3).unwrap().realize(&[-2.5]).unwrap(), vec![-2.5]);
}

#[test]
fn linear_combination_sums_realizations() {
    for case in 0..CASES {
        let mut rng = stream_rng(4, case);
        let (d, k, count) = (rng.gen_range(1..4), rng.gen_range(1..3), rng.gen_range(1..5));
        let nets: Vec<Network<f64>> = (0..count)
            .map(|i| random_network(&random_arch(&mut rng, d, k), 1.0, 10 * case + i).unwrap())
            .collect();
        let weights: Vec<f64> = (0..count).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let lc = linear_combination(&nets, &weights).unwrap();
        assert_eq!(lc.depth(), nets.iter().map(Network::depth).max().unwrap());
        for _ in 0..5 {
            let x = random_point(&mut rng, d);
            let mut want = vec![0.0; k];
            for (n, w) in nets.iter().zip(&weights) {
                for (o, v) in want.iter_mut().zip(n.realize(&x).unwrap()) {
                    *o += w * v;
                }
            }
            assert!(close(&lc.realize(&x).unwrap(), &want), "case {case}");
        }
        let cancel = linear_combination(&[nets[0].clone(), nets[0].clone()], &[1.0, -1.0]).unwrap();
        let x = random_point(&mut rng, d);
        assert!(cancel.realize(&x).unwrap().iter().all(|v| v.abs() <= 1e-12));
    }
}

#[test]
fn json_round_trip_is_bit_exact_and_compiled_plan_agrees() {
    for case in 0..20 {
        let mut rng = stream_rng(5, case);
        let d = rng.gen_range(1..4);
        let net: Network<f64> = random_network(&random_arch(&mut rng, d, 2), 1.7, case).unwrap();
        let back = Network::<f64>::from_json(&net.to_json().unwrap()).unwrap();
        assert_eq!(back, net);
        let pts: Vec<f64> = (0..50).flat_map(|_| random_point(&mut rng, d)).collect();
        let many = net.compile().realize_many(&pts).unwrap();
        let one: Vec<f64> = pts.chunks(d).flat_map(|p| net.realize(p).unwrap()).collect();
        assert!(close(&many, &one));
    }
    assert!(Network::<f64>::from_json("{\"input_dim\":2,\"layers\":[]}").is_err());
}

#[test]
fn product_net_is_certified() {
    for &eps in &[1e-2, 1e-3] {
        for &b in &[1.0, 3.0] {
            let c = product_net::<f64>(eps, b).unwrap();
            assert!(c.certificate.sup_error <= eps, "eps {eps} B {b}: {:e}", c.certificate.sup_error);
            let mut rng = stream_rng(6, (b * 10.0) as u64);
            for _ in 0..200 {
                let (x, y) = (rng.gen_range(-b..=b), rng.gen_range(-b..=b));
                assert!((c.net.realize(&[x, y]).unwrap()[0] - x * y).abs() <= eps);
            }
        }
    }
}

#[test]
fn legendre_nets_are_certified_up_to_degree_ten() {
    assert_eq!(legendre_net::<f64>(0, 1e-3).unwrap().net.realize(&[0.3]).unwrap(), vec![1.0]);
    let p1 = legendre_net::<f64>(1, 1e-3).unwrap();
    assert!((p1.net.realize(&[0.5]).unwrap()[0] - 3f64.sqrt() * 0.5).abs() < 1e-15);
    for k in 0..=10 {
        let c = legendre_net::<f64>(k, 1e-3).unwrap();
        assert!(c.certificate.sup_error <= 1e-3, "k={k}");
        assert_eq!(c.certificate.grid_points, 4097);
        let x = 0.123;
        let want = eval_poly(PolyFamily::LegendreNormalized, k, x).unwrap();
        assert!((c.net.realize(&[x]).unwrap()[0] - want).abs() <= 1e-3);
    }
}

#[test]
fn slepian_nets_one_dimension_within_b_eps() {
    let set = IndexSet::hyperbolic_cross(1, 5).unwrap();
    let basis = ProlateBasis::new(1.0, 4).unwrap();
    let bound = b_dn(1, 5, 1.0).unwrap() as f64 * 1e-2;
    for j in 0..5 {
        let c = slepian_net(&basis, &set, &[j], 1e-2).unwrap();
        assert!(c.certificate.sup_error <= bound, "j={j}");
    }
}

#[test]
fn slepian_net_two_dimensions_single_index() {
    let set = IndexSet::hyperbolic_cross(2, 3).unwrap();
    let basis = ProlateBasis::new(1.0, 2).unwrap();
    let c = slepian_net(&basis, &set, &[0, 1], 1e-3).unwrap();
    let b = b_dn(2, 3, 1.0).unwrap() as f64;
    assert!(c.certificate.sup_error <= b * 1e-3);
    assert!(slepian_net(&basis, &set, &[2, 2], 1e-3).is_err());
}

#[test]
fn pet_fit_tracks_exact_basis_fit() {
    let (d, n, w) = (1, 3, 1.0);
    let limit = eps_condition(d, n, w, 0.5).unwrap();
    let eps = (limit * 0.5).min(1e-4);
    let class = SlepianNetClass::<f64>::build(w, d, n, eps).unwrap();
    let f = TargetFunction::BasisElement { basis: class.basis.clone(), nu: vec![0] };
    let exact = TensorBasis::<f64>::slepian_cross(w, d, n).unwrap();
    for seed in 0..5 {
        let tr = make_training_set(&f, d, 60, seed, &NoiseSpec::Zero).unwrap();
        let te = make_test_set(&f, d, 60, TestSize::Fixed(500), seed).unwrap();
        let (trained, _, rep) = pet_fit(&class, &tr, 0.5).unwrap();
        assert!(rep.gap_holds && rep.weyl_holds, "{rep:?}");
        let pred = trained.evaluate(&te.points).unwrap();
        let net_rmse = slepian_core::sampling::rmse(&te.values, &pred).unwrap();
        let ref_rmse = fit_with_test(&exact, &tr, &te).unwrap().rmse_test.unwrap();
        let b = b_dn(d, n, w).unwrap() as f64;
        assert!((net_rmse - ref_rmse).abs() <= 10.0 * b * eps, "{net_rmse:e} vs {ref_rmse:e}");
    }
    let coarse = SlepianNetClass::<f64>::build(w, d, n, 0.5).unwrap();
    let tr = make_training_set(&f, d, 60, 0, &NoiseSpec::Zero).unwrap();
    assert!(pet_fit(&coarse, &tr, 0.5).is_err() || 0.5 <= limit);
}
