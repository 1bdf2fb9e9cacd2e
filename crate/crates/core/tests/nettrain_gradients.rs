use rand::Rng;
use slepian_core::nettrain::{
    flatten_params, init_weights, loss_and_gradient, mse, random_network, set_params, train, Dataset, InitKind,
    TrainConfig,
};
use slepian_core::sampling::stream_rng;

/// Central differences against the analytic gradient on random nets with at
/// most 100 parameters.
#[test]
fn analytic_gradient_matches_central_differences() {
    let mut checked = 0;
    let mut case = 0u64;
    while checked < 20 {
        case += 1;
        let mut rng = stream_rng(77, case);
        let d = rng.gen_range(1..4);
        let hidden = rng.gen_range(1..4);
        let mut arch = vec![d];
        arch.extend((0..hidden).map(|_| rng.gen_range(2..7)));
        arch.push(1);
        let net = random_network::<f64>(&arch, 0.8, case).unwrap();
        if net.num_params() > 100 {
            continue;
        }
        let m = 12;
        let x: Vec<f64> = (0..m * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let data = Dataset::new(d, x, y).unwrap();
        let (loss, grad) = loss_and_gradient(&net, &data).unwrap();
        assert!((loss - mse(&net, &data).unwrap()).abs() <= 1e-14 * (1.0 + loss));
        let p = flatten_params(&net);
        let h = 1e-6;
        let mut fd = vec![0.0; p.len()];
        for i in 0..p.len() {
            let mut probe = net.clone();
            let mut q = p.clone();
            q[i] = p[i] + h;
            set_params(&mut probe, &q).unwrap();
            let up = mse(&probe, &data).unwrap();
            q[i] = p[i] - h;
            set_params(&mut probe, &q).unwrap();
            let down = mse(&probe, &data).unwrap();
            fd[i] = (up - down) / (2.0 * h);
        }
        let diff = grad.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-8);
        assert!(diff / scale <= 1e-4, "case {case}: relative gradient error {:e}", diff / scale);
        checked += 1;
    }
}

#[test]
fn normal_and_he_initializations_have_the_stated_spread() {
    let cfg = TrainConfig { architecture: vec![100, 1000, 1], init: InitKind::Normal { std: 0.1 }, ..TrainConfig::default() };
    let net = init_weights::<f64>(&cfg).unwrap();
    let w = net.layers()[0].weights.as_slice();
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    let sd = (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / w.len() as f64).sqrt();
    assert!((sd - 0.1).abs() <= 0.005, "{sd}");

    let cfg = TrainConfig { architecture: vec![100, 1000, 1], init: InitKind::He, ..TrainConfig::default() };
    let net = init_weights::<f64>(&cfg).unwrap();
    let w = net.layers()[0].weights.as_slice();
    let var = w.iter().map(|v| v * v).sum::<f64>() / w.len() as f64;
    assert!((var - 0.02).abs() <= 0.002, "{var}");
    assert_eq!(init_weights::<f64>(&cfg).unwrap(), net);
}

#[test]
fn small_net_learns_a_line() {
    let m = 64;
    let x: Vec<f64> = (0..m).map(|i| -1.0 + 2.0 * i as f64 / (m - 1) as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
    let data = Dataset::new(1, x, y).unwrap();
    let cfg = TrainConfig {
        architecture: vec![1, 8, 1],
        epochs: 500,
        learning_rate: 1e-2,
        decay_rate: 1.0,
        seed: 3,
        init: InitKind::He,
        ..TrainConfig::default()
    };
    let net = init_weights::<f64>(&cfg).unwrap();
    let out = train(&net, &data, None, &cfg).unwrap();
    assert_eq!(out.trace.len(), 500);
    assert!(mse(&out.net, &data).unwrap() <= 1e-4, "{:e}", mse(&out.net, &data).unwrap());
}

#[test]
fn training_is_deterministic_for_a_seed() {
    let data = Dataset::from_target(&slepian_core::Target::F1, 200, 9).unwrap();
    let cfg = TrainConfig { architecture: vec![1, 10, 10, 1], epochs: 5, batch_size: Some(16), seed: 4, ..TrainConfig::default() };
    let net = init_weights::<f64>(&cfg).unwrap();
    let a = train(&net, &data, None, &cfg).unwrap();
    let b = train(&net, &data, None, &cfg).unwrap();
    assert_eq!(a.net, b.net);
}
