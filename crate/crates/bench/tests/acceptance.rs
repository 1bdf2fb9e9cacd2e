//! Acceptance suite: one PASS/FAIL line per criterion (with sub-checks),
//! exit status nonzero when any criterion fails. Runs as a plain binary so
//! the table is always printed.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex;
use rand::Rng;
use slepian_bench::cli::run;
use slepian_bench::figures::{figure_configs, median_at, Scale};
use slepian_bench::runner::run_experiment;
use slepian_core::bounds::{b_dn, eps_condition, verify_suite, CheckResult};
use slepian_core::lstsq::{fit, projection_proxy, verify_error_bound};
use slepian_core::netcalc::{
    concat, identity_net, legendre_net, linear_combination, parallelize, pet_fit, product_net, Network, SlepianNetClass,
};
use slepian_core::nettrain::{flatten_params, loss_and_gradient, mse, random_network, set_params, Dataset};
use slepian_core::sampling::{make_training_set, stream_rng, NoiseSpec, SampleSet, TargetFunction};
use slepian_core::tensorbasis::{Family1D, TensorBasis};
use slepian_core::{IndexSet, ProlateBasis};

struct Sub {
    name: String,
    passed: bool,
    detail: String,
}

struct Criterion {
    id: usize,
    title: &'static str,
    subs: Vec<Sub>,
    seconds: f64,
}

impl Criterion {
    fn passed(&self) -> bool {
        self.subs.iter().all(|s| s.passed)
    }
}

fn sub(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Sub {
    Sub { name: name.into(), passed, detail: detail.into() }
}

fn timed(id: usize, title: &'static str, f: impl FnOnce() -> Vec<Sub>) -> Criterion {
    let t = Instant::now();
    let subs = f();
    let c = Criterion { id, title, subs, seconds: t.elapsed().as_secs_f64() };
    print_criterion(&c);
    c
}

fn print_criterion(c: &Criterion) {
    println!("{} criterion {}: {} ({:.1} s)", if c.passed() { "PASS" } else { "FAIL" }, c.id, c.title, c.seconds);
    for s in &c.subs {
        println!("    {} {} | {}", if s.passed { "PASS" } else { "FAIL" }, s.name, s.detail);
    }
}

fn from_checks(checks: &[CheckResult], prefixes: &[&str]) -> Vec<Sub> {
    checks
        .iter()
        .filter(|c| prefixes.iter().any(|p| c.name.starts_with(p)))
        .map(|c| sub(c.name.clone(), c.passed, c.detail.clone()))
        .collect()
}

fn criterion_1_and_2() -> (Criterion, Criterion) {
    let t = Instant::now();
    let checks = verify_suite(true);
    let secs = t.elapsed().as_secs_f64();
    let mut c1 = Criterion {
        id: 1,
        title: "prolate correctness for w in {1,2,4,8,16}",
        subs: from_checks(&checks, &["orthonormality", "eigen-residual", "mu split", "prolate ordering"]),
        seconds: secs,
    };
    c1.subs.push(sub("runtime <= 60 s (whole verification pass)", secs <= 60.0, format!("{secs:.1} s")));
    let c2 = Criterion {
        id: 2,
        title: "bound suite",
        subs: from_checks(&checks, &["sup-norm", "kappa bound", "slice inequality", "Legendre tail bound"]),
        seconds: secs,
    };
    print_criterion(&c1);
    print_criterion(&c2);
    (c1, c2)
}

fn slepian_basis(w: f64, d: usize, n: usize) -> (Arc<ProlateBasis>, TensorBasis<f64>) {
    let set = IndexSet::hyperbolic_cross(d, n).unwrap();
    let one = Arc::new(ProlateBasis::new(w, set.max_component()).unwrap());
    (one.clone(), TensorBasis::new(Family1D::Slepian(one), set).unwrap())
}

fn criterion_3() -> Vec<Sub> {
    let mut subs = Vec::new();

    // In-span recovery: random coefficients, exact values, no noise.
    for (w, d, n) in [(4.0, 1, 8), (2.0, 2, 6)] {
        let (_, basis) = slepian_basis(w, d, n);
        let mut worst: f64 = 0.0;
        for seed in 0..20u64 {
            let mut rng = stream_rng(0xC3, seed);
            let c: Vec<Complex<f64>> =
                (0..basis.len()).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let m = 10 * basis.len();
            let pts = slepian_core::sampling::draw_uniform::<f64>(d, m, seed).unwrap();
            let values = slepian_core::lstsq::predict(&basis, &c, &pts).unwrap();
            let s = SampleSet { d, points: pts, values, noise: vec![Complex::new(0.0, 0.0); m], seed };
            let r = fit(&basis, &s).unwrap();
            let err = r.coefficients.iter().zip(&c).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            worst = worst.max(err);
        }
        subs.push(sub(format!("in-span recovery w={w} d={d} n={n}, 20 seeds"), worst <= 1e-8, format!("max coefficient error {worst:.3e}")));
    }

    // Deterministic error inequality for g1 and g3, with and without noise.
    for (f, d) in [(TargetFunction::G1, 1), (TargetFunction::G3, 2)] {
        let (_, basis) = slepian_basis(1.0, d, 10);
        let proxy = projection_proxy(&basis, &f).unwrap();
        for (label, noise) in [("noiseless", NoiseSpec::Zero), ("noise |e|=0.1", NoiseSpec::ScaledToNorm { norm: 0.1 })] {
            let mut fails = Vec::new();
            let mut slack = f64::INFINITY;
            for seed in 0..20u64 {
                let s = make_training_set(&f, d, 1000, seed, &noise).unwrap();
                let r = fit(&basis, &s).unwrap();
                let rep = verify_error_bound(&r, &basis, &f, &s, Some(&proxy), false).unwrap();
                slack = slack.min(rep.rhs - rep.lhs);
                if !rep.holds {
                    fails.push(seed);
                }
            }
            subs.push(sub(
                format!("error inequality {} {label}, 20 seeds", f.name()),
                fails.is_empty(),
                format!("failing seeds {fails:?}, smallest rhs-lhs {slack:.3e}"),
            ));
        }
    }

    // σ_min near one with fifty samples per basis function.
    let mut out_of_range = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for n in 1..=10 {
        let (_, basis) = slepian_basis(1.0, 1, n);
        for seed in 0..20u64 {
            let s = make_training_set(&TargetFunction::G1, 1, 50 * basis.len(), seed, &NoiseSpec::Zero).unwrap();
            let sm = fit(&basis, &s).unwrap().sigma_min;
            lo = lo.min(sm);
            hi = hi.max(sm);
            if !(sm > 0.8 && sm < 1.2) {
                out_of_range.push((n, seed));
            }
        }
    }
    subs.push(sub(
        "sigma_min in (0.8, 1.2) at m = 50#L, w=1, n<=10, 20 seeds",
        out_of_range.is_empty(),
        format!("range [{lo:.4}, {hi:.4}], {} of 200 outside: {:?}", out_of_range.len(), out_of_range),
    ));
    subs
}

fn rows_for(name: &str, keep: impl Fn(&slepian_bench::config::ExperimentConfig) -> bool) -> Vec<slepian_bench::runner::ResultRow> {
    let mut rows = Vec::new();
    for c in figure_configs(name, Scale::Desk).unwrap().into_iter().filter(|c| keep(c)) {
        rows.extend(run_experiment(&c, None).unwrap());
    }
    rows
}

fn criterion_4() -> Vec<Sub> {
    let mut subs = Vec::new();

    let t = Instant::now();
    let g1 = rows_for("bases-1d-g1", |_| true);
    let (s, l) = (median_at(&g1, "slepian", 10, 1000), median_at(&g1, "legendre", 10, 1000));
    let ratio = s / l;
    subs.push(sub(
        "(a) g1 n=10 m=1000: median slepian/legendre <= 0.1",
        ratio <= 0.1,
        format!("slepian {s:.3e}, legendre {l:.3e}, ratio {ratio:.3e} ({:.0} s)", t.elapsed().as_secs_f64()),
    ));

    let mut above = Vec::new();
    for m in g1.iter().map(|r| r.m).filter(|&m| m >= 300).collect::<std::collections::BTreeSet<_>>() {
        let s = median_at(&g1, "slepian", 10, m);
        if s >= median_at(&g1, "legendre", 10, m) || s >= median_at(&g1, "chebyshev", 10, m) {
            above.push(m);
        }
    }
    subs.push(sub("(a') g1: slepian below both polynomial curves for m >= 300", above.is_empty(), format!("violations at m = {above:?}")));

    let t = Instant::now();
    let dl = rows_for("ls-vs-dl-1d", |_| true);
    let ls: Vec<f64> = [11, 16, 21, 26, 31].iter().map(|&n| median_at(&dl, "slepian", n, 5000)).collect();
    let best31 = ls[4];
    subs.push(sub("(b) f1 LS n=31 m=5000: median rmse <= 1e-8", best31 <= 1e-8, format!("median rmse by n {}", ls.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", "))));
    subs.push(sub("(b') f1 LS median rmse decreasing over n = 11..31", ls.windows(2).all(|p| p[1] < p[0]), ""));
    let ls_best = ls.iter().copied().fold(f64::INFINITY, f64::min);
    let nn_best = [1, 2, 3, 4].iter().map(|&l| median_at(&dl, "relu_he", l, 5000)).fold(f64::INFINITY, f64::min);
    let gap = nn_best / ls_best;
    subs.push(sub(
        "(c) LS vs NN in 1-D: gap >= 1e3",
        gap >= 1e3,
        format!("best nn {nn_best:.3e}, best ls {ls_best:.3e}, gap {gap:.3e} ({:.0} s)", t.elapsed().as_secs_f64()),
    ));

    let t = Instant::now();
    let init = rows_for("init-compare", |c| {
        matches!(
            c.nn.as_ref().map(|n| &n.init),
            Some(slepian_core::nettrain::InitKind::Slepian(_)) | Some(slepian_core::nettrain::InitKind::Normal { .. })
        )
    });
    let n_label = init[0].n;
    let m = init[0].m;
    let (sl, nm) = (median_at(&init, "relu_slepian", n_label, m), median_at(&init, "relu_normal", n_label, m));
    let trials = init.iter().filter(|r| r.basis == "relu_slepian").count();
    subs.push(sub(
        "(d) f1 slepian-init vs normal-init: gap >= 10",
        nm / sl >= 10.0 && trials >= 5,
        format!(
            "{trials} trials, median slepian {sl:.3e}, normal {nm:.3e}, gap {:.1} ({:.0} s)",
            nm / sl,
            t.elapsed().as_secs_f64()
        ),
    ));
    subs
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs())))
}

fn random_arch(rng: &mut impl Rng, d: usize, k: usize, hidden: usize) -> Vec<usize> {
    let mut a = vec![d];
    a.extend((0..hidden).map(|_| rng.gen_range(1..7)));
    a.push(k);
    a
}

fn point(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

fn criterion_5() -> Vec<Sub> {
    let mut subs = Vec::new();
    let (mut c_ok, mut p_ok, mut i_ok, mut l_ok) = (0, 0, 0, 0);
    for case in 0..100u64 {
        let mut rng = stream_rng(0xC5, case);
        let d = rng.gen_range(1..4);
        let h1 = rng.gen_range(0..4);
        let h2 = rng.gen_range(0..4);
        let inner: Network<f64> = random_network(&random_arch(&mut rng, d, 2, h1), 1.0, 4 * case).unwrap();
        let outer: Network<f64> = random_network(&random_arch(&mut rng, 2, 1, h2), 1.0, 4 * case + 1).unwrap();
        let twin: Network<f64> = random_network(&random_arch(&mut rng, d, 2, h1), 1.0, 4 * case + 2).unwrap();
        let x = point(&mut rng, d);
        let c = concat(&outer, &inner).unwrap();
        c_ok += close(&c.realize(&x).unwrap(), &outer.realize(&inner.realize(&x).unwrap()).unwrap()) as usize;
        let p = parallelize(&inner, &twin).unwrap();
        let mut want = inner.realize(&x).unwrap();
        want.extend(twin.realize(&x).unwrap());
        p_ok += close(&p.realize(&x).unwrap(), &want) as usize;
        let id: Network<f64> = identity_net(d, rng.gen_range(1..8)).unwrap();
        i_ok += (id.realize(&x).unwrap() == x) as usize;
        let (a, b) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let lc = linear_combination(&[inner.clone(), twin.clone()], &[a, b]).unwrap();
        let want: Vec<f64> = inner
            .realize(&x)
            .unwrap()
            .iter()
            .zip(twin.realize(&x).unwrap())
            .map(|(u, v)| a * u + b * v)
            .collect();
        l_ok += close(&lc.realize(&x).unwrap(), &want) as usize;
    }
    for (name, ok) in [("concat", c_ok), ("parallelize", p_ok), ("identity", i_ok), ("linear combination", l_ok)] {
        subs.push(sub(format!("{name} identity, 100 random cases"), ok == 100, format!("{ok}/100 exact")));
    }

    for &eps in &[1e-2, 1e-3] {
        for &b in &[1.0, 3.0] {
            let c = product_net::<f64>(eps, b).unwrap();
            subs.push(sub(
                format!("product_net eps={eps:e} B={b}"),
                c.certificate.sup_error <= eps,
                format!("sup error {:.3e} on {} points, depth {}", c.certificate.sup_error, c.certificate.grid_points, c.net.depth()),
            ));
        }
    }
    let mut worst: f64 = 0.0;
    let mut depth = 0;
    for k in 0..=10 {
        let c = legendre_net::<f64>(k, 1e-3).unwrap();
        worst = worst.max(c.certificate.sup_error);
        depth = depth.max(c.net.depth());
    }
    subs.push(sub("legendre_net k<=10 at eps=1e-3", worst <= 1e-3, format!("worst sup error {worst:.3e}, max depth {depth}")));

    for (d, n, eps) in [(1usize, 5usize, 1e-2), (2, 3, 1e-3)] {
        let class = SlepianNetClass::<f64>::build(1.0, d, n, eps).unwrap();
        let bound = b_dn(d, n, 1.0).unwrap() as f64 * eps;
        let worst = class.certificates.iter().map(|c| c.sup_error).fold(0.0, f64::max);
        subs.push(sub(
            format!("slepian_net class d={d} w=1 n={n} eps={eps:e}"),
            worst <= bound,
            format!("{} nets, worst sup error {worst:.3e} vs B(d,n)eps = {bound:.3e}", class.nets.len()),
        ));
    }

    // Last-layer fits at admissible ε.
    for (d, n) in [(1usize, 5usize), (2, 3)] {
        let limit = eps_condition(d, n, 1.0, 0.5).unwrap();
        let eps = limit.min(1e-3);
        let class = SlepianNetClass::<f64>::build(1.0, d, n, eps).unwrap();
        let f = if d == 1 { TargetFunction::G1 } else { TargetFunction::G3 };
        let mut bad = Vec::new();
        let mut max_ratio: f64 = 0.0;
        for seed in 0..10u64 {
            let s = make_training_set(&f, d, 20 * class.nets.len(), seed, &NoiseSpec::Zero).unwrap();
            let (_, _, rep) = pet_fit(&class, &s, 0.5).unwrap();
            max_ratio = max_ratio.max(rep.frobenius_gap / rep.gap_bound);
            if !(rep.gap_holds && rep.weyl_holds) {
                bad.push(seed);
            }
        }
        subs.push(sub(
            format!("pet_fit d={d} n={n} eps={eps:.2e}: Frobenius gap and Weyl, 10 runs"),
            bad.is_empty(),
            format!("failing seeds {bad:?}, max gap/bound {max_ratio:.3e}"),
        ));
    }
    subs
}

fn cli_bytes(args: &[&str]) -> (i32, Vec<u8>) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("slepian").chain(args.iter().copied()), &mut out, &mut err);
    (code, out)
}

fn criterion_6() -> Vec<Sub> {
    let dir = std::env::temp_dir().join(format!("slepian-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let configs = [
        ("ls", "id = \"ls\"\nfunction = \"g3\"\nmethod = \"ls\"\nd = 2\nw = 3.0\nn_grid = [3, 8]\nm_grid = [30, 120]\ntrials = 4\nseed = 11\nnoise_kind = \"complex_gaussian\"\nnoise_level = 0.05\n"),
        ("nn", "id = \"nn\"\nfunction = \"f1\"\nmethod = \"nn\"\nd = 1\nn_grid = [1, 2]\nm_grid = [100]\ntrials = 3\nseed = 12\n[nn]\narchitecture = [1, 10, 1]\nepochs = 5\nbatch_size = 16\n"),
        ("pet", "id = \"pet\"\nfunction = \"g1\"\nmethod = \"pet\"\nd = 1\nn_grid = [3]\nm_grid = [40, 90]\ntrials = 3\nseed = 13\neps = 1e-4\n"),
    ];
    let mut subs = Vec::new();
    for (name, text) in configs {
        let path = dir.join(format!("{name}.toml"));
        std::fs::write(&path, text).unwrap();
        let p = path.to_str().unwrap();
        let runs: Vec<(i32, Vec<u8>)> =
            ["1", "1", "4", "8"].iter().map(|w| cli_bytes(&["experiment", "--config", p, "--workers", w])).collect();
        let same = runs.iter().all(|r| r.0 == 0 && r.1 == runs[0].1);
        subs.push(sub(
            format!("experiment {name}: two runs at 1 worker, then 4 and 8 workers"),
            same,
            format!("{} bytes each", runs[0].1.len()),
        ));
    }
    let fit_args = ["fit", "--function", "g2", "--d", "1", "--w", "5", "--n", "8", "--m", "200", "--seed", "3", "--noise-std", "0.1"];
    let (a, b) = (cli_bytes(&fit_args), cli_bytes(&fit_args));
    subs.push(sub("fit JSON repeated", a.0 == 0 && a.1 == b.1, format!("{} bytes", a.1.len())));
    subs
}

fn criterion_7() -> Vec<Sub> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut attempt = 0u64;
    while cases < 20 {
        attempt += 1;
        let mut rng = stream_rng(0xC7, attempt);
        let d = rng.gen_range(1..4);
        let hidden = rng.gen_range(1..4);
        let arch = random_arch(&mut rng, d, 1, hidden);
        let net = random_network::<f64>(&arch, 0.8, attempt).unwrap();
        if net.num_params() > 100 {
            continue;
        }
        let m = 16;
        let x: Vec<f64> = (0..m * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let data = Dataset::new(d, x, y).unwrap();
        let (_, grad) = loss_and_gradient(&net, &data).unwrap();
        let p = flatten_params(&net);
        let h = 1e-6;
        let mut probe = net.clone();
        let fd: Vec<f64> = (0..p.len())
            .map(|i| {
                let mut q = p.clone();
                q[i] += h;
                set_params(&mut probe, &q).unwrap();
                let up = mse(&probe, &data).unwrap();
                q[i] -= 2.0 * h;
                set_params(&mut probe, &q).unwrap();
                (up - mse(&probe, &data).unwrap()) / (2.0 * h)
            })
            .collect();
        let diff = grad.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-8);
        worst = worst.max(diff / scale);
        cases += 1;
    }
    vec![sub("analytic vs central differences, 20 nets <= 100 params", worst <= 1e-4, format!("worst relative error {worst:.3e}"))]
}

fn main() {
    // `cargo test` passes harness flags such as `--nocapture`; list mode
    // must print nothing.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let t = Instant::now();
    let (c1, c2) = criterion_1_and_2();
    let mut all = vec![c1, c2];
    all.push(timed(3, "least-squares mechanics", criterion_3));
    all.push(timed(4, "figure reproductions at desk scale", criterion_4));
    all.push(timed(5, "network calculus", criterion_5));
    all.push(timed(6, "determinism", criterion_6));
    all.push(timed(7, "gradient correctness", criterion_7));
    let failed: Vec<usize> = all.iter().filter(|c| !c.passed()).map(|c| c.id).collect();
    println!();
    for c in &all {
        println!("{} criterion {}: {}", if c.passed() { "PASS" } else { "FAIL" }, c.id, c.title);
    }
    println!("acceptance: {} of {} criteria pass ({:.0} s)", all.len() - failed.len(), all.len(), t.elapsed().as_secs_f64());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
