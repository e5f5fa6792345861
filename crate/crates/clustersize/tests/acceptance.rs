//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::process::ExitCode;
use std::time::Instant;

use clustersize::output::csv_string;
use clustersize::{run, EstimatorId, ExperimentConfig};
use clustersize_core::asymptotics::{
    disjoint_process_var, gamma_for_model, mu2_robert, robert_crossover, sigma_db, sigma_sb,
    sliding_process_cov,
};
use clustersize_core::blocks::sliding_maxima;
use clustersize_core::competitors::robert_invert;
use clustersize_core::cpmodel::{cpp_pmf, geometric_pi, iid_model, pbar_integral_oracle, pbar_theory};
use clustersize_core::estimators::{pbar_hat, pbar_hat_naive, pi_recursion};
use clustersize_core::quadrature::QuadratureSpec;
use clustersize_core::simulate::{gen, ModelKind, ModelSpec};
use clustersize_core::{BlockMode, CppModel, EstimatorSpec, Pmf, Sample, Scale};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Gate {
    failures: usize,
}

impl Gate {
    fn check(&mut self, id: &str, what: &str, ok: bool, detail: String) {
        println!("{} [{id}] {what}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failures += 1;
        }
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn closed_form_constants(g: &mut Gate) {
    let q = QuadratureSpec::default();
    let iid = iid_model();
    let db = sigma_db(&iid, 1, &q).unwrap();
    let gdb = gamma_for_model(&iid, &db).unwrap();
    let sb = sigma_sb(&iid, 1, &q).unwrap();
    let gsb = gamma_for_model(&iid, &sb).unwrap();
    let tau = robert_crossover(20.0 / 27.0).unwrap();
    let d = db.get(0, 0);
    let (a, b, c) = (gdb.get(0, 0), gsb.get(0, 0), tau);
    let ok = within(d, 5.0 / 108.0, 1e-4)
        && within(a, 20.0 / 27.0, 4e-4)
        && within(b, 0.3790, 5e-4)
        && within(c, 0.7573, 1e-3);
    g.check(
        "1",
        "closed-form constants",
        ok,
        format!(
            "d_db={d:.6} (5/108={:.6}), gamma_db={a:.6} (20/27={:.6}), gamma_sb={b:.6} (0.3790), crossover tau={c:.5} (0.7573), mu2 there={:.6}",
            5.0 / 108.0,
            20.0 / 27.0,
            mu2_robert(c)
        ),
    );
}

fn process_variances(g: &mut Gate) {
    let q = QuadratureSpec::default();
    let iid = iid_model();
    let v1 = sliding_process_cov(&iid, 1.0, 1.0, 1, 1, &q).unwrap();
    let v2 = sliding_process_cov(&iid, 1.0, 1.0, 2, 2, &q).unwrap();
    let d1 = disjoint_process_var(&iid, 1.0, 1).unwrap();
    let d2 = disjoint_process_var(&iid, 1.0, 2).unwrap();
    let e = std::f64::consts::E;
    let ok = within(v1, 0.1182, 1e-4)
        && within(v2, 0.0800, 1e-4)
        && within(d1, 0.2325, 1e-4)
        && within(d1, 1.0 / e - 1.0 / (e * e), 1e-6)
        && within(d2, 0.1501, 1e-4)
        && within(d2, 1.0 / (2.0 * e) - 1.0 / (4.0 * e * e), 1e-6);
    g.check(
        "2",
        "process variances",
        ok,
        format!("sliding e1={v1:.6} e2={v2:.6}; disjoint e1={d1:.6} e2={d2:.6}"),
    );
}

fn random_series(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.random_range(8..=300);
    if rng.random_bool(0.5) {
        (0..n).map(|_| rng.random_range(-1e3..1e3)).collect()
    } else {
        (0..n).map(|_| f64::from(rng.random_range(0u8..12))).collect()
    }
}

fn oracle_equivalence(g: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut sweep_bad = 0;
    let mut max_bad = 0;
    for _ in 0..200 {
        let x = random_series(&mut rng);
        let n = x.len();
        let b = rng.random_range(2..=n / 2);
        let scale = if rng.random_bool(0.5) { Scale::Z } else { Scale::Y };
        let m_max = rng.random_range(1..=5);
        let s = Sample::new(x).unwrap();
        let spec = EstimatorSpec::new(BlockMode::Sliding, scale, b, m_max).unwrap();
        if pbar_hat(&s, &spec).unwrap() != pbar_hat_naive(&s, &spec).unwrap() {
            sweep_bad += 1;
        }
    }
    for _ in 0..200 {
        let x = random_series(&mut rng);
        let b = rng.random_range(2..=x.len() / 2);
        let s = Sample::new(x.clone()).unwrap();
        let want: Vec<f64> = x.windows(b).map(|w| w.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
        if sliding_maxima(&s, b).unwrap().maxima != want {
            max_bad += 1;
        }
    }
    g.check(
        "3",
        "oracle equivalence",
        sweep_bad == 0 && max_bad == 0,
        format!("sweep mismatches {sweep_bad}/200, sliding max mismatches {max_bad}/200"),
    );
}

fn recursion_round_trip(g: &mut Gate) {
    let sqarch = Pmf::cluster_sizes(&[0.751, 0.168, 0.055, 0.014, 0.008]).unwrap();
    let models = [
        iid_model(),
        CppModel::new(0.5, geometric_pi(0.5, 60).unwrap()).unwrap(),
        CppModel::new(0.727, sqarch).unwrap(),
    ];
    let mut rt: f64 = 0.0;
    let mut oracle: f64 = 0.0;
    for model in &models {
        let pbar = pbar_theory(model, 5);
        let pi = pi_recursion(&pbar.weights()[1..]);
        let quad = pbar_integral_oracle(model, 5, 64);
        for m in 1..=5 {
            rt = rt.max((pi[m - 1] - model.pi().get(m)).abs());
            oracle = oracle.max((quad.get(m) - pbar.get(m)).abs());
        }
    }
    let model = CppModel::new(0.7, geometric_pi(0.5, 60).unwrap()).unwrap();
    let mut inv: f64 = 0.0;
    for &tau in &[0.7, 1.0, 1.3] {
        let p = cpp_pmf(&model, tau, 5).unwrap();
        let (theta, pi) = robert_invert(p.weights(), tau).unwrap();
        inv = inv.max((theta - 0.7).abs());
        for m in 1..=5 {
            inv = inv.max((pi[m - 1] - model.pi().get(m)).abs());
        }
    }
    g.check(
        "4",
        "recursion round trip",
        rt <= 1e-12 && oracle <= 1e-8 && inv <= 1e-12,
        format!("pbar->pi {rt:.1e}, integral oracle {oracle:.1e}, inversion {inv:.1e}"),
    );
}

fn loewner(g: &mut Gate) {
    let q = QuadratureSpec::default();
    let iid = iid_model();
    let mut gaps = Vec::new();
    for m in 1..=3 {
        let db = sigma_db(&iid, m, &q).unwrap();
        let sb = sigma_sb(&iid, m, &q).unwrap();
        gaps.push(sb.loewner_gap(&db).unwrap());
    }
    g.check(
        "5",
        "Loewner order",
        gaps.iter().all(|&x| x >= -1e-6),
        format!("min eig(sigma_db - sigma_sb) for m=1,2,3: {}", gaps.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")),
    );
}

fn study(model: ModelKind, reps: usize, burnin: usize) -> clustersize::SummaryTable {
    let mut cfg = ExperimentConfig::standard(model).unwrap();
    cfg.reps = reps;
    cfg.master_seed = 1;
    cfg.burnin = burnin;
    cfg.estimators = ["db-z", "db-y", "sb-z", "sb-y"].iter().map(|s| s.parse().unwrap()).collect();
    run(&cfg, 0).unwrap()
}

fn monte_carlo(g: &mut Gate) {
    let start = Instant::now();
    let id = |s: &str| s.parse::<EstimatorId>().unwrap();
    let min = |t: &clustersize::SummaryTable, e: &str| t.min_over_b(id(e), 1).unwrap().mse_1e3();
    let factor2 = |x: f64, target: f64| x >= target / 2.0 && x <= target * 2.0;

    let armax = study(ModelKind::Armax { alpha: 0.5 }, 100, 1000);
    let sqarch = study(ModelKind::SqArch { lambda: 0.5 }, 100, 1000);
    let ar = study(ModelKind::ArUniform { r: 4 }, 100, 1000);
    let (az, ay, sy) = (min(&armax, "sb-z"), min(&armax, "sb-y"), min(&sqarch, "sb-y"));
    let mut order = Vec::new();
    let mut order_ok = true;
    for (name, t) in [("armax", &armax), ("sqarch", &sqarch), ("ar", &ar)] {
        for (sb, db) in [("sb-z", "db-z"), ("sb-y", "db-y")] {
            let (s, d) = (min(t, sb), min(t, db));
            order_ok &= s <= 1.1 * d;
            order.push(format!("{name} {sb}={s:.3}/{db}={d:.3}"));
        }
    }
    let ok = factor2(az, 2.642) && factor2(ay, 1.650) && factor2(sy, 1.860) && order_ok;
    g.check(
        "6",
        "Monte Carlo reproduction (N=100, n=2000)",
        ok,
        format!(
            "armax sb-z {az:.3} (2.642), armax sb-y {ay:.3} (1.650), sqarch sb-y {sy:.3} (1.860); {}; {:.1}s",
            order.join(", "),
            start.elapsed().as_secs_f64()
        ),
    );

    // doubling the burn-in must not move the mean of π̂(1) beyond its standard error
    let mean_sd = |burnin: usize| {
        let mut cfg = ExperimentConfig::standard(ModelKind::SqArch { lambda: 0.5 }).unwrap();
        cfg.reps = 100;
        cfg.master_seed = 1;
        cfg.burnin = burnin;
        cfg.block_grid = vec![12];
        cfg.estimators = vec![id("sb-z")];
        let t = run(&cfg, 0).unwrap();
        let r = t.row(id("sb-z"), 12, 1).unwrap();
        (r.bias + cfg.truth.pi[0], r.variance.sqrt())
    };
    let (m1, s1) = mean_sd(1000);
    let (m2, s2) = mean_sd(2000);
    let se = ((s1 * s1 + s2 * s2) / 100.0).sqrt();
    g.check(
        "6b",
        "burn-in sensitivity (sqarch, sb-z, b=12)",
        (m1 - m2).abs() <= se,
        format!("mean pi(1) {m1:.4} vs {m2:.4}, shift {:.4}, standard error {se:.4}", (m1 - m2).abs()),
    );
}

fn marginals(g: &mut Gate) {
    let x = gen(&ModelSpec::new(ModelKind::Armax { alpha: 0.5 }, 100_000, 7)).unwrap();
    let frac = x.values().iter().filter(|&&v| v <= 1.0).count() as f64 / 1e5;
    let y = gen(&ModelSpec::new(ModelKind::ArUniform { r: 4 }, 100_000, 8)).unwrap();
    let mean = y.values().iter().sum::<f64>() / 1e5;
    let e1 = (-1.0f64).exp();
    g.check(
        "7",
        "marginal sanity",
        within(frac, e1, 0.01) && within(mean, 0.5, 0.01),
        format!("armax P(X<=1)={frac:.4} (e^-1={e1:.4}), ar mean={mean:.4}"),
    );
}

fn determinism(g: &mut Gate) {
    let cfg = ExperimentConfig::parse(
        "model = armax(0.5)\nn = 500\nreps = 8\nblock_grid = 6,10,20\nm_max = 3\nmaster_seed = 99\n",
    )
    .unwrap();
    let one = csv_string(&run(&cfg, 1).unwrap());
    let four = csv_string(&run(&cfg, 4).unwrap());
    g.check(
        "8",
        "determinism across workers",
        one == four,
        format!("1 vs 4 workers: {} bytes, identical={}", one.len(), one == four),
    );
}

fn main() -> ExitCode {
    let mut g = Gate { failures: 0 };
    closed_form_constants(&mut g);
    process_variances(&mut g);
    oracle_equivalence(&mut g);
    recursion_round_trip(&mut g);
    loewner(&mut g);
    monte_carlo(&mut g);
    marginals(&mut g);
    determinism(&mut g);
    if g.failures == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", g.failures);
        ExitCode::FAILURE
    }
}
