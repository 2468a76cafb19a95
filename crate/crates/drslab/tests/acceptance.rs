//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the libtest
//! harness so every line is printed and a failure in one criterion does not
//! hide the others. Set `DRSLAB_ACCEPTANCE_FAST=1` to skip the criteria that
//! train full-size GANs (1, 3, 9).

mod common;

use std::collections::HashMap;
use std::time::{Duration, Instant};

use drs_core::drs::{acceptance_prob, drs_sample_from, f_hat, DrsConfig, GammaPolicy, MaxEstimate, Uniform1d};
use drs_core::loss::{hinge_d_loss, hinge_g_loss, ns_d_loss, ns_g_loss};
use drs_core::nn::{mlp_spec, Activation, Matrix, Network};
use drs_core::rng::{seeded, substream};
use drs_core::target::MixtureSpec;
use drs_core::eval::within_k_std_table;
use drslab::experiments::{
    prepare_models, run_ablation_with, run_sweep_with, run_table1_with, ModelProvider, SeedModels,
};
use drslab::oracle::{one_dim, oracle_drs_config};
use drslab::ExperimentConfig;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    id: u32,
    pass: Option<bool>,
    detail: String,
}

fn report(id: u32, pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        id,
        pass: Some(pass),
        detail: detail.into(),
    }
}

fn skipped(id: u32, why: &str) -> Outcome {
    Outcome {
        id,
        pass: None,
        detail: why.into(),
    }
}

fn print(o: &Outcome) {
    let tag = match o.pass {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "SKIP",
    };
    println!("criterion {:>2}: {tag} | {}", o.id, o.detail);
}

// ---------------------------------------------------------------- 2

fn ground_truth_within_k() -> Outcome {
    let t = Instant::now();
    let spec = drs_core::target::benchmark_mixture();
    let samples = spec.sample_n(&mut substream(1, "ground-truth"), 10_000);
    let table = within_k_std_table(&samples, &spec);
    let elapsed = t.elapsed();
    let reference = [39.3, 86.6, 98.9, 99.9];
    let analytic: Vec<f64> = (1..=4).map(|k| 100.0 * (1.0 - (-(k * k) as f64 / 2.0).exp())).collect();
    let ok = (0..4).all(|k| (table[k] - reference[k]).abs() <= 1.5 && (table[k] - analytic[k]).abs() <= 1.5)
        && elapsed < Duration::from_secs(1);
    report(
        2,
        ok,
        format!("within-k {:?} vs reference {reference:?}, analytic {analytic:.1?}; {elapsed:.2?}", table.map(round2)),
    )
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

// ---------------------------------------------------------------- 4, 6

fn exact_rs_ks(cfg: &ExperimentConfig) -> (Outcome, Outcome) {
    let t = Instant::now();
    let r = one_dim(&cfg.oracle).expect("1D oracle runs");
    let elapsed = t.elapsed();
    let rate_ok = (r.exact_rate - 1.0 / r.envelope).abs() <= 0.01;
    let four = report(
        4,
        r.exact_ks.passes && rate_ok && !r.threshold_ks.passes && elapsed < Duration::from_secs(5),
        format!(
            "exact RS KS p={:.3} (n={}), rate {:.4} vs 1/M {:.4}; threshold KS p={:.2e} at rate {:.4}; {elapsed:.2?}",
            r.exact_ks.p_value, r.exact_ks.n, r.exact_rate, 1.0 / r.envelope, r.threshold_ks.p_value, r.threshold_rate
        ),
    );
    let six = oracle_equivalence(cfg, r.drs_ks.p_value, r.drs_ks.passes, r.drs_max_prob_error);
    (four, six)
}

/// Also recomputes the DRS acceptance probabilities directly, independent of
/// the oracle module's bookkeeping.
fn oracle_equivalence(cfg: &ExperimentConfig, ks_p: f64, ks_ok: bool, module_err: f64) -> Outcome {
    let w = cfg.oracle.half_width;
    let proposal = Uniform1d { low: -w, high: w };
    let g = 1.0 / (2.0 * w);
    let m = drs_core::math::normal_pdf(0.0) / g * (1.0 + 1e-12);
    let critic = drs_core::drs::FnCritic(|x: &f64| drs_core::math::normal_pdf(*x).ln() - g.ln());
    let out = drs_sample_from(
        &proposal,
        &critic,
        &oracle_drs_config(2_000),
        MaxEstimate::new(m.ln()),
        &mut substream(9, "acceptance-oracle"),
    )
    .unwrap();
    let err = out
        .all
        .iter()
        .map(|r| (r.acceptance_prob - drs_core::math::normal_pdf(r.point) / (m * g)).abs())
        .fold(0.0, f64::max);
    report(
        6,
        err <= 1e-6 && module_err <= 1e-6 && ks_ok,
        format!("max |p_drs - p_exact| = {err:.2e} / {module_err:.2e}; DRS KS p={ks_p:.3}"),
    )
}

// ---------------------------------------------------------------- 5

fn algebraic_identity() -> Outcome {
    let mut rng = seeded(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1_000 {
        let dm: f64 = rng.random_range(-50.0..50.0);
        let gap: f64 = rng.random_range(1e-3..20.0);
        let d = dm - gap;
        let p = acceptance_prob(f_hat(d, dm, 1e-12, 0.0).unwrap());
        let want = (d - dm).exp();
        worst = worst.max(((p - want) / want).abs());
    }
    report(5, worst <= 1e-9, format!("max relative error {worst:.2e} over 1000 pairs"))
}

// ---------------------------------------------------------------- 7

fn reference_forward(net: &Network, batch: &Matrix) -> Vec<f64> {
    let mut out = Vec::new();
    for r in 0..batch.rows {
        let mut a = batch.row(r).to_vec();
        for l in &net.layers {
            let (din, dout) = (l.spec.input_dim, l.spec.output_dim);
            a = (0..dout)
                .map(|o| {
                    let s = l.bias[o] + (0..din).map(|i| l.weights[o * din + i] * a[i]).sum::<f64>();
                    if l.spec.activation == Activation::Relu { s.max(0.0) } else { s }
                })
                .collect();
        }
        out.extend(a);
    }
    out
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-6)
}

fn normal(rng: &mut impl Rng) -> f64 {
    Distribution::<f64>::sample(&StandardNormal, rng)
}

fn gradient_check() -> Outcome {
    const H: f64 = 1e-6;
    let shapes: [(usize, &[usize], usize); 5] =
        [(2, &[8, 8, 8], 1), (2, &[16, 16], 2), (3, &[5], 4), (1, &[], 1), (4, &[6, 3], 2)];
    let mut worst_net: f64 = 0.0;
    for (k, (din, hidden, dout)) in shapes.iter().enumerate() {
        let mut rng = seeded(70 + k as u64);
        let mut net = Network::init(&mlp_spec(*din, hidden, *dout), &mut rng).unwrap();
        for l in &mut net.layers {
            for b in &mut l.bias {
                *b = 0.5 * normal(&mut rng);
            }
        }
        let rows = 6;
        let batch = Matrix::from_vec(rows, *din, (0..rows * din).map(|_| normal(&mut rng)).collect()).unwrap();
        let coef: Vec<f64> = (0..rows * dout).map(|_| normal(&mut rng)).collect();
        let obj = |n: &Network| reference_forward(n, &batch).iter().zip(&coef).map(|(a, c)| a * c).sum::<f64>();
        let tape = net.forward(&batch).unwrap();
        let grads = net
            .param_gradients(&tape, &Matrix::from_vec(rows, *dout, coef.clone()).unwrap())
            .unwrap();
        for li in 0..net.layers.len() {
            let nw = net.layers[li].weights.len();
            for j in 0..nw + net.layers[li].bias.len() {
                let (mut p, mut m) = (net.clone(), net.clone());
                let analytic = if j < nw {
                    p.layers[li].weights[j] += H;
                    m.layers[li].weights[j] -= H;
                    grads.layers[li].weights[j]
                } else {
                    p.layers[li].bias[j - nw] += H;
                    m.layers[li].bias[j - nw] -= H;
                    grads.layers[li].bias[j - nw]
                };
                worst_net = worst_net.max(rel(analytic, (obj(&p) - obj(&m)) / (2.0 * H)));
            }
        }
    }

    let mut worst_loss: f64 = 0.0;
    for k in 0..5u64 {
        let mut rng = seeded(80 + k);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| loop {
                    let v = 3.0 * normal(&mut rng);
                    if (v.abs() - 1.0).abs() > 0.05 {
                        break v;
                    }
                })
                .collect()
        };
        let real = draw(5);
        let fake = draw(6);
        let fd = |f: &dyn Fn(&[f64]) -> f64, x: &[f64], j: usize| {
            let (mut p, mut m) = (x.to_vec(), x.to_vec());
            p[j] += H;
            m[j] -= H;
            (f(&p) - f(&m)) / (2.0 * H)
        };
        for d in [ns_d_loss as fn(&[f64], &[f64]) -> drs_core::loss::DiscriminatorLoss, hinge_d_loss] {
            let out = d(&real, &fake);
            for j in 0..real.len() {
                worst_loss = worst_loss.max(rel(out.grad_real[j], fd(&|r| d(r, &fake).loss, &real, j)));
            }
            for j in 0..fake.len() {
                worst_loss = worst_loss.max(rel(out.grad_fake[j], fd(&|f| d(&real, f).loss, &fake, j)));
            }
        }
        for g in [ns_g_loss as fn(&[f64]) -> drs_core::loss::GeneratorLoss, hinge_g_loss] {
            let out = g(&fake);
            for j in 0..fake.len() {
                worst_loss = worst_loss.max(rel(out.grad_fake[j], fd(&|f| g(f).loss, &fake, j)));
            }
        }
    }
    report(
        7,
        worst_net < 1e-4 && worst_loss < 1e-4,
        format!("max relative error: network {worst_net:.2e}, losses {worst_loss:.2e} (5 configs each)"),
    )
}

// ---------------------------------------------------------------- 8

fn gamma_limits() -> Outcome {
    let proposal = Uniform1d { low: -5.0, high: 5.0 };
    let critic = drs_core::drs::FnCritic(|x: &f64| -x * x / 2.0);
    let draws = 100_000;
    let run = |gamma: f64| {
        let cfg = DrsConfig {
            gamma_policy: GammaPolicy::Fixed { gamma },
            target_count: draws,
            max_draws: Some(draws),
            min_acceptance_rate: 0.0,
            ..DrsConfig::default()
        };
        drs_sample_from(&proposal, &critic, &cfg, MaxEstimate::new(0.0), &mut substream(8, "gamma-limit")).unwrap()
    };
    let high = run(40.0);
    let low = run(-40.0);
    let positive = high.all.iter().chain(&low.all).all(|r| r.acceptance_prob > 0.0);
    let (rh, rl) = (high.acceptance_rate(), low.acceptance_rate());
    report(
        8,
        rh < 1e-4 && rl > 1.0 - 1e-4 && positive && high.all.len() == draws && low.all.len() == draws,
        format!("rate at γ=+40: {rh:.2e}, at γ=-40: {rl:.6} over {draws} draws; all probs > 0: {positive}"),
    )
}

// ---------------------------------------------------------------- 10

fn determinism() -> Outcome {
    let cfg = common::tiny_config();
    let tmp = tempfile::tempdir().unwrap();
    let mut diffs = Vec::new();
    for exp in [
        drslab::Experiment::Table1,
        drslab::Experiment::Ablation,
        drslab::Experiment::Sweep,
        drslab::Experiment::Oracle,
        drslab::Experiment::Interp,
    ] {
        let a = tmp.path().join(format!("{exp}_a"));
        let b = tmp.path().join(format!("{exp}_b"));
        drslab::run_experiment(exp, &cfg, &a, 0).unwrap();
        drslab::run_experiment(exp, &cfg, &b, 0).unwrap();
        let (ta, tb) = (common::read_tree(&a), common::read_tree(&b));
        if ta.keys().ne(tb.keys()) {
            diffs.push(format!("{exp}: file sets differ"));
            continue;
        }
        for (name, bytes) in &ta {
            let same = if name == "manifest.json" {
                common::manifest_without_timings(bytes) == common::manifest_without_timings(&tb[name])
            } else {
                bytes == &tb[name]
            };
            if !same {
                diffs.push(format!("{exp}/{name}"));
            }
        }
    }
    report(
        10,
        diffs.is_empty(),
        if diffs.is_empty() {
            "all five experiments rerun byte-identical (manifest compared without wall-clock fields)".into()
        } else {
            format!("differences: {}", diffs.join(", "))
        },
    )
}

// ---------------------------------------------------------------- 1, 3, 9

/// Trains each seed once and hands clones to every experiment.
struct Cache {
    models: HashMap<u64, SeedModels>,
    seconds: HashMap<u64, f64>,
}

impl ModelProvider for Cache {
    fn models(&mut self, cfg: &ExperimentConfig, mixture: &MixtureSpec, seed: u64) -> Result<SeedModels, drslab::LabError> {
        if let Some(m) = self.models.get(&seed) {
            return Ok(m.clone());
        }
        let t = Instant::now();
        let m = prepare_models(cfg, mixture, seed)?;
        self.seconds.insert(seed, t.elapsed().as_secs_f64());
        self.models.insert(seed, m.clone());
        Ok(m)
    }
}

fn full_scale(cfg: &ExperimentConfig) -> Vec<Outcome> {
    let tmp = tempfile::tempdir().unwrap();
    let mut cache = Cache {
        models: HashMap::new(),
        seconds: HashMap::new(),
    };
    let mut out = Vec::new();

    let t = Instant::now();
    let t1 = run_table1_with(cfg, &tmp.path().join("table1"), 0, &mut cache);
    let table1_secs = t.elapsed().as_secs_f64();
    out.push(match t1 {
        Ok(r) => {
            let (wo, w) = (&r.without_drs, &r.with_drs);
            let per_seed = table1_secs / r.seeds.len().max(1) as f64;
            let ok = r.seeds.len() == 5
                && wo.recovered_modes.mean >= 24.0
                && w.recovered_modes.mean >= 24.0
                && w.hq_fraction.mean - wo.hq_fraction.mean >= 0.10
                && w.hq_residual_std.mean <= wo.hq_residual_std.mean
                && per_seed < 15.0 * 60.0;
            report(
                1,
                ok,
                format!(
                    "{} seeds; modes {:.1} -> {:.1}; hq {:.1}% -> {:.1}%; residual std {:.4} -> {:.4}; {:.0}s per seed",
                    r.seeds.len(),
                    wo.recovered_modes.mean,
                    w.recovered_modes.mean,
                    100.0 * wo.hq_fraction.mean,
                    100.0 * w.hq_fraction.mean,
                    wo.hq_residual_std.mean,
                    w.hq_residual_std.mean,
                    per_seed
                ),
            )
        }
        Err(e) => report(1, false, format!("table1 failed: {e}")),
    });

    out.push(match run_ablation_with(cfg, &tmp.path().join("ablation"), 0, &mut cache) {
        Ok(r) => {
            let modes = |arm: &str| r.arm(arm).map(|a| a.recovered_modes.mean).unwrap_or(f64::NAN);
            let rate = |arm: &str| {
                r.arm(arm)
                    .and_then(|a| a.acceptance_rate)
                    .map(|m| m.mean)
                    .unwrap_or(f64::NAN)
            };
            let (dft, tft, tno, dno) =
                (modes("drs_ft"), modes("threshold_ft"), modes("threshold_no_ft"), modes("drs_no_ft"));
            let sizes_ok = r.seeds.iter().all(|s| s.rows.iter().all(|row| row.report.n_samples == cfg.eval_samples));
            report(
                3,
                dft >= 24.5 && tft <= 22.0 && tno <= 10.0 && dno >= 24.0 && sizes_ok,
                format!(
                    "modes: DRS(FT) {dft:.1}, Threshold(FT) {tft:.1}, Threshold(No FT) {tno:.1}, DRS(No FT) {dno:.1}; \
                     rates DRS/Thr FT {:.3}/{:.3}, No FT {:.3}/{:.3}",
                    rate("drs_ft"),
                    rate("threshold_ft"),
                    rate("drs_no_ft"),
                    rate("threshold_no_ft")
                ),
            )
        }
        Err(e) => report(3, false, format!("ablation failed: {e}")),
    });

    out.push(match run_sweep_with(cfg, &tmp.path().join("sweep"), 0, &mut cache) {
        Ok(points) => {
            let mut ok = true;
            let mut parts = Vec::new();
            for seed in cfg.seeds.iter() {
                let at = |p: f64| points.iter().find(|s| s.seed == *seed && s.percentile == p);
                match (at(0.0), at(90.0)) {
                    (Some(lo), Some(hi)) => {
                        ok &= hi.hq_fraction >= lo.hq_fraction && lo.acceptance_rate >= 0.95;
                        parts.push(format!(
                            "seed {seed}: hq {:.3}->{:.3}, rate@0 {:.3}, rate@90 {:.3}",
                            lo.hq_fraction, hi.hq_fraction, lo.acceptance_rate, hi.acceptance_rate
                        ));
                    }
                    _ => {
                        ok = false;
                        parts.push(format!("seed {seed}: missing sweep point"));
                    }
                }
            }
            report(9, ok, parts.join("; "))
        }
        Err(e) => report(9, false, format!("sweep failed: {e}")),
    });

    let mut secs: Vec<_> = cache.seconds.into_iter().collect();
    secs.sort_by_key(|p| p.0);
    println!(
        "training + keep-training seconds per seed: {}",
        secs.iter().map(|(s, t)| format!("{s}={t:.0}")).collect::<Vec<_>>().join(", ")
    );
    out
}

fn main() {
    // `cargo test` passes harness flags such as --list; only run on a plain
    // invocation or an explicit filter naming this suite.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let fast = std::env::var("DRSLAB_ACCEPTANCE_FAST").is_ok_and(|v| !v.is_empty() && v != "0");
    let cfg = ExperimentConfig::default();

    let mut outcomes = Vec::new();
    let emit = |o: Outcome, all: &mut Vec<Outcome>| {
        print(&o);
        all.push(o);
    };
    emit(ground_truth_within_k(), &mut outcomes);
    let (four, six) = exact_rs_ks(&cfg);
    emit(four, &mut outcomes);
    emit(algebraic_identity(), &mut outcomes);
    emit(six, &mut outcomes);
    emit(gradient_check(), &mut outcomes);
    emit(gamma_limits(), &mut outcomes);
    emit(determinism(), &mut outcomes);
    if fast {
        for id in [1, 3, 9] {
            emit(skipped(id, "DRSLAB_ACCEPTANCE_FAST is set"), &mut outcomes);
        }
    } else {
        for o in full_scale(&cfg) {
            emit(o, &mut outcomes);
        }
    }

    outcomes.sort_by_key(|o| o.id);
    println!("---- acceptance summary ----");
    for o in &outcomes {
        print(o);
    }
    let failed = outcomes.iter().filter(|o| o.pass == Some(false)).count();
    println!("{failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
