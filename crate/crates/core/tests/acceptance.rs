//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the lines reach the terminal under `cargo test`.
//! `ACCEPTANCE_ONLY=3,4` restricts the run to the listed criteria.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use popbias::analysis::{
    build_nonidentifiable_pair, estimate_rho_min, lock_in_experiment, nonidentifiability_demo, rank_size_empirical,
    CorrelationBlock, LockInConfig, RhoEstimate, TwoItemWalkConfig,
};
use popbias::choice::softmax_choice;
use popbias::estimator::{gamma, log_likelihood, log_likelihood_gradient, tau_min, FilteredHistory, ParamLayout, ParamVector};
use popbias::harness::{emit_results, run_experiment, sweep, ExperimentConfig, OutputFormat, RunRecord, SweepParam};
use popbias::rankers::RankerKind;
use popbias::slate::{ItemId, Slate, UserId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria whose outcome is printed but does not fail the run.
const REPORTED_ONLY: &[u32] = &[8, 9];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn criterion_1() -> Outcome {
    let e = std::f64::consts::E;
    let zero = softmax_choice(&vec![0.0].into()).unwrap().prob(1);
    let one = softmax_choice(&vec![1.0].into()).unwrap().prob(1);
    let exact = (zero - 0.5).abs() <= 1e-12 && (one - e / (1.0 + e)).abs() <= 1e-12 && (one - 0.731059).abs() < 1e-6;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let m = rng.random_range(1..=6);
        let d: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
        let dist = softmax_choice(&d.into()).unwrap();
        let total = dist.no_click_prob() + dist.item_probs().iter().sum::<f64>();
        worst = worst.max((total - 1.0).abs());
    }
    outcome(
        exact && worst <= 1e-12,
        format!("z(0) = {zero}, z(1) = {one:.12}, worst normalization error {worst:.1e}"),
    )
}

fn random_history(rng: &mut ChaCha8Rng) -> FilteredHistory {
    let m = rng.random_range(1..=3usize);
    let qd = rng.random_range(1..=8usize);
    let pd = rng.random_range(0..=(8 - qd).min(4));
    let layout = ParamLayout {
        slate_size: m,
        quality_dim: qd,
        popularity_dim: pd,
    };
    let kappa: Vec<f64> = (0..m).map(|_| rng.random_range(-0.5..0.5)).collect();
    let mut h = FilteredHistory::new(layout, kappa, 0.0);
    let slate = Slate::new((0..m).map(ItemId).collect(), m, m.max(2)).unwrap();
    for k in 0..rng.random_range(1..=50usize) {
        let x: Vec<f64> = (0..layout.block_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        h.admit(k, UserId(k % 7), slate.clone(), rng.random_range(0..=m), x).unwrap();
    }
    h
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let h = random_history(&mut rng);
        let layout = h.layout();
        let lambda = rng.random_range(0.1..2.0);
        let values: Vec<f64> = (0..layout.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let psi = ParamVector::from_values(layout, values.clone()).unwrap();
        let g = log_likelihood_gradient(&psi, &h, lambda);
        let step = 1e-5;
        let fd: Vec<f64> = (0..values.len())
            .map(|k| {
                let mut up = values.clone();
                let mut down = values.clone();
                up[k] += step;
                down[k] -= step;
                let f = |v: Vec<f64>| log_likelihood(&ParamVector::from_values(layout, v).unwrap(), &h, lambda);
                (f(up) - f(down)) / (2.0 * step)
            })
            .collect();
        let diff = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt().max(1.0);
        worst = worst.max(diff / norm);
    }
    outcome(worst <= 1e-6, format!("worst relative gradient error {worst:.2e}"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let e4 = std::f64::consts::E.powi(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let m = rng.random_range(1..=5usize);
        let n = rng.random_range(m.max(2)..=60usize);
        let b_max = rng.random_range(0.01..1.0);
        let alpha = rng.random_range(0.001..0.5);
        let delta = rng.random_range(0.001..0.999);
        let d = rng.random_range(1..=200usize);
        let lambda = rng.random_range(0.01..10.0);
        let l = rng.random_range(0.1..4.0);
        let t = rng.random_range(0..1_000_000) as f64;
        let (mf, df) = (m as f64, d as f64);

        let tau = 8.0 * mf * b_max / alpha * (n as f64 / delta).ln();
        let g = 4.0 * e4 * mf * mf * ((lambda * mf).sqrt() * l + 2.0 * (mf * df * (1.0 + t / (lambda * df)).ln() - delta.ln()).sqrt());
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        worst = worst
            .max(rel(tau_min(m, b_max, alpha, n, delta).unwrap(), tau))
            .max(rel(gamma(t, delta, m, d, lambda, l).unwrap(), g));
    }
    outcome(worst <= 1e-10, format!("worst relative error {worst:.1e}"))
}

fn grid_rho(full: &DMatrix<f64>, dq: usize) -> Option<f64> {
    let psd = |rho: f64| {
        let mut a = full.clone();
        a.view_mut((0, 0), (dq, dq)).scale_mut(rho);
        SymmetricEigen::new(a).eigenvalues.min() >= -1e-10
    };
    let coarse = (0..100).map(|k| k as f64 / 100.0).find(|&r| psd(r))?;
    let from = ((coarse - 0.01).max(0.0) * 1e4).round() as usize;
    (from..10_000).map(|k| k as f64 * 1e-4).find(|&r| psd(r))
}

fn criterion_4() -> Outcome {
    let tol = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    for _ in 0..20 {
        let n = rng.random_range(2..=8usize);
        let dq = rng.random_range(1..n);
        let k = rng.random_range(n..=3 * n);
        let a = DMatrix::from_fn(k, n, |_, _| rng.random_range(-1.0..1.0));
        let full = a.transpose() * &a / k as f64;
        let est = estimate_rho_min(&CorrelationBlock::from_full(&full, dq).unwrap(), tol).unwrap();
        match (est.value(), grid_rho(&full, dq)) {
            (Some(r), Some(g)) => worst = worst.max((r - g).abs()),
            (None, None) => {}
            _ => mismatches += 1,
        }
    }
    let ones = estimate_rho_min(&CorrelationBlock::from_full(&DMatrix::from_element(4, 4, 1.0), 2).unwrap(), tol).unwrap();
    let no_pop = CorrelationBlock::new(DMatrix::identity(3, 3), DMatrix::zeros(3, 2), DMatrix::zeros(2, 2)).unwrap();
    let no_pop = estimate_rho_min(&no_pop, tol).unwrap();
    let pass = worst <= 2e-4
        && mismatches == 0
        && ones == RhoEstimate::Infeasible
        && matches!(no_pop, RhoEstimate::Feasible(r) if r <= tol);
    outcome(
        pass,
        format!("max |bisection − grid| {worst:.1e}, {mismatches} feasibility mismatches, all-ones {ones:?}, no popularity {no_pop:?}"),
    )
}

fn criterion_5() -> Outcome {
    let pair = build_nonidentifiable_pair(0.1, 0.02).unwrap();
    let r = nonidentifiability_demo(&pair, 100_000, 5).unwrap();
    let target = std::f64::consts::E / (1.0 + std::f64::consts::E);
    let exact_gap = (0..2).map(|i| (r.exact[0][i] - r.exact[1][i]).abs()).fold(0.0, f64::max);
    let emp_gap = r.empirical.iter().flatten().map(|v| (v - target).abs()).fold(0.0, f64::max);
    outcome(
        exact_gap <= 1e-12 && emp_gap <= 0.01,
        format!("exact gap {exact_gap:.1e}, empirical rates {:?}, max deviation from e/(1+e) {emp_gap:.4}", r.empirical),
    )
}

fn criterion_6() -> Outcome {
    let walk = TwoItemWalkConfig { kappa: [1.0, 0.0] };
    let seeds: Vec<u64> = (0..50).collect();
    let s = rank_size_empirical(&walk, 50_000, &seeds).unwrap();
    let pq = (s.p - 0.5761).abs() < 1e-4 && (s.q - 0.2119).abs() < 1e-4;
    let share = (s.pi1 - s.p).abs() <= 0.02;
    let reranks = s.mean_reranks <= s.rerank_bound + 3.0 * s.rerank_se;
    let frozen = s.frozen_fraction >= 0.9;
    outcome(
        pq && share && reranks && frozen,
        format!(
            "p = {:.4}, q = {:.4}, π₁ = {:.4}, reranks {:.2} ± {:.2} (bound {:.3}), frozen in {:.0}% of seeds",
            s.p,
            s.q,
            s.pi1,
            s.mean_reranks,
            s.rerank_se,
            s.rerank_bound,
            100.0 * s.frozen_fraction
        ),
    )
}

fn criterion_7() -> Outcome {
    let seeds: Vec<u64> = (0..100).collect();
    let s = lock_in_experiment(&LockInConfig::default(), &seeds).unwrap();
    outcome(
        s.lucky_fraction >= 0.05 && s.unlucky_fraction >= 0.05 && s.distinct_top_ranks >= 2,
        format!(
            "lucky {:.0}%, unlucky {:.0}%, {} distinct quality ranks at the top",
            100.0 * s.lucky_fraction,
            100.0 * s.unlucky_fraction,
            s.distinct_top_ranks
        ),
    )
}

struct Curve {
    final_regret: f64,
    first: f64,
    last: f64,
}

fn curve(cfg: &ExperimentConfig) -> Curve {
    let records = run_experiment(cfg).unwrap();
    let k = records.len() as f64;
    let w = (cfg.horizon / 10).max(1);
    Curve {
        final_regret: records.iter().map(RunRecord::final_regret).sum::<f64>() / k,
        first: records.iter().map(|r| r.mean_increment(0, w)).sum::<f64>() / k,
        last: records.iter().map(|r| r.mean_increment(cfg.horizon - w, cfg.horizon)).sum::<f64>() / k,
    }
}

fn criterion_8() -> Outcome {
    let base = ExperimentConfig::load(&config_dir().join("practical.json")).unwrap();
    let run = |kind| curve(&ExperimentConfig { ranker: kind, ..base.clone() });
    let qp = run(RankerKind::Qp);
    let greedy = run(RankerKind::Greedy);
    let oblivious = run(RankerKind::Oblivious);
    let ratio = |c: &Curve| c.last / c.first;

    let theory = ExperimentConfig::load(&config_dir().join("theory.json")).unwrap();
    let theory_qp = curve(&theory);

    let pass = qp.final_regret < greedy.final_regret
        && qp.final_regret < oblivious.final_regret
        && ratio(&qp) <= 0.5
        && ratio(&greedy) >= 0.8
        && ratio(&oblivious) >= 0.8;
    outcome(
        pass,
        format!(
            "final regret qp {:.1} / greedy {:.1} / oblivious {:.1}; last/first increment qp {:.3} / greedy {:.3} / oblivious {:.3}; theory profile qp {:.1} ({:.3})",
            qp.final_regret,
            greedy.final_regret,
            oblivious.final_regret,
            ratio(&qp),
            ratio(&greedy),
            ratio(&oblivious),
            theory_qp.final_regret,
            ratio(&theory_qp)
        ),
    )
}

fn criterion_9() -> Outcome {
    let base = ExperimentConfig::load(&config_dir().join("practical.json")).unwrap();
    let rows = sweep(&base, SweepParam::BMax, &[0.05, 0.1, 0.2]).unwrap();
    let r: Vec<f64> = rows.iter().map(|row| row.final_window_regret).collect();
    let pass = r[0] <= r[1] && r[1] <= r[2] && r[0] < r[2];

    let short = ExperimentConfig {
        seeds: (0..3).collect(),
        ..base
    };
    let report = |param: SweepParam, values: &[f64]| -> String {
        let rows = sweep(&short, param, values).unwrap();
        let parts: Vec<String> = rows.iter().map(|r| format!("{}={:.2}", r.value, r.final_window_regret)).collect();
        format!("{} [{}]", param.as_str(), parts.join(", "))
    };
    let alpha = report(SweepParam::AlphaMin, &[0.01, 0.02, 0.05]);
    let slate = report(SweepParam::SlateSize, &[2.0, 3.0]);
    outcome(
        pass,
        format!("b_max 0.05/0.1/0.2 → {:.2} / {:.2} / {:.2}; reported: {alpha}; {slate}", r[0], r[1], r[2]),
    )
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut identical = true;
    for kind in [RankerKind::Qp, RankerKind::PopularityDriven, RankerKind::Oblivious] {
        let cfg = ExperimentConfig {
            ranker: kind,
            horizon: 500,
            seeds: vec![0, 1],
            ..ExperimentConfig::load(&config_dir().join("practical.json")).unwrap()
        };
        let mut bytes = Vec::new();
        for copy in 0..2 {
            let out = dir.path().join(format!("{kind}-{copy}"));
            let records = run_experiment(&cfg).unwrap();
            let files = emit_results(&records, OutputFormat::Csv, &out).unwrap();
            bytes.push(std::fs::read(files.runs).unwrap());
        }
        identical &= !bytes[0].is_empty() && bytes[0] == bytes[1];
    }
    outcome(identical, "qp, popularity-driven and oblivious runs.csv compared byte for byte")
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let criteria: [(u32, fn() -> Outcome, Duration); 10] = [
        (1, criterion_1, Duration::from_secs(1)),
        (2, criterion_2, Duration::from_secs(10)),
        (3, criterion_3, Duration::from_secs(1)),
        (4, criterion_4, Duration::from_secs(30)),
        (5, criterion_5, Duration::from_secs(60)),
        (6, criterion_6, Duration::from_secs(120)),
        (7, criterion_7, Duration::from_secs(300)),
        (8, criterion_8, Duration::from_secs(600)),
        (9, criterion_9, Duration::MAX),
        (10, criterion_10, Duration::from_secs(60)),
    ];
    let mut out = std::io::stdout();
    let mut failed = Vec::new();
    for (id, check, budget) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let took = start.elapsed();
        let pass = o.pass && took <= budget;
        let timing = if took > budget {
            format!(" (over the {budget:?} budget)")
        } else {
            String::new()
        };
        writeln!(
            out,
            "criterion {id:>2}: {} [{took:.1?}]{timing} {}",
            if pass { "PASS" } else { "FAIL" },
            o.detail
        )
        .unwrap();
        out.flush().unwrap();
        if !pass && !REPORTED_ONLY.contains(&id) {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        writeln!(out, "failed criteria: {failed:?}").unwrap();
        std::process::exit(1);
    }
}
