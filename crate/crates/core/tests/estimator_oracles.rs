//! Independent oracles for the estimator: closed-form constants, the
//! constrained projection, ρ_min and MLE consistency.

use nalgebra::{DMatrix, SymmetricEigen};
use popbias::analysis::{estimate_rho_min, CorrelationBlock, RhoEstimate};
use popbias::environment::NormBounds;
use popbias::estimator::{
    fit_mle, gamma, project_mle, tau_min, DesignMatrix, FilteredHistory, FitOptions, ParamLayout, ParamVector,
    ProjectOptions,
};
use popbias::slate::{ItemId, Slate, UserId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn tau_and_gamma_match_hand_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let e = std::f64::consts::E;
    for _ in 0..20 {
        let m = rng.random_range(1..=5usize);
        let n = rng.random_range(m.max(2)..=50usize);
        let b_max = rng.random_range(0.01..1.0);
        let alpha = rng.random_range(0.001..0.5);
        let delta = rng.random_range(0.001..0.999);
        let d = rng.random_range(1..=64usize);
        let lambda = rng.random_range(0.01..10.0);
        let l = rng.random_range(0.1..4.0);
        let t = rng.random_range(0..100_000) as f64;

        let tau = 8.0 * m as f64 * b_max * (n as f64 / delta).ln() / alpha;
        assert!(close(tau_min(m, b_max, alpha, n, delta).unwrap(), tau, 1e-10));

        let mf = m as f64;
        let df = d as f64;
        let log_term = -delta.ln() + mf * df * (1.0 + t / (lambda * df)).ln();
        let g = 4.0 * e * e * e * e * mf.powi(2) * ((lambda * mf).sqrt() * l + 2.0 * log_term.sqrt());
        assert!(close(gamma(t, delta, m, d, lambda, l).unwrap(), g, 1e-10));
    }
}

/// Small problem with one record per synthetic user so embeddings can differ freely.
fn random_history(rng: &mut ChaCha8Rng, layout: ParamLayout, records: usize, scale: f64) -> (FilteredHistory, Vec<(Vec<f64>, usize)>) {
    let m = layout.slate_size;
    let kappa: Vec<f64> = (0..m).map(|i| 0.3 - 0.1 * i as f64).collect();
    let mut h = FilteredHistory::new(layout, kappa, 0.0);
    let mut raw = Vec::new();
    let slate = Slate::new((0..m).map(ItemId).collect(), m, m.max(2)).unwrap();
    for k in 0..records {
        let x: Vec<f64> = (0..layout.block_dim()).map(|_| rng.random_range(-scale..scale)).collect();
        let c = rng.random_range(0..=m);
        h.admit(k, UserId(k), slate.clone(), c, x.clone()).unwrap();
        raw.push((x, c));
    }
    (h, raw)
}

fn softmax(delta: &[f64]) -> Vec<f64> {
    let denom = 1.0 + delta.iter().map(|d| d.exp()).sum::<f64>();
    delta.iter().map(|d| d.exp() / denom).collect()
}

/// `ψ + Σ_records z(δ) ⊗ x`, written against the raw records.
fn g_oracle(psi: &[f64], raw: &[(Vec<f64>, usize)], layout: ParamLayout, kappa: &[f64]) -> Vec<f64> {
    let d = layout.block_dim();
    let mut g = psi.to_vec();
    for (x, _) in raw {
        let delta: Vec<f64> = (0..layout.slate_size)
            .map(|i| x.iter().zip(&psi[i * d..(i + 1) * d]).map(|(a, b)| a * b).sum::<f64>() + kappa[i])
            .collect();
        let z = softmax(&delta);
        for i in 0..layout.slate_size {
            for k in 0..d {
                g[i * d + k] += z[i] * x[k];
            }
        }
    }
    g
}

fn projection_objective(psi: &[f64], target: &[f64], raw: &[(Vec<f64>, usize)], layout: ParamLayout, kappa: &[f64], inv: &DMatrix<f64>) -> f64 {
    let d = layout.block_dim();
    let g = g_oracle(psi, raw, layout, kappa);
    let mut total = 0.0;
    for i in 0..layout.slate_size {
        let r = nalgebra::DVector::from_iterator(d, (0..d).map(|k| g[i * d + k] - target[i * d + k]));
        total += (r.transpose() * inv * &r)[(0, 0)];
    }
    total
}

fn random_in_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    v.iter().map(|a| a * r / n).collect()
}

#[test]
fn projection_beats_random_feasible_points() {
    let layout = ParamLayout {
        slate_size: 2,
        quality_dim: 2,
        popularity_dim: 1,
    };
    let bounds = NormBounds {
        quality: 0.7,
        popularity: 0.4,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (h, raw) = random_history(&mut rng, layout, 25, 1.0);
    let kappa = h.rank_bias().to_vec();
    let mut v = DesignMatrix::new(layout.block_dim(), 1.0).unwrap();
    for (x, _) in &raw {
        v.add(x);
    }
    let ml_values: Vec<f64> = (0..layout.len()).map(|_| rng.random_range(-2.5..2.5)).collect();
    let ml = ParamVector::from_values(layout, ml_values.clone()).unwrap();
    assert!(!ml.is_feasible(bounds, 0.0));

    let out = project_mle(&ml, &h, &v, bounds, ProjectOptions::default()).unwrap();
    assert!(out.is_feasible(bounds, 1e-9));

    let inv = v.matrix().clone().try_inverse().unwrap();
    let target = g_oracle(&ml_values, &raw, layout, &kappa);
    let best = projection_objective(out.values(), &target, &raw, layout, &kappa, &inv);
    for _ in 0..1000 {
        let mut p = Vec::with_capacity(layout.len());
        for _ in 0..layout.slate_size {
            p.extend(random_in_ball(&mut rng, layout.quality_dim, bounds.quality));
            p.extend(random_in_ball(&mut rng, layout.popularity_dim, bounds.popularity));
        }
        let f = projection_objective(&p, &target, &raw, layout, &kappa, &inv);
        assert!(best <= f + 1e-9, "random feasible point scores {f} below the projection's {best}");
    }
}

/// First ρ on a 1e-4 grid whose assembled block has no negative eigenvalue.
fn rho_grid(full: &DMatrix<f64>, dq: usize) -> Option<f64> {
    let feasible = |rho: f64| {
        let mut a = full.clone();
        for i in 0..dq {
            for j in 0..dq {
                a[(i, j)] *= rho;
            }
        }
        let eig = SymmetricEigen::new(a).eigenvalues;
        eig.iter().copied().fold(f64::INFINITY, f64::min) >= -1e-10
    };
    // scan coarsely, then refine on the fine grid inside the first feasible cell
    let coarse = (0..=100).map(|k| k as f64 / 100.0).find(|&r| r < 1.0 && feasible(r))?;
    let start = ((coarse - 0.01).max(0.0) * 1e4).round() as usize;
    (start..=10_000)
        .map(|k| k as f64 * 1e-4)
        .take_while(|&r| r < 1.0)
        .find(|&r| feasible(r))
}

#[test]
fn rho_bisection_agrees_with_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.random_range(2..=8usize);
        let dq = rng.random_range(1..n);
        let k = rng.random_range(n..=2 * n);
        let a = DMatrix::from_fn(k, n, |_, _| rng.random_range(-1.0..1.0));
        let full = a.transpose() * &a / k as f64;
        let block = CorrelationBlock::from_full(&full, dq).unwrap();
        let est = estimate_rho_min(&block, 1e-6).unwrap();
        match (est, rho_grid(&full, dq)) {
            (RhoEstimate::Feasible(r), Some(g)) => {
                assert!((r - g).abs() <= 2e-4, "bisection {r} vs grid {g}");
            }
            (RhoEstimate::Infeasible, None) => {}
            (e, g) => panic!("bisection {e:?} vs grid {g:?}"),
        }
    }
}

#[test]
fn mle_recovers_parameters_from_5000_records() {
    let layout = ParamLayout {
        slate_size: 2,
        quality_dim: 1,
        popularity_dim: 1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let truth = [0.5, 0.3, -0.4, 0.2];
    let kappa = vec![0.2, 0.0];
    let mut h = FilteredHistory::new(layout, kappa.clone(), 0.0);
    let slate = Slate::new(vec![ItemId(0), ItemId(1)], 2, 2).unwrap();
    for k in 0..5000 {
        let x: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
        let delta: Vec<f64> = (0..2)
            .map(|i| x[0] * truth[2 * i] + x[1] * truth[2 * i + 1] + kappa[i])
            .collect();
        let z = softmax(&delta);
        let u: f64 = rng.random();
        let c = if u < z[0] {
            1
        } else if u < z[0] + z[1] {
            2
        } else {
            0
        };
        h.admit(k, UserId(k), slate.clone(), c, x).unwrap();
    }
    let lambda = 1.0 / 2f64.sqrt();
    let fit = fit_mle(&h, lambda, None, FitOptions::default()).unwrap();
    let truth = ParamVector::from_values(layout, truth.to_vec()).unwrap();
    let err = fit.distance(&truth);
    assert!(err <= 0.1, "‖ψ̂ − ψ*‖ = {err}");
}
