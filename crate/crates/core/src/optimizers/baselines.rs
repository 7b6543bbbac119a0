use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::oracle::Bg0Oracle;
use crate::vecops::{self, all_finite};

use super::trace::{Recorder, StateRecord, Trace};
use super::BatchPolicy;

fn check_baseline(oracle: &Bg0Oracle, lr: f64, policy: &BatchPolicy, horizon: usize, x0: &[f64]) -> Result<()> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::invalid(format!("learning rate must be positive, got {lr}")));
    }
    if horizon < 1 {
        return Err(Error::invalid("horizon T must be >= 1"));
    }
    policy.validate()?;
    check_dim(oracle.dim(), x0.len())?;
    if oracle.x0() != x0 {
        return Err(Error::invalid("oracle reference point must equal the starting point"));
    }
    Ok(())
}

fn batch_at(rec: &mut Recorder, policy: &BatchPolicy, oracle: &Bg0Oracle, x: &[f64]) -> usize {
    let (b, capped) = policy.size_for(oracle.noise_variance(x));
    if capped {
        rec.trace_mut().batch_cap_hits += 1;
    }
    b
}

/// Mini-batch SGD, `x^{k+1} = x^k - lr v^k`, with `v^k` the average of
/// `b_k` fresh samples at `x^k`.
pub fn run_sgd<R: Rng + ?Sized>(
    oracle: &mut Bg0Oracle,
    lr: f64,
    policy: &BatchPolicy,
    horizon: usize,
    x0: &[f64],
    rng: &mut R,
) -> Result<Trace> {
    check_baseline(oracle, lr, policy, horizon, x0)?;
    let base = oracle.base().clone();
    let mut rec = Recorder::new("sgd", 0, x0, horizon);
    rec.trace_mut().lr = Some(lr);
    rec.trace_mut().policy = Some(policy.clone());

    let mut x = x0.to_vec();
    for k in 0..horizon {
        let b = batch_at(&mut rec, policy, oracle, &x);
        let batch = oracle.draw_batch(b, rng)?;
        let (loss, grad) = base.value_and_grad(&x);
        let v = oracle.perturb_batch(&x, &grad, &batch);
        if !(loss.is_finite() && all_finite(&v)) {
            return Ok(rec.abort(k, "non-finite gradient estimate"));
        }
        rec.push(StateRecord {
            x: &x,
            loss,
            grad: &grad,
            estimator: &v,
            batch: b as u64,
            sfo: oracle.sfo_count(),
        });
        if k + 1 == horizon {
            break;
        }
        vecops::axpy(-lr, &v, &mut x);
        if !all_finite(&x) {
            return Ok(rec.abort(k + 1, "non-finite iterate"));
        }
    }
    Ok(rec.finish())
}

/// Unnormalized STORM, `x^{k+1} = x^k - lr v^k`, with
/// `v^{k+1} = g(x^{k+1}; S) + (1 - eta)(v^k - g(x^k; S))` over a shared
/// batch `S` sized at `x^{k+1}`, and `v^0` a batch at `x^0`.
pub fn run_storm_dynamic<R: Rng + ?Sized>(
    oracle: &mut Bg0Oracle,
    lr: f64,
    eta: f64,
    policy: &BatchPolicy,
    horizon: usize,
    x0: &[f64],
    rng: &mut R,
) -> Result<Trace> {
    check_baseline(oracle, lr, policy, horizon, x0)?;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::invalid(format!("eta must lie in (0,1], got {eta}")));
    }
    let base = oracle.base().clone();
    let mut rec = Recorder::new("storm", 0, x0, horizon);
    rec.trace_mut().lr = Some(lr);
    rec.trace_mut().policy = Some(policy.clone());

    let mut x = x0.to_vec();
    let b0 = batch_at(&mut rec, policy, oracle, &x);
    let batch = oracle.draw_batch(b0, rng)?;
    let (loss, mut grad) = base.value_and_grad(&x);
    let mut v = oracle.perturb_batch(&x, &grad, &batch);
    if !(loss.is_finite() && all_finite(&v)) {
        return Ok(rec.abort(0, "non-finite gradient at the starting point"));
    }
    rec.push(StateRecord {
        x: &x,
        loss,
        grad: &grad,
        estimator: &v,
        batch: b0 as u64,
        sfo: oracle.sfo_count(),
    });

    for k in 1..horizon {
        let x_prev = x.clone();
        vecops::axpy(-lr, &v, &mut x);
        if !all_finite(&x) {
            return Ok(rec.abort(k, "non-finite iterate"));
        }
        let b = batch_at(&mut rec, policy, oracle, &x);
        let batch = oracle.draw_batch(b, rng)?;
        let (loss, grad_next) = base.value_and_grad(&x);
        let (g_prev, g_next) = oracle.paired_batch_from_base(&x_prev, &grad, &x, &grad_next, &batch);
        for ((vi, gn), gp) in v.iter_mut().zip(&g_next).zip(&g_prev) {
            *vi = gn + (1.0 - eta) * (*vi - gp);
        }
        grad = grad_next;
        if !(loss.is_finite() && all_finite(&v)) {
            return Ok(rec.abort(k, "non-finite gradient estimate"));
        }
        rec.push(StateRecord {
            x: &x,
            loss,
            grad: &grad,
            estimator: &v,
            batch: b as u64,
            sfo: oracle.sfo_count(),
        });
    }
    Ok(rec.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{make_quadratic, Objective};
    use crate::optimizers::DEFAULT_BATCH_CAP;
    use crate::oracle::wrap;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use std::sync::Arc;

    fn quad(d: usize, c: f64) -> Arc<dyn Objective> {
        Arc::new(make_quadratic(d, c).unwrap())
    }

    #[test]
    fn sgd_noise_free_is_gd() {
        let x0 = [1.0, -1.0];
        let mut o = wrap(quad(2, 2.0), 0.0, 0.0, &x0).unwrap();
        let p = BatchPolicy::fixed(1).unwrap();
        let t = run_sgd(&mut o, 0.1, &p, 4, &x0, &mut ChaCha12Rng::seed_from_u64(0)).unwrap();
        // x^{k+1} = (1 - 0.2) x^k
        for k in 0..4 {
            let f = 0.8f64.powi(k as i32);
            let xk = t.iterates.get(k).unwrap();
            assert!((xk[0] - f).abs() < 1e-15 && (xk[1] + f).abs() < 1e-15);
        }
        assert_eq!(t.total_sfo(), 4);
    }

    #[test]
    fn storm_eta_one_matches_sgd() {
        let x0 = [0.5, 2.0, -1.0];
        let p = BatchPolicy::fixed(1).unwrap();
        let mut o1 = wrap(quad(3, 1.0), 1.0, 1.0, &x0).unwrap();
        let mut o2 = wrap(quad(3, 1.0), 1.0, 1.0, &x0).unwrap();
        let a = run_sgd(&mut o1, 0.05, &p, 40, &x0, &mut ChaCha12Rng::seed_from_u64(9)).unwrap();
        let b = run_storm_dynamic(&mut o2, 0.05, 1.0, &p, 40, &x0, &mut ChaCha12Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.iterates, b.iterates);
        assert_eq!(a.grad_norm, b.grad_norm);
        assert_eq!(b.total_sfo(), 1 + 2 * 39);
    }

    #[test]
    fn dynamic_batch_tracks_drift() {
        let p = BatchPolicy::dynamic(1.0, DEFAULT_BATCH_CAP).unwrap();
        let x0 = [3.0; 4];
        let mut o = wrap(quad(4, 1.0), 1.0, 1.0, &x0).unwrap();
        let t = run_sgd(&mut o, 0.2, &p, 30, &x0, &mut ChaCha12Rng::seed_from_u64(1)).unwrap();
        assert_eq!(t.batch_size[0], 1);
        for k in 0..t.len() {
            let expect = (t.drift_sq[k] + 1.0).ceil() as u64;
            assert_eq!(t.batch_size[k], expect.max(1));
        }
        assert!(t.max_batch() > 1);
    }

    #[test]
    fn batch_cap_hits_counted() {
        let x0 = [0.0];
        let p = BatchPolicy::dynamic(1.0, 3).unwrap();
        let mut o = wrap(quad(1, 1.0), 1.0, 10.0, &x0).unwrap();
        let t = run_sgd(&mut o, 0.01, &p, 5, &x0, &mut ChaCha12Rng::seed_from_u64(1)).unwrap();
        assert_eq!(t.batch_cap_hits, 5);
        assert!(t.batch_size.iter().all(|&b| b == 3));
    }

    #[test]
    fn divergent_sgd_aborts() {
        let x0 = [1.0];
        let mut o = wrap(quad(1, 1.0), 0.0, 0.0, &x0).unwrap();
        let p = BatchPolicy::fixed(1).unwrap();
        // factor (1 - 3) = -2 per step overflows after ~1024 steps
        let t = run_sgd(&mut o, 3.0, &p, 5000, &x0, &mut ChaCha12Rng::seed_from_u64(1)).unwrap();
        assert!(!t.completed());
        assert!(t.len() < 5000);
        assert!(t.grad_norm.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn storm_estimator_error_unrolled() {
        // B = 0, d = 1, fixed b: e^{k+1} = eta G ubar_{k+1} + (1 - eta) e^k
        let (c, g, eta, b) = (1.5, 0.4, 0.25, 3usize);
        let x0 = [2.0];
        let p = BatchPolicy::fixed(b).unwrap();
        let mut o = wrap(quad(1, c), 0.0, g, &x0).unwrap();
        let t = run_storm_dynamic(&mut o, 0.1, eta, &p, 3, &x0, &mut ChaCha12Rng::seed_from_u64(2)).unwrap();
        let replay = wrap(quad(1, c), 0.0, g, &x0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let u: Vec<f64> = (0..3)
            .map(|_| replay.draw_batch(b, &mut rng).unwrap().u_mean[0])
            .collect();
        let e0 = g * u[0];
        let e1 = eta * g * u[1] + (1.0 - eta) * e0;
        let e2 = eta * g * u[2] + (1.0 - eta) * e1;
        for (k, e) in [e0, e1, e2].iter().enumerate() {
            assert!((t.estimator_err[k] - e.abs()).abs() < 1e-12, "k={k}");
        }
        assert_eq!(t.total_sfo(), 3 + 2 * 3 * 2);
    }

    #[test]
    fn storm_dynamic_batches_follow_drift() {
        let x0 = [4.0, -4.0];
        let p = BatchPolicy::dynamic(0.5, DEFAULT_BATCH_CAP).unwrap();
        let mut o = wrap(quad(2, 1.0), 2.0, 1.0, &x0).unwrap();
        let t = run_storm_dynamic(&mut o, 0.05, 0.5, &p, 60, &x0, &mut ChaCha12Rng::seed_from_u64(8)).unwrap();
        for k in 1..t.len() {
            if t.drift_sq[k] >= t.drift_sq[k - 1] {
                assert!(t.batch_size[k] >= t.batch_size[k - 1]);
            }
        }
        let expect: u64 = t.batch_size[0] + 2 * t.batch_size[1..].iter().sum::<u64>();
        assert_eq!(t.total_sfo(), expect);
    }

    #[test]
    fn sgd_seed_determinism() {
        let x0 = [1.0; 5];
        let p = BatchPolicy::dynamic(1.0, 1000).unwrap();
        let run = |seed| {
            let mut o = wrap(quad(5, 1.0), 1.0, 1.0, &x0).unwrap();
            run_sgd(&mut o, 0.1, &p, 50, &x0, &mut ChaCha12Rng::seed_from_u64(seed)).unwrap()
        };
        assert_eq!(run(4), run(4));
        assert_ne!(run(4).grad_norm, run(5).grad_norm);
    }
}
