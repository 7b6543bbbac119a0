use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::objectives::Objective;
use crate::oracle::{BatchSample, Bg0Oracle};
use crate::properties::normalized_direction;
use crate::schedules::{MethodKind, Schedule};
use crate::vecops::{self, all_finite};

use super::trace::{Recorder, StateRecord, Trace};

fn check_run(oracle: &Bg0Oracle, schedule: &Schedule, x0: &[f64], method: MethodKind) -> Result<()> {
    if schedule.method != method {
        return Err(Error::invalid(format!(
            "schedule is for {:?}, not {:?}",
            schedule.method, method
        )));
    }
    check_dim(oracle.dim(), x0.len())?;
    if oracle.x0() != x0 {
        return Err(Error::invalid("oracle reference point must equal the starting point"));
    }
    Ok(())
}

/// Take a normalized step in place. Returns whether the zero-direction
/// convention fired.
fn normalized_step(x: &mut [f64], v: &[f64], gamma: f64) -> bool {
    let (dir, zero) = normalized_direction(v);
    if !zero {
        vecops::axpy(-gamma, &dir, x);
    }
    zero
}

/// Normalized SGD with momentum:
/// `x^{k+1} = x^k - gamma v^k / ||v^k||`,
/// `v^{k+1} = (1 - eta) v^k + eta grad f(x^{k+1}; xi^{k+1})`,
/// with `v^0 = grad f(x^0; xi^0)` and one fresh sample per state.
pub fn run_nsgdm<R: Rng + ?Sized>(
    oracle: &mut Bg0Oracle,
    schedule: &Schedule,
    x0: &[f64],
    rng: &mut R,
) -> Result<Trace> {
    check_run(oracle, schedule, x0, MethodKind::Nsgdm)?;
    let (gamma, eta) = (schedule.gamma, schedule.eta);
    let base = oracle.base().clone();
    let mut rec = Recorder::new("nsgdm", 0, x0, schedule.horizon);
    rec.trace_mut().schedule = Some(schedule.clone());

    let mut x = x0.to_vec();
    let (loss, grad) = base.value_and_grad(&x);
    let sample: BatchSample = oracle.draw_sample(rng).into();
    let mut v = oracle.perturb_batch(&x, &grad, &sample);
    if !(loss.is_finite() && all_finite(&v)) {
        return Ok(rec.abort(0, "non-finite gradient at the starting point"));
    }
    rec.push(StateRecord {
        x: &x,
        loss,
        grad: &grad,
        estimator: &v,
        batch: 1,
        sfo: oracle.sfo_count(),
    });

    for k in 0..schedule.iterations() {
        if normalized_step(&mut x, &v, gamma) {
            rec.trace_mut().zero_direction_events += 1;
        }
        if !all_finite(&x) {
            return Ok(rec.abort(k + 1, "non-finite iterate"));
        }
        let (loss, grad) = base.value_and_grad(&x);
        let sample: BatchSample = oracle.draw_sample(rng).into();
        let g = oracle.perturb_batch(&x, &grad, &sample);
        for (vi, gi) in v.iter_mut().zip(&g) {
            *vi = (1.0 - eta) * *vi + eta * gi;
        }
        if !(loss.is_finite() && all_finite(&v)) {
            return Ok(rec.abort(k + 1, "non-finite gradient estimate"));
        }
        rec.push(StateRecord {
            x: &x,
            loss,
            grad: &grad,
            estimator: &v,
            batch: 1,
            sfo: oracle.sfo_count(),
        });
    }
    Ok(rec.finish())
}

/// Normalized STORM:
/// `x^{k+1} = x^k - gamma v^k / ||v^k||`,
/// `v^{k+1} = grad f(x^{k+1}; xi) + (1 - eta)(v^k - grad f(x^k; xi))`,
/// where one fresh `xi` is evaluated at both points. `v^0` averages
/// `N_init` independent samples at `x^0`.
pub fn run_nstorm<R: Rng + ?Sized>(
    oracle: &mut Bg0Oracle,
    schedule: &Schedule,
    x0: &[f64],
    rng: &mut R,
) -> Result<Trace> {
    check_run(oracle, schedule, x0, MethodKind::Nstorm)?;
    let (gamma, eta) = (schedule.gamma, schedule.eta);
    let n_init = usize::try_from(schedule.n_init).map_err(|_| Error::invalid("n_init too large"))?;
    let base = oracle.base().clone();
    let mut rec = Recorder::new("nstorm", 0, x0, schedule.horizon);
    rec.trace_mut().schedule = Some(schedule.clone());

    let mut x = x0.to_vec();
    let (loss, mut grad) = base.value_and_grad(&x);
    let init = oracle.draw_batch(n_init, rng)?;
    let mut v = oracle.perturb_batch(&x, &grad, &init);
    if !(loss.is_finite() && all_finite(&v)) {
        return Ok(rec.abort(0, "non-finite gradient at the starting point"));
    }
    rec.push(StateRecord {
        x: &x,
        loss,
        grad: &grad,
        estimator: &v,
        batch: schedule.n_init,
        sfo: oracle.sfo_count(),
    });

    for k in 0..schedule.iterations() {
        let x_prev = x.clone();
        if normalized_step(&mut x, &v, gamma) {
            rec.trace_mut().zero_direction_events += 1;
        }
        if !all_finite(&x) {
            return Ok(rec.abort(k + 1, "non-finite iterate"));
        }
        let (loss, grad_next) = base.value_and_grad(&x);
        let sample: BatchSample = oracle.draw_sample(rng).into();
        let (g_prev, g_next) = oracle.paired_batch_from_base(&x_prev, &grad, &x, &grad_next, &sample);
        for ((vi, gn), gp) in v.iter_mut().zip(&g_next).zip(&g_prev) {
            *vi = gn + (1.0 - eta) * (*vi - gp);
        }
        grad = grad_next;
        if !(loss.is_finite() && all_finite(&v)) {
            return Ok(rec.abort(k + 1, "non-finite gradient estimate"));
        }
        rec.push(StateRecord {
            x: &x,
            loss,
            grad: &grad,
            estimator: &v,
            batch: 1,
            sfo: oracle.sfo_count(),
        });
    }
    Ok(rec.finish())
}

/// Deterministic normalized gradient descent. One exact gradient per state,
/// counted in `sfo_cum`.
pub fn run_normalized_gd(objective: &dyn Objective, gamma: f64, horizon: usize, x0: &[f64]) -> Result<Trace> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    if horizon < 1 {
        return Err(Error::invalid("horizon T must be >= 1"));
    }
    check_dim(objective.dim(), x0.len())?;
    let mut rec = Recorder::new("normalized_gd", 0, x0, horizon);
    let mut x = x0.to_vec();
    let mut evals = 0u64;
    for k in 0..horizon {
        if k > 0 {
            let grad = objective.grad(&x);
            if normalized_step(&mut x, &grad, gamma) {
                rec.trace_mut().zero_direction_events += 1;
            }
            if !all_finite(&x) {
                return Ok(rec.abort(k, "non-finite iterate"));
            }
        }
        let (loss, grad) = objective.value_and_grad(&x);
        evals += 1;
        if !(loss.is_finite() && all_finite(&grad)) {
            return Ok(rec.abort(k, "non-finite gradient"));
        }
        rec.push(StateRecord {
            x: &x,
            loss,
            grad: &grad,
            estimator: &grad,
            batch: 1,
            sfo: evals,
        });
    }
    let mut trace = rec.finish();
    trace.lr = Some(gamma);
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{make_power_poly, make_quadratic};
    use crate::oracle::wrap;
    use crate::schedules::{nsgdm_schedule, NoiseRegime, Smoothness};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use std::sync::Arc;

    fn quad(d: usize, c: f64) -> Arc<dyn Objective> {
        Arc::new(make_quadratic(d, c).unwrap())
    }

    #[test]
    fn ngd_quadratic_first_step() {
        let q = make_quadratic(2, 1.0).unwrap();
        let t = run_normalized_gd(&q, 0.25, 2, &[1.0, 0.0]).unwrap();
        assert_eq!(t.iterates.get(1).unwrap(), &[0.75, 0.0]);
        assert_eq!(t.sfo_cum, vec![1, 2]);
    }

    #[test]
    fn ngd_stationary_start() {
        let q = make_quadratic(3, 1.0).unwrap();
        let t = run_normalized_gd(&q, 0.5, 5, &[0.0; 3]).unwrap();
        assert!(t.iterates.points.iter().all(|(_, x)| x == &vec![0.0; 3]));
        assert_eq!(t.zero_direction_events, 4);
    }

    #[test]
    fn ngd_cubic_hand_iteration() {
        let p = make_power_poly(0.5).unwrap();
        let t = run_normalized_gd(&p, 0.1, 3, &[1.0]).unwrap();
        assert!((t.iterates.get(1).unwrap()[0] - 0.9).abs() < 1e-15);
        assert!((t.iterates.get(2).unwrap()[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn nsgdm_first_step_unit_direction() {
        // quadratic c=1 at x0=(3,4) with B=G=0 gives v^0 = (3,4)
        let x0 = [3.0, 4.0];
        let mut o = wrap(quad(2, 1.0), 0.0, 0.0, &x0).unwrap();
        let s = Schedule::fixed(MethodKind::Nsgdm, 2, 0.5, 0.5, 1).unwrap();
        let t = run_nsgdm(&mut o, &s, &x0, &mut ChaCha12Rng::seed_from_u64(0)).unwrap();
        let x1 = t.iterates.get(1).unwrap();
        assert!((x1[0] - 2.7).abs() < 1e-15 && (x1[1] - 3.6).abs() < 1e-15);
    }

    #[test]
    fn nsgdm_zero_estimator_does_not_move() {
        let x0 = [0.0, 0.0];
        let mut o = wrap(quad(2, 1.0), 0.0, 0.0, &x0).unwrap();
        let s = Schedule::fixed(MethodKind::Nsgdm, 3, 0.5, 0.5, 1).unwrap();
        let t = run_nsgdm(&mut o, &s, &x0, &mut ChaCha12Rng::seed_from_u64(0)).unwrap();
        assert_eq!(t.iterates.get(1).unwrap(), &[0.0, 0.0]);
        assert_eq!(t.zero_direction_events, 2);
    }

    #[test]
    fn nsgdm_noise_free_matches_ngd() {
        let x0 = [2.0, -1.0, 0.5];
        let q = quad(3, 1.3);
        let mut o = wrap(q.clone(), 0.0, 0.0, &x0).unwrap();
        let s = Schedule::fixed(MethodKind::Nsgdm, 50, 0.07, 1.0, 1).unwrap();
        let a = run_nsgdm(&mut o, &s, &x0, &mut ChaCha12Rng::seed_from_u64(3)).unwrap();
        let b = run_normalized_gd(q.as_ref(), 0.07, 50, &x0).unwrap();
        assert_eq!(a.iterates, b.iterates);
        assert_eq!(a.grad_norm, b.grad_norm);
    }

    #[test]
    fn nsgdm_sfo_and_bounds() {
        let x0 = [5.0];
        let base: Arc<dyn Objective> = Arc::new(make_power_poly(0.5).unwrap());
        let mut o = wrap(base, 1.0, 0.5, &x0).unwrap();
        let s = nsgdm_schedule(NoiseRegime::Bg0, Smoothness::SymAlpha, 500, 1.0).unwrap();
        let t = run_nsgdm(&mut o, &s, &x0, &mut ChaCha12Rng::seed_from_u64(4)).unwrap();
        assert!(t.completed());
        assert_eq!(t.len(), 500);
        assert_eq!(t.total_sfo(), 500);
        assert_eq!(o.sfo_count(), 500);
        for (k, d) in t.drift_sq.iter().enumerate() {
            assert!(d.sqrt() <= k as f64 * s.gamma + 1e-9);
        }
        assert!(t.step_norm.iter().all(|&n| n <= s.gamma + 1e-12));
    }

    #[test]
    fn nstorm_sfo_cutoff() {
        let x0 = [1.0, 1.0];
        let mut o = wrap(quad(2, 1.0), 1.0, 1.0, &x0).unwrap();
        let s = Schedule::fixed(MethodKind::Nstorm, 10, 0.1, 0.5, 4).unwrap();
        let t = run_nstorm(&mut o, &s, &x0, &mut ChaCha12Rng::seed_from_u64(5)).unwrap();
        assert_eq!(t.total_sfo(), 4 + 2 * 9);
        assert_eq!(t.batch_size[0], 4);
        assert!(t.batch_size[1..].iter().all(|&b| b == 1));
        assert!(t.sfo_cum.windows(2).all(|w| w[1] == w[0] + 2));
    }

    #[test]
    fn nstorm_eta_one_is_fresh_sample_estimator() {
        let x0 = [1.0, -2.0];
        let q = quad(2, 0.8);
        let mut o = wrap(q.clone(), 0.5, 0.3, &x0).unwrap();
        let s = Schedule::fixed(MethodKind::Nstorm, 6, 0.2, 1.0, 1).unwrap();
        let t = run_nstorm(&mut o, &s, &x0, &mut ChaCha12Rng::seed_from_u64(6)).unwrap();
        // rebuild v^k = grad f(x^k; xi^k) from the same stream
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let replay = wrap(q, 0.5, 0.3, &x0).unwrap();
        for k in 0..t.len() {
            let xk = t.iterates.get(k).unwrap();
            let sample = replay.draw_sample(&mut rng);
            let br = 0.5 * sample.rho;
            let v: Vec<f64> = (0..2)
                .map(|j| 0.8 * xk[j] + br * (xk[j] - x0[j]) + 0.3 * sample.u[j])
                .collect();
            let err = (0..2).map(|j| (v[j] - 0.8 * xk[j]).powi(2)).sum::<f64>().sqrt();
            assert!((t.estimator_err[k] - err).abs() < 1e-12);
        }
    }

    #[test]
    fn nstorm_estimator_error_unrolled() {
        // B = 0, d = 1 quadratic c: e^{k+1} = G u_{k+1} + (1-eta)(e^k - G u_{k+1})
        //                                   = eta G u_{k+1} + (1-eta) e^k
        let (c, g, eta) = (2.0, 0.7, 0.3);
        let x0 = [1.5];
        let mut o = wrap(quad(1, c), 0.0, g, &x0).unwrap();
        let s = Schedule::fixed(MethodKind::Nstorm, 4, 0.1, eta, 1).unwrap();
        let t = run_nstorm(&mut o, &s, &x0, &mut ChaCha12Rng::seed_from_u64(7)).unwrap();

        let replay = wrap(quad(1, c), 0.0, g, &x0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let u: Vec<f64> = (0..4).map(|_| replay.draw_sample(&mut rng).u[0]).collect();
        let e0 = g * u[0];
        let e1 = eta * g * u[1] + (1.0 - eta) * e0;
        let e2 = eta * g * u[2] + (1.0 - eta) * e1;
        let e3 = eta * g * u[3] + (1.0 - eta) * e2;
        for (k, e) in [e0, e1, e2, e3].iter().enumerate() {
            assert!((t.estimator_err[k] - e.abs()).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn seed_determinism() {
        let x0 = [1.0, 2.0, 3.0];
        let run = || {
            let mut o = wrap(quad(3, 1.0), 1.0, 1.0, &x0).unwrap();
            let s = Schedule::fixed(MethodKind::Nstorm, 100, 0.05, 0.2, 3).unwrap();
            run_nstorm(&mut o, &s, &x0, &mut ChaCha12Rng::seed_from_u64(11)).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn rejects_mismatched_schedule_or_reference() {
        let x0 = [1.0];
        let mut o = wrap(quad(1, 1.0), 1.0, 1.0, &x0).unwrap();
        let s = Schedule::fixed(MethodKind::Nstorm, 3, 0.1, 0.5, 1).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        assert!(run_nsgdm(&mut o, &s, &x0, &mut rng).is_err());
        assert!(run_nstorm(&mut o, &s, &[2.0], &mut rng).is_err());
        assert!(run_normalized_gd(&make_quadratic(1, 1.0).unwrap(), 0.0, 3, &x0).is_err());
    }
}
