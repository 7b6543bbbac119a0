use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedules::Schedule;
use crate::vecops;

use super::BatchPolicy;

/// Above this dimension only every `THIN_STRIDE`-th iterate is kept
/// (plus the first and the last).
pub const FULL_ITERATE_MAX_DIM: usize = 16;
pub const THIN_STRIDE: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// A non-finite iterate or estimator appeared while producing state
    /// `iteration`; the trace holds the states before it.
    Aborted {
        iteration: usize,
        reason: String,
    },
}

/// Iterates retained by a run, as `(state index, point)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterateStore {
    pub stride: usize,
    pub points: Vec<(usize, Vec<f64>)>,
}

impl IterateStore {
    fn for_dim(dim: usize) -> Self {
        IterateStore {
            stride: if dim <= FULL_ITERATE_MAX_DIM { 1 } else { THIN_STRIDE },
            points: Vec::new(),
        }
    }

    fn offer(&mut self, k: usize, x: &[f64]) {
        if k % self.stride == 0 {
            self.points.push((k, x.to_vec()));
        }
    }

    fn finish(&mut self, last: usize, x: &[f64]) {
        if self.points.last().map(|(k, _)| *k) != Some(last) {
            self.points.push((last, x.to_vec()));
        }
    }

    pub fn get(&self, k: usize) -> Option<&[f64]> {
        self.points
            .binary_search_by_key(&k, |(i, _)| *i)
            .ok()
            .map(|i| self.points[i].1.as_slice())
    }
}

/// Per-state record of one run. Index `k` of every series refers to state
/// `x^k`, `k = 0..=K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub method: String,
    pub seed: u64,
    pub schedule: Option<Schedule>,
    pub lr: Option<f64>,
    pub policy: Option<BatchPolicy>,
    pub x0: Vec<f64>,
    /// `||grad f(x^k)||` of the deterministic base objective.
    pub grad_norm: Vec<f64>,
    /// `||x^k - x^0||^2`.
    pub drift_sq: Vec<f64>,
    /// Samples consumed at state `k` to form the estimator `v^k`.
    pub batch_size: Vec<u64>,
    /// Oracle calls up to and including state `k`.
    pub sfo_cum: Vec<u64>,
    /// `f(x^k)`.
    pub loss: Vec<f64>,
    /// `||v^k - grad f(x^k)||`.
    pub estimator_err: Vec<f64>,
    /// `||x^{k+1} - x^k||`, one entry per transition.
    pub step_norm: Vec<f64>,
    pub iterates: IterateStore,
    pub status: RunStatus,
    /// Times the zero-direction convention fired.
    pub zero_direction_events: u64,
    /// Times a dynamic batch was clipped at the policy cap.
    pub batch_cap_hits: u64,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.grad_norm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grad_norm.is_empty()
    }

    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    pub fn total_sfo(&self) -> u64 {
        self.sfo_cum.last().copied().unwrap_or(0)
    }

    /// Trajectory average of the true gradient norm, which equals
    /// `E ||grad f(x_hat)||` for the uniformly drawn output given the run.
    pub fn mean_grad_norm(&self) -> f64 {
        self.grad_norm.iter().sum::<f64>() / self.grad_norm.len() as f64
    }

    pub fn final_grad_norm(&self) -> f64 {
        self.grad_norm.last().copied().unwrap_or(f64::NAN)
    }

    pub fn max_batch(&self) -> u64 {
        self.batch_size.iter().copied().max().unwrap_or(0)
    }

    pub fn final_iterate(&self) -> Option<&[f64]> {
        self.iterates.points.last().map(|(_, x)| x.as_slice())
    }

    pub fn min_loss(&self) -> f64 {
        self.loss.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// An output index drawn uniformly from the recorded states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformOutput {
    pub index: usize,
    pub grad_norm: f64,
    /// Conditional expectation of the output gradient norm given the run.
    pub trace_mean: f64,
}

pub fn uniform_output<R: Rng + ?Sized>(trace: &Trace, rng: &mut R) -> Result<UniformOutput> {
    if trace.is_empty() {
        return Err(Error::invalid("uniform output needs a nonempty trace"));
    }
    let index = rng.random_range(0..trace.len());
    Ok(UniformOutput {
        index,
        grad_norm: trace.grad_norm[index],
        trace_mean: trace.mean_grad_norm(),
    })
}

/// Incremental builder shared by all run loops.
pub(crate) struct Recorder {
    trace: Trace,
    last_x: Vec<f64>,
}

pub(crate) struct StateRecord<'a> {
    pub x: &'a [f64],
    pub loss: f64,
    pub grad: &'a [f64],
    pub estimator: &'a [f64],
    pub batch: u64,
    pub sfo: u64,
}

impl Recorder {
    pub(crate) fn new(method: &str, seed: u64, x0: &[f64], expected_len: usize) -> Self {
        let cap = expected_len;
        Recorder {
            trace: Trace {
                method: method.to_string(),
                seed,
                schedule: None,
                lr: None,
                policy: None,
                x0: x0.to_vec(),
                grad_norm: Vec::with_capacity(cap),
                drift_sq: Vec::with_capacity(cap),
                batch_size: Vec::with_capacity(cap),
                sfo_cum: Vec::with_capacity(cap),
                loss: Vec::with_capacity(cap),
                estimator_err: Vec::with_capacity(cap),
                step_norm: Vec::with_capacity(cap.saturating_sub(1)),
                iterates: IterateStore::for_dim(x0.len()),
                status: RunStatus::Completed,
                zero_direction_events: 0,
                batch_cap_hits: 0,
            },
            last_x: x0.to_vec(),
        }
    }

    pub(crate) fn trace_mut(&mut self) -> &mut Trace {
        &mut self.trace
    }

    pub(crate) fn push(&mut self, rec: StateRecord<'_>) {
        let t = &mut self.trace;
        let k = t.grad_norm.len();
        if k > 0 {
            t.step_norm.push(vecops::dist_sq(rec.x, &self.last_x).sqrt());
        }
        t.grad_norm.push(vecops::norm(rec.grad));
        t.drift_sq.push(vecops::dist_sq(rec.x, &t.x0));
        t.batch_size.push(rec.batch);
        t.sfo_cum.push(rec.sfo);
        t.loss.push(rec.loss);
        t.estimator_err.push(vecops::dist_sq(rec.estimator, rec.grad).sqrt());
        t.iterates.offer(k, rec.x);
        self.last_x.clear();
        self.last_x.extend_from_slice(rec.x);
    }

    pub(crate) fn abort(mut self, iteration: usize, reason: impl Into<String>) -> Trace {
        self.trace.status = RunStatus::Aborted {
            iteration,
            reason: reason.into(),
        };
        self.finish()
    }

    pub(crate) fn finish(mut self) -> Trace {
        let last = self.trace.grad_norm.len().saturating_sub(1);
        if !self.trace.grad_norm.is_empty() {
            self.trace.iterates.finish(last, &self.last_x);
        }
        self.trace
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::properties::chi_square_uniform;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn trace_with(grad_norm: Vec<f64>) -> Trace {
        let mut rec = Recorder::new("t", 0, &[0.0], grad_norm.len());
        for g in &grad_norm {
            rec.push(StateRecord {
                x: &[0.0],
                loss: 0.0,
                grad: &[*g],
                estimator: &[*g],
                batch: 1,
                sfo: 1,
            });
        }
        rec.finish()
    }

    #[test]
    fn single_state_output() {
        let t = trace_with(vec![2.5]);
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        for _ in 0..20 {
            assert_eq!(uniform_output(&t, &mut rng).unwrap().index, 0);
        }
    }

    #[test]
    fn trace_mean() {
        let t = trace_with(vec![1.0, 2.0, 3.0]);
        assert_eq!(t.mean_grad_norm(), 2.0);
        let o = uniform_output(&t, &mut ChaCha12Rng::seed_from_u64(1)).unwrap();
        assert_eq!(o.trace_mean, 2.0);
        assert_eq!(o.grad_norm, t.grad_norm[o.index]);
    }

    #[test]
    fn empty_trace_rejected() {
        let t = trace_with(vec![]);
        assert!(uniform_output(&t, &mut ChaCha12Rng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn output_index_uniform() {
        let t = trace_with(vec![1.0; 10]);
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let mut counts = vec![0u64; 10];
        for _ in 0..100_000 {
            counts[uniform_output(&t, &mut rng).unwrap().index] += 1;
        }
        assert!(chi_square_uniform(&counts, 0.01).passes());
    }

    #[test]
    fn thinned_store_keeps_ends() {
        let mut rec = Recorder::new("t", 0, &[0.0; 20], 250);
        for k in 0..250 {
            let x = vec![k as f64; 20];
            rec.push(StateRecord {
                x: &x,
                loss: 0.0,
                grad: &x,
                estimator: &x,
                batch: 1,
                sfo: k as u64 + 1,
            });
        }
        let t = rec.finish();
        let idx: Vec<usize> = t.iterates.points.iter().map(|(k, _)| *k).collect();
        assert_eq!(idx, vec![0, 100, 200, 249]);
        assert_eq!(t.final_iterate().unwrap()[0], 249.0);
    }
}
