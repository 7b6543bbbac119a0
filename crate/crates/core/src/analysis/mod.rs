//! Rate-slope fits, theorem bounds, seed aggregation on a shared SFO grid,
//! and curve comparisons.

mod bounds;

pub use bounds::{
    theorem_bound_nsgdm, theorem_bound_nstorm, BoundEvaluation, BoundParams, BoundTerm, NsgdmRegime, NstormRegime,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizers::Trace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub points: Vec<(u64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(ln T, ln value)`.
pub fn fit_rate_slope(points: &[(u64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::Degenerate(format!(
            "rate fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut ts: Vec<u64> = points.iter().map(|p| p.0).collect();
    ts.sort_unstable();
    if ts.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Degenerate("rate fit needs distinct horizons".into()));
    }
    if let Some(&(t, v)) = points.iter().find(|(t, v)| *t == 0 || !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Degenerate(format!(
            "rate fit needs T > 0 and finite positive values, got ({t}, {v})"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RateFit {
        points: points.to_vec(),
        slope,
        intercept,
        r_squared,
    })
}

/// Which per-state series of a trace to aggregate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Series {
    GradNorm,
    DriftSq,
    BatchSize,
}

impl Series {
    pub fn name(self) -> &'static str {
        match self {
            Series::GradNorm => "grad_norm",
            Series::DriftSq => "drift_sq",
            Series::BatchSize => "batch_size",
        }
    }

    fn at(self, trace: &Trace, k: usize) -> f64 {
        match self {
            Series::GradNorm => trace.grad_norm[k],
            Series::DriftSq => trace.drift_sq[k],
            Series::BatchSize => trace.batch_size[k] as f64,
        }
    }
}

/// Seed-aggregated curve of one method. `x` is cumulative SFO for grid
/// curves and the state index for iteration curves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateCurve {
    pub method: String,
    pub series: Series,
    pub x: Vec<u64>,
    pub mean: Vec<f64>,
    /// Unbiased sample standard deviation across seeds, 0 for one seed.
    pub std: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl AggregateCurve {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn last_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(f64::NAN)
    }
}

/// `points` evenly spaced SFO budgets from 0 to `max_sfo`, deduplicated.
pub fn sfo_grid(max_sfo: u64, points: usize) -> Vec<u64> {
    let points = points.max(2);
    let mut grid: Vec<u64> = (0..points)
        .map(|i| ((i as u128 * max_sfo as u128) / (points as u128 - 1)) as u64)
        .collect();
    grid.dedup();
    grid
}

/// `0` followed by `points - 1` log-spaced budgets up to `max_sfo`, merged
/// with `extra` budgets (e.g. each method's final count), deduplicated.
pub fn log_sfo_grid(max_sfo: u64, points: usize, extra: &[u64]) -> Vec<u64> {
    let mut grid = vec![0];
    if max_sfo >= 1 {
        let n = points.max(2) - 1;
        let top = (max_sfo as f64).ln();
        for i in 0..n {
            let v = if n == 1 { top } else { top * i as f64 / (n - 1) as f64 };
            grid.push((v.exp().round() as u64).clamp(1, max_sfo));
        }
        grid.push(max_sfo);
    }
    grid.extend(extra.iter().copied().filter(|&e| e <= max_sfo));
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// Value of `series` at each budget with last-value-carried-forward on
/// `sfo_cum`. Budgets before the first recorded state take the state-0
/// value; budgets past the end keep the final value.
pub fn carried_forward(trace: &Trace, series: Series, grid: &[u64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut k = 0usize;
    for &s in grid {
        while k + 1 < trace.len() && trace.sfo_cum[k + 1] <= s {
            k += 1;
        }
        out.push(series.at(trace, k));
    }
    out
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn aggregate(method: &str, series: Series, x: Vec<u64>, rows: Vec<Vec<f64>>, seeds: Vec<u64>) -> AggregateCurve {
    let n = x.len();
    let mut c = AggregateCurve {
        method: method.to_string(),
        series,
        x,
        mean: Vec::with_capacity(n),
        std: Vec::with_capacity(n),
        min: Vec::with_capacity(n),
        max: Vec::with_capacity(n),
        seeds,
    };
    let mut col = vec![0.0; rows.len()];
    for i in 0..n {
        for (c, r) in col.iter_mut().zip(&rows) {
            *c = r[i];
        }
        let (m, s) = mean_std(&col);
        c.mean.push(m);
        c.std.push(s);
        c.min.push(col.iter().copied().fold(f64::INFINITY, f64::min));
        c.max.push(col.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    c
}

fn check_traces(traces: &[&Trace]) -> Result<()> {
    if traces.is_empty() {
        return Err(Error::EmptyResult("no traces to aggregate".into()));
    }
    if traces.iter().any(|t| t.is_empty()) {
        return Err(Error::EmptyResult("cannot aggregate an empty trace".into()));
    }
    Ok(())
}

/// Mean and spread across seeds on a shared SFO grid.
pub fn aggregate_on_grid(method: &str, traces: &[&Trace], series: Series, grid: &[u64]) -> Result<AggregateCurve> {
    check_traces(traces)?;
    let rows = traces.iter().map(|t| carried_forward(t, series, grid)).collect();
    let seeds = traces.iter().map(|t| t.seed).collect();
    Ok(aggregate(method, series, grid.to_vec(), rows, seeds))
}

/// Mean and spread across seeds by state index, over the states every
/// trace reached.
pub fn aggregate_by_iteration(method: &str, traces: &[&Trace], series: Series) -> Result<AggregateCurve> {
    check_traces(traces)?;
    let n = traces.iter().map(|t| t.len()).min().unwrap_or(0);
    let rows = traces
        .iter()
        .map(|t| (0..n).map(|k| series.at(t, k)).collect())
        .collect();
    let seeds = traces.iter().map(|t| t.seed).collect();
    Ok(aggregate(method, series, (0..n as u64).collect(), rows, seeds))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ALowerSeparated,
    BLowerSeparated,
    NoSeparation,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::ALowerSeparated => "a lower, separated",
            Verdict::BLowerSeparated => "b lower, separated",
            Verdict::NoSeparation => "no separation",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub at_sfo: u64,
    /// Grid budget actually compared: the largest recorded one `<= at_sfo`.
    pub grid_sfo: u64,
    pub a_mean: f64,
    pub a_std: f64,
    pub b_mean: f64,
    pub b_std: f64,
    /// `sqrt((std_a^2 + std_b^2) / 2)`.
    pub pooled_std: f64,
    pub verdict: Verdict,
}

impl Comparison {
    pub fn a_lower_separated(&self) -> bool {
        self.verdict == Verdict::ALowerSeparated
    }
}

fn index_at(c: &AggregateCurve, at_sfo: u64) -> Result<usize> {
    let budget = || Error::BudgetNotCovered {
        label: c.method.clone(),
        budget: at_sfo,
    };
    if c.x.last().is_none_or(|&last| at_sfo > last) {
        return Err(budget());
    }
    c.x.iter().rposition(|&s| s <= at_sfo).ok_or_else(budget)
}

pub fn compare_runs(a: &AggregateCurve, b: &AggregateCurve, at_sfo: u64) -> Result<Comparison> {
    let ia = index_at(a, at_sfo)?;
    let ib = index_at(b, at_sfo)?;
    let (am, asd, bm, bsd) = (a.mean[ia], a.std[ia], b.mean[ib], b.std[ib]);
    let pooled = ((asd * asd + bsd * bsd) / 2.0).sqrt();
    let verdict = if bm - am > pooled {
        Verdict::ALowerSeparated
    } else if am - bm > pooled {
        Verdict::BLowerSeparated
    } else {
        Verdict::NoSeparation
    };
    Ok(Comparison {
        a: a.method.clone(),
        b: b.method.clone(),
        at_sfo,
        grid_sfo: a.x[ia].min(b.x[ib]),
        a_mean: am,
        a_std: asd,
        b_mean: bm,
        b_std: bsd,
        pooled_std: pooled,
        verdict,
    })
}

/// Seed-averaged trace means checked against a bound with a
/// three-standard-error allowance for seed noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub mean: f64,
    pub std_err: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn check_against_bound(trace_means: &[f64], bound: &BoundEvaluation) -> Result<BoundCheck> {
    if trace_means.is_empty() {
        return Err(Error::EmptyResult("no runs to check against the bound".into()));
    }
    let (mean, std) = mean_std(trace_means);
    let std_err = std / (trace_means.len() as f64).sqrt();
    Ok(BoundCheck {
        mean,
        std_err,
        bound: bound.value,
        holds: mean <= bound.value + 3.0 * std_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::make_quadratic;
    use crate::optimizers::run_normalized_gd;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::{Distribution, Uniform};

    #[test]
    fn exact_power_law() {
        let c = 3.7;
        let pts: Vec<(u64, f64)> = [10u64, 100, 1000]
            .iter()
            .map(|&t| (t, c * (t as f64).powf(-0.25)))
            .collect();
        let f = fit_rate_slope(&pts).unwrap();
        assert!((f.slope + 0.25).abs() < 1e-10);
        assert!((f.intercept - c.ln()).abs() < 1e-10);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_values() {
        let f = fit_rate_slope(&[(1, 2.0), (5, 2.0), (9, 2.0)]).unwrap();
        assert!(f.slope.abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_rate_slope(&[(1, 1.0), (2, 1.0)]).is_err());
        assert!(fit_rate_slope(&[(1, 1.0), (1, 2.0), (3, 1.0)]).is_err());
        assert!(fit_rate_slope(&[(1, 1.0), (2, 0.0), (3, 1.0)]).is_err());
        assert!(fit_rate_slope(&[(1, 1.0), (2, -1.0), (3, 1.0)]).is_err());
    }

    #[test]
    fn noisy_sixth_root_band() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let noise = Uniform::new_inclusive(-1.0, 1.0).unwrap();
        let ts = [1000u64, 3162, 10_000, 31_623, 100_000];
        for _ in 0..100 {
            let pts: Vec<(u64, f64)> = ts
                .iter()
                .map(|&t| {
                    (
                        t,
                        3.0 * (t as f64).powf(-1.0 / 6.0) * (1.0 + 0.05 * noise.sample(&mut rng)),
                    )
                })
                .collect();
            let s = fit_rate_slope(&pts).unwrap().slope;
            assert!((-0.22..=-0.11).contains(&s), "{s}");
        }
    }

    fn curve(method: &str, mean: f64, std: f64) -> AggregateCurve {
        AggregateCurve {
            method: method.into(),
            series: Series::GradNorm,
            x: vec![0, 10, 20],
            mean: vec![mean; 3],
            std: vec![std; 3],
            min: vec![mean; 3],
            max: vec![mean; 3],
            seeds: vec![0],
        }
    }

    #[test]
    fn comparisons() {
        let a = curve("a", 0.1, 0.01);
        let b = curve("b", 0.5, 0.01);
        assert_eq!(compare_runs(&a, &b, 20).unwrap().verdict, Verdict::ALowerSeparated);
        assert_eq!(compare_runs(&b, &a, 20).unwrap().verdict, Verdict::BLowerSeparated);
        assert_eq!(compare_runs(&a, &a, 15).unwrap().verdict, Verdict::NoSeparation);
        assert_eq!(compare_runs(&a, &b, 15).unwrap().grid_sfo, 10);
        assert!(compare_runs(&a, &b, 21).is_err());
        assert_eq!(Verdict::ALowerSeparated.to_string(), "a lower, separated");
    }

    fn ngd_trace(seed: u64, x0: f64, horizon: usize) -> Trace {
        let q = make_quadratic(1, 1.0).unwrap();
        let mut t = run_normalized_gd(&q, 0.1, horizon, &[x0]).unwrap();
        t.seed = seed;
        t
    }

    #[test]
    fn carried_forward_alignment() {
        let mut t = ngd_trace(0, 1.0, 4);
        t.sfo_cum = vec![2, 4, 6, 8];
        let v = carried_forward(&t, Series::GradNorm, &[0, 1, 2, 5, 8, 100]);
        let g = &t.grad_norm;
        assert_eq!(v, vec![g[0], g[0], g[0], g[1], g[3], g[3]]);
    }

    #[test]
    fn three_seed_std_and_envelope() {
        let ts = [ngd_trace(0, 1.0, 20), ngd_trace(1, 2.0, 20), ngd_trace(2, 4.0, 20)];
        let refs: Vec<&Trace> = ts.iter().collect();
        let grid = sfo_grid(20, 7);
        let c = aggregate_on_grid("ngd", &refs, Series::GradNorm, &grid).unwrap();
        let col0 = [ts[0].grad_norm[0], ts[1].grad_norm[0], ts[2].grad_norm[0]];
        let m = col0.iter().sum::<f64>() / 3.0;
        let s = (col0.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 2.0).sqrt();
        assert!((c.mean[0] - m).abs() < 1e-15 && (c.std[0] - s).abs() < 1e-15);
        for i in 0..c.len() {
            assert!(c.min[i] <= c.mean[i] && c.mean[i] <= c.max[i]);
        }
        let it = aggregate_by_iteration("ngd", &refs, Series::DriftSq).unwrap();
        assert_eq!(it.len(), 20);
        let single = aggregate_on_grid("ngd", &refs[..1], Series::GradNorm, &grid).unwrap();
        assert!(single.std.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn empty_inputs() {
        assert!(aggregate_on_grid("x", &[], Series::GradNorm, &[0]).is_err());
        let e = theorem_bound_nsgdm(
            NsgdmRegime::Smooth,
            &BoundParams {
                delta: 1.0,
                gamma0: 1.0,
                l0: Some(1.0),
                t: 10,
                ..BoundParams::default()
            },
        )
        .unwrap();
        assert!(check_against_bound(&[], &e).is_err());
        let ok = check_against_bound(&[0.1, 0.2, 0.3], &e).unwrap();
        assert!(ok.holds && (ok.mean - 0.2).abs() < 1e-15);
    }

    #[test]
    fn grid_shape() {
        assert_eq!(sfo_grid(10, 3), vec![0, 5, 10]);
        assert_eq!(sfo_grid(2, 10), vec![0, 1, 2]);
        assert_eq!(*sfo_grid(20_004, 501).last().unwrap(), 20_004);
        let g = log_sfo_grid(10_000, 6, &[77, 20_000]);
        assert_eq!(g, vec![0, 1, 10, 77, 100, 1000, 10_000]);
        assert_eq!(log_sfo_grid(0, 10, &[]), vec![0]);
    }
}
