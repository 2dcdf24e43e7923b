//! Sample paths of the counting process, by exact inversion and by
//! thinning, plus seeded Monte Carlo ensembles.
//!
//! Inversion is the reference method: unit-rate exponential partial sums
//! are mapped through the closed-form inverse of the cumulative rate,
//! which samples the process exactly. Thinning (accept candidate events
//! from a homogeneous rate-`b` process with probability `lambda(t)/b`,
//! valid because the rate never exceeds `b`) exists to cross-validate it.
//!
//! Replicas of an ensemble draw their generators from per-replica child
//! seeds, never from shared state, so results are independent of
//! execution order and parallelism.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intensity::IntensityParams;

/// Sorted event timestamps within an observation window.
///
/// The process origin `S_0 = 0` is implicit and never stored; `times[0]`
/// is the first event `S_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSeries {
    times: Vec<f64>,
    window_end: f64,
}

impl EventSeries {
    /// Validates ordering and containment in `[0, window_end]`.
    pub fn new(times: Vec<f64>, window_end: f64) -> Result<Self> {
        if !window_end.is_finite() || window_end < 0.0 {
            return Err(Error::Domain(format!(
                "window_end must be finite and >= 0, got {window_end}"
            )));
        }
        for (i, &t) in times.iter().enumerate() {
            if !t.is_finite() || t < 0.0 || t > window_end {
                return Err(Error::Domain(format!(
                    "event {i} at t={t} outside [0, {window_end}]"
                )));
            }
            if i > 0 && t < times[i - 1] {
                return Err(Error::Domain(format!("events not sorted at index {i}")));
            }
        }
        Ok(Self { times, window_end })
    }

    /// Sorts the input and uses the last event as the window end.
    pub fn from_unsorted(mut times: Vec<f64>, window_end: Option<f64>) -> Result<Self> {
        times.sort_by(|a, b| a.partial_cmp(b).expect("non-finite timestamp"));
        let end = window_end.unwrap_or_else(|| times.last().copied().unwrap_or(0.0));
        Self::new(times, end)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn window_end(&self) -> f64 {
        self.window_end
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `N(t)`: number of events at or before `t`.
    pub fn count_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t)
    }

    /// Successive differences `S_{i+1} - S_i` (the first event's gap from
    /// the origin is not included).
    pub fn consecutive_intervals(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// How a multiset of inter-event durations was collected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleMode {
    /// Successive differences of one or more event series.
    #[serde(rename = "pooled-consecutive")]
    PooledConsecutive,
    /// One gap `T_{n+1}` (between event `n` and event `n+1`) per
    /// independent realization; `n = 0` means the gap between the origin
    /// and the first event.
    #[serde(rename = "fixed-index")]
    FixedIndex(u32),
}

/// Multiset of inter-event durations with collection metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalSample {
    pub intervals: Vec<f64>,
    pub mode: SampleMode,
    /// Human-readable origin: parameters or input file.
    pub source: String,
}

impl IntervalSample {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Median by sorting a copy; `None` on an empty sample.
    pub fn median(&self) -> Option<f64> {
        quantile(&self.intervals, 0.5)
    }

    pub fn quantile(&self, q: f64) -> Option<f64> {
        quantile(&self.intervals, q)
    }
}

fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    Some(sorted[idx])
}

/// Stop rule for a sample path: observe up to a time horizon, or stop
/// after the k-th event regardless of time (fixed-index studies condition
/// on the event index, not on a window).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Horizon {
    #[serde(rename = "time")]
    Time(f64),
    #[serde(rename = "count")]
    Count(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "inversion")]
    Inversion,
    #[serde(rename = "thinning")]
    Thinning,
}

/// A seeded ensemble request.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub params: IntensityParams,
    pub horizon: Horizon,
    pub replicas: u64,
    pub master_seed: u64,
    pub method: Method,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        match self.horizon {
            Horizon::Time(t) if !(t.is_finite() && t > 0.0) => {
                return Err(Error::Domain(format!("horizon must be > 0, got {t}")))
            }
            Horizon::Count(0) => {
                return Err(Error::Domain("event count target must be >= 1".into()))
            }
            _ => {}
        }
        if self.replicas == 0 {
            return Err(Error::Domain("replicas must be >= 1".into()));
        }
        Ok(())
    }
}

/// SplitMix64 finalizer. Child seed for replica `i` is
/// `mix64(master + (i+1) * 0x9E3779B97F4A7C15)`, i.e. the `(i+1)`-th
/// output of a SplitMix64 stream seeded at `master`. Fixed for
/// reproducibility across versions and platforms.
pub fn child_seed(master_seed: u64, replica: u64) -> u64 {
    let mut z = master_seed.wrapping_add((replica + 1).wrapping_mul(0x9E3779B97F4A7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn exp1(rng: &mut ChaCha8Rng) -> f64 {
    // inverse CDF keeps the draw count per event fixed and reproducible
    let u: f64 = rng.gen();
    -(-u).ln_1p()
}

/// Exact sampling by time change: unit-rate exponential partial sums
/// `u_1 < u_2 < ...` mapped through the inverse cumulative rate.
/// Deterministic for a given seed.
pub fn sample_path_inversion(
    params: &IntensityParams,
    horizon: f64,
    seed: u64,
) -> Result<EventSeries> {
    sample_path(params, Horizon::Time(horizon), Method::Inversion, seed)
}

/// Lewis-Shedler thinning against the global bound `b`: candidates arrive
/// at homogeneous rate `b` and are kept with probability
/// `lambda(t)/b = 1/(at + 1)`. Distributionally identical to
/// [`sample_path_inversion`]; deterministic for a given seed.
///
/// The candidate count grows linearly with the horizon, and under a
/// count stop rule it grows like `e^{ak/b}` with the target `k`; inversion
/// is the workhorse, thinning the cross-check.
pub fn sample_path_thinning(
    params: &IntensityParams,
    horizon: f64,
    seed: u64,
) -> Result<EventSeries> {
    sample_path(params, Horizon::Time(horizon), Method::Thinning, seed)
}

/// One sample path under either method and stop rule.
pub fn sample_path(
    params: &IntensityParams,
    horizon: Horizon,
    method: Method,
    seed: u64,
) -> Result<EventSeries> {
    match horizon {
        Horizon::Time(t) if !(t.is_finite() && t > 0.0) => {
            return Err(Error::Domain(format!("horizon must be > 0, got {t}")))
        }
        Horizon::Count(0) => return Err(Error::Domain("event count target must be >= 1".into())),
        _ => {}
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times = match (method, horizon) {
        (Method::Inversion, Horizon::Time(end)) => {
            let total = params.cumulative_intensity(end)?;
            let mut times = Vec::new();
            let mut u = 0.0;
            loop {
                u += exp1(&mut rng);
                if u > total {
                    break;
                }
                times.push(params.inverse_cumulative(u)?.min(end));
            }
            times
        }
        (Method::Inversion, Horizon::Count(k)) => {
            let mut times = Vec::with_capacity(k as usize);
            let mut u = 0.0;
            for _ in 0..k {
                u += exp1(&mut rng);
                times.push(params.inverse_cumulative(u)?);
            }
            times
        }
        (Method::Thinning, Horizon::Time(end)) => {
            let mut times = Vec::new();
            let mut s = 0.0;
            loop {
                s += exp1(&mut rng) / params.b();
                if s > end {
                    break;
                }
                let accept: f64 = rng.gen();
                if accept < 1.0 / (params.a() * s + 1.0) {
                    times.push(s);
                }
            }
            times
        }
        (Method::Thinning, Horizon::Count(k)) => {
            let mut times = Vec::with_capacity(k as usize);
            let mut s = 0.0;
            while times.len() < k as usize {
                s += exp1(&mut rng) / params.b();
                if !s.is_finite() {
                    return Err(Error::Overflow { exponent: s });
                }
                let accept: f64 = rng.gen();
                if accept < 1.0 / (params.a() * s + 1.0) {
                    times.push(s);
                }
            }
            times
        }
    };
    let window_end = match horizon {
        Horizon::Time(end) => end,
        Horizon::Count(_) => times.last().copied().unwrap_or(0.0),
    };
    EventSeries::new(times, window_end)
}

/// The result of [`simulate_ensemble`]: replica paths in index order.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub config: SimulationConfig,
    pub series: Vec<EventSeries>,
}

impl Ensemble {
    pub fn total_events(&self) -> usize {
        self.series.iter().map(EventSeries::len).sum()
    }

    /// All consecutive intervals, concatenated in replica order. Gaps are
    /// taken within each replica only, never across replicas.
    pub fn pooled_intervals(&self) -> IntervalSample {
        let intervals = self
            .series
            .iter()
            .flat_map(EventSeries::consecutive_intervals)
            .collect();
        IntervalSample {
            intervals,
            mode: SampleMode::PooledConsecutive,
            source: self.source_tag(),
        }
    }

    /// One `T_{n+1}` value per replica having at least `n+1` events;
    /// `n = 0` extracts the first event time (gap from the origin).
    pub fn fixed_index_intervals(&self, n: u32) -> IntervalSample {
        IntervalSample {
            intervals: fixed_index_from_series(&self.series, n),
            mode: SampleMode::FixedIndex(n),
            source: self.source_tag(),
        }
    }

    fn source_tag(&self) -> String {
        format!(
            "simulated a={} b={} seed={}",
            self.config.params.a(),
            self.config.params.b(),
            self.config.master_seed
        )
    }
}

/// `T_{n+1}` per series with enough events; see
/// [`Ensemble::fixed_index_intervals`].
pub fn fixed_index_from_series(series: &[EventSeries], n: u32) -> Vec<f64> {
    let n = n as usize;
    series
        .iter()
        .filter(|s| s.len() >= n + 1)
        .map(|s| {
            let t = s.times();
            if n == 0 {
                t[0]
            } else {
                t[n] - t[n - 1]
            }
        })
        .collect()
}

/// Runs `cfg.replicas` independent paths. Replica `i` uses
/// `child_seed(master_seed, i)`; replicas run in parallel and the output
/// is identical regardless of scheduling. Per-replica failures carry the
/// replica index.
pub fn simulate_ensemble(cfg: &SimulationConfig) -> Result<Ensemble> {
    cfg.validate()?;
    let series = (0..cfg.replicas)
        .into_par_iter()
        .map(|i| {
            sample_path(
                &cfg.params,
                cfg.horizon,
                cfg.method,
                child_seed(cfg.master_seed, i),
            )
            .map_err(|e| Error::Replica {
                index: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        config: cfg.clone(),
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{ks_distance, ks_two_sample};

    fn p(a: f64, b: f64) -> IntensityParams {
        IntensityParams::new(a, b).unwrap()
    }

    #[test]
    fn rejects_bad_horizons() {
        let params = p(1.0, 1.0);
        assert!(sample_path_inversion(&params, 0.0, 1).is_err());
        assert!(sample_path_inversion(&params, -3.0, 1).is_err());
        assert!(sample_path(&params, Horizon::Count(0), Method::Inversion, 1).is_err());
    }

    #[test]
    fn inversion_is_deterministic() {
        let params = p(1.0, 1.0);
        let s1 = sample_path_inversion(&params, 1e3, 42).unwrap();
        let s2 = sample_path_inversion(&params, 1e3, 42).unwrap();
        assert_eq!(s1, s2);
        let s3 = sample_path_thinning(&params, 1e3, 42).unwrap();
        let s4 = sample_path_thinning(&params, 1e3, 42).unwrap();
        assert_eq!(s3, s4);
    }

    #[test]
    fn homogeneous_count_near_mean() {
        // N(T) ~ Poisson(b T); 3 sigma band around 30000
        let series = sample_path_inversion(&p(0.0, 3.0), 1e4, 7).unwrap();
        let n = series.len() as f64;
        assert!(
            (n - 30000.0).abs() < 3.0 * 30000.0f64.sqrt(),
            "count {n} too far from 30000"
        );
    }

    #[test]
    fn count_mode_stops_at_kth_event() {
        let series = sample_path(&p(1.0, 1.0), Horizon::Count(17), Method::Inversion, 3).unwrap();
        assert_eq!(series.len(), 17);
        assert_eq!(series.window_end(), *series.times().last().unwrap());

        let series = sample_path(&p(1.0, 1.0), Horizon::Count(17), Method::Thinning, 3).unwrap();
        assert_eq!(series.len(), 17);
    }

    #[test]
    fn count_mode_overflow_is_reported() {
        // b/a tiny: event times blow past the f64 exponent range quickly
        let res = sample_path(&p(1.0, 0.01), Horizon::Count(100), Method::Inversion, 3);
        assert!(matches!(res, Err(Error::Overflow { .. })));
    }

    #[test]
    fn events_fall_inside_window() {
        let series = sample_path_inversion(&p(0.5, 2.0), 500.0, 11).unwrap();
        assert!(series.times().iter().all(|&t| (0.0..=500.0).contains(&t)));
        assert!(series.times().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn time_rescaling_gives_unit_exponentials() {
        // Count-stopped paths avoid the window-boundary truncation bias:
        // the rescaled increments are exactly iid Exp(1). Checked for the
        // thinning sampler too, where the claim is not true by
        // construction.
        // thinning draws candidates at rate b until the k-th acceptance,
        // which costs ~e^{ak/b} candidates, so it gets a smaller k
        for (method, count, replicas) in [
            (Method::Inversion, 50u64, 250u64),
            (Method::Thinning, 20, 500),
        ] {
            let params = p(1.0, 2.0);
            let mut increments = Vec::new();
            for r in 0..replicas {
                let s =
                    sample_path(&params, Horizon::Count(count), method, child_seed(99, r))
                        .unwrap();
                let mut prev = 0.0;
                for &t in s.times() {
                    let u = params.cumulative_intensity(t).unwrap();
                    increments.push(u - prev);
                    prev = u;
                }
            }
            assert!(increments.len() >= 10_000);
            let sample = IntervalSample {
                intervals: increments,
                mode: SampleMode::PooledConsecutive,
                source: "rescaled".into(),
            };
            let report = ks_distance(&sample, |t| Ok(1.0 - (-t).exp())).unwrap();
            assert!(
                report.pass_001,
                "{method:?}: KS {} >= {}",
                report.statistic, report.critical_001
            );
        }
    }

    #[test]
    fn disjoint_window_counts_uncorrelated() {
        let params = p(1.0, 1.0);
        let reps = 10_000u64;
        let mut xs = Vec::with_capacity(reps as usize);
        let mut ys = Vec::with_capacity(reps as usize);
        for r in 0..reps {
            let s = sample_path_inversion(&params, 60.0, child_seed(5, r)).unwrap();
            let n1 = s.count_at(5.0);
            let n2 = s.count_at(60.0) - s.count_at(20.0);
            xs.push(n1 as f64);
            ys.push(n2 as f64);
        }
        let mx = xs.iter().sum::<f64>() / reps as f64;
        let my = ys.iter().sum::<f64>() / reps as f64;
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        let mut syy = 0.0;
        for i in 0..reps as usize {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx).powi(2);
            syy += (ys[i] - my).powi(2);
        }
        let corr = sxy / (sxx * syy).sqrt();
        assert!(corr.abs() < 0.03, "count correlation {corr}");
    }

    #[test]
    fn ensemble_mean_count_matches_cumulative_intensity() {
        let cfg = SimulationConfig {
            params: p(1.0, 1.0),
            horizon: Horizon::Time(100.0),
            replicas: 10_000,
            master_seed: 42,
            method: Method::Inversion,
        };
        let ens = simulate_ensemble(&cfg).unwrap();
        let mean = ens.total_events() as f64 / cfg.replicas as f64;
        let lambda = cfg.params.cumulative_intensity(100.0).unwrap();
        assert!(
            (mean - lambda).abs() < 0.01 * lambda,
            "mean {mean} vs Lambda {lambda}"
        );
    }

    #[test]
    fn ensemble_is_deterministic_under_parallelism() {
        let cfg = SimulationConfig {
            params: p(0.5, 2.0),
            horizon: Horizon::Time(50.0),
            replicas: 500,
            master_seed: 13,
            method: Method::Thinning,
        };
        let e1 = simulate_ensemble(&cfg).unwrap();
        let e2 = simulate_ensemble(&cfg).unwrap();
        assert_eq!(e1.series, e2.series);
    }

    #[test]
    fn single_replica_reduces_to_sample_path() {
        let cfg = SimulationConfig {
            params: p(1.0, 1.0),
            horizon: Horizon::Time(100.0),
            replicas: 1,
            master_seed: 77,
            method: Method::Inversion,
        };
        let ens = simulate_ensemble(&cfg).unwrap();
        let direct =
            sample_path(&cfg.params, cfg.horizon, cfg.method, child_seed(77, 0)).unwrap();
        assert_eq!(ens.series[0], direct);
    }

    #[test]
    fn fixed_index_extraction() {
        let s1 = EventSeries::new(vec![1.0, 3.0, 6.0], 10.0).unwrap();
        let s2 = EventSeries::new(vec![2.0], 10.0).unwrap();
        let s3 = EventSeries::new(vec![0.5, 0.7], 10.0).unwrap();
        let series = [s1, s2, s3];
        // n=1: T_2 per replica with >= 2 events
        let t2 = fixed_index_from_series(&series, 1);
        assert_eq!(t2, vec![2.0, 0.7 - 0.5]);
        // n=0: first event time
        let t1 = fixed_index_from_series(&series, 0);
        assert_eq!(t1, vec![1.0, 2.0, 0.5]);
    }

    #[test]
    fn replica_errors_carry_index() {
        let cfg = SimulationConfig {
            params: p(1.0, 0.01),
            horizon: Horizon::Count(100),
            replicas: 3,
            master_seed: 1,
            method: Method::Inversion,
        };
        match simulate_ensemble(&cfg) {
            Err(Error::Replica { .. }) => {}
            other => panic!("expected replica error, got {other:?}"),
        }
    }

    /// Independent construction of the same process: draw
    /// `N ~ Poisson(Lambda(T))` by exponential counting on a separate
    /// stream, then place events at `Lambda^-1(Lambda(T) * U_(i))` with
    /// sorted uniforms (order-statistics property of Poisson processes).
    fn conditional_uniformity_path(
        params: &IntensityParams,
        end: f64,
        seed: u64,
    ) -> EventSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total = params.cumulative_intensity(end).unwrap();
        let mut n = 0usize;
        let mut acc = 0.0;
        loop {
            acc += exp1(&mut rng);
            if acc > total {
                break;
            }
            n += 1;
        }
        let mut us: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * total).collect();
        us.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let times = us
            .into_iter()
            .map(|u| params.inverse_cumulative(u).unwrap().min(end))
            .collect();
        EventSeries::new(times, end).unwrap()
    }

    #[test]
    fn inversion_matches_conditional_uniformity_oracle() {
        let params = p(1.0, 1.0);
        let mut inv = Vec::new();
        let mut oracle = Vec::new();
        for r in 0..3000u64 {
            inv.extend(
                sample_path_inversion(&params, 1e3, child_seed(21, r))
                    .unwrap()
                    .consecutive_intervals(),
            );
            oracle.extend(
                conditional_uniformity_path(&params, 1e3, child_seed(22, r))
                    .consecutive_intervals(),
            );
        }
        let report = ks_two_sample(&inv, &oracle).unwrap();
        assert!(
            report.pass_001,
            "KS {} >= {}",
            report.statistic, report.critical_001
        );
    }
}
