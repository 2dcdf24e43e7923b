//! Empirical pipeline: interval extraction, log-binned distributions,
//! log-log regression with correlation coefficient, Hill-type exponent
//! estimation, and full `(a, b)` maximum-likelihood fitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::{EventSeries, IntervalSample, SampleMode};

/// What to do with zero gaps (same-timestamp events) before log binning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TiePolicy {
    /// Replace each zero gap by a resolution `delta`; `None` uses the
    /// smallest positive observed gap.
    Resolve(Option<f64>),
    /// Drop zero gaps.
    Drop,
}

impl Default for TiePolicy {
    fn default() -> Self {
        TiePolicy::Resolve(None)
    }
}

/// Successive differences of one event series. Requires at least two
/// events; zero gaps are handled per the tie policy.
pub fn intervals_from_events(series: &EventSeries, policy: TiePolicy) -> Result<IntervalSample> {
    let intervals = pooled_intervals(std::slice::from_ref(series), policy)?;
    Ok(intervals)
}

/// Successive differences pooled over several series (gaps never span
/// series boundaries). The tie resolution, when inferred, is the smallest
/// positive gap across the whole pool.
pub fn pooled_intervals(series: &[EventSeries], policy: TiePolicy) -> Result<IntervalSample> {
    let raw: Vec<f64> = series
        .iter()
        .flat_map(EventSeries::consecutive_intervals)
        .collect();
    if raw.is_empty() {
        return Err(Error::EmptySample(
            "need at least one series with two or more events".into(),
        ));
    }
    let intervals = apply_tie_policy(raw, policy)?;
    if intervals.is_empty() {
        return Err(Error::EmptySample("all gaps were ties and dropped".into()));
    }
    Ok(IntervalSample {
        intervals,
        mode: SampleMode::PooledConsecutive,
        source: "events".into(),
    })
}

fn apply_tie_policy(raw: Vec<f64>, policy: TiePolicy) -> Result<Vec<f64>> {
    let has_ties = raw.iter().any(|&v| v == 0.0);
    if !has_ties {
        return Ok(raw);
    }
    match policy {
        TiePolicy::Drop => Ok(raw.into_iter().filter(|&v| v > 0.0).collect()),
        TiePolicy::Resolve(delta) => {
            let delta = match delta {
                Some(d) if d > 0.0 && d.is_finite() => d,
                Some(d) => {
                    return Err(Error::Domain(format!(
                        "tie resolution must be finite and > 0, got {d}"
                    )))
                }
                None => {
                    let min_pos = raw
                        .iter()
                        .copied()
                        .filter(|&v| v > 0.0)
                        .fold(f64::INFINITY, f64::min);
                    if !min_pos.is_finite() {
                        return Err(Error::DegenerateSeries(
                            "all gaps are zero; supply an explicit tie resolution".into(),
                        ));
                    }
                    min_pos
                }
            };
            Ok(raw
                .into_iter()
                .map(|v| if v == 0.0 { delta } else { v })
                .collect())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinKind {
    #[serde(rename = "pdf")]
    Pdf,
    #[serde(rename = "ccdf")]
    Ccdf,
}

/// One occupied log-spaced bin.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BinPoint {
    /// Geometric bin center.
    pub t: f64,
    /// Density (pdf kind) or tail probability (ccdf kind).
    pub value: f64,
    pub count: u64,
    pub lo: f64,
    pub hi: f64,
}

/// Log-binned empirical distribution; only occupied bins are kept.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinnedDistribution {
    pub points: Vec<BinPoint>,
    pub kind: BinKind,
    pub bins_per_decade: u32,
    pub sample_count: usize,
}

struct BinGrid {
    lo: f64,
    ln_ratio: f64,
    nbins: usize,
}

impl BinGrid {
    fn build(intervals: &[f64], bins_per_decade: u32) -> Result<(Self, Vec<u64>)> {
        for (index, &v) in intervals.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositiveInterval { value: v, index });
            }
        }
        let lo = intervals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = intervals.iter().copied().fold(0.0f64, f64::max);
        let ln_ratio = 10f64.ln() / bins_per_decade as f64;
        let nbins = if lo == hi {
            1
        } else {
            let mut n = ((hi / lo).ln() / ln_ratio).ceil() as usize;
            // right edge must strictly exceed the maximum
            while lo * ((n as f64) * ln_ratio).exp() <= hi {
                n += 1;
            }
            n
        };
        let grid = BinGrid { lo, ln_ratio, nbins };
        let mut counts = vec![0u64; grid.nbins];
        for &v in intervals {
            counts[grid.index_of(v)] += 1;
        }
        Ok((grid, counts))
    }

    fn index_of(&self, v: f64) -> usize {
        let i = ((v / self.lo).ln() / self.ln_ratio).floor() as isize;
        i.clamp(0, self.nbins as isize - 1) as usize
    }

    fn edges(&self, i: usize) -> (f64, f64) {
        let lo = self.lo * (i as f64 * self.ln_ratio).exp();
        let hi = self.lo * ((i as f64 + 1.0) * self.ln_ratio).exp();
        (lo, hi)
    }
}

/// Histogram over geometric bins spanning `[min, max]`; per-bin density is
/// `count / (N * bin_width)`. Empty bins are omitted.
pub fn log_binned_pdf(sample: &IntervalSample, bins_per_decade: u32) -> Result<BinnedDistribution> {
    check_bins_per_decade(bins_per_decade)?;
    if sample.is_empty() {
        return Err(Error::EmptySample("cannot bin an empty sample".into()));
    }
    let (grid, counts) = BinGrid::build(&sample.intervals, bins_per_decade)?;
    let n = sample.len() as f64;
    let points = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| {
            let (lo, hi) = grid.edges(i);
            BinPoint {
                t: (lo * hi).sqrt(),
                value: c as f64 / (n * (hi - lo)),
                count: c,
                lo,
                hi,
            }
        })
        .collect();
    Ok(BinnedDistribution {
        points,
        kind: BinKind::Pdf,
        bins_per_decade,
        sample_count: sample.len(),
    })
}

/// Empirical complementary CDF `P{T > t}` evaluated at the geometric bin
/// centers of the occupied bins.
pub fn log_binned_ccdf(
    sample: &IntervalSample,
    bins_per_decade: u32,
) -> Result<BinnedDistribution> {
    check_bins_per_decade(bins_per_decade)?;
    if sample.is_empty() {
        return Err(Error::EmptySample("cannot bin an empty sample".into()));
    }
    let (grid, counts) = BinGrid::build(&sample.intervals, bins_per_decade)?;
    let mut sorted = sample.intervals.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let points = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| {
            let (lo, hi) = grid.edges(i);
            let t = (lo * hi).sqrt();
            let above = sorted.len() - sorted.partition_point(|&x| x <= t);
            BinPoint {
                t,
                value: above as f64 / n,
                count: c,
                lo,
                hi,
            }
        })
        .collect();
    Ok(BinnedDistribution {
        points,
        kind: BinKind::Ccdf,
        bins_per_decade,
        sample_count: sample.len(),
    })
}

fn check_bins_per_decade(bins_per_decade: u32) -> Result<()> {
    if bins_per_decade == 0 {
        return Err(Error::Domain("bins_per_decade must be >= 1".into()));
    }
    Ok(())
}

/// Bin centers bracketing the `[lo_frac, hi_frac]` window of sample mass;
/// the default regression range is `mass_window(dist, 0.0, 0.95)`, which
/// keeps the main body and trims the noisy extreme tail.
pub fn mass_window(dist: &BinnedDistribution, lo_frac: f64, hi_frac: f64) -> (f64, f64) {
    let total: u64 = dist.points.iter().map(|p| p.count).sum();
    let lo_target = lo_frac * total as f64;
    let hi_target = hi_frac * total as f64;
    let mut acc = 0u64;
    let mut t_lo = dist.points.first().map_or(0.0, |p| p.t);
    let mut t_hi = dist.points.last().map_or(f64::INFINITY, |p| p.t);
    let mut lo_found = false;
    for p in &dist.points {
        acc += p.count;
        if !lo_found && acc as f64 >= lo_target {
            t_lo = p.t;
            lo_found = true;
        }
        if acc as f64 >= hi_target {
            t_hi = p.t;
            break;
        }
    }
    (t_lo, t_hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMethod {
    #[serde(rename = "loglog-regression")]
    LogLogRegression,
    #[serde(rename = "hill-mle")]
    HillMle,
}

/// Estimated tail exponent with fit metadata; serialized flat.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub exponent: f64,
    /// log10 intercept of the regression line; absent for Hill.
    pub intercept: Option<f64>,
    /// Pearson correlation of the regressed points; absent for Hill.
    pub r: Option<f64>,
    pub method: FitMethod,
    pub t_lo: f64,
    pub t_hi: f64,
    pub sample_count: usize,
}

/// Ordinary least squares on `(log10 t, log10 value)` over occupied bins
/// inside `range` (defaults to the `[0, 95%]` mass window). The exponent
/// is the negated slope; `r` is the Pearson correlation.
pub fn fit_loglog_regression(
    dist: &BinnedDistribution,
    range: Option<(f64, f64)>,
) -> Result<FitResult> {
    let (t_lo, t_hi) = range.unwrap_or_else(|| mass_window(dist, 0.0, 0.95));
    if !(t_lo <= t_hi) {
        return Err(Error::Domain(format!(
            "fit range is empty: [{t_lo}, {t_hi}]"
        )));
    }
    let pts: Vec<(f64, f64)> = dist
        .points
        .iter()
        .filter(|p| p.t >= t_lo && p.t <= t_hi && p.value > 0.0)
        .map(|p| (p.t.log10(), p.value.log10()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need >= 3 occupied bins inside the fit range, found {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(x, y) in &pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r = if syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    };
    Ok(FitResult {
        exponent: -slope,
        intercept: Some(intercept),
        r: Some(r),
        method: FitMethod::LogLogRegression,
        t_lo,
        t_hi,
        sample_count: dist.sample_count,
    })
}

/// Continuous power-law maximum likelihood above a threshold:
/// `gamma = 1 + m / sum ln(t_i / t_min)` over the `m` intervals at or
/// above `t_min`. Scale-invariant; needs at least two qualifying
/// intervals.
pub fn fit_hill_mle(sample: &IntervalSample, t_min: f64) -> Result<FitResult> {
    if !(t_min > 0.0) || !t_min.is_finite() {
        return Err(Error::Domain(format!(
            "t_min must be finite and > 0, got {t_min}"
        )));
    }
    let tail: Vec<f64> = sample
        .intervals
        .iter()
        .copied()
        .filter(|&v| v >= t_min)
        .collect();
    if tail.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need >= 2 intervals at or above t_min={t_min}, found {}",
            tail.len()
        )));
    }
    let log_sum: f64 = tail.iter().map(|&v| (v / t_min).ln()).sum();
    if log_sum <= 0.0 {
        return Err(Error::DegenerateSeries(
            "all tail intervals equal t_min; exponent is unbounded".into(),
        ));
    }
    let t_hi = tail.iter().copied().fold(0.0f64, f64::max);
    Ok(FitResult {
        exponent: 1.0 + tail.len() as f64 / log_sum,
        intercept: None,
        r: None,
        method: FitMethod::HillMle,
        t_lo: t_min,
        t_hi,
        sample_count: tail.len(),
    })
}

/// Maximum-likelihood estimate of `(a, b)` for observed event series;
/// serialized flat.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NhppFit {
    pub a_hat: f64,
    pub b_hat: f64,
    pub log_likelihood: f64,
    /// Total observed time, summed over series.
    pub t_obs: f64,
    /// Total event count.
    pub n: usize,
    pub series_count: usize,
    /// `b/a + 1` at the estimate; absent in the homogeneous case.
    pub tail_exponent: Option<f64>,
}

/// Maximum likelihood for `(a, b)` from one series observed on
/// `[0, window_end]`: the log likelihood
/// `sum_i ln lambda(s_i) - Lambda(T)` is profiled in `b`
/// (`b(a) = n a / ln(aT + 1)`) and the one-dimensional profile is
/// maximized over `a in [0, 1e3/T]` by log-spaced bracketing plus
/// golden-section refinement, with the `a = 0` boundary candidate
/// compared explicitly.
pub fn fit_nhpp_mle(series: &EventSeries) -> Result<NhppFit> {
    fit_nhpp_mle_ensemble(std::slice::from_ref(series))
}

/// Joint maximum likelihood across independent series with shared
/// parameters: the profile becomes `b(a) = N a / sum_r ln(a T_r + 1)`.
/// Pooling replicas is the only way to reach large total event counts,
/// because a single path's event times grow exponentially with the event
/// index.
pub fn fit_nhpp_mle_ensemble(series: &[EventSeries]) -> Result<NhppFit> {
    let events: Vec<f64> = series.iter().flat_map(|s| s.times().to_vec()).collect();
    let n = events.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "need >= 2 events to fit, found {n}"
        )));
    }
    let windows: Vec<f64> = series.iter().map(EventSeries::window_end).collect();
    let t_total: f64 = windows.iter().sum();
    if !(t_total > 0.0) {
        return Err(Error::DegenerateSeries("zero total observation time".into()));
    }
    let s_min = events.iter().copied().fold(f64::INFINITY, f64::min);
    let s_max = events.iter().copied().fold(0.0f64, f64::max);
    if s_min == s_max {
        return Err(Error::DegenerateSeries(
            "all events at one instant; the rate parameters are not identifiable".into(),
        ));
    }

    let nf = n as f64;
    let mean_window = t_total / windows.len() as f64;
    let a_max = 1e3 / mean_window;

    // profile log likelihood; b is eliminated analytically
    let profile = |a: f64| -> (f64, f64) {
        if a == 0.0 {
            let b = nf / t_total;
            (nf * b.ln() - nf, b)
        } else {
            let log_windows: f64 = windows.iter().map(|&t| (a * t).ln_1p()).sum();
            let b = nf * a / log_windows;
            let ll = nf * b.ln() - events.iter().map(|&s| (a * s).ln_1p()).sum::<f64>() - nf;
            (ll, b)
        }
    };

    // log-spaced bracketing over [a_lo, a_max]
    let a_lo = 1e-9 / mean_window;
    let grid_n: usize = 160;
    let ratio = (a_max / a_lo).powf(1.0 / (grid_n - 1) as f64);
    let grid: Vec<f64> = (0..grid_n).map(|i| a_lo * ratio.powi(i as i32)).collect();
    let mut best_i = 0;
    let mut best_ll = f64::NEG_INFINITY;
    for (i, &a) in grid.iter().enumerate() {
        let (ll, _) = profile(a);
        if ll > best_ll {
            best_ll = ll;
            best_i = i;
        }
    }

    // golden-section on ln a within the bracketing neighbors
    let lo = grid[best_i.saturating_sub(1)].ln();
    let hi = grid[(best_i + 1).min(grid_n - 1)].ln();
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (lo, hi);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = profile(x1.exp()).0;
    let mut f2 = profile(x2.exp()).0;
    // width in ln a is relative width in a; stop at 1e-6
    while hi - lo > 1e-6 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = profile(x2.exp()).0;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = profile(x1.exp()).0;
        }
    }
    let a_interior = (0.5 * (lo + hi)).exp();
    let (ll_interior, _) = profile(a_interior);

    // boundary candidates compared explicitly
    let mut a_hat = a_interior;
    let mut ll_hat = ll_interior;
    let (ll_zero, _) = profile(0.0);
    if ll_zero >= ll_hat {
        a_hat = 0.0;
        ll_hat = ll_zero;
    }
    let (ll_amax, _) = profile(a_max);
    if ll_amax > ll_hat {
        a_hat = a_max;
        ll_hat = ll_amax;
    }

    let (_, b_hat) = profile(a_hat);
    Ok(NhppFit {
        a_hat,
        b_hat,
        log_likelihood: ll_hat,
        t_obs: t_total,
        n,
        series_count: series.len(),
        tail_exponent: if a_hat > 0.0 {
            Some(b_hat / a_hat + 1.0)
        } else {
            None
        },
    })
}

/// One-sample Kolmogorov-Smirnov report with the standard asymptotic
/// critical values at the 5% and 1% levels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub sample_count: usize,
    pub critical_005: f64,
    pub critical_001: f64,
    pub pass_005: bool,
    pub pass_001: bool,
}

impl KsReport {
    fn from_statistic(d: f64, effective_m: f64, sample_count: usize) -> Self {
        let critical_005 = 1.36 / effective_m.sqrt();
        let critical_001 = 1.63 / effective_m.sqrt();
        KsReport {
            statistic: d,
            sample_count,
            critical_005,
            critical_001,
            pass_005: d < critical_005,
            pass_001: d < critical_001,
        }
    }
}

/// Sup-norm distance between the sample's empirical CDF and `cdf`
/// (monotone on the support). The callable may fail (e.g. quadrature
/// trouble); the error propagates.
pub fn ks_distance<F>(sample: &IntervalSample, cdf: F) -> Result<KsReport>
where
    F: Fn(f64) -> Result<f64>,
{
    if sample.is_empty() {
        return Err(Error::EmptySample("KS test needs a nonempty sample".into()));
    }
    let mut sorted = sample.intervals.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x)?;
        let upper = ((i + 1) as f64 / m - f).abs();
        let lower = (i as f64 / m - f).abs();
        d = d.max(upper).max(lower);
    }
    Ok(KsReport::from_statistic(d, m, sorted.len()))
}

/// Two-sample Kolmogorov-Smirnov distance; the critical scale uses the
/// effective size `m n / (m + n)`.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<KsReport> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptySample("KS test needs nonempty samples".into()));
    }
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (m, n) = (a.len(), b.len());
    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < m && j < n {
        let x = a[i].min(b[j]);
        while i < m && a[i] <= x {
            i += 1;
        }
        while j < n && b[j] <= x {
            j += 1;
        }
        let diff = (i as f64 / m as f64 - j as f64 / n as f64).abs();
        d = d.max(diff);
    }
    let effective = (m * n) as f64 / (m + n) as f64;
    Ok(KsReport::from_statistic(d, effective, m.min(n)))
}
