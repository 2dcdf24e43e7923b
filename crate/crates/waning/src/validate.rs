//! Cross-module validation suite: simulation against the exact interval
//! distribution, the degenerate exponential limit, exponent recovery, and
//! the power-law demonstration, bundled into a reproducible report.

use serde::{Deserialize, Serialize};

use crate::analytic::{density_tn, eq8_approximation, survival_tn, QuadratureConfig};
use crate::error::Result;
use crate::inference::{
    fit_hill_mle, fit_loglog_regression, fit_nhpp_mle_ensemble, ks_distance, ks_two_sample,
    log_binned_pdf, mass_window,
};
use crate::intensity::IntensityParams;
use crate::simulate::{
    child_seed, sample_path, simulate_ensemble, Horizon, IntervalSample, Method, SampleMode,
    SimulationConfig,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub master_seed: u64,
    /// Sample size for the Kolmogorov-Smirnov style checks.
    pub ks_samples: usize,
    /// Replica count for the ensemble mean-count check.
    pub mean_replicas: u64,
    /// Include the deliberately mismatched check (survival with the wrong
    /// event index); it must be reported as a failure.
    pub negative_control: bool,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            master_seed: 1,
            ks_samples: 20_000,
            mean_replicas: 10_000,
            negative_control: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub statistic: f64,
    pub threshold: f64,
    pub seed: u64,
    pub details: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportNote {
    pub name: String,
    pub details: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub version: String,
    pub config: ValidationConfig,
    pub checks: Vec<CheckResult>,
    pub notes: Vec<ReportNote>,
    pub passed: bool,
}

fn check(
    name: &str,
    seed: u64,
    statistic: f64,
    threshold: f64,
    details: String,
) -> CheckResult {
    CheckResult {
        name: name.into(),
        pass: statistic < threshold,
        statistic,
        threshold,
        seed,
        details,
    }
}

/// Runs every check and assembles the report. Deterministic for a given
/// configuration; each check derives its own seed from the master seed.
pub fn run_validation(cfg: &ValidationConfig) -> Result<ValidationReport> {
    let quad = QuadratureConfig::default();
    let mut checks = Vec::new();
    let mut notes = Vec::new();

    // 1. degenerate limit: a = 0 pooled intervals are Exp(b)
    {
        let seed = child_seed(cfg.master_seed, 1);
        let b = 2.0;
        let params = IntensityParams::new(0.0, b)?;
        let path = sample_path(
            &params,
            Horizon::Count(cfg.ks_samples as u64 + 1),
            Method::Inversion,
            seed,
        )?;
        let sample = IntervalSample {
            intervals: path.consecutive_intervals(),
            mode: SampleMode::PooledConsecutive,
            source: "validate".into(),
        };
        let report = ks_distance(&sample, |t| Ok(1.0 - (-b * t).exp()))?;
        checks.push(check(
            "degenerate-exponential-ks",
            seed,
            report.statistic,
            report.critical_001,
            format!("{} pooled intervals against Exp(2)", sample.len()),
        ));
    }

    // 2. equal-rate closed form: survival(a=b, n=1) = ln(1+at)/(at)
    {
        let params = IntensityParams::new(1.0, 1.0)?;
        let mut worst = 0.0f64;
        for i in 0..50 {
            let t = 1e-3 * 10f64.powf(9.0 * i as f64 / 49.0);
            let s = survival_tn(&params, 1, t, &quad)?;
            let exact = t.ln_1p() / t;
            worst = worst.max((s - exact).abs() / exact);
        }
        checks.push(check(
            "equal-rate-closed-form",
            0,
            worst,
            1e-6,
            "max relative error over 50 log-spaced t in [1e-3, 1e6]".into(),
        ));
    }

    // 3. fixed-index samples against the exact survival
    for (i, &(a, b, n)) in [(1.0, 1.0, 1u32), (1.0, 1.0, 2), (0.5, 2.0, 1)]
        .iter()
        .enumerate()
    {
        let seed = child_seed(cfg.master_seed, 30 + i as u64);
        let params = IntensityParams::new(a, b)?;
        let ens = simulate_ensemble(&SimulationConfig {
            params,
            horizon: Horizon::Count(n as u64 + 1),
            replicas: (cfg.ks_samples / 2).max(100) as u64,
            master_seed: seed,
            method: Method::Inversion,
        })?;
        let sample = ens.fixed_index_intervals(n);
        let report = ks_distance(&sample, |t| Ok(1.0 - survival_tn(&params, n, t, &quad)?))?;
        checks.push(check(
            &format!("fixed-index-ks-a{a}-b{b}-n{n}"),
            seed,
            report.statistic,
            report.critical_001,
            format!("{} samples of the gap after event {n}", sample.len()),
        ));
    }

    // 4. density equals the negative survival slope
    {
        let seed = child_seed(cfg.master_seed, 4);
        let mut worst = 0.0f64;
        let mut state = seed;
        let mut next_unit = || {
            state = child_seed(state, 0);
            state as f64 / u64::MAX as f64
        };
        for _ in 0..40 {
            let a = 0.1 + 1.9 * next_unit();
            let b = 0.2 + 2.8 * next_unit();
            let n = 1 + (next_unit() * 5.0) as u32;
            let t = 0.05 + 5.0 * next_unit();
            let params = IntensityParams::new(a, b)?;
            let h = 1e-4 * t.max(1.0);
            let fd = (survival_tn(&params, n, t - h, &quad)?
                - survival_tn(&params, n, t + h, &quad)?)
                / (2.0 * h);
            let f = density_tn(&params, n, t, &quad)?;
            worst = worst.max((fd - f).abs() / f);
        }
        checks.push(check(
            "density-matches-survival-slope",
            seed,
            worst,
            1e-4,
            "central finite differences at 40 random (a, b, n, t)".into(),
        ));
    }

    // 5. normalization: truncated density integral plus survival remainder
    {
        let mut worst = 0.0f64;
        for &(a, b, n) in &[(1.0, 1.0, 1u32), (0.7, 2.3, 3), (0.5, 2.0, 2)] {
            let params = IntensityParams::new(a, b)?;
            let t_max = 5.0 / b;
            let integral = integrate_density(&params, n, t_max, &quad)?;
            let total = integral + survival_tn(&params, n, t_max, &quad)?;
            worst = worst.max((total - 1.0).abs());
        }
        checks.push(check(
            "density-normalization",
            0,
            worst,
            1e-6,
            "integral over [0, t_max] plus survival remainder".into(),
        ));
    }

    // 6. ensemble mean count matches the cumulative rate
    {
        let seed = child_seed(cfg.master_seed, 6);
        let params = IntensityParams::new(1.0, 1.0)?;
        let ens = simulate_ensemble(&SimulationConfig {
            params,
            horizon: Horizon::Time(100.0),
            replicas: cfg.mean_replicas,
            master_seed: seed,
            method: Method::Inversion,
        })?;
        let mean = ens.total_events() as f64 / cfg.mean_replicas as f64;
        let lambda = params.cumulative_intensity(100.0)?;
        checks.push(check(
            "ensemble-mean-count",
            seed,
            (mean - lambda).abs() / lambda,
            0.01,
            format!("mean {mean:.5} vs expected {lambda:.5}"),
        ));
    }

    // 7. exponent recovery from first-interval ensembles at gamma = 2
    {
        let seed = child_seed(cfg.master_seed, 7);
        let gamma = 2.0;
        let params = IntensityParams::new(1.0, gamma - 1.0)?;
        let ens = simulate_ensemble(&SimulationConfig {
            params,
            horizon: Horizon::Count(1),
            replicas: 50_000,
            master_seed: seed,
            method: Method::Inversion,
        })?;
        let sample = ens.fixed_index_intervals(0);
        let dist = log_binned_pdf(&sample, 10)?;
        let window = mass_window(&dist, 0.8, 0.995);
        let reg = fit_loglog_regression(&dist, Some(window))?;
        let hill = fit_hill_mle(&sample, sample.median().unwrap())?;
        let dev = (reg.exponent - gamma).abs().max((hill.exponent - gamma).abs());
        checks.push(check(
            "exponent-recovery",
            seed,
            dev,
            0.3,
            format!(
                "regression {:.4}, hill(median) {:.4}, target {gamma}",
                reg.exponent, hill.exponent
            ),
        ));
    }

    // 8. joint maximum likelihood recovers (a, b) from ~6000 events
    {
        let seed = child_seed(cfg.master_seed, 8);
        let horizon = 2.0 * (5f64.exp() - 1.0); // about 20 events per replica
        let ens = simulate_ensemble(&SimulationConfig {
            params: IntensityParams::new(0.5, 2.0)?,
            horizon: Horizon::Time(horizon),
            replicas: 300,
            master_seed: seed,
            method: Method::Inversion,
        })?;
        let fit = fit_nhpp_mle_ensemble(&ens.series)?;
        let ratio = fit.b_hat / fit.a_hat;
        let log_windows: f64 = ens
            .series
            .iter()
            .map(|s| (fit.a_hat * s.window_end()).ln_1p())
            .sum();
        let relation_err =
            (fit.b_hat - fit.n as f64 * fit.a_hat / log_windows).abs() / fit.b_hat;
        let pass_relation = relation_err <= 1e-9;
        let dev = (ratio - 4.0).abs() / 4.0;
        let mut result = check(
            "mle-recovery",
            seed,
            dev,
            0.1,
            format!(
                "b/a = {ratio:.4} from {} events; profile relation residual {relation_err:.2e}",
                fit.n
            ),
        );
        result.pass = result.pass && pass_relation;
        checks.push(result);
    }

    // 9. thinning and inversion agree in distribution
    {
        let seed = child_seed(cfg.master_seed, 9);
        let params = IntensityParams::new(1.0, 1.0)?;
        let mut inv = Vec::new();
        let mut thin = Vec::new();
        for r in 0..200u64 {
            inv.extend(
                sample_path(&params, Horizon::Time(1e3), Method::Inversion, child_seed(seed, r))?
                    .consecutive_intervals(),
            );
            thin.extend(
                sample_path(
                    &params,
                    Horizon::Time(1e3),
                    Method::Thinning,
                    child_seed(seed, 1000 + r),
                )?
                .consecutive_intervals(),
            );
        }
        let report = ks_two_sample(&inv, &thin)?;
        checks.push(check(
            "thinning-vs-inversion-ks",
            seed,
            report.statistic,
            report.critical_001,
            format!(
                "pooled intervals from 200 runs each ({} vs {})",
                inv.len(),
                thin.len()
            ),
        ));
    }

    // 10. tail slope of the exact density approaches -(b/a + 1)
    {
        let tight = QuadratureConfig::new(64, 1e-9, 10)?;
        let mut worst = 0.0f64;
        let mut details = String::new();
        for &(a, b) in &[(1.0, 1.0), (1.0, 0.5), (0.5, 2.0)] {
            let params = IntensityParams::new(a, b)?;
            let gamma = b / a + 1.0;
            let slope = density_loglog_slope(&params, 1, 1e3, 1e6, 25, &tight)?;
            let dev = (slope + gamma).abs();
            worst = worst.max(dev);
            details.push_str(&format!("(a={a}, b={b}): slope {slope:.4} vs -{gamma}; "));
        }
        checks.push(check("tail-slope", 0, worst, 0.15, details));
    }

    // record the logarithmic correction rather than asserting it away
    {
        let tight = QuadratureConfig::new(64, 1e-9, 10)?;
        let params = IntensityParams::new(1.0, 1.0)?;
        let f3 = density_tn(&params, 1, 1e3, &tight)?;
        let f6 = density_tn(&params, 1, 1e6, &tight)?;
        let compensated_ratio = (f6 * 1e12) / (f3 * 1e6);
        let eq8_3 = eq8_approximation(&params, 1, 1e3, 40.0, 0.0)?;
        let eq8_6 = eq8_approximation(&params, 1, 1e6, 40.0, 0.0)?;
        let eq8_ratio = (eq8_6 * 1e12) / (eq8_3 * 1e6);
        notes.push(ReportNote {
            name: "log-correction-at-equal-rates".into(),
            details: format!(
                "for a = b = 1, n = 1 the compensated exact density t^2 f(t) keeps growing \
                 (ratio {compensated_ratio:.4} between t = 1e6 and t = 1e3, close to \
                 ln(1e6)/ln(1e3) = 2), while the mean-value power-law form is flat \
                 (ratio {eq8_ratio:.4}); the fixed-index tail carries a logarithmic \
                 correction that the pure power law discards, so exact-tail checks \
                 target the integrals, not the approximation"
            ),
        });
    }

    // negative control: survival with the wrong event index must fail
    if cfg.negative_control {
        let seed = child_seed(cfg.master_seed, 99);
        let params = IntensityParams::new(1.0, 1.0)?;
        let ens = simulate_ensemble(&SimulationConfig {
            params,
            horizon: Horizon::Count(3),
            replicas: (cfg.ks_samples / 2).max(100) as u64,
            master_seed: seed,
            method: Method::Inversion,
        })?;
        let sample = ens.fixed_index_intervals(2);
        let report = ks_distance(&sample, |t| Ok(1.0 - survival_tn(&params, 1, t, &quad)?))?;
        checks.push(check(
            "negative-control-mismatched-n",
            seed,
            report.statistic,
            report.critical_001,
            "gap after event 2 tested against the distribution for event 1; \
             this check is expected to fail"
                .into(),
        ));
    }

    let passed = checks.iter().all(|c| c.pass);
    Ok(ValidationReport {
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        checks,
        notes,
        passed,
    })
}

/// Adaptive Simpson integral of the interval density over `[0, t_max]`.
pub fn integrate_density(
    params: &IntensityParams,
    n: u32,
    t_max: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    fn simpson(
        params: &IntensityParams,
        n: u32,
        quad: &QuadratureConfig,
        lo: f64,
        hi: f64,
        flo: f64,
        fmid: f64,
        fhi: f64,
        whole: f64,
        depth: u32,
    ) -> Result<f64> {
        let mid = 0.5 * (lo + hi);
        let lm = 0.5 * (lo + mid);
        let rm = 0.5 * (mid + hi);
        let flm = density_tn(params, n, lm, quad)?;
        let frm = density_tn(params, n, rm, quad)?;
        let left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        let right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        let both = left + right;
        // the density itself is only accurate to the quadrature tolerance,
        // so refining past ~3e-8 would chase noise
        if depth == 0 || (both - whole).abs() <= 3e-8 * both.abs().max(1e-12) {
            Ok(both + (both - whole) / 15.0)
        } else {
            Ok(
                simpson(params, n, quad, lo, mid, flo, flm, fmid, left, depth - 1)?
                    + simpson(params, n, quad, mid, hi, fmid, frm, fhi, right, depth - 1)?,
            )
        }
    }
    let flo = density_tn(params, n, 0.0, quad)?;
    let fmid = density_tn(params, n, 0.5 * t_max, quad)?;
    let fhi = density_tn(params, n, t_max, quad)?;
    let whole = t_max / 6.0 * (flo + 4.0 * fmid + fhi);
    simpson(params, n, quad, 0.0, t_max, flo, fmid, fhi, whole, 18)
}

/// Least-squares slope of `ln density` against `ln t` over a log-spaced
/// grid in `[t_lo, t_hi]`.
pub fn density_loglog_slope(
    params: &IntensityParams,
    n: u32,
    t_lo: f64,
    t_hi: f64,
    points: usize,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    for i in 0..points {
        let f = i as f64 / (points - 1) as f64;
        let t = t_lo * (t_hi / t_lo).powf(f);
        xs.push(t.ln());
        ys.push(density_tn(params, n, t, quad)?.ln());
    }
    let mx = xs.iter().sum::<f64>() / points as f64;
    let my = ys.iter().sum::<f64>() / points as f64;
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let cfg = ValidationConfig {
            master_seed: 1,
            ks_samples: 4_000,
            mean_replicas: 10_000,
            negative_control: false,
        };
        let report = run_validation(&cfg).unwrap();
        for c in &report.checks {
            assert!(
                c.pass,
                "{}: statistic {} vs threshold {} ({})",
                c.name, c.statistic, c.threshold, c.details
            );
        }
        assert!(report.passed);
        assert!(!report.notes.is_empty());
    }

    #[test]
    fn negative_control_fails_as_expected() {
        let cfg = ValidationConfig {
            master_seed: 1,
            ks_samples: 4_000,
            mean_replicas: 1_000,
            negative_control: true,
        };
        let report = run_validation(&cfg).unwrap();
        let control = report
            .checks
            .iter()
            .find(|c| c.name == "negative-control-mismatched-n")
            .expect("control check present");
        assert!(!control.pass, "mismatched check unexpectedly passed");
        assert!(!report.passed);
    }

    #[test]
    fn report_is_deterministic() {
        let cfg = ValidationConfig {
            master_seed: 9,
            ks_samples: 1_000,
            mean_replicas: 500,
            negative_control: false,
        };
        let r1 = serde_json::to_string(&run_validation(&cfg).unwrap()).unwrap();
        let r2 = serde_json::to_string(&run_validation(&cfg).unwrap()).unwrap();
        assert_eq!(r1, r2);
    }
}
