//! Gaussian quadrature rules used by the analytic module.
//!
//! Generalized Gauss-Laguerre rules are built by the Golub-Welsch method:
//! eigenvalues of the symmetric tridiagonal Jacobi matrix are the nodes and
//! the squared first eigenvector components are the weights, already
//! normalized so they sum to one. That normalization sidesteps `Gamma(n)`
//! overflow entirely and stays stable for large polynomial order.
//!
//! Rules are cached globally by (kind, order, node count); they are
//! immutable once built, so concurrent lookups are safe.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

pub(crate) struct QuadRule {
    pub nodes: Vec<f64>,
    /// Probabilities for `GaussGamma` (sum to 1); plain weights on [-1, 1]
    /// for `GaussLegendre` (sum to 2).
    pub weights: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum RuleKey {
    GaussGamma { alpha_bits: u64, m: u32 },
    GaussLegendre { m: u32 },
}

fn cache() -> &'static Mutex<HashMap<RuleKey, Arc<QuadRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<RuleKey, Arc<QuadRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Nodes and probabilities for `E[f(U)]`, `U ~ Gamma(alpha + 1, 1)`,
/// i.e. the weight `u^alpha e^-u / Gamma(alpha + 1)` on `[0, inf)`.
pub(crate) fn gauss_gamma(alpha: f64, m: usize) -> Arc<QuadRule> {
    debug_assert!(alpha >= 0.0 && m >= 1);
    let key = RuleKey::GaussGamma {
        alpha_bits: alpha.to_bits(),
        m: m as u32,
    };
    if let Some(rule) = cache().lock().unwrap().get(&key) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(build_gauss_gamma(alpha, m));
    cache().lock().unwrap().insert(key, Arc::clone(&rule));
    rule
}

/// Nodes and weights on [-1, 1].
pub(crate) fn gauss_legendre(m: usize) -> Arc<QuadRule> {
    debug_assert!(m >= 1);
    let key = RuleKey::GaussLegendre { m: m as u32 };
    if let Some(rule) = cache().lock().unwrap().get(&key) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(build_gauss_legendre(m));
    cache().lock().unwrap().insert(key, Arc::clone(&rule));
    rule
}

fn build_gauss_gamma(alpha: f64, m: usize) -> QuadRule {
    // Jacobi matrix of the generalized Laguerre recurrence.
    let mut diag: Vec<f64> = (0..m).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
    let mut sub: Vec<f64> = (0..m)
        .map(|k| {
            let k = k as f64 + 1.0;
            (k * (k + alpha)).sqrt()
        })
        .collect();
    let mut z = vec![0.0; m];
    z[0] = 1.0;
    imtqlx(&mut diag, &mut sub, &mut z);
    let weights = z.iter().map(|v| v * v).collect();
    QuadRule {
        nodes: diag,
        weights,
    }
}

/// Implicit-QL diagonalization of a symmetric tridiagonal matrix,
/// rotating `z` along. On return `d` holds sorted eigenvalues and `z` the
/// first row of the eigenvector matrix. Classic Golub-Welsch companion.
fn imtqlx(d: &mut [f64], e: &mut [f64], z: &mut [f64]) {
    let n = d.len();
    if n == 1 {
        return;
    }
    e[n - 1] = 0.0;
    let prec = f64::EPSILON;
    const MAX_SWEEPS: usize = 60;

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                if e[m].abs() <= prec * (d[m].abs() + d[m + 1].abs()) {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            assert!(
                sweeps < MAX_SWEEPS,
                "tridiagonal QL failed to converge (order {n})"
            );
            sweeps += 1;

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut aborted = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let bb = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    aborted = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * bb;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - bb;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if !aborted {
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }
    }

    // insertion sort keeps nodes ascending with weights attached
    for i in 1..n {
        let (di, zi) = (d[i], z[i]);
        let mut j = i;
        while j > 0 && d[j - 1] > di {
            d[j] = d[j - 1];
            z[j] = z[j - 1];
            j -= 1;
        }
        d[j] = di;
        z[j] = zi;
    }
}

fn build_gauss_legendre(m: usize) -> QuadRule {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let half = m.div_ceil(2);
    for i in 0..half {
        // Newton from the Chebyshev-like initial guess.
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..m {
                let jf = j as f64;
                let p2 = p1;
                p1 = p0;
                p0 = ((2.0 * jf + 1.0) * t * p1 - jf * p2) / (jf + 1.0);
            }
            dp = m as f64 * (t * p0 - p1) / (t * t - 1.0);
            let step = p0 / dp;
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -t;
        nodes[m - 1 - i] = t;
        let w = 2.0 / ((1.0 - t * t) * dp * dp);
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    QuadRule { nodes, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_rule_is_normalized_and_matches_moments() {
        for &alpha in &[0.0, 1.0, 4.0, 49.0, 169.0, 400.0] {
            let rule = gauss_gamma(alpha, 64);
            let sum: f64 = rule.weights.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "alpha={alpha}: sum={sum}");

            let m1: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| x * w)
                .sum();
            let m2: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| x * x * w)
                .sum();
            let e1 = alpha + 1.0;
            let e2 = (alpha + 1.0) * (alpha + 2.0);
            assert!((m1 - e1).abs() < 1e-10 * e1, "alpha={alpha}: E[U]={m1}");
            assert!((m2 - e2).abs() < 1e-10 * e2, "alpha={alpha}: E[U^2]={m2}");
        }
    }

    #[test]
    fn gamma_rule_integrates_exponential_tilt() {
        // E[e^{-cU}] = (1+c)^{-(alpha+1)} for U ~ Gamma(alpha+1, 1)
        for &(alpha, c) in &[(0.0, 0.5), (2.0, 1.0), (9.0, 0.25)] {
            let rule = gauss_gamma(alpha, 96);
            let got: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| w * (-c * x).exp())
                .sum();
            let expect = (1.0 + c).powf(-(alpha + 1.0));
            assert!(
                (got - expect).abs() < 1e-10 * expect,
                "alpha={alpha} c={c}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn legendre_rule_exact_on_polynomials() {
        let rule = gauss_legendre(16);
        let sum: f64 = rule.weights.iter().sum();
        assert!((sum - 2.0).abs() < 1e-13);
        // integral of x^k over [-1,1]
        for k in 0..31usize {
            let got: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| w * x.powi(k as i32))
                .sum();
            let expect = if k % 2 == 1 {
                0.0
            } else {
                2.0 / (k as f64 + 1.0)
            };
            assert!((got - expect).abs() < 1e-12, "k={k}: {got} vs {expect}");
        }
    }

    #[test]
    fn cache_returns_same_rule() {
        let r1 = gauss_gamma(3.0, 64);
        let r2 = gauss_gamma(3.0, 64);
        assert!(Arc::ptr_eq(&r1, &r2));
    }
}
