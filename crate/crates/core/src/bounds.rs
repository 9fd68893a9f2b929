//! Closed-form stability and generalization bounds for ℓp-regularized
//! single-layer GCNs trained by inexact proximal SGD.

use crate::error::{Error, Result};

/// `(B/λ)^{1/p}`: every regularized empirical risk minimizer lies in this
/// ℓ2 ball, and so does every SGD iterate.
pub fn minimizer_radius(b_bound: f64, lambda: f64, p: f64) -> f64 {
    (b_bound / lambda).powf(1.0 / p)
}

/// `C_{p,λ} = 28 / (p (p-1) λ_t) · (B/λ)^{(3-p)/p}`.
pub fn c_p_lambda(p: f64, lambda: f64, lambda_t: f64, b_bound: f64) -> f64 {
    28.0 / (p * (p - 1.0) * lambda_t) * (b_bound / lambda).powf((3.0 - p) / p)
}

fn ln_c_p_lambda(p: f64, lambda: f64, lambda_t: f64, b_bound: f64) -> f64 {
    28f64.ln() - (p * (p - 1.0) * lambda_t).ln() + (3.0 - p) / p * (b_bound / lambda).ln()
}

/// Inputs of the uniform stability bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub a_l: f64,
    pub a_sigma: f64,
    pub lambda_g_max: f64,
    pub g_e: f64,
    pub eta: f64,
    /// Training set size.
    pub n: usize,
    /// Number of SGD iterations.
    pub t: usize,
    pub p: f64,
    pub lambda: f64,
    pub lambda_t: f64,
    pub b_bound: f64,
    pub delta: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("a_l", self.a_l),
            ("a_sigma", self.a_sigma),
            ("lambda_G_max", self.lambda_g_max),
            ("g_e", self.g_e),
            ("eta", self.eta),
            ("lambda", self.lambda),
            ("lambda_t", self.lambda_t),
            ("B", self.b_bound),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::input(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.n == 0 || self.t == 0 {
            return Err(Error::input("n and T must be at least 1"));
        }
        if !(self.p > 1.0 && self.p <= 2.0) {
            return Err(Error::input(format!("p must lie in (1,2], got {}", self.p)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::input(format!("delta must lie in (0,1), got {}", self.delta)));
        }
        Ok(())
    }
}

/// Value of the stability bound. The bound grows geometrically in `T`, so it
/// is carried in log space and `value` saturates to `+∞` on overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityBound {
    pub value: f64,
    pub ln_value: f64,
    pub saturated: bool,
    pub c_p_lambda: f64,
    /// Geometric ratio `C_{p,λ} (1 + (a_σ² + a_ℓ) η g_e²)`.
    pub ratio: f64,
}

/// `ln Σ_{t=1}^T q^{t-1}` for `q > 0`, given `ln q`.
fn ln_geometric_sum(ln_q: f64, t: usize) -> f64 {
    let t_f = t as f64;
    if ln_q == 0.0 {
        return t_f.ln();
    }
    if ln_q > 0.0 {
        // (q^T - 1)/(q - 1) = q^{T-1} (1 - q^{-T}) / (1 - q^{-1})
        (t_f - 1.0) * ln_q + (-(-t_f * ln_q).exp_m1()).ln() - (-(-ln_q).exp_m1()).ln()
    } else {
        // (1 - q^T)/(1 - q)
        (-(t_f * ln_q).exp_m1()).ln() - (-ln_q.exp_m1()).ln()
    }
}

/// `β_n ≤ a_ℓ² a_σ² λ_G^max (η C g_e / n) Σ_{t=1}^T (C (1 + (a_σ² + a_ℓ) η g_e²))^{t-1}`.
pub fn stability_beta(inputs: &BoundInputs) -> Result<StabilityBound> {
    inputs.validate()?;
    let BoundInputs {
        a_l,
        a_sigma,
        lambda_g_max,
        g_e,
        eta,
        n,
        t,
        p,
        lambda,
        lambda_t,
        b_bound,
        ..
    } = *inputs;
    let ln_c = ln_c_p_lambda(p, lambda, lambda_t, b_bound);
    let ln_ratio = ln_c + ((a_sigma * a_sigma + a_l) * eta * g_e * g_e).ln_1p();
    let ln_prefactor = 2.0 * a_l.ln() + 2.0 * a_sigma.ln() + lambda_g_max.ln() + eta.ln() + ln_c
        + g_e.ln()
        - (n as f64).ln();
    let ln_value = ln_prefactor + ln_geometric_sum(ln_ratio, t);
    let value = ln_value.exp();
    Ok(StabilityBound {
        value,
        ln_value,
        saturated: value.is_infinite(),
        c_p_lambda: ln_c.exp(),
        ratio: ln_ratio.exp(),
    })
}

/// `2β_n + (4nβ_n + B) √(log(1/δ) / 2n)`.
pub fn generalization_bound(beta_n: f64, b_bound: f64, n: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::input(format!("delta must lie in (0,1), got {delta}")));
    }
    if n == 0 {
        return Err(Error::input("n must be at least 1"));
    }
    let n_f = n as f64;
    Ok(2.0 * beta_n + (4.0 * n_f * beta_n + b_bound) * ((1.0 / delta).ln() / (2.0 * n_f)).sqrt())
}

/// Slack in the strong convexity of `|θ|^p` on `[a, b]`:
/// `|a|^p + |b|^p - 2|(a+b)/2|^p - ¼ (b-a)² p (p-1) M^{p-2}` with
/// `M = max(|a|, |b|)`. Non-negative up to rounding.
pub fn check_strong_convexity(a: f64, b: f64, p: f64) -> f64 {
    let h = |x: f64| x.abs().powf(p);
    let lhs = h(a) + h(b) - 2.0 * h(0.5 * (a + b));
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        return lhs;
    }
    lhs - 0.25 * (b - a) * (b - a) * p * (p - 1.0) * m.powf(p - 2.0)
}
