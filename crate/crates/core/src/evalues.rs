//! Asymptotic e-variables for the mean, their truncated-Gaussian mixtures,
//! and the exact supermartingale used as a Monte Carlo oracle.
//!
//! All are deterministic functions of a [`SampleSummary`] (or an ordered
//! stream for the self-normalized variant), the hypothesized mean `theta`,
//! and their tuning parameters. Internally everything runs in log space;
//! values are exponentiated only at the API boundary and saturate to `+inf`
//! past the floating-point maximum.
//!
//! Degenerate samples: whenever a self-normalizing denominator is zero with
//! S_n(theta) = 0 (an all-constant sample evaluated at its own value), the
//! ratio-based e-variables return the neutral value 1. A zero denominator
//! with S_n(theta) != 0 cannot occur (Cauchy-Schwarz) and is kept as a
//! defensive `degenerate-sample` error. The regularized family instead
//! reports `degenerate-sample` outright, since its denominator vanishes only
//! at that same all-constant corner.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ln_normal_sf, std_normal_cdf};
use crate::summary::SampleSummary;

const LN_2PI: f64 = 1.8378770664093454835606594728112353_f64;

/// Parameters of the single-lambda e-variable exp(lambda S/V - lambda^2/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IwrParams {
    pub lambda: f64,
}

/// Truncated-Gaussian mixture: truncation radius `r` and mixing sd `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixParams {
    pub r: f64,
    pub kappa: f64,
}

impl MixParams {
    /// u = (kappa^2 + 1) / (2 kappa^2), the second kernel argument.
    pub fn kernel_u(&self) -> f64 {
        (self.kappa * self.kappa + 1.0) / (2.0 * self.kappa * self.kappa)
    }

    /// Normalizing constant Z_{R,kappa} = kappa sqrt(2 pi) (Phi(R/k) - Phi(-R/k)).
    pub fn ln_z(&self) -> f64 {
        let t = self.r / self.kappa;
        self.kappa.ln() + 0.5 * LN_2PI + (std_normal_cdf(t) - std_normal_cdf(-t)).ln()
    }

    fn validate(&self) -> Result<()> {
        validate_positive("r", self.r)?;
        validate_positive("kappa", self.kappa)
    }
}

/// Gaussian-mixture truncated supermartingale parameters: mixture variance
/// `rho`, moment surplus `delta`, truncation constant `c`. The remaining
/// knobs are fixed at epsilon_n = 1/log(n) and gamma = 0.49, which makes the
/// truncation level c * n^(0.24 delta).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RwsParams {
    pub rho: f64,
    pub delta: f64,
    pub c: f64,
}

impl RwsParams {
    /// Truncation level c * n^(0.24 delta) in log space.
    pub fn ln_truncation(&self, n: u64) -> f64 {
        self.c.ln() + 0.24 * self.delta * (n as f64).ln()
    }

    fn validate(&self) -> Result<()> {
        validate_positive("rho", self.rho)?;
        validate_positive("delta", self.delta)?;
        validate_positive("c", self.c)
    }
}

/// Regularized e-variable parameters: exp(lambda S / (sqrt(n) sigma_hat + eta V) - lambda^2/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegParams {
    pub lambda: f64,
    pub eta: f64,
}

/// Predictable lambda schedule lambda_i = c / i^p for the self-normalized
/// e-variable. Requires p > 1/2 so that sum lambda_i^2 < infinity.
///
/// `start` is the first index that places a bet (lambda_i = 0 before it).
/// The default 1 bets immediately; note that the first two bets then carry
/// no variance penalty (sigma_hat is 0 until two observations exist), which
/// measurably inflates the expectation of the e-variable. Holding the bet
/// until a variance estimate exists (start = 3) restores a mean near one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnSchedule {
    pub c: f64,
    pub p: f64,
    #[serde(default = "default_sn_start")]
    pub start: u64,
}

fn default_sn_start() -> u64 {
    1
}

impl Default for SnSchedule {
    fn default() -> Self {
        SnSchedule { c: 1.0, p: 1.0, start: 1 }
    }
}

impl SnSchedule {
    pub fn lambda(&self, i: u64) -> f64 {
        if i < self.start {
            0.0
        } else {
            self.c / (i as f64).powf(self.p)
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.p > 0.5) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: self.p,
                constraint: "requires p > 1/2 for a square-summable schedule",
            });
        }
        if !self.c.is_finite() || self.c < 0.0 {
            return Err(Error::InvalidParameter {
                name: "c",
                value: self.c,
                constraint: "requires finite c >= 0",
            });
        }
        if self.start == 0 {
            return Err(Error::InvalidParameter {
                name: "start",
                value: 0.0,
                constraint: "requires start >= 1",
            });
        }
        Ok(())
    }
}

fn validate_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, constraint: "requires a finite value > 0" })
    }
}

fn validate_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, constraint: "requires a finite value" })
    }
}

/// exp(lambda S_n(theta)/V_n(theta) - lambda^2/2).
pub fn e_iwr(summary: &SampleSummary, theta: f64, params: &IwrParams) -> Result<f64> {
    validate_finite("lambda", params.lambda)?;
    let ratio = summary.theta_stats(theta)?.ratio()?;
    match ratio {
        None => Ok(1.0),
        Some(y) => Ok((params.lambda * y - 0.5 * params.lambda * params.lambda).exp()),
    }
}

/// The truncated-Gaussian mixture kernel
/// I_R(y, u) = sqrt(pi/u) exp(y^2/4u) (Phi(g1) - Phi(g2)),
/// g1 = R sqrt(2u) - y/sqrt(2u), g2 = -(R sqrt(2u) + y/sqrt(2u));
/// equivalently the integral of exp(lambda y - lambda^2 u) over [-R, R].
pub fn i_r_kernel(y: f64, u: f64, r: f64) -> Result<f64> {
    Ok(ln_i_r(y, u, r)?.exp())
}

/// log I_R(y, u). Symmetric and strictly increasing in |y|; stable far past
/// the range where the closed form overflows or the Phi difference
/// underflows.
pub fn ln_i_r(y: f64, u: f64, r: f64) -> Result<f64> {
    validate_positive("u", u)?;
    validate_positive("r", r)?;
    validate_finite("y", y)?;
    let root2u = (2.0 * u).sqrt();
    let t = y.abs() / root2u;
    let c = r * root2u;
    // I = sqrt(pi/u) e^{t^2/2} (Q(t - c) - Q(t + c)) with Q the normal sf
    // and t^2/2 = y^2/(4u).
    let a = t - c;
    let b = t + c;
    let base = 0.5 * (std::f64::consts::PI / u).ln() + 0.5 * t * t;
    if a < 8.0 {
        // Q(a) is at least ~6e-16 here, so the direct difference is safe.
        let diff = crate::special::std_normal_sf(a) - crate::special::std_normal_sf(b);
        Ok(base + diff.ln())
    } else {
        let la = ln_normal_sf(a);
        let lb = ln_normal_sf(b);
        Ok(base + la + (-((lb - la).exp())).ln_1p())
    }
}

fn ln_e_mix_from_ratio(ratio: Option<f64>, params: &MixParams) -> Result<f64> {
    params.validate()?;
    let y = ratio.unwrap_or(0.0);
    Ok(ln_i_r(y, params.kernel_u(), params.r)? - params.ln_z())
}

/// Mixture of the IWR e-variable over a Gaussian truncated to [-R, R]:
/// Z^{-1} I_R(S/V, (kappa^2+1)/(2 kappa^2)).
pub fn e_mix_iwr(summary: &SampleSummary, theta: f64, params: &MixParams) -> Result<f64> {
    let ratio = summary.theta_stats(theta)?.ratio()?;
    if ratio.is_none() {
        // all-constant sample at its own value: neutral evidence
        return Ok(1.0);
    }
    Ok(ln_e_mix_from_ratio(ratio, params)?.exp())
}

fn rws_u_hat(summary: &SampleSummary) -> Result<f64> {
    let n = summary.n();
    if n < 2 {
        return Err(Error::InsufficientSamples { required: 2, got: n });
    }
    let nf = n as f64;
    Ok(nf * (summary.biased_var().unwrap() + 1.0 / nf.ln()))
}

/// Truncated Gaussian-mixture supermartingale
/// min( exp(rho S^2 / (2 rho u_hat + 2)) / sqrt(rho u_hat + 1), c n^{0.24 delta} ),
/// with u_hat = n (s_n^2 + 1/log n).
pub fn e_rws(summary: &SampleSummary, theta: f64, params: &RwsParams) -> Result<f64> {
    params.validate()?;
    let u_hat = rws_u_hat(summary)?;
    let s = summary.theta_stats(theta)?.s;
    let ln_g = params.rho * s * s / (2.0 * params.rho * u_hat + 2.0)
        - 0.5 * (params.rho * u_hat + 1.0).ln();
    Ok(ln_g.min(params.ln_truncation(summary.n())).exp())
}

/// Discrete-mixture truncated supermartingale over a caller-supplied
/// weighted lambda grid (any distribution F, including point masses):
/// min( sum_j w_j exp(lambda_j S - n (s_n^2 + eps) lambda_j^2 / 2), trunc ).
pub fn e_rws_general(
    summary: &SampleSummary,
    theta: f64,
    grid: &[(f64, f64)],
    eps: f64,
    trunc: f64,
) -> Result<f64> {
    validate_positive("eps", eps)?;
    validate_positive("trunc", trunc)?;
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid".to_string()));
    }
    let mut total = 0.0;
    for &(lambda, w) in grid {
        if !lambda.is_finite() || !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidGrid(format!("bad entry (lambda={lambda}, w={w})")));
        }
        total += w;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidGrid(format!("weights sum to {total}, expected 1")));
    }
    let stats = summary.theta_stats(theta)?;
    let nf = summary.n() as f64;
    let u = nf * (summary.biased_var().unwrap() + eps);
    // log-sum-exp over the grid
    let mut max_term = f64::NEG_INFINITY;
    let terms: Vec<f64> = grid
        .iter()
        .filter(|&&(_, w)| w > 0.0)
        .map(|&(lambda, w)| {
            let t = w.ln() + lambda * stats.s - 0.5 * u * lambda * lambda;
            if t > max_term {
                max_term = t;
            }
            t
        })
        .collect();
    if terms.is_empty() || max_term == f64::NEG_INFINITY {
        return Ok(0.0_f64.min(trunc));
    }
    let sum: f64 = terms.iter().map(|t| (t - max_term).exp()).sum();
    let ln_value = max_term + sum.ln();
    Ok(ln_value.min(trunc.ln()).exp())
}

fn reg_denominator(summary: &SampleSummary, v: f64, eta: f64) -> Result<f64> {
    let n = summary.n();
    if n < 2 {
        return Err(Error::InsufficientSamples { required: 2, got: n });
    }
    let denom = (n as f64).sqrt() * summary.unbiased_sd().unwrap() + eta * v;
    if denom > 0.0 {
        Ok(denom)
    } else {
        Err(Error::DegenerateSample)
    }
}

/// Regularized e-variable exp(lambda S / (sqrt(n) sigma_hat + eta V) - lambda^2/2).
pub fn e_reg(summary: &SampleSummary, theta: f64, params: &RegParams) -> Result<f64> {
    validate_finite("lambda", params.lambda)?;
    validate_positive("eta", params.eta)?;
    let stats = summary.theta_stats(theta)?;
    let denom = reg_denominator(summary, stats.v, params.eta)?;
    let y = stats.s / denom;
    Ok((params.lambda * y - 0.5 * params.lambda * params.lambda).exp())
}

/// Truncated-Gaussian mixture of the regularized e-variable:
/// Z^{-1} I_R(S / (sqrt(n) sigma_hat + eta V), (kappa^2+1)/(2 kappa^2)).
pub fn e_mix_reg(summary: &SampleSummary, theta: f64, params: &MixParams, eta: f64) -> Result<f64> {
    validate_positive("eta", eta)?;
    let stats = summary.theta_stats(theta)?;
    let denom = reg_denominator(summary, stats.v, eta)?;
    Ok(ln_e_mix_from_ratio(Some(stats.s / denom), params)?.exp())
}

/// Self-normalized e-variable over an ordered stream:
/// exp( sum lambda_i (X_i - theta) - (1/6) sum lambda_i^2 [(X_i - theta)^2 + 2 sigma_hat_{i-1}^2] ),
/// where sigma_hat_{i-1}^2 is the unbiased variance of the first i-1 points
/// (0 for i <= 2).
pub fn e_sn(stream: &[f64], theta: f64, schedule: &SnSchedule) -> Result<f64> {
    schedule.validate()?;
    if stream.is_empty() {
        return Err(Error::InsufficientSamples { required: 1, got: 0 });
    }
    let mut running = SampleSummary::empty();
    let mut log_e = 0.0;
    for (idx, &x) in stream.iter().enumerate() {
        let lambda = schedule.lambda(idx as u64 + 1);
        let sigma2_prev = running.unbiased_var().unwrap_or(0.0);
        let centered = x - theta;
        log_e += lambda * centered
            - lambda * lambda / 6.0 * (centered * centered + 2.0 * sigma2_prev);
        running = running.update(x);
    }
    Ok(log_e.exp())
}

/// Exact nonnegative supermartingale exp(lambda sum(X_i - theta) - lambda^2 U/2)
/// with U = (1/3) sum[(X_i - theta)^2 + 2 sigma^2]. Requires the true
/// variance, so it serves as a test oracle rather than a usable statistic.
pub fn e_star_oracle(stream: &[f64], theta: f64, lambda: f64, sigma2: f64) -> Result<f64> {
    validate_finite("lambda", lambda)?;
    validate_positive("sigma2", sigma2)?;
    let mut s = 0.0;
    let mut u = 0.0;
    for &x in stream {
        let centered = x - theta;
        s += centered;
        u += (centered * centered + 2.0 * sigma2) / 3.0;
    }
    Ok((lambda * s - 0.5 * lambda * lambda * u).exp())
}

/// p-value from an e-value: 1/e, with e = 0 mapping to +inf.
pub fn e_to_pvalue(e: f64) -> f64 {
    if e == 0.0 {
        f64::INFINITY
    } else {
        1.0 / e
    }
}

/// Tagged selection of one e-variable family with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum EVariableSpec {
    Iwr(IwrParams),
    MixIwr(MixParams),
    Rws(RwsParams),
    RwsGeneral { grid: Vec<(f64, f64)>, eps: f64, trunc: f64 },
    Reg(RegParams),
    MixReg { mix: MixParams, eta: f64 },
    Sn(SnSchedule),
}

impl EVariableSpec {
    /// The self-normalized family consumes an ordered stream; the rest are
    /// functions of the summary alone.
    pub fn needs_stream(&self) -> bool {
        matches!(self, EVariableSpec::Sn(_))
    }

    pub fn evaluate(
        &self,
        summary: &SampleSummary,
        stream: Option<&[f64]>,
        theta: f64,
    ) -> Result<f64> {
        match self {
            EVariableSpec::Iwr(p) => e_iwr(summary, theta, p),
            EVariableSpec::MixIwr(p) => e_mix_iwr(summary, theta, p),
            EVariableSpec::Rws(p) => e_rws(summary, theta, p),
            EVariableSpec::RwsGeneral { grid, eps, trunc } => {
                e_rws_general(summary, theta, grid, *eps, *trunc)
            }
            EVariableSpec::Reg(p) => e_reg(summary, theta, p),
            EVariableSpec::MixReg { mix, eta } => e_mix_reg(summary, theta, mix, *eta),
            EVariableSpec::Sn(s) => {
                let stream = stream.ok_or(Error::InsufficientSamples { required: 1, got: 0 })?;
                e_sn(stream, theta, s)
            }
        }
    }
}
