//! Confidence intervals obtained by thresholding the e-variables, the
//! running confidence sequence, the Wald baseline, and a generic numeric
//! e-value inverter.
//!
//! Each closed form is the exact inversion of its e-variable's rejection
//! rule {theta : E(theta) < K/alpha}, so three set shapes arise:
//!
//! * `Bounded` — the ordinary case;
//! * `RealLine` — the sample-size or truncation condition fails and nothing
//!   can be rejected (the guarantee is vacuous);
//! * `Empty` — alpha is so large (always > 1) that the threshold K/alpha
//!   lies at or below the e-variable's minimum and every theta is rejected.
//!
//! Keeping the empty case explicit makes the family nested in alpha over the
//! whole range alpha > 0, which the data-dependent alpha* search relies on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evalues::{ln_i_r, MixParams, RwsParams};
use crate::special::{find_root_increasing, std_normal_quantile, RootBracket};
use crate::summary::SampleSummary;

/// A candidate-parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Interval {
    Bounded { lo: f64, hi: f64 },
    RealLine,
    Empty,
}

impl Interval {
    pub fn bounded(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Interval::Bounded { lo, hi }
    }

    pub fn contains(&self, theta: f64) -> bool {
        match *self {
            Interval::Bounded { lo, hi } => lo <= theta && theta <= hi,
            Interval::RealLine => true,
            Interval::Empty => false,
        }
    }

    /// Total width; the real line reports +inf and the empty set 0.
    pub fn width(&self) -> f64 {
        match *self {
            Interval::Bounded { lo, hi } => hi - lo,
            Interval::RealLine => f64::INFINITY,
            Interval::Empty => 0.0,
        }
    }

    pub fn is_vacuous(&self) -> bool {
        matches!(self, Interval::RealLine)
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Interval::Empty)
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        match (*self, *other) {
            (Interval::Empty, _) => true,
            (_, Interval::RealLine) => true,
            (Interval::RealLine, _) => false,
            (_, Interval::Empty) => false,
            (Interval::Bounded { lo: a, hi: b }, Interval::Bounded { lo: c, hi: d }) => {
                c <= a && b <= d
            }
        }
    }

    pub fn endpoints(&self) -> Option<(f64, f64)> {
        match *self {
            Interval::Bounded { lo, hi } => Some((lo, hi)),
            _ => None,
        }
    }
}

fn validate_alpha_positive(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            constraint: "requires alpha > 0",
        })
    }
}

fn validate_lambda_positive(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            constraint: "requires lambda > 0",
        })
    }
}

/// Wald CI mean +/- z_{1-alpha/2} sigma_hat / sqrt(n). The baseline: it is
/// not post-hoc valid and rejects alpha outside (0,1).
pub fn ci_wald(summary: &SampleSummary, alpha: f64) -> Result<Interval> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            constraint: "wald requires alpha in (0,1)",
        });
    }
    let n = summary.n();
    if n < 2 {
        return Err(Error::InsufficientSamples { required: 2, got: n });
    }
    let z = std_normal_quantile(1.0 - alpha / 2.0)?;
    let hw = z * summary.unbiased_sd().unwrap() / (n as f64).sqrt();
    Ok(Interval::bounded(summary.mean() - hw, summary.mean() + hw))
}

/// Ex ante anchor lambda_0 = sqrt(2 log(2/alpha_0)), the width-minimizing
/// lambda for the anchor level.
pub fn anchor_lambda(alpha0: f64) -> Result<f64> {
    if !(alpha0 > 0.0 && alpha0 < 2.0) {
        return Err(Error::InvalidParameter {
            name: "alpha0",
            value: alpha0,
            constraint: "requires 0 < alpha0 < 2",
        });
    }
    Ok((2.0 * (2.0 / alpha0).ln()).sqrt())
}

/// Width ratio paid for anchoring at alpha_0 and reading off at alpha:
/// (sqrt(L/L0) + sqrt(L0/L)) / 2 with L = log(2/alpha), L0 = log(2/alpha_0).
pub fn anchor_ratio(alpha: f64, alpha0: f64) -> Result<f64> {
    for (name, a) in [("alpha", alpha), ("alpha0", alpha0)] {
        if !(a > 0.0 && a < 2.0) {
            return Err(Error::InvalidParameter {
                name,
                value: a,
                constraint: "requires 0 < value < 2",
            });
        }
    }
    let l = (2.0 / alpha).ln();
    let l0 = (2.0 / alpha0).ln();
    Ok(0.5 * ((l / l0).sqrt() + (l0 / l).sqrt()))
}

/// A_{n,alpha}(lambda) = (log(2/alpha) + lambda^2/2) / (lambda sqrt(n)).
pub fn a_n_alpha(n: u64, alpha: f64, lambda: f64) -> f64 {
    ((2.0 / alpha).ln() + 0.5 * lambda * lambda) / (lambda * (n as f64).sqrt())
}

/// Two-sided CI from the e-variable pair at +/- lambda, thresholded at
/// 2/alpha: mean +/- A s_n / sqrt(1 - A^2) when n > g(lambda,alpha)^2.
pub fn ci_iwr(summary: &SampleSummary, alpha: f64, lambda: f64) -> Result<Interval> {
    validate_alpha_positive(alpha)?;
    validate_lambda_positive(lambda)?;
    let n = summary.n();
    if n == 0 {
        return Err(Error::EmptySummary);
    }
    if n == 1 {
        return Ok(Interval::RealLine);
    }
    let a = a_n_alpha(n, alpha, lambda);
    if a <= 0.0 {
        // threshold 2/alpha at or below the minimum exp(-lambda^2/2)
        return Ok(Interval::Empty);
    }
    if a >= 1.0 {
        return Ok(Interval::RealLine);
    }
    let hw = a * summary.biased_sd().unwrap() / (1.0 - a * a).sqrt();
    Ok(Interval::bounded(summary.mean() - hw, summary.mean() + hw))
}

/// Solve I_R(y, (kappa^2+1)/(2 kappa^2)) = Z_{R,kappa}/alpha for the unique
/// positive root, to 1e-9. Errors with `no-root` when the threshold does not
/// exceed the kernel minimum I_R(0, u).
pub fn solve_y_star(alpha: f64, params: &MixParams) -> Result<f64> {
    validate_alpha_positive(alpha)?;
    let u = params.kernel_u();
    let ln_target = params.ln_z() - alpha.ln();
    let ln_min = ln_i_r(0.0, u, params.r)?;
    if ln_min >= ln_target {
        return Err(Error::NoRoot { ln_target, ln_min });
    }
    let mut hi = 1.0;
    while ln_i_r(hi, u, params.r)? <= ln_target {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NoRoot { ln_target, ln_min });
        }
    }
    let bracket = RootBracket { lo: 0.0, hi, tol: 1e-9, max_iter: 200 };
    find_root_increasing(|y| ln_i_r(y, u, params.r).unwrap() - ln_target, &bracket)
}

/// Truncated-Gaussian mixture CI: mean +/- s_n y* / sqrt(n - y*^2) when
/// n > y*^2, otherwise the real line. When no y* root exists (alpha above
/// the kernel minimum's level, always alpha > 1) the inverted set is empty.
pub fn ci_mix_iwr(summary: &SampleSummary, alpha: f64, params: &MixParams) -> Result<Interval> {
    validate_alpha_positive(alpha)?;
    let n = summary.n();
    if n == 0 {
        return Err(Error::EmptySummary);
    }
    if n == 1 {
        return Ok(Interval::RealLine);
    }
    let y_star = match solve_y_star(alpha, params) {
        Ok(y) => y,
        Err(Error::NoRoot { .. }) => return Ok(Interval::Empty),
        Err(e) => return Err(e),
    };
    let nf = n as f64;
    if nf <= y_star * y_star {
        return Ok(Interval::RealLine);
    }
    let hw = summary.biased_sd().unwrap() * y_star / (nf - y_star * y_star).sqrt();
    Ok(Interval::bounded(summary.mean() - hw, summary.mean() + hw))
}

/// Gaussian-mixture supermartingale CI:
/// mean +/- sqrt((2 rho u_hat + 2)/(n^2 rho) log(sqrt(rho u_hat + 1)/alpha)),
/// u_hat = n (s_n^2 + 1/log n); the real line when the truncation level
/// c n^{0.24 delta} is below 1/alpha.
pub fn ci_rws(summary: &SampleSummary, alpha: f64, params: &RwsParams) -> Result<Interval> {
    validate_alpha_positive(alpha)?;
    let n = summary.n();
    if n == 0 {
        return Err(Error::EmptySummary);
    }
    if n == 1 {
        return Ok(Interval::RealLine);
    }
    let nf = n as f64;
    let u_hat = nf * (summary.biased_var().unwrap() + 1.0 / nf.ln());
    rws_interval(summary.mean(), nf, u_hat, alpha, params, params.ln_truncation(n))
}

fn rws_interval(
    mean: f64,
    nf: f64,
    u_hat: f64,
    alpha: f64,
    params: &RwsParams,
    ln_truncation: f64,
) -> Result<Interval> {
    if ln_truncation < -alpha.ln() {
        return Ok(Interval::RealLine);
    }
    let root = (params.rho * u_hat + 1.0).sqrt();
    if !(root / alpha > 1.0) {
        // threshold 1/alpha at or below the minimum 1/sqrt(rho u_hat + 1)
        return Ok(Interval::Empty);
    }
    let hw = ((2.0 * params.rho * u_hat + 2.0) / (nf * nf * params.rho) * (root / alpha).ln()).sqrt();
    Ok(Interval::bounded(mean - hw, mean + hw))
}

/// Regularized two-sided CI:
/// mean +/- A sigma_hat (1 + sqrt(B)) / (1 - A^2 eta^2),
/// B = 1 - (1 - A^2 eta^2)(1 - eta^2 (n-1)/n); the real line when
/// 1 - A^2 eta^2 <= 0.
pub fn ci_reg(summary: &SampleSummary, alpha: f64, lambda: f64, eta: f64) -> Result<Interval> {
    validate_alpha_positive(alpha)?;
    validate_lambda_positive(lambda)?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: eta,
            constraint: "requires eta > 0",
        });
    }
    let n = summary.n();
    if n == 0 {
        return Err(Error::EmptySummary);
    }
    if n == 1 {
        return Ok(Interval::RealLine);
    }
    let a = a_n_alpha(n, alpha, lambda);
    if a <= 0.0 {
        return Ok(Interval::Empty);
    }
    let gate = 1.0 - a * a * eta * eta;
    if gate <= 0.0 {
        return Ok(Interval::RealLine);
    }
    let nf = n as f64;
    let b = 1.0 - gate * (1.0 - eta * eta * (nf - 1.0) / nf);
    let hw = a * summary.unbiased_sd().unwrap() * (1.0 + b.max(0.0).sqrt()) / gate;
    Ok(Interval::bounded(summary.mean() - hw, summary.mean() + hw))
}

/// Mixture of the regularized e-variable (with the biased sample sd in the
/// denominator, as the closed form inverts):
/// mean +/- sqrt(n) s_n y* (1 + eta D) / (n - (eta y*)^2),
/// D = sqrt(1 + y*^2 (1 - eta^2)/n).
pub fn ci_mix_reg(
    summary: &SampleSummary,
    alpha: f64,
    params: &MixParams,
    eta: f64,
) -> Result<Interval> {
    validate_alpha_positive(alpha)?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: eta,
            constraint: "requires eta > 0",
        });
    }
    let n = summary.n();
    if n == 0 {
        return Err(Error::EmptySummary);
    }
    if n == 1 {
        return Ok(Interval::RealLine);
    }
    let y_star = match solve_y_star(alpha, params) {
        Ok(y) => y,
        Err(Error::NoRoot { .. }) => return Ok(Interval::Empty),
        Err(e) => return Err(e),
    };
    let nf = n as f64;
    let denom = nf - (eta * y_star) * (eta * y_star);
    if denom <= 0.0 {
        return Ok(Interval::RealLine);
    }
    let d = (1.0 + y_star * y_star * (1.0 - eta * eta) / nf).sqrt();
    let hw = nf.sqrt() * summary.biased_sd().unwrap() * y_star * (1.0 + eta * d) / denom;
    Ok(Interval::bounded(summary.mean() - hw, summary.mean() + hw))
}

/// Running state of the post-hoc confidence sequence: burn-in m, mixture
/// parameters, and the summary at the current index k >= m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfSeqHandle {
    m: u64,
    params: RwsParams,
    summary: SampleSummary,
}

/// A confidence-sequence interval plus the guarantee-range flag: the risk
/// bound of the sequence covers only alpha > f(m) = c m^{-0.24}, so levels
/// at or below f(m) are reported but marked out of range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsInterval {
    pub interval: Interval,
    pub out_of_range: bool,
}

impl ConfSeqHandle {
    /// Start a sequence from a summary with at least m >= 2 observations.
    pub fn new(m: u64, params: RwsParams, summary: SampleSummary) -> Result<Self> {
        if m < 2 {
            return Err(Error::InsufficientSamples { required: 2, got: m });
        }
        if summary.n() < m {
            return Err(Error::IndexBelowBurnIn { k: summary.n(), m });
        }
        Ok(ConfSeqHandle { m, params, summary })
    }

    /// Extend the sequence by one observation, producing a new handle.
    pub fn advance(self, x: f64) -> Self {
        ConfSeqHandle { summary: self.summary.update(x), ..self }
    }

    pub fn burn_in(&self) -> u64 {
        self.m
    }

    pub fn k(&self) -> u64 {
        self.summary.n()
    }

    pub fn summary(&self) -> &SampleSummary {
        &self.summary
    }

    /// Range growth function f(m) = c m^{-0.24}.
    pub fn range_growth(&self) -> f64 {
        self.params.c * (self.m as f64).powf(-0.24)
    }

    /// H_k^{(m)}(alpha): same shape as the fixed-n mixture CI but with the
    /// variance regularizer 1/log m and truncation c m^{0.24 delta} frozen
    /// at the burn-in.
    pub fn interval(&self, alpha: f64) -> Result<CsInterval> {
        validate_alpha_positive(alpha)?;
        let k = self.summary.n();
        if k < self.m {
            return Err(Error::IndexBelowBurnIn { k, m: self.m });
        }
        let kf = k as f64;
        let mf = self.m as f64;
        let u_hat = kf * (self.summary.biased_var().unwrap() + 1.0 / mf.ln());
        let ln_truncation = self.params.c.ln() + 0.24 * self.params.delta * mf.ln();
        let interval =
            rws_interval(self.summary.mean(), kf, u_hat, alpha, &self.params, ln_truncation)?;
        Ok(CsInterval { interval, out_of_range: alpha <= self.range_growth() })
    }
}

/// Controls for the numeric e-value inverter.
#[derive(Debug, Clone, Copy)]
pub struct InvertCfg {
    /// The e-variable's minimizer (the sample mean for every family here).
    pub center: f64,
    /// First bracket half-width; doubled until the threshold is crossed.
    pub initial_halfwidth: f64,
    /// Absolute tolerance on the endpoint location.
    pub tol: f64,
    /// Give up (vacuous interval) after this many doublings.
    pub max_expand: u32,
}

impl InvertCfg {
    pub fn new(center: f64, scale: f64) -> Self {
        InvertCfg {
            center,
            initial_halfwidth: scale.abs().max(1e-12),
            tol: 1e-9,
            max_expand: 200,
        }
    }
}

/// Invert {theta : e(theta) < K/alpha} for an e-function that is unimodal in
/// |theta - center| with its minimum at the center, by two bracketed root
/// searches. Returns `RealLine` when the e-function never reaches the
/// threshold (truncated families below 1/alpha), and an error when even the
/// center is rejected (empty set).
pub fn invert_evalue<F: Fn(f64) -> f64>(
    e_fn: F,
    alpha: f64,
    two_sided_k: u8,
    cfg: &InvertCfg,
) -> Result<Interval> {
    validate_alpha_positive(alpha)?;
    let threshold = two_sided_k as f64 / alpha;
    let ln_t = (two_sided_k as f64).ln() - alpha.ln();
    let e_center = e_fn(cfg.center);
    if e_center >= threshold {
        return Err(Error::MinimumExceedsThreshold { e_center, threshold });
    }
    let side = |dir: f64| -> Result<Option<f64>> {
        let g = |offset: f64| e_fn(cfg.center + dir * offset).ln() - ln_t;
        let mut hi = cfg.initial_halfwidth;
        let mut lo = 0.0;
        let mut crossed = false;
        for _ in 0..cfg.max_expand {
            if g(hi) >= 0.0 {
                crossed = true;
                break;
            }
            lo = hi;
            hi *= 2.0;
        }
        if !crossed {
            return Ok(None);
        }
        let bracket = RootBracket { lo, hi, tol: cfg.tol, max_iter: 400 };
        find_root_increasing(g, &bracket).map(Some)
    };
    let right = side(1.0)?;
    let left = side(-1.0)?;
    match (left, right) {
        (Some(l), Some(r)) => Ok(Interval::bounded(cfg.center - l, cfg.center + r)),
        // threshold never reached on some side: the set is unbounded there
        _ => Ok(Interval::RealLine),
    }
}

/// One named CI family with its parameters; the CLI and the experiment
/// drivers dispatch through this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum CiMethod {
    Wald,
    Iwr { lambda: f64 },
    MixIwr(MixParams),
    Rws(RwsParams),
    Reg { lambda: f64, eta: f64 },
    MixReg { mix: MixParams, eta: f64 },
}

impl CiMethod {
    pub fn name(&self) -> &'static str {
        match self {
            CiMethod::Wald => "wald",
            CiMethod::Iwr { .. } => "iwr",
            CiMethod::MixIwr(_) => "mix-iwr",
            CiMethod::Rws(_) => "rws",
            CiMethod::Reg { .. } => "reg",
            CiMethod::MixReg { .. } => "mix-reg",
        }
    }

    pub fn interval(&self, summary: &SampleSummary, alpha: f64) -> Result<Interval> {
        match self {
            CiMethod::Wald => ci_wald(summary, alpha),
            CiMethod::Iwr { lambda } => ci_iwr(summary, alpha, *lambda),
            CiMethod::MixIwr(p) => ci_mix_iwr(summary, alpha, p),
            CiMethod::Rws(p) => ci_rws(summary, alpha, p),
            CiMethod::Reg { lambda, eta } => ci_reg(summary, alpha, *lambda, *eta),
            CiMethod::MixReg { mix, eta } => ci_mix_reg(summary, alpha, mix, *eta),
        }
    }
}
