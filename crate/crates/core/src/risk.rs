//! Post-hoc risk evaluation: the data-dependent alpha* search, empirical
//! risk over Monte Carlo trials, and the exact asymptotic type-I error
//! formulas.
//!
//! The post-hoc risk of an interval family is E[sup_{alpha} 1{theta not in
//! H(alpha)} / alpha]. For a nested family the supremum is 1/alpha* with
//! alpha* = inf{alpha : theta excluded}, so each trial reduces to a binary
//! search for alpha*.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervals::{CiMethod, Interval};
use crate::sim::Generator;
use crate::special::std_normal_sf;
use crate::summary::SampleSummary;

/// Search window and tolerance for the alpha* binary search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaSearchConfig {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub tol: f64,
}

impl Default for AlphaSearchConfig {
    fn default() -> Self {
        AlphaSearchConfig { alpha_min: 1e-5, alpha_max: 500.0, tol: 1e-5 }
    }
}

impl AlphaSearchConfig {
    fn validate(&self) -> Result<()> {
        if !(self.alpha_min > 0.0 && self.alpha_min < self.alpha_max && self.tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "alpha_search",
                value: self.alpha_min,
                constraint: "requires 0 < alpha_min < alpha_max and tol > 0",
            });
        }
        Ok(())
    }
}

/// Result of one alpha* search: the reported level (midpoint of the final
/// bracket) and the bracket width actually achieved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaStar {
    pub alpha: f64,
    pub bracket_width: f64,
}

/// Smallest alpha in [alpha_min, alpha_max] at which `ci_fn` excludes
/// `theta0`, to tolerance `tol`; `None` when theta0 is still covered at
/// alpha_max. Requires a nested family (the rejection region is an up-set in
/// alpha); a rejection observed at alpha_min without one at alpha_max is
/// reported as `non-nested-family`.
pub fn alpha_star<F: Fn(f64) -> Interval>(
    ci_fn: F,
    theta0: f64,
    cfg: &AlphaSearchConfig,
) -> Result<Option<AlphaStar>> {
    cfg.validate()?;
    let rejected = |alpha: f64| !ci_fn(alpha).contains(theta0);
    if rejected(cfg.alpha_min) {
        if !rejected(cfg.alpha_max) {
            return Err(Error::NonNestedFamily {
                alpha_lo: cfg.alpha_min,
                alpha_hi: cfg.alpha_max,
            });
        }
        return Ok(Some(AlphaStar { alpha: cfg.alpha_min, bracket_width: 0.0 }));
    }
    if !rejected(cfg.alpha_max) {
        return Ok(None);
    }
    let mut lo = cfg.alpha_min; // covered
    let mut hi = cfg.alpha_max; // rejected
    while hi - lo > cfg.tol {
        let mid = 0.5 * (lo + hi);
        if rejected(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(AlphaStar { alpha: 0.5 * (lo + hi), bracket_width: hi - lo }))
}

/// Which alpha range the per-trial supremum is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// alpha restricted to (0, 1]; an uncontested null contributes zero.
    Practical,
    /// alpha up to alpha_max, forcing rejection wherever possible.
    Theoretical,
}

/// Aggregated empirical post-hoc risk for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub method: String,
    pub practical_risk: f64,
    pub theoretical_risk: f64,
    pub practical_se: f64,
    pub theoretical_se: f64,
    pub n_trials: u64,
    /// Per-trial alpha* values in the requested regime; None = no rejection.
    pub alpha_stars: Vec<Option<f64>>,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo estimate of the post-hoc risk of `method` under H0:
/// theta = theta_true, with data drawn from `generator` substreams.
///
/// Each trial runs the alpha* search in both regimes; the report carries
/// both risks (practical <= theoretical by construction) and the per-trial
/// alpha* values of the requested regime. Trials are independent substreams
/// of the generator seed, so the report is deterministic for a given seed
/// and thread count does not matter.
pub fn empirical_risk(
    method: &CiMethod,
    generator: &Generator,
    theta_true: f64,
    n: u64,
    trials: u64,
    cfg: &AlphaSearchConfig,
    regime: Regime,
) -> Result<RiskReport> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter {
            name: "trials",
            value: 0.0,
            constraint: "requires trials >= 1",
        });
    }
    let practical_cfg =
        AlphaSearchConfig { alpha_max: cfg.alpha_max.min(1.0), ..*cfg };
    let per_trial: Vec<(Option<AlphaStar>, Option<AlphaStar>)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let data = generator.substream(trial).draw(n as usize);
            let summary = SampleSummary::summarize(data);
            let ci = |alpha: f64| method_interval_total(method, &summary, alpha);
            let theo = alpha_star(ci, theta_true, cfg)?;
            let prac = alpha_star(ci, theta_true, &practical_cfg)?;
            Ok((prac, theo))
        })
        .collect::<Result<_>>()?;

    let ratios = |pick: &dyn Fn(&(Option<AlphaStar>, Option<AlphaStar>)) -> Option<AlphaStar>| {
        per_trial.iter().map(|t| pick(t).map_or(0.0, |a| 1.0 / a.alpha)).collect::<Vec<f64>>()
    };
    let practical_ratios = ratios(&|t| t.0);
    let theoretical_ratios = ratios(&|t| t.1);
    let (practical_risk, practical_se) = mean_and_se(&practical_ratios);
    let (theoretical_risk, theoretical_se) = mean_and_se(&theoretical_ratios);
    let alpha_stars = per_trial
        .iter()
        .map(|t| match regime {
            Regime::Practical => t.0.map(|a| a.alpha),
            Regime::Theoretical => t.1.map(|a| a.alpha),
        })
        .collect();
    Ok(RiskReport {
        method: method.name().to_string(),
        practical_risk,
        theoretical_risk,
        practical_se,
        theoretical_se,
        n_trials: trials,
        alpha_stars,
    })
}

/// Total version of the method dispatch used inside the search loop: the
/// Wald baseline degenerates to the point {mean} as alpha -> 1, so levels
/// alpha >= 1 reject almost surely; other domain errors cannot occur for
/// n >= 2 and are surfaced as panics.
fn method_interval_total(method: &CiMethod, summary: &SampleSummary, alpha: f64) -> Interval {
    if matches!(method, CiMethod::Wald) && alpha >= 1.0 {
        let m = summary.mean();
        return Interval::bounded(m, m);
    }
    method
        .interval(summary, alpha)
        .unwrap_or_else(|e| panic!("{} interval failed at alpha={alpha}: {e}", method.name()))
}

/// Exact asymptotic type-I error of the two-sided single-lambda CI:
/// 2 (1 - Phi(log(2/alpha)/lambda + lambda/2)).
pub fn type1_iwr(alpha: f64, lambda: f64) -> Result<f64> {
    validate_unit_alpha(alpha)?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            constraint: "requires lambda > 0",
        });
    }
    Ok(2.0 * std_normal_sf((2.0 / alpha).ln() / lambda + lambda / 2.0))
}

/// Exact asymptotic type-I error of the truncated-Gaussian mixture CI:
/// 2 (1 - Phi(y*_alpha)).
pub fn type1_mix_iwr(alpha: f64, params: &crate::evalues::MixParams) -> Result<f64> {
    validate_unit_alpha(alpha)?;
    let y_star = crate::intervals::solve_y_star(alpha, params)?;
    Ok(2.0 * std_normal_sf(y_star))
}

/// Exact asymptotic type-I error of the regularized CI:
/// 2 (1 - Phi((1 + eta)(log(2/alpha)/lambda + lambda/2))).
pub fn type1_reg(alpha: f64, lambda: f64, eta: f64) -> Result<f64> {
    validate_unit_alpha(alpha)?;
    if !(lambda > 0.0 && eta >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "lambda/eta",
            value: lambda,
            constraint: "requires lambda > 0 and eta >= 0",
        });
    }
    Ok(2.0 * std_normal_sf((1.0 + eta) * ((2.0 / alpha).ln() / lambda + lambda / 2.0)))
}

/// Asymptotic type-I error of the Gaussian-mixture supermartingale CI. The
/// width shrinks at sqrt(log n / n), slower than the sampling error, so the
/// limit is exactly zero; finite-sample miscoverage is positive but decays
/// to zero in n.
pub fn type1_rws() -> f64 {
    0.0
}

fn validate_unit_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            constraint: "requires alpha in (0,1)",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalues::MixParams;
    use crate::intervals::ci_iwr;
    use crate::sim::{Family, Generator};

    fn fixture() -> SampleSummary {
        SampleSummary::summarize((0..200).map(|i| ((i * 53 % 211) as f64 / 211.0 - 0.5) * 2.0))
    }

    #[test]
    fn alpha_star_floor_and_none() {
        let s = fixture();
        let cfg = AlphaSearchConfig::default();
        // theta0 far outside: rejected even at alpha_min
        let far = alpha_star(|a| ci_iwr(&s, a, 2.0).unwrap(), 1e6, &cfg).unwrap().unwrap();
        assert_eq!(far.alpha, cfg.alpha_min);
        // theta0 at the center with the search capped at 1: never rejected
        let prac = AlphaSearchConfig { alpha_max: 1.0, ..cfg };
        let center = alpha_star(|a| ci_iwr(&s, a, 2.0).unwrap(), s.mean(), &prac).unwrap();
        assert!(center.is_none());
    }

    #[test]
    fn alpha_star_matches_grid_supremum() {
        let s = fixture();
        let cfg = AlphaSearchConfig::default();
        let mix = MixParams { r: 20.0, kappa: 1.0 };
        let methods = [
            CiMethod::Iwr { lambda: 2.0 },
            CiMethod::MixIwr(mix),
            CiMethod::Rws(crate::evalues::RwsParams { rho: 2.0, delta: 1.0, c: 100.0 }),
        ];
        for m in &methods {
            for theta0 in [0.05, 0.3, 1.2] {
                let star = alpha_star(|a| m.interval(&s, a).unwrap(), theta0, &cfg)
                    .unwrap()
                    .expect("these theta0 are rejected within the window");
                // supremum of 1{rejected}/alpha on a 1e4-point log grid is
                // attained at the smallest rejecting grid point
                let ratio = (cfg.alpha_max / cfg.alpha_min).ln() / 9999.0;
                let grid_first = (0..10_000)
                    .map(|i| cfg.alpha_min * (ratio * i as f64).exp())
                    .find(|&alpha| !m.interval(&s, alpha).unwrap().contains(theta0))
                    .expect("grid must reject too");
                // agreement within one grid step plus the search tolerance
                let tol = grid_first * ratio.exp_m1() + cfg.tol;
                assert!(
                    (star.alpha - grid_first).abs() <= tol,
                    "{} theta0={theta0}: {} vs {grid_first}",
                    m.name(),
                    star.alpha
                );
            }
        }
    }

    #[test]
    fn alpha_star_detects_non_nested_family() {
        // pathological family: rejects only small alpha
        let cfg = AlphaSearchConfig::default();
        let weird = |alpha: f64| {
            if alpha < 1.0 {
                Interval::Empty
            } else {
                Interval::RealLine
            }
        };
        let err = alpha_star(weird, 0.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonNestedFamily { .. }));
    }

    #[test]
    fn empirical_risk_practical_below_theoretical() {
        let gen = Generator { family: Family::Gaussian { mean: 0.0, sd: 2.0 }, seed: 7 };
        let report = empirical_risk(
            &CiMethod::MixIwr(MixParams { r: 20.0, kappa: 1.0 }),
            &gen,
            0.0,
            200,
            64,
            &AlphaSearchConfig::default(),
            Regime::Theoretical,
        )
        .unwrap();
        assert!(report.practical_risk <= report.theoretical_risk);
        assert_eq!(report.alpha_stars.len(), 64);
        // the theoretical search always rejects for this family
        assert!(report.alpha_stars.iter().all(|a| a.is_some()));
    }

    #[test]
    fn type1_formulas() {
        // anchored lambda keeps the error below alpha
        for alpha in [0.01, 0.05, 0.1, 0.3, 0.7] {
            let lambda = (2.0 * (2.0f64 / alpha).ln()).sqrt();
            let e = type1_iwr(alpha, lambda).unwrap();
            assert!(e < alpha, "alpha={alpha}: {e}");
        }
        // increasing in alpha at fixed lambda
        let mut prev = 0.0;
        for i in 1..100 {
            let alpha = i as f64 / 100.0;
            let e = type1_iwr(alpha, 2.0).unwrap();
            assert!(e > prev);
            prev = e;
        }
        // eta = 0 reduces reg to iwr; error decreasing in eta
        let a = type1_reg(0.05, 2.0, 0.0).unwrap();
        assert!((a - type1_iwr(0.05, 2.0).unwrap()).abs() < 1e-15);
        assert!(type1_reg(0.05, 2.0, 0.5).unwrap() < a);
        // mix error is monotone in alpha
        let p = MixParams { r: 20.0, kappa: 1.0 };
        assert!(type1_mix_iwr(0.01, &p).unwrap() < type1_mix_iwr(0.1, &p).unwrap());
        assert_eq!(type1_rws(), 0.0);
        // deterministic and pure
        assert_eq!(type1_iwr(0.05, 2.0).unwrap(), type1_iwr(0.05, 2.0).unwrap());
        assert!(type1_iwr(1.0, 2.0).is_err());
    }

    #[test]
    fn risk_identity_at_e_value_level() {
        // sup_alpha 1{E >= 1/alpha}/alpha = E, attained at alpha = 1/E
        let mut state = 99u64;
        for _ in 0..1000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let e = ((state >> 11) as f64 / (1u64 << 53) as f64) * 50.0 + 1e-3;
            let mut sup = 0.0f64;
            // grid that includes alpha = 1/e, where the supremum is attained
            // (nudged one ulp up so fp double-rounding cannot drop the point)
            let mut grid: Vec<f64> = (1..200).map(|i| i as f64 * 0.05).collect();
            grid.push((1.0 / e).next_up());
            for alpha in grid {
                if e >= 1.0 / alpha {
                    sup = sup.max(1.0 / alpha);
                }
            }
            assert!((sup - e).abs() <= e * 1e-15, "sup {sup} vs e {e}");
        }
    }
}
