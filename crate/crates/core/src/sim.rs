//! Seeded data generation and the experiment drivers that produce the risk
//! table, width curves, and anchor-ratio grid as CSV.
//!
//! Reproducibility contract: the generator is SplitMix64 (Vigna/Steele et
//! al., the documented constants below), normals come from the inverse-CDF
//! transform of its 53-bit uniforms, and trial t of an experiment uses the
//! substream seed mix64(master + GOLDEN * (t+1)). Everything downstream is a
//! pure function of the master seed, so outputs are bit-identical across
//! runs and thread counts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evalues::{MixParams, RwsParams};
use crate::intervals::{anchor_lambda, anchor_ratio, CiMethod};
use crate::risk::{empirical_risk, AlphaSearchConfig, Regime, RiskReport};
use crate::special::std_normal_quantile;
use crate::summary::SampleSummary;

const GOLDEN: u64 = 0x9E3779B97F4A7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// SplitMix64: 64-bit state advanced by the golden-ratio increment, output
/// through the finalizer above. Non-cryptographic.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform in the open interval (0,1): 53 significant bits offset by
    /// half an ulp so the normal quantile transform never sees 0 or 1.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via the inverse-CDF transform.
    #[inline]
    pub fn next_standard_normal(&mut self) -> f64 {
        std_normal_quantile(self.next_open01()).expect("open01 is inside (0,1)")
    }
}

/// Deterministic substream seed for a (master seed, index) pair.
pub fn substream_seed(master: u64, index: u64) -> u64 {
    mix64(master.wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))))
}

/// Distribution family of a generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Gaussian { mean: f64, sd: f64 },
    /// Student t with integer df, sampled as N(0,1)/sqrt(chi2_df/df) from
    /// the same normal primitive, then scaled and shifted.
    StudentT { df: u32, loc: f64, scale: f64 },
    Bernoulli { p: f64 },
}

/// A seeded data source. `draw` is a pure function of (family, seed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub family: Family,
    pub seed: u64,
}

impl Generator {
    pub fn validate(&self) -> Result<()> {
        match self.family {
            Family::Gaussian { sd, .. } if !(sd > 0.0 && sd.is_finite()) => {
                Err(Error::InvalidParameter {
                    name: "sd",
                    value: sd,
                    constraint: "requires sd > 0",
                })
            }
            Family::StudentT { df, .. } if df == 0 => Err(Error::InvalidParameter {
                name: "df",
                value: 0.0,
                constraint: "requires df >= 1",
            }),
            Family::Bernoulli { p } if !(0.0..=1.0).contains(&p) => {
                Err(Error::InvalidParameter {
                    name: "p",
                    value: p,
                    constraint: "requires p in [0,1]",
                })
            }
            _ => Ok(()),
        }
    }

    /// The generator for trial `index`, with an independently mixed seed.
    pub fn substream(&self, index: u64) -> Generator {
        Generator { family: self.family, seed: substream_seed(self.seed, index) }
    }

    pub fn draw(&self, count: usize) -> Vec<f64> {
        let mut rng = SplitMix64::new(self.seed);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(self.sample_one(&mut rng));
        }
        out
    }

    fn sample_one(&self, rng: &mut SplitMix64) -> f64 {
        match self.family {
            Family::Gaussian { mean, sd } => mean + sd * rng.next_standard_normal(),
            Family::StudentT { df, loc, scale } => {
                let z = rng.next_standard_normal();
                let mut chi2 = 0.0;
                for _ in 0..df {
                    let g = rng.next_standard_normal();
                    chi2 += g * g;
                }
                loc + scale * z / (chi2 / df as f64).sqrt()
            }
            Family::Bernoulli { p } => {
                if rng.next_open01() < p {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Interval widths of one method along the prefix checkpoints of a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthCurve {
    pub method: String,
    pub points: Vec<(u64, f64)>,
}

/// Evaluate each method on the common prefixes of a single realization:
/// one stream of length max(checkpoints) is drawn once, and every method
/// sees exactly the first n points at checkpoint n. Vacuous intervals
/// record width +inf.
pub fn width_experiment(
    methods: &[CiMethod],
    generator: &Generator,
    checkpoints: &[u64],
    alpha: f64,
) -> Result<Vec<WidthCurve>> {
    generator.validate()?;
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints.is_empty() {
        return Err(Error::InvalidParameter {
            name: "checkpoints",
            value: checkpoints.len() as f64,
            constraint: "requires a nonempty strictly increasing list",
        });
    }
    let max_n = *checkpoints.last().unwrap() as usize;
    let stream = generator.draw(max_n);
    let mut curves: Vec<WidthCurve> = methods
        .iter()
        .map(|m| WidthCurve { method: m.name().to_string(), points: Vec::new() })
        .collect();
    let mut summary = SampleSummary::empty();
    let mut consumed = 0usize;
    for &n in checkpoints {
        while consumed < n as usize {
            summary = summary.update(stream[consumed]);
            consumed += 1;
        }
        for (method, curve) in methods.iter().zip(curves.iter_mut()) {
            let width = method.interval(&summary, alpha)?.width();
            curve.points.push((n, width));
        }
    }
    Ok(curves)
}

/// Configuration of the data-dependent-alpha risk table: iid Gaussian data,
/// H0 at the true mean, four methods (Wald baseline, anchored single-lambda,
/// truncated-Gaussian mixture, Gaussian-mixture supermartingale).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskExperimentConfig {
    pub seed: u64,
    pub trials: u64,
    pub n: u64,
    pub mean: f64,
    pub sd: f64,
    pub theta0: f64,
    pub anchor_alpha0: f64,
    pub mix: MixParams,
    pub rws: RwsParams,
    pub search: AlphaSearchConfig,
}

impl Default for RiskExperimentConfig {
    fn default() -> Self {
        RiskExperimentConfig {
            seed: 1,
            trials: 1000,
            n: 1000,
            mean: 0.0,
            sd: 2.0,
            theta0: 0.0,
            anchor_alpha0: 0.01,
            mix: MixParams { r: 20.0, kappa: 1.0 },
            rws: RwsParams { rho: 2.0, delta: 1.0, c: 100.0 },
            search: AlphaSearchConfig::default(),
        }
    }
}

/// Run the risk table: every method in both regimes over shared per-trial
/// substreams.
pub fn risk_experiment(cfg: &RiskExperimentConfig) -> Result<Vec<RiskReport>> {
    let generator =
        Generator { family: Family::Gaussian { mean: cfg.mean, sd: cfg.sd }, seed: cfg.seed };
    generator.validate()?;
    let methods = [
        CiMethod::Wald,
        CiMethod::Iwr { lambda: anchor_lambda(cfg.anchor_alpha0)? },
        CiMethod::MixIwr(cfg.mix),
        CiMethod::Rws(cfg.rws),
    ];
    methods
        .iter()
        .map(|m| {
            empirical_risk(
                m,
                &generator,
                cfg.theta0,
                cfg.n,
                cfg.trials,
                &cfg.search,
                Regime::Theoretical,
            )
        })
        .collect()
}

/// Tabulated anchor ratios R(alpha, alpha0) and the grid maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioGrid {
    pub alphas: Vec<f64>,
    pub alpha0s: Vec<f64>,
    /// values[i][j] = R(alphas[i], alpha0s[j])
    pub values: Vec<Vec<f64>>,
    pub max: f64,
}

/// R(alpha, alpha0) over the cartesian grid.
pub fn anchor_ratio_grid(alphas: &[f64], alpha0s: &[f64]) -> Result<RatioGrid> {
    let mut values = Vec::with_capacity(alphas.len());
    let mut max = f64::NEG_INFINITY;
    for &a in alphas {
        let mut row = Vec::with_capacity(alpha0s.len());
        for &a0 in alpha0s {
            let r = anchor_ratio(a, a0)?;
            max = max.max(r);
            row.push(r);
        }
        values.push(row);
    }
    Ok(RatioGrid { alphas: alphas.to_vec(), alpha0s: alpha0s.to_vec(), values, max })
}

/// The grids behind the anchor-ratio figure: alpha sweeps [1e-4, 0.2]
/// log-uniformly and alpha0 takes the four plotted anchor levels.
pub fn default_ratio_grids() -> (Vec<f64>, Vec<f64>) {
    let lo = 1e-4f64.ln();
    let hi = 0.2f64.ln();
    let alphas =
        (0..500).map(|i| (lo + (hi - lo) * i as f64 / 499.0).exp()).collect();
    (alphas, vec![0.001, 0.01, 0.05, 0.1])
}

/// Floats in CSV output carry 9 significant digits; infinities are the
/// literal "inf".
pub fn fmt_float(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{:.8e}", x)
    }
}

/// CSV schema: method,n,width
pub fn widths_to_csv(curves: &[WidthCurve]) -> String {
    let mut out = String::from("method,n,width\n");
    for curve in curves {
        for &(n, width) in &curve.points {
            out.push_str(&format!("{},{},{}\n", curve.method, n, fmt_float(width)));
        }
    }
    out
}

/// CSV schema: method,regime,risk,se,n_trials
pub fn risk_to_csv(reports: &[RiskReport]) -> String {
    let mut out = String::from("method,regime,risk,se,n_trials\n");
    for r in reports {
        out.push_str(&format!(
            "{},practical,{},{},{}\n",
            r.method,
            fmt_float(r.practical_risk),
            fmt_float(r.practical_se),
            r.n_trials
        ));
        out.push_str(&format!(
            "{},theoretical,{},{},{}\n",
            r.method,
            fmt_float(r.theoretical_risk),
            fmt_float(r.theoretical_se),
            r.n_trials
        ));
    }
    out
}

/// CSV schema: alpha,alpha0,ratio
pub fn ratio_to_csv(grid: &RatioGrid) -> String {
    let mut out = String::from("alpha,alpha0,ratio\n");
    for (i, &a) in grid.alphas.iter().enumerate() {
        for (j, &a0) in grid.alpha0s.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_float(a),
                fmt_float(a0),
                fmt_float(grid.values[i][j])
            ));
        }
    }
    out
}

/// Mean of f applied to trial substreams, evaluated in parallel but
/// aggregated in trial order.
pub fn parallel_trial_mean<F>(generator: &Generator, trials: u64, f: F) -> Result<Vec<f64>>
where
    F: Fn(&Generator, u64) -> Result<f64> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| f(&generator.substream(t), t))
        .collect::<Result<Vec<f64>>>()
}
