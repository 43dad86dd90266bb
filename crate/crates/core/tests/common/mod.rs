//! Shared oracles for the integration suites. Everything here is
//! deliberately independent of the implementation paths it checks: the
//! normal CDF comes from a Taylor series / continued fraction rather than
//! rational approximations, and integrals come from adaptive Simpson
//! rather than closed forms.

#![allow(dead_code)]

const SQRT_PI: f64 = 1.7724538509055160272981674833411452_f64;

/// erf by its Maclaurin series; accurate to ~1e-13 absolute for |x| <= 3.
fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    for k in 1..200 {
        let kf = k as f64;
        term *= -x2 / kf;
        let add = term / (2.0 * kf + 1.0);
        sum += add;
        if add.abs() < 1e-18 * sum.abs().max(1e-30) {
            break;
        }
    }
    sum * 2.0 / SQRT_PI
}

/// erfc by the Laplace continued fraction (modified Lentz), for x >= 3.
fn erfc_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x.max(tiny);
    let mut c = f;
    let mut d = 0.0;
    for k in 1..400 {
        let a = k as f64 / 2.0;
        // CF: x + a1/(x + a2/(x + ...)) with a_k = k/2
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/f  where f is the CF value
    (-x * x).exp() / (SQRT_PI * f)
}

/// Oracle standard-normal CDF, absolute error well below 1e-13 on |x| <= 8.
pub fn oracle_cdf(x: f64) -> f64 {
    let z = x / std::f64::consts::SQRT_2; // cdf(x) = 0.5 erfc(-z)
    if z.abs() <= 3.0 {
        0.5 * (1.0 + erf_series(z))
    } else if z > 0.0 {
        1.0 - 0.5 * erfc_cf(z)
    } else {
        0.5 * erfc_cf(-z)
    }
}

fn simpson_rule<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

fn simpson_recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    whole: f64,
    m: f64,
    fm: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (left, lm, flm) = simpson_rule(f, a, fa, m, fm);
    let (right, rm, frm) = simpson_rule(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
            + simpson_recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
    }
}

/// Adaptive Simpson quadrature with absolute tolerance.
pub fn simpson_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson_rule(&f, a, fa, b, fb);
    simpson_recurse(&f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Value and derivative of the orthonormal Hermite polynomial h_n (weight
/// exp(-x^2)), via the stable upward recurrence; h'_n = sqrt(2n) h_{n-1}.
fn hermite_norm(n: usize, x: f64) -> (f64, f64) {
    let mut p1 = std::f64::consts::PI.powf(-0.25);
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = x * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Gauss-Hermite nodes and weights for weight exp(-t^2): scan for sign
/// changes of h_n (minimum zero spacing is pi/sqrt(2n+1)), bisect each
/// bracket, and read the weight off the derivative. Weights sum to
/// sqrt(pi).
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let upper = ((2 * n + 1) as f64).sqrt() + 0.5;
    let step = std::f64::consts::PI / ((2 * n + 1) as f64).sqrt() / 4.0;
    let mut half: Vec<(f64, f64)> = Vec::new();
    if n % 2 == 1 {
        half.push((0.0, 2.0 / hermite_norm(n, 0.0).1.powi(2)));
    }
    // start above zero so the odd-n root at the origin is not double-counted
    let mut x_prev = 0.25 * step;
    let mut f_prev = hermite_norm(n, x_prev).0;
    let mut x = x_prev;
    while x < upper {
        x += step;
        let f = hermite_norm(n, x).0;
        if f_prev.signum() != f.signum() && f_prev != 0.0 {
            let (mut lo, mut hi) = (x_prev, x);
            let mut f_lo = f_prev;
            for _ in 0..90 {
                let mid = 0.5 * (lo + hi);
                let fm = hermite_norm(n, mid).0;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == f_lo.signum() {
                    lo = mid;
                    f_lo = fm;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-16 * hi.max(1.0) {
                    break;
                }
            }
            let root = 0.5 * (lo + hi);
            let (_, deriv) = hermite_norm(n, root);
            half.push((root, 2.0 / (deriv * deriv)));
        }
        x_prev = x;
        f_prev = f;
    }
    let mut out: Vec<(f64, f64)> =
        half.iter().filter(|&&(t, _)| t > 0.0).map(|&(t, w)| (-t, w)).collect();
    out.reverse();
    out.extend(half);
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    assert_eq!(out.len(), n, "expected {n} Gauss-Hermite nodes, found {}", out.len());
    out
}

/// A 201-point discrete probability grid approximating N(0, rho) well
/// enough to reproduce its mixture against the kernel
/// exp(lambda s - u lambda^2 / 2) to near machine precision: 101
/// Gauss-Hermite nodes mapped onto the product-Gaussian peak (carrying the
/// local N(0,rho) quadrature mass), plus 2x50 equal-mass quantile nodes for
/// the remaining tail mass, where the kernel is negligible.
pub fn gaussian_weighted_grid(rho: f64, s: f64, u: f64) -> Vec<(f64, f64)> {
    let gh = gauss_hermite(101);
    let sigma2_star = 1.0 / (u + 1.0 / rho);
    let mu_star = s * sigma2_star;
    let scale = (2.0 * sigma2_star).sqrt();
    let density =
        |l: f64| (-l * l / (2.0 * rho)).exp() / (2.0 * std::f64::consts::PI * rho).sqrt();
    let mut grid: Vec<(f64, f64)> = gh
        .iter()
        .map(|&(t, w)| {
            let lambda = mu_star + scale * t;
            (lambda, w * (t * t).exp() * density(lambda) * scale)
        })
        .collect();
    let span = gh.iter().map(|&(t, _)| t.abs()).fold(0.0, f64::max) * scale;
    let fine_mass: f64 = grid.iter().map(|g| g.1).sum();
    let sd = rho.sqrt();
    let p_lo = oracle_cdf((mu_star - span) / sd);
    let p_hi = 1.0 - oracle_cdf((mu_star + span) / sd);
    let remaining = (1.0 - fine_mass).max(0.0);
    let tail_total = p_lo + p_hi;
    for side in 0..2 {
        for j in 0..50 {
            let frac = (j as f64 + 0.5) / 50.0;
            let (p, fallback) = if side == 0 {
                (frac * p_lo, mu_star - span - (j as f64 + 1.0) * sd)
            } else {
                (1.0 - frac * p_hi, mu_star + span + (j as f64 + 1.0) * sd)
            };
            let lambda = posthoc::special::std_normal_quantile(p)
                .map(|q| q * sd)
                .unwrap_or(fallback);
            let share = if side == 0 { p_lo } else { p_hi };
            let w = if tail_total > 0.0 { remaining * share / tail_total / 50.0 } else { 0.0 };
            grid.push((lambda, w));
        }
    }
    let total: f64 = grid.iter().map(|g| g.1).sum();
    for g in &mut grid {
        g.1 /= total;
    }
    assert_eq!(grid.len(), 201);
    grid
}

/// Truncated-normal density on [-r, r] with sd kappa, unnormalized by
/// Z_{R,kappa} (i.e. already divided by it).
pub fn truncated_normal_density(lambda: f64, r: f64, kappa: f64) -> f64 {
    if lambda.abs() > r {
        return 0.0;
    }
    let z = kappa
        * (2.0 * std::f64::consts::PI).sqrt()
        * (oracle_cdf(r / kappa) - oracle_cdf(-r / kappa));
    (-lambda * lambda / (2.0 * kappa * kappa)).exp() / z
}

#[derive(Clone)]
pub struct FixtureRng(pub posthoc::sim::SplitMix64);

impl FixtureRng {
    pub fn new(seed: u64) -> Self {
        FixtureRng(posthoc::sim::SplitMix64::new(seed))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.0.next_open01()
    }

    pub fn normal(&mut self) -> f64 {
        self.0.next_standard_normal()
    }
}
