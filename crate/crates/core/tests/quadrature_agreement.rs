//! Closed-form mixture e-values against numeric quadrature of their
//! defining integrals.

mod common;

use common::{gauss_hermite, simpson_adaptive, truncated_normal_density, FixtureRng};
use posthoc::evalues::{
    e_iwr, e_mix_iwr, e_mix_reg, e_reg, e_rws, e_rws_general, i_r_kernel, IwrParams, MixParams,
    RegParams, RwsParams,
};
use posthoc::summary::SampleSummary;

fn random_summary(rng: &mut FixtureRng, n: usize) -> SampleSummary {
    let mu = rng.uniform(-2.0, 2.0);
    let sd = rng.uniform(0.3, 3.0);
    SampleSummary::summarize((0..n).map(|_| mu + sd * rng.normal()))
}

#[test]
fn i_r_matches_lambda_integral() {
    let mut rng = FixtureRng::new(401);
    for _ in 0..60 {
        let y = rng.uniform(-6.0, 6.0);
        let u = rng.uniform(0.5, 4.0);
        let r = rng.uniform(0.8, 30.0);
        let direct = i_r_kernel(y, u, r).unwrap();
        let quad = simpson_adaptive(|l| (l * y - l * l * u).exp(), -r, r, 1e-12 * direct);
        let rel = ((direct - quad) / quad).abs();
        assert!(rel <= 1e-8, "y={y} u={u} r={r}: rel {rel}");
    }
}

#[test]
fn mix_iwr_matches_truncated_normal_mixture() {
    let mut rng = FixtureRng::new(402);
    for _ in 0..40 {
        let extra = rng.uniform(0.0, 160.0) as usize;
        let s = random_summary(&mut rng, 40 + extra);
        let theta = s.mean() + rng.uniform(-1.0, 1.0);
        let p = MixParams { r: rng.uniform(2.0, 30.0), kappa: rng.uniform(0.5, 3.0) };
        let closed = e_mix_iwr(&s, theta, &p).unwrap();
        let quad = simpson_adaptive(
            |l| {
                e_iwr(&s, theta, &IwrParams { lambda: l }).unwrap()
                    * truncated_normal_density(l, p.r, p.kappa)
            },
            -p.r,
            p.r,
            1e-12 * closed,
        );
        let rel = ((closed - quad) / quad).abs();
        assert!(rel <= 1e-8, "rel {rel}");
    }
}

#[test]
fn mix_reg_matches_truncated_normal_mixture() {
    let mut rng = FixtureRng::new(403);
    for _ in 0..40 {
        let extra = rng.uniform(0.0, 120.0) as usize;
        let s = random_summary(&mut rng, 30 + extra);
        let theta = s.mean() + rng.uniform(-1.0, 1.0);
        let p = MixParams { r: rng.uniform(2.0, 30.0), kappa: rng.uniform(0.5, 3.0) };
        let eta = rng.uniform(1e-4, 0.2);
        let closed = e_mix_reg(&s, theta, &p, eta).unwrap();
        let quad = simpson_adaptive(
            |l| {
                e_reg(&s, theta, &RegParams { lambda: l, eta }).unwrap()
                    * truncated_normal_density(l, p.r, p.kappa)
            },
            -p.r,
            p.r,
            1e-12 * closed,
        );
        let rel = ((closed - quad) / quad).abs();
        assert!(rel <= 1e-8, "rel {rel}");
    }
}

#[test]
fn rws_matches_gaussian_mixture_integral() {
    let mut rng = FixtureRng::new(404);
    for _ in 0..40 {
        let extra = rng.uniform(0.0, 200.0) as usize;
        let s = random_summary(&mut rng, 20 + extra);
        let theta = s.mean() + rng.uniform(-0.5, 0.5);
        let p = RwsParams { rho: rng.uniform(0.3, 5.0), delta: 1.0, c: 1e280 };
        // c is huge so the truncation never binds: the closed form is the
        // pure Gaussian mixture (the untruncated branch)
        let closed = e_rws(&s, theta, &p).unwrap();
        let stats = s.theta_stats(theta).unwrap();
        let nf = s.n() as f64;
        let u = nf * (s.biased_var().unwrap() + 1.0 / nf.ln());
        // integrand is Gaussian in lambda; integrate over +-14 posterior sds
        let sigma_post = 1.0 / (u + 1.0 / p.rho).sqrt();
        let mu_post = stats.s / (u + 1.0 / p.rho);
        let density = |l: f64| {
            (-l * l / (2.0 * p.rho)).exp() / (2.0 * std::f64::consts::PI * p.rho).sqrt()
        };
        let quad = simpson_adaptive(
            |l| (l * stats.s - 0.5 * u * l * l).exp() * density(l),
            mu_post - 14.0 * sigma_post,
            mu_post + 14.0 * sigma_post,
            1e-12 * closed,
        );
        let rel = ((closed - quad) / quad).abs();
        assert!(rel <= 1e-8, "rel {rel}");
    }
}

#[test]
fn rws_general_gauss_hermite_grid_matches_closed_form() {
    // plain 201-node Gauss-Hermite discretization of N(0, rho); resolves the
    // kernel when rho * n * (s^2 + eps) is modest, so keep n small here
    let gh = gauss_hermite(201);
    let weight_sum: f64 = gh.iter().map(|&(_, w)| w).sum();
    let mut rng = FixtureRng::new(405);
    for _ in 0..25 {
        let n = 3 + (rng.uniform(0.0, 6.0) as usize);
        let mu = rng.uniform(-1.0, 1.0);
        let sd = rng.uniform(0.2, 0.6);
        let s = SampleSummary::summarize((0..n).map(|_| mu + sd * rng.normal()));
        let theta = s.mean() + rng.uniform(-0.5, 0.5);
        let rho = rng.uniform(0.3, 1.2);
        let nf = s.n() as f64;
        let eps = 1.0 / nf.ln();
        let p = RwsParams { rho, delta: 1.0, c: 1e12 };
        let closed = e_rws(&s, theta, &p).unwrap();
        let grid: Vec<(f64, f64)> = gh
            .iter()
            .map(|&(t, w)| ((2.0 * rho).sqrt() * t, w / weight_sum))
            .collect();
        let general = e_rws_general(&s, theta, &grid, eps, 1e12).unwrap();
        let rel = ((closed - general) / closed).abs();
        assert!(rel <= 1e-6, "n={} rho={rho}: rel {rel}", s.n());
    }
}

#[test]
fn rws_general_gaussian_weighted_grid_matches_closed_form_at_scale() {
    // composite 201-point Gaussian-weighted grid handles realistic n
    let mut rng = FixtureRng::new(406);
    for _ in 0..25 {
        let extra = rng.uniform(0.0, 400.0) as usize;
        let s = random_summary(&mut rng, 10 + extra);
        let theta = s.mean() + rng.uniform(-0.5, 0.5);
        let rho = rng.uniform(0.5, 4.0);
        let nf = s.n() as f64;
        let eps = 1.0 / nf.ln();
        let p = RwsParams { rho, delta: 1.0, c: 1e12 };
        let closed = e_rws(&s, theta, &p).unwrap();
        let stats = s.theta_stats(theta).unwrap();
        let u = nf * (s.biased_var().unwrap() + eps);
        let grid = common::gaussian_weighted_grid(rho, stats.s, u);
        // same cap c n^{0.24 delta} on both sides so the comparison holds on
        // the truncated branch too
        let general =
            e_rws_general(&s, theta, &grid, eps, p.ln_truncation(s.n()).exp()).unwrap();
        let rel = ((closed - general) / closed).abs();
        assert!(rel <= 1e-6, "n={} rho={rho}: rel {rel}", s.n());
    }
}

#[test]
fn gauss_hermite_sanity() {
    let gh = gauss_hermite(201);
    // integrates exp(-t^2) weightings of low-degree polynomials exactly
    let total: f64 = gh.iter().map(|&(_, w)| w).sum();
    assert!((total - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    let second: f64 = gh.iter().map(|&(t, w)| w * t * t).sum();
    assert!((second - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-11);
}
