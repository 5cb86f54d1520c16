//! Path-level invariants of the particle simulations.

use betaflow::rng::replica_rng;
use betaflow::sde::{self, empirical_moment, EnsembleParams, PathObserver};
use betaflow::Ensemble;

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Accumulates the finite-variation part of the moment SDE over the
/// simulation's own substeps.
struct DriftIntegral<F: Fn(&[f64]) -> f64> {
    drift: F,
    integral: f64,
    endpoint: Vec<f64>,
}

impl<F: Fn(&[f64]) -> f64> PathObserver for DriftIntegral<F> {
    fn on_grid(&mut self, _index: usize, _t: f64, lambda: &[f64]) {
        self.endpoint.clear();
        self.endpoint.extend_from_slice(lambda);
    }

    fn on_noise(&mut self, _t: f64, h: f64, lambda: &[f64], _dw: &[f64]) {
        self.integral += (self.drift)(lambda) * h;
    }
}

/// `S_n(T) - ∫ drift` per replica; a martingale at time `T`.
fn residuals(
    params: &EnsembleParams,
    n: usize,
    replicas: u64,
    drift: impl Fn(&[f64]) -> f64 + Copy,
) -> Vec<f64> {
    (0..replicas)
        .map(|id| {
            let mut obs = DriftIntegral {
                drift,
                integral: 0.0,
                endpoint: Vec::new(),
            };
            sde::simulate_with(params, id, &mut obs).unwrap();
            empirical_moment(&obs.endpoint, n) - obs.integral
        })
        .collect()
}

fn moments(lambda: &[f64], upto: usize) -> Vec<f64> {
    (0..=upto).map(|k| empirical_moment(lambda, k)).collect()
}

#[test]
fn gaussian_integral_identity_residual_is_centered() {
    let c = 1.0;
    let big_n = 50.0;
    let params = EnsembleParams::new(Ensemble::gaussian(c).unwrap(), 50, 1.0, 200, 11, 4).unwrap();
    for n in [2usize, 4] {
        let drift = move |lam: &[f64]| {
            let s = moments(lam, n);
            let nf = n as f64;
            let conv: f64 = (0..=n - 2).map(|j| s[j] * s[n - 2 - j]).sum();
            0.5 * c * nf * conv + 0.5 * nf * (nf - 1.0) * s[n - 2] * (1.0 - c / big_n)
        };
        let (mean, se) = mean_and_se(&residuals(&params, n, 300, drift));
        assert!(
            mean.abs() <= 3.0 * se,
            "n={n}: residual mean {mean} vs se {se}"
        );
    }
}

#[test]
fn laguerre_integral_identity_residual_is_centered() {
    let (alpha, c) = (1.0, 1.0);
    let big_n = 50.0;
    let params =
        EnsembleParams::new(Ensemble::laguerre(alpha, c).unwrap(), 50, 1.0, 200, 12, 4).unwrap();
    for n in [1usize, 2] {
        let drift = move |lam: &[f64]| {
            let s = moments(lam, n);
            let nf = n as f64;
            let conv: f64 = (0..n).map(|i| s[i] * s[n - 1 - i]).sum();
            alpha * nf * s[n - 1] + c * nf * conv + nf * (nf - 1.0) * s[n - 1]
                - c * nf * nf / big_n * s[n - 1]
        };
        let (mean, se) = mean_and_se(&residuals(&params, n, 300, drift));
        assert!(
            mean.abs() <= 3.0 * se,
            "n={n}: residual mean {mean} vs se {se}"
        );
    }
}

/// Realized `Σ (ΔM)²` beside the predicted `(2n²/N) Σ S_{2n-1} h`.
struct Qv {
    n: usize,
    realized: f64,
    predicted: f64,
}

impl PathObserver for Qv {
    fn on_grid(&mut self, _index: usize, _t: f64, _lambda: &[f64]) {}

    fn on_noise(&mut self, _t: f64, h: f64, lambda: &[f64], dw: &[f64]) {
        let big_n = lambda.len() as f64;
        let nf = self.n as f64;
        let dm: f64 = lambda
            .iter()
            .zip(dw)
            .map(|(&l, &w)| (2.0 * l.max(0.0)).sqrt() * l.powi(self.n as i32 - 1) * w)
            .sum::<f64>()
            * nf
            / big_n;
        self.realized += dm * dm;
        self.predicted += 2.0 * nf * nf / big_n * empirical_moment(lambda, 2 * self.n - 1) * h;
    }
}

#[test]
fn laguerre_quadratic_variation_matches() {
    let params =
        EnsembleParams::new(Ensemble::laguerre(1.0, 1.0).unwrap(), 200, 1.0, 100, 3, 2).unwrap();
    let mut qv = Qv {
        n: 1,
        realized: 0.0,
        predicted: 0.0,
    };
    for id in 0..4 {
        sde::simulate_with(&params, id, &mut qv).unwrap();
    }
    let ratio = qv.realized / qv.predicted;
    assert!((ratio - 1.0).abs() < 0.1, "realized/predicted = {ratio}");
}

#[test]
fn identical_seed_and_replica_give_identical_paths() {
    for e in [
        Ensemble::gaussian(0.5).unwrap(),
        Ensemble::laguerre(1.5, 2.0).unwrap(),
    ] {
        let p = EnsembleParams::new(e, 12, 1.0, 60, 99, 4).unwrap();
        let a = sde::simulate(&p, 3).unwrap();
        assert_eq!(a, sde::simulate(&p, 3).unwrap());
        assert_ne!(a.last(), sde::simulate(&p, 4).unwrap().last());
    }
}

#[test]
fn blocks_are_ordered_and_start_at_zero() {
    let p = EnsembleParams::new(Ensemble::laguerre(1.0, 1.0).unwrap(), 30, 2.0, 80, 1, 4).unwrap();
    let paths = sde::simulate_laguerre(&p, 0).unwrap();
    assert!(paths.block(0).iter().all(|&v| v == 0.0));
    for b in paths.blocks() {
        assert!(b.windows(2).all(|w| w[0] <= w[1]));
        assert!(b[0] >= 0.0);
    }
    let s0 = sde::moment_process(&paths, 0);
    assert!(s0.iter().all(|&v| v == 1.0));
}

#[test]
fn large_n_gaussian_second_moment() {
    let p = EnsembleParams::new(Ensemble::gaussian(1.0).unwrap(), 400, 1.0, 100, 21, 2).unwrap();
    let xs: Vec<f64> = (0..200)
        .map(|id| empirical_moment(&sde::simulate_endpoint(&p, id).unwrap(), 2))
        .collect();
    let (mean, _) = mean_and_se(&xs);
    assert!((mean - 2.0).abs() < 5e-2, "mean S_2(1) = {mean}");
}

#[test]
fn large_n_laguerre_first_moment() {
    let p =
        EnsembleParams::new(Ensemble::laguerre(1.0, 1.0).unwrap(), 400, 1.0, 100, 22, 2).unwrap();
    let xs: Vec<f64> = (0..200)
        .map(|id| empirical_moment(&sde::simulate_endpoint(&p, id).unwrap(), 1))
        .collect();
    let (mean, _) = mean_and_se(&xs);
    assert!((mean - 2.0).abs() < 5e-2, "mean S_1(1) = {mean}");
}

#[test]
fn tridiagonal_samplers_match_limit_moments() {
    let beta = 2.0 / 200.0;
    let mut g = Vec::new();
    let mut l = Vec::new();
    for id in 0..500 {
        let mut rng = replica_rng(8, id);
        g.push(empirical_moment(
            &sde::sample_gbe_tridiag(200, beta, &mut rng).unwrap(),
            2,
        ));
        let lam = sde::sample_lbe_tridiag(200, beta, 1.0, &mut rng).unwrap();
        assert!(lam.iter().all(|&v| v >= 0.0));
        l.push(empirical_moment(&lam, 1));
    }
    assert!((mean_and_se(&g).0 - 2.0).abs() < 5e-2);
    assert!((mean_and_se(&l).0 - 2.0).abs() < 5e-2);
}

#[test]
fn endpoint_rescaling_matches_static_law_in_moments() {
    // λ(t)/√t is a GβE draw, so S_2 at t = 4 scales by 4.
    let p = EnsembleParams::new(Ensemble::gaussian(1.0).unwrap(), 40, 4.0, 200, 5, 4).unwrap();
    let xs: Vec<f64> = (0..200)
        .map(|id| {
            let mut lam = sde::simulate_endpoint(&p, id).unwrap();
            sde::to_unit_time(p.kind(), &mut lam, p.t_end);
            empirical_moment(&lam, 2)
        })
        .collect();
    let (mean, se) = mean_and_se(&xs);
    let exact = 1.0 + (40.0 - 1.0) / 40.0;
    assert!((mean - exact).abs() < 4.0 * se + 2e-2, "{mean} vs {exact}");
}
