//! Particle simulation at `β = 2c/N` and exact static samplers.
//!
//! Both particle systems are integrated with a sorted Euler scheme: drift
//! contributions are accumulated pairwise with each pair's push capped at
//! `gap / h`, the state is advanced, and the particles are re-sorted. The
//! Laguerre scheme uses full truncation (`√(2λ⁺)` noise, negatives projected
//! to zero). A step is split into `substep_factor` substeps whenever the
//! smallest gap is below `√dt`.
//!
//! The tridiagonal (Gaussian) and bidiagonal (Laguerre) models sample the
//! time-one marginals exactly and serve as distribution oracles.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::params::{check_alpha, Ensemble, EnsembleKind};
use crate::rng::replica_rng;

/// Default number of Euler steps on `[0, T]`.
pub const DEFAULT_STEPS: usize = 2000;
/// Default substep multiplier near small gaps.
pub const DEFAULT_SUBSTEP_FACTOR: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub ensemble: Ensemble,
    pub n: usize,
    pub t_end: f64,
    pub steps: usize,
    pub seed: u64,
    pub substep_factor: usize,
}

impl EnsembleParams {
    pub fn new(
        ensemble: Ensemble,
        n: usize,
        t_end: f64,
        steps: usize,
        seed: u64,
        substep_factor: usize,
    ) -> Result<Self> {
        let p = EnsembleParams {
            ensemble,
            n,
            t_end,
            steps,
            seed,
            substep_factor,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        // Re-run the ensemble checks in case the struct was built by hand.
        Ensemble::new(
            self.kind(),
            self.ensemble.c(),
            self.ensemble.alpha().unwrap_or(1.0),
        )?;
        if self.n == 0 {
            return Err(Error::invalid("N must be at least 1"));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid(format!(
                "T must be positive, got {}",
                self.t_end
            )));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps must be at least 1"));
        }
        if self.substep_factor == 0 {
            return Err(Error::invalid("substep_factor must be at least 1"));
        }
        Ok(())
    }

    pub fn kind(&self) -> EnsembleKind {
        self.ensemble.kind()
    }

    /// `β = 2c/N`.
    pub fn beta(&self) -> f64 {
        2.0 * self.ensemble.c() / self.n as f64
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    /// The `steps + 1` observation times.
    pub fn grid(&self) -> Vec<f64> {
        (0..=self.steps)
            .map(|i| {
                if i == self.steps {
                    self.t_end
                } else {
                    self.dt() * i as f64
                }
            })
            .collect()
    }

    /// Grid index of time `t` (exact multiples of `dt` up to `1e-9` relative).
    pub fn grid_index(&self, t: f64) -> Result<usize> {
        let x = t / self.dt();
        let i = x.round();
        if t < 0.0 || i > self.steps as f64 || (x - i).abs() > 1e-9 * x.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "time {t} is not on the simulation grid"
            )));
        }
        Ok(i as usize)
    }
}

/// Ordered particle configurations on the simulation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticlePaths {
    pub grid: Vec<f64>,
    pub n: usize,
    pub replica_id: u64,
    values: Vec<f64>,
}

impl ParticlePaths {
    pub fn block(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n)
    }

    pub fn last(&self) -> &[f64] {
        self.block(self.grid.len() - 1)
    }
}

/// Work counters from one simulated replica.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimCounters {
    pub substeps: u64,
    pub particle_steps: u64,
}

struct Stepper {
    kind: EnsembleKind,
    alpha: f64,
    beta: f64,
    lambda: Vec<f64>,
    drift: Vec<f64>,
    noise: Vec<f64>,
}

impl Stepper {
    fn min_gap(&self) -> f64 {
        self.lambda
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    fn accumulate_drift(&mut self, h: f64) {
        let lam = &self.lambda;
        let drift = &mut self.drift;
        drift.iter_mut().for_each(|d| *d = 0.0);
        if self.beta == 0.0 {
            return;
        }
        let inv_h = 1.0 / h;
        let n = lam.len();
        match self.kind {
            EnsembleKind::Gaussian => {
                let half_beta = 0.5 * self.beta;
                for i in 0..n {
                    let li = lam[i];
                    let mut acc = 0.0;
                    for j in i + 1..n {
                        let gap = lam[j] - li;
                        if gap > 0.0 {
                            let v = (half_beta / gap).min(gap * inv_h);
                            acc -= v;
                            drift[j] += v;
                        }
                    }
                    drift[i] += acc;
                }
            }
            EnsembleKind::Laguerre => {
                let beta = self.beta;
                for i in 0..n {
                    let li = lam[i];
                    let mut acc = 0.0;
                    for j in i + 1..n {
                        let gap = lam[j] - li;
                        if gap > 0.0 {
                            let cap = gap * inv_h;
                            let r = beta / gap;
                            acc -= (r * li).min(cap);
                            drift[j] += (r * lam[j]).min(cap);
                        }
                    }
                    drift[i] += acc;
                }
            }
        }
    }

    fn substep<R: Rng + ?Sized, O: PathObserver + ?Sized>(
        &mut self,
        t: f64,
        h: f64,
        rng: &mut R,
        observer: &mut O,
    ) {
        self.accumulate_drift(h);
        let sq = h.sqrt();
        for w in self.noise.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *w = sq * z;
        }
        observer.on_noise(t, h, &self.lambda, &self.noise);
        match self.kind {
            EnsembleKind::Gaussian => {
                for ((l, d), w) in self.lambda.iter_mut().zip(&self.drift).zip(&self.noise) {
                    *l += d * h + w;
                }
            }
            EnsembleKind::Laguerre => {
                for ((l, d), w) in self.lambda.iter_mut().zip(&self.drift).zip(&self.noise) {
                    let next = *l + (self.alpha + d) * h + (2.0 * l.max(0.0)).sqrt() * w;
                    *l = next.max(0.0);
                }
            }
        }
        self.lambda.sort_unstable_by(f64::total_cmp);
    }
}

/// Callbacks from a running simulation.
pub trait PathObserver {
    /// State at grid time `t_index`.
    fn on_grid(&mut self, index: usize, t: f64, lambda: &[f64]);

    /// Brownian increments `dW_i` about to be applied to the state `lambda`
    /// (pre-step, sorted) during the substep `[t, t+h]`.
    fn on_noise(&mut self, _t: f64, _h: f64, _lambda: &[f64], _dw: &[f64]) {}
}

struct GridFn<F>(F);

impl<F: FnMut(usize, f64, &[f64])> PathObserver for GridFn<F> {
    fn on_grid(&mut self, index: usize, t: f64, lambda: &[f64]) {
        (self.0)(index, t, lambda)
    }
}

/// Runs one replica, calling `observe(i, t_i, λ(t_i))` at every grid time
/// (including `t_0 = 0`).
pub fn simulate_observed<F>(
    params: &EnsembleParams,
    replica_id: u64,
    observe: F,
) -> Result<SimCounters>
where
    F: FnMut(usize, f64, &[f64]),
{
    simulate_with(params, replica_id, &mut GridFn(observe))
}

/// Runs one replica against an arbitrary [`PathObserver`].
pub fn simulate_with<O: PathObserver + ?Sized>(
    params: &EnsembleParams,
    replica_id: u64,
    observer: &mut O,
) -> Result<SimCounters> {
    params.validate()?;
    let mut rng = replica_rng(params.seed, replica_id);
    let mut st = Stepper {
        kind: params.kind(),
        alpha: params.ensemble.alpha().unwrap_or(0.0),
        beta: params.beta(),
        lambda: vec![0.0; params.n],
        drift: vec![0.0; params.n],
        noise: vec![0.0; params.n],
    };
    let dt = params.dt();
    let threshold = dt.sqrt();
    let mut counters = SimCounters::default();
    observer.on_grid(0, 0.0, &st.lambda);
    for step in 1..=params.steps {
        let m = if params.n > 1 && st.min_gap() < threshold {
            params.substep_factor
        } else {
            1
        };
        let h = dt / m as f64;
        let t0 = dt * (step - 1) as f64;
        for k in 0..m {
            st.substep(t0 + h * k as f64, h, &mut rng, observer);
        }
        counters.substeps += m as u64;
        counters.particle_steps += (m * params.n) as u64;
        if !st.lambda.iter().all(|v| v.is_finite()) {
            return Err(Error::SimulationDiverged { step });
        }
        let t = if step == params.steps {
            params.t_end
        } else {
            dt * step as f64
        };
        observer.on_grid(step, t, &st.lambda);
    }
    Ok(counters)
}

fn record(params: &EnsembleParams, replica_id: u64) -> Result<ParticlePaths> {
    let mut values = Vec::with_capacity((params.steps + 1) * params.n);
    simulate_observed(params, replica_id, |_, _, lam| {
        values.extend_from_slice(lam)
    })?;
    Ok(ParticlePaths {
        grid: params.grid(),
        n: params.n,
        replica_id,
        values,
    })
}

fn require(params: &EnsembleParams, kind: EnsembleKind) -> Result<()> {
    if params.kind() == kind {
        Ok(())
    } else {
        Err(Error::WrongKind {
            expected: kind.as_str(),
            got: params.kind().as_str(),
        })
    }
}

/// Beta Dyson Brownian motion from the origin.
pub fn simulate_dyson(params: &EnsembleParams, replica_id: u64) -> Result<ParticlePaths> {
    require(params, EnsembleKind::Gaussian)?;
    record(params, replica_id)
}

/// Beta Laguerre process from the origin.
pub fn simulate_laguerre(params: &EnsembleParams, replica_id: u64) -> Result<ParticlePaths> {
    require(params, EnsembleKind::Laguerre)?;
    record(params, replica_id)
}

/// Either kind, dispatched on `params`.
pub fn simulate(params: &EnsembleParams, replica_id: u64) -> Result<ParticlePaths> {
    record(params, replica_id)
}

/// `λ(T)` only.
pub fn simulate_endpoint(params: &EnsembleParams, replica_id: u64) -> Result<Vec<f64>> {
    let mut last = Vec::new();
    simulate_observed(params, replica_id, |i, _, lam| {
        if i == params.steps {
            last = lam.to_vec();
        }
    })?;
    Ok(last)
}

/// `(1/N) Σ λ_i^n`.
pub fn empirical_moment(lambda: &[f64], n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    lambda.iter().map(|l| l.powi(n as i32)).sum::<f64>() / lambda.len() as f64
}

/// `S_n(t_i)` along the path.
pub fn moment_process(paths: &ParticlePaths, n: usize) -> Vec<f64> {
    paths.blocks().map(|b| empirical_moment(b, n)).collect()
}

fn chi<R: Rng + ?Sized>(df: f64, rng: &mut R) -> Result<f64> {
    let d = ChiSquared::new(df).map_err(|e| Error::invalid(format!("chi degrees {df}: {e}")))?;
    Ok(d.sample(rng).sqrt())
}

/// Eigenvalues of the Gaussian beta tridiagonal model: diagonal `N(0,1)`,
/// off-diagonal `χ_{β(N-k)}/√2`. Sorted ascending.
pub fn sample_gbe_tridiag<R: Rng + ?Sized>(n: usize, beta: f64, rng: &mut R) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    let diag: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let off = (1..n)
        .map(|k| chi(beta * (n - k) as f64, rng).map(|x| x * std::f64::consts::FRAC_1_SQRT_2))
        .collect::<Result<Vec<_>>>()?;
    linalg::tridiagonal_eigenvalues(&diag, &off)
}

/// Eigenvalues of `B Bᵀ / 2` for the bidiagonal chi model with diagonal
/// `χ_{2α+β(N-i)}` and subdiagonal `χ_{β(N-i)}`: joint density
/// `∏|λ_i - λ_j|^β ∏ λ_i^{α-1} e^{-λ_i}`. Sorted ascending, nonnegative.
pub fn sample_lbe_tridiag<R: Rng + ?Sized>(
    n: usize,
    beta: f64,
    alpha: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    check_alpha(alpha)?;
    let x = (1..=n)
        .map(|i| chi(2.0 * alpha + beta * (n - i) as f64, rng))
        .collect::<Result<Vec<_>>>()?;
    let y = (1..n)
        .map(|i| chi(beta * (n - i) as f64, rng))
        .collect::<Result<Vec<_>>>()?;
    let diag: Vec<f64> = (0..n)
        .map(|i| 0.5 * (x[i] * x[i] + if i > 0 { y[i - 1] * y[i - 1] } else { 0.0 }))
        .collect();
    let off: Vec<f64> = (0..n - 1).map(|i| 0.5 * x[i] * y[i]).collect();
    let mut ev = linalg::tridiagonal_eigenvalues(&diag, &off)?;
    ev.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok(ev)
}

/// Exact time-`T` law scaled to unit time: draws from the model that
/// `λ(T)/√T` (Gaussian) or `λ(T)/T` (Laguerre) follows.
pub fn sample_static<R: Rng + ?Sized>(params: &EnsembleParams, rng: &mut R) -> Result<Vec<f64>> {
    match params.ensemble {
        Ensemble::Gaussian { .. } => sample_gbe_tridiag(params.n, params.beta(), rng),
        Ensemble::Laguerre { alpha, .. } => sample_lbe_tridiag(params.n, params.beta(), alpha, rng),
    }
}

/// Rescales an endpoint configuration at time `t` to unit time.
pub fn to_unit_time(kind: EnsembleKind, lambda: &mut [f64], t: f64) {
    let s = match kind {
        EnsembleKind::Gaussian => t.sqrt(),
        EnsembleKind::Laguerre => t,
    };
    lambda.iter_mut().for_each(|v| *v /= s);
}
