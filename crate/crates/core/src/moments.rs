//! Limiting moments and the covariance structure of the fluctuation limits.
//!
//! In the high-temperature regime the empirical moment processes
//! `S_n(t) = ⟨μ_t^{(N)}, x^n⟩` converge to deterministic curves `m_n(t)`, and
//! `√N (S_n - m_n)` converges to Gaussian processes `ξ_n` driven by the
//! martingale limits `η_n`. The `ξ_n` solve a lower-triangular linear system
//!
//! ```text
//! dξ = A(t) ξ dt + dη,     d⟨η_k, η_l⟩_t = Σ_{kl}(t) dt,
//! ```
//!
//! whose covariance is propagated on a time grid by [`xi_cov`].

use nalgebra::{DMatrix, DVector};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::params::{Ensemble, EnsembleKind};
use crate::poly::BivariatePoly;

/// `u_0..u_nmax` for one ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    ensemble: Ensemble,
    u: Vec<f64>,
}

impl MomentTable {
    pub fn ensemble(&self) -> Ensemble {
        self.ensemble
    }

    pub fn kind(&self) -> EnsembleKind {
        self.ensemble.kind()
    }

    pub fn c(&self) -> f64 {
        self.ensemble.c()
    }

    pub fn alpha(&self) -> Option<f64> {
        self.ensemble.alpha()
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn nmax(&self) -> usize {
        self.u.len() - 1
    }

    pub fn get(&self, n: usize) -> Result<f64> {
        self.u.get(n).copied().ok_or(Error::OutOfRange {
            index: n,
            max: self.nmax(),
        })
    }
}

/// `u_{2n} = (2n-1) u_{2n-2} + c Σ_{i+j=2n-2} u_i u_j`, odd moments zero.
pub fn gaussian_u(c: f64, nmax: usize) -> Result<MomentTable> {
    let ensemble = Ensemble::gaussian(c)?;
    let mut u = vec![0.0; nmax + 1];
    u[0] = 1.0;
    for n in (2..=nmax).step_by(2) {
        let conv: f64 = (0..=n - 2).step_by(2).map(|i| u[i] * u[n - 2 - i]).sum();
        u[n] = (n - 1) as f64 * u[n - 2] + c * conv;
    }
    Ok(MomentTable { ensemble, u })
}

/// `u_n = (α+n-1) u_{n-1} + c Σ_{i+j=n-1} u_i u_j`.
pub fn laguerre_u(alpha: f64, c: f64, nmax: usize) -> Result<MomentTable> {
    let ensemble = Ensemble::laguerre(alpha, c)?;
    let mut u = vec![0.0; nmax + 1];
    u[0] = 1.0;
    for n in 1..=nmax {
        let conv: f64 = (0..n).map(|i| u[i] * u[n - 1 - i]).sum();
        u[n] = (alpha + (n - 1) as f64) * u[n - 1] + c * conv;
    }
    Ok(MomentTable { ensemble, u })
}

pub fn moment_table(ensemble: &Ensemble, nmax: usize) -> Result<MomentTable> {
    match *ensemble {
        Ensemble::Gaussian { c } => gaussian_u(c, nmax),
        Ensemble::Laguerre { alpha, c } => laguerre_u(alpha, c, nmax),
    }
}

fn time_power(kind: EnsembleKind, n: usize, t: f64) -> f64 {
    match kind {
        EnsembleKind::Gaussian => t.powf(0.5 * n as f64),
        EnsembleKind::Laguerre => t.powi(n as i32),
    }
}

/// `m_n(t)`: `u_n t^{n/2}` (Gaussian) or `u_n t^n` (Laguerre).
pub fn m_curve(table: &MomentTable, n: usize, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("time must be nonnegative, got {t}")));
    }
    let u = table.get(n)?;
    if n == 0 {
        return Ok(1.0);
    }
    Ok(u * time_power(table.kind(), n, t))
}

/// Right side of the moment ODE at `t`:
///
/// * Gaussian: `½n(n-1) m_{n-2} + (cn/2) Σ_{k=0}^{n-2} m_k m_{n-2-k}`;
/// * Laguerre: `n(α+n-1) m_{n-1} + cn Σ_{k=0}^{n-1} m_k m_{n-1-k}`.
pub fn m_curve_rhs(table: &MomentTable, n: usize, t: f64) -> Result<f64> {
    table.get(n)?;
    if n == 0 {
        return Ok(0.0);
    }
    let m = |k: usize| m_curve(table, k, t);
    let c = table.c();
    let nf = n as f64;
    match table.ensemble() {
        Ensemble::Gaussian { .. } => {
            if n < 2 {
                return Ok(0.0);
            }
            let mut conv = 0.0;
            for k in 0..=n - 2 {
                conv += m(k)? * m(n - 2 - k)?;
            }
            Ok(0.5 * nf * (nf - 1.0) * m(n - 2)? + 0.5 * c * nf * conv)
        }
        Ensemble::Laguerre { alpha, .. } => {
            let mut conv = 0.0;
            for k in 0..n {
                conv += m(k)? * m(n - 1 - k)?;
            }
            Ok(nf * (alpha + nf - 1.0) * m(n - 1)? + c * nf * conv)
        }
    }
}

fn check_eta_args(k: usize, l: usize, s: f64, t: f64) -> Result<()> {
    if k == 0 || l == 0 {
        return Err(Error::invalid("η indices start at 1"));
    }
    if !(s >= 0.0 && t >= 0.0) {
        return Err(Error::invalid("times must be nonnegative"));
    }
    Ok(())
}

fn require_kind(table: &MomentTable, expected: EnsembleKind) -> Result<()> {
    if table.kind() == expected {
        Ok(())
    } else {
        Err(Error::WrongKind {
            expected: expected.as_str(),
            got: table.kind().as_str(),
        })
    }
}

/// `Cov(η_k(s), η_l(t)) = ∫_0^{s∧t} k l m_{k+l-2}(u) du` in closed form.
pub fn eta_cov_gaussian(k: usize, l: usize, s: f64, t: f64, table: &MomentTable) -> Result<f64> {
    require_kind(table, EnsembleKind::Gaussian)?;
    check_eta_args(k, l, s, t)?;
    let u = table.get(k + l - 2)?;
    if (k + l) % 2 == 1 {
        return Ok(0.0);
    }
    let p = (k + l) as f64;
    Ok((k * l) as f64 * u * s.min(t).powf(0.5 * p) * 2.0 / p)
}

/// `Cov(η_k(s), η_l(t)) = 2 ∫_0^{s∧t} k l m_{k+l-1}(u) du` in closed form.
pub fn eta_cov_laguerre(k: usize, l: usize, s: f64, t: f64, table: &MomentTable) -> Result<f64> {
    require_kind(table, EnsembleKind::Laguerre)?;
    check_eta_args(k, l, s, t)?;
    let u = table.get(k + l - 1)?;
    let p = (k + l) as f64;
    Ok(2.0 * (k * l) as f64 * u * s.min(t).powf(p) / p)
}

/// Identifies one coordinate of the limiting Gaussian system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Process {
    Eta(usize),
    Xi(usize),
}

/// Covariance kernel of `(η_1..η_n, ξ_1..ξ_n)` on a time grid.
///
/// Writing `Y = (η, ξ)`, the system is `dY = Ã Y dt + G dη` with
/// `G = [I; I]`. With `Φ` the (discrete) fundamental matrix and
/// `Q(t) = ∫_0^t Φ^{-1} G Σ Gᵀ Φ^{-ᵀ}`, `Cov(Y(t_i), Y(t_j)) = Φ_i Q_{i∧j} Φ_jᵀ`.
/// Only `Φ_i` and `Q_i` are stored; blocks are assembled on request.
#[derive(Debug)]
pub struct CovGrid {
    table: MomentTable,
    nmax: usize,
    grid: Vec<f64>,
    phi: Vec<DMatrix<f64>>,
    q: Vec<DMatrix<f64>>,
    marginals: OnceLock<Vec<DMatrix<f64>>>,
}

impl CovGrid {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    pub fn table(&self) -> &MomentTable {
        &self.table
    }

    fn slot(&self, p: Process) -> Result<Option<usize>> {
        let (k, offset) = match p {
            Process::Eta(k) => (k, 0),
            Process::Xi(k) => (k, self.nmax),
        };
        if k > self.nmax {
            return Err(Error::DegreeExceeded {
                degree: k,
                max: self.nmax,
            });
        }
        // η_0 and ξ_0 vanish identically.
        Ok(if k == 0 { None } else { Some(offset + k - 1) })
    }

    /// Grid index of time `t`, matched to a relative tolerance of `1e-9`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let scale = self.grid.last().copied().unwrap_or(1.0).max(1.0);
        let i = self.grid.partition_point(|&g| g < t - 1e-9 * scale);
        if i < self.grid.len() && (self.grid[i] - t).abs() <= 1e-9 * scale {
            Ok(i)
        } else {
            Err(Error::InvalidGrid(format!("time {t} is not a grid point")))
        }
    }

    /// Full state covariance `Cov(Y(t_i), Y(t_j))`.
    pub fn state_cov(&self, i: usize, j: usize) -> Result<DMatrix<f64>> {
        let last = self.grid.len() - 1;
        for idx in [i, j] {
            if idx > last {
                return Err(Error::OutOfRange {
                    index: idx,
                    max: last,
                });
            }
        }
        Ok(&self.phi[i] * &self.q[i.min(j)] * self.phi[j].transpose())
    }

    /// Marginal covariance `Var Y(t_i)`, cached.
    pub fn state_var(&self, i: usize) -> Result<&DMatrix<f64>> {
        let cache = self.marginals.get_or_init(|| {
            (0..self.grid.len())
                .map(|i| &self.phi[i] * &self.q[i] * self.phi[i].transpose())
                .collect()
        });
        cache.get(i).ok_or(Error::OutOfRange {
            index: i,
            max: self.grid.len() - 1,
        })
    }

    /// `Cov(X_a(t_i), X_b(t_j))`.
    pub fn cov(&self, a: Process, i: usize, b: Process, j: usize) -> Result<f64> {
        let (sa, sb) = (self.slot(a)?, self.slot(b)?);
        let (Some(sa), Some(sb)) = (sa, sb) else {
            return Ok(0.0);
        };
        if i == j {
            return Ok(self.state_var(i)?[(sa, sb)]);
        }
        let (lo, hi) = (i.min(j), i.max(j));
        if hi >= self.grid.len() {
            return Err(Error::OutOfRange {
                index: hi,
                max: self.grid.len() - 1,
            });
        }
        // Row of Φ_i Q_{lo} times column of Φ_jᵀ.
        let qlo = &self.q[lo];
        let row = self.phi[i].row(sa) * qlo;
        Ok((row * self.phi[j].row(sb).transpose())[(0, 0)])
    }

    /// `(K+1) × (K+1)` matrix `Cov(X_a(t_i), X_b(t_j))`.
    pub fn block(&self, a: Process, b: Process) -> Result<DMatrix<f64>> {
        let n = self.grid.len();
        let (sa, sb) = (self.slot(a)?, self.slot(b)?);
        let (Some(sa), Some(sb)) = (sa, sb) else {
            return Ok(DMatrix::zeros(n, n));
        };
        // Cov = Σ over i∧j of (Φ_i Q_{i∧j})_{sa,·} (Φ_j)_{sb,·}.
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let m = i.min(j);
                let left = self.phi[i].row(sa) * &self.q[m];
                out[(i, j)] = left.dot(&self.phi[j].row(sb));
            }
        }
        Ok(out)
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidGrid("grid needs at least two points".into()));
    }
    if grid[0] != 0.0 {
        return Err(Error::InvalidGrid(format!(
            "grid must start at 0, starts at {}",
            grid[0]
        )));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || !grid.iter().all(|g| g.is_finite()) {
        return Err(Error::InvalidGrid(
            "grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `K` equal steps on `[0, T]` (`K+1` points).
pub fn uniform_grid(t_end: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "need >= 2 points on (0, T], got {points} on T={t_end}"
        )));
    }
    let k = (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                t_end
            } else {
                t_end * i as f64 / k
            }
        })
        .collect())
}

/// Default grid resolution for [`xi_cov`].
pub const DEFAULT_GRID_POINTS: usize = 2001;

/// Drift `A(t)` of `ξ` (strictly lower triangular, index `k ↔ ξ_{k+1}`).
fn xi_drift(table: &MomentTable, nmax: usize, t: f64) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(nmax, nmax);
    let c = table.c();
    let m = |j: usize| {
        if j == 0 {
            1.0
        } else {
            table.u[j] * time_power(table.kind(), j, t)
        }
    };
    for n in 1..=nmax {
        let nf = n as f64;
        match table.ensemble() {
            Ensemble::Gaussian { .. } => {
                // cn Σ_{j=0}^{n-2} m_j ξ_{n-2-j} + ½n(n-1) ξ_{n-2}
                if n >= 3 {
                    a[(n - 1, n - 3)] += 0.5 * nf * (nf - 1.0);
                    for j in 0..=n - 3 {
                        a[(n - 1, n - 3 - j)] += c * nf * m(j);
                    }
                }
            }
            Ensemble::Laguerre { alpha, .. } => {
                // n(α+n-1) ξ_{n-1} + 2cn Σ_{i=0}^{n-2} m_i ξ_{n-1-i}
                if n >= 2 {
                    a[(n - 1, n - 2)] += nf * (alpha + nf - 1.0);
                    for i in 0..=n - 2 {
                        a[(n - 1, n - 2 - i)] += 2.0 * c * nf * m(i);
                    }
                }
            }
        }
    }
    a
}

/// Instantaneous covariance `Σ(t)` of `dη`.
fn eta_rate(table: &MomentTable, nmax: usize, t: f64) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(nmax, nmax);
    for k in 1..=nmax {
        for l in 1..=nmax {
            s[(k - 1, l - 1)] = match table.kind() {
                EnsembleKind::Gaussian => {
                    let p = k + l - 2;
                    if p % 2 == 1 {
                        0.0
                    } else {
                        (k * l) as f64 * table.u[p] * t.powi((p / 2) as i32)
                    }
                }
                EnsembleKind::Laguerre => {
                    let p = k + l - 1;
                    2.0 * (k * l) as f64 * table.u[p] * t.powi(p as i32)
                }
            };
        }
    }
    s
}

/// Covariance of `(η_1..η_nmax, ξ_1..ξ_nmax)` on `grid`, propagated with the
/// trapezoid rule.
pub fn xi_cov(ensemble: &Ensemble, nmax: usize, grid: &[f64]) -> Result<CovGrid> {
    validate_grid(grid)?;
    if nmax == 0 {
        return Err(Error::invalid("nmax must be at least 1"));
    }
    let table = moment_table(ensemble, 2 * nmax)?;
    let d = 2 * nmax;

    let augmented = |t: f64| {
        let mut full = DMatrix::zeros(d, d);
        full.view_mut((nmax, nmax), (nmax, nmax))
            .copy_from(&xi_drift(&table, nmax, t));
        full
    };
    let forcing = |t: f64| {
        let s = eta_rate(&table, nmax, t);
        let mut full = DMatrix::zeros(d, d);
        for (r0, c0) in [(0, 0), (0, nmax), (nmax, 0), (nmax, nmax)] {
            full.view_mut((r0, c0), (nmax, nmax)).copy_from(&s);
        }
        full
    };
    let eye = DMatrix::<f64>::identity(d, d);
    let lower_inverse = |m: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        m.solve_lower_triangular(&eye)
            .ok_or_else(|| Error::Numeric("singular propagator".into()))
    };
    let pulled_back = |phi_inv: &DMatrix<f64>, t: f64| phi_inv * forcing(t) * phi_inv.transpose();

    let k = grid.len();
    let mut phi = Vec::with_capacity(k);
    let mut q = Vec::with_capacity(k);
    let mut phi_cur = eye.clone();
    let mut phi_inv = eye.clone();
    let mut a_prev = augmented(grid[0]);
    let mut f_prev = pulled_back(&phi_inv, grid[0]);
    let mut q_cur = DMatrix::zeros(d, d);
    phi.push(phi_cur.clone());
    q.push(q_cur.clone());
    for w in grid.windows(2) {
        let h = w[1] - w[0];
        let a_next = augmented(w[1]);
        let implicit = &eye - &a_next * (0.5 * h);
        let explicit = &eye + &a_prev * (0.5 * h);
        let step = implicit
            .solve_lower_triangular(&explicit)
            .ok_or_else(|| Error::Numeric("singular Crank-Nicolson step".into()))?;
        phi_cur = &step * &phi_cur;
        phi_inv = &phi_inv * lower_inverse(&step)?;
        let f_next = pulled_back(&phi_inv, w[1]);
        q_cur += (&f_prev + &f_next) * (0.5 * h);
        if !q_cur.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("covariance propagation overflowed".into()));
        }
        phi.push(phi_cur.clone());
        q.push(q_cur.clone());
        a_prev = a_next;
        f_prev = f_next;
    }
    Ok(CovGrid {
        table,
        nmax,
        grid: grid.to_vec(),
        phi,
        q,
        marginals: OnceLock::new(),
    })
}

/// `Cov(⟨ξ, f⟩(s), ⟨ξ, g⟩(t))` for bivariate polynomials
/// `f = Σ a_{jk} t^j x^k`, with `s` and `t` on the grid.
pub fn stat_cov(
    f: &BivariatePoly,
    g: &BivariatePoly,
    grid: &CovGrid,
    s: f64,
    t: f64,
) -> Result<f64> {
    for p in [f, g] {
        let deg = p.x_degree();
        if deg > grid.nmax() {
            return Err(Error::DegreeExceeded {
                degree: deg,
                max: grid.nmax(),
            });
        }
    }
    let (i, j) = (grid.index_of(s)?, grid.index_of(t)?);
    let fc = DVector::from_vec(f.x_coeffs_at(grid.grid[i]));
    let gc = DVector::from_vec(g.x_coeffs_at(grid.grid[j]));
    let mut total = 0.0;
    for (k, &a) in fc.iter().enumerate().skip(1) {
        if a == 0.0 {
            continue;
        }
        for (l, &b) in gc.iter().enumerate().skip(1) {
            if b != 0.0 {
                total += a * b * grid.cov(Process::Xi(k), i, Process::Xi(l), j)?;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::PolyFamilyParams;
    use crate::poly::Rational;
    use num::One;
    use proptest::prelude::*;

    #[test]
    fn gaussian_table_examples() {
        assert_eq!(
            gaussian_u(0.0, 6).unwrap().u(),
            &[1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0]
        );
        let t = gaussian_u(1.0, 4).unwrap();
        assert_eq!((t.u()[2], t.u()[4]), (2.0, 10.0));
        assert_eq!(gaussian_u(2.7, 3).unwrap().u()[1], 0.0);
        assert!(gaussian_u(-1.0, 3).is_err());
        assert_eq!(gaussian_u(1.0, 0).unwrap().u(), &[1.0]);
    }

    #[test]
    fn laguerre_table_examples() {
        assert_eq!(
            laguerre_u(1.0, 0.0, 4).unwrap().u(),
            &[1.0, 1.0, 2.0, 6.0, 24.0]
        );
        let t = laguerre_u(1.0, 1.0, 3).unwrap();
        assert_eq!(&t.u()[1..], &[2.0, 8.0, 44.0]);
        assert_eq!(laguerre_u(1.7, 0.4, 1).unwrap().u()[1], 1.7 + 0.4);
        assert!(laguerre_u(0.5, 1.0, 3).is_err());
        assert!(laguerre_u(1.0, -0.1, 3).is_err());
    }

    #[test]
    fn table_invariants_hold_on_grid() {
        for c in [0.0, 0.5, 1.0, 3.0] {
            let t = gaussian_u(c, 20).unwrap();
            for (n, &u) in t.u().iter().enumerate() {
                if n % 2 == 1 {
                    assert_eq!(u, 0.0);
                } else {
                    assert!(u > 0.0);
                }
            }
            for alpha in [0.75, 1.0, 2.0] {
                let t = laguerre_u(alpha, c, 20).unwrap();
                for n in 1..=20 {
                    assert!(t.u()[n] >= (alpha + n as f64 - 1.0) * t.u()[n - 1]);
                }
            }
        }
    }

    #[test]
    fn c_zero_gives_classical_moments() {
        let g = gaussian_u(0.0, 16).unwrap();
        let mut dfact = 1.0;
        for n in (2..=16).step_by(2) {
            dfact *= (n - 1) as f64;
            assert!((g.u()[n] - dfact).abs() <= 1e-12 * dfact);
        }
        let alpha = 1.3;
        let l = laguerre_u(alpha, 0.0, 12).unwrap();
        let mut rising = 1.0;
        for n in 1..=12 {
            rising *= alpha + (n - 1) as f64;
            assert!((l.u()[n] - rising).abs() <= 1e-12 * rising);
        }
    }

    #[test]
    fn m_curve_examples() {
        let g = gaussian_u(1.0, 4).unwrap();
        assert_eq!(m_curve(&g, 2, 3.0).unwrap(), 6.0);
        assert_eq!(m_curve(&g, 0, 0.0).unwrap(), 1.0);
        let l = laguerre_u(1.0, 1.0, 3).unwrap();
        assert_eq!(m_curve(&l, 1, 2.0).unwrap(), 4.0);
        assert_eq!(m_curve(&l, 0, 5.0).unwrap(), 1.0);
        assert!(matches!(
            m_curve(&l, 4, 1.0),
            Err(Error::OutOfRange { index: 4, max: 3 })
        ));
        assert!(m_curve(&l, 1, -1.0).is_err());
    }

    #[test]
    fn m_curve_solves_moment_odes() {
        let tables = [
            gaussian_u(0.8, 10).unwrap(),
            laguerre_u(1.5, 0.7, 10).unwrap(),
        ];
        for table in &tables {
            for n in 1..=10 {
                for &t in &[0.5, 1.0, 1.7] {
                    let rhs = m_curve_rhs(table, n, t).unwrap();
                    let mut errs = Vec::new();
                    for &h in &[1e-3, 1e-4] {
                        let fd = (m_curve(table, n, t + h).unwrap()
                            - m_curve(table, n, t - h).unwrap())
                            / (2.0 * h);
                        errs.push((fd - rhs).abs() / rhs.abs().max(1.0));
                    }
                    // Central differences: O(h²) until roundoff.
                    assert!(errs[0] < 1e-4, "{:?} n={n} t={t}: {errs:?}", table.kind());
                    assert!(errs[1] <= errs[0] * 0.05 || errs[1] < 1e-7, "{errs:?}");
                }
            }
        }
    }

    #[test]
    fn eta_cov_examples() {
        let g = gaussian_u(1.0, 8).unwrap();
        assert!((eta_cov_gaussian(1, 1, 0.4, 0.9, &g).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(eta_cov_gaussian(1, 2, 0.4, 0.9, &g).unwrap(), 0.0);
        assert!((eta_cov_gaussian(2, 2, 1.0, 1.0, &g).unwrap() - 4.0).abs() < 1e-14);
        let l = laguerre_u(1.0, 1.0, 8).unwrap();
        assert!((eta_cov_laguerre(1, 1, 1.0, 1.0, &l).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(eta_cov_laguerre(1, 1, 0.0, 1.0, &l).unwrap(), 0.0);
        let l0 = laguerre_u(1.0, 0.0, 4).unwrap();
        assert!((eta_cov_laguerre(1, 2, 1.0, 1.0, &l0).unwrap() - 8.0 / 3.0).abs() < 1e-14);
        assert!(matches!(
            eta_cov_laguerre(1, 1, 1.0, 1.0, &g),
            Err(Error::WrongKind { .. })
        ));
        assert!(eta_cov_gaussian(0, 1, 1.0, 1.0, &g).is_err());
    }

    #[test]
    fn grid_validation() {
        let e = Ensemble::gaussian(1.0).unwrap();
        assert!(xi_cov(&e, 2, &[]).is_err());
        assert!(xi_cov(&e, 2, &[0.0, 0.5, 0.5]).is_err());
        assert!(xi_cov(&e, 2, &[0.1, 0.5]).is_err());
        assert!(uniform_grid(1.0, 1).is_err());
        let g = uniform_grid(2.0, 5).unwrap();
        assert_eq!(g, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn xi_cov_low_order_examples() {
        let c = 1.0;
        let e = Ensemble::gaussian(c).unwrap();
        let grid = uniform_grid(1.0, 201).unwrap();
        let cg = xi_cov(&e, 4, &grid).unwrap();
        let last = grid.len() - 1;
        let mid = 100;
        assert!((cg.cov(Process::Xi(1), last, Process::Xi(1), last).unwrap() - 1.0).abs() < 1e-12);
        assert!((cg.cov(Process::Xi(1), mid, Process::Xi(1), last).unwrap() - 0.5).abs() < 1e-12);
        let v2 = cg.cov(Process::Xi(2), last, Process::Xi(2), last).unwrap();
        assert!((v2 - 2.0 * (1.0 + c)).abs() < 1e-10);
        for p in [Process::Xi(1), Process::Xi(3), Process::Eta(2)] {
            assert_eq!(cg.cov(p, 0, Process::Xi(3), last).unwrap(), 0.0);
        }
        // Parity blocks decouple.
        assert!(
            cg.cov(Process::Xi(1), last, Process::Xi(2), last)
                .unwrap()
                .abs()
                < 1e-14
        );
        assert!(
            cg.cov(Process::Xi(4), mid, Process::Xi(3), last)
                .unwrap()
                .abs()
                < 1e-14
        );
        assert!(cg.cov(Process::Xi(5), last, Process::Xi(1), last).is_err());
    }

    #[test]
    fn eta_block_matches_closed_forms() {
        let grid = uniform_grid(1.0, 401).unwrap();
        for e in [
            Ensemble::gaussian(0.7).unwrap(),
            Ensemble::laguerre(1.5, 1.0).unwrap(),
        ] {
            let cg = xi_cov(&e, 3, &grid).unwrap();
            for (i, j) in [(100, 400), (400, 400), (250, 150)] {
                for k in 1..=3 {
                    for l in 1..=3 {
                        let (s, t) = (grid[i], grid[j]);
                        let exact = match e.kind() {
                            EnsembleKind::Gaussian => eta_cov_gaussian(k, l, s, t, cg.table()),
                            EnsembleKind::Laguerre => eta_cov_laguerre(k, l, s, t, cg.table()),
                        }
                        .unwrap();
                        let got = cg.cov(Process::Eta(k), i, Process::Eta(l), j).unwrap();
                        // Trapezoid error on the forcing integral is O(h²).
                        assert!(
                            (got - exact).abs() <= 1e-3 * exact.abs().max(1.0),
                            "{k},{l}: {got} vs {exact}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn diagonal_blocks_are_psd() {
        let grid = uniform_grid(1.0, 61).unwrap();
        for e in [
            Ensemble::gaussian(1.0).unwrap(),
            Ensemble::laguerre(1.0, 1.0).unwrap(),
        ] {
            let cg = xi_cov(&e, 4, &grid).unwrap();
            for n in 1..=4 {
                let b = cg.block(Process::Xi(n), Process::Xi(n)).unwrap();
                assert!((&b - b.transpose()).abs().max() <= 1e-12 * b.abs().max().max(1.0));
                let min_eig = b.symmetric_eigenvalues().min();
                assert!(
                    min_eig >= -1e-9 * b.abs().max().max(1.0),
                    "{:?} ξ_{n}: {min_eig}",
                    e.kind()
                );
            }
        }
    }

    fn primitive_target(e: &Ensemble, n: usize) -> f64 {
        let c = e.c();
        let prod: f64 = (1..=n)
            .map(|i| match e.alpha() {
                None => c + i as f64,
                Some(a) => (c + i as f64) * (a + c + i as f64),
            })
            .product();
        e.alpha().map_or(1.0, |a| a + c) * prod / (n + 1) as f64
    }

    #[test]
    fn primitive_statistics_are_diagonal() {
        let grid = uniform_grid(1.0, 1001).unwrap();
        for e in [
            Ensemble::gaussian(1.0).unwrap(),
            Ensemble::laguerre(1.0, 1.0).unwrap(),
        ] {
            let fam = PolyFamilyParams::for_ensemble(&e).unwrap();
            let cg = xi_cov(&e, 5, &grid).unwrap();
            let prims: Vec<_> = (1..=4).map(|n| fam.scaled_primitive(n).unwrap()).collect();
            for (a, pa) in prims.iter().enumerate() {
                for (b, pb) in prims.iter().enumerate() {
                    let v = stat_cov(pa, pb, &cg, 1.0, 1.0).unwrap();
                    if a == b {
                        let target = primitive_target(&e, a + 1);
                        assert!(
                            (v - target).abs() <= 1e-5 * target,
                            "{:?} n={}: {v} vs {target}",
                            e.kind(),
                            a + 1
                        );
                    } else {
                        assert!(
                            v.abs() <= 1e-5 * primitive_target(&e, 4),
                            "{:?} ({a},{b}): {v}",
                            e.kind()
                        );
                    }
                }
            }
            // Process level: (s∧t)^{n+1} resp. (s∧t)^{2n+2}.
            let s = 0.5;
            let v = stat_cov(&prims[1], &prims[1], &cg, s, 1.0).unwrap();
            let pow = if e.alpha().is_some() { 6 } else { 3 };
            assert!((v - primitive_target(&e, 2) * s.powi(pow)).abs() < 1e-5);
        }
    }

    #[test]
    fn grid_error_shrinks_under_refinement() {
        let e = Ensemble::laguerre(1.0, 1.0).unwrap();
        let fam = PolyFamilyParams::for_ensemble(&e).unwrap();
        let p3 = fam.scaled_primitive(3).unwrap();
        let target = primitive_target(&e, 3);
        let errs: Vec<f64> = [101, 201, 401]
            .iter()
            .map(|&k| {
                let cg = xi_cov(&e, 4, &uniform_grid(1.0, k).unwrap()).unwrap();
                (stat_cov(&p3, &p3, &cg, 1.0, 1.0).unwrap() - target).abs()
            })
            .collect();
        assert!(
            errs[1] < 0.5 * errs[0] && errs[2] < 0.5 * errs[1],
            "{errs:?}"
        );
    }

    #[test]
    fn stat_cov_examples() {
        let e = Ensemble::gaussian(1.0).unwrap();
        let cg = xi_cov(&e, 3, &uniform_grid(1.0, 101).unwrap()).unwrap();
        let fam = PolyFamilyParams::gaussian(Rational::one()).unwrap();
        let p1 = fam.scaled_primitive(1).unwrap();
        assert!((stat_cov(&p1, &p1, &cg, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-10);
        let x = BivariatePoly::monomial(1);
        let x2 = BivariatePoly::monomial(2);
        assert!(stat_cov(&x, &x2, &cg, 0.3, 1.0).unwrap().abs() < 1e-14);
        assert!((stat_cov(&x, &x, &cg, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            stat_cov(&BivariatePoly::monomial(4), &x, &cg, 1.0, 1.0),
            Err(Error::DegreeExceeded { degree: 4, max: 3 })
        ));
        assert!(stat_cov(&x, &x, &cg, 0.333, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn prop_gaussian_recurrence_matches_jacobi(c in 0.0f64..4.0) {
            let t = gaussian_u(c, 12).unwrap();
            let j = crate::spectral::jacobi_gaussian(c, 8).unwrap();
            let s = crate::spectral::spectral_moments(&j, 12).unwrap();
            for n in 0..=12 {
                prop_assert!((t.u()[n] - s[n]).abs() <= 1e-10 * s[n].abs().max(1.0));
            }
        }

        #[test]
        fn prop_laguerre_recurrence_matches_jacobi(alpha in 0.6f64..4.0, c in 0.0f64..4.0) {
            let t = laguerre_u(alpha, c, 12).unwrap();
            let j = crate::spectral::jacobi_laguerre_ii(alpha, c, 8).unwrap();
            let s = crate::spectral::spectral_moments(&j, 12).unwrap();
            for n in 0..=12 {
                prop_assert!((t.u()[n] - s[n]).abs() <= 1e-10 * s[n]);
            }
        }

        #[test]
        fn prop_cov_grid_symmetric(i in 0usize..41, j in 0usize..41, k in 1usize..4, l in 1usize..4) {
            let grid = uniform_grid(1.0, 41).unwrap();
            let cg = xi_cov(&Ensemble::laguerre(1.2, 0.5).unwrap(), 3, &grid).unwrap();
            let a = cg.cov(Process::Xi(k), i, Process::Xi(l), j).unwrap();
            let b = cg.cov(Process::Xi(l), j, Process::Xi(k), i).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}
