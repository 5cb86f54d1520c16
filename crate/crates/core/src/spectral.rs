//! Jacobi matrices and their spectral measures.
//!
//! Three families are covered:
//!
//! * `ν_c` (associated Hermite): zero diagonal, off-diagonal `√(c+n)`;
//! * `ν_{α,c}` (associated Laguerre, Model II): `J = L Lᵀ` with `L` lower
//!   bidiagonal, diagonal `c_n = √(α+c+n-1)`, subdiagonal `d_n = √(c+n)`;
//! * `ν̃_{α,c} = x ν_{α,c}(dx) / (α+c)` (Model I), whose Jacobi matrix has
//!   diagonal `c_{n+1}^2 + d_{n-1}^2` (with `d_0^2 = c`) and off-diagonal
//!   `c_{n+1} d_n`.
//!
//! Moments are `J^n(1,1)`, quadrature comes from the truncated eigensystem,
//! and the `ν_c` density is evaluated from its Fourier-integral formula.

use serde::Serialize;
use statrs::function::gamma::{gamma, gamma_ur};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::linalg;
use crate::params::{check_alpha, check_c};
use crate::quad::{self, QuadOptions};

/// Symmetric tridiagonal matrix with positive couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiMatrix {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl JacobiMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::invalid("Jacobi matrix needs dimension >= 1"));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::invalid(format!(
                "expected {} off-diagonal entries, got {}",
                diag.len() - 1,
                offdiag.len()
            )));
        }
        if !diag.iter().all(|v| v.is_finite()) || !offdiag.iter().all(|&b| b.is_finite() && b > 0.0)
        {
            return Err(Error::invalid(
                "diagonal must be finite and off-diagonal strictly positive",
            ));
        }
        Ok(JacobiMatrix { diag, offdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Leading `k × k` block.
    pub fn truncated(&self, k: usize) -> Result<JacobiMatrix> {
        if k == 0 || k > self.dim() {
            return Err(Error::InsufficientDimension {
                needed: k.max(1),
                got: self.dim(),
            });
        }
        Ok(JacobiMatrix {
            diag: self.diag[..k].to_vec(),
            offdiag: self.offdiag[..k - 1].to_vec(),
        })
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = self.diag[i] * v[i];
            if i > 0 {
                acc += self.offdiag[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                acc += self.offdiag[i] * v[i + 1];
            }
            out[i] = acc;
        }
    }
}

/// The three measure families, for callers that pick one at run time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SpectralFamily {
    Gaussian { c: f64 },
    LaguerreII { alpha: f64, c: f64 },
    LaguerreI { alpha: f64, c: f64 },
}

impl SpectralFamily {
    pub fn jacobi(&self, dim: usize) -> Result<JacobiMatrix> {
        match *self {
            SpectralFamily::Gaussian { c } => jacobi_gaussian(c, dim),
            SpectralFamily::LaguerreII { alpha, c } => jacobi_laguerre_ii(alpha, c, dim),
            SpectralFamily::LaguerreI { alpha, c } => jacobi_laguerre_i(alpha, c, dim),
        }
    }

    /// `⟨μ, x^n⟩` at the default truncation.
    pub fn moment(&self, n: usize) -> Result<f64> {
        spectral_moment(&self.jacobi(default_truncation(n))?, n)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::invalid("dimension must be >= 1"))
    } else {
        Ok(())
    }
}

pub fn jacobi_gaussian(c: f64, dim: usize) -> Result<JacobiMatrix> {
    check_c(c)?;
    check_dim(dim)?;
    let off = (1..dim).map(|n| (c + n as f64).sqrt()).collect();
    JacobiMatrix::new(vec![0.0; dim], off)
}

/// `J_{α,c}` for `ν_{α,c}` (Model II).
pub fn jacobi_laguerre_ii(alpha: f64, c: f64, dim: usize) -> Result<JacobiMatrix> {
    check_alpha(alpha)?;
    check_c(c)?;
    check_dim(dim)?;
    let cn2 = |n: usize| alpha + c + (n - 1) as f64;
    let dn2 = |n: usize| c + n as f64;
    let diag = (1..=dim)
        .map(|n| if n == 1 { cn2(1) } else { cn2(n) + dn2(n - 1) })
        .collect();
    let off = (1..dim).map(|n| (cn2(n) * dn2(n)).sqrt()).collect();
    JacobiMatrix::new(diag, off)
}

/// `J̃_{α,c}` for `ν̃_{α,c}` (Model I).
pub fn jacobi_laguerre_i(alpha: f64, c: f64, dim: usize) -> Result<JacobiMatrix> {
    check_alpha(alpha)?;
    check_c(c)?;
    check_dim(dim)?;
    let cn2 = |n: usize| alpha + c + (n - 1) as f64;
    let dn2 = |n: usize| c + n as f64;
    let diag = (1..=dim).map(|n| cn2(n + 1) + dn2(n - 1)).collect();
    let off = (1..dim).map(|n| (cn2(n + 1) * dn2(n)).sqrt()).collect();
    JacobiMatrix::new(diag, off)
}

/// Smallest truncation for which `J^n(1,1)` is exact, plus one row of slack.
pub fn default_truncation(n: usize) -> usize {
    n / 2 + 2
}

/// `J^n(1,1)`. Requires `dim ≥ ⌊n/2⌋ + 1`, beyond which the truncation does
/// not touch the (1,1) entry.
pub fn spectral_moment(j: &JacobiMatrix, n: usize) -> Result<f64> {
    Ok(*spectral_moments(j, n)?.last().expect("nonempty"))
}

/// `J^k(1,1)` for `k = 0..=nmax`.
pub fn spectral_moments(j: &JacobiMatrix, nmax: usize) -> Result<Vec<f64>> {
    let needed = nmax / 2 + 1;
    if j.dim() < needed {
        return Err(Error::InsufficientDimension {
            needed,
            got: j.dim(),
        });
    }
    let mut v = vec![0.0; j.dim()];
    v[0] = 1.0;
    let mut next = vec![0.0; j.dim()];
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(1.0);
    for _ in 0..nmax {
        j.apply(&v, &mut next);
        std::mem::swap(&mut v, &mut next);
        out.push(v[0]);
    }
    Ok(out)
}

/// Discrete probability measure: increasing nodes, positive weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `k`-point Gauss rule of the spectral measure (exact through degree `2k-1`).
pub fn gauss_quadrature(j: &JacobiMatrix, k: usize) -> Result<Quadrature> {
    if k == 0 {
        return Err(Error::invalid("quadrature needs at least one node"));
    }
    let block = j.truncated(k)?;
    let (nodes, first) = linalg::tridiagonal_eigen_first(block.diag(), block.offdiag())?;
    let weights: Vec<f64> = first.iter().map(|z| z * z).collect();
    if nodes.windows(2).any(|w| w[1] <= w[0]) || weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::Numeric(format!("degenerate {k}-point rule")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Numeric(format!("quadrature weights sum to {total}")));
    }
    Ok(Quadrature { nodes, weights })
}

/// Point where `t^{c-1} e^{-t^2/2}` drops below `1e-16` (never below 1).
fn fourier_cutoff(c: f64) -> f64 {
    let log_f = |t: f64| (c - 1.0) * t.ln() - 0.5 * t * t;
    let threshold = 1e-16f64.ln();
    let mut t = 1.0;
    while log_f(t) >= threshold {
        t += 0.05;
    }
    t
}

/// `∫_0^∞ t^{c-1} e^{-t²/2} e^{ixt} dt` as `(re, im)`.
///
/// The integral is split at `t = 1`; for `c < 1` the first panel is taken in
/// `s = t^c`, which removes the endpoint singularity.
pub fn fourier_integral(x: f64, c: f64, quad_tol: f64) -> Result<(f64, f64)> {
    if !(c > 0.0) {
        return Err(Error::invalid(format!("density needs c > 0, got {c}")));
    }
    let opts = QuadOptions {
        abs_tol: quad_tol * 1e-3,
        rel_tol: quad_tol,
        max_intervals: 4000,
    };
    let osc = |t: f64| {
        let g = (-0.5 * t * t).exp();
        let (s, co) = (x * t).sin_cos();
        [g * co, g * s]
    };
    let head = if c < 1.0 {
        let inv = 1.0 / c;
        quad::integrate(
            |s| {
                let v = osc(s.powf(inv));
                [v[0] * inv, v[1] * inv]
            },
            0.0,
            1.0,
            opts,
        )
    } else {
        quad::integrate(
            |t| {
                let w = t.powf(c - 1.0);
                let v = osc(t);
                [w * v[0], w * v[1]]
            },
            0.0,
            1.0,
            opts,
        )
    };
    let tail = quad::integrate(
        |t| {
            let w = t.powf(c - 1.0);
            let v = osc(t);
            [w * v[0], w * v[1]]
        },
        1.0,
        fourier_cutoff(c),
        opts,
    );
    for (name, r) in [("head", &head), ("tail", &tail)] {
        if !r.converged {
            return Err(Error::Numeric(format!(
                "Fourier integral ({name}) at x={x} reached error {:.3e} only",
                r.error
            )));
        }
    }
    Ok((head.value[0] + tail.value[0], head.value[1] + tail.value[1]))
}

/// Density of `ν_c` at `x`, `c > 0`.
///
/// Both the Gaussian numerator and `|f̂_c|²` shrink quickly in `|x|`; values
/// are trustworthy for `|x| ≤ 8` and degrade past that.
pub fn density_nu_c(x: f64, c: f64, quad_tol: f64) -> Result<f64> {
    let (re, im) = fourier_integral(x, c, quad_tol)?;
    let modulus_sq = c / gamma(c) * (re * re + im * im);
    Ok((-0.5 * x * x).exp() / ((2.0 * PI).sqrt() * modulus_sq))
}

/// Highest moment order tabulated by [`density_moments`].
pub const DENSITY_MOMENT_ORDERS: usize = 9;

#[derive(Debug, Clone, Serialize)]
pub struct DensityMoments {
    pub c: f64,
    pub cutoff: f64,
    /// `∫_{|x|≤cutoff} x^k ν_c(x) dx`, `k = 0..=8`.
    pub moments: Vec<f64>,
    /// Outer quadrature error estimate (max over orders).
    pub quad_error: f64,
    /// Bound on `∫_{|x|>cutoff} |x|^k ν_c(x) dx` per order.
    pub tail_bound: Vec<f64>,
}

/// Moments of the `ν_c` density through order 8, truncated to `|x| ≤ cutoff`.
pub fn density_moments(c: f64, cutoff: f64, quad_tol: f64) -> Result<DensityMoments> {
    let failure = std::cell::RefCell::new(None);
    let integrand = |x: f64| {
        let mut out = [0.0; DENSITY_MOMENT_ORDERS];
        match density_nu_c(x, c, quad_tol) {
            Ok(rho) => {
                let mut p = rho;
                for slot in out.iter_mut() {
                    *slot = p;
                    p *= x;
                }
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
            }
        }
        out
    };
    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_intervals: 400,
    };
    let r = quad::integrate(integrand, -cutoff, cutoff, opts);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    if !r.converged && r.error > 1e-9 {
        return Err(Error::Numeric(format!(
            "moment quadrature stalled at error {:.3e}",
            r.error
        )));
    }
    let tail_bound = (0..DENSITY_MOMENT_ORDERS)
        .map(|k| nu_c_tail_bound(c, k, cutoff))
        .collect();
    Ok(DensityMoments {
        c,
        cutoff,
        moments: r.value.to_vec(),
        quad_error: r.error,
        tail_bound,
    })
}

/// Two-sided tail `∫_{|x|>L} |x|^k ν_c` from the large-`|x|` form
/// `ν_c(x) ≈ e^{-x²/2} |x|^{2c} / (√(2π) c Γ(c))`, doubled for margin.
pub fn nu_c_tail_bound(c: f64, k: usize, cutoff: f64) -> f64 {
    // ∫_L^∞ x^p e^{-x²/2} dx = 2^{(p-1)/2} Γ((p+1)/2, L²/2)
    let p = k as f64 + 2.0 * c;
    let a = 0.5 * (p + 1.0);
    let upper = 2f64.powf(0.5 * (p - 1.0)) * gamma(a) * gamma_ur(a, 0.5 * cutoff * cutoff);
    2.0 * 2.0 * upper / ((2.0 * PI).sqrt() * c * gamma(c))
}

/// `K_0(x, y) = ∫_0^1 (1-ρ²)^{-1/2} exp(-(ρ²(x²+y²) - 2ρxy) / (2(1-ρ²))) dρ`,
/// integrated in `ρ = sin θ`.
pub fn mehler_k0(x: f64, y: f64, tol: f64) -> Result<f64> {
    let integrand = |theta: f64| {
        let s = theta.sin();
        // 1 - sin θ without cancellation near π/2.
        let gap = 2.0 * (0.5 * (FRAC_PI_2 - theta)).sin().powi(2);
        let expo = -s * s * (x - y).powi(2) / (2.0 * gap * (1.0 + s)) + s * x * y / (1.0 + s);
        if expo.is_nan() {
            0.0
        } else {
            expo.exp()
        }
    };
    let opts = QuadOptions {
        abs_tol: tol,
        rel_tol: tol,
        max_intervals: 2000,
    };
    let r = quad::integrate_scalar(integrand, 0.0, FRAC_PI_2, opts);
    if !r.converged {
        return Err(Error::Numeric(format!(
            "Mehler integral at ({x}, {y}) stopped at {} with error {:.3e}",
            r.value[0], r.error
        )));
    }
    Ok(r.value[0])
}

/// `Σ_{n<nterms} p̃_n(x) p̃_n(y) / (n+1)` with orthonormal associated Hermite
/// polynomials `p̃_n`.
pub fn kernel_kc_partial(x: f64, y: f64, c: f64, nterms: usize) -> f64 {
    let (mut px_prev, mut py_prev) = (0.0, 0.0);
    let (mut px, mut py) = (1.0, 1.0);
    let mut sum = 0.0;
    for n in 0..nterms {
        sum += px * py / (n as f64 + 1.0);
        // √(n+1+c) p̃_{n+1} = x p̃_n - √(n+c) p̃_{n-1}
        let (b_next, b_cur) = ((n as f64 + 1.0 + c).sqrt(), (n as f64 + c).sqrt());
        let nx = (x * px - b_cur * px_prev) / b_next;
        let ny = (y * py - b_cur * py_prev) / b_next;
        px_prev = px;
        py_prev = py;
        px = nx;
        py = ny;
    }
    sum
}

/// Bound on `|K_0(x,y) - kernel_kc_partial(x, y, 0, nterms)|` from the
/// oscillatory-region envelope of Hermite functions,
/// `p̃_n(x)² ≤ (2/√π) e^{x²/2} / √(2n+1-x²/2)`, with a factor 2 of margin.
/// Returns infinity when `nterms` does not reach the oscillatory region.
pub fn k0_tail_bound(x: f64, y: f64, nterms: usize) -> f64 {
    let m2 = x.abs().max(y.abs()).powi(2);
    let a = 0.5 * m2;
    let start = nterms as f64;
    if 2.0 * start + 1.0 - a <= 1.0 {
        return f64::INFINITY;
    }
    let amp = 2.0 / PI.sqrt() * (0.25 * (x * x + y * y)).exp();
    let term = |n: f64| 1.0 / ((n + 1.0) * (2.0 * n + 1.0 - a).sqrt());
    // Σ_{n≥M} g(n) ≤ g(M) + ∫_M^∞ g; with w = √(2n+1-a) the integral is
    // (2/√(1+a)) (π/2 - atan(w_M/√(1+a))).
    let w0 = (2.0 * start + 1.0 - a).sqrt();
    let root = (1.0 + a).sqrt();
    let integral = 2.0 / root * (FRAC_PI_2 - (w0 / root).atan());
    2.0 * amp * (term(start) + integral)
}

/// Verifies `(α+c)·H^n(1,1) = J^{n+1}(1,1)` for `n ≤ nmax`, where `J` and `H`
/// are the Model II and Model I Jacobi matrices.
pub fn check_shift_identity(alpha: f64, c: f64, nmax: usize, tol: f64) -> Result<bool> {
    let dim = default_truncation(nmax + 1);
    let j = spectral_moments(&jacobi_laguerre_ii(alpha, c, dim)?, nmax + 1)?;
    let h = spectral_moments(&jacobi_laguerre_i(alpha, c, dim)?, nmax)?;
    let c1_sq = alpha + c;
    Ok((0..=nmax).all(|n| (c1_sq * h[n] - j[n + 1]).abs() <= tol * j[n + 1].abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_examples() {
        let g = jacobi_gaussian(1.0, 2).unwrap();
        assert_eq!(g.diag(), &[0.0, 0.0]);
        assert_eq!(g.offdiag(), &[2f64.sqrt()]);
        assert_eq!(
            jacobi_gaussian(0.0, 3).unwrap().offdiag(),
            &[1.0, 2f64.sqrt()]
        );
        assert_eq!(jacobi_gaussian(3.0, 1).unwrap().diag(), &[0.0]);

        let l2 = jacobi_laguerre_ii(1.0, 1.0, 3).unwrap();
        assert_eq!(l2.diag()[0], 2.0);
        assert_eq!(l2.diag()[1], 5.0);
        assert_eq!(jacobi_laguerre_ii(1.7, 0.0, 2).unwrap().diag()[0], 1.7);

        let l1 = jacobi_laguerre_i(1.0, 1.0, 3).unwrap();
        assert_eq!(l1.diag()[0], 4.0);
        assert!((l1.offdiag()[0] - 6f64.sqrt()).abs() < 1e-15);
        assert!((jacobi_laguerre_i(1.7, 0.0, 2).unwrap().diag()[0] - 2.7).abs() < 1e-15);
    }

    #[test]
    fn jacobi_rejects_bad_input() {
        assert!(jacobi_gaussian(-0.1, 3).is_err());
        assert!(jacobi_gaussian(1.0, 0).is_err());
        assert!(jacobi_laguerre_ii(0.5, 1.0, 3).is_err());
        assert!(jacobi_laguerre_i(1.0, -1.0, 3).is_err());
        assert!(JacobiMatrix::new(vec![0.0, 0.0], vec![0.0]).is_err());
        assert!(JacobiMatrix::new(vec![0.0, 0.0], vec![]).is_err());
    }

    #[test]
    fn moment_examples() {
        let c = 1.3;
        let g = jacobi_gaussian(c, 4).unwrap();
        assert!((spectral_moment(&g, 2).unwrap() - (c + 1.0)).abs() < 1e-14);
        assert_eq!(spectral_moment(&g, 0).unwrap(), 1.0);
        assert_eq!(
            spectral_moment(&jacobi_laguerre_ii(1.0, 1.0, 2).unwrap(), 1).unwrap(),
            2.0
        );
        assert!(matches!(
            spectral_moment(&g, 9),
            Err(Error::InsufficientDimension { needed: 5, got: 4 })
        ));
    }

    #[test]
    fn truncation_does_not_change_exact_moments() {
        let small = spectral_moments(&jacobi_gaussian(0.7, 7).unwrap(), 12).unwrap();
        let big = spectral_moments(&jacobi_gaussian(0.7, 30).unwrap(), 12).unwrap();
        assert_eq!(small, big);
    }

    #[test]
    fn quadrature_examples() {
        let q = gauss_quadrature(&jacobi_gaussian(2.0, 5).unwrap(), 1).unwrap();
        assert_eq!(q.nodes, vec![0.0]);
        assert_eq!(q.weights, vec![1.0]);
        let q = gauss_quadrature(&jacobi_gaussian(1.0, 8).unwrap(), 8).unwrap();
        assert!((q.integrate(|x| x * x) - 2.0).abs() < 1e-10);
        let q = gauss_quadrature(&jacobi_laguerre_i(1.0, 1.0, 8).unwrap(), 8).unwrap();
        assert!((q.integrate(|x| (x - 4.0).powi(2)) - 6.0).abs() < 1e-10);
        assert!(gauss_quadrature(&jacobi_gaussian(1.0, 3).unwrap(), 4).is_err());
        assert!(gauss_quadrature(&jacobi_gaussian(1.0, 3).unwrap(), 0).is_err());
    }

    #[test]
    fn quadrature_is_exact_to_degree_2k_minus_1() {
        for fam in [
            SpectralFamily::Gaussian { c: 0.5 },
            SpectralFamily::LaguerreII { alpha: 1.5, c: 2.0 },
            SpectralFamily::LaguerreI { alpha: 2.0, c: 0.0 },
        ] {
            for k in 1..=7 {
                let q = gauss_quadrature(&fam.jacobi(k).unwrap(), k).unwrap();
                let exact = spectral_moments(&fam.jacobi(k + 1).unwrap(), 2 * k - 1).unwrap();
                for (m, &e) in exact.iter().enumerate() {
                    let got = q.integrate(|x| x.powi(m as i32));
                    assert!(
                        (got - e).abs() <= 1e-9 * e.abs().max(1.0),
                        "{fam:?} k={k} m={m}"
                    );
                }
            }
        }
    }

    #[test]
    fn shift_identity_examples() {
        // n = 1 by hand: (α+c)(α+2c+1) = a_1² + b_1².
        let j = spectral_moments(&jacobi_laguerre_ii(1.0, 1.0, 3).unwrap(), 2).unwrap();
        assert!((j[2] - 8.0).abs() < 1e-14);
        for alpha in [1.0, 2.0] {
            for c in [0.0, 1.0, 5.0] {
                assert!(check_shift_identity(alpha, c, 10, 1e-10).unwrap());
            }
        }
        assert!(check_shift_identity(0.3, 1.0, 3, 1e-10).is_err());
    }

    #[test]
    fn mehler_examples() {
        assert!((mehler_k0(0.0, 0.0, 1e-12).unwrap() - FRAC_PI_2).abs() < 1e-10);
        let a = mehler_k0(0.4, -1.1, 1e-11).unwrap();
        let b = mehler_k0(-1.1, 0.4, 1e-11).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn kernel_partial_examples() {
        assert_eq!(kernel_kc_partial(0.3, -2.0, 1.5, 1), 1.0);
        assert!((kernel_kc_partial(0.0, 0.0, 0.0, 2) - 1.0).abs() < 1e-15);
        let expect = 1.0 + 1.0 / 6.0 + 3.0 / 40.0 + 5.0 / 112.0;
        assert!((kernel_kc_partial(0.0, 0.0, 0.0, 8) - expect).abs() < 1e-14);
    }

    #[test]
    fn mehler_series_agree_within_tail_bound() {
        let nterms = 20_000;
        for &x in &[-1.5, 0.0, 1.0] {
            for &y in &[-0.5, 0.7, 2.0] {
                let integral = mehler_k0(x, y, 1e-11).unwrap();
                let series = kernel_kc_partial(x, y, 0.0, nterms);
                let bound = k0_tail_bound(x, y, nterms);
                assert!(
                    (integral - series).abs() <= bound,
                    "({x},{y}): {integral} vs {series}"
                );
            }
        }
        assert!(k0_tail_bound(2.0, 2.0, 0).is_infinite());
    }

    #[test]
    fn density_rejects_nonpositive_c() {
        assert!(density_nu_c(0.0, 0.0, 1e-10).is_err());
    }

    #[test]
    fn density_at_origin_for_c_one() {
        // f̂_1(0) = √(π/2), so ν_1(0) = 2 / (π √(2π)).
        let expect = 2.0 / (PI * (2.0 * PI).sqrt());
        assert!((density_nu_c(0.0, 1.0, 1e-12).unwrap() - expect).abs() < 1e-12);
        // Evenness.
        let a = density_nu_c(1.7, 0.5, 1e-11).unwrap();
        let b = density_nu_c(-1.7, 0.5, 1e-11).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }
}
