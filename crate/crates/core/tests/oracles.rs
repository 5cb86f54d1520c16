//! Cross-module checks against closed forms.

use betaflow::moments::{self, uniform_grid};
use betaflow::poly::PolyFamilyParams;
use betaflow::spectral::{self, SpectralFamily};
use betaflow::stats;
use betaflow::{Ensemble, EnsembleKind};

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

#[test]
fn gaussian_c0_gives_double_factorials() {
    let u = moments::gaussian_u(0.0, 10).unwrap();
    assert_eq!(
        u.u(),
        &[1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0, 0.0, 105.0, 0.0, 945.0]
    );
}

#[test]
fn gaussian_c1_known_values() {
    let u = moments::gaussian_u(1.0, 6).unwrap();
    assert_eq!(u.u(), &[1.0, 0.0, 2.0, 0.0, 10.0, 0.0, 74.0]);
}

#[test]
fn laguerre_c0_gives_rising_factorials() {
    let u = moments::laguerre_u(2.0, 0.0, 5).unwrap();
    // α(α+1)…(α+n-1) at α = 2.
    assert_eq!(u.u(), &[1.0, 2.0, 6.0, 24.0, 120.0, 720.0]);
}

#[test]
fn gauss_rules_reproduce_moment_tables() {
    let families = [
        (
            SpectralFamily::Gaussian { c: 0.7 },
            moments::gaussian_u(0.7, 11).unwrap(),
        ),
        (
            SpectralFamily::LaguerreII { alpha: 1.5, c: 0.4 },
            moments::laguerre_u(1.5, 0.4, 11).unwrap(),
        ),
    ];
    for (fam, u) in families {
        let rule = spectral::gauss_quadrature(&fam.jacobi(6).unwrap(), 6).unwrap();
        for k in 0..=11 {
            let q = rule.integrate(|x| x.powi(k as i32));
            assert!(
                close(q, u.u()[k], 1e-11),
                "{fam:?} k={k}: {q} vs {}",
                u.u()[k]
            );
        }
    }
}

#[test]
fn nu_c_is_a_symmetric_positive_density() {
    for c in [0.5, 2.0] {
        for x in [0.0, 0.3, 1.7, 3.5] {
            let d = spectral::density_nu_c(x, c, 1e-12).unwrap();
            assert!(d > 0.0);
            assert!((d - spectral::density_nu_c(-x, c, 1e-12).unwrap()).abs() < 1e-13);
        }
    }
    assert!(spectral::density_nu_c(0.0, 0.0, 1e-12).is_err());
}

#[test]
fn primitives_are_centered_by_quadrature_mean() {
    let e = Ensemble::gaussian(1.0).unwrap();
    let fam = PolyFamilyParams::for_ensemble(&e).unwrap();
    let rule = spectral::gauss_quadrature(&spectral::jacobi_gaussian(1.0, 8).unwrap(), 8).unwrap();
    for n in 1..=4 {
        let p = fam.primitive(n).unwrap();
        let direct = rule.integrate(|x| p.eval_f64(x));
        assert!((stats::limit_expectation(&e, n).unwrap() - direct).abs() < 1e-12);
    }
}

#[test]
fn laguerre_process_covariance_follows_time_power() {
    let e = Ensemble::laguerre(1.0, 1.0).unwrap();
    let fam = PolyFamilyParams::for_ensemble(&e).unwrap();
    let cg = moments::xi_cov(&e, 5, &uniform_grid(1.0, 2001).unwrap()).unwrap();
    for n in 1..=2 {
        let p = fam.scaled_primitive(n).unwrap();
        let target = stats::target_variance(&e, n);
        let power = stats::process_time_power(EnsembleKind::Laguerre, n);
        for (s, t) in [(0.25, 1.0), (0.5, 0.5), (0.5, 1.0)] {
            let got = moments::stat_cov(&p, &p, &cg, s, t).unwrap();
            let want = target * f64::min(s, t).powi(power);
            assert!(close(got, want, 1e-3), "n={n} s={s} t={t}: {got} vs {want}");
        }
    }
}

#[test]
fn gaussian_primitive_cross_covariances_vanish_off_diagonal_in_time() {
    let e = Ensemble::gaussian(0.5).unwrap();
    let fam = PolyFamilyParams::for_ensemble(&e).unwrap();
    let cg = moments::xi_cov(&e, 5, &uniform_grid(1.0, 2001).unwrap()).unwrap();
    let p1 = fam.scaled_primitive(1).unwrap();
    let p2 = fam.scaled_primitive(2).unwrap();
    assert!(moments::stat_cov(&p1, &p2, &cg, 0.5, 1.0).unwrap().abs() < 1e-4);
    assert!(moments::stat_cov(&p2, &p1, &cg, 0.5, 1.0).unwrap().abs() < 1e-4);
}

#[test]
fn spectral_moment_matches_table_on_laguerre_i() {
    // Model I carries the moments of x ν̃ shifted by one order.
    assert!(spectral::check_shift_identity(2.0, 0.5, 10, 1e-10).unwrap());
}
