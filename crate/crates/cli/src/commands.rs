use std::time::Instant;

use betaflow::moments::{self, uniform_grid, Process};
use betaflow::poly::{rational_to_f64, PolyFamilyParams, Polynomial};
use betaflow::sde::{self, empirical_moment};
use betaflow::spectral::{self, SpectralFamily};
use betaflow::stats;
use betaflow::EnsembleKind;
use clap::ValueEnum;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Family, RunConfig};
use crate::output::{Cell, Table, Writer};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Lln,
    CltStatic,
    CltProcess,
    Identities,
    Spectral,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Lln => "lln",
            Suite::CltStatic => "clt-static",
            Suite::CltProcess => "clt-process",
            Suite::Identities => "identities",
            Suite::Spectral => "spectral",
        }
    }
}

pub fn moments(cfg: &RunConfig, w: &mut Writer) -> Result<(), CliError> {
    let e = cfg.ensemble()?;
    let table = moments::moment_table(&e, cfg.nmax)?;
    let mut u = Table::new(&["n", "u_n"]);
    for (n, &v) in table.u().iter().enumerate() {
        u.push(vec![n.into(), v.into()]);
    }
    w.table("u_table", &u)?;

    let grid = uniform_grid(cfg.horizon, cfg.grid_points)?;
    let mut columns = vec!["t".to_owned()];
    columns.extend((0..=cfg.nmax).map(|n| format!("m_{n}")));
    let mut curves = Table::with_columns(columns);
    for &t in &grid {
        let mut row = vec![Cell::F(t)];
        for n in 0..=cfg.nmax {
            row.push(moments::m_curve(&table, n, t)?.into());
        }
        curves.push(row);
    }
    w.table("m_curves", &curves)?;

    if cfg.nmax >= 1 {
        let cov = moments::xi_cov(&e, cfg.nmax, &grid)?;
        let mut out = Table::new(&["t", "k", "l", "cov_xi"]);
        for (i, &t) in grid.iter().enumerate() {
            for k in 1..=cfg.nmax {
                for l in k..=cfg.nmax {
                    out.push(vec![
                        t.into(),
                        k.into(),
                        l.into(),
                        cov.cov(Process::Xi(k), i, Process::Xi(l), i)?.into(),
                    ]);
                }
            }
        }
        w.table("xi_cov", &out)?;
    }
    Ok(())
}

fn family(cfg: &RunConfig) -> Result<PolyFamilyParams, CliError> {
    Ok(match cfg.kind {
        EnsembleKind::Gaussian => PolyFamilyParams::gaussian(cfg.c.clone())?,
        EnsembleKind::Laguerre => PolyFamilyParams::laguerre(cfg.alpha.clone(), cfg.c.clone())?,
    })
}

fn identity(cfg: &RunConfig, kind: EnsembleKind, n: usize) -> Result<bool, CliError> {
    Ok(match kind {
        EnsembleKind::Gaussian => betaflow::poly::check_identity_gaussian(n, &cfg.c)?,
        EnsembleKind::Laguerre => betaflow::poly::check_identity_laguerre(n, &cfg.alpha, &cfg.c)?,
    })
}

pub fn poly(cfg: &RunConfig, w: &mut Writer) -> Result<(), CliError> {
    let fam = family(cfg)?;
    let mut coeffs = Table::new(&["poly", "n", "power", "coeff", "coeff_f64"]);
    let mut push = |name: &str, n: usize, p: &Polynomial| {
        for (k, a) in p.coeffs().iter().enumerate() {
            coeffs.push(vec![
                name.into(),
                n.into(),
                k.into(),
                a.to_string().into(),
                rational_to_f64(a).into(),
            ]);
        }
    };
    for n in 0..=cfg.nmax {
        push("p", n, &fam.p(n)?);
        push("q", n, &fam.q(n)?);
        push("P", n, &fam.primitive(n)?);
    }
    w.table("poly", &coeffs)?;

    let mut norms = Table::new(&["n", "norm_squared", "norm_squared_f64"]);
    for n in 0..=cfg.nmax {
        let h = fam.norm_squared(n);
        norms.push(vec![
            n.into(),
            h.to_string().into(),
            rational_to_f64(&h).into(),
        ]);
    }
    w.table("norms", &norms)?;

    let mut ids = Table::new(&["n", "identity_holds"]);
    for n in 1..=cfg.nmax {
        ids.push(vec![n.into(), identity(cfg, cfg.kind, n)?.into()]);
    }
    w.table("identities", &ids)?;
    Ok(())
}

pub fn density(cfg: &RunConfig, w: &mut Writer) -> Result<(), CliError> {
    let c = cfg.c_f64();
    if cfg.x_max.is_nan() || cfg.x_max <= 0.0 || cfg.grid_points < 2 {
        return Err(CliError::Usage(
            "density needs x_max > 0 and grid_points >= 2".into(),
        ));
    }
    let h = 2.0 * cfg.x_max / (cfg.grid_points - 1) as f64;
    let mut dens = Table::new(&["x", "nu_c"]);
    for i in 0..cfg.grid_points {
        let x = -cfg.x_max + h * i as f64;
        dens.push(vec![
            x.into(),
            spectral::density_nu_c(x, c, cfg.tol)?.into(),
        ]);
    }
    w.table("density", &dens)?;

    let dm = spectral::density_moments(c, cfg.x_max, cfg.tol)?;
    let u = moments::gaussian_u(c, spectral::DENSITY_MOMENT_ORDERS - 1)?;
    let mut check = Table::new(&[
        "k",
        "quad_moment",
        "u_k",
        "abs_error",
        "tail_bound",
        "quad_error",
        "within_1e-5",
    ]);
    for k in 0..spectral::DENSITY_MOMENT_ORDERS {
        let err = (dm.moments[k] - u.u()[k]).abs();
        check.push(vec![
            k.into(),
            dm.moments[k].into(),
            u.u()[k].into(),
            err.into(),
            dm.tail_bound[k].into(),
            dm.quad_error.into(),
            (err <= 1e-5 + dm.tail_bound[k]).into(),
        ]);
    }
    w.table("density_moments", &check)?;

    let fam = match cfg.family {
        Family::Gaussian => SpectralFamily::Gaussian { c },
        Family::LaguerreIi => SpectralFamily::LaguerreII {
            alpha: cfg.alpha_f64(),
            c,
        },
        Family::LaguerreI => SpectralFamily::LaguerreI {
            alpha: cfg.alpha_f64(),
            c,
        },
    };
    let rule = spectral::gauss_quadrature(&fam.jacobi(cfg.nodes)?, cfg.nodes)?;
    let mut quad = Table::new(&["i", "node", "weight"]);
    for (i, (&x, &wt)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        quad.push(vec![i.into(), x.into(), wt.into()]);
    }
    w.table("quadrature", &quad)?;
    Ok(())
}

struct Replica {
    rows: Vec<Vec<f64>>,
    paths: Vec<Vec<f64>>,
    particle_steps: u64,
}

pub fn simulate(cfg: &RunConfig, w: &mut Writer) -> Result<(), CliError> {
    let params = cfg.params()?;
    let start = Instant::now();
    let replicas: Vec<Replica> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|id| {
            let mut rows = Vec::with_capacity(params.steps + 1);
            let mut paths = Vec::new();
            let counters = sde::simulate_observed(&params, id, |_, t, lambda| {
                let mut row = vec![t];
                row.extend((0..=cfg.nmax).map(|n| empirical_moment(lambda, n)));
                rows.push(row);
                if cfg.dump_paths {
                    let mut p = vec![t];
                    p.extend_from_slice(lambda);
                    paths.push(p);
                }
            })?;
            Ok(Replica {
                rows,
                paths,
                particle_steps: counters.particle_steps,
            })
        })
        .collect::<Result<_, betaflow::Error>>()?;
    let elapsed = start.elapsed().as_secs_f64();
    let total: u64 = replicas.iter().map(|r| r.particle_steps).sum();
    eprintln!(
        "simulate: {} replicas, {total} particle-steps in {elapsed:.3} s ({:.3e} particle-steps/s)",
        cfg.replicas,
        total as f64 / elapsed.max(1e-9)
    );

    let mut columns = vec!["replica".to_owned(), "t".to_owned()];
    columns.extend((0..=cfg.nmax).map(|n| format!("S_{n}")));
    let mut series = Table::with_columns(columns);
    for (id, r) in replicas.iter().enumerate() {
        for row in &r.rows {
            let mut cells = vec![Cell::from(id)];
            cells.extend(row.iter().map(|&v| Cell::F(v)));
            series.push(cells);
        }
    }
    w.table("moment_series", &series)?;

    if cfg.dump_paths {
        let mut columns = vec!["replica".to_owned(), "t".to_owned()];
        columns.extend((1..=cfg.particles).map(|i| format!("lambda_{i}")));
        let mut paths = Table::with_columns(columns);
        for (id, r) in replicas.iter().enumerate() {
            for p in &r.paths {
                let mut cells = vec![Cell::from(id)];
                cells.extend(p.iter().map(|&v| Cell::F(v)));
                paths.push(cells);
            }
        }
        w.table("paths", &paths)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct IdentityReport {
    suite: &'static str,
    nmax: usize,
    c: String,
    alpha: String,
    gaussian: Vec<bool>,
    laguerre: Vec<bool>,
    pass: bool,
}

#[derive(Serialize)]
struct SpectralReport {
    suite: &'static str,
    nmax: usize,
    tol: f64,
    gaussian_max_rel_error: f64,
    laguerre_max_rel_error: f64,
    shift_identity: bool,
    pass: bool,
}

#[derive(Serialize)]
struct LlnRow {
    particles: usize,
    estimate: stats::LlnEstimate,
}

#[derive(Serialize)]
struct LlnReport {
    suite: &'static str,
    n: usize,
    rows: Vec<LlnRow>,
    strictly_decreasing: bool,
    pass: bool,
}

fn max_rel_error(u: &[f64], j: &[f64]) -> f64 {
    u.iter()
        .zip(j)
        .map(|(&a, &b)| {
            if a == 0.0 {
                b.abs()
            } else {
                (a - b).abs() / a.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Runs one suite, writes its report and returns the overall verdict.
pub fn verify(cfg: &RunConfig, suite: Suite, w: &mut Writer) -> Result<bool, CliError> {
    let pass = match suite {
        Suite::Identities => {
            if cfg.nmax == 0 {
                return Err(CliError::Usage("identities need nmax >= 1".into()));
            }
            let run = |kind| {
                (1..=cfg.nmax)
                    .map(|n| identity(cfg, kind, n))
                    .collect::<Result<Vec<_>, _>>()
            };
            let (gaussian, laguerre) = (run(EnsembleKind::Gaussian)?, run(EnsembleKind::Laguerre)?);
            let pass = gaussian.iter().chain(&laguerre).all(|&b| b);
            let report = IdentityReport {
                suite: suite.name(),
                nmax: cfg.nmax,
                c: cfg.c.to_string(),
                alpha: cfg.alpha.to_string(),
                gaussian,
                laguerre,
                pass,
            };
            w.report("report", &report)?;
            pass
        }
        Suite::Spectral => {
            let (c, alpha) = (cfg.c_f64(), cfg.alpha_f64());
            let dim = spectral::default_truncation(cfg.nmax);
            let gj = spectral::spectral_moments(&spectral::jacobi_gaussian(c, dim)?, cfg.nmax)?;
            let lj = spectral::spectral_moments(
                &spectral::jacobi_laguerre_ii(alpha, c, dim)?,
                cfg.nmax,
            )?;
            let g_err = max_rel_error(moments::gaussian_u(c, cfg.nmax)?.u(), &gj);
            let l_err = max_rel_error(moments::laguerre_u(alpha, c, cfg.nmax)?.u(), &lj);
            let shift = spectral::check_shift_identity(alpha, c, cfg.nmax, cfg.tol)?;
            let pass = shift && g_err <= cfg.tol && l_err <= cfg.tol;
            let report = SpectralReport {
                suite: suite.name(),
                nmax: cfg.nmax,
                tol: cfg.tol,
                gaussian_max_rel_error: g_err,
                laguerre_max_rel_error: l_err,
                shift_identity: shift,
                pass,
            };
            w.report("report", &report)?;
            pass
        }
        Suite::Lln => {
            let mut sizes = vec![cfg.particles / 4, cfg.particles / 2, cfg.particles];
            sizes.retain(|&n| n >= 1);
            sizes.dedup();
            let mut rows = Vec::new();
            for &n in &sizes {
                let mut params = cfg.params()?;
                params.n = n;
                rows.push(LlnRow {
                    particles: n,
                    estimate: stats::lln_supnorm_detail(&params, cfg.order, cfg.replicas)?,
                });
            }
            let decreasing = rows
                .windows(2)
                .all(|w| w[1].estimate.mean < w[0].estimate.mean);
            let report = LlnReport {
                suite: suite.name(),
                n: cfg.order,
                rows,
                strictly_decreasing: decreasing,
                pass: decreasing,
            };
            w.report("report", &report)?;
            decreasing
        }
        Suite::CltStatic => {
            let r = stats::clt_sample_static(
                &cfg.params()?,
                &[cfg.order],
                cfg.replicas,
                cfg.sampler.into(),
            )?;
            w.report("report", &r)?;
            summary(w, &r)?;
            r.pass
        }
        Suite::CltProcess => {
            let t = cfg.horizon;
            let r = stats::clt_process(
                &cfg.params()?,
                &[cfg.order],
                &[t / 4.0, t / 2.0, t],
                cfg.replicas,
            )?;
            w.report("report", &r)?;
            summary(w, &r)?;
            r.pass
        }
    };
    Ok(pass)
}

fn summary(w: &mut Writer, r: &stats::CltReport) -> Result<(), CliError> {
    let mut t = Table::new(&[
        "n",
        "t",
        "replicas",
        "sample_mean",
        "sample_variance",
        "target_variance",
        "ci_lo",
        "ci_hi",
        "pass_variance",
    ]);
    for s in &r.statistics {
        t.push(vec![
            s.n.into(),
            s.t.into(),
            s.replicas.into(),
            s.sample_mean.into(),
            s.sample_variance.into(),
            s.target_variance.into(),
            s.variance_ci.0.into(),
            s.variance_ci.1.into(),
            s.pass_variance.into(),
        ]);
    }
    w.table("summary", &t)?;
    if !r.covariances.is_empty() {
        let mut t = Table::new(&[
            "n",
            "s",
            "t",
            "empirical",
            "plain",
            "target",
            "rel_error",
            "pass",
        ]);
        for c in &r.covariances {
            t.push(vec![
                c.n.into(),
                c.s.into(),
                c.t.into(),
                c.empirical.into(),
                c.plain.into(),
                c.target.into(),
                c.rel_error.into(),
                c.pass.into(),
            ]);
        }
        w.table("covariances", &t)?;
    }
    Ok(())
}
