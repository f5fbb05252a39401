use std::f64::consts::TAU;
use std::str::FromStr;

use num_complex::Complex64;

use crate::beltrami::{solve_principal, BeltramiField};
use crate::carleson::{carleson_norm, BallFamily, CarlesonDensity, CarlesonReport, Reference};
use crate::cauchy::lsq_slope;
use crate::error::Result;
use crate::experiments::config::{ScenarioConfig, Thresholds};
use crate::experiments::report::{Check, Recorder, VerdictReport};
use crate::extension::{cutoff_global, ConformalBoundaryMap, MapKind};
use crate::regularity::{dyadic_lags, dynkin_check, hardy_littlewood_fit, holder_exponent, omega_ms};

/// Golden-angle spiral of `n` points filling `|z| < r`.
fn spiral(n: usize, r: f64) -> Vec<Complex64> {
    let golden = TAU * (1.0 - 1.0 / ((1.0 + 5f64.sqrt()) / 2.0));
    (0..n).map(|j| Complex64::from_polar(r * ((j as f64 + 0.5) / n as f64).sqrt(), golden * j as f64)).collect()
}

/// Strictly shrinking profile over the three finest radii, or no mass at all.
pub(crate) fn vanishing_over_finest(rep: &CarlesonReport) -> bool {
    let p = &rep.vanishing_profile;
    if rep.norm == 0.0 {
        return true;
    }
    p.len() >= 3 && p[..3].windows(2).all(|w| w[0].1 < w[1].1) && p[0].1.is_finite()
}

fn circle_carleson(cfg: &ScenarioConfig, mu: &BeltramiField) -> Result<CarlesonReport> {
    let nu = CarlesonDensity::mu2_over_dist_circle(&mu.mu, cfg.epsilon)?;
    let c = &cfg.carleson;
    let fam = BallFamily::on_unit_circle(c.centers, c.r_max, c.j_max, mu.grid().h);
    Ok(carleson_norm(&nu, &Reference::UnitCircle, &fam))
}

fn push_carleson(rec: &mut Recorder, prefix: &str, rep: &CarlesonReport, t: &Thresholds) {
    rec.push(Check::at_most(format!("{prefix} nu carleson norm"), rep.norm, t.carleson_norm_max));
    rec.push(Check::flag(format!("{prefix} nu vanishing profile decreasing"), vanishing_over_finest(rep)));
}

fn forward(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<()> {
    let spec = cfg.forward.as_ref().expect("checked by caller");
    let t = &cfg.thresholds;
    let map = ConformalBoundaryMap::new(MapKind::from_str(&spec.map)?, spec.r0)?;
    let radii: Vec<f64> = (1..=5).map(|j| 1.0 - 0.25f64.powi(j)).collect();
    let hl = hardy_littlewood_fit(|z| map.d2f(z), &radii);
    rec.push(Check::at_most("forward epsilon below 2 alpha", cfg.epsilon, 2.0 * hl.alpha_fit));

    let grid = cfg.grid.build()?;
    let mu = cutoff_global(&map, grid, spec.r_cut, spec.taper)?;
    rec.push(Check::at_most("forward dilatation norm", mu.k, 1.0 - 1e-12));
    rec.stage("forward extension");

    let rep = circle_carleson(cfg, &mu)?;
    push_carleson(rec, "forward", &rep, t);
    rec.stage("forward carleson");

    // decay of |μ| toward the circle at the Hardy–Littlewood rate
    let gaps: Vec<f64> = (2..=5).map(|j| 10f64.powi(-j)).collect();
    let sups: Vec<f64> = gaps
        .iter()
        .map(|&d| {
            (0..512)
                .map(|b| map.extension_dilatation(Complex64::from_polar(1.0 + d, TAU * b as f64 / 512.0)).map(|m| m.norm()))
                .try_fold(0.0f64, |acc, m| m.map(|m| acc.max(m)))
        })
        .collect::<Result<_>>()?;
    let decay = if sups.iter().all(|&s| s == 0.0) {
        f64::INFINITY
    } else {
        let ln = |v: &[f64]| v.iter().map(|x| x.max(f64::MIN_POSITIVE).ln()).collect::<Vec<_>>();
        lsq_slope(&ln(&gaps), &ln(&sups))
    };
    rec.push(Check::at_least("forward dilatation decay exponent", decay, hl.alpha_fit - t.alpha_slack));

    let mut worst: f64 = 0.0;
    for z in spiral(spec.dynkin_points, 0.99) {
        let chk = dynkin_check(|w| map.df(w), |w| map.d2f(w), &mu, z, t.dynkin_c)?;
        let ratio = if chk.lhs == 0.0 {
            0.0
        } else if chk.rhs > 0.0 {
            chk.lhs / chk.rhs
        } else {
            f64::INFINITY
        };
        worst = worst.max(ratio);
    }
    rec.push(Check::at_most("forward dynkin lhs/rhs", worst, 1.0));

    // ω(z,t)² ≲ t^{ε/2} at boundary points, over two decades ending near the cell size
    let h = grid.h;
    let t_top = (100.0 * h).min(0.5 * (grid.x1 - 1.0));
    let ts: Vec<f64> = (0..=8).map(|j| t_top * 10f64.powf(-0.25 * j as f64)).collect();
    let mut slope_min = f64::INFINITY;
    for b in 0..4 {
        let z = Complex64::from_polar(1.0, TAU * b as f64 / 4.0 + 0.3);
        let w2 = ts.iter().map(|&s| omega_ms(&mu, z, s).map(|w| w.powi(2).max(f64::MIN_POSITIVE).ln())).collect::<Result<Vec<_>>>()?;
        if mu.k > 0.0 {
            slope_min = slope_min.min(lsq_slope(&ts.iter().map(|s| s.ln()).collect::<Vec<_>>(), &w2));
        }
    }
    rec.push(Check::at_least("forward omega squared decay exponent", slope_min, cfg.epsilon / 2.0 - t.alpha_slack));
    rec.stage("forward regularity");
    Ok(())
}

fn reverse(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<()> {
    let spec = cfg.reverse.as_ref().expect("checked by caller");
    let t = &cfg.thresholds;
    let grid = spec.grid.build()?;
    let mu = spec.mu.build(grid)?;
    let rep = circle_carleson(cfg, &mu)?;
    let finite = Check::at_most("reverse nu carleson norm", rep.norm, t.carleson_norm_max);
    let precondition = finite.pass;
    rec.push(finite);
    rec.stage("reverse carleson");
    if !precondition {
        return Ok(());
    }

    let map = solve_principal(&mu, cfg.solver.tol, cfg.solver.max_iter)?;
    rec.push(Check::at_most("reverse solver residual", map.residual, t.residual_max));
    rec.stage("reverse solve");

    let gamma = map.trace_circle(Complex64::new(0.0, 0.0), 1.0, spec.samples)?;
    let fit = holder_exponent(&gamma.derivs, gamma.dparam(), &dyadic_lags(spec.j_min, spec.j_max), true)?;
    let target = (cfg.epsilon / 4.0).min(1.0 - mu.k) - t.alpha_slack;
    rec.push(Check::at_least("reverse holder exponent", fit.alpha, target));
    rec.push(Check::at_least("reverse holder fit r2", fit.r2, t.fit_r2_min));
    rec.stage("reverse trace");
    Ok(())
}

/// Forward: cutoff extension of a builtin map has a finite vanishing
/// Carleson density. Reverse: a dilatation with finite density gives a
/// Hölder-smooth image of the circle.
pub fn run_theorem_a(cfg: &ScenarioConfig) -> Result<VerdictReport> {
    let mut rec = Recorder::new(cfg);
    if cfg.forward.is_some() {
        forward(cfg, &mut rec)?;
    }
    if cfg.reverse.is_some() {
        reverse(cfg, &mut rec)?;
    }
    Ok(rec.finish())
}
