use std::str::FromStr;

use num_complex::Complex64;

use crate::beltrami::{solve_principal, BeltramiField, DifferentiableMap, PlanarMap};
use crate::carleson::{carleson_norm, BallFamily, CarlesonDensity, Reference};
use crate::cauchy::{dtilde_g, h_correction, hinf_profile, lsq_slope, BoundaryFunction, BuiltinG, CauchyEvaluator};
use crate::curve::{ParametricCurve, Region};
use crate::error::Result;
use crate::experiments::config::ScenarioConfig;
use crate::experiments::report::{Check, Recorder, VerdictReport};
use crate::experiments::theorem_a::vanishing_over_finest;
use crate::regularity::{a_infinity_indicator, chord_arc_metrics, TriState};

const SPEED_SAMPLES: usize = 4096;

fn side_name(region: Region) -> &'static str {
    match region {
        Region::UpperHalf => "upper",
        Region::LowerHalf => "lower",
        Region::InsideCurve => "inside",
        Region::OutsideCurve => "outside",
    }
}

/// Solve, then trace `Γ = ρ(ℝ)` next to the real line with the same parameters.
fn solve_and_trace(cfg: &ScenarioConfig, mu: &BeltramiField, rec: &mut Recorder) -> Result<(PlanarMap, ParametricCurve, ParametricCurve)> {
    let map = solve_principal(mu, cfg.solver.tol, cfg.solver.max_iter)?;
    rec.push(Check::at_most("solver residual", map.residual, cfg.thresholds.residual_max));
    rec.stage("solve");
    let c = &cfg.curve;
    let gamma = map.trace_quasicircle(c.samples, c.span)?;
    let line = ParametricCurve::real_line(c.samples, c.span)?;
    let ca = chord_arc_metrics(&gamma);
    rec.push(Check::at_most("chord-arc constant", ca.constant, cfg.thresholds.chord_arc_max));
    rec.stage("trace");
    Ok((map, gamma, line))
}

/// Boundedness classes of `C_Γ(g)` and `C_ℝ(g∘ρ)` must agree on each side.
fn profile_agreement(cfg: &ScenarioConfig, gamma: &ParametricCurve, line: &ParametricCurve, rec: &mut Recorder) -> Result<()> {
    for name in &cfg.g {
        let g = BuiltinG::from_str(name)?;
        let on_gamma = g.sample(gamma)?;
        // same parameters, so the samples of g on Γ are those of g∘ρ on ℝ
        let on_line = BoundaryFunction::new(on_gamma.samples.clone())?;
        for region in [Region::UpperHalf, Region::LowerHalf] {
            let pg = hinf_profile(gamma, &on_gamma, region, cfg.curve.m_max);
            let pl = hinf_profile(line, &on_line, region, cfg.curve.m_max);
            let check_name = format!("{name} {} classification agreement", side_name(region));
            let check = match (pg, pl) {
                (Ok(a), Ok(b)) => Check::flag(check_name, a.classification == b.classification && a.classification != crate::cauchy::Boundedness::Inconclusive)
                    .with_note(format!("curve {:?} (slope {:.3}), line {:?} (slope {:.3})", a.classification, a.slope, b.classification, b.slope)),
                (a, b) => {
                    let err = a.err().or(b.err()).map(|e| e.to_string()).unwrap_or_default();
                    Check::flag(check_name, false).with_note(err)
                }
            };
            rec.push(check);
        }
    }
    rec.stage("profiles");
    Ok(())
}

/// Sampled `|ρ'|` on `[−span, span]` carries an A∞ weight.
fn speed_weight(map: &PlanarMap, span: f64) -> Result<(TriState, f64)> {
    let w: Vec<f64> = (0..SPEED_SAMPLES)
        .map(|i| {
            let x = -span + 2.0 * span * (i as f64 + 0.5) / SPEED_SAMPLES as f64;
            let (a, b) = map.derivatives(Complex64::new(x, 0.0))?;
            Ok((a + b).norm())
        })
        .collect::<Result<_>>()?;
    a_infinity_indicator(&w)
}

fn correction_terms(cfg: &ScenarioConfig, mu: &BeltramiField, map: &PlanarMap, gamma: &ParametricCurve, rec: &mut Recorder) -> Result<()> {
    let Some(pole) = cfg.g.iter().find(|g| g.starts_with("pole:")) else {
        return Ok(());
    };
    let g = BuiltinG::from_str(pole)?.sample(gamma)?;
    let eval = CauchyEvaluator::new(gamma, &g)?;
    let dtilde = dtilde_g(mu, map, &eval)?;
    let spec = &cfg.correction;
    let h = mu.grid().h;
    let k_max = (1.0 / (spec.min_radius_cells * h)).log2().floor() as i32;
    let (mut worst_ratio, mut worst_h): (f64, f64) = (0.0, 0.0);
    for i in 0..spec.points {
        let a = if spec.points == 1 { 0.0 } else { -spec.a_max + 2.0 * spec.a_max * i as f64 / (spec.points - 1) as f64 };
        let hc = h_correction(mu, &dtilde, a, k_max)?;
        let fine: Vec<(f64, f64)> = hc.terms.iter().filter(|t| t.0 >= 1 && t.1 > 0.0).map(|t| (t.0 as f64, t.1.log2())).collect();
        if fine.len() >= 2 {
            let (ks, ls): (Vec<f64>, Vec<f64>) = fine.into_iter().unzip();
            worst_ratio = worst_ratio.max(2f64.powf(lsq_slope(&ks, &ls)));
        }
        let bound = hc.bound();
        worst_h = worst_h.max(if bound > 0.0 { hc.value.norm() / bound } else if hc.value.norm() > 0.0 { f64::INFINITY } else { 0.0 });
    }
    let t = &cfg.thresholds;
    rec.push(Check::at_most("dyadic correction term ratio", worst_ratio, t.decay_ratio_factor * 2f64.powf(-cfg.epsilon / 2.0)));
    rec.push(Check::at_most("correction over dyadic bound", worst_h, t.h_bound_factor));
    rec.stage("correction");
    Ok(())
}

/// Compactly supported `μ` with finite `|μ|²/|y|^{1+ε}` norm: boundedness of
/// Cauchy integrals on `Γ = ρ(ℝ)` and on `ℝ` must agree side by side.
pub fn run_theorem_b(cfg: &ScenarioConfig) -> Result<VerdictReport> {
    let mut rec = Recorder::new(cfg);
    let grid = cfg.grid.build()?;
    let mu = cfg.mu.as_ref().expect("validated").build(grid)?;
    rec.push(Check::at_most("dilatation norm", mu.k, 1.0 - 1e-12));

    let sb = mu.support_box;
    let c = &cfg.carleson;
    let fam = BallFamily::on_real_line(sb.x0, sb.x1, c.centers, c.r_max, c.j_max, grid.h);
    let nu = carleson_norm(&CarlesonDensity::mu2_over_y(&mu.mu, cfg.epsilon)?, &Reference::RealLine, &fam);
    rec.push(Check::at_most("nu carleson norm", nu.norm, cfg.thresholds.carleson_norm_max));
    let tau = carleson_norm(&CarlesonDensity::mu2_over_y_plain(&mu.mu), &Reference::RealLine, &fam);
    rec.push(Check::flag("tau vanishing", !tau.divergent && vanishing_over_finest(&tau)));
    rec.stage("preconditions");
    if rec.has_failures() {
        return Ok(rec.finish());
    }

    let (map, gamma, line) = solve_and_trace(cfg, &mu, &mut rec)?;
    let (state, share) = speed_weight(&map, cfg.curve.span)?;
    rec.push(Check::flag("boundary speed A-infinity", state == TriState::Pass).with_note(format!("heaviest-quarter share {share:.3}")));
    profile_agreement(cfg, &gamma, &line, &mut rec)?;
    correction_terms(cfg, &mu, &map, &gamma, &mut rec)?;
    Ok(rec.finish())
}

/// `μ` vanishing on the upper half-plane and near `ℝ`, so `ρ` is conformal
/// on `ℝ²₊` and `Γ = ρ(ℝ)` is analytic: boundedness must agree on both sides.
pub fn run_corollary(cfg: &ScenarioConfig) -> Result<VerdictReport> {
    let mut rec = Recorder::new(cfg);
    let grid = cfg.grid.build()?;
    let mu = cfg.mu.as_ref().expect("validated").build(grid)?;
    rec.push(Check::at_most("dilatation norm", mu.k, 1.0 - 1e-12));
    // conformal on the upper half-plane and on a collar of ℝ
    let collar = 4.0 * grid.h;
    let off_support = (0..grid.len())
        .filter(|&k| grid.node(k % grid.nx, k / grid.nx).im > -collar)
        .map(|k| mu.mu.values[k].norm())
        .fold(0.0, f64::max);
    rec.push(Check::at_most("dilatation on upper half-plane and collar", off_support, 0.0));
    rec.stage("preconditions");
    if rec.has_failures() {
        return Ok(rec.finish());
    }
    let (_, gamma, line) = solve_and_trace(cfg, &mu, &mut rec)?;
    profile_agreement(cfg, &gamma, &line, &mut rec)?;
    Ok(rec.finish())
}
