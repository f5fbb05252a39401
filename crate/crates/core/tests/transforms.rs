use num_complex::Complex64;
use qlab::transforms::TransformPlan;
use qlab::{Grid, GridField};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Unit-disk indicator with its edge blurred by a Gaussian of width 0.75h.
/// A hard or cell-averaged edge aliases on the frequency lattice and rings
/// for dozens of cells.
fn disk_indicator(grid: Grid) -> GridField {
    let sigma = 0.75 * grid.h;
    GridField::from_fn(grid, |z| c(0.5 * libm::erfc((z.norm() - 1.0) / (sigma * 2f64.sqrt())), 0.0))
}

/// Max error of `field` against `exact` away from a `collar`-wide band around the unit circle.
fn max_err_off_circle(field: &GridField, collar: f64, exact: impl Fn(Complex64) -> Complex64) -> f64 {
    let g = field.grid;
    let mut err: f64 = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let z = g.node(i, j);
            if (z.norm() - 1.0).abs() > collar {
                err = err.max((field.at(i, j) - exact(z)).norm());
            }
        }
    }
    err
}

fn smooth_bump(z: Complex64, a: f64) -> (Complex64, Complex64, Complex64) {
    let w = z / a;
    let r2 = w.norm_sqr();
    if r2 >= 1.0 {
        return (c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
    }
    let e = (-1.0 / (1.0 - r2)).exp();
    let de = -e / (1.0 - r2).powi(2);
    let shape = c(1.0, 0.0) + 0.5 * w;
    (e * shape, de * w.conj() / a * shape + e * 0.5 / a, de * w / a * shape)
}

#[test]
fn cauchy_transform_of_disk_indicator() {
    let g = Grid::centered(c(0.0, 0.0), 4.0, 512).unwrap();
    let plan = TransformPlan::new(g);
    let ch = plan.cauchy_transform(&disk_indicator(g)).unwrap();
    let err = max_err_off_circle(&ch, 3.0 * g.h, |z| if z.norm() <= 1.0 { z.conj() } else { 1.0 / z });
    println!("cauchy disk err = {err:e}");
    assert!(err <= 5e-3, "err = {err:e}");
}

#[test]
fn beurling_transform_of_disk_indicator() {
    let g = Grid::centered(c(0.0, 0.0), 4.0, 512).unwrap();
    let plan = TransformPlan::new(g);
    let sh = plan.beurling_transform(&disk_indicator(g)).unwrap();
    let err = max_err_off_circle(&sh, 3.0 * g.h, |z| if z.norm() <= 1.0 { c(0.0, 0.0) } else { -1.0 / (z * z) });
    println!("beurling disk err = {err:e}");
    assert!(err <= 1e-2, "err = {err:e}");
}

#[test]
fn beurling_plancherel_and_bump_identity() {
    let g = Grid::centered(c(0.0, 0.0), 2.0, 256).unwrap();
    let plan = TransformPlan::new(g);
    let h = GridField::from_fn(g, |z| smooth_bump(z, 0.9).2);
    let padded = plan.beurling_padded(&h).unwrap();
    let n_in: f64 = h.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let n_out: f64 = padded.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    assert!(((n_out - n_in) / n_in).abs() < 1e-10);

    let sh = plan.beurling_transform(&h).unwrap();
    let mut err: f64 = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            err = err.max((sh.at(i, j) - smooth_bump(g.node(i, j), 0.9).1).norm());
        }
    }
    assert!(err < 1e-4, "err = {err:e}");
}

#[test]
fn dz_of_cauchy_agrees_with_beurling() {
    let g = Grid::centered(c(0.0, 0.0), 2.0, 256).unwrap();
    let plan = TransformPlan::new(g);
    // ∂̄ of a narrow Gaussian times a linear factor; below 1e-13 outside the inner half
    let s = 0.15;
    let h = GridField::from_fn(g, |z| {
        let w = z - c(0.1, 0.05);
        let e = (-w.norm_sqr() / (s * s)).exp();
        e * (c(0.0, 0.5) - w * (c(1.0, 0.0) + c(0.0, 0.5) * w.conj()) / (s * s))
    });
    let lhs = plan.dz(&plan.cauchy_transform(&h).unwrap()).unwrap();
    let rhs = plan.beurling_transform(&h).unwrap();
    let mut err: f64 = 0.0;
    for j in g.ny / 4..3 * g.ny / 4 {
        for i in g.nx / 4..3 * g.nx / 4 {
            err = err.max((lhs.at(i, j) - rhs.at(i, j)).norm());
        }
    }
    assert!(err < 1e-8, "err = {err:e}");
}

#[test]
fn dbar_of_conj_z_with_cutoff() {
    let g = Grid::centered(c(0.0, 0.0), 2.0, 256).unwrap();
    let plan = TransformPlan::new(g);
    // C^∞ cutoff equal to 1 on |z| < 0.8 and 0 beyond 1.8
    let cutoff = |z: Complex64| {
        let r = z.norm();
        let s = ((r - 0.8) / 1.0).clamp(0.0, 1.0);
        let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
        f(1.0 - s) / (f(1.0 - s) + f(s))
    };
    let zbar = GridField::from_fn(g, |z| z.conj() * cutoff(z));
    let zsq = GridField::from_fn(g, |z| z * z * cutoff(z));
    let db = plan.dbar(&zbar).unwrap();
    let dz = plan.dz(&zbar).unwrap();
    let db2 = plan.dbar(&zsq).unwrap();
    let mut err: f64 = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let z = g.node(i, j);
            if z.norm() < 0.7 {
                err = err.max((db.at(i, j) - 1.0).norm()).max(dz.at(i, j).norm()).max(db2.at(i, j).norm());
            }
        }
    }
    assert!(err < 1e-6, "err = {err:e}");
}
