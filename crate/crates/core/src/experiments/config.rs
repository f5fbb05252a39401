use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::beltrami::{BeltramiField, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::{QlabError, Result};
use crate::extension::{quintic_taper, DEFAULT_R0};
use crate::grid::{Grid, GridField};
use crate::io::read_field;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    TheoremA,
    TheoremB,
    Corollary,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::TheoremA => "theorem-a",
            Scenario::TheoremB => "theorem-b",
            Scenario::Corollary => "corollary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: f64,
    pub n: usize,
    #[serde(default)]
    pub center: [f64; 2],
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::centered(Complex64::new(self.center[0], self.center[1]), self.half_width, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

/// Dilatation builders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MuSpec {
    Zero,
    /// `k·min(1, (|y|/y0)^p)·φ(x/x_half)·χ(|y|)` on one side of ℝ, where `φ` is
    /// the unit bump and `χ` drops from 1 at `|y| = y_top − fade` to 0 at `y_top`.
    HalfPlaneBump { k: f64, y0: f64, exponent: f64, x_half: f64, y_top: f64, fade: f64, side: Side },
    /// `k·φ(|z − c|/radius)`.
    DiskBump { k: f64, center: [f64; 2], radius: f64 },
    /// `min(cap, (|z| − 1)^p)·taper(|z|)·z/z̄` outside the unit circle.
    CircleTaper { cap: f64, exponent: f64, r_cut: f64, taper: f64 },
    File { path: PathBuf },
}

/// `exp(1 − 1/(1 − s²))` on `|s| < 1`, peak 1.
pub fn unit_bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

impl MuSpec {
    pub fn build(&self, grid: Grid) -> Result<BeltramiField> {
        let c0 = Complex64::new(0.0, 0.0);
        let field = match self {
            MuSpec::Zero => return Ok(BeltramiField::zero(grid)),
            MuSpec::File { path } => return BeltramiField::from_field(read_field(path)?),
            MuSpec::HalfPlaneBump { k, y0, exponent, x_half, y_top, fade, side } => {
                let sign = if *side == Side::Upper { 1.0 } else { -1.0 };
                GridField::from_fn(grid, |z| {
                    let y = sign * z.im;
                    if y <= 0.0 || y >= *y_top {
                        return c0;
                    }
                    let ramp = (y / y0).powf(*exponent).min(1.0);
                    let fall = if y <= y_top - fade { 1.0 } else { unit_bump((y - (y_top - fade)) / fade) };
                    Complex64::new(k * ramp * fall * unit_bump(z.re / x_half), 0.0)
                })
            }
            MuSpec::DiskBump { k, center, radius } => {
                let c = Complex64::new(center[0], center[1]);
                GridField::from_fn(grid, |z| Complex64::new(k * unit_bump((z - c).norm() / radius), 0.0))
            }
            MuSpec::CircleTaper { cap, exponent, r_cut, taper } => GridField::from_fn(grid, |z| {
                let r = z.norm();
                if r <= 1.0 {
                    return c0;
                }
                let m = (r - 1.0).powf(*exponent).min(*cap) * quintic_taper(r, *r_cut, *taper);
                m * z / z.conj()
            }),
        };
        BeltramiField::from_field(field)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub samples: usize,
    pub span: f64,
    pub m_max: usize,
}

impl Default for CurveSpec {
    fn default() -> Self {
        Self { samples: 16384, span: 4.0, m_max: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarlesonSpec {
    pub centers: usize,
    pub r_max: f64,
    pub j_max: usize,
}

impl Default for CarlesonSpec {
    fn default() -> Self {
        Self { centers: 64, r_max: 1.0, j_max: 6 }
    }
}

/// Forward direction of Theorem A: a builtin conformal map and its cutoff extension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardSpec {
    pub map: String,
    #[serde(default = "default_r0")]
    pub r0: f64,
    pub r_cut: f64,
    pub taper: f64,
    /// Points in the disk for the Dynkin estimate.
    #[serde(default = "default_dynkin_points")]
    pub dynkin_points: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_r0() -> f64 {
    DEFAULT_R0
}

fn default_dynkin_points() -> usize {
    16
}

fn default_seed() -> u64 {
    7
}

/// Reverse direction of Theorem A: a dilatation outside the disk, solved and traced on the circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReverseSpec {
    pub mu: MuSpec,
    pub grid: GridSpec,
    pub samples: usize,
    /// Hölder lags `2^j` for `j_min ≤ j ≤ j_max`, in samples.
    pub j_min: u32,
    pub j_max: u32,
}

/// Sample points `a ∈ ℝ` for the correction term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectionSpec {
    pub points: usize,
    pub a_max: f64,
    /// Finest ball radius in grid cells.
    pub min_radius_cells: f64,
}

impl Default for CorrectionSpec {
    fn default() -> Self {
        Self { points: 8, a_max: 1.2, min_radius_cells: 4.0 }
    }
}

/// Every verdict threshold of the runners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub carleson_norm_max: f64,
    pub alpha_slack: f64,
    pub fit_r2_min: f64,
    pub dynkin_c: f64,
    pub decay_ratio_factor: f64,
    pub h_bound_factor: f64,
    pub chord_arc_max: f64,
    pub residual_max: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            carleson_norm_max: 1e3,
            alpha_slack: 0.1,
            fit_r2_min: 0.9,
            dynkin_c: 10.0,
            decay_ratio_factor: 1.5,
            h_bound_factor: 5.0,
            chord_arc_max: 10.0,
            residual_max: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub epsilon: f64,
    pub grid: GridSpec,
    #[serde(default)]
    pub mu: Option<MuSpec>,
    #[serde(default = "default_g")]
    pub g: Vec<String>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub curve: CurveSpec,
    #[serde(default)]
    pub carleson: CarlesonSpec,
    #[serde(default)]
    pub correction: CorrectionSpec,
    #[serde(default)]
    pub forward: Option<ForwardSpec>,
    #[serde(default)]
    pub reverse: Option<ReverseSpec>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_g() -> Vec<String> {
    vec!["pole:0-1i".into(), "step".into(), "one".into()]
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| QlabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(QlabError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        let mut files = Vec::new();
        if let Some(MuSpec::File { path }) = &self.mu {
            files.push(path);
        }
        if let Some(ReverseSpec { mu: MuSpec::File { path }, .. }) = &self.reverse {
            files.push(path);
        }
        for p in files {
            if !p.exists() {
                return Err(QlabError::Config(format!("referenced file {} does not exist", p.display())));
            }
        }
        match self.scenario {
            Scenario::TheoremA if self.forward.is_none() && self.reverse.is_none() => {
                Err(QlabError::Config("theorem-a needs a [forward] or [reverse] section".into()))
            }
            Scenario::TheoremB | Scenario::Corollary if self.mu.is_none() => {
                Err(QlabError::Config(format!("{} needs a [mu] section", self.scenario.name())))
            }
            _ => Ok(()),
        }
    }

    /// SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).unwrap_or_default();
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// The shipped scenario for each runner.
    pub fn shipped(scenario: Scenario) -> Self {
        let text = match scenario {
            Scenario::TheoremA => THEOREM_A,
            Scenario::TheoremB => THEOREM_B,
            Scenario::Corollary => COROLLARY,
        };
        Self::from_toml(text).expect("shipped configs parse")
    }
}

pub const THEOREM_A: &str = include_str!("../../configs/theorem_a.toml");
pub const THEOREM_B: &str = include_str!("../../configs/theorem_b.toml");
pub const COROLLARY: &str = include_str!("../../configs/corollary.toml");
