use std::process::Command;

use qlab::experiments::config::{MuSpec, Scenario, THEOREM_A, THEOREM_B};
use qlab::experiments::{run, run_corollary, run_theorem_a, run_theorem_b, ScenarioConfig, VerdictReport};
use qlab::QlabError;

const SMALL_B: &str = r#"
scenario = "theorem-b"
epsilon = 0.5
grid = { half_width = 4.0, n = 128 }
mu = { kind = "zero" }
curve = { samples = 2048, span = 4.0, m_max = 6 }
carleson = { centers = 16, r_max = 1.0, j_max = 3 }
correction = { points = 2, a_max = 1.0, min_radius_cells = 4.0 }
"#;

const SMALL_A: &str = r#"
scenario = "theorem-a"
epsilon = 0.5
grid = { half_width = 3.0, n = 256 }
carleson = { centers = 16, r_max = 1.0, j_max = 2 }

[forward]
map = "identity"
r_cut = 1.5
taper = 0.5

[reverse]
grid = { half_width = 4.0, n = 128 }
samples = 1024
j_min = 2
j_max = 6
mu = { kind = "zero" }
"#;

fn all_pass(rep: &VerdictReport) {
    let failed: Vec<_> = rep.failed().collect();
    assert!(rep.overall && failed.is_empty(), "{failed:?}");
}

#[test]
fn zero_dilatation_passes_theorem_b() {
    let cfg = ScenarioConfig::from_toml(SMALL_B).unwrap();
    let rep = run_theorem_b(&cfg).unwrap();
    all_pass(&rep);
    assert_eq!(rep.check("nu carleson norm").unwrap().value, 0.0);
    assert!(rep.check("chord-arc constant").unwrap().value < 1.0 + 1e-9);
    assert_eq!(rep.provenance.stages.first().unwrap().0, "preconditions");
}

#[test]
fn zero_dilatation_passes_corollary() {
    let mut cfg = ScenarioConfig::from_toml(SMALL_B).unwrap();
    cfg.scenario = Scenario::Corollary;
    all_pass(&run_corollary(&cfg).unwrap());
}

#[test]
fn identity_map_and_zero_dilatation_pass_theorem_a() {
    let cfg = ScenarioConfig::from_toml(SMALL_A).unwrap();
    let rep = run_theorem_a(&cfg).unwrap();
    all_pass(&rep);
    assert_eq!(rep.check("forward dilatation norm").unwrap().value, 0.0);
    assert!(rep.check("reverse holder exponent").unwrap().value >= 0.9);
}

#[test]
fn divergent_density_stops_before_solving() {
    let mut cfg = ScenarioConfig::from_toml(SMALL_B).unwrap();
    // constant μ reaching ℝ: |μ|²/y is not Carleson
    cfg.mu = Some(MuSpec::HalfPlaneBump {
        k: 0.3,
        y0: 1e-9,
        exponent: 1.0,
        x_half: 1.5,
        y_top: 1.5,
        fade: 0.5,
        side: qlab::experiments::config::Side::Upper,
    });
    let rep = run(&cfg).unwrap();
    assert!(!rep.overall);
    assert!(!rep.check("tau vanishing").unwrap().pass);
    assert!(rep.check("solver residual").is_none());
}

#[test]
fn config_errors() {
    let bad_eps = SMALL_B.replace("epsilon = 0.5", "epsilon = -1.0");
    assert!(matches!(ScenarioConfig::from_toml(&bad_eps), Err(QlabError::Config(_))));
    let unknown = format!("{SMALL_B}\nbogus = 3\n");
    assert!(matches!(ScenarioConfig::from_toml(&unknown), Err(QlabError::Config(_))));
    let missing_mu = SMALL_B.replace("mu = { kind = \"zero\" }", "");
    assert!(matches!(ScenarioConfig::from_toml(&missing_mu), Err(QlabError::Config(_))));
    let no_file = SMALL_B.replace("{ kind = \"zero\" }", "{ kind = \"file\", path = \"/nonexistent/mu.csv\" }");
    assert!(matches!(ScenarioConfig::from_toml(&no_file), Err(QlabError::Config(_))));
    let a_empty = "scenario = \"theorem-a\"\nepsilon = 0.5\ngrid = { half_width = 3.0, n = 64 }\n";
    assert!(matches!(ScenarioConfig::from_toml(a_empty), Err(QlabError::Config(_))));
}

#[test]
fn hash_is_stable_and_sensitive() {
    let a = ScenarioConfig::from_toml(THEOREM_B).unwrap();
    let b = ScenarioConfig::from_toml(THEOREM_B).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
    // formatting does not matter, values do
    let spaced = THEOREM_B.replace("epsilon = 0.5", "epsilon   =   0.50");
    assert_eq!(ScenarioConfig::from_toml(&spaced).unwrap().hash(), a.hash());
    let mut c = a.clone();
    c.epsilon = 0.4;
    assert_ne!(c.hash(), a.hash());
    assert_ne!(ScenarioConfig::from_toml(THEOREM_A).unwrap().hash(), a.hash());
}

#[test]
fn report_serializes_with_required_fields() {
    let cfg = ScenarioConfig::from_toml(SMALL_B).unwrap();
    let rep = run(&cfg).unwrap();
    let v: serde_json::Value = serde_json::to_value(&rep).unwrap();
    assert_eq!(v["scenario"], "theorem-b");
    assert!(v["overall"].as_bool().unwrap());
    assert!(v["runtime_seconds"].as_f64().unwrap() >= 0.0);
    for chk in v["checks"].as_array().unwrap() {
        for key in ["name", "value", "threshold", "pass"] {
            assert!(chk.get(key).is_some(), "{chk}");
        }
    }
    let back: VerdictReport = serde_json::from_value(v).unwrap();
    assert_eq!(back, rep);
}

fn qlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qlab"))
}

#[test]
fn cli_exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    std::fs::write(&good, SMALL_A).unwrap();
    let out = dir.path().join("good.json");
    let st = qlab().args(["theorem-a", "--config"]).arg(&good).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let rep: VerdictReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(rep.overall);

    // an impossible residual threshold fails the verdict
    let strict = dir.path().join("strict.toml");
    std::fs::write(&strict, format!("{SMALL_A}\n[thresholds]\nresidual_max = -1.0\n")).unwrap();
    let st = qlab().args(["theorem-a", "--config"]).arg(&strict).arg("--out").arg(dir.path().join("s.json")).status().unwrap();
    assert_eq!(st.code(), Some(1));

    let st = qlab().args(["theorem-b", "--config"]).arg(&good).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn cli_extend_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("mu.csv");
    let st = qlab()
        .args(["extend", "--map", "quad:0.2", "--r0", "1.5", "--taper", "0.5", "--grid", "4:128", "--out"])
        .arg(&field)
        .status()
        .unwrap();
    assert!(st.success());
    let out = dir.path().join("solve.json");
    let st = qlab().arg("solve").arg("--mu-file").arg(&field).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["residual"].as_f64().unwrap() < 1e-6);
    let k = v["k"].as_f64().unwrap();
    assert!(k > 0.0 && k < 1.0);
    assert!(v["iterations"].as_u64().unwrap() > 0);
}
