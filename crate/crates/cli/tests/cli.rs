use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use adol_cli::config::parse_json;
use adol_cli::ledger::Ledger;
use adol_cli::RunConfig;
use tempfile::TempDir;

struct Run {
    dir: TempDir,
    output: Output,
}

impl Run {
    fn code(&self) -> i32 {
        self.output.status.code().expect("exit code")
    }

    fn stderr(&self) -> String {
        String::from_utf8_lossy(&self.output.stderr).into_owned()
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.out().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }

    fn csv(&self, name: &str) -> Vec<csv::StringRecord> {
        csv_rows(&self.read(name))
    }
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    let body: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let headers = r.headers().unwrap().clone();
    let mut rows = vec![headers];
    rows.extend(r.records().map(|x| x.unwrap()));
    rows
}

fn col(rows: &[csv::StringRecord], name: &str) -> usize {
    rows[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn adol(command: &str, config: &str, extra: &[&str]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    let output = Command::new(env!("CARGO_BIN_EXE_adol"))
        .arg(command)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    Run { dir, output }
}

fn strip_comment(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with('#'));
    text.lines().skip(1).collect::<Vec<_>>().join("\n")
}

const SMALL_MC: &str = r#""mc": {"n_paths": 20000, "n_steps": 100, "seed": 3}"#;

fn deterministic_model() -> String {
    let m = adol_core::AdolModel::baseline().with_xi(0.0);
    serde_json::to_string(&m).unwrap()
}

#[test]
fn constants_table_and_bound_flag() {
    let run = adol("constants", "{}", &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let text = run.read("constants.csv");
    assert_eq!(text.lines().filter(|l| l.starts_with('#')).count(), 1);
    let rows = run.csv("constants.csv");
    assert_eq!(rows.len(), 100);
    let (h, alpha, b, d2, flag) = (
        col(&rows, "h"),
        col(&rows, "alpha_h"),
        col(&rows, "b_h"),
        col(&rows, "d_h_sq"),
        col(&rows, "d_h_within_bound"),
    );
    let half = rows.iter().skip(1).find(|r| &r[h] == "0.5").unwrap();
    assert!((half[alpha].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    assert!((half[b].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    assert!(half[d2].parse::<f64>().unwrap().abs() < 1e-12);
    // the flag column is true on [0.40, 0.71] and false near H = 0.8
    for r in rows.iter().skip(1) {
        let hv: f64 = r[h].parse().unwrap();
        if (0.4..=0.71).contains(&hv) {
            assert_eq!(&r[flag], "true", "H = {hv}");
        }
        if (0.75..=0.85).contains(&hv) {
            assert_eq!(&r[flag], "false", "H = {hv}");
        }
    }
}

#[test]
fn check_mode_reports_the_unattainable_bound() {
    let run = adol("constants", "{}", &["--check"]);
    assert_eq!(run.code(), 3);
    assert!(run.stderr().contains("FAIL constants.d_h_bound"), "{}", run.stderr());
}

#[test]
fn figure_data_meets_the_published_claims() {
    let run = adol("figures", "{}", &["--check"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let j_gap = run.csv("j_approx_gap.csv");
    let diff = col(&j_gap, "diff_bps");
    let gaps: Vec<f64> = j_gap.iter().skip(1).map(|r| r[diff].parse().unwrap()).collect();
    assert_eq!(gaps.len(), 100);
    assert!(gaps.iter().all(|g| *g <= 10.0));
    let a2_curve = run.csv("a2_curve.csv");
    let a2 = col(&a2_curve, "a2_re");
    assert!(a2_curve.iter().skip(1).all(|r| r[a2].parse::<f64>().unwrap() < 0.0));
    for name in ["j_integrand.csv", "j_integrand_late.csv", "small_param_scale.csv", "small_param_scale_rough.csv"] {
        let rows = run.csv(name);
        assert!(rows.len() > 100, "{name}");
        assert!(rows.iter().skip(1).all(|r| r.len() == rows[0].len()));
    }
}

#[test]
fn resolved_config_echoes_defaults_and_seed_override() {
    let run = adol("cf", "{}", &["--seed", "77"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let cfg: RunConfig = parse_json(&run.read("resolved_config.json"), "echo").unwrap();
    assert_eq!(cfg.mc.seed, 77);
    assert_eq!(cfg.varswap.seed, 77);
    assert_eq!(cfg.model, adol_core::AdolModel::baseline());
    assert_eq!(cfg.varswap.observation_times.len(), 25);
    let text = run.read("resolved_config.json");
    for key in ["\"sigma_step\"", "\"outer_step_factor\"", "\"j_method\"", "\"damping\"", "\"format_version\""] {
        assert!(text.contains(key), "{key} missing from the echoed config");
    }
}

#[test]
fn reruns_are_identical_apart_from_the_comment_line() {
    let config = format!(r#"{{{SMALL_MC}, "pricing": {{"orders": [0], "strikes": [0.9, 1.0]}}}}"#);
    let a = adol("price", &config, &[]);
    let b = adol("price", &config, &[]);
    assert_eq!(a.code(), 0, "{}", a.stderr());
    assert_eq!(strip_comment(&a.out().join("price.csv")), strip_comment(&b.out().join("price.csv")));
    assert_eq!(a.read("resolved_config.json"), b.read("resolved_config.json"));
}

#[test]
fn unknown_keys_exit_with_validation_status() {
    let run = adol("cf", r#"{"model": {"kapa": 2.0}}"#, &[]);
    assert_eq!(run.code(), 1);
    assert!(run.stderr().contains("kapa"), "{}", run.stderr());
    let run = adol("cf", r#"{"cf": {"order": 1,}}"#, &[]);
    assert_eq!(run.code(), 1);
    assert!(run.stderr().contains("line"), "{}", run.stderr());
}

#[test]
fn invalid_values_exit_with_validation_status() {
    let run = adol("mc", r#"{"mc": {"n_paths": 7}}"#, &[]);
    assert_eq!(run.code(), 1, "{}", run.stderr());
    let run = adol("cf", "{}", &["--bogus"]);
    assert_eq!(run.code(), 1);
}

#[test]
fn numerical_failures_exit_with_status_two() {
    let config = r#"{"pricing": {"orders": [0], "include_mc": false, "strikes": [1.0],
        "fourier": {"quad": {"abs_tol": 1e-300, "rel_tol": 1e-300, "max_subdivisions": 1}}}}"#;
    let run = adol("price", config, &[]);
    assert_eq!(run.code(), 2, "{}", run.stderr());
}

#[test]
fn deterministic_ladder_matches_black_scholes() {
    let config = format!(r#"{{"model": {}, {SMALL_MC}}}"#, deterministic_model());
    let run = adol("price", &config, &["--check"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let rows = run.csv("price.csv");
    let (method, gap) = (col(&rows, "method"), col(&rows, "gap_to_bs"));
    let cf_rows: Vec<_> = rows.iter().skip(1).filter(|r| r[method].starts_with("cf-order")).collect();
    assert_eq!(cf_rows.len(), 27);
    for r in cf_rows {
        assert!(r[gap].parse::<f64>().unwrap().abs() <= 1e-6);
    }
    assert!(rows.iter().any(|r| &r[method] == "mc"));
}

#[test]
fn fft_ladder_agrees_with_quadrature() {
    let base = r#""orders": [1], "include_mc": false, "strikes": [0.85, 1.0, 1.15]"#;
    let q = adol("price", &format!(r#"{{"pricing": {{{base}}}}}"#), &[]);
    let f = adol("price", &format!(r#"{{"pricing": {{{base}, "ladder": "fft"}}}}"#), &[]);
    let (rq, rf) = (q.csv("price.csv"), f.csv("price.csv"));
    let v = col(&rq, "value");
    for (a, b) in rq.iter().skip(1).zip(rf.iter().skip(1)) {
        let (a, b): (f64, f64) = (a[v].parse().unwrap(), b[v].parse().unwrap());
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }
}

#[test]
fn deterministic_varswap_matches_integrated_variance() {
    let config = format!(
        r#"{{"model": {}, {SMALL_MC}, "varswap": {{"mc_states": 64, "n_observations": 25}}}}"#,
        deterministic_model()
    );
    let run = adol("varswap", &config, &["--check"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let rows = run.csv("varswap.csv");
    let (method, rel) = (col(&rows, "method"), col(&rows, "rel_gap_to_integrated_variance"));
    let cf = rows.iter().find(|r| &r[method] == "cf-forward").unwrap();
    assert!(cf[rel].parse::<f64>().unwrap().abs() <= 0.01);
}

#[test]
fn monte_carlo_diagnostics() {
    let config = format!(r#"{{"model": {}, {SMALL_MC}}}"#, deterministic_model());
    let run = adol("mc", &config, &["--check"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let rows = run.csv("mc.csv");
    let names: Vec<&str> = rows.iter().skip(1).map(|r| r.get(0).unwrap()).collect();
    assert_eq!(names, ["discounted_spot", "atm_call", "sigma_mean", "v_mean"]);
}

#[test]
fn ledger_round_trips_and_records_the_gaps() {
    let run = adol("ledger", r#"{"grids": {"u": [0.0, 1.0, 2.0]}}"#, &["--check"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let text = run.read("ledger.json");
    let ledger: Ledger = parse_json(&text, "ledger").unwrap();
    assert_eq!(serde_json::to_string_pretty(&ledger).unwrap() + "\n", text);
    let cfg = serde_json::to_string(&ledger.config).unwrap();
    assert_eq!(parse_json::<RunConfig>(&cfg, "embedded").unwrap(), ledger.config);

    assert_eq!(ledger.mode_gaps[0].abs_gap, Some(0.0));
    assert!(ledger.mode_gaps[1].abs_gap.unwrap() > 0.1);
    assert!(ledger.residuals.affine.max.unwrap() <= 1e-6);
    assert!(ledger.residuals.paper.max.unwrap() > 1e-3);
    assert!(ledger.tau.max_rel_gap.unwrap() <= 1e-6);
    assert!(ledger.tau.single_rate_max_rel_gap.unwrap() > 1e-2);
    assert_eq!(ledger.do_bound.exceeded_on, Some((0.72, 0.9)));
    assert!(ledger.diffusion_scale.implied < ledger.diffusion_scale.b_h);
}

#[test]
fn check_command_writes_a_summary() {
    let config = format!(
        r#"{{{SMALL_MC}, "pricing": {{"orders": [0, 1], "strikes": [1.0]}}, "varswap": {{"mc_states": 64}},
            "grids": {{"u": [0.0, 1.0], "residual_points": 20}}}}"#
    );
    let run = adol("check", &config, &[]);
    assert_eq!(run.code(), 3, "{}", run.stderr());
    let rows = run.csv("check.csv");
    let (name, status) = (col(&rows, "check"), col(&rows, "status"));
    let failed: Vec<&str> =
        rows.iter().skip(1).filter(|r| &r[status] == "FAIL").map(|r| r.get(name).unwrap()).collect();
    assert_eq!(failed, ["d_h_bound"]);
    for f in ["constants.csv", "j_approx_gap.csv", "cf.csv", "price.csv", "varswap.csv", "mc.csv", "ledger.json"] {
        assert!(run.out().join(f).exists(), "{f}");
    }
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let run = adol("constants", &text, &[]);
        assert_eq!(run.code(), 0, "{}: {}", path.display(), run.stderr());
        seen += 1;
    }
    assert!(seen >= 3);
}
