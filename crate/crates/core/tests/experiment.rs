use std::ffi::OsString;
use std::path::Path;

use pstlab::experiment::config::{ExperimentKind, SlicingSection};
use pstlab::experiment::{
    execute, fit_inverse_m, resolve_out_dir, run, ExperimentConfig, ExperimentError, ResultTable, RunOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_slicing(seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(ExperimentKind::Slicing, seed);
    c.slicing = Some(SlicingSection { m: vec![1, 2, 4, 8], ..Default::default() });
    c
}

#[test]
fn exact_inverse_law_is_recovered() {
    let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&m| (m, 2.0 / m)).collect();
    let fit = fit_inverse_m(&pts).unwrap();
    assert!((fit.b - 2.0).abs() < 1e-14);
    assert!(fit.residual < 1e-14);
    assert!(!fit.misfit);
}

#[test]
fn noisy_inverse_law_stays_within_three_percent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let b = rng.random_range(0.1..10.0);
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
            .iter()
            .map(|&m| (m, b / m * (1.0 + 0.01 * rng.random_range(-1.0..1.0))))
            .collect();
        let fit = fit_inverse_m(&pts).unwrap();
        assert!((fit.b / b - 1.0).abs() < 0.03, "b {b} fitted {}", fit.b);
    }
}

#[test]
fn constant_data_is_flagged_as_misfit() {
    let pts: Vec<(f64, f64)> = (1..=6).map(|m| (m as f64, 1.0)).collect();
    let fit = fit_inverse_m(&pts).unwrap();
    assert!(fit.misfit, "residual {}", fit.residual);
}

#[test]
fn degenerate_fit_inputs_are_rejected() {
    assert!(fit_inverse_m(&[(1.0, 1.0), (2.0, 0.5)]).is_err());
    assert!(fit_inverse_m(&[(1.0, 1.0), (1.0, 0.5), (2.0, 0.5)]).is_err());
    assert!(fit_inverse_m(&[(0.0, 1.0), (1.0, 0.5), (2.0, 0.5)]).is_err());
    assert!(fit_inverse_m(&[(1.0, 0.0), (2.0, 0.0), (4.0, 0.0)]).is_err());
    assert!(fit_inverse_m(&[(1.0, f64::NAN), (2.0, 0.5), (4.0, 0.2)]).is_err());
}

#[test]
fn table_rejects_non_finite_and_ragged_rows() {
    let mut t = ResultTable::new(["a", "b"]);
    assert!(matches!(t.push_row(vec![1.0, f64::NAN]), Err(ExperimentError::Numeric(_))));
    assert!(t.push_row(vec![1.0]).is_err());
    assert!(t.push_row(vec![1.0, 2.0]).is_ok());
    assert!(t.set_extra("x", f64::INFINITY).is_err());
}

#[test]
fn csv_uses_seventeen_significant_digits() {
    let mut t = ResultTable::new(["x"]);
    t.push_row(vec![0.1]).unwrap();
    let text = String::from_utf8(t.to_csv_bytes()).unwrap();
    assert_eq!(text, "x\n1.0000000000000001e-1\n");
}

#[test]
fn table_and_metadata_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut t = ResultTable::new(["n", "value"]).with_label_column("check");
    t.push_labeled_row("first", vec![1.0, 1.0 / 3.0]).unwrap();
    t.push_labeled_row("second, quoted", vec![2.0, -2.5e-300]).unwrap();
    t.set_extra("b", std::f64::consts::PI).unwrap();
    t.metadata.seed = 42;
    t.metadata.config_hash = "abc".into();
    let echo = serde_json::json!({"seed": 42});
    let (csv, _) = t.write(dir.path(), "t", &echo).unwrap();
    let (back, config) = ResultTable::read(&csv).unwrap();
    assert_eq!(back, t);
    assert_eq!(config, echo);
}

#[test]
fn minimal_config_parses_with_defaults() {
    let c = ExperimentConfig::from_toml_str("experiment = \"ising-kik\"\nseed = 9\n").unwrap();
    assert_eq!(c.experiment, ExperimentKind::IsingKik);
    assert_eq!(c.ising().n, 3);
    assert_eq!(c.ising().epsilon.len(), 10);
    c.validate().unwrap();
}

#[test]
fn parse_errors_exit_with_two() {
    for text in [
        "experiment = \"slicing\"\n",
        "experiment = \"nope\"\nseed = 1\n",
        "experiment = \"slicing\"\nseed = 1\nextra = 3\n",
        "experiment = \"slicing\"\nseed = \"one\"\n",
        "experiment = \"slicing\"\nseed = 1\n[slicing]\nmm = [1]\n",
        "experiment = = 3",
    ] {
        let e = ExperimentConfig::from_toml_str(text).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{text}: {e}");
    }
}

fn validation_path(text: &str) -> String {
    let c = ExperimentConfig::from_toml_str(text).unwrap();
    match c.validate().unwrap_err() {
        ExperimentError::Validation { path, .. } => path,
        other => panic!("expected validation error, got {other}"),
    }
}

#[test]
fn validation_errors_name_the_field() {
    let base = "experiment = \"slicing\"\nseed = 1\n";
    assert_eq!(validation_path(&format!("{base}[slicing]\nm = [1, 2, 0]\n")), "slicing.m[2]");
    assert_eq!(validation_path(&format!("{base}[slicing]\nm = [1, 2, 2]\n")), "slicing.m");
    assert_eq!(validation_path(&format!("{base}[twirl]\nmode = \"sampled\"\n")), "twirl.count");
    assert_eq!(
        validation_path(&format!("{base}[noise]\namplitude_damping = [0.1, -1]\n")),
        "noise.amplitude_damping[1]"
    );
    assert_eq!(validation_path(&format!("{base}[noise]\ndephasing = [0.1, 0.1, 0.1]\n")), "noise.dephasing");
    assert_eq!(validation_path(&format!("{base}[ising]\nn = 3\n")), "ising");
    assert_eq!(validation_path("experiment = \"ising-kik\"\nseed = 1\n[ising]\nn = 2\n"), "ising.weights");
    assert_eq!(
        validation_path("experiment = \"calibration\"\nseed = 1\n[calibration]\nchi = [1.0, -1.0]\n"),
        "calibration.chi[1]"
    );
    assert_eq!(validation_path("experiment = \"identities\"\nseed = 1\n[identities]\nn = 4\n"), "identities.n");
    let e =
        ExperimentConfig::from_toml_str(&format!("{base}[slicing]\nm = [0, 1, 2]\n")).unwrap().validate().unwrap_err();
    assert_eq!(e.exit_code(), 3);
}

#[test]
fn out_dir_precedence_is_flag_config_env_default() {
    let mut c = small_slicing(1);
    let env = Some(OsString::from("from-env"));
    assert_eq!(resolve_out_dir(None, &c, None), Path::new("results"));
    assert_eq!(resolve_out_dir(None, &c, env.clone()), Path::new("from-env"));
    c.output.dir = Some("from-config".into());
    assert_eq!(resolve_out_dir(None, &c, env.clone()), Path::new("from-config"));
    assert_eq!(resolve_out_dir(Some(Path::new("from-flag")), &c, env), Path::new("from-flag"));
}

#[test]
fn config_echo_records_defaults_and_hash_ignores_timestamp() {
    let c = small_slicing(3);
    let a = execute(&c).unwrap();
    let b = execute(&c).unwrap();
    assert_eq!(a[0].1.metadata.config_hash, b[0].1.metadata.config_hash);
    assert_eq!(a[0].1.metadata.config_hash.len(), 64);
    let other = execute(&small_slicing(4)).unwrap();
    assert_ne!(a[0].1.metadata.config_hash, other[0].1.metadata.config_hash);

    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &ExperimentConfig::new(ExperimentKind::Slicing, 3),
        &RunOptions { seed: None, out_dir: Some(dir.path().to_path_buf()) },
    )
    .unwrap();
    let (_, echo) = ResultTable::read(&out.files[0]).unwrap();
    assert_eq!(echo["slicing"]["m"], serde_json::json!([1, 2, 4, 8, 16, 32]));
}

#[test]
fn seed_override_lands_in_metadata_and_echo() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions { seed: Some(77), out_dir: Some(dir.path().to_path_buf()) };
    let out = run(&small_slicing(1), &opts).unwrap();
    let (t, echo) = ResultTable::read(&out.files[0]).unwrap();
    assert_eq!(t.metadata.seed, 77);
    assert_eq!(echo["seed"], 77);
}

#[test]
fn sampled_runs_are_byte_identical_across_thread_counts() {
    let mut c = small_slicing(11);
    c.twirl = pstlab::experiment::config::TwirlSection { mode: pstlab::twirl::TwirlMode::Sampled, count: 3 };
    let bytes = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| execute(&c).unwrap()[0].1.to_csv_bytes())
    };
    let one = bytes(1);
    assert_eq!(one, bytes(4));
    assert_eq!(one, bytes(1));
}

#[test]
fn identities_run_reports_every_check() {
    let mut c = ExperimentConfig::new(ExperimentKind::Identities, 2);
    c.identities = Some(pstlab::experiment::config::IdentitiesSection { n: Some(1), samples: 4 });
    let tables = execute(&c).unwrap();
    let t = &tables[0].1;
    let names: Vec<&str> = t.labels().iter().map(String::as_str).collect();
    assert_eq!(
        names,
        [
            "triple_product",
            "pauli_exponential",
            "signed_twirl_sum",
            "operator_norm_bound",
            "virtual_z_collapse",
            "large_m_limit"
        ]
    );
    assert!(t.column("passed").unwrap().iter().all(|&p| p == 1.0));
    assert_eq!(t.metadata.extras["all_passed"], 1.0);
}

#[test]
fn hermitianizer_table_has_one_row_per_damping_rate() {
    let text = "experiment = \"hermitianizer\"\nseed = 1\n[hermitianizer]\ndamping = [0.001, 0.01]\n";
    let c = ExperimentConfig::from_toml_str(text).unwrap();
    let t = &execute(&c).unwrap()[0].1;
    assert_eq!(t.columns(), ["damping", "g_no_pst", "g_pst", "ratio"]);
    assert_eq!(t.len(), 2);
    assert!(t.column("ratio").unwrap().iter().all(|&r| r > 1.0));
}

#[test]
fn ising_run_with_histogram_writes_two_tables() {
    let text = "experiment = \"ising-kik\"\nseed = 1\n[ising]\nn = 2\nweights = [0.5, 1.7]\nepsilon = [0.01, 0.02]\n\
                [ising.histogram]\nrepeats = 4\ncounts = [2]\nbins = 2\n";
    let c = ExperimentConfig::from_toml_str(text).unwrap();
    let tables = execute(&c).unwrap();
    assert_eq!(tables.len(), 2);
    assert_eq!(tables[0].0, "ising-kik");
    assert_eq!(tables[0].1.columns(), ["epsilon", "err_raw", "err_pst", "err_kik", "err_kik_pst", "suppression"]);
    assert_eq!(tables[1].0, "ising-kik_histogram");
    let counts: f64 = tables[1].1.column("count").unwrap().iter().sum();
    assert_eq!(counts, 4.0);
    assert!(tables[1].1.metadata.extras.contains_key("mean_suppression_n2"));
}

#[test]
fn calibration_table_has_fixed_header() {
    let text = "experiment = \"calibration\"\nseed = 1\n[calibration]\nchi = [0.99, 1.0, 1.01]\npst = false\n";
    let c = ExperimentConfig::from_toml_str(text).unwrap();
    let t = &execute(&c).unwrap()[0].1;
    let csv = String::from_utf8(t.to_csv_bytes()).unwrap();
    assert!(csv.starts_with("chi,sp_mean,sigma,n_twirls\n"));
    assert!(t.metadata.extras.contains_key("slope"));
}

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&path).unwrap();
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
