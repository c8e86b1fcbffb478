use std::path::Path;
use std::process::{Command, Output};

use bgk_experiments::config::{Preset, Scheme};
use bgk_experiments::io::{parse_diagnostics, parse_snapshot, read_text, Snapshot, DIAGNOSTICS_FILE, DIAGNOSTICS_HEADER};
use bgk_experiments::{run_experiment, RunConfig};

fn bgk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bgk")).args(args).output().expect("spawn bgk")
}

fn bgk_in(dir: &Path, args: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut all = args.to_vec();
    all.extend(["--out", out]);
    bgk(&all)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small(scheme: Scheme) -> RunConfig {
    let mut c = Preset::Custom.defaults();
    c.scheme = scheme;
    c.n_x = 48;
    c.n_v = 12;
    c.t_end = 0.5;
    c.snapshot_times = vec![0.0, 0.25, 0.5];
    c
}

#[test]
fn same_seed_gives_identical_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "--preset", "custom", "--scheme", "dlra_2r", "--nx", "48", "--nv", "12", "--tend", "0.5", "--seed", "7"];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = bgk_in(d, &args);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let da = std::fs::read(a.join(DIAGNOSTICS_FILE)).unwrap();
    let db = std::fs::read(b.join(DIAGNOSTICS_FILE)).unwrap();
    assert!(!da.is_empty());
    assert_eq!(da, db);
}

#[test]
fn written_diagnostics_parse_back_to_the_run_records() {
    let dir = tempfile::tempdir().unwrap();
    for scheme in [Scheme::FullStable, Scheme::Dlra2r, Scheme::Dlra4r] {
        let mut c = small(scheme);
        c.output_dir = dir.path().join(scheme.name());
        let s = run_experiment(&c).unwrap();
        let text = read_text(&c.output_dir.join(DIAGNOSTICS_FILE)).unwrap();
        assert_eq!(text.lines().next(), Some(DIAGNOSTICS_HEADER));
        assert_eq!(parse_diagnostics(&text).unwrap(), s.records);
        assert_eq!(s.records.len(), s.steps + 1);
        assert_eq!(s.records.last().unwrap().t, 0.5);
        let times: Vec<f64> = s.densities.iter().map(|(t, _)| *t).collect();
        assert_eq!(times, vec![0.0, 0.25, 0.5]);
        for kind in ["rho", "f"] {
            for t in ["0", "0.25", "0.5"] {
                let path = c.output_dir.join(format!("{kind}_t{t}.csv"));
                parse_snapshot(&read_text(&path).unwrap()).unwrap();
            }
        }
    }
}

#[test]
fn stable_full_run_has_non_increasing_norm_and_full_rank_column() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(Scheme::FullStable);
    c.output_dir = dir.path().to_path_buf();
    let s = run_experiment(&c).unwrap();
    for w in s.records.windows(2) {
        assert!(w[1].h_norm_sq <= w[0].h_norm_sq * (1.0 + 1e-12), "{w:?}");
    }
    assert!(s.records.iter().all(|r| r.rank == 12));
    for r in &s.records {
        assert!((r.kappa_plus - 1.0).abs() < 1e-11 && (r.kappa_minus - 1.0).abs() < 1e-11);
    }
    let m0 = s.records[0].mass;
    assert!(s.records.iter().all(|r| (r.mass - m0).abs() <= 1e-12 * m0));
}

#[test]
fn two_dimensional_snapshot_header() {
    let dir = tempfile::tempdir().unwrap();
    let o = bgk_in(
        dir.path(),
        &["run", "--preset", "plane2d-small", "--scheme", "dlra_2r", "--nx", "128", "--nv", "4", "--tend", "0.01", "--snapshots", "0,0.01"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = read_text(&dir.path().join("rho_t0.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("# n_x1=128 n_x2=128 domain=[-3.0,3.0]x[-3.0,3.0]"));
    match parse_snapshot(&text).unwrap() {
        Snapshot::Density2d { n_x1, n_x2, rho, .. } => {
            assert_eq!((n_x1, n_x2, rho.len()), (128, 128, 128 * 128));
            // symmetric initial density
            assert_eq!(rho[0], rho[128 * 128 - 1]);
        }
        other => panic!("unexpected snapshot {other:?}"),
    }
    assert!(dir.path().join("rho_t0.01.csv").exists());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "preset=custom\n# comment\nsigmaa=2\n").unwrap();
    let o = bgk(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("sigmaa"), "{}", stderr(&o));

    let o = bgk(&["run", "--preset", "custom", "--sigmaa", "2"]);
    assert!(!o.status.success());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "preset=custom\nnx=32\nnv=8\ntend=0.2\nsigma=5\n").unwrap();
    let out = dir.path().join("run");
    let o = bgk(&["run", "--config", cfg.to_str().unwrap(), "--sigma", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = read_text(&out.join("manifest.txt")).unwrap();
    assert!(manifest.lines().any(|l| l == "sigma=3"), "{manifest}");
    assert!(manifest.lines().any(|l| l == "nx=32"), "{manifest}");
    assert!(manifest.contains("# status=completed"));
}

#[test]
fn positivity_failure_keeps_partial_output_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = bgk_in(dir.path(), &["run", "--preset", "custom", "--scheme", "full_naive", "--cfl", "2", "--sigma", "0", "--tend", "8"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("non-positive"), "{}", stderr(&o));
    let manifest = read_text(&dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("# status=failed"), "{manifest}");
    let records = parse_diagnostics(&read_text(&dir.path().join(DIAGNOSTICS_FILE)).unwrap()).unwrap();
    assert!(records.len() > 1);
    assert!(records.last().unwrap().t < 8.0);
}

#[test]
fn cfl_above_one_is_refused_for_the_stable_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let o = bgk_in(dir.path(), &["run", "--preset", "custom", "--cfl", "1.5"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("cfl"), "{}", stderr(&o));
    assert!(!dir.path().join(DIAGNOSTICS_FILE).exists());
}

#[test]
fn invalid_thread_count_is_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_bgk"))
        .args(["run", "--preset", "custom"])
        .env("BGK_THREADS", "zero")
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(stderr(&o).contains("BGK_THREADS"));
}

#[test]
fn check_subcommand_passes() {
    let o = bgk(&["check", "--seed", "3"]);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{out}");
    assert!(out.lines().count() >= 9);
    assert!(out.lines().all(|l| l.starts_with("PASS ")), "{out}");
}
