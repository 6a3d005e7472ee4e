//! End-to-end tests of the `mss` binary: exit codes, validation messages,
//! artifact round-trips, and the determinism guarantee.

use std::path::PathBuf;
use std::process::{Command, Output};

use mixed_schrodinger::analysis::ScanEntry;
use mixed_schrodinger::io::read_mgf1;
use mixed_schrodinger_cli::artifacts::{
    read_csv, read_dat, read_json, CandidateRow, HistoryRow, LambdaArtifact, PohozaevArtifact,
    ProbeArtifact, ScanArtifact, SolveArtifact, VerifyArtifact,
};

fn mss() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mss"))
}

struct Run {
    out: Output,
    dir: PathBuf,
    _tmp: tempfile::TempDir,
}

impl Run {
    fn stderr(&self) -> String {
        String::from_utf8_lossy(&self.out.stderr).into_owned()
    }
    fn stdout(&self) -> String {
        String::from_utf8_lossy(&self.out.stdout).into_owned()
    }
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

/// Runs a subcommand with the given config text in a fresh temp directory.
fn run(subcommand: &str, config: &str, extra: &[&str]) -> Run {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("run.cfg");
    std::fs::write(&cfg_path, config).unwrap();
    let dir = tmp.path().join("out");
    let out = mss()
        .arg(subcommand)
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(&dir)
        .args(extra)
        .output()
        .unwrap();
    Run {
        out,
        dir,
        _tmp: tmp,
    }
}

const SMALL_SOLVE: &str = "grid.nx = 32\n\
                           grid.ny = 32\n\
                           grid.lx = 18\n\
                           grid.ly = 18\n\
                           model.kappa = 0\n\
                           solver.n_starts = 2\n\
                           solver.max_iters = 2000\n";

const CRITICAL_CONSTANT: &str = "grid.nx = 32\n\
                                 grid.ny = 32\n\
                                 grid.lx = 18\n\
                                 grid.ly = 18\n\
                                 model.alpha = 3\n\
                                 model.beta = 3\n\
                                 model.kappa = 1\n\
                                 weight.kind = constant\n\
                                 solver.n_starts = 2\n\
                                 solver.max_iters = 800\n";

#[test]
fn solve_with_minimal_config_writes_round_trippable_artifacts() {
    let r = run("solve", SMALL_SOLVE, &[]);
    assert!(r.out.status.success(), "stderr: {}", r.stderr());

    let art: SolveArtifact = read_json(&r.path("report.json")).unwrap();
    assert_eq!(art.model.kappa, 0.0);
    assert_eq!((art.grid.nx, art.grid.ny), (32, 32));
    assert!(art.energy.total.is_finite());

    let u = read_mgf1(&r.path(&art.u_file)).unwrap();
    let v = read_mgf1(&r.path(&art.v_file)).unwrap();
    assert_eq!((u.nx, u.ny, u.lx, u.ly), (32, 32, 18.0, 18.0));
    assert_eq!((v.nx, v.ny), (32, 32));
    assert!(u.field.is_finite() && v.field.is_finite());

    let hist: Vec<HistoryRow> = read_csv(&r.path(&art.history_file)).unwrap();
    assert!(!hist.is_empty());
    assert_eq!(hist[0].iter, 0);
    let last = hist.last().unwrap();
    assert!(
        (last.energy - art.energy.total).abs() <= 1e-12 * art.energy.total.abs(),
        "history must end at the reported energy: {} vs {}",
        last.energy,
        art.energy.total
    );
    for w in hist.windows(2) {
        assert!(
            w[1].energy <= w[0].energy,
            "accepted iterates must be monotone in energy"
        );
    }
}

#[test]
fn invalid_alpha_exits_nonzero_citing_the_rule() {
    let r = run("solve", "model.alpha = 0.5\n", &[]);
    assert_eq!(r.out.status.code(), Some(2), "stderr: {}", r.stderr());
    let msg = r.stderr();
    assert!(
        msg.contains("alpha") && msg.contains("> 1"),
        "must cite the exponent rule: {msg}"
    );
}

#[test]
fn unknown_config_key_is_cited_by_name() {
    let r = run("solve", "grid.nz = 4\n", &[]);
    assert_eq!(r.out.status.code(), Some(2));
    assert!(r.stderr().contains("grid.nz"), "stderr: {}", r.stderr());
}

#[test]
fn scan_with_a_single_kappa_fails_with_the_module_named() {
    let r = run(
        "scan-kappa",
        "model.kappa = 5\nscan.threshold = 1.0\n",
        &[],
    );
    assert_eq!(r.out.status.code(), Some(1));
    let msg = r.stderr();
    assert!(
        msg.contains("analysis") && msg.contains("at least two"),
        "stderr: {msg}"
    );
}

#[test]
fn identical_config_and_seed_give_bit_identical_outputs_modulo_timestamp() {
    let a = run("solve", SMALL_SOLVE, &[]);
    assert!(a.out.status.success(), "stderr: {}", a.stderr());
    // A different worker count must not change any output either.
    let b = run("solve", SMALL_SOLVE, &["--jobs", "3"]);
    assert!(b.out.status.success(), "stderr: {}", b.stderr());

    for name in ["u.mgf1", "v.mgf1", "history.csv"] {
        let fa = std::fs::read(a.path(name)).unwrap();
        let fb = std::fs::read(b.path(name)).unwrap();
        assert_eq!(fa, fb, "{name} must be bit-identical");
    }
    let mut ja: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path("report.json")).unwrap()).unwrap();
    let mut jb: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(b.path("report.json")).unwrap()).unwrap();
    ja.as_object_mut().unwrap().remove("timestamp_unix");
    jb.as_object_mut().unwrap().remove("timestamp_unix");
    assert_eq!(ja, jb, "report.json must match modulo the timestamp");
}

#[test]
fn seed_flag_overrides_the_config_seed() {
    let cfg = format!("{SMALL_SOLVE}seed = 5\n");
    let r = run("solve", &cfg, &["--seed", "123"]);
    assert!(r.out.status.success(), "stderr: {}", r.stderr());
    let art: SolveArtifact = read_json(&r.path("report.json")).unwrap();
    assert_eq!(art.seed, 123);
}

#[test]
fn verify_operators_passes_on_defaults_and_exits_zero() {
    let r = run("verify-operators", "", &[]);
    assert!(r.out.status.success(), "stderr: {}", r.stderr());
    assert!(r.stdout().contains("all checks passed"), "{}", r.stdout());
    let art: VerifyArtifact = read_json(&r.path("verify.json")).unwrap();
    assert!(art.all_pass);
    assert_eq!(art.checks.len(), 5);
    for c in &art.checks {
        assert!(c.pass, "{} failed: {} > {}", c.name, c.worst, c.tolerance);
    }
}

#[test]
fn scan_writes_mutually_consistent_round_trippable_tables() {
    let cfg = "grid.nx = 32\n\
               grid.ny = 32\n\
               grid.lx = 18\n\
               grid.ly = 18\n\
               model.kappa = 0, 30, 90\n\
               solver.n_starts = 2\n\
               scan.threshold = 1.0\n";
    let r = run("scan-kappa", cfg, &[]);
    assert!(r.out.status.success(), "stderr: {}", r.stderr());

    let art: ScanArtifact = read_json(&r.path("scan.json")).unwrap();
    assert_eq!(art.threshold, 1.0);
    assert_eq!(art.threshold_source, "config");
    assert_eq!(art.entries.len(), 3);

    let rows: Vec<ScanEntry> = read_csv(&r.path("scan.csv")).unwrap();
    assert_eq!(rows.len(), art.entries.len());
    let pts = read_dat(&r.path("energy_vs_kappa.dat")).unwrap();
    assert_eq!(pts.len(), art.entries.len());
    for ((row, pt), entry) in rows.iter().zip(&pts).zip(&art.entries) {
        assert_eq!(row.kappa.to_bits(), entry.kappa.to_bits());
        assert_eq!(row.energy.to_bits(), entry.energy.to_bits());
        assert_eq!(pt.0.to_bits(), entry.kappa.to_bits());
        assert_eq!(pt.1.to_bits(), entry.energy.to_bits());
    }
}

#[test]
fn estimate_lambda_emits_both_symmetry_classes_with_subspace_ordering() {
    let cfg = "grid.nx = 32\n\
               grid.ny = 32\n\
               grid.lx = 16\n\
               grid.ly = 16\n\
               lambda.n_starts = 2\n";
    let r = run("estimate-lambda", cfg, &[]);
    assert!(r.out.status.success(), "stderr: {}", r.stderr());

    let full: LambdaArtifact = read_json(&r.path("lambda_s0.5.json")).unwrap();
    let radial: LambdaArtifact = read_json(&r.path("lambda_s0.5_radial.json")).unwrap();
    assert!(!full.radial && radial.radial);
    assert!(full.lambda.is_finite() && radial.lambda.is_finite());
    // The radial subspace cannot have a smaller infimum (1% solver slack).
    assert!(
        radial.lambda >= full.lambda * 0.99,
        "radial {} vs unrestricted {}",
        radial.lambda,
        full.lambda
    );
    let m = read_mgf1(&r.path(&full.minimizer_file)).unwrap();
    assert_eq!((m.nx, m.ny), (32, 32));
}

#[test]
fn probe_with_constant_weight_witnesses_nonexistence_and_round_trips() {
    let r = run("check-pohozaev", CRITICAL_CONSTANT, &[]);
    assert!(r.out.status.success(), "stderr: {}", r.stderr());

    let art: ProbeArtifact = read_json(&r.path("probe.json")).unwrap();
    assert!(art.report.gated, "constant weight satisfies the hypothesis");
    assert!(!art.report.candidates.is_empty());
    for c in &art.report.candidates {
        // With h constant the right side vanishes identically, so any
        // nonzero candidate carries a positive gap.
        assert!(c.residuals.rhs622.abs() <= 1e-12);
        if c.energy.is_finite() && c.residuals.lhs622 > 0.0 {
            assert!(c.witnesses_nonexistence, "start {}", c.start_index);
            assert!(c.residuals.gap622 > 0.0);
        }
    }
    let rows: Vec<CandidateRow> = read_csv(&r.path("candidates.csv")).unwrap();
    assert_eq!(rows.len(), art.report.candidates.len());
    for (row, c) in rows.iter().zip(&art.report.candidates) {
        assert_eq!(row.start_index, c.start_index);
        assert_eq!(row.gap622.to_bits(), c.residuals.gap622.to_bits());
    }
}

#[test]
fn probe_with_annular_weight_declines_at_the_hypothesis_gate() {
    let cfg = "grid.nx = 32\n\
               grid.ny = 32\n\
               grid.lx = 18\n\
               grid.ly = 18\n\
               model.alpha = 3\n\
               model.beta = 3\n\
               model.kappa = 1\n\
               weight.kind = annular-gaussian\n";
    let r = run("check-pohozaev", cfg, &[]);
    assert!(r.out.status.success(), "stderr: {}", r.stderr());
    let art: ProbeArtifact = read_json(&r.path("probe.json")).unwrap();
    assert!(!art.report.gated, "annular weight must fail the sign gate");
    assert!(art.report.candidates.is_empty());
    assert!(
        art.report.hypothesis.worst_x > 0.0 || art.report.hypothesis.worst_y > 0.0,
        "a violation magnitude must be reported"
    );
}

#[test]
fn pair_mode_identity_check_reports_machine_level_constraint_residual() {
    // Solve a critical-regime radial problem, then feed the stored pair back.
    let solve_cfg = "grid.nx = 48\n\
                     grid.ny = 48\n\
                     grid.lx = 24\n\
                     grid.ly = 24\n\
                     model.alpha = 3\n\
                     model.beta = 3\n\
                     model.kappa = 60\n\
                     solver.radial = true\n\
                     solver.n_starts = 2\n";
    let s = run("solve", solve_cfg, &[]);
    assert!(s.out.status.success(), "stderr: {}", s.stderr());
    let sa: SolveArtifact = read_json(&s.path("report.json")).unwrap();
    assert!(sa.converged);

    let pz_cfg = format!(
        "model.alpha = 3\n\
         model.beta = 3\n\
         model.kappa = 60\n\
         pohozaev.u = {}\n\
         pohozaev.v = {}\n",
        s.path("u.mgf1").display(),
        s.path("v.mgf1").display()
    );
    let r = run("check-pohozaev", &pz_cfg, &[]);
    assert!(r.out.status.success(), "stderr: {}", r.stderr());
    let art: PohozaevArtifact = read_json(&r.path("pohozaev.json")).unwrap();
    // At the critical exponent the norm identity is algebraically the
    // manifold constraint, which the converged state satisfies to rounding.
    assert!(
        art.report.r62 < 1e-10,
        "r62 = {} should be rounding-level",
        art.report.r62
    );
    assert!((art.grid.nx, art.grid.ny) == (48, 48));
}

#[test]
fn missing_tabulated_path_and_half_pair_are_config_errors() {
    let r = run("solve", "weight.kind = tabulated\n", &[]);
    assert_eq!(r.out.status.code(), Some(2));
    assert!(r.stderr().contains("weight.path"), "{}", r.stderr());

    let r = run("check-pohozaev", "pohozaev.u = only_u.mgf1\n", &[]);
    assert_eq!(r.out.status.code(), Some(2));
    assert!(r.stderr().contains("pohozaev"), "{}", r.stderr());
}

#[test]
fn help_lists_all_subcommands() {
    let out = mss().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    for sub in [
        "solve",
        "scan-kappa",
        "estimate-lambda",
        "check-pohozaev",
        "verify-operators",
    ] {
        assert!(text.contains(sub), "--help must list {sub}");
    }
}
