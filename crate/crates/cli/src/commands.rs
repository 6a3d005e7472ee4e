//! The five subcommands: each validates its inputs through [`RunConfig`],
//! drives the library, writes its artifacts into the output directory, and
//! prints a short human summary. Returned `u8` values are process exit
//! codes (0 = success; `verify-operators` returns 1 when a check fails).

use mixed_schrodinger::analysis::{
    estimate_kappa_star, estimate_lambda, scan_kappa, SobolevEstimate,
};
use mixed_schrodinger::io::{read_mgf1, write_mgf1};
use mixed_schrodinger::pohozaev::{nonexistence_probe, pohozaev_residuals};
use mixed_schrodinger::solver::multistart;
use mixed_schrodinger::{Grid2D, ModelParams, Pair, Regime};

use crate::artifacts::{
    out_path, write_csv, write_dat, write_json, CandidateRow, GridMeta, HistoryRow, LambdaArtifact,
    ModelMeta, PohozaevArtifact, ProbeArtifact, ScanArtifact, SolveArtifact, VerifyArtifact,
};
use crate::battery::operator_battery;
use crate::config::{weight_is_radial, weight_label, RunConfig};
use crate::error::{Error, Result};

fn grid_meta(g: &Grid2D) -> GridMeta {
    GridMeta {
        nx: g.nx(),
        ny: g.ny(),
        lx: g.lx(),
        ly: g.ly(),
    }
}

fn model_meta(m: &ModelParams) -> ModelMeta {
    ModelMeta {
        s1: m.s1(),
        s2: m.s2(),
        alpha: m.alpha(),
        beta: m.beta(),
        kappa: m.kappa(),
        crit1: m.crit1(),
        crit2: m.crit2(),
    }
}

/// The critical-regime radial theory assumes a rotation-invariant weight;
/// a radial solve with one that is not is allowed but flagged.
fn warn_if_radial_hypothesis_unmet(cfg: &RunConfig, m: &ModelParams) {
    if m.regime() == Regime::Critical && cfg.solve_opts.radial && !weight_is_radial(&cfg.weight) {
        log::warn!(
            "critical-regime radial solve with a weight that is not rotation-invariant; \
             the radial existence theory assumes a radial weight — proceeding anyway"
        );
    }
}

/// Ground-state solve at a single coupling strength. Writes `u.mgf1`,
/// `v.mgf1`, `history.csv`, and `report.json`.
pub fn cmd_solve(cfg: &RunConfig) -> Result<u8> {
    let m = cfg.single_kappa_model()?;
    warn_if_radial_hypothesis_unmet(cfg, &m);
    let hf = cfg.weight.sample(&cfg.grid);
    // The solve command's contract includes the convergence history.
    let opts = mixed_schrodinger::solver::SolveOptions {
        record_history: true,
        ..cfg.solve_opts.clone()
    };
    let outcome = multistart(&cfg.grid, &m, &hf, &opts).map_err(Error::module("solver"))?;
    let best = &outcome.best;

    let u_path = out_path(&cfg.out, "u.mgf1")?;
    let v_path = out_path(&cfg.out, "v.mgf1")?;
    write_mgf1(&u_path, &cfg.grid, &best.pair.u).map_err(Error::module("io"))?;
    write_mgf1(&v_path, &cfg.grid, &best.pair.v).map_err(Error::module("io"))?;

    let history: Vec<HistoryRow> = best
        .history
        .iter()
        .map(|r| HistoryRow {
            iter: r.iter,
            energy: r.energy,
            grad_norm: r.grad_rel,
            nehari: r.nehari,
        })
        .collect();
    write_csv(&out_path(&cfg.out, "history.csv")?, &history)?;

    let art = SolveArtifact {
        timestamp_unix: crate::artifacts::timestamp_unix(),
        grid: grid_meta(&cfg.grid),
        model: model_meta(&m),
        weight: weight_label(&cfg.weight),
        seed: cfg.seed,
        radial: cfg.solve_opts.radial,
        converged: best.converged,
        iterations: best.iterations,
        energy: best.energy,
        nehari_residual: best.nehari_residual,
        el_residual: best.el_residual,
        semi_trivial: best.semi_trivial,
        boundary_decay: best.boundary_decay,
        concentration_flag: best.concentration_flag,
        n_converged: outcome.n_converged,
        starts: outcome.starts.clone(),
        u_file: "u.mgf1".into(),
        v_file: "v.mgf1".into(),
        history_file: "history.csv".into(),
    };
    write_json(&out_path(&cfg.out, "report.json")?, &art)?;

    println!("energy          = {:.12e}", best.energy.total);
    println!(
        "converged       = {} ({} of {} starts, {} iterations)",
        best.converged,
        outcome.n_converged,
        opts.n_starts,
        best.iterations
    );
    println!("|Φ|             = {:.3e}", best.nehari_residual);
    println!("el residual     = {:.3e}", best.el_residual);
    println!("boundary decay  = {:.3e}", best.boundary_decay);
    println!("semi-trivial    = {}", best.semi_trivial);
    if best.concentration_flag {
        println!("concentration suspected: stalled at the configured critical level");
    }
    if !best.converged {
        log::warn!(
            "no start met the gradient tolerance {:.1e}; artifacts hold the best stopped state",
            opts.grad_tol
        );
    }
    println!("artifacts in {}", cfg.out.display());
    Ok(0)
}

/// The single-field level used as the scan threshold: smallest over the
/// distinct fractional orders, from the embedding-constant estimate on the
/// same grid (and symmetry class).
fn estimated_threshold(cfg: &RunConfig) -> Result<f64> {
    let mut best = f64::INFINITY;
    for s in cfg.distinct_orders() {
        let est = estimate_lambda(&cfg.grid, s, cfg.solve_opts.radial, &cfg.lambda_opts)
            .map_err(Error::module("analysis"))?;
        log::info!(
            "estimated embedding constant at s = {s}: λ = {:.8} (threshold {:.8})",
            est.lambda,
            est.threshold
        );
        best = best.min(est.threshold);
    }
    Ok(best)
}

/// Energy-level scan across the configured coupling list. Writes
/// `scan.csv`, `energy_vs_kappa.dat`, and `scan.json`.
pub fn cmd_scan_kappa(cfg: &RunConfig) -> Result<u8> {
    let m = cfg.model_at(cfg.kappas[0])?;
    warn_if_radial_hypothesis_unmet(cfg, &m);
    let hf = cfg.weight.sample(&cfg.grid);
    let (threshold, threshold_source) = match cfg.scan.threshold {
        Some(t) => (t, "config".to_string()),
        None => (estimated_threshold(cfg)?, "estimated".to_string()),
    };
    let scan = scan_kappa(&cfg.grid, &m, &hf, &cfg.kappas, &cfg.solve_opts, threshold)
        .map_err(Error::module("analysis"))?;
    let kappa_star = if cfg.scan.refine_iters > 0 {
        match estimate_kappa_star(
            &cfg.grid,
            &m,
            &hf,
            &cfg.solve_opts,
            &scan,
            cfg.scan.refine_iters,
        ) {
            Ok(ks) => Some(ks),
            Err(mixed_schrodinger::Error::NotBracketed(msg)) => {
                log::warn!("crossing refinement skipped: {msg}");
                None
            }
            Err(e) => return Err(Error::module("analysis")(e)),
        }
    } else {
        None
    };

    write_csv(&out_path(&cfg.out, "scan.csv")?, &scan.entries)?;
    let points: Vec<(f64, f64)> = scan.entries.iter().map(|e| (e.kappa, e.energy)).collect();
    write_dat(&out_path(&cfg.out, "energy_vs_kappa.dat")?, threshold, &points)?;
    let art = ScanArtifact {
        timestamp_unix: crate::artifacts::timestamp_unix(),
        grid: grid_meta(&cfg.grid),
        model: model_meta(&m),
        weight: weight_label(&cfg.weight),
        seed: cfg.seed,
        radial: cfg.solve_opts.radial,
        threshold,
        threshold_source,
        entries: scan.entries.clone(),
        monotonicity_violations: scan.monotonicity_violations.clone(),
        bracket: scan.bracket,
        all_below: scan.all_below,
        kappa_star,
    };
    write_json(&out_path(&cfg.out, "scan.json")?, &art)?;

    println!("threshold       = {:.12e} ({})", threshold, art.threshold_source);
    for e in &scan.entries {
        println!(
            "κ = {:>10.4}  energy = {:+.10e}  converged = {}  starts = {}",
            e.kappa, e.energy, e.converged, e.n_converged
        );
    }
    if !scan.monotonicity_violations.is_empty() {
        log::warn!(
            "energy level increased across {} adjacent pair(s); the level is non-increasing \
             in theory, so this measures solver noise",
            scan.monotonicity_violations.len()
        );
    }
    match (scan.bracket, &art.kappa_star) {
        (Some((lo, hi)), Some(ks)) => println!(
            "threshold crossing in ({lo}, {hi}); refined to κ* ≈ {:.6} (rel width {:.2e})",
            ks.mid, ks.rel_width
        ),
        (Some((lo, hi)), None) => println!("threshold crossing in ({lo}, {hi})"),
        (None, _) if scan.all_below => {
            println!("every energy is below the threshold: crossing at or before κ = {}", cfg.kappas[0])
        }
        (None, _) => println!("no scanned energy drops below the threshold"),
    }
    println!("artifacts in {}", cfg.out.display());
    Ok(0)
}

fn lambda_tag(s: f64, radial: bool) -> String {
    if radial {
        format!("lambda_s{s}_radial")
    } else {
        format!("lambda_s{s}")
    }
}

fn write_lambda(cfg: &RunConfig, est: &SobolevEstimate) -> Result<LambdaArtifact> {
    let tag = lambda_tag(est.s, est.radial);
    let field_name = format!("{tag}.mgf1");
    write_mgf1(
        &out_path(&cfg.out, &field_name)?,
        &cfg.grid,
        &est.minimizer,
    )
    .map_err(Error::module("io"))?;
    let art = LambdaArtifact {
        timestamp_unix: crate::artifacts::timestamp_unix(),
        grid: grid_meta(&cfg.grid),
        seed: cfg.seed,
        s: est.s,
        radial: est.radial,
        lambda: est.lambda,
        threshold: est.threshold,
        iterations: est.iterations,
        converged: est.converged,
        minimizer_file: field_name,
    };
    write_json(&out_path(&cfg.out, &format!("{tag}.json"))?, &art)?;
    Ok(art)
}

/// Embedding-constant estimation: one unrestricted and one radial estimate
/// per distinct fractional order, each with its minimizer snapshot and JSON
/// report. The radial constant can never sit below the unrestricted one
/// (subspace inclusion); a drop beyond 1% is flagged as solver noise.
pub fn cmd_estimate_lambda(cfg: &RunConfig) -> Result<u8> {
    for s in cfg.distinct_orders() {
        let full = estimate_lambda(&cfg.grid, s, false, &cfg.lambda_opts)
            .map_err(Error::module("analysis"))?;
        let radial = estimate_lambda(&cfg.grid, s, true, &cfg.lambda_opts)
            .map_err(Error::module("analysis"))?;
        let a_full = write_lambda(cfg, &full)?;
        let a_rad = write_lambda(cfg, &radial)?;
        println!(
            "s = {s}: λ = {:.10} (threshold {:.10}), λ_radial = {:.10} (threshold {:.10})",
            a_full.lambda, a_full.threshold, a_rad.lambda, a_rad.threshold
        );
        if a_rad.lambda < a_full.lambda * (1.0 - 0.01) {
            log::warn!(
                "radial constant {:.10} sits more than 1% below the unrestricted {:.10}; \
                 the radial subspace cannot have a smaller infimum, so one of the descents \
                 has not converged",
                a_rad.lambda,
                a_full.lambda
            );
        }
    }
    println!("artifacts in {}", cfg.out.display());
    Ok(0)
}

/// Identity check. With `pohozaev.u`/`pohozaev.v` configured, evaluates the
/// three dilation-identity residuals of that stored pair (`pohozaev.json`);
/// otherwise runs the multistart nonexistence probe (`probe.json`,
/// `candidates.csv`).
pub fn cmd_check_pohozaev(cfg: &RunConfig) -> Result<u8> {
    let m = cfg.single_kappa_model()?;
    warn_if_radial_hypothesis_unmet(cfg, &m);
    if let (Some(up), Some(vp)) = (&cfg.pohozaev.u, &cfg.pohozaev.v) {
        let su = read_mgf1(up).map_err(Error::module("io"))?;
        let sv = read_mgf1(vp).map_err(Error::module("io"))?;
        if (su.nx, su.ny, su.lx, su.ly) != (sv.nx, sv.ny, sv.lx, sv.ly) {
            return Err(Error::Config(format!(
                "pohozaev.u / pohozaev.v: stored grids differ ({}x{} on {}x{} vs {}x{} on {}x{})",
                su.nx, su.ny, su.lx, su.ly, sv.nx, sv.ny, sv.lx, sv.ly
            )));
        }
        let grid = su.grid().map_err(Error::module("io"))?;
        let pair = Pair::new(su.field, sv.field).map_err(Error::module("model"))?;
        let report = pohozaev_residuals(&grid, &m, &cfg.weight, &pair, cfg.pohozaev.origin)
            .map_err(Error::module("pohozaev"))?;
        let art = PohozaevArtifact {
            timestamp_unix: crate::artifacts::timestamp_unix(),
            grid: grid_meta(&grid),
            model: model_meta(&m),
            weight: weight_label(&cfg.weight),
            origin: cfg.pohozaev.origin,
            u_file: up.display().to_string(),
            v_file: vp.display().to_string(),
            report: report.clone(),
        };
        write_json(&out_path(&cfg.out, "pohozaev.json")?, &art)?;
        println!("r61             = {:.6e}", report.r61);
        println!("r62             = {:.6e}", report.r62);
        println!("r622            = {:.6e}", report.r622);
        println!("gap622          = {:+.6e}", report.gap622);
        println!(
            "moment check    = {} (outer-ring mass fraction {:.3e})",
            if report.moment_ok { "ok" } else { "UNRELIABLE" },
            report.ring_mass_fraction
        );
        println!("artifacts in {}", cfg.out.display());
        return Ok(0);
    }

    let report = nonexistence_probe(&cfg.grid, &m, &cfg.weight, &cfg.solve_opts)
        .map_err(Error::module("pohozaev"))?;
    let rows: Vec<CandidateRow> = report.candidates.iter().map(CandidateRow::from).collect();
    write_csv(&out_path(&cfg.out, "candidates.csv")?, &rows)?;
    let art = ProbeArtifact {
        timestamp_unix: crate::artifacts::timestamp_unix(),
        grid: grid_meta(&cfg.grid),
        model: model_meta(&m),
        weight: weight_label(&cfg.weight),
        seed: cfg.seed,
        report: report.clone(),
    };
    write_json(&out_path(&cfg.out, "probe.json")?, &art)?;

    if !report.gated {
        println!(
            "sign hypothesis fails (worst κ·x·∂x h = {:.3e}, κ·y·∂y h = {:.3e}); \
             no conclusion drawn",
            report.hypothesis.worst_x, report.hypothesis.worst_y
        );
    } else {
        println!(
            "sign hypothesis holds (worst κ·x·∂x h = {:.3e}, κ·y·∂y h = {:.3e})",
            report.hypothesis.worst_x, report.hypothesis.worst_y
        );
        for c in &report.candidates {
            println!(
                "start {:>2}: energy = {:+.6e}  gap = {:+.6e}  witnesses nonexistence = {}",
                c.start_index, c.energy, c.residuals.gap622, c.witnesses_nonexistence
            );
        }
    }
    println!("artifacts in {}", cfg.out.display());
    Ok(0)
}

/// Operator self-checks; exit 0 only when every row passes. Writes
/// `verify.json`.
pub fn cmd_verify_operators(cfg: &RunConfig) -> Result<u8> {
    let checks = operator_battery(&cfg.grid, cfg.seed)?;
    let all_pass = checks.iter().all(|c| c.pass);
    let art = VerifyArtifact {
        timestamp_unix: crate::artifacts::timestamp_unix(),
        grid: grid_meta(&cfg.grid),
        seed: cfg.seed,
        checks: checks.clone(),
        all_pass,
    };
    write_json(&out_path(&cfg.out, "verify.json")?, &art)?;

    println!("{:<24} {:>12} {:>12}  result", "check", "worst", "tolerance");
    for c in &checks {
        println!(
            "{:<24} {:>12.3e} {:>12.1e}  {}",
            c.name,
            c.worst,
            c.tolerance,
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    println!(
        "{}",
        if all_pass {
            "all checks passed"
        } else {
            "CHECKS FAILED"
        }
    );
    Ok(if all_pass { 0 } else { 1 })
}
