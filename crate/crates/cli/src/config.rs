//! Run configuration: a flat, human-editable `section.key = value` text file.
//!
//! Every key is dotted (`grid.nx = 128`), `#` starts a comment, blank lines
//! are ignored, and unknown keys are rejected by name so a typo cannot
//! silently fall back to a default. All blocks are validated against their
//! module invariants while loading — before any computation starts — and
//! every validation message cites the offending key.
//!
//! Randomness policy: the single top-level `seed` feeds every component
//! (multistart placement, quotient-descent starts, field corpora), which
//! derive independent named streams from it. The `--seed` flag overrides the
//! file value.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use mixed_schrodinger::analysis::LambdaOptions;
use mixed_schrodinger::io::read_mgf1;
use mixed_schrodinger::solver::{SolveOptions, StepRule};
use mixed_schrodinger::weights::{validate_baseline, TabulatedWeight, Weight};
use mixed_schrodinger::{Grid2D, ModelParams};

use crate::error::{Error, Result};

/// Scan-specific settings.
#[derive(Debug, Clone)]
pub struct ScanSettings {
    /// Bisection refinements of the threshold-crossing bracket (0 = none).
    pub refine_iters: usize,
    /// Energy threshold separating "coupled ground state strictly below the
    /// single-field level"; estimated from the embedding constant when
    /// absent.
    pub threshold: Option<f64>,
}

/// Inputs of the identity-check command.
#[derive(Debug, Clone)]
pub struct PohozaevSettings {
    /// Stored first component; with `v` present the command checks this pair
    /// instead of running the multistart probe.
    pub u: Option<PathBuf>,
    pub v: Option<PathBuf>,
    /// Recentering origin of the coordinate moments.
    pub origin: (f64, f64),
}

/// Everything a subcommand needs, fully validated.
#[derive(Debug)]
pub struct RunConfig {
    pub grid: Grid2D,
    /// Exponent block; the coupling strength is substituted per command from
    /// [`RunConfig::kappas`].
    pub s1: f64,
    pub s2: f64,
    pub alpha: f64,
    pub beta: f64,
    /// One value for single solves, an ascending list for scans.
    pub kappas: Vec<f64>,
    pub weight: Weight,
    pub solve_opts: SolveOptions,
    pub lambda_opts: LambdaOptions,
    pub scan: ScanSettings,
    pub pohozaev: PohozaevSettings,
    pub seed: u64,
    pub out: PathBuf,
}

impl RunConfig {
    /// Loads the file (or pure defaults when `path` is `None`) and applies
    /// the command-line overrides.
    pub fn load(
        path: Option<&Path>,
        seed_override: Option<u64>,
        out_override: Option<&Path>,
    ) -> Result<RunConfig> {
        let mut reader = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| Error::ReadFile {
                    path: p.to_path_buf(),
                    source,
                })?;
                Reader::parse(&text)?
            }
            None => Reader::parse("")?,
        };
        let cfg = build(&mut reader, seed_override, out_override)?;
        reader.finish()?;
        Ok(cfg)
    }

    /// Model parameters at the single configured coupling strength; errors
    /// when the config carries a κ list (only scans accept one).
    pub fn single_kappa_model(&self) -> Result<ModelParams> {
        if self.kappas.len() != 1 {
            return Err(Error::Config(format!(
                "model.kappa: this command takes a single coupling value, got {} values",
                self.kappas.len()
            )));
        }
        self.model_at(self.kappas[0])
    }

    /// Model parameters at an explicit coupling strength.
    pub fn model_at(&self, kappa: f64) -> Result<ModelParams> {
        ModelParams::new(self.s1, self.s2, self.alpha, self.beta, kappa)
            .map_err(Error::module("model"))
    }

    /// Distinct fractional orders of the two components (one entry when they
    /// coincide).
    pub fn distinct_orders(&self) -> Vec<f64> {
        if (self.s1 - self.s2).abs() <= 1e-12 {
            vec![self.s1]
        } else {
            vec![self.s1, self.s2]
        }
    }
}

/// True when the weight is rotation-invariant about the origin. Closed-form
/// kinds are radial by construction; tabulated data is probed numerically on
/// a fan of rings, with a tolerance matching the bilinear interpolant's own
/// angular ripple (O(spacing²)) — anisotropy below that is undetectable, so
/// borderline tables are treated as radial rather than warned about.
pub fn weight_is_radial(w: &Weight) -> bool {
    match w {
        Weight::Constant(_)
        | Weight::CompactBump
        | Weight::InverseExponential
        | Weight::AnnularGaussian { .. } => true,
        Weight::Tabulated(t) => {
            // Probe rings spanning the inner half of the table's box (beyond
            // that a periodic table cannot be radial anyway).
            let rmax = 0.45 * t.lx().min(t.ly());
            let mut scale = 0.0f64;
            let mut dev = 0.0f64;
            for ir in 1..=8 {
                let r = rmax * ir as f64 / 8.0;
                let base = w.eval(r, 0.0);
                for ia in 0..16 {
                    let th = std::f64::consts::TAU * ia as f64 / 16.0;
                    let v = w.eval(r * th.cos(), r * th.sin());
                    scale = scale.max(v.abs());
                    dev = dev.max((v - base).abs());
                }
            }
            let ripple = (t.lx() / t.nx() as f64).powi(2) + (t.ly() / t.ny() as f64).powi(2);
            dev <= ripple.max(1e-9) * scale.max(1e-300)
        }
    }
}

/// One-line description of a weight for reports and logs.
pub fn weight_label(w: &Weight) -> String {
    match w {
        Weight::Constant(c) => format!("constant({c})"),
        Weight::CompactBump => "compact-bump".into(),
        Weight::InverseExponential => "inverse-exponential".into(),
        Weight::AnnularGaussian { a } => format!("annular-gaussian(a={a})"),
        Weight::Tabulated(_) => "tabulated".into(),
    }
}

fn build(
    r: &mut Reader,
    seed_override: Option<u64>,
    out_override: Option<&Path>,
) -> Result<RunConfig> {
    // Grid block.
    let nx = r.usize("grid.nx", 64)?;
    let ny = r.usize("grid.ny", 64)?;
    let lx = r.f64("grid.lx", 30.0)?;
    let ly = r.f64("grid.ly", 30.0)?;
    let grid = Grid2D::new(nx, ny, lx, ly).map_err(|e| Error::Config(format!("grid: {e}")))?;

    // Model block. Validity of the exponents is checked once here (at the
    // first κ) and again per κ as commands substitute values.
    let s1 = r.f64("model.s1", 0.5)?;
    let s2 = r.f64("model.s2", 0.5)?;
    let alpha = r.f64("model.alpha", 2.0)?;
    let beta = r.f64("model.beta", 2.0)?;
    let kappas = r.f64_list("model.kappa", &[1.0])?;
    for &k in &kappas {
        ModelParams::new(s1, s2, alpha, beta, k)
            .map_err(|e| Error::Config(format!("model: {e}")))?;
    }

    // Weight block: construct, then check baseline admissibility on the grid.
    let kind = r.str("weight.kind", "annular-gaussian")?;
    let weight = match kind.as_str() {
        "constant" => Weight::Constant(r.f64("weight.c", 1.0)?),
        "compact-bump" => Weight::CompactBump,
        "inverse-exponential" => Weight::InverseExponential,
        "annular-gaussian" => Weight::AnnularGaussian {
            a: r.f64("weight.a", 1.0)?,
        },
        "tabulated" => {
            let p = r
                .path("weight.path")?
                .ok_or_else(|| Error::Config("weight.path: required for weight.kind = tabulated".into()))?;
            let stored = read_mgf1(&p).map_err(Error::module("io"))?;
            let tw = TabulatedWeight::new(
                stored.nx,
                stored.ny,
                stored.lx,
                stored.ly,
                stored.field.values().to_vec(),
            )
            .map_err(|e| Error::Config(format!("weight.path: {e}")))?;
            Weight::Tabulated(tw)
        }
        other => {
            return Err(Error::Config(format!(
                "weight.kind: unknown kind {other:?}; expected constant, compact-bump, \
                 inverse-exponential, annular-gaussian, or tabulated"
            )))
        }
    };
    validate_baseline(&weight, &grid).map_err(|e| Error::Config(format!("weight: {e}")))?;

    // Seed and output directory (flags override the file).
    let seed = seed_override.unwrap_or(r.u64("seed", 7)?);
    let out = out_override
        .map(Path::to_path_buf)
        .unwrap_or(r.path("out")?.unwrap_or_else(|| PathBuf::from("out")));

    // Solver block.
    let defaults = SolveOptions::default();
    let max_iters = r.usize("solver.max_iters", defaults.max_iters)?;
    let grad_tol = r.f64("solver.grad_tol", defaults.grad_tol)?;
    if !(grad_tol.is_finite() && grad_tol > 0.0) {
        return Err(Error::Config(format!(
            "solver.grad_tol: must be a positive number, got {grad_tol}"
        )));
    }
    let step_rule = match r.opt_f64("solver.fixed_step")? {
        Some(step) if step.is_finite() && step > 0.0 => StepRule::Fixed(step),
        Some(step) => {
            return Err(Error::Config(format!(
                "solver.fixed_step: must be a positive number, got {step}"
            )))
        }
        None => StepRule::AdaptiveBb,
    };
    let n_starts = r.usize("solver.n_starts", defaults.n_starts)?;
    if n_starts == 0 {
        return Err(Error::Config("solver.n_starts: must be at least 1".into()));
    }
    let solve_opts = SolveOptions {
        max_iters,
        grad_tol,
        step_rule,
        radial: r.bool("solver.radial", defaults.radial)?,
        symmetrize: r.bool("solver.symmetrize", defaults.symmetrize)?,
        n_starts,
        seed,
        critical_level: r.opt_f64("solver.critical_level")?,
        record_history: r.bool("solver.record_history", defaults.record_history)?,
    };

    // Quotient-estimation block.
    let ldef = LambdaOptions::default();
    let lambda_opts = LambdaOptions {
        max_iters: r.usize("lambda.max_iters", ldef.max_iters)?,
        tol: r.f64("lambda.tol", ldef.tol)?,
        n_starts: {
            let n = r.usize("lambda.n_starts", ldef.n_starts)?;
            if n == 0 {
                return Err(Error::Config("lambda.n_starts: must be at least 1".into()));
            }
            n
        },
        seed,
    };
    if !(lambda_opts.tol.is_finite() && lambda_opts.tol > 0.0) {
        return Err(Error::Config(format!(
            "lambda.tol: must be a positive number, got {}",
            lambda_opts.tol
        )));
    }

    // Scan block.
    let scan = ScanSettings {
        refine_iters: r.usize("scan.refine_iters", 0)?,
        threshold: r.opt_f64("scan.threshold")?,
    };

    // Identity-check block.
    let pohozaev = PohozaevSettings {
        u: r.path("pohozaev.u")?,
        v: r.path("pohozaev.v")?,
        origin: (
            r.f64("pohozaev.origin_x", 0.0)?,
            r.f64("pohozaev.origin_y", 0.0)?,
        ),
    };
    if pohozaev.u.is_some() != pohozaev.v.is_some() {
        return Err(Error::Config(
            "pohozaev.u / pohozaev.v: provide both stored components or neither".into(),
        ));
    }

    Ok(RunConfig {
        grid,
        s1,
        s2,
        alpha,
        beta,
        kappas,
        weight,
        solve_opts,
        lambda_opts,
        scan,
        pohozaev,
        seed,
        out,
    })
}

/// Parsed key-value lines with consumption tracking: any key left unread
/// when loading finishes is reported as unknown, by name and line.
struct Reader {
    entries: BTreeMap<String, (String, usize)>,
    used: BTreeSet<String>,
}

impl Reader {
    fn parse(text: &str) -> Result<Reader> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {line}: expected `key = value`, got {stripped:?}"
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config(format!("line {line}: empty key")));
            }
            if let Some((_, first)) = entries.insert(key.clone(), (value, line)) {
                return Err(Error::Config(format!(
                    "{key}: set twice (lines {first} and {line})"
                )));
            }
        }
        Ok(Reader {
            entries,
            used: BTreeSet::new(),
        })
    }

    fn raw(&mut self, key: &str) -> Option<&str> {
        if self.entries.contains_key(key) {
            self.used.insert(key.to_string());
            self.entries.get(key).map(|(v, _)| v.as_str())
        } else {
            None
        }
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.opt_f64(key)?.unwrap_or(default))
    }

    fn opt_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| Error::Config(format!("{key}: expected a number, got {v:?}"))),
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse::<usize>().map_err(|_| {
                Error::Config(format!("{key}: expected a non-negative integer, got {v:?}"))
            }),
        }
    }

    fn u64(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse::<u64>().map_err(|_| {
                Error::Config(format!("{key}: expected a non-negative integer, got {v:?}"))
            }),
        }
    }

    fn bool(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(Error::Config(format!(
                "{key}: expected true or false, got {v:?}"
            ))),
        }
    }

    fn str(&mut self, key: &str, default: &str) -> Result<String> {
        Ok(self.raw(key).unwrap_or(default).to_string())
    }

    fn path(&mut self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.raw(key).map(PathBuf::from))
    }

    fn f64_list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => {
                let v = v.to_string();
                let mut out = Vec::new();
                for piece in v.split(',') {
                    let piece = piece.trim();
                    if piece.is_empty() {
                        continue;
                    }
                    out.push(piece.parse::<f64>().map_err(|_| {
                        Error::Config(format!("{key}: expected numbers, got {piece:?}"))
                    })?);
                }
                if out.is_empty() {
                    return Err(Error::Config(format!("{key}: empty list")));
                }
                Ok(out)
            }
        }
    }

    fn finish(&self) -> Result<()> {
        let mut unknown: Vec<String> = self
            .entries
            .iter()
            .filter(|(k, _)| !self.used.contains(*k))
            .map(|(k, (_, line))| format!("{k} (line {line})"))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            unknown.sort();
            Err(Error::Config(format!(
                "unrecognized key{}: {}",
                if unknown.len() > 1 { "s" } else { "" },
                unknown.join(", ")
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn load_text(text: &str) -> Result<RunConfig> {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        RunConfig::load(Some(f.path()), None, None)
    }

    #[test]
    fn defaults_build_a_valid_config() {
        let cfg = RunConfig::load(None, None, None).unwrap();
        assert_eq!(cfg.grid.nx(), 64);
        assert_eq!(cfg.kappas, vec![1.0]);
        assert_eq!(cfg.seed, 7);
        assert!(matches!(cfg.weight, Weight::AnnularGaussian { .. }));
        assert_eq!(cfg.out, PathBuf::from("out"));
    }

    #[test]
    fn dotted_keys_comments_and_lists_parse() {
        let cfg = load_text(
            "# run setup\n\
             grid.nx = 32\n\
             grid.ny = 16   # small\n\
             model.kappa = 0, 1, 2.5\n\
             solver.radial = true\n\
             seed = 99\n",
        )
        .unwrap();
        assert_eq!((cfg.grid.nx(), cfg.grid.ny()), (32, 16));
        assert_eq!(cfg.kappas, vec![0.0, 1.0, 2.5]);
        assert!(cfg.solve_opts.radial);
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.solve_opts.seed, 99);
        assert_eq!(cfg.lambda_opts.seed, 99);
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let err = load_text("grid.nz = 4\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("grid.nz"), "{err}");
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let err = load_text("grid.nx = 4\ngrid.nx = 8\n").unwrap_err();
        assert!(err.to_string().contains("set twice"), "{err}");
    }

    #[test]
    fn invalid_exponent_cites_the_rule() {
        let err = load_text("model.alpha = 0.5\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        assert!(msg.contains("alpha") && msg.contains("> 1"), "{msg}");
    }

    #[test]
    fn malformed_number_cites_the_key() {
        let err = load_text("grid.lx = wide\n").unwrap_err();
        assert!(err.to_string().contains("grid.lx"), "{err}");
    }

    #[test]
    fn seed_flag_overrides_file_seed() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"seed = 5\n").unwrap();
        let cfg = RunConfig::load(Some(f.path()), Some(123), None).unwrap();
        assert_eq!(cfg.seed, 123);
        assert_eq!(cfg.solve_opts.seed, 123);
    }

    #[test]
    fn single_kappa_model_rejects_lists() {
        let cfg = load_text("model.kappa = 1, 2\n").unwrap();
        let err = cfg.single_kappa_model().unwrap_err();
        assert!(err.to_string().contains("model.kappa"), "{err}");
    }

    #[test]
    fn closed_form_weights_are_radial_and_tabulated_is_probed() {
        assert!(weight_is_radial(&Weight::CompactBump));
        let g = Grid2D::new(64, 64, 12.0, 12.0).unwrap();
        let radial = g.field_from_fn(|x, y| (-(x * x + y * y)).exp());
        let tw = TabulatedWeight::new(64, 64, 12.0, 12.0, radial.values().to_vec()).unwrap();
        assert!(weight_is_radial(&Weight::Tabulated(tw)));
        let skew = g.field_from_fn(|x, y| (-(x * x + 4.0 * y * y)).exp());
        let tw = TabulatedWeight::new(64, 64, 12.0, 12.0, skew.values().to_vec()).unwrap();
        assert!(!weight_is_radial(&Weight::Tabulated(tw)));
    }
}
