//! Output artifacts and their readers.
//!
//! Every file the driver writes can be read back by a function in this
//! module: JSON reports deserialize into the same structs that produced
//! them, CSV tables parse into their row types, field snapshots use the
//! binary reader from the library, and the gnuplot `.dat` table has a
//! two-column parser. Apart from the `timestamp_unix` field stamped into
//! each JSON report, identical configuration and seed produce bit-identical
//! files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use mixed_schrodinger::analysis::{KappaStar, ScanEntry};
use mixed_schrodinger::energy::EnergyBreakdown;
use mixed_schrodinger::pohozaev::{PohozaevReport, ProbeCandidate, ProbeReport};
use mixed_schrodinger::solver::StartSummary;

use crate::error::{Error, Result};

/// Seconds since the Unix epoch, stamped into every JSON report. The one
/// field excluded from the bit-identity guarantee.
pub fn timestamp_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Grid geometry echoed into reports.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridMeta {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

/// Model block echoed into reports.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelMeta {
    pub s1: f64,
    pub s2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    /// `2(1+s)/(1−s)` for each component.
    pub crit1: f64,
    pub crit2: f64,
}

/// JSON report of a ground-state solve (`report.json`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveArtifact {
    pub timestamp_unix: u64,
    pub grid: GridMeta,
    pub model: ModelMeta,
    pub weight: String,
    pub seed: u64,
    pub radial: bool,
    pub converged: bool,
    pub iterations: usize,
    pub energy: EnergyBreakdown,
    pub nehari_residual: f64,
    pub el_residual: f64,
    pub semi_trivial: bool,
    pub boundary_decay: f64,
    pub concentration_flag: bool,
    pub n_converged: usize,
    pub starts: Vec<StartSummary>,
    /// Companion files, relative to the report's directory.
    pub u_file: String,
    pub v_file: String,
    pub history_file: String,
}

/// One row of the convergence history (`history.csv`).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iter: usize,
    pub energy: f64,
    /// Preconditioned gradient norm relative to the state norm.
    pub grad_norm: f64,
    /// Constraint value Φ at the iterate.
    pub nehari: f64,
}

/// JSON report of a coupling-strength scan (`scan.json`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanArtifact {
    pub timestamp_unix: u64,
    pub grid: GridMeta,
    pub model: ModelMeta,
    pub weight: String,
    pub seed: u64,
    pub radial: bool,
    /// Single-field level the energies are compared against.
    pub threshold: f64,
    /// Whether the threshold came from the config or was estimated.
    pub threshold_source: String,
    pub entries: Vec<ScanEntry>,
    pub monotonicity_violations: Vec<(f64, f64)>,
    pub bracket: Option<(f64, f64)>,
    pub all_below: bool,
    /// Refined crossing bracket, when requested and found.
    pub kappa_star: Option<KappaStar>,
}

/// JSON report of one embedding-constant estimate (`lambda_*.json`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaArtifact {
    pub timestamp_unix: u64,
    pub grid: GridMeta,
    pub seed: u64,
    pub s: f64,
    pub radial: bool,
    pub lambda: f64,
    /// `(s/(1+s)) · λ^{(1+s)/(2s)}`.
    pub threshold: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Minimizer snapshot, relative to the report's directory.
    pub minimizer_file: String,
}

/// JSON report of the identity check on a stored pair (`pohozaev.json`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PohozaevArtifact {
    pub timestamp_unix: u64,
    pub grid: GridMeta,
    pub model: ModelMeta,
    pub weight: String,
    pub origin: (f64, f64),
    pub u_file: String,
    pub v_file: String,
    pub report: PohozaevReport,
}

/// JSON report of the multistart nonexistence probe (`probe.json`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeArtifact {
    pub timestamp_unix: u64,
    pub grid: GridMeta,
    pub model: ModelMeta,
    pub weight: String,
    pub seed: u64,
    pub report: ProbeReport,
}

/// One probe candidate flattened for `candidates.csv`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CandidateRow {
    pub start_index: usize,
    pub converged: bool,
    pub semi_trivial: bool,
    pub energy: f64,
    pub r61: f64,
    pub r62: f64,
    pub r622: f64,
    pub gap622: f64,
    pub ring_mass_fraction: f64,
    pub moment_ok: bool,
    pub witnesses_nonexistence: bool,
}

impl From<&ProbeCandidate> for CandidateRow {
    fn from(c: &ProbeCandidate) -> Self {
        CandidateRow {
            start_index: c.start_index,
            converged: c.converged,
            semi_trivial: c.semi_trivial,
            energy: c.energy,
            r61: c.residuals.r61,
            r62: c.residuals.r62,
            r622: c.residuals.r622,
            gap622: c.residuals.gap622,
            ring_mass_fraction: c.residuals.ring_mass_fraction,
            moment_ok: c.residuals.moment_ok,
            witnesses_nonexistence: c.witnesses_nonexistence,
        }
    }
}

/// One row of the operator-check table (`verify.json` and stdout).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    /// Worst measured discrepancy across the check's instances.
    pub worst: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// JSON report of the operator battery (`verify.json`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyArtifact {
    pub timestamp_unix: u64,
    pub grid: GridMeta,
    pub seed: u64,
    pub checks: Vec<CheckRow>,
    pub all_pass: bool,
}

/// Writes a JSON report (pretty-printed, trailing newline).
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::WriteFile {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n").map_err(|source| Error::WriteFile {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

/// Reads any JSON report written by [`write_json`].
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|source| Error::ReadFile {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes a CSV table from serializable rows (header derived from the row
/// type's field names).
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    for row in rows {
        w.serialize(row).map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    }
    w.flush().map_err(|source| Error::WriteFile {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

/// Reads back a CSV table written by [`write_csv`].
pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    r.deserialize()
        .map(|row| {
            row.map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })
        })
        .collect()
}

/// Writes the gnuplot-ready energy-versus-coupling table: `#`-prefixed
/// header, then space-separated `kappa energy` rows (non-finite energies are
/// kept; gnuplot treats `NaN` as a data gap).
pub fn write_dat(path: &Path, threshold: f64, points: &[(f64, f64)]) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::WriteFile {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(w, "# ground-state energy level vs coupling strength")?;
        writeln!(w, "# single-field threshold: {threshold}")?;
        writeln!(w, "# kappa energy")?;
        for (k, e) in points {
            writeln!(w, "{k} {e}")?;
        }
        w.flush()
    })()
    .map_err(|source| Error::WriteFile {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads back the `(kappa, energy)` points of a [`write_dat`] table.
pub fn read_dat(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::ReadFile {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split_whitespace();
        let bad = |msg: &str| Error::BadArtifact {
            path: path.to_path_buf(),
            line: idx + 1,
            msg: msg.to_string(),
        };
        let k = cols
            .next()
            .ok_or_else(|| bad("missing kappa column"))?
            .parse::<f64>()
            .map_err(|_| bad("kappa column is not a number"))?;
        let e = cols
            .next()
            .ok_or_else(|| bad("missing energy column"))?
            .parse::<f64>()
            .map_err(|_| bad("energy column is not a number"))?;
        if cols.next().is_some() {
            return Err(bad("expected exactly two columns"));
        }
        out.push((k, e));
    }
    Ok(out)
}

/// `dir/name`, creating `dir` on first use.
pub fn out_path(dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|source| Error::WriteFile {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(dir.join(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_reports_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("verify.json");
        let art = VerifyArtifact {
            timestamp_unix: timestamp_unix(),
            grid: GridMeta {
                nx: 64,
                ny: 64,
                lx: 30.0,
                ly: 30.0,
            },
            seed: 7,
            checks: vec![CheckRow {
                name: "eigenfunction-symbol".into(),
                worst: 3.0e-14,
                tolerance: 1.0e-10,
                pass: true,
            }],
            all_pass: true,
        };
        write_json(&path, &art).unwrap();
        let back: VerifyArtifact = read_json(&path).unwrap();
        assert_eq!(back.checks.len(), 1);
        assert_eq!(back.checks[0].worst, art.checks[0].worst);
        assert!(back.all_pass);
    }

    #[test]
    fn history_csv_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("history.csv");
        let rows = vec![
            HistoryRow {
                iter: 0,
                energy: std::f64::consts::LN_2,
                grad_norm: 1.0e-3,
                nehari: -2.2e-16,
            },
            HistoryRow {
                iter: 1,
                energy: 0.12,
                grad_norm: f64::MIN_POSITIVE,
                nehari: 0.0,
            },
        ];
        write_csv(&path, &rows).unwrap();
        let back: Vec<HistoryRow> = read_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.iter, b.iter);
            assert_eq!(a.energy.to_bits(), b.energy.to_bits());
            assert_eq!(a.grad_norm.to_bits(), b.grad_norm.to_bits());
            assert_eq!(a.nehari.to_bits(), b.nehari.to_bits());
        }
    }

    #[test]
    fn dat_table_round_trips_and_skips_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("energy_vs_kappa.dat");
        let pts = vec![(0.0, 0.5483), (1.0, 0.5481), (2.0, f64::NAN)];
        write_dat(&path, 0.5091, &pts).unwrap();
        let back = read_dat(&path).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[0].0.to_bits(), 0.0f64.to_bits());
        assert_eq!(back[1].1.to_bits(), 0.5481f64.to_bits());
        assert!(back[2].1.is_nan());
    }

    #[test]
    fn dat_reader_rejects_malformed_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.dat");
        std::fs::write(&path, "1.0\n").unwrap();
        assert!(read_dat(&path).is_err());
        std::fs::write(&path, "1.0 2.0 3.0\n").unwrap();
        assert!(read_dat(&path).is_err());
    }
}
