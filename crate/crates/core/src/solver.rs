//! Ground-state search: projected, preconditioned descent on the constraint
//! manifold, with multistart, symmetrization and exact angular averaging.
//!
//! Each iteration computes the L² gradient, preconditions it with the inverse
//! of the full operator (diagonal in frequency, so one FFT round-trip per
//! component), takes a trial step, pushes the trial through the optional
//! symmetrization/radial maps, projects it back onto the manifold along its
//! ray, and accepts only if the energy decreased. Step sizes follow a
//! Barzilai–Borwein rule with backtracking (or a fixed step when configured).
//! Accepted energies are therefore monotone by construction.

use rand::Rng;
use rayon::prelude::*;

use crate::energy::{
    self, energy_from_fiber, fiber_coefficients, nehari_from_fiber, EnergyBreakdown,
};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};
use crate::model::{ModelParams, Pair};
use crate::operators;
use crate::util::seeded_stream;

/// Step-size policy of the descent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Constant step in the preconditioned direction.
    Fixed(f64),
    /// Barzilai–Borwein step with monotone backtracking (default).
    AdaptiveBb,
}

/// Knobs of a ground-state solve.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Iteration cap per start.
    pub max_iters: usize,
    /// Convergence threshold on the preconditioned gradient norm relative to
    /// the state norm, both in the anisotropic Sobolev metric. The rounding
    /// floor of the energy-monotone line search sits near
    /// `sqrt(ε·|J|/‖p‖²) ≈ 2e-8`, so thresholds below ~1e-7 are unreachable
    /// in 64-bit arithmetic.
    pub grad_tol: f64,
    pub step_rule: StepRule,
    /// Restrict the search to angularly averaged states.
    pub radial: bool,
    /// Replace the *initial* state by its componentwise absolute value
    /// (ground states are signless). Applied once at start-up only: folding
    /// every trial would add a kink penalty `4⟨Lw, w⁻⟩ > 0` to the spectral
    /// quadratic form that can cancel the first-order descent — the discrete
    /// |·| map, unlike its continuum counterpart, does not decrease the norm.
    pub symmetrize: bool,
    /// Number of multistart seeds.
    pub n_starts: usize,
    /// Seed for all randomness (start placement).
    pub seed: u64,
    /// Energy level whose proximity, combined with a stalled line search,
    /// is flagged as suspected concentration (meaningful in the critical
    /// regime where the infimum may not be attained).
    pub critical_level: Option<f64>,
    /// Keep the per-iteration history in the report.
    pub record_history: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            grad_tol: 1e-7,
            step_rule: StepRule::AdaptiveBb,
            radial: false,
            symmetrize: true,
            n_starts: 8,
            seed: 7,
            critical_level: None,
            record_history: false,
        }
    }
}

/// One accepted iterate of the descent.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub energy: f64,
    /// Preconditioned gradient norm relative to the state norm (both in the
    /// anisotropic Sobolev metric).
    pub grad_rel: f64,
    /// Constraint value Φ of the iterate (rounding-level after projection).
    pub nehari: f64,
}

/// Everything known about one converged (or stopped) solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub energy: EnergyBreakdown,
    /// |Φ| at the final state.
    pub nehari_residual: f64,
    /// L² norm of the Euler–Lagrange residual of the optimality system in
    /// the active symmetry class, relative to the state's L² norm. In an
    /// unrestricted solve this is the residual of the full system; in a
    /// radial solve it is the angular average of that residual (the operator
    /// is anisotropic, so the full residual does not vanish on the radial
    /// subspace — use [`euler_lagrange_residual`] for the unrestricted
    /// quantity).
    pub el_residual: f64,
    pub pair: Pair,
    /// One component is negligible next to the other (relative L² norm below
    /// 1e-8): the iteration escaped toward a single-field state.
    pub semi_trivial: bool,
    /// Boundary-band maximum of |u|, |v| relative to the global maximum; the
    /// box is trustworthy only when this is small. For fractional orders the
    /// floor is the algebraic tail `R^{−(1+2s)}` at box half-width `R` (plus
    /// a Nyquist-level ripple from the nonlinearity's spectral tail), so on
    /// moderate boxes values of 1e-4…1e-2 are the expected healthy range,
    /// while O(1) signals mass parked against the boundary.
    pub boundary_decay: f64,
    /// Energy reached the configured critical level while the line search
    /// stalled: concentration suspected.
    pub concentration_flag: bool,
    pub history: Vec<IterRecord>,
}

/// Componentwise absolute value `( |u|, |v| )`.
pub fn symmetrize(p: &Pair) -> Pair {
    Pair {
        u: p.u.map(f64::abs),
        v: p.v.map(f64::abs),
    }
}

/// Exact angular average: every node value is replaced by the mean over the
/// class of nodes with bit-identical radius. This is an orthogonal projection
/// (idempotent to rounding), preserves any exactly-radial sampled field, and
/// annihilates pure angular harmonics — except on the extreme row/column of
/// the even grid (x or y equal to −L/2), whose reflection partners at +L/2
/// are absent from box-centered sampling; on boundary-decayed fields that
/// defect is machine-level.
pub fn radial_project(grid: &Grid2D, f: &Field) -> Result<Field> {
    if f.nx() != grid.nx() || f.ny() != grid.ny() {
        return Err(Error::DimensionMismatch(format!(
            "radial projection: field {}x{} vs grid {}x{}",
            f.nx(),
            f.ny(),
            grid.nx(),
            grid.ny()
        )));
    }
    let rc = grid.radial_classes();
    let mut sums = vec![0.0f64; rc.count.len()];
    for (v, &cls) in f.values().iter().zip(&rc.class_of) {
        sums[cls as usize] += v;
    }
    for (s, &c) in sums.iter_mut().zip(&rc.count) {
        *s /= c as f64;
    }
    let values = rc.class_of.iter().map(|&cls| sums[cls as usize]).collect();
    Field::from_values(grid.nx(), grid.ny(), values)
}

/// Angular average of both components.
pub fn radial_project_pair(grid: &Grid2D, p: &Pair) -> Result<Pair> {
    Pair::new(radial_project(grid, &p.u)?, radial_project(grid, &p.v)?)
}

/// L² norm of the full Euler–Lagrange residual relative to the state's L²
/// norm. Converged ground states sit well below 1e-5.
pub fn euler_lagrange_residual(
    grid: &Grid2D,
    m: &ModelParams,
    h: &Field,
    p: &Pair,
) -> Result<f64> {
    let g = energy::gradient(grid, m, h, p)?;
    let gn = grid.l2_norm_sq(&g.u)? + grid.l2_norm_sq(&g.v)?;
    let pn = grid.l2_norm_sq(&p.u)? + grid.l2_norm_sq(&p.v)?;
    Ok((gn / pn.max(f64::MIN_POSITIVE)).sqrt())
}

fn semi_trivial_flag(grid: &Grid2D, p: &Pair) -> Result<bool> {
    let nu = grid.l2_norm_sq(&p.u)?.sqrt();
    let nv = grid.l2_norm_sq(&p.v)?.sqrt();
    Ok(nu < 1e-8 * nv || nv < 1e-8 * nu)
}

fn boundary_decay_metric(grid: &Grid2D, p: &Pair) -> f64 {
    let global = grid.max_abs(&p.u).max(grid.max_abs(&p.v)).max(f64::MIN_POSITIVE);
    let ring = grid
        .boundary_ring_max(&p.u, 0.02)
        .max(grid.boundary_ring_max(&p.v, 0.02));
    ring / global
}

/// Applies the configured state maps (symmetrization, angular averaging)
/// before a manifold projection.
fn prepare(grid: &Grid2D, opts: &SolveOptions, p: &Pair) -> Result<Pair> {
    let mut q = if opts.symmetrize { symmetrize(p) } else { p.clone() };
    if opts.radial {
        q = radial_project_pair(grid, &q)?;
    }
    Ok(q)
}

struct ManifoldState {
    pair: Pair,
    fiber: crate::energy::FiberCoefficients,
    energy: EnergyBreakdown,
}

/// Prepares, projects and evaluates a raw state. The returned fiber
/// coefficients belong to the *projected* pair (input coefficients are scaled
/// by the η-powers analytically, so no extra transforms are spent).
fn land_on_manifold(
    grid: &Grid2D,
    m: &ModelParams,
    h: &Field,
    opts: &SolveOptions,
    raw: &Pair,
) -> Result<ManifoldState> {
    let prepared = prepare(grid, opts, raw)?;
    let c = fiber_coefficients(grid, m, h, &prepared)?;
    let eta = energy::fiber_root(&c, m)?;
    let pair = prepared.scaled(eta);
    let ab = m.alpha() + m.beta();
    let fiber = crate::energy::FiberCoefficients {
        quad_u: eta * eta * c.quad_u,
        quad_v: eta * eta * c.quad_v,
        crit_u: eta.powf(m.crit1()) * c.crit_u,
        crit_v: eta.powf(m.crit2()) * c.crit_v,
        coupling: eta.powf(ab) * c.coupling,
    };
    let energy = energy_from_fiber(&fiber, m, 1.0);
    if !energy.total.is_finite() {
        return Err(Error::Diverged("non-finite energy after projection".into()));
    }
    Ok(ManifoldState { pair, fiber, energy })
}

/// Minimizes the energy on the constraint manifold starting from `init`.
///
/// The initial state must have a manifold projection (nonzero, with some
/// super-quadratic mass). Accepted iterates decrease the energy monotonically;
/// the run converges when the preconditioned gradient falls below
/// `opts.grad_tol` relative to the state norm *and* the Euler–Lagrange
/// residual is below 1e-5.
pub fn minimize_ground_state(
    grid: &Grid2D,
    m: &ModelParams,
    h: &Field,
    init: &Pair,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    const EL_TOL: f64 = 1e-5;
    let mut state = land_on_manifold(grid, m, h, opts, init)?;
    // In-loop landings keep the angular averaging (it commutes with descent)
    // but never re-fold signs: |·| inside the line search turns the far-field
    // tail adjustment into ascent of the quadratic form.
    let step_opts = SolveOptions {
        symmetrize: false,
        ..opts.clone()
    };
    let mut history = Vec::new();
    let mut sigma = match opts.step_rule {
        StepRule::Fixed(s) => s,
        StepRule::AdaptiveBb => 1.0,
    };
    let mut prev: Option<(Pair, Pair, Pair)> = None; // (pair, grad, precond)
    let mut converged = false;
    let mut concentration_flag = false;
    let mut el_residual = f64::INFINITY;
    let mut iterations = 0;

    for it in 0..opts.max_iters {
        iterations = it + 1;
        let g_full = energy::gradient(grid, m, h, &state.pair)?;
        // Effective gradient: the restricted problem sees only variations in
        // the symmetry class, so in radial mode the gradient is angularly
        // averaged before anything else.
        let g = if opts.radial {
            radial_project_pair(grid, &g_full)?
        } else {
            g_full
        };
        let z = Pair::new(
            operators::inv_mixed_operator(grid, &g.u, m.s1())?,
            operators::inv_mixed_operator(grid, &g.v, m.s2())?,
        )?;
        // ⟨g, L⁻¹g⟩ is ‖d‖²_D in an unrestricted solve and the squared dual
        // norm of the restricted gradient in a radial one; either way it is
        // the magnitude of the directional derivative along the step.
        let dnorm_sq = grid.inner(&g.u, &z.u)? + grid.inner(&g.v, &z.v)?;
        // Re-average the preconditioned direction so iterates stay radial
        // (the operator is anisotropic, hence does not preserve the class).
        let d = if opts.radial {
            radial_project_pair(grid, &z)?
        } else {
            z
        };
        let a1 = state.fiber.quad();
        let grad_rel = (dnorm_sq.max(0.0) / a1).sqrt();
        let gn = grid.l2_norm_sq(&g.u)? + grid.l2_norm_sq(&g.v)?;
        let pn = grid.l2_norm_sq(&state.pair.u)? + grid.l2_norm_sq(&state.pair.v)?;
        el_residual = (gn / pn.max(f64::MIN_POSITIVE)).sqrt();
        if opts.record_history {
            history.push(IterRecord {
                iter: it,
                energy: state.energy.total,
                grad_rel,
                nehari: nehari_from_fiber(&state.fiber, m),
            });
        }
        if grad_rel < opts.grad_tol && el_residual < EL_TOL {
            converged = true;
            break;
        }

        // Barzilai–Borwein step from the previous accepted iterate:
        // σ = ⟨Δp, Δg⟩ / ⟨Δd, Δg⟩ (both inner products in L², equal to the
        // Sobolev-metric BB2 quotient because Δg = L Δd).
        if let (StepRule::AdaptiveBb, Some((pp, pg, pd))) = (opts.step_rule, &prev) {
            let mut sp = state.pair.clone();
            sp.axpy(-1.0, pp)?;
            let mut yg = g.clone();
            yg.axpy(-1.0, pg)?;
            let mut yd = d.clone();
            yd.axpy(-1.0, pd)?;
            let num = grid.inner(&sp.u, &yg.u)? + grid.inner(&sp.v, &yg.v)?;
            let den = grid.inner(&yd.u, &yg.u)? + grid.inner(&yd.v, &yg.v)?;
            if den > 0.0 && num > 0.0 {
                sigma = (num / den).clamp(1e-6, 1e3);
            }
        }
        prev = Some((state.pair.clone(), g.clone(), d.clone()));

        // Monotone line search along the preconditioned direction.
        let mut step = sigma;
        let mut accepted: Option<ManifoldState> = None;
        for _ in 0..40 {
            let mut trial = state.pair.clone();
            trial.axpy(-step, &d)?;
            match land_on_manifold(grid, m, h, &step_opts, &trial) {
                // Any monotone decrease counts (margin of a few ULPs rejects
                // pure rounding noise without blocking terminal progress).
                Ok(next)
                    if next.energy.total
                        <= state.energy.total - 4.0 * f64::EPSILON * state.energy.total.abs() =>
                {
                    accepted = Some(next);
                    break;
                }
                _ => step *= 0.5,
            }
        }
        match accepted {
            Some(next) => {
                if matches!(opts.step_rule, StepRule::AdaptiveBb) {
                    sigma = step;
                }
                state = next;
            }
            None => {
                // Line search stalled. Near the configured critical level this
                // is the signature of a concentrating minimizing sequence.
                if let Some(level) = opts.critical_level {
                    if (state.energy.total - level).abs() <= 1e-6 * level.abs().max(1.0) {
                        concentration_flag = true;
                    }
                }
                converged = grad_rel < opts.grad_tol && el_residual < EL_TOL;
                break;
            }
        }
    }

    let nehari_residual = nehari_from_fiber(&state.fiber, m).abs();
    Ok(SolveReport {
        converged,
        iterations,
        energy: state.energy,
        nehari_residual,
        el_residual,
        semi_trivial: semi_trivial_flag(grid, &state.pair)?,
        boundary_decay: boundary_decay_metric(grid, &state.pair),
        concentration_flag,
        history,
        pair: state.pair,
    })
}

/// Compact, serializable view of one multistart run.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct StartSummary {
    pub start_index: usize,
    pub converged: bool,
    pub energy: f64,
    pub semi_trivial: bool,
    pub iterations: usize,
    /// Present when the start failed outright.
    pub error: Option<String>,
}

/// Outcome of a multistart search.
#[derive(Debug)]
pub struct MultistartOutcome {
    /// Lowest-energy converged report, or the lowest-energy finished report
    /// when nothing converged (check its `converged` flag).
    pub best: SolveReport,
    pub starts: Vec<StartSummary>,
    pub n_converged: usize,
    /// Every report that finished (converged or not), keyed by start index
    /// and sorted by the same deterministic order as `best`.
    pub reports: Vec<(usize, SolveReport)>,
}

/// Random off-center Gaussian pair: one center per start in the inner
/// half-box (at the origin in radial mode), shared by both components so the
/// coupling term is active from the first iterate — components planted apart
/// see no interaction force and the descent starves one of them — with
/// per-component widths in `[1, 4]` and amplitudes in `[0.5, 2]`.
fn gaussian_start(grid: &Grid2D, rng: &mut impl Rng, radial: bool) -> Pair {
    let cx: f64 = rng.random_range(-0.25..0.25) * grid.lx();
    let cy: f64 = rng.random_range(-0.25..0.25) * grid.ly();
    let (cx, cy) = if radial { (0.0, 0.0) } else { (cx, cy) };
    let mut bump = |_: ()| {
        let w: f64 = rng.random_range(1.0..4.0);
        let amp: f64 = rng.random_range(0.5..2.0);
        grid.field_from_fn(move |x, y| {
            amp * (-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (w * w)).exp()
        })
    };
    let u = bump(());
    let v = bump(());
    Pair { u, v }
}

/// Runs `opts.n_starts` independent solves from seeded Gaussian starts and
/// merges deterministically: candidates are ranked by `(converged desc,
/// energy asc, start index asc)` with total float ordering, so the outcome is
/// independent of scheduling.
pub fn multistart(
    grid: &Grid2D,
    m: &ModelParams,
    h: &Field,
    opts: &SolveOptions,
) -> Result<MultistartOutcome> {
    if opts.n_starts == 0 {
        return Err(Error::InvalidParam("n_starts must be at least 1".into()));
    }
    let inits: Vec<(usize, Pair)> = (0..opts.n_starts)
        .map(|i| {
            let mut rng = seeded_stream(opts.seed, &format!("multistart/{i}"));
            (i, gaussian_start(grid, &mut rng, opts.radial))
        })
        .collect();
    let results: Vec<(usize, Result<SolveReport>)> = inits
        .into_par_iter()
        .map(|(i, init)| (i, minimize_ground_state(grid, m, h, &init, opts)))
        .collect();

    let mut starts = Vec::with_capacity(results.len());
    let mut reports: Vec<(usize, SolveReport)> = Vec::new();
    for (i, r) in results {
        match r {
            Ok(rep) => {
                starts.push(StartSummary {
                    start_index: i,
                    converged: rep.converged,
                    energy: rep.energy.total,
                    semi_trivial: rep.semi_trivial,
                    iterations: rep.iterations,
                    error: None,
                });
                reports.push((i, rep));
            }
            Err(e) => starts.push(StartSummary {
                start_index: i,
                converged: false,
                energy: f64::NAN,
                semi_trivial: false,
                iterations: 0,
                error: Some(e.to_string()),
            }),
        }
    }
    starts.sort_by_key(|s| s.start_index);
    let n_converged = reports.iter().filter(|(_, r)| r.converged).count();
    reports.sort_by(|(ia, a), (ib, b)| {
        b.converged
            .cmp(&a.converged)
            .then(a.energy.total.total_cmp(&b.energy.total))
            .then(ia.cmp(ib))
    });
    let best = reports
        .first()
        .map(|(_, r)| r.clone())
        .ok_or_else(|| {
            let first = starts
                .iter()
                .find_map(|s| s.error.clone())
                .unwrap_or_else(|| "unknown".into());
            Error::AllStartsFailed(first)
        })?;
    Ok(MultistartOutcome {
        best,
        starts,
        n_converged,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::Weight;

    fn quick_opts() -> SolveOptions {
        SolveOptions {
            max_iters: 3000,
            n_starts: 3,
            seed: 11,
            ..SolveOptions::default()
        }
    }

    #[test]
    fn radial_projection_is_idempotent_and_kills_harmonics() {
        let grid = Grid2D::new(32, 32, 16.0, 16.0).unwrap();
        // Random-ish smooth field.
        let f = grid.field_from_fn(|x, y| {
            (0.3 * x).sin() * (0.2 * y).cos() + 0.1 * x - 0.05 * y * y
        });
        let p1 = radial_project(&grid, &f).unwrap();
        let p2 = radial_project(&grid, &p1).unwrap();
        let scale = grid.max_abs(&p1).max(1e-300);
        let worst = p1
            .values()
            .iter()
            .zip(p2.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(worst <= 1e-10 * scale, "idempotence defect {worst:.3e}");

        // A pure angular harmonic cos(θ)·g(r) averages to zero, provided g
        // decays to machine zero before the asymmetric extreme row at −L/2
        // (whose +L/2 mirror nodes do not exist on the even grid).
        let harmonic = grid.field_from_fn(|x, y| {
            let r = (x * x + y * y).sqrt();
            if r == 0.0 {
                0.0
            } else {
                (x / r) * (-r * r / 2.0).exp()
            }
        });
        let killed = radial_project(&grid, &harmonic).unwrap();
        assert!(
            grid.max_abs(&killed) < 1e-12,
            "harmonic residue {:.3e}",
            grid.max_abs(&killed)
        );

        // A radial Gaussian sampled on the grid is preserved.
        let radial = grid.field_from_fn(|x, y| (-(x * x + y * y) / 9.0).exp());
        let kept = radial_project(&grid, &radial).unwrap();
        let drift = radial
            .values()
            .iter()
            .zip(kept.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(drift < 1e-12, "radial field drifted {drift:.3e}");
    }

    #[test]
    fn semi_trivial_detection() {
        let grid = Grid2D::new(16, 16, 8.0, 8.0).unwrap();
        let u = grid.field_from_fn(|x, y| (-(x * x + y * y)).exp());
        let p = Pair::new(u.clone(), u.scaled(1e-9)).unwrap();
        assert!(semi_trivial_flag(&grid, &p).unwrap());
        let q = Pair::new(u.clone(), u.scaled(0.5)).unwrap();
        assert!(!semi_trivial_flag(&grid, &q).unwrap());
    }

    #[test]
    fn solve_converges_and_energy_history_is_monotone() {
        let grid = Grid2D::new(48, 48, 24.0, 24.0).unwrap();
        let m = ModelParams::new(0.5, 0.5, 2.0, 2.0, 5.0).unwrap();
        let h = Weight::annular_gaussian(1.0).unwrap().sample(&grid);
        let init = Pair::new(
            grid.field_from_fn(|x, y| (-(x * x + y * y) / 4.0).exp()),
            grid.field_from_fn(|x, y| 0.8 * (-((x - 1.0) * (x - 1.0) + y * y) / 6.0).exp()),
        )
        .unwrap();
        let mut opts = quick_opts();
        opts.record_history = true;
        let rep = minimize_ground_state(&grid, &m, &h, &init, &opts).unwrap();
        assert!(rep.converged, "did not converge: {rep:?}");
        assert!(rep.energy.total > 0.0);
        assert!(rep.el_residual < 1e-5);
        assert!(
            rep.nehari_residual
                <= 1e-8 * (rep.energy.quad_u + rep.energy.quad_v),
            "Φ residual {:.3e}",
            rep.nehari_residual
        );
        for w in rep.history.windows(2) {
            assert!(
                w[1].energy <= w[0].energy + 1e-12 * w[0].energy.abs(),
                "energy increased: {} → {}",
                w[0].energy,
                w[1].energy
            );
        }
        // Fractional tails decay algebraically, |y|^{−(1+2s)} ≈ 1/144 at the
        // edge of this box; the boundary metric floor is that scale, not the
        // exponential-tail scale.
        assert!(rep.boundary_decay < 1e-2, "boundary {:.3e}", rep.boundary_decay);
    }

    #[test]
    fn radial_solve_stays_radial() {
        let grid = Grid2D::new(48, 48, 24.0, 24.0).unwrap();
        let m = ModelParams::new(0.5, 0.5, 2.0, 2.0, 5.0).unwrap();
        let h = Weight::annular_gaussian(1.0).unwrap().sample(&grid);
        let mut opts = quick_opts();
        opts.radial = true;
        opts.n_starts = 2;
        let out = multistart(&grid, &m, &h, &opts).unwrap();
        let p = &out.best.pair;
        let pr = radial_project_pair(&grid, p).unwrap();
        let num = {
            let du = p.u.zip_map(&pr.u, |a, b| a - b).unwrap();
            let dv = p.v.zip_map(&pr.v, |a, b| a - b).unwrap();
            (grid.l2_norm_sq(&du).unwrap() + grid.l2_norm_sq(&dv).unwrap()).sqrt()
        };
        let den = (grid.l2_norm_sq(&p.u).unwrap() + grid.l2_norm_sq(&p.v).unwrap()).sqrt();
        assert!(num / den < 1e-4, "radial defect {:.3e}", num / den);
    }

    #[test]
    fn translating_a_constant_weight_problem_translates_the_solution() {
        let grid = Grid2D::new(32, 32, 18.0, 18.0).unwrap();
        let m = ModelParams::new(0.5, 0.5, 2.0, 2.0, 1.0).unwrap();
        let h = Weight::constant(1.0).unwrap().sample(&grid);
        let init = Pair::new(
            grid.field_from_fn(|x, y| 1.2 * (-(x * x + y * y) / 4.0).exp()),
            grid.field_from_fn(|x, y| 0.9 * (-(x * x + y * y) / 5.0).exp()),
        )
        .unwrap();
        let opts = quick_opts();
        let rep = minimize_ground_state(&grid, &m, &h, &init, &opts).unwrap();
        let shifted = Pair::new(
            grid.translate(&init.u, 3, -2).unwrap(),
            grid.translate(&init.v, 3, -2).unwrap(),
        )
        .unwrap();
        let rep2 = minimize_ground_state(&grid, &m, &h, &shifted, &opts).unwrap();
        assert!(rep.converged && rep2.converged);
        let rel = (rep.energy.total - rep2.energy.total).abs() / rep.energy.total;
        assert!(rel < 1e-8, "translated energy differs by {rel:.3e}");
    }

    #[test]
    fn multistart_merge_is_deterministic() {
        let grid = Grid2D::new(32, 32, 20.0, 20.0).unwrap();
        let m = ModelParams::new(0.5, 0.5, 2.0, 2.0, 10.0).unwrap();
        let h = Weight::annular_gaussian(1.0).unwrap().sample(&grid);
        let opts = quick_opts();
        let a = multistart(&grid, &m, &h, &opts).unwrap();
        let b = multistart(&grid, &m, &h, &opts).unwrap();
        assert_eq!(a.n_converged, b.n_converged);
        assert_eq!(a.best.energy.total.to_bits(), b.best.energy.total.to_bits());
        for (x, y) in a.starts.iter().zip(&b.starts) {
            assert_eq!(x.energy.to_bits(), y.energy.to_bits());
        }
    }
}
