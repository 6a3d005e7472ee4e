//! Dilation-type necessary conditions for solutions at the critical coupling
//! exponent, and the nonexistence diagnostics they imply.
//!
//! For states with both orders equal (`s₁ = s₂ = s`) and the coupling at the
//! critical exponent (`α+β = 2(1+s)/(1−s)`), any decayed solution of the
//! Euler–Lagrange system must satisfy three integral identities. Writing
//! `DX = ∫|∂ₓu|²+|∂ₓv|²`, `FR` for the corresponding fractional forms,
//! `P = ∫|u|^{2ₛ}+|v|^{2ₛ}`, `A = ∫h|u|^α|v|^β` and the weight moment
//! `M = ∫(y·∂_y h + s·x·∂ₓh)|u|^α|v|^β`:
//!
//! * identity I (dilation):   `s(DX + FR) = sP + κ·s·2ₛ·A − κM`
//! * identity II (constraint): `DX + FR + ∫u²+v² = P + κ·2ₛ·A`
//! * identity III (their combination): `∫u²+v² = (κ/s)·M`
//!
//! Identity III is the nonexistence witness: whenever the weight satisfies
//! the sign hypothesis `κx∂ₓh ≤ 0 ∧ κy∂_yh ≤ 0` (constants included), its
//! right side is non-positive while the left side is positive for any
//! nontrivial state — so no decayed solution can exist on the plane, and a
//! positive gap quantifies the obstruction for each discrete candidate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};
use crate::model::{ModelParams, Pair, Regime};
use crate::operators;
use crate::solver::{multistart, SolveOptions};
use crate::util::pow_abs;
use crate::weights::{radial_hypothesis_sign, SignReport, Weight};

/// Residuals and transparency integrals of the three dilation identities for
/// one state. Each residual is `|LHS − RHS| / max(|LHS|, |RHS|, 1e−30)`, so a
/// zero state reports zeros.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PohozaevReport {
    /// Relative residual of the dilation identity (I).
    pub r61: f64,
    /// Relative residual of the norm identity (II) — algebraically the
    /// manifold constraint at the critical exponent.
    pub r62: f64,
    /// Relative residual of the combined identity (III).
    pub r622: f64,
    /// `∫ u² + v²` (left side of III).
    pub lhs622: f64,
    /// `(κ/s) · M` (right side of III).
    pub rhs622: f64,
    /// `lhs622 − rhs622`: positive for a nontrivial state under the sign
    /// hypothesis, witnessing that the candidate cannot persist on the plane.
    pub gap622: f64,
    /// ‖x·u‖₂ with box-centered x: finiteness proxy for the decay hypothesis.
    pub moment_xu: f64,
    /// ‖y·v‖₂ with box-centered y.
    pub moment_yv: f64,
    /// Squared-mass fraction of the pair in the outer 10% frame of the box.
    pub ring_mass_fraction: f64,
    /// The ring fraction is below 1e−6: the moment truncation is trustworthy.
    pub moment_ok: bool,
    /// `DX + FR`: both derivative quadratic forms summed over the pair.
    pub derivative_forms: f64,
    /// `P`: summed critical-power masses.
    pub crit_sum: f64,
    /// `A`: the weighted coupling integral.
    pub coupling: f64,
    /// `M`: the weight moment under box-centered coordinates.
    pub moment: f64,
}

fn rel_residual(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-30)
}

fn require_critical(m: &ModelParams) -> Result<()> {
    if m.regime() != Regime::Critical {
        return Err(Error::RegimeMismatch(format!(
            "the dilation identities hold only with equal orders and the coupling at the \
             critical exponent (s1 = s2, alpha + beta = 2(1+s)/(1−s)); got s1 = {}, s2 = {}, \
             alpha + beta = {}",
            m.s1(),
            m.s2(),
            m.alpha() + m.beta()
        )));
    }
    Ok(())
}

/// Evaluates the three identity residuals for an arbitrary pair (not
/// necessarily a solution). `origin` recenters the coordinate fields used in
/// the moments, so a grid translation of state and weight together leaves
/// every residual unchanged (up to wrap-around of the decayed tails).
pub fn pohozaev_residuals(
    grid: &Grid2D,
    m: &ModelParams,
    h: &Weight,
    p: &Pair,
    origin: (f64, f64),
) -> Result<PohozaevReport> {
    require_critical(m)?;
    if p.u.nx() != grid.nx() || p.u.ny() != grid.ny() {
        return Err(Error::DimensionMismatch(format!(
            "pair {}x{} vs grid {}x{}",
            p.u.nx(),
            p.u.ny(),
            grid.nx(),
            grid.ny()
        )));
    }
    let s = m.s1();
    let two_s = m.crit1();
    let kappa = m.kappa();
    let (ox, oy) = origin;

    let dx_u = operators::dxx_form(grid, &p.u)?;
    let dx_v = operators::dxx_form(grid, &p.v)?;
    let fr_u = operators::frac_form(grid, &p.u, s)?;
    let fr_v = operators::frac_form(grid, &p.v, s)?;
    let l2_u = grid.l2_norm_sq(&p.u)?;
    let l2_v = grid.l2_norm_sq(&p.v)?;
    let crit_u = grid.integrate(&p.u.map(|t| pow_abs(t, two_s)))?;
    let crit_v = grid.integrate(&p.v.map(|t| pow_abs(t, two_s)))?;

    let w = p
        .u
        .zip_map(&p.v, |a, b| pow_abs(a, m.alpha()) * pow_abs(b, m.beta()))?;
    let hf = h.sample(grid);
    let (hx, hy) = h.sample_grad(grid);
    let coupling = grid.inner(&hf, &w)?;
    let mut moment_density = grid.zeros();
    for ix in 0..grid.nx() {
        let x = grid.x(ix) - ox;
        for iy in 0..grid.ny() {
            let y = grid.y(iy) - oy;
            let mval = (y * hy.at(ix, iy) + s * x * hx.at(ix, iy)) * w.at(ix, iy);
            moment_density.set(ix, iy, mval);
        }
    }
    let moment = grid.integrate(&moment_density)?;

    let moment_xu = {
        let f = grid.field_from_fn(|x, _| x - ox);
        grid.l2_norm_sq(&f.zip_map(&p.u, |a, b| a * b)?)?.sqrt()
    };
    let moment_yv = {
        let f = grid.field_from_fn(|_, y| y - oy);
        grid.l2_norm_sq(&f.zip_map(&p.v, |a, b| a * b)?)?.sqrt()
    };
    let total_mass = l2_u + l2_v;
    let ring_mass_fraction = if total_mass > 0.0 {
        (grid.ring_mass_fraction(&p.u, 0.1)? * l2_u + grid.ring_mass_fraction(&p.v, 0.1)? * l2_v)
            / total_mass
    } else {
        0.0
    };

    let derivative_forms = dx_u + dx_v + fr_u + fr_v;
    let crit_sum = crit_u + crit_v;

    let lhs61 = s * derivative_forms;
    let rhs61 = s * crit_sum + kappa * s * two_s * coupling - kappa * moment;
    let lhs62 = derivative_forms + l2_u + l2_v;
    let rhs62 = crit_sum + kappa * two_s * coupling;
    let lhs622 = l2_u + l2_v;
    let rhs622 = kappa / s * moment;

    Ok(PohozaevReport {
        r61: rel_residual(lhs61, rhs61),
        r62: rel_residual(lhs62, rhs62),
        r622: rel_residual(lhs622, rhs622),
        lhs622,
        rhs622,
        gap622: lhs622 - rhs622,
        moment_xu,
        moment_yv,
        ring_mass_fraction,
        moment_ok: ring_mass_fraction < 1e-6,
        derivative_forms,
        crit_sum,
        coupling,
        moment,
    })
}

/// Identity-III evaluation of the same candidate re-embedded (zero-padded)
/// in a box enlarged by ≈1.5× at identical grid spacing, with the weight
/// resampled from its closed form.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoxSensitivity {
    /// Actual enlargement factor after rounding to even grid sizes.
    pub factor_x: f64,
    pub factor_y: f64,
    /// `gap622` recomputed on the enlarged box.
    pub gap622: f64,
    /// `|gap_enlarged − gap| / max(|gap|, 1e−30)`.
    pub rel_change: f64,
}

/// One multistart candidate examined by the probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeCandidate {
    pub start_index: usize,
    pub converged: bool,
    pub semi_trivial: bool,
    pub energy: f64,
    pub residuals: PohozaevReport,
    /// The candidate is inconsistent with existence on the plane: its
    /// identity-III gap is strictly positive while the sign hypothesis makes
    /// the right side non-positive.
    pub witnesses_nonexistence: bool,
    /// Absent for tabulated weights (no closed form to resample outside the
    /// original box).
    pub box_sensitivity: Option<BoxSensitivity>,
}

/// Outcome of the nonexistence probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeReport {
    /// False when the sign hypothesis fails: the probe declines to conclude
    /// and reports the worst violation values instead of candidates.
    pub gated: bool,
    pub hypothesis: SignReport,
    pub kappa: f64,
    pub candidates: Vec<ProbeCandidate>,
}

fn round_even(x: f64) -> usize {
    let n = (x / 2.0).round() as usize * 2;
    n.max(8)
}

fn embed_in_larger_box(grid: &Grid2D, f: &Field, factor: f64) -> Result<(Grid2D, Field)> {
    let nx2 = round_even(grid.nx() as f64 * factor);
    let ny2 = round_even(grid.ny() as f64 * factor);
    let big = Grid2D::new(
        nx2,
        ny2,
        nx2 as f64 * grid.dx(),
        ny2 as f64 * grid.dy(),
    )?;
    let mut out = big.zeros();
    let off_x = (nx2 - grid.nx()) / 2;
    let off_y = (ny2 - grid.ny()) / 2;
    for ix in 0..grid.nx() {
        for iy in 0..grid.ny() {
            out.set(ix + off_x, iy + off_y, f.at(ix, iy));
        }
    }
    Ok((big, out))
}

fn candidate_sensitivity(
    grid: &Grid2D,
    m: &ModelParams,
    h: &Weight,
    p: &Pair,
    base_gap: f64,
) -> Result<Option<BoxSensitivity>> {
    if matches!(h, Weight::Tabulated(_)) {
        return Ok(None);
    }
    let (big, u) = embed_in_larger_box(grid, &p.u, 1.5)?;
    let (_, v) = embed_in_larger_box(grid, &p.v, 1.5)?;
    let pair = Pair::new(u, v)?;
    let rep = pohozaev_residuals(&big, m, h, &pair, (0.0, 0.0))?;
    Ok(Some(BoxSensitivity {
        factor_x: big.lx() / grid.lx(),
        factor_y: big.ly() / grid.ly(),
        gap622: rep.gap622,
        rel_change: (rep.gap622 - base_gap).abs() / base_gap.abs().max(1e-30),
    }))
}

/// Runs multistart ground-state searches and evaluates the identity-III gap
/// for every candidate the solver produces (converged or stalled). Gated on
/// the sign hypothesis: when it fails, no conclusion is drawn and the worst
/// violation values are reported instead.
pub fn nonexistence_probe(
    grid: &Grid2D,
    m: &ModelParams,
    h: &Weight,
    opts: &SolveOptions,
) -> Result<ProbeReport> {
    require_critical(m)?;
    let hypothesis = radial_hypothesis_sign(h, grid, m.kappa());
    if !hypothesis.holds {
        return Ok(ProbeReport {
            gated: false,
            hypothesis,
            kappa: m.kappa(),
            candidates: Vec::new(),
        });
    }
    let hf = h.sample(grid);
    let reports = match multistart(grid, m, &hf, opts) {
        Ok(out) => out.reports,
        Err(Error::AllStartsFailed(_)) => Vec::new(),
        Err(e) => return Err(e),
    };
    let candidates = reports
        .into_iter()
        .map(|(i, rep)| -> Result<ProbeCandidate> {
            let residuals = pohozaev_residuals(grid, m, h, &rep.pair, (0.0, 0.0))?;
            let box_sensitivity = candidate_sensitivity(grid, m, h, &rep.pair, residuals.gap622)?;
            Ok(ProbeCandidate {
                start_index: i,
                converged: rep.converged,
                semi_trivial: rep.semi_trivial,
                energy: rep.energy.total,
                witnesses_nonexistence: residuals.gap622 > 0.0 && residuals.lhs622 > 0.0,
                residuals,
                box_sensitivity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbeReport {
        gated: true,
        hypothesis,
        kappa: m.kappa(),
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy;
    use crate::weights::TabulatedWeight;

    fn critical_params(kappa: f64) -> ModelParams {
        // s = 0.5 puts the critical exponent at 6, so α = β = 3.
        ModelParams::new(0.5, 0.5, 3.0, 3.0, kappa).unwrap()
    }

    fn smooth_pair(grid: &Grid2D) -> Pair {
        Pair::new(
            grid.field_from_fn(|x, y| 1.1 * (-(x * x + 0.8 * y * y) / 3.0).exp()),
            grid.field_from_fn(|x, y| {
                0.7 * (-((x - 0.9) * (x - 0.9) + (y + 0.6) * (y + 0.6)) / 2.5).exp()
            }),
        )
        .unwrap()
    }

    #[test]
    fn non_critical_regimes_are_rejected() {
        let grid = Grid2D::new(16, 16, 10.0, 10.0).unwrap();
        let m = ModelParams::new(0.5, 0.5, 2.0, 2.0, 1.0).unwrap();
        let p = smooth_pair(&grid);
        let err = pohozaev_residuals(&grid, &m, &Weight::constant(1.0).unwrap(), &p, (0.0, 0.0));
        assert!(matches!(err, Err(Error::RegimeMismatch(_))));
        let opts = SolveOptions::default();
        assert!(matches!(
            nonexistence_probe(&grid, &m, &Weight::constant(1.0).unwrap(), &opts),
            Err(Error::RegimeMismatch(_))
        ));
    }

    #[test]
    fn zero_pair_reports_zero_residuals() {
        let grid = Grid2D::new(16, 16, 10.0, 10.0).unwrap();
        let m = critical_params(2.0);
        let p = Pair::new(grid.zeros(), grid.zeros()).unwrap();
        let rep =
            pohozaev_residuals(&grid, &m, &Weight::constant(1.0).unwrap(), &p, (0.0, 0.0)).unwrap();
        assert_eq!(rep.r61, 0.0);
        assert_eq!(rep.r62, 0.0);
        assert_eq!(rep.r622, 0.0);
        assert_eq!(rep.gap622, 0.0);
        assert!(!(rep.gap622 > 0.0));
    }

    #[test]
    fn identity_two_is_the_manifold_constraint_at_criticality() {
        let grid = Grid2D::new(32, 32, 20.0, 20.0).unwrap();
        let m = critical_params(2.0);
        let h = Weight::annular_gaussian(1.0).unwrap();
        let hf = h.sample(&grid);
        let proj = energy::project_to_nehari(&grid, &m, &hf, &smooth_pair(&grid)).unwrap();
        let rep = pohozaev_residuals(&grid, &m, &h, &proj.scaled, (0.0, 0.0)).unwrap();
        assert!(
            rep.r62 < 1e-10,
            "constraint identity residual {:.3e} on a projected pair",
            rep.r62
        );
    }

    #[test]
    fn residuals_are_translation_invariant_with_recentered_moments() {
        let grid = Grid2D::new(48, 48, 24.0, 24.0).unwrap();
        let m = critical_params(3.0);
        let base = Weight::CompactBump.sample(&grid);
        let h = Weight::Tabulated(
            TabulatedWeight::new(48, 48, 24.0, 24.0, base.values().to_vec()).unwrap(),
        );
        let p = smooth_pair(&grid);
        let rep = pohozaev_residuals(&grid, &m, &h, &p, (0.0, 0.0)).unwrap();

        let (sx, sy) = (5isize, -3isize);
        let moved = Pair::new(
            grid.translate(&p.u, sx, sy).unwrap(),
            grid.translate(&p.v, sx, sy).unwrap(),
        )
        .unwrap();
        let moved_h = Weight::Tabulated(
            TabulatedWeight::new(
                48,
                48,
                24.0,
                24.0,
                grid.translate(&base, sx, sy).unwrap().values().to_vec(),
            )
            .unwrap(),
        );
        let origin = (sx as f64 * grid.dx(), sy as f64 * grid.dy());
        let rep2 = pohozaev_residuals(&grid, &m, &moved_h, &moved, origin).unwrap();
        for (a, b, name) in [
            (rep.r61, rep2.r61, "I"),
            (rep.r62, rep2.r62, "II"),
            (rep.r622, rep2.r622, "III"),
        ] {
            assert!(
                (a - b).abs() <= 1e-8 * a.abs().max(b.abs()).max(1e-30),
                "identity {name} residual moved under translation: {a:.12e} vs {b:.12e}"
            );
        }
        assert!((rep.gap622 - rep2.gap622).abs() <= 1e-8 * rep.gap622.abs());
    }

    #[test]
    fn sign_hypothesis_forces_nonpositive_rhs() {
        let grid = Grid2D::new(32, 32, 16.0, 16.0).unwrap();
        let m = critical_params(3.0);
        let p = smooth_pair(&grid);
        for h in [Weight::CompactBump, Weight::constant(2.0).unwrap()] {
            assert!(radial_hypothesis_sign(&h, &grid, m.kappa()).holds);
            let rep = pohozaev_residuals(&grid, &m, &h, &p, (0.0, 0.0)).unwrap();
            assert!(
                rep.rhs622 <= 1e-12,
                "right side {:.3e} should be non-positive under the sign hypothesis",
                rep.rhs622
            );
            assert!(rep.gap622 > 0.0);
        }
    }

    #[test]
    fn probe_declines_without_the_hypothesis_and_witnesses_with_it() {
        let grid = Grid2D::new(32, 32, 18.0, 18.0).unwrap();
        let m = critical_params(5.0);
        let opts = SolveOptions {
            max_iters: 250,
            n_starts: 2,
            seed: 5,
            ..SolveOptions::default()
        };

        // Annular weight increases through the origin ring: hypothesis fails
        // for either coupling sign, so the probe must decline.
        let annular = Weight::annular_gaussian(1.0).unwrap();
        let declined = nonexistence_probe(&grid, &m, &annular, &opts).unwrap();
        assert!(!declined.gated);
        assert!(declined.candidates.is_empty());
        assert!(declined.hypothesis.worst_x > 0.0 || declined.hypothesis.worst_y > 0.0);

        // Constant weight: right side vanishes identically, every nonzero
        // candidate witnesses the obstruction.
        let constant = Weight::constant(1.0).unwrap();
        let probed = nonexistence_probe(&grid, &m, &constant, &opts).unwrap();
        assert!(probed.gated);
        assert!(!probed.candidates.is_empty());
        for c in &probed.candidates {
            assert!(c.residuals.rhs622.abs() <= 1e-12);
            assert!(c.witnesses_nonexistence, "candidate gap {:.3e}", c.residuals.gap622);
            let sens = c.box_sensitivity.expect("closed-form weight resamples");
            assert!(sens.gap622.is_finite());
            assert!(sens.factor_x > 1.4 && sens.factor_x < 1.6);
        }

        // Tabulated weights cannot be resampled outside their box.
        let tab = Weight::Tabulated(
            TabulatedWeight::new(
                32,
                32,
                18.0,
                18.0,
                Weight::CompactBump.sample(&grid).values().to_vec(),
            )
            .unwrap(),
        );
        let tab_probe = nonexistence_probe(&grid, &m, &tab, &opts).unwrap();
        if tab_probe.gated {
            for c in &tab_probe.candidates {
                assert!(c.box_sensitivity.is_none());
            }
        }
    }
}
