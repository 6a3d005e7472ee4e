//! The coupled energy functional, its L² gradient, the constraint functional,
//! fiber maps along rays, and the projection onto the constraint manifold.
//!
//! For a pair `p = (u, v)` with weight `h` and parameters
//! `(s1, s2, α, β, κ)` (critical exponents `p_i = 2(1+s_i)/(1−s_i)`):
//!
//! ```text
//! J(p) = ½‖u‖²_{s1} + ½‖v‖²_{s2} − ‖u‖^{p1}_{p1}/p1 − ‖v‖^{p2}_{p2}/p2 − κ ∫ h|u|^α|v|^β
//! Φ(p) = ⟨J′(p), p⟩ = ‖p‖²_D − ‖u‖^{p1}_{p1} − ‖v‖^{p2}_{p2} − κ(α+β) ∫ h|u|^α|v|^β
//! ```
//!
//! The constraint manifold is `{Φ = 0, p ≠ 0}`. Along the ray `t ↦ t·p` the
//! energy restricts to the fiber polynomial whose coefficients are the four
//! integrals above; the manifold projection is the unique positive root of its
//! derivative, found by bracketing plus safeguarded Newton.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};
use crate::model::{ModelParams, Pair};
use crate::operators;
use crate::util::{neumaier_sum, pow_abs, signed_pow};

/// The named integrals of the energy at a state, plus their combination.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct EnergyBreakdown {
    /// `‖u‖²_{s1}` (full anisotropic Sobolev norm squared).
    pub quad_u: f64,
    /// `‖v‖²_{s2}`.
    pub quad_v: f64,
    /// `∫ |u|^{p1}`.
    pub crit_u: f64,
    /// `∫ |v|^{p2}`.
    pub crit_v: f64,
    /// `∫ h |u|^α |v|^β` (without the κ factor).
    pub coupling: f64,
    /// `quad/2 − crit_u/p1 − crit_v/p2 − κ·coupling`.
    pub total: f64,
}

/// Coefficients of the fiber polynomial of a state:
/// `ψ(t) = t²·quad/2 − t^{p1}·crit_u/p1 − t^{p2}·crit_v/p2 − κ·coupling·t^{α+β}`.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct FiberCoefficients {
    pub quad_u: f64,
    pub quad_v: f64,
    pub crit_u: f64,
    pub crit_v: f64,
    pub coupling: f64,
}

impl FiberCoefficients {
    /// Total quadratic coefficient `‖p‖²_D`.
    pub fn quad(&self) -> f64 {
        self.quad_u + self.quad_v
    }
}

fn check_weight(grid: &Grid2D, h: &Field) -> Result<()> {
    if h.nx() != grid.nx() || h.ny() != grid.ny() {
        return Err(Error::DimensionMismatch(format!(
            "weight field is {}x{}, grid is {}x{}",
            h.nx(),
            h.ny(),
            grid.nx(),
            grid.ny()
        )));
    }
    Ok(())
}

/// Computes all fiber coefficients of a pair (four integrals, two FFTs).
pub fn fiber_coefficients(
    grid: &Grid2D,
    m: &ModelParams,
    h: &Field,
    p: &Pair,
) -> Result<FiberCoefficients> {
    check_weight(grid, h)?;
    let quad_u = operators::sobolev_norm_sq(grid, &p.u, m.s1())?;
    let quad_v = operators::sobolev_norm_sq(grid, &p.v, m.s2())?;
    let area = grid.cell_area();
    let p1 = m.crit1();
    let p2 = m.crit2();
    let crit_u = area * neumaier_sum(p.u.values().iter().map(|&a| pow_abs(a.abs(), p1)));
    let crit_v = area * neumaier_sum(p.v.values().iter().map(|&a| pow_abs(a.abs(), p2)));
    if p.u.nx() != h.nx() || p.u.ny() != h.ny() {
        return Err(Error::DimensionMismatch(
            "pair does not match the weight grid".into(),
        ));
    }
    let (alpha, beta) = (m.alpha(), m.beta());
    let coupling = area
        * neumaier_sum(
            h.values()
                .iter()
                .zip(p.u.values())
                .zip(p.v.values())
                .map(|((&hh, &a), &b)| hh * pow_abs(a.abs(), alpha) * pow_abs(b.abs(), beta)),
        );
    let c = FiberCoefficients {
        quad_u,
        quad_v,
        crit_u,
        crit_v,
        coupling,
    };
    if ![quad_u, quad_v, crit_u, crit_v, coupling]
        .iter()
        .all(|x| x.is_finite())
    {
        return Err(Error::NonFinite("fiber coefficients".into()));
    }
    Ok(c)
}

/// Energy of the scaled state `t·p` expressed through precomputed fiber
/// coefficients — no transforms needed.
pub fn energy_from_fiber(c: &FiberCoefficients, m: &ModelParams, t: f64) -> EnergyBreakdown {
    let t2 = t * t;
    let quad_u = t2 * c.quad_u;
    let quad_v = t2 * c.quad_v;
    let crit_u = pow_abs(t.abs(), m.crit1()) * c.crit_u;
    let crit_v = pow_abs(t.abs(), m.crit2()) * c.crit_v;
    let coupling = pow_abs(t.abs(), m.alpha() + m.beta()) * c.coupling;
    EnergyBreakdown {
        quad_u,
        quad_v,
        crit_u,
        crit_v,
        coupling,
        total: 0.5 * (quad_u + quad_v)
            - crit_u / m.crit1()
            - crit_v / m.crit2()
            - m.kappa() * coupling,
    }
}

/// Energy of a pair.
pub fn energy(grid: &Grid2D, m: &ModelParams, h: &Field, p: &Pair) -> Result<EnergyBreakdown> {
    let c = fiber_coefficients(grid, m, h, p)?;
    Ok(energy_from_fiber(&c, m, 1.0))
}

/// L²-Riesz representative of the energy derivative:
///
/// ```text
/// g_u = (I − ∂xx + (−Δ_y)^{s1}) u − |u|^{p1−2}u − κ α h |u|^{α−2}u |v|^β
/// g_v = (I − ∂xx + (−Δ_y)^{s2}) v − |v|^{p2−2}v − κ β h |u|^α |v|^{β−2}v
/// ```
///
/// Signed powers are evaluated as `sign(w)·|w|^{q−1}`, which extends by zero
/// through `w = 0` for every exponent `q > 1`.
pub fn gradient(grid: &Grid2D, m: &ModelParams, h: &Field, p: &Pair) -> Result<Pair> {
    check_weight(grid, h)?;
    let lu = operators::mixed_operator(grid, &p.u, m.s1())?;
    let lv = operators::mixed_operator(grid, &p.v, m.s2())?;
    let (p1m1, p2m1) = (m.crit1() - 1.0, m.crit2() - 1.0);
    let (ka, kb) = (m.kappa() * m.alpha(), m.kappa() * m.beta());
    let (am1, bm1) = (m.alpha() - 1.0, m.beta() - 1.0);
    let n = grid.len();
    let mut gu = vec![0.0; n];
    let mut gv = vec![0.0; n];
    let (hu, uv, vv) = (h.values(), p.u.values(), p.v.values());
    for i in 0..n {
        let (ui, vi, hi) = (uv[i], vv[i], hu[i]);
        gu[i] = lu.values()[i]
            - signed_pow(ui, p1m1)
            - ka * hi * signed_pow(ui, am1) * pow_abs(vi.abs(), m.beta());
        gv[i] = lv.values()[i]
            - signed_pow(vi, p2m1)
            - kb * hi * pow_abs(ui.abs(), m.alpha()) * signed_pow(vi, bm1);
    }
    let g = Pair::new(
        Field::from_values(grid.nx(), grid.ny(), gu)?,
        Field::from_values(grid.nx(), grid.ny(), gv)?,
    )?;
    if !g.is_finite() {
        return Err(Error::NonFinite("energy gradient".into()));
    }
    Ok(g)
}

/// Constraint functional `Φ(p) = ⟨J′(p), p⟩`.
pub fn nehari_value(grid: &Grid2D, m: &ModelParams, h: &Field, p: &Pair) -> Result<f64> {
    let c = fiber_coefficients(grid, m, h, p)?;
    Ok(nehari_from_fiber(&c, m))
}

/// Φ expressed through fiber coefficients.
pub fn nehari_from_fiber(c: &FiberCoefficients, m: &ModelParams) -> f64 {
    c.quad() - c.crit_u - c.crit_v - m.kappa() * (m.alpha() + m.beta()) * c.coupling
}

/// Fiber polynomial `ψ(t)` (energy along the ray `t·p`).
pub fn fiber_value(c: &FiberCoefficients, m: &ModelParams, t: f64) -> f64 {
    energy_from_fiber(c, m, t).total
}

/// First derivative `ψ′(t)`.
pub fn fiber_d1(c: &FiberCoefficients, m: &ModelParams, t: f64) -> f64 {
    let ab = m.alpha() + m.beta();
    c.quad() * t
        - c.crit_u * pow_abs(t, m.crit1() - 1.0)
        - c.crit_v * pow_abs(t, m.crit2() - 1.0)
        - m.kappa() * ab * c.coupling * pow_abs(t, ab - 1.0)
}

/// Second derivative `ψ″(t)`.
pub fn fiber_d2(c: &FiberCoefficients, m: &ModelParams, t: f64) -> f64 {
    let ab = m.alpha() + m.beta();
    let (p1, p2) = (m.crit1(), m.crit2());
    c.quad()
        - (p1 - 1.0) * c.crit_u * pow_abs(t, p1 - 2.0)
        - (p2 - 1.0) * c.crit_v * pow_abs(t, p2 - 2.0)
        - m.kappa() * ab * (ab - 1.0) * c.coupling * pow_abs(t, ab - 2.0)
}

/// Third derivative `ψ‴(t)`; strictly negative for `t > 0` as soon as one
/// super-quadratic coefficient is positive, because every exponent exceeds 2.
pub fn fiber_d3(c: &FiberCoefficients, m: &ModelParams, t: f64) -> f64 {
    let ab = m.alpha() + m.beta();
    let (p1, p2) = (m.crit1(), m.crit2());
    -(p1 - 1.0) * (p1 - 2.0) * c.crit_u * pow_abs(t, p1 - 3.0)
        - (p2 - 1.0) * (p2 - 2.0) * c.crit_v * pow_abs(t, p2 - 3.0)
        - m.kappa() * ab * (ab - 1.0) * (ab - 2.0) * c.coupling * pow_abs(t, ab - 3.0)
}

/// Result of projecting a state onto the constraint manifold along its ray.
#[derive(Debug, Clone)]
pub struct Projection {
    /// The positive root of `ψ′`.
    pub eta: f64,
    /// `η·p`, which satisfies `Φ = 0` to rounding.
    pub scaled: Pair,
    /// `ψ″(η)`; strictly negative (the ray crosses a maximum).
    pub psi_second: f64,
    /// Fiber coefficients of the *input* state (scale by η-powers to get the
    /// coefficients of `scaled`).
    pub fiber: FiberCoefficients,
}

/// Projects `p ≠ 0` onto the manifold by solving `ψ′(η) = 0`, `η > 0`.
///
/// `ψ′(t)/t` is strictly decreasing from `‖p‖²_D` to `−∞`, so the root is
/// unique; it is bracketed by doubling/halving from `t = 1` and polished by
/// Newton steps kept inside the bracket (bisection as fallback). Terminates
/// when `|ψ′(η)| ≤ 1e−12·‖p‖²_D·min(η, 1)`, which makes the relative
/// constraint defect of the scaled pair at most 1e−12.
pub fn project_to_nehari(grid: &Grid2D, m: &ModelParams, h: &Field, p: &Pair) -> Result<Projection> {
    let c = fiber_coefficients(grid, m, h, p)?;
    let eta = fiber_root(&c, m)?;
    Ok(Projection {
        eta,
        scaled: p.scaled(eta),
        psi_second: fiber_d2(&c, m, eta),
        fiber: c,
    })
}

/// Root of `ψ′` from precomputed coefficients.
pub fn fiber_root(c: &FiberCoefficients, m: &ModelParams) -> Result<f64> {
    let a1 = c.quad();
    let super_quadratic =
        c.crit_u + c.crit_v + m.kappa() * (m.alpha() + m.beta()) * c.coupling;
    if !(a1 > 0.0) {
        return Err(Error::NoProjection);
    }
    if !(super_quadratic > 0.0) {
        return Err(Error::NoProjection);
    }
    // g(t) = ψ′(t)/t = a1 − crit_u·t^{p1−2} − crit_v·t^{p2−2} − κ(α+β)·coupling·t^{α+β−2}
    let ab = m.alpha() + m.beta();
    let kc = m.kappa() * ab * c.coupling;
    let (e1, e2, e3) = (m.crit1() - 2.0, m.crit2() - 2.0, ab - 2.0);
    let g = |t: f64| -> f64 {
        a1 - c.crit_u * pow_abs(t, e1) - c.crit_v * pow_abs(t, e2) - kc * pow_abs(t, e3)
    };
    let dg = |t: f64| -> f64 {
        -e1 * c.crit_u * pow_abs(t, e1 - 1.0)
            - e2 * c.crit_v * pow_abs(t, e2 - 1.0)
            - e3 * kc * pow_abs(t, e3 - 1.0)
    };
    // Bracket the root.
    let (mut lo, mut hi);
    if g(1.0) >= 0.0 {
        lo = 1.0;
        hi = 2.0;
        let mut guard = 0;
        while g(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            guard += 1;
            if guard > 600 {
                return Err(Error::Diverged(
                    "fiber projection bracket grew without bound".into(),
                ));
            }
        }
    } else {
        hi = 1.0;
        lo = 0.5;
        let mut guard = 0;
        while g(lo) < 0.0 {
            hi = lo;
            lo *= 0.5;
            guard += 1;
            if guard > 600 {
                return Err(Error::Diverged(
                    "fiber projection bracket shrank to zero".into(),
                ));
            }
        }
    }
    // Safeguarded Newton on g.
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let gt = g(t);
        if gt.abs() <= 1e-12 * a1 / t.max(1.0) {
            return Ok(t);
        }
        if gt > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let d = dg(t);
        let mut next = if d < 0.0 { t - gt / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= f64::EPSILON * t {
            return Ok(next);
        }
        t = next;
    }
    Ok(t)
}

/// The three equivalent on-manifold energy expressions. Inputs must satisfy
/// the constraint (relative defect below 1e-6), since two of the forms use it
/// to eliminate terms.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct NehariForms {
    /// The definition `½‖p‖² − Σ crit/p_i − κ·coupling`.
    pub from_definition: f64,
    /// `s1/(1+s1)·crit_u + s2/(1+s2)·crit_v + κ(α+β−2)/2·coupling`.
    pub from_critical_norms: f64,
    /// `(½ − 1/(α+β))‖p‖² + (1/(α+β) − 1/p1)·crit_u + (1/(α+β) − 1/p2)·crit_v`.
    pub from_exponent_gaps: f64,
}

/// Evaluates all three on-manifold forms of the energy.
pub fn energy_on_nehari_forms(
    grid: &Grid2D,
    m: &ModelParams,
    h: &Field,
    p: &Pair,
) -> Result<NehariForms> {
    let c = fiber_coefficients(grid, m, h, p)?;
    let phi = nehari_from_fiber(&c, m);
    if !(phi.abs() <= 1e-6 * c.quad()) {
        return Err(Error::InvalidParam(format!(
            "pair is not on the constraint manifold (relative defect {:.3e})",
            phi.abs() / c.quad()
        )));
    }
    let ab = m.alpha() + m.beta();
    let (s1, s2) = (m.s1(), m.s2());
    let from_definition = energy_from_fiber(&c, m, 1.0).total;
    let from_critical_norms = s1 / (1.0 + s1) * c.crit_u
        + s2 / (1.0 + s2) * c.crit_v
        + m.kappa() * (ab - 2.0) / 2.0 * c.coupling;
    let from_exponent_gaps = (0.5 - 1.0 / ab) * c.quad()
        + (1.0 / ab - 1.0 / m.crit1()) * c.crit_u
        + (1.0 / ab - 1.0 / m.crit2()) * c.crit_v;
    Ok(NehariForms {
        from_definition,
        from_critical_norms,
        from_exponent_gaps,
    })
}
