//! The operator self-check battery behind `verify-operators`.
//!
//! Each check compares the spectral implementation against an independent
//! witness: exact eigenfunctions of the diagonalized symbol, the real-space
//! pairing that must equal the Fourier quadratic form, the singular-integral
//! quadrature of the seminorm, and the closed Γ-function formula for the
//! normalizing constant. Tolerances are the battery's own acceptance gates.

use mixed_schrodinger::analysis::random_smooth_field;
use mixed_schrodinger::operators::{
    frac_form, gagliardo_seminorm_sq, inv_mixed_operator, mixed_operator, normalizing_constant,
    sobolev_norm_sq,
};
use mixed_schrodinger::{Field, Grid2D};

use crate::artifacts::CheckRow;
use crate::error::{Error, Result};

const ORDERS: [f64; 3] = [0.25, 0.5, 0.75];

fn ml2(grid: &Grid2D, f: &Field) -> Result<f64> {
    grid.l2_norm_sq(f).map_err(Error::module("spectral-core"))
}

/// Pure `y`-modes are exact eigenfunctions of the fractional derivative with
/// eigenvalue `|k₂|^{2s}`; worst relative L² defect over 20 modes (fewer on
/// very coarse grids) × 3 orders.
fn eigenfunction_check(grid: &Grid2D) -> Result<CheckRow> {
    let modes = 20.min(grid.ny() / 2 - 1);
    let mut worst = 0.0f64;
    for &s in &ORDERS {
        for m in 1..=modes {
            let k = grid.k2()[m];
            let f = grid.field_from_fn(|_, y| (k * y).cos());
            let lf = mixed_schrodinger::operators::frac_laplacian_y(grid, &f, s)
                .map_err(Error::module("spectral-core"))?;
            let lam = k.abs().powf(2.0 * s);
            let mut defect = lf.clone();
            defect.axpy(-lam, &f).map_err(Error::module("spectral-core"))?;
            let rel = (ml2(grid, &defect)? / ml2(grid, &f)?).sqrt() / lam;
            worst = worst.max(rel);
        }
    }
    Ok(row("eigenfunction-symbol", worst, 1e-10))
}

/// `⟨Lf, f⟩_{L²}` computed through the inverse transform must equal the
/// Fourier quadratic form `‖f‖²_H` — the discrete Parseval identity.
fn parseval_check(grid: &Grid2D, seed: u64) -> Result<CheckRow> {
    let mut worst = 0.0f64;
    for i in 0..5 {
        let f = random_smooth_field(grid, seed, i);
        for &s in &ORDERS {
            let lf = mixed_operator(grid, &f, s).map_err(Error::module("spectral-core"))?;
            let pairing = grid.inner(&lf, &f).map_err(Error::module("spectral-core"))?;
            let form = sobolev_norm_sq(grid, &f, s).map_err(Error::module("spectral-core"))?;
            worst = worst.max((pairing - form).abs() / form);
        }
    }
    Ok(row("parseval-pairing", worst, 1e-10))
}

/// `L⁻¹L` must be the identity to rounding.
fn inverse_check(grid: &Grid2D, seed: u64) -> Result<CheckRow> {
    let mut worst = 0.0f64;
    for i in 0..5 {
        let f = random_smooth_field(grid, seed, i);
        for &s in &ORDERS {
            let lf = mixed_operator(grid, &f, s).map_err(Error::module("spectral-core"))?;
            let back = inv_mixed_operator(grid, &lf, s).map_err(Error::module("spectral-core"))?;
            let mut defect = back;
            defect.axpy(-1.0, &f).map_err(Error::module("spectral-core"))?;
            worst = worst.max((ml2(grid, &defect)? / ml2(grid, &f)?).sqrt());
        }
    }
    Ok(row("inverse-roundtrip", worst, 1e-12))
}

/// The Fourier seminorm must agree with the independent singular-integral
/// quadrature on a compactly supported bump (the quadrature carries its own
/// discretization error, hence the percent-level gate).
fn seminorm_quadrature_check(grid: &Grid2D) -> Result<CheckRow> {
    let r0 = 0.37 * grid.lx().min(grid.ly());
    let bump = grid.field_from_fn(|x, y| {
        let q = (x * x + y * y) / (r0 * r0);
        if q < 1.0 {
            (-1.0 / (1.0 - q)).exp()
        } else {
            0.0
        }
    });
    let mut worst = 0.0f64;
    for &s in &ORDERS {
        let spectral = frac_form(grid, &bump, s).map_err(Error::module("spectral-core"))?;
        let quad = gagliardo_seminorm_sq(grid, &bump, s).map_err(Error::module("spectral-core"))?;
        worst = worst.max((spectral - quad).abs() / spectral);
    }
    Ok(row("seminorm-quadrature", worst, 5e-2))
}

/// The quadrature value of the normalizing constant against the closed
/// Γ-function formula `s·4^s·Γ(1/2+s)/(√π·Γ(1−s))`.
fn constant_check() -> Result<CheckRow> {
    use statrs::function::gamma::gamma;
    let mut worst = 0.0f64;
    for &s in &ORDERS {
        let q = normalizing_constant(s).map_err(Error::module("spectral-core"))?;
        let closed =
            s * f64::powf(4.0, s) * gamma(0.5 + s) / (std::f64::consts::PI.sqrt() * gamma(1.0 - s));
        worst = worst.max((q - closed).abs() / closed);
    }
    Ok(row("normalizing-constant", worst, 1e-8))
}

fn row(name: &str, worst: f64, tolerance: f64) -> CheckRow {
    CheckRow {
        name: name.to_string(),
        worst,
        tolerance,
        pass: worst.is_finite() && worst <= tolerance,
    }
}

/// Runs the full battery on one grid. Checks never abort each other; a
/// library error inside a check is surfaced as the command's failure.
pub fn operator_battery(grid: &Grid2D, seed: u64) -> Result<Vec<CheckRow>> {
    Ok(vec![
        eigenfunction_check(grid)?,
        parseval_check(grid, seed)?,
        inverse_check(grid, seed)?,
        seminorm_quadrature_check(grid)?,
        constant_check()?,
    ])
}
