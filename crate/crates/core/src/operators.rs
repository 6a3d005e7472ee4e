//! Spectral operators of the mixed local/nonlocal Hamiltonian and their
//! real-space cross-checks.
//!
//! All operators are diagonal in the Fourier basis of [`Grid2D`]: the negative
//! second x-derivative acts as `k1²`, the fractional y-Laplacian of order
//! `s ∈ (0, 1)` as `|k2|^{2s}`, and the full positive operator as
//! `1 + k1² + |k2|^{2s}`. The Nyquist column participates in every quadratic
//! symbol with its positive magnitude; the antisymmetric first-derivative
//! symbol `i·k1` zeroes it so derivatives of real fields stay real.
//!
//! Two quadrature routines provide definitions that do not pass through the
//! Fourier basis at all: the singular-kernel normalization constant and the
//! double-integral form of the fractional seminorm. They exist so the
//! spectral implementation can be checked against an independent route.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D, SpectralField};
use crate::util::{gauss_legendre, neumaier_sum};

/// Validates a fractional order.
pub fn check_order(s: f64) -> Result<()> {
    if !(s.is_finite() && 0.0 < s && s < 1.0) {
        return Err(Error::InvalidParam(format!(
            "fractional order s = {s}; required 0 < s < 1"
        )));
    }
    Ok(())
}

/// First x-derivative (`i·k1` symbol, Nyquist zeroed to keep outputs real).
pub fn dx(grid: &Grid2D, f: &Field) -> Result<Field> {
    let spec = grid.forward(f)?;
    let nyquist = grid.k1()[grid.nx() / 2];
    let damped = grid.apply_symbol(&spec, |k1, _| if k1 == nyquist { 0.0 } else { k1 })?;
    // Multiply by i: (re, im) → (−im, re). `apply_symbol` only scales by real
    // factors, so the rotation happens here.
    let coeffs: Vec<Complex64> = damped
        .coeffs()
        .iter()
        .map(|c| Complex64::new(-c.im, c.re))
        .collect();
    grid.inverse(&SpectralField::from_raw(grid.nx(), grid.ny(), coeffs))
}

/// Negative second x-derivative `−∂²/∂x²` (symbol `k1²`), the local kinetic
/// term of the Hamiltonian.
pub fn neg_dxx(grid: &Grid2D, f: &Field) -> Result<Field> {
    let spec = grid.forward(f)?;
    grid.inverse(&grid.apply_symbol(&spec, |k1, _| k1 * k1)?)
}

/// Fractional y-Laplacian of order `s` (symbol `|k2|^{2s}`).
pub fn frac_laplacian_y(grid: &Grid2D, f: &Field, s: f64) -> Result<Field> {
    check_order(s)?;
    let spec = grid.forward(f)?;
    grid.inverse(&grid.apply_symbol(&spec, |_, k2| k2.abs().powf(2.0 * s))?)
}

/// Full positive operator `u − u_xx + (−Δ_y)^s u` (symbol `1 + k1² + |k2|^{2s}`).
pub fn mixed_operator(grid: &Grid2D, f: &Field, s: f64) -> Result<Field> {
    check_order(s)?;
    let spec = grid.forward(f)?;
    grid.inverse(&grid.apply_symbol(&spec, |k1, k2| mixed_symbol(k1, k2, s))?)
}

/// Inverse of the full operator; the natural preconditioner for gradient
/// iterations in the anisotropic Sobolev metric.
pub fn inv_mixed_operator(grid: &Grid2D, f: &Field, s: f64) -> Result<Field> {
    check_order(s)?;
    let spec = grid.forward(f)?;
    grid.inverse(&grid.apply_symbol(&spec, |k1, k2| 1.0 / mixed_symbol(k1, k2, s))?)
}

/// The Fourier symbol `1 + k1² + |k2|^{2s}` of the full operator.
pub fn mixed_symbol(k1: f64, k2: f64, s: f64) -> f64 {
    1.0 + k1 * k1 + k2.abs().powf(2.0 * s)
}

/// Squared anisotropic Sobolev norm
/// `‖f‖² = ∫ f² + ∫ |∂x f|² + ∫ |(−Δ_y)^{s/2} f|²`,
/// evaluated as the Parseval sum of the full symbol.
pub fn sobolev_norm_sq(grid: &Grid2D, f: &Field, s: f64) -> Result<f64> {
    check_order(s)?;
    let spec = grid.forward(f)?;
    sobolev_norm_sq_spec(grid, &spec, s)
}

/// Same norm evaluated from an already-computed spectrum.
pub fn sobolev_norm_sq_spec(grid: &Grid2D, spec: &SpectralField, s: f64) -> Result<f64> {
    check_order(s)?;
    grid.spectral_quadratic_form(spec, |k1, k2| mixed_symbol(k1, k2, s))
}

/// `∫ |∂x f|²` via the `k1²` symbol.
pub fn dxx_form(grid: &Grid2D, f: &Field) -> Result<f64> {
    let spec = grid.forward(f)?;
    grid.spectral_quadratic_form(&spec, |k1, _| k1 * k1)
}

/// `∫ |(−Δ_y)^{s/2} f|²` via the `|k2|^{2s}` symbol.
pub fn frac_form(grid: &Grid2D, f: &Field, s: f64) -> Result<f64> {
    check_order(s)?;
    let spec = grid.forward(f)?;
    grid.spectral_quadratic_form(&spec, |_, k2| k2.abs().powf(2.0 * s))
}

/// Normalization constant of the one-dimensional fractional Laplacian,
/// `C(s) = ( ∫_ℝ (1 − cos ζ)/|ζ|^{1+2s} dζ )^{-1}`,
/// evaluated by composite quadrature with analytic series and tail pieces.
///
/// The quadrature is authoritative; it is verified internally by refining all
/// cut-offs and demanding agreement to 1e-10 relative
/// ([`Error::QuadratureDiverged`] escapes otherwise).
pub fn normalizing_constant(s: f64) -> Result<f64> {
    check_order(s)?;
    let coarse = kernel_integral(s, 0.5, 100.0, 10);
    let fine = kernel_integral(s, 0.25, 200.0, 12);
    let rel = (coarse - fine).abs() / fine.abs();
    if !(rel < 1e-10) {
        return Err(Error::QuadratureDiverged(rel));
    }
    Ok(1.0 / fine)
}

/// `∫_ℝ (1 − cos ζ)/|ζ|^{1+2s} dζ` with a Taylor series on `[0, eps]`,
/// composite Gauss–Legendre on `[eps, big]` and an integration-by-parts
/// asymptotic tail beyond `big`.
fn kernel_integral(s: f64, eps: f64, big: f64, tail_terms: usize) -> f64 {
    // Series piece: 1 − cos ζ = Σ_{m≥1} (−1)^{m+1} ζ^{2m}/(2m)!.
    let mut series = 0.0;
    let mut sign = 1.0;
    let mut fact = 2.0; // (2m)! at m = 1
    let mut m = 1usize;
    loop {
        let expo = 2.0 * m as f64 - 2.0 * s;
        let term = sign * eps.powf(expo) / (fact * expo);
        series += term;
        if term.abs() < 1e-18 * series.abs().max(1e-30) || m > 40 {
            break;
        }
        m += 1;
        sign = -sign;
        fact *= (2 * m - 1) as f64 * (2 * m) as f64;
    }

    // Oscillatory middle piece: panels no wider than ~π/2 keep the 20-point
    // Gauss rule at machine accuracy.
    let (nodes, weights) = gauss_legendre(20);
    let panels = ((big - eps) / (std::f64::consts::PI / 2.0)).ceil() as usize;
    let h = (big - eps) / panels as f64;
    let mut pieces = Vec::with_capacity(panels * nodes.len());
    for p in 0..panels {
        let a = eps + p as f64 * h;
        let center = a + 0.5 * h;
        for (t, w) in nodes.iter().zip(&weights) {
            let z = center + 0.5 * h * t;
            pieces.push(0.5 * h * w * (1.0 - z.cos()) / z.powf(1.0 + 2.0 * s));
        }
    }
    let middle = neumaier_sum(pieces);

    // Tail: ∫_big^∞ ζ^{−1−2s} dζ − ∫_big^∞ cos ζ · ζ^{−1−2s} dζ. The cosine
    // integral expands by repeated integration by parts,
    //   ∫_b^∞ cos ζ·ζ^{−p} = −sin b·b^{−p} + p cos b·b^{−p−1}
    //                        + p(p+1) sin b·b^{−p−2} − p(p+1)(p+2) cos b·b^{−p−3} − …
    // (sign pattern −sin, +cos, +sin, −cos repeating); each term gains a
    // factor (p+k)/b, so truncation error is far below 1e-12 here.
    let monotone_tail = big.powf(-2.0 * s) / (2.0 * s);
    let mut osc = 0.0;
    let mut coeff = 1.0;
    let mut p = 1.0 + 2.0 * s;
    for k in 0..tail_terms {
        let factor = match k % 4 {
            0 => -big.sin(),
            1 => big.cos(),
            2 => big.sin(),
            _ => -big.cos(),
        };
        osc += coeff * factor * big.powf(-(1.0 + 2.0 * s) - k as f64);
        coeff *= p;
        p += 1.0;
    }

    2.0 * (series + middle + monotone_tail - osc)
}

/// Singular kernel `Σ_{m∈ℤ} |t + m·l|^{−(1+2s)}` summed over periodic images
/// of the y-interval, evaluated for `t ∈ (0, l)`. Direct summation over
/// `|m| ≤ 8`; the remainder is an Euler–Maclaurin midpoint-rule tail whose
/// relative error is far below any tolerance used here.
fn periodized_kernel(t: f64, l: f64, s: f64) -> f64 {
    let p = 1.0 + 2.0 * s;
    let mm = 8i64;
    let mut total = 0.0;
    for m in -mm..=mm {
        total += (t + m as f64 * l).abs().powf(-p);
    }
    let edge = (mm as f64 + 0.5) * l;
    total + ((edge - t).powf(1.0 - p) + (edge + t).powf(1.0 - p)) / (l * (p - 1.0))
}

/// Double-integral (Gagliardo) form of the squared fractional seminorm,
/// `(C(s)/2) ∫∫∫ |f(x,y) − f(x,z)|² / |y−z|^{1+2s} dz dy dx`,
/// discretized by the rectangle rule with the z-integral restricted to the box
/// and the singular diagonal cell y = z skipped.
///
/// Two refinements make this an honest independent oracle for the spectral
/// (periodic-symbol) seminorm:
/// - the kernel is summed over periodic images of the box, so the quadrature
///   measures the seminorm of the same periodic extension the Fourier route
///   sees rather than of the zero extension (for fields that nearly fill the
///   box the two differ at the several-percent level);
/// - the skipped diagonal cell is restored analytically through its Taylor
///   value `Σ |∂_y f|² · 2·dy^{3−2s}/((2−2s)(3−2s))`, removing the leading
///   `O(dy^{2−2s})` truncation term.
///
/// The boundary-decay gate (outermost-ring max below `1e-6·max|f|`) keeps the
/// periodic value representative of the decaying continuum field.
pub fn gagliardo_seminorm_sq(grid: &Grid2D, f: &Field, s: f64) -> Result<f64> {
    check_order(s)?;
    require_boundary_decay(grid, f)?;
    let c = normalizing_constant(s)?;
    let (nx, ny, dy) = (grid.nx(), grid.ny(), grid.dy());
    let ly = grid.ly();
    // Kernel depends only on the index offset.
    let kern: Vec<f64> = (0..ny)
        .map(|d| {
            if d == 0 {
                0.0
            } else {
                periodized_kernel(d as f64 * dy, ly, s)
            }
        })
        .collect();
    let vals = f.values();
    let mut rows = Vec::with_capacity(nx);
    let mut deriv_sq = Vec::with_capacity(nx);
    for ix in 0..nx {
        let row = &vals[ix * ny..(ix + 1) * ny];
        let mut terms = Vec::with_capacity(ny * (ny - 1) / 2);
        for iy in 0..ny {
            let fy = row[iy];
            for iz in iy + 1..ny {
                let d = fy - row[iz];
                terms.push(d * d * kern[iz - iy]);
            }
        }
        rows.push(neumaier_sum(terms));
        // Central-difference ∂_y f on the same periodic extension, for the
        // diagonal-cell restoration below.
        let mut dsq = 0.0;
        for iy in 0..ny {
            let up = row[(iy + 1) % ny];
            let down = row[(iy + ny - 1) % ny];
            let g = (up - down) / (2.0 * dy);
            dsq += g * g;
        }
        deriv_sq.push(dsq);
    }
    // Each unordered pair was counted once; the double integral counts ordered
    // pairs, so the factor 2 cancels the 1/2 in C/2.
    let pair_sum = c * grid.dx() * dy * dy * neumaier_sum(rows);
    // Diagonal band |y−z| inside one cell: |f(y)−f(z)|² ≈ f_y²·(y−z)², and
    // ∫∫_cell |u−v|^{1−2s} du dv = 2·dy^{3−2s}/((2−2s)(3−2s)).
    let diag = c * grid.dx() * neumaier_sum(deriv_sq) * dy.powf(3.0 - 2.0 * s)
        / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s));
    Ok(pair_sum + diag)
}

/// Pointwise application of the fractional y-Laplacian through the symmetric
/// second-difference quadrature
/// `(−Δ_y)^s f(y) = −C(s) ∫_0^∞ (f(y+t) + f(y−t) − 2 f(y)) / t^{1+2s} dt`.
/// This is the bilinear-form counterpart of [`gagliardo_seminorm_sq`]: the
/// half-line integral folds onto one period with the image-summed kernel, and
/// the singular cell `t < dy/2` is restored through its Taylor value
/// `f_yy·(dy/2)^{2−2s}/(2−2s)`. Independent of the Fourier route; used to
/// cross-check it.
pub fn frac_laplacian_y_quadrature(grid: &Grid2D, f: &Field, s: f64) -> Result<Field> {
    check_order(s)?;
    require_boundary_decay(grid, f)?;
    let c = normalizing_constant(s)?;
    let (nx, ny, dy) = (grid.nx(), grid.ny(), grid.dy());
    let ly = grid.ly();
    // Folded kernel Σ_{m≥0} (t + m·ly)^{−(1+2s)} for t = d·dy ∈ (0, ly):
    // every offset t + m·ly reaches the same periodic sample as t, so the
    // half-line quadrature truncates to offsets 1..ny−1. (The cell around
    // t = ly is skipped: its integrand has a second-order zero there.)
    let mm = 8usize;
    let p = 1.0 + 2.0 * s;
    let kern: Vec<f64> = (0..ny)
        .map(|d| {
            if d == 0 {
                return 0.0;
            }
            let t = d as f64 * dy;
            let mut w = 0.0;
            for m in 0..=mm {
                w += (t + m as f64 * ly).powf(-p);
            }
            w + (t + (mm as f64 + 0.5) * ly).powf(1.0 - p) / (ly * (p - 1.0))
        })
        .collect();
    // Taylor value of the skipped singular cell ∫_0^{dy/2} ≈ f_yy·(dy/2)^{2−2s}/(2−2s).
    let near_coeff = (0.5 * dy).powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
    let vals = f.values();
    let mut out = vec![0.0; vals.len()];
    for ix in 0..nx {
        let row = &vals[ix * ny..(ix + 1) * ny];
        for iy in 0..ny {
            let fy = row[iy];
            let mut terms = Vec::with_capacity(ny - 1);
            for d in 1..ny {
                let up = row[(iy + d) % ny];
                let down = row[(iy + ny - d) % ny];
                terms.push((up + down - 2.0 * fy) * kern[d]);
            }
            let d2 = (row[(iy + 1) % ny] + row[(iy + ny - 1) % ny] - 2.0 * fy) / (dy * dy);
            let integral = dy * neumaier_sum(terms) + d2 * near_coeff;
            out[ix * ny + iy] = -c * integral;
        }
    }
    Field::from_values(nx, ny, out)
}

fn require_boundary_decay(grid: &Grid2D, f: &Field) -> Result<()> {
    let ratio = grid.boundary_ring_max(f, 0.0) / grid.max_abs(f).max(f64::MIN_POSITIVE);
    if !(ratio < 1e-6) {
        return Err(Error::BoundaryDecay { ratio, limit: 1e-6 });
    }
    Ok(())
}
