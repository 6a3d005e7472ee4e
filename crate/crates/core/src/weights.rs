//! Coupling weights `h(x, y)` and their hypothesis validators.
//!
//! The coupling term of the energy is `κ ∫ h |u|^α |v|^β`, and the admissible
//! weights fall into a small closed-form family plus a tabulated escape hatch:
//!
//! * `Constant(c)` — `h ≡ c`;
//! * `CompactBump` — `exp(−1/(1 − r²))` inside the unit disk, zero outside;
//! * `InverseExponential` — `exp(1/(1 + r²))`;
//! * `AnnularGaussian { a }` — `r²·exp(−a r²)`, the canonical weight that
//!   vanishes at the origin, peaks on the ring `r = 1/√a` and decays;
//! * `Tabulated` — grid samples with bilinear interpolation.
//!
//! Closed forms carry analytic gradients; the tabulated kind differentiates
//! its interpolant by centered differences with step `1e-5·min(dx, dy)`.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};

/// A coupling weight with pointwise evaluation and gradient.
#[derive(Debug, Clone)]
pub enum Weight {
    /// `h ≡ c` with `c ≥ 0`.
    Constant(f64),
    /// `exp(−1/(1 − r²))` for `r < 1`, zero outside the closed unit disk.
    CompactBump,
    /// `exp(1/(1 + r²))`: equals `e` at the origin and tends to 1 at infinity
    /// (it does *not* decay to zero).
    InverseExponential,
    /// `r² exp(−a r²)` with `a > 0`: zero at the origin, maximum `1/(a e)` on
    /// the ring `r = 1/√a`.
    AnnularGaussian { a: f64 },
    /// Samples on their own grid, bilinearly interpolated with periodic wrap.
    Tabulated(TabulatedWeight),
}

/// Grid-sampled weight data for [`Weight::Tabulated`].
#[derive(Debug, Clone)]
pub struct TabulatedWeight {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    values: Vec<f64>,
}

impl TabulatedWeight {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != nx * ny {
            return Err(Error::DimensionMismatch(format!(
                "tabulated weight: {} values for a {}x{} table",
                values.len(),
                nx,
                ny
            )));
        }
        if nx < 2 || ny < 2 || !(lx > 0.0) || !(ly > 0.0) {
            return Err(Error::InvalidParam(
                "tabulated weight needs at least a 2x2 table on a positive box".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tabulated weight values".into()));
        }
        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            values,
        })
    }

    /// Sample count of the table in `x`.
    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Sample count of the table in `y`.
    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Box width of the table in `x`.
    pub fn lx(&self) -> f64 {
        self.lx
    }

    /// Box width of the table in `y`.
    pub fn ly(&self) -> f64 {
        self.ly
    }

    /// Bilinear interpolation with the same centered-box convention as
    /// [`Grid2D`] and periodic wrap beyond the edges.
    fn eval(&self, x: f64, y: f64) -> f64 {
        let dx = self.lx / self.nx as f64;
        let dy = self.ly / self.ny as f64;
        let fx = x / dx + (self.nx / 2) as f64;
        let fy = y / dy + (self.ny / 2) as f64;
        let ix = fx.floor();
        let iy = fy.floor();
        let tx = fx - ix;
        let ty = fy - iy;
        let wrap = |i: f64, n: usize| -> usize {
            let m = (i as i64).rem_euclid(n as i64);
            m as usize
        };
        let i0 = wrap(ix, self.nx);
        let i1 = (i0 + 1) % self.nx;
        let j0 = wrap(iy, self.ny);
        let j1 = (j0 + 1) % self.ny;
        let v = |i: usize, j: usize| self.values[i * self.ny + j];
        (1.0 - tx) * (1.0 - ty) * v(i0, j0)
            + tx * (1.0 - ty) * v(i1, j0)
            + (1.0 - tx) * ty * v(i0, j1)
            + tx * ty * v(i1, j1)
    }
}

impl Weight {
    /// Constructs a constant weight, validating non-negativity.
    pub fn constant(c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidParam(format!(
                "constant weight must be finite and ≥ 0, got {c}"
            )));
        }
        Ok(Weight::Constant(c))
    }

    /// Constructs the annular weight, validating `a > 0`.
    pub fn annular_gaussian(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParam(format!(
                "annular-gaussian parameter must be positive, got a = {a}"
            )));
        }
        Ok(Weight::AnnularGaussian { a })
    }

    /// Pointwise value `h(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Weight::Constant(c) => *c,
            Weight::CompactBump => {
                let r2 = x * x + y * y;
                if r2 < 1.0 {
                    (-1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            }
            Weight::InverseExponential => (1.0 / (1.0 + x * x + y * y)).exp(),
            Weight::AnnularGaussian { a } => {
                let r2 = x * x + y * y;
                r2 * (-a * r2).exp()
            }
            Weight::Tabulated(t) => t.eval(x, y),
        }
    }

    /// Pointwise gradient `(∂x h, ∂y h)`. Closed forms are analytic; the
    /// tabulated kind differentiates its interpolant by centered differences.
    pub fn grad(&self, x: f64, y: f64) -> (f64, f64) {
        match self {
            Weight::Constant(_) => (0.0, 0.0),
            Weight::CompactBump => {
                let r2 = x * x + y * y;
                if r2 < 1.0 {
                    let g = 1.0 - r2;
                    let h = (-1.0 / g).exp();
                    let factor = -2.0 * h / (g * g);
                    (factor * x, factor * y)
                } else {
                    (0.0, 0.0)
                }
            }
            Weight::InverseExponential => {
                let q = 1.0 + x * x + y * y;
                let h = (1.0 / q).exp();
                let factor = -2.0 * h / (q * q);
                (factor * x, factor * y)
            }
            Weight::AnnularGaussian { a } => {
                let r2 = x * x + y * y;
                let e = (-a * r2).exp();
                let factor = 2.0 * e * (1.0 - a * r2);
                (factor * x, factor * y)
            }
            Weight::Tabulated(t) => {
                let step = 1e-5 * (t.lx / t.nx as f64).min(t.ly / t.ny as f64);
                (
                    (t.eval(x + step, y) - t.eval(x - step, y)) / (2.0 * step),
                    (t.eval(x, y + step) - t.eval(x, y - step)) / (2.0 * step),
                )
            }
        }
    }

    /// Samples the weight on a grid.
    pub fn sample(&self, grid: &Grid2D) -> Field {
        grid.field_from_fn(|x, y| self.eval(x, y))
    }

    /// Samples the gradient components on a grid.
    pub fn sample_grad(&self, grid: &Grid2D) -> (Field, Field) {
        let mut hx = grid.zeros();
        let mut hy = grid.zeros();
        for ix in 0..grid.nx() {
            for iy in 0..grid.ny() {
                let (gx, gy) = self.grad(grid.x(ix), grid.y(iy));
                hx.set(ix, iy, gx);
                hy.set(ix, iy, gy);
            }
        }
        (hx, hy)
    }
}

/// Checks the baseline admissibility of a weight on a grid: non-negative,
/// finite, with positive finite integral and finite supremum.
pub fn validate_baseline(h: &Weight, grid: &Grid2D) -> Result<()> {
    let f = h.sample(grid);
    if !f.is_finite() {
        return Err(Error::NonFinite("weight samples".into()));
    }
    if f.values().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParam(
            "weight must be non-negative everywhere".into(),
        ));
    }
    let integral = grid.integrate(&f)?;
    if !(integral > 0.0 && integral.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "weight must have positive finite integral, got {integral}"
        )));
    }
    Ok(())
}

/// Checks the stronger structural hypothesis used by the existence theory:
/// baseline admissibility plus `h(0, 0) = 0` and decay at the box boundary.
pub fn validate_vanishing_center(h: &Weight, grid: &Grid2D) -> Result<()> {
    validate_baseline(h, grid)?;
    let f = h.sample(grid);
    let hmax = grid.max_abs(&f).max(f64::MIN_POSITIVE);
    let center = h.eval(0.0, 0.0);
    if !(center.abs() <= 1e-12 * hmax) {
        return Err(Error::InvalidParam(format!(
            "weight must vanish at the origin; h(0,0) = {center:.6e} (max {hmax:.6e})"
        )));
    }
    let ring = grid.boundary_ring_max(&f, 0.0);
    if !(ring <= 1e-8 * hmax) {
        return Err(Error::InvalidParam(format!(
            "weight must decay at the box boundary; ring max = {ring:.6e} (max {hmax:.6e})"
        )));
    }
    Ok(())
}

/// Outcome of the monotonicity sign check `κ·x·∂x h ≤ 0` and `κ·y·∂y h ≤ 0`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SignReport {
    /// Largest value of `κ·x·∂x h` over the grid (≤ 0 means the hypothesis
    /// holds in x).
    pub worst_x: f64,
    /// Largest value of `κ·y·∂y h` over the grid.
    pub worst_y: f64,
    /// True when both worst cases stay below the tolerance.
    pub holds: bool,
}

/// Evaluates the radial monotonicity hypothesis `κ x ∂x h ≤ 0`, `κ y ∂y h ≤ 0`
/// on every node. `kappa` may take either sign here; this is the one
/// diagnostic where a negative coupling is meaningful.
pub fn radial_hypothesis_sign(h: &Weight, grid: &Grid2D, kappa: f64) -> SignReport {
    let mut worst_x = f64::NEG_INFINITY;
    let mut worst_y = f64::NEG_INFINITY;
    let mut scale = 0.0f64;
    for ix in 0..grid.nx() {
        let x = grid.x(ix);
        for iy in 0..grid.ny() {
            let y = grid.y(iy);
            let (gx, gy) = h.grad(x, y);
            worst_x = worst_x.max(kappa * x * gx);
            worst_y = worst_y.max(kappa * y * gy);
            scale = scale.max((kappa * x * gx).abs()).max((kappa * y * gy).abs());
        }
    }
    let tol = 1e-12 * scale.max(1.0);
    SignReport {
        worst_x,
        worst_y,
        holds: worst_x <= tol && worst_y <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid2D {
        Grid2D::new(64, 64, 40.0, 40.0).unwrap()
    }

    #[test]
    fn bump_matches_closed_form_points() {
        let h = Weight::CompactBump;
        assert_eq!(h.eval(2.0, 0.0), 0.0);
        assert_eq!(h.eval(0.7, 0.8), 0.0); // r > 1
        assert!((h.eval(0.0, 0.0) - (-1.0f64).exp()).abs() < 1e-15);
        let r2: f64 = 0.25;
        let expect = (-1.0 / (1.0 - r2)).exp();
        assert!((h.eval(0.5, 0.0) - expect).abs() < 1e-15);
    }

    #[test]
    fn inverse_exponential_limits() {
        let h = Weight::InverseExponential;
        assert!((h.eval(0.0, 0.0) - std::f64::consts::E).abs() < 1e-15);
        assert!((h.eval(1000.0, 0.0) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn annular_gaussian_peaks_on_unit_ring() {
        let a = 1.7;
        let h = Weight::annular_gaussian(a).unwrap();
        assert_eq!(h.eval(0.0, 0.0), 0.0);
        let rpeak = a.sqrt().recip();
        let peak = h.eval(rpeak, 0.0);
        assert!((peak - 1.0 / (a * std::f64::consts::E)).abs() < 1e-14);
        // Gradient vanishes on the peak ring.
        let (gx, gy) = h.grad(rpeak, 0.0);
        assert!(gx.abs() < 1e-12 && gy.abs() < 1e-12);
    }

    #[test]
    fn closed_form_gradients_match_finite_differences() {
        let cases: Vec<Weight> = vec![
            Weight::CompactBump,
            Weight::InverseExponential,
            Weight::annular_gaussian(0.8).unwrap(),
        ];
        let pts = [(0.3, -0.4), (0.05, 0.1), (1.4, 0.9), (-2.0, 1.5)];
        let eps = 1e-6;
        for w in &cases {
            for &(x, y) in &pts {
                let (gx, gy) = w.grad(x, y);
                let fdx = (w.eval(x + eps, y) - w.eval(x - eps, y)) / (2.0 * eps);
                let fdy = (w.eval(x, y + eps) - w.eval(x, y - eps)) / (2.0 * eps);
                assert!(
                    (gx - fdx).abs() < 1e-7 * (1.0 + gx.abs()),
                    "{w:?} ∂x at ({x},{y}): {gx} vs {fdx}"
                );
                assert!(
                    (gy - fdy).abs() < 1e-7 * (1.0 + gy.abs()),
                    "{w:?} ∂y at ({x},{y}): {gy} vs {fdy}"
                );
            }
        }
    }

    #[test]
    fn baseline_validation_accepts_and_rejects() {
        let g = grid();
        assert!(validate_baseline(&Weight::CompactBump, &g).is_ok());
        assert!(validate_baseline(&Weight::constant(1.0).unwrap(), &g).is_ok());
        assert!(validate_baseline(&Weight::constant(0.0).unwrap(), &g).is_err()); // zero integral
        let t = TabulatedWeight::new(2, 2, 1.0, 1.0, vec![1.0, -0.5, 0.2, 0.3]).unwrap();
        assert!(validate_baseline(&Weight::Tabulated(t), &g).is_err()); // negative value
    }

    #[test]
    fn vanishing_center_hypothesis_selects_the_annular_weight() {
        let g = grid();
        assert!(validate_vanishing_center(&Weight::annular_gaussian(1.0).unwrap(), &g).is_ok());
        // The bump is positive at the origin.
        assert!(validate_vanishing_center(&Weight::CompactBump, &g).is_err());
        // The inverse exponential does not decay at the boundary.
        assert!(validate_vanishing_center(&Weight::InverseExponential, &g).is_err());
        // A positive constant fails both.
        assert!(validate_vanishing_center(&Weight::constant(2.0).unwrap(), &g).is_err());
    }

    #[test]
    fn sign_hypothesis_distinguishes_the_families() {
        let g = grid();
        // Decaying families: x·∂x h ≤ 0 everywhere, so κ > 0 passes.
        assert!(radial_hypothesis_sign(&Weight::CompactBump, &g, 1.0).holds);
        assert!(radial_hypothesis_sign(&Weight::InverseExponential, &g, 1.0).holds);
        assert!(radial_hypothesis_sign(&Weight::constant(3.0).unwrap(), &g, -4.0).holds);
        // The annular weight increases on r < 1/√a, so κ > 0 fails…
        let ann = Weight::annular_gaussian(1.0).unwrap();
        assert!(!radial_hypothesis_sign(&ann, &g, 1.0).holds);
        // …and κ < 0 fails on the outer part.
        assert!(!radial_hypothesis_sign(&ann, &g, -1.0).holds);
    }

    #[test]
    fn tabulated_interpolates_and_differentiates_smooth_samples() {
        // Tabulate the annular weight at two resolutions. Bilinear values are
        // second-order accurate; bilinear *derivatives* are only first-order,
        // so the gradient check is a convergence-order oracle (halving the
        // spacing must roughly halve the error) plus a loose absolute bound.
        let (lx, ly) = (20.0, 20.0);
        let exact = Weight::annular_gaussian(1.0).unwrap();
        let probes = [(0.33, -0.71), (1.2, 0.4), (-2.3, 1.9)];
        let grad_err = |n: usize| -> f64 {
            let mut values = Vec::with_capacity(n * n);
            for i in 0..n {
                let x = (i as f64 - (n / 2) as f64) * (lx / n as f64);
                for j in 0..n {
                    let y = (j as f64 - (n / 2) as f64) * (ly / n as f64);
                    values.push(exact.eval(x, y));
                }
            }
            let tab = Weight::Tabulated(TabulatedWeight::new(n, n, lx, ly, values).unwrap());
            let mut worst = 0.0f64;
            for &(x, y) in &probes {
                assert!(
                    (tab.eval(x, y) - exact.eval(x, y)).abs() < 2e-3,
                    "value at ({x},{y}) off by more than second-order room"
                );
                let (gx, gy) = tab.grad(x, y);
                let (ex, ey) = exact.grad(x, y);
                worst = worst.max((gx - ex).abs()).max((gy - ey).abs());
            }
            worst
        };
        let coarse = grad_err(256);
        let fine = grad_err(512);
        assert!(coarse < 0.1, "coarse gradient error {coarse}");
        assert!(
            fine < 0.65 * coarse,
            "gradient error not first-order: {coarse} → {fine}"
        );
    }
}
