//! Uniform periodic grid on a centered rectangle and the discrete Fourier
//! calculus every operator in this crate is built on.
//!
//! Real fields are sampled at nodes `x_i = (i - nx/2)·dx`, `y_j = (j - ny/2)·dy`,
//! so the box is `[-lx/2, lx/2) × [-ly/2, ly/2)` with the origin on the grid.
//! Values are stored row-major with `x` as the slow index
//! (`index = ix·ny + iy`). Spectral coefficients follow the standard DFT
//! frequency layout `0, 1, …, n/2, −n/2+1, …, −1` scaled by `2π/l`; the
//! Nyquist column sits at its positive magnitude. The forward transform
//! carries the `1/(nx·ny)` normalization, so the constant field 1 transforms
//! to a single unit zero mode.
//!
//! Node coordinates are computed as `(i - n/2) as f64 * d` so mirror nodes get
//! exactly negated coordinates; radius values of symmetry-equivalent nodes are
//! then bit-identical, which the angular-averaging projector relies on.

use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::util::neumaier_sum;

/// Discretization of a centered rectangle with periodic topology.
///
/// Construction validates the dimension rules (`nx`, `ny` even and ≥ 8;
/// positive box lengths) and precomputes node coordinates, wavenumber tables
/// and FFT plans. Grids are cheap to share behind an [`Arc`] and all plans are
/// thread-safe.
pub struct Grid2D {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    dx: f64,
    dy: f64,
    xs: Vec<f64>,
    ys: Vec<f64>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    fft_x: Arc<dyn Fft<f64>>,
    ifft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
    ifft_y: Arc<dyn Fft<f64>>,
    radial: OnceLock<RadialClasses>,
}

impl std::fmt::Debug for Grid2D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid2D")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("lx", &self.lx)
            .field("ly", &self.ly)
            .finish()
    }
}

impl PartialEq for Grid2D {
    fn eq(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.lx == other.lx && self.ly == other.ly
    }
}

/// Partition of the node set into classes of bit-identical radius, used for
/// exact angular averaging.
pub(crate) struct RadialClasses {
    /// Class index of each node, addressed like field values.
    pub class_of: Vec<u32>,
    /// Number of nodes per class.
    pub count: Vec<u32>,
    /// Representative radius per class, ascending.
    pub radius: Vec<f64>,
}

impl Grid2D {
    /// Builds a grid. `nx`, `ny` must be even and at least 8; `lx`, `ly`
    /// positive and finite.
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {n}; grid dimensions must be even and at least 8"
                )));
            }
        }
        for (name, l) in [("lx", lx), ("ly", ly)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {l}; box lengths must be positive and finite"
                )));
            }
        }
        let dx = lx / nx as f64;
        let dy = ly / ny as f64;
        let xs = (0..nx)
            .map(|i| (i as f64 - (nx / 2) as f64) * dx)
            .collect();
        let ys = (0..ny)
            .map(|j| (j as f64 - (ny / 2) as f64) * dy)
            .collect();
        let k1 = dft_wavenumbers(nx, lx);
        let k2 = dft_wavenumbers(ny, ly);
        let mut planner = FftPlanner::new();
        let fft_x = planner.plan_fft_forward(nx);
        let ifft_x = planner.plan_fft_inverse(nx);
        let fft_y = planner.plan_fft_forward(ny);
        let ifft_y = planner.plan_fft_inverse(ny);
        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            dx,
            dy,
            xs,
            ys,
            k1,
            k2,
            fft_x,
            ifft_x,
            fft_y,
            ifft_y,
            radial: OnceLock::new(),
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dy(&self) -> f64 {
        self.dy
    }
    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    /// Area element of the rectangle rule.
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }
    /// Node coordinates.
    pub fn x(&self, ix: usize) -> f64 {
        self.xs[ix]
    }
    pub fn y(&self, iy: usize) -> f64 {
        self.ys[iy]
    }
    /// Wavenumber tables (`2π/l` × signed integer frequency, Nyquist positive).
    pub fn k1(&self) -> &[f64] {
        &self.k1
    }
    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    fn check_dims(&self, f: &Field, what: &str) -> Result<()> {
        if f.nx != self.nx || f.ny != self.ny {
            return Err(Error::DimensionMismatch(format!(
                "{what}: field is {}x{}, grid is {}x{}",
                f.nx, f.ny, self.nx, self.ny
            )));
        }
        Ok(())
    }

    fn check_spec_dims(&self, f: &SpectralField, what: &str) -> Result<()> {
        if f.nx != self.nx || f.ny != self.ny {
            return Err(Error::DimensionMismatch(format!(
                "{what}: spectral field is {}x{}, grid is {}x{}",
                f.nx, f.ny, self.nx, self.ny
            )));
        }
        Ok(())
    }

    /// Samples a function of the node coordinates.
    pub fn field_from_fn(&self, mut f: impl FnMut(f64, f64) -> f64) -> Field {
        let mut values = Vec::with_capacity(self.len());
        for &x in &self.xs {
            for &y in &self.ys {
                values.push(f(x, y));
            }
        }
        Field {
            nx: self.nx,
            ny: self.ny,
            values,
        }
    }

    /// All-zero field on this grid.
    pub fn zeros(&self) -> Field {
        Field {
            nx: self.nx,
            ny: self.ny,
            values: vec![0.0; self.len()],
        }
    }

    /// Forward DFT of a real field; carries the `1/(nx·ny)` normalization.
    pub fn forward(&self, f: &Field) -> Result<SpectralField> {
        self.check_dims(f, "forward transform")?;
        let mut buf: Vec<Complex64> = f
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.fft2_in_place(&mut buf, Direction::Forward);
        let scale = 1.0 / self.len() as f64;
        for c in &mut buf {
            *c *= scale;
        }
        Ok(SpectralField {
            nx: self.nx,
            ny: self.ny,
            coeffs: buf,
        })
    }

    /// Inverse DFT back to a real field (imaginary residue of the Hermitian
    /// spectrum is dropped; it is at rounding level for spectra produced by
    /// [`Grid2D::forward`] and real symbol multiplication).
    pub fn inverse(&self, f: &SpectralField) -> Result<Field> {
        self.check_spec_dims(f, "inverse transform")?;
        let mut buf = f.coeffs.clone();
        self.fft2_in_place(&mut buf, Direction::Inverse);
        Ok(Field {
            nx: self.nx,
            ny: self.ny,
            values: buf.iter().map(|c| c.re).collect(),
        })
    }

    fn fft2_in_place(&self, buf: &mut [Complex64], dir: Direction) {
        let (fy, fx) = match dir {
            Direction::Forward => (&self.fft_y, &self.fft_x),
            Direction::Inverse => (&self.ifft_y, &self.ifft_x),
        };
        // y lines are contiguous rows.
        let mut scratch = vec![Complex64::default(); fy.get_inplace_scratch_len()];
        for row in buf.chunks_exact_mut(self.ny) {
            fy.process_with_scratch(row, &mut scratch);
        }
        // x lines have stride ny; gather, transform, scatter.
        let mut scratch_x = vec![Complex64::default(); fx.get_inplace_scratch_len()];
        let mut col = vec![Complex64::default(); self.nx];
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                col[ix] = buf[ix * self.ny + iy];
            }
            fx.process_with_scratch(&mut col, &mut scratch_x);
            for ix in 0..self.nx {
                buf[ix * self.ny + iy] = col[ix];
            }
        }
    }

    /// Rectangle-rule integral `dx·dy·Σ f`, exact for band-limited periodic
    /// integrands and spectrally accurate for smooth decaying ones.
    pub fn integrate(&self, f: &Field) -> Result<f64> {
        self.check_dims(f, "integrate")?;
        Ok(self.cell_area() * neumaier_sum(f.values.iter().copied()))
    }

    /// `∫ f·g` by the rectangle rule.
    pub fn inner(&self, f: &Field, g: &Field) -> Result<f64> {
        self.check_dims(f, "inner product")?;
        self.check_dims(g, "inner product")?;
        Ok(self.cell_area()
            * neumaier_sum(f.values.iter().zip(&g.values).map(|(a, b)| a * b)))
    }

    /// `∫ f²` by the rectangle rule.
    pub fn l2_norm_sq(&self, f: &Field) -> Result<f64> {
        self.inner(f, f)
    }

    /// Largest |f| over all nodes.
    pub fn max_abs(&self, f: &Field) -> f64 {
        f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest |f| over the boundary band: all nodes within `frac·l/2` of the
    /// box edge in either coordinate (at least the outermost node layer).
    pub fn boundary_ring_max(&self, f: &Field, frac: f64) -> f64 {
        let bx = ((self.nx as f64 * frac / 2.0).ceil() as usize).max(1);
        let by = ((self.ny as f64 * frac / 2.0).ceil() as usize).max(1);
        let mut m = 0.0f64;
        for ix in 0..self.nx {
            let edge_x = ix < bx || ix >= self.nx - bx;
            for iy in 0..self.ny {
                if edge_x || iy < by || iy >= self.ny - by {
                    m = m.max(f.values[ix * self.ny + iy].abs());
                }
            }
        }
        m
    }

    /// Fraction of `∫ f²` carried by the outer band of relative width `frac`
    /// (e.g. `frac = 0.1` keeps the region within 10% of the half-width of
    /// either edge).
    pub fn ring_mass_fraction(&self, f: &Field, frac: f64) -> Result<f64> {
        self.check_dims(f, "ring mass")?;
        let x_in = self.lx / 2.0 * (1.0 - frac);
        let y_in = self.ly / 2.0 * (1.0 - frac);
        let mut ring = 0.0;
        let mut total = 0.0;
        for ix in 0..self.nx {
            let x = self.xs[ix];
            for iy in 0..self.ny {
                let v = f.values[ix * self.ny + iy];
                let m = v * v;
                total += m;
                if x.abs() >= x_in || self.ys[iy].abs() >= y_in {
                    ring += m;
                }
            }
        }
        if total == 0.0 {
            return Ok(0.0);
        }
        Ok(ring / total)
    }

    /// Cyclic translation by whole grid steps (`f(x, y) → f(x − sx·dx, y − sy·dy)`
    /// with periodic wrap). Used by covariance tests and the probe plumbing.
    pub fn translate(&self, f: &Field, sx: isize, sy: isize) -> Result<Field> {
        self.check_dims(f, "translate")?;
        let nx = self.nx as isize;
        let ny = self.ny as isize;
        let mut out = vec![0.0; self.len()];
        for ix in 0..nx {
            let jx = (ix - sx).rem_euclid(nx) as usize;
            for iy in 0..ny {
                let jy = (iy - sy).rem_euclid(ny) as usize;
                out[(ix as usize) * self.ny + iy as usize] = f.values[jx * self.ny + jy];
            }
        }
        Ok(Field {
            nx: self.nx,
            ny: self.ny,
            values: out,
        })
    }

    /// Per-radius-class angular averages `(r, mean of f over the class)` in
    /// ascending radius order — the radial profile of a field.
    pub fn radial_profile(&self, f: &Field) -> Result<Vec<(f64, f64)>> {
        self.check_dims(f, "radial profile")?;
        let rc = self.radial_classes();
        let mut sums = vec![0.0f64; rc.count.len()];
        for (v, &cls) in f.values.iter().zip(&rc.class_of) {
            sums[cls as usize] += v;
        }
        Ok(rc
            .radius
            .iter()
            .zip(sums.iter().zip(&rc.count))
            .map(|(&r, (&s, &c))| (r, s / c as f64))
            .collect())
    }

    pub(crate) fn radial_classes(&self) -> &RadialClasses {
        self.radial.get_or_init(|| {
            // Group nodes by the bit pattern of r² = x² + y². Mirror coordinates
            // are exactly negated, and IEEE addition is commutative, so all
            // symmetry-equivalent nodes produce identical bits.
            let mut by_key: std::collections::BTreeMap<u64, (u32, f64)> =
                std::collections::BTreeMap::new();
            for &x in &self.xs {
                for &y in &self.ys {
                    let r2 = x * x + y * y;
                    let e = by_key.entry(r2.to_bits()).or_insert((0, r2));
                    e.0 += 1;
                }
            }
            // BTreeMap on the bit pattern of non-negative doubles sorts by value.
            let mut index_of = std::collections::HashMap::with_capacity(by_key.len());
            let mut count = Vec::with_capacity(by_key.len());
            let mut radius = Vec::with_capacity(by_key.len());
            for (i, (bits, (c, r2))) in by_key.iter().enumerate() {
                index_of.insert(*bits, i as u32);
                count.push(*c);
                radius.push(r2.sqrt());
            }
            let mut class_of = Vec::with_capacity(self.len());
            for &x in &self.xs {
                for &y in &self.ys {
                    let r2 = x * x + y * y;
                    class_of.push(index_of[&r2.to_bits()]);
                }
            }
            RadialClasses {
                class_of,
                count,
                radius,
            }
        })
    }
}

enum Direction {
    Forward,
    Inverse,
}

fn dft_wavenumbers(n: usize, l: f64) -> Vec<f64> {
    let scale = 2.0 * std::f64::consts::PI / l;
    (0..n)
        .map(|i| {
            let freq = if i <= n / 2 {
                i as f64
            } else {
                i as f64 - n as f64
            };
            scale * freq
        })
        .collect()
}

/// Real scalar field sampled on a [`Grid2D`], row-major with `x` slow.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl Field {
    /// Wraps raw row-major samples; length must be `nx·ny`.
    pub fn from_values(nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != nx * ny {
            return Err(Error::DimensionMismatch(format!(
                "value buffer has length {}, expected {}x{} = {}",
                values.len(),
                nx,
                ny,
                nx * ny
            )));
        }
        Ok(Self { nx, ny, values })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.ny + iy]
    }
    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        self.values[ix * self.ny + iy] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Pointwise map into a new field.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            nx: self.nx,
            ny: self.ny,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields of identical shape.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if self.nx != other.nx || self.ny != other.ny {
            return Err(Error::DimensionMismatch(format!(
                "zip: {}x{} vs {}x{}",
                self.nx, other.nx, self.ny, other.ny
            )));
        }
        Ok(Field {
            nx: self.nx,
            ny: self.ny,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `self + c·other`, in place.
    pub fn axpy(&mut self, c: f64, other: &Field) -> Result<()> {
        if self.nx != other.nx || self.ny != other.ny {
            return Err(Error::DimensionMismatch(format!(
                "axpy: {}x{} vs {}x{}",
                self.nx, other.nx, self.ny, other.ny
            )));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn scale_in_place(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }
}

/// Complex DFT coefficients of a real field (Hermitian up to rounding),
/// laid out like the field: `index = ikx·ny + iky`.
#[derive(Debug, Clone)]
pub struct SpectralField {
    nx: usize,
    ny: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    /// Crate-internal constructor. Callers guarantee the Hermitian structure
    /// (spectra of real fields composed with real even symbols, or odd
    /// imaginary symbols with the Nyquist column zeroed).
    pub(crate) fn from_raw(nx: usize, ny: usize, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), nx * ny);
        Self { nx, ny, coeffs }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
    pub fn at(&self, ikx: usize, iky: usize) -> Complex64 {
        self.coeffs[ikx * self.ny + iky]
    }

    /// Largest deviation from Hermitian symmetry `F(-k) = conj F(k)`,
    /// relative to the largest coefficient magnitude.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self
            .coeffs
            .iter()
            .fold(0.0f64, |m, c| m.max(c.norm()))
            .max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for ikx in 0..self.nx {
            let jkx = (self.nx - ikx) % self.nx;
            for iky in 0..self.ny {
                let jky = (self.ny - iky) % self.ny;
                let d = (self.at(ikx, iky) - self.at(jkx, jky).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst / scale
    }
}

impl Grid2D {
    /// Multiplies each coefficient by a real symbol evaluated at `(k1, k2)`.
    pub fn apply_symbol(
        &self,
        f: &SpectralField,
        symbol: impl Fn(f64, f64) -> f64,
    ) -> Result<SpectralField> {
        self.check_spec_dims(f, "apply symbol")?;
        let mut coeffs = f.coeffs.clone();
        for ikx in 0..self.nx {
            let kx = self.k1[ikx];
            for iky in 0..self.ny {
                coeffs[ikx * self.ny + iky] *= symbol(kx, self.k2[iky]);
            }
        }
        Ok(SpectralField {
            nx: self.nx,
            ny: self.ny,
            coeffs,
        })
    }

    /// `lx·ly·Σ w(k)·|F(k)|²`: the Parseval form of quadratic functionals.
    pub fn spectral_quadratic_form(
        &self,
        f: &SpectralField,
        weight: impl Fn(f64, f64) -> f64,
    ) -> Result<f64> {
        self.check_spec_dims(f, "quadratic form")?;
        let mut terms = Vec::with_capacity(self.len());
        for ikx in 0..self.nx {
            let kx = self.k1[ikx];
            for iky in 0..self.ny {
                let c = f.coeffs[ikx * self.ny + iky];
                terms.push(weight(kx, self.k2[iky]) * (c.re * c.re + c.im * c.im));
            }
        }
        Ok(self.lx * self.ly * neumaier_sum(terms))
    }
}
