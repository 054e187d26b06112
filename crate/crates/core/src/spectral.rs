//! Periodic unit-interval discretization.
//!
//! Fields are sampled at `x_j = j/n` and carried alongside their Fourier
//! coefficients `f̂(k) = (1/n) Σ_j f_j e^{-2πik x_j}` for `k = 0..=n/2`
//! (the negative half follows from Hermitian symmetry). With this
//! normalization `cos(2πx)` has `f̂(1) = 1/2`.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{EpiError, Result};

/// Smallest admissible node count.
pub const MIN_NODES: usize = 16;

/// Fourier coefficient of `ln|sin(πx)|` at wavenumber `k ≥ 0`.
///
/// From `ln|sin πx| = -ln 2 - Σ_{k≥1} cos(2πkx)/k`.
pub fn log_kernel_symbol(k: usize) -> f64 {
    if k == 0 {
        -LN_2
    } else {
        -0.5 / k as f64
    }
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(planner: &mut FftPlanner<f64>, len: usize) -> Self {
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }
}

/// Uniform periodic grid on `[0, 1)` with cached transform plans.
pub struct GridSpec {
    n: usize,
    dealias_cutoff: usize,
    kernel: Vec<f64>,
    plans: Plans,
    padded: Plans,
}

impl fmt::Debug for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSpec")
            .field("n", &self.n)
            .field("dealias_cutoff", &self.dealias_cutoff)
            .finish()
    }
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.kernel == other.kernel
    }
}

impl GridSpec {
    /// Builds a grid with `n` nodes and the two-thirds dealiasing cutoff.
    pub fn new(n: usize) -> Result<Arc<Self>> {
        if n < MIN_NODES || n % 2 != 0 {
            return Err(EpiError::InvalidGrid(format!(
                "node count must be even and at least {MIN_NODES}, got {n}"
            )));
        }
        let mut planner = FftPlanner::new();
        let plans = Plans::new(&mut planner, n);
        let padded = Plans::new(&mut planner, 2 * n);
        Ok(Arc::new(Self {
            n,
            dealias_cutoff: n / 3,
            kernel: (0..=n / 2).map(log_kernel_symbol).collect(),
            plans,
            padded,
        }))
    }

    /// Copy of this grid with one log-kernel coefficient replaced.
    ///
    /// Only used to inject faults into the consistency suites.
    pub fn with_kernel_override(&self, k: usize, value: f64) -> Result<Arc<Self>> {
        if k > self.n / 2 {
            return Err(EpiError::InvalidParameter(format!(
                "kernel wavenumber {k} exceeds n/2 = {}",
                self.n / 2
            )));
        }
        let mut grid = Self::new(self.n)?;
        let g = Arc::get_mut(&mut grid).expect("freshly built grid is unique");
        g.kernel[k] = value;
        Ok(grid)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Index of the Nyquist mode, `n/2`.
    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    pub fn dealias_cutoff(&self) -> usize {
        self.dealias_cutoff
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 / self.n as f64).collect()
    }

    /// Signed wavenumbers `-n/2+1, …, n/2` in ascending order.
    pub fn wavenumbers(&self) -> Vec<i64> {
        let half = (self.n / 2) as i64;
        (-half + 1..=half).collect()
    }

    /// Log-kernel coefficients `ĝ(k)` for `k = 0..=n/2`.
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        transform_forward(&self.plans, values, self.n / 2)
    }

    pub(crate) fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        transform_inverse(&self.plans, coeffs, self.n)
    }
}

fn transform_forward(plans: &Plans, values: &[f64], keep: usize) -> Vec<Complex64> {
    let len = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plans.forward.process(&mut buf);
    let scale = 1.0 / len as f64;
    let mut out: Vec<Complex64> = buf[..=keep].iter().map(|c| c * scale).collect();
    out[0].im = 0.0;
    if keep == len / 2 {
        out[keep].im = 0.0;
    }
    out
}

/// Inverse transform of a half spectrum onto `len` nodes. Coefficients
/// beyond `len/2` must already be absent.
fn transform_inverse(plans: &Plans, coeffs: &[Complex64], len: usize) -> Vec<f64> {
    let half = len / 2;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (k, c) in coeffs.iter().enumerate().take(half + 1) {
        buf[k] = *c;
        if k != 0 && k != half {
            buf[len - k] = c.conj();
        }
    }
    plans.inverse.process(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

fn grids_match(a: &Arc<GridSpec>, b: &Arc<GridSpec>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// A real periodic field on a [`GridSpec`], with no mean constraint.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<GridSpec>,
    values: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn from_values(grid: &Arc<GridSpec>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(EpiError::InvalidParameter(format!(
                "expected {} samples, got {}",
                grid.n(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EpiError::NonFinite);
        }
        let coeffs = grid.forward(&values);
        Ok(Self {
            grid: Arc::clone(grid),
            values,
            coeffs,
        })
    }

    /// Builds the field from its half spectrum; imaginary parts of the mean
    /// and Nyquist modes are dropped.
    pub fn from_coeffs(grid: &Arc<GridSpec>, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.nyquist() + 1 {
            return Err(EpiError::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                grid.nyquist() + 1,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(EpiError::NonFinite);
        }
        coeffs[0].im = 0.0;
        let ny = grid.nyquist();
        coeffs[ny].im = 0.0;
        let values = grid.inverse(&coeffs);
        Ok(Self {
            grid: Arc::clone(grid),
            values,
            coeffs,
        })
    }

    pub fn from_fn(grid: &Arc<GridSpec>, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn constant(grid: &Arc<GridSpec>, c: f64) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.nyquist() + 1];
        coeffs[0] = Complex64::new(c, 0.0);
        Self {
            grid: Arc::clone(grid),
            values: vec![c; grid.n()],
            coeffs,
        }
    }

    pub fn zeros(grid: &Arc<GridSpec>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        grids_match(&self.grid, &other.grid)
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(EpiError::GridMismatch {
                left: self.grid.n(),
                right: other.grid.n(),
            })
        }
    }

    /// `⟨f, g⟩ = ∫_I f g`, by the rectangle rule on the nodes.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_grid(other)?;
        Ok(nodal_inner(&self.values, &other.values))
    }

    pub fn l2_norm(&self) -> f64 {
        // scaled so that tiny fields do not underflow to zero
        let m = self.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if m == 0.0 {
            return 0.0;
        }
        let scaled: Vec<f64> = self.values.iter().map(|v| v / m).collect();
        m * nodal_inner(&scaled, &scaled).sqrt()
    }

    /// Multiplies every coefficient by `symbol(k)`, `k = 0..=n/2`.
    pub fn apply_symbol(&self, symbol: impl Fn(usize) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * symbol(k))
            .collect();
        Self::from_coeffs(&self.grid, coeffs).expect("symbol preserves length")
    }

    /// Spectral derivative of order 1 through 4.
    pub fn derivative(&self, order: u32) -> Result<Self> {
        if !(1..=4).contains(&order) {
            return Err(EpiError::InvalidParameter(format!(
                "derivative order must be in 1..=4, got {order}"
            )));
        }
        let ny = self.grid.nyquist();
        Ok(self.apply_symbol(|k| derivative_symbol(k, order, ny)))
    }

    /// Periodic Hilbert transform with multiplier `-i·sgn(k)`; the mean and
    /// Nyquist modes map to zero.
    pub fn hilbert(&self) -> Self {
        let ny = self.grid.nyquist();
        self.apply_symbol(|k| {
            if k == 0 || k == ny {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -1.0)
            }
        })
    }

    /// `x ↦ ∫_I ln|sin π(x-y)| f(y) dy`.
    pub fn log_kernel_convolve(&self) -> Self {
        let kernel = self.grid.kernel().to_vec();
        self.apply_symbol(|k| Complex64::new(kernel[k], 0.0))
    }

    /// Coefficients with `k > dealias_cutoff` removed.
    pub fn masked(&self) -> Self {
        let cutoff = self.grid.dealias_cutoff();
        self.apply_symbol(|k| Complex64::new(if k <= cutoff { 1.0 } else { 0.0 }, 0.0))
    }

    /// Product of the masked inputs, formed exactly on a 2n zero-padded grid
    /// and masked again.
    pub fn dealiased_product(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let a = self.padded_values();
        let b = other.padded_values();
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Ok(self.with_padded(&prod))
    }

    pub fn dealiased_cube(&self) -> Self {
        let a = self.padded_values();
        let cube: Vec<f64> = a.iter().map(|x| x * x * x).collect();
        self.with_padded(&cube)
    }

    fn padded_values(&self) -> Vec<f64> {
        let cutoff = self.grid.dealias_cutoff();
        let mut padded = vec![Complex64::new(0.0, 0.0); self.grid.n() + 1];
        padded[..=cutoff].copy_from_slice(&self.coeffs[..=cutoff]);
        transform_inverse(&self.grid.padded, &padded, 2 * self.grid.n())
    }

    fn with_padded(&self, values: &[f64]) -> Self {
        let cutoff = self.grid.dealias_cutoff();
        let full = transform_forward(&self.grid.padded, values, self.grid.n());
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.grid.nyquist() + 1];
        coeffs[..=cutoff].copy_from_slice(&full[..=cutoff]);
        Self::from_coeffs(&self.grid, coeffs).expect("finite product")
    }

    /// Pointwise map on the nodes (collocation, no dealiasing).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// `alpha·self + beta·other`, formed on the coefficients.
    pub fn lincomb(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        self.check_grid(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x * alpha + y * beta)
            .collect();
        Self::from_coeffs(&self.grid, coeffs)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.apply_symbol(|_| Complex64::new(alpha, 0.0))
    }
}

pub(crate) fn derivative_symbol(k: usize, order: u32, nyquist: usize) -> Complex64 {
    if order % 2 == 1 && k == nyquist {
        return Complex64::new(0.0, 0.0);
    }
    let w = 2.0 * PI * k as f64;
    let mag = w.powi(order as i32);
    match order % 4 {
        0 => Complex64::new(mag, 0.0),
        1 => Complex64::new(0.0, mag),
        2 => Complex64::new(-mag, 0.0),
        _ => Complex64::new(0.0, -mag),
    }
}

pub(crate) fn nodal_inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

/// A zero-mean periodic profile `u`.
///
/// The half spectrum is canonical: nodal values are always the inverse
/// transform of the stored coefficients, so a profile rebuilt from its
/// coefficients is bit-identical to the original.
#[derive(Clone, Debug)]
pub struct Profile {
    field: SpectralField,
}

impl Profile {
    /// Projects the samples onto zero mean.
    pub fn from_values(grid: &Arc<GridSpec>, values: Vec<f64>) -> Result<Self> {
        let field = SpectralField::from_values(grid, values)?;
        Self::from_coeffs(grid, field.coeffs)
    }

    /// Builds from a half spectrum; the mean mode is set to zero.
    pub fn from_coeffs(grid: &Arc<GridSpec>, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if let Some(c0) = coeffs.first_mut() {
            *c0 = Complex64::new(0.0, 0.0);
        }
        Ok(Self {
            field: SpectralField::from_coeffs(grid, coeffs)?,
        })
    }

    pub fn from_fn(grid: &Arc<GridSpec>, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn zeros(grid: &Arc<GridSpec>) -> Self {
        Self {
            field: SpectralField::zeros(grid),
        }
    }

    /// The unique zero-mean profile with `u_xx = s` (`s` must have zero mean
    /// up to roundoff; its mean is discarded).
    pub fn from_second_derivative(s: &SpectralField) -> Self {
        let coeffs = s
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if k == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    let w = 2.0 * PI * k as f64;
                    c / (-(w * w))
                }
            })
            .collect();
        Self::from_coeffs(s.grid(), coeffs).expect("finite coefficients")
    }

    pub fn field(&self) -> &SpectralField {
        &self.field
    }

    pub fn into_field(self) -> SpectralField {
        self.field
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        self.field.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        self.field.coeffs()
    }

    pub fn l2_norm(&self) -> f64 {
        self.field.l2_norm()
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.field.inner(&other.field)
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.field.same_grid(&other.field)
    }

    pub fn lincomb(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        Ok(Self {
            field: self.field.lincomb(alpha, &other.field, beta)?,
        })
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            field: self.field.scaled(alpha),
        }
    }

    /// `‖self - other‖_{L²}`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.lincomb(1.0, other, -1.0)?.l2_norm())
    }

    /// `u_xx`.
    pub fn second_derivative(&self) -> SpectralField {
        self.field.derivative(2).expect("order 2 is valid")
    }

    pub fn derivative(&self, order: u32) -> Result<SpectralField> {
        self.field.derivative(order)
    }

    /// `v = u_xx + a`.
    pub fn slope_field(&self, a: f64) -> SpectralField {
        let s = self.second_derivative();
        let mut coeffs = s.coeffs().to_vec();
        coeffs[0].re += a;
        SpectralField::from_coeffs(self.grid(), coeffs).expect("finite")
    }
}
