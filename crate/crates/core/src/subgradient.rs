//! The single-valued sub-differential `δE/δu`, the metric slope and the
//! second variation.
//!
//! With `s = u_xx`, `v = a + s` and `D2` the spectral second derivative,
//! the discrete energy is `⟨v, G v⟩ + mean_j Φ(v_j)`. Its exact gradient in
//! the nodal `L²` product is
//!
//! ```text
//! δE/δu = D2 [ 2 G s + ln v + (3/2) v² ]
//! ```
//!
//! where `2 D2 G D2` is the fused multiplier `-16π⁴|k|³` (the same operator
//! as `2π ∂_xx H ∂_x` away from the Nyquist mode). Constants inside the
//! bracket are dropped since `D2` annihilates them; `ln v` is evaluated as
//! `ln(1 + s/a)` so the gradient keeps relative precision near `u = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::energy::ModelParams;
use crate::error::{EpiError, Result};
use crate::spectral::{nodal_inner, GridSpec, Profile, SpectralField};

/// Below this value of `min(u_xx + a)` the logarithm is not evaluated.
pub const V_FLOOR: f64 = 1e-10;

/// How the square term of the flux is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FluxScheme {
    /// Nodal products; the exact gradient of the collocated energy.
    #[default]
    Collocation,
    /// `s²` via the padded two-thirds product.
    Dealiased,
}

#[derive(Clone, Debug)]
pub struct SubgradientField {
    pub field: SpectralField,
    pub slope: f64,
    pub min_v: f64,
}

fn second_derivative_symbol(k: usize) -> f64 {
    let w = 2.0 * PI * k as f64;
    -(w * w)
}

pub(crate) fn checked_min_v(s: &SpectralField, a: f64) -> Result<f64> {
    let min_v = a + s.min();
    if min_v <= V_FLOOR {
        Err(EpiError::Degenerate { min_v })
    } else {
        Ok(min_v)
    }
}

pub fn subgrad(u: &Profile, p: &ModelParams) -> Result<SubgradientField> {
    subgrad_with(u, p, FluxScheme::Collocation)
}

pub fn subgrad_with(u: &Profile, p: &ModelParams, scheme: FluxScheme) -> Result<SubgradientField> {
    let a = p.a;
    let s = u.second_derivative();
    let min_v = checked_min_v(&s, a)?;
    let flux_values: Vec<f64> = match scheme {
        FluxScheme::Collocation => collocated_flux(s.values(), a),
        FluxScheme::Dealiased => {
            let sq = s.dealiased_product(&s)?;
            s.values()
                .iter()
                .zip(sq.values())
                .map(|(&sj, &qj)| (sj / a).ln_1p() + 3.0 * a * sj + 1.5 * qj)
                .collect()
        }
    };
    let coeffs = assemble(u.grid(), &u.grid().forward(&flux_values), s.coeffs());
    let field = SpectralField::from_coeffs(u.grid(), coeffs)?;
    let slope = field.l2_norm();
    Ok(SubgradientField { field, slope, min_v })
}

/// `ln(1 + s/a) + 3as + (3/2)s²`, the flux up to constants.
fn collocated_flux(s: &[f64], a: f64) -> Vec<f64> {
    s.iter()
        .map(|&sj| (sj / a).ln_1p() + 3.0 * a * sj + 1.5 * sj * sj)
        .collect()
}

/// `D2 [flux + 2 G s]` on half spectra.
fn assemble(grid: &GridSpec, flux: &[Complex64], s: &[Complex64]) -> Vec<Complex64> {
    let kernel = grid.kernel();
    flux.iter()
        .zip(s)
        .enumerate()
        .map(|(k, (f, sk))| {
            if k == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                (f + sk * (2.0 * kernel[k])) * second_derivative_symbol(k)
            }
        })
        .collect()
}

/// Collocation gradient straight from the half spectrum of `u`; returns the
/// gradient coefficients and `min(u_xx + a)`. Used by the steppers, which
/// never need nodal values of `u` itself.
pub(crate) fn gradient_coeffs(
    grid: &GridSpec,
    u: &[Complex64],
    a: f64,
) -> Result<(Vec<Complex64>, f64)> {
    let s: Vec<Complex64> = u
        .iter()
        .enumerate()
        .map(|(k, c)| if k == 0 { Complex64::new(0.0, 0.0) } else { c * second_derivative_symbol(k) })
        .collect();
    let s_values = grid.inverse(&s);
    let min_v = a + s_values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_v > V_FLOOR) {
        return Err(EpiError::Degenerate { min_v });
    }
    let flux = grid.forward(&collocated_flux(&s_values, a));
    Ok((assemble(grid, &flux, &s), min_v))
}

/// `‖δE/δu‖_{L²}`, the metric slope `|∂E|(u)`.
pub fn slope_norm(u: &Profile, p: &ModelParams) -> Result<f64> {
    Ok(subgrad(u, p)?.slope)
}

/// Second variation of `E` frozen at a profile, acting on half spectra.
#[derive(Clone, Debug)]
pub struct Linearization {
    grid: std::sync::Arc<GridSpec>,
    weight: Vec<f64>,
}

impl Linearization {
    pub fn at(u: &Profile, p: &ModelParams) -> Result<Self> {
        let s = u.second_derivative();
        checked_min_v(&s, p.a)?;
        let weight = s
            .values()
            .iter()
            .map(|&sj| {
                let v = p.a + sj;
                1.0 / v + 3.0 * v
            })
            .collect();
        Ok(Self {
            grid: u.grid().clone(),
            weight,
        })
    }

    /// Nodal values of `Φ''(v) = 1/v + 3v`.
    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    /// `D2 [ 2 G D2 d + Φ''(v) ⊙ D2 d ]` on coefficients.
    pub fn apply_coeffs(&self, d: &[Complex64]) -> Vec<Complex64> {
        let dxx: Vec<Complex64> = d
            .iter()
            .enumerate()
            .map(|(k, c)| c * second_derivative_symbol(k))
            .collect();
        let dxx_values = self.grid.inverse(&dxx);
        let weighted: Vec<f64> = dxx_values
            .iter()
            .zip(&self.weight)
            .map(|(x, w)| x * w)
            .collect();
        let wc = self.grid.forward(&weighted);
        let kernel = self.grid.kernel();
        wc.iter()
            .zip(&dxx)
            .enumerate()
            .map(|(k, (w, q))| {
                if k == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    (w + q * (2.0 * kernel[k])) * second_derivative_symbol(k)
                }
            })
            .collect()
    }
}

/// Linearization of [`subgrad`] at `u` in direction `dir`.
pub fn hessian_apply(u: &Profile, dir: &Profile, p: &ModelParams) -> Result<SpectralField> {
    if !u.same_grid(dir) {
        return Err(EpiError::GridMismatch {
            left: u.grid().n(),
            right: dir.grid().n(),
        });
    }
    let lin = Linearization::at(u, p)?;
    SpectralField::from_coeffs(u.grid(), lin.apply_coeffs(dir.coeffs()))
}

/// Symbol of the second variation at `u = 0`:
/// `16π⁴((3a + 1/a)k⁴ - |k|³)` for the standard kernel.
pub fn flat_hessian_symbol(k: usize, a: f64) -> f64 {
    let k = k as f64;
    16.0 * PI.powi(4) * ((3.0 * a + 1.0 / a) * k.powi(4) - k.powi(3))
}

/// Squared `L²` norms entering the flux expansion
/// `‖[ln v]_x + (3/2)[v²]_x‖² = ‖[ln v]_x‖² + (9/4)‖[v²]_x‖² + 6‖u_xxx‖²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxNorms {
    pub combined: f64,
    pub log_term: f64,
    pub square_term: f64,
    pub third_derivative: f64,
}

impl FluxNorms {
    pub fn expansion(&self) -> f64 {
        self.log_term + 2.25 * self.square_term + 6.0 * self.third_derivative
    }
}

pub fn flux_norms(u: &Profile, p: &ModelParams) -> Result<FluxNorms> {
    let a = p.a;
    let s = u.second_derivative();
    checked_min_v(&s, a)?;
    let ln_v = s.map(|sj| (sj / a).ln_1p())?;
    let v_sq = s.map(|sj| (a + sj) * (a + sj))?;
    let ln_x = ln_v.derivative(1)?;
    let sq_x = v_sq.derivative(1)?;
    let uxxx = u.derivative(3)?;
    let combined: Vec<f64> = ln_x
        .values()
        .iter()
        .zip(sq_x.values())
        .map(|(l, q)| l + 1.5 * q)
        .collect();
    Ok(FluxNorms {
        combined: nodal_inner(&combined, &combined),
        log_term: nodal_inner(ln_x.values(), ln_x.values()),
        square_term: nodal_inner(sq_x.values(), sq_x.values()),
        third_derivative: nodal_inner(uxxx.values(), uxxx.values()),
    })
}
