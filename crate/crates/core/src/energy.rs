//! The free energy `Φ`, the nonlocal energy `E` and its a-priori bounds.
//!
//! `E(u) = ∫∫ ln|sin π(x-y)| v(x) v(y) dy dx + ∫ Φ(v) dx` with `v = u_xx + a`.
//! Alongside the total we carry the *excess* `E(u) - E(0)`, assembled from
//! `s = u_xx` directly so that it keeps full relative precision as the flow
//! approaches the flat equilibrium.

use std::f64::consts::{E as EULER, LN_2};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{EpiError, Result};
use crate::spectral::Profile;

/// `√3 - 2 ln 2`; the energy is `2C`-convex in `L²`.
pub fn convexity_constant() -> f64 {
    3f64.sqrt() - 2.0 * LN_2
}

/// Reference slope `a` together with the convexity constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: f64,
    pub c: f64,
    pub lambda: f64,
}

impl ModelParams {
    pub fn new(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(EpiError::InvalidParameter(format!(
                "reference slope a must be positive and finite, got {a}"
            )));
        }
        let c = convexity_constant();
        Ok(Self {
            a,
            c,
            lambda: 2.0 * c,
        })
    }
}

/// A real number or `+∞`. Orders every finite value below `+∞`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum ExtReal {
    Finite(f64),
    PosInfinity,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::PosInfinity => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// Finite value, or `f64::INFINITY` for reporting.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => serializer.serialize_f64(*x),
            ExtReal::PosInfinity => serializer.serialize_str("infinity"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(x) => Ok(ExtReal::Finite(x)),
            Repr::Text(s) if s == "infinity" => Ok(ExtReal::PosInfinity),
            Repr::Text(s) => Err(serde::de::Error::custom(format!("unexpected value {s:?}"))),
        }
    }
}

/// `Φ(ξ) = ξ ln ξ + ξ³/2` for `ξ > 0`, `0` at `0`, `+∞` for `ξ < 0`.
pub fn phi(xi: f64) -> ExtReal {
    if xi < 0.0 {
        ExtReal::PosInfinity
    } else if xi == 0.0 {
        ExtReal::Finite(0.0)
    } else {
        ExtReal::Finite(xi * xi.ln() + 0.5 * xi * xi * xi)
    }
}

fn require_positive(xi: f64) -> Result<()> {
    if xi > 0.0 {
        Ok(())
    } else {
        Err(EpiError::Degenerate { min_v: xi })
    }
}

/// `Φ'(ξ) = ln ξ + 1 + (3/2)ξ²`.
pub fn phi_prime(xi: f64) -> Result<f64> {
    require_positive(xi)?;
    Ok(xi.ln() + 1.0 + 1.5 * xi * xi)
}

/// `Φ''(ξ) = 1/ξ + 3ξ`.
pub fn phi_second(xi: f64) -> Result<f64> {
    require_positive(xi)?;
    Ok(1.0 / xi + 3.0 * xi)
}

/// `(1+r) ln(1+r) - r` for `r ≥ -1`, accurate for small `|r|`.
fn entropy_remainder(r: f64) -> f64 {
    if r == -1.0 {
        return 1.0;
    }
    if r.abs() < 0.1 {
        // Σ_{k≥2} (-r)^k / (k(k-1))
        let mut term = r * r;
        let mut sum = 0.0;
        for k in 2..40u32 {
            let contrib = term / f64::from(k * (k - 1));
            sum += contrib;
            if contrib.abs() <= 1e-18 * sum.abs() {
                break;
            }
            term *= -r;
        }
        sum
    } else {
        (1.0 + r) * r.ln_1p() - r
    }
}

/// `Φ(a+s) - Φ(a) - Φ'(a) s ≥ 0` for `a + s ≥ 0`.
pub fn phi_remainder(a: f64, s: f64) -> f64 {
    a * entropy_remainder(s / a) + 0.5 * s * s * (3.0 * a + s)
}

/// `E(0) = a ln a + a³/2 - a² ln 2`, the energy of the flat profile.
pub fn flat_energy(a: f64) -> f64 {
    a * a.ln() + 0.5 * a * a * a - a * a * LN_2
}

/// Energy of a profile with its two parts and the a-priori bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub total: ExtReal,
    pub kernel_part: f64,
    pub phi_part: ExtReal,
    /// `E(u) - E(0)`, assembled without cancellation against `E(0)`.
    pub excess: ExtReal,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub min_v: f64,
}

impl EnergyReport {
    /// Whether `lower_bound ≤ total ≤ upper_bound` with slack `tol`
    /// relative to the bound scale.
    pub fn bounds_hold(&self, tol: f64) -> bool {
        match self.total {
            ExtReal::PosInfinity => false,
            ExtReal::Finite(e) => {
                let scale = 1.0 + self.lower_bound.abs().max(self.upper_bound.abs());
                self.lower_bound <= e + tol * scale && e <= self.upper_bound + tol * scale
            }
        }
    }
}

/// Evaluates `E(u)` pseudospectrally: the kernel part through the log-kernel
/// multiplier, the `Φ` part by the rectangle rule at the nodes.
pub fn energy(u: &Profile, p: &ModelParams) -> EnergyReport {
    let a = p.a;
    let s = u.second_derivative();
    let g0 = u.grid().kernel()[0];
    let kernel_excess = s
        .inner(&s.log_kernel_convolve())
        .expect("same grid by construction");
    let kernel_part = g0 * a * a + kernel_excess;

    let n = s.values().len() as f64;
    let min_v = a + s.min();
    let mut sum_v2 = 0.0;
    let mut sum_v3 = 0.0;
    for &sj in s.values() {
        let v = a + sj;
        sum_v2 += v * v;
        sum_v3 += v.abs().powi(3);
    }
    let l2_sq = sum_v2 / n;
    let l3_cube = sum_v3 / n;
    let lower_bound = 0.5 * l3_cube - 1.0 / EULER - 2.0 * LN_2 * l2_sq;
    let upper_bound = 0.5 * l3_cube + (2.0 * LN_2 + 1.0) * l2_sq;

    let (phi_part, excess, total) = if min_v < 0.0 {
        (ExtReal::PosInfinity, ExtReal::PosInfinity, ExtReal::PosInfinity)
    } else {
        let phi_a = phi(a).to_f64();
        let dphi_a = a.ln() + 1.0 + 1.5 * a * a;
        let rem: f64 = s.values().iter().map(|&sj| phi_remainder(a, sj)).sum::<f64>() / n;
        let phi_excess = dphi_a * s.mean() + rem;
        let phi_part = phi_a + phi_excess;
        (
            ExtReal::Finite(phi_part),
            ExtReal::Finite(kernel_excess + phi_excess),
            ExtReal::Finite(kernel_part + phi_part),
        )
    };
    EnergyReport {
        total,
        kernel_part,
        phi_part,
        excess,
        lower_bound,
        upper_bound,
        min_v,
    }
}

/// `E(u) - E(0)`; the quantity differenced by the stepper and diagnostics.
pub fn energy_excess(u: &Profile, p: &ModelParams) -> ExtReal {
    energy(u, p).excess
}

/// `(1-t)E(u) + tE(w) - C t(1-t)‖u-w‖² - E((1-t)u + tw)`; non-negative by
/// `2C`-convexity. `+∞` when either endpoint has infinite energy.
pub fn convexity_gap(u: &Profile, w: &Profile, t: f64, p: &ModelParams) -> Result<f64> {
    if !u.same_grid(w) {
        return Err(EpiError::GridMismatch {
            left: u.grid().n(),
            right: w.grid().n(),
        });
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(EpiError::InvalidParameter(format!(
            "interpolation parameter must lie in [0, 1], got {t}"
        )));
    }
    if t == 0.0 || t == 1.0 || u.coeffs() == w.coeffs() {
        return Ok(0.0);
    }
    let (Some(eu), Some(ew)) = (energy_excess(u, p).finite(), energy_excess(w, p).finite()) else {
        return Ok(f64::INFINITY);
    };
    let mid = u.lincomb(1.0 - t, w, t)?;
    let em = energy_excess(&mid, p)
        .finite()
        .expect("segment between admissible profiles is admissible");
    let dist_sq = u.distance(w)?.powi(2);
    Ok((1.0 - t) * eu + t * ew - p.c * t * (1.0 - t) * dist_sq - em)
}
