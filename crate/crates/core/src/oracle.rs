//! Brute-force references for the spectral path.
//!
//! Nothing here touches the Fourier series of the log kernel or the Hilbert
//! multiplier: the kernel is integrated as `ln|sin π s|` by singular
//! quadrature, the Hilbert transform as a principal-value integral against
//! `cot(π y)`. Profiles are evaluated off-grid by summing their trigonometric
//! interpolant directly. These routines are slow by design.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::energy::{phi, ExtReal, ModelParams};
use crate::error::{EpiError, Result};
use crate::spectral::Profile;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadRule {
    /// Midpoint panels offset so the singular point is never sampled, with
    /// the leading log-singularity error removed in closed form.
    MidpointOffset,
    /// Double-exponential (tanh-sinh) nodes clustered at the endpoints.
    TanhSinh,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    /// Panel count (midpoint) or node count (tanh-sinh).
    pub m: usize,
    pub rule: QuadRule,
    /// Half-width of the excluded window around a principal-value
    /// singularity; the limit is taken by extrapolation.
    pub exclusion: f64,
}

impl QuadratureSpec {
    pub fn midpoint(m: usize) -> Self {
        Self {
            m,
            rule: QuadRule::MidpointOffset,
            exclusion: 0.0,
        }
    }

    pub fn tanh_sinh(m: usize) -> Self {
        Self {
            m,
            rule: QuadRule::TanhSinh,
            exclusion: 1e-2,
        }
    }

    /// The configuration used for acceptance-grade reference values.
    pub fn reference() -> Self {
        Self::tanh_sinh(801)
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::reference()
    }
}

/// A tanh-sinh node on `(0, 1)`, carrying its distance to both endpoints.
#[derive(Clone, Copy, Debug)]
struct DeNode {
    s: f64,
    s_comp: f64,
    weight: f64,
}

fn tanh_sinh_nodes(m: usize) -> Vec<DeNode> {
    let half = (m.max(3) - 1) / 2;
    let t_max = 4.0;
    let h = t_max / half as f64;
    let mut nodes = Vec::with_capacity(2 * half + 1);
    for j in -(half as i64)..=(half as i64) {
        let t = j as f64 * h;
        let q = 0.5 * PI * t.sinh();
        // s = 1/(1+e^{-2q}), 1-s = 1/(1+e^{2q})
        let s = 1.0 / (1.0 + (-2.0 * q).exp());
        let s_comp = 1.0 / (1.0 + (2.0 * q).exp());
        let weight = h * PI * t.cosh() * s * s_comp;
        if weight > 0.0 && s > 0.0 && s_comp > 0.0 {
            nodes.push(DeNode { s, s_comp, weight });
        }
    }
    nodes
}

/// `ln sin(π s)` for `s ∈ (0, 1)`, using the distance to the nearer endpoint.
fn ln_sin_pi(s: f64, s_comp: f64) -> f64 {
    (PI * s.min(s_comp)).sin().ln()
}

/// `∫_0^1 ln|sin π(x-y)| f(y) dy`.
pub fn quad_log_kernel(f: &dyn Fn(f64) -> f64, x: f64, q: &QuadratureSpec) -> f64 {
    match q.rule {
        QuadRule::MidpointOffset => {
            let m = q.m.max(2);
            let h = 1.0 / m as f64;
            let mut sum = 0.0;
            for j in 0..m {
                let s = (j as f64 + 0.5) * h;
                sum += ln_sin_pi(s, 1.0 - s) * f(x - s);
            }
            // midpoint sums of ln s over (0, h) overshoot by (h/2) ln 2 at
            // each log endpoint (s = 0 and s = 1)
            h * sum - h * LN_2 * f(x)
        }
        QuadRule::TanhSinh => tanh_sinh_nodes(q.m)
            .iter()
            .map(|nd| nd.weight * ln_sin_pi(nd.s, nd.s_comp) * f(x - nd.s))
            .sum(),
    }
}

/// `∫_{-1}^{1} -ln|sin πξ| dξ`, the `L¹` mass of the kernel on `(-1, 1)`.
pub fn kernel_mass(q: &QuadratureSpec) -> f64 {
    -2.0 * quad_log_kernel(&|_| 1.0, 0.0, q)
}

/// The trigonometric interpolant of a profile, evaluated by direct summation.
#[derive(Clone, Debug)]
pub struct TrigInterpolant {
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn new(u: &Profile) -> Self {
        Self {
            coeffs: u.coeffs().to_vec(),
        }
    }

    /// Interpolant of the `order`-th derivative (even orders only keep the
    /// Nyquist cosine).
    pub fn derivative(&self, order: u32) -> Self {
        let ny = self.coeffs.len() - 1;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if order % 2 == 1 && k == ny {
                    return Complex64::new(0.0, 0.0);
                }
                c * Complex64::new(0.0, 2.0 * PI * k as f64).powu(order)
            })
            .collect();
        Self { coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let ny = self.coeffs.len() - 1;
        let z = Complex64::from_polar(1.0, 2.0 * PI * x);
        let mut zk = Complex64::new(1.0, 0.0);
        let mut sum = self.coeffs[0].re;
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            zk *= z;
            if k % 64 == 0 {
                zk = Complex64::from_polar(1.0, 2.0 * PI * x * k as f64);
            }
            if k == ny {
                sum += c.re * zk.re;
            } else {
                sum += 2.0 * (c * zk).re;
            }
        }
        sum
    }
}

/// Reference value of `E` with its kernel part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadEnergy {
    pub kernel_part: f64,
    pub phi_part: ExtReal,
    pub total: ExtReal,
}

/// Outer rectangle rule for `∫ F(x) Q[H](x) dx` over `2n` points; exact for
/// the trigonometric products that arise from `n`-point interpolants.
fn quad_bilinear(
    f: &dyn Fn(f64) -> f64,
    h: &dyn Fn(f64) -> f64,
    n: usize,
    q: &QuadratureSpec,
) -> f64 {
    let outer = 2 * n;
    (0..outer)
        .map(|i| {
            let x = i as f64 / outer as f64;
            f(x) * quad_log_kernel(h, x, q)
        })
        .sum::<f64>()
        / outer as f64
}

/// `E(u)` from the double integral by singular quadrature plus the nodal
/// rectangle rule for `∫ Φ(v)`.
pub fn quad_energy(u: &Profile, p: &ModelParams, q: &QuadratureSpec) -> QuadEnergy {
    let n = u.grid().n();
    let uxx = TrigInterpolant::new(u).derivative(2);
    let a = p.a;
    let v = |x: f64| a + uxx.eval(x);
    let kernel_part = quad_bilinear(&v, &v, n, q);
    let mut phi_sum = 0.0;
    let mut finite = true;
    for j in 0..n {
        match phi(v(j as f64 / n as f64)) {
            ExtReal::Finite(x) => phi_sum += x,
            ExtReal::PosInfinity => finite = false,
        }
    }
    if !finite {
        return QuadEnergy {
            kernel_part,
            phi_part: ExtReal::PosInfinity,
            total: ExtReal::PosInfinity,
        };
    }
    let phi_part = phi_sum / n as f64;
    QuadEnergy {
        kernel_part,
        phi_part: ExtReal::Finite(phi_part),
        total: ExtReal::Finite(kernel_part + phi_part),
    }
}

/// `Φ(v+δ) - Φ(v-δ)` without cancellation; requires `v > |δ|`.
fn phi_symmetric_difference(v: f64, delta: f64) -> Option<f64> {
    if v <= delta.abs() {
        return None;
    }
    let r = delta / v;
    Some(2.0 * v * r.atanh() + delta * (v * v - delta * delta).ln() + 3.0 * v * v * delta + delta.powi(3))
}

/// `(E(u + ε d) - E(u - ε d)) / (2ε)` with `E` from [`quad_energy`].
///
/// The difference is expanded before evaluation: the kernel part is an exact
/// quadratic form, so its symmetric difference is `2ε(B(v,ψ) + B(ψ,v))`
/// with `ψ = d_xx`, and the `Φ` part is differenced node by node in closed
/// form. Only the `O(ε²)` truncation of the central difference remains.
pub fn fd_gateaux(
    u: &Profile,
    dir: &Profile,
    eps: f64,
    p: &ModelParams,
    q: &QuadratureSpec,
) -> Result<f64> {
    if !u.same_grid(dir) {
        return Err(EpiError::GridMismatch {
            left: u.grid().n(),
            right: dir.grid().n(),
        });
    }
    if !(eps > 0.0) {
        return Err(EpiError::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let n = u.grid().n();
    let a = p.a;
    let uxx = TrigInterpolant::new(u).derivative(2);
    let dxx = TrigInterpolant::new(dir).derivative(2);
    let v = |x: f64| a + uxx.eval(x);
    let psi = |x: f64| dxx.eval(x);
    let kernel = quad_bilinear(&v, &psi, n, q) + quad_bilinear(&psi, &v, n, q);
    let mut phi_sum = 0.0;
    for j in 0..n {
        let x = j as f64 / n as f64;
        let diff = phi_symmetric_difference(v(x), eps * psi(x)).ok_or(EpiError::Degenerate {
            min_v: v(x) - (eps * psi(x)).abs(),
        })?;
        phi_sum += diff;
    }
    Ok(kernel + phi_sum / (n as f64 * 2.0 * eps))
}

/// Principal value `∫_I f(x-y) cot(π y) dy`, folded to
/// `∫_0^{1/2} [f(x-y) - f(x+y)] cot(π y) dy`.
///
/// With a positive exclusion `ε` the window `(0, ε)` is cut out at `ε`,
/// `ε/2`, `ε/4` and the limit taken by Richardson extrapolation (the folded
/// integrand is even in `y`, so the cut error is `c₁ε + c₃ε³ + …`).
pub fn pv_hilbert(f: &dyn Fn(f64) -> f64, x: f64, q: &QuadratureSpec) -> f64 {
    let folded = |y: f64| (f(x - y) - f(x + y)) / (PI * y).tan();
    let over = |lo: f64| -> f64 {
        let hi = 0.5;
        let len = hi - lo;
        match q.rule {
            QuadRule::MidpointOffset => {
                let m = q.m.max(2);
                let h = len / m as f64;
                h * (0..m).map(|j| folded(lo + (j as f64 + 0.5) * h)).sum::<f64>()
            }
            QuadRule::TanhSinh => tanh_sinh_nodes(q.m)
                .iter()
                .map(|nd| {
                    let y = if nd.s <= 0.5 { lo + len * nd.s } else { hi - len * nd.s_comp };
                    nd.weight * len * folded(y)
                })
                .sum(),
        }
    };
    if q.exclusion <= 0.0 {
        return over(0.0);
    }
    let e = q.exclusion;
    let (i1, i2, i4) = (over(e), over(0.5 * e), over(0.25 * e));
    let r1 = 2.0 * i2 - i1;
    let r2 = 2.0 * i4 - i2;
    (8.0 * r2 - r1) / 7.0
}

/// Observed convergence order from three successively doubled resolutions.
pub fn observed_order(coarse: f64, mid: f64, fine: f64) -> f64 {
    ((coarse - mid).abs() / (mid - fine).abs()).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::flat_energy;
    use crate::spectral::GridSpec;

    fn cos2pi(y: f64) -> f64 {
        (2.0 * PI * y).cos()
    }

    #[test]
    fn kernel_mean_is_minus_ln2() {
        for q in [QuadratureSpec::midpoint(4096), QuadratureSpec::tanh_sinh(401)] {
            for &x in &[0.0, 0.3, 0.77] {
                let got = quad_log_kernel(&|_| 1.0, x, &q);
                assert!((got + LN_2).abs() < 1e-8, "{q:?} x={x}: {got}");
            }
            assert!((kernel_mass(&q) - 2.0 * LN_2).abs() < 1e-8);
        }
    }

    #[test]
    fn kernel_on_cosine() {
        for q in [QuadratureSpec::midpoint(4096), QuadratureSpec::tanh_sinh(401)] {
            let got = quad_log_kernel(&cos2pi, 0.0, &q);
            assert!((got + 0.5).abs() < 1e-7, "{q:?}: {got}");
        }
        assert_eq!(quad_log_kernel(&|_| 0.0, 0.4, &QuadratureSpec::midpoint(64)), 0.0);
    }

    #[test]
    fn midpoint_rule_converges_at_third_order() {
        // smooth but not band-limited integrand
        let f = |y: f64| 1.0 / (1.25 - (2.0 * PI * y).cos());
        let x = 0.2;
        let vals: Vec<f64> = [256, 512, 1024]
            .iter()
            .map(|&m| quad_log_kernel(&f, x, &QuadratureSpec::midpoint(m)))
            .collect();
        let order = observed_order(vals[0], vals[1], vals[2]);
        assert!(order > 2.7, "observed order {order}");
        let reference = quad_log_kernel(&f, x, &QuadratureSpec::tanh_sinh(1601));
        assert!((vals[2] - reference).abs() < 1e-7);
    }

    #[test]
    fn hilbert_quadrature() {
        for q in [QuadratureSpec::tanh_sinh(401), QuadratureSpec::midpoint(4096)] {
            assert!(pv_hilbert(&cos2pi, 0.0, &q).abs() < 1e-9);
            assert!((pv_hilbert(&cos2pi, 0.25, &q) - 1.0).abs() < 1e-7, "{q:?}");
            assert!(pv_hilbert(&|_| 3.0, 0.1, &q).abs() < 1e-14);
            // sin(2πy) maps to -cos(2πx)
            let s = |y: f64| (2.0 * PI * y).sin();
            assert!((pv_hilbert(&s, 0.1, &q) + (0.2 * PI).cos()).abs() < 1e-7);
        }
    }

    #[test]
    fn interpolant_matches_nodes_and_derivatives() {
        let g = GridSpec::new(32).unwrap();
        let u = Profile::from_fn(&g, |x| (2.0 * PI * x).sin() + 0.1 * (10.0 * PI * x).cos()).unwrap();
        let t = TrigInterpolant::new(&u);
        for (j, x) in g.nodes().iter().enumerate() {
            assert!((t.eval(*x) - u.values()[j]).abs() < 1e-13);
        }
        let d2 = t.derivative(2);
        let x = 0.123;
        let want = -4.0 * PI * PI * (2.0 * PI * x).sin() - 0.1 * 100.0 * PI * PI * (10.0 * PI * x).cos();
        assert!((d2.eval(x) - want).abs() < 1e-10);
    }

    #[test]
    fn flat_energy_from_quadrature() {
        let g = GridSpec::new(32).unwrap();
        for &a in &[0.5, 1.0, 2.0] {
            let p = ModelParams::new(a).unwrap();
            let e = quad_energy(&Profile::zeros(&g), &p, &QuadratureSpec::reference());
            assert!((e.total.to_f64() - flat_energy(a)).abs() < 1e-12);
        }
        let p = ModelParams::new(1.0).unwrap();
        let e = quad_energy(&Profile::zeros(&g), &p, &QuadratureSpec::midpoint(4096));
        assert!((e.total.to_f64() - (0.5 - LN_2)).abs() < 1e-7);
    }

    #[test]
    fn infinite_energy_sentinel() {
        let g = GridSpec::new(32).unwrap();
        let p = ModelParams::new(1.0).unwrap();
        let u = Profile::from_fn(&g, |x| -1.5 / (4.0 * PI * PI) * cos2pi(x)).unwrap();
        let e = quad_energy(&u, &p, &QuadratureSpec::tanh_sinh(101));
        assert_eq!(e.total, ExtReal::PosInfinity);
    }

    #[test]
    fn symmetric_difference_is_accurate() {
        let (v, d) = (1.3, 1e-9);
        let got = phi_symmetric_difference(v, d).unwrap();
        let want = 2.0 * d * (v.ln() + 1.0 + 1.5 * v * v);
        assert!((got / want - 1.0).abs() < 1e-12);
        assert!(phi_symmetric_difference(0.1, 0.2).is_none());
    }

    #[test]
    fn gateaux_at_equilibrium_vanishes() {
        let g = GridSpec::new(32).unwrap();
        let p = ModelParams::new(1.0).unwrap();
        let dir = Profile::from_fn(&g, |x| 1e-3 * (4.0 * PI * x).cos()).unwrap();
        let zero = Profile::zeros(&g);
        let q = QuadratureSpec::tanh_sinh(401);
        for &eps in &[1e-3, 1e-4] {
            assert!(fd_gateaux(&zero, &dir, eps, &p, &q).unwrap().abs() < 1e-12);
        }
        assert_eq!(fd_gateaux(&zero, &Profile::zeros(&g), 1e-3, &p, &q).unwrap(), 0.0);
    }
}
