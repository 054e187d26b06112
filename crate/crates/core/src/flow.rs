//! Time integration of `u_t = -δE/δu`.
//!
//! The primary integrator is the minimizing movement
//! `w = argmin ‖w - u‖²/(2τ) + E(w)`, solved by damped Newton with
//! preconditioned conjugate gradients. Since `E` is `2C`-convex the
//! objective is `(1/τ + 2C)`-strongly convex and every accepted step
//! dissipates energy, whatever `τ`. Classical RK4 is kept as a reference.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::energy::{energy, ModelParams};
use crate::error::{EpiError, Result};
use crate::spectral::{GridSpec, Profile};
use crate::subgradient::{flux_norms, gradient_coeffs, Linearization, V_FLOOR};

/// States with `‖u‖_{L²}` below this are stepped to the flat equilibrium:
/// squares in the flux underflow there and the solve loses meaning.
pub const STATE_FLOOR: f64 = 1e-280;

/// Inner-solver controls for [`prox_step`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProxSettings {
    /// Newton stops once `‖r‖ ≤ tol · (‖w - u‖/τ + ‖δE/δu(w)‖)`.
    pub tol: f64,
    pub max_iters: usize,
    /// Newton steps keep at least `1 - fraction_to_boundary` of `min(u_xx + a)`.
    pub fraction_to_boundary: f64,
    /// Relative residual reduction asked of each linear solve.
    pub cg_tol: f64,
    pub cg_max_iters: usize,
}

impl Default for ProxSettings {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 50,
            fraction_to_boundary: 0.99,
            cg_tol: 1e-6,
            cg_max_iters: 500,
        }
    }
}

/// An accepted proximal step.
#[derive(Clone, Debug)]
pub struct StepResult {
    pub next: Profile,
    pub tau: f64,
    pub newton_iters: usize,
    pub cg_iters: usize,
    /// `‖(w - u)/τ + δE/δu(w)‖_{L²}`.
    pub prox_residual: f64,
    /// `E(u) - E(w)`, from the energy excesses.
    pub energy_drop: f64,
    pub min_v_next: f64,
    /// `‖δE/δu(w)‖`, a by-product of the final residual.
    pub slope_next: f64,
}

// Half-spectrum inner product equal to the nodal L² product.
fn hdot(x: &[Complex64], y: &[Complex64]) -> f64 {
    let last = x.len() - 1;
    x.iter()
        .zip(y)
        .enumerate()
        .map(|(k, (a, b))| {
            let w = if k == 0 || k == last { 1.0 } else { 2.0 };
            w * (a.re * b.re + a.im * b.im)
        })
        .sum()
}

// Scaled so that squares of tiny coefficients do not underflow.
fn hnorm(x: &[Complex64]) -> f64 {
    let m = x.iter().map(|c| c.re.abs().max(c.im.abs())).fold(0.0, f64::max);
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    let y: Vec<Complex64> = x.iter().map(|c| c / m).collect();
    m * hdot(&y, &y).sqrt()
}

fn axpy(alpha: f64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += xi * alpha;
    }
}

/// Preconditioned CG for `(I/τ + H) d = b`; `precond[k]` is the inverse of
/// the frozen-coefficient symbol.
fn pcg(
    lin: &Linearization,
    inv_tau: f64,
    b: &[Complex64],
    precond: &[f64],
    tol: f64,
    max_iters: usize,
) -> (Vec<Complex64>, usize) {
    let zero = Complex64::new(0.0, 0.0);
    let mut x = vec![zero; b.len()];
    // solve for b/‖b‖: inner products of tiny vectors would underflow
    let b_norm = hnorm(b);
    if b_norm == 0.0 {
        return (x, 0);
    }
    let mut r: Vec<Complex64> = b.iter().map(|c| c / b_norm).collect();
    let target = tol;
    let apply_precond =
        |r: &[Complex64]| -> Vec<Complex64> { r.iter().zip(precond).map(|(c, m)| c * m).collect() };
    let mut z = apply_precond(&r);
    let mut dir = z.clone();
    let mut rz = hdot(&r, &z);
    for it in 1..=max_iters {
        let mut q = lin.apply_coeffs(&dir);
        axpy(inv_tau, &dir, &mut q);
        let curv = hdot(&dir, &q);
        if !(curv > 0.0) {
            return (x.iter().map(|c| c * b_norm).collect(), it);
        }
        let alpha = rz / curv;
        axpy(alpha, &dir, &mut x);
        axpy(-alpha, &q, &mut r);
        if hnorm(&r) <= target {
            return (x.iter().map(|c| c * b_norm).collect(), it);
        }
        z = apply_precond(&r);
        let rz_new = hdot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (di, zi) in dir.iter_mut().zip(&z) {
            *di = zi + *di * beta;
        }
    }
    (x.iter().map(|c| c * b_norm).collect(), max_iters)
}

struct Iterate {
    w: Vec<Complex64>,
    residual: Vec<Complex64>,
    res_norm: f64,
    scale: f64,
    slope: f64,
    objective: f64,
    min_v: f64,
}

fn evaluate(
    grid: &Arc<GridSpec>,
    u: &[Complex64],
    w: Vec<Complex64>,
    inv_tau: f64,
    p: &ModelParams,
) -> Result<Iterate> {
    let (g, min_v) = gradient_coeffs(grid, &w, p.a)?;
    let diff: Vec<Complex64> = w.iter().zip(u).map(|(x, y)| x - y).collect();
    let residual: Vec<Complex64> = diff.iter().zip(&g).map(|(d, gk)| d * inv_tau + gk).collect();
    let res_norm = hnorm(&residual);
    let slope = hnorm(&g);
    let dist = hnorm(&diff);
    let profile = Profile::from_coeffs(grid, w.clone())?;
    let excess = energy(&profile, p)
        .excess
        .finite()
        .ok_or(EpiError::Degenerate { min_v })?;
    Ok(Iterate {
        w,
        residual,
        res_norm,
        scale: dist * inv_tau + slope,
        slope,
        objective: 0.5 * inv_tau * dist * dist + excess,
        min_v,
    })
}

/// One minimizing-movement step from `u`, started at `u` itself.
pub fn prox_step(u: &Profile, tau: f64, p: &ModelParams, settings: &ProxSettings) -> Result<StepResult> {
    prox_step_from(u, u, tau, p, settings)
}

/// One minimizing-movement step from `u` with Newton started at `guess`.
pub fn prox_step_from(
    u: &Profile,
    guess: &Profile,
    tau: f64,
    p: &ModelParams,
    settings: &ProxSettings,
) -> Result<StepResult> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(EpiError::InvalidParameter(format!("step size must be positive, got {tau}")));
    }
    if !u.same_grid(guess) {
        return Err(EpiError::GridMismatch {
            left: u.grid().n(),
            right: guess.grid().n(),
        });
    }
    let grid = u.grid();
    let inv_tau = 1.0 / tau;
    let e_u = energy(u, p);
    let e_u_excess = e_u.excess.finite().ok_or(EpiError::Degenerate { min_v: e_u.min_v })?;
    if e_u.min_v <= V_FLOOR {
        return Err(EpiError::Degenerate { min_v: e_u.min_v });
    }
    let uc = u.coeffs();
    let u_norm = u.l2_norm();
    if u_norm <= STATE_FLOOR {
        return Ok(StepResult {
            next: Profile::zeros(grid),
            tau,
            newton_iters: 0,
            cg_iters: 0,
            prox_residual: u_norm * inv_tau,
            energy_drop: e_u_excess,
            min_v_next: p.a,
            slope_next: 0.0,
        });
    }
    let mut it = evaluate(grid, uc, guess.coeffs().to_vec(), inv_tau, p)?;
    let mut newton_iters = 0;
    let mut cg_iters = 0;
    loop {
        if it.res_norm <= settings.tol * it.scale || it.res_norm == 0.0 {
            break;
        }
        if newton_iters == settings.max_iters {
            return Err(EpiError::NonConvergence {
                iters: newton_iters,
                residual: it.res_norm / it.scale,
            });
        }
        newton_iters += 1;

        let current = Profile::from_coeffs(grid, it.w.clone())?;
        let lin = Linearization::at(&current, p)?;
        let mean_weight = lin.weight().iter().sum::<f64>() / lin.weight().len() as f64;
        let kernel = grid.kernel();
        let precond: Vec<f64> = (0..=grid.nyquist())
            .map(|k| {
                if k == 0 {
                    0.0
                } else {
                    let w4 = (2.0 * PI * k as f64).powi(4);
                    1.0 / (inv_tau + w4 * (mean_weight + 2.0 * kernel[k]))
                }
            })
            .collect();
        let rhs: Vec<Complex64> = it.residual.iter().map(|c| -c).collect();
        let (d, its) = pcg(&lin, inv_tau, &rhs, &precond, settings.cg_tol, settings.cg_max_iters);
        cg_iters += its;

        // fraction to the boundary on v = a + u_xx
        let dxx: Vec<Complex64> = d
            .iter()
            .enumerate()
            .map(|(k, c)| c * -(2.0 * PI * k as f64).powi(2))
            .collect();
        let dxx_values = grid.inverse(&dxx);
        let v_values = current.slope_field(p.a);
        let mut alpha: f64 = 1.0;
        for (vj, dj) in v_values.values().iter().zip(&dxx_values) {
            if *dj < 0.0 {
                alpha = alpha.min(settings.fraction_to_boundary * vj / -dj);
            }
        }
        let slope_dir = -hdot(&it.residual, &d);
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<Complex64> = it.w.iter().zip(&d).map(|(x, y)| x + y * alpha).collect();
            if let Ok(next) = evaluate(grid, uc, trial, inv_tau, p) {
                let armijo = next.objective <= it.objective - 1e-4 * alpha * slope_dir;
                let contracts = next.res_norm <= (1.0 - 1e-4 * alpha) * it.res_norm;
                if armijo || contracts {
                    accepted = Some(next);
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some(next) => it = next,
            None => {
                return Err(EpiError::NonConvergence {
                    iters: newton_iters,
                    residual: it.res_norm / it.scale,
                })
            }
        }
    }

    let next = Profile::from_coeffs(grid, it.w)?;
    let e_next = energy(&next, p);
    let drop = e_u_excess - e_next.excess.to_f64();
    Ok(StepResult {
        next,
        tau,
        newton_iters,
        cg_iters,
        prox_residual: it.res_norm,
        energy_drop: drop,
        min_v_next: it.min_v,
        slope_next: it.slope,
    })
}

fn rk4_rhs(grid: &GridSpec, u: &[Complex64], a: f64) -> Result<Vec<Complex64>> {
    let (g, _) = gradient_coeffs(grid, u, a)?;
    Ok(g.into_iter().map(|c| -c).collect())
}

fn rk4_coeffs(grid: &GridSpec, u: &[Complex64], tau: f64, a: f64) -> Result<Vec<Complex64>> {
    let stage = |base: &[Complex64], k: &[Complex64], h: f64| -> Vec<Complex64> {
        base.iter().zip(k).map(|(b, kk)| b + kk * h).collect()
    };
    let k1 = rk4_rhs(grid, u, a)?;
    let k2 = rk4_rhs(grid, &stage(u, &k1, 0.5 * tau), a)?;
    let k3 = rk4_rhs(grid, &stage(u, &k2, 0.5 * tau), a)?;
    let k4 = rk4_rhs(grid, &stage(u, &k3, tau), a)?;
    Ok((0..u.len())
        .map(|i| u[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (tau / 6.0))
        .collect())
}

/// One classical RK4 step of `u_t = -δE/δu`.
pub fn explicit_step(u: &Profile, tau: f64, p: &ModelParams) -> Result<Profile> {
    Profile::from_coeffs(u.grid(), rk4_coeffs(u.grid(), u.coeffs(), tau, p.a)?)
}

/// RK4 from `u0` to `t_final` with `round(t_final/tau)` equal steps.
pub fn evolve_explicit(u0: &Profile, tau: f64, t_final: f64, p: &ModelParams) -> Result<Profile> {
    if !(tau > 0.0 && t_final >= 0.0) {
        return Err(EpiError::InvalidParameter(format!(
            "need tau > 0 and t_final >= 0, got {tau}, {t_final}"
        )));
    }
    let steps = (t_final / tau).round().max(1.0) as usize;
    let h = t_final / steps as f64;
    let grid = u0.grid();
    let mut c = u0.coeffs().to_vec();
    for _ in 0..steps {
        c = rk4_coeffs(grid, &c, h, p.a)?;
        if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(EpiError::NonFinite);
        }
    }
    Profile::from_coeffs(grid, c)
}

/// Largest RK4 step that is stable for the linearization at `u`: the real
/// stability interval `[-2.785, 0]` over the bound `(πn)⁴ max(1/v + 3v)` on
/// the spectral radius of the second variation.
pub fn rk4_stability_limit(u: &Profile, p: &ModelParams) -> Result<f64> {
    let lin = Linearization::at(u, p)?;
    let wmax = lin.weight().iter().copied().fold(0.0, f64::max);
    let kmax = (PI * u.grid().n() as f64).powi(4);
    Ok(2.785 / (kmax * wmax))
}

/// Step-size policy for [`evolve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub tau0: f64,
    pub tau_max: f64,
    pub growth: f64,
    /// Accepted steps between growths.
    pub n_grow: usize,
    pub adaptive: bool,
    pub t_final: f64,
    /// Stop once the slope drops below this (0 disables).
    pub stop_slope: f64,
    pub max_halvings: usize,
    /// Times at which a [`Checkpoint`] is stored; steps are clipped to hit them.
    pub checkpoint_times: Vec<f64>,
    /// Keep every accepted state (needed by the EVI certificate).
    pub retain_states: bool,
    pub prox: ProxSettings,
}

impl Default for StepSchedule {
    fn default() -> Self {
        Self {
            tau0: 1e-4,
            tau_max: 1e-2,
            growth: 1.2,
            n_grow: 5,
            adaptive: true,
            t_final: 1.0,
            stop_slope: 0.0,
            max_halvings: 40,
            checkpoint_times: Vec::new(),
            retain_states: false,
            prox: ProxSettings::default(),
        }
    }
}

impl StepSchedule {
    pub fn fixed(tau: f64, t_final: f64) -> Self {
        Self {
            tau0: tau,
            tau_max: tau,
            adaptive: false,
            t_final,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EpiError::InvalidParameter(msg));
        if !(self.tau0.is_finite() && self.tau0 > 0.0) {
            return bad(format!("tau0 must be positive, got {}", self.tau0));
        }
        if !(self.tau_max.is_finite() && self.tau_max >= self.tau0) {
            return bad(format!("tau_max must be at least tau0, got {}", self.tau_max));
        }
        if !(self.growth.is_finite() && self.growth >= 1.0) {
            return bad(format!("growth must be at least 1, got {}", self.growth));
        }
        if self.n_grow == 0 {
            return bad("n_grow must be positive".into());
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return bad(format!("t_final must be non-negative, got {}", self.t_final));
        }
        if !(self.stop_slope.is_finite() && self.stop_slope >= 0.0) {
            return bad(format!("stop_slope must be non-negative, got {}", self.stop_slope));
        }
        if self.checkpoint_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return bad("checkpoint times must be finite and non-negative".into());
        }
        if !(self.prox.tol > 0.0 && self.prox.fraction_to_boundary > 0.0 && self.prox.fraction_to_boundary < 1.0)
        {
            return bad("prox settings out of range".into());
        }
        Ok(())
    }
}

/// One row of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    /// `E(u)`, or `+∞` (serialized as a float) when inadmissible.
    pub energy: f64,
    /// `E(u) - E(0)`.
    pub excess: f64,
    pub slope: f64,
    pub min_v: f64,
    pub l2_u: f64,
    /// `‖u_n - u_{n-1}‖/τ_n`; zero on the first row.
    pub dq_norm: f64,
    /// Step that produced this row; zero on the first row.
    pub tau: f64,
    pub newton_iters: usize,
    pub uxxx_l2: f64,
    pub lnv_x_l2: f64,
    /// `mean(ln v)`.
    pub mean_ln_v: f64,
    /// `‖v‖_{L²}`.
    pub v_l2: f64,
    /// Leading hex digits of the SHA-256 of the coefficient bits.
    pub digest: String,
}

/// A stored state.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub t: f64,
    pub profile: Profile,
}

/// Output of [`evolve`].
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub params: ModelParams,
    pub n: usize,
    pub schedule: StepSchedule,
    pub samples: Vec<Sample>,
    pub checkpoints: Vec<Checkpoint>,
    /// Parallel to `samples` when `schedule.retain_states`, else empty.
    pub states: Vec<Profile>,
    pub aborted: Option<String>,
    pub stopped_on_slope: bool,
}

impl Trajectory {
    pub fn initial(&self) -> Option<&Profile> {
        self.states
            .first()
            .or_else(|| self.checkpoints.iter().find(|c| c.t == 0.0).map(|c| &c.profile))
    }
}

/// Hex digest of a profile's coefficients.
pub fn profile_digest(u: &Profile) -> String {
    let mut h = Sha256::new();
    for c in u.coeffs() {
        h.update(c.re.to_bits().to_le_bytes());
        h.update(c.im.to_bits().to_le_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

fn sample(u: &Profile, t: f64, tau: f64, dq: f64, newton_iters: usize, slope: f64, p: &ModelParams) -> Sample {
    let rep = energy(u, p);
    // samples are only taken at admissible states, where these are finite
    let (uxxx, lnvx) = match flux_norms(u, p) {
        Ok(f) => (f.third_derivative.sqrt(), f.log_term.sqrt()),
        Err(_) => (f64::NAN, f64::NAN),
    };
    let s = u.second_derivative();
    let n = s.values().len() as f64;
    let mean_ln_v = p.a.ln() + s.values().iter().map(|&x| (x / p.a).ln_1p()).sum::<f64>() / n;
    let v_l2 = (s.values().iter().map(|&x| (p.a + x) * (p.a + x)).sum::<f64>() / n).sqrt();
    Sample {
        t,
        energy: rep.total.to_f64(),
        excess: rep.excess.to_f64(),
        slope,
        min_v: rep.min_v,
        l2_u: u.l2_norm(),
        dq_norm: dq,
        tau,
        newton_iters,
        uxxx_l2: uxxx,
        lnv_x_l2: lnvx,
        mean_ln_v,
        v_l2,
        digest: profile_digest(u),
    }
}

/// Runs the proximal scheme from `u0` under `schedule`.
///
/// Requires `min(u0_xx + a) > 0`. A step that fails is retried with half the
/// step size; after `max_halvings` consecutive failures the run stops and the
/// partial trajectory is returned with `aborted` set.
pub fn evolve(u0: &Profile, schedule: &StepSchedule, p: &ModelParams) -> Result<Trajectory> {
    schedule.validate()?;
    let rep0 = energy(u0, p);
    if !rep0.total.is_finite() || rep0.min_v <= V_FLOOR {
        return Err(EpiError::Degenerate { min_v: rep0.min_v });
    }
    let mut cps: Vec<f64> = schedule
        .checkpoint_times
        .iter()
        .copied()
        .filter(|&t| t <= schedule.t_final)
        .collect();
    cps.sort_by(f64::total_cmp);
    cps.dedup();

    let slope0 = crate::subgradient::slope_norm(u0, p)?;
    let mut traj = Trajectory {
        params: *p,
        n: u0.grid().n(),
        schedule: schedule.clone(),
        samples: vec![sample(u0, 0.0, 0.0, 0.0, 0, slope0, p)],
        checkpoints: Vec::new(),
        states: Vec::new(),
        aborted: None,
        stopped_on_slope: false,
    };
    if schedule.retain_states {
        traj.states.push(u0.clone());
    }
    let mut next_cp = 0;
    while next_cp < cps.len() && cps[next_cp] <= 0.0 {
        traj.checkpoints.push(Checkpoint { t: 0.0, profile: u0.clone() });
        next_cp += 1;
    }

    let mut u = u0.clone();
    let mut t = 0.0;
    let mut slope = slope0;
    let mut tau = schedule.tau0;
    let mut since_growth = 0;
    let mut halvings = 0;
    let t_end = schedule.t_final;
    while t < t_end {
        if schedule.stop_slope > 0.0 && slope < schedule.stop_slope {
            traj.stopped_on_slope = true;
            break;
        }
        let target = cps.get(next_cp).copied().unwrap_or(t_end).min(t_end);
        let (step, t_new) = if t + tau >= target * (1.0 - 1e-12) {
            (target - t, target)
        } else {
            (tau, t + tau)
        };
        match prox_step(&u, step, p, &schedule.prox) {
            Ok(res) => {
                halvings = 0;
                let dq = res.next.distance(&u)? / step;
                u = res.next;
                t = t_new;
                slope = res.slope_next;
                traj.samples.push(sample(&u, t, step, dq, res.newton_iters, slope, p));
                if schedule.retain_states {
                    traj.states.push(u.clone());
                }
                while next_cp < cps.len() && cps[next_cp] <= t {
                    traj.checkpoints.push(Checkpoint { t, profile: u.clone() });
                    next_cp += 1;
                }
                if schedule.adaptive {
                    since_growth += 1;
                    if since_growth >= schedule.n_grow {
                        tau = (tau * schedule.growth).min(schedule.tau_max);
                        since_growth = 0;
                    }
                }
            }
            Err(err @ (EpiError::NonConvergence { .. } | EpiError::Degenerate { .. })) => {
                halvings += 1;
                if halvings > schedule.max_halvings {
                    traj.aborted = Some(format!("step rejected {halvings} times at t = {t}: {err}"));
                    break;
                }
                tau = 0.5 * step;
                since_growth = 0;
            }
            Err(err) => return Err(err),
        }
    }
    Ok(traj)
}

/// Named initial-profile families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InitialProfile {
    Zero,
    /// `v0 = a(1 + ρ cos(2πkx))`, `|ρ| < 1`.
    Cosine { rho: f64, k: usize },
    /// Random modes `1..=modes` with `|v̂(k)| ≤ amplitude·a/k`, redrawn until
    /// `min v0 > margin·a`.
    Random { seed: u64, modes: usize, amplitude: f64 },
}

/// Rejection threshold for random initial data, as a fraction of `a`.
pub const RANDOM_MARGIN: f64 = 0.05;

impl InitialProfile {
    pub fn build(&self, grid: &Arc<GridSpec>, p: &ModelParams) -> Result<Profile> {
        let zero = Complex64::new(0.0, 0.0);
        match *self {
            InitialProfile::Zero => Ok(Profile::zeros(grid)),
            InitialProfile::Cosine { rho, k } => {
                if !(rho.is_finite() && rho.abs() < 1.0) {
                    return Err(EpiError::InvalidParameter(format!(
                        "initial profile violates v > 0: |rho| must be below 1, got {rho}"
                    )));
                }
                if k == 0 || k >= grid.nyquist() {
                    return Err(EpiError::InvalidParameter(format!(
                        "wavenumber must lie in 1..{}, got {k}",
                        grid.nyquist()
                    )));
                }
                let mut c = vec![zero; grid.nyquist() + 1];
                let w = 2.0 * PI * k as f64;
                c[k] = Complex64::new(-0.5 * p.a * rho / (w * w), 0.0);
                Profile::from_coeffs(grid, c)
            }
            InitialProfile::Random { seed, modes, amplitude } => {
                if modes == 0 || modes > grid.dealias_cutoff() {
                    return Err(EpiError::InvalidParameter(format!(
                        "modes must lie in 1..={}, got {modes}",
                        grid.dealias_cutoff()
                    )));
                }
                if !(amplitude.is_finite() && amplitude > 0.0) {
                    return Err(EpiError::InvalidParameter(format!(
                        "amplitude must be positive, got {amplitude}"
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..1000 {
                    let u = random_band_limited(grid, &mut rng, modes, amplitude * p.a)?;
                    if p.a + u.second_derivative().min() > RANDOM_MARGIN * p.a {
                        return Ok(u);
                    }
                }
                Err(EpiError::InvalidParameter(
                    "initial profile violates v > 0: no admissible random draw".into(),
                ))
            }
        }
    }
}

/// Zero-mean profile with `u_xx` band-limited to `1..=modes` and
/// `|û_xx(k)| ≤ scale/k`.
pub fn random_band_limited(
    grid: &Arc<GridSpec>,
    rng: &mut impl Rng,
    modes: usize,
    scale: f64,
) -> Result<Profile> {
    let mut c = vec![Complex64::new(0.0, 0.0); grid.nyquist() + 1];
    for (k, ck) in c.iter_mut().enumerate().take(modes + 1).skip(1) {
        let w = 2.0 * PI * k as f64;
        let re: f64 = rng.gen_range(-1.0..1.0);
        let im: f64 = rng.gen_range(-1.0..1.0);
        *ck = Complex64::new(re, im) * (0.5 * scale / (k as f64 * w * w)) * -1.0;
    }
    Profile::from_coeffs(grid, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::flat_energy;
    use crate::subgradient::subgrad;

    fn setup(n: usize) -> (Arc<GridSpec>, ModelParams) {
        (GridSpec::new(n).unwrap(), ModelParams::new(1.0).unwrap())
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let (g, p) = setup(32);
        let r = prox_step(&Profile::zeros(&g), 1e-3, &p, &ProxSettings::default()).unwrap();
        assert_eq!(r.next.l2_norm(), 0.0);
        assert_eq!(r.energy_drop, 0.0);
        assert_eq!(r.newton_iters, 0);
        assert_eq!(explicit_step(&Profile::zeros(&g), 1e-9, &p).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn prox_residual_and_dissipation() {
        let (g, p) = setup(64);
        let u = InitialProfile::Cosine { rho: 0.5, k: 1 }.build(&g, &p).unwrap();
        for &tau in &[1e-5, 1e-3, 1e-1] {
            let r = prox_step(&u, tau, &p, &ProxSettings::default()).unwrap();
            assert!(r.energy_drop > 0.0);
            let dq = r.next.distance(&u).unwrap() / tau;
            assert!(r.energy_drop >= 0.5 * tau * dq * dq);
            let sg = subgrad(&r.next, &p).unwrap();
            let res = r
                .next
                .lincomb(1.0 / tau, &u, -1.0 / tau)
                .unwrap()
                .field()
                .lincomb(1.0, &sg.field, 1.0)
                .unwrap()
                .l2_norm();
            assert!(res <= 1e-9 / tau, "tau {tau}: residual {res}");
        }
    }

    #[test]
    fn small_tau_matches_explicit_euler() {
        let (g, p) = setup(64);
        // small amplitude: the harmonics the nonlinearity feeds have stiff
        // symbols and leave the asymptotic regime first
        let u = InitialProfile::Cosine { rho: 0.05, k: 1 }.build(&g, &p).unwrap();
        let sg = subgrad(&u, &p).unwrap();
        let mut errs = Vec::new();
        for &tau in &[1e-5, 1e-6] {
            let r = prox_step(&u, tau, &p, &ProxSettings::default()).unwrap();
            let euler = u.field().lincomb(1.0, &sg.field, -tau).unwrap();
            errs.push(r.next.field().lincomb(1.0, &euler, -1.0).unwrap().l2_norm());
        }
        let order = (errs[0] / errs[1]).log10();
        assert!(order > 1.8, "{errs:?}");
    }

    #[test]
    fn newton_is_independent_of_the_initial_guess() {
        let (g, p) = setup(64);
        let u = InitialProfile::Cosine { rho: 0.6, k: 2 }.build(&g, &p).unwrap();
        let s = ProxSettings::default();
        let a = prox_step(&u, 1e-3, &p, &s).unwrap();
        let b = prox_step_from(&u, &Profile::zeros(&g), 1e-3, &p, &s).unwrap();
        assert!(a.next.distance(&b.next).unwrap() <= 10.0 * s.tol * u.l2_norm());
    }

    #[test]
    fn rejects_bad_input() {
        let (g, p) = setup(32);
        let u = Profile::zeros(&g);
        assert!(prox_step(&u, 0.0, &p, &ProxSettings::default()).is_err());
        assert!(InitialProfile::Cosine { rho: 1.5, k: 1 }.build(&g, &p).is_err());
        assert!(InitialProfile::Cosine { rho: 0.5, k: 0 }.build(&g, &p).is_err());
    }

    #[test]
    fn random_profiles_respect_margin_and_seed() {
        let (g, p) = setup(64);
        let fam = InitialProfile::Random { seed: 7, modes: 6, amplitude: 0.5 };
        let u = fam.build(&g, &p).unwrap();
        assert!(p.a + u.second_derivative().min() > RANDOM_MARGIN);
        assert_eq!(u.coeffs(), fam.build(&g, &p).unwrap().coeffs());
    }

    #[test]
    fn evolve_decays_to_flat_state() {
        let (g, p) = setup(64);
        let u0 = InitialProfile::Cosine { rho: 0.5, k: 1 }.build(&g, &p).unwrap();
        let sched = StepSchedule {
            t_final: 0.05,
            checkpoint_times: vec![0.0, 0.01, 0.05],
            ..StepSchedule::default()
        };
        let traj = evolve(&u0, &sched, &p).unwrap();
        assert!(traj.aborted.is_none());
        for w in traj.samples.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!(w[1].excess < w[0].excess || w[1].excess == 0.0);
            assert!(w[1].energy <= w[0].energy);
        }
        let last = traj.samples.last().unwrap();
        assert_eq!(last.t, 0.05);
        assert!((last.energy - flat_energy(1.0)).abs() < 1e-12);
        let times: Vec<f64> = traj.checkpoints.iter().map(|c| c.t).collect();
        assert_eq!(times, vec![0.0, 0.01, 0.05]);
    }

    #[test]
    fn flat_start_stays_flat() {
        let (g, p) = setup(32);
        let traj = evolve(&Profile::zeros(&g), &StepSchedule::fixed(1e-2, 0.1), &p).unwrap();
        assert!(traj.samples.iter().all(|s| s.l2_u == 0.0 && s.slope == 0.0));
        assert_eq!(traj.samples.len(), 11);
    }

    #[test]
    fn rk4_blows_up_beyond_its_stability_limit() {
        let (g, p) = setup(16);
        let u0 = InitialProfile::Cosine { rho: 0.1, k: 1 }.build(&g, &p).unwrap();
        // seed every mode so the stiffest one is present
        let noise = random_band_limited(&g, &mut ChaCha8Rng::seed_from_u64(1), 5, 1e-6).unwrap();
        let u0 = u0.lincomb(1.0, &noise, 1.0).unwrap();
        let lim = rk4_stability_limit(&u0, &p).unwrap();
        let stable = evolve_explicit(&u0, 0.5 * lim, 400.0 * lim, &p).unwrap();
        assert!(stable.l2_norm() < u0.l2_norm());
        let unstable = evolve_explicit(&u0, 4.0 * lim, 400.0 * lim, &p);
        match unstable {
            Err(_) => {}
            Ok(u) => assert!(u.l2_norm() > 1e3 * u0.l2_norm()),
        }
    }
}
