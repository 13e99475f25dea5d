//! Phase-space trajectory of the centre-of-mass mode and the leading-order
//! Magnus coefficients of the out-of-Lamb-Dicke error operator.
//!
//! The trajectory `α(t) = −(iη/2) ∫₀ᵗ Ω e^{−iδs} ds` is integrated with the
//! three-stage Gauss–Legendre collocation rule on a uniform grid. Stage values
//! of α and of the velocity dα/dt are retained, so every coefficient below is
//! a sixth-order quadrature of the form `∫ F(α, dα/dt) dt` that never
//! evaluates the pulse on a grid point (pulse discontinuities sit on grid
//! points for even step counts).

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pulse::Pulse;
use crate::C64;

pub const DEFAULT_STEPS: usize = 4096;
pub const MIN_STEPS: usize = 64;

/// Endpoint change on step doubling above which quadrature is flagged.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-8;

const SQRT15: f64 = 3.872_983_346_207_417;
const NODES: [f64; 3] = [0.5 - SQRT15 / 10.0, 0.5, 0.5 + SQRT15 / 10.0];
const WEIGHTS: [f64; 3] = [5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0];
const COLLOCATION: [[f64; 3]; 3] = [
    [5.0 / 36.0, 2.0 / 9.0 - SQRT15 / 15.0, 5.0 / 36.0 - SQRT15 / 30.0],
    [5.0 / 36.0 + SQRT15 / 24.0, 2.0 / 9.0, 5.0 / 36.0 - SQRT15 / 24.0],
    [5.0 / 36.0 + SQRT15 / 30.0, 2.0 / 9.0 + SQRT15 / 15.0, 5.0 / 36.0],
];

#[derive(Clone, Copy, Debug, PartialEq)]
struct Stage {
    alpha: C64,
    velocity: C64,
}

/// Sampled phase trajectory α(t) on a uniform grid starting at t = 0.
#[derive(Clone, Debug)]
pub struct PhaseTrajectory {
    step: f64,
    alpha: Vec<C64>,
    stages: Vec<[Stage; 3]>,
    eta: f64,
    detuning: f64,
}

fn integrate_once(p: &Pulse, eta: f64, n_steps: usize) -> PhaseTrajectory {
    let h = p.duration() / n_steps as f64;
    let scale = C64::new(0.0, -0.5 * eta);
    let mut alpha = Vec::with_capacity(n_steps + 1);
    let mut stages = Vec::with_capacity(n_steps);
    let mut current = C64::new(0.0, 0.0);
    alpha.push(current);
    for i in 0..n_steps {
        let t0 = i as f64 * h;
        let v: [C64; 3] = std::array::from_fn(|j| scale * p.drive(t0 + NODES[j] * h));
        let stage: [Stage; 3] = std::array::from_fn(|j| {
            let inc: C64 = (0..3).map(|l| v[l] * COLLOCATION[j][l]).sum();
            Stage { alpha: current + inc * h, velocity: v[j] }
        });
        current += (0..3).map(|j| v[j] * WEIGHTS[j]).sum::<C64>() * h;
        alpha.push(current);
        stages.push(stage);
    }
    PhaseTrajectory { step: h, alpha, stages, eta, detuning: p.detuning() }
}

/// Integrates the phase trajectory of `p` with `n_steps` uniform steps
/// (rounded up to an even count). Fails when doubling the step count moves
/// the endpoint by more than [`CONVERGENCE_TOLERANCE`].
pub fn integrate_trajectory(p: &Pulse, eta: f64, n_steps: usize) -> Result<PhaseTrajectory> {
    if n_steps < MIN_STEPS {
        return Err(invalid("n_steps", format!("need at least {MIN_STEPS}, got {n_steps}")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid("eta", format!("must lie in (0, 1), got {eta}")));
    }
    let n_steps = n_steps + n_steps % 2;
    let coarse = integrate_once(p, eta, n_steps);
    let fine = integrate_once(p, eta, 2 * n_steps);
    let delta = (coarse.endpoint() - fine.endpoint()).norm();
    if delta > CONVERGENCE_TOLERANCE {
        return Err(Error::QuadratureNotConverged { delta });
    }
    Ok(coarse)
}

impl PhaseTrajectory {
    pub fn n_steps(&self) -> usize {
        self.stages.len()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    pub fn duration(&self) -> f64 {
        self.step * self.n_steps() as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.alpha.len()).map(move |i| i as f64 * self.step)
    }

    /// α on the grid points, starting at t = 0.
    pub fn alpha(&self) -> &[C64] {
        &self.alpha
    }

    pub fn endpoint(&self) -> C64 {
        *self.alpha.last().expect("trajectory is never empty")
    }

    /// Largest |α| over grid and stage points.
    pub fn max_abs(&self) -> f64 {
        self.alpha
            .iter()
            .copied()
            .chain(self.stages.iter().flat_map(|s| s.iter().map(|st| st.alpha)))
            .map(|a| a.norm())
            .fold(0.0, f64::max)
    }

    /// |α(T)| relative to the trajectory size.
    pub fn closure_error(&self) -> f64 {
        self.endpoint().norm() / self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// The same curve traversed backwards in time.
    pub fn reversed(&self) -> PhaseTrajectory {
        let alpha = self.alpha.iter().rev().copied().collect();
        let stages = self
            .stages
            .iter()
            .rev()
            .map(|s| {
                std::array::from_fn(|j| Stage { alpha: s[2 - j].alpha, velocity: -s[2 - j].velocity })
            })
            .collect();
        PhaseTrajectory { step: self.step, alpha, stages, eta: self.eta, detuning: self.detuning }
    }

    fn integrate<F>(&self, mut f: F) -> C64
    where
        F: FnMut(C64, C64) -> C64,
    {
        let mut acc = C64::new(0.0, 0.0);
        for stage in &self.stages {
            for (st, w) in stage.iter().zip(WEIGHTS) {
                acc += f(st.alpha, st.velocity) * w;
            }
        }
        acc * self.step
    }

    /// Writes `t,re_alpha,im_alpha` rows for the grid points.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "re_alpha", "im_alpha"])?;
        for (t, a) in self.times().zip(&self.alpha) {
            w.write_record(&[format!("{t:.12e}"), format!("{:.12e}", a.re), format!("{:.12e}", a.im)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Spin–spin phase χ = −i∫(α dα* − α* dα) = 2 Im∫ α dα*, four times the
/// clockwise-oriented enclosed area. Rectangular gate pulses give +π/4.
pub fn chi_phase(traj: &PhaseTrajectory) -> f64 {
    traj.integrate(|a, v| C64::new(2.0 * (a * v.conj()).im, 0.0)).re
}

/// Leading-order Magnus coefficients of the error operator
/// `T = σ a†a² Sₓ + h a†a Sₓ² + g₂ a†² Sₓ² + g a† Sₓ³ + θ₄ Sₓ⁴ + h.c.-terms`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagnusCoefficients {
    pub chi: f64,
    pub theta4: f64,
    pub g: C64,
    pub sigma: C64,
    pub h: f64,
    pub g2: C64,
    /// Imaginary part of the alternative closed-curve form `16iη²∫|α|²α dα*`
    /// of θ₄; equals 4η²|α(T)|⁴ and so vanishes only for closed trajectories.
    pub theta4_residue: f64,
}

/// Tolerance on the θ₄ residue, relative to η² · max(1, max|α|)⁴.
pub const THETA4_RESIDUE_TOLERANCE: f64 = 1e-8;

pub fn magnus_coefficients(traj: &PhaseTrajectory) -> Result<MagnusCoefficients> {
    let eta2 = traj.eta * traj.eta;
    let i = C64::i();
    let chi = chi_phase(traj);
    // 8iη² |α|² (α dα* − α* dα) is real pointwise.
    let theta4 = traj
        .integrate(|a, v| i * (a * v.conj() - a.conj() * v) * a.norm_sqr() * 8.0)
        .re
        * eta2;
    let alt = traj.integrate(|a, v| i * a * v.conj() * a.norm_sqr() * 16.0) * eta2;
    let g = traj.integrate(|a, v| a * a * v.conj() - v * a.norm_sqr() * 2.0) * (4.0 * eta2);
    let sigma = traj.integrate(|_, v| i * v.conj()) * eta2;
    let g2 = traj.integrate(|a, v| i * a.conj() * v.conj()) * (2.0 * eta2);
    let h = traj.integrate(|a, v| i * (a.conj() * v - a * v.conj())).re * (2.0 * eta2);

    let residue = alt.im;
    let scale = eta2 * traj.max_abs().max(1.0).powi(4);
    if residue.abs() > THETA4_RESIDUE_TOLERANCE * scale {
        return Err(Error::NonRealTheta4 { residue });
    }
    Ok(MagnusCoefficients { chi, theta4, g, sigma, h, g2, theta4_residue: residue })
}

/// Closed-form values of (χ, θ₄, |g|).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClosedForm {
    pub chi: f64,
    pub theta4: f64,
    pub g_abs: f64,
}

/// Rectangular pulse with `k` circles at the gate conditions.
pub fn rectangular_closed_form(k: u32, eta: f64) -> ClosedForm {
    let kf = k as f64;
    ClosedForm {
        chi: PI / 4.0,
        theta4: -3.0 * PI * eta * eta / (8.0 * kf),
        g_abs: PI * eta * eta / (2.0 * kf.sqrt()),
    }
}

/// Lemniscate pulse (curve = 2α): χ = πA²(1 − a) and
/// θ₄ = (π/2) η² A⁴ (3a³ − 7a² + 20a − 12). The echoed version keeps χ,
/// halves θ₄ and has g = 0.
pub fn lemniscate_closed_form(a: f64, amplitude: f64, eta: f64) -> (f64, f64) {
    let chi = PI * amplitude * amplitude * (1.0 - a);
    let theta4 = 0.5 * PI * eta * eta * amplitude.powi(4) * (((3.0 * a - 7.0) * a + 20.0) * a - 12.0);
    (chi, theta4)
}

/// The cubic 6 − 10a + (7/2)a² − (3/2)a³ whose root in (1/2, 1) makes θ₄ vanish.
pub fn design_cubic(a: f64) -> f64 {
    ((-1.5 * a + 3.5) * a - 10.0) * a + 6.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub a: f64,
    pub amplitude: f64,
}

/// Lemniscate parameters with θ₄ = 0 and χ = π/4:
/// a₀ is the root of [`design_cubic`] in (1/2, 1), A₀ = 1/(2√(1 − a₀)).
pub fn lemniscate_design_point() -> Result<DesignPoint> {
    let (mut lo, mut hi) = (0.5, 1.0);
    if design_cubic(lo).signum() == design_cubic(hi).signum() {
        return Err(Error::RootNotFound("design cubic has no sign change on (1/2, 1)".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if design_cubic(mid).signum() == design_cubic(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let mut a = 0.5 * (lo + hi);
    // one Newton polish
    let slope = (-4.5 * a + 7.0) * a - 10.0;
    a -= design_cubic(a) / slope;
    if !(a > 0.5 && a < 1.0) || design_cubic(a).abs() > 1e-12 {
        return Err(Error::RootNotFound(format!("bisection ended at a = {a}")));
    }
    Ok(DesignPoint { a, amplitude: 0.5 / (1.0 - a).sqrt() })
}
