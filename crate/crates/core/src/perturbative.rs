//! Leading-order analytic GHZ infidelity from the Magnus coefficients.
//!
//! With the error operator `T ≈ δθ₂ Sₓ² + θ₄ Sₓ⁴ + (g a† + g* a) Sₓ³` acting on
//! |1…1⟩ ⊗ |0⟩, the infidelity is the variance of T:
//!
//! ```text
//! 1 − F = θ₄² var4 + 2 δθ₂ θ₄ cov24 + δθ₂² var2 + |g|² ⟨Sₓ⁶⟩
//! ```
//!
//! δθ₂ = π ΔΩ'/Ω' is the amplitude error relative to the renormalised drive
//! Ω' = (1 − η²/2) Ω.

use std::f64::consts::PI;

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::moments::SpinMomentTable;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerturbativePrediction {
    pub delta_theta2_opt: f64,
    /// Optimal ΔΩ/Ω₀ of the raw drive, including the η²/2 renormalisation.
    pub delta_omega_rel: f64,
    pub infidelity: f64,
    pub phonon_prob: f64,
    pub sx4_contribution: f64,
}

fn f(x: num_rational::BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// P_ph = |g|² ⟨Sₓ⁶⟩.
pub fn phonon_probability(g: C64, n: u32) -> f64 {
    g.norm_sqr() * SpinMomentTable::new(n).get(6)
}

/// δθ₂ minimising the infidelity, and the corresponding ΔΩ/Ω₀ = δθ₂/π + η²/2.
pub fn optimal_amplitude(n: u32, theta4: f64, eta: f64) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(invalid("n", format!("need at least two ions, got {n}")));
    }
    let m = SpinMomentTable::new(n);
    let dt2 = -theta4 * f(m.cov24() / m.var2());
    Ok((dt2, dt2 / PI + 0.5 * eta * eta))
}

/// Maps a raw relative amplitude offset ΔΩ/Ω₀ to δθ₂.
pub fn delta_theta2_from_amplitude(delta_omega_rel: f64, eta: f64) -> f64 {
    PI * (delta_omega_rel - 0.5 * eta * eta)
}

/// Full quadratic form in δθ₂.
pub fn perturbative_infidelity(n: u32, theta4: f64, g: C64, delta_theta2: f64) -> f64 {
    let m = SpinMomentTable::new(n);
    theta4 * theta4 * f(m.var4())
        + 2.0 * delta_theta2 * theta4 * f(m.cov24())
        + delta_theta2 * delta_theta2 * f(m.var2())
        + g.norm_sqr() * m.get(6)
}

/// Optimum and the split of the optimal infidelity into its Sₓ⁴ and phonon parts.
pub fn predict(n: u32, theta4: f64, g: C64, eta: f64) -> Result<PerturbativePrediction> {
    let (dt2, rel) = optimal_amplitude(n, theta4, eta)?;
    let m = SpinMomentTable::new(n);
    let sx4 = theta4 * theta4 * f(m.optimal_bracket());
    let phonon = g.norm_sqr() * m.get(6);
    Ok(PerturbativePrediction {
        delta_theta2_opt: dt2,
        delta_omega_rel: rel,
        infidelity: sx4 + phonon,
        phonon_prob: phonon,
        sx4_contribution: sx4,
    })
}

/// One row of the ion-number table of the two error weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContributionRow {
    pub n: u32,
    /// Coefficient of θ₄² at the optimal amplitude.
    pub sx4_weight: f64,
    /// Coefficient of |g|², ⟨Sₓ⁶⟩.
    pub phonon_weight: f64,
    pub sx4_contribution: f64,
    pub phonon_contribution: f64,
}

pub fn contribution_table(ns: &[u32], theta4: f64, g: C64) -> Vec<ContributionRow> {
    ns.iter()
        .map(|&n| {
            let m = SpinMomentTable::new(n);
            let sx4_weight = f(m.optimal_bracket());
            let phonon_weight = m.get(6);
            ContributionRow {
                n,
                sx4_weight,
                phonon_weight,
                sx4_contribution: theta4 * theta4 * sx4_weight,
                phonon_contribution: g.norm_sqr() * phonon_weight,
            }
        })
        .collect()
}
