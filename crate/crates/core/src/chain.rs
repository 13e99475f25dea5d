//! Linear-chain stability bound and centre-of-mass Lamb-Dicke estimates.
//!
//! Frequencies are angular (rad/s); only ratios enter, so any common unit works.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Result};

/// ω_rec/2π for ⁴⁰Ca⁺ on the 729 nm transition, in Hz.
pub const CA40_RECOIL_HZ: f64 = 9390.6;

/// a_n ≈ 3n / (4√ln n), the radial-to-axial frequency ratio above which the
/// chain stays linear.
pub fn critical_anisotropy(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(invalid("n", format!("need at least two ions, got {n}")));
    }
    let n = n as f64;
    Ok(3.0 * n / (4.0 * n.ln().sqrt()))
}

/// Largest axial frequency keeping n ions linear: ω_radial / a_n.
pub fn max_axial_frequency(n: u32, omega_radial: f64) -> Result<f64> {
    positive("omega_radial", omega_radial)?;
    Ok(omega_radial / critical_anisotropy(n)?)
}

/// η = √(ω_rec / (ω_z n)) for the axial COM mode.
pub fn com_lamb_dicke(omega_recoil: f64, omega_axial: f64, n: u32) -> Result<f64> {
    positive("omega_recoil", omega_recoil)?;
    positive("omega_axial", omega_axial)?;
    if n == 0 {
        return Err(invalid("n", "need at least one ion"));
    }
    Ok((omega_recoil / (omega_axial * n as f64)).sqrt())
}

/// η at the stability-saturating axial frequency,
/// √(3ω_rec / 4ω_radial) (ln n)^{−1/4}.
pub fn combined_lamb_dicke(omega_recoil: f64, omega_radial: f64, n: u32) -> Result<f64> {
    positive("omega_recoil", omega_recoil)?;
    positive("omega_radial", omega_radial)?;
    if n < 2 {
        return Err(invalid("n", format!("need at least two ions, got {n}")));
    }
    Ok((3.0 * omega_recoil / (4.0 * omega_radial)).sqrt() * (n as f64).ln().powf(-0.25))
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {v}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainParams {
    pub species: String,
    pub n: u32,
    pub omega_radial: f64,
    pub omega_axial: f64,
    pub omega_recoil: f64,
}

impl ChainParams {
    /// Chain at the stability limit for the given radial frequency.
    pub fn at_stability_limit(species: &str, n: u32, omega_radial: f64, omega_recoil: f64) -> Result<ChainParams> {
        positive("omega_recoil", omega_recoil)?;
        Ok(ChainParams {
            species: species.to_string(),
            n,
            omega_radial,
            omega_axial: max_axial_frequency(n, omega_radial)?,
            omega_recoil,
        })
    }

    pub fn ca40(n: u32, radial_hz: f64) -> Result<ChainParams> {
        Self::at_stability_limit("40Ca+", n, 2.0 * PI * radial_hz, 2.0 * PI * CA40_RECOIL_HZ)
    }

    pub fn lamb_dicke(&self) -> Result<f64> {
        com_lamb_dicke(self.omega_recoil, self.omega_axial, self.n)
    }
}

/// One line of the chain table: (n, a_n, ω_z^max, η).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChainRow {
    pub n: u32,
    pub anisotropy: f64,
    pub omega_axial_max: f64,
    pub eta: f64,
}

pub fn chain_table(ns: &[u32], omega_radial: f64, omega_recoil: f64) -> Result<Vec<ChainRow>> {
    ns.iter()
        .map(|&n| {
            let omega_axial_max = max_axial_frequency(n, omega_radial)?;
            Ok(ChainRow {
                n,
                anisotropy: critical_anisotropy(n)?,
                omega_axial_max,
                eta: com_lamb_dicke(omega_recoil, omega_axial_max, n)?,
            })
        })
        .collect()
}
