//! All-order Lamb-Dicke Hamiltonian after the rotating-wave approximation,
//! restricted to one collective-spin eigenvalue Sₓ = m.
//!
//! The modified annihilation operator `Â = (1/iη) Σₙ ⟨n|e^{iη(a+a†)}|n+1⟩ |n⟩⟨n+1|`
//! has real elements `e^{−η²/2} L¹ₙ(η²)/√(n+1)`, so each block Hamiltonian
//! `H_m(t) = η m (c(t) Â + c*(t) Â†)`, `c(t) = Ω*(t) e^{iδt}`, is tridiagonal
//! with zero diagonal on the truncated Fock space.

use crate::error::{invalid, Result};
use crate::pulse::Pulse;
use crate::C64;

/// Generalized Laguerre values L¹ₖ(x) for k = 0..len by upward recurrence.
pub fn laguerre1_sequence(x: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    out.push(1.0);
    if len == 1 {
        return out;
    }
    out.push(2.0 - x);
    for k in 1..len - 1 {
        let kf = k as f64;
        let next = ((2.0 * kf + 2.0 - x) * out[k] - (kf + 1.0) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// ⟨n|Â|n+1⟩ = e^{−η²/2} L¹ₙ(η²)/√(n+1). Real; tends to √(n+1) as η → 0.
pub fn ladder_matrix_element(n: usize, eta: f64) -> f64 {
    let x = eta * eta;
    let l = laguerre1_sequence(x, n + 1)[n];
    (-0.5 * x).exp() * l / ((n + 1) as f64).sqrt()
}

/// ⟨n|e^{iη(a+a†)}|n+1⟩ = iη e^{−η²/2} L¹ₙ(η²)/√(n+1).
pub fn displacement_element(n: usize, eta: f64) -> C64 {
    C64::new(0.0, eta * ladder_matrix_element(n, eta))
}

/// Off-diagonal of Â on a Fock space of dimension `cutoff`.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderOperator {
    eta: f64,
    offdiag: Vec<f64>,
}

impl LadderOperator {
    pub fn new(eta: f64, cutoff: usize) -> LadderOperator {
        let x = eta * eta;
        let damp = (-0.5 * x).exp();
        let offdiag = laguerre1_sequence(x, cutoff.saturating_sub(1))
            .into_iter()
            .enumerate()
            .map(|(n, l)| damp * l / ((n + 1) as f64).sqrt())
            .collect();
        LadderOperator { eta, offdiag }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn cutoff(&self) -> usize {
        self.offdiag.len() + 1
    }

    /// ⟨n|Â|n+1⟩ for n < cutoff − 1.
    pub fn entries(&self) -> &[f64] {
        &self.offdiag
    }
}

/// Time-dependent tridiagonal Hamiltonian of one Sₓ block.
#[derive(Clone, Debug)]
pub struct BlockHamiltonian<'p> {
    twice_m: i32,
    ladder: LadderOperator,
    pulse: &'p Pulse,
}

/// Minimum Fock dimension accepted by [`build_block`].
pub const MIN_CUTOFF: usize = 8;

pub fn build_block(twice_m: i32, pulse: &Pulse, eta: f64, cutoff: usize) -> Result<BlockHamiltonian<'_>> {
    if cutoff < MIN_CUTOFF {
        return Err(invalid("cutoff", format!("need at least {MIN_CUTOFF} Fock levels, got {cutoff}")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid("eta", format!("must lie in (0, 1), got {eta}")));
    }
    Ok(BlockHamiltonian { twice_m, ladder: LadderOperator::new(eta, cutoff), pulse })
}

impl<'p> BlockHamiltonian<'p> {
    pub fn twice_m(&self) -> i32 {
        self.twice_m
    }

    pub fn m(&self) -> f64 {
        0.5 * self.twice_m as f64
    }

    pub fn cutoff(&self) -> usize {
        self.ladder.cutoff()
    }

    pub fn eta(&self) -> f64 {
        self.ladder.eta
    }

    pub fn pulse(&self) -> &'p Pulse {
        self.pulse
    }

    pub fn ladder(&self) -> &LadderOperator {
        &self.ladder
    }

    /// Coefficient of Â in H_m(t): η m Ω*(t) e^{iδt}.
    pub fn coupling(&self, t: f64) -> C64 {
        self.pulse.drive(t).conj() * (self.ladder.eta * self.m())
    }

    /// Dense H_m(t), row-major. Intended for tests and small cutoffs.
    pub fn dense(&self, t: f64) -> Vec<Vec<C64>> {
        let n = self.cutoff();
        let c = self.coupling(t);
        let mut h = vec![vec![C64::new(0.0, 0.0); n]; n];
        for (k, &e) in self.ladder.offdiag.iter().enumerate() {
            h[k][k + 1] = c * e;
            h[k + 1][k] = c.conj() * e;
        }
        h
    }
}

/// `out[..len] = (c Â + c* Â†) psi[..len]`, with `psi` zero beyond `len`.
pub(crate) fn apply_tridiagonal(entries: &[f64], c: C64, psi: &[C64], out: &mut [C64], len: usize) {
    let cc = c.conj();
    for n in 0..len {
        let mut acc = C64::new(0.0, 0.0);
        if n + 1 < len {
            acc += c * entries[n] * psi[n + 1];
        }
        if n > 0 {
            acc += cc * entries[n - 1] * psi[n - 1];
        }
        out[n] = acc;
    }
}
