//! Block-wise TDSE for GHZ preparation and the resulting fidelity.
//!
//! The Hamiltonian commutes with Sₓ, so the initial state |1…1⟩ ⊗ |0⟩ is
//! split into Sₓ = m components with weights C(n, n/2 − m)/2ⁿ and each phonon
//! state |ψ_m⟩ is evolved from the vacuum on its own truncated Fock space.
//!
//! Time stepping uses the fourth-order commutator-free Magnus scheme
//! `U(h) = exp(−ih(a₁H₁ + a₂H₂)) exp(−ih(a₂H₁ + a₁H₂))` with H at the two
//! Gauss points. Each exponent is again `c Â + c* Â†` and is applied with a
//! Taylor series carried to machine precision on the occupied Fock range.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{apply_tridiagonal, build_block, BlockHamiltonian, MIN_CUTOFF};
use crate::moments::{block_weight, twice_m_values};
use crate::pulse::Pulse;
use crate::trajectory::{integrate_trajectory, DEFAULT_STEPS};
use crate::C64;

pub const DEFAULT_TIME_STEPS: usize = 2048;
pub const MIN_TIME_STEPS: usize = 256;
pub const DEFAULT_STEP_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_CUTOFF_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_REFINEMENTS: usize = 4;

/// Population of the top 5% of Fock levels above which a block is rejected.
pub const LEAKAGE_TOLERANCE: f64 = 1e-8;

const SQRT3: f64 = 1.732_050_807_568_877_2;
const GAUSS_LO: f64 = 0.5 - SQRT3 / 6.0;
const GAUSS_HI: f64 = 0.5 + SQRT3 / 6.0;
const CF_SMALL: f64 = 0.25 - SQRT3 / 6.0;
const CF_LARGE: f64 = 0.25 + SQRT3 / 6.0;

/// Largest ‖τX‖ handled by a single Taylor series before sub-stepping.
const TAYLOR_RADIUS: f64 = 1.5;
const TAYLOR_MAX_TERMS: usize = 60;
const TRIM_THRESHOLD: f64 = 1e-36;

/// Final phonon state of one block plus diagnostics.
#[derive(Clone, Debug)]
pub struct BlockEvolution {
    pub twice_m: i32,
    pub state: Vec<C64>,
    pub norm_drift: f64,
    /// Largest population of the top 5% Fock levels seen during the pulse.
    pub leakage: f64,
}

impl BlockEvolution {
    pub fn vacuum_overlap(&self) -> C64 {
        self.state[0]
    }
}

struct Propagator<'a> {
    entries: &'a [f64],
    cutoff: usize,
    psi: Vec<C64>,
    term: Vec<C64>,
    next: Vec<C64>,
    /// psi is zero from this index on.
    support: usize,
}

impl<'a> Propagator<'a> {
    fn new(entries: &'a [f64], cutoff: usize) -> Self {
        let mut psi = vec![C64::new(0.0, 0.0); cutoff];
        psi[0] = C64::new(1.0, 0.0);
        Propagator {
            entries,
            cutoff,
            psi,
            term: vec![C64::new(0.0, 0.0); cutoff],
            next: vec![C64::new(0.0, 0.0); cutoff],
            support: 1,
        }
    }

    /// psi ← exp(−iτ(cÂ + c*Â†)) psi
    fn exp_step(&mut self, c: C64, tau: f64) {
        if c.norm() == 0.0 || tau == 0.0 {
            return;
        }
        let reach = (self.support + 48).min(self.cutoff - 1);
        let emax = self.entries[..reach].iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let bound = 2.0 * tau * c.norm() * emax;
        let pieces = (bound / TAYLOR_RADIUS).ceil().max(1.0) as usize;
        let sub = tau / pieces as f64;
        for _ in 0..pieces {
            self.taylor(c, sub);
        }
    }

    fn taylor(&mut self, c: C64, tau: f64) {
        let mut len = self.support;
        self.term[..len].copy_from_slice(&self.psi[..len]);
        for k in 1..=TAYLOR_MAX_TERMS {
            let new_len = (len + 1).min(self.cutoff);
            if new_len > len {
                self.term[len] = C64::new(0.0, 0.0);
            }
            apply_tridiagonal(self.entries, c, &self.term, &mut self.next, new_len);
            let factor = C64::new(0.0, -tau / k as f64);
            let mut size = 0.0;
            for n in 0..new_len {
                let v = self.next[n] * factor;
                self.term[n] = v;
                self.psi[n] += v;
                size += v.norm_sqr();
            }
            len = new_len;
            if size < 1e-34 {
                break;
            }
        }
        self.support = len;
        while self.support > 1 && self.psi[self.support - 1].norm_sqr() < TRIM_THRESHOLD {
            self.psi[self.support - 1] = C64::new(0.0, 0.0);
            self.support -= 1;
        }
    }

    fn top_population(&self) -> f64 {
        let band = ((self.cutoff as f64) * 0.05).ceil() as usize;
        let start = self.cutoff - band.max(1);
        if self.support <= start {
            return 0.0;
        }
        self.psi[start..self.support].iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Evolves the block from the phonon vacuum over the pulse duration with
/// `time_steps` uniform steps.
pub fn evolve_block(block: &BlockHamiltonian<'_>, time_steps: usize) -> Result<BlockEvolution> {
    if time_steps < MIN_TIME_STEPS {
        return Err(invalid("time_steps", format!("need at least {MIN_TIME_STEPS}, got {time_steps}")));
    }
    let time_steps = time_steps + time_steps % 2;
    let cutoff = block.cutoff();
    let mut prop = Propagator::new(block.ladder().entries(), cutoff);
    let mut leakage = 0.0f64;
    if block.twice_m() != 0 {
        let h = block.pulse().duration() / time_steps as f64;
        for i in 0..time_steps {
            let t0 = i as f64 * h;
            let c1 = block.coupling(t0 + GAUSS_LO * h);
            let c2 = block.coupling(t0 + GAUSS_HI * h);
            prop.exp_step(c1 * CF_LARGE + c2 * CF_SMALL, h);
            prop.exp_step(c1 * CF_SMALL + c2 * CF_LARGE, h);
            leakage = leakage.max(prop.top_population());
        }
    }
    if leakage > LEAKAGE_TOLERANCE {
        return Err(Error::Leakage { twice_m: block.twice_m(), cutoff, leakage });
    }
    let norm: f64 = prop.psi.iter().map(|z| z.norm_sqr()).sum();
    Ok(BlockEvolution { twice_m: block.twice_m(), state: prop.psi, norm_drift: (norm - 1.0).abs(), leakage })
}

/// e^{iπm²/2} with m = twice_m/2, reduced exactly modulo 2π.
fn ideal_phase(twice_m: i32) -> C64 {
    let r = (twice_m as i64 * twice_m as i64).rem_euclid(16) as f64;
    C64::from_polar(1.0, PI * r / 8.0)
}

/// F = |Σ_m e^{iπm²/2} C(n, n/2 − m)/2ⁿ ⟨0|ψ_m⟩|².
///
/// `overlaps` holds `(2m, ⟨0|ψ_m⟩)` for every m ∈ {−n/2, …, n/2}.
pub fn ghz_fidelity(overlaps: &[(i32, C64)], n: u32) -> f64 {
    let amp: C64 = overlaps
        .iter()
        .map(|&(twice_m, ov)| ideal_phase(twice_m) * ov * block_weight(n, twice_m))
        .sum();
    amp.norm_sqr()
}

/// 1 − Σ_m w_m |⟨0|ψ_m⟩|²: probability of leaving the phonon vacuum.
pub fn phonon_excitation(overlaps: &[(i32, C64)], n: u32) -> f64 {
    let stay: f64 = overlaps.iter().map(|&(twice_m, ov)| block_weight(n, twice_m) * ov.norm_sqr()).sum();
    (1.0 - stay).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "levels")]
pub enum Cutoff {
    /// Per-block dimension from the classical displacement 2|α|max·|m|.
    Auto,
    Fixed(usize),
}

#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub n: u32,
    pub eta: f64,
    pub pulse: Pulse,
    pub cutoff: Cutoff,
    pub time_steps: usize,
    /// Absolute tolerance on the infidelity change under step doubling.
    pub step_tolerance: f64,
    /// Absolute tolerance on the infidelity change under cutoff doubling.
    pub cutoff_tolerance: f64,
    pub max_refinements: usize,
    /// Repeat with doubled steps and cutoffs until both deltas meet tolerance.
    pub check_convergence: bool,
    /// Fill m < 0 blocks from m > 0 by parity (verified on the smallest |m|).
    pub use_block_symmetry: bool,
}

impl SimulationConfig {
    pub fn new(n: u32, eta: f64, pulse: Pulse) -> SimulationConfig {
        SimulationConfig {
            n,
            eta,
            pulse,
            cutoff: Cutoff::Auto,
            time_steps: DEFAULT_TIME_STEPS,
            step_tolerance: DEFAULT_STEP_TOLERANCE,
            cutoff_tolerance: DEFAULT_CUTOFF_TOLERANCE,
            max_refinements: DEFAULT_MAX_REFINEMENTS,
            check_convergence: true,
            use_block_symmetry: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid("n", format!("need at least two ions, got {}", self.n)));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(invalid("eta", format!("must lie in (0, 1), got {}", self.eta)));
        }
        if self.time_steps < MIN_TIME_STEPS {
            return Err(invalid("time_steps", format!("need at least {MIN_TIME_STEPS}, got {}", self.time_steps)));
        }
        if let Cutoff::Fixed(c) = self.cutoff {
            if c < MIN_CUTOFF {
                return Err(invalid("cutoff", format!("need at least {MIN_CUTOFF}, got {c}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Diagnostics {
    pub time_steps: usize,
    /// (2m, Fock dimension) for every evolved block.
    pub cutoffs: Vec<(i32, usize)>,
    pub max_leakage: f64,
    pub max_norm_drift: f64,
    pub step_delta: Option<f64>,
    pub cutoff_delta: Option<f64>,
    pub refinements: usize,
    pub block_symmetry_used: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockOverlap {
    pub twice_m: i32,
    pub overlap: C64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationResult {
    pub n: u32,
    pub eta: f64,
    pub fidelity: f64,
    pub infidelity: f64,
    pub phonon_prob: f64,
    pub overlaps: Vec<BlockOverlap>,
    pub diagnostics: Diagnostics,
}

impl SimulationResult {
    pub fn overlap_pairs(&self) -> Vec<(i32, C64)> {
        self.overlaps.iter().map(|o| (o.twice_m, o.overlap)).collect()
    }
}

/// Fock dimension for a block with classical displacement d = 2|α|max·|m|:
/// d² + 8d + 16 (coherent-state support plus margin).
pub fn auto_cutoff(alpha_max: f64, twice_m: i32) -> usize {
    let d = alpha_max * twice_m.unsigned_abs() as f64;
    ((d * d + 8.0 * d + 16.0).ceil() as usize).max(MIN_CUTOFF)
}

fn evolve_with_retry(
    cfg: &SimulationConfig,
    twice_m: i32,
    base_cutoff: usize,
    time_steps: usize,
) -> Result<BlockEvolution> {
    let mut cutoff = base_cutoff;
    loop {
        let block = build_block(twice_m, &cfg.pulse, cfg.eta, cutoff)?;
        match evolve_block(&block, time_steps) {
            Err(Error::Leakage { .. }) if cfg.cutoff == Cutoff::Auto && cutoff < 64 * base_cutoff => {
                cutoff *= 2;
            }
            other => return other,
        }
    }
}

fn run_once(cfg: &SimulationConfig, alpha_max: f64, time_steps: usize, cutoff_scale: usize) -> Result<SimulationResult> {
    let n = cfg.n;
    let cutoff_for = |twice_m: i32| -> usize {
        let base = match cfg.cutoff {
            Cutoff::Auto => auto_cutoff(alpha_max, twice_m),
            Cutoff::Fixed(c) => c,
        };
        base * cutoff_scale
    };
    let all: Vec<i32> = twice_m_values(n).collect();

    let mut symmetric = cfg.use_block_symmetry;
    if symmetric {
        // parity maps H_m to H_{−m}; confirm on the cheapest nonzero block
        let probe = if n % 2 == 0 { 2 } else { 1 };
        let plus = evolve_with_retry(cfg, probe, cutoff_for(probe), time_steps)?;
        let minus = evolve_with_retry(cfg, -probe, cutoff_for(probe), time_steps)?;
        symmetric = (plus.vacuum_overlap() - minus.vacuum_overlap()).norm() <= 1e-12;
    }
    let to_run: Vec<i32> = if symmetric { all.iter().copied().filter(|&m| m >= 0).collect() } else { all.clone() };

    let evolved: Vec<BlockEvolution> = to_run
        .par_iter()
        .map(|&m| evolve_with_retry(cfg, m, cutoff_for(m), time_steps))
        .collect::<Result<_>>()?;

    let mut diagnostics = Diagnostics {
        time_steps,
        block_symmetry_used: symmetric,
        ..Default::default()
    };
    let mut overlaps = Vec::with_capacity(all.len());
    for ev in &evolved {
        diagnostics.cutoffs.push((ev.twice_m, ev.state.len()));
        diagnostics.max_leakage = diagnostics.max_leakage.max(ev.leakage);
        diagnostics.max_norm_drift = diagnostics.max_norm_drift.max(ev.norm_drift);
        overlaps.push((ev.twice_m, ev.vacuum_overlap()));
        if symmetric && ev.twice_m > 0 {
            overlaps.push((-ev.twice_m, ev.vacuum_overlap()));
        }
    }
    overlaps.sort_by_key(|&(m, _)| m);
    let fidelity = ghz_fidelity(&overlaps, n);
    Ok(SimulationResult {
        n,
        eta: cfg.eta,
        fidelity,
        infidelity: 1.0 - fidelity,
        phonon_prob: phonon_excitation(&overlaps, n),
        overlaps: overlaps.into_iter().map(|(twice_m, overlap)| BlockOverlap { twice_m, overlap }).collect(),
        diagnostics,
    })
}

/// Runs every Sₓ block and assembles fidelity and phonon excitation. With
/// `check_convergence`, step count and cutoffs are doubled until the
/// infidelity is stable to the configured tolerances.
pub fn simulate(cfg: &SimulationConfig) -> Result<SimulationResult> {
    cfg.validate()?;
    let traj = integrate_trajectory(&cfg.pulse, cfg.eta, DEFAULT_STEPS)?;
    let alpha_max = traj.max_abs();

    let mut steps = cfg.time_steps;
    let mut scale = 1;
    let mut base = run_once(cfg, alpha_max, steps, scale)?;
    if !cfg.check_convergence {
        return Ok(base);
    }
    let (mut step_delta, mut cutoff_delta) = (f64::NAN, f64::NAN);
    for attempt in 0..=cfg.max_refinements {
        let fine = run_once(cfg, alpha_max, 2 * steps, scale)?;
        let wide = run_once(cfg, alpha_max, 2 * steps, 2 * scale)?;
        step_delta = (fine.infidelity - base.infidelity).abs();
        cutoff_delta = (wide.infidelity - fine.infidelity).abs();
        let step_ok = step_delta <= cfg.step_tolerance;
        let cutoff_ok = cutoff_delta <= cfg.cutoff_tolerance;
        if step_ok && cutoff_ok {
            let mut out = fine;
            out.diagnostics.step_delta = Some(step_delta);
            out.diagnostics.cutoff_delta = Some(cutoff_delta);
            out.diagnostics.refinements = attempt;
            return Ok(out);
        }
        steps *= 2;
        if !cutoff_ok {
            scale *= 2;
            base = wide;
        } else {
            base = fine;
        }
    }
    Err(Error::NotConverged { attempts: cfg.max_refinements + 1, step_delta, cutoff_delta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{echo_transform, make_lemniscate, make_rectangular};
    use crate::trajectory::chi_phase;

    #[test]
    fn ideal_overlaps_give_unit_fidelity() {
        for n in [2u32, 5, 12] {
            let ov: Vec<(i32, C64)> = twice_m_values(n)
                .map(|tm| {
                    let m = 0.5 * tm as f64;
                    (tm, C64::from_polar(1.0, -PI * m * m / 2.0))
                })
                .collect();
            assert!((ghz_fidelity(&ov, n) - 1.0).abs() < 1e-14);
            assert!(phonon_excitation(&ov, n) < 1e-14);
            let zeros: Vec<(i32, C64)> = twice_m_values(n).map(|tm| (tm, C64::new(0.0, 0.0))).collect();
            assert_eq!(ghz_fidelity(&zeros, n), 0.0);
        }
    }

    #[test]
    fn zero_block_is_stationary() {
        let p = make_rectangular(1, 1.0, 0.03).unwrap();
        let b = build_block(0, &p, 0.03, 16).unwrap();
        let ev = evolve_block(&b, 256).unwrap();
        assert_eq!(ev.vacuum_overlap(), C64::new(1.0, 0.0));
        assert!(ev.state[1..].iter().all(|z| *z == C64::new(0.0, 0.0)));
    }

    fn coherent(beta: C64, dim: usize) -> Vec<C64> {
        let mut out = Vec::with_capacity(dim);
        let mut c = C64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
        for k in 0..dim {
            out.push(c);
            c = c * beta / ((k + 1) as f64).sqrt();
        }
        out
    }

    #[test]
    fn small_eta_matches_displacement_solution() {
        // Open trajectory: δ away from the gate condition.
        let eta = 1e-6;
        let p = Pulse::from_samples(vec![C64::new(1.3 / eta, 0.0); 4], 1.0, 3.7).unwrap();
        let traj = integrate_trajectory(&p, eta, 4096).unwrap();
        let alpha = traj.endpoint();
        let chi = chi_phase(&traj);
        for twice_m in [1, 2, 5] {
            let m = 0.5 * twice_m as f64;
            let block = build_block(twice_m, &p, eta, 60).unwrap();
            let ev = evolve_block(&block, 2048).unwrap();
            let target = coherent(alpha * (2.0 * m), 60);
            let phase = C64::from_polar(1.0, -2.0 * chi * m * m);
            let err: f64 = ev.state.iter().zip(&target).map(|(a, b)| (a - b * phase).norm_sqr()).sum();
            assert!(err.sqrt() < 1e-9, "2m={twice_m}: {}", err.sqrt());
        }
    }

    #[test]
    fn small_eta_gate_overlap_is_ideal_phase() {
        let eta = 1e-6;
        let p = make_rectangular(1, 1.0, eta).unwrap();
        for twice_m in [2, 4] {
            let m = 0.5 * twice_m as f64;
            let block = build_block(twice_m, &p, eta, 40).unwrap();
            let ev = evolve_block(&block, 1024).unwrap();
            let ideal = C64::from_polar(1.0, -PI * m * m / 2.0);
            assert!((ev.vacuum_overlap() - ideal).norm() < 1e-9);
        }
    }

    #[test]
    fn parity_symmetry_of_blocks() {
        let eta = 0.05;
        let pulses = [
            make_rectangular(2, 1.0, eta).unwrap(),
            echo_transform(&make_rectangular(1, 1.0, eta).unwrap()),
            make_lemniscate(0.72, 0.95, 1.0, eta).unwrap(),
            echo_transform(&make_lemniscate(0.72, 0.95, 1.0, eta).unwrap()),
        ];
        for p in &pulses {
            for twice_m in [1, 4] {
                let plus = evolve_block(&build_block(twice_m, p, eta, 80).unwrap(), 512).unwrap();
                let minus = evolve_block(&build_block(-twice_m, p, eta, 80).unwrap(), 512).unwrap();
                assert!((plus.vacuum_overlap() - minus.vacuum_overlap()).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn unitarity_of_blocks() {
        let p = make_lemniscate(0.73, 0.96, 1.0, 0.04).unwrap();
        let block = build_block(8, &p, 0.04, auto_cutoff(2.0, 8)).unwrap();
        let ev = evolve_block(&block, 1024).unwrap();
        assert!(ev.norm_drift < 1e-10, "{}", ev.norm_drift);
    }

    #[test]
    fn leakage_is_reported() {
        let p = make_rectangular(1, 1.0, 0.03).unwrap();
        let block = build_block(12, &p, 0.03, 10).unwrap();
        assert!(matches!(evolve_block(&block, 512), Err(Error::Leakage { .. })));
    }

    #[test]
    fn step_count_is_validated() {
        let p = make_rectangular(1, 1.0, 0.03).unwrap();
        let block = build_block(2, &p, 0.03, 16).unwrap();
        assert!(evolve_block(&block, 100).is_err());
    }

    #[test]
    fn two_ion_simulation_runs() {
        let p = make_rectangular(1, 1.0, 0.03).unwrap();
        let r = simulate(&SimulationConfig::new(2, 0.03, p)).unwrap();
        assert!((0.0..=1.0).contains(&r.fidelity));
        assert!(r.infidelity < 1e-3);
        assert_eq!(r.overlaps.len(), 3);
        assert!(r.diagnostics.step_delta.unwrap() <= 1e-9);
    }
}
