//! Parameter scans around the analytic gate conditions: amplitude scans of
//! (echoed) rectangular pulses, 2-D (δa, ΔA) scans of lemniscate pulses,
//! and sweeps over η and ion number with every point re-optimised.
//!
//! Grid points run on the rayon pool and are gathered by index, so tables
//! are bit-identical between runs. Local refinement is derivative-free
//! golden-section search.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::perturbative::predict;
use crate::pulse::{echo_transform, make_lemniscate, make_rectangular, Pulse};
use crate::tdse::{simulate, Cutoff, SimulationConfig, SimulationResult};
use crate::trajectory::{integrate_trajectory, lemniscate_design_point, magnus_coefficients, DEFAULT_STEPS};

/// η at which the default grids are centred; grids for other η are scaled by (η/η_ref)².
pub const REFERENCE_ETA: f64 = 0.03;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// `points` equally spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|j| {
                let t = j as f64 / (points - 1) as f64;
                lo * (1.0 - t) + hi * t
            })
            .collect(),
    }
}

pub fn default_amplitude_grid() -> Vec<f64> {
    linspace(-0.01, 0.02, 61)
}

pub fn default_delta_a_grid() -> Vec<f64> {
    linspace(-0.01, 0.01, 41)
}

pub fn default_delta_amp_grid() -> Vec<f64> {
    linspace(0.0, 0.02, 41)
}

/// Per-point solver settings shared by every scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverSettings {
    pub time_steps: usize,
    pub cutoff: Cutoff,
    /// Golden-section iterations per 1-D refinement.
    pub golden_iterations: usize,
    /// Re-run the optimum with step and cutoff doubling.
    pub verify_optimum: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { time_steps: 256, cutoff: Cutoff::Auto, golden_iterations: 12, verify_optimum: true }
    }
}

impl SolverSettings {
    fn config(&self, n: u32, eta: f64, pulse: Pulse) -> SimulationConfig {
        let mut cfg = SimulationConfig::new(n, eta, pulse);
        cfg.time_steps = self.time_steps;
        cfg.cutoff = self.cutoff;
        cfg.check_convergence = false;
        cfg
    }
}

/// Result of one simulation inside a scan; failures are kept, not propagated.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointValue {
    pub infidelity: f64,
    pub phonon_prob: f64,
    pub error: Option<String>,
}

impl PointValue {
    fn from_result(r: Result<SimulationResult>) -> PointValue {
        match r {
            Ok(r) => PointValue { infidelity: r.infidelity, phonon_prob: r.phonon_prob, error: None },
            Err(e) => PointValue { infidelity: f64::NAN, phonon_prob: f64::NAN, error: Some(e.to_string()) },
        }
    }

    /// Value minimised by the search; failed points never win.
    pub fn objective(&self) -> f64 {
        if self.error.is_some() || self.infidelity.is_nan() {
            f64::INFINITY
        } else {
            self.infidelity
        }
    }
}

fn evaluate(pulse: Result<Pulse>, n: u32, eta: f64, solver: &SolverSettings) -> PointValue {
    PointValue::from_result(pulse.and_then(|p| simulate(&solver.config(n, eta, p))))
}

/// Minimum of `f` on [lo, hi] by golden-section search. Returns the best
/// point seen, including the bracket ends supplied in `ends`.
fn golden_section<F>(f: F, lo: f64, hi: f64, iterations: usize, ends: [(f64, PointValue); 2]) -> (f64, PointValue)
where
    F: Fn(f64) -> PointValue,
{
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let [e0, e1] = ends;
    let mut best = if e0.1.objective() <= e1.1.objective() { e0 } else { e1 };
    for (x, v) in [(c, fc.clone()), (d, fd.clone())] {
        if v.objective() < best.1.objective() {
            best = (x, v);
        }
    }
    for _ in 0..iterations {
        if fc.objective() <= fd.objective() {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            if fc.objective() < best.1.objective() {
                best = (c, fc.clone());
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd.objective() < best.1.objective() {
                best = (d, fd.clone());
            }
        }
    }
    best
}

fn argmin(values: &[PointValue]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if v.objective().is_finite() && best.is_none_or(|b| v.objective() < values[b].objective()) {
            best = Some(i);
        }
    }
    best
}

fn check_grid(name: &'static str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid(name, "grid is empty"));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(name, "grid must be finite and strictly increasing"));
    }
    Ok(())
}

/// Neighbouring grid values around index `i`, clamped to the grid ends.
fn bracket(grid: &[f64], i: usize) -> (usize, usize) {
    (i.saturating_sub(1), (i + 1).min(grid.len() - 1))
}

/// Converged re-run at the located optimum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verification {
    pub infidelity: Option<f64>,
    pub phonon_prob: Option<f64>,
    pub step_delta: Option<f64>,
    pub cutoff_delta: Option<f64>,
    pub error: Option<String>,
}

fn verify(pulse: Result<Pulse>, n: u32, eta: f64, solver: &SolverSettings) -> Option<Verification> {
    if !solver.verify_optimum {
        return None;
    }
    let run = pulse.and_then(|p| {
        let mut cfg = solver.config(n, eta, p);
        cfg.check_convergence = true;
        simulate(&cfg)
    });
    Some(match run {
        Ok(r) => Verification {
            infidelity: Some(r.infidelity),
            phonon_prob: Some(r.phonon_prob),
            step_delta: r.diagnostics.step_delta,
            cutoff_delta: r.diagnostics.cutoff_delta,
            error: None,
        },
        Err(e) => Verification { infidelity: None, phonon_prob: None, step_delta: None, cutoff_delta: None, error: Some(e.to_string()) },
    })
}

/// Rectangular pulse with k circles, optionally echoed, with Ω = Ω₀(1 + rel).
pub fn rectangular_pulse(k: u32, echoed: bool, delta_omega_rel: f64, eta: f64) -> Result<Pulse> {
    let base = make_rectangular(k, 1.0, eta)?;
    let base = if echoed { echo_transform(&base) } else { base };
    Ok(base.with_gain(1.0 + delta_omega_rel))
}

/// Lemniscate pulse at a = a₀ + δa, A = A₀(1 + ΔA/A₀), optionally echoed.
pub fn lemniscate_pulse(echoed: bool, delta_a: f64, delta_amp_rel: f64, eta: f64) -> Result<Pulse> {
    let dp = lemniscate_design_point()?;
    let p = make_lemniscate(dp.a + delta_a, dp.amplitude * (1.0 + delta_amp_rel), 1.0, eta)?;
    Ok(if echoed { echo_transform(&p) } else { p })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmplitudeScanSpec {
    pub n: u32,
    pub eta: f64,
    pub k: u32,
    pub echoed: bool,
    /// ΔΩ/Ω₀ grid.
    pub grid: Vec<f64>,
    pub refine: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmplitudePoint {
    pub delta_omega_rel: f64,
    pub value: PointValue,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmplitudeOptimum {
    pub delta_omega_rel: f64,
    pub infidelity: f64,
    pub phonon_prob: f64,
    pub grid_best: f64,
    pub verification: Option<Verification>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmplitudeScan {
    pub spec: AmplitudeScanSpec,
    pub points: Vec<AmplitudePoint>,
    pub optimum: AmplitudeOptimum,
    /// Perturbative optimal ΔΩ/Ω₀ and infidelity.
    pub analytic_cross: f64,
    pub analytic_infidelity: f64,
}

pub fn amplitude_scan(spec: &AmplitudeScanSpec, solver: &SolverSettings) -> Result<AmplitudeScan> {
    check_grid("amplitude grid", &spec.grid)?;
    if spec.k == 0 {
        return Err(invalid("k", "need at least one circle"));
    }
    let (n, eta) = (spec.n, spec.eta);
    let at = |rel: f64| evaluate(rectangular_pulse(spec.k, spec.echoed, rel, eta), n, eta, solver);

    let base = rectangular_pulse(spec.k, spec.echoed, 0.0, eta)?;
    let coeffs = magnus_coefficients(&integrate_trajectory(&base, eta, DEFAULT_STEPS)?)?;
    let analytic = predict(n, coeffs.theta4, coeffs.g, eta)?;

    let values: Vec<PointValue> = spec.grid.par_iter().map(|&x| at(x)).collect();
    let best = argmin(&values).ok_or_else(|| all_failed(&values))?;
    let grid_best = values[best].infidelity;
    let (mut x, mut v) = (spec.grid[best], values[best].clone());
    if spec.refine && spec.grid.len() > 1 {
        let (lo, hi) = bracket(&spec.grid, best);
        let ends = [(spec.grid[lo], values[lo].clone()), (spec.grid[hi], values[hi].clone())];
        let (rx, rv) = golden_section(at, spec.grid[lo], spec.grid[hi], solver.golden_iterations, ends);
        if rv.objective() < v.objective() {
            (x, v) = (rx, rv);
        }
    }
    let verification = verify(rectangular_pulse(spec.k, spec.echoed, x, eta), n, eta, solver);
    Ok(AmplitudeScan {
        spec: spec.clone(),
        points: spec
            .grid
            .iter()
            .zip(values)
            .map(|(&delta_omega_rel, value)| AmplitudePoint { delta_omega_rel, value })
            .collect(),
        optimum: AmplitudeOptimum { delta_omega_rel: x, infidelity: v.infidelity, phonon_prob: v.phonon_prob, grid_best, verification },
        analytic_cross: analytic.delta_omega_rel,
        analytic_infidelity: analytic.infidelity,
    })
}

fn all_failed(values: &[PointValue]) -> Error {
    let first = values.iter().find_map(|v| v.error.clone()).unwrap_or_default();
    invalid("scan", format!("every grid point failed; first error: {first}"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemniscateScanSpec {
    pub n: u32,
    pub eta: f64,
    pub echoed: bool,
    pub delta_a: Vec<f64>,
    /// ΔA/A₀ grid.
    pub delta_amp_rel: Vec<f64>,
    pub refine: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemniscatePoint {
    pub delta_a: f64,
    pub delta_amp_rel: f64,
    pub value: PointValue,
}

/// Minimum over ΔA at fixed δa.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValleyPoint {
    pub delta_a: f64,
    pub delta_amp_rel: f64,
    pub infidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemniscateOptimum {
    pub delta_a: f64,
    pub delta_amp_rel: f64,
    pub infidelity: f64,
    pub phonon_prob: f64,
    pub grid_best: f64,
    pub verification: Option<Verification>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemniscateScan {
    pub spec: LemniscateScanSpec,
    /// Row-major: δa outer, ΔA inner.
    pub points: Vec<LemniscatePoint>,
    pub valley: Vec<ValleyPoint>,
    pub optimum: LemniscateOptimum,
}

pub fn lemniscate_scan_2d(spec: &LemniscateScanSpec, solver: &SolverSettings) -> Result<LemniscateScan> {
    check_grid("delta_a grid", &spec.delta_a)?;
    check_grid("delta_amp_rel grid", &spec.delta_amp_rel)?;
    let dp = lemniscate_design_point()?;
    if spec.delta_a[0] + dp.a <= 0.5 {
        return Err(invalid("delta_a grid", format!("a = a0 + δa must exceed 1/2, grid starts at {}", spec.delta_a[0])));
    }
    let (n, eta) = (spec.n, spec.eta);
    let at = |da: f64, dr: f64| evaluate(lemniscate_pulse(spec.echoed, da, dr, eta), n, eta, solver);
    let (na, nr) = (spec.delta_a.len(), spec.delta_amp_rel.len());

    let values: Vec<PointValue> = (0..na * nr)
        .into_par_iter()
        .map(|idx| at(spec.delta_a[idx / nr], spec.delta_amp_rel[idx % nr]))
        .collect();
    let best = argmin(&values).ok_or_else(|| all_failed(&values))?;
    let grid_best = values[best].infidelity;

    // valley: per-column minimum over ΔA, refined inside the neighbouring grid cells
    let column_min = |i: usize| -> (f64, PointValue) {
        let col = &values[i * nr..(i + 1) * nr];
        let Some(j) = argmin(col) else {
            return (spec.delta_amp_rel[0], col[0].clone());
        };
        if !spec.refine || nr == 1 {
            return (spec.delta_amp_rel[j], col[j].clone());
        }
        let (lo, hi) = bracket(&spec.delta_amp_rel, j);
        let ends = [(spec.delta_amp_rel[lo], col[lo].clone()), (spec.delta_amp_rel[hi], col[hi].clone())];
        let f = |dr: f64| at(spec.delta_a[i], dr);
        let (x, v) = golden_section(f, spec.delta_amp_rel[lo], spec.delta_amp_rel[hi], solver.golden_iterations, ends);
        if v.objective() <= col[j].objective() {
            (x, v)
        } else {
            (spec.delta_amp_rel[j], col[j].clone())
        }
    };
    let columns: Vec<(f64, PointValue)> = (0..na).into_par_iter().map(column_min).collect();
    let valley: Vec<ValleyPoint> = spec
        .delta_a
        .iter()
        .zip(&columns)
        .map(|(&delta_a, (dr, v))| ValleyPoint { delta_a, delta_amp_rel: *dr, infidelity: v.infidelity })
        .collect();

    let mut opt = (spec.delta_a[best / nr], spec.delta_amp_rel[best % nr], values[best].clone());
    let column_values: Vec<PointValue> = columns.iter().map(|c| c.1.clone()).collect();
    if let Some(i) = argmin(&column_values) {
        if column_values[i].objective() < opt.2.objective() {
            opt = (spec.delta_a[i], columns[i].0, column_values[i].clone());
        }
        if spec.refine && na > 1 && nr > 1 {
            // 1-D search along the valley; each δa gets its own ΔA refinement
            let step = spec.delta_amp_rel[1] - spec.delta_amp_rel[0];
            let valley_at = |da: f64| -> f64 {
                let k = spec.delta_a.partition_point(|&x| x < da).clamp(1, na - 1);
                let (x0, x1) = (spec.delta_a[k - 1], spec.delta_a[k]);
                let t = (da - x0) / (x1 - x0);
                columns[k - 1].0 + t * (columns[k].0 - columns[k - 1].0)
            };
            let inner = |da: f64| -> (f64, PointValue) {
                let c = valley_at(da);
                let (lo, hi) = (c - step, c + step);
                let ends = [(lo, at(da, lo)), (hi, at(da, hi))];
                golden_section(|dr| at(da, dr), lo, hi, solver.golden_iterations, ends)
            };
            let (lo, hi) = bracket(&spec.delta_a, i);
            let ends = [(spec.delta_a[lo], columns[lo].1.clone()), (spec.delta_a[hi], columns[hi].1.clone())];
            let (da, _) = golden_section(|da| inner(da).1, spec.delta_a[lo], spec.delta_a[hi], solver.golden_iterations, ends);
            let (dr, v) = inner(da);
            if v.objective() < opt.2.objective() {
                opt = (da, dr, v);
            }
        }
    }
    let (delta_a, delta_amp_rel, v) = opt;
    let verification = verify(lemniscate_pulse(spec.echoed, delta_a, delta_amp_rel, eta), n, eta, solver);
    let points = values
        .into_iter()
        .enumerate()
        .map(|(idx, value)| LemniscatePoint { delta_a: spec.delta_a[idx / nr], delta_amp_rel: spec.delta_amp_rel[idx % nr], value })
        .collect();
    Ok(LemniscateScan {
        spec: spec.clone(),
        points,
        valley,
        optimum: LemniscateOptimum { delta_a, delta_amp_rel, infidelity: v.infidelity, phonon_prob: v.phonon_prob, grid_best, verification },
    })
}

/// Pulse families compared in the sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepFamily {
    Rectangular { k: u32 },
    EchoedRectangular { k: u32 },
    Lemniscate,
    EchoedLemniscate,
}

impl SweepFamily {
    pub fn label(&self) -> String {
        match self {
            SweepFamily::Rectangular { k } => format!("rectangular_k{k}"),
            SweepFamily::EchoedRectangular { k } => format!("echoed_rectangular_k{k}"),
            SweepFamily::Lemniscate => "lemniscate".into(),
            SweepFamily::EchoedLemniscate => "echoed_lemniscate".into(),
        }
    }
}

/// Grids used to re-optimise each sweep point, given at the reference η.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepGrids {
    pub amplitude: Vec<f64>,
    pub delta_a: Vec<f64>,
    pub delta_amp_rel: Vec<f64>,
    /// Scale grids by (η/REFERENCE_ETA)²; the η² shifts of the optimum follow.
    pub scale_with_eta: bool,
}

impl Default for SweepGrids {
    fn default() -> Self {
        SweepGrids {
            amplitude: default_amplitude_grid(),
            delta_a: default_delta_a_grid(),
            delta_amp_rel: default_delta_amp_grid(),
            scale_with_eta: true,
        }
    }
}

impl SweepGrids {
    fn scaled(&self, grid: &[f64], eta: f64) -> Vec<f64> {
        let s = if self.scale_with_eta { (eta / REFERENCE_ETA).powi(2) } else { 1.0 };
        grid.iter().map(|x| x * s).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub family: String,
    pub n: u32,
    pub eta: f64,
    pub infidelity: f64,
    pub phonon_prob: f64,
    /// Optimal ΔΩ/Ω₀, or (δa, ΔA/A₀) for lemniscate families.
    pub params: Vec<f64>,
    pub error: Option<String>,
}

/// Re-optimises one family at (n, η) and returns its best infidelity.
pub fn optimize_family(family: SweepFamily, n: u32, eta: f64, grids: &SweepGrids, solver: &SolverSettings) -> SweepRow {
    let outcome = match family {
        SweepFamily::Rectangular { k } | SweepFamily::EchoedRectangular { k } => {
            let spec = AmplitudeScanSpec {
                n,
                eta,
                k,
                echoed: matches!(family, SweepFamily::EchoedRectangular { .. }),
                grid: grids.scaled(&grids.amplitude, eta),
                refine: true,
            };
            amplitude_scan(&spec, solver).map(|s| {
                let o = s.optimum;
                (best_value(o.infidelity, o.phonon_prob, &o.verification), vec![o.delta_omega_rel])
            })
        }
        SweepFamily::Lemniscate | SweepFamily::EchoedLemniscate => {
            let spec = LemniscateScanSpec {
                n,
                eta,
                echoed: family == SweepFamily::EchoedLemniscate,
                delta_a: grids.scaled(&grids.delta_a, eta),
                delta_amp_rel: grids.scaled(&grids.delta_amp_rel, eta),
                refine: true,
            };
            lemniscate_scan_2d(&spec, solver).map(|s| {
                let o = s.optimum;
                (best_value(o.infidelity, o.phonon_prob, &o.verification), vec![o.delta_a, o.delta_amp_rel])
            })
        }
    };
    match outcome {
        Ok(((infidelity, phonon_prob), params)) => {
            SweepRow { family: family.label(), n, eta, infidelity, phonon_prob, params, error: None }
        }
        Err(e) => SweepRow {
            family: family.label(),
            n,
            eta,
            infidelity: f64::NAN,
            phonon_prob: f64::NAN,
            params: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

/// Converged value when available, otherwise the search value.
fn best_value(infidelity: f64, phonon_prob: f64, v: &Option<Verification>) -> (f64, f64) {
    match v {
        Some(Verification { infidelity: Some(i), phonon_prob: Some(p), .. }) => (*i, *p),
        _ => (infidelity, phonon_prob),
    }
}

/// Least-squares slope of ln y against ln x, skipping non-positive or
/// non-finite points. NaN with fewer than two usable points.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    cov / var
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilySlope {
    pub family: String,
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// Log-log slope of infidelity against the swept variable, per family.
    pub slopes: Vec<FamilySlope>,
}

impl Sweep {
    pub fn rows_for(&self, family: SweepFamily) -> impl Iterator<Item = &SweepRow> {
        let label = family.label();
        self.rows.iter().filter(move |r| r.family == label)
    }

    pub fn slope_for(&self, family: SweepFamily) -> Option<f64> {
        let label = family.label();
        self.slopes.iter().find(|s| s.family == label).map(|s| s.slope)
    }
}

fn sweep<X: Fn(&SweepRow) -> f64>(
    families: &[SweepFamily],
    points: &[(u32, f64)],
    grids: &SweepGrids,
    solver: &SolverSettings,
    axis: X,
) -> Sweep {
    let jobs: Vec<(SweepFamily, u32, f64)> =
        families.iter().flat_map(|&f| points.iter().map(move |&(n, eta)| (f, n, eta))).collect();
    let rows: Vec<SweepRow> = jobs.par_iter().map(|&(f, n, eta)| optimize_family(f, n, eta, grids, solver)).collect();
    let slopes = families
        .iter()
        .map(|&f| {
            let label = f.label();
            let sel: Vec<&SweepRow> = rows.iter().filter(|r| r.family == label).collect();
            let xs: Vec<f64> = sel.iter().map(|r| axis(r)).collect();
            let ys: Vec<f64> = sel.iter().map(|r| r.infidelity).collect();
            FamilySlope { family: label, slope: loglog_slope(&xs, &ys) }
        })
        .collect();
    Sweep { rows, slopes }
}

pub fn eta_sweep(n: u32, etas: &[f64], families: &[SweepFamily], grids: &SweepGrids, solver: &SolverSettings) -> Sweep {
    let points: Vec<(u32, f64)> = etas.iter().map(|&e| (n, e)).collect();
    sweep(families, &points, grids, solver, |r| r.eta)
}

pub fn n_sweep(eta: f64, ns: &[u32], families: &[SweepFamily], grids: &SweepGrids, solver: &SolverSettings) -> Sweep {
    let points: Vec<(u32, f64)> = ns.iter().map(|&n| (n, eta)).collect();
    sweep(families, &points, grids, solver, |r| r.n as f64)
}

fn err_field(e: &Option<String>) -> String {
    e.clone().unwrap_or_default()
}

/// fig2.csv: amplitude curves plus one analytic-cross row per scan.
pub fn write_fig2<W: Write>(w: W, scans: &[AmplitudeScan]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "eta", "delta_omega_rel", "infidelity", "analytic_cross", "error"])?;
    for s in scans {
        let (n, eta) = (s.spec.n.to_string(), s.spec.eta.to_string());
        for p in &s.points {
            out.write_record([&n, &eta, &p.delta_omega_rel.to_string(), &p.value.infidelity.to_string(), "0", &err_field(&p.value.error)])?;
        }
        out.write_record([&n, &eta, &s.analytic_cross.to_string(), &s.analytic_infidelity.to_string(), "1", ""])?;
    }
    out.flush()?;
    Ok(())
}

/// fig3.csv: the 2-D surface.
pub fn write_fig3<W: Write>(w: W, scan: &LemniscateScan) -> Result<()> {
    let a0 = lemniscate_design_point()?.amplitude;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["delta_a", "delta_amp", "delta_amp_rel", "infidelity", "error"])?;
    for p in &scan.points {
        out.write_record([
            p.delta_a.to_string(),
            (a0 * p.delta_amp_rel).to_string(),
            p.delta_amp_rel.to_string(),
            p.value.infidelity.to_string(),
            err_field(&p.value.error),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// fig4.csv: η sweep.
pub fn write_fig4<W: Write>(w: W, sweep: &Sweep) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["family", "eta", "infidelity", "phonon_prob", "error"])?;
    for r in &sweep.rows {
        out.write_record([r.family.clone(), r.eta.to_string(), r.infidelity.to_string(), r.phonon_prob.to_string(), err_field(&r.error)])?;
    }
    out.flush()?;
    Ok(())
}

/// fig5.csv: ion-number sweep.
pub fn write_fig5<W: Write>(w: W, sweep: &Sweep) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["family", "n", "infidelity", "error"])?;
    for r in &sweep.rows {
        out.write_record([r.family.clone(), r.n.to_string(), r.infidelity.to_string(), err_field(&r.error)])?;
    }
    out.flush()?;
    Ok(())
}
