//! Laser pulse envelopes: rectangular, lemniscate and their echoed versions.
//!
//! A [`Pulse`] is an immutable closed-form evaluator of the complex Rabi
//! amplitude Ω(t) on `[0, duration]` together with the bichromatic detuning δ.
//! Outside the support the envelope is zero.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::C64;

/// Default number of points used when a pulse is sampled for export.
pub const DEFAULT_SAMPLES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PulseFamily {
    Rectangular { k: u32 },
    EchoedRectangular { k: u32 },
    Lemniscate { a: f64, amplitude: f64 },
    EchoedLemniscate { a: f64, amplitude: f64 },
    Custom,
}

impl PulseFamily {
    pub fn name(&self) -> &'static str {
        match self {
            PulseFamily::Rectangular { .. } => "rectangular",
            PulseFamily::EchoedRectangular { .. } => "echoed_rectangular",
            PulseFamily::Lemniscate { .. } => "lemniscate",
            PulseFamily::EchoedLemniscate { .. } => "echoed_lemniscate",
            PulseFamily::Custom => "custom",
        }
    }

    pub fn is_echoed(&self) -> bool {
        matches!(
            self,
            PulseFamily::EchoedRectangular { .. } | PulseFamily::EchoedLemniscate { .. }
        )
    }
}

#[derive(Clone, Debug)]
enum Envelope {
    Constant(C64),
    /// Ω(t) = −(Aγ/η)[e^{−iγt} − a(cos γt − cos 2γt)].
    Lemniscate { a: f64, amplitude: f64, gamma: f64, eta: f64 },
    /// Compressed copy of the inner pulse followed by its negated replay.
    Echo(Box<Pulse>),
    /// gain · inner(t / time_scale)
    Transformed { inner: Box<Envelope>, gain: f64, time_scale: f64 },
    /// Piecewise-linear interpolation of uniform samples at cell centres.
    Samples { dt: f64, values: Vec<C64> },
}

impl Envelope {
    fn eval(&self, t: f64) -> C64 {
        match self {
            Envelope::Constant(c) => *c,
            Envelope::Lemniscate { a, amplitude, gamma, eta } => {
                let phi = gamma * t;
                let bracket = C64::from_polar(1.0, -phi) - a * (phi.cos() - (2.0 * phi).cos());
                -bracket * (amplitude * gamma / eta)
            }
            Envelope::Echo(inner) => {
                let period = inner.duration;
                if t <= 0.5 * period {
                    inner.envelope(2.0 * t) * SQRT_2
                } else {
                    let replay_phase = C64::from_polar(1.0, inner.detuning * period);
                    -inner.envelope(2.0 * t - period) * replay_phase * SQRT_2
                }
            }
            Envelope::Transformed { inner, gain, time_scale } => inner.eval(t / time_scale) * *gain,
            Envelope::Samples { dt, values } => {
                let x = t / dt - 0.5;
                if x <= 0.0 {
                    return values[0];
                }
                let i = x.floor() as usize;
                if i + 1 >= values.len() {
                    return values[values.len() - 1];
                }
                let w = x - i as f64;
                values[i] * (1.0 - w) + values[i + 1] * w
            }
        }
    }
}

/// A drive envelope Ω(t) with detuning δ on `[0, duration]`.
#[derive(Clone, Debug)]
pub struct Pulse {
    envelope: Envelope,
    detuning: f64,
    duration: f64,
    family: PulseFamily,
}

fn check_common(t_gate: f64, eta: f64) -> Result<()> {
    if !(t_gate > 0.0 && t_gate.is_finite()) {
        return Err(invalid("t_gate", format!("must be positive, got {t_gate}")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid("eta", format!("must lie in (0, 1), got {eta}")));
    }
    Ok(())
}

/// Constant-amplitude pulse whose trajectory closes after `k` circles with χ = π/4:
/// δ = 2πk/t_gate and Ω₀ = π√k/(η t_gate).
pub fn make_rectangular(k: u32, t_gate: f64, eta: f64) -> Result<Pulse> {
    if k == 0 {
        return Err(invalid("k", "number of circles must be at least 1"));
    }
    check_common(t_gate, eta)?;
    let kf = k as f64;
    let omega0 = PI * kf.sqrt() / (eta * t_gate);
    Ok(Pulse {
        envelope: Envelope::Constant(C64::new(omega0, 0.0)),
        detuning: 2.0 * PI * kf / t_gate,
        duration: t_gate,
        family: PulseFamily::Rectangular { k },
    })
}

/// Point of the figure-eight curve
/// `A(1 − cos γt) + i A sin γt (1 − a + a cos γt)`, γ = 2π/t_gate.
///
/// The curve is the spin-displacement amplitude 2α(t); see [`make_lemniscate`].
pub fn lemniscate_alpha(a: f64, amplitude: f64, t_gate: f64, t: f64) -> Result<C64> {
    if !(t_gate > 0.0) {
        return Err(invalid("t_gate", format!("must be positive, got {t_gate}")));
    }
    let slack = 1e-12 * t_gate;
    if !(t >= -slack && t <= t_gate + slack) {
        return Err(invalid("t", format!("{t} outside [0, {t_gate}]")));
    }
    Ok(lemniscate_curve(a, amplitude, 2.0 * PI / t_gate * t))
}

pub(crate) fn lemniscate_curve(a: f64, amplitude: f64, phi: f64) -> C64 {
    let (s, c) = phi.sin_cos();
    C64::new(amplitude * (1.0 - c), amplitude * s * (1.0 - a + a * c))
}

/// Amplitude- and phase-modulated pulse (δ = 0) whose phase trajectory is
/// the figure-eight curve of [`lemniscate_alpha`], scaled so that the curve
/// equals 2α: Ω(t) = (i/η) d(curve)/dt. With this scaling the printed design
/// point (a₀, A₀) yields χ = π/4.
pub fn make_lemniscate(a: f64, amplitude: f64, t_gate: f64, eta: f64) -> Result<Pulse> {
    check_common(t_gate, eta)?;
    if !(a > 0.5) || !a.is_finite() {
        return Err(Error::NotFigureEight(a));
    }
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(invalid("amplitude", format!("must be positive, got {amplitude}")));
    }
    Ok(Pulse {
        envelope: Envelope::Lemniscate { a, amplitude, gamma: 2.0 * PI / t_gate, eta },
        detuning: 0.0,
        duration: t_gate,
        family: PulseFamily::Lemniscate { a, amplitude },
    })
}

/// Echoed version of a pulse: √2 Ω(2t) on the first half, then the negated
/// replay −√2 e^{iδT} Ω(2t − T), with detuning 2δ and unchanged duration.
///
/// The second half traces the point reflection of the first-half trajectory,
/// so every odd functional of α (in particular the phonon amplitude g)
/// cancels, and the trajectory closes for any input pulse.
pub fn echo_transform(p: &Pulse) -> Pulse {
    let family = match p.family {
        PulseFamily::Rectangular { k } => PulseFamily::EchoedRectangular { k },
        PulseFamily::Lemniscate { a, amplitude } => PulseFamily::EchoedLemniscate { a, amplitude },
        _ => PulseFamily::Custom,
    };
    Pulse {
        envelope: Envelope::Echo(Box::new(p.clone())),
        detuning: 2.0 * p.detuning,
        duration: p.duration,
        family,
    }
}

impl Pulse {
    /// Pulse from uniformly spaced samples at cell centres `(j + 1/2)·T/N`.
    pub fn from_samples(values: Vec<C64>, duration: f64, detuning: f64) -> Result<Pulse> {
        if values.len() < 2 {
            return Err(invalid("samples", "need at least two samples"));
        }
        if !(duration > 0.0) {
            return Err(invalid("duration", format!("must be positive, got {duration}")));
        }
        Ok(Pulse {
            envelope: Envelope::Samples { dt: duration / values.len() as f64, values },
            detuning,
            duration,
            family: PulseFamily::Custom,
        })
    }

    /// Complex Rabi amplitude Ω(t); zero outside `[0, duration]`.
    pub fn envelope(&self, t: f64) -> C64 {
        if t < 0.0 || t > self.duration {
            return C64::new(0.0, 0.0);
        }
        self.envelope.eval(t)
    }

    /// Ω(t) e^{−iδt}, the integrand of the phase trajectory.
    pub fn drive(&self, t: f64) -> C64 {
        self.envelope(t) * C64::from_polar(1.0, -self.detuning * t)
    }

    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn family(&self) -> PulseFamily {
        self.family
    }

    /// Multiplies the envelope by `gain` (amplitude scans).
    pub fn with_gain(&self, gain: f64) -> Pulse {
        self.transformed(gain, 1.0, self.duration, self.detuning)
    }

    /// The rescaled pulse t → λt, δ → δ/λ, Ω(t) → Ω(t/λ)/λ, which leaves the
    /// all-order Hamiltonian dynamics invariant.
    pub fn rescale_time(&self, lambda: f64) -> Pulse {
        self.transformed(1.0 / lambda, lambda, lambda * self.duration, self.detuning / lambda)
    }

    fn transformed(&self, gain: f64, time_scale: f64, duration: f64, detuning: f64) -> Pulse {
        Pulse {
            envelope: Envelope::Transformed {
                inner: Box::new(self.envelope.clone()),
                gain,
                time_scale,
            },
            detuning,
            duration,
            family: self.family,
        }
    }

    /// Uniform samples `(t, Ω(t))` at cell centres.
    pub fn sample(&self, n_points: usize) -> Vec<(f64, C64)> {
        let dt = self.duration / n_points as f64;
        (0..n_points)
            .map(|j| {
                let t = (j as f64 + 0.5) * dt;
                (t, self.envelope(t))
            })
            .collect()
    }

    pub fn peak_amplitude(&self, n_points: usize) -> f64 {
        self.sample(n_points).iter().map(|(_, w)| w.norm()).fold(0.0, f64::max)
    }

    /// Writes `t,re_omega,im_omega,detuning` rows.
    pub fn write_csv<W: Write>(&self, writer: W, n_points: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "re_omega", "im_omega", "detuning"])?;
        for (t, omega) in self.sample(n_points) {
            w.write_record(&[
                format!("{t:.12e}"),
                format!("{:.12e}", omega.re),
                format!("{:.12e}", omega.im),
                format!("{:.12e}", self.detuning),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
