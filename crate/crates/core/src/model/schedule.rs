use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::{polar, Real};

/// One piece of the piecewise-constant detuning gradient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum GradientSegment<T> {
    /// Linear detuning `eta·(z - L/2)` across the medium, `eta` in rad/us per L.
    Linear { t_start: T, eta: T },
    /// Gradient switched off.
    Hold { t_start: T },
}

impl<T: Real> GradientSegment<T> {
    pub fn t_start(&self) -> T {
        match *self {
            Self::Linear { t_start, .. } | Self::Hold { t_start } => t_start,
        }
    }

    pub fn eta(&self) -> T {
        match *self {
            Self::Linear { eta, .. } => eta,
            Self::Hold { .. } => T::zero(),
        }
    }
}

/// Piecewise-constant detuning gradient `eta(t)` with instantaneous switches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GradientProfile<T> {
    pub segments: Vec<GradientSegment<T>>,
}

impl<T: Real> GradientProfile<T> {
    pub fn constant(eta: T) -> Self {
        Self {
            segments: vec![GradientSegment::Linear {
                t_start: T::zero(),
                eta,
            }],
        }
    }

    /// Alternating-sign gradient: `+eta` from 0, sign flipped at each of `flips`.
    pub fn flipping(eta: T, flips: &[T]) -> Self {
        let mut segments = vec![GradientSegment::Linear {
            t_start: T::zero(),
            eta,
        }];
        let mut sign = T::one();
        for &t in flips {
            sign = -sign;
            segments.push(GradientSegment::Linear {
                t_start: t,
                eta: sign * eta,
            });
        }
        Self { segments }
    }

    /// Right-continuous value at `t`.
    pub fn eta_at(&self, t: T) -> T {
        segment_at(&self.segments, t, GradientSegment::t_start)
            .map(GradientSegment::eta)
            .unwrap_or_else(T::zero)
    }

    pub fn switch_times(&self) -> impl Iterator<Item = T> + '_ {
        self.segments.iter().skip(1).map(GradientSegment::t_start)
    }

    pub fn max_abs_eta(&self) -> T {
        self.segments
            .iter()
            .map(|s| s.eta().abs())
            .fold(T::zero(), T::max)
    }
}

/// Constant coupling Rabi frequency `rabi·e^{i·phase}` from `t_start` on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CouplingSegment<T> {
    pub t_start: T,
    /// |Omega_c| in rad/us.
    pub rabi: T,
    /// arg(Omega_c) in rad.
    #[serde(default)]
    pub phase: T,
}

impl<T: Real> CouplingSegment<T> {
    pub fn value(&self) -> Complex<T> {
        polar(self.rabi, self.phase)
    }
}

/// One coupling field, Raman-paired with optical channel `optical`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CouplingChannel<T> {
    pub optical: usize,
    /// Two-photon frame offset in rad/us; the field acts as `Omega(t)·e^{-i·offset·t}`.
    #[serde(default)]
    pub raman_offset: T,
    pub segments: Vec<CouplingSegment<T>>,
}

impl<T: Real> CouplingChannel<T> {
    pub fn constant(optical: usize, rabi: T, phase: T) -> Self {
        Self {
            optical,
            raman_offset: T::zero(),
            segments: vec![CouplingSegment {
                t_start: T::zero(),
                rabi,
                phase,
            }],
        }
    }

    /// Complex Rabi frequency at `t` without the frame rotation.
    pub fn rabi_at(&self, t: T) -> Complex<T> {
        segment_at(&self.segments, t, |s| s.t_start)
            .map(CouplingSegment::value)
            .unwrap_or_else(Complex::default)
    }

    /// Rabi frequency as seen by the equations of motion, frame rotation included.
    pub fn effective_at(&self, t: T) -> Complex<T> {
        self.rabi_at(t) * polar(T::one(), -self.raman_offset * t)
    }

    pub fn max_rabi(&self) -> T {
        self.segments
            .iter()
            .map(|s| s.rabi.abs())
            .fold(T::zero(), T::max)
    }
}

/// All coupling fields of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CouplingSchedule<T> {
    pub channels: Vec<CouplingChannel<T>>,
}

impl<T: Real> CouplingSchedule<T> {
    pub fn single(rabi: T) -> Self {
        Self {
            channels: vec![CouplingChannel::constant(0, rabi, T::zero())],
        }
    }

    /// Number of distinct optical channels addressed.
    pub fn optical_channels(&self) -> usize {
        self.channels
            .iter()
            .map(|c| c.optical + 1)
            .max()
            .unwrap_or(0)
    }

    /// Light shift `Σ_c |Omega_c(t)|²/Δ`.
    pub fn stark_shift(&self, t: T, delta: T) -> T {
        self.channels
            .iter()
            .map(|c| c.rabi_at(t).norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            / delta
    }

    /// Summed effective coupling acting on optical channel `j` at `t`.
    pub fn optical_coupling(&self, j: usize, t: T) -> Complex<T> {
        self.channels
            .iter()
            .filter(|c| c.optical == j)
            .map(|c| c.effective_at(t))
            .fold(Complex::default(), |a, b| a + b)
    }

    pub fn switch_times(&self) -> Vec<T> {
        self.channels
            .iter()
            .flat_map(|c| c.segments.iter().skip(1).map(|s| s.t_start))
            .collect()
    }
}

fn segment_at<S, T: Real>(segments: &[S], t: T, start: impl Fn(&S) -> T) -> Option<&S> {
    // segments are sorted by start time; a validated profile starts at 0
    let idx = segments.partition_point(|s| start(s) <= t);
    if idx == 0 {
        segments.first()
    } else {
        segments.get(idx - 1)
    }
}
