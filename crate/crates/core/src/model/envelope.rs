use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::{polar, trapezoid, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseLabel {
    Probe,
    Steering,
}

/// Temporal shape of a boundary field at `z = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum Envelope<T> {
    /// Gaussian with intensity FWHM `fwhm` (us), truncated beyond four FWHM.
    Gaussian {
        center: T,
        fwhm: T,
        peak: T,
        #[serde(default)]
        phase: T,
    },
    /// Piecewise-linear interpolation of samples, zero outside `[times[0], times[n-1]]`.
    Sampled {
        times: Vec<T>,
        values: Vec<Complex<T>>,
    },
}

const GAUSS_CUTOFF_FWHM: f64 = 4.0;

impl<T: Real> Envelope<T> {
    pub fn amplitude(&self, t: T) -> Complex<T> {
        match self {
            Self::Gaussian {
                center,
                fwhm,
                peak,
                phase,
            } => {
                let x = t - *center;
                if x.abs() > T::lit(GAUSS_CUTOFF_FWHM) * *fwhm {
                    return Complex::default();
                }
                let a = -T::lit(2.0 * std::f64::consts::LN_2) * x * x / (*fwhm * *fwhm);
                polar(*peak * a.exp(), *phase)
            }
            Self::Sampled { times, values } => interpolate(times, values, t),
        }
    }

    pub fn support(&self) -> (T, T) {
        match self {
            Self::Gaussian { center, fwhm, .. } => {
                let w = T::lit(GAUSS_CUTOFF_FWHM) * *fwhm;
                (*center - w, *center + w)
            }
            Self::Sampled { times, .. } => (
                times.first().copied().unwrap_or_else(T::zero),
                times.last().copied().unwrap_or_else(T::zero),
            ),
        }
    }

    /// `∫|A(t)|² dt`; closed form for Gaussians, trapezoidal for samples.
    pub fn energy(&self) -> T {
        match self {
            Self::Gaussian { fwhm, peak, .. } => {
                let width = (T::PI() / T::lit(4.0 * std::f64::consts::LN_2)).sqrt();
                *peak * *peak * *fwhm * width
            }
            Self::Sampled { times, values } => {
                let y: Vec<T> = values.iter().map(|v| v.norm_sqr()).collect();
                trapezoid(times, &y)
            }
        }
    }

    /// Multiplies the envelope by a complex constant.
    pub fn scaled(&self, a: Complex<T>) -> Self {
        match self {
            Self::Gaussian {
                center,
                fwhm,
                peak,
                phase,
            } => Self::Gaussian {
                center: *center,
                fwhm: *fwhm,
                peak: *peak * a.norm(),
                phase: *phase + a.arg(),
            },
            Self::Sampled { times, values } => Self::Sampled {
                times: times.clone(),
                values: values.iter().map(|v| v * a).collect(),
            },
        }
    }

    /// Same shape translated by `dt`.
    pub fn shifted(&self, dt: T) -> Self {
        match self {
            Self::Gaussian {
                center,
                fwhm,
                peak,
                phase,
            } => Self::Gaussian {
                center: *center + dt,
                fwhm: *fwhm,
                peak: *peak,
                phase: *phase,
            },
            Self::Sampled { times, values } => Self::Sampled {
                times: times.iter().map(|t| *t + dt).collect(),
                values: values.clone(),
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Gaussian { peak, .. } => peak.is_zero(),
            Self::Sampled { values, .. } => values.iter().all(|v| v.norm_sqr().is_zero()),
        }
    }
}

fn interpolate<T: Real>(times: &[T], values: &[Complex<T>], t: T) -> Complex<T> {
    let n = times.len().min(values.len());
    if n == 0 || t < times[0] || t > times[n - 1] {
        return Complex::default();
    }
    let hi = times[..n].partition_point(|&s| s <= t);
    if hi >= n {
        return values[n - 1];
    }
    let lo = hi - 1;
    let w = (t - times[lo]) / (times[hi] - times[lo]);
    values[lo] * (T::one() - w) + values[hi] * w
}

/// An injected optical pulse, Raman-paired through its optical channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PulseEnvelope<T> {
    pub label: PulseLabel,
    pub channel: usize,
    /// Carrier offset in rad/us relative to the channel frame.
    #[serde(default)]
    pub carrier_offset: T,
    pub shape: Envelope<T>,
}

impl<T: Real> PulseEnvelope<T> {
    pub fn new(label: PulseLabel, channel: usize, shape: Envelope<T>) -> Self {
        Self {
            label,
            channel,
            carrier_offset: T::zero(),
            shape,
        }
    }

    pub fn amplitude(&self, t: T) -> Complex<T> {
        let a = self.shape.amplitude(t);
        if self.carrier_offset.is_zero() {
            a
        } else {
            a * polar(T::one(), -self.carrier_offset * t)
        }
    }

    pub fn energy(&self) -> T {
        self.shape.energy()
    }
}
