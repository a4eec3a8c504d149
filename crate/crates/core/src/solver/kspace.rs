//! Spatial-frequency picture of the memory: the polariton
//! `ψ(k) = k·E(k) + (N·Ω*/Δ)·σ12(k)` and diagnostics built on it.
//!
//! The conjugate matches the bulk Maxwell relation `k·E(k) = (N·Ω*/Δ)·σ12(k)`
//! of the working equations, so both terms add in phase for any coupling
//! phase or frame rotation. For real `Ω` this is the usual normal mode.
//!
//! Transform convention: `f(k) = (1/nz)·Σ_n f(z_n)·e^{-i k z_n}` with
//! `z_n = (n + 1/2)·dz` and `k_m = 2πm/L`, `m = -nz/2 .. nz/2 - 1`, so a
//! single mode `e^{i k0 z}` maps to a unit peak at `k0`. Under a constant
//! gradient `η` the coherence spectrum drifts as `k̄(t) = k̄(0) - η·t`.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::model::{CoherenceState, DetectionWindow, EnsembleParams, FieldState, SimulationRecord};
use crate::scalar::{polar, wrap_positive, Real};

/// Bins with `|ψ|²` below this fraction of the peak are ignored by centroids.
pub const KSPECTRUM_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KSpaceError {
    #[error("no k-spectrum in the record carries any weight")]
    EmptySpectrum,
    #[error("the polariton does not cross k = 0 inside window {0}")]
    NoCrossing(String),
    #[error("record holds too few snapshots inside window {0}")]
    MissingSnapshots(String),
}

/// Planned FFT plus the k grid for one spatial grid.
pub struct KTransform<T: Real> {
    fft: Arc<dyn Fft<T>>,
    k: Vec<T>,
    /// `e^{-i k_m dz/2}/nz` for FFT output bin q.
    twiddle: Vec<Complex<T>>,
}

impl<T: Real> KTransform<T> {
    pub fn new(nz: usize, length: T) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(nz);
        let dz = length / T::lit(nz as f64);
        let norm = T::one() / T::lit(nz as f64);
        let bin_k = |q: usize| -> T {
            let m = if q < nz / 2 {
                q as f64
            } else {
                q as f64 - nz as f64
            };
            T::TAU() * T::lit(m) / length
        };
        let twiddle = (0..nz)
            .map(|q| polar(norm, -bin_k(q) * dz * T::lit(0.5)))
            .collect();
        Self {
            fft,
            k: k_grid(nz, length),
            twiddle,
        }
    }

    pub fn k_grid(&self) -> &[T] {
        &self.k
    }

    /// Transform of cell-centre samples, returned in ascending-k order.
    pub fn forward(&self, samples: &[Complex<T>]) -> Vec<Complex<T>> {
        let nz = samples.len();
        let mut buf = samples.to_vec();
        self.fft.process(&mut buf);
        for (b, w) in buf.iter_mut().zip(&self.twiddle) {
            *b = *b * w;
        }
        buf.rotate_left(nz / 2);
        buf
    }

    pub fn polariton(
        &self,
        field: &[Complex<T>],
        sigma: &[Complex<T>],
        p: &EnsembleParams<T>,
        omega_c: Complex<T>,
    ) -> Vec<Complex<T>> {
        let ek = self.forward(field);
        let sk = self.forward(sigma);
        let weight = omega_c.conj() * (p.density / p.delta);
        self.k
            .iter()
            .zip(ek.iter().zip(&sk))
            .map(|(&k, (e, s))| e * k + s * weight)
            .collect()
    }
}

/// Wavenumbers `2πm/L` for `m = -nz/2 .. nz/2 - 1`.
pub fn k_grid<T: Real>(nz: usize, length: T) -> Vec<T> {
    let half = (nz / 2) as f64;
    (0..nz)
        .map(|i| T::TAU() * T::lit(i as f64 - half) / length)
        .collect()
}

/// `ψ(k)` from the optical channel 0 field and the coherence; `omega_c` is
/// the effective coupling acting on that channel.
pub fn polariton_spectrum<T: Real>(
    field: &FieldState<T>,
    coh: &CoherenceState<T>,
    p: &EnsembleParams<T>,
    omega_c: Complex<T>,
) -> Vec<Complex<T>> {
    let nz = coh.sigma.len();
    let zeros;
    let e = match field.channels.first() {
        Some(e) => e.as_slice(),
        None => {
            zeros = vec![Complex::default(); nz];
            &zeros
        }
    };
    KTransform::new(nz, p.length).polariton(e, &coh.sigma, p, omega_c)
}

/// Transform evaluated at an arbitrary wavenumber.
pub fn dtft_at<T: Real>(samples: &[Complex<T>], length: T, k: T) -> Complex<T> {
    let nz = samples.len();
    let dz = length / T::lit(nz as f64);
    let sum = samples
        .iter()
        .enumerate()
        .fold(Complex::default(), |acc, (n, f)| {
            let z = (T::lit(n as f64) + T::lit(0.5)) * dz;
            acc + f * polar(T::one(), -k * z)
        });
    sum / T::lit(nz as f64)
}

/// Centroid `Σk|ψ|²/Σ|ψ|²` over bins above [`KSPECTRUM_FLOOR`] of the peak.
pub fn centroid_of<T: Real>(k: &[T], magnitude: &[T]) -> Option<T> {
    let power: Vec<T> = magnitude.iter().map(|m| *m * *m).collect();
    let peak = power.iter().copied().fold(T::zero(), T::max);
    if !(peak > T::zero()) {
        return None;
    }
    let floor = peak * T::lit(KSPECTRUM_FLOOR);
    let (num, den) = k
        .iter()
        .zip(&power)
        .filter(|(_, p)| **p >= floor)
        .fold((T::zero(), T::zero()), |(n, d), (k, p)| (n + *k * *p, d + *p));
    Some(num / den)
}

/// `(t, k̄(t))` for every recorded k-spectrum that carries weight.
pub fn k_centroid_track<T: Real>(record: &SimulationRecord<T>) -> Result<Vec<(T, T)>, KSpaceError> {
    let track: Vec<(T, T)> = record
        .k_spectra
        .iter()
        .filter_map(|s| centroid_of(&record.k_grid, &s.magnitude).map(|k| (s.t, k)))
        .collect();
    if track.is_empty() {
        Err(KSpaceError::EmptySpectrum)
    } else {
        Ok(track)
    }
}

/// Change of `arg[E(k̄)·σ12*(k̄)]` across the `k = 0` crossing inside `window`,
/// in `[0, 2π)`.
///
/// The phase is read in the frame of the channel-0 coupling (its own phase
/// `arg Ω` is removed) at the first and last snapshots of the window, which
/// must lie on opposite sides of `k = 0`.
pub fn crossing_phase<T: Real>(
    record: &SimulationRecord<T>,
    window: &DetectionWindow<T>,
) -> Result<T, KSpaceError> {
    let p = &record.config.ensemble;
    let inside: Vec<_> = record
        .snapshots
        .iter()
        .filter(|(f, _)| window.contains(f.t))
        .collect();
    if inside.len() < 2 {
        return Err(KSpaceError::MissingSnapshots(window.name.clone()));
    }
    let nz = record.config.grid.nz;
    let trans = KTransform::new(nz, p.length);
    let probe = |f: &FieldState<T>, c: &CoherenceState<T>| -> Option<(T, Complex<T>)> {
        let omega = record.config.coupling.optical_coupling(0, f.t);
        let psi = trans.polariton(&f.channels[0], &c.sigma, p, omega);
        let mags: Vec<T> = psi.iter().map(|z| z.norm()).collect();
        let kbar = centroid_of(trans.k_grid(), &mags)?;
        let e = dtft_at(&f.channels[0], p.length, kbar);
        let s = dtft_at(&c.sigma, p.length, kbar);
        let frame = if omega.norm() > T::zero() {
            omega / omega.norm()
        } else {
            Complex::new(T::one(), T::zero())
        };
        Some((kbar, e * s.conj() * frame))
    };
    let (f0, c0) = inside[0];
    let (f1, c1) = inside[inside.len() - 1];
    let (Some((k0, before)), Some((k1, after))) = (probe(f0, c0), probe(f1, c1)) else {
        return Err(KSpaceError::NoCrossing(window.name.clone()));
    };
    if k0.signum() == k1.signum() || k0.is_zero() || k1.is_zero() {
        return Err(KSpaceError::NoCrossing(window.name.clone()));
    }
    Ok(wrap_positive(after.arg() - before.arg()))
}
