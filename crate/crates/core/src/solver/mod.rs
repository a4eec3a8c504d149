//! Time integration of the coupled field/coherence equations on the `(t, z)`
//! grid.
//!
//! With the excited state adiabatically eliminated and the field in the
//! moving frame, optical channel `j` (coupled through `G_j = Σ_{c→j} Ω_c`)
//! and the spin coherence obey
//!
//! ```text
//! ∂z E_j = i N G_j*/Δ · σ12
//! ∂t σ12 = -[γ0 + i η(t)(z - L/2) + i Σ_c |Ω_c|²/Δ] σ12 + i g/Δ · Σ_j G_j E_j
//! ```
//!
//! Space is discretised with a box scheme: `σ12` lives at cell centres,
//! `E_j` at cell faces, and each cell sees the face average of the field.
//! This makes the semi-discrete system conserve
//! `(N/g)·Σ|σ_i|² dz + ∫|E_out|² dt - ∫|E_in|² dt` exactly, so energy
//! bookkeeping only carries the time-integration error. Time stepping is
//! explicit RK4 (or RK2) with steps split at every gradient or coupling
//! switch.

mod kspace;

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::analysis::pulse_energy_samples;
use crate::model::{
    validate, CoherenceState, FieldState, KSpectrum, ScenarioConfig, SimulationRecord,
    ValidationReport,
};
use crate::scalar::{polar, times_i, Real};

pub use kspace::{
    centroid_of, crossing_phase, dtft_at, k_centroid_track, k_grid, polariton_spectrum,
    KSpaceError, KTransform, KSPECTRUM_FLOOR,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Classical fourth-order Runge-Kutta.
    Rk4,
    /// Second-order midpoint rule, for convergence comparisons.
    Rk2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub integrator: Integrator,
    /// Include the light shift `Σ|Ω_c|²/Δ` on the coherence.
    pub stark_shift: bool,
    /// Keep every n-th field/coherence state; `None` keeps none.
    pub snapshot_stride: Option<usize>,
    /// Keep `|ψ(k)|` every n-th step; `None` keeps none.
    pub kspectrum_stride: Option<usize>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            integrator: Integrator::Rk4,
            stark_shift: true,
            snapshot_stride: None,
            kspectrum_stride: None,
        }
    }
}

impl SolverSettings {
    /// Records snapshots and k-spectra at the same stride.
    pub fn with_history(stride: usize) -> Self {
        Self {
            snapshot_stride: Some(stride),
            kspectrum_stride: Some(stride),
            ..Self::default()
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("invalid scenario:\n{0}")]
    InvalidConfig(ValidationReport),
    #[error("time step violates stability bounds:\n{0}")]
    StabilityBound(ValidationReport),
    #[error("solution became non-finite at step {step} (t = {t}); max |sigma| before blow-up = {max_abs}")]
    NonFinite { step: usize, t: f64, max_abs: f64 },
    #[error("invalid solver settings: {0}")]
    Settings(String),
}

/// Piecewise-constant drive data frozen over one step.
struct Drive<T> {
    eta: T,
    stark: T,
    /// Per coupling channel: (optical index, |Ω|e^{iφ}, frame offset).
    couplings: Vec<(usize, Complex<T>, T)>,
}

/// Discretised medium and the right-hand side of the equations of motion.
struct Medium<'a, T: Real> {
    config: &'a ScenarioConfig<T>,
    offsets: Vec<T>,
    dz: T,
    n_opt: usize,
    stark_on: bool,
}

impl<'a, T: Real> Medium<'a, T> {
    fn new(config: &'a ScenarioConfig<T>, stark_on: bool) -> Self {
        let l = config.ensemble.length;
        let half = l * T::lit(0.5);
        let offsets = config
            .grid
            .z_centers(l)
            .into_iter()
            .map(|z| z - half)
            .collect();
        Self {
            config,
            offsets,
            dz: config.grid.dz(l),
            n_opt: config.optical_channels(),
            stark_on,
        }
    }

    fn drive(&self, t: T) -> Drive<T> {
        let p = &self.config.ensemble;
        Drive {
            eta: self.config.gradient.eta_at(t),
            stark: if self.stark_on {
                self.config.coupling.stark_shift(t, p.delta)
            } else {
                T::zero()
            },
            couplings: self
                .config
                .coupling
                .channels
                .iter()
                .map(|c| (c.optical, c.rabi_at(t), c.raman_offset))
                .collect(),
        }
    }

    fn optical_coupling(&self, drive: &Drive<T>, j: usize, t: T) -> Complex<T> {
        drive
            .couplings
            .iter()
            .filter(|(o, _, _)| *o == j)
            .map(|&(_, rabi, off)| {
                if off.is_zero() {
                    rabi
                } else {
                    rabi * polar(T::one(), -off * t)
                }
            })
            .fold(Complex::default(), |a, b| a + b)
    }

    /// Writes `dσ/dt` into `out`, the output fields into `e_out`, and returns
    /// `(Σ|E_in|², Σ|E_out|²)`.
    fn rhs(
        &self,
        drive: &Drive<T>,
        t: T,
        sigma: &[Complex<T>],
        out: &mut [Complex<T>],
        e_out: &mut [Complex<T>],
    ) -> (T, T) {
        let p = &self.config.ensemble;
        let gamma0 = p.gamma0;
        for ((o, s), x) in out.iter_mut().zip(sigma).zip(&self.offsets) {
            let rate = Complex::new(gamma0, drive.eta * *x + drive.stark);
            *o = -(rate * s);
        }
        let half = T::lit(0.5);
        let mut flux_in = T::zero();
        let mut flux_out = T::zero();
        for j in 0..self.n_opt {
            let g_j = self.optical_coupling(drive, j, t);
            let e_in = self.config.input_at(j, t);
            // face-to-face increment a·σ_i and source coefficient b
            let a = times_i(g_j.conj() * (p.density * self.dz / p.delta));
            let b = times_i(g_j * (p.g / p.delta));
            let mut e = e_in;
            for (o, s) in out.iter_mut().zip(sigma) {
                let step = a * s;
                let centre = e + step * half;
                *o = *o + b * centre;
                e = e + step;
            }
            e_out[j] = e;
            flux_in = flux_in + e_in.norm_sqr();
            flux_out = flux_out + e.norm_sqr();
        }
        (flux_in, flux_out)
    }

    /// Cell-centre fields and output fields at `t`.
    fn fields(&self, drive: &Drive<T>, t: T, sigma: &[Complex<T>]) -> Vec<Vec<Complex<T>>> {
        let p = &self.config.ensemble;
        let half = T::lit(0.5);
        (0..self.n_opt)
            .map(|j| {
                let g_j = self.optical_coupling(drive, j, t);
                let a = times_i(g_j.conj() * (p.density * self.dz / p.delta));
                let mut e = self.config.input_at(j, t);
                sigma
                    .iter()
                    .map(|s| {
                        let step = a * s;
                        let centre = e + step * half;
                        e = e + step;
                        centre
                    })
                    .collect()
            })
            .collect()
    }

    fn output(&self, drive: &Drive<T>, t: T, sigma: &[Complex<T>]) -> Vec<Complex<T>> {
        let p = &self.config.ensemble;
        (0..self.n_opt)
            .map(|j| {
                let g_j = self.optical_coupling(drive, j, t);
                let a = times_i(g_j.conj() * (p.density * self.dz / p.delta));
                let sum = sigma.iter().fold(Complex::default(), |acc, s| acc + s);
                self.config.input_at(j, t) + a * sum
            })
            .collect()
    }

    fn stored_energy(&self, sigma: &[Complex<T>]) -> T {
        let norm = sigma.iter().fold(T::zero(), |acc, s| acc + s.norm_sqr());
        self.config.ensemble.storage_scale() * norm * self.dz
    }
}

/// Uniform step grid with every switch time inserted (or snapped onto a
/// grid point it coincides with).
fn step_times<T: Real>(config: &ScenarioConfig<T>) -> Vec<T> {
    let dt = config.grid.dt();
    let t_end = config.grid.t_end;
    let mut times: Vec<T> = (0..=config.grid.nt)
        .map(|i| T::lit(i as f64) * dt)
        .collect();
    *times.last_mut().expect("nt >= 1") = t_end;
    let snap = dt * T::lit(1e-6);
    let mut breaks: Vec<T> = config
        .gradient
        .switch_times()
        .chain(config.coupling.switch_times())
        .filter(|&b| b > T::zero() && b < t_end)
        .collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite switch times"));
    breaks.dedup();
    for b in breaks {
        let idx = times.partition_point(|&t| t < b);
        if idx < times.len() && (times[idx] - b).abs() <= snap {
            times[idx] = b;
        } else if idx > 0 && (b - times[idx - 1]).abs() <= snap {
            times[idx - 1] = b;
        } else {
            times.insert(idx, b);
        }
    }
    times
}

/// Integrates a validated scenario and returns its full record.
pub fn run<T: Real>(
    config: &ScenarioConfig<T>,
    settings: &SolverSettings,
) -> Result<SimulationRecord<T>, SolverError> {
    let report = validate(config);
    if !report.is_ok() {
        let only_bounds = report.violations.iter().all(|v| v.message.contains("bound"));
        return Err(if only_bounds {
            SolverError::StabilityBound(report)
        } else {
            SolverError::InvalidConfig(report)
        });
    }
    if settings.snapshot_stride == Some(0) || settings.kspectrum_stride == Some(0) {
        return Err(SolverError::Settings("strides must be at least 1".into()));
    }

    let medium = Medium::new(config, settings.stark_shift);
    let nz = config.grid.nz;
    let n_opt = medium.n_opt;
    let times = step_times(config);
    let ktrans = KTransform::new(nz, config.ensemble.length);

    let mut sigma = vec![Complex::<T>::default(); nz];
    let mut scratch = vec![Complex::<T>::default(); nz];
    let mut stages: [Vec<Complex<T>>; 4] = std::array::from_fn(|_| vec![Complex::default(); nz]);
    let mut e_out = vec![Complex::<T>::default(); n_opt];

    let mut boundary_out: Vec<Vec<Complex<T>>> = vec![Vec::with_capacity(times.len()); n_opt];
    let mut stored_energy = Vec::with_capacity(times.len());
    let mut snapshots = Vec::new();
    let mut k_spectra = Vec::new();
    let mut energy_in = T::zero();
    let mut energy_out = T::zero();

    let record_sample = |idx: usize,
                         t: T,
                         drive: &Drive<T>,
                         sigma: &[Complex<T>],
                         boundary_out: &mut Vec<Vec<Complex<T>>>,
                         stored_energy: &mut Vec<T>,
                         snapshots: &mut Vec<(FieldState<T>, CoherenceState<T>)>,
                         k_spectra: &mut Vec<KSpectrum<T>>| {
        for (j, v) in medium.output(drive, t, sigma).into_iter().enumerate() {
            boundary_out[j].push(v);
        }
        stored_energy.push(medium.stored_energy(sigma));
        let want_snap = settings.snapshot_stride.is_some_and(|s| idx.is_multiple_of(s));
        let want_k = settings.kspectrum_stride.is_some_and(|s| idx.is_multiple_of(s));
        if want_snap || want_k {
            let field = FieldState {
                t,
                channels: medium.fields(drive, t, sigma),
            };
            let coh = CoherenceState {
                t,
                sigma: sigma.to_vec(),
            };
            if want_k {
                let omega = medium.optical_coupling(drive, 0, t);
                let psi = ktrans.polariton(&field.channels[0], &coh.sigma, &config.ensemble, omega);
                k_spectra.push(KSpectrum {
                    t,
                    magnitude: psi.iter().map(|c| c.norm()).collect(),
                });
            }
            if want_snap {
                snapshots.push((field, coh));
            }
        }
    };

    let first_drive = medium.drive(times[0]);
    record_sample(
        0,
        times[0],
        &first_drive,
        &sigma,
        &mut boundary_out,
        &mut stored_energy,
        &mut snapshots,
        &mut k_spectra,
    );

    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let two = T::lit(2.0);
    for (step, w) in times.windows(2).enumerate() {
        let (t0, t1) = (w[0], w[1]);
        let h = t1 - t0;
        // coefficients are constant inside a step; sample them at its midpoint
        let drive = medium.drive(t0 + h * half);
        match settings.integrator {
            Integrator::Rk4 => {
                let [k1, k2, k3, k4] = &mut stages;
                let (i1, o1) = medium.rhs(&drive, t0, &sigma, k1, &mut e_out);
                axpy(&mut scratch, &sigma, k1, h * half);
                let (i2, o2) = medium.rhs(&drive, t0 + h * half, &scratch, k2, &mut e_out);
                axpy(&mut scratch, &sigma, k2, h * half);
                let (i3, o3) = medium.rhs(&drive, t0 + h * half, &scratch, k3, &mut e_out);
                axpy(&mut scratch, &sigma, k3, h);
                let (i4, o4) = medium.rhs(&drive, t1, &scratch, k4, &mut e_out);
                let c = h * sixth;
                for i in 0..nz {
                    sigma[i] = sigma[i] + (k1[i] + (k2[i] + k3[i]) * two + k4[i]) * c;
                }
                energy_in = energy_in + (i1 + (i2 + i3) * two + i4) * c;
                energy_out = energy_out + (o1 + (o2 + o3) * two + o4) * c;
            }
            Integrator::Rk2 => {
                let [k1, k2, _, _] = &mut stages;
                let _ = medium.rhs(&drive, t0, &sigma, k1, &mut e_out);
                axpy(&mut scratch, &sigma, k1, h * half);
                let (im, om) = medium.rhs(&drive, t0 + h * half, &scratch, k2, &mut e_out);
                for i in 0..nz {
                    sigma[i] = sigma[i] + k2[i] * h;
                }
                energy_in = energy_in + im * h;
                energy_out = energy_out + om * h;
            }
        }
        let norm: T = sigma.iter().fold(T::zero(), |a, s| a + s.norm_sqr());
        if !norm.is_finite() {
            let max_abs = stored_energy.last().copied().unwrap_or_else(T::zero);
            return Err(SolverError::NonFinite {
                step: step + 1,
                t: t1.as_f64(),
                max_abs: (max_abs / (config.ensemble.storage_scale() * medium.dz))
                    .sqrt()
                    .as_f64(),
            });
        }
        record_sample(
            step + 1,
            t1,
            &drive,
            &sigma,
            &mut boundary_out,
            &mut stored_energy,
            &mut snapshots,
            &mut k_spectra,
        );
    }

    let mut record = SimulationRecord {
        config: config.clone(),
        times,
        boundary_out,
        stored_energy,
        snapshot_stride: settings.snapshot_stride,
        snapshots,
        kspectrum_stride: settings.kspectrum_stride,
        k_grid: ktrans.k_grid().to_vec(),
        k_spectra,
        window_energies: BTreeMap::new(),
        energy_in,
        energy_out,
    };
    record.window_energies = window_energies(&record);
    Ok(record)
}

/// Recomputes every declared window energy from `boundary_out`.
pub fn window_energies<T: Real>(record: &SimulationRecord<T>) -> BTreeMap<String, T> {
    let intensity = record.output_intensity();
    record
        .config
        .windows
        .iter()
        .map(|w| {
            let e = pulse_energy_samples(&record.times, &intensity, w.t_start, w.t_end)
                .unwrap_or_else(|_| T::zero());
            (w.name.clone(), e)
        })
        .collect()
}

fn axpy<T: Real>(out: &mut [Complex<T>], x: &[Complex<T>], k: &[Complex<T>], a: T) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + ki * a;
    }
}
