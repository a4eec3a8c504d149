//! Domain types: ensemble constants, schedules, pulses, grids, scenario
//! configuration and the containers produced by runs and sweeps.
//!
//! Units are scaled: the medium spans `z ∈ [0, L]`, time is in microseconds
//! and every rate (detunings, Rabi frequencies, gradients) is in rad/us.
//! Field envelopes are normalised so that `|E|²` is a photon flux; the
//! matching energy held by the spin coherence is `(N/g)·∫|σ12|² dz`.

mod envelope;
mod schedule;
mod validate;

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::scalar::Real;

pub use envelope::{Envelope, PulseEnvelope, PulseLabel};
pub use schedule::{
    CouplingChannel, CouplingSchedule, CouplingSegment, GradientProfile, GradientSegment,
};
pub use validate::{validate, ValidationReport, Violation};

/// Physical constants of the atomic medium.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EnsembleParams<T> {
    /// Atom-light coupling strength `g`.
    pub g: T,
    /// Linear atomic density `N`.
    pub density: T,
    /// One-photon detuning `Δ` from the excited state, rad/us.
    pub delta: T,
    /// Spin-coherence decay rate `γ0`, 1/us.
    #[serde(default)]
    pub gamma0: T,
    /// Linewidth used only to quote the dimensionless optical depth `gNL/γ`.
    pub gamma_e: T,
    /// Medium length `L`.
    pub length: T,
}

impl<T: Real> EnsembleParams<T> {
    /// Conversion factor between stored coherence norm and optical energy.
    pub fn storage_scale(&self) -> T {
        self.density / self.g
    }
}

/// Dimensionless optical depth `gNL/γ`.
pub fn dimensionless_od<T: Real>(p: &EnsembleParams<T>) -> T {
    p.g * p.density * p.length / p.gamma_e
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Grid<T> {
    /// Spatial cells across the medium; a power of two.
    pub nz: usize,
    /// Uniform time steps over `[0, t_end]`.
    pub nt: usize,
    pub t_end: T,
}

impl<T: Real> Grid<T> {
    pub fn dt(&self) -> T {
        self.t_end / T::lit(self.nt.max(1) as f64)
    }

    pub fn dz(&self, length: T) -> T {
        length / T::lit(self.nz.max(1) as f64)
    }

    /// Cell-centre positions `(i + 1/2)·dz`.
    pub fn z_centers(&self, length: T) -> Vec<T> {
        let dz = self.dz(length);
        (0..self.nz)
            .map(|i| (T::lit(i as f64) + T::lit(0.5)) * dz)
            .collect()
    }
}

/// Named detection interval at the output face.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DetectionWindow<T> {
    pub name: String,
    pub t_start: T,
    pub t_end: T,
}

impl<T: Real> DetectionWindow<T> {
    pub fn new(name: impl Into<String>, t_start: T, t_end: T) -> Self {
        Self {
            name: name.into(),
            t_start,
            t_end,
        }
    }

    pub fn contains(&self, t: T) -> bool {
        t >= self.t_start && t <= self.t_end
    }

    pub fn center(&self) -> T {
        (self.t_start + self.t_end) * T::lit(0.5)
    }
}

/// Phenomenological overlap between the stored coherence and the steering mode.
///
/// At the interference window the probe-derived (stored) contribution to the
/// output is scaled by `mu`; afterwards the steering-derived contribution to
/// the remaining coherence is scaled by `mu`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ModeMismatch<T> {
    pub mu: T,
    /// Window in which the two arms meet at the output.
    #[serde(default)]
    pub window: Option<String>,
}

impl<T: Real> Default for ModeMismatch<T> {
    fn default() -> Self {
        Self {
            mu: T::one(),
            window: None,
        }
    }
}

impl<T: Real> ModeMismatch<T> {
    pub fn is_ideal(&self) -> bool {
        self.mu == T::one() || self.window.is_none()
    }
}

/// Unit annotations carried by every serialized scenario.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Units {
    pub time: String,
    pub rate: String,
    pub length: String,
    pub field: String,
}

impl Default for Units {
    fn default() -> Self {
        Self {
            time: "us".into(),
            rate: "rad/us".into(),
            length: "L (medium length)".into(),
            field: "sqrt(energy/us)".into(),
        }
    }
}

/// Complete description of one simulated experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ScenarioConfig<T> {
    #[serde(default)]
    pub units: Units,
    pub ensemble: EnsembleParams<T>,
    pub gradient: GradientProfile<T>,
    pub coupling: CouplingSchedule<T>,
    pub pulses: Vec<PulseEnvelope<T>>,
    pub grid: Grid<T>,
    pub windows: Vec<DetectionWindow<T>>,
    #[serde(default)]
    pub mode_mismatch: ModeMismatch<T>,
    /// Descriptive values with no effect on the dynamics (e.g. lab powers).
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario JSON: {0}")]
    Json(serde_json::Error),
}

impl<T: Real> ScenarioConfig<T> {
    pub fn optical_channels(&self) -> usize {
        let from_pulses = self.pulses.iter().map(|p| p.channel + 1).max().unwrap_or(0);
        self.coupling.optical_channels().max(from_pulses)
    }

    pub fn window(&self, name: &str) -> Option<&DetectionWindow<T>> {
        self.windows.iter().find(|w| w.name == name)
    }

    /// Boundary input on optical channel `j` at time `t`.
    pub fn input_at(&self, j: usize, t: T) -> Complex<T> {
        self.pulses
            .iter()
            .filter(|p| p.channel == j)
            .map(|p| p.amplitude(t))
            .fold(Complex::default(), |a, b| a + b)
    }

    /// Total injected energy over all pulses, assuming they do not overlap on
    /// a shared channel.
    pub fn nominal_input_energy(&self) -> T {
        self.pulses
            .iter()
            .map(PulseEnvelope::energy)
            .fold(T::zero(), |a, b| a + b)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(ConfigError::Json)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ConfigError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// SHA-256 of the compact JSON encoding, hex encoded.
    pub fn config_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

/// Optical envelopes `E_j(z)` at cell centres at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FieldState<T> {
    pub t: T,
    pub channels: Vec<Vec<Complex<T>>>,
}

/// Spin coherence `σ12(z)` at cell centres at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CoherenceState<T> {
    pub t: T,
    pub sigma: Vec<Complex<T>>,
}

/// `|ψ(k)|` on the record's k grid at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct KSpectrum<T> {
    pub t: T,
    pub magnitude: Vec<T>,
}

/// Time-indexed output of one solver run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SimulationRecord<T> {
    pub config: ScenarioConfig<T>,
    /// Sample times of `boundary_out` and `stored_energy`.
    pub times: Vec<T>,
    /// `E_j(t, z = L)` for each optical channel.
    pub boundary_out: Vec<Vec<Complex<T>>>,
    /// `(N/g)·∫|σ12|² dz` at each sample time.
    pub stored_energy: Vec<T>,
    pub snapshot_stride: Option<usize>,
    pub snapshots: Vec<(FieldState<T>, CoherenceState<T>)>,
    pub kspectrum_stride: Option<usize>,
    /// Wavenumbers `2πm/L`, ascending.
    pub k_grid: Vec<T>,
    pub k_spectra: Vec<KSpectrum<T>>,
    pub window_energies: BTreeMap<String, T>,
    /// Time-integrated input and output fluxes accumulated by the integrator.
    pub energy_in: T,
    pub energy_out: T,
}

impl<T: Real> SimulationRecord<T> {
    /// `Σ_j |E_j(t, L)|²` at each sample.
    pub fn output_intensity(&self) -> Vec<T> {
        (0..self.times.len())
            .map(|i| {
                self.boundary_out
                    .iter()
                    .map(|ch| ch[i].norm_sqr())
                    .fold(T::zero(), |a, b| a + b)
            })
            .collect()
    }

    pub fn final_stored_energy(&self) -> T {
        self.stored_energy.last().copied().unwrap_or_else(T::zero)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Port {
    E1,
    E2,
}

impl Port {
    pub fn window_name(self) -> &'static str {
        match self {
            Port::E1 => "E1",
            Port::E2 => "E2",
        }
    }
}

impl std::fmt::Display for Port {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.window_name())
    }
}

/// `I(φ) = A + B·cos(φ - φ0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SinusoidFit<T> {
    pub offset: T,
    pub amplitude: T,
    pub phase: T,
}

/// Energy samples of one port against the swept phase, with the fitted fringe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FringeDataset<T> {
    pub port: Port,
    pub samples: Vec<(T, T)>,
    pub fit: SinusoidFit<T>,
    pub visibility: T,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_params() -> EnsembleParams<f64> {
        EnsembleParams {
            g: 1.0,
            density: 1.0,
            delta: 1.0,
            gamma0: 0.0,
            gamma_e: 1.0,
            length: 1.0,
        }
    }

    #[test]
    fn od_identity_and_linearity() {
        let p = unit_params();
        assert_eq!(dimensionless_od(&p), 1.0);
        let mut q = p.clone();
        q.density = 2.0;
        assert_eq!(dimensionless_od(&q), 2.0);
        let fig = EnsembleParams {
            g: 8.0,
            density: 2.5,
            length: 1.0,
            gamma_e: 0.5,
            ..p
        };
        assert!((dimensionless_od(&fig) - 40.0).abs() < 1e-12);
    }

    #[test]
    fn od_scales_inversely_with_linewidth() {
        let p = EnsembleParams {
            g: 3.0f32,
            density: 2.0,
            delta: 1.0,
            gamma0: 0.0,
            gamma_e: 4.0,
            length: 0.5,
        };
        let mut q = p.clone();
        q.gamma_e = 8.0;
        assert!((dimensionless_od(&p) - 2.0 * dimensionless_od(&q)).abs() < 1e-6);
    }

    #[test]
    fn cell_centres() {
        let g = Grid {
            nz: 4,
            nt: 10,
            t_end: 1.0f64,
        };
        assert_eq!(g.z_centers(2.0), vec![0.25, 0.75, 1.25, 1.75]);
        assert!((g.dt() - 0.1).abs() < 1e-15);
    }
}
