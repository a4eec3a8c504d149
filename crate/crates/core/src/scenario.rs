//! Protocol builders for the time-domain and frequency-domain interference
//! experiments, the named presets, and the run orchestration that applies
//! mode mismatch.
//!
//! Physical parameters are given in experiment-facing form ([`MediumParams`])
//! and converted to ensemble constants with `N = 1`, `L = 1`:
//! `η = 2π·bandwidth`, `Ω = (Ω/Δ)·Δ`, `gN = β·η/(Ω/Δ)²` and
//! `γ_e = gNL/od`.

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::ScenarioFamily;
use crate::model::{
    validate, CouplingChannel, CouplingSchedule, CouplingSegment, DetectionWindow,
    EnsembleParams, Envelope, GradientProfile, Grid, ModeMismatch, PulseEnvelope, PulseLabel,
    ScenarioConfig, SimulationRecord, Units, ValidationReport,
};
use crate::oracle::{self, OracleError};
use crate::scalar::{polar, Real};
use crate::solver::{self, window_energies, SolverError, SolverSettings};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("channel separation {separation_mhz} MHz does not exceed the memory bandwidth {bandwidth_mhz} MHz")]
    SeparationTooSmall {
        separation_mhz: f64,
        bandwidth_mhz: f64,
    },
    #[error("inconsistent timing: {0}")]
    Timing(String),
    #[error("unknown preset {0:?} (expected fig2, time-domain or freq-domain)")]
    UnknownPreset(String),
    #[error("bad preset override: {0}")]
    Override(String),
    #[error("dry run produced no echo in window {0}")]
    NoEcho(String),
}

/// Ensemble and grid settings shared by both protocols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default)]
pub struct MediumParams<T> {
    /// Resonant optical depth `gNL/γ_e`.
    pub od: T,
    pub omega_over_delta: T,
    /// One-photon detuning in rad/us.
    pub delta: T,
    /// Gradient-broadened Raman linewidth `ηL/2π` in MHz.
    pub bandwidth_mhz: T,
    /// Effective optical depth of the write stage.
    pub write_beta: T,
    pub gamma0: T,
    pub nz: usize,
    pub dt: T,
    /// Offset each coupling frame by the write-stage light shift.
    pub stark_compensation: bool,
}

impl<T: Real> Default for MediumParams<T> {
    fn default() -> Self {
        Self {
            od: T::lit(40.0),
            omega_over_delta: T::lit(0.75),
            delta: T::lit(0.5),
            bandwidth_mhz: T::lit(0.6),
            write_beta: T::lit(0.5),
            gamma0: T::zero(),
            nz: 512,
            dt: T::lit(0.01),
            stark_compensation: true,
        }
    }
}

impl<T: Real> MediumParams<T> {
    pub fn eta(&self) -> T {
        T::TAU() * self.bandwidth_mhz
    }

    pub fn write_rabi(&self) -> T {
        self.omega_over_delta * self.delta
    }

    pub fn ensemble(&self) -> EnsembleParams<T> {
        let gn = self.write_beta * self.eta() / (self.omega_over_delta * self.omega_over_delta);
        EnsembleParams {
            g: gn,
            density: T::one(),
            delta: self.delta,
            gamma0: self.gamma0,
            gamma_e: gn / self.od,
            length: T::one(),
        }
    }

    fn grid(&self, t_end: T) -> Grid<T> {
        let nt = (t_end / self.dt).ceil().to_usize().unwrap_or(1).max(1);
        Grid {
            nz: self.nz,
            nt,
            t_end,
        }
    }

    fn check(&self) -> Result<(), ScenarioError> {
        let positive = [
            ("od", self.od),
            ("omega_over_delta", self.omega_over_delta),
            ("bandwidth_mhz", self.bandwidth_mhz),
            ("write_beta", self.write_beta),
            ("dt", self.dt),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) {
                return Err(ScenarioError::Override(format!("{name} must be positive, got {v}")));
            }
        }
        if self.delta.is_zero() || !self.delta.is_finite() {
            return Err(ScenarioError::Override("delta must be nonzero".into()));
        }
        Ok(())
    }
}

/// How the steering envelope is shaped from the dry run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteeringShape {
    /// Copy of the dry-run echo, sample for sample.
    EchoCopy,
    /// Probe-shaped Gaussian centred on the dry-run echo peak.
    ProbeCopy,
}

/// Which phase a time-domain fringe sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKnob {
    /// Phase of the steering pulse relative to the bare echo.
    Steering,
    /// Phase of the coupling field during the interference event.
    Coupling,
}

/// How the interference-event coupling is chosen when not given explicitly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Balance {
    /// Closed-form balance from the beamsplitter model.
    Oracle,
    /// Oracle start refined by minimising the solver's E1 energy at θ = π.
    Refined,
}

/// Time-domain protocol: write, hold, interfere with a steering pulse, recall.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default)]
pub struct TimeDomainParams<T> {
    #[serde(flatten)]
    pub medium: MediumParams<T>,
    /// Probe duration (twice the intensity FWHM) in us.
    pub pulse_duration: T,
    pub tau1: T,
    pub tau2: T,
    /// Steering phase relative to the bare echo, rad.
    pub theta: T,
    /// Steering amplitude relative to the probe.
    pub steering_amplitude: T,
    /// Coupling amplitude factor during the interference event; `None`
    /// balances it according to `balance`.
    pub interference_coupling: Option<T>,
    pub balance: Balance,
    /// Coupling phase during the interference event, rad.
    pub interference_phase: T,
    /// Coupling amplitude factor for the final recall.
    pub readout_coupling: T,
    pub steering_shape: SteeringShape,
    pub phase_knob: PhaseKnob,
    pub mu: T,
    pub metadata: BTreeMap<String, String>,
}

impl<T: Real> Default for TimeDomainParams<T> {
    fn default() -> Self {
        let mut metadata = BTreeMap::new();
        metadata.insert("coupling_power_max".into(), "330 mW".into());
        Self {
            medium: MediumParams::default(),
            pulse_duration: T::lit(4.0),
            tau1: T::lit(10.0),
            tau2: T::lit(10.0),
            theta: T::zero(),
            steering_amplitude: T::one(),
            interference_coupling: None,
            balance: Balance::Refined,
            interference_phase: T::zero(),
            readout_coupling: T::one(),
            steering_shape: SteeringShape::EchoCopy,
            phase_knob: PhaseKnob::Steering,
            mu: T::one(),
            metadata,
        }
    }
}

/// Event times of the time-domain protocol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeDomainTimeline<T> {
    pub probe_center: T,
    pub flip1: T,
    pub echo1: T,
    pub flip2: T,
    pub echo2: T,
    pub t_end: T,
}

impl<T: Real> TimeDomainParams<T> {
    pub fn timeline(&self) -> TimeDomainTimeline<T> {
        let d = self.pulse_duration;
        let half = T::lit(0.5);
        let probe_center = d;
        let echo1 = probe_center + self.tau1;
        let echo2 = echo1 + self.tau2;
        TimeDomainTimeline {
            probe_center,
            flip1: probe_center + self.tau1 * half,
            echo1,
            flip2: echo1 + self.tau2 * half,
            echo2,
            t_end: echo2 + d + T::lit(2.0),
        }
    }

    fn check(&self) -> Result<(), ScenarioError> {
        self.medium.check()?;
        let d = self.pulse_duration;
        if !(d > T::zero()) {
            return Err(ScenarioError::Timing("pulse_duration must be positive".into()));
        }
        if !(self.tau1 >= d + d) || !(self.tau2 >= d + d) {
            return Err(ScenarioError::Timing(format!(
                "storage times ({}, {}) must be at least twice the pulse duration {d}",
                self.tau1, self.tau2
            )));
        }
        if self.steering_amplitude < T::zero() {
            return Err(ScenarioError::Override("steering_amplitude must be >= 0".into()));
        }
        Ok(())
    }

    fn probe_envelope(&self) -> Envelope<T> {
        Envelope::Gaussian {
            center: self.timeline().probe_center,
            fwhm: self.pulse_duration * T::lit(0.5),
            peak: T::one(),
            phase: T::zero(),
        }
    }

    fn windows(&self) -> Vec<DetectionWindow<T>> {
        let tl = self.timeline();
        let d = self.pulse_duration;
        vec![
            DetectionWindow::new("leak", T::zero(), tl.probe_center + d),
            DetectionWindow::new("E1", tl.echo1 - d, tl.echo1 + d),
            DetectionWindow::new("E2", tl.echo2 - d, tl.echo2 + d),
        ]
    }

    /// Interference-event coupling factor predicted by the beamsplitter model.
    pub fn oracle_balance(&self) -> Result<T, ScenarioError> {
        let probe = self.probe_envelope().energy().sqrt();
        let beta2 = oracle::balance_coupling(
            oracle::reflectivity(self.medium.write_beta),
            self.medium.gamma0,
            self.tau1,
            probe,
            probe * self.steering_amplitude,
        )?;
        Ok((beta2 / self.medium.write_beta).sqrt())
    }

    /// Config with an explicit steering envelope (or none) and interference
    /// coupling `factor·e^{i·phase}`.
    fn assemble(
        &self,
        factor: T,
        coupling_phase: T,
        steering: Option<Envelope<T>>,
    ) -> ScenarioConfig<T> {
        let m = &self.medium;
        let tl = self.timeline();
        let rabi = m.write_rabi();
        let mut channel = CouplingChannel {
            optical: 0,
            raman_offset: T::zero(),
            segments: vec![
                CouplingSegment {
                    t_start: T::zero(),
                    rabi,
                    phase: T::zero(),
                },
                CouplingSegment {
                    t_start: tl.flip1,
                    rabi: rabi * factor,
                    phase: coupling_phase,
                },
                CouplingSegment {
                    t_start: tl.flip2,
                    rabi: rabi * self.readout_coupling,
                    phase: T::zero(),
                },
            ],
        };
        if m.stark_compensation {
            channel.raman_offset = rabi * rabi / m.delta;
        }
        let mut pulses = vec![PulseEnvelope::new(PulseLabel::Probe, 0, self.probe_envelope())];
        if let Some(s) = steering {
            pulses.push(PulseEnvelope::new(PulseLabel::Steering, 0, s));
        }
        let mut metadata = self.metadata.clone();
        metadata.insert("protocol".into(), "time-domain".into());
        metadata.insert("interference_coupling".into(), format!("{factor}"));
        ScenarioConfig {
            units: Units::default(),
            ensemble: m.ensemble(),
            gradient: GradientProfile::flipping(m.eta(), &[tl.flip1, tl.flip2]),
            coupling: CouplingSchedule {
                channels: vec![channel],
            },
            pulses,
            grid: m.grid(tl.t_end),
            windows: self.windows(),
            mode_mismatch: ModeMismatch {
                mu: self.mu,
                window: Some("E1".into()),
            },
            metadata,
        }
    }
}

/// Time-domain scenarios sharing one dry-run steering shape.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeDomainFamily<T: Real> {
    pub params: TimeDomainParams<T>,
    /// Interference coupling factor in use.
    pub factor: T,
    /// Factor the coupling sweep normalises to.
    pub reference_factor: T,
    /// Unit-energy steering shape in the bare-echo phase reference.
    pub steering_unit: Option<Envelope<T>>,
}

impl<T: Real> TimeDomainFamily<T> {
    pub fn new(params: TimeDomainParams<T>, settings: &SolverSettings) -> Result<Self, ScenarioError> {
        params.check()?;
        let factor = match params.interference_coupling {
            Some(f) => f,
            None if params.steering_amplitude.is_zero() => T::one(),
            None => {
                let f0 = params.oracle_balance()?;
                match params.balance {
                    Balance::Oracle => f0,
                    Balance::Refined => refine_balance(&params, f0, settings)?,
                }
            }
        };
        Self::with_factor(params, factor, settings)
    }

    fn with_factor(
        params: TimeDomainParams<T>,
        factor: T,
        settings: &SolverSettings,
    ) -> Result<Self, ScenarioError> {
        let steering_unit = if params.steering_amplitude.is_zero() {
            None
        } else {
            Some(steering_shape(&params, factor, settings)?)
        };
        Ok(Self {
            params,
            factor,
            reference_factor: factor,
            steering_unit,
        })
    }

    fn config(&self, theta: T, coupling_phase: T) -> ScenarioConfig<T> {
        let probe_energy = self.params.probe_envelope().energy();
        let steering = self.steering_unit.as_ref().map(|u| {
            u.scaled(polar(
                self.params.steering_amplitude * probe_energy.sqrt(),
                theta,
            ))
        });
        self.params.assemble(self.factor, coupling_phase, steering)
    }

    /// Config at the parameters' own θ and coupling phase.
    pub fn nominal(&self) -> ScenarioConfig<T> {
        self.config(self.params.theta, self.params.interference_phase)
    }
}

impl<T: Real> ScenarioFamily<T> for TimeDomainFamily<T> {
    fn at_phase(&self, phase: T) -> Result<ScenarioConfig<T>, ScenarioError> {
        Ok(match self.params.phase_knob {
            PhaseKnob::Steering => self.config(phase, self.params.interference_phase),
            PhaseKnob::Coupling => self.config(self.params.theta, phase),
        })
    }

    /// Scales the interference coupling power, keeping the steering shape.
    fn with_coupling_power(&self, relative_power: T) -> Result<Self, ScenarioError> {
        if !(relative_power > T::zero()) {
            return Err(ScenarioError::Override("coupling power must be positive".into()));
        }
        let mut next = self.clone();
        next.factor = self.reference_factor * relative_power.sqrt();
        Ok(next)
    }

    fn with_mismatch(&self, mu: T) -> Result<Self, ScenarioError> {
        let mut next = self.clone();
        next.params.mu = mu;
        Ok(next)
    }
}

/// Dry run without steering; returns the E1 echo as a unit-energy envelope.
fn steering_shape<T: Real>(
    params: &TimeDomainParams<T>,
    factor: T,
    settings: &SolverSettings,
) -> Result<Envelope<T>, ScenarioError> {
    let mut dry = params.assemble(factor, params.interference_phase, None);
    dry.mode_mismatch = ModeMismatch::default();
    let quiet = SolverSettings {
        snapshot_stride: None,
        kspectrum_stride: None,
        ..settings.clone()
    };
    let rec = solver::run(&dry, &quiet)?;
    let w = dry
        .window("E1")
        .cloned()
        .ok_or_else(|| ScenarioError::NoEcho("E1".into()))?;
    let (times, values): (Vec<T>, Vec<Complex<T>>) = rec
        .times
        .iter()
        .zip(&rec.boundary_out[0])
        .filter(|(t, _)| w.contains(**t))
        .map(|(t, v)| (*t, *v))
        .unzip();
    let echo = Envelope::Sampled { times, values };
    let energy = echo.energy();
    if !(energy > T::zero()) {
        return Err(ScenarioError::NoEcho("E1".into()));
    }
    let unit = echo.scaled(Complex::new(T::one() / energy.sqrt(), T::zero()));
    Ok(match params.steering_shape {
        SteeringShape::EchoCopy => unit,
        SteeringShape::ProbeCopy => {
            let Envelope::Sampled { times, values } = &unit else {
                unreachable!()
            };
            let (i, _) = values
                .iter()
                .enumerate()
                .fold((0, T::zero()), |best, (i, v)| {
                    if v.norm() > best.1 {
                        (i, v.norm())
                    } else {
                        best
                    }
                });
            let shape = Envelope::Gaussian {
                center: times[i],
                fwhm: params.pulse_duration * T::lit(0.5),
                peak: T::one(),
                phase: values[i].arg(),
            };
            let e = shape.energy();
            shape.scaled(Complex::new(T::one() / e.sqrt(), T::zero()))
        }
    })
}

/// Golden-section search for the interference factor minimising the solver's
/// E1 energy at θ = π, bracketed around the oracle value `f0`.
fn refine_balance<T: Real>(
    params: &TimeDomainParams<T>,
    f0: T,
    settings: &SolverSettings,
) -> Result<T, ScenarioError> {
    let quiet = SolverSettings {
        snapshot_stride: None,
        kspectrum_stride: None,
        ..settings.clone()
    };
    let mut ideal = params.clone();
    ideal.mu = T::one();
    let suppressed = |f: T| -> Result<T, ScenarioError> {
        let fam = TimeDomainFamily::with_factor(ideal.clone(), f, &quiet)?;
        let rec = run_scenario(&fam.config(T::PI(), params.interference_phase), &quiet)?;
        Ok(rec.window_energies.get("E1").copied().unwrap_or_else(T::zero))
    };
    let inv_phi = T::lit(0.5 * (5f64.sqrt() - 1.0));
    let (mut a, mut b) = (f0 * T::lit(0.75), f0 * T::lit(1.3));
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let (mut fc, mut fd) = (suppressed(c)?, suppressed(d)?);
    while (b - a) > f0 * T::lit(2e-3) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = suppressed(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = suppressed(d)?;
        }
    }
    Ok((a + b) * T::lit(0.5))
}

/// Time-domain scenario at the parameters' θ, running the dry run (and the
/// balance search) as needed.
pub fn build_time_domain<T: Real>(params: &TimeDomainParams<T>) -> Result<ScenarioConfig<T>, ScenarioError> {
    let fam = TimeDomainFamily::new(params.clone(), &SolverSettings::default())?;
    finish(fam.nominal())
}

fn finish<T: Real>(config: ScenarioConfig<T>) -> Result<ScenarioConfig<T>, ScenarioError> {
    let report = validate(&config);
    if report.is_ok() {
        Ok(config)
    } else {
        Err(ScenarioError::Invalid(report))
    }
}

/// Frequency-domain protocol: simultaneous probe and steering pulses on two
/// Raman lines sharing one gradient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default)]
pub struct FrequencyDomainParams<T> {
    #[serde(flatten)]
    pub medium: MediumParams<T>,
    pub pulse_duration: T,
    /// Time from the input pulses to the recall, us.
    pub storage_time: T,
    pub separation_mhz: T,
    /// Phase of the second coupling field, rad.
    pub coupling_phase: T,
    pub steering_amplitude: T,
    pub steering_phase: T,
    /// `|Ω2|/|Ω1|`.
    pub coupling_ratio: T,
    /// Put both lines on one optical channel with an explicit beat note.
    pub beat_note: bool,
    pub mu: T,
    pub metadata: BTreeMap<String, String>,
}

impl<T: Real> Default for FrequencyDomainParams<T> {
    fn default() -> Self {
        let mut metadata = BTreeMap::new();
        metadata.insert("coupling_power_each".into(), "160 mW".into());
        Self {
            medium: MediumParams::default(),
            pulse_duration: T::lit(4.0),
            storage_time: T::lit(10.0),
            separation_mhz: T::one(),
            coupling_phase: T::zero(),
            steering_amplitude: T::one(),
            steering_phase: T::zero(),
            coupling_ratio: T::one(),
            beat_note: false,
            mu: T::one(),
            metadata,
        }
    }
}

impl<T: Real> FrequencyDomainParams<T> {
    fn check(&self) -> Result<(), ScenarioError> {
        self.medium.check()?;
        let d = self.pulse_duration;
        if !(d > T::zero()) {
            return Err(ScenarioError::Timing("pulse_duration must be positive".into()));
        }
        if !(self.storage_time >= d + d) {
            return Err(ScenarioError::Timing(format!(
                "storage time {} must be at least twice the pulse duration {d}",
                self.storage_time
            )));
        }
        if !(self.separation_mhz > self.medium.bandwidth_mhz) {
            return Err(ScenarioError::SeparationTooSmall {
                separation_mhz: self.separation_mhz.as_f64(),
                bandwidth_mhz: self.medium.bandwidth_mhz.as_f64(),
            });
        }
        if self.steering_amplitude < T::zero() || self.coupling_ratio < T::zero() {
            return Err(ScenarioError::Override(
                "steering_amplitude and coupling_ratio must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Frequency-domain scenario at the parameters' coupling phase.
pub fn build_frequency_domain<T: Real>(
    params: &FrequencyDomainParams<T>,
) -> Result<ScenarioConfig<T>, ScenarioError> {
    params.check()?;
    let m = &params.medium;
    let d = params.pulse_duration;
    let half = T::lit(0.5);
    let center = d;
    let flip = center + params.storage_time * half;
    let recall = center + params.storage_time;
    let rabi = m.write_rabi();
    let steering_on = !params.steering_amplitude.is_zero();
    let total_rabi_sq = if steering_on {
        rabi * rabi * (T::one() + params.coupling_ratio * params.coupling_ratio)
    } else {
        rabi * rabi
    };
    let offset = if m.stark_compensation {
        total_rabi_sq / m.delta
    } else {
        T::zero()
    };
    let omega_s = T::TAU() * params.separation_mhz;

    let gaussian = |amp: T, phase: T| Envelope::Gaussian {
        center,
        fwhm: d * half,
        peak: amp,
        phase,
    };
    let mut channels = vec![CouplingChannel {
        raman_offset: offset,
        ..CouplingChannel::constant(0, rabi, T::zero())
    }];
    let mut pulses = vec![PulseEnvelope::new(
        PulseLabel::Probe,
        0,
        gaussian(T::one(), T::zero()),
    )];
    if steering_on {
        let steer = gaussian(params.steering_amplitude, params.steering_phase);
        if params.beat_note {
            channels.push(CouplingChannel {
                raman_offset: offset - omega_s,
                ..CouplingChannel::constant(0, rabi * params.coupling_ratio, params.coupling_phase)
            });
            pulses.push(PulseEnvelope {
                carrier_offset: omega_s,
                ..PulseEnvelope::new(PulseLabel::Steering, 0, steer)
            });
        } else {
            channels.push(CouplingChannel {
                raman_offset: offset,
                ..CouplingChannel::constant(1, rabi * params.coupling_ratio, params.coupling_phase)
            });
            pulses.push(PulseEnvelope::new(PulseLabel::Steering, 1, steer));
        }
    }
    let mut metadata = params.metadata.clone();
    metadata.insert("protocol".into(), "freq-domain".into());
    metadata.insert("separation_mhz".into(), format!("{}", params.separation_mhz));
    let t_end = recall + d + T::lit(2.0);
    finish(ScenarioConfig {
        units: Units::default(),
        ensemble: m.ensemble(),
        gradient: GradientProfile::flipping(m.eta(), &[flip]),
        coupling: CouplingSchedule { channels },
        pulses,
        grid: m.grid(t_end),
        windows: vec![
            DetectionWindow::new("E1", T::zero(), center + d),
            DetectionWindow::new("E2", recall - d, recall + d),
        ],
        mode_mismatch: ModeMismatch {
            mu: params.mu,
            window: Some("E2".into()),
        },
        metadata,
    })
}

/// Frequency-domain scenarios swept over the second coupling phase.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyDomainFamily<T: Real> {
    pub params: FrequencyDomainParams<T>,
}

impl<T: Real> ScenarioFamily<T> for FrequencyDomainFamily<T> {
    fn at_phase(&self, phase: T) -> Result<ScenarioConfig<T>, ScenarioError> {
        let mut p = self.params.clone();
        p.coupling_phase = phase;
        build_frequency_domain(&p)
    }

    /// Scales both coupling powers together.
    fn with_coupling_power(&self, relative_power: T) -> Result<Self, ScenarioError> {
        if !(relative_power > T::zero()) {
            return Err(ScenarioError::Override("coupling power must be positive".into()));
        }
        let mut p = self.params.clone();
        p.medium.omega_over_delta = p.medium.omega_over_delta * relative_power.sqrt();
        // keep g fixed: β scales with |Ω|²
        p.medium.write_beta = p.medium.write_beta * relative_power;
        Ok(Self { params: p })
    }

    fn with_mismatch(&self, mu: T) -> Result<Self, ScenarioError> {
        let mut p = self.params.clone();
        p.mu = mu;
        Ok(Self { params: p })
    }
}

/// Runs a scenario and applies its mode mismatch.
///
/// Mismatch uses linearity: with `A` the response to the probe pulses alone
/// and `B` the response to everything else, the output is `μA + B` inside
/// the mismatch window and `A + μB` outside it. Window energies are
/// recomputed from the combined output; stored energy, snapshots and fluxes
/// describe the fully overlapping run.
pub fn run_scenario<T: Real>(
    config: &ScenarioConfig<T>,
    settings: &SolverSettings,
) -> Result<SimulationRecord<T>, ScenarioError> {
    let mut full = solver::run(config, settings)?;
    let mm = &config.mode_mismatch;
    if mm.is_ideal() {
        return Ok(full);
    }
    let Some(window) = mm.window.as_ref().and_then(|n| config.window(n)).cloned() else {
        return Ok(full);
    };
    let mut probe_only = config.clone();
    probe_only.pulses.retain(|p| p.label == PulseLabel::Probe);
    probe_only.mode_mismatch = ModeMismatch::default();
    let quiet = SolverSettings {
        snapshot_stride: None,
        kspectrum_stride: None,
        ..settings.clone()
    };
    let a = solver::run(&probe_only, &quiet)?;
    let keep = T::one() - mm.mu;
    for (ch_full, ch_a) in full.boundary_out.iter_mut().zip(&a.boundary_out) {
        for ((v, va), t) in ch_full.iter_mut().zip(ch_a).zip(&full.times) {
            let b = *v - va;
            *v = if window.contains(*t) {
                *v - va * keep
            } else {
                *v - b * keep
            };
        }
    }
    full.window_energies = window_energies(&full);
    Ok(full)
}

/// Named presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Fig2,
    TimeDomain,
    FreqDomain,
}

impl std::str::FromStr for Preset {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig2" => Ok(Preset::Fig2),
            "time-domain" => Ok(Preset::TimeDomain),
            "freq-domain" => Ok(Preset::FreqDomain),
            other => Err(ScenarioError::UnknownPreset(other.into())),
        }
    }
}

/// Parameters of a preset after overrides.
#[derive(Clone, Debug, PartialEq)]
pub enum PresetParams<T: Real> {
    Time(TimeDomainParams<T>),
    Frequency(FrequencyDomainParams<T>),
}

/// Simulation-figure parameters: OD 40, `Ω/Δ = 0.75`, interference coupling
/// at 0.7 of the write coupling, θ = π, with the write optical depth chosen
/// so that 0.7 balances equal probe and steering pulses. Pulses are shorter
/// and the gradient steeper than in the lab protocol so the polariton travels
/// well clear of `k = 0` between events.
pub fn fig2_params<T: Real>() -> TimeDomainParams<T> {
    let factor = T::lit(0.7);
    let mut p = TimeDomainParams {
        interference_coupling: Some(factor),
        theta: T::PI(),
        pulse_duration: T::lit(2.0),
        ..TimeDomainParams::default()
    };
    p.medium.bandwidth_mhz = T::lit(1.5);
    // R1·R(f²β) = T(f²β) ⇔ (1 - e^{-2πβ})(1 - x) = x with x = e^{-2πf²β}
    let residual = |beta: T| {
        let x = oracle::transmissivity(factor * factor * beta);
        oracle::reflectivity(beta) * (T::one() - x) - x
    };
    p.medium.write_beta = oracle::bisect(residual, T::lit(1e-3), T::lit(10.0), T::lit(1e-12));
    p
}

impl Preset {
    pub fn defaults<T: Real>(self) -> PresetParams<T> {
        match self {
            Preset::Fig2 => PresetParams::Time(fig2_params()),
            Preset::TimeDomain => PresetParams::Time(TimeDomainParams::default()),
            Preset::FreqDomain => PresetParams::Frequency(FrequencyDomainParams::default()),
        }
    }

    /// Preset defaults with the keys of `overrides` (a JSON object) replaced.
    pub fn with_overrides<T: Real>(self, overrides: &Value) -> Result<PresetParams<T>, ScenarioError> {
        match self.defaults::<T>() {
            PresetParams::Time(p) => merge(&p, overrides).map(PresetParams::Time),
            PresetParams::Frequency(p) => merge(&p, overrides).map(PresetParams::Frequency),
        }
    }
}

fn merge<P: Serialize + serde::de::DeserializeOwned>(base: &P, overrides: &Value) -> Result<P, ScenarioError> {
    let mut value = serde_json::to_value(base).map_err(|e| ScenarioError::Override(e.to_string()))?;
    let (Value::Object(target), Value::Object(source)) = (&mut value, overrides) else {
        return Err(ScenarioError::Override("overrides must be a JSON object".into()));
    };
    for (k, v) in source {
        if !target.contains_key(k) {
            return Err(ScenarioError::Override(format!("unknown key {k:?}")));
        }
        target.insert(k.clone(), v.clone());
    }
    serde_json::from_value(value).map_err(|e| ScenarioError::Override(e.to_string()))
}

impl<T: Real> PresetParams<T> {
    pub fn build(&self, settings: &SolverSettings) -> Result<ScenarioConfig<T>, ScenarioError> {
        match self {
            PresetParams::Time(p) => finish(TimeDomainFamily::new(p.clone(), settings)?.nominal()),
            PresetParams::Frequency(p) => build_frequency_domain(p),
        }
    }
}
