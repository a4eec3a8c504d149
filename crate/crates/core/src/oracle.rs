//! Lumped model of the memory as a sequence of tunable beamsplitters.
//!
//! Each pass of the polariton through `k = 0` couples one optical mode and
//! the stored coherence with transmissivity `T(β) = e^{-2πβ}` and
//! reflectivity `R = 1 - T`, where `β = (gN/η)(Ω/Δ)²` is the effective
//! optical depth of that event. The unitary completion puts the `π` phase on
//! the stored port:
//!
//! ```text
//! e_out   = √R·μ·a + e^{iθ}·√T·b
//! stored' = √T·a   - e^{iθ}·√R·μ·b
//! ```
//!
//! with `a` the stored amplitude, `b` the incoming optical amplitude and `μ`
//! the mode overlap.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::model::EnsembleParams;
use crate::scalar::{polar, Real};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("effective optical depth is undefined for a zero gradient")]
    ZeroGradient,
    #[error("effective optical depth is undefined for zero detuning")]
    ZeroDetuning,
    #[error("no balancing optical depth exists: {0}")]
    NoRoot(String),
    #[error("inconsistent event list: {0}")]
    Inconsistent(String),
}

/// `β = |gN/η|·|Ω/Δ|²`.
pub fn effective_beta<T: Real>(
    p: &EnsembleParams<T>,
    eta: T,
    omega_c: T,
) -> Result<T, OracleError> {
    if eta.is_zero() {
        return Err(OracleError::ZeroGradient);
    }
    if p.delta.is_zero() {
        return Err(OracleError::ZeroDetuning);
    }
    Ok((p.g * p.density / eta).abs() * (omega_c / p.delta).powi(2))
}

/// Fraction of the light that leaks through a write event: `e^{-2πβ}`.
pub fn transmissivity<T: Real>(beta: T) -> T {
    (-T::TAU() * beta).exp()
}

/// Fraction written (or recalled): `1 - T(β)`.
pub fn reflectivity<T: Real>(beta: T) -> T {
    T::one() - transmissivity(beta)
}

/// Optical depth giving reflectivity `r ∈ [0, 1)`.
pub fn beta_for_reflectivity<T: Real>(r: T) -> T {
    -(T::one() - r).ln() / T::TAU()
}

/// One beamsplitter meeting of stored amplitude `a` and optical input `b`.
pub fn interfere<T: Real>(
    a_stored: Complex<T>,
    b_in: Complex<T>,
    beta: T,
    theta: T,
    mu: T,
) -> (Complex<T>, Complex<T>) {
    let t = transmissivity(beta).sqrt();
    let r = reflectivity(beta).sqrt();
    let rot = polar(T::one(), theta);
    let e_out = a_stored * (r * mu) + rot * b_in * t;
    let stored = a_stored * t - rot * b_in * (r * mu);
    (e_out, stored)
}

/// Fringe visibility of `|e_out(θ)|²`.
pub fn output_visibility<T: Real>(a: T, b: T, beta: T, mu: T) -> T {
    let t = transmissivity(beta);
    let r = reflectivity(beta);
    let den = r * mu * mu * a * a + t * b * b;
    if den.is_zero() {
        return T::zero();
    }
    T::lit(2.0) * (t * r).sqrt() * mu * a.abs() * b.abs() / den
}

/// Fringe visibility of the coherence left behind, `|stored'(θ)|²`.
pub fn stored_visibility<T: Real>(a: T, b: T, beta: T, mu: T) -> T {
    let t = transmissivity(beta);
    let r = reflectivity(beta);
    let den = t * a * a + r * mu * mu * b * b;
    if den.is_zero() {
        return T::zero();
    }
    T::lit(2.0) * (t * r).sqrt() * mu * a.abs() * b.abs() / den
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BsKind {
    /// Consumes an input; leaks `√T·b`, adds `√R·b` to the store.
    Write,
    /// Emits `√R·stored`, keeps `√T·stored`.
    Read,
    /// Consumes an input and mixes it with the store.
    Interfere,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BsEvent<T> {
    pub kind: BsKind,
    pub beta: T,
    #[serde(default)]
    pub theta: T,
    #[serde(default = "one")]
    pub mu: T,
}

fn one<T: Real>() -> T {
    T::one()
}

impl<T: Real> BsEvent<T> {
    pub fn write(beta: T) -> Self {
        Self {
            kind: BsKind::Write,
            beta,
            theta: T::zero(),
            mu: T::one(),
        }
    }

    pub fn read(beta: T) -> Self {
        Self {
            kind: BsKind::Read,
            ..Self::write(beta)
        }
    }

    pub fn interfere(beta: T, theta: T, mu: T) -> Self {
        Self {
            kind: BsKind::Interfere,
            beta,
            theta,
            mu,
        }
    }

    fn consumes_input(&self) -> bool {
        !matches!(self.kind, BsKind::Read)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmissionKind {
    /// Unabsorbed part of a written pulse.
    Leak,
    /// Light leaving at a `k = 0` crossing (read or interfere).
    Echo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Emission<T> {
    pub kind: EmissionKind,
    pub amplitude: Complex<T>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CascadeState<T> {
    pub optical_out: Vec<Emission<T>>,
    pub stored: Complex<T>,
}

impl<T: Real> CascadeState<T> {
    /// Amplitudes emitted at crossings, in order (E1, E2, ...).
    pub fn echoes(&self) -> Vec<Complex<T>> {
        self.optical_out
            .iter()
            .filter(|e| e.kind == EmissionKind::Echo)
            .map(|e| e.amplitude)
            .collect()
    }

    pub fn total_energy(&self) -> T {
        self.optical_out
            .iter()
            .map(|e| e.amplitude.norm_sqr())
            .fold(self.stored.norm_sqr(), |a, b| a + b)
    }
}

/// Folds the event list over the inputs.
///
/// `inputs` are consumed in order by write and interfere events;
/// `hold_times[i]` is the storage time after event `i` (the list may omit the
/// trailing hold), during which the stored amplitude decays by `e^{-γ0·τ}`.
pub fn predict_record<T: Real>(
    inputs: &[Complex<T>],
    events: &[BsEvent<T>],
    gamma0: T,
    hold_times: &[T],
) -> Result<CascadeState<T>, OracleError> {
    let needed = events.iter().filter(|e| e.consumes_input()).count();
    if needed != inputs.len() {
        return Err(OracleError::Inconsistent(format!(
            "{} events consume inputs but {} inputs were given",
            needed,
            inputs.len()
        )));
    }
    if hold_times.len() > events.len() {
        return Err(OracleError::Inconsistent(format!(
            "{} hold times for {} events",
            hold_times.len(),
            events.len()
        )));
    }
    if events.iter().any(|e| e.beta < T::zero() || !(e.mu >= T::zero() && e.mu <= T::one())) {
        return Err(OracleError::Inconsistent("beta must be >= 0 and mu in [0, 1]".into()));
    }
    let mut state = CascadeState::default();
    let mut inputs = inputs.iter();
    for (i, ev) in events.iter().enumerate() {
        match ev.kind {
            BsKind::Write => {
                let b = *inputs.next().expect("counted above");
                let t = transmissivity(ev.beta).sqrt();
                let r = reflectivity(ev.beta).sqrt();
                state.optical_out.push(Emission {
                    kind: EmissionKind::Leak,
                    amplitude: b * t,
                });
                state.stored = state.stored + b * r;
            }
            BsKind::Read => {
                let (e, s) = interfere(state.stored, Complex::default(), ev.beta, T::zero(), T::one());
                state.optical_out.push(Emission {
                    kind: EmissionKind::Echo,
                    amplitude: e,
                });
                state.stored = s;
            }
            BsKind::Interfere => {
                let b = *inputs.next().expect("counted above");
                let (e, s) = interfere(state.stored, b, ev.beta, ev.theta, ev.mu);
                state.optical_out.push(Emission {
                    kind: EmissionKind::Echo,
                    amplitude: e,
                });
                state.stored = s;
            }
        }
        if let Some(&tau) = hold_times.get(i) {
            state.stored = state.stored * (-gamma0 * tau).exp();
        }
    }
    Ok(state)
}

/// Optical depth `β2` of the interference event that fully suppresses the
/// first output: solves `√(R1·R(β2))·e^{-γ0τ}|Ep| = √T(β2)·|Es|` by bisection.
pub fn balance_coupling<T: Real>(
    r1: T,
    gamma0: T,
    tau: T,
    ep: T,
    es: T,
) -> Result<T, OracleError> {
    let stored = r1 * (T::lit(-2.0) * gamma0 * tau).exp() * ep * ep;
    let steer = es * es;
    if !(steer > T::zero()) {
        return Err(OracleError::NoRoot("steering pulse is empty".into()));
    }
    if !(stored > T::zero()) {
        return Err(OracleError::NoRoot("no coherence survives to the interference event".into()));
    }
    let residual = |beta: T| stored * reflectivity(beta) - steer * transmissivity(beta);
    let mut hi = T::one();
    let cap = T::lit(1e3);
    while residual(hi) <= T::zero() {
        hi = hi * T::lit(2.0);
        if hi > cap {
            return Err(OracleError::NoRoot(
                "stored arm too weak to balance the steering pulse".into(),
            ));
        }
    }
    Ok(bisect(residual, T::zero(), hi, T::lit(1e-13)))
}

/// Root of an increasing function on `[lo, hi]` with `f(lo) <= 0 < f(hi)`.
pub(crate) fn bisect<T: Real>(f: impl Fn(T) -> T, mut lo: T, mut hi: T, rel_tol: T) -> T {
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if f(mid) > T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= rel_tol * hi.abs() {
            break;
        }
    }
    (lo + hi) * T::lit(0.5)
}
