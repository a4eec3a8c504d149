//! Measured quantities: window energies, sinusoidal fringe fits, and the
//! phase, coupling-power and mode-mismatch sweeps built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{
    DetectionWindow, FringeDataset, Port, ScenarioConfig, SimulationRecord, SinusoidFit,
};
use crate::scalar::{trapezoid, wrap_positive, Real};
use crate::scenario::{run_scenario, ScenarioError};
use crate::solver::SolverSettings;

/// Phases per fringe in [`coupling_sweep`] and [`mismatch_curve`].
pub const SWEEP_PHASES: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("window [{start}, {end}] does not overlap the trace")]
    EmptyWindow { start: f64, end: f64 },
    #[error("sinusoid fit is degenerate: {0}")]
    DegenerateFit(String),
    #[error("a fringe needs at least 5 distinct phases, got {0}")]
    TooFewPhases(usize),
    #[error("record has no window named {0}")]
    MissingWindow(String),
    #[error("invalid sweep value: {0}")]
    InvalidSweep(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// A set of scenarios differing only in the swept interference phase.
pub trait ScenarioFamily<T: Real>: Sync {
    fn at_phase(&self, phase: T) -> Result<ScenarioConfig<T>, ScenarioError>;

    /// Same family with the interference-event coupling power scaled by
    /// `relative_power` (1 = the family's reference power).
    fn with_coupling_power(&self, relative_power: T) -> Result<Self, ScenarioError>
    where
        Self: Sized;

    fn with_mismatch(&self, mu: T) -> Result<Self, ScenarioError>
    where
        Self: Sized;
}

/// `∫|E|² dt` of a record's output over `window`.
pub fn pulse_energy<T: Real>(
    record: &SimulationRecord<T>,
    window: &DetectionWindow<T>,
) -> Result<T, AnalysisError> {
    pulse_energy_samples(
        &record.times,
        &record.output_intensity(),
        window.t_start,
        window.t_end,
    )
}

/// Trapezoidal integral of an intensity trace over `[t0, t1]`, with the
/// trace linearly interpolated at the window edges.
pub fn pulse_energy_samples<T: Real>(
    times: &[T],
    intensity: &[T],
    t0: T,
    t1: T,
) -> Result<T, AnalysisError> {
    let empty = || AnalysisError::EmptyWindow {
        start: t0.as_f64(),
        end: t1.as_f64(),
    };
    let (Some(&first), Some(&last)) = (times.first(), times.last()) else {
        return Err(empty());
    };
    let a = t0.max(first);
    let b = t1.min(last);
    if !(b > a) || times.len() != intensity.len() {
        return Err(empty());
    }
    let at = |t: T| -> T {
        let i = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1);
        let (ta, tb) = (times[i - 1], times[i]);
        let w = if tb > ta { (t - ta) / (tb - ta) } else { T::zero() };
        intensity[i - 1] + (intensity[i] - intensity[i - 1]) * w
    };
    let mut t = vec![a];
    let mut y = vec![at(a)];
    for (&s, &v) in times.iter().zip(intensity) {
        if s > a && s < b {
            t.push(s);
            y.push(v);
        }
    }
    t.push(b);
    y.push(at(b));
    Ok(trapezoid(&t, &y))
}

/// Least-squares fit of `A + B·cos(φ - φ0)` on the regressors `(1, cos φ, sin φ)`.
pub fn fit_sinusoid<T: Real>(samples: &[(T, T)]) -> Result<SinusoidFit<T>, AnalysisError> {
    let mut m = [[T::zero(); 3]; 3];
    let mut rhs = [T::zero(); 3];
    for &(phi, y) in samples {
        let x = [T::one(), phi.cos(), phi.sin()];
        for i in 0..3 {
            rhs[i] = rhs[i] + x[i] * y;
            for j in 0..3 {
                m[i][j] = m[i][j] + x[i] * x[j];
            }
        }
    }
    let coef = solve3(m, rhs)
        .ok_or_else(|| AnalysisError::DegenerateFit("phases do not span the regressors".into()))?;
    let [offset, c, s] = coef;
    if !(offset > T::zero()) {
        return Err(AnalysisError::DegenerateFit(format!(
            "non-positive offset {offset}"
        )));
    }
    let amplitude = c.hypot(s);
    let phase = if amplitude > T::zero() {
        wrap_positive(s.atan2(c))
    } else {
        T::zero()
    };
    Ok(SinusoidFit {
        offset,
        amplitude,
        phase,
    })
}

/// Gaussian elimination with partial pivoting; `None` when rank deficient.
fn solve3<T: Real>(mut m: [[T; 3]; 3], mut b: [T; 3]) -> Option<[T; 3]> {
    let scale = m
        .iter()
        .flatten()
        .fold(T::zero(), |a, v| a.max(v.abs()));
    let tol = scale * T::epsilon() * T::lit(1e3);
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| {
            m[i][col]
                .abs()
                .partial_cmp(&m[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if !(m[piv][col].abs() > tol) {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] = m[row][k] - f * m[col][k];
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = [T::zero(); 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc = acc - m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Fits a fringe to `(phase, energy)` samples; visibility is `B/A`.
pub fn fringe_dataset<T: Real>(
    port: Port,
    samples: Vec<(T, T)>,
) -> Result<FringeDataset<T>, AnalysisError> {
    let fit = fit_sinusoid(&samples)?;
    Ok(FringeDataset {
        port,
        samples,
        visibility: fit.amplitude / fit.offset,
        fit,
    })
}

/// `n` phases evenly covering `[0, 2π)`.
pub fn even_phases<T: Real>(n: usize) -> Vec<T> {
    (0..n)
        .map(|i| T::TAU() * T::lit(i as f64) / T::lit(n as f64))
        .collect()
}

fn distinct_count<T: Real>(phases: &[T]) -> usize {
    let mut v: Vec<T> = phases.iter().map(|&p| wrap_positive(p)).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v.dedup();
    v.len()
}

/// Both port fringes from one set of runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FringePair<T> {
    pub e1: FringeDataset<T>,
    pub e2: FringeDataset<T>,
}

impl<T: Real> FringePair<T> {
    pub fn port(&self, port: Port) -> &FringeDataset<T> {
        match port {
            Port::E1 => &self.e1,
            Port::E2 => &self.e2,
        }
    }
}

/// Runs one scenario per phase (concurrently) and fits both ports.
pub fn fringe_scan_pair<T: Real, F: ScenarioFamily<T>>(
    family: &F,
    phases: &[T],
    settings: &SolverSettings,
) -> Result<FringePair<T>, AnalysisError> {
    let n = distinct_count(phases);
    if n < 5 {
        return Err(AnalysisError::TooFewPhases(n));
    }
    let energies: Vec<(T, T, T)> = phases
        .par_iter()
        .map(|&phi| -> Result<(T, T, T), AnalysisError> {
            let rec = run_scenario(&family.at_phase(phi)?, settings)?;
            let get = |p: Port| {
                rec.window_energies
                    .get(p.window_name())
                    .copied()
                    .ok_or_else(|| AnalysisError::MissingWindow(p.window_name().into()))
            };
            Ok((phi, get(Port::E1)?, get(Port::E2)?))
        })
        .collect::<Result<_, _>>()?;
    Ok(FringePair {
        e1: fringe_dataset(Port::E1, energies.iter().map(|e| (e.0, e.1)).collect())?,
        e2: fringe_dataset(Port::E2, energies.iter().map(|e| (e.0, e.2)).collect())?,
    })
}

/// Fringe of a single port.
pub fn fringe_scan<T: Real, F: ScenarioFamily<T>>(
    family: &F,
    phases: &[T],
    port: Port,
    settings: &SolverSettings,
) -> Result<FringeDataset<T>, AnalysisError> {
    let pair = fringe_scan_pair(family, phases, settings)?;
    Ok(match port {
        Port::E1 => pair.e1,
        Port::E2 => pair.e2,
    })
}

/// One row of a visibility curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct VisibilityPoint<T> {
    /// Relative coupling power or μ.
    pub x: T,
    pub e1: T,
    pub e2: T,
}

/// Visibility of both ports against interference coupling power, normalised
/// to the family's reference (balanced) power.
pub fn coupling_sweep<T: Real, F: ScenarioFamily<T> + Send>(
    family: &F,
    relative_powers: &[T],
    settings: &SolverSettings,
) -> Result<Vec<VisibilityPoint<T>>, AnalysisError> {
    if let Some(p) = relative_powers.iter().find(|p| !(**p > T::zero())) {
        return Err(AnalysisError::InvalidSweep(format!(
            "coupling power {p} must be positive"
        )));
    }
    let phases = even_phases(SWEEP_PHASES);
    relative_powers
        .par_iter()
        .map(|&p| {
            let fam = family.with_coupling_power(p)?;
            let pair = fringe_scan_pair(&fam, &phases, settings)?;
            Ok(VisibilityPoint {
                x: p,
                e1: pair.e1.visibility,
                e2: pair.e2.visibility,
            })
        })
        .collect()
}

/// Visibility of both ports against the mode-mismatch factor μ.
pub fn mismatch_curve<T: Real, F: ScenarioFamily<T> + Send>(
    family: &F,
    mus: &[T],
    settings: &SolverSettings,
) -> Result<Vec<VisibilityPoint<T>>, AnalysisError> {
    if let Some(m) = mus.iter().find(|m| !(**m >= T::zero() && **m <= T::one())) {
        return Err(AnalysisError::InvalidSweep(format!("mu {m} outside [0, 1]")));
    }
    let phases = even_phases(SWEEP_PHASES);
    mus.par_iter()
        .map(|&mu| {
            let fam = family.with_mismatch(mu)?;
            let pair = fringe_scan_pair(&fam, &phases, settings)?;
            Ok(VisibilityPoint {
                x: mu,
                e1: pair.e1.visibility,
                e2: pair.e2.visibility,
            })
        })
        .collect()
}
