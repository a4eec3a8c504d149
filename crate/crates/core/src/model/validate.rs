use std::collections::BTreeSet;

use serde::Serialize;

use super::{dimensionless_od, Envelope, GradientSegment, ScenarioConfig, Units};
use crate::scalar::Real;

/// Largest fraction of the fastest rate a time step may span.
pub const STEP_FRACTION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

/// Outcome of [`validate`]; empty means the scenario is runnable.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn fail(&mut self, field: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            field: field.to_string(),
            message: message.into(),
        });
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.violations
            .iter()
            .any(|v| v.message.contains(needle) || v.field.contains(needle))
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_ok() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}

/// Fastest rates the integrator must resolve, in rad/us.
#[derive(Clone, Copy, Debug)]
pub struct StiffnessRates<T> {
    /// `max|η|·L`: spread of detunings across the medium.
    pub gradient: T,
    /// `g·N·L·|Ω/Δ|²`: rate at which the medium exchanges energy with the field.
    pub absorption: T,
    /// Light shift plus frame offsets.
    pub rotation: T,
}

pub fn stiffness_rates<T: Real>(config: &ScenarioConfig<T>) -> StiffnessRates<T> {
    let p = &config.ensemble;
    let gradient = config.gradient.max_abs_eta() * p.length;
    let absorption = (0..config.coupling.optical_channels())
        .map(|j| {
            let omega = config
                .coupling
                .channels
                .iter()
                .filter(|c| c.optical == j)
                .map(|c| c.max_rabi())
                .fold(T::zero(), |a, b| a + b);
            p.g * p.density * p.length * (omega / p.delta).powi(2)
        })
        .fold(T::zero(), T::max);
    let stark = config
        .coupling
        .channels
        .iter()
        .map(|c| c.max_rabi().powi(2))
        .fold(T::zero(), |a, b| a + b)
        / p.delta.abs();
    let offsets = config
        .coupling
        .channels
        .iter()
        .map(|c| c.raman_offset.abs())
        .chain(config.pulses.iter().map(|pl| pl.carrier_offset.abs()))
        .fold(T::zero(), T::max);
    StiffnessRates {
        gradient: gradient.abs(),
        absorption: absorption.abs(),
        rotation: stark + offsets,
    }
}

/// Checks every invariant of a scenario and lists all violations.
pub fn validate<T: Real>(config: &ScenarioConfig<T>) -> ValidationReport {
    let mut r = ValidationReport::default();
    check_units(&config.units, &mut r);
    check_ensemble(config, &mut r);
    check_gradient(config, &mut r);
    check_coupling(config, &mut r);
    check_pulses(config, &mut r);
    let grid_ok = check_grid(config, &mut r);
    if grid_ok && r.is_ok() {
        check_step_bounds(config, &mut r);
    }
    check_windows(config, &mut r);
    check_mismatch(config, &mut r);
    r
}

fn check_units(units: &Units, r: &mut ValidationReport) {
    if *units != Units::default() {
        r.fail(
            "units",
            format!("unsupported unit annotations {units:?}; expected {:?}", Units::default()),
        );
    }
}

fn check_ensemble<T: Real>(c: &ScenarioConfig<T>, r: &mut ValidationReport) {
    let p = &c.ensemble;
    let all = [p.g, p.density, p.delta, p.gamma0, p.gamma_e, p.length];
    if all.iter().any(|x| !x.is_finite()) {
        r.fail("ensemble", "all ensemble parameters must be finite");
    }
    if p.delta == T::zero() {
        r.fail("ensemble.delta", "Delta must be nonzero");
    }
    if p.gamma0 < T::zero() {
        r.fail("ensemble.gamma0", "gamma0 must be non-negative");
    }
    if !(p.gamma_e > T::zero()) {
        r.fail("ensemble.gamma_e", "gamma_e must be positive");
    }
    if !(p.length > T::zero()) {
        r.fail("ensemble.length", "L must be positive");
    }
    if p.g < T::zero() || p.density < T::zero() {
        r.fail("ensemble", "g and N must be non-negative");
    }
    if p.g == T::zero() {
        r.fail("ensemble.g", "g must be positive to define the storage normalisation N/g");
    }
    if p.gamma_e > T::zero() && !dimensionless_od(p).is_finite() {
        r.fail("ensemble", "optical depth gNL/gamma_e must be finite");
    }
}

fn check_gradient<T: Real>(c: &ScenarioConfig<T>, r: &mut ValidationReport) {
    let segs = &c.gradient.segments;
    if segs.is_empty() {
        r.fail("gradient", "gradient profile needs at least one segment");
        return;
    }
    if segs[0].t_start() != T::zero() {
        r.fail("gradient", "first gradient segment must start at t = 0");
    }
    if segs.windows(2).any(|w| !(w[1].t_start() > w[0].t_start())) {
        r.fail("gradient", "segment start times must be strictly increasing");
    }
    for (i, s) in segs.iter().enumerate() {
        if !s.t_start().is_finite() {
            r.fail(&format!("gradient[{i}]"), "start time must be finite");
        }
        if let GradientSegment::Linear { eta, .. } = s {
            if !eta.is_finite() {
                r.fail(&format!("gradient[{i}]"), "eta must be finite");
            } else if *eta == T::zero() {
                r.fail(
                    &format!("gradient[{i}]"),
                    "eta must be nonzero; use a hold segment for a switched-off gradient",
                );
            }
        }
    }
}

fn check_coupling<T: Real>(c: &ScenarioConfig<T>, r: &mut ValidationReport) {
    let chans = &c.coupling.channels;
    if chans.is_empty() {
        r.fail("coupling", "at least one coupling channel is required");
        return;
    }
    let targets: BTreeSet<usize> = chans.iter().map(|ch| ch.optical).collect();
    if targets.len() != c.coupling.optical_channels() {
        r.fail(
            "coupling",
            "optical channel indices must be contiguous from 0",
        );
    }
    for (i, ch) in chans.iter().enumerate() {
        let f = format!("coupling[{i}]");
        if ch.segments.is_empty() {
            r.fail(&f, "coupling channel needs at least one segment");
            continue;
        }
        if ch.segments[0].t_start != T::zero() {
            r.fail(&f, "first coupling segment must start at t = 0");
        }
        if ch
            .segments
            .windows(2)
            .any(|w| !(w[1].t_start > w[0].t_start))
        {
            r.fail(&f, "segment start times must be strictly increasing");
        }
        if ch.segments.iter().any(|s| {
            !s.rabi.is_finite() || !s.phase.is_finite() || !s.t_start.is_finite() || s.rabi < T::zero()
        }) {
            r.fail(&f, "Rabi frequencies must be finite and non-negative with finite phase");
        }
        if !ch.raman_offset.is_finite() {
            r.fail(&f, "raman_offset must be finite");
        }
    }
}

fn check_pulses<T: Real>(c: &ScenarioConfig<T>, r: &mut ValidationReport) {
    let n_opt = c.coupling.optical_channels();
    for (i, p) in c.pulses.iter().enumerate() {
        let f = format!("pulses[{i}]");
        if p.channel >= n_opt {
            r.fail(
                &f,
                format!("channel {} has no coupling field ({} optical channels)", p.channel, n_opt),
            );
        }
        if !p.carrier_offset.is_finite() {
            r.fail(&f, "carrier offset must be finite");
        }
        match &p.shape {
            Envelope::Gaussian {
                center,
                fwhm,
                peak,
                phase,
            } => {
                if !(center.is_finite() && peak.is_finite() && phase.is_finite()) {
                    r.fail(&f, "Gaussian parameters must be finite");
                }
                if !(fwhm.is_finite() && *fwhm > T::zero()) {
                    r.fail(&f, "Gaussian fwhm must be positive");
                }
            }
            Envelope::Sampled { times, values } => {
                if times.len() != values.len() || times.len() < 2 {
                    r.fail(&f, "sampled envelope needs at least two (time, value) pairs");
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    r.fail(&f, "sample times must be strictly increasing");
                }
                if times.iter().any(|t| !t.is_finite())
                    || values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite()))
                {
                    r.fail(&f, "samples must be finite");
                }
            }
        }
    }
}

fn check_grid<T: Real>(c: &ScenarioConfig<T>, r: &mut ValidationReport) -> bool {
    let g = &c.grid;
    let mut ok = true;
    if g.nz < 16 || !g.nz.is_power_of_two() {
        r.fail("grid.nz", format!("nz must be a power of two >= 16, got {}", g.nz));
        ok = false;
    }
    if g.nt == 0 {
        r.fail("grid.nt", "nt must be positive");
        ok = false;
    }
    if !(g.t_end.is_finite() && g.t_end > T::zero()) {
        r.fail("grid.t_end", "t_end must be positive");
        ok = false;
    }
    ok
}

fn check_step_bounds<T: Real>(c: &ScenarioConfig<T>, r: &mut ValidationReport) {
    let dt = c.grid.dt();
    let rates = stiffness_rates(c);
    let frac = T::lit(STEP_FRACTION);
    let bounds = [
        ("gradient-phase bound 0.1/(max|eta|*L)", rates.gradient),
        ("absorption-rate bound 0.1/(g*N*L*|Omega/Delta|^2)", rates.absorption),
        ("frame-rotation bound 0.1/(light shift + offsets)", rates.rotation),
    ];
    for (name, rate) in bounds {
        if rate > T::zero() && dt * rate >= frac {
            r.fail(
                "grid.nt",
                format!(
                    "dt = {dt} violates the {name} = {}; increase nt to at least {}",
                    frac / rate,
                    (c.grid.t_end * rate / frac).ceil()
                ),
            );
        }
    }
}

fn check_windows<T: Real>(c: &ScenarioConfig<T>, r: &mut ValidationReport) {
    let mut names = BTreeSet::new();
    for w in &c.windows {
        if !names.insert(w.name.as_str()) {
            r.fail("windows", format!("duplicate window name {}", w.name));
        }
        if !(w.t_start < w.t_end) || w.t_start < T::zero() || w.t_end > c.grid.t_end {
            r.fail(
                &format!("windows.{}", w.name),
                format!("window must satisfy 0 <= t_start < t_end <= t_end of the run ({})", c.grid.t_end),
            );
        }
    }
    let mut sorted: Vec<_> = c.windows.iter().collect();
    sorted.sort_by(|a, b| a.t_start.partial_cmp(&b.t_start).unwrap_or(std::cmp::Ordering::Equal));
    for w in sorted.windows(2) {
        if w[1].t_start < w[0].t_end {
            r.fail(
                "windows",
                format!("windows {} and {} overlap", w[0].name, w[1].name),
            );
        }
    }
}

fn check_mismatch<T: Real>(c: &ScenarioConfig<T>, r: &mut ValidationReport) {
    let m = &c.mode_mismatch;
    if !(m.mu >= T::zero() && m.mu <= T::one()) {
        r.fail("mode_mismatch.mu", "mu must lie in [0, 1]");
    }
    if let Some(name) = &m.window {
        if c.window(name).is_none() {
            r.fail(
                "mode_mismatch.window",
                format!("unknown detection window {name}"),
            );
        }
    }
}
