//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use num_complex::Complex;

use gem_core::analysis::{
    coupling_sweep, even_phases, fit_sinusoid, fringe_dataset, fringe_scan_pair, mismatch_curve,
    ScenarioFamily,
};
use gem_core::model::{
    CouplingChannel, CouplingSchedule, CouplingSegment, DetectionWindow, EnsembleParams, Envelope,
    GradientProfile, Grid, ModeMismatch, PulseEnvelope, PulseLabel, Units,
};
use gem_core::oracle::{self, BsEvent};
use gem_core::scenario::{
    build_frequency_domain, fig2_params, run_scenario, FrequencyDomainFamily,
    FrequencyDomainParams, TimeDomainFamily, TimeDomainParams,
};
use gem_core::solver::{crossing_phase, k_centroid_track};
use gem_core::{Port, Scenario, SolverSettings};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Single write-then-read: probe at t = 4, gradient flip at t = 9.
fn storage(beta: f64, nz: usize) -> Scenario {
    let eta = TAU * 0.6;
    let ratio: f64 = 0.75;
    let delta = 0.5;
    let gn = beta * eta / (ratio * ratio);
    let rabi = ratio * delta;
    let mut coupling = CouplingSchedule::single(rabi);
    coupling.channels[0].raman_offset = rabi * rabi / delta;
    Scenario {
        units: Units::default(),
        ensemble: EnsembleParams {
            g: gn,
            density: 1.0,
            delta,
            gamma0: 0.0,
            gamma_e: gn / 40.0,
            length: 1.0,
        },
        gradient: GradientProfile::flipping(eta, &[9.0]),
        coupling,
        pulses: vec![PulseEnvelope::new(
            PulseLabel::Probe,
            0,
            Envelope::Gaussian {
                center: 4.0,
                fwhm: 2.0,
                peak: 1.0,
                phase: 0.0,
            },
        )],
        grid: Grid {
            nz,
            nt: 2000,
            t_end: 20.0,
        },
        windows: vec![DetectionWindow::new("E1", 10.0, 18.0)],
        mode_mismatch: ModeMismatch::default(),
        metadata: Default::default(),
    }
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mt, mk) = pts
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
    let (num, den) = pts.iter().fold((0.0, 0.0), |a, p| {
        (a.0 + (p.0 - mt) * (p.1 - mk), a.1 + (p.0 - mt).powi(2))
    });
    num / den
}

fn balanced_time_domain() -> TimeDomainFamily<f64> {
    TimeDomainFamily::new(TimeDomainParams::default(), &SolverSettings::default())
        .expect("balanced time-domain family")
}

fn c1_beamsplitter_law() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for beta in [0.1, 0.25, 0.5, 1.0] {
        let cfg = storage(beta, 512);
        let start = Instant::now();
        let rec = run_scenario(&cfg, &SolverSettings::default()).map_err(|e| e.to_string())?;
        let secs = start.elapsed().as_secs_f64();
        let eff = rec.window_energies["E1"] / rec.energy_in;
        let r = 1.0 - (-TAU * beta).exp();
        let err = (eff - r * r).abs() / (r * r);
        ok &= err < 0.05 && secs < 60.0;
        lines.push(format!("beta {beta}: {eff:.4} vs {:.4} ({:.1}%, {secs:.2}s)", r * r, err * 100.0));
    }
    check(ok, lines.join("; "))
}

fn c2_transport() -> Outcome {
    let p = fig2_params::<f64>();
    let tl = p.timeline();
    let fam = TimeDomainFamily::new(p.clone(), &SolverSettings::default()).map_err(|e| e.to_string())?;
    let cfg = fam.nominal();
    let rec = run_scenario(&cfg, &SolverSettings::with_history(10)).map_err(|e| e.to_string())?;
    let track = k_centroid_track(&rec).map_err(|e| e.to_string())?;
    let d = p.pulse_duration;
    let holds = [
        (tl.probe_center + d, tl.flip1),
        (tl.flip1, tl.echo1 - d),
        (tl.echo1 + d, tl.flip2),
        (tl.flip2, tl.echo2 - d),
    ];
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut signs = Vec::new();
    for (a, b) in holds {
        let pts: Vec<_> = track
            .iter()
            .copied()
            .filter(|x| x.0 > a + 0.05 && x.0 < b - 0.05)
            .collect();
        let eta = cfg.gradient.eta_at(0.5 * (a + b));
        let s = slope(&pts);
        let err = (s + eta).abs() / eta.abs();
        worst = worst.max(err);
        ok &= err < 0.02 && pts.len() >= 10;
        signs.push(s.signum());
    }
    // holds 0|1 straddle the first switch and 2|3 the second
    let flips = signs[0] != signs[1] && signs[2] != signs[3];
    check(
        ok && flips,
        format!("worst slope error {:.3}% over 4 holds, sign flips at each switch: {flips}", worst * 100.0),
    )
}

fn c3_phase_jump() -> Outcome {
    let p = fig2_params::<f64>();
    let fam = TimeDomainFamily::new(p, &SolverSettings::default()).map_err(|e| e.to_string())?;
    let cfg = fam.nominal();
    let rec = run_scenario(&cfg, &SolverSettings::with_history(10)).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    let mut total = 0.0;
    for name in ["E1", "E2"] {
        let w = cfg.window(name).expect("window");
        let phase = crossing_phase(&rec, w).map_err(|e| e.to_string())?;
        total += phase;
        ok &= (phase - PI).abs() < 0.1;
        parts.push(format!("{name} {phase:.4}"));
    }
    parts.push(format!("cumulative {total:.4}"));
    check(ok, parts.join(", "))
}

fn c4_time_domain() -> Outcome {
    let fam = balanced_time_domain();
    let s = SolverSettings::default();
    let e1 = |th: f64| -> Result<f64, String> {
        let cfg = fam.at_phase(th).map_err(|e| e.to_string())?;
        Ok(run_scenario(&cfg, &s).map_err(|e| e.to_string())?.window_energies["E1"])
    };
    let ratio = e1(PI)? / e1(0.0)?;
    let pair = fringe_scan_pair(&fam, &even_phases(12), &s).map_err(|e| e.to_string())?;
    let (v1, v2) = (pair.e1.visibility, pair.e2.visibility);
    check(
        ratio < 0.05 && v1 >= 0.95 && v2 >= 0.95,
        format!(
            "coupling factor {:.4}, E1(pi)/E1(0) = {ratio:.4}, visibility E1 {v1:.4} E2 {v2:.4}",
            fam.factor
        ),
    )
}

fn c5_frequency_domain() -> Outcome {
    let base = FrequencyDomainParams::<f64>::default();
    let fam = FrequencyDomainFamily { params: base.clone() };
    let s = SolverSettings::default();
    let phases = even_phases(12);
    let pair = fringe_scan_pair(&fam, &phases, &s).map_err(|e| e.to_string())?;
    let fit = pair.e2.fit;
    let rms = (pair
        .e2
        .samples
        .iter()
        .map(|(p, y)| (y - fit.offset - fit.amplitude * (p - fit.phase).cos()).powi(2))
        .sum::<f64>()
        / phases.len() as f64)
        .sqrt();
    let run = |phi: f64| -> Result<_, String> {
        let cfg = build_frequency_domain(&FrequencyDomainParams {
            coupling_phase: phi,
            ..base.clone()
        })
        .map_err(|e| e.to_string())?;
        let rec = run_scenario(&cfg, &s).map_err(|e| e.to_string())?;
        Ok((rec.window_energies["E1"], rec.window_energies["E2"], rec.energy_in))
    };
    let (_, e2_zero, _) = run(0.0)?;
    let (e1_pi, e2_pi, input) = run(PI)?;
    let transmitted = e1_pi / input;
    let recalled = e2_pi / e2_zero;
    check(
        rms / fit.offset < 0.01 && transmitted >= 0.9 && recalled <= 0.1,
        format!(
            "E2 fit residual {:.2e} of offset, transmitted at pi {transmitted:.4}, E2(pi)/E2(0) {recalled:.2e}",
            rms / fit.offset
        ),
    )
}

fn c6_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for beta in [0.25, 0.5, 1.0] {
        for g0tau in [0.0, 0.1, 0.2] {
            let mut p = TimeDomainParams::<f64> {
                steering_amplitude: 0.0,
                ..Default::default()
            };
            p.medium.write_beta = beta;
            p.medium.gamma0 = g0tau / p.tau1;
            let fam = TimeDomainFamily::new(p.clone(), &SolverSettings::default())
                .map_err(|e| e.to_string())?;
            let rec = run_scenario(&fam.nominal(), &SolverSettings::default()).map_err(|e| e.to_string())?;
            let ep = rec.energy_in.sqrt();
            let events = [BsEvent::write(beta), BsEvent::read(beta), BsEvent::read(beta)];
            let pred = oracle::predict_record(
                &[Complex::new(ep, 0.0)],
                &events,
                p.medium.gamma0,
                &[p.tau1, p.tau2],
            )
            .map_err(|e| e.to_string())?;
            let echoes = pred.echoes();
            let energies = [("E1", echoes[0].norm_sqr()), ("E2", echoes[1].norm_sqr())];
            for (name, want) in energies {
                let got = rec.window_energies[name];
                let err = (got - want).abs() / want;
                if err > worst {
                    worst = err;
                    detail = vec![format!("worst {name} at beta {beta}, g0*tau {g0tau}")];
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst < 0.05 && secs < 900.0,
        format!("max relative error {:.2}% ({}), {secs:.1}s", worst * 100.0, detail.join("")),
    )
}

fn c7_conservation_and_decay() -> Outcome {
    let fam = TimeDomainFamily::new(fig2_params::<f64>(), &SolverSettings::default())
        .map_err(|e| e.to_string())?;
    let rec = run_scenario(&fam.nominal(), &SolverSettings::default()).map_err(|e| e.to_string())?;
    let closure = (rec.energy_in - rec.energy_out - rec.final_stored_energy()).abs() / rec.energy_in;

    // write, then switch the coupling off and hold with decay
    let gamma0 = 0.03;
    let mut cfg = storage(0.5, 256);
    cfg.ensemble.gamma0 = gamma0;
    cfg.gradient = GradientProfile::constant(cfg.gradient.max_abs_eta());
    let rabi = cfg.coupling.channels[0].segments[0].rabi;
    cfg.coupling = CouplingSchedule {
        channels: vec![CouplingChannel {
            optical: 0,
            raman_offset: cfg.coupling.channels[0].raman_offset,
            segments: vec![
                CouplingSegment {
                    t_start: 0.0,
                    rabi,
                    phase: 0.0,
                },
                CouplingSegment {
                    t_start: 10.0,
                    rabi: 0.0,
                    phase: 0.0,
                },
            ],
        }],
    };
    let rec = run_scenario(&cfg, &SolverSettings::default()).map_err(|e| e.to_string())?;
    let i0 = rec.times.iter().position(|&t| t >= 10.0).expect("hold start");
    let (t0, s0) = (rec.times[i0], rec.stored_energy[i0]);
    let worst = rec
        .times
        .iter()
        .zip(&rec.stored_energy)
        .skip(i0)
        .map(|(&t, &s)| ((s / s0) / (-2.0 * gamma0 * (t - t0)).exp() - 1.0).abs())
        .fold(0.0, f64::max);
    check(
        closure < 1e-4 && worst < 0.01,
        format!("bookkeeping residual {closure:.2e}, worst decay deviation {worst:.2e}"),
    )
}

fn c8_fringe_machinery() -> Outcome {
    let synth: Vec<(f64, f64)> = even_phases::<f64>(12)
        .into_iter()
        .map(|p| (p, 1.0 + 0.68 * (p - 0.9).cos()))
        .collect();
    let d = fringe_dataset(Port::E1, synth).map_err(|e| e.to_string())?;
    let synth_err = (d.visibility - 0.68).abs().max((d.fit.phase - 0.9).abs());
    let raw = fit_sinusoid(&[(0.0, 1.0), (1.0, 1.5), (2.0, 0.7), (3.0, 0.4), (4.0, 0.9)]);
    let s = SolverSettings::default();
    let td = balanced_time_domain();
    let td_pair = fringe_scan_pair(&td, &even_phases(12), &s).map_err(|e| e.to_string())?;
    let fd = FrequencyDomainFamily {
        params: FrequencyDomainParams::default(),
    };
    let fd_pair = fringe_scan_pair(&fd, &even_phases(12), &s).map_err(|e| e.to_string())?;
    let anti = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(TAU);
        (d - PI).abs()
    };
    let td_anti = anti(td_pair.e1.fit.phase, td_pair.e2.fit.phase);
    let fd_anti = anti(fd_pair.e1.fit.phase, fd_pair.e2.fit.phase);

    let powers = [1e-3, 1e-2, 0.1, 0.3, 1.0, 3.0, 10.0, 20.0];
    let curve = coupling_sweep(&td, &powers, &s).map_err(|e| e.to_string())?;
    let shape_ok = |vals: Vec<f64>| {
        let (first, last) = (vals[0], vals[vals.len() - 1]);
        let peak = vals.iter().copied().fold(0.0, f64::max);
        first < 0.1 && last < 0.1 && peak > 0.9
    };
    let e1: Vec<f64> = curve.iter().map(|p| p.e1).collect();
    let e2: Vec<f64> = curve.iter().map(|p| p.e2).collect();
    let sweep_ok = shape_ok(e1.clone()) && shape_ok(e2.clone());
    check(
        synth_err < 1e-6 && raw.is_ok() && td_anti < 0.05 && fd_anti < 0.05 && sweep_ok,
        format!(
            "synthetic error {synth_err:.1e}; anti-phase offset time {td_anti:.4} freq {fd_anti:.4}; \
             coupling sweep E1 ends {:.3}/{:.3} E2 ends {:.3}/{:.3}",
            e1[0],
            e1[e1.len() - 1],
            e2[0],
            e2[e2.len() - 1]
        ),
    )
}

fn c9_mismatch_anchor() -> Outcome {
    let fam = balanced_time_domain();
    let s = SolverSettings::default();
    let mus: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let curve = mismatch_curve(&fam, &mus, &s).map_err(|e| e.to_string())?;
    let vis: Vec<f64> = curve.iter().map(|p| p.e1).collect();
    let increasing = vis.windows(2).all(|w| w[1] > w[0]);
    let crossings = vis.windows(2).filter(|w| (w[0] - 0.68) * (w[1] - 0.68) < 0.0).count();
    let e1_vis = |mu: f64| -> Result<f64, String> {
        let f = fam.with_mismatch(mu).map_err(|e| e.to_string())?;
        Ok(fringe_scan_pair(&f, &even_phases(8), &s)
            .map_err(|e| e.to_string())?
            .e1
            .visibility)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if e1_vis(mid)? < 0.68 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    // closed form for a balanced splitter: 2μ/(1 + μ²) = V
    let v: f64 = 0.68;
    let oracle_mu = (1.0 - (1.0 - v * v).sqrt()) / v;
    check(
        increasing && crossings == 1 && mu > 0.0 && mu < 1.0,
        format!(
            "E1 visibility increasing in mu: {increasing}; mu = {mu:.4} (balanced closed form {oracle_mu:.4}); \
             vis(0) = {:.2e}, vis(1) = {:.4}",
            vis[0], vis[10]
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 beamsplitter law", c1_beamsplitter_law),
        ("2 polariton transport", c2_transport),
        ("3 pi phase jump", c3_phase_jump),
        ("4 time-domain suppression", c4_time_domain),
        ("5 frequency-domain dark state", c5_frequency_domain),
        ("6 oracle equivalence", c6_oracle_equivalence),
        ("7 conservation and decay", c7_conservation_and_decay),
        ("8 fringe machinery", c8_fringe_machinery),
        ("9 mismatch anchor", c9_mismatch_anchor),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
