//! `lgem`: command-line front end for the gradient echo memory simulator.
//!
//! Exit codes: 0 on success, 2 for malformed input or an invalid scenario,
//! 3 when the solver or the analysis of its output fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};

use gem_core::analysis::{
    coupling_sweep, even_phases, fringe_scan_pair, mismatch_curve, AnalysisError, ScenarioFamily,
    VisibilityPoint, SWEEP_PHASES,
};
use gem_core::export;
use gem_core::model::ConfigError;
use gem_core::oracle::{self, BsEvent, OracleError};
use gem_core::scenario::{
    run_scenario, FrequencyDomainFamily, Preset, PresetParams, ScenarioError, TimeDomainFamily,
};
use gem_core::{validate, Port, Scenario, SolverError, SolverSettings};

#[derive(Parser, Debug)]
#[command(name = "lgem", version, about = "Gradient echo memory simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Source {
    /// Named preset: fig2, time-domain or freq-domain.
    #[arg(long)]
    preset: Option<String>,
    /// Scenario JSON. With --preset, a JSON object of parameter overrides.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "LGEM_OUT_DIR", default_value = "lgem-out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and write its traces.
    Simulate {
        #[command(flatten)]
        source: Source,
        /// Validate and report without integrating or writing anything.
        #[arg(long)]
        dry_run: bool,
        /// Keep field snapshots and k-spectra every n-th step.
        #[arg(long)]
        snapshot_stride: Option<usize>,
    },
    /// Fringe, coupling-power or mode-mismatch sweep of a preset.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum)]
        sweep: SweepKind,
        /// start:stop:count, endpoints included.
        #[arg(long)]
        range: Option<String>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Evaluate the lumped beamsplitter model from an events JSON file.
    Oracle {
        /// Events JSON; `-` reads stdin.
        events: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    Phase,
    Coupling,
    Mismatch,
}

/// Malformed command-line input.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            source,
            dry_run,
            snapshot_stride,
        } => simulate(&source, dry_run, snapshot_stride),
        Command::Sweep {
            source,
            sweep,
            range,
            workers,
        } => run_sweep(&source, sweep, range.as_deref(), workers),
        Command::Oracle { events } => run_oracle(&events),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ScenarioError>() {
            return scenario_code(e);
        }
        if let Some(e) = cause.downcast_ref::<AnalysisError>() {
            return match e {
                AnalysisError::Scenario(inner) => scenario_code(inner),
                AnalysisError::TooFewPhases(_) | AnalysisError::InvalidSweep(_) => 2,
                _ => 3,
            };
        }
        if let Some(e) = cause.downcast_ref::<SolverError>() {
            return solver_code(e);
        }
        if cause.is::<UsageError>()
            || cause.is::<ConfigError>()
            || cause.is::<OracleError>()
            || cause.is::<serde_json::Error>()
        {
            return 2;
        }
    }
    1
}

fn scenario_code(e: &ScenarioError) -> u8 {
    match e {
        ScenarioError::Solver(s) => solver_code(s),
        ScenarioError::NoEcho(_) => 3,
        _ => 2,
    }
}

fn solver_code(e: &SolverError) -> u8 {
    match e {
        SolverError::NonFinite { .. } => 3,
        _ => 2,
    }
}

fn preset_params(source: &Source) -> Result<Option<PresetParams<f64>>> {
    let Some(name) = &source.preset else {
        return Ok(None);
    };
    let preset: Preset = name.parse()?;
    let params = match &source.config {
        Some(path) => preset.with_overrides(&read_json(path)?)?,
        None => preset.defaults(),
    };
    Ok(Some(params))
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed JSON in {}", path.display()))
}

fn load_scenario(source: &Source, settings: &SolverSettings) -> Result<Scenario> {
    if let Some(params) = preset_params(source)? {
        return Ok(params.build(settings)?);
    }
    match &source.config {
        Some(path) => Ok(Scenario::load(path)?),
        None => Err(usage("give --preset, --config or both")),
    }
}

fn simulate(source: &Source, dry_run: bool, stride: Option<usize>) -> Result<()> {
    let settings = match stride {
        Some(0) => return Err(usage("--snapshot-stride must be at least 1")),
        Some(n) => SolverSettings::with_history(n),
        None => SolverSettings::default(),
    };
    let loaded = load_scenario(source, &settings);
    if dry_run {
        let summary = match &loaded {
            Ok(config) => {
                let report = validate(config);
                json!({
                    "config_hash": config.config_hash(),
                    "valid": report.is_ok(),
                    "violations": report.violations,
                    "steps": config.grid.nt,
                    "nz": config.grid.nz,
                })
            }
            Err(e) => match e.downcast_ref::<ScenarioError>() {
                Some(ScenarioError::Invalid(report)) => json!({
                    "config_hash": null,
                    "valid": false,
                    "violations": report.violations,
                }),
                _ => return loaded.map(|_| ()),
            },
        };
        println!("{}", serde_json::to_string_pretty(&summary)?);
        if summary["valid"] != true {
            return Err(usage("dry run found violations (listed on stdout)"));
        }
        return Ok(());
    }
    let config = loaded?;
    let record = run_scenario(&config, &settings)?;
    let files = export::write_record_files(&record, &source.out)?;
    for f in &files {
        eprintln!("wrote {}", f.display());
    }
    print!("{}", export::window_energies_json(&record));
    Ok(())
}

enum Family {
    Time(TimeDomainFamily<f64>),
    Frequency(FrequencyDomainFamily<f64>),
}

fn parse_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, count] = parts[..] else {
        return Err(usage(format!("range {text:?} is not start:stop:count")));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("bad number {s:?} in range {text:?}")))
    };
    let (start, stop) = (num(start)?, num(stop)?);
    let count: usize = count
        .trim()
        .parse()
        .map_err(|_| usage(format!("bad count in range {text:?}")))?;
    if count == 0 || !start.is_finite() || !stop.is_finite() {
        return Err(usage(format!("range {text:?} must be finite with count >= 1")));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count).map(|i| start + step * i as f64).collect())
}

fn run_sweep(source: &Source, kind: SweepKind, range: Option<&str>, workers: Option<usize>) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(usage("--workers must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("cannot start worker pool")?;
    let params = preset_params(source)?.ok_or_else(|| usage("sweeps need --preset"))?;
    let settings = SolverSettings::default();
    let values = range.map(parse_range).transpose()?;
    pool.install(|| match params {
        PresetParams::Time(p) => {
            let family = Family::Time(TimeDomainFamily::new(p, &settings)?);
            sweep_family(&family, kind, values, &settings, &source.out)
        }
        PresetParams::Frequency(p) => {
            let family = Family::Frequency(FrequencyDomainFamily { params: p });
            sweep_family(&family, kind, values, &settings, &source.out)
        }
    })
}

fn sweep_family(
    family: &Family,
    kind: SweepKind,
    values: Option<Vec<f64>>,
    settings: &SolverSettings,
    out: &Path,
) -> Result<()> {
    match family {
        Family::Time(f) => sweep_with(f, kind, values, settings, out),
        Family::Frequency(f) => sweep_with(f, kind, values, settings, out),
    }
}

fn sweep_with<F: ScenarioFamily<f64> + Send>(
    family: &F,
    kind: SweepKind,
    values: Option<Vec<f64>>,
    settings: &SolverSettings,
    out: &Path,
) -> Result<()> {
    let nominal = family.at_phase(0.0)?;
    let hash = nominal.config_hash();
    export::write_file(&out.join("config.json"), &(nominal.to_json() + "\n"))?;
    let summary = match kind {
        SweepKind::Phase => {
            let phases = values.unwrap_or_else(|| even_phases(SWEEP_PHASES));
            let pair = fringe_scan_pair(family, &phases, settings)?;
            let mut visibility = serde_json::Map::new();
            let mut phi0 = serde_json::Map::new();
            for port in [Port::E1, Port::E2] {
                let d = pair.port(port);
                export::write_file(&out.join(format!("fringe_{port}.csv")), &export::fringe_csv(d, &hash))?;
                export::write_file(
                    &out.join(format!("fringe_{port}.json")),
                    &export::fringe_sidecar_json(d, &hash),
                )?;
                visibility.insert(port.to_string(), json!(d.visibility));
                phi0.insert(port.to_string(), json!(d.fit.phase));
            }
            json!({
                "config_hash": hash,
                "sweep": "phase",
                "phases": phases,
                "visibility": visibility,
                "phi0": phi0,
            })
        }
        SweepKind::Coupling => {
            let powers = values.unwrap_or_else(|| parse_range("0.1:3:7").expect("valid default"));
            let points = coupling_sweep(family, &powers, settings)?;
            curve_summary("coupling", "relative_power", &points, &hash, out)?
        }
        SweepKind::Mismatch => {
            let mus = values.unwrap_or_else(|| parse_range("0:1:6").expect("valid default"));
            let points = mismatch_curve(family, &mus, settings)?;
            curve_summary("mismatch", "mu", &points, &hash, out)?
        }
    };
    let text = serde_json::to_string_pretty(&summary)? + "\n";
    export::write_file(&out.join("summary.json"), &text)?;
    print!("{text}");
    Ok(())
}

fn curve_summary(
    sweep: &str,
    x_name: &str,
    points: &[VisibilityPoint<f64>],
    hash: &str,
    out: &Path,
) -> Result<Value> {
    export::write_file(&out.join("curve.csv"), &export::curve_csv(points, x_name, hash))?;
    Ok(json!({
        "config_hash": hash,
        "sweep": sweep,
        "points": points,
    }))
}

/// Input of the `oracle` subcommand.
#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct OracleInput {
    /// Input amplitudes as `[re, im]`, consumed by write and interfere events.
    inputs: Vec<Complex64>,
    events: Vec<BsEvent<f64>>,
    #[serde(default)]
    gamma0: f64,
    #[serde(default)]
    hold_times: Vec<f64>,
    /// Optional balance query.
    balance: Option<BalanceQuery>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct BalanceQuery {
    r1: f64,
    #[serde(default)]
    gamma0: f64,
    #[serde(default)]
    tau: f64,
    ep: f64,
    es: f64,
}

fn run_oracle(path: &Path) -> Result<()> {
    let text = if path == Path::new("-") {
        std::io::read_to_string(std::io::stdin()).context("cannot read stdin")?
    } else {
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?
    };
    let input: OracleInput = serde_json::from_str(&text).context("malformed events JSON")?;
    let state = oracle::predict_record(&input.inputs, &input.events, input.gamma0, &input.hold_times)?;
    let echoes = state.echoes();
    let mut summary = json!({
        "emissions": state.optical_out.iter().map(|e| json!({
            "kind": e.kind,
            "amplitude": [e.amplitude.re, e.amplitude.im],
            "energy": e.amplitude.norm_sqr(),
        })).collect::<Vec<_>>(),
        "echo_energies": echoes.iter().map(|e| e.norm_sqr()).collect::<Vec<_>>(),
        "stored_energy": state.stored.norm_sqr(),
        "total_energy": state.total_energy(),
    });
    if let Some(q) = input.balance {
        summary["balance"] = match oracle::balance_coupling(q.r1, q.gamma0, q.tau, q.ep, q.es) {
            Ok(beta) => json!({ "beta": beta }),
            Err(OracleError::NoRoot(why)) => json!({ "beta": null, "no_solution": why }),
            Err(e) => bail!(e),
        };
    }
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
