use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use ghz_pulse::chain::{chain_table, CA40_RECOIL_HZ};
use ghz_pulse::config::{is_config_error, ExperimentConfig, Format};
use ghz_pulse::moments::block_weight;
use ghz_pulse::pulse::make_lemniscate;
use ghz_pulse::scan::{amplitude_scan, eta_sweep, lemniscate_scan_2d, n_sweep, write_fig2, write_fig3, write_fig4, write_fig5};
use ghz_pulse::tdse::simulate;
use ghz_pulse::trajectory::{integrate_trajectory, lemniscate_design_point, magnus_coefficients, DEFAULT_STEPS};
use ghz_pulse::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;

/// GHZ-state pulse design and verification for trapped-ion chains.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// Output directory; overrides `output.directory` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for blocks and scan points.
    #[arg(long, global = true, env = "GHZ_PULSE_WORKERS")]
    workers: Option<usize>,

    /// Output format; overrides `output.formats` in the config.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for the lemniscate design point and verify it by quadrature.
    Design {
        #[arg(long, default_value_t = 0.03)]
        eta: f64,
    },
    /// Simulate one gate and report fidelity and phonon excitation.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the scans listed in the config and write fig2..fig5 tables.
    Scan {
        #[arg(long)]
        config: PathBuf,
    },
    /// Stability bound and COM Lamb-Dicke parameter for linear chains.
    Chain {
        /// Ion numbers.
        #[arg(long, value_delimiter = ',', default_values_t = [2u32, 5, 10, 15, 20])]
        n: Vec<u32>,
        /// Radial trap frequencies ω/2π in Hz.
        #[arg(long, value_delimiter = ',', default_values_t = [3e6, 5e6])]
        radial_hz: Vec<f64>,
        /// Recoil frequency ω_rec/2π in Hz.
        #[arg(long, default_value_t = CA40_RECOIL_HZ)]
        recoil_hz: f64,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match &e {
            e if is_config_error(e) => EXIT_CONFIG,
            Error::NotConverged { .. } | Error::Leakage { .. } | Error::QuadratureNotConverged { .. } => EXIT_CONVERGENCE,
            _ => EXIT_FAILURE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Failure {
        Failure { code: EXIT_FAILURE, message: e.to_string() }
    }
}

fn config_failure(path: &Path, e: Error) -> Failure {
    Failure { code: EXIT_CONFIG, message: format!("config {}: {e}", path.display()) }
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::load(path).map_err(|e| config_failure(path, e))
}

struct Run {
    command: &'static str,
    config: Option<PathBuf>,
    started: SystemTime,
    clock: Instant,
    outputs: Vec<PathBuf>,
}

impl Run {
    fn new(command: &'static str, config: Option<PathBuf>) -> Run {
        Run { command, config, started: SystemTime::now(), clock: Instant::now(), outputs: Vec::new() }
    }

    fn create(&mut self, dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
        let path = dir.join(name);
        let file = File::create(&path)?;
        self.outputs.push(path);
        Ok(BufWriter::new(file))
    }

    /// Run metadata lives next to the data so the data files stay reproducible.
    fn write_sidecar(&self, dir: &Path, workers: usize) -> Result<(), Failure> {
        let meta = json!({
            "command": self.command,
            "config": self.config,
            "version": env!("CARGO_PKG_VERSION"),
            "started_unix": self.started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
            "elapsed_seconds": self.clock.elapsed().as_secs_f64(),
            "workers": workers,
            "outputs": self.outputs,
        });
        let mut w = BufWriter::new(File::create(dir.join(format!("{}.meta.json", self.command)))?);
        serde_json::to_writer_pretty(&mut w, &meta).map_err(Error::from)?;
        writeln!(w)?;
        Ok(())
    }
}

fn write_json<T: Serialize, W: Write>(mut w: W, value: &T) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut w, value).map_err(Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn formats(cli: &Cli, cfg: &ExperimentConfig) -> Vec<Format> {
    cli.format.map(|f| vec![f]).unwrap_or_else(|| cfg.output.formats.clone())
}

fn out_dir(cli: &Cli, cfg: &ExperimentConfig) -> Result<PathBuf, Failure> {
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

#[derive(Serialize)]
struct DesignCheck {
    quantity: &'static str,
    value: f64,
    target: f64,
    tolerance: f64,
    pass: bool,
}

fn cmd_design(cli: &Cli, eta: f64) -> Result<(), Failure> {
    let dp = lemniscate_design_point()?;
    let pulse = make_lemniscate(dp.a, dp.amplitude, 1.0, eta)?;
    let coeffs = magnus_coefficients(&integrate_trajectory(&pulse, eta, DEFAULT_STEPS)?)?;
    let check = |quantity, value: f64, target: f64, tolerance: f64| DesignCheck {
        quantity,
        value,
        target,
        tolerance,
        pass: (value - target).abs() <= tolerance,
    };
    let checks = [
        check("a0", dp.a, 0.7274789, 1e-6),
        check("A0", dp.amplitude, 0.95778915, 1e-6),
        check("chi", coeffs.chi, PI / 4.0, 1e-8),
        check("theta4", coeffs.theta4, 0.0, 1e-8 * eta * eta),
    ];
    let stdout = io::stdout().lock();
    match cli.format {
        Some(Format::Json) => write_json(stdout, &json!({ "eta": eta, "checks": checks }))?,
        _ => {
            let mut w = csv::Writer::from_writer(stdout);
            w.write_record(["quantity", "value", "target", "tolerance", "pass"]).map_err(Error::from)?;
            for c in &checks {
                w.write_record([c.quantity.to_string(), c.value.to_string(), c.target.to_string(), c.tolerance.to_string(), c.pass.to_string()])
                    .map_err(Error::from)?;
            }
            w.flush()?;
        }
    }
    if let Some(bad) = checks.iter().find(|c| !c.pass) {
        return Err(Failure { code: EXIT_FAILURE, message: format!("design verification failed for {}", bad.quantity) });
    }
    Ok(())
}

fn cmd_simulate(cli: &Cli, path: &Path, workers: usize) -> Result<(), Failure> {
    let cfg = load(path)?;
    let sim = cfg.simulation_config().map_err(|e| config_failure(path, e))?;
    let dir = out_dir(cli, &cfg)?;
    let mut run = Run::new("simulate", Some(path.to_path_buf()));
    let result = simulate(&sim)?;
    for f in formats(cli, &cfg) {
        match f {
            Format::Json => {
                let w = run.create(&dir, "simulation.json")?;
                write_json(w, &json!({ "config": cfg, "result": result }))?;
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(run.create(&dir, "overlaps.csv")?);
                w.write_record(["twice_m", "weight", "re_overlap", "im_overlap"]).map_err(Error::from)?;
                for o in &result.overlaps {
                    w.write_record([
                        o.twice_m.to_string(),
                        block_weight(sim.n, o.twice_m).to_string(),
                        o.overlap.re.to_string(),
                        o.overlap.im.to_string(),
                    ])
                    .map_err(Error::from)?;
                }
                w.flush()?;
            }
        }
    }
    println!("fidelity={} infidelity={:e} phonon_prob={:e}", result.fidelity, result.infidelity, result.phonon_prob);
    run.write_sidecar(&dir, workers)
}

fn cmd_scan(cli: &Cli, path: &Path, workers: usize) -> Result<(), Failure> {
    let cfg = load(path)?;
    let dir = out_dir(cli, &cfg)?;
    let solver = cfg.solver_settings();
    let fmts = formats(cli, &cfg);
    let mut run = Run::new("scan", Some(path.to_path_buf()));
    let mut summary = serde_json::Map::new();

    let amplitude: Vec<_> = cfg.amplitude_specs().iter().map(|s| amplitude_scan(s, &solver)).collect::<Result<_, _>>()?;
    if !amplitude.is_empty() {
        if fmts.contains(&Format::Csv) {
            write_fig2(run.create(&dir, "fig2.csv")?, &amplitude)?;
        }
        summary.insert("amplitude".into(), serde_json::to_value(&amplitude).map_err(Error::from)?);
    }
    if let Some(spec) = cfg.lemniscate_spec() {
        let scan = lemniscate_scan_2d(&spec, &solver)?;
        if fmts.contains(&Format::Csv) {
            write_fig3(run.create(&dir, "fig3.csv")?, &scan)?;
        }
        summary.insert("lemniscate".into(), serde_json::to_value(&scan).map_err(Error::from)?);
    }
    let scan_cfg = cfg.scan.clone().unwrap_or_default();
    if let Some(e) = &scan_cfg.eta_sweep {
        let sweep = eta_sweep(cfg.physics.n, &e.etas, &e.families, &e.grids.grids(), &solver);
        if fmts.contains(&Format::Csv) {
            write_fig4(run.create(&dir, "fig4.csv")?, &sweep)?;
        }
        summary.insert("eta_sweep".into(), serde_json::to_value(&sweep).map_err(Error::from)?);
    }
    if let Some(s) = &scan_cfg.n_sweep {
        let sweep = n_sweep(cfg.physics.eta, &s.ns, &s.families, &s.grids.grids(), &solver);
        if fmts.contains(&Format::Csv) {
            write_fig5(run.create(&dir, "fig5.csv")?, &sweep)?;
        }
        summary.insert("n_sweep".into(), serde_json::to_value(&sweep).map_err(Error::from)?);
    }
    if summary.is_empty() {
        return Err(Failure { code: EXIT_CONFIG, message: format!("config {}: no scan section to run", path.display()) });
    }
    if fmts.contains(&Format::Json) {
        let w = run.create(&dir, "scan.json")?;
        write_json(w, &summary)?;
    }
    run.write_sidecar(&dir, workers)
}

fn cmd_chain(cli: &Cli, ns: &[u32], radial_hz: &[f64], recoil_hz: f64) -> Result<(), Failure> {
    #[derive(Serialize)]
    struct Row {
        radial_hz: f64,
        n: u32,
        anisotropy: f64,
        axial_max_hz: f64,
        eta: f64,
    }
    let mut rows = Vec::new();
    for &r in radial_hz {
        for row in chain_table(ns, 2.0 * PI * r, 2.0 * PI * recoil_hz)? {
            rows.push(Row {
                radial_hz: r,
                n: row.n,
                anisotropy: row.anisotropy,
                axial_max_hz: row.omega_axial_max / (2.0 * PI),
                eta: row.eta,
            });
        }
    }
    let stdout = io::stdout().lock();
    match cli.format {
        Some(Format::Json) => write_json(stdout, &rows)?,
        _ => {
            let mut w = csv::Writer::from_writer(stdout);
            for row in &rows {
                w.serialize(row).map_err(Error::from)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    }
    let workers = rayon::current_num_threads();
    let outcome = match &cli.command {
        Command::Design { eta } => cmd_design(&cli, *eta),
        Command::Simulate { config } => cmd_simulate(&cli, config, workers),
        Command::Scan { config } => cmd_scan(&cli, config, workers),
        Command::Chain { n, radial_hz, recoil_hz } => cmd_chain(&cli, n, radial_hz, *recoil_hz),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
