//! Command-line front end.
//!
//! Frequencies are given in MHz on the command line and written in Hz to
//! files. Every run writes `<command>_report.txt` into the output directory:
//! a `key = value` document that starts with the effective parameters
//! (enough to repeat the run) and continues with the results. Numbers use
//! shortest round-trip formatting; `summary` lines are rounded for reading.
//!
//! Exit codes: 0 success, 2 argument or domain error, 3 model inconsistency,
//! 4 I/O or parse error.

use std::ffi::OsString;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::estimation::fit::{self, model_from_doc, FitOptions, ParamBounds};
use crate::estimation::linewidth::{extract_linewidth, AiryScan};
use crate::estimation::preprocess::{normalize_to_shot, subtract_dark};
use crate::level::QuadraturePair;
use crate::loss::{invert_pair, LossBudget};
use crate::model::{spectrum_trace, ChainModel, SidebandFrequency, Spacing};
use crate::report::KeyValueDoc;
use crate::simulation::{self, dump, AnalyzerNoise, HomodyneRun, MziConfig, PhaseProgram};
use crate::svg::{Plot, Series};
use crate::trace::{SpectrumTrace, TraceKind};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SQUEEZELAB_OUT";

pub mod exit {
    pub const OK: i32 = 0;
    pub const ARGUMENT: i32 = 2;
    pub const INCONSISTENT: i32 = 3;
    pub const IO: i32 = 4;
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NoSqueezing { .. } | Error::InconsistentPair(_) => exit::INCONSISTENT,
        Error::Io { .. } | Error::Parse { .. } => exit::IO,
        _ => exit::ARGUMENT,
    }
}

#[derive(Debug, Parser)]
#[command(name = "squeezelab", version, about = "Squeezed-light spectrum modeling, fitting and simulation")]
pub struct Cli {
    /// Output directory (default: $SQUEEZELAB_OUT or the current directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the S-/S+ model over a frequency range.
    Spectrum(SpectrumArgs),
    /// Fit the model to measured squeezing and anti-squeezing traces.
    Fit(FitArgs),
    /// Compose or invert an optical loss budget.
    #[command(subcommand)]
    Budget(BudgetCommand),
    /// Monte-Carlo homodyne zero-span measurement.
    Simulate(SimulateArgs),
    /// Squeezed-light enhancement of a Mach-Zehnder interferometer.
    Mzi(MziArgs),
    /// Cavity linewidth from an Airy scan with modulation markers.
    Linewidth(LinewidthArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub eta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma_mhz: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub kappa_mhz: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub pump_ratio: Option<f64>,
    /// Parameter file (`eta`, `gamma_hwhm_hz`, `kappa_hwhm_hz`, `pump_ratio`),
    /// e.g. a fit report. Flags override its values.
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1.0)]
    pub fmin_mhz: f64,
    #[arg(long, default_value_t = 50.0)]
    pub fmax_mhz: f64,
    #[arg(long, default_value_t = 500)]
    pub points: usize,
    /// Logarithmic frequency spacing.
    #[arg(long)]
    pub log: bool,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Squeezed-quadrature trace CSV.
    #[arg(long)]
    pub sqz: PathBuf,
    /// Anti-squeezed-quadrature trace CSV.
    #[arg(long)]
    pub antisqz: PathBuf,
    /// Shot-noise trace, required when the inputs are absolute power.
    #[arg(long)]
    pub shot: Option<PathBuf>,
    /// Dark-noise trace subtracted from signal and shot traces.
    #[arg(long)]
    pub dark: Option<PathBuf>,
    #[arg(long, default_value_t = 0.73)]
    pub init_eta: f64,
    #[arg(long, default_value_t = 60.0)]
    pub init_gamma_mhz: f64,
    #[arg(long, default_value_t = 40.0)]
    pub init_kappa_mhz: f64,
    #[arg(long, default_value_t = 0.77)]
    pub init_pump_ratio: f64,
    /// `lo:hi`; equal ends freeze the parameter.
    #[arg(long, value_parser = parse_range)]
    pub eta_bounds: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_range)]
    pub gamma_bounds_mhz: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_range)]
    pub kappa_bounds_mhz: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_range)]
    pub pump_bounds: Option<(f64, f64)>,
    /// Excluded band `lo:hi` in MHz; repeatable.
    #[arg(long = "mask-mhz", value_parser = parse_range)]
    pub mask_mhz: Vec<(f64, f64)>,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Subcommand)]
pub enum BudgetCommand {
    /// Total loss and initial squeezing behind a measured pair.
    Invert {
        #[arg(long, allow_negative_numbers = true)]
        sqz_db: f64,
        #[arg(long, allow_negative_numbers = true)]
        antisqz_db: f64,
    },
    /// Total efficiency of a `label = efficiency` budget file.
    Compose {
        #[arg(long)]
        file: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, allow_negative_numbers = true, default_value_t = -5.55)]
    pub sqz_db: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 17.94)]
    pub antisqz_db: f64,
    /// Fixed local-oscillator phase in degrees from the squeezed quadrature.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "ramp_deg")]
    pub phase_deg: Option<f64>,
    /// Linear phase ramp `from:to` in degrees over the run.
    #[arg(long, value_parser = parse_range)]
    pub ramp_deg: Option<(f64, f64)>,
    /// Ramp duration in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub duration_s: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    /// Samples per zero-span variance estimate.
    #[arg(long, default_value_t = 10_000)]
    pub window: usize,
    /// Mandatory; stochastic runs never draw entropy implicitly.
    #[arg(long)]
    pub seed: u64,
    /// Write the raw samples to this binary dump.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct MziArgs {
    /// Squeezing injected at the dark port, in dB (sign ignored).
    #[arg(long, allow_negative_numbers = true)]
    pub sqz_db: f64,
    /// Anti-squeezing in dB; defaults to a pure state.
    #[arg(long, allow_negative_numbers = true)]
    pub antisqz_db: Option<f64>,
    #[arg(long, default_value_t = 5.0)]
    pub signal_mhz: f64,
    #[arg(long, default_value_t = 0.01)]
    pub mod_depth: f64,
    /// Carrier power in shot-noise units.
    #[arg(long, default_value_t = 1e6)]
    pub carrier_power: f64,
    #[arg(long, default_value_t = 300.0)]
    pub rbw_khz: f64,
    #[arg(long, default_value_t = 4.0)]
    pub fmin_mhz: f64,
    #[arg(long, default_value_t = 6.0)]
    pub fmax_mhz: f64,
    #[arg(long, default_value_t = 401)]
    pub points: usize,
    /// Add analyzer fluctuations to the traces.
    #[arg(long, requires = "seed")]
    pub monte_carlo: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Power averages per bin for the fluctuations.
    #[arg(long, default_value_t = 1000)]
    pub averages: usize,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct LinewidthArgs {
    /// Scan CSV with header `time_s,transmission`.
    #[arg(long)]
    pub scan: PathBuf,
    /// Phase-modulation marker frequency.
    #[arg(long)]
    pub fmod_mhz: f64,
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected `lo:hi`, got `{s}`"))?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad number `{a}`"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad number `{b}`"))?;
    Ok((lo, hi))
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code; diagnostics go to stderr.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => exit::OK,
                _ => exit::ARGUMENT,
            };
        }
    };
    match run(&cli) {
        Ok(report) => {
            print!("{report}");
            exit::OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    let dir = cli
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn header(command: &str) -> KeyValueDoc {
    let mut doc = KeyValueDoc::new();
    doc.push("tool", env!("CARGO_PKG_NAME"))
        .push("version", env!("CARGO_PKG_VERSION"))
        .push("command", command);
    doc
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs a parsed command and returns the report document it wrote.
pub fn run(cli: &Cli) -> Result<KeyValueDoc> {
    let dir = out_dir(cli)?;
    let (name, doc) = match &cli.command {
        Command::Spectrum(a) => ("spectrum", cmd_spectrum(a, &dir)?),
        Command::Fit(a) => ("fit", cmd_fit(a, &dir)?),
        Command::Budget(b) => ("budget", cmd_budget(b)?),
        Command::Simulate(a) => ("simulate", cmd_simulate(a, &dir)?),
        Command::Mzi(a) => ("mzi", cmd_mzi(a, &dir)?),
        Command::Linewidth(a) => ("linewidth", cmd_linewidth(a)?),
    };
    doc.write_file(&dir.join(format!("{name}_report.txt")))?;
    Ok(doc)
}

fn resolve_model(a: &ModelArgs) -> Result<ChainModel> {
    let base = match &a.params {
        Some(p) => Some(model_from_doc(&KeyValueDoc::read_file(p)?)?),
        None => None,
    };
    let pick = |flag: Option<f64>, from_file: Option<f64>, name: &str| {
        flag.or(from_file)
            .ok_or_else(|| Error::invalid(format!("missing --{name} (or a --params file)")))
    };
    ChainModel::new(
        pick(a.eta, base.map(|m| m.eta()), "eta")?,
        pick(a.gamma_mhz.map(|g| g * 1e6), base.map(|m| m.gamma_hwhm_hz()), "gamma-mhz")?,
        pick(a.kappa_mhz.map(|k| k * 1e6), base.map(|m| m.kappa_hwhm_hz()), "kappa-mhz")?,
        pick(a.pump_ratio, base.map(|m| m.pump_ratio()), "pump-ratio")?,
    )
}

fn push_model(doc: &mut KeyValueDoc, m: &ChainModel) {
    doc.push("eta", m.eta())
        .push("gamma_hwhm_hz", m.gamma_hwhm_hz())
        .push("kappa_hwhm_hz", m.kappa_hwhm_hz())
        .push("pump_ratio", m.pump_ratio());
}

fn cmd_spectrum(a: &SpectrumArgs, dir: &Path) -> Result<KeyValueDoc> {
    let model = resolve_model(&a.model)?;
    let spacing = if a.log { Spacing::Log } else { Spacing::Linear };
    let (sm, sp) = spectrum_trace(&model, a.fmin_mhz * 1e6, a.fmax_mhz * 1e6, a.points, spacing)?;

    let mut doc = header("spectrum");
    push_model(&mut doc, &model);
    doc.push("fmin_hz", a.fmin_mhz * 1e6)
        .push("fmax_hz", a.fmax_mhz * 1e6)
        .push("points", a.points)
        .push("spacing", if a.log { "log" } else { "linear" });

    sm.write_csv_file(&dir.join("s_minus.csv"))?;
    sp.write_csv_file(&dir.join("s_plus.csv"))?;
    let sm_db = sm.to_db_rel_shot()?;
    let sp_db = sp.to_db_rel_shot()?;
    let mut table = String::from("frequency_hz,s_minus_db,s_plus_db\n");
    for i in 0..sm.len() {
        table += &format!("{},{},{}\n", sm.freqs_hz()[i], sm_db.power()[i], sp_db.power()[i]);
    }
    write_text(&dir.join("spectrum.csv"), &table)?;

    let at5 = model.spectrum_at(SidebandFrequency::new(5e6)?);
    doc.push("s_minus_db_at_5mhz", at5.squeezed().db())
        .push("s_plus_db_at_5mhz", at5.antisqueezed().db())
        .push("trace_file", "spectrum.csv");
    if a.svg {
        let plot = Plot::new("Quadrature noise spectrum", "sideband frequency [MHz]", "noise relative to shot noise [dB]")
            .log_x(a.log)
            .with_series(Series::new("anti-squeezing", "#1f4fd8", mhz_db(&sp_db)))
            .with_series(Series::new("squeezing", "#d62728", mhz_db(&sm_db)));
        write_text(&dir.join("spectrum.svg"), &plot.render())?;
    }
    Ok(doc)
}

fn mhz_db(t: &SpectrumTrace) -> Vec<(f64, f64)> {
    t.valid_samples().map(|(f, p)| (f / 1e6, p)).collect()
}

fn load_fit_trace(path: &Path, shot: Option<&SpectrumTrace>, dark: Option<&SpectrumTrace>) -> Result<SpectrumTrace> {
    let t = SpectrumTrace::read_csv_file(path, TraceKind::Signal)?;
    if t.unit().is_shot_normalized() {
        return Ok(t);
    }
    let shot = shot.ok_or_else(|| {
        Error::Unit(format!(
            "{} holds absolute power; pass --shot (and optionally --dark) to normalize",
            path.display()
        ))
    })?;
    let t = t.to_linear();
    match dark {
        Some(d) => normalize_to_shot(&subtract_dark(&t, d)?, shot),
        None => normalize_to_shot(&t, shot),
    }
}

fn cmd_fit(a: &FitArgs, dir: &Path) -> Result<KeyValueDoc> {
    let dark = match &a.dark {
        Some(p) => Some(SpectrumTrace::read_csv_file(p, TraceKind::Dark)?.to_linear()),
        None => None,
    };
    let shot = match &a.shot {
        Some(p) => {
            let s = SpectrumTrace::read_csv_file(p, TraceKind::Shot)?.to_linear();
            Some(match &dark {
                Some(d) => subtract_dark(&s, d)?,
                None => s,
            })
        }
        None => None,
    };
    let sm = load_fit_trace(&a.sqz, shot.as_ref(), dark.as_ref())?;
    let sp = load_fit_trace(&a.antisqz, shot.as_ref(), dark.as_ref())?;

    let initial = ChainModel::new(
        a.init_eta,
        a.init_gamma_mhz * 1e6,
        a.init_kappa_mhz * 1e6,
        a.init_pump_ratio,
    )?;
    let mut bounds = ParamBounds::default();
    let mhz = |r: (f64, f64)| (r.0 * 1e6, r.1 * 1e6);
    if let Some(r) = a.eta_bounds {
        bounds.eta = r;
    }
    if let Some(r) = a.gamma_bounds_mhz {
        bounds.gamma_hz = mhz(r);
    }
    if let Some(r) = a.kappa_bounds_mhz {
        bounds.kappa_hz = mhz(r);
    }
    if let Some(r) = a.pump_bounds {
        bounds.pump_ratio = r;
    }
    let mut options = FitOptions {
        mask_hz: a.mask_mhz.iter().map(|r| mhz(*r)).collect(),
        ..FitOptions::default()
    };
    options.lm.max_iterations = a.max_iter;

    let mut doc = header("fit");
    doc.push("sqz_file", a.sqz.display())
        .push("antisqz_file", a.antisqz.display())
        .push("shot_file", a.shot.as_ref().map_or("none".into(), |p| p.display().to_string()))
        .push("dark_file", a.dark.as_ref().map_or("none".into(), |p| p.display().to_string()))
        .push("init_eta", a.init_eta)
        .push("init_gamma_hwhm_hz", initial.gamma_hwhm_hz())
        .push("init_kappa_hwhm_hz", initial.kappa_hwhm_hz())
        .push("init_pump_ratio", a.init_pump_ratio)
        .push("bounds_eta", format!("{}:{}", bounds.eta.0, bounds.eta.1))
        .push("bounds_gamma_hz", format!("{}:{}", bounds.gamma_hz.0, bounds.gamma_hz.1))
        .push("bounds_kappa_hz", format!("{}:{}", bounds.kappa_hz.0, bounds.kappa_hz.1))
        .push("bounds_pump_ratio", format!("{}:{}", bounds.pump_ratio.0, bounds.pump_ratio.1))
        .push("max_iterations", a.max_iter);
    for (lo, hi) in &options.mask_hz {
        doc.push("mask_hz", format!("{lo}:{hi}"));
    }

    let result = fit::fit_spectrum(&sm, &sp, &initial, &bounds, &options)?;
    doc.extend(&result.to_doc());

    if a.svg {
        let f = sm.freqs_hz();
        let (lo, hi) = (f[0], f[f.len() - 1]);
        let (mm, mp) = spectrum_trace(&result.model, lo, hi.max(lo * 1.0001 + 1.0), 400, Spacing::Linear)?;
        let plot = Plot::new("Spectrum fit", "sideband frequency [MHz]", "noise relative to shot noise [dB]")
            .with_series(Series::new("anti-squeezing data", "#17becf", mhz_db(&sp.to_db_rel_shot()?)))
            .with_series(Series::new("squeezing data", "#ff7f0e", mhz_db(&sm.to_db_rel_shot()?)))
            .with_series(Series::new("model S+", "#1f4fd8", mhz_db(&mp.to_db_rel_shot()?)))
            .with_series(Series::new("model S-", "#d62728", mhz_db(&mm.to_db_rel_shot()?)));
        write_text(&dir.join("fit.svg"), &plot.render())?;
    }
    Ok(doc)
}

fn cmd_budget(b: &BudgetCommand) -> Result<KeyValueDoc> {
    let mut doc = header("budget");
    match b {
        BudgetCommand::Invert { sqz_db, antisqz_db } => {
            doc.push("mode", "invert")
                .push("sqz_db", sqz_db)
                .push("antisqz_db", antisqz_db);
            let pair = QuadraturePair::from_db(*sqz_db, *antisqz_db).map_err(|e| match e {
                Error::InvalidArgument(m) | Error::Domain(m) => Error::InconsistentPair(m),
                e => e,
            })?;
            let inv = invert_pair(&pair)?;
            doc.push("eta", inv.eta_total)
                .push("loss_percent", inv.loss_percent())
                .push("initial_squeezing_db", inv.initial_squeezing.db())
                .push("initial_antisqueezing_db", -inv.initial_squeezing.db())
                .push(
                    "summary",
                    format!(
                        "eta={:.3} loss={:.1}% initial={:.1} dB",
                        inv.eta_total,
                        inv.loss_percent(),
                        inv.initial_squeezing.db()
                    ),
                );
        }
        BudgetCommand::Compose { file } => {
            let budget = LossBudget::read_file(file)?;
            doc.push("mode", "compose").push("file", file.display());
            for e in budget.elements() {
                doc.push(format!("element.{}", e.label().replace(' ', "_")), e.efficiency());
            }
            let total = budget.compose()?;
            doc.push("total_efficiency", total)
                .push("loss_percent", 100.0 * (1.0 - total))
                .push(
                    "summary",
                    format!("total={:.3} loss={:.1}%", total, 100.0 * (1.0 - total)),
                );
        }
    }
    Ok(doc)
}

fn cmd_simulate(a: &SimulateArgs, dir: &Path) -> Result<KeyValueDoc> {
    let pair = QuadraturePair::from_db(a.sqz_db, a.antisqz_db)?;
    let phase = match (a.phase_deg, a.ramp_deg) {
        (_, Some((from, to))) => {
            if !(a.duration_s > 0.0) {
                return Err(Error::invalid("--duration-s must be positive"));
            }
            PhaseProgram::sweep(from.to_radians(), to.to_radians(), a.duration_s)
        }
        (Some(deg), None) => PhaseProgram::Fixed(deg.to_radians()),
        (None, None) => PhaseProgram::Fixed(0.0),
    };
    let run = HomodyneRun::new(pair, phase, a.samples, a.seed)?;

    let mut doc = header("simulate");
    doc.push("sqz_db", a.sqz_db)
        .push("antisqz_db", a.antisqz_db)
        .push("seed", a.seed)
        .push("samples", a.samples)
        .push("window", a.window)
        .push("block_len", simulation::homodyne::BLOCK_LEN);
    match phase {
        PhaseProgram::Fixed(t) => doc.push("phase_rad", t),
        PhaseProgram::Ramp {
            start_rad,
            rate_rad_per_s,
            duration_s,
        } => doc
            .push("ramp_start_rad", start_rad)
            .push("ramp_rate_rad_per_s", rate_rad_per_s)
            .push("ramp_duration_s", duration_s),
    };

    let trace = simulation::zero_span_trace(&run, a.window)?;
    let mut csv = String::from("window,first_sample,phase_rad,power_db\n");
    for (k, p) in trace.iter().enumerate() {
        csv += &format!("{k},{},{},{}\n", p.first_sample, p.phase_rad, p.level.db());
    }
    write_text(&dir.join("zero_span.csv"), &csv)?;
    doc.push("zero_span_file", "zero_span.csv")
        .push("windows", trace.len());
    if let (Some(lo), Some(hi)) = (
        trace.iter().map(|p| p.level.db()).reduce(f64::min),
        trace.iter().map(|p| p.level.db()).reduce(f64::max),
    ) {
        doc.push("min_window_db", lo).push("max_window_db", hi);
    }
    if let Some(path) = &a.dump {
        let samples = simulation::sample_quadratures(&run);
        dump::write_file(&dir.join(path), &samples)?;
        doc.push("dump_file", path.display())
            .push("sample_variance", simulation::sample_variance(&samples));
    }
    if a.svg {
        let pts = trace
            .iter()
            .map(|p| (p.phase_rad * 180.0 / PI, p.level.db()))
            .collect();
        let plot = Plot::new("Zero-span homodyne trace", "local-oscillator phase [deg]", "variance relative to shot noise [dB]")
            .with_series(Series::new("simulated", "#2ca02c", pts));
        write_text(&dir.join("zero_span.svg"), &plot.render())?;
    }
    Ok(doc)
}

fn cmd_mzi(a: &MziArgs, dir: &Path) -> Result<KeyValueDoc> {
    let sqz = -a.sqz_db.abs();
    let pair = match a.antisqz_db {
        Some(anti) => QuadraturePair::from_db(sqz, anti)?,
        None => QuadraturePair::from_db(sqz, -sqz)?,
    };
    let mut config = MziConfig::new(pair);
    config.signal_freq_hz = a.signal_mhz * 1e6;
    config.signal_mod_depth = a.mod_depth;
    config.carrier_power_rel = a.carrier_power;
    config.rbw_hz = a.rbw_khz * 1e3;
    let vacuum = MziConfig {
        dark_port_pair: QuadraturePair::vacuum(),
        ..config
    };

    let mut doc = header("mzi");
    doc.push("sqz_db", sqz)
        .push("antisqz_db", pair.antisqueezed().db())
        .push("signal_freq_hz", config.signal_freq_hz)
        .push("mod_depth", config.signal_mod_depth)
        .push("carrier_power_rel", config.carrier_power_rel)
        .push("rbw_hz", config.rbw_hz)
        .push("fmin_hz", a.fmin_mhz * 1e6)
        .push("fmax_hz", a.fmax_mhz * 1e6)
        .push("points", a.points)
        .push("monte_carlo", a.monte_carlo);
    let noise = match (a.monte_carlo, a.seed) {
        (true, Some(seed)) => {
            doc.push("seed", seed).push("averages", a.averages);
            Some((seed, a.averages))
        }
        _ => None,
    };

    let r = simulation::mzi_response(&config)?;
    let r_vac = simulation::mzi_response(&vacuum)?;
    doc.push("noise_floor_db", r.noise_floor.db())
        .push("signal_peak_db", r.signal_peak_db)
        .push("vacuum_signal_peak_db", r_vac.signal_peak_db)
        .push("snr_power_factor", r.snr_power_factor)
        .push("snr_amplitude_factor", r.snr_amplitude_factor)
        .push(
            "summary",
            format!(
                "power factor {:.2}, amplitude factor {:.2}",
                r.snr_power_factor, r.snr_amplitude_factor
            ),
        );

    let (fmin, fmax) = (a.fmin_mhz * 1e6, a.fmax_mhz * 1e6);
    // independent streams for the two traces
    let mc = |offset: u64| {
        noise.map(|(seed, averages)| AnalyzerNoise {
            seed: seed.wrapping_add(offset),
            averages,
        })
    };
    let t_vac = simulation::mzi_spectrum(&vacuum, fmin, fmax, a.points, mc(0))?;
    let t_sq = simulation::mzi_spectrum(&config, fmin, fmax, a.points, mc(1))?;
    t_vac.write_csv_file(&dir.join("mzi_vacuum.csv"))?;
    t_sq.write_csv_file(&dir.join("mzi_squeezed.csv"))?;
    if a.svg {
        let plot = Plot::new("Interferometer output spectrum", "frequency [MHz]", "power relative to shot noise [dB]")
            .with_series(Series::new("vacuum input", "black", mhz_db(&t_vac.to_db_rel_shot()?)))
            .with_series(Series::new("squeezed input", "#d62728", mhz_db(&t_sq.to_db_rel_shot()?)));
        write_text(&dir.join("mzi.svg"), &plot.render())?;
    }
    Ok(doc)
}

fn cmd_linewidth(a: &LinewidthArgs) -> Result<KeyValueDoc> {
    let scan = AiryScan::read_csv_file(&a.scan, a.fmod_mhz * 1e6)?;
    let r = extract_linewidth(&scan)?;
    let mut doc = header("linewidth");
    doc.push("scan_file", a.scan.display())
        .push("f_mod_hz", scan.f_mod_hz())
        .push("samples", scan.time_s().len())
        .push("hwhm_hz", r.hwhm_hz)
        .push("lower_marker_s", r.marker_times_s[0])
        .push("carrier_s", r.marker_times_s[1])
        .push("upper_marker_s", r.marker_times_s[2])
        .push("nonlinear_scan", r.nonlinear_scan)
        .push("fit_converged", r.fit_converged)
        .push("summary", format!("HWHM {:.3} MHz", r.hwhm_hz / 1e6));
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parser() {
        assert_eq!(parse_range("0.5:1").unwrap(), (0.5, 1.0));
        assert_eq!(parse_range("-2 : 3").unwrap(), (-2.0, 3.0));
        assert!(parse_range("1").is_err());
        assert!(parse_range("a:1").is_err());
    }

    #[test]
    fn exit_code_contract() {
        assert_eq!(exit_code(&Error::invalid("x")), 2);
        assert_eq!(exit_code(&Error::AboveThreshold { pump: 1.0, threshold: 1.0 }), 2);
        assert_eq!(exit_code(&Error::InconsistentPair("x".into())), 3);
        assert_eq!(exit_code(&Error::NoSqueezing { squeezed: 1.0, antisqueezed: 1.0 }), 3);
        assert_eq!(exit_code(&Error::parse("f", "x")), 4);
    }

    #[test]
    fn stochastic_commands_require_seed() {
        assert!(Cli::try_parse_from(["squeezelab", "simulate"]).is_err());
        assert!(Cli::try_parse_from(["squeezelab", "simulate", "--seed", "1"]).is_ok());
        assert!(Cli::try_parse_from(["squeezelab", "mzi", "--sqz-db", "3", "--monte-carlo"]).is_err());
    }
}
