//! Argument parsing and subcommand drivers for the `mimicry` binary.
//!
//! [`parse_args`] turns argv into a validated [`RunConfig`]; [`execute`]
//! runs it. Usage problems and data problems are kept apart so the binary
//! can map them to exit codes 1 and 2.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mimicry::analysis::{
    density, distinction_report, estimate_transfer, window_values, AnalysisReport, Bandwidth,
    DiagnoseConfig, DistinctionSetup,
};
use mimicry::chain::{run_chain_in_window, sweep_points, DEFAULT_ITERATIONS};
use mimicry::io::{
    read_ensemble_file, read_run_dir, svg_line_plot, write_density_csv, write_ensemble_file,
    write_inverter_csv, write_run_dir,
};
use mimicry::stimulus::DEFAULT_BLOCK_SIZE;
use mimicry::{
    gen_stimuli, sweep_inverter, BasisSet64, Inverter64, ResponseMap64, VariationModel, WeightMode,
    WeightScheme, Window64,
};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mimicry",
    version,
    about = "Simulate and analyze mimicry chains of pitch contours"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Uniform weights on the simplex.
    Simplex,
    /// One uniform draw along the low → mid → high path.
    Span,
}

impl From<Mode> for WeightMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Simplex => WeightMode::UniformSimplex,
            Mode::Span => WeightMode::SpanPath,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a block of stimuli as convex combinations of three basis contours.
    GenStimuli(GenStimuliArgs),
    /// Run a mimicry chain and write iter_0.csv … iter_k.csv.
    Simulate(SimulateArgs),
    /// Analyze a run directory into a single JSON report.
    Analyze(AnalyzeArgs),
    /// Estimate the transfer map from a run directory.
    EstimateMap(EstimateMapArgs),
    /// Count input levels that stay distinguishable after noisy passes through a map.
    Distinctions(DistinctionsArgs),
    /// Sweep input voltages through a string of inverters.
    Inverter(InverterArgs),
}

#[derive(Debug, Args)]
pub struct GenStimuliArgs {
    /// Basis contour CSV with exactly three utterances [default: built-in synthetic basis]
    #[arg(long)]
    pub basis: Option<PathBuf>,
    /// Number of stimuli
    #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Simplex)]
    pub mode: Mode,
    /// Output contour CSV
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Stimulus contour CSV (iteration 0)
    #[arg(long)]
    pub stimuli: PathBuf,
    /// Response map JSON
    #[arg(long)]
    pub map: PathBuf,
    /// Variation model JSON [default: transposition 0.5 st, jitter 0.25 st, half-width 5]
    #[arg(long)]
    pub noise: Option<PathBuf>,
    /// Number of mimicry iterations (≥ 1)
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iters: usize,
    /// Master seed for all production noise
    #[arg(long)]
    pub seed: u64,
    /// Analysis window used by utterance-level attractor assignment
    #[arg(long, default_value = "0.3:0.6", value_parser = parse_window)]
    pub window: Window64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Run directory holding iter_0.csv …
    #[arg(long)]
    pub runs: PathBuf,
    #[arg(long, default_value = "0.3:0.6", value_parser = parse_window)]
    pub window: Window64,
    /// Transfer-map bins (≥ 4)
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
    /// Also write density_iter_<k>.csv files here
    #[arg(long)]
    pub export_dir: Option<PathBuf>,
    /// Add SVG plots (density per iteration, depth vs iteration) to the export directory
    #[arg(long, requires = "export_dir")]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct EstimateMapArgs {
    #[arg(long)]
    pub runs: PathBuf,
    #[arg(long, default_value = "0.3:0.6", value_parser = parse_window)]
    pub window: Window64,
    /// Transfer-map bins (≥ 4)
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[arg(long, default_value = "map_est.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DistinctionsArgs {
    #[arg(long)]
    pub map: PathBuf,
    /// Variation model JSON; its seed keys the trials [default: default variation, seed 0]
    #[arg(long)]
    pub noise: Option<PathBuf>,
    /// Number of equally spaced input levels (≥ 2)
    #[arg(long, default_value_t = 16)]
    pub levels: usize,
    /// Mimicry iterations per trial (≥ 1)
    #[arg(long, default_value_t = 1)]
    pub iters: usize,
    /// Trials per level (≥ 30)
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Required separation in pooled sds
    #[arg(long, default_value_t = 2.0)]
    pub z: f64,
    /// Input span in semitones, lo:hi
    #[arg(long, default_value = "-5:3", value_parser = parse_span, allow_hyphen_values = true)]
    pub span: (f64, f64),
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InverterArgs {
    /// Input voltages lo:hi:step
    #[arg(long, default_value = "0:3.3:0.001", value_parser = parse_sweep)]
    pub sweep: Sweep,
    /// Inverter stages (≥ 1)
    #[arg(long, default_value_t = 8)]
    pub stages: usize,
    /// Inverter map JSON [default: 0.2 V / 3.1 V rails, midpoint 1.7 V, gain 4 per V]
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Output CSV with columns v_in,stage,v
    #[arg(long)]
    pub out: PathBuf,
}

/// Input voltages of an inverter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep(pub Vec<f64>);

/// A parsed and validated invocation.
#[derive(Debug)]
pub struct RunConfig {
    pub command: Command,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad command line. Carries clap's formatted message.
    Usage(String),
    /// `--help` or `--version`: print and exit 0.
    Display(String),
    /// Unreadable or invalid input data, or a failed computation.
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Display(_) => 0,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Display(m) => f.write_str(m.trim_end()),
            CliError::Data(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<mimicry::Error> for CliError {
    fn from(e: mimicry::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("malformed number {t:?}"))
    };
    Ok((num(a)?, num(b)?))
}

fn parse_window(s: &str) -> Result<Window64, String> {
    let (lo, hi) = parse_pair(s)?;
    if lo > hi {
        return Err(format!("inverted window {lo}:{hi}"));
    }
    Window64::new(lo, hi).map_err(|e| e.to_string())
}

fn parse_span(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = parse_pair(s)?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("span must satisfy lo < hi, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err(format!("expected lo:hi:step, got {s:?}"));
    };
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("malformed number {t:?}"))
    };
    sweep_points(num(lo)?, num(hi)?, num(step)?)
        .map(Sweep)
        .map_err(|e| e.to_string())
}

fn usage(cmd: &mut clap::Command, kind: clap::error::ErrorKind, msg: String) -> CliError {
    CliError::Usage(cmd.error(kind, msg).to_string())
}

/// Parses argv (program name first) and checks ranges and input files.
pub fn parse_args<I, S>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    use clap::error::ErrorKind;
    use clap::CommandFactory;

    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        ErrorKind::DisplayHelp
        | ErrorKind::DisplayVersion
        | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => CliError::Display(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    })?;

    let name = match &cli.command {
        Command::GenStimuli(_) => "gen-stimuli",
        Command::Simulate(_) => "simulate",
        Command::Analyze(_) => "analyze",
        Command::EstimateMap(_) => "estimate-map",
        Command::Distinctions(_) => "distinctions",
        Command::Inverter(_) => "inverter",
    };
    let mut root = Cli::command();
    root.build();
    let mut cmd = root
        .find_subcommand(name)
        .expect("subcommand exists")
        .clone();
    let range = |cmd: &mut clap::Command, flag: &str, ok: bool, need: &str| {
        if ok {
            Ok(())
        } else {
            Err(usage(
                cmd,
                ErrorKind::ValueValidation,
                format!("--{flag} must be {need}"),
            ))
        }
    };
    let exists = |cmd: &mut clap::Command, flag: &str, path: &Path| {
        if path.is_file() || (flag == "runs" && path.is_dir()) {
            Ok(())
        } else {
            Err(usage(
                cmd,
                ErrorKind::ValueValidation,
                format!("--{flag}: no such file {}", path.display()),
            ))
        }
    };

    match &cli.command {
        Command::GenStimuli(a) => {
            range(&mut cmd, "n", a.n >= 1, "at least 1")?;
            if let Some(b) = &a.basis {
                exists(&mut cmd, "basis", b)?;
            }
        }
        Command::Simulate(a) => {
            range(&mut cmd, "iters", a.iters >= 1, "at least 1")?;
            exists(&mut cmd, "stimuli", &a.stimuli)?;
            exists(&mut cmd, "map", &a.map)?;
            if let Some(n) = &a.noise {
                exists(&mut cmd, "noise", n)?;
            }
        }
        Command::Analyze(a) => {
            range(&mut cmd, "bins", a.bins >= 4, "at least 4")?;
            exists(&mut cmd, "runs", &a.runs)?;
        }
        Command::EstimateMap(a) => {
            range(&mut cmd, "bins", a.bins >= 4, "at least 4")?;
            exists(&mut cmd, "runs", &a.runs)?;
        }
        Command::Distinctions(a) => {
            range(&mut cmd, "levels", a.levels >= 2, "at least 2")?;
            range(&mut cmd, "iters", a.iters >= 1, "at least 1")?;
            range(&mut cmd, "trials", a.trials >= 30, "at least 30")?;
            range(&mut cmd, "z", a.z.is_finite() && a.z > 0.0, "positive")?;
            exists(&mut cmd, "map", &a.map)?;
            if let Some(n) = &a.noise {
                exists(&mut cmd, "noise", n)?;
            }
        }
        Command::Inverter(a) => {
            range(&mut cmd, "stages", a.stages >= 1, "at least 1")?;
            if let Some(m) = &a.map {
                exists(&mut cmd, "map", m)?;
            }
        }
    }
    Ok(RunConfig {
        command: cli.command,
    })
}

fn read_map(path: &Path) -> Result<ResponseMap64, CliError> {
    ResponseMap64::from_json(&fs::read_to_string(path)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_noise(path: Option<&Path>) -> Result<VariationModel, CliError> {
    match path {
        None => Ok(VariationModel::default()),
        Some(p) => VariationModel::from_json(&fs::read_to_string(p)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", p.display()))),
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn create_parent(path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

/// Runs a validated invocation.
pub fn execute(config: RunConfig) -> Result<(), CliError> {
    match config.command {
        Command::GenStimuli(a) => {
            let basis = match &a.basis {
                None => BasisSet64::synthetic_default(),
                Some(p) => BasisSet64::from_vec(read_ensemble_file(p)?.contours().to_vec())?,
            };
            let stimuli = gen_stimuli(
                &basis,
                a.n,
                WeightScheme {
                    mode: a.mode.into(),
                    seed: a.seed,
                },
            )?;
            create_parent(&a.out)?;
            write_ensemble_file(&a.out, &stimuli)?;
            log::info!("wrote {} stimuli to {}", stimuli.len(), a.out.display());
        }
        Command::Simulate(a) => {
            let stimuli = read_ensemble_file(&a.stimuli)?;
            let map = read_map(&a.map)?;
            let noise = read_noise(a.noise.as_deref())?;
            let run = run_chain_in_window(&stimuli, &map, &noise, a.iters, a.seed, &a.window)?;
            write_run_dir(&a.out_dir, &run)?;
            log::info!(
                "wrote {} iterations to {}",
                run.iterations(),
                a.out_dir.display()
            );
        }
        Command::Analyze(a) => {
            let ensembles = read_run_dir::<f64>(&a.runs)?;
            let report =
                AnalysisReport::build(&ensembles, &a.window, a.bins, DiagnoseConfig::default())?;
            create_parent(&a.out)?;
            fs::write(&a.out, report.to_json()? + "\n")?;
            if let Some(dir) = &a.export_dir {
                export(dir, &ensembles, &a.window, &report, a.svg)?;
            }
            log::info!("verdict {:?}", report.verdict.verdict);
        }
        Command::EstimateMap(a) => {
            let ensembles = read_run_dir::<f64>(&a.runs)?;
            let est = estimate_transfer(&ensembles, &a.window, a.bins)?;
            create_parent(&a.out)?;
            write_json(&a.out, &est)?;
        }
        Command::Distinctions(a) => {
            let map = read_map(&a.map)?;
            let noise = read_noise(a.noise.as_deref())?;
            let setup = DistinctionSetup {
                iterations: a.iters,
                n_levels: a.levels,
                span: a.span,
                trials: a.trials,
                z: a.z,
            };
            let report = distinction_report(&map, &noise, &setup)?;
            match &a.out {
                Some(p) => {
                    create_parent(p)?;
                    write_json(p, &report)?;
                }
                None => println!(
                    "{}",
                    serde_json::to_string_pretty(&report)
                        .map_err(|e| CliError::Data(e.to_string()))?
                ),
            }
        }
        Command::Inverter(a) => {
            let inverter = match &a.map {
                None => Inverter64::default(),
                Some(p) => match read_map(p)? {
                    ResponseMap64::Inverter(inv) => inv,
                    _ => {
                        return Err(CliError::Data(format!(
                            "{}: not an inverter map",
                            p.display()
                        )))
                    }
                },
            };
            let strings = sweep_inverter(&a.sweep.0, a.stages, &inverter)?;
            create_parent(&a.out)?;
            write_inverter_csv(BufWriter::new(File::create(&a.out)?), &a.sweep.0, &strings)?;
        }
    }
    Ok(())
}

fn export(
    dir: &Path,
    ensembles: &[mimicry::ContourEnsemble64],
    window: &Window64,
    report: &mimicry::AnalysisReport64,
    svg: bool,
) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let mut curves = Vec::new();
    for e in ensembles {
        let values: Vec<f64> = window_values(e, window)?
            .into_iter()
            .map(|(_, v)| v)
            .collect();
        let d = density(&values, Bandwidth::Auto)?;
        let path = dir.join(format!("density_iter_{}.csv", e.iteration()));
        write_density_csv(BufWriter::new(File::create(path)?), d.grid(), d.density())?;
        curves.push((
            format!("iteration {}", e.iteration()),
            d.grid()
                .iter()
                .copied()
                .zip(d.density().iter().copied())
                .collect(),
        ));
    }
    if svg {
        fs::write(
            dir.join("density.svg"),
            svg_line_plot("Window-mean density", "phi (st)", "density", &curves),
        )?;
        let depth = report
            .valley
            .per_iteration
            .iter()
            .map(|p| (p.iteration as f64, p.depth))
            .collect();
        fs::write(
            dir.join("valley_depth.svg"),
            svg_line_plot(
                "Valley depth",
                "iteration",
                "depth",
                &[("depth".to_string(), depth)],
            ),
        )?;
    }
    Ok(())
}
