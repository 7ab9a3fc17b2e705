//! Command-line entry points. Each command returns the text it prints.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rfsplat::bvh::build_bvh;
use rfsplat::formats::{radio_map_csv, radio_map_grid, rcs_csv, read_dataset, read_scene, write_scene};
use rfsplat::inverse::{
    fit, fit_wideband, FamConfig, FamNetwork, FitConfig, FitReport, WidebandConfig, WidebandReport,
};
use rfsplat::render::RadarPattern;
use rfsplat::FrequencyGrid;
use rfsplat_oracle::{blend_suite, cross_section_suite, gradient_suite, visibility_suite, SuiteReport};
use serde::Serialize;

use crate::error::CliError;
use crate::payload::{
    map_response, parse_band, parse_grid, rcs_response, render_options, resolve_antenna, sweep_angles, MapRequest,
};

#[derive(Debug, Parser)]
#[command(name = "rfsplat", version, about = "RF rendering over Gaussian scenes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monostatic radar sweep around the z axis; writes a CSV of
    /// angle_deg, frequency_hz, rssi_db.
    Rcs(RcsArgs),
    /// Radio map over the scene footprint; writes CSV, binary grid and JSON.
    Map(MapArgs),
    /// Recovers RF attributes from a dataset; writes a JSON fit report.
    Fit(FitArgs),
    /// Runs an oracle property suite and prints its table.
    Oracle(OracleArgs),
    /// Serves the JSON API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PatternArg {
    Horn,
    Omni,
}

impl From<PatternArg> for RadarPattern {
    fn from(p: PatternArg) -> Self {
        match p {
            PatternArg::Horn => RadarPattern::Horn,
            PatternArg::Omni => RadarPattern::Omni,
        }
    }
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("frequency").required(true).args(["freq", "band"])))]
pub struct RcsArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Radar distance from the origin (m).
    #[arg(long)]
    pub range: f64,
    /// Single frequency (Hz).
    #[arg(long)]
    pub freq: Option<f64>,
    /// Frequency band `start:stop:count` (Hz).
    #[arg(long)]
    pub band: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub step_deg: f64,
    #[arg(long, value_enum, default_value_t = PatternArg::Horn)]
    pub pattern: PatternArg,
    /// Exact receive directions instead of the 1 degree FoV grid.
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Transmitter preset name or `x,y,z`.
    #[arg(long)]
    pub tx: String,
    /// `HxW` cells, at most 256 per side.
    #[arg(long)]
    pub grid: String,
    /// Frequency (Hz); defaults to the first frequency of the scene grid.
    #[arg(long)]
    pub freq: Option<f64>,
    /// Receiver height (m); defaults to the centre of the scene bounds.
    #[arg(long)]
    pub z: Option<f64>,
    #[arg(long, default_value_t = crate::payload::DEFAULT_THRESHOLD_DB, allow_negative_numbers = true)]
    pub threshold_db: f64,
    #[arg(long)]
    pub exact: bool,
    /// Output path; `.csv`, `.grid` and `.json` siblings are written.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also train the frequency-aware deformation network.
    #[arg(long)]
    pub wideband: bool,
    /// Use the 6x256 network instead of 3x64.
    #[arg(long, requires = "wideband")]
    pub full_network: bool,
    #[arg(long)]
    pub exact: bool,
    /// Writes the scene with the recovered attributes.
    #[arg(long)]
    pub bank_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OracleCheck {
    Gradients,
    Blend,
    CrossSection,
    Visibility,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_enum)]
    pub check: OracleCheck,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of cases (defaults: 20 gradients, 50 blend, 100 cross-section,
    /// 50 visibility scenes).
    #[arg(long)]
    pub cases: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "RFSPLAT_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Scene files (`*.json`) in this directory are loaded at startup.
    #[arg(long, env = "RFSPLAT_SCENE_DIR")]
    pub scene_dir: Option<PathBuf>,
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::failure(format!("cannot write {}: {e}", path.display())))
}

pub fn rcs(args: &RcsArgs) -> Result<String, CliError> {
    let doc = read_scene(&args.scene)?;
    let grid = match (&args.band, args.freq) {
        (Some(band), _) => parse_band(band)?,
        (None, Some(f)) => FrequencyGrid::single(f)?,
        (None, None) => return Err(CliError::usage("one of --freq or --band is required")),
    };
    if !(args.range > 0.0) || !args.range.is_finite() {
        return Err(CliError::usage(format!("invalid range {}", args.range)));
    }
    let bvh = build_bvh(&doc.scene);
    let angles = sweep_angles(args.step_deg)?;
    let sweep = rcs_response(&doc, &bvh, args.range, angles, args.pattern.into(), &grid, args.exact)?;
    write(&args.out, rcs_csv(&sweep.points))?;
    Ok(format!("wrote {} rows to {}\n", sweep.points.len(), args.out.display()))
}

pub fn map(args: &MapArgs) -> Result<String, CliError> {
    let doc = read_scene(&args.scene)?;
    let (height, width) = parse_grid(&args.grid)?;
    let tx = resolve_antenna(&doc, &args.tx)?;
    let frequency = args.freq.unwrap_or(doc.grid.samples()[0]);
    let bvh = build_bvh(&doc.scene);
    let request = MapRequest {
        tx,
        height,
        width,
        frequency,
        z: args.z,
        threshold_db: args.threshold_db,
        exact: args.exact,
    };
    let (response, map) = map_response(&doc, &bvh, &request)?;
    let csv = args.out.with_extension("csv");
    let grid = args.out.with_extension("grid");
    let json = args.out.with_extension("json");
    write(&csv, radio_map_csv(&map))?;
    write(&grid, radio_map_grid(&map).to_bytes())?;
    write(
        &json,
        serde_json::to_vec(&response).map_err(|e| CliError::failure(e.to_string()))?,
    )?;
    Ok(format!(
        "{}x{} map: min {:.2} dB, mean {:.2} dB, max {:.2} dB, coverage {:.1}% >= {} dB\nwrote {}, {}, {}\n",
        height,
        width,
        response.stats.min_db,
        response.stats.mean_db,
        response.stats.max_db,
        response.stats.coverage_percent,
        response.stats.threshold_db,
        csv.display(),
        grid.display(),
        json.display()
    ))
}

#[derive(Serialize)]
struct FitOutput {
    #[serde(flatten)]
    report: FitReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    wideband: Option<WidebandReport>,
}

pub fn fit_command(args: &FitArgs) -> Result<String, CliError> {
    let doc = read_scene(&args.scene)?;
    let data = read_dataset(&args.data)?;
    if data.scene_id != doc.id {
        return Err(CliError::usage(format!(
            "dataset refers to scene '{}' but the scene file is '{}'",
            data.scene_id, doc.id
        )));
    }
    let bvh = build_bvh(&doc.scene);
    let config = FitConfig {
        iterations: args.iters,
        seed: args.seed,
        render: render_options(&doc, args.exact),
        ..FitConfig::default()
    };
    let (report, bank) = fit(&doc.scene, &bvh, &data, &config)?;
    let fitted = doc.scene.with_attributes(&bank.attributes())?;
    let wideband = if args.wideband {
        let samples = data.grid.samples();
        let (lo, hi) = (samples[0], samples[samples.len() - 1]);
        let fam = if args.full_network {
            FamConfig::full(lo, hi)
        } else {
            FamConfig::desk(lo, hi)
        };
        let net = FamNetwork::new(fam, fitted.len(), args.seed);
        let cfg = WidebandConfig {
            iterations: args.iters,
            render: config.render,
            ..WidebandConfig::default()
        };
        Some(fit_wideband(&fitted, &bvh, &bank, net, &data, &cfg)?.1)
    } else {
        None
    };
    if let Some(path) = &args.bank_out {
        let mut out = doc.clone();
        out.scene = fitted;
        write_scene(path, &out)?;
    }
    let summary = format!(
        "loss {:.4e} -> {:.4e} ({:.1} dB) in {} iterations, converged: {}\n",
        report.initial_loss,
        report.final_loss,
        report.loss_reduction_db(),
        report.loss_trace.len(),
        report.converged
    );
    let output = FitOutput { report, wideband };
    let mut json = serde_json::to_string_pretty(&output).map_err(|e| CliError::failure(e.to_string()))?;
    json.push('\n');
    write(&args.out, json)?;
    Ok(summary)
}

pub fn oracle(args: &OracleArgs) -> Result<(String, bool), CliError> {
    let report: SuiteReport = match args.check {
        OracleCheck::Gradients => gradient_suite(args.seed, args.cases.unwrap_or(20))?,
        OracleCheck::Blend => blend_suite(args.seed, args.cases.unwrap_or(50))?,
        OracleCheck::CrossSection => cross_section_suite(args.seed, args.cases.unwrap_or(100), 1_000_000)?,
        OracleCheck::Visibility => visibility_suite(args.seed, args.cases.unwrap_or(50), 1000, 500)?,
    };
    let verdict = if report.passed { "PASS" } else { "FAIL" };
    Ok((
        format!("{}{}: {} {}\n", report.table, report.name, verdict, report.summary),
        report.passed,
    ))
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    let result = match &cli.command {
        Command::Rcs(a) => rcs(a).map(|s| (s, true)),
        Command::Map(a) => map(a).map(|s| (s, true)),
        Command::Fit(a) => fit_command(a).map(|s| (s, true)),
        Command::Oracle(a) => oracle(a),
        Command::Serve(a) => crate::server::serve(a).map(|_| (String::new(), true)),
    };
    match result {
        Ok((text, passed)) => {
            print!("{text}");
            if passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
