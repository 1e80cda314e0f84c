use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use roughmap_core::classify::iso_rms_table;
use roughmap_core::io::{
    map_geojson, read_cloud_file, read_profile, write_map_csv, write_ply, write_psd_csv, write_scatter_csv,
    write_truth_csv, write_xyz, CloudFormat, PoseEntry, PoseLog,
};
use roughmap_core::pipeline::{summarize, Analyzer, PatchInput, PipelineConfig};
use roughmap_core::preprocess::{detrend, Frame};
use roughmap_core::roughness::fit_power_law;
use roughmap_core::spectrum::{welch_psd, WelchConfig, Window};
use roughmap_core::synth::{generate_traverse, TraverseScript};

#[derive(Parser)]
#[command(name = "roughmap", version, about = "Terrain roughness maps from point-cloud patches")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate roughness for a sequence of patch clouds.
    Process(ProcessArgs),
    /// Generate a synthetic traverse with ground truth.
    Synth(SynthArgs),
    /// Print the ISO 8608 classes with their band-limited rms.
    Table(TableArgs),
    /// Dump the PSD of one elevation profile and its power-law fit.
    PsdDump(PsdArgs),
}

#[derive(Args)]
struct PatchFlags {
    /// Patch length along the heading, meters.
    #[arg(long)]
    length: Option<f64>,
    /// Patch width, meters.
    #[arg(long)]
    width: Option<f64>,
    /// Grid step, meters.
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Args)]
struct WelchFlags {
    /// Number of Welch segments.
    #[arg(long)]
    segments: Option<usize>,
    /// Fractional segment overlap.
    #[arg(long)]
    overlap: Option<f64>,
    #[arg(long, value_enum)]
    window: Option<WindowArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    Rectangular,
    Hann,
}

#[derive(Clone, Copy, ValueEnum)]
enum PoseMatch {
    /// The i-th pose (in time order) belongs to the i-th patch.
    Index,
    /// Patch i is matched to the pose nearest `i * patch-period`.
    Time,
}

#[derive(Args)]
struct ProcessArgs {
    /// Cloud files (.xyz, .ply) or directories of them; directories are read in name order.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// IMU log with columns t, roll_deg, pitch_deg. Without it clouds are used as level.
    #[arg(long)]
    poses: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "index")]
    pose_match: PoseMatch,
    /// Seconds between patches, for time matching.
    #[arg(long, default_value_t = 0.5)]
    patch_period: f64,
    /// TOML pipeline config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    patch: PatchFlags,
    #[command(flatten)]
    welch: WelchFlags,
    /// Roughness map CSV; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long)]
    geojson: Option<PathBuf>,
    /// Directory for per-patch (w, ln R) scatter CSVs.
    #[arg(long)]
    scatter_dir: Option<PathBuf>,
    /// Run with a single thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Xyz,
    Ply,
}

#[derive(Args)]
struct SynthArgs {
    /// Traverse script (TOML).
    script: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    /// Overrides the script seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "xyz")]
    format: FormatArg,
    /// Seconds between patches, written as pose timestamps.
    #[arg(long, default_value_t = 0.5)]
    patch_period: f64,
}

#[derive(Args)]
struct TableArgs {
    /// Profile length, meters.
    #[arg(long, default_value_t = 0.9)]
    length: f64,
    /// Grid step, meters.
    #[arg(long, default_value_t = 0.008)]
    step: f64,
}

#[derive(Args)]
struct PsdArgs {
    /// One elevation per line; with several columns the last is used.
    profile: PathBuf,
    /// Sample spacing, meters.
    #[arg(long)]
    step: Option<f64>,
    /// TOML pipeline config supplying the step and Welch settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    welch: WelchFlags,
    /// Output CSV; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Process(a) => process(a),
        Command::Synth(a) => synth(a),
        Command::Table(a) => table(a),
        Command::PsdDump(a) => psd_dump(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            PipelineConfig::from_toml(&text).with_context(|| format!("loading {}", p.display()))
        }
        None => Ok(PipelineConfig::default()),
    }
}

fn apply_welch(welch: &mut WelchConfig, flags: &WelchFlags) {
    if let Some(s) = flags.segments {
        welch.segments = s;
    }
    if let Some(o) = flags.overlap {
        welch.overlap = o;
    }
    if let Some(w) = flags.window {
        welch.window = match w {
            WindowArg::Rectangular => Window::Rectangular,
            WindowArg::Hann => Window::Hann,
        };
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

/// Expands directories into their cloud files, sorted by name.
fn collect_clouds(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .with_context(|| format!("listing {}", input.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            found.retain(|p| {
                let ext = p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
                p.is_file() && matches!(ext.as_deref(), Some("xyz" | "ply"))
            });
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    Ok(files)
}

fn pose_for(log: &PoseLog, mode: PoseMatch, index: usize, period: f64) -> Option<PoseEntry> {
    match mode {
        PoseMatch::Index => log.by_index(index).copied(),
        PoseMatch::Time => log.nearest(index as f64 * period).copied(),
    }
}

fn process(args: ProcessArgs) -> Result<()> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(v) = args.patch.length {
        config.patch.length = v;
    }
    if let Some(v) = args.patch.width {
        config.patch.width = v;
    }
    if let Some(v) = args.patch.step {
        config.patch.step = v;
    }
    apply_welch(&mut config.welch, &args.welch);
    config.validate()?;

    let files = collect_clouds(&args.inputs)?;
    if files.is_empty() {
        bail!("no .xyz or .ply clouds found in the given inputs");
    }
    let poses = match &args.poses {
        Some(p) => {
            let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            Some(PoseLog::read(BufReader::new(file)).with_context(|| format!("reading {}", p.display()))?)
        }
        None => {
            warn!("no pose log; tilt compensation skipped");
            None
        }
    };
    if !(args.patch_period > 0.0) {
        bail!("patch period must be positive");
    }

    let mut inputs = Vec::with_capacity(files.len());
    for (index, path) in files.iter().enumerate() {
        let cloud = read_cloud_file(path, Frame::Vehicle).with_context(|| format!("reading {}", path.display()))?;
        let attitude = match &poses {
            Some(log) => match pose_for(log, args.pose_match, index, args.patch_period) {
                Some(e) => Some(e.attitude()?),
                None => {
                    warn!("no pose for patch {index}; used as level");
                    None
                }
            },
            None => None,
        };
        info!("patch {index}: {} ({} points)", path.display(), cloud.len());
        inputs.push(PatchInput { index, cloud, attitude });
    }

    let exec = if args.sequential {
        roughmap_core::par::Execution::Sequential
    } else {
        roughmap_core::par::Execution::default()
    };
    let analyzer = Analyzer::with_execution(config, exec)?;
    let report = analyzer.process(&inputs);

    let mut out = output(args.out.as_deref())?;
    write_map_csv(&report.cells, &mut out)?;
    out.flush()?;
    drop(out);

    if let Some(p) = &args.geojson {
        let json = map_geojson(&report.cells, config.patch.length, config.patch.width);
        fs::write(p, serde_json::to_string_pretty(&json)?).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(dir) = &args.scatter_dir {
        fs::create_dir_all(dir)?;
        for a in &report.analyses {
            let path = dir.join(format!("scatter_{:04}.csv", a.index));
            write_scatter_csv(&a.roughness, BufWriter::new(File::create(&path)?))?;
        }
    }

    eprint!("{}", summarize(&report.cells));
    for entry in &report.log {
        eprintln!("log: {entry}");
    }
    if report.cells.is_empty() {
        bail!("none of the {} patches could be analyzed", inputs.len());
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let text = fs::read_to_string(&args.script).with_context(|| format!("reading {}", args.script.display()))?;
    let mut script = TraverseScript::from_toml(&text).with_context(|| format!("loading {}", args.script.display()))?;
    if let Some(seed) = args.seed {
        script.seed = seed;
    }
    let patches = generate_traverse(&script)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let format = match args.format {
        FormatArg::Xyz => CloudFormat::Xyz,
        FormatArg::Ply => CloudFormat::Ply,
    };
    for p in &patches {
        let path = args.out.join(format!("patch_{:04}.{}", p.index, format.extension()));
        let out = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        match format {
            CloudFormat::Xyz => write_xyz(&p.cloud, out)?,
            CloudFormat::Ply => write_ply(&p.cloud, out)?,
        }
    }
    let poses = PoseLog::new(
        patches
            .iter()
            .map(|p| PoseEntry {
                t: p.index as f64 * args.patch_period,
                roll_deg: p.attitude.roll().to_degrees(),
                pitch_deg: p.attitude.pitch().to_degrees(),
            })
            .collect(),
    );
    poses.write(BufWriter::new(File::create(args.out.join("poses.csv"))?))?;
    write_truth_csv(&patches, BufWriter::new(File::create(args.out.join("truth.csv"))?))?;
    eprintln!(
        "wrote {} patches in {} segment(s) to {}",
        patches.len(),
        script.segments.len(),
        args.out.display()
    );
    Ok(())
}

fn table(args: TableArgs) -> Result<()> {
    let rows = iso_rms_table(args.length, args.step)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "class,phi0,rms_mm")?;
    for r in rows {
        writeln!(out, "{},{:e},{:.4}", r.class, r.phi0, r.rms * 1e3)?;
    }
    Ok(())
}

fn psd_dump(args: PsdArgs) -> Result<()> {
    let config = load_config(args.config.as_deref())?;
    let mut welch = config.welch;
    apply_welch(&mut welch, &args.welch);
    let step = args.step.unwrap_or(config.patch.step);
    let file = File::open(&args.profile).with_context(|| format!("opening {}", args.profile.display()))?;
    let profile = read_profile(BufReader::new(file)).with_context(|| format!("reading {}", args.profile.display()))?;
    let z = detrend(&profile, step)?;
    let spectrum = welch_psd(&z, step, &welch)?;
    let fit = fit_power_law(&spectrum).context("fitting the power law")?;
    let mut out = output(args.out.as_deref())?;
    write_psd_csv(&spectrum, Some(&fit), &mut out)?;
    out.flush()?;
    Ok(())
}
