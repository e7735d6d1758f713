//! Command-line interface.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::{info, LevelFilter};

use crate::config::GeneratorConfig;
use crate::dataset::{write_dataset, Split};
use crate::error::{exit_code, Error, Result};
use crate::eval::{load_eval_set, manifest_image_size, map_report, parity_fixtures, EvalParams};
use crate::preview::write_previews;
use crate::scene::NUM_KEYPOINTS;

#[derive(Debug, Parser)]
#[command(name = "windkp", version, about = "Synthetic wind-turbine keypoint datasets and pose evaluation")]
pub struct Cli {
    /// Only warnings and errors on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Log records as JSON lines.
    #[arg(long, global = true)]
    pub json_logs: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an annotated dataset.
    Generate(GenerateArgs),
    /// Score predictions against ground-truth labels.
    Evaluate(EvaluateArgs),
    /// Draw label overlays for a few dataset images.
    Preview(PreviewArgs),
    /// Print the default configuration as JSON.
    DefaultConfig(DefaultConfigArgs),
    /// Write tip-permutation and OKS reference cases as JSON.
    ExportFixtures(ExportArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// JSON configuration; defaults apply to missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub count: Option<u64>,
    /// Output directory (overrides `output_dir` from the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Background image directory (overrides `background_dir`).
    #[arg(long, env = "WINDKP_BACKGROUNDS")]
    pub backgrounds: Option<PathBuf>,
    /// Worker threads; 0 uses every logical core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Ground-truth label directory, searched recursively.
    #[arg(long)]
    pub gt: PathBuf,
    /// Prediction directory with one file per image id.
    #[arg(long)]
    pub pred: PathBuf,
    /// Where to write the JSON report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Image size as WIDTHxHEIGHT; read from a nearby manifest.json otherwise.
    #[arg(long, value_parser = parse_size)]
    pub image_size: Option<(u32, u32)>,
    /// OKS constant for every keypoint, or seven comma-separated values.
    #[arg(long, value_parser = parse_constants)]
    pub oks_k: Option<[f64; NUM_KEYPOINTS]>,
}

#[derive(Debug, Args)]
pub struct PreviewArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DefaultConfigArgs {
    /// Write to a file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long)]
    pub out: PathBuf,
}

const DEFAULT_IMAGE_SIZE: (u32, u32) = (1280, 720);

fn parse_size(s: &str) -> std::result::Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
    let w: u32 = w.trim().parse().map_err(|_| format!("bad width in {s:?}"))?;
    let h: u32 = h.trim().parse().map_err(|_| format!("bad height in {s:?}"))?;
    if w == 0 || h == 0 {
        return Err("image size must be positive".into());
    }
    Ok((w, h))
}

fn parse_constants(s: &str) -> std::result::Result<[f64; NUM_KEYPOINTS], String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad number {v:?}")))
        .collect::<std::result::Result<_, _>>()?;
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err("OKS constants must be positive".into());
    }
    match values.len() {
        1 => Ok([values[0]; NUM_KEYPOINTS]),
        NUM_KEYPOINTS => Ok(std::array::from_fn(|i| values[i])),
        n => Err(format!("expected 1 or {NUM_KEYPOINTS} values, got {n}")),
    }
}

fn init_logging(quiet: bool, json: bool) {
    let level = if quiet { LevelFilter::Warn } else { LevelFilter::Info };
    let mut builder = env_logger::Builder::new();
    builder.filter_level(level).parse_env("WINDKP_LOG");
    if json {
        builder.format(|buf, record| {
            let line = serde_json::json!({
                "level": record.level().as_str(),
                "target": record.target(),
                "message": record.args().to_string(),
            });
            writeln!(buf, "{line}")
        });
    }
    let _ = builder.try_init();
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn generate(args: GenerateArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => GeneratorConfig::load(path)?,
        None => GeneratorConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(count) = args.count {
        cfg.count = count;
    }
    if let Some(dir) = args.backgrounds {
        cfg.background_dir = Some(dir);
    }
    let out = args
        .out
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set output_dir".into()))?;
    cfg.validate()?;
    info!(
        "generating {} images at {}x{} with seed {} into {}",
        cfg.count,
        cfg.image.width,
        cfg.image.height,
        cfg.seed,
        out.display()
    );
    let start = Instant::now();
    let manifest = write_dataset(&cfg, &out, args.workers)?;
    let secs = start.elapsed().as_secs_f64();
    let rate = if secs > 0.0 { manifest.count as f64 / secs } else { 0.0 };
    println!(
        "generated {} images ({} train, {} val) in {secs:.2} s, {rate:.1} images/s -> {}",
        manifest.count,
        manifest.counts.get(&Split::Train).copied().unwrap_or(0),
        manifest.counts.get(&Split::Val).copied().unwrap_or(0),
        out.display()
    );
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let (w, h) = match args.image_size {
        Some(size) => size,
        None => manifest_image_size(&args.gt)?.unwrap_or(DEFAULT_IMAGE_SIZE),
    };
    let set = load_eval_set(&args.gt, &args.pred, w, h)?;
    let mut params = EvalParams::default();
    if let Some(k) = args.oks_k {
        params.keypoint_constants = k;
    }
    let report = map_report(&set, &params);
    print!("{}", report.to_table());
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write_file(path, json.as_bytes())?;
        info!("report written to {}", path.display());
    }
    Ok(())
}

fn preview(args: PreviewArgs) -> Result<()> {
    let written = write_previews(&args.dataset, args.n, &args.out)?;
    info!("wrote {} previews to {}", written.len(), args.out.display());
    Ok(())
}

fn default_config(args: DefaultConfigArgs) -> Result<()> {
    let json = GeneratorConfig::default().to_json() + "\n";
    match args.out {
        Some(path) => write_file(&path, json.as_bytes()),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn export_fixtures(args: ExportArgs) -> Result<()> {
    let fixtures = parity_fixtures(args.seed, args.count);
    let json = serde_json::to_string_pretty(&fixtures).expect("fixtures serialize");
    write_file(&args.out, json.as_bytes())?;
    info!("wrote {} cases to {}", args.count, args.out.display());
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    init_logging(cli.quiet, cli.json_logs);
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Preview(a) => preview(a),
        Command::DefaultConfig(a) => default_config(a),
        Command::ExportFixtures(a) => export_fixtures(a),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit_code::USAGE } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn size_and_constant_parsing() {
        assert_eq!(parse_size("1280x720"), Ok((1280, 720)));
        assert!(parse_size("1280").is_err());
        assert!(parse_size("0x5").is_err());
        assert_eq!(parse_constants("0.2").unwrap(), [0.2; NUM_KEYPOINTS]);
        assert!(parse_constants("0.1,0.2").is_err());
        assert!(parse_constants("-1").is_err());
    }

    #[test]
    fn usage_errors_use_their_own_code() {
        assert_eq!(main_with_args(["windkp", "frobnicate"]), exit_code::USAGE);
    }
}
