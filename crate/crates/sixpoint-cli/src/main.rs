use clap::error::ErrorKind;
use clap::Parser;
use sixpoint::batch::{run_batch, DEFAULT_CATEGORY};
use sixpoint::eval::{EvaluationReport, SequenceOutcome};
use sixpoint::pipeline::{segment, FrameChoice, SegmentConfig};
use sixpoint::synth::{generate_scene, project_scene, SceneSpec};
use sixpoint::traj::{format_trajectories, load_trajectories, SequenceRecord};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_SEGMENT: u8 = 3;

/// Sparse motion segmentation over point-trajectory files.
#[derive(Parser, Debug)]
#[command(name = "sixpoint", version)]
struct Cli {
    /// Segment a single trajectory file.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["batch_dir", "emit_synthetic"])]
    input: Option<PathBuf>,

    /// Segment every sequence file in a directory and aggregate a report.
    #[arg(long, value_name = "DIR", conflicts_with = "emit_synthetic")]
    batch_dir: Option<PathBuf>,

    /// Print a synthetic scene as a trajectory file. Comma-separated
    /// key=value pairs among: bodies, points, frames, sigma, seed, rot,
    /// trans. Example: --emit-synthetic bodies=3,sigma=0.5,seed=7
    #[arg(long, value_name = "KEYVALS")]
    emit_synthetic: Option<String>,

    /// Target motion count; defaults to the file header's value.
    #[arg(long, value_name = "K")]
    motions: Option<usize>,

    /// Seed cluster count M.
    #[arg(long, value_name = "M", default_value_t = 20)]
    seeds: usize,

    /// Seeding frame: "first", "last", or a zero-based index.
    #[arg(long, default_value = "last", value_parser = parse_frame)]
    frame: FrameChoice,

    /// Similarity-graph threshold as a fraction of the largest entry.
    #[arg(long, default_value_t = 0.2)]
    tau_fraction: f64,

    /// Mixture bundles drawn per cluster pair during refinement.
    #[arg(long, value_name = "K", default_value_t = 75)]
    mixture_samples: usize,

    /// Seed for every random choice in the pipeline.
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,

    /// Write a per-sequence CSV here; batch mode adds `_hist`/`_cdf`
    /// companion files next to it.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

fn parse_frame(value: &str) -> Result<FrameChoice, String> {
    match value {
        "first" => Ok(FrameChoice::First),
        "last" => Ok(FrameChoice::Last),
        other => other
            .parse::<usize>()
            .map(FrameChoice::Index)
            .map_err(|_| format!("expected \"first\", \"last\", or an index, got {other:?}")),
    }
}

fn config_from(cli: &Cli, target_motions: usize) -> SegmentConfig {
    SegmentConfig {
        seeds: cli.seeds,
        frame: cli.frame,
        tau_fraction: cli.tau_fraction,
        mixture_samples: cli.mixture_samples,
        target_motions,
        rng_seed: cli.rng_seed,
        ..SegmentConfig::default()
    }
}

fn parse_scene_keyvals(text: &str) -> Result<SceneSpec, String> {
    let mut spec = SceneSpec::default();
    for pair in text.split(',').filter(|p| !p.is_empty()) {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got {pair:?}"))?;
        fn parsed<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("invalid value for {key}: {value:?}"))
        }
        match key {
            "bodies" => spec.bodies = parsed(key, value)?,
            "points" => spec.points_per_body = parsed(key, value)?,
            "frames" => spec.frames = parsed(key, value)?,
            "sigma" => spec.noise_sigma = parsed(key, value)?,
            "seed" => spec.seed = parsed(key, value)?,
            "rot" => spec.rotation_step = parsed(key, value)?,
            "trans" => spec.translation_step = parsed(key, value)?,
            other => return Err(format!("unknown scene key {other:?}")),
        }
    }
    Ok(spec)
}

fn companion_path(report: &Path, suffix: &str) -> PathBuf {
    let stem = report
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    report.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn emit_synthetic(keyvals: &str) -> Result<(), u8> {
    let spec = parse_scene_keyvals(keyvals).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })?;
    let scene = generate_scene(&spec).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_SEGMENT
    })?;
    let traj = project_scene(&scene).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_SEGMENT
    })?;
    let record = SequenceRecord {
        name: "synthetic".to_string(),
        traj,
        target_motions: spec.bodies,
    };
    print!("{}", format_trajectories(&record));
    Ok(())
}

fn run_single(cli: &Cli, path: &Path) -> Result<(), u8> {
    let record = load_trajectories(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_DATA
    })?;
    let motions = cli.motions.unwrap_or(record.target_motions);
    let config = config_from(cli, motions);
    let start = Instant::now();
    let result = segment(&record.traj, &config).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_SEGMENT
    })?;
    let runtime_ms = start.elapsed().as_millis() as u64;

    println!("sequence: {}", record.name);
    println!(
        "points: {}  frames: {}  motions: {}",
        record.traj.num_points(),
        record.traj.num_frames(),
        motions
    );
    println!(
        "effective seeds: {}  tau fraction used: {}  rng seed: {}  runtime: {} ms",
        result.effective_seeds, result.tau_fraction_used, result.rng_seed, runtime_ms
    );
    let labels: Vec<String> = result.labels.iter().map(usize::to_string).collect();
    println!("labels: {}", labels.join(" "));

    let error_pct = match &record.traj.labels {
        Some(truth) => {
            let e =
                sixpoint::eval::misclassification_error(&result.labels, truth).map_err(|e| {
                    eprintln!("error: {e}");
                    EXIT_DATA
                })?;
            println!("error: {e:.2}%");
            Some(e)
        }
        None => None,
    };

    if let Some(report_path) = &cli.report {
        let row = SequenceOutcome {
            sequence: record.name.clone(),
            category: DEFAULT_CATEGORY.to_string(),
            motions,
            error_pct,
            runtime_ms,
            seed: cli.rng_seed,
            note: None,
        };
        EvaluationReport::from_rows(vec![row])
            .save_csv(report_path)
            .map_err(|e| {
                eprintln!("error: cannot write {}: {e}", report_path.display());
                EXIT_DATA
            })?;
    }
    Ok(())
}

fn run_directory(cli: &Cli, dir: &Path) -> Result<(), u8> {
    let config = config_from(cli, cli.motions.unwrap_or_default().max(2));
    let report = run_batch(dir, &config, cli.motions).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_DATA
    })?;
    if report.rows.is_empty() {
        eprintln!("error: no sequence files in {}", dir.display());
        return Err(EXIT_DATA);
    }

    let failures = report.rows.iter().filter(|r| r.error_pct.is_none()).count();
    println!("sequences: {}  failures: {}", report.rows.len(), failures);
    if let Some(overall) = &report.overall {
        println!(
            "overall: mean {:.2}%  median {:.2}%  over {} scored sequences",
            overall.mean, overall.median, overall.count
        );
    }
    for (category, stats) in &report.per_category {
        println!(
            "{category}: mean {:.2}%  median {:.2}%  over {} sequences",
            stats.mean, stats.median, stats.count
        );
    }
    for row in report.rows.iter().filter(|r| r.error_pct.is_none()) {
        println!(
            "failed: {} ({})",
            row.sequence,
            row.note.as_deref().unwrap_or("unknown")
        );
    }

    if let Some(report_path) = &cli.report {
        let write = |path: &Path, f: &dyn Fn(std::fs::File) -> std::io::Result<()>| {
            std::fs::File::create(path)
                .and_then(|file| f(file))
                .map_err(|e| {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    EXIT_DATA
                })
        };
        write(report_path, &|file| report.write_csv(file))?;
        write(&companion_path(report_path, "hist"), &|file| {
            report.write_histogram(file)
        })?;
        write(&companion_path(report_path, "cdf"), &|file| {
            report.write_cdf(file)
        })?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), u8> {
    match (&cli.input, &cli.batch_dir, &cli.emit_synthetic) {
        (Some(path), None, None) => run_single(cli, path),
        (None, Some(dir), None) => run_directory(cli, dir),
        (None, None, Some(keyvals)) => emit_synthetic(keyvals),
        _ => {
            eprintln!("error: pass exactly one of --input, --batch-dir, --emit-synthetic");
            Err(EXIT_USAGE)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}
