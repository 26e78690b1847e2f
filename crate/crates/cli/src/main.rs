//! Command-line front end for the tiling engine.
//!
//! Exit codes: 0 success, 1 failed verification or count mismatch,
//! 2 invalid arguments, 3 resource guard refusal, 4 internal invariant
//! failure. Payloads carry no timestamps; identical invocations write
//! identical bytes regardless of `--threads`.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use tile11_core::{
    export_csv, export_legacy_rows, export_transforms, full_report, predict_counts, render_svg,
    run_guarded, run_traced_guarded, CheckSet, Cluster, Error, RenderOptions, Result,
    VerifyOptions, Window,
};

/// Default refusal threshold: the iteration-7 tile count.
const DEFAULT_MAX_TILES: u64 = 2_147_679;

#[derive(Parser)]
#[command(
    name = "tile11",
    version,
    about = "Generate and verify Tile(1,1) tilings"
)]
struct Cli {
    /// Worker threads for parallel phases (0 picks the machine default).
    #[arg(long, global = true, default_value_t = 0, value_name = "T")]
    threads: usize,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the substitution and write the tiling in a chosen format.
    Generate(GenerateArgs),
    /// Run the substitution and print a structural verification report.
    Verify(VerifyArgs),
    /// Print predicted tile counts and, unless asked not to, generate
    /// and compare the actual count.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Legacy,
    Transforms,
    Svg,
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of substitution iterations.
    #[arg(short = 'n', long = "iterations", value_name = "N")]
    iterations: u32,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Shortcut for `--format legacy`.
    #[arg(long, conflicts_with = "format")]
    legacy_rows: bool,

    /// Output file; stdout when omitted.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Clip window for SVG output, as `X0,Y0,X1,Y1` plane coordinates.
    #[arg(long, value_name = "X0,Y0,X1,Y1", allow_hyphen_values = true)]
    window: Option<String>,

    /// Mark key points on SVG output.
    #[arg(long)]
    keypoints: bool,

    /// Lift the default tile guard.
    #[arg(long)]
    allow_huge: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckName {
    Congruence,
    Chirality,
    Edges,
    Euler,
    Area,
    Duplicates,
}

#[derive(Args)]
struct VerifyArgs {
    /// Number of substitution iterations.
    #[arg(short = 'n', long = "iterations", value_name = "N")]
    iterations: u32,

    /// Subset of checks to run (default: all).
    #[arg(long, value_enum, value_delimiter = ',', value_name = "LIST")]
    checks: Option<Vec<CheckName>>,

    /// Report file; stdout when omitted.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Lift the default tile guard.
    #[arg(long)]
    allow_huge: bool,
}

#[derive(Args)]
struct StatsArgs {
    /// Number of substitution iterations.
    #[arg(short = 'n', long = "iterations", value_name = "N")]
    iterations: u32,

    /// Print the predicted table only; skip generation.
    #[arg(long)]
    predict_only: bool,

    /// Output file; stdout when omitted.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Lift the default tile guard.
    #[arg(long)]
    allow_huge: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads(cli.threads).and_then(|()| match cli.cmd {
        Cmd::Generate(a) => cmd_generate(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Stats(a) => cmd_stats(a),
    });
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}

fn configure_threads(threads: usize) -> Result<()> {
    if threads == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::GuardExceeded { .. } | Error::RenderGuardExceeded { .. } => 3,
        Error::BadIteration(_)
        | Error::Precondition(_)
        | Error::Malformed(_)
        | Error::InvalidCluster(_)
        | Error::Io(_)
        | Error::Json(_) => 2,
        Error::Step { source, .. } => exit_for(source),
        Error::Overflow(_) | Error::NoKeys | Error::MixedChirality | Error::Internal(_) => 4,
    }
}

fn guard(allow_huge: bool) -> Option<u64> {
    if allow_huge {
        None
    } else {
        Some(DEFAULT_MAX_TILES)
    }
}

/// Runs `f` against a buffered file or stdout and flushes before
/// reporting success.
fn with_output<F>(path: Option<&Path>, f: F) -> Result<()>
where
    F: FnOnce(&mut io::BufWriter<Box<dyn Write>>) -> Result<()>,
{
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = io::BufWriter::new(sink);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn parse_window(s: &str) -> Result<Window> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(Error::Precondition(format!(
            "window must be X0,Y0,X1,Y1, got `{s}`"
        )));
    }
    let mut v = [0.0f64; 4];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| {
            Error::Precondition(format!("window coordinate `{part}` is not a number"))
        })?;
    }
    Window::new(v[0], v[1], v[2], v[3])
}

fn cmd_generate(a: GenerateArgs) -> Result<u8> {
    let limit = guard(a.allow_huge);
    let window = a.window.as_deref().map(parse_window).transpose()?;
    let started = Instant::now();
    let cluster = run_guarded(a.iterations, limit)?;
    eprintln!(
        "generated {} tiles in {:.2}s",
        cluster.tiles().len(),
        started.elapsed().as_secs_f64()
    );
    let format = if a.legacy_rows {
        Format::Legacy
    } else {
        a.format
    };
    let opts = RenderOptions {
        window,
        show_keypoints: a.keypoints,
        max_tiles: limit.unwrap_or(u64::MAX),
        ..RenderOptions::default()
    };
    with_output(a.output.as_deref(), |out| match format {
        Format::Csv => export_csv(&cluster, &opts, out),
        Format::Legacy => export_legacy_rows(&cluster, &opts, out),
        Format::Transforms => export_transforms(&cluster, Some(a.iterations), out),
        Format::Svg => render_svg(&cluster, &opts, out),
    })?;
    Ok(0)
}

fn cmd_verify(a: VerifyArgs) -> Result<u8> {
    let limit = guard(a.allow_huge);
    let started = Instant::now();
    let (cluster, traces) = run_traced_guarded(a.iterations, limit)?;
    let checks = match &a.checks {
        None => CheckSet::default(),
        Some(list) => {
            let mut c = CheckSet {
                congruence: false,
                chirality: false,
                edges: false,
                euler: false,
                area: false,
                duplicates: false,
            };
            for name in list {
                match name {
                    CheckName::Congruence => c.congruence = true,
                    CheckName::Chirality => c.chirality = true,
                    CheckName::Edges => c.edges = true,
                    CheckName::Euler => c.euler = true,
                    CheckName::Area => c.area = true,
                    CheckName::Duplicates => c.duplicates = true,
                }
            }
            c
        }
    };
    let expected = predict_counts(a.iterations)?;
    let opts = VerifyOptions {
        checks,
        ..VerifyOptions::default()
    };
    let report = full_report(&cluster, &expected, a.iterations, &opts)?;
    eprintln!(
        "verified {} tiles in {:.2}s",
        cluster.tiles().len(),
        started.elapsed().as_secs_f64()
    );

    // Rows of the four key anchors after each iteration, seed first.
    let mut history: Vec<[u64; 4]> = vec![[4, 6, 8, 14]];
    history.extend(traces.iter().map(|t| t.new_key_rows));
    let doc = serde_json::json!({
        "iteration": a.iterations,
        "key_row_history": history,
        "report": report,
    });
    let pass = report.pass;
    with_output(a.output.as_deref(), |out| {
        serde_json::to_writer_pretty(&mut *out, &doc)?;
        out.write_all(b"\n")?;
        Ok(())
    })?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_stats(a: StatsArgs) -> Result<u8> {
    let preds = predict_counts(a.iterations)?;
    let mut lines = String::new();
    for (name, counts) in [("nS", &preds.n_s), ("nM", &preds.n_m)] {
        lines.push_str("predicted ");
        lines.push_str(name);
        lines.push(':');
        for v in counts.iter().skip(1) {
            lines.push(' ');
            lines.push_str(&v.to_string());
        }
        lines.push('\n');
    }

    let mut code = 0u8;
    if !a.predict_only {
        let limit = guard(a.allow_huge);
        let started = Instant::now();
        let cluster = run_guarded(a.iterations, limit)?;
        eprintln!(
            "generated {} tiles in {:.2}s",
            cluster.tiles().len(),
            started.elapsed().as_secs_f64()
        );
        let actual = cluster.tiles().len() as u128;
        let predicted = preds.n_s[a.iterations as usize];
        lines.push_str(&format!(
            "iteration {}: {} tiles (predicted {})\n",
            a.iterations, actual, predicted
        ));
        let (x0, y0, x1, y1) = bounding_box(&cluster)?;
        lines.push_str(&format!("bbox: [{x0}, {x1}] x [{y0}, {y1}]\n"));
        if actual != predicted {
            code = 1;
        }
    }
    with_output(a.output.as_deref(), |out| {
        out.write_all(lines.as_bytes())?;
        Ok(())
    })?;
    Ok(code)
}

/// Exact-coordinate bounding box of every placed vertex, in floats.
fn bounding_box(c: &Cluster) -> Result<(f64, f64, f64, f64)> {
    let id = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    (0..c.tiles().len())
        .into_par_iter()
        .try_fold(
            || id,
            |acc, i| -> Result<(f64, f64, f64, f64)> {
                let mut acc = acc;
                for p in c.tile_vertices(i)? {
                    let (x, y) = p.to_xy();
                    acc.0 = acc.0.min(x);
                    acc.1 = acc.1.min(y);
                    acc.2 = acc.2.max(x);
                    acc.3 = acc.3.max(y);
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || id,
            |a, b| -> Result<(f64, f64, f64, f64)> {
                Ok((a.0.min(b.0), a.1.min(b.1), a.2.max(b.2), a.3.max(b.3)))
            },
        )
}
