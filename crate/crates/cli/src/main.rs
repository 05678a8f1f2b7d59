//! `aoigram` command-line front-end.

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use aoigram_core::detect::{debug_image, detect_with_trace, tree_from_rects, DetectionParams};
use aoigram_core::export::to_canonical_json;
use aoigram_core::gaze::{parse_gaze_csv, Stimulus};
use aoigram_core::layout::{LayoutParams, TransitionGraph};
use aoigram_core::mining::AoiRole;
use aoigram_core::pipeline::{
    compute_layout, layout_response_json, mine, similarity_json, table_from_json, MiningParams,
    Selection,
};
use aoigram_core::svg::{render_svg, SvgScene};
use aoigram_core::{AoiTree, Error as CoreError};
use aoigram_service::api::{DEFAULT_CELL_SIZE, DEFAULT_COLORS};

#[derive(Parser)]
#[command(
    name = "aoigram",
    version,
    about = "AOI detection, scan-path pattern mining and transition graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect rectangular AOIs in a stimulus image and write the AOI tree as JSON.
    Detect(DetectArgs),
    /// Mine N-gram patterns from gaze CSV over an AOI tree; JSON on stdout.
    Mine(MineArgs),
    /// Similarity matrix (or a two-participant diff) of a mined table.
    Similarity(SimilarityArgs),
    /// Lay out selected patterns as a transition graph and write an SVG.
    Layout(LayoutArgs),
    /// Run the HTTP analysis service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct DetectArgs {
    /// Stimulus image (PNG or JPEG).
    image: PathBuf,
    /// Mosaic cell size in pixels.
    #[arg(long, default_value_t = DEFAULT_CELL_SIZE)]
    cell_size: u32,
    /// Number of quantized colors.
    #[arg(long, default_value_t = DEFAULT_COLORS)]
    colors: u32,
    /// Output path; stdout when omitted.
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
    /// Also write a PNG showing the quantized grid, candidates (red) and final rectangles (green).
    #[arg(long)]
    debug_png: Option<PathBuf>,
}

#[derive(Args)]
struct MiningFlags {
    /// Hierarchy level; defaults to the finest level of the tree.
    #[arg(long)]
    level: Option<usize>,
    /// Pattern length.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Minimum dwell in samples; shorter runs are dropped.
    #[arg(long, default_value_t = aoigram_core::encoding::DEFAULT_TAU)]
    tau: u32,
}

#[derive(Args)]
struct MineArgs {
    /// Gaze CSV with header participant,t,x,y.
    gaze: PathBuf,
    /// AOI tree JSON.
    aois: PathBuf,
    #[command(flatten)]
    mining: MiningFlags,
    /// Stimulus image; gaze points are clamped to its bounds.
    #[arg(long)]
    image: Option<PathBuf>,
    /// Output path; stdout when omitted.
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimilarityArgs {
    /// Table JSON written by `mine`.
    table: PathBuf,
    /// Print the diff report for two participants instead.
    #[arg(long, num_args = 2, value_names = ["P", "Q"])]
    diff: Option<Vec<String>>,
}

#[derive(Args)]
struct LayoutArgs {
    /// Table JSON written by `mine`.
    table: PathBuf,
    /// AOI tree JSON.
    aois: PathBuf,
    /// Comma-separated pattern ids.
    #[arg(long, value_delimiter = ',', conflicts_with = "aoi")]
    patterns: Option<Vec<String>>,
    /// Select every pattern touching this AOI code.
    #[arg(long)]
    aoi: Option<char>,
    /// How the AOI must occur in a pattern: starts, passes or arrives.
    #[arg(long, default_value = "passes", requires = "aoi")]
    mode: AoiRole,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = LayoutParams::default().iterations)]
    iterations: usize,
    /// SVG output path.
    #[arg(short = 'o', long)]
    output: PathBuf,
    /// Stimulus image embedded under the overlay.
    #[arg(long)]
    image: Option<PathBuf>,
    /// Also write the layout JSON.
    #[arg(long)]
    layout_json: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "DATA_DIR", default_value = "data")]
    data_dir: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
}

/// Bad invocation; exits with 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn read_input(path: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_tree(path: &Path) -> anyhow::Result<AoiTree> {
    let text = String::from_utf8(read_input(path)?)
        .with_context(|| format!("{}: not UTF-8", path.display()))?;
    let tree = AoiTree::from_json(&text).with_context(|| format!("{}", path.display()))?;
    let violations = tree.validate();
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(anyhow!(
            "{}: invalid AOI tree: {}",
            path.display(),
            list.join(", ")
        ));
    }
    Ok(tree)
}

fn load_stimulus(path: &Path) -> anyhow::Result<Stimulus> {
    Stimulus::decode(&read_input(path)?).with_context(|| format!("{}", path.display()))
}

fn write_output(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.write_all(b"\n")?;
            Ok(())
        }
    }
}

fn cmd_detect(args: DetectArgs) -> anyhow::Result<()> {
    let stimulus = load_stimulus(&args.image)?;
    let params =
        DetectionParams::new(args.cell_size, args.colors).map_err(|e| usage(e.to_string()))?;
    let trace = detect_with_trace(&stimulus, params)?;
    let tree = tree_from_rects(&trace.rects);
    write_output(args.output.as_deref(), &to_canonical_json(&tree))?;
    if let Some(path) = args.debug_png {
        let png = Stimulus::from_image(debug_image(&trace, stimulus.width, stimulus.height))?
            .encode_png();
        fs::write(&path, png).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_mine(args: MineArgs) -> anyhow::Result<()> {
    let csv = read_input(&args.gaze)?;
    let tree = load_tree(&args.aois)?;
    let mut paths = parse_gaze_csv(&csv).with_context(|| format!("{}", args.gaze.display()))?;
    if let Some(image) = &args.image {
        let stimulus = load_stimulus(image)?;
        for p in &mut paths {
            p.clamp_to(stimulus.width, stimulus.height);
        }
    }
    let params = MiningParams {
        level: args.mining.level.unwrap_or_else(|| tree.depth()),
        n: args.mining.n,
        tau: args.mining.tau,
    };
    let result = mine(&paths, &tree, params)?;
    let json = aoigram_core::pipeline::mining_json(&result, &tree);
    write_output(args.output.as_deref(), &to_canonical_json(&json))
}

fn cmd_similarity(args: SimilarityArgs) -> anyhow::Result<()> {
    let value: serde_json::Value = serde_json::from_slice(&read_input(&args.table)?)
        .with_context(|| format!("{}", args.table.display()))?;
    let table = table_from_json(&value)?;
    let json = match args.diff.as_deref() {
        Some([p, q]) => serde_json::to_value(table.diff(p, q)?)?,
        _ => similarity_json(&table.similarity_matrix()?),
    };
    write_output(None, &to_canonical_json(&json))
}

fn cmd_layout(args: LayoutArgs) -> anyhow::Result<()> {
    let value: serde_json::Value = serde_json::from_slice(&read_input(&args.table)?)
        .with_context(|| format!("{}", args.table.display()))?;
    let tree = load_tree(&args.aois)?;
    let image = args.image.as_deref().map(read_input).transpose()?;
    let stimulus = image.as_deref().map(Stimulus::decode).transpose()?;
    let table = table_from_json(&value)?;
    let selection = match (args.patterns, args.aoi) {
        (Some(p), _) if p.iter().any(|s| !s.is_empty()) => {
            Selection::Patterns(p.into_iter().filter(|s| !s.is_empty()).collect())
        }
        (None, Some(ch)) => Selection::Aoi {
            ch,
            role: args.mode,
        },
        _ => return Err(usage("empty selection: pass --patterns or --aoi")),
    };
    let params = LayoutParams {
        seed: args.seed,
        iterations: args.iterations,
        ..LayoutParams::default()
    };
    let graph: TransitionGraph =
        compute_layout(&tree, &table, &selection, &params).map_err(|e| match e {
            CoreError::EmptySelection => usage("selection matches no pattern"),
            other => other.into(),
        })?;
    let (width, height) = match &stimulus {
        Some(s) => (s.width, s.height),
        None => {
            let b = tree
                .root()
                .bounds()
                .unwrap_or(aoigram_core::Rect::new(0, 0, 1, 1));
            (b.right().max(1), b.bottom().max(1))
        }
    };
    let png = stimulus.as_ref().map(Stimulus::encode_png);
    let svg = render_svg(&SvgScene {
        width,
        height,
        image_png: png.as_deref(),
        tree: &tree,
        level: table.level,
        graph: Some(&graph),
    })?;
    fs::write(&args.output, svg).with_context(|| format!("writing {}", args.output.display()))?;
    if let Some(path) = args.layout_json {
        let json = layout_response_json(&tree, table.level, &graph)?;
        fs::write(&path, to_canonical_json(&json))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let runtime = tokio::runtime::Runtime::new()?;
    let addr = SocketAddr::new(args.host, args.port);
    runtime.block_on(aoigram_service::serve(addr, args.data_dir, async {
        let _ = tokio::signal::ctrl_c().await;
    }))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Detect(a) => cmd_detect(a),
        Command::Mine(a) => cmd_mine(a),
        Command::Similarity(a) => cmd_similarity(a),
        Command::Layout(a) => cmd_layout(a),
        Command::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aoigram: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
