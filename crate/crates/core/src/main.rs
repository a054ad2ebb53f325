use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use lineart::bundle::{self, Bundle, BundleInputs};
use lineart::config::{PipelineConfig, CONFIG_ENV};
use lineart::curation::{self, CurationRule, Scoring};
use lineart::metrics::{evaluate_pair, write_csv, MetricReport};
use lineart::{BinaryMask, Error, GrayImage, RgbImage};

const EXIT_VALIDATION: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "lineart", version, about = "Conditioning bundles for line-drawing rendering")]
struct Cli {
    /// JSON config; unspecified keys take defaults.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fuse a drawing's line layers into condition.png / condition.json.
    Fuse {
        #[arg(long)]
        drawing: PathBuf,
        /// First-pass generation; enables soft edges and completes the condition.
        #[arg(long)]
        initial: Option<PathBuf>,
    },
    /// Illumination statistics and noise schedule of an appearance reference.
    Shape {
        #[arg(long)]
        appearance: PathBuf,
    },
    /// Patch-reassembled texture reference.
    Synth {
        #[arg(long)]
        appearance: PathBuf,
        /// Foreground mask PNG; omitted means border-color background removal.
        #[arg(long)]
        mask: Option<PathBuf>,
    },
    /// Score, filter and preprocess a set of drawings.
    Curate(CurateArgs),
    /// Score generated images against conditions and appearance references.
    Eval(EvalArgs),
    /// Run fuse, shape and synth into one validated bundle.
    Bundle {
        #[arg(long)]
        drawing: PathBuf,
        #[arg(long)]
        appearance: PathBuf,
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long)]
        initial: Option<PathBuf>,
    },
    /// Validate a bundle directory.
    Validate { bundle: PathBuf },
}

#[derive(Args)]
struct CurateArgs {
    /// Drawing files or directories of PNGs.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Preset name (bronze, differsketching, imagenet-sketch, deeppatent) or `lo,hi`.
    #[arg(long)]
    rule: String,
    /// CSV with `id,score` rows.
    #[arg(long, conflicts_with = "proxy", required_unless_present = "proxy")]
    scores: Option<PathBuf>,
    /// Score with the built-in classical proxy instead of a scores file.
    #[arg(long)]
    proxy: bool,
    /// Side of the square output images; overrides the config.
    #[arg(long)]
    target_size: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    /// CSV with `id,generated,condition,appearance`; paths relative to the file.
    #[arg(long, conflicts_with_all = ["generated", "condition", "appearance"])]
    pairs: Option<PathBuf>,
    /// Generated RGB image of a single pair.
    #[arg(long, requires_all = ["condition", "appearance"])]
    generated: Option<PathBuf>,
    /// Condition image the generation was driven by.
    #[arg(long)]
    condition: Option<PathBuf>,
    /// Appearance reference photo.
    #[arg(long)]
    appearance: Option<PathBuf>,
    /// Report name for a single pair.
    #[arg(long, default_value = "pair")]
    id: String,
}

fn require_out(out: &Option<PathBuf>) -> Result<&Path, Error> {
    out.as_deref()
        .ok_or_else(|| Error::Parameter("--out is required for this command".into()))
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_pretty<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, Error> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut pngs: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| Error::Io {
                    path: p.clone(),
                    source: e,
                })?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
                .collect();
            pngs.sort();
            out.extend(pngs);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn run_curate(args: &CurateArgs, mut cfg: PipelineConfig, out: &Path) -> Result<(), Error> {
    let rule = CurationRule::parse(&args.rule)?;
    if let Some(size) = args.target_size {
        cfg.curation.target_size = size;
    }
    cfg.validate()?;
    let scoring = match &args.scores {
        Some(path) => Scoring::External(curation::load_scores(path)?),
        None => {
            warn!("using the built-in complexity proxy; it is not equivalent to learned scores");
            Scoring::Proxy
        }
    };
    fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    let inputs = expand_inputs(&args.inputs)?;
    let entries = curation::curate(&inputs, scoring, &rule, &cfg.curation, out)?;
    let summary = curation::write_manifest(&entries, &out.join("manifest.jsonl"), &rule)?;
    write_pretty(&out.join("summary.json"), &summary)?;
    info!("{:?}", summary.counts);
    Ok(())
}

struct EvalPair {
    id: String,
    generated: PathBuf,
    condition: PathBuf,
    appearance: PathBuf,
}

fn read_pairs(path: &Path) -> Result<Vec<EvalPair>, Error> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rdr = csv::Reader::from_path(path)?;
    let mut pairs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 4 {
            return Err(Error::Parameter(format!(
                "{}: row {} needs id,generated,condition,appearance",
                path.display(),
                i + 2
            )));
        }
        pairs.push(EvalPair {
            id: rec[0].to_string(),
            generated: base.join(&rec[1]),
            condition: base.join(&rec[2]),
            appearance: base.join(&rec[3]),
        });
    }
    Ok(pairs)
}

fn run_eval(args: &EvalArgs, cfg: &PipelineConfig, out: &Path) -> Result<(), Error> {
    let pairs = match (&args.pairs, &args.generated, &args.condition, &args.appearance) {
        (Some(p), ..) => read_pairs(p)?,
        (None, Some(g), Some(c), Some(a)) => vec![EvalPair {
            id: args.id.clone(),
            generated: g.clone(),
            condition: c.clone(),
            appearance: a.clone(),
        }],
        _ => {
            return Err(Error::Parameter(
                "eval needs --pairs or all of --generated, --condition, --appearance".into(),
            ))
        }
    };
    fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    let mut reports: Vec<MetricReport> = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        let generated = RgbImage::load(&pair.generated)?;
        let (w, h) = generated.dims();
        let condition = GrayImage::load(&pair.condition)?.resized(w, h)?;
        let appearance = RgbImage::load(&pair.appearance)?.resized(w, h)?;
        let report = evaluate_pair(&pair.id, &generated, &condition, &appearance, &cfg.metrics)?;
        write_pretty(&out.join(format!("{}.json", pair.id)), &report)?;
        reports.push(report);
    }
    write_csv(&reports, &out.join("metrics.csv"))
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = load_config(cli)?;
    info!("effective config: {}", serde_json::to_string(&cfg)?);
    match &cli.command {
        Command::Fuse { drawing, initial } => {
            let out = require_out(&cli.out)?;
            let drawing = GrayImage::load(drawing)?;
            let initial = initial.as_ref().map(GrayImage::load).transpose()?;
            let sidecar = bundle::write_condition(&drawing, initial.as_ref(), &cfg, out)?;
            info!("condition state {:?}", sidecar.state);
        }
        Command::Shape { appearance } => {
            let out = require_out(&cli.out)?;
            let record = bundle::write_illumination(&RgbImage::load(appearance)?, &cfg, out)?;
            info!("l_mean {:.4} sigma2 {:.6}", record.l_mean, record.sigma2);
        }
        Command::Synth { appearance, mask } => {
            let out = require_out(&cli.out)?;
            let mask = mask
                .as_ref()
                .map(|p| GrayImage::load(p).map(|g| BinaryMask::threshold(&g, 0.5)))
                .transpose()?;
            bundle::write_texture(&RgbImage::load(appearance)?, mask.as_ref(), &cfg, out)?;
        }
        Command::Curate(args) => run_curate(args, cfg, require_out(&cli.out)?)?,
        Command::Eval(args) => run_eval(args, &cfg, require_out(&cli.out)?)?,
        Command::Bundle {
            drawing,
            appearance,
            mask,
            initial,
        } => {
            let inputs = BundleInputs {
                drawing: drawing.clone(),
                appearance: appearance.clone(),
                mask: mask.clone(),
                initial: initial.clone(),
            };
            let b = bundle::build_bundle(&inputs, &cfg, require_out(&cli.out)?)?;
            println!("{}: {:?}", b.root.display(), b.state());
        }
        Command::Validate { bundle } => {
            let b = Bundle::open(bundle)?;
            println!("{}: valid, {:?}", bundle.display(), b.state());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Validation { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
