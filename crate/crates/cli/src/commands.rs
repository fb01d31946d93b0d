use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use wmark::attacks::{AttackKind, AttackSpec};
use wmark::eval::{self, fmt_g6, EvalRecord, Timing};
use wmark::quality::{mse, ssim};
use wmark::{
    embed_image_adaptive, embed_original_matched, load_image, save_image, AcceptRule, Algorithm, EmbedConfig,
    PadPolicy,
};

use crate::sidecar::Sidecar;

#[derive(Debug, Parser)]
#[command(name = "wmark", version, about = "SSIM-gated block-adaptive image watermarking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Watermark an image and write its detection sidecar.
    Embed(EmbedArgs),
    /// Score the sidecar's sequence against random candidates.
    Detect(DetectArgs),
    /// Apply noise, low-pass filtering or JPEG-style quantization.
    Attack(AttackArgs),
    /// Print MSE and SSIM between two images.
    Metric(MetricArgs),
    /// Run an experiment suite and write its CSV report.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AlgoArg {
    Lsb,
    Dct,
    Dwt,
    Cdma,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Lsb => Algorithm::Lsb,
            AlgoArg::Dct => Algorithm::Dct,
            AlgoArg::Dwt => Algorithm::Dwt,
            AlgoArg::Cdma => Algorithm::Cdma,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Adaptive,
    Original,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum RuleArg {
    LastAbove,
    FirstBelow,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long, value_enum)]
    pub algo: AlgoArg,
    #[arg(long, value_enum, default_value = "adaptive")]
    pub mode: ModeArg,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub key: u64,
    #[arg(long, default_value_t = 0.8)]
    pub thr2: f64,
    #[arg(long, default_value_t = 32)]
    pub block: usize,
    #[arg(long)]
    pub sidecar: PathBuf,
    #[arg(long, value_enum, default_value = "last_above")]
    pub accept_rule: RuleArg,
    /// Pad partial edge blocks by replication instead of rejecting the image.
    #[arg(long)]
    pub pad_edge: bool,
    /// Report elapsed_ms as 0.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub sidecar: PathBuf,
    #[arg(long, default_value_t = 300)]
    pub trials: usize,
    /// Seed of the random candidate family.
    #[arg(long, default_value_t = 1)]
    pub trial_seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AttackArg {
    Gauss,
    Lpf,
    Jpeg,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long = "type", value_enum)]
    pub kind: AttackArg,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = AttackSpec::DEFAULT_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = AttackSpec::DEFAULT_KERNEL)]
    pub kernel: usize,
    #[arg(long, default_value_t = AttackSpec::DEFAULT_QUALITY)]
    pub quality: u8,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Table1,
    Table2,
    Fig3,
    Fig4,
    Dataset,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Test image for every suite except `dataset`.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Report elapsed_ms as 0 so reports are byte-reproducible.
    #[arg(long)]
    pub no_timing: bool,
}

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    NotDetected,
}

fn image_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn record_line(r: &EvalRecord) -> String {
    format!(
        "image={} algo={} mode={} thr2={} k={} bits_embedded={} mse={} ssim={} elapsed_ms={} seed={}",
        r.image,
        r.algo,
        r.mode,
        fmt_g6(r.thr2),
        r.k,
        r.bits_embedded,
        fmt_g6(r.mse),
        fmt_g6(r.ssim),
        fmt_g6(r.elapsed_ms),
        r.seed
    )
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Embed(a) => embed(a),
        Command::Detect(a) => detect(a),
        Command::Attack(a) => attack(a),
        Command::Metric(a) => metric(a),
        Command::Eval(a) => run_eval(a),
    }
}

fn embed(a: EmbedArgs) -> Result<Outcome> {
    let img = load_image(&a.input)?;
    let mut cfg = EmbedConfig::new(a.algo.into())
        .with_block_size(a.block)
        .with_thr2(a.thr2)
        .with_accept_rule(match a.accept_rule {
            RuleArg::LastAbove => AcceptRule::LastAbove,
            RuleArg::FirstBelow => AcceptRule::FirstBelow,
        });
    if a.pad_edge {
        cfg.pad = PadPolicy::ReplicateEdge;
    }
    let start = Instant::now();
    let adaptive = embed_image_adaptive(&img, a.key, &cfg)?;
    let (marked, layout) = match a.mode {
        ModeArg::Adaptive => (adaptive.watermarked.clone(), adaptive.layout(a.key, &cfg)),
        ModeArg::Original => embed_original_matched(&img, a.key, &cfg, &adaptive)?,
    };
    let elapsed_ms = if a.no_timing {
        0.0
    } else {
        start.elapsed().as_secs_f64() * 1e3
    };
    save_image(&marked, &a.out)?;
    let sidecar = Sidecar {
        layout,
        thr2: cfg.thr2,
        accept_rule: cfg.accept_rule,
    };
    sidecar.save(&a.sidecar)?;
    let record = EvalRecord {
        image: image_id(&a.input),
        algo: cfg.algo,
        mode: sidecar.layout.mode,
        thr2: cfg.thr2,
        k: cfg.k,
        bits_embedded: sidecar.layout.total_bits(),
        mse: mse(&img, &marked)?,
        ssim: ssim(&img, &marked)?,
        elapsed_ms,
        seed: a.key,
    };
    println!("{}", record_line(&record));
    Ok(Outcome::Success)
}

fn detect(a: DetectArgs) -> Result<Outcome> {
    let sidecar = Sidecar::load(&a.sidecar)?;
    let img = load_image(&a.input)?;
    if sidecar.layout.total_bits() == 0 {
        bail!("the sidecar records an empty payload; nothing to detect");
    }
    let record = eval::detect_image(&img, &sidecar.layout, a.trials, a.trial_seed)?;
    if let Some(out) = &a.out {
        eval::write_detection_csv(std::slice::from_ref(&record), out)?;
    }
    let max_random = record.random_scores().into_iter().reduce(f64::max);
    println!(
        "true_score={} max_random={} margin={} detected={}",
        fmt_g6(record.true_score()),
        max_random.map(fmt_g6).unwrap_or_else(|| "none".into()),
        record.margin.map(fmt_g6).unwrap_or_else(|| "none".into()),
        if record.detected() { "yes" } else { "no" }
    );
    Ok(if record.detected() {
        Outcome::Success
    } else {
        Outcome::NotDetected
    })
}

fn attack(a: AttackArgs) -> Result<Outcome> {
    let img = load_image(&a.input)?;
    let spec = AttackSpec {
        kind: match a.kind {
            AttackArg::Gauss => AttackKind::Gaussian,
            AttackArg::Lpf => AttackKind::Lowpass,
            AttackArg::Jpeg => AttackKind::Jpeg,
        },
        sigma: a.sigma,
        kernel: a.kernel,
        quality: a.quality,
        seed: a.seed,
    };
    save_image(&spec.apply(&img)?, &a.out)?;
    Ok(Outcome::Success)
}

fn metric(a: MetricArgs) -> Result<Outcome> {
    let x = load_image(&a.a)?;
    let y = load_image(&a.b)?;
    println!("mse={} ssim={}", fmt_g6(mse(&x, &y)?), fmt_g6(ssim(&x, &y)?));
    Ok(Outcome::Success)
}

fn run_eval(a: EvalArgs) -> Result<Outcome> {
    let timing = if a.no_timing { Timing::Off } else { Timing::WallClock };
    let cfgs = eval::default_configs();
    let single = || -> Result<(wmark::Image, String)> {
        let path = a
            .input
            .as_ref()
            .with_context(|| format!("suite {:?} needs --in <pgm>", a.suite))?;
        Ok((load_image(path)?, image_id(path)))
    };
    match a.suite {
        Suite::Table1 => {
            let (img, id) = single()?;
            eval::write_csv(&eval::run_comparison(&img, &id, a.seed, &cfgs, timing)?, &a.out)?;
        }
        Suite::Table2 => {
            let (img, id) = single()?;
            let records = eval::run_threshold_sweep(&img, &id, a.seed, &cfgs, &eval::SWEEP_THRESHOLDS, timing)?;
            eval::write_csv(&records, &a.out)?;
        }
        Suite::Fig4 => {
            let (img, id) = single()?;
            let sweep = eval::run_blocksize_sweep(&img, &id, a.seed, &cfgs, &eval::SWEEP_BLOCKS, timing)?;
            for s in &sweep.skipped {
                eprintln!("skipped algo={} k={}: {}", s.algo, s.k, s.reason);
            }
            eval::write_csv(&sweep.records, &a.out)?;
        }
        Suite::Fig3 => {
            let (img, _) = single()?;
            let attacks: Vec<AttackSpec> = AttackKind::ALL.iter().map(|&k| AttackSpec::new(k, a.seed)).collect();
            let records = eval::run_detection_experiment(&img, a.seed, &cfgs, &attacks, eval::DETECTION_TRIALS)?;
            for r in &records {
                println!(
                    "algo={} attack={} true_score={} margin={} random_std={}",
                    r.algo,
                    r.attack.map_or("none", AttackKind::name),
                    fmt_g6(r.true_score()),
                    r.margin.map(fmt_g6).unwrap_or_else(|| "none".into()),
                    fmt_g6(r.random_std())
                );
            }
            eval::write_detection_csv(&records, &a.out)?;
        }
        Suite::Dataset => {
            let dir = a.dataset.as_ref().context("suite dataset needs --dataset <dir>")?;
            let summary = eval::run_dataset_eval(dir, a.seed, &cfgs, timing)?;
            for (algo, pct) in &summary.improvement {
                println!("algo={algo} images={} ssim_improvement_pct={}", summary.images.len(), fmt_g6(*pct));
            }
            eval::write_csv(&summary.records, &a.out)?;
        }
    }
    Ok(Outcome::Success)
}

/// Size the global rayon pool from `WMARK_THREADS` when it is set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("WMARK_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("WMARK_THREADS={raw:?} is not a thread count"))?;
    if n == 0 {
        bail!("WMARK_THREADS must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(())
}
