//! Experiment harness: equal-payload comparisons, threshold and block-size
//! sweeps, detection under attack, corpus averages and CSV reports.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::adaptive::{embed_image_adaptive, EmbedConfig};
use crate::attacks::{AttackKind, AttackSpec};
use crate::error::{Error, Result};
use crate::image::{load_image, Image};
use crate::payload::{embed_original_matched, Mode};
use crate::quality::{mse, ssim};
use crate::watermark::{Algorithm, Observations};

/// Exact CSV header of [`write_csv`].
pub const CSV_HEADER: [&str; 10] = [
    "image",
    "algo",
    "mode",
    "thr2",
    "k",
    "bits_embedded",
    "mse",
    "ssim",
    "elapsed_ms",
    "seed",
];

/// Header of [`write_detection_csv`].
pub const DETECTION_HEADER: [&str; 7] = ["algo", "attack", "candidate", "score", "is_true", "true_index", "margin"];

/// One row of an imperceptibility report.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRecord {
    pub image: String,
    pub algo: Algorithm,
    pub mode: Mode,
    pub thr2: f64,
    pub k: usize,
    pub bits_embedded: usize,
    pub mse: f64,
    pub ssim: f64,
    pub elapsed_ms: f64,
    pub seed: u64,
}

impl EvalRecord {
    /// The record as it reads back from CSV.
    pub fn rounded(&self) -> Self {
        let r = |v: f64| fmt_g6(v).parse().unwrap_or(v);
        Self {
            thr2: r(self.thr2),
            mse: r(self.mse),
            ssim: r(self.ssim),
            elapsed_ms: r(self.elapsed_ms),
            ..self.clone()
        }
    }
}

/// Whether records carry wall-clock times. Without timing every
/// `elapsed_ms` is 0 and reports are byte-reproducible.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Timing {
    #[default]
    WallClock,
    Off,
}

impl Timing {
    fn measure<T>(self, f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
        let start = Instant::now();
        let out = f()?;
        Ok(match self {
            Timing::WallClock => (out, start.elapsed().as_secs_f64() * 1e3),
            Timing::Off => (out, 0.0),
        })
    }
}

/// `%g`-style formatting with six significant digits.
pub fn fmt_g6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        trim(&format!("{v:.*}", (5 - exp) as usize))
    }
}

fn record(
    image: &str,
    cfg: &EmbedConfig,
    mode: Mode,
    host: &Image,
    marked: &Image,
    bits: usize,
    elapsed_ms: f64,
    seed: u64,
) -> Result<EvalRecord> {
    Ok(EvalRecord {
        image: image.to_string(),
        algo: cfg.algo,
        mode,
        thr2: cfg.thr2,
        k: cfg.k,
        bits_embedded: bits,
        mse: mse(host, marked)?,
        ssim: ssim(host, marked)?,
        elapsed_ms,
        seed,
    })
}

/// Adaptive and equal-payload original records for each configuration, in
/// that order.
pub fn run_comparison(
    img: &Image,
    image_id: &str,
    seed: u64,
    cfgs: &[EmbedConfig],
    timing: Timing,
) -> Result<Vec<EvalRecord>> {
    let mut out = Vec::with_capacity(2 * cfgs.len());
    for cfg in cfgs {
        let (adaptive, t_adaptive) = timing.measure(|| embed_image_adaptive(img, seed, cfg))?;
        let ((original, layout), t_original) =
            timing.measure(|| embed_original_matched(img, seed, cfg, &adaptive))?;
        if layout.total_bits() != adaptive.total_bits {
            return Err(Error::Capacity {
                requested: adaptive.total_bits,
                available: layout.total_bits(),
            });
        }
        out.push(record(
            image_id,
            cfg,
            Mode::Adaptive,
            img,
            &adaptive.watermarked,
            adaptive.total_bits,
            t_adaptive,
            seed,
        )?);
        out.push(record(
            image_id,
            cfg,
            Mode::Original,
            img,
            &original,
            layout.total_bits(),
            t_original,
            seed,
        )?);
    }
    Ok(out)
}

/// Default configurations for all four schemes.
pub fn default_configs() -> Vec<EmbedConfig> {
    Algorithm::ALL.iter().map(|&a| EmbedConfig::new(a)).collect()
}

pub const SWEEP_THRESHOLDS: [f64; 4] = [0.6, 0.7, 0.8, 0.9];
pub const SWEEP_BLOCKS: [usize; 4] = [8, 16, 32, 64];

fn adaptive_record(img: &Image, image_id: &str, seed: u64, cfg: &EmbedConfig, timing: Timing) -> Result<EvalRecord> {
    let (r, elapsed) = timing.measure(|| embed_image_adaptive(img, seed, cfg))?;
    record(image_id, cfg, Mode::Adaptive, img, &r.watermarked, r.total_bits, elapsed, seed)
}

/// Adaptive records for every `(config, thr2)` pair, configurations outer.
pub fn run_threshold_sweep(
    img: &Image,
    image_id: &str,
    seed: u64,
    cfgs: &[EmbedConfig],
    thresholds: &[f64],
    timing: Timing,
) -> Result<Vec<EvalRecord>> {
    let mut out = Vec::with_capacity(cfgs.len() * thresholds.len());
    for cfg in cfgs {
        for &thr2 in thresholds {
            out.push(adaptive_record(img, image_id, seed, &cfg.clone().with_thr2(thr2), timing)?);
        }
    }
    Ok(out)
}

/// A sweep cell that could not run.
#[derive(Clone, Debug, PartialEq)]
pub struct SkippedCell {
    pub algo: Algorithm,
    pub k: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BlockSweep {
    pub records: Vec<EvalRecord>,
    pub skipped: Vec<SkippedCell>,
}

/// Adaptive records for every `(config, k)` pair with block-size scaled
/// schedules. Cells whose block size does not fit the image are skipped.
pub fn run_blocksize_sweep(
    img: &Image,
    image_id: &str,
    seed: u64,
    cfgs: &[EmbedConfig],
    ks: &[usize],
    timing: Timing,
) -> Result<BlockSweep> {
    let mut out = BlockSweep::default();
    for cfg in cfgs {
        for &k in ks {
            let cell = cfg.clone().with_block_size(k);
            match adaptive_record(img, image_id, seed, &cell, timing) {
                Ok(r) => out.records.push(r),
                Err(e @ (Error::DimensionMismatch(_) | Error::InvalidParameter(_))) => out.skipped.push(SkippedCell {
                    algo: cfg.algo,
                    k,
                    reason: e.to_string(),
                }),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

/// One detection panel: the true sequence against a random background.
///
/// `scores` has `random + replaced.len()` entries. The replaced slots hold
/// the true sequence's score against each attacked image, in
/// [`AttackKind::ALL`] order; the random background is scored against the
/// image of this record's attack.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionRecord {
    pub algo: Algorithm,
    /// `None` for an unattacked image.
    pub attack: Option<AttackKind>,
    pub scores: Vec<f64>,
    pub true_index: usize,
    pub replaced: Vec<usize>,
    /// True score minus the largest random score; `None` without a random
    /// background.
    pub margin: Option<f64>,
}

impl DetectionRecord {
    pub fn true_score(&self) -> f64 {
        self.scores[self.true_index]
    }

    /// Scores of the random background.
    pub fn random_scores(&self) -> Vec<f64> {
        self.scores
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.replaced.contains(i) && *i != self.true_index)
            .map(|(_, &s)| s)
            .collect()
    }

    /// Sample standard deviation of the random background.
    pub fn random_std(&self) -> f64 {
        let r = self.random_scores();
        if r.len() < 2 {
            return 0.0;
        }
        let n = r.len() as f64;
        let mean = r.iter().sum::<f64>() / n;
        (r.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }

    pub fn detected(&self) -> bool {
        self.margin.is_none_or(|m| m > 0.0)
    }

    fn build(
        algo: Algorithm,
        attack: Option<AttackKind>,
        random: Vec<f64>,
        replaced_scores: &[f64],
        own: usize,
    ) -> Self {
        let total = random.len() + replaced_scores.len();
        let replaced = replaced_slots(total, replaced_scores.len());
        let mut scores = Vec::with_capacity(total);
        let mut background = random.iter();
        let mut extra = replaced_scores.iter();
        for i in 0..total {
            let s = if replaced.contains(&i) { extra.next() } else { background.next() };
            scores.push(*s.expect("slot counts add up"));
        }
        let margin = random
            .iter()
            .copied()
            .reduce(f64::max)
            .map(|max| replaced_scores[own] - max);
        Self {
            algo,
            attack,
            scores,
            true_index: replaced[own],
            replaced,
            margin,
        }
    }
}

/// `count` evenly spread slots among `total` candidates.
pub fn replaced_slots(total: usize, count: usize) -> Vec<usize> {
    (0..count).map(|j| (j + 1) * total / (count + 1)).collect()
}

/// Candidates per detection panel.
pub const DETECTION_TRIALS: usize = 300;

fn random_scores(obs: &Observations, layout: &crate::payload::Layout, trial_seed: u64, n: usize) -> Result<Vec<f64>> {
    (0..n)
        .map(|i| obs.score(&layout.random_candidate(trial_seed, i)))
        .collect()
}

/// Embed adaptively, attack, and score 297 random candidates plus the true
/// sequence against every attacked image. One record per `(config, attack)`.
pub fn run_detection_experiment(
    img: &Image,
    seed: u64,
    cfgs: &[EmbedConfig],
    attacks: &[AttackSpec],
    trials: usize,
) -> Result<Vec<DetectionRecord>> {
    if trials <= attacks.len() {
        return Err(Error::InvalidParameter(format!(
            "{trials} candidates leave no random background for {} attacks",
            attacks.len()
        )));
    }
    let mut out = Vec::new();
    for cfg in cfgs {
        let adaptive = embed_image_adaptive(img, seed, cfg)?;
        let layout = adaptive.layout(seed, cfg);
        let truth = layout.true_candidate();
        let observed = attacks
            .iter()
            .map(|a| layout.observations(&a.apply(&adaptive.watermarked)?))
            .collect::<Result<Vec<_>>>()?;
        let true_scores = observed
            .iter()
            .map(|o| o.score(&truth))
            .collect::<Result<Vec<_>>>()?;
        for (j, (attack, obs)) in attacks.iter().zip(&observed).enumerate() {
            let random = random_scores(obs, &layout, seed ^ attack.seed, trials - attacks.len())?;
            out.push(DetectionRecord::build(cfg.algo, Some(attack.kind), random, &true_scores, j));
        }
    }
    Ok(out)
}

/// Score the true sequence of `layout` and `trials − 1` random candidates on
/// one image.
pub fn detect_image(
    img: &Image,
    layout: &crate::payload::Layout,
    trials: usize,
    trial_seed: u64,
) -> Result<DetectionRecord> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one candidate is required".into()));
    }
    let obs = layout.observations(img)?;
    let truth = obs.score(&layout.true_candidate())?;
    let random = random_scores(&obs, layout, trial_seed, trials - 1)?;
    Ok(DetectionRecord::build(layout.algo, None, random, &[truth], 0))
}

/// Per-algorithm mean of `100·(ssim_adaptive − ssim_original)/ssim_original`.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSummary {
    pub images: Vec<String>,
    pub records: Vec<EvalRecord>,
    pub improvement: Vec<(Algorithm, f64)>,
}

/// PGM files of `dir` in name order.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    out.sort();
    Ok(out)
}

/// Mean improvement from equal-payload comparisons over every PGM in `dir`.
pub fn run_dataset_eval(dir: &Path, seed: u64, cfgs: &[EmbedConfig], timing: Timing) -> Result<DatasetSummary> {
    let paths = list_images(dir)?;
    if paths.is_empty() {
        return Err(Error::InvalidParameter(format!("no .pgm images in {}", dir.display())));
    }
    let mut images = Vec::with_capacity(paths.len());
    let mut records = Vec::new();
    for path in &paths {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        records.extend(run_comparison(&load_image(path)?, &id, seed, cfgs, timing)?);
        images.push(id);
    }
    Ok(DatasetSummary {
        improvement: improvement(&records),
        images,
        records,
    })
}

/// Mean SSIM improvement per algorithm over adaptive/original pairs.
pub fn improvement(records: &[EvalRecord]) -> Vec<(Algorithm, f64)> {
    let mut out = Vec::new();
    for algo in Algorithm::ALL {
        let mut pct = Vec::new();
        for pair in records.chunks(2) {
            if let [a, o] = pair {
                if a.algo == algo && a.mode == Mode::Adaptive && o.mode == Mode::Original {
                    pct.push(100.0 * (a.ssim - o.ssim) / o.ssim);
                }
            }
        }
        if !pct.is_empty() {
            out.push((algo, pct.iter().sum::<f64>() / pct.len() as f64));
        }
    }
    out
}

/// Header plus one row per record.
pub fn write_csv_to<W: std::io::Write>(records: &[EvalRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.image.clone(),
            r.algo.name().to_string(),
            r.mode.name().to_string(),
            fmt_g6(r.thr2),
            r.k.to_string(),
            r.bits_embedded.to_string(),
            fmt_g6(r.mse),
            fmt_g6(r.ssim),
            fmt_g6(r.elapsed_ms),
            r.seed.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn write_csv(records: &[EvalRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(records, std::io::BufWriter::new(file))
}

fn field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = row.get(i).unwrap_or("");
    raw.parse().map_err(|_| {
        Error::InvalidParameter(format!("column {:?}: cannot parse {raw:?}", CSV_HEADER[i]))
    })
}

pub fn read_csv_from<R: std::io::Read>(input: R) -> Result<Vec<EvalRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    if rd.headers()?.iter().ne(CSV_HEADER) {
        return Err(Error::InvalidParameter("unexpected csv header".into()));
    }
    rd.records()
        .map(|row| {
            let row = row?;
            Ok(EvalRecord {
                image: row.get(0).unwrap_or("").to_string(),
                algo: field(&row, 1)?,
                mode: field(&row, 2)?,
                thr2: field(&row, 3)?,
                k: field(&row, 4)?,
                bits_embedded: field(&row, 5)?,
                mse: field(&row, 6)?,
                ssim: field(&row, 7)?,
                elapsed_ms: field(&row, 8)?,
                seed: field(&row, 9)?,
            })
        })
        .collect()
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<EvalRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(std::io::BufReader::new(file))
}

/// One row per candidate score.
pub fn write_detection_csv_to<W: std::io::Write>(records: &[DetectionRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DETECTION_HEADER)?;
    for r in records {
        let attack = r.attack.map_or("none", AttackKind::name);
        let margin = r.margin.map(fmt_g6).unwrap_or_default();
        for (i, &s) in r.scores.iter().enumerate() {
            w.write_record([
                r.algo.name().to_string(),
                attack.to_string(),
                i.to_string(),
                fmt_g6(s),
                u8::from(i == r.true_index).to_string(),
                r.true_index.to_string(),
                margin.clone(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn write_detection_csv(records: &[DetectionRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_detection_csv_to(records, std::io::BufWriter::new(file))
}
