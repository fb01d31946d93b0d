//! Embedding metadata: one `key=value` per line, lists comma-separated.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use wmark::watermark::CdmaParams;
use wmark::{AcceptRule, BlockGrid, Layout, PadPolicy};

/// What `embed` records and `detect` needs.
#[derive(Clone, Debug, PartialEq)]
pub struct Sidecar {
    pub layout: Layout,
    pub thr2: f64,
    pub accept_rule: AcceptRule,
}

const KEYS: [&str; 15] = [
    "algo",
    "mode",
    "seed",
    "width",
    "height",
    "k",
    "pad",
    "thr2",
    "accept_rule",
    "dct_skip",
    "dwt_levels",
    "cdma_group_size",
    "cdma_code_len",
    "cdma_gain",
    "block_bits",
];

fn pad_name(p: PadPolicy) -> &'static str {
    match p {
        PadPolicy::Reject => "reject",
        PadPolicy::ReplicateEdge => "replicate_edge",
    }
}

impl Sidecar {
    pub fn serialize(&self) -> String {
        let l = &self.layout;
        let bits: Vec<String> = l.block_bits.iter().map(usize::to_string).collect();
        let mut out = String::new();
        let values = [
            l.algo.name().to_string(),
            l.mode.name().to_string(),
            l.seed.to_string(),
            l.width.to_string(),
            l.height.to_string(),
            l.k.to_string(),
            pad_name(l.pad).to_string(),
            // shortest representation that parses back to the same value
            self.thr2.to_string(),
            self.accept_rule.name().to_string(),
            l.dct_skip.to_string(),
            l.dwt_levels.to_string(),
            l.cdma.group_size.to_string(),
            l.cdma.code_len.to_string(),
            l.cdma.gain.to_string(),
            bits.join(","),
        ];
        for (key, value) in KEYS.iter().zip(values) {
            writeln!(out, "{key}={value}").expect("writing to a String");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values: [Option<&str>; KEYS.len()] = [None; KEYS.len()];
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("sidecar line {}: expected key=value", n + 1))?;
            let slot = KEYS
                .iter()
                .position(|k| *k == key.trim())
                .ok_or_else(|| anyhow!("sidecar line {}: unknown key {:?}", n + 1, key.trim()))?;
            if values[slot].replace(value.trim()).is_some() {
                bail!("sidecar line {}: duplicate key {key:?}", n + 1);
            }
        }
        let get = |key: &str| -> Result<&str> {
            let i = KEYS.iter().position(|k| *k == key).expect("known key");
            values[i].ok_or_else(|| anyhow!("sidecar is missing {key:?}"))
        };
        fn num<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            raw.parse().map_err(|e| anyhow!("sidecar {key}={raw:?}: {e}"))
        }
        let pad = match get("pad")? {
            "reject" => PadPolicy::Reject,
            "replicate_edge" => PadPolicy::ReplicateEdge,
            other => bail!("sidecar pad={other:?}: unknown policy"),
        };
        let raw_bits = get("block_bits")?;
        let block_bits = if raw_bits.is_empty() {
            Vec::new()
        } else {
            raw_bits
                .split(',')
                .map(|b| num("block_bits", b.trim()))
                .collect::<Result<Vec<usize>>>()?
        };
        let layout = Layout {
            algo: num("algo", get("algo")?)?,
            mode: num("mode", get("mode")?)?,
            seed: num("seed", get("seed")?)?,
            width: num("width", get("width")?)?,
            height: num("height", get("height")?)?,
            k: num("k", get("k")?)?,
            pad,
            block_bits,
            dct_skip: num("dct_skip", get("dct_skip")?)?,
            dwt_levels: num("dwt_levels", get("dwt_levels")?)?,
            cdma: CdmaParams {
                group_size: num("cdma_group_size", get("cdma_group_size")?)?,
                code_len: num("cdma_code_len", get("cdma_code_len")?)?,
                gain: num("cdma_gain", get("cdma_gain")?)?,
            },
        };
        let grid = BlockGrid::new(layout.width, layout.height, layout.k, layout.pad)
            .with_context(|| format!("sidecar grid {}x{} with k={}", layout.width, layout.height, layout.k))?;
        if grid.len() != layout.block_bits.len() {
            bail!(
                "sidecar lists {} block lengths for a grid of {} blocks",
                layout.block_bits.len(),
                grid.len()
            );
        }
        layout.cdma.validate()?;
        Ok(Self {
            layout,
            thr2: num("thr2", get("thr2")?)?,
            accept_rule: num("accept_rule", get("accept_rule")?)?,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading sidecar {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing sidecar {}", path.display()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.serialize()).with_context(|| format!("writing sidecar {}", path.display()))
    }
}
