//! Experiment configuration. A run starts from the preset of its
//! experiment kind; a TOML file and command-line flags override keys on top.
//!
//! ```toml
//! [bench]
//! experiment = "fig3"
//! n = [4, 8, 16, 32]
//! repetitions = 10
//! seed = 7
//!
//! [channel]
//! model = "dephasing"   # dephasing | xflip | bitflip | identity
//! p0 = 0.1
//! gamma0 = 0.1
//! layer = "paired"      # none | paired | single
//! gate = "iswap"
//!
//! [frames]
//! kinds = ["rotated-min", "rotated-shadow"]
//!
//! [estimator]
//! entries = ["00"]
//! epsilon = 0.05
//! window = 100
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Custom,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Fig2,
        ExperimentKind::Fig3,
        ExperimentKind::Fig4,
        ExperimentKind::Fig5,
        ExperimentKind::Fig6,
        ExperimentKind::Fig7,
        ExperimentKind::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Fig2 => "fig2",
            ExperimentKind::Fig3 => "fig3",
            ExperimentKind::Fig4 => "fig4",
            ExperimentKind::Fig5 => "fig5",
            ExperimentKind::Fig6 => "fig6",
            ExperimentKind::Fig7 => "fig7",
            ExperimentKind::Custom => "custom",
        }
    }

    /// Stochastic kinds need a seed.
    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            ExperimentKind::Fig3
                | ExperimentKind::Fig4
                | ExperimentKind::Fig7
                | ExperimentKind::Custom
        )
    }

    fn preset(self) -> &'static str {
        match self {
            ExperimentKind::Fig2 => PRESET_FIG2,
            ExperimentKind::Fig3 => PRESET_FIG3,
            ExperimentKind::Fig4 => PRESET_FIG4,
            ExperimentKind::Fig5 => PRESET_FIG5,
            ExperimentKind::Fig6 => PRESET_FIG6,
            ExperimentKind::Fig7 => PRESET_FIG7,
            ExperimentKind::Custom => PRESET_CUSTOM,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .with_context(|| format!("unknown experiment {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    /// Per-site dephasing with an x rotation, parameters decaying from the chain center.
    Dephasing,
    /// Correlated coherent x errors.
    Xflip,
    /// Independent bit flips.
    Bitflip,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    None,
    /// `gate` on pairs `(0,1), (2,3), ...`.
    Paired,
    /// `gate` on the central pair only.
    Single,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameSpec {
    Shadow,
    Min,
    /// Layer gates absorbed into variance-minimized rotated tables.
    RotatedMin,
    /// Layer gates absorbed into rotated shadow tables, no minimization.
    RotatedShadow,
}

impl FrameSpec {
    pub fn name(self) -> &'static str {
        match self {
            FrameSpec::Shadow => "shadow",
            FrameSpec::Min => "min",
            FrameSpec::RotatedMin => "rotated-min",
            FrameSpec::RotatedShadow => "rotated-shadow",
        }
    }

    pub fn is_rotated(self) -> bool {
        matches!(self, FrameSpec::RotatedMin | FrameSpec::RotatedShadow)
    }
}

impl FromStr for FrameSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            FrameSpec::Shadow,
            FrameSpec::Min,
            FrameSpec::RotatedMin,
            FrameSpec::RotatedShadow,
        ]
        .into_iter()
        .find(|k| k.name() == s.trim())
        .with_context(|| format!("unknown frame spec {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    pub experiment: ExperimentKind,
    pub n: Vec<usize>,
    pub repetitions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub model: ChannelKind,
    pub p0: f64,
    pub gamma0: f64,
    pub epsilon: f64,
    pub p: f64,
    pub degree: usize,
    pub layer: LayerKind,
    pub gate: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramesSection {
    pub kinds: Vec<FrameSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub shots: usize,
    pub shot_cap: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    /// Two-letter entry codes `ab` with `a, b` in `0xyz`, placed on `entry_qubit`.
    pub entries: Vec<String>,
    pub entry_qubit: usize,
    pub epsilon: f64,
    pub window: usize,
    pub mode: String,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub bench: BenchSection,
    pub channel: ChannelSection,
    pub frames: FramesSection,
    pub sampler: SamplerSection,
    pub estimator: EstimatorSection,
}

const BASE: &str = r#"
[bench]
experiment = "custom"
n = [4]
repetitions = 1

[channel]
model = "dephasing"
p0 = 0.1
gamma0 = 0.1
epsilon = 0.1
p = 0.05
degree = 1
layer = "none"
gate = "iswap"

[frames]
kinds = ["min"]

[sampler]
shots = 100000
shot_cap = 1000000

[estimator]
entries = ["00"]
entry_qubit = 0
epsilon = 0.05
window = 100
mode = "mean"
delta = 0.05
"#;

const ANALYTIC_GRID: &str = "n = [2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 26, \
     27, 28, 29, 30, 31, 32, 33, 34, 35, 36, 37, 38, 39, 40, 41, 42, 43, 44, 45, 46, 47, 48, 49, 50]";

const PRESET_FIG2: &str = r#"
[bench]
experiment = "fig2"
@ANALYTIC
[channel]
model = "xflip"
[frames]
kinds = ["min"]
[estimator]
entries = ["00", "0x"]
"#;

const PRESET_FIG3: &str = r#"
[bench]
experiment = "fig3"
n = [4, 8, 16, 32, 64, 100]
repetitions = 10
[channel]
layer = "paired"
[frames]
kinds = ["rotated-min", "rotated-shadow"]
[estimator]
entries = ["00"]
window = 100
"#;

const PRESET_FIG4: &str = r#"
[bench]
experiment = "fig4"
n = [4, 8, 16, 32, 64, 100]
repetitions = 10
[estimator]
entries = ["00", "xx", "0x"]
window = 500
"#;

const PRESET_FIG5: &str = r#"
[bench]
experiment = "fig5"
@ANALYTIC
[channel]
layer = "paired"
[frames]
kinds = ["rotated-min"]
[estimator]
entries = ["00", "0x"]
"#;

const PRESET_FIG6: &str = r#"
[bench]
experiment = "fig6"
@ANALYTIC
[channel]
layer = "paired"
gate = "t*t"
[frames]
kinds = ["rotated-min"]
[estimator]
entries = ["00"]
"#;

const PRESET_FIG7: &str = r#"
[bench]
experiment = "fig7"
n = [10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30, 32, 34, 36, 38, 40]
repetitions = 10
"#;

const PRESET_CUSTOM: &str = "";

fn parse_table(text: &str, what: &str) -> Result<toml::Table> {
    text.parse::<toml::Table>()
        .with_context(|| format!("parsing {what}"))
}

/// Recursively overlays `top` on `base`.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl ExperimentConfig {
    pub fn preset(kind: ExperimentKind) -> ExperimentConfig {
        Self::layered_text(Some(kind), None).expect("presets are valid")
    }

    /// Preset of `kind` (or of the file's own `bench.experiment`) overlaid with `file`.
    pub fn from_toml(kind: Option<ExperimentKind>, file: &str) -> Result<ExperimentConfig> {
        Self::layered_text(kind, Some(file))
    }

    pub fn load(kind: Option<ExperimentKind>, path: &Path) -> Result<ExperimentConfig> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::layered_text(kind, Some(&text)).with_context(|| format!("in {}", path.display()))
    }

    fn layered_text(kind: Option<ExperimentKind>, file: Option<&str>) -> Result<ExperimentConfig> {
        let user = match file {
            Some(t) => parse_table(t, "config")?,
            None => toml::Table::new(),
        };
        let file_kind = user
            .get("bench")
            .and_then(|b| b.get("experiment"))
            .and_then(|e| e.as_str())
            .map(ExperimentKind::from_str)
            .transpose()?;
        let kind = match (kind, file_kind) {
            (Some(a), Some(b)) if a != b => bail!("config is for {b}, not {a}"),
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => ExperimentKind::Custom,
        };
        let mut table = parse_table(BASE, "base config")?;
        merge(
            &mut table,
            parse_table(&kind.preset().replace("@ANALYTIC", ANALYTIC_GRID), "preset")?,
        );
        merge(&mut table, user);
        let cfg: ExperimentConfig = table.try_into().context("invalid config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.bench;
        if b.n.is_empty() {
            bail!("bench.n is empty");
        }
        if b.n.contains(&0) {
            bail!("bench.n contains 0");
        }
        if b.repetitions == 0 {
            bail!("bench.repetitions must be positive");
        }
        if self.frames.kinds.is_empty() {
            bail!("frames.kinds is empty");
        }
        let e = &self.estimator;
        if !(e.epsilon > 0.0) || !(e.delta > 0.0 && e.delta < 1.0) {
            bail!("estimator.epsilon must be positive and estimator.delta in (0, 1)");
        }
        if !matches!(e.mode.as_str(), "mean" | "mom") {
            bail!("estimator.mode must be mean or mom, got {:?}", e.mode);
        }
        for code in &e.entries {
            if code.len() != 2 || !code.chars().all(|c| "0ixyzIXYZ".contains(c)) {
                bail!("bad entry code {code:?}");
            }
        }
        let c = &self.channel;
        for (name, v) in [("p0", c.p0), ("gamma0", c.gamma0), ("p", c.p)] {
            if !(0.0..=1.0).contains(&v) {
                bail!("channel.{name} = {v} outside [0, 1]");
            }
        }
        if !c.epsilon.is_finite() {
            bail!("channel.epsilon must be finite");
        }
        if c.layer != LayerKind::None {
            lowdeg_tomo::gates::by_name::<f64>(&c.gate)
                .with_context(|| format!("channel.gate {:?}", c.gate))?;
        }
        Ok(())
    }

    /// The seed, required for stochastic kinds.
    pub fn seed(&self) -> Result<u64> {
        match (self.bench.seed, self.bench.experiment.is_stochastic()) {
            (Some(s), _) => Ok(s),
            (None, false) => Ok(0),
            (None, true) => bail!(
                "{} is stochastic and needs a seed (--seed or bench.seed)",
                self.bench.experiment
            ),
        }
    }
}

/// `splitmix64` over the master seed and a run key; independent streams per run.
pub fn derive_seed(master: u64, key: &[u64]) -> u64 {
    let mut z = master;
    for &k in key {
        z = mix(z ^ mix(k.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    z
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for k in ExperimentKind::ALL {
            let c = ExperimentConfig::preset(k);
            assert_eq!(c.bench.experiment, k);
        }
        let f2 = ExperimentConfig::preset(ExperimentKind::Fig2);
        assert_eq!(f2.bench.n, (2..=50).collect::<Vec<_>>());
        assert_eq!(f2.channel.model, ChannelKind::Xflip);
        assert_eq!(
            ExperimentConfig::preset(ExperimentKind::Fig3).bench.n,
            vec![4, 8, 16, 32, 64, 100]
        );
    }

    #[test]
    fn file_overrides_preset() {
        let c = ExperimentConfig::from_toml(
            Some(ExperimentKind::Fig3),
            "[bench]\nn = [4, 8]\nseed = 3\n",
        )
        .unwrap();
        assert_eq!(c.bench.n, vec![4, 8]);
        assert_eq!(c.estimator.window, 100);
        assert_eq!(c.seed().unwrap(), 3);
        let c = ExperimentConfig::from_toml(None, "[bench]\nexperiment = \"fig6\"\n").unwrap();
        assert_eq!(c.channel.gate, "t*t");
    }

    #[test]
    fn bad_configs_rejected() {
        assert!(ExperimentConfig::from_toml(None, "[channel]\nmodel = \"nope\"\n").is_err());
        assert!(ExperimentConfig::from_toml(None, "[channel]\ntypo = 1\n").is_err());
        assert!(ExperimentConfig::from_toml(None, "[estimator]\nentries = [\"0q\"]\n").is_err());
        assert!(ExperimentConfig::from_toml(
            Some(ExperimentKind::Fig2),
            "[bench]\nexperiment = \"fig3\"\n"
        )
        .is_err());
        assert!(ExperimentConfig::preset(ExperimentKind::Fig3)
            .seed()
            .is_err());
        assert_eq!(
            ExperimentConfig::preset(ExperimentKind::Fig2)
                .seed()
                .unwrap(),
            0
        );
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, &[4, 0]);
        assert_ne!(a, derive_seed(1, &[4, 1]));
        assert_ne!(a, derive_seed(2, &[4, 0]));
        assert_eq!(a, derive_seed(1, &[4, 0]));
    }
}
