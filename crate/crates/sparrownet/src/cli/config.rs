//! Run configuration and the flat `section.key = value` config file format.
//!
//! The format is line-based: `#` starts a comment, blank lines are ignored,
//! everything else must be `key = value` with a known key. Unknown keys are
//! rejected so typos fail loudly.

use serde::{Deserialize, Serialize};

use crate::neural::NetworkConfig;
use crate::pipeline::{GeneratorConfig, SplitSpec, WEIGHT_BOUND};
use crate::ssa::SsaConfig;

/// Optimizer settings carried in config files; dimension and bounds are
/// derived per command (codec size for training, benchmark box or flags for
/// benchmark runs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsaSettings {
    pub pop_size: usize,
    pub iterations: usize,
    pub safety_threshold: f64,
    pub producer_fraction: f64,
    pub alerter_fraction: f64,
    pub seed: u64,
}

impl Default for SsaSettings {
    fn default() -> Self {
        Self {
            pop_size: 30,
            iterations: 300,
            safety_threshold: 0.8,
            producer_fraction: 0.2,
            alerter_fraction: 0.2,
            seed: 0,
        }
    }
}

impl SsaSettings {
    /// Full optimizer config over an explicit search box.
    pub fn to_ssa_config(&self, dim: usize, lower: f64, upper: f64) -> SsaConfig {
        let mut cfg = SsaConfig::uniform_bounds(dim, lower, upper);
        cfg.pop_size = self.pop_size;
        cfg.iter_max = self.iterations;
        cfg.safety_threshold = self.safety_threshold;
        cfg.producer_fraction = self.producer_fraction;
        cfg.alerter_fraction = self.alerter_fraction;
        cfg.seed = self.seed;
        cfg
    }

    /// Weight-search config: the box every trained weight lives in.
    pub fn to_weight_search_config(&self, dim: usize) -> SsaConfig {
        self.to_ssa_config(dim, -WEIGHT_BOUND, WEIGHT_BOUND)
    }
}

/// The full effective configuration of one run; every emitted document
/// embeds a copy so results are reproducible from their own file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub out: String,
    pub generator: GeneratorConfig,
    pub network: NetworkConfig,
    pub ssa: SsaSettings,
    pub split: SplitSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        let generator = GeneratorConfig::default();
        let mut network = NetworkConfig::desk_scale();
        network.frame_height = generator.height;
        network.frame_width = generator.width;
        network.freeze_extractor = true;
        Self {
            seed: 0,
            out: "out".into(),
            generator,
            network,
            ssa: SsaSettings::default(),
            split: SplitSpec::default(),
        }
    }
}

impl RunConfig {
    /// Parses config text over the defaults. `seed_override` (the `--seed`
    /// flag) replaces the top-level seed and cascades into any section seed
    /// the file did not set explicitly.
    pub fn parse(text: &str, seed_override: Option<u64>) -> Result<RunConfig, String> {
        let mut cfg = RunConfig::default();
        let mut explicit_generator_seed = None;
        let mut explicit_ssa_seed = None;

        for (index, raw_line) in text.lines().enumerate() {
            let line_no = index + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {line_no}: expected `key = value`, got `{line}`"))?;
            let key = key.trim();
            let value = value.trim();
            let fail = |e: String| format!("line {line_no}: key `{key}`: {e}");

            match key {
                "seed" => cfg.seed = parse_num(value).map_err(fail)?,
                "out" => cfg.out = value.to_string(),

                "generator.n_samples" => cfg.generator.n_samples = parse_num(value).map_err(fail)?,
                "generator.t" => cfg.generator.t = parse_num(value).map_err(fail)?,
                "generator.height" => cfg.generator.height = parse_num(value).map_err(fail)?,
                "generator.width" => cfg.generator.width = parse_num(value).map_err(fail)?,
                "generator.anomaly_rate" => {
                    cfg.generator.anomaly_rate = parse_num(value).map_err(fail)?
                }
                "generator.noise_std" => cfg.generator.noise_std = parse_num(value).map_err(fail)?,
                "generator.seed" => explicit_generator_seed = Some(parse_num(value).map_err(fail)?),

                "network.stem_kernel" => cfg.network.stem_kernel = parse_num(value).map_err(fail)?,
                "network.stem_channels" => {
                    cfg.network.stem_channels = parse_num(value).map_err(fail)?
                }
                "network.pool_window" => cfg.network.pool_window = parse_num(value).map_err(fail)?,
                "network.pool_stride" => cfg.network.pool_stride = parse_num(value).map_err(fail)?,
                "network.block_count" => cfg.network.block_count = parse_num(value).map_err(fail)?,
                "network.block_kernel" => {
                    cfg.network.block_kernel = parse_num(value).map_err(fail)?
                }
                "network.block_channels" => {
                    cfg.network.block_channels = parse_num(value).map_err(fail)?
                }
                "network.block_depth" => cfg.network.block_depth = parse_num(value).map_err(fail)?,
                "network.gru_hidden" => cfg.network.gru_hidden = parse_num(value).map_err(fail)?,
                "network.freeze_extractor" => {
                    cfg.network.freeze_extractor = parse_bool(value).map_err(fail)?
                }

                "ssa.pop_size" => cfg.ssa.pop_size = parse_num(value).map_err(fail)?,
                "ssa.iterations" => cfg.ssa.iterations = parse_num(value).map_err(fail)?,
                "ssa.safety_threshold" => {
                    cfg.ssa.safety_threshold = parse_num(value).map_err(fail)?
                }
                "ssa.producer_fraction" => {
                    cfg.ssa.producer_fraction = parse_num(value).map_err(fail)?
                }
                "ssa.alerter_fraction" => {
                    cfg.ssa.alerter_fraction = parse_num(value).map_err(fail)?
                }
                "ssa.seed" => explicit_ssa_seed = Some(parse_num(value).map_err(fail)?),

                "split.train" => cfg.split.train = parse_num(value).map_err(fail)?,
                "split.validation" => cfg.split.validation = parse_num(value).map_err(fail)?,
                "split.test" => cfg.split.test = parse_num(value).map_err(fail)?,

                other => return Err(format!("line {line_no}: unknown key `{other}`")),
            }
        }

        if let Some(seed) = seed_override {
            cfg.seed = seed;
        }
        cfg.generator.seed = explicit_generator_seed.unwrap_or(cfg.seed);
        cfg.ssa.seed = explicit_ssa_seed.unwrap_or(cfg.seed);

        // Frames come from the generator section; the network section only
        // describes the architecture on top of them.
        cfg.network.frame_height = cfg.generator.height;
        cfg.network.frame_width = cfg.generator.width;
        cfg.network.frame_channels = 1;
        Ok(cfg)
    }
}

fn parse_num<T: std::str::FromStr>(value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("cannot parse `{value}`: {e}"))
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        other => Err(format!("expected true/false, got `{other}`")),
    }
}

/// Annotated default configuration; doubles as the key reference.
pub fn default_config_text() -> String {
    let d = RunConfig::default();
    format!(
        "\
# sparrownet run configuration. Every key is optional; the values below are
# the defaults. `--seed` overrides `seed`, which in turn feeds any section
# seed not set explicitly here.
seed = {seed}
out = {out}

# Synthetic dataset: n_samples sequences of t HxW frames; an anomaly_rate
# fraction carry a mid-sequence trajectory jump.
generator.n_samples = {n_samples}
generator.t = {t}
generator.height = {height}
generator.width = {width}
generator.anomaly_rate = {anomaly_rate}
generator.noise_std = {noise_std}
# generator.seed = (defaults to seed)

# Architecture. Frame dimensions come from the generator section.
network.stem_kernel = {stem_kernel}
network.stem_channels = {stem_channels}
network.pool_window = {pool_window}
network.pool_stride = {pool_stride}
network.block_count = {block_count}
network.block_kernel = {block_kernel}
network.block_channels = {block_channels}
network.block_depth = {block_depth}
network.gru_hidden = {gru_hidden}
# freeze_extractor fixes the conv weights (seed-derived) and searches only
# the GRU and head, shrinking the optimization problem.
network.freeze_extractor = {freeze}

# Sparrow search settings shared by train (weight box [-3, 3]) and optimize.
ssa.pop_size = {pop_size}
ssa.iterations = {iterations}
ssa.safety_threshold = {st}
ssa.producer_fraction = {pf}
ssa.alerter_fraction = {af}
# ssa.seed = (defaults to seed)

split.train = {split_train}
split.validation = {split_validation}
split.test = {split_test}
",
        seed = d.seed,
        out = d.out,
        n_samples = d.generator.n_samples,
        t = d.generator.t,
        height = d.generator.height,
        width = d.generator.width,
        anomaly_rate = d.generator.anomaly_rate,
        noise_std = d.generator.noise_std,
        stem_kernel = d.network.stem_kernel,
        stem_channels = d.network.stem_channels,
        pool_window = d.network.pool_window,
        pool_stride = d.network.pool_stride,
        block_count = d.network.block_count,
        block_kernel = d.network.block_kernel,
        block_channels = d.network.block_channels,
        block_depth = d.network.block_depth,
        gru_hidden = d.network.gru_hidden,
        freeze = d.network.freeze_extractor,
        pop_size = d.ssa.pop_size,
        iterations = d.ssa.iterations,
        st = d.ssa.safety_threshold,
        pf = d.ssa.producer_fraction,
        af = d.ssa.alerter_fraction,
        split_train = d.split.train,
        split_validation = d.split.validation,
        split_test = d.split.test,
    )
}
