use std::path::{Path, PathBuf};

use nflab_core::linalg::RngState;
use nflab_core::net::NetworkConfig;
use nflab_core::optim::TrainConfig;
use nflab_core::scaling::SweepSpec;
use nflab_core::tasks::{
    load_image, make_curve_dataset, make_image_dataset, make_occupancy_dataset, synth_image, Dataset, ImageGrid,
    OccupancyScene, SynthKind,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum ImageSource {
    Synth {
        pattern: SynthKind,
        size: usize,
        #[serde(default = "three")]
        channels: usize,
        #[serde(default)]
        image_seed: u64,
    },
    /// A PGM/PPM file; relative paths resolve against the config file.
    File { path: PathBuf },
}

fn three() -> usize {
    3
}

fn yes() -> bool {
    true
}

fn half() -> f64 {
    0.5
}

impl ImageSource {
    pub fn load(&self) -> Result<ImageGrid> {
        match self {
            ImageSource::Synth {
                pattern,
                size,
                channels,
                image_seed,
            } => Ok(synth_image(*pattern, *size, *channels, &mut RngState::new(*image_seed))?),
            ImageSource::File { path } => load_image(path).map_err(|e| match e {
                nflab_core::Error::Io(io) => CliError::io(path, io),
                other => CliError::config(format!("{}: {other}", path.display())),
            }),
        }
    }

    fn resolve(&mut self, base: &Path) {
        if let ImageSource::File { path } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskConfig {
    Curve {
        n: usize,
        #[serde(default = "yes")]
        normalized: bool,
    },
    /// `n` pixels sampled from the image.
    Image { image: ImageSource, n: usize },
    /// 4× super-resolution of the (downsampled) image.
    Superres { image: ImageSource },
    Occupancy {
        #[serde(default = "OccupancyScene::sphere_torus")]
        scene: OccupancyScene,
        train_points: usize,
        eval_points: usize,
        #[serde(default = "half")]
        threshold: f64,
    },
}

impl TaskConfig {
    pub fn name(&self) -> &'static str {
        match self {
            TaskConfig::Curve { .. } => "curve",
            TaskConfig::Image { .. } => "image",
            TaskConfig::Superres { .. } => "superres",
            TaskConfig::Occupancy { .. } => "occupancy",
        }
    }

    /// The regression dataset for curve, image and occupancy tasks, with `n` overriding the size.
    pub fn dataset(&self, seed: u64, n: Option<usize>) -> Result<Dataset> {
        let rng = RngState::new(seed).derive("data");
        match self {
            TaskConfig::Curve { n: size, normalized } => Ok(make_curve_dataset(n.unwrap_or(*size), *normalized)?),
            TaskConfig::Image { image, n: size } => {
                let img = image.load()?;
                Ok(make_image_dataset(&img, n.unwrap_or(*size), &mut rng.derive("pixels"))?)
            }
            TaskConfig::Occupancy {
                scene, train_points, ..
            } => Ok(make_occupancy_dataset(
                scene,
                n.unwrap_or(*train_points),
                &mut rng.derive("train"),
            )?),
            TaskConfig::Superres { .. } => Err(CliError::config(
                "the superres task has no sample dataset; use the superres subcommand",
            )),
        }
    }
}

/// Widths, sizes and seed counts for the diagnostic subcommands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    #[serde(default)]
    pub widths: Vec<usize>,
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default = "five")]
    pub seeds: usize,
    #[serde(default = "four")]
    pub n_out: usize,
}

fn five() -> usize {
    5
}

fn four() -> usize {
    4
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            widths: Vec::new(),
            sizes: Vec::new(),
            seeds: five(),
            n_out: four(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Master seed; also the network seed of single-network runs.
    #[serde(default)]
    pub seed: u64,
    pub task: TaskConfig,
    pub network: NetworkConfig,
    #[serde(default)]
    pub train: Option<TrainConfig>,
    #[serde(default)]
    pub probe: Option<ProbeConfig>,
}

impl RunConfig {
    /// Applies overrides and pins derived fields so the result can be replayed as-is.
    pub fn effective(mut self, seed: Option<u64>, seeds: Option<usize>) -> Result<Self> {
        if let Some(s) = seed {
            self.seed = s;
        }
        self.network.seed = self.seed;
        if let Some(t) = self.train.as_mut() {
            t.seed = self.seed;
            t.validate()?;
        }
        if let Some(k) = seeds {
            self.probe.get_or_insert_with(ProbeConfig::default).seeds = k;
        }
        self.network.validate()?;
        Ok(self)
    }

    pub fn train(&self) -> Result<&TrainConfig> {
        self.train
            .as_ref()
            .ok_or_else(|| CliError::config("config has no \"train\" section"))
    }

    pub fn probe(&self) -> ProbeConfig {
        self.probe.clone().unwrap_or_default()
    }

    fn resolve_paths(&mut self, base: &Path) {
        match &mut self.task {
            TaskConfig::Image { image, .. } | TaskConfig::Superres { image } => image.resolve(base),
            _ => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schema_version: u32,
    pub sweeps: Vec<SweepSpec>,
}

impl SweepConfig {
    pub fn effective(mut self, seed: Option<u64>) -> Result<Self> {
        if self.sweeps.is_empty() {
            return Err(CliError::config("sweep config lists no sweeps"));
        }
        for spec in &mut self.sweeps {
            if let Some(s) = seed {
                spec.master_seed = s;
            }
            spec.validate()?;
        }
        let mut labels: Vec<&str> = self.sweeps.iter().map(|s| s.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::config("sweep labels must be unique"));
        }
        Ok(self)
    }
}

trait Versioned {
    fn version(&self) -> u32;
}

impl Versioned for RunConfig {
    fn version(&self) -> u32 {
        self.schema_version
    }
}

impl Versioned for SweepConfig {
    fn version(&self) -> u32 {
        self.schema_version
    }
}

fn read_versioned<T: DeserializeOwned + Versioned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: T = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    if value.version() != SCHEMA_VERSION {
        return Err(CliError::config(format!(
            "{}: schema_version {} is not supported (expected {SCHEMA_VERSION})",
            path.display(),
            value.version()
        )));
    }
    Ok(value)
}

pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let mut cfg: RunConfig = read_versioned(path)?;
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    // Absolute, so the echoed config replays from any directory.
    let base = std::fs::canonicalize(dir).unwrap_or_else(|_| dir.to_path_buf());
    cfg.resolve_paths(&base);
    Ok(cfg)
}

pub fn load_sweep_config(path: &Path) -> Result<SweepConfig> {
    read_versioned(path)
}
