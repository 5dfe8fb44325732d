use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use triplet_watershed::classifier::EnsembleConfig;
use triplet_watershed::data::SplitMode;
use triplet_watershed::nn::Architecture;
use triplet_watershed::trainer::{TrainConfig, TripletPool};

#[derive(Debug, Parser)]
#[command(name = "twshed", version, about = "Triplet-trained watershed classification of image cubes")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic labelled cube.
    MakeSynth(SynthArgs),
    /// Train the embedding network.
    Train(TrainArgs),
    /// Label every graph vertex with the ensemble watershed.
    Predict(PredictArgs),
    /// Score predictions on the test split.
    Eval(EvalArgs),
    /// Print edge-set statistics as JSON.
    GraphStats(GraphStatsArgs),
    /// Split, train, predict and evaluate, optionally over several seeds.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub h: usize,
    #[arg(long, default_value_t = 64)]
    pub w: usize,
    #[arg(long, default_value_t = 8)]
    pub bands: usize,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 0.5)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 3.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0.0)]
    pub unlabeled_frac: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset directory (cube.json, cube.f32, labels.u16).
    #[arg(long)]
    pub data: PathBuf,
    /// Principal components kept (default: all bands).
    #[arg(long)]
    pub pca_k: Option<usize>,
    /// Leading components used for the Euclidean MST (default: min(32, pca-k)).
    #[arg(long)]
    pub emst_dims: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Fraction of each class used for training.
    #[arg(long, default_value_t = 0.1, conflicts_with = "per_class")]
    pub train_frac: f64,
    /// `N,M`: N training pixels from classes larger than N, else M.
    #[arg(long, value_parser = parse_per_class)]
    pub per_class: Option<(usize, usize)>,
}

impl SplitArgs {
    pub fn mode(&self) -> SplitMode {
        match self.per_class {
            Some((large, small)) => SplitMode::PerClass { large, small },
            None => SplitMode::Fraction {
                fraction: self.train_frac,
            },
        }
    }
}

fn parse_per_class(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected N,M")?;
    let n = a.trim().parse().map_err(|_| format!("bad count `{a}`"))?;
    let m = b.trim().parse().map_err(|_| format!("bad count `{b}`"))?;
    Ok((n, m))
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ArchArg {
    Mlp,
    Conv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PoolArg {
    All,
    TrainOnly,
}

#[derive(Debug, Args)]
pub struct TrainOpts {
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    /// Triplet margin.
    #[arg(long, default_value_t = 0.2)]
    pub alpha: f64,
    #[arg(long, default_value_t = 64)]
    pub embed_dim: usize,
    #[arg(long, value_enum, default_value_t = ArchArg::Mlp)]
    pub arch: ArchArg,
    /// Side of the square input patch (odd).
    #[arg(long, default_value_t = 11)]
    pub patch_size: usize,
    /// Fraction of each training class drawn as seeds per epoch.
    #[arg(long, default_value_t = 0.4)]
    pub seed_frac: f64,
    #[arg(long, default_value_t = 0.01)]
    pub lr_base: f64,
    #[arg(long, default_value_t = 0.1)]
    pub lr_max: f64,
    /// Iterations per half-cycle of the learning rate (default: 4 epochs).
    #[arg(long)]
    pub cycle_len: Option<usize>,
    #[arg(long, value_enum, default_value_t = PoolArg::All)]
    pub triplet_pool: PoolArg,
    /// Draw seeds once instead of every epoch.
    #[arg(long)]
    pub fixed_seeds: bool,
    /// Stop after this many epochs at perfect out-of-box accuracy and near-zero loss.
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
}

impl TrainOpts {
    pub fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            alpha: self.alpha,
            seed_fraction: self.seed_frac,
            lr_base: self.lr_base,
            lr_max: self.lr_max,
            cycle_len: self.cycle_len,
            embed_dim: self.embed_dim,
            patch_size: self.patch_size,
            arch: match self.arch {
                ArchArg::Mlp => Architecture::mlp(),
                ArchArg::Conv => Architecture::conv(),
            },
            seed,
            patience: self.patience,
            triplet_pool: match self.triplet_pool {
                PoolArg::All => TripletPool::All,
                PoolArg::TrainOnly => TripletPool::TrainOnly,
            },
            fixed_seeds: self.fixed_seeds,
            ..TrainConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub train: TrainOpts,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for the model, log, split and config.
    #[arg(long)]
    pub out: PathBuf,
    /// Continue from an existing model file.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnsembleOpts {
    #[arg(long, default_value_t = 25)]
    pub n_estimators: usize,
    #[arg(long, default_value_t = 0.5)]
    pub feature_frac: f64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Trained model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Split file (default: split.u8 next to the model).
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub ensemble: EnsembleOpts,
    /// Fraction of training pixels each estimator seeds with.
    #[arg(long, default_value_t = 0.5)]
    pub seed_frac: f64,
    /// Ensemble seed (default: the training seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write per-vertex vote counts.
    #[arg(long)]
    pub votes: bool,
}

impl PredictArgs {
    pub fn ensemble(&self, seed: u64) -> EnsembleConfig {
        EnsembleConfig {
            n_estimators: self.ensemble.n_estimators,
            seed_fraction: self.seed_frac,
            feature_fraction: self.ensemble.feature_frac,
            seed: self.seed.unwrap_or(seed),
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Predicted raster written by `predict`.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    /// Directory for report.json and report.csv.
    #[arg(long)]
    pub out: PathBuf,
    /// Also compute mean average precision of the model's embeddings.
    #[arg(long, requires = "model")]
    pub map: bool,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Number of MAP queries to sample.
    #[arg(long)]
    pub map_subsample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GraphStatsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Count orphan components against this split's training pixels.
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Write the weighted edge list as text.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub train: TrainOpts,
    #[command(flatten)]
    pub ensemble: EnsembleOpts,
    /// Fraction of training pixels each ensemble estimator seeds with.
    #[arg(long, default_value_t = 0.5)]
    pub ensemble_seed_frac: f64,
    /// Base seed; run r uses seed + r.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long)]
    pub map: bool,
    #[arg(long)]
    pub map_subsample: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}
