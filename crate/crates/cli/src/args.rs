use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heihnn::data::{synth_generate, Dataset, DatasetFiles, Distance, SynthConfig};
use heihnn::diff::Activation;
use heihnn::hor::{HorConfig, HorPlacement};
use heihnn::hypergraph::InteractionNorm;
use heihnn::model::{ModelConfig, OptimizerKind, PgdConfig, TrainConfig};
use heihnn::propagation::HyperedgeConv;
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "heihnn", version, about = "Train and probe hypergraph node classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Train repeated runs and report mean ± std test accuracy.
    Train(TrainCmd),
    /// Compare the four HOR placements under shared seeds.
    AblateHor(TrainCmd),
    /// Sweep α and β over the 7 × 7 grid.
    Sweep(TrainCmd),
    /// Attack test-node features with PGD and report the accuracy drop.
    Perturb(PerturbCmd),
    /// Compare analytic and finite-difference gradients of a small model.
    Gradcheck(GradcheckCmd),
    /// Run the command recorded in a manifest again.
    #[serde(skip)]
    Rerun(RerunCmd),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct TrainCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct PerturbCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// ℓ∞ radius of the perturbation.
    #[arg(long, default_value_t = 0.002)]
    pub eps: f64,
    #[arg(long, default_value_t = 10)]
    pub pgd_steps: usize,
    /// Step size per PGD iteration; defaults to eps / 4.
    #[arg(long)]
    pub pgd_step_size: Option<f64>,
    /// Model snapshot to attack.
    #[arg(long, conflicts_with = "train_first", required_unless_present = "train_first")]
    pub snapshot: Option<PathBuf>,
    /// Train a model with --seed first instead of loading a snapshot.
    #[arg(long)]
    pub train_first: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct GradcheckCmd {
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-5)]
    pub eps_fd: f64,
    /// Seed of the random instance and the model.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct RerunCmd {
    /// A manifest.json written by an earlier run.
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DataArgs {
    /// Directory with hypergraph.txt or graph.txt, features.txt, labels.txt
    /// and an optional manifest.txt.
    #[arg(long, conflicts_with = "synth")]
    pub dataset_dir: Option<PathBuf>,
    /// Use the built-in synthetic benchmark.
    #[arg(long)]
    pub synth: bool,
    /// Neighborhood radius when building hyperedges from graph.txt.
    #[arg(long, default_value_t = 1)]
    pub hops: usize,
    /// Build hyperedges from the k nearest neighbors in feature space.
    #[arg(long)]
    pub knn: Option<usize>,
    #[arg(long, value_enum, default_value_t = DistanceArg::Euclidean)]
    pub knn_distance: DistanceArg,
    /// Chance that a synthetic hyperedge gains a member from another class.
    #[arg(long, default_value_t = 0.0)]
    pub synth_outlier_rate: f64,
    #[arg(long, default_value_t = 0.9)]
    pub synth_homophily: f64,
    #[arg(long, default_value_t = 1.0)]
    pub synth_noise: f64,
    #[arg(long, default_value_t = 7)]
    pub synth_seed: u64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    /// Width of the attention query/key projections.
    #[arg(long, default_value_t = 64)]
    pub att_width: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Stages that apply hyperedge outlier removal.
    #[arg(long, value_enum, default_value_t = HorArg::Neither)]
    pub hor: HorArg,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub hor_tau: f64,
    #[arg(long, default_value_t = 1)]
    pub hor_min_keep: usize,
    /// Keep masked attention weights as they are instead of renormalizing.
    #[arg(long)]
    pub hor_no_renormalize: bool,
    /// 0 selects the single-step hyperedge convolution, K ≥ 1 a Chebyshev
    /// filter of order K.
    #[arg(long, default_value_t = 0)]
    pub chebyshev_k: usize,
    /// Keep the Chebyshev coefficients at their identity-filter start.
    #[arg(long)]
    #[serde(default)]
    pub freeze_chebyshev: bool,
    /// Nonlinearity applied after every propagation stage.
    #[arg(long, value_enum, default_value_t = ActivationArg::Relu)]
    #[serde(default)]
    pub activation: ActivationArg,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub attention: Switch,
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
    #[arg(long, value_enum, default_value_t = NormArg::RowSum)]
    pub normalization: NormArg,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.0005)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    /// Stop once the training loss has not improved for this many epochs.
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    pub optimizer: OptimizerArg,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct RunArgs {
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// Run i uses seed + i for its split and its initialization.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent runs trained in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value = "heihnn-out")]
    pub out_dir: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Switch {
    On,
    Off,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HorArg {
    Neither,
    S1,
    S3,
    Both,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceArg {
    Euclidean,
    Cosine,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormArg {
    RowSum,
    /// Normalize by hyperedge sizes instead of interaction-graph degrees.
    #[value(alias = "paper-literal")]
    EdgeDegree,
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivationArg {
    #[default]
    Relu,
    Identity,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerArg {
    Adam,
    Sgd,
}

impl DataArgs {
    /// Exactly one of `--dataset-dir` and `--synth` must be given.
    pub fn check(&self) -> Result<(), String> {
        if self.dataset_dir.is_none() && !self.synth {
            return Err("no dataset: pass --dataset-dir DIR or --synth".into());
        }
        Ok(())
    }

    pub fn load(&self, split_seed: u64) -> heihnn::Result<Dataset> {
        let distance = match self.knn_distance {
            DistanceArg::Euclidean => Distance::Euclidean,
            DistanceArg::Cosine => Distance::Cosine,
        };
        match &self.dataset_dir {
            Some(dir) => {
                let files = DatasetFiles::in_dir(dir, self.hops, self.knn.map(|k| (k, distance)))?;
                heihnn::data::load_dataset(&files, split_seed)
            }
            None => synth_generate(&SynthConfig {
                outlier_rate: self.synth_outlier_rate,
                homophily: self.synth_homophily,
                feature_noise: self.synth_noise,
                seed: self.synth_seed,
                ..SynthConfig::default()
            })?
            .resplit(split_seed),
        }
    }

    pub fn describe(&self) -> String {
        match &self.dataset_dir {
            Some(dir) => dir.display().to_string(),
            None => format!("synthetic (seed {})", self.synth_seed),
        }
    }
}

impl ModelArgs {
    pub fn config(&self, seed: u64) -> ModelConfig {
        let mut cfg = ModelConfig {
            layers: self.layers,
            hidden: self.hidden,
            att_width: self.att_width,
            alpha: self.alpha,
            beta: self.beta,
            hor: HorConfig {
                tau: self.hor_tau,
                min_keep: self.hor_min_keep,
                renormalize: !self.hor_no_renormalize,
            },
            dropout: self.dropout,
            normalization: match self.normalization {
                NormArg::RowSum => InteractionNorm::RowSum,
                NormArg::EdgeDegree => InteractionNorm::EdgeDegree,
            },
            seed,
            ..ModelConfig::default()
        };
        cfg.stage.use_attention = self.attention == Switch::On;
        cfg.stage.he2he = HyperedgeConv::from_order(self.chebyshev_k);
        cfg.stage.learn_chebyshev = !self.freeze_chebyshev;
        cfg.set_activation(match self.activation {
            ActivationArg::Relu => Activation::Relu,
            ActivationArg::Identity => Activation::Identity,
        });
        cfg.stage.set_hor_placement(match self.hor {
            HorArg::Neither => HorPlacement::Neither,
            HorArg::S1 => HorPlacement::OnlyS1,
            HorArg::S3 => HorPlacement::OnlyS3,
            HorArg::Both => HorPlacement::Both,
        });
        cfg
    }
}

impl TrainArgs {
    pub fn config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            epochs: self.epochs,
            patience: self.patience,
            optimizer: match self.optimizer {
                OptimizerArg::Adam => OptimizerKind::Adam,
                OptimizerArg::Sgd => OptimizerKind::Sgd,
            },
        }
    }
}

impl PerturbCmd {
    pub fn pgd(&self) -> PgdConfig {
        PgdConfig {
            eps: self.eps,
            steps: self.pgd_steps,
            step_size: self.pgd_step_size,
        }
    }
}
