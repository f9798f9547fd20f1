//! Toy sequence task comparing standard training, a test-time denoiser and
//! composed training.
//!
//! Every input id has several acceptable answers, all valid, and labels are
//! drawn uniformly among them. A position-factorised model trained by maximum
//! likelihood mixes the answers position by position and tends to emit invalid
//! sequences; the composed reward favours whole sequences the denoiser maps
//! back onto a label.

use alloc::vec::Vec;

use rand::seq::index::sample as sample_indices;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{
    normalize_valid, train_discrete, CategoricalSeqModel, CorruptionConfig, DiscreteDenoiser, DiscreteTrainConfig,
    ObjectiveConfig, SeqSpace,
};
use crate::error::{bail, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTaskConfig {
    pub len: usize,
    pub vocab: usize,
    pub inputs: usize,
    /// Size of the valid set.
    pub n_valid: usize,
    pub answers_per_input: usize,
    pub labels_per_input: usize,
}

impl Default for DiscreteTaskConfig {
    fn default() -> Self {
        Self { len: 4, vocab: 6, inputs: 12, n_valid: 24, answers_per_input: 3, labels_per_input: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTask {
    pub space: SeqSpace,
    /// Sorted valid sequence indices.
    pub valid: Vec<usize>,
    /// Acceptable answers per input id, all valid.
    pub answers: Vec<Vec<usize>>,
}

impl DiscreteTask {
    pub fn generate(cfg: &DiscreteTaskConfig, seed: u64) -> Result<Self> {
        let space = SeqSpace::new(cfg.len, cfg.vocab)?;
        if cfg.inputs == 0 || cfg.labels_per_input == 0 {
            bail!(InvalidParameter, "the task needs inputs and labels");
        }
        if !(1..=space.size()).contains(&cfg.n_valid) || !(1..=cfg.n_valid).contains(&cfg.answers_per_input) {
            bail!(
                InvalidParameter,
                "need 1 ≤ answers per input ≤ valid set size ≤ {} sequences",
                space.size()
            );
        }
        let mut rng = rng::seeded(seed);
        let valid = normalize_valid(space, &sample_indices(&mut rng, space.size(), cfg.n_valid).into_vec())?;
        let answers = (0..cfg.inputs)
            .map(|_| {
                sample_indices(&mut rng, valid.len(), cfg.answers_per_input)
                    .into_iter()
                    .map(|i| valid[i])
                    .collect()
            })
            .collect();
        Ok(Self { space, valid, answers })
    }

    pub fn inputs(&self) -> usize {
        self.answers.len()
    }

    pub fn is_valid(&self, y: usize) -> bool {
        self.valid.binary_search(&y).is_ok()
    }

    pub fn is_correct(&self, x: usize, y: usize) -> bool {
        self.answers[x].contains(&y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteExperimentConfig {
    pub task: DiscreteTaskConfig,
    /// Objective of the composed arm; the standard arm uses `λ = 1, scale = 0`.
    pub objective: ObjectiveConfig,
    pub corruption: CorruptionConfig,
    pub lr: f64,
    pub steps: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub n_seeds: usize,
}

impl Default for DiscreteExperimentConfig {
    fn default() -> Self {
        Self {
            task: DiscreteTaskConfig::default(),
            objective: ObjectiveConfig::default(),
            corruption: CorruptionConfig::default(),
            lr: 0.5,
            steps: 500,
            n_samples: 8,
            seed: 0,
            n_seeds: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscreteArm {
    Standard,
    /// Standard model with the hard denoiser applied to its predictions.
    TestTimeDenoiser,
    /// The composed arm's base model on its own.
    ComposedBase,
    /// Hard denoiser applied to the composed arm's base model.
    Composed,
}

impl DiscreteArm {
    pub const ALL: [DiscreteArm; 4] =
        [DiscreteArm::Standard, DiscreteArm::TestTimeDenoiser, DiscreteArm::ComposedBase, DiscreteArm::Composed];

    pub fn name(self) -> &'static str {
        match self {
            DiscreteArm::Standard => "standard",
            DiscreteArm::TestTimeDenoiser => "test_time_denoiser",
            DiscreteArm::ComposedBase => "composed_base",
            DiscreteArm::Composed => "composed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteArmMetrics {
    pub arm: DiscreteArm,
    pub valid_rate: f64,
    pub correct_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSeedReport {
    pub seed: u64,
    pub arms: Vec<DiscreteArmMetrics>,
}

impl DiscreteSeedReport {
    pub fn arm(&self, arm: DiscreteArm) -> &DiscreteArmMetrics {
        self.arms.iter().find(|m| m.arm == arm).expect("every arm is reported")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteReport {
    pub config: DiscreteExperimentConfig,
    pub task: DiscreteTask,
    pub seeds: Vec<DiscreteSeedReport>,
}

/// Train both models on freshly drawn labels and score all four arms on every input.
pub fn run_discrete_seed(
    task: &DiscreteTask,
    denoiser: &DiscreteDenoiser,
    cfg: &DiscreteExperimentConfig,
    seed: u64,
) -> Result<DiscreteSeedReport> {
    let mut rng = rng::substream(seed, 2);
    let mut labels = Vec::with_capacity(task.inputs() * cfg.task.labels_per_input);
    for (x, answers) in task.answers.iter().enumerate() {
        for _ in 0..cfg.task.labels_per_input {
            labels.push((x, answers[rng.random_range(0..answers.len())]));
        }
    }
    let init = CategoricalSeqModel::uniform(task.inputs(), task.space)?;
    let composed_cfg = DiscreteTrainConfig {
        objective: cfg.objective,
        lr: cfg.lr,
        steps: cfg.steps,
        n_samples: cfg.n_samples,
        seed,
    };
    let standard_cfg = DiscreteTrainConfig {
        objective: ObjectiveConfig { lambda: 1.0, scale: 0.0, ..cfg.objective },
        ..composed_cfg.clone()
    };
    let standard = train_discrete(&init, denoiser, &labels, &standard_cfg)?.model;
    let composed = train_discrete(&init, denoiser, &labels, &composed_cfg)?.model;

    let mut arms = Vec::with_capacity(4);
    for arm in DiscreteArm::ALL {
        let (model, denoise) = match arm {
            DiscreteArm::Standard => (&standard, false),
            DiscreteArm::TestTimeDenoiser => (&standard, true),
            DiscreteArm::ComposedBase => (&composed, false),
            DiscreteArm::Composed => (&composed, true),
        };
        let (mut valid, mut correct) = (0, 0);
        for x in 0..task.inputs() {
            let mut y = model.argmax(x)?;
            if denoise {
                y = denoiser.denoise(y);
            }
            valid += usize::from(task.is_valid(y));
            correct += usize::from(task.is_correct(x, y));
        }
        let n = task.inputs() as f64;
        arms.push(DiscreteArmMetrics { arm, valid_rate: valid as f64 / n, correct_rate: correct as f64 / n });
    }
    Ok(DiscreteSeedReport { seed, arms })
}

/// One task and denoiser from `cfg.seed`; seeds `cfg.seed, cfg.seed + 1, …`
/// redraw the labels and the Monte-Carlo samples.
pub fn run_discrete_experiment(cfg: &DiscreteExperimentConfig) -> Result<DiscreteReport> {
    let task = DiscreteTask::generate(&cfg.task, cfg.seed)?;
    let denoiser = DiscreteDenoiser::from_corruptions(task.space, &task.valid, &cfg.corruption)?;
    let seeds = (0..cfg.n_seeds as u64)
        .map(|s| run_discrete_seed(&task, &denoiser, cfg, cfg.seed + s))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteReport { config: cfg.clone(), task, seeds })
}
