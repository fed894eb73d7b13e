//! Repeated runs, the α/β sweep and the HOR ablation.
//!
//! Run `i` of a batch uses seed `base_seed + i` for both the data split and
//! the model initialization, so any single run can be reproduced on its own.
//! Every sweep cell and every ablation row reuses the same seeds; only the
//! configuration differs between them.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::data::Dataset;
use crate::hor::HorPlacement;
use crate::model::{evaluate, train, Model, ModelConfig, TrainConfig, TrainHistory};
use crate::Result;

/// Values of α and β explored by the sensitivity sweep.
pub const ALPHA_BETA_GRID: [f64; 7] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2];

/// Applies `f` to every item on up to `jobs` threads, keeping input order.
pub fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every item was processed"))
        .collect()
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub history: TrainHistory,
}

/// One training run: split and initialization both drawn from `seed`.
pub fn run_once(cfg: &ModelConfig, tcfg: &TrainConfig, data: &Dataset, seed: u64) -> Result<RunResult> {
    let data = data.resplit(seed)?;
    let mut model = Model::new(ModelConfig { seed, ..*cfg }, data.feature_width(), data.classes)?;
    let history = train(&mut model, &data, tcfg)?;
    let (train_acc, test_acc) = match history.last() {
        Some(r) => (r.train_acc, r.test_acc),
        None => (
            evaluate(&model, &data, &data.train_idx)?,
            evaluate(&model, &data, &data.test_idx)?,
        ),
    };
    Ok(RunResult {
        seed,
        train_acc,
        test_acc,
        history,
    })
}

pub fn run_repeats(
    cfg: &ModelConfig,
    tcfg: &TrainConfig,
    data: &Dataset,
    base_seed: u64,
    repeats: usize,
    jobs: usize,
) -> Result<Vec<RunResult>> {
    let seeds: Vec<u64> = (0..repeats as u64).map(|i| base_seed + i).collect();
    parallel_map(&seeds, jobs, |&seed| run_once(cfg, tcfg, data, seed))
        .into_iter()
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub alpha: f64,
    pub beta: f64,
    pub mean: f64,
    pub std: f64,
    pub accuracies: Vec<f64>,
}

/// Test accuracy over an α × β grid, α-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn cell(&self, a: usize, b: usize) -> &SweepCell {
        &self.cells[a * self.betas.len() + b]
    }

    /// The first cell with the highest mean accuracy.
    pub fn best(&self) -> &SweepCell {
        self.cells
            .iter()
            .fold(&self.cells[0], |best, c| if c.mean > best.mean { c } else { best })
    }

    /// One row per cell: `alpha,beta,mean_acc,std_acc`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,beta,mean_acc,std_acc\n");
        for c in &self.cells {
            out.push_str(&format!("{},{},{:.6},{:.6}\n", c.alpha, c.beta, c.mean, c.std));
        }
        out
    }

    /// Mean accuracies as a matrix: one line per α, one column per β.
    pub fn to_matrix_text(&self) -> String {
        let mut out = String::from("alpha\\beta");
        for b in &self.betas {
            out.push_str(&format!("\t{b:.1}"));
        }
        out.push('\n');
        for (i, a) in self.alphas.iter().enumerate() {
            out.push_str(&format!("{a:.1}"));
            for j in 0..self.betas.len() {
                out.push_str(&format!("\t{:.4}", self.cell(i, j).mean));
            }
            out.push('\n');
        }
        out
    }
}

/// Trains `repeats` models per grid point and collects test accuracies.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    cfg: &ModelConfig,
    tcfg: &TrainConfig,
    data: &Dataset,
    alphas: &[f64],
    betas: &[f64],
    base_seed: u64,
    repeats: usize,
    jobs: usize,
) -> Result<SweepTable> {
    if alphas.is_empty() || betas.is_empty() || repeats == 0 {
        return Err(crate::Error::config(
            "sweep needs a nonempty grid and at least one repeat",
        ));
    }
    let mut tasks = Vec::new();
    for &alpha in alphas {
        for &beta in betas {
            for r in 0..repeats as u64 {
                tasks.push((alpha, beta, base_seed + r));
            }
        }
    }
    let results: Vec<f64> = parallel_map(&tasks, jobs, |&(alpha, beta, seed)| {
        let cell_cfg = ModelConfig { alpha, beta, ..*cfg };
        run_once(&cell_cfg, tcfg, data, seed).map(|r| r.test_acc)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let cells = results
        .chunks(repeats)
        .zip(tasks.chunks(repeats))
        .map(|(accs, t)| {
            let (mean, std) = mean_std(accs);
            SweepCell {
                alpha: t[0].0,
                beta: t[0].1,
                mean,
                std,
                accuracies: accs.to_vec(),
            }
        })
        .collect();
    Ok(SweepTable {
        alphas: alphas.to_vec(),
        betas: betas.to_vec(),
        cells,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub placement: HorPlacement,
    pub mean: f64,
    pub std: f64,
    pub accuracies: Vec<f64>,
}

/// The four HOR placements under shared seeds.
pub fn ablate_hor(
    cfg: &ModelConfig,
    tcfg: &TrainConfig,
    data: &Dataset,
    base_seed: u64,
    repeats: usize,
    jobs: usize,
) -> Result<Vec<AblationRow>> {
    if repeats == 0 {
        return Err(crate::Error::config("ablation needs at least one repeat"));
    }
    let mut tasks = Vec::new();
    for p in HorPlacement::ALL {
        for r in 0..repeats as u64 {
            tasks.push((p, base_seed + r));
        }
    }
    let accs: Vec<f64> = parallel_map(&tasks, jobs, |&(p, seed)| {
        let mut c = *cfg;
        c.stage.set_hor_placement(p);
        run_once(&c, tcfg, data, seed).map(|r| r.test_acc)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(HorPlacement::ALL
        .iter()
        .zip(accs.chunks(repeats))
        .map(|(&placement, a)| {
            let (mean, std) = mean_std(a);
            AblationRow {
                placement,
                mean,
                std,
                accuracies: a.to_vec(),
            }
        })
        .collect())
}
