use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use heihnn::data::{synth_generate, write_features, Dataset, SynthConfig};
use heihnn::model::{
    ablate_hor, evaluate, format_report, mean_std, model_grad_check, pgd_perturb, run_repeats, sweep, train, Model,
    ModelConfig, Snapshot, TrainConfig, ALPHA_BETA_GRID,
};
use heihnn::Error;
use serde::{Deserialize, Serialize};

use crate::args::{Command, GradcheckCmd, PerturbCmd, RerunCmd, TrainCmd};

/// Passing threshold of `gradcheck`.
const GRADCHECK_TOL: f64 = 1e-4;

pub enum Failure {
    /// Bad flags or values; exit code 2.
    Usage(String),
    /// Anything that went wrong while running; exit code 1.
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Diverged(epoch) => Failure::Runtime(format!("training diverged: non-finite loss at epoch {epoch}")),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Everything needed to repeat a run.
#[derive(Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    #[serde(flatten)]
    pub command: Command,
    /// The configurations as the library saw them, for reading only.
    #[serde(default)]
    pub resolved: BTreeMap<String, String>,
}

pub fn run(command: &Command) -> Outcome {
    match command {
        Command::Train(c) => cmd_train(c, command),
        Command::AblateHor(c) => cmd_ablate_hor(c, command),
        Command::Sweep(c) => cmd_sweep(c, command),
        Command::Perturb(c) => cmd_perturb(c, command),
        Command::Gradcheck(c) => cmd_gradcheck(c, command),
        Command::Rerun(c) => cmd_rerun(c),
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn configs(c: &TrainCmd) -> Result<(ModelConfig, TrainConfig), Failure> {
    c.data.check().map_err(Failure::Usage)?;
    let cfg = c.model.config(c.run.seed);
    let tcfg = c.train.config();
    cfg.validate().map_err(usage)?;
    tcfg.validate().map_err(usage)?;
    if c.run.repeats == 0 {
        return Err(Failure::Usage("--repeats must be at least 1".into()));
    }
    Ok((cfg, tcfg))
}

fn write_manifest(dir: &Path, command: &Command, cfg: Option<&ModelConfig>, tcfg: Option<&TrainConfig>) -> Outcome {
    let mut resolved = BTreeMap::new();
    if let Some(cfg) = cfg {
        resolved.insert("model".to_string(), format!("{cfg:?}"));
    }
    if let Some(tcfg) = tcfg {
        resolved.insert("train".to_string(), format!("{tcfg:?}"));
    }
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.clone(),
        resolved,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Runtime(e.to_string()))?;
    fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn cmd_train(c: &TrainCmd, command: &Command) -> Outcome {
    let (cfg, tcfg) = configs(c)?;
    let data = c.data.load(c.run.seed)?;
    let runs = run_repeats(&cfg, &tcfg, &data, c.run.seed, c.run.repeats, c.run.jobs)?;
    let dir = &c.run.out_dir;
    fs::create_dir_all(dir)?;

    let mut csv = String::from("run,seed,train_acc,test_acc\n");
    println!("dataset: {}", c.data.describe());
    println!("run  seed  train_acc  test_acc");
    for (i, r) in runs.iter().enumerate() {
        csv.push_str(&format!("{i},{},{:.6},{:.6}\n", r.seed, r.train_acc, r.test_acc));
        println!("{i:>3}  {:>4}  {:>9}  {:>8}", r.seed, pct(r.train_acc), pct(r.test_acc));
        fs::write(dir.join(format!("run{i}_history.csv")), r.history.to_csv())?;
        r.history.snapshot.write(&dir.join(format!("run{i}.snapshot")))?;
    }
    let tests: Vec<f64> = runs.iter().map(|r| r.test_acc).collect();
    let trains: Vec<f64> = runs.iter().map(|r| r.train_acc).collect();
    let (mean, std) = mean_std(&tests);
    let (train_mean, _) = mean_std(&trains);
    println!("test accuracy (%): {} ± {}", pct(mean), pct(std));
    fs::write(dir.join("runs.csv"), csv)?;
    fs::write(
        dir.join("report.txt"),
        format_report(&[
            ("runs", runs.len().to_string()),
            ("mean_test_acc", format!("{mean:.6}")),
            ("std_test_acc", format!("{std:.6}")),
            ("mean_train_acc", format!("{train_mean:.6}")),
            ("majority_baseline", format!("{:.6}", data.majority_baseline())),
        ]),
    )?;
    write_manifest(dir, command, Some(&cfg), Some(&tcfg))
}

fn cmd_ablate_hor(c: &TrainCmd, command: &Command) -> Outcome {
    let (cfg, tcfg) = configs(c)?;
    let data = c.data.load(c.run.seed)?;
    let rows = ablate_hor(&cfg, &tcfg, &data, c.run.seed, c.run.repeats, c.run.jobs)?;
    let dir = &c.run.out_dir;
    fs::create_dir_all(dir)?;
    let mut table = String::from("setting   accuracy (%)\n");
    let mut csv = String::from("setting,mean_acc,std_acc\n");
    for r in &rows {
        table.push_str(&format!(
            "{:<9} {} ± {}\n",
            r.placement.label(),
            pct(r.mean),
            pct(r.std)
        ));
        csv.push_str(&format!("{},{:.6},{:.6}\n", r.placement.label(), r.mean, r.std));
    }
    print!("{table}");
    fs::write(dir.join("ablation.txt"), table)?;
    fs::write(dir.join("ablation.csv"), csv)?;
    write_manifest(dir, command, Some(&cfg), Some(&tcfg))
}

fn cmd_sweep(c: &TrainCmd, command: &Command) -> Outcome {
    let (cfg, tcfg) = configs(c)?;
    let data = c.data.load(c.run.seed)?;
    let table = sweep(
        &cfg,
        &tcfg,
        &data,
        &ALPHA_BETA_GRID,
        &ALPHA_BETA_GRID,
        c.run.seed,
        c.run.repeats,
        c.run.jobs,
    )?;
    let dir = &c.run.out_dir;
    fs::create_dir_all(dir)?;
    let matrix = table.to_matrix_text();
    print!("{matrix}");
    let best = table.best();
    println!(
        "best: alpha={} beta={} accuracy (%) {} ± {}",
        best.alpha,
        best.beta,
        pct(best.mean),
        pct(best.std)
    );
    fs::write(dir.join("sweep.txt"), matrix)?;
    fs::write(dir.join("sweep.csv"), table.to_csv())?;
    write_manifest(dir, command, Some(&cfg), Some(&tcfg))
}

fn cmd_perturb(c: &PerturbCmd, command: &Command) -> Outcome {
    c.data.check().map_err(Failure::Usage)?;
    let seed = c.run.seed;
    let cfg = c.model.config(seed);
    let tcfg = c.train.config();
    cfg.validate().map_err(usage)?;
    tcfg.validate().map_err(usage)?;
    let pgd = c.pgd();
    if !(pgd.eps >= 0.0 && pgd.eps.is_finite()) {
        return Err(Failure::Usage(format!(
            "--eps {} must be finite and nonnegative",
            pgd.eps
        )));
    }
    let data = c.data.load(seed)?;
    let dir = &c.run.out_dir;
    fs::create_dir_all(dir)?;
    let mut model = Model::new(cfg, data.feature_width(), data.classes)?;
    match &c.snapshot {
        Some(path) => {
            let snap = Snapshot::read(path)
                .map_err(|e| Failure::Runtime(format!("cannot read snapshot {}: {e}", path.display())))?;
            model.load_snapshot(&snap)?;
        }
        None => {
            let history = train(&mut model, &data, &tcfg)?;
            history.snapshot.write(&dir.join("model.snapshot"))?;
            fs::write(dir.join("history.csv"), history.to_csv())?;
        }
    }
    let clean = evaluate(&model, &data, &data.test_idx)?;
    let x = pgd_perturb(&model, &data, &pgd)?;
    let attacked = Dataset {
        features: x,
        ..data.clone()
    };
    let perturbed = evaluate(&model, &attacked, &data.test_idx)?;
    let dec = 100.0 * clean - 100.0 * perturbed;
    let report = format_report(&[
        ("eps", pgd.eps.to_string()),
        ("steps", pgd.steps.to_string()),
        ("acc", pct(clean)),
        ("ptAcc", pct(perturbed)),
        ("Dec", format!("{dec:.2}")),
    ]);
    print!("{report}");
    fs::write(dir.join("report.txt"), report)?;
    write_features(&dir.join("perturbed_features.txt"), &attacked.features)?;
    write_manifest(dir, command, Some(&cfg), Some(&tcfg))
}

/// A 6-node, 4-hyperedge instance with a small two-layer model.
fn gradcheck_instance(seed: u64) -> heihnn::Result<(Model, Dataset)> {
    let data = synth_generate(&SynthConfig {
        classes: 2,
        nodes_per_class: 3,
        edge_size: 3,
        hyperedges: 4,
        feature_dim: 3,
        seed,
        ..SynthConfig::default()
    })?;
    let cfg = ModelConfig {
        hidden: 4,
        att_width: 3,
        dropout: 0.0,
        seed,
        ..ModelConfig::default()
    };
    let model = Model::new(cfg, data.feature_width(), data.classes)?;
    Ok((model, data))
}

fn cmd_gradcheck(c: &GradcheckCmd, command: &Command) -> Outcome {
    if !(c.eps_fd > 0.0 && c.eps_fd.is_finite()) {
        return Err(Failure::Usage(format!("--eps-fd {} must be positive", c.eps_fd)));
    }
    let (model, data) = gradcheck_instance(c.seed)?;
    let checks = model_grad_check(&model, &data, c.eps_fd)?;
    let mut text = String::from("parameter        max_rel_error\n");
    for check in &checks {
        text.push_str(&format!("{:<16} {:.3e}\n", check.name, check.max_rel_error));
    }
    let worst = checks
        .iter()
        .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
        .expect("a model has parameters");
    text.push_str(&format!(
        "worst: {} entry {:?} rel error {:.3e} (analytic {:.6e}, numeric {:.6e})\n",
        worst.name, worst.worst, worst.max_rel_error, worst.analytic[worst.worst], worst.numeric[worst.worst]
    ));
    print!("{text}");
    if let Some(dir) = &c.out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("gradcheck.txt"), &text)?;
        write_manifest(dir, command, Some(&model.config), None)?;
    }
    if worst.max_rel_error < GRADCHECK_TOL {
        Ok(())
    } else {
        Err(Failure::Runtime(format!(
            "gradient check failed: {} rel error {:.3e} >= {GRADCHECK_TOL:e}",
            worst.name, worst.max_rel_error
        )))
    }
}

fn cmd_rerun(c: &RerunCmd) -> Outcome {
    let text = fs::read_to_string(&c.manifest)
        .map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", c.manifest.display())))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| Failure::Runtime(format!("{} is not a run manifest: {e}", c.manifest.display())))?;
    let mut command = manifest.command;
    if let Some(dir) = &c.out_dir {
        redirect(&mut command, dir.clone());
    }
    run(&command)
}

fn redirect(command: &mut Command, dir: PathBuf) {
    match command {
        Command::Train(c) | Command::AblateHor(c) | Command::Sweep(c) => c.run.out_dir = dir,
        Command::Perturb(c) => c.run.out_dir = dir,
        Command::Gradcheck(c) => c.out_dir = Some(dir),
        Command::Rerun(_) => {}
    }
}
