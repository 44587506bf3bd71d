//! The `organ` command line. Every verb writes `manifest.txt` next to its
//! artifacts; passing that file back as `--config` repeats the run.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use organ_core::mol::FragmentTable;
use organ_core::objectives::{self, Task};

use crate::checkpoint::Checkpoint;
use crate::config::TrainConfig;
use crate::corpus::read_lines;
use crate::error::{read_text, write, OrganError, Result};
use crate::evaluate::{reference_subset, sample_texts, Evaluator};
use crate::plot::emit_plot_data;
use crate::report::{sweep_csv, to_csv, MetricReport};
use crate::trainer::{lambda_sweep, Trainer};

pub const MANIFEST: &str = "manifest.txt";
pub const METRICS: &str = "metrics.csv";
pub const MODEL: &str = "model.ckpt";
pub const SAMPLES: &str = "samples.txt";

#[derive(Debug, Parser)]
#[command(name = "organ", version, about = "Objective-reinforced adversarial sequence generation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// MLE pretraining of the generator, then of the critic.
    Pretrain(Common),
    /// Adversarial training; pretrains first unless --checkpoint is given.
    Train(Common),
    /// Writes --count decoded samples, one per line.
    Sample(Common),
    /// Samples and reports metrics as a table and as CSV.
    Eval(Common),
    /// Adversarial training from one checkpoint for each of `sweep_lambdas`.
    Sweep(Common),
    /// Scores an existing file of sequences against named objectives.
    Metrics {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// One (epoch, value) series file per column of a metrics log.
    Plot {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Number of samples; same as `--set eval_samples=N`.
    #[arg(long)]
    pub count: Option<usize>,
    /// Objective list; same as `--set objectives=...`.
    #[arg(long)]
    pub objective: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_parser = ["gan", "wgan"])]
    pub mode: Option<String>,
}

impl Common {
    /// Checkpoint config (when one is given), then the config file, then
    /// `--set`, then the dedicated flags.
    fn resolve(&self, base: Option<&TrainConfig>) -> Result<TrainConfig> {
        let mut c = base.cloned().unwrap_or_default();
        if let Some(p) = &self.config {
            c.apply_text(&read_text(p)?).map_err(|e| match e {
                OrganError::Config(m) => OrganError::Config(format!("{}: {m}", p.display())),
                other => other,
            })?;
        }
        for kv in &self.set {
            c.apply_override(kv)?;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(n) = self.count {
            c.eval_samples = n;
        }
        if let Some(o) = &self.objective {
            c.set("objectives", o)?;
        }
        if let Some(l) = self.lambda {
            c.lambda = l;
        }
        if let Some(m) = &self.mode {
            c.set("mode", m)?;
        }
        Ok(c)
    }

    fn out(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    fn checkpoint(&self) -> Result<Option<Checkpoint>> {
        self.checkpoint.as_deref().map(Checkpoint::load).transpose()
    }

    fn require_checkpoint(&self) -> Result<Checkpoint> {
        self.checkpoint()?.ok_or_else(|| OrganError::Usage("--checkpoint is required".into()))
    }
}

/// Config snapshot with the code version and command as comments.
pub fn manifest(verb: &str, config: &TrainConfig, checkpoint: Option<&Path>) -> String {
    let mut out = format!("# organ {}\n# command: {verb}\n", env!("CARGO_PKG_VERSION"));
    if let Some(p) = checkpoint {
        out.push_str(&format!("# checkpoint: {}\n", p.display()));
    }
    out + &config.to_text()
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    write(&dir.join(name), text.as_bytes())
}

fn lines(items: &[String]) -> String {
    items.iter().map(|s| format!("{s}\n")).collect()
}

fn progress(msg: std::fmt::Arguments) {
    let _ = writeln!(std::io::stderr(), "{msg}");
}

fn pretrain_log(trainer: &mut Trainer) -> Result<String> {
    let mut csv = String::from("phase,epoch,loss\n");
    trainer.pretrain(&mut |row| {
        progress(format_args!("pretrain {} epoch {} loss {:.6}", row.phase, row.epoch, row.loss));
        csv.push_str(&format!("{},{},{:.6}\n", row.phase, row.epoch, row.loss));
    })?;
    Ok(csv)
}

fn adversarial(trainer: &mut Trainer, out: &Path) -> Result<Vec<MetricReport>> {
    let every = trainer.config.checkpoint_every;
    trainer.train_adversarial(&mut |t, r| {
        progress(format_args!(
            "epoch {} validity {:.3} diversity {:.3} d_loss {:.4}",
            r.epoch,
            r.validity,
            r.diversity,
            r.d_loss.unwrap_or(f64::NAN)
        ));
        if every > 0 && t.epoch % every == 0 {
            t.checkpoint().save(&out.join(MODEL))?;
        }
        Ok(())
    })
}

fn run_pretrain(c: &Common) -> Result<()> {
    let config = c.resolve(None)?;
    let out = c.out();
    write_text(&out, MANIFEST, &manifest("pretrain", &config, None))?;
    let mut trainer = Trainer::new(config)?;
    let log = pretrain_log(&mut trainer)?;
    write_text(&out, METRICS, &log)?;
    trainer.checkpoint().save(&out.join(MODEL))
}

/// Trainer for adversarial runs: resumed from `--checkpoint` or freshly
/// pretrained.
fn adversarial_trainer(c: &Common, verb: &str) -> Result<(Trainer, PathBuf)> {
    let out = c.out();
    let trainer = match c.checkpoint()? {
        Some(ckpt) => {
            let config = c.resolve(Some(&ckpt.config))?;
            write_text(&out, MANIFEST, &manifest(verb, &config, c.checkpoint.as_deref()))?;
            Trainer::from_checkpoint(ckpt, config)?
        }
        None => {
            let config = c.resolve(None)?;
            write_text(&out, MANIFEST, &manifest(verb, &config, None))?;
            let mut t = Trainer::new(config)?;
            pretrain_log(&mut t)?;
            t
        }
    };
    Ok((trainer, out))
}

fn run_train(c: &Common) -> Result<()> {
    let (mut trainer, out) = adversarial_trainer(c, "train")?;
    let reports = adversarial(&mut trainer, &out)?;
    write_text(&out, METRICS, &to_csv(&reports))?;
    write_text(&out, SAMPLES, &lines(&trainer.last_samples))?;
    trainer.checkpoint().save(&out.join(MODEL))
}

fn run_sweep(c: &Common) -> Result<()> {
    let (trainer, out) = adversarial_trainer(c, "sweep")?;
    let ckpt = trainer.checkpoint();
    let runs = lambda_sweep(&ckpt, &trainer.config, &trainer.config.sweep_lambdas)?;
    write_text(&out, METRICS, &sweep_csv(&runs))?;
    ckpt.save(&out.join(MODEL))
}

fn run_sample(c: &Common) -> Result<()> {
    let ckpt = c.require_checkpoint()?;
    let config = c.resolve(Some(&ckpt.config))?;
    let out = c.out();
    write_text(&out, MANIFEST, &manifest("sample", &config, c.checkpoint.as_deref()))?;
    let texts = sample_texts(&ckpt.generator, &ckpt.vocab, config.eval_samples, config.seed)?;
    write_text(&out, SAMPLES, &lines(&texts))
}

fn run_eval(c: &Common) -> Result<()> {
    let ckpt = c.require_checkpoint()?;
    let config = c.resolve(Some(&ckpt.config))?;
    let out = c.out();
    write_text(&out, MANIFEST, &manifest("eval", &config, c.checkpoint.as_deref()))?;
    let (count, seed) = (config.eval_samples, config.seed);
    let trainer = Trainer::from_checkpoint(ckpt, config)?;
    let (_, report) = trainer.evaluate(count, seed)?;
    let csv = to_csv(std::slice::from_ref(&report));
    print!("{}\n{csv}", report.table());
    write_text(&out, METRICS, &csv)
}

/// Fragment table for standalone scoring: the checkpoint's, or one built
/// from the configured fragment corpus.
fn metrics_table(c: &Common, config: &TrainConfig) -> Result<Option<Arc<FragmentTable>>> {
    if let Some(ckpt) = c.checkpoint()? {
        return Ok(ckpt.fragments.map(Arc::new));
    }
    let path = config.fragment_corpus.clone().unwrap_or_else(|| config.corpus.clone());
    if path.as_os_str().is_empty() {
        return Ok(None);
    }
    let mols: Vec<_> = read_lines(&path)?.iter().filter_map(|l| organ_core::mol::parse_smiles(l).ok()).collect();
    Ok(Some(Arc::new(FragmentTable::build(&mols)?)))
}

fn run_metrics(input: &Path, c: &Common) -> Result<()> {
    let mut config = c.resolve(None)?;
    let texts = read_lines(input)?;
    if let Some(first) = config.objectives.first() {
        config.task = Task::of_objective(first).ok_or_else(|| organ_core::Error::UnknownObjective(first.clone()))?;
    }
    let names = config.objective_names();
    let needs_table = names.iter().any(|n| n == "synthesizability");
    let table = if needs_table { metrics_table(c, &config)? } else { None };
    let objectives = names.iter().map(|n| objectives::lookup(n, table.as_ref())).collect::<organ_core::Result<Vec<_>>>()?;
    // Validity and the duplicate/length columns come from the evaluator;
    // the named objectives are scored here.
    let evaluator = Evaluator::new(config.task, None, &reference_subset(&[], 0, config.seed))?;
    let base = evaluator.score_texts(&texts)?;
    let mut out = format!("samples\t{}\nvalidity\t{:.6}\n", base.samples, base.validity);
    let mut csv_cols = vec!["samples".to_string(), "validity".to_string()];
    let mut csv_vals = vec![base.samples.to_string(), format!("{:.6}", base.validity)];
    for o in objectives.iter().filter(|o| o.name() != "validity") {
        let scores: Vec<f64> = texts.iter().filter_map(|t| o.score(t)).collect();
        let mean = if scores.is_empty() { 0.0 } else { scores.iter().sum::<f64>() / scores.len() as f64 };
        out.push_str(&format!("{}\t{mean:.6}\n", o.name()));
        csv_cols.push(o.name().to_string());
        csv_vals.push(format!("{mean:.6}"));
    }
    print!("{out}");
    if let Some(dir) = &c.out {
        write_text(dir, MANIFEST, &manifest("metrics", &config, None))?;
        write_text(dir, METRICS, &format!("{}\n{}\n", csv_cols.join(","), csv_vals.join(",")))?;
    }
    Ok(())
}

fn run_plot(input: &Path, c: &Common) -> Result<()> {
    let out = c.out();
    let series = emit_plot_data(&read_text(input)?, input)?;
    for s in &series {
        write_text(&out, &format!("{}.tsv", s.name), &s.to_tsv())?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Pretrain(c) => run_pretrain(c),
        Command::Train(c) => run_train(c),
        Command::Sample(c) => run_sample(c),
        Command::Eval(c) => run_eval(c),
        Command::Sweep(c) => run_sweep(c),
        Command::Metrics { input, common } => run_metrics(input, common),
        Command::Plot { input, common } => run_plot(input, common),
    }
}

/// Parses `args`, runs, and returns the process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("organ: {e}");
            e.exit_code()
        }
    }
}
