use std::path::{Path, PathBuf};

use organ::config::TrainConfig;
use organ::evaluate::sample_texts;
use organ::{Checkpoint, Trainer};
use organ_core::discriminator::CriticMode;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn small(corpus: PathBuf) -> TrainConfig {
    TrainConfig {
        corpus,
        objectives: vec!["solubility".into()],
        pretrain_gen_epochs: 1,
        pretrain_disc_epochs: 1,
        adversarial_epochs: 2,
        batch_size: 16,
        hidden_dim: 8,
        embed_dim: 4,
        critic_filters: 2,
        rollouts: 2,
        eval_samples: 20,
        reference_size: 20,
        ..TrainConfig::default()
    }
}

#[test]
fn resuming_from_bytes_continues_the_same_run() {
    let mut straight = Trainer::new(small(data("molecules_500.txt"))).unwrap();
    straight.pretrain(&mut |_| {}).unwrap();
    let start = straight.checkpoint().to_bytes().unwrap();
    let full = straight.train_adversarial(&mut |_, _| Ok(())).unwrap();

    let mut first = Trainer::from_checkpoint(Checkpoint::from_bytes(&start).unwrap(), small(PathBuf::new())).unwrap();
    let a = first.adversarial_epoch().unwrap();
    let halfway = first.checkpoint().to_bytes().unwrap();
    let mut second = Trainer::from_checkpoint(Checkpoint::from_bytes(&halfway).unwrap(), small(PathBuf::new())).unwrap();
    let b = second.adversarial_epoch().unwrap();

    assert_eq!(vec![a, b], full);
    assert_eq!(second.checkpoint().to_bytes().unwrap(), straight.checkpoint().to_bytes().unwrap());
}

#[test]
fn repeated_corpus_is_memorised() {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("training");
    std::fs::create_dir_all(&dir).unwrap();
    let corpus = dir.join("fifty.txt");
    std::fs::write(&corpus, "CC(=O)OC1=CC=CC=C1\n".repeat(50)).unwrap();
    let config = TrainConfig { mle_lr: 1e-2, hidden_dim: 16, embed_dim: 8, ..small(corpus) };
    let mut t = Trainer::new(config).unwrap();
    for epoch in 0..80 {
        t.pretrain_generator_epoch(epoch).unwrap();
    }
    let texts = sample_texts(&t.generator, t.vocab(), 200, 9).unwrap();
    let hits = texts.iter().filter(|s| *s == "CC(=O)OC1=CC=CC=C1").count();
    assert!(hits >= 180, "{hits}/200 samples reproduce the corpus line");
}

#[test]
fn wasserstein_epochs_keep_weights_clipped() {
    let config = TrainConfig { mode: CriticMode::Wasserstein, ..small(data("molecules_500.txt")) };
    assert_eq!(config.d_steps(), 5);
    let mut t = Trainer::new(config).unwrap();
    t.pretrain(&mut |_| {}).unwrap();
    for _ in 0..2 {
        let r = t.adversarial_epoch().unwrap();
        assert!(r.d_loss.unwrap().is_finite());
        assert!(t.critic.params().max_abs() <= t.config.clip);
    }
}

#[test]
fn lambda_one_never_asks_for_an_objective() {
    let mut t = Trainer::new(TrainConfig { lambda: 1.0, ..small(data("molecules_500.txt")) }).unwrap();
    assert!(t.current_objective().is_none());
    t.adversarial_epoch().unwrap();
    let half = Trainer::new(small(data("molecules_500.txt"))).unwrap();
    assert_eq!(half.current_objective().map(|o| o.name().to_string()), Some("solubility".into()));
}

#[test]
fn checkpoint_keeps_task_and_mode_honest() {
    let t = Trainer::new(small(data("molecules_500.txt"))).unwrap();
    let ckpt = t.checkpoint();
    let wrong_mode = TrainConfig { mode: CriticMode::Wasserstein, ..small(PathBuf::new()) };
    assert!(Trainer::from_checkpoint(ckpt.clone(), wrong_mode).is_err());
    let music = TrainConfig { task: organ_core::objectives::Task::Music, objectives: vec!["tonality".into()], ..small(PathBuf::new()) };
    assert!(Trainer::from_checkpoint(ckpt, music).is_err());
}
