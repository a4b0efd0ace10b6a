use std::fmt::Write as _;
use std::path::Path;

use toad::analysis::{cluster_probe, divergence_matrix, extract_representations, Convention};
use toad::data::{class_distribution, Corpus, Example};
use toad::model::{decode_checkpoint, encode_checkpoint, EncodedExample, ModelParams};
use toad::training::{
    ablate as run_ablation, evaluate, hyperparameter_search, init_params, train_with, Control, SearchSpace,
    TrainConfig, Variant,
};
use toad::{derive_seed, Error, ModelParams64, Result};

use crate::data::{load, load_corpus, Loaded};
use crate::manifest::OutDir;
use crate::{heatmap, DataArgs, OutArgs};

/// Salt for the clustering probe seed.
const PROBE_STREAM: u64 = 3;

fn resolve_config(path: Option<&Path>, seed: Option<u64>, out: &mut OutDir) -> Result<TrainConfig> {
    let mut config = match path {
        Some(p) => {
            out.input(p);
            TrainConfig::from_file(p)?
        }
        None => TrainConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate()?;
    out.config = Some(config.to_config_string());
    out.seed("config", config.seed);
    out.seed("init", derive_seed(config.seed, 0));
    out.seed("shuffle", derive_seed(config.seed, 1));
    Ok(config)
}

fn examples_tsv(corpus: &Corpus, examples: &[Example]) -> String {
    let mut out = String::from("tweet\ttopic\tstance\n");
    for e in examples {
        let stance = e.stance.map(|s| s.as_str()).unwrap_or("");
        writeln!(out, "{}\t{}\t{stance}", e.document.join(" "), corpus.topics[e.topic_id].name).unwrap();
    }
    out
}

fn load_params(path: &Path, out: &mut OutDir) -> Result<ModelParams64> {
    out.input(path);
    let bytes = std::fs::read(path)?;
    ModelParams::from_store(decode_checkpoint(&bytes)?)
}

pub fn preprocess(input: &Path, args: &OutArgs) -> Result<()> {
    let mut out = OutDir::create(&args.out)?;
    out.input(input);
    let corpus = Corpus::from_tsv(input)?;
    out.write("preprocessed.tsv", corpus.to_tsv())?;
    out.param("kept", corpus.examples.len());
    out.param("rejected", corpus.rejected);
    println!("kept {} rows, rejected {} empty tweets", corpus.examples.len(), corpus.rejected);
    out.finish("preprocess")?;
    Ok(())
}

pub fn split(data: &DataArgs, args: &OutArgs) -> Result<()> {
    let mut out = OutDir::create(&args.out)?;
    let seed = data.seed.unwrap_or(0);
    let Loaded {
        corpus, split, unlabeled, ..
    } = load(&data.data_dir, &data.zero_shot_topic, seed, 1, &mut out)?;
    out.param("zero_shot_topic", &corpus.topics[split.zero_shot_topic].name);
    for (name, part) in [
        ("train.tsv", &split.train),
        ("dev.tsv", &split.dev),
        ("test.tsv", &split.test),
        ("unlabeled.tsv", &split.unlabeled),
    ] {
        out.write(name, examples_tsv(&corpus, part))?;
    }
    let mut dist = String::from("topic\ttotal\tpro\tcon\tneutral\n");
    for d in class_distribution(split.train.iter().chain(&split.dev).chain(&split.test)) {
        writeln!(
            dist,
            "{}\t{}\t{:.2}\t{:.2}\t{:.2}",
            corpus.topics[d.topic_id].name, d.total, d.pro, d.con, d.neutral
        )
        .unwrap();
    }
    out.write("class_distribution.tsv", dist)?;
    println!(
        "train {} dev {} test {} unlabeled {}",
        split.train.len(),
        split.dev.len(),
        split.test.len(),
        unlabeled.map_or(0, |r| r.attached)
    );
    out.finish("split")?;
    Ok(())
}

pub fn train(config: Option<&Path>, data: &DataArgs, args: &OutArgs) -> Result<()> {
    let mut out = OutDir::create(&args.out)?;
    let config = resolve_config(config, data.seed, &mut out)?;
    let Loaded {
        corpus,
        split,
        embeddings,
        ..
    } = load(&data.data_dir, &data.zero_shot_topic, config.seed, config.embedding_dim, &mut out)?;
    let topic = corpus.topics[split.zero_shot_topic].name.clone();
    out.param("zero_shot_topic", &topic);

    let params = init_params(&config, &split)?;
    let outcome = train_with(&config, &split, &embeddings, params, |r| {
        log::info!(
            "epoch {} loss {:.4} dev F_avg {:.4}",
            r.epoch,
            r.losses.total,
            r.dev_f_avg
        );
        Control::Continue
    })?;
    let record = &outcome.record;
    let metrics = evaluate(&outcome.best_params, &embeddings, &split.test)?;

    out.write("model.ckpt", encode_checkpoint(&outcome.best_params.store))?;
    out.write("run.tsv", record.to_tsv())?;
    out.write(
        "test_metrics.tsv",
        metrics.to_tsv(&format!("topic={topic} seed={} best_epoch={}", config.seed, record.best_epoch)),
    )?;
    out.write("config.conf", config.to_config_string())?;
    out.param("best_epoch", record.best_epoch);
    out.param("test_f_avg", metrics.f_avg);
    println!(
        "best epoch {} of {}, dev F_avg {:.2}, test F_avg {:.2}",
        record.best_epoch,
        record.stopped_epoch,
        100.0 * record.best_dev_f_avg,
        100.0 * metrics.f_avg
    );
    out.finish("train")?;
    Ok(())
}

pub fn search(
    config: Option<&Path>,
    data: &DataArgs,
    args: &OutArgs,
    trials: usize,
    workers: usize,
    space: Option<&str>,
) -> Result<()> {
    let mut out = OutDir::create(&args.out)?;
    let base = resolve_config(config, data.seed, &mut out)?;
    let Loaded {
        corpus,
        split,
        embeddings,
        ..
    } = load(&data.data_dir, &data.zero_shot_topic, base.seed, base.embedding_dim, &mut out)?;
    let space_id = space.unwrap_or(if base.adversary { "toad" } else { "no-adversary" });
    let space = match space_id {
        "toad" => SearchSpace::toad(),
        "no-adversary" => SearchSpace::no_adversary(),
        other => {
            return Err(Error::Config(format!(
                "unknown search space {other:?}; expected toad or no-adversary"
            )))
        }
    };
    out.param("zero_shot_topic", &corpus.topics[split.zero_shot_topic].name);
    out.param("space", space_id);
    out.param("trials", trials);
    out.param("workers", workers);
    out.seed("search", base.seed);

    let result = hyperparameter_search(&space, &base, &split, &embeddings, trials, base.seed, workers)?;
    out.write("trials.tsv", result.to_tsv())?;
    let excluded = result.trials.iter().filter(|t| t.excluded).count();
    match result.best {
        Some(i) => {
            let t = &result.trials[i];
            out.write("best.conf", t.config.to_config_string())?;
            out.param("best_trial", i);
            println!(
                "best trial {i} (mean rank {:.2}, dev F_avg {:.2}); {excluded} of {trials} excluded",
                t.mean_rank.unwrap_or(f64::NAN),
                100.0 * t.scores.map_or(f64::NAN, |s| s.stance_f1)
            );
        }
        None => {
            out.param("best_trial", "none");
            println!("no trial selected; all {trials} excluded");
        }
    }
    out.finish("search")?;
    Ok(())
}

pub fn ablate(config: Option<&Path>, data: &DataArgs, args: &OutArgs, variant: &str) -> Result<()> {
    let mut out = OutDir::create(&args.out)?;
    let base = resolve_config(config, data.seed, &mut out)?;
    let variants: Vec<Variant> = if variant == "all" {
        Variant::ALL.to_vec()
    } else {
        vec![variant.parse()?]
    };
    let Loaded {
        corpus,
        split,
        embeddings,
        ..
    } = load(&data.data_dir, &data.zero_shot_topic, base.seed, base.embedding_dim, &mut out)?;
    let topic = corpus.topics[split.zero_shot_topic].name.clone();
    out.param("zero_shot_topic", &topic);
    out.param("variants", variants.iter().map(|v| v.id()).collect::<Vec<_>>().join(","));

    let mut summary = String::from("variant\tbest_epoch\tdev_f_avg\ttest_f_avg\tn_unlabeled\n");
    for v in variants {
        let outcome = run_ablation(&base, v, &split, &embeddings)?;
        let metrics = evaluate(&outcome.best_params, &embeddings, &split.test)?;
        let r = &outcome.record;
        out.write(&format!("run_{}.tsv", v.id()), r.to_tsv())?;
        out.write(
            &format!("metrics_{}.tsv", v.id()),
            metrics.to_tsv(&format!("variant={} topic={topic} seed={}", v.id(), base.seed)),
        )?;
        writeln!(
            summary,
            "{}\t{}\t{:.2}\t{:.2}\t{}",
            r.variant,
            r.best_epoch,
            100.0 * r.best_dev_f_avg,
            100.0 * metrics.f_avg,
            r.n_unlabeled
        )
        .unwrap();
        println!("{}: test F_avg {:.2}", r.variant, 100.0 * metrics.f_avg);
    }
    out.write("ablation.tsv", summary)?;
    out.finish("ablate")?;
    Ok(())
}

pub fn eval(checkpoint: &Path, data: &DataArgs, args: &OutArgs) -> Result<()> {
    let mut out = OutDir::create(&args.out)?;
    let params = load_params(checkpoint, &mut out)?;
    let seed = data.seed.unwrap_or(0);
    let Loaded {
        corpus,
        split,
        embeddings,
        ..
    } = load(&data.data_dir, &data.zero_shot_topic, seed, params.dims.embedding_dim, &mut out)?;
    let topic = &corpus.topics[split.zero_shot_topic].name;
    out.param("zero_shot_topic", topic);
    let metrics = evaluate(&params, &embeddings, &split.test)?;
    out.write("eval_metrics.tsv", metrics.to_tsv(&format!("topic={topic} seed={seed}")))?;
    println!("test F_avg {:.2}", 100.0 * metrics.f_avg);
    out.finish("eval")?;
    Ok(())
}

pub fn divergence(data_dir: &Path, args: &OutArgs, convention: &str, heatmap: bool) -> Result<()> {
    let mut out = OutDir::create(&args.out)?;
    let convention: Convention = convention.parse()?;
    let corpus = load_corpus(data_dir, &mut out)?;
    let topics: Vec<(String, Vec<Vec<String>>)> = corpus
        .topics
        .iter()
        .enumerate()
        .map(|(id, t)| {
            let docs = corpus.labeled().filter(|e| e.topic_id == id).map(|e| e.document.clone()).collect();
            (t.name.clone(), docs)
        })
        .collect();
    let matrix = divergence_matrix(&topics, convention)?;
    out.param("convention", convention);
    out.write("divergence.tsv", matrix.to_tsv())?;
    if heatmap {
        out.write("divergence.ppm", heatmap::render(&matrix))?;
    }
    print!("{}", matrix.to_tsv());
    out.finish("analyze divergence")?;
    Ok(())
}

pub fn cluster(checkpoint: &Path, data: &DataArgs, args: &OutArgs, k: usize) -> Result<()> {
    let mut out = OutDir::create(&args.out)?;
    let params = load_params(checkpoint, &mut out)?;
    let seed = data.seed.unwrap_or(0);
    let Loaded { split, embeddings, .. } =
        load(&data.data_dir, &data.zero_shot_topic, seed, params.dims.embedding_dim, &mut out)?;
    let encoded: Vec<EncodedExample> = split
        .train
        .iter()
        .chain(&split.dev)
        .chain(&split.test)
        .map(|e| EncodedExample::new(e, &embeddings))
        .collect();
    let reps = extract_representations(&params, &embeddings, &encoded)?;
    let probe_seed = derive_seed(seed, PROBE_STREAM);
    out.seed("probe", probe_seed);
    out.param("k", k);
    let report = cluster_probe(&reps, k, probe_seed)?;
    out.write("cluster.tsv", report.to_tsv())?;
    println!(
        "homogeneity {:.4} completeness {:.4}",
        report.homogeneity, report.completeness
    );
    out.finish("analyze cluster")?;
    Ok(())
}
