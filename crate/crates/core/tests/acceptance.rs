//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.

mod common;

use std::f64::consts::LN_2;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toad::analysis::{
    cluster_probe, extract_representations, f_avg, f_avg_from_f1, homogeneity_completeness, js_divergence,
};
use toad::autodiff::{Graph, Tensor};
use toad::data::{
    attach_unlabeled, make_splits, read_keywords, read_tweets, semeval_keywords, semeval_topic_name, Corpus,
    EmbeddingTable, SplitSpec, Stance,
};
use toad::model::EncodedExample;
use toad::training::{
    ablate, evaluate, init_params, no_adversary_best_config, schedule, search_with, toad_best_config, train_with,
    Control, LossBreakdown, SearchSpace, TrainConfig, Variant,
};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Verdict::*;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn gradient_correctness() -> Verdict {
    type Build = Box<dyn Fn(&mut Graph<f64>, &[toad::autodiff::Var]) -> toad::Result<toad::autodiff::Var>>;
    let mask = [true, false, true, true, false, true, true, true, true, true, true, true];
    let cases: Vec<(&str, Vec<&[usize]>, Build)> = vec![
        ("matmul", vec![&[3, 4], &[4, 2]], Box::new(|g, v| g.matmul(v[0], v[1]))),
        ("matvec", vec![&[3, 4], &[4]], Box::new(|g, v| g.matmul(v[0], v[1]))),
        ("vecmat", vec![&[4], &[4, 5]], Box::new(|g, v| g.matmul(v[0], v[1]))),
        ("add", vec![&[3, 4], &[3, 4]], Box::new(|g, v| g.add(v[0], v[1]))),
        ("add_row", vec![&[3, 4], &[4]], Box::new(|g, v| g.add(v[0], v[1]))),
        ("sub", vec![&[12], &[12]], Box::new(|g, v| g.sub(v[0], v[1]))),
        ("mul", vec![&[12], &[12]], Box::new(|g, v| g.mul(v[0], v[1]))),
        ("scale", vec![&[12]], Box::new(|g, v| Ok(g.scale(v[0], -2.5)))),
        ("sq_diff", vec![&[3, 4], &[3, 4]], Box::new(|g, v| g.sq_diff(v[0], v[1]))),
        ("sigmoid", vec![&[12]], Box::new(|g, v| Ok(g.sigmoid(v[0])))),
        ("tanh", vec![&[12]], Box::new(|g, v| Ok(g.tanh(v[0])))),
        ("relu", vec![&[12]], Box::new(|g, v| Ok(g.relu(v[0])))),
        ("softmax", vec![&[12]], Box::new(|g, v| g.softmax(v[0], None))),
        ("softmax_rows", vec![&[3, 4]], Box::new(|g, v| g.softmax(v[0], None))),
        ("softmax_masked", vec![&[12]], Box::new(move |g, v| g.softmax(v[0], Some(&mask)))),
        ("concat0", vec![&[5], &[7]], Box::new(|g, v| g.concat(&[v[0], v[1]], 0))),
        ("concat1", vec![&[3, 2], &[3, 3]], Box::new(|g, v| g.concat(&[v[0], v[1]], 1))),
        ("slice", vec![&[12]], Box::new(|g, v| g.slice(v[0], 2, 5))),
        ("row", vec![&[4, 3]], Box::new(|g, v| g.row(v[0], 1))),
        ("reshape", vec![&[3, 4]], Box::new(|g, v| g.reshape(v[0], &[4, 3]))),
        ("stack_rows", vec![&[6], &[6]], Box::new(|g, v| g.stack_rows(&[v[0], v[1], v[0]]))),
        ("sum", vec![&[3, 4]], Box::new(|g, v| Ok(g.sum(v[0])))),
        ("mean", vec![&[3, 4]], Box::new(|g, v| Ok(g.mean(v[0])))),
        ("cross_entropy", vec![&[12]], Box::new(|g, v| g.cross_entropy(v[0], 5))),
        ("mse", vec![&[6], &[6]], Box::new(|g, v| g.mse(v[0], v[1]))),
    ];
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut worst_name = "";
    let mut fewest = usize::MAX;
    for (i, (name, shapes, build)) in cases.iter().enumerate() {
        let (err, points) = common::gradcheck(shapes, 100 + i as u64, 20, build);
        fewest = fewest.min(points);
        if err > worst {
            worst = err;
            worst_name = name;
        }
    }
    // reversal with a genuine rho, against the closed form
    let x: Tensor<f64> = Tensor::from_fn(&[12], |i| (i as f64 - 5.5) / 6.0).with_requires_grad(true);
    let mut reversal_ok = true;
    for rho in [0.0, 0.3, 1.0] {
        let mut g = Graph::new();
        let a = g.leaf(&x);
        let r = g.grad_reverse(a, rho).unwrap();
        let t = g.tanh(r);
        let s = g.sum(t);
        g.backward(s).unwrap();
        for (k, &gk) in g.grad(a).unwrap().iter().enumerate() {
            let plain = 1.0 - x.values()[k].tanh().powi(2);
            reversal_ok &= (gk + rho * plain).abs() < 1e-15;
        }
    }
    let mut model_points = 0;
    for (seed, rho) in [(1, 0.0), (2, 0.6), (3, 1.0)] {
        let (err, points) = common::model_gradcheck(seed, 40, rho);
        model_points += points;
        if err > worst {
            worst = err;
            worst_name = "end-to-end objective";
        }
    }
    let elapsed = start.elapsed();
    check(
        worst < 1e-4 && fewest >= 10 && reversal_ok && elapsed < Duration::from_secs(30),
        format!(
            "{} primitives + objective ({model_points} points), worst rel err {worst:.2e} ({worst_name}), min points {fewest}, reversal exact {reversal_ok}, {}",
            cases.len(),
            secs(elapsed)
        ),
    )
}

fn schedule_closed_forms() -> Verdict {
    // (epoch, lr, rho at gamma 10, rho at gamma 14), evaluated at 50 digits
    let frozen = [
        (51, 9.764540896763105448931045e-4, 0.04995837495787997219838637, 0.0698858903164289858901163),
        (75, 7.311104457090247109425382e-4, 0.8482836399575128976133876, 0.9413755384972873622694209),
        (100, 6.389431042462724758553493e-4, 0.986614298151430288881276, 0.9981778976111987092842734),
    ];
    let mut worst: f64 = 0.0;
    let mut warmup_exact = true;
    for gamma in [10.0, 14.0] {
        for e in [1, 25, 50] {
            let (lr, rho) = schedule::<f64>(e, 100, 0.001, 10.0, 0.25, gamma).unwrap();
            warmup_exact &= lr == 0.001 && rho == 0.0;
        }
        for e in 1..=50 {
            warmup_exact &= schedule::<f64>(e, 100, 0.001, 10.0, 0.25, gamma).unwrap().1 == 0.0;
        }
        for &(e, lr, r10, r14) in &frozen {
            let (l, r) = schedule::<f64>(e, 100, 0.001, 10.0, 0.25, gamma).unwrap();
            let want = if gamma == 10.0 { r10 } else { r14 };
            worst = worst.max((l - lr).abs()).max((r - want).abs());
        }
    }
    check(
        worst < 1e-9 && warmup_exact,
        format!("max abs err {worst:.2e} over e in {{1,25,50,51,75,100}}, gamma in {{10,14}}; rho = 0 exactly for e <= 50: {warmup_exact}"),
    )
}

/// Predictions whose pro and con F1 approximate `pro` and `con` percentages.
fn realize(pro: f64, con: f64) -> (Vec<Stance>, Vec<Stance>) {
    // F1 = 2tp / (2tp + fp + fn): with fn = 0 and tp = f, fp = 2f(1/F1 - 1)
    let mut pred = Vec::new();
    let mut gold = Vec::new();
    for (class, f1) in [(Stance::Pro, pro), (Stance::Con, con)] {
        let tp = 100_000usize;
        let fp = (2.0 * tp as f64 * (100.0 / f1 - 1.0)).round() as usize;
        pred.extend(std::iter::repeat(class).take(tp + fp));
        gold.extend(std::iter::repeat(class).take(tp));
        gold.extend(std::iter::repeat(Stance::Neutral).take(fp));
    }
    (pred, gold)
}

fn metric_arithmetic() -> Verdict {
    // pro F1, con F1, published F_avg for each topic row of the full model
    let rows = [
        ("DT", 40.0, 58.9, 49.5),
        ("HC", 35.3, 67.1, 51.2),
        ("FM", 41.5, 66.7, 54.1),
        ("LA", 30.6, 61.7, 46.2),
        ("A", 17.7, 74.5, 46.1),
        ("CC", 45.4, 16.5, 30.9),
    ];
    let mut worst: f64 = 0.0;
    let mut realized: f64 = 0.0;
    for (_, p, c, want) in rows {
        let fa = f_avg_from_f1(p, c);
        worst = worst.max((fa - want).abs());
        // the same value from predictions realizing those per-class scores
        let (pred, gold) = realize(p, c);
        realized = realized.max((100.0 * f_avg(&pred, &gold).unwrap().f_avg - fa).abs());
    }
    check(
        worst <= 0.05 + 1e-9 && realized < 1e-3,
        format!("6 rows, max |F_avg - published| {worst:.3} (tolerance 0.05), from predictions within {realized:.1e}"),
    )
}

fn divergence_suite() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut props = true;
    for i in 0..1000 {
        let dim = rng.gen_range(1..=50);
        let p = common::random_distribution(&mut rng, dim, i % 2 == 0);
        let q = if i % 10 == 0 { p.clone() } else { common::random_distribution(&mut rng, dim, i % 3 == 0) };
        let d: f64 = js_divergence(&p, &q).unwrap();
        worst = worst.max((d - common::js_oracle(&p, &q)).abs());
        props &= d == js_divergence(&q, &p).unwrap();
        props &= (0.0..=LN_2).contains(&d);
        props &= (d == 0.0) == (p == q) || (p != q && d < 1e-12);
    }
    let disjoint: f64 = js_divergence(&[0.5, 0.5, 0.0, 0.0], &[0.0, 0.0, 0.25, 0.75]).unwrap();
    let ln2_err = (disjoint - LN_2).abs();
    let half: f64 = js_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
    let half_err = (half - 0.2157615543388356955794143).abs();
    check(
        worst < 1e-10 && props && ln2_err <= 1e-12 && half_err < 1e-10,
        format!("1000 pairs, max abs err {worst:.2e}, symmetry/bounds/identity {props}, |D - ln 2| {ln2_err:.1e}"),
    )
}

fn clustering_metrics() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.gen_range(2..=100);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..6)).collect();
        let k = rng.gen_range(1..=8);
        let clusters: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let (h, c) = homogeneity_completeness(&labels, &clusters).unwrap();
        let (oh, oc) = common::homogeneity_oracle(&labels, &clusters);
        worst = worst.max((h - oh).abs()).max((c - oc).abs());
    }
    let labels: Vec<usize> = (0..60).map(|i| i % 6).collect();
    let pure = homogeneity_completeness(&labels, &labels).unwrap() == (1.0, 1.0);
    let single = homogeneity_completeness(&labels, &[0; 60]).unwrap() == (0.0, 1.0);
    check(
        worst < 1e-9 && pure && single,
        format!("20 labelings, max abs err {worst:.2e}; pure -> (1,1) {pure}; single cluster -> (0,1) {single}"),
    )
}

fn capacity_smoke() -> Verdict {
    let start = Instant::now();
    let corpus = common::toy_corpus();
    let split = common::capacity_split(&corpus);
    let cfg = TrainConfig {
        max_epochs: 200,
        patience: 200,
        warmup_epochs: 50,
        ..common::small_config()
    };
    let emb = common::embeddings_for(&split, cfg.embedding_dim, 1);
    let out = train_with(&cfg, &split, &emb, init_params(&cfg, &split).unwrap(), |r| {
        if r.dev_f_avg >= 0.99 {
            Control::Stop
        } else {
            Control::Continue
        }
    })
    .unwrap();
    let acc = evaluate(&out.best_params, &emb, &split.train).unwrap().accuracy;
    let elapsed = start.elapsed();
    check(
        acc >= 0.95 && elapsed < Duration::from_secs(60),
        format!(
            "train accuracy {:.1}% after {} epochs, {}",
            100.0 * acc,
            out.record.stopped_epoch,
            secs(elapsed)
        ),
    )
}

fn adversary_effect() -> Verdict {
    let start = Instant::now();
    let counts = [("alpha", [30, 30, 30]), ("beta", [30, 30, 30]), ("gamma", [30, 30, 30]), ("delta", [30, 30, 30])];
    let mut wins = 0;
    let mut pairs = Vec::new();
    for s in 1..=5u64 {
        let corpus = common::synthetic_corpus(&counts, 100 + s, 0.75, 3, 40);
        let split = make_splits(&corpus, 3, s).unwrap();
        let emb = common::structured_embeddings(&split, 16, s);
        let cfg = TrainConfig {
            seed: s,
            max_epochs: 60,
            warmup_epochs: 2,
            patience: 60,
            gamma: 10.0,
            lr: 0.001,
            ..common::small_config()
        };
        let encoded: Vec<EncodedExample> = split.all().map(|e| EncodedExample::new(e, &emb)).collect();
        let homogeneity = |v: Variant| {
            let out = ablate(&cfg, v, &split, &emb).unwrap();
            let reps = extract_representations(&out.best_params, &emb, &encoded).unwrap();
            cluster_probe(&reps, 4, s).unwrap().homogeneity
        };
        let (with, without) = (homogeneity(Variant::Full), homogeneity(Variant::NoAdversary));
        wins += usize::from(with < without);
        pairs.push(format!("{with:.3}/{without:.3}"));
    }
    let elapsed = start.elapsed();
    check(
        wins >= 4 && elapsed < Duration::from_secs(600),
        format!(
            "homogeneity lower with adversary in {wins}/5 seeds (with/without: {}), {}",
            pairs.join(" "),
            secs(elapsed)
        ),
    )
}

fn search_protocol() -> Verdict {
    let mut agree = 0;
    let mut exclusions = 0;
    let mut ties = 0;
    for scenario in 0..25u64 {
        let (trials, adversary) = common::mock_scenario(1000 + scenario);
        let space = if adversary { SearchSpace::toad() } else { SearchSpace::no_adversary() };
        let result = search_with(&space, &TrainConfig::default(), trials.len(), scenario, 2, |i, _| {
            trials[i].ok_or_else(|| toad::Error::Input("mocked failure".into()))
        })
        .unwrap();
        let (best, ranks) = common::search_oracle(&trials);
        let got: Vec<Option<f64>> = result.trials.iter().map(|t| t.mean_rank).collect();
        if result.best == best && got == ranks {
            agree += 1;
        }
        exclusions += result.trials.iter().filter(|t| t.excluded).count();
        let mut alive: Vec<f64> = ranks.iter().flatten().copied().collect();
        alive.sort_by(f64::total_cmp);
        ties += usize::from(alive.windows(2).any(|w| w[0] == w[1]));
    }
    check(
        agree == 25,
        format!("{agree}/25 scenarios match the oracle ({exclusions} excluded trials, {ties} scenarios with rank ties)"),
    )
}

fn ablation_harness() -> Verdict {
    let corpus = common::toy_corpus();
    let kws = read_keywords(&common::fixture("keywords.tsv")).unwrap();
    let tweets = read_tweets(&common::fixture("unlabeled.txt")).unwrap();
    let (name, words) = &kws[0];
    let zs = corpus.topic_id(name).unwrap();
    let mut split = make_splits(&corpus, zs, 0).unwrap();
    attach_unlabeled(&mut split, &corpus.topics[zs].tokens, &tweets, words).unwrap();
    let cfg = common::small_config();
    let emb = common::embeddings_for(&split, cfg.embedding_dim, 0);
    let mut problems = Vec::new();
    for v in Variant::ALL {
        match ablate(&cfg, v, &split, &emb) {
            Err(e) => problems.push(format!("{v}: {e}")),
            Ok(out) => {
                for e in &out.record.epochs {
                    for (term, value) in LossBreakdown::TERMS.iter().zip(e.losses.values()) {
                        if v.disabled_terms().contains(term) && value != 0.0 {
                            problems.push(format!("{v}: {term} = {value} at epoch {}", e.epoch));
                        }
                    }
                }
            }
        }
    }
    check(
        problems.is_empty(),
        if problems.is_empty() {
            format!("{} variants trained, disabled terms exactly 0", Variant::ALL.len())
        } else {
            problems.join("; ")
        },
    )
}

fn load_semt6(dir: &Path, topic: &str, seed: u64, dim: usize) -> toad::Result<(SplitSpec, EmbeddingTable<f64>)> {
    let corpus = Corpus::from_tsv(&dir.join("corpus.tsv"))?;
    let zs = corpus.resolve_topic(topic)?;
    let mut split = make_splits(&corpus, zs, seed)?;
    let unlabeled = dir.join("unlabeled.txt");
    if unlabeled.exists() {
        let tweets = read_tweets(&unlabeled)?;
        let name = semeval_topic_name(topic).unwrap_or(topic);
        let words: Vec<String> = semeval_keywords(name)
            .unwrap_or_default()
            .iter()
            .map(|s| s.to_string())
            .collect();
        let tokens = corpus.topics[zs].tokens.clone();
        attach_unlabeled(&mut split, &tokens, &tweets, &words)?;
    }
    let vocab = split.vocabulary();
    let vectors = dir.join("embeddings.txt");
    let emb = if vectors.exists() {
        EmbeddingTable::load(&vectors, &vocab, dim, seed)?
    } else {
        EmbeddingTable::random(&vocab, dim, seed)?
    };
    Ok((split, emb))
}

fn semt6_reproduction() -> Verdict {
    let Ok(dir) = std::env::var("TOAD_SEMT6_DIR") else {
        return Skip("TOAD_SEMT6_DIR not set; see scripts/reproduce_semt6.sh".into());
    };
    let dir = Path::new(&dir);
    let run = |cfg: &TrainConfig, seed: u64| -> toad::Result<f64> {
        let cfg = TrainConfig { seed, ..cfg.clone() };
        let (split, emb) = load_semt6(dir, "DT", seed, cfg.embedding_dim)?;
        let out = toad::training::train(&cfg, &split, &emb, init_params(&cfg, &split)?)?;
        Ok(100.0 * evaluate(&out.best_params, &emb, &split.test)?.f_avg)
    };
    let toad_cfg = toad_best_config("DT").unwrap();
    let plain_cfg = no_adversary_best_config("DT").unwrap();
    let mut with = Vec::new();
    let mut wins = 0;
    for seed in 0..5 {
        match (run(&toad_cfg, seed), run(&plain_cfg, seed)) {
            (Ok(a), Ok(b)) => {
                wins += usize::from(a > b);
                with.push(a);
            }
            (Err(e), _) | (_, Err(e)) => return Fail(format!("seed {seed}: {e}")),
        }
    }
    with.sort_by(f64::total_cmp);
    let median = with[2];
    check(
        (median - 49.5).abs() <= 5.0 && wins >= 3,
        format!("median DT F_avg {median:.1} (target 49.5 +/- 5), adversary better in {wins}/5 seeds"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict, bool); 10] = [
        ("gradient correctness", gradient_correctness, true),
        ("schedule closed forms", schedule_closed_forms, true),
        ("metric arithmetic", metric_arithmetic, true),
        ("divergence suite", divergence_suite, true),
        ("clustering metrics", clustering_metrics, true),
        ("capacity smoke test", capacity_smoke, true),
        ("adversary effect", adversary_effect, true),
        ("search protocol", search_protocol, true),
        ("ablation harness", ablation_harness, true),
        ("SemT6 reproduction", semt6_reproduction, false),
    ];
    let mut blocking_failures = 0;
    for (i, (name, run, blocking)) in criteria.into_iter().enumerate() {
        let (tag, detail) = match run() {
            Pass(d) => ("PASS", d),
            Skip(d) => ("SKIP", d),
            Fail(d) => {
                blocking_failures += usize::from(blocking);
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name}: {detail}", i + 1);
    }
    if blocking_failures > 0 {
        println!("{blocking_failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
