#![allow(dead_code)]

use std::path::PathBuf;

use toad::data::{Corpus, EmbeddingTable, Example, SplitSpec, Stance};
use toad::training::TrainConfig;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy").join(name)
}

pub fn toy_corpus() -> Corpus {
    Corpus::from_tsv(&fixture("corpus.tsv")).expect("toy fixture parses")
}

/// Small network that trains quickly.
pub fn small_config() -> TrainConfig {
    TrainConfig {
        embedding_dim: 16,
        hidden: 12,
        stance_hidden: 24,
        disc_hidden: 12,
        lr: 0.01,
        batch_size: 16,
        max_epochs: 30,
        warmup_epochs: 10,
        patience: 30,
        ..TrainConfig::default()
    }
}

/// Train and dev are every labeled toy example; test is the last topic.
pub fn capacity_split(corpus: &Corpus) -> SplitSpec {
    let labeled: Vec<Example> = corpus.labeled().cloned().collect();
    let zs = corpus.n_topics() - 1;
    SplitSpec {
        zero_shot_topic: zs,
        n_topics: corpus.n_topics(),
        train: labeled.clone(),
        dev: labeled.clone(),
        test: labeled.iter().filter(|e| e.topic_id == zs).cloned().collect(),
        unlabeled: vec![],
        seed: 0,
    }
}

pub fn embeddings_for(split: &SplitSpec, dim: usize, seed: u64) -> EmbeddingTable<f64> {
    EmbeddingTable::random(&split.vocabulary(), dim, seed).unwrap()
}

/// Corpus with per-topic `[pro, con, neutral]` counts; documents mix a stance cue, topic
/// nuisance words and shared filler, all drawn from a seeded generator.
pub fn synthetic_corpus(
    counts: &[(&str, [usize; 3])],
    seed: u64,
    cue_rate: f64,
    nuisance_per_doc: usize,
    unlabeled_per_topic: usize,
) -> Corpus {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let cues = [["yay", "good"], ["boo", "bad"], ["meh", "fine"]];
    let filler: Vec<String> = (0..30).map(|i| format!("w{i}")).collect();
    let mut c = Corpus::new();
    for (t, (name, n)) in counts.iter().enumerate() {
        let nuisance: Vec<String> = (0..6).map(|i| format!("t{t}n{i}")).collect();
        let order = [Stance::Pro, Stance::Con, Stance::Neutral];
        let unlabeled = std::iter::repeat(None).take(unlabeled_per_topic);
        let labeled = n.iter().enumerate().flat_map(|(k, &c)| std::iter::repeat(Some(k)).take(c));
        for label in labeled.chain(unlabeled) {
            let k = label.unwrap_or_else(|| rng.gen_range(0..3));
            let mut doc = Vec::new();
            for _ in 0..nuisance_per_doc {
                doc.push(nuisance[rng.gen_range(0..nuisance.len())].clone());
            }
            for _ in 0..2 {
                doc.push(filler[rng.gen_range(0..filler.len())].clone());
            }
            if rng.gen::<f64>() < cue_rate {
                doc.push(cues[k][rng.gen_range(0..2)].to_owned());
            }
            doc.shuffle(&mut rng);
            c.push_raw(&doc.join(" "), name, label.map(|_| order[k])).unwrap();
        }
    }
    c
}

/// Per-topic `[pro, con, neutral]` counts of the six SemEval topics.
pub const SEMT6_COUNTS: [(&str, [usize; 3]); 6] = [
    ("Donald Trump", [148, 299, 260]),
    ("Hillary Clinton", [163, 565, 256]),
    ("Feminist Movement", [268, 510, 171]),
    ("Legalization of Abortion", [167, 544, 222]),
    ("Atheism", [124, 464, 145]),
    ("Climate Change is a Real Concern", [335, 26, 203]),
];

/// Central finite difference of `f` at `x` along coordinate `i`.
pub fn central_difference(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Word vectors in which each topic's nuisance words (`t{k}n{i}`) and each
/// stance's cue words share a direction, like related words in pretrained
/// embeddings. Other tokens get small random vectors.
pub fn structured_embeddings(split: &SplitSpec, dim: usize, seed: u64) -> EmbeddingTable<f64> {
    use rand::{Rng, SeedableRng};
    use std::fmt::Write;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let direction = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
    };
    let topic_dirs: Vec<Vec<f64>> = (0..split.n_topics).map(|_| direction(&mut rng)).collect();
    let cue_dirs: Vec<Vec<f64>> = (0..3).map(|_| direction(&mut rng)).collect();
    let cue_class = |w: &str| match w {
        "yay" | "good" => Some(0),
        "boo" | "bad" => Some(1),
        "meh" | "fine" => Some(2),
        _ => None,
    };
    let mut text = String::new();
    for w in split.vocabulary() {
        let base: Option<&Vec<f64>> = if let Some(c) = cue_class(&w) {
            Some(&cue_dirs[c])
        } else if let Some(rest) = w.strip_prefix('t') {
            rest.split_once('n')
                .and_then(|(t, _)| t.parse::<usize>().ok())
                .and_then(|t| topic_dirs.get(t))
        } else {
            None
        };
        write!(text, "{w}").unwrap();
        for j in 0..dim {
            let noise: f64 = rng.gen_range(-0.3..0.3);
            let v = base.map_or(noise, |b| b[j] + noise);
            write!(text, " {v:.6}").unwrap();
        }
        text.push('\n');
    }
    EmbeddingTable::load_str(&text, "synthetic", &split.vocabulary(), dim, seed).unwrap()
}

/// Largest relative error between backprop and central differences for the
/// scalar `sum(w * build(inputs))`, where `w` are fixed random weights.
/// Checks every coordinate of every input, or `max_points` random ones per
/// input when an input is larger.
pub fn gradcheck(
    shapes: &[&[usize]],
    seed: u64,
    max_points: usize,
    build: impl Fn(&mut toad::autodiff::Graph<f64>, &[toad::autodiff::Var]) -> toad::Result<toad::autodiff::Var>,
) -> (f64, usize) {
    use rand::{Rng, SeedableRng};
    use toad::autodiff::{Graph, Tensor};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<Tensor<f64>> = shapes
        .iter()
        .map(|s| Tensor::from_fn(s, |_| rng.gen_range(-1.0..1.0)).with_requires_grad(true))
        .collect();
    let weights_seed = rng.gen::<u64>();
    let eval = |inputs: &[Tensor<f64>], grads: bool| -> (f64, Vec<Vec<f64>>) {
        let mut g = Graph::new();
        let vars: Vec<_> = inputs.iter().map(|t| g.leaf(t)).collect();
        let out = build(&mut g, &vars).unwrap();
        let mut wr = rand_chacha::ChaCha8Rng::seed_from_u64(weights_seed);
        let n = g.value(out).len();
        let w = g
            .constant(g.shape(out).to_vec().as_slice(), (0..n).map(|_| wr.gen_range(0.5..1.5)).collect())
            .unwrap();
        let prod = g.mul(out, w).unwrap();
        let loss = g.sum(prod);
        let value = g.scalar(loss);
        if !grads {
            return (value, vec![]);
        }
        g.backward(loss).unwrap();
        let gs = vars
            .iter()
            .map(|&v| g.grad(v).map_or_else(|| vec![0.0; g.value(v).len()], <[f64]>::to_vec))
            .collect();
        (value, gs)
    };
    let (_, analytic) = eval(&inputs, true);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for (i, t) in inputs.iter().enumerate() {
        let coords: Vec<usize> = if t.len() <= max_points {
            (0..t.len()).collect()
        } else {
            (0..max_points).map(|_| rng.gen_range(0..t.len())).collect()
        };
        for k in coords {
            let mut plus = inputs.clone();
            plus[i].values_mut()[k] += h;
            let mut minus = inputs.clone();
            minus[i].values_mut()[k] -= h;
            let numeric = (eval(&plus, false).0 - eval(&minus, false).0) / (2.0 * h);
            worst = worst.max(relative_error(analytic[i][k], numeric));
            points += 1;
        }
    }
    (worst, points)
}

/// Backprop versus central differences on the full training objective of a
/// tiny model with random parameters, at reversal strength `rho`.
///
/// Discriminator parameters descend on the total loss. Everything else sees
/// the topic loss through the reversal layer, so its gradient is that of
/// `total - (1 + rho) * topic`.
pub fn model_gradcheck(seed: u64, points: usize, rho: f64) -> (f64, usize) {
    use rand::{Rng, SeedableRng};
    use toad::autodiff::{Graph, ParamId};
    use toad::model::{EncodedExample, ModelDims, ModelParams};
    use toad::training::total_loss;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dims = ModelDims {
        embedding_dim: 5,
        hidden: 3,
        stance_hidden: 4,
        disc_hidden: 4,
        n_topics: 3,
        transformation: true,
        residual_topic: true,
        adversary: true,
    };
    let mut params = ModelParams::<f64>::init(dims, seed).unwrap();
    for t in params.store.tensors_mut() {
        for v in t.values_mut() {
            *v += rng.gen_range(-0.5..0.5);
        }
    }
    let vocab: std::collections::BTreeSet<String> = ["a", "b", "c", "d", "e"].iter().map(|s| s.to_string()).collect();
    let emb = EmbeddingTable::<f64>::random(&vocab, 5, seed).unwrap();
    let ex = |doc: &[&str], topic: &[&str], topic_id, stance| EncodedExample {
        document: doc.iter().map(|w| emb.lookup(w)).collect(),
        topic: topic.iter().map(|w| emb.lookup(w)).collect(),
        topic_id,
        stance,
    };
    let batch = vec![
        ex(&["a", "b", "c"], &["d"], 0, Some(Stance::Pro)),
        ex(&["c", "e"], &["e", "a"], 1, Some(Stance::Con)),
        ex(&["b", "d", "a", "e"], &["b"], 2, None),
    ];
    let config = TrainConfig {
        lambda_tr: 0.7,
        lambda_rec: 0.9,
        ..TrainConfig::default()
    };
    let objective = |p: &ModelParams<f64>, grads: bool| -> (f64, f64, Vec<(usize, Vec<f64>)>) {
        let mut g = Graph::new();
        let b = p.bind(&mut g);
        let outs: Vec<_> = batch
            .iter()
            .map(|e| p.forward(&mut g, &b, &emb, e, rho).unwrap())
            .collect();
        let (loss, br) = total_loss(&mut g, p, &b, &outs, &batch, &config).unwrap();
        let mut gs = Vec::new();
        if grads {
            g.backward(loss).unwrap();
            gs = g.param_grads().map(|(i, v)| (i, v.to_vec())).collect();
        }
        (br.total, br.topic, gs)
    };
    let (_, _, analytic) = objective(&params, true);
    let disc: Vec<ParamId> = params.discriminator_ids();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let n_params = params.store.len();
    for _ in 0..points {
        let id = rng.gen_range(0..n_params);
        let len = params.store.get(ParamId(id)).len();
        let k = rng.gen_range(0..len);
        let value = |delta: f64| {
            let mut p = params.clone();
            p.store.get_mut(ParamId(id)).values_mut()[k] += delta;
            let (total, topic, _) = objective(&p, false);
            if disc.contains(&ParamId(id)) {
                total
            } else {
                total - (1.0 + rho) * topic
            }
        };
        let numeric = (value(h) - value(-h)) / (2.0 * h);
        let a = analytic.iter().find(|(i, _)| *i == id).map_or(0.0, |(_, v)| v[k]);
        worst = worst.max(relative_error(a, numeric));
    }
    (worst, points)
}

/// Neumaier-compensated sum.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

fn entropy_of(p: &[f64]) -> f64 {
    -compensated_sum(p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()))
}

/// Jensen-Shannon divergence through `H(M) - (H(P) + H(Q)) / 2`.
pub fn js_oracle(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    entropy_of(&m) - 0.5 * entropy_of(p) - 0.5 * entropy_of(q)
}

/// Random distribution of length `dim`, with some exact zeros when `sparse`.
pub fn random_distribution(rng: &mut impl rand::Rng, dim: usize, sparse: bool) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim)
        .map(|_| if sparse && rng.gen_bool(0.3) { 0.0 } else { rng.gen::<f64>() })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[0] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    // fold the rounding residue into the largest entry so the sum is 1 to an ulp
    let r = 1.0 - v.iter().sum::<f64>();
    let i = (0..dim).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
    v[i] += r;
    v
}

/// Homogeneity and completeness through mutual information of the contingency table:
/// `h = I(C;K) / H(C)`, `c = I(C;K) / H(K)`.
pub fn homogeneity_oracle(labels: &[usize], clusters: &[usize]) -> (f64, f64) {
    let nl = labels.iter().max().unwrap() + 1;
    let nk = clusters.iter().max().unwrap() + 1;
    let mut table = vec![vec![0usize; nk]; nl];
    for (&l, &k) in labels.iter().zip(clusters) {
        table[l][k] += 1;
    }
    let n = labels.len() as f64;
    let row: Vec<f64> = table.iter().map(|r| r.iter().sum::<usize>() as f64).collect();
    let col: Vec<f64> = (0..nk).map(|k| table.iter().map(|r| r[k]).sum::<usize>() as f64).collect();
    let h = |counts: &[f64]| entropy_of(&counts.iter().map(|c| c / n).collect::<Vec<_>>());
    let mut terms = Vec::new();
    for (l, r) in table.iter().enumerate() {
        for (k, &c) in r.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                terms.push(c / n * (n * c / (row[l] * col[k])).ln());
            }
        }
    }
    let mi = compensated_sum(terms);
    let (hc, hk) = (h(&row), h(&col));
    let ratio = |e: f64| if e == 0.0 { 1.0 } else { mi / e };
    (ratio(hc), ratio(hk))
}

/// One mocked trial: `None` means the evaluation fails.
pub type MockTrial = Option<toad::training::TrialScores>;

/// Random trial results with frequent ties, some near-zero discriminator
/// scores and some failures. Without an adversary there is no disc score.
pub fn mock_scenario(seed: u64) -> (Vec<MockTrial>, bool) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let adversary = rng.gen_bool(0.8);
    let n = rng.gen_range(1..=20);
    let stance = [0.31, 0.42, 0.42, 0.5, 0.55, 0.6];
    let disc = [0.0, 0.004, 0.0099, 0.01, 0.2, 0.33, 0.33, 0.5];
    let trials = (0..n)
        .map(|_| {
            if rng.gen_bool(0.1) {
                return None;
            }
            Some(toad::training::TrialScores {
                stance_f1: stance[rng.gen_range(0..stance.len())],
                disc_f1: adversary.then(|| disc[rng.gen_range(0..disc.len())]),
            })
        })
        .collect();
    (trials, adversary)
}

/// Hand-rolled selection: rank by counting strictly better survivors, ties
/// sharing the midpoint; lowest mean rank, then higher stance F1, then lower index.
pub fn search_oracle(trials: &[MockTrial]) -> (Option<usize>, Vec<Option<f64>>) {
    let alive: Vec<usize> = (0..trials.len())
        .filter(|&i| match trials[i] {
            None => false,
            Some(s) => s.disc_f1.map_or(true, |d| d >= 0.01),
        })
        .collect();
    let rank = |i: usize, key: &dyn Fn(usize) -> f64| {
        let better = alive.iter().filter(|&&j| key(j) < key(i)).count() as f64;
        let tied = alive.iter().filter(|&&j| key(j) == key(i)).count() as f64;
        1.0 + better + (tied - 1.0) / 2.0
    };
    let stance = |j: usize| -trials[j].unwrap().stance_f1;
    let disc = |j: usize| trials[j].unwrap().disc_f1.unwrap_or(0.0);
    let has_disc = alive.iter().all(|&j| trials[j].unwrap().disc_f1.is_some());
    let mut mean = vec![None; trials.len()];
    for &i in &alive {
        let r = if has_disc {
            (rank(i, &stance) + rank(i, &disc)) / 2.0
        } else {
            rank(i, &stance)
        };
        mean[i] = Some(r);
    }
    let mut best: Option<usize> = None;
    for &i in &alive {
        let better = match best {
            None => true,
            Some(b) => {
                let (ri, rb) = (mean[i].unwrap(), mean[b].unwrap());
                ri < rb || (ri == rb && stance(i) < stance(b))
            }
        };
        if better {
            best = Some(i);
        }
    }
    (best, mean)
}
