use std::collections::BTreeSet;
use std::fmt::Write;

use crate::data::Stance;
use crate::error::{Error, Result};

/// Precision, recall and F1 of one class. Values are fractions in `[0, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Per-class stance scores and the pro/con average.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    /// Indexed by [`Stance::class_index`].
    pub per_class: [ClassScores; 3],
    pub f_avg: f64,
    pub accuracy: f64,
}

impl MetricsReport {
    pub fn class(&self, stance: Stance) -> &ClassScores {
        &self.per_class[stance.class_index()]
    }

    /// TSV with scores scaled to percentages.
    pub fn to_tsv(&self, header_comment: &str) -> String {
        let mut out = String::new();
        if !header_comment.is_empty() {
            writeln!(out, "# {header_comment}").unwrap();
        }
        out.push_str("class\tprecision\trecall\tf1\tsupport\n");
        for s in [Stance::Pro, Stance::Con, Stance::Neutral] {
            let c = self.class(s);
            writeln!(
                out,
                "{s}\t{:.2}\t{:.2}\t{:.2}\t{}",
                100.0 * c.precision,
                100.0 * c.recall,
                100.0 * c.f1,
                c.support
            )
            .unwrap();
        }
        writeln!(out, "f_avg\t\t\t{:.2}\t", 100.0 * self.f_avg).unwrap();
        out
    }
}

/// Mean of the pro and con F1 scores; neutral is ignored.
pub fn f_avg_from_f1(pro_f1: f64, con_f1: f64) -> f64 {
    (pro_f1 + con_f1) / 2.0
}

fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// Per-class precision/recall/F1 and `F_avg`, with 0/0 taken as 0.
pub fn f_avg(predictions: &[Stance], golds: &[Stance]) -> Result<MetricsReport> {
    if predictions.len() != golds.len() {
        return Err(Error::Input(format!(
            "{} predictions for {} gold labels",
            predictions.len(),
            golds.len()
        )));
    }
    if golds.is_empty() {
        return Err(Error::Input("cannot score an empty prediction set".into()));
    }
    let mut per_class = [ClassScores::default(); 3];
    for s in Stance::ALL {
        let mut tp = 0;
        let mut fp = 0;
        let mut fn_ = 0;
        for (&p, &g) in predictions.iter().zip(golds) {
            match (p == s, g == s) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        let (precision, recall, f1) = prf(tp, fp, fn_);
        per_class[s.class_index()] = ClassScores {
            precision,
            recall,
            f1,
            support: tp + fn_,
        };
    }
    let correct = predictions.iter().zip(golds).filter(|(p, g)| p == g).count();
    Ok(MetricsReport {
        f_avg: f_avg_from_f1(
            per_class[Stance::Pro.class_index()].f1,
            per_class[Stance::Con.class_index()].f1,
        ),
        per_class,
        accuracy: correct as f64 / golds.len() as f64,
    })
}

/// Unweighted mean F1 over every class that occurs in either list.
pub fn macro_f1(predictions: &[usize], golds: &[usize]) -> Result<f64> {
    if predictions.len() != golds.len() || golds.is_empty() {
        return Err(Error::Input(format!(
            "macro_f1 needs equal non-empty inputs, got {} and {}",
            predictions.len(),
            golds.len()
        )));
    }
    let classes: BTreeSet<usize> = predictions.iter().chain(golds).copied().collect();
    let mut total = 0.0;
    for &c in &classes {
        let mut tp = 0;
        let mut fp = 0;
        let mut fn_ = 0;
        for (&p, &g) in predictions.iter().zip(golds) {
            match (p == c, g == c) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        total += prf(tp, fp, fn_).2;
    }
    Ok(total / classes.len() as f64)
}
