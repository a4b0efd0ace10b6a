use std::ops::{Add, Div};

use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::model::{Bound, EncodedExample, ForwardVars, ModelParams};
use crate::scalar::Scalar;
use crate::training::config::TrainConfig;

/// Values of every loss term for one batch. Disabled terms are exactly 0.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    /// Stance cross-entropy, averaged over labeled members.
    pub stance: f64,
    /// Topic cross-entropy, averaged over all members.
    pub topic: f64,
    pub rec_topic: f64,
    pub rec_doc: f64,
    /// `|W_tr - I|_F^2`.
    pub transform: f64,
    /// The optimized objective (with the reversal sign living in the graph).
    pub total: f64,
}

impl Add for LossBreakdown {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            stance: self.stance + o.stance,
            topic: self.topic + o.topic,
            rec_topic: self.rec_topic + o.rec_topic,
            rec_doc: self.rec_doc + o.rec_doc,
            transform: self.transform + o.transform,
            total: self.total + o.total,
        }
    }
}

impl Div<f64> for LossBreakdown {
    type Output = Self;

    fn div(self, d: f64) -> Self {
        Self {
            stance: self.stance / d,
            topic: self.topic / d,
            rec_topic: self.rec_topic / d,
            rec_doc: self.rec_doc / d,
            transform: self.transform / d,
            total: self.total / d,
        }
    }
}

impl LossBreakdown {
    pub const TERMS: [&'static str; 6] = ["stance", "topic", "rec_topic", "rec_doc", "transform", "total"];

    pub fn values(&self) -> [f64; 6] {
        [
            self.stance,
            self.topic,
            self.rec_topic,
            self.rec_doc,
            self.transform,
            self.total,
        ]
    }

    /// First non-finite term, if any.
    pub fn non_finite(&self) -> Option<(&'static str, f64)> {
        Self::TERMS
            .iter()
            .zip(self.values())
            .find(|(_, v)| !v.is_finite())
            .map(|(&n, v)| (n, v))
    }
}

fn mean<T: Scalar>(g: &mut Graph<T>, terms: &[Var]) -> Result<Option<Var>> {
    if terms.is_empty() {
        return Ok(None);
    }
    let rows = g.concat(terms, 0)?;
    Ok(Some(g.mean(rows)))
}

/// Assembles the batch objective
/// `lambda_rec (L_d + L_t) + lambda_tr L_tr + L_s + L_topic`,
/// where the discriminator input already passed through gradient reversal,
/// so encoder parameters ascend on `rho * L_topic`.
pub fn total_loss<T: Scalar>(
    g: &mut Graph<T>,
    params: &ModelParams<T>,
    bound: &Bound,
    outputs: &[ForwardVars],
    members: &[EncodedExample],
    config: &TrainConfig,
) -> Result<(Var, LossBreakdown)> {
    if outputs.is_empty() || outputs.len() != members.len() {
        return Err(Error::Input(format!(
            "total_loss needs a non-empty batch ({} outputs, {} members)",
            outputs.len(),
            members.len()
        )));
    }
    let mut stance = Vec::new();
    let mut topic = Vec::new();
    let mut rec_t = Vec::new();
    let mut rec_d = Vec::new();
    for (out, ex) in outputs.iter().zip(members) {
        if let Some(s) = ex.stance {
            stance.push(g.cross_entropy(out.stance_logits, s.class_index())?);
        }
        if let Some(logits) = out.topic_logits {
            topic.push(g.cross_entropy(logits, ex.topic_id)?);
        }
        if config.topic_rec {
            rec_t.push(out.rec_topic);
        }
        if config.doc_rec {
            rec_d.push(out.rec_doc);
        }
    }

    let mut breakdown = LossBreakdown::default();
    let mut parts = Vec::new();
    if let Some(v) = mean(g, &stance)? {
        breakdown.stance = g.scalar(v).as_f64();
        parts.push(v);
    }
    if let Some(v) = mean(g, &topic)? {
        breakdown.topic = g.scalar(v).as_f64();
        parts.push(v);
    }
    let lambda_rec = T::of(config.lambda_rec);
    if let Some(v) = mean(g, &rec_t)? {
        breakdown.rec_topic = g.scalar(v).as_f64();
        parts.push(g.scale(v, lambda_rec));
    }
    if let Some(v) = mean(g, &rec_d)? {
        breakdown.rec_doc = g.scalar(v).as_f64();
        parts.push(g.scale(v, lambda_rec));
    }
    if config.transform_loss {
        if let Some(v) = params.identity_penalty(g, bound)? {
            breakdown.transform = g.scalar(v).as_f64();
            parts.push(g.scale(v, T::of(config.lambda_tr)));
        }
    }
    let stacked = g.concat(&parts, 0)?;
    let total = g.sum(stacked);
    breakdown.total = g.scalar(total).as_f64();
    Ok((total, breakdown))
}
