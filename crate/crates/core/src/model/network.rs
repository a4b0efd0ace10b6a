//! The TOAD forward pass built on [`Graph`].
//!
//! ```text
//! topic ─► BiLSTM ─► h_t ─────────────────────────────┐
//!             │ final (h, c) per direction            │
//! doc ───► BiLSTM (initialized from topic states) ─► H │
//!                      attention(query = h_t) ─► v_dt  │
//!                      W_tr ─► ṽ_dt ─┬─► [ṽ_dt; h_t] ─► stance logits
//!                                    └─► GRL(ρ) ─► topic logits
//! ```

use crate::autodiff::{Graph, ParamId, Var};
use crate::data::{EmbeddingTable, Example, Stance};
use crate::error::{Error, Result};
use crate::model::params::{LstmIds, MlpIds, ModelParams, ReconIds};
use crate::scalar::Scalar;

pub const INFER_CHUNK: usize = 64;

/// An example mapped to embedding rows.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedExample {
    pub topic: Vec<usize>,
    pub document: Vec<usize>,
    pub topic_id: usize,
    pub stance: Option<Stance>,
}

impl EncodedExample {
    pub fn new<T: Scalar>(example: &Example, embeddings: &EmbeddingTable<T>) -> Self {
        Self {
            topic: embeddings.encode(&example.topic),
            document: embeddings.encode(&example.document),
            topic_id: example.topic_id,
            stance: example.stance,
        }
    }

    pub fn is_labeled(&self) -> bool {
        self.stance.is_some()
    }
}

/// Final `(hidden, cell)` of one LSTM direction.
#[derive(Clone, Copy, Debug)]
pub struct LstmState {
    pub hidden: Var,
    pub cell: Var,
}

/// Output of the topic encoder.
#[derive(Clone, Debug)]
pub struct TopicEncoding {
    /// `[2h]`: final forward hidden ++ final backward hidden.
    pub h_t: Var,
    pub forward: LstmState,
    pub backward: LstmState,
    /// `[n, 2h]` per-token hidden states, used for reconstruction.
    pub states: Var,
}

/// Graph handles for one example's forward pass.
#[derive(Clone, Debug)]
pub struct ForwardVars {
    pub h_t: Var,
    pub doc_states: Var,
    pub attention: Var,
    pub v_dt: Var,
    pub v_tilde: Var,
    pub stance_logits: Var,
    pub topic_logits: Option<Var>,
    pub rec_topic: Var,
    pub rec_doc: Var,
}

/// Concrete values of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardOutputs<T> {
    pub h_t: Vec<T>,
    /// Row-major `[n, 2h]`.
    pub doc_states: Vec<T>,
    pub attention: Vec<T>,
    pub v_dt: Vec<T>,
    pub v_tilde: Vec<T>,
    pub stance_logits: Vec<T>,
    pub topic_logits: Option<Vec<T>>,
    pub rec_topic: T,
    pub rec_doc: T,
}

impl<T: Scalar> ForwardOutputs<T> {
    pub fn from_vars(g: &Graph<T>, v: &ForwardVars) -> Self {
        Self {
            h_t: g.value(v.h_t).to_vec(),
            doc_states: g.value(v.doc_states).to_vec(),
            attention: g.value(v.attention).to_vec(),
            v_dt: g.value(v.v_dt).to_vec(),
            v_tilde: g.value(v.v_tilde).to_vec(),
            stance_logits: g.value(v.stance_logits).to_vec(),
            topic_logits: v.topic_logits.map(|t| g.value(t).to_vec()),
            rec_topic: g.scalar(v.rec_topic),
            rec_doc: g.scalar(v.rec_doc),
        }
    }

    /// Predicted stance: argmax over con / neutral / pro.
    pub fn predicted_stance(&self) -> Stance {
        Stance::from_class_index(argmax(&self.stance_logits)).expect("3 stance classes")
    }

    pub fn predicted_topic(&self) -> Option<usize> {
        self.topic_logits.as_deref().map(argmax)
    }

    pub fn is_finite(&self) -> bool {
        let all = [
            &self.h_t,
            &self.doc_states,
            &self.v_dt,
            &self.v_tilde,
            &self.stance_logits,
        ];
        all.iter().all(|v| v.iter().all(|x| x.is_finite()))
            && self
                .topic_logits
                .as_ref()
                .map_or(true, |t| t.iter().all(|x| x.is_finite()))
            && self.rec_topic.is_finite()
            && self.rec_doc.is_finite()
    }
}

pub(crate) fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Parameters registered as leaves of one graph.
#[derive(Clone, Debug)]
pub struct Bound {
    vars: Vec<Option<Var>>,
}

impl Bound {
    pub fn var(&self, id: ParamId) -> Var {
        self.vars[id.0].expect("parameter bound")
    }
}

impl<T: Scalar> ModelParams<T> {
    /// Registers every parameter in `g`; call once per graph.
    pub fn bind(&self, g: &mut Graph<T>) -> Bound {
        let vars = (0..self.store.len())
            .map(|i| Some(self.store.bind(g, ParamId(i))))
            .collect();
        Bound { vars }
    }

    fn embed(&self, g: &mut Graph<T>, emb: &EmbeddingTable<T>, idx: &[usize]) -> Result<Var> {
        if emb.dim() != self.dims.embedding_dim {
            return Err(Error::Config(format!(
                "embedding dimension {} does not match model input {}",
                emb.dim(),
                self.dims.embedding_dim
            )));
        }
        g.constant(&[idx.len(), emb.dim()], emb.gather(idx))
    }

    fn zero_state(&self, g: &mut Graph<T>) -> Result<LstmState> {
        let h = self.dims.hidden;
        Ok(LstmState {
            hidden: g.constant(&[h], vec![T::zero(); h])?,
            cell: g.constant(&[h], vec![T::zero(); h])?,
        })
    }

    /// Runs one LSTM direction over the rows of `inputs` (`[n, d]`), in
    /// reverse order when `reverse`. Returns per-position hidden states in
    /// input order and the final state.
    fn run_lstm(
        &self,
        g: &mut Graph<T>,
        b: &Bound,
        ids: LstmIds,
        inputs: Var,
        init: LstmState,
        reverse: bool,
    ) -> Result<(Vec<Var>, LstmState)> {
        let n = g.shape(inputs)[0];
        let h = self.dims.hidden;
        let projected = g.matmul(inputs, b.var(ids.w_ih))?;
        let mut state = init;
        let mut out = vec![None; n];
        let order: Vec<usize> = if reverse {
            (0..n).rev().collect()
        } else {
            (0..n).collect()
        };
        for t in order {
            let x = g.row(projected, t)?;
            let r = g.matmul(state.hidden, b.var(ids.w_hh))?;
            let z = g.add(x, r)?;
            let z = g.add(z, b.var(ids.bias))?;
            let i = g.slice(z, 0, h)?;
            let f = g.slice(z, h, h)?;
            let c_in = g.slice(z, 2 * h, h)?;
            let o = g.slice(z, 3 * h, h)?;
            let i = g.sigmoid(i);
            let f = g.sigmoid(f);
            let c_in = g.tanh(c_in);
            let o = g.sigmoid(o);
            let keep = g.mul(f, state.cell)?;
            let write = g.mul(i, c_in)?;
            let cell = g.add(keep, write)?;
            let squashed = g.tanh(cell);
            let hidden = g.mul(o, squashed)?;
            state = LstmState { hidden, cell };
            out[t] = Some(hidden);
        }
        Ok((out.into_iter().map(|v| v.expect("every step run")).collect(), state))
    }

    fn bilstm(
        &self,
        g: &mut Graph<T>,
        b: &Bound,
        (fwd, bwd): (LstmIds, LstmIds),
        inputs: Var,
        (init_f, init_b): (LstmState, LstmState),
    ) -> Result<(Var, LstmState, LstmState)> {
        let (f_states, f_last) = self.run_lstm(g, b, fwd, inputs, init_f, false)?;
        let (b_states, b_last) = self.run_lstm(g, b, bwd, inputs, init_b, true)?;
        let mut rows = Vec::with_capacity(f_states.len());
        for (f, r) in f_states.into_iter().zip(b_states) {
            rows.push(g.concat(&[f, r], 0)?);
        }
        let states = g.stack_rows(&rows)?;
        Ok((states, f_last, b_last))
    }

    /// Topic BiLSTM from zero initial states.
    pub fn encode_topic(
        &self,
        g: &mut Graph<T>,
        b: &Bound,
        emb: &EmbeddingTable<T>,
        topic: &[usize],
    ) -> Result<TopicEncoding> {
        if topic.is_empty() {
            return Err(Error::Input("topic token sequence is empty".into()));
        }
        let x = self.embed(g, emb, topic)?;
        let init = (self.zero_state(g)?, self.zero_state(g)?);
        let l = &self.layout;
        let (states, forward, backward) = self.bilstm(g, b, (l.topic_fwd, l.topic_bwd), x, init)?;
        let h_t = g.concat(&[forward.hidden, backward.hidden], 0)?;
        Ok(TopicEncoding {
            h_t,
            forward,
            backward,
            states,
        })
    }

    /// Document BiLSTM whose directions start from the topic encoder's final
    /// `(hidden, cell)` of the same direction. Returns `[n, 2h]`.
    pub fn encode_document(
        &self,
        g: &mut Graph<T>,
        b: &Bound,
        emb: &EmbeddingTable<T>,
        document: &[usize],
        topic: &TopicEncoding,
    ) -> Result<Var> {
        if document.is_empty() {
            return Err(Error::Input("document token sequence is empty".into()));
        }
        let x = self.embed(g, emb, document)?;
        let l = &self.layout;
        let (states, _, _) = self.bilstm(
            g,
            b,
            (l.doc_fwd, l.doc_bwd),
            x,
            (topic.forward, topic.backward),
        )?;
        Ok(states)
    }

    /// Reconstruction error of one BiLSTM: mean over steps of
    /// `|tanh(state A + b) - tanh(e)|^2`.
    pub fn reconstruction_loss(
        &self,
        g: &mut Graph<T>,
        b: &Bound,
        head: ReconIds,
        states: Var,
        emb: &EmbeddingTable<T>,
        tokens: &[usize],
    ) -> Result<Var> {
        let x = self.embed(g, emb, tokens)?;
        reconstruction(g, b.var(head.a), b.var(head.b), states, x)
    }

    fn mlp(&self, g: &mut Graph<T>, b: &Bound, ids: MlpIds, input: Var) -> Result<Var> {
        let hidden = g.matmul(input, b.var(ids.w1))?;
        let hidden = g.add(hidden, b.var(ids.b1))?;
        let hidden = g.relu(hidden);
        let out = g.matmul(hidden, b.var(ids.w2))?;
        g.add(out, b.var(ids.b2))
    }

    /// Stance logits `[con, neutral, pro]` from `ṽ_dt`, with `h_t`
    /// concatenated when the residual topic connection is on.
    pub fn classify_stance(&self, g: &mut Graph<T>, b: &Bound, v_tilde: Var, h_t: Var) -> Result<Var> {
        let input = if self.dims.residual_topic {
            g.concat(&[v_tilde, h_t], 0)?
        } else {
            v_tilde
        };
        self.mlp(g, b, self.layout.classifier, input)
    }

    /// Topic logits behind a gradient-reversal layer of strength `rho`.
    pub fn discriminate_topic(&self, g: &mut Graph<T>, b: &Bound, v_tilde: Var, rho: T) -> Result<Option<Var>> {
        let Some(ids) = self.layout.discriminator else {
            return Ok(None);
        };
        let reversed = g.grad_reverse(v_tilde, rho)?;
        self.mlp(g, b, ids, reversed).map(Some)
    }

    /// `W_tr v`, or `v` itself when the transformation is ablated.
    pub fn transform(&self, g: &mut Graph<T>, b: &Bound, v_dt: Var) -> Result<Var> {
        match self.layout.w_tr {
            Some(id) => g.matmul(b.var(id), v_dt),
            None => Ok(v_dt),
        }
    }

    /// `|W_tr - I|_F^2`; `None` when the transformation is ablated.
    pub fn identity_penalty(&self, g: &mut Graph<T>, b: &Bound) -> Result<Option<Var>> {
        let Some(id) = self.layout.w_tr else {
            return Ok(None);
        };
        let n = self.dims.repr_dim();
        let eye = g.constant(&[n, n], crate::autodiff::Tensor::<T>::identity(n).values().to_vec())?;
        identity_penalty(g, b.var(id), eye).map(Some)
    }

    /// Full forward pass for one example.
    pub fn forward(
        &self,
        g: &mut Graph<T>,
        b: &Bound,
        emb: &EmbeddingTable<T>,
        ex: &EncodedExample,
        rho: T,
    ) -> Result<ForwardVars> {
        let topic = self.encode_topic(g, b, emb, &ex.topic)?;
        let doc_states = self.encode_document(g, b, emb, &ex.document, &topic)?;
        let (attention, v_dt) = topic_attention(g, doc_states, topic.h_t, None)?;
        let v_tilde = self.transform(g, b, v_dt)?;
        let stance_logits = self.classify_stance(g, b, v_tilde, topic.h_t)?;
        let topic_logits = self.discriminate_topic(g, b, v_tilde, rho)?;
        let l = self.layout;
        let rec_topic = self.reconstruction_loss(g, b, l.rec_topic, topic.states, emb, &ex.topic)?;
        let rec_doc = self.reconstruction_loss(g, b, l.rec_doc, doc_states, emb, &ex.document)?;
        Ok(ForwardVars {
            h_t: topic.h_t,
            doc_states,
            attention,
            v_dt,
            v_tilde,
            stance_logits,
            topic_logits,
            rec_topic,
            rec_doc,
        })
    }

    /// Forward pass on a throwaway graph, returning plain values.
    pub fn infer(&self, emb: &EmbeddingTable<T>, ex: &EncodedExample) -> Result<ForwardOutputs<T>> {
        Ok(self.infer_batch(emb, std::slice::from_ref(ex))?.remove(0))
    }

    /// Forward passes over many examples, sharing one parameter binding per
    /// chunk of [`INFER_CHUNK`] examples.
    pub fn infer_batch(&self, emb: &EmbeddingTable<T>, examples: &[EncodedExample]) -> Result<Vec<ForwardOutputs<T>>> {
        let mut out = Vec::with_capacity(examples.len());
        for chunk in examples.chunks(INFER_CHUNK) {
            let mut g = Graph::new();
            let b = self.bind(&mut g);
            for ex in chunk {
                let vars = self.forward(&mut g, &b, emb, ex, T::zero())?;
                out.push(ForwardOutputs::from_vars(&g, &vars));
            }
        }
        Ok(out)
    }
}

/// Scaled dot-product attention of query `h_t` (`[k]`) over the rows of `states`
/// (`[n, k]`). Returns `(weights, weighted sum)`.
pub fn topic_attention<T: Scalar>(
    g: &mut Graph<T>,
    states: Var,
    h_t: Var,
    mask: Option<&[bool]>,
) -> Result<(Var, Var)> {
    let k = g.shape(h_t)[0];
    let scores = g.matmul(states, h_t)?;
    let scores = g.scale(scores, T::one() / T::of_usize(k).sqrt());
    let weights = g.softmax(scores, mask)?;
    let v = g.matmul(weights, states)?;
    Ok((weights, v))
}

/// `mean_i |tanh(s_i A + b) - tanh(x_i)|^2` over the rows of `states` and `inputs`.
pub fn reconstruction<T: Scalar>(g: &mut Graph<T>, a: Var, bias: Var, states: Var, inputs: Var) -> Result<Var> {
    let n = g.shape(states)[0];
    if g.shape(inputs)[0] != n {
        return Err(Error::shape("reconstruction", g.shape(states), g.shape(inputs)));
    }
    let rec = g.matmul(states, a)?;
    let rec = g.add(rec, bias)?;
    let rec = g.tanh(rec);
    let target = g.tanh(inputs);
    let diff = g.sq_diff(rec, target)?;
    let total = g.sum(diff);
    Ok(g.scale(total, T::one() / T::of_usize(n)))
}

/// `|w - eye|_F^2`.
pub fn identity_penalty<T: Scalar>(g: &mut Graph<T>, w: Var, eye: Var) -> Result<Var> {
    let d = g.sq_diff(w, eye)?;
    Ok(g.sum(d))
}
