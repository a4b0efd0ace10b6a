use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{ParamId, ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sizes and structural switches of a TOAD network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelDims {
    pub embedding_dim: usize,
    /// Hidden size of each LSTM direction.
    pub hidden: usize,
    pub stance_hidden: usize,
    pub disc_hidden: usize,
    /// Discriminator output classes: training topics plus the zero-shot topic.
    pub n_topics: usize,
    /// Apply the learned `W_tr` transformation to the document vector.
    pub transformation: bool,
    /// Concatenate the topic encoding onto the classifier input.
    pub residual_topic: bool,
    /// Include the topic discriminator.
    pub adversary: bool,
}

impl ModelDims {
    /// Width of the document representation (both LSTM directions).
    pub fn repr_dim(&self) -> usize {
        2 * self.hidden
    }

    pub fn classifier_input(&self) -> usize {
        if self.residual_topic {
            4 * self.hidden
        } else {
            2 * self.hidden
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("embedding_dim", self.embedding_dim),
            ("hidden", self.hidden),
            ("stance_hidden", self.stance_hidden),
            ("disc_hidden", self.disc_hidden),
        ];
        for (name, v) in sizes {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.adversary && self.n_topics < 2 {
            return Err(Error::Config(format!(
                "discriminator needs at least 2 topics, got {}",
                self.n_topics
            )));
        }
        Ok(())
    }
}

/// Parameter slots of one LSTM direction. Gates are packed `[i, f, g, o]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LstmIds {
    /// `[embedding_dim, 4h]`
    pub w_ih: ParamId,
    /// `[h, 4h]`
    pub w_hh: ParamId,
    /// `[4h]`
    pub bias: ParamId,
}

/// Slots of a two-layer ReLU network `x -> relu(x W1 + b1) W2 + b2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MlpIds {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

/// Slots of a reconstruction head `tanh(state A + b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReconIds {
    /// `[2h, embedding_dim]`
    pub a: ParamId,
    pub b: ParamId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub topic_fwd: LstmIds,
    pub topic_bwd: LstmIds,
    pub doc_fwd: LstmIds,
    pub doc_bwd: LstmIds,
    pub rec_topic: ReconIds,
    pub rec_doc: ReconIds,
    pub w_tr: Option<ParamId>,
    pub classifier: MlpIds,
    pub discriminator: Option<MlpIds>,
}

/// All trainable arrays of the network plus their layout.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub dims: ModelDims,
    pub store: ParamStore<T>,
    pub layout: Layout,
}

struct Init<'a, T> {
    store: &'a mut ParamStore<T>,
    rng: ChaCha8Rng,
}

impl<T: Scalar> Init<'_, T> {
    fn uniform(&mut self, name: &str, shape: &[usize]) -> Result<ParamId> {
        let rng = &mut self.rng;
        let t = Tensor::from_fn(shape, |_| T::of(rng.gen_range(-0.1..=0.1)));
        self.store.insert(name, t)
    }

    fn zeros(&mut self, name: &str, len: usize) -> Result<ParamId> {
        self.store.insert(name, Tensor::zeros(&[len]))
    }

    fn lstm(&mut self, prefix: &str, d: usize, h: usize) -> Result<LstmIds> {
        let w_ih = self.uniform(&format!("{prefix}.w_ih"), &[d, 4 * h])?;
        let w_hh = self.uniform(&format!("{prefix}.w_hh"), &[h, 4 * h])?;
        let mut bias = Tensor::zeros(&[4 * h]);
        for v in &mut bias.values_mut()[h..2 * h] {
            *v = T::one();
        }
        let bias = self.store.insert(format!("{prefix}.bias"), bias)?;
        Ok(LstmIds { w_ih, w_hh, bias })
    }

    fn mlp(&mut self, prefix: &str, input: usize, hidden: usize, out: usize) -> Result<MlpIds> {
        Ok(MlpIds {
            w1: self.uniform(&format!("{prefix}.w1"), &[input, hidden])?,
            b1: self.zeros(&format!("{prefix}.b1"), hidden)?,
            w2: self.uniform(&format!("{prefix}.w2"), &[hidden, out])?,
            b2: self.zeros(&format!("{prefix}.b2"), out)?,
        })
    }

    fn recon(&mut self, prefix: &str, h2: usize, d: usize) -> Result<ReconIds> {
        Ok(ReconIds {
            a: self.uniform(&format!("{prefix}.a"), &[h2, d])?,
            b: self.zeros(&format!("{prefix}.b"), d)?,
        })
    }
}

impl<T: Scalar> ModelParams<T> {
    /// Fresh parameters: matrices uniform in `[-0.1, 0.1]`, biases zero with
    /// forget-gate bias 1, and `W_tr` the identity.
    pub fn init(dims: ModelDims, seed: u64) -> Result<Self> {
        dims.validate()?;
        let (d, h) = (dims.embedding_dim, dims.hidden);
        let mut store = ParamStore::new();
        let mut init = Init {
            store: &mut store,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        let topic_fwd = init.lstm("topic_lstm.fwd", d, h)?;
        let topic_bwd = init.lstm("topic_lstm.bwd", d, h)?;
        let doc_fwd = init.lstm("doc_lstm.fwd", d, h)?;
        let doc_bwd = init.lstm("doc_lstm.bwd", d, h)?;
        let rec_topic = init.recon("rec_topic", 2 * h, d)?;
        let rec_doc = init.recon("rec_doc", 2 * h, d)?;
        let w_tr = if dims.transformation {
            Some(init.store.insert("w_tr", Tensor::identity(2 * h))?)
        } else {
            None
        };
        let classifier = init.mlp("classifier", dims.classifier_input(), dims.stance_hidden, 3)?;
        let discriminator = if dims.adversary {
            Some(init.mlp("discriminator", 2 * h, dims.disc_hidden, dims.n_topics)?)
        } else {
            None
        };
        Ok(Self {
            dims,
            store,
            layout: Layout {
                topic_fwd,
                topic_bwd,
                doc_fwd,
                doc_bwd,
                rec_topic,
                rec_doc,
                w_tr,
                classifier,
                discriminator,
            },
        })
    }

    /// Rebuilds the layout from a store of named tensors, inferring sizes
    /// and structure from the shapes.
    pub fn from_store(store: ParamStore<T>) -> Result<Self> {
        let need = |name: &str| {
            store
                .id_of(name)
                .ok_or_else(|| Error::Config(format!("checkpoint lacks parameter {name}")))
        };
        let shape = |id: ParamId| store.get(id).shape().to_vec();
        let lstm = |prefix: &str| -> Result<LstmIds> {
            Ok(LstmIds {
                w_ih: need(&format!("{prefix}.w_ih"))?,
                w_hh: need(&format!("{prefix}.w_hh"))?,
                bias: need(&format!("{prefix}.bias"))?,
            })
        };
        let mlp = |prefix: &str| -> Result<MlpIds> {
            Ok(MlpIds {
                w1: need(&format!("{prefix}.w1"))?,
                b1: need(&format!("{prefix}.b1"))?,
                w2: need(&format!("{prefix}.w2"))?,
                b2: need(&format!("{prefix}.b2"))?,
            })
        };
        let recon = |prefix: &str| -> Result<ReconIds> {
            Ok(ReconIds {
                a: need(&format!("{prefix}.a"))?,
                b: need(&format!("{prefix}.b"))?,
            })
        };
        let topic_fwd = lstm("topic_lstm.fwd")?;
        let w_ih = shape(topic_fwd.w_ih);
        let w_hh = shape(topic_fwd.w_hh);
        let (d, h) = match (w_ih.as_slice(), w_hh.as_slice()) {
            ([d, g], [h, g2]) if *g == 4 * h && g == g2 => (*d, *h),
            _ => {
                return Err(Error::Config(format!(
                    "inconsistent LSTM shapes {w_ih:?} / {w_hh:?}"
                )))
            }
        };
        let classifier = mlp("classifier")?;
        let cls_w1 = shape(classifier.w1);
        let discriminator = if store.id_of("discriminator.w1").is_some() {
            Some(mlp("discriminator")?)
        } else {
            None
        };
        let dims = ModelDims {
            embedding_dim: d,
            hidden: h,
            stance_hidden: cls_w1[1],
            disc_hidden: discriminator.map_or(1, |m| shape(m.w1)[1]),
            n_topics: discriminator.map_or(0, |m| shape(m.w2)[1]),
            transformation: store.id_of("w_tr").is_some(),
            residual_topic: cls_w1[0] == 4 * h,
            adversary: discriminator.is_some(),
        };
        let layout = Layout {
            topic_fwd,
            topic_bwd: lstm("topic_lstm.bwd")?,
            doc_fwd: lstm("doc_lstm.fwd")?,
            doc_bwd: lstm("doc_lstm.bwd")?,
            rec_topic: recon("rec_topic")?,
            rec_doc: recon("rec_doc")?,
            w_tr: store.id_of("w_tr"),
            classifier,
            discriminator,
        };
        let fresh = ModelParams::<T>::init(dims, 0)?;
        for (name, t) in fresh.store.iter() {
            let Some(id) = store.id_of(name) else {
                return Err(Error::Config(format!("checkpoint lacks parameter {name}")));
            };
            if store.get(id).shape() != t.shape() {
                return Err(Error::Config(format!(
                    "parameter {name} has shape {:?}, expected {:?}",
                    store.get(id).shape(),
                    t.shape()
                )));
            }
        }
        if fresh.store.len() != store.len() {
            return Err(Error::Config(format!(
                "checkpoint has {} parameters, model expects {}",
                store.len(),
                fresh.store.len()
            )));
        }
        Ok(Self {
            dims,
            store,
            layout,
        })
    }

    /// Encoder, reconstruction and transformation parameters: everything the
    /// discriminator's reversed gradient can reach.
    pub fn encoder_ids(&self) -> Vec<ParamId> {
        let l = &self.layout;
        let mut ids = Vec::new();
        for lstm in [l.topic_fwd, l.topic_bwd, l.doc_fwd, l.doc_bwd] {
            ids.extend([lstm.w_ih, lstm.w_hh, lstm.bias]);
        }
        ids.extend(l.w_tr);
        ids
    }

    pub fn discriminator_ids(&self) -> Vec<ParamId> {
        self.layout
            .discriminator
            .map(|m| vec![m.w1, m.b1, m.w2, m.b2])
            .unwrap_or_default()
    }
}
