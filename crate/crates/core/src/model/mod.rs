//! The topic-adversarial stance network.

mod checkpoint;
mod network;
mod params;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use network::{
    identity_penalty, reconstruction, topic_attention, Bound, EncodedExample, ForwardOutputs,
    ForwardVars, LstmState, TopicEncoding, INFER_CHUNK,
};
pub use params::{Layout, LstmIds, MlpIds, ModelDims, ModelParams, ReconIds};
