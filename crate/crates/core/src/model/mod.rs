//! Graph encoding, the message-passing network, losses and the optimizer.

pub mod graph;
pub mod loss;
pub mod net;
pub mod optim;

pub use graph::{encode_graph, BipartiteGraph};
pub use loss::{bce, bce_logit, loss_coverage, loss_nd, loss_prob, loss_threshold, LossSpec};
pub use net::{
    backward, forward, forward_cached, sigmoid, heads_backward, heads_forward, read_checkpoint, write_checkpoint, Group, Head,
    ModelOutput, ModelParams, OutputGrad, DEFAULT_HIDDEN, DEFAULT_ROUNDS,
};
pub use optim::Sgd;
