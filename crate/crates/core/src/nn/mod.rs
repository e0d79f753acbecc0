//! The learned future-return regressor: state extraction, network, training
//! and file formats.

mod dataset;
mod network;
mod state;
mod train;
mod weights_io;

pub use dataset::Dataset;
pub use network::{forward, state_to_input, value_net_layers, Layer, LayerSpec, ModelWeights};
pub use state::{extract_state, NetState, STATE_CHANNELS, STATE_LEN, STATE_SIDE};
pub use train::{label_variance, mse, train, EpochStats, TrainConfig, TrainOutcome};
pub use weights_io::{decode_weights, encode_weights, load_weights, save_weights, weights_hash};
