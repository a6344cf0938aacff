pub mod activations;
pub mod datasets;
pub mod dimred;
pub mod experiments;
pub mod gapcode;
pub mod graphcore;
pub mod network;
pub mod numkit;
pub mod partition;
pub mod pruning;
