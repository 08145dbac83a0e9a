//! Tree-topology learning over landmark graphs.
//!
//! A weighted complete graph over `n` landmarks is reduced to its minimum-cost
//! spanning tree, the tree is walked into a `2n - 1` vertex sequence, and that
//! sequence orders the inputs of a two-stream (structure + texture) recurrent
//! classifier with soft attention and gated fusion. The edge weights are tuned
//! by a cooperatively coevolving particle swarm using the classifier's training
//! loss as the objective.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line and
//! thread pools live in the `facetopo` companion crate.
#![no_std]
#![cfg_attr(docsrs, feature(doc_cfg))]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod ccpso2;
pub mod data;
mod error;
pub mod exec;
pub(crate) mod math;
pub mod model;
pub mod nn;
pub mod seed;
pub mod topology;
pub mod trainer;

pub use error::{Error, Result};
