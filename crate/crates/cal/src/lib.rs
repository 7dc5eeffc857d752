//! CAL — context-aware learning.
//!
//! An online, unsupervised cortical network built from three synapse
//! arrays per region: a binary correlator (feed-forward activation of
//! mini-columns), a recurrent sequence memory (prediction of the next
//! input from lateral context) and an apical feedback array (gain
//! modulation from higher levels). Regions stack into a hierarchy with
//! temporal pooling between levels, producing increasingly stable
//! representations of the input stream.
//!
//! Everything is deterministic under a fixed seed and the whole network
//! state snapshots to a bit-exact binary format.

pub mod bitvec;
pub mod codec;
pub mod config;
pub mod correlator;
pub mod error;
pub mod experiments;
pub mod network;
pub mod region;
pub mod sequence;
mod snapshot;
pub mod synapses;

pub use bitvec::{concat, union_window, DenseExcitation, SparseBitVector};
pub use codec::{ingest_frame, BinaryImage, DecodeTable, EncoderSpec, ScalarKind};
pub use correlator::{default_k_out, Correlator, CorrelatorMode, CountMatrix};
pub use config::{topology_from_toml, topology_to_toml, TopologyDoc};
pub use error::{CalError, Result};
pub use network::{
    Network, RegionSpec, SensorKind, SensorSpec, SensorValue, SourceRef, TopologySpec,
};
pub use region::{
    apical_gain, columns_of_cells, ChannelSpec, CorrelatorKind, Region, RegionConfig, RegionOutput,
};
pub use sequence::{SequenceMemory, SmGeometry, SmStepOutput};
pub use synapses::{
    metaplastic_factor, quantize, select_top_k, PlasticityParams, SynapseArray, UpdateStats,
    WeightBits,
};
