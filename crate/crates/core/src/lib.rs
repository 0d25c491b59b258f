//! Streaming neuromorphic clustering and classification.
//!
//! The building blocks, bottom up:
//!
//! * [`numeric`]: spike vectors, centroids and the rectilinear (`sad`) metric.
//! * [`dendrite`]: thresholded segments, winner-take-all inhibition and the
//!   capture/backoff/search weight update.
//! * [`kmeans`]: offline k-means used as a quality reference.
//! * [`encoders`]: waveform framing, pixel images, similarity coding and
//!   receptive-field extraction with two-rail coding.
//! * [`classifier`]: clustering-voter units grouped per receptive field, with
//!   vote tallying and label selection.

pub mod classifier;
pub mod dendrite;
pub mod encoders;
pub mod error;
pub mod kmeans;
pub mod numeric;

pub use classifier::{build_network, CvGroup, CvUnit, Network, VoteTally};
pub use dendrite::{binarize, sdp_update, segment_eval, wta, Dendrite, SdpParams, WeightMatrix, WtaOutput};
pub use encoders::{FrameParams, PixelImage, RfEncoding};
pub use error::{Error, Result};
pub use kmeans::{kmeans, kmeans_multi_seed, KmeansResult, MultiSeedResult};
pub use numeric::{Centroid, ClusterSet, SpikeVector};
