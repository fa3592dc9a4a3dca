//! Range-filtered approximate nearest neighbor search (RF-ANNS).
//!
//! The central structure is [`HsigIndex`], a hierarchical segmented inclusive
//! graph. Objects are split into attribute segments by an equi-depth
//! histogram, and every node keeps one adjacency chunk per segment. The same
//! index answers a range query three ways:
//!
//! - **pre-filtering**: skip-list descent to the first in-range object, then
//!   an exact scan of the range ([`HsigIndex::search_pre`]);
//! - **post-filtering**: graph search over the bitmap-marked global edges,
//!   then an attribute filter ([`HsigIndex::search_post`]);
//! - **hybrid filtering**: graph search restricted to the chunks of the
//!   segments the range touches ([`HsigIndex::search_hybrid`]).
//!
//! [`selector`] picks one of the three per query from the exact range
//! cardinality. [`sig_knng`] holds the brute-force segmented kNN graph used to
//! check the inclusivity property, and [`hnsw`] is the plain HNSW the index is
//! built from. [`harness`] has data generation, file formats and benchmarks.
//!
//! ```
//! use unify::{harness::synth, HsigIndex, HsigParams, RangeQuery, SearchParams};
//!
//! let data = synth::gen_synthetic(500, 8, 0.0, 10_000.0, 7).unwrap();
//! let params = HsigParams { segments: 4, ef_construction: 64, ..HsigParams::default() };
//! let index = HsigIndex::build(&data, params).unwrap();
//!
//! let query = RangeQuery::new(data.vector(3).to_vec(), 2_000.0, 6_000.0, 5).unwrap();
//! let hits = index.search_hybrid(&query, &SearchParams::new(50, 16)).unwrap();
//! assert!(hits.len() <= 5);
//! ```

pub mod dataset;
pub mod distance;
pub mod error;
pub mod harness;
pub mod hnsw;
pub mod hsig;
pub mod oracle;
pub mod segmentation;
pub mod selector;
pub mod sig_knng;

mod visited;

pub use dataset::{AttributedVector, Dataset, Neighbor, RangeQuery, ResultSet};
pub use distance::{distance, squared_l2, Scored};
pub use error::{Error, FormatError, Result};
pub use hnsw::{HnswIndex, HnswParams};
pub use hsig::{HsigIndex, HsigParams, NeighborSelection, SearchParams, SearchStats};
pub use oracle::{brute_force_rfnns, recall};
pub use segmentation::SegmentBoundaries;
pub use selector::{Strategy, Thresholds};
