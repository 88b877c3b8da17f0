//! Cross-media similarity between text queries and unlabeled images, learned
//! from or matched against click-through logs.
//!
//! Five scorers share one interchange format, [`scores::ScoreTable`]:
//!
//! * `image2text` and `text2image` ([`neighbor`]) propagate logged clicks
//!   through visual and textual nearest neighbors;
//! * PSI and DeViSE ([`embedding`]) learn linear projections into a common
//!   space with a triplet hinge loss;
//! * ConSE ([`embedding`]) embeds images through predicted labels.
//!
//! Tables are combined by [`fusion`], queries are profiled by [`visualness`]
//! and runs are scored and compared by [`eval`]. [`synth`] generates
//! planted-relevance corpora for end-to-end checks.
//!
//! Data-parallel loops run on rayon with the default `parallel` feature and
//! sequentially without it; results are identical either way.

pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod neighbor;
pub mod par;
pub mod pipeline;
pub mod scores;
pub mod similarity;
pub mod synth;
pub mod visualness;

pub use error::{Error, Result};
