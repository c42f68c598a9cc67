//! Exact classification of DAG hypotheses under causal simplicity razors.
//!
//! Everything is computed by enumeration and exact rational arithmetic at
//! desk scale (up to five variables for class enumeration, six for
//! single-DAG checks).

pub mod catalog;
pub mod error;
pub mod graph;
pub mod imset;
pub mod independence;
pub mod multinomial;
pub mod random;
pub mod razor;
pub mod scoring;
pub mod transforms;
pub mod vset;

pub use error::{Error, Result};
pub use graph::{Dag, Triple, TripleKind};
pub use independence::{AxiomSet, CiStatement, IndependenceModel};
pub use multinomial::{JointTable, MultinomialModel, RangeSpec};
pub use razor::{Membership, RazorId, RazorVerdict, Witness};
pub use vset::VertexSet;
