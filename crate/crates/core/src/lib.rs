pub mod bodies;
pub mod empirical;
pub mod error;
pub mod geom;
pub mod harness;
pub mod measures;
pub mod mixed;
pub mod projbody;
pub mod rearrange;
pub mod rng;
pub mod scan;
pub mod symmetrize;
pub mod tolerance;

pub use error::{Error, Result};
pub use geom::{convex_hull, Direction, Facet, Polytope};
