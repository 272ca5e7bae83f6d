//! Lower-triangular polynomial transport maps and their weighted fitting.

mod basis;
mod fit;
mod index;
mod map;
mod objective;
mod poly;

pub use basis::BasisMatrices;
pub use fit::{fit_map, fit_map_to_samples, FitOptions, FitReport};
pub use index::{build_index_set, MultiIndexSet};
pub use map::{MapRecord, Preconditioner, TriangularMap};
pub use objective::{gradient, hessian, objective};
