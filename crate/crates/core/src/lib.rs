//! Static vacuum metrics with positive cosmological constant: model
//! solutions, radial Cauchy evolution from the lapse maximum set, virtual
//! masses, gradient estimates, near-maximum expansions and Łojasiewicz
//! exponents of the lapse.

pub mod cauchy;
pub mod error;
pub mod expansions;
pub mod lojasiewicz;
pub mod mass;
pub mod model;
pub mod numeric;
pub mod ode;
pub mod profile;
pub mod pseudo_radial;

pub use error::{Error, Result};
pub use model::{Dimension, Side};
