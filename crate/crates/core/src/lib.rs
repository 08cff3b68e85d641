//! Self-similar sets with prescribed Hausdorff measure: construction of the
//! homothety families `Phi_t` and certified bounds on `H^s(K_t)`.

pub mod budget;
pub mod construction;
pub mod density;
pub mod error;
pub mod geometry;
pub mod ifs;
pub mod interval;
pub mod measure;
pub mod scalar;
pub mod search;

pub use budget::Budget;
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Point64 = geometry::Point<f64>;
pub type Ifs64 = ifs::Ifs<f64>;
pub type Measure64 = measure::NaturalMeasure<f64>;
pub type Params64 = construction::ConstructionParams<f64>;
pub type Estimate64 = density::HausdorffEstimate<f64>;
pub type Point32 = geometry::Point<f32>;
pub type Ifs32 = ifs::Ifs<f32>;
pub type Measure32 = measure::NaturalMeasure<f32>;
