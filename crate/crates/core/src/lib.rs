pub mod agent;
pub mod collision;
pub mod control;
pub mod error;
pub mod ethics;
pub mod geometry;
pub mod planner;
pub mod prediction;
pub mod risk;
pub mod scenario;

pub use error::{Error, Result};
