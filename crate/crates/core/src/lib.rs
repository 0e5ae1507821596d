//! Benefit-to-cost ratio optimization for shelter capacity planning.

pub mod fractional;
pub mod harness;
pub mod instance;
pub mod lp;
pub mod mip;
pub mod model;
pub mod oracle;
pub mod tolerance;
