pub mod error;
pub mod expr;
pub mod integrate;
pub mod kernel;
pub mod fejer;
pub mod hconvexity;
pub mod bounds;
pub mod applications;
pub mod quadrature;
pub mod battery;
