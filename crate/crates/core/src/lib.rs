#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cstar;
pub mod dynamics;
pub mod element;
pub mod gns;
pub mod linalg;
pub mod models;
pub mod scalar;

pub use scalar::{Real, C};

pub type CMatrix = linalg::ComplexMatrix<f64>;
pub type HMatrix = linalg::HermitianMatrix<f64>;
pub type Value = cstar::CStarValue<f64>;
pub type Grid = cstar::Grid<f64>;
pub type CMatrix32 = linalg::ComplexMatrix<f32>;
pub type HMatrix32 = linalg::HermitianMatrix<f32>;
pub type Value32 = cstar::CStarValue<f32>;
pub type Grid32 = cstar::Grid<f32>;
