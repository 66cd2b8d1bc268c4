pub mod error;
pub mod fp;
pub mod model;
pub mod tree;
pub mod word;
pub mod quotient;
pub mod theory;
