pub mod error;
pub mod linalg;
pub mod matpoly;
pub mod statespace;
pub mod synthesis;
pub mod robustness;
pub mod simulate;
pub mod document;
pub mod missile;
pub mod cli;
