pub mod cli;
pub mod correq;
pub mod error;
pub mod exact;
pub mod io;
pub mod lattice;
pub mod model;
pub mod tef;
