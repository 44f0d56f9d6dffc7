pub mod error;
pub mod cli;
pub mod design;
pub mod extension;
pub mod io;
pub mod metrics;
pub mod network;
pub mod throughput;

pub use error::VfError;
