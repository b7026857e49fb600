pub mod config;
pub mod confidence;
pub mod controllers;
pub mod error;
pub mod middleware;
pub mod resource;
pub mod rl;
pub mod runner;
pub mod sim;
pub mod simplex;

pub use config::RunConfig;
pub use error::{Error, Result};
