pub mod commands;
pub mod config;
pub mod error;
pub mod journal;
pub mod model;
pub mod output;
pub mod plot;
