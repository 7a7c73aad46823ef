//! Configuration, batch commands and the HTTP tile server for `skewprod`.

pub mod commands;
pub mod config;
pub mod probe;
pub mod render;
pub mod server;
