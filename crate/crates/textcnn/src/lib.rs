//! File formats, report emitters and the command pipeline around
//! `textcnn-core`.

pub mod checkpoint;
pub mod config;
mod error;
pub mod formats;
pub mod io;
pub mod pipeline;
pub mod svg;

pub use error::{Error, Result};
