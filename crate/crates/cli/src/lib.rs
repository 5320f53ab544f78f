//! Command-line harness and HTTP service around the `coshrem` detectors.
//!
//! The binary exposes `phantom`, `detect`, `bench`, `pfom` and `serve`; this
//! library holds their implementations so they can be driven from tests.

pub mod bench;
pub mod commands;
pub mod io;
pub mod render;
pub mod schema;
pub mod server;
pub mod syscache;
