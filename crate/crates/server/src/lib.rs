//! In-process world server: authoritative scene state behind the line-delimited JSON protocol.
//!
//! [`World`] holds the state and implements every operation as a plain method. [`Server`]
//! wraps it in a TCP listener with one reader and one writer thread per session. All
//! mutations and clock ticks take the world's write lock, so a batch is applied atomically
//! with respect to concurrent readers.

mod server;
mod world;

pub use server::{Server, ServerConfig, SessionStats};
pub use world::{World, DEFAULT_LIGHT, DEFAULT_STEP_NS};
