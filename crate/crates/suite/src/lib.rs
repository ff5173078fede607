//! Holds the acceptance suite in `tests/acceptance.rs`; there is no library code.
//!
//! The suite lives in its own package so that `cargo test --workspace` runs it
//! after every other test binary.
