//! Support code for the `acceptance` test target, which runs every acceptance criterion and
//! prints one PASS/FAIL line per criterion.
//!
//! ```text
//! cargo test -p simsync-verify --test acceptance
//! cargo test -p simsync-verify --test acceptance -- collider
//! ```

pub mod reference;
