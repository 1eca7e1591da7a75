//! Subcommand implementations.

pub mod bench;
pub mod gen;
pub mod solve;
pub mod surface;

/// Fixed file names inside a generated instance directory.
pub const FILE_META: &str = "meta.json";
pub const FILE_DENSE: &str = "a.rkph";
pub const FILE_PATTERNS: &str = "patterns.rkph";
pub const FILE_Y: &str = "y.rkph";
pub const FILE_X: &str = "x.rkph";
