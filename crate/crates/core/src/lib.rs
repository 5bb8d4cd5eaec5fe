//! Include-graph analysis and artifact generation for migrating a C++
//! codebase to Clang modules.

pub mod algo;
pub mod error;
pub mod graph;
pub mod manifest;
pub mod modulemap;
pub mod overlay;
pub mod par;
pub mod path;
pub mod planner;
pub mod sanitizer;
pub mod scan;
pub mod tree;

pub use error::{Error, Result};
pub use path::CanonPath;
