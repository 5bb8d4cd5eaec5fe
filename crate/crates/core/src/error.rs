use std::io;

use thiserror::Error;

use crate::path::CanonPath;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: CanonPath,
        #[source]
        source: io::Error,
    },

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("{0} is not a node of the include graph")]
    UnknownNode(CanonPath),

    #[error("check command template must contain `{{header}}`: {0:?}")]
    TemplateMissingHeader(String),

    #[error("check command template is not valid shell syntax: {0:?}")]
    TemplateSyntax(String),

    #[error("invalid diagnostic pattern: {0}")]
    DiagnosticPattern(#[from] regex::Error),

    #[error("cycle breaking needs a component with at least two members, got {0}")]
    ComponentTooSmall(usize),

    #[error("layering violation: include cycle spans libraries {}: {}", .libraries.join(", "), join_paths(.members))]
    LayeringViolation {
        libraries: Vec<String>,
        members: Vec<CanonPath>,
    },

    #[error("module {module}: submodule name {name:?} used by both {first} and {second}")]
    DuplicateSubmodule {
        module: String,
        name: String,
        first: String,
        second: String,
    },

    #[error("libraries {first:?} and {second:?} both sanitize to module name {name:?}")]
    ModuleNameCollision {
        name: String,
        first: String,
        second: String,
    },

    #[error("modulemap line {line}: {message}")]
    ModulemapParse { line: usize, message: String },

    #[error("overlay: {message} at line {line} column {column}")]
    OverlaySyntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("overlay: {0}")]
    OverlayInvalid(String),

    #[error("overlay target {target} is mounted twice: {first} and {second}")]
    DuplicateMount {
        target: String,
        first: String,
        second: String,
    },

    #[error("module assignment refers to {0}, which is not a header in the include graph")]
    UnknownAssignment(CanonPath),
}

fn join_paths(paths: &[CanonPath]) -> String {
    paths
        .iter()
        .map(CanonPath::as_str)
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub(crate) fn io(path: &CanonPath, source: io::Error) -> Self {
        Error::Io {
            path: path.clone(),
            source,
        }
    }
}
