use std::path::PathBuf;

use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid topology: {}", join_violations(.0))]
    Topology(Vec<Violation>),

    #[error("invalid material: {0}")]
    Material(String),

    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("form-finding failed: {0}")]
    FormFind(String),

    #[error(
        "structure is not in equilibrium: residual norm {residual:.3e} exceeds {tolerance:.3e}"
    )]
    NotInEquilibrium { residual: f64, tolerance: f64 },

    #[error("reduced stiffness matrix is singular: near-zero eigenvalue {eigenvalue:.3e} with dominant motion at vertex {vertex} ({axis})")]
    SingularStiffness {
        eigenvalue: f64,
        vertex: usize,
        axis: char,
    },

    #[error("structural analysis: {0}")]
    Structural(String),

    #[error("scaffold: {0}")]
    Scaffold(String),

    #[error("export: {0}")]
    Export(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
