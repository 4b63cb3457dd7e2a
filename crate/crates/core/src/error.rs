use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("directed cycle through `{0}`")]
    Cycle(String),
    #[error("undeclared variable `{0}`")]
    Name(String),
    #[error("role error: {0}")]
    Role(String),
    #[error("invalid graph: {0}")]
    Graph(String),
    #[error("no records")]
    EmptyData,
    #[error("record {record}: label `{label}` is not in the domain of `{variable}`")]
    UnknownLabel {
        record: usize,
        variable: String,
        label: String,
    },
    #[error("`{variable}` (in-degree {in_degree}) needs {count} response functions, over the cap of {cap}")]
    CapExceeded {
        variable: String,
        in_degree: usize,
        count: String,
        cap: usize,
    },
    #[error("profile space of {size} exceeds the cap of {cap}")]
    ProfileCap { size: String, cap: usize },
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("condition has zero probability under the observational distribution")]
    ZeroCondition,
    #[error("direct path requested but edge {0} -> {1} is absent")]
    MissingEdge(String, String),
    #[error("redlining attribute set is empty")]
    EmptyRedlining,
    #[error("observational distribution is inconsistent with every response distribution")]
    Infeasible,
    #[error("program is unbounded")]
    Unbounded,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("problem too large for enumeration: {0}")]
    Size(String),
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("invalid query: {0}")]
    Query(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
