use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("simulation failed at theta {theta:?}: {source}")]
    Simulation {
        theta: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("linear algebra failure: {0}")]
    Numerics(String),

    #[error("parse error in {file} line {line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
