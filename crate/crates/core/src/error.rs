use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("`{name}` = {value} is outside {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid {name} `{input}`: expected {expected}")]
    Parse {
        name: &'static str,
        input: String,
        expected: &'static str,
    },

    #[error("invalid pair mixture: {0}")]
    Mixture(String),

    #[error("power is undefined: the mixture contains no false union hypotheses")]
    NoFalseHypotheses,

    #[error("invalid p-value matrix: {0}")]
    Matrix(String),

    #[error("no threshold in (0, alpha] satisfies the approximate FWER constraint")]
    Infeasible,

    #[error("invalid simulation config: field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_open_unit(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            expected: "(0, 1)",
        })
    }
}
