use thiserror::Error;

/// Errors raised by the model, analysis and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}` = {value}: must be {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    #[error("{quantity} is undefined at {argument} = {value}")]
    Domain {
        quantity: &'static str,
        argument: &'static str,
        value: f64,
    },

    #[error("binding harvest is undefined without deviation costs (kappa_1 = kappa_2 = 0)")]
    NoDeviationCosts,

    #[error("recruitment function violates the Schaefer shape at x = {x}: {reason}")]
    NotSchaeferShaped { x: f64, reason: &'static str },

    #[error("invalid simulation setup: {0}")]
    InvalidSetup(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

pub(crate) fn require(
    ok: bool,
    name: &'static str,
    value: f64,
    requirement: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value,
            requirement,
        })
    }
}

pub(crate) fn positive_stock(quantity: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ModelError::Domain {
            quantity,
            argument: "x",
            value: x,
        })
    }
}
