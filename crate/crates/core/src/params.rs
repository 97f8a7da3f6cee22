//! Physical configuration of an experiment.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The model quadruple (β, λ, N, M) plus the time horizon.
///
/// β is the coupling strength of the interaction kernel, λ the positional
/// decay rate, `n_tokens` the prompt length N, `vocab_size` the codebook
/// size M, and `t_final` the depth (continuous layer time) of the dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub lambda: f64,
    pub n_tokens: usize,
    pub vocab_size: usize,
    pub t_final: f64,
}

impl ModelParams {
    pub fn new(
        beta: f64,
        lambda: f64,
        n_tokens: usize,
        vocab_size: usize,
        t_final: f64,
    ) -> Result<Self> {
        let p = ModelParams {
            beta,
            lambda,
            n_tokens,
            vocab_size,
            t_final,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::Config(format!("beta must be > 0, got {}", self.beta)));
        }
        if !self.lambda.is_finite() {
            return Err(Error::Config(format!(
                "lambda must be finite, got {}",
                self.lambda
            )));
        }
        if self.n_tokens < 1 {
            return Err(Error::Config("n_tokens must be >= 1".into()));
        }
        if self.vocab_size < 2 {
            return Err(Error::Config(format!(
                "vocab_size must be >= 2, got {}",
                self.vocab_size
            )));
        }
        if !(self.t_final >= 0.0) {
            return Err(Error::Config(format!(
                "t_final must be >= 0, got {}",
                self.t_final
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_valid_params() {
        assert!(ModelParams::new(1.0, 1.0, 64, 8, 1.0).is_ok());
        assert!(ModelParams::new(0.5, -2.0, 1, 2, 0.0).is_ok());
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(ModelParams::new(0.0, 1.0, 64, 8, 1.0).is_err());
        assert!(ModelParams::new(-1.0, 1.0, 64, 8, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0, 8, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 64, 1, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 64, 8, -0.1).is_err());
        assert!(ModelParams::new(1.0, f64::NAN, 64, 8, 1.0).is_err());
    }
}
