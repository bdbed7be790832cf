//! Calibration parameter space: named parameters with bounds and scales.
//!
//! Search strategies work in the unit cube; the space maps unit coordinates
//! to native parameter values, applying a log transform for rate-like
//! parameters whose ranges span many orders of magnitude.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone)]
pub struct ParamDef {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub scale: Scale,
    pub integer: bool,
}

impl ParamDef {
    fn to_unit(&self, x: f64) -> f64 {
        match self.scale {
            Scale::Linear => (x - self.lower) / (self.upper - self.lower),
            Scale::Log => (x.ln() - self.lower.ln()) / (self.upper.ln() - self.lower.ln()),
        }
    }

    fn from_unit(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        // Snap the endpoints so corners map to the bounds exactly.
        let x = if u == 0.0 {
            self.lower
        } else if u == 1.0 {
            self.upper
        } else {
            match self.scale {
                Scale::Linear => self.lower + u * (self.upper - self.lower),
                Scale::Log => (self.lower.ln() + u * (self.upper.ln() - self.lower.ln())).exp(),
            }
        };
        if self.integer {
            x.round().clamp(self.lower, self.upper)
        } else {
            x
        }
    }
}

/// The free-parameter space of one calibration run.
#[derive(Debug, Clone)]
pub struct ParamSpace {
    defs: Vec<ParamDef>,
}

impl ParamSpace {
    pub fn new(defs: Vec<ParamDef>) -> Result<Self> {
        for d in &defs {
            if !(d.lower < d.upper) {
                return Err(Error::Config(format!(
                    "parameter {}: lower bound {} must be below upper bound {}",
                    d.name, d.lower, d.upper
                )));
            }
            if d.scale == Scale::Log && d.lower <= 0.0 {
                return Err(Error::Config(format!(
                    "parameter {}: log scale requires positive lower bound",
                    d.name
                )));
            }
        }
        Ok(Self { defs })
    }

    pub fn dim(&self) -> usize {
        self.defs.len()
    }

    pub fn defs(&self) -> &[ParamDef] {
        &self.defs
    }

    pub fn names(&self) -> Vec<&str> {
        self.defs.iter().map(|d| d.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.defs.iter().position(|d| d.name == name)
    }

    /// Map unit-cube coordinates to native parameter values.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.dim());
        self.defs
            .iter()
            .zip(u)
            .map(|(d, &ui)| d.from_unit(ui))
            .collect()
    }

    /// Map native parameter values to unit-cube coordinates.
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim());
        self.defs
            .iter()
            .zip(x)
            .map(|(d, &xi)| d.to_unit(xi))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self
                .defs
                .iter()
                .zip(x)
                .all(|(d, &xi)| xi >= d.lower && xi <= d.upper)
    }
}

/// Canonical bounds and scales for every calibratable simulator parameter.
///
/// Rate-like parameters (arrival rates, mean reversion, volatility) use log
/// scale; counts and order sizes are integer-valued on a linear scale.
pub fn default_def(name: &str) -> Option<ParamDef> {
    let (lower, upper, scale, integer) = match name {
        "num_value_1" => (0.0, 200.0, Scale::Linear, true),
        "num_value_2" | "num_value_3" => (0.0, 50.0, Scale::Linear, true),
        "lambda_a_1" | "lambda_a_2" | "lambda_a_3" => (1e-16, 2e-12, Scale::Log, false),
        "min_size_value_1" => (6.0, 34.0, Scale::Linear, true),
        "max_size_value_1" => (36.0, 64.0, Scale::Linear, true),
        "min_size_value_2" => (76.0, 124.0, Scale::Linear, true),
        "max_size_value_2" => (126.0, 174.0, Scale::Linear, true),
        "min_size_value_3" => (176.0, 224.0, Scale::Linear, true),
        "max_size_value_3" => (226.0, 274.0, Scale::Linear, true),
        "num_noise" => (2500.0, 7500.0, Scale::Linear, true),
        "min_size_noise" => (6.0, 34.0, Scale::Linear, true),
        "max_size_noise" => (36.0, 64.0, Scale::Linear, true),
        "r_bar" => (1e2, 2e5, Scale::Log, false),
        "kappa" => (1e-16, 3e-12, Scale::Log, false),
        "fund_vol" => (1e-8, 1.0, Scale::Log, false),
        _ => return None,
    };
    Some(ParamDef {
        name: name.to_string(),
        lower,
        upper,
        scale,
        integer,
    })
}
