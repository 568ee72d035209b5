//! Shortfall risk of joint financial and ESG-rating positions under
//! multi-attribute utilities: scenario generation, risk measurement,
//! calibration from monthly history and risk-minimizing portfolios.

pub mod calibration;
pub mod cli;
pub mod config;
pub mod error;
pub mod extreal;
pub mod linalg;
pub mod portfolio;
pub mod risk;
pub mod scenarios;
pub mod utility;

pub use error::{Error, Result};
pub use extreal::ExtReal;
pub use nalgebra::DMatrix;
