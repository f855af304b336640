//! Synthetic hourly weather for building simulation.
//!
//! The crate covers the full chain from measured weather files to simulated
//! building loads:
//!
//! * [`weather`]: the hourly multivariate series format and its CSV encoding.
//! * [`stats`]: descriptive statistics, histograms and independence tests.
//! * [`solar`]: solar geometry, clearness index and radiation correlations.
//! * [`stoch`]: Weibull, bounded clearness and autoregressive models, plus a
//!   small feedforward network for coupled temperature and humidity.
//! * [`classify`]: PCA and Ward clustering of days into weather classes,
//!   representative days and typical sequence search.
//! * [`generate`]: the model library and the synthetic sequence engine.
//! * [`psychro`]: moist air properties, sky temperature and site transposition.
//! * [`building`]: multizone RC thermal models, ideal HVAC loads and comfort.
//! * [`demo`]: a self-contained synthetic data set exercising everything above.

pub mod building;
pub mod classify;
pub mod demo;
pub mod error;
pub mod generate;
pub mod psychro;
pub mod solar;
pub mod stats;
pub mod stoch;
pub mod weather;

pub use error::{Error, Result};
