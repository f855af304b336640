//! Distribution laws, autoregressive models and the coupled
//! temperature/humidity network used by the generation engine.

pub mod ar;
pub mod clearness;
pub mod mlp;
pub mod score;
pub mod weibull;

pub use ar::{fit_ar, fit_ar_series, fit_arx, sample_acf, ArModel, ExogPart, Transform};
pub use clearness::{fit_clearness_law, Climate, ClearnessLaw};
pub use mlp::{fit_mlp, MlpModel, MlpSpec, MLP_INPUTS};
pub use score::{normal_score, NormalScore};
pub use weibull::{fit_weibull, WeibullFit, WeibullLaw};
