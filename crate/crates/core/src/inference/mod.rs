//! The observer's estimators: the Broca (signalling) and Wernicke
//! (listening) functions, and the MAP estimate of intended trajectories the
//! latter is fitted on.

mod broca;
mod map;
mod wernicke;

pub use broca::{broca_emit, fit_broca, BrocaModel, Histogram, MODEL_FORMAT_VERSION};
pub use map::{
    boltzmann_message_likelihood, map_target, EmpiricalListener, ListenerModel, MapConfig,
    MapEstimator, MapVariant,
};
pub use wernicke::{fit_wernicke, wernicke_decode, Label, WernickeModel, DEFAULT_BACKOFF_THRESHOLD};
