//! Contagion financial pricing: an agent-based market in which traders on a
//! small-world network accumulate information, topple in self-organized
//! critical cascades and imitate each other's prices, together with the
//! statistics used to check the resulting price series for the stylized
//! facts of real markets.

// `!(x > 0.0)` style guards are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod information;
pub mod market;
pub mod network;
pub mod rng;
pub mod stats;
pub mod traders;
pub mod workbench;

pub use config::{Aggregation, SimConfig};
pub use error::{Error, Result};
pub use market::{run, Market, RunOutput};
