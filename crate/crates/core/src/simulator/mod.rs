//! Discrete-event limit-order-book market simulation.
//!
//! Three background agent populations trade a single security: value agents
//! arriving by Poisson processes and trading against a noisy observation of a
//! mean-reverting fundamental, noise agents each sending one market order at a
//! uniform time in the session, and market makers requoting both sides at a
//! constant rate. One replication is single-threaded and fully determined by
//! `(config, seed)`.

mod book;
mod config;
mod fundamental;
mod kernel;
mod series;

pub use book::{Order, OrderBook, OrderKind, Side, Trade};
pub use config::{SimConfig, ValueClass};
pub use fundamental::{step_fundamental, FundamentalState};
pub use kernel::run_simulation;
pub use series::{extract_series, read_samples_csv, write_samples_csv, SampleSet, SeriesSample};
