pub mod classical;
pub mod error;
pub mod io;
pub mod ordering;
pub mod pattern;
pub mod procedures;
pub mod rng;
pub mod simulate;
pub mod stats;
pub mod study;
pub mod summary;
pub mod tda;

pub use error::{Error, Result};
pub use pattern::{EvalGrid, Point, PointPattern, SummaryCurve, Window};
pub use procedures::{bits_test, monte_carlo_test, run_test, NullModel, TestConfig, TestReport};
pub use rng::RngSeed;
pub use simulate::{condition_on_count, simulate, Intensity, ModelSpec};
pub use summary::{SummaryKind, SummarySpec};
