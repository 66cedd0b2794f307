//! Regional entropy of seismic information (RESI).
//!
//! The crate turns an earthquake catalog into per-cell entropy series,
//! derives precursor alarms from them, computes the Pattern Informatics and
//! Relative Intensity baselines on the same cell grid, and scores every alarm
//! function against activation times with the precedence/delay measures.
//!
//! Pipeline, bottom-up:
//!
//! * [`catalog`] parses JMA fixed-width hypocenter records and filters them.
//! * [`grid`] defines regions, meshes, cells and calendar windows, and bins events.
//! * [`clustering`] groups quaking meshes into 8-connected clusters.
//! * [`entropy`] computes H, Hr (RESI), the trailing average and region aggregation.
//! * [`alarms`] derives `Hr_sat`, the activity index and the high-activity marks.
//! * [`baselines`] implements PI and RI plus their top-n alarm selection.
//! * [`evaluation`] computes prec/delay, Conditions A/B and active cells.
//! * [`synth`] generates seeded synthetic catalogs for tests and demos.
//! * [`pipeline`] wires the stages together; [`export`] writes CSV/JSON/GeoJSON/SVG.

pub mod alarms;
pub mod baselines;
pub mod catalog;
pub mod clustering;
pub mod entropy;
pub mod error;
pub mod evaluation;
pub mod export;
pub mod grid;
pub mod pipeline;
pub mod synth;
pub mod time;

pub use error::{Error, Result};
