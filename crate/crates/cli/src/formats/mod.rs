//! File formats: series, models, traces and IRF grids. All UTF-8 with LF line endings.

pub mod irf;
pub mod model;
pub mod series;
pub mod trace;

pub use irf::write_irf_csv;
pub use model::{load_model, save_model, ModelFile};
pub use series::{load_tensor_series, write_series, SeriesFormat};
pub use trace::{find_traces, load_trace, meta_path, trace_path, TraceWriter};
