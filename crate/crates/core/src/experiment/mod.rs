//! Scenario configuration, the bundled scenario library, trace files and the
//! verification suite.

pub mod config;
pub mod reference;
pub mod run;
pub mod scenario;
pub mod trace;
pub mod verify;

pub use config::{parse_config, parse_config_str, ConfigError, Law, ReferenceKind, ScenarioConfig};
pub use reference::{PiecewiseReference, Segment, SegmentShape};
pub use run::{simulate, trace_file, RunSummary};
pub use scenario::{find_scenario, Scenario, SCENARIOS};
pub use trace::{config_hash, read_trace, write_trace, TraceAbort, TraceError, TraceFile, TraceMeta};
pub use verify::{verify, PropertyResult, VerifyOptions, VerifyReport};
