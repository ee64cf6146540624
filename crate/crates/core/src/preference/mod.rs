//! Preference signals: robots.txt snapshots, opt-out lists, and the
//! append-only record of every decision they produce.

mod gate;
mod optout;
mod robots;
mod signal;

pub use gate::{gate_documents, origin_of, GateOutcome, GateReport, RobotsSnapshot, RobotsSnapshots};
pub use optout::{apply_optout, parse_optout, OptoutEntry, OptoutList, OptoutOutcome, RejectedEntry};
pub use robots::{parse_robots, CompiledPattern, Directive, RobotsDecision, RobotsGroup, RobotsPolicy, RobotsRule, RuleKind};
pub use signal::{Decision, PreferenceSignal, SignalKind, SignalLog, Subject};
