//! Web-archive scanning: WARC parsing, HTML text extraction, Creative
//! Commons license detection, quality rules and sensitive-data screening.

pub mod detect;
pub mod html;
pub mod http;
pub mod pipeline;
pub mod quality;
pub mod sensitive;
pub mod warc;

pub use detect::{detect_cc_license, detect_in_decoded};
pub use pipeline::{
    scan_warc, Execution, ScanConfig, ScanContext, ScanError, ScanReport, ScannedDocument, SkippedRecord,
    SourceSnapshot,
};
pub use quality::{apply_quality_rules, QualityRules, QualityVerdict, RuleId};
pub use sensitive::{redact, screen_sensitive, SensitiveFinding, SensitiveKind, Span};
pub use warc::{open_warc, WarcItem, WarcReader, WarcRecord, WarcStreamError};
