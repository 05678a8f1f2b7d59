//! Eye-tracking scan-path analytics over hierarchical areas of interest.
//!
//! The crate turns recorded gaze samples into AOI strings, mines N-gram
//! transition patterns across participants, and lays the selected patterns
//! out as a force-directed graph constrained to the AOI rectangles.
//!
//! Pipeline overview:
//! - [`tree`] holds the AOI hierarchy (point location, level cuts, grouping).
//! - [`detect`] derives flat AOIs from a stimulus image.
//! - [`encoding`] converts scan-paths to strings and run-length codes.
//! - [`mining`] counts N-grams and compares participants.
//! - [`color`] and [`layout`] produce the graph overlay, [`svg`] renders it.

pub mod alphabet;
pub mod color;
pub mod detect;
pub mod encoding;
pub mod error;
pub mod export;
pub mod gaze;
pub mod geometry;
pub mod layout;
pub mod mining;
pub mod pipeline;
pub mod svg;
pub mod tree;

pub use error::{Error, Result};
pub use geometry::Rect;
pub use tree::{AoiNode, AoiTree, CutEntry, NodeId, NodeKind, Violation};
