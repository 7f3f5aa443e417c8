//! Marker errors that carry a dedicated exit code.

use thiserror::Error;

/// Simulated ground truth and pipeline output diverged (exit code 2).
#[derive(Debug, Error)]
#[error("self-check failed: {0}")]
pub struct SelfCheckFailed(pub String);

/// Every comparison row failed, so no report was produced (exit code 3).
#[derive(Debug, Error)]
#[error("no comparable rows: {0}")]
pub struct NoComparableRows(pub String);
