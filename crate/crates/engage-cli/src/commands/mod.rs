pub mod analyze;
pub mod cluster;
pub mod compare;
pub mod ingest;
pub mod report;
pub mod simulate;
