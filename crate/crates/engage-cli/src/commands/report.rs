//! `engage report`: runs whatever stages the configured inputs support and
//! leaves one output directory with all tables and a manifest.

use crate::config::RunConfig;
use anyhow::Result;

pub fn run(cfg: &RunConfig) -> Result<()> {
    if cfg.gaze.is_some() && !cfg.sessions.is_empty() {
        super::ingest::run(cfg)?;
    } else {
        println!("report: skipping ingest (no raw inputs configured)");
    }

    super::analyze::run(cfg)?;
    super::cluster::run(cfg)?;

    if cfg.measures.is_some() {
        super::compare::run(cfg)?;
    } else {
        println!("report: skipping compare (no measures table configured)");
    }

    println!(
        "report complete: see {}",
        cfg.out_dir.join("manifest.json").display()
    );
    Ok(())
}
