//! `engage analyze`: session bundles in, coded timelines and profiles out.

use crate::config::RunConfig;
use crate::output::{sig6, OutputWriter};
use crate::tables::{coded_csv, profiles_csv, TimelineBundle};
use anyhow::{Context, Result};
use engage_core::analytics::session_profiles;
use engage_core::model::{EngagementProfile, InteractionType};
use engage_core::pipeline::{process_session, ProcessedSession};
use rayon::prelude::*;
use std::path::PathBuf;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let bundles = discover_bundles(cfg)?;
    if bundles.is_empty() {
        anyhow::bail!(
            "no session bundles under {}; run ingest or simulate first",
            cfg.out_dir.join("sessions").display()
        );
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .context("cannot build worker pool")?;
    let results: Vec<Result<(String, ProcessedSession, Vec<EngagementProfile>)>> =
        pool.install(|| {
            bundles
                .par_iter()
                .map(|(id, path)| {
                    let text = std::fs::read_to_string(path)
                        .with_context(|| format!("cannot read bundle {}", path.display()))?;
                    let bundle: TimelineBundle = serde_json::from_str(&text)
                        .with_context(|| format!("cannot parse bundle {}", path.display()))?;
                    let processed = process_session(&bundle.timeline, &cfg.pipeline)
                        .with_context(|| format!("session {id}"))?;
                    let profiles = session_profiles(&processed)?;
                    Ok((id.clone(), processed, profiles))
                })
                .collect()
        });

    // All artifacts land before the first summary line, so a consumer that
    // truncates our stdout cannot leave the output directory half-written.
    let mut writer = OutputWriter::new(&cfg.out_dir, cfg.seed);
    let mut all_profiles = Vec::new();
    let mut summaries = Vec::new();
    for result in results {
        let (id, processed, profiles) = result?;
        writer.write(
            &format!("sessions/{id}/coded.csv"),
            coded_csv(&processed).as_bytes(),
        )?;
        summaries.push(session_summary(&id, &processed, &profiles));
        all_profiles.extend(profiles);
    }
    writer.write("profiles.csv", profiles_csv(&all_profiles).as_bytes())?;
    writer.finish()?;
    for summary in summaries {
        println!("{summary}");
    }
    Ok(())
}

/// Bundles under `<out>/sessions/*/timeline.json`, sorted by session id for
/// a deterministic processing order.
fn discover_bundles(cfg: &RunConfig) -> Result<Vec<(String, PathBuf)>> {
    let sessions_dir = cfg.out_dir.join("sessions");
    let mut bundles = Vec::new();
    let entries = match std::fs::read_dir(&sessions_dir) {
        Ok(entries) => entries,
        Err(_) => return Ok(bundles),
    };
    for entry in entries {
        let entry = entry?;
        let bundle = entry.path().join("timeline.json");
        if bundle.is_file() {
            bundles.push((entry.file_name().to_string_lossy().into_owned(), bundle));
        }
    }
    bundles.sort();
    Ok(bundles)
}

fn session_summary(id: &str, processed: &ProcessedSession, profiles: &[EngagementProfile]) -> String {
    let total = processed.coded.len().max(1) as f64;
    let mut interaction_shares = String::new();
    for interaction in InteractionType::ALL {
        let count = processed
            .coded
            .iter()
            .filter(|f| f.interaction == interaction)
            .count();
        if count > 0 {
            interaction_shares.push_str(&format!(
                " {interaction} {}%",
                sig6(100.0 * count as f64 / total)
            ));
        }
    }
    let mut lines = format!(
        "analyzed {id}: {} s;{interaction_shares}",
        processed.smoothed.duration_s
    );
    for p in profiles {
        lines.push_str(&format!(
            "\n  {}: active {} semi {} passive {}",
            p.participant,
            sig6(p.freq_active),
            sig6(p.freq_semi),
            sig6(p.freq_passive)
        ));
    }
    lines
}
