//! `engage ingest`: raw documents in, validated session bundles out.

use crate::config::{self, RunConfig, SessionConfig};
use crate::output::OutputWriter;
use crate::tables::{IngestReportDoc, TimelineBundle};
use anyhow::{Context, Result};
use engage_core::ingest::{
    apply_speaker_map, build_timeline, parse_diarization, parse_gaze_table, parse_speaker_map,
    GazeRecord, IngestReport, SpeakerMap,
};
use engage_core::model::{validate_timeline, SessionTimeline};
use rayon::prelude::*;
use std::path::Path;

pub struct IngestedSession {
    pub timeline: SessionTimeline,
    pub report: IngestReport,
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    if cfg.sessions.is_empty() {
        anyhow::bail!("no [[sessions]] configured; nothing to ingest");
    }
    let gaze_path = config::require(&cfg.gaze, "inputs.gaze")?;
    let roster_path = config::require(&cfg.roster, "inputs.roster")?;

    let gaze_text = std::fs::read_to_string(gaze_path)
        .with_context(|| format!("cannot read gaze table {}", gaze_path.display()))?;
    let all_gaze = parse_gaze_table(&gaze_text)
        .with_context(|| format!("gaze table {}", gaze_path.display()))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .context("cannot build worker pool")?;
    let results: Vec<Result<(String, IngestedSession)>> = pool.install(|| {
        cfg.sessions
            .par_iter()
            .map(|session| {
                let map_path = session
                    .speaker_map
                    .as_deref()
                    .map(Ok)
                    .unwrap_or_else(|| config::require(&cfg.speaker_map, "inputs.speaker_map"))?;
                let map_text = std::fs::read_to_string(map_path)
                    .with_context(|| format!("cannot read speaker map {}", map_path.display()))?;
                let speaker_map = parse_speaker_map(&map_text)
                    .with_context(|| format!("speaker map {}", map_path.display()))?;
                let ingested =
                    ingest_session(cfg, session, &all_gaze, &speaker_map, roster_path)
                        .with_context(|| format!("session {}", session.id))?;
                Ok((session.id.clone(), ingested))
            })
            .collect()
    });

    let mut writer = OutputWriter::new(&cfg.out_dir, cfg.seed);
    for result in results {
        let (id, ingested) = result?;
        write_session(&mut writer, cfg.seed, &id, &ingested)?;
        println!(
            "ingested {id}: {} s, {} students, {} gaze gaps filled, {} unmapped labels",
            ingested.timeline.duration_s,
            ingested.timeline.student_count(),
            ingested.report.gaze_gaps_filled(),
            ingested.report.unmapped_speaker_labels.len()
        );
    }
    writer.finish()
}

fn ingest_session(
    cfg: &RunConfig,
    session: &SessionConfig,
    all_gaze: &[GazeRecord],
    speaker_map: &SpeakerMap,
    roster_path: &Path,
) -> Result<IngestedSession> {
    let roster = crate::tables::read_roster_csv(roster_path, &session.id)?;
    if roster.is_empty() {
        anyhow::bail!(
            "roster {} has no rows for session {}",
            roster_path.display(),
            session.id
        );
    }
    speaker_map.check_against_roster(&roster)?;

    let diarization_text = std::fs::read_to_string(&session.diarization).with_context(|| {
        format!("cannot read diarization {}", session.diarization.display())
    })?;
    let segments = parse_diarization(&diarization_text)
        .with_context(|| format!("diarization {}", session.diarization.display()))?;

    let gaze: Vec<GazeRecord> = all_gaze
        .iter()
        .filter(|r| r.session_id == session.id)
        .cloned()
        .collect();
    if gaze.is_empty() {
        anyhow::bail!("gaze table has no rows for session {}", session.id);
    }

    let duration = match session.duration_s {
        Some(d) => d,
        None => {
            let from_gaze = gaze.iter().map(|r| r.second + 1).max().unwrap_or(0);
            let from_speech = segments
                .iter()
                .map(|s| s.end.ceil() as u32)
                .max()
                .unwrap_or(0);
            from_gaze.max(from_speech)
        }
    };

    let attribution = apply_speaker_map(segments, speaker_map, cfg.strict_speaker_map)?;
    let (timeline, mut report) =
        build_timeline(&session.id, &gaze, &attribution.attributed, &roster, duration)?;
    report.unmapped_speaker_labels = attribution.unmapped_labels();

    let violations = validate_timeline(&timeline);
    if !violations.is_empty() {
        let listing: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        anyhow::bail!("timeline validation failed:\n  {}", listing.join("\n  "));
    }
    Ok(IngestedSession { timeline, report })
}

pub fn write_session(
    writer: &mut OutputWriter,
    seed: u64,
    id: &str,
    ingested: &IngestedSession,
) -> Result<()> {
    writer.write_json(
        &format!("sessions/{id}/timeline.json"),
        &TimelineBundle {
            seed,
            timeline: ingested.timeline.clone(),
        },
    )?;
    writer.write_json(
        &format!("sessions/{id}/ingest_report.json"),
        &IngestReportDoc {
            seed,
            session_id: id.to_owned(),
            duration_s: ingested.timeline.duration_s,
            report: ingested.report.clone(),
        },
    )?;
    Ok(())
}
