//! `engage simulate`: scenario spec in, synthetic session bundle (plus the
//! raw documents it would have been ingested from) out.

use crate::config::RunConfig;
use crate::errors::SelfCheckFailed;
use crate::output::OutputWriter;
use crate::tables::{coded_table, TimelineBundle};
use anyhow::Result;
use engage_core::pipeline::process_session;
use engage_core::synth::{generate_session, raw_tables};

pub fn run(cfg: &RunConfig, self_check: bool) -> Result<()> {
    let spec = &cfg.scenario;
    let generated = generate_session(spec)?;
    let session_id = &spec.session_id;

    let mut writer = OutputWriter::new(&cfg.out_dir, spec.seed);
    writer.write_json(
        &format!("sessions/{session_id}/timeline.json"),
        &TimelineBundle {
            seed: spec.seed,
            timeline: generated.timeline.clone(),
        },
    )?;
    writer.write(
        &format!("sessions/{session_id}/ground_truth.csv"),
        coded_table(&generated.timeline, &generated.ground_truth).as_bytes(),
    )?;

    let raw = raw_tables(&generated);
    writer.write(
        &format!("sessions/{session_id}/raw/gaze.csv"),
        raw.gaze_table.as_bytes(),
    )?;
    writer.write(
        &format!("sessions/{session_id}/raw/diarization.csv"),
        raw.diarization_table.as_bytes(),
    )?;
    writer.write(
        &format!("sessions/{session_id}/raw/speaker_map.csv"),
        raw.speaker_map.as_bytes(),
    )?;
    writer.write(
        &format!("sessions/{session_id}/raw/roster.csv"),
        raw.roster.as_bytes(),
    )?;

    println!(
        "simulated {session_id}: {} s, {} students, {} episodes, seed {}",
        spec.duration_s,
        spec.n_students,
        generated.episode_starts.len(),
        spec.seed
    );

    if self_check {
        let processed = process_session(&generated.timeline, &cfg.pipeline)?;
        let margin = (cfg.pipeline.window_s / 2).max(cfg.pipeline.itc_cooccurrence_window_s);
        let interior = generated.interior_seconds(margin);
        let excluded = spec.duration_s as usize - interior.len();
        let mut mismatches = 0usize;
        for &s in &interior {
            let got = &processed.coded[s as usize];
            let expected = &generated.ground_truth[s as usize];
            if got.interaction != expected.interaction || got.codes != expected.codes {
                mismatches += 1;
                if mismatches == 1 {
                    eprintln!(
                        "self-check mismatch at second {s}: got {} {:?}, expected {} {:?}",
                        got.interaction, got.codes, expected.interaction, expected.codes
                    );
                }
            }
        }
        if mismatches > 0 {
            writer.finish()?;
            return Err(anyhow::Error::new(SelfCheckFailed(format!(
                "{mismatches}/{} comparable seconds diverged from ground truth",
                interior.len()
            ))));
        }
        println!(
            "self-check: {}/{} seconds matched ({excluded} transition seconds excluded)",
            interior.len(),
            interior.len()
        );
    }
    writer.finish()
}
