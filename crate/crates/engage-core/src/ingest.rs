//! Parsing of diarization documents, gaze-annotation tables, and speaker
//! maps, plus synchronization of both streams onto the per-second grid.
//!
//! Two diarization formats are accepted: a nested JSON export with
//! `results.speaker_labels.segments[]` (the shape cloud transcription
//! services emit) and a flat `speaker,start,end` table for synthetic data.
//! All parsers are pure functions over document content; sessions can be
//! ingested concurrently without shared state.

use crate::model::{
    BehaviorFrame, GazeCategory, Participant, ParticipantId, Role, SessionTimeline, SpeechSegment,
};
use serde::Deserialize;
use std::collections::HashMap;
use thiserror::Error;

/// How far back (seconds) a gaze gap may inherit the participant's most
/// recent annotation before defaulting to `Other`.
pub const GAZE_GAP_LOOKBACK_S: u32 = 5;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing column {column:?} (expected header {expected:?})")]
    Schema {
        column: &'static str,
        expected: &'static str,
    },
    #[error("row {row}: unknown gaze category {token:?}")]
    UnknownGazeCategory { row: usize, token: String },
    #[error("duplicate gaze record for participant {participant} at second {second}")]
    DuplicateGazeRecord {
        participant: ParticipantId,
        second: u32,
    },
    #[error("segment for {speaker_label:?} has end {end} <= start {start}")]
    SegmentRange {
        speaker_label: String,
        start: f64,
        end: f64,
    },
    #[error("segment for {speaker_label:?} has negative start {start}")]
    NegativeStart { speaker_label: String, start: f64 },
    #[error("unmapped speaker labels: {}", .0.join(", "))]
    UnmappedSpeakers(Vec<String>),
    #[error("speaker map row {row}: duplicate label {label:?}")]
    DuplicateSpeakerLabel { row: usize, label: String },
    #[error("gaze record references participant {participant} not in roster")]
    UnknownParticipant { participant: ParticipantId },
    #[error("speaker map references participant {participant} not in roster")]
    UnmappedParticipant { participant: ParticipantId },
    #[error("invalid timeline inputs: {0}")]
    InvalidInput(String),
}

/// Maps diarized speaker labels to roster participants.
#[derive(Debug, Clone, Default)]
pub struct SpeakerMap {
    entries: HashMap<String, Participant>,
}

impl SpeakerMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a mapping; returns false if the label was already present.
    pub fn insert(&mut self, label: impl Into<String>, participant: Participant) -> bool {
        self.entries.insert(label.into(), participant).is_none()
    }

    pub fn get(&self, label: &str) -> Option<&Participant> {
        self.entries.get(label)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every participant mentioned by the map must be declared in the roster.
    pub fn check_against_roster(&self, roster: &[Participant]) -> Result<(), IngestError> {
        for p in self.entries.values() {
            if !roster.iter().any(|r| r.id == p.id) {
                return Err(IngestError::UnmappedParticipant {
                    participant: p.id.clone(),
                });
            }
        }
        Ok(())
    }
}

/// One gaze annotation cell: which category a participant looked at during
/// one second of one session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GazeRecord {
    pub session_id: String,
    pub second: u32,
    pub participant: ParticipantId,
    pub gaze: GazeCategory,
}

/// A speech segment attributed to a roster participant.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributedSegment {
    pub participant: ParticipantId,
    pub role: Role,
    pub start: f64,
    pub end: f64,
}

/// Outcome of speaker attribution: mapped segments plus whatever could not
/// be mapped. Unmapped segments are reported, never silently dropped.
#[derive(Debug, Clone, Default)]
pub struct AttributionOutcome {
    pub attributed: Vec<AttributedSegment>,
    pub unattributed: Vec<SpeechSegment>,
}

impl AttributionOutcome {
    /// Distinct unmapped labels, sorted for stable reporting.
    pub fn unmapped_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .unattributed
            .iter()
            .map(|s| s.speaker_label.clone())
            .collect();
        labels.sort();
        labels.dedup();
        labels
    }
}

/// Counters describing what ingestion had to repair or set aside.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct IngestReport {
    pub unmapped_speaker_labels: Vec<String>,
    /// Gaze cells inherited from a recent annotation of the same participant.
    pub gaze_gaps_inherited: usize,
    /// Gaze cells defaulted to `Other` because no annotation was close enough.
    pub gaze_gaps_defaulted: usize,
    /// Gaze records whose second fell outside the session duration.
    pub gaze_records_out_of_range: usize,
}

impl IngestReport {
    pub fn gaze_gaps_filled(&self) -> usize {
        self.gaze_gaps_inherited + self.gaze_gaps_defaulted
    }
}

#[derive(Deserialize)]
struct DiarizationDoc {
    results: DiarizationResults,
}

#[derive(Deserialize)]
struct DiarizationResults {
    speaker_labels: DiarizationSpeakerLabels,
}

#[derive(Deserialize)]
struct DiarizationSpeakerLabels {
    segments: Vec<DiarizationSegment>,
}

#[derive(Deserialize)]
struct DiarizationSegment {
    speaker_label: String,
    start_time: String,
    end_time: String,
}

/// Parses a diarization document into speech segments, preserving order.
///
/// Format is detected from the first non-whitespace byte: `{` selects the
/// nested JSON export, anything else the flat `speaker,start,end` table.
pub fn parse_diarization(document: &str) -> Result<Vec<SpeechSegment>, IngestError> {
    if document.trim_start().starts_with('{') {
        parse_diarization_json(document)
    } else {
        parse_diarization_table(document)
    }
}

fn check_segment(segment: &SpeechSegment) -> Result<(), IngestError> {
    if segment.start < 0.0 {
        return Err(IngestError::NegativeStart {
            speaker_label: segment.speaker_label.clone(),
            start: segment.start,
        });
    }
    if segment.end <= segment.start {
        return Err(IngestError::SegmentRange {
            speaker_label: segment.speaker_label.clone(),
            start: segment.start,
            end: segment.end,
        });
    }
    Ok(())
}

fn parse_diarization_json(document: &str) -> Result<Vec<SpeechSegment>, IngestError> {
    let doc: DiarizationDoc = serde_json::from_str(document).map_err(|e| IngestError::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;

    let mut segments = Vec::with_capacity(doc.results.speaker_labels.segments.len());
    for (idx, seg) in doc.results.speaker_labels.segments.into_iter().enumerate() {
        let start: f64 = seg.start_time.trim().parse().map_err(|_| IngestError::Parse {
            line: idx + 1,
            message: format!("segment {idx}: start_time {:?} is not a decimal", seg.start_time),
        })?;
        let end: f64 = seg.end_time.trim().parse().map_err(|_| IngestError::Parse {
            line: idx + 1,
            message: format!("segment {idx}: end_time {:?} is not a decimal", seg.end_time),
        })?;
        let segment = SpeechSegment::new(seg.speaker_label, start, end);
        check_segment(&segment)?;
        segments.push(segment);
    }
    Ok(segments)
}

fn parse_diarization_table(document: &str) -> Result<Vec<SpeechSegment>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(document.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| csv_error(&e))?
        .iter()
        .map(str::to_owned)
        .collect::<Vec<_>>();
    let col = |name: &'static str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(IngestError::Schema {
                column: name,
                expected: "speaker,start,end",
            })
    };
    let (speaker_col, start_col, end_col) = (col("speaker")?, col("start")?, col("end")?);

    let mut segments = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_error(&e))?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(segments.len() + 2);
        let field = |idx: usize| {
            record.get(idx).ok_or(IngestError::Parse {
                line,
                message: format!("row has {} fields, expected at least {}", record.len(), idx + 1),
            })
        };
        let parse_f64 = |s: &str, name: &str| {
            s.parse::<f64>().map_err(|_| IngestError::Parse {
                line,
                message: format!("{name} {s:?} is not a decimal"),
            })
        };
        let segment = SpeechSegment::new(
            field(speaker_col)?,
            parse_f64(field(start_col)?, "start")?,
            parse_f64(field(end_col)?, "end")?,
        );
        check_segment(&segment)?;
        segments.push(segment);
    }
    Ok(segments)
}

fn csv_error(err: &csv::Error) -> IngestError {
    let line = match err.position() {
        Some(pos) => pos.line() as usize,
        None => 0,
    };
    IngestError::Parse {
        line,
        message: err.to_string(),
    }
}

/// Parses a gaze table with header `session_id,second,participant_id,gaze`.
/// Rejects unknown gaze tokens and duplicate (second, participant) cells.
pub fn parse_gaze_table(document: &str) -> Result<Vec<GazeRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(document.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| csv_error(&e))?
        .iter()
        .map(str::to_owned)
        .collect::<Vec<_>>();
    let col = |name: &'static str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(IngestError::Schema {
                column: name,
                expected: "session_id,second,participant_id,gaze",
            })
    };
    let session_col = col("session_id")?;
    let second_col = col("second")?;
    let participant_col = col("participant_id")?;
    let gaze_col = col("gaze")?;

    let mut records = Vec::new();
    let mut seen: HashMap<(String, u32, ParticipantId), ()> = HashMap::new();
    for (row_idx, result) in reader.records().enumerate() {
        let record = result.map_err(|e| csv_error(&e))?;
        let row = row_idx + 2; // 1-based, after the header
        let field = |idx: usize| {
            record.get(idx).ok_or(IngestError::Parse {
                line: row,
                message: format!("row has {} fields, expected at least {}", record.len(), idx + 1),
            })
        };
        let second: u32 = field(second_col)?.parse().map_err(|_| IngestError::Parse {
            line: row,
            message: format!("second {:?} is not a non-negative integer", field(second_col).unwrap_or("")),
        })?;
        let gaze_token = field(gaze_col)?;
        let gaze: GazeCategory = gaze_token
            .parse()
            .map_err(|_| IngestError::UnknownGazeCategory {
                row,
                token: gaze_token.to_owned(),
            })?;
        let rec = GazeRecord {
            session_id: field(session_col)?.to_owned(),
            second,
            participant: ParticipantId::new(field(participant_col)?),
            gaze,
        };
        let key = (rec.session_id.clone(), rec.second, rec.participant.clone());
        if seen.insert(key, ()).is_some() {
            return Err(IngestError::DuplicateGazeRecord {
                participant: rec.participant,
                second: rec.second,
            });
        }
        records.push(rec);
    }
    Ok(records)
}

/// Parses a speaker map table with header `speaker_label,participant_id,role`.
pub fn parse_speaker_map(document: &str) -> Result<SpeakerMap, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(document.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| csv_error(&e))?
        .iter()
        .map(str::to_owned)
        .collect::<Vec<_>>();
    let col = |name: &'static str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(IngestError::Schema {
                column: name,
                expected: "speaker_label,participant_id,role",
            })
    };
    let label_col = col("speaker_label")?;
    let participant_col = col("participant_id")?;
    let role_col = col("role")?;

    let mut map = SpeakerMap::new();
    for (row_idx, result) in reader.records().enumerate() {
        let record = result.map_err(|e| csv_error(&e))?;
        let row = row_idx + 2;
        let field = |idx: usize| {
            record.get(idx).ok_or(IngestError::Parse {
                line: row,
                message: format!("row has {} fields, expected at least {}", record.len(), idx + 1),
            })
        };
        let label = field(label_col)?.to_owned();
        let role: Role = field(role_col)?.parse().map_err(|message| IngestError::Parse {
            line: row,
            message,
        })?;
        let participant = Participant {
            id: ParticipantId::new(field(participant_col)?),
            role,
        };
        if !map.insert(label.clone(), participant) {
            return Err(IngestError::DuplicateSpeakerLabel { row, label });
        }
    }
    Ok(map)
}

/// Attributes diarized segments to roster participants via the speaker map.
/// In strict mode any unmapped label aborts with the full label list;
/// otherwise unmapped segments land in the outcome's report.
pub fn apply_speaker_map(
    segments: Vec<SpeechSegment>,
    map: &SpeakerMap,
    strict: bool,
) -> Result<AttributionOutcome, IngestError> {
    let mut outcome = AttributionOutcome::default();
    for segment in segments {
        match map.get(&segment.speaker_label) {
            Some(participant) => outcome.attributed.push(AttributedSegment {
                participant: participant.id.clone(),
                role: participant.role,
                start: segment.start,
                end: segment.end,
            }),
            None => outcome.unattributed.push(segment),
        }
    }
    if strict && !outcome.unattributed.is_empty() {
        return Err(IngestError::UnmappedSpeakers(outcome.unmapped_labels()));
    }
    Ok(outcome)
}

/// Synchronizes gaze records and attributed speech onto the per-second grid.
///
/// A student's speaking flag at second `t` is set iff one of their segments
/// overlaps `[t, t+1)` with positive measure; `tutor_speaking` is the same
/// over all tutor-role segments. Missing gaze cells inherit the nearest
/// preceding annotation of the same participant within
/// [`GAZE_GAP_LOOKBACK_S`] seconds, else default to `Other`; both kinds of
/// fill are counted in the report.
pub fn build_timeline(
    session_id: &str,
    gaze: &[GazeRecord],
    speech: &[AttributedSegment],
    roster: &[Participant],
    duration_s: u32,
) -> Result<(SessionTimeline, IngestReport), IngestError> {
    if duration_s == 0 {
        return Err(IngestError::InvalidInput("duration_s must be positive".into()));
    }
    if roster.is_empty() {
        return Err(IngestError::InvalidInput("roster must not be empty".into()));
    }

    let students: Vec<&Participant> = roster.iter().filter(|p| p.role == Role::Student).collect();
    let student_index: HashMap<&ParticipantId, usize> = students
        .iter()
        .enumerate()
        .map(|(i, p)| (&p.id, i))
        .collect();

    let mut report = IngestReport::default();
    let n = duration_s as usize;

    // Gaze grid: annotated cells first, then gap fill per student.
    let mut gaze_grid: Vec<Vec<Option<GazeCategory>>> = vec![vec![None; n]; students.len()];
    for record in gaze {
        let idx = *student_index
            .get(&record.participant)
            .ok_or_else(|| IngestError::UnknownParticipant {
                participant: record.participant.clone(),
            })?;
        if record.second >= duration_s {
            report.gaze_records_out_of_range += 1;
            continue;
        }
        gaze_grid[idx][record.second as usize] = Some(record.gaze);
    }

    let mut filled: Vec<Vec<GazeCategory>> = Vec::with_capacity(students.len());
    for per_student in &gaze_grid {
        let mut out = Vec::with_capacity(n);
        let mut last_annotated: Option<(u32, GazeCategory)> = None;
        for (second, cell) in per_student.iter().enumerate() {
            let second = second as u32;
            match cell {
                Some(g) => {
                    last_annotated = Some((second, *g));
                    out.push(*g);
                }
                None => match last_annotated {
                    Some((at, g)) if second - at <= GAZE_GAP_LOOKBACK_S => {
                        report.gaze_gaps_inherited += 1;
                        out.push(g);
                    }
                    _ => {
                        report.gaze_gaps_defaulted += 1;
                        out.push(GazeCategory::Other);
                    }
                },
            }
        }
        filled.push(out);
    }

    // Speaking flags from segment overlap with positive measure.
    let mut speaking: Vec<Vec<bool>> = vec![vec![false; n]; students.len()];
    let mut tutor_speaking = vec![false; n];
    for segment in speech {
        let flags = match segment.role {
            Role::Tutor => &mut tutor_speaking,
            Role::Student => {
                let idx = *student_index.get(&segment.participant).ok_or_else(|| {
                    IngestError::UnknownParticipant {
                        participant: segment.participant.clone(),
                    }
                })?;
                &mut speaking[idx]
            }
        };
        // [t, t+1) overlaps [start, end) with positive measure exactly for
        // t in [floor(start), end).
        let first = segment.start.max(0.0).floor() as usize;
        for (second, flag) in flags.iter_mut().enumerate().skip(first) {
            if (second as f64) >= segment.end {
                break;
            }
            *flag = true;
        }
    }

    let frames = (0..n)
        .map(|t| BehaviorFrame {
            second: t as u32,
            gaze: filled.iter().map(|per_student| per_student[t]).collect(),
            speaking: speaking.iter().map(|per_student| per_student[t]).collect(),
            tutor_speaking: tutor_speaking[t],
        })
        .collect();

    let timeline = SessionTimeline {
        session_id: session_id.to_owned(),
        participants: roster.to_vec(),
        frames,
        duration_s,
    };
    Ok((timeline, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const NESTED_DOC: &str = r#"{
      "results": {
        "speaker_labels": {
          "segments": [
            {"speaker_label": "spk_0", "start_time": "12.3", "end_time": "15.1"},
            {"speaker_label": "spk_1", "start_time": "14.0", "end_time": "16.5"}
          ]
        }
      }
    }"#;

    #[test]
    fn parses_nested_diarization_document() {
        let segments = parse_diarization(NESTED_DOC).unwrap();
        assert_eq!(
            segments,
            vec![
                SpeechSegment::new("spk_0", 12.3, 15.1),
                SpeechSegment::new("spk_1", 14.0, 16.5),
            ]
        );
    }

    #[test]
    fn parses_flat_diarization_table() {
        let doc = "speaker,start,end\nspk_0,12.3,15.1\n";
        let segments = parse_diarization(doc).unwrap();
        assert_eq!(segments, vec![SpeechSegment::new("spk_0", 12.3, 15.1)]);
    }

    #[test]
    fn overlapping_segments_of_different_speakers_are_retained() {
        let doc = "speaker,start,end\nspk_0,1.0,5.0\nspk_1,3.0,7.0\n";
        assert_eq!(parse_diarization(doc).unwrap().len(), 2);
    }

    #[test]
    fn segment_end_before_start_is_a_range_error() {
        let doc = "speaker,start,end\nspk_0,12.0,10.0\n";
        let err = parse_diarization(doc).unwrap_err();
        assert!(matches!(err, IngestError::SegmentRange { .. }), "{err}");
    }

    #[test]
    fn malformed_json_reports_line() {
        let err = parse_diarization("{\n  \"results\": [\n").unwrap_err();
        match err {
            IngestError::Parse { line, .. } => assert!(line > 0),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn gaze_row_from_worked_example_parses() {
        let doc = "session_id,second,participant_id,gaze\nW9G2,2,S2,Laptop\n";
        let records = parse_gaze_table(doc).unwrap();
        assert_eq!(records.len(), 1);
        let rec = &records[0];
        assert_eq!(rec.session_id, "W9G2");
        assert_eq!(rec.second, 2);
        assert_eq!(rec.participant, ParticipantId::new("S2"));
        assert_eq!(rec.gaze, GazeCategory::Laptop);
    }

    #[test]
    fn unknown_gaze_category_is_rejected_with_token_and_row() {
        let doc = "session_id,second,participant_id,gaze\nW9G2,2,S2,Window\n";
        match parse_gaze_table(doc).unwrap_err() {
            IngestError::UnknownGazeCategory { row, token } => {
                assert_eq!(row, 2);
                assert_eq!(token, "Window");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn empty_gaze_body_with_valid_header_is_empty() {
        let doc = "session_id,second,participant_id,gaze\n";
        assert!(parse_gaze_table(doc).unwrap().is_empty());
    }

    #[test]
    fn duplicate_gaze_cell_is_rejected() {
        let doc = "session_id,second,participant_id,gaze\nW9G2,2,S2,Laptop\nW9G2,2,S2,Other\n";
        assert!(matches!(
            parse_gaze_table(doc).unwrap_err(),
            IngestError::DuplicateGazeRecord { .. }
        ));
    }

    #[test]
    fn missing_gaze_column_is_a_schema_error() {
        let doc = "session_id,second,participant_id\nW9G2,2,S2\n";
        assert!(matches!(
            parse_gaze_table(doc).unwrap_err(),
            IngestError::Schema { column: "gaze", .. }
        ));
    }

    fn simple_map() -> SpeakerMap {
        let mut map = SpeakerMap::new();
        map.insert("spk_0", Participant::student("S1"));
        map.insert("spk_T", Participant::tutor("T1"));
        map
    }

    #[test]
    fn mapped_segment_is_attributed() {
        let outcome = apply_speaker_map(
            vec![SpeechSegment::new("spk_0", 1.0, 2.0)],
            &simple_map(),
            true,
        )
        .unwrap();
        assert_eq!(outcome.attributed.len(), 1);
        assert_eq!(outcome.attributed[0].participant, ParticipantId::new("S1"));
        assert_eq!(outcome.attributed[0].role, Role::Student);
    }

    #[test]
    fn tutor_label_keeps_tutor_role() {
        let outcome = apply_speaker_map(
            vec![SpeechSegment::new("spk_T", 0.0, 4.0)],
            &simple_map(),
            true,
        )
        .unwrap();
        assert_eq!(outcome.attributed[0].role, Role::Tutor);
    }

    #[test]
    fn unmapped_label_goes_to_report_in_lenient_mode() {
        let outcome = apply_speaker_map(
            vec![SpeechSegment::new("spk_9", 1.0, 2.0)],
            &simple_map(),
            false,
        )
        .unwrap();
        assert!(outcome.attributed.is_empty());
        assert_eq!(outcome.unmapped_labels(), vec!["spk_9".to_owned()]);
    }

    #[test]
    fn unmapped_label_fails_in_strict_mode() {
        let err = apply_speaker_map(
            vec![SpeechSegment::new("spk_9", 1.0, 2.0)],
            &simple_map(),
            true,
        )
        .unwrap_err();
        match err {
            IngestError::UnmappedSpeakers(labels) => assert_eq!(labels, vec!["spk_9".to_owned()]),
            other => panic!("unexpected error {other}"),
        }
    }

    fn roster() -> Vec<Participant> {
        vec![
            Participant::student("S1"),
            Participant::student("S2"),
            Participant::tutor("T1"),
        ]
    }

    fn student_segment(id: &str, start: f64, end: f64) -> AttributedSegment {
        AttributedSegment {
            participant: ParticipantId::new(id),
            role: Role::Student,
            start,
            end,
        }
    }

    #[test]
    fn fractional_segment_flags_every_touched_second() {
        let (timeline, _) = build_timeline(
            "s",
            &[],
            &[student_segment("S1", 12.3, 15.1)],
            &roster(),
            20,
        )
        .unwrap();
        let flagged: Vec<u32> = timeline
            .frames
            .iter()
            .filter(|f| f.speaking[0])
            .map(|f| f.second)
            .collect();
        assert_eq!(flagged, vec![12, 13, 14, 15]);
    }

    #[test]
    fn integer_bounds_are_half_open() {
        let (timeline, _) =
            build_timeline("s", &[], &[student_segment("S1", 5.0, 6.0)], &roster(), 10).unwrap();
        let flagged: Vec<u32> = timeline
            .frames
            .iter()
            .filter(|f| f.speaking[0])
            .map(|f| f.second)
            .collect();
        assert_eq!(flagged, vec![5]);
    }

    #[test]
    fn tutor_segments_set_tutor_flag_only() {
        let tutor_segment = AttributedSegment {
            participant: ParticipantId::new("T1"),
            role: Role::Tutor,
            start: 1.0,
            end: 3.0,
        };
        let (timeline, _) = build_timeline("s", &[], &[tutor_segment], &roster(), 5).unwrap();
        assert!(timeline.frames[1].tutor_speaking);
        assert!(timeline.frames[2].tutor_speaking);
        assert!(!timeline.frames[0].tutor_speaking);
        assert!(timeline.frames.iter().all(|f| !f.any_student_speaking()));
    }

    fn gaze_record(second: u32, id: &str, gaze: GazeCategory) -> GazeRecord {
        GazeRecord {
            session_id: "s".into(),
            second,
            participant: ParticipantId::new(id),
            gaze,
        }
    }

    #[test]
    fn gaze_gap_inherits_recent_annotation_then_defaults() {
        use GazeCategory::*;
        // S1 annotated at seconds 0 and 10; the gap at 1..=5 inherits from
        // second 0, 6..=9 default to Other.
        let records: Vec<GazeRecord> = vec![gaze_record(0, "S1", Laptop), gaze_record(10, "S1", Student)];
        let (timeline, report) = build_timeline("s", &records, &[], &roster(), 11).unwrap();
        let s1: Vec<GazeCategory> = timeline.frames.iter().map(|f| f.gaze[0]).collect();
        assert_eq!(
            s1,
            vec![Laptop, Laptop, Laptop, Laptop, Laptop, Laptop, Other, Other, Other, Other, Student]
        );
        assert_eq!(report.gaze_gaps_inherited, 5);
        // S1 seconds 6..=9 plus every S2 second default.
        assert_eq!(report.gaze_gaps_defaulted, 4 + 11);
    }

    #[test]
    fn gaze_for_unknown_participant_is_an_error() {
        let records = vec![gaze_record(0, "S9", GazeCategory::Other)];
        assert!(matches!(
            build_timeline("s", &records, &[], &roster(), 2).unwrap_err(),
            IngestError::UnknownParticipant { .. }
        ));
    }

    #[test]
    fn out_of_range_gaze_records_are_counted() {
        let records = vec![gaze_record(50, "S1", GazeCategory::Laptop)];
        let (_, report) = build_timeline("s", &records, &[], &roster(), 10).unwrap();
        assert_eq!(report.gaze_records_out_of_range, 1);
    }

    fn arb_segments() -> impl Strategy<Value = Vec<AttributedSegment>> {
        prop::collection::vec(
            (0u8..2, 0.0f64..50.0, 0.01f64..10.0).prop_map(|(who, start, len)| {
                student_segment(if who == 0 { "S1" } else { "S2" }, start, start + len)
            }),
            0..12,
        )
    }

    proptest! {
        #[test]
        fn speaking_flags_ignore_segment_order(segments in arb_segments(), shift in 0usize..12) {
            let (a, _) = build_timeline("s", &[], &segments, &roster(), 60).unwrap();
            let mut rotated = segments;
            if !rotated.is_empty() {
                let shift = shift % rotated.len();
                rotated.rotate_left(shift);
            }
            let (b, _) = build_timeline("s", &[], &rotated, &roster(), 60).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn long_segments_flag_at_least_one_second(start in 0.0f64..40.0, extra in 0.0f64..5.0) {
            let segment = student_segment("S1", start, start + 1.0 + extra);
            let (timeline, _) = build_timeline("s", &[], &[segment], &roster(), 60).unwrap();
            let flagged = timeline.frames.iter().filter(|f| f.speaking[0]).count();
            prop_assert!(flagged >= 1);
        }
    }
}
