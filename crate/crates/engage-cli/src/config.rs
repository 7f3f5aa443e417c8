//! Run configuration: a TOML document plus command-line overrides.
//! Precedence is flag > config file > built-in default.

use anyhow::{Context, Result};
use engage_core::model::TestVariant;
use engage_core::pipeline::PipelineConfig;
use engage_core::synth::ScenarioSpec;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub inputs: InputsConfig,
    #[serde(default)]
    pub sessions: Vec<SessionConfig>,
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub clustering: ClusteringSection,
    #[serde(default)]
    pub stats: StatsSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub ingest: IngestSection,
    #[serde(default)]
    pub scenario: Option<ScenarioSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputsConfig {
    pub gaze: Option<PathBuf>,
    pub speaker_map: Option<PathBuf>,
    pub roster: Option<PathBuf>,
    pub measures: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub id: String,
    pub diarization: PathBuf,
    /// Grid length in seconds; derived from the inputs when absent.
    pub duration_s: Option<u32>,
    /// Session-scoped speaker map; diarization labels are per recording, so
    /// corpora with distinct participant ids per session need one map each.
    pub speaker_map: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    pub window_s: Option<u32>,
    pub itc_window_s: Option<u32>,
    pub rm_min_lookers: Option<usize>,
    pub trailing_window: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusteringSection {
    pub k: Option<usize>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsSection {
    pub variant: Option<String>,
    pub tail: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestSection {
    pub strict_speaker_map: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub id: Option<String>,
    pub n_students: Option<usize>,
    pub duration_s: Option<u32>,
    pub tutor_present: Option<bool>,
    pub mean_dwell_s: Option<f64>,
    pub weights: Option<Vec<f64>>,
    pub seed: Option<u64>,
}

/// Flag-level overrides shared by all subcommands.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonFlags {
    /// Path to the TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// RNG seed (overrides `clustering.seed` and `scenario.seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Smoothing window in seconds, odd (overrides `pipeline.window_s`).
    #[arg(long, global = true)]
    pub window: Option<u32>,
    /// Tutor/student speech co-occurrence window in seconds.
    #[arg(long, global = true)]
    pub itc_window: Option<u32>,
    /// Minimum laptop-gazing students for resource management.
    #[arg(long, global = true)]
    pub rm_min_lookers: Option<usize>,
    /// Number of clusters (overrides `clustering.k`).
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// k-means restarts (overrides `clustering.runs`).
    #[arg(long, global = true)]
    pub runs: Option<usize>,
    /// Test variant: welch or student (overrides `stats.variant`).
    #[arg(long, global = true)]
    pub variant: Option<String>,
    /// Headline tail: one or two (overrides `stats.tail`).
    #[arg(long, global = true)]
    pub tail: Option<String>,
    /// Fail on diarization labels missing from the speaker map.
    #[arg(long, global = true, overrides_with = "lenient")]
    pub strict: bool,
    /// Route unmapped diarization labels to the report instead of failing.
    #[arg(long, global = true)]
    pub lenient: bool,
    /// Sessions processed concurrently (overrides `output.jobs`).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Gaze table path (overrides `inputs.gaze`).
    #[arg(long, global = true)]
    pub gaze: Option<PathBuf>,
    /// Speaker map path (overrides `inputs.speaker_map`).
    #[arg(long, global = true)]
    pub speaker_map: Option<PathBuf>,
    /// Roster path (overrides `inputs.roster`).
    #[arg(long, global = true)]
    pub roster: Option<PathBuf>,
    /// Measures table path (overrides `inputs.measures`).
    #[arg(long, global = true)]
    pub measures: Option<PathBuf>,
}

/// Fully resolved configuration a command runs with.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub gaze: Option<PathBuf>,
    pub speaker_map: Option<PathBuf>,
    pub roster: Option<PathBuf>,
    pub measures: Option<PathBuf>,
    pub sessions: Vec<SessionConfig>,
    pub pipeline: PipelineConfig,
    pub k: usize,
    pub runs: usize,
    pub seed: u64,
    pub variant: TestVariant,
    pub one_sided_headline: bool,
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub strict_speaker_map: bool,
    pub scenario: ScenarioSpec,
}

fn parse_variant(token: &str) -> Result<TestVariant> {
    match token.to_ascii_lowercase().as_str() {
        "welch" => Ok(TestVariant::Welch),
        "student" => Ok(TestVariant::Student),
        other => anyhow::bail!("unknown test variant {other:?} (expected welch or student)"),
    }
}

fn parse_tail(token: &str) -> Result<bool> {
    match token.to_ascii_lowercase().as_str() {
        "one" => Ok(true),
        "two" => Ok(false),
        other => anyhow::bail!("unknown tail {other:?} (expected one or two)"),
    }
}

impl RunConfig {
    pub fn resolve(flags: &CommonFlags) -> Result<Self> {
        let file: FileConfig = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read config {}", path.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("cannot parse config {}", path.display()))?
            }
            None => FileConfig::default(),
        };

        let pipeline = PipelineConfig {
            window_s: flags
                .window
                .or(file.pipeline.window_s)
                .unwrap_or(PipelineConfig::default().window_s),
            itc_cooccurrence_window_s: flags
                .itc_window
                .or(file.pipeline.itc_window_s)
                .unwrap_or(PipelineConfig::default().itc_cooccurrence_window_s),
            rm_min_lookers: flags
                .rm_min_lookers
                .or(file.pipeline.rm_min_lookers)
                .unwrap_or(PipelineConfig::default().rm_min_lookers),
            trailing_window: file.pipeline.trailing_window.unwrap_or(false),
        };
        pipeline.validate()?;

        let seed = flags.seed.or(file.clustering.seed).unwrap_or(42);

        let variant = match &flags.variant {
            Some(token) => parse_variant(token)?,
            None => match &file.stats.variant {
                Some(token) => parse_variant(token)?,
                None => TestVariant::Welch,
            },
        };
        let one_sided_headline = match &flags.tail {
            Some(token) => parse_tail(token)?,
            None => match &file.stats.tail {
                Some(token) => parse_tail(token)?,
                None => true,
            },
        };

        let strict_speaker_map = if flags.strict {
            true
        } else if flags.lenient {
            false
        } else {
            file.ingest.strict_speaker_map.unwrap_or(true)
        };

        let scenario = {
            let section = file.scenario.clone();
            let defaults = ScenarioSpec::default();
            let section = section.unwrap_or(ScenarioSection {
                id: None,
                n_students: None,
                duration_s: None,
                tutor_present: None,
                mean_dwell_s: None,
                weights: None,
                seed: None,
            });
            let weights = match section.weights {
                Some(values) => {
                    let array: [f64; 7] = values.as_slice().try_into().map_err(|_| {
                        anyhow::anyhow!(
                            "scenario.weights must have exactly 7 entries, got {}",
                            values.len()
                        )
                    })?;
                    array
                }
                None => defaults.weights,
            };
            ScenarioSpec {
                session_id: section.id.unwrap_or(defaults.session_id),
                n_students: section.n_students.unwrap_or(defaults.n_students),
                duration_s: section.duration_s.unwrap_or(defaults.duration_s),
                tutor_present: section.tutor_present.unwrap_or(defaults.tutor_present),
                mean_dwell_s: section.mean_dwell_s.unwrap_or(defaults.mean_dwell_s),
                weights,
                seed: flags.seed.or(section.seed).unwrap_or(defaults.seed),
            }
        };

        Ok(RunConfig {
            gaze: flags.gaze.clone().or(file.inputs.gaze),
            speaker_map: flags.speaker_map.clone().or(file.inputs.speaker_map),
            roster: flags.roster.clone().or(file.inputs.roster),
            measures: flags.measures.clone().or(file.inputs.measures),
            sessions: file.sessions,
            pipeline,
            k: flags.k.or(file.clustering.k).unwrap_or(2),
            runs: flags.runs.or(file.clustering.runs).unwrap_or(10),
            seed,
            variant,
            one_sided_headline,
            out_dir: flags
                .out
                .clone()
                .or(file.output.dir)
                .unwrap_or_else(|| PathBuf::from("out")),
            jobs: flags.jobs.or(file.output.jobs).unwrap_or(1).max(1),
            strict_speaker_map,
            scenario,
        })
    }

}

/// Unwraps an optional input path with a message naming the config key.
pub fn require<'a>(path: &'a Option<PathBuf>, name: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| anyhow::anyhow!("missing required input path: {name}"))
}
