//! `engage compare`: cluster labels plus external measures in, comparison
//! report out.

use crate::config::{self, RunConfig};
use crate::errors::NoComparableRows;
use crate::output::{sig6, OutputWriter};
use crate::tables::{read_measures_csv, ClusterDoc, COMPARISONS_HEADER};
use anyhow::{Context, Result};
use engage_core::analytics::{compare_clusters, ComparisonReport};

pub fn run(cfg: &RunConfig) -> Result<()> {
    let clusters_path = cfg.out_dir.join("clusters.json");
    let text = std::fs::read_to_string(&clusters_path).with_context(|| {
        format!(
            "cluster document {} not found; run cluster first",
            clusters_path.display()
        )
    })?;
    let doc: ClusterDoc = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse {}", clusters_path.display()))?;
    let labels = doc.group_labels()?;
    if labels.is_empty() {
        return Err(anyhow::Error::new(NoComparableRows(
            "cluster document carries no driver/passenger labels (k must be 2)".into(),
        )));
    }

    let measures_path = config::require(&cfg.measures, "inputs.measures")?;
    let measures = read_measures_csv(measures_path)?;
    if measures.is_empty() {
        anyhow::bail!("measures table {} is empty", measures_path.display());
    }

    let rows = compare_clusters(&labels, &measures, cfg.variant)?;

    let mut csv_out = String::from(COMPARISONS_HEADER);
    let mut successes = 0usize;
    for (measure, outcome) in &rows {
        match outcome {
            Ok(report) => {
                successes += 1;
                csv_out.push_str(&comparison_row(report));
                println!("{}", comparison_summary(report, cfg.one_sided_headline));
            }
            Err(error) => {
                let message = error.to_string().replace(',', ";");
                csv_out.push_str(&format!("{measure},,,,,,,,,,,,,{message}\n"));
                eprintln!("{measure}: ERROR {error}");
            }
        }
    }

    let mut writer = OutputWriter::new(&cfg.out_dir, cfg.seed);
    writer.write("comparisons.csv", csv_out.as_bytes())?;
    writer.finish()?;

    if successes == 0 {
        return Err(anyhow::Error::new(NoComparableRows(format!(
            "all {} comparison rows failed",
            rows.len()
        ))));
    }
    Ok(())
}

fn comparison_row(report: &ComparisonReport) -> String {
    let r = &report.result;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},\n",
        report.measure,
        report.drivers.n,
        sig6(report.drivers.mean),
        sig6(report.drivers.sd),
        report.passengers.n,
        sig6(report.passengers.mean),
        sig6(report.passengers.sd),
        sig6(r.t),
        sig6(r.df),
        sig6(r.p_one_sided),
        sig6(r.p_two_sided),
        sig6(r.cohens_d),
        r.variant
    )
}

fn comparison_summary(report: &ComparisonReport, one_sided: bool) -> String {
    let r = &report.result;
    let (tail, p) = if one_sided {
        ("one-sided", r.p_one_sided)
    } else {
        ("two-sided", r.p_two_sided)
    };
    format!(
        "{}: drivers n={} mean={} sd={} | passengers n={} mean={} sd={} | t={} df={} p({tail})={} d={}",
        report.measure,
        report.drivers.n,
        sig6(report.drivers.mean),
        sig6(report.drivers.sd),
        report.passengers.n,
        sig6(report.passengers.mean),
        sig6(report.passengers.sd),
        sig6(r.t),
        sig6(r.df),
        sig6(p),
        sig6(r.cohens_d)
    )
}
