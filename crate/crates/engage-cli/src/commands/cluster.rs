//! `engage cluster`: profiles in, cluster document and plot table out.

use crate::config::RunConfig;
use crate::output::{sig6, OutputWriter};
use crate::tables::{cluster_means_csv, read_profiles_csv, AssignmentEntry, ClusterDoc};
use anyhow::Result;
use engage_core::analytics::{kmeans_cluster, label_clusters, within_centroid_distance, GroupLabel};

pub fn run(cfg: &RunConfig) -> Result<()> {
    let profiles_path = cfg.out_dir.join("profiles.csv");
    if !profiles_path.is_file() {
        anyhow::bail!(
            "profiles table {} not found; run analyze first",
            profiles_path.display()
        );
    }
    let profiles = read_profiles_csv(&profiles_path)?;

    let model = kmeans_cluster(&profiles, cfg.k, cfg.runs, cfg.seed)?;
    let labeling = if cfg.k == 2 {
        Some(label_clusters(&model)?)
    } else {
        log::warn!("driver/passenger labeling requires k = 2 (k = {}); skipping", cfg.k);
        None
    };
    let (awcd, awcd_negated) = within_centroid_distance(&model, &profiles);

    let assignments = profiles
        .iter()
        .zip(&model.assignments)
        .map(|(profile, &cluster)| AssignmentEntry {
            participant_id: profile.participant.to_string(),
            session_id: profile.session_id.clone(),
            cluster,
            label: labeling.map(|l| {
                if cluster == l.driver_cluster {
                    GroupLabel::Driver
                } else {
                    GroupLabel::Passenger
                }
            }),
        })
        .collect();

    let doc = ClusterDoc {
        seed: cfg.seed,
        k: cfg.k,
        runs: cfg.runs,
        wss: model.wss,
        awcd,
        awcd_negated,
        run_wss: model.run_wss.clone(),
        centroids: model.centroids.clone(),
        labeling,
        assignments,
    };

    let mut writer = OutputWriter::new(&cfg.out_dir, cfg.seed);
    writer.write_json("clusters.json", &doc)?;
    writer.write(
        "cluster_means.csv",
        cluster_means_csv(&model, labeling.as_ref()).as_bytes(),
    )?;
    writer.finish()?;

    println!(
        "clustered {} profiles into k={} (runs={}, seed={}): wss={}, awcd={} ({} negated)",
        profiles.len(),
        cfg.k,
        cfg.runs,
        cfg.seed,
        sig6(model.wss),
        sig6(awcd),
        sig6(awcd_negated)
    );
    if let Some(labeling) = labeling {
        let drivers = model
            .assignments
            .iter()
            .filter(|a| **a == labeling.driver_cluster)
            .count();
        println!(
            "drivers: cluster {} (n={}), passengers: cluster {} (n={})",
            labeling.driver_cluster,
            drivers,
            labeling.passenger_cluster,
            profiles.len() - drivers
        );
    }
    Ok(())
}
