//! One-axis parameter sweeps.

use rayon::prelude::*;
use twistmod::rng::{self, tags};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliError;
use crate::run::{metadata, run_rows};
use crate::table::{fmt_f64, ResultTable, Row};

/// Runs the experiment once per value of `axis`.
///
/// Sub-run `i` uses the seed `derive_seed(seed, SWEEP, i, 0)`. Rows are
/// concatenated in the order of `values`, each point prefixed with
/// `axis=value;`. Where the property suite expects the anomaly rate to fall
/// along the axis, a `sweep` row flags whether it does (allowing two
/// standard errors of the difference between neighbours).
pub fn sweep(cfg: &ExperimentConfig, axis: &str, values: &[f64]) -> Result<ResultTable, CliError> {
    let mut table = ResultTable::new(cfg.experiment.kind());
    table.metadata = metadata(cfg);
    table.metadata.push(("sweep_axis".into(), axis.into()));
    let listed: Vec<String> = values.iter().map(|&v| fmt_f64(v)).collect();
    table.metadata.push(("sweep_values".into(), listed.join(" ")));
    if values.is_empty() {
        return Ok(table);
    }
    let subs: Vec<Experiment> = values
        .iter()
        .map(|&v| cfg.experiment.with_axis(axis, v))
        .collect::<Result<_, _>>()?;
    let parts: Vec<Vec<Row>> = subs
        .par_iter()
        .enumerate()
        .map(|(i, e)| run_rows(e, rng::derive_seed(cfg.seed, tags::SWEEP, i as u64, 0)))
        .collect::<Result<_, _>>()?;
    let mut pooled_rates = Vec::new();
    for (v, rows) in values.iter().zip(parts) {
        for mut row in rows {
            if row.statistic == "anomaly_rate" && !row.point.contains("theta=") {
                pooled_rates.push((*v, row.value, row.stderr.unwrap_or(0.0)));
            }
            row.point = format!("{axis}={};{}", fmt_f64(*v), row.point);
            table.rows.push(row);
        }
    }
    let expects_decrease = matches!(
        (&cfg.experiment, axis),
        (Experiment::MlSweep(_), "gamma") | (Experiment::ItineraryScheme(_), "gamma" | "n")
    );
    if expects_decrease && pooled_rates.len() == values.len() {
        pooled_rates.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ok = pooled_rates
            .windows(2)
            .all(|w| w[1].1 <= w[0].1 + 2.0 * (w[0].2 * w[0].2 + w[1].2 * w[1].2).sqrt());
        table
            .rows
            .push(Row::new("sweep", "anomaly_rate_nonincreasing", "flag", if ok { 1.0 } else { 0.0 }).reference(1.0));
    }
    Ok(table)
}
