use std::fmt::Write as _;

use serde::Serialize;

use super::{slug, ExperimentError, ExperimentManifest};
use crate::delta_search::{search_delta, CandidateScorer, DeltaSearchResult, SamplingScorer};
use crate::jssp::Instance;
use crate::output::{write_atomic, write_json};
use crate::policy::PolicySpec;
use crate::rng::child_seed;

/// One searched (policy, class, sample size) cell. `result` is `None` for
/// sizes the class skips.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaTableCell {
    pub policy_id: String,
    pub class: String,
    pub sample_size: usize,
    pub result: Option<DeltaSearchResult>,
}

impl DeltaTableCell {
    pub fn best_delta(&self) -> Option<f64> {
        self.result.as_ref().map(|r| r.best_delta)
    }
}

/// A table row: one base policy on one problem size.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTableRow {
    pub base: String,
    pub problem_size: String,
    /// δ* per sample size; `None` renders as `n.a.`.
    pub cells: Vec<Option<f64>>,
}

/// CSV with a `base,problem_size` prefix and one column per sample size;
/// δ values with two decimals.
pub fn render_delta_table(sizes: &[usize], rows: &[DeltaTableRow]) -> String {
    let mut out = String::from("base,problem_size");
    for s in sizes {
        let _ = write!(out, ",{s}");
    }
    out.push('\n');
    for row in rows {
        let _ = write!(out, "{},{}", row.base, row.problem_size);
        for cell in &row.cells {
            match cell {
                Some(d) => {
                    let _ = write!(out, ",{d:.2}");
                }
                None => out.push_str(",n.a."),
            }
        }
        out.push('\n');
    }
    out
}

/// Seed of the δ search for class `class_index` at `sample_size`.
pub(super) fn cell_seed(master: u64, class_index: usize, sample_size: usize) -> u64 {
    child_seed(child_seed(master, class_index as u64), sample_size as u64)
}

pub(super) fn search_cell(
    manifest: &ExperimentManifest,
    class_index: usize,
    policy: &PolicySpec,
    sample_size: usize,
    validation: &[Instance],
    oracle: Option<&dyn CandidateScorer>,
) -> Result<DeltaSearchResult, ExperimentError> {
    let seed = cell_seed(manifest.master_seed, class_index, sample_size);
    let config = manifest.search.config(sample_size, seed);
    let scorer = SamplingScorer {
        instances: validation,
        policy,
        sample_size,
        master_seed: seed,
        mode: manifest.mode,
    };
    let scorer: &dyn CandidateScorer = match oracle {
        Some(o) => o,
        None => &scorer,
    };
    Ok(search_delta(&config, scorer)?)
}

/// Runs a δ search per cell on the class's validation instances.
pub fn run_delta_table(
    manifest: &ExperimentManifest,
) -> Result<Vec<DeltaTableCell>, ExperimentError> {
    run_delta_table_with(manifest, None)
}

/// [`run_delta_table`] with every cell scored by `oracle` instead of by
/// sampling, when given.
pub fn run_delta_table_with(
    manifest: &ExperimentManifest,
    oracle: Option<&dyn CandidateScorer>,
) -> Result<Vec<DeltaTableCell>, ExperimentError> {
    manifest.validate()?;
    let threads = manifest.thread_pool()?;
    let out = &manifest.output_dir;
    let mut cells = Vec::new();
    for (ci, class) in manifest.classes.iter().enumerate() {
        let validation = class.validation.as_ref().expect("validated").load()?;
        for policy in &manifest.policies {
            for &s in &manifest.sample_sizes {
                let result = if class.skip_sample_sizes.contains(&s) {
                    None
                } else {
                    let r = threads
                        .install(|| search_cell(manifest, ci, policy, s, &validation, oracle))?;
                    let stem = format!("{}__{}__s{s}", slug(&class.name), slug(&policy.id()));
                    write_json(&out.join("searches").join(format!("{stem}.json")), &r)?;
                    write_atomic(
                        &out.join("searches").join(format!("{stem}.csv")),
                        r.to_csv().as_bytes(),
                    )?;
                    log::info!(
                        "delta table {} / {} / {s}: delta* = {} ({} evaluations)",
                        class.name,
                        policy.id(),
                        r.best_delta,
                        r.evaluations.len()
                    );
                    Some(r)
                };
                cells.push(DeltaTableCell {
                    policy_id: policy.id(),
                    class: class.name.clone(),
                    sample_size: s,
                    result,
                });
            }
        }
    }

    let rows = table_rows(manifest, &cells);
    write_atomic(
        &out.join("delta_table.csv"),
        render_delta_table(&manifest.sample_sizes, &rows).as_bytes(),
    )?;
    write_json(&out.join("delta_table.json"), &cells)?;
    Ok(cells)
}

/// Rows grouped by policy, then class, in manifest order.
fn table_rows(manifest: &ExperimentManifest, cells: &[DeltaTableCell]) -> Vec<DeltaTableRow> {
    let mut rows = Vec::new();
    for policy in &manifest.policies {
        let id = policy.id();
        for class in &manifest.classes {
            let cells = manifest
                .sample_sizes
                .iter()
                .map(|&s| {
                    cells
                        .iter()
                        .find(|c| c.policy_id == id && c.class == class.name && c.sample_size == s)
                        .and_then(DeltaTableCell::best_delta)
                })
                .collect();
            rows.push(DeltaTableRow {
                base: id.clone(),
                problem_size: class.name.clone(),
                cells,
            });
        }
    }
    rows
}
