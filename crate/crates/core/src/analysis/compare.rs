use serde::Serialize;

use crate::error::Result;
use crate::params::{ModelId, ModelParams};
use crate::solution::Provenance;
use crate::solver::SolveOptions;

use super::Evaluator;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub name: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// `a - b` when both sides are available.
    pub diff: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub a: ModelId,
    pub b: ModelId,
    pub source: Provenance,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn row(&self, name: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// Variable-by-variable difference of two models over the names they share.
///
/// A model that cannot be evaluated at all (oracle failure) is an error; a
/// single singular closed-form value only blanks its own row.
pub fn compare_models(
    params: &ModelParams,
    (a, b): (ModelId, ModelId),
    source: Provenance,
    opts: &SolveOptions,
) -> Result<ComparisonTable> {
    params.validate()?;
    opts.validate()?;
    let mut ev = Evaluator::new(params, source, opts);
    let va = ev.values(a).clone()?;
    let vb = ev.values(b).clone()?;
    let rows = va
        .iter()
        .filter_map(|(name, x)| {
            let (_, y) = vb.iter().find(|(n, _)| n == name)?;
            let note = match (x, y) {
                (Err(e), _) | (_, Err(e)) => Some(e.to_string()),
                _ => None,
            };
            let (x, y) = (x.clone().ok(), y.clone().ok());
            Some(ComparisonRow {
                name: name.to_string(),
                a: x,
                b: y,
                diff: x.zip(y).map(|(x, y)| x - y),
                note,
            })
        })
        .collect();
    Ok(ComparisonTable { a, b, source, rows })
}
