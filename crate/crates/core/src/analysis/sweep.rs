use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ModelId, ModelParams};
use crate::solution::Provenance;
use crate::solver::SolveOptions;

use super::propositions::check_with;
use super::Evaluator;

/// Value columns of a sweep row, in order.
pub const SWEEP_COLUMNS: [&str; 8] = ["w_h4", "w_l4", "tau_h4", "tau_l4", "w_h5", "w_l5", "tau_h5", "tau_l5"];

pub const DEFAULT_F_GRID: [f64; 4] = [3.0, 5.0, 7.0, 9.0];
pub const DEFAULT_K_GRID: [f64; 4] = [2.0, 4.0, 6.0, 8.0];

const VARIABLES: [&str; 4] = ["w_h", "w_l", "tau_h", "tau_l"];

/// How the two policy grids combine into rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    /// `(f[i], k[i])` pairs; both grids must have the same length.
    #[default]
    Zip,
    /// Every `f` with every `k`, `f` outermost.
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub f: f64,
    pub k: f64,
    pub w_h4: Option<f64>,
    pub w_l4: Option<f64>,
    pub tau_h4: Option<f64>,
    pub tau_l4: Option<f64>,
    pub w_h5: Option<f64>,
    pub w_l5: Option<f64>,
    pub tau_h5: Option<f64>,
    pub tau_l5: Option<f64>,
    /// Why cells are missing, if any are.
    pub note: Option<String>,
    /// Whether the antecedents of the buy-back and recycling-rate claims
    /// comparing the two models hold at this row (w_h, w_l, tau_h, tau_l).
    #[serde(skip)]
    pub antecedents: [bool; 4],
}

impl SweepRow {
    pub fn columns(&self) -> [Option<f64>; 8] {
        [
            self.w_h4, self.w_l4, self.tau_h4, self.tau_l4, self.w_h5, self.w_l5, self.tau_h5, self.tau_l5,
        ]
    }

    fn pair(&self, i: usize) -> (Option<f64>, Option<f64>) {
        let c = self.columns();
        (c[i], c[i + 4])
    }
}

/// Orderings evaluated over a sweep table. `None` marks a comparison with a
/// missing cell (or, for `conditional`, one whose antecedents are false).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepChecks {
    /// Per row, strict `V > IV` for w_h, w_l, tau_h, tau_l.
    pub dominance: Vec<[Option<bool>; 4]>,
    /// Per column, nondecreasing down the rows that have a value.
    pub monotone: [Option<bool>; 8],
    /// Per row, weak `V >= IV` where the matching claim's antecedents hold.
    pub conditional: Vec<[Option<bool>; 4]>,
}

fn all_true<'a>(it: impl IntoIterator<Item = &'a Option<bool>>, allow_missing: bool) -> bool {
    it.into_iter().all(|c| match c {
        Some(b) => *b,
        None => allow_missing,
    })
}

impl SweepChecks {
    pub fn dominance_pass(&self, allow_missing: bool) -> bool {
        all_true(self.dominance.iter().flatten(), allow_missing)
    }

    pub fn monotone_pass(&self, allow_missing: bool) -> bool {
        all_true(&self.monotone, allow_missing)
    }

    /// Inapplicable rows never fail.
    pub fn conditional_pass(&self) -> bool {
        all_true(self.conditional.iter().flatten(), true)
    }

    fn evaluate(rows: &[SweepRow]) -> SweepChecks {
        let dominance = rows
            .iter()
            .map(|r| std::array::from_fn(|i| matches!(r.pair(i), (Some(_), Some(_))).then(|| r.pair(i).1 > r.pair(i).0)))
            .collect();
        let monotone = std::array::from_fn(|j| {
            let col: Vec<f64> = rows.iter().filter_map(|r| r.columns()[j]).collect();
            (col.len() == rows.len() && col.len() >= 2).then(|| col.windows(2).all(|w| w[1] >= w[0]))
        });
        let conditional = rows
            .iter()
            .map(|r| {
                std::array::from_fn(|i| match (r.antecedents[i], r.pair(i)) {
                    (true, (Some(a), Some(b))) => Some(b >= a),
                    _ => None,
                })
            })
            .collect();
        SweepChecks {
            dominance,
            monotone,
            conditional,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub source: Provenance,
    pub mode: GridMode,
    pub rows: Vec<SweepRow>,
    pub checks: SweepChecks,
}

/// One row of a published reference table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub f: f64,
    pub k: f64,
    pub w_h4: f64,
    pub w_l4: f64,
    pub tau_h4: f64,
    pub tau_l4: f64,
    pub w_h5: f64,
    pub w_l5: f64,
    pub tau_h5: f64,
    pub tau_l5: f64,
}

impl ReferenceRow {
    pub fn columns(&self) -> [f64; 8] {
        [
            self.w_h4, self.w_l4, self.tau_h4, self.tau_l4, self.w_h5, self.w_l5, self.tau_h5, self.tau_l5,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellDeviation {
    pub f: f64,
    pub k: f64,
    pub column: &'static str,
    pub produced: Option<f64>,
    pub reference: f64,
    /// `produced - reference`.
    pub deviation: Option<f64>,
}

fn grid(f_values: &[f64], k_values: &[f64], mode: GridMode) -> Result<Vec<(f64, f64)>> {
    if f_values.is_empty() || k_values.is_empty() {
        return Err(Error::InvalidOptions("sweep grids must be nonempty".into()));
    }
    match mode {
        GridMode::Zip => {
            if f_values.len() != k_values.len() {
                return Err(Error::InvalidOptions(format!(
                    "zip mode needs grids of equal length (f has {}, k has {})",
                    f_values.len(),
                    k_values.len()
                )));
            }
            Ok(f_values.iter().copied().zip(k_values.iter().copied()).collect())
        }
        GridMode::Product => Ok(f_values
            .iter()
            .flat_map(|&f| k_values.iter().map(move |&k| (f, k)))
            .collect()),
    }
}

fn row(params: &ModelParams, source: Provenance, opts: &SolveOptions) -> SweepRow {
    let mut ev = Evaluator::new(params, source, opts);
    let mut notes = Vec::new();
    let mut cells = [None; 8];
    for (m, model) in [ModelId::IV, ModelId::V].into_iter().enumerate() {
        for (i, var) in VARIABLES.iter().enumerate() {
            match ev.value(model, var) {
                Ok(x) => cells[4 * m + i] = Some(x),
                Err(e) => {
                    let msg = format!("{model}: {e}");
                    if !notes.contains(&msg) {
                        notes.push(msg);
                    }
                }
            }
        }
    }
    let p6 = check_with(6, params, &mut ev);
    let p7 = check_with(7, params, &mut ev);
    let applies = |c: &super::Claim| c.antecedents.iter().all(|a| a.holds);
    let [w_h4, w_l4, tau_h4, tau_l4, w_h5, w_l5, tau_h5, tau_l5] = cells;
    SweepRow {
        f: params.f,
        k: params.k,
        w_h4,
        w_l4,
        tau_h4,
        tau_l4,
        w_h5,
        w_l5,
        tau_h5,
        tau_l5,
        note: (!notes.is_empty()).then(|| notes.join("; ")),
        antecedents: [
            applies(&p6.claims[0]),
            applies(&p6.claims[1]),
            applies(&p7.claims[0]),
            applies(&p7.claims[1]),
        ],
    }
}

/// Models IV and V over a grid of emission (`f`) and recycling (`k`)
/// reward-penalty intensities. Rows come out in grid order.
pub fn sweep(
    params: &ModelParams,
    f_values: &[f64],
    k_values: &[f64],
    mode: GridMode,
    source: Provenance,
    opts: &SolveOptions,
) -> Result<SweepTable> {
    opts.validate()?;
    let points = grid(f_values, k_values, mode)?;
    let rows = points
        .par_iter()
        .map(|&(f, k)| {
            let p = ModelParams { f, k, ..*params };
            p.validate()?;
            Ok(row(&p, source, opts))
        })
        .collect::<Result<Vec<_>>>()?;
    let checks = SweepChecks::evaluate(&rows);
    Ok(SweepTable {
        source,
        mode,
        rows,
        checks,
    })
}

/// Cell-by-cell difference from a reference table; rows are matched on
/// `(f, k)` and unmatched rows are skipped.
pub fn deviations(table: &SweepTable, reference: &[ReferenceRow]) -> Vec<CellDeviation> {
    let mut out = Vec::new();
    for r in &table.rows {
        let Some(refrow) = reference.iter().find(|x| x.f == r.f && x.k == r.k) else {
            continue;
        };
        for ((column, produced), reference) in SWEEP_COLUMNS.iter().zip(r.columns()).zip(refrow.columns()) {
            out.push(CellDeviation {
                f: r.f,
                k: r.k,
                column,
                produced,
                reference,
                deviation: produced.map(|x| x - reference),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::closed_form_values;

    fn reference() -> Vec<ReferenceRow> {
        let r = |f, k, v: [f64; 8]| ReferenceRow {
            f,
            k,
            w_h4: v[0],
            w_l4: v[1],
            tau_h4: v[2],
            tau_l4: v[3],
            w_h5: v[4],
            w_l5: v[5],
            tau_h5: v[6],
            tau_l5: v[7],
        };
        vec![
            r(3.0, 2.0, [3.8, 2.9, 0.38, 0.21, 4.5, 3.3, 0.56, 0.43]),
            r(9.0, 8.0, [4.3, 3.5, 0.49, 0.32, 6.8, 5.5, 0.78, 0.63]),
        ]
    }

    #[test]
    fn default_grid_shape() {
        let t = sweep(
            &ModelParams::default(),
            &DEFAULT_F_GRID,
            &DEFAULT_K_GRID,
            GridMode::Zip,
            Provenance::ClosedForm,
            &SolveOptions::default(),
        )
        .unwrap();
        let fk: Vec<_> = t.rows.iter().map(|r| (r.f, r.k)).collect();
        assert_eq!(fk, vec![(3.0, 2.0), (5.0, 4.0), (7.0, 6.0), (9.0, 8.0)]);
        assert_eq!(t.checks.dominance.len(), 4);
        let p = ModelParams {
            f: 5.0,
            k: 4.0,
            ..Default::default()
        };
        let iv = closed_form_values(ModelId::IV, &p);
        assert_eq!(t.rows[1].w_h4, iv.w_h.ok());
        assert_eq!(t.rows[1].tau_l4, iv.tau_l.ok());
    }

    #[test]
    fn product_mode_and_bad_grids() {
        let p = ModelParams::default();
        let o = SolveOptions::default();
        let t = sweep(&p, &[1.0, 2.0], &[0.5, 1.0, 1.5], GridMode::Product, Provenance::ClosedForm, &o).unwrap();
        assert_eq!(t.rows.len(), 6);
        assert_eq!((t.rows[2].f, t.rows[2].k), (1.0, 1.5));
        assert_eq!((t.rows[3].f, t.rows[3].k), (2.0, 0.5));
        assert!(sweep(&p, &[1.0], &[], GridMode::Product, Provenance::ClosedForm, &o).is_err());
        assert!(sweep(&p, &[1.0, 2.0], &[1.0], GridMode::Zip, Provenance::ClosedForm, &o).is_err());
    }

    #[test]
    fn reference_row_satisfies_its_own_orderings() {
        let mk = |v: [f64; 8], f| SweepRow {
            f,
            k: f - 1.0,
            w_h4: Some(v[0]),
            w_l4: Some(v[1]),
            tau_h4: Some(v[2]),
            tau_l4: Some(v[3]),
            w_h5: Some(v[4]),
            w_l5: Some(v[5]),
            tau_h5: Some(v[6]),
            tau_l5: Some(v[7]),
            note: None,
            antecedents: [true; 4],
        };
        let refs = reference();
        let rows: Vec<_> = refs.iter().map(|r| mk(r.columns(), r.f)).collect();
        let c = SweepChecks::evaluate(&rows);
        assert!(c.dominance_pass(false));
        assert!(c.monotone_pass(false));
        assert!(c.conditional_pass());

        let mut bad = rows.clone();
        bad[1].w_h5 = Some(4.0);
        let c = SweepChecks::evaluate(&bad);
        assert_eq!(c.dominance[1][0], Some(false));
        assert_eq!(c.monotone[4], Some(false));
        assert!(!c.conditional_pass());

        bad[0].tau_l5 = None;
        let c = SweepChecks::evaluate(&bad);
        assert_eq!(c.dominance[0][3], None);
        assert_eq!(c.monotone[7], None);
    }

    #[test]
    fn deviations_per_cell() {
        let t = sweep(
            &ModelParams::default(),
            &[3.0, 4.0],
            &[2.0, 3.0],
            GridMode::Zip,
            Provenance::ClosedForm,
            &SolveOptions::default(),
        )
        .unwrap();
        let d = deviations(&t, &reference());
        assert_eq!(d.len(), 8);
        assert!(d.iter().all(|c| c.f == 3.0 && c.k == 2.0));
        assert_eq!(d[4].column, "w_h5");
        assert_eq!(d[4].reference, 4.5);
        assert_eq!(d[4].deviation, d[4].produced.map(|x| x - 4.5));
    }

    #[test]
    fn oracle_rows_are_filled_and_ordered() {
        let t = sweep(
            &ModelParams::default(),
            &[3.0, 9.0],
            &[2.0, 8.0],
            GridMode::Zip,
            Provenance::Oracle,
            &SolveOptions::default(),
        )
        .unwrap();
        for r in &t.rows {
            assert!(r.columns().iter().all(Option::is_some), "{r:?}");
            assert!(r.note.is_none());
        }
        assert!(t.checks.conditional_pass());
    }
}
