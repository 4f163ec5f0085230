//! Subcommand bodies. Each returns the files it produces as text so that
//! the binary only has to write them out.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use rsc_core::analysis::{
    check_all, deviations, prop2_random_check, sweep, PropositionReport, ReferenceRow, SweepTable, Verdict,
    SWEEP_COLUMNS,
};
use rsc_core::solver::{closed_form, cross_check, oracle};
use rsc_core::{CrossCheckReport, Error, Provenance, Solution};

use crate::config::{ConfigError, RunConfig, SourceSel};
use crate::format::{num, opt};

/// Shipped reference values for models IV and V on the default policy grid.
pub const REFERENCE_CSV: &str = include_str!("../data/sweep_reference.csv");

pub fn reference_rows() -> Vec<ReferenceRow> {
    csv::Reader::from_reader(REFERENCE_CSV.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .expect("shipped reference table parses")
}

/// Output of one subcommand.
#[derive(Debug, Default)]
pub struct Report {
    /// File name and contents, in write order.
    pub files: Vec<(&'static str, String)>,
    /// Printed to stdout.
    pub summary: String,
    /// Solver failure; the run still writes its files but exits nonzero.
    pub error: Option<String>,
}

impl Report {
    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, body) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
        }
        Ok(())
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| *n == name).map(|(_, b)| b.as_str())
    }
}

fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

pub const SOLUTION_HEADER: [&str; 26] = [
    "model",
    "provenance",
    "w_h",
    "w_l",
    "tau_h",
    "tau_l",
    "p1",
    "p2",
    "q1",
    "q2",
    "total",
    "manufacturer",
    "retailer1",
    "retailer2",
    "chain",
    "emission",
    "recycling_h",
    "recycling_l",
    "retailer2_penalty",
    "ir_h",
    "ir_l",
    "ic_h",
    "ic_l",
    "feasible",
    "binding",
    "warnings",
];

fn solution_row(s: &Solution) -> Vec<String> {
    let join = |v: Vec<String>| v.join(";");
    vec![
        s.model.to_string(),
        s.provenance.to_string(),
        num(s.menu.w_h),
        num(s.menu.w_l),
        num(s.menu.tau_h),
        num(s.menu.tau_l),
        num(s.prices.p1),
        opt(s.prices.p2),
        num(s.demand.q1),
        num(s.demand.q2),
        num(s.demand.total),
        num(s.profits.manufacturer),
        num(s.profits.retailer1),
        opt(s.profits.retailer2),
        num(s.profits.chain),
        num(s.transfers.emission),
        num(s.transfers.recycling_h),
        num(s.transfers.recycling_l),
        num(s.transfers.retailer2_penalty),
        num(s.screening.ir_h),
        num(s.screening.ir_l),
        num(s.screening.ic_h),
        num(s.screening.ic_l),
        s.screening.feasible.to_string(),
        join(s.screening.binding.iter().map(|c| c.to_string()).collect()),
        join(s.diagnostics.warnings.iter().map(|w| w.to_string()).collect()),
    ]
}

fn describe(out: &mut String, s: &Solution) {
    let _ = writeln!(out, "[{}] model {}", s.provenance, s.model);
    let _ = writeln!(
        out,
        "  menu: w_h={} w_l={} tau_h={} tau_l={}",
        num(s.menu.w_h),
        num(s.menu.w_l),
        num(s.menu.tau_h),
        num(s.menu.tau_l)
    );
    let _ = writeln!(out, "  prices: p1={} p2={}", num(s.prices.p1), opt(s.prices.p2));
    let _ = writeln!(
        out,
        "  screening: feasible={} ir_h={} ir_l={} ic_h={} ic_l={}",
        s.screening.feasible,
        num(s.screening.ir_h),
        num(s.screening.ir_l),
        num(s.screening.ic_h),
        num(s.screening.ic_l)
    );
    if s.diagnostics.warnings.is_empty() {
        let _ = writeln!(out, "  warnings: none");
    }
    for w in &s.diagnostics.warnings {
        let _ = writeln!(out, "  warning: {w}");
    }
    for k in &s.diagnostics.kkt {
        let _ = writeln!(
            out,
            "  kkt {}: scaled_norm={} active=[{}]",
            k.stage,
            num(k.scaled_norm),
            k.active.join(",")
        );
    }
    if let Some(n) = s.diagnostics.follower_iterations {
        let _ = writeln!(out, "  follower_iterations: {n}");
    }
    for n in &s.diagnostics.notes {
        let _ = writeln!(out, "  note: {n}");
    }
}

pub const CROSSCHECK_HEADER: [&str; 8] = [
    "model",
    "variable",
    "closed_form",
    "oracle",
    "abs_deviation",
    "rel_deviation",
    "status",
    "detail",
];

fn crosscheck_csv(r: &CrossCheckReport) -> String {
    use rsc_core::solver::VariableStatus as S;
    let rows: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|v| {
            let (status, detail) = match &v.status {
                S::Ok => ("ok", String::new()),
                S::Singular(d) => ("singular", d.clone()),
                S::OracleFailed(d) => ("oracle_failed", d.clone()),
            };
            vec![
                r.model.to_string(),
                v.variable.clone(),
                opt(v.closed_form),
                opt(v.oracle),
                opt(v.abs_deviation),
                opt(v.rel_deviation),
                status.to_string(),
                detail,
            ]
        })
        .collect();
    to_csv(&CROSSCHECK_HEADER, &rows)
}

fn describe_crosscheck(out: &mut String, r: &CrossCheckReport) {
    let _ = writeln!(out, "[crosscheck] model {}", r.model);
    match r.closed_form_feasible {
        Some(f) => {
            let _ = writeln!(out, "  closed form screening feasible: {f}");
        }
        None => {
            let _ = writeln!(out, "  closed form not evaluable");
        }
    }
    for v in &r.rows {
        let _ = writeln!(
            out,
            "  {}: closed_form={} oracle={} abs_dev={}",
            v.variable,
            opt(v.closed_form),
            opt(v.oracle),
            opt(v.abs_deviation)
        );
    }
}

/// `solve`: one solution per requested source.
pub fn cmd_solve(cfg: &RunConfig) -> Report {
    let (model, params, opts) = (cfg.model, &cfg.params, &cfg.options);
    let mut report = Report::default();
    let mut results: Vec<(Provenance, Result<Solution, Error>)> = Vec::new();
    let mut diag = String::new();
    match cfg.source {
        SourceSel::Both => {
            let cc = cross_check(model, params, opts);
            let cf = match &cc.closed_form {
                Some(s) => Ok(s.clone()),
                None => closed_form(model, params, opts.tol),
            };
            results.push((Provenance::ClosedForm, cf));
            results.push((Provenance::Oracle, cc.oracle.clone()));
            report.files.push(("crosscheck.csv", crosscheck_csv(&cc)));
            describe_crosscheck(&mut diag, &cc);
        }
        SourceSel::ClosedForm => results.push((Provenance::ClosedForm, closed_form(model, params, opts.tol))),
        SourceSel::Oracle => results.push((Provenance::Oracle, oracle(model, params, opts))),
    }
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    let mut head = String::new();
    for (src, r) in &results {
        match r {
            Ok(s) => {
                rows.push(solution_row(s));
                describe(&mut head, s);
            }
            Err(e) => {
                let _ = writeln!(head, "[{src}] model {model}\n  error: {e}");
                errors.push(format!("{src}: {e}"));
            }
        }
    }
    head.push_str(&diag);
    report.files.insert(0, ("solution.csv", to_csv(&SOLUTION_HEADER, &rows)));
    report.files.push(("diagnostics.txt", head.clone()));
    report.summary = head;
    if !errors.is_empty() {
        report.error = Some(errors.join("; "));
    }
    report
}

/// `crosscheck`: closed form against the oracle, reported only.
pub fn cmd_crosscheck(cfg: &RunConfig) -> Report {
    let cc = cross_check(cfg.model, &cfg.params, &cfg.options);
    let mut diag = String::new();
    if let Some(s) = &cc.closed_form {
        describe(&mut diag, s);
    }
    match &cc.oracle {
        Ok(s) => describe(&mut diag, s),
        Err(e) => {
            let _ = writeln!(diag, "[oracle] model {}\n  error: {e}", cc.model);
        }
    }
    describe_crosscheck(&mut diag, &cc);
    Report {
        files: vec![("crosscheck.csv", crosscheck_csv(&cc)), ("diagnostics.txt", diag.clone())],
        summary: diag,
        error: None,
    }
}

pub const SWEEP_HEADER: [&str; 12] = [
    "source", "f", "k", "w_h4", "w_l4", "tau_h4", "tau_l4", "w_h5", "w_l5", "tau_h5", "tau_l5", "note",
];

fn verdict(x: Option<bool>) -> &'static str {
    match x {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "n/a",
    }
}

fn describe_sweep(out: &mut String, t: &SweepTable) {
    let c = &t.checks;
    // The closed forms only answer where they are nonsingular; the oracle
    // has to answer everywhere.
    let allow_missing = t.source == Provenance::ClosedForm;
    let pf = |b: bool| if b { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "[sweep {}] {} rows", t.source, t.rows.len());
    let _ = writeln!(out, "  model V above model IV rowwise: {}", pf(c.dominance_pass(allow_missing)));
    let _ = writeln!(out, "  columns nondecreasing: {}", pf(c.monotone_pass(allow_missing)));
    let _ = writeln!(out, "  V >= IV where the claims apply: {}", pf(c.conditional_pass()));
    for r in t.rows.iter().filter(|r| r.note.is_some()) {
        let _ = writeln!(out, "  f={} k={}: {}", num(r.f), num(r.k), r.note.as_deref().unwrap_or(""));
    }
}

/// `sweep`: models IV and V over the policy grid, with ordering checks and
/// per-cell deviation from the shipped reference table.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Report, ConfigError> {
    let g = &cfg.sweep;
    if g.f.is_empty() || g.k.is_empty() {
        return Err(ConfigError("sweep grids must be nonempty (sweep.f, sweep.k)".into()));
    }
    let reference = reference_rows();
    let mut table_rows = Vec::new();
    let mut dev_rows = Vec::new();
    let mut check_rows = Vec::new();
    let mut diag = String::new();
    let mut errors = Vec::new();
    for src in cfg.source.sources() {
        let t = match sweep(&cfg.params, &g.f, &g.k, g.mode, src, &cfg.options) {
            Ok(t) => t,
            Err(e @ (Error::InvalidOptions(_) | Error::InvalidParams(_))) => return Err(ConfigError(e.to_string())),
            Err(e) => {
                errors.push(format!("{src}: {e}"));
                continue;
            }
        };
        for r in &t.rows {
            let mut row = vec![src.to_string(), num(r.f), num(r.k)];
            row.extend(r.columns().into_iter().map(opt));
            row.push(r.note.clone().unwrap_or_default());
            table_rows.push(row);
        }
        for d in deviations(&t, &reference) {
            dev_rows.push(vec![
                src.to_string(),
                num(d.f),
                num(d.k),
                d.column.to_string(),
                opt(d.produced),
                num(d.reference),
                opt(d.deviation),
            ]);
        }
        let vars = ["w_h", "w_l", "tau_h", "tau_l"];
        for (r, (dom, cond)) in t.rows.iter().zip(t.checks.dominance.iter().zip(&t.checks.conditional)) {
            for i in 0..4 {
                let at = format!("f={} k={} {}", num(r.f), num(r.k), vars[i]);
                check_rows.push(vec![src.to_string(), "dominance".into(), at.clone(), verdict(dom[i]).into()]);
                check_rows.push(vec![src.to_string(), "conditional".into(), at, verdict(cond[i]).into()]);
            }
        }
        for (col, m) in SWEEP_COLUMNS.iter().zip(t.checks.monotone) {
            check_rows.push(vec![src.to_string(), "monotone".into(), col.to_string(), verdict(m).into()]);
        }
        describe_sweep(&mut diag, &t);
    }
    for e in &errors {
        let _ = writeln!(diag, "error: {e}");
    }
    Ok(Report {
        files: vec![
            ("sweep.csv", to_csv(&SWEEP_HEADER, &table_rows)),
            (
                "sweep_deviation.csv",
                to_csv(&["source", "f", "k", "column", "produced", "reference", "deviation"], &dev_rows),
            ),
            ("sweep_checks.csv", to_csv(&["source", "check", "target", "result"], &check_rows)),
            ("sweep_reference.csv", REFERENCE_CSV.to_string()),
            ("diagnostics.txt", diag.clone()),
        ],
        summary: diag,
        error: (!errors.is_empty()).then(|| errors.join("; ")),
    })
}

pub const PROPOSITIONS_HEADER: [&str; 11] = [
    "scope",
    "source",
    "proposition",
    "verdict",
    "holds",
    "fails",
    "vacuous",
    "singular",
    "seed",
    "draws",
    "claims",
];

pub const PROPOSITION_DETAIL_HEADER: [&str; 12] = [
    "source",
    "proposition",
    "claim",
    "label",
    "role",
    "name",
    "lhs",
    "relation",
    "rhs",
    "pass",
    "verdict",
    "note",
];

fn count(r: &PropositionReport, v: Verdict) -> String {
    r.claims.iter().filter(|c| c.verdict == v).count().to_string()
}

fn claim_text(r: &PropositionReport) -> String {
    r.claims
        .iter()
        .map(|c| {
            let ante: Vec<String> = c
                .antecedents
                .iter()
                .map(|a| format!("{} {} {} {} [{}]", a.name, num(a.lhs), a.relation, num(a.rhs), verdict(Some(a.holds))))
                .collect();
            let k = &c.conclusion;
            format!(
                "{}: {} => {} {} {} {} {}: {}",
                c.label,
                ante.join(" & "),
                k.lhs_name,
                opt(k.lhs),
                k.relation,
                k.rhs_name,
                opt(k.rhs),
                c.verdict
            )
        })
        .collect::<Vec<_>>()
        .join(" | ")
}

/// `propositions`: the eight claims at the configured point for each
/// source, plus the random-draw check of the recycling-rate claim.
pub fn cmd_propositions(cfg: &RunConfig) -> Report {
    let mut rows = Vec::new();
    let mut detail = Vec::new();
    let mut diag = String::new();
    let mut errors = Vec::new();
    for src in cfg.source.sources() {
        let reports = match check_all(&cfg.params, src, &cfg.options) {
            Ok(r) => r,
            Err(e) => {
                errors.push(format!("{src}: {e}"));
                continue;
            }
        };
        let _ = writeln!(diag, "[propositions {src}]");
        for r in &reports {
            let _ = writeln!(diag, "  {}: {}", r.id, r.verdict);
            rows.push(vec![
                "point".into(),
                src.to_string(),
                r.id.to_string(),
                r.verdict.to_string(),
                count(r, Verdict::Holds),
                count(r, Verdict::Fails),
                count(r, Verdict::Vacuous),
                count(r, Verdict::Singular),
                String::new(),
                String::new(),
                claim_text(r),
            ]);
            for (i, c) in r.claims.iter().enumerate() {
                let base = |role: &str, name: &str| {
                    vec![
                        src.to_string(),
                        r.id.to_string(),
                        i.to_string(),
                        c.label.clone(),
                        role.to_string(),
                        name.to_string(),
                    ]
                };
                for a in &c.antecedents {
                    let mut row = base("antecedent", &a.name);
                    row.extend([
                        num(a.lhs),
                        a.relation.to_string(),
                        num(a.rhs),
                        a.holds.to_string(),
                        c.verdict.to_string(),
                        String::new(),
                    ]);
                    detail.push(row);
                }
                let k = &c.conclusion;
                let mut row = base("conclusion", &format!("{} vs {}", k.lhs_name, k.rhs_name));
                row.extend([
                    opt(k.lhs),
                    k.relation.to_string(),
                    opt(k.rhs),
                    k.holds.map(|b| b.to_string()).unwrap_or_default(),
                    c.verdict.to_string(),
                    c.note.clone().unwrap_or_default(),
                ]);
                detail.push(row);
            }
        }
    }
    let rc = prop2_random_check(cfg.seed, cfg.draws);
    let v = if rc.fails > 0 {
        Verdict::Fails
    } else if rc.singular > 0 {
        Verdict::Singular
    } else if rc.holds > 0 {
        Verdict::Holds
    } else {
        Verdict::Vacuous
    };
    let _ = writeln!(
        diag,
        "[random draws closed_form] proposition 2 seed={} draws={}: holds={} fails={} vacuous={} singular={}",
        rc.seed, rc.draws, rc.holds, rc.fails, rc.vacuous, rc.singular
    );
    rows.push(vec![
        "random".into(),
        Provenance::ClosedForm.to_string(),
        rc.proposition.to_string(),
        v.to_string(),
        rc.holds.to_string(),
        rc.fails.to_string(),
        rc.vacuous.to_string(),
        rc.singular.to_string(),
        rc.seed.to_string(),
        rc.draws.to_string(),
        String::new(),
    ]);
    for e in &errors {
        let _ = writeln!(diag, "error: {e}");
    }
    Report {
        files: vec![
            ("propositions.csv", to_csv(&PROPOSITIONS_HEADER, &rows)),
            ("propositions_detail.csv", to_csv(&PROPOSITION_DETAIL_HEADER, &detail)),
            ("diagnostics.txt", diag.clone()),
        ],
        summary: diag,
        error: (!errors.is_empty()).then(|| errors.join("; ")),
    }
}
