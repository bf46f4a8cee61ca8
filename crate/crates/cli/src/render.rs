//! Fixed-width text tables.

use std::fmt::Write as _;

use curved_rs::identity_suite::{CheckStatus, MetricInfo, SuiteReport};

use crate::commands::{ConstraintsReport, GaugeReport};

fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut out = String::new();
        for (i, (cell, w)) in cells.zip(&widths).enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            let pad = w - cell.chars().count();
            out.push_str(cell);
            out.extend(std::iter::repeat_n(' ', pad));
        }
        out.trim_end().to_string() + "\n"
    };
    let mut out = line(&mut headers.iter().copied());
    out += &line(
        &mut widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .iter()
            .map(String::as_str),
    );
    for row in rows {
        out += &line(&mut row.iter().map(String::as_str));
    }
    out
}

fn header(metric: &MetricInfo) -> String {
    let params: Vec<String> = metric
        .params
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    format!(
        "metric   {} ({}{}{})\nhash     {}\n",
        metric.name,
        metric.origin,
        if params.is_empty() { "" } else { "; " },
        params.join(", "),
        metric.content_hash
    )
}

fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

fn coords(c: &[f64; 4]) -> String {
    format!("({:.4}, {:.4}, {:.4}, {:.4})", c[0], c[1], c[2], c[3])
}

pub fn identities(r: &SuiteReport) -> String {
    let mut out = header(&r.metric);
    let _ = writeln!(
        out,
        "seed     {}   points {}   fixtures {}   mass {}   charge {}\n",
        r.seed, r.points, r.fixtures, r.mass, r.charge
    );
    let rows: Vec<Vec<String>> = r
        .checks
        .iter()
        .map(|c| {
            let status = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Skipped => "skip",
            };
            let note = match (&c.classification, &c.failure) {
                (_, Some(f)) => f.clone(),
                (Some(classes), None) if !classes.is_empty() => {
                    let nonzero = classes
                        .iter()
                        .filter(|k| **k == curved_rs::identity_suite::GaugeClass::CriterionNonzero)
                        .count();
                    if nonzero == 0 {
                        "zero".to_string()
                    } else {
                        format!("criterion-nonzero at {nonzero}/{}", classes.len())
                    }
                }
                _ => String::new(),
            };
            vec![
                c.id.to_string(),
                status.to_string(),
                c.points_tested.to_string(),
                sci(c.max_relative_error),
                sci(c.tolerance),
                note,
            ]
        })
        .collect();
    out += &table(
        &[
            "check",
            "status",
            "points",
            "max rel err",
            "tolerance",
            "note",
        ],
        &rows,
    );
    let _ = writeln!(
        out,
        "\n{} passed, {} failed, {} skipped",
        r.summary.passed, r.summary.failed, r.summary.skipped
    );
    out
}

pub fn gauge(r: &GaugeReport) -> String {
    let mut out = header(&r.metric);
    let _ = writeln!(
        out,
        "seed     {}   points {}   fixtures {}\n",
        r.seed, r.points, r.fixtures
    );
    let rows: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|p| {
            vec![
                coords(&p.coords),
                sci(p.einstein_norm),
                sci(p.residual_norm),
                sci(p.predicted_norm),
                p.mismatch.map_or("-".to_string(), sci),
                if p.passed { "ok" } else { "FAIL" }.to_string(),
            ]
        })
        .collect();
    out += &table(
        &[
            "point",
            "|G|",
            "residual",
            "predicted",
            "mismatch",
            "status",
        ],
        &rows,
    );
    let _ = writeln!(out, "\nverdict: {}", r.verdict);
    out
}

pub fn constraints(r: &ConstraintsReport) -> String {
    let mut out = header(&r.metric);
    let _ = writeln!(
        out,
        "seed     {}   points {}   fixtures {}   mass {}   charge {}\n",
        r.seed, r.points, r.fixtures, r.mass, r.charge
    );
    let rows: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|p| {
            vec![
                coords(&p.coords),
                sci(p.contraction_error),
                sci(p.chain_error),
                sci(p.first_constraint_norm),
                sci(p.algebraic_norm),
                p.failure
                    .clone()
                    .unwrap_or_else(|| if p.passed { "ok" } else { "FAIL" }.to_string()),
            ]
        })
        .collect();
    out += &table(
        &[
            "point",
            "contraction",
            "chain",
            "|C1|/|Psi|",
            "|K|/|Psi|",
            "status",
        ],
        &rows,
    );
    if let Some(s) = &r.einstein_space {
        let _ = writeln!(
            out,
            "\nEinstein space, R = {:.6}; bracket (R/12 - m^2)/2",
            s.scalar_curvature
        );
        let rows: Vec<Vec<String>> = s
            .scan
            .iter()
            .map(|p| {
                vec![
                    format!("{:.4}", p.mass),
                    format!("{:+.6}", p.measured[0]),
                    format!("{:+.6}", p.predicted),
                ]
            })
            .collect();
        out += &table(&["m", "measured", "predicted"], &rows);
        let fmt = |v: Option<f64>| v.map_or("none".to_string(), |v| format!("{v:.8}"));
        let _ = writeln!(
            out,
            "zero crossing: {}   expected: {}   max misfit {}",
            fmt(s.root),
            fmt(s.predicted_root),
            sci(s.max_misfit)
        );
    }
    out
}
