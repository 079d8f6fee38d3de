//! Scoring selection methods against the ground truth: Kendall tau between
//! predicted and true model rankings, and the effectiveness lost by
//! deploying the predicted best model.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::corpusio::{write_file, EffectivenessTable, ModelRegistry};
use crate::ireval::truth_ranking;
use crate::selectors::{assemble_ranking, MethodKind, MethodScoreTable, ModelRanking};
use crate::{Error, Result};

/// Kendall tau over two strict rankings of the same models:
/// `(concordant - discordant) / (n (n - 1) / 2)`.
pub fn kendall_tau(predicted: &ModelRanking, truth: &ModelRanking) -> Result<f64> {
    let truth_pos: HashMap<&str, usize> = truth.order().enumerate().map(|(i, m)| (m, i)).collect();
    let n = predicted.entries.len();
    if n != truth.entries.len() || truth_pos.len() != n {
        return Err(Error::invalid("rankings cover different model sets"));
    }
    let positions = predicted
        .order()
        .map(|m| {
            truth_pos
                .get(m)
                .copied()
                .ok_or_else(|| Error::invalid(format!("model {m} missing from the true ranking")))
        })
        .collect::<Result<Vec<_>>>()?;
    if n < 2 {
        return Err(Error::invalid("Kendall tau needs at least two models"));
    }
    // `positions` lists truth ranks in predicted order, so a pair is
    // concordant exactly when the earlier entry has the smaller truth rank.
    let mut balance: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            balance += if positions[i] < positions[j] { 1 } else { -1 };
        }
    }
    Ok(balance as f64 / (n * (n - 1) / 2) as f64)
}

fn best_value(effectiveness: &EffectivenessTable, dataset: &str, registry: &ModelRegistry) -> Result<f64> {
    registry
        .ids()
        .map(|m| effectiveness.require(m, dataset))
        .try_fold(f64::NEG_INFINITY, |acc, v| Ok(acc.max(v?)))
}

/// `e(best) - e(predicted_best)`, never negative.
pub fn delta_e(
    predicted_best: &str,
    effectiveness: &EffectivenessTable,
    dataset: &str,
    registry: &ModelRegistry,
) -> Result<f64> {
    let best = best_value(effectiveness, dataset, registry)?;
    Ok(best - effectiveness.require(predicted_best, dataset)?)
}

/// `100 * delta_e / e(best)`.
pub fn percent_delta_e(
    predicted_best: &str,
    effectiveness: &EffectivenessTable,
    dataset: &str,
    registry: &ModelRegistry,
) -> Result<f64> {
    let best = best_value(effectiveness, dataset, registry)?;
    if best <= 0.0 {
        return Err(Error::Numeric(format!(
            "relative regret undefined on {dataset}: best effectiveness is 0"
        )));
    }
    Ok(100.0 * delta_e(predicted_best, effectiveness, dataset, registry)? / best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationRow {
    pub method: String,
    pub dataset: String,
    pub tau: f64,
    pub delta_e: f64,
    pub pct_delta_e: f64,
    pub predicted_best: String,
    pub true_best: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Averages {
    pub tau: f64,
    pub delta_e: f64,
    pub pct_delta_e: f64,
}

/// One method variant scored over a list of datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodEvaluation {
    pub method: String,
    pub rows: Vec<EvaluationRow>,
    pub average: Averages,
}

/// Score one method variant on every dataset in `datasets`. `tables` must
/// hold exactly one table per dataset, all with the same label.
pub fn evaluate_method(
    tables: &[MethodScoreTable],
    truth: &EffectivenessTable,
    registry: &ModelRegistry,
    datasets: &[String],
) -> Result<MethodEvaluation> {
    let label = tables
        .first()
        .map(|t| t.label.clone())
        .ok_or_else(|| Error::Missing("method tables".into()))?;
    if let Some(other) = tables.iter().find(|t| t.label != label) {
        return Err(Error::invalid(format!(
            "cannot evaluate {label} and {} together",
            other.label
        )));
    }
    if datasets.is_empty() {
        return Err(Error::invalid("no datasets to evaluate"));
    }
    let rows = datasets
        .iter()
        .map(|dataset| {
            let table = tables
                .iter()
                .find(|t| &t.dataset == dataset)
                .ok_or_else(|| Error::Missing(format!("{label} table for dataset {dataset}")))?;
            let predicted = assemble_ranking(table, registry)?;
            let actual = truth_ranking(truth, dataset, registry)?;
            let picked = predicted.best();
            Ok(EvaluationRow {
                method: label.clone(),
                dataset: dataset.clone(),
                tau: kendall_tau(&predicted, &actual)?,
                delta_e: delta_e(picked, truth, dataset, registry)?,
                pct_delta_e: percent_delta_e(picked, truth, dataset, registry)?,
                predicted_best: picked.to_owned(),
                true_best: actual.best().to_owned(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = rows.len() as f64;
    let average = Averages {
        tau: rows.iter().map(|r| r.tau).sum::<f64>() / n,
        delta_e: rows.iter().map(|r| r.delta_e).sum::<f64>() / n,
        pct_delta_e: rows.iter().map(|r| r.pct_delta_e).sum::<f64>() / n,
    };
    Ok(MethodEvaluation {
        method: label,
        rows,
        average,
    })
}

/// Dataset name used for the average row in CSV output.
pub const AVERAGE_ROW: &str = "average";

/// `method,dataset,tau,delta_e,pct_delta_e,predicted_best,true_best`, one
/// row per dataset followed by an average row per method.
pub fn write_evaluation_csv(path: &Path, evaluations: &[MethodEvaluation], comments: &[String]) -> Result<()> {
    let mut out = Vec::new();
    for c in comments {
        out.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    {
        let mut writer = csv::Writer::from_writer(&mut out);
        let csv_err = |e: csv::Error| Error::invalid(e.to_string());
        for eval in evaluations {
            for row in &eval.rows {
                writer.serialize(row).map_err(csv_err)?;
            }
            writer
                .serialize(EvaluationRow {
                    method: eval.method.clone(),
                    dataset: AVERAGE_ROW.into(),
                    tau: eval.average.tau,
                    delta_e: eval.average.delta_e,
                    pct_delta_e: eval.average.pct_delta_e,
                    predicted_best: String::new(),
                    true_best: String::new(),
                })
                .map_err(csv_err)?;
        }
        if evaluations.is_empty() {
            writer
                .write_record(["method", "dataset", "tau", "delta_e", "pct_delta_e", "predicted_best", "true_best"])
                .map_err(csv_err)?;
        }
        writer.flush().map_err(|e| Error::io(path, e))?;
    }
    write_file(path, &out)
}

/// Report row title, e.g. `Binary Entropy 10 (5)` or `Query Alteration Std p=0.1 (6)`.
pub fn row_title(label: &str) -> String {
    let Ok(kind) = label.parse::<MethodKind>() else {
        return label.to_owned();
    };
    let number = MethodKind::ALL.iter().position(|k| *k == kind).unwrap_or(0) + 1;
    match label.split_once('@') {
        Some((_, variant)) => {
            let variant = match variant.strip_prefix('p') {
                Some(p) if p.parse::<f64>().is_ok() => format!("p={p}"),
                _ => variant.to_owned(),
            };
            format!("{} {variant} ({number})", kind.title())
        }
        None => format!("{} ({number})", kind.title()),
    }
}

/// Markdown report with three tables (tau, delta_e, %delta_e): one row per
/// method variant, one column per dataset plus the average.
pub fn render_markdown(evaluations: &[MethodEvaluation], comments: &[String]) -> String {
    let datasets: Vec<&str> = evaluations
        .first()
        .map(|e| e.rows.iter().map(|r| r.dataset.as_str()).collect())
        .unwrap_or_default();
    let mut out = String::new();
    for c in comments {
        writeln!(out, "<!-- {c} -->").unwrap();
    }
    type Section = (&'static str, fn(&EvaluationRow) -> f64, fn(&Averages) -> f64, usize);
    let sections: [Section; 3] = [
        ("Kendall tau (higher is better)", |r| r.tau, |a| a.tau, 3),
        ("Delta e (lower is better)", |r| r.delta_e, |a| a.delta_e, 3),
        ("% Delta e (lower is better)", |r| r.pct_delta_e, |a| a.pct_delta_e, 2),
    ];
    for (title, cell, avg, places) in sections {
        writeln!(out, "\n## {title}\n").unwrap();
        write!(out, "| Method |").unwrap();
        for d in &datasets {
            write!(out, " {d} |").unwrap();
        }
        writeln!(out, " Avrg |").unwrap();
        writeln!(out, "|---|{}---|", "---|".repeat(datasets.len())).unwrap();
        for eval in evaluations {
            write!(out, "| {} |", row_title(&eval.method)).unwrap();
            for r in &eval.rows {
                write!(out, " {:.*} |", places, cell(r)).unwrap();
            }
            writeln!(out, " {:.*} |", places, avg(&eval.average)).unwrap();
        }
    }
    out
}
