//! Trial-response tables: grouped accuracy with bootstrap intervals and
//! design matrices for the logistic model.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_ci, Statistic};
use crate::error::{invalid, Error, Result};

/// A CSV of responses with a header row and a `correct` column in {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseTable {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    correct: Vec<bool>,
}

impl ResponseTable {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let columns: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Parse {
                line: 1,
                message: e.to_string(),
            })?
            .iter()
            .map(str::to_owned)
            .collect();
        let correct_idx = columns
            .iter()
            .position(|c| c == "correct")
            .ok_or_else(|| Error::Validation("response table has no `correct` column".into()))?;
        let mut rows = Vec::new();
        let mut correct = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            let row: Vec<String> = rec.iter().map(str::to_owned).collect();
            correct.push(match row[correct_idx].as_str() {
                "1" | "true" | "TRUE" | "True" => true,
                "0" | "false" | "FALSE" | "False" => false,
                other => {
                    return Err(Error::Parse {
                        line,
                        message: format!("`correct` must be 0 or 1, got {other:?}"),
                    })
                }
            });
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Validation("response table has no rows".into()));
        }
        Ok(Self {
            columns,
            rows,
            correct,
        })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn correct(&self) -> &[bool] {
        &self.correct
    }

    fn index_of(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| invalid(format!("unknown column {name:?}")))
    }

    pub fn column(&self, name: &str) -> Result<Vec<&str>> {
        let i = self.index_of(name)?;
        Ok(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn numeric_column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.index_of(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(k, r)| {
                r[i].parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line: k + 2,
                        message: format!("column {name:?} is not numeric: {:?}", r[i]),
                    })
            })
            .collect()
    }
}

/// Accuracy of one condition tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub group: BTreeMap<String, String>,
    pub n: usize,
    pub accuracy: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Groups responses by the distinct values of `group_by` and reports
/// accuracy with a 95% percentile bootstrap interval. Groups with a single
/// response get a degenerate interval at their accuracy.
pub fn accuracy_summary(
    table: &ResponseTable,
    group_by: &[&str],
    n_resamples: usize,
    seed: u64,
) -> Result<Vec<AccuracyRow>> {
    let idx: Vec<usize> = group_by
        .iter()
        .map(|g| table.index_of(g))
        .collect::<Result<_>>()?;
    let mut groups: BTreeMap<Vec<&str>, Vec<f64>> = BTreeMap::new();
    for (row, &ok) in table.rows.iter().zip(&table.correct) {
        let key: Vec<&str> = idx.iter().map(|&i| row[i].as_str()).collect();
        groups.entry(key).or_default().push(f64::from(u8::from(ok)));
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(g, (key, values))| {
            let accuracy = values.iter().sum::<f64>() / values.len() as f64;
            let (ci_lo, ci_hi) = if values.len() < 2 {
                (accuracy, accuracy)
            } else {
                bootstrap_ci(&values, Statistic::Mean, n_resamples, 0.95, seed.wrapping_add(g as u64))?
            };
            Ok(AccuracyRow {
                group: group_by
                    .iter()
                    .zip(key)
                    .map(|(k, v)| ((*k).to_owned(), v.to_owned()))
                    .collect(),
                n: values.len(),
                accuracy,
                ci_lo,
                ci_hi,
            })
        })
        .collect()
}

/// Predictor layout for the logistic model. Coefficient indices include the
/// intercept at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub rows: Vec<Vec<f64>>,
    /// Name of each design column, e.g. `pae` or `base=cosine`.
    pub names: Vec<String>,
    /// Coefficient indices of each categorical predictor's dummies.
    pub groups: Vec<(String, Vec<usize>)>,
}

/// Builds a design from numeric columns and treatment-coded categorical
/// columns. The lexicographically first level of each categorical is the
/// reference.
pub fn build_design(table: &ResponseTable, numeric: &[&str], categorical: &[&str]) -> Result<Design> {
    let mut rows = vec![Vec::new(); table.len()];
    let mut names = Vec::new();
    let mut groups = Vec::new();
    for &name in numeric {
        for (row, v) in rows.iter_mut().zip(table.numeric_column(name)?) {
            row.push(v);
        }
        names.push(name.to_owned());
    }
    for &name in categorical {
        let col = table.column(name)?;
        let levels: BTreeSet<&str> = col.iter().copied().collect();
        let mut indices = Vec::new();
        for level in levels.iter().skip(1) {
            for (row, v) in rows.iter_mut().zip(&col) {
                row.push(f64::from(u8::from(v == level)));
            }
            names.push(format!("{name}={level}"));
            indices.push(names.len());
        }
        if !indices.is_empty() {
            groups.push((name.to_owned(), indices));
        }
    }
    if names.is_empty() {
        return Err(invalid("model has no predictors"));
    }
    Ok(Design {
        rows,
        names,
        groups,
    })
}
