use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Gaussian, PerturbedQuadratic, Potential, RidgeLogistic, SeparablePotential};
use crate::{Error, Result};

/// Target block of an experiment config, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TargetSpec {
    Gaussian {
        eigenvalues: Vec<f64>,
    },
    Perturbed {
        dim: usize,
        amplitude: f64,
        #[serde(default)]
        seed: u64,
    },
    Logistic {
        /// CSV with the label in the first column and features after it.
        #[serde(default)]
        data: Option<PathBuf>,
        #[serde(default)]
        features: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        labels: Option<Vec<f64>>,
        #[serde(default)]
        dim: Option<usize>,
        ridge: f64,
    },
    Separable {
        /// Either one block repeated `count` times, or an explicit list.
        #[serde(default)]
        block: Option<Box<TargetSpec>>,
        #[serde(default)]
        count: Option<usize>,
        #[serde(default)]
        blocks: Option<Vec<TargetSpec>>,
    },
}

impl TargetSpec {
    /// Builds the potential. Relative CSV paths resolve against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<Arc<dyn Potential>> {
        Ok(match self {
            TargetSpec::Gaussian { eigenvalues } => Arc::new(Gaussian::new(eigenvalues.clone())?),
            TargetSpec::Perturbed {
                dim,
                amplitude,
                seed,
            } => Arc::new(PerturbedQuadratic::new(*dim, *amplitude, *seed)?),
            TargetSpec::Logistic {
                data,
                features,
                labels,
                dim,
                ridge,
            } => {
                let (x, y) =
                    match (data, features, labels) {
                        (Some(path), None, None) => load_logistic_csv(&base_dir.join(path))?,
                        (None, Some(x), Some(y)) => (x.clone(), y.clone()),
                        (None, None, None) => (Vec::new(), Vec::new()),
                        _ => return Err(Error::config(
                            "target",
                            "logistic target takes either `data` or both `features` and `labels`",
                        )),
                    };
                let d = match (dim, x.first()) {
                    (Some(d), _) => *d,
                    (None, Some(row)) => row.len(),
                    (None, None) => {
                        return Err(Error::config(
                            "target.dim",
                            "required when no data is given",
                        ))
                    }
                };
                Arc::new(RidgeLogistic::new(&x, &y, d, *ridge)?)
            }
            TargetSpec::Separable {
                block,
                count,
                blocks,
            } => match (block, count, blocks) {
                (Some(b), Some(n), None) => {
                    Arc::new(SeparablePotential::replicate(b.build(base_dir)?, *n)?)
                }
                (None, None, Some(list)) => {
                    let built = list
                        .iter()
                        .map(|b| b.build(base_dir))
                        .collect::<Result<Vec<_>>>()?;
                    let m = built.first().map(|b| b.dim()).unwrap_or(0);
                    Arc::new(SeparablePotential::new(m, built)?)
                }
                _ => {
                    return Err(Error::config(
                        "target",
                        "separable target takes `block` with `count`, or `blocks`",
                    ))
                }
            },
        })
    }

    /// Builds the target as a separable potential; a non-separable target
    /// becomes a single block.
    pub fn build_separable(&self, base_dir: &Path) -> Result<SeparablePotential> {
        match self {
            TargetSpec::Separable {
                block: Some(b),
                count: Some(n),
                blocks: None,
            } => SeparablePotential::replicate(b.build(base_dir)?, *n),
            TargetSpec::Separable {
                block: None,
                count: None,
                blocks: Some(list),
            } => {
                let built = list
                    .iter()
                    .map(|b| b.build(base_dir))
                    .collect::<Result<Vec<_>>>()?;
                let m = built.first().map(|b| b.dim()).unwrap_or(0);
                SeparablePotential::new(m, built)
            }
            TargetSpec::Separable { .. } => Err(Error::config(
                "target",
                "separable target takes `block` with `count`, or `blocks`",
            )),
            other => {
                let pot = other.build(base_dir)?;
                SeparablePotential::new(pot.dim(), vec![pot])
            }
        }
    }

    /// Block size when the target is separable.
    pub fn block_dim(&self) -> Option<usize> {
        match self {
            TargetSpec::Separable { block: Some(b), .. } => Some(b.dim_hint()?),
            TargetSpec::Separable {
                blocks: Some(list), ..
            } => list.first()?.dim_hint(),
            _ => None,
        }
    }

    fn dim_hint(&self) -> Option<usize> {
        match self {
            TargetSpec::Gaussian { eigenvalues } => Some(eigenvalues.len()),
            TargetSpec::Perturbed { dim, .. } => Some(*dim),
            TargetSpec::Logistic { dim, features, .. } => {
                dim.or_else(|| features.as_ref()?.first().map(Vec::len))
            }
            TargetSpec::Separable { .. } => None,
        }
    }
}

/// Reads `label, x_1, …, x_d` rows. A header row is accepted if its first
/// field is not numeric.
pub fn load_logistic_csv(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) if !v.is_empty() => {
                labels.push(v[0]);
                features.push(v[1..].to_vec());
            }
            Err(_) if i == 0 => continue,
            _ => {
                return Err(Error::config(
                    format!("{}:{}", path.display(), i + 1),
                    "expected numeric fields",
                ))
            }
        }
    }
    Ok((features, labels))
}
