//! Selection of elements to refine from their error indicators.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[serde(alias = "max")]
    Maximum,
    Equilibration,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Maximum => "max",
            Strategy::Equilibration => "equilibration",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Strategy> {
        match s {
            "max" | "maximum" => Ok(Strategy::Maximum),
            "equilibration" | "equi" => Ok(Strategy::Equilibration),
            other => Err(Error::InvalidArgument(format!(
                "unknown strategy '{other}' (expected max or equilibration)"
            ))),
        }
    }
}

/// Which statistics the strategy sees after ε pre-marking.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    /// Max and total are taken over the unmarked remainder only.
    #[default]
    Complement,
    /// Max and total are taken over all elements; pre-marked elements count towards
    /// the equilibration target.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkParams {
    pub strategy: Strategy,
    pub theta: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub statistics: Statistics,
}

impl MarkParams {
    pub fn new(strategy: Strategy, theta: f64, epsilon: f64) -> MarkParams {
        MarkParams {
            strategy,
            theta,
            epsilon,
            statistics: Statistics::Complement,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_theta(self.theta)?;
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in [0,1], got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("theta must lie in (0,1), got {theta}")))
    }
}

fn check_eta(eta: &[f64]) -> Result<()> {
    if eta.is_empty() {
        return Err(Error::InvalidArgument("no indicators to mark".into()));
    }
    if let Some(i) = eta.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "indicator {i} is {} (must be finite and nonnegative)",
            eta[i]
        )));
    }
    Ok(())
}

/// Indices ordered by decreasing indicator, ties by increasing index.
fn descending(eta: &[f64], subset: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut idx: Vec<usize> = subset.collect();
    idx.sort_by(|&a, &b| match eta[b].partial_cmp(&eta[a]).unwrap_or(Ordering::Equal) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    idx
}

/// Marks every element with `η_T ≥ θ·max η`.
pub fn maximum_strategy(eta: &[f64], theta: f64) -> Result<Vec<usize>> {
    check_eta(eta)?;
    check_theta(theta)?;
    let all: Vec<usize> = (0..eta.len()).collect();
    Ok(maximum_on(eta, &all, theta * max_of(eta, &all)))
}

fn max_of(eta: &[f64], subset: &[usize]) -> f64 {
    subset.iter().map(|&i| eta[i]).fold(0.0, f64::max)
}

fn maximum_on(eta: &[f64], subset: &[usize], threshold: f64) -> Vec<usize> {
    subset.iter().copied().filter(|&i| eta[i] >= threshold).collect()
}

/// Adds whole batches of equal largest indicators until their squared sum
/// reaches `θ Σ η²`. If every indicator is zero, all elements are marked.
pub fn equilibration_strategy(eta: &[f64], theta: f64) -> Result<Vec<usize>> {
    check_eta(eta)?;
    check_theta(theta)?;
    let all: Vec<usize> = (0..eta.len()).collect();
    let total = sum_sq(eta, &all);
    let mut marked = equilibration_on(eta, &all, 0.0, theta * total);
    marked.sort_unstable();
    Ok(marked)
}

/// Sum of squares accumulated in descending order, so the result does not depend on
/// element numbering.
fn sum_sq(eta: &[f64], subset: &[usize]) -> f64 {
    let mut v: Vec<f64> = subset.iter().map(|&i| eta[i]).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v.iter().map(|e| e * e).sum()
}

fn equilibration_on(eta: &[f64], subset: &[usize], start: f64, target: f64) -> Vec<usize> {
    let order = descending(eta, subset.iter().copied());
    if target == 0.0 {
        // all indicators vanish
        return order;
    }
    let mut sum = start;
    let mut marked = Vec::new();
    let mut k = 0;
    while sum < target && k < order.len() {
        let batch = eta[order[k]];
        while k < order.len() && eta[order[k]] == batch {
            sum += batch * batch;
            marked.push(order[k]);
            k += 1;
        }
    }
    marked
}

/// Number of elements pre-marked for a given `ε` and element count.
pub fn premark_count(epsilon: f64, n: usize) -> usize {
    let x = epsilon * n as f64;
    // ε·n that is an integer up to round-off should not round up
    let k = if (x - x.round()).abs() < 1e-9 { x.round() } else { x.ceil() };
    (k as usize).min(n)
}

/// Pre-marks the `⌈ε n⌉` largest indicators, then applies the strategy to the rest.
/// Returns sorted element indices.
pub fn mark(eta: &[f64], params: &MarkParams) -> Result<Vec<usize>> {
    check_eta(eta)?;
    params.validate()?;
    let n = eta.len();
    let k = premark_count(params.epsilon, n);
    let order = descending(eta, 0..n);
    let (pre, rest) = order.split_at(k);
    let mut rest = rest.to_vec();
    rest.sort_unstable();
    let mut marked = pre.to_vec();
    if !rest.is_empty() {
        let all: Vec<usize> = (0..n).collect();
        let picked = match (params.strategy, params.statistics) {
            (Strategy::Maximum, Statistics::Complement) => {
                maximum_on(eta, &rest, params.theta * max_of(eta, &rest))
            }
            (Strategy::Maximum, Statistics::Global) => maximum_on(eta, &rest, params.theta * max_of(eta, &all)),
            (Strategy::Equilibration, Statistics::Complement) => {
                equilibration_on(eta, &rest, 0.0, params.theta * sum_sq(eta, &rest))
            }
            (Strategy::Equilibration, Statistics::Global) => {
                equilibration_on(eta, &rest, sum_sq(eta, pre), params.theta * sum_sq(eta, &all))
            }
        };
        marked.extend(picked);
    }
    marked.sort_unstable();
    Ok(marked)
}
