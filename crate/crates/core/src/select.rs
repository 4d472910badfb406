//! Tuning-parameter selection along a computed path.
//!
//! MBIC: `(1/2n) ||X b - y||^2 + |A| log(n) log(p) / n`
//! HBIC: `log(||X b - y||^2 / n) + |A| log(log n) log(p) / n`
//!
//! `|A|` is the number of stored nonzeros of each knot. The argmin is taken
//! with ties resolved toward the smaller knot index (larger `lambda`).

use serde::{Deserialize, Serialize};

use crate::error::{Result, SnapError};
use crate::path::PathResult;
use crate::problem::ProblemData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    Mbic,
    Hbic,
}

impl Criterion {
    pub fn as_str(&self) -> &'static str {
        match self {
            Criterion::Mbic => "MBIC",
            Criterion::Hbic => "HBIC",
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorResult {
    /// Position in `path.records`.
    pub chosen_index: usize,
    /// Grid index `t` of the chosen knot.
    pub chosen_knot: usize,
    pub chosen_lambda: f64,
    pub criterion_values: Vec<f64>,
    pub criterion: Criterion,
}

impl SelectorResult {
    pub fn value(&self) -> f64 {
        self.criterion_values[self.chosen_index]
    }
}

pub fn mbic_value(rss: f64, n: usize, p: usize, size: usize) -> f64 {
    let nf = n as f64;
    rss / (2.0 * nf) + size as f64 * nf.ln() * (p as f64).ln() / nf
}

pub fn hbic_value(rss: f64, n: usize, p: usize, size: usize) -> f64 {
    let nf = n as f64;
    (rss / nf).ln() + size as f64 * nf.ln().ln() * (p as f64).ln() / nf
}

/// First index of the minimum.
pub fn argmin_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        match best {
            Some(b) if values[b] <= *v => {}
            _ => best = Some(i),
        }
    }
    best
}

fn rss_per_knot(prob: &ProblemData, path: &PathResult) -> Vec<f64> {
    path.records
        .iter()
        .map(|r| {
            let fitted = prob.x_cols_mul(&r.beta.indices, &r.beta.values);
            (prob.y() - fitted).norm_squared()
        })
        .collect()
}

fn finish(path: &PathResult, values: Vec<f64>, criterion: Criterion) -> Result<SelectorResult> {
    let chosen_index = argmin_first(&values).ok_or(SnapError::EmptyPath)?;
    let rec = &path.records[chosen_index];
    Ok(SelectorResult {
        chosen_index,
        chosen_knot: rec.knot,
        chosen_lambda: rec.lambda,
        criterion_values: values,
        criterion,
    })
}

pub fn mbic_select(prob: &ProblemData, path: &PathResult) -> Result<SelectorResult> {
    if path.is_empty() {
        return Err(SnapError::EmptyPath);
    }
    let (n, p) = (prob.n(), prob.p());
    let values = rss_per_knot(prob, path)
        .into_iter()
        .zip(&path.records)
        .map(|(rss, r)| mbic_value(rss, n, p, r.beta.nnz()))
        .collect();
    finish(path, values, Criterion::Mbic)
}

pub fn hbic_select(prob: &ProblemData, path: &PathResult) -> Result<SelectorResult> {
    if path.is_empty() {
        return Err(SnapError::EmptyPath);
    }
    let (n, p) = (prob.n(), prob.p());
    let rss = rss_per_knot(prob, path);
    if let Some((i, _)) = rss.iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(SnapError::ZeroResidual(path.records[i].knot));
    }
    let values = rss
        .into_iter()
        .zip(&path.records)
        .map(|(rss, r)| hbic_value(rss, n, p, r.beta.nnz()))
        .collect();
    finish(path, values, Criterion::Hbic)
}

pub fn select(prob: &ProblemData, path: &PathResult, criterion: Criterion) -> Result<SelectorResult> {
    match criterion {
        Criterion::Mbic => mbic_select(prob, path),
        Criterion::Hbic => hbic_select(prob, path),
    }
}
