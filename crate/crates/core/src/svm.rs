//! Soft-margin support vector machine over a precomputed kernel, solved in
//! the dual by sequential minimal optimization.
//!
//! Dual: maximize `sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij` subject to
//! `0 <= a_i <= C` and `sum(a_i y_i) = 0`. Decision function
//! `f(x) = sum_i a_i y_i K(x, x_i) + b`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::kernels::GramMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvmError {
    #[error("NotSquare: kernel matrix is {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("DegenerateLabels: training labels contain a single class")]
    DegenerateLabels,
    #[error("LengthMismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("TooLarge: the oracle handles at most {max} points, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("labels must be 0 or 1, got {0}")]
    InvalidLabel(u8),
    #[error("invalid solver setting: {0}")]
    InvalidConfig(String),
    #[error("model file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoConfig {
    pub c: f64,
    pub tol: f64,
    /// Cap on full sweeps over the training set.
    pub max_passes: usize,
}

impl Default for SmoConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_passes: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub bias: f64,
    /// Indices with `alpha > tol`.
    pub support_indices: Vec<usize>,
    /// Training labels as -1 / +1.
    pub labels: Vec<i8>,
    pub c: f64,
    pub tol: f64,
}

/// Solver statistics kept for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoTrace {
    pub passes: usize,
    /// Dual objective before the first step and after every accepted step.
    pub objectives: Vec<f64>,
    /// The final sweep found nothing left to improve.
    pub converged: bool,
}

pub const ORACLE_MAX_POINTS: usize = 8;

fn signed_labels(y: &[u8]) -> Result<Vec<f64>, SvmError> {
    let out: Vec<f64> = y
        .iter()
        .map(|&l| match l {
            0 => Ok(-1.0),
            1 => Ok(1.0),
            other => Err(SvmError::InvalidLabel(other)),
        })
        .collect::<Result<_, _>>()?;
    if !(out.contains(&1.0) && out.contains(&-1.0)) {
        return Err(SvmError::DegenerateLabels);
    }
    Ok(out)
}

fn check_config(cfg: &SmoConfig) -> Result<(), SvmError> {
    if !(cfg.c > 0.0 && cfg.c.is_finite()) {
        return Err(SvmError::InvalidConfig(format!(
            "C must be positive, got {}",
            cfg.c
        )));
    }
    if cfg.tol.is_nan() || cfg.tol <= 0.0 {
        return Err(SvmError::InvalidConfig(format!(
            "tol must be positive, got {}",
            cfg.tol
        )));
    }
    Ok(())
}

/// `(K + K^T) / 2` as nested rows.
pub fn symmetrized(k: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, SvmError> {
    let n = k.len();
    if let Some(row) = k.iter().find(|r| r.len() != n) {
        return Err(SvmError::NotSquare {
            rows: n,
            cols: row.len(),
        });
    }
    Ok((0..n)
        .map(|i| (0..n).map(|j| 0.5 * (k[i][j] + k[j][i])).collect())
        .collect())
}

pub fn gram_rows(g: &GramMatrix) -> Vec<Vec<f64>> {
    (0..g.rows).map(|i| g.row(i).to_vec()).collect()
}

/// `sum(a) - 1/2 a^T Q a` with `Q_ij = y_i y_j K_ij`; labels in {0, 1}.
pub fn dual_objective(k: &[Vec<f64>], y: &[u8], alphas: &[f64]) -> f64 {
    let s: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let mut quad = 0.0;
    for i in 0..alphas.len() {
        for j in 0..alphas.len() {
            quad += alphas[i] * alphas[j] * s[i] * s[j] * k[i][j];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Fits on a square Gram matrix after symmetrizing it.
pub fn fit_precomputed(k: &GramMatrix, y: &[u8], cfg: &SmoConfig) -> Result<SvmModel, SvmError> {
    if !k.is_square() {
        return Err(SvmError::NotSquare {
            rows: k.rows,
            cols: k.cols,
        });
    }
    fit_dense(&gram_rows(k), y, cfg)
}

pub fn fit_dense(k: &[Vec<f64>], y: &[u8], cfg: &SmoConfig) -> Result<SvmModel, SvmError> {
    fit_traced(k, y, cfg).map(|(m, _)| m)
}

/// SMO. The first multiplier is the next KKT violator in index order; its
/// partner maximizes `|E_i - E_j|`, falling back to the remaining indices
/// in cyclic order when that pair cannot make progress. Stops after the
/// first sweep without an accepted step, or after `max_passes` sweeps.
pub fn fit_traced(
    k: &[Vec<f64>],
    y: &[u8],
    cfg: &SmoConfig,
) -> Result<(SvmModel, SmoTrace), SvmError> {
    check_config(cfg)?;
    let k = symmetrized(k)?;
    let n = k.len();
    if y.len() != n {
        return Err(SvmError::LengthMismatch {
            expected: n,
            got: y.len(),
        });
    }
    let s = signed_labels(y)?;
    let c = cfg.c;
    let mut alpha = vec![0.0; n];
    // g_i = sum_j a_j y_j K_ij
    let mut g = vec![0.0; n];
    let mut b = 0.0;
    let mut objective: f64 = 0.0;
    let mut trace = SmoTrace {
        passes: 0,
        objectives: vec![0.0],
        converged: false,
    };
    let bounded = |a: f64| a <= 0.0 || a >= c;

    while trace.passes < cfg.max_passes {
        trace.passes += 1;
        let mut changed = 0;
        for i in 0..n {
            let e_i = g[i] + b - s[i];
            let r = s[i] * e_i;
            if !((r < -cfg.tol && alpha[i] < c) || (r > cfg.tol && alpha[i] > 0.0)) {
                continue;
            }
            let errors: Vec<f64> = (0..n).map(|j| g[j] + b - s[j]).collect();
            let mut best = None;
            for j in (0..n).filter(|&j| j != i) {
                let gap = (e_i - errors[j]).abs();
                if best.is_none_or(|(_, bg)| gap > bg) {
                    best = Some((j, gap));
                }
            }
            let Some((first, _)) = best else { continue };
            let order =
                std::iter::once(first).chain((1..n).map(|d| (i + d) % n).filter(|&j| j != first));
            for j in order {
                if let Some(step) = take_step(&k, &s, &alpha, &g, c, i, j, e_i, errors[j]) {
                    let (ai, aj, gain) = step;
                    let (di, dj) = (ai - alpha[i], aj - alpha[j]);
                    for (m, gm) in g.iter_mut().enumerate() {
                        *gm += di * s[i] * k[i][m] + dj * s[j] * k[j][m];
                    }
                    alpha[i] = ai;
                    alpha[j] = aj;
                    let b_i = s[i] - g[i];
                    let b_j = s[j] - g[j];
                    b = if !bounded(ai) {
                        b_i
                    } else if !bounded(aj) {
                        b_j
                    } else {
                        0.5 * (b_i + b_j)
                    };
                    debug_assert!(gain > 0.0);
                    let next = alpha.iter().sum::<f64>()
                        - 0.5
                            * alpha
                                .iter()
                                .zip(&s)
                                .zip(&g)
                                .map(|((a, y), gi)| a * y * gi)
                                .sum::<f64>();
                    assert!(
                        next >= objective - 1e-12 * (1.0 + objective.abs()),
                        "dual objective decreased: {objective} -> {next}"
                    );
                    objective = next;
                    trace.objectives.push(objective);
                    changed += 1;
                    break;
                }
            }
        }
        if changed == 0 {
            trace.converged = true;
            break;
        }
    }
    let model = finish(&k, &s, alpha, c, cfg.tol);
    Ok((model, trace))
}

/// Best feasible move of the pair `(i, j)` along the equality constraint.
/// Returns the new multipliers and the objective gain.
#[allow(clippy::too_many_arguments)]
fn take_step(
    k: &[Vec<f64>],
    s: &[f64],
    alpha: &[f64],
    g: &[f64],
    c: f64,
    i: usize,
    j: usize,
    e_i: f64,
    e_j: f64,
) -> Option<(f64, f64, f64)> {
    let (ai, aj) = (alpha[i], alpha[j]);
    let sij = s[i] * s[j];
    let (lo, hi) = if sij < 0.0 {
        ((aj - ai).max(0.0), (c + aj - ai).min(c))
    } else {
        ((ai + aj - c).max(0.0), (ai + aj).min(c))
    };
    if hi - lo < 1e-12 {
        return None;
    }
    let gain_at = |t: f64| {
        let dj = t - aj;
        let di = -sij * dj;
        di + dj
            - (di * s[i] * g[i] + dj * s[j] * g[j])
            - 0.5 * (di * di * k[i][i] + dj * dj * k[j][j] + 2.0 * di * dj * sij * k[i][j])
    };
    let eta = k[i][i] + k[j][j] - 2.0 * k[i][j];
    let t = if eta > 1e-12 {
        (aj + s[j] * (e_i - e_j) / eta).clamp(lo, hi)
    } else if gain_at(lo) >= gain_at(hi) {
        lo
    } else {
        hi
    };
    if (t - aj).abs() < 1e-12 * (t + aj + 1e-12) {
        return None;
    }
    let gain = gain_at(t);
    if gain <= 1e-15 {
        return None;
    }
    let new_i = (ai + sij * (aj - t)).clamp(0.0, c);
    Some((new_i, t, gain))
}

/// Bias: mean over unbounded support vectors, else the midpoint of the
/// interval allowed by the bounded ones.
fn bias(k: &[Vec<f64>], s: &[f64], alpha: &[f64], c: f64, tol: f64) -> f64 {
    let n = alpha.len();
    let g: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| alpha[j] * s[j] * k[i][j]).sum())
        .collect();
    let free: Vec<f64> = (0..n)
        .filter(|&i| alpha[i] > tol * c && alpha[i] < c * (1.0 - tol))
        .map(|i| s[i] - g[i])
        .collect();
    if !free.is_empty() {
        return free.iter().sum::<f64>() / free.len() as f64;
    }
    let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let r = s[i] - g[i];
        let at_zero = alpha[i] <= tol * c;
        // alpha = 0 needs y f >= 1; alpha = C needs y f <= 1.
        if at_zero == (s[i] > 0.0) {
            lower = lower.max(r);
        } else {
            upper = upper.min(r);
        }
    }
    match (lower.is_finite(), upper.is_finite()) {
        (true, true) => 0.5 * (lower + upper),
        (true, false) => lower,
        (false, true) => upper,
        (false, false) => 0.0,
    }
}

fn finish(k: &[Vec<f64>], s: &[f64], alpha: Vec<f64>, c: f64, tol: f64) -> SvmModel {
    let b = bias(k, s, &alpha, c, tol);
    SvmModel {
        support_indices: (0..alpha.len()).filter(|&i| alpha[i] > tol).collect(),
        bias: b,
        labels: s.iter().map(|&v| v as i8).collect(),
        alphas: alpha,
        c,
        tol,
    }
}

/// Exact dual solution for tiny problems: every split of the multipliers
/// into {0, C, free} is tried, the free ones solved from the stationarity
/// and equality conditions, and the best feasible point kept.
pub fn fit_qp_oracle(k: &[Vec<f64>], y: &[u8], c: f64) -> Result<SvmModel, SvmError> {
    let n = k.len();
    if n > ORACLE_MAX_POINTS {
        return Err(SvmError::TooLarge {
            n,
            max: ORACLE_MAX_POINTS,
        });
    }
    check_config(&SmoConfig {
        c,
        ..SmoConfig::default()
    })?;
    let k = symmetrized(k)?;
    if y.len() != n {
        return Err(SvmError::LengthMismatch {
            expected: n,
            got: y.len(),
        });
    }
    let s = signed_labels(y)?;
    let q = |i: usize, j: usize| s[i] * s[j] * k[i][j];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        // 0 = at zero, 1 = at C, 2 = free
        let state: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state
            .iter()
            .map(|&st| if st == 1 { c } else { 0.0 })
            .collect();
        if !free.is_empty() {
            let m = free.len();
            let mut a = DMatrix::<f64>::zeros(m + 1, m + 1);
            let mut rhs = DVector::<f64>::zeros(m + 1);
            for (r, &fi) in free.iter().enumerate() {
                for (col, &fj) in free.iter().enumerate() {
                    a[(r, col)] = q(fi, fj);
                }
                a[(r, m)] = s[fi];
                a[(m, r)] = s[fi];
                rhs[r] = 1.0
                    - (0..n)
                        .filter(|&b| state[b] == 1)
                        .map(|b| q(fi, b) * c)
                        .sum::<f64>();
            }
            rhs[m] = -(0..n)
                .filter(|&b| state[b] == 1)
                .map(|b| s[b] * c)
                .sum::<f64>();
            let Ok(sol) = a.clone().svd(true, true).solve(&rhs, 1e-12) else {
                continue;
            };
            if (&a * &sol - &rhs).norm() > 1e-8 {
                continue;
            }
            for (r, &fi) in free.iter().enumerate() {
                alpha[fi] = sol[r];
            }
        }
        let feasible = alpha.iter().all(|&a| (-1e-10..=c + 1e-10).contains(&a))
            && alpha.iter().zip(&s).map(|(a, y)| a * y).sum::<f64>().abs() < 1e-9;
        if !feasible {
            continue;
        }
        alpha.iter_mut().for_each(|a| *a = a.clamp(0.0, c));
        let obj = dual_objective(&k, y, &alpha);
        if best.as_ref().is_none_or(|(bo, _)| obj > *bo) {
            best = Some((obj, alpha));
        }
    }
    let (_, alpha) = best.expect("the all-zero point is always feasible");
    Ok(finish(&k, &s, alpha, c, 1e-8))
}

impl SvmModel {
    pub fn n_train(&self) -> usize {
        self.alphas.len()
    }

    pub fn n_support(&self) -> usize {
        self.support_indices.len()
    }

    pub fn decision(&self, k_row: &[f64]) -> Result<f64, SvmError> {
        if k_row.len() != self.n_train() {
            return Err(SvmError::LengthMismatch {
                expected: self.n_train(),
                got: k_row.len(),
            });
        }
        Ok(self
            .alphas
            .iter()
            .zip(&self.labels)
            .zip(k_row)
            .map(|((a, &y), k)| a * f64::from(y) * k)
            .sum::<f64>()
            + self.bias)
    }

    /// Label 1 when the score is positive or exactly zero.
    pub fn predict(&self, k_row: &[f64]) -> Result<(u8, f64), SvmError> {
        let score = self.decision(k_row)?;
        Ok((u8::from(score >= 0.0), score))
    }

    /// Predicted labels for every row of a kernel matrix against the
    /// training set.
    pub fn predict_rows(&self, k: &GramMatrix) -> Result<Vec<u8>, SvmError> {
        (0..k.rows)
            .map(|i| self.predict(k.row(i)).map(|(l, _)| l))
            .collect()
    }

    pub fn accuracy(&self, k: &GramMatrix, labels: &[u8]) -> Result<f64, SvmError> {
        if labels.len() != k.rows {
            return Err(SvmError::LengthMismatch {
                expected: k.rows,
                got: labels.len(),
            });
        }
        let preds = self.predict_rows(k)?;
        let right = preds.iter().zip(labels).filter(|(p, y)| p == y).count();
        Ok(right as f64 / labels.len().max(1) as f64)
    }

    /// Largest violation of the box and equality constraints.
    pub fn feasibility_error(&self) -> f64 {
        let boxed = self
            .alphas
            .iter()
            .map(|&a| (-a).max(a - self.c).max(0.0))
            .fold(0.0, f64::max);
        let eq: f64 = self
            .alphas
            .iter()
            .zip(&self.labels)
            .map(|(a, &y)| a * f64::from(y))
            .sum();
        boxed.max(eq.abs())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# svm C={} tol={} n={} bias={}\n",
            self.c,
            self.tol,
            self.n_train(),
            self.bias
        );
        for (i, (a, y)) in self.alphas.iter().zip(&self.labels).enumerate() {
            let _ = writeln!(out, "{i}\t{a}\t{y}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, SvmError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let perr = |line: usize, msg: String| SvmError::Parse {
            line: line + 1,
            msg,
        };
        let (hline, header) = lines
            .next()
            .ok_or_else(|| perr(0, "empty model file".into()))?;
        let rest = header
            .trim()
            .strip_prefix("# svm")
            .ok_or_else(|| perr(hline, "expected `# svm` header".into()))?;
        let field = |key: &str| -> Result<f64, SvmError> {
            let raw = rest
                .split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                .ok_or_else(|| perr(hline, format!("header lacks {key}")))?;
            raw.parse()
                .map_err(|_| perr(hline, format!("{key}: `{raw}` is not a number")))
        };
        let (c, tol, n, bias) = (field("C")?, field("tol")?, field("n")?, field("bias")?);
        let mut alphas = Vec::new();
        let mut labels = Vec::new();
        for (ln, line) in lines {
            let cols: Vec<&str> = line.trim().split('\t').collect();
            let [idx, a, y] = cols[..] else {
                return Err(perr(
                    ln,
                    format!("expected 3 tab-separated fields, got {}", cols.len()),
                ));
            };
            if idx.parse::<usize>().ok() != Some(alphas.len()) {
                return Err(perr(
                    ln,
                    format!("expected index {}, got `{idx}`", alphas.len()),
                ));
            }
            alphas.push(
                a.parse::<f64>()
                    .map_err(|_| perr(ln, format!("alpha `{a}` is not a number")))?,
            );
            labels.push(match y {
                "1" => 1i8,
                "-1" => -1,
                other => return Err(perr(ln, format!("label must be -1 or 1, got `{other}`"))),
            });
        }
        if alphas.len() as f64 != n {
            return Err(perr(
                hline,
                format!("header says n={n}, file has {} rows", alphas.len()),
            ));
        }
        Ok(SvmModel {
            support_indices: (0..alphas.len()).filter(|&i| alphas[i] > tol).collect(),
            alphas,
            bias,
            labels,
            c,
            tol,
        })
    }

    pub fn load(path: &Path) -> Result<Self, SvmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SvmError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}
