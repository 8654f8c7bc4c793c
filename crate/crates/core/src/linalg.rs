//! Minimal sparse linear algebra: CSR storage, mat-vec, and a plain
//! BiCGSTAB solver with breakdown guards for the implicit filtering steps.

use crate::error::{Error, Result};

/// Compressed sparse-row matrix. Columns are strictly increasing within each
/// row and all stored values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrixCSR {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrixCSR {
    /// Builds from raw CSR arrays, validating every structural invariant.
    pub fn new(
        rows: usize,
        cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != rows + 1 {
            return Err(Error::InvalidCsr(format!(
                "row_offsets length {} != rows+1 = {}",
                row_offsets.len(),
                rows + 1
            )));
        }
        if row_offsets[0] != 0 {
            return Err(Error::InvalidCsr("row_offsets must start at 0".into()));
        }
        if row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidCsr("row_offsets must be nondecreasing".into()));
        }
        let nnz = *row_offsets.last().unwrap();
        if col_indices.len() != nnz || values.len() != nnz {
            return Err(Error::InvalidCsr(format!(
                "entry arrays ({}, {}) disagree with row_offsets nnz {}",
                col_indices.len(),
                values.len(),
                nnz
            )));
        }
        for r in 0..rows {
            let cols_r = &col_indices[row_offsets[r]..row_offsets[r + 1]];
            if cols_r.iter().any(|&c| c >= cols) {
                return Err(Error::InvalidCsr(format!("column out of range in row {r}")));
            }
            if cols_r.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidCsr(format!(
                    "columns not strictly increasing in row {r}"
                )));
            }
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds from (row, col, value) triplets; duplicate positions are summed.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::InvalidCsr(format!(
                    "triplet ({r}, {c}) out of bounds for {rows}x{cols}"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }

        let mut row_offsets = vec![0usize; rows + 1];
        for &(r, _, _) in &merged {
            row_offsets[r + 1] += 1;
        }
        for i in 0..rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        let col_indices = merged.iter().map(|e| e.1).collect();
        let values = merged.iter().map(|e| e.2).collect();
        Self::new(rows, cols, row_offsets, col_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        (&self.col_indices[span.clone()], &self.values[span])
    }

    /// Iterates all stored entries as (row, col, value).
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Sum of every column, useful for conservation checks.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for (_, c, v) in self.entries() {
            sums[c] += v;
        }
        sums
    }

    /// `y = A x` without allocating.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            y[r] = acc;
        }
    }
}

/// `y = A x`.
pub fn matvec(a: &SparseMatrixCSR, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "matvec: matrix is {}x{}, vector has {}",
            a.rows(),
            a.cols(),
            x.len()
        )));
    }
    let mut y = vec![0.0; a.rows()];
    a.matvec_into(x, &mut y);
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Breakdown,
}

/// Outcome of an iterative solve. `final_relative_residual` is always the
/// recomputed true residual `‖b - A x‖ / ‖b‖`, not the recursive one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub status: SolveStatus,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `|rho|` or `|omega|` below this is treated as breakdown.
const BREAKDOWN_EPS: f64 = 1e-30;
/// True residual is refreshed every this many iterations to stop the
/// recursive residual drifting away from `b - A x`.
const TRUE_RESIDUAL_PERIOD: usize = 50;

/// Plain BiCGSTAB (no preconditioner) with one restart on rho-breakdown.
///
/// Converged status guarantees the recomputed residual meets `tol`; on
/// breakdown or iteration exhaustion the best iterate found so far is
/// returned together with its true relative residual. Fully deterministic:
/// serial loops, no randomness.
pub fn bicgstab(
    a: &SparseMatrixCSR,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "bicgstab needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if b.len() != n || x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "bicgstab: matrix is {n}x{n}, b has {}, x0 has {}",
            b.len(),
            x0.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::NonPositive {
            value: tol,
            context: "bicgstab tolerance".into(),
        });
    }

    let b_norm = norm(b);
    if b_norm == 0.0 {
        // The exact solution of A x = 0 reachable from any x0 is x = 0.
        return Ok((
            vec![0.0; n],
            SolveReport {
                iterations: 0,
                final_relative_residual: 0.0,
                status: SolveStatus::Converged,
            },
        ));
    }

    let true_rel_residual = |x: &[f64], scratch: &mut Vec<f64>| -> f64 {
        a.matvec_into(x, scratch);
        let mut acc = 0.0;
        for i in 0..n {
            let d = b[i] - scratch[i];
            acc += d * d;
        }
        acc.sqrt() / b_norm
    };

    let mut x = x0.to_vec();
    let mut scratch = vec![0.0; n];
    let mut r = {
        a.matvec_into(&x, &mut scratch);
        (0..n).map(|i| b[i] - scratch[i]).collect::<Vec<f64>>()
    };
    if norm(&r) / b_norm <= tol {
        let rel = norm(&r) / b_norm;
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                final_relative_residual: rel,
                status: SolveStatus::Converged,
            },
        ));
    }

    let mut r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut restarted = false;

    for k in 1..=max_iter {
        let mut rho_new = dot(&r_hat, &r);
        if rho_new.abs() < BREAKDOWN_EPS {
            if restarted {
                let rel = true_rel_residual(&x, &mut scratch);
                return Ok((
                    x,
                    SolveReport {
                        iterations: k,
                        final_relative_residual: rel,
                        status: SolveStatus::Breakdown,
                    },
                ));
            }
            // Restart: rebuild the Krylov space around the current iterate.
            restarted = true;
            a.matvec_into(&x, &mut scratch);
            for i in 0..n {
                r[i] = b[i] - scratch[i];
            }
            r_hat.copy_from_slice(&r);
            rho_new = dot(&r_hat, &r);
            if rho_new.abs() < BREAKDOWN_EPS {
                let rel = true_rel_residual(&x, &mut scratch);
                let status = if rel <= tol {
                    SolveStatus::Converged
                } else {
                    SolveStatus::Breakdown
                };
                return Ok((
                    x,
                    SolveReport {
                        iterations: k,
                        final_relative_residual: rel,
                        status,
                    },
                ));
            }
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|e| *e = 0.0);
            p.iter_mut().for_each(|e| *e = 0.0);
        }

        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        a.matvec_into(&p, &mut v);
        let denom = dot(&r_hat, &v);
        if denom.abs() < BREAKDOWN_EPS {
            let rel = true_rel_residual(&x, &mut scratch);
            return Ok((
                x,
                SolveReport {
                    iterations: k,
                    final_relative_residual: rel,
                    status: SolveStatus::Breakdown,
                },
            ));
        }
        alpha = rho_new / denom;

        // s = r - alpha v, stored in r.
        for i in 0..n {
            r[i] -= alpha * v[i];
        }
        if norm(&r) / b_norm <= tol {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            let rel = true_rel_residual(&x, &mut scratch);
            if rel <= tol {
                return Ok((
                    x,
                    SolveReport {
                        iterations: k,
                        final_relative_residual: rel,
                        status: SolveStatus::Converged,
                    },
                ));
            }
            // Recursive residual lied; refresh and keep iterating.
            a.matvec_into(&x, &mut scratch);
            for i in 0..n {
                r[i] = b[i] - scratch[i];
            }
            rho = rho_new;
            continue;
        }

        let t = {
            a.matvec_into(&r, &mut scratch);
            &scratch
        };
        let tt = dot(t, t);
        omega = if tt == 0.0 { 0.0 } else { dot(t, &r) / tt };
        for i in 0..n {
            x[i] += alpha * p[i] + omega * r[i];
        }
        // r = s - omega t.
        for i in 0..n {
            r[i] -= omega * t[i];
        }

        if norm(&r) / b_norm <= tol {
            let rel = true_rel_residual(&x, &mut scratch);
            if rel <= tol {
                return Ok((
                    x,
                    SolveReport {
                        iterations: k,
                        final_relative_residual: rel,
                        status: SolveStatus::Converged,
                    },
                ));
            }
            a.matvec_into(&x, &mut scratch);
            for i in 0..n {
                r[i] = b[i] - scratch[i];
            }
        } else if k % TRUE_RESIDUAL_PERIOD == 0 {
            a.matvec_into(&x, &mut scratch);
            for i in 0..n {
                r[i] = b[i] - scratch[i];
            }
        }

        if omega.abs() < BREAKDOWN_EPS {
            let rel = true_rel_residual(&x, &mut scratch);
            let status = if rel <= tol {
                SolveStatus::Converged
            } else {
                SolveStatus::Breakdown
            };
            return Ok((
                x,
                SolveReport {
                    iterations: k,
                    final_relative_residual: rel,
                    status,
                },
            ));
        }
        rho = rho_new;
    }

    let rel = true_rel_residual(&x, &mut scratch);
    Ok((
        x,
        SolveReport {
            iterations: max_iter,
            final_relative_residual: rel,
            status: SolveStatus::MaxIter,
        },
    ))
}
