// SPDX-License-Identifier: Apache-2.0

//! Nodal analysis `G v = i` with pad nodes eliminated as fixed voltages.
//!
//! Two independent routes solve the reduced system: a sparse Cholesky
//! factorisation and Jacobi-preconditioned conjugate gradients.
//! Assembly and both solvers accumulate in a fixed order, so repeated solves
//! are bit-identical.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::str::FromStr;

use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::na::DMatrix;
use nalgebra_sparse::CscMatrix;

use crate::error::{Error, Result};

use super::network::ResistiveNetwork;

pub const DEFAULT_CG_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SolveMethod {
    #[default]
    Direct,
    ConjugateGradient,
}

impl FromStr for SolveMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(SolveMethod::Direct),
            "cg" => Ok(SolveMethod::ConjugateGradient),
            other => Err(format!("unknown IR method `{other}` (expected cg or direct)")),
        }
    }
}

/// Node voltages in mV. `None` marks floating nodes with no path to a pad;
/// they carry no current and have no defined potential.
#[derive(Clone, Debug, PartialEq)]
pub struct DcSolution {
    pub voltages: Vec<Option<f64>>,
    pub iterations: usize,
}

/// Symmetric matrix in CSR form with both triangles stored.
#[derive(Clone, Debug)]
pub(crate) struct SymCsr {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl SymCsr {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.into_iter().peekable();
            while let Some((c, mut v)) = iter.next() {
                while let Some(&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                col.push(c);
                val.push(v);
            }
            row_ptr.push(col.len());
        }
        Self { n, row_ptr, col, val }
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col[lo..hi].iter().copied().zip(self.val[lo..hi].iter().copied())
    }

    fn mul(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).find(|&(c, _)| c == i).map_or(0.0, |(_, v)| v))
            .collect()
    }
}

/// Reduced system: unknown numbering plus matrix and right-hand side.
struct Reduced {
    unknown_of: Vec<Option<usize>>,
    matrix: SymCsr,
    rhs: Vec<f64>,
}

/// The unknowns are drops below the common pad voltage, so the right-hand
/// side is just the sink currents and stays well scaled however small the
/// drops are next to the supply.
fn assemble(net: &ResistiveNetwork) -> Result<Reduced> {
    let nodes = net.node_count();
    let reached = net.pad_reachable();
    let mut is_pad = vec![false; nodes];
    for &p in &net.pad_nodes {
        is_pad[p] = true;
    }
    if let Some(node) = (0..nodes).find(|&i| !reached[i] && net.sink_currents[i] != 0.0) {
        return Err(Error::SingularSystem(format!("node {node} draws current but reaches no pad")));
    }
    let mut unknown_of = vec![None; nodes];
    let mut count = 0;
    for node in 0..nodes {
        if reached[node] && !is_pad[node] {
            unknown_of[node] = Some(count);
            count += 1;
        }
    }

    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); count];
    let mut rhs = vec![0.0; count];
    for (u, &i) in unknown_of.iter().zip(&net.sink_currents) {
        if let Some(u) = *u {
            rhs[u] = i;
        }
    }
    for e in &net.edges {
        if !reached[e.a] {
            continue;
        }
        let g = e.conductance;
        match (unknown_of[e.a], unknown_of[e.b]) {
            (Some(a), Some(b)) => {
                rows[a].push((a, g));
                rows[b].push((b, g));
                rows[a].push((b, -g));
                rows[b].push((a, -g));
            }
            (Some(a), None) => rows[a].push((a, g)),
            (None, Some(b)) => rows[b].push((b, g)),
            (None, None) => {}
        }
    }
    Ok(Reduced {
        unknown_of,
        matrix: SymCsr::from_rows(rows),
        rhs,
    })
}

/// Solves the mesh. `tol` is the relative residual target for conjugate
/// gradients and is ignored by the direct route.
pub fn solve_dc(net: &ResistiveNetwork, tol: f64, method: SolveMethod) -> Result<DcSolution> {
    let reduced = assemble(net)?;
    let (x, iterations) = match method {
        SolveMethod::Direct => (cholesky_solve(&reduced.matrix, &reduced.rhs)?, 0),
        SolveMethod::ConjugateGradient => conjugate_gradient(&reduced.matrix, &reduced.rhs, tol)?,
    };
    let mut is_pad = vec![false; net.node_count()];
    for &p in &net.pad_nodes {
        is_pad[p] = true;
    }
    let voltages = (0..net.node_count())
        .map(|node| match reduced.unknown_of[node] {
            Some(u) => Some(net.pad_voltage_mv - x[u]),
            None if is_pad[node] => Some(net.pad_voltage_mv),
            None => None,
        })
        .collect();
    Ok(DcSolution { voltages, iterations })
}

/// Sparse Cholesky solve. `a` is symmetric, so its CSR arrays are also its
/// CSC arrays.
fn cholesky_solve(a: &SymCsr, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.n;
    if n == 0 {
        return Ok(Vec::new());
    }
    let csc = CscMatrix::try_from_csc_data(n, n, a.row_ptr.clone(), a.col.clone(), a.val.clone())
        .map_err(|e| Error::SingularSystem(e.to_string()))?;
    let factor = CscCholesky::factor(&csc).map_err(|e| Error::SingularSystem(e.to_string()))?;
    Ok(factor.solve(&DMatrix::from_column_slice(n, 1, b)).as_slice().to_vec())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned CG, stopping at `||r|| <= tol * ||b||` or after
/// `10 * n` iterations.
pub(crate) fn conjugate_gradient(a: &SymCsr, b: &[f64], tol: f64) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok((x, 0));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let max_iter = 10 * n.max(1);
    let mut residual = 1.0;
    for iter in 1..=max_iter {
        a.mul(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SingularSystem("conjugate gradients met a non-positive curvature".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        residual = dot(&r, &r).sqrt() / b_norm;
        if residual <= tol {
            return Ok((x, iter));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}
