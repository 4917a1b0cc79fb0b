//! Exact sparse linear algebra over the integers and rationals.
//!
//! Systems are built from rational rows, cleared to integer rows with content
//! gcd stripped, and eliminated fraction-free (cross multiplication followed
//! by another content strip). Pivot columns are chosen left to right so the
//! pivot/free split agrees with the reduced row echelon form of the same
//! matrix; the pivot *row* for each column is the sparsest candidate. The
//! nullspace basis is the canonical one: each free column contributes the
//! vector with 1 there, 0 at other free columns, and back-substituted values
//! at pivot columns.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

type SparseRow = Vec<(usize, BigInt)>;

/// A homogeneous system `A v = 0` under construction.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    ncols: usize,
    rows: Vec<SparseRow>,
}

impl SparseSystem {
    pub fn new(ncols: usize) -> Self {
        SparseSystem { ncols, rows: Vec::new() }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    /// Adds a row given as rational coefficients; repeated columns are
    /// summed, denominators cleared, the content gcd stripped. Zero rows are
    /// dropped.
    pub fn push_rational_row<I: IntoIterator<Item = (usize, Rational)>>(&mut self, entries: I) {
        let mut collected: Vec<(usize, Rational)> =
            entries.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        if collected.is_empty() {
            return;
        }
        collected.sort_by_key(|(c, _)| *c);
        let mut merged: Vec<(usize, Rational)> = Vec::with_capacity(collected.len());
        for (col, c) in collected {
            debug_assert!(col < self.ncols);
            match merged.last_mut() {
                Some((last, acc)) if *last == col => *acc += c,
                _ => merged.push((col, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        if merged.is_empty() {
            return;
        }
        let mut lcm = BigInt::one();
        for (_, c) in &merged {
            lcm = lcm.lcm(c.denom());
        }
        let row: SparseRow = merged
            .into_iter()
            .map(|(col, c)| (col, c.numer() * (&lcm / c.denom())))
            .collect();
        self.rows.push(normalize_row(row));
    }

    /// Adds an integer row directly. Repeated columns are summed; zero rows
    /// are dropped.
    pub fn push_integer_row(&mut self, entries: Vec<(usize, BigInt)>) {
        let mut collected: Vec<(usize, BigInt)> =
            entries.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        collected.sort_by_key(|(c, _)| *c);
        let mut row: SparseRow = Vec::with_capacity(collected.len());
        for (col, c) in collected {
            match row.last_mut() {
                Some((last, acc)) if *last == col => *acc += c,
                _ => row.push((col, c)),
            }
        }
        row.retain(|(_, c)| !c.is_zero());
        if row.is_empty() {
            return;
        }
        self.rows.push(normalize_row(row));
    }

    /// Fraction-free forward elimination. Consumes the system.
    pub fn eliminate(self) -> Echelon {
        let ncols = self.ncols;
        let mut active: Vec<SparseRow> = self.rows;
        let mut pivots: Vec<(usize, SparseRow)> = Vec::new();
        for col in 0..ncols {
            // sparsest row with a leading entry in this column
            let mut best: Option<(usize, usize)> = None;
            for (i, row) in active.iter().enumerate() {
                if row.first().map(|(c, _)| *c) == Some(col) {
                    let len = row.len();
                    if best.map_or(true, |(_, blen)| len < blen) {
                        best = Some((i, len));
                    }
                }
            }
            let Some((idx, _)) = best else { continue };
            let pivot_row = active.swap_remove(idx);
            for row in active.iter_mut() {
                if row.first().map(|(c, _)| *c) == Some(col) {
                    *row = eliminate_entry(row, &pivot_row, col);
                }
            }
            active.retain(|r| !r.is_empty());
            pivots.push((col, pivot_row));
        }
        debug_assert!(active.is_empty());
        Echelon { ncols, pivots }
    }
}

/// Result of forward elimination: one integer row per pivot column, sorted by
/// pivot column. Rows are echelon, not fully reduced.
#[derive(Clone, Debug)]
pub struct Echelon {
    ncols: usize,
    pivots: Vec<(usize, SparseRow)>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn nullity(&self) -> usize {
        self.ncols - self.pivots.len()
    }

    pub fn pivot_columns(&self) -> Vec<usize> {
        self.pivots.iter().map(|(c, _)| *c).collect()
    }

    pub fn free_columns(&self) -> Vec<usize> {
        // pivot columns are produced in increasing order
        let pivot_set = self.pivot_columns();
        (0..self.ncols).filter(|c| pivot_set.binary_search(c).is_err()).collect()
    }

    /// Canonical rational nullspace basis, one vector per free column.
    pub fn nullspace_basis(&self) -> Vec<Vec<Rational>> {
        let zero = Rational::zero();
        self.free_columns()
            .into_iter()
            .map(|f| {
                let mut v = vec![zero.clone(); self.ncols];
                v[f] = Rational::one();
                for (p, row) in self.pivots.iter().rev() {
                    let mut acc = Rational::zero();
                    let mut pivot_val = BigInt::zero();
                    for (c, a) in row {
                        if c == p {
                            pivot_val = a.clone();
                        } else if !v[*c].is_zero() {
                            acc += Rational::from(a.clone()) * &v[*c];
                        }
                    }
                    v[*p] = -acc / Rational::from(pivot_val);
                }
                v
            })
            .collect()
    }
}

/// `pivot[col] * row - row[col] * pivot`, content-stripped. The entry at
/// `col` cancels exactly.
fn eliminate_entry(row: &SparseRow, pivot: &SparseRow, col: usize) -> SparseRow {
    let a = &row.iter().find(|(c, _)| *c == col).unwrap().1;
    let b = &pivot.iter().find(|(c, _)| *c == col).unwrap().1;
    let mut out: SparseRow = Vec::with_capacity(row.len() + pivot.len());
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < pivot.len() {
        let ci = row.get(i).map(|(c, _)| *c);
        let cj = pivot.get(j).map(|(c, _)| *c);
        match (ci, cj) {
            (Some(x), Some(y)) if x == y => {
                let v = b * &row[i].1 - a * &pivot[j].1;
                if !v.is_zero() {
                    out.push((x, v));
                }
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x < y => {
                out.push((x, b * &row[i].1));
                i += 1;
            }
            (Some(_), Some(_)) => {
                out.push((cj.unwrap(), -a * &pivot[j].1));
                j += 1;
            }
            (Some(x), None) => {
                out.push((x, b * &row[i].1));
                i += 1;
            }
            (None, Some(y)) => {
                out.push((y, -a * &pivot[j].1));
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    debug_assert!(out.first().map_or(true, |(c, _)| *c > col));
    normalize_row(out)
}

/// Strips the content gcd and makes the leading entry positive.
fn normalize_row(mut row: SparseRow) -> SparseRow {
    if row.is_empty() {
        return row;
    }
    let mut g = BigInt::zero();
    for (_, c) in &row {
        g = g.gcd(c);
        if g.is_one() {
            break;
        }
    }
    if row[0].1.is_negative() {
        g = -g;
    }
    if !g.is_one() {
        for (_, c) in row.iter_mut() {
            *c = &*c / &g;
        }
    }
    row
}

/// Dense reduced row echelon nullspace over the rationals. Slow and simple;
/// the test suites use it as an independent route against [`SparseSystem`].
/// Solves `rows * x = rhs` exactly by Gauss-Jordan elimination.
///
/// Returns `None` when the system is inconsistent. Free coordinates are set
/// to zero, so the answer is deterministic; when the columns are linearly
/// independent the solution is unique.
pub fn dense_solve(ncols: usize, rows: &[Vec<Rational>], rhs: &[Rational]) -> Option<Vec<Rational>> {
    assert_eq!(rows.len(), rhs.len());
    let mut aug: Vec<Vec<Rational>> = rows
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            assert_eq!(row.len(), ncols);
            row.iter().cloned().chain([b.clone()]).collect()
        })
        .collect();
    let nrows = aug.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..nrows).find(|&i| !aug[i][c].is_zero()) else { continue };
        aug.swap(r, p);
        let inv = aug[r][c].clone();
        for x in aug[r].iter_mut() {
            *x = &*x / &inv;
        }
        for i in 0..nrows {
            if i != r && !aug[i][c].is_zero() {
                let f = aug[i][c].clone();
                for j in 0..=ncols {
                    let delta = &f * &aug[r][j];
                    aug[i][j] -= delta;
                }
            }
        }
        pivots.push((c, r));
        r += 1;
        if r == nrows {
            break;
        }
    }
    // leftover rows are zero in every unknown; a nonzero right side there
    // means no solution exists
    if aug[r..].iter().any(|row| !row[ncols].is_zero()) {
        return None;
    }
    let mut x = vec![Rational::zero(); ncols];
    for (c, row) in pivots {
        x[c] = aug[row][ncols].clone();
    }
    Some(x)
}

pub fn dense_nullspace(ncols: usize, rows: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let mut mat: Vec<Vec<Rational>> = rows.to_vec();
    let nrows = mat.len();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..nrows).find(|&i| !mat[i][c].is_zero()) else { continue };
        mat.swap(r, p);
        let inv = mat[r][c].clone();
        for x in mat[r].iter_mut() {
            *x = &*x / &inv;
        }
        for i in 0..nrows {
            if i != r && !mat[i][c].is_zero() {
                let f = mat[i][c].clone();
                for j in 0..ncols {
                    let delta = &f * &mat[r][j];
                    mat[i][j] -= delta;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == nrows {
            break;
        }
    }
    let mut basis = Vec::new();
    for f in 0..ncols {
        if pivot_cols.contains(&f) {
            continue;
        }
        let mut v = vec![Rational::zero(); ncols];
        v[f] = Rational::one();
        for (row, &p) in pivot_cols.iter().enumerate() {
            v[p] = -mat[row][f].clone();
        }
        basis.push(v);
    }
    basis
}
