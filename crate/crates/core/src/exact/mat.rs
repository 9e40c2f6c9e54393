//! Dense exact matrices over Q and Z.
//!
//! Everything here is deterministic: reduced row echelon form is unique for
//! a given row space, so bases derived from it are canonical. The lattice
//! routines (Hermite, Smith, saturated kernels, quotient projections) feed
//! fan quotients and ample-model constructions and must agree bit-for-bit
//! across different call sites computing the same subspace.

use crate::num::{Int, Rat};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::ops::{Index, IndexMut};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Rat>,
}

impl Index<(usize, usize)> for QMat {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for QMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }
}

impl QMat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        QMat {
            rows,
            cols,
            data: vec![Rat::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged matrix");
        QMat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_int_rows(rows: &[Vec<Int>]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|x| Rat::from_integer(x.clone())).collect())
                .collect(),
        )
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<Rat> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> QMat {
        let mut t = QMat::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mat_mul(&self, other: &QMat) -> QMat {
        assert_eq!(self.cols, other.rows);
        let mut m = QMat::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let add = &self[(i, k)] * &other[(k, j)];
                    m[(i, j)] += add;
                }
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .fold(Rat::zero(), |acc, x| acc + x)
            })
            .collect()
    }

    /// In-place Gauss-Jordan to reduced row echelon form; returns pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self[(i, c)].is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = self[(r, c)].clone();
            for j in c..self.cols {
                let v = &self[(r, j)] / &inv;
                self[(r, j)] = v;
            }
            for i in 0..self.rows {
                if i != r && !self[(i, c)].is_zero() {
                    let f = self[(i, c)].clone();
                    for j in c..self.cols {
                        let v = &self[(i, j)] - &f * &self[(r, j)];
                        self[(i, j)] = v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Canonical kernel basis read off the RREF free columns. Depends only
    /// on the row space, so any matrix with the same rows-span yields the
    /// identical basis.
    pub fn kernel_basis(&self) -> Vec<Vec<Rat>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let pivot_of_col: Vec<Option<usize>> = {
            let mut v = vec![None; self.cols];
            for (r, &c) in pivots.iter().enumerate() {
                v[c] = Some(r);
            }
            v
        };
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_of_col[free].is_some() {
                continue;
            }
            let mut vec = vec![Rat::zero(); self.cols];
            vec[free] = Rat::one();
            for (c, p) in pivot_of_col.iter().enumerate() {
                if let Some(r) = p {
                    vec[c] = -m[(*r, free)].clone();
                }
            }
            basis.push(vec);
        }
        basis
    }

    /// Exact solution of `self * x = b` plus the kernel basis, or None when
    /// the system is inconsistent.
    pub fn solve(&self, b: &[Rat]) -> Option<(Vec<Rat>, Vec<Vec<Rat>>)> {
        assert_eq!(self.rows, b.len());
        let mut aug = QMat::zero(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.cols)] = b[i].clone();
        }
        let pivots = aug.rref();
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![Rat::zero(); self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = aug[(r, self.cols)].clone();
        }
        Some((x, self.kernel_basis()))
    }

    pub fn inverse(&self) -> Option<QMat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = QMat::zero(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = Rat::one();
        }
        let pivots = aug.rref();
        if pivots.len() != n || pivots.iter().enumerate().any(|(i, &c)| i != c) {
            return None;
        }
        let mut inv = QMat::zero(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = aug[(i, n + j)].clone();
            }
        }
        Some(inv)
    }
}

/// Canonical basis of the span of the given vectors: nonzero RREF rows.
pub fn canonical_span_basis(vectors: &[Vec<Rat>], dim: usize) -> Vec<Vec<Rat>> {
    if vectors.is_empty() {
        return Vec::new();
    }
    assert!(vectors.iter().all(|v| v.len() == dim));
    let mut m = QMat::from_rows(vectors.to_vec());
    let pivots = m.rref();
    (0..pivots.len()).map(|i| m.row(i).to_vec()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Int>,
}

impl Index<(usize, usize)> for ZMat {
    type Output = Int;
    fn index(&self, (i, j): (usize, usize)) -> &Int {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ZMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Int {
        &mut self.data[i * self.cols + j]
    }
}

impl ZMat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        ZMat {
            rows,
            cols,
            data: vec![Int::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m[(i, i)] = Int::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Int>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged matrix");
        ZMat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn row(&self, i: usize) -> &[Int] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Int>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> ZMat {
        let mut t = ZMat::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mat_mul(&self, other: &ZMat) -> ZMat {
        assert_eq!(self.cols, other.rows);
        let mut m = ZMat::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let add = &self[(i, k)] * &other[(k, j)];
                    m[(i, j)] += add;
                }
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[Int]) -> Vec<Int> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .fold(Int::zero(), |acc, x| acc + x)
            })
            .collect()
    }

    pub fn to_qmat(&self) -> QMat {
        QMat::from_int_rows(&self.to_rows())
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row_i -= q * row_p
    fn row_sub(&mut self, i: usize, p: usize, q: &Int) {
        if q.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let d = &self[(p, j)] * q;
            self[(i, j)] -= d;
        }
    }

    fn col_sub(&mut self, j: usize, p: usize, q: &Int) {
        if q.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let d = &self[(i, p)] * q;
            self[(i, j)] -= d;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -self[(i, j)].clone();
            self[(i, j)] = v;
        }
    }

    fn negate_col(&mut self, j: usize) {
        for i in 0..self.rows {
            let v = -self[(i, j)].clone();
            self[(i, j)] = v;
        }
    }

    pub fn det(&self) -> Int {
        assert_eq!(self.rows, self.cols);
        // Fraction-free via the rational path; matrices here are tiny.
        let mut m = self.to_qmat();
        let mut det = Rat::one();
        let n = self.rows;
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m[(i, c)].is_zero()) else {
                return Int::zero();
            };
            if p != c {
                m.swap_rows(c, p);
                det = -det;
            }
            det *= m[(c, c)].clone();
            let inv = m[(c, c)].clone();
            for i in (c + 1)..n {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let f = &m[(i, c)] / &inv;
                for j in c..n {
                    let v = &m[(i, j)] - &f * &m[(c, j)];
                    m[(i, j)] = v;
                }
            }
        }
        assert!(det.denom().is_one());
        det.numer().clone()
    }
}

/// Row Hermite normal form: returns (H, U) with U unimodular and U*A = H.
/// Pivots are positive and entries above each pivot are reduced into [0, pivot).
pub fn hermite_normal_form(a: &ZMat) -> (ZMat, ZMat) {
    let mut h = a.clone();
    let mut u = ZMat::identity(a.rows);
    let mut r = 0;
    for c in 0..h.cols {
        if r == h.rows {
            break;
        }
        loop {
            let mut nonzero: Vec<usize> = (r..h.rows).filter(|&i| !h[(i, c)].is_zero()).collect();
            if nonzero.is_empty() {
                break;
            }
            nonzero.sort_by_key(|&i| h[(i, c)].abs());
            let p = nonzero[0];
            h.swap_rows(r, p);
            u.swap_rows(r, p);
            if nonzero.len() == 1 {
                break;
            }
            for i in (r + 1)..h.rows {
                if h[(i, c)].is_zero() {
                    continue;
                }
                let q = h[(i, c)].div_floor(&h[(r, c)]);
                h.row_sub(i, r, &q);
                u.row_sub(i, r, &q);
            }
        }
        if h[(r, c)].is_zero() {
            continue;
        }
        if h[(r, c)].is_negative() {
            h.negate_row(r);
            u.negate_row(r);
        }
        for i in 0..r {
            let q = h[(i, c)].div_floor(&h[(r, c)]);
            h.row_sub(i, r, &q);
            u.row_sub(i, r, &q);
        }
        r += 1;
    }
    (h, u)
}

/// Smith normal form: returns (D, P, Q) with P*A*Q = D diagonal, the diagonal
/// entries nonnegative with each dividing the next, and P, Q unimodular.
pub fn smith_normal_form(a: &ZMat) -> (ZMat, ZMat, ZMat) {
    let mut d = a.clone();
    let mut p = ZMat::identity(a.rows);
    let mut q = ZMat::identity(a.cols);
    let n = a.rows.min(a.cols);
    let mut t = 0;
    while t < n {
        // Find a pivot of minimal absolute value in the trailing block.
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..d.rows {
            for j in t..d.cols {
                if d[(i, j)].is_zero() {
                    continue;
                }
                match pivot {
                    None => pivot = Some((i, j)),
                    Some((pi, pj)) => {
                        if d[(i, j)].abs() < d[(pi, pj)].abs() {
                            pivot = Some((i, j));
                        }
                    }
                }
            }
        }
        let Some((pi, pj)) = pivot else {
            break;
        };
        d.swap_rows(t, pi);
        p.swap_rows(t, pi);
        d.swap_cols(t, pj);
        q.swap_cols(t, pj);

        let mut clean = true;
        for i in (t + 1)..d.rows {
            if d[(i, t)].is_zero() {
                continue;
            }
            let qq = d[(i, t)].div_floor(&d[(t, t)]);
            d.row_sub(i, t, &qq);
            p.row_sub(i, t, &qq);
            if !d[(i, t)].is_zero() {
                clean = false;
            }
        }
        for j in (t + 1)..d.cols {
            if d[(t, j)].is_zero() {
                continue;
            }
            let qq = d[(t, j)].div_floor(&d[(t, t)]);
            d.col_sub(j, t, &qq);
            q.col_sub(j, t, &qq);
            if !d[(t, j)].is_zero() {
                clean = false;
            }
        }
        if !clean {
            continue;
        }
        // Enforce the divisibility chain before moving on.
        let mut fixed = true;
        'outer: for i in (t + 1)..d.rows {
            for j in (t + 1)..d.cols {
                if !(&d[(i, j)] % &d[(t, t)]).is_zero() {
                    let minus_one = -Int::one();
                    d.row_sub(t, i, &minus_one);
                    p.row_sub(t, i, &minus_one);
                    fixed = false;
                    break 'outer;
                }
            }
        }
        if !fixed {
            continue;
        }
        if d[(t, t)].is_negative() {
            d.negate_row(t);
            p.negate_row(t);
        }
        t += 1;
    }
    for j in t..n {
        if d[(j, j)].is_negative() {
            d.negate_col(j);
            q.negate_col(j);
        }
    }
    (d, p, q)
}

/// Nonzero diagonal entries of the Smith form.
pub fn elementary_divisors(a: &ZMat) -> Vec<Int> {
    let (d, _, _) = smith_normal_form(a);
    let n = a.rows.min(a.cols);
    (0..n)
        .map(|i| d[(i, i)].clone())
        .filter(|x| !x.is_zero())
        .collect()
}

/// Saturated integer kernel {x in Z^cols : A x = 0}, as the trailing columns
/// of the right Smith transform.
pub fn integer_kernel(a: &ZMat) -> Vec<Vec<Int>> {
    let (d, _, q) = smith_normal_form(a);
    let n = a.rows.min(a.cols);
    let rank = (0..n).filter(|&i| !d[(i, i)].is_zero()).count();
    (rank..a.cols).map(|j| q.col_int(j)).collect()
}

impl ZMat {
    fn col_int(&self, j: usize) -> Vec<Int> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }
}

/// The full lattice change of basis adapted to a subspace: a unimodular
/// P (n x n) whose first k new coordinates cut out the saturation
/// L = span ∩ Z^n, i.e. L = { v : (Pv)_{k+1..n} = 0 }. The bottom n-k rows
/// of P are the quotient projection Z^n -> Z^n/L.
pub struct QuotientTransform {
    pub full: ZMat,
    pub kernel_rank: usize,
}

impl QuotientTransform {
    pub fn projection(&self) -> ZMat {
        let n = self.full.rows;
        let k = self.kernel_rank;
        let mut pi = ZMat::zero(n - k, n);
        for i in k..n {
            for j in 0..n {
                pi[(i - k, j)] = self.full[(i, j)].clone();
            }
        }
        pi
    }
}

/// Change of basis adapted to the saturation of the span of the given
/// vectors. The result depends only on the span: the generators are
/// canonicalized through a RREF basis before the Smith computation, so all
/// call sites computing the same subspace get the same transform.
pub fn quotient_transform(span: &[Vec<Rat>], n: usize) -> QuotientTransform {
    let basis = canonical_span_basis(span, n);
    if basis.is_empty() {
        return QuotientTransform {
            full: ZMat::identity(n),
            kernel_rank: 0,
        };
    }
    let int_rows: Vec<Vec<Int>> = basis
        .iter()
        .map(|v| crate::num::primitive_integer_direction(v).expect("nonzero basis vector"))
        .collect();
    // Saturated lattice L = span ∩ Z^n. Its basis vectors form the columns
    // of G; the left Smith transform of G sends L to the first coordinates.
    let span_mat = QMat::from_int_rows(&int_rows);
    let perp = span_mat.kernel_basis();
    let perp_int: Vec<Vec<Int>> = perp
        .iter()
        .map(|v| crate::num::primitive_integer_direction(v).expect("nonzero basis vector"))
        .collect();
    let lattice_basis = if perp_int.is_empty() {
        (0..n)
            .map(|i| {
                let mut e = vec![Int::zero(); n];
                e[i] = Int::one();
                e
            })
            .collect::<Vec<_>>()
    } else {
        integer_kernel(&ZMat::from_rows(perp_int))
    };
    let k = lattice_basis.len();
    let mut g = ZMat::zero(n, k);
    for (j, b) in lattice_basis.iter().enumerate() {
        for i in 0..n {
            g[(i, j)] = b[i].clone();
        }
    }
    let (d, p, _) = smith_normal_form(&g);
    for i in 0..k {
        debug_assert!(d[(i, i)].abs().is_one(), "kernel lattice not saturated");
    }
    QuotientTransform {
        full: p,
        kernel_rank: k,
    }
}

/// Projection matrix pi: Z^n -> Z^(n-k) whose kernel is the saturation of
/// the span of the given vectors.
pub fn quotient_projection(span: &[Vec<Rat>], n: usize) -> ZMat {
    quotient_transform(span, n).projection()
}
