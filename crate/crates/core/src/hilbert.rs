//! Truncated Fock space of the probe photon and the two collective atomic
//! excitations, with operators stored as sparse complex matrices.
//!
//! The basis keeps every occupation triple whose total excitation is at most
//! `n_max_total`. The interaction Hamiltonian conserves the total excitation
//! number, so dynamics started inside the cutoff never feels it; operator
//! identities such as `[a, a†] = 1` only fail on the top shell, which is why
//! the commutator checks below restrict to an interior set of states.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::C64;

/// One of the three bosonic modes of the bosonized model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Probe photon `a`.
    Photon,
    /// Collective excitation `A` into the excited level |a⟩.
    Excited,
    /// Collective excitation `C` into the metastable level |c⟩.
    Storage,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Photon, Mode::Excited, Mode::Storage];
}

/// Occupation numbers `(n_a, n_A, n_C)`. Ordering is lexicographic in that
/// order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Occupation {
    pub photon: usize,
    pub excited: usize,
    pub storage: usize,
}

impl Occupation {
    pub const VACUUM: Occupation = Occupation::new(0, 0, 0);

    pub const fn new(photon: usize, excited: usize, storage: usize) -> Self {
        Self { photon, excited, storage }
    }

    pub fn total(&self) -> usize {
        self.photon + self.excited + self.storage
    }

    pub fn get(&self, mode: Mode) -> usize {
        match mode {
            Mode::Photon => self.photon,
            Mode::Excited => self.excited,
            Mode::Storage => self.storage,
        }
    }

    fn with(mut self, mode: Mode, n: usize) -> Self {
        match mode {
            Mode::Photon => self.photon = n,
            Mode::Excited => self.excited = n,
            Mode::Storage => self.storage = n,
        }
        self
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.photon, self.excited, self.storage)
    }
}

/// Fock basis truncated on total excitation number.
#[derive(Clone, Debug)]
pub struct BosonBasis {
    n_max_total: usize,
    states: Vec<Occupation>,
    index: HashMap<Occupation, usize>,
}

/// Builds the basis of all triples with `n_a + n_A + n_C <= n_max_total`,
/// ordered lexicographically.
pub fn build_basis(n_max_total: usize) -> BosonBasis {
    let mut states = Vec::with_capacity(basis_dimension(n_max_total));
    for photon in 0..=n_max_total {
        for excited in 0..=(n_max_total - photon) {
            for storage in 0..=(n_max_total - photon - excited) {
                states.push(Occupation::new(photon, excited, storage));
            }
        }
    }
    let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    BosonBasis { n_max_total, states, index }
}

/// `(n+1)(n+2)(n+3)/6`, the number of triples with total at most `n`.
pub fn basis_dimension(n_max_total: usize) -> usize {
    (n_max_total + 1) * (n_max_total + 2) * (n_max_total + 3) / 6
}

impl BosonBasis {
    pub fn n_max_total(&self) -> usize {
        self.n_max_total
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Occupation] {
        &self.states
    }

    pub fn state(&self, i: usize) -> Occupation {
        self.states[i]
    }

    pub fn index_of(&self, occ: Occupation) -> Option<usize> {
        self.index.get(&occ).copied()
    }

    /// Basis vector for an occupation triple; `None` outside the truncation.
    pub fn ket(&self, occ: Occupation) -> Option<DVector<C64>> {
        let i = self.index_of(occ)?;
        let mut v = DVector::zeros(self.dim());
        v[i] = C64::new(1.0, 0.0);
        Some(v)
    }

    pub fn vacuum(&self) -> DVector<C64> {
        self.ket(Occupation::VACUUM).expect("vacuum is always in the basis")
    }

    /// Indices grouped by total excitation number, `sectors()[k]` holding the
    /// states with total `k`.
    pub fn sectors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_max_total + 1];
        for (i, s) in self.states.iter().enumerate() {
            out[s.total()].push(i);
        }
        out
    }

    /// Indices of states with total excitation at most `max_total`.
    pub fn interior(&self, max_total: usize) -> Vec<usize> {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, s)| s.total() <= max_total)
            .map(|(i, _)| i)
            .collect()
    }

    /// The conservative interior `total <= n_max_total - 2` used for operator
    /// identity checks (empty when the truncation is below 2).
    pub fn check_interior(&self) -> Vec<usize> {
        match self.n_max_total.checked_sub(2) {
            Some(k) => self.interior(k),
            None => Vec::new(),
        }
    }
}

/// Square sparse complex matrix in compressed-row form.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, row_ptr: vec![0; dim + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, C64::new(1.0, 0.0))))
    }

    /// Duplicate entries are summed; entries that sum to exactly zero are
    /// dropped.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r},{c}) outside dimension {dim}");
            rows[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|(c, _)| *c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = C64::new(0.0, 0.0);
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                if v != C64::new(0.0, 0.0) {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { dim, row_ptr, cols, vals }
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let dim = m.nrows();
        Self::from_triplets(
            dim,
            (0..dim).flat_map(|r| (0..dim).map(move |c| (r, c))).map(|(r, c)| (r, c, m[(r, c)])),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.iter().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_triplets(self.dim, self.iter().map(|(r, c, v)| (r, c, v * s)))
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        assert_eq!(v.len(), self.dim);
        let mut out = DVector::zeros(self.dim);
        for r in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * v[self.cols[k]];
            }
            out[r] = acc;
        }
        out
    }

    /// Sparse product `self * rhs`.
    pub fn matmul(&self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim);
        let mut acc = vec![C64::new(0.0, 0.0); self.dim];
        let mut touched = vec![false; self.dim];
        let mut trips = Vec::new();
        for r in 0..self.dim {
            let mut used = Vec::new();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let (mid, a) = (self.cols[k], self.vals[k]);
                for j in rhs.row_ptr[mid]..rhs.row_ptr[mid + 1] {
                    let c = rhs.cols[j];
                    if !touched[c] {
                        touched[c] = true;
                        used.push(c);
                    }
                    acc[c] += a * rhs.vals[j];
                }
            }
            for c in used {
                trips.push((r, c, acc[c]));
                acc[c] = C64::new(0.0, 0.0);
                touched[c] = false;
            }
        }
        Operator::from_triplets(self.dim, trips)
    }

    /// `[self, rhs] = self·rhs − rhs·self`.
    pub fn commutator(&self, rhs: &Operator) -> Operator {
        &self.matmul(rhs) - &rhs.matmul(self)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    /// Dense block `self[rows, cols]`.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                m[(i, j)] = self.get(r, c);
            }
        }
        m
    }

    /// Largest entry magnitude within `self[rows, cols]`.
    pub fn max_abs_on(&self, rows: &[usize], cols: &[usize]) -> f64 {
        let mut col_mask = vec![false; self.dim];
        for &c in cols {
            col_mask[c] = true;
        }
        rows.iter()
            .flat_map(|&r| self.row_ptr[r]..self.row_ptr[r + 1])
            .filter(|&k| col_mask[self.cols[k]])
            .map(|k| self.vals[k].norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self - &self.adjoint()).max_abs() <= tol
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim);
        Operator::from_triplets(self.dim, self.iter().chain(rhs.iter()))
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim);
        Operator::from_triplets(self.dim, self.iter().chain(rhs.iter().map(|(r, c, v)| (r, c, -v))))
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul<&Operator> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs)
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(C64::new(rhs, 0.0))
    }
}

/// Annihilation operator of `mode`: `√n` on each occupation step down.
pub fn mode_operator(basis: &BosonBasis, mode: Mode) -> Operator {
    let trips = basis.states().iter().enumerate().filter_map(|(col, occ)| {
        let n = occ.get(mode);
        if n == 0 {
            return None;
        }
        let row = basis.index_of(occ.with(mode, n - 1))?;
        Some((row, col, C64::new((n as f64).sqrt(), 0.0)))
    });
    Operator::from_triplets(basis.dim(), trips.collect::<Vec<_>>())
}

/// Diagonal number operator of `mode`.
pub fn number_operator(basis: &BosonBasis, mode: Mode) -> Operator {
    diagonal(basis, |occ| occ.get(mode) as f64)
}

/// `N_tot = N_a + N_A + N_C`.
pub fn total_number(basis: &BosonBasis) -> Operator {
    diagonal(basis, |occ| occ.total() as f64)
}

fn diagonal(basis: &BosonBasis, f: impl Fn(&Occupation) -> f64) -> Operator {
    Operator::from_triplets(
        basis.dim(),
        basis.states().iter().enumerate().map(|(i, o)| (i, i, C64::new(f(o), 0.0))).collect::<Vec<_>>(),
    )
}

/// Bosonized SU(2) generators acting between the two atomic modes.
#[derive(Clone, Debug)]
pub struct Su2 {
    /// `S_+ = A†C`, moving an excitation from |c⟩ to |a⟩.
    pub plus: Operator,
    /// `S_− = C†A`.
    pub minus: Operator,
    /// `S_3 = (N_A − N_C)/2`.
    pub s3: Operator,
}

pub fn su2_generators(basis: &BosonBasis) -> Su2 {
    let a_exc = mode_operator(basis, Mode::Excited);
    let c = mode_operator(basis, Mode::Storage);
    let plus = a_exc.adjoint().matmul(&c);
    let minus = plus.adjoint();
    let s3 = diagonal(basis, |o| (o.excited as f64 - o.storage as f64) / 2.0);
    Su2 { plus, minus, s3 }
}
