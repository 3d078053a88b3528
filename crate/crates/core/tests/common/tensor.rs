//! Brute-force construction on the full 3^N product space of Λ atoms.
//! Levels are numbered b = 0, a = 1, c = 2.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub const B: usize = 0;
pub const A: usize = 1;
pub const C: usize = 2;

pub fn atom_dim(n_atoms: usize) -> usize {
    3usize.pow(n_atoms as u32)
}

fn levels(n_atoms: usize, index: usize) -> Vec<usize> {
    let mut rest = index;
    (0..n_atoms)
        .map(|_| {
            let l = rest % 3;
            rest /= 3;
            l
        })
        .collect()
}

fn index_of(levels: &[usize]) -> usize {
    levels.iter().rev().fold(0, |acc, &l| acc * 3 + l)
}

/// `Σ_j |μ⟩⟨ν|_j` on the atoms.
pub fn collective_flip(n_atoms: usize, mu: usize, nu: usize) -> DMatrix<f64> {
    let dim = atom_dim(n_atoms);
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let lv = levels(n_atoms, col);
        for j in 0..n_atoms {
            if lv[j] == nu {
                let mut out = lv.clone();
                out[j] = mu;
                m[(index_of(&out), col)] += 1.0;
            }
        }
    }
    m
}

/// Normalized symmetric sum over all product states with the given counts.
pub fn symmetric_state(n_atoms: usize, n_a: usize, n_c: usize) -> DVector<f64> {
    let dim = atom_dim(n_atoms);
    let mut v = DVector::zeros(dim);
    for i in 0..dim {
        let lv = levels(n_atoms, i);
        let count = |l| lv.iter().filter(|&&x| x == l).count();
        if count(A) == n_a && count(C) == n_c {
            v[i] = 1.0;
        }
    }
    let norm = v.norm();
    v / norm
}

/// Number of product states behind a symmetric state.
pub fn symmetric_count(n_atoms: usize, n_a: usize, n_c: usize) -> usize {
    (0..atom_dim(n_atoms))
        .filter(|&i| {
            let lv = levels(n_atoms, i);
            lv.iter().filter(|&&x| x == A).count() == n_a && lv.iter().filter(|&&x| x == C).count() == n_c
        })
        .count()
}

/// Photon annihilator on `0..=cap`.
pub fn photon_lowering(cap: usize) -> DMatrix<f64> {
    DMatrix::from_fn(cap + 1, cap + 1, |r, c| if c == r + 1 { (c as f64).sqrt() } else { 0.0 })
}

/// `photon ⊗ atoms` as a dense matrix, photon index outermost.
pub fn kron(photon: &DMatrix<f64>, atoms: &DMatrix<f64>) -> DMatrix<f64> {
    photon.kronecker(atoms)
}

/// `|n⟩ ⊗ |N_a, N_c⟩_sym` in the product space with photon cutoff `cap`.
pub fn full_state(n_atoms: usize, cap: usize, photon: usize, n_a: usize, n_c: usize) -> DVector<f64> {
    let mut p = DVector::zeros(cap + 1);
    p[photon] = 1.0;
    p.kronecker(&symmetric_state(n_atoms, n_a, n_c))
}

/// `g_n (a A† + a† A) + Ω(e^{iφ} S_+ + h.c.)` on photon ⊗ atoms with
/// `A = Σ σ_ba / √N` and `S_+ = Σ σ_ac`.
pub fn hamiltonian(n_atoms: usize, cap: usize, g_n: f64, omega: f64, phi: f64) -> DMatrix<C64> {
    let id_p = DMatrix::<f64>::identity(cap + 1, cap + 1);
    let id_a = DMatrix::<f64>::identity(atom_dim(n_atoms), atom_dim(n_atoms));
    let lower_a = collective_flip(n_atoms, B, A) / (n_atoms as f64).sqrt();
    let s_plus = collective_flip(n_atoms, A, C);
    let a = kron(&photon_lowering(cap), &id_a);
    let big_a = kron(&id_p, &lower_a);
    let coupling = &a * big_a.transpose();
    let coupling = (&coupling + coupling.transpose()).map(|x| C64::new(g_n * x, 0.0));
    let drive = kron(&id_p, &s_plus).map(|x| C64::from_polar(omega, phi) * x);
    coupling + &drive + drive.adjoint()
}

/// `⟨u_i|M|u_j⟩` for real basis vectors `u`.
pub fn project(m: &DMatrix<f64>, basis: &[DVector<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(basis.len(), basis.len(), |i, j| basis[i].dot(&(m * &basis[j])))
}

pub fn project_complex(m: &DMatrix<C64>, basis: &[DVector<f64>]) -> DMatrix<C64> {
    let cb: Vec<DVector<C64>> = basis.iter().map(|v| v.map(|x| C64::new(x, 0.0))).collect();
    DMatrix::from_fn(basis.len(), basis.len(), |i, j| cb[i].dotc(&(m * &cb[j])))
}
