//! Exact finite-N model in the permutation-symmetric sector.
//!
//! Basis states are `(n_photon, N_a, N_c)` with `N_b = N − N_a − N_c` atoms
//! left in the ground level, each standing for the normalized symmetric sum
//! over atom permutations. Collective flips `Σ_j σ^j_{μν}` (moving one atom
//! from `ν` to `μ`) have the element `√(N_ν (N_μ + 1))` between such states.

use std::collections::HashMap;

use nalgebra::DVector;

use crate::hilbert::{BosonBasis, Mode, Occupation, Operator};
use crate::linalg::{hermitian_eigen, inner, norm_sqr};
use crate::model::{Model, ModelParams};
use crate::{Error, Result, C64};

/// Symmetric-sector basis of `n_atoms` Λ atoms plus the photon mode,
/// truncated on `n_photon + N_a + N_c ≤ n_max_total`.
#[derive(Clone, Debug)]
pub struct DickeBasis {
    n_atoms: usize,
    n_max_total: usize,
    states: Vec<Occupation>,
    index: HashMap<Occupation, usize>,
}

impl DickeBasis {
    pub fn new(n_atoms: usize, n_max_total: usize) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::InvalidParameter("need at least one atom".into()));
        }
        let mut states = Vec::new();
        for photon in 0..=n_max_total {
            for excited in 0..=(n_max_total - photon).min(n_atoms) {
                for storage in 0..=(n_max_total - photon - excited).min(n_atoms - excited) {
                    states.push(Occupation::new(photon, excited, storage));
                }
            }
        }
        let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Ok(Self { n_atoms, n_max_total, states, index })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn n_max_total(&self) -> usize {
        self.n_max_total
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Occupation] {
        &self.states
    }

    pub fn index_of(&self, occ: Occupation) -> Option<usize> {
        self.index.get(&occ).copied()
    }

    /// Atoms left in `|b⟩`.
    pub fn ground_count(&self, occ: Occupation) -> usize {
        self.n_atoms - occ.excited - occ.storage
    }

    /// Number of product states in the symmetric sum, `N! / (N_a! N_b! N_c!)`.
    pub fn multiplicity(&self, occ: Occupation) -> f64 {
        let ln_fact = |k: usize| (1..=k).map(|j| (j as f64).ln()).sum::<f64>();
        (ln_fact(self.n_atoms) - ln_fact(occ.excited) - ln_fact(occ.storage) - ln_fact(self.ground_count(occ)))
            .exp()
            .round()
    }

    pub fn ket(&self, occ: Occupation) -> Option<DVector<C64>> {
        let i = self.index_of(occ)?;
        let mut v = DVector::zeros(self.dim());
        v[i] = C64::new(1.0, 0.0);
        Some(v)
    }

    /// Indices grouped by `n_photon + N_a + N_c`.
    pub fn sectors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_max_total + 1];
        for (i, s) in self.states.iter().enumerate() {
            out[s.total()].push(i);
        }
        out
    }

    /// Maps a bosonized state onto this basis through
    /// `(n_a, n_A, n_C) ↦ (n_photon, N_a, N_c)`. Fails if the source has weight
    /// on occupations this basis cannot hold.
    pub fn embed(&self, source: &BosonBasis, v: &DVector<C64>) -> Result<DVector<C64>> {
        let mut out = DVector::zeros(self.dim());
        for (i, occ) in source.states().iter().enumerate() {
            if v[i] == C64::new(0.0, 0.0) {
                continue;
            }
            let j = self.index_of(*occ).ok_or(Error::ExcitationOutOfRange {
                n: occ.excited + occ.storage,
                n_max_total: self.n_atoms,
            })?;
            out[j] = v[i];
        }
        Ok(out)
    }
}

/// Collective operators on a [`DickeBasis`].
#[derive(Clone, Debug)]
pub struct ExactOperators {
    /// Photon annihilation `a`.
    pub a: Operator,
    /// `A = (1/√N) Σ σ_ba`.
    pub excited: Operator,
    /// `C = (1/√N) Σ σ_bc`.
    pub storage: Operator,
    /// `S_+ = Σ σ_ac`.
    pub s_plus: Operator,
    pub s_minus: Operator,
    /// `S_3 = (N_a − N_c)/2`.
    pub s3: Operator,
}

impl ExactOperators {
    pub fn get(&self, mode: Mode) -> &Operator {
        match mode {
            Mode::Photon => &self.a,
            Mode::Excited => &self.excited,
            Mode::Storage => &self.storage,
        }
    }
}

fn lowering(basis: &DickeBasis, step: impl Fn(Occupation) -> Option<(Occupation, f64)>) -> Operator {
    let trips = basis.states().iter().enumerate().filter_map(|(col, occ)| {
        let (target, amp) = step(*occ)?;
        let row = basis.index_of(target)?;
        Some((row, col, C64::new(amp, 0.0)))
    });
    Operator::from_triplets(basis.dim(), trips.collect::<Vec<_>>())
}

pub fn exact_operators(basis: &DickeBasis) -> ExactOperators {
    let n = basis.n_atoms() as f64;
    let a = lowering(basis, |o| {
        (o.photon > 0).then(|| (Occupation::new(o.photon - 1, o.excited, o.storage), (o.photon as f64).sqrt()))
    });
    let excited = lowering(basis, |o| {
        (o.excited > 0).then(|| {
            let nb = basis.ground_count(o) as f64;
            (Occupation::new(o.photon, o.excited - 1, o.storage), (o.excited as f64 * (nb + 1.0) / n).sqrt())
        })
    });
    let storage = lowering(basis, |o| {
        (o.storage > 0).then(|| {
            let nb = basis.ground_count(o) as f64;
            (Occupation::new(o.photon, o.excited, o.storage - 1), (o.storage as f64 * (nb + 1.0) / n).sqrt())
        })
    });
    let s_plus = lowering(basis, |o| {
        (o.storage > 0).then(|| {
            (Occupation::new(o.photon, o.excited + 1, o.storage - 1), (o.storage as f64 * (o.excited as f64 + 1.0)).sqrt())
        })
    });
    let s_minus = s_plus.adjoint();
    let s3 = Operator::from_triplets(
        basis.dim(),
        basis
            .states()
            .iter()
            .enumerate()
            .map(|(i, o)| (i, i, C64::new((o.excited as f64 - o.storage as f64) / 2.0, 0.0)))
            .collect::<Vec<_>>(),
    );
    ExactOperators { a, excited, storage, s_plus, s_minus, s3 }
}

fn assemble(ops: &ExactOperators, probe: f64, omega: f64, phi: f64) -> Operator {
    // annihilate first so the excitation cap never clips an intermediate state
    let coupling = ops.excited.adjoint().matmul(&ops.a);
    let coupling = &coupling + &coupling.adjoint();
    let drive = ops.s_plus.scale(C64::from_polar(omega, phi));
    &(&coupling * probe) + &(&drive + &drive.adjoint())
}

/// `g_n (a A† + a† A) + Ω (e^{iφ} S_+ + e^{−iφ} S_−)` with the exact operators.
pub fn exact_hamiltonian(params: &ModelParams, omega: f64, phi: f64, basis: &DickeBasis) -> Operator {
    assemble(&exact_operators(basis), params.g_n, omega, phi)
}

/// Zero-energy threshold relative to the unit energy scale used below.
const ZERO_TOL: f64 = 1e-9;
/// Eigenvalues between the zero threshold and this bound make the zero
/// eigenspace ambiguous.
const GAP_TOL: f64 = 1e-5;

/// `1 − ‖P_0 d_n‖²` for the bosonized dark state `d_n(θ, φ)` embedded in the
/// exact N-atom model, with `P_0` the projector onto the exact zero-energy
/// space at excitation `n`.
///
/// Projecting onto the whole zero eigenspace picks the exact zero-energy
/// state of maximal overlap, which is how the exact partner of `d_n` is
/// identified inside the degenerate space.
pub fn bosonization_error(n_atoms: usize, n: usize, theta: f64, phi: f64) -> Result<f64> {
    if n_atoms < n {
        return Err(Error::InvalidParameter(format!("need N_atoms >= n, got N_atoms = {n_atoms}, n = {n}")));
    }
    let basis = DickeBasis::new(n_atoms, n)?;
    let (s, c) = theta.sin_cos();
    // H at unit R = √(g_n² + Ω²): g_n = sinθ, Ω = cosθ
    let h = assemble(&exact_operators(&basis), s, c, phi);

    let boson = Model::new(ModelParams::new(1.0, 1.0, n)?)?;
    let d = boson.dark_states(theta, phi, n)?.pop().expect("n + 1 dark states");
    let d = basis.embed(boson.basis(), &d)?;

    let sector = &basis.sectors()[n];
    let (values, vectors) = hermitian_eigen(&h.block(sector, sector));
    if let Some(e) = values.iter().find(|e| e.abs() >= ZERO_TOL && e.abs() < GAP_TOL) {
        return Err(Error::AmbiguousEigenspace(format!("eigenvalue {e:.3e} too close to zero")));
    }
    let local = DVector::from_iterator(sector.len(), sector.iter().map(|&i| d[i]));
    let captured: f64 = values
        .iter()
        .enumerate()
        .filter(|(_, e)| e.abs() < ZERO_TOL)
        .map(|(j, _)| inner(&vectors.column(j).into_owned(), &local).norm_sqr())
        .sum();
    if captured < 0.5 {
        return Err(Error::AmbiguousEigenspace(format!(
            "best exact zero-energy overlap {captured:.3e} with the bosonized d_{n} is below 0.5"
        )));
    }
    Ok((1.0 - captured / norm_sqr(&local)).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::build_basis;
    use crate::model::mixing_angle;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn basis_counts() {
        // N = 1 caps atomic excitation at 1
        let b = DickeBasis::new(1, 2).unwrap();
        assert!(b.states().iter().all(|o| o.excited + o.storage <= 1));
        assert_eq!(b.dim(), 3 + 2 + 2);
        // large N matches the bosonic count
        assert_eq!(DickeBasis::new(10, 3).unwrap().dim(), build_basis(3).dim());
        let b4 = DickeBasis::new(4, 2).unwrap();
        assert_eq!(b4.multiplicity(Occupation::new(0, 1, 1)), 12.0);
        assert_eq!(b4.multiplicity(Occupation::new(0, 0, 0)), 1.0);
        assert!(DickeBasis::new(0, 2).is_err());
    }

    #[test]
    fn exact_commutators() {
        for n_atoms in [2, 3, 5, 8] {
            let b = DickeBasis::new(n_atoms, 3).unwrap();
            let ops = exact_operators(&b);
            assert!((&ops.excited.commutator(&ops.s_plus) - &ops.storage).max_abs() < 1e-14);
            assert!((&ops.storage.commutator(&ops.s_minus) - &ops.excited).max_abs() < 1e-14);
            assert!((&ops.s3.commutator(&ops.s_plus) - &ops.s_plus).max_abs() < 1e-14);
            assert!((&ops.s3.commutator(&ops.s_minus) + &ops.s_minus).max_abs() < 1e-14);
            let ground = b.ket(Occupation::VACUUM).unwrap();
            let comm = ops.excited.commutator(&ops.excited.adjoint());
            assert!((inner(&ground, &comm.apply(&ground)) - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn storage_commutator_deficit() {
        let b = DickeBasis::new(6, 4).unwrap();
        let ops = exact_operators(&b);
        let comm = ops.storage.commutator(&ops.storage.adjoint());
        // away from the cap, where C† would leave the basis
        for (i, o) in b.states().iter().enumerate() {
            if o.total() < 4 && o.excited + o.storage < 6 {
                let expect = 1.0 - (o.excited as f64 + 2.0 * o.storage as f64) / 6.0;
                assert!((comm.get(i, i).re - expect).abs() < 1e-14, "{o}");
            }
        }
    }

    #[test]
    fn hamiltonian_properties() {
        let p = ModelParams::new(1.3, 0.1, 3).unwrap();
        let b = DickeBasis::new(4, 3).unwrap();
        let h = exact_hamiltonian(&p, 0.8, 0.4, &b);
        assert!(h.is_hermitian(1e-15));
        let vac = b.ket(Occupation::VACUUM).unwrap();
        assert_eq!(norm_sqr(&h.apply(&vac)), 0.0);
        for (i, oi) in b.states().iter().enumerate() {
            for (j, oj) in b.states().iter().enumerate() {
                if oi.total() != oj.total() {
                    assert_eq!(h.get(i, j), C64::new(0.0, 0.0));
                }
            }
        }
        let sector = &b.sectors()[1];
        let (vals, _) = hermitian_eigen(&h.block(sector, sector));
        let r = (1.3f64.powi(2) + 0.64).sqrt();
        assert!((vals[0] + r).abs() < 1e-12 && vals[1].abs() < 1e-12 && (vals[2] - r).abs() < 1e-12);
    }

    #[test]
    fn single_excitation_dark_state_is_exact() {
        let p = ModelParams::new(1.0, 0.1, 1).unwrap();
        let (omega, phi) = (0.6, 1.2);
        let theta = mixing_angle(omega, 1.0);
        for n_atoms in [1, 4, 7] {
            let b = DickeBasis::new(n_atoms, 1).unwrap();
            let h = exact_hamiltonian(&p, omega, phi, &b);
            let d = b.ket(Occupation::new(1, 0, 0)).unwrap() * C64::new(theta.cos(), 0.0)
                - b.ket(Occupation::new(0, 0, 1)).unwrap() * C64::from_polar(theta.sin(), -phi);
            assert!(norm_sqr(&h.apply(&d)).sqrt() < 1e-14);
            assert!(bosonization_error(n_atoms, 1, theta, phi).unwrap() < 1e-12);
        }
    }

    #[test]
    fn bosonization_error_shrinks_with_n() {
        let errs: Vec<f64> = [4, 6, 8, 10].iter().map(|&n| bosonization_error(n, 2, 0.8, 0.3).unwrap()).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!(errs[0] > 1e-6);
        // roughly 1/N: doubling-ish N should cut the error by a comparable factor
        let ratio = errs[0] / errs[3];
        assert!(ratio > 1.5 && ratio < 10.0, "{errs:?}");
        assert!(bosonization_error(4, 2, 0.0, 0.3).unwrap() < 1e-14);
        assert!(bosonization_error(4, 2, FRAC_PI_2, 0.0).is_ok());
        assert!(bosonization_error(1, 2, 0.5, 0.0).is_err());
    }

    #[test]
    fn exact_operators_approach_bosonic_ones() {
        let boson = Model::new(ModelParams::new(1.0, 0.1, 2).unwrap()).unwrap();
        let mut prev = f64::INFINITY;
        for n_atoms in [4, 16, 64, 256] {
            let b = DickeBasis::new(n_atoms, 2).unwrap();
            let ops = exact_operators(&b);
            let mut worst: f64 = 0.0;
            for mode in [Mode::Excited, Mode::Storage] {
                let exact = ops.get(mode);
                for (i, oi) in boson.basis().states().iter().enumerate() {
                    for (j, oj) in boson.basis().states().iter().enumerate() {
                        let bi = b.index_of(*oi).unwrap();
                        let bj = b.index_of(*oj).unwrap();
                        worst = worst.max((exact.get(bi, bj) - boson.operator(mode).get(i, j)).norm());
                    }
                }
            }
            assert!(worst < prev);
            prev = worst;
        }
        assert!(prev < 1e-2);
    }
}
