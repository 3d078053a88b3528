//! Time evolution under the driven Hamiltonian and the diagnostics that go
//! with it.
//!
//! Each step applies `exp(−i H(t + dt/2) dt)`, the exact exponential of the
//! midpoint Hamiltonian. It is second order in `dt` and unitary to rounding,
//! so no norm or phase drift is introduced by the integrator itself. The step
//! size adapts by comparing one full step with two half steps.
//!
//! The Hamiltonian conserves total excitation, so every propagator is block
//! diagonal in the excitation sectors; only sectors carrying amplitude are
//! exponentiated.

use nalgebra::{DMatrix, DVector};

use crate::hilbert::Operator;
use crate::linalg::{hermitian_eigen, inner, norm_sqr, orthonormalize, unitary_propagator};
use crate::model::{mixing_angle, Model, ModelParams, Schedule};
use crate::{Error, Result, C64};

/// Complex amplitudes over a Fock basis at a given time.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub amplitudes: DVector<C64>,
    pub time: f64,
}

impl StateVector {
    pub fn new(amplitudes: DVector<C64>, time: f64) -> Self {
        Self { amplitudes, time }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amplitudes).sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &StateVector) -> C64 {
        inner(&self.amplitudes, &other.amplitudes)
    }
}

/// Anything that can hand out its Hamiltonian at time `t`, split into
/// sectors that it never couples.
pub trait HamiltonianSource {
    fn dim(&self) -> usize;

    /// Disjoint index sets covering `0..dim`.
    fn sectors(&self) -> &[Vec<usize>];

    /// Dense Hermitian block of `H(t)` on `sectors()[k]`.
    fn sector_hamiltonian(&self, k: usize, t: f64) -> DMatrix<C64>;

    /// `exp(−i H(t) dt)` on `sectors()[k]`.
    fn sector_propagator(&self, k: usize, t: f64, dt: f64) -> DMatrix<C64> {
        unitary_propagator(&self.sector_hamiltonian(k, t), dt)
    }

    /// `exp(−i H(t) dt) x` for `x` living on `sectors()[k]`.
    fn sector_apply(&self, k: usize, t: f64, dt: f64, x: &DVector<C64>) -> DVector<C64> {
        self.sector_propagator(k, t, dt) * x
    }
}

/// The driven model `H(t) = g_n(aA† + a†A) + Ω(t)(e^{iδt}A†C + h.c.)`.
///
/// With `V = e^{−iφ N_C}` the Hamiltonian is `V H(Ω, 0) V†` and `H(Ω, 0)` is
/// real symmetric, so propagators come from a real eigensolver.
pub struct DrivenModel<'a> {
    schedule: &'a Schedule,
    g_n: f64,
    sectors: Vec<Vec<usize>>,
    probe_blocks: Vec<DMatrix<f64>>,
    drive_blocks: Vec<DMatrix<f64>>,
    storage_counts: Vec<Vec<f64>>,
}

impl<'a> DrivenModel<'a> {
    pub fn new(model: &Model, schedule: &'a Schedule) -> Self {
        let sectors = model.basis().sectors();
        let real = |m: DMatrix<C64>| m.map(|z| z.re);
        let x = model.s_plus() + &model.s_plus().adjoint();
        let probe_blocks = sectors.iter().map(|s| real(model.probe_coupling().block(s, s))).collect();
        let drive_blocks = sectors.iter().map(|s| real(x.block(s, s))).collect();
        let storage_counts = sectors
            .iter()
            .map(|s| s.iter().map(|&i| model.basis().state(i).storage as f64).collect())
            .collect();
        Self { schedule, g_n: model.params().g_n, sectors, probe_blocks, drive_blocks, storage_counts }
    }

    pub fn schedule(&self) -> &Schedule {
        self.schedule
    }
}

impl HamiltonianSource for DrivenModel<'_> {
    fn dim(&self) -> usize {
        self.sectors.iter().map(Vec::len).sum()
    }

    fn sectors(&self) -> &[Vec<usize>] {
        &self.sectors
    }

    fn sector_hamiltonian(&self, k: usize, t: f64) -> DMatrix<C64> {
        let h0 = &self.probe_blocks[k] * self.g_n + &self.drive_blocks[k] * self.schedule.omega(t);
        let phase = self.phases(k, t);
        DMatrix::from_fn(h0.nrows(), h0.ncols(), |i, j| phase[i] * phase[j].conj() * h0[(i, j)])
    }

    fn sector_propagator(&self, k: usize, t: f64, dt: f64) -> DMatrix<C64> {
        let dim = self.sectors[k].len();
        let mut u = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut e = DVector::zeros(dim);
            e[j] = C64::new(1.0, 0.0);
            u.set_column(j, &self.sector_apply(k, t, dt, &e));
        }
        u
    }

    fn sector_apply(&self, k: usize, t: f64, dt: f64, x: &DVector<C64>) -> DVector<C64> {
        if x.len() == 1 {
            // the vacuum sector has H = 0
            return x.clone();
        }
        let h0 = &self.probe_blocks[k] * self.g_n + &self.drive_blocks[k] * self.schedule.omega(t);
        let eig = nalgebra::SymmetricEigen::new(h0);
        let v = &eig.eigenvectors;
        let phase = self.phases(k, t);
        let y = DVector::from_iterator(x.len(), x.iter().zip(&phase).map(|(z, p)| z * p.conj()));
        let mut z = DVector::from_fn(x.len(), |m, _| {
            v.column(m).iter().zip(y.iter()).map(|(a, b)| b * *a).sum::<C64>()
        });
        for (zm, e) in z.iter_mut().zip(eig.eigenvalues.iter()) {
            *zm *= C64::from_polar(1.0, -e * dt);
        }
        DVector::from_fn(x.len(), |i, _| {
            let acc: C64 = v.row(i).iter().zip(z.iter()).map(|(a, b)| b * *a).sum();
            acc * phase[i]
        })
    }
}

impl DrivenModel<'_> {
    fn phases(&self, k: usize, t: f64) -> Vec<C64> {
        let phi = self.schedule.phi(t);
        self.storage_counts[k].iter().map(|&n| C64::from_polar(1.0, -phi * n)).collect()
    }
}

/// A time-independent Hamiltonian.
pub struct ConstantHamiltonian {
    sectors: Vec<Vec<usize>>,
    blocks: Vec<DMatrix<C64>>,
}

impl ConstantHamiltonian {
    /// Treats the whole space as one sector.
    pub fn new(h: &Operator) -> Self {
        Self::with_sectors(h, vec![(0..h.dim()).collect()])
    }

    pub fn with_sectors(h: &Operator, sectors: Vec<Vec<usize>>) -> Self {
        let blocks = sectors.iter().map(|s| h.block(s, s)).collect();
        Self { sectors, blocks }
    }
}

impl HamiltonianSource for ConstantHamiltonian {
    fn dim(&self) -> usize {
        self.sectors.iter().map(Vec::len).sum()
    }

    fn sectors(&self) -> &[Vec<usize>] {
        &self.sectors
    }

    fn sector_hamiltonian(&self, k: usize, _t: f64) -> DMatrix<C64> {
        self.blocks[k].clone()
    }
}

fn gather(v: &DVector<C64>, idx: &[usize]) -> DVector<C64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

fn scatter(v: &mut DVector<C64>, idx: &[usize], block: &DVector<C64>) {
    for (&i, z) in idx.iter().zip(block.iter()) {
        v[i] = *z;
    }
}

fn active_sectors(source: &impl HamiltonianSource, v: &DVector<C64>) -> Vec<usize> {
    source
        .sectors()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.iter().any(|&i| v[i] != C64::new(0.0, 0.0)))
        .map(|(k, _)| k)
        .collect()
}

fn midpoint_step(
    source: &impl HamiltonianSource,
    active: &[usize],
    v: &DVector<C64>,
    t: f64,
    dt: f64,
) -> DVector<C64> {
    let mut out = v.clone();
    for &k in active {
        let idx = &source.sectors()[k];
        scatter(&mut out, idx, &source.sector_apply(k, t + 0.5 * dt, dt, &gather(v, idx)));
    }
    out
}

/// One midpoint-exponential step, `ψ(t+dt) = exp(−i H(t+dt/2) dt) ψ(t)`.
pub fn step(source: &impl HamiltonianSource, psi: &StateVector, dt: f64) -> StateVector {
    let active = active_sectors(source, &psi.amplitudes);
    StateVector::new(midpoint_step(source, &active, &psi.amplitudes, psi.time, dt), psi.time + dt)
}

/// Result of a step-doubling comparison.
#[derive(Clone, Debug)]
pub struct CheckedStep {
    /// Two half steps, the more accurate of the two estimates.
    pub state: StateVector,
    /// `‖ψ_full − ψ_half‖`.
    pub error: f64,
}

fn doubled(
    source: &impl HamiltonianSource,
    active: &[usize],
    v: &DVector<C64>,
    t: f64,
    dt: f64,
) -> (DVector<C64>, f64) {
    let full = midpoint_step(source, active, v, t, dt);
    let half = midpoint_step(source, active, v, t, 0.5 * dt);
    let half = midpoint_step(source, active, &half, t + 0.5 * dt, 0.5 * dt);
    let err = norm_sqr(&(&full - &half)).sqrt();
    (half, err)
}

/// Step with a local error estimate; rejects the step when the full and
/// doubled results differ by more than `tol`.
pub fn step_checked(source: &impl HamiltonianSource, psi: &StateVector, dt: f64, tol: f64) -> Result<CheckedStep> {
    let active = active_sectors(source, &psi.amplitudes);
    let (state, error) = doubled(source, &active, &psi.amplitudes, psi.time, dt);
    if error > tol {
        return Err(Error::StepTooLarge { dt, error, tol });
    }
    Ok(CheckedStep { state: StateVector::new(state, psi.time + dt), error })
}

/// Adaptive integration settings.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorOptions {
    /// Local error tolerance per step.
    pub tol: f64,
    /// Number of uniformly spaced samples stored in the trajectory,
    /// endpoints included (at least 2).
    pub samples: usize,
    pub dt_initial: Option<f64>,
    pub dt_min: f64,
    pub dt_max: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { tol: 1e-9, samples: 201, dt_initial: None, dt_min: 1e-12, dt_max: f64::INFINITY }
    }
}

impl IntegratorOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Sampled states plus per-step bookkeeping.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<C64>>,
    /// End time of each accepted step.
    pub step_times: Vec<f64>,
    /// `|‖ψ_{k+1}‖ − ‖ψ_k‖|` per accepted step.
    pub norm_drift: Vec<f64>,
    /// `⟨ψ|H|ψ⟩` at the end of each accepted step.
    pub energy: Vec<f64>,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn initial(&self) -> StateVector {
        StateVector::new(self.states[0].clone(), self.times[0])
    }

    pub fn last(&self) -> StateVector {
        let k = self.states.len() - 1;
        StateVector::new(self.states[k].clone(), self.times[k])
    }

    pub fn accepted_steps(&self) -> usize {
        self.step_times.len()
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.norm_drift.iter().copied().fold(0.0, f64::max)
    }

    /// Appends `other`, dropping its first sample when it repeats our last.
    pub fn extend(&mut self, other: Trajectory) {
        let skip = match (self.times.last(), other.times.first()) {
            (Some(a), Some(b)) if a == b => 1,
            _ => 0,
        };
        self.times.extend(other.times.into_iter().skip(skip));
        self.states.extend(other.states.into_iter().skip(skip));
        self.step_times.extend(other.step_times);
        self.norm_drift.extend(other.norm_drift);
        self.energy.extend(other.energy);
        self.rejected_steps += other.rejected_steps;
    }
}

fn energy(source: &impl HamiltonianSource, active: &[usize], v: &DVector<C64>, t: f64) -> f64 {
    active
        .iter()
        .map(|&k| {
            let block = gather(v, &source.sectors()[k]);
            inner(&block, &(source.sector_hamiltonian(k, t) * &block)).re
        })
        .sum()
}

/// Integrates `ψ0` from `t0` to `t1` with the adaptive midpoint propagator,
/// calling `observer(t, ψ)` after the start and after every accepted step.
pub fn integrate_with<S, F>(
    source: &S,
    psi0: &StateVector,
    t0: f64,
    t1: f64,
    opts: &IntegratorOptions,
    mut observer: F,
) -> Result<Trajectory>
where
    S: HamiltonianSource,
    F: FnMut(f64, &DVector<C64>),
{
    if !(t1 >= t0) {
        return Err(Error::InvalidParameter(format!("integration needs t0 <= t1, got [{t0}, {t1}]")));
    }
    if !(opts.tol > 0.0) || opts.samples < 2 {
        return Err(Error::InvalidParameter("tol must be positive and samples >= 2".into()));
    }
    let mut traj = Trajectory::default();
    let mut v = psi0.amplitudes.clone();
    traj.times.push(t0);
    traj.states.push(v.clone());
    observer(t0, &v);
    if t1 == t0 {
        return Ok(traj);
    }

    let active = active_sectors(source, &v);
    let span = t1 - t0;
    let sample_at = |j: usize| if j + 1 == opts.samples { t1 } else { t0 + span * j as f64 / (opts.samples - 1) as f64 };
    let mut next_sample = 1;

    let mut dt = opts.dt_initial.unwrap_or_else(|| {
        let scale: f64 = active
            .iter()
            .map(|&k| source.sector_hamiltonian(k, t0).norm())
            .fold(0.0, f64::max);
        if scale > 0.0 { 0.1 / scale } else { span }
    });
    dt = dt.min(opts.dt_max).min(span);

    let mut t = t0;
    while t < t1 {
        let target = sample_at(next_sample);
        let clipped = t + dt >= target;
        let dt_try = if clipped { target - t } else { dt };
        let (candidate, err) = doubled(source, &active, &v, t, dt_try);
        let factor = if err == 0.0 { 5.0 } else { (0.9 * (opts.tol / err).cbrt()).clamp(0.2, 5.0) };
        if err <= opts.tol {
            let t_new = if clipped { target } else { t + dt_try };
            let before = norm_sqr(&v).sqrt();
            v = candidate;
            t = t_new;
            traj.step_times.push(t);
            traj.norm_drift.push((norm_sqr(&v).sqrt() - before).abs());
            traj.energy.push(energy(source, &active, &v, t));
            observer(t, &v);
            if clipped {
                traj.times.push(t);
                traj.states.push(v.clone());
                next_sample += 1;
                dt = dt.max(dt_try * factor);
            } else {
                dt = dt_try * factor;
            }
            dt = dt.min(opts.dt_max);
        } else {
            traj.rejected_steps += 1;
            dt = dt_try * factor;
            if dt < opts.dt_min {
                return Err(Error::StepFloor { t, dt_min: opts.dt_min, tol: opts.tol });
            }
        }
    }
    Ok(traj)
}

/// Integrates the driven model over `[t0, t1]`.
pub fn integrate(
    schedule: &Schedule,
    params: &ModelParams,
    psi0: &StateVector,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<Trajectory> {
    let model = Model::new(*params)?;
    let source = DrivenModel::new(&model, schedule);
    integrate_with(&source, psi0, t0, t1, &IntegratorOptions::with_tol(tol), |_, _| {})
}

/// Orthonormal basis of the instantaneous dark span `{|d_0⟩ … |d_{n_max}⟩}`.
#[derive(Clone, Debug)]
pub struct DarkSubspace {
    pub states: Vec<DVector<C64>>,
}

impl DarkSubspace {
    pub fn new(model: &Model, theta: f64, phi: f64, n_max: usize) -> Result<Self> {
        let raw = model.dark_states(theta, phi, n_max)?;
        Ok(Self { states: orthonormalize(&raw, 1e-8) })
    }

    /// Dark span at the schedule point `t`, all excitations up to the cutoff.
    pub fn at(model: &Model, schedule: &Schedule, t: f64) -> Result<Self> {
        Self::new(model, schedule.theta(t), schedule.phi(t), model.params().n_max_total)
    }

    /// `‖P ψ‖²`.
    pub fn weight(&self, psi: &DVector<C64>) -> f64 {
        self.states.iter().map(|d| inner(d, psi).norm_sqr()).sum()
    }

    pub fn project(&self, psi: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(psi.len());
        for d in &self.states {
            out += d * inner(d, psi);
        }
        out
    }

    pub fn projector(&self) -> DMatrix<C64> {
        let dim = self.states.first().map_or(0, |d| d.len());
        let mut p = DMatrix::zeros(dim, dim);
        for d in &self.states {
            p += d * d.adjoint();
        }
        p
    }
}

/// Dense projector `Σ_{n ≤ n_max} |d_n⟩⟨d_n|` at the frame's `(θ, φ)`.
pub fn dark_projector(model: &Model, theta: f64, phi: f64, n_max: usize) -> Result<DMatrix<C64>> {
    Ok(DarkSubspace::new(model, theta, phi, n_max)?.projector())
}

/// `1 − ‖P_dark ψ‖²` with the dark span taken up to the truncation.
pub fn leakage(model: &Model, psi: &DVector<C64>, theta: f64, phi: f64) -> Result<f64> {
    let dark = DarkSubspace::new(model, theta, phi, model.params().n_max_total)?;
    Ok((1.0 - dark.weight(psi) / norm_sqr(psi)).max(0.0))
}

/// Eigenvalues within this fraction of `R` count as zero energy.
pub const ZERO_ENERGY_REL: f64 = 1e-8;
/// Eigenvalues between the zero threshold and this fraction of `R` make the
/// zero-energy space ambiguous.
pub const ZERO_ENERGY_GAP_REL: f64 = 1e-3;

/// Zero-energy states of `H(Ω, φ)` that are not dark states, one orthonormal
/// list for the whole space.
pub fn extra_zero_energy_states(model: &Model, omega: f64, phi: f64) -> Result<Vec<DVector<C64>>> {
    let g_n = model.params().g_n;
    let r = (g_n * g_n + omega * omega).sqrt();
    let h = model.hamiltonian(omega, phi);
    let dark = model.dark_states(mixing_angle(omega, g_n), phi, model.params().n_max_total)?;
    let dim = model.basis().dim();
    let mut extra = Vec::new();
    for (k, sector) in model.basis().sectors().iter().enumerate() {
        let (values, vectors) = hermitian_eigen(&h.block(sector, sector));
        if let Some(e) = values
            .iter()
            .find(|e| e.abs() >= ZERO_ENERGY_REL * r && e.abs() < ZERO_ENERGY_GAP_REL * r)
        {
            return Err(Error::AmbiguousEigenspace(format!(
                "eigenvalue {e:.3e} in sector {k} sits between the zero threshold and the gap"
            )));
        }
        let embed = |col: DVector<C64>| {
            let mut full = DVector::zeros(dim);
            scatter(&mut full, sector, &col);
            full
        };
        let zero: Vec<_> = values
            .iter()
            .enumerate()
            .filter(|(_, e)| e.abs() < ZERO_ENERGY_REL * r)
            .map(|(j, _)| embed(vectors.column(j).into_owned()))
            .collect();
        let mut candidates = vec![dark[k].clone()];
        candidates.extend(zero.iter().cloned());
        let basis = orthonormalize(&candidates, 1e-6);
        if basis.len() != zero.len() {
            return Err(Error::AmbiguousEigenspace(format!(
                "sector {k}: {} zero modes but dark state not contained in them",
                zero.len()
            )));
        }
        extra.extend(basis.into_iter().skip(1));
    }
    Ok(extra)
}

/// Squared overlap of `ψ` with the zero-energy eigenspace of `H(Ω, φ)` after
/// deflating the dark states.
pub fn extra_zero_energy_overlap(model: &Model, psi: &DVector<C64>, omega: f64, phi: f64) -> Result<f64> {
    let extra = extra_zero_energy_states(model, omega, phi)?;
    Ok(extra.iter().map(|e| inner(e, psi).norm_sqr()).sum())
}

/// Adiabaticity measures over a time grid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdiabaticityReport {
    pub times: Vec<f64>,
    /// `g_n |dΩ/dt| / R³`
    pub q1: Vec<f64>,
    /// `g_n |δ Ω| / R³`
    pub q2: Vec<f64>,
    pub max_q1: f64,
    pub max_q2: f64,
}

impl AdiabaticityReport {
    pub fn max(&self) -> f64 {
        self.max_q1.max(self.max_q2)
    }
}

/// `(q1, q2)` at a single time; Ω̇ by central differences with `h = T·10⁻⁶`.
pub fn adiabaticity_at(schedule: &Schedule, params: &ModelParams, t: f64) -> (f64, f64) {
    let h = schedule.period() * 1e-6;
    let omega = schedule.omega(t);
    let omega_dot = (schedule.omega(t + h) - schedule.omega(t - h)) / (2.0 * h);
    let r = (params.g_n * params.g_n + omega * omega).sqrt();
    let r3 = r * r * r;
    (params.g_n * omega_dot.abs() / r3, params.g_n * (params.delta * omega).abs() / r3)
}

pub fn adiabaticity(schedule: &Schedule, params: &ModelParams, grid: &[f64]) -> AdiabaticityReport {
    let mut rep = AdiabaticityReport { times: grid.to_vec(), ..Default::default() };
    for &t in grid {
        let (q1, q2) = adiabaticity_at(schedule, params, t);
        rep.q1.push(q1);
        rep.q2.push(q2);
        rep.max_q1 = rep.max_q1.max(q1);
        rep.max_q2 = rep.max_q2.max(q2);
    }
    rep
}

/// `n + 1` uniformly spaced points on `[t0, t1]`.
pub fn uniform_grid(t0: f64, t1: f64, intervals: usize) -> Vec<f64> {
    (0..=intervals)
        .map(|j| if j == intervals { t1 } else { t0 + (t1 - t0) * j as f64 / intervals as f64 })
        .collect()
}
