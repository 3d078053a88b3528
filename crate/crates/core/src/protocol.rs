//! Write, store, read and decode a photonic superposition.
//!
//! A photonic input `Σ c_n |n⟩` is mapped into the collective storage mode
//! while Ω is switched off (write, `0 → T_M`), held, and mapped back while Ω
//! is switched on again (read, `T_M → T`). Each Fock component returns with
//! the phase `n·γ`, which decoding removes using only the schedule geometry.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::evolve::{
    adiabaticity, integrate_with, uniform_grid, DarkSubspace, DrivenModel, IntegratorOptions, StateVector, Trajectory,
};
use crate::geometry::{extract_phase, gamma_time, schedule_gamma_loop};
use crate::hilbert::{Mode, Occupation};
use crate::linalg::{inner, norm_sqr};
use crate::model::{Model, ModelParams, Schedule};
use crate::{Error, Result, C64};

/// Photonic amplitudes `c_0 … c_nmax`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolInput {
    c: Vec<C64>,
}

impl ProtocolInput {
    /// Requires `Σ|c_n|² = 1` within 10⁻¹².
    pub fn new(c: Vec<C64>) -> Result<Self> {
        let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if c.is_empty() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("input amplitudes must have unit norm, got Σ|c|² = {norm}")));
        }
        Ok(Self { c })
    }

    /// Rescales to unit norm; fails on an all-zero vector.
    pub fn normalized(c: Vec<C64>) -> Result<Self> {
        let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter("input amplitudes are all zero".into()));
        }
        Self::new(c.into_iter().map(|z| z / norm).collect())
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.c
    }

    pub fn n_max(&self) -> usize {
        self.c.len() - 1
    }

    /// Number of nonzero components.
    pub fn support(&self) -> usize {
        self.c.iter().filter(|z| z.norm() > 0.0).count()
    }

    /// `Σ c_n |n, 0, 0⟩` in the model basis; needs `n_max ≤ n_max_total − 1`.
    pub fn state(&self, model: &Model) -> Result<DVector<C64>> {
        let n_max_total = model.params().n_max_total;
        if self.n_max() + 1 > n_max_total {
            return Err(Error::ExcitationOutOfRange { n: self.n_max() + 1, n_max_total });
        }
        let basis = model.basis();
        let mut v = DVector::zeros(basis.dim());
        for (n, c) in self.c.iter().enumerate() {
            v[basis.index_of(Occupation::new(n, 0, 0)).expect("inside truncation")] = *c;
        }
        Ok(v)
    }
}

/// Where the decoding phase comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GammaSource {
    /// Loop integral over φ of the capped schedule.
    Loop,
    /// Time integral over the cycle.
    Time,
    /// Measured from evolving a reference dark state through the cycle.
    Evolved,
}

impl GammaSource {
    pub const ALL: [GammaSource; 3] = [GammaSource::Loop, GammaSource::Time, GammaSource::Evolved];

    pub fn as_str(&self) -> &'static str {
        match self {
            GammaSource::Loop => "loop",
            GammaSource::Time => "time",
            GammaSource::Evolved => "evolved",
        }
    }
}

impl fmt::Display for GammaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GammaSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        GammaSource::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown gamma source `{s}` (loop, time, evolved)")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolOptions {
    pub integrator: IntegratorOptions,
    /// Leakage above this aborts a stage.
    pub leakage_limit: f64,
    /// Grid size for the adiabaticity scan over the cycle.
    pub adiabaticity_samples: usize,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        Self { integrator: IntegratorOptions::default(), leakage_limit: 0.05, adiabaticity_samples: 4001 }
    }
}

/// A unitary applied to the memory at `T_M`, between write and read.
pub trait MemoryProcessing: Sync {
    fn apply(&self, memory: &mut StateVector);
}

/// Leaves the memory untouched.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl MemoryProcessing for Identity {
    fn apply(&self, _memory: &mut StateVector) {}
}

/// Per-stage bookkeeping.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StageDiagnostics {
    /// Largest dark-span leakage over the accepted steps.
    pub leakage_max: f64,
    /// `⟨a†a⟩` at the end of the stage.
    pub photon_occupation: f64,
    /// `⟨A†A⟩` at the end of the stage.
    pub excited_occupation: f64,
    /// `⟨C†C⟩` at the end of the stage.
    pub storage_occupation: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct StageRun {
    pub state: StateVector,
    pub trajectory: Trajectory,
    pub diagnostics: StageDiagnostics,
}

fn occupation(model: &Model, psi: &DVector<C64>, mode: Mode) -> f64 {
    let op = model.operator(mode);
    norm_sqr(&op.apply(psi))
}

fn run_stage(
    model: &Model,
    schedule: &Schedule,
    psi: &StateVector,
    t1: f64,
    opts: &ProtocolOptions,
) -> Result<StageRun> {
    let source = DrivenModel::new(model, schedule);
    let mut leak_max: f64 = 0.0;
    let mut failure = None;
    let trajectory = integrate_with(&source, psi, psi.time, t1, &opts.integrator, |t, v| {
        match DarkSubspace::at(model, schedule, t) {
            Ok(dark) => leak_max = leak_max.max((1.0 - dark.weight(v) / norm_sqr(v)).max(0.0)),
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    if leak_max > opts.leakage_limit {
        return Err(Error::StorageFailed { leakage: leak_max, limit: opts.leakage_limit });
    }
    let state = trajectory.last();
    let diagnostics = StageDiagnostics {
        leakage_max: leak_max,
        photon_occupation: occupation(model, &state.amplitudes, Mode::Photon),
        excited_occupation: occupation(model, &state.amplitudes, Mode::Excited),
        storage_occupation: occupation(model, &state.amplitudes, Mode::Storage),
        warnings: Vec::new(),
    };
    Ok(StageRun { state, trajectory, diagnostics })
}

/// Maps the photonic input into the storage mode over `[0, T_M]`.
pub fn write(input: &ProtocolInput, schedule: &Schedule, params: &ModelParams, opts: &ProtocolOptions) -> Result<StageRun> {
    let model = Model::new(*params)?;
    write_with(&model, input, schedule, opts)
}

fn write_with(model: &Model, input: &ProtocolInput, schedule: &Schedule, opts: &ProtocolOptions) -> Result<StageRun> {
    let psi = StateVector::new(input.state(model)?, 0.0);
    let mut run = run_stage(model, schedule, &psi, schedule.t_m(), opts)?;
    let d = &mut run.diagnostics;
    if d.photon_occupation + d.excited_occupation >= 1e-2 {
        d.warnings.push(format!(
            "memory not fully atomic at T_M: ⟨a†a⟩ = {:.3e}, ⟨A†A⟩ = {:.3e}",
            d.photon_occupation, d.excited_occupation
        ));
    }
    Ok(run)
}

/// Maps the memory back to the photon mode over `[T_M, T]`.
pub fn read(memory: &StateVector, schedule: &Schedule, params: &ModelParams, opts: &ProtocolOptions) -> Result<StageRun> {
    let model = Model::new(*params)?;
    read_with(&model, memory, schedule, opts)
}

fn read_with(model: &Model, memory: &StateVector, schedule: &Schedule, opts: &ProtocolOptions) -> Result<StageRun> {
    let mut run = run_stage(model, schedule, memory, schedule.period(), opts)?;
    let d = &mut run.diagnostics;
    if d.excited_occupation + d.storage_occupation >= 1e-2 {
        d.warnings.push(format!(
            "output not fully photonic at T: ⟨A†A⟩ = {:.3e}, ⟨C†C⟩ = {:.3e}",
            d.excited_occupation, d.storage_occupation
        ));
    }
    Ok(run)
}

/// `⟨n, 0, 0|ψ⟩` for `n = 0 … n_max_total`.
pub fn photon_amplitudes(model: &Model, psi: &DVector<C64>) -> Vec<C64> {
    let basis = model.basis();
    (0..=model.params().n_max_total)
        .map(|n| psi[basis.index_of(Occupation::new(n, 0, 0)).expect("inside truncation")])
        .collect()
}

/// `⟨0, 0, n|ψ⟩` for `n = 0 … n_max_total`.
pub fn storage_amplitudes(model: &Model, psi: &DVector<C64>) -> Vec<C64> {
    let basis = model.basis();
    (0..=model.params().n_max_total)
        .map(|n| psi[basis.index_of(Occupation::new(0, 0, n)).expect("inside truncation")])
        .collect()
}

fn undo_phase(amplitudes: &[C64], gamma: f64) -> Vec<C64> {
    amplitudes
        .iter()
        .enumerate()
        .map(|(n, z)| z * C64::from_polar(1.0, -(n as f64) * gamma))
        .collect()
}

/// `c_n ← ⟨n|output⟩ e^{−inγ}`, renormalized.
pub fn decode(model: &Model, output: &StateVector, gamma: f64) -> Result<ProtocolInput> {
    ProtocolInput::normalized(undo_phase(&photon_amplitudes(model, &output.amplitudes), gamma))
}

/// `|Σ c_n* e^{−inγ} ⟨n|ψ⟩|²` without renormalizing, so weight left outside
/// the photonic subspace counts as infidelity.
pub fn decoded_fidelity(input: &ProtocolInput, photon: &[C64], gamma: f64) -> f64 {
    let undone = undo_phase(photon, gamma);
    input.c.iter().zip(&undone).map(|(c, z)| c.conj() * z).sum::<C64>().norm_sqr()
}

/// Phase picked up by `|d_1⟩` over the cycle, measured by evolution. Depends
/// only on the schedule and the model, never on a particular input.
pub fn evolved_gamma(schedule: &Schedule, params: &ModelParams, opts: &IntegratorOptions) -> Result<f64> {
    let probe_params = ModelParams { n_max_total: 1, ..*params };
    let model = Model::new(probe_params)?;
    let d1 = model.dark_states(schedule.theta(0.0), schedule.phi(0.0), 1)?.pop().expect("two dark states");
    let source = DrivenModel::new(&model, schedule);
    let traj = integrate_with(&source, &StateVector::new(d1, 0.0), 0.0, schedule.period(), opts, |_, _| {})?;
    extract_phase(&model, schedule, &traj, 1)
}

/// Decoding phase from the selected route.
pub fn gamma_for(source: GammaSource, schedule: &Schedule, params: &ModelParams, opts: &IntegratorOptions) -> Result<f64> {
    match source {
        GammaSource::Loop => schedule_gamma_loop(schedule),
        GammaSource::Time => gamma_time(schedule, schedule.period()),
        GammaSource::Evolved => evolved_gamma(schedule, params, opts),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolReport {
    pub schedule_id: String,
    pub delta: f64,
    pub omega_max: f64,
    pub input: Vec<C64>,
    /// `⟨a†a⟩` at `T_M`.
    pub memory_photon_occupation: f64,
    /// `⟨A†A⟩` at `T_M`.
    pub memory_excited_occupation: f64,
    /// `⟨0,0,n|ψ(T_M)⟩`.
    pub memory_amplitudes: Vec<C64>,
    /// `⟨n,0,0|ψ(T)⟩`.
    pub raw_output: Vec<C64>,
    /// Renormalized decoded amplitudes.
    pub decoded: Vec<C64>,
    pub fidelity_raw: f64,
    pub fidelity_decoded: f64,
    /// `1 − Σ|⟨n,0,0|ψ(T)⟩|²`.
    pub discarded_weight: f64,
    pub leakage_max: f64,
    pub adiabaticity_max: f64,
    pub gamma_source: GammaSource,
    pub gamma_used: f64,
    /// Whether decoding did at least as well as no decoding; only
    /// meaningful for inputs with two or more components.
    pub decoding_helped: bool,
    pub warnings: Vec<String>,
}

/// A report plus the stitched `[0, T]` trajectory.
#[derive(Clone, Debug)]
pub struct CycleRun {
    pub report: ProtocolReport,
    pub trajectory: Trajectory,
}

/// Write, identity processing, read and decode.
pub fn full_cycle(
    input: &ProtocolInput,
    schedule: &Schedule,
    params: &ModelParams,
    gamma_source: GammaSource,
) -> Result<ProtocolReport> {
    Ok(run_cycle(input, schedule, params, gamma_source, &ProtocolOptions::default(), &Identity)?.report)
}

/// [`full_cycle`] with explicit options and a processing hook at `T_M`.
pub fn run_cycle(
    input: &ProtocolInput,
    schedule: &Schedule,
    params: &ModelParams,
    gamma_source: GammaSource,
    opts: &ProtocolOptions,
    processing: &dyn MemoryProcessing,
) -> Result<CycleRun> {
    let model = Model::new(*params)?;
    let gamma_used = gamma_for(gamma_source, schedule, params, &opts.integrator)?;

    let adiabatic = adiabaticity(schedule, params, &uniform_grid(0.0, schedule.period(), opts.adiabaticity_samples - 1));
    let mut warnings = Vec::new();
    if adiabatic.max() > 0.1 {
        warnings.push(format!("adiabaticity measure {:.3e} exceeds 0.1", adiabatic.max()));
    }

    let written = write_with(&model, input, schedule, opts)?;
    let mut memory = written.state.clone();
    processing.apply(&mut memory);
    let readout = read_with(&model, &memory, schedule, opts)?;
    warnings.extend(written.diagnostics.warnings.iter().cloned());
    warnings.extend(readout.diagnostics.warnings.iter().cloned());

    let output = &readout.state;
    let raw_output = photon_amplitudes(&model, &output.amplitudes);
    let photonic_weight: f64 = raw_output.iter().map(|z| z.norm_sqr()).sum();
    let fidelity_raw = decoded_fidelity(input, &raw_output, 0.0);
    let fidelity_decoded = decoded_fidelity(input, &raw_output, gamma_used);
    let decoded = decode(&model, output, gamma_used)?.c;

    let mut trajectory = written.trajectory;
    trajectory.extend(readout.trajectory);

    let report = ProtocolReport {
        schedule_id: schedule.id().to_string(),
        delta: params.delta,
        omega_max: schedule.omega_max(),
        input: input.c.clone(),
        memory_photon_occupation: written.diagnostics.photon_occupation,
        memory_excited_occupation: written.diagnostics.excited_occupation,
        memory_amplitudes: storage_amplitudes(&model, &written.state.amplitudes),
        raw_output,
        decoded,
        fidelity_raw,
        fidelity_decoded,
        discarded_weight: (1.0 - photonic_weight).max(0.0),
        leakage_max: written.diagnostics.leakage_max.max(readout.diagnostics.leakage_max),
        adiabaticity_max: adiabatic.max(),
        gamma_source,
        gamma_used,
        decoding_helped: fidelity_decoded >= fidelity_raw,
        warnings,
    };
    Ok(CycleRun { report, trajectory })
}

/// Overlap `|⟨a|b⟩|²` of two states, for tests and reports.
pub fn state_fidelity(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    inner(a, b).norm_sqr()
}
