//! Bosonized interaction Hamiltonian, dark/bright polaritons, the instantaneous
//! dark states, and control schedules Ω(t).
//!
//! With `g_n = g√N` the Hamiltonian is
//!
//! ```text
//! H = g_n (a A† + a† A) + Ω (e^{iφ} A†C + e^{−iφ} C†A)
//! ```
//!
//! and the polaritons are `D = a cosθ − C sinθ e^{iφ}`,
//! `B = a sinθ + C cosθ e^{iφ}` with `tanθ = g_n / Ω`. In terms of them
//! `H = R (A†B + B†A)`, `R = √(g_n² + Ω²)`, so every `D†ⁿ|0⟩` is a zero-energy
//! eigenstate.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DVector;

use crate::evolve::StateVector;
use crate::hilbert::{build_basis, mode_operator, su2_generators, BosonBasis, Mode, Operator};
use crate::{Error, Result, C64};

/// Default cap standing in for the infinite Rabi frequency at the loop
/// endpoints, in units of `g_n`.
pub const DEFAULT_OMEGA_MAX_RATIO: f64 = 100.0;

/// Physical constants of the bosonized model. Frequencies are angular.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Collective coupling `g√N`.
    pub g_n: f64,
    /// Control-field detuning δ; the control phase is φ(t) = δt.
    pub delta: f64,
    /// Truncation on total excitation number.
    pub n_max_total: usize,
}

impl ModelParams {
    pub fn new(g_n: f64, delta: f64, n_max_total: usize) -> Result<Self> {
        let p = Self { g_n, delta, n_max_total };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g_n.is_finite() && self.g_n > 0.0) {
            return Err(Error::InvalidParameter(format!("g_n must be positive, got {}", self.g_n)));
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidParameter(format!("delta must be finite, got {}", self.delta)));
        }
        Ok(())
    }

    /// One detuning period `2π/|δ|`; infinite when δ = 0.
    pub fn detuning_period(&self) -> f64 {
        TAU / self.delta.abs()
    }
}

/// Mixing angle `θ = atan2(g_n, Ω)`, so Ω = 0 maps to exactly π/2.
pub fn mixing_angle(omega: f64, g_n: f64) -> f64 {
    g_n.atan2(omega)
}

/// `sin²θ` written without trigonometry, `g_n² / (g_n² + Ω²)`.
pub fn sin2_theta(omega: f64, g_n: f64) -> f64 {
    let g2 = g_n * g_n;
    g2 / (g2 + omega * omega)
}

/// Basis plus the ladder operators every Hamiltonian and frame is built from.
#[derive(Clone, Debug)]
pub struct Model {
    params: ModelParams,
    basis: BosonBasis,
    photon: Operator,
    excited: Operator,
    storage: Operator,
    photon_dag: Operator,
    storage_dag: Operator,
    /// `a A† + a† A`
    probe_coupling: Operator,
    /// `S_+ = A†C`
    s_plus: Operator,
}

impl Model {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let basis = build_basis(params.n_max_total);
        let photon = mode_operator(&basis, Mode::Photon);
        let excited = mode_operator(&basis, Mode::Excited);
        let storage = mode_operator(&basis, Mode::Storage);
        let a_dag_exc = excited.adjoint().matmul(&photon);
        let probe_coupling = &a_dag_exc + &a_dag_exc.adjoint();
        let s_plus = su2_generators(&basis).plus;
        Ok(Self {
            params,
            photon_dag: photon.adjoint(),
            storage_dag: storage.adjoint(),
            basis,
            photon,
            excited,
            storage,
            probe_coupling,
            s_plus,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn basis(&self) -> &BosonBasis {
        &self.basis
    }

    pub fn operator(&self, mode: Mode) -> &Operator {
        match mode {
            Mode::Photon => &self.photon,
            Mode::Excited => &self.excited,
            Mode::Storage => &self.storage,
        }
    }

    /// `a A† + a† A`, the part of H multiplied by `g_n`.
    pub fn probe_coupling(&self) -> &Operator {
        &self.probe_coupling
    }

    /// `S_+ ≅ A†C`; H contains `Ω (e^{iφ} S_+ + h.c.)`.
    pub fn s_plus(&self) -> &Operator {
        &self.s_plus
    }

    pub fn hamiltonian(&self, omega: f64, phi: f64) -> Operator {
        let drive = self.s_plus.scale(C64::from_polar(omega, phi));
        let drive = &drive + &drive.adjoint();
        &self.probe_coupling.scale(C64::new(self.params.g_n, 0.0)) + &drive
    }

    pub fn frame(&self, theta: f64, phi: f64) -> PolaritonFrame {
        let (s, c) = theta.sin_cos();
        let e = C64::from_polar(1.0, phi);
        let dark = &(&self.photon * c) - &(&self.storage * (e * s));
        let bright = &(&self.photon * s) + &(&self.storage * (e * c));
        PolaritonFrame { theta, phi, dark, bright }
    }

    /// `|d_0⟩ … |d_{n_max}⟩` at `(θ, φ)`, built by repeated application of
    /// `D† = cosθ a† − sinθ e^{−iφ} C†`.
    pub fn dark_states(&self, theta: f64, phi: f64, n_max: usize) -> Result<Vec<DVector<C64>>> {
        if n_max > self.params.n_max_total {
            return Err(Error::ExcitationOutOfRange { n: n_max, n_max_total: self.params.n_max_total });
        }
        let (s, c) = theta.sin_cos();
        let coeff = C64::from_polar(s, -phi);
        let mut out = Vec::with_capacity(n_max + 1);
        let mut v = self.basis.vacuum();
        out.push(v.clone());
        for k in 1..=n_max {
            let raised = self.photon_dag.apply(&v) * C64::new(c, 0.0) - self.storage_dag.apply(&v) * coeff;
            v = raised / C64::new((k as f64).sqrt(), 0.0);
            out.push(v.clone());
        }
        Ok(out)
    }
}

/// Builds `H` directly from parameters. Prefer [`Model::hamiltonian`] in loops.
pub fn hamiltonian(params: &ModelParams, omega: f64, phi: f64, basis: &BosonBasis) -> Operator {
    let a = mode_operator(basis, Mode::Photon);
    let a_exc = mode_operator(basis, Mode::Excited);
    let s_plus = su2_generators(basis).plus;
    let probe = a_exc.adjoint().matmul(&a);
    let probe = &probe + &probe.adjoint();
    let drive = s_plus.scale(C64::from_polar(omega, phi));
    &(&probe * params.g_n) + &(&drive + &drive.adjoint())
}

/// Dark and bright polariton operators at a point `(θ, φ)`.
#[derive(Clone, Debug)]
pub struct PolaritonFrame {
    pub theta: f64,
    pub phi: f64,
    /// `D = a cosθ − C sinθ e^{iφ}`
    pub dark: Operator,
    /// `B = a sinθ + C cosθ e^{iφ}`
    pub bright: Operator,
}

pub fn polaritons(theta: f64, phi: f64, basis: &BosonBasis) -> PolaritonFrame {
    let a = mode_operator(basis, Mode::Photon);
    let c = mode_operator(basis, Mode::Storage);
    let (s, co) = theta.sin_cos();
    let e = C64::from_polar(1.0, phi);
    PolaritonFrame {
        theta,
        phi,
        dark: &(&a * co) - &(&c * (e * s)),
        bright: &(&a * s) + &(&c * (e * co)),
    }
}

/// `|d_n⟩ = D†ⁿ|0⟩ / √n!`.
pub fn dark_state(n: usize, frame: &PolaritonFrame, basis: &BosonBasis) -> Result<StateVector> {
    if n > basis.n_max_total() {
        return Err(Error::ExcitationOutOfRange { n, n_max_total: basis.n_max_total() });
    }
    let raise = frame.dark.adjoint();
    let mut v = basis.vacuum();
    for k in 1..=n {
        v = raise.apply(&v) / C64::new((k as f64).sqrt(), 0.0);
    }
    Ok(StateVector::new(v, 0.0))
}

/// Built-in control-schedule families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScheduleFamily {
    /// `Ω = g_n |cot(φ/2)|` for one detuning cycle, storage at φ = π.
    CotProfile,
    /// θ ramps linearly 0 → π/2 on [0, T_M] and back on [T_M, T].
    LinearTheta,
    /// Same endpoints as `LinearTheta` with a C¹ smoothstep easing.
    SmoothstepTheta,
}

impl ScheduleFamily {
    pub const ALL: [ScheduleFamily; 3] =
        [ScheduleFamily::CotProfile, ScheduleFamily::LinearTheta, ScheduleFamily::SmoothstepTheta];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScheduleFamily::CotProfile => "cot-profile",
            ScheduleFamily::LinearTheta => "linear-theta",
            ScheduleFamily::SmoothstepTheta => "smoothstep-theta",
        }
    }

    /// Names of the real-valued parameters this family accepts.
    pub fn parameter_names(&self) -> &'static [&'static str] {
        &[]
    }
}

impl fmt::Display for ScheduleFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScheduleFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScheduleFamily::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

type OmegaFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Profile {
    Family(ScheduleFamily),
    Custom { id: String, omega: OmegaFn },
}

/// A control cycle: Rabi frequency Ω(t) ≥ 0 on `[0, T]` with φ(t) = δt,
/// full storage (Ω = 0) at `T_M`, and Ω capped at `omega_max`.
#[derive(Clone)]
pub struct Schedule {
    profile: Profile,
    g_n: f64,
    delta: f64,
    t_m: f64,
    period: f64,
    omega_max: f64,
    cycles: u32,
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Schedule")
            .field("id", &self.id())
            .field("t_m", &self.t_m)
            .field("period", &self.period)
            .field("omega_max", &self.omega_max)
            .field("cycles", &self.cycles)
            .finish()
    }
}

/// Validates and builds a schedule of a named family.
///
/// `period` must be a whole number of detuning cycles `2πm/δ` and
/// `0 < t_m < period`. The cot profile pins storage at `t_m = period/2`.
pub fn make_schedule(
    family: &str,
    family_params: &BTreeMap<String, f64>,
    t_m: f64,
    period: f64,
    omega_max: f64,
    params: &ModelParams,
) -> Result<Schedule> {
    let family: ScheduleFamily = family.parse()?;
    if let Some(key) = family_params.keys().find(|k| !family.parameter_names().contains(&k.as_str())) {
        return Err(Error::InvalidParameter(format!("{family} does not take parameter `{key}`")));
    }
    params.validate()?;
    let cycles = whole_cycles(period, params.delta)?;
    check_times(t_m, period)?;
    if !(omega_max.is_finite() && omega_max > 0.0) {
        return Err(Error::InvalidParameter(format!("omega_max must be positive, got {omega_max}")));
    }
    if family == ScheduleFamily::CotProfile && ((t_m - period / 2.0).abs() > 1e-12 * period) {
        return Err(Error::InvalidParameter(format!(
            "cot-profile stores at half period; t_m = {t_m} but period/2 = {}",
            period / 2.0
        )));
    }
    let t_m = if family == ScheduleFamily::CotProfile { period / 2.0 } else { t_m };
    Ok(Schedule { profile: Profile::Family(family), g_n: params.g_n, delta: params.delta, t_m, period, omega_max, cycles })
}

fn whole_cycles(period: f64, delta: f64) -> Result<u32> {
    let turns = period * delta.abs() / TAU;
    let m = turns.round();
    if !(period.is_finite() && period > 0.0) || m < 1.0 || (turns - m).abs() > 1e-9 * m {
        return Err(Error::NonCyclicPeriod { period, delta });
    }
    Ok(m as u32)
}

fn check_times(t_m: f64, period: f64) -> Result<()> {
    if !(t_m > 0.0 && t_m < period) {
        return Err(Error::InvalidParameter(format!("need 0 < t_m < period, got t_m = {t_m}, period = {period}")));
    }
    Ok(())
}

impl Schedule {
    /// Schedule over `cycles` detuning periods with storage at `t_m_fraction·T`.
    pub fn from_fraction(
        family: ScheduleFamily,
        params: &ModelParams,
        t_m_fraction: f64,
        cycles: u32,
        omega_max: f64,
    ) -> Result<Self> {
        let period = cycles as f64 * params.detuning_period();
        make_schedule(family.as_str(), &BTreeMap::new(), t_m_fraction * period, period, omega_max, params)
    }

    /// Schedule driven by an arbitrary uncapped `Ω(t)` on `[0, period]`. The
    /// caller is responsible for the fixed points (Ω large at both ends, zero
    /// at `t_m`); the cap is still applied.
    pub fn custom(
        id: impl Into<String>,
        params: &ModelParams,
        t_m: f64,
        period: f64,
        omega_max: f64,
        omega: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        params.validate()?;
        let cycles = whole_cycles(period, params.delta)?;
        check_times(t_m, period)?;
        Ok(Schedule {
            profile: Profile::Custom { id: id.into(), omega: Arc::new(omega) },
            g_n: params.g_n,
            delta: params.delta,
            t_m,
            period,
            omega_max,
            cycles,
        })
    }

    pub fn id(&self) -> &str {
        match &self.profile {
            Profile::Family(f) => f.as_str(),
            Profile::Custom { id, .. } => id,
        }
    }

    pub fn family(&self) -> Option<ScheduleFamily> {
        match self.profile {
            Profile::Family(f) => Some(f),
            Profile::Custom { .. } => None,
        }
    }

    pub fn t_m(&self) -> f64 {
        self.t_m
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn cycles(&self) -> u32 {
        self.cycles
    }

    pub fn g_n(&self) -> f64 {
        self.g_n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// φ_M = δ·T_M.
    pub fn phi_m(&self) -> f64 {
        self.delta * self.t_m
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.delta * t
    }

    /// Ω(t), extended periodically outside `[0, T]`.
    pub fn omega(&self, t: f64) -> f64 {
        let t = if (0.0..=self.period).contains(&t) { t } else { t.rem_euclid(self.period) };
        let raw = match &self.profile {
            Profile::Family(f) => self.g_n * self.family_cot_complement(*f, t).min(FRAC_PI_2).tan(),
            Profile::Custom { omega, .. } => omega(t),
        };
        raw.clamp(0.0, self.omega_max)
    }

    /// π/2 − θ for the uncapped family profile, which keeps Ω(T_M) = 0 exact.
    fn family_cot_complement(&self, f: ScheduleFamily, t: f64) -> f64 {
        let (t_m, period) = (self.t_m, self.period);
        let u = if t <= t_m { (t_m - t) / t_m } else { (t - t_m) / (period - t_m) };
        match f {
            ScheduleFamily::CotProfile => PI * (t - t_m).abs() / period,
            ScheduleFamily::LinearTheta => FRAC_PI_2 * u,
            ScheduleFamily::SmoothstepTheta => FRAC_PI_2 * u * u * (3.0 - 2.0 * u),
        }
    }

    pub fn theta(&self, t: f64) -> f64 {
        mixing_angle(self.omega(t), self.g_n)
    }

    pub fn sin2_theta(&self, t: f64) -> f64 {
        sin2_theta(self.omega(t), self.g_n)
    }

    /// `F(φ) = Ω(φ/δ)`.
    pub fn omega_of_phi(&self, phi: f64) -> f64 {
        self.omega(phi / self.delta)
    }

    /// Total control phase swept over the cycle, `δ·T = 2πm`.
    pub fn phi_span(&self) -> f64 {
        self.delta * self.period
    }
}
