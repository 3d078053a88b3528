//! Berry connection of the dark-state bundle and the geometric phase of a
//! control cycle, computed three ways: as a loop integral over φ, as a time
//! integral, and from a simulated trajectory.
//!
//! Sign bookkeeping. With `K_mn = −⟨d_m|∂_t d_n⟩` and the dark-state phase
//! convention `D† = cosθ a† − sinθ e^{−iφ} C†`, the diagonal is
//! `K_nn = +i n φ̇ sin²θ`, and an adiabatic amplitude evolves as
//! `c_n(T) = exp(i n ∫ φ̇ sin²θ) c_n(0) = e^{−inγ} c_n(0)` with
//! `γ = −∫ φ̇ sin²θ dt`. For every built-in schedule `γ = −π`, where the two
//! signs coincide modulo 2π.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use crate::evolve::Trajectory;
use crate::linalg::{inner, wrap_angle};
use crate::model::{Model, ModelParams, Schedule, ScheduleFamily};
use crate::quad::{integrate, integrate_with_breaks};
use crate::{Error, Result, C64};

/// Absolute tolerance for the phase quadratures.
pub const PHASE_TOL: f64 = 1e-9;

/// Sampled loop `R(t) = (g_n cos φ, g_n sin φ, Ω)` on the cylinder of radius `g_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterPath {
    pub times: Vec<f64>,
    pub points: Vec<[f64; 3]>,
    pub period: f64,
    pub phi_m: f64,
    pub g_n: f64,
}

impl ParameterPath {
    /// Largest `|R₁² + R₂² − g_n²|`.
    pub fn cylinder_defect(&self) -> f64 {
        self.points
            .iter()
            .map(|p| (p[0] * p[0] + p[1] * p[1] - self.g_n * self.g_n).abs())
            .fold(0.0, f64::max)
    }

    /// `|R(0) − R(T)|` for a path sampled over the whole period.
    pub fn closure_gap(&self) -> f64 {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt(),
            _ => 0.0,
        }
    }
}

/// Samples the control loop at `samples` uniformly spaced times over `[0, T]`,
/// with the interior sample nearest `T_M` moved onto it so the storage point
/// appears exactly.
pub fn path(schedule: &Schedule, samples: usize) -> Result<ParameterPath> {
    if samples < 3 {
        return Err(Error::InvalidParameter(format!("path needs at least 3 samples, got {samples}")));
    }
    let g = schedule.g_n();
    let period = schedule.period();
    let mut times: Vec<f64> = (0..samples)
        .map(|j| if j + 1 == samples { period } else { period * j as f64 / (samples - 1) as f64 })
        .collect();
    let j_m = ((schedule.t_m() / period * (samples - 1) as f64).round() as usize).clamp(1, samples - 2);
    times[j_m] = schedule.t_m();
    let points = times
        .iter()
        .map(|&t| {
            let (s, c) = schedule.phi(t).sin_cos();
            [g * c, g * s, schedule.omega(t)]
        })
        .collect();
    Ok(ParameterPath { times, points, period, phi_m: schedule.phi_m(), g_n: g })
}

/// `K_mn(t) = −⟨d_m|∂_t d_n⟩` for `m, n ≤ n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionMatrix {
    pub t: f64,
    pub k: DMatrix<C64>,
}

impl ConnectionMatrix {
    pub fn max_diagonal(&self) -> f64 {
        (0..self.k.nrows()).map(|n| self.k[(n, n)].norm()).fold(0.0, f64::max)
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let dim = self.k.nrows();
        (0..dim)
            .flat_map(|m| (0..dim).filter(move |&n| n != m).map(move |n| (m, n)))
            .map(|idx| self.k[idx].norm())
            .fold(0.0, f64::max)
    }

    /// `max |K + K†|`.
    pub fn anti_hermitian_defect(&self) -> f64 {
        crate::linalg::max_abs(&(&self.k + self.k.adjoint()))
    }
}

/// Central-difference connection along a frame path `t ↦ (θ, φ)`.
pub fn connection(
    model: &Model,
    frame: impl Fn(f64) -> (f64, f64),
    t: f64,
    h: f64,
    n_max: usize,
) -> Result<ConnectionMatrix> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("difference step must be positive, got {h}")));
    }
    let at = |s: f64| {
        let (theta, phi) = frame(s);
        model.dark_states(theta, phi, n_max)
    };
    let (minus, centre, plus) = (at(t - h)?, at(t)?, at(t + h)?);
    // the dark-state phase convention is smooth in (θ, φ), so no realignment
    debug_assert!(minus.iter().zip(&plus).all(|(a, b)| inner(a, b).re > 0.0));
    let dim = n_max + 1;
    let mut k = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        let deriv: DVector<C64> = (&plus[n] - &minus[n]) / C64::new(2.0 * h, 0.0);
        for m in 0..dim {
            k[(m, n)] = -inner(&centre[m], &deriv);
        }
    }
    Ok(ConnectionMatrix { t, k })
}

/// Connection along a schedule with the default step `h = T·10⁻⁷`.
pub fn schedule_connection(model: &Model, schedule: &Schedule, t: f64, n_max: usize) -> Result<ConnectionMatrix> {
    connection(model, |s| (schedule.theta(s), schedule.phi(s)), t, schedule.period() * 1e-7, n_max)
}

/// Closed form of the diagonal, `K_nn = i n φ̇ sin²θ`.
pub fn analytic_connection_diagonal(schedule: &Schedule, t: f64, n: usize) -> C64 {
    C64::new(0.0, n as f64 * schedule.delta() * schedule.sin2_theta(t))
}

fn time_breaks(schedule: &Schedule, t: f64) -> Vec<f64> {
    let mut points = vec![0.0];
    if schedule.t_m() < t {
        points.push(schedule.t_m());
    }
    points.push(t);
    points
}

/// `γ(t) = −∫₀ᵗ δ sin²θ(τ) dτ`.
pub fn gamma_time(schedule: &Schedule, t: f64) -> Result<f64> {
    if !(0.0..=schedule.period() * (1.0 + 1e-12)).contains(&t) {
        return Err(Error::InvalidParameter(format!("t = {t} outside [0, {}]", schedule.period())));
    }
    let delta = schedule.delta();
    integrate_with_breaks(|s| -delta * schedule.sin2_theta(s), &time_breaks(schedule, t), PHASE_TOL)
}

/// `γ[C] = −∫₀^{2π} g_n² / (g_n² + F(φ)²) dφ`.
pub fn gamma_loop(f: impl Fn(f64) -> f64, g_n: f64) -> Result<f64> {
    gamma_loop_winding(f, g_n, 1)
}

/// Loop phase for a path winding `cycles` times around the cylinder.
pub fn gamma_loop_winding(f: impl Fn(f64) -> f64, g_n: f64, cycles: u32) -> Result<f64> {
    let g2 = g_n * g_n;
    let integrand = |phi: f64| {
        let omega = f(phi);
        if omega.is_infinite() { 0.0 } else { g2 / (g2 + omega * omega) }
    };
    let breaks: Vec<f64> = (0..=cycles).map(|m| TAU * m as f64).collect();
    Ok(-integrate_with_breaks(integrand, &breaks, PHASE_TOL)?)
}

/// Loop phase of a schedule, `F(φ) = Ω(φ/δ)` over its full φ span.
pub fn schedule_gamma_loop(schedule: &Schedule) -> Result<f64> {
    let g2 = schedule.g_n() * schedule.g_n();
    let span = schedule.phi_span();
    let integrand = |phi: f64| g2 / (g2 + schedule.omega_of_phi(phi).powi(2));
    // a negative δ runs the loop backwards and flips the sign
    Ok(-integrate_with_breaks(integrand, &[0.0, schedule.phi_m(), span], PHASE_TOL)?)
}

/// The cot profile written directly in the loop variable, uncapped.
pub fn cot_profile(g_n: f64) -> impl Fn(f64) -> f64 {
    move |phi: f64| g_n * (phi / 2.0).tan().recip().abs()
}

fn dark_overlap(model: &Model, schedule: &Schedule, psi: &DVector<C64>, t: f64, n: usize) -> Result<C64> {
    let dark = model.dark_states(schedule.theta(t), schedule.phi(t), n)?;
    Ok(inner(&dark[n], psi))
}

/// End-to-end phase `arg⟨d_n(T)|ψ(T)⟩ − arg⟨d_n(0)|ψ(0)⟩` of a trajectory,
/// resolved to the branch nearest `n·(γ(t₁) − γ(t₀))`.
///
/// Fails when the dark-state overlap has shrunk below 0.9 of its initial
/// magnitude, since the phase is then dominated by leakage.
pub fn extract_phase(model: &Model, schedule: &Schedule, traj: &Trajectory, n: usize) -> Result<f64> {
    let (start, end) = (traj.initial(), traj.last());
    let a = dark_overlap(model, schedule, &start.amplitudes, start.time, n)?;
    let b = dark_overlap(model, schedule, &end.amplitudes, end.time, n)?;
    if a.norm() == 0.0 || b.norm() < 0.9 * a.norm() {
        return Err(Error::PhaseUndefined { overlap: if a.norm() == 0.0 { 0.0 } else { b.norm() / a.norm() } });
    }
    let anchor = n as f64 * (gamma_time(schedule, end.time.min(schedule.period()))? - gamma_time(schedule, start.time)?);
    let raw = b.arg() - a.arg();
    Ok(anchor + wrap_angle(raw - anchor))
}

/// Phase of `⟨d_n(t)|ψ(t)⟩` relative to the first sample, unwrapped
/// continuously along the stored samples. This follows the actual dynamics
/// and needs samples dense enough that consecutive phases differ by < π.
pub fn accumulated_phase(model: &Model, schedule: &Schedule, traj: &Trajectory, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(traj.times.len());
    let mut prev: Option<f64> = None;
    let mut acc = 0.0;
    for (&t, psi) in traj.times.iter().zip(&traj.states) {
        let z = dark_overlap(model, schedule, psi, t, n)?;
        if z.norm() == 0.0 {
            return Err(Error::PhaseUndefined { overlap: 0.0 });
        }
        let arg = z.arg();
        if let Some(p) = prev {
            acc += wrap_angle(arg - p);
        }
        prev = Some(arg);
        out.push(acc);
    }
    Ok(out)
}

/// Differences between phase routes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseResiduals {
    /// `γ_loop − γ_time(T)`.
    pub loop_vs_time: f64,
    /// `γ_n − n γ_loop` per extracted `n`.
    pub evolved_vs_loop: Vec<f64>,
    /// `γ_n − n γ_1` per extracted `n`.
    pub linearity: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BerryPhaseResult {
    pub gamma_loop: f64,
    pub gamma_time: f64,
    /// `(n, γ_n)` pairs extracted from evolution.
    pub gamma_evolved: Vec<(usize, f64)>,
    pub residuals: PhaseResiduals,
}

impl BerryPhaseResult {
    pub fn new(gamma_loop: f64, gamma_time: f64, gamma_evolved: Vec<(usize, f64)>) -> Self {
        let gamma_1 = gamma_evolved.iter().find(|(n, _)| *n == 1).map(|&(_, g)| g);
        let residuals = PhaseResiduals {
            loop_vs_time: gamma_loop - gamma_time,
            evolved_vs_loop: gamma_evolved.iter().map(|&(n, g)| g - n as f64 * gamma_loop).collect(),
            linearity: gamma_evolved
                .iter()
                .map(|&(n, g)| gamma_1.map_or(f64::NAN, |g1| g - n as f64 * g1))
                .collect(),
        };
        Self { gamma_loop, gamma_time, gamma_evolved, residuals }
    }
}

/// Geometry-only phases of a schedule (no evolution).
pub fn geometric_phases(schedule: &Schedule) -> Result<BerryPhaseResult> {
    Ok(BerryPhaseResult::new(schedule_gamma_loop(schedule)?, gamma_time(schedule, schedule.period())?, Vec::new()))
}

/// Loop phase of every built-in family at a shared storage fraction.
pub fn family_phase_survey(params: &ModelParams, t_m_fraction: f64, omega_max: f64) -> Result<Vec<(ScheduleFamily, f64)>> {
    ScheduleFamily::ALL
        .iter()
        .map(|&family| {
            let fraction = if family == ScheduleFamily::CotProfile { 0.5 } else { t_m_fraction };
            let schedule = Schedule::from_fraction(family, params, fraction, 1, omega_max)?;
            Ok((family, schedule_gamma_loop(&schedule)?))
        })
        .collect()
}

/// Integral of `−sin²(φ/2)` over a full turn done without [`gamma_loop`]:
/// used as a self-check of the quadrature on the reference profile.
pub fn cot_reference_phase() -> Result<f64> {
    Ok(-integrate(|phi: f64| (phi / 2.0).sin().powi(2), 0.0, TAU, PHASE_TOL)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{integrate_with, DrivenModel, IntegratorOptions, StateVector};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn params(delta: f64, n: usize) -> ModelParams {
        ModelParams::new(1.0, delta, n).unwrap()
    }

    #[test]
    fn frozen_frame_has_zero_connection() {
        let m = Model::new(params(0.1, 3)).unwrap();
        let k = connection(&m, |_| (0.6, 1.1), 3.0, 1e-4, 3).unwrap();
        assert!(crate::linalg::max_abs(&k.k) < 1e-12);
    }

    #[test]
    fn atomic_limit_connection() {
        // θ = π/2, φ = δt: d_n = (−1)ⁿ e^{−inδt}|0,0,n⟩ so −⟨d_n|∂_t d_n⟩ = +i n δ
        let delta = 0.01;
        let m = Model::new(params(delta, 3)).unwrap();
        let k = connection(&m, |t| (FRAC_PI_2, delta * t), 10.0, 1e-3, 3).unwrap();
        for n in 0..=3 {
            let expect = C64::new(0.0, n as f64 * delta);
            assert!((k.k[(n, n)] - expect).norm() < 1e-6 * delta.max(expect.norm()), "n={n}: {}", k.k[(n, n)]);
        }
        assert!(k.max_off_diagonal() < 1e-12);
    }

    #[test]
    fn cot_cycle_connection_is_diagonal_and_anti_hermitian() {
        let p = params(1e-2, 3);
        let m = Model::new(p).unwrap();
        let s = Schedule::from_fraction(ScheduleFamily::CotProfile, &p, 0.5, 1, 100.0).unwrap();
        let times = [0.013, 0.11, 0.19, 0.27, 0.33, 0.41, 0.47, 0.5, 0.52, 0.58, 0.61, 0.66, 0.71, 0.77, 0.81, 0.86, 0.9, 0.93, 0.97, 0.995];
        for frac in times {
            let t = frac * s.period();
            let k = schedule_connection(&m, &s, t, 3).unwrap();
            assert!(k.max_off_diagonal() < 1e-6 * p.delta, "t={t}: {}", k.max_off_diagonal());
            assert!(k.anti_hermitian_defect() < 1e-8);
            for n in 1..=3 {
                let expect = analytic_connection_diagonal(&s, t, n);
                assert!((k.k[(n, n)] - expect).norm() < 1e-6 * n as f64 * p.delta, "t={t} n={n}");
            }
        }
    }

    #[test]
    fn gauge_shift_leaves_connection_unchanged() {
        let p = params(1e-2, 2);
        let m = Model::new(p).unwrap();
        let s = Schedule::from_fraction(ScheduleFamily::SmoothstepTheta, &p, 0.4, 1, 100.0).unwrap();
        for frac in [0.2, 0.55, 0.8] {
            let t = frac * s.period();
            let base = schedule_connection(&m, &s, t, 2).unwrap();
            let shifted = connection(&m, |x| (s.theta(x), s.phi(x) + 0.77), t, s.period() * 1e-7, 2).unwrap();
            for n in 0..=2 {
                assert!((base.k[(n, n)] - shifted.k[(n, n)]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn path_invariants() {
        let p = params(1e-2, 1);
        let s = Schedule::from_fraction(ScheduleFamily::CotProfile, &p, 0.5, 1, 100.0).unwrap();
        let path = path(&s, 101).unwrap();
        assert!(path.cylinder_defect() < 1e-12);
        assert!(path.closure_gap() < 1e-9);
        assert_eq!(path.points[0], [1.0, 0.0, 100.0]);
        assert_eq!(path.points[50][2], 0.0);
        assert!(crate::geometry::path(&s, 2).is_err());
        // off-grid storage time still gets its own row
        let s = Schedule::from_fraction(ScheduleFamily::SmoothstepTheta, &p, 0.3137, 1, 100.0).unwrap();
        let path = crate::geometry::path(&s, 101).unwrap();
        let row = path.times.iter().position(|&t| t == s.t_m()).unwrap();
        assert_eq!(path.points[row][2], 0.0);
        assert!(path.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn gamma_time_examples() {
        let p = params(1e-2, 1);
        let s = Schedule::from_fraction(ScheduleFamily::LinearTheta, &p, 0.5, 1, 100.0).unwrap();
        assert_eq!(gamma_time(&s, 0.0).unwrap(), 0.0);
        // Ω = 0 on a plateau around storage
        let t_m = s.period() / 2.0;
        let plateau =
            Schedule::custom("plateau", &p, t_m, s.period(), 100.0, move |t| if (t - t_m).abs() < 50.0 { 0.0 } else { 1e3 })
                .unwrap();
        let a = gamma_time(&plateau, t_m - 40.0).unwrap();
        let b = gamma_time(&plateau, t_m + 40.0).unwrap();
        assert!((b - a + 0.8).abs() < 1e-8);
    }

    #[test]
    fn gamma_loop_examples() {
        let flat = gamma_loop(|_| 100.0, 1.0).unwrap();
        assert!((flat + TAU / (1.0 + 1e4)).abs() < 1e-12);
        let (p1, p2) = (0.5, 2.0);
        // huge Ω outside the window drives the integrand to 0
        let rect = gamma_loop(|phi| if phi > p1 && phi < p2 { 0.0 } else { f64::INFINITY }, 1.0).unwrap();
        assert!((rect + (p2 - p1)).abs() < 1e-9);
        // closed form: ∫ sin²(φ/2) over a turn is π
        let cot = gamma_loop(cot_profile(1.0), 1.0).unwrap();
        assert!((cot + PI).abs() < 1e-9);
        assert!((cot_reference_phase().unwrap() + PI).abs() < 1e-10);
        let twice = gamma_loop_winding(cot_profile(1.0), 1.0, 2).unwrap();
        assert!((twice + TAU).abs() < 1e-9);
    }

    #[test]
    fn loop_and_time_routes_agree() {
        for delta in [1e-2, 1e-3, -1e-2] {
            let p = params(delta, 1);
            for family in ScheduleFamily::ALL {
                let s = Schedule::from_fraction(family, &p, 0.5, 1, 100.0).unwrap();
                let r = geometric_phases(&s).unwrap();
                assert!(r.residuals.loop_vs_time.abs() < 1e-8, "{family} δ={delta}: {:?}", r);
                assert!(r.gamma_loop * delta.signum() <= 0.0 && r.gamma_loop.abs() < TAU);
            }
        }
        let p = params(1e-2, 1);
        let s = Schedule::from_fraction(ScheduleFamily::SmoothstepTheta, &p, 0.3, 2, 100.0).unwrap();
        let r = geometric_phases(&s).unwrap();
        assert!(r.residuals.loop_vs_time.abs() < 1e-8);
    }

    #[test]
    fn capped_schedule_phase_sits_just_below_minus_pi() {
        let p = params(1e-2, 1);
        let s = Schedule::from_fraction(ScheduleFamily::CotProfile, &p, 0.5, 1, 100.0).unwrap();
        let g = schedule_gamma_loop(&s).unwrap();
        // the cap replaces sin²(φ/2) by 1/(1 + 10⁴) on |tan(φ/2)| < 10⁻²
        let excess = {
            let w = 2.0 * (0.01f64).atan();
            2.0 * (w / (1.0 + 1e4) - (w / 2.0 - w.sin() / 2.0))
        };
        assert!((g + PI + excess).abs() < 1e-8, "{g} {excess}");
    }

    #[test]
    fn survey_covers_all_families() {
        let p = params(1e-2, 1);
        let survey = family_phase_survey(&p, 0.5, 1e6).unwrap();
        assert_eq!(survey.len(), 3);
        for (_, g) in survey {
            assert!((g + PI).abs() < 1e-6);
        }
    }

    #[test]
    fn phase_extraction_on_short_cycle() {
        let p = params(0.02, 3);
        let m = Model::new(p).unwrap();
        let s = Schedule::from_fraction(ScheduleFamily::CotProfile, &p, 0.5, 1, 100.0).unwrap();
        let src = DrivenModel::new(&m, &s);
        let dark = m.dark_states(s.theta(0.0), 0.0, 2).unwrap();
        let psi = (&dark[0] + &dark[1] + &dark[2]) / C64::new(3f64.sqrt(), 0.0);
        let opts = IntegratorOptions { samples: 2001, ..Default::default() };
        let traj = integrate_with(&src, &StateVector::new(psi, 0.0), 0.0, s.period(), &opts, |_, _| {}).unwrap();
        assert_eq!(extract_phase(&m, &s, &traj, 0).unwrap(), 0.0);
        let g1 = extract_phase(&m, &s, &traj, 1).unwrap();
        let g2 = extract_phase(&m, &s, &traj, 2).unwrap();
        assert!((g1 + PI).abs() < 5e-2, "{g1}");
        assert!((g2 - 2.0 * g1).abs() < 1e-1, "{g2}");
        // the continuous phase history runs upward: c_n picks up exp(+i n ∫δ sin²θ)
        let acc = accumulated_phase(&m, &s, &traj, 1).unwrap();
        assert!((acc.last().unwrap() - PI).abs() < 5e-2, "{}", acc.last().unwrap());
    }

    #[test]
    fn extraction_rejects_leaked_states() {
        let p = params(0.5, 2);
        let m = Model::new(p).unwrap();
        let s = Schedule::from_fraction(ScheduleFamily::LinearTheta, &p, 0.5, 1, 100.0).unwrap();
        let src = DrivenModel::new(&m, &s);
        let d1 = m.dark_states(s.theta(0.0), 0.0, 1).unwrap()[1].clone();
        let traj = integrate_with(&src, &StateVector::new(d1, 0.0), 0.0, s.period(), &IntegratorOptions::default(), |_, _| {})
            .unwrap();
        // δ/g_n = 0.5 is far from adiabatic
        assert!(matches!(extract_phase(&m, &s, &traj, 1), Err(Error::PhaseUndefined { .. })));
    }
}
