//! The five subcommands. Each takes a loaded config (plotdata reads the one
//! embedded in a report) and writes its files under an output directory.

use std::f64::consts::TAU;
use std::path::Path;

use holomem::evolve::{adiabaticity_at, DarkSubspace, Trajectory};
use holomem::exactdicke::bosonization_error;
use holomem::geometry::{
    accumulated_phase, cot_profile, cot_reference_phase, extract_phase, family_phase_survey, gamma_loop_winding,
    gamma_time, path, schedule_gamma_loop, BerryPhaseResult,
};
use holomem::linalg::{hermitian_eigen, inner, norm_sqr};
use holomem::model::{Model, Schedule, ScheduleFamily};
use holomem::protocol::{run_cycle, Identity, ProtocolReport};
use holomem::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, RunConfig};
use crate::error::CliError;
use crate::output::{sci, to_json, write_file, Table};

/// Samples used for the plot-data files.
pub const PLOT_SAMPLES: usize = 2001;

fn pairs(z: &[C64]) -> Vec<[f64; 2]> {
    z.iter().map(|z| [z.re, z.im]).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryDoc {
    /// `⟨a†a⟩` at `T_M`.
    pub photon_occupation: f64,
    /// `⟨A†A⟩` at `T_M`.
    pub excited_occupation: f64,
    /// `⟨0,0,n|ψ(T_M)⟩`.
    pub amplitudes: Vec<[f64; 2]>,
}

/// Contents of `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDoc {
    pub schedule_id: String,
    pub delta: f64,
    pub omega_max: f64,
    pub t_m: f64,
    pub period: f64,
    pub input: Vec<[f64; 2]>,
    pub memory: MemoryDoc,
    pub raw_output: Vec<[f64; 2]>,
    pub decoded: Vec<[f64; 2]>,
    pub fidelity_raw: f64,
    pub fidelity_decoded: f64,
    pub discarded_weight: f64,
    pub leakage_max: f64,
    pub adiabaticity_max: f64,
    pub gamma_source: String,
    pub gamma_used: f64,
    pub gamma_loop: f64,
    pub gamma_time: f64,
    pub decoding_helped: bool,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub max_norm_drift: f64,
    pub warnings: Vec<String>,
    /// Occupations `[n_a, n_A, n_C]` labelling the trajectory columns.
    pub basis: Vec<[usize; 3]>,
    pub config: RunConfig,
}

impl ReportDoc {
    fn new(cfg: &RunConfig, exp: &Experiment, model: &Model, r: &ProtocolReport, traj: &Trajectory) -> Result<Self, CliError> {
        let s = &exp.schedule;
        Ok(Self {
            schedule_id: r.schedule_id.clone(),
            delta: r.delta,
            omega_max: r.omega_max,
            t_m: s.t_m(),
            period: s.period(),
            input: pairs(&r.input),
            memory: MemoryDoc {
                photon_occupation: r.memory_photon_occupation,
                excited_occupation: r.memory_excited_occupation,
                amplitudes: pairs(&r.memory_amplitudes),
            },
            raw_output: pairs(&r.raw_output),
            decoded: pairs(&r.decoded),
            fidelity_raw: r.fidelity_raw,
            fidelity_decoded: r.fidelity_decoded,
            discarded_weight: r.discarded_weight,
            leakage_max: r.leakage_max,
            adiabaticity_max: r.adiabaticity_max,
            gamma_source: r.gamma_source.to_string(),
            gamma_used: r.gamma_used,
            gamma_loop: schedule_gamma_loop(s)?,
            gamma_time: gamma_time(s, s.period())?,
            decoding_helped: r.decoding_helped,
            accepted_steps: traj.accepted_steps(),
            rejected_steps: traj.rejected_steps,
            max_norm_drift: traj.max_norm_drift(),
            warnings: r.warnings.clone(),
            basis: model.basis().states().iter().map(|o| [o.photon, o.excited, o.storage]).collect(),
            config: cfg.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolvedPhase {
    pub n: usize,
    /// Endpoint phase of `⟨d_n|ψ⟩`, on the branch nearest `n·γ`.
    pub gamma: Option<f64>,
    /// The same phase tracked continuously along the trajectory samples.
    pub accumulated: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyPhase {
    pub family: String,
    pub gamma_loop: f64,
}

/// Contents of `phase.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDoc {
    pub schedule_id: String,
    pub delta: f64,
    pub omega_max: f64,
    pub cycles: u32,
    pub gamma_loop: f64,
    pub gamma_time: f64,
    pub loop_vs_time: f64,
    /// Closed-form cot profile without the Ω cap; null for other families.
    pub gamma_loop_uncapped: Option<f64>,
    /// `−∫ sin²(φ/2) dφ` over one turn.
    pub cot_reference: f64,
    pub family_survey: Vec<FamilyPhase>,
    pub cylinder_defect: f64,
    pub closure_gap: f64,
    pub gamma_source: Option<String>,
    pub gamma_used: Option<f64>,
    pub gamma_evolved: Vec<EvolvedPhase>,
    /// `γ_n − n γ_loop` for each extracted `n`.
    pub evolved_vs_loop: Vec<f64>,
}

impl PhaseDoc {
    fn geometry(cfg: &RunConfig, exp: &Experiment) -> Result<Self, CliError> {
        let s = &exp.schedule;
        let gamma_loop = schedule_gamma_loop(s)?;
        let gamma_time = gamma_time(s, s.period())?;
        let uncapped = match s.family() {
            Some(ScheduleFamily::CotProfile) => {
                Some(exp.params.delta.signum() * gamma_loop_winding(cot_profile(s.g_n()), s.g_n(), s.cycles())?)
            }
            _ => None,
        };
        let fraction = if s.family() == Some(ScheduleFamily::CotProfile) { 0.5 } else { cfg.schedule.t_m_fraction };
        let family_survey = family_phase_survey(&exp.params, fraction, s.omega_max())?
            .into_iter()
            .map(|(f, g)| FamilyPhase { family: f.to_string(), gamma_loop: g })
            .collect();
        let p = path(s, PLOT_SAMPLES)?;
        Ok(Self {
            schedule_id: s.id().to_string(),
            delta: exp.params.delta,
            omega_max: s.omega_max(),
            cycles: s.cycles(),
            gamma_loop,
            gamma_time,
            loop_vs_time: gamma_loop - gamma_time,
            gamma_loop_uncapped: uncapped,
            cot_reference: cot_reference_phase()?,
            family_survey,
            cylinder_defect: p.cylinder_defect(),
            closure_gap: p.closure_gap(),
            gamma_source: None,
            gamma_used: None,
            gamma_evolved: Vec::new(),
            evolved_vs_loop: Vec::new(),
        })
    }
}

/// Per-sample state and diagnostics: `t, re_0, im_0, …, norm, leakage, q1, q2`.
pub fn trajectory_table(model: &Model, schedule: &Schedule, traj: &Trajectory) -> Result<Table, CliError> {
    let dim = model.basis().dim();
    let mut header = vec!["t".to_string()];
    for i in 0..dim {
        header.push(format!("re_{i}"));
        header.push(format!("im_{i}"));
    }
    header.extend(["norm", "leakage", "q1", "q2"].map(String::from));
    let mut table = Table::new(header);
    for (&t, psi) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![t];
        row.extend(psi.iter().flat_map(|z| [z.re, z.im]));
        let norm2 = norm_sqr(psi);
        let dark = DarkSubspace::at(model, schedule, t)?;
        let (q1, q2) = adiabaticity_at(schedule, model.params(), t);
        row.extend([norm2.sqrt(), (1.0 - dark.weight(psi) / norm2).max(0.0), q1, q2]);
        table.push_values(&row);
    }
    Ok(table)
}

/// Everything `run` produces, before it is written.
pub struct RunOutput {
    pub report: ReportDoc,
    pub phase: PhaseDoc,
    pub trajectory: Table,
}

pub fn simulate(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let exp = Experiment::new(cfg)?;
    let model = Model::new(exp.params)?;
    let cycle = run_cycle(&exp.input, &exp.schedule, &exp.params, exp.gamma_source, &exp.options, &Identity)?;
    let traj = &cycle.trajectory;
    let report = ReportDoc::new(cfg, &exp, &model, &cycle.report, traj)?;

    let mut phase = PhaseDoc::geometry(cfg, &exp)?;
    phase.gamma_source = Some(report.gamma_source.clone());
    phase.gamma_used = Some(report.gamma_used);
    let mut extracted = Vec::new();
    for (n, c) in exp.input.amplitudes().iter().enumerate().skip(1) {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        let entry = match (extract_phase(&model, &exp.schedule, traj, n), accumulated_phase(&model, &exp.schedule, traj, n)) {
            (Ok(g), Ok(acc)) => {
                extracted.push((n, g));
                EvolvedPhase { n, gamma: Some(g), accumulated: acc.last().copied(), error: None }
            }
            (g, acc) => EvolvedPhase {
                n,
                gamma: g.as_ref().ok().copied(),
                accumulated: acc.as_ref().ok().and_then(|a| a.last().copied()),
                error: g.err().or(acc.err()).map(|e| e.to_string()),
            },
        };
        phase.gamma_evolved.push(entry);
    }
    phase.evolved_vs_loop = BerryPhaseResult::new(phase.gamma_loop, phase.gamma_time, extracted).residuals.evolved_vs_loop;

    let trajectory = trajectory_table(&model, &exp.schedule, traj)?;
    Ok(RunOutput { report, phase, trajectory })
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<ReportDoc, CliError> {
    let result = simulate(cfg)?;
    let o = &cfg.output;
    write_file(&out.join(&o.report), &to_json(&result.report))?;
    write_file(&out.join(&o.phase), &to_json(&result.phase))?;
    write_file(&out.join(&o.trajectory), &result.trajectory.to_csv())?;
    Ok(result.report)
}

pub const SWEEP_COLUMNS: [&str; 11] = [
    "index",
    "axis",
    "value",
    "schedule_id",
    "delta",
    "fidelity_raw",
    "fidelity_decoded",
    "leakage_max",
    "q_max",
    "gamma_used",
    "error",
];

fn sweep_point(cfg: &RunConfig) -> Result<ProtocolReport, CliError> {
    let exp = Experiment::new(cfg)?;
    Ok(run_cycle(&exp.input, &exp.schedule, &exp.params, exp.gamma_source, &exp.options, &Identity)?.report)
}

/// One row per axis value, in axis order. Failed points keep their row with
/// NaN results and the error text.
pub fn sweep_table(cfg: &RunConfig, jobs: usize) -> Result<Table, CliError> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("sweep needs a `sweep` section".into()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let rows: Vec<Vec<String>> = pool.install(|| {
        (0..sweep.len())
            .into_par_iter()
            .map(|i| {
                let (point, label) = sweep.point(cfg, i);
                let head = vec![i.to_string(), sweep.axis().to_string(), label];
                let tail = match sweep_point(&point) {
                    Ok(r) => vec![
                        r.schedule_id,
                        sci(r.delta),
                        sci(r.fidelity_raw),
                        sci(r.fidelity_decoded),
                        sci(r.leakage_max),
                        sci(r.adiabaticity_max),
                        sci(r.gamma_used),
                        String::new(),
                    ],
                    Err(e) => {
                        let mut row = vec![point.schedule.family.clone(), sci(point.model.delta)];
                        row.extend(std::iter::repeat_n(sci(f64::NAN), 5));
                        row.push(e.to_string());
                        row
                    }
                };
                head.into_iter().chain(tail).collect()
            })
            .collect()
    });
    let mut table = Table::new(SWEEP_COLUMNS);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(table)
}

/// Writes the sweep CSV, then reports failed points through the exit status.
pub fn sweep(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<Table, CliError> {
    let table = sweep_table(cfg, jobs)?;
    write_file(&out.join(&cfg.output.sweep), &table.to_csv())?;
    let failed = table.rows.iter().filter(|r| !r[10].is_empty()).count();
    if failed > 0 {
        return Err(CliError::SweepPoints { failed, total: table.rows.len() });
    }
    Ok(table)
}

pub fn phase(cfg: &RunConfig, out: &Path) -> Result<PhaseDoc, CliError> {
    let doc = PhaseDoc::geometry(cfg, &Experiment::new(cfg)?)?;
    write_file(&out.join(&cfg.output.phase), &to_json(&doc))?;
    Ok(doc)
}

/// Bosonization errors of the exact finite-N model, and dark-state residuals
/// `max_n ‖H d_n‖/‖H‖` and Gram defects at random `(Ω, φ)` drawn from `seed`.
pub fn validate(cfg: &RunConfig, out: &Path) -> Result<(Table, Table), CliError> {
    let v = cfg.validate.as_ref().ok_or_else(|| CliError::Config("validate needs a `validate` section".into()))?;
    let exp = Experiment::new(cfg)?;

    let mut bosonization = Table::new(["n_atoms", "n", "theta", "phi", "error"]);
    for &n_atoms in &v.n_atoms {
        for &n in &v.excitations {
            if n > n_atoms {
                return Err(CliError::Config(format!("excitation {n} exceeds n_atoms = {n_atoms}")));
            }
            let err = bosonization_error(n_atoms, n, v.theta, v.phi)?;
            bosonization.push(vec![n_atoms.to_string(), n.to_string(), sci(v.theta), sci(v.phi), sci(err)]);
        }
    }

    let model = Model::new(exp.params)?;
    let n_max = exp.params.n_max_total.min(3);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dark = Table::new(["pair", "omega", "phi", "residual", "gram_defect"]);
    for pair in 0..v.random_pairs {
        let omega = cfg.model.omega_max * rng.gen::<f64>();
        let phi = TAU * rng.gen::<f64>();
        let h = model.hamiltonian(omega, phi);
        let (values, _) = hermitian_eigen(&h.to_dense());
        let h_norm = values.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let states = model.dark_states(holomem::model::mixing_angle(omega, exp.params.g_n), phi, n_max)?;
        let residual = states.iter().map(|d| h.apply(d).norm() / h_norm).fold(0.0, f64::max);
        let mut gram = 0.0f64;
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                gram = gram.max((inner(a, b) - target).norm());
            }
        }
        dark.push(vec![pair.to_string(), sci(omega), sci(phi), sci(residual), sci(gram)]);
    }

    write_file(&out.join(&cfg.output.bosonization), &bosonization.to_csv())?;
    write_file(&out.join(&cfg.output.darkstates), &dark.to_csv())?;
    Ok((bosonization, dark))
}

/// Columnar plot data rebuilt from a finished run in `out`:
/// `path.csv` (t, R1, R2, R3), `diagnostics.csv` (t, leakage, q1, q2) and
/// `integrand.csv` (phi, sin2_theta, integrand) whose trapezoid sum over
/// `phi` approximates the loop phase.
pub fn plotdata(out: &Path, report_name: &str) -> Result<(), CliError> {
    let report_path = out.join(report_name);
    let text = std::fs::read_to_string(&report_path).map_err(|_| CliError::MissingInput(report_path.clone()))?;
    let report: ReportDoc =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", report_path.display())))?;
    let cfg = &report.config;
    let exp = Experiment::new(cfg)?;
    let s = &exp.schedule;

    let traj = Table::read(&out.join(&cfg.output.trajectory))?;
    let cols = ["t", "leakage", "q1", "q2"]
        .map(|c| traj.column(c).ok_or_else(|| CliError::Config(format!("trajectory has no `{c}` column"))));
    let mut diagnostics = Table::new(["t", "leakage", "q1", "q2"]);
    let idx: Vec<usize> = cols.into_iter().collect::<Result<_, _>>()?;
    for row in &traj.rows {
        diagnostics.push(idx.iter().map(|&i| row[i].clone()).collect());
    }

    let p = path(s, PLOT_SAMPLES)?;
    let mut path_table = Table::new(["t", "R1", "R2", "R3"]);
    let mut integrand = Table::new(["phi", "sin2_theta", "integrand"]);
    for (&t, r) in p.times.iter().zip(&p.points) {
        path_table.push_values(&[t, r[0], r[1], r[2]]);
        let s2 = s.sin2_theta(t);
        integrand.push_values(&[s.phi(t), s2, -s2]);
    }

    let o = &cfg.output;
    write_file(&out.join(&o.path), &path_table.to_csv())?;
    write_file(&out.join(&o.diagnostics), &diagnostics.to_csv())?;
    write_file(&out.join(&o.integrand), &integrand.to_csv())?;
    Ok(())
}
