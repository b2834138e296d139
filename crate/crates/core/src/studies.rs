//! Study drivers shared by the CLI and the test suite: single runs with
//! post-run assertions, convergence tables against exact references,
//! consistency-defect scans, and Cesàro (K-convergence) series.

use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::diagnostics::{
    cesaro_average, error_norms, probe_l1_distance, sample_on_probe_grid, ConsistencyAccumulator,
    ConsistencyEntry, ConsistencyReport, DiagnosticsRecord, EocTable, TestFunction,
};
use crate::error::{Error, Result};
use crate::fe::{assemble_fe_operators, verify_operator_identities, FeOperators, IdentityReport};
use crate::ic::{interpolate_initial_condition, InitialCondition};
use crate::mesh::{build_uniform_periodic_mesh, Mesh};
use crate::models::{AdmissibilityParams, ModelSpec};
use crate::output::{
    write_diagnostics_csv, write_field_snapshot, OutputFormat,
};
use crate::riemann::{solve_riemann, PrimitiveState, RiemannSolution};
use crate::scheme::{LimiterConfig, StateField};
use crate::state::State;
use crate::time::{integrate, integrate_observed, StepObserver, Trajectory};

/// Everything a single run produces, plus which configured assertions (if
/// any) failed.
pub struct RunArtifacts {
    pub mesh: Mesh,
    pub ops: FeOperators,
    pub model: ModelSpec,
    pub params: AdmissibilityParams,
    pub initial: StateField,
    pub trajectory: Trajectory,
    pub record: DiagnosticsRecord,
    pub assertion_failures: Vec<String>,
    pub written_files: Vec<PathBuf>,
}

struct Prepared {
    mesh: Mesh,
    ops: FeOperators,
    model: ModelSpec,
    u0: StateField,
    params: AdmissibilityParams,
    limiter: LimiterConfig,
}

fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let mesh = cfg.build_mesh()?;
    let ops = assemble_fe_operators(&mesh)?;
    let model = cfg.build_model()?;
    let extent = cfg.mesh_extent()?;
    let ic = cfg.build_ic(&model, &extent)?;
    // Interpolate under the floor-only parameters, then tighten to the
    // IC-derived bounds if configured.
    let base_params = cfg.admissibility_params(None)?;
    let u0 = interpolate_initial_condition(&mesh, &model, &ic, &base_params)?;
    let params = cfg.admissibility_params(Some(&u0.values))?;
    let limiter = cfg.build_limiter(ops.h_max)?;
    Ok(Prepared { mesh, ops, model, u0, params, limiter })
}

fn evaluate_assertions(
    cfg: &RunConfig,
    model: &ModelSpec,
    params: &AdmissibilityParams,
    record: &DiagnosticsRecord,
) -> Vec<String> {
    let a = &cfg.assertions;
    let mut failures = Vec::new();
    if let Some(tol) = a.conservation_tol {
        let drift = record.max_conservation_drift();
        if !(drift <= tol) {
            failures.push(format!("conservation drift {drift:.3e} exceeds {tol:.3e}"));
        }
    }
    if let Some(tol) = a.entropy_step_tol {
        let eta0 = record.total_entropy.first().copied().unwrap_or(0.0);
        let allowed = tol * eta0.abs().max(f64::MIN_POSITIVE);
        let worst = record.max_entropy_step_increase();
        if !(worst <= allowed) {
            failures.push(format!(
                "entropy increased by {worst:.3e} in one step (allowed {allowed:.3e})"
            ));
        }
    }
    if let Some(tol) = a.scalar_bounds_tol {
        match (model.is_scalar(), params.scalar_bounds) {
            (true, Some([lo, hi])) => {
                for k in 0..record.n_rows() {
                    let (mn, mx) = (record.min_comp[k][0], record.max_comp[k][0]);
                    if mn < lo - tol || mx > hi + tol {
                        failures.push(format!(
                            "state at t = {} leaves [{lo}, {hi}] by more than {tol:.3e} \
                             (min {mn}, max {mx})",
                            record.times[k]
                        ));
                        break;
                    }
                }
            }
            _ => failures.push(
                "scalar_bounds_tol set but no scalar bounds are configured".into(),
            ),
        }
    }
    if let Some(tol) = a.entropy_residual_tol {
        let worst = record
            .max_entropy_residual
            .iter()
            .copied()
            .filter(|r| r.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        if worst.is_finite() && !(worst <= tol) {
            failures.push(format!("entropy residual {worst:.3e} exceeds {tol:.3e}"));
        }
        if !worst.is_finite() {
            failures.push("entropy_residual_tol set but the run recorded no residuals".into());
        }
    }
    if a.require_nondegenerate && !record.all_nondegenerate() {
        failures.push("a logged state left the admissible region".into());
    }
    failures
}

/// One simulation: build, integrate, optionally write snapshot/diagnostic
/// files, and evaluate the configured assertions.
pub fn run_single(cfg: &RunConfig, output_dir: Option<&Path>) -> Result<RunArtifacts> {
    cfg.validate()?;
    let p = prepare(cfg)?;
    let integ = cfg.integrator_config()?;
    let (trajectory, record) =
        integrate(&p.ops, &p.model, &p.u0, &p.limiter, &p.params, &integ)?;

    let mut written_files = Vec::new();
    if let Some(dir) = output_dir {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let prefix = &cfg.output.prefix;
        let formats: Vec<OutputFormat> = cfg
            .output
            .formats
            .iter()
            .map(|f| OutputFormat::from_name(f))
            .collect::<Result<_>>()?;
        for fmt in &formats {
            for (k, snap) in trajectory.snapshots.iter().enumerate() {
                let path = dir.join(format!("{prefix}_snapshot_{k:03}.{}", fmt.extension()));
                write_field_snapshot(&p.mesh, snap, &path, *fmt)?;
                written_files.push(path);
            }
            let path = dir.join(format!("{prefix}_final.{}", fmt.extension()));
            write_field_snapshot(&p.mesh, &trajectory.final_state, &path, *fmt)?;
            written_files.push(path);
        }
        if cfg.output.write_diagnostics {
            let path = dir.join(format!("{prefix}_diagnostics.csv"));
            write_diagnostics_csv(&record, &path)?;
            written_files.push(path);
        }
    }

    let assertion_failures = evaluate_assertions(cfg, &p.model, &p.params, &record);
    Ok(RunArtifacts {
        mesh: p.mesh,
        ops: p.ops,
        model: p.model,
        params: p.params,
        initial: p.u0,
        trajectory,
        record,
        assertion_failures,
        written_files,
    })
}

fn with_cells(cfg: &RunConfig, cells: usize) -> RunConfig {
    let mut c = cfg.clone();
    c.mesh.cells = cells;
    c
}

/// Exact end-state reference for the configured problem, when one exists.
enum Reference {
    /// Advection: the initial profile translated by `v · t_end`.
    Shifted { ic: InitialCondition, t_end: f64 },
    /// 1D Euler shock tube on the periodic domain. The initial data carries
    /// two jumps — the configured split and the wrap-around at x = 0 ≡ L —
    /// each launching its own Riemann fan, so the exact solution (up to the
    /// time the fans meet) samples whichever tube is nearer.
    Riemann {
        split: RiemannSolution,
        wrap: RiemannSolution,
        x_split: f64,
        length: f64,
        t_end: f64,
    },
}

impl Reference {
    fn build(cfg: &RunConfig, model: &ModelSpec, ic: &InitialCondition) -> Result<Reference> {
        let t_end = cfg.integrator.t_end;
        match (&model.kind, ic) {
            (crate::models::ModelKind::Advection { .. }, _) => {
                Ok(Reference::Shifted { ic: ic.clone(), t_end })
            }
            (crate::models::ModelKind::Euler { gamma }, InitialCondition::Sod { x_split }) => {
                let left = PrimitiveState::new(1.0, 0.0, 1.0)?;
                let right = PrimitiveState::new(0.125, 0.0, 0.1)?;
                Ok(Reference::Riemann {
                    split: solve_riemann(*gamma, left, right)?,
                    wrap: solve_riemann(*gamma, right, left)?,
                    x_split: *x_split,
                    length: cfg.mesh_extent()?[0],
                    t_end,
                })
            }
            _ => Err(Error::Unsupported(
                "convergence study needs an exact reference: \
                 advection (any data) or the Euler shock tube"
                    .into(),
            )),
        }
    }

    fn eval(&self, mesh: &Mesh, model: &ModelSpec, x: [f64; 2]) -> Result<State> {
        match self {
            Reference::Shifted { ic, t_end } => {
                let v = match &model.kind {
                    crate::models::ModelKind::Advection { velocity } => *velocity,
                    _ => unreachable!(),
                };
                let moved = mesh.wrap_point([x[0] - v[0] * t_end, x[1] - v[1] * t_end]);
                ic.eval(model, &mesh.extent, moved)
            }
            Reference::Riemann { split, wrap, x_split, length, t_end } => {
                let d_split = x[0] - x_split;
                // Signed distance to the wrap jump at x = 0 ≡ L.
                let d_wrap = if x[0] > 0.5 * length { x[0] - length } else { x[0] };
                if d_split.abs() <= d_wrap.abs() {
                    Ok(split.sample_conserved(d_split / t_end))
                } else {
                    Ok(wrap.sample_conserved(d_wrap / t_end))
                }
            }
        }
    }
}

pub struct ConvergenceOutcome {
    pub table: EocTable,
    /// What the errors were measured against.
    pub reference: String,
}

/// Run the configured problem across mesh levels and tabulate L¹/L²/L∞
/// errors of the first component (the full state for scalar models, density
/// for gas dynamics) against the exact reference.
pub fn convergence_study(cfg: &RunConfig, levels: &[usize]) -> Result<ConvergenceOutcome> {
    if levels.len() < 2 {
        return Err(Error::config("convergence study needs at least two levels"));
    }
    let mut rows = Vec::new();
    let mut reference_desc = String::new();
    for &cells in levels {
        let level_cfg = with_cells(cfg, cells);
        let art = run_single(&level_cfg, None)?;
        let ic = level_cfg.build_ic(&art.model, &level_cfg.mesh_extent()?)?;
        let reference = Reference::build(&level_cfg, &art.model, &ic)?;
        reference_desc = match &reference {
            Reference::Shifted { .. } => "initial data translated by v·t_end".into(),
            Reference::Riemann { .. } => "exact Riemann solution".into(),
        };
        let mesh = &art.mesh;
        let model = &art.model;
        let failure: std::cell::RefCell<Option<Error>> = std::cell::RefCell::new(None);
        let norms = error_norms(mesh, &art.trajectory.final_state.values, &|x| {
            match reference.eval(mesh, model, x) {
                Ok(s) => s,
                Err(e) => {
                    // Reference evaluation is infallible for the supported
                    // cases; remember the error and poison the result.
                    failure.borrow_mut().get_or_insert(e);
                    State::zeros(model.components())
                }
            }
        })?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        rows.push((art.ops.h_max, norms.l1[0], norms.l2[0], norms.linf[0]));
    }
    Ok(ConvergenceOutcome { table: EocTable::from_levels(&rows)?, reference: reference_desc })
}

/// Run the configured problem across mesh levels, accumulating the three
/// consistency defects against the built-in space–time test function.
pub fn consistency_study(cfg: &RunConfig, levels: &[usize]) -> Result<ConsistencyReport> {
    if levels.is_empty() {
        return Err(Error::config("consistency study needs at least one level"));
    }
    let mut rows = Vec::new();
    for &cells in levels {
        let level_cfg = with_cells(cfg, cells);
        level_cfg.validate()?;
        let p = prepare(&level_cfg)?;
        let integ = level_cfg.integrator_config()?;
        let phi = TestFunction::new(p.mesh.dim, integ.t_end)?;
        let mut acc = ConsistencyAccumulator::new(&p.ops, &p.mesh, &p.model, phi)?;
        integrate_observed(&p.ops, &p.model, &p.u0, &p.limiter, &p.params, &integ, &mut acc)?;
        let (r1, r2, r3) = acc.finish();
        rows.push(ConsistencyEntry { h: p.ops.h_max, r1, r2, r3 });
    }
    Ok(ConsistencyReport {
        test_function: "cos(2πx₁)[cos(2πx₂)]·sin²(πt/t_end)".into(),
        rows,
    })
}

pub struct CesaroOutcome {
    /// `‖Avg_N − Avg_{N−1}‖_{L¹}` for N = 2..=levels.
    pub diffs: Vec<f64>,
    pub n_probe: usize,
}

/// Run across levels, sample every final state onto one uniform probe grid,
/// and measure the L¹ Cauchy increments of the running Cesàro averages.
pub fn cesaro_study(cfg: &RunConfig, levels: &[usize], n_probe: usize) -> Result<CesaroOutcome> {
    if levels.len() < 2 {
        return Err(Error::config("cesaro study needs at least two levels"));
    }
    if n_probe == 0 {
        return Err(Error::config("cesaro study needs a positive probe resolution"));
    }
    let mut samples: Vec<Vec<State>> = Vec::new();
    let mut volume = 0.0;
    for &cells in levels {
        let level_cfg = with_cells(cfg, cells);
        let art = run_single(&level_cfg, None)?;
        volume = art.mesh.domain_volume();
        samples.push(sample_on_probe_grid(
            &art.mesh,
            &art.trajectory.final_state.values,
            n_probe,
        )?);
    }
    let mut diffs = Vec::new();
    let mut prev_avg = cesaro_average(&samples[..1])?;
    for n in 2..=samples.len() {
        let avg = cesaro_average(&samples[..n])?;
        diffs.push(probe_l1_distance(&avg, &prev_avg, volume)?);
        prev_avg = avg;
    }
    Ok(CesaroOutcome { diffs, n_probe })
}

/// Assemble a mesh and verify the discrete operator identities.
pub fn check_operators(dim: usize, cells: usize, extent: &[f64]) -> Result<IdentityReport> {
    let mesh = build_uniform_periodic_mesh(dim, cells, extent)?;
    let ops = assemble_fe_operators(&mesh)?;
    Ok(verify_operator_identities(&ops, mesh.domain_volume()))
}

/// Observer adaptor running several observers in sequence.
pub struct ObserverChain<'a> {
    pub observers: Vec<&'a mut dyn StepObserver>,
}

impl StepObserver for ObserverChain<'_> {
    fn observe(&mut self, t: f64, u: &[State], eval: &crate::scheme::RhsEval) -> Result<()> {
        for obs in &mut self.observers {
            obs.observe(t, u, eval)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn advection_cfg(cells: usize, t_end: f64) -> RunConfig {
        parse_config(&format!(
            r#"
            [model]
            kind = "advection"
            velocity = [1.0]

            [mesh]
            dim = 1
            cells = {cells}

            [integrator]
            t_end = {t_end}

            [initial_condition]
            name = "sine_wave"

            [admissibility]
            scalar_bounds_from_ic = true
            "#
        ))
        .unwrap()
    }

    #[test]
    fn single_run_produces_trajectory_and_no_failures() {
        let mut cfg = advection_cfg(32, 0.1);
        cfg.assertions.conservation_tol = Some(1e-11);
        cfg.assertions.scalar_bounds_tol = Some(1e-12);
        let art = run_single(&cfg, None).unwrap();
        assert_eq!(art.trajectory.final_state.time, 0.1);
        assert!(art.assertion_failures.is_empty(), "{:?}", art.assertion_failures);
        assert!(art.record.n_rows() > 2);
        assert!(art.written_files.is_empty());
    }

    #[test]
    fn run_writes_requested_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = advection_cfg(16, 0.05);
        cfg.integrator.snapshots = vec![0.025];
        cfg.output.formats = vec!["csv".into(), "vtk".into()];
        let art = run_single(&cfg, Some(dir.path())).unwrap();
        assert_eq!(art.trajectory.snapshots.len(), 1);
        // 2 fields × 2 formats + diagnostics.
        assert_eq!(art.written_files.len(), 5);
        for f in &art.written_files {
            assert!(f.exists(), "{f:?} missing");
        }
    }

    #[test]
    fn convergence_smoke_shows_decreasing_errors() {
        let cfg = advection_cfg(32, 0.25);
        let out = convergence_study(&cfg, &[32, 64]).unwrap();
        assert_eq!(out.table.rows.len(), 2);
        assert!(out.table.rows[1].l1 < out.table.rows[0].l1);
        assert!(out.reference.contains("translated"));
    }

    #[test]
    fn consistency_smoke_runs_and_reports() {
        let cfg = parse_config(
            r#"
            [model]
            kind = "burgers"

            [mesh]
            dim = 1
            cells = 16

            [limiter]
            mode = "bv_entropy"

            [integrator]
            t_end = 0.05

            [initial_condition]
            name = "sine_wave"
            amplitude = 0.3
            mean = 0.5
            "#,
        )
        .unwrap();
        let report = consistency_study(&cfg, &[16, 32]).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert!(report.rows.iter().all(|r| r.r1.is_finite() && r.r3 >= 0.0));
    }

    #[test]
    fn cesaro_smoke_produces_one_diff_per_extra_level() {
        let cfg = parse_config(
            r#"
            [model]
            kind = "burgers"

            [mesh]
            dim = 1
            cells = 16

            [integrator]
            t_end = 0.05

            [initial_condition]
            name = "sine_wave"
            amplitude = 0.3
            mean = 0.5
            "#,
        )
        .unwrap();
        let out = cesaro_study(&cfg, &[16, 32, 64], 128).unwrap();
        assert_eq!(out.diffs.len(), 2);
        assert!(out.diffs.iter().all(|d| d.is_finite() && *d >= 0.0));
    }

    #[test]
    fn failed_assertion_is_reported_not_fatal() {
        let mut cfg = advection_cfg(32, 0.1);
        cfg.admissibility.scalar_bounds_from_ic = false;
        // Asking for a bounds check without configuring bounds is a
        // reportable failure, not an abort.
        cfg.assertions.scalar_bounds_tol = Some(1e-12);
        let art = run_single(&cfg, None).unwrap();
        assert_eq!(art.assertion_failures.len(), 1);
        assert!(art.assertion_failures[0].contains("no scalar bounds"));
    }

    #[test]
    fn check_operators_passes_on_valid_meshes() {
        let report = check_operators(1, 32, &[1.0]).unwrap();
        assert!(report.pass);
        let report = check_operators(2, 8, &[1.0, 1.0]).unwrap();
        assert!(report.pass);
    }
}
