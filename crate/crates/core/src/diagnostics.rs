//! Measurable quantities attached to a run: conserved totals, total entropy,
//! the graph-BV functional, consistency defects of the lumped/limited scheme
//! against a smooth test function, error norms against references, Cesàro
//! averages, and the non-degeneracy monitor for gas dynamics.

use crate::error::{Error, Result};
use crate::fe::{d_h_form, FeOperators};
use crate::mesh::Mesh;
use crate::models::{
    entropy_pair, flux, is_admissible, AdmissibilityParams, ModelSpec,
};
use crate::quadrature::{SEG_QP5, TRI_QP5};
use crate::scheme::{RhsEval, StateField};
use crate::state::{SpatialVec, State};

/// Total entropy `Σ_i m_i (η(u_i) + offset)`. The offset shifts the result
/// by `offset · |Ω|` and exists so runs with sign-indefinite entropy can be
/// logged against a positive baseline.
pub fn total_entropy(
    ops: &FeOperators,
    model: &ModelSpec,
    u: &[State],
    offset: f64,
) -> Result<f64> {
    if u.len() != ops.n_nodes {
        return Err(Error::Dimension(format!(
            "field has {} entries for {} nodes",
            u.len(),
            ops.n_nodes
        )));
    }
    let mut acc = 0.0;
    for (i, ui) in u.iter().enumerate() {
        acc += ops.lumped_mass[i] * (entropy_pair(model, ui)?.eta + offset);
    }
    Ok(acc)
}

/// Instantaneous graph-BV integrand `Σ_i Σ_{j≠i} |c_ij| ‖u_j − u_i‖²`.
pub fn bv_integrand(ops: &FeOperators, u: &[State]) -> Result<f64> {
    d_h_form(ops, u, u)
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for k in 1..times.len() {
        acc += 0.5 * (values[k] + values[k - 1]) * (times[k] - times[k - 1]);
    }
    acc
}

/// Per-step log of a run. One row per accepted state, including the initial
/// and final ones; the final row carries `dt = 0`.
#[derive(Clone, Debug)]
pub struct DiagnosticsRecord {
    pub components: usize,
    pub times: Vec<f64>,
    pub dts: Vec<f64>,
    /// `Σ_i m_i u_i` per component.
    pub conserved: Vec<Vec<f64>>,
    /// `Σ_i m_i |u_i|` per component at the first recorded state; the drift
    /// scale of components whose signed total vanishes.
    pub initial_abs_mass: Vec<f64>,
    pub total_entropy: Vec<f64>,
    pub bv_integrand: Vec<f64>,
    pub min_comp: Vec<Vec<f64>>,
    pub max_comp: Vec<Vec<f64>>,
    /// All nodes inside the configured admissible set at this state.
    pub nondegenerate: Vec<bool>,
    /// Richardson residual of the consistent-mass solve (NaN when skipped).
    pub udot_residual: Vec<f64>,
    /// Worst per-edge entropy residual (NaN outside entropy modes).
    pub max_entropy_residual: Vec<f64>,
}

impl DiagnosticsRecord {
    pub fn new(components: usize) -> Self {
        DiagnosticsRecord {
            components,
            times: Vec::new(),
            dts: Vec::new(),
            conserved: Vec::new(),
            initial_abs_mass: Vec::new(),
            total_entropy: Vec::new(),
            bv_integrand: Vec::new(),
            min_comp: Vec::new(),
            max_comp: Vec::new(),
            nondegenerate: Vec::new(),
            udot_residual: Vec::new(),
            max_entropy_residual: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.times.len()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        ops: &FeOperators,
        model: &ModelSpec,
        params: &AdmissibilityParams,
        t: f64,
        dt: f64,
        u: &[State],
        eval: &RhsEval,
    ) -> Result<()> {
        let m = self.components;
        let mut totals = vec![0.0; m];
        let mut mins = vec![f64::INFINITY; m];
        let mut maxs = vec![f64::NEG_INFINITY; m];
        for (i, ui) in u.iter().enumerate() {
            for c in 0..m {
                totals[c] += ops.lumped_mass[i] * ui[c];
                mins[c] = mins[c].min(ui[c]);
                maxs[c] = maxs[c].max(ui[c]);
            }
        }
        if self.times.is_empty() {
            let mut abs_mass = vec![0.0; m];
            for (i, ui) in u.iter().enumerate() {
                for c in 0..m {
                    abs_mass[c] += ops.lumped_mass[i] * ui[c].abs();
                }
            }
            self.initial_abs_mass = abs_mass;
        }
        self.times.push(t);
        self.dts.push(dt);
        self.conserved.push(totals);
        self.total_entropy.push(total_entropy(ops, model, u, 0.0)?);
        self.bv_integrand.push(bv_integrand(ops, u)?);
        self.min_comp.push(mins);
        self.max_comp.push(maxs);
        self.nondegenerate
            .push(u.iter().all(|ui| is_admissible(model, ui, params)));
        self.udot_residual.push(eval.udot_residual.unwrap_or(f64::NAN));
        self.max_entropy_residual
            .push(eval.max_entropy_residual.unwrap_or(f64::NAN));
        Ok(())
    }

    /// `∫₀ᵀ Σ_i Σ_j |c_ij| ‖u_j − u_i‖² dt` by trapezoid over the step log.
    pub fn bv_time_integral(&self) -> f64 {
        trapezoid(&self.times, &self.bv_integrand)
    }

    /// Largest relative departure of any conserved total from its initial
    /// value. Components whose initial total vanishes (e.g. momentum of a
    /// fluid at rest, or a zero-mean scalar) are measured against the largest
    /// of the initial signed totals and absolute masses, so the ratio stays
    /// meaningful instead of dividing by a roundoff-sized total.
    pub fn max_conservation_drift(&self) -> f64 {
        if self.n_rows() == 0 {
            return 0.0;
        }
        let t0 = &self.conserved[0];
        let overall = t0
            .iter()
            .chain(&self.initial_abs_mass)
            .fold(0.0f64, |a, &x| a.max(x.abs()))
            .max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for row in &self.conserved {
            for (c, &v) in row.iter().enumerate() {
                let scale = t0[c].abs().max(overall);
                worst = worst.max((v - t0[c]).abs() / scale);
            }
        }
        worst
    }

    /// Largest single-step increase of the total entropy (negative when the
    /// series is strictly decreasing).
    pub fn max_entropy_step_increase(&self) -> f64 {
        self.total_entropy
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn all_nondegenerate(&self) -> bool {
        self.nondegenerate.iter().all(|&b| b)
    }
}

/// Least-squares slope of `ln e` against `ln h`. `None` when fewer than two
/// points remain after dropping non-positive entries.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(h, e)| h > 0.0 && e > 0.0)
        .map(|&(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

// ---------------------------------------------------------------------------
// Consistency defects

/// Separable space–time test function `φ(x, t) = cos(2πx₁)[cos(2πx₂)] b(t)`
/// with `b(t) = sin²(πt/T)`, so `φ` and `φ̇` vanish at both endpoints and
/// `φ̇` is available in closed form.
#[derive(Clone, Debug)]
pub struct TestFunction {
    pub dim: usize,
    pub t_end: f64,
}

impl TestFunction {
    pub fn new(dim: usize, t_end: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::config(format!("test function dim must be 1 or 2, got {dim}")));
        }
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::config(format!("test function needs t_end > 0, got {t_end}")));
        }
        let f = TestFunction { dim, t_end };
        // Compact support in (0, T): the bump and its derivative must vanish
        // at both ends up to roundoff.
        for t in [0.0, t_end] {
            if f.bump(t).abs() > 1e-12 || f.bump_dot(t).abs() > 1e-12 {
                return Err(Error::config(
                    "test function is not compactly supported in time",
                ));
            }
        }
        Ok(f)
    }

    fn spatial(&self, x: SpatialVec) -> f64 {
        let tau = 2.0 * std::f64::consts::PI;
        let mut v = (tau * x[0]).cos();
        if self.dim == 2 {
            v *= (tau * x[1]).cos();
        }
        v
    }

    fn bump(&self, t: f64) -> f64 {
        let s = (std::f64::consts::PI * t / self.t_end).sin();
        s * s
    }

    fn bump_dot(&self, t: f64) -> f64 {
        let w = std::f64::consts::PI / self.t_end;
        w * (2.0 * w * t).sin()
    }

    pub fn value(&self, x: SpatialVec, t: f64) -> f64 {
        self.spatial(x) * self.bump(t)
    }

    pub fn time_deriv(&self, x: SpatialVec, t: f64) -> f64 {
        self.spatial(x) * self.bump_dot(t)
    }

    pub fn nodal_values(&self, mesh: &Mesh, t: f64) -> Vec<f64> {
        mesh.node_coords.iter().map(|&x| self.value(x, t)).collect()
    }

    pub fn nodal_time_derivs(&self, mesh: &Mesh, t: f64) -> Vec<f64> {
        mesh.node_coords.iter().map(|&x| self.time_deriv(x, t)).collect()
    }
}

/// One consistency-study level: absolute space–time defects of the three
/// scheme ingredients (mass lumping, group flux interpolation, limited
/// graph viscosity), maximized over solution components.
#[derive(Clone, Copy, Debug)]
pub struct ConsistencyEntry {
    pub h: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

#[derive(Clone, Debug)]
pub struct ConsistencyReport {
    pub test_function: String,
    pub rows: Vec<ConsistencyEntry>,
}

impl ConsistencyReport {
    /// Fitted log–log slopes of (R1, R2, R3) against h.
    pub fn slopes(&self) -> [Option<f64>; 3] {
        let pick = |f: fn(&ConsistencyEntry) -> f64| {
            let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.h, f(r))).collect();
            fit_loglog_slope(&pts)
        };
        [pick(|r| r.r1), pick(|r| r.r2), pick(|r| r.r3)]
    }
}

/// Local P1 shape gradients of one element (constant on the element).
fn shape_gradients(coords: &[SpatialVec], vol: f64, dim: usize) -> [SpatialVec; 3] {
    if dim == 1 {
        let h = vol;
        [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0, 0.0]]
    } else {
        let mut g = [[0.0; 2]; 3];
        for k in 0..3 {
            let p1 = coords[(k + 1) % 3];
            let p2 = coords[(k + 2) % 3];
            g[k] = [(p1[1] - p2[1]) / (2.0 * vol), (p2[0] - p1[0]) / (2.0 * vol)];
        }
        g
    }
}

/// Squared H¹ seminorm `Σ_T vol_T ‖∇u_c‖²` of a P1 nodal field, per
/// component.
pub fn h1_seminorm_sq(mesh: &Mesh, u: &[State]) -> Result<Vec<f64>> {
    if u.len() != mesh.n_nodes() {
        return Err(Error::Dimension(format!(
            "field has {} entries for {} nodes",
            u.len(),
            mesh.n_nodes()
        )));
    }
    let m = u[0].len();
    let mut acc = vec![0.0; m];
    for el in 0..mesh.n_elements() {
        let nodes = mesh.element_nodes(el);
        let coords = mesh.element_coords(el);
        let vol = mesh.element_volume(el);
        let g = shape_gradients(coords, vol, mesh.dim);
        for c in 0..m {
            let mut grad = [0.0f64; 2];
            for (a, &node) in nodes.iter().enumerate() {
                grad[0] += u[node][c] * g[a][0];
                grad[1] += u[node][c] * g[a][1];
            }
            acc[c] += vol * (grad[0] * grad[0] + grad[1] * grad[1]);
        }
    }
    Ok(acc)
}

/// Accumulates the three consistency defects over a run by per-step
/// trapezoid integration; feed it to the integrator as a step observer.
pub struct ConsistencyAccumulator<'a> {
    ops: &'a FeOperators,
    mesh: &'a Mesh,
    model: &'a ModelSpec,
    phi: TestFunction,
    prev: Option<(f64, [State; 3])>,
    acc: [State; 3],
}

impl<'a> ConsistencyAccumulator<'a> {
    pub fn new(
        ops: &'a FeOperators,
        mesh: &'a Mesh,
        model: &'a ModelSpec,
        phi: TestFunction,
    ) -> Result<Self> {
        if phi.dim != mesh.dim {
            return Err(Error::config(format!(
                "test function dim {} does not match mesh dim {}",
                phi.dim, mesh.dim
            )));
        }
        let m = model.components();
        Ok(ConsistencyAccumulator {
            ops,
            mesh,
            model,
            phi,
            prev: None,
            acc: [State::zeros(m), State::zeros(m), State::zeros(m)],
        })
    }

    /// Instantaneous integrands (I1, I2, I3) at one state.
    pub fn integrands_at(&self, t: f64, u: &[State], eval: &RhsEval) -> Result<[State; 3]> {
        let m = self.model.components();
        let phid = self.phi.nodal_time_derivs(self.mesh, t);
        let phin = self.phi.nodal_values(self.mesh, t);

        // Mass-lumping defect of (φ̇_h, u_h): the interpolation error of the
        // product integrates to an edge sum weighted by m_ij.
        let mut i1 = State::zeros(m);
        for (e, &(i, j)) in self.ops.edges.iter().enumerate() {
            i1 += (u[j] - u[i]) * (-(self.ops.edge_mass[e]) * (phid[j] - phid[i]));
        }

        // Group-FEM defect: ∫ ∇φ_h · (f(u_h) − I_h f(u_h)) by order-5 Gauss.
        let mut i2 = State::zeros(m);
        for el in 0..self.mesh.n_elements() {
            let nodes = self.mesh.element_nodes(el);
            let coords = self.mesh.element_coords(el);
            let vol = self.mesh.element_volume(el);
            let grads = shape_gradients(coords, vol, self.mesh.dim);
            let nn = self.mesh.nodes_per_element();
            let mut gphi = [0.0f64; 2];
            for a in 0..nn {
                gphi[0] += phin[nodes[a]] * grads[a][0];
                gphi[1] += phin[nodes[a]] * grads[a][1];
            }
            let mut nodal_fdotg: Vec<State> = Vec::with_capacity(nn);
            for a in 0..nn {
                nodal_fdotg.push(flux(self.model, &u[nodes[a]])?.dot(gphi));
            }
            let mut lambdas_ws: Vec<([f64; 3], f64)> = Vec::new();
            if self.mesh.dim == 1 {
                for &(xi, w) in &SEG_QP5 {
                    lambdas_ws.push(([1.0 - xi, xi, 0.0], w));
                }
            } else {
                lambdas_ws.extend_from_slice(&TRI_QP5);
            }
            for (lam, w) in lambdas_ws {
                let mut uq = State::zeros(m);
                let mut interp = State::zeros(m);
                for a in 0..nn {
                    uq += u[nodes[a]] * lam[a];
                    interp += nodal_fdotg[a] * lam[a];
                }
                i2 += (flux(self.model, &uq)?.dot(gphi) - interp) * (vol * w);
            }
        }

        // Limiter defect: Σ_i φ_i Σ_j (1−α_ij) d_ij (u_i − u_j), paired over
        // undirected edges.
        let mut i3 = State::zeros(m);
        for (e, &(i, j)) in self.ops.edges.iter().enumerate() {
            let w = (phin[i] - phin[j]) * (1.0 - eval.edges.alpha[e]) * eval.edges.d[e];
            i3 += (u[i] - u[j]) * w;
        }

        Ok([i1, i2, i3])
    }

    pub fn finish(self) -> (f64, f64, f64) {
        (self.acc[0].abs_max(), self.acc[1].abs_max(), self.acc[2].abs_max())
    }
}

impl crate::time::StepObserver for ConsistencyAccumulator<'_> {
    fn observe(&mut self, t: f64, u: &[State], eval: &RhsEval) -> Result<()> {
        let cur = self.integrands_at(t, u, eval)?;
        if let Some((tp, prev)) = &self.prev {
            let half = 0.5 * (t - tp);
            for k in 0..3 {
                self.acc[k] += (cur[k] + prev[k]) * half;
            }
        }
        self.prev = Some((t, cur));
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Error norms and convergence tables

/// Per-component L¹/L²/L∞ norms of `u_h − reference`, by order-5 Gauss
/// quadrature per element (L∞ over the quadrature points). The reference is
/// called with physical coordinates; periodic references must wrap
/// themselves.
#[derive(Clone, Debug)]
pub struct ErrorNorms {
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    pub linf: Vec<f64>,
}

impl ErrorNorms {
    /// Sum of the per-component L¹ norms.
    pub fn l1_total(&self) -> f64 {
        self.l1.iter().sum()
    }

    pub fn l2_total(&self) -> f64 {
        self.l2.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    pub fn linf_total(&self) -> f64 {
        self.linf.iter().fold(0.0f64, |a, &b| a.max(b))
    }
}

pub fn error_norms(
    mesh: &Mesh,
    u_h: &[State],
    reference: &dyn Fn(SpatialVec) -> State,
) -> Result<ErrorNorms> {
    if u_h.len() != mesh.n_nodes() {
        return Err(Error::Dimension(format!(
            "field has {} entries for {} nodes",
            u_h.len(),
            mesh.n_nodes()
        )));
    }
    let m = u_h[0].len();
    let mut l1 = vec![0.0; m];
    let mut l2 = vec![0.0; m];
    let mut linf = vec![0.0f64; m];
    for el in 0..mesh.n_elements() {
        let nodes = mesh.element_nodes(el);
        let coords = mesh.element_coords(el);
        let vol = mesh.element_volume(el);
        let nn = mesh.nodes_per_element();
        let mut lambdas_ws: Vec<([f64; 3], f64)> = Vec::new();
        if mesh.dim == 1 {
            for &(xi, w) in &SEG_QP5 {
                lambdas_ws.push(([1.0 - xi, xi, 0.0], w));
            }
        } else {
            lambdas_ws.extend_from_slice(&TRI_QP5);
        }
        for (lam, w) in lambdas_ws {
            let mut x = [0.0f64; 2];
            let mut uq = State::zeros(m);
            for a in 0..nn {
                x[0] += lam[a] * coords[a][0];
                x[1] += lam[a] * coords[a][1];
                uq += u_h[nodes[a]] * lam[a];
            }
            let diff = uq - reference(x);
            for c in 0..m {
                let a = diff[c].abs();
                l1[c] += vol * w * a;
                l2[c] += vol * w * a * a;
                linf[c] = linf[c].max(a);
            }
        }
    }
    for c in 0..m {
        l2[c] = l2[c].sqrt();
    }
    Ok(ErrorNorms { l1, l2, linf })
}

#[derive(Clone, Copy, Debug)]
pub struct EocRow {
    pub h: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    /// Orders between this level and the previous (coarser) one.
    pub eoc_l1: Option<f64>,
    pub eoc_l2: Option<f64>,
    pub eoc_linf: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct EocTable {
    pub rows: Vec<EocRow>,
}

impl EocTable {
    /// Build from `(h, L¹, L², L∞)` tuples; `h` must be strictly decreasing.
    pub fn from_levels(levels: &[(f64, f64, f64, f64)]) -> Result<Self> {
        for w in levels.windows(2) {
            if w[1].0 >= w[0].0 {
                return Err(Error::config(
                    "convergence levels must have strictly decreasing h",
                ));
            }
        }
        let order = |ep: f64, ec: f64, hp: f64, hc: f64| -> Option<f64> {
            (ep > 0.0 && ec > 0.0).then(|| (ep / ec).ln() / (hp / hc).ln())
        };
        let mut rows: Vec<EocRow> = Vec::with_capacity(levels.len());
        for (k, &(h, l1, l2, linf)) in levels.iter().enumerate() {
            let (e1, e2, ei) = if k == 0 {
                (None, None, None)
            } else {
                let p = levels[k - 1];
                (
                    order(p.1, l1, p.0, h),
                    order(p.2, l2, p.0, h),
                    order(p.3, linf, p.0, h),
                )
            };
            rows.push(EocRow { h, l1, l2, linf, eoc_l1: e1, eoc_l2: e2, eoc_linf: ei });
        }
        Ok(EocTable { rows })
    }

    /// Fitted slope of the L¹ errors across all levels.
    pub fn fitted_slope_l1(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.h, r.l1)).collect();
        fit_loglog_slope(&pts)
    }
}

// ---------------------------------------------------------------------------
// Cesàro averages on a shared probe grid

/// Uniform probe points (element centers of a virtual grid), identical for
/// every mesh of the same domain — the common ground for comparing runs at
/// different resolutions.
pub fn probe_points(dim: usize, n_per_axis: usize, extent: &SpatialVec) -> Vec<SpatialVec> {
    let n = n_per_axis;
    let mut pts = Vec::new();
    match dim {
        1 => {
            for k in 0..n {
                pts.push([(k as f64 + 0.5) / n as f64 * extent[0], 0.0]);
            }
        }
        _ => {
            for ky in 0..n {
                for kx in 0..n {
                    pts.push([
                        (kx as f64 + 0.5) / n as f64 * extent[0],
                        (ky as f64 + 0.5) / n as f64 * extent[1],
                    ]);
                }
            }
        }
    }
    pts
}

/// Evaluate a nodal field at the shared probe points.
pub fn sample_on_probe_grid(
    mesh: &Mesh,
    field: &[State],
    n_per_axis: usize,
) -> Result<Vec<State>> {
    if field.len() != mesh.n_nodes() {
        return Err(Error::Dimension(format!(
            "field has {} entries for {} nodes",
            field.len(),
            mesh.n_nodes()
        )));
    }
    Ok(probe_points(mesh.dim, n_per_axis, &mesh.extent)
        .into_iter()
        .map(|p| mesh.eval_p1(field, p))
        .collect())
}

/// Pointwise arithmetic mean of sampled fields.
pub fn cesaro_average(fields: &[Vec<State>]) -> Result<Vec<State>> {
    let first = fields
        .first()
        .ok_or_else(|| Error::config("cesaro average of an empty list"))?;
    let n = first.len();
    let m = first.first().map_or(0, |s| s.len());
    for f in fields {
        if f.len() != n || f.first().map_or(0, |s| s.len()) != m {
            return Err(Error::Dimension(
                "cesaro average over mismatched probe grids".into(),
            ));
        }
    }
    let scale = 1.0 / fields.len() as f64;
    let mut avg = vec![State::zeros(m); n];
    for f in fields {
        for (a, s) in avg.iter_mut().zip(f) {
            *a += *s * scale;
        }
    }
    Ok(avg)
}

/// L¹ distance of two probe-grid samples (midpoint rule: every probe point
/// owns an equal share of the domain), components summed.
pub fn probe_l1_distance(a: &[State], b: &[State], domain_volume: f64) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Dimension("probe samples of different lengths".into()));
    }
    let cell = domain_volume / a.len() as f64;
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = *x - *y;
        for c in 0..d.len() {
            acc += cell * d[c].abs();
        }
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Non-degeneracy monitor

#[derive(Clone, Copy, Debug)]
pub struct NondegRow {
    pub time: f64,
    pub min_density: f64,
    pub min_pressure: f64,
    pub max_energy: f64,
    pub max_speed_sq: f64,
    pub ok: bool,
}

#[derive(Clone, Debug)]
pub struct NondegeneracyReport {
    pub rows: Vec<NondegRow>,
    pub all_ok: bool,
    /// Velocity-square bound `2 Ē / ρ̲` implied by the configured region.
    pub speed_sq_bound: f64,
}

/// Scan Euler snapshots for departure from the configured non-degenerate
/// region: `ρ ≥ ρ̲`, `E ≤ Ē`, `p ≥ p̲`, and the implied `|𝐯|² ≤ 2Ē/ρ̲`.
/// Inadmissible states are flagged, not errors — this is the instrument that
/// detects them.
pub fn nondegeneracy_monitor(
    model: &ModelSpec,
    snapshots: &[StateField],
    params: &AdmissibilityParams,
) -> Result<NondegeneracyReport> {
    let gamma = model
        .gamma()
        .ok_or_else(|| Error::Unsupported("non-degeneracy monitor needs the Euler model".into()))?;
    let dim = model.dim;
    let speed_sq_bound = 2.0 * params.energy_cap / params.rho_floor;
    let mut rows = Vec::with_capacity(snapshots.len());
    let mut all_ok = true;
    for snap in snapshots {
        let mut min_rho = f64::INFINITY;
        let mut min_p = f64::INFINITY;
        let mut max_e = f64::NEG_INFINITY;
        let mut max_v2 = 0.0f64;
        for u in &snap.values {
            let rho = u[0];
            let e = u[1 + dim];
            min_rho = min_rho.min(rho);
            max_e = max_e.max(e);
            if rho > 0.0 {
                let mut m2 = 0.0;
                for k in 0..dim {
                    m2 += u[1 + k] * u[1 + k];
                }
                min_p = min_p.min((gamma - 1.0) * (e - 0.5 * m2 / rho));
                max_v2 = max_v2.max(m2 / (rho * rho));
            }
        }
        let ok = min_rho >= params.rho_floor
            && max_e <= params.energy_cap
            && min_p >= params.pressure_floor
            && max_v2 <= speed_sq_bound;
        all_ok &= ok;
        rows.push(NondegRow {
            time: snap.time,
            min_density: min_rho,
            min_pressure: min_p,
            max_energy: max_e,
            max_speed_sq: max_v2,
            ok,
        });
    }
    Ok(NondegeneracyReport { rows, all_ok, speed_sq_bound })
}
