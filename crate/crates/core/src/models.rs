//! Hyperbolic model problems: linear advection, Burgers, and compressible
//! Euler with an ideal-gas law.
//!
//! Each model supplies its flux, a guaranteed local wave-speed bound used to
//! build the graph viscosity, an entropy/entropy-flux pair with the
//! associated potential, and an admissibility predicate describing its
//! invariant set. Conserved Euler components are ordered
//! `[density, momentum..., total energy]`.

use crate::error::{Error, Result};
use crate::state::{vdot, SpatialVec, State};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelKind {
    /// `f(u) = a u` with constant velocity `a`.
    Advection { velocity: SpatialVec },
    /// `f(u) = (u²/2) (1, …, 1)`.
    Burgers,
    /// Ideal-gas Euler equations with ratio of specific heats `gamma`.
    Euler { gamma: f64 },
}

#[derive(Clone, Copy, Debug)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub dim: usize,
    /// Multiplier applied to the local wave-speed bound (>= 1 in practice;
    /// 1.0 uses the bound as-is).
    pub wave_speed_safety: f64,
}

impl ModelSpec {
    pub fn advection(dim: usize, velocity: &[f64]) -> Result<Self> {
        check_dim(dim)?;
        if velocity.len() != dim {
            return Err(Error::config(format!(
                "advection velocity has {} entries but dim = {dim}",
                velocity.len()
            )));
        }
        let mut a = [0.0; 2];
        a[..dim].copy_from_slice(velocity);
        Ok(ModelSpec {
            kind: ModelKind::Advection { velocity: a },
            dim,
            wave_speed_safety: 1.0,
        })
    }

    pub fn burgers(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(ModelSpec {
            kind: ModelKind::Burgers,
            dim,
            wave_speed_safety: 1.0,
        })
    }

    pub fn euler(dim: usize, gamma: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::config(format!("gamma must exceed 1, got {gamma}")));
        }
        Ok(ModelSpec {
            kind: ModelKind::Euler { gamma },
            dim,
            wave_speed_safety: 1.0,
        })
    }

    /// Number of conserved components.
    pub fn components(&self) -> usize {
        match self.kind {
            ModelKind::Euler { .. } => self.dim + 2,
            _ => 1,
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.components() == 1
    }

    pub fn gamma(&self) -> Option<f64> {
        match self.kind {
            ModelKind::Euler { gamma } => Some(gamma),
            _ => None,
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::config(format!("dim must be 1 or 2, got {dim}")))
    }
}

/// Flux tensor at a state: one conserved-variable column per space direction.
#[derive(Clone, Copy, Debug)]
pub struct Flux {
    pub cols: [State; 2],
    dim: usize,
}

impl Flux {
    /// Directional projection `f(u) · c` for a spatial vector `c`.
    #[inline]
    pub fn dot(&self, c: SpatialVec) -> State {
        let mut out = self.cols[0] * c[0];
        if self.dim == 2 {
            out += self.cols[1] * c[1];
        }
        out
    }
}

/// Evaluate the flux `f(u)`.
pub fn flux(model: &ModelSpec, u: &State) -> Result<Flux> {
    let m = model.components();
    if u.len() != m {
        return Err(Error::Dimension(format!(
            "state has {} components, model needs {m}",
            u.len()
        )));
    }
    let mut cols = [State::zeros(m), State::zeros(m)];
    match model.kind {
        ModelKind::Advection { velocity } => {
            for k in 0..model.dim {
                cols[k] = *u * velocity[k];
            }
        }
        ModelKind::Burgers => {
            let half_sq = State::scalar(0.5 * u[0] * u[0]);
            for k in 0..model.dim {
                cols[k] = half_sq;
            }
        }
        ModelKind::Euler { gamma } => {
            let (rho, vel, p) = primitive_from_conserved_inner(model.dim, gamma, u)?;
            let e = u[m - 1];
            for k in 0..model.dim {
                let mut col = State::zeros(m);
                col[0] = rho * vel[k];
                for l in 0..model.dim {
                    col[1 + l] = rho * vel[k] * vel[l];
                }
                col[1 + k] += p;
                col[m - 1] = vel[k] * (e + p);
                cols[k] = col;
            }
        }
    }
    Ok(Flux { cols, dim: model.dim })
}

/// Guaranteed upper bound for the fastest wave of the 1D Riemann problem in
/// unit direction `n` between `u_l` and `u_r`, times the configured safety
/// multiplier.
pub fn max_wave_speed(model: &ModelSpec, u_l: &State, u_r: &State, n: SpatialVec) -> Result<f64> {
    let lambda = match model.kind {
        ModelKind::Advection { velocity } => vdot(velocity, n).abs(),
        ModelKind::Burgers => {
            let dir = n[0] + if model.dim == 2 { n[1] } else { 0.0 };
            u_l[0].abs().max(u_r[0].abs()) * dir.abs()
        }
        ModelKind::Euler { gamma } => {
            let (rho_l, v_l, p_l) = primitive_from_conserved_inner(model.dim, gamma, u_l)?;
            let (rho_r, v_r, p_r) = primitive_from_conserved_inner(model.dim, gamma, u_r)?;
            if rho_l <= 0.0 || p_l < 0.0 || rho_r <= 0.0 || p_r < 0.0 {
                return Err(Error::inadmissible(
                    None,
                    format!("wave-speed bound needs admissible endpoints (rho_l={rho_l}, p_l={p_l}, rho_r={rho_r}, p_r={p_r})"),
                ));
            }
            let c_l = (gamma * p_l / rho_l).sqrt();
            let c_r = (gamma * p_r / rho_r).sqrt();
            (vdot(v_l, n).abs() + c_l).max(vdot(v_r, n).abs() + c_r)
        }
    };
    Ok(model.wave_speed_safety * lambda)
}

/// An entropy `η(u)`, its variables `v = η'(u)`, entropy flux `q(u)`, and
/// flux potential `ψ(u)` satisfying `ψ = v·f(u) - q` componentwise in space.
#[derive(Clone, Copy, Debug)]
pub struct EntropyPairEval {
    pub eta: f64,
    pub v: State,
    pub q: SpatialVec,
    pub psi: SpatialVec,
}

/// Evaluate the model's entropy pair at `u`.
///
/// Scalar models use the square entropy `η = u²/2`; Euler uses the physical
/// specific-entropy pair `η = -ρ s / (γ-1)` with `s = ln(p ρ^{-γ})`, whose
/// flux potential is the momentum.
pub fn entropy_pair(model: &ModelSpec, u: &State) -> Result<EntropyPairEval> {
    let m = model.components();
    if u.len() != m {
        return Err(Error::Dimension(format!(
            "state has {} components, model needs {m}",
            u.len()
        )));
    }
    match model.kind {
        ModelKind::Advection { velocity } => {
            let w = u[0];
            let mut q = [0.0; 2];
            let mut psi = [0.0; 2];
            for k in 0..model.dim {
                q[k] = velocity[k] * 0.5 * w * w;
                psi[k] = velocity[k] * 0.5 * w * w;
            }
            Ok(EntropyPairEval {
                eta: 0.5 * w * w,
                v: State::scalar(w),
                q,
                psi,
            })
        }
        ModelKind::Burgers => {
            let w = u[0];
            let mut q = [0.0; 2];
            let mut psi = [0.0; 2];
            for k in 0..model.dim {
                q[k] = w * w * w / 3.0;
                psi[k] = w * w * w / 6.0;
            }
            Ok(EntropyPairEval {
                eta: 0.5 * w * w,
                v: State::scalar(w),
                q,
                psi,
            })
        }
        ModelKind::Euler { gamma } => {
            let (rho, vel, p) = primitive_from_conserved_inner(model.dim, gamma, u)?;
            if rho <= 0.0 || p <= 0.0 {
                return Err(Error::inadmissible(
                    None,
                    format!("entropy pair needs rho > 0 and p > 0 (rho={rho}, p={p})"),
                ));
            }
            let s = (p * rho.powf(-gamma)).ln();
            let gm1 = gamma - 1.0;
            let eta = -rho * s / gm1;
            let speed_sq = vdot(vel, vel);
            let mut v = State::zeros(m);
            v[0] = (gamma - s) / gm1 - rho * speed_sq / (2.0 * p);
            for k in 0..model.dim {
                v[1 + k] = rho * vel[k] / p;
            }
            v[m - 1] = -rho / p;
            let mut q = [0.0; 2];
            let mut psi = [0.0; 2];
            for k in 0..model.dim {
                q[k] = eta * vel[k];
                psi[k] = rho * vel[k];
            }
            Ok(EntropyPairEval { eta, v, q, psi })
        }
    }
}

/// Thresholds defining the admissible set checked during time stepping.
#[derive(Clone, Copy, Debug)]
pub struct AdmissibilityParams {
    /// Lower bound for density (Euler).
    pub rho_floor: f64,
    /// Lower bound for pressure (Euler).
    pub pressure_floor: f64,
    /// Upper bound for nodal total energy (Euler); `INFINITY` disables it.
    pub energy_cap: f64,
    /// Optional `[lo, hi]` invariant interval for scalar models.
    pub scalar_bounds: Option<[f64; 2]>,
}

impl Default for AdmissibilityParams {
    fn default() -> Self {
        AdmissibilityParams {
            rho_floor: 1e-12,
            pressure_floor: 1e-12,
            energy_cap: f64::INFINITY,
            scalar_bounds: None,
        }
    }
}

/// Check membership of `u` in the model's admissible set; `Err` carries a
/// description of the first violated bound.
pub fn check_admissible(model: &ModelSpec, u: &State, params: &AdmissibilityParams) -> Result<()> {
    for k in 0..u.len() {
        if !u[k].is_finite() {
            return Err(Error::inadmissible(None, format!("component {k} is {}", u[k])));
        }
    }
    match model.kind {
        ModelKind::Euler { gamma } => {
            let (rho, _, p) = primitive_from_conserved_inner(model.dim, gamma, u)?;
            if rho < params.rho_floor {
                return Err(Error::inadmissible(
                    None,
                    format!("density {rho:.6e} below floor {:.6e}", params.rho_floor),
                ));
            }
            if p < params.pressure_floor {
                return Err(Error::inadmissible(
                    None,
                    format!("pressure {p:.6e} below floor {:.6e}", params.pressure_floor),
                ));
            }
            let e = u[u.len() - 1];
            if e > params.energy_cap {
                return Err(Error::inadmissible(
                    None,
                    format!("energy {e:.6e} above cap {:.6e}", params.energy_cap),
                ));
            }
        }
        _ => {
            if let Some([lo, hi]) = params.scalar_bounds {
                let w = u[0];
                if w < lo || w > hi {
                    return Err(Error::inadmissible(
                        None,
                        format!("value {w:.16e} outside invariant interval [{lo:.16e}, {hi:.16e}]"),
                    ));
                }
            }
        }
    }
    Ok(())
}

pub fn is_admissible(model: &ModelSpec, u: &State, params: &AdmissibilityParams) -> bool {
    check_admissible(model, u, params).is_ok()
}

/// Pressure of a conserved Euler state (error for scalar models).
pub fn pressure(model: &ModelSpec, u: &State) -> Result<f64> {
    match model.kind {
        ModelKind::Euler { gamma } => {
            let (_, _, p) = primitive_from_conserved_inner(model.dim, gamma, u)?;
            Ok(p)
        }
        _ => Err(Error::Unsupported("pressure of a scalar model".into())),
    }
}

/// `(density, velocity, pressure)` of a conserved Euler state.
pub fn primitive_from_conserved(model: &ModelSpec, u: &State) -> Result<(f64, SpatialVec, f64)> {
    match model.kind {
        ModelKind::Euler { gamma } => primitive_from_conserved_inner(model.dim, gamma, u),
        _ => Err(Error::Unsupported(
            "primitive variables of a scalar model".into(),
        )),
    }
}

fn primitive_from_conserved_inner(
    dim: usize,
    gamma: f64,
    u: &State,
) -> Result<(f64, SpatialVec, f64)> {
    let m = dim + 2;
    if u.len() != m {
        return Err(Error::Dimension(format!(
            "Euler state needs {m} components, got {}",
            u.len()
        )));
    }
    let rho = u[0];
    if rho == 0.0 {
        return Err(Error::inadmissible(None, "zero density".to_string()));
    }
    let mut vel = [0.0; 2];
    let mut kinetic = 0.0;
    for k in 0..dim {
        vel[k] = u[1 + k] / rho;
        kinetic += 0.5 * u[1 + k] * vel[k];
    }
    let p = (gamma - 1.0) * (u[m - 1] - kinetic);
    Ok((rho, vel, p))
}

/// Conserved Euler state from `(density, velocity, pressure)`.
pub fn conserved_from_primitive(
    model: &ModelSpec,
    rho: f64,
    vel: SpatialVec,
    p: f64,
) -> Result<State> {
    let gamma = model
        .gamma()
        .ok_or_else(|| Error::Unsupported("conserved state of a scalar model".into()))?;
    let m = model.components();
    let mut u = State::zeros(m);
    u[0] = rho;
    let mut kinetic = 0.0;
    for k in 0..model.dim {
        u[1 + k] = rho * vel[k];
        kinetic += 0.5 * rho * vel[k] * vel[k];
    }
    u[m - 1] = p / (gamma - 1.0) + kinetic;
    Ok(u)
}

/// Sound speed of a conserved Euler state.
pub fn sound_speed(model: &ModelSpec, u: &State) -> Result<f64> {
    let gamma = model
        .gamma()
        .ok_or_else(|| Error::Unsupported("sound speed of a scalar model".into()))?;
    let (rho, _, p) = primitive_from_conserved_inner(model.dim, gamma, u)?;
    if rho <= 0.0 || p < 0.0 {
        return Err(Error::inadmissible(
            None,
            format!("sound speed needs rho > 0, p >= 0 (rho={rho}, p={p})"),
        ));
    }
    Ok((gamma * p / rho).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn advection_flux_and_speed() {
        let model = ModelSpec::advection(2, &[1.0, -2.0]).unwrap();
        let f = flux(&model, &State::scalar(3.0)).unwrap();
        assert_eq!(f.cols[0][0], 3.0);
        assert_eq!(f.cols[1][0], -6.0);
        assert_abs_diff_eq!(f.dot([0.5, 0.25])[0], 1.5 - 1.5);
        let lam = max_wave_speed(&model, &State::scalar(0.0), &State::scalar(9.0), [0.0, 1.0])
            .unwrap();
        assert_abs_diff_eq!(lam, 2.0);
    }

    #[test]
    fn burgers_flux_speed_entropy() {
        let model = ModelSpec::burgers(1).unwrap();
        let f = flux(&model, &State::scalar(1.0)).unwrap();
        assert_abs_diff_eq!(f.cols[0][0], 0.5);
        let lam =
            max_wave_speed(&model, &State::scalar(1.0), &State::scalar(0.0), [1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(lam, 1.0);
        let ep = entropy_pair(&model, &State::scalar(2.0)).unwrap();
        assert_abs_diff_eq!(ep.eta, 2.0);
        assert_abs_diff_eq!(ep.v[0], 2.0);
        assert_abs_diff_eq!(ep.q[0], 8.0 / 3.0);
        assert_abs_diff_eq!(ep.psi[0], 8.0 / 6.0);
    }

    #[test]
    fn euler_primitive_round_trip_and_flux() {
        let model = ModelSpec::euler(1, 1.4).unwrap();
        let u = conserved_from_primitive(&model, 2.0, [0.5, 0.0], 3.0).unwrap();
        assert_abs_diff_eq!(u[2], 3.0 / 0.4 + 0.25, epsilon = 1e-14);
        let (rho, vel, p) = primitive_from_conserved(&model, &u).unwrap();
        assert_abs_diff_eq!(rho, 2.0);
        assert_abs_diff_eq!(vel[0], 0.5);
        assert_abs_diff_eq!(p, 3.0, epsilon = 1e-14);
        let f = flux(&model, &u).unwrap();
        assert_abs_diff_eq!(f.cols[0][0], 1.0);
        assert_abs_diff_eq!(f.cols[0][1], 3.5, epsilon = 1e-14);
        assert_abs_diff_eq!(f.cols[0][2], 0.5 * (u[2] + 3.0), epsilon = 1e-14);
    }

    #[test]
    fn euler_wave_speed_sod_left_state_dominates() {
        let model = ModelSpec::euler(1, 1.4).unwrap();
        let ul = conserved_from_primitive(&model, 1.0, [0.0, 0.0], 1.0).unwrap();
        let ur = conserved_from_primitive(&model, 0.125, [0.0, 0.0], 0.1).unwrap();
        let lam = max_wave_speed(&model, &ul, &ur, [1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(lam, 1.4f64.sqrt(), epsilon = 1e-15);
        // safety multiplier scales the bound
        let mut scaled = model;
        scaled.wave_speed_safety = 1.5;
        let lam2 = max_wave_speed(&scaled, &ul, &ur, [1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(lam2, 1.5 * 1.4f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn euler_entropy_potential_is_momentum() {
        // ψ = v·f − q must reduce to the momentum components.
        let model = ModelSpec::euler(2, 1.4).unwrap();
        for &(rho, vx, vy, p) in &[
            (1.0, 0.0, 0.0, 1.0),
            (2.0, 0.5, -1.25, 3.0),
            (0.125, 4.0, 0.01, 0.1),
        ] {
            let u = conserved_from_primitive(&model, rho, [vx, vy], p).unwrap();
            let ep = entropy_pair(&model, &u).unwrap();
            let f = flux(&model, &u).unwrap();
            for k in 0..2 {
                let vdotf = ep.v.dot(&f.cols[k]);
                assert_abs_diff_eq!(vdotf - ep.q[k], ep.psi[k], epsilon = 1e-12);
                assert_abs_diff_eq!(ep.psi[k], u[1 + k], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn admissibility_checks() {
        let model = ModelSpec::euler(1, 1.4).unwrap();
        let params = AdmissibilityParams::default();
        let ok = conserved_from_primitive(&model, 1.0, [0.0, 0.0], 1.0).unwrap();
        assert!(is_admissible(&model, &ok, &params));
        let mut vacuum = ok;
        vacuum[0] = -1.0;
        assert!(!is_admissible(&model, &vacuum, &params));
        let cold = State::from_slice(&[1.0, 3.0, 1.0]); // kinetic 4.5 > E
        assert!(!is_admissible(&model, &cold, &params));

        let scalar = ModelSpec::burgers(1).unwrap();
        let p = AdmissibilityParams {
            scalar_bounds: Some([0.0, 1.0]),
            ..Default::default()
        };
        assert!(is_admissible(&scalar, &State::scalar(0.5), &p));
        assert!(!is_admissible(&scalar, &State::scalar(1.0 + 1e-9), &p));
    }

    #[test]
    fn scalar_entropy_pair_potential_identity() {
        for model in [
            ModelSpec::advection(1, &[1.5]).unwrap(),
            ModelSpec::burgers(1).unwrap(),
        ] {
            for &w in &[-2.0, -0.3, 0.0, 0.7, 3.0] {
                let u = State::scalar(w);
                let ep = entropy_pair(&model, &u).unwrap();
                let f = flux(&model, &u).unwrap();
                assert_abs_diff_eq!(
                    ep.v[0] * f.cols[0][0] - ep.q[0],
                    ep.psi[0],
                    epsilon = 1e-13
                );
            }
        }
    }
}
