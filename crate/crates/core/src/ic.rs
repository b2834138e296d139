//! Initial data: nodal interpolation of a named profile, checked for
//! admissibility node by node.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::models::{check_admissible, conserved_from_primitive, AdmissibilityParams, ModelSpec};
use crate::scheme::StateField;
use crate::state::{SpatialVec, State};

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    ScalarConstant {
        value: f64,
    },
    /// `mean + amplitude · Π_d sin(2π x_d / L_d)`.
    SineWave {
        amplitude: f64,
        mean: f64,
    },
    /// `upper` on `[from, to)`, `lower` elsewhere (by the first coordinate).
    Step {
        lower: f64,
        upper: f64,
        from: f64,
        to: f64,
    },
    /// Two-frequency smooth profile, for studies needing structure without
    /// symmetry: `mean + amplitude (sin(2πx̂) + cos(4πx̂)/2)`, times
    /// `cos(2πŷ)` in 2D (hatted coordinates are scaled by the extent).
    CompositeSmooth {
        amplitude: f64,
        mean: f64,
    },
    EulerConstant {
        rho: f64,
        velocity: SpatialVec,
        pressure: f64,
    },
    /// Classical shock tube: (1, 0, 1) left of the split, (0.125, 0, 0.1)
    /// right of it, in primitive variables.
    Sod {
        x_split: f64,
    },
    /// Pressurized disk (interval in 1D) in a uniform gas at rest.
    EulerBlast {
        rho: f64,
        p_inner: f64,
        p_outer: f64,
        radius: f64,
        center: SpatialVec,
    },
    /// Shear band with a sinusoidal transverse perturbation; demonstration
    /// case only.
    KelvinHelmholtz2d {
        band_density: f64,
        outer_density: f64,
        shear_velocity: f64,
        perturbation: f64,
        pressure: f64,
    },
}

impl InitialCondition {
    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::ScalarConstant { .. } | InitialCondition::EulerConstant { .. } => {
                "constant"
            }
            InitialCondition::SineWave { .. } => "sine_wave",
            InitialCondition::Step { .. } => "step",
            InitialCondition::CompositeSmooth { .. } => "composite_smooth",
            InitialCondition::Sod { .. } => "sod",
            InitialCondition::EulerBlast { .. } => "euler_blast",
            InitialCondition::KelvinHelmholtz2d { .. } => "kelvin_helmholtz_2d",
        }
    }

    pub fn check_model(&self, model: &ModelSpec) -> Result<()> {
        let scalar_ic = matches!(
            self,
            InitialCondition::ScalarConstant { .. }
                | InitialCondition::SineWave { .. }
                | InitialCondition::Step { .. }
                | InitialCondition::CompositeSmooth { .. }
        );
        if scalar_ic != model.is_scalar() {
            return Err(Error::config(format!(
                "initial condition '{}' does not fit the configured model",
                self.name()
            )));
        }
        if matches!(self, InitialCondition::Sod { .. }) && model.dim != 1 {
            return Err(Error::config("sod initial data is one-dimensional"));
        }
        if matches!(self, InitialCondition::KelvinHelmholtz2d { .. }) && model.dim != 2 {
            return Err(Error::config("kelvin_helmholtz_2d needs a 2D mesh"));
        }
        Ok(())
    }

    /// Pointwise value of the profile at a physical coordinate.
    pub fn eval(&self, model: &ModelSpec, extent: &SpatialVec, x: SpatialVec) -> Result<State> {
        use std::f64::consts::PI;
        self.check_model(model)?;
        let tau = 2.0 * PI;
        match *self {
            InitialCondition::ScalarConstant { value } => Ok(State::scalar(value)),
            InitialCondition::SineWave { amplitude, mean } => {
                let mut v = amplitude;
                for d in 0..model.dim {
                    v *= (tau * x[d] / extent[d]).sin();
                }
                Ok(State::scalar(mean + v))
            }
            InitialCondition::Step { lower, upper, from, to } => {
                Ok(State::scalar(if (from..to).contains(&x[0]) { upper } else { lower }))
            }
            InitialCondition::CompositeSmooth { amplitude, mean } => {
                let xs = x[0] / extent[0];
                let mut v = (tau * xs).sin() + 0.5 * (2.0 * tau * xs).cos();
                if model.dim == 2 {
                    v *= (tau * x[1] / extent[1]).cos();
                }
                Ok(State::scalar(mean + amplitude * v))
            }
            InitialCondition::EulerConstant { rho, velocity, pressure } => {
                conserved_from_primitive(model, rho, velocity, pressure)
            }
            InitialCondition::Sod { x_split } => {
                if x[0] < x_split {
                    conserved_from_primitive(model, 1.0, [0.0, 0.0], 1.0)
                } else {
                    conserved_from_primitive(model, 0.125, [0.0, 0.0], 0.1)
                }
            }
            InitialCondition::EulerBlast { rho, p_inner, p_outer, radius, center } => {
                let mut r2 = 0.0;
                for d in 0..model.dim {
                    let dx = x[d] - center[d];
                    r2 += dx * dx;
                }
                let p = if r2.sqrt() <= radius { p_inner } else { p_outer };
                conserved_from_primitive(model, rho, [0.0, 0.0], p)
            }
            InitialCondition::KelvinHelmholtz2d {
                band_density,
                outer_density,
                shear_velocity,
                perturbation,
                pressure,
            } => {
                let in_band = (x[1] - 0.5 * extent[1]).abs() < 0.25 * extent[1];
                let (rho, vx) = if in_band {
                    (band_density, shear_velocity)
                } else {
                    (outer_density, -shear_velocity)
                };
                let vy = perturbation * (2.0 * tau * x[0] / extent[0]).sin();
                conserved_from_primitive(model, rho, [vx, vy], pressure)
            }
        }
    }
}

/// Nodal interpolation `u_i = u₀(x_i)` with a post-hoc admissibility sweep;
/// the error names the offending node.
pub fn interpolate_initial_condition(
    mesh: &Mesh,
    model: &ModelSpec,
    ic: &InitialCondition,
    params: &AdmissibilityParams,
) -> Result<StateField> {
    ic.check_model(model)?;
    if model.dim != mesh.dim {
        return Err(Error::Dimension(format!(
            "model dim {} vs mesh dim {}",
            model.dim, mesh.dim
        )));
    }
    let mut values = Vec::with_capacity(mesh.n_nodes());
    for (i, &x) in mesh.node_coords.iter().enumerate() {
        let u = ic.eval(model, &mesh.extent, x)?;
        check_admissible(model, &u, params).map_err(|e| {
            Error::inadmissible(
                Some(i),
                format!("initial value at node {i} ({:?}): {e}", &x[..mesh.dim]),
            )
        })?;
        values.push(u);
    }
    Ok(StateField::new(values, 0.0))
}

/// Componentwise range `[min, max]` of a scalar field — the natural
/// invariant interval for scalar problems.
pub fn scalar_range(field: &[State]) -> Option<[f64; 2]> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in field {
        lo = lo.min(s[0]);
        hi = hi.max(s[0]);
    }
    (lo <= hi).then_some([lo, hi])
}
