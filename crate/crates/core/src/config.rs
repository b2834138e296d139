//! TOML run configuration. Every section rejects unknown keys, so a
//! misspelled option fails loudly instead of silently running defaults.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ic::InitialCondition;
use crate::mesh::{build_uniform_periodic_mesh, Mesh};
use crate::models::{AdmissibilityParams, ModelSpec};
use crate::scheme::{AlphaOverride, BoundStencil, LimiterConfig, LimiterMode};
use crate::state::{SpatialVec, State};
use crate::time::{SspMethod, TimeIntegratorConfig};

fn default_threads() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub mesh: MeshSection,
    #[serde(default)]
    pub limiter: LimiterSection,
    pub integrator: IntegratorSection,
    pub initial_condition: IcSection,
    #[serde(default)]
    pub admissibility: AdmissibilitySection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub assertions: AssertionsSection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wave_speed_safety: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub dim: usize,
    pub cells: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<Vec<f64>>,
}

fn default_limiter_mode() -> String {
    "mcl".into()
}
fn default_entropy_margin() -> f64 {
    1e-3
}
fn default_bound_stencil() -> String {
    "nodal_plus_bar_states".into()
}
fn default_richardson_sweeps() -> usize {
    5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimiterSection {
    #[serde(default = "default_limiter_mode")]
    pub mode: String,
    #[serde(default = "default_entropy_margin")]
    pub entropy_margin: f64,
    #[serde(default = "default_bound_stencil")]
    pub bound_stencil: String,
    #[serde(default = "default_richardson_sweeps")]
    pub richardson_sweeps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_override: Option<AlphaOverrideSection>,
}

impl Default for LimiterSection {
    fn default() -> Self {
        LimiterSection {
            mode: default_limiter_mode(),
            entropy_margin: default_entropy_margin(),
            bound_stencil: default_bound_stencil(),
            richardson_sweeps: default_richardson_sweeps(),
            alpha_override: None,
        }
    }
}

/// `alpha_override = "one_minus_h"` or `alpha_override = { constant = 0.5 }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaOverrideSection {
    Named(String),
    Constant { constant: f64 },
}

fn default_method() -> String {
    "ssp_rk3".into()
}
fn default_cfl() -> f64 {
    0.9
}
fn default_max_steps() -> usize {
    10_000_000
}
fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_end: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default = "default_true")]
    pub stage_admissibility_check: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_dt: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcSection {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pressure: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_split: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_inner: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_outer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band_density: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_density: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shear_velocity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<f64>,
}

fn default_rho_floor() -> f64 {
    1e-12
}
fn default_pressure_floor() -> f64 {
    1e-12
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmissibilitySection {
    #[serde(default = "default_rho_floor")]
    pub rho_floor: f64,
    #[serde(default = "default_pressure_floor")]
    pub pressure_floor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scalar_bounds: Option<[f64; 2]>,
    /// Pin the scalar invariant interval to the initial data's range
    /// (± a 1e-12 absolute slack).
    #[serde(default)]
    pub scalar_bounds_from_ic: bool,
}

impl Default for AdmissibilitySection {
    fn default() -> Self {
        AdmissibilitySection {
            rho_floor: default_rho_floor(),
            pressure_floor: default_pressure_floor(),
            energy_cap: None,
            scalar_bounds: None,
            scalar_bounds_from_ic: false,
        }
    }
}

fn default_output_dir() -> String {
    "out".into()
}
fn default_formats() -> Vec<String> {
    vec!["csv".into()]
}
fn default_prefix() -> String {
    "run".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_output_dir")]
    pub dir: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
    #[serde(default = "default_true")]
    pub write_diagnostics: bool,
    #[serde(default = "default_prefix")]
    pub prefix: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_output_dir(),
            formats: default_formats(),
            write_diagnostics: true,
            prefix: default_prefix(),
        }
    }
}

/// Optional post-run checks; the CLI exits nonzero when an enabled one
/// fails. Absent keys check nothing.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssertionsSection {
    /// Max relative drift of any conserved total.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conservation_tol: Option<f64>,
    /// Max per-step entropy increase, relative to |η_Ω(0)|.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_step_tol: Option<f64>,
    /// Max violation of the scalar invariant interval at any logged state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scalar_bounds_tol: Option<f64>,
    /// Max per-edge entropy residual (entropy modes).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_residual_tol: Option<f64>,
    /// Every logged state inside the admissible set.
    #[serde(default)]
    pub require_nondegenerate: bool,
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig =
        toml::from_str(text).map_err(|e| Error::config(format!("config parse error: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Full semantic validation; exercised by `parse_config` so range errors
    /// surface at parse time.
    pub fn validate(&self) -> Result<()> {
        let model = self.build_model()?;
        let extent = self.mesh_extent()?;
        self.build_ic(&model, &extent)?;
        // A unit placeholder spacing: the real one is substituted when a
        // mesh exists, and never changes validity.
        self.build_limiter(1.0)?;
        self.integrator_config()?;
        self.admissibility_params(None)?;
        if self.threads == 0 {
            return Err(Error::config("threads must be at least 1"));
        }
        for f in &self.output.formats {
            if f != "csv" && f != "vtk" {
                return Err(Error::config(format!(
                    "unknown output format '{f}' (expected csv or vtk)"
                )));
            }
        }
        if let Some(t) = self.assertions.conservation_tol {
            if !(t > 0.0) {
                return Err(Error::config("conservation_tol must be positive"));
            }
        }
        Ok(())
    }

    pub fn mesh_extent(&self) -> Result<Vec<f64>> {
        let dim = self.mesh.dim;
        if dim != 1 && dim != 2 {
            return Err(Error::config(format!("mesh dim must be 1 or 2, got {dim}")));
        }
        match &self.mesh.extent {
            None => Ok(vec![1.0; dim]),
            Some(e) if e.len() == dim && e.iter().all(|&x| x > 0.0 && x.is_finite()) => {
                Ok(e.clone())
            }
            Some(e) => Err(Error::config(format!(
                "mesh extent {e:?} must list {dim} positive lengths"
            ))),
        }
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        let extent = self.mesh_extent()?;
        build_uniform_periodic_mesh(self.mesh.dim, self.mesh.cells, &extent)
    }

    pub fn build_model(&self) -> Result<ModelSpec> {
        let dim = self.mesh.dim;
        let m = &self.model;
        let mut spec = match m.kind.as_str() {
            "advection" => {
                let v = m.velocity.as_ref().ok_or_else(|| {
                    Error::config("model.velocity is required for advection")
                })?;
                if m.gamma.is_some() {
                    return Err(Error::config("model.gamma does not apply to advection"));
                }
                if v.len() != dim {
                    return Err(Error::config(format!(
                        "model.velocity has {} entries for a {dim}D mesh",
                        v.len()
                    )));
                }
                ModelSpec::advection(dim, v)?
            }
            "burgers" => {
                if m.velocity.is_some() || m.gamma.is_some() {
                    return Err(Error::config(
                        "model.velocity / model.gamma do not apply to burgers",
                    ));
                }
                ModelSpec::burgers(dim)?
            }
            "euler" => {
                if m.velocity.is_some() {
                    return Err(Error::config("model.velocity does not apply to euler"));
                }
                let gamma = m
                    .gamma
                    .ok_or_else(|| Error::config("model.gamma is required for euler"))?;
                ModelSpec::euler(dim, gamma)?
            }
            other => {
                return Err(Error::config(format!(
                    "unknown model kind '{other}' (expected advection, burgers, or euler)"
                )))
            }
        };
        if let Some(s) = m.wave_speed_safety {
            if !(s >= 1.0) || !s.is_finite() {
                return Err(Error::config(format!(
                    "model.wave_speed_safety must be ≥ 1, got {s}"
                )));
            }
            spec.wave_speed_safety = s;
        }
        Ok(spec)
    }

    pub fn build_limiter(&self, h_max: f64) -> Result<LimiterConfig> {
        let l = &self.limiter;
        let mode = match l.mode.as_str() {
            "target" => LimiterMode::Target,
            "low_order" => LimiterMode::LowOrder,
            "mcl" => LimiterMode::Mcl,
            "mcl_entropy" => LimiterMode::MclEntropy,
            "bv_entropy" => LimiterMode::BvEntropy,
            other => {
                return Err(Error::config(format!("unknown limiter mode '{other}'")))
            }
        };
        let bound_stencil = match l.bound_stencil.as_str() {
            "nodal" => BoundStencil::Nodal,
            "nodal_plus_bar_states" => BoundStencil::NodalPlusBarStates,
            other => {
                return Err(Error::config(format!("unknown bound stencil '{other}'")))
            }
        };
        let alpha_override = match &l.alpha_override {
            None => None,
            Some(AlphaOverrideSection::Named(n)) if n == "one_minus_h" => {
                Some(AlphaOverride::OneMinusH)
            }
            Some(AlphaOverrideSection::Named(n)) => {
                return Err(Error::config(format!(
                    "unknown alpha_override '{n}' (expected one_minus_h or {{ constant = c }})"
                )))
            }
            Some(AlphaOverrideSection::Constant { constant }) => {
                Some(AlphaOverride::Constant(*constant))
            }
        };
        let cfg = LimiterConfig {
            mode,
            entropy_margin: l.entropy_margin,
            bound_stencil,
            richardson_sweeps: l.richardson_sweeps,
            alpha_override,
            h_for_override: h_max,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn integrator_config(&self) -> Result<TimeIntegratorConfig> {
        let i = &self.integrator;
        let method = match i.method.as_str() {
            "forward_euler" => SspMethod::ForwardEuler,
            "ssp_rk2" => SspMethod::SspRk2,
            "ssp_rk3" => SspMethod::SspRk3,
            other => {
                return Err(Error::config(format!(
                    "unknown integrator method '{other}'"
                )))
            }
        };
        let cfg = TimeIntegratorConfig {
            method,
            cfl_safety: i.cfl,
            t_end: i.t_end,
            max_steps: i.max_steps,
            stage_admissibility_check: i.stage_admissibility_check,
            max_dt: i.max_dt.unwrap_or(f64::INFINITY),
            snapshot_times: i.snapshots.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn build_ic(&self, model: &ModelSpec, extent: &[f64]) -> Result<InitialCondition> {
        let s = &self.initial_condition;
        let allowed: &[&str] = match s.name.as_str() {
            "constant" => {
                if model.is_scalar() {
                    &["value"]
                } else {
                    &["rho", "velocity", "pressure"]
                }
            }
            "sine_wave" => &["amplitude", "mean"],
            "step" => &["lower", "upper", "from", "to"],
            "composite_smooth" => &["amplitude", "mean"],
            "sod" => &["x_split"],
            "euler_blast" => &["rho", "p_inner", "p_outer", "radius", "center"],
            "kelvin_helmholtz_2d" => &[
                "band_density",
                "outer_density",
                "shear_velocity",
                "perturbation",
                "pressure",
            ],
            other => {
                return Err(Error::config(format!(
                    "unknown initial condition '{other}'"
                )))
            }
        };
        for (key, set) in [
            ("value", s.value.is_some()),
            ("amplitude", s.amplitude.is_some()),
            ("mean", s.mean.is_some()),
            ("lower", s.lower.is_some()),
            ("upper", s.upper.is_some()),
            ("from", s.from.is_some()),
            ("to", s.to.is_some()),
            ("rho", s.rho.is_some()),
            ("velocity", s.velocity.is_some()),
            ("pressure", s.pressure.is_some()),
            ("x_split", s.x_split.is_some()),
            ("p_inner", s.p_inner.is_some()),
            ("p_outer", s.p_outer.is_some()),
            ("radius", s.radius.is_some()),
            ("center", s.center.is_some()),
            ("band_density", s.band_density.is_some()),
            ("outer_density", s.outer_density.is_some()),
            ("shear_velocity", s.shear_velocity.is_some()),
            ("perturbation", s.perturbation.is_some()),
        ] {
            if set && !allowed.contains(&key) {
                return Err(Error::config(format!(
                    "initial_condition.{key} does not apply to '{}'",
                    s.name
                )));
            }
        }

        let spatial = |v: &Option<Vec<f64>>, default: SpatialVec| -> Result<SpatialVec> {
            match v {
                None => Ok(default),
                Some(v) if v.len() == model.dim => {
                    let mut out = [0.0; 2];
                    out[..v.len()].copy_from_slice(v);
                    Ok(out)
                }
                Some(v) => Err(Error::config(format!(
                    "expected {} components, got {v:?}",
                    model.dim
                ))),
            }
        };

        let ic = match s.name.as_str() {
            "constant" if model.is_scalar() => InitialCondition::ScalarConstant {
                value: s
                    .value
                    .ok_or_else(|| Error::config("constant scalar data needs 'value'"))?,
            },
            "constant" => InitialCondition::EulerConstant {
                rho: s.rho.ok_or_else(|| Error::config("constant gas data needs 'rho'"))?,
                velocity: spatial(&s.velocity, [0.0, 0.0])?,
                pressure: s
                    .pressure
                    .ok_or_else(|| Error::config("constant gas data needs 'pressure'"))?,
            },
            "sine_wave" => InitialCondition::SineWave {
                amplitude: s.amplitude.unwrap_or(1.0),
                mean: s.mean.unwrap_or(0.0),
            },
            "step" => InitialCondition::Step {
                lower: s.lower.unwrap_or(0.0),
                upper: s.upper.unwrap_or(1.0),
                from: s.from.unwrap_or(0.25 * extent[0]),
                to: s.to.unwrap_or(0.5 * extent[0]),
            },
            "composite_smooth" => InitialCondition::CompositeSmooth {
                amplitude: s.amplitude.unwrap_or(1.0),
                mean: s.mean.unwrap_or(0.0),
            },
            "sod" => InitialCondition::Sod {
                x_split: s.x_split.unwrap_or(0.5 * extent[0]),
            },
            "euler_blast" => {
                let mut center = [0.0; 2];
                for d in 0..model.dim {
                    center[d] = 0.5 * extent[d];
                }
                InitialCondition::EulerBlast {
                    rho: s.rho.unwrap_or(1.0),
                    p_inner: s.p_inner.unwrap_or(10.0),
                    p_outer: s.p_outer.unwrap_or(0.1),
                    radius: s.radius.unwrap_or(0.15),
                    center: spatial(&s.center, center)?,
                }
            }
            "kelvin_helmholtz_2d" => InitialCondition::KelvinHelmholtz2d {
                band_density: s.band_density.unwrap_or(2.0),
                outer_density: s.outer_density.unwrap_or(1.0),
                shear_velocity: s.shear_velocity.unwrap_or(0.5),
                perturbation: s.perturbation.unwrap_or(0.01),
                pressure: s.pressure.unwrap_or(2.5),
            },
            _ => unreachable!("name validated above"),
        };
        ic.check_model(model)?;
        Ok(ic)
    }

    /// Admissibility parameters; pass the interpolated initial data when
    /// `scalar_bounds_from_ic` should take effect.
    pub fn admissibility_params(
        &self,
        ic_values: Option<&[State]>,
    ) -> Result<AdmissibilityParams> {
        let a = &self.admissibility;
        if !(a.rho_floor > 0.0) || !(a.pressure_floor > 0.0) {
            return Err(Error::config("admissibility floors must be positive"));
        }
        if let Some(cap) = a.energy_cap {
            if !(cap > 0.0) {
                return Err(Error::config("energy_cap must be positive"));
            }
        }
        if a.scalar_bounds.is_some() && a.scalar_bounds_from_ic {
            return Err(Error::config(
                "scalar_bounds and scalar_bounds_from_ic are mutually exclusive",
            ));
        }
        let scalar_bounds = if a.scalar_bounds_from_ic {
            ic_values.and_then(crate::ic::scalar_range).map(|[lo, hi]| {
                [lo - 1e-12, hi + 1e-12]
            })
        } else {
            if let Some([lo, hi]) = a.scalar_bounds {
                if !(lo <= hi) {
                    return Err(Error::config(format!(
                        "scalar_bounds [{lo}, {hi}] must be ordered"
                    )));
                }
            }
            a.scalar_bounds
        };
        Ok(AdmissibilityParams {
            rho_floor: a.rho_floor,
            pressure_floor: a.pressure_floor,
            energy_cap: a.energy_cap.unwrap_or(f64::INFINITY),
            scalar_bounds,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::config(format!("config serialization failed: {e}")))
    }
}
