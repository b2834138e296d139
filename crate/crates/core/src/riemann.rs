//! Exact solution of the 1D Riemann problem for the compressible Euler
//! equations with ideal-gas law. Star-region pressure is found by Newton
//! iteration on the standard two-wave pressure function; the solution is
//! sampled in similarity coordinate ξ = x/t.
//!
//! Used as the reference for shock-tube error norms, so the solver is kept
//! independent of the FE scheme: plain primitive-variable algebra.

use crate::error::{Error, Result};
use crate::state::State;

/// Primitive description (ρ, u, p) of a constant state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrimitiveState {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
}

impl PrimitiveState {
    pub fn new(rho: f64, u: f64, p: f64) -> Result<Self> {
        if !(rho > 0.0) || !(p > 0.0) || !rho.is_finite() || !u.is_finite() || !p.is_finite() {
            return Err(Error::config(format!(
                "Riemann data needs ρ > 0, p > 0 and finite velocity, got ({rho}, {u}, {p})"
            )));
        }
        Ok(PrimitiveState { rho, u, p })
    }

    fn sound_speed(&self, gamma: f64) -> f64 {
        (gamma * self.p / self.rho).sqrt()
    }

    fn conserved(&self, gamma: f64) -> State {
        let e = self.p / (gamma - 1.0) + 0.5 * self.rho * self.u * self.u;
        State::from_slice(&[self.rho, self.rho * self.u, e])
    }
}

/// Pressure function of one wave family and its derivative: shock branch for
/// `p > p_k`, rarefaction branch otherwise.
fn wave_fn(p: f64, k: &PrimitiveState, gamma: f64) -> (f64, f64) {
    if p > k.p {
        let a_k = 2.0 / ((gamma + 1.0) * k.rho);
        let b_k = (gamma - 1.0) / (gamma + 1.0) * k.p;
        let root = (a_k / (b_k + p)).sqrt();
        let f = (p - k.p) * root;
        let df = root * (1.0 - 0.5 * (p - k.p) / (b_k + p));
        (f, df)
    } else {
        let a = k.sound_speed(gamma);
        let pr = p / k.p;
        let f = 2.0 * a / (gamma - 1.0) * (pr.powf(0.5 * (gamma - 1.0) / gamma) - 1.0);
        let df = 1.0 / (k.rho * a) * pr.powf(-0.5 * (gamma + 1.0) / gamma);
        (f, df)
    }
}

/// Solved Riemann fan, ready to sample at any ξ = x/t.
#[derive(Clone, Debug)]
pub struct RiemannSolution {
    pub gamma: f64,
    pub left: PrimitiveState,
    pub right: PrimitiveState,
    pub p_star: f64,
    pub u_star: f64,
    pub rho_star_left: f64,
    pub rho_star_right: f64,
    pub newton_iterations: usize,
}

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 200;

pub fn solve_riemann(
    gamma: f64,
    left: PrimitiveState,
    right: PrimitiveState,
) -> Result<RiemannSolution> {
    if !(gamma > 1.0) {
        return Err(Error::config(format!("Riemann solver needs γ > 1, got {gamma}")));
    }
    let a_l = left.sound_speed(gamma);
    let a_r = right.sound_speed(gamma);
    // Pressure positivity condition: the two rarefactions must not be able
    // to open a vacuum between them.
    if 2.0 * (a_l + a_r) / (gamma - 1.0) <= right.u - left.u {
        return Err(Error::Unsupported(
            "Riemann data generates vacuum; no positive star pressure exists".into(),
        ));
    }
    let du = right.u - left.u;

    // Primitive-variable (acoustic) guess, floored away from zero.
    let p_guess = {
        let rho_bar = 0.5 * (left.rho + right.rho);
        let a_bar = 0.5 * (a_l + a_r);
        let pv = 0.5 * (left.p + right.p) - 0.125 * du * (left.rho + right.rho) * (a_l + a_r);
        pv.max(1e-8 * (left.p.min(right.p))).max(f64::MIN_POSITIVE * rho_bar * a_bar)
    };

    let mut p = p_guess;
    let mut iterations = 0;
    for it in 0..NEWTON_MAX_ITER {
        let (f_l, df_l) = wave_fn(p, &left, gamma);
        let (f_r, df_r) = wave_fn(p, &right, gamma);
        let g = f_l + f_r + du;
        let dg = df_l + df_r;
        let mut p_new = p - g / dg;
        if p_new <= 0.0 {
            p_new = 0.5 * p;
        }
        let change = 2.0 * (p_new - p).abs() / (p_new + p);
        p = p_new;
        iterations = it + 1;
        if change < NEWTON_TOL {
            break;
        }
    }
    let (f_l, _) = wave_fn(p, &left, gamma);
    let (f_r, _) = wave_fn(p, &right, gamma);
    let u_star = 0.5 * (left.u + right.u) + 0.5 * (f_r - f_l);

    let mu = (gamma - 1.0) / (gamma + 1.0);
    let star_rho = |k: &PrimitiveState| -> f64 {
        let pr = p / k.p;
        if p > k.p {
            k.rho * (pr + mu) / (mu * pr + 1.0)
        } else {
            k.rho * pr.powf(1.0 / gamma)
        }
    };

    Ok(RiemannSolution {
        gamma,
        left,
        right,
        p_star: p,
        u_star,
        rho_star_left: star_rho(&left),
        rho_star_right: star_rho(&right),
        newton_iterations: iterations,
    })
}

impl RiemannSolution {
    /// Primitive state at similarity coordinate ξ = x/t.
    pub fn sample(&self, xi: f64) -> PrimitiveState {
        let g = self.gamma;
        if xi <= self.u_star {
            let k = &self.left;
            let a = k.sound_speed(g);
            if self.p_star > k.p {
                let s = k.u - a * (0.5 * (g + 1.0) / g * self.p_star / k.p + 0.5 * (g - 1.0) / g).sqrt();
                if xi < s {
                    *k
                } else {
                    PrimitiveState { rho: self.rho_star_left, u: self.u_star, p: self.p_star }
                }
            } else {
                let a_star = a * (self.p_star / k.p).powf(0.5 * (g - 1.0) / g);
                let head = k.u - a;
                let tail = self.u_star - a_star;
                if xi < head {
                    *k
                } else if xi > tail {
                    PrimitiveState { rho: self.rho_star_left, u: self.u_star, p: self.p_star }
                } else {
                    let factor = 2.0 / (g + 1.0) + (g - 1.0) / ((g + 1.0) * a) * (k.u - xi);
                    PrimitiveState {
                        rho: k.rho * factor.powf(2.0 / (g - 1.0)),
                        u: 2.0 / (g + 1.0) * (a + 0.5 * (g - 1.0) * k.u + xi),
                        p: k.p * factor.powf(2.0 * g / (g - 1.0)),
                    }
                }
            }
        } else {
            let k = &self.right;
            let a = k.sound_speed(g);
            if self.p_star > k.p {
                let s = k.u + a * (0.5 * (g + 1.0) / g * self.p_star / k.p + 0.5 * (g - 1.0) / g).sqrt();
                if xi > s {
                    *k
                } else {
                    PrimitiveState { rho: self.rho_star_right, u: self.u_star, p: self.p_star }
                }
            } else {
                let a_star = a * (self.p_star / k.p).powf(0.5 * (g - 1.0) / g);
                let head = k.u + a;
                let tail = self.u_star + a_star;
                if xi > head {
                    *k
                } else if xi < tail {
                    PrimitiveState { rho: self.rho_star_right, u: self.u_star, p: self.p_star }
                } else {
                    let factor = 2.0 / (g + 1.0) - (g - 1.0) / ((g + 1.0) * a) * (k.u - xi);
                    PrimitiveState {
                        rho: k.rho * factor.powf(2.0 / (g - 1.0)),
                        u: 2.0 / (g + 1.0) * (-a + 0.5 * (g - 1.0) * k.u + xi),
                        p: k.p * factor.powf(2.0 * g / (g - 1.0)),
                    }
                }
            }
        }
    }

    /// Conserved 1D Euler state (ρ, ρu, E) at ξ = x/t.
    pub fn sample_conserved(&self, xi: f64) -> State {
        self.sample(xi).conserved(self.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{flux, ModelSpec};
    use approx::assert_abs_diff_eq;

    fn sod() -> (PrimitiveState, PrimitiveState) {
        (
            PrimitiveState::new(1.0, 0.0, 1.0).unwrap(),
            PrimitiveState::new(0.125, 0.0, 0.1).unwrap(),
        )
    }

    #[test]
    fn equal_states_give_constant_solution() {
        let s = PrimitiveState::new(1.3, 0.4, 2.0).unwrap();
        let sol = solve_riemann(1.4, s, s).unwrap();
        assert_abs_diff_eq!(sol.p_star, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.u_star, 0.4, epsilon = 1e-12);
        for xi in [-5.0, 0.0, 0.4, 3.0] {
            let q = sol.sample(xi);
            assert_abs_diff_eq!(q.rho, 1.3, epsilon = 1e-12);
            assert_abs_diff_eq!(q.u, 0.4, epsilon = 1e-12);
            assert_abs_diff_eq!(q.p, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sod_star_state_matches_published_values() {
        let (l, r) = sod();
        let sol = solve_riemann(1.4, l, r).unwrap();
        assert_abs_diff_eq!(sol.p_star, 0.30313, epsilon = 5e-5);
        assert_abs_diff_eq!(sol.u_star, 0.92745, epsilon = 5e-5);
        assert_abs_diff_eq!(sol.rho_star_left, 0.42632, epsilon = 5e-5);
        assert_abs_diff_eq!(sol.rho_star_right, 0.26557, epsilon = 5e-5);
    }

    #[test]
    fn beyond_fastest_waves_returns_initial_states() {
        let (l, r) = sod();
        let sol = solve_riemann(1.4, l, r).unwrap();
        // Left rarefaction head moves at u_L − a_L = −√1.4; right shock is
        // subsonic relative to a_R + u_R bounds.
        assert_eq!(sol.sample(-2.0), l);
        assert_eq!(sol.sample(2.5), r);
    }

    #[test]
    fn right_shock_satisfies_jump_conditions() {
        // F(u*) − F(u_R) = S (u* − u_R) across the right shock — an algebraic
        // identity the sampled solution must inherit from the pressure solve.
        let (l, r) = sod();
        let g = 1.4;
        let sol = solve_riemann(g, l, r).unwrap();
        assert!(sol.p_star > r.p, "Sod's right wave is a shock");
        let a_r = (g * r.p / r.rho).sqrt();
        let s = r.u + a_r * (0.5 * (g + 1.0) / g * sol.p_star / r.p + 0.5 * (g - 1.0) / g).sqrt();
        let star = PrimitiveState {
            rho: sol.rho_star_right,
            u: sol.u_star,
            p: sol.p_star,
        };
        let model = ModelSpec::euler(1, g).unwrap();
        let u_star = star.conserved(g);
        let u_r = r.conserved(g);
        let f_star = flux(&model, &u_star).unwrap().dot([1.0, 0.0]);
        let f_r = flux(&model, &u_r).unwrap().dot([1.0, 0.0]);
        for c in 0..3 {
            let lhs = f_star[c] - f_r[c];
            let rhs = s * (u_star[c] - u_r[c]);
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9);
        }
    }

    #[test]
    fn sampled_profile_stays_physical() {
        let (l, r) = sod();
        let sol = solve_riemann(1.4, l, r).unwrap();
        let mut last_was_finite = true;
        for k in 0..=400 {
            let xi = -2.0 + 4.5 * k as f64 / 400.0;
            let q = sol.sample(xi);
            last_was_finite &= q.rho > 0.0 && q.p > 0.0 && q.u.is_finite();
        }
        assert!(last_was_finite);
    }

    #[test]
    fn vacuum_data_is_rejected() {
        let l = PrimitiveState::new(1.0, -10.0, 0.1).unwrap();
        let r = PrimitiveState::new(1.0, 10.0, 0.1).unwrap();
        match solve_riemann(1.4, l, r) {
            Err(Error::Unsupported(_)) => {}
            other => panic!("expected vacuum rejection, got {other:?}"),
        }
        assert!(PrimitiveState::new(-1.0, 0.0, 1.0).is_err());
        assert!(solve_riemann(1.0, l, r).is_err());
    }

    #[test]
    fn strong_left_shock_converges() {
        // A harder case: large pressure jump pushing the Newton iteration
        // onto the shock branch at the guess.
        let l = PrimitiveState::new(1.0, 3.0, 10.0).unwrap();
        let r = PrimitiveState::new(1.0, -3.0, 0.01).unwrap();
        let sol = solve_riemann(1.4, l, r).unwrap();
        assert!(sol.p_star > 10.0, "head-on collision compresses both sides");
        assert!(sol.newton_iterations < 200);
        let q = sol.sample(0.0);
        assert!(q.rho > 0.0 && q.p > 0.0);
    }
}
