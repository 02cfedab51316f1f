//! Fixed-wing UAV kinematics with a saturated line-following guidance law.
//!
//! State `[p_x, p_y, p_z, θ]`: north-east position, altitude, heading. The
//! controller commands a flight-path angle from altitude error and a roll
//! angle from a vector field converging to the reference line; both saturate.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

/// Reference line `origin + α·direction` (direction horizontal, normalized).
#[derive(Debug, Clone, Copy)]
pub struct LineRef {
    pub origin: [f64; 3],
    pub direction: [f64; 3],
}

impl LineRef {
    /// Course angle of the line in the horizontal plane.
    pub fn course(&self) -> f64 {
        self.direction[1].atan2(self.direction[0])
    }

    /// Signed cross-track error of a horizontal position.
    pub fn cross_track(&self, px: f64, py: f64) -> f64 {
        let chi = self.course();
        -chi.sin() * (px - self.origin[0]) + chi.cos() * (py - self.origin[1])
    }
}

/// Guidance gains and saturation limits.
#[derive(Debug, Clone, Copy)]
pub struct UavGains {
    /// Far-field approach course offset (radians).
    pub course_inf: f64,
    /// Cross-track error to course-offset gain.
    pub k_path: f64,
    /// Course error to roll gain.
    pub k_course: f64,
    /// Altitude error to flight-path-angle gain.
    pub k_alt: f64,
    pub gamma_max: f64,
    pub phi_max: f64,
}

impl Default for UavGains {
    fn default() -> Self {
        // Overdamped lateral loop for the airspeed/step size used by the
        // built-in preset. The altitude gain keeps the per-step contraction
        // mild enough that the error is still far above f64 resolution at
        // the end of the 200-step horizon.
        UavGains {
            course_inf: FRAC_PI_2,
            k_path: 0.03,
            k_course: 3.0,
            k_alt: 0.1,
            gamma_max: 0.4,
            phi_max: FRAC_PI_3,
        }
    }
}

/// Kinematic parameters of the vehicle model.
#[derive(Debug, Clone, Copy)]
pub struct UavParams {
    pub airspeed: f64,
    pub gravity: f64,
    /// Discretization step size.
    pub eta: f64,
}

impl Default for UavParams {
    fn default() -> Self {
        UavParams {
            airspeed: 13.0,
            gravity: 9.8,
            eta: 0.1,
        }
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let mut w = (a + PI) % (2.0 * PI);
    if w < 0.0 {
        w += 2.0 * PI;
    }
    w - PI
}

fn clamp(v: f64, limit: f64) -> f64 {
    v.max(-limit).min(limit)
}

/// Commanded `(flight path angle γ, roll φ)` for the current state.
pub fn uav_controller(state: &[f64], line: &LineRef, gains: &UavGains) -> (f64, f64) {
    let (px, py, pz, theta) = (state[0], state[1], state[2], state[3]);
    let e_y = line.cross_track(px, py);
    let course_d = line.course() - gains.course_inf * (2.0 / PI) * (gains.k_path * e_y).atan();
    let phi = clamp(gains.k_course * wrap_angle(course_d - theta), gains.phi_max);
    let gamma = clamp(gains.k_alt * (line.origin[2] - pz), gains.gamma_max);
    (gamma, phi)
}

/// One closed-loop step under wind input `u = [u_x, u_y, u_z]` (zero noise).
pub fn uav_closed_loop_step(
    state: &[f64],
    u: &[f64],
    params: &UavParams,
    line: &LineRef,
    gains: &UavGains,
) -> Vec<f64> {
    let (gamma, phi) = uav_controller(state, line, gains);
    let (ux, uy, uz) = if u.len() == 3 {
        (u[0], u[1], u[2])
    } else {
        (0.0, 0.0, 0.0)
    };
    let theta = state[3];
    let v = params.airspeed;
    vec![
        state[0] + params.eta * (v * theta.cos() * gamma.cos() + ux),
        state[1] + params.eta * (v * theta.sin() * gamma.cos() + uy),
        state[2] + params.eta * (v * gamma.sin() + uz),
        state[3] + params.eta * (params.gravity / v) * phi.tan(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> LineRef {
        let s = 2f64.sqrt().recip();
        LineRef {
            origin: [0.0, 0.0, 3.0],
            direction: [s, s, 0.0],
        }
    }

    #[test]
    fn on_line_commands_vanish() {
        let gains = UavGains::default();
        let (gamma, phi) = uav_controller(&[1.0, 1.0, 3.0, FRAC_PI_2 / 2.0], &line(), &gains);
        assert!(gamma.abs() < 1e-12);
        assert!(phi.abs() < 1e-12);
    }

    #[test]
    fn below_line_commands_climb() {
        let gains = UavGains::default();
        let (gamma, _) = uav_controller(&[0.0, 0.0, 0.0, FRAC_PI_2 / 2.0], &line(), &gains);
        assert!(gamma > 0.0);
        // saturation
        assert!(gamma <= gains.gamma_max);
    }

    #[test]
    fn cross_track_sign() {
        let l = line();
        // left of the line along (1,1): a point with py > px
        assert!(l.cross_track(0.0, 1.0) > 0.0);
        assert!(l.cross_track(1.0, 0.0) < 0.0);
        assert!(l.cross_track(2.0, 2.0).abs() < 1e-12);
    }

    #[test]
    fn closed_loop_errors_shrink() {
        // the preset initial condition, zero wind
        let params = UavParams::default();
        let gains = UavGains::default();
        let l = line();
        let mut x = vec![5.0, 4.5, 0.0, 5.0 * PI / 18.0];
        let mut cross = Vec::new();
        let mut alt = Vec::new();
        for _ in 0..=200 {
            cross.push(l.cross_track(x[0], x[1]).abs());
            alt.push((x[2] - 3.0).abs());
            x = uav_closed_loop_step(&x, &[], &params, &l, &gains);
        }
        for t in 50..200 {
            assert!(
                cross[t + 1] < cross[t],
                "cross-track not strictly decreasing at t={t}: {} -> {}",
                cross[t],
                cross[t + 1]
            );
            assert!(
                alt[t + 1] < alt[t],
                "altitude error not strictly decreasing at t={t}"
            );
        }
        assert!(cross[200] < 1e-2 * cross[0]);
        assert!(alt[200] < 1e-6);
    }
}
