//! Adaptive classical Runge–Kutta for autonomous planar systems, step doubling for error control.

pub type Vec2 = [f64; 2];

pub fn rk4_step<F: Fn(Vec2) -> Vec2>(f: &F, x: Vec2, h: f64) -> Vec2 {
    let k1 = f(x);
    let k2 = f([x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]]);
    let k3 = f([x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]]);
    let k4 = f([x[0] + h * k3[0], x[1] + h * k3[1]]);
    [
        x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

#[derive(Clone, Copy, Debug)]
pub struct Accepted {
    pub x: Vec2,
    pub h: f64,
    pub next_h: f64,
}

/// One accepted step of size at most `h`; halves until the doubled-step error is below `tol`.
pub fn adaptive_step<F: Fn(Vec2) -> Vec2>(f: &F, x: Vec2, mut h: f64, tol: f64, h_max: f64, h_min: f64) -> Option<Accepted> {
    loop {
        let big = rk4_step(f, x, h);
        let half = rk4_step(f, x, 0.5 * h);
        let small = rk4_step(f, half, 0.5 * h);
        let err = ((small[0] - big[0]).powi(2) + (small[1] - big[1]).powi(2)).sqrt() / 15.0;
        if err <= tol || h <= h_min {
            if !(small[0].is_finite() && small[1].is_finite()) {
                return None;
            }
            let grow = if err == 0.0 { 4.0 } else { (0.9 * (tol / err).powf(0.2)).clamp(0.2, 4.0) };
            return Some(Accepted { x: small, h, next_h: (h * grow).min(h_max) });
        }
        h *= (0.9 * (tol / err).powf(0.2)).clamp(0.1, 0.5);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_is_followed() {
        let f = |x: Vec2| [-x[1], x[0]];
        let mut x = [1.0, 0.0];
        let mut t: f64 = 0.0;
        let mut h: f64 = 0.1;
        while t < std::f64::consts::TAU {
            let h_try = h.min(std::f64::consts::TAU - t);
            let a = adaptive_step(&f, x, h_try, 1e-12, 0.5, 1e-12).unwrap();
            x = a.x;
            t += a.h;
            h = a.next_h;
        }
        assert!((x[0] - 1.0).abs() < 1e-9 && x[1].abs() < 1e-9);
    }
}
