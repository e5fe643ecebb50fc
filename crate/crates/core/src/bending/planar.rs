use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::linalg::Cx;

/// Bend angle eta and sector half-width zeta, with 0 < zeta < pi/2 and |eta| < pi - 2 zeta.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BendingParams {
    eta: f64,
    zeta: f64,
}

impl BendingParams {
    pub fn new(eta: f64, zeta: f64) -> Result<Self> {
        if !(zeta > 0.0 && zeta < PI / 2.0) {
            return domain(format!("zeta = {zeta} must lie in (0, pi/2)"));
        }
        if !(eta.abs() < PI - 2.0 * zeta) {
            return domain(format!(
                "|eta| = {} must be below pi - 2 zeta = {}",
                eta.abs(),
                PI - 2.0 * zeta
            ));
        }
        Ok(BendingParams { eta, zeta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// Angular slopes of the bend in the upper and lower middle sectors.
    fn slopes(&self) -> (f64, f64) {
        let w = PI - 2.0 * self.zeta;
        (1.0 - self.eta / w, 1.0 + self.eta / w)
    }
}

/// Argument in (-pi, pi].
pub fn arg(z: Cx) -> f64 {
    let a = z.im.atan2(z.re);
    if a == -PI {
        PI
    } else {
        a
    }
}

fn rotate(z: Cx, angle: f64) -> Cx {
    if angle == 0.0 {
        z
    } else {
        z * Cx::from_polar(1.0, angle)
    }
}

/// The bend of the plane at the origin: identity near the negative axis, rotation by eta
/// near the positive axis, and linear interpolation of the angle in between.
pub fn planar_bend(p: &BendingParams, z: Cx) -> Cx {
    if z == Cx::new(0.0, 0.0) {
        return z;
    }
    let (eta, zeta) = (p.eta, p.zeta);
    let w = PI - 2.0 * zeta;
    let t = arg(z);
    if t.abs() >= PI - zeta {
        z
    } else if t.abs() <= zeta {
        rotate(z, eta)
    } else if t > 0.0 {
        rotate(z, eta * (1.0 - (t - zeta) / w))
    } else {
        rotate(z, eta * (1.0 + (t + zeta) / w))
    }
}

/// Inverse of `planar_bend`, sector by sector on the image side.
pub fn planar_bend_inverse(p: &BendingParams, z: Cx) -> Cx {
    if z == Cx::new(0.0, 0.0) {
        return z;
    }
    let (eta, zeta) = (p.eta, p.zeta);
    let (ku, kl) = p.slopes();
    let phi = arg(z);
    let theta = if phi.abs() >= PI - zeta {
        return z;
    } else if phi >= eta - zeta && phi <= eta + zeta {
        phi - eta
    } else if phi > eta + zeta {
        zeta + (phi - zeta - eta) / ku
    } else {
        -zeta + (phi - (eta - zeta)) / kl
    };
    Cx::from_polar(z.norm(), theta)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Distortion {
    pub value: f64,
    /// Set when arg z lies on a sector boundary; the value is then the one-sided limit
    /// from the sector counter-clockwise of the boundary.
    pub on_boundary: bool,
}

/// Linear distortion of the planar bend at z.
pub fn planar_distortion(p: &BendingParams, z: Cx) -> Distortion {
    let (ku, kl) = p.slopes();
    let k = |s: f64| s.max(1.0 / s);
    if z == Cx::new(0.0, 0.0) {
        return Distortion {
            value: k(ku).max(k(kl)),
            on_boundary: true,
        };
    }
    let zeta = p.zeta;
    let t = arg(z);
    let tol = 1e-12;
    let edges = [zeta, PI - zeta, -zeta, zeta - PI];
    let on_boundary = edges.iter().any(|e| (t - e).abs() <= tol);
    let value = if on_boundary {
        // counter-clockwise side of each boundary ray
        if (t - zeta).abs() <= tol {
            k(ku)
        } else if (t - (zeta - PI)).abs() <= tol {
            k(kl)
        } else {
            1.0
        }
    } else if t.abs() >= PI - zeta || t.abs() <= zeta {
        1.0
    } else if t > 0.0 {
        k(ku)
    } else {
        k(kl)
    };
    Distortion { value, on_boundary }
}

/// Distortion estimated from the Jacobian of `planar_bend` by central differences:
/// the ratio of its singular values.
pub fn finite_difference_distortion(p: &BendingParams, z: Cx, h: f64) -> f64 {
    let f = |w: Cx| planar_bend(p, w);
    let dx = (f(z + Cx::new(h, 0.0)) - f(z - Cx::new(h, 0.0))) / (2.0 * h);
    let dy = (f(z + Cx::new(0.0, h)) - f(z - Cx::new(0.0, h))) / (2.0 * h);
    // Jacobian columns dx, dy; |f_z| and |f_zbar| give the singular values
    let fz = (dx - Cx::new(0.0, 1.0) * dy) / 2.0;
    let fzb = (dx + Cx::new(0.0, 1.0) * dy) / 2.0;
    let (a, b) = (fz.norm(), fzb.norm());
    (a + b) / (a - b).abs()
}
