//! The Heisenberg group C x R as the boundary of the Siegel domain, with the Cygan
//! norm, its similarities and the sphere-flattening maps h_r.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::linalg::{
    c, cayley_lift, norm_inf, r, vec3, vec_norm_inf, BallPoint, CayleyDirection, Cx, FormKind,
    Isometry, Mat3, Vec3, ONE, ZERO,
};

/// A boundary point in horospherical coordinates, or the point at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum HeisenbergPoint {
    Finite { xi: Cx, v: f64 },
    Infinity,
}

impl HeisenbergPoint {
    pub const ORIGIN: HeisenbergPoint = HeisenbergPoint::Finite { xi: ZERO, v: 0.0 };

    pub fn new(xi: Cx, v: f64) -> Self {
        HeisenbergPoint::Finite { xi, v }
    }

    pub fn real(x: f64) -> Self {
        HeisenbergPoint::Finite { xi: r(x), v: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, HeisenbergPoint::Finite { .. })
    }

    pub fn coords(&self) -> Option<(Cx, f64)> {
        match *self {
            HeisenbergPoint::Finite { xi, v } => Some((xi, v)),
            HeisenbergPoint::Infinity => None,
        }
    }

    fn finite(&self) -> Result<(Cx, f64)> {
        self.coords()
            .ok_or_else(|| crate::Error::Domain("point at infinity".into()))
    }

    /// Null lift ((-|xi|^2 + i v)/2, xi, 1); infinity lifts to (1, 0, 0).
    pub fn lift(&self) -> Vec3 {
        match *self {
            HeisenbergPoint::Finite { xi, v } => vec3(c(-xi.norm_sqr() / 2.0, v / 2.0), xi, ONE),
            HeisenbergPoint::Infinity => vec3(ONE, ZERO, ZERO),
        }
    }

    /// Reads a boundary point from a null lift. Lifts whose last coordinate is negligible
    /// against the first are infinity.
    pub fn from_lift(w: &Vec3) -> Result<Self> {
        let n = vec_norm_inf(w);
        if !(n > 0.0) || !n.is_finite() {
            return domain("invalid lift");
        }
        if w[2].norm() <= 1e-15 * n {
            return Ok(HeisenbergPoint::Infinity);
        }
        let xi = w[1] / w[2];
        let z0 = w[0] / w[2];
        Ok(HeisenbergPoint::Finite { xi, v: 2.0 * z0.im })
    }

    pub fn mul(&self, other: &HeisenbergPoint) -> Result<HeisenbergPoint> {
        let (x1, v1) = self.finite()?;
        let (x2, v2) = other.finite()?;
        Ok(HeisenbergPoint::Finite {
            xi: x1 + x2,
            v: v1 + v2 + 2.0 * (x1 * x2.conj()).im,
        })
    }

    pub fn inverse(&self) -> Result<HeisenbergPoint> {
        let (x, v) = self.finite()?;
        Ok(HeisenbergPoint::Finite { xi: -x, v: -v })
    }

    pub fn cygan_norm(&self) -> Result<f64> {
        let (xi, v) = self.finite()?;
        Ok(cygan_norm_coords(xi, v, 0.0))
    }

    /// Cygan distance between two boundary points; a coordinate-free alternative to
    /// `cygan_metric` that also accepts matching infinities.
    pub fn approx_eq(&self, other: &HeisenbergPoint, tol: f64) -> bool {
        match (self, other) {
            (HeisenbergPoint::Infinity, HeisenbergPoint::Infinity) => true,
            (HeisenbergPoint::Finite { .. }, HeisenbergPoint::Finite { .. }) => {
                cygan_metric(self, other).map(|d| d <= tol).unwrap_or(false)
            }
            _ => false,
        }
    }

    pub fn to_ball(&self) -> BallPoint {
        let w = cayley_lift(&self.lift(), CayleyDirection::SiegelToBall);
        BallPoint::from_lift(&w)
            .expect("boundary points of the Siegel model are finite in the ball")
    }

    pub fn from_ball(p: &BallPoint) -> Result<Self> {
        HeisenbergPoint::from_lift(&cayley_lift(&p.lift(), CayleyDirection::BallToSiegel))
    }
}

/// An interior (u > 0) or boundary (u = 0) point of the Siegel domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfSpacePoint {
    pub xi: Cx,
    pub v: f64,
    pub u: f64,
}

impl HalfSpacePoint {
    pub fn new(xi: Cx, v: f64, u: f64) -> Result<Self> {
        if !(u >= 0.0) {
            return domain("height must be nonnegative");
        }
        Ok(HalfSpacePoint { xi, v, u })
    }

    /// ((-|xi|^2 - u + i v)/2, xi, 1), with hermitian square -u.
    pub fn lift(&self) -> Vec3 {
        vec3(
            c((-self.xi.norm_sqr() - self.u) / 2.0, self.v / 2.0),
            self.xi,
            ONE,
        )
    }

    pub fn from_lift(w: &Vec3) -> Result<Self> {
        if w[2].norm() <= 1e-15 * vec_norm_inf(w) {
            return domain("lift is at infinity");
        }
        let xi = w[1] / w[2];
        let z0 = w[0] / w[2];
        let u = -2.0 * z0.re - xi.norm_sqr();
        HalfSpacePoint::new(xi, 2.0 * z0.im, u.max(0.0))
    }

    pub fn boundary(&self) -> HeisenbergPoint {
        HeisenbergPoint::Finite {
            xi: self.xi,
            v: self.v,
        }
    }
}

fn cygan_norm_coords(xi: Cx, v: f64, u: f64) -> f64 {
    c(xi.norm_sqr() + u, -v).norm().sqrt()
}

/// |‖xi‖^2 + u - i v|^{1/2}.
pub fn cygan_norm(p: &HalfSpacePoint) -> f64 {
    cygan_norm_coords(p.xi, p.v, p.u)
}

/// ||q^-1 p||_c.
pub fn cygan_metric(p: &HeisenbergPoint, q: &HeisenbergPoint) -> Result<f64> {
    q.inverse()?.mul(p)?.cygan_norm()
}

pub fn dilation(lambda: f64) -> Result<Isometry> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return domain("dilation factor must be positive");
    }
    Ok(Isometry::from_matrix_unchecked(
        Mat3::from_diagonal(&vec3(r(lambda), ONE, r(1.0 / lambda))),
        FormKind::Siegel,
    ))
}

pub fn rotation_u(eta: f64) -> Isometry {
    Isometry::from_matrix_unchecked(
        Mat3::from_diagonal(&vec3(ONE, Cx::from_polar(1.0, eta), ONE)),
        FormKind::Siegel,
    )
}

/// Left translation by (tau, t).
pub fn translation(tau: Cx, t: f64) -> Isometry {
    let mut m = Mat3::identity();
    m[(0, 1)] = -tau.conj();
    m[(0, 2)] = c(-tau.norm_sqr() / 2.0, t / 2.0);
    m[(1, 2)] = tau;
    Isometry::from_matrix_unchecked(m, FormKind::Siegel)
}

/// Action of a Siegel-model isometry on the boundary.
pub fn act(g: &Isometry, p: &HeisenbergPoint) -> Result<HeisenbergPoint> {
    if g.form() != FormKind::Siegel {
        return domain("boundary action needs a Siegel-model isometry");
    }
    HeisenbergPoint::from_lift(&g.apply(&p.lift()))
}

/// Cygan sphere about the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeisenbergSphere {
    radius: f64,
}

impl HeisenbergSphere {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return domain("sphere radius must be positive");
        }
        Ok(HeisenbergSphere { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

pub fn sphere_membership(p: &HeisenbergPoint, s: &HeisenbergSphere) -> bool {
    p.cygan_norm()
        .map(|n| (n - s.radius).abs() <= 1e-10)
        .unwrap_or(false)
}

/// Points of S(0,r) on a grid in (theta, phi), with |xi|^2 = r^2 cos(phi), v = r^2 sin(phi).
pub fn sphere_sample(s: &HeisenbergSphere, n: usize) -> Vec<HeisenbergPoint> {
    let n = n.max(1);
    let n_theta = (n as f64).sqrt().ceil() as usize;
    let n_phi = n.div_ceil(n_theta);
    let r2 = s.radius * s.radius;
    let mut out = Vec::with_capacity(n);
    'outer: for i in 0..n_phi {
        let phi = if n_phi == 1 {
            0.0
        } else {
            -PI / 2.0 + PI * i as f64 / (n_phi - 1) as f64
        };
        for j in 0..n_theta {
            if out.len() == n {
                break 'outer;
            }
            let theta = 2.0 * PI * j as f64 / n_theta as f64;
            let rho = s.radius * phi.cos().max(0.0).sqrt();
            out.push(HeisenbergPoint::Finite {
                xi: Cx::from_polar(rho, theta),
                v: r2 * phi.sin(),
            });
        }
    }
    out
}

/// h_1: the identity on the complex line of the unit horizontal chain, and
/// multiplication by i on its polar vector (1, 0, 2), scaled to determinant one.
fn h1() -> &'static Isometry {
    static H1: OnceLock<Isometry> = OnceLock::new();
    H1.get_or_init(|| {
        let p = c(0.5, 0.5);
        let q = c(-0.25, 0.25);
        let s = c(-1.0, 1.0);
        let m = Mat3::new(p, ZERO, q, ZERO, ONE, ZERO, s, ZERO, p);
        // det = i; divide by its cube root e^{i pi/6}
        let m = m * Cx::from_polar(1.0, -PI / 6.0);
        Isometry::from_matrix_unchecked(m, FormKind::Siegel)
    })
}

/// h_r = D(r) h_1 D(1/r): maps S(0,r) to the horizontal plane, fixing its horizontal
/// chain pointwise and sending (0,-r^2) to 0 and (0,r^2) to infinity.
pub fn flattening_map(radius: f64) -> Result<Isometry> {
    if !(radius > 0.0) || !radius.is_finite() {
        return domain("flattening radius must be positive");
    }
    if radius == 1.0 {
        return Ok(h1().clone());
    }
    let d = dilation(radius)?;
    let di = dilation(1.0 / radius)?;
    Ok(d.compose(h1()).compose(&di))
}

/// Matrix closeness helper used by tests across modules.
pub fn mat_close(a: &Mat3, b: &Mat3, tol: f64) -> bool {
    norm_inf(&(a - b)) <= tol
}
