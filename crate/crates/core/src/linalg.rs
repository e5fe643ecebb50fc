//! Hermitian linear algebra on C^{2,1}: forms, isometries, distance, classification
//! and the Cayley transform between the ball and Siegel models.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub type Cx = Complex64;
pub type Mat3 = Matrix3<Cx>;
pub type Vec3 = Vector3<Cx>;

/// Tolerance for structural identities (form preservation, round trips).
pub const STRUCTURAL_TOL: f64 = 1e-12;
/// Tolerance for derived numerics.
pub const NUMERIC_TOL: f64 = 1e-9;
/// Half-width of the band around zero in which the trace discriminant is not trusted.
pub const AMBIGUITY_BAND: f64 = 1e-9;

pub const ZERO: Cx = Cx::new(0.0, 0.0);
pub const ONE: Cx = Cx::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Cx {
    Cx::new(re, im)
}

pub fn r(re: f64) -> Cx {
    Cx::new(re, 0.0)
}

pub fn vec3(a: Cx, b: Cx, c: Cx) -> Vec3 {
    Vec3::new(a, b, c)
}

/// Max-abs entry norm.
pub fn norm_inf(m: &Mat3) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn vec_norm_inf(v: &Vec3) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn mat_from_real(rows: [[f64; 3]; 3]) -> Mat3 {
    Mat3::from_fn(|i, j| r(rows[i][j]))
}

pub fn is_real_matrix(m: &Mat3, tol: f64) -> bool {
    let scale = norm_inf(m).max(1.0);
    m.iter().all(|z| z.im.abs() <= tol * scale)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormKind {
    Ball,
    Siegel,
}

impl fmt::Display for FormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormKind::Ball => f.write_str("ball"),
            FormKind::Siegel => f.write_str("siegel"),
        }
    }
}

/// A Hermitian form of signature (2,1). Ball: diag(1,1,-1). Siegel: antidiag(1,1,1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermitianForm {
    kind: FormKind,
}

impl HermitianForm {
    pub const BALL: HermitianForm = HermitianForm {
        kind: FormKind::Ball,
    };
    pub const SIEGEL: HermitianForm = HermitianForm {
        kind: FormKind::Siegel,
    };

    pub fn of(kind: FormKind) -> Self {
        HermitianForm { kind }
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn matrix(&self) -> Mat3 {
        match self.kind {
            FormKind::Ball => mat_from_real([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]]),
            FormKind::Siegel => mat_from_real([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]),
        }
    }

    /// Eigenvalue signs of the form matrix: (positive, negative) counts.
    pub fn signature(&self) -> (usize, usize) {
        let eig = self.matrix().symmetric_eigenvalues();
        let pos = eig.iter().filter(|&&e| e > 0.0).count();
        let neg = eig.iter().filter(|&&e| e < 0.0).count();
        (pos, neg)
    }

    pub fn product(&self, v: &Vec3, w: &Vec3) -> Cx {
        match self.kind {
            FormKind::Ball => v[0] * w[0].conj() + v[1] * w[1].conj() - v[2] * w[2].conj(),
            FormKind::Siegel => v[0] * w[2].conj() + v[1] * w[1].conj() + v[2] * w[0].conj(),
        }
    }
}

/// v^T J conj(w).
pub fn hermitian_product(v: &Vec3, w: &Vec3, form: &HermitianForm) -> Cx {
    form.product(v, w)
}

/// Principal-ish cube root that keeps real numbers real.
fn cube_root(z: Cx) -> Cx {
    if z.im == 0.0 {
        r(z.re.cbrt())
    } else {
        z.powf(1.0 / 3.0)
    }
}

/// Rescales to determinant one, unless the deviation is within the rounding error of the
/// determinant itself. Long words have entries so large that their computed determinant
/// is dominated by cancellation.
fn unit_determinant(m: &Mat3) -> Mat3 {
    let det = m.determinant();
    let noise = 16.0 * f64::EPSILON * norm_inf(m).powi(3);
    if (det - ONE).norm() <= 1e-9f64.max(noise) {
        *m
    } else {
        m / cube_root(det)
    }
}

/// An element of PU(2,1), stored as a 3x3 matrix with respect to a given form.
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    m: Mat3,
    form: FormKind,
}

impl Isometry {
    /// Normalizes to determinant one and checks form preservation (scale-relative, 1e-9).
    pub fn new(m: Mat3, form: FormKind) -> Result<Self> {
        let det = m.determinant();
        if !(det.norm() > 0.0) || !det.norm().is_finite() {
            return domain("matrix is singular");
        }
        let g = Isometry {
            m: unit_determinant(&m),
            form,
        };
        let res = g.form_residual();
        if !(res < NUMERIC_TOL) {
            return Err(Error::Construction {
                message: "matrix does not preserve the hermitian form".into(),
                residual: res,
            });
        }
        Ok(g)
    }

    /// Wraps a matrix already known to be a determinant-one isometry.
    pub fn from_matrix_unchecked(m: Mat3, form: FormKind) -> Self {
        Isometry { m, form }
    }

    pub fn identity(form: FormKind) -> Self {
        Isometry {
            m: Mat3::identity(),
            form,
        }
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.m
    }

    pub fn form(&self) -> FormKind {
        self.form
    }

    pub fn hermitian_form(&self) -> HermitianForm {
        HermitianForm::of(self.form)
    }

    pub fn trace(&self) -> Cx {
        self.m.trace()
    }

    pub fn determinant(&self) -> Cx {
        self.m.determinant()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        is_real_matrix(&self.m, tol)
    }

    /// J g* J, the exact inverse of a determinant-one isometry.
    pub fn inverse(&self) -> Isometry {
        let j = HermitianForm::of(self.form).matrix();
        Isometry {
            m: j * self.m.adjoint() * j,
            form: self.form,
        }
    }

    /// self * other; panics on mismatched forms since that is a programming error.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        assert_eq!(
            self.form, other.form,
            "composing isometries of different models"
        );
        Isometry {
            m: self.m * other.m,
            form: self.form,
        }
    }

    /// h * self * h^-1
    pub fn conjugate_by(&self, h: &Isometry) -> Isometry {
        h.compose(self).compose(&h.inverse())
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.m * v
    }

    /// ||g* J g - J||_inf.
    pub fn form_residual_abs(&self) -> f64 {
        let j = HermitianForm::of(self.form).matrix();
        norm_inf(&(self.m.adjoint() * j * self.m - j))
    }

    /// The absolute residual divided by max(1, ||g||^2). Rounding alone puts the
    /// absolute residual near eps*||g||^2, so this is the quantity that can be held
    /// to a fixed bound for elements far from the identity.
    pub fn form_residual(&self) -> f64 {
        let s = norm_inf(&self.m).max(1.0);
        self.form_residual_abs() / (s * s)
    }

    /// Equality in PU(2,1): up to a cube root of unity.
    pub fn projectively_eq(&self, other: &Isometry, tol: f64) -> bool {
        self.projective_distance(other) <= tol
    }

    /// min over cube roots of unity w of ||a - w b||_inf / max(1, ||a||).
    pub fn projective_distance(&self, other: &Isometry) -> f64 {
        let scale = norm_inf(&self.m).max(1.0);
        (0..3)
            .map(|k| {
                let w = Cx::from_polar(1.0, 2.0 * PI * k as f64 / 3.0);
                norm_inf(&(self.m - other.m * w))
            })
            .fold(f64::INFINITY, f64::min)
            / scale
    }

    /// Distance to the identity in PU(2,1), relative to max(1, ||g||).
    pub fn identity_residual(&self) -> f64 {
        self.projective_distance(&Isometry::identity(self.form))
    }

    /// Eigenvalues ordered by decreasing modulus.
    pub fn eigenvalues(&self) -> [Cx; 3] {
        eigenvalues3(&self.m)
    }

    /// An eigenvector for the eigenvalue `lambda`, from cross products of rows of g - lambda I.
    pub fn eigenvector(&self, lambda: Cx) -> Vec3 {
        eigenvector3(&self.m, lambda)
    }
}

impl std::ops::Mul for &Isometry {
    type Output = Isometry;
    fn mul(self, rhs: &Isometry) -> Isometry {
        self.compose(rhs)
    }
}

/// Roots of the characteristic polynomial, polished by Newton steps, sorted by decreasing modulus.
pub fn eigenvalues3(m: &Mat3) -> [Cx; 3] {
    let c2 = -m.trace();
    let c1 = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] + m[(0, 0)] * m[(2, 2)]
        - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)]
        - m[(1, 2)] * m[(2, 1)];
    let c0 = -m.determinant();
    let mut roots = cubic_roots(c2, c1, c0);
    roots.sort_by(|a, b| {
        b.norm()
            .partial_cmp(&a.norm())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    roots
}

/// Roots of x^3 + a x^2 + b x + c by Durand-Kerner iteration with Newton polishing.
pub fn cubic_roots(a: Cx, b: Cx, c0: Cx) -> [Cx; 3] {
    let p = |x: Cx| ((x + a) * x + b) * x + c0;
    let dp = |x: Cx| (r(3.0) * x + r(2.0) * a) * x + b;
    let scale = 1.0 + a.norm().max(b.norm()).max(c0.norm());
    let seed = Cx::new(0.4, 0.9);
    let mut z = [
        r(scale) * seed,
        r(scale) * seed * seed,
        r(scale) * seed * seed * seed,
    ];
    for _ in 0..500 {
        let mut delta: f64 = 0.0;
        for i in 0..3 {
            let mut den = ONE;
            for j in 0..3 {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            if den.norm() == 0.0 {
                den = r(1e-300);
            }
            let step = p(z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm() / (1.0 + z[i].norm()));
        }
        if delta < 1e-17 {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let d = dp(*zi);
            if d.norm() < 1e-8 {
                break;
            }
            let step = p(*zi) / d;
            let cand = *zi - step;
            if p(cand).norm() <= p(*zi).norm() {
                *zi = cand;
            } else {
                break;
            }
        }
    }
    z
}

pub fn eigenvector3(m: &Mat3, lambda: Cx) -> Vec3 {
    let a = m - Mat3::identity() * lambda;
    let rows: Vec<Vec3> = (0..3).map(|i| a.row(i).transpose()).collect();
    let candidates = [
        rows[0].cross(&rows[1]),
        rows[0].cross(&rows[2]),
        rows[1].cross(&rows[2]),
    ];
    let best = candidates
        .iter()
        .max_by(|x, y| vec_norm_inf(x).partial_cmp(&vec_norm_inf(y)).unwrap())
        .unwrap();
    // Each row is bilinearly orthogonal to a kernel vector, so the plain cross product works.
    let n = vec_norm_inf(best);
    if n > 0.0 {
        best / r(n)
    } else {
        *best
    }
}

/// Normalizes a lift for display/comparison: divides by its largest-modulus coordinate.
pub fn normalize_lift(v: &Vec3) -> Vec3 {
    let (mut best, mut bn) = (ONE, -1.0);
    for z in v.iter() {
        if z.norm() > bn {
            bn = z.norm();
            best = *z;
        }
    }
    v / best
}

/// A point of the closed complex ball, with affine coordinates (z1, z2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallPoint {
    pub z: [Cx; 2],
}

impl BallPoint {
    pub fn new(z1: Cx, z2: Cx) -> Self {
        BallPoint { z: [z1, z2] }
    }

    pub fn real(x1: f64, x2: f64) -> Self {
        BallPoint::new(r(x1), r(x2))
    }

    pub fn origin() -> Self {
        BallPoint::real(0.0, 0.0)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.z[0].norm_sqr() + self.z[1].norm_sqr()
    }

    pub fn lift(&self) -> Vec3 {
        vec3(self.z[0], self.z[1], ONE)
    }

    pub fn from_lift(v: &Vec3) -> Result<Self> {
        if v[2].norm() <= 1e-300 || !v[2].norm().is_finite() {
            return domain("lift is not in the affine chart of the ball");
        }
        Ok(BallPoint::new(v[0] / v[2], v[1] / v[2]))
    }

    /// 1 - |z|^2 evaluated without cancellation near the sphere.
    pub fn depth(&self) -> f64 {
        let n = self.norm_sqr().sqrt();
        (1.0 - n) * (1.0 + n)
    }

    pub fn is_interior(&self) -> bool {
        self.depth() > 0.0
    }

    pub fn is_boundary(&self, tol: f64) -> bool {
        self.depth().abs() <= tol
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.z.iter().all(|z| z.im.abs() <= tol)
    }
}

/// Distance in the ball with real planes of curvature -1/4:
/// cosh^2(d/2) = <p,q><q,p> / (<p,p><q,q>).
pub fn distance(p: &BallPoint, q: &BallPoint) -> Result<f64> {
    if !p.is_interior() || !q.is_interior() {
        return domain("distance is only defined for interior points");
    }
    // |<p,q>|^2 - <p,p><q,q> rewritten as |z-w|^2 - |z1 w2 - z2 w1|^2 to avoid cancellation.
    let [z1, z2] = p.z;
    let [w1, w2] = q.z;
    let diff = (z1 - w1).norm_sqr() + (z2 - w2).norm_sqr();
    let wedge = (z1 * w2 - z2 * w1).norm_sqr();
    let num = (diff - wedge).max(0.0);
    let sinh2 = num / (p.depth() * q.depth());
    Ok(2.0 * sinh2.sqrt().asinh())
}

/// Distance between two negative lifts with respect to any form.
pub fn distance_lifts(v: &Vec3, w: &Vec3, form: &HermitianForm) -> Result<f64> {
    let vv = form.product(v, v).re;
    let ww = form.product(w, w).re;
    if !(vv < 0.0 && ww < 0.0) {
        return domain("distance is only defined for negative lifts");
    }
    let vw = form.product(v, w);
    let cosh2 = vw.norm_sqr() / (vv * ww);
    Ok(2.0 * cosh2.max(1.0).sqrt().acosh())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IsometryKind {
    Elliptic,
    Parabolic,
    Loxodromic,
    Ambiguous,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classification {
    pub kind: IsometryKind,
    /// Set when the element is the identity of PU(2,1), reported as elliptic.
    pub identity: bool,
    pub trace: Cx,
    pub discriminant: f64,
}

/// f(t) = |t|^4 - 8 Re(t^3) + 18 |t|^2 - 27.
pub fn trace_discriminant(t: Cx) -> f64 {
    let n2 = t.norm_sqr();
    n2 * n2 - 8.0 * (t * t * t).re + 18.0 * n2 - 27.0
}

/// Trace classification; near-zero discriminants are resolved by eigenvalue structure
/// and reported as ambiguous when that also fails.
pub fn classify(g: &Isometry) -> Classification {
    let m = unit_determinant(&g.m);
    let trace = m.trace();
    let f = trace_discriminant(trace);
    let out = |kind, identity| Classification {
        kind,
        identity,
        trace,
        discriminant: f,
    };
    if f > AMBIGUITY_BAND {
        return out(IsometryKind::Loxodromic, false);
    }
    if f < -AMBIGUITY_BAND {
        return out(IsometryKind::Elliptic, false);
    }
    let scale = norm_inf(&m).max(1.0);
    let eig = eigenvalues3(&m);
    // Identity up to a cube root of unity.
    let mu = trace / r(3.0);
    if norm_inf(&(m - Mat3::identity() * mu)) <= 1e-9 * scale {
        return out(IsometryKind::Elliptic, true);
    }
    // An eigenvalue off the unit circle forces a loxodromic element. The threshold sits above
    // the cube-root spread of a perturbed unipotent Jordan block.
    if eig.iter().any(|l| (l.norm() - 1.0).abs() > 1e-5) {
        return out(IsometryKind::Loxodromic, false);
    }
    let cluster = 1e-4;
    let close = |a: Cx, b: Cx| (a - b).norm() < cluster;
    let pairs = [(0, 1, 2), (0, 2, 1), (1, 2, 0)];
    if close(eig[0], eig[1]) && close(eig[1], eig[2]) && close(eig[0], eig[2]) {
        // Unipotent up to scale but not scalar.
        return out(IsometryKind::Parabolic, false);
    }
    for (i, j, _) in pairs {
        if close(eig[i], eig[j]) {
            let mu = (eig[i] + eig[j]) / r(2.0);
            let a = m - Mat3::identity() * mu;
            let sv = a.singular_values();
            let mut s: Vec<f64> = sv.iter().copied().collect();
            s.sort_by(|x, y| y.partial_cmp(x).unwrap());
            return if s[1] <= 1e-6 * s[0].max(1e-300) {
                out(IsometryKind::Elliptic, false)
            } else {
                out(IsometryKind::Parabolic, false)
            };
        }
    }
    out(IsometryKind::Ambiguous, false)
}

/// Translation length 2 ln |lambda_max| of a loxodromic element.
pub fn translation_length(g: &Isometry) -> Result<f64> {
    let cls = classify(g);
    if cls.kind != IsometryKind::Loxodromic {
        return domain(format!(
            "translation length of a non-loxodromic element ({:?})",
            cls.kind
        ));
    }
    let m = unit_determinant(&g.m);
    if is_real_matrix(&m, 1e-15) {
        // real eigenvalues +-(lambda, 1, 1/lambda): the trace is far better conditioned than
        // the clustered roots of the characteristic polynomial
        let x = (m.trace().re.abs() - 1.0) / 2.0;
        if x > 1.0 {
            return Ok(2.0 * x.acosh());
        }
    }
    let eig = eigenvalues3(&m);
    // |l_max| = 1/|l_min| for determinant-one isometries; averaging both halves the error.
    let big = eig[0].norm();
    let small = eig[2].norm();
    Ok((big / small).ln())
}

/// C maps ball coordinates to Siegel coordinates with C^T J_S C = J_B.
pub fn cayley_matrix() -> Mat3 {
    mat_from_real([[0.0, 0.5, 0.5], [1.0, 0.0, 0.0], [0.0, 1.0, -1.0]])
}

/// C^-1 = J_B C^T J_S.
pub fn cayley_inverse_matrix() -> Mat3 {
    mat_from_real([[0.0, 1.0, 0.0], [1.0, 0.0, 0.5], [1.0, 0.0, -0.5]])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CayleyDirection {
    BallToSiegel,
    SiegelToBall,
}

impl CayleyDirection {
    pub fn source(self) -> FormKind {
        match self {
            CayleyDirection::BallToSiegel => FormKind::Ball,
            CayleyDirection::SiegelToBall => FormKind::Siegel,
        }
    }

    pub fn target(self) -> FormKind {
        match self {
            CayleyDirection::BallToSiegel => FormKind::Siegel,
            CayleyDirection::SiegelToBall => FormKind::Ball,
        }
    }

    fn matrix(self) -> Mat3 {
        match self {
            CayleyDirection::BallToSiegel => cayley_matrix(),
            CayleyDirection::SiegelToBall => cayley_inverse_matrix(),
        }
    }
}

pub fn cayley_lift(v: &Vec3, dir: CayleyDirection) -> Vec3 {
    dir.matrix() * v
}

/// Expresses an isometry in the other model. Identity if it is already there.
pub fn cayley_isometry(g: &Isometry, dir: CayleyDirection) -> Isometry {
    if g.form == dir.target() {
        return g.clone();
    }
    let (c, ci) = match dir {
        CayleyDirection::BallToSiegel => (cayley_matrix(), cayley_inverse_matrix()),
        CayleyDirection::SiegelToBall => (cayley_inverse_matrix(), cayley_matrix()),
    };
    Isometry {
        m: c * g.m * ci,
        form: dir.target(),
    }
}

/// Isometry in the requested model.
pub fn in_model(g: &Isometry, form: FormKind) -> Isometry {
    match form {
        FormKind::Ball => cayley_isometry(g, CayleyDirection::SiegelToBall),
        FormKind::Siegel => cayley_isometry(g, CayleyDirection::BallToSiegel),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn products_on_basis_vectors() {
        let b = HermitianForm::BALL;
        let e0 = vec3(ONE, ZERO, ZERO);
        let e2 = vec3(ZERO, ZERO, ONE);
        assert_eq!(hermitian_product(&e0, &e0, &b), ONE);
        assert_eq!(hermitian_product(&e2, &e2, &b), -ONE);
        let v = vec3(ONE, ZERO, ONE);
        let w = vec3(ZERO, ONE, ZERO);
        assert_eq!(hermitian_product(&v, &w, &HermitianForm::SIEGEL), ZERO);
        assert_eq!(HermitianForm::BALL.signature(), (2, 1));
        assert_eq!(HermitianForm::SIEGEL.signature(), (2, 1));
    }

    #[test]
    fn cayley_intertwines_forms() {
        let cm = cayley_matrix();
        let lhs = cm.transpose() * HermitianForm::SIEGEL.matrix() * cm;
        assert!(norm_inf(&(lhs - HermitianForm::BALL.matrix())) < 1e-15);
        assert!(norm_inf(&(cm * cayley_inverse_matrix() - Mat3::identity())) < 1e-15);
    }

    #[test]
    fn ball_origin_goes_to_height_one() {
        let v = cayley_lift(&BallPoint::origin().lift(), CayleyDirection::BallToSiegel);
        let v = v / v[2];
        assert!((v - vec3(r(-0.5), ZERO, ONE)).norm() < 1e-15);
        let back = cayley_lift(&v, CayleyDirection::SiegelToBall);
        let p = BallPoint::from_lift(&back).unwrap();
        assert!(p.norm_sqr().sqrt() < 1e-12);
        // the pole
        let pole = cayley_lift(
            &BallPoint::real(0.0, 1.0).lift(),
            CayleyDirection::BallToSiegel,
        );
        assert!(pole[1].norm() < 1e-15 && pole[2].norm() < 1e-15);
    }

    #[test]
    fn real_points_stay_real() {
        for &(x, y) in &[(0.3, -0.2), (0.6, 0.7), (-0.1, 0.9)] {
            let v = cayley_lift(&BallPoint::real(x, y).lift(), CayleyDirection::BallToSiegel);
            assert!(v.iter().all(|z| z.im == 0.0));
        }
    }

    #[test]
    fn distance_examples() {
        let o = BallPoint::origin();
        assert_eq!(distance(&o, &o).unwrap(), 0.0);
        let d = distance(&o, &BallPoint::real(0.5, 0.0)).unwrap();
        assert!(close(d, 2.0 * 0.5f64.atanh(), 1e-14));
        let mut last = 0.0;
        for t in [0.9, 0.99, 0.999, 0.999999] {
            let d = distance(&o, &BallPoint::real(t, 0.0)).unwrap();
            assert!(d > last);
            last = d;
        }
        assert!(distance(&o, &BallPoint::real(1.0, 0.0)).is_err());
    }

    #[test]
    fn classify_examples() {
        let id = classify(&Isometry::identity(FormKind::Siegel));
        assert_eq!(id.kind, IsometryKind::Elliptic);
        assert!(id.identity);
        assert!(id.discriminant.abs() < 1e-12);

        let d = Isometry::new(
            Mat3::from_diagonal(&vec3(r(2.0), ONE, r(0.5))),
            FormKind::Siegel,
        )
        .unwrap();
        let cl = classify(&d);
        assert_eq!(cl.kind, IsometryKind::Loxodromic);
        // f(3.5) computed independently: 150.0625 - 343 + 220.5 - 27
        assert!(close(cl.discriminant, 0.5625, 1e-12));

        let th = PI / 3.0;
        let e = Cx::from_polar(1.0, th);
        let m = Mat3::from_diagonal(&vec3(e, Cx::from_polar(1.0, -2.0 * th), e));
        let cl = classify(&Isometry::new(m, FormKind::Siegel).unwrap());
        assert_eq!(cl.kind, IsometryKind::Elliptic);
        assert!(!cl.identity);

        // a regular elliptic with distinct eigenvalues
        let m = Mat3::from_diagonal(&vec3(ONE, Cx::from_polar(1.0, 0.7), ONE));
        let g = Isometry::new(m, FormKind::Siegel).unwrap();
        assert_eq!(classify(&g).kind, IsometryKind::Elliptic);

        // vertical Heisenberg translation
        let mut t = Mat3::identity();
        t[(0, 2)] = c(0.0, 0.5);
        let g = Isometry::new(t, FormKind::Siegel).unwrap();
        assert_eq!(classify(&g).kind, IsometryKind::Parabolic);
    }

    #[test]
    fn translation_length_examples() {
        let d = Isometry::new(
            Mat3::from_diagonal(&vec3(r(2.0), ONE, r(0.5))),
            FormKind::Siegel,
        )
        .unwrap();
        let l = translation_length(&d).unwrap();
        assert!(close(l, 2.0 * 2f64.ln(), 1e-12));
        // cross-check: (-s,0,1) and (-4s,0,1) are points on the axis u = 2s, 8s
        let s = 0.7;
        let p = vec3(r(-s), ZERO, ONE);
        let q = d.apply(&p);
        let dist = distance_lifts(&p, &q, &HermitianForm::SIEGEL).unwrap();
        assert!(close((dist / 2.0).cosh(), 1.25, 1e-12));
        assert!(close(dist, l, 1e-12));
        assert!(translation_length(&Isometry::identity(FormKind::Siegel)).is_err());

        let eps = 1e-3;
        let g = Isometry::new(
            Mat3::from_diagonal(&vec3(r(1.0 + eps), ONE, r(1.0 / (1.0 + eps)))),
            FormKind::Siegel,
        )
        .unwrap();
        assert!(translation_length(&g).unwrap() < 3e-3);
    }

    fn arb_isometry() -> impl Strategy<Value = Isometry> {
        // products of Heisenberg translations, dilations and rotations in the Siegel model
        (
            -2.0..2.0f64,
            -2.0..2.0f64,
            -2.0..2.0f64,
            0.3..3.0f64,
            -3.0..3.0f64,
            -2.0..2.0f64,
            -2.0..2.0f64,
        )
            .prop_map(|(a, b, t, lam, eta, a2, t2)| {
                let tr = |x: Cx, v: f64| {
                    mat_from_real([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]) + {
                        let mut m = Mat3::zeros();
                        m[(0, 1)] = -x.conj();
                        m[(0, 2)] = c(-x.norm_sqr() / 2.0, v / 2.0);
                        m[(1, 2)] = x;
                        m
                    }
                };
                let dil =
                    Mat3::from_diagonal(&vec3(r(lam), Cx::from_polar(1.0, eta), r(1.0 / lam)));
                // the inversion swaps 0 and infinity
                let inv = mat_from_real([[0.0, 0.0, 1.0], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0]]);
                let m = tr(c(a, b), t) * dil * inv * tr(c(a2, -b), t2);
                Isometry::new(m, FormKind::Siegel).unwrap()
            })
    }

    fn arb_ball_point() -> impl Strategy<Value = BallPoint> {
        (0.0..0.95f64, 0.0..1.0f64, -PI..PI, -PI..PI).prop_map(|(rad, mix, a, b)| {
            let s = mix.sqrt();
            let t = (1.0 - mix).sqrt();
            BallPoint::new(Cx::from_polar(rad * s, a), Cx::from_polar(rad * t, b))
        })
    }

    proptest! {
        #[test]
        fn product_conjugate_symmetric(a in prop::array::uniform6(-3.0..3.0f64), b in prop::array::uniform6(-3.0..3.0f64)) {
            let v = vec3(c(a[0], a[1]), c(a[2], a[3]), c(a[4], a[5]));
            let w = vec3(c(b[0], b[1]), c(b[2], b[3]), c(b[4], b[5]));
            for f in [HermitianForm::BALL, HermitianForm::SIEGEL] {
                let x = f.product(&v, &w);
                let y = f.product(&w, &v);
                prop_assert!((x - y.conj()).norm() < 1e-12);
            }
        }

        #[test]
        fn isometries_preserve_form(g in arb_isometry()) {
            prop_assert!(g.form_residual() < 1e-12);
            let inv = g.inverse();
            prop_assert!(g.compose(&inv).identity_residual() < 1e-12);
        }

        #[test]
        fn triangle_inequality(p in arb_ball_point(), q in arb_ball_point(), s in arb_ball_point()) {
            let pq = distance(&p, &q).unwrap();
            let qs = distance(&q, &s).unwrap();
            let ps = distance(&p, &s).unwrap();
            prop_assert!(ps <= pq + qs + 1e-12);
            prop_assert!((pq - distance(&q, &p).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn distance_invariant(p in arb_ball_point(), q in arb_ball_point(), g in arb_isometry()) {
            let gb = in_model(&g, FormKind::Ball);
            let d0 = distance(&p, &q).unwrap();
            let gp = BallPoint::from_lift(&gb.apply(&p.lift())).unwrap();
            let gq = BallPoint::from_lift(&gb.apply(&q.lift())).unwrap();
            let d1 = distance(&gp, &gq).unwrap();
            prop_assert!((d0 - d1).abs() < 1e-8 * (1.0 + d0), "{} vs {}", d0, d1);
            let dl = distance_lifts(&p.lift(), &q.lift(), &HermitianForm::BALL).unwrap();
            prop_assert!((d0 - dl).abs() < 1e-6 * (1.0 + d0));
        }

        #[test]
        fn real_locus_is_curvature_quarter(x in -0.9..0.9f64, y in -0.9..0.9f64, a in -0.9..0.9f64, b in -0.9..0.9f64) {
            prop_assume!(x * x + y * y < 0.95 && a * a + b * b < 0.95);
            let p = BallPoint::real(x, y);
            let q = BallPoint::real(a, b);
            // Klein disk -> Poincare disk, then twice the Poincare distance.
            let poinc = |u: f64, v: f64| {
                let s = 1.0 + (1.0 - u * u - v * v).sqrt();
                Cx::new(u / s, v / s)
            };
            let (zp, zq) = (poinc(x, y), poinc(a, b));
            let disp = ((zp - zq) / (ONE - zq.conj() * zp)).norm();
            let expect = 2.0 * (2.0 * disp.atanh());
            prop_assert!((distance(&p, &q).unwrap() - expect).abs() < 1e-9 * (1.0 + expect));
        }

        #[test]
        fn classification_conjugation_invariant(g in arb_isometry(), h in arb_isometry(), lam in 1.1..4.0f64) {
            let d = Isometry::new(Mat3::from_diagonal(&vec3(r(lam), c(0.0, 1.0), r(1.0 / lam))), FormKind::Siegel).unwrap();
            let conj = d.conjugate_by(&h);
            prop_assert_eq!(classify(&conj).kind, IsometryKind::Loxodromic);
            let l0 = translation_length(&d).unwrap();
            let l1 = translation_length(&conj).unwrap();
            prop_assert!((l0 - l1).abs() < 1e-10 * (1.0 + norm_inf(h.matrix()).powi(2)));
            let k0 = classify(&g).kind;
            if k0 != IsometryKind::Ambiguous {
                prop_assert_eq!(classify(&g.conjugate_by(&h)).kind, k0);
            }
        }

        #[test]
        fn cayley_round_trip(p in arb_ball_point(), g in arb_isometry()) {
            let v = cayley_lift(&p.lift(), CayleyDirection::BallToSiegel);
            let back = BallPoint::from_lift(&cayley_lift(&v, CayleyDirection::SiegelToBall)).unwrap();
            prop_assert!((back.z[0] - p.z[0]).norm() < 1e-12 && (back.z[1] - p.z[1]).norm() < 1e-12);
            let gb = cayley_isometry(&g, CayleyDirection::SiegelToBall);
            prop_assert!(gb.form_residual() < 1e-12);
            let gs = cayley_isometry(&gb, CayleyDirection::BallToSiegel);
            prop_assert!(norm_inf(&(gs.matrix() - g.matrix())) < 1e-12 * norm_inf(g.matrix()).max(1.0));
        }
    }
}
