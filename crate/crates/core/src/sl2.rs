//! SL(2,R) and its two embeddings into PU(2,1): the adjoint representation on
//! trace-zero matrices (ball form) and the symmetric-square action in Siegel coordinates.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::linalg::{
    cayley_inverse_matrix, cayley_matrix, mat_from_real, FormKind, Isometry, Mat3,
};

/// An eigenvalue with a projective eigenvector (x : y).
pub type Eigenpair = (f64, (f64, f64));

/// A real 2x2 matrix of determinant one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", from = "[f64; 4]")]
pub struct Sl2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl From<Sl2> for [f64; 4] {
    fn from(m: Sl2) -> Self {
        [m.a, m.b, m.c, m.d]
    }
}

impl From<[f64; 4]> for Sl2 {
    fn from(x: [f64; 4]) -> Self {
        Sl2 {
            a: x[0],
            b: x[1],
            c: x[2],
            d: x[3],
        }
    }
}

impl Sl2 {
    pub const IDENTITY: Sl2 = Sl2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    /// Checked constructor; the determinant must be one within 1e-9 relative.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let m = Sl2 { a, b, c, d };
        let scale = m.norm_inf().max(1.0);
        if !((m.det() - 1.0).abs() <= 1e-9 * scale * scale) {
            return domain(format!("determinant {} is not 1", m.det()));
        }
        Ok(m)
    }

    /// Rescales a matrix of positive determinant to determinant one.
    pub fn normalized(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det > 0.0) {
            return domain("cannot normalize a matrix with non-positive determinant");
        }
        let s = det.sqrt();
        Ok(Sl2 {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        })
    }

    /// ad - bc with the rounding of bc recovered by a fused multiply-add, so the result is
    /// accurate relative to the determinant even when ad and bc nearly cancel.
    pub fn det(&self) -> f64 {
        let w = self.b * self.c;
        let e = (-self.b).mul_add(self.c, w);
        self.a.mul_add(self.d, -w) + e
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn norm_inf(&self) -> f64 {
        self.a
            .abs()
            .max(self.b.abs())
            .max(self.c.abs())
            .max(self.d.abs())
    }

    /// Adjugate, exact for determinant-one matrices.
    pub fn inverse(&self) -> Sl2 {
        Sl2 {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn mul(&self, o: &Sl2) -> Sl2 {
        Sl2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    /// k m k^-1 for any invertible k, with k^-1 taken as adj(k)/det(k). Each entry is a sum
    /// of triple products accumulated in double-double, so cancellation between large
    /// terms does not cost digits and rounding in k itself is harmless.
    pub fn conjugated_by(&self, k: &Sl2) -> Sl2 {
        let km = [[k.a, k.b], [k.c, k.d]];
        let m = [[self.a, self.b], [self.c, self.d]];
        let adj = [[k.d, -k.b], [-k.c, k.a]];
        let (dh, dl) = dd_add(two_prod(k.a, k.d), two_prod(-k.b, k.c));
        let entry = |p: usize, q: usize| {
            let mut s = (0.0, 0.0);
            for (i, row) in m.iter().enumerate() {
                for (j, &mij) in row.iter().enumerate() {
                    let (h, l) = two_prod(km[p][i], mij);
                    let (h2, l2) = two_prod(h, adj[j][q]);
                    s = dd_add(s, (h2, l2 + l * adj[j][q]));
                }
            }
            let q0 = s.0 / dh;
            q0 + ((-q0).mul_add(dh, s.0) + s.1 - q0 * dl) / dh
        };
        Sl2 {
            a: entry(0, 0),
            b: entry(0, 1),
            c: entry(1, 0),
            d: entry(1, 1),
        }
    }

    pub fn neg(&self) -> Sl2 {
        Sl2 {
            a: -self.a,
            b: -self.b,
            c: -self.c,
            d: -self.d,
        }
    }

    /// Conjugation by diag(1,-1), the reflection x -> -x of the real line.
    pub fn flip(&self) -> Sl2 {
        Sl2 {
            a: self.a,
            b: -self.b,
            c: -self.c,
            d: self.d,
        }
    }

    pub fn to_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.a, self.b, self.c, self.d)
    }

    /// Action on projective coordinates (x : y) of the real line.
    pub fn act_projective(&self, p: (f64, f64)) -> (f64, f64) {
        (self.a * p.0 + self.b * p.1, self.c * p.0 + self.d * p.1)
    }

    /// Moebius action on the upper half plane.
    pub fn act_complex(&self, z: num_complex::Complex64) -> num_complex::Complex64 {
        (z * self.a + self.b) / (z * self.c + self.d)
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.trace().abs() > 2.0
    }

    /// Translation length in the curvature -1 upper half plane.
    pub fn translation_length(&self) -> Result<f64> {
        if !self.is_hyperbolic() {
            return domain("translation length of a non-hyperbolic element");
        }
        Ok(2.0 * (self.trace().abs() / 2.0).acosh())
    }

    /// Eigenvalues (mu, 1/mu) with |mu| > 1 and corresponding eigenvectors in projective form.
    pub fn hyperbolic_eigen(&self) -> Result<(Eigenpair, Eigenpair)> {
        if !self.is_hyperbolic() {
            return domain("element is not hyperbolic");
        }
        let t = self.trace();
        let disc = (t * t - 4.0).sqrt();
        let mu = (t + t.signum() * disc) / 2.0;
        let nu = 1.0 / mu;
        Ok(((mu, self.kernel_vector(mu)), (nu, self.kernel_vector(nu))))
    }

    fn kernel_vector(&self, l: f64) -> (f64, f64) {
        let v1 = (self.b, l - self.a);
        let v2 = (l - self.d, self.c);
        if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) {
            v1
        } else {
            v2
        }
    }

    /// Attracting and repelling fixed points as projective vectors (x : y).
    pub fn fixed_points(&self) -> Result<((f64, f64), (f64, f64))> {
        let ((_, va), (_, vr)) = self.hyperbolic_eigen()?;
        Ok((va, vr))
    }

    /// The matrix of the action in Siegel coordinates on the boundary point x in R,
    /// lifted as ((x,1) symmetric square). Intertwines the Moebius action with xi = x.
    pub fn siegel(&self) -> Mat3 {
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        mat_from_real([
            [a * a, -a * b, -b * b / 2.0],
            [-2.0 * a * c, a * d + b * c, b * d],
            [-2.0 * c * c, 2.0 * c * d, d * d],
        ])
    }

    pub fn siegel_isometry(&self) -> Isometry {
        Isometry::from_matrix_unchecked(self.siegel(), FormKind::Siegel)
    }
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

fn dd_add(x: (f64, f64), y: (f64, f64)) -> (f64, f64) {
    let s = x.0 + y.0;
    let v = s - x.0;
    let e = (x.0 - (s - v)) + (y.0 - v);
    let t = e + x.1 + y.1;
    let h = s + t;
    (h, t - (h - s))
}

/// The adjoint action of m on trace-zero matrices in the basis diag(1,-1), [[0,1],[1,0]],
/// [[0,1],[-1,0]], on which -det is diag(1,1,-1).
pub fn adjoint_so21(m: &Sl2) -> Result<Isometry> {
    let scale = m.norm_inf().max(1.0);
    if !((m.det() - 1.0).abs() <= 1e-9 * scale * scale) {
        return domain(format!("determinant {} is not 1", m.det()));
    }
    Ok(Isometry::from_matrix_unchecked(
        adjoint_matrix(m),
        FormKind::Ball,
    ))
}

pub(crate) fn adjoint_matrix(m: &Sl2) -> Mat3 {
    let inv = m.inverse();
    let basis = [
        Sl2 {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: -1.0,
        },
        Sl2 {
            a: 0.0,
            b: 1.0,
            c: 1.0,
            d: 0.0,
        },
        Sl2 {
            a: 0.0,
            b: 1.0,
            c: -1.0,
            d: 0.0,
        },
    ];
    let mut out = [[0.0; 3]; 3];
    for (j, x) in basis.iter().enumerate() {
        let y = m.mul(x).mul(&inv);
        let coords = [y.a, (y.b + y.c) / 2.0, (y.b - y.c) / 2.0];
        for i in 0..3 {
            out[i][j] = coords[i];
        }
    }
    mat_from_real(out)
}

/// The Siegel symmetric-square matrix moved to the ball model, which agrees with the adjoint matrix.
pub fn siegel_in_ball(m: &Sl2) -> Mat3 {
    cayley_inverse_matrix() * m.siegel() * cayley_matrix()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm_inf, translation_length};
    use proptest::prelude::*;

    fn arb_sl2() -> impl Strategy<Value = Sl2> {
        (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, 0.2..3.0f64).prop_map(|(t, x, y, s)| {
            // rotation * diag * shear keeps the determinant exactly controlled
            let r = Sl2 {
                a: t.cos(),
                b: -t.sin(),
                c: t.sin(),
                d: t.cos(),
            };
            let dg = Sl2 {
                a: s,
                b: 0.0,
                c: 0.0,
                d: 1.0 / s,
            };
            let sh = Sl2 {
                a: 1.0,
                b: x,
                c: 0.0,
                d: 1.0,
            };
            let lo = Sl2 {
                a: 1.0,
                b: 0.0,
                c: y,
                d: 1.0,
            };
            r.mul(&dg).mul(&sh).mul(&lo)
        })
    }

    #[test]
    fn identity_and_det_check() {
        let id = adjoint_so21(&Sl2::IDENTITY).unwrap();
        assert!(norm_inf(&(id.matrix() - Mat3::identity())) == 0.0);
        assert!(adjoint_so21(&Sl2 {
            a: 2.0,
            b: 0.0,
            c: 0.0,
            d: 1.0
        })
        .is_err());
        assert!(Sl2::new(2.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn doubling_of_translation_length() {
        for l in [0.1, 0.5, 1.0, 3.0] {
            let m = Sl2 {
                a: (l / 2.0f64).exp(),
                b: 0.0,
                c: 0.0,
                d: (-l / 2.0f64).exp(),
            };
            let h = Sl2 {
                a: 1.0,
                b: 0.3,
                c: 0.2,
                d: 1.06,
            };
            let m = h.mul(&m).mul(&h.inverse());
            let len = m.translation_length().unwrap();
            assert!((len - l).abs() < 1e-12);
            let g = adjoint_so21(&m).unwrap();
            assert!((translation_length(&g).unwrap() - 2.0 * l).abs() < 1e-10);
        }
    }

    #[test]
    fn siegel_dilation_is_square() {
        let lam = 1.7;
        let m = Sl2 {
            a: lam,
            b: 0.0,
            c: 0.0,
            d: 1.0 / lam,
        };
        let s = m.siegel();
        assert!((s[(0, 0)].re - lam * lam).abs() < 1e-15);
        assert!((s[(1, 1)].re - 1.0).abs() < 1e-15);
        assert!((s[(2, 2)].re - 1.0 / (lam * lam)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn homomorphism_and_kernel(m in arb_sl2(), n in arb_sl2()) {
            let am = adjoint_so21(&m).unwrap();
            let an = adjoint_so21(&n).unwrap();
            let amn = adjoint_so21(&m.mul(&n)).unwrap();
            let scale = norm_inf(am.matrix()) * norm_inf(an.matrix());
            prop_assert!(norm_inf(&(am.matrix() * an.matrix() - amn.matrix())) < 1e-12 * scale.max(1.0));
            prop_assert!(am.form_residual() < 1e-12);
            prop_assert!(am.is_real(0.0));
            let aneg = adjoint_so21(&m.neg()).unwrap();
            prop_assert_eq!(aneg.matrix(), am.matrix());
        }

        #[test]
        fn compensated_conjugation(m in arb_sl2(), k in arb_sl2(), lam in 0.1..10.0f64) {
            let c = m.conjugated_by(&k);
            let plain = k.mul(&m).mul(&k.inverse());
            let scale = k.norm_inf().powi(2) * m.norm_inf();
            for (x, y) in <[f64; 4]>::from(c).into_iter().zip(<[f64; 4]>::from(plain)) {
                prop_assert!((x - y).abs() < 1e-13 * scale);
            }
            let scaled = Sl2 { a: lam * k.a, b: lam * k.b, c: lam * k.c, d: lam * k.d };
            let cs = m.conjugated_by(&scaled);
            let back = c.conjugated_by(&k.inverse());
            for ((x, y), (z, w)) in <[f64; 4]>::from(cs)
                .into_iter()
                .zip(<[f64; 4]>::from(c))
                .zip(<[f64; 4]>::from(back).into_iter().zip(<[f64; 4]>::from(m)))
            {
                prop_assert!((x - y).abs() < 1e-14 * scale);
                prop_assert!((z - w).abs() < 1e-13 * scale * k.norm_inf().powi(2));
            }
        }

        #[test]
        fn siegel_agrees_with_adjoint(m in arb_sl2()) {
            let ad = adjoint_so21(&m).unwrap();
            let s = siegel_in_ball(&m);
            prop_assert!(norm_inf(&(s - ad.matrix())) < 1e-12 * norm_inf(ad.matrix()).max(1.0));
            let si = m.siegel_isometry();
            prop_assert!(si.form_residual() < 1e-12);
        }

        #[test]
        fn siegel_intertwines_moebius(m in arb_sl2(), x in -5.0..5.0f64) {
            use crate::linalg::{r, vec3};
            let p = vec3(r(-x * x / 2.0), r(x), r(1.0));
            let q = m.siegel() * p;
            let (num, den) = m.act_projective((x, 1.0));
            prop_assume!(den.abs() > 1e-3);
            let y = num / den;
            prop_assert!((q[1] / q[2] - r(y)).norm() < 1e-9 * (1.0 + y.abs()));
            prop_assert!((q[0] / q[2] - r(-y * y / 2.0)).norm() < 1e-8 * (1.0 + y * y));
        }

        #[test]
        fn flip_is_conjugation_by_reflection(m in arb_sl2()) {
            use crate::linalg::{r, vec3};
            let dm = Mat3::from_diagonal(&vec3(r(-1.0), r(1.0), r(-1.0)));
            let lhs = m.flip().siegel();
            let rhs = dm * m.siegel() * dm;
            prop_assert!(norm_inf(&(lhs - rhs)) < 1e-12 * norm_inf(&rhs).max(1.0));
        }
    }
}
