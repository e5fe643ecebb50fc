use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::fuchsian::group::MarkedGroup;
use crate::heisenberg::HalfSpacePoint;
use crate::linalg::{
    cayley_lift, distance, r, vec3, BallPoint, CayleyDirection, FormKind, Isometry, Vec3,
};
use crate::words::{enumerate, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PolygonStatus {
    Complete,
    Incomplete,
}

#[derive(Clone, Debug, Serialize)]
pub struct DirichletSide {
    pub word: String,
    #[serde(skip)]
    pub letters: Word,
    #[serde(skip)]
    pub element: Isometry,
    /// Endpoints in Klein coordinates of the real plane of the ball.
    pub start: (f64, f64),
    pub end: (f64, f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct DirichletPolygon {
    pub center: (f64, f64),
    pub sides: Vec<DirichletSide>,
    pub truncation_depth: usize,
    pub status: PolygonStatus,
}

#[derive(Clone, Debug)]
struct Candidate {
    word: Word,
    element: Isometry,
    normal: (f64, f64, f64),
    displacement: f64,
}

/// Future-pointing lift of a Klein-disk point with hermitian square -1.
fn hyperboloid(p: (f64, f64)) -> [f64; 3] {
    let s = (1.0 - p.0 * p.0 - p.1 * p.1).sqrt();
    [p.0 / s, p.1 / s, 1.0 / s]
}

fn lorentz(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] - a[2] * b[2]
}

fn real_vec(v: &Vec3) -> [f64; 3] {
    [v[0].re, v[1].re, v[2].re]
}

/// Dirichlet polygon of a Fuchsian marked group about a point of the real plane, cut out by
/// the bisectors of z and gz for reduced words g up to `depth`.
pub fn dirichlet_polygon(
    g: &MarkedGroup,
    center: &BallPoint,
    depth: usize,
) -> Result<DirichletPolygon> {
    if depth < 2 {
        return domain("depth must be at least 2");
    }
    if !center.is_real(1e-12) {
        return domain("center is off the real plane");
    }
    if !center.is_interior() {
        return domain("center must be an interior point");
    }
    let ball = g.in_form(FormKind::Ball);
    let cz = (center.z[0].re, center.z[1].re);
    let z = hyperboloid(cz);
    let zl = vec3(r(z[0]), r(z[1]), r(z[2]));
    let elements: Vec<(Word, Isometry)> = if let Some(lifts) = ball.letter_lifts() {
        enumerate(&lifts, depth, 1e-8)
            .into_iter()
            .map(|e| {
                (
                    e.word,
                    crate::fuchsian::group::represent(&e.element, FormKind::Ball),
                )
            })
            .collect()
    } else {
        enumerate(&ball.letter_matrices(), depth, 1e-8)
            .into_iter()
            .map(|e| (e.word, e.element))
            .collect()
    };
    let mut cands: Vec<Candidate> = Vec::with_capacity(elements.len());
    for (word, element) in elements {
        if !element.is_real(1e-9) {
            return domain("group is not Fuchsian");
        }
        let mut gz = real_vec(&element.apply(&zl));
        if gz[2] < 0.0 {
            gz = [-gz[0], -gz[1], -gz[2]];
        }
        let w = [gz[0] - z[0], gz[1] - z[1], gz[2] - z[2]];
        let scale = w.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if scale < 1e-12 {
            continue;
        }
        let displacement = 2.0 * (-lorentz(&gz, &z)).max(1.0).acosh();
        // <x, w> <= 0 with x = (x1, x2, 1): w0 x1 + w1 x2 <= w2
        cands.push(Candidate {
            word,
            element,
            normal: (w[0] / scale, w[1] / scale, w[2] / scale),
            displacement,
        });
    }
    cands.sort_by(|a, b| {
        a.displacement
            .partial_cmp(&b.displacement)
            .unwrap()
            .then_with(|| a.word.cmp(&b.word))
    });

    // polygon as (vertex, tag of the edge leaving it)
    let mut poly: Vec<((f64, f64), Option<usize>)> = vec![
        ((-2.0, -2.0), None),
        ((2.0, -2.0), None),
        ((2.0, 2.0), None),
        ((-2.0, 2.0), None),
    ];
    for (ci, c) in cands.iter().enumerate() {
        let f = |p: (f64, f64)| c.normal.0 * p.0 + c.normal.1 * p.1 - c.normal.2;
        let eps = 1e-13;
        if poly.iter().all(|(p, _)| f(*p) <= eps) {
            continue;
        }
        let n = poly.len();
        let mut out = Vec::with_capacity(n + 2);
        for i in 0..n {
            let (p, tag) = poly[i];
            let q = poly[(i + 1) % n].0;
            let (fp, fq) = (f(p), f(q));
            let pin = fp <= eps;
            let qin = fq <= eps;
            let cross = || {
                let t = fp / (fp - fq);
                (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1))
            };
            match (pin, qin) {
                (true, true) => out.push((p, tag)),
                (true, false) => {
                    out.push((p, tag));
                    if fp < -eps {
                        out.push((cross(), Some(ci)));
                    } else {
                        // p is on the new line; the edge leaving p now runs along it
                        out.last_mut().unwrap().1 = Some(ci);
                    }
                }
                (false, true) => {
                    if fq < -eps {
                        out.push((cross(), tag));
                    }
                }
                (false, false) => {}
            }
        }
        poly = out;
        if poly.len() < 3 {
            return domain("polygon collapsed");
        }
    }
    // merge consecutive edges carrying the same tag
    let mut merged: Vec<((f64, f64), Option<usize>)> = Vec::new();
    for (p, tag) in poly.iter().copied() {
        if let Some(last) = merged.last() {
            if last.1 == tag && tag.is_some() {
                continue;
            }
        }
        merged.push((p, tag));
    }
    if merged.len() > 1 && merged[0].1 == merged[merged.len() - 1].1 && merged[0].1.is_some() {
        merged.remove(0);
    }
    let n = merged.len();
    let mut complete = true;
    let names = g.names();
    let mut sides = Vec::with_capacity(n);
    for i in 0..n {
        let (p, tag) = merged[i];
        let q = merged[(i + 1) % n].0;
        if p.0 * p.0 + p.1 * p.1 >= 1.0 - 1e-12 {
            complete = false;
        }
        match tag {
            Some(ci) => sides.push(DirichletSide {
                word: cands[ci].word.format(&names),
                letters: cands[ci].word.clone(),
                element: cands[ci].element.clone(),
                start: p,
                end: q,
            }),
            None => complete = false,
        }
    }
    let mut poly = DirichletPolygon {
        center: cz,
        sides,
        truncation_depth: depth,
        status: if complete {
            PolygonStatus::Complete
        } else {
            PolygonStatus::Incomplete
        },
    };
    if complete && poly.pairing_residual().map(|r| r > 1e-6).unwrap_or(true) {
        poly.status = PolygonStatus::Incomplete;
    }
    Ok(poly)
}

fn klein_apply(g: &Isometry, p: (f64, f64)) -> (f64, f64) {
    let v = g.apply(&vec3(r(p.0), r(p.1), r(1.0)));
    (v[0].re / v[2].re, v[1].re / v[2].re)
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

impl DirichletPolygon {
    pub fn is_complete(&self) -> bool {
        self.status == PolygonStatus::Complete
    }

    pub fn vertices(&self) -> Vec<(f64, f64)> {
        self.sides.iter().map(|s| s.start).collect()
    }

    /// Index of the side paired with side i (its element is the inverse).
    pub fn partner(&self, i: usize) -> Option<usize> {
        let inv = self.sides[i].element.inverse();
        self.sides
            .iter()
            .position(|s| s.element.projectively_eq(&inv, 1e-8))
    }

    /// Largest Klein-coordinate mismatch between g^-1(side g) and side g^-1, or None if
    /// some side has no partner.
    pub fn pairing_residual(&self) -> Option<f64> {
        let mut worst: f64 = 0.0;
        for (i, s) in self.sides.iter().enumerate() {
            let j = self.partner(i)?;
            let inv = s.element.inverse();
            let a = klein_apply(&inv, s.start);
            let b = klein_apply(&inv, s.end);
            let t = &self.sides[j];
            // orientation is reversed by the pairing
            let e = dist2(a, t.end)
                .max(dist2(b, t.start))
                .min(dist2(a, t.start).max(dist2(b, t.end)));
            worst = worst.max(e);
        }
        Some(worst)
    }

    /// Interior angles at each vertex (between the incoming and outgoing sides).
    pub fn angles(&self) -> Vec<f64> {
        let v = self.vertices();
        let n = v.len();
        (0..n)
            .map(|i| {
                let p = hyperboloid(v[i]);
                let prev = hyperboloid(v[(i + n - 1) % n]);
                let next = hyperboloid(v[(i + 1) % n]);
                let tangent = |q: &[f64; 3]| {
                    let k = lorentz(q, &p);
                    [q[0] + k * p[0], q[1] + k * p[1], q[2] + k * p[2]]
                };
                let (t1, t2) = (tangent(&prev), tangent(&next));
                let c = lorentz(&t1, &t2) / (lorentz(&t1, &t1) * lorentz(&t2, &t2)).sqrt();
                c.clamp(-1.0, 1.0).acos()
            })
            .collect()
    }

    /// Area with real planes of curvature -1/4, from the angle defect.
    pub fn area(&self) -> Result<f64> {
        if !self.is_complete() {
            return domain("area of an incomplete polygon");
        }
        let n = self.sides.len() as f64;
        let defect = (n - 2.0) * PI - self.angles().iter().sum::<f64>();
        Ok(4.0 * defect)
    }
}

/// True iff exactly two sides meet the axis of the marked element, and they are paired by it.
pub fn two_side_check(poly: &DirichletPolygon, g: &MarkedGroup) -> Result<bool> {
    if !poly.is_complete() {
        return domain("polygon is incomplete; increase the depth");
    }
    let ga = crate::linalg::in_model(&g.g_alpha_matrix(), FormKind::Ball);
    let gs = crate::linalg::in_model(&ga, FormKind::Siegel);
    let a = crate::fuchsian::group::attracting_fixed_point(&gs)?.to_ball();
    let b = crate::fuchsian::group::repelling_fixed_point(&gs)?.to_ball();
    let (a, b) = ((a.z[0].re, a.z[1].re), (b.z[0].re, b.z[1].re));
    let line = |p: (f64, f64)| (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    let meeting: Vec<&DirichletSide> = poly
        .sides
        .iter()
        .filter(|s| line(s.start) * line(s.end) <= 0.0)
        .collect();
    if meeting.len() != 2 {
        return Ok(false);
    }
    let gi = ga.inverse();
    let hits_g = meeting.iter().any(|s| s.element.projectively_eq(&ga, 1e-8));
    let hits_gi = meeting.iter().any(|s| s.element.projectively_eq(&gi, 1e-8));
    Ok(hits_g && hits_gi)
}

/// The worst-case configuration for the two-sides argument, realized with actual points: z on the
/// axis at height one, m the midpoint of z and g_alpha z, and w on the perpendicular
/// bisector of z and g_alpha z at distance 2 delta from the axis.
#[derive(Clone, Debug, Serialize)]
pub struct LemmaConfiguration {
    pub ell: f64,
    pub delta: f64,
    /// d(m, z) - d(m, w): zero exactly when the bisector of z and w passes through m.
    pub offset: f64,
    /// d(w, z) - d(w, g_alpha z), which must vanish.
    pub bisector_residual: f64,
}

fn siegel_to_ball(p: HalfSpacePoint) -> Result<BallPoint> {
    BallPoint::from_lift(&cayley_lift(&p.lift(), CayleyDirection::SiegelToBall))
}

pub fn lemma_configuration(ell: f64, delta: f64) -> Result<LemmaConfiguration> {
    if !(ell > 0.0 && delta > 0.0) {
        return domain("ell and delta must be positive");
    }
    let z = siegel_to_ball(HalfSpacePoint::new(r(0.0), 0.0, 1.0)?)?;
    let gz = siegel_to_ball(HalfSpacePoint::new(r(0.0), 0.0, ell.exp())?)?;
    let m = siegel_to_ball(HalfSpacePoint::new(r(0.0), 0.0, (ell / 2.0).exp())?)?;
    // upper half-plane picture: m = i rho, the perpendicular is |w| = rho, and Siegel height is y^2
    let rho = (ell / 4.0).exp();
    let (x, y) = (rho * delta.tanh(), rho / delta.cosh());
    let w = siegel_to_ball(HalfSpacePoint::new(r(x), 0.0, y * y)?)?;
    let offset = distance(&m, &z)? - distance(&m, &w)?;
    let bisector_residual = distance(&w, &z)? - distance(&w, &gz)?;
    Ok(LemmaConfiguration {
        ell,
        delta,
        offset,
        bisector_residual,
    })
}
