use serde::Serialize;

use crate::error::{domain, Result};
use crate::fuchsian::group::MarkedGroup;
use crate::heisenberg::HeisenbergPoint;
use crate::linalg::{in_model, FormKind, Isometry};
use crate::sl2::Sl2;
use crate::words::{enumerate, Word};

/// Quantization grid for element deduplication during enumeration.
pub const DEDUP_GRID: f64 = 1e-8;

/// Largest delta with sinh(ell/4) sinh(delta/2) <= 1/2.
pub fn collar_bound(ell: f64) -> Result<f64> {
    if !(ell > 0.0) {
        return domain("length must be positive");
    }
    Ok(2.0 * (1.0 / (2.0 * (ell / 4.0).sinh())).asinh())
}

/// The constant (1/2) csch(ln 63 / 4).
pub fn collar_threshold_constant() -> f64 {
    0.5 / (63f64.ln() / 4.0).sinh()
}

/// The length below which sinh(ell/2) stays under `collar_threshold_constant`.
pub fn collar_threshold_length() -> f64 {
    2.0 * collar_threshold_constant().asinh()
}

/// sinh(ell/4) sinh(d/4) - 1/2: nonnegative exactly when the collar inequality holds.
pub fn collar_slack(ell: f64, d: f64) -> f64 {
    (ell / 4.0).sinh() * (d / 4.0).sinh() - 0.5
}

#[derive(Clone, Debug, Serialize)]
pub struct CollarWitness {
    pub word: String,
    pub distance: f64,
    pub slack: f64,
    pub violates: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CollarReport {
    pub ell: f64,
    pub delta_max: f64,
    pub pass: bool,
    pub depth: usize,
    pub words_checked: usize,
    pub min_distance: f64,
    pub min_slack: f64,
    /// The smallest-slack words, violating ones first.
    pub witnesses: Vec<CollarWitness>,
}

/// Cross-ratio [p1,q1][p2,q2] / ([p1,q2][p2,q1]) of boundary points of the real line in
/// projective coordinates, where [x,y] = x0 y1 - x1 y0.
pub fn cross_ratio(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> f64 {
    let br = |x: (f64, f64), y: (f64, f64)| x.0 * y.1 - x.1 * y.0;
    br(p1, q1) * br(p2, q2) / (br(p1, q2) * br(p2, q1))
}

/// Distance (curvature -1/4) between the geodesics (p1,p2) and (q1,q2) of the real plane,
/// zero when they cross.
pub fn geodesic_distance(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> f64 {
    let q = cross_ratio(p1, p2, q1, q2);
    if !(q > 0.0) {
        return 0.0;
    }
    let q = q.min(1.0 / q);
    if q >= 1.0 {
        return 0.0;
    }
    // cosh(d) = (1+q)/(1-q) in curvature -1; the real plane here has curvature -1/4
    2.0 * ((1.0 + q) / (1.0 - q)).acosh()
}

fn real_projective(p: &HeisenbergPoint) -> Result<(f64, f64)> {
    match p {
        HeisenbergPoint::Infinity => Ok((1.0, 0.0)),
        HeisenbergPoint::Finite { xi, v } => {
            if xi.im.abs() > 1e-9 * (1.0 + xi.re.abs()) || v.abs() > 1e-9 * (1.0 + xi.re * xi.re) {
                return domain("point is off the real circle");
            }
            Ok((xi.re, 1.0))
        }
    }
}

/// Distance between the normalized axis (0, infinity) and its image under g.
pub fn axis_image_distance(g: &Isometry) -> Result<f64> {
    let g = in_model(g, FormKind::Siegel);
    let inf = real_projective(&crate::heisenberg::act(&g, &HeisenbergPoint::Infinity)?)?;
    let zero = real_projective(&crate::heisenberg::act(&g, &HeisenbergPoint::ORIGIN)?)?;
    Ok(geodesic_distance((1.0, 0.0), (0.0, 1.0), inf, zero))
}

/// The same distance from an SL(2,R) lift. With image ends a/c and b/d the cross-ratio is
/// bc/ad, so cosh of the curvature -1 distance is |ad + bc|. This stays accurate for long
/// words whose image axes are tiny.
pub fn axis_image_distance_lift(m: &Sl2) -> f64 {
    let ch = (m.a * m.d + m.b * m.c).abs();
    if ch <= 1.0 {
        return 0.0;
    }
    2.0 * ch.acosh()
}

fn stabilizes_axis(inf: (f64, f64), zero: (f64, f64)) -> bool {
    let at_inf = |p: (f64, f64)| p.1.abs() <= 1e-8 * p.0.abs();
    let at_zero = |p: (f64, f64)| p.0.abs() <= 1e-8 * p.1.abs();
    (at_inf(inf) && at_zero(zero)) || (at_zero(inf) && at_inf(zero))
}

/// Checks sinh(ell/4) sinh(d(A, gA)/4) >= 1/2 over reduced words up to `depth`,
/// excluding the stabilizer of the axis.
pub fn collar_check(g: &MarkedGroup, depth: usize) -> Result<CollarReport> {
    if depth < 1 {
        return domain("depth must be at least 1");
    }
    if !g.is_normalized() {
        return domain("collar check needs a normalized group");
    }
    let ell = g.ell()?;
    let delta_max = collar_bound(ell)?;
    let mut rows: Vec<(Word, f64)> = Vec::new();
    let mut checked = 0usize;
    if let Some(lifts) = g.letter_lifts() {
        for e in enumerate(&lifts, depth, DEDUP_GRID) {
            let m = e.element;
            if stabilizes_axis((m.a, m.c), (m.b, m.d)) {
                continue;
            }
            checked += 1;
            rows.push((e.word, axis_image_distance_lift(&m)));
        }
    } else {
        let mats = g.letter_matrices();
        for e in enumerate(&mats, depth, DEDUP_GRID) {
            let inf = real_projective(&crate::heisenberg::act(
                &e.element,
                &HeisenbergPoint::Infinity,
            )?)?;
            let zero = real_projective(&crate::heisenberg::act(
                &e.element,
                &HeisenbergPoint::ORIGIN,
            )?)?;
            if stabilizes_axis(inf, zero) {
                continue;
            }
            checked += 1;
            rows.push((e.word, geodesic_distance((1.0, 0.0), (0.0, 1.0), inf, zero)));
        }
    }
    let mut scored: Vec<(f64, Word, f64)> = rows
        .into_iter()
        .map(|(w, d)| (collar_slack(ell, d), w, d))
        .collect();
    scored.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.1.cmp(&b.1))
    });
    let tol = 1e-9;
    let pass = scored.iter().all(|s| s.0 >= -tol);
    let min_slack = scored.first().map(|s| s.0).unwrap_or(f64::INFINITY);
    let min_distance = scored.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
    let witnesses = scored
        .iter()
        .take(8)
        .map(|(slack, w, d)| CollarWitness {
            word: g.format_word(w),
            distance: *d,
            slack: *slack,
            violates: *slack < -tol,
        })
        .collect();
    Ok(CollarReport {
        ell,
        delta_max,
        pass,
        depth,
        words_checked: checked,
        min_distance,
        min_slack,
        witnesses,
    })
}
