//! The Cartan angular invariant and the nontriviality certificate for bent groups.

use std::f64::consts::PI;

use serde::Serialize;

use crate::bending::{bend_group, BendingParams, BentGroup, BoundaryAction};
use crate::error::{domain, Error, Result};
use crate::fuchsian::{attracting_fixed_point, MarkedGroup};
use crate::heisenberg::{act, cygan_metric, HeisenbergPoint};
use crate::linalg::{FormKind, HermitianForm, Vec3};
use crate::words::{enumerate, Letter, Word};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryTriple {
    pub x0: HeisenbergPoint,
    pub x1: HeisenbergPoint,
    pub x2: HeisenbergPoint,
}

fn distinct(a: &HeisenbergPoint, b: &HeisenbergPoint) -> bool {
    match (a, b) {
        (HeisenbergPoint::Infinity, HeisenbergPoint::Infinity) => false,
        (HeisenbergPoint::Finite { .. }, HeisenbergPoint::Finite { .. }) => {
            cygan_metric(a, b).map(|d| d > 1e-12).unwrap_or(false)
        }
        _ => true,
    }
}

impl BoundaryTriple {
    pub fn new(x0: HeisenbergPoint, x1: HeisenbergPoint, x2: HeisenbergPoint) -> Result<Self> {
        if !distinct(&x0, &x1) || !distinct(&x1, &x2) || !distinct(&x0, &x2) {
            return domain("triple points must be pairwise distinct");
        }
        Ok(BoundaryTriple { x0, x1, x2 })
    }
}

/// arg(-<x0,x1><x1,x2><x2,x0>) for null lifts in the Siegel model.
pub fn cartan_angle_lifts(a: &Vec3, b: &Vec3, c: &Vec3) -> Result<f64> {
    let f = HermitianForm::SIEGEL;
    let (ab, bc, ca) = (f.product(a, b), f.product(b, c), f.product(c, a));
    let scale =
        |u: &Vec3, v: &Vec3| crate::linalg::vec_norm_inf(u) * crate::linalg::vec_norm_inf(v);
    if ab.norm() <= 1e-14 * scale(a, b)
        || bc.norm() <= 1e-14 * scale(b, c)
        || ca.norm() <= 1e-14 * scale(c, a)
    {
        return domain("coincident points in the triple");
    }
    let t = -(ab * bc * ca);
    Ok(t.im.atan2(t.re))
}

pub fn cartan_angle(t: &BoundaryTriple) -> Result<f64> {
    if !distinct(&t.x0, &t.x1) || !distinct(&t.x1, &t.x2) || !distinct(&t.x0, &t.x2) {
        return domain("triple points must be pairwise distinct");
    }
    cartan_angle_lifts(&t.x0.lift(), &t.x1.lift(), &t.x2.lift())
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub eta: f64,
    pub applicable: bool,
    pub passed: bool,
    pub angle: f64,
    pub triple: BoundaryTriple,
    /// The G1 word whose orbit point gives x1, and the word g2 whose bent fixed point gives x2.
    pub x1_word: String,
    pub g2_word: String,
    pub g0_power_x1: i32,
    pub g0_power_x2: i32,
}

/// Moves a finite nonzero point by powers of the marked element (a dilation by `scale` in
/// the normalized frame) until its Cygan norm lies in [1, scale).
fn pull_to_annulus(
    b: &BentGroup,
    p: HeisenbergPoint,
    scale: f64,
) -> Result<(HeisenbergPoint, i32)> {
    let n = p.cygan_norm()?;
    if !(n > 0.0) {
        return domain("cannot pull the origin into the annulus");
    }
    let k = -(n.ln() / scale.ln()).floor() as i32;
    let gw = b.base().g_alpha().power(k);
    let g = b.evaluate(&gw);
    Ok((act(&g, &p)?, k))
}

/// The triple (x1, 0, x2_eta) from the proof that bending is nontrivial: x1 a G1 limit point
/// on the negative real axis, x2_eta the attracting fixed point of chi(g2) for a generator g2
/// outside G1 whose unbent fixed point is on the positive axis. Both are moved by powers of
/// the marked element into the Cygan annulus 1 <= |x| < e^{ell/2}.
pub fn nontriviality_certificate(b: &BentGroup, depth: usize) -> Result<Certificate> {
    let base = b.base();
    if !base.is_normalized() {
        return domain("certificate needs a normalized base group");
    }
    let ell = base.ell()?;
    let scale = (ell / 2.0).exp();
    let names = base.names();

    // x1: G1 orbit of the default seed, restricted to finite points on the negative ray
    let g1 = base.decomposition().g1().to_vec();
    let seed = base.default_seed()?;
    let g1_letters: Vec<Letter> = g1
        .iter()
        .flat_map(|&i| [Letter::new(i, false), Letter::new(i, true)])
        .collect();
    let mut candidates: Vec<(Word, HeisenbergPoint)> = vec![(Word::identity(), seed)];
    if depth >= 1 {
        if let Some(lifts) = base.letter_lifts() {
            let sub: Vec<crate::sl2::Sl2> = g1_letters
                .iter()
                .map(|l| lifts[l.code() as usize])
                .collect();
            for e in enumerate(&sub, depth.min(10), 1e-8) {
                let w = Word(
                    e.word
                        .0
                        .iter()
                        .map(|l| g1_letters[l.code() as usize])
                        .collect(),
                );
                let p = act(
                    &crate::fuchsian::represent(&e.element, FormKind::Siegel),
                    &seed,
                )?;
                candidates.push((w, p));
            }
        }
    }
    let target = scale.sqrt();
    let mut best: Option<(f64, Word, HeisenbergPoint, i32)> = None;
    for (w, p) in candidates {
        let HeisenbergPoint::Finite { xi, v } = p else {
            continue;
        };
        if !(xi.re < 0.0) || xi.im.abs() > 1e-9 * xi.norm() || v.abs() > 1e-9 * xi.norm_sqr() {
            continue;
        }
        let (q, k) = pull_to_annulus(b, p, scale)?;
        let score = (q.cygan_norm()? / target).ln().abs();
        if best.as_ref().map(|bb| score < bb.0 - 1e-12).unwrap_or(true) {
            best = Some((score, w, q, k));
        }
    }
    let (_, x1_word, x1, k1) = best
        .ok_or_else(|| Error::Domain("no G1 limit point found on the negative real ray".into()))?;

    // g2: first generator (or inverse) outside G1 with unbent fixed point on the positive ray
    let mut pick: Option<(Word, HeisenbergPoint)> = None;
    for i in base.decomposition().moved() {
        for inv in [false, true] {
            let w = Word::letter(Letter::new(i, inv));
            if let Ok(HeisenbergPoint::Finite { xi, .. }) = base.attracting_fixed_point(&w) {
                if xi.re > 0.0 && pick.is_none() {
                    let bent = attracting_fixed_point(&b.evaluate(&w))?;
                    pick = Some((w, bent));
                }
            }
        }
    }
    let (g2_word, x2) =
        pick.ok_or_else(|| Error::Domain("no generator with a positive fixed point".into()))?;
    let (x2, k2) = pull_to_annulus(b, x2, scale)?;
    let triple = BoundaryTriple::new(x1, HeisenbergPoint::ORIGIN, x2)?;
    let angle = cartan_angle(&triple)?;
    let eta = b.params().eta();
    let applicable = eta != 0.0;
    let tol = 1e-6;
    let passed = applicable && angle.abs() > tol && angle.abs() < PI / 2.0 - tol;
    Ok(Certificate {
        eta,
        applicable,
        passed,
        angle,
        triple,
        x1_word: x1_word.format(&names),
        g2_word: g2_word.format(&names),
        g0_power_x1: k1,
        g0_power_x2: k2,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub eta: f64,
    pub angle: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InjectivityScan {
    pub rows: Vec<ScanRow>,
    pub min_separation: f64,
    pub pass: bool,
}

/// Certificate angles for several bend angles; passes when they are pairwise distinct.
pub fn injectivity_scan(g: &MarkedGroup, etas: &[f64], depth: usize) -> Result<InjectivityScan> {
    for i in 0..etas.len() {
        for j in 0..i {
            if (etas[i] - etas[j]).abs() < 1e-12 {
                return Err(Error::Validation(format!(
                    "duplicate bend angle {}",
                    etas[i]
                )));
            }
        }
    }
    let max_eta = etas.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    // the certificate depends only on the generators, so any admissible zeta will do
    let zeta = (PI - max_eta) / 4.0;
    let mut rows = Vec::with_capacity(etas.len());
    for &eta in etas {
        let b = bend_group(g, BendingParams::new(eta, zeta)?)?;
        let c = nontriviality_certificate(&b, depth)?;
        rows.push(ScanRow {
            eta,
            angle: c.angle,
        });
    }
    let mut min_sep = f64::INFINITY;
    for i in 0..rows.len() {
        for j in 0..i {
            min_sep = min_sep.min((rows[i].angle - rows[j].angle).abs());
        }
    }
    Ok(InjectivityScan {
        pass: min_sep > 1e-6,
        rows,
        min_separation: min_sep,
    })
}
