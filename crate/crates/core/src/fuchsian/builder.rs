use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::fuchsian::group::{Decomposition, Generator, MarkedGroup};
use crate::linalg::FormKind;
use crate::sl2::Sl2;
use crate::words::Word;

/// Largest boundary length accepted by the holed-torus builder.
pub const MAX_BOUNDARY_LENGTH: f64 = 20.0;

/// Common trace t > 3 of a, b and ab for a one-holed torus whose boundary [a,b]
/// has the given length: t^3 - 3t^2 + 2 - 2 cosh(ell/4) = 0.
pub fn holed_torus_trace(ell: f64) -> Result<f64> {
    if !(ell > 0.0) || ell > MAX_BOUNDARY_LENGTH {
        return domain(format!(
            "boundary length {ell} outside (0, {MAX_BOUNDARY_LENGTH}]"
        ));
    }
    let k = 2.0 - 2.0 * (ell / 4.0).cosh();
    let f = |t: f64| t * t * t - 3.0 * t * t + k;
    let (mut lo, mut hi) = (3.0, 4.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    // one Newton step from the bracket midpoint
    let t = 0.5 * (lo + hi);
    let df = 3.0 * t * t - 6.0 * t;
    Ok(t - f(t) / df)
}

/// A one-holed torus (a, b) with tr a = tr b = tr ab and a diagonal. The boundary is
/// the commutator [a,b].
pub fn holed_torus(ell: f64) -> Result<(Sl2, Sl2)> {
    let t = holed_torus_trace(ell)?;
    let lam = (t + (t * t - 4.0).sqrt()) / 2.0;
    let a = Sl2 {
        a: lam,
        b: 0.0,
        c: 0.0,
        d: 1.0 / lam,
    };
    let p = t / (lam + 1.0);
    let w = t - p;
    let q = (p * w - 1.0).sqrt();
    let b = Sl2 {
        a: p,
        b: q,
        c: q,
        d: w,
    };
    Ok((a, b))
}

/// Conjugates a holed torus so that its boundary is diagonal with attracting fixed point at
/// infinity. Entries grow like 1/ell in this frame.
fn boundary_frame(a: &Sl2, b: &Sl2) -> Result<(Sl2, Sl2)> {
    let comm = commutator(a, b);
    let ((_, va), (_, vr)) = comm.hyperbolic_eigen()?;
    // k^-1 has the eigenvectors as columns, scaled to equal norms
    let det = va.0 * vr.1 - vr.0 * va.1;
    let al = (vr.0.hypot(vr.1) / (va.0.hypot(va.1) * det.abs())).sqrt();
    let kinv = Sl2 {
        a: va.0 * al,
        b: vr.0 / (det * al),
        c: va.1 * al,
        d: vr.1 / (det * al),
    };
    let k = kinv.inverse();
    let conj = |m: &Sl2| k.mul(m).mul(&kinv);
    Ok((conj(a), conj(b)))
}

pub fn commutator(a: &Sl2, b: &Sl2) -> Sl2 {
    a.mul(b).mul(&a.inverse()).mul(&b.inverse())
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Genus-two surface group glued from two one-holed tori along [a1,b1] = [a2,b2]^-1,
/// with a twist (in the curvature -1/4 normalization) along the common axis.
/// Returned in the ball model with SL(2,R) lifts attached.
///
/// Generator entries grow like 1/ell_alpha, so relation residuals in double precision grow
/// like its fourth power; below ell_alpha of about 0.35 they exceed the validation tolerance
/// and construction fails.
pub fn genus2_group(ell_alpha: f64, twist: f64) -> Result<MarkedGroup> {
    if !twist.is_finite() {
        return domain("twist must be finite");
    }
    let (a1, b1) = holed_torus(ell_alpha)?;
    let (a1, b1) = boundary_frame(&a1, &b1)?;
    // rotation by pi about i moves the torus to the other side of the axis and inverts the boundary
    let rot = Sl2 {
        a: 0.0,
        b: 1.0,
        c: -1.0,
        d: 0.0,
    };
    let s = (twist / 4.0).exp();
    let tw = Sl2 {
        a: s,
        b: 0.0,
        c: 0.0,
        d: 1.0 / s,
    };
    let h = tw.mul(&rot);
    let hinv = h.inverse();
    let a2 = h.mul(&a1).mul(&hinv);
    let b2 = h.mul(&b1).mul(&hinv);
    let c1 = commutator(&a1, &b1);
    let c2 = commutator(&a2, &b2);
    let gap = (c1.trace() - c2.trace()).abs();
    if !(gap < 1e-9 * c1.trace().abs().max(1.0)) {
        return Err(Error::Construction {
            message: "boundary traces do not match".into(),
            residual: gap,
        });
    }
    let n = names(&["a1", "b1", "a2", "b2"]);
    let generators = [a1, b1, a2, b2]
        .iter()
        .zip(&n)
        .map(|(m, name)| Generator::from_lift(name.clone(), *m, FormKind::Ball))
        .collect();
    let relation = Word::parse("a1.b1.a1^-1.b1^-1.a2.b2.a2^-1.b2^-1", &n)?;
    let g_alpha = Word::parse("a1.b1.a1^-1.b1^-1", &n)?;
    MarkedGroup::new(
        generators,
        vec![relation],
        g_alpha,
        Decomposition::Amalgam {
            g1: vec![0, 1],
            g2: vec![2, 3],
        },
        false,
    )
}

fn rot(t: f64) -> Sl2 {
    Sl2 {
        a: (t / 2.0).cos(),
        b: -(t / 2.0).sin(),
        c: (t / 2.0).sin(),
        d: (t / 2.0).cos(),
    }
}

fn boost(d: f64) -> Sl2 {
    Sl2 {
        a: (d / 2.0).cosh(),
        b: (d / 2.0).sinh(),
        c: (d / 2.0).sinh(),
        d: (d / 2.0).cosh(),
    }
}

/// The regular octagon group with angles pi/4 centred at i, with side pairings
/// labelled so that [a1,b1][a2,b2] = 1. Its geometry is fixed.
pub fn octagon_group() -> Result<MarkedGroup> {
    let r_in = (1.0 / (PI / 8.0).tan()).acosh();
    let m = |i: usize| rot(i as f64 * PI / 4.0).mul(&boost(r_in));
    // maps side i to side k, swapping the half-planes
    let g = |i: usize, k: usize| m(k).mul(&rot(PI)).mul(&m(i).inverse());
    let gens = [g(5, 7), g(6, 4), g(1, 3), g(2, 0)];
    let n = names(&["a1", "b1", "a2", "b2"]);
    let generators = gens
        .iter()
        .zip(&n)
        .map(|(x, name)| Generator::from_lift(name.clone(), *x, FormKind::Ball))
        .collect();
    MarkedGroup::new(
        generators,
        vec![Word::parse("a1.b1.a1^-1.b1^-1.a2.b2.a2^-1.b2^-1", &n)?],
        Word::parse("a1.b1.a1^-1.b1^-1", &n)?,
        Decomposition::Amalgam {
            g1: vec![0, 1],
            g2: vec![2, 3],
        },
        false,
    )
}

/// Re-marks a genus-two group with generators a1, b1, a2, b2 and relation
/// [a1,b1][a2,b2] as an HNN extension along the non-separating a1-curve: stable letter b1,
/// G1 = <a1, a2, b2>. The marked element is b1 a1 b1^-1 = [a2,b2] a1, written in G1.
///
/// After normalizing on this curve the genus-two family keeps its relations to 1e-10 only
/// for separating lengths between about 2 and 15; the octagon group is well inside range.
pub fn hnn_split(g: &MarkedGroup) -> Result<MarkedGroup> {
    let n = g.names();
    if n != ["a1", "b1", "a2", "b2"] {
        return Err(Error::Validation(
            "expected generators a1, b1, a2, b2".into(),
        ));
    }
    MarkedGroup::new(
        g.generators().to_vec(),
        g.relations().to_vec(),
        Word::parse("a2.b2.a2^-1.b2^-1.a1", &n)?,
        Decomposition::Hnn {
            g1: vec![0, 2, 3],
            stable: 1,
        },
        false,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::normalize_axis;
    use crate::linalg::translation_length;
    use crate::sl2::adjoint_so21;

    #[test]
    fn holed_torus_boundary_has_requested_length() {
        for ell in [1e-4, 0.05, 0.5, 1.0, 3.0, 10.0, MAX_BOUNDARY_LENGTH] {
            let (a, b) = holed_torus(ell).unwrap();
            let c = adjoint_so21(&commutator(&a, &b)).unwrap();
            assert!(
                (translation_length(&c).unwrap() - ell).abs() < 1e-8,
                "ell {ell}"
            );
            assert!((a.trace() - b.trace()).abs() < 1e-10);
            assert!((a.trace() - a.mul(&b).trace()).abs() < 1e-10);
        }
    }

    #[test]
    fn trace_is_monotone_and_degenerates_to_cusp() {
        let ts: Vec<f64> = [0.01, 0.1, 0.5, 1.0, 2.0, 5.0]
            .iter()
            .map(|&l| holed_torus_trace(l).unwrap())
            .collect();
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
        let (a, b) = holed_torus(1e-6).unwrap();
        assert!((commutator(&a, &b).trace() + 2.0).abs() < 1e-12);
        assert!(holed_torus_trace(0.0).is_err());
        assert!(holed_torus_trace(MAX_BOUNDARY_LENGTH * 2.0).is_err());
    }

    #[test]
    fn genus_two_relation_and_length() {
        let g = genus2_group(0.5, 0.0).unwrap();
        assert!(g.relation_residual() < 1e-10);
        let n = normalize_axis(&g).unwrap();
        assert!((n.ell().unwrap() - 0.5).abs() < 1e-8);
        assert!(genus2_group(-1.0, 0.0).is_err());
        assert!(genus2_group(0.5, f64::NAN).is_err());
    }

    #[test]
    fn twist_changes_length_spectrum() {
        let w = |g: &MarkedGroup| {
            let word = g.parse_word("a1.a2").unwrap();
            g.evaluate_lift(&word)
                .unwrap()
                .translation_length()
                .unwrap()
        };
        let g0 = genus2_group(0.5, 0.0).unwrap();
        let g1 = genus2_group(0.5, 0.3).unwrap();
        assert!((w(&g0) - w(&g1)).abs() > 1e-3);
        // the marked length is untouched by the twist
        assert!((g0.ell().unwrap() - g1.ell().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn octagon_and_hnn_split() {
        let g = octagon_group().unwrap();
        assert!(g.relation_residual() < 1e-10);
        let h = hnn_split(&g).unwrap();
        assert!(matches!(
            h.decomposition(),
            Decomposition::Hnn { stable: 1, .. }
        ));
        // b1 a1 b1^-1 equals the marked word
        let conj = h.parse_word("b1.a1.b1^-1").unwrap();
        assert!(h.evaluate(&conj).projectively_eq(&h.g_alpha_matrix(), 1e-9));
    }

    #[test]
    fn hnn_split_of_the_family_normalizes() {
        for ell in [2.5, 3.0, 5.0, 10.0] {
            let g = genus2_group(ell, 0.0).unwrap();
            let a1 = g.generators()[0]
                .lift
                .unwrap()
                .translation_length()
                .unwrap();
            let n = normalize_axis(&hnn_split(&g).unwrap()).unwrap();
            assert!(n.relation_residual() < 1e-10, "ell {ell}");
            // the marked curve is conjugate to a1; lengths here are at curvature -1/4
            assert!((n.ell().unwrap() - 2.0 * a1).abs() < 1e-9, "ell {ell}");
        }
    }
}
