use crate::error::{domain, Result};
use crate::fuchsian::group::{Generator, MarkedGroup};
use crate::heisenberg::{dilation, HalfSpacePoint, HeisenbergPoint};
use crate::linalg::{
    classify, in_model, is_real_matrix, mat_from_real, r, vec3, Cx, FormKind, HermitianForm,
    Isometry, IsometryKind, Mat3,
};
use crate::sl2::Sl2;

/// Conjugates the group into the Siegel model so that the marked element is diagonal,
/// attracting at infinity and repelling at the origin. The remaining dilation freedom is
/// fixed by balancing the off-diagonal entries of the generator lifts, and the
/// reflection freedom by putting the attracting fixed point of the first G1 generator
/// on the negative real axis.
pub fn normalize_axis(g: &MarkedGroup) -> Result<MarkedGroup> {
    if g.has_lifts() {
        normalize_lifted(g)
    } else {
        normalize_generic(g)
    }
}

fn check_loxodromic(g: &MarkedGroup) -> Result<()> {
    let kind = classify(&g.g_alpha_matrix()).kind;
    if kind != IsometryKind::Loxodromic {
        return domain(format!("marked element is {kind:?}, not loxodromic"));
    }
    Ok(())
}

fn normalize_lifted(g: &MarkedGroup) -> Result<MarkedGroup> {
    check_loxodromic(g)?;
    let m = g.evaluate_lift(g.g_alpha()).expect("lifts present");
    let ((_, va), (_, vr)) = m.hyperbolic_eigen()?;
    // eigenvector columns scaled to equal length, so k is as well conditioned as possible
    let det = va.0 * vr.1 - vr.0 * va.1;
    let al = (vr.0.hypot(vr.1) / (va.0.hypot(va.1) * det.abs())).sqrt();
    let kinv = Sl2 {
        a: va.0 * al,
        b: vr.0 / (det * al),
        c: va.1 * al,
        d: vr.1 / (det * al),
    };
    let k = kinv.inverse();
    let conj = |k: &Sl2| -> Vec<Sl2> {
        g.generators()
            .iter()
            .map(|x| x.lift.unwrap().conjugated_by(k))
            .collect()
    };
    let lifts = conj(&k);
    // diag(1/s, s) scales b by 1/s^2 and c by s^2; balance the off-diagonal mass
    let sb: f64 = lifts.iter().map(|m| m.b * m.b).sum();
    let sc: f64 = lifts.iter().map(|m| m.c * m.c).sum();
    let s = if sb > 0.0 && sc > 0.0 {
        (sb / sc).sqrt().sqrt().sqrt()
    } else {
        1.0
    };
    let k = Sl2 {
        a: k.a / s,
        b: k.b / s,
        c: k.c * s,
        d: k.d * s,
    };
    let mut lifts = conj(&k);
    let first = g.decomposition().g1()[0];
    let ((xa, ya), _) = lifts[first].fixed_points()?;
    if xa / ya > 0.0 {
        lifts = lifts.iter().map(Sl2::flip).collect();
    }
    let generators = g
        .generators()
        .iter()
        .zip(lifts)
        .map(|(x, l)| Generator::from_lift(x.name.clone(), l, FormKind::Siegel))
        .collect();
    MarkedGroup::new(
        generators,
        g.relations().to_vec(),
        g.g_alpha().clone(),
        g.decomposition().clone(),
        true,
    )
}

/// Normalization through eigenvectors of the 3x3 marked element; used for groups
/// without SL(2,R) lifts.
pub fn normalize_generic(g: &MarkedGroup) -> Result<MarkedGroup> {
    check_loxodromic(g)?;
    let gs = g.in_form(FormKind::Siegel);
    let ga = in_model(&gs.g_alpha_matrix(), FormKind::Siegel);
    let real = is_real_matrix(ga.matrix(), 1e-14);
    let mut eig = ga.eigenvalues();
    if real {
        for l in eig.iter_mut() {
            if l.im.abs() <= 1e-9 * l.norm() {
                l.im = 0.0;
            }
        }
    }
    let snap = |v: crate::linalg::Vec3| if real { v.map(|z| r(z.re)) } else { v };
    let ea = snap(ga.eigenvector(eig[0]));
    let er = snap(ga.eigenvector(eig[2]));
    let form = HermitianForm::SIEGEL;
    let j = form.matrix();
    let cpair = form.product(&er, &ea);
    if !(cpair.norm() > 0.0) {
        return domain("degenerate eigenvectors");
    }
    let q2 = er / cpair;
    let n = (j * ea.map(|z| z.conj())).cross(&(j * er.map(|z| z.conj())));
    let nn = form.product(&n, &n).re;
    if !(nn > 0.0) {
        return domain("degenerate polar vector");
    }
    let n = n / r(nn.sqrt());
    let q = Mat3::from_columns(&[ea, n, q2]);
    let p = j * q.adjoint() * j;
    let conj =
        |x: &Isometry, p: &Mat3, q: &Mat3| Isometry::new(p * x.matrix() * q, FormKind::Siegel);
    let mut gens: Vec<Isometry> = gs
        .generators()
        .iter()
        .map(|x| conj(&x.matrix, &p, &q))
        .collect::<Result<_>>()?;
    // canonical height: the foot of the ball origin goes to u = 1
    let base = vec3(r(-0.5), r(0.0), r(1.0));
    let moved = HalfSpacePoint::from_lift(&(p * base))?;
    let foot = Cx::new(moved.xi.norm_sqr() + moved.u, -moved.v).norm();
    let d = dilation(1.0 / foot.sqrt())?;
    gens = gens.iter().map(|x| x.conjugate_by(&d)).collect();
    let first = g.decomposition().g1()[0];
    if let HeisenbergPoint::Finite { xi, .. } =
        crate::fuchsian::group::attracting_fixed_point(&gens[first])?
    {
        if xi.re > 0.0 {
            let f = Isometry::from_matrix_unchecked(
                mat_from_real([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]]),
                FormKind::Siegel,
            );
            gens = gens.iter().map(|x| x.conjugate_by(&f)).collect();
        }
    }
    if real {
        gens = gens
            .into_iter()
            .map(|x| Isometry::from_matrix_unchecked(x.matrix().map(|z| r(z.re)), FormKind::Siegel))
            .collect();
    }
    let generators = gs
        .generators()
        .iter()
        .zip(gens)
        .map(|(x, m)| Generator::new(x.name.clone(), m))
        .collect();
    MarkedGroup::new(
        generators,
        g.relations().to_vec(),
        g.g_alpha().clone(),
        g.decomposition().clone(),
        true,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::{genus2_group, octagon_group, off_diagonal};

    fn check_normal_form(n: &MarkedGroup, off_tol: f64) {
        let ga = n.g_alpha_matrix();
        assert_eq!(ga.form(), FormKind::Siegel);
        assert!(
            off_diagonal(ga.matrix()) < off_tol,
            "off-diagonal {:e}",
            off_diagonal(ga.matrix())
        );
        // eigenvectors e0 (infinity) and e2 (origin)
        let eig = ga.eigenvalues();
        let ea = ga.eigenvector(eig[0]);
        let er = ga.eigenvector(eig[2]);
        assert!(ea[1].norm().max(ea[2].norm()) < 10.0 * off_tol);
        assert!(er[0].norm().max(er[1].norm()) < 10.0 * off_tol);
        // attracting at infinity: the (0,0) entry dominates
        assert!(ga.matrix()[(0, 0)].norm() > ga.matrix()[(2, 2)].norm());
        let first = n.decomposition().g1()[0];
        let w = crate::words::Word::letter(crate::words::Letter::new(first, false));
        match n.attracting_fixed_point(&w).unwrap() {
            HeisenbergPoint::Finite { xi, v } => assert!(xi.re < 0.0 && xi.im == 0.0 && v == 0.0),
            HeisenbergPoint::Infinity => panic!("first G1 generator fixes infinity"),
        }
    }

    #[test]
    fn lifted_normal_form() {
        // entries of the genus-two generators grow as the marked length shrinks, and the
        // evaluated marked element inherits their rounding
        let cases = [
            (genus2_group(0.5, 0.0).unwrap(), 1e-10),
            (genus2_group(3.0, 0.7).unwrap(), 1e-12),
            (octagon_group().unwrap(), 1e-12),
        ];
        for (g, off_tol) in cases {
            let n = normalize_axis(&g).unwrap();
            assert!(n.is_normalized() && n.has_lifts());
            check_normal_form(&n, off_tol);
            assert!((n.ell().unwrap() - g.ell().unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn generic_path_agrees_on_length() {
        let g = octagon_group().unwrap();
        let bare: Vec<Generator> = g
            .generators()
            .iter()
            .map(|x| Generator::new(x.name.clone(), x.matrix.clone()))
            .collect();
        let bare = MarkedGroup::new(
            bare,
            g.relations().to_vec(),
            g.g_alpha().clone(),
            g.decomposition().clone(),
            false,
        )
        .unwrap();
        let n = normalize_axis(&bare).unwrap();
        assert!(!n.has_lifts());
        check_normal_form(&n, 1e-12);
        assert!((n.ell().unwrap() - g.ell().unwrap()).abs() < 1e-9);
        assert!(n.relation_residual() < 1e-9);
    }
}
