use std::f64::consts::PI;

use crate::bending::planar::BendingParams;
use crate::error::{domain, Error, Result};
use crate::fuchsian::{dirichlet_polygon, off_diagonal, represent, Decomposition, MarkedGroup};
use crate::heisenberg::rotation_u;
use crate::linalg::{r, BallPoint, Cx, FormKind, Isometry};
use crate::sl2::Sl2;
use crate::words::{Letter, Word};

/// Bent groups must satisfy their relations to this accuracy; beyond it the decomposition is wrong.
pub const BENT_RELATION_LIMIT: f64 = 1e-8;

/// One factor in the image of a generator under the isomorphism chi.
#[derive(Clone, Debug, PartialEq)]
pub enum Token {
    Letter(Letter),
    /// rotation_u by the given angle
    Rot(f64),
    /// a real change of frame, or its inverse
    Frame {
        index: usize,
        inverse: bool,
    },
}

impl Token {
    fn inverse(&self) -> Token {
        match *self {
            Token::Letter(l) => Token::Letter(l.inv()),
            Token::Rot(t) => Token::Rot(-t),
            Token::Frame { index, inverse } => Token::Frame {
                index,
                inverse: !inverse,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BendStep {
    pub params: BendingParams,
    pub g_alpha: Word,
    pub decomposition: Decomposition,
    /// Frame moving this bend's axis to (0, infinity); none for the base frame.
    pub frame: Option<Sl2>,
}

/// A deformed group G_eta with the isomorphism chi: G -> G_eta recorded generator by generator.
#[derive(Clone, Debug)]
pub struct BentGroup {
    base: MarkedGroup,
    steps: Vec<BendStep>,
    frames: Vec<Sl2>,
    images: Vec<Vec<Token>>,
    generators_eta: Vec<Isometry>,
}

fn push_token(out: &mut Vec<Token>, t: Token) {
    if let Token::Rot(b) = t {
        if let Some(Token::Rot(a)) = out.last() {
            let s = a + b;
            out.pop();
            if s != 0.0 {
                out.push(Token::Rot(s));
            }
            return;
        }
        if b == 0.0 {
            return;
        }
    }
    if let (
        Token::Frame {
            index: i,
            inverse: a,
        },
        Some(Token::Frame {
            index: j,
            inverse: b,
        }),
    ) = (&t, out.last())
    {
        if i == j && a != b {
            out.pop();
            return;
        }
    }
    out.push(t);
}

fn invert_tokens(ts: &[Token]) -> Vec<Token> {
    ts.iter().rev().map(Token::inverse).collect()
}

impl BentGroup {
    pub fn base(&self) -> &MarkedGroup {
        &self.base
    }

    /// Parameters of the first bend.
    pub fn params(&self) -> BendingParams {
        self.steps[0].params
    }

    pub fn steps(&self) -> &[BendStep] {
        &self.steps
    }

    pub fn generators_eta(&self) -> &[Isometry] {
        &self.generators_eta
    }

    pub fn names(&self) -> Vec<String> {
        self.base.names()
    }

    pub fn chi_tokens(&self, generator: usize) -> &[Token] {
        &self.images[generator]
    }

    /// Human-readable image of a generator, e.g. `U(0.3).a2.U(-0.3)`.
    pub fn chi_description(&self, generator: usize) -> String {
        let names = self.names();
        let parts: Vec<String> = self.images[generator]
            .iter()
            .map(|t| match t {
                Token::Letter(l) => Word::letter(*l).format(&names),
                Token::Rot(a) => format!("U({a})"),
                Token::Frame { index, inverse } => {
                    format!("N{}{}", index + 1, if *inverse { "^-1" } else { "" })
                }
            })
            .collect();
        parts.join(".")
    }

    fn word_tokens(&self, w: &Word) -> Vec<Token> {
        let mut out = Vec::new();
        for &l in w.letters() {
            let img = &self.images[l.index()];
            let seq = if l.inverse {
                invert_tokens(img)
            } else {
                img.clone()
            };
            for t in seq {
                push_token(&mut out, t);
            }
        }
        out
    }

    fn token_lift(&self, t: &Token) -> Option<Sl2> {
        match *t {
            Token::Letter(l) => self.base.letter_lift(l),
            Token::Frame { index, inverse } => {
                let f = self.frames[index];
                Some(if inverse { f.inverse() } else { f })
            }
            Token::Rot(_) => None,
        }
    }

    fn token_matrix(&self, t: &Token) -> Isometry {
        match *t {
            Token::Letter(l) => self.base.letter_matrix(l),
            Token::Rot(a) => rotation_u(a),
            Token::Frame { .. } => represent(
                &self.token_lift(t).expect("frames are real"),
                FormKind::Siegel,
            ),
        }
    }

    /// Evaluates a token string. Maximal runs of real factors are multiplied in SL(2,R).
    fn evaluate_tokens(&self, ts: &[Token]) -> Isometry {
        let lifted = self.base.has_lifts();
        let mut acc: Option<Isometry> = None;
        let mut run: Option<Sl2> = None;
        let flush = |acc: &mut Option<Isometry>, run: &mut Option<Sl2>| {
            if let Some(m) = run.take() {
                let g = represent(&m, FormKind::Siegel);
                *acc = Some(match acc.take() {
                    None => g,
                    Some(a) => a.compose(&g),
                });
            }
        };
        for t in ts {
            let lift = if lifted || matches!(t, Token::Frame { .. }) {
                self.token_lift(t)
            } else {
                None
            };
            match lift {
                Some(m) => {
                    run = Some(match run {
                        None => Sl2::IDENTITY.mul(&m),
                        Some(x) => x.mul(&m),
                    })
                }
                None => {
                    flush(&mut acc, &mut run);
                    let g = self.token_matrix(t);
                    acc = Some(match acc {
                        None => g,
                        Some(a) => a.compose(&g),
                    });
                }
            }
        }
        flush(&mut acc, &mut run);
        acc.unwrap_or_else(|| Isometry::identity(FormKind::Siegel))
    }

    /// chi applied to a word of the base group.
    pub fn evaluate(&self, w: &Word) -> Isometry {
        if self.steps.iter().all(|s| s.params.eta() == 0.0) {
            return self.base.evaluate(w);
        }
        if w.len() == 1 && !w.letters()[0].inverse {
            return self.generators_eta[w.letters()[0].index()].clone();
        }
        self.evaluate_tokens(&self.word_tokens(w))
    }

    /// Bent generator matrices in letter-code order (g0, g0^-1, g1, ...).
    pub fn letter_matrices(&self) -> Vec<Isometry> {
        Letter::all(self.generators_eta.len())
            .into_iter()
            .map(|l| self.evaluate(&Word::letter(l)))
            .collect()
    }

    pub fn relation_residual(&self) -> f64 {
        self.base
            .relations()
            .iter()
            .map(|w| self.evaluate(w).identity_residual())
            .fold(0.0, f64::max)
    }

    pub fn g_alpha_matrix(&self) -> Isometry {
        self.evaluate(self.base.g_alpha())
    }

    /// Bends again along another marked element, lying in the unmoved part of the group and
    /// still real after the previous bends.
    pub fn bend_again(
        &self,
        g_alpha: Word,
        decomposition: Decomposition,
        params: BendingParams,
    ) -> Result<BentGroup> {
        let tokens = self.word_tokens(&g_alpha);
        if tokens.iter().any(|t| matches!(t, Token::Rot(_))) {
            return domain("the second marked element is not real after the first bend");
        }
        let lifted: Option<Vec<Sl2>> = tokens.iter().map(|t| self.token_lift(t)).collect();
        let m = match lifted {
            Some(ls) => ls.iter().fold(Sl2::IDENTITY, |a, b| a.mul(b)),
            None => return domain("a second bend needs SL(2,R) lifts"),
        };
        check_decomposition(&self.base, &g_alpha, &decomposition)?;
        let ((_, va), (_, vr)) = m.hyperbolic_eigen()?;
        let det = va.0 * vr.1 - vr.0 * va.1;
        let kinv = Sl2 {
            a: va.0,
            b: vr.0 / det,
            c: va.1,
            d: vr.1 / det,
        };
        let frame = kinv.inverse();
        let mut frames = self.frames.clone();
        frames.push(frame);
        let idx = frames.len() - 1;
        let v = vec![
            Token::Frame {
                index: idx,
                inverse: true,
            },
            Token::Rot(params.eta()),
            Token::Frame {
                index: idx,
                inverse: false,
            },
        ];
        let mut images = self.images.clone();
        apply_bend(&mut images, &decomposition, &v);
        let mut steps = self.steps.clone();
        steps.push(BendStep {
            params,
            g_alpha,
            decomposition,
            frame: Some(frame),
        });
        finish(self.base.clone(), steps, frames, images)
    }
}

fn check_decomposition(g: &MarkedGroup, g_alpha: &Word, d: &Decomposition) -> Result<()> {
    let n = g.generators().len();
    let mut covered = vec![0; n];
    for &i in d.g1().iter().chain(d.moved().iter()) {
        if i >= n {
            return Err(Error::Validation(
                "decomposition refers to unknown generators".into(),
            ));
        }
        covered[i] += 1;
    }
    if covered.iter().any(|&k| k != 1) {
        return Err(Error::Validation(
            "decomposition must partition the generators".into(),
        ));
    }
    if g_alpha.letters().iter().any(|l| !d.is_g1(l.index())) {
        return Err(Error::Validation("the marked word must lie in G1".into()));
    }
    Ok(())
}

fn apply_bend(images: &mut [Vec<Token>], d: &Decomposition, v: &[Token]) {
    let vinv = invert_tokens(v);
    match d {
        Decomposition::Amalgam { g2, .. } => {
            for &i in g2 {
                let mut out = Vec::new();
                for t in v.iter().chain(images[i].iter()).chain(vinv.iter()) {
                    push_token(&mut out, t.clone());
                }
                images[i] = out;
            }
        }
        Decomposition::Hnn { stable, .. } => {
            let mut out = Vec::new();
            for t in v.iter().chain(images[*stable].iter()) {
                push_token(&mut out, t.clone());
            }
            images[*stable] = out;
        }
    }
}

fn finish(
    base: MarkedGroup,
    steps: Vec<BendStep>,
    frames: Vec<Sl2>,
    images: Vec<Vec<Token>>,
) -> Result<BentGroup> {
    let mut b = BentGroup {
        base,
        steps,
        frames,
        images,
        generators_eta: Vec::new(),
    };
    let trivial = b.steps.iter().all(|s| s.params.eta() == 0.0);
    b.generators_eta = if trivial {
        b.base
            .generators()
            .iter()
            .map(|g| g.matrix.clone())
            .collect()
    } else {
        b.images.iter().map(|ts| b.evaluate_tokens(ts)).collect()
    };
    let res = b.relation_residual();
    if !(res <= BENT_RELATION_LIMIT) {
        return Err(Error::Construction {
            message: "bent group violates its relations".into(),
            residual: res,
        });
    }
    Ok(b)
}

/// G_eta: G2 conjugated by U_eta (amalgam) or the stable letter multiplied by U_eta (HNN).
pub fn bend_group(g: &MarkedGroup, params: BendingParams) -> Result<BentGroup> {
    if !g.is_normalized() {
        return domain("bending needs a normalized group");
    }
    let off = off_diagonal(g.g_alpha_matrix().matrix());
    if !(off < 1e-9) {
        return domain(format!("marked element is not diagonal ({off:.3e})"));
    }
    let n = g.generators().len();
    let mut images: Vec<Vec<Token>> = (0..n)
        .map(|i| vec![Token::Letter(Letter::new(i, false))])
        .collect();
    apply_bend(&mut images, g.decomposition(), &[Token::Rot(params.eta())]);
    let step = BendStep {
        params,
        g_alpha: g.g_alpha().clone(),
        decomposition: g.decomposition().clone(),
        frame: None,
    };
    finish(g.clone(), vec![step], Vec::new(), images)
}

/// Half-width of the cone about the positive or negative real ray that contains the trace on
/// C x {0} of the Cygan ball spanned by the real interval [x1, x2] (same sign).
fn cone_half_width(x1: f64, x2: f64) -> f64 {
    let m = 0.5 * (x1 + x2);
    let rho = 0.5 * (x2 - x1).abs();
    let rho4 = rho.powi(4);
    let dir = m.signum();
    let inside = |psi: f64| {
        // minimize |s e^{i psi} - m|^4 + 4 m^2 (s sin psi)^2 over s > 0 by golden section
        let z = |s: f64| {
            let w = Cx::from_polar(s, psi) * dir - r(m);
            w.norm_sqr().powi(2) + 4.0 * m * m * (s * psi.sin()).powi(2)
        };
        let (mut a, mut b) = (0.0, 2.0 * m.abs() + 2.0 * rho);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let c1 = b - g * (b - a);
            let c2 = a + g * (b - a);
            if z(c1) < z(c2) {
                b = c2;
            } else {
                a = c1;
            }
        }
        z(0.5 * (a + b)) <= rho4
    };
    let (mut lo, mut hi) = (0.0, PI / 2.0);
    if inside(hi) {
        return PI / 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Smallest sector half-width containing the Cygan-ball traces of the Dirichlet sides not
/// paired by the marked element, in the normalized frame.
pub fn required_zeta(g: &MarkedGroup, depth: usize) -> Result<f64> {
    if !g.is_normalized() {
        return domain("needs a normalized group");
    }
    let center = BallPoint::real(0.0, 0.0);
    let mut d = depth.max(2);
    let poly = loop {
        let p = dirichlet_polygon(g, &center, d)?;
        if p.is_complete() || d >= depth.max(2) + 4 {
            break p;
        }
        d += 1;
    };
    if !poly.is_complete() {
        return Err(Error::Validation(
            "Dirichlet polygon did not close; cannot choose zeta".into(),
        ));
    }
    let ga = crate::linalg::in_model(&g.g_alpha_matrix(), FormKind::Ball);
    let gi = ga.inverse();
    let mut worst: f64 = 0.0;
    for s in &poly.sides {
        if s.element.projectively_eq(&ga, 1e-8) || s.element.projectively_eq(&gi, 1e-8) {
            continue;
        }
        // extend the chord to the circle and read off the real endpoints in Siegel coordinates
        let (p, q) = (s.start, s.end);
        let dx = (q.0 - p.0, q.1 - p.1);
        let a = dx.0 * dx.0 + dx.1 * dx.1;
        let b = 2.0 * (p.0 * dx.0 + p.1 * dx.1);
        let cc = p.0 * p.0 + p.1 * p.1 - 1.0;
        let disc = (b * b - 4.0 * a * cc).max(0.0).sqrt();
        let ends = [(-b - disc) / (2.0 * a), (-b + disc) / (2.0 * a)]
            .map(|t| (p.0 + t * dx.0, p.1 + t * dx.1));
        let xs: Vec<Option<f64>> = ends
            .iter()
            .map(|e| {
                match crate::heisenberg::HeisenbergPoint::from_ball(&BallPoint::real(e.0, e.1)) {
                    Ok(crate::heisenberg::HeisenbergPoint::Finite { xi, .. }) => Some(xi.re),
                    _ => None,
                }
            })
            .collect();
        match (xs[0], xs[1]) {
            (Some(x1), Some(x2)) if x1 * x2 > 0.0 => worst = worst.max(cone_half_width(x1, x2)),
            _ => worst = worst.max(PI / 2.0),
        }
    }
    Ok(worst)
}

/// Default sector half-width for a bend by eta: halfway between the smallest width that
/// contains the side traces and the largest width the bend angle allows.
pub fn default_zeta(g: &MarkedGroup, eta: f64) -> Result<f64> {
    let need = required_zeta(g, 3)?;
    let allow = (PI - eta.abs()) / 2.0;
    if !(need < allow) {
        return Err(Error::Validation(format!(
            "no admissible zeta: sides need {need:.6}, bend angle allows below {allow:.6}"
        )));
    }
    Ok(need + 0.5 * (allow - need))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::{genus2_group, hnn_split, normalize_axis, octagon_group};
    use crate::linalg::{c, mat_from_real};

    fn base() -> MarkedGroup {
        normalize_axis(&genus2_group(0.5, 0.0).unwrap()).unwrap()
    }

    fn params(eta: f64) -> BendingParams {
        BendingParams::new(eta, (PI - 0.5) / 4.0).unwrap()
    }

    #[test]
    fn zero_bend_is_identity() {
        let g = base();
        let b = bend_group(&g, params(0.0)).unwrap();
        for (x, y) in g.generators().iter().zip(b.generators_eta()) {
            assert_eq!(x.matrix.matrix(), y.matrix());
        }
        assert_eq!(b.relation_residual(), g.relation_residual());
    }

    #[test]
    fn relations_hold_and_g0_is_untouched() {
        let g = base();
        for eta in [-0.5, -0.3, -0.1, 0.1, 0.3, 0.5] {
            let b = bend_group(&g, params(eta)).unwrap();
            assert!(
                b.relation_residual() < 1e-10,
                "eta {eta}: {:e}",
                b.relation_residual()
            );
            assert_eq!(b.g_alpha_matrix().matrix(), g.g_alpha_matrix().matrix());
            for &i in g.decomposition().g1() {
                assert_eq!(
                    b.generators_eta()[i].matrix(),
                    g.generators()[i].matrix.matrix()
                );
                assert_eq!(b.chi_tokens(i), &[Token::Letter(Letter::new(i, false))]);
            }
            let u = rotation_u(eta);
            for i in g.decomposition().moved() {
                let expect = g.generators()[i].matrix.conjugate_by(&u);
                assert!(b.generators_eta()[i].projectively_eq(&expect, 1e-13));
            }
        }
    }

    #[test]
    fn chi_description_names_the_rotation() {
        let b = bend_group(&base(), params(0.3)).unwrap();
        assert_eq!(b.chi_description(0), "a1");
        assert_eq!(b.chi_description(2), "U(0.3).a2.U(-0.3)");
    }

    #[test]
    fn derivative_in_eta_is_a_commutator() {
        // d/deta U g U^-1 at 0 is [iD, g] with D = diag(0, 1, 0)
        let g = base();
        let h = 1e-5;
        let plus = bend_group(&g, params(h)).unwrap();
        let minus = bend_group(&g, params(-h)).unwrap();
        let d = mat_from_real([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]) * c(0.0, 1.0);
        for i in g.decomposition().moved() {
            let m = *g.generators()[i].matrix.matrix();
            let fd = (plus.generators_eta()[i].matrix() - minus.generators_eta()[i].matrix())
                / r(2.0 * h);
            let exact = d * m - m * d;
            let err = (fd - exact).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(
                err < 1e-6 * crate::linalg::norm_inf(&m),
                "generator {i}: {err:e}"
            );
        }
    }

    #[test]
    fn hnn_bend_multiplies_the_stable_letter() {
        let g = normalize_axis(&hnn_split(&octagon_group().unwrap()).unwrap()).unwrap();
        let b = bend_group(&g, BendingParams::new(0.2, 0.3).unwrap()).unwrap();
        assert!(b.relation_residual() < 1e-10);
        let expect = rotation_u(0.2).compose(&g.generators()[1].matrix);
        assert!(b.generators_eta()[1].projectively_eq(&expect, 1e-12));
        assert_eq!(b.g_alpha_matrix().matrix(), g.g_alpha_matrix().matrix());
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let g = genus2_group(0.5, 0.0).unwrap();
        assert!(matches!(bend_group(&g, params(0.3)), Err(Error::Domain(_))));
    }

    #[test]
    fn default_zeta_is_admissible() {
        let g = base();
        let need = required_zeta(&g, 3).unwrap();
        for eta in [-0.3, 0.1, 0.3] {
            let z = default_zeta(&g, eta).unwrap();
            assert!(need < z && z < (PI - eta.abs()) / 2.0);
            assert!(BendingParams::new(eta, z).is_ok());
        }
        assert!(default_zeta(&g, PI - 1e-4).is_err());
    }
}
