//! Invariant suites run by `chbend verify` on marked and bent groups.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bending::{
    elementary_bend_boundary, equivariant_boundary_map, equivariant_image,
    finite_difference_distortion, limit_set, planar_bend, planar_distortion, BentGroup,
    LimitSetOptions,
};
use crate::error::Result;
use crate::fuchsian::{
    collar_check, dirichlet_polygon, normalize_axis, off_diagonal, two_side_check, MarkedGroup,
    RELATION_TOL,
};
use crate::heisenberg::{act, cygan_metric, dilation, HeisenbergPoint};
use crate::invariants::{
    cartan_angle, cartan_angle_lifts, nontriviality_certificate, BoundaryTriple,
};
use crate::linalg::{
    classify, in_model, BallPoint, Cx, FormKind, Isometry, IsometryKind, STRUCTURAL_TOL,
};
use crate::words::{Letter, Word};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub bound: f64,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub subject: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    fn new(subject: &str, seed: u64) -> Self {
        VerifyReport {
            subject: subject.into(),
            seed,
            pass: true,
            checks: Vec::new(),
        }
    }

    /// Records `value <= bound`.
    fn at_most(&mut self, name: &str, value: f64, bound: f64) {
        self.push(name, value <= bound, value, bound, String::new());
    }

    fn push(&mut self, name: &str, pass: bool, value: f64, bound: f64, detail: String) {
        self.pass &= pass;
        self.checks.push(Check {
            name: name.into(),
            pass,
            value,
            bound,
            detail,
        });
    }

    fn flag(&mut self, name: &str, pass: bool, detail: String) {
        self.push(name, pass, if pass { 1.0 } else { 0.0 }, 1.0, detail);
    }

    fn error(&mut self, name: &str, e: crate::Error) {
        self.flag(name, false, e.to_string());
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random samples per randomized check.
    pub samples: usize,
    pub collar_depth: usize,
    pub limit_depth: usize,
    pub certificate_depth: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            samples: 1000,
            collar_depth: 6,
            limit_depth: 6,
            certificate_depth: 8,
        }
    }
}

fn random_word(rng: &mut ChaCha8Rng, generators: usize, max_len: usize) -> Word {
    let len = rng.gen_range(1..=max_len);
    let mut w: Vec<Letter> = Vec::with_capacity(len);
    while w.len() < len {
        let l = Letter::new(rng.gen_range(0..generators), rng.gen_bool(0.5));
        if w.last() != Some(&l.inv()) {
            w.push(l);
        }
    }
    Word(w)
}

fn max_form_residual<'a>(ms: impl IntoIterator<Item = &'a Isometry>) -> f64 {
    ms.into_iter()
        .map(Isometry::form_residual)
        .fold(0.0, f64::max)
}

fn real_circle_deviation(points: &[HeisenbergPoint]) -> f64 {
    points
        .iter()
        .filter_map(|p| p.coords())
        .fold(0.0f64, |a, (xi, v)| a.max(xi.im.abs()).max(v.abs()))
}

/// Structural checks, collar inequality, Dirichlet polygon, real-circle confinement of the
/// limit set and PU(2,1) invariance of the Cartan angle on random orbit triples.
pub fn verify_group(g: &MarkedGroup, opts: &VerifyOptions) -> VerifyReport {
    let mut rep = VerifyReport::new("marked group", opts.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let gens: Vec<Isometry> = g.generators().iter().map(|x| x.matrix.clone()).collect();
    rep.at_most(
        "generator form residual",
        max_form_residual(&gens),
        STRUCTURAL_TOL,
    );
    rep.at_most("relation residual", g.relation_residual(), RELATION_TOL);
    let kind = classify(&g.g_alpha_matrix()).kind;
    rep.flag(
        "marked element loxodromic",
        kind == IsometryKind::Loxodromic,
        format!("{kind:?}"),
    );
    let n = match if g.is_normalized() {
        Ok(g.clone())
    } else {
        normalize_axis(g)
    } {
        Ok(n) => n,
        Err(e) => {
            rep.error("normalization", e);
            return rep;
        }
    };
    rep.at_most(
        "normalized marked element off-diagonal",
        off_diagonal(n.g_alpha_matrix().matrix()),
        1e-9,
    );
    rep.at_most(
        "normalized relation residual",
        n.relation_residual(),
        RELATION_TOL,
    );
    let ns = n.generators().len();
    let words: Vec<Word> = (0..opts.samples)
        .map(|_| random_word(&mut rng, ns, 8))
        .collect();
    let mats: Vec<Isometry> = words.iter().map(|w| n.evaluate(w)).collect();
    rep.at_most(
        "random word form residual",
        max_form_residual(&mats),
        STRUCTURAL_TOL,
    );

    match collar_check(&n, opts.collar_depth) {
        Ok(c) => rep.push(
            "collar inequality",
            c.pass,
            c.min_slack,
            -1e-9,
            format!("ell {} depth {} words {}", c.ell, c.depth, c.words_checked),
        ),
        Err(e) => rep.error("collar inequality", e),
    }
    let ball = n.in_form(FormKind::Ball);
    match dirichlet_polygon(&ball, &BallPoint::origin(), 4) {
        Ok(p) => {
            let res = p.pairing_residual().unwrap_or(f64::INFINITY);
            rep.push(
                "Dirichlet polygon closes",
                p.is_complete(),
                res,
                1e-6,
                format!("{} sides", p.sides.len()),
            );
            match two_side_check(&p, &ball) {
                Ok(ok) => rep.flag(
                    "two sides meet the axis, paired by the marked element",
                    ok,
                    String::new(),
                ),
                Err(e) => rep.error("two sides meet the axis, paired by the marked element", e),
            }
        }
        Err(e) => rep.error("Dirichlet polygon closes", e),
    }
    match limit_set(&n, opts.limit_depth, None, LimitSetOptions::default()) {
        Ok(set) => {
            let dev = real_circle_deviation(set.points());
            rep.push(
                "limit set on the real circle",
                dev < 1e-8,
                dev,
                1e-8,
                format!("{} samples", set.len()),
            );
            // well separated points of moderate size, moved by short words
            let pts: Vec<HeisenbergPoint> = set
                .points()
                .iter()
                .copied()
                .filter(|p| {
                    p.cygan_norm()
                        .map(|r| (0.1..10.0).contains(&r))
                        .unwrap_or(false)
                })
                .collect();
            let mut worst_real: f64 = 0.0;
            let mut worst_inv: f64 = 0.0;
            let mut tried = 0;
            while tried < opts.samples && pts.len() >= 3 {
                let t = [0, 1, 2].map(|_| pts[rng.gen_range(0..pts.len())]);
                let separated = (0..3).all(|i| {
                    cygan_metric(&t[i], &t[(i + 1) % 3])
                        .map(|d| d > 0.05)
                        .unwrap_or(false)
                });
                if !separated {
                    continue;
                }
                tried += 1;
                let Ok(triple) = BoundaryTriple::new(t[0], t[1], t[2]) else {
                    continue;
                };
                let Ok(a) = cartan_angle(&triple) else {
                    continue;
                };
                worst_real = worst_real.max(a.abs());
                let h = in_model(&n.evaluate(&random_word(&mut rng, ns, 2)), FormKind::Siegel);
                let l = t.map(|p| h.apply(&p.lift()));
                if let Ok(b) = cartan_angle_lifts(&l[0], &l[1], &l[2]) {
                    worst_inv = worst_inv.max((a - b).abs());
                }
            }
            rep.at_most("Cartan angle of real-circle triples", worst_real, 1e-10);
            rep.at_most("Cartan angle invariance", worst_inv, 1e-10);
        }
        Err(e) => rep.error("limit set on the real circle", e),
    }
    rep
}

/// Checks chi, relations, the planar and elementary bends on random points, equivariance of
/// the boundary map and the nontriviality certificate.
pub fn verify_bent(b: &BentGroup, opts: &VerifyOptions) -> VerifyReport {
    let mut rep = VerifyReport::new("bent group", opts.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let base = b.base();
    rep.at_most(
        "generator form residual",
        max_form_residual(b.generators_eta()),
        STRUCTURAL_TOL,
    );
    rep.at_most("relation residual", b.relation_residual(), RELATION_TOL);
    let fixed = base
        .decomposition()
        .g1()
        .iter()
        .all(|&i| b.generators_eta()[i] == base.generators()[i].matrix);
    rep.flag("chi is the identity on G1", fixed, String::new());
    rep.flag(
        "chi(g_alpha) = g_alpha",
        b.g_alpha_matrix() == base.g_alpha_matrix(),
        String::new(),
    );
    let p = b.params();
    if p.eta() == 0.0 {
        let same = b
            .generators_eta()
            .iter()
            .zip(base.generators())
            .all(|(m, g)| *m == g.matrix);
        rep.flag(
            "zero bend leaves the generators unchanged",
            same,
            String::new(),
        );
    }
    let ns = base.generators().len();
    let words: Vec<Word> = (0..opts.samples)
        .map(|_| random_word(&mut rng, ns, 8))
        .collect();
    let mats: Vec<Isometry> = words.iter().map(|w| b.evaluate(w)).collect();
    rep.at_most(
        "random word form residual",
        max_form_residual(&mats),
        STRUCTURAL_TOL,
    );
    let elliptic = mats
        .iter()
        .filter(|m| classify(m).kind == IsometryKind::Elliptic)
        .count();
    rep.at_most("elliptic elements among random words", elliptic as f64, 0.0);

    // planar bend: distortion by finite differences away from the sector boundaries
    let mut worst: f64 = 0.0;
    let edges = [p.zeta(), PI - p.zeta(), -p.zeta(), p.zeta() - PI, PI, -PI];
    let mut k = 0;
    while k < opts.samples {
        let t = rng.gen_range(-PI..PI);
        if edges.iter().any(|e| (t - e).abs() < 1e-3) {
            continue;
        }
        let z = Cx::from_polar(rng.gen_range(0.1..10.0), t);
        let fd = finite_difference_distortion(&p, z, 1e-6 * z.norm());
        let exact = planar_distortion(&p, z).value;
        worst = worst.max((fd - exact).abs() / exact);
        k += 1;
    }
    rep.at_most("planar distortion matches finite differences", worst, 1e-4);

    // elementary bend on random boundary points
    let ell = base.ell().unwrap_or(f64::NAN);
    let dil = dilation((ell / 2.0).exp());
    let (mut plane, mut norm, mut commute) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..opts.samples {
        let z = Cx::from_polar(rng.gen_range(0.1..5.0), rng.gen_range(-PI..PI));
        let on_plane = elementary_bend_boundary(&p, &HeisenbergPoint::new(z, 0.0));
        if let Some((xi, v)) = on_plane.coords() {
            plane = plane
                .max((xi - planar_bend(&p, z)).norm() / z.norm())
                .max(v.abs() / z.norm_sqr());
        }
        let x = HeisenbergPoint::new(z, rng.gen_range(-5.0..5.0));
        let y = elementary_bend_boundary(&p, &x);
        if let (Ok(a), Ok(bn)) = (x.cygan_norm(), y.cygan_norm()) {
            norm = norm.max((a - bn).abs() / a.max(1.0));
        }
        if let Ok(d) = &dil {
            if let (Ok(dx), Ok(dy)) = (act(d, &x), act(d, &y)) {
                let lhs = elementary_bend_boundary(&p, &dx);
                commute = commute.max(point_gap(&lhs, &dy));
            }
        }
    }
    rep.at_most("elementary bend restricts to the planar bend", plane, 1e-10);
    rep.at_most("elementary bend preserves the Cygan norm", norm, 1e-10);
    rep.at_most(
        "elementary bend commutes with the marked dilation",
        commute,
        1e-9,
    );

    // equivariance of the boundary map on limit samples: F(h x) = chi(h) F(x)
    match limit_set(
        base,
        opts.limit_depth.min(5),
        None,
        LimitSetOptions::default(),
    ) {
        Ok(set) => {
            let mut worst: f64 = 0.0;
            let n = set.len();
            for _ in 0..opts.samples.min(n) {
                let s = set.sample(rng.gen_range(0..n));
                let h = Letter::new(rng.gen_range(0..ns), rng.gen_bool(0.5));
                if s.word.letters().first() == Some(&h.inv()) {
                    continue;
                }
                let (Ok(fx), Ok(direct)) = (
                    equivariant_boundary_map(b, &s),
                    equivariant_image(b, &s.word, &set.seed()),
                ) else {
                    continue;
                };
                worst = worst.max(point_gap(&fx, &direct));
                let hw = Word::letter(h).concat(&s.word);
                let lhs = equivariant_image(b, &hw, &set.seed());
                let rhs = act(&b.evaluate(&Word::letter(h)), &fx);
                if let (Ok(l), Ok(r)) = (lhs, rhs) {
                    worst = worst.max(point_gap(&l, &r));
                }
            }
            rep.at_most("boundary map is equivariant", worst, 1e-9);
        }
        Err(e) => rep.error("boundary map is equivariant", e),
    }

    match nontriviality_certificate(b, opts.certificate_depth) {
        Ok(c) if c.applicable => rep.push(
            "nontriviality certificate",
            c.passed,
            c.angle.abs(),
            PI / 2.0 - 1e-6,
            format!(
                "angle {} from x1 = {} and g2 = {}",
                c.angle, c.x1_word, c.g2_word
            ),
        ),
        Ok(c) => rep.at_most("Cartan angle of the unbent triple", c.angle.abs(), 1e-8),
        Err(e) => rep.error("nontriviality certificate", e),
    }
    rep
}

/// Relative coordinate distance between boundary points, infinite when only one is infinity.
fn point_gap(a: &HeisenbergPoint, b: &HeisenbergPoint) -> f64 {
    match (a.coords(), b.coords()) {
        (None, None) => 0.0,
        (Some((x, v)), Some((y, w))) => {
            let scale = 1.0f64.max(x.norm()).max(v.abs().sqrt());
            ((x - y).norm() / scale).max((v - w).abs() / (scale * scale))
        }
        _ => f64::INFINITY,
    }
}

/// Serializes a report as pretty JSON.
pub fn report_json(r: &VerifyReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(r)? + "\n")
}
