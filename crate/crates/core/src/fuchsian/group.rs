use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::heisenberg::HeisenbergPoint;
use crate::linalg::{
    classify, in_model, norm_inf, translation_length, FormKind, Isometry, IsometryKind, Mat3,
    STRUCTURAL_TOL,
};
use crate::sl2::{adjoint_matrix, Sl2};
use crate::words::{Letter, Word};

/// Bound on relation residuals of a valid marked group.
pub const RELATION_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub name: String,
    pub matrix: Isometry,
    /// An SL(2,R) matrix representing the same element, when the group is Fuchsian and
    /// was built from one. Words are then evaluated in SL(2,R), which keeps products of
    /// large matrices accurate.
    pub lift: Option<Sl2>,
}

impl Generator {
    pub fn new(name: impl Into<String>, matrix: Isometry) -> Self {
        Generator {
            name: name.into(),
            matrix,
            lift: None,
        }
    }

    pub fn from_lift(name: impl Into<String>, lift: Sl2, form: FormKind) -> Self {
        Generator {
            name: name.into(),
            matrix: represent(&lift, form),
            lift: Some(lift),
        }
    }
}

/// The image of an SL(2,R) matrix in PO(2,1) written in the given model.
pub fn represent(m: &Sl2, form: FormKind) -> Isometry {
    // Rounding the entries of a long product moves its determinant off one even when each
    // entry is accurate; the smallest correction is along the gradient of det.
    let det = m.det();
    let corrected;
    let m = if det != 1.0 && det.is_finite() {
        let s = m.a * m.a + m.b * m.b + m.c * m.c + m.d * m.d;
        let t = (1.0 - det) / s;
        corrected = Sl2 {
            a: m.a + t * m.d,
            b: m.b - t * m.c,
            c: m.c - t * m.b,
            d: m.d + t * m.a,
        };
        &corrected
    } else {
        m
    };
    match form {
        FormKind::Siegel => m.siegel_isometry(),
        FormKind::Ball => Isometry::from_matrix_unchecked(adjoint_matrix(m), FormKind::Ball),
    }
}

/// How the group splits along the marked curve: G1 *_{G0} G2, or an HNN extension of G1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decomposition {
    Amalgam { g1: Vec<usize>, g2: Vec<usize> },
    Hnn { g1: Vec<usize>, stable: usize },
}

impl Decomposition {
    pub fn g1(&self) -> &[usize] {
        match self {
            Decomposition::Amalgam { g1, .. } | Decomposition::Hnn { g1, .. } => g1,
        }
    }

    /// Generators whose images are modified by a bend.
    pub fn moved(&self) -> Vec<usize> {
        match self {
            Decomposition::Amalgam { g2, .. } => g2.clone(),
            Decomposition::Hnn { stable, .. } => vec![*stable],
        }
    }

    pub fn is_g1(&self, generator: usize) -> bool {
        self.g1().contains(&generator)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarkedGroup {
    generators: Vec<Generator>,
    relations: Vec<Word>,
    g_alpha: Word,
    decomposition: Decomposition,
    normalized: bool,
}

impl MarkedGroup {
    /// Assembles and validates a marked group.
    pub fn new(
        generators: Vec<Generator>,
        relations: Vec<Word>,
        g_alpha: Word,
        decomposition: Decomposition,
        normalized: bool,
    ) -> Result<Self> {
        let g = MarkedGroup {
            generators,
            relations,
            g_alpha,
            decomposition,
            normalized,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.generators.len();
        if n == 0 {
            return Err(Error::Validation("a group needs generators".into()));
        }
        if n > 127 {
            return Err(Error::Validation("too many generators".into()));
        }
        for (i, g) in self.generators.iter().enumerate() {
            if g.name.is_empty() || g.name == "e" || g.name.contains('.') || g.name.contains('^') {
                return Err(Error::Validation(format!(
                    "invalid generator name '{}'",
                    g.name
                )));
            }
            if self.generators[..i].iter().any(|h| h.name == g.name) {
                return Err(Error::Validation(format!(
                    "duplicate generator name '{}'",
                    g.name
                )));
            }
            if g.matrix.form() != self.form() {
                return Err(Error::Validation(
                    "generators are written in different models".into(),
                ));
            }
            let res = g.matrix.form_residual();
            if !(res < STRUCTURAL_TOL) {
                return Err(Error::Validation(format!(
                    "generator {} does not preserve the hermitian form (residual {res:.3e})",
                    g.name
                )));
            }
            if !g.matrix.is_real(STRUCTURAL_TOL) {
                return Err(Error::Validation(format!(
                    "generator {} is not a real matrix",
                    g.name
                )));
            }
            if let Some(l) = &g.lift {
                let d = represent(l, self.form()).projective_distance(&g.matrix);
                if !(d < 1e-9) {
                    return Err(Error::Validation(format!(
                        "generator {} disagrees with its lift ({d:.3e})",
                        g.name
                    )));
                }
            }
        }
        let check_idx = |v: &[usize]| v.iter().all(|&i| i < n);
        let mut covered = vec![0usize; n];
        match &self.decomposition {
            Decomposition::Amalgam { g1, g2 } => {
                if !check_idx(g1) || !check_idx(g2) {
                    return Err(Error::Validation(
                        "decomposition refers to unknown generators".into(),
                    ));
                }
                for &i in g1.iter().chain(g2) {
                    covered[i] += 1;
                }
            }
            Decomposition::Hnn { g1, stable } => {
                if !check_idx(g1) || *stable >= n {
                    return Err(Error::Validation(
                        "decomposition refers to unknown generators".into(),
                    ));
                }
                for &i in g1.iter().chain(std::iter::once(stable)) {
                    covered[i] += 1;
                }
            }
        }
        if covered.iter().any(|&k| k != 1) {
            return Err(Error::Validation(
                "decomposition must partition the generators".into(),
            ));
        }
        let all_letters = |w: &Word| w.letters().iter().all(|l| l.index() < n);
        if !all_letters(&self.g_alpha) || !self.relations.iter().all(all_letters) {
            return Err(Error::Validation("word refers to unknown generator".into()));
        }
        if self
            .g_alpha
            .letters()
            .iter()
            .any(|l| !self.decomposition.is_g1(l.index()))
        {
            return Err(Error::Validation("the marked word must lie in G1".into()));
        }
        let res = self.relation_residual();
        if !(res < RELATION_TOL) {
            return Err(Error::Construction {
                message: "relations do not hold".into(),
                residual: res,
            });
        }
        let ga = self.g_alpha_matrix();
        let kind = classify(&ga).kind;
        if kind != IsometryKind::Loxodromic {
            return Err(Error::Validation(format!(
                "marked element is {kind:?}, not loxodromic"
            )));
        }
        if self.normalized {
            if self.form() != FormKind::Siegel {
                return Err(Error::Validation(
                    "normalized groups are written in the Siegel model".into(),
                ));
            }
            let off = off_diagonal(ga.matrix());
            if !(off < 1e-9) {
                return Err(Error::Validation(format!(
                    "normalized marked element is not diagonal ({off:.3e})"
                )));
            }
        }
        Ok(())
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn names(&self) -> Vec<String> {
        self.generators.iter().map(|g| g.name.clone()).collect()
    }

    pub fn relations(&self) -> &[Word] {
        &self.relations
    }

    pub fn g_alpha(&self) -> &Word {
        &self.g_alpha
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomposition
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn form(&self) -> FormKind {
        self.generators[0].matrix.form()
    }

    pub fn has_lifts(&self) -> bool {
        self.generators.iter().all(|g| g.lift.is_some())
    }

    pub fn parse_word(&self, text: &str) -> Result<Word> {
        Word::parse(text, &self.names())
    }

    pub fn format_word(&self, w: &Word) -> String {
        w.format(&self.names())
    }

    pub fn letter_lift(&self, l: Letter) -> Option<Sl2> {
        self.generators[l.index()]
            .lift
            .map(|m| if l.inverse { m.inverse() } else { m })
    }

    pub fn letter_matrix(&self, l: Letter) -> Isometry {
        let g = &self.generators[l.index()].matrix;
        if l.inverse {
            g.inverse()
        } else {
            g.clone()
        }
    }

    /// Generator matrices in letter-code order (g0, g0^-1, g1, ...).
    pub fn letter_matrices(&self) -> Vec<Isometry> {
        Letter::all(self.generators.len())
            .into_iter()
            .map(|l| self.letter_matrix(l))
            .collect()
    }

    pub fn letter_lifts(&self) -> Option<Vec<Sl2>> {
        Letter::all(self.generators.len())
            .into_iter()
            .map(|l| self.letter_lift(l))
            .collect()
    }

    pub fn evaluate_lift(&self, w: &Word) -> Option<Sl2> {
        let mut acc = Sl2::IDENTITY;
        for &l in w.letters() {
            acc = acc.mul(&self.letter_lift(l)?);
        }
        Some(acc)
    }

    pub fn evaluate(&self, w: &Word) -> Isometry {
        if w.len() == 1 && !w.letters()[0].inverse {
            return self.generators[w.letters()[0].index()].matrix.clone();
        }
        if let Some(m) = self.evaluate_lift(w) {
            return represent(&m, self.form());
        }
        let mut acc = Isometry::identity(self.form());
        for &l in w.letters() {
            acc = acc.compose(&self.letter_matrix(l));
        }
        acc
    }

    pub fn g_alpha_matrix(&self) -> Isometry {
        self.evaluate(&self.g_alpha)
    }

    pub fn ell(&self) -> Result<f64> {
        translation_length(&self.g_alpha_matrix())
    }

    pub fn relation_residual(&self) -> f64 {
        self.relations
            .iter()
            .map(|w| self.evaluate(w).identity_residual())
            .fold(0.0, f64::max)
    }

    /// The same group written in the other model.
    pub fn in_form(&self, form: FormKind) -> MarkedGroup {
        if form == self.form() {
            return self.clone();
        }
        let generators = self
            .generators
            .iter()
            .map(|g| match g.lift {
                Some(l) => Generator::from_lift(g.name.clone(), l, form),
                None => Generator::new(g.name.clone(), in_model(&g.matrix, form)),
            })
            .collect();
        MarkedGroup {
            generators,
            relations: self.relations.clone(),
            g_alpha: self.g_alpha.clone(),
            decomposition: self.decomposition.clone(),
            normalized: false,
        }
    }

    /// Attracting fixed point on the boundary (Siegel coordinates) of a loxodromic word.
    pub fn attracting_fixed_point(&self, w: &Word) -> Result<HeisenbergPoint> {
        if let Some(m) = self.evaluate_lift(w) {
            let ((xa, ya), _) = m.fixed_points()?;
            return Ok(projective_real_point(xa, ya));
        }
        let g = in_model(&self.evaluate(w), FormKind::Siegel);
        attracting_fixed_point(&g)
    }
}

pub fn projective_real_point(x: f64, y: f64) -> HeisenbergPoint {
    if y.abs() <= 1e-15 * x.abs() {
        HeisenbergPoint::Infinity
    } else {
        HeisenbergPoint::real(x / y)
    }
}

/// Attracting boundary fixed point of a Siegel-model loxodromic isometry.
pub fn attracting_fixed_point(g: &Isometry) -> Result<HeisenbergPoint> {
    if classify(g).kind != IsometryKind::Loxodromic {
        return domain("element is not loxodromic");
    }
    let eig = g.eigenvalues();
    HeisenbergPoint::from_lift(&g.eigenvector(eig[0]))
}

pub fn repelling_fixed_point(g: &Isometry) -> Result<HeisenbergPoint> {
    attracting_fixed_point(&g.inverse())
}

pub fn off_diagonal(m: &Mat3) -> f64 {
    let scale = norm_inf(m).max(1.0);
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::{genus2_group, normalize_axis, octagon_group};
    use crate::linalg::FormKind;

    #[test]
    fn validation_rejects_bad_groups() {
        let g = octagon_group().unwrap();
        let gens = g.generators().to_vec();
        let mut dup = gens.clone();
        dup[1].name = "a1".into();
        assert!(MarkedGroup::new(
            dup,
            g.relations().to_vec(),
            g.g_alpha().clone(),
            g.decomposition().clone(),
            false
        )
        .is_err());
        let overlap = Decomposition::Amalgam {
            g1: vec![0, 1, 2],
            g2: vec![2, 3],
        };
        assert!(MarkedGroup::new(
            gens.clone(),
            g.relations().to_vec(),
            g.g_alpha().clone(),
            overlap,
            false
        )
        .is_err());
        let outside = g.parse_word("a2").unwrap();
        assert!(MarkedGroup::new(
            gens.clone(),
            g.relations().to_vec(),
            outside,
            g.decomposition().clone(),
            false
        )
        .is_err());
        let bad_rel = g.parse_word("a1.b1").unwrap();
        match MarkedGroup::new(
            gens,
            vec![bad_rel],
            g.g_alpha().clone(),
            g.decomposition().clone(),
            false,
        ) {
            Err(Error::Construction { residual, .. }) => assert!(residual > 1e-3),
            other => panic!("expected a construction error, got {other:?}"),
        }
    }

    #[test]
    fn lifted_and_matrix_evaluation_agree() {
        let g = genus2_group(0.7, 0.2).unwrap();
        let w = g.parse_word("a1.b2^-1.a2.b1.a1^-1").unwrap();
        let via_lift = represent(&g.evaluate_lift(&w).unwrap(), FormKind::Ball);
        let direct = g.letter_matrices();
        let mut m = Isometry::identity(FormKind::Ball);
        for l in w.letters() {
            m = m.compose(&direct[l.code() as usize]);
        }
        assert!(via_lift.projectively_eq(&m, 1e-10));
        assert_eq!(g.format_word(&w), "a1.b2^-1.a2.b1.a1^-1");
    }

    #[test]
    fn model_change_preserves_length_and_relations() {
        let g = genus2_group(0.5, 0.0).unwrap();
        let s = g.in_form(FormKind::Siegel);
        assert_eq!(s.form(), FormKind::Siegel);
        assert!(s.relation_residual() < 1e-10);
        assert!((s.ell().unwrap() - g.ell().unwrap()).abs() < 1e-10);
    }

    #[test]
    fn normalized_fixed_points() {
        let n = normalize_axis(&genus2_group(0.5, 0.0).unwrap()).unwrap();
        let a = attracting_fixed_point(&n.g_alpha_matrix()).unwrap();
        assert_eq!(a, HeisenbergPoint::Infinity);
        // the lift route returns a huge real point instead
        let big = n.attracting_fixed_point(n.g_alpha()).unwrap();
        assert!(big
            .coords()
            .map(|(xi, v)| xi.norm() > 1e8 && v == 0.0)
            .unwrap_or(true));
        let rp = repelling_fixed_point(&n.g_alpha_matrix()).unwrap();
        assert!(rp.approx_eq(&HeisenbergPoint::ORIGIN, 1e-10));
        let p = projective_real_point(1.0, 0.0);
        assert_eq!(p, HeisenbergPoint::Infinity);
    }
}
