use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::bending::elementary::elementary_bend_boundary;
use crate::bending::group::BentGroup;
use crate::error::{domain, Error, Result};
use crate::fuchsian::MarkedGroup;
use crate::heisenberg::{act, HeisenbergPoint};
use crate::linalg::{in_model, FormKind, Isometry};
use crate::words::{hash_ints, quantize, Letter, Word};

/// Orbit points closer than this in each Heisenberg coordinate are merged.
pub const DEDUP_RESOLUTION: f64 = 1e-9;
pub const DEFAULT_MAX_SAMPLES: usize = 20_000_000;

/// A group acting on the boundary of the Siegel domain through named generators.
pub trait BoundaryAction {
    fn generator_names(&self) -> Vec<String>;
    /// Siegel-model matrices in letter-code order (g0, g0^-1, g1, ...).
    fn letter_isometries(&self) -> Vec<Isometry>;
    /// Attracting fixed point of the first G1 generator.
    fn default_seed(&self) -> Result<HeisenbergPoint>;
}

fn first_g1_word(g: &MarkedGroup) -> Word {
    Word::letter(Letter::new(g.decomposition().g1()[0], false))
}

impl BoundaryAction for MarkedGroup {
    fn generator_names(&self) -> Vec<String> {
        self.names()
    }

    fn letter_isometries(&self) -> Vec<Isometry> {
        let letters = Letter::all(self.generators().len());
        letters
            .into_iter()
            .map(|l| in_model(&self.evaluate(&Word::letter(l)), FormKind::Siegel))
            .collect()
    }

    fn default_seed(&self) -> Result<HeisenbergPoint> {
        self.attracting_fixed_point(&first_g1_word(self))
    }
}

impl BoundaryAction for BentGroup {
    fn generator_names(&self) -> Vec<String> {
        self.names()
    }

    fn letter_isometries(&self) -> Vec<Isometry> {
        self.letter_matrices()
    }

    fn default_seed(&self) -> Result<HeisenbergPoint> {
        // chi is the identity on G1, so the fixed point is shared with the base group
        self.base().default_seed()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitSample {
    pub word: Word,
    pub point: HeisenbergPoint,
}

/// Breadth-first orbit of a seed. Sample i was reached by applying `letters[i]` to sample
/// `parents[i]`, so its word is that letter followed by the parent's word.
#[derive(Clone, Debug)]
pub struct LimitSet {
    names: Vec<String>,
    seed: HeisenbergPoint,
    points: Vec<HeisenbergPoint>,
    parents: Vec<u32>,
    letters: Vec<u8>,
    level_ends: Vec<usize>,
}

const NO_LETTER: u8 = u8::MAX;

impl LimitSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn seed(&self) -> HeisenbergPoint {
        self.seed
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Number of completed breadth-first levels beyond the seed.
    pub fn depth(&self) -> usize {
        self.level_ends.len().saturating_sub(1)
    }

    pub fn points(&self) -> &[HeisenbergPoint] {
        &self.points
    }

    pub fn word(&self, i: usize) -> Word {
        let mut out = Vec::new();
        let mut k = i;
        while self.letters[k] != NO_LETTER {
            out.push(Letter::from_code(self.letters[k]));
            k = self.parents[k] as usize;
        }
        Word(out)
    }

    pub fn sample(&self, i: usize) -> LimitSample {
        LimitSample {
            word: self.word(i),
            point: self.points[i],
        }
    }

    pub fn samples(&self) -> impl Iterator<Item = LimitSample> + '_ {
        (0..self.len()).map(|i| self.sample(i))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LimitSetOptions {
    pub max_samples: usize,
    pub resolution: f64,
}

impl Default for LimitSetOptions {
    fn default() -> Self {
        LimitSetOptions {
            max_samples: DEFAULT_MAX_SAMPLES,
            resolution: DEDUP_RESOLUTION,
        }
    }
}

fn point_key(p: &HeisenbergPoint, grid: f64) -> u64 {
    match p {
        HeisenbergPoint::Infinity => u64::MAX,
        HeisenbergPoint::Finite { xi, v } => hash_ints(&[
            quantize(xi.re, grid),
            quantize(xi.im, grid),
            quantize(*v, grid),
        ]),
    }
}

/// Orbit of `seed` under reduced words of length up to `depth`.
pub fn limit_set<A: BoundaryAction + ?Sized>(
    g: &A,
    depth: usize,
    seed: Option<HeisenbergPoint>,
    opts: LimitSetOptions,
) -> Result<LimitSet> {
    if depth < 1 {
        return domain("depth must be at least 1");
    }
    let seed = match seed {
        Some(s) => s,
        None => g.default_seed()?,
    };
    let mats = g.letter_isometries();
    let mut set = LimitSet {
        names: g.generator_names(),
        seed,
        points: vec![seed],
        parents: vec![0],
        letters: vec![NO_LETTER],
        level_ends: vec![1],
    };
    let mut seen: HashSet<u64> = HashSet::new();
    seen.insert(point_key(&seed, opts.resolution));
    let chunk = 1 << 15;
    for level in 1..=depth {
        let start = if level == 1 {
            0
        } else {
            set.level_ends[level - 2]
        };
        let end = set.level_ends[level - 1];
        let mut pos = start;
        while pos < end {
            let stop = (pos + chunk).min(end);
            let children: Vec<(HeisenbergPoint, u32, u8, u64)> = (pos..stop)
                .into_par_iter()
                .flat_map_iter(|i| {
                    let parent = set.points[i];
                    let first = set.letters[i];
                    let mats = &mats;
                    (0..mats.len()).filter_map(move |code| {
                        let l = Letter::from_code(code as u8);
                        if first != NO_LETTER && Letter::from_code(first) == l.inv() {
                            return None;
                        }
                        let p = act(&mats[code], &parent).ok()?;
                        Some((p, i as u32, code as u8, point_key(&p, opts.resolution)))
                    })
                })
                .collect();
            for (p, parent, code, key) in children {
                if seen.insert(key) {
                    if set.points.len() >= opts.max_samples {
                        return Err(Error::Resource {
                            budget: opts.max_samples,
                            depth: level,
                            partial: Box::new(set),
                        });
                    }
                    set.points.push(p);
                    set.parents.push(parent);
                    set.letters.push(code);
                }
            }
            pos = stop;
        }
        set.level_ends.push(set.points.len());
    }
    Ok(set)
}

/// F_eta(g x0) = chi(g) phi(x0). The base point x0 is the default seed when the sample lies
/// on its orbit, and g^-1 applied to the sample point otherwise.
pub fn equivariant_boundary_map(b: &BentGroup, s: &LimitSample) -> Result<HeisenbergPoint> {
    let n = b.generators_eta().len();
    if s.word.letters().iter().any(|l| l.index() >= n) {
        return domain("sample word refers to unknown generators");
    }
    if b.steps().iter().all(|st| st.params.eta() == 0.0) {
        return Ok(s.point);
    }
    let base = b.base().letter_isometries();
    let on_seed_orbit = |seed: &HeisenbergPoint| {
        let tol = 1e-9 * s.point.cygan_norm().unwrap_or(1.0).max(1.0);
        apply_word(&base, &s.word, seed)
            .map(|p| p.approx_eq(&s.point, tol))
            .unwrap_or(false)
    };
    let x0 = match b.default_seed() {
        Ok(seed) if on_seed_orbit(&seed) => seed,
        _ => apply_word(&base, &s.word.inverse(), &s.point)?,
    };
    equivariant_image(b, &s.word, &x0)
}

/// Applies a word letter by letter from the right. Applying a long product at once loses
/// accuracy to cancellation among its large entries.
fn apply_word(letter_mats: &[Isometry], w: &Word, x: &HeisenbergPoint) -> Result<HeisenbergPoint> {
    let mut y = *x;
    for l in w.letters().iter().rev() {
        y = act(&letter_mats[l.code() as usize], &y)?;
    }
    Ok(y)
}

/// chi(word) applied to the elementary bending of the base point x0.
pub fn equivariant_image(
    b: &BentGroup,
    word: &Word,
    x0: &HeisenbergPoint,
) -> Result<HeisenbergPoint> {
    let mut y = elementary_bend_boundary(&b.params(), x0);
    // later bends act through their frames: V^-1 phi V with V the frame
    for st in &b.steps()[1..] {
        let f = crate::fuchsian::represent(
            &st.frame.expect("later bends carry a frame"),
            FormKind::Siegel,
        );
        y = act(&f, &y)?;
        y = elementary_bend_boundary(&st.params, &y);
        y = act(&f.inverse(), &y)?;
    }
    apply_word(&b.letter_matrices(), word, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bending::{bend_group, default_zeta, BendingParams};
    use crate::fuchsian::{genus2_group, normalize_axis};
    use crate::heisenberg::cygan_metric;

    fn base() -> MarkedGroup {
        normalize_axis(&genus2_group(0.5, 0.0).unwrap()).unwrap()
    }

    fn bent(eta: f64) -> BentGroup {
        let g = base();
        let z = default_zeta(&g, eta).unwrap();
        bend_group(&g, BendingParams::new(eta, z).unwrap()).unwrap()
    }

    #[test]
    fn fuchsian_limit_set_is_on_the_real_circle() {
        let set = limit_set(&base(), 5, None, LimitSetOptions::default()).unwrap();
        assert!(set.len() > 1000);
        for p in set.points() {
            if let Some((xi, v)) = p.coords() {
                assert!(xi.im.abs() < 1e-8 && v.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn samples_carry_their_words() {
        let g = base();
        let set = limit_set(&g, 4, None, LimitSetOptions::default()).unwrap();
        let mats = g.letter_isometries();
        for s in set.samples().step_by(7) {
            let p = apply_word(&mats, &s.word, &set.seed()).unwrap();
            assert!(p.approx_eq(
                &s.point,
                1e-9 * s.point.cygan_norm().unwrap_or(1.0).max(1.0)
            ));
            assert!(s.word.is_reduced() && s.word.len() <= 4);
        }
    }

    #[test]
    fn depth_is_monotone() {
        let g = base();
        let small = limit_set(&g, 3, None, LimitSetOptions::default()).unwrap();
        let big = limit_set(&g, 4, None, LimitSetOptions::default()).unwrap();
        assert!(big.len() > small.len());
        // breadth-first order makes the smaller set a prefix
        for (a, b) in small.points().iter().zip(big.points()) {
            assert_eq!(a, b);
        }
        assert_eq!(big.depth(), 4);
    }

    #[test]
    fn bent_limit_set_approaches_origin_along_the_bent_ray() {
        let eta = 0.3;
        let set = limit_set(&bent(eta), 6, None, LimitSetOptions::default()).unwrap();
        let mut near: Vec<(f64, f64)> = set
            .points()
            .iter()
            .filter_map(|p| p.coords().map(|(xi, _)| (p.cygan_norm().unwrap(), xi)))
            .filter(|(_, xi)| xi.re > 0.0)
            .map(|(n, xi)| (n, xi.arg()))
            .collect();
        near.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        assert!(near.len() > 10);
        for (_, a) in near.iter().take(10) {
            assert!((a - eta).abs() < 1e-3, "arg {a}");
        }
    }

    #[test]
    fn budget_exhaustion_returns_partial_samples() {
        let opts = LimitSetOptions {
            max_samples: 50,
            ..LimitSetOptions::default()
        };
        match limit_set(&base(), 6, None, opts) {
            Err(Error::Resource {
                budget, partial, ..
            }) => {
                assert_eq!(budget, 50);
                assert_eq!(partial.len(), 50);
            }
            other => panic!(
                "expected a resource error, got {:?}",
                other.map(|s| s.len())
            ),
        }
        assert!(limit_set(&base(), 0, None, LimitSetOptions::default()).is_err());
    }

    #[test]
    fn boundary_map_is_equivariant() {
        let b = bent(0.3);
        let set = limit_set(b.base(), 3, None, LimitSetOptions::default()).unwrap();
        let seed = set.seed();
        let trivial = set.sample(0);
        assert!(trivial.word.is_empty());
        let phi = elementary_bend_boundary(&b.params(), &seed);
        assert!(equivariant_boundary_map(&b, &trivial)
            .unwrap()
            .approx_eq(&phi, 1e-12));
        let letters = b.letter_matrices();
        for s in set.samples().skip(1).step_by(5) {
            let fx = equivariant_boundary_map(&b, &s).unwrap();
            for code in 0..letters.len() as u8 {
                let h = Letter::from_code(code);
                if s.word.letters().first() == Some(&h.inv()) {
                    continue;
                }
                let lhs = equivariant_image(&b, &Word::letter(h).concat(&s.word), &seed).unwrap();
                let rhs = act(&letters[code as usize], &fx).unwrap();
                let scale = lhs.cygan_norm().unwrap_or(1.0).max(1.0);
                assert!(cygan_metric(&lhs, &rhs).unwrap() < 1e-9 * scale);
            }
        }
    }

    #[test]
    fn zero_bend_boundary_map_is_identity() {
        let b = bent(0.0);
        let set = limit_set(b.base(), 3, None, LimitSetOptions::default()).unwrap();
        for s in set.samples() {
            assert_eq!(equivariant_boundary_map(&b, &s).unwrap(), s.point);
        }
    }
}
