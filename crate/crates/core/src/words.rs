//! Words over a named generating set: parsing, free reduction and breadth-first
//! enumeration of group elements with deduplication.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator index plus orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub generator: u16,
    pub inverse: bool,
}

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Self {
        Letter {
            generator: generator as u16,
            inverse,
        }
    }

    pub fn inv(self) -> Letter {
        Letter {
            generator: self.generator,
            inverse: !self.inverse,
        }
    }

    pub fn index(self) -> usize {
        self.generator as usize
    }

    /// Position in the list g0, g0^-1, g1, g1^-1, ...
    pub fn code(self) -> u8 {
        (2 * self.generator + self.inverse as u16) as u8
    }

    pub fn from_code(code: u8) -> Letter {
        Letter {
            generator: (code / 2) as u16,
            inverse: code % 2 == 1,
        }
    }

    /// All letters for n generators, in code order.
    pub fn all(n: usize) -> Vec<Letter> {
        (0..2 * n).map(|k| Letter::from_code(k as u8)).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn letter(l: Letter) -> Self {
        Word(vec![l])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inv()).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v).reduced()
    }

    pub fn reduced(&self) -> Word {
        let mut out: Vec<Letter> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if out.last() == Some(&l.inv()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1].inv())
    }

    pub fn power(&self, k: i32) -> Word {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut v = Vec::new();
        for _ in 0..k.unsigned_abs() {
            v.extend_from_slice(&base.0);
        }
        Word(v).reduced()
    }

    /// Dot-separated names, inverses written `name^-1`, the empty word `e`.
    pub fn format(&self, names: &[String]) -> String {
        if self.0.is_empty() {
            return "e".into();
        }
        let mut s = String::new();
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                s.push('.');
            }
            s.push_str(&names[l.index()]);
            if l.inverse {
                s.push_str("^-1");
            }
        }
        s
    }

    pub fn parse(text: &str, names: &[String]) -> Result<Word> {
        let text = text.trim();
        if text.is_empty() || text == "e" {
            return Ok(Word::identity());
        }
        let mut out = Vec::new();
        for tok in text.split('.') {
            let tok = tok.trim();
            let (name, inverse) = match tok.strip_suffix("^-1") {
                Some(n) => (n, true),
                None => (tok, false),
            };
            let idx = names.iter().position(|n| n == name).ok_or_else(|| {
                Error::Validation(format!("unknown generator '{name}' in word '{text}'"))
            })?;
            out.push(Letter::new(idx, inverse));
        }
        Ok(Word(out))
    }
}

/// Group elements that can be enumerated and deduplicated.
pub trait GroupElement: Clone + Send + Sync {
    fn compose(&self, other: &Self) -> Self;
    /// The identity of the group this element belongs to.
    fn identity_like(&self) -> Self;
    /// Hash of the element quantized at the given grid, invariant under the
    /// scalar ambiguity of the representation.
    fn fingerprint(&self, grid: f64) -> u64;
}

pub(crate) fn quantize(x: f64, grid: f64) -> i64 {
    let q = (x / grid).round();
    if q.is_finite() {
        q as i64
    } else {
        i64::MAX
    }
}

pub(crate) fn hash_ints(parts: &[i64]) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    parts.hash(&mut h);
    h.finish()
}

impl GroupElement for crate::sl2::Sl2 {
    fn compose(&self, other: &Self) -> Self {
        self.mul(other)
    }

    fn identity_like(&self) -> Self {
        crate::sl2::Sl2::IDENTITY
    }

    fn fingerprint(&self, grid: f64) -> u64 {
        // +-m are the same element of PSL(2,R)
        let first = [self.a, self.b, self.c, self.d]
            .into_iter()
            .find(|x| x.abs() > 1e-6)
            .unwrap_or(1.0);
        let s = first.signum();
        hash_ints(&[
            quantize(s * self.a, grid),
            quantize(s * self.b, grid),
            quantize(s * self.c, grid),
            quantize(s * self.d, grid),
        ])
    }
}

impl GroupElement for crate::linalg::Isometry {
    fn compose(&self, other: &Self) -> Self {
        crate::linalg::Isometry::compose(self, other)
    }

    fn identity_like(&self) -> Self {
        crate::linalg::Isometry::identity(self.form())
    }

    fn fingerprint(&self, grid: f64) -> u64 {
        let m = self.matrix();
        let big = m.iter().fold(crate::linalg::ZERO, |acc, z| {
            if z.norm() > acc.norm() + 1e-9 {
                *z
            } else {
                acc
            }
        });
        let phase = if big.norm() > 0.0 {
            big.conj() / big.norm()
        } else {
            crate::linalg::ONE
        };
        let mut parts = Vec::with_capacity(18);
        for z in m.iter() {
            let w = z * phase;
            parts.push(quantize(w.re, grid));
            parts.push(quantize(w.im, grid));
        }
        hash_ints(&parts)
    }
}

/// An enumerated element with its reduced word.
#[derive(Clone, Debug)]
pub struct Enumerated<E> {
    pub word: Word,
    pub element: E,
}

/// Breadth-first enumeration of reduced words up to `depth`, deduplicating elements by
/// quantized fingerprint. `gens[code]` must hold the element for `Letter::from_code(code)`.
/// The identity is not included.
pub fn enumerate<E: GroupElement>(gens: &[E], depth: usize, grid: f64) -> Vec<Enumerated<E>> {
    let mut seen: HashSet<u64> = HashSet::new();
    let mut out: Vec<Enumerated<E>> = Vec::new();
    let mut frontier: Vec<Enumerated<E>> = Vec::new();
    if let Some(g) = gens.first() {
        seen.insert(g.identity_like().fingerprint(grid));
    }
    for (code, g) in gens.iter().enumerate() {
        if seen.insert(g.fingerprint(grid)) {
            let e = Enumerated {
                word: Word::letter(Letter::from_code(code as u8)),
                element: g.clone(),
            };
            frontier.push(e);
        }
    }
    out.extend(frontier.iter().cloned());
    for _ in 1..depth {
        let candidates: Vec<Enumerated<E>> = frontier
            .par_iter()
            .flat_map_iter(|e| {
                let last = *e.word.0.last().expect("nonempty");
                gens.iter().enumerate().filter_map(move |(code, g)| {
                    let l = Letter::from_code(code as u8);
                    if l == last.inv() {
                        return None;
                    }
                    let mut w = e.word.0.clone();
                    w.push(l);
                    Some(Enumerated {
                        word: Word(w),
                        element: e.element.compose(g),
                    })
                })
            })
            .collect();
        let fps: Vec<u64> = candidates
            .par_iter()
            .map(|e| e.element.fingerprint(grid))
            .collect();
        let mut next = Vec::new();
        for (e, fp) in candidates.into_iter().zip(fps) {
            if seen.insert(fp) {
                next.push(e);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    out
}

/// Writes a list of words, one per line (debug helper for reports).
pub fn format_words(words: &[Word], names: &[String]) -> String {
    let mut s = String::new();
    for w in words {
        let _ = writeln!(s, "{}", w.format(names));
    }
    s
}
