//! Cocompact surface groups inside SO⁺(2,1): presentations, reduced words,
//! the regular 4g-gon construction and word-ball enumeration.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::minkowski::{LorentzClass, LorentzTransform};

/// Matrix max-norm below which two ball elements are identified.
pub const DEFAULT_DEDUP: f64 = 1e-6;

/// Generator `k` of a genus-g presentation is `a_{k/2+1}` for even `k` and
/// `b_{k/2+1}` for odd `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Self {
        Self { generator, inverse }
    }

    pub fn inv(self) -> Self {
        Self {
            generator: self.generator,
            inverse: !self.inverse,
        }
    }

    /// All 4g letters in their shortlex order.
    pub fn alphabet(generator_count: usize) -> Vec<Letter> {
        (0..generator_count)
            .flat_map(|k| [Letter::new(k, false), Letter::new(k, true)])
            .collect()
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match (self.generator % 2, self.inverse) {
            (0, false) => 'a',
            (0, true) => 'A',
            (_, false) => 'b',
            (_, true) => 'B',
        };
        write!(f, "{}{}", c, self.generator / 2 + 1)
    }
}

/// Freely reduced word in the surface-group generators. Inverse letters
/// render in upper case (`A1` = a₁⁻¹); the empty word renders as `e`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct GroupWord(Vec<Letter>);

impl GroupWord {
    pub fn identity() -> Self {
        Self(Vec::new())
    }

    /// Builds a word, cancelling adjacent letter/inverse pairs.
    pub fn new(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inv()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Self(out)
    }

    pub fn generator(k: usize) -> Self {
        Self(vec![Letter::new(k, false)])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.iter().rev().map(|l| l.inv()).collect())
    }

    pub fn concat(&self, other: &Self) -> Self {
        Self::new(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1].inv())
    }

    pub fn max_generator(&self) -> Option<usize> {
        self.0.iter().map(|l| l.generator).max()
    }

    pub fn evaluate(&self, generators: &[LorentzTransform]) -> LorentzTransform {
        let mats: Vec<LorentzTransform> = self
            .0
            .iter()
            .map(|l| {
                let g = generators[l.generator];
                if l.inverse {
                    g.inverse()
                } else {
                    g
                }
            })
            .collect();
        LorentzTransform::product(&mats)
    }
}

impl Ord for GroupWord {
    /// Shortlex: shorter words first, then lexicographic in letter order.
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for GroupWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for l in &self.0 {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl serde::Serialize for GroupWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for GroupWord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for GroupWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidWord {
            word: s.to_string(),
            reason: reason.to_string(),
        };
        let s = s.trim();
        if s == "e" || s.is_empty() {
            return Ok(Self::identity());
        }
        let chars: Vec<char> = s.chars().collect();
        let mut letters = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let (parity, inverse) = match chars[i] {
                'a' => (0, false),
                'A' => (0, true),
                'b' => (1, false),
                'B' => (1, true),
                _ => return Err(bad("expected one of a, A, b, B")),
            };
            i += 1;
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let index: usize = chars[start..i]
                .iter()
                .collect::<String>()
                .parse()
                .map_err(|_| bad("missing generator index"))?;
            if index == 0 {
                return Err(bad("generator indices start at 1"));
            }
            letters.push(Letter::new(2 * (index - 1) + parity, inverse));
        }
        Ok(Self::new(letters))
    }
}

/// ⟨a₁,b₁,…,a_g,b_g | [b_g,a_g]⋯[b₂,a₂][a₁,b₁]⟩ with [x,y] = x y x⁻¹ y⁻¹.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SurfaceGroupPresentation {
    genus: usize,
}

impl SurfaceGroupPresentation {
    pub fn new(genus: usize) -> Result<Self> {
        if genus < 2 {
            return Err(Error::GenusTooSmall(genus));
        }
        Ok(Self { genus })
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn generator_count(&self) -> usize {
        2 * self.genus
    }

    pub fn label(&self, k: usize) -> String {
        Letter::new(k, false).to_string()
    }

    pub fn relator(&self) -> GroupWord {
        let commutator = |x: usize, y: usize| {
            [
                Letter::new(x, false),
                Letter::new(y, false),
                Letter::new(x, true),
                Letter::new(y, true),
            ]
        };
        let mut letters = Vec::with_capacity(4 * self.genus);
        for i in (1..self.genus).rev() {
            letters.extend(commutator(2 * i + 1, 2 * i));
        }
        letters.extend(commutator(0, 1));
        GroupWord(letters)
    }

    pub fn check_word(&self, w: &GroupWord) -> Result<()> {
        match w.max_generator() {
            Some(k) if k >= self.generator_count() => Err(Error::InvalidWord {
                word: w.to_string(),
                reason: format!("genus {} has no generator {}", self.genus, Letter::new(k, false)),
            }),
            _ => Ok(()),
        }
    }
}

/// Generators (a₁, b₁, …, a_g, b_g) of the side-pairing group of the regular
/// hyperbolic 4g-gon centred at (1,0,0) with interior angles 2π/4g.
///
/// Sides are numbered counter-clockwise from the one whose midpoint lies on
/// the positive x¹ axis; the boundary reads s s' s⁻¹ s'⁻¹ per handle. The
/// pairing of side j onto side i is `M_i · R(π) · M_j⁻¹`, where `M_i` carries
/// the centre to the midpoint of side i with the outward normal along the
/// boost direction.
pub fn genus_g_surface_group(genus: usize) -> Result<Vec<LorentzTransform>> {
    SurfaceGroupPresentation::new(genus)?;
    let sides = 4 * genus;
    let inradius = (1.0 / (PI / sides as f64).tan()).acosh();
    let midpoint_frame = |i: usize| {
        LorentzTransform::rotation(2.0 * PI * i as f64 / sides as f64)
            * LorentzTransform::boost_x(inradius)
    };
    let half_turn = LorentzTransform::rotation(PI);
    let pairing = |i: usize, j: usize| midpoint_frame(i) * half_turn * midpoint_frame(j).inverse();

    let mut gens = Vec::with_capacity(2 * genus);
    for h in 0..genus {
        let s = pairing(4 * h, 4 * h + 2);
        let t = pairing(4 * h + 1, 4 * h + 3);
        // orientation of the first handle is flipped so that the relator
        // closes in the [b_g,a_g]⋯[b₂,a₂][a₁,b₁] form
        if h == 0 {
            gens.push(t.inverse().reorthonormalized());
            gens.push(s.reorthonormalized());
        } else {
            gens.push(s.reorthonormalized());
            gens.push(t.inverse().reorthonormalized());
        }
    }
    Ok(gens)
}

/// Max-norm of (relator evaluated in SO⁺(2,1)) − 1.
pub fn relator_residual(
    presentation: &SurfaceGroupPresentation,
    generators: &[LorentzTransform],
) -> Result<f64> {
    if generators.len() != presentation.generator_count() {
        return Err(Error::GeneratorCount {
            expected: presentation.generator_count(),
            got: generators.len(),
        });
    }
    Ok(presentation
        .relator()
        .evaluate(generators)
        .distance_to_identity())
}

/// arccosh((tr v − 1)/2) for hyperbolic v.
pub fn translation_length(v: &LorentzTransform) -> Result<f64> {
    match v.classify() {
        LorentzClass::Hyperbolic => Ok(((v.trace() - 1.0) / 2.0).acosh()),
        other => Err(Error::NotHyperbolic(other)),
    }
}

#[derive(Clone, Debug)]
pub struct BallElement {
    pub word: GroupWord,
    pub matrix: LorentzTransform,
}

/// Two distinct canonical elements whose matrices are suspiciously close.
#[derive(Clone, Debug)]
pub struct DedupWarning {
    pub kept: GroupWord,
    pub other: GroupWord,
    pub distance: f64,
}

/// Finite truncation of the group: every freely reduced word of length ≤ L,
/// deduplicated by matrix distance, in shortlex order.
#[derive(Clone, Debug)]
pub struct GroupBall {
    pub radius: usize,
    pub dedup: f64,
    pub elements: Vec<BallElement>,
    pub warnings: Vec<DedupWarning>,
}

impl GroupBall {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn non_identity(&self) -> impl Iterator<Item = &BallElement> {
        self.elements.iter().filter(|e| !e.word.is_empty())
    }

    /// Canonical element whose matrix matches `m` within the dedup distance.
    pub fn find(&self, m: &LorentzTransform) -> Option<&BallElement> {
        self.elements
            .iter()
            .find(|e| e.matrix.max_abs_diff(m) < self.dedup)
    }
}

struct MatrixIndex {
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<usize>>,
}

impl MatrixIndex {
    fn new(cell: f64) -> Self {
        Self {
            cell,
            buckets: HashMap::new(),
        }
    }

    fn key(&self, m: &LorentzTransform) -> [i64; 3] {
        let r = m.rows();
        [r[0][0], r[0][1], r[1][0]].map(|x| (x / self.cell).floor() as i64)
    }

    fn neighbours<'a>(&'a self, m: &LorentzTransform) -> impl Iterator<Item = usize> + 'a {
        let k = self.key(m);
        (-1..=1).flat_map(move |i| {
            (-1..=1).flat_map(move |j| {
                (-1..=1).flat_map(move |l| {
                    self.buckets
                        .get(&[k[0] + i, k[1] + j, k[2] + l])
                        .into_iter()
                        .flatten()
                        .copied()
                })
            })
        })
    }

    fn insert(&mut self, m: &LorentzTransform, idx: usize) {
        self.buckets.entry(self.key(m)).or_default().push(idx);
    }
}

pub fn enumerate_ball(generators: &[LorentzTransform], radius: usize) -> GroupBall {
    enumerate_ball_with(generators, radius, DEFAULT_DEDUP)
}

/// Breadth-first enumeration by word length. Only canonical words are
/// extended: a prefix of a shortlex-least word is itself shortlex-least.
pub fn enumerate_ball_with(
    generators: &[LorentzTransform],
    radius: usize,
    dedup: f64,
) -> GroupBall {
    let alphabet = Letter::alphabet(generators.len());
    let letter_matrix: Vec<LorentzTransform> = alphabet
        .iter()
        .map(|l| {
            let g = generators[l.generator];
            if l.inverse {
                g.inverse()
            } else {
                g
            }
        })
        .collect();

    let mut elements = vec![BallElement {
        word: GroupWord::identity(),
        matrix: LorentzTransform::identity(),
    }];
    let mut warnings = Vec::new();
    let mut index = MatrixIndex::new(10.0 * dedup);
    index.insert(&elements[0].matrix, 0);
    let mut frontier = 0..1;

    for _ in 0..radius {
        let parents = &elements[frontier.clone()];
        let children: Vec<BallElement> = parents
            .par_iter()
            .flat_map_iter(|p| {
                let last = p.word.letters().last().copied();
                alphabet
                    .iter()
                    .zip(&letter_matrix)
                    .filter(move |(l, _)| last != Some(l.inv()))
                    .map(move |(l, m)| {
                        let mut letters = p.word.letters().to_vec();
                        letters.push(*l);
                        BallElement {
                            word: GroupWord(letters),
                            matrix: p.matrix.compose(m),
                        }
                    })
            })
            .collect();

        let start = elements.len();
        for child in children {
            let mut duplicate = false;
            for j in index.neighbours(&child.matrix) {
                let d = elements[j].matrix.max_abs_diff(&child.matrix);
                if d < dedup {
                    duplicate = true;
                    break;
                } else if d < 10.0 * dedup {
                    log::warn!(
                        "ball elements {} and {} are {d:e} apart",
                        elements[j].word,
                        child.word
                    );
                    warnings.push(DedupWarning {
                        kept: elements[j].word.clone(),
                        other: child.word.clone(),
                        distance: d,
                    });
                }
            }
            if !duplicate {
                index.insert(&child.matrix, elements.len());
                elements.push(child);
            }
        }
        frontier = start..elements.len();
    }

    GroupBall {
        radius,
        dedup,
        elements,
        warnings,
    }
}

/// Smallest displacement d(x, v x) over the non-identity ball elements, for
/// x = (1,0,0).
pub fn min_displacement(ball: &GroupBall) -> f64 {
    ball.non_identity()
        .map(|e| e.matrix.matrix()[(0, 0)].max(1.0).acosh())
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn octagon() -> Vec<LorentzTransform> {
        genus_g_surface_group(2).unwrap()
    }

    #[test]
    fn word_parsing_and_reduction() {
        let w: GroupWord = "a1b1A1B1".parse().unwrap();
        assert_eq!(w.len(), 4);
        assert_eq!(w.to_string(), "a1b1A1B1");
        let r: GroupWord = "a1b2B2a2".parse().unwrap();
        assert_eq!(r.to_string(), "a1a2");
        assert_eq!("e".parse::<GroupWord>().unwrap(), GroupWord::identity());
        assert!("x1".parse::<GroupWord>().is_err());
        assert!("a0".parse::<GroupWord>().is_err());
        assert!(w.concat(&w.inverse()).is_empty());
    }

    #[test]
    fn shortlex_order() {
        let mut ws: Vec<GroupWord> = ["b1", "a1a1", "A1", "a1", "e"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        ws.sort();
        let s: Vec<String> = ws.iter().map(|w| w.to_string()).collect();
        assert_eq!(s, ["e", "a1", "A1", "b1", "a1a1"]);
    }

    #[test]
    fn relator_word_shape() {
        let p = SurfaceGroupPresentation::new(3).unwrap();
        assert_eq!(p.relator().to_string(), "b3a3B3A3b2a2B2A2a1b1A1B1");
        assert!(SurfaceGroupPresentation::new(1).is_err());
    }

    #[test]
    fn octagon_relator_closes() {
        let p = SurfaceGroupPresentation::new(2).unwrap();
        let gens = octagon();
        // direct, unnormalised product of the eight letters
        let mut m = LorentzTransform::identity();
        for l in p.relator().letters() {
            let g = gens[l.generator];
            m = m * if l.inverse { g.inverse() } else { g };
        }
        assert!(m.distance_to_identity() < 1e-8);
        assert!(relator_residual(&p, &gens).unwrap() < 1e-8);
    }

    #[test]
    fn higher_genus_relators_close() {
        for g in 3..=4 {
            let p = SurfaceGroupPresentation::new(g).unwrap();
            let gens = genus_g_surface_group(g).unwrap();
            let r = relator_residual(&p, &gens).unwrap();
            assert!(r < 1e-6, "genus {g}: {r:e}");
        }
    }

    #[test]
    fn octagon_generators_hyperbolic_equal_length() {
        let gens = octagon();
        let lens: Vec<f64> = gens.iter().map(|g| translation_length(g).unwrap()).collect();
        for g in &gens {
            assert_eq!(g.classify(), LorentzClass::Hyperbolic);
            assert!(g.group_defect() < 1e-12);
        }
        for l in &lens {
            assert!((l - lens[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn residual_degenerate_and_perturbed() {
        let p = SurfaceGroupPresentation::new(2).unwrap();
        let ids = vec![LorentzTransform::identity(); 4];
        assert_eq!(relator_residual(&p, &ids).unwrap(), 0.0);

        let mut gens = octagon();
        let mut m = *gens[1].matrix();
        m[(1, 2)] += 1e-3;
        gens[1] = LorentzTransform::from_matrix_unchecked(m);
        assert!(relator_residual(&p, &gens).unwrap() > 1e-4);
        assert!(relator_residual(&p, &gens[..3]).is_err());
    }

    #[test]
    fn genus_too_small() {
        assert!(matches!(genus_g_surface_group(1), Err(Error::GenusTooSmall(1))));
    }

    #[test]
    fn translation_length_examples() {
        let b = LorentzTransform::boost_x(1.7);
        assert!((translation_length(&b).unwrap() - 1.7).abs() < 1e-12);
        // eigenvalues of the boost are e^ξ, 1, e^{-ξ}
        let mut ev: Vec<f64> = b.matrix().complex_eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[2].ln() - 1.7).abs() < 1e-9);

        let w = LorentzTransform::rotation(0.8) * LorentzTransform::boost(0.3, [0.6, 0.8]).unwrap();
        let conj = w * b * w.inverse();
        assert!((translation_length(&conj).unwrap() - 1.7).abs() < 1e-9);
        assert!((translation_length(&(b * b)).unwrap() - 3.4).abs() < 1e-9);
        assert!(translation_length(&LorentzTransform::rotation(1.0)).is_err());
    }

    #[test]
    fn ball_small_radii() {
        let gens = octagon();
        let b0 = enumerate_ball(&gens, 0);
        assert_eq!(b0.len(), 1);
        assert!(b0.elements[0].word.is_empty());

        let b1 = enumerate_ball(&gens, 1);
        assert_eq!(b1.len(), 9);
        for (i, e) in b1.elements.iter().enumerate() {
            for f in &b1.elements[i + 1..] {
                assert!(e.matrix.max_abs_diff(&f.matrix) > 1e-3);
            }
        }
        assert!(b1.warnings.is_empty());
    }

    #[test]
    fn ball_closed_under_inversion_and_nested() {
        let gens = octagon();
        let b3 = enumerate_ball(&gens, 3);
        let b4 = enumerate_ball(&gens, 4);
        for e in &b3.elements {
            assert!(e.word.is_reduced());
            assert!(b3.find(&e.matrix.inverse()).is_some(), "{}", e.word);
        }
        let words4: std::collections::HashSet<_> =
            b4.elements.iter().map(|e| e.word.clone()).collect();
        for e in &b3.elements {
            assert!(words4.contains(&e.word));
        }
        let sorted = b4.elements.windows(2).all(|w| w[0].word < w[1].word);
        assert!(sorted);
    }

    #[test]
    fn ball_radius_four_is_hyperbolic_and_discrete() {
        let gens = octagon();
        let b4 = enumerate_ball(&gens, 4);
        // all reduced words: 1 + 8 + 56 + 392 + 2744; relator halves coincide
        assert!(b4.len() < 3201);
        for e in b4.non_identity() {
            assert_eq!(e.matrix.classify(), LorentzClass::Hyperbolic, "{}", e.word);
        }
        assert!(min_displacement(&b4) > 10.0 * DEFAULT_DEDUP);
        assert!(b4.warnings.is_empty());
    }

    #[test]
    fn ball_is_deterministic_across_thread_counts() {
        let gens = octagon();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let single = pool.install(|| enumerate_ball(&gens, 3));
        let multi = enumerate_ball(&gens, 3);
        assert_eq!(single.len(), multi.len());
        for (a, b) in single.elements.iter().zip(&multi.elements) {
            assert_eq!(a.word, b.word);
            assert_eq!(a.matrix, b.matrix);
        }
    }
}
