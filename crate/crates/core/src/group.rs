//! The deck group of a genus-two surface, realised as the side pairings of
//! the regular hyperbolic octagon with vertex angle `PI/4` centred at 0.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI, SQRT_2};
use std::fmt;

use num_complex::Complex64;

use crate::disc::{distance, DiscPoint, HyperbolicGeodesic, MobiusMap, C64};
use crate::error::{Error, Result};

/// `cosh(l/2)` for the side-pairing translations.
pub const COSH_HALF_TRANSLATION: f64 = 1.0 + SQRT_2;

/// A generator or its inverse. `index` 0..4 stands for a1, b1, a2, b2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub index: u8,
    pub inverse: bool,
}

impl Letter {
    pub const fn new(index: u8, inverse: bool) -> Self {
        Letter { index, inverse }
    }

    pub fn inv(self) -> Self {
        Letter::new(self.index, !self.inverse)
    }

    pub fn to_char(self) -> char {
        let c = (b'a' + self.index) as char;
        if self.inverse {
            c.to_ascii_uppercase()
        } else {
            c
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        let lower = c.to_ascii_lowercase();
        if !('a'..='d').contains(&lower) {
            return None;
        }
        Some(Letter::new(lower as u8 - b'a', c.is_ascii_uppercase()))
    }

    /// All eight letters ordered by their serialized character (capitals first).
    pub fn all() -> [Letter; 8] {
        let mut v = [Letter::new(0, false); 8];
        for i in 0..4u8 {
            v[i as usize] = Letter::new(i, true);
            v[4 + i as usize] = Letter::new(i, false);
        }
        v
    }
}

/// A group element together with the freely reduced word that produced it.
///
/// The word is read as a product left to right, so `"ab"` acts as `a ∘ b`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub map: MobiusMap,
    pub word: Vec<Letter>,
}

impl GroupElement {
    pub fn identity() -> Self {
        GroupElement {
            map: MobiusMap::IDENTITY,
            word: Vec::new(),
        }
    }

    pub fn apply(&self, z: C64) -> C64 {
        self.map.apply(z)
    }

    /// `self ∘ other` with the word freely reduced.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        let mut word = self.word.clone();
        for &l in &other.word {
            if word.last() == Some(&l.inv()) {
                word.pop();
            } else {
                word.push(l);
            }
        }
        GroupElement {
            map: self.map.compose(&other.map),
            word,
        }
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            map: self.map.inverse(),
            word: self.word.iter().rev().map(|l| l.inv()).collect(),
        }
    }

    pub fn word_string(&self) -> String {
        self.word.iter().map(|l| l.to_char()).collect()
    }

    pub fn is_identity_word(&self) -> bool {
        self.word.is_empty()
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            write!(f, "e")
        } else {
            write!(f, "{}", self.word_string())
        }
    }
}

#[derive(Debug, Clone)]
pub struct FuchsianGroup {
    pub generators: [GroupElement; 4],
    /// Octagon vertices, counterclockwise starting at angle `PI/8`.
    pub vertices: [C64; 8],
    pub translation_length: f64,
    /// Hyperbolic distance from 0 to the octagon sides.
    pub inradius: f64,
    /// Hyperbolic distance from 0 to the octagon vertices.
    pub circumradius: f64,
    letter_maps: [MobiusMap; 8],
    /// `facing[k]` is the letter map that pulls back the neighbour of 0 at angle `k PI/4`.
    facing: [usize; 8],
}

/// The relator `a B c D A b C d` of this presentation.
pub const RELATOR: &str = "aBcDAbCd";

pub fn genus2_group() -> FuchsianGroup {
    let c = COSH_HALF_TRANSLATION;
    let s = (c * c - 1.0).sqrt();
    let base = MobiusMap {
        a: Complex64::new(c, 0.0),
        b: Complex64::new(s, 0.0),
    };
    let generators: [GroupElement; 4] = std::array::from_fn(|k| {
        let r = MobiusMap::rotation(k as f64 * FRAC_PI_4);
        GroupElement {
            map: r.compose(&base).compose(&r.inverse()),
            word: vec![Letter::new(k as u8, false)],
        }
    });
    let letter_maps = Letter::all().map(|l| {
        let m = generators[l.index as usize].map;
        if l.inverse {
            m.inverse()
        } else {
            m
        }
    });
    let circumradius = (3.0 + 2.0 * SQRT_2).acosh();
    let rv = (0.5 * circumradius).tanh();
    let vertices = std::array::from_fn(|k| C64::from_polar(rv, FRAC_PI_8 + k as f64 * FRAC_PI_4));
    let mut facing = [0usize; 8];
    for (i, m) in letter_maps.iter().enumerate() {
        let p = m.inverse().apply(Complex64::new(0.0, 0.0));
        let k = (p.arg() / FRAC_PI_4).round().rem_euclid(8.0) as usize;
        facing[k] = i;
    }
    FuchsianGroup {
        generators,
        vertices,
        facing,
        translation_length: 2.0 * c.acosh(),
        inradius: c.acosh(),
        circumradius,
        letter_maps,
    }
}

impl FuchsianGroup {
    pub fn letter_map(&self, l: Letter) -> MobiusMap {
        let pos = if l.inverse { l.index } else { 4 + l.index };
        self.letter_maps[pos as usize]
    }

    pub fn element(&self, word: &[Letter]) -> GroupElement {
        word.iter().fold(GroupElement::identity(), |acc, &l| {
            acc.compose(&GroupElement {
                map: self.letter_map(l),
                word: vec![l],
            })
        })
    }

    pub fn parse_word(&self, s: &str) -> Result<GroupElement> {
        let letters = s
            .chars()
            .filter(|c| *c != 'e')
            .map(|c| Letter::from_char(c).ok_or_else(|| Error::InvalidArgument(format!("bad letter {c:?} in word"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.element(&letters))
    }

    /// Largest entry of the relator product minus `±I`.
    pub fn relation_residual(&self) -> f64 {
        let m = self.parse_word(RELATOR).expect("relator is well formed").map;
        // the word reduces freely to itself, so compose the matrices directly
        m.distance_up_to_sign(&MobiusMap::IDENTITY)
    }

    /// Whether `z` lies in the closed octagon (within `slack` in `|.|`).
    pub fn in_domain(&self, z: C64, slack: f64) -> bool {
        let r = z.norm();
        self.letter_maps.iter().all(|m| m.apply(z).norm() >= r - slack)
    }

    /// Smallest hyperbolic distance from `z` to a side bisector, signed positive inside.
    pub fn wall_distance(&self, z: C64) -> f64 {
        let d0 = distance(z, C64::new(0.0, 0.0));
        self.letter_maps
            .iter()
            .map(|m| 0.5 * (distance(m.apply(z), C64::new(0.0, 0.0)) - d0))
            .fold(f64::INFINITY, f64::min)
    }

    fn word_cap(&self, z: C64) -> usize {
        let d = distance(z, C64::new(0.0, 0.0));
        (10.0 * (1.0 + d / self.translation_length)).ceil() as usize
    }

    /// Greedy reduction returning the representative and the reducing map.
    ///
    /// Allocation free; used inside metric evaluation.
    pub fn reduce_map(&self, z: C64) -> Result<(C64, MobiusMap)> {
        self.greedy_reduce(z, self.word_cap(z))
    }

    /// Same as [`reduce_map`](Self::reduce_map) without the word-length cap.
    ///
    /// Terminates because `|z|` strictly decreases along a discrete orbit.
    pub fn reduce_map_uncapped(&self, z: C64) -> (C64, MobiusMap) {
        self.greedy_reduce(z, usize::MAX).expect("uncapped reduction cannot fail")
    }

    fn greedy_reduce(&self, z: C64, cap: usize) -> Result<(C64, MobiusMap)> {
        let mut w = z;
        let mut m = MobiusMap::IDENTITY;
        let mut steps = 0;
        let inscribed = (0.5 * self.inradius).tanh();
        loop {
            let r = w.norm();
            if r < inscribed {
                return Ok((w, m));
            }
            // the nearest neighbour of 0 is the one closest in angle
            let k = (w.arg() / std::f64::consts::FRAC_PI_4).round().rem_euclid(8.0) as usize;
            let i = self.facing[k];
            let cand = self.letter_maps[i].apply(w);
            let best = (cand.norm() < r - 1e-15 * (1.0 + r)).then_some((i, cand));
            match best {
                None => return Ok((w, m)),
                Some((i, cand)) => {
                    steps += 1;
                    if steps > cap {
                        return Err(Error::MaxWordLength(cap));
                    }
                    w = cand;
                    m = self.letter_maps[i].compose(&m);
                }
            }
        }
    }

    /// Moves `x` into the closed fundamental octagon: `rep = word·x`.
    pub fn reduce_to_domain(&self, x: DiscPoint) -> Result<(DiscPoint, GroupElement)> {
        let cap = self.word_cap(x.z());
        let letters = Letter::all();
        let mut w = x.z();
        let mut g = GroupElement::identity();
        loop {
            let r = w.norm();
            let mut best: Option<(Letter, C64, f64)> = None;
            for &l in &letters {
                let cand = self.letter_map(l).apply(w);
                let rc = cand.norm();
                if rc < r - 1e-15 * (1.0 + r) && best.map_or(true, |(_, _, rb)| rc < rb - 1e-15) {
                    best = Some((l, cand, rc));
                }
            }
            match best {
                None => return Ok((DiscPoint::from_complex(w)?, g)),
                Some((l, cand, _)) => {
                    if g.word.len() >= cap {
                        return Err(Error::MaxWordLength(cap));
                    }
                    w = cand;
                    g = GroupElement {
                        map: self.letter_map(l),
                        word: vec![l],
                    }
                    .compose(&g);
                }
            }
        }
    }

    /// All distinct freely reduced words up to the given length, in shortlex order.
    pub fn enumerate_words(&self, max_len: usize) -> Vec<GroupElement> {
        let mut out = vec![GroupElement::identity()];
        let mut frontier = vec![GroupElement::identity()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for g in &frontier {
                for l in Letter::all() {
                    if g.word.last() == Some(&l.inv()) {
                        continue;
                    }
                    let mut word = g.word.clone();
                    word.push(l);
                    next.push(GroupElement {
                        map: g.map.compose(&self.letter_map(l)),
                        word,
                    });
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    /// Orbit points `g·0` within hyperbolic distance `radius` of the origin, with their elements.
    pub fn orbit_of_origin(&self, radius: f64) -> Vec<(C64, GroupElement)> {
        let mut out: Vec<(C64, GroupElement)> = vec![(C64::new(0.0, 0.0), GroupElement::identity())];
        let mut frontier = out.clone();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for (_, g) in &frontier {
                for l in Letter::all() {
                    if g.word.last() == Some(&l.inv()) {
                        continue;
                    }
                    let h = g.compose(&GroupElement {
                        map: self.letter_map(l),
                        word: vec![l],
                    });
                    let p = h.apply(C64::new(0.0, 0.0));
                    if distance(p, C64::new(0.0, 0.0)) > radius {
                        continue;
                    }
                    if out.iter().chain(next.iter()).any(|(q, _): &(C64, GroupElement)| (q - p).norm() < 1e-9) {
                        continue;
                    }
                    next.push((p, h));
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    /// Interior angle of the octagon at vertex `k`.
    pub fn vertex_angle(&self, k: usize) -> f64 {
        let v = DiscPoint::unchecked(self.vertices[k % 8]);
        let prev = DiscPoint::unchecked(self.vertices[(k + 7) % 8]);
        let next = DiscPoint::unchecked(self.vertices[(k + 1) % 8]);
        let g1 = crate::disc::geodesic_between(v, prev).expect("distinct vertices");
        let g2 = crate::disc::geodesic_between(v, next).expect("distinct vertices");
        let a = g1.velocity(0.0);
        let b = g2.velocity(0.0);
        (b / a).arg().abs()
    }
}

#[derive(Debug, Clone)]
pub struct PositiveSequence {
    pub geodesic: HyperbolicGeodesic,
    pub times: Vec<f64>,
    pub elements: Vec<GroupElement>,
    pub images: Vec<DiscPoint>,
}

pub fn positive_sequence(group: &FuchsianGroup, g: &HyperbolicGeodesic, times: &[f64]) -> Result<PositiveSequence> {
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("times must be strictly increasing".into()));
    }
    let mut elements = Vec::with_capacity(times.len());
    let mut images = Vec::with_capacity(times.len());
    for &t in times {
        let p = DiscPoint::from_complex(g.point_c(t))?;
        let (rep, word) = group.reduce_to_domain(p)?;
        elements.push(word);
        images.push(rep);
    }
    Ok(PositiveSequence {
        geodesic: *g,
        times: times.to_vec(),
        elements,
        images,
    })
}

/// Sign of the generator ordering used around the octagon: generator `k`
/// translates towards the side centred at angle `k PI/4`.
pub fn side_angle(index: u8) -> f64 {
    index as f64 * FRAC_PI_4
}

/// Angle of the side opposite to `side_angle(index)`.
pub fn opposite_side_angle(index: u8) -> f64 {
    side_angle(index) + PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::{classify, BoundaryDirection, Classification};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng, max_dist: f64) -> DiscPoint {
        let d = rng.gen_range(0.0..max_dist);
        let a = rng.gen_range(0.0..2.0 * PI);
        DiscPoint::from_complex(C64::from_polar((0.5 * d).tanh(), a)).unwrap()
    }

    #[test]
    fn relation_holds() {
        let g = genus2_group();
        assert!(g.relation_residual() <= 1e-9, "residual {}", g.relation_residual());
    }

    #[test]
    fn commutator_product_is_not_a_relation_here() {
        let g = genus2_group();
        let m = g.parse_word("abABcdCD").unwrap().map;
        assert!(m.distance_up_to_sign(&MobiusMap::IDENTITY) > 1.0);
    }

    #[test]
    fn generators_are_hyperbolic_with_common_length() {
        let g = genus2_group();
        for (k, gen) in g.generators.iter().enumerate() {
            match classify(&gen.map) {
                Classification::Hyperbolic { axis, translation_length } => {
                    assert_abs_diff_eq!(translation_length, 2.0 * (1.0 + SQRT_2).acosh(), epsilon = 1e-9);
                    assert!(axis.plus_end().separation(BoundaryDirection::new(side_angle(k as u8))) < 1e-9);
                }
                other => panic!("generator {k} is {other:?}"),
            }
        }
        assert_abs_diff_eq!(g.translation_length, 3.0571, epsilon = 1e-4);
    }

    #[test]
    fn generators_pair_opposite_sides() {
        let g = genus2_group();
        let mid = |ang: f64| C64::from_polar((0.5 * g.inradius).tanh(), ang);
        for k in 0..4u8 {
            let m = g.generators[k as usize].map;
            let img = m.apply(mid(opposite_side_angle(k)));
            assert_abs_diff_eq!((img - mid(side_angle(k))).norm(), 0.0, epsilon = 1e-12);
            // vertices of the opposite side go to vertices of the side
            let v0 = g.vertices[((k as usize) + 3) % 8];
            let w = m.apply(v0);
            assert!(g.vertices.iter().any(|v| (v - w).norm() < 1e-12));
        }
    }

    #[test]
    fn octagon_angles_sum_to_two_pi() {
        let g = genus2_group();
        let sum: f64 = (0..8).map(|k| g.vertex_angle(k)).sum();
        assert_abs_diff_eq!(sum, 2.0 * PI, epsilon = 1e-6);
        assert_abs_diff_eq!(g.vertex_angle(3), FRAC_PI_4, epsilon = 1e-9);
    }

    #[test]
    fn reduce_examples() {
        let g = genus2_group();
        let (rep, w) = g.reduce_to_domain(DiscPoint::ORIGIN).unwrap();
        assert_eq!(rep, DiscPoint::ORIGIN);
        assert!(w.is_identity_word());

        let x = DiscPoint::from_complex(g.generators[0].apply(C64::new(0.1, 0.0))).unwrap();
        let (rep, w) = g.reduce_to_domain(x).unwrap();
        assert_abs_diff_eq!((rep.z() - C64::new(0.1, 0.0)).norm(), 0.0, epsilon = 1e-12);
        assert_eq!(w.word_string(), "A");
    }

    #[test]
    fn far_points_reduce_into_the_octagon() {
        let g = genus2_group();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = rng.gen_range(0.0..2.0 * PI);
            let x = DiscPoint::from_complex(C64::from_polar((6.0f64).tanh(), a)).unwrap();
            let (rep, w) = g.reduce_to_domain(x).unwrap();
            assert!(distance(rep.z(), C64::new(0.0, 0.0)) <= g.circumradius + 1e-9);
            assert!(g.in_domain(rep.z(), 1e-12));
            assert_abs_diff_eq!((w.apply(x.z()) - rep.z()).norm(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn reduction_is_idempotent() {
        let g = genus2_group();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x = random_point(&mut rng, 8.0);
            let (rep, _) = g.reduce_to_domain(x).unwrap();
            let (rep2, w2) = g.reduce_to_domain(rep).unwrap();
            assert!(w2.is_identity_word());
            assert_eq!(rep, rep2);
        }
    }

    #[test]
    fn tiling_consistency() {
        let g = genus2_group();
        let words = g.enumerate_words(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = random_point(&mut rng, 2.5);
            if g.wall_distance(g.reduce_map(x.z()).unwrap().0).abs() < 1e-6 {
                continue;
            }
            let inside = words
                .iter()
                .filter(|w| {
                    let y = w.apply(x.z());
                    g.in_domain(y, 0.0) && g.wall_distance(y) > 1e-6
                })
                .count();
            assert_eq!(inside, 1);
        }
    }

    #[test]
    fn generators_are_isometries() {
        let g = genus2_group();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x = random_point(&mut rng, 4.0);
            let y = random_point(&mut rng, 4.0);
            for gen in &g.generators {
                let d0 = distance(x.z(), y.z());
                let d1 = distance(gen.apply(x.z()), gen.apply(y.z()));
                assert!((d0 - d1).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn axis_positive_sequence() {
        let g = genus2_group();
        let axis = match classify(&g.generators[0].map) {
            Classification::Hyperbolic { axis, .. } => axis,
            _ => unreachable!(),
        };
        let times: Vec<f64> = (1..=4).map(|k| k as f64 * g.translation_length).collect();
        let seq = positive_sequence(&g, &axis, &times).unwrap();
        for (k, (e, img)) in seq.elements.iter().zip(&seq.images).enumerate() {
            assert_eq!(e.word_string(), "A".repeat(k + 1));
            assert!(img.z().norm() < 1e-9);
        }
        let single = positive_sequence(&g, &axis, &[0.0]).unwrap();
        assert!(single.elements[0].is_identity_word());
    }

    #[test]
    fn random_positive_sequence_stays_in_domain() {
        let g = genus2_group();
        let geo = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(2.1), BoundaryDirection::new(0.37)).unwrap();
        let times: Vec<f64> = (1..=20).map(|k| k as f64).collect();
        let seq = positive_sequence(&g, &geo, &times).unwrap();
        assert_eq!(seq.elements.len(), 20);
        assert!(seq.images.iter().all(|p| g.in_domain(p.z(), 1e-12)));
    }

    #[test]
    fn orbit_separation_exceeds_translation_length() {
        let g = genus2_group();
        let orbit = g.orbit_of_origin(4.0);
        assert_eq!(orbit.len(), 1 + 8);
        for (p, _) in &orbit[1..] {
            assert_abs_diff_eq!(distance(*p, C64::new(0.0, 0.0)), g.translation_length, epsilon = 1e-9);
        }
    }

    #[test]
    fn word_serialization_round_trips() {
        let g = genus2_group();
        let e = g.parse_word("aBcD").unwrap();
        assert_eq!(e.word_string(), "aBcD");
        assert!(e.compose(&e.inverse()).is_identity_word());
    }
}
