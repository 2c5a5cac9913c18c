//! The order-60 group of parameter maps induced by reordering the six kernel
//! product vectors, acting on `(alpha, beta, gamma, delta) = (a^2, b^2, c^2, d^2)`.
//!
//! Three generators are known in closed form: the cyclic shift of the five
//! UPB members, the reflection `k -> 7 - k` of members 2..5, and the exchange
//! bringing the sixth vector to the front. Group elements are words in these
//! generators, identified by their action on a fixed set of probe points.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::upb::UpbParams;

/// Order of the full group.
pub const GROUP_ORDER: usize = 60;

/// Relative tolerance for identifying two elements by their probe images.
pub const PROBE_TOL: f64 = 1e-9;

/// Relative tolerance for ties in the lexicographic orbit minimum.
pub const TIE_TOL: f64 = 1e-9;

const PROBE_COUNT: usize = 5;
const MAX_COMPOSITIONS: usize = 10_000;

/// A point `(alpha, beta, gamma, delta)` of the positive orthant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamPoint<T: Real> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub delta: T,
}

impl<T: Real> ParamPoint<T> {
    pub fn new(alpha: T, beta: T, gamma: T, delta: T) -> Result<Self> {
        let p = Self { alpha, beta, gamma, delta };
        if !p.is_positive() {
            return Err(Error::InvalidParameter(format!("point {:?} is not strictly positive", p.to_array())));
        }
        Ok(p)
    }

    pub fn from_array(a: [T; 4]) -> Self {
        Self { alpha: a[0], beta: a[1], gamma: a[2], delta: a[3] }
    }

    pub fn to_array(&self) -> [T; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }

    pub fn from_params(p: &UpbParams<T>) -> Self {
        Self::from_array(p.squares())
    }

    pub fn to_params(&self) -> Result<UpbParams<T>> {
        UpbParams::from_squares(self.to_array())
    }

    pub fn is_positive(&self) -> bool {
        self.to_array().iter().all(|&v| v > T::zero() && v.is_finite())
    }

    /// Largest componentwise relative difference.
    pub fn rel_diff(&self, other: &Self) -> T {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(&x, y)| (x - y).abs() / x.abs().max(y.abs()).max(T::min_positive_value()))
            .fold(T::zero(), T::max)
    }
}

/// Parameter map of the cyclic relabelling `psi_1 <- psi_5`, `psi_k <- psi_{k-1}`.
pub fn cyclic_shift<T: Real>(p: &ParamPoint<T>) -> ParamPoint<T> {
    let ParamPoint { alpha: a, beta: b, gamma: g, delta: d } = *p;
    let one = T::one();
    ParamPoint {
        alpha: b / (one + a),
        beta: b / (a * (one + a)),
        gamma: one / (g + d),
        delta: g * (one + g + d) / (d * (g + d)),
    }
}

/// Parameter map of the reflection fixing `psi_1` and sending `psi_k` to `psi_{7-k}`.
pub fn inversion<T: Real>(p: &ParamPoint<T>) -> ParamPoint<T> {
    let ParamPoint { alpha: a, beta: b, gamma: g, delta: d } = *p;
    let one = T::one();
    ParamPoint { alpha: a, beta: a * (one + a) / b, gamma: g, delta: g * (one + g) / d }
}

/// Parameter map of the relabelling `(psi_6, psi_5, psi_3, psi_4, psi_2)`, which
/// brings the sixth kernel vector into the set. An involution.
pub fn swap_sixth<T: Real>(p: &ParamPoint<T>) -> ParamPoint<T> {
    let ParamPoint { alpha: a, beta: b, gamma: g, delta: d } = *p;
    let one = T::one();
    let ab = a + b;
    let beta = b * (one + g) * (ab * (g + d) + d) / (a * (one + ab) * d + (one + a) * ab * (one + g));
    let delta = (one + a) * (b * d + ab * g * (one + g + d)) / ((one + a + (one + ab) * (g + d)) * d);
    ParamPoint { alpha: g, beta, gamma: a, delta }
}

/// Generator labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Generator {
    Cyclic,
    Inversion,
    SwapSixth,
}

impl Generator {
    pub const ALL: [Generator; 3] = [Generator::Cyclic, Generator::Inversion, Generator::SwapSixth];

    pub fn apply<T: Real>(self, p: &ParamPoint<T>) -> ParamPoint<T> {
        match self {
            Generator::Cyclic => cyclic_shift(p),
            Generator::Inversion => inversion(p),
            Generator::SwapSixth => swap_sixth(p),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Generator::Cyclic => "cyclic",
            Generator::Inversion => "inversion",
            Generator::SwapSixth => "swap6",
        }
    }
}

/// A group element as a word of generators, applied left to right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupElement {
    word: Vec<Generator>,
}

impl GroupElement {
    pub fn identity() -> Self {
        Self { word: Vec::new() }
    }

    pub fn word(&self) -> &[Generator] {
        &self.word
    }

    pub fn apply<T: Real>(&self, p: &ParamPoint<T>) -> ParamPoint<T> {
        self.word.iter().fold(*p, |q, g| g.apply(&q))
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &Self) -> Self {
        Self { word: self.word.iter().chain(&other.word).copied().collect() }
    }

    fn then_gen(&self, g: Generator) -> Self {
        let mut word = self.word.clone();
        word.push(g);
        Self { word }
    }

    /// Action agreement on the probe points within [`PROBE_TOL`].
    pub fn same_action(&self, other: &Self) -> bool {
        probes().iter().all(|p| self.apply(p).rel_diff(&other.apply(p)) < PROBE_TOL)
    }

    pub fn is_identity(&self) -> bool {
        self.same_action(&Self::identity())
    }

    /// Smallest `k >= 1` with `self^k = identity`, found by iteration.
    pub fn order(&self) -> usize {
        let mut power = self.clone();
        for k in 1..=GROUP_ORDER {
            if power.is_identity() {
                return k;
            }
            power = power.then(self);
        }
        usize::MAX
    }
}

fn probes() -> &'static [ParamPoint<f64>; PROBE_COUNT] {
    static PROBES: OnceLock<[ParamPoint<f64>; PROBE_COUNT]> = OnceLock::new();
    PROBES.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0060);
        std::array::from_fn(|_| {
            // log-uniform in [0.5, 2]: moderate magnitudes keep composed maps well conditioned
            let mut draw = || 2f64.powf(rng.random_range(-1.0..1.0));
            ParamPoint { alpha: draw(), beta: draw(), gamma: draw(), delta: draw() }
        })
    })
}

/// Closure of `generators` under composition, identity first.
pub fn generate_from(generators: &[Generator]) -> Result<Vec<GroupElement>> {
    let mut elements = vec![GroupElement::identity()];
    let mut images: Vec<Vec<ParamPoint<f64>>> = vec![probes().to_vec()];
    let mut compositions = 0;
    let mut next = 0;
    while next < elements.len() {
        for &g in generators {
            compositions += 1;
            if compositions > MAX_COMPOSITIONS {
                return Err(Error::Closure(MAX_COMPOSITIONS));
            }
            let cand = elements[next].then_gen(g);
            let img: Vec<ParamPoint<f64>> = images[next].iter().map(|p| g.apply(p)).collect();
            let known = images
                .iter()
                .any(|other| other.iter().zip(&img).all(|(x, y)| x.rel_diff(y) < PROBE_TOL));
            if !known {
                elements.push(cand);
                images.push(img);
            }
        }
        next += 1;
    }
    Ok(elements)
}

/// All elements generated by [`cyclic_shift`], [`inversion`] and [`swap_sixth`].
pub fn generate_group() -> Result<Vec<GroupElement>> {
    generate_from(&Generator::ALL)
}

/// The group, computed once.
pub fn group() -> &'static [GroupElement] {
    static GROUP: OnceLock<Vec<GroupElement>> = OnceLock::new();
    GROUP.get_or_init(|| generate_group().expect("generator formulas close to a finite group"))
}

/// Images of `p` under every group element, in group order.
pub fn orbit<T: Real>(p: &ParamPoint<T>) -> Vec<ParamPoint<T>> {
    group().iter().map(|g| g.apply(p)).collect()
}

fn lex_less<T: Real>(x: &ParamPoint<T>, y: &ParamPoint<T>) -> bool {
    let tol = T::lit(TIE_TOL);
    for (a, b) in x.to_array().iter().zip(y.to_array()) {
        if (*a - b).abs() <= tol * a.abs().max(b.abs()) {
            continue;
        }
        return *a < b;
    }
    false
}

/// Lexicographically smallest orbit image; ties within [`TIE_TOL`] fall through
/// to the next component.
pub fn canonical_representative<T: Real>(p: &ParamPoint<T>) -> ParamPoint<T> {
    orbit(p).into_iter().fold(*p, |best, q| if lex_less(&q, &best) { q } else { best })
}

/// [`canonical_representative`] expressed in `(a, b, c, d)`.
pub fn canonical_params<T: Real>(p: &UpbParams<T>) -> Result<UpbParams<T>> {
    canonical_representative(&ParamPoint::from_params(p)).to_params()
}

/// Random positive point, log-uniform in `[lo, hi]` per component.
pub fn random_point<T: Real, R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> ParamPoint<T> {
    let (l, h) = (lo.ln(), hi.ln());
    let mut draw = || T::lit(rng.random_range(l..h).exp());
    ParamPoint { alpha: draw(), beta: draw(), gamma: draw(), delta: draw() }
}
