//! Polynomials in commuting bosonic creation operators acting on the vacuum.
//!
//! A term `c·γ^k·Π (m†)^n` stands for the unnormalized Fock vector
//! `c·γ^k·Π (m†)^n |vac⟩`. The coupling `γ` is never given a numeric value:
//! it is carried as the integer `order` tag of each amplitude, and terms of
//! different order are kept apart.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::optics::ModeTransform;
use crate::ring::{QSqrt2, QiSqrt2};

/// Spatial beams of the setup. `ATrigger` is the transmitted arm of the first
/// polarizing beamsplitter (towards detector T), `AReflect` its reflected arm,
/// `A45` the reflected arm after the wave plate and `Veto` the detectors that
/// catch photons rejected by the filters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Beam {
    A,
    B,
    C,
    G,
    H,
    Z,
    ATrigger,
    AReflect,
    A45,
    Veto,
}

impl Beam {
    pub const ALL: [Beam; 10] = [
        Beam::A,
        Beam::B,
        Beam::C,
        Beam::G,
        Beam::H,
        Beam::Z,
        Beam::ATrigger,
        Beam::AReflect,
        Beam::A45,
        Beam::Veto,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Beam::A => "a",
            Beam::B => "b",
            Beam::C => "c",
            Beam::G => "g",
            Beam::H => "h",
            Beam::Z => "z",
            Beam::ATrigger => "aT",
            Beam::AReflect => "aR",
            Beam::A45 => "a45",
            Beam::Veto => "veto",
        }
    }

    pub fn from_label(s: &str) -> Option<Beam> {
        Beam::ALL.into_iter().find(|b| b.label() == s)
    }

    /// Observation stations G, H and Z.
    pub fn is_station(self) -> bool {
        matches!(self, Beam::G | Beam::H | Beam::Z)
    }

    fn admits(self, pol: Polarization) -> bool {
        use Polarization::*;
        match self {
            Beam::ATrigger => pol == H,
            Beam::AReflect => pol == V,
            Beam::G | Beam::H | Beam::Z => true,
            _ => matches!(pol, H | V),
        }
    }
}

/// Polarization label of a mode. `Plus`/`Minus` are the two output ports of an
/// analyzer and only exist at the observation stations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
    Plus,
    Minus,
}

impl Polarization {
    pub fn symbol(self) -> &'static str {
        match self {
            Polarization::H => "H",
            Polarization::V => "V",
            Polarization::Plus => "+",
            Polarization::Minus => "-",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Polarization> {
        match s {
            "H" => Some(Polarization::H),
            "V" => Some(Polarization::V),
            "+" => Some(Polarization::Plus),
            "-" => Some(Polarization::Minus),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode {
    beam: Beam,
    pol: Polarization,
}

macro_rules! modes {
    ($($name:ident = $beam:ident $pol:ident;)*) => {
        impl Mode {
            $(pub const $name: Mode = Mode { beam: Beam::$beam, pol: Polarization::$pol };)*
        }
    };
}

modes! {
    A_H = A H; A_V = A V;
    B_H = B H; B_V = B V;
    C_H = C H; C_V = C V;
    G_H = G H; G_V = G V;
    H_H = H H; H_V = H V;
    Z_H = Z H; Z_V = Z V;
    TRIGGER = ATrigger H;
    A_REFLECT = AReflect V;
    A45_H = A45 H; A45_V = A45 V;
    VETO_H = Veto H; VETO_V = Veto V;
}

impl Mode {
    pub fn new(beam: Beam, pol: Polarization) -> Result<Mode> {
        if beam.admits(pol) {
            Ok(Mode { beam, pol })
        } else {
            Err(Error::UnknownMode {
                beam: beam.label().into(),
                pol: pol.symbol().into(),
            })
        }
    }

    pub fn beam(self) -> Beam {
        self.beam
    }

    pub fn pol(self) -> Polarization {
        self.pol
    }

    /// Wire key, e.g. `g_H`.
    pub fn key(self) -> String {
        format!("{}_{}", self.beam.label(), self.pol.symbol())
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.beam.label(), self.pol.symbol())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        let (beam, pol) = s
            .rsplit_once('_')
            .ok_or_else(|| Error::ModeSyntax(s.into()))?;
        let beam = Beam::from_label(beam).ok_or_else(|| Error::ModeSyntax(s.into()))?;
        let pol = Polarization::from_symbol(pol).ok_or_else(|| Error::ModeSyntax(s.into()))?;
        Mode::new(beam, pol)
    }
}

/// Photon numbers per mode; zero entries are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occupation(BTreeMap<Mode, u32>);

impl Occupation {
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn single(mode: Mode) -> Self {
        Self::from_counts([(mode, 1)])
    }

    pub fn from_counts(counts: impl IntoIterator<Item = (Mode, u32)>) -> Self {
        let mut occ = Self::default();
        for (m, n) in counts {
            occ.add(m, n);
        }
        occ
    }

    pub fn add(&mut self, mode: Mode, n: u32) {
        if n > 0 {
            *self.0.entry(mode).or_insert(0) += n;
        }
    }

    /// Removes up to `n` photons from `mode`, returning how many were present.
    pub fn remove(&mut self, mode: Mode, n: u32) -> u32 {
        let have = self.get(mode);
        let left = have.saturating_sub(n);
        if left == 0 {
            self.0.remove(&mode);
        } else {
            self.0.insert(mode, left);
        }
        have
    }

    pub fn get(&self, mode: Mode) -> u32 {
        self.0.get(&mode).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn beam_total(&self, beam: Beam) -> u32 {
        self.0
            .iter()
            .filter(|(m, _)| m.beam == beam)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn is_vacuum(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Mode, u32)> + '_ {
        self.0.iter().map(|(m, n)| (*m, *n))
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        self.0.keys().copied()
    }

    pub fn merged(&self, other: &Occupation) -> Occupation {
        let mut out = self.clone();
        for (m, n) in other.iter() {
            out.add(m, n);
        }
        out
    }

    /// `Π n!`, the squared norm of `Π (m†)^n |vac⟩`.
    pub fn factorial_weight(&self) -> BigInt {
        let mut w = BigInt::one();
        for &n in self.0.values() {
            for k in 2..=n {
                w *= k;
            }
        }
        w
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("vac");
        }
        let parts: Vec<String> = self
            .iter()
            .map(|(m, n)| {
                if n == 1 {
                    format!("{m}†")
                } else {
                    format!("{m}†^{n}")
                }
            })
            .collect();
        f.write_str(&parts.join("·"))
    }
}

impl Serialize for Occupation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (m, n) in self.iter() {
            map.serialize_entry(&m.key(), &n)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Occupation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = BTreeMap::<String, u32>::deserialize(deserializer)?;
        let mut occ = Occupation::default();
        for (k, n) in raw {
            let mode: Mode = k.parse().map_err(serde::de::Error::custom)?;
            occ.add(mode, n);
        }
        Ok(occ)
    }
}

/// Exact coefficient together with its power of the coupling `γ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactAmplitude {
    pub value: QiSqrt2,
    pub order: u32,
}

impl ExactAmplitude {
    pub fn new(value: QiSqrt2, order: u32) -> Self {
        Self { value, order }
    }

    pub fn zero() -> Self {
        Self::new(QiSqrt2::zero(), 0)
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn mul(&self, other: &ExactAmplitude) -> ExactAmplitude {
        ExactAmplitude::new(&self.value * &other.value, self.order + other.order)
    }
}

/// One term of a [`StatePolynomial`], borrowed.
#[derive(Clone, Copy, Debug)]
pub struct FockMonomial<'a> {
    pub occupation: &'a Occupation,
    pub order: u32,
    pub coefficient: &'a QiSqrt2,
}

impl FockMonomial<'_> {
    pub fn amplitude(&self) -> ExactAmplitude {
        ExactAmplitude::new(self.coefficient.clone(), self.order)
    }
}

impl fmt::Display for FockMonomial<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.coefficient)?;
        match self.order {
            0 => {}
            1 => f.write_str("·γ")?,
            k => write!(f, "·γ^{k}")?,
        }
        if !self.occupation.is_vacuum() {
            write!(f, "·{}", self.occupation)?;
        }
        Ok(())
    }
}

/// Canonical sum of monomials keyed by (occupation pattern, order).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StatePolynomial {
    terms: BTreeMap<(Occupation, u32), QiSqrt2>,
}

impl StatePolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The unit `1·|vac⟩`.
    pub fn vacuum() -> Self {
        Self::monomial(Occupation::vacuum(), QiSqrt2::one(), 0)
    }

    pub fn monomial(occupation: Occupation, coefficient: QiSqrt2, order: u32) -> Self {
        let mut p = Self::zero();
        p.accumulate(occupation, order, coefficient);
        p
    }

    /// `m†` with unit coefficient and order 0.
    pub fn creation(mode: Mode) -> Self {
        Self::monomial(Occupation::single(mode), QiSqrt2::one(), 0)
    }

    /// Linear combination `Σ c·m†` at order 0.
    pub fn linear(combination: &[(Mode, QiSqrt2)]) -> Self {
        let mut p = Self::zero();
        for (m, c) in combination {
            p.accumulate(Occupation::single(*m), 0, c.clone());
        }
        p
    }

    fn accumulate(&mut self, occupation: Occupation, order: u32, coefficient: QiSqrt2) {
        if coefficient.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry((occupation, order)) {
            Entry::Vacant(e) => {
                e.insert(coefficient);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get() + &coefficient;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = FockMonomial<'_>> {
        self.terms
            .iter()
            .map(|((occupation, order), coefficient)| FockMonomial {
                occupation,
                order: *order,
                coefficient,
            })
    }

    pub fn orders(&self) -> BTreeSet<u32> {
        self.terms.keys().map(|(_, k)| *k).collect()
    }

    /// All modes that occur in some term.
    pub fn modes(&self) -> BTreeSet<Mode> {
        self.terms.keys().flat_map(|(occ, _)| occ.modes()).collect()
    }

    pub fn add(&self, other: &StatePolynomial) -> StatePolynomial {
        let mut out = self.clone();
        for ((occ, k), c) in &other.terms {
            out.accumulate(occ.clone(), *k, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &StatePolynomial) -> StatePolynomial {
        self.add(&other.scale(&QiSqrt2::from_int(-1)))
    }

    pub fn scale(&self, factor: &QiSqrt2) -> StatePolynomial {
        let mut out = Self::zero();
        for ((occ, k), c) in &self.terms {
            out.accumulate(occ.clone(), *k, c * factor);
        }
        out
    }

    /// Raises the γ order of every term by `by`.
    pub fn raise_order(&self, by: u32) -> StatePolynomial {
        let mut out = Self::zero();
        for ((occ, k), c) in &self.terms {
            out.accumulate(occ.clone(), k + by, c.clone());
        }
        out
    }

    /// Distributive product; creation operators commute.
    pub fn multiply(&self, other: &StatePolynomial) -> StatePolynomial {
        let mut out = Self::zero();
        for ((o1, k1), c1) in &self.terms {
            for ((o2, k2), c2) in &other.terms {
                out.accumulate(o1.merged(o2), k1 + k2, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> StatePolynomial {
        let mut acc = Self::vacuum();
        for _ in 0..n {
            acc = acc.multiply(self);
        }
        acc
    }

    /// Replaces every creation operator that has a rule in `transform` by its
    /// linear combination of output operators; other modes pass through.
    pub fn substitute(&self, transform: &ModeTransform) -> StatePolynomial {
        let mut out = Self::zero();
        for ((occ, k), c) in &self.terms {
            let mut product = Self::monomial(Occupation::vacuum(), c.clone(), *k);
            for (mode, n) in occ.iter() {
                let factor = match transform.rule(mode) {
                    Some(targets) => Self::linear(targets),
                    None => Self::creation(mode),
                };
                product = product.multiply(&factor.pow(n));
            }
            out = out.add(&product);
        }
        out
    }

    pub fn filter_terms(&self, mut keep: impl FnMut(&Occupation) -> bool) -> StatePolynomial {
        StatePolynomial {
            terms: self
                .terms
                .iter()
                .filter(|((occ, _), _)| keep(occ))
                .map(|(key, c)| (key.clone(), c.clone()))
                .collect(),
        }
    }

    /// Coefficient of `pattern`, or zero when absent. When several orders
    /// share the pattern, the lowest order is returned; see
    /// [`StatePolynomial::amplitude_at`].
    pub fn amplitude(&self, pattern: &Occupation) -> ExactAmplitude {
        self.terms
            .range((pattern.clone(), 0)..=(pattern.clone(), u32::MAX))
            .next()
            .map(|((_, k), c)| ExactAmplitude::new(c.clone(), *k))
            .unwrap_or_else(ExactAmplitude::zero)
    }

    pub fn amplitude_at(&self, pattern: &Occupation, order: u32) -> QiSqrt2 {
        self.terms
            .get(&(pattern.clone(), order))
            .cloned()
            .unwrap_or_else(QiSqrt2::zero)
    }

    /// Fock-space `⟨ψ|ψ⟩` with `γ = 1`: `Σ |c|²·Π n!`.
    pub fn norm_squared(&self) -> Result<QSqrt2> {
        let orders = self.orders();
        if orders.len() > 1 {
            return Err(Error::MixedOrder(orders.into_iter().collect()));
        }
        let mut acc = QSqrt2::zero();
        for ((occ, _), c) in &self.terms {
            let weight = QSqrt2::from_rational(occ.factorial_weight().into());
            acc = &acc + &(&c.norm_sqr() * &weight);
        }
        Ok(acc)
    }

    /// Returns `phase` with `|phase| = 1` and `other = phase·self`, if any.
    pub fn global_phase_to(&self, other: &StatePolynomial) -> Option<QiSqrt2> {
        if self.terms.len() != other.terms.len() {
            return None;
        }
        let Some((key, c)) = self.terms.iter().next() else {
            return Some(QiSqrt2::one());
        };
        let phase = other.terms.get(key)? * &c.inv()?;
        let unit = phase.norm_sqr();
        if unit != QSqrt2::from_rational(num_rational::BigRational::one()) {
            return None;
        }
        (self.scale(&phase) == *other).then_some(phase)
    }

    pub fn equals_up_to_phase(&self, other: &StatePolynomial) -> bool {
        self.global_phase_to(other).is_some()
    }
}

impl fmt::Display for StatePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self.terms().map(|t| t.to_string()).collect();
        f.write_str(&parts.join(" + "))
    }
}
