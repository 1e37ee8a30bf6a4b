//! Analyzer measurements at the three stations, exact outcome tables,
//! triple correlations and white-noise mixing.
//!
//! Outcome `+1` of the linear analyzer is the `+45°` port, `(H + V)/√2`;
//! outcome `+1` of the circular analyzer is `(H + iV)/√2` under
//! [`CircularConvention::Standard`] and `(H − iV)/√2` under
//! [`CircularConvention::Conjugate`]. The amplitude of an outcome is
//! `⟨port|ψ⟩`, so a station creation operator is rewritten as
//! `m† → Σ_port ⟨port|m⟩·port†`.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::events::{classify_pattern, EventClass, Station};
use crate::fock::{Mode, Occupation, Polarization, StatePolynomial};
use crate::optics::ModeTransform;
use crate::ring::QiSqrt2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AnalyzerSetting {
    /// ±45° linear polarization, written `x`.
    Linear45,
    /// Right/left circular polarization, written `y`.
    Circular,
}

impl AnalyzerSetting {
    pub const BOTH: [AnalyzerSetting; 2] = [AnalyzerSetting::Linear45, AnalyzerSetting::Circular];

    pub fn letter(self) -> char {
        match self {
            AnalyzerSetting::Linear45 => 'x',
            AnalyzerSetting::Circular => 'y',
        }
    }

    pub fn index(self) -> usize {
        match self {
            AnalyzerSetting::Linear45 => 0,
            AnalyzerSetting::Circular => 1,
        }
    }

    fn from_letter(c: char) -> Option<Self> {
        Self::BOTH.into_iter().find(|s| s.letter() == c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CircularConvention {
    #[default]
    Standard,
    Conjugate,
}

/// Analyzer choices at stations G, H and Z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SettingTriple {
    pub g: AnalyzerSetting,
    pub h: AnalyzerSetting,
    pub z: AnalyzerSetting,
}

impl SettingTriple {
    pub fn new(g: AnalyzerSetting, h: AnalyzerSetting, z: AnalyzerSetting) -> Self {
        Self { g, h, z }
    }

    /// All eight triples, `xxx` first, `z` varying fastest.
    pub fn all() -> [SettingTriple; 8] {
        let b = AnalyzerSetting::BOTH;
        std::array::from_fn(|i| SettingTriple::new(b[(i >> 2) & 1], b[(i >> 1) & 1], b[i & 1]))
    }

    pub fn index(self) -> usize {
        self.g.index() * 4 + self.h.index() * 2 + self.z.index()
    }

    pub fn at(self, station: Station) -> AnalyzerSetting {
        match station {
            Station::G => self.g,
            Station::H => self.h,
            Station::Z => self.z,
        }
    }
}

impl fmt::Display for SettingTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}{}",
            self.g.letter(),
            self.h.letter(),
            self.z.letter()
        )
    }
}

impl FromStr for SettingTriple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters: Vec<AnalyzerSetting> =
            s.chars().filter_map(AnalyzerSetting::from_letter).collect();
        match letters[..] {
            [g, h, z] if s.chars().count() == 3 => Ok(SettingTriple::new(g, h, z)),
            _ => Err(Error::Parse(s.to_string())),
        }
    }
}

impl Serialize for SettingTriple {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SettingTriple {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// The eight outcome triples `(r_g, r_h, r_z)`, `(+,+,+)` first.
pub const OUTCOMES: [[i8; 3]; 8] = [
    [1, 1, 1],
    [1, 1, -1],
    [1, -1, 1],
    [1, -1, -1],
    [-1, 1, 1],
    [-1, 1, -1],
    [-1, -1, 1],
    [-1, -1, -1],
];

pub fn outcome_index(r: [i8; 3]) -> usize {
    r.iter().fold(0, |acc, &x| acc * 2 + usize::from(x < 0))
}

pub fn analyzer_transform(
    station: Station,
    setting: AnalyzerSetting,
    convention: CircularConvention,
) -> ModeTransform {
    let beam = station.beam();
    let port = |p| Mode::new(beam, p).expect("stations carry analyzer ports");
    let (plus, minus) = (port(Polarization::Plus), port(Polarization::Minus));
    let h = QiSqrt2::inv_sqrt2();
    let neg_h = -&h;
    // ⟨plus|V⟩, ⟨minus|V⟩
    let (v_plus, v_minus) = match (setting, convention) {
        (AnalyzerSetting::Linear45, _) => (h.clone(), neg_h),
        (AnalyzerSetting::Circular, CircularConvention::Standard) => {
            (&neg_h * &QiSqrt2::i(), &h * &QiSqrt2::i())
        }
        (AnalyzerSetting::Circular, CircularConvention::Conjugate) => {
            (&h * &QiSqrt2::i(), &neg_h * &QiSqrt2::i())
        }
    };
    ModeTransform::from_rules([
        (port(Polarization::H), vec![(plus, h.clone()), (minus, h)]),
        (
            port(Polarization::V),
            vec![(plus, v_plus), (minus, v_minus)],
        ),
    ])
    .expect("analyzer bases are orthonormal")
}

/// Exact probability of every detection pattern of a single-order state.
pub fn detection_distribution(state: &StatePolynomial) -> Result<Vec<(Occupation, BigRational)>> {
    let norm = state.norm_squared()?;
    if norm.is_zero() {
        return Err(Error::EmptyState);
    }
    state
        .terms()
        .map(|t| {
            let weight = crate::ring::QSqrt2::from_rational(t.occupation.factorial_weight().into());
            let p = (&t.coefficient.norm_sqr() * &weight)
                .checked_div(&norm)
                .expect("norm is nonzero");
            let p = p
                .as_rational()
                .ok_or_else(|| Error::NonRational(p.to_string()))?;
            Ok((t.occupation.clone(), p))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomeTable {
    pub settings: SettingTriple,
    /// Joint probability of a right event with each outcome triple, in
    /// [`OUTCOMES`] order.
    pub cells: [BigRational; 8],
    /// Total probability of every other event class.
    pub wrong_mass: BigRational,
}

impl OutcomeTable {
    pub fn cell(&self, r: [i8; 3]) -> &BigRational {
        &self.cells[outcome_index(r)]
    }

    pub fn right_mass(&self) -> BigRational {
        self.cells.iter().fold(BigRational::zero(), |a, c| a + c)
    }

    pub fn total(&self) -> BigRational {
        self.right_mass() + &self.wrong_mass
    }

    /// Correlation conditioned on right events.
    pub fn correlation(&self) -> Result<BigRational> {
        let right = self.right_mass();
        if right.is_zero() {
            return Err(Error::UndefinedCorrelation);
        }
        let signed = OUTCOMES
            .iter()
            .zip(&self.cells)
            .fold(BigRational::zero(), |acc, (r, p)| {
                if r.iter().map(|&x| i32::from(x)).product::<i32>() > 0 {
                    acc + p
                } else {
                    acc - p
                }
            });
        Ok(signed / right)
    }

    /// Conditional right-event distribution.
    pub fn conditional(&self) -> Result<[BigRational; 8]> {
        let right = self.right_mass();
        if right.is_zero() {
            return Err(Error::UndefinedCorrelation);
        }
        Ok(std::array::from_fn(|i| &self.cells[i] / &right))
    }

    /// Mixes white noise into the right-event sector.
    pub fn add_noise(&self, visibility: &BigRational) -> Result<OutcomeTable> {
        check_visibility(visibility)?;
        let uniform = self.right_mass() / BigRational::from_integer(8.into());
        let rest = BigRational::one() - visibility;
        Ok(OutcomeTable {
            settings: self.settings,
            cells: std::array::from_fn(|i| visibility * &self.cells[i] + &rest * &uniform),
            wrong_mass: self.wrong_mass.clone(),
        })
    }
}

pub fn check_visibility(v: &BigRational) -> Result<()> {
    if v.is_negative() || *v > BigRational::one() {
        return Err(Error::VisibilityRange(crate::wire::format_rational(v)));
    }
    Ok(())
}

pub fn add_noise(table: &OutcomeTable, visibility: &BigRational) -> Result<OutcomeTable> {
    table.add_noise(visibility)
}

pub fn outcome_distribution(
    state: &StatePolynomial,
    settings: SettingTriple,
) -> Result<OutcomeTable> {
    outcome_distribution_with(state, settings, CircularConvention::Standard)
}

/// Rotates the stations into the chosen analyzer bases and sorts every
/// detection pattern into a right-event cell or the wrong mass.
pub fn outcome_distribution_with(
    state: &StatePolynomial,
    settings: SettingTriple,
    convention: CircularConvention,
) -> Result<OutcomeTable> {
    let rotated = Station::ALL.iter().fold(state.clone(), |s, &st| {
        s.substitute(&analyzer_transform(st, settings.at(st), convention))
    });
    let mut cells: [BigRational; 8] = std::array::from_fn(|_| BigRational::zero());
    let mut wrong_mass = BigRational::zero();
    for (pattern, p) in detection_distribution(&rotated)? {
        if classify_pattern(&pattern) == EventClass::Right {
            let r = Station::ALL.map(|st| {
                let plus = Mode::new(st.beam(), Polarization::Plus).expect("station port");
                if pattern.get(plus) == 1 {
                    1
                } else {
                    -1
                }
            });
            cells[outcome_index(r)] += p;
        } else {
            wrong_mass += p;
        }
    }
    Ok(OutcomeTable {
        settings,
        cells,
        wrong_mass,
    })
}

pub fn correlation(state: &StatePolynomial, settings: SettingTriple) -> Result<BigRational> {
    outcome_distribution(state, settings)?.correlation()
}

/// Tables for all eight setting triples, in [`SettingTriple::all`] order.
pub fn outcome_tables(
    state: &StatePolynomial,
    convention: CircularConvention,
) -> Result<Vec<OutcomeTable>> {
    SettingTriple::all()
        .into_iter()
        .map(|s| outcome_distribution_with(state, s, convention))
        .collect()
}

/// Quantum tables of the post-trigger state at the given visibility.
pub fn quantum_tables(visibility: &BigRational) -> Result<Vec<OutcomeTable>> {
    check_visibility(visibility)?;
    let state = crate::source::post_trigger_state()?;
    outcome_tables(&state, CircularConvention::Standard)?
        .iter()
        .map(|t| t.add_noise(visibility))
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CellWire {
    outcome: [i8; 3],
    #[serde(with = "crate::wire::rational")]
    probability: BigRational,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TableWire {
    settings: SettingTriple,
    cells: Vec<CellWire>,
    #[serde(with = "crate::wire::rational")]
    wrong_mass: BigRational,
}

impl Serialize for OutcomeTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TableWire {
            settings: self.settings,
            cells: OUTCOMES
                .iter()
                .zip(&self.cells)
                .map(|(r, p)| CellWire {
                    outcome: *r,
                    probability: p.clone(),
                })
                .collect(),
            wrong_mass: self.wrong_mass.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for OutcomeTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = TableWire::deserialize(d)?;
        let mut cells: [Option<BigRational>; 8] = Default::default();
        for c in wire.cells {
            if c.outcome.iter().any(|x| x.abs() != 1) {
                return Err(D::Error::custom("outcomes are ±1"));
            }
            cells[outcome_index(c.outcome)] = Some(c.probability);
        }
        if cells.iter().any(Option::is_none) {
            return Err(D::Error::custom("table needs all eight cells"));
        }
        Ok(OutcomeTable {
            settings: wire.settings,
            cells: cells.map(|c| c.expect("checked")),
            wrong_mass: wire.wrong_mass,
        })
    }
}
