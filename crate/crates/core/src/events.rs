//! Trigger post-selection, event classification, the pairing property of
//! wrong events and heralded filter loss.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fock::{Beam, Mode, Occupation, StatePolynomial};
use crate::optics::innsbruck_circuit;
use crate::ring::QiSqrt2;
use crate::source::two_pair_emission;
use crate::stats::detection_distribution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Station {
    G,
    H,
    Z,
}

impl Station {
    pub const ALL: [Station; 3] = [Station::G, Station::H, Station::Z];

    pub fn beam(self) -> Beam {
        match self {
            Station::G => Beam::G,
            Station::H => Beam::H,
            Station::Z => Beam::Z,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Station::G => 'G',
            Station::H => 'H',
            Station::Z => 'Z',
        }
    }

    fn from_letter(s: &str) -> Option<Station> {
        Station::ALL
            .into_iter()
            .find(|st| s.len() == 1 && s.starts_with(st.letter()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FailureReason {
    NoTrigger,
    MultiPhotonTrigger,
    /// A photon rejected by a filter was detected.
    Vetoed,
    /// The trigger fired but the stations show no recognized pattern.
    AnomalousPattern,
}

impl FailureReason {
    fn label(self) -> &'static str {
        match self {
            FailureReason::NoTrigger => "no-trigger",
            FailureReason::MultiPhotonTrigger => "multi-photon-trigger",
            FailureReason::Vetoed => "vetoed",
            FailureReason::AnomalousPattern => "anomalous-pattern",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventClass {
    Right,
    WrongPair { double: Station, empty: Station },
    DoubleNonDetection { lone: Option<Station> },
    TriggerFailure(FailureReason),
}

impl EventClass {
    pub fn is_right(self) -> bool {
        self == EventClass::Right
    }

    /// Whether a single trigger photon was seen (regardless of stations).
    pub fn trigger_fired(self) -> bool {
        !matches!(
            self,
            EventClass::TriggerFailure(
                FailureReason::NoTrigger
                    | FailureReason::MultiPhotonTrigger
                    | FailureReason::Vetoed
            )
        )
    }
}

impl fmt::Display for EventClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventClass::Right => f.write_str("right"),
            EventClass::WrongPair { double, empty } => {
                write!(f, "wrong-pair:{},{}", double.letter(), empty.letter())
            }
            EventClass::DoubleNonDetection { lone: Some(s) } => {
                write!(f, "double-non-detection:{}", s.letter())
            }
            EventClass::DoubleNonDetection { lone: None } => f.write_str("double-non-detection:-"),
            EventClass::TriggerFailure(r) => write!(f, "trigger-failure:{}", r.label()),
        }
    }
}

impl FromStr for EventClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<EventClass> {
        let bad = || Error::Parse(s.to_string());
        if s == "right" {
            return Ok(EventClass::Right);
        }
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "wrong-pair" => {
                let (d, e) = arg.split_once(',').ok_or_else(bad)?;
                Ok(EventClass::WrongPair {
                    double: Station::from_letter(d).ok_or_else(bad)?,
                    empty: Station::from_letter(e).ok_or_else(bad)?,
                })
            }
            "double-non-detection" if arg == "-" => {
                Ok(EventClass::DoubleNonDetection { lone: None })
            }
            "double-non-detection" => Ok(EventClass::DoubleNonDetection {
                lone: Some(Station::from_letter(arg).ok_or_else(bad)?),
            }),
            "trigger-failure" => [
                FailureReason::NoTrigger,
                FailureReason::MultiPhotonTrigger,
                FailureReason::Vetoed,
                FailureReason::AnomalousPattern,
            ]
            .into_iter()
            .find(|r| r.label() == arg)
            .map(EventClass::TriggerFailure)
            .ok_or_else(bad),
            _ => Err(bad()),
        }
    }
}

impl Serialize for EventClass {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EventClass {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// How the trigger condition treats photons caught by the filter-loss detectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TriggerRule {
    /// A single photon at T is enough.
    #[default]
    Naive,
    /// A single photon at T and no click behind the filters.
    Redefined,
}

pub fn station_counts(pattern: &Occupation) -> [u32; 3] {
    Station::ALL.map(|s| pattern.beam_total(s.beam()))
}

/// Classifies a detection pattern under the naive trigger.
pub fn classify_pattern(pattern: &Occupation) -> EventClass {
    match pattern.get(Mode::TRIGGER) {
        0 => return EventClass::TriggerFailure(FailureReason::NoTrigger),
        1 => {}
        _ => return EventClass::TriggerFailure(FailureReason::MultiPhotonTrigger),
    }
    let counts = station_counts(pattern);
    if counts == [1, 1, 1] {
        return EventClass::Right;
    }
    let at = |n: u32| counts.iter().position(|&c| c == n).map(|i| Station::ALL[i]);
    let mut sorted = counts;
    sorted.sort_unstable();
    match (sorted, counts.iter().sum::<u32>()) {
        ([0, 1, 2], _) => EventClass::WrongPair {
            double: at(2).expect("sorted contains 2"),
            empty: at(0).expect("sorted contains 0"),
        },
        (_, 1) => EventClass::DoubleNonDetection { lone: at(1) },
        (_, 0) => EventClass::DoubleNonDetection { lone: None },
        _ => EventClass::TriggerFailure(FailureReason::AnomalousPattern),
    }
}

pub fn classify_with(pattern: &Occupation, rule: TriggerRule) -> EventClass {
    if rule == TriggerRule::Redefined && pattern.beam_total(Beam::Veto) > 0 {
        return EventClass::TriggerFailure(FailureReason::Vetoed);
    }
    classify_pattern(pattern)
}

/// Keeps the terms with exactly one `a_H` photon: two photons at the trigger
/// spoil the event and no `a_H` photon gives no trigger at all.
pub fn trigger_select(two_pair_state: &StatePolynomial) -> Result<StatePolynomial> {
    let has_source_modes = two_pair_state
        .modes()
        .iter()
        .any(|m| matches!(m.beam(), Beam::A | Beam::B));
    if !has_source_modes {
        return Err(Error::NoEmissionModes);
    }
    Ok(two_pair_state.filter_terms(|occ| occ.get(Mode::A_H) == 1))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingReport {
    pub right_terms: usize,
    pub wrong_terms: usize,
    /// `(double, empty)` station pairs with their term counts.
    pub census: BTreeMap<String, usize>,
}

/// Checks that every non-right term of a post-trigger state is a wrong pair.
pub fn pairing_report(state: &StatePolynomial) -> Result<PairingReport> {
    let mut report = PairingReport::default();
    for term in state.terms() {
        match classify_pattern(term.occupation) {
            EventClass::Right => report.right_terms += 1,
            EventClass::WrongPair { double, empty } => {
                report.wrong_terms += 1;
                *report
                    .census
                    .entry(format!("{},{}", double.letter(), empty.letter()))
                    .or_insert(0) += 1;
            }
            other => {
                return Err(Error::PairingViolation {
                    term: term.to_string(),
                    class: other.to_string(),
                })
            }
        }
    }
    Ok(report)
}

/// Number of photons taken out of each source mode by the filters.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Removal {
    pub a_h: u32,
    pub a_v: u32,
    pub b_h: u32,
    pub b_v: u32,
}

impl Removal {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn total(&self) -> u32 {
        self.a_h + self.a_v + self.b_h + self.b_v
    }

    pub fn per_mode(&self) -> [(Mode, u32); 4] {
        [
            (Mode::A_H, self.a_h),
            (Mode::A_V, self.a_v),
            (Mode::B_H, self.b_h),
            (Mode::B_V, self.b_v),
        ]
    }

    /// Clicks registered behind the filters.
    pub fn veto_pattern(&self) -> Occupation {
        Occupation::from_counts([
            (Mode::VETO_H, self.a_h + self.b_h),
            (Mode::VETO_V, self.a_v + self.b_v),
        ])
    }
}

/// Applies `Π a_m^k` (annihilation) to the state: a photon leaving mode `m`
/// multiplies the coefficient by its occupation before the removal.
pub fn remove_photons(state: &StatePolynomial, removal: &Removal) -> StatePolynomial {
    let mut out = StatePolynomial::zero();
    for term in state.terms() {
        let mut occ = term.occupation.clone();
        let mut factor: u64 = 1;
        let mut possible = true;
        for (mode, k) in removal.per_mode() {
            let n = occ.get(mode);
            if n < k {
                possible = false;
                break;
            }
            for j in 0..k {
                factor *= u64::from(n - j);
            }
            occ.remove(mode, k);
        }
        if possible {
            let coeff = term.coefficient * &QiSqrt2::from_int(factor as i64);
            out = out.add(&StatePolynomial::monomial(occ, coeff, term.order));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossDemo {
    pub removal: Removal,
    /// Class probabilities within this removal branch, naive trigger.
    pub naive: BTreeMap<EventClass, Prob>,
    /// Same events under the redefined trigger.
    pub redefined: BTreeMap<EventClass, Prob>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Prob(#[serde(with = "crate::wire::rational")] pub BigRational);

impl LossDemo {
    /// Probability that the naive trigger fires in this branch.
    pub fn naive_trigger_rate(&self) -> BigRational {
        self.naive
            .iter()
            .filter(|(c, _)| c.trigger_fired())
            .fold(BigRational::zero(), |acc, (_, p)| acc + &p.0)
    }

    pub fn redefined_trigger_rate(&self) -> BigRational {
        self.redefined
            .iter()
            .filter(|(c, _)| c.trigger_fired())
            .fold(BigRational::zero(), |acc, (_, p)| acc + &p.0)
    }
}

/// Removes photons from the two-pair emission before the circuit and compares
/// the naive and the redefined trigger on what reaches the detectors.
pub fn filter_loss_demo(removal: &Removal) -> Result<LossDemo> {
    let lowered = remove_photons(&two_pair_emission(), removal);
    if lowered.is_empty() {
        return Err(Error::Config(format!(
            "two-pair emission cannot lose {} photons in that pattern",
            removal.total()
        )));
    }
    let detected = innsbruck_circuit().apply(&lowered);
    let veto = removal.veto_pattern();
    let mut demo = LossDemo {
        removal: removal.clone(),
        naive: BTreeMap::new(),
        redefined: BTreeMap::new(),
    };
    for (pattern, p) in detection_distribution(&detected)? {
        let pattern = pattern.merged(&veto);
        for (rule, census) in [
            (TriggerRule::Naive, &mut demo.naive),
            (TriggerRule::Redefined, &mut demo.redefined),
        ] {
            let entry = census
                .entry(classify_with(&pattern, rule))
                .or_insert_with(|| Prob(BigRational::zero()));
            entry.0 += &p;
        }
    }
    Ok(demo)
}
