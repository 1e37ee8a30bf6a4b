//! Monte Carlo event stream.
//!
//! Each pulse emits no pair, one pair (probability `p`) or two pairs
//! (probability `p²`). Filters remove each source photon independently with
//! probability `loss_prob`, and every removal is heralded at the veto
//! detectors. The detection pattern is then drawn from the exact
//! distribution of the remaining state after the circuit (and the analyzers,
//! when settings are given).
//!
//! The generator is ChaCha8 seeded with `seed_from_u64(seed)`; draws are
//! consumed in a fixed order (one uniform for the pair count, one for the
//! pattern when pairs were emitted), so a stream depends only on its
//! configuration.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{classify_with, remove_photons, EventClass, Removal, Station, TriggerRule};
use crate::fock::{Beam, Occupation, StatePolynomial};
use crate::optics::innsbruck_circuit;
use crate::source::{single_pair_emission, two_pair_emission};
use crate::stats::{analyzer_transform, detection_distribution, CircularConvention, SettingTriple};

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub pulses: u64,
    pub pair_prob: f64,
    pub seed: u64,
    pub loss_prob: f64,
    pub trigger: TriggerRule,
    /// Analyzer settings; `None` records patterns in the H/V basis.
    pub settings: Option<SettingTriple>,
}

impl SamplerConfig {
    pub fn new(pulses: u64, pair_prob: f64, seed: u64) -> Self {
        Self {
            pulses,
            pair_prob,
            seed,
            loss_prob: 0.0,
            trigger: TriggerRule::Naive,
            settings: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.pair_prob;
        if !(0.0..1.0).contains(&p) || p + p * p > 1.0 {
            return Err(Error::Config(format!(
                "pair probability {p} outside [0, 1)"
            )));
        }
        if !(0.0..=1.0).contains(&self.loss_prob) {
            return Err(Error::Config(format!(
                "loss probability {} outside [0, 1]",
                self.loss_prob
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledEvent {
    pub pulse: u64,
    pub pairs: u8,
    pub pattern: Occupation,
    pub class: EventClass,
    pub veto: bool,
}

/// One outcome of a `pairs`-pair emission: a removal branch and a detection
/// pattern (veto clicks included).
#[derive(Clone, Debug, PartialEq)]
pub struct PatternEntry {
    pub removal: Removal,
    pub pattern: Occupation,
    /// Exact probability of the pattern given the removal branch.
    pub conditional: BigRational,
    /// Exact `‖a^k ψ‖² / (Π k!·‖ψ‖²)`; multiplied by the loss factors gives
    /// the branch probability.
    pub branch_factor: BigRational,
    pub probability: f64,
}

fn emission(pairs: u8) -> Result<StatePolynomial> {
    match pairs {
        1 => Ok(single_pair_emission()),
        2 => Ok(two_pair_emission()),
        n => Err(Error::Config(format!("{n}-pair emission is not modeled"))),
    }
}

fn factorial(n: u32) -> u64 {
    (2..=u64::from(n)).product()
}

/// Exact pattern distribution of a `pairs`-pair emission with filter loss.
pub fn emission_table(
    pairs: u8,
    loss_prob: f64,
    settings: Option<SettingTriple>,
) -> Result<Vec<PatternEntry>> {
    let state = emission(pairs)?;
    let norm = state
        .norm_squared()?
        .as_rational()
        .expect("emission norms are rational");
    let photons = 2 * u32::from(pairs);
    let max = u32::from(pairs);
    let circuit = innsbruck_circuit();
    let mut entries = Vec::new();
    for code in 0..(max + 1).pow(4) {
        let digit = |i: u32| (code / (max + 1).pow(i)) % (max + 1);
        let removal = Removal {
            a_h: digit(0),
            a_v: digit(1),
            b_h: digit(2),
            b_v: digit(3),
        };
        let k = removal.total();
        if k > photons {
            continue;
        }
        let loss_weight = (1.0 - loss_prob).powi((photons - k) as i32) * loss_prob.powi(k as i32);
        if loss_weight == 0.0 {
            continue;
        }
        let lowered = remove_photons(&state, &removal);
        if lowered.is_empty() {
            continue;
        }
        let k_fact: u64 = removal
            .per_mode()
            .iter()
            .map(|(_, n)| factorial(*n))
            .product();
        let branch_norm = lowered.norm_squared()?.as_rational().expect("rational");
        let branch_factor = branch_norm / (&norm * BigRational::from_integer(k_fact.into()));
        let mut detected = circuit.apply(&lowered);
        if let Some(s) = settings {
            for st in Station::ALL {
                detected = detected.substitute(&analyzer_transform(
                    st,
                    s.at(st),
                    CircularConvention::Standard,
                ));
            }
        }
        let veto = removal.veto_pattern();
        let branch_p = loss_weight * branch_factor.to_f64().unwrap_or(0.0);
        for (pattern, p) in detection_distribution(&detected)? {
            entries.push(PatternEntry {
                removal: removal.clone(),
                pattern: pattern.merged(&veto),
                probability: branch_p * p.to_f64().unwrap_or(0.0),
                conditional: p,
                branch_factor: branch_factor.clone(),
            });
        }
    }
    Ok(entries)
}

struct Cumulative {
    bounds: Vec<f64>,
    entries: Vec<PatternEntry>,
}

impl Cumulative {
    fn new(entries: Vec<PatternEntry>) -> Self {
        let mut acc = 0.0;
        let bounds = entries
            .iter()
            .map(|e| {
                acc += e.probability;
                acc
            })
            .collect();
        Self { bounds, entries }
    }

    fn draw(&self, u: f64) -> &PatternEntry {
        let total = *self.bounds.last().expect("non-empty table");
        let i = self.bounds.partition_point(|&b| b <= u * total);
        &self.entries[i.min(self.entries.len() - 1)]
    }
}

pub struct EventSampler {
    config: SamplerConfig,
    rng: ChaCha8Rng,
    tables: [Cumulative; 2],
    forced_pairs: Option<u8>,
    next_pulse: u64,
}

impl EventSampler {
    pub fn new(config: SamplerConfig) -> Result<Self> {
        config.validate()?;
        let tables = [
            Cumulative::new(emission_table(1, config.loss_prob, config.settings)?),
            Cumulative::new(emission_table(2, config.loss_prob, config.settings)?),
        ];
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            tables,
            forced_pairs: None,
            next_pulse: 0,
        })
    }

    /// Every pulse emits exactly `pairs` pairs; `pair_prob` is ignored.
    pub fn conditioned(config: SamplerConfig, pairs: u8) -> Result<Self> {
        emission(pairs)?;
        let mut s = Self::new(SamplerConfig {
            pair_prob: 0.0,
            ..config
        })?;
        s.forced_pairs = Some(pairs);
        Ok(s)
    }

    fn pairs_for_pulse(&mut self) -> u8 {
        if let Some(n) = self.forced_pairs {
            return n;
        }
        let p = self.config.pair_prob;
        let u: f64 = self.rng.gen();
        if u < p * p {
            2
        } else if u < p * p + p {
            1
        } else {
            0
        }
    }
}

impl Iterator for EventSampler {
    type Item = SampledEvent;

    fn next(&mut self) -> Option<SampledEvent> {
        while self.next_pulse < self.config.pulses {
            let pulse = self.next_pulse;
            self.next_pulse += 1;
            let pairs = self.pairs_for_pulse();
            if pairs == 0 {
                continue;
            }
            let u: f64 = self.rng.gen();
            let entry = self.tables[usize::from(pairs) - 1].draw(u);
            return Some(SampledEvent {
                pulse,
                pairs,
                pattern: entry.pattern.clone(),
                class: classify_with(&entry.pattern, self.config.trigger),
                veto: entry.pattern.beam_total(Beam::Veto) > 0,
            });
        }
        None
    }
}

pub fn sample_events(config: SamplerConfig) -> Result<EventSampler> {
    EventSampler::new(config)
}

/// Class counts of a stream, split by pair number.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub events: u64,
    pub one_pair: u64,
    pub two_pair: u64,
    pub vetoed: u64,
    pub by_class: BTreeMap<String, u64>,
}

impl ClassCounts {
    pub fn record(&mut self, e: &SampledEvent) {
        self.events += 1;
        match e.pairs {
            1 => self.one_pair += 1,
            _ => self.two_pair += 1,
        }
        if e.veto {
            self.vetoed += 1;
        }
        *self.by_class.entry(e.class.to_string()).or_insert(0) += 1;
    }

    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a SampledEvent>) -> Self {
        let mut c = Self::default();
        for e in events {
            c.record(e);
        }
        c
    }
}

/// Exact probability that a sampled entry satisfies `pred`, without loss.
pub fn exact_probability(
    pairs: u8,
    settings: Option<SettingTriple>,
    pred: impl Fn(&Occupation) -> bool,
) -> Result<BigRational> {
    Ok(emission_table(pairs, 0.0, settings)?
        .into_iter()
        .filter(|e| pred(&e.pattern))
        .fold(BigRational::zero(), |acc, e| acc + e.conditional))
}
