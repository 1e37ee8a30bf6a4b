//! Passive linear-optical elements as substitution rules on creation
//! operators, and their composition into the four-element setup.
//!
//! All coefficients of the setup are real and positive, so no reflection
//! phases are introduced and creation operators take the same coefficients
//! as the annihilation-operator relations they come from.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fock::{Beam, Mode, Polarization, StatePolynomial};
use crate::ring::QiSqrt2;

/// Maps each source mode to a linear combination of target modes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeTransform {
    rules: BTreeMap<Mode, Vec<(Mode, QiSqrt2)>>,
}

impl ModeTransform {
    /// Builds a transform, rejecting duplicate sources and any rule set whose
    /// coefficient columns are not orthonormal.
    pub fn from_rules(
        rules: impl IntoIterator<Item = (Mode, Vec<(Mode, QiSqrt2)>)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (source, targets) in rules {
            let mut merged: BTreeMap<Mode, QiSqrt2> = BTreeMap::new();
            for (m, c) in targets {
                let entry = merged.entry(m).or_insert_with(QiSqrt2::zero);
                *entry = &*entry + &c;
            }
            let targets: Vec<_> = merged.into_iter().filter(|(_, c)| !c.is_zero()).collect();
            if map.insert(source, targets).is_some() {
                return Err(Error::Config(format!(
                    "duplicate source mode {}",
                    source.key()
                )));
            }
        }
        let t = ModeTransform { rules: map };
        t.check_isometry()?;
        Ok(t)
    }

    pub fn identity() -> Self {
        ModeTransform {
            rules: BTreeMap::new(),
        }
    }

    pub fn rule(&self, mode: Mode) -> Option<&[(Mode, QiSqrt2)]> {
        self.rules.get(&mode).map(Vec::as_slice)
    }

    pub fn sources(&self) -> impl Iterator<Item = Mode> + '_ {
        self.rules.keys().copied()
    }

    pub fn rules(&self) -> impl Iterator<Item = (Mode, &[(Mode, QiSqrt2)])> {
        self.rules.iter().map(|(m, t)| (*m, t.as_slice()))
    }

    /// Exact Gram check: `Σ_t conj(u_s,t)·u_s',t = δ_ss'`.
    pub fn check_isometry(&self) -> Result<()> {
        let sources: Vec<_> = self.rules.iter().collect();
        for (i, (s1, t1)) in sources.iter().enumerate() {
            for (s2, t2) in &sources[i..] {
                let mut dot = QiSqrt2::zero();
                for (m1, c1) in t1.iter() {
                    for (m2, c2) in t2.iter() {
                        if m1 == m2 {
                            dot = &dot + &(&c1.conj() * c2);
                        }
                    }
                }
                let expected = if s1 == s2 {
                    QiSqrt2::one()
                } else {
                    QiSqrt2::zero()
                };
                if dot != expected {
                    return Err(Error::NotIsometric(format!(
                        "<{}|{}> = {dot}",
                        s1.key(),
                        s2.key()
                    )));
                }
            }
        }
        Ok(())
    }

    /// The transform equivalent to applying `self` and then `next`.
    pub fn then(&self, next: &ModeTransform) -> Result<ModeTransform> {
        let mut rules = Vec::new();
        for (source, targets) in &self.rules {
            let image = StatePolynomial::linear(targets).substitute(next);
            let combo = image
                .terms()
                .map(|t| {
                    let mode = t
                        .occupation
                        .modes()
                        .next()
                        .expect("passive optics keeps one photon");
                    (mode, t.coefficient.clone())
                })
                .collect();
            rules.push((*source, combo));
        }
        // Modes produced by `self` are intermediate and already routed above.
        let produced: BTreeSet<Mode> = self
            .rules
            .values()
            .flat_map(|t| t.iter().map(|(m, _)| *m))
            .collect();
        for (source, targets) in &next.rules {
            if !self.rules.contains_key(source) && !produced.contains(source) {
                rules.push((*source, targets.clone()));
            }
        }
        ModeTransform::from_rules(rules)
    }

    /// One rule per line: `source -> (coeff)*target + (coeff)*target`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (source, targets) in &self.rules {
            let rhs: Vec<String> = targets
                .iter()
                .map(|(m, c)| format!("({c})*{}", m.key()))
                .collect();
            let rhs = if rhs.is_empty() {
                "0".to_string()
            } else {
                rhs.join(" + ")
            };
            let _ = writeln!(out, "{} -> {rhs}", source.key());
        }
        out
    }
}

fn mode_in(beam: Beam, pol: Polarization) -> Result<Mode> {
    Mode::new(beam, pol).map_err(|e| Error::Config(e.to_string()))
}

/// Polarization-independent 50/50 beamsplitter: `in_X → (out1_X + out2_X)/√2`.
pub fn beamsplitter_5050(input: Beam, out1: Beam, out2: Beam) -> Result<ModeTransform> {
    if input == out1 || input == out2 || out1 == out2 {
        return Err(Error::Config(
            "beamsplitter needs three distinct beams".into(),
        ));
    }
    let h = QiSqrt2::inv_sqrt2();
    let mut rules = Vec::new();
    for pol in [Polarization::H, Polarization::V] {
        rules.push((
            mode_in(input, pol)?,
            vec![
                (mode_in(out1, pol)?, h.clone()),
                (mode_in(out2, pol)?, h.clone()),
            ],
        ));
    }
    ModeTransform::from_rules(rules)
}

/// One input of a polarizing beamsplitter and where its two polarizations go.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PbsPort {
    pub input: Beam,
    pub transmit: Beam,
    pub reflect: Beam,
}

impl PbsPort {
    pub fn new(input: Beam, transmit: Beam, reflect: Beam) -> Self {
        Self {
            input,
            transmit,
            reflect,
        }
    }
}

/// Transmits H and reflects V for every listed input beam.
pub fn polarizing_beamsplitter(ports: &[PbsPort]) -> Result<ModeTransform> {
    let outputs: Vec<Beam> = ports.iter().flat_map(|p| [p.transmit, p.reflect]).collect();
    let mut rules = Vec::new();
    for (i, port) in ports.iter().enumerate() {
        if outputs.contains(&port.input) {
            return Err(Error::Config(format!(
                "input beam {} is also an output",
                port.input.label()
            )));
        }
        if ports[..i].iter().any(|p| p.input == port.input) {
            return Err(Error::Config(format!(
                "input beam {} listed twice",
                port.input.label()
            )));
        }
        for (pol, out) in [
            (Polarization::H, port.transmit),
            (Polarization::V, port.reflect),
        ] {
            // Inputs that cannot carry this polarization contribute no rule.
            let Ok(src) = Mode::new(port.input, pol) else {
                continue;
            };
            let dst = Mode::new(out, pol).map_err(|_| {
                Error::Config(format!(
                    "{} has no output: beam {} cannot carry {}",
                    src.key(),
                    out.label(),
                    pol.symbol()
                ))
            })?;
            rules.push((src, vec![(dst, QiSqrt2::one())]));
        }
    }
    ModeTransform::from_rules(rules)
}

/// Half-wave plate at 22.5° on a V-only arm: `V → |45°⟩ = (H + V)/√2` in beam `a45`.
pub fn half_wave_plate_22_5(input: Beam) -> Result<ModeTransform> {
    if Mode::new(input, Polarization::H).is_ok() {
        return Err(Error::Modeling(format!(
            "wave plate arm {} must carry V polarization only",
            input.label()
        )));
    }
    let src = mode_in(input, Polarization::V)?;
    let h = QiSqrt2::inv_sqrt2();
    ModeTransform::from_rules([(src, vec![(Mode::A45_H, h.clone()), (Mode::A45_V, h)])])
}

/// Ordered list of elements, applied left to right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpticalCircuit {
    elements: Vec<ModeTransform>,
}

impl OpticalCircuit {
    pub fn new(elements: Vec<ModeTransform>) -> Self {
        Self { elements }
    }

    pub fn elements(&self) -> &[ModeTransform] {
        &self.elements
    }

    pub fn compose(&self) -> Result<ModeTransform> {
        self.elements
            .iter()
            .try_fold(ModeTransform::identity(), |acc, t| acc.then(t))
    }

    /// Applies the elements one after another.
    pub fn apply(&self, state: &StatePolynomial) -> StatePolynomial {
        self.elements
            .iter()
            .fold(state.clone(), |s, t| s.substitute(t))
    }
}

/// Station beams receiving the photons of the setup; permuting them yields the
/// relabeled variants used when fuzzing the pairing property.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CircuitLayout {
    /// Second output of the 50/50 beamsplitter (the first is `c`).
    pub bs_out: Beam,
    /// Where the `a45` beam's H and V leave the second PBS.
    pub a45_transmit: Beam,
    pub a45_reflect: Beam,
    /// Where the `c` beam's H and V leave the second PBS.
    pub c_transmit: Beam,
    pub c_reflect: Beam,
}

impl CircuitLayout {
    pub const INNSBRUCK: CircuitLayout = CircuitLayout {
        bs_out: Beam::G,
        a45_transmit: Beam::H,
        a45_reflect: Beam::Z,
        c_transmit: Beam::Z,
        c_reflect: Beam::H,
    };

    pub fn build(&self) -> Result<OpticalCircuit> {
        Ok(OpticalCircuit::new(vec![
            polarizing_beamsplitter(&[PbsPort::new(Beam::A, Beam::ATrigger, Beam::AReflect)])?,
            beamsplitter_5050(Beam::B, Beam::C, self.bs_out)?,
            half_wave_plate_22_5(Beam::AReflect)?,
            polarizing_beamsplitter(&[
                PbsPort::new(Beam::A45, self.a45_transmit, self.a45_reflect),
                PbsPort::new(Beam::C, self.c_transmit, self.c_reflect),
            ])?,
        ]))
    }
}

/// First PBS on beam a, 50/50 splitter on beam b, wave plate on the reflected
/// arm and the second PBS joining `a45` and `c` into stations H and Z.
pub fn innsbruck_circuit() -> OpticalCircuit {
    CircuitLayout::INNSBRUCK
        .build()
        .expect("fixed layout is valid")
}
