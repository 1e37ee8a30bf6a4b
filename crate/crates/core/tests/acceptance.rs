//! End-to-end acceptance checks. Each test writes one `criterion N: PASS|FAIL`
//! line straight to stdout so the verdicts show up without `--nocapture`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::time::{Duration, Instant};

use innsbruck_core::events::{
    classify_pattern, classify_with, filter_loss_demo, pairing_report, Removal,
};
use innsbruck_core::fock::{Beam, Mode, Occupation, StatePolynomial};
use innsbruck_core::lhv::{
    critical_visibility, feasibility_at, ghz_paradox_check, lemma_check, Feasibility,
    FeasibilityProblem, LocalStrategy,
};
use innsbruck_core::optics::CircuitLayout;
use innsbruck_core::ring::{rational, QiSqrt2};
use innsbruck_core::sampler::{exact_probability, ClassCounts, EventSampler, SamplerConfig};
use innsbruck_core::source::{post_trigger_state, two_pair_emission};
use innsbruck_core::stats::{outcome_tables, quantum_tables, OUTCOMES};
use innsbruck_core::{
    trigger_select, AnalyzerSetting, CircularConvention, Error, EventClass, SettingTriple, Station,
    TriggerRule,
};
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

fn report(criterion: u32, started: Instant, budget: Duration, checks: &[(&str, bool)]) {
    let elapsed = started.elapsed();
    let failed: Vec<&str> = checks
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(n, _)| *n)
        .collect();
    let verdict = if failed.is_empty() { "PASS" } else { "FAIL" };
    let mut line = format!(
        "criterion {criterion}: {verdict} ({} checks, {:.2?}",
        checks.len(),
        elapsed
    );
    if elapsed > budget {
        line.push_str(&format!(", over the {budget:?} budget"));
    }
    line.push(')');
    if !failed.is_empty() {
        line.push_str(&format!(" failed: {}", failed.join(", ")));
    }
    // Bypasses the test harness's output capture.
    let _ = writeln!(std::io::stdout().lock(), "{line}");
    assert!(failed.is_empty(), "{line}");
}

fn op(mode: Mode) -> StatePolynomial {
    StatePolynomial::creation(mode)
}

fn sum(a: Mode, b: Mode) -> StatePolynomial {
    op(a).add(&op(b))
}

fn ratio(n: i64, d: i64) -> BigRational {
    rational(n, d)
}

/// `(1/√2)γ²·aT_H†(z_V† + h_H†)(h_V† + g_V†)(g_H† + z_H†)`
fn expected_state() -> StatePolynomial {
    op(Mode::TRIGGER)
        .multiply(&sum(Mode::Z_V, Mode::H_H))
        .multiply(&sum(Mode::H_V, Mode::G_V))
        .multiply(&sum(Mode::G_H, Mode::Z_H))
        .scale(&QiSqrt2::inv_sqrt2())
        .raise_order(2)
}

fn occ(modes: &[Mode]) -> Occupation {
    let mut o = Occupation::vacuum();
    for m in modes {
        o.add(*m, 1);
    }
    o
}

#[test]
fn criterion_1_exact_state_derivation() {
    let started = Instant::now();
    let derived = post_trigger_state().unwrap();
    let expected = expected_state();
    let phase = derived.global_phase_to(&expected);

    let is_right = |o: &Occupation| classify_pattern(o) == EventClass::Right;
    let right = derived.filter_terms(is_right);
    let wrong = derived.filter_terms(|o| !is_right(o));

    // Term multisets written out by hand from the factorized form.
    let right_patterns: BTreeSet<Occupation> = [
        occ(&[Mode::TRIGGER, Mode::Z_V, Mode::H_V, Mode::G_H]),
        occ(&[Mode::TRIGGER, Mode::H_H, Mode::G_V, Mode::Z_H]),
    ]
    .into();
    let wrong_patterns: BTreeSet<Occupation> = [
        occ(&[Mode::TRIGGER, Mode::Z_V, Mode::H_V, Mode::Z_H]),
        occ(&[Mode::TRIGGER, Mode::Z_V, Mode::G_V, Mode::G_H]),
        occ(&[Mode::TRIGGER, Mode::Z_V, Mode::G_V, Mode::Z_H]),
        occ(&[Mode::TRIGGER, Mode::H_H, Mode::H_V, Mode::G_H]),
        occ(&[Mode::TRIGGER, Mode::H_H, Mode::H_V, Mode::Z_H]),
        occ(&[Mode::TRIGGER, Mode::H_H, Mode::G_V, Mode::G_H]),
    ]
    .into();
    let patterns = |s: &StatePolynomial| {
        s.terms()
            .map(|t| t.occupation.clone())
            .collect::<BTreeSet<_>>()
    };
    let to_expected = |s: &StatePolynomial| match &phase {
        Some(p) => s.scale(p),
        None => StatePolynomial::zero(),
    };
    let expected_coefficient = QiSqrt2::inv_sqrt2();
    let expected_right = expected.filter_terms(is_right);
    let expected_wrong = expected.filter_terms(|o| !is_right(o));

    report(
        1,
        started,
        Duration::from_secs(1),
        &[
            ("equal up to one global phase", phase.is_some()),
            ("eight terms", derived.len() == 8),
            ("order γ²", derived.orders() == BTreeSet::from([2])),
            (
                "two right terms",
                right.len() == 2 && patterns(&right) == right_patterns,
            ),
            (
                "six wrong terms",
                wrong.len() == 6 && patterns(&wrong) == wrong_patterns,
            ),
            (
                "right part under the shared phase",
                to_expected(&right) == expected_right,
            ),
            (
                "wrong part under the shared phase",
                to_expected(&wrong) == expected_wrong,
            ),
            (
                "all coefficients 1/√2",
                expected
                    .terms()
                    .all(|t| *t.coefficient == expected_coefficient),
            ),
        ],
    );
}

/// Every relabeling of the stations, with the second PBS either wired as a
/// beamsplitter (`c` leaves where `a45` does not) or miswired.
fn layouts() -> Vec<(CircuitLayout, bool)> {
    let stations = [Beam::G, Beam::H, Beam::Z];
    let mut out = Vec::new();
    for &bs_out in &stations {
        let rest: Vec<Beam> = stations.iter().copied().filter(|&b| b != bs_out).collect();
        for (t, r) in [(rest[0], rest[1]), (rest[1], rest[0])] {
            for wired in [true, false] {
                let (c_transmit, c_reflect) = if wired { (r, t) } else { (t, r) };
                out.push((
                    CircuitLayout {
                        bs_out,
                        a45_transmit: t,
                        a45_reflect: r,
                        c_transmit,
                        c_reflect,
                    },
                    wired,
                ));
            }
        }
    }
    out
}

#[test]
fn criterion_2_pairing_property() {
    let started = Instant::now();
    let state = post_trigger_state().unwrap();
    let base = pairing_report(&state);

    let selected = trigger_select(&two_pair_emission()).unwrap();
    let variants = layouts();
    let mut variant_results = Vec::new();
    let mut miswired_rejected = true;
    for (layout, wired) in &variants {
        match (layout.build(), wired) {
            (Ok(circuit), true) => {
                let out = circuit.apply(&selected);
                let ok = pairing_report(&out).map(|r| r.right_terms == 2 && r.wrong_terms == 6);
                variant_results.push(ok == Ok(true));
            }
            (Err(Error::NotIsometric(_)), false) => {}
            (_, true) => variant_results.push(false),
            (_, false) => miswired_rejected = false,
        }
    }

    // Three photons at G and none at H or Z is not a wrong pair.
    let fabricated = state.add(&StatePolynomial::monomial(
        Occupation::from_counts([(Mode::TRIGGER, 1), (Mode::G_H, 2), (Mode::G_V, 1)]),
        QiSqrt2::one(),
        2,
    ));
    let rejected = matches!(
        pairing_report(&fabricated),
        Err(Error::PairingViolation { .. })
    );

    let independent_pairing = state.terms().all(|t| {
        let counts: Vec<u32> = [Beam::G, Beam::H, Beam::Z]
            .iter()
            .map(|b| t.occupation.beam_total(*b))
            .collect();
        counts == [1, 1, 1]
            || (counts.iter().filter(|&&n| n == 2).count() == 1
                && counts.iter().filter(|&&n| n == 0).count() == 1)
    });

    report(
        2,
        started,
        Duration::from_secs(1),
        &[
            (
                "full expansion pairs",
                base.as_ref()
                    .map(|r| r.wrong_terms == 6 && r.right_terms == 2)
                    == Ok(true),
            ),
            ("direct station count", independent_pairing),
            (
                "six relabeled layouts pair",
                variant_results.len() == 6 && variant_results.iter().all(|&ok| ok),
            ),
            ("miswired layouts rejected", miswired_rejected),
            ("fabricated term rejected", rejected),
        ],
    );
}

/// Amplitude `√2·⟨r|pol⟩` of an analyzer outcome, as a Gaussian integer.
fn analyzer_amplitude(setting: AnalyzerSetting, r: i8, v: bool) -> Complex<i64> {
    match (setting, v) {
        (_, false) => Complex::new(1, 0),
        (AnalyzerSetting::Linear45, true) => Complex::new(i64::from(r), 0),
        (AnalyzerSetting::Circular, true) => Complex::new(0, -i64::from(r)),
    }
}

/// Conditional right-event distribution from the three-qubit vector
/// `|H V V⟩ + |V H H⟩` over `(g, h, z)`, in units of 1/16.
fn oracle_distribution(settings: SettingTriple) -> [i64; 8] {
    let branches: [[bool; 3]; 2] = [[false, true, true], [true, false, false]];
    let stations = [Station::G, Station::H, Station::Z];
    let mut out = [0; 8];
    for (k, r) in OUTCOMES.iter().enumerate() {
        let amp: Complex<i64> = branches
            .iter()
            .map(|pols| {
                (0..3).fold(Complex::new(1, 0), |acc, s| {
                    acc * analyzer_amplitude(settings.at(stations[s]), r[s], pols[s])
                })
            })
            .sum();
        out[k] = amp.norm_sqr();
    }
    out
}

#[test]
fn criterion_3_quantum_correlations() {
    let started = Instant::now();
    let state = post_trigger_state().unwrap();
    let tables = outcome_tables(&state, CircularConvention::Standard).unwrap();
    let sixteenth = |n: i64| ratio(n, 16);

    let mut matches = true;
    for t in &tables {
        let oracle = oracle_distribution(t.settings);
        let pipeline = t.conditional().unwrap();
        matches &= oracle.iter().sum::<i64>() == 16;
        matches &= pipeline.iter().zip(oracle).all(|(p, o)| *p == sixteenth(o));
    }

    let e = |s: &str| -> BigRational {
        let settings: SettingTriple = s.parse().unwrap();
        tables[settings.index()].correlation().unwrap()
    };
    // Correlations straight from the oracle's distributions.
    let oracle_e = |s: &str| -> BigRational {
        let dist = oracle_distribution(s.parse().unwrap());
        let n: i64 = OUTCOMES
            .iter()
            .zip(dist)
            .map(|(r, p)| i64::from(r[0] * r[1] * r[2]) * p)
            .sum();
        ratio(n, 16)
    };
    let one = BigRational::one();
    let product = e("xxx") * e("xyy") * e("yxy") * e("yyx");

    let mut checks = vec![
        (
            "pipeline equals state-vector oracle on all 8 triples".to_string(),
            matches && tables.len() == 8,
        ),
        (
            "correlations equal the oracle's".to_string(),
            ["xxx", "xyy", "yxy", "yyx", "yyy"]
                .iter()
                .all(|s| e(s) == oracle_e(s)),
        ),
    ];
    for (name, want) in [
        ("xxx", one.clone()),
        ("xyy", -one.clone()),
        ("yxy", -one.clone()),
        ("yyx", -one.clone()),
        ("yyy", BigRational::zero()),
    ] {
        let got = e(name);
        checks.push((format!("E({name}) = {want} (observed {got})"), got == want));
    }
    checks.push((
        format!("product = -1 (observed {product})"),
        product == -one,
    ));
    let borrowed: Vec<(&str, bool)> = checks.iter().map(|(n, b)| (n.as_str(), *b)).collect();
    report(3, started, Duration::from_secs(1), &borrowed);
}

#[test]
fn criterion_4_sigma_lemma() {
    let started = Instant::now();
    let lemma = lemma_check();

    // Raw enumeration of the 3^6 value assignments, independent of the
    // library's strategy type.
    let values = [-1i8, 0, 1];
    let mut total = 0;
    let mut survivors = 0;
    let mut characterization = true;
    let mut dependent_refuted = true;
    let mut library_agrees = true;
    for code in 0..729usize {
        let digit = |i: u32| values[(code / 3usize.pow(i)) % 3];
        let table = [
            [digit(0), digit(1)],
            [digit(2), digit(3)],
            [digit(4), digit(5)],
        ];
        total += 1;
        let sigmas: Vec<i8> = (0..8)
            .map(|k| (0..3).map(|s| table[s][(k >> (2 - s)) & 1].abs()).sum())
            .collect();
        let survives = sigmas.iter().all(|&s| s == 1 || s == 3);
        let independent = table.iter().all(|t| t[0].abs() == t[1].abs());
        if survives {
            survivors += 1;
        }
        if !independent && !sigmas.iter().any(|&s| s == 0 || s == 2) {
            dependent_refuted = false;
        }
        let expected = independent && sigmas.iter().all(|&s| s == 1 || s == 3);
        characterization &= survives == expected;
        let strategy = LocalStrategy::new(table[0], table[1], table[2]).unwrap();
        library_agrees &= strategy.is_admissible() == survives;
    }

    report(
        4,
        started,
        Duration::from_secs(1),
        &[
            ("729 strategies", total == 729 && lemma.total == 729),
            (
                "survivors are exactly setting-independent Σ ∈ {1,3}",
                characterization,
            ),
            ("setting-dependent moduli hit Σ ∈ {0,2}", dependent_refuted),
            ("library admissibility agrees", library_agrees),
            ("library counts agree", lemma.admitted == survivors),
            (
                "library report",
                lemma.characterization_holds && lemma.setting_dependent_all_refuted,
            ),
            (
                "admitted Σ values",
                lemma
                    .sigma_values_admitted
                    .iter()
                    .all(|s| *s == 1 || *s == 3),
            ),
            ("χ setting-invariant", lemma.chi_setting_invariant),
        ],
    );
}

#[test]
fn criterion_5_paradox_without_inequalities() {
    let started = Instant::now();
    let mut checks: Vec<(String, bool)> = Vec::new();
    for convention in [CircularConvention::Standard, CircularConvention::Conjugate] {
        let r = ghz_paradox_check(convention).unwrap();
        let tag = format!("{convention:?}");

        // Brute force over ±1 assignments with the report's constraint signs.
        let count = |skip: Option<usize>| {
            let mut n = 0;
            for bits in 0..64u32 {
                let v = |i: u32| if bits >> i & 1 == 1 { -1i8 } else { 1 };
                let local = [[v(0), v(1)], [v(2), v(3)], [v(4), v(5)]];
                let ok = r
                    .constraints
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| Some(*i) != skip)
                    .all(|(_, c)| {
                        let s = c.settings;
                        local[0][s.g.index()] * local[1][s.h.index()] * local[2][s.z.index()]
                            == c.sign
                    });
                n += usize::from(ok);
            }
            n
        };

        checks.push((format!("{tag}: four constraints"), r.constraints.len() == 4));
        checks.push((
            format!("{tag}: none satisfy all"),
            r.satisfying_all == 0 && count(None) == 0,
        ));
        checks.push((
            format!("{tag}: some satisfy any three"),
            (0..4).all(|i| count(Some(i)) > 0 && r.satisfying_without[i] == count(Some(i))),
        ));
        checks.push((
            format!("{tag}: contradiction"),
            r.contradiction && r.sign_product == -1,
        ));
    }
    let borrowed: Vec<(&str, bool)> = checks.iter().map(|(n, b)| (n.as_str(), *b)).collect();
    report(5, started, Duration::from_secs(1), &borrowed);
}

#[test]
fn criterion_6_critical_visibility() {
    let started = Instant::now();
    let infeasible_grid = [
        ratio(51, 100),
        ratio(3, 5),
        ratio(13, 20),
        ratio(3, 4),
        ratio(9, 10),
        BigRational::one(),
    ];
    let feasible_grid = [
        ratio(1, 2),
        ratio(49, 100),
        ratio(2, 5),
        ratio(1, 4),
        BigRational::zero(),
    ];

    let mut above = true;
    let mut certificates = true;
    for v in &infeasible_grid {
        let targets = quantum_tables(v).unwrap();
        match feasibility_at(v).unwrap() {
            Feasibility::Infeasible(c) => certificates &= c.verify(&targets),
            Feasibility::Feasible(_) => above = false,
        }
    }
    let mut below = true;
    for v in &feasible_grid {
        let targets = quantum_tables(v).unwrap();
        match feasibility_at(v).unwrap() {
            Feasibility::Feasible(model) => {
                below &= targets.iter().all(|t| model.table(t.settings) == *t);
            }
            Feasibility::Infeasible(_) => below = false,
        }
    }
    let observed = matches!(
        feasibility_at(&ratio(13, 20)).unwrap(),
        Feasibility::Infeasible(_)
    );
    let critical = critical_visibility(20).unwrap();

    // A certificate must not transfer to a feasible point.
    let transfer = match feasibility_at(&ratio(13, 20)).unwrap() {
        Feasibility::Infeasible(c) => !c.verify(&quantum_tables(&ratio(1, 2)).unwrap()),
        Feasibility::Feasible(_) => false,
    };
    let slack_problem =
        FeasibilityProblem::with_slack(quantum_tables(&ratio(13, 20)).unwrap(), ratio(1, 100));
    let slack_certified = match innsbruck_core::lhv::lhv_feasibility(&slack_problem).unwrap() {
        Feasibility::Infeasible(c) => c.verify(&slack_problem.targets),
        Feasibility::Feasible(_) => true,
    };

    report(
        6,
        started,
        Duration::from_secs(10),
        &[
            ("infeasible above 1/2", above),
            ("every certificate re-verifies", certificates),
            ("feasible at 1/2 and below, models reproduce targets", below),
            ("13/20 infeasible", observed),
            (
                "V* = 1/2 exactly",
                critical.exact && critical.threshold == ratio(1, 2),
            ),
            ("certificate rejected at a feasible point", transfer),
            ("slack answers are certified", slack_certified),
        ],
    );
}

#[test]
fn criterion_7_monte_carlo() {
    let started = Instant::now();

    // One-pair events from the full stream.
    let config = SamplerConfig::new(1_000_000, 1e-4, 20_231_031);
    let counts = ClassCounts::from_events(&EventSampler::new(config).unwrap().collect::<Vec<_>>());
    let one_pair_ok = (counts.one_pair as f64 - 100.0).abs() <= 3.0 * 100f64.sqrt();

    // Two-pair class frequencies against the exact distribution.
    let n = 40_000u64;
    let conditioned = EventSampler::conditioned(SamplerConfig::new(n, 1e-4, 7), 2).unwrap();
    let two_pair = ClassCounts::from_events(&conditioned.collect::<Vec<_>>());
    let table = innsbruck_core::sampler::emission_table(2, 0.0, None).unwrap();
    let classes: BTreeSet<EventClass> =
        table.iter().map(|e| classify_pattern(&e.pattern)).collect();
    let mut within = true;
    let mut worst = 0f64;
    for class in &classes {
        let p = exact_probability(2, None, |o| classify_pattern(o) == *class).unwrap();
        let p: f64 = num_traits::ToPrimitive::to_f64(&p).unwrap();
        let observed = *two_pair.by_class.get(&class.to_string()).unwrap_or(&0) as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        let z = (observed - n as f64 * p).abs() / sigma.max(f64::MIN_POSITIVE);
        worst = worst.max(z);
        within &= z <= 3.0;
    }

    // Triggered two-pair events split into right and wrong-pair as the
    // post-trigger state predicts: 1/4 right, 3/4 wrong.
    let triggered_right =
        exact_probability(2, None, |o| classify_pattern(o) == EventClass::Right).unwrap();
    let triggered_wrong = exact_probability(2, None, |o| {
        matches!(classify_pattern(o), EventClass::WrongPair { .. })
    })
    .unwrap();
    let split_ok = triggered_wrong == &triggered_right * BigRational::from_integer(3.into());

    // Filter loss: naive triggers with heralded removals are contamination.
    let lossy = |rule| {
        let mut c = SamplerConfig::new(20_000, 1e-4, 99);
        c.loss_prob = 0.2;
        c.trigger = rule;
        EventSampler::conditioned(c, 2).unwrap().collect::<Vec<_>>()
    };
    let naive = lossy(TriggerRule::Naive);
    let redefined = lossy(TriggerRule::Redefined);
    let contaminated: Vec<usize> = (0..naive.len())
        .filter(|&i| naive[i].veto && naive[i].class.trigger_fired())
        .collect();
    let same_stream = naive.len() == redefined.len()
        && naive
            .iter()
            .zip(&redefined)
            .all(|(a, b)| a.pattern == b.pattern && a.pulse == b.pulse);
    let removed = contaminated
        .iter()
        .all(|&i| !redefined[i].class.trigger_fired());
    let untouched = (0..naive.len()).filter(|&i| !naive[i].veto).all(|i| {
        naive[i].class == redefined[i].class
            && classify_with(&naive[i].pattern, TriggerRule::Redefined) == redefined[i].class
    });

    let demo = filter_loss_demo(&Removal {
        a_h: 1,
        ..Removal::none()
    })
    .unwrap();
    let demo_ok =
        demo.naive_trigger_rate().is_positive() && demo.redefined_trigger_rate().is_zero();

    let mut by_removed: BTreeMap<bool, usize> = BTreeMap::new();
    for &i in &contaminated {
        *by_removed
            .entry(!redefined[i].class.trigger_fired())
            .or_insert(0) += 1;
    }
    let _ = writeln!(
        std::io::stdout().lock(),
        "  one-pair events: {}, worst two-pair class deviation: {worst:.2}σ, contaminated events removed: {}/{}",
        counts.one_pair,
        by_removed.get(&true).copied().unwrap_or(0),
        contaminated.len()
    );

    report(
        7,
        started,
        Duration::from_secs(30),
        &[
            ("one-pair count within 3σ of 100", one_pair_ok),
            (
                "two-pair class frequencies within 3σ",
                within && two_pair.two_pair == n,
            ),
            ("exact right/wrong split 1:3", split_ok),
            ("contamination present", !contaminated.is_empty()),
            (
                "redefined trigger removes all contamination",
                removed && same_stream,
            ),
            ("unvetoed events unchanged", untouched),
            (
                "single a_H removal: naive fires, redefined does not",
                demo_ok,
            ),
        ],
    );
}

#[test]
fn criterion_8_wrong_mass_setting_independence() {
    let started = Instant::now();
    let state = post_trigger_state().unwrap();
    let mut checks = Vec::new();
    for convention in [CircularConvention::Standard, CircularConvention::Conjugate] {
        let tables = outcome_tables(&state, convention).unwrap();
        let first = tables[0].wrong_mass.clone();
        checks.push(tables.iter().all(|t| t.wrong_mass == first) && first == ratio(3, 4));
        checks.push(tables.iter().all(|t| t.right_mass() == ratio(1, 4)));
    }
    report(
        8,
        started,
        Duration::from_secs(1),
        &[
            ("wrong mass 3/4 on every triple", checks[0] && checks[2]),
            ("right mass 1/4 on every triple", checks[1] && checks[3]),
        ],
    );
}
