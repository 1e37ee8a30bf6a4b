//! Serialized artifacts parse back into the types that produced them.

use innsbruck_core::events::{filter_loss_demo, LossDemo, Removal};
use innsbruck_core::lhv::{
    feasibility_at, ghz_paradox_check, lemma_check, Feasibility, LemmaReport, ParadoxReport,
};
use innsbruck_core::ring::rational;
use innsbruck_core::sampler::{EventSampler, SampledEvent, SamplerConfig};
use innsbruck_core::stats::{quantum_tables, OutcomeTable};
use innsbruck_core::{CircularConvention, EventClass, Occupation, SettingTriple};
use serde::de::DeserializeOwned;
use serde::Serialize;

fn round_trip<T: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug>(value: &T) {
    let text = serde_json::to_string(value).unwrap();
    let back: T = serde_json::from_str(&text).unwrap();
    assert_eq!(&back, value, "{text}");
}

#[test]
fn outcome_tables() {
    for t in quantum_tables(&rational(13, 20)).unwrap() {
        round_trip::<OutcomeTable>(&t);
    }
}

#[test]
fn feasibility_answers() {
    round_trip::<Feasibility>(&feasibility_at(&rational(13, 20)).unwrap());
    round_trip::<Feasibility>(&feasibility_at(&rational(1, 2)).unwrap());
}

#[test]
fn reports() {
    round_trip::<LemmaReport>(&lemma_check());
    round_trip::<ParadoxReport>(&ghz_paradox_check(CircularConvention::Conjugate).unwrap());
    round_trip::<LossDemo>(
        &filter_loss_demo(&Removal {
            b_v: 1,
            ..Removal::none()
        })
        .unwrap(),
    );
}

#[test]
fn sampled_events() {
    let mut config = SamplerConfig::new(2_000, 1e-4, 3);
    config.loss_prob = 0.25;
    config.settings = Some("yxy".parse::<SettingTriple>().unwrap());
    for e in EventSampler::conditioned(config, 2).unwrap() {
        round_trip::<SampledEvent>(&e);
    }
}

#[test]
fn pattern_keys_and_classes() {
    let occ: Occupation = serde_json::from_str(r#"{"aT_H":1,"g_H":2,"z_V":1}"#).unwrap();
    round_trip(&occ);
    for s in [
        "right",
        "wrong-pair:G,H",
        "double-non-detection:-",
        "trigger-failure:vetoed",
    ] {
        let class: EventClass = s.parse().unwrap();
        assert_eq!(class.to_string(), s);
        round_trip(&class);
    }
}
