use std::collections::BTreeMap;
use std::fmt::Write as _;

use innsbruck_core::events::{classify_with, filter_loss_demo, pairing_report, Removal};
use innsbruck_core::lhv::{
    critical_visibility, ghz_paradox_check, lemma_check, lhv_feasibility, Feasibility,
    FeasibilityProblem,
};
use innsbruck_core::optics::ModeTransform;
use innsbruck_core::sampler::{ClassCounts, EventSampler, SamplerConfig};
use innsbruck_core::source::two_pair_emission;
use innsbruck_core::stats::{outcome_tables, quantum_tables, OutcomeTable};
use innsbruck_core::wire::{format_rational, parse_rational};
use innsbruck_core::{
    innsbruck_circuit, trigger_select, CircularConvention, Error, Mode, Occupation, SettingTriple,
    TriggerRule,
};
use serde::Serialize;

use crate::{Artifact, Cli, CliError, Command, ConventionFlag, Format};

pub fn run(cli: &Cli) -> Result<Artifact, CliError> {
    let format = cli.format;
    match &cli.command {
        Command::Expand => expand(format.unwrap_or(Format::Text)),
        Command::Classify {
            pattern,
            redefined_trigger,
        } => classify(format.unwrap_or(Format::Text), pattern, *redefined_trigger),
        Command::DumpCircuit { elements } => {
            dump_circuit(format.unwrap_or(Format::Text), *elements)
        }
        Command::Correlations {
            visibility,
            convention,
        } => correlations(format.unwrap_or(Format::Csv), visibility, convention),
        Command::Sample(args) => sample(format.unwrap_or(Format::Json), args),
        Command::LhvFeasibility { visibility, slack } => {
            feasibility(format.unwrap_or(Format::Json), visibility, slack)
        }
        Command::CriticalVisibility { depth } => critical(format.unwrap_or(Format::Text), *depth),
        Command::GhzParadox { convention } => paradox(format.unwrap_or(Format::Json), convention),
        Command::LemmaCheck => lemma(format.unwrap_or(Format::Json)),
        Command::FilterLoss { a_h, a_v, b_h, b_v } => {
            let removal = Removal {
                a_h: *a_h,
                a_v: *a_v,
                b_h: *b_h,
                b_v: *b_v,
            };
            filter_loss(format.unwrap_or(Format::Json), &removal)
        }
    }
}

fn unsupported(command: &'static str, format: Format) -> CliError {
    CliError::UnsupportedFormat { command, format }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifacts serialize");
    s.push('\n');
    s
}

fn csv_rows(
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

fn convention(flag: &ConventionFlag) -> CircularConvention {
    if flag.conjugate {
        CircularConvention::Conjugate
    } else {
        CircularConvention::Standard
    }
}

#[derive(Serialize)]
struct LabeledTerm {
    class: String,
    term: String,
}

#[derive(Serialize)]
struct Expansion {
    emission: String,
    triggered: String,
    post_trigger: String,
    terms: Vec<LabeledTerm>,
    right_terms: usize,
    wrong_terms: usize,
}

fn expand(format: Format) -> Result<Artifact, CliError> {
    let emission = two_pair_emission();
    let triggered = trigger_select(&emission)?;
    let post = innsbruck_circuit().apply(&triggered);
    let report = pairing_report(&post)?;
    let terms: Vec<LabeledTerm> = post
        .terms()
        .map(|t| LabeledTerm {
            class: classify_with(t.occupation, TriggerRule::Naive).to_string(),
            term: t.to_string(),
        })
        .collect();
    let summary = format!(
        "{} post-trigger terms: {} right, {} wrong-pair",
        post.len(),
        report.right_terms,
        report.wrong_terms
    );
    let data = match format {
        Format::Json => json(&Expansion {
            emission: emission.to_string(),
            triggered: triggered.to_string(),
            post_trigger: post.to_string(),
            terms,
            right_terms: report.right_terms,
            wrong_terms: report.wrong_terms,
        }),
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "# two-pair emission\n{emission}");
            let _ = writeln!(s, "# trigger-selected\n{triggered}");
            let _ = writeln!(s, "# post-trigger\n{post}");
            let _ = writeln!(s, "# terms");
            for t in &terms {
                let _ = writeln!(s, "{:<16} {}", t.class, t.term);
            }
            let _ = writeln!(s, "# {summary}");
            s
        }
        Format::Csv => csv_rows(
            &["class", "term"],
            terms.iter().map(|t| vec![t.class.clone(), t.term.clone()]),
        )?,
    };
    Ok(Artifact { data, summary })
}

/// `aT_H,g_H=2,h_V`: comma-separated modes with optional counts.
fn parse_pattern(s: &str) -> Result<Occupation, Error> {
    let mut occ = Occupation::vacuum();
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        let (mode, n) = match item.split_once('=') {
            Some((m, n)) => (
                m,
                n.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Parse(item.to_string()))?,
            ),
            None => (item, 1),
        };
        occ.add(mode.trim().parse::<Mode>()?, n);
    }
    Ok(occ)
}

#[derive(Serialize)]
struct Classified {
    pattern: Occupation,
    trigger: TriggerRule,
    class: String,
}

fn classify(format: Format, pattern: &str, redefined: bool) -> Result<Artifact, CliError> {
    let occ = parse_pattern(pattern)?;
    let rule = if redefined {
        TriggerRule::Redefined
    } else {
        TriggerRule::Naive
    };
    let class = classify_with(&occ, rule).to_string();
    let data = match format {
        Format::Text => format!("{class}\n"),
        Format::Json => json(&Classified {
            pattern: occ,
            trigger: rule,
            class: class.clone(),
        }),
        Format::Csv => csv_rows(
            &["pattern", "class"],
            [vec![pattern.to_string(), class.clone()]],
        )?,
    };
    Ok(Artifact {
        data,
        summary: class,
    })
}

#[derive(Serialize)]
struct RuleWire {
    source: String,
    targets: BTreeMap<String, String>,
}

fn rules_wire(t: &ModeTransform) -> Vec<RuleWire> {
    t.rules()
        .map(|(m, targets)| RuleWire {
            source: m.key(),
            targets: targets
                .iter()
                .map(|(tm, c)| (tm.key(), c.to_string()))
                .collect(),
        })
        .collect()
}

fn dump_circuit(format: Format, elements: bool) -> Result<Artifact, CliError> {
    let circuit = innsbruck_circuit();
    let transforms = if elements {
        circuit.elements().to_vec()
    } else {
        vec![circuit.compose()?]
    };
    let summary = format!(
        "{} transform(s), {} rules",
        transforms.len(),
        transforms
            .iter()
            .map(|t| t.sources().count())
            .sum::<usize>()
    );
    let data = match format {
        Format::Text => transforms
            .iter()
            .map(ModeTransform::to_text)
            .collect::<Vec<_>>()
            .join("\n"),
        Format::Json => json(&transforms.iter().map(rules_wire).collect::<Vec<_>>()),
        Format::Csv => return Err(unsupported("dump-circuit", format)),
    };
    Ok(Artifact { data, summary })
}

#[derive(Serialize)]
struct CorrelationReport {
    visibility: String,
    convention: CircularConvention,
    correlations: BTreeMap<String, String>,
    tables: Vec<OutcomeTable>,
}

fn correlations(
    format: Format,
    visibility: &str,
    flag: &ConventionFlag,
) -> Result<Artifact, CliError> {
    let v = parse_rational(visibility)?;
    let conv = convention(flag);
    let state = innsbruck_core::source::post_trigger_state()?;
    let tables = if conv == CircularConvention::Standard {
        quantum_tables(&v)?
    } else {
        outcome_tables(&state, conv)?
            .iter()
            .map(|t| t.add_noise(&v))
            .collect::<Result<_, _>>()?
    };
    let mut correlations = BTreeMap::new();
    for t in &tables {
        correlations.insert(t.settings.to_string(), format_rational(&t.correlation()?));
    }
    let summary = correlations
        .iter()
        .map(|(s, e)| format!("E({s}) = {e}"))
        .collect::<Vec<_>>()
        .join(", ");
    let data = match format {
        Format::Csv => {
            let rows = tables.iter().flat_map(|t| {
                innsbruck_core::stats::OUTCOMES.iter().map(move |r| {
                    vec![
                        t.settings.to_string(),
                        r[0].to_string(),
                        r[1].to_string(),
                        r[2].to_string(),
                        format_rational(t.cell(*r)),
                    ]
                })
            });
            csv_rows(&["settings", "r_g", "r_h", "r_z", "probability"], rows)?
        }
        Format::Json => json(&CorrelationReport {
            visibility: format_rational(&v),
            convention: conv,
            correlations,
            tables,
        }),
        Format::Text => {
            let mut s = String::new();
            for t in &tables {
                let _ = writeln!(
                    s,
                    "{}  E = {:<6} right = {:<6} wrong = {}",
                    t.settings,
                    format_rational(&t.correlation()?),
                    format_rational(&t.right_mass()),
                    format_rational(&t.wrong_mass)
                );
            }
            s
        }
    };
    Ok(Artifact { data, summary })
}

fn sample(format: Format, args: &crate::SampleArgs) -> Result<Artifact, CliError> {
    let mut config = SamplerConfig::new(args.pulses, args.pair_prob, args.seed);
    config.loss_prob = args.loss_prob;
    config.trigger = if args.redefined_trigger {
        TriggerRule::Redefined
    } else {
        TriggerRule::Naive
    };
    config.settings = args
        .settings
        .as_deref()
        .map(str::parse::<SettingTriple>)
        .transpose()?;
    let mut counts = ClassCounts::default();
    let mut lines = String::new();
    for event in EventSampler::new(config)? {
        counts.record(&event);
        if format == Format::Json {
            lines.push_str(&serde_json::to_string(&event).expect("events serialize"));
            lines.push('\n');
        }
    }
    let summary = format!(
        "{} events from {} pulses: {} one-pair, {} two-pair, {} vetoed",
        counts.events, args.pulses, counts.one_pair, counts.two_pair, counts.vetoed
    );
    let data = match format {
        Format::Json => lines,
        Format::Csv => csv_rows(
            &["class", "count"],
            counts
                .by_class
                .iter()
                .map(|(c, n)| vec![c.clone(), n.to_string()]),
        )?,
        Format::Text => {
            let mut s = format!("{summary}\n");
            for (c, n) in &counts.by_class {
                let _ = writeln!(s, "{c:<28} {n}");
            }
            s
        }
    };
    Ok(Artifact { data, summary })
}

fn feasibility(format: Format, visibility: &str, slack: &str) -> Result<Artifact, CliError> {
    let v = parse_rational(visibility)?;
    let slack = parse_rational(slack)?;
    let problem = FeasibilityProblem::with_slack(quantum_tables(&v)?, slack);
    let answer = lhv_feasibility(&problem)?;
    let summary = match &answer {
        Feasibility::Feasible(m) => format!(
            "V = {}: feasible, {} strategies with wrong weight {}",
            format_rational(&v),
            m.right.len(),
            format_rational(&m.wrong_weight)
        ),
        Feasibility::Infeasible(c) => format!(
            "V = {}: infeasible, certificate value {} > local bound {} (verified: {})",
            format_rational(&v),
            format_rational(&c.target_value),
            format_rational(&c.lhv_bound),
            c.verify(&problem.targets)
        ),
    };
    let data = match format {
        Format::Json => json(&answer),
        Format::Text => format!("{summary}\n"),
        Format::Csv => return Err(unsupported("lhv-feasibility", format)),
    };
    Ok(Artifact { data, summary })
}

fn critical(format: Format, depth: u32) -> Result<Artifact, CliError> {
    let c = critical_visibility(depth)?;
    let summary = if c.exact {
        format!("V* = {}", format_rational(&c.threshold))
    } else {
        format!(
            "V* in [{}, {}]",
            format_rational(&c.lower),
            format_rational(&c.upper)
        )
    };
    let data = match format {
        Format::Text => format!("{summary}\n"),
        Format::Json => json(&c),
        Format::Csv => csv_rows(
            &["threshold", "exact", "lower", "upper", "steps"],
            [vec![
                format_rational(&c.threshold),
                c.exact.to_string(),
                format_rational(&c.lower),
                format_rational(&c.upper),
                c.steps.to_string(),
            ]],
        )?,
    };
    Ok(Artifact { data, summary })
}

fn paradox(format: Format, flag: &ConventionFlag) -> Result<Artifact, CliError> {
    let r = ghz_paradox_check(convention(flag))?;
    let summary = format!(
        "{} of 64 strategies satisfy all four constraints; without one: {:?}; contradiction: {}",
        r.satisfying_all, r.satisfying_without, r.contradiction
    );
    let data = match format {
        Format::Json => json(&r),
        Format::Text => {
            let mut s = String::new();
            for c in &r.constraints {
                let _ = writeln!(s, "{}: product = {:+}", c.settings, c.sign);
            }
            let _ = writeln!(s, "{summary}");
            s
        }
        Format::Csv => return Err(unsupported("ghz-paradox", format)),
    };
    Ok(Artifact { data, summary })
}

fn lemma(format: Format) -> Result<Artifact, CliError> {
    let r = lemma_check();
    let summary = format!(
        "{} of {} strategies admitted ({} all-right, {} single-right); {} setting-dependent, all refuted: {}",
        r.admitted, r.total, r.admitted_right, r.admitted_single, r.setting_dependent, r.setting_dependent_all_refuted
    );
    let data = match format {
        Format::Json => json(&r),
        Format::Text => format!("{summary}\n"),
        Format::Csv => return Err(unsupported("lemma-check", format)),
    };
    Ok(Artifact { data, summary })
}

fn filter_loss(format: Format, removal: &Removal) -> Result<Artifact, CliError> {
    let demo = filter_loss_demo(removal)?;
    let summary = format!(
        "naive trigger rate {}, redefined trigger rate {}",
        format_rational(&demo.naive_trigger_rate()),
        format_rational(&demo.redefined_trigger_rate())
    );
    let data = match format {
        Format::Json => json(&demo),
        Format::Text => format!("{summary}\n"),
        Format::Csv => {
            let rows =
                demo.naive
                    .iter()
                    .map(|(c, p)| vec!["naive".into(), c.to_string(), format_rational(&p.0)])
                    .chain(demo.redefined.iter().map(|(c, p)| {
                        vec!["redefined".into(), c.to_string(), format_rational(&p.0)]
                    }));
            csv_rows(&["trigger", "class", "probability"], rows)?
        }
    };
    Ok(Artifact { data, summary })
}
