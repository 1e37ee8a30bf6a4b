//! Local hidden-variable side: deterministic local strategies, the Σ and χ
//! functions, the exact feasibility LP against outcome tables, the GHZ
//! contradiction on perfect correlations and the critical visibility.
//!
//! A deterministic strategy fixes, for one value of the hidden variable,
//! the local result `+1`, `−1` or `0` (wrong event) for each station and
//! each of its two analyzer settings. Stochastic local models are mixtures
//! of these.

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::Station;
use crate::simplex::{self, Constraint, LpOutcome, Relation};
use crate::stats::{
    self, outcome_index, CircularConvention, OutcomeTable, SettingTriple, OUTCOMES,
};
use crate::wire;

/// Local results indexed by station (G, H, Z) and setting (x, y).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LocalStrategy {
    pub g: [i8; 2],
    pub h: [i8; 2],
    pub z: [i8; 2],
}

impl LocalStrategy {
    pub fn new(g: [i8; 2], h: [i8; 2], z: [i8; 2]) -> Result<Self> {
        let s = LocalStrategy { g, h, z };
        if s.stations().iter().flatten().any(|v| !(-1..=1).contains(v)) {
            return Err(Error::Config(
                "local results are restricted to +1, -1 and 0".into(),
            ));
        }
        Ok(s)
    }

    fn stations(&self) -> [[i8; 2]; 3] {
        [self.g, self.h, self.z]
    }

    pub fn value(&self, station: Station, setting: stats::AnalyzerSetting) -> i8 {
        let row = match station {
            Station::G => self.g,
            Station::H => self.h,
            Station::Z => self.z,
        };
        row[setting.index()]
    }

    pub fn results(&self, settings: SettingTriple) -> [i8; 3] {
        Station::ALL.map(|st| self.value(st, settings.at(st)))
    }

    /// Right-event outcome triple, `None` if some station reports 0.
    pub fn outcome(&self, settings: SettingTriple) -> Option<[i8; 3]> {
        let r = self.results(settings);
        r.iter().all(|v| *v != 0).then_some(r)
    }

    pub fn sigma(&self, settings: SettingTriple) -> u8 {
        self.results(settings)
            .iter()
            .map(|v| v.unsigned_abs())
            .sum()
    }

    /// First station whose modulus changes with its setting.
    pub fn setting_dependent_station(&self) -> Option<Station> {
        Station::ALL
            .into_iter()
            .zip(self.stations())
            .find(|(_, row)| row[0].abs() != row[1].abs())
            .map(|(st, _)| st)
    }

    /// Σ ∈ {1, 3} at every setting triple.
    pub fn is_admissible(&self) -> bool {
        SettingTriple::all()
            .iter()
            .all(|&t| matches!(self.sigma(t), 1 | 3))
    }

    /// `|G·H·Z|`; an error when a local modulus depends on the setting.
    pub fn chi(&self) -> Result<u8> {
        if let Some(st) = self.setting_dependent_station() {
            return Err(Error::Inadmissible(st.letter()));
        }
        Ok(u8::from(self.stations().iter().all(|row| row[0] != 0)))
    }

    /// All 9³ = 729 joint strategies.
    pub fn all() -> impl Iterator<Item = LocalStrategy> {
        let local: Vec<[i8; 2]> = (0..9)
            .map(|i| [(i / 3) as i8 - 1, (i % 3) as i8 - 1])
            .collect();
        let l = local.clone();
        (0..729).map(move |i| LocalStrategy {
            g: l[i / 81],
            h: l[(i / 9) % 9],
            z: l[i % 9],
        })
    }

    /// The 4³ = 64 strategies with every result ±1.
    pub fn right_sector() -> impl Iterator<Item = LocalStrategy> {
        let signs = |k: usize| {
            [
                if k & 2 == 0 { 1 } else { -1 },
                if k & 1 == 0 { 1 } else { -1 },
            ]
        };
        (0..64).map(move |i| LocalStrategy {
            g: signs(i >> 4),
            h: signs((i >> 2) & 3),
            z: signs(i & 3),
        })
    }
}

pub fn sigma(strategy: &LocalStrategy, settings: SettingTriple) -> u8 {
    strategy.sigma(settings)
}

pub fn chi(strategy: &LocalStrategy) -> Result<u8> {
    strategy.chi()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub total: usize,
    pub admitted: usize,
    /// Admitted with χ = 1 (all three stations right).
    pub admitted_right: usize,
    /// Admitted with exactly one right station (Σ = 1).
    pub admitted_single: usize,
    pub setting_dependent: usize,
    /// Every setting-dependent strategy hits Σ ∈ {0, 2} at some triple.
    pub setting_dependent_all_refuted: bool,
    pub setting_independent_excluded: usize,
    /// Admitted set equals {setting-independent moduli with Σ ∈ {1, 3}}.
    pub characterization_holds: bool,
    pub sigma_values_admitted: BTreeSet<u8>,
    /// χ does not change with the settings for any admitted strategy.
    pub chi_setting_invariant: bool,
}

/// Enumerates all joint strategies and checks which are compatible with
/// wrong events always coming in pairs.
pub fn lemma_check() -> LemmaReport {
    let mut report = LemmaReport {
        total: 0,
        admitted: 0,
        admitted_right: 0,
        admitted_single: 0,
        setting_dependent: 0,
        setting_dependent_all_refuted: true,
        setting_independent_excluded: 0,
        characterization_holds: true,
        sigma_values_admitted: BTreeSet::new(),
        chi_setting_invariant: true,
    };
    let triples = SettingTriple::all();
    for s in LocalStrategy::all() {
        report.total += 1;
        let sigmas: Vec<u8> = triples.iter().map(|&t| s.sigma(t)).collect();
        let admitted = sigmas.iter().all(|v| matches!(v, 1 | 3));
        let independent = s.setting_dependent_station().is_none();
        if !independent {
            report.setting_dependent += 1;
            if !sigmas.iter().any(|v| matches!(v, 0 | 2)) {
                report.setting_dependent_all_refuted = false;
            }
        }
        if admitted && !independent {
            report.characterization_holds = false;
        }
        if admitted {
            report.admitted += 1;
            report.sigma_values_admitted.extend(&sigmas);
            let chis: BTreeSet<u8> = triples
                .iter()
                .map(|&t| s.results(t).iter().map(|v| v.unsigned_abs()).product())
                .collect();
            if chis.len() != 1 {
                report.chi_setting_invariant = false;
            }
            match s.chi() {
                Ok(1) => report.admitted_right += 1,
                Ok(_) => report.admitted_single += 1,
                Err(_) => report.characterization_holds = false,
            }
        } else if independent {
            report.setting_independent_excluded += 1;
        }
    }
    report
}

/// Mermin combination `E(xyy) + E(yxy) + E(yyx) − E(xxx)` on right-event
/// correlations.
pub fn mermin_value(tables: &[OutcomeTable]) -> Result<BigRational> {
    let e = |name: &str| -> Result<BigRational> {
        let t: SettingTriple = name.parse()?;
        tables
            .iter()
            .find(|tb| tb.settings == t)
            .ok_or_else(|| Error::InvalidTargets(format!("missing table {name}")))?
            .correlation()
    };
    Ok(e("xyy")? + e("yxy")? + e("yyx")? - e("xxx")?)
}

/// Largest Mermin value over the deterministic right-sector strategies.
pub fn mermin_lhv_bound() -> i32 {
    let terms: [(&str, i32); 4] = [("xyy", 1), ("yxy", 1), ("yyx", 1), ("xxx", -1)];
    LocalStrategy::right_sector()
        .map(|s| {
            terms
                .iter()
                .map(|(n, sign)| {
                    let r = s.results(n.parse().expect("fixed names"));
                    sign * r.iter().map(|&v| i32::from(v)).product::<i32>()
                })
                .sum::<i32>()
        })
        .max()
        .expect("non-empty")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibilityProblem {
    /// One table per setting triple.
    pub targets: Vec<OutcomeTable>,
    /// Allowed deviation per cell; zero means exact reproduction.
    pub slack: BigRational,
}

impl FeasibilityProblem {
    pub fn exact(targets: Vec<OutcomeTable>) -> Self {
        Self {
            targets,
            slack: BigRational::zero(),
        }
    }

    pub fn with_slack(targets: Vec<OutcomeTable>, slack: BigRational) -> Self {
        Self { targets, slack }
    }

    /// Targets sorted by setting index, after validation.
    fn checked_targets(&self) -> Result<Vec<&OutcomeTable>> {
        if self.slack.is_negative() {
            return Err(Error::InvalidTargets("negative slack".into()));
        }
        let mut by_setting: Vec<Option<&OutcomeTable>> = vec![None; 8];
        for t in &self.targets {
            let slot = &mut by_setting[t.settings.index()];
            if slot.is_some() {
                return Err(Error::InvalidTargets(format!(
                    "duplicate table {}",
                    t.settings
                )));
            }
            if t.cells
                .iter()
                .chain([&t.wrong_mass])
                .any(|p| p.is_negative())
            {
                return Err(Error::InvalidTargets(format!(
                    "negative probability in {}",
                    t.settings
                )));
            }
            if !t.total().is_one() {
                return Err(Error::InvalidTargets(format!(
                    "table {} sums to {}",
                    t.settings,
                    wire::format_rational(&t.total())
                )));
            }
            *slot = Some(t);
        }
        by_setting
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                t.ok_or_else(|| {
                    Error::InvalidTargets(format!("missing {}", SettingTriple::all()[i]))
                })
            })
            .collect()
    }
}

/// Row layout shared by the LP and its certificate: 64 right cells
/// (setting-major), 8 wrong-mass rows, one normalization row.
const CELL_ROWS: usize = 64;
const ROWS: usize = CELL_ROWS + 8 + 1;
const NORM_ROW: usize = ROWS - 1;

/// Columns: 64 right-sector strategies, then the aggregated χ = 0 weight.
fn strategy_columns() -> Vec<LocalStrategy> {
    LocalStrategy::right_sector().collect()
}

fn column_rows(strategy: Option<&LocalStrategy>) -> Vec<usize> {
    let mut rows: Vec<usize> = match strategy {
        Some(s) => SettingTriple::all()
            .iter()
            .map(|&t| t.index() * 8 + outcome_index(s.outcome(t).expect("right sector")))
            .collect(),
        None => (0..8).map(|t| CELL_ROWS + t).collect(),
    };
    rows.push(NORM_ROW);
    rows
}

fn target_vector(targets: &[&OutcomeTable]) -> Vec<BigRational> {
    let mut b = vec![BigRational::zero(); ROWS];
    for t in targets {
        let i = t.settings.index();
        for (r, p) in t.cells.iter().enumerate() {
            b[i * 8 + r] = p.clone();
        }
        b[CELL_ROWS + i] = t.wrong_mass.clone();
    }
    b[NORM_ROW] = BigRational::one();
    b
}

fn build_constraints(
    targets: &[&OutcomeTable],
    slack: &BigRational,
) -> (usize, Vec<Constraint>, Vec<usize>) {
    let columns: Vec<Vec<usize>> = strategy_columns()
        .iter()
        .map(|s| column_rows(Some(s)))
        .chain([column_rows(None)])
        .collect();
    let n = columns.len();
    let b = target_vector(targets);
    let mut constraints = Vec::new();
    let mut origin = Vec::new();
    for (row, target) in b.iter().enumerate() {
        let coeffs: Vec<BigRational> = columns
            .iter()
            .map(|rows| {
                if rows.contains(&row) {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            })
            .collect();
        if slack.is_zero() || row == NORM_ROW {
            constraints.push(Constraint::new(coeffs, Relation::Eq, target.clone()));
            origin.push(row);
        } else {
            constraints.push(Constraint::new(
                coeffs.clone(),
                Relation::Le,
                target + slack,
            ));
            constraints.push(Constraint::new(coeffs, Relation::Ge, target - slack));
            origin.extend([row, row]);
        }
    }
    (n, constraints, origin)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedStrategy {
    pub strategy: LocalStrategy,
    #[serde(with = "wire::rational")]
    pub weight: BigRational,
}

/// A mixture of deterministic strategies plus the weight of hidden-variable
/// values that produce wrong events (χ = 0).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LhvModel {
    pub right: Vec<WeightedStrategy>,
    #[serde(with = "wire::rational")]
    pub wrong_weight: BigRational,
}

impl LhvModel {
    /// Outcome table the mixture produces at `settings`.
    pub fn table(&self, settings: SettingTriple) -> OutcomeTable {
        let mut cells: [BigRational; 8] = std::array::from_fn(|_| BigRational::zero());
        for w in &self.right {
            let r = w.strategy.outcome(settings).expect("right sector");
            cells[outcome_index(r)] += &w.weight;
        }
        OutcomeTable {
            settings,
            cells,
            wrong_mass: self.wrong_weight.clone(),
        }
    }

    /// Restriction to χ = 1, renormalized.
    pub fn right_part(&self) -> Option<LhvModel> {
        let mass = self
            .right
            .iter()
            .fold(BigRational::zero(), |a, w| a + &w.weight);
        if mass.is_zero() {
            return None;
        }
        Some(LhvModel {
            right: self
                .right
                .iter()
                .map(|w| WeightedStrategy {
                    strategy: w.strategy,
                    weight: &w.weight / &mass,
                })
                .collect(),
            wrong_weight: BigRational::zero(),
        })
    }
}

/// A linear functional on outcome tables that every local model keeps at or
/// below `lhv_bound` while the targets (less the slack penalty) exceed it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    /// Coefficients of the 64 right cells, setting-major in [`OUTCOMES`] order.
    #[serde(with = "wire::rational_vec")]
    pub cell_weights: Vec<BigRational>,
    /// Coefficients of the wrong mass, one per setting triple.
    #[serde(with = "wire::rational_vec")]
    pub wrong_weights: Vec<BigRational>,
    #[serde(with = "wire::rational")]
    pub offset: BigRational,
    #[serde(with = "wire::rational")]
    pub slack: BigRational,
    #[serde(with = "wire::rational")]
    pub target_value: BigRational,
    #[serde(with = "wire::rational")]
    pub lhv_bound: BigRational,
}

impl Certificate {
    fn l1(&self) -> BigRational {
        self.cell_weights
            .iter()
            .chain(&self.wrong_weights)
            .fold(BigRational::zero(), |a, f| a + f.abs())
    }

    /// Value of the functional on a set of tables, before the slack penalty.
    pub fn evaluate(&self, tables: &[OutcomeTable]) -> BigRational {
        let mut v = self.offset.clone();
        for t in tables {
            let i = t.settings.index();
            for (r, p) in t.cells.iter().enumerate() {
                v += &self.cell_weights[i * 8 + r] * p;
            }
            v += &self.wrong_weights[i] * &t.wrong_mass;
        }
        v
    }

    /// Recomputes the local bound by enumerating deterministic strategies and
    /// checks that the targets exceed it by more than the slack allows.
    pub fn verify(&self, targets: &[OutcomeTable]) -> bool {
        if self.cell_weights.len() != CELL_ROWS
            || self.wrong_weights.len() != 8
            || targets.len() != 8
        {
            return false;
        }
        let mut bound = self.offset.clone()
            + self
                .wrong_weights
                .iter()
                .fold(BigRational::zero(), |a, f| a + f);
        for s in LocalStrategy::right_sector() {
            let mut v = self.offset.clone();
            for t in SettingTriple::all() {
                let r = s.results(t);
                let cell = OUTCOMES.iter().position(|o| *o == r).expect("±1 results");
                v += &self.cell_weights[t.index() * 8 + cell];
            }
            if v > bound {
                bound = v;
            }
        }
        let target = self.evaluate(targets) - &self.slack * self.l1();
        bound == self.lhv_bound && target == self.target_value && target > bound
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
#[allow(clippy::large_enum_variant)]
pub enum Feasibility {
    Feasible(LhvModel),
    Infeasible(Certificate),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

/// Exact LP: is there a mixture of local strategies reproducing the targets?
pub fn lhv_feasibility(problem: &FeasibilityProblem) -> Result<Feasibility> {
    let targets = problem.checked_targets()?;
    let (n, constraints, origin) = build_constraints(&targets, &problem.slack);
    match simplex::find_feasible_point(n, &constraints) {
        LpOutcome::Feasible(x) => {
            let columns = strategy_columns();
            let right = columns
                .iter()
                .zip(&x)
                .filter(|(_, w)| !w.is_zero())
                .map(|(s, w)| WeightedStrategy {
                    strategy: *s,
                    weight: w.clone(),
                })
                .collect();
            Ok(Feasibility::Feasible(LhvModel {
                right,
                wrong_weight: x[n - 1].clone(),
            }))
        }
        LpOutcome::Infeasible(y) => {
            debug_assert!(simplex::check_farkas(n, &constraints, &y));
            let mut f = vec![BigRational::zero(); ROWS];
            for (yi, row) in y.iter().zip(&origin) {
                f[*row] += yi;
            }
            let owned: Vec<OutcomeTable> = targets.iter().map(|t| (*t).clone()).collect();
            let mut cert = Certificate {
                cell_weights: f[..CELL_ROWS].to_vec(),
                wrong_weights: f[CELL_ROWS..NORM_ROW].to_vec(),
                offset: f[NORM_ROW].clone(),
                slack: problem.slack.clone(),
                target_value: BigRational::zero(),
                lhv_bound: BigRational::zero(),
            };
            cert.target_value = cert.evaluate(&owned) - &cert.slack * cert.l1();
            cert.lhv_bound = strategy_columns()
                .iter()
                .map(Some)
                .chain([None])
                .map(|s| {
                    column_rows(s)
                        .iter()
                        .fold(BigRational::zero(), |a, r| a + &f[*r])
                })
                .max()
                .expect("non-empty");
            Ok(Feasibility::Infeasible(cert))
        }
    }
}

/// Feasibility of the quantum tables mixed with white noise at `visibility`.
pub fn feasibility_at(visibility: &BigRational) -> Result<Feasibility> {
    lhv_feasibility(&FeasibilityProblem::exact(stats::quantum_tables(
        visibility,
    )?))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalVisibility {
    #[serde(with = "wire::rational")]
    pub threshold: BigRational,
    /// The threshold was pinned exactly (feasible there, certified
    /// infeasible everywhere above).
    pub exact: bool,
    #[serde(with = "wire::rational")]
    pub lower: BigRational,
    #[serde(with = "wire::rational")]
    pub upper: BigRational,
    pub steps: u32,
}

/// Bisection on the visibility, closed by solving for the root of the last
/// infeasibility certificate, which is affine in the visibility.
pub fn critical_visibility(depth: u32) -> Result<CriticalVisibility> {
    let state = crate::source::post_trigger_state()?;
    let base = stats::outcome_tables(&state, CircularConvention::Standard)?;
    let tables_at = |v: &BigRational| -> Result<Vec<OutcomeTable>> {
        base.iter().map(|t| t.add_noise(v)).collect()
    };
    let solve = |v: &BigRational| -> Result<Feasibility> {
        lhv_feasibility(&FeasibilityProblem::exact(tables_at(v)?))
    };

    let mut lo = BigRational::zero();
    let mut hi = BigRational::one();
    if !solve(&lo)?.is_feasible() {
        return Err(Error::Modeling(
            "white noise is not reproduced by local strategies".into(),
        ));
    }
    let mut cert = match solve(&hi)? {
        Feasibility::Feasible(_) => {
            return Ok(CriticalVisibility {
                threshold: hi.clone(),
                exact: true,
                lower: hi.clone(),
                upper: hi,
                steps: 0,
            })
        }
        Feasibility::Infeasible(c) => c,
    };
    let two = BigRational::from_integer(2.into());
    let mut steps = 0;
    for _ in 0..depth {
        let mid = (&lo + &hi) / &two;
        steps += 1;
        match solve(&mid)? {
            Feasibility::Feasible(_) => lo = mid,
            Feasibility::Infeasible(c) => {
                hi = mid;
                cert = c;
            }
        }
    }
    // g(V) = functional(V) − bound is affine in V and positive at `hi`.
    let gap = |v: &BigRational| -> Result<BigRational> {
        Ok(cert.evaluate(&tables_at(v)?) - &cert.lhv_bound)
    };
    let (g_lo, g_hi) = (gap(&lo)?, gap(&hi)?);
    if g_hi > g_lo {
        let root = &hi - &g_hi * (&hi - &lo) / (&g_hi - &g_lo);
        if root >= lo && root <= hi && solve(&root)?.is_feasible() {
            return Ok(CriticalVisibility {
                threshold: root.clone(),
                exact: true,
                lower: root,
                upper: hi,
                steps,
            });
        }
    }
    Ok(CriticalVisibility {
        threshold: lo.clone(),
        exact: false,
        lower: lo,
        upper: hi,
        steps,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerfectCorrelation {
    pub settings: SettingTriple,
    pub sign: i8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParadoxReport {
    pub conjugate_circular: bool,
    pub constraints: Vec<PerfectCorrelation>,
    /// Right-sector strategies meeting all four product constraints.
    pub satisfying_all: usize,
    /// Same count with constraint `i` dropped.
    pub satisfying_without: Vec<usize>,
    /// Product of the four right-hand sides (the left-hand sides multiply to +1).
    pub sign_product: i8,
    pub contradiction: bool,
}

/// Perfect correlations of the derived state force, for every χ = 1 value of
/// the hidden variable, four product constraints that cannot hold together.
pub fn ghz_paradox_check(convention: CircularConvention) -> Result<ParadoxReport> {
    let state = crate::source::post_trigger_state()?;
    let mut constraints = Vec::new();
    for name in ["xxx", "xyy", "yxy", "yyx"] {
        let settings: SettingTriple = name.parse()?;
        let e = stats::outcome_distribution_with(&state, settings, convention)?.correlation()?;
        let sign = if e.is_one() {
            1
        } else if (-&e).is_one() {
            -1
        } else {
            return Err(Error::Modeling(format!(
                "E({name}) = {} is not perfect",
                wire::format_rational(&e)
            )));
        };
        constraints.push(PerfectCorrelation { settings, sign });
    }
    let count = |skip: Option<usize>| {
        LocalStrategy::right_sector()
            .filter(|s| {
                constraints.iter().enumerate().all(|(i, c)| {
                    Some(i) == skip || s.results(c.settings).iter().product::<i8>() == c.sign
                })
            })
            .count()
    };
    let satisfying_all = count(None);
    let satisfying_without = (0..constraints.len()).map(|i| count(Some(i))).collect();
    let sign_product = constraints.iter().map(|c| c.sign).product();
    Ok(ParadoxReport {
        conjugate_circular: convention == CircularConvention::Conjugate,
        constraints,
        satisfying_all,
        satisfying_without,
        sign_product,
        contradiction: satisfying_all == 0 && sign_product == -1,
    })
}
