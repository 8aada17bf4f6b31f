//! Interval type-2 fuzzy trust evaluation.
//!
//! Evidence rates (dropping, delaying) are mapped to a scalar trust in
//! `[0, 1]` through nine product-t-norm rules, alpha cuts of the output
//! footprints, center-of-sets type reduction and midpoint defuzzification.

mod membership;
mod reduce;

use serde::{Deserialize, Serialize};

pub use membership::{It2FuzzySet, MembershipFunction, ShapeKind};
pub use reduce::{type_reduce, TrustPair, TypeReducedInterval};

use crate::error::{check_unit, Error, Result};

/// Linguistic terms of the two evidence inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputTerm {
    Low,
    Medium,
    High,
}

/// The seven output terms, ordered from distrust to trust.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrustTerm {
    CompleteDistrust,
    IntenseDistrust,
    Distrust,
    MediumDistrust,
    MediumTrust,
    Trust,
    CompleteTrust,
}

impl TrustTerm {
    pub const ALL: [TrustTerm; 7] = [
        TrustTerm::CompleteDistrust,
        TrustTerm::IntenseDistrust,
        TrustTerm::Distrust,
        TrustTerm::MediumDistrust,
        TrustTerm::MediumTrust,
        TrustTerm::Trust,
        TrustTerm::CompleteTrust,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn shape(self) -> ShapeKind {
        match self {
            TrustTerm::CompleteDistrust => ShapeKind::LeftShoulder,
            TrustTerm::CompleteTrust => ShapeKind::RightShoulder,
            _ => ShapeKind::SymmetricTriangle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rule {
    pub dlr: InputTerm,
    pub dpr: InputTerm,
    pub output: TrustTerm,
}

const fn rule(dlr: InputTerm, dpr: InputTerm, output: TrustTerm) -> Rule {
    Rule { dlr, dpr, output }
}

/// The nine-rule base, indexed 1..=9 in order.
pub const RULES: [Rule; 9] = {
    use InputTerm::*;
    use TrustTerm::*;
    [
        rule(Low, Low, CompleteTrust),
        rule(Medium, Low, Trust),
        rule(High, Low, MediumTrust),
        rule(Low, Medium, MediumTrust),
        rule(Medium, Medium, MediumDistrust),
        rule(High, Medium, Distrust),
        rule(Low, High, Distrust),
        rule(Medium, High, IntenseDistrust),
        rule(High, High, CompleteDistrust),
    ]
};

/// Number of (interval, grade) entries produced per inference.
pub const CUT_ENTRIES: usize = 16;

/// Three-term partition of one evidence input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPartition {
    pub low: MembershipFunction,
    pub medium: MembershipFunction,
    pub high: MembershipFunction,
}

impl InputPartition {
    pub fn grade(&self, term: InputTerm, x: f64) -> f64 {
        match term {
            InputTerm::Low => self.low.eval(x),
            InputTerm::Medium => self.medium.eval(x),
            InputTerm::High => self.high.eval(x),
        }
    }
}

impl Default for InputPartition {
    fn default() -> Self {
        let mf = |pts: Vec<(f64, f64)>| MembershipFunction::new(pts).expect("default partition");
        Self {
            low: mf(vec![(0.0, 1.0), (0.5, 0.0), (1.0, 0.0)]),
            medium: mf(vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)]),
            high: mf(vec![(0.0, 0.0), (0.5, 0.0), (1.0, 1.0)]),
        }
    }
}

/// Upper and lower outlines of one output set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSetDefinition {
    pub upper: MembershipFunction,
    pub lower: MembershipFunction,
}

/// Text-loadable description of every set in the system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuzzySetDefinitions {
    pub dpr: InputPartition,
    pub dlr: InputPartition,
    pub output: OutputDefinitions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDefinitions {
    pub complete_distrust: OutputSetDefinition,
    pub intense_distrust: OutputSetDefinition,
    pub distrust: OutputSetDefinition,
    pub medium_distrust: OutputSetDefinition,
    pub medium_trust: OutputSetDefinition,
    pub trust: OutputSetDefinition,
    pub complete_trust: OutputSetDefinition,
}

impl OutputDefinitions {
    fn get(&self, term: TrustTerm) -> &OutputSetDefinition {
        match term {
            TrustTerm::CompleteDistrust => &self.complete_distrust,
            TrustTerm::IntenseDistrust => &self.intense_distrust,
            TrustTerm::Distrust => &self.distrust,
            TrustTerm::MediumDistrust => &self.medium_distrust,
            TrustTerm::MediumTrust => &self.medium_trust,
            TrustTerm::Trust => &self.trust,
            TrustTerm::CompleteTrust => &self.complete_trust,
        }
    }
}

impl Default for FuzzySetDefinitions {
    fn default() -> Self {
        // Apexes at k/6; upper half-width 1/6, lower half-width 1/8 at height 0.8.
        // A narrower lower set leaves weakly fired rules with a zero lower
        // grade and the trust surface stops being monotone.
        let set = |term: TrustTerm| {
            let apex = term.index() as f64 / 6.0;
            let s = It2FuzzySet::triangular(apex, 1.0 / 6.0, 1.0 / 8.0, 0.8, term.shape())
                .expect("default output set");
            OutputSetDefinition {
                upper: s.upper().clone(),
                lower: s.lower().clone(),
            }
        };
        Self {
            dpr: InputPartition::default(),
            dlr: InputPartition::default(),
            output: OutputDefinitions {
                complete_distrust: set(TrustTerm::CompleteDistrust),
                intense_distrust: set(TrustTerm::IntenseDistrust),
                distrust: set(TrustTerm::Distrust),
                medium_distrust: set(TrustTerm::MediumDistrust),
                medium_trust: set(TrustTerm::MediumTrust),
                trust: set(TrustTerm::Trust),
                complete_trust: set(TrustTerm::CompleteTrust),
            },
        }
    }
}

impl FuzzySetDefinitions {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("set definitions serialize")
    }
}

/// One alpha-cut entry: an interval of the rule's output set and its grade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutEntry {
    /// Rule number, 1..=9.
    pub rule: usize,
    pub term: TrustTerm,
    pub interval: (f64, f64),
    pub grade: f64,
}

/// The complete inference system. Immutable once built.
#[derive(Debug, Clone)]
pub struct FuzzyTrustEvaluator {
    dpr: InputPartition,
    dlr: InputPartition,
    outputs: [It2FuzzySet; 7],
}

impl Default for FuzzyTrustEvaluator {
    fn default() -> Self {
        Self::new(&FuzzySetDefinitions::default()).expect("default definitions are valid")
    }
}

/// Trust returned when no rule fires at all.
pub const NEUTRAL_TRUST: f64 = 0.5;

impl FuzzyTrustEvaluator {
    pub fn new(defs: &FuzzySetDefinitions) -> Result<Self> {
        let mut sets = Vec::with_capacity(7);
        for term in TrustTerm::ALL {
            let d = defs.output.get(term);
            let set = It2FuzzySet::new(d.upper.clone(), d.lower.clone(), term.shape())
                .map_err(|e| Error::Membership(format!("{term:?}: {e}")))?;
            sets.push(set);
        }
        let outputs: [It2FuzzySet; 7] = sets.try_into().expect("seven output sets");
        Ok(Self {
            dpr: defs.dpr.clone(),
            dlr: defs.dlr.clone(),
            outputs,
        })
    }

    pub fn output_set(&self, term: TrustTerm) -> &It2FuzzySet {
        &self.outputs[term.index()]
    }

    /// Product-t-norm firing grade of each rule.
    pub fn fire_rules(&self, dpr: f64, dlr: f64) -> Result<[f64; 9]> {
        check_unit("DPR", dpr)?;
        check_unit("DLR", dlr)?;
        Ok(RULES.map(|r| self.dlr.grade(r.dlr, dlr) * self.dpr.grade(r.dpr, dpr)))
    }

    /// Cuts every rule's output set at its firing grade. Symmetric sets
    /// yield one entry per slope at half the grade; shoulders yield one.
    /// Rules that did not fire still yield degenerate entries at the apex.
    pub fn alpha_cut_intervals(&self, firing: &[f64; 9]) -> [CutEntry; CUT_ENTRIES] {
        let mut out = Vec::with_capacity(CUT_ENTRIES);
        for (k, (r, &g)) in RULES.iter().zip(firing).enumerate() {
            let set = self.output_set(r.output);
            let entry = |interval, grade| CutEntry {
                rule: k + 1,
                term: r.output,
                interval,
                grade,
            };
            let apex = set.apex();
            let cut = |rising: bool, h: f64| {
                if g > 0.0 {
                    if rising {
                        set.cut_rising(h)
                    } else {
                        set.cut_falling(h)
                    }
                } else {
                    (apex, apex)
                }
            };
            match set.shape() {
                ShapeKind::RightShoulder => out.push(entry(cut(true, g), g)),
                ShapeKind::LeftShoulder => out.push(entry(cut(false, g), g)),
                ShapeKind::SymmetricTriangle => {
                    let half = g / 2.0;
                    out.push(entry(cut(true, g), half));
                    out.push(entry(cut(false, g), half));
                }
            }
        }
        out.try_into()
            .unwrap_or_else(|v: Vec<CutEntry>| panic!("rule base produced {} cut entries", v.len()))
    }

    /// Midpoint of each interval with the footprint grades there, scaled by
    /// the entry's cut grade.
    pub fn to_trust_pairs(&self, cuts: &[CutEntry; CUT_ENTRIES]) -> [TrustPair; CUT_ENTRIES] {
        cuts.map(|c| {
            let set = self.output_set(c.term);
            let value = (c.interval.0 + c.interval.1) / 2.0;
            TrustPair {
                value,
                grade_lower: c.grade * set.lower().eval(value),
                grade_upper: c.grade * set.upper().eval(value),
            }
        })
    }

    /// Full pipeline with the intermediate interval exposed.
    pub fn infer(&self, dpr: f64, dlr: f64) -> Result<Option<TypeReducedInterval>> {
        let firing = self.fire_rules(dpr, dlr)?;
        if firing.iter().all(|&g| g <= 0.0) {
            return Ok(None);
        }
        let cuts = self.alpha_cut_intervals(&firing);
        let pairs = normalize_and_sort(self.to_trust_pairs(&cuts));
        match type_reduce(&pairs) {
            Ok(interval) => Ok(Some(interval)),
            Err(Error::DegenerateInput) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Crisp trust for the given dropping and delaying rates.
    pub fn evaluate_trust(&self, dpr: f64, dlr: f64) -> Result<f64> {
        Ok(self
            .infer(dpr, dlr)?
            .map_or(NEUTRAL_TRUST, |i| i.midpoint().clamp(0.0, 1.0)))
    }
}

/// Sorts pairs by value (stable) and scales each grade family by its own
/// maximum. All-zero families pass through unchanged.
pub fn normalize_and_sort(mut pairs: [TrustPair; CUT_ENTRIES]) -> [TrustPair; CUT_ENTRIES] {
    pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
    let max_lower = pairs.iter().map(|p| p.grade_lower).fold(0.0, f64::max);
    let max_upper = pairs.iter().map(|p| p.grade_upper).fold(0.0, f64::max);
    for p in &mut pairs {
        if max_lower > 0.0 {
            p.grade_lower /= max_lower;
        }
        if max_upper > 0.0 {
            p.grade_upper /= max_upper;
        }
    }
    pairs
}
