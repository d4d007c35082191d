//! Discrepancies, potential discrepancies and the loci built from them.
//!
//! A pair `(X, Δ)` is a tower level `X` with a boundary `Δ` on it; the levels
//! above `X` serve as the log resolution. With `-f^*(K_X+Δ) = P + N` at the
//! top, the potential discrepancy of a top-level curve is
//! `pa = a - mult N`. On a surface `P` is nef, so blowing up a point on a
//! single curve `E_i` gives `pa_i + 1` and a point of `E_i ∩ E_j` gives
//! `pa_i + pa_j + 1`; every valuation is reached that way. Hence the infimum
//! over all valuations is the catalog minimum (clamped by `0` for curves of
//! `X` outside the catalog) when that minimum is at least `-1`, and `-∞`
//! otherwise.

use std::fmt;

use num::traits::{One, Signed, Zero};
use thiserror::Error;

use crate::lattice::{int, Rational};
use crate::rcc::{incidence_graph, IncidenceGraph};
use crate::surface::{BlowUpCenter, ModelError, RDivisor, SurfaceModel};
use crate::zariski::{zariski_decompose, ZariskiDecomposition, ZariskiError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PairError {
    #[error("-(K_X + Delta) is not pseudoeffective against catalog, or catalog incomplete: {0}")]
    NotPseudoeffective(String),
    #[error("boundary must be effective: {0}")]
    NotEffective(String),
    #[error("top level is not a log resolution: {}", .0.join("; "))]
    NotLogResolution(Vec<String>),
    #[error("epsilon must be non-negative, got {0}")]
    BadEpsilon(Rational),
    #[error("invariant violated (engine bug or incomplete catalog): {0}")]
    InvariantViolated(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<ZariskiError> for PairError {
    fn from(e: ZariskiError) -> Self {
        match e {
            ZariskiError::NotPseudoeffective(r) => PairError::NotPseudoeffective(r),
            ZariskiError::Model(m) => PairError::Model(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerEntry {
    /// Curve id at the top level.
    pub curve: String,
    pub genus: u32,
    /// Contracted to a point of `X`.
    pub exceptional_over_x: bool,
    pub a: Rational,
    pub sigma_num: Rational,
    pub pa: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscrepancyLedger {
    pub entries: Vec<LedgerEntry>,
}

impl DiscrepancyLedger {
    pub fn get(&self, curve: &str) -> Option<&LedgerEntry> {
        self.entries.iter().find(|e| e.curve == curve)
    }

    pub fn pa(&self, curve: &str) -> Option<&Rational> {
        self.get(curve).map(|e| &e.pa)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discrepancy {
    pub curve: String,
    pub a: Rational,
}

/// `𝔄(X, Δ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TotalDiscrepancy {
    Finite(Rational),
    NegInfinity,
}

impl TotalDiscrepancy {
    pub fn exceeds(&self, bound: &Rational) -> bool {
        matches!(self, TotalDiscrepancy::Finite(v) if v > bound)
    }

    pub fn at_least(&self, bound: &Rational) -> bool {
        matches!(self, TotalDiscrepancy::Finite(v) if v >= bound)
    }
}

impl fmt::Display for TotalDiscrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TotalDiscrepancy::Finite(v) => write!(f, "{v}"),
            TotalDiscrepancy::NegInfinity => f.write_str("-inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum LocusComponent {
    Curve { id: String, genus: u32 },
    /// Image of curves contracted over `X`. `on_curves` are the curves of `X`
    /// through the point.
    Point { label: String, on_curves: Vec<String> },
}

impl LocusComponent {
    pub fn name(&self) -> &str {
        match self {
            LocusComponent::Curve { id, .. } => id,
            LocusComponent::Point { label, .. } => label,
        }
    }

    pub fn genus(&self) -> u32 {
        match self {
            LocusComponent::Curve { genus, .. } => *genus,
            LocusComponent::Point { .. } => 0,
        }
    }

    pub fn is_point(&self) -> bool {
        matches!(self, LocusComponent::Point { .. })
    }
}

/// A closed subset of `X` as a union of curves and points. Points lying on a
/// listed curve are absorbed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Locus {
    pub whole_surface: bool,
    pub components: Vec<LocusComponent>,
}

impl Locus {
    pub fn whole() -> Self {
        Locus { whole_surface: true, components: Vec::new() }
    }

    fn from_components(mut comps: Vec<LocusComponent>) -> Self {
        comps.sort();
        comps.dedup();
        let curves: Vec<String> = comps
            .iter()
            .filter_map(|c| match c {
                LocusComponent::Curve { id, .. } => Some(id.clone()),
                _ => None,
            })
            .collect();
        comps.retain(|c| match c {
            LocusComponent::Point { on_curves, .. } => !on_curves.iter().any(|id| curves.contains(id)),
            _ => true,
        });
        Locus { whole_surface: false, components: comps }
    }

    pub fn is_empty(&self) -> bool {
        !self.whole_surface && self.components.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.components.iter().map(|c| c.name().to_string()).collect()
    }

    fn covers(&self, comp: &LocusComponent) -> bool {
        if self.whole_surface {
            return true;
        }
        match comp {
            LocusComponent::Curve { id, .. } => {
                self.components.iter().any(|c| matches!(c, LocusComponent::Curve { id: other, .. } if other == id))
            }
            LocusComponent::Point { label, on_curves } => self.components.iter().any(|c| match c {
                LocusComponent::Point { label: other, .. } => other == label,
                LocusComponent::Curve { id, .. } => on_curves.contains(id),
            }),
        }
    }

    /// Set inclusion `other ⊆ self`.
    pub fn contains(&self, other: &Locus) -> bool {
        if other.whole_surface {
            return self.whole_surface;
        }
        other.components.iter().all(|c| self.covers(c))
    }

    pub fn union(&self, other: &Locus) -> Locus {
        if self.whole_surface || other.whole_surface {
            return Locus::whole();
        }
        Locus::from_components(self.components.iter().chain(&other.components).cloned().collect())
    }

    pub fn intersection(&self, other: &Locus) -> Locus {
        if self.whole_surface {
            return other.clone();
        }
        if other.whole_surface {
            return self.clone();
        }
        let mut comps = Vec::new();
        for c in &self.components {
            match c {
                LocusComponent::Curve { .. } if other.covers(c) => comps.push(c.clone()),
                LocusComponent::Point { .. } if other.covers(c) => comps.push(c.clone()),
                _ => {}
            }
        }
        // A point of `other` on a curve kept only in `self`.
        for c in &other.components {
            if c.is_point() && self.covers(c) {
                comps.push(c.clone());
            }
        }
        Locus::from_components(comps)
    }
}

impl fmt::Display for Locus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.whole_surface {
            return f.write_str("X");
        }
        write!(f, "{{{}}}", self.names().join(", "))
    }
}

/// A pair `(X, Δ)` with `X` the tower level `pair_level`.
#[derive(Debug, Clone)]
pub struct PairSpec {
    model: SurfaceModel,
    pair_level: usize,
    delta: RDivisor,
    zariski: ZariskiDecomposition,
    big: bool,
}

impl PairSpec {
    /// Checks that `-(K_X+Δ)` is catalog-pseudoeffective and that the top
    /// level is a log resolution for `Supp Δ ∪ Supp N ∪ exceptionals`.
    pub fn new(model: SurfaceModel, pair_level: usize, delta: RDivisor) -> Result<PairSpec, PairError> {
        let pair = Self::build(model, pair_level, delta)?;
        #[cfg(debug_assertions)]
        debug_check_extra_blow_up(&pair);
        Ok(pair)
    }

    fn build(model: SurfaceModel, pair_level: usize, delta: RDivisor) -> Result<PairSpec, PairError> {
        model.check_divisor_at(&delta, pair_level)?;
        if !delta.is_effective() {
            return Err(PairError::NotEffective(delta.to_string()));
        }
        let x = model.level(pair_level)?;
        let anti = x.canonical.add(&model.class_of(&delta)?).map_err(ModelError::from)?.neg();
        let top = model.top_index();
        let pulled = model.pull_back(pair_level, top, &anti)?;
        let zariski = zariski_decompose(&model, top, &pulled)?;
        let big = model.top().form.square(&zariski.positive).map_err(ModelError::from)?.is_positive();

        let mut supports: Vec<String> = model.strict_transform(pair_level, top, &delta)?.support();
        supports.extend(zariski.negative.support());
        supports.extend(model.top().curves.iter().filter(|c| c.created_at > pair_level).map(|c| c.id.clone()));
        let issues = model.log_resolution_issues(&supports);
        if !issues.is_empty() {
            return Err(PairError::NotLogResolution(issues));
        }
        Ok(PairSpec { model, pair_level, delta, zariski, big })
    }

    pub fn model(&self) -> &SurfaceModel {
        &self.model
    }

    pub fn pair_level(&self) -> usize {
        self.pair_level
    }

    pub fn delta(&self) -> &RDivisor {
        &self.delta
    }

    /// Decomposition of `-f^*(K_X+Δ)` at the top level.
    pub fn zariski(&self) -> &ZariskiDecomposition {
        &self.zariski
    }

    /// Whether `-(K_X+Δ)` is big (against the catalog).
    pub fn is_big(&self) -> bool {
        self.big
    }

    /// Same model and level with a different boundary.
    pub fn with_delta(&self, delta: RDivisor) -> Result<PairSpec, PairError> {
        PairSpec::new(self.model.clone(), self.pair_level, delta)
    }
}

/// Birational stability: after blowing up a point on the curve of smallest
/// potential discrepancy every old value is unchanged and the new curve
/// gets `pa + 1`.
#[cfg(debug_assertions)]
fn debug_check_extra_blow_up(pair: &PairSpec) {
    let ledger = potential_ledger(pair);
    let Some(lowest) = ledger.entries.iter().min_by(|a, b| a.pa.cmp(&b.pa)) else { return };
    let k = pair.model.top_index() + 1;
    let center = BlowUpCenter::on(&lowest.curve).named(&format!("__check{k}"));
    let Ok(up) = pair.model.blow_up(&center) else { return };
    let Ok(higher) = PairSpec::build(up, pair.pair_level, pair.delta.clone()) else {
        panic!("extra blow-up broke the pair");
    };
    let after = potential_ledger(&higher);
    for e in &ledger.entries {
        let stem = &pair.model.top().curve(&e.curve).expect("catalog").stem;
        let moved = higher.model.top().curve_by_stem(stem).expect("persists");
        debug_assert_eq!(after.pa(&moved.id), Some(&e.pa), "pa of {} changed after blow-up", e.curve);
    }
    let new_pa = after.pa(&format!("__check{k}")).expect("new curve");
    debug_assert_eq!(new_pa, &(&lowest.pa + Rational::one()));
}

/// `a(E; X, Δ)` for every top-level curve: `-mult_Δ` for curves of `X`, and
/// `1 + Σ m_C a_C` over the curves through each center above `X`.
pub fn discrepancies(pair: &PairSpec) -> Vec<Discrepancy> {
    let model = &pair.model;
    let x = &model.levels()[pair.pair_level];
    let mut by_stem: Vec<(String, Rational)> =
        x.curves.iter().map(|c| (c.stem.clone(), -pair.delta.coeff(&c.id))).collect();
    let lookup = |table: &[(String, Rational)], stem: &str| {
        table.iter().find(|(s, _)| s == stem).map(|(_, v)| v.clone()).unwrap_or_else(Rational::zero)
    };
    for k in pair.pair_level + 1..=model.top_index() {
        let level = &model.levels()[k];
        let prev = &model.levels()[k - 1];
        let center = level.center.as_ref().expect("center");
        let mut a = Rational::one();
        for (id, m) in &center.incidences {
            let stem = &prev.curve(id).expect("resolved").stem;
            a += int(*m as i64) * lookup(&by_stem, stem);
        }
        by_stem.push((center.exceptional.clone(), a));
    }
    model
        .top()
        .curves
        .iter()
        .map(|c| Discrepancy { curve: c.id.clone(), a: lookup(&by_stem, &c.stem) })
        .collect()
}

pub fn potential_ledger(pair: &PairSpec) -> DiscrepancyLedger {
    let top = pair.model.top();
    let entries = discrepancies(pair)
        .into_iter()
        .map(|d| {
            let curve = top.curve(&d.curve).expect("catalog");
            let sigma = pair.zariski.negative.coeff(&d.curve);
            LedgerEntry {
                curve: d.curve,
                genus: curve.genus,
                exceptional_over_x: curve.created_at > pair.pair_level,
                pa: &d.a - &sigma,
                a: d.a,
                sigma_num: sigma,
            }
        })
        .collect();
    DiscrepancyLedger { entries }
}

pub fn total_potential_discrepancy(pair: &PairSpec) -> TotalDiscrepancy {
    total_from_ledger(&potential_ledger(pair))
}

fn total_from_ledger(ledger: &DiscrepancyLedger) -> TotalDiscrepancy {
    let m = ledger.entries.iter().map(|e| e.pa.clone()).fold(Rational::zero(), |acc, v| acc.min(v));
    if m >= int(-1) {
        TotalDiscrepancy::Finite(m)
    } else {
        TotalDiscrepancy::NegInfinity
    }
}

/// Smallest `pa + 1` over curves with `pa > -1`, capped at `1` (curves of `X`
/// outside the catalog have `pa = 0`). Below it every `ε-spNklt` equals `pNklt`.
pub fn stabilization_threshold(ledger: &DiscrepancyLedger) -> Rational {
    let minus_one = int(-1);
    ledger
        .entries
        .iter()
        .filter(|e| e.pa > minus_one)
        .map(|e| &e.pa + Rational::one())
        .fold(Rational::one(), |acc, v| acc.min(v))
}

/// The component of `X` that a top-level curve maps to.
pub fn image_on_x(pair: &PairSpec, top_id: &str) -> Result<LocusComponent, PairError> {
    let model = &pair.model;
    let curve = model.curve(model.top_index(), top_id)?;
    let x = &model.levels()[pair.pair_level];
    if curve.created_at <= pair.pair_level {
        let on_x = x.curve_by_stem(&curve.stem).expect("curves persist");
        return Ok(LocusComponent::Curve { id: on_x.id.clone(), genus: on_x.genus });
    }
    // Walk down infinitely-near chains to the first blow-up over this point.
    let mut root = curve.created_at;
    loop {
        let prev = &model.levels()[root - 1];
        let center = model.levels()[root].center.as_ref().expect("center");
        let parent = center
            .incidences
            .iter()
            .map(|(id, _)| prev.curve(id).expect("resolved"))
            .filter(|c| c.created_at > pair.pair_level)
            .map(|c| c.created_at)
            .min();
        match parent {
            Some(p) => root = p,
            None => break,
        }
    }
    let prev = &model.levels()[root - 1];
    let center = model.levels()[root].center.as_ref().expect("center");
    let mut on_curves: Vec<String> = center
        .incidences
        .iter()
        .map(|(id, _)| prev.curve(id).expect("resolved"))
        .filter(|c| c.created_at <= pair.pair_level)
        .map(|c| x.curve_by_stem(&c.stem).expect("persists").id.clone())
        .collect();
    on_curves.sort();
    Ok(LocusComponent::Point { label: center.point_label.clone(), on_curves })
}

fn locus_of<'a>(pair: &PairSpec, ids: impl Iterator<Item = &'a str>) -> Locus {
    let comps = ids.map(|id| image_on_x(pair, id).expect("top-level catalog curve")).collect();
    Locus::from_components(comps)
}

/// Centers of valuations with `a ≤ -1`.
pub fn nklt_locus(pair: &PairSpec) -> Locus {
    let minus_one = int(-1);
    let ds = discrepancies(pair);
    locus_of(pair, ds.iter().filter(|d| d.a <= minus_one).map(|d| d.curve.as_str()))
}

/// `Nnef(-(K_X+Δ))`: images of the support of `N`.
pub fn nnef_on_x(pair: &PairSpec) -> Locus {
    let support = pair.zariski.negative.support();
    locus_of(pair, support.iter().map(String::as_str))
}

pub fn pnklt_locus(pair: &PairSpec) -> Result<Locus, PairError> {
    eps_spnklt(pair, &Rational::zero())
}

/// Images of top-level curves with `pa ≤ -1 + ε`. Points over a single curve
/// or a node never add anything new; for `ε ≥ 1` every curve of `X`
/// qualifies.
pub fn eps_spnklt(pair: &PairSpec, eps: &Rational) -> Result<Locus, PairError> {
    if eps.is_negative() {
        return Err(PairError::BadEpsilon(eps.clone()));
    }
    if *eps >= Rational::one() {
        return Ok(Locus::whole());
    }
    let ledger = potential_ledger(pair);
    let bound = int(-1) + eps;
    if let Some(msg) = node_closure_violation(pair, &ledger, &bound) {
        return Err(PairError::InvariantViolated(msg));
    }
    Ok(locus_of(pair, ledger.entries.iter().filter(|e| e.pa <= bound).map(|e| e.curve.as_str())))
}

fn node_closure_violation(pair: &PairSpec, ledger: &DiscrepancyLedger, bound: &Rational) -> Option<String> {
    let top = pair.model.top();
    for (i, a) in ledger.entries.iter().enumerate() {
        for b in &ledger.entries[i + 1..] {
            if a.pa <= *bound || b.pa <= *bound {
                continue;
            }
            let ca = &top.curve(&a.curve)?.class;
            let cb = &top.curve(&b.curve)?.class;
            if top.intersect(ca, cb).ok()?.is_positive() && &a.pa + &b.pa + Rational::one() <= *bound {
                return Some(format!("node {} ∩ {} drops below the bound", a.curve, b.curve));
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairFlags {
    pub klt: bool,
    pub lc: bool,
    pub potentially_klt: bool,
    pub potentially_lc: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PotentialReport {
    pub ledger: DiscrepancyLedger,
    pub frak_a: TotalDiscrepancy,
    pub nklt: Locus,
    pub pnklt: Locus,
    pub nnef: Locus,
    pub eps0: Rational,
    pub eps_table: Vec<(Rational, Locus)>,
    pub flags: PairFlags,
    pub big: bool,
}

pub fn classify_pair(pair: &PairSpec, eps: &[Rational]) -> Result<PotentialReport, PairError> {
    let ledger = potential_ledger(pair);
    let frak_a = total_from_ledger(&ledger);
    let minus_one = int(-1);
    let flags = PairFlags {
        klt: ledger.entries.iter().all(|e| e.a > minus_one),
        lc: ledger.entries.iter().all(|e| e.a >= minus_one),
        potentially_klt: frak_a.exceeds(&minus_one),
        potentially_lc: frak_a.at_least(&minus_one),
    };
    let mut eps_table = Vec::new();
    for e in eps {
        eps_table.push((e.clone(), eps_spnklt(pair, e)?));
    }
    let report = PotentialReport {
        eps0: stabilization_threshold(&ledger),
        nklt: nklt_locus(pair),
        pnklt: pnklt_locus(pair)?,
        nnef: nnef_on_x(pair),
        ledger,
        frak_a,
        eps_table,
        flags,
        big: pair.big,
    };
    let problems = report_invariant_violations(pair, &report);
    if !problems.is_empty() {
        return Err(PairError::InvariantViolated(problems.join("; ")));
    }
    Ok(report)
}

/// Structural facts every report must satisfy.
pub fn report_invariant_violations(pair: &PairSpec, report: &PotentialReport) -> Vec<String> {
    let mut out = Vec::new();
    for e in &report.ledger.entries {
        if e.pa != &e.a - &e.sigma_num {
            out.push(format!("pa != a - sigma for {}", e.curve));
        }
        if e.sigma_num.is_negative() {
            out.push(format!("negative sigma for {}", e.curve));
        }
    }
    let f = &report.flags;
    if f.potentially_klt && !f.klt {
        out.push("potentially klt but not klt".into());
    }
    if f.potentially_lc && !f.lc {
        out.push("potentially lc but not lc".into());
    }
    if f.potentially_klt != report.pnklt.is_empty() {
        out.push("potentially klt disagrees with empty pNklt".into());
    }
    if !report.pnklt.contains(&report.nklt) {
        out.push(format!("Nklt {} not inside pNklt {}", report.nklt, report.pnklt));
    }
    if !report.nklt.union(&report.nnef).contains(&report.pnklt) {
        out.push(format!("pNklt {} not inside Nklt ∪ Nnef", report.pnklt));
    }
    for (eps, locus) in &report.eps_table {
        if !locus.contains(&report.pnklt) {
            out.push(format!("{eps}-spNklt does not contain pNklt"));
        }
        if *eps < report.eps0 && *locus != report.pnklt {
            out.push(format!("{eps}-spNklt differs from pNklt below the threshold"));
        }
    }
    if report.big && !report.pnklt.whole_surface && !incidence_graph(pair, &report.pnklt.components).is_connected() {
        out.push(format!("pNklt {} is disconnected although -(K+Delta) is big", report.pnklt));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FanoVerdict {
    pub fano_type: bool,
    pub anticanonical_big: bool,
    /// Negative part of `-K_X`; `None` if `-K_X` is not pseudoeffective.
    pub negative_part: Option<RDivisor>,
    pub pair_klt: bool,
    pub pair_potentially_klt: bool,
    pub reason: String,
}

/// Fano type iff `-K_X` is big and `(X, N)` is klt. Cross-checked against
/// `(X, N)` being potentially klt, which is equivalent in dimension two.
pub fn fano_type_test(model: &SurfaceModel, level: usize) -> Result<FanoVerdict, PairError> {
    let anti = model.anticanonical(level)?;
    let z = match zariski_decompose(model, level, &anti) {
        Ok(z) => z,
        Err(ZariskiError::NotPseudoeffective(r)) => {
            return Ok(FanoVerdict {
                fano_type: false,
                anticanonical_big: false,
                negative_part: None,
                pair_klt: false,
                pair_potentially_klt: false,
                reason: format!("-K is not pseudoeffective against catalog: {r}"),
            })
        }
        Err(e) => return Err(e.into()),
    };
    let big = model.level(level)?.form.square(&z.positive).map_err(ModelError::from)?.is_positive();
    let pair = PairSpec::new(model.clone(), level, z.negative.clone())?;
    let report = classify_pair(&pair, &[])?;
    if report.flags.klt != report.flags.potentially_klt {
        return Err(PairError::InvariantViolated("(X, N) klt and potentially klt disagree".into()));
    }
    let fano_type = big && report.flags.klt;
    let reason = match (big, report.flags.klt) {
        (true, true) => "-K big and (X, N) klt".to_string(),
        (false, _) => "-K is not big".to_string(),
        (true, false) => {
            let bad: Vec<String> = report
                .ledger
                .entries
                .iter()
                .filter(|e| e.a <= int(-1))
                .map(|e| format!("a({}) = {}", e.curve, e.a))
                .collect();
            format!("(X, N) is not klt: {}", bad.join(", "))
        }
    };
    Ok(FanoVerdict {
        fano_type,
        anticanonical_big: big,
        negative_part: Some(z.negative),
        pair_klt: report.flags.klt,
        pair_potentially_klt: report.flags.potentially_klt,
        reason,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotonicityReport {
    /// `(curve, pa with Δ, pa with Δ + Δ')`.
    pub entries: Vec<(String, Rational, Rational)>,
    pub violations: Vec<String>,
}

/// `pa(σ; X, Δ) ≥ pa(σ; X, Δ + Δ')` for every top-level curve.
pub fn check_monotonicity(pair: &PairSpec, extra: &RDivisor) -> Result<MonotonicityReport, PairError> {
    if !extra.is_effective() {
        return Err(PairError::NotEffective(extra.to_string()));
    }
    pair.model.check_divisor_at(extra, pair.pair_level)?;
    let bigger = pair.with_delta(pair.delta.add(extra))?;
    let before = potential_ledger(pair);
    let after = potential_ledger(&bigger);
    let mut report = MonotonicityReport { entries: Vec::new(), violations: Vec::new() };
    for (b, a) in before.entries.iter().zip(&after.entries) {
        debug_assert_eq!(b.curve, a.curve);
        if b.pa < a.pa {
            report.violations.push(format!("{}: {} < {}", b.curve, b.pa, a.pa));
        }
        report.entries.push((b.curve.clone(), b.pa.clone(), a.pa.clone()));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitReport {
    pub loci: Vec<Locus>,
    pub limit: Locus,
    pub intersection: Locus,
    pub divisors_decreasing: bool,
    pub loci_decreasing: bool,
    pub limit_contained: bool,
    /// First index from which every locus equals the limit.
    pub stabilized_at: Option<usize>,
}

impl LimitReport {
    pub fn holds(&self) -> bool {
        self.divisors_decreasing && self.loci_decreasing && self.limit_contained && self.intersection == self.limit
    }
}

fn dominates(a: &RDivisor, b: &RDivisor) -> bool {
    a.terms().keys().chain(b.terms().keys()).all(|id| a.coeff(id) >= b.coeff(id))
}

/// `pNklt(X, Δ) = ∩ pNklt(X, Δ_i)` on a finite prefix of a decreasing sequence.
pub fn check_intersection_limit(pair: &PairSpec, deltas: &[RDivisor]) -> Result<LimitReport, PairError> {
    let limit = pnklt_locus(pair)?;
    let mut loci = Vec::with_capacity(deltas.len());
    for d in deltas {
        let p = pair.with_delta(d.clone())?;
        loci.push(pnklt_locus(&p)?);
    }
    let divisors_decreasing = deltas.windows(2).all(|w| dominates(&w[0], &w[1]))
        && deltas.iter().all(|d| dominates(d, &pair.delta));
    let loci_decreasing = loci.windows(2).all(|w| w[0].contains(&w[1]));
    let limit_contained = loci.iter().all(|l| l.contains(&limit));
    let intersection = loci.iter().fold(Locus::whole(), |acc, l| acc.intersection(l));
    let stabilized_at = (0..loci.len()).find(|&i| loci[i..].iter().all(|l| *l == limit));
    Ok(LimitReport { loci, limit, intersection, divisors_decreasing, loci_decreasing, limit_contained, stabilized_at })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessReport {
    /// `f^*D ≥ N` at the top level.
    pub dominates_negative_part: bool,
    pub eps: Rational,
    pub eps_locus: Locus,
    pub nklt_with_witness: Locus,
}

impl WitnessReport {
    pub fn holds(&self) -> bool {
        !self.dominates_negative_part || self.nklt_with_witness.contains(&self.eps_locus)
    }
}

/// For an effective `D` on `X` with `f^*D ≥ N`, checks
/// `ε-spNklt(X, Δ) ⊆ Nklt(X, Δ + D)` at `ε` half the stabilization threshold.
pub fn check_witness(pair: &PairSpec, witness: &RDivisor) -> Result<WitnessReport, PairError> {
    if !witness.is_effective() {
        return Err(PairError::NotEffective(witness.to_string()));
    }
    let model = &pair.model;
    let top = model.top_index();
    let pulled = model.pull_back_divisor(pair.pair_level, top, witness)?;
    let dominates_negative_part = dominates(&pulled, &pair.zariski.negative);
    let mut supports = model.strict_transform(pair.pair_level, top, &pair.delta.add(witness))?.support();
    supports.extend(model.top().curves.iter().filter(|c| c.created_at > pair.pair_level).map(|c| c.id.clone()));
    let issues = model.log_resolution_issues(&supports);
    if !issues.is_empty() {
        return Err(PairError::NotLogResolution(issues));
    }
    let ledger = potential_ledger(pair);
    let eps = stabilization_threshold(&ledger) / int(2);
    let eps_locus = eps_spnklt(pair, &eps)?;
    let minus_one = int(-1);
    let with_witness: Vec<String> = discrepancies(pair)
        .into_iter()
        .filter(|d| &d.a - pulled.coeff(&d.curve) <= minus_one)
        .map(|d| d.curve)
        .collect();
    let nklt_with_witness = locus_of(pair, with_witness.iter().map(String::as_str));
    Ok(WitnessReport { dominates_negative_part, eps, eps_locus, nklt_with_witness })
}

/// Incidence graph of `pNklt`, exposed for the rcc layer.
pub fn pnklt_graph(pair: &PairSpec) -> Result<IncidenceGraph, PairError> {
    Ok(incidence_graph(pair, &pnklt_locus(pair)?.components))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::rat;
    use crate::surface::{BaseCurve, BaseSpec};

    fn ruled(g: u32, e: u32) -> SurfaceModel {
        SurfaceModel::make_base(BaseSpec::ruled(g, e)).unwrap()
    }

    fn improvebp_pair(g: u32, e: u32) -> PairSpec {
        let m = ruled(g, e).blow_up(&BlowUpCenter::on("C0")).unwrap();
        PairSpec::new(m, 1, RDivisor::zero(1)).unwrap()
    }

    fn plane_with(curves: Vec<BaseCurve>) -> SurfaceModel {
        SurfaceModel::make_base(BaseSpec::ProjectivePlane { curves }).unwrap()
    }

    fn cubic_pair() -> PairSpec {
        let mut m = plane_with(vec![BaseCurve::new("C", &[3], 1)]);
        for _ in 0..12 {
            m = m.blow_up(&BlowUpCenter::on("C")).unwrap();
        }
        PairSpec::new(m, 12, RDivisor::zero(12)).unwrap()
    }

    fn curve(id: &str, genus: u32) -> LocusComponent {
        LocusComponent::Curve { id: id.into(), genus }
    }

    #[test]
    fn discrepancy_examples() {
        let p2 = plane_with(vec![]);
        let pair = PairSpec::new(p2.clone(), 0, p2.divisor(0, &[("L", rat(3, 2))]).unwrap());
        // -(K + 3/2 L) = 3/2 L is still ample.
        let pair = pair.unwrap();
        assert_eq!(discrepancies(&pair), vec![Discrepancy { curve: "L".into(), a: rat(-3, 2) }]);

        let m = ruled(2, 3).blow_up(&BlowUpCenter::on("C0")).unwrap();
        let pair = PairSpec::new(m, 0, RDivisor::zero(0)).unwrap();
        let ds = discrepancies(&pair);
        assert_eq!(ds.iter().find(|d| d.curve == "E1").unwrap().a, int(1));

        let m = p2.blow_up(&BlowUpCenter::on("L")).unwrap();
        let pair = PairSpec::new(m.clone(), 0, m.divisor(0, &[("L", rat(3, 2))]).unwrap()).unwrap();
        let ds = discrepancies(&pair);
        assert_eq!(ds.iter().find(|d| d.curve == "E1").unwrap().a, rat(-1, 2));
        assert_eq!(ds.iter().find(|d| d.curve == "L~").unwrap().a, rat(-3, 2));
    }

    // K_Y - f^*(K_X + Δ) = Σ a_C [C] over all top curves, solved independently.
    #[test]
    fn discrepancies_match_canonical_class_equation() {
        let m = plane_with(vec![BaseCurve::new("L1", &[1], 0), BaseCurve::new("L2", &[1], 0)])
            .blow_up(&BlowUpCenter::on("L1").with("L2", 1))
            .unwrap()
            .blow_up(&BlowUpCenter::on("E1").with("L1", 1))
            .unwrap()
            .blow_up(&BlowUpCenter::on("E2"))
            .unwrap();
        let delta = m.divisor(0, &[("L1", rat(1, 2)), ("L2", rat(1, 3))]).unwrap();
        let pair = PairSpec::new(m.clone(), 0, delta.clone()).unwrap();
        let top = m.top();
        let kx_delta = m.levels()[0].canonical.add(&m.class_of(&delta).unwrap()).unwrap();
        let lhs = top.canonical.sub(&m.pull_back(0, 3, &kx_delta).unwrap()).unwrap();
        let rhs = discrepancies(&pair)
            .iter()
            .fold(top.form.zero(), |acc, d| acc.add_scaled(&d.a, &top.curve(&d.curve).unwrap().class).unwrap());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn ledger_examples() {
        let pair = improvebp_pair(2, 3);
        let ledger = potential_ledger(&pair);
        assert_eq!(ledger.pa("C0~"), Some(&rat(-5, 3)));
        assert_eq!(ledger.pa("E1"), Some(&rat(-2, 3)));
        assert_eq!(ledger.pa("f"), Some(&int(0)));

        let f3 = ruled(0, 3);
        let pair = PairSpec::new(f3, 0, RDivisor::zero(0)).unwrap();
        assert_eq!(potential_ledger(&pair).pa("C0"), Some(&rat(-1, 3)));

        let p2 = plane_with(vec![]);
        let pair = PairSpec::new(p2, 0, RDivisor::zero(0)).unwrap();
        let ledger = potential_ledger(&pair);
        assert!(ledger.entries.iter().all(|e| !e.pa.is_negative()));
        assert!(pair.zariski().negative.is_zero());
    }

    #[test]
    fn total_discrepancy_examples() {
        let p2 = PairSpec::new(plane_with(vec![]), 0, RDivisor::zero(0)).unwrap();
        assert_eq!(total_potential_discrepancy(&p2), TotalDiscrepancy::Finite(int(0)));
        let f3 = PairSpec::new(ruled(0, 3), 0, RDivisor::zero(0)).unwrap();
        assert_eq!(total_potential_discrepancy(&f3), TotalDiscrepancy::Finite(rat(-1, 3)));
        assert_eq!(total_potential_discrepancy(&improvebp_pair(2, 3)), TotalDiscrepancy::NegInfinity);
        assert_eq!(total_potential_discrepancy(&cubic_pair()), TotalDiscrepancy::Finite(int(-1)));
    }

    // Five blow-ups at E_new ∩ C0~ recomputed from scratch: pa = k(pa(C0~) + 1).
    #[test]
    fn divergence_under_iterated_blow_ups() {
        let mut pair = improvebp_pair(2, 3);
        let mut last: Option<Rational> = None;
        let mut prev_e = String::new();
        for k in 1..=5 {
            let center = if k == 1 { BlowUpCenter::on("C0") } else { BlowUpCenter::on("C0").with(&prev_e, 1) };
            let id = format!("F{k}");
            let m = pair.model().blow_up(&center.named(&id)).unwrap();
            pair = PairSpec::new(m, 1, RDivisor::zero(1)).unwrap();
            let ledger = potential_ledger(&pair);
            let pa = ledger.pa(&id).unwrap().clone();
            assert_eq!(pa, rat(-2 * k, 3));
            assert_eq!(ledger.pa("C0~"), Some(&rat(-5, 3)));
            if let Some(l) = &last {
                assert!(pa < *l);
            }
            last = Some(pa);
            prev_e = id;
        }
    }

    #[test]
    fn nklt_examples() {
        let p2 = plane_with(vec![]);
        let pair = PairSpec::new(p2.clone(), 0, p2.divisor(0, &[("L", rat(3, 2))]).unwrap()).unwrap();
        assert_eq!(nklt_locus(&pair).components, vec![curve("L", 0)]);
        assert!(nklt_locus(&improvebp_pair(2, 3)).is_empty());

        let lines = plane_with(vec![BaseCurve::new("L1", &[1], 0), BaseCurve::new("L2", &[1], 0), BaseCurve::new("L3", &[1], 0)]);
        let m = lines.blow_up(&BlowUpCenter::on("L1").with("L2", 1).with("L3", 1)).unwrap();
        let delta = m.divisor(0, &[("L1", int(1)), ("L2", int(1)), ("L3", int(1))]).unwrap();
        let pair = PairSpec::new(m.clone(), 0, delta).unwrap();
        assert_eq!(discrepancies(&pair).iter().find(|d| d.curve == "E1").unwrap().a, int(-2));
        // With coefficient 2/3 each: a(E) = 1 - 2 = -1, lines stay klt.
        let delta = m.divisor(0, &[("L1", rat(2, 3)), ("L2", rat(2, 3)), ("L3", rat(2, 3))]).unwrap();
        let pair = PairSpec::new(m, 0, delta).unwrap();
        let locus = nklt_locus(&pair);
        assert_eq!(locus.components.len(), 1);
        assert!(locus.components[0].is_point());
    }

    #[test]
    fn pnklt_examples() {
        let pair = improvebp_pair(2, 3);
        assert_eq!(pnklt_locus(&pair).unwrap().components, vec![curve("C0~", 2)]);
        assert_eq!(nnef_on_x(&pair).names(), vec!["C0~", "E1"]);

        let f3 = ruled(0, 3);
        let n = f3.divisor(0, &[("C0", rat(1, 3))]).unwrap();
        let pair = PairSpec::new(f3, 0, n).unwrap();
        assert!(pnklt_locus(&pair).unwrap().is_empty());
        assert!(nklt_locus(&pair).is_empty());
        assert!(nnef_on_x(&pair).is_empty());

        assert_eq!(pnklt_locus(&cubic_pair()).unwrap().components, vec![curve("C~", 1)]);
    }

    #[test]
    fn eps_examples() {
        let pair = improvebp_pair(2, 3);
        assert_eq!(eps_spnklt(&pair, &rat(1, 6)).unwrap().names(), vec!["C0~"]);
        assert_eq!(eps_spnklt(&pair, &rat(1, 2)).unwrap().names(), vec!["C0~", "E1"]);
        assert_eq!(eps_spnklt(&pair, &int(0)).unwrap(), pnklt_locus(&pair).unwrap());
        assert!(eps_spnklt(&pair, &int(1)).unwrap().whole_surface);
        assert!(matches!(eps_spnklt(&pair, &rat(-1, 2)), Err(PairError::BadEpsilon(_))));
        assert_eq!(stabilization_threshold(&potential_ledger(&pair)), rat(1, 3));
    }

    #[test]
    fn classification_examples() {
        let f3 = PairSpec::new(ruled(0, 3), 0, RDivisor::zero(0)).unwrap();
        let r = classify_pair(&f3, &[]).unwrap();
        assert!(r.flags.klt && r.flags.potentially_klt);

        let r = classify_pair(&improvebp_pair(2, 3), &[rat(1, 6)]).unwrap();
        assert!(r.flags.klt && !r.flags.potentially_lc);
        assert_eq!(r.frak_a, TotalDiscrepancy::NegInfinity);

        let r = classify_pair(&cubic_pair(), &[]).unwrap();
        assert!(r.flags.klt && r.flags.potentially_lc && !r.flags.potentially_klt);
        assert!(!r.big);
    }

    #[test]
    fn fano_examples() {
        assert!(fano_type_test(&ruled(0, 3), 0).unwrap().fano_type);
        let v = fano_type_test(&ruled(2, 3), 0).unwrap();
        assert!(!v.fano_type && v.anticanonical_big && !v.pair_klt);
        let pair = cubic_pair();
        let v = fano_type_test(pair.model(), 12).unwrap();
        assert!(!v.fano_type && !v.anticanonical_big);
        let v = fano_type_test(&ruled(0, 1).blow_up(&BlowUpCenter::free()).unwrap(), 1).unwrap();
        assert!(v.fano_type);
        // -L is not pseudoeffective-looking, but -K on P^2 is ample.
        assert!(fano_type_test(&plane_with(vec![]), 0).unwrap().fano_type);
    }

    #[test]
    fn monotonicity_examples() {
        let r23 = ruled(2, 3);
        let pair = PairSpec::new(r23.clone(), 0, RDivisor::zero(0)).unwrap();
        let extra = r23.divisor(0, &[("f", rat(1, 3))]).unwrap();
        let report = check_monotonicity(&pair, &extra).unwrap();
        assert!(report.violations.is_empty());
        let c0 = report.entries.iter().find(|e| e.0 == "C0").unwrap();
        assert_eq!((&c0.1, &c0.2), (&rat(-5, 3), &rat(-16, 9)));
        let same = check_monotonicity(&pair, &RDivisor::zero(0)).unwrap();
        assert!(same.entries.iter().all(|(_, a, b)| a == b));

        let p2 = plane_with(vec![]);
        let pair = PairSpec::new(p2.clone(), 0, RDivisor::zero(0)).unwrap();
        let report = check_monotonicity(&pair, &p2.divisor(0, &[("L", rat(1, 2))]).unwrap()).unwrap();
        assert_eq!(report.entries, vec![("L".into(), int(0), rat(-1, 2))]);
    }

    #[test]
    fn intersection_limit_examples() {
        let pair = improvebp_pair(2, 3);
        let m = pair.model().clone();
        let deltas: Vec<RDivisor> = (1..=8).map(|i| m.divisor(1, &[("f", rat(1, i))]).unwrap()).collect();
        let report = check_intersection_limit(&pair, &deltas).unwrap();
        assert!(report.holds(), "{report:?}");
        assert!(report.loci.iter().all(|l| l.names().contains(&"C0~".to_string())));
        assert_eq!(report.intersection.names(), vec!["C0~"]);

        let constant = vec![RDivisor::zero(1); 3];
        let report = check_intersection_limit(&pair, &constant).unwrap();
        assert!(report.holds());
        assert_eq!(report.stabilized_at, Some(0));
    }

    #[test]
    fn witness_examples() {
        let pair = improvebp_pair(2, 3);
        let n = pair.zariski().negative.clone();
        let report = check_witness(&pair, &n).unwrap();
        assert!(report.dominates_negative_part && report.holds());
        assert_eq!(report.nklt_with_witness.names(), vec!["C0~"]);
        let bigger = pair.model().divisor(1, &[("C0~", int(2)), ("E1", int(1))]).unwrap();
        let report = check_witness(&pair, &bigger).unwrap();
        assert!(report.holds());
        assert_eq!(report.nklt_with_witness.names(), vec!["C0~", "E1"]);
    }

    #[test]
    fn rejects_non_pseudoeffective_pairs() {
        let r23 = ruled(2, 3);
        let delta = r23.divisor(0, &[("f", int(2))]).unwrap();
        assert!(matches!(PairSpec::new(r23.clone(), 0, delta), Err(PairError::NotPseudoeffective(_))));
        let neg = r23.divisor(0, &[("f", int(-1))]).unwrap();
        assert!(matches!(PairSpec::new(r23, 0, neg), Err(PairError::NotEffective(_))));
    }

    #[test]
    fn locus_set_operations() {
        let p = LocusComponent::Point { label: "p".into(), on_curves: vec!["A".into()] };
        let a = Locus::from_components(vec![curve("A", 0), p.clone()]);
        assert_eq!(a.components, vec![curve("A", 0)]);
        let just_p = Locus::from_components(vec![p]);
        assert!(a.contains(&just_p));
        assert!(!just_p.contains(&a));
        assert_eq!(a.intersection(&just_p), just_p);
        assert!(Locus::whole().contains(&a));
    }
}
