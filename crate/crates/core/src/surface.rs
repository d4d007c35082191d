//! Smooth surfaces presented as towers of point blow-ups over a model base.
//!
//! Level `k` has basis `(base basis, e_1, …, e_k)` where `e_i` is the total
//! transform of the `i`-th exceptional curve, so the Gram matrix is the base
//! form followed by `-1`s on the diagonal. Pulling a class up one level pads a
//! zero coordinate; pushing it down drops the last one.
//!
//! Points are combinatorial: a center is described only by which catalog
//! curves pass through it and with what multiplicity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::traits::{One, Signed, Zero};
use thiserror::Error;

use crate::lattice::{int, inertia, DivisorClass, IntersectionForm, LatticeError, Matrix, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("invalid base: {0}")]
    InvalidBase(String),
    #[error("unknown curve {id:?} at level {level}")]
    UnknownCurve { id: String, level: usize },
    #[error("level {level} out of range (model has levels 0..={top})")]
    LevelOutOfRange { level: usize, top: usize },
    #[error("levels {from} -> {to} go the wrong way for this map")]
    WrongDirection { from: usize, to: usize },
    #[error("intersection budget exceeded for pair ({a}, {b}): intersection number {available}, center needs {required}")]
    BudgetExceeded { a: String, b: String, available: Rational, required: Rational },
    #[error("invalid center: {0}")]
    InvalidCenter(String),
    #[error("duplicate curve id {0:?}")]
    DuplicateId(String),
    #[error("cannot blow down a single-level model")]
    NothingToBlowDown,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// A curve declared on the base surface, with its class in base coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseCurve {
    pub id: String,
    pub class: Vec<Rational>,
    pub genus: u32,
}

impl BaseCurve {
    pub fn new(id: impl Into<String>, class: &[i64], genus: u32) -> Self {
        BaseCurve { id: id.into(), class: class.iter().map(|&c| int(c)).collect(), genus }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaseSpec {
    /// `P^2` with basis `{L}`. An empty curve list means the single line `L`.
    ProjectivePlane { curves: Vec<BaseCurve> },
    /// `P(O ⊕ O(-A))` over a genus-`genus` curve, basis `{C0, f}`, `C0^2 = -e`.
    /// The catalog always holds `C0` and `f`; `extra` adds further curves.
    Ruled { genus: u32, e: u32, extra: Vec<BaseCurve> },
    AbstractLattice { gram: Matrix, canonical: Vec<Rational>, curves: Vec<BaseCurve> },
}

impl BaseSpec {
    pub fn plane() -> Self {
        BaseSpec::ProjectivePlane { curves: Vec::new() }
    }

    pub fn ruled(genus: u32, e: u32) -> Self {
        BaseSpec::Ruled { genus, e, extra: Vec::new() }
    }

    fn gram(&self) -> Matrix {
        match self {
            BaseSpec::ProjectivePlane { .. } => Matrix::from_i64(&[&[1]]),
            BaseSpec::Ruled { e, .. } => Matrix::from_i64(&[&[-(*e as i64), 1], &[1, 0]]),
            BaseSpec::AbstractLattice { gram, .. } => gram.clone(),
        }
    }

    fn canonical(&self) -> Vec<Rational> {
        match self {
            BaseSpec::ProjectivePlane { .. } => vec![int(-3)],
            BaseSpec::Ruled { genus, e, .. } => vec![int(-2), int(2 * *genus as i64 - 2 - *e as i64)],
            BaseSpec::AbstractLattice { canonical, .. } => canonical.clone(),
        }
    }

    fn catalog(&self) -> Vec<BaseCurve> {
        match self {
            BaseSpec::ProjectivePlane { curves } if curves.is_empty() => vec![BaseCurve::new("L", &[1], 0)],
            BaseSpec::ProjectivePlane { curves } => curves.clone(),
            BaseSpec::Ruled { genus, extra, .. } => {
                let mut v = vec![BaseCurve::new("C0", &[1, 0], *genus), BaseCurve::new("f", &[0, 1], 0)];
                v.extend(extra.iter().cloned());
                v
            }
            BaseSpec::AbstractLattice { curves, .. } => curves.clone(),
        }
    }

    /// Whether the surface is rationally chain connected, read off the base.
    /// Only meaningful for the plane and ruled bases; test oracle use.
    pub fn known_rcc(&self) -> Option<bool> {
        match self {
            BaseSpec::ProjectivePlane { .. } => Some(true),
            BaseSpec::Ruled { genus, .. } => Some(*genus == 0),
            BaseSpec::AbstractLattice { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Base,
    Exceptional,
    StrictTransform,
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveKind::Base => "base-curve",
            CurveKind::Exceptional => "exceptional",
            CurveKind::StrictTransform => "strict-transform",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Curve {
    /// Display id at this level; gains a `~` once a center has been blown up on it.
    pub id: String,
    /// Stable name shared by a curve and all its strict transforms.
    pub stem: String,
    pub class: DivisorClass,
    pub genus: u32,
    pub kind: CurveKind,
    /// Id of the curve one level down that this is the strict transform of.
    pub origin: Option<String>,
    /// Level at which the curve first appears (0 for base curves).
    pub created_at: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incidence {
    pub curve: String,
    pub multiplicity: u32,
}

/// A point to blow up, described by incidence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BlowUpCenter {
    pub on_curves: Vec<Incidence>,
    /// Exceptional curve this point is infinitely near to (lies on).
    pub infinitely_near: Option<String>,
    pub point_label: String,
    /// Id for the new exceptional curve; `E{k}` when absent.
    pub exceptional_id: Option<String>,
}

impl BlowUpCenter {
    /// A point on no catalog curve.
    pub fn free() -> Self {
        BlowUpCenter::default()
    }

    /// A smooth point of `curve`.
    pub fn on(curve: &str) -> Self {
        BlowUpCenter::free().with(curve, 1)
    }

    pub fn with(mut self, curve: &str, multiplicity: u32) -> Self {
        self.on_curves.push(Incidence { curve: curve.to_string(), multiplicity });
        self
    }

    pub fn near(mut self, exceptional: &str) -> Self {
        self.infinitely_near = Some(exceptional.to_string());
        self
    }

    pub fn named(mut self, id: &str) -> Self {
        self.exceptional_id = Some(id.to_string());
        self
    }
}

/// The center of a blow-up after ids have been resolved against the level below.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedCenter {
    pub exceptional: String,
    pub point_label: String,
    /// `(exact curve id at level k-1, multiplicity)`.
    pub incidences: Vec<(String, u32)>,
}

impl ResolvedCenter {
    pub fn multiplicity_on(&self, id: &str) -> u32 {
        self.incidences.iter().find(|(c, _)| c == id).map_or(0, |(_, m)| *m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    pub index: usize,
    pub form: IntersectionForm,
    pub canonical: DivisorClass,
    pub curves: Vec<Curve>,
    /// The blow-up that produced this level from the previous one.
    pub center: Option<ResolvedCenter>,
}

impl Level {
    pub fn curve(&self, name: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.id == name).or_else(|| self.curves.iter().find(|c| c.stem == name))
    }

    pub fn curve_by_stem(&self, stem: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.stem == stem)
    }

    pub fn intersect(&self, a: &DivisorClass, b: &DivisorClass) -> Result<Rational, LatticeError> {
        self.form.intersect(a, b)
    }

    /// Arithmetic genus of a class by adjunction, `1 + (C^2 + K·C)/2`.
    pub fn arithmetic_genus(&self, class: &DivisorClass) -> Result<Rational, LatticeError> {
        let c2 = self.form.square(class)?;
        let kc = self.form.intersect(&self.canonical, class)?;
        Ok(Rational::one() + (c2 + kc) / int(2))
    }
}

/// Finitely supported rational combination of catalog curves at one level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RDivisor {
    pub level: usize,
    terms: BTreeMap<String, Rational>,
}

impl RDivisor {
    pub fn zero(level: usize) -> Self {
        RDivisor { level, terms: BTreeMap::new() }
    }

    pub fn from_terms(level: usize, terms: impl IntoIterator<Item = (String, Rational)>) -> Self {
        let mut d = RDivisor::zero(level);
        for (id, c) in terms {
            d.add_term(&id, &c);
        }
        d
    }

    pub fn with(mut self, id: &str, coeff: Rational) -> Self {
        self.add_term(id, &coeff);
        self
    }

    pub fn add_term(&mut self, id: &str, coeff: &Rational) {
        let entry = self.terms.entry(id.to_string()).or_insert_with(Rational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(id);
        }
    }

    pub fn coeff(&self, id: &str) -> Rational {
        self.terms.get(id).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> &BTreeMap<String, Rational> {
        &self.terms
    }

    pub fn support(&self) -> Vec<String> {
        self.terms.keys().cloned().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_effective(&self) -> bool {
        self.terms.values().all(|c| !c.is_negative())
    }

    pub fn add(&self, other: &RDivisor) -> RDivisor {
        assert_eq!(self.level, other.level, "divisors live on different levels");
        let mut out = self.clone();
        for (id, c) in &other.terms {
            out.add_term(id, c);
        }
        out
    }

    pub fn scale(&self, r: &Rational) -> RDivisor {
        RDivisor::from_terms(self.level, self.terms.iter().map(|(k, v)| (k.clone(), v * r)))
    }
}

impl fmt::Display for RDivisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (id, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({c}){id}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub level: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Whether the whole top-level catalog forms a simple normal crossing
    /// configuration as far as the declared incidences can tell.
    pub log_resolution_ready: bool,
    pub readiness_issues: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurfaceModel {
    base: BaseSpec,
    levels: Vec<Level>,
}

fn pad(c: &DivisorClass, form: &IntersectionForm, last: Rational) -> DivisorClass {
    let mut coeffs = c.coeffs().to_vec();
    coeffs.push(last);
    DivisorClass::relabel(form.id(), coeffs)
}

impl SurfaceModel {
    pub fn make_base(spec: BaseSpec) -> Result<SurfaceModel, ModelError> {
        if let BaseSpec::Ruled { e, .. } = &spec {
            if *e == 0 {
                return Err(ModelError::InvalidBase("ruled base requires e > 0".into()));
            }
        }
        let gram = spec.gram();
        if gram.rows() == 0 {
            return Err(ModelError::InvalidBase("lattice rank must be positive".into()));
        }
        let form = IntersectionForm::new(0, gram).map_err(|e| ModelError::InvalidBase(e.to_string()))?;
        if let BaseSpec::AbstractLattice { .. } = &spec {
            let i = inertia(form.gram())?;
            if i.positive != 1 || i.zero != 0 {
                return Err(ModelError::InvalidBase(format!(
                    "Hodge index violated: signature ({}, {}, {} null)",
                    i.positive, i.negative, i.zero
                )));
            }
        }
        let canonical = form.class(spec.canonical()).map_err(|e| ModelError::InvalidBase(format!("K: {e}")))?;
        let mut curves: Vec<Curve> = Vec::new();
        for bc in spec.catalog() {
            if bc.id.is_empty() || bc.id.contains('~') {
                return Err(ModelError::InvalidBase(format!("curve id {:?} must be non-empty and free of '~'", bc.id)));
            }
            if curves.iter().any(|c| c.id == bc.id) {
                return Err(ModelError::DuplicateId(bc.id));
            }
            let class = form.class(bc.class.clone()).map_err(|e| ModelError::InvalidBase(format!("curve {}: {e}", bc.id)))?;
            curves.push(Curve {
                id: bc.id.clone(),
                stem: bc.id.clone(),
                class,
                genus: bc.genus,
                kind: CurveKind::Base,
                origin: None,
                created_at: 0,
            });
        }
        let level = Level { index: 0, form, canonical, curves, center: None };
        Ok(SurfaceModel { base: spec, levels: vec![level] })
    }

    pub fn base(&self) -> &BaseSpec {
        &self.base
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn top_index(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn top(&self) -> &Level {
        self.levels.last().expect("a model always has a base level")
    }

    pub fn level(&self, k: usize) -> Result<&Level, ModelError> {
        self.levels.get(k).ok_or(ModelError::LevelOutOfRange { level: k, top: self.top_index() })
    }

    /// Looks a curve up at a level by exact id, falling back to its stem.
    pub fn curve(&self, level: usize, name: &str) -> Result<&Curve, ModelError> {
        self.level(level)?
            .curve(name)
            .ok_or_else(|| ModelError::UnknownCurve { id: name.to_string(), level })
    }

    /// Blows up a point, checking the pairwise intersection budget.
    pub fn blow_up(&self, center: &BlowUpCenter) -> Result<SurfaceModel, ModelError> {
        self.blow_up_impl(center, true)
    }

    /// Like [`blow_up`](Self::blow_up) but records over-budget incidences
    /// instead of rejecting them; [`validate`](Self::validate) reports them.
    pub fn blow_up_unchecked(&self, center: &BlowUpCenter) -> Result<SurfaceModel, ModelError> {
        self.blow_up_impl(center, false)
    }

    fn blow_up_impl(&self, center: &BlowUpCenter, check_budget: bool) -> Result<SurfaceModel, ModelError> {
        let prev = self.top();
        let k = prev.index + 1;
        let mut incidences: Vec<(String, u32)> = Vec::new();
        let mut push_incidence = |name: &str, m: u32| -> Result<(), ModelError> {
            if m == 0 {
                return Err(ModelError::InvalidCenter(format!("multiplicity on {name} must be positive")));
            }
            let c = prev.curve(name).ok_or_else(|| ModelError::UnknownCurve { id: name.to_string(), level: prev.index })?;
            if incidences.iter().any(|(id, _)| id == &c.id) {
                return Err(ModelError::InvalidCenter(format!("curve {} listed twice", c.id)));
            }
            incidences.push((c.id.clone(), m));
            Ok(())
        };
        for inc in &center.on_curves {
            push_incidence(&inc.curve, inc.multiplicity)?;
        }
        if let Some(near) = &center.infinitely_near {
            let c = prev.curve(near).ok_or_else(|| ModelError::UnknownCurve { id: near.clone(), level: prev.index })?;
            if c.created_at == 0 {
                return Err(ModelError::InvalidCenter(format!("{near} is not an exceptional curve")));
            }
            if !incidences.iter().any(|(id, _)| id == &c.id) {
                incidences.push((c.id.clone(), 1));
            }
        }
        if check_budget {
            for (i, (a, ma)) in incidences.iter().enumerate() {
                for (b, mb) in &incidences[i + 1..] {
                    let ca = prev.curve(a).expect("resolved");
                    let cb = prev.curve(b).expect("resolved");
                    let available = prev.intersect(&ca.class, &cb.class)?;
                    let required = int((*ma * *mb) as i64);
                    if available < required {
                        return Err(ModelError::BudgetExceeded { a: a.clone(), b: b.clone(), available, required });
                    }
                }
            }
        }
        let exceptional = center.exceptional_id.clone().unwrap_or_else(|| format!("E{k}"));
        if exceptional.is_empty() || exceptional.contains('~') {
            return Err(ModelError::InvalidCenter(format!("exceptional id {exceptional:?} must be non-empty and free of '~'")));
        }
        if prev.curves.iter().any(|c| c.stem == exceptional || c.id == exceptional) {
            return Err(ModelError::DuplicateId(exceptional));
        }

        let n = prev.form.rank();
        let mut gram = Matrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                gram.set(i, j, prev.form.gram().get(i, j).clone());
            }
        }
        gram.set(n, n, int(-1));
        let form = IntersectionForm::new(k, gram)?;
        let canonical = pad(&prev.canonical, &form, Rational::one());
        let mut curves = Vec::with_capacity(prev.curves.len() + 1);
        for c in &prev.curves {
            let m = incidences.iter().find(|(id, _)| id == &c.id).map_or(0, |(_, m)| *m);
            let (id, kind) = if m > 0 {
                let id = if c.id.ends_with('~') { c.id.clone() } else { format!("{}~", c.id) };
                (id, CurveKind::StrictTransform)
            } else {
                (c.id.clone(), c.kind)
            };
            curves.push(Curve {
                id,
                stem: c.stem.clone(),
                class: pad(&c.class, &form, int(-(m as i64))),
                genus: c.genus,
                kind,
                origin: Some(c.id.clone()),
                created_at: c.created_at,
            });
        }
        curves.push(Curve {
            id: exceptional.clone(),
            stem: exceptional.clone(),
            class: form.basis(n),
            genus: 0,
            kind: CurveKind::Exceptional,
            origin: None,
            created_at: k,
        });
        let point_label = if center.point_label.is_empty() { format!("p({exceptional})") } else { center.point_label.clone() };
        let level = Level {
            index: k,
            form,
            canonical,
            curves,
            center: Some(ResolvedCenter { exceptional, point_label, incidences }),
        };
        let mut levels = self.levels.clone();
        levels.push(level);
        Ok(SurfaceModel { base: self.base.clone(), levels })
    }

    pub fn blow_down(&self) -> Result<SurfaceModel, ModelError> {
        if self.levels.len() < 2 {
            return Err(ModelError::NothingToBlowDown);
        }
        let mut levels = self.levels.clone();
        levels.pop();
        Ok(SurfaceModel { base: self.base.clone(), levels })
    }

    pub fn pull_back(&self, from: usize, to: usize, c: &DivisorClass) -> Result<DivisorClass, ModelError> {
        if from > to {
            return Err(ModelError::WrongDirection { from, to });
        }
        let src = self.level(from)?;
        let dst = self.level(to)?;
        if c.lattice() != src.form.id() {
            return Err(LatticeError::Mismatch { left: c.lattice(), right: src.form.id() }.into());
        }
        let mut coeffs = c.coeffs().to_vec();
        coeffs.resize(dst.form.rank(), Rational::zero());
        Ok(DivisorClass::relabel(dst.form.id(), coeffs))
    }

    pub fn push_forward_class(&self, from: usize, to: usize, c: &DivisorClass) -> Result<DivisorClass, ModelError> {
        if from < to {
            return Err(ModelError::WrongDirection { from, to });
        }
        let src = self.level(from)?;
        let dst = self.level(to)?;
        if c.lattice() != src.form.id() {
            return Err(LatticeError::Mismatch { left: c.lattice(), right: src.form.id() }.into());
        }
        Ok(DivisorClass::relabel(dst.form.id(), c.coeffs()[..dst.form.rank()].to_vec()))
    }

    /// Drops curves contracted below `to` and renames the rest to their ids there.
    pub fn push_forward(&self, from: usize, to: usize, d: &RDivisor) -> Result<RDivisor, ModelError> {
        if from < to {
            return Err(ModelError::WrongDirection { from, to });
        }
        self.check_divisor_at(d, from)?;
        let dst = self.level(to)?;
        let src = self.level(from)?;
        let mut out = RDivisor::zero(to);
        for (id, c) in d.terms() {
            let curve = src.curve(id).expect("checked");
            if let Some(target) = dst.curve_by_stem(&curve.stem) {
                out.add_term(&target.id, c);
            }
        }
        Ok(out)
    }

    /// Lifts each term to its strict transform at a higher level.
    pub fn strict_transform(&self, from: usize, to: usize, d: &RDivisor) -> Result<RDivisor, ModelError> {
        if from > to {
            return Err(ModelError::WrongDirection { from, to });
        }
        self.check_divisor_at(d, from)?;
        let src = self.level(from)?;
        let dst = self.level(to)?;
        let mut out = RDivisor::zero(to);
        for (id, c) in d.terms() {
            let stem = &src.curve(id).expect("checked").stem;
            out.add_term(&dst.curve_by_stem(stem).expect("curves persist upward").id, c);
        }
        Ok(out)
    }

    /// Total transform `f^*D` as a divisor: the strict transform plus the
    /// exceptional multiplicities `mult_{E_k} = Σ m_C · mult_C` over the
    /// curves through each center.
    pub fn pull_back_divisor(&self, from: usize, to: usize, d: &RDivisor) -> Result<RDivisor, ModelError> {
        let mut by_stem = self.stem_values(from, d)?;
        for k in from + 1..=to {
            let level = self.level(k)?;
            let prev = self.level(k - 1)?;
            let center = level.center.as_ref().expect("levels above 0 have centers");
            let mut mult = Rational::zero();
            for (id, m) in &center.incidences {
                let stem = &prev.curve(id).expect("resolved").stem;
                if let Some(v) = by_stem.get(stem) {
                    mult += v * int(*m as i64);
                }
            }
            if !mult.is_zero() {
                by_stem.insert(center.exceptional.clone(), mult);
            }
        }
        self.divisor_from_stems(to, &by_stem)
    }

    pub(crate) fn stem_values(&self, level: usize, d: &RDivisor) -> Result<BTreeMap<String, Rational>, ModelError> {
        self.check_divisor_at(d, level)?;
        let lv = self.level(level)?;
        Ok(d.terms().iter().map(|(id, c)| (lv.curve(id).expect("checked").stem.clone(), c.clone())).collect())
    }

    pub(crate) fn divisor_from_stems(&self, level: usize, values: &BTreeMap<String, Rational>) -> Result<RDivisor, ModelError> {
        let lv = self.level(level)?;
        let mut out = RDivisor::zero(level);
        for (stem, c) in values {
            let curve = lv.curve_by_stem(stem).ok_or_else(|| ModelError::UnknownCurve { id: stem.clone(), level })?;
            out.add_term(&curve.id, c);
        }
        Ok(out)
    }

    /// Checks that `d` is declared at `level` and every term names a curve there.
    pub fn check_divisor_at(&self, d: &RDivisor, level: usize) -> Result<(), ModelError> {
        if d.level != level {
            return Err(ModelError::WrongDirection { from: d.level, to: level });
        }
        let lv = self.level(level)?;
        for id in d.terms().keys() {
            if lv.curves.iter().all(|c| &c.id != id) {
                return Err(ModelError::UnknownCurve { id: id.clone(), level });
            }
        }
        Ok(())
    }

    /// Builds a divisor at `level` from names that may be ids or stems.
    pub fn divisor(&self, level: usize, terms: &[(&str, Rational)]) -> Result<RDivisor, ModelError> {
        let lv = self.level(level)?;
        let mut d = RDivisor::zero(level);
        for (name, c) in terms {
            let curve = lv.curve(name).ok_or_else(|| ModelError::UnknownCurve { id: name.to_string(), level })?;
            d.add_term(&curve.id, c);
        }
        Ok(d)
    }

    pub fn class_of(&self, d: &RDivisor) -> Result<DivisorClass, ModelError> {
        self.check_divisor_at(d, d.level)?;
        let lv = self.level(d.level)?;
        let mut acc = lv.form.zero();
        for (id, c) in d.terms() {
            acc = acc.add_scaled(c, &lv.curve(id).expect("checked").class)?;
        }
        Ok(acc)
    }

    pub fn anticanonical(&self, level: usize) -> Result<DivisorClass, ModelError> {
        Ok(self.level(level)?.canonical.neg())
    }

    /// Reasons the top level is not a simple normal crossing configuration
    /// for the given curves; empty means ready.
    ///
    /// Undeclared intersections are taken to be transverse and distinct. What
    /// can be seen: over-budget pairs, singular curves (geometric genus below
    /// arithmetic genus), and a strict transform meeting the exceptional curve
    /// of a multiplicity >= 2 center more than once.
    pub fn log_resolution_issues(&self, curves: &[String]) -> Vec<String> {
        let top = self.top();
        let mut issues = Vec::new();
        let mut set: Vec<&Curve> = Vec::new();
        for name in curves {
            match top.curve(name) {
                Some(c) if !set.iter().any(|s| s.stem == c.stem) => set.push(c),
                Some(_) => {}
                None => issues.push(format!("unknown curve {name}")),
            }
        }
        for (i, a) in set.iter().enumerate() {
            match top.arithmetic_genus(&a.class) {
                Ok(pa) if pa != int(a.genus as i64) => {
                    issues.push(format!("{} is singular (genus {} < arithmetic genus {pa})", a.id, a.genus))
                }
                _ => {}
            }
            for b in &set[i + 1..] {
                if let Ok(v) = top.intersect(&a.class, &b.class) {
                    if v.is_negative() {
                        issues.push(format!("({}, {}) share more declared points than their intersection number", a.id, b.id));
                    }
                }
            }
        }
        for level in &self.levels[1..] {
            let center = level.center.as_ref().expect("center");
            let prev = &self.levels[level.index - 1];
            for (id, m) in &center.incidences {
                if *m < 2 {
                    continue;
                }
                let stem = &prev.curve(id).expect("resolved").stem;
                let c = set.iter().find(|c| &c.stem == stem);
                let e = set.iter().find(|c| c.stem == center.exceptional);
                if let (Some(c), Some(e)) = (c, e) {
                    if top.intersect(&c.class, &e.class).is_ok_and(|v| v >= int(2)) {
                        issues.push(format!("{} may meet {} non-transversally (center of multiplicity {m})", c.id, e.id));
                    }
                }
            }
        }
        issues
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut push = |level: Option<usize>, message: String| violations.push(Violation { level, message });

        for lv in &self.levels {
            match inertia(lv.form.gram()) {
                Ok(i) if i.positive == 1 && i.zero == 0 => {}
                Ok(i) => push(Some(lv.index), format!("Hodge index violated: {} positive, {} negative, {} null", i.positive, i.negative, i.zero)),
                Err(e) => push(Some(lv.index), format!("intersection form: {e}")),
            }
            let mut seen = BTreeSet::new();
            for c in &lv.curves {
                if !seen.insert(c.id.clone()) {
                    push(Some(lv.index), format!("duplicate curve id {}", c.id));
                }
                match lv.arithmetic_genus(&c.class) {
                    Ok(pa) if !pa.is_integer() => push(Some(lv.index), format!("{}: non-integral arithmetic genus {pa}", c.id)),
                    Ok(pa) if pa < int(c.genus as i64) => {
                        push(Some(lv.index), format!("{}: genus {} exceeds arithmetic genus {pa}", c.id, c.genus))
                    }
                    Ok(_) => {}
                    Err(e) => push(Some(lv.index), format!("{}: {e}", c.id)),
                }
            }
        }

        for lv in &self.levels[1..] {
            let prev = &self.levels[lv.index - 1];
            let k = lv.index;
            let center = lv.center.as_ref().expect("center");
            if lv.form.rank() != prev.form.rank() + 1 {
                push(Some(k), "rank did not grow by one".into());
            }
            let Some(e) = lv.curve_by_stem(&center.exceptional) else {
                push(Some(k), "exceptional curve missing".into());
                continue;
            };
            if e.genus != 0 || lv.form.square(&e.class).ok() != Some(int(-1)) {
                push(Some(k), format!("{} is not a (-1)-curve of genus 0", e.id));
            }
            for i in 0..prev.form.rank() {
                let b = prev.form.basis(i);
                let Ok(up) = self.pull_back(k - 1, k, &b) else { continue };
                if lv.form.intersect(&up, &e.class).ok() != Some(Rational::zero()) {
                    push(Some(k), format!("exceptional curve not orthogonal to pullback of basis {i}"));
                }
                if self.push_forward_class(k, k - 1, &up).ok().as_ref() != Some(&b) {
                    push(Some(k), format!("pushforward after pullback is not the identity on basis {i}"));
                }
                for j in 0..prev.form.rank() {
                    let up_j = self.pull_back(k - 1, k, &prev.form.basis(j)).expect("same lattice");
                    if lv.form.intersect(&up, &up_j).ok().as_ref() != Some(prev.form.gram().get(i, j)) {
                        push(Some(k), format!("pullback does not preserve intersection ({i}, {j})"));
                    }
                }
            }
            let expected_k = self
                .pull_back(k - 1, k, &prev.canonical)
                .and_then(|pk| Ok(pk.add(&e.class)?));
            if expected_k.ok().as_ref() != Some(&lv.canonical) {
                push(Some(k), "canonical class is not pi^*K + E".into());
            }
            for c in &lv.curves {
                if c.created_at == k {
                    continue;
                }
                if let Some(origin) = prev.curve_by_stem(&c.stem) {
                    if origin.genus != c.genus {
                        push(Some(k), format!("{} changed genus under strict transform", c.id));
                    }
                }
            }
        }

        let top = self.top();
        for (i, a) in top.curves.iter().enumerate() {
            for b in &top.curves[i + 1..] {
                if let Ok(v) = top.intersect(&a.class, &b.class) {
                    if v.is_negative() {
                        push(
                            Some(top.index),
                            format!("pair ({}, {}): declared shared points exceed intersection number", a.stem, b.stem),
                        );
                    }
                }
            }
        }

        let all: Vec<String> = top.curves.iter().map(|c| c.id.clone()).collect();
        let readiness_issues = self.log_resolution_issues(&all);
        ValidationReport { violations, log_resolution_ready: readiness_issues.is_empty(), readiness_issues }
    }
}
