//! The `pklt-lab/1` model file: parsing, construction and serialization.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::lattice::{parse_rational, DivisorClass, Matrix, Rational};
use crate::surface::{BaseCurve, BaseSpec, BlowUpCenter, Incidence, ModelError, RDivisor, SurfaceModel};

pub const SCHEMA_VERSION: &str = "pklt-lab/1";

/// A rational written as `"p/q"` or as a JSON integer. Floats are rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rat(pub Rational);

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

struct RatVisitor;

impl Visitor<'_> for RatVisitor {
    type Value = Rat;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("an integer or a string \"p/q\"")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rat, E> {
        Ok(Rat(Rational::from_integer(v.into())))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rat, E> {
        Ok(Rat(Rational::from_integer(v.into())))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rat, E> {
        Err(E::custom(format!("floating point value {v} is not allowed; write rationals as \"p/q\"")))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Rat, E> {
        parse_rational(v).map(Rat).map_err(E::custom)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        d.deserialize_any(RatVisitor)
    }
}

fn rats(v: &[Rational]) -> Vec<Rat> {
    v.iter().cloned().map(Rat).collect()
}

fn unrats(v: &[Rat]) -> Vec<Rational> {
    v.iter().map(|r| r.0.clone()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaseKind {
    #[serde(rename = "P2")]
    Plane,
    #[serde(rename = "ruled")]
    Ruled,
    #[serde(rename = "lattice")]
    Lattice,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveFile {
    pub id: String,
    pub class: Vec<Rat>,
    #[serde(default)]
    pub genus: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseFile {
    pub kind: BaseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genus: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<Vec<Vec<Rat>>>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub canonical: Option<Vec<Rat>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curves: Option<Vec<CurveFile>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnFile {
    pub curve: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mult: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowUpFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default)]
    pub on: Vec<OnFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub near: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermFile {
    pub curve: String,
    pub coeff: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairFile {
    pub level: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub version: String,
    pub base: BaseFile,
    #[serde(default)]
    pub blowups: Vec<BlowUpFile>,
    #[serde(default)]
    pub divisors: BTreeMap<String, Vec<TermFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairFile>,
}

/// A problem located by a JSON pointer into the model file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Located {
    pub pointer: String,
    pub message: String,
}

impl Located {
    fn new(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Located { pointer: pointer.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LoadError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error at {}: {}", .0.pointer, .0.message)]
    Schema(Located),
    #[error("validation failed: {}", .0.iter().map(|l| format!("{}: {}", l.pointer, l.message)).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Located>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedModel {
    pub model: SurfaceModel,
    pub divisors: BTreeMap<String, Vec<(String, Rational)>>,
    pub pair: Option<PairFile>,
}

/// What a divisor name stands for at a level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NamedDivisor {
    Divisor(RDivisor),
    /// Built-in `K` or `antiK`; a class with no preferred representative.
    Class(DivisorClass),
}

impl LoadedModel {
    /// Resolves a declared divisor at `level`, stem-matching curve names
    /// so `C0` means its strict transform higher up. `K` and `antiK` are
    /// built in unless the file defines them.
    pub fn resolve(&self, name: &str, level: usize) -> Result<NamedDivisor, LoadError> {
        if let Some(terms) = self.divisors.get(name) {
            let lv = self.model.level(level).map_err(|e| LoadError::Validation(vec![Located::new("/pair/level", e.to_string())]))?;
            let mut d = RDivisor::zero(level);
            for (j, (curve, coeff)) in terms.iter().enumerate() {
                let Some(c) = lv.curve(curve) else {
                    return Err(LoadError::Validation(vec![Located::new(
                        format!("/divisors/{}/{j}/curve", escape(name)),
                        format!("curve {curve} does not exist at level {level}"),
                    )]));
                };
                d.add_term(&c.id, coeff);
            }
            return Ok(NamedDivisor::Divisor(d));
        }
        let lv = self.model.level(level).map_err(|e| LoadError::Validation(vec![Located::new("", e.to_string())]))?;
        match name {
            "K" => Ok(NamedDivisor::Class(lv.canonical.clone())),
            "antiK" => Ok(NamedDivisor::Class(lv.canonical.neg())),
            _ => Err(LoadError::Schema(Located::new("/divisors", format!("no divisor named {name:?}")))),
        }
    }

    /// The declared pair, or `(top, 0)`.
    pub fn pair_parts(&self, level_override: Option<usize>) -> Result<(usize, RDivisor), LoadError> {
        let level = level_override.or(self.pair.as_ref().map(|p| p.level)).unwrap_or(self.model.top_index());
        if level > self.model.top_index() {
            return Err(LoadError::Validation(vec![Located::new(
                "/pair/level",
                format!("level {level} is above the top level {}", self.model.top_index()),
            )]));
        }
        let delta = match self.pair.as_ref().and_then(|p| p.delta.as_deref()) {
            None => RDivisor::zero(level),
            Some(name) => match self.resolve(name, level)? {
                NamedDivisor::Divisor(d) => d,
                NamedDivisor::Class(_) => {
                    return Err(LoadError::Schema(Located::new("/pair/delta", format!("{name} is a class, not a boundary divisor"))))
                }
            },
        };
        Ok((level, delta))
    }
}

/// JSON pointer escaping for a single reference token.
pub fn escape(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

pub fn parse_model(text: &str) -> Result<ModelFile, LoadError> {
    serde_json::from_str(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => LoadError::Schema(Located::new("", e.to_string())),
        _ => LoadError::Parse(e.to_string()),
    })
}

pub fn load_model(text: &str) -> Result<LoadedModel, LoadError> {
    build_model(&parse_model(text)?)
}

fn base_curves(curves: &Option<Vec<CurveFile>>) -> Vec<BaseCurve> {
    curves
        .iter()
        .flatten()
        .map(|c| BaseCurve { id: c.id.clone(), class: unrats(&c.class), genus: c.genus })
        .collect()
}

fn base_spec(base: &BaseFile) -> Result<BaseSpec, LoadError> {
    let forbid = |present: bool, field: &str| {
        if present {
            Err(LoadError::Schema(Located::new(format!("/base/{field}"), "field not allowed for this base kind")))
        } else {
            Ok(())
        }
    };
    let require = |field: &str| LoadError::Schema(Located::new(format!("/base/{field}"), "required field missing"));
    match base.kind {
        BaseKind::Plane => {
            forbid(base.genus.is_some(), "genus")?;
            forbid(base.e.is_some(), "e")?;
            forbid(base.gram.is_some(), "gram")?;
            forbid(base.canonical.is_some(), "K")?;
            Ok(BaseSpec::ProjectivePlane { curves: base_curves(&base.curves) })
        }
        BaseKind::Ruled => {
            forbid(base.gram.is_some(), "gram")?;
            forbid(base.canonical.is_some(), "K")?;
            let genus = base.genus.ok_or_else(|| require("genus"))?;
            let e = base.e.ok_or_else(|| require("e"))?;
            Ok(BaseSpec::Ruled { genus, e, extra: base_curves(&base.curves) })
        }
        BaseKind::Lattice => {
            forbid(base.genus.is_some(), "genus")?;
            forbid(base.e.is_some(), "e")?;
            let gram = base.gram.as_ref().ok_or_else(|| require("gram"))?;
            let canonical = base.canonical.as_ref().ok_or_else(|| require("K"))?;
            let n = gram.len();
            if let Some(i) = gram.iter().position(|row| row.len() != n) {
                return Err(LoadError::Schema(Located::new(format!("/base/gram/{i}"), "gram matrix must be square")));
            }
            Ok(BaseSpec::AbstractLattice {
                gram: Matrix::from_rows(gram.iter().map(|r| unrats(r)).collect()),
                canonical: unrats(canonical),
                curves: base_curves(&base.curves),
            })
        }
    }
}

fn blow_up_pointer(i: usize, b: &BlowUpFile, err: &ModelError) -> String {
    match err {
        ModelError::UnknownCurve { id, .. } => {
            if let Some(j) = b.on.iter().position(|o| &o.curve == id) {
                format!("/blowups/{i}/on/{j}/curve")
            } else if b.near.as_deref() == Some(id) {
                format!("/blowups/{i}/near")
            } else {
                format!("/blowups/{i}")
            }
        }
        ModelError::DuplicateId(_) => format!("/blowups/{i}/id"),
        _ => format!("/blowups/{i}"),
    }
}

/// Level `k > 0` was produced by blow-up `k - 1`.
pub fn level_pointer(level: Option<usize>) -> String {
    match level {
        None => String::new(),
        Some(0) => "/base".into(),
        Some(k) => format!("/blowups/{}", k - 1),
    }
}

pub fn build_model(file: &ModelFile) -> Result<LoadedModel, LoadError> {
    if file.version != SCHEMA_VERSION {
        return Err(LoadError::Schema(Located::new(
            "/version",
            format!("unsupported version {:?}, expected {SCHEMA_VERSION:?}", file.version),
        )));
    }
    let spec = base_spec(&file.base)?;
    let mut model = SurfaceModel::make_base(spec).map_err(|e| {
        let pointer = if matches!(e, ModelError::DuplicateId(_)) { "/base/curves" } else { "/base" };
        LoadError::Validation(vec![Located::new(pointer, e.to_string())])
    })?;
    for (i, b) in file.blowups.iter().enumerate() {
        let center = BlowUpCenter {
            on_curves: b
                .on
                .iter()
                .map(|o| Incidence { curve: o.curve.clone(), multiplicity: o.mult.unwrap_or(1) })
                .collect(),
            infinitely_near: b.near.clone(),
            point_label: b.label.clone().unwrap_or_default(),
            exceptional_id: b.id.clone(),
        };
        model = model
            .blow_up_unchecked(&center)
            .map_err(|e| LoadError::Validation(vec![Located::new(blow_up_pointer(i, b, &e), e.to_string())]))?;
    }
    let report = model.validate();
    if !report.is_valid() {
        return Err(LoadError::Validation(
            report.violations.iter().map(|v| Located::new(level_pointer(v.level), v.message.clone())).collect(),
        ));
    }

    let top = model.top();
    let mut divisors = BTreeMap::new();
    let mut problems = Vec::new();
    for (name, terms) in &file.divisors {
        for (j, t) in terms.iter().enumerate() {
            if top.curve(&t.curve).is_none() {
                problems.push(Located::new(format!("/divisors/{}/{j}/curve", escape(name)), format!("unknown curve {}", t.curve)));
            }
        }
        divisors.insert(name.clone(), terms.iter().map(|t| (t.curve.clone(), t.coeff.0.clone())).collect());
    }
    if let Some(p) = &file.pair {
        if p.level > model.top_index() {
            problems.push(Located::new("/pair/level", format!("level {} is above the top level {}", p.level, model.top_index())));
        }
        if let Some(d) = &p.delta {
            if !divisors.contains_key(d) {
                problems.push(Located::new("/pair/delta", format!("no divisor named {d:?}")));
            }
        }
    }
    if !problems.is_empty() {
        return Err(LoadError::Validation(problems));
    }
    Ok(LoadedModel { model, divisors, pair: file.pair.clone() })
}

fn curve_files(curves: &[BaseCurve]) -> Vec<CurveFile> {
    curves.iter().map(|c| CurveFile { id: c.id.clone(), class: rats(&c.class), genus: c.genus }).collect()
}

/// Inverse of [`build_model`] up to spelling: `load(serialize(m)) == m`.
pub fn serialize_model(loaded: &LoadedModel) -> ModelFile {
    let model = &loaded.model;
    let base = match model.base() {
        BaseSpec::ProjectivePlane { curves } => BaseFile {
            kind: BaseKind::Plane,
            genus: None,
            e: None,
            gram: None,
            canonical: None,
            curves: (!curves.is_empty()).then(|| curve_files(curves)),
        },
        BaseSpec::Ruled { genus, e, extra } => BaseFile {
            kind: BaseKind::Ruled,
            genus: Some(*genus),
            e: Some(*e),
            gram: None,
            canonical: None,
            curves: (!extra.is_empty()).then(|| curve_files(extra)),
        },
        BaseSpec::AbstractLattice { gram, canonical, curves } => BaseFile {
            kind: BaseKind::Lattice,
            genus: None,
            e: None,
            gram: Some(gram.to_rows().iter().map(|r| rats(r)).collect()),
            canonical: Some(rats(canonical)),
            curves: Some(curve_files(curves)),
        },
    };
    let blowups = model.levels()[1..]
        .iter()
        .map(|lv| {
            let c = lv.center.as_ref().expect("center");
            BlowUpFile {
                id: Some(c.exceptional.clone()),
                on: c.incidences.iter().map(|(id, m)| OnFile { curve: id.clone(), mult: (*m != 1).then_some(*m) }).collect(),
                near: None,
                label: (c.point_label != format!("p({})", c.exceptional)).then(|| c.point_label.clone()),
            }
        })
        .collect();
    let divisors = loaded
        .divisors
        .iter()
        .map(|(name, terms)| {
            (name.clone(), terms.iter().map(|(c, v)| TermFile { curve: c.clone(), coeff: Rat(v.clone()) }).collect())
        })
        .collect();
    ModelFile { version: SCHEMA_VERSION.into(), base, blowups, divisors, pair: loaded.pair.clone() }
}

pub fn to_json(file: &ModelFile) -> String {
    serde_json::to_string_pretty(file).expect("model files always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::rat;

    const IMPROVEBP: &str = r#"{
        "version": "pklt-lab/1",
        "base": {"kind": "ruled", "genus": 2, "e": 3},
        "blowups": [{"on": [{"curve": "C0"}]}],
        "divisors": {"fiber": [{"curve": "f", "coeff": "1/3"}]},
        "pair": {"level": 1}
    }"#;

    #[test]
    fn loads_improvebp() {
        let m = load_model(IMPROVEBP).unwrap();
        assert_eq!(m.model.levels().len(), 2);
        assert_eq!(m.divisors["fiber"], vec![("f".to_string(), rat(1, 3))]);
        assert_eq!(m.pair_parts(None).unwrap(), (1, RDivisor::zero(1)));
    }

    #[test]
    fn rejects_floats_and_unknown_fields() {
        let bad = IMPROVEBP.replace("\"1/3\"", "1.5");
        assert!(matches!(load_model(&bad), Err(LoadError::Schema(_))));
        let bad = IMPROVEBP.replace("\"1/3\"", "\"1.5\"");
        assert!(matches!(load_model(&bad), Err(LoadError::Schema(_))));
        let bad = IMPROVEBP.replace("\"e\": 3", "\"e\": 3, \"colour\": 1");
        assert!(matches!(load_model(&bad), Err(LoadError::Schema(_))));
        let bad = IMPROVEBP.replace("pklt-lab/1", "pklt-lab/2");
        assert!(matches!(load_model(&bad), Err(LoadError::Schema(l)) if l.pointer == "/version"));
        assert!(matches!(load_model("{"), Err(LoadError::Parse(_))));
    }

    #[test]
    fn unknown_curve_points_into_blowups() {
        let bad = IMPROVEBP.replace("\"curve\": \"C0\"", "\"curve\": \"Q\"");
        match load_model(&bad) {
            Err(LoadError::Validation(v)) => assert_eq!(v[0].pointer, "/blowups/0/on/0/curve"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn budget_violation_is_a_validation_error() {
        let text = r#"{"version": "pklt-lab/1", "base": {"kind": "ruled", "genus": 0, "e": 1},
            "blowups": [{"on": [{"curve": "C0"}, {"curve": "f"}]}, {"on": [{"curve": "C0"}, {"curve": "f"}]}]}"#;
        match load_model(text) {
            Err(LoadError::Validation(v)) => assert!(v.iter().any(|l| l.pointer == "/blowups/1"), "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip() {
        let text = r#"{"version": "pklt-lab/1",
            "base": {"kind": "P2", "curves": [{"id": "C", "class": [3], "genus": 1}, {"id": "L", "class": [1]}]},
            "blowups": [{"on": [{"curve": "C"}, {"curve": "L"}]}, {"id": "F", "near": "E1", "label": "q"},
                        {"on": [{"curve": "C", "mult": 1}]}],
            "divisors": {"d": [{"curve": "C", "coeff": 1}]}}"#;
        let m = load_model(text).unwrap();
        let again = load_model(&to_json(&serialize_model(&m))).unwrap();
        assert_eq!(m, again);
        let lattice = r#"{"version": "pklt-lab/1",
            "base": {"kind": "lattice", "gram": [[1, 0], [0, -1]], "K": [-3, 1],
                     "curves": [{"id": "A", "class": [0, 1]}]}}"#;
        let m = load_model(lattice).unwrap();
        assert_eq!(m, load_model(&to_json(&serialize_model(&m))).unwrap());
    }

    #[test]
    fn resolves_by_stem() {
        let m = load_model(IMPROVEBP.replace("\"f\", \"coeff\"", "\"C0\", \"coeff\"").as_str()).unwrap();
        assert_eq!(m.resolve("fiber", 1).unwrap(), NamedDivisor::Divisor(RDivisor::zero(1).with("C0~", rat(1, 3))));
        assert!(matches!(m.resolve("antiK", 0).unwrap(), NamedDivisor::Class(_)));
        assert!(matches!(m.resolve("nope", 0), Err(LoadError::Schema(_))));
    }
}
