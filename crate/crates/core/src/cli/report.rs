//! JSON reports. Keys keep insertion order and rationals are strings, so
//! identical inputs give byte-identical output.

use serde_json::{json, Map, Value};

use crate::lattice::{DivisorClass, Rational};
use crate::potential::{
    classify_pair, fano_type_test, potential_ledger, total_potential_discrepancy, DiscrepancyLedger, FanoVerdict, Locus,
    LocusComponent, PairError, PairSpec, PotentialReport,
};
use crate::rcc::{incidence_graph, is_rcc_locus, surface_rcc_via_pnklt};
use crate::surface::{RDivisor, SurfaceModel, ValidationReport};
use crate::zariski::{is_nef_against_catalog, zariski_decompose, ZariskiDecomposition, ZariskiError, CATALOG_DISCLAIMER};

use super::model_file::level_pointer;

pub fn rat(r: &Rational) -> Value {
    Value::String(r.to_string())
}

pub fn divisor(d: &RDivisor) -> Value {
    Value::Object(d.terms().iter().map(|(id, c)| (id.clone(), rat(c))).collect())
}

pub fn class(c: &DivisorClass) -> Value {
    Value::Array(c.coeffs().iter().map(rat).collect())
}

pub fn locus(l: &Locus) -> Value {
    if l.whole_surface {
        return Value::String("X".into());
    }
    Value::Array(l.names().into_iter().map(Value::String).collect())
}

fn component(c: &LocusComponent) -> Value {
    match c {
        LocusComponent::Curve { id, genus } => json!({"kind": "curve", "id": id, "genus": genus}),
        LocusComponent::Point { label, on_curves } => json!({"kind": "point", "id": label, "on_curves": on_curves}),
    }
}

pub fn components(l: &Locus) -> Value {
    Value::Array(l.components.iter().map(component).collect())
}

pub fn ledger(l: &DiscrepancyLedger) -> Value {
    let mut out = Map::new();
    for e in &l.entries {
        out.insert(
            e.curve.clone(),
            json!({
                "genus": e.genus,
                "exceptional_over_x": e.exceptional_over_x,
                "a": rat(&e.a),
                "sigma_num": rat(&e.sigma_num),
                "pa": rat(&e.pa),
            }),
        );
    }
    Value::Object(out)
}

pub fn zariski(z: &ZariskiDecomposition, model: &SurfaceModel, level: usize) -> Value {
    let form = &model.levels()[level].form;
    let p2 = form.square(&z.positive).expect("same lattice");
    json!({
        "P": {"class": class(&z.positive), "square": rat(&p2)},
        "N": divisor(&z.negative),
        "support": z.certificate.support,
        "rounds": z.certificate.rounds,
    })
}

pub fn error(kind: &str, message: &str, pointer: Option<&str>) -> Value {
    let mut e = Map::new();
    e.insert("kind".into(), Value::String(kind.into()));
    e.insert("message".into(), Value::String(message.into()));
    if let Some(p) = pointer {
        e.insert("pointer".into(), Value::String(p.into()));
    }
    json!({ "error": Value::Object(e) })
}

pub fn pair_error_kind(e: &PairError) -> &'static str {
    match e {
        PairError::NotPseudoeffective(_) => "not-pseudoeffective",
        PairError::NotEffective(_) => "not-effective",
        PairError::NotLogResolution(_) => "not-log-resolution",
        PairError::BadEpsilon(_) => "bad-epsilon",
        PairError::InvariantViolated(_) => "invariant-violated",
        PairError::NotApplicable(_) => "not-applicable",
        PairError::Model(_) => "model",
    }
}

pub fn check(model: &SurfaceModel, report: &ValidationReport) -> Value {
    let violations: Vec<Value> = report
        .violations
        .iter()
        .map(|v| json!({"pointer": level_pointer(v.level), "message": v.message}))
        .collect();
    json!({
        "command": "check",
        "valid": report.is_valid(),
        "levels": model.levels().len(),
        "rank": model.top().form.rank(),
        "curves": model.top().curves.iter().map(|c| c.id.clone()).collect::<Vec<_>>(),
        "violations": violations,
        "log_resolution_ready": report.log_resolution_ready,
        "readiness_issues": report.readiness_issues,
    })
}

pub fn zariski_command(model: &SurfaceModel, level: usize, name: &str, d: &DivisorClass) -> Result<Value, ZariskiError> {
    let z = zariski_decompose(model, level, d)?;
    let nef = is_nef_against_catalog(model, level, &z.positive)?;
    let big = model.levels()[level].form.square(&z.positive).map_err(ZariskiError::from)? > Rational::from_integer(0.into());
    let mut out = json!({
        "command": "zariski",
        "level": level,
        "divisor": name,
        "class": class(d),
    });
    let obj = out.as_object_mut().expect("object");
    for (k, v) in zariski(&z, model, level).as_object().expect("object") {
        obj.insert(k.clone(), v.clone());
    }
    obj.insert("P_nef".into(), Value::Bool(nef.is_nef()));
    obj.insert("big".into(), Value::Bool(big));
    obj.insert("disclaimer".into(), Value::String(CATALOG_DISCLAIMER.into()));
    Ok(out)
}

fn pair_header(command: &str, pair: &PairSpec) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), Value::String(command.into()));
    m.insert("pair_level".into(), json!(pair.pair_level()));
    m.insert("top_level".into(), json!(pair.model().top_index()));
    m.insert("delta".into(), divisor(pair.delta()));
    m
}

pub fn potential(pair: &PairSpec) -> Value {
    let mut m = pair_header("potential", pair);
    m.insert("ledger".into(), ledger(&potential_ledger(pair)));
    m.insert("zariski".into(), zariski(pair.zariski(), pair.model(), pair.model().top_index()));
    m.insert("frakA".into(), Value::String(total_potential_discrepancy(pair).to_string()));
    m.insert("disclaimer".into(), Value::String(CATALOG_DISCLAIMER.into()));
    Value::Object(m)
}

fn eps_table(r: &PotentialReport) -> Value {
    let mut table = Map::new();
    for (eps, l) in &r.eps_table {
        table.insert(eps.to_string(), locus(l));
    }
    json!({"eps0": rat(&r.eps0), "table": Value::Object(table)})
}

pub fn pnklt(pair: &PairSpec, eps: &[Rational]) -> Result<Value, PairError> {
    let r = classify_pair(pair, eps)?;
    let mut m = pair_header("pnklt", pair);
    m.insert("pnklt".into(), locus(&r.pnklt));
    m.insert("components".into(), components(&r.pnklt));
    m.insert("eps0".into(), rat(&r.eps0));
    m.insert("eps_spnklt".into(), eps_table(&r));
    m.insert("disclaimer".into(), Value::String(CATALOG_DISCLAIMER.into()));
    Ok(Value::Object(m))
}

pub fn fano(v: &FanoVerdict, level: usize) -> Value {
    json!({
        "command": "fano",
        "level": level,
        "fano_type": v.fano_type,
        "anticanonical_big": v.anticanonical_big,
        "N": v.negative_part.as_ref().map(divisor).unwrap_or(Value::Null),
        "pair_klt": v.pair_klt,
        "pair_potentially_klt": v.pair_potentially_klt,
        "reason": v.reason,
        "disclaimer": CATALOG_DISCLAIMER,
    })
}

fn fano_summary(pair: &PairSpec) -> Value {
    match fano_type_test(pair.model(), pair.pair_level()) {
        Ok(v) => json!({"fano_type": v.fano_type, "anticanonical_big": v.anticanonical_big, "reason": v.reason}),
        Err(e) => json!({"fano_type": Value::Null, "error": e.to_string()}),
    }
}

pub fn rcc(pair: &PairSpec) -> Value {
    let pnklt_rcc = crate::potential::pnklt_locus(pair)
        .map(|l| is_rcc_locus(&incidence_graph(pair, &l.components)))
        .ok();
    match surface_rcc_via_pnklt(pair) {
        Ok(v) => json!({"applicable": true, "surface_rcc": v.rcc, "pnklt_rcc": pnklt_rcc, "explanation": v.explanation}),
        Err(e) => json!({"applicable": false, "surface_rcc": Value::Null, "pnklt_rcc": pnklt_rcc, "explanation": e.to_string()}),
    }
}

pub fn rcc_command(pair: &PairSpec) -> Value {
    let mut m = pair_header("rcc", pair);
    for (k, v) in rcc(pair).as_object().expect("object") {
        m.insert(k.clone(), v.clone());
    }
    Value::Object(m)
}

/// The full report: ledger, decomposition, loci, flags, Fano type and rcc.
pub fn classify(pair: &PairSpec, eps: &[Rational]) -> Result<Value, PairError> {
    let r = classify_pair(pair, eps)?;
    let mut m = pair_header("classify", pair);
    m.insert("ledger".into(), ledger(&r.ledger));
    m.insert("zariski".into(), zariski(pair.zariski(), pair.model(), pair.model().top_index()));
    m.insert("big".into(), Value::Bool(r.big));
    m.insert("frakA".into(), Value::String(r.frak_a.to_string()));
    m.insert(
        "loci".into(),
        json!({
            "nklt": locus(&r.nklt),
            "pnklt": locus(&r.pnklt),
            "pnklt_components": components(&r.pnklt),
            "nnef": locus(&r.nnef),
            "eps_spnklt": eps_table(&r),
        }),
    );
    m.insert(
        "flags".into(),
        json!({
            "klt": r.flags.klt,
            "lc": r.flags.lc,
            "potentially_klt": r.flags.potentially_klt,
            "potentially_lc": r.flags.potentially_lc,
        }),
    );
    m.insert("fano_type".into(), fano_summary(pair));
    m.insert("rcc".into(), rcc(pair));
    m.insert("disclaimer".into(), Value::String(CATALOG_DISCLAIMER.into()));
    Ok(Value::Object(m))
}

/// `N(-K)` on every level of the tower, or the reason it does not exist.
pub fn anticanonical_by_level(model: &SurfaceModel) -> Value {
    let mut out = Vec::new();
    for lv in model.levels() {
        let entry = match zariski_decompose(model, lv.index, &lv.canonical.neg()) {
            Ok(z) => json!({"level": lv.index, "N": divisor(&z.negative), "P_square": rat(&lv.form.square(&z.positive).expect("same lattice"))}),
            Err(e) => json!({"level": lv.index, "error": e.to_string()}),
        };
        out.push(entry);
    }
    Value::Array(out)
}
