//! Random towers, random boundaries and a brute-force Zariski oracle.
#![allow(dead_code)]

use num::traits::{One, Signed, Zero};
use pklt::lattice::{gram_submatrix, int, is_negative_definite, rat, solve_exact, DivisorClass, Rational};
use pklt::potential::{PairError, PairSpec};
use pklt::surface::{BaseCurve, BaseSpec, BlowUpCenter, RDivisor, SurfaceModel};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pick_coeff(rng: &mut Rng8, table: &[(i64, i64)]) -> Rational {
    let (n, d) = *table.choose(rng).expect("non-empty");
    rat(n, d)
}

/// Any tower: free points, points on one curve, nodes, infinitely near points.
pub fn random_tower(rng: &mut Rng8) -> SurfaceModel {
    let base = if rng.gen_bool(0.5) {
        let mut pool = vec![
            BaseCurve::new("L1", &[1], 0),
            BaseCurve::new("L2", &[1], 0),
            BaseCurve::new("Q", &[2], 0),
            BaseCurve::new("C", &[3], 1),
        ];
        pool.shuffle(rng);
        pool.truncate(rng.gen_range(1..=4));
        BaseSpec::ProjectivePlane { curves: pool }
    } else {
        let genus = rng.gen_range(0..=2);
        let e = rng.gen_range(1..=4);
        let mut extra = Vec::new();
        if rng.gen_bool(0.5) {
            extra.push(BaseCurve::new("Cinf", &[1, e as i64], genus));
        }
        if rng.gen_bool(0.5) {
            extra.push(BaseCurve::new("f1", &[0, 1], 0));
        }
        BaseSpec::Ruled { genus, e, extra }
    };
    let mut model = SurfaceModel::make_base(base).expect("valid base");
    let steps = rng.gen_range(0..=5);
    for _ in 0..steps {
        let top = model.top();
        let ids: Vec<String> = top.curves.iter().map(|c| c.id.clone()).collect();
        let center = match rng.gen_range(0..4) {
            0 => BlowUpCenter::free(),
            1 => BlowUpCenter::on(ids.choose(rng).expect("catalog")),
            2 => {
                let a = ids.choose(rng).expect("catalog");
                let b = ids.choose(rng).expect("catalog");
                if a == b {
                    BlowUpCenter::on(a)
                } else {
                    BlowUpCenter::on(a).with(b, 1)
                }
            }
            _ => match top.center.as_ref() {
                Some(c) => BlowUpCenter::free().near(&c.exceptional),
                None => BlowUpCenter::free(),
            },
        };
        model = match model.blow_up(&center) {
            Ok(m) => m,
            Err(_) => model.blow_up(&BlowUpCenter::free()).expect("free points always work"),
        };
    }
    model
}

/// A non-zero effective combination of top-level catalog curves.
pub fn random_effective(rng: &mut Rng8, model: &SurfaceModel, level: usize) -> RDivisor {
    let lv = &model.levels()[level];
    let table = [(1, 3), (1, 2), (1, 1), (3, 2), (2, 1), (5, 3)];
    let mut d = RDivisor::zero(level);
    for c in &lv.curves {
        if rng.gen_bool(0.45) {
            d.add_term(&c.id, &pick_coeff(rng, &table));
        }
    }
    if d.is_zero() {
        let c = lv.curves.choose(rng).expect("catalog");
        d.add_term(&c.id, &int(1));
    }
    d
}

/// Every `N` admitted by some subset of the catalog: `N ≥ 0`, negative
/// definite support, `P` orthogonal to the support and nef on the catalog.
/// Duplicates (from zero coefficients) are collapsed. Subsets are grown one
/// curve at a time; a subset that is not negative definite has no negative
/// definite superset, so pruning there loses nothing.
pub fn brute_force_negative_parts(model: &SurfaceModel, level: usize, d: &DivisorClass) -> Vec<RDivisor> {
    let lv = &model.levels()[level];
    assert!(lv.curves.len() <= 20, "subset enumeration is exponential");
    let mut found: Vec<RDivisor> = Vec::new();
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    while let Some(idx) = stack.pop() {
        if let Some(n) = candidate(model, level, d, &idx) {
            if !found.contains(&n) {
                found.push(n);
            }
        }
        let next = idx.last().map_or(0, |&i| i + 1);
        for j in next..lv.curves.len() {
            let mut grown = idx.clone();
            grown.push(j);
            let classes: Vec<DivisorClass> = grown.iter().map(|&i| lv.curves[i].class.clone()).collect();
            if is_negative_definite(&gram_submatrix(&classes, &lv.form).unwrap()).unwrap() {
                stack.push(grown);
            }
        }
    }
    found
}

/// The negative part supported on exactly the curves `idx` (whose Gram
/// matrix is negative definite), if it satisfies every condition.
fn candidate(model: &SurfaceModel, level: usize, d: &DivisorClass, idx: &[usize]) -> Option<RDivisor> {
    let lv = &model.levels()[level];
    let mut negative = RDivisor::zero(level);
    let mut positive = d.clone();
    if !idx.is_empty() {
        let classes: Vec<DivisorClass> = idx.iter().map(|&i| lv.curves[i].class.clone()).collect();
        let gram = gram_submatrix(&classes, &lv.form).unwrap();
        let rhs: Vec<Rational> = classes.iter().map(|c| lv.form.intersect(d, c).unwrap()).collect();
        let x = solve_exact(&gram, &rhs).unwrap();
        if x.iter().any(|v| v.is_negative()) {
            return None;
        }
        for (k, &i) in idx.iter().enumerate() {
            negative.add_term(&lv.curves[i].id, &x[k]);
            positive = positive.add_scaled(&-x[k].clone(), &lv.curves[i].class).unwrap();
        }
        if classes.iter().any(|c| !lv.form.intersect(&positive, c).unwrap().is_zero()) {
            return None;
        }
    }
    if lv.curves.iter().any(|c| lv.form.intersect(&positive, &c.class).unwrap().is_negative()) {
        return None;
    }
    Some(negative)
}

/// Curves that stay torus (or C*) invariant under node blow-ups.
pub fn is_boundary_stem(stem: &str) -> bool {
    matches!(stem, "L1" | "L2" | "L3" | "C0" | "Cinf" | "f1" | "f2") || stem.starts_with('E')
}

/// Toric or C*-surface towers: the plane with a triangle of lines, or a
/// ruled surface with both invariant sections and two invariant fibers,
/// blown up only at nodes of the invariant boundary. Every negative curve
/// of such a surface is a boundary curve, so the catalog is complete.
pub fn random_cstar_tower(rng: &mut Rng8, max_steps: usize) -> SurfaceModel {
    let base = if rng.gen_bool(0.35) {
        BaseSpec::ProjectivePlane {
            curves: vec![BaseCurve::new("L1", &[1], 0), BaseCurve::new("L2", &[1], 0), BaseCurve::new("L3", &[1], 0)],
        }
    } else {
        let genus = rng.gen_range(0..=2);
        let e = rng.gen_range(1..=3);
        BaseSpec::Ruled {
            genus,
            e,
            extra: vec![
                BaseCurve::new("Cinf", &[1, e as i64], genus),
                BaseCurve::new("f1", &[0, 1], 0),
                BaseCurve::new("f2", &[0, 1], 0),
            ],
        }
    };
    let mut model = SurfaceModel::make_base(base).expect("valid base");
    let steps = rng.gen_range(0..=max_steps);
    for _ in 0..steps {
        let nodes = boundary_nodes(&model);
        let Some((a, b)) = nodes.choose(rng).cloned() else { break };
        model = model.blow_up(&BlowUpCenter::on(&a).with(&b, 1)).expect("nodes have budget");
    }
    model
}

/// Pairs of meeting boundary curves at the top level.
pub fn boundary_nodes(model: &SurfaceModel) -> Vec<(String, String)> {
    let top = model.top();
    let boundary: Vec<_> = top.curves.iter().filter(|c| is_boundary_stem(&c.stem)).collect();
    let mut nodes = Vec::new();
    for (i, a) in boundary.iter().enumerate() {
        for b in &boundary[i + 1..] {
            if top.intersect(&a.class, &b.class).unwrap().is_positive() {
                nodes.push((a.id.clone(), b.id.clone()));
            }
        }
    }
    nodes
}

pub fn random_boundary(rng: &mut Rng8, model: &SurfaceModel, level: usize) -> RDivisor {
    let table = [(1, 4), (1, 3), (1, 2), (2, 3), (1, 1), (4, 3)];
    let mut d = RDivisor::zero(level);
    for c in &model.levels()[level].curves {
        if is_boundary_stem(&c.stem) && rng.gen_bool(0.35) {
            d.add_term(&c.id, &pick_coeff(rng, &table));
        }
    }
    d
}

/// A random pair on a C* tower. Boundaries that make `-(K+Δ)` fail to be
/// pseudoeffective are halved, down to zero.
pub fn random_cstar_pair(rng: &mut Rng8) -> PairSpec {
    loop {
        let model = random_cstar_tower(rng, 5);
        let level = rng.gen_range(0..=model.top_index());
        let mut delta = random_boundary(rng, &model, level);
        for _ in 0..4 {
            match PairSpec::new(model.clone(), level, delta.clone()) {
                Ok(p) => return p,
                Err(PairError::NotPseudoeffective(_)) => delta = delta.scale(&rat(1, 2)),
                Err(e) => panic!("unexpected pair error: {e}"),
            }
        }
        if let Ok(p) = PairSpec::new(model, level, RDivisor::zero(level)) {
            return p;
        }
    }
}

/// An effective boundary divisor at `level` that is positive on every
/// catalog curve and has positive square: ample on a C* tower.
pub fn ample_boundary(model: &SurfaceModel, level: usize) -> RDivisor {
    let base = match model.base() {
        BaseSpec::ProjectivePlane { .. } => model.divisor(0, &[("L1", int(1)), ("L2", int(1)), ("L3", int(1))]).unwrap(),
        BaseSpec::Ruled { e, .. } => {
            let w = int(*e as i64 + 1);
            model.divisor(0, &[("C0", int(1)), ("Cinf", int(1)), ("f1", w.clone()), ("f2", w)]).unwrap()
        }
        BaseSpec::AbstractLattice { .. } => panic!("no ample boundary for abstract lattices"),
    };
    let mut h = base;
    for k in 1..=level {
        let up = model.pull_back_divisor(k - 1, k, &h).unwrap();
        let e = model.levels()[k].center.as_ref().unwrap().exceptional.clone();
        let mut delta = up.coeff(&e) / int(2);
        let found = loop {
            let candidate = up.add(&RDivisor::zero(k).with(&e, -delta.clone()));
            if is_ample_on_catalog(model, k, &candidate) {
                break candidate;
            }
            delta /= int(2);
            assert!(delta > rat(1, 1 << 20), "no ample perturbation found");
        };
        h = found;
    }
    assert!(h.is_effective());
    h
}

pub fn is_ample_on_catalog(model: &SurfaceModel, level: usize, d: &RDivisor) -> bool {
    let lv = &model.levels()[level];
    let class = model.class_of(d).unwrap();
    lv.form.square(&class).unwrap().is_positive()
        && lv.curves.iter().all(|c| lv.form.intersect(&class, &c.class).unwrap().is_positive())
}

pub fn one() -> Rational {
    Rational::one()
}
