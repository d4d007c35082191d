//! Rational chain connectedness of loci, read off genus labels and the
//! incidence graph of their components.

use num::traits::Signed;

use crate::potential::{pnklt_locus, LocusComponent, PairError, PairSpec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceGraph {
    pub nodes: Vec<LocusComponent>,
    /// Index pairs `(i, j)` with `i < j`.
    pub edges: Vec<(usize, usize)>,
}

impl IncidenceGraph {
    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &(a, b) in &self.edges {
                let next = if a == i { b } else if b == i { a } else { continue };
                if !seen[next] {
                    seen[next] = true;
                    stack.push(next);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Curves are adjacent when they meet on `X`; a point is adjacent to the
/// curves through it.
pub fn incidence_graph(pair: &PairSpec, comps: &[LocusComponent]) -> IncidenceGraph {
    let x = &pair.model().levels()[pair.pair_level()];
    let mut edges = Vec::new();
    for (i, a) in comps.iter().enumerate() {
        for (j, b) in comps.iter().enumerate().skip(i + 1) {
            let adjacent = match (a, b) {
                (LocusComponent::Curve { id: p, .. }, LocusComponent::Curve { id: q, .. }) => {
                    match (x.curve(p), x.curve(q)) {
                        (Some(cp), Some(cq)) => x.intersect(&cp.class, &cq.class).map(|v| v.is_positive()).unwrap_or(false),
                        _ => false,
                    }
                }
                (LocusComponent::Point { on_curves, .. }, LocusComponent::Curve { id, .. })
                | (LocusComponent::Curve { id, .. }, LocusComponent::Point { on_curves, .. }) => on_curves.contains(id),
                (LocusComponent::Point { .. }, LocusComponent::Point { .. }) => false,
            };
            if adjacent {
                edges.push((i, j));
            }
        }
    }
    IncidenceGraph { nodes: comps.to_vec(), edges }
}

/// Empty, or connected with every curve rational.
pub fn is_rcc_locus(graph: &IncidenceGraph) -> bool {
    graph.nodes.is_empty() || (graph.is_connected() && graph.nodes.iter().all(|c| c.genus() == 0))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RccVerdict {
    pub rcc: bool,
    pub explanation: String,
}

/// With `-K_X` big, `X` is rationally chain connected iff `pNklt(X, 0)` is.
pub fn surface_rcc_via_pnklt(pair: &PairSpec) -> Result<RccVerdict, PairError> {
    if !pair.delta().is_zero() {
        return Err(PairError::NotApplicable("transfer requires the boundary to be zero".into()));
    }
    if !pair.is_big() {
        return Err(PairError::NotApplicable("transfer requires -K big".into()));
    }
    let locus = pnklt_locus(pair)?;
    let graph = incidence_graph(pair, &locus.components);
    let rcc = is_rcc_locus(&graph);
    let explanation = if locus.is_empty() {
        "pNklt(X, 0) is empty and -K is big: X is rationally connected".to_string()
    } else if rcc {
        format!("pNklt(X, 0) = {locus} is a connected chain of rational curves; -K big transfers this to X")
    } else {
        let irrational: Vec<String> =
            locus.components.iter().filter(|c| c.genus() > 0).map(|c| format!("{} (genus {})", c.name(), c.genus())).collect();
        if irrational.is_empty() {
            format!("pNklt(X, 0) = {locus} is disconnected; with -K big, X is not rationally chain connected")
        } else {
            format!("pNklt(X, 0) contains irrational curves {}; with -K big, X is not rationally chain connected", irrational.join(", "))
        }
    };
    Ok(RccVerdict { rcc, explanation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{BaseCurve, BaseSpec, BlowUpCenter, RDivisor, SurfaceModel};

    fn pair(model: SurfaceModel, level: usize) -> PairSpec {
        PairSpec::new(model, level, RDivisor::zero(level)).unwrap()
    }

    fn improvebp() -> PairSpec {
        let m = SurfaceModel::make_base(BaseSpec::ruled(2, 3)).unwrap().blow_up(&BlowUpCenter::on("C0")).unwrap();
        pair(m, 1)
    }

    #[test]
    fn graph_examples() {
        let p = improvebp();
        let c0 = LocusComponent::Curve { id: "C0~".into(), genus: 2 };
        let e = LocusComponent::Curve { id: "E1".into(), genus: 0 };
        let single = incidence_graph(&p, std::slice::from_ref(&c0));
        assert_eq!((single.nodes.len(), single.edges.len()), (1, 0));
        assert!(!is_rcc_locus(&single));
        let both = incidence_graph(&p, &[c0, e.clone()]);
        assert_eq!(both.edges, vec![(0, 1)]);
        let empty = incidence_graph(&p, &[]);
        assert!(empty.nodes.is_empty() && is_rcc_locus(&empty));
        assert!(is_rcc_locus(&incidence_graph(&p, &[e])));
    }

    #[test]
    fn disconnected_points_are_not_rcc() {
        let p = improvebp();
        let a = LocusComponent::Point { label: "p1".into(), on_curves: vec![] };
        let b = LocusComponent::Point { label: "p2".into(), on_curves: vec![] };
        assert!(is_rcc_locus(&incidence_graph(&p, std::slice::from_ref(&a))));
        assert!(!is_rcc_locus(&incidence_graph(&p, &[a, b])));
    }

    #[test]
    fn surface_examples() {
        let f3 = SurfaceModel::make_base(BaseSpec::ruled(0, 3)).unwrap();
        assert!(surface_rcc_via_pnklt(&pair(f3, 0)).unwrap().rcc);
        let v = surface_rcc_via_pnklt(&improvebp()).unwrap();
        assert!(!v.rcc && v.explanation.contains("genus 2"));
        let mut p2 = SurfaceModel::make_base(BaseSpec::plane()).unwrap();
        for _ in 0..3 {
            p2 = p2.blow_up(&BlowUpCenter::free()).unwrap();
        }
        assert!(surface_rcc_via_pnklt(&pair(p2, 3)).unwrap().rcc);
    }

    #[test]
    fn requires_big_anticanonical() {
        let mut m = SurfaceModel::make_base(BaseSpec::ProjectivePlane { curves: vec![BaseCurve::new("C", &[3], 1)] }).unwrap();
        for _ in 0..12 {
            m = m.blow_up(&BlowUpCenter::on("C")).unwrap();
        }
        let p = pair(m, 12);
        assert!(matches!(surface_rcc_via_pnklt(&p), Err(PairError::NotApplicable(_))));
        let graph = incidence_graph(&p, &pnklt_locus(&p).unwrap().components);
        assert!(!is_rcc_locus(&graph));
    }
}
