//! Zariski decomposition `D = P + N` on one tower level.
//!
//! Nefness, bigness and pseudoeffectivity are certified against the level's
//! curve catalog only. Negative curves missing from the catalog are invisible.

use num::traits::{Signed, Zero};
use thiserror::Error;

use crate::lattice::{gram_submatrix, is_negative_definite, solve_exact, DivisorClass, LatticeError, Matrix, Rational};
use crate::surface::{ModelError, RDivisor, SurfaceModel};

/// Printed with every nef/big/pseudoeffective verdict.
pub const CATALOG_DISCLAIMER: &str =
    "nef, big and pseudoeffective verdicts are certified against the model's finite curve catalog only";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZariskiError {
    #[error("not pseudoeffective against catalog, or catalog incomplete: {0}")]
    NotPseudoeffective(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<LatticeError> for ZariskiError {
    fn from(e: LatticeError) -> Self {
        ZariskiError::Model(e.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NefCertificate {
    pub tested_curves: Vec<String>,
    pub violations: Vec<(String, Rational)>,
}

impl NefCertificate {
    pub fn is_nef(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZariskiCertificate {
    pub support: Vec<String>,
    /// Gram matrix of the support, `None` when `N = 0`.
    pub gram: Option<Matrix>,
    /// `P·C` for each support curve; all zero.
    pub orthogonality: Vec<(String, Rational)>,
    pub nef: NefCertificate,
    pub rounds: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZariskiDecomposition {
    pub positive: DivisorClass,
    pub negative: RDivisor,
    pub certificate: ZariskiCertificate,
}

pub fn is_nef_against_catalog(model: &SurfaceModel, level: usize, d: &DivisorClass) -> Result<NefCertificate, ModelError> {
    let lv = model.level(level)?;
    let mut cert = NefCertificate { tested_curves: Vec::new(), violations: Vec::new() };
    for c in &lv.curves {
        let v = lv.intersect(d, &c.class)?;
        cert.tested_curves.push(c.id.clone());
        if v.is_negative() {
            cert.violations.push((c.id.clone(), v));
        }
    }
    Ok(cert)
}

/// Iterative negative-curve algorithm: grow the support by every catalog
/// curve the current positive part meets negatively, re-solving
/// `gram(S)·x = (D·C)_{C∈S}` each round.
pub fn zariski_decompose(model: &SurfaceModel, level: usize, d: &DivisorClass) -> Result<ZariskiDecomposition, ZariskiError> {
    let lv = model.level(level)?;
    let curves = &lv.curves;
    let d_dot: Vec<Rational> = curves.iter().map(|c| lv.intersect(d, &c.class)).collect::<Result<_, _>>()?;
    let mut in_support = vec![false; curves.len()];
    let mut x: Vec<Rational> = Vec::new();
    let mut positive = d.clone();
    let mut rounds = 0;
    loop {
        let violators: Vec<usize> = (0..curves.len())
            .filter(|&i| !in_support[i])
            .filter(|&i| lv.intersect(&positive, &curves[i].class).is_ok_and(|v| v.is_negative()))
            .collect();
        if violators.is_empty() {
            break;
        }
        rounds += 1;
        for i in violators {
            in_support[i] = true;
        }
        let idx: Vec<usize> = (0..curves.len()).filter(|&i| in_support[i]).collect();
        let classes: Vec<DivisorClass> = idx.iter().map(|&i| curves[i].class.clone()).collect();
        let gram = gram_submatrix(&classes, &lv.form)?;
        let names = || idx.iter().map(|&i| curves[i].id.as_str()).collect::<Vec<_>>().join(", ");
        if !is_negative_definite(&gram)? {
            return Err(ZariskiError::NotPseudoeffective(format!("curves {{{}}} are not negative definite", names())));
        }
        let rhs: Vec<Rational> = idx.iter().map(|&i| d_dot[i].clone()).collect();
        x = solve_exact(&gram, &rhs).map_err(|e| ZariskiError::NotPseudoeffective(format!("{{{}}}: {e}", names())))?;
        positive = d.clone();
        for (k, &i) in idx.iter().enumerate() {
            positive = positive.add_scaled(&-x[k].clone(), &curves[i].class)?;
        }
    }

    let idx: Vec<usize> = (0..curves.len()).filter(|&i| in_support[i]).collect();
    let mut negative = RDivisor::zero(level);
    for (k, &i) in idx.iter().enumerate() {
        if x[k].is_negative() {
            return Err(ZariskiError::NotPseudoeffective(format!("negative coefficient {} on {}", x[k], curves[i].id)));
        }
        negative.add_term(&curves[i].id, &x[k]);
    }
    if lv.form.square(&positive)?.is_negative() {
        return Err(ZariskiError::NotPseudoeffective("positive part has negative square".into()));
    }

    let support = negative.support();
    let support_classes: Vec<DivisorClass> = support.iter().map(|id| lv.curve(id).expect("catalog").class.clone()).collect();
    let gram = if support_classes.is_empty() { None } else { Some(gram_submatrix(&support_classes, &lv.form)?) };
    let orthogonality = support
        .iter()
        .zip(&support_classes)
        .map(|(id, c)| Ok((id.clone(), lv.intersect(&positive, c)?)))
        .collect::<Result<Vec<_>, LatticeError>>()?;
    let nef = is_nef_against_catalog(model, level, &positive)?;
    debug_assert!(nef.is_nef());
    debug_assert!(orthogonality.iter().all(|(_, v)| v.is_zero()));
    Ok(ZariskiDecomposition {
        positive,
        negative,
        certificate: ZariskiCertificate { support, gram, orthogonality, nef, rounds },
    })
}

/// `P^2 > 0` for the positive part.
pub fn is_big(model: &SurfaceModel, level: usize, d: &DivisorClass) -> Result<bool, ZariskiError> {
    let z = zariski_decompose(model, level, d)?;
    Ok(model.level(level)?.form.square(&z.positive)?.is_positive())
}

pub fn is_pseudoeffective(model: &SurfaceModel, level: usize, d: &DivisorClass) -> bool {
    zariski_decompose(model, level, d).is_ok()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NnefLocus {
    /// `D` is not pseudoeffective, so the locus is the entire surface.
    EntireSurface,
    Curves(Vec<String>),
}

pub fn nnef_locus(model: &SurfaceModel, level: usize, d: &DivisorClass) -> NnefLocus {
    match zariski_decompose(model, level, d) {
        Ok(z) => NnefLocus::Curves(z.negative.support()),
        Err(_) => NnefLocus::EntireSurface,
    }
}
