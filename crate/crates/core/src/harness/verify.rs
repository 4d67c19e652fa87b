use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{Mode, ResidualRecord, ResidualReport, SkippedPair, SweepParams};
use crate::error::{Error, Result};
use crate::geometry::{Space, SpaceParams};
use crate::operators::{apply_operator, OperatorTag};
use crate::solutions::{is_critical, FamilyTag, SolutionFamily};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub op: OperatorTag,
    pub family: FamilyTag,
    pub p: Vec<f64>,
    #[serde(rename = "L")]
    pub l: Vec<f64>,
    pub tol: f64,
    pub mode: Mode,
}

impl Sweep {
    pub fn new(op: OperatorTag, family: FamilyTag, p: &[f64], l: &[f64]) -> Self {
        Sweep {
            op,
            family,
            p: p.to_vec(),
            l: l.to_vec(),
            tol: Mode::Vanishing.default_tolerance(),
            mode: Mode::Vanishing,
        }
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn nonzero(mut self) -> Self {
        self.mode = Mode::Nonzero;
        self.tol = Mode::Nonzero.default_tolerance();
        self
    }
}

fn needs_finite_p(op: OperatorTag) -> bool {
    !matches!(
        op,
        OperatorTag::Bgg | OperatorTag::ModifiedInfinity | OperatorTag::InfinityLaplacian
    )
}

fn check_compatible(op: OperatorTag, family: FamilyTag, space: &Space) -> Result<()> {
    let bad = |why: &str| Err(Error::InvalidParameter(format!("{op} on {family}: {why}")));
    if family.is_grushin() != matches!(space, Space::Grushin { .. }) {
        return bad("family is not defined on this space");
    }
    if family.is_infinity() && needs_finite_p(op) {
        return bad("operator needs a finite p");
    }
    match op {
        OperatorTag::NeggPlusNp | OperatorTag::NeggMinusNp | OperatorTag::NeggTruncated if family != FamilyTag::FPL => {
            bad("requires f_pL")
        }
        OperatorTag::NeghTruncated if family != FamilyTag::UPL || *space != (Space::Heisenberg { n: 1 }) => {
            bad("requires u_pL on H^1")
        }
        _ => Ok(()),
    }
}

fn skip_reason(sweep: &Sweep, space: &Space, p: Option<f64>, l: f64) -> Option<String> {
    let op = sweep.op;
    match op {
        OperatorTag::Bgg if p.is_some_and(|p| p != 2.0) || p.is_none() => Some("bgg identity is stated at p = 2".into()),
        OperatorTag::ModifiedPLaplacian | OperatorTag::ModifiedInfinity
            if l.abs() == 1.0 && !sweep.family.ignores_l() =>
        {
            Some("mixed vector vanishes identically at L = ±1".into())
        }
        OperatorTag::NeggPlusNp | OperatorTag::NeggMinusNp => {
            if p.is_some_and(|p| is_critical(space, p)) {
                Some("power-family constants undefined at p = n+2".into())
            } else if l == 0.0 || l.abs() == 1.0 {
                Some("identity requires L outside {-1, 0, 1}".into())
            } else {
                None
            }
        }
        OperatorTag::NeggTruncated | OperatorTag::NeghTruncated if sweep.mode == Mode::Nonzero => {
            if l == 0.0 {
                Some("operator vanishes at L = 0".into())
            } else if p == Some(2.0) {
                Some("operator vanishes at p = 2".into())
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Evaluates `sweep.op` on `sweep.family` at every point and every admissible
/// `(p, L)` pair. Pairs failing an operator precondition are recorded as
/// skipped; any other evaluation error aborts with context.
pub fn run_verification(sweep: &Sweep, space: &Space, points: &[Vec<f64>]) -> Result<ResidualReport> {
    let start = Instant::now();
    check_compatible(sweep.op, sweep.family, space)?;
    for p in &sweep.p {
        if !(*p > 1.0) {
            return Err(Error::InvalidParameter(format!("p must exceed 1, got {p}")));
        }
    }
    let p_values: Vec<Option<f64>> = if sweep.family.is_infinity() {
        vec![None]
    } else {
        sweep.p.iter().copied().map(Some).collect()
    };
    let l_values: Vec<f64> = if sweep.family.ignores_l() {
        vec![0.0]
    } else {
        sweep.l.clone()
    };

    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for &p in &p_values {
        for &l in &l_values {
            match skip_reason(sweep, space, p, l) {
                Some(reason) => skipped.push(SkippedPair { p, l, reason }),
                None => {
                    let params = SpaceParams::new(*space, p.unwrap_or(f64::INFINITY), l)?;
                    pairs.push((p, l, SolutionFamily::new(sweep.family, params)?));
                }
            }
        }
    }

    let tasks: Vec<(usize, usize)> = (0..pairs.len())
        .flat_map(|k| (0..points.len()).map(move |i| (k, i)))
        .collect();
    let results: Vec<Result<ResidualRecord>> = tasks
        .par_iter()
        .map(|&(k, i)| {
            let (p, l, fam) = &pairs[k];
            let pt = &points[i];
            let v = apply_operator(sweep.op, fam, pt).map_err(|e| e.at(pt, *p, *l))?;
            Ok(ResidualRecord {
                point_index: i,
                p: *p,
                l: *l,
                re: v.residual.re,
                im: v.residual.im,
                scale: v.scale,
                relative: v.relative,
                pass: false,
            })
        })
        .collect();
    let residuals = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut report = ResidualReport::assemble(
        sweep.op.name().into(),
        sweep.family.name().into(),
        *space,
        SweepParams {
            p: if sweep.family.is_infinity() { vec![] } else { sweep.p.clone() },
            l: l_values,
        },
        sweep.mode,
        sweep.tol,
        points.to_vec(),
        residuals,
        skipped,
    );
    report.metadata.duration_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}
