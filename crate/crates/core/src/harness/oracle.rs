use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::Space;
use crate::jet::{finite_difference_jet, CJet2, C64};
use crate::solutions::SolutionFamily;

pub const H_GRAD: f64 = 1e-6;
pub const H_HESS: f64 = 1e-4;
pub const GRAD_TOL: f64 = 1e-5;
pub const HESS_TOL: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub family: String,
    /// `None` for the `p = ∞` families.
    pub p: Option<f64>,
    #[serde(rename = "L")]
    pub l: f64,
    pub space: Space,
    pub point_count: usize,
    pub grad_max: f64,
    pub hess_max: f64,
    pub grad_tol: f64,
    pub hess_tol: f64,
    pub pass: bool,
}

fn norm(v: impl Iterator<Item = C64>) -> f64 {
    v.map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Normwise relative deviations `(gradient, Hessian)` between two jets.
pub fn jet_deviation(ad: &CJet2, fd: &CJet2) -> (f64, f64) {
    let d = ad.dim();
    let g_diff = norm(ad.grad().iter().zip(fd.grad()).map(|(a, b)| a - b));
    let g_ref = norm(ad.grad().iter().copied());
    let cells = || (0..d).flat_map(move |i| (0..d).map(move |j| (i, j)));
    let h_diff = norm(cells().map(|(i, j)| ad.hess(i, j) - fd.hess(i, j)));
    let h_ref = norm(cells().map(|(i, j)| ad.hess(i, j)));
    (g_diff / g_ref.max(1e-300), h_diff / h_ref.max(1e-300))
}

/// Maximum AD-vs-central-difference deviation of `fam` over `points`.
pub fn ad_vs_fd_report(fam: &SolutionFamily, points: &[Vec<f64>]) -> Result<OracleReport> {
    let devs = points
        .par_iter()
        .map(|pt| {
            let ad = fam.eval(pt)?;
            let fd = finite_difference_jet(|x| fam.value_at(x), pt, H_GRAD, H_HESS)?;
            Ok(jet_deviation(&ad, &fd))
        })
        .collect::<Vec<Result<(f64, f64)>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let grad_max = devs.iter().map(|d| d.0).fold(0.0, f64::max);
    let hess_max = devs.iter().map(|d| d.1).fold(0.0, f64::max);
    let p = fam.params.p;
    Ok(OracleReport {
        family: fam.tag.name().into(),
        p: p.is_finite().then_some(p),
        l: fam.params.l,
        space: fam.params.space,
        point_count: points.len(),
        grad_max,
        hess_max,
        grad_tol: GRAD_TOL,
        hess_tol: HESS_TOL,
        pass: !points.is_empty() && grad_max <= GRAD_TOL && hess_max <= HESS_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpaceParams;
    use crate::harness::grid::{generate_grid, GridSpec};
    use crate::solutions::FamilyTag;

    #[test]
    fn oracle_examples() {
        let g1 = Space::grushin(1, 0.0, 0.0, 1.0).unwrap();
        let fam = SolutionFamily::new(FamilyTag::FPL, SpaceParams::new(g1, 2.0, 0.0).unwrap()).unwrap();
        let r = ad_vs_fd_report(&fam, &generate_grid(&GridSpec::new(g1)).unwrap()).unwrap();
        assert!(r.grad_max <= 1e-5 && r.pass, "{r:?}");

        let h1 = Space::heisenberg(1).unwrap();
        let fam = SolutionFamily::new(FamilyTag::UInfL, SpaceParams::new(h1, f64::INFINITY, 1.5).unwrap()).unwrap();
        let r = ad_vs_fd_report(&fam, &generate_grid(&GridSpec::new(h1)).unwrap()).unwrap();
        assert!(r.hess_max <= 1e-4 && r.pass, "{r:?}");
        assert_eq!(r.p, None);
    }

    #[test]
    fn identical_jets_have_zero_deviation() {
        let j = crate::jet::seed_point(&[0.3, 0.4]).unwrap();
        let u = &j[0] * &j[1];
        assert_eq!(jet_deviation(&u, &u), (0.0, 0.0));
    }
}
