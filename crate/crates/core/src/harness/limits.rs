use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::Metadata;
use crate::error::{Error, Result};
use crate::geometry::{Space, SpaceParams};
use crate::operators::{apply_operator, OperatorTag};
use crate::solutions::{FamilyTag, SolutionFamily};

const COLLAPSE_TOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub edge: String,
    pub description: String,
    pub checks: usize,
    pub failures: usize,
    /// Worst value of the edge's test statistic.
    pub worst: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub space: Space,
    #[serde(rename = "L")]
    pub l: Vec<f64>,
    pub ladder: Vec<f64>,
    pub tolerance: f64,
    pub point_count: usize,
    pub edges: Vec<EdgeReport>,
    pub pass: bool,
    pub metadata: Metadata,
}

impl LimitReport {
    pub fn edge(&self, name: &str) -> Option<&EdgeReport> {
        self.edges.iter().find(|e| e.edge == name)
    }
}

#[derive(Default)]
struct Tally {
    checks: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    fn push(&mut self, ok: bool, stat: f64) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
        }
        if stat > self.worst || stat.is_nan() {
            self.worst = stat;
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.checks += other.checks;
        self.failures += other.failures;
        if other.worst > self.worst || other.worst.is_nan() {
            self.worst = other.worst;
        }
        self
    }

    fn finish(self, edge: &str, description: &str) -> EdgeReport {
        EdgeReport {
            edge: edge.into(),
            description: description.into(),
            checks: self.checks,
            failures: self.failures,
            worst: self.worst,
            pass: self.checks > 0 && self.failures == 0,
        }
    }
}

fn family(tag: FamilyTag, space: &Space, p: f64, l: f64) -> Result<SolutionFamily> {
    SolutionFamily::new(tag, SpaceParams::new(*space, p, l)?)
}

/// For each point, whether `|f_k - limit|` strictly decreases along the ladder.
/// The statistic is the largest ratio of consecutive distances.
fn monotone(tally: &mut Tally, fams: &[SolutionFamily], limit: &SolutionFamily, pt: &[f64]) -> Result<()> {
    let target = limit.value_at(pt)?;
    let dists = fams
        .iter()
        .map(|f| Ok((f.value_at(pt)? - target).norm()))
        .collect::<Result<Vec<f64>>>()?;
    for w in dists.windows(2) {
        let ok = w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0);
        tally.push(ok, if w[0] > 0.0 { w[1] / w[0] } else { 0.0 });
    }
    Ok(())
}

fn residual_check(tally: &mut Tally, op: OperatorTag, fam: &SolutionFamily, pt: &[f64], tol: f64) -> Result<()> {
    let r = apply_operator(op, fam, pt)?;
    tally.push(r.relative <= tol, r.relative);
    Ok(())
}

/// `|a - b| / scale` against the collapse tolerance.
fn collapse(tally: &mut Tally, a: num_complex::Complex64, b: num_complex::Complex64, scale: f64) {
    let d = (a - b).norm() / scale.max(1e-300);
    tally.push(d <= COLLAPSE_TOL, d);
}

fn per_point<F>(points: &[Vec<f64>], f: F) -> Result<Tally>
where
    F: Fn(&mut Tally, &[f64]) -> Result<()> + Sync,
{
    let tallies = points
        .par_iter()
        .map(|pt| {
            let mut t = Tally::default();
            f(&mut t, pt).map(|_| t)
        })
        .collect::<Vec<Result<Tally>>>();
    tallies
        .into_iter()
        .try_fold(Tally::default(), |acc, t| Ok(acc.merge(t?)))
}

/// Checks the four edges of the square
///
/// ```text
/// modified Δ_p f_{p,L} = 0   --p→∞-->   modified Δ_∞ f_{∞,L} = 0
///        | L→0                                 | L→0
/// Δ_p f_{p,0} = 0            --p→∞-->   Δ_∞ f_{∞,0} = 0
/// ```
///
/// on `G_n`, and its analogue with `u` on `H^n`.
pub fn limit_diagram_check(space: &Space, points: &[Vec<f64>], l_list: &[f64], ladder: &[f64], tol: f64) -> Result<LimitReport> {
    let start = Instant::now();
    if ladder.is_empty() || ladder.windows(2).any(|w| !(w[1] > w[0])) || !(ladder[0] > 1.0) {
        return Err(Error::InvalidParameter("p ladder must be strictly increasing above 1".into()));
    }
    let (radial, core, infinity) = FamilyTag::for_space(space);
    let ladder_fams = |tag: FamilyTag, l: f64| {
        ladder
            .iter()
            .map(|&p| family(tag, space, p, l))
            .collect::<Result<Vec<_>>>()
    };

    let mut top = Tally::default();
    for &l in l_list {
        let fams = ladder_fams(core, l)?;
        let limit = family(infinity, space, f64::INFINITY, l)?;
        top = top.merge(per_point(points, |t, pt| {
            monotone(t, &fams, &limit, pt)?;
            for f in &fams {
                residual_check(t, OperatorTag::ModifiedPLaplacian, f, pt, tol)?;
            }
            Ok(())
        })?);
    }

    let mut right = Tally::default();
    for &l in l_list {
        let limit = family(infinity, space, f64::INFINITY, l)?;
        right = right.merge(per_point(points, |t, pt| {
            residual_check(t, OperatorTag::ModifiedInfinity, &limit, pt, tol)
        })?);
    }
    let limit0 = family(infinity, space, f64::INFINITY, 0.0)?;
    right = right.merge(per_point(points, |t, pt| {
        let a = apply_operator(OperatorTag::ModifiedInfinity, &limit0, pt)?;
        let b = apply_operator(OperatorTag::InfinityLaplacian, &limit0, pt)?;
        collapse(t, a.residual, b.residual, b.scale);
        Ok(())
    })?);

    let core0 = ladder_fams(core, 0.0)?;
    let radial0 = ladder_fams(radial, 0.0)?;
    let left = per_point(points, |t, pt| {
        for (f, r) in core0.iter().zip(&radial0) {
            let a = apply_operator(OperatorTag::ModifiedPLaplacian, f, pt)?;
            let b = apply_operator(OperatorTag::PLaplacian, f, pt)?;
            collapse(t, a.residual, b.residual, b.scale);
            let rv = r.value_at(pt)?;
            collapse(t, f.value_at(pt)?, rv, rv.norm());
        }
        Ok(())
    })?;

    let bottom = per_point(points, |t, pt| {
        monotone(t, &radial0, &limit0, pt)?;
        for r in &radial0 {
            residual_check(t, OperatorTag::PLaplacian, r, pt, tol)?;
        }
        residual_check(t, OperatorTag::InfinityLaplacian, &limit0, pt, tol)
    })?;

    let edges = vec![
        top.finish("top", "core family converges monotonically to the p = inf family; modified operator vanishes along the ladder"),
        right.finish("right", "modified infinity operator vanishes for every L; equals the infinity Laplacian at L = 0"),
        left.finish("left", "at L = 0 the modified operator equals the p-Laplacian and the core family equals the radial family"),
        bottom.finish("bottom", "radial family converges monotonically to the L = 0 infinity family; both operators vanish"),
    ];
    let pass = edges.iter().all(|e| e.pass);
    Ok(LimitReport {
        space: *space,
        l: l_list.to_vec(),
        ladder: ladder.to_vec(),
        tolerance: tol,
        point_count: points.len(),
        edges,
        pass,
        metadata: Metadata {
            duration_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    })
}
