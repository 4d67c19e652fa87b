//! The reproduction suite: one function per acceptance criterion, with the
//! grids, sweeps and tolerances fixed here.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{group_inverse, group_multiply, heisenberg_divergence, lie_bracket_apply, Space, SpaceParams};
use crate::harness::{
    ad_vs_fd_report, generate_grid, limit_diagram_check, run_verification, testfns::TestFunctions, GridSpec, ResidualReport,
    Sweep,
};
use crate::jet::{seed_point, CJet2, C64};
use crate::operators::{closed_form_audit, negh_residual, p_laplacian_divergence_form, p_laplacian_reduced, OperatorTag};
use crate::solutions::{is_critical, FamilyTag, SolutionFamily};

pub const RADIAL_TOL: f64 = 1e-9;
pub const BGG_TOL: f64 = 1e-9;
pub const MODIFIED_TOL: f64 = 1e-8;
pub const INFINITY_TOL: f64 = 1e-8;
pub const NEGG_TOL: f64 = 1e-8;
pub const NONZERO_TOL: f64 = 1e-3;
pub const NEGH_VANISH_TOL: f64 = 1e-9;
pub const STRUCTURE_TOL: f64 = 1e-12;
pub const DIVERGENCE_FORM_TOL: f64 = 1e-10;
pub const NORMVAL_RSD_TOL: f64 = 1e-8;

pub const L_SWEEP: [f64; 7] = [0.0, 0.5, -0.5, 1.5, -1.5, 2.0, -2.0];
pub const RADIAL_P: [f64; 5] = [1.5, 2.0, 2.5, 4.0, 10.0];
pub const MODIFIED_P: [f64; 8] = [1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 6.0, 10.0];
pub const NEGG_P: [f64; 3] = [3.5, 4.0, 6.0];
pub const NEGG_L: [f64; 4] = [0.5, -0.5, 2.0, -2.0];
pub const NEGH_P: [f64; 2] = [3.0, 6.0];
pub const LADDER: [f64; 3] = [10.0, 100.0, 1000.0];
pub const NORMVAL_P: [f64; 7] = [1.5, 2.0, 2.5, 3.0, 3.5, 6.0, 10.0];
pub const NORMVAL_POINTS: usize = 20;
pub const RANDOM_FUNCTIONS: usize = 200;
pub const SEED: u64 = 42;

pub fn grushin_spaces() -> [Space; 2] {
    [
        Space::Grushin { n: 1, a: 0.0, b: 0.0, c: 1.0 },
        Space::Grushin { n: 2, a: 0.5, b: -0.25, c: -1.5 },
    ]
}

pub fn heisenberg_spaces() -> [Space; 2] {
    [Space::Heisenberg { n: 1 }, Space::Heisenberg { n: 2 }]
}

pub fn all_spaces() -> [Space; 4] {
    let [g1, g2] = grushin_spaces();
    let [h1, h2] = heisenberg_spaces();
    [g1, g2, h1, h2]
}

pub fn default_grid(space: &Space) -> Result<Vec<Vec<f64>>> {
    generate_grid(&GridSpec::new(*space).with_seed(SEED))
}

fn space_label(space: &Space) -> String {
    match *space {
        Space::Heisenberg { n } => format!("H^{n}"),
        Space::Grushin { n, a, b, c } => format!("G_{n}(a={a},b={b},c={c})"),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub pass: bool,
    pub statistic: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl CriterionOutcome {
    fn new(id: u8, title: &str, checks: Vec<Check>) -> Self {
        CriterionOutcome {
            id,
            title: title.into(),
            pass: !checks.is_empty() && checks.iter().all(|c| c.pass),
            checks,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let worst = self
            .checks
            .iter()
            .find(|c| !c.pass)
            .or_else(|| self.checks.first())
            .map(|c| format!("{}: {:.3e}", c.label, c.statistic))
            .unwrap_or_default();
        write!(
            f,
            "criterion {:>2} {} {} ({} checks; {})",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.checks.len(),
            worst
        )
    }
}

fn report_check(label: String, r: &ResidualReport) -> Check {
    let statistic = match r.mode {
        crate::harness::Mode::Vanishing => r.max_rel,
        crate::harness::Mode::Nonzero => r.min_rel,
    };
    Check {
        label,
        pass: r.pass,
        statistic,
        detail: format!(
            "{} records, {} skipped pairs, max_rel {:.3e}, min_rel {:.3e}, tol {:.0e}",
            r.residuals.len(),
            r.skipped.len(),
            r.max_rel,
            r.min_rel,
            r.tolerance
        ),
    }
}

fn sweep_check(label: String, sweep: &Sweep, space: &Space, points: &[Vec<f64>]) -> Result<(Check, ResidualReport)> {
    let r = run_verification(sweep, space, points)?;
    Ok((report_check(label, &r), r))
}

fn radial(id: u8, title: &str, spaces: [Space; 2], family: FamilyTag) -> Result<CriterionOutcome> {
    let mut checks = Vec::new();
    for space in spaces {
        let p: Vec<f64> = RADIAL_P.iter().copied().filter(|&p| !is_critical(&space, p)).collect();
        let sweep = Sweep::new(OperatorTag::PLaplacian, family, &p, &[0.0]).tol(RADIAL_TOL);
        checks.push(sweep_check(space_label(&space), &sweep, &space, &default_grid(&space)?)?.0);
    }
    Ok(CriterionOutcome::new(id, title, checks))
}

pub fn criterion_1() -> Result<CriterionOutcome> {
    radial(1, "radial p-harmonic functions on Grushin planes", grushin_spaces(), FamilyTag::PsiP)
}

pub fn criterion_2() -> Result<CriterionOutcome> {
    radial(2, "radial p-harmonic functions on Heisenberg groups", heisenberg_spaces(), FamilyTag::ZetaP)
}

pub fn criterion_3() -> Result<CriterionOutcome> {
    let mut checks = Vec::new();
    for space in all_spaces() {
        let (_, core, _) = FamilyTag::for_space(&space);
        let sweep = Sweep::new(OperatorTag::Bgg, core, &[2.0], &L_SWEEP).tol(BGG_TOL);
        checks.push(sweep_check(space_label(&space), &sweep, &space, &default_grid(&space)?)?.0);
    }
    Ok(CriterionOutcome::new(3, "bracket-perturbed 2-Laplacian on the p = 2 core family", checks))
}

pub fn criterion_4() -> Result<CriterionOutcome> {
    let mut checks = Vec::new();
    for space in all_spaces() {
        let (_, core, _) = FamilyTag::for_space(&space);
        let sweep = Sweep::new(OperatorTag::ModifiedPLaplacian, core, &MODIFIED_P, &L_SWEEP).tol(MODIFIED_TOL);
        checks.push(sweep_check(space_label(&space), &sweep, &space, &default_grid(&space)?)?.0);
    }
    Ok(CriterionOutcome::new(4, "modified p-Laplacian on the core families, including logarithmic cases", checks))
}

pub fn criterion_5() -> Result<CriterionOutcome> {
    let mut checks = Vec::new();
    for space in all_spaces() {
        let points = default_grid(&space)?;
        let (_, _, inf) = FamilyTag::for_space(&space);
        let sweep = Sweep::new(OperatorTag::ModifiedInfinity, inf, &[], &L_SWEEP).tol(INFINITY_TOL);
        checks.push(sweep_check(format!("{} infinity operator", space_label(&space)), &sweep, &space, &points)?.0);
        let diagram = limit_diagram_check(&space, &points, &L_SWEEP, &LADDER, INFINITY_TOL)?;
        for e in &diagram.edges {
            checks.push(Check {
                label: format!("{} diagram {}", space_label(&space), e.edge),
                pass: e.pass,
                statistic: e.worst,
                detail: format!("{} checks, {} failures: {}", e.checks, e.failures, e.description),
            });
        }
    }
    Ok(CriterionOutcome::new(5, "infinity operators and the limit diagrams", checks))
}

pub fn criterion_6() -> Result<CriterionOutcome> {
    let mut checks = Vec::new();
    for space in grushin_spaces() {
        let points = default_grid(&space)?;
        let label = space_label(&space);
        let plus = run_verification(
            &Sweep::new(OperatorTag::NeggPlusNp, FamilyTag::FPL, &NEGG_P, &NEGG_L).tol(NEGG_TOL),
            &space,
            &points,
        )?;
        let minus = run_verification(
            &Sweep::new(OperatorTag::NeggMinusNp, FamilyTag::FPL, &NEGG_P, &NEGG_L).tol(NEGG_TOL),
            &space,
            &points,
        )?;
        let winner = match (plus.pass, minus.pass) {
            (true, false) => "(1 + np)",
            (false, true) => "(1 - np)",
            (true, true) => "both",
            (false, false) => "neither",
        };
        checks.push(Check {
            label: format!("{label} sign adjudication"),
            pass: plus.pass != minus.pass,
            statistic: plus.max_rel.min(minus.max_rel),
            detail: format!(
                "vanishing variant: {winner}; (1 + np) max_rel {:.3e}, (1 - np) max_rel {:.3e}, (1 - np) min_rel {:.3e}",
                plus.max_rel, minus.max_rel, minus.min_rel
            ),
        });
        let truncated = Sweep::new(OperatorTag::NeggTruncated, FamilyTag::FPL, &NEGG_P, &NEGG_L).nonzero();
        checks.push(sweep_check(format!("{label} truncated operator nonzero"), &truncated, &space, &points)?.0);
    }
    Ok(CriterionOutcome::new(6, "three-term Grushin identity and its truncation", checks))
}

/// Displayed-closed-form comparison on `H^1`; informational.
pub fn negh_audit(points: &[Vec<f64>]) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &p in &NEGH_P {
        for &l in &NEGG_L {
            let sp = SpaceParams::new(Space::Heisenberg { n: 1 }, p, l)?;
            let mut worst_rhs: f64 = 0.0;
            let mut worst_reduced: f64 = 0.0;
            for pt in points {
                let r = negh_residual(&sp, pt)?;
                worst_rhs = worst_rhs.max((r.computed.residual - r.displayed_rhs).norm() / r.computed.residual.norm());
                worst_reduced = worst_reduced.max((r.reduced - r.displayed_reduced).norm() / r.reduced.norm());
            }
            out.push(Check {
                label: format!("H^1 p={p} L={l} displayed forms"),
                pass: true,
                statistic: worst_rhs,
                detail: format!(
                    "final display vs computed: max rel dev {worst_rhs:.3e}; reduced-factor display vs computed: max rel dev {worst_reduced:.3e}"
                ),
            });
        }
    }
    Ok(out)
}

pub fn criterion_7() -> Result<CriterionOutcome> {
    let space = Space::Heisenberg { n: 1 };
    let points = default_grid(&space)?;
    let mut checks = Vec::new();
    let nonzero = Sweep::new(OperatorTag::NeghTruncated, FamilyTag::UPL, &NEGH_P, &NEGG_L).nonzero();
    checks.push(sweep_check("H^1 nonzero".into(), &nonzero, &space, &points)?.0);
    let at_l0 = Sweep::new(OperatorTag::NeghTruncated, FamilyTag::UPL, &NEGH_P, &[0.0]).tol(NEGH_VANISH_TOL);
    checks.push(sweep_check("H^1 vanishes at L = 0".into(), &at_l0, &space, &points)?.0);
    let at_p2 = Sweep::new(OperatorTag::NeghTruncated, FamilyTag::UPL, &[2.0], &L_SWEEP).tol(NEGH_VANISH_TOL);
    checks.push(sweep_check("H^1 vanishes at p = 2".into(), &at_p2, &space, &points)?.0);
    checks.extend(negh_audit(&points[..8])?);
    Ok(CriterionOutcome::new(7, "bracket-perturbed p-Laplacian on H^1 does not vanish", checks))
}

fn rel(diff: f64, scale: f64) -> f64 {
    diff / scale.max(1e-300)
}

fn tally(label: String, stats: impl IntoIterator<Item = f64>, tol: f64) -> Check {
    let mut count = 0;
    let mut worst: f64 = 0.0;
    for s in stats {
        count += 1;
        if s.is_nan() || s > worst {
            worst = s;
        }
    }
    Check {
        label,
        pass: count > 0 && worst <= tol,
        statistic: worst,
        detail: format!("{count} comparisons, worst {worst:.3e}, tol {tol:.0e}"),
    }
}

/// `[X_i, X_j] u` against the structure constants of the frame.
pub fn bracket_deviations(space: &Space, seed: u64, functions: usize) -> Result<Vec<f64>> {
    let mut tf = TestFunctions::new(seed, space.dim());
    let mut out = Vec::new();
    for _ in 0..functions {
        let poly = tf.next_poly();
        let pt = tf.next_point();
        let u = poly.eval(&pt)?;
        let frame = space.frame_at(&pt)?;
        let xs = frame.derivative_jets(&u)?;
        let m = frame.m;
        for i in 0..m {
            for j in 0..m {
                let value = lie_bracket_apply(space, i, j, &u, &pt)?;
                let expected = match *space {
                    Space::Heisenberg { n } => {
                        let zu = u.grad()[2 * n];
                        if j == i + n && i < n {
                            zu
                        } else if i == j + n && j < n {
                            -zu
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    }
                    Space::Grushin { n, a, c, .. } => {
                        let k = c * n as f64 * (pt[0] - a).powi(n as i32 - 1) * u.grad()[1];
                        match (i, j) {
                            (0, 1) => k,
                            (1, 0) => -k,
                            _ => C64::new(0.0, 0.0),
                        }
                    }
                };
                let scale = frame.apply(i, &xs[j].grad).norm() + frame.apply(j, &xs[i].grad).norm() + expected.norm();
                out.push(rel((value - expected).norm(), scale));
            }
        }
    }
    Ok(out)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn mag(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Identity, inverse and associativity defects of the group law on `H^n`.
pub fn group_law_deviations(n: usize, seed: u64, samples: usize) -> Result<Vec<f64>> {
    let mut tf = TestFunctions::new(seed, 2 * n + 1);
    let zero = vec![0.0; 2 * n + 1];
    let mut out = Vec::new();
    for _ in 0..samples {
        let (p, q, r) = (tf.next_point(), tf.next_point(), tf.next_point());
        let s = 1.0 + mag(&p) + mag(&q) + mag(&r);
        out.push(rel(dist(&group_multiply(n, &p, &zero)?, &p), s));
        out.push(rel(dist(&group_multiply(n, &zero, &p)?, &p), s));
        out.push(rel(mag(&group_multiply(n, &p, &group_inverse(&p))?), s * s));
        out.push(rel(mag(&group_multiply(n, &group_inverse(&p), &p)?), s * s));
        let left = group_multiply(n, &group_multiply(n, &p, &q)?, &r)?;
        let right = group_multiply(n, &p, &group_multiply(n, &q, &r)?)?;
        out.push(rel(dist(&left, &right), s * s));
    }
    Ok(out)
}

/// Horizontal divergence of `Σ f_j X_j` against the Euclidean divergence of
/// the same field written in coordinates.
pub fn divergence_deviations(n: usize, seed: u64, functions: usize) -> Result<Vec<f64>> {
    let d = 2 * n + 1;
    let mut tf = TestFunctions::new(seed, d);
    let mut out = Vec::new();
    for _ in 0..functions {
        let pt = tf.next_point();
        let vars = seed_point(&pt)?;
        let comps: Vec<CJet2> = (0..2 * n).map(|_| tf.next_poly().eval_jets(&vars)).collect();
        let horizontal: Vec<_> = comps.iter().map(|c| c.to_jet1()).collect();
        let hdiv = heisenberg_divergence(n, &horizontal, &pt)?;
        let mut fz = CJet2::constant(d, C64::new(0.0, 0.0));
        for (j, f) in comps.iter().enumerate() {
            let coef = if j < n { &vars[n + j] * -0.5 } else { &vars[j - n] * 0.5 };
            fz = &fz + &(&coef * f);
        }
        let terms: Vec<C64> = (0..2 * n).map(|k| comps[k].grad()[k]).chain([fz.grad()[d - 1]]).collect();
        let ediv: C64 = terms.iter().sum();
        out.push(rel((hdiv - ediv).norm(), terms.iter().map(|t| t.norm()).sum()));
    }
    Ok(out)
}

/// Product-rule divergence form of `Δ_p` against the reduced expansion.
pub fn divergence_form_deviations(space: &Space, p: f64, seed: u64, functions: usize) -> Result<Vec<f64>> {
    let mut tf = TestFunctions::new(seed, space.dim());
    let mut out = Vec::new();
    for _ in 0..functions {
        let poly = tf.next_poly();
        let pt = tf.next_point();
        let u = poly.eval(&pt)?;
        let red = p_laplacian_reduced(space, p, &u, &pt)?;
        let div = p_laplacian_divergence_form(space, p, &u, &pt)?;
        out.push(rel((div - red.operator_value(p)).norm(), red.operator_scale(p)));
    }
    Ok(out)
}

pub fn criterion_8() -> Result<CriterionOutcome> {
    let mut checks = Vec::new();
    for (k, space) in all_spaces().into_iter().enumerate() {
        let devs = bracket_deviations(&space, SEED + k as u64, RANDOM_FUNCTIONS)?;
        checks.push(tally(format!("{} bracket table", space_label(&space)), devs, STRUCTURE_TOL));
    }
    for n in [1, 2] {
        checks.push(tally(format!("H^{n} group law"), group_law_deviations(n, SEED, RANDOM_FUNCTIONS)?, STRUCTURE_TOL));
        checks.push(tally(
            format!("H^{n} divergence vs Euclidean"),
            divergence_deviations(n, SEED, RANDOM_FUNCTIONS)?,
            STRUCTURE_TOL,
        ));
    }
    for (k, space) in all_spaces().into_iter().enumerate() {
        let mut devs = Vec::new();
        for p in [1.5, 2.0, 3.0, 5.0] {
            devs.extend(divergence_form_deviations(&space, p, SEED + 10 + k as u64, RANDOM_FUNCTIONS)?);
        }
        checks.push(tally(format!("{} divergence vs reduced form", space_label(&space)), devs, DIVERGENCE_FORM_TOL));
    }
    Ok(CriterionOutcome::new(8, "structural invariants of the frames and operators", checks))
}

/// Every solution family instance covered by the oracle comparison.
pub fn oracle_families(space: &Space) -> Result<Vec<SolutionFamily>> {
    let (radial, core, inf) = FamilyTag::for_space(space);
    let mut out = Vec::new();
    for &p in &MODIFIED_P {
        out.push(SolutionFamily::new(radial, SpaceParams::new(*space, p, 0.0)?)?);
        for &l in &L_SWEEP {
            out.push(SolutionFamily::new(core, SpaceParams::new(*space, p, l)?)?);
        }
    }
    for &l in &L_SWEEP {
        out.push(SolutionFamily::new(inf, SpaceParams::new(*space, f64::INFINITY, l)?)?);
    }
    Ok(out)
}

pub fn criterion_9() -> Result<CriterionOutcome> {
    let mut checks = Vec::new();
    for space in all_spaces() {
        let points = default_grid(&space)?;
        let mut grad_worst: f64 = 0.0;
        let mut hess_worst: f64 = 0.0;
        let mut failing = Vec::new();
        let fams = oracle_families(&space)?;
        for fam in &fams {
            let r = ad_vs_fd_report(fam, &points)?;
            grad_worst = grad_worst.max(r.grad_max);
            hess_worst = hess_worst.max(r.hess_max);
            if !r.pass {
                failing.push(format!("{}(p={:?},L={})", r.family, r.p, r.l));
            }
        }
        checks.push(Check {
            label: format!("{} jets vs finite differences", space_label(&space)),
            pass: failing.is_empty(),
            statistic: hess_worst,
            detail: format!(
                "{} families, gradient worst {grad_worst:.3e}, Hessian worst {hess_worst:.3e}, failing [{}]",
                fams.len(),
                failing.join(", ")
            ),
        });
    }
    Ok(CriterionOutcome::new(9, "automatic differentiation against central differences", checks))
}

/// Relative standard deviation of complex ratios around their mean.
pub fn relative_spread(ratios: &[C64]) -> f64 {
    let n = ratios.len() as f64;
    let mean: C64 = ratios.iter().sum::<C64>() / n;
    let var = ratios.iter().map(|r| (r - mean).norm_sqr()).sum::<f64>() / n;
    var.sqrt() / mean.norm()
}

pub fn criterion_10() -> Result<CriterionOutcome> {
    let mut checks = Vec::new();
    for space in heisenberg_spaces() {
        let points = generate_grid(&GridSpec::new(space).with_seed(SEED).with_count(NORMVAL_POINTS))?;
        let mut spreads = Vec::new();
        for &p in NORMVAL_P.iter().filter(|&&p| !is_critical(&space, p)) {
            for &l in &L_SWEEP {
                let sp = SpaceParams::new(space, p, l)?;
                let ratios = points
                    .iter()
                    .map(|pt| {
                        let a = closed_form_audit(&sp, pt)?;
                        let f = a.form("norm_squared").expect("audit reports the norm");
                        Ok(f.ratio.map(|r| C64::new(r[0], r[1])).unwrap_or(C64::new(f64::NAN, 0.0)))
                    })
                    .collect::<Result<Vec<C64>>>()?;
                spreads.push(relative_spread(&ratios));
            }
        }
        checks.push(tally(format!("{} norm closed form", space_label(&space)), spreads, NORMVAL_RSD_TOL));
    }
    Ok(CriterionOutcome::new(10, "squared norm of the mixed vector matches its closed form up to a constant", checks))
}

pub type CriterionFn = fn() -> Result<CriterionOutcome>;

pub const CRITERIA: [CriterionFn; 10] = [
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
];

pub fn run_all() -> Result<Vec<CriterionOutcome>> {
    CRITERIA.iter().map(|f| f()).collect()
}
