//! Pointwise differential operators on jets.
//!
//! Every identity is evaluated as a sum of additive terms. The residual is
//! the sum, the condition scale `S` is the sum of the term magnitudes, and
//! the relative residual `|sum| / S` is the zero test. Identities of
//! divergence type are tested on their bracketed factor
//!
//! ```text
//! Λ = ½(p-2) Σ_j (X_j ‖ξ‖²) ξ_j + ‖ξ‖² Σ_j X_j ξ_j
//! ```
//!
//! rather than on `‖ξ‖^(p-4) Λ`. Second-order terms `X_j ξ_j` are split
//! into their `X_i X_k u` atoms when forming `S`, so identities that only
//! cancel inside the divergence (e.g. `p = 2`) still get a meaningful scale.
//!
//! Norms are Hermitian: `‖ξ‖² = Σ ξ_k conj(ξ_k)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{lie_bracket_apply, HorizontalFrame, Space, SpaceParams};
use crate::jet::{check_principal, CJet1, CJet2, C64};
use crate::solutions::{is_critical, kernel_values, FamilyTag, SolutionFamily};

const VANISHING: f64 = 1e-250;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorTag {
    /// `Δ_p u`, reduced factor.
    PLaplacian,
    /// `Δ_2 u + iL (bracket term) u`.
    Bgg,
    /// `div(‖ξ‖^(p-2) ξ)`, reduced factor.
    ModifiedPLaplacian,
    /// `Σ_j (X_j ‖ξ‖²) ξ_j`.
    ModifiedInfinity,
    /// `Σ_j (X_j ‖∇₀u‖²) X_j u`.
    InfinityLaplacian,
    /// Three-term Grushin identity with the `(1 + np)` factor.
    NeggPlusNp,
    /// Three-term Grushin identity with the `(1 - np)` factor.
    NeggMinusNp,
    /// `Δ_p f + iL [Y1, Y2] f` on `G_n`.
    NeggTruncated,
    /// `Δ_p u + iL Z u` on `H^1`.
    NeghTruncated,
}

impl OperatorTag {
    pub const ALL: [OperatorTag; 9] = [
        OperatorTag::PLaplacian,
        OperatorTag::Bgg,
        OperatorTag::ModifiedPLaplacian,
        OperatorTag::ModifiedInfinity,
        OperatorTag::InfinityLaplacian,
        OperatorTag::NeggPlusNp,
        OperatorTag::NeggMinusNp,
        OperatorTag::NeggTruncated,
        OperatorTag::NeghTruncated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorTag::PLaplacian => "p-laplacian",
            OperatorTag::Bgg => "bgg",
            OperatorTag::ModifiedPLaplacian => "modified-p-laplacian",
            OperatorTag::ModifiedInfinity => "modified-infinity",
            OperatorTag::InfinityLaplacian => "infinity-laplacian",
            OperatorTag::NeggPlusNp => "negg-plus-np",
            OperatorTag::NeggMinusNp => "negg-minus-np",
            OperatorTag::NeggTruncated => "negg-truncated",
            OperatorTag::NeghTruncated => "negh-truncated",
        }
    }
}

impl fmt::Display for OperatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        OperatorTag::ALL
            .into_iter()
            .find(|t| t.name() == s || t.name().replace('-', "_") == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown operator `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualValue {
    pub op: OperatorTag,
    pub point: Vec<f64>,
    pub residual: C64,
    pub scale: f64,
    pub relative: f64,
}

impl ResidualValue {
    fn new(op: OperatorTag, point: &[f64], residual: C64, scale: f64) -> Self {
        ResidualValue {
            op,
            point: point.to_vec(),
            residual,
            scale,
            relative: residual.norm() / scale.max(1e-300),
        }
    }
}

/// The bracketed factor of a divergence-type operator together with the
/// squared norm that multiplies it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reduced {
    pub lambda: C64,
    pub scale: f64,
    pub norm2: f64,
}

impl Reduced {
    /// `‖ξ‖^(p-4) Λ`, the operator itself.
    pub fn operator_value(&self, p: f64) -> C64 {
        self.lambda * self.norm2.powf((p - 4.0) / 2.0)
    }

    /// Scale of the operator value, consistent with [`Reduced::operator_value`].
    pub fn operator_scale(&self, p: f64) -> f64 {
        self.scale * self.norm2.powf((p - 4.0) / 2.0)
    }
}

/// `ξ` (Grushin) or `Υ` (Heisenberg) at a point, with its Hermitian norm.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizontalVectorValue {
    pub entries: Vec<C64>,
    pub norm2: f64,
}

/// Frame plus the first-order jets `X_j u`.
struct Horizontal {
    frame: HorizontalFrame,
    derivs: Vec<CJet1>,
}

impl Horizontal {
    fn new(space: &Space, u: &CJet2, point: &[f64]) -> Result<Self> {
        let frame = space.frame_at(point)?;
        let derivs = frame.derivative_jets(u)?;
        Ok(Horizontal { frame, derivs })
    }

    fn half(&self) -> usize {
        self.frame.m / 2
    }

    fn partner(&self, j: usize) -> usize {
        let h = self.half();
        if j < h {
            j + h
        } else {
            j - h
        }
    }

    /// `X_i X_j u`.
    fn second(&self, i: usize, j: usize) -> C64 {
        self.frame.apply(i, &self.derivs[j].grad)
    }

    /// `ξ_k = X_k u + iL X_{k+h} u`, `ξ_{k+h} = X_{k+h} u - iL X_k u`.
    fn mixed(&self, l: f64) -> Vec<CJet1> {
        let h = self.half();
        let il = C64::new(0.0, l);
        (0..self.frame.m)
            .map(|j| {
                let q = self.partner(j);
                let w = if j < h { il } else { -il };
                self.derivs[j].add(&self.derivs[q].scale(w))
            })
            .collect()
    }

    /// `Σ_j |X_j ξ_j|` atoms for the mixed field.
    fn divergence_atoms(&self, l: f64) -> f64 {
        (0..self.frame.m)
            .map(|j| self.second(j, j).norm() + l.abs() * self.second(j, self.partner(j)).norm())
            .sum()
    }
}

fn norm2_jet(entries: &[CJet1]) -> CJet1 {
    let mut acc = entries[0].mul(&entries[0].conj());
    for e in &entries[1..] {
        acc = acc.add(&e.mul(&e.conj()));
    }
    acc
}

fn check_norm(norm2: f64, quantity: &'static str) -> Result<()> {
    if !(norm2 >= VANISHING) {
        return Err(Error::VanishingNorm { quantity, norm2 });
    }
    Ok(())
}

fn check_finite_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("finite-p operator needs 1 < p < inf, got {p}")));
    }
    Ok(())
}

/// `Λ = ½(p-2) Σ (X_j N) e_j + N Σ X_j e_j` for entries `e`, `N = ‖e‖²`.
fn reduce(hz: &Horizontal, entries: &[CJet1], atoms: f64, p: f64, quantity: &'static str) -> Result<Reduced> {
    let n2 = norm2_jet(entries);
    let norm2 = n2.value.re;
    check_norm(norm2, quantity)?;
    let frame = &hz.frame;
    let half_pm2 = 0.5 * (p - 2.0);
    let mut t1 = C64::new(0.0, 0.0);
    let mut t1_scale = 0.0;
    let mut div = C64::new(0.0, 0.0);
    for (j, e) in entries.iter().enumerate() {
        let term = frame.apply(j, &n2.grad) * e.value;
        t1 += term;
        t1_scale += term.norm();
        div += frame.apply(j, &e.grad);
    }
    Ok(Reduced {
        lambda: t1 * half_pm2 + div * norm2,
        scale: half_pm2.abs() * t1_scale + norm2 * atoms,
        norm2,
    })
}

pub fn p_laplacian_reduced(space: &Space, p: f64, u: &CJet2, point: &[f64]) -> Result<Reduced> {
    check_finite_p(p)?;
    let hz = Horizontal::new(space, u, point)?;
    reduce(&hz, &hz.derivs, hz.divergence_atoms(0.0), p, "horizontal gradient")
}

pub fn modified_p_laplacian_reduced(space: &Space, p: f64, l: f64, u: &CJet2, point: &[f64]) -> Result<Reduced> {
    check_finite_p(p)?;
    let hz = Horizontal::new(space, u, point)?;
    reduce(&hz, &hz.mixed(l), hz.divergence_atoms(l), p, "mixed horizontal vector")
}

/// `Δ_p u = Σ_j X_j(‖∇₀u‖^(p-2) X_j u)` assembled by the product rule
/// directly, without the reduction.
pub fn p_laplacian_divergence_form(space: &Space, p: f64, u: &CJet2, point: &[f64]) -> Result<C64> {
    check_finite_p(p)?;
    let hz = Horizontal::new(space, u, point)?;
    let n2 = norm2_jet(&hz.derivs);
    check_norm(n2.value.re, "horizontal gradient")?;
    let weight = n2.powc(C64::new((p - 2.0) / 2.0, 0.0))?;
    Ok(hz
        .derivs
        .iter()
        .enumerate()
        .map(|(j, xj)| hz.frame.apply(j, &weight.mul(xj).grad))
        .sum())
}

pub fn p_laplacian(sp: &SpaceParams, u: &CJet2, point: &[f64]) -> Result<ResidualValue> {
    let r = p_laplacian_reduced(&sp.space, sp.p, u, point)?;
    Ok(ResidualValue::new(OperatorTag::PLaplacian, point, r.lambda, r.scale))
}

/// Bracket term paired with `iL`: `[Y1, Y2] u` on `G_n`,
/// `Σ_{j<n} [X_j, X_{j+n}] u` on `H^n`. Returns (value, Σ|atoms|).
fn bracket_term(space: &Space, u: &CJet2, point: &[f64], hz: &Horizontal) -> Result<(C64, f64)> {
    let pairs: Vec<(usize, usize)> = match *space {
        Space::Grushin { .. } => vec![(0, 1)],
        Space::Heisenberg { n } => (0..n).map(|j| (j, j + n)).collect(),
    };
    let mut value = C64::new(0.0, 0.0);
    let mut atoms = 0.0;
    for (i, j) in pairs {
        value += lie_bracket_apply(space, i, j, u, point)?;
        atoms += hz.second(i, j).norm() + hz.second(j, i).norm();
    }
    Ok((value, atoms))
}

pub fn bgg_operator(sp: &SpaceParams, u: &CJet2, point: &[f64]) -> Result<ResidualValue> {
    let hz = Horizontal::new(&sp.space, u, point)?;
    let m = hz.frame.m;
    let lap: C64 = (0..m).map(|j| hz.second(j, j)).sum();
    let lap_atoms: f64 = (0..m).map(|j| hz.second(j, j).norm()).sum();
    let (br, br_atoms) = bracket_term(&sp.space, u, point, &hz)?;
    Ok(ResidualValue::new(
        OperatorTag::Bgg,
        point,
        lap + C64::new(0.0, sp.l) * br,
        lap_atoms + sp.l.abs() * br_atoms,
    ))
}

pub fn build_xi_upsilon(sp: &SpaceParams, u: &CJet2, point: &[f64]) -> Result<HorizontalVectorValue> {
    let hz = Horizontal::new(&sp.space, u, point)?;
    let mixed = hz.mixed(sp.l);
    Ok(HorizontalVectorValue {
        norm2: norm2_jet(&mixed).value.re,
        entries: mixed.into_iter().map(|e| e.value).collect(),
    })
}

pub fn modified_p_laplacian(sp: &SpaceParams, u: &CJet2, point: &[f64]) -> Result<ResidualValue> {
    let r = modified_p_laplacian_reduced(&sp.space, sp.p, sp.l, u, point)?;
    Ok(ResidualValue::new(OperatorTag::ModifiedPLaplacian, point, r.lambda, r.scale))
}

fn infinity_sum(hz: &Horizontal, entries: &[CJet1], quantity: &'static str) -> Result<(C64, f64)> {
    let n2 = norm2_jet(entries);
    check_norm(n2.value.re, quantity)?;
    let mut sum = C64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (j, e) in entries.iter().enumerate() {
        let term = hz.frame.apply(j, &n2.grad) * e.value;
        sum += term;
        scale += term.norm();
    }
    Ok((sum, scale))
}

pub fn modified_infinity(sp: &SpaceParams, u: &CJet2, point: &[f64]) -> Result<ResidualValue> {
    let hz = Horizontal::new(&sp.space, u, point)?;
    let (sum, scale) = infinity_sum(&hz, &hz.mixed(sp.l), "mixed horizontal vector")?;
    Ok(ResidualValue::new(OperatorTag::ModifiedInfinity, point, sum, scale))
}

pub fn infinity_laplacian(space: &Space, u: &CJet2, point: &[f64]) -> Result<ResidualValue> {
    let hz = Horizontal::new(space, u, point)?;
    let (sum, scale) = infinity_sum(&hz, &hz.derivs, "horizontal gradient")?;
    Ok(ResidualValue::new(OperatorTag::InfinityLaplacian, point, sum, scale))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignVariant {
    /// `(1 + np)`.
    PlusNp,
    /// `(1 - np)`.
    MinusNp,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeggRecord {
    pub identity: ResidualValue,
    pub truncated: ResidualValue,
}

/// `Δ_p f + iL [Y1, Y2] f` as the full operator (prefactor included).
fn negg_truncated_parts(sp: &SpaceParams, u: &CJet2, point: &[f64]) -> Result<(Reduced, C64, f64, Horizontal)> {
    let hz = Horizontal::new(&sp.space, u, point)?;
    let r = reduce(&hz, &hz.derivs, hz.divergence_atoms(0.0), sp.p, "horizontal gradient")?;
    let (br, br_atoms) = bracket_term(&sp.space, u, point, &hz)?;
    Ok((r, br, br_atoms, hz))
}

pub fn negg_truncated(sp: &SpaceParams, point: &[f64]) -> Result<ResidualValue> {
    let fam = grushin_core(sp)?;
    let u = fam.eval(point)?;
    let (r, br, br_atoms, _) = negg_truncated_parts(sp, &u, point)?;
    let il = C64::new(0.0, sp.l);
    Ok(ResidualValue::new(
        OperatorTag::NeggTruncated,
        point,
        r.operator_value(sp.p) + il * br,
        r.operator_scale(sp.p) + sp.l.abs() * br_atoms,
    ))
}

fn grushin_core(sp: &SpaceParams) -> Result<SolutionFamily> {
    if !matches!(sp.space, Space::Grushin { .. }) {
        return Err(Error::InvalidParameter("this identity lives on a Grushin-type plane".into()));
    }
    check_finite_p(sp.p)?;
    SolutionFamily::new(FamilyTag::FPL, *sp)
}

/// The three-term identity on `f_{p,L}` divided through by `‖∇₀f‖^(p-4)`:
///
/// ```text
/// Λ₀ + iL(p-1) N [Y1,Y2] f - N · L²/(L²-1) · (-4) · (p-2)(1 ± np)/(2+n-p) · (Y2 g^α)(Y2 h^β)
/// ```
///
/// with `Λ₀` the reduced `Δ_p` factor and `N = ‖∇₀f‖²`.
pub fn negg_identity(sp: &SpaceParams, point: &[f64], variant: SignVariant) -> Result<NeggRecord> {
    let fam = grushin_core(sp)?;
    let (p, l) = (sp.p, sp.l);
    if is_critical(&sp.space, p) {
        return Err(Error::CriticalExponent { p });
    }
    if l == 0.0 || l.abs() == 1.0 {
        return Err(Error::InvalidParameter(format!("identity needs L outside {{-1, 0, 1}}, got {l}")));
    }
    let n = sp.space.n() as f64;
    let u = fam.eval(point)?;
    let (r, br, br_atoms, hz) = negg_truncated_parts(sp, &u, point)?;
    let (ga, hb) = fam.power_factors(point)?;
    let y2ga = hz.frame.apply(1, ga.grad());
    let y2hb = hz.frame.apply(1, hb.grad());
    let np = match variant {
        SignVariant::PlusNp => 1.0 + n * p,
        SignVariant::MinusNp => 1.0 - n * p,
    };
    let k = l * l / (l * l - 1.0) * -4.0 * ((p - 2.0) * np / (2.0 + n - p));
    let bracket = C64::new(0.0, l * (p - 1.0) * r.norm2) * br;
    let correction = y2ga * y2hb * (r.norm2 * k);
    let op = match variant {
        SignVariant::PlusNp => OperatorTag::NeggPlusNp,
        SignVariant::MinusNp => OperatorTag::NeggMinusNp,
    };
    let identity = ResidualValue::new(
        op,
        point,
        r.lambda + bracket - correction,
        r.scale + l.abs() * (p - 1.0) * r.norm2 * br_atoms + correction.norm(),
    );
    let truncated = ResidualValue::new(
        OperatorTag::NeggTruncated,
        point,
        r.operator_value(p) + C64::new(0.0, l) * br,
        r.operator_scale(p) + l.abs() * br_atoms,
    );
    Ok(NeggRecord { identity, truncated })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeghRecord {
    /// `Δ_p u + iL Z u` with the prefactor included.
    pub computed: ResidualValue,
    /// The closed form displayed as the value of `Δ_p u + iL Z u`.
    pub displayed_rhs: C64,
    /// Reduced factor `Λ₀` of `Δ_p u`, by jets.
    pub reduced: C64,
    /// The closed form displayed for `Λ₀`.
    pub displayed_reduced: C64,
}

fn heisenberg_one_core(sp: &SpaceParams) -> Result<SolutionFamily> {
    if sp.space != (Space::Heisenberg { n: 1 }) {
        return Err(Error::InvalidParameter("this computation lives on H^1".into()));
    }
    check_finite_p(sp.p)?;
    SolutionFamily::new(FamilyTag::UPL, *sp)
}

fn cpow(z: C64, s: f64) -> Result<C64> {
    check_principal(z)?;
    Ok((z.ln() * s).exp())
}

pub fn negh_truncated(sp: &SpaceParams, point: &[f64]) -> Result<ResidualValue> {
    let fam = heisenberg_one_core(sp)?;
    let u = fam.eval(point)?;
    let r = p_laplacian_reduced(&sp.space, sp.p, &u, point)?;
    let izu = C64::new(0.0, sp.l) * u.grad()[2];
    Ok(ResidualValue::new(
        OperatorTag::NeghTruncated,
        point,
        r.operator_value(sp.p) + izu,
        r.operator_scale(sp.p) + izu.norm(),
    ))
}

/// Computes `Δ_p u + iL Z u` on `u_{p,L}` over `H^1` and the displayed closed
/// forms next to it. Nothing here asserts agreement.
pub fn negh_residual(sp: &SpaceParams, point: &[f64]) -> Result<NeghRecord> {
    let (p, l) = (sp.p, sp.l);
    if p == 4.0 {
        return Err(Error::CriticalExponent { p });
    }
    let fam = heisenberg_one_core(sp)?;
    let u = fam.eval(point)?;
    let red = p_laplacian_reduced(&sp.space, p, &u, point)?;
    let computed = negh_truncated(sp, point)?;

    let (v, w) = kernel_values(&sp.space, point)?;
    let s = point[0] * point[0] + point[1] * point[1];
    let z = point[2];
    let displayed_rhs = cpow(v, (l - 3.0) / 2.0)? * cpow(w, (-3.0 - l) / 2.0)? * C64::new(l * s, -4.0 * z) * (-8.0 * l);
    let ev = (4.0 + l * (p - 4.0) + 5.0 * p) / (4.0 - 4.0 * p);
    let ew = (4.0 + 4.0 * l + 5.0 * p - l * p) / (4.0 - 4.0 * p);
    let displayed_reduced = cpow(v, ev)?
        * cpow(w, ew)?
        * C64::new(l * (p - 4.0) * s, 4.0 * (p - 1.0) * p * z)
        * (-l * (1.0 + l * l) * (p - 4.0).powi(3) * s / (p - 1.0).powi(4));
    Ok(NeghRecord {
        computed,
        displayed_rhs,
        reduced: red.lambda,
        displayed_reduced,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormComparison {
    pub name: String,
    pub jet: [f64; 2],
    pub closed: [f64; 2],
    /// `jet / closed`; absent when the closed form is exactly zero.
    pub ratio: Option<[f64; 2]>,
    pub deviation: f64,
}

impl FormComparison {
    /// `jet_scale` is the sum of term magnitudes behind `jet`; it keeps the
    /// deviation meaningful when the closed form is exactly zero.
    fn new(name: &str, jet: C64, jet_scale: f64, closed: C64) -> Self {
        let ratio = (closed.norm() > 0.0).then(|| {
            let r = jet / closed;
            [r.re, r.im]
        });
        FormComparison {
            name: name.to_string(),
            jet: [jet.re, jet.im],
            closed: [closed.re, closed.im],
            ratio,
            deviation: (jet - closed).norm() / closed.norm().max(jet_scale).max(1e-300),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub point: Vec<f64>,
    pub p: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub forms: Vec<FormComparison>,
}

impl AuditRecord {
    pub fn form(&self, name: &str) -> Option<&FormComparison> {
        self.forms.iter().find(|f| f.name == name)
    }
}

/// Compares the jet values of `‖Υ‖²`, `Σ X_j(‖Υ‖²) Υ_j` and `Σ X_j Υ_j` on
/// `u_{p,L}` with their displayed closed forms, and checks the displayed
/// product formula against the product of the two closed forms.
pub fn closed_form_audit(sp: &SpaceParams, point: &[f64]) -> Result<AuditRecord> {
    let n = match sp.space {
        Space::Heisenberg { n } => n,
        Space::Grushin { .. } => {
            return Err(Error::InvalidParameter("closed-form audit is defined on H^n".into()));
        }
    };
    let (p, l) = (sp.p, sp.l);
    check_finite_p(p)?;
    if is_critical(&sp.space, p) {
        return Err(Error::CriticalExponent { p });
    }
    let fam = SolutionFamily::new(FamilyTag::UPL, *sp)?;
    let u = fam.eval(point)?;
    let hz = Horizontal::new(&sp.space, &u, point)?;
    let ups = hz.mixed(l);
    let n2 = norm2_jet(&ups);
    let pairing_terms: Vec<C64> = ups.iter().enumerate().map(|(j, e)| hz.frame.apply(j, &n2.grad) * e.value).collect();
    let pairing: C64 = pairing_terms.iter().sum();
    let pairing_scale: f64 = pairing_terms.iter().map(|t| t.norm()).sum();
    let divergence: C64 = ups.iter().enumerate().map(|(j, e)| hz.frame.apply(j, &e.grad)).sum();
    let divergence_scale = hz.divergence_atoms(l);

    let nf = n as f64;
    let q = 2.0 * nf + 2.0;
    let s: f64 = point[..2 * n].iter().map(|x| x * x).sum();
    let (v, w) = kernel_values(&sp.space, point)?;
    let l2m1 = l * l - 1.0;
    let e_norm = (2.0 * nf + p) / (2.0 - 2.0 * p);
    let m_v = (l * (p - q) + (6.0 * nf - 2.0) + 5.0 * p) / (4.0 * (1.0 - p));
    let m_w = (-l * (p - q) + 5.0 * p + (6.0 * nf - 2.0)) / (4.0 * (1.0 - p));
    let c_v = (l * (p - q) + (2.0 * nf - 2.0) + 3.0 * p) / (4.0 * (1.0 - p));
    let c_w = (-l * (p - q) + 3.0 * p + (2.0 * nf - 2.0)) / (4.0 * (1.0 - p));

    let closed_norm = cpow(v, e_norm)? * cpow(w, e_norm)? * ((p - q).powi(2) / (p - 1.0).powi(2) * l2m1.powi(2) * s);
    let vw_m = cpow(v, m_v)? * cpow(w, m_w)?;
    let closed_pairing = vw_m * ((4.0 * nf + 2.0) * (p - q).powi(3) / (p - 1.0).powi(4) * l2m1.powi(3) * s * s);
    let closed_divergence = cpow(v, c_v)?
        * cpow(w, c_w)?
        * (-(2.0 * nf + 1.0) * (p - 2.0) * (p - q) / (p - 1.0).powi(2) * l2m1 * s);
    let displayed_combined =
        vw_m * (-(2.0 * nf + 1.0) * (p - 2.0) * (p - q).powi(3) / (p - 1.0).powi(4) * l2m1.powi(3) * s * s);

    Ok(AuditRecord {
        point: point.to_vec(),
        p,
        l,
        forms: vec![
            FormComparison::new("norm_squared", n2.value, n2.value.norm(), closed_norm),
            FormComparison::new("gradient_pairing", pairing, pairing_scale, closed_pairing),
            FormComparison::new("divergence", divergence, divergence_scale, closed_divergence),
            FormComparison::new("combined", closed_norm * closed_divergence, 0.0, displayed_combined),
        ],
    })
}

/// Evaluates `op` on `fam` at `point`.
pub fn apply_operator(op: OperatorTag, fam: &SolutionFamily, point: &[f64]) -> Result<ResidualValue> {
    let sp = &fam.params;
    match op {
        OperatorTag::PLaplacian => p_laplacian(sp, &fam.eval(point)?, point),
        OperatorTag::Bgg => bgg_operator(sp, &fam.eval(point)?, point),
        OperatorTag::ModifiedPLaplacian => modified_p_laplacian(sp, &fam.eval(point)?, point),
        OperatorTag::ModifiedInfinity => modified_infinity(sp, &fam.eval(point)?, point),
        OperatorTag::InfinityLaplacian => infinity_laplacian(&sp.space, &fam.eval(point)?, point),
        OperatorTag::NeggPlusNp | OperatorTag::NeggMinusNp => {
            if fam.tag != FamilyTag::FPL {
                return Err(Error::InvalidParameter(format!("{op} applies to f_pL only")));
            }
            let variant = if op == OperatorTag::NeggPlusNp {
                SignVariant::PlusNp
            } else {
                SignVariant::MinusNp
            };
            Ok(negg_identity(sp, point, variant)?.identity)
        }
        OperatorTag::NeggTruncated => {
            if fam.tag != FamilyTag::FPL {
                return Err(Error::InvalidParameter(format!("{op} applies to f_pL only")));
            }
            negg_truncated(sp, point)
        }
        OperatorTag::NeghTruncated => {
            if fam.tag != FamilyTag::UPL {
                return Err(Error::InvalidParameter(format!("{op} applies to u_pL only")));
            }
            negh_truncated(sp, point)
        }
    }
}
