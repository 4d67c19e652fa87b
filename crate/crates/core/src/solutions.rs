//! Closed-form solution families and their exponent constants.
//!
//! Grushin families are built from the conjugate kernels
//! `g = c(y1-a)^(n+1) + i(n+1)(y2-b)` and `h = conj(g)`; Heisenberg families
//! from `v = |x|^2 - 4iz` and `w = conj(v)`. Every family is evaluated from
//! the real coordinates, never by holomorphic substitution.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Space, SpaceParams};
use crate::jet::{check_principal, seed_point, CJet2, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyTag {
    /// `(c^2(y1-a)^(2n+2) + (n+1)^2(y2-b)^2)^tau_p`, or its log at `p = n+2`.
    #[serde(rename = "psi_p")]
    PsiP,
    /// `((|x|^2)^2 + 16z^2)^eta_p`, or its log at `p = 2n+2`.
    #[serde(rename = "zeta_p")]
    ZetaP,
    /// `g^alpha h^beta`, or `(1+L) log g + (1-L) log h` at `p = n+2`.
    #[serde(rename = "f_pL")]
    FPL,
    /// `v^eta w^tau`, or `(1-L) log v + (1+L) log w` at `p = 2n+2`.
    #[serde(rename = "u_pL")]
    UPL,
    /// `g^A h^B`.
    #[serde(rename = "f_infL")]
    FInfL,
    /// `v^B w^A`.
    #[serde(rename = "u_infL")]
    UInfL,
}

impl FamilyTag {
    pub const ALL: [FamilyTag; 6] = [
        FamilyTag::PsiP,
        FamilyTag::ZetaP,
        FamilyTag::FPL,
        FamilyTag::UPL,
        FamilyTag::FInfL,
        FamilyTag::UInfL,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::PsiP => "psi_p",
            FamilyTag::ZetaP => "zeta_p",
            FamilyTag::FPL => "f_pL",
            FamilyTag::UPL => "u_pL",
            FamilyTag::FInfL => "f_infL",
            FamilyTag::UInfL => "u_infL",
        }
    }

    pub fn is_grushin(self) -> bool {
        matches!(self, FamilyTag::PsiP | FamilyTag::FPL | FamilyTag::FInfL)
    }

    pub fn is_infinity(self) -> bool {
        matches!(self, FamilyTag::FInfL | FamilyTag::UInfL)
    }

    /// Families whose formula does not involve `L`.
    pub fn ignores_l(self) -> bool {
        matches!(self, FamilyTag::PsiP | FamilyTag::ZetaP)
    }

    /// The standard families for a space: (radial, core, infinity).
    pub fn for_space(space: &Space) -> (FamilyTag, FamilyTag, FamilyTag) {
        match space {
            Space::Grushin { .. } => (FamilyTag::PsiP, FamilyTag::FPL, FamilyTag::FInfL),
            Space::Heisenberg { .. } => (FamilyTag::ZetaP, FamilyTag::UPL, FamilyTag::UInfL),
        }
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FamilyTag::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s) || t.name().replace('_', "-").eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown family `{s}`")))
    }
}

/// Exponent constants for a space and `(p, L)`.
///
/// `first` and `second` are the power-family exponents on the first and
/// second kernel: `(alpha, beta)` on `(g, h)` for Grushin, `(eta, tau)` on
/// `(v, w)` for Heisenberg. `radial` is `tau_p` / `eta_p`, the exponent of
/// the real base `gh` / `vw` at `L = 0`. `infinity_a`, `infinity_b` are the
/// limits `A`, `B`; note `A` sits on `g` but on `w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub first: f64,
    pub second: f64,
    pub radial: f64,
    pub infinity_a: f64,
    pub infinity_b: f64,
}

/// `n + 2` on `G_n`, `2n + 2` on `H^n`: where the power family turns
/// logarithmic.
pub fn critical_exponent(space: &Space) -> f64 {
    match *space {
        Space::Grushin { n, .. } => (n + 2) as f64,
        Space::Heisenberg { n } => (2 * n + 2) as f64,
    }
}

pub fn is_critical(space: &Space, p: f64) -> bool {
    p == critical_exponent(space)
}

/// `(A, B)` as `(exponent on first kernel, exponent on second kernel)`.
pub fn infinity_kernel_exponents(space: &Space, l: f64) -> (f64, f64) {
    match *space {
        Space::Grushin { n, .. } => {
            let q = (2 * n + 2) as f64;
            ((1.0 + l) / q, (1.0 - l) / q)
        }
        Space::Heisenberg { .. } => ((1.0 - l) / 4.0, (1.0 + l) / 4.0),
    }
}

fn radial_exponent(space: &Space, p: f64) -> f64 {
    match *space {
        Space::Grushin { n, .. } => {
            let n = n as f64;
            (n + 2.0 - p) / ((2.0 * n + 2.0) * (1.0 - p))
        }
        Space::Heisenberg { n } => {
            let n = n as f64;
            (2.0 * n + 2.0 - p) / (4.0 * (1.0 - p))
        }
    }
}

pub fn exponent_set(sp: &SpaceParams) -> Result<ExponentSet> {
    let (space, p, l) = (sp.space, sp.p, sp.l);
    if is_critical(&space, p) {
        return Err(Error::CriticalExponent { p });
    }
    let radial = radial_exponent(&space, p);
    let (first, second, infinity_a, infinity_b) = match space {
        Space::Grushin { n, .. } => {
            let q = (2 * n + 2) as f64;
            (radial * (1.0 + l), radial * (1.0 - l), (1.0 + l) / q, (1.0 - l) / q)
        }
        Space::Heisenberg { .. } => (radial * (1.0 - l), radial * (1.0 + l), (1.0 + l) / 4.0, (1.0 - l) / 4.0),
    };
    Ok(ExponentSet {
        first,
        second,
        radial,
        infinity_a,
        infinity_b,
    })
}

/// The kernel pair `(g, h)` or `(v, w)` as jets.
pub fn eval_kernels(space: &Space, point: &[f64]) -> Result<(CJet2, CJet2)> {
    space.check_point(point)?;
    let v = seed_point(point)?;
    let i = C64::i();
    Ok(match *space {
        Space::Grushin { n, a, b, c } => {
            let re = (&v[0] - a).powi(n as u32 + 1) * c;
            let im = (&v[1] - b) * ((n + 1) as f64);
            (&re + &(&im * i), &re - &(&im * i))
        }
        Space::Heisenberg { n } => {
            let r2 = sum_squares(&v[..2 * n]);
            let z4 = &v[2 * n] * 4.0;
            (&r2 - &(&z4 * i), &r2 + &(&z4 * i))
        }
    })
}

/// Kernel values without derivatives.
pub fn kernel_values(space: &Space, point: &[f64]) -> Result<(C64, C64)> {
    space.check_point(point)?;
    Ok(match *space {
        Space::Grushin { n, a, b, c } => {
            let re = c * (point[0] - a).powi(n as i32 + 1);
            let im = (n + 1) as f64 * (point[1] - b);
            (C64::new(re, im), C64::new(re, -im))
        }
        Space::Heisenberg { n } => {
            let r2: f64 = point[..2 * n].iter().map(|x| x * x).sum();
            let z4 = 4.0 * point[2 * n];
            (C64::new(r2, -z4), C64::new(r2, z4))
        }
    })
}

fn sum_squares(v: &[CJet2]) -> CJet2 {
    let mut acc = &v[0] * &v[0];
    for x in &v[1..] {
        acc = &acc + &(x * x);
    }
    acc
}

/// The real base `gh = c^2(y1-a)^(2n+2) + (n+1)^2(y2-b)^2` or
/// `vw = (|x|^2)^2 + 16z^2`, built directly from the coordinates.
fn radial_base(space: &Space, v: &[CJet2]) -> CJet2 {
    match *space {
        Space::Grushin { n, a, b, c } => {
            let s = (&v[0] - a).powi(2 * n as u32 + 2) * (c * c);
            let t = (&v[1] - b).powi(2) * (((n + 1) * (n + 1)) as f64);
            &s + &t
        }
        Space::Heisenberg { n } => {
            let r2 = sum_squares(&v[..2 * n]);
            &r2.powi(2) + &(v[2 * n].powi(2) * 16.0)
        }
    }
}

fn radial_base_value(space: &Space, point: &[f64]) -> f64 {
    match *space {
        Space::Grushin { n, a, b, c } => {
            c * c * (point[0] - a).powi(2 * n as i32 + 2) + ((n + 1) * (n + 1)) as f64 * (point[1] - b).powi(2)
        }
        Space::Heisenberg { n } => {
            let r2: f64 = point[..2 * n].iter().map(|x| x * x).sum();
            r2 * r2 + 16.0 * point[2 * n] * point[2 * n]
        }
    }
}

fn cpow(z: C64, s: f64) -> Result<C64> {
    check_principal(z)?;
    Ok((z.ln() * s).exp())
}

fn cln(z: C64) -> Result<C64> {
    check_principal(z)?;
    Ok(z.ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFamily {
    pub tag: FamilyTag,
    pub params: SpaceParams,
}

impl SolutionFamily {
    pub fn new(tag: FamilyTag, params: SpaceParams) -> Result<Self> {
        let grushin = matches!(params.space, Space::Grushin { .. });
        if tag.is_grushin() != grushin {
            return Err(Error::InvalidParameter(format!(
                "family {tag} is not defined on this space"
            )));
        }
        if !tag.is_infinity() && !params.p.is_finite() {
            return Err(Error::InvalidParameter(format!("family {tag} needs a finite p")));
        }
        Ok(SolutionFamily { tag, params })
    }

    pub fn space(&self) -> &Space {
        &self.params.space
    }

    /// Whether this evaluation takes the logarithmic branch.
    pub fn is_logarithmic(&self) -> bool {
        !self.tag.is_infinity() && is_critical(self.space(), self.params.p)
    }

    fn check(&self, point: &[f64]) -> Result<()> {
        self.space().check_point(point)?;
        if point == self.space().singular_point().as_slice() {
            return Err(Error::SingularPoint { point: point.to_vec() });
        }
        Ok(())
    }

    fn kernel_exponents(&self) -> Result<(f64, f64)> {
        if self.tag.is_infinity() {
            Ok(infinity_kernel_exponents(self.space(), self.params.l))
        } else {
            let e = exponent_set(&self.params)?;
            Ok((e.first, e.second))
        }
    }

    /// Log weights on the two kernels at the critical exponent.
    fn log_weights(&self) -> (f64, f64) {
        let l = self.params.l;
        match self.space() {
            Space::Grushin { .. } => (1.0 + l, 1.0 - l),
            Space::Heisenberg { .. } => (1.0 - l, 1.0 + l),
        }
    }

    /// The jet of the family at `point`.
    pub fn eval(&self, point: &[f64]) -> Result<CJet2> {
        self.check(point)?;
        match self.tag {
            FamilyTag::PsiP | FamilyTag::ZetaP => {
                let v = seed_point(point)?;
                let base = radial_base(self.space(), &v);
                if self.is_logarithmic() {
                    base.ln()
                } else {
                    base.powf(radial_exponent(self.space(), self.params.p))
                }
            }
            _ if self.is_logarithmic() => {
                let (k1, k2) = eval_kernels(self.space(), point)?;
                let (w1, w2) = self.log_weights();
                Ok(&(k1.ln()? * w1) + &(k2.ln()? * w2))
            }
            _ => {
                let (a, b) = self.power_factors(point)?;
                Ok(&a * &b)
            }
        }
    }

    /// The two factors `k1^e1`, `k2^e2` of a power family, as jets.
    pub fn power_factors(&self, point: &[f64]) -> Result<(CJet2, CJet2)> {
        self.check(point)?;
        if self.tag.ignores_l() {
            return Err(Error::InvalidParameter(format!("{} is not a kernel product", self.tag)));
        }
        let (e1, e2) = self.kernel_exponents()?;
        let (k1, k2) = eval_kernels(self.space(), point)?;
        Ok((k1.powf(e1)?, k2.powf(e2)?))
    }

    /// Plain complex value, computed without jets.
    pub fn value_at(&self, point: &[f64]) -> Result<C64> {
        self.check(point)?;
        match self.tag {
            FamilyTag::PsiP | FamilyTag::ZetaP => {
                let base = C64::new(radial_base_value(self.space(), point), 0.0);
                if self.is_logarithmic() {
                    cln(base)
                } else {
                    cpow(base, radial_exponent(self.space(), self.params.p))
                }
            }
            _ => {
                let (k1, k2) = kernel_values(self.space(), point)?;
                if self.is_logarithmic() {
                    let (w1, w2) = self.log_weights();
                    Ok(cln(k1)? * w1 + cln(k2)? * w2)
                } else {
                    let (e1, e2) = self.kernel_exponents()?;
                    Ok(cpow(k1, e1)? * cpow(k2, e2)?)
                }
            }
        }
    }
}

pub fn eval_solution(fam: &SolutionFamily, point: &[f64]) -> Result<CJet2> {
    fam.eval(point)
}

#[cfg(test)]
mod tests {
    use super::*;

    const G1: Space = Space::Grushin {
        n: 1,
        a: 0.0,
        b: 0.0,
        c: 1.0,
    };
    const H1: Space = Space::Heisenberg { n: 1 };

    fn fam(tag: FamilyTag, space: Space, p: f64, l: f64) -> SolutionFamily {
        SolutionFamily::new(tag, SpaceParams::new(space, p, l).unwrap()).unwrap()
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    #[test]
    fn kernels() {
        let (g, h) = eval_kernels(&G1, &[1.0, 0.0]).unwrap();
        assert_eq!((g.value(), h.value()), (C64::new(1.0, 0.0), C64::new(1.0, 0.0)));
        let (g, h) = eval_kernels(&G1, &[0.0, 1.0]).unwrap();
        assert_eq!((g.value(), h.value()), (C64::new(0.0, 2.0), C64::new(0.0, -2.0)));
        let (v, w) = eval_kernels(&H1, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!((v.value(), w.value()), (C64::new(1.0, 0.0), C64::new(1.0, 0.0)));
    }

    #[test]
    fn exponents() {
        let e = exponent_set(&SpaceParams::new(G1, 2.0, 0.0).unwrap()).unwrap();
        assert_eq!((e.first, e.second, e.radial), (-0.25, -0.25, -0.25));

        let e = exponent_set(&SpaceParams::new(H1, 2.0, 0.0).unwrap()).unwrap();
        assert_eq!((e.first, e.second), (-0.5, -0.5));

        for l in [-1.3, 0.0, 0.4, 2.0] {
            let e = exponent_set(&SpaceParams::new(H1, 2.0, l).unwrap()).unwrap();
            assert!((e.first - (l - 1.0) / 2.0).abs() < 1e-15);
            assert!((e.second + (l + 1.0) / 2.0).abs() < 1e-15);
        }

        let e = exponent_set(&SpaceParams::new(G1, 5.0, 0.5).unwrap()).unwrap();
        assert_eq!((e.infinity_a, e.infinity_b), (0.375, 0.125));
        let e = exponent_set(&SpaceParams::new(H1, 5.0, 0.5).unwrap()).unwrap();
        assert_eq!((e.infinity_a, e.infinity_b), (0.375, 0.125));

        assert_eq!(
            exponent_set(&SpaceParams::new(G1, 3.0, 0.5).unwrap()),
            Err(Error::CriticalExponent { p: 3.0 })
        );
        assert_eq!(
            exponent_set(&SpaceParams::new(H1, 4.0, 0.0).unwrap()),
            Err(Error::CriticalExponent { p: 4.0 })
        );
    }

    #[test]
    fn values() {
        for p in [1.5, 2.0, 4.0, 10.0] {
            for l in [-2.0, 0.0, 0.7] {
                let f = fam(FamilyTag::FPL, G1, p, l).eval(&[1.0, 0.0]).unwrap();
                assert!(close(f.value(), C64::new(1.0, 0.0), 1e-15));
            }
        }
        let f = fam(FamilyTag::FPL, G1, 2.0, 0.0).eval(&[0.0, 1.0]).unwrap();
        assert!(close(f.value(), C64::new(0.7071067812, 0.0), 1e-10));

        let u = fam(FamilyTag::UPL, H1, 2.0, 0.0).eval(&[1.0, 0.0, 0.0]).unwrap();
        let z = fam(FamilyTag::ZetaP, H1, 2.0, 0.0).eval(&[1.0, 0.0, 0.0]).unwrap();
        assert!(close(u.value(), C64::new(1.0, 0.0), 1e-15));
        assert!(close(z.value(), C64::new(1.0, 0.0), 1e-15));
    }

    #[test]
    fn critical_families_are_logarithmic() {
        let f = fam(FamilyTag::FPL, G1, 3.0, 2.0);
        assert!(f.is_logarithmic());
        let pt = [1.2, -0.4];
        let (g, h) = kernel_values(&G1, &pt).unwrap();
        let expect = g.ln() * 3.0 + h.ln() * -1.0;
        assert!(close(f.eval(&pt).unwrap().value(), expect, 1e-14));
        assert!(close(f.value_at(&pt).unwrap(), expect, 1e-14));

        let u = fam(FamilyTag::UPL, H1, 4.0, -0.5);
        let pt = [0.3, 0.9, -0.2];
        let (v, w) = kernel_values(&H1, &pt).unwrap();
        assert!(close(u.eval(&pt).unwrap().value(), v.ln() * 1.5 + w.ln() * 0.5, 1e-14));
    }

    #[test]
    fn singular_point_and_branch_cut() {
        let f = fam(FamilyTag::FPL, G1, 2.5, 0.3);
        assert!(matches!(f.eval(&[0.0, 0.0]), Err(Error::SingularPoint { .. })));
        // c < 0 with n odd puts g on the negative real axis when y2 = b.
        let g = Space::grushin(1, 0.0, 0.0, -1.0).unwrap();
        let f = fam(FamilyTag::FPL, g, 2.5, 0.3);
        assert!(matches!(f.eval(&[1.0, 0.0]), Err(Error::BranchCut { .. })));
        assert!(matches!(f.value_at(&[1.0, 0.0]), Err(Error::BranchCut { .. })));
    }

    #[test]
    fn space_compatibility() {
        let sp = SpaceParams::new(H1, 2.0, 0.0).unwrap();
        assert!(SolutionFamily::new(FamilyTag::FPL, sp).is_err());
        assert!(SolutionFamily::new(FamilyTag::UPL, sp).is_ok());
        let sp = SpaceParams::new(G1, f64::INFINITY, 0.0).unwrap();
        assert!(SolutionFamily::new(FamilyTag::PsiP, sp).is_err());
        assert!(SolutionFamily::new(FamilyTag::FInfL, sp).is_ok());
    }

    #[test]
    fn coincidence_at_zero_l() {
        let pt = [0.8, -1.1];
        for p in [1.5, 2.0, 2.5, 3.0, 4.0, 10.0] {
            let a = fam(FamilyTag::FPL, G1, p, 0.0).eval(&pt).unwrap();
            let b = fam(FamilyTag::PsiP, G1, p, 0.0).eval(&pt).unwrap();
            assert!(close(a.value(), b.value(), 1e-13), "p = {p}");
        }
    }

    #[test]
    fn tag_parsing() {
        assert_eq!("f_pL".parse::<FamilyTag>().unwrap(), FamilyTag::FPL);
        assert_eq!("u-infl".parse::<FamilyTag>().unwrap(), FamilyTag::UInfL);
        assert!("nope".parse::<FamilyTag>().is_err());
    }
}
