//! Second-order forward-mode differentiation of complex-valued functions of
//! `d` real variables.
//!
//! A [`CJet2`] carries the value, Euclidean gradient and Hessian of a function
//! at a fixed point. Because the variables are real, conjugation acts
//! entrywise and no holomorphic (Wirtinger) calculus is involved anywhere.
//!
//! The Hessian is stored densely but only ever written through
//! [`CJet2::from_lower`], which computes the lower triangle and mirrors it, so
//! `hess(i, j)` and `hess(j, i)` are the same bits after every operation.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct CJet2 {
    value: C64,
    grad: Vec<C64>,
    hess: Vec<C64>,
}

impl CJet2 {
    /// Builds a jet from a value, a gradient and a generator for the lower
    /// triangle (`j <= i`) of the Hessian. The upper triangle is mirrored.
    pub fn from_lower(value: C64, grad: Vec<C64>, mut entry: impl FnMut(usize, usize) -> C64) -> Self {
        let d = grad.len();
        let mut hess = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..=i {
                let h = entry(i, j);
                hess[i * d + j] = h;
                hess[j * d + i] = h;
            }
        }
        CJet2 { value, grad, hess }
    }

    pub fn constant(dim: usize, value: C64) -> Self {
        CJet2 {
            value,
            grad: vec![ZERO; dim],
            hess: vec![ZERO; dim * dim],
        }
    }

    /// The coordinate function `x_k`, evaluated at `x`.
    pub fn variable(dim: usize, k: usize, x: f64) -> Self {
        let mut grad = vec![ZERO; dim];
        grad[k] = ONE;
        CJet2 {
            value: C64::new(x, 0.0),
            grad,
            hess: vec![ZERO; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn value(&self) -> C64 {
        self.value
    }

    pub fn grad(&self) -> &[C64] {
        &self.grad
    }

    pub fn hess(&self, i: usize, j: usize) -> C64 {
        self.hess[i * self.dim() + j]
    }

    pub fn hessian_rows(&self) -> Vec<Vec<C64>> {
        self.hess.chunks(self.dim().max(1)).map(<[C64]>::to_vec).collect()
    }

    /// Drops the Hessian, keeping value and gradient.
    pub fn to_jet1(&self) -> CJet1 {
        CJet1 {
            value: self.value,
            grad: self.grad.clone(),
        }
    }

    pub fn conj(&self) -> Self {
        CJet2 {
            value: self.value.conj(),
            grad: self.grad.iter().map(C64::conj).collect(),
            hess: self.hess.iter().map(C64::conj).collect(),
        }
    }

    pub fn scale(&self, k: C64) -> Self {
        CJet2 {
            value: self.value * k,
            grad: self.grad.iter().map(|g| g * k).collect(),
            hess: self.hess.iter().map(|h| h * k).collect(),
        }
    }

    /// Composes with a scalar function given its value and first two
    /// derivatives at `self.value`.
    fn chain(&self, f0: C64, f1: C64, f2: C64) -> Self {
        let g = &self.grad;
        CJet2::from_lower(f0, g.iter().map(|gi| f1 * gi).collect(), |i, j| {
            f1 * self.hess(i, j) + f2 * g[i] * g[j]
        })
    }

    fn check_dim(&self, other: &CJet2) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    fn mul_unchecked(&self, other: &CJet2) -> Self {
        let (a, b) = (self, other);
        CJet2::from_lower(
            a.value * b.value,
            a.grad
                .iter()
                .zip(&b.grad)
                .map(|(ai, bi)| ai * b.value + a.value * bi)
                .collect(),
            |i, j| {
                a.hess(i, j) * b.value + a.grad[i] * b.grad[j] + a.grad[j] * b.grad[i] + a.value * b.hess(i, j)
            },
        )
    }

    fn zip_with(&self, other: &CJet2, f: impl Fn(C64, C64) -> C64) -> Self {
        CJet2 {
            value: f(self.value, other.value),
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| f(*a, *b)).collect(),
            hess: self.hess.iter().zip(&other.hess).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn try_mul(&self, other: &CJet2) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub fn recip(&self) -> Result<Self> {
        let u = self.value;
        if u == ZERO {
            return Err(Error::SingularDivision);
        }
        let r = u.inv();
        Ok(self.chain(r, -r * r, 2.0 * r * r * r))
    }

    pub fn try_div(&self, other: &CJet2) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.mul_unchecked(&other.recip()?))
    }

    /// Integer power; total, so no branch checks.
    pub fn powi(&self, k: u32) -> Self {
        let u = self.value;
        let kf = f64::from(k);
        let f0 = u.powu(k);
        let f1 = if k == 0 { ZERO } else { kf * u.powu(k - 1) };
        let f2 = if k < 2 { ZERO } else { kf * (kf - 1.0) * u.powu(k - 2) };
        self.chain(f0, f1, f2)
    }

    /// Principal power `exp(s Log u)`.
    pub fn powc(&self, s: C64) -> Result<Self> {
        let u = self.value;
        check_principal(u)?;
        let v = (s * u.ln()).exp();
        let r = u.inv();
        let f1 = s * v * r;
        let f2 = s * (s - 1.0) * v * r * r;
        Ok(self.chain(v, f1, f2))
    }

    pub fn powf(&self, s: f64) -> Result<Self> {
        self.powc(C64::new(s, 0.0))
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Result<Self> {
        let u = self.value;
        check_principal(u)?;
        let r = u.inv();
        Ok(self.chain(u.ln(), r, -r * r))
    }
}

/// Rejects zero and the closed negative real axis.
pub fn check_principal(u: C64) -> Result<()> {
    if u.im == 0.0 && u.re <= 0.0 {
        return Err(Error::BranchCut { value: u });
    }
    Ok(())
}

/// Jets for the coordinate functions at `coords`.
pub fn seed_point(coords: &[f64]) -> Result<Vec<CJet2>> {
    if coords.is_empty() {
        return Err(Error::EmptyPoint);
    }
    let d = coords.len();
    Ok(coords
        .iter()
        .enumerate()
        .map(|(k, &x)| CJet2::variable(d, k, x))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithKind {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Conj,
}

#[derive(Clone, Copy, Debug)]
pub enum Operand<'a> {
    Jet(&'a CJet2),
    Const(C64),
}

/// Checked dispatch over the arithmetic operations. `Neg` and `Conj` ignore
/// `rhs`.
pub fn jet_arith(lhs: &CJet2, rhs: Operand<'_>, kind: ArithKind) -> Result<CJet2> {
    let rhs_jet = match rhs {
        Operand::Jet(j) => {
            lhs.check_dim(j)?;
            j.clone()
        }
        Operand::Const(c) => CJet2::constant(lhs.dim(), c),
    };
    Ok(match kind {
        ArithKind::Add => lhs.zip_with(&rhs_jet, |a, b| a + b),
        ArithKind::Sub => lhs.zip_with(&rhs_jet, |a, b| a - b),
        ArithKind::Mul => lhs.mul_unchecked(&rhs_jet),
        ArithKind::Div => lhs.mul_unchecked(&rhs_jet.recip()?),
        ArithKind::Neg => lhs.scale(-ONE),
        ArithKind::Conj => lhs.conj(),
    })
}

#[derive(Clone, Copy, Debug)]
pub enum PowLog {
    Pow(C64),
    Log,
}

pub fn jet_pow_log(arg: &CJet2, kind: PowLog) -> Result<CJet2> {
    match kind {
        PowLog::Pow(s) => arg.powc(s),
        PowLog::Log => arg.ln(),
    }
}

// Operator impls panic on dimension mismatch; `jet_arith` is the checked path.

impl Add for &CJet2 {
    type Output = CJet2;
    fn add(self, rhs: &CJet2) -> CJet2 {
        assert_eq!(self.dim(), rhs.dim(), "jet dimension mismatch");
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &CJet2 {
    type Output = CJet2;
    fn sub(self, rhs: &CJet2) -> CJet2 {
        assert_eq!(self.dim(), rhs.dim(), "jet dimension mismatch");
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &CJet2 {
    type Output = CJet2;
    fn mul(self, rhs: &CJet2) -> CJet2 {
        assert_eq!(self.dim(), rhs.dim(), "jet dimension mismatch");
        self.mul_unchecked(rhs)
    }
}

impl Neg for &CJet2 {
    type Output = CJet2;
    fn neg(self) -> CJet2 {
        self.scale(-ONE)
    }
}

impl Add<C64> for &CJet2 {
    type Output = CJet2;
    fn add(self, rhs: C64) -> CJet2 {
        let mut out = self.clone();
        out.value += rhs;
        out
    }
}

impl Sub<C64> for &CJet2 {
    type Output = CJet2;
    fn sub(self, rhs: C64) -> CJet2 {
        self + (-rhs)
    }
}

impl Mul<C64> for &CJet2 {
    type Output = CJet2;
    fn mul(self, rhs: C64) -> CJet2 {
        self.scale(rhs)
    }
}

impl Add<f64> for &CJet2 {
    type Output = CJet2;
    fn add(self, rhs: f64) -> CJet2 {
        self + C64::new(rhs, 0.0)
    }
}

impl Sub<f64> for &CJet2 {
    type Output = CJet2;
    fn sub(self, rhs: f64) -> CJet2 {
        self + C64::new(-rhs, 0.0)
    }
}

impl Mul<f64> for &CJet2 {
    type Output = CJet2;
    fn mul(self, rhs: f64) -> CJet2 {
        self.scale(C64::new(rhs, 0.0))
    }
}

macro_rules! forward_owned {
    ($($tr:ident :: $m:ident),*) => {$(
        impl $tr<CJet2> for CJet2 {
            type Output = CJet2;
            fn $m(self, rhs: CJet2) -> CJet2 { (&self).$m(&rhs) }
        }
        impl $tr<&CJet2> for CJet2 {
            type Output = CJet2;
            fn $m(self, rhs: &CJet2) -> CJet2 { (&self).$m(rhs) }
        }
        impl $tr<CJet2> for &CJet2 {
            type Output = CJet2;
            fn $m(self, rhs: CJet2) -> CJet2 { self.$m(&rhs) }
        }
        impl $tr<C64> for CJet2 {
            type Output = CJet2;
            fn $m(self, rhs: C64) -> CJet2 { (&self).$m(rhs) }
        }
        impl $tr<f64> for CJet2 {
            type Output = CJet2;
            fn $m(self, rhs: f64) -> CJet2 { (&self).$m(rhs) }
        }
    )*};
}

forward_owned!(Add::add, Sub::sub, Mul::mul);

impl Neg for CJet2 {
    type Output = CJet2;
    fn neg(self) -> CJet2 {
        -&self
    }
}

/// First-order jet: value plus Euclidean gradient.
///
/// Horizontal derivatives `X_j u` of a [`CJet2`] are first-order jets; the
/// operators differentiate them once more along the frame.
#[derive(Clone, Debug, PartialEq)]
pub struct CJet1 {
    pub value: C64,
    pub grad: Vec<C64>,
}

impl CJet1 {
    pub fn constant(dim: usize, value: C64) -> Self {
        CJet1 {
            value,
            grad: vec![ZERO; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn add(&self, other: &CJet1) -> CJet1 {
        CJet1 {
            value: self.value + other.value,
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, k: C64) -> CJet1 {
        CJet1 {
            value: self.value * k,
            grad: self.grad.iter().map(|g| g * k).collect(),
        }
    }

    pub fn mul(&self, other: &CJet1) -> CJet1 {
        CJet1 {
            value: self.value * other.value,
            grad: self
                .grad
                .iter()
                .zip(&other.grad)
                .map(|(a, b)| a * other.value + self.value * b)
                .collect(),
        }
    }

    pub fn conj(&self) -> CJet1 {
        CJet1 {
            value: self.value.conj(),
            grad: self.grad.iter().map(C64::conj).collect(),
        }
    }

    pub fn powc(&self, s: C64) -> Result<CJet1> {
        check_principal(self.value)?;
        let v = (s * self.value.ln()).exp();
        let d = s * v / self.value;
        Ok(CJet1 {
            value: v,
            grad: self.grad.iter().map(|g| d * g).collect(),
        })
    }
}

/// Central-difference jet of a scalar evaluator.
///
/// Step along coordinate `k` is `h * max(1, |point[k]|)`. Diagonal Hessian
/// entries use the 3-point stencil, off-diagonal entries the 4-point one.
pub fn finite_difference_jet<F>(f: F, point: &[f64], h_grad: f64, h_hess: f64) -> Result<CJet2>
where
    F: Fn(&[f64]) -> Result<C64>,
{
    if point.is_empty() {
        return Err(Error::EmptyPoint);
    }
    let d = point.len();
    let scale: Vec<f64> = point.iter().map(|x| x.abs().max(1.0)).collect();
    let eval = |offsets: &[(usize, f64)]| -> Result<C64> {
        let mut q = point.to_vec();
        for &(k, dx) in offsets {
            q[k] += dx;
        }
        f(&q).map_err(|e| Error::Stencil {
            point: q.clone(),
            source: Box::new(e),
        })
    };

    let f0 = eval(&[])?;
    let mut grad = Vec::with_capacity(d);
    for k in 0..d {
        let h = h_grad * scale[k];
        grad.push((eval(&[(k, h)])? - eval(&[(k, -h)])?) / (2.0 * h));
    }

    let mut lower = vec![ZERO; d * d];
    for i in 0..d {
        let hi = h_hess * scale[i];
        lower[i * d + i] = (eval(&[(i, hi)])? - 2.0 * f0 + eval(&[(i, -hi)])?) / (hi * hi);
        for j in 0..i {
            let hj = h_hess * scale[j];
            let pp = eval(&[(i, hi), (j, hj)])?;
            let pm = eval(&[(i, hi), (j, -hj)])?;
            let mp = eval(&[(i, -hi), (j, hj)])?;
            let mm = eval(&[(i, -hi), (j, -hj)])?;
            lower[i * d + j] = (pp - pm - mp + mm) / (4.0 * hi * hj);
        }
    }
    Ok(CJet2::from_lower(f0, grad, |i, j| lower[i * d + j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1.0)
    }

    #[test]
    fn seeding() {
        let j = seed_point(&[3.0]).unwrap();
        assert_eq!(j[0].value(), c(3.0, 0.0));
        assert_eq!(j[0].grad(), &[ONE]);
        assert_eq!(j[0].hess(0, 0), ZERO);

        let j = seed_point(&[0.0, 0.0]).unwrap();
        assert_eq!(j[0].grad(), &[ONE, ZERO]);
        assert_eq!(j[1].grad(), &[ZERO, ONE]);
        assert_eq!(j[1].value(), ZERO);

        let j = seed_point(&[1.0, 2.0, 5.0]).unwrap();
        assert_eq!(j[2].value(), c(5.0, 0.0));
        assert_eq!(j[2].grad(), &[ZERO, ZERO, ONE]);

        assert_eq!(seed_point(&[]), Err(Error::EmptyPoint));
    }

    #[test]
    fn products() {
        let x = &seed_point(&[3.0]).unwrap()[0];
        let sq = x * x;
        assert_eq!(sq.value(), c(9.0, 0.0));
        assert_eq!(sq.grad()[0], c(6.0, 0.0));
        assert_eq!(sq.hess(0, 0), c(2.0, 0.0));

        let v = seed_point(&[2.0, 5.0]).unwrap();
        let xy = &v[0] * &v[1];
        assert_eq!(xy.value(), c(10.0, 0.0));
        assert_eq!(xy.grad(), &[c(5.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(xy.hess(0, 1), ONE);
        assert_eq!(xy.hess(1, 0), ONE);
        assert_eq!(xy.hess(0, 0), ZERO);
    }

    #[test]
    fn modulus_squared_via_conjugate() {
        // (x + iy) * conj(x + iy) = x^2 + y^2
        let v = seed_point(&[1.0, 1.0]).unwrap();
        let zc = &v[0] + &(&v[1] * C64::i());
        let m = jet_arith(&zc, Operand::Jet(&zc.conj()), ArithKind::Mul).unwrap();
        assert_eq!(m.value(), c(2.0, 0.0));
        assert_eq!(m.grad(), &[c(2.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(m.hess(0, 0), c(2.0, 0.0));
        assert_eq!(m.hess(1, 1), c(2.0, 0.0));
        assert_eq!(m.hess(0, 1), ZERO);

        // Independent check against central differences.
        let fd = finite_difference_jet(|p| Ok(c(p[0] * p[0] + p[1] * p[1], 0.0)), &[1.0, 1.0], 1e-6, 1e-4).unwrap();
        for k in 0..2 {
            assert!(close(m.grad()[k], fd.grad()[k], 1e-8));
            for l in 0..2 {
                assert!(close(m.hess(k, l), fd.hess(k, l), 1e-6));
            }
        }
    }

    #[test]
    fn division_by_zero_value() {
        let v = seed_point(&[0.0, 1.0]).unwrap();
        assert_eq!(v[1].try_div(&v[0]), Err(Error::SingularDivision));
        let e = jet_arith(&v[1], Operand::Const(ZERO), ArithKind::Div);
        assert_eq!(e, Err(Error::SingularDivision));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = CJet2::variable(2, 0, 1.0);
        let b = CJet2::variable(3, 0, 1.0);
        assert!(matches!(
            jet_arith(&a, Operand::Jet(&b), ArithKind::Add),
            Err(Error::Dimension { expected: 2, found: 3 })
        ));
        assert!(a.try_mul(&b).is_err());
    }

    #[test]
    fn quotient_rule() {
        // f = x / y at (3, 2): grad (1/2, -3/4), hess [[0, -1/4], [-1/4, 3/4]]
        let v = seed_point(&[3.0, 2.0]).unwrap();
        let q = v[0].try_div(&v[1]).unwrap();
        assert!(close(q.value(), c(1.5, 0.0), 1e-15));
        assert!(close(q.grad()[0], c(0.5, 0.0), 1e-15));
        assert!(close(q.grad()[1], c(-0.75, 0.0), 1e-15));
        assert!(close(q.hess(0, 0), ZERO, 1e-15));
        assert!(close(q.hess(0, 1), c(-0.25, 0.0), 1e-15));
        assert!(close(q.hess(1, 1), c(0.75, 0.0), 1e-15));
    }

    #[test]
    fn powers_and_logs() {
        let one = CJet2::constant(1, ONE);
        assert_eq!(one.powc(c(-0.25, 0.0)).unwrap().value(), ONE);

        let x = &seed_point(&[1.0]).unwrap()[0];
        let l = jet_pow_log(x, PowLog::Log).unwrap();
        assert_eq!(l.value(), ZERO);
        assert_eq!(l.grad()[0], ONE);
        assert_eq!(l.hess(0, 0), c(-1.0, 0.0));

        // d/dx x^(1/2) = 1/4, d2/dx2 = -1/32 at x = 4
        let x = &seed_point(&[4.0]).unwrap()[0];
        let r = x.powf(0.5).unwrap();
        assert!(close(r.value(), c(2.0, 0.0), 1e-15));
        assert!(close(r.grad()[0], c(0.25, 0.0), 1e-15));
        assert!(close(r.hess(0, 0), c(-1.0 / 32.0, 0.0), 1e-15));
        let fd = finite_difference_jet(|p| Ok(c(p[0].sqrt(), 0.0)), &[4.0], 1e-6, 1e-4).unwrap();
        assert!(close(r.grad()[0], fd.grad()[0], 1e-8));
        assert!(close(r.hess(0, 0), fd.hess(0, 0), 1e-6));
    }

    #[test]
    fn powi_matches_repeated_products() {
        let v = seed_point(&[1.3, -0.7]).unwrap();
        let z = &v[0] + &(&v[1] * c(0.0, 2.0));
        let p3 = z.powi(3);
        let m3 = &(&z * &z) * &z;
        assert!(close(p3.value(), m3.value(), 1e-14));
        for i in 0..2 {
            assert!(close(p3.grad()[i], m3.grad()[i], 1e-14));
            for j in 0..2 {
                assert!(close(p3.hess(i, j), m3.hess(i, j), 1e-14));
            }
        }
        assert_eq!(z.powi(0).value(), ONE);
        assert_eq!(z.powi(0).grad(), &[ZERO, ZERO]);
    }

    #[test]
    fn branch_cut_is_rejected() {
        let neg = CJet2::constant(2, c(-2.0, 0.0));
        assert_eq!(neg.ln(), Err(Error::BranchCut { value: c(-2.0, 0.0) }));
        assert!(matches!(neg.powf(0.5), Err(Error::BranchCut { .. })));
        assert!(CJet2::constant(1, ZERO).ln().is_err());
        // Just above the cut is fine.
        assert!(CJet2::constant(1, c(-2.0, 1e-12)).ln().is_ok());
    }

    #[test]
    fn fd_exact_on_quadratic_and_constant() {
        let fd = finite_difference_jet(|p| Ok(c(p[0] * p[0], 0.0)), &[3.0], 1e-6, 1e-4).unwrap();
        assert!((fd.grad()[0] - c(6.0, 0.0)).norm() < 1e-9);
        let fd = finite_difference_jet(|_| Ok(c(2.5, -1.0)), &[0.3, 7.0], 1e-6, 1e-4).unwrap();
        assert!(fd.grad().iter().all(|g| g.norm() == 0.0));
        assert!(fd.hessian_rows().iter().flatten().all(|h| h.norm() == 0.0));
    }

    #[test]
    fn fd_errors_carry_stencil_point() {
        let e = finite_difference_jet(
            |p| if p[0] > 1.0 { Err(Error::SingularDivision) } else { Ok(ONE) },
            &[1.0],
            1e-6,
            1e-4,
        )
        .unwrap_err();
        match e {
            Error::Stencil { point, .. } => assert!(point[0] > 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn conj_involution_and_distribution() {
        let v = seed_point(&[0.4, 1.1]).unwrap();
        let a = &(&v[0] * c(1.0, 2.0)) + &(&v[1] * &v[1] * c(0.0, -1.0));
        let b = &(&v[0] * &v[1]) + c(0.5, 0.5);
        assert_eq!(a.conj().conj(), a);
        assert_eq!((&a + &b).conj(), &a.conj() + &b.conj());
        let lhs = (&a * &b).conj();
        let rhs = &a.conj() * &b.conj();
        assert!(close(lhs.value(), rhs.value(), 1e-15));
    }
}
