//! Heisenberg groups `H^n` and Grushin-type planes `G_n`.
//!
//! Vector fields are represented by their coefficients against the
//! Euclidean coordinate fields, `X_j = sum_k a[j][k] d/dx_k`, together with
//! the exact first derivatives of those coefficients. Applying a field to a
//! [`CJet2`] is then a contraction, and `X_i X_j u` is exact.
//!
//! Horizontal indices are zero-based throughout: on `H^n` field `j < n` pairs
//! with `j + n`, on `G_n` field `0` is `Y_1` and field `1` is `Y_2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{CJet1, CJet2, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Space {
    Heisenberg { n: usize },
    Grushin { n: usize, a: f64, b: f64, c: f64 },
}

impl Space {
    pub fn heisenberg(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("Heisenberg n must be at least 1".into()));
        }
        Ok(Space::Heisenberg { n })
    }

    pub fn grushin(n: usize, a: f64, b: f64, c: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("Grushin n must be at least 1".into()));
        }
        if c == 0.0 || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("Grushin c must be finite and nonzero, got {c}")));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter("Grushin a and b must be finite".into()));
        }
        Ok(Space::Grushin { n, a, b, c })
    }

    pub fn n(&self) -> usize {
        match *self {
            Space::Heisenberg { n } | Space::Grushin { n, .. } => n,
        }
    }

    /// Euclidean dimension: `2n + 1` or `2`.
    pub fn dim(&self) -> usize {
        match *self {
            Space::Heisenberg { n } => 2 * n + 1,
            Space::Grushin { .. } => 2,
        }
    }

    /// Number of horizontal fields: `2n` or `2`.
    pub fn horizontal_count(&self) -> usize {
        match *self {
            Space::Heisenberg { n } => 2 * n,
            Space::Grushin { .. } => 2,
        }
    }

    /// The pole of every solution family.
    pub fn singular_point(&self) -> Vec<f64> {
        match *self {
            Space::Heisenberg { n } => vec![0.0; 2 * n + 1],
            Space::Grushin { a, b, .. } => vec![a, b],
        }
    }

    pub fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: point.len(),
            });
        }
        Ok(())
    }

    pub fn frame_at(&self, point: &[f64]) -> Result<HorizontalFrame> {
        self.check_point(point)?;
        let d = self.dim();
        let m = self.horizontal_count();
        let mut frame = HorizontalFrame {
            m,
            d,
            coeffs: vec![0.0; m * d],
            coeff_grads: vec![0.0; m * d * d],
        };
        match *self {
            Space::Heisenberg { n } => {
                let z = d - 1;
                for i in 0..m {
                    frame.set(i, i, 1.0);
                    if i < n {
                        frame.set(i, z, -point[n + i] / 2.0);
                        frame.set_grad(i, z, n + i, -0.5);
                    } else {
                        frame.set(i, z, point[i - n] / 2.0);
                        frame.set_grad(i, z, i - n, 0.5);
                    }
                }
            }
            Space::Grushin { n, a, c, .. } => {
                let s = point[0] - a;
                frame.set(0, 0, 1.0);
                frame.set(1, 1, c * powi(s, n));
                frame.set_grad(1, 1, 0, c * n as f64 * powi(s, n - 1));
            }
        }
        Ok(frame)
    }
}

fn powi(x: f64, k: usize) -> f64 {
    x.powi(i32::try_from(k).expect("exponent fits in i32"))
}

/// Space selector plus the operator parameters `p` and `L`.
///
/// `p` must exceed 1; `p = +inf` is accepted and stands for the infinity
/// operators, which ignore it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub space: Space,
    pub p: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

impl SpaceParams {
    pub fn new(space: Space, p: f64, l: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::InvalidParameter(format!("p must lie in (1, inf), got {p}")));
        }
        if !l.is_finite() {
            return Err(Error::InvalidParameter(format!("L must be finite, got {l}")));
        }
        Ok(SpaceParams { space, p, l })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }
}

/// Frame coefficients at a point. `coeffs[j*d + k] = a[j][k]` and
/// `coeff_grads[(j*d + k)*d + l] = d a[j][k] / d x_l`.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizontalFrame {
    pub m: usize,
    pub d: usize,
    pub coeffs: Vec<f64>,
    pub coeff_grads: Vec<f64>,
}

/// Raw second horizontal derivatives `raw[i][j] = X_i X_j u`.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizontalHessian {
    pub raw: Vec<Vec<C64>>,
}

impl HorizontalHessian {
    /// `(D^2 u)*_{ij} = (X_i X_j u + X_j X_i u) / 2`.
    pub fn symmetrized(&self) -> Vec<Vec<C64>> {
        let m = self.raw.len();
        (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
                        (self.raw[lo][hi] + self.raw[hi][lo]) * 0.5
                    })
                    .collect()
            })
            .collect()
    }
}

impl HorizontalFrame {
    fn set(&mut self, j: usize, k: usize, v: f64) {
        self.coeffs[j * self.d + k] = v;
    }

    fn set_grad(&mut self, j: usize, k: usize, l: usize, v: f64) {
        self.coeff_grads[(j * self.d + k) * self.d + l] = v;
    }

    pub fn coeff(&self, j: usize, k: usize) -> f64 {
        self.coeffs[j * self.d + k]
    }

    pub fn coeff_grad(&self, j: usize, k: usize, l: usize) -> f64 {
        self.coeff_grads[(j * self.d + k) * self.d + l]
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j >= self.m {
            return Err(Error::IndexOutOfRange { index: j, count: self.m });
        }
        Ok(())
    }

    fn check_jet(&self, dim: usize) -> Result<()> {
        if dim != self.d {
            return Err(Error::Dimension {
                expected: self.d,
                found: dim,
            });
        }
        Ok(())
    }

    /// `X_j` applied to anything with a Euclidean gradient.
    pub fn apply(&self, j: usize, grad: &[C64]) -> C64 {
        (0..self.d).map(|k| grad[k] * self.coeff(j, k)).sum()
    }

    /// `∇₀u = (X_1 u, ..., X_m u)`.
    pub fn gradient(&self, u: &CJet2) -> Result<Vec<C64>> {
        self.check_jet(u.dim())?;
        Ok((0..self.m).map(|j| self.apply(j, u.grad())).collect())
    }

    /// `X_j u` as a first-order jet, so it can be differentiated again.
    pub fn derivative_jet(&self, j: usize, u: &CJet2) -> Result<CJet1> {
        self.check_index(j)?;
        self.check_jet(u.dim())?;
        let d = self.d;
        let grad = (0..d)
            .map(|l| {
                (0..d)
                    .map(|k| u.grad()[k] * self.coeff_grad(j, k, l) + u.hess(l, k) * self.coeff(j, k))
                    .sum()
            })
            .collect();
        Ok(CJet1 {
            value: self.apply(j, u.grad()),
            grad,
        })
    }

    pub fn derivative_jets(&self, u: &CJet2) -> Result<Vec<CJet1>> {
        (0..self.m).map(|j| self.derivative_jet(j, u)).collect()
    }

    pub fn second_derivatives(&self, u: &CJet2) -> Result<HorizontalHessian> {
        let jets = self.derivative_jets(u)?;
        let raw = (0..self.m)
            .map(|i| jets.iter().map(|xj| self.apply(i, &xj.grad)).collect())
            .collect();
        Ok(HorizontalHessian { raw })
    }
}

pub fn horizontal_gradient(space: &Space, u: &CJet2, point: &[f64]) -> Result<Vec<C64>> {
    space.frame_at(point)?.gradient(u)
}

pub fn horizontal_hessian(space: &Space, u: &CJet2, point: &[f64]) -> Result<HorizontalHessian> {
    space.frame_at(point)?.second_derivatives(u)
}

/// `[X_i, X_j] u = X_i X_j u - X_j X_i u`.
pub fn lie_bracket_apply(space: &Space, i: usize, j: usize, u: &CJet2, point: &[f64]) -> Result<C64> {
    let frame = space.frame_at(point)?;
    frame.check_index(i)?;
    frame.check_index(j)?;
    let xi = frame.derivative_jet(i, u)?;
    let xj = frame.derivative_jet(j, u)?;
    Ok(frame.apply(i, &xj.grad) - frame.apply(j, &xi.grad))
}

/// `sum_{i < 2n} X_i f_i`; a trailing `Z` component is accepted and ignored.
pub fn heisenberg_divergence(n: usize, components: &[CJet1], point: &[f64]) -> Result<C64> {
    let space = Space::heisenberg(n)?;
    let frame = space.frame_at(point)?;
    let m = frame.m;
    if components.len() != m && components.len() != m + 1 {
        return Err(Error::Dimension {
            expected: m + 1,
            found: components.len(),
        });
    }
    for f in components {
        frame.check_jet(f.dim())?;
    }
    Ok((0..m).map(|i| frame.apply(i, &components[i].grad)).sum())
}

pub fn group_multiply(n: usize, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
    let d = 2 * n + 1;
    for v in [p, q] {
        if v.len() != d {
            return Err(Error::Dimension {
                expected: d,
                found: v.len(),
            });
        }
    }
    let mut out: Vec<f64> = p.iter().zip(q).map(|(a, b)| a + b).collect();
    let twist: f64 = (0..n).map(|i| p[i] * q[n + i] - p[n + i] * q[i]).sum();
    out[d - 1] += 0.5 * twist;
    Ok(out)
}

/// Group inverse, which is `-p` in these coordinates.
pub fn group_inverse(p: &[f64]) -> Vec<f64> {
    p.iter().map(|x| -x).collect()
}

/// `sum |x_i| + |z|^(1/2)`, comparable to the homogeneous norm.
pub fn homogeneous_norm_estimate(n: usize, p: &[f64]) -> Result<f64> {
    let d = 2 * n + 1;
    if p.len() != d {
        return Err(Error::Dimension {
            expected: d,
            found: p.len(),
        });
    }
    Ok(p[..d - 1].iter().map(|x| x.abs()).sum::<f64>() + p[d - 1].abs().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::seed_point;

    const H1: Space = Space::Heisenberg { n: 1 };
    const G1: Space = Space::Grushin {
        n: 1,
        a: 0.0,
        b: 0.0,
        c: 1.0,
    };

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn rows(f: &HorizontalFrame) -> Vec<Vec<f64>> {
        (0..f.m).map(|j| (0..f.d).map(|k| f.coeff(j, k)).collect()).collect()
    }

    #[test]
    fn frames() {
        assert_eq!(rows(&H1.frame_at(&[0.0, 0.0, 0.0]).unwrap()), vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        assert_eq!(rows(&H1.frame_at(&[1.0, 2.0, 0.0]).unwrap()), vec![vec![1.0, 0.0, -1.0], vec![0.0, 1.0, 0.5]]);
        assert_eq!(rows(&G1.frame_at(&[3.0, 7.0]).unwrap()), vec![vec![1.0, 0.0], vec![0.0, 3.0]]);
        assert!(matches!(H1.frame_at(&[1.0, 2.0]), Err(Error::Dimension { expected: 3, found: 2 })));
    }

    #[test]
    fn grushin_singular_line_keeps_degenerate_frame() {
        let f = G1.frame_at(&[0.0, 1.0]).unwrap();
        assert_eq!(rows(&f)[1], vec![0.0, 0.0]);
    }

    #[test]
    fn space_validation() {
        assert!(Space::grushin(1, 0.0, 0.0, 0.0).is_err());
        assert!(Space::heisenberg(0).is_err());
        assert!(SpaceParams::new(H1, 1.0, 0.0).is_err());
        assert!(SpaceParams::new(H1, 0.5, 0.0).is_err());
        assert!(SpaceParams::new(H1, f64::INFINITY, 0.0).is_ok());
        assert_eq!(Space::heisenberg(2).unwrap().dim(), 5);
    }

    #[test]
    fn horizontal_gradients() {
        let pt = [0.0, 0.0, 5.0];
        let v = seed_point(&pt).unwrap();
        assert_eq!(horizontal_gradient(&H1, &v[2], &pt).unwrap(), vec![re(0.0), re(0.0)]);

        let pt = [0.7, -1.2, 3.0];
        let v = seed_point(&pt).unwrap();
        assert_eq!(horizontal_gradient(&H1, &v[0], &pt).unwrap(), vec![re(1.0), re(0.0)]);

        let pt = [3.0, 0.0];
        let v = seed_point(&pt).unwrap();
        assert_eq!(horizontal_gradient(&G1, &v[1], &pt).unwrap(), vec![re(0.0), re(3.0)]);
    }

    #[test]
    fn second_derivatives_and_brackets() {
        let pt = [0.3, -0.8, 2.0];
        let v = seed_point(&pt).unwrap();
        let hh = horizontal_hessian(&H1, &v[2], &pt).unwrap();
        assert_eq!(hh.raw[0][1] - hh.raw[1][0], re(1.0));
        assert_eq!(lie_bracket_apply(&H1, 0, 1, &v[2], &pt).unwrap(), re(1.0));
        let u = &(&v[0] * &v[1]) * &v[2];
        assert_eq!(lie_bracket_apply(&H1, 0, 0, &u, &pt).unwrap(), re(0.0));

        let origin = [0.0, 0.0, 0.0];
        let v = seed_point(&origin).unwrap();
        let hh = horizontal_hessian(&H1, &(&v[0] * &v[0]), &origin).unwrap();
        assert_eq!(hh.raw[0][0], re(2.0));
        assert_eq!(hh.raw[0][1], re(0.0));
        assert_eq!(hh.raw[1][1], re(0.0));

        let pt = [2.0, 0.0];
        let v = seed_point(&pt).unwrap();
        assert_eq!(lie_bracket_apply(&G1, 0, 1, &v[1], &pt).unwrap(), re(1.0));
        assert!(matches!(
            lie_bracket_apply(&G1, 0, 2, &v[1], &pt),
            Err(Error::IndexOutOfRange { index: 2, count: 2 })
        ));
    }

    #[test]
    fn symmetrized_is_symmetric() {
        let pt = [0.4, 1.3, -0.6];
        let v = seed_point(&pt).unwrap();
        let u = &(&(&v[0] * &v[2]) * C64::new(0.3, 1.0)) + &(&v[1] * &v[2]).powi(2);
        let s = horizontal_hessian(&H1, &u, &pt).unwrap().symmetrized();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(s[i][j], s[j][i]);
            }
        }
    }

    #[test]
    fn divergence_examples() {
        let pt = [0.5, -1.5, 2.0];
        let v = seed_point(&pt).unwrap();
        let zero = CJet1::constant(3, re(0.0));
        let f = [v[0].to_jet1(), zero.clone(), zero.clone()];
        assert_eq!(heisenberg_divergence(1, &f, &pt).unwrap(), re(1.0));

        let f = [zero.clone(), zero.clone(), (&v[2] * &v[0]).to_jet1()];
        assert_eq!(heisenberg_divergence(1, &f, &pt).unwrap(), re(0.0));

        let origin = [0.0, 0.0, 0.0];
        let v = seed_point(&origin).unwrap();
        let u = &(&v[0] * &v[0]) + &(&v[1] * &v[1]);
        let frame = H1.frame_at(&origin).unwrap();
        let grad = frame.derivative_jets(&u).unwrap();
        assert_eq!(heisenberg_divergence(1, &grad, &origin).unwrap(), re(4.0));
    }

    #[test]
    fn group_law() {
        let p = [0.3, -1.0, 2.5];
        assert_eq!(group_multiply(1, &p, &[0.0, 0.0, 0.0]).unwrap(), p.to_vec());
        assert_eq!(group_multiply(1, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap(), vec![1.0, 1.0, 0.5]);
        assert_eq!(group_multiply(1, &p, &group_inverse(&p)).unwrap(), vec![0.0, 0.0, 0.0]);
        assert!(group_multiply(1, &p, &[0.0; 5]).is_err());
    }

    #[test]
    fn norm_estimate() {
        assert_eq!(homogeneous_norm_estimate(1, &[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(homogeneous_norm_estimate(1, &[1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(homogeneous_norm_estimate(1, &[0.0, 0.0, 4.0]).unwrap(), 2.0);
    }
}
