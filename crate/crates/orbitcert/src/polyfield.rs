//! Polynomial vector fields with rigorously enclosed coefficients.
//!
//! Coefficients are built from decimal literals or small rationals and kept
//! as tightest interval enclosures, so evaluating a field on a box encloses
//! the exact image for every representative of every coefficient.

use serde::{Deserialize, Serialize};

use crate::interval::{IBox, Interval, IntervalError};
use crate::matrix::IMatrix;

/// One term `coeff * x_0^{e_0} ... x_{d-1}^{e_{d-1}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: Interval,
    pub exps: Vec<u32>,
}

/// A polynomial vector field on `R^d`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyField {
    dim: usize,
    components: Vec<Vec<Monomial>>,
}

impl PolyField {
    pub fn new(dim: usize, components: Vec<Vec<Monomial>>) -> PolyField {
        assert_eq!(components.len(), dim);
        for comp in &components {
            for m in comp {
                assert_eq!(m.exps.len(), dim);
            }
        }
        PolyField { dim, components }
    }

    /// Builds a field from `(coeff_literal, exponents)` term lists.
    pub fn from_decimal_terms(
        dim: usize,
        terms: &[Vec<(&str, Vec<u32>)>],
    ) -> Result<PolyField, IntervalError> {
        let mut components = Vec::with_capacity(dim);
        for comp in terms {
            let mut ms = Vec::with_capacity(comp.len());
            for (c, exps) in comp {
                ms.push(Monomial {
                    coeff: Interval::from_decimal_str(c)?,
                    exps: exps.clone(),
                });
            }
            components.push(ms);
        }
        Ok(PolyField::new(dim, components))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Vec<Monomial>] {
        &self.components
    }

    /// Total degree bound.
    pub fn degree(&self) -> u32 {
        self.components
            .iter()
            .flatten()
            .map(|m| m.exps.iter().sum())
            .max()
            .unwrap_or(0)
    }

    /// Interval evaluation: encloses the exact image of every point of `x`.
    pub fn eval(&self, x: &IBox) -> IBox {
        assert_eq!(x.dim(), self.dim);
        let mut out = Vec::with_capacity(self.dim);
        for comp in &self.components {
            let mut acc = Interval::ZERO;
            for m in comp {
                let mut t = m.coeff;
                for (xi, &e) in x.0.iter().zip(&m.exps) {
                    if e > 0 {
                        t = t.mul(&xi.powi(e));
                    }
                }
                acc = acc.add(&t);
            }
            out.push(acc);
        }
        IBox(out)
    }

    /// Mean-value-form evaluation `f(m) + Df(x)·(x - m)`, intersected with
    /// the plain evaluation; much tighter on narrow boxes.
    pub fn eval_centered(&self, x: &IBox) -> IBox {
        let plain = self.eval(x);
        let mid = x.mid();
        let at_mid = self.eval(&IBox::from_points(&mid));
        let jac = self.jacobian_eval(x);
        let centered = at_mid.add(&jac.mul_box(&x.sub_points(&mid)));
        centered.intersect(&plain).unwrap_or(plain)
    }

    /// Point evaluation in plain f64 (midpoints of coefficients).
    pub fn eval_f64(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim);
        for comp in &self.components {
            let mut acc = 0.0;
            for m in comp {
                let mut t = m.coeff.mid();
                for (xi, &e) in x.iter().zip(&m.exps) {
                    for _ in 0..e {
                        t *= xi;
                    }
                }
                acc += t;
            }
            out.push(acc);
        }
        out
    }

    /// The symbolic Jacobian, as a `d x d` grid of polynomial components.
    pub fn jacobian_field(&self) -> Vec<Vec<Vec<Monomial>>> {
        let d = self.dim;
        let mut jac = vec![vec![Vec::new(); d]; d];
        for (i, comp) in self.components.iter().enumerate() {
            for m in comp {
                for j in 0..d {
                    let e = m.exps[j];
                    if e == 0 {
                        continue;
                    }
                    let mut exps = m.exps.clone();
                    exps[j] = e - 1;
                    jac[i][j].push(Monomial {
                        coeff: m.coeff.scale(e as f64),
                        exps,
                    });
                }
            }
        }
        jac
    }

    /// Interval enclosure of the Jacobian matrix on a box.
    pub fn jacobian_eval(&self, x: &IBox) -> IMatrix {
        let d = self.dim;
        let jac = self.jacobian_field();
        let mut out = IMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = Interval::ZERO;
                for m in &jac[i][j] {
                    let mut t = m.coeff;
                    for (xi, &e) in x.0.iter().zip(&m.exps) {
                        if e > 0 {
                            t = t.mul(&xi.powi(e));
                        }
                    }
                    acc = acc.add(&t);
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// Jacobian at a point in plain f64.
    pub fn jacobian_f64(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let jac = self.jacobian_field();
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for m in &jac[i][j] {
                    let mut t = m.coeff.mid();
                    for (xi, &e) in x.iter().zip(&m.exps) {
                        for _ in 0..e {
                            t *= xi;
                        }
                    }
                    acc += t;
                }
                out[i * d + j] = acc;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_1d() -> PolyField {
        // x' = x
        PolyField::from_decimal_terms(1, &[vec![("1", vec![1])]]).unwrap()
    }

    #[test]
    fn eval_linear() {
        let f = linear_1d();
        let x = IBox(vec![Interval::new(1.0, 2.0)]);
        let y = f.eval(&x);
        assert_eq!(y.0[0], Interval::new(1.0, 2.0));
    }

    #[test]
    fn jacobian_of_square() {
        // x' = x^2 => dx'/dx = 2x
        let f = PolyField::from_decimal_terms(1, &[vec![("1", vec![2])]]).unwrap();
        let j = f.jacobian_eval(&IBox(vec![Interval::point(3.0)]));
        assert!(j[(0, 0)].contains(6.0));
        assert!(j[(0, 0)].width() < 1e-14);
    }

    #[test]
    fn eval_encloses_coefficient_uncertainty() {
        // 0.2 is not a binary64; the enclosure must contain the exact 1/5
        let f = PolyField::from_decimal_terms(1, &[vec![("0.2", vec![0])]]).unwrap();
        let y = f.eval(&IBox(vec![Interval::point(0.0)]));
        let (lo, hi) = y.0[0].to_rationals().unwrap();
        let fifth = num_rational::BigRational::new(1.into(), 5.into());
        assert!(lo <= fifth && fifth <= hi);
    }
}
