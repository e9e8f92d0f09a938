//! Truncated Taylor (jet) arithmetic over complex coefficients.
//!
//! A jet stores the normalized Taylor coefficients `c[k] = f^(k)(x₀)/k!` of a
//! function at a base point, up to a finite degree. All operations are exact
//! truncated power-series algebra: the product of two degree-K jets agrees
//! with the Taylor expansion of the product through degree K (degrees
//! truncate to the smaller operand). The derivative is a coefficient shift
//! and consumes one degree.

use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    /// Normalized coefficients: `c[k] = f^(k)(x₀)/k!`.
    c: Vec<Complex64>,
}

impl Jet {
    pub fn from_coeffs(c: Vec<Complex64>) -> Self {
        assert!(!c.is_empty(), "a jet has at least its value");
        Jet { c }
    }

    /// Jet of the constant function.
    pub fn constant(value: Complex64, degree: usize) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); degree + 1];
        c[0] = value;
        Jet { c }
    }

    /// Jet of `t ↦ value + t`, the local coordinate at the base point.
    pub fn variable(value: Complex64, degree: usize) -> Self {
        let mut j = Jet::constant(value, degree);
        if degree >= 1 {
            j.c[1] = Complex64::new(1.0, 0.0);
        }
        j
    }

    pub fn degree(&self) -> usize {
        self.c.len() - 1
    }

    /// Value of the underlying function at the base point.
    pub fn value(&self) -> Complex64 {
        self.c[0]
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.c.get(k).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.c
    }

    /// `f^(k)(x₀)` recovered from the normalized coefficient.
    pub fn derivative_at_base(&self, k: usize) -> Complex64 {
        let mut fact = 1.0;
        for i in 1..=k {
            fact *= i as f64;
        }
        self.coeff(k) * fact
    }

    /// Evaluates the truncated polynomial at offset `t` from the base point.
    pub fn eval(&self, t: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &ck in self.c.iter().rev() {
            acc = acc * t + ck;
        }
        acc
    }

    fn min_degree(&self, other: &Jet) -> usize {
        self.degree().min(other.degree())
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let d = self.min_degree(other);
        Jet::from_coeffs((0..=d).map(|k| self.c[k] + other.c[k]).collect())
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        let d = self.min_degree(other);
        Jet::from_coeffs((0..=d).map(|k| self.c[k] - other.c[k]).collect())
    }

    pub fn neg(&self) -> Jet {
        Jet::from_coeffs(self.c.iter().map(|&x| -x).collect())
    }

    pub fn scale(&self, a: Complex64) -> Jet {
        Jet::from_coeffs(self.c.iter().map(|&x| a * x).collect())
    }

    /// Cauchy product truncated to the smaller degree.
    pub fn mul(&self, other: &Jet) -> Jet {
        let d = self.min_degree(other);
        let mut c = vec![Complex64::new(0.0, 0.0); d + 1];
        for k in 0..=d {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..=k {
                s += self.c[j] * other.c[k - j];
            }
            c[k] = s;
        }
        Jet::from_coeffs(c)
    }

    /// Quotient jet; requires a nonzero constant term in the divisor.
    pub fn div(&self, other: &Jet) -> Result<Jet> {
        let d = self.min_degree(other);
        if other.c[0].norm() == 0.0 {
            return Err(Error::Numerical("jet division by zero constant term".into()));
        }
        let mut q = vec![Complex64::new(0.0, 0.0); d + 1];
        for k in 0..=d {
            let mut s = self.c[k];
            for j in 0..k {
                s -= q[j] * other.c[k - j];
            }
            q[k] = s / other.c[0];
        }
        Ok(Jet::from_coeffs(q))
    }

    /// Principal square root; requires a nonzero constant term.
    pub fn sqrt(&self) -> Result<Jet> {
        if self.c[0].norm() == 0.0 {
            return Err(Error::Numerical("jet sqrt of zero constant term".into()));
        }
        let d = self.degree();
        let mut r = vec![Complex64::new(0.0, 0.0); d + 1];
        r[0] = self.c[0].sqrt();
        for k in 1..=d {
            let mut s = self.c[k];
            for j in 1..k {
                s -= r[j] * r[k - j];
            }
            r[k] = s / (2.0 * r[0]);
        }
        Ok(Jet::from_coeffs(r))
    }

    /// Exponential of the jet.
    pub fn exp(&self) -> Jet {
        let d = self.degree();
        let mut e = vec![Complex64::new(0.0, 0.0); d + 1];
        e[0] = self.c[0].exp();
        for k in 1..=d {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                s += (j as f64) * self.c[j] * e[k - j];
            }
            e[k] = s / (k as f64);
        }
        Jet::from_coeffs(e)
    }

    /// Derivative jet: `d[k] = (k+1)·c[k+1]`. Consumes one degree.
    pub fn derivative(&self) -> Result<Jet> {
        if self.degree() == 0 {
            return Err(Error::DegreeExhaustion {
                needed: 1,
                available: 0,
            });
        }
        let d = self.degree();
        let mut c = vec![Complex64::new(0.0, 0.0); d];
        for k in 0..d {
            c[k] = ((k + 1) as f64) * self.c[k + 1];
        }
        Ok(Jet::from_coeffs(c))
    }

    /// Truncates (or zero-extends is forbidden: only down) to `degree`.
    pub fn truncate(&self, degree: usize) -> Jet {
        assert!(degree <= self.degree());
        Jet::from_coeffs(self.c[..=degree].to_vec())
    }
}
