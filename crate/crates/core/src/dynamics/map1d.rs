use crate::error::{Error, Result};

/// A smooth self-map of `[0, 1]`.
pub trait Map1D: Sync {
    fn eval(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
}

/// `g(x) = mu x (1 - x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Logistic {
    mu: f64,
}

impl Logistic {
    /// Accepts `mu` in `[0, 4]`, where `g` maps `[0, 1]` into itself.
    pub fn new(mu: f64) -> Result<Self> {
        if !(0.0..=4.0).contains(&mu) {
            return Err(Error::ParameterOutOfRange {
                name: "mu",
                value: mu,
                range: "[0, 4]".into(),
            });
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

impl Map1D for Logistic {
    #[inline]
    fn eval(&self, x: f64) -> f64 {
        self.mu * x * (1.0 - x)
    }

    #[inline]
    fn derivative(&self, x: f64) -> f64 {
        self.mu * (1.0 - 2.0 * x)
    }
}

/// `f(x) = (a - 2b + c) x^2 + 2 (b - c) x + c`, the first coordinate of a
/// two-state operator written in terms of `x` alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Map1D for QuadraticMap {
    #[inline]
    fn eval(&self, x: f64) -> f64 {
        ((self.a - 2.0 * self.b + self.c) * x + 2.0 * (self.b - self.c)) * x + self.c
    }

    #[inline]
    fn derivative(&self, x: f64) -> f64 {
        2.0 * (self.a - 2.0 * self.b + self.c) * x + 2.0 * (self.b - self.c)
    }
}
