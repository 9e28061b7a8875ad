use std::collections::BTreeMap;
use std::fmt;

use super::coeff::{pow, Coeff, Rational, Scalar};

/// Sparse polynomial in an open-ended list of variables.
///
/// Exponent vectors are stored without trailing zeros, so the constant
/// monomial is the empty vector and the number of variables never has to
/// be known up front. This is what lets `MultiPoly` act as a coefficient
/// ring for [`super::BivarPoly`].
#[derive(Clone, Debug, PartialEq, Default)]
pub struct MultiPoly<C> {
    terms: BTreeMap<Vec<u32>, C>,
}

fn trim(mut e: Vec<u32>) -> Vec<u32> {
    while e.last() == Some(&0) {
        e.pop();
    }
    e
}

impl<C: Coeff> MultiPoly<C> {
    pub fn zero() -> Self {
        MultiPoly {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: C) -> Self {
        Self::monomial(Vec::new(), c)
    }

    /// The variable with index `i`.
    pub fn var(i: usize) -> Self {
        let mut e = vec![0; i + 1];
        e[i] = 1;
        Self::monomial(e, C::one())
    }

    pub fn monomial(exps: Vec<u32>, c: C) -> Self {
        let mut p = Self::zero();
        p.add_term(exps, c);
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Vec<u32>, C)>>(it: I) -> Self {
        let mut p = Self::zero();
        for (e, c) in it {
            p.add_term(e, c);
        }
        p
    }

    /// Adds `c * var^exps`, keeping the map free of zero coefficients.
    pub fn add_term(&mut self, exps: Vec<u32>, c: C) {
        if c.is_zero() {
            return;
        }
        let e = trim(exps);
        match self.terms.get_mut(&e) {
            Some(old) => {
                let s = old.plus(&c);
                if s.is_zero() {
                    self.terms.remove(&e);
                } else {
                    *old = s;
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest variable index in use plus one.
    pub fn nvars(&self) -> usize {
        self.terms.keys().map(|e| e.len()).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn constant_term(&self) -> C {
        self.terms.get(&Vec::new()).cloned().unwrap_or_else(C::zero)
    }

    /// Terms of total degree exactly `d`.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() == d)
                .map(|(e, c)| (e.clone(), c.clone())),
        )
    }

    /// Coefficient of the linear monomial in variable `i`.
    pub fn linear_coeff(&self, i: usize) -> C {
        let mut e = vec![0; i + 1];
        e[i] = 1;
        self.terms.get(&e).cloned().unwrap_or_else(C::zero)
    }

    pub fn scale(&self, s: &C) -> Self {
        Self::from_terms(self.terms.iter().map(|(e, c)| (e.clone(), c.times(s))))
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> MultiPoly<D> {
        MultiPoly::from_terms(self.terms.iter().map(|(e, c)| (e.clone(), f(c))))
    }

    /// Evaluates at `point`; missing trailing variables count as zero.
    pub fn eval(&self, point: &[C]) -> C {
        let mut acc = C::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let v = point.get(i).cloned().unwrap_or_else(C::zero);
                t = t.times(&pow(&v, k));
            }
            acc = acc.plus(&t);
        }
        acc
    }

    /// Substitutes each variable `i` by the polynomial `images[i]`.
    pub fn compose(&self, images: &[MultiPoly<C>]) -> Self {
        let mut acc = Self::zero();
        for (e, c) in &self.terms {
            let mut t = Self::constant(c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let img = images.get(i).cloned().unwrap_or_else(Self::zero);
                t = t.times(&pow(&img, k));
            }
            acc = acc.plus(&t);
        }
        acc
    }
}

impl<C: Scalar> MultiPoly<C> {
    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut t = c.to_f64();
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t *= point.get(i).copied().unwrap_or(0.0).powi(k as i32);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn to_f64(&self) -> MultiPoly<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    /// Largest absolute coefficient, zero for the zero polynomial.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.to_f64().abs())
            .fold(0.0, f64::max)
    }
}

impl<C: Coeff> Coeff for MultiPoly<C> {
    fn zero() -> Self {
        MultiPoly::zero()
    }
    fn one() -> Self {
        MultiPoly::constant(C::one())
    }
    fn from_int(n: i64) -> Self {
        MultiPoly::constant(C::from_int(n))
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
    fn minus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.negated());
        }
        out
    }
    fn times(&self, other: &Self) -> Self {
        let mut out = MultiPoly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let n = ea.len().max(eb.len());
                let e: Vec<u32> = (0..n)
                    .map(|i| ea.get(i).copied().unwrap_or(0) + eb.get(i).copied().unwrap_or(0))
                    .collect();
                out.add_term(e, ca.times(cb));
            }
        }
        out
    }
    fn negated(&self) -> Self {
        self.map_coeffs(|c| c.negated())
    }
}

impl fmt::Display for MultiPoly<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_multi(f, self, |c| c.to_string(), None)
    }
}

impl fmt::Display for MultiPoly<f64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_multi(f, self, |c| format!("{c}"), None)
    }
}

impl<C: Coeff> MultiPoly<C> {
    /// Renders with the given variable names (`t0, t1, ...` when absent).
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a
    where
        C: fmt::Display,
    {
        struct Named<'a, C>(&'a MultiPoly<C>, &'a [String]);
        impl<C: Coeff + fmt::Display> fmt::Display for Named<'_, C> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write_multi(f, self.0, |c| c.to_string(), Some(self.1))
            }
        }
        Named(self, names)
    }
}

fn write_multi<C: Coeff>(
    f: &mut fmt::Formatter<'_>,
    p: &MultiPoly<C>,
    show: impl Fn(&C) -> String,
    names: Option<&[String]>,
) -> fmt::Result {
    if p.is_empty() {
        return write!(f, "0");
    }
    let mut first = true;
    for (e, c) in &p.terms {
        if !first {
            write!(f, " + ")?;
        }
        first = false;
        let mut parts = vec![format!("({})", show(c))];
        for (i, &k) in e.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let name = names
                .and_then(|n| n.get(i).cloned())
                .unwrap_or_else(|| format!("t{i}"));
            parts.push(if k == 1 { name } else { format!("{name}^{k}") });
        }
        write!(f, "{}", parts.join("*"))?;
    }
    Ok(())
}
