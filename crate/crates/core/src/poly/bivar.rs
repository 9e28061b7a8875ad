use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::coeff::{pow, Coeff, Rational, Scalar};

/// Partial-derivative direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

/// Sparse polynomial in `(x, y)` with coefficients in `C`.
///
/// Terms map the exponent pair `(i, j)` of `x^i y^j` to a nonzero
/// coefficient; the zero polynomial has no terms.
#[derive(Clone, Debug, PartialEq)]
pub struct BivarPoly<C> {
    terms: BTreeMap<(u32, u32), C>,
}

impl<C: Coeff> Default for BivarPoly<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coeff> BivarPoly<C> {
    pub fn zero() -> Self {
        BivarPoly {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: C) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn monomial(i: u32, j: u32, c: C) -> Self {
        let mut p = Self::zero();
        p.add_term(i, j, c);
        p
    }

    pub fn x() -> Self {
        Self::monomial(1, 0, C::one())
    }

    pub fn y() -> Self {
        Self::monomial(0, 1, C::one())
    }

    pub fn from_terms<I: IntoIterator<Item = ((u32, u32), C)>>(it: I) -> Self {
        let mut p = Self::zero();
        for ((i, j), c) in it {
            p.add_term(i, j, c);
        }
        p
    }

    /// Adds `c x^i y^j`, dropping the entry if the sum cancels.
    pub fn add_term(&mut self, i: u32, j: u32, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&(i, j)) {
            Some(old) => {
                let s = old.plus(&c);
                if s.is_zero() {
                    self.terms.remove(&(i, j));
                } else {
                    *old = s;
                }
            }
            None => {
                self.terms.insert((i, j), c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, i: u32, j: u32) -> C {
        self.terms.get(&(i, j)).cloned().unwrap_or_else(C::zero)
    }

    /// `max(i + j)` over stored terms; `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|&(i, j)| i + j).max()
    }

    /// Lowest total degree present; `None` for the zero polynomial.
    pub fn order(&self) -> Option<u32> {
        self.terms.keys().map(|&(i, j)| i + j).min()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.order() == self.total_degree()
    }

    /// Sum of the terms with `i + j == d`.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|(&(i, j), _)| i + j == d)
                .map(|(&k, c)| (k, c.clone())),
        )
    }

    /// All nonzero homogeneous parts keyed by degree.
    pub fn homogeneous_parts(&self) -> BTreeMap<u32, Self> {
        let mut out: BTreeMap<u32, Self> = BTreeMap::new();
        for (&(i, j), c) in &self.terms {
            out.entry(i + j).or_default().add_term(i, j, c.clone());
        }
        out
    }

    pub fn scale(&self, s: &C) -> Self {
        Self::from_terms(self.terms.iter().map(|(&k, c)| (k, c.times(s))))
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> BivarPoly<D> {
        BivarPoly::from_terms(self.terms.iter().map(|(&k, c)| (k, f(c))))
    }

    /// Formal partial derivative.
    pub fn diff(&self, var: Var) -> Self {
        Self::from_terms(self.terms.iter().filter_map(|(&(i, j), c)| match var {
            Var::X if i > 0 => Some(((i - 1, j), c.times(&C::from_int(i as i64)))),
            Var::Y if j > 0 => Some(((i, j - 1), c.times(&C::from_int(j as i64)))),
            _ => None,
        }))
    }

    /// Repeated partial derivative `d^(nx+ny) / dx^nx dy^ny`.
    pub fn partial(&self, nx: u32, ny: u32) -> Self {
        let mut p = self.clone();
        for _ in 0..nx {
            p = p.diff(Var::X);
        }
        for _ in 0..ny {
            p = p.diff(Var::Y);
        }
        p
    }

    /// Integer power.
    pub fn pow(&self, k: u32) -> Self {
        pow(self, k)
    }

    /// Composition with the linear map
    /// `(x, y) -> (m[0][0] x + m[0][1] y, m[1][0] x + m[1][1] y)`.
    pub fn linear_substitute(&self, m: &[[C; 2]; 2]) -> Self {
        let u = Self::from_terms([((1, 0), m[0][0].clone()), ((0, 1), m[0][1].clone())]);
        let v = Self::from_terms([((1, 0), m[1][0].clone()), ((0, 1), m[1][1].clone())]);
        let deg = self.total_degree().unwrap_or(0) as usize;
        let mut upow = vec![Self::constant(C::one())];
        let mut vpow = vec![Self::constant(C::one())];
        for k in 1..=deg {
            upow.push(&upow[k - 1] * &u);
            vpow.push(&vpow[k - 1] * &v);
        }
        let mut acc = Self::zero();
        for (&(i, j), c) in &self.terms {
            let t = (&upow[i as usize] * &vpow[j as usize]).scale(c);
            acc = &acc + &t;
        }
        acc
    }

    /// Composition with the rotation `(x, y) -> (x c + y s, -x s + y c)`
    /// given exact cosine `c` and sine `s`.
    ///
    /// This is the single rotation convention of the crate: `rotate(p, t)`
    /// is `p` evaluated at the point obtained by rotating `(x, y)` by `-t`.
    pub fn rotate_exact(&self, cos: &C, sin: &C) -> Self {
        self.linear_substitute(&[[cos.clone(), sin.clone()], [sin.negated(), cos.clone()]])
    }

    /// Evaluation in an arbitrary coefficient ring.
    pub fn eval_in<T: Coeff>(&self, x: &T, y: &T, lift: impl Fn(&C) -> T) -> T {
        let (mi, mj) = self.max_exponents();
        let mut xp = Vec::with_capacity(mi as usize + 1);
        let mut yp = Vec::with_capacity(mj as usize + 1);
        xp.push(T::one());
        yp.push(T::one());
        for k in 1..=mi as usize {
            xp.push(xp[k - 1].times(x));
        }
        for k in 1..=mj as usize {
            yp.push(yp[k - 1].times(y));
        }
        let mut acc = T::zero();
        for (&(i, j), c) in &self.terms {
            let t = lift(c).times(&xp[i as usize]).times(&yp[j as usize]);
            acc = acc.plus(&t);
        }
        acc
    }

    fn max_exponents(&self) -> (u32, u32) {
        self.terms
            .keys()
            .fold((0, 0), |(a, b), &(i, j)| (a.max(i), b.max(j)))
    }
}

impl<C: Scalar> BivarPoly<C> {
    pub fn to_f64(&self) -> BivarPoly<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.to_f64().abs())
            .fold(0.0, f64::max)
    }

    /// Composition with the rotation by `theta` radians (floating).
    pub fn rotate(&self, theta: f64) -> BivarPoly<f64> {
        self.to_f64().rotate_exact(&theta.cos(), &theta.sin())
    }
}

impl BivarPoly<f64> {
    /// Horner-free monomial evaluation with cached powers.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        const CAP: usize = 24;
        let (mi, mj) = self.max_exponents();
        if mi as usize >= CAP || mj as usize >= CAP {
            return self
                .terms
                .iter()
                .map(|(&(i, j), c)| c * x.powi(i as i32) * y.powi(j as i32))
                .sum();
        }
        let mut xp = [1.0f64; CAP];
        let mut yp = [1.0f64; CAP];
        for k in 1..=mi as usize {
            xp[k] = xp[k - 1] * x;
        }
        for k in 1..=mj as usize {
            yp[k] = yp[k - 1] * y;
        }
        self.terms
            .iter()
            .map(|(&(i, j), c)| c * xp[i as usize] * yp[j as usize])
            .sum()
    }

    /// Sum of |c x^i y^j|, a scale for rounding error in [`Self::eval`].
    pub fn eval_abs(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(i, j), c)| (c * x.powi(i as i32) * y.powi(j as i32)).abs())
            .sum()
    }

    /// Drops coefficients with magnitude `<= tol`.
    pub fn prune(&self, tol: f64) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|(_, c)| c.abs() > tol)
                .map(|(&k, &c)| (k, c)),
        )
    }

    /// Max coefficientwise difference.
    pub fn max_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs_coeff()
    }
}

impl<C: Coeff> Coeff for BivarPoly<C> {
    fn zero() -> Self {
        BivarPoly::zero()
    }
    fn one() -> Self {
        BivarPoly::constant(C::one())
    }
    fn from_int(n: i64) -> Self {
        BivarPoly::constant(C::from_int(n))
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&(i, j), c) in &other.terms {
            out.add_term(i, j, c.clone());
        }
        out
    }
    fn minus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&(i, j), c) in &other.terms {
            out.add_term(i, j, c.negated());
        }
        out
    }
    fn times(&self, other: &Self) -> Self {
        let mut out = BivarPoly::zero();
        for (&(i, j), a) in &self.terms {
            for (&(k, l), b) in &other.terms {
                out.add_term(i + k, j + l, a.times(b));
            }
        }
        out
    }
    fn negated(&self) -> Self {
        self.map_coeffs(|c| c.negated())
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl<C: Coeff> $tr<&BivarPoly<C>> for &BivarPoly<C> {
            type Output = BivarPoly<C>;
            fn $m(self, rhs: &BivarPoly<C>) -> BivarPoly<C> {
                Coeff::$f(self, rhs)
            }
        }
        impl<C: Coeff> $tr for BivarPoly<C> {
            type Output = BivarPoly<C>;
            fn $m(self, rhs: BivarPoly<C>) -> BivarPoly<C> {
                Coeff::$f(&self, &rhs)
            }
        }
    };
}

forward_binop!(Add, add, plus);
forward_binop!(Sub, sub, minus);
forward_binop!(Mul, mul, times);

impl<C: Coeff> Neg for &BivarPoly<C> {
    type Output = BivarPoly<C>;
    fn neg(self) -> BivarPoly<C> {
        self.negated()
    }
}

impl<C: Coeff> Neg for BivarPoly<C> {
    type Output = BivarPoly<C>;
    fn neg(self) -> BivarPoly<C> {
        self.negated()
    }
}

fn write_bivar<C: Coeff>(
    f: &mut fmt::Formatter<'_>,
    p: &BivarPoly<C>,
    show: impl Fn(&C) -> String,
) -> fmt::Result {
    if p.is_zero() {
        return write!(f, "0");
    }
    let mut first = true;
    for (&(i, j), c) in p.terms.iter().rev() {
        if !first {
            write!(f, " + ")?;
        }
        first = false;
        let mut s = show(c);
        if i + j > 0 {
            s = format!("({s})");
        }
        match i {
            0 => {}
            1 => s.push_str("*x"),
            _ => s.push_str(&format!("*x^{i}")),
        }
        match j {
            0 => {}
            1 => s.push_str("*y"),
            _ => s.push_str(&format!("*y^{j}")),
        }
        write!(f, "{s}")?;
    }
    Ok(())
}

impl fmt::Display for BivarPoly<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_bivar(f, self, |c| c.to_string())
    }
}

impl fmt::Display for BivarPoly<f64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_bivar(f, self, |c| format!("{c}"))
    }
}
