//! Exact sparse polynomial arithmetic in `(x, y)` with optional
//! deformation-parameter coefficients.
//!
//! Rotation convention used throughout the crate: `p.rotate(t)` is
//! `p(x cos t + y sin t, -x sin t + y cos t)`.

mod bivar;
mod coeff;
mod multi;
mod parse;

pub use bivar::{BivarPoly, Var};
pub use coeff::{int, pow, ratio, Coeff, Rational, Scalar};
pub use multi::MultiPoly;
pub use parse::{parse_multi, parse_rational};

use crate::error::{Error, Result};

/// A polynomial in `(x, y)` whose coefficients are polynomials in `n`
/// named deformation parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamPoly<C = Rational> {
    poly: BivarPoly<MultiPoly<C>>,
    names: Vec<String>,
}

impl<C: Coeff> ParamPoly<C> {
    pub fn new(poly: BivarPoly<MultiPoly<C>>, names: Vec<String>) -> Result<Self> {
        for (_, c) in poly.terms() {
            if c.nvars() > names.len() {
                return Err(Error::Input(format!(
                    "coefficient uses {} parameters but only {} are declared",
                    c.nvars(),
                    names.len()
                )));
            }
        }
        Ok(ParamPoly { poly, names })
    }

    pub fn zero(names: Vec<String>) -> Self {
        ParamPoly {
            poly: BivarPoly::zero(),
            names,
        }
    }

    /// Lifts a parameter-free polynomial.
    pub fn from_bivar(p: &BivarPoly<C>, names: Vec<String>) -> Self {
        ParamPoly {
            poly: p.map_coeffs(|c| MultiPoly::constant(c.clone())),
            names,
        }
    }

    pub fn poly(&self) -> &BivarPoly<MultiPoly<C>> {
        &self.poly
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Number of parameters.
    pub fn n(&self) -> usize {
        self.names.len()
    }

    /// Evaluates every coefficient at `tau`.
    pub fn substitute_params(&self, tau: &[C]) -> Result<BivarPoly<C>> {
        self.check_len(tau.len())?;
        Ok(self.poly.map_coeffs(|c| c.eval(tau)))
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.n() {
            return Err(Error::Input(format!(
                "parameter vector has length {got}, family has {} parameters",
                self.n()
            )));
        }
        Ok(())
    }
}

impl<C: Scalar> ParamPoly<C> {
    /// Floating evaluation of every coefficient at `tau`.
    pub fn substitute_f64(&self, tau: &[f64]) -> Result<BivarPoly<f64>> {
        self.check_len(tau.len())?;
        Ok(self.poly.map_coeffs(|c| c.eval_f64(tau)))
    }

    pub fn to_f64(&self) -> ParamPoly<f64> {
        ParamPoly {
            poly: self.poly.map_coeffs(|c| c.to_f64()),
            names: self.names.clone(),
        }
    }
}

impl ParamPoly<Rational> {
    /// Parses an expression in `x`, `y` and the named parameters, e.g.
    /// `x^2 + y^2 + x^3 - y^3 + lambda*(x^2 - y^2) + 2*mu*x*y`.
    pub fn parse(src: &str, names: &[&str]) -> Result<Self> {
        if names.iter().any(|n| *n == "x" || *n == "y") {
            return Err(Error::Input("parameters may not be named x or y".into()));
        }
        let mut vars = vec!["x", "y"];
        vars.extend_from_slice(names);
        let m = parse_multi(src, &vars)?;
        let mut poly = BivarPoly::zero();
        for (e, c) in m.terms() {
            let i = e.first().copied().unwrap_or(0);
            let j = e.get(1).copied().unwrap_or(0);
            let rest: Vec<u32> = e.iter().skip(2).copied().collect();
            poly.add_term(i, j, MultiPoly::monomial(rest, c.clone()));
        }
        Ok(ParamPoly {
            poly,
            names: names.iter().map(|s| s.to_string()).collect(),
        })
    }
}

impl BivarPoly<Rational> {
    /// Parses an expression in `x` and `y` only.
    pub fn parse(src: &str) -> Result<Self> {
        ParamPoly::parse(src, &[])?.substitute_params(&[])
    }
}

impl std::fmt::Display for ParamPoly<Rational> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        for (k, (&(i, j), c)) in self.poly.terms().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({})", c.display_with(&self.names))?;
            match i {
                0 => {}
                1 => write!(f, "*x")?,
                _ => write!(f, "*x^{i}")?,
            }
            match j {
                0 => {}
                1 => write!(f, "*y")?,
                _ => write!(f, "*y^{j}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> BivarPoly<Rational> {
        BivarPoly::parse(s).unwrap()
    }

    #[test]
    fn arithmetic_canonical_form() {
        assert_eq!(p("x^2+y^2") + p("-x^2"), p("y^2"));
        assert_eq!(p("x") * p("y"), p("x*y"));
        let z = p("x^2+y^2").scale(&int(0));
        assert!(z.is_zero());
        assert_eq!(z.terms().count(), 0);
        assert_eq!(z.total_degree(), None);
    }

    #[test]
    fn differentiation() {
        assert_eq!(p("x^2+y^2").diff(Var::X), p("2*x"));
        assert_eq!(p("x^3-y^3").diff(Var::Y), p("-3*y^2"));
        assert!(p("7").diff(Var::X).is_zero());
    }

    #[test]
    fn homogeneous_parts() {
        let q = p("x^2+y^2+x^3-y^3");
        assert_eq!(q.homogeneous_part(3), p("x^3-y^3"));
        assert!(q.homogeneous_part(1).is_zero());
        assert_eq!(q.total_degree(), Some(3));
    }

    #[test]
    fn rotation_convention() {
        let r = p("x").rotate(std::f64::consts::FRAC_PI_2);
        assert!(r.max_diff(&BivarPoly::y()) < 1e-12, "{r}");
        let circ = p("x^2+y^2");
        for t in [0.3, 1.7, -2.2] {
            assert!(circ.rotate(t).max_diff(&circ.to_f64()) < 1e-12);
        }
    }

    #[test]
    fn harmonic_cubic_has_threefold_symmetry() {
        let h = p("x*(x^2-3*y^2)");
        let r = h.rotate(2.0 * std::f64::consts::PI / 3.0);
        assert!(r.max_diff(&h.to_f64()) < 1e-12, "{r}");
        // quarter turn: (x, y) -> (y, -x)
        let q = h.rotate_exact(&int(0), &int(1));
        assert_eq!(q, p("y^3-3*x^2*y"));
    }

    #[test]
    fn substitute_params_example_surface() {
        let f = ParamPoly::parse(
            "x^2+y^2+x^3-y^3+lambda*(x^2-y^2)+2*mu*x*y",
            &["lambda", "mu"],
        )
        .unwrap();
        assert_eq!(f.substitute_params(&[int(0), int(0)]).unwrap(), p("x^2+y^2+x^3-y^3"));
        assert_eq!(
            f.substitute_params(&[ratio(1, 10), int(0)]).unwrap(),
            p("x^2+y^2+x^3-y^3+(1/10)*(x^2-y^2)")
        );
        assert!(f.substitute_params(&[int(0)]).is_err());
        let zero = ParamPoly::<Rational>::zero(vec!["a".into()]);
        assert!(zero.substitute_params(&[int(5)]).unwrap().is_zero());
    }

    fn arb_poly() -> impl Strategy<Value = BivarPoly<Rational>> {
        prop::collection::vec((0u32..4, 0u32..4, -5i64..=5, 1i64..4), 0..6).prop_map(|ts| {
            BivarPoly::from_terms(ts.into_iter().map(|(i, j, n, d)| ((i, j), ratio(n, d))))
        })
    }

    proptest! {
        #[test]
        fn leibniz_rule(a in arb_poly(), b in arb_poly()) {
            for v in [Var::X, Var::Y] {
                let lhs = (&a * &b).diff(v);
                let rhs = &(&a.diff(v) * &b) + &(&a * &b.diff(v));
                prop_assert_eq!(lhs, rhs);
            }
        }

        #[test]
        fn homogeneous_parts_sum_back(a in arb_poly()) {
            let sum = a.homogeneous_parts().values().fold(BivarPoly::zero(), |acc, h| &acc + h);
            prop_assert_eq!(sum, a);
        }

        #[test]
        fn rotation_round_trip(a in arb_poly(), t in -3.2f64..3.2) {
            let back = a.rotate(t).rotate(-t);
            prop_assert!(back.max_diff(&a.to_f64()) < 1e-12);
        }

        #[test]
        fn exact_rational_rotation_round_trip(a in arb_poly()) {
            // (3/5, 4/5) is a rational point on the unit circle.
            let (c, s) = (ratio(3, 5), ratio(4, 5));
            let back = a.rotate_exact(&c, &s).rotate_exact(&c, &s.negated());
            prop_assert_eq!(back, a);
        }

        #[test]
        fn evaluation_commutes_with_product(
            a in arb_poly(), b in arb_poly(),
            pts in prop::collection::vec((-1.5f64..1.5, -1.5f64..1.5), 100),
        ) {
            let (af, bf) = (a.to_f64(), b.to_f64());
            let prod = (&a * &b).to_f64();
            for (x, y) in pts {
                let lhs = prod.eval(x, y);
                let rhs = af.eval(x, y) * bf.eval(x, y);
                let scale = af.eval_abs(x, y) * bf.eval_abs(x, y);
                prop_assert!((lhs - rhs).abs() <= 1e-10 * scale.max(1e-300));
            }
        }
    }
}
