//! Truncated power series in one variable, used to expand a level curve in
//! arc length and read off exact derivatives of its curvature.

use crate::error::{Error, Result};
use crate::poly::{BivarPoly, Coeff};
use crate::vertexfn::SurfacePartials;

/// Power series `sum c[i] t^i`, exact up to `t^(len - 1)`.
///
/// A series of length one is an exact constant; every other length marks
/// the truncation order, and products truncate to the longer operand.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Series {
    c: Vec<f64>,
}

impl Series {
    pub fn new(c: Vec<f64>) -> Self {
        Series { c }
    }

    pub fn constant(v: f64) -> Self {
        Series { c: vec![v] }
    }

    /// `a + b t` with room for `len` coefficients.
    pub fn linear(a: f64, b: f64, len: usize) -> Self {
        let mut c = vec![0.0; len.max(2)];
        c[0] = a;
        c[1] = b;
        Series { c }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn coeff(&self, i: usize) -> f64 {
        self.c.get(i).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    fn padded(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.coeff(i)).collect()
    }

    /// Extends or truncates to `n` coefficients.
    pub fn resized(&self, n: usize) -> Self {
        Series { c: self.padded(n) }
    }

    /// Reciprocal, requiring a nonzero constant term.
    pub fn recip(&self) -> Self {
        let n = self.len();
        let a0 = self.coeff(0);
        let mut r = vec![0.0; n];
        r[0] = 1.0 / a0;
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| self.coeff(j) * r[k - j]).sum();
            r[k] = -s / a0;
        }
        Series { c: r }
    }

    /// Square root, requiring a positive constant term.
    pub fn sqrt(&self) -> Self {
        let n = self.len();
        let mut r = vec![0.0; n];
        r[0] = self.coeff(0).sqrt();
        for k in 1..n {
            let s: f64 = (1..k).map(|j| r[j] * r[k - j]).sum();
            r[k] = (self.coeff(k) - s) / (2.0 * r[0]);
        }
        Series { c: r }
    }

    /// Antiderivative with zero constant term, one order longer.
    pub fn integral(&self) -> Self {
        let mut c = vec![0.0; self.len() + 1];
        for (i, &v) in self.c.iter().enumerate() {
            c[i + 1] = v / (i + 1) as f64;
        }
        Series { c }
    }

    /// `k`-th derivative at `t = 0`.
    pub fn derivative_at_zero(&self, k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.coeff(k) * fact
    }
}

impl Coeff for Series {
    fn zero() -> Self {
        Series::constant(0.0)
    }
    fn one() -> Self {
        Series::constant(1.0)
    }
    fn from_int(n: i64) -> Self {
        Series::constant(n as f64)
    }
    fn is_zero(&self) -> bool {
        self.c.iter().all(|&v| v == 0.0)
    }
    fn plus(&self, o: &Self) -> Self {
        let n = self.len().max(o.len());
        Series {
            c: (0..n).map(|i| self.coeff(i) + o.coeff(i)).collect(),
        }
    }
    fn minus(&self, o: &Self) -> Self {
        let n = self.len().max(o.len());
        Series {
            c: (0..n).map(|i| self.coeff(i) - o.coeff(i)).collect(),
        }
    }
    fn times(&self, o: &Self) -> Self {
        let n = self.len().max(o.len());
        let mut c = vec![0.0; n];
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in o.c.iter().enumerate().take(n - i) {
                c[i + j] += a * b;
            }
        }
        Series { c }
    }
    fn negated(&self) -> Self {
        Series {
            c: self.c.iter().map(|v| -v).collect(),
        }
    }
}

fn eval_series(p: &BivarPoly<f64>, x: &Series, y: &Series) -> Series {
    p.eval_in(x, y, |&c| Series::constant(c))
}

/// Arc-length expansion of the level curve through `p0`, oriented along
/// `(-f_y, f_x) / |grad f|`, exact through `t^order`.
pub fn level_curve_jet(s: &SurfacePartials, p0: (f64, f64), order: usize) -> Result<(Series, Series)> {
    let (gx, gy) = s.grad(p0.0, p0.1);
    if gx.hypot(gy) == 0.0 {
        return Err(Error::NearCritical {
            x: p0.0,
            y: p0.1,
            grad_norm: 0.0,
        });
    }
    let len = order + 1;
    let mut x = Series::constant(p0.0).resized(len);
    let mut y = Series::constant(p0.1).resized(len);
    // each Picard sweep fixes one more coefficient
    for _ in 0..order {
        let fx = eval_series(&s.fx, &x, &y).resized(len);
        let fy = eval_series(&s.fy, &x, &y).resized(len);
        let inv = fx.times(&fx).plus(&fy.times(&fy)).sqrt().recip();
        let tx = fy.negated().times(&inv);
        let ty = fx.times(&inv);
        x = Series::constant(p0.0).plus(&tx.integral()).resized(len);
        y = Series::constant(p0.1).plus(&ty.integral()).resized(len);
    }
    Ok((x, y))
}

/// `[kappa, kappa', ..., kappa^(order)]` at `p0`, derivatives with respect
/// to arc length in the direction `(-f_y, f_x) / |grad f|`.
pub fn curvature_derivatives(s: &SurfacePartials, p0: (f64, f64), order: usize) -> Result<Vec<f64>> {
    let (x, y) = level_curve_jet(s, p0, order)?;
    let len = order + 1;
    let e = |p: &BivarPoly<f64>| eval_series(p, &x, &y).resized(len);
    let (fx, fy) = (e(&s.fx), e(&s.fy));
    let (fxx, fxy, fyy) = (e(&s.fxx), e(&s.fxy), e(&s.fyy));
    let n = fy
        .times(&fy)
        .times(&fxx)
        .minus(&Series::constant(2.0).times(&fx).times(&fy).times(&fxy))
        .plus(&fx.times(&fx).times(&fyy));
    let g = fx.times(&fx).plus(&fy.times(&fy)).sqrt();
    let inv = g.recip();
    let kappa = n.times(&inv).times(&inv).times(&inv);
    Ok((0..=order).map(|k| kappa.derivative_at_zero(k)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{BivarPoly, Rational};
    use crate::vertexfn::{curvature, GRAD_FLOOR};

    fn partials(s: &str) -> SurfacePartials {
        SurfacePartials::new(&BivarPoly::<Rational>::parse(s).unwrap().to_f64())
    }

    #[test]
    fn reciprocal_and_sqrt() {
        let a = Series::new(vec![4.0, 1.0, -2.0, 0.5]);
        let one = a.times(&a.recip());
        assert!((one.coeff(0) - 1.0).abs() < 1e-15);
        assert!(one.coeffs()[1..].iter().all(|v| v.abs() < 1e-15));
        let r = a.sqrt();
        let back = r.times(&r);
        for i in 0..4 {
            assert!((back.coeff(i) - a.coeff(i)).abs() < 1e-14);
        }
    }

    #[test]
    fn circle_jet_is_the_circle() {
        let s = partials("x^2+y^2");
        let (x, y) = level_curve_jet(&s, (0.5, 0.0), 6).unwrap();
        // counterclockwise unit-speed circle of radius 1/2
        let fact = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0];
        for k in 0..=6 {
            let cx = [0.5, 0.0, -0.5, 0.0, 0.5, 0.0, -0.5][k] * 2f64.powi(k as i32) / fact[k];
            let cy = [0.0, 0.5, 0.0, -0.5, 0.0, 0.5, 0.0][k] * 2f64.powi(k as i32) / fact[k];
            assert!((x.coeff(k) - cx).abs() < 1e-12, "x[{k}]");
            assert!((y.coeff(k) - cy).abs() < 1e-12, "y[{k}]");
        }
        let d = curvature_derivatives(&s, (0.3, 0.4), 4).unwrap();
        assert!((d[0] - 2.0).abs() < 1e-12);
        assert!(d[1..].iter().all(|v| v.abs() < 1e-9), "{d:?}");
    }

    #[test]
    fn first_derivative_matches_closed_form() {
        let s = partials("x^2+y^2+x^3-y^3");
        for p in [(0.1, 0.05), (-0.2, 0.1), (0.03, -0.17)] {
            let d = curvature_derivatives(&s, p, 3).unwrap();
            let c = curvature(&s, p, GRAD_FLOOR).unwrap();
            assert!((d[0] - c.kappa).abs() < 1e-12 * c.kappa.abs());
            assert!((d[1] - c.dkappa_ds).abs() < 1e-9 * c.dkappa_ds.abs().max(1.0));
        }
    }

    #[test]
    fn ellipse_higher_derivatives_match_parametrization() {
        // x = 2 cos t, y = sin t; kappa as a function of arc length
        let s = partials("x^2/4+y^2");
        let t0: f64 = 0.7;
        let d = curvature_derivatives(&s, (2.0 * t0.cos(), t0.sin()), 3).unwrap();
        let speed = |t: f64| (4.0 * t.sin().powi(2) + t.cos().powi(2)).sqrt();
        let kap = |t: f64| 2.0 / speed(t).powi(3);
        // d/ds = (1/speed) d/dt, applied by nested central differences
        let h = 1e-3;
        let ds = |g: &dyn Fn(f64) -> f64, t: f64| (g(t + h) - g(t - h)) / (2.0 * h) / speed(t);
        let k1 = |t: f64| ds(&kap, t);
        let k2 = |t: f64| ds(&k1, t);
        assert!((d[1] - k1(t0)).abs() < 1e-5 * k1(t0).abs());
        assert!((d[2] - k2(t0)).abs() < 1e-4 * k2(t0).abs());
    }
}
