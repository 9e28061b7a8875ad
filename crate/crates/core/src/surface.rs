//! Deformation families `f = f0 + R` of a surface graph `z = f(x, y; tau)`
//! and the diagnostics that decide whether the origin is a generic umbilic.

use crate::error::{Error, Result};
use crate::poly::{int, BivarPoly, Coeff, MultiPoly, ParamPoly, Rational, Scalar};

/// Absolute tolerance for floating coefficient comparisons.
pub const COEFF_TOL: f64 = 1e-12;

/// Singular-value threshold for floating rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// A family of graphs with the origin fixed and tangent plane `z = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceFamily<C = Rational> {
    f: ParamPoly<C>,
    origin_normalized: bool,
}

/// Result of [`SurfaceFamily::umbilic_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UmbilicCheck {
    pub is_umbilic: bool,
    /// Coefficient of `x^2` at `tau = 0`.
    pub factor: f64,
}

/// Coordinates of the quadratic part projected onto the plane spanned by
/// `x^2 - y^2` and `2xy`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeformationProjection {
    pub lambda_component: f64,
    pub mu_component: f64,
}

/// Rank of the projection map at the parameter origin.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformationRank {
    pub rank: usize,
    /// Row-major `2 x n` Jacobian.
    pub projection_jacobian: [Vec<f64>; 2],
}

/// A family rotated so that its cubic at `tau = 0` reads
/// `a x^3 + b x^2 y + a x y^2 + c y^3`.
#[derive(Clone, Debug)]
pub struct NormalForm {
    pub theta: f64,
    pub rotated: SurfaceFamily<f64>,
}

fn coeff_eq<C: Scalar>(a: &C, b: &C) -> bool {
    if C::EXACT {
        a == b
    } else {
        (a.to_f64() - b.to_f64()).abs() <= COEFF_TOL
    }
}

impl<C: Scalar> SurfaceFamily<C> {
    /// Validates that the constant and linear parts vanish identically in
    /// the parameters.
    pub fn new(f: ParamPoly<C>) -> Result<Self> {
        for (&(i, j), c) in f.poly().terms() {
            if i + j <= 1 {
                let tol = if C::EXACT { 0.0 } else { COEFF_TOL };
                if c.max_abs_coeff() > tol {
                    return Err(Error::Validation(format!(
                        "term x^{i} y^{j} must vanish for all parameters (origin fixed, tangent plane z = 0)"
                    )));
                }
            }
        }
        Ok(SurfaceFamily {
            f,
            origin_normalized: true,
        })
    }

    /// A parameter-free surface.
    pub fn fixed(f: &BivarPoly<C>) -> Result<Self> {
        Self::new(ParamPoly::from_bivar(f, Vec::new()))
    }

    pub fn f(&self) -> &ParamPoly<C> {
        &self.f
    }

    pub fn n(&self) -> usize {
        self.f.n()
    }

    pub fn origin_normalized(&self) -> bool {
        self.origin_normalized
    }

    /// The surface at parameter value `tau` (floating).
    pub fn at(&self, tau: &[f64]) -> Result<BivarPoly<f64>> {
        self.f.substitute_f64(tau)
    }

    /// The unperturbed surface `f0` (exact in `C`).
    pub fn unperturbed(&self) -> BivarPoly<C> {
        self.f.poly().map_coeffs(|c| c.constant_term())
    }

    /// Checks that the quadratic part at `tau = 0` is a multiple of `x^2 + y^2`.
    pub fn umbilic_check(&self) -> Result<UmbilicCheck> {
        let f0 = self.unperturbed();
        let (cxx, cxy, cyy) = (f0.coeff(2, 0), f0.coeff(1, 1), f0.coeff(0, 2));
        let zero = C::zero();
        if coeff_eq(&cxx, &zero) && coeff_eq(&cxy, &zero) && coeff_eq(&cyy, &zero) {
            return Err(Error::Degenerate("quadratic part vanishes at tau = 0".into()));
        }
        Ok(UmbilicCheck {
            is_umbilic: coeff_eq(&cxx, &cyy) && coeff_eq(&cxy, &zero),
            factor: cxx.to_f64(),
        })
    }

    /// Projection of the quadratic part at `tau` onto `<x^2 - y^2, 2xy>`.
    pub fn projection(&self, tau: &[f64]) -> Result<DeformationProjection> {
        let f = self.at(tau)?;
        Ok(DeformationProjection {
            lambda_component: (f.coeff(2, 0) - f.coeff(0, 2)) / 2.0,
            mu_component: f.coeff(1, 1) / 2.0,
        })
    }

    /// Jacobian of the projection at `tau = 0`, exact in `C`.
    pub fn projection_jacobian(&self) -> [Vec<C>; 2] {
        let p = self.f.poly();
        let half = C::one().divide(&C::from_int(2));
        let diag = p.coeff(2, 0).minus(&p.coeff(0, 2));
        let off = p.coeff(1, 1);
        let n = self.n();
        [
            (0..n).map(|j| diag.linear_coeff(j).times(&half)).collect(),
            (0..n).map(|j| off.linear_coeff(j).times(&half)).collect(),
        ]
    }

    /// Composes the family with a reparametrization `tau_i = images[i](s)`.
    pub fn reparametrize(&self, images: &[MultiPoly<C>], names: Vec<String>) -> Result<Self> {
        if images.len() != self.n() {
            return Err(Error::Input(format!(
                "need {} parameter images, got {}",
                self.n(),
                images.len()
            )));
        }
        let poly = self.f.poly().map_coeffs(|c| c.compose(images));
        Self::new(ParamPoly::new(poly, names)?)
    }

    /// Rotates the `(x, y)` plane so the cubic at `tau = 0` satisfies
    /// `coeff(x^3) = coeff(x y^2)`.
    ///
    /// Writing the cubic as a harmonic part plus `(x^2 + y^2)` times a
    /// linear form, the constraint only sees the harmonic part, which turns
    /// at three times the rotation speed, so a root exists whenever the
    /// cubic is generic.
    pub fn normal_form_rotation(&self) -> Result<NormalForm> {
        let check = self.umbilic_check()?;
        if !check.is_umbilic {
            return Err(Error::Precondition("origin is not an umbilic".into()));
        }
        let cubic = self.unperturbed().homogeneous_part(3);
        if !genericity_check(&cubic)? {
            return Err(Error::Genericity("quadratic part divides the cubic part".into()));
        }
        let cubic = cubic.to_f64();
        let scale = cubic.max_abs_coeff();
        let residual = |t: f64| {
            let r = cubic.rotate(t);
            (r.coeff(3, 0) - r.coeff(1, 2)) / scale
        };
        let theta = if residual(0.0).abs() < 1e-14 {
            0.0
        } else {
            smallest_root(residual, -std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2)?
        };
        let (c, s) = (theta.cos(), theta.sin());
        let m = [
            [MultiPoly::constant(c), MultiPoly::constant(s)],
            [MultiPoly::constant(-s), MultiPoly::constant(c)],
        ];
        let f64fam = self.f.to_f64();
        let rotated = f64fam.poly().linear_substitute(&m);
        let rotated = ParamPoly::new(rotated, f64fam.names().to_vec())?;
        Ok(NormalForm {
            theta,
            rotated: SurfaceFamily::new(rotated)?,
        })
    }
}

/// Root of `g` on `[lo, hi]` closest to zero, by sampling and bisection.
fn smallest_root(g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    const SAMPLES: usize = 720;
    const MAX_BISECT: usize = 200;
    let xs: Vec<f64> = (0..=SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / SAMPLES as f64)
        .collect();
    let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let mut best: Option<f64> = None;
    for k in 0..SAMPLES {
        let (mut a, mut b, mut ga) = (xs[k], xs[k + 1], vals[k]);
        if ga == 0.0 {
            best = pick(best, a);
            continue;
        }
        if ga.signum() == vals[k + 1].signum() {
            continue;
        }
        let mut converged = false;
        for _ in 0..MAX_BISECT {
            let m = 0.5 * (a + b);
            let gm = g(m);
            if gm == 0.0 || (b - a) < 1e-15 {
                a = m;
                converged = true;
                break;
            }
            if gm.signum() == ga.signum() {
                a = m;
                ga = gm;
            } else {
                b = m;
            }
        }
        if !converged {
            return Err(Error::Numeric("normal-form rotation: bisection budget exhausted".into()));
        }
        best = pick(best, a);
    }
    best.ok_or_else(|| Error::Numeric("normal-form rotation: no sign change found".into()))
}

fn pick(best: Option<f64>, x: f64) -> Option<f64> {
    match best {
        Some(b) if b.abs() <= x.abs() => Some(b),
        _ => Some(x),
    }
}

impl SurfaceFamily<Rational> {
    /// Exact rank via row reduction.
    pub fn deformation_rank(&self) -> DeformationRank {
        let jac = self.projection_jacobian();
        let mut rows: Vec<Vec<Rational>> = jac.to_vec();
        let n = self.n();
        let mut rank = 0;
        for col in 0..n {
            let Some(piv) = (rank..rows.len()).find(|&r| !Coeff::is_zero(&rows[r][col])) else {
                continue;
            };
            rows.swap(rank, piv);
            for r in 0..rows.len() {
                if r != rank && !Coeff::is_zero(&rows[r][col]) {
                    let factor = &rows[r][col] / &rows[rank][col];
                    for c in col..n {
                        let sub = &factor * &rows[rank][c];
                        rows[r][c] = &rows[r][c] - &sub;
                    }
                }
            }
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        DeformationRank {
            rank,
            projection_jacobian: jac.map(|r| r.iter().map(|c| c.to_f64()).collect()),
        }
    }

    /// The canonical two-parameter family
    /// `x^2 + y^2 + a x^3 + b x^2 y + a x y^2 + c y^3 + lambda (x^2 - y^2) + 2 mu x y`.
    pub fn canonical(a: Rational, b: Rational, c: Rational) -> Result<Self> {
        if b == c {
            return Err(Error::Genericity(format!(
                "b = c = {b}: x^2 + y^2 divides the cubic part"
            )));
        }
        let lam = MultiPoly::<Rational>::var(0);
        let mu = MultiPoly::<Rational>::var(1);
        let k = |n: i64| MultiPoly::constant(int(n));
        let mut p = BivarPoly::zero();
        p.add_term(2, 0, k(1).plus(&lam));
        p.add_term(0, 2, k(1).minus(&lam));
        p.add_term(1, 1, mu.times(&k(2)));
        p.add_term(3, 0, MultiPoly::constant(a.clone()));
        p.add_term(2, 1, MultiPoly::constant(b));
        p.add_term(1, 2, MultiPoly::constant(a));
        p.add_term(0, 3, MultiPoly::constant(c));
        Self::new(ParamPoly::new(p, vec!["lambda".into(), "mu".into()])?)
    }
}

impl SurfaceFamily<f64> {
    /// Rank from singular values of the Jacobian, threshold [`RANK_TOL`].
    pub fn deformation_rank(&self) -> DeformationRank {
        let [r0, r1] = self.projection_jacobian();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let (a, b, d) = (dot(&r0, &r0), dot(&r0, &r1), dot(&r1, &r1));
        let tr = a + d;
        let disc = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
        let s1 = (0.5 * (tr + disc)).max(0.0).sqrt();
        let s2 = (0.5 * (tr - disc)).max(0.0).sqrt();
        let rank = [s1, s2].iter().filter(|&&s| s > RANK_TOL).count();
        DeformationRank {
            rank,
            projection_jacobian: [r0, r1],
        }
    }
}

/// Whether `x^2 + y^2` fails to divide the homogeneous cubic, decided by
/// long division of `cubic(x, 1)` by `x^2 + 1`.
pub fn genericity_check<C: Scalar>(cubic: &BivarPoly<C>) -> Result<bool> {
    if cubic.terms().any(|(&(i, j), _)| i + j != 3) {
        return Err(Error::Input("cubic part must be homogeneous of degree 3".into()));
    }
    // ascending coefficients of cubic(x, 1)
    let dividend: Vec<C> = (0..=3).map(|i| cubic.coeff(i, 3 - i)).collect();
    let divisor = [C::one(), C::zero(), C::one()];
    let rem = poly_rem(&dividend, &divisor);
    Ok(rem.iter().any(|c| !coeff_eq(c, &C::zero())))
}

/// Remainder of univariate long division, coefficients in ascending order.
/// The divisor's leading coefficient must be nonzero.
pub fn poly_rem<C: Scalar>(dividend: &[C], divisor: &[C]) -> Vec<C> {
    let mut r: Vec<C> = dividend.to_vec();
    let dl = divisor.len() - 1;
    let lead = &divisor[dl];
    while r.len() > dl {
        let top = r.pop().expect("nonempty");
        if Coeff::is_zero(&top) {
            continue;
        }
        let q = top.divide(lead);
        let shift = r.len() - dl;
        for (k, d) in divisor[..dl].iter().enumerate() {
            r[shift + k] = r[shift + k].minus(&q.times(d));
        }
    }
    r
}

impl SurfaceFamily<Rational> {
    pub fn to_f64(&self) -> SurfaceFamily<f64> {
        SurfaceFamily {
            f: self.f.to_f64(),
            origin_normalized: self.origin_normalized,
        }
    }
}
