//! The vertex-set function `V_f`, whose zero set meets each regular level
//! curve `f = k` exactly in the vertices of that curve, together with a
//! curvature oracle computed independently from the implicit-curve formula.

use crate::error::{Error, Result};
use crate::poly::{BivarPoly, Coeff, MultiPoly, ParamPoly, Rational, Scalar, Var};
use crate::surface::SurfaceFamily;

/// `V_f = CALIBRATION_FACTOR * |grad f|^(2 * GRADIENT_POWER) * dkappa/ds`.
pub const CALIBRATION_FACTOR: f64 = 1.0;
pub const GRADIENT_POWER: u32 = 3;

/// Default lower bound on `|grad f|` for curvature evaluation.
pub const GRAD_FLOOR: f64 = 1e-9;

/// Expands `V_f` for a polynomial over any coefficient ring.
pub fn vertex_poly<R: Coeff>(f: &BivarPoly<R>) -> BivarPoly<R> {
    let fx = f.diff(Var::X);
    let fy = f.diff(Var::Y);
    let fxx = fx.diff(Var::X);
    let fxy = fx.diff(Var::Y);
    let fyy = fy.diff(Var::Y);
    let fxxx = fxx.diff(Var::X);
    let fxxy = fxx.diff(Var::Y);
    let fxyy = fxy.diff(Var::Y);
    let fyyy = fyy.diff(Var::Y);

    let k = |n: i64| BivarPoly::constant(R::from_int(n));
    let fx2 = &fx * &fx;
    let fy2 = &fy * &fy;
    let fx3 = &fx2 * &fx;
    let fy3 = &fy2 * &fy;
    let fx4 = &fx2 * &fx2;
    let fy4 = &fy2 * &fy2;

    let g1 = &(&fx2 + &fy2)
        * &(&(&(&(&fx3 * &fyyy) - &(&k(3) * &(&(&fx2 * &fy) * &fxyy)))
            + &(&k(3) * &(&(&fx * &fy2) * &fxxy)))
            - &(&fy3 * &fxxx));
    let g2 = &(&k(3) * &(&fx * &fy))
        * &(&(&(&fy2 * &(&fxx * &fxx)) - &(&fx2 * &(&fyy * &fyy)))
            + &(&(&fx2 - &fy2) * &(&(&fxx * &fyy) + &(&k(2) * &(&fxy * &fxy)))));
    let g3 = &(&k(3) * &fxy)
        * &(&(&(&fxx * &fy4) - &(&k(3) * &(&(&fx2 * &fy2) * &(&fxx - &fyy))))
            - &(&fyy * &fx4));
    &(&g1 + &g2) + &g3
}

/// `V_f` of a surface family, with coefficients polynomial in the parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexFunction<C = Rational> {
    vpoly: ParamPoly<C>,
    source: ParamPoly<C>,
}

impl<C: Scalar> VertexFunction<C> {
    pub fn build(family: &SurfaceFamily<C>) -> Self {
        let src = family.f().clone();
        let v = vertex_poly(src.poly());
        VertexFunction {
            vpoly: ParamPoly::new(v, src.names().to_vec()).expect("parameter count is preserved"),
            source: src,
        }
    }

    pub fn vpoly(&self) -> &ParamPoly<C> {
        &self.vpoly
    }

    pub fn source(&self) -> &ParamPoly<C> {
        &self.source
    }

    /// `V_f` at a concrete parameter value.
    pub fn at(&self, tau: &[f64]) -> Result<BivarPoly<f64>> {
        self.vpoly.substitute_f64(tau)
    }

    /// `V_f` at `tau = 0`, exact in `C`.
    pub fn at_origin(&self) -> BivarPoly<C> {
        self.vpoly.poly().map_coeffs(|c| c.constant_term())
    }

    /// Part of degree `d` in `(x, y)` that is linear in the parameters.
    pub fn tau_linear_part(&self, d: u32) -> BivarPoly<MultiPoly<C>> {
        self.vpoly
            .poly()
            .homogeneous_part(d)
            .map_coeffs(|c| c.homogeneous_part(1))
    }
}

/// A surface at fixed parameters with all partial derivatives through third
/// order, evaluated in floating point.
#[derive(Clone, Debug)]
pub struct SurfacePartials {
    pub f: BivarPoly<f64>,
    pub fx: BivarPoly<f64>,
    pub fy: BivarPoly<f64>,
    pub fxx: BivarPoly<f64>,
    pub fxy: BivarPoly<f64>,
    pub fyy: BivarPoly<f64>,
    pub fxxx: BivarPoly<f64>,
    pub fxxy: BivarPoly<f64>,
    pub fxyy: BivarPoly<f64>,
    pub fyyy: BivarPoly<f64>,
}

impl SurfacePartials {
    pub fn new(f: &BivarPoly<f64>) -> Self {
        let fx = f.diff(Var::X);
        let fy = f.diff(Var::Y);
        let fxx = fx.diff(Var::X);
        let fxy = fx.diff(Var::Y);
        let fyy = fy.diff(Var::Y);
        SurfacePartials {
            fxxx: fxx.diff(Var::X),
            fxxy: fxx.diff(Var::Y),
            fxyy: fxy.diff(Var::Y),
            fyyy: fyy.diff(Var::Y),
            f: f.clone(),
            fx,
            fy,
            fxx,
            fxy,
            fyy,
        }
    }

    pub fn grad(&self, x: f64, y: f64) -> (f64, f64) {
        (self.fx.eval(x, y), self.fy.eval(x, y))
    }
}

/// Curvature data of the level curve through a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureSample {
    pub point: (f64, f64),
    pub kappa: f64,
    pub dkappa_ds: f64,
    pub grad_norm: f64,
}

/// Signed curvature of the level curve through `p` and its derivative with
/// respect to arc length along `(-f_y, f_x) / |grad f|`.
pub fn curvature(s: &SurfacePartials, p: (f64, f64), grad_floor: f64) -> Result<CurvatureSample> {
    let (x, y) = p;
    let (fx, fy) = s.grad(x, y);
    let g = fx.hypot(fy);
    if !(g > grad_floor) {
        return Err(Error::NearCritical { x, y, grad_norm: g });
    }
    let (fxx, fxy, fyy) = (s.fxx.eval(x, y), s.fxy.eval(x, y), s.fyy.eval(x, y));
    let (fxxx, fxxy, fxyy, fyyy) = (
        s.fxxx.eval(x, y),
        s.fxxy.eval(x, y),
        s.fxyy.eval(x, y),
        s.fyyy.eval(x, y),
    );
    let n = fy * fy * fxx - 2.0 * fx * fy * fxy + fx * fx * fyy;
    let nx = 2.0 * fy * fxy * fxx + fy * fy * fxxx
        - 2.0 * (fxx * fy + fx * fxy) * fxy
        - 2.0 * fx * fy * fxxy
        + 2.0 * fx * fxx * fyy
        + fx * fx * fxyy;
    let ny = 2.0 * fy * fyy * fxx + fy * fy * fxxy
        - 2.0 * (fxy * fy + fx * fyy) * fxy
        - 2.0 * fx * fy * fxyy
        + 2.0 * fx * fxy * fyy
        + fx * fx * fyyy;
    let g2 = g * g;
    let g3 = g2 * g;
    // derivatives of g^2 / 2
    let hx = fx * fxx + fy * fxy;
    let hy = fx * fxy + fy * fyy;
    let kappa = n / g3;
    let kx = nx / g3 - 3.0 * n * hx / (g3 * g2);
    let ky = ny / g3 - 3.0 * n * hy / (g3 * g2);
    Ok(CurvatureSample {
        point: p,
        kappa,
        dkappa_ds: (-fy * kx + fx * ky) / g,
        grad_norm: g,
    })
}

/// `V_f(p) - c |grad f(p)|^(2m) dkappa/ds(p)`.
pub fn oracle_residual(
    v: &BivarPoly<f64>,
    s: &SurfacePartials,
    p: (f64, f64),
    grad_floor: f64,
) -> Result<f64> {
    let c = curvature(s, p, grad_floor)?;
    Ok(v.eval(p.0, p.1) - oracle_value(&c))
}

/// `c |grad f|^(2m) dkappa/ds` from a curvature sample.
pub fn oracle_value(c: &CurvatureSample) -> f64 {
    CALIBRATION_FACTOR * c.grad_norm.powi(2 * GRADIENT_POWER as i32) * c.dkappa_ds
}

/// Low-order jet structure of `V_f` for a family in normal form.
#[derive(Clone, Debug)]
pub struct JetStructure {
    /// Fitted constant of the parameter-linear degree-4 part.
    pub c4: f64,
    /// Fitted constant of the degree-5 part at `tau = 0`.
    pub c5: f64,
    pub defect4: f64,
    pub defect5: f64,
    /// Degree-6 part at `tau = 0`; reported, not constrained.
    pub degree6: BivarPoly<Rational>,
}

fn model4(family: &SurfaceFamily<Rational>) -> Result<BivarPoly<MultiPoly<Rational>>> {
    let [jl, jm] = family.projection_jacobian();
    let form = |row: &[Rational]| {
        MultiPoly::from_terms(row.iter().enumerate().map(|(i, c)| {
            let mut e = vec![0; i + 1];
            e[i] = 1;
            (e, c.clone())
        }))
    };
    let (lam, mu) = (form(&jl), form(&jm));
    if lam.is_empty() && mu.is_empty() {
        return Err(Error::Precondition("deformation has rank 0".into()));
    }
    let c = |n: i64| MultiPoly::constant(Rational::from_int(n));
    let mut inner = BivarPoly::zero();
    inner.add_term(1, 1, lam.times(&c(2)));
    inner.add_term(0, 2, mu.clone());
    inner.add_term(2, 0, mu.negated());
    let mut circle = BivarPoly::zero();
    circle.add_term(2, 0, c(1));
    circle.add_term(0, 2, c(1));
    Ok(&circle * &inner)
}

fn model5() -> BivarPoly<Rational> {
    BivarPoly::parse("x*(x^2+y^2)*(x^2-3*y^2)").expect("static expression")
}

/// Least-squares constant `c` minimizing `|v - c m|` over coefficient
/// vectors, and the largest remaining coefficient.
fn fit<R: Coeff + ScaleBy>(
    v: &BivarPoly<R>,
    m: &BivarPoly<R>,
    dot: impl Fn(&R, &R) -> Rational,
    norm: impl Fn(&R) -> f64,
) -> (Rational, f64) {
    let mut vm = Rational::from_int(0);
    let mut mm = Rational::from_int(0);
    for (&(i, j), mc) in m.terms() {
        vm = vm.plus(&dot(&v.coeff(i, j), mc));
        mm = mm.plus(&dot(mc, mc));
    }
    let c = vm.divide(&mm);
    let scaled = m.map_coeffs(|mc| mc.scale_by(&c));
    let resid = v - &scaled;
    let defect = resid.terms().map(|(_, r)| norm(r)).fold(0.0, f64::max);
    (c, defect)
}

trait ScaleBy {
    fn scale_by(&self, c: &Rational) -> Self;
}

impl ScaleBy for Rational {
    fn scale_by(&self, c: &Rational) -> Self {
        self * c
    }
}

impl ScaleBy for MultiPoly<Rational> {
    fn scale_by(&self, c: &Rational) -> Self {
        self.scale(c)
    }
}

fn multi_dot(a: &MultiPoly<Rational>, b: &MultiPoly<Rational>) -> Rational {
    let mut acc = Rational::from_int(0);
    for (e, ca) in a.terms() {
        if let Some((_, cb)) = b.terms().find(|(eb, _)| *eb == e) {
            acc = acc.plus(&ca.times(cb));
        }
    }
    acc
}

fn check_normal_form(family: &SurfaceFamily<Rational>) -> Result<()> {
    let cubic = family.unperturbed().homogeneous_part(3);
    let (a, b, a2, c) = (
        cubic.coeff(3, 0),
        cubic.coeff(2, 1),
        cubic.coeff(1, 2),
        cubic.coeff(0, 3),
    );
    if a != a2 {
        return Err(Error::Precondition(
            "cubic part is not in normal form a x^3 + b x^2 y + a x y^2 + c y^3".into(),
        ));
    }
    if b == c {
        return Err(Error::Genericity(format!("b = c = {b}")));
    }
    Ok(())
}

/// Fits the parameter-linear degree-4 part of `V_f` against
/// `(x^2 + y^2)(2 lambda x y + mu (y^2 - x^2))` and the degree-5 part at
/// `tau = 0` against `x (x^2 + y^2)(x^2 - 3 y^2)`, where `lambda` and `mu`
/// are the linear forms of the deformation projection.
pub fn jet_structure_check(family: &SurfaceFamily<Rational>) -> Result<JetStructure> {
    check_normal_form(family)?;
    let vf = VertexFunction::build(family);
    let v4 = vf.tau_linear_part(4);
    let (c4, defect4) = fit(&v4, &model4(family)?, multi_dot, |r| r.max_abs_coeff());
    let v0 = vf.at_origin();
    let v5 = v0.homogeneous_part(5);
    let (c5, defect5) = fit(&v5, &model5(), |a, b| a * b, |r| r.to_f64().abs());
    Ok(JetStructure {
        c4: c4.to_f64(),
        c5: c5.to_f64(),
        defect4,
        defect5,
        degree6: v0.homogeneous_part(6),
    })
}

/// Rotates `(x, y)` by `space` and the parameter pair `(lambda, mu)` by
/// `param`, both with the crate's rotation convention.
pub fn rotate_jet(
    p: &BivarPoly<MultiPoly<f64>>,
    space: f64,
    param: f64,
) -> BivarPoly<MultiPoly<f64>> {
    let (c, s) = (space.cos(), space.sin());
    let m = [
        [MultiPoly::constant(c), MultiPoly::constant(s)],
        [MultiPoly::constant(-s), MultiPoly::constant(c)],
    ];
    let (pc, ps) = (param.cos(), param.sin());
    let l = MultiPoly::<f64>::var(0);
    let u = MultiPoly::<f64>::var(1);
    let images = [
        l.scale(&pc).plus(&u.scale(&ps)),
        l.scale(&-ps).plus(&u.scale(&pc)),
    ];
    p.linear_substitute(&m).map_coeffs(|q| q.compose(&images))
}

fn max_coeff_diff(a: &BivarPoly<MultiPoly<f64>>, b: &BivarPoly<MultiPoly<f64>>) -> f64 {
    (a - b).terms().map(|(_, c)| c.max_abs_coeff()).fold(0.0, f64::max)
}

/// Largest normalized change of the degree-4 and degree-5 jets of `V_f`
/// under the simultaneous rotation by `2 pi / 3` in space and `-2 pi / 3`
/// in `(lambda, mu)`.
pub fn hexagonal_symmetry_defect(family: &SurfaceFamily<Rational>) -> Result<f64> {
    if family.n() != 2 {
        return Err(Error::Precondition("expected a two-parameter family".into()));
    }
    let jets = jet_structure_check(family)?;
    let vf = VertexFunction::build(family);
    let v4 = vf.tau_linear_part(4).map_coeffs(|c| c.to_f64());
    let v5 = vf
        .at_origin()
        .homogeneous_part(5)
        .map_coeffs(|c| MultiPoly::constant(c.to_f64()));
    let t = 2.0 * std::f64::consts::PI / 3.0;
    let d4 = max_coeff_diff(&rotate_jet(&v4, t, -t), &v4) / jets.c4.abs();
    let d5 = max_coeff_diff(&rotate_jet(&v5, t, -t), &v5) / jets.c5.abs();
    Ok(d4.max(d5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::int;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> BivarPoly<Rational> {
        BivarPoly::parse(s).unwrap()
    }

    #[test]
    fn circle_has_no_vertex_structure() {
        assert!(vertex_poly(&p("x^2+y^2")).is_zero());
        assert!(vertex_poly(&p("x^2+y^2+(x^2+y^2)^2")).is_zero());
        assert!(vertex_poly(&p("3*(x^2+y^2)-(x^2+y^2)^3")).is_zero());
    }

    #[test]
    fn example_surface_jets() {
        let v = vertex_poly(&p("x^2+y^2+x^3-y^3"));
        assert!(v.homogeneous_part(4).is_zero());
        assert_eq!(v.order(), Some(5));
        assert_eq!(v.total_degree(), Some(10));
        // symbolic oracle: V_5 = -192 (x + y)(x^2 + y^2)(x^2 - 4 x y + y^2)
        assert_eq!(
            v.homogeneous_part(5),
            p("-192*(x+y)*(x^2+y^2)*(x^2-4*x*y+y^2)")
        );
    }

    #[test]
    fn canonical_degree_four_part() {
        let fam = SurfaceFamily::canonical(int(1), int(0), int(2)).unwrap();
        let vf = VertexFunction::build(&fam);
        // symbolic oracle for the full degree-4 part
        let expected = ParamPoly::parse(
            "192*(1-lambda^2-mu^2)^2*(x^2+y^2+lambda*(x^2-y^2)+2*mu*x*y)*(2*lambda*x*y+mu*(y^2-x^2))",
            &["lambda", "mu"],
        )
        .unwrap();
        assert_eq!(vf.vpoly().poly().homogeneous_part(4), *expected.poly());
        assert!(vf.at_origin().homogeneous_part(4).is_zero());
        assert_eq!(
            vf.at_origin().homogeneous_part(5),
            p("384*x*(x^2+y^2)*(x^2-3*y^2)")
        );
    }

    #[test]
    fn circle_curvature() {
        let s = SurfacePartials::new(&p("x^2+y^2").to_f64());
        for (x, y) in [(0.3, 0.4), (-2.0, 0.0), (0.0, 0.1)] {
            let c = curvature(&s, (x, y), GRAD_FLOOR).unwrap();
            let k: f64 = x * x + y * y;
            assert!((c.kappa - 1.0 / k.sqrt()).abs() < 1e-12);
            assert!(c.dkappa_ds.abs() < 1e-12);
        }
        assert!(matches!(
            curvature(&s, (0.0, 0.0), GRAD_FLOOR),
            Err(Error::NearCritical { .. })
        ));
    }

    #[test]
    fn ellipse_curvature_at_axis_endpoint() {
        let s = SurfacePartials::new(&p("x^2/4+y^2").to_f64());
        let c = curvature(&s, (2.0, 0.0), GRAD_FLOOR).unwrap();
        assert!((c.kappa - 2.0).abs() < 1e-12);
        assert!(c.dkappa_ds.abs() < 1e-12);
        let c = curvature(&s, (0.0, 1.0), GRAD_FLOOR).unwrap();
        assert!((c.kappa - 0.25).abs() < 1e-12);
    }

    #[test]
    fn ellipse_curvature_derivative_matches_parametrization() {
        // x = 2 cos t, y = sin t: kappa = 2 / (4 sin^2 t + cos^2 t)^(3/2)
        let s = SurfacePartials::new(&p("x^2/4+y^2").to_f64());
        let kap = |t: f64| 2.0 / (4.0 * t.sin().powi(2) + t.cos().powi(2)).powf(1.5);
        for t in [0.3_f64, 1.1, 2.5, -0.7] {
            let speed = (4.0 * t.sin().powi(2) + t.cos().powi(2)).sqrt();
            let h = 1e-5;
            let dk_dt = (kap(t + h) - kap(t - h)) / (2.0 * h);
            let c = curvature(&s, (2.0 * t.cos(), t.sin()), GRAD_FLOOR).unwrap();
            // (-f_y, f_x) points along increasing t for this ellipse
            assert!((c.dkappa_ds - dk_dt / speed).abs() < 1e-7, "t = {t}");
        }
    }

    #[test]
    fn oracle_agrees_on_example_surface() {
        let f = p("x^2+y^2+x^3-y^3").to_f64();
        let v = vertex_poly(&f);
        let s = SurfacePartials::new(&f);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut max_res, mut max_mag) = (0.0_f64, 0.0_f64);
        let mut n = 0;
        while n < 1000 {
            let (x, y) = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
            if x * x + y * y > 0.25 {
                continue;
            }
            let Ok(c) = curvature(&s, (x, y), 1e-6) else { continue };
            let (vv, ov) = (v.eval(x, y), oracle_value(&c));
            max_res = max_res.max((vv - ov).abs());
            max_mag = max_mag.max(vv.abs()).max(ov.abs());
            if vv.abs() > 1e-10 && ov.abs() > 1e-10 {
                assert_eq!(vv.signum(), CALIBRATION_FACTOR.signum() * c.dkappa_ds.signum());
            }
            n += 1;
        }
        assert!(max_res / max_mag < 1e-8, "{}", max_res / max_mag);
    }

    #[test]
    fn jet_structure_of_canonical_families() {
        for (a, b, c) in [(1, 0, 2), (0, 0, 1)] {
            let fam = SurfaceFamily::canonical(int(a), int(b), int(c)).unwrap();
            let j = jet_structure_check(&fam).unwrap();
            assert!(j.defect4 < 1e-10 && j.defect5 < 1e-10);
            assert_eq!(j.c4, 192.0);
            assert_eq!(j.c5, 192.0 * (c - b) as f64);
        }
        let flipped = SurfaceFamily::canonical(int(1), int(2), int(0)).unwrap();
        assert!(jet_structure_check(&flipped).unwrap().c5 < 0.0);
    }

    #[test]
    fn jet_structure_preconditions() {
        let f = ParamPoly::parse("x^2+y^2+x^3+lambda*(x^2-y^2)+2*mu*x*y", &["lambda", "mu"]).unwrap();
        let fam = SurfaceFamily::new(f).unwrap();
        assert!(matches!(jet_structure_check(&fam), Err(Error::Precondition(_))));
        let f = ParamPoly::parse("x^2+y^2+x^3+x*y^2+lambda*(x^2-y^2)", &["lambda"]).unwrap();
        let fam = SurfaceFamily::new(f).unwrap();
        assert!(matches!(jet_structure_check(&fam), Err(Error::Genericity(_))));
    }

    #[test]
    fn hexagonal_symmetry() {
        let fam = SurfaceFamily::canonical(int(1), int(0), int(2)).unwrap();
        assert!(hexagonal_symmetry_defect(&fam).unwrap() < 1e-8);
        let model = model5();
        let t = 2.0 * std::f64::consts::PI / 3.0;
        assert!(model.rotate(t).max_diff(&model.to_f64()) < 1e-12);
        // the rotation pairing matters: equal angles break the invariance
        let v4 = VertexFunction::build(&fam).tau_linear_part(4).map_coeffs(|c| c.to_f64());
        assert!(max_coeff_diff(&rotate_jet(&v4, t, t), &v4) > 1.0);
    }
}
