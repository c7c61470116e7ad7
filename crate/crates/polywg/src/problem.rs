//! The convection-diffusion-reaction model problem
//!
//! ```text
//! -rho laplace(u) + div(b u) + c u = f   in Omega,
//!                                u = g   on the boundary,
//! ```
//!
//! plus the two manufactured solutions used in the convergence studies:
//! a smooth standing wave and a boundary-layer solution whose layer width
//! is the diffusion coefficient.

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::Rect;
use crate::util::SplitMix64;
use std::sync::Arc;

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> (f64, f64) + Send + Sync>;

/// Exact solution data for error studies.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarFn,
    pub grad: VectorFn,
    pub laplacian: ScalarFn,
}

#[derive(Clone)]
pub struct ModelProblem {
    pub rho: f64,
    pub b: VectorFn,
    /// analytic divergence of b
    pub div_b: ScalarFn,
    pub c: ScalarFn,
    pub f: ScalarFn,
    /// Dirichlet boundary data g.
    pub dirichlet: ScalarFn,
    pub exact: Option<ExactSolution>,
}

impl ModelProblem {
    pub fn new(rho: f64, b: VectorFn, div_b: ScalarFn, c: ScalarFn, f: ScalarFn) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::Config(format!("diffusion rho = {rho} must be positive")));
        }
        Ok(Self {
            rho,
            b,
            div_b,
            c,
            f,
            dirichlet: Arc::new(|_| 0.0),
            exact: None,
        })
    }

    pub fn with_dirichlet(mut self, g: ScalarFn) -> Self {
        self.dirichlet = g;
        self
    }

    pub fn with_exact(mut self, exact: ExactSolution) -> Self {
        self.exact = Some(exact);
        self
    }

    /// Checks f = -rho laplace(u) + div(b u) + c u at random sample points.
    ///
    /// The deviation is measured relative to the sum of the term magnitudes,
    /// which stays meaningful where the terms cancel (for the layer solution
    /// individual terms reach 1/rho while f itself may be small).
    pub fn check_consistency(&self, domain: Rect, samples: usize, seed: u64) -> Result<()> {
        let exact = self.exact.as_ref().ok_or(Error::MissingExact)?;
        let mut rng = SplitMix64::new(seed);
        for _ in 0..samples {
            let p = Point::new(
                rng.uniform(domain.x0, domain.x1),
                rng.uniform(domain.y0, domain.y1),
            );
            let u = (exact.u)(p);
            let (gx, gy) = (exact.grad)(p);
            let lap = (exact.laplacian)(p);
            let (bx, by) = (self.b)(p);
            let diffusion = -self.rho * lap;
            let convection = (self.div_b)(p) * u + bx * gx + by * gy;
            let reaction = (self.c)(p) * u;
            let f = (self.f)(p);
            let resid = diffusion + convection + reaction - f;
            let scale = diffusion.abs() + convection.abs() + reaction.abs() + f.abs();
            if resid.abs() > 1e-9 * scale.max(1e-12) {
                return Err(Error::Config(format!(
                    "inconsistent problem data at ({}, {}): residual {:.3e}, scale {:.3e}",
                    p.x, p.y, resid, scale
                )));
            }
        }
        Ok(())
    }
}

/// Identifier for the built-in manufactured solutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolutionId {
    U1,
    U2,
}

impl SolutionId {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "u1" => Ok(SolutionId::U1),
            "u2" => Ok(SolutionId::U2),
            other => Err(Error::Config(format!("unknown solution id `{other}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SolutionId::U1 => "u1",
            SolutionId::U2 => "u2",
        }
    }

    pub fn problem(&self, rho: f64) -> Result<ModelProblem> {
        match self {
            SolutionId::U1 => standing_wave(rho),
            SolutionId::U2 => boundary_layer(rho),
        }
    }
}

/// u = sin(pi x) sin(pi y) with b = (1, 1), c = 1; homogeneous Dirichlet
/// data on (-1,1)^2.
pub fn standing_wave(rho: f64) -> Result<ModelProblem> {
    use std::f64::consts::PI;
    let u = |p: Point| (PI * p.x).sin() * (PI * p.y).sin();
    let grad = |p: Point| {
        (
            PI * (PI * p.x).cos() * (PI * p.y).sin(),
            PI * (PI * p.x).sin() * (PI * p.y).cos(),
        )
    };
    let f = move |p: Point| {
        let (gx, gy) = grad(p);
        (2.0 * rho * PI * PI + 1.0) * u(p) + gx + gy
    };
    let problem = ModelProblem::new(
        rho,
        Arc::new(|_| (1.0, 1.0)),
        Arc::new(|_| 0.0),
        Arc::new(|_| 1.0),
        Arc::new(f),
    )?;
    Ok(problem.with_exact(ExactSolution {
        u: Arc::new(u),
        grad: Arc::new(grad),
        laplacian: Arc::new(move |p| -2.0 * PI * PI * u(p)),
    }))
}

/// One-dimensional factor of the layer solution:
/// X(t) = sin(pi t / 2) * (1 - exp((t-1)/rho)), returned with scaled
/// derivatives (X, X', rho X'') so no intermediate exceeds O(1/rho).
fn layer_factor(t: f64, rho: f64) -> (f64, f64, f64) {
    use std::f64::consts::FRAC_PI_2;
    let s = (FRAC_PI_2 * t).sin();
    let sp = FRAC_PI_2 * (FRAC_PI_2 * t).cos();
    let spp = -FRAC_PI_2 * FRAC_PI_2 * s;
    // ex underflows to exactly 0 away from the layer for small rho
    let ex = ((t - 1.0) / rho).exp();
    let e = 1.0 - ex;
    let ep = -ex / rho;
    // rho * E'' = E' = -ex / rho
    let x = s * e;
    let xp = sp * e + s * ep;
    let rho_xpp = rho * spp * e + 2.0 * sp * (-ex) + s * ep;
    (x, xp, rho_xpp)
}

/// u = sin(pi x/2) sin(pi y/2) (1 - e^{(x-1)/rho})(1 - e^{(y-1)/rho}) with
/// b = (1, 1), c = 1. The layer sits along the outflow boundary x = 1,
/// y = 1 where u vanishes; on the inflow part of the boundary u does not
/// vanish, so the problem carries inhomogeneous Dirichlet data u|_bnd.
pub fn boundary_layer(rho: f64) -> Result<ModelProblem> {
    let u = move |p: Point| layer_factor(p.x, rho).0 * layer_factor(p.y, rho).0;
    let grad = move |p: Point| {
        let (x, xp, _) = layer_factor(p.x, rho);
        let (y, yp, _) = layer_factor(p.y, rho);
        (xp * y, x * yp)
    };
    let laplacian = move |p: Point| {
        let (x, _, rho_xpp) = layer_factor(p.x, rho);
        let (y, _, rho_ypp) = layer_factor(p.y, rho);
        (rho_xpp * y + x * rho_ypp) / rho
    };
    let f = move |p: Point| {
        let (x, xp, rho_xpp) = layer_factor(p.x, rho);
        let (y, yp, rho_ypp) = layer_factor(p.y, rho);
        // -rho laplace(u) grouped so the 1/rho^2 terms never materialize
        -(rho_xpp * y + x * rho_ypp) + (xp * y + x * yp) + x * y
    };
    let problem = ModelProblem::new(
        rho,
        Arc::new(|_| (1.0, 1.0)),
        Arc::new(|_| 0.0),
        Arc::new(|_| 1.0),
        Arc::new(f),
    )?
    .with_dirichlet(Arc::new(u));
    Ok(problem.with_exact(ExactSolution {
        u: Arc::new(u),
        grad: Arc::new(grad),
        laplacian: Arc::new(laplacian),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standing_wave_is_consistent() {
        for rho in [1.0, 1e-6, 1e-9] {
            let p = standing_wave(rho).unwrap();
            p.check_consistency(Rect::default(), 100, 7).unwrap();
        }
    }

    #[test]
    fn boundary_layer_is_consistent() {
        for rho in [1.0, 1e-3, 1e-6, 1e-9] {
            let p = boundary_layer(rho).unwrap();
            p.check_consistency(Rect::default(), 100, 11).unwrap();
        }
    }

    #[test]
    fn boundary_layer_vanishes_on_outflow() {
        for rho in [1.0, 1e-6, 1e-9] {
            let p = boundary_layer(rho).unwrap();
            let exact = p.exact.as_ref().unwrap();
            for t in [-0.9, -0.3, 0.2, 0.8] {
                assert_eq!((exact.u)(Point::new(1.0, t)), 0.0);
                assert_eq!((exact.u)(Point::new(t, 1.0)), 0.0);
            }
        }
    }

    #[test]
    fn boundary_layer_inflow_data_nonzero() {
        // on the inflow boundary x = -1 the trace is O(1); the scheme takes
        // it as Dirichlet data
        let p = boundary_layer(1e-6).unwrap();
        let g = &p.dirichlet;
        assert!(g(Point::new(-1.0, 0.5)).abs() > 0.1);
        // for u1 data is identically zero
        let p1 = standing_wave(1.0).unwrap();
        assert_eq!((p1.dirichlet)(Point::new(-1.0, 0.5)), 0.0);
    }

    #[test]
    fn rho_must_be_positive() {
        assert!(standing_wave(0.0).is_err());
        assert!(standing_wave(-1.0).is_err());
    }
}
