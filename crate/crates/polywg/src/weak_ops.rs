//! Discrete weak gradient and weak divergence on one element.
//!
//! For a weak function v = {v_0, v_b}, the weak gradient is the unique
//! field in [P_r(T)]^2 with
//!
//! ```text
//! (grad_w v, phi)_T = -(v_0, div phi)_T + <v_b, phi . n>_bnd(T)
//! ```
//!
//! and the weak divergence of b v the unique element of P_r(T) with
//!
//! ```text
//! (div_w (b v), w)_T = -(b v_0, grad w)_T + <(b . n) v_b, w>_bnd(T).
//! ```
//!
//! Both are realized as matrices from the local DOF vector (interior P_k
//! block, then one P_q block per edge) to P_r coefficient vectors. The
//! integration-by-parts forms are implemented separately and agree with the
//! defining forms to quadrature roundoff, which makes a sharp cross-check
//! of normals and signs.

use crate::basis;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::space::ElementContext;
use nalgebra::DMatrix;

/// Per-element weak-operator matrices.
pub struct LocalWeakOps {
    pub element: usize,
    /// (2 dim P_r) x n_local: rows 0..dim P_r are the x component.
    pub grad: DMatrix<f64>,
    /// dim P_r x n_local, for the convection field the operator was built with.
    pub div: DMatrix<f64>,
}

impl LocalWeakOps {
    pub fn build<B: Fn(Point) -> (f64, f64)>(ctx: &ElementContext, b: &B) -> Result<Self> {
        Ok(Self {
            element: ctx.element,
            grad: weak_gradient(ctx)?,
            div: weak_divergence(ctx, b)?,
        })
    }
}

fn scale_rows(m: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (i, &wi) in w.iter().enumerate() {
        for x in out.row_mut(i).iter_mut() {
            *x *= wi;
        }
    }
    out
}

/// Solves mass * X = rhs and enforces the advertised residual bound.
fn mass_solve(ctx: &ElementContext, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = ctx.mass_r.clone().cholesky().ok_or(Error::SingularLocal {
        element: ctx.element,
        message: "P_r mass matrix not SPD".into(),
    })?;
    let x = chol.solve(rhs);
    let resid = (&ctx.mass_r * &x - rhs).norm();
    let scale = rhs.norm().max(1e-300);
    if resid / scale > 1e-11 {
        return Err(Error::SingularLocal {
            element: ctx.element,
            message: format!("weak-operator residual {:.3e}", resid / scale),
        });
    }
    Ok(x)
}

fn stack(x: DMatrix<f64>, y: DMatrix<f64>) -> DMatrix<f64> {
    let (nr, nc) = (x.nrows(), x.ncols());
    let mut out = DMatrix::zeros(2 * nr, nc);
    out.view_mut((0, 0), (nr, nc)).copy_from(&x);
    out.view_mut((nr, 0), (nr, nc)).copy_from(&y);
    out
}

/// Weak gradient matrix from the defining equation.
pub fn weak_gradient(ctx: &ElementContext) -> Result<DMatrix<f64>> {
    let (dim_r, n_loc) = (ctx.dim_pr(), ctx.n_local());
    let mut rhs_x = DMatrix::zeros(dim_r, n_loc);
    let mut rhs_y = DMatrix::zeros(dim_r, n_loc);

    // -(v_0, div phi)_T for interior columns
    let dim_k = ctx.dim_pk();
    let grx_w = scale_rows(&ctx.grx, &ctx.quad.weights);
    let gry_w = scale_rows(&ctx.gry, &ctx.quad.weights);
    rhs_x
        .view_mut((0, 0), (dim_r, dim_k))
        .copy_from(&(-(grx_w.transpose() * &ctx.vk)));
    rhs_y
        .view_mut((0, 0), (dim_r, dim_k))
        .copy_from(&(-(gry_w.transpose() * &ctx.vk)));

    // <v_b, phi . n> for edge columns
    for (le, e) in ctx.edges.iter().enumerate() {
        let off = ctx.local_edge_offset(le);
        let er_w = scale_rows(&e.vr, &e.quad.weights);
        let block = er_w.transpose() * &e.vb;
        let nb = ctx.edge_block();
        rhs_x
            .view_mut((0, off), (dim_r, nb))
            .copy_from(&(&block * e.normal.x));
        rhs_y
            .view_mut((0, off), (dim_r, nb))
            .copy_from(&(&block * e.normal.y));
    }

    Ok(stack(mass_solve(ctx, &rhs_x)?, mass_solve(ctx, &rhs_y)?))
}

/// Weak gradient via the integration-by-parts form
/// (grad v_0, phi)_T + <v_b - v_0, phi . n>.
pub fn weak_gradient_ibp(ctx: &ElementContext) -> Result<DMatrix<f64>> {
    let (dim_r, n_loc) = (ctx.dim_pr(), ctx.n_local());
    let mut rhs_x = DMatrix::zeros(dim_r, n_loc);
    let mut rhs_y = DMatrix::zeros(dim_r, n_loc);

    let dim_k = ctx.dim_pk();
    let vr_w = scale_rows(&ctx.vr, &ctx.quad.weights);
    rhs_x
        .view_mut((0, 0), (dim_r, dim_k))
        .copy_from(&(vr_w.transpose() * &ctx.gkx));
    rhs_y
        .view_mut((0, 0), (dim_r, dim_k))
        .copy_from(&(vr_w.transpose() * &ctx.gky));

    for (le, e) in ctx.edges.iter().enumerate() {
        let er_w = scale_rows(&e.vr, &e.quad.weights);
        // -<v_0, phi . n> on interior columns
        let int_block = er_w.transpose() * &e.vk;
        let mut vx = rhs_x.view_mut((0, 0), (dim_r, dim_k));
        vx += &int_block * (-e.normal.x);
        let mut vy = rhs_y.view_mut((0, 0), (dim_r, dim_k));
        vy += &int_block * (-e.normal.y);
        // +<v_b, phi . n> on the edge block
        let off = ctx.local_edge_offset(le);
        let nb = ctx.edge_block();
        let block = er_w.transpose() * &e.vb;
        rhs_x
            .view_mut((0, off), (dim_r, nb))
            .copy_from(&(&block * e.normal.x));
        rhs_y
            .view_mut((0, off), (dim_r, nb))
            .copy_from(&(&block * e.normal.y));
    }

    Ok(stack(mass_solve(ctx, &rhs_x)?, mass_solve(ctx, &rhs_y)?))
}

/// Weak divergence matrix from the defining equation.
pub fn weak_divergence<B: Fn(Point) -> (f64, f64)>(
    ctx: &ElementContext,
    b: &B,
) -> Result<DMatrix<f64>> {
    let (dim_r, n_loc) = (ctx.dim_pr(), ctx.n_local());
    let mut rhs = DMatrix::zeros(dim_r, n_loc);

    // -(b v_0, grad w)_T on interior columns
    let dim_k = ctx.dim_pk();
    let (wbx, wby): (Vec<f64>, Vec<f64>) = ctx
        .quad
        .points
        .iter()
        .zip(&ctx.quad.weights)
        .map(|(&p, &w)| {
            let (bx, by) = b(p);
            (w * bx, w * by)
        })
        .unzip();
    let gx = scale_rows(&ctx.grx, &wbx);
    let gy = scale_rows(&ctx.gry, &wby);
    rhs.view_mut((0, 0), (dim_r, dim_k))
        .copy_from(&(-((gx + gy).transpose() * &ctx.vk)));

    // <(b . n) v_b, w> on edge columns
    for (le, e) in ctx.edges.iter().enumerate() {
        let wbn: Vec<f64> = e
            .quad
            .points
            .iter()
            .zip(&e.quad.weights)
            .map(|(&p, &w)| {
                let (bx, by) = b(p);
                w * (bx * e.normal.x + by * e.normal.y)
            })
            .collect();
        let er_w = scale_rows(&e.vr, &wbn);
        let off = ctx.local_edge_offset(le);
        rhs.view_mut((0, off), (dim_r, ctx.edge_block()))
            .copy_from(&(er_w.transpose() * &e.vb));
    }

    mass_solve(ctx, &rhs)
}

/// Weak divergence via the integration-by-parts form
/// (div(b v_0), w)_T + <(b . n)(v_b - v_0), w>.
pub fn weak_divergence_ibp<B, D>(ctx: &ElementContext, b: &B, div_b: &D) -> Result<DMatrix<f64>>
where
    B: Fn(Point) -> (f64, f64),
    D: Fn(Point) -> f64,
{
    let (dim_r, n_loc) = (ctx.dim_pr(), ctx.n_local());
    let mut rhs = DMatrix::zeros(dim_r, n_loc);
    let dim_k = ctx.dim_pk();

    // (div b v_0 + b . grad v_0, w)_T
    let npts = ctx.quad.points.len();
    let mut divb_vals = DMatrix::zeros(npts, dim_k);
    for (i, (&p, &w)) in ctx.quad.points.iter().zip(&ctx.quad.weights).enumerate() {
        let (bx, by) = b(p);
        let db = div_b(p);
        for j in 0..dim_k {
            divb_vals[(i, j)] =
                w * (db * ctx.vk[(i, j)] + bx * ctx.gkx[(i, j)] + by * ctx.gky[(i, j)]);
        }
    }
    rhs.view_mut((0, 0), (dim_r, dim_k))
        .copy_from(&(ctx.vr.transpose() * divb_vals));

    for (le, e) in ctx.edges.iter().enumerate() {
        let wbn: Vec<f64> = e
            .quad
            .points
            .iter()
            .zip(&e.quad.weights)
            .map(|(&p, &w)| {
                let (bx, by) = b(p);
                w * (bx * e.normal.x + by * e.normal.y)
            })
            .collect();
        let er_w = scale_rows(&e.vr, &wbn);
        // -<(b.n) v_0, w> on interior columns
        let int_block = er_w.transpose() * &e.vk;
        let mut vi = rhs.view_mut((0, 0), (dim_r, dim_k));
        vi -= &int_block;
        // +<(b.n) v_b, w> on the edge block
        let off = ctx.local_edge_offset(le);
        rhs.view_mut((0, off), (dim_r, ctx.edge_block()))
            .copy_from(&(er_w.transpose() * &e.vb));
    }

    mass_solve(ctx, &rhs)
}

/// Weak gradient of a scalar field taken with its own trace: the doublet
/// {u|_T, u|_bnd(T)} evaluated directly at quadrature points.
pub fn weak_gradient_of_field<F: Fn(Point) -> f64>(
    ctx: &ElementContext,
    u: &F,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let dim_r = ctx.dim_pr();
    let mut rhs_x = DMatrix::zeros(dim_r, 1);
    let mut rhs_y = DMatrix::zeros(dim_r, 1);
    for (i, (&p, &w)) in ctx.quad.points.iter().zip(&ctx.quad.weights).enumerate() {
        let uw = w * u(p);
        for m in 0..dim_r {
            rhs_x[(m, 0)] -= uw * ctx.grx[(i, m)];
            rhs_y[(m, 0)] -= uw * ctx.gry[(i, m)];
        }
    }
    for e in &ctx.edges {
        for (i, (&p, &w)) in e.quad.points.iter().zip(&e.quad.weights).enumerate() {
            let uw = w * u(p);
            for m in 0..dim_r {
                rhs_x[(m, 0)] += uw * e.vr[(i, m)] * e.normal.x;
                rhs_y[(m, 0)] += uw * e.vr[(i, m)] * e.normal.y;
            }
        }
    }
    let x = mass_solve(ctx, &rhs_x)?;
    let y = mass_solve(ctx, &rhs_y)?;
    Ok((x.column(0).as_slice().to_vec(), y.column(0).as_slice().to_vec()))
}

/// || grad_w {u, u|_bnd} - Q_r grad(u) ||_T together with || grad u ||_T for
/// relative comparison.
///
/// Verification rules are boosted well beyond the assembly policy so the
/// number reported measures the operator identity, not the quadrature
/// roundoff of the data integrals (for non-polynomial u the two sides only
/// agree as accurately as the moments are integrated).
pub fn check_commutation<F, G>(ctx: &ElementContext, u: &F, grad_u: &G) -> Result<(f64, f64)>
where
    F: Fn(Point) -> f64,
    G: Fn(Point) -> (f64, f64),
{
    let boost = 8;
    let quad = crate::quadrature::polygon_quadrature(
        &ctx.polygon,
        ctx.quad.exactness_degree + boost,
    )?;
    let vr = ctx.basis_r.eval(&quad.points);
    let (grx, gry) = ctx.basis_r.eval_grad(&quad.points);
    let mass = basis::weighted_gram(&vr, &quad.weights);
    let dim_r = ctx.dim_pr();

    // weak gradient of the doublet {u, u|_bnd} from the defining equation
    let mut rhs_x = nalgebra::DVector::zeros(dim_r);
    let mut rhs_y = nalgebra::DVector::zeros(dim_r);
    // moments of Q_r grad u on the same rule
    let mut mom_x = nalgebra::DVector::zeros(dim_r);
    let mut mom_y = nalgebra::DVector::zeros(dim_r);
    let mut scale2 = 0.0;
    for (i, (&p, &w)) in quad.points.iter().zip(&quad.weights).enumerate() {
        let uw = w * u(p);
        let (gx, gy) = grad_u(p);
        scale2 += w * (gx * gx + gy * gy);
        for m in 0..dim_r {
            rhs_x[m] -= uw * grx[(i, m)];
            rhs_y[m] -= uw * gry[(i, m)];
            mom_x[m] += w * gx * vr[(i, m)];
            mom_y[m] += w * gy * vr[(i, m)];
        }
    }
    for e in &ctx.edges {
        let equad = crate::quadrature::edge_quadrature(
            e.basis.start,
            e.basis.end,
            e.quad.exactness_degree + boost,
        );
        let vr_e = ctx.basis_r.eval(&equad.points);
        for (i, (&p, &w)) in equad.points.iter().zip(&equad.weights).enumerate() {
            let uw = w * u(p);
            for m in 0..dim_r {
                rhs_x[m] += uw * vr_e[(i, m)] * e.normal.x;
                rhs_y[m] += uw * vr_e[(i, m)] * e.normal.y;
            }
        }
    }

    let chol = mass.clone().cholesky().ok_or(Error::SingularLocal {
        element: ctx.element,
        message: "P_r mass matrix not SPD".into(),
    })?;
    let dx = chol.solve(&rhs_x) - chol.solve(&mom_x);
    let dy = chol.solve(&rhs_y) - chol.solve(&mom_y);
    let res2 = (dx.transpose() * &mass * dx)[(0, 0)] + (dy.transpose() * &mass * dy)[(0, 0)];
    Ok((res2.max(0.0).sqrt(), scale2.max(0.0).sqrt()))
}
