//! Discrete norms, projection of exact solutions, and convergence tables.
//!
//! The energy norm of a doublet v is
//!
//! ```text
//! |||v|||^2 = sum_T  rho ||grad_w v||_T^2
//!           + 1/2 <|b.n| (v_0 - v_b), v_0 - v_b>_{bnd T}
//!           + ((c + div(b)/2) v_0, v_0)_T
//! ```
//!
//! where the inflow/outflow halves of the jump term have been folded into
//! the single |b.n| form. The discrete H1 seminorm replaces the weak
//! gradient by grad v_0 and adds the scaled jump h_T^{-1} ||v_0 -
//! v_b||^2_{bnd T}. Everything here evaluates pointwise from tabulated
//! bases, independently of the assembled matrix; agreement of v^T A v with
//! |||v|||^2 is the strongest cross-check the scheme has.
//!
//! All element reductions run in fixed order (pairwise trees), so results
//! are bitwise stable across runs and thread counts.

use crate::basis;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::PolygonalMesh;
use crate::problem::ModelProblem;
use crate::space::{DofMap, ElementContext, WgSpace};
use crate::system::WgSolution;
use crate::util::pairwise_sum;
use crate::weak_ops;
use nalgebra::DVector;

/// Errors of one solved configuration, in the metrics the convergence
/// tables report (projection-relative, against Q_h u).
#[derive(Clone, Debug)]
pub struct ErrorReport {
    pub h: f64,
    pub dofs: usize,
    /// || Q_0 u - u_0 || over the domain
    pub l2_error: f64,
    /// sqrt(rho) || grad_w (Q_h u - u_h) ||
    pub weighted_grad_error: f64,
    /// ||| Q_h u - u_h |||
    pub energy_error: f64,
    pub solve_ms: f64,
}

/// Which gradient enters the quadratic form.
enum GradKind {
    Weak,
    Interior,
}

/// Per-element contributions to the squared norm, one entry per input
/// vector. `jump_scale` adds h_T^{-1} ||v_0 - v_b||^2 when positive.
fn element_quadratic_terms(
    ctx: &ElementContext,
    problem: &ModelProblem,
    dofs: &DofMap,
    vectors: &[&[f64]],
    grad_kind: &GradKind,
    h_jump: bool,
) -> Result<Vec<f64>> {
    let dim_r = ctx.dim_pr();
    let dim_k = ctx.dim_pk();
    let grad = match grad_kind {
        GradKind::Weak => Some(weak_ops::weak_gradient(ctx)?),
        GradKind::Interior => None,
    };
    let mut out = Vec::with_capacity(vectors.len());
    for &full in vectors {
        let local = ctx.gather(dofs, full);
        let lv = DVector::from_column_slice(&local);
        let mut total = 0.0;

        // gradient energy
        match &grad {
            Some(g) => {
                let c = g * &lv;
                for (i, &w) in ctx.quad.weights.iter().enumerate() {
                    let mut gx = 0.0;
                    let mut gy = 0.0;
                    for m in 0..dim_r {
                        gx += c[m] * ctx.vr[(i, m)];
                        gy += c[dim_r + m] * ctx.vr[(i, m)];
                    }
                    total += w * problem.rho * (gx * gx + gy * gy);
                }
            }
            None => {
                for (i, &w) in ctx.quad.weights.iter().enumerate() {
                    let mut gx = 0.0;
                    let mut gy = 0.0;
                    for j in 0..dim_k {
                        gx += local[j] * ctx.gkx[(i, j)];
                        gy += local[j] * ctx.gky[(i, j)];
                    }
                    total += w * problem.rho * (gx * gx + gy * gy);
                }
            }
        }

        // weighted reaction mass
        let mut reaction = 0.0;
        for (i, (&p, &w)) in ctx.quad.points.iter().zip(&ctx.quad.weights).enumerate() {
            let mut v0 = 0.0;
            for j in 0..dim_k {
                v0 += local[j] * ctx.vk[(i, j)];
            }
            reaction += w * ((problem.c)(p) + 0.5 * (problem.div_b)(p)) * v0 * v0;
        }
        if reaction < 0.0 {
            return Err(Error::NegativeForm {
                element: ctx.element,
                value: reaction,
            });
        }
        total += reaction;

        // jump terms on the element boundary
        for (le, e) in ctx.edges.iter().enumerate() {
            let off = ctx.local_edge_offset(le);
            for (i, (&p, &w)) in e.quad.points.iter().zip(&e.quad.weights).enumerate() {
                let mut v0 = 0.0;
                for j in 0..dim_k {
                    v0 += local[j] * e.vk[(i, j)];
                }
                let mut vb = 0.0;
                for l in 0..ctx.edge_block() {
                    vb += local[off + l] * e.vb[(i, l)];
                }
                let jump = v0 - vb;
                let (bx, by) = (problem.b)(p);
                let bn = bx * e.normal.x + by * e.normal.y;
                total += 0.5 * w * bn.abs() * jump * jump;
                if h_jump {
                    total += w * jump * jump / ctx.diameter;
                }
            }
        }
        out.push(total);
    }
    Ok(out)
}

fn norm_batch(
    mesh: &PolygonalMesh,
    problem: &ModelProblem,
    space: &WgSpace,
    vectors: &[&[f64]],
    grad_kind: GradKind,
    h_jump: bool,
) -> Result<Vec<f64>> {
    let dofs = DofMap::new(mesh, space);
    let per_element: Vec<Result<Vec<f64>>> = crate::util::map_indexed(mesh.n_elements(), |el| {
        let ctx = ElementContext::build(mesh, space, el)?;
        element_quadratic_terms(&ctx, problem, &dofs, vectors, &grad_kind, h_jump)
    });
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(mesh.n_elements()); vectors.len()];
    for res in per_element {
        let terms = res?;
        for (v, t) in columns.iter_mut().zip(terms) {
            v.push(t);
        }
    }
    Ok(columns
        .into_iter()
        .map(|c| pairwise_sum(&c).max(0.0).sqrt())
        .collect())
}

/// Energy norms of several full-layout coefficient vectors in one mesh
/// sweep.
pub fn energy_norms(
    mesh: &PolygonalMesh,
    problem: &ModelProblem,
    space: &WgSpace,
    vectors: &[&[f64]],
) -> Result<Vec<f64>> {
    norm_batch(mesh, problem, space, vectors, GradKind::Weak, false)
}

pub fn energy_norm(
    mesh: &PolygonalMesh,
    problem: &ModelProblem,
    space: &WgSpace,
    v: &[f64],
) -> Result<f64> {
    Ok(energy_norms(mesh, problem, space, &[v])?[0])
}

/// Discrete H1 seminorms (batched like [`energy_norms`]).
pub fn h1_seminorms(
    mesh: &PolygonalMesh,
    problem: &ModelProblem,
    space: &WgSpace,
    vectors: &[&[f64]],
) -> Result<Vec<f64>> {
    norm_batch(mesh, problem, space, vectors, GradKind::Interior, true)
}

pub fn h1_seminorm(
    mesh: &PolygonalMesh,
    problem: &ModelProblem,
    space: &WgSpace,
    v: &[f64],
) -> Result<f64> {
    Ok(h1_seminorms(mesh, problem, space, &[v])?[0])
}

/// Q_h u: blockwise L2 projections of a scalar field into the doublet
/// space, in the full layout.
pub fn project_exact<F: Fn(Point) -> f64 + Sync>(
    mesh: &PolygonalMesh,
    space: &WgSpace,
    u: F,
) -> Result<Vec<f64>> {
    let dofs = DofMap::new(mesh, space);
    let mut full = vec![0.0; dofs.full_dim];
    let interior: Vec<Result<Vec<f64>>> = crate::util::map_indexed(mesh.n_elements(), |el| {
        let ctx = ElementContext::build(mesh, space, el)?;
        basis::project_q0(&u, &ctx.basis_k, &ctx.quad)
    });
    for (el, coeffs) in interior.into_iter().enumerate() {
        let off = dofs.element_offset(el);
        full[off..off + dofs.dim_pk].copy_from_slice(&coeffs?);
    }
    let edges: Vec<Result<Vec<f64>>> = crate::util::map_indexed(mesh.n_edges(), |edge| {
        let (a, b) = mesh.edge_endpoints(edge);
        let ebasis = basis::EdgeBasis::new(space.q, a, b);
        let rule = crate::quadrature::edge_quadrature(a, b, 2 * space.q + 8);
        basis::project_qb(&u, &ebasis, &rule)
    });
    for (edge, coeffs) in edges.into_iter().enumerate() {
        let off = dofs.edge_offset_full(edge);
        full[off..off + dofs.edge_block].copy_from_slice(&coeffs?);
    }
    Ok(full)
}

/// L2 norm over the domain of the interior component of a full-layout
/// vector.
pub fn l2_norm_interior(
    mesh: &PolygonalMesh,
    space: &WgSpace,
    full: &[f64],
) -> Result<f64> {
    let dofs = DofMap::new(mesh, space);
    let per_element: Vec<Result<f64>> = crate::util::map_indexed(mesh.n_elements(), |el| {
        let ctx = ElementContext::build(mesh, space, el)?;
        let off = dofs.element_offset(el);
        let coeffs = &full[off..off + dofs.dim_pk];
        let mut acc = 0.0;
        for (i, &w) in ctx.quad.weights.iter().enumerate() {
            let mut v0 = 0.0;
            for j in 0..dofs.dim_pk {
                v0 += coeffs[j] * ctx.vk[(i, j)];
            }
            acc += w * v0 * v0;
        }
        Ok(acc)
    });
    let terms = per_element.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&terms).max(0.0).sqrt())
}

/// sqrt(rho) || grad_w v || over the domain.
pub fn weighted_grad_norm(
    mesh: &PolygonalMesh,
    problem: &ModelProblem,
    space: &WgSpace,
    full: &[f64],
) -> Result<f64> {
    let dofs = DofMap::new(mesh, space);
    let per_element: Vec<Result<f64>> = crate::util::map_indexed(mesh.n_elements(), |el| {
        let ctx = ElementContext::build(mesh, space, el)?;
        let grad = weak_ops::weak_gradient(&ctx)?;
        let local = ctx.gather(&dofs, full);
        let c = grad * DVector::from_column_slice(&local);
        let dim_r = ctx.dim_pr();
        let mut acc = 0.0;
        for (i, &w) in ctx.quad.weights.iter().enumerate() {
            let mut gx = 0.0;
            let mut gy = 0.0;
            for m in 0..dim_r {
                gx += c[m] * ctx.vr[(i, m)];
                gy += c[dim_r + m] * ctx.vr[(i, m)];
            }
            acc += w * (gx * gx + gy * gy);
        }
        Ok(acc)
    });
    let terms = per_element.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(problem.rho.sqrt() * pairwise_sum(&terms).max(0.0).sqrt())
}

/// Builds the table metrics for a solved configuration: errors of u_h
/// against the projected exact solution Q_h u.
pub fn table_errors(
    mesh: &PolygonalMesh,
    problem: &ModelProblem,
    space: &WgSpace,
    solution: &WgSolution,
) -> Result<ErrorReport> {
    let exact = problem.exact.as_ref().ok_or(Error::MissingExact)?;
    let qhu = project_exact(mesh, space, |p| (exact.u)(p))?;
    let diff: Vec<f64> = qhu
        .iter()
        .zip(&solution.coeffs)
        .map(|(a, b)| a - b)
        .collect();
    let dofs = DofMap::new(mesh, space);
    Ok(ErrorReport {
        h: mesh.mesh_size,
        dofs: dofs.free_dim,
        l2_error: l2_norm_interior(mesh, space, &diff)?,
        weighted_grad_error: weighted_grad_norm(mesh, problem, space, &diff)?,
        energy_error: energy_norm(mesh, problem, space, &diff)?,
        solve_ms: solution.solve_ms,
    })
}

/// log2(e_i / e_{i+1}) per refinement step; `None` when the ratio is
/// undefined (zero or non-finite errors).
pub fn convergence_orders(errors: &[f64]) -> Vec<Option<f64>> {
    errors
        .windows(2)
        .map(|w| {
            if w[0] > 0.0 && w[1] > 0.0 && w[0].is_finite() && w[1].is_finite() {
                Some((w[0] / w[1]).log2())
            } else {
                None
            }
        })
        .collect()
}
