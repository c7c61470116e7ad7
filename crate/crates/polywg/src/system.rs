//! Global assembly and solve of the weak Galerkin scheme
//!
//! ```text
//! a(u, v) = rho (grad_w u, grad_w v) + (div_w(b u), v_0)
//!         + sum_T <b.n (u_0 - u_b), v_0 - v_b>_{outflow part of bnd T}
//!         + (c u_0, v_0)                  = (f, v_0)
//! ```
//!
//! over the doublet space with v_b = 0 on the domain boundary. The
//! convection term is assembled through the defining property of the weak
//! divergence tested against v_0 (valid since P_k is a subspace of P_r):
//! -(b u_0, grad v_0)_T + <(b.n) u_b, v_0>_{bnd T}, which skips one local
//! solve per element; the explicit divergence matrix stays available in
//! `weak_ops` and a test pins the equality of the two routes.
//!
//! Element loops are data-parallel; the scatter and every accumulation run
//! in fixed element order, so the assembled matrix is bitwise reproducible
//! for any thread count.

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::PolygonalMesh;
use crate::problem::ModelProblem;
use crate::quadrature::edge_quadrature;
use crate::space::{build_contexts, DofMap, ElementContext, WgSpace};
use crate::sparse::{CsrMatrix, SparseLu};
use crate::weak_ops;
use nalgebra::{DMatrix, DVector};

/// How a point on an element edge sees the convection field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowSide {
    /// b . n > 0: the upwind penalty acts here.
    Outflow,
    Inflow,
    /// b . n = 0; excluded from the upwind term.
    Characteristic,
}

/// Tags each edge quadrature point by the sign of b . n.
pub fn upwind_partition<B: Fn(Point) -> (f64, f64)>(
    edge: &crate::space::EdgeContext,
    b: &B,
) -> Vec<FlowSide> {
    edge.quad
        .points
        .iter()
        .map(|&p| {
            let (bx, by) = b(p);
            let bn = bx * edge.normal.x + by * edge.normal.y;
            if bn > 0.0 {
                FlowSide::Outflow
            } else if bn < 0.0 {
                FlowSide::Inflow
            } else {
                FlowSide::Characteristic
            }
        })
        .collect()
}

/// One element's contribution to the bilinear form, split into the
/// symmetric (diffusion + reaction) and convective (transport + upwind)
/// parts, plus the load vector.
pub struct LocalSystem {
    /// rho * diffusion + reaction; bitwise symmetric by construction.
    pub symmetric: DMatrix<f64>,
    /// convection and upwind penalty; all the asymmetry lives here.
    pub convection: DMatrix<f64>,
    pub rhs: DVector<f64>,
    /// min over element quadrature points of c + (div b)/2.
    pub coercivity_min: f64,
}

impl LocalSystem {
    pub fn full(&self) -> DMatrix<f64> {
        &self.symmetric + &self.convection
    }
}

/// Builds the local matrix and load vector; `grad` is the element's weak
/// gradient matrix from `weak_ops::weak_gradient`.
pub fn local_system(
    ctx: &ElementContext,
    grad: &DMatrix<f64>,
    problem: &ModelProblem,
) -> LocalSystem {
    let n_loc = ctx.n_local();
    let dim_k = ctx.dim_pk();
    let dim_r = ctx.dim_pr();

    // diffusion: rho * G^T blockdiag(M_r, M_r) G
    let gx = grad.view((0, 0), (dim_r, n_loc));
    let gy = grad.view((dim_r, 0), (dim_r, n_loc));
    let mut symmetric = gx.transpose() * &ctx.mass_r * gx + gy.transpose() * &ctx.mass_r * gy;
    symmetric *= problem.rho;

    // reaction (c u_0, v_0)
    let wc: Vec<f64> = ctx
        .quad
        .points
        .iter()
        .zip(&ctx.quad.weights)
        .map(|(&p, &w)| w * (problem.c)(p))
        .collect();
    let mut vk_wc = ctx.vk.clone();
    for (i, &w) in wc.iter().enumerate() {
        for x in vk_wc.row_mut(i).iter_mut() {
            *x *= w;
        }
    }
    let reaction = ctx.vk.transpose() * vk_wc;
    for i in 0..dim_k {
        for j in 0..dim_k {
            symmetric[(i, j)] += reaction[(i, j)];
        }
    }
    crate::basis::symmetrize(&mut symmetric);

    // convection, interior test functions only:
    // -(b u_0, grad v_0)_T  +  <(b.n) u_b, v_0>_{bnd T}
    let mut convection = DMatrix::zeros(n_loc, n_loc);
    let mut bdotgrad = DMatrix::zeros(ctx.quad.points.len(), dim_k);
    for (i, (&p, &w)) in ctx.quad.points.iter().zip(&ctx.quad.weights).enumerate() {
        let (bx, by) = (problem.b)(p);
        for j in 0..dim_k {
            bdotgrad[(i, j)] = w * (bx * ctx.gkx[(i, j)] + by * ctx.gky[(i, j)]);
        }
    }
    convection
        .view_mut((0, 0), (dim_k, dim_k))
        .copy_from(&(-(bdotgrad.transpose() * &ctx.vk)));

    for (le, e) in ctx.edges.iter().enumerate() {
        let off = ctx.local_edge_offset(le);
        let nb = ctx.edge_block();
        let npts = e.quad.points.len();
        let mut wbn = Vec::with_capacity(npts);
        for (&p, &w) in e.quad.points.iter().zip(&e.quad.weights) {
            let (bx, by) = (problem.b)(p);
            wbn.push(w * (bx * e.normal.x + by * e.normal.y));
        }
        // <(b.n) u_b, v_0>: test rows interior, trial cols on this edge
        let mut ek_w = e.vk.clone();
        for (i, &w) in wbn.iter().enumerate() {
            for x in ek_w.row_mut(i).iter_mut() {
                *x *= w;
            }
        }
        convection
            .view_mut((0, off), (dim_k, nb))
            .copy_from(&(ek_w.transpose() * &e.vb));

        // upwind jump penalty on the outflow part: strictly b.n > 0
        let mut jump = DMatrix::zeros(npts, n_loc);
        jump.view_mut((0, 0), (npts, dim_k)).copy_from(&e.vk);
        jump.view_mut((0, off), (npts, nb)).copy_from(&(-&e.vb));
        let mut jump_w = jump.clone();
        for (i, &w) in wbn.iter().enumerate() {
            let scale = if w > 0.0 { w } else { 0.0 };
            for x in jump_w.row_mut(i).iter_mut() {
                *x *= scale;
            }
        }
        convection += jump_w.transpose() * jump;
    }

    // load (f, v_0)
    let mut rhs = DVector::zeros(n_loc);
    for (i, (&p, &w)) in ctx.quad.points.iter().zip(&ctx.quad.weights).enumerate() {
        let fw = w * (problem.f)(p);
        for j in 0..dim_k {
            rhs[j] += fw * ctx.vk[(i, j)];
        }
    }

    let coercivity_min = ctx
        .quad
        .points
        .iter()
        .map(|&p| (problem.c)(p) + 0.5 * (problem.div_b)(p))
        .fold(f64::INFINITY, f64::min);

    LocalSystem {
        symmetric,
        convection,
        rhs,
        coercivity_min,
    }
}

/// The assembled linear system over the free DOFs, with boundary data
/// eliminated into the right-hand side.
pub struct GlobalSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dofs: DofMap,
    /// full-layout vector carrying Q_b g on boundary edge blocks
    pub dirichlet: Vec<f64>,
    /// free edge-DOF indices per element, for static condensation
    pub element_edge_dofs: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
    pub assemble_ms: f64,
}

impl GlobalSystem {
    /// v^T A v over a free-layout vector.
    pub fn quadratic_form(&self, free: &[f64]) -> f64 {
        let av = self.matrix.matvec(free);
        free.iter().zip(&av).map(|(&x, &y)| x * y).sum()
    }
}

/// Assembles the WG system for (mesh, problem, space).
pub fn assemble(
    mesh: &PolygonalMesh,
    problem: &ModelProblem,
    space: &WgSpace,
) -> Result<GlobalSystem> {
    let start = std::time::Instant::now();
    let dofs = DofMap::new(mesh, space);

    // Dirichlet data: Q_b g on boundary edges, stored in full layout
    let mut dirichlet = vec![0.0; dofs.full_dim];
    for (edge_id, edge) in mesh.edges.iter().enumerate() {
        if !edge.is_boundary() {
            continue;
        }
        let (a, b) = mesh.edge_endpoints(edge_id);
        let ebasis = crate::basis::EdgeBasis::new(space.q, a, b);
        let rule = edge_quadrature(a, b, 2 * space.q + 8);
        let coeffs = crate::basis::project_qb(|p| (problem.dirichlet)(p), &ebasis, &rule)?;
        let off = dofs.edge_offset_full(edge_id);
        dirichlet[off..off + dofs.edge_block].copy_from_slice(&coeffs);
    }

    struct ElementOut {
        triplets: Vec<(usize, usize, f64)>,
        rhs: Vec<(usize, f64)>,
        edge_dofs: Vec<usize>,
        coercivity_min: f64,
    }

    let per_element: Vec<Result<ElementOut>> = crate::util::map_indexed(mesh.n_elements(), |el| {
        let ctx = ElementContext::build(mesh, space, el)?;
        let grad = weak_ops::weak_gradient(&ctx)?;
        let local = local_system(&ctx, &grad, problem);
        let full = local.full();

        // local -> free/fixed global mapping
        let indices = ctx.global_indices(&dofs);
        let free_index: Vec<Option<usize>> = indices
            .iter()
            .map(|&gi| {
                if gi < dofs.interior_total {
                    Some(gi)
                } else {
                    let edge = (gi - dofs.interior_total) / dofs.edge_block;
                    let within = (gi - dofs.interior_total) % dofs.edge_block;
                    dofs.edge_offset_free(edge).map(|off| off + within)
                }
            })
            .collect();

        let n_loc = ctx.n_local();
        let mut triplets = Vec::with_capacity(n_loc * n_loc);
        let mut rhs_contrib = Vec::with_capacity(n_loc);
        for i in 0..n_loc {
            let Some(fi) = free_index[i] else { continue };
            let mut r = local.rhs[i];
            for j in 0..n_loc {
                match free_index[j] {
                    Some(fj) => triplets.push((fi, fj, full[(i, j)])),
                    None => r -= full[(i, j)] * dirichlet[indices[j]],
                }
            }
            rhs_contrib.push((fi, r));
        }
        let edge_dofs: Vec<usize> = (ctx.dim_pk()..n_loc).filter_map(|i| free_index[i]).collect();
        Ok(ElementOut {
            triplets,
            rhs: rhs_contrib,
            edge_dofs,
            coercivity_min: local.coercivity_min,
        })
    });

    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; dofs.free_dim];
    let mut element_edge_dofs = Vec::with_capacity(mesh.n_elements());
    let mut warnings = Vec::new();
    let mut worst_coercivity = f64::INFINITY;
    for (el, out) in per_element.into_iter().enumerate() {
        let out = out?;
        triplets.extend(out.triplets);
        for (i, v) in out.rhs {
            rhs[i] += v;
        }
        element_edge_dofs.push(out.edge_dofs);
        if out.coercivity_min < worst_coercivity {
            worst_coercivity = out.coercivity_min;
            if worst_coercivity <= 0.0 {
                warnings.push(format!(
                    "coercivity assumption c + (div b)/2 > 0 violated on element {el} \
                     (min {worst_coercivity:.3e})"
                ));
            }
        }
    }

    let matrix = CsrMatrix::from_triplets(dofs.free_dim, dofs.free_dim, triplets);
    Ok(GlobalSystem {
        matrix,
        rhs,
        dofs,
        dirichlet,
        element_edge_dofs,
        warnings,
        assemble_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// A solved system: coefficients in the full layout (boundary blocks carry
/// the Dirichlet data) plus the achieved relative residual.
pub struct WgSolution {
    pub coeffs: Vec<f64>,
    pub residual: f64,
    pub solve_ms: f64,
}

const RESIDUAL_TOL: f64 = 1e-10;

fn finish_solution(
    system: &GlobalSystem,
    free: Vec<f64>,
    start: std::time::Instant,
) -> Result<WgSolution> {
    let r = system.matrix.matvec(&free);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..free.len() {
        num += (r[i] - system.rhs[i]).powi(2);
        den += system.rhs[i].powi(2);
    }
    // relative when the load is nonzero, absolute otherwise
    let residual = if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    };
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::ResidualTooLarge {
            residual,
            tolerance: RESIDUAL_TOL,
        });
    }
    Ok(WgSolution {
        coeffs: system.dofs.expand(&free, Some(&system.dirichlet)),
        residual,
        solve_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Direct sparse LU solve of the full free system.
pub fn solve(system: &GlobalSystem) -> Result<WgSolution> {
    let start = std::time::Instant::now();
    let lu = SparseLu::factor(&system.matrix)?;
    let free = lu.solve(&system.rhs);
    finish_solution(system, free, start)
}

/// The Schur complement of the interior blocks: an edge-only system plus
/// the per-element recovery data. Interior unknowns couple only inside
/// their own element, so the elimination is embarrassingly local.
pub struct CondensedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    recovery: Vec<ElementRecovery>,
}

struct ElementRecovery {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    a_ie: DMatrix<f64>,
    f_i: DVector<f64>,
    /// reduced (edge-system) indices of this element's free edge DOFs
    edge_cols: Vec<usize>,
    interior_offset: usize,
}

pub fn static_condense(system: &GlobalSystem) -> Result<CondensedSystem> {
    let dofs = &system.dofs;
    let nt = dofs.interior_total;
    let n_edge = dofs.free_dim - nt;
    let dk = dofs.dim_pk;

    // edge-edge block of A, shifted into the reduced numbering
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for i in nt..dofs.free_dim {
        let (cols, vals) = system.matrix.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j >= nt {
                triplets.push((i - nt, j - nt, v));
            }
        }
    }

    let mut rhs: Vec<f64> = system.rhs[nt..].to_vec();
    let mut recovery = Vec::with_capacity(dofs.n_elements);
    for el in 0..dofs.n_elements {
        let off = dofs.element_offset(el);
        let edge_dofs = &system.element_edge_dofs[el];
        let ne = edge_dofs.len();
        let col_of = |g: usize| edge_dofs.iter().position(|&d| d == g);

        let mut a_ii = DMatrix::zeros(dk, dk);
        let mut a_ie = DMatrix::zeros(dk, ne);
        for li in 0..dk {
            let (cols, vals) = system.matrix.row(off + li);
            for (&j, &v) in cols.iter().zip(vals) {
                if j >= off && j < off + dk {
                    a_ii[(li, j - off)] = v;
                } else if let Some(lj) = col_of(j) {
                    a_ie[(li, lj)] = v;
                }
            }
        }
        let mut a_ei = DMatrix::zeros(ne, dk);
        for (le, &g) in edge_dofs.iter().enumerate() {
            let (cols, vals) = system.matrix.row(g);
            for (&j, &v) in cols.iter().zip(vals) {
                if j >= off && j < off + dk {
                    a_ei[(le, j - off)] = v;
                }
            }
        }
        let f_i = DVector::from_column_slice(&system.rhs[off..off + dk]);

        let lu = a_ii.clone().lu();
        let inv_f = lu.solve(&f_i).ok_or(Error::SingularLocal {
            element: el,
            message: "singular interior block in condensation".into(),
        })?;
        let inv_aie = lu.solve(&a_ie).ok_or(Error::SingularLocal {
            element: el,
            message: "singular interior block in condensation".into(),
        })?;
        let s_e = &a_ei * inv_aie;
        let g_e = &a_ei * inv_f;
        let edge_cols: Vec<usize> = edge_dofs.iter().map(|&d| d - nt).collect();
        for (li, &gi) in edge_cols.iter().enumerate() {
            rhs[gi] -= g_e[li];
            for (lj, &gj) in edge_cols.iter().enumerate() {
                triplets.push((gi, gj, -s_e[(li, lj)]));
            }
        }
        recovery.push(ElementRecovery {
            lu,
            a_ie,
            f_i,
            edge_cols,
            interior_offset: off,
        });
    }

    Ok(CondensedSystem {
        matrix: CsrMatrix::from_triplets(n_edge, n_edge, triplets),
        rhs,
        recovery,
    })
}

/// Solves the condensed edge system and recovers the interior unknowns.
pub fn solve_condensed(system: &GlobalSystem, condensed: &CondensedSystem) -> Result<WgSolution> {
    let start = std::time::Instant::now();
    let lu = SparseLu::factor(&condensed.matrix)?;
    let x_edge = lu.solve(&condensed.rhs);

    let nt = system.dofs.interior_total;
    let mut free = vec![0.0; system.dofs.free_dim];
    free[nt..].copy_from_slice(&x_edge);
    for rec in &condensed.recovery {
        let mut rhs_i = rec.f_i.clone();
        if !rec.edge_cols.is_empty() {
            let xe = DVector::from_fn(rec.edge_cols.len(), |i, _| x_edge[rec.edge_cols[i]]);
            rhs_i -= &rec.a_ie * xe;
        }
        let x_i = rec.lu.solve(&rhs_i).ok_or(Error::SingularLocal {
            element: 0,
            message: "recovery solve failed".into(),
        })?;
        free[rec.interior_offset..rec.interior_offset + x_i.len()].copy_from_slice(x_i.as_slice());
    }
    finish_solution(system, free, start)
}
