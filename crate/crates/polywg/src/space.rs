//! The weak Galerkin space: degree triple (k, q, r), DOF layout, and the
//! per-element tabulation context shared by operators, assembly, and norms.
//!
//! Unknowns are a doublet per element: interior P_k coefficients plus
//! independent P_q coefficients on each edge. Interior blocks come first in
//! the global layout, then one block per edge in edge order. The "full"
//! layout covers every edge; the "free" layout skips boundary edges, whose
//! coefficients are fixed Dirichlet data.

use crate::basis::{self, EdgeBasis, ElementBasis};
use crate::error::Result;
use crate::geometry::{self, Point};
use crate::mesh::{FamilyKind, PolygonalMesh};
use crate::quadrature::{edge_quadrature, polygon_quadrature, EdgeQuadrature, QuadratureRule};
use nalgebra::DMatrix;

/// Degree of the weak-operator range space [P_r]^2 / P_r.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeakDegree {
    Fixed(usize),
    /// k - 1 + N on convex elements, k - 1 + 2N on nonconvex ones, with N
    /// the element's edge count.
    Theoretical,
}

/// The (k, q, r) configuration of the discrete space.
#[derive(Clone, Copy, Debug)]
pub struct WgSpace {
    pub k: usize,
    pub q: usize,
    pub rdeg: WeakDegree,
}

impl WgSpace {
    pub fn new(k: usize, q: usize, rdeg: WeakDegree) -> Result<Self> {
        if q > k {
            return Err(crate::error::Error::Config(format!(
                "edge degree q = {q} exceeds interior degree k = {k}"
            )));
        }
        if let WeakDegree::Fixed(r) = rdeg {
            if r < k {
                return Err(crate::error::Error::Config(format!(
                    "weak-operator degree r = {r} below interior degree k = {k}"
                )));
            }
        }
        Ok(Self { k, q, rdeg })
    }

    /// r = k + 1 on the triangular/square families, k + 2 on the nonconvex
    /// one; the pairing used throughout the experiments.
    pub fn family_default(k: usize, q: usize, family: FamilyKind) -> Result<Self> {
        let r = match family {
            FamilyKind::Triangular | FamilyKind::Square => k + 1,
            FamilyKind::Nonconvex => k + 2,
        };
        Self::new(k, q, WeakDegree::Fixed(r))
    }

    pub fn r_for(&self, convex: bool, n_edges: usize) -> usize {
        match self.rdeg {
            WeakDegree::Fixed(r) => r,
            WeakDegree::Theoretical => {
                if convex {
                    self.k - 1 + n_edges
                } else {
                    self.k - 1 + 2 * n_edges
                }
            }
        }
    }

    pub fn dim_pk(&self) -> usize {
        basis::dim_p(self.k)
    }

    pub fn edge_block(&self) -> usize {
        self.q + 1
    }
}

/// Global DOF layout for a (mesh, space) pair.
#[derive(Clone, Debug)]
pub struct DofMap {
    pub dim_pk: usize,
    pub edge_block: usize,
    pub n_elements: usize,
    pub n_edges: usize,
    pub interior_total: usize,
    /// dimension including boundary edge blocks
    pub full_dim: usize,
    /// dimension of the linear system (boundary blocks eliminated)
    pub free_dim: usize,
    pub n_interior_edges: usize,
    edge_free_rank: Vec<Option<usize>>,
}

impl DofMap {
    pub fn new(mesh: &PolygonalMesh, space: &WgSpace) -> Self {
        let dim_pk = space.dim_pk();
        let edge_block = space.edge_block();
        let n_elements = mesh.n_elements();
        let n_edges = mesh.n_edges();
        let mut edge_free_rank = Vec::with_capacity(n_edges);
        let mut rank = 0usize;
        for e in &mesh.edges {
            if e.is_boundary() {
                edge_free_rank.push(None);
            } else {
                edge_free_rank.push(Some(rank));
                rank += 1;
            }
        }
        let interior_total = n_elements * dim_pk;
        DofMap {
            dim_pk,
            edge_block,
            n_elements,
            n_edges,
            interior_total,
            full_dim: interior_total + n_edges * edge_block,
            free_dim: interior_total + rank * edge_block,
            n_interior_edges: rank,
            edge_free_rank,
        }
    }

    pub fn element_offset(&self, element: usize) -> usize {
        element * self.dim_pk
    }

    pub fn edge_offset_full(&self, edge: usize) -> usize {
        self.interior_total + edge * self.edge_block
    }

    pub fn edge_offset_free(&self, edge: usize) -> Option<usize> {
        self.edge_free_rank[edge].map(|r| self.interior_total + r * self.edge_block)
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.edge_free_rank[edge].is_none()
    }

    /// Compresses a full-layout vector to the free layout.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.free_dim);
        out.extend_from_slice(&full[..self.interior_total]);
        for (e, rank) in self.edge_free_rank.iter().enumerate() {
            if rank.is_some() {
                let off = self.edge_offset_full(e);
                out.extend_from_slice(&full[off..off + self.edge_block]);
            }
        }
        out
    }

    /// Expands a free-layout vector to the full layout, filling boundary
    /// blocks from `fixed` (a full-layout vector, or zeros if None).
    pub fn expand(&self, free: &[f64], fixed: Option<&[f64]>) -> Vec<f64> {
        let mut out = vec![0.0; self.full_dim];
        out[..self.interior_total].copy_from_slice(&free[..self.interior_total]);
        for e in 0..self.n_edges {
            let full_off = self.edge_offset_full(e);
            match self.edge_offset_free(e) {
                Some(free_off) => out[full_off..full_off + self.edge_block]
                    .copy_from_slice(&free[free_off..free_off + self.edge_block]),
                None => {
                    if let Some(values) = fixed {
                        out[full_off..full_off + self.edge_block]
                            .copy_from_slice(&values[full_off..full_off + self.edge_block]);
                    }
                }
            }
        }
        out
    }
}

/// One element's edge as used in tabulations. The quadrature and the edge
/// basis are built from the edge's canonical endpoints, so the two adjacent
/// elements see bitwise-identical points and functions; only the outward
/// normal flips.
pub struct EdgeContext {
    pub edge_id: usize,
    pub normal: Point,
    pub length: f64,
    pub quad: EdgeQuadrature,
    pub basis: EdgeBasis,
    /// traces of the interior P_k basis at the edge quadrature points
    pub vk: DMatrix<f64>,
    /// values of the P_r basis at the edge quadrature points
    pub vr: DMatrix<f64>,
    /// values of the edge P_q basis at the edge quadrature points
    pub vb: DMatrix<f64>,
}

/// Per-element bases, rules, and tabulations.
pub struct ElementContext {
    pub element: usize,
    pub polygon: Vec<Point>,
    pub centroid: Point,
    pub diameter: f64,
    pub area: f64,
    pub k: usize,
    pub q: usize,
    pub r: usize,
    pub quad: QuadratureRule,
    pub basis_k: ElementBasis,
    pub basis_r: ElementBasis,
    /// interior basis values at element quadrature points
    pub vk: DMatrix<f64>,
    pub gkx: DMatrix<f64>,
    pub gky: DMatrix<f64>,
    /// P_r basis values and gradients at element quadrature points
    pub vr: DMatrix<f64>,
    pub grx: DMatrix<f64>,
    pub gry: DMatrix<f64>,
    pub mass_r: DMatrix<f64>,
    pub edges: Vec<EdgeContext>,
}

impl ElementContext {
    pub fn build(mesh: &PolygonalMesh, space: &WgSpace, element: usize) -> Result<Self> {
        let polygon = mesh.polygon(element);
        let centroid = mesh.element_centroid[element];
        let diameter = mesh.element_diameter[element];
        let area = mesh.element_area[element];
        let k = space.k;
        let q = space.q;
        let r = space.r_for(geometry::is_convex(&polygon), polygon.len());

        // exact for every element-interior integrand of the scheme, plus
        // margin for variable coefficients
        let elem_degree = (2 * r).max(k + r).max(2 * k) + 2;
        let quad = polygon_quadrature(&polygon, elem_degree)?;

        let basis_k = ElementBasis::orthonormal(k, centroid, diameter, &quad, element)?;
        let basis_r = ElementBasis::orthonormal(r, centroid, diameter, &quad, element)?;
        let vk = basis_k.eval(&quad.points);
        let (gkx, gky) = basis_k.eval_grad(&quad.points);
        let vr = basis_r.eval(&quad.points);
        let (grx, gry) = basis_r.eval_grad(&quad.points);
        let mass_r = basis::weighted_gram(&vr, &quad.weights);

        // covers q+r products plus the 2*max(k,q) upwind/jump integrands
        let edge_degree = (q + r).max(2 * k) + 2;
        let mut edges = Vec::new();
        for (edge_id, normal, length) in mesh.element_edges(element)? {
            let (a, b) = mesh.edge_endpoints(edge_id);
            let equad = edge_quadrature(a, b, edge_degree);
            let ebasis = EdgeBasis::new(q, a, b);
            let vk_e = basis_k.eval(&equad.points);
            let vr_e = basis_r.eval(&equad.points);
            let vb_e = ebasis.eval_params(&equad.params);
            edges.push(EdgeContext {
                edge_id,
                normal,
                length,
                quad: equad,
                basis: ebasis,
                vk: vk_e,
                vr: vr_e,
                vb: vb_e,
            });
        }

        Ok(Self {
            element,
            polygon,
            centroid,
            diameter,
            area,
            k,
            q,
            r,
            quad,
            basis_k,
            basis_r,
            vk,
            gkx,
            gky,
            vr,
            gry,
            grx,
            mass_r,
            edges,
        })
    }

    pub fn dim_pk(&self) -> usize {
        basis::dim_p(self.k)
    }

    pub fn dim_pr(&self) -> usize {
        basis::dim_p(self.r)
    }

    pub fn edge_block(&self) -> usize {
        self.q + 1
    }

    /// Local DOF count: dim P_k + (q+1) per edge.
    pub fn n_local(&self) -> usize {
        self.dim_pk() + self.edges.len() * self.edge_block()
    }

    /// Offset of an edge's block in the local DOF vector.
    pub fn local_edge_offset(&self, local_edge: usize) -> usize {
        self.dim_pk() + local_edge * self.edge_block()
    }

    /// Full-layout global indices of the local DOFs, in local order.
    pub fn global_indices(&self, dofs: &DofMap) -> Vec<usize> {
        let mut idx = Vec::with_capacity(self.n_local());
        let base = dofs.element_offset(self.element);
        idx.extend(base..base + self.dim_pk());
        for e in &self.edges {
            let off = dofs.edge_offset_full(e.edge_id);
            idx.extend(off..off + self.edge_block());
        }
        idx
    }

    /// Gathers the element's local coefficients from a full-layout vector.
    pub fn gather(&self, dofs: &DofMap, full: &[f64]) -> Vec<f64> {
        self.global_indices(dofs).iter().map(|&i| full[i]).collect()
    }
}

/// Builds every element context, in parallel under the `parallel` feature.
pub fn build_contexts(mesh: &PolygonalMesh, space: &WgSpace) -> Result<Vec<ElementContext>> {
    let results = crate::util::map_indexed(mesh.n_elements(), |el| {
        ElementContext::build(mesh, space, el)
    });
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshFamily};

    #[test]
    fn dof_counts_match_formula() {
        let mesh = generate_mesh(&MeshFamily::new(FamilyKind::Square, 2));
        let space = WgSpace::family_default(1, 1, FamilyKind::Square).unwrap();
        let dofs = DofMap::new(&mesh, &space);
        // 4x4 grid: 16 elements, 24 interior edges
        assert_eq!(mesh.n_elements(), 16);
        assert_eq!(dofs.n_interior_edges, 24);
        assert_eq!(dofs.free_dim, 16 * 3 + 24 * 2);
        assert_eq!(dofs.full_dim, 16 * 3 + mesh.n_edges() * 2);
        assert_eq!(
            dofs.free_dim,
            mesh.n_elements() * space.dim_pk() + dofs.n_interior_edges * space.edge_block()
        );
    }

    #[test]
    fn space_invariants_enforced() {
        assert!(WgSpace::new(1, 2, WeakDegree::Fixed(2)).is_err()); // q > k
        assert!(WgSpace::new(2, 1, WeakDegree::Fixed(1)).is_err()); // r < k
        let s = WgSpace::new(2, 2, WeakDegree::Theoretical).unwrap();
        assert_eq!(s.r_for(true, 3), 4); // k-1+N
        assert_eq!(s.r_for(false, 5), 11); // k-1+2N
    }

    #[test]
    fn restrict_expand_roundtrip() {
        let mesh = generate_mesh(&MeshFamily::new(FamilyKind::Triangular, 2));
        let space = WgSpace::family_default(2, 2, FamilyKind::Triangular).unwrap();
        let dofs = DofMap::new(&mesh, &space);
        let full: Vec<f64> = (0..dofs.full_dim).map(|i| i as f64).collect();
        let free = dofs.restrict(&full);
        assert_eq!(free.len(), dofs.free_dim);
        let back = dofs.expand(&free, Some(&full));
        assert_eq!(back, full);
    }

    #[test]
    fn contexts_build_on_all_families() {
        for kind in [FamilyKind::Triangular, FamilyKind::Square, FamilyKind::Nonconvex] {
            let mesh = generate_mesh(&MeshFamily::new(kind, 1));
            let space = WgSpace::family_default(2, 2, kind).unwrap();
            let ctxs = build_contexts(&mesh, &space).unwrap();
            assert_eq!(ctxs.len(), mesh.n_elements());
            for ctx in &ctxs {
                assert_eq!(ctx.n_local(), ctx.dim_pk() + ctx.edges.len() * (space.q + 1));
                // rule weights sum to the element area
                let w: f64 = ctx.quad.weights.iter().sum();
                assert!(((w - ctx.area) / ctx.area).abs() < 1e-13);
            }
        }
    }
}
