//! Polygonal meshes on rectangular domains: generation, derived edge
//! topology, and invariant checking.
//!
//! Three built-in families, all refining dyadically (2^level cells per axis):
//! * `triangular` - each cell split along its main diagonal;
//! * `square`     - the axis-aligned cells themselves;
//! * `nonconvex`  - each cell split by the zigzag a -> a+(0.7,0.45)s ->
//!   a+(0.3,0.55)s -> a+(s,s) into two pentagons, each with exactly one
//!   reflex vertex (a single split point cannot make both pieces reflex,
//!   so the path bends twice). Cell sides stay whole, so neighboring cells
//!   always meet along single matching edges, and the split points avoid
//!   every line through two cell corners so no triangulation degenerates.

mod io;

pub use io::{read_mesh, write_mesh};

use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use std::collections::HashMap;
use std::fmt;

/// Axis-aligned rectangular domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

impl Default for Rect {
    /// The (-1,1)^2 computational domain.
    fn default() -> Self {
        Rect::new(-1.0, -1.0, 1.0, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    Triangular,
    Square,
    Nonconvex,
}

impl FamilyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyKind::Triangular => "triangular",
            FamilyKind::Square => "square",
            FamilyKind::Nonconvex => "nonconvex",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "triangular" => Ok(FamilyKind::Triangular),
            "square" => Ok(FamilyKind::Square),
            "nonconvex" => Ok(FamilyKind::Nonconvex),
            other => Err(Error::Config(format!("unknown mesh family `{other}`"))),
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A mesh family at a refinement level: 2^level cells per axis.
#[derive(Clone, Copy, Debug)]
pub struct MeshFamily {
    pub family: FamilyKind,
    pub level: u32,
    pub domain: Rect,
}

impl MeshFamily {
    pub fn new(family: FamilyKind, level: u32) -> Self {
        Self {
            family,
            level,
            domain: Rect::default(),
        }
    }

    pub fn cells_per_axis(&self) -> usize {
        1usize << self.level
    }
}

/// One mesh edge with its canonical direction (the traversal direction of
/// the first element that used it).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    /// Endpoint vertex indices in canonical order.
    pub vertices: [usize; 2],
    /// Element on whose boundary the edge is traversed in canonical order.
    pub left: usize,
    /// Element traversing the edge in reverse, if any.
    pub right: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

/// An edge as seen from one element: which edge, and whether the element
/// traverses it against the canonical direction.
#[derive(Clone, Copy, Debug)]
pub struct EdgeUse {
    pub edge: usize,
    pub reversed: bool,
}

/// A failed mesh invariant; data, not an exception.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NegativeArea { element: usize, area: f64 },
    NotSimple { element: usize },
    TooFewVertices { element: usize },
    VertexOutOfRange { element: usize, vertex: usize },
    EdgeOrientation { vertices: [usize; 2], elements: Vec<usize> },
    EdgeOveruse { vertices: [usize; 2], uses: usize },
    AreaDefect { elements_total: f64, domain_total: f64 },
    NormalNotOutward { element: usize, local_edge: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeArea { element, area } => {
                write!(f, "negative signed area, element {element} (area {area:.3e})")
            }
            Violation::NotSimple { element } => {
                write!(f, "self-intersecting boundary, element {element}")
            }
            Violation::TooFewVertices { element } => {
                write!(f, "fewer than 3 vertices, element {element}")
            }
            Violation::VertexOutOfRange { element, vertex } => {
                write!(f, "vertex index {vertex} out of range, element {element}")
            }
            Violation::EdgeOrientation { vertices, elements } => write!(
                f,
                "edge ({}, {}) traversed in the same direction by elements {elements:?}",
                vertices[0], vertices[1]
            ),
            Violation::EdgeOveruse { vertices, uses } => write!(
                f,
                "edge ({}, {}) used by {uses} element boundaries",
                vertices[0], vertices[1]
            ),
            Violation::AreaDefect {
                elements_total,
                domain_total,
            } => write!(
                f,
                "area defect: element total {elements_total:.17e} vs covered domain {domain_total:.17e}"
            ),
            Violation::NormalNotOutward { element, local_edge } => {
                write!(f, "normal not outward, element {element}, local edge {local_edge}")
            }
        }
    }
}

/// An immutable polygonal mesh with derived edge topology.
#[derive(Clone, Debug)]
pub struct PolygonalMesh {
    pub vertices: Vec<Point>,
    /// CCW vertex-index cycles.
    pub elements: Vec<Vec<usize>>,
    pub edges: Vec<Edge>,
    /// Per element, its edges in boundary-traversal order.
    pub element_edges: Vec<Vec<EdgeUse>>,
    pub element_diameter: Vec<f64>,
    pub element_centroid: Vec<Point>,
    pub element_area: Vec<f64>,
    /// max over elements of the element diameter
    pub mesh_size: f64,
    /// Domain the mesh claims to cover, when known. Element areas are
    /// checked against it in `validate`; meshes read from files carry none.
    pub domain: Option<Rect>,
    /// Raw edge incidence as encountered during construction; kept so that
    /// `validate` can report malformed connectivity instead of panicking.
    edge_uses: Vec<Vec<(usize, bool)>>,
}

impl PolygonalMesh {
    /// Builds a mesh from raw vertices and element cycles. Lenient: derived
    /// quantities are computed best-effort and problems surface in
    /// [`PolygonalMesh::validate`].
    pub fn from_raw(vertices: Vec<Point>, elements: Vec<Vec<usize>>) -> Self {
        let nv = vertices.len();
        let mut edges: Vec<Edge> = Vec::new();
        let mut edge_uses: Vec<Vec<(usize, bool)>> = Vec::new();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut element_edges = Vec::with_capacity(elements.len());

        for (el, cycle) in elements.iter().enumerate() {
            let mut uses = Vec::with_capacity(cycle.len());
            for i in 0..cycle.len() {
                let a = cycle[i];
                let b = cycle[(i + 1) % cycle.len()];
                if a >= nv || b >= nv || a == b {
                    // recorded via validate; skip the broken edge
                    continue;
                }
                let key = (a.min(b), a.max(b));
                let id = *lookup.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        vertices: [a, b],
                        left: el,
                        right: None,
                    });
                    edge_uses.push(Vec::new());
                    edges.len() - 1
                });
                let reversed = edges[id].vertices != [a, b];
                if reversed && edges[id].right.is_none() {
                    edges[id].right = Some(el);
                }
                edge_uses[id].push((el, !reversed));
                uses.push(EdgeUse { edge: id, reversed });
            }
            element_edges.push(uses);
        }

        let mut element_diameter = Vec::with_capacity(elements.len());
        let mut element_centroid = Vec::with_capacity(elements.len());
        let mut element_area = Vec::with_capacity(elements.len());
        for cycle in &elements {
            let poly: Vec<Point> = cycle.iter().filter(|&&v| v < nv).map(|&v| vertices[v]).collect();
            if poly.len() < 3 {
                element_diameter.push(0.0);
                element_centroid.push(Point::new(0.0, 0.0));
                element_area.push(0.0);
                continue;
            }
            let area = geometry::signed_area(&poly);
            element_diameter.push(geometry::diameter(&poly));
            element_centroid.push(if area != 0.0 {
                geometry::centroid(&poly)
            } else {
                poly[0]
            });
            element_area.push(area);
        }
        let mesh_size = element_diameter.iter().cloned().fold(0.0, f64::max);

        PolygonalMesh {
            vertices,
            elements,
            edges,
            element_edges,
            element_diameter,
            element_centroid,
            element_area,
            mesh_size,
            domain: None,
            edge_uses,
        }
    }

    /// Declares the domain the mesh is meant to cover, enabling the
    /// area-defect check in `validate`.
    pub fn with_domain(mut self, domain: Rect) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_interior_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_boundary()).count()
    }

    pub fn n_boundary_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.is_boundary()).count()
    }

    /// Element polygon as points.
    pub fn polygon(&self, element: usize) -> Vec<Point> {
        self.elements[element]
            .iter()
            .map(|&v| self.vertices[v])
            .collect()
    }

    pub fn edge_endpoints(&self, edge: usize) -> (Point, Point) {
        let e = &self.edges[edge];
        (self.vertices[e.vertices[0]], self.vertices[e.vertices[1]])
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let (a, b) = self.edge_endpoints(edge);
        a.dist(b)
    }

    /// Ordered boundary traversal of an element: (edge id, outward unit
    /// normal, edge length).
    pub fn element_edges(&self, element: usize) -> Result<Vec<(usize, Point, f64)>> {
        if element >= self.elements.len() {
            return Err(Error::DegenerateElement {
                element,
                message: "element id out of range".into(),
            });
        }
        Ok(self.element_edges[element]
            .iter()
            .map(|eu| {
                let (a, b) = self.edge_endpoints(eu.edge);
                let dir = if eu.reversed { a - b } else { b - a };
                let len = dir.norm();
                (eu.edge, dir.rot_cw() * (1.0 / len), len)
            })
            .collect())
    }

    /// Runs every mesh invariant; returns the list of failures (empty when
    /// the mesh is valid).
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let nv = self.vertices.len();

        for (el, cycle) in self.elements.iter().enumerate() {
            if cycle.len() < 3 {
                out.push(Violation::TooFewVertices { element: el });
                continue;
            }
            for &v in cycle {
                if v >= nv {
                    out.push(Violation::VertexOutOfRange { element: el, vertex: v });
                }
            }
            if cycle.iter().any(|&v| v >= nv) {
                continue;
            }
            let poly = self.polygon(el);
            let area = geometry::signed_area(&poly);
            if area <= 0.0 {
                out.push(Violation::NegativeArea { element: el, area });
            }
            if !geometry::is_simple(&poly) {
                out.push(Violation::NotSimple { element: el });
            }
        }

        for (id, uses) in self.edge_uses.iter().enumerate() {
            if uses.len() > 2 {
                out.push(Violation::EdgeOveruse {
                    vertices: self.edges[id].vertices,
                    uses: uses.len(),
                });
            } else if uses.len() == 2 && uses[0].1 == uses[1].1 {
                out.push(Violation::EdgeOrientation {
                    vertices: self.edges[id].vertices,
                    elements: uses.iter().map(|u| u.0).collect(),
                });
            }
        }

        if out.is_empty() {
            // Gaps and overlaps are invisible to pure topology (element areas
            // always match the boundary loops), so the area check needs the
            // declared domain.
            if let Some(domain) = self.domain {
                let elements_total: f64 = self.element_area.iter().sum();
                let domain_total = domain.area();
                let scale = elements_total.abs().max(domain_total.abs()).max(1e-300);
                if ((elements_total - domain_total) / scale).abs() > 1e-12 {
                    out.push(Violation::AreaDefect {
                        elements_total,
                        domain_total,
                    });
                }
            }

            for el in 0..self.n_elements() {
                let poly = self.polygon(el);
                if geometry::is_convex(&poly) {
                    // outward means: points from the centroid's side out
                    let c = self.element_centroid[el];
                    for (i, (edge, normal, _)) in
                        self.element_edges(el).unwrap().iter().enumerate()
                    {
                        let (a, b) = self.edge_endpoints(*edge);
                        let mid = (a + b) * 0.5;
                        if normal.dot(mid - c) <= 0.0 {
                            out.push(Violation::NormalNotOutward { element: el, local_edge: i });
                        }
                    }
                }
                // nonconvex elements: positive signed area already certifies
                // the CCW orientation the normals are derived from
            }
        }

        out
    }
}

/// Generates a mesh of the requested family. Total on valid input
/// (level >= 1 enforced by construction of [`MeshFamily`]).
pub fn generate_mesh(family: &MeshFamily) -> PolygonalMesh {
    let n = family.cells_per_axis();
    let d = family.domain;
    let sx = (d.x1 - d.x0) / n as f64;
    let sy = (d.y1 - d.y0) / n as f64;
    let vx = |i: usize| d.x0 + i as f64 * sx;
    let vy = |j: usize| d.y0 + j as f64 * sy;

    match family.family {
        FamilyKind::Square | FamilyKind::Triangular => {
            let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
            for j in 0..=n {
                for i in 0..=n {
                    vertices.push(Point::new(vx(i), vy(j)));
                }
            }
            let vid = |i: usize, j: usize| j * (n + 1) + i;
            let mut elements = Vec::new();
            for j in 0..n {
                for i in 0..n {
                    let (a, b, c, dd) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
                    match family.family {
                        FamilyKind::Square => elements.push(vec![a, b, c, dd]),
                        FamilyKind::Triangular => {
                            // split along the main diagonal a-c
                            elements.push(vec![a, b, c]);
                            elements.push(vec![a, c, dd]);
                        }
                        FamilyKind::Nonconvex => unreachable!(),
                    }
                }
            }
            PolygonalMesh::from_raw(vertices, elements).with_domain(d)
        }
        FamilyKind::Nonconvex => {
            // corner grid first, then two interior zigzag points per cell
            let mut vertices = Vec::with_capacity((n + 1) * (n + 1) + 2 * n * n);
            for j in 0..=n {
                for i in 0..=n {
                    vertices.push(Point::new(vx(i), vy(j)));
                }
            }
            let vid = |i: usize, j: usize| j * (n + 1) + i;
            let base = (n + 1) * (n + 1);
            for j in 0..n {
                for i in 0..n {
                    vertices.push(Point::new(vx(i) + 0.7 * sx, vy(j) + 0.45 * sy));
                    vertices.push(Point::new(vx(i) + 0.3 * sx, vy(j) + 0.55 * sy));
                }
            }
            let p1 = |i: usize, j: usize| base + 2 * (j * n + i);
            let p2 = |i: usize, j: usize| base + 2 * (j * n + i) + 1;
            let mut elements = Vec::new();
            for j in 0..n {
                for i in 0..n {
                    let (a, b, c, dd) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
                    // lower-right pentagon, reflex at p1
                    elements.push(vec![a, b, c, p2(i, j), p1(i, j)]);
                    // upper-left pentagon, reflex at p2
                    elements.push(vec![a, p1(i, j), p2(i, j), c, dd]);
                }
            }
            PolygonalMesh::from_raw(vertices, elements).with_domain(d)
        }
    }
}
