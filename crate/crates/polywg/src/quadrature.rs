//! Numerical integration on segments, triangles, and simple polygons.
//!
//! Polygon rules are assembled from a triangulation (ear clipping, so reflex
//! vertices are fine) with a collapsed tensor Gauss rule on each triangle.
//! All rules carry the polynomial degree they integrate exactly.

use crate::error::Error;
use crate::geometry::{self, Point};

/// Points and positive weights integrating polynomials up to
/// `exactness_degree` over a 2D region.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl QuadratureRule {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate<F: Fn(Point) -> f64>(&self, f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

/// Quadrature on a straight edge: 2D points on the segment plus the signed
/// 1D parameter in [-1, 1] along the canonical direction.
#[derive(Clone, Debug)]
pub struct EdgeQuadrature {
    pub points: Vec<Point>,
    /// Parameters in [-1, 1] measured from the midpoint along (end - start).
    pub params: Vec<f64>,
    /// Weights summing to the edge length.
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

/// Gauss-Legendre nodes/weights on [-1, 1], by Newton iteration on the
/// three-term recurrence. Supports arbitrary n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        // evaluate P_n and P_n' by the three-term recurrence
        let eval = |x: f64| -> (f64, f64) {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pn1) = if n == 1 { (x, 1.0) } else { (p1, p0) };
            (pn, n as f64 * (x * pn - pn1) / (x * x - 1.0))
        };
        for _ in 0..100 {
            let (pn, dp) = eval(x);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = eval(x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss rule on the segment from `a` to `b`, exact for arclength
/// polynomials of degree `d`, using ceil((d+1)/2) points.
pub fn edge_quadrature(a: Point, b: Point, d: usize) -> EdgeQuadrature {
    let n = (d + 1).div_ceil(2);
    let (nodes, ws) = gauss_legendre(n);
    let mid = (a + b) * 0.5;
    let half = (b - a) * 0.5;
    let len = (b - a).norm();
    EdgeQuadrature {
        points: nodes.iter().map(|&t| mid + half * t).collect(),
        params: nodes,
        weights: ws.iter().map(|&w| w * 0.5 * len).collect(),
        exactness_degree: d,
    }
}

/// Triangulates a simple CCW polygon by ear clipping. Returns vertex-index
/// triples into the input slice.
pub fn triangulate_polygon(poly: &[Point]) -> Result<Vec<[usize; 3]>, Error> {
    let n = poly.len();
    if n < 3 {
        return Err(Error::InvalidPolygon("fewer than 3 vertices".into()));
    }
    if geometry::signed_area(poly) <= 0.0 {
        return Err(Error::InvalidPolygon(
            "non-positive signed area (expected CCW cycle)".into(),
        ));
    }
    if !geometry::is_simple(poly) {
        return Err(Error::InvalidPolygon("self-intersecting boundary".into()));
    }

    let mut remaining: Vec<usize> = (0..n).collect();
    let mut triangles = Vec::with_capacity(n - 2);
    let mut guard = 0usize;
    while remaining.len() > 3 {
        let m = remaining.len();
        let mut clipped = false;
        for idx in 0..m {
            let ia = remaining[(idx + m - 1) % m];
            let ib = remaining[idx];
            let ic = remaining[(idx + 1) % m];
            let (a, b, c) = (poly[ia], poly[ib], poly[ic]);
            // convex corner?
            if (b - a).cross(c - b) <= 0.0 {
                continue;
            }
            // no other remaining vertex inside or on the candidate ear
            let ear = [a, b, c];
            let blocked = remaining
                .iter()
                .filter(|&&j| j != ia && j != ib && j != ic)
                .any(|&j| point_in_or_on_triangle(poly[j], &ear));
            if blocked {
                continue;
            }
            triangles.push([ia, ib, ic]);
            remaining.remove(idx);
            clipped = true;
            break;
        }
        if !clipped {
            return Err(Error::InvalidPolygon("no ear found (degenerate input)".into()));
        }
        guard += 1;
        if guard > 4 * n {
            return Err(Error::InvalidPolygon("ear clipping did not terminate".into()));
        }
    }
    let last = [remaining[0], remaining[1], remaining[2]];
    if (poly[last[1]] - poly[last[0]]).cross(poly[last[2]] - poly[last[0]]) <= 0.0 {
        return Err(Error::InvalidPolygon(
            "clipping left a degenerate final triangle".into(),
        ));
    }
    triangles.push(last);
    Ok(triangles)
}

fn point_in_or_on_triangle(p: Point, tri: &[Point; 3]) -> bool {
    let d0 = (tri[1] - tri[0]).cross(p - tri[0]);
    let d1 = (tri[2] - tri[1]).cross(p - tri[1]);
    let d2 = (tri[0] - tri[2]).cross(p - tri[2]);
    d0 >= 0.0 && d1 >= 0.0 && d2 >= 0.0
}

/// Collapsed tensor (Duffy) Gauss rule on triangle (a, b, c), exact to
/// total degree `d`.
pub fn triangle_quadrature(a: Point, b: Point, c: Point, d: usize) -> QuadratureRule {
    // P(u,v) = a + u(b-a) + uv(c-b) on [0,1]^2 has Jacobian 2|T| u; the
    // pulled-back integrand has u-degree d+1, so n Gauss points need
    // 2n-1 >= d+1.
    let n = (d + 2).div_ceil(2);
    let (nodes, ws) = gauss_legendre(n);
    let unit: Vec<(f64, f64)> = nodes
        .iter()
        .zip(&ws)
        .map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    let area2 = (b - a).cross(c - a); // 2 * signed area
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for &(u, wu) in &unit {
        for &(v, wv) in &unit {
            points.push(a + (b - a) * u + (c - b) * (u * v));
            weights.push(wu * wv * u * area2);
        }
    }
    QuadratureRule {
        points,
        weights,
        exactness_degree: d,
    }
}

/// Quadrature on a simple CCW polygon, exact to total degree `d`, composed
/// from per-triangle rules of a triangulation.
pub fn polygon_quadrature(poly: &[Point], d: usize) -> Result<QuadratureRule, Error> {
    let tris = triangulate_polygon(poly)?;
    polygon_quadrature_from(poly, &tris, d)
}

/// Same, but over a caller-supplied triangulation.
pub fn polygon_quadrature_from(
    poly: &[Point],
    triangles: &[[usize; 3]],
    d: usize,
) -> Result<QuadratureRule, Error> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for t in triangles {
        let r = triangle_quadrature(poly[t[0]], poly[t[1]], poly[t[2]], d);
        points.extend(r.points);
        weights.extend(r.weights);
    }
    if weights.iter().any(|&w| w <= 0.0) {
        return Err(Error::InvalidPolygon(
            "triangulation produced non-positive weights".into(),
        ));
    }
    Ok(QuadratureRule {
        points,
        weights,
        exactness_degree: d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{point_in_polygon, signed_area};
    use approx::assert_relative_eq;

    fn unit_square() -> Vec<Point> {
        vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ]
    }

    /// The reflex test quad: unit cell split point pulled to (0.6, 0.4).
    fn nonconvex_quad() -> Vec<Point> {
        vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.6, 0.4),
        ]
    }

    #[test]
    fn gauss_two_point_nodes() {
        let (nodes, weights) = gauss_legendre(2);
        let r = 1.0 / 3.0f64.sqrt();
        assert_relative_eq!(nodes[0], -r, max_relative = 1e-15);
        assert_relative_eq!(nodes[1], r, max_relative = 1e-15);
        assert_relative_eq!(weights[0], 1.0, max_relative = 1e-15);
    }

    #[test]
    fn gauss_exactness_up_to_degree() {
        for n in 1..=20 {
            let (nodes, weights) = gauss_legendre(n);
            for deg in 0..=(2 * n - 1) {
                let num: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(&x, &w)| w * x.powi(deg as i32))
                    .sum();
                let exact = if deg % 2 == 0 {
                    2.0 / (deg as f64 + 1.0)
                } else {
                    0.0
                };
                assert!(
                    (num - exact).abs() < 1e-13,
                    "n={n} deg={deg}: {num} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn edge_rule_degree_one_is_midpoint() {
        let r = edge_quadrature(Point::new(0.0, 0.0), Point::new(1.0, 0.0), 1);
        assert_eq!(r.points.len(), 1);
        assert_relative_eq!(r.points[0].x, 0.5);
        assert_relative_eq!(r.weights[0], 1.0);
    }

    #[test]
    fn edge_rule_degree_three_two_points() {
        let r = edge_quadrature(Point::new(0.0, 0.0), Point::new(1.0, 0.0), 3);
        assert_eq!(r.points.len(), 2);
        let s = 0.5 - 0.5 / 3.0f64.sqrt();
        assert_relative_eq!(r.points[0].x, s, max_relative = 1e-14);
        // integral of s^3 over the unit edge
        let int: f64 = r
            .points
            .iter()
            .zip(&r.weights)
            .map(|(p, &w)| w * p.x.powi(3))
            .sum();
        assert_relative_eq!(int, 0.25, max_relative = 1e-14);
    }

    #[test]
    fn convex_quad_two_triangles() {
        let tris = triangulate_polygon(&unit_square()).unwrap();
        assert_eq!(tris.len(), 2);
        let area: f64 = tris
            .iter()
            .map(|t| {
                let sq = unit_square();
                signed_area(&[sq[t[0]], sq[t[1]], sq[t[2]]])
            })
            .sum();
        assert_relative_eq!(area, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn nonconvex_quad_triangles_stay_inside() {
        let poly = nonconvex_quad();
        let tris = triangulate_polygon(&poly).unwrap();
        assert_eq!(tris.len(), 2);
        // sample each triangle: interior points must lie inside the polygon
        let mut rng = crate::util::SplitMix64::new(7);
        for t in &tris {
            let (a, b, c) = (poly[t[0]], poly[t[1]], poly[t[2]]);
            for _ in 0..200 {
                let mut u = rng.next_f64();
                let mut v = rng.next_f64();
                if u + v > 1.0 {
                    u = 1.0 - u;
                    v = 1.0 - v;
                }
                // shrink towards the triangle centroid to stay clear of edges
                let p = a + (b - a) * u + (c - a) * v;
                let g = Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0);
                let q = g + (p - g) * 0.99;
                assert!(point_in_polygon(q, &poly), "{q:?} escaped the polygon");
            }
        }
    }

    #[test]
    fn l_shaped_hexagon() {
        // unit square with the top-right quarter removed
        let poly = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 0.5),
            Point::new(0.5, 0.5),
            Point::new(0.5, 1.0),
            Point::new(0.0, 1.0),
        ];
        let tris = triangulate_polygon(&poly).unwrap();
        assert_eq!(tris.len(), 4);
        let area: f64 = tris
            .iter()
            .map(|t| signed_area(&[poly[t[0]], poly[t[1]], poly[t[2]]]))
            .sum();
        assert_relative_eq!(area, 0.75, max_relative = 1e-15);
    }

    #[test]
    fn degenerate_polygon_rejected() {
        let line = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
        ];
        assert!(triangulate_polygon(&line).is_err());
        let bowtie = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        assert!(triangulate_polygon(&bowtie).is_err());
    }

    #[test]
    fn square_rule_total_weight() {
        let r = polygon_quadrature(&unit_square(), 0).unwrap();
        assert_relative_eq!(r.total_weight(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn unit_triangle_xy_moment() {
        let tri = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        let r = polygon_quadrature(&tri, 2).unwrap();
        let int = r.integrate(|p| p.x * p.y);
        assert_relative_eq!(int, 1.0 / 24.0, max_relative = 1e-14);
    }

    #[test]
    fn nonconvex_quad_x2_vs_monte_carlo() {
        let poly = nonconvex_quad();
        let rule = polygon_quadrature(&poly, 4).unwrap();
        let quad_val = rule.integrate(|p| p.x * p.x);

        // Monte Carlo oracle: rejection sampling over the bounding box
        let mut rng = crate::util::SplitMix64::new(0xC0FFEE);
        let n = 1_000_000usize;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        let mut hits = 0u64;
        for _ in 0..n {
            let p = Point::new(rng.next_f64(), rng.next_f64());
            if point_in_polygon(p, &poly) {
                let v = p.x * p.x;
                sum += v;
                sum2 += v * v;
                hits += 1;
            }
        }
        // E[f * 1_inside] over the unit box; box area is 1
        let mean = sum / n as f64;
        let var = (sum2 / n as f64 - mean * mean).max(0.0);
        let stderr = (var / n as f64).sqrt();
        assert!(hits > 0);
        assert!(
            (quad_val - mean).abs() <= 3.0 * stderr,
            "quad {quad_val} vs MC {mean} +- {stderr}"
        );
    }

    /// Random star-shaped polygons: quadrature value must not depend on the
    /// triangulation used to build the rule.
    #[test]
    fn exactness_independent_of_triangulation() {
        let mut rng = crate::util::SplitMix64::new(99);
        for case in 0..20 {
            let nv = 3 + (rng.next_u64() % 6) as usize;
            let mut angles: Vec<f64> = (0..nv)
                .map(|_| rng.uniform(0.0, std::f64::consts::TAU))
                .collect();
            angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
            // guard against duplicate angles
            let ok = angles.windows(2).all(|w| w[1] - w[0] > 1e-3);
            if !ok {
                continue;
            }
            let poly: Vec<Point> = angles
                .iter()
                .map(|&t| {
                    let r = rng.uniform(0.5, 1.5);
                    Point::new(0.3 + r * t.cos(), -0.2 + r * t.sin())
                })
                .collect();
            let d = 6;
            let rule_a = polygon_quadrature(&poly, d).unwrap();

            // second triangulation: clip ears of the rotated vertex cycle,
            // then split every triangle at its centroid
            let m = poly.len();
            let rot: Vec<Point> = (0..m).map(|i| poly[(i + m / 2) % m]).collect();
            let tris_rot = triangulate_polygon(&rot).unwrap();
            let mut rule_b_points = Vec::new();
            let mut rule_b_weights = Vec::new();
            for t in &tris_rot {
                let (a, b, c) = (rot[t[0]], rot[t[1]], rot[t[2]]);
                let g = Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0);
                for (p, q) in [(a, b), (b, c), (c, a)] {
                    let r = triangle_quadrature(p, q, g, d);
                    rule_b_points.extend(r.points);
                    rule_b_weights.extend(r.weights);
                }
            }

            for deg in 0..=d {
                for ax in 0..=deg {
                    let (ax, ay) = (ax as i32, (deg - ax) as i32);
                    let va = rule_a.integrate(|p| p.x.powi(ax) * p.y.powi(ay));
                    let vb: f64 = rule_b_points
                        .iter()
                        .zip(&rule_b_weights)
                        .map(|(&p, &w)| w * p.x.powi(ax) * p.y.powi(ay))
                        .sum();
                    let scale = va.abs().max(vb.abs()).max(1e-30);
                    assert!(
                        (va - vb).abs() / scale < 1e-12,
                        "case {case} monomial x^{ax} y^{ay}: {va} vs {vb}"
                    );
                }
            }
        }
    }

    #[test]
    fn rule_integrates_declared_monomials() {
        // against a reference computed on a second rule of higher degree
        let poly = nonconvex_quad();
        let d = 8;
        let rule = polygon_quadrature(&poly, d).unwrap();
        let refrule = polygon_quadrature(&poly, d + 4).unwrap();
        for deg in 0..=d {
            for ax in 0..=deg {
                let (ax, ay) = (ax as i32, (deg - ax) as i32);
                let v = rule.integrate(|p| p.x.powi(ax) * p.y.powi(ay));
                let r = refrule.integrate(|p| p.x.powi(ax) * p.y.powi(ay));
                let scale = v.abs().max(r.abs()).max(1e-30);
                assert!((v - r).abs() / scale < 1e-12);
            }
        }
    }
}
