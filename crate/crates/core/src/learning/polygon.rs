//! Small convex-polygon toolkit for the projected direction sets.
//!
//! Polygons are vertex lists in counter-clockwise order.

use nalgebra::{Matrix3, Vector2, Vector3};

pub type Polygon = Vec<Vector2<f64>>;

fn cross(o: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    (a - o).perp(&(b - o))
}

/// Convex hull (Andrew's monotone chain), counter-clockwise, collinear points removed.
pub fn convex_hull(points: &[Vector2<f64>]) -> Polygon {
    let mut pts: Vec<Vector2<f64>> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vector2<f64>> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vector2<f64>>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

pub fn area(poly: &[Vector2<f64>]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    (0..n)
        .map(|i| poly[i].perp(&poly[(i + 1) % n]))
        .sum::<f64>()
        / 2.0
}

/// Area centroid, or the vertex mean for degenerate polygons.
pub fn centroid(poly: &[Vector2<f64>]) -> Vector2<f64> {
    let a = area(poly);
    if a.abs() < 1e-18 {
        let sum: Vector2<f64> = poly.iter().sum();
        return sum / poly.len().max(1) as f64;
    }
    let n = poly.len();
    let mut c = Vector2::zeros();
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        c += (p + q) * p.perp(&q);
    }
    c / (6.0 * a)
}

fn segment_distance(p: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * s)).norm()
}

/// Membership with an outward tolerance `tol`.
pub fn contains(poly: &[Vector2<f64>], p: Vector2<f64>, tol: f64) -> bool {
    match poly.len() {
        0 => false,
        1 => (p - poly[0]).norm() <= tol,
        2 => segment_distance(p, poly[0], poly[1]) <= tol,
        n => (0..n).all(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let edge = b - a;
            let len = edge.norm();
            len == 0.0 || edge.perp(&(p - a)) / len >= -tol
        }),
    }
}

/// Intersection of two convex polygons (Sutherland–Hodgman). `clip` must have
/// at least three vertices; the result may be empty.
pub fn clip(subject: &[Vector2<f64>], clip: &[Vector2<f64>]) -> Polygon {
    let mut output: Polygon = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if output.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % n]);
        let edge = b - a;
        let side = |p: Vector2<f64>| edge.perp(&(p - a));
        let input = std::mem::take(&mut output);
        let m = input.len();
        for j in 0..m {
            let cur = input[j];
            let prev = input[(j + m - 1) % m];
            let (sc, sp) = (side(cur), side(prev));
            if sc >= 0.0 {
                if sp < 0.0 {
                    output.push(prev + (cur - prev) * (sp / (sp - sc)));
                }
                output.push(cur);
            } else if sp >= 0.0 {
                output.push(prev + (cur - prev) * (sp / (sp - sc)));
            }
        }
    }
    output.dedup_by(|a, b| (*a - *b).norm() < 1e-15);
    if output.len() > 1 && (output[0] - output[output.len() - 1]).norm() < 1e-15 {
        output.pop();
    }
    output
}

/// Intersection of many convex polygons.
pub fn intersect_all<'a>(mut polys: impl Iterator<Item = &'a Polygon>) -> Polygon {
    let Some(first) = polys.next() else {
        return Vec::new();
    };
    let mut acc = first.clone();
    for p in polys {
        if acc.is_empty() {
            break;
        }
        acc = clip(&acc, p);
    }
    acc
}

/// Center and radius of the largest inscribed circle. Candidates come from
/// every triple of edges; equally good centers are averaged. Degenerate
/// polygons return their centroid with radius zero.
pub fn chebyshev_center(poly: &[Vector2<f64>]) -> (Vector2<f64>, f64) {
    let n = poly.len();
    if n < 3 || area(poly).abs() < 1e-18 {
        return (centroid(poly), 0.0);
    }
    // inward normal form: nᵀx + r ≤ b for each edge
    let edges: Vec<(Vector2<f64>, f64)> = (0..n)
        .filter_map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let d = b - a;
            let len = d.norm();
            (len > 0.0).then(|| {
                let normal = Vector2::new(d.y, -d.x) / len;
                (normal, normal.dot(&a))
            })
        })
        .collect();
    let m = edges.len();
    let scale = poly.iter().map(|p| p.norm()).fold(1e-12, f64::max);
    let tol = 1e-10 * scale;
    let mut best_r = f64::NEG_INFINITY;
    let mut centers: Vec<Vector2<f64>> = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                let rows = [edges[i], edges[j], edges[k]];
                let a = Matrix3::from_fn(|r, c| match c {
                    0 => rows[r].0.x,
                    1 => rows[r].0.y,
                    _ => 1.0,
                });
                let b = Vector3::new(rows[0].1, rows[1].1, rows[2].1);
                let Some(sol) = a.lu().solve(&b) else {
                    continue;
                };
                let (x, r) = (Vector2::new(sol.x, sol.y), sol.z);
                if !r.is_finite() || r < 0.0 {
                    continue;
                }
                if edges.iter().any(|(nrm, off)| nrm.dot(&x) + r > off + tol) {
                    continue;
                }
                if r > best_r + tol {
                    best_r = r;
                    centers.clear();
                    centers.push(x);
                } else if (r - best_r).abs() <= tol {
                    centers.push(x);
                }
            }
        }
    }
    if centers.is_empty() {
        return (centroid(poly), 0.0);
    }
    let sum: Vector2<f64> = centers.iter().sum();
    (sum / centers.len() as f64, best_r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(h: f64) -> Polygon {
        vec![
            Vector2::new(-h, -h),
            Vector2::new(h, -h),
            Vector2::new(h, h),
            Vector2::new(-h, h),
        ]
    }

    #[test]
    fn hull_drops_interior_and_orders_ccw() {
        let pts = vec![
            Vector2::new(1.0, 1.0),
            Vector2::new(0.0, 0.0),
            Vector2::new(0.5, 0.5),
            Vector2::new(1.0, 0.0),
            Vector2::new(0.0, 1.0),
        ];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert!(area(&h) > 0.0);
        assert!((area(&h) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn square_center_and_radius() {
        let (c, r) = chebyshev_center(&square(0.1));
        assert!(c.norm() < 1e-12);
        assert!((r - 0.1).abs() < 1e-12);
        assert!(centroid(&square(0.1)).norm() < 1e-15);
    }

    #[test]
    fn rectangle_center_averages_ties() {
        let rect = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(4.0, 0.0),
            Vector2::new(4.0, 1.0),
            Vector2::new(0.0, 1.0),
        ];
        let (c, r) = chebyshev_center(&rect);
        assert!((r - 0.5).abs() < 1e-12);
        assert!((c - Vector2::new(2.0, 0.5)).norm() < 1e-12);
    }

    #[test]
    fn triangle_incenter() {
        let tri = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(3.0, 0.0),
            Vector2::new(0.0, 4.0),
        ];
        let (c, r) = chebyshev_center(&tri);
        // inradius of a 3-4-5 triangle is 1
        assert!((r - 1.0).abs() < 1e-12);
        assert!((c - Vector2::new(1.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn clipping_overlapping_squares() {
        let a = square(1.0);
        let b: Polygon = square(1.0)
            .into_iter()
            .map(|p| p + Vector2::new(1.0, 1.0))
            .collect();
        let c = clip(&a, &b);
        assert!((area(&c) - 1.0).abs() < 1e-12);
        let far: Polygon = square(1.0)
            .into_iter()
            .map(|p| p + Vector2::new(5.0, 0.0))
            .collect();
        assert!(clip(&a, &far).is_empty());
    }

    #[test]
    fn membership_with_tolerance() {
        let s = square(1.0);
        assert!(contains(&s, Vector2::new(0.99, 0.0), 0.0));
        assert!(!contains(&s, Vector2::new(1.01, 0.0), 0.0));
        assert!(contains(&s, Vector2::new(1.01, 0.0), 0.02));
        assert!(contains(
            &[Vector2::new(1.0, 1.0)],
            Vector2::new(1.0, 1.0 + 1e-9),
            1e-8
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn points() -> impl Strategy<Value = Vec<Vector2<f64>>> {
            prop::collection::vec(
                (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(x, y)| Vector2::new(x, y)),
                3..12,
            )
        }

        proptest! {
            #[test]
            fn hull_contains_inputs(pts in points()) {
                let h = convex_hull(&pts);
                for p in &pts {
                    prop_assert!(contains(&h, *p, 1e-12));
                }
            }

            #[test]
            fn clip_result_lies_in_both(a in points(), b in points()) {
                let (ha, hb) = (convex_hull(&a), convex_hull(&b));
                prop_assume!(ha.len() >= 3 && hb.len() >= 3);
                let c = clip(&ha, &hb);
                for p in &c {
                    prop_assert!(contains(&ha, *p, 1e-9));
                    prop_assert!(contains(&hb, *p, 1e-9));
                }
                prop_assert!(area(&c) <= area(&ha).min(area(&hb)) + 1e-12);
            }

            #[test]
            fn chebyshev_circle_is_inscribed(pts in points()) {
                let h = convex_hull(&pts);
                prop_assume!(h.len() >= 3 && area(&h) > 1e-3);
                let (c, r) = chebyshev_center(&h);
                prop_assert!(contains(&h, c, 1e-9));
                prop_assert!(r > 0.0);
                let n = h.len();
                for i in 0..n {
                    let d = segment_distance(c, h[i], h[(i + 1) % n]);
                    prop_assert!(d >= r - 1e-9);
                }
            }
        }
    }
}
