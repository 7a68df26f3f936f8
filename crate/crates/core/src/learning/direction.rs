//! Sets of admissible desired directions and their consensus.
//!
//! While sliding, the force the tool applies lies between the direction of
//! motion and the direction of the contact force, so any push inside the
//! sector spanned by the two would have produced the observed motion. The
//! desired direction is a direction shared by (almost) all of these sets.
//!
//! In the plane a set is an angular interval. In space the sector is widened
//! perpendicularly into a four-sided cone; cones are compared after a
//! gnomonic projection onto a common plane, where they become convex
//! polygons.

use std::f64::consts::{PI, TAU};

use nalgebra::{Vector2, Vector3};

use super::demonstration::{Demonstration, Dimension};
use super::polygon::{self, Polygon};
use crate::error::{Error, Result};

/// One usable sample: unit motion direction and unit force direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionPair {
    /// Index of the sample in the (resampled) demonstration.
    pub index: usize,
    pub motion: Vector3<f64>,
    pub force: Vector3<f64>,
    pub force_magnitude: f64,
}

/// Rule for "contact has been detected".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactDetection {
    /// Force magnitude that counts as contact [N].
    pub threshold: f64,
    /// Number of consecutive samples above the threshold.
    pub run_length: usize,
}

impl ContactDetection {
    /// Per-sample contact flags.
    pub fn mask(&self, demo: &Demonstration) -> Vec<bool> {
        let above: Vec<bool> = demo
            .samples
            .iter()
            .map(|s| s.force.norm() > self.threshold)
            .collect();
        let run = self.run_length.max(1);
        let mut mask = vec![false; above.len()];
        let mut i = 0;
        while i < above.len() {
            if !above[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i < above.len() && above[i] {
                i += 1;
            }
            if i - start >= run {
                mask[start..i].iter_mut().for_each(|m| *m = true);
            }
        }
        mask
    }
}

/// Motion/force direction pairs of a demonstration.
///
/// Samples that move less than `min_motion` to the next sample are skipped.
/// With `require_contact` only samples flagged by `detection` are returned,
/// which yields an empty list for a free-space demonstration. Forces at or
/// below the detection threshold are treated as absent and the force direction
/// then equals the motion direction.
pub fn actual_directions(
    demo: &Demonstration,
    min_motion: f64,
    detection: &ContactDetection,
    require_contact: bool,
) -> Vec<DirectionPair> {
    let mask = if require_contact {
        detection.mask(demo)
    } else {
        vec![true; demo.len()]
    };
    demo.samples
        .windows(2)
        .enumerate()
        .filter(|(k, _)| mask[*k])
        .filter_map(|(k, w)| {
            let disp = w[1].position - w[0].position;
            let dist = disp.norm();
            if !(dist >= min_motion) || dist == 0.0 {
                return None;
            }
            let motion = disp / dist;
            let magnitude = w[0].force.norm();
            let force = if magnitude > detection.threshold && magnitude > 0.0 {
                w[0].force / magnitude
            } else {
                motion
            };
            Some(DirectionPair {
                index: k,
                motion,
                force,
                force_magnitude: magnitude,
            })
        })
        .collect()
}

/// Directions that could have produced one observed motion.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    pub dimension: Dimension,
    /// Planar: the two ends of the arc, normally `[motion, force]`.
    /// Spatial: the four cone edges.
    pub generators: Vec<Vector3<f64>>,
    /// Widening half-angle [rad]; zero for planar motion/force sectors.
    pub alpha: f64,
}

fn angle_of(v: &Vector3<f64>) -> f64 {
    v.y.atan2(v.x)
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

/// Perpendicular widening `tan α · normalize(force × motion)`.
pub fn perpendicular_extension(
    motion: &Vector3<f64>,
    force: &Vector3<f64>,
    alpha: f64,
) -> Result<Vector3<f64>> {
    let axis = force.cross(motion);
    let n = axis.norm();
    if n < 1e-9 {
        return Err(Error::DegenerateSector);
    }
    Ok(axis * (alpha.tan() / n))
}

/// Orthonormal pair perpendicular to the unit vector `d`, built from the
/// coordinate axis least aligned with it.
pub fn perpendicular_basis(d: &Vector3<f64>) -> [Vector3<f64>; 2] {
    let axes = [Vector3::x(), Vector3::y(), Vector3::z()];
    let a = axes
        .iter()
        .min_by(|a, b| a.dot(d).abs().total_cmp(&b.dot(d).abs()))
        .copied()
        .unwrap_or_else(Vector3::x);
    let e1 = (a - d * a.dot(d)).normalize();
    let e2 = d.cross(&e1);
    [e1, e2]
}

/// Gnomonic coordinates of `v` on the plane tangent to the unit `center`.
fn gnomonic(
    v: &Vector3<f64>,
    center: &Vector3<f64>,
    basis: &[Vector3<f64>; 2],
) -> Option<Vector2<f64>> {
    let h = v.dot(center);
    (h > 1e-9).then(|| Vector2::new(v.dot(&basis[0]), v.dot(&basis[1])) / h)
}

fn ungnomonic(p: &Vector2<f64>, center: &Vector3<f64>, basis: &[Vector3<f64>; 2]) -> Vector3<f64> {
    (center + basis[0] * p.x + basis[1] * p.y).normalize()
}

impl DirectionSet {
    /// Builds the set from unit motion and force directions.
    pub fn build(
        motion: Vector3<f64>,
        force: Vector3<f64>,
        alpha: f64,
        dimension: Dimension,
    ) -> Result<Self> {
        let motion = motion.normalize();
        let force = force.normalize();
        match dimension {
            Dimension::Planar => {
                if motion.dot(&force) < -1.0 + 1e-12 {
                    return Err(Error::DegenerateSector);
                }
                Ok(Self {
                    dimension,
                    generators: vec![motion, force],
                    alpha: 0.0,
                })
            }
            Dimension::Spatial => {
                let eps = perpendicular_extension(&motion, &force, alpha)?;
                if motion.dot(&force) < -1.0 + 1e-9 {
                    return Err(Error::DegenerateSector);
                }
                let generators = [motion + eps, motion - eps, force - eps, force + eps]
                    .iter()
                    .map(|g| g.normalize())
                    .collect();
                Ok(Self {
                    dimension,
                    generators,
                    alpha,
                })
            }
        }
    }

    /// Directions within `alpha` of `direction`: an arc in the plane, a
    /// square pyramid in space. Stands in for a set whose force carries no
    /// direction of its own.
    pub fn around(direction: Vector3<f64>, alpha: f64, dimension: Dimension) -> Self {
        match dimension {
            Dimension::Planar => {
                let d = direction.normalize();
                let turn = |a: f64| {
                    Vector3::new(
                        d.x * a.cos() - d.y * a.sin(),
                        d.x * a.sin() + d.y * a.cos(),
                        0.0,
                    )
                };
                Self {
                    dimension,
                    generators: vec![turn(-alpha), turn(alpha)],
                    alpha,
                }
            }
            Dimension::Spatial => Self::cone_around(direction, alpha),
        }
    }

    /// Square pyramid of half-angle `alpha` around `direction`; stands in for
    /// a spatial set whose motion and force directions coincide.
    pub fn cone_around(direction: Vector3<f64>, alpha: f64) -> Self {
        let d = direction.normalize();
        let [e1, e2] = perpendicular_basis(&d);
        let t = alpha.tan();
        let generators = [d + e1 * t, d + e2 * t, d - e1 * t, d - e2 * t]
            .iter()
            .map(|g| g.normalize())
            .collect();
        Self {
            dimension: Dimension::Spatial,
            generators,
            alpha,
        }
    }

    /// Planar sector as `(start, width)` with `start ∈ [-π, π)` and `width ∈ [0, π)`.
    pub fn interval(&self) -> (f64, f64) {
        let a = angle_of(&self.generators[0]);
        let b = angle_of(&self.generators[1]);
        let delta = wrap_angle(b - a);
        if delta >= 0.0 {
            (wrap_angle(a), delta)
        } else {
            (wrap_angle(b), -delta)
        }
    }

    /// Membership with an angular tolerance [rad].
    pub fn contains(&self, direction: &Vector3<f64>, tolerance: f64) -> bool {
        match self.dimension {
            Dimension::Planar => {
                let (start, width) = self.interval();
                let offset = (angle_of(direction) - start + tolerance).rem_euclid(TAU);
                offset <= width + 2.0 * tolerance
            }
            Dimension::Spatial => {
                let center = self.generators.iter().sum::<Vector3<f64>>().normalize();
                let basis = perpendicular_basis(&center);
                let Some(p) = gnomonic(&direction.normalize(), &center, &basis) else {
                    return false;
                };
                let pts: Vec<Vector2<f64>> = self
                    .generators
                    .iter()
                    .filter_map(|g| gnomonic(g, &center, &basis))
                    .collect();
                polygon::contains(&polygon::convex_hull(&pts), p, tolerance)
            }
        }
    }
}

/// Directions shared by enough of the input sets.
#[derive(Debug, Clone, PartialEq)]
pub enum DirectionWindow {
    /// Angular interval `[start, start + width]`.
    Arc { start: f64, width: f64 },
    /// Convex region on the plane tangent to `center`.
    Region {
        center: Vector3<f64>,
        basis: [Vector3<f64>; 2],
        polygon: Polygon,
    },
}

/// Result of intersecting direction sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Intersection {
    pub window: DirectionWindow,
    /// Number of sets containing the window's chosen direction.
    pub coverage: usize,
    pub required: usize,
    pub total: usize,
}

/// Sets a direction must belong to: `⌈(1 − ρ) N⌉`.
pub fn required_count(total: usize, outlier_fraction: f64) -> usize {
    ((1.0 - outlier_fraction) * total as f64 - 1e-9)
        .ceil()
        .max(1.0) as usize
}

/// Directions contained in at least `⌈(1 − ρ) N⌉` of the `N` sets.
///
/// In the plane the circle is swept exactly; sets are padded by
/// `angle_tolerance` so zero-width sectors still have a common point. Among
/// several qualifying arcs the one reaching the highest coverage wins, then
/// the widest. In space the full intersection is tried first; failing that,
/// the deepest polygon vertex or centroid seeds an iteration that intersects
/// the sets containing the current Chebyshev center until membership settles.
pub fn intersect_direction_sets(
    sets: &[DirectionSet],
    outlier_fraction: f64,
    angle_tolerance: f64,
) -> Result<Intersection> {
    if sets.is_empty() {
        return Err(Error::invalid("no direction sets to intersect"));
    }
    if !(0.0..0.5).contains(&outlier_fraction) {
        return Err(Error::invalid(format!(
            "outlier fraction {outlier_fraction} outside [0, 0.5)"
        )));
    }
    let dimension = sets[0].dimension;
    if sets.iter().any(|s| s.dimension != dimension) {
        return Err(Error::invalid("direction sets mix planar and spatial data"));
    }
    let required = required_count(sets.len(), outlier_fraction);
    match dimension {
        Dimension::Planar => intersect_arcs(sets, required, angle_tolerance),
        Dimension::Spatial => intersect_regions(sets, required, angle_tolerance),
    }
}

fn intersect_arcs(sets: &[DirectionSet], required: usize, tol: f64) -> Result<Intersection> {
    let total = sets.len();
    let arcs: Vec<(f64, f64)> = sets
        .iter()
        .map(|s| {
            let (start, width) = s.interval();
            ((start - tol).rem_euclid(TAU), width + 2.0 * tol)
        })
        .collect();
    let coverage = |theta: f64| {
        arcs.iter()
            .filter(|(lo, len)| {
                let d = (theta - lo).rem_euclid(TAU);
                d <= *len || d >= TAU - 1e-15
            })
            .count()
    };

    let mut cuts: Vec<f64> = arcs
        .iter()
        .flat_map(|(lo, len)| [*lo, (lo + len).rem_euclid(TAU)])
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    // atoms alternate: the cut point itself, then the open arc to the next cut
    struct Atom {
        start: f64,
        end: f64,
        coverage: usize,
    }
    let m = cuts.len();
    let mut atoms = Vec::with_capacity(2 * m);
    for j in 0..m {
        let a = cuts[j];
        let b = if j + 1 < m {
            cuts[j + 1]
        } else {
            cuts[0] + TAU
        };
        atoms.push(Atom {
            start: a,
            end: a,
            coverage: coverage(a),
        });
        if b > a {
            atoms.push(Atom {
                start: a,
                end: b,
                coverage: coverage(0.5 * (a + b)),
            });
        }
    }
    let best = atoms.iter().map(|a| a.coverage).max().unwrap_or(0);
    if best < required {
        return Err(Error::NoConsistentDirection {
            best,
            required,
            total,
        });
    }
    // a threshold met everywhere leaves no boundary; fall back to the peak
    let threshold = if atoms.iter().all(|a| a.coverage >= required) {
        best
    } else {
        required
    };

    let n = atoms.len();
    let Some(first_gap) = (0..n).find(|&i| atoms[i].coverage < threshold) else {
        // every atom is at peak coverage: the whole circle qualifies
        return Ok(Intersection {
            window: DirectionWindow::Arc {
                start: -PI,
                width: TAU,
            },
            coverage: best,
            required,
            total,
        });
    };
    // (start angle, width, peak coverage)
    let mut runs: Vec<(f64, f64, usize)> = Vec::new();
    let mut current: Option<(f64, f64, usize)> = None;
    for step in 1..=n {
        let i = (first_gap + step) % n;
        let atom = &atoms[i];
        // unwrap so runs crossing 2π stay contiguous
        let offset = if i <= first_gap { TAU } else { 0.0 };
        if atom.coverage >= threshold {
            let (s, e) = (atom.start + offset, atom.end + offset);
            current = Some(match current {
                None => (s, e, atom.coverage),
                Some((s0, _, peak)) => (s0, e, peak.max(atom.coverage)),
            });
        } else if let Some((s, e, peak)) = current.take() {
            runs.push((s, e - s, peak));
        }
    }
    if let Some((s, e, peak)) = current {
        runs.push((s, e - s, peak));
    }
    let (start, width, _) = runs
        .into_iter()
        .max_by(|a, b| a.2.cmp(&b.2).then(a.1.total_cmp(&b.1)))
        .ok_or(Error::NoConsistentDirection {
            best,
            required,
            total,
        })?;
    let mid = start + 0.5 * width;
    let chosen = Vector3::new(mid.cos(), mid.sin(), 0.0);
    let covered = sets.iter().filter(|s| s.contains(&chosen, tol)).count();
    Ok(Intersection {
        window: DirectionWindow::Arc {
            start: wrap_angle(start),
            width,
        },
        coverage: covered,
        required,
        total,
    })
}

fn intersect_regions(sets: &[DirectionSet], required: usize, tol: f64) -> Result<Intersection> {
    let total = sets.len();
    let sum: Vector3<f64> = sets.iter().flat_map(|s| s.generators.iter()).sum();
    if sum.norm() < 1e-12 {
        return Err(Error::NoConsistentDirection {
            best: 0,
            required,
            total,
        });
    }
    let center = sum.normalize();
    let basis = perpendicular_basis(&center);
    // sets reaching behind the projection plane cannot hold a common direction
    let polys: Vec<Polygon> = sets
        .iter()
        .map(|s| {
            let pts: Option<Vec<Vector2<f64>>> = s
                .generators
                .iter()
                .map(|g| gnomonic(g, &center, &basis))
                .collect();
            pts.map(|p| polygon::convex_hull(&p)).unwrap_or_default()
        })
        .collect();
    let region = |polygon: Polygon, coverage: usize| Intersection {
        window: DirectionWindow::Region {
            center,
            basis,
            polygon,
        },
        coverage,
        required,
        total,
    };
    let depth = |p: Vector2<f64>| {
        polys
            .iter()
            .filter(|q| polygon::contains(q, p, tol))
            .count()
    };
    let members = |p: Vector2<f64>| -> Vec<usize> {
        (0..polys.len())
            .filter(|&i| polygon::contains(&polys[i], p, tol))
            .collect()
    };

    if polys.iter().all(|p| p.len() >= 3) {
        let all = polygon::intersect_all(polys.iter());
        if !all.is_empty() {
            return Ok(region(all, total));
        }
    }

    let candidates: Vec<Vector2<f64>> = polys
        .iter()
        .flat_map(|p| {
            p.iter()
                .copied()
                .chain((!p.is_empty()).then(|| polygon::centroid(p)))
        })
        .collect();
    let (point, best) = candidates
        .iter()
        .map(|&c| (c, depth(c)))
        .max_by_key(|(_, d)| *d)
        .unwrap_or((Vector2::zeros(), 0));
    if best < required {
        return Err(Error::NoConsistentDirection {
            best,
            required,
            total,
        });
    }
    let mut inside = members(point);
    let mut window: Polygon = vec![point];
    for _ in 0..32 {
        let w = polygon::intersect_all(inside.iter().map(|&i| &polys[i]).filter(|p| p.len() >= 3));
        if w.is_empty() {
            break;
        }
        let next = polygon::chebyshev_center(&w).0;
        let next_inside = members(next);
        if next_inside.len() < inside.len() {
            break;
        }
        window = w;
        let settled = next_inside == inside;
        inside = next_inside;
        if settled {
            break;
        }
    }
    Ok(region(window, inside.len()))
}

/// Direction in the middle of the window: the angular midpoint of an arc or
/// the Chebyshev center of a region.
pub fn choose_desired_direction(window: &DirectionWindow) -> Vector3<f64> {
    match window {
        DirectionWindow::Arc { start, width } => {
            let mid = start + 0.5 * width;
            Vector3::new(mid.cos(), mid.sin(), 0.0)
        }
        DirectionWindow::Region {
            center,
            basis,
            polygon,
        } => {
            let (p, _) = polygon::chebyshev_center(polygon);
            ungnomonic(&p, center, basis)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::demonstration::Sample;

    fn deg(a: f64) -> f64 {
        a.to_radians()
    }

    fn unit(a: f64) -> Vector3<f64> {
        Vector3::new(deg(a).cos(), deg(a).sin(), 0.0)
    }

    fn sector(a: f64, b: f64) -> DirectionSet {
        DirectionSet::build(unit(a), unit(b), 0.0, Dimension::Planar).unwrap()
    }

    fn arc_of(i: &Intersection) -> (f64, f64) {
        match i.window {
            DirectionWindow::Arc { start, width } => {
                (start.to_degrees(), (start + width).to_degrees())
            }
            _ => panic!("expected an arc"),
        }
    }

    #[test]
    fn extension_example() {
        let eps = perpendicular_extension(&Vector3::x(), &Vector3::z(), deg(10.0)).unwrap();
        assert!((eps - Vector3::new(0.0, 0.17632698070846498, 0.0)).norm() < 1e-12);
        assert!(DirectionSet::build(Vector3::x(), Vector3::x(), 0.1, Dimension::Spatial).is_err());
    }

    #[test]
    fn quadrant_sector() {
        let s = sector(0.0, 90.0);
        for a in [0.0, 10.0, 45.0, 89.0, 90.0] {
            assert!(s.contains(&unit(a), 1e-9), "{a}");
        }
        for a in [-1.0, 91.0, 180.0, 270.0] {
            assert!(!s.contains(&unit(a), 1e-9), "{a}");
        }
        // generator order does not matter
        assert_eq!(sector(90.0, 0.0).interval(), s.interval());
    }

    #[test]
    fn planar_degenerate_cases() {
        let s = sector(30.0, 30.0);
        assert!(s.contains(&unit(30.0), 1e-9));
        assert!(!s.contains(&unit(30.1), 1e-9));
        assert!(matches!(
            DirectionSet::build(unit(0.0), unit(180.0), 0.0, Dimension::Planar),
            Err(Error::DegenerateSector)
        ));
    }

    #[test]
    fn arc_around_a_motion() {
        let s = DirectionSet::around(unit(170.0), deg(10.0), Dimension::Planar);
        for a in [160.0, 170.0, 180.0, -180.0] {
            assert!(s.contains(&unit(a), 1e-9), "{a}");
        }
        for a in [159.0, -179.0, -10.0] {
            assert!(!s.contains(&unit(a), 1e-9), "{a}");
        }
        let c = DirectionSet::around(Vector3::z(), deg(10.0), Dimension::Spatial);
        assert_eq!(c, DirectionSet::cone_around(Vector3::z(), deg(10.0)));
    }

    #[test]
    fn wobbling_rays_meet_once_widened() {
        let rays = [-0.6, 0.3, 0.0, 0.5, -0.2];
        let exact: Vec<DirectionSet> = rays.iter().map(|&a| sector(a, a)).collect();
        assert!(intersect_direction_sets(&exact, 0.1, 1e-6).is_err());
        let wide: Vec<DirectionSet> = rays
            .iter()
            .map(|&a| DirectionSet::around(unit(a), deg(10.0), Dimension::Planar))
            .collect();
        let i = intersect_direction_sets(&wide, 0.0, 1e-6).unwrap();
        let (lo, hi) = arc_of(&i);
        assert!(
            (lo - -9.5).abs() < 1e-4 && (hi - 9.4).abs() < 1e-4,
            "{lo} {hi}"
        );
    }

    #[test]
    fn single_set_is_itself() {
        let i = intersect_direction_sets(&[sector(10.0, 50.0)], 0.0, 1e-9).unwrap();
        let (a, b) = arc_of(&i);
        assert!((a - 10.0).abs() < 1e-6 && (b - 50.0).abs() < 1e-6);
    }

    #[test]
    fn two_overlapping_sectors() {
        let i =
            intersect_direction_sets(&[sector(0.0, 40.0), sector(20.0, 60.0)], 0.0, 1e-9).unwrap();
        let (a, b) = arc_of(&i);
        assert!((a - 20.0).abs() < 1e-6 && (b - 40.0).abs() < 1e-6);
        let d = choose_desired_direction(&i.window);
        assert!((d - unit(30.0)).norm() < 1e-9);
        assert_eq!(i.coverage, 2);
    }

    #[test]
    fn disjoint_sectors_fail_without_outlier_allowance() {
        match intersect_direction_sets(&[sector(0.0, 10.0), sector(50.0, 60.0)], 0.0, 1e-9) {
            Err(Error::NoConsistentDirection {
                best,
                required,
                total,
            }) => {
                assert_eq!((best, required, total), (1, 2, 2));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn outlier_is_rejected() {
        let mut sets: Vec<DirectionSet> = (0..10).map(|_| sector(0.0, 30.0)).collect();
        sets.push(sector(170.0, 180.0));
        let i = intersect_direction_sets(&sets, 0.1, 1e-9).unwrap();
        let (a, b) = arc_of(&i);
        assert!((a - 0.0).abs() < 1e-6 && (b - 30.0).abs() < 1e-6, "{a} {b}");

        // oracle: brute-force membership count on a 0.1° grid
        let required = required_count(sets.len(), 0.1);
        let grid: Vec<f64> = (0..3600)
            .map(|k| k as f64 * 0.1 - 180.0)
            .filter(|&g| sets.iter().filter(|s| s.contains(&unit(g), 1e-9)).count() >= required)
            .collect();
        assert!((grid.first().unwrap() - 0.0).abs() < 0.1 + 1e-9);
        assert!((grid.last().unwrap() - 30.0).abs() < 0.1 + 1e-9);
    }

    #[test]
    fn arcs_crossing_the_branch_cut() {
        let i =
            intersect_direction_sets(&[sector(170.0, -170.0), sector(175.0, -160.0)], 0.0, 1e-9)
                .unwrap();
        let d = choose_desired_direction(&i.window);
        assert!((d - unit(-177.5)).norm() < 1e-8, "{d}");
    }

    #[test]
    fn square_region_centers_on_the_normal() {
        let h = 0.1;
        let gens = |sx: f64, sy: f64| Vector3::new(sx * h, sy * h, 1.0).normalize();
        let set = DirectionSet {
            dimension: Dimension::Spatial,
            generators: vec![
                gens(1.0, 1.0),
                gens(-1.0, 1.0),
                gens(-1.0, -1.0),
                gens(1.0, -1.0),
            ],
            alpha: 0.1,
        };
        let i = intersect_direction_sets(&[set.clone(), set], 0.0, 1e-9).unwrap();
        let d = choose_desired_direction(&i.window);
        assert!((d - Vector3::z()).norm() < 1e-12);
    }

    #[test]
    fn spatial_sets_share_a_direction() {
        // motion along x, force rotated about z toward -y by varying amounts
        let sets: Vec<DirectionSet> = [20.0, 35.0, 50.0]
            .iter()
            .map(|&a| {
                let f = Vector3::new(deg(-a).cos(), deg(-a).sin(), 0.0);
                DirectionSet::build(Vector3::x(), f, deg(10.0), Dimension::Spatial).unwrap()
            })
            .collect();
        let i = intersect_direction_sets(&sets, 0.0, 1e-9).unwrap();
        assert_eq!(i.coverage, 3);
        let d = choose_desired_direction(&i.window);
        for s in &sets {
            assert!(s.contains(&d, 1e-9));
        }
        assert!(d.z.abs() < 1e-9);
        assert!(d.y < 0.0 && d.y > deg(-20.0).sin());
    }

    #[test]
    fn spatial_outlier_is_rejected() {
        let mut sets: Vec<DirectionSet> = (0..9)
            .map(|k| {
                let f = Vector3::new(0.5, -1.0, 0.02 * k as f64).normalize();
                DirectionSet::build(Vector3::x(), f, deg(10.0), Dimension::Spatial).unwrap()
            })
            .collect();
        sets.push(DirectionSet::cone_around(
            Vector3::new(0.0, 0.3, 1.0),
            deg(5.0),
        ));
        assert!(intersect_direction_sets(&sets, 0.0, 1e-9).is_err());
        let i = intersect_direction_sets(&sets, 0.1, 1e-9).unwrap();
        assert!(i.coverage >= 9);
        let d = choose_desired_direction(&i.window);
        assert!(sets[..9].iter().all(|s| s.contains(&d, 1e-9)));
    }

    #[test]
    fn required_counts() {
        assert_eq!(required_count(10, 0.1), 9);
        assert_eq!(required_count(11, 0.1), 10);
        assert_eq!(required_count(1, 0.4), 1);
        assert_eq!(required_count(20, 0.0), 20);
    }

    #[test]
    fn bad_arguments() {
        assert!(intersect_direction_sets(&[], 0.1, 1e-9).is_err());
        assert!(intersect_direction_sets(&[sector(0.0, 1.0)], 0.5, 1e-9).is_err());
    }

    fn slide(fx: f64) -> Demonstration {
        let samples = (0..12)
            .map(|i| {
                let t = i as f64 * 0.04;
                let moving = i >= 2;
                let x = if moving {
                    1.0 + 0.01 * (i - 2) as f64
                } else {
                    1.0
                };
                let contact = (1..10).contains(&i);
                Sample {
                    t,
                    position: Vector3::new(x, -1.0, 0.0),
                    force: if contact {
                        Vector3::new(fx, -1000.0, 0.0)
                    } else {
                        Vector3::zeros()
                    },
                }
            })
            .collect();
        Demonstration::new(Dimension::Planar, 25.0, "", samples).unwrap()
    }

    #[test]
    fn sliding_pairs() {
        let det = ContactDetection {
            threshold: 1.0,
            run_length: 3,
        };
        let pairs = actual_directions(&slide(300.0), 1e-3, &det, true);
        // contact on samples 1..=9, motion from sample 2 on
        assert_eq!(
            pairs.iter().map(|p| p.index).collect::<Vec<_>>(),
            vec![2, 3, 4, 5, 6, 7, 8, 9]
        );
        for p in &pairs {
            assert_eq!(p.motion, Vector3::x());
            let tilt = p.force.x.atan2(-p.force.y);
            assert!((tilt - 0.3f64.atan()).abs() < 1e-12);
        }
    }

    #[test]
    fn free_space_pairs_use_motion_for_force() {
        let det = ContactDetection {
            threshold: 0.0,
            run_length: 3,
        };
        let mut demo = slide(0.0);
        demo.samples
            .iter_mut()
            .for_each(|s| s.force = Vector3::zeros());
        assert!(actual_directions(&demo, 1e-3, &det, true).is_empty());
        let pairs = actual_directions(&demo, 1e-3, &det, false);
        assert_eq!(pairs.len(), 9);
        assert!(pairs
            .iter()
            .all(|p| p.motion == Vector3::x() && p.force == Vector3::x()));
    }

    #[test]
    fn short_contact_bursts_are_ignored() {
        let det = ContactDetection {
            threshold: 10.0,
            run_length: 3,
        };
        let mut demo = slide(0.0);
        for (i, s) in demo.samples.iter_mut().enumerate() {
            s.force = if i == 4 || i == 5 {
                Vector3::new(0.0, -50.0, 0.0)
            } else {
                Vector3::zeros()
            };
        }
        assert!(det.mask(&demo).iter().all(|m| !m));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn chosen_direction_meets_the_requirement(
                arcs in prop::collection::vec((-180.0f64..180.0, 0.0f64..120.0), 1..25),
                rho in 0.0f64..0.45,
            ) {
                let sets: Vec<DirectionSet> = arcs.iter().map(|&(a, w)| sector(a, a + w)).collect();
                if let Ok(i) = intersect_direction_sets(&sets, rho, 1e-9) {
                    let d = choose_desired_direction(&i.window);
                    let count = sets.iter().filter(|s| s.contains(&d, 1e-7)).count();
                    prop_assert!(count >= i.required);
                } else {
                    // the brute-force grid must agree that no direction qualifies
                    let required = required_count(sets.len(), rho);
                    let best = (0..7200)
                        .map(|k| unit(k as f64 * 0.05))
                        .map(|d| sets.iter().filter(|s| s.contains(&d, 1e-9)).count())
                        .max()
                        .unwrap();
                    prop_assert!(best < required);
                }
            }

            #[test]
            fn permutation_does_not_move_the_result(
                arcs in prop::collection::vec((-30.0f64..-20.0, 30.0f64..60.0), 2..15),
                seed in any::<u64>(),
            ) {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let sets: Vec<DirectionSet> = arcs.iter().map(|&(a, w)| sector(a, a + w)).collect();
                let mut shuffled = sets.clone();
                shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let a = choose_desired_direction(&intersect_direction_sets(&sets, 0.1, 1e-9).unwrap().window);
                let b = choose_desired_direction(&intersect_direction_sets(&shuffled, 0.1, 1e-9).unwrap().window);
                prop_assert!((a - b).norm() < 1e-9);
            }
        }
    }
}
