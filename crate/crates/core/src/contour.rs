//! Heat-pool contour extraction and polygon geometry.
//!
//! Contours are traced from 8-connected components of a target color with
//! Moore-neighbor border following, then oriented counter-clockwise
//! (positive shoelace sum; image coordinates are x right, y down). Areas
//! are shoelace areas of the traced boundary polygon, so the convexity
//! ratio compares contour and hull under the same definition.

use crate::error::{Error, Result};
use crate::image::{ColorCode, QuantizedImage};

/// Closed pixel-coordinate polygon, at least 3 points, counter-clockwise,
/// first point not repeated at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    points: Vec<(f64, f64)>,
}

impl Contour {
    /// Validates point count and orientation; reverses clockwise input.
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::invalid("a contour needs at least 3 points"));
        }
        if signed_area(&points) < 0.0 {
            points.reverse();
        }
        Ok(Contour { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Area centroid from shoelace moments; falls back to the vertex mean
    /// for near-zero-area polygons.
    pub fn centroid(&self) -> (f64, f64) {
        let pts = &self.points;
        let n = pts.len();
        let mut a2 = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for i in 0..n {
            let (x0, y0) = pts[i];
            let (x1, y1) = pts[(i + 1) % n];
            let cross = x0 * y1 - x1 * y0;
            a2 += cross;
            cx += (x0 + x1) * cross;
            cy += (y0 + y1) * cross;
        }
        if a2.abs() < 1e-9 {
            let inv = 1.0 / n as f64;
            return (
                pts.iter().map(|p| p.0).sum::<f64>() * inv,
                pts.iter().map(|p| p.1).sum::<f64>() * inv,
            );
        }
        (cx / (3.0 * a2), cy / (3.0 * a2))
    }
}

fn signed_area(points: &[(f64, f64)]) -> f64 {
    let n = points.len();
    let mut sum = 0.0;
    for i in 0..n {
        let (x0, y0) = points[i];
        let (x1, y1) = points[(i + 1) % n];
        sum += x0 * y1 - x1 * y0;
    }
    sum / 2.0
}

/// Absolute shoelace area of the closed polygon.
pub fn polygon_area(contour: &Contour) -> f64 {
    signed_area(contour.points()).abs()
}

/// Convex hull of the contour's points by monotone chain, counter-clockwise,
/// with collinear interior points removed.
pub fn convex_hull(contour: &Contour) -> Result<Contour> {
    let mut pts: Vec<(f64, f64)> = contour.points().to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("pixel coordinates are finite"));
    pts.dedup();

    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };

    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);

    if lower.len() < 3 {
        return Err(Error::DegenerateHull);
    }
    Contour::new(lower)
}

/// Scoring knob for [`select_pool_contour`]: score = area / (1 + d^exponent)
/// where d is the distance between the contour centroid and the flame
/// centroid.
#[derive(Debug, Clone, Copy)]
pub struct SelectParams {
    pub distance_exponent: f64,
}

impl Default for SelectParams {
    fn default() -> Self {
        SelectParams {
            distance_exponent: 1.0,
        }
    }
}

/// Picks the pool contour as the largest contour closest to the flame
/// centroid. Ties break on smaller distance, then on the lexicographically
/// smallest first point. Returns `None` for an empty list (extinguished
/// pool).
pub fn select_pool_contour(
    contours: &[Contour],
    centroid: (f64, f64),
    params: SelectParams,
) -> Option<&Contour> {
    let score = |c: &Contour| {
        let (cx, cy) = c.centroid();
        let d = ((cx - centroid.0).powi(2) + (cy - centroid.1).powi(2)).sqrt();
        let area = polygon_area(c);
        (area / (1.0 + d.powf(params.distance_exponent)), d)
    };
    contours
        .iter()
        .fold(None, |best, c| {
            let (s, d) = score(c);
            match best {
                None => Some((c, s, d)),
                Some((bc, bs, bd)) => {
                    let replace = s > bs
                        || (s == bs && d < bd)
                        || (s == bs && d == bd && c.points()[0] < bc.points()[0]);
                    if replace {
                        Some((c, s, d))
                    } else {
                        Some((bc, bs, bd))
                    }
                }
            }
        })
        .map(|(c, _, _)| c)
}

/// Extracts one contour per 8-connected component of `target`-colored
/// pixels via Moore-neighbor border following. Components with fewer than
/// 3 boundary pixels are dropped as noise. `target` must be an emitting
/// color; black is background.
pub fn extract_contours(img: &QuantizedImage, target: ColorCode) -> Vec<Contour> {
    debug_assert!(target != ColorCode::Black, "black is background");
    let w = img.width() as i64;
    let h = img.height() as i64;
    let is_target = |x: i64, y: i64| {
        x >= 0 && y >= 0 && x < w && y < h && img.get(x as u32, y as u32) == target
    };

    let mut labeled = vec![false; (w * h) as usize];
    let mut contours = Vec::new();

    for y in 0..h {
        for x in 0..w {
            if !is_target(x, y) || labeled[(y * w + x) as usize] {
                continue;
            }
            // Flood-fill the component so it is visited once.
            let mut component = Vec::new();
            let mut stack = vec![(x, y)];
            labeled[(y * w + x) as usize] = true;
            while let Some((px, py)) = stack.pop() {
                component.push((px, py));
                for dy in -1..=1i64 {
                    for dx in -1..=1i64 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let (nx, ny) = (px + dx, py + dy);
                        if is_target(nx, ny) && !labeled[(ny * w + nx) as usize] {
                            labeled[(ny * w + nx) as usize] = true;
                            stack.push((nx, ny));
                        }
                    }
                }
            }

            // Scan-order start pixel (min y, then min x) for the trace.
            let &start = component
                .iter()
                .min_by_key(|&&(px, py)| (py, px))
                .expect("component is nonempty");

            let boundary = moore_trace(start, &is_target);
            if boundary.len() < 3 {
                continue;
            }
            let points = boundary
                .into_iter()
                .map(|(px, py)| (px as f64, py as f64))
                .collect();
            contours.push(Contour::new(points).expect("boundary has >= 3 points"));
        }
    }
    contours
}

/// Moore neighborhood in clockwise order (image coordinates, y down),
/// starting west.
const MOORE: [(i64, i64); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

/// Moore-neighbor border following. The walk over (pixel, backtrack
/// direction) states is deterministic, so it eventually enters a cycle;
/// that cycle is exactly one loop around the component's outer boundary.
/// `start` must be the component's scan-order first pixel, so its west
/// neighbor is outside the component.
fn moore_trace(start: (i64, i64), is_target: &dyn Fn(i64, i64) -> bool) -> Vec<(i64, i64)> {
    use std::collections::HashMap;

    let mut state = (start, 0usize);
    let mut seen: HashMap<((i64, i64), usize), usize> = HashMap::new();
    let mut path: Vec<(i64, i64)> = Vec::new();

    loop {
        if let Some(&first) = seen.get(&state) {
            return path[first..].to_vec();
        }
        seen.insert(state, path.len());
        path.push(state.0);

        let (current, backtrack_dir) = state;
        let mut found = None;
        for step in 1..=8 {
            let dir = (backtrack_dir + step) % 8;
            let (dx, dy) = MOORE[dir];
            let next = (current.0 + dx, current.1 + dy);
            if is_target(next.0, next.1) {
                found = Some((next, dir));
                break;
            }
        }
        match found {
            // Isolated pixel: no neighbors.
            None => return path,
            Some((next, dir)) => {
                state = (next, (dir + 4) % 8);
            }
        }
    }
}

/// True if `p` lies inside or on the convex polygon (counter-clockwise).
pub fn point_in_convex(hull: &Contour, p: (f64, f64), tol: f64) -> bool {
    let pts = hull.points();
    let n = pts.len();
    for i in 0..n {
        let (x0, y0) = pts[i];
        let (x1, y1) = pts[(i + 1) % n];
        let cross = (x1 - x0) * (p.1 - y0) - (y1 - y0) * (p.0 - x0);
        if cross < -tol {
            return false;
        }
    }
    true
}
