//! Exact hypervolume by dimension sweep.
//!
//! Two objectives use a sort-and-sweep over strips, three objectives sweep
//! the third axis while maintaining a 2D staircase with incremental area,
//! and four or more slice recursively along the last axis.

use super::{check_dims, Objectives, ReferencePoint, Result};

/// Measure of the region dominated by `front` and bounded by `reference`.
///
/// Points that do not strictly dominate the reference point contribute
/// nothing.
pub fn hypervolume<T: Objectives>(front: &[T], reference: &ReferencePoint) -> Result<f64> {
    check_dims(front, reference.dim())?;
    let points: Vec<&[f64]> = front
        .iter()
        .map(|p| p.objectives())
        .filter(|p| reference.is_strictly_dominated_by(p))
        .collect();
    Ok(volume(&points, reference.values()))
}

/// Per-point loss of hypervolume when that point alone is removed.
pub fn exclusive_contributions<T: Objectives>(
    front: &[T],
    reference: &ReferencePoint,
) -> Result<Vec<f64>> {
    check_dims(front, reference.dim())?;
    let r = reference.values();
    let valid: Vec<usize> = (0..front.len())
        .filter(|&i| reference.is_strictly_dominated_by(front[i].objectives()))
        .collect();
    let mut out = vec![0.0; front.len()];
    if valid.is_empty() {
        return Ok(out);
    }
    if r.len() == 2 && staircase_contributions(front, &valid, r, &mut out) {
        return Ok(out);
    }

    let points: Vec<&[f64]> = valid.iter().map(|&i| front[i].objectives()).collect();
    let total = volume(&points, r);
    let mut without = Vec::with_capacity(points.len());
    for (k, &i) in valid.iter().enumerate() {
        without.clear();
        without.extend(
            points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, p)| *p),
        );
        out[i] = (total - volume(&without, r)).max(0.0);
    }
    Ok(out)
}

/// Closed-form 2D contributions when the valid points form a clean staircase
/// (strictly increasing first objective, strictly decreasing second). Returns
/// false, leaving `out` untouched, for any other shape.
fn staircase_contributions<T: Objectives>(
    front: &[T],
    valid: &[usize],
    r: &[f64],
    out: &mut [f64],
) -> bool {
    let mut order = valid.to_vec();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (front[a].objectives(), front[b].objectives());
        pa[0].total_cmp(&pb[0]).then(pa[1].total_cmp(&pb[1]))
    });
    for w in order.windows(2) {
        let (a, b) = (front[w[0]].objectives(), front[w[1]].objectives());
        if !(a[0] < b[0] && a[1] > b[1]) {
            return false;
        }
    }
    for (k, &i) in order.iter().enumerate() {
        let p = front[i].objectives();
        let right = order.get(k + 1).map_or(r[0], |&j| front[j].objectives()[0]);
        let top = if k == 0 {
            r[1]
        } else {
            front[order[k - 1]].objectives()[1]
        };
        out[i] = (right - p[0]) * (top - p[1]);
    }
    true
}

/// Hypervolume of points that all strictly dominate `r`.
pub(crate) fn volume(points: &[&[f64]], r: &[f64]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    match r.len() {
        1 => r[0] - points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
        2 => volume_2d(points, r),
        3 => volume_3d(points, r),
        _ => volume_sliced(points, r),
    }
}

fn volume_2d(points: &[&[f64]], r: &[f64]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut area = 0.0;
    let mut floor = r[1];
    for (x, y) in pts {
        if y < floor {
            area += (r[0] - x) * (floor - y);
            floor = y;
        }
    }
    area
}

/// Non-dominated 2D staircase, sorted by x ascending (y strictly descending),
/// with the area it dominates up to a fixed corner.
struct Staircase {
    steps: Vec<(f64, f64)>,
    corner: (f64, f64),
    area: f64,
}

impl Staircase {
    fn new(corner: (f64, f64)) -> Self {
        Self {
            steps: Vec::new(),
            corner,
            area: 0.0,
        }
    }

    fn insert(&mut self, x: f64, y: f64) {
        let lo = self.steps.partition_point(|s| s.0 < x);
        if lo > 0 && self.steps[lo - 1].1 <= y {
            return;
        }
        if lo < self.steps.len() && self.steps[lo].0 == x && self.steps[lo].1 <= y {
            return;
        }
        let mut hi = lo;
        while hi < self.steps.len() && self.steps[hi].1 >= y {
            hi += 1;
        }

        let left_height = if lo > 0 {
            self.steps[lo - 1].1
        } else {
            self.corner.1
        };
        let x_at = |i: usize, steps: &[(f64, f64)]| steps.get(i).map_or(self.corner.0, |s| s.0);
        let mut added = (x_at(lo, &self.steps) - x) * (left_height - y);
        for j in lo..hi {
            added += (x_at(j + 1, &self.steps) - self.steps[j].0) * (self.steps[j].1 - y);
        }
        self.area += added;
        self.steps.splice(lo..hi, std::iter::once((x, y)));
    }
}

fn volume_3d(points: &[&[f64]], r: &[f64]) -> f64 {
    let mut pts: Vec<&[f64]> = points.to_vec();
    pts.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut stairs = Staircase::new((r[0], r[1]));
    let mut vol = 0.0;
    for (i, p) in pts.iter().enumerate() {
        stairs.insert(p[0], p[1]);
        let next = pts.get(i + 1).map_or(r[2], |q| q[2]);
        vol += stairs.area * (next - p[2]);
    }
    vol
}

fn volume_sliced(points: &[&[f64]], r: &[f64]) -> f64 {
    let d = r.len();
    let mut pts: Vec<&[f64]> = points.to_vec();
    pts.sort_by(|a, b| a[d - 1].total_cmp(&b[d - 1]));
    let mut vol = 0.0;
    let mut prefix: Vec<&[f64]> = Vec::with_capacity(pts.len());
    for (i, p) in pts.iter().enumerate() {
        prefix.push(&p[..d - 1]);
        let next = pts.get(i + 1).map_or(r[d - 1], |q| q[d - 1]);
        let depth = next - p[d - 1];
        if depth > 0.0 {
            vol += volume(&prefix, &r[..d - 1]) * depth;
        }
    }
    vol
}
