use super::hypervolume::exclusive_contributions;
use super::{check_dims, sort_unchecked, FrontPoint, Objectives, ParetoError, ReferencePoint, Result};

/// Relative slack under which two contributions count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// Shrinks `points` to at most `target` entries and returns the indices of
/// the survivors in input order.
///
/// Removal order: points that do not strictly dominate the reference go
/// first, then whole non-dominated ranks are kept from the best downwards
/// and the rank that does not fit loses, one at a time, its point with the
/// smallest exclusive contribution. Ties always drop the latest inserted
/// point.
pub fn reduce_indices<T: Objectives>(
    points: &[T],
    target: usize,
    reference: &ReferencePoint,
) -> Result<Vec<usize>> {
    if target == 0 {
        return Err(ParetoError::ZeroTargetSize);
    }
    if points.is_empty() {
        return Err(ParetoError::Empty);
    }
    check_dims(points, reference.dim())?;
    let n = points.len();
    if n <= target {
        return Ok((0..n).collect());
    }

    let mut alive = vec![true; n];
    let mut count = n;
    for i in (0..n).rev() {
        if count == target {
            break;
        }
        if !reference.is_strictly_dominated_by(points[i].objectives()) {
            alive[i] = false;
            count -= 1;
        }
    }
    let remaining: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
    if count == target {
        return Ok(remaining);
    }

    let remaining_points: Vec<&[f64]> = remaining.iter().map(|&i| points[i].objectives()).collect();
    let mut kept = Vec::with_capacity(target);
    let mut split = Vec::new();
    for group in sort_unchecked(&remaining_points) {
        let group: Vec<usize> = group.into_iter().map(|k| remaining[k]).collect();
        if kept.len() + group.len() <= target {
            kept.extend(group);
        } else {
            split = group;
            break;
        }
    }

    let need = target - kept.len();
    while split.len() > need {
        let pts: Vec<&[f64]> = split.iter().map(|&i| points[i].objectives()).collect();
        let contrib = exclusive_contributions(&pts, reference)?;
        let worst = least_contributor(&contrib);
        split.remove(worst);
    }
    kept.extend(split);
    kept.sort_unstable();
    Ok(kept)
}

/// Position of the smallest contribution; among ties, the last one.
fn least_contributor(contrib: &[f64]) -> usize {
    let min = contrib.iter().copied().fold(f64::INFINITY, f64::min);
    let slack = TIE_TOLERANCE * min.abs().max(1.0);
    contrib
        .iter()
        .rposition(|&c| c <= min + slack)
        .expect("non-empty contributions")
}

/// Same as [`reduce_indices`] but returns the surviving points themselves.
pub fn reduce_front<P: Clone>(
    points: &[FrontPoint<P>],
    target: usize,
    reference: &ReferencePoint,
) -> Result<Vec<FrontPoint<P>>> {
    let keep = reduce_indices(points, target, reference)?;
    Ok(keep.into_iter().map(|i| points[i].clone()).collect())
}
