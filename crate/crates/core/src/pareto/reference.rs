use rand::Rng;

use super::{check_dims, hypervolume, Objectives, ParetoError, ReferencePoint, Result};

/// Worst value per objective over all supplied fronts, plus one.
///
/// Only meant for showing why a moving reference point breaks front
/// comparison; negotiations always use a fixed reference.
pub fn dynamic_reference_point<T: Objectives>(fronts: &[Vec<T>]) -> Result<ReferencePoint> {
    let dim = fronts
        .iter()
        .flatten()
        .next()
        .ok_or(ParetoError::Empty)?
        .objectives()
        .len();
    let mut worst = vec![f64::NEG_INFINITY; dim];
    for front in fronts {
        check_dims(front, dim)?;
        for p in front {
            for (w, v) in worst.iter_mut().zip(p.objectives()) {
                *w = w.max(*v);
            }
        }
    }
    ReferencePoint::new(worst.into_iter().map(|w| w + 1.0).collect())
}

/// Three fronts whose pairwise comparison under per-pair dynamic reference
/// points is cyclic: A beats B, B beats C and C beats A.
#[derive(Debug, Clone)]
pub struct ReferenceCycle {
    pub fronts: [Vec<Vec<f64>>; 3],
    /// Hypervolumes for the pairs (A, B), (B, C) and (C, A), each computed
    /// against the reference point of that pair.
    pub pair_volumes: [(f64, f64); 3],
}

fn random_two_point_front<R: Rng>(rng: &mut R, span: u32) -> Vec<Vec<f64>> {
    loop {
        let (x1, x2) = (rng.gen_range(0..=span), rng.gen_range(0..=span));
        let (y1, y2) = (rng.gen_range(0..=span), rng.gen_range(0..=span));
        if x1 < x2 && y1 > y2 {
            return vec![vec![x1.into(), y1.into()], vec![x2.into(), y2.into()]];
        }
    }
}

/// Compares two fronts the way SMS-EMOA would: with the reference point
/// derived from just these two fronts.
pub fn pairwise_dynamic_volumes(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<(f64, f64)> {
    let reference = dynamic_reference_point(&[a.to_vec(), b.to_vec()])?;
    Ok((hypervolume(a, &reference)?, hypervolume(b, &reference)?))
}

/// Random search over integer-grid two-point fronts until a cycle shows up.
pub fn find_dynamic_reference_cycle<R: Rng>(rng: &mut R, max_attempts: usize) -> Option<ReferenceCycle> {
    for _ in 0..max_attempts {
        let fronts = [
            random_two_point_front(rng, 8),
            random_two_point_front(rng, 8),
            random_two_point_front(rng, 8),
        ];
        let ab = pairwise_dynamic_volumes(&fronts[0], &fronts[1]).ok()?;
        let bc = pairwise_dynamic_volumes(&fronts[1], &fronts[2]).ok()?;
        let ca = pairwise_dynamic_volumes(&fronts[2], &fronts[0]).ok()?;
        if ab.0 > ab.1 && bc.0 > bc.1 && ca.0 > ca.1 {
            return Some(ReferenceCycle {
                fronts,
                pair_volumes: [ab, bc, ca],
            });
        }
    }
    None
}
