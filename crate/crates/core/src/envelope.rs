//! Focal-curve envelope construction.
//!
//! Candidates are visited from the nearest to the farthest. Each outer pass
//! opens a batch with the nearest remaining curve and grows it with every
//! curve that strictly increases how much of the focal is enveloped. The
//! batch joins the envelope when the focal's depth in the enlarged envelope
//! does not drop. The batch leaves the pool either way.

use serde::{Deserialize, Serialize};

use crate::depth::{enveloped_points, focal_band_count, pointwise_bounds, BandCount};
use crate::error::{FtsError, Result};
use crate::focal::CandidateSet;

/// One outer pass of the envelope construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    /// Candidate curve indices in order of addition.
    pub members: Vec<usize>,
    /// Envelopment fraction of the focal after each addition.
    pub envelopment: Vec<f64>,
    /// Focal depth in `J ∪ N ∪ {f}` used for the acceptance test.
    pub focal_depth: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    /// Candidate curve indices in order of acceptance.
    pub members: Vec<usize>,
    /// Squared L2 distance to the focal over `D_f`, aligned with `members`.
    pub distances: Vec<f64>,
    pub iterations: usize,
    /// Focal depth after each accepted batch.
    pub focal_depth_trace: Vec<f64>,
    pub batches: Vec<Batch>,
}

impl Envelope {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Smallest member distance (`d_1`).
    pub fn nearest_distance(&self) -> Option<f64> {
        self.distances.iter().copied().min_by(f64::total_cmp)
    }
}

/// Build the focal-curve envelope of `candidates.focal`.
pub fn build_envelope(candidates: &CandidateSet<'_>) -> Result<Envelope> {
    if candidates.len() < 2 {
        return Err(FtsError::TooFewCurves { needed: 2, got: candidates.len() });
    }
    let focal = candidates.focal;
    let m = focal.len();

    let mut remaining = candidates.nearest_order();
    let mut joined: Vec<usize> = Vec::new();
    let mut depth = BandCount::ZERO;
    let mut envelope = Envelope {
        members: Vec::new(),
        distances: Vec::new(),
        iterations: 0,
        focal_depth_trace: Vec::new(),
        batches: Vec::new(),
    };

    while remaining.len() >= 2 {
        envelope.iterations += 1;
        let head = remaining[0];
        let mut lower = candidates.pairs[head].restricted.to_vec();
        let mut upper = lower.clone();
        let mut covered = enveloped_points(&lower, &upper, focal);
        let mut batch = vec![head];
        let mut trace = vec![covered as f64 / m as f64];

        for &pos in &remaining[1..] {
            let y = candidates.pairs[pos].restricted;
            let trial = focal
                .iter()
                .zip(lower.iter().zip(&upper))
                .zip(y)
                .filter(|((v, (lo, hi)), w)| lo.min(**w) <= **v && **v <= hi.max(**w))
                .count();
            if trial > covered {
                covered = trial;
                for ((lo, hi), &w) in lower.iter_mut().zip(upper.iter_mut()).zip(y) {
                    *lo = lo.min(w);
                    *hi = hi.max(w);
                }
                batch.push(pos);
                trace.push(covered as f64 / m as f64);
            }
        }

        let candidate_depth = if joined.len() + batch.len() >= 2 {
            let union: Vec<&[f64]> = joined
                .iter()
                .chain(&batch)
                .map(|&p| candidates.pairs[p].restricted)
                .collect();
            focal_band_count(&union, focal)?
        } else {
            // a single curve has no band; its envelopment stands in for the depth
            BandCount { hits: covered as u64, trials: m as u64 }
        };

        let accepted = candidate_depth >= depth;
        if accepted {
            depth = candidate_depth;
            envelope.focal_depth_trace.push(depth.value());
            joined.extend(&batch);
        }
        envelope.batches.push(Batch {
            members: batch.iter().map(|&p| candidates.pairs[p].index).collect(),
            envelopment: trace,
            focal_depth: candidate_depth.value(),
            accepted,
        });
        remaining.retain(|p| !batch.contains(p));
    }

    envelope.members = joined.iter().map(|&p| candidates.pairs[p].index).collect();
    envelope.distances = joined.iter().map(|&p| candidates.distances[p]).collect();
    Ok(envelope)
}

/// Pointwise lower and upper bounds of a set of curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Band {
    pub fn mean_width(&self) -> f64 {
        self.upper.iter().zip(&self.lower).map(|(u, l)| u - l).sum::<f64>() / self.lower.len() as f64
    }
}

/// The region between the pointwise min and max of `members`.
pub fn envelope_band(members: &[&[f64]]) -> Result<Band> {
    if members.is_empty() {
        return Err(FtsError::domain("band of an empty curve set"));
    }
    let len = members[0].len();
    if let Some(c) = members.iter().find(|c| c.len() != len) {
        return Err(FtsError::LengthMismatch { left: c.len(), right: len });
    }
    let (lower, upper) = pointwise_bounds(members);
    Ok(Band { lower, upper })
}
