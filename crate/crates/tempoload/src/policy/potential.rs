//! Increment evaluation for the power-sum potential `Φ(v) = (Σ_z v_z^p)^w`.
//!
//! All candidate costs in one decision are evaluated against a common scale
//! factor: `Φ(c·v) = c^{p·w}·Φ(v)`, so dividing every load by the largest
//! value in play keeps the inner sums at most `m` and the outer power far
//! from overflow without disturbing the argmin.

use crate::model::LoadLedger;

/// Relative difference below which two candidate costs count as a tie.
pub(crate) const TIE_TOLERANCE: f64 = 1e-12;

pub(crate) fn improves(cost: f64, best: f64) -> bool {
    if !best.is_finite() {
        return cost.is_finite();
    }
    cost < best && (best - cost) > TIE_TOLERANCE * best.abs().max(cost.abs())
}

/// Constant-load stretch of a decision window.
pub(crate) struct Segment {
    pub len: f64,
    /// Raw load vector on the stretch.
    pub values: Vec<f64>,
    /// `Σ_z (v_z/scale)^p`, precomputed.
    pub sum_scaled: f64,
}

pub(crate) struct WindowProfile {
    pub scale: f64,
    pub segments: Vec<Segment>,
}

impl WindowProfile {
    /// Decompose `[lo, hi]` of the ledger into constant segments and fix the
    /// decision scale. `extra` supplies additional magnitudes (the candidate
    /// job loads) that the scale must cover.
    pub fn build(
        ledger: &LoadLedger,
        lo: u64,
        hi: u64,
        extra: impl Iterator<Item = f64>,
        p: f64,
    ) -> Self {
        let mut max_add = 0.0_f64;
        for x in extra {
            if x.is_finite() {
                max_add = max_add.max(x);
            }
        }
        let spans = ledger.segments_in(lo, hi);
        let mut max_load = 0.0_f64;
        let mut raw: Vec<(f64, Vec<f64>)> = Vec::with_capacity(spans.len());
        for (s, e) in spans {
            let values = ledger.vector_at(s);
            for v in &values {
                max_load = max_load.max(*v);
            }
            raw.push(((e - s + 1) as f64, values));
        }
        let scale = (max_load + max_add).max(1e-300);
        let segments = raw
            .into_iter()
            .map(|(len, values)| {
                let sum_scaled = values.iter().map(|v| (v / scale).powf(p)).sum();
                Segment {
                    len,
                    values,
                    sum_scaled,
                }
            })
            .collect();
        WindowProfile { scale, segments }
    }

    /// Scaled potential increment of adding `adds` (coordinate, amount) over
    /// the whole window. Comparable across candidates of the same decision.
    pub fn cost(&self, p: f64, w: f64, adds: &[(usize, f64)]) -> f64 {
        let mut total = 0.0;
        for seg in &self.segments {
            let mut sum_new = seg.sum_scaled;
            for &(z, amount) in adds {
                let old = seg.values[z] / self.scale;
                let new = (seg.values[z] + amount) / self.scale;
                sum_new += new.powf(p) - old.powf(p);
            }
            total += seg.len * (sum_new.powf(w) - seg.sum_scaled.powf(w));
        }
        total
    }

    /// Unscaled potential increment; used for bookkeeping, not decisions.
    /// May overflow for extreme parameter combinations.
    pub fn raw_cost(&self, p: f64, w: f64, adds: &[(usize, f64)]) -> f64 {
        let mut total = 0.0;
        for seg in &self.segments {
            let sum_old: f64 = seg.values.iter().map(|v| v.powf(p)).sum();
            let mut sum_new = sum_old;
            for &(z, amount) in adds {
                sum_new += (seg.values[z] + amount).powf(p) - seg.values[z].powf(p);
            }
            total += seg.len * (sum_new.powf(w) - sum_old.powf(w));
        }
        total
    }
}
