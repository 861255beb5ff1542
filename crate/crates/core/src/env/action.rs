use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A short-timescale action for one UAV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShortAction {
    /// One score per candidate; the env schedules the top-`C` eligible ones.
    Scores(Vec<f64>),
    /// Explicit schedule; rejected if it breaks the limit or buffer gating.
    Mask(Vec<bool>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDecision {
    pub uav: usize,
    /// `ζ` over the agent's candidate list.
    pub mask: Vec<bool>,
}

impl ScheduleDecision {
    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &s)| s).map(|(i, _)| i)
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&s| s).count()
    }
}

/// Maps a raw action onto a feasible schedule.
///
/// Score mode keeps the `limit` highest-scoring candidates among those with a
/// non-empty buffer (ties to the lower index). Mask mode is checked, never
/// repaired.
pub fn sanitize_short_action(
    agent: usize,
    action: &ShortAction,
    eligible: &[bool],
    limit: usize,
) -> Result<ScheduleDecision> {
    let invalid = |constraint: String| Error::InvalidAction { agent, constraint };
    let n = eligible.len();
    match action {
        ShortAction::Scores(scores) => {
            if scores.len() != n {
                return Err(invalid(format!("expected {n} scores, got {}", scores.len())));
            }
            if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
                return Err(invalid(format!("score {i} is not finite")));
            }
            let mut order: Vec<usize> = (0..n).filter(|&i| eligible[i]).collect();
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
            let mut mask = vec![false; n];
            for &i in order.iter().take(limit) {
                mask[i] = true;
            }
            Ok(ScheduleDecision { uav: agent, mask })
        }
        ShortAction::Mask(mask) => {
            if mask.len() != n {
                return Err(invalid(format!("expected mask of {n}, got {}", mask.len())));
            }
            let count = mask.iter().filter(|&&s| s).count();
            if count > limit {
                return Err(invalid(format!(
                    "scheduling limit: {count} selected, at most {limit} allowed"
                )));
            }
            if let Some(i) = (0..n).find(|&i| mask[i] && !eligible[i]) {
                return Err(invalid(format!("buffer gating: candidate {i} has an empty buffer")));
            }
            Ok(ScheduleDecision {
                uav: agent,
                mask: mask.clone(),
            })
        }
    }
}

/// Per-axis clamp to `[−v_max, v_max]`.
pub fn clamp_velocity(v: [f64; 2], v_max: f64) -> [f64; 2] {
    [v[0].clamp(-v_max, v_max), v[1].clamp(-v_max, v_max)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_k_of_eligible() {
        let scores = ShortAction::Scores(vec![0.1, 0.9, 0.5, 0.7, 0.3, 0.8]);
        let d = sanitize_short_action(0, &scores, &[true; 6], 4).unwrap();
        assert_eq!(d.selected().collect::<Vec<_>>(), vec![1, 2, 3, 5]);
    }

    #[test]
    fn empty_buffers_schedule_nothing() {
        let scores = ShortAction::Scores(vec![5.0, 4.0, 3.0]);
        let d = sanitize_short_action(0, &scores, &[false; 3], 2).unwrap();
        assert_eq!(d.count(), 0);
    }

    #[test]
    fn tie_at_cut_prefers_lower_index() {
        let scores = vec![0.2, 0.5, 0.9, 0.5, 0.1, 0.5];
        let eligible = [true, true, true, true, true, true];
        let d = sanitize_short_action(0, &ShortAction::Scores(scores.clone()), &eligible, 3).unwrap();
        assert_eq!(d.selected().collect::<Vec<_>>(), vec![1, 2, 3]);

        // brute force: best total score, then lexicographically smallest index set
        let mut best: Option<(f64, Vec<usize>)> = None;
        for bits in 0u32..64 {
            if bits.count_ones() != 3 {
                continue;
            }
            let set: Vec<usize> = (0..6).filter(|i| bits & (1 << i) != 0).collect();
            let total: f64 = set.iter().map(|&i| scores[i]).sum();
            let better = match &best {
                None => true,
                Some((t, s)) => total > *t || (total == *t && set < *s),
            };
            if better {
                best = Some((total, set));
            }
        }
        assert_eq!(best.unwrap().1, vec![1, 2, 3]);
    }

    #[test]
    fn mask_violations_named() {
        let too_many = ShortAction::Mask(vec![true, true, true]);
        let err = sanitize_short_action(2, &too_many, &[true; 3], 2).unwrap_err();
        assert!(err.to_string().contains("scheduling limit"));
        let gated = ShortAction::Mask(vec![true, false, false]);
        let err = sanitize_short_action(2, &gated, &[false, true, true], 2).unwrap_err();
        assert!(err.to_string().contains("buffer gating"));
    }

    #[test]
    fn malformed_scores_rejected() {
        assert!(sanitize_short_action(0, &ShortAction::Scores(vec![1.0]), &[true; 2], 1).is_err());
        assert!(sanitize_short_action(0, &ShortAction::Scores(vec![f64::NAN, 1.0]), &[true; 2], 1).is_err());
    }

    #[test]
    fn velocity_clamp() {
        assert_eq!(clamp_velocity([25.0, -3.0], 10.0), [10.0, -3.0]);
        assert_eq!(clamp_velocity([-11.0, -12.0], 10.0), [-10.0, -10.0]);
    }
}
