//! Observation types and their flat layouts.
//!
//! Short (scheduling) observation for an agent with `C` candidates:
//!
//! | field          | offset | len  |
//! |----------------|--------|------|
//! | `buffer`       | 0      | 3·C  |
//! | `sinr_history` | 3·C    | C    |
//! | `prev_reward`  | 4·C    | 1    |
//! | `prev_action`  | 4·C+1  | C    |
//!
//! `buffer` holds `(N_cum, mean delay, head latency)` per candidate.
//!
//! Long (trajectory) observation for a node with `U` users:
//!
//! | field             | offset | len |
//! |-------------------|--------|-----|
//! | `rssi_dbm`        | 0      | U   |
//! | `prev_reward`     | U      | 1   |
//! | `prev_action`     | U+1    | 2   |
//! | `position`        | U+3    | 3   |
//! | `member_centroid` | U+6    | 2   |

use serde::{Deserialize, Serialize};

use crate::traffic::{BufferFeature, Target};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutField {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationLayout {
    pub fields: Vec<LayoutField>,
    pub len: usize,
}

impl ObservationLayout {
    fn from_lengths(parts: &[(&str, usize)]) -> Self {
        let mut offset = 0;
        let fields = parts
            .iter()
            .map(|&(name, len)| {
                let f = LayoutField {
                    name: name.to_string(),
                    offset,
                    len,
                };
                offset += len;
                f
            })
            .collect();
        Self { fields, len: offset }
    }

    pub fn short(candidates: usize) -> Self {
        Self::from_lengths(&[
            ("buffer", 3 * candidates),
            ("sinr_history", candidates),
            ("prev_reward", 1),
            ("prev_action", candidates),
        ])
    }

    pub fn long(users: usize) -> Self {
        Self::from_lengths(&[
            ("rssi_dbm", users),
            ("prev_reward", 1),
            ("prev_action", 2),
            ("position", 3),
            ("member_centroid", 2),
        ])
    }

    pub fn field(&self, name: &str) -> Option<&LayoutField> {
        self.fields.iter().find(|f| f.name == name)
    }
}

/// Static description of a scheduling agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortAgentSpec {
    pub uav: usize,
    pub candidates: Vec<Target>,
    pub sched_limit: usize,
    pub layout: ObservationLayout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LongAgentSpec {
    pub node: usize,
    pub users: Vec<usize>,
    pub layout: ObservationLayout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortObservation {
    pub uav: usize,
    pub buffer: Vec<BufferFeature>,
    /// Previous slot's realized SINR per candidate (linear), 0 if unscheduled.
    pub sinr_history: Vec<f64>,
    pub prev_reward: f64,
    pub prev_action: Vec<bool>,
}

impl ShortObservation {
    /// γ per candidate.
    pub fn eligible(&self) -> Vec<bool> {
        self.buffer.iter().map(|b| b.n_cum > 0).collect()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(5 * self.buffer.len() + 1);
        for b in &self.buffer {
            v.extend([b.n_cum as f64, b.mean_delay, b.head_latency]);
        }
        v.extend(&self.sinr_history);
        v.push(self.prev_reward);
        v.extend(self.prev_action.iter().map(|&a| if a { 1.0 } else { 0.0 }));
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongObservation {
    pub node: usize,
    pub rssi_dbm: Vec<f64>,
    pub prev_reward: f64,
    pub prev_action: [f64; 2],
    pub position: [f64; 3],
    pub member_centroid: [f64; 2],
}

impl LongObservation {
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.rssi_dbm.clone();
        v.push(self.prev_reward);
        v.extend(self.prev_action);
        v.extend(self.position);
        v.extend(self.member_centroid);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_layout_matches_flat() {
        let obs = ShortObservation {
            uav: 1,
            buffer: vec![
                BufferFeature { n_cum: 2, mean_delay: 1.5, head_latency: 2.0 },
                BufferFeature::default(),
            ],
            sinr_history: vec![3.0, 0.0],
            prev_reward: 4.0,
            prev_action: vec![true, false],
        };
        let layout = ObservationLayout::short(2);
        let flat = obs.to_flat();
        assert_eq!(flat.len(), layout.len);
        let f = layout.field("prev_reward").unwrap();
        assert_eq!(flat[f.offset], 4.0);
        let f = layout.field("prev_action").unwrap();
        assert_eq!(&flat[f.offset..f.offset + f.len], &[1.0, 0.0]);
    }

    #[test]
    fn long_layout_matches_flat() {
        let obs = LongObservation {
            node: 1,
            rssi_dbm: vec![-70.0, -72.0, -90.0],
            prev_reward: 2.5,
            prev_action: [1.0, -1.0],
            position: [10.0, 20.0, 100.0],
            member_centroid: [5.0, 6.0],
        };
        let layout = ObservationLayout::long(3);
        let flat = obs.to_flat();
        assert_eq!(flat.len(), layout.len);
        let f = layout.field("member_centroid").unwrap();
        assert_eq!(&flat[f.offset..], &[5.0, 6.0]);
        let f = layout.field("position").unwrap();
        assert_eq!(&flat[f.offset..f.offset + 3], &[10.0, 20.0, 100.0]);
    }
}
