//! Hindsight goal relabelling of a finished episode.
//!
//! Half of the states in a trajectory (rounded up) are replayed as if they had
//! been the episode's goal. States reached while post-exploring are chosen
//! first; any remaining budget is drawn from the goal-reaching segment.

use rand::seq::index;
use rand::Rng;

use crate::agent::{q_update, reward, QTable, Transition};
use crate::explorer::Trajectory;

/// Trajectory state indices to replay as goals. Index `i` names state `s_i`,
/// the state after transition `i - 1`; the start state `s_0` is never chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelabelPlan {
    pub indices: Vec<usize>,
    pub k: usize,
}

/// Picks `ceil(len / 2)` distinct hindsight goal indices.
///
/// Every post-exploration state index is taken when the budget allows it;
/// otherwise the budget is sampled from them. Leftover budget is sampled
/// without replacement from the goal-reaching indices `1..=pe_boundary`.
/// The result lists post-exploration indices first, each group in trajectory
/// order.
///
/// Panics on an empty trajectory.
pub fn plan_relabels<R: Rng + ?Sized>(traj: &Trajectory, rng: &mut R) -> RelabelPlan {
    let len = traj.transitions.len();
    assert!(len > 0, "cannot relabel an empty trajectory");
    let k = len.div_ceil(2);
    let boundary = traj.pe_boundary;
    let pe: Vec<usize> = (boundary + 1..=len).collect();

    let indices = if pe.len() >= k {
        sorted_sample(rng, pe.len(), k)
            .into_iter()
            .map(|j| pe[j])
            .collect()
    } else {
        let mut chosen = pe;
        let rest = k - chosen.len();
        chosen.extend(
            sorted_sample(rng, boundary, rest)
                .into_iter()
                .map(|j| j + 1),
        );
        chosen
    };
    RelabelPlan { indices, k }
}

fn sorted_sample<R: Rng + ?Sized>(rng: &mut R, len: usize, amount: usize) -> Vec<usize> {
    let mut picked = index::sample(rng, len, amount).into_vec();
    picked.sort_unstable();
    picked
}

/// Replays transitions `0..i` with `s_i` as the goal, rewarding the steps
/// that land on it. Returns the number of Q updates applied (`i`).
///
/// Panics unless `1 <= i <= traj.len()`.
pub fn apply_relabel(q: &mut QTable, traj: &Trajectory, goal_index: usize) -> usize {
    let ts = &traj.transitions;
    assert!(
        (1..=ts.len()).contains(&goal_index),
        "hindsight index {goal_index} outside 1..={}",
        ts.len()
    );
    let goal = ts[goal_index - 1].s_next;
    for t in &ts[..goal_index] {
        let relabelled = Transition {
            r: reward(t.s_next, goal),
            goal: Some(goal),
            ..*t
        };
        q_update(q, &relabelled);
    }
    goal_index
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RelabelStats {
    pub goals: usize,
    pub updates: usize,
}

/// Plans and applies the hindsight passes for one episode. Empty trajectories
/// are skipped.
pub fn relabel<R: Rng + ?Sized>(q: &mut QTable, traj: &Trajectory, rng: &mut R) -> RelabelStats {
    if traj.transitions.is_empty() {
        return RelabelStats::default();
    }
    let plan = plan_relabels(traj, rng);
    let updates = plan
        .indices
        .iter()
        .map(|&i| apply_relabel(q, traj, i))
        .sum();
    RelabelStats {
        goals: plan.indices.len(),
        updates,
    }
}
