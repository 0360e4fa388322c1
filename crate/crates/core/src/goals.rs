//! The set of discovered goal states and their visit counts.

use std::io::Write;

use rand::Rng;

use crate::agent::random_action;
use crate::error::{Error, Result};
use crate::grid::{step, GridMap, Pos};

/// Goals in discovery order with per-goal visit counts `n(g)`.
///
/// Counts are kept in a dense per-cell array; a goal is present iff its count
/// is non-zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalSpace {
    width: usize,
    goals: Vec<Pos>,
    counts: Vec<u64>,
}

impl GoalSpace {
    pub fn new(map: &GridMap) -> Self {
        GoalSpace {
            width: map.width(),
            goals: Vec::new(),
            counts: vec![0; map.num_cells()],
        }
    }

    #[inline]
    fn slot(&self, p: Pos) -> usize {
        p.y * self.width + p.x
    }

    /// Records one occurrence of `state`, adding it as a goal on first sight.
    #[inline]
    pub fn add_observation(&mut self, state: Pos) {
        let i = self.slot(state);
        if self.counts[i] == 0 {
            self.goals.push(state);
        }
        self.counts[i] += 1;
    }

    /// Uniform draw over discovered goals.
    pub fn sample_goal<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Pos> {
        if self.goals.is_empty() {
            return Err(Error::EmptyGoalSpace);
        }
        Ok(self.goals[rng.gen_range(0..self.goals.len())])
    }

    pub fn visit_count(&self, goal: Pos) -> u64 {
        self.counts.get(self.slot(goal)).copied().unwrap_or(0)
    }

    pub fn contains(&self, goal: Pos) -> bool {
        self.visit_count(goal) > 0
    }

    pub fn goals(&self) -> &[Pos] {
        &self.goals
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn total_observations(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `x,y,n` rows in discovery order, with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,n")?;
        for g in &self.goals {
            writeln!(w, "{},{},{}", g.x, g.y, self.visit_count(*g))?;
        }
        Ok(())
    }
}

/// Seeds a goal space from one uniformly random episode starting at the map's
/// start cell. The episode ends on lava or after `episode_cap` steps.
///
/// Returns the goal space and the number of environment steps taken. Lava
/// cells entered by the episode are not goals.
pub fn init_goal_space<R: Rng + ?Sized>(
    map: &GridMap,
    episode_cap: usize,
    rng: &mut R,
) -> (GoalSpace, usize) {
    assert!(episode_cap >= 1, "episode cap must be at least one step");
    let mut gs = GoalSpace::new(map);
    let mut state = map.reset();
    gs.add_observation(state.pos);
    let mut steps = 0;
    while steps < episode_cap {
        state = step(map, state, random_action(rng));
        steps += 1;
        if state.terminal {
            break;
        }
        gs.add_observation(state.pos);
    }
    (gs, steps)
}

/// Probability of post-exploring from a goal seen `n` times: `(1/n)^beta`.
///
/// Panics if `n` is zero.
#[inline]
pub fn post_explore_probability(n: u64, beta: f64) -> f64 {
    assert!(n >= 1, "visit count must be positive");
    debug_assert!(beta >= 0.0);
    (n as f64).powf(-beta)
}
