//! Tabular goal-conditioned Q-learning.

use std::io::Write;

use rand::Rng;

use crate::error::Result;
use crate::grid::{Action, GridMap, Pos};

const NUM_ACTIONS: usize = Action::ALL.len();

type Row = [f64; NUM_ACTIONS];

/// Action values `Q(s, a, g)`, defaulting to 0.
///
/// Storage is allocated lazily per goal: a goal that has never been trained
/// on costs one empty slot. Within a goal, values are dense over states.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    width: usize,
    cells: usize,
    alpha: f64,
    gamma: f64,
    by_goal: Vec<Option<Box<[Row]>>>,
}

impl QTable {
    pub fn new(map: &GridMap, alpha: f64, gamma: f64) -> Self {
        assert!((0.0..=1.0).contains(&alpha), "alpha must lie in [0, 1]");
        assert!((0.0..=1.0).contains(&gamma), "gamma must lie in [0, 1]");
        QTable {
            width: map.width(),
            cells: map.num_cells(),
            alpha,
            gamma,
            by_goal: vec![None; map.num_cells()],
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    fn slot(&self, p: Pos) -> usize {
        p.y * self.width + p.x
    }

    fn pos(&self, slot: usize) -> Pos {
        Pos::new(slot % self.width, slot / self.width)
    }

    /// All four action values of `state` under `goal`.
    #[inline]
    pub fn row(&self, state: Pos, goal: Pos) -> Row {
        match &self.by_goal[self.slot(goal)] {
            Some(rows) => rows[self.slot(state)],
            None => [0.0; NUM_ACTIONS],
        }
    }

    #[inline]
    pub fn get(&self, state: Pos, action: Action, goal: Pos) -> f64 {
        self.row(state, goal)[action.index()]
    }

    #[inline]
    pub fn max_value(&self, state: Pos, goal: Pos) -> f64 {
        self.row(state, goal)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[inline]
    fn entry(&mut self, state: Pos, action: Action, goal: Pos) -> &mut f64 {
        let (g, s, cells) = (self.slot(goal), self.slot(state), self.cells);
        let rows = self.by_goal[g]
            .get_or_insert_with(|| vec![[0.0; NUM_ACTIONS]; cells].into_boxed_slice());
        &mut rows[s][action.index()]
    }

    pub fn set(&mut self, state: Pos, action: Action, goal: Pos, value: f64) {
        *self.entry(state, action, goal) = value;
    }

    /// Non-zero entries as `(state, action, goal, value)`, ordered by goal,
    /// then state, then action.
    pub fn entries(&self) -> impl Iterator<Item = (Pos, Action, Pos, f64)> + '_ {
        self.by_goal.iter().enumerate().flat_map(move |(g, rows)| {
            rows.iter().flat_map(move |rows| {
                rows.iter().enumerate().flat_map(move |(s, row)| {
                    row.iter()
                        .enumerate()
                        .filter(|(_, v)| **v != 0.0)
                        .map(move |(a, v)| (self.pos(s), Action::from_index(a), self.pos(g), *v))
                })
            })
        })
    }

    /// Snapshot as `sx,sy,action,gx,gy,value` rows of the non-zero entries.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "sx,sy,action,gx,gy,value")?;
        for (s, a, g, v) in self.entries() {
            writeln!(w, "{},{},{},{},{},{}", s.x, s.y, a, g.x, g.y, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub s: Pos,
    pub a: Action,
    pub r: f64,
    pub s_next: Pos,
    /// The environment ended the episode (lava).
    pub terminal: bool,
    /// `None` for post-exploration steps.
    pub goal: Option<Pos>,
}

/// Sparse goal-conditioned reward: 1 when the next state is the goal.
#[inline]
pub fn reward(s_next: Pos, goal: Pos) -> f64 {
    if s_next == goal {
        1.0
    } else {
        0.0
    }
}

/// One Q-learning backup of `t` under its goal. Reaching the goal and
/// entering lava are terminal: neither bootstraps.
///
/// Panics if `t.goal` is `None`.
#[inline]
pub fn q_update(q: &mut QTable, t: &Transition) -> f64 {
    let goal = t.goal.expect("q_update needs a goal-labelled transition");
    let target = if t.terminal || t.s_next == goal {
        t.r
    } else {
        t.r + q.gamma * q.max_value(t.s_next, goal)
    };
    let alpha = q.alpha;
    let v = q.entry(t.s, t.a, goal);
    *v += alpha * (target - *v);
    *v
}

#[inline]
pub fn random_action<R: Rng + ?Sized>(rng: &mut R) -> Action {
    Action::from_index(rng.gen_range(0..NUM_ACTIONS))
}

/// Epsilon-greedy action for `state` under `goal`. Greedy ties are broken
/// uniformly at random; with `epsilon == 0` this is the greedy policy.
#[inline]
pub fn select_action<R: Rng + ?Sized>(
    q: &QTable,
    state: Pos,
    goal: Pos,
    epsilon: f64,
    rng: &mut R,
) -> Action {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return random_action(rng);
    }
    let row = q.row(state, goal);
    let best = row.into_iter().fold(f64::NEG_INFINITY, f64::max);
    let mut ties = [0usize; NUM_ACTIONS];
    let mut n = 0;
    for (i, v) in row.into_iter().enumerate() {
        if v == best {
            ties[n] = i;
            n += 1;
        }
    }
    let pick = if n == 1 {
        ties[0]
    } else {
        ties[rng.gen_range(0..n)]
    };
    Action::from_index(pick)
}
