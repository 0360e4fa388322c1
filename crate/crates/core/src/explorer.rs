//! Goal exploration with post-exploration.
//!
//! Each episode samples a goal from the discovered goal space, rolls out the
//! epsilon-greedy goal-conditioned policy towards it with online Q updates,
//! optionally keeps exploring at random once the goal is reached, and finally
//! replays the episode with hindsight goals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::{q_update, random_action, reward, select_action, QTable, Transition};
use crate::error::Result;
use crate::eval::{Evaluator, Heatmap};
use crate::goals::{init_goal_space, post_explore_probability, GoalSpace};
use crate::grid::{step, EnvState, GridMap, Pos};
use crate::harness::{Checkpoint, RunConfig, RunLog};
use crate::hindsight;

/// Stream id of the evaluation RNG, kept apart from training draws.
const EVAL_STREAM: u64 = 1;

/// Episodes in a row that may take no environment step before training is
/// declared stalled. Only a goal space holding nothing but the agent's
/// current cell, with post-exploration off, gets there.
const MAX_IDLE_EPISODES: u32 = 10_000;

/// One episode's transitions. Those before `pe_boundary` were spent reaching
/// for `goal`; the rest are post-exploration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
    pub pe_boundary: usize,
    pub goal: Pos,
    pub goal_reached: bool,
}

impl Trajectory {
    pub fn new(goal: Pos) -> Self {
        Trajectory {
            transitions: Vec::new(),
            pe_boundary: 0,
            goal,
            goal_reached: false,
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Length of the goal-reaching part.
    pub fn goal_phase_len(&self) -> usize {
        self.pe_boundary
    }

    pub fn pe_len(&self) -> usize {
        self.transitions.len() - self.pe_boundary
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeMode {
    Always,
    /// Post-explore with probability `(1/n(g))^beta`.
    NoveltyGated(f64),
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeDuration {
    Fixed(usize),
    /// Fraction of the goal-reaching length.
    Proportional(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeSchedule {
    pub mode: PeMode,
    pub duration: PeDuration,
}

/// Number of post-exploration steps after a goal-reaching part of `n_ep`
/// steps. Proportional durations round half up and never drop below one.
pub fn pe_length(duration: PeDuration, n_ep: usize) -> usize {
    match duration {
        PeDuration::Fixed(n) => n,
        PeDuration::Proportional(p) => {
            // The slack absorbs representation error in decimal fractions,
            // e.g. 0.7 * 5 evaluating to 3.4999999999999996.
            let steps = (p * n_ep as f64 + 0.5 + 1e-9).floor() as usize;
            steps.max(1)
        }
    }
}

/// Decides whether to post-explore from `goal`. Only a reached goal
/// qualifies; the gated mode draws once from `rng`.
pub fn should_post_explore<R: Rng + ?Sized>(
    schedule: &PeSchedule,
    gs: &GoalSpace,
    goal: Pos,
    goal_reached: bool,
    rng: &mut R,
) -> bool {
    if !goal_reached {
        return false;
    }
    match schedule.mode {
        PeMode::Off => false,
        PeMode::Always => true,
        PeMode::NoveltyGated(beta) => {
            let n = gs.visit_count(goal).max(1);
            rng.gen::<f64>() <= post_explore_probability(n, beta)
        }
    }
}

/// One epsilon-greedy step towards `goal` with its online Q update. The new
/// state is added to the goal space unless it is lava.
#[inline]
pub fn goal_step<R: Rng + ?Sized>(
    map: &GridMap,
    q: &mut QTable,
    gs: &mut GoalSpace,
    state: EnvState,
    goal: Pos,
    epsilon: f64,
    rng: &mut R,
) -> (Transition, EnvState) {
    let a = select_action(q, state.pos, goal, epsilon, rng);
    let next = step(map, state, a);
    let t = Transition {
        s: state.pos,
        a,
        r: reward(next.pos, goal),
        s_next: next.pos,
        terminal: next.terminal,
        goal: Some(goal),
    };
    q_update(q, &t);
    if !next.terminal {
        gs.add_observation(next.pos);
    }
    (t, next)
}

/// One uniformly random post-exploration step. No learning happens here.
#[inline]
pub fn pe_step<R: Rng + ?Sized>(
    map: &GridMap,
    gs: &mut GoalSpace,
    state: EnvState,
    rng: &mut R,
) -> (Transition, EnvState) {
    let a = random_action(rng);
    let next = step(map, state, a);
    if !next.terminal {
        gs.add_observation(next.pos);
    }
    let t = Transition {
        s: state.pos,
        a,
        r: 0.0,
        s_next: next.pos,
        terminal: next.terminal,
        goal: None,
    };
    (t, next)
}

/// Rolls out towards `goal` from `from` until the goal is reached, lava is
/// entered, or `step_cap` steps have been taken.
#[allow(clippy::too_many_arguments)]
pub fn run_goal_phase<R: Rng + ?Sized>(
    map: &GridMap,
    q: &mut QTable,
    gs: &mut GoalSpace,
    from: EnvState,
    goal: Pos,
    epsilon: f64,
    step_cap: usize,
    rng: &mut R,
) -> (Trajectory, EnvState) {
    assert!(step_cap >= 1);
    assert!(!from.terminal);
    let mut traj = Trajectory::new(goal);
    let mut state = from;
    while state.pos != goal && !state.terminal && traj.transitions.len() < step_cap {
        let (t, next) = goal_step(map, q, gs, state, goal, epsilon, rng);
        traj.transitions.push(t);
        state = next;
    }
    traj.pe_boundary = traj.transitions.len();
    traj.goal_reached = state.pos == goal && !state.terminal;
    (traj, state)
}

/// Takes up to `n_steps` random actions from `from`, stopping early on lava.
pub fn run_post_exploration<R: Rng + ?Sized>(
    map: &GridMap,
    gs: &mut GoalSpace,
    from: EnvState,
    n_steps: usize,
    rng: &mut R,
) -> (Vec<Transition>, EnvState) {
    assert!(!from.terminal);
    let mut out = Vec::with_capacity(n_steps);
    let mut state = from;
    for _ in 0..n_steps {
        let (t, next) = pe_step(map, gs, state, rng);
        out.push(t);
        state = next;
        if state.terminal {
            break;
        }
    }
    (out, state)
}

/// Builds the configured environment and trains on it.
pub fn train(config: &RunConfig) -> Result<RunLog> {
    config.validate()?;
    let map = config.env_family.build(config.env_seed)?;
    train_on(&map, config)
}

/// Evaluation bookkeeping: fires on every multiple of the interval up to the
/// budget.
struct Checkpoints {
    interval: u64,
    budget: u64,
    evaluator: Evaluator,
    rng: ChaCha8Rng,
    out: Vec<Checkpoint>,
}

impl Checkpoints {
    #[inline]
    fn after_step(&mut self, steps: u64, q: &QTable, map: &GridMap) {
        if steps.is_multiple_of(self.interval) && steps <= self.budget {
            let report = self.evaluator.evaluate(q, map, &mut self.rng);
            self.out.push(Checkpoint {
                step: steps,
                coverage: report.coverage,
            });
        }
    }
}

/// Trains on `map` with the settings of `config` (its environment fields are
/// only echoed).
///
/// The global step counter covers the initialisation episode, goal-reaching
/// steps and post-exploration steps. Training stops as soon as it reaches the
/// budget, even mid-episode; the initialisation episode always runs in full.
pub fn train_on(map: &GridMap, config: &RunConfig) -> Result<RunLog> {
    train_agent(map, config).map(|(log, _)| log)
}

/// [`train_on`], also handing back the learned table.
pub fn train_agent(map: &GridMap, config: &RunConfig) -> Result<(RunLog, QTable)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.master_seed);
    let mut eval_rng = ChaCha8Rng::seed_from_u64(config.master_seed);
    eval_rng.set_stream(EVAL_STREAM);

    let schedule = config.pe_schedule();
    let budget = config.budget;
    let mut log = RunLog::new(config.clone());
    let mut q = QTable::new(map, config.alpha, config.gamma);
    let mut checkpoints = Checkpoints {
        interval: config.eval_interval,
        budget,
        evaluator: Evaluator::new(map, config.eval_cap),
        rng: eval_rng,
        out: Vec::new(),
    };

    let (mut gs, init_steps) = init_goal_space(map, config.step_cap, &mut rng);
    let mut heat = Heatmap::new(map);
    for &g in gs.goals() {
        for _ in 0..gs.visit_count(g) {
            heat.record_visit(g);
        }
    }
    let c = &mut log.counters;
    c.init_steps = init_steps as u64;
    let mut steps = 0u64;
    // The table is untouched during initialisation, so evaluating afterwards
    // matches evaluating at the crossing step.
    for _ in 0..init_steps {
        steps += 1;
        checkpoints.after_step(steps, &q, map);
    }

    let mut state = map.reset();
    let mut idle = 0u32;
    while steps < budget {
        if config.episodic || state.terminal {
            state = map.reset();
        }
        let goal = gs.sample_goal(&mut rng)?;
        let mut traj = Trajectory::new(goal);
        let steps_before = steps;

        while state.pos != goal && !state.terminal && traj.len() < config.step_cap && steps < budget
        {
            let (t, next) = goal_step(map, &mut q, &mut gs, state, goal, config.epsilon, &mut rng);
            if !next.terminal {
                heat.record_visit(next.pos);
            }
            traj.transitions.push(t);
            state = next;
            steps += 1;
            checkpoints.after_step(steps, &q, map);
        }
        traj.pe_boundary = traj.len();
        traj.goal_reached = state.pos == goal && !state.terminal;

        if steps < budget && should_post_explore(&schedule, &gs, goal, traj.goal_reached, &mut rng)
        {
            let n_pe = pe_length(schedule.duration, traj.goal_phase_len());
            c.pe_episodes += 1;
            for _ in 0..n_pe {
                if state.terminal || steps >= budget {
                    break;
                }
                let (t, next) = pe_step(map, &mut gs, state, &mut rng);
                if !next.terminal {
                    heat.record_visit(next.pos);
                }
                traj.transitions.push(t);
                state = next;
                steps += 1;
                checkpoints.after_step(steps, &q, map);
            }
        }

        let stats = hindsight::relabel(&mut q, &traj, &mut rng);

        c.episodes += 1;
        c.goal_steps += traj.goal_phase_len() as u64;
        c.pe_steps += traj.pe_len() as u64;
        c.relabel_goals += stats.goals as u64;
        c.relabel_updates += stats.updates as u64;
        c.goal_successes += u64::from(traj.goal_reached);
        c.lava_deaths += u64::from(state.terminal);

        if steps == steps_before {
            idle += 1;
            if idle >= MAX_IDLE_EPISODES {
                c.stalled = true;
                break;
            }
        } else {
            idle = 0;
        }
    }

    // A stalled agent's table is frozen; the remaining checkpoints still get
    // evaluated so that every run reports the same steps.
    if c.stalled {
        let mut at = (steps / config.eval_interval + 1) * config.eval_interval;
        while at <= budget {
            checkpoints.after_step(at, &q, map);
            at += config.eval_interval;
        }
    }

    c.env_steps = steps;
    c.goals_discovered = gs.len() as u64;
    log.checkpoints = checkpoints.out;
    log.heatmap = Some(heat);
    Ok((log, q))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::grid::Cell;
    use crate::harness::PeModeKind;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn pe_length_examples() {
        assert_eq!(pe_length(PeDuration::Proportional(0.5), 40), 20);
        assert_eq!(pe_length(PeDuration::Fixed(10), 999), 10);
        assert_eq!(pe_length(PeDuration::Proportional(0.5), 5), 3);
        assert_eq!(pe_length(PeDuration::Proportional(0.7), 5), 4);
        assert_eq!(pe_length(PeDuration::Proportional(0.1), 0), 1);
        assert_eq!(pe_length(PeDuration::Proportional(0.1), 4), 1);
    }

    #[test]
    fn goal_at_start_is_trivially_reached() {
        let map = GridMap::empty(4, 4).unwrap();
        let mut q = QTable::new(&map, 0.1, 0.99);
        let mut gs = GoalSpace::new(&map);
        let (traj, _) = run_goal_phase(
            &map,
            &mut q,
            &mut gs,
            map.reset(),
            map.start(),
            0.1,
            100,
            &mut rng(0),
        );
        assert!(traj.is_empty());
        assert!(traj.goal_reached);
    }

    #[test]
    fn goal_phase_respects_cap() {
        let map = GridMap::empty(4, 4).unwrap();
        let mut q = QTable::new(&map, 0.1, 0.99);
        let mut gs = GoalSpace::new(&map);
        let goal = Pos::new(4, 4);
        let (traj, _) = run_goal_phase(
            &map,
            &mut q,
            &mut gs,
            map.reset(),
            goal,
            0.1,
            1,
            &mut rng(0),
        );
        assert_eq!(traj.len(), 1);
        assert!(!traj.goal_reached);
        assert_eq!(traj.transitions[0].goal, Some(goal));
    }

    #[test]
    fn unreached_goal_never_post_explores() {
        let map = GridMap::empty(3, 3).unwrap();
        let gs = GoalSpace::new(&map);
        let always = PeSchedule {
            mode: PeMode::Always,
            duration: PeDuration::Fixed(5),
        };
        assert!(!should_post_explore(
            &always,
            &gs,
            map.start(),
            false,
            &mut rng(0)
        ));
        assert!(should_post_explore(
            &always,
            &gs,
            map.start(),
            true,
            &mut rng(0)
        ));
        let off = PeSchedule {
            mode: PeMode::Off,
            ..always
        };
        assert!(!should_post_explore(
            &off,
            &gs,
            map.start(),
            true,
            &mut rng(0)
        ));
    }

    #[test]
    fn post_exploration_segment() {
        let map = GridMap::empty(6, 6).unwrap();
        let mut gs = GoalSpace::new(&map);
        let from = EnvState::at(Pos::new(3, 3));
        let (seg, _) = run_post_exploration(&map, &mut gs, from, 5, &mut rng(2));
        assert_eq!(seg.len(), 5);
        assert!(seg.iter().all(|t| t.goal.is_none() && t.r == 0.0));
        assert_eq!(gs.total_observations(), 5);
        let (again, _) =
            run_post_exploration(&map, &mut GoalSpace::new(&map), from, 5, &mut rng(2));
        assert_eq!(seg, again);
    }

    #[test]
    fn post_exploration_stops_in_lava() {
        let map: GridMap = "\
#####
#...#
#LSL#
#.L.#
#####
"
        .parse()
        .unwrap();
        let mut gs = GoalSpace::new(&map);
        let from = map.reset();
        let mut deaths = 0;
        for seed in 0..20 {
            let (seg, end) = run_post_exploration(&map, &mut gs, from, 50, &mut rng(seed));
            if end.terminal {
                deaths += 1;
                assert_eq!(map.cell(end.pos), Cell::Lava);
                assert!(seg.last().unwrap().terminal);
                assert!(seg[..seg.len() - 1].iter().all(|t| !t.terminal));
            } else {
                assert_eq!(seg.len(), 50);
            }
        }
        assert!(deaths > 0);
    }

    #[test]
    fn zero_budget_runs_initialisation_only() {
        let config = RunConfig {
            budget: 0,
            ..RunConfig::default()
        };
        let log = train(&config).unwrap();
        assert!(log.checkpoints.is_empty());
        assert_eq!(log.counters.episodes, 0);
        assert_eq!(log.counters.env_steps, log.counters.init_steps);
        assert!(log.counters.init_steps >= 1);
    }

    #[test]
    fn step_accounting_and_checkpoints() {
        let config = RunConfig {
            env_family: crate::grid::EnvFamily::LavaGap,
            budget: 10_000,
            ..RunConfig::default()
        };
        let log = train(&config).unwrap();
        let c = log.counters;
        assert_eq!(c.env_steps, 10_000);
        assert_eq!(c.env_steps, c.init_steps + c.goal_steps + c.pe_steps);
        let steps: Vec<u64> = log.checkpoints.iter().map(|c| c.step).collect();
        assert_eq!(steps, vec![2000, 4000, 6000, 8000, 10_000]);
        // Every step but a lava entry is observed, plus the initial start cell.
        let init_lava = u64::from(c.init_steps < config.step_cap as u64);
        assert_eq!(
            log.heatmap.as_ref().unwrap().total() + c.lava_deaths + init_lava,
            c.env_steps + 1
        );
    }

    #[test]
    fn off_mode_never_post_explores() {
        let config = RunConfig {
            pe_mode: PeModeKind::Off,
            budget: 5000,
            ..RunConfig::default()
        };
        let log = train(&config).unwrap();
        assert_eq!(log.counters.pe_steps, 0);
        assert_eq!(log.counters.pe_episodes, 0);
    }
}
