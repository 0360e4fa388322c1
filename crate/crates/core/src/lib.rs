//! Goal-conditioned tabular Q-learning with adaptive post-exploration.
//!
//! An agent repeatedly samples a goal from the states it has already seen,
//! tries to reach it, and (depending on the post-exploration schedule) keeps
//! exploring at random from the reached goal before the episode ends. Every
//! episode is replayed with hindsight goals. Coverage, the fraction of
//! reachable cells the greedy policy can reach, measures progress.

pub mod agent;
pub mod error;
pub mod eval;
pub mod explorer;
pub mod goals;
pub mod grid;
pub mod harness;
pub mod hindsight;

pub use agent::{q_update, reward, select_action, QTable, Transition};
pub use error::{Error, Result};
pub use eval::{aggregate_curves, evaluate_coverage, CurvePoint, EvalReport, Heatmap};
pub use explorer::{train, train_agent, train_on, PeDuration, PeMode, PeSchedule, Trajectory};
pub use goals::{init_goal_space, post_explore_probability, GoalSpace};
pub use grid::{step, Action, Cell, EnvFamily, EnvState, GridMap, Pos};
pub use harness::{RunConfig, RunLog};
