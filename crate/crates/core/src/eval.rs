//! Coverage evaluation, visitation heat maps and learning-curve aggregation.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{select_action, QTable};
use crate::error::{Error, Result};
use crate::grid::{reachable_cells, step, GridMap, Pos};
use crate::harness::RunLog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalOutcome {
    pub reached: bool,
    pub path_length: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub step: u64,
    pub coverage: f64,
    pub per_goal: Vec<(Pos, GoalOutcome)>,
}

impl EvalReport {
    pub fn reached(&self) -> usize {
        self.per_goal.iter().filter(|(_, o)| o.reached).count()
    }
}

/// Greedy goal-reaching test over every free cell reachable from the start.
#[derive(Debug, Clone)]
pub struct Evaluator {
    goals: Vec<Pos>,
    eval_cap: usize,
}

impl Evaluator {
    pub fn new(map: &GridMap, eval_cap: usize) -> Self {
        assert!(eval_cap >= 1, "evaluation cap must be at least one step");
        Evaluator {
            goals: reachable_cells(map, map.start()).into_iter().collect(),
            eval_cap,
        }
    }

    pub fn goals(&self) -> &[Pos] {
        &self.goals
    }

    /// Rolls out the greedy policy once per goal. Reads `q` only; `rng` breaks
    /// ties between equally valued actions.
    pub fn evaluate<R: Rng + ?Sized>(&self, q: &QTable, map: &GridMap, rng: &mut R) -> EvalReport {
        let per_goal: Vec<_> = self
            .goals
            .iter()
            .map(|&g| (g, greedy_rollout(q, map, g, self.eval_cap, rng)))
            .collect();
        let reached = per_goal.iter().filter(|(_, o)| o.reached).count();
        EvalReport {
            step: 0,
            coverage: reached as f64 / self.goals.len() as f64,
            per_goal,
        }
    }
}

fn greedy_rollout<R: Rng + ?Sized>(
    q: &QTable,
    map: &GridMap,
    goal: Pos,
    cap: usize,
    rng: &mut R,
) -> GoalOutcome {
    let mut state = map.reset();
    for taken in 0..=cap {
        if state.pos == goal {
            return GoalOutcome {
                reached: true,
                path_length: Some(taken),
            };
        }
        if state.terminal || taken == cap {
            break;
        }
        state = step(map, state, select_action(q, state.pos, goal, 0.0, rng));
    }
    GoalOutcome {
        reached: false,
        path_length: None,
    }
}

/// Fraction of start-reachable cells the greedy policy reaches within
/// `eval_cap` steps.
pub fn evaluate_coverage<R: Rng + ?Sized>(
    q: &QTable,
    map: &GridMap,
    eval_cap: usize,
    rng: &mut R,
) -> EvalReport {
    Evaluator::new(map, eval_cap).evaluate(q, map, rng)
}

/// Per-cell count of training-time state observations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Heatmap {
    width: usize,
    height: usize,
    counts: Vec<u64>,
}

impl Heatmap {
    pub fn new(map: &GridMap) -> Self {
        Heatmap {
            width: map.width(),
            height: map.height(),
            counts: vec![0; map.num_cells()],
        }
    }

    #[inline]
    pub fn record_visit(&mut self, state: Pos) {
        assert!(
            state.x < self.width && state.y < self.height,
            "{state} out of bounds"
        );
        self.counts[state.y * self.width + state.x] += 1;
    }

    pub fn get(&self, p: Pos) -> u64 {
        self.counts[p.y * self.width + p.x]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn max(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// One CSV line per grid row, no header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for row in self.counts.chunks(self.width) {
            let line: Vec<String> = row.iter().map(u64::to_string).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Square-per-cell rendering on a white-to-red scale. Walls are drawn grey.
    pub fn to_svg(&self, map: &GridMap) -> String {
        const CELL: usize = 20;
        let max = self.max().max(1) as f64;
        let (w, h) = (self.width * CELL, self.height * CELL);
        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
        );
        for y in 0..self.height {
            for x in 0..self.width {
                let p = Pos::new(x, y);
                let fill = match map.cell(p) {
                    crate::grid::Cell::Wall => "#555555".to_string(),
                    crate::grid::Cell::Lava => "#ff8c00".to_string(),
                    crate::grid::Cell::Free => {
                        // sqrt scale keeps sparsely visited cells visible
                        let t = (self.get(p) as f64 / max).sqrt();
                        let c = (255.0 * (1.0 - t)).round() as u8;
                        format!("#ff{c:02x}{c:02x}")
                    }
                };
                svg.push_str(&format!(
                    "<rect x=\"{}\" y=\"{}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{fill}\"><title>{x},{y}: {}</title></rect>\n",
                    x * CELL,
                    y * CELL,
                    self.get(p)
                ));
            }
        }
        let s = map.start();
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"none\" stroke=\"#0050ff\" stroke-width=\"2\"/>\n",
            s.x * CELL,
            s.y * CELL
        ));
        svg.push_str("</svg>\n");
        svg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: u64,
    pub mean: f64,
    pub stderr: f64,
}

/// Mean and standard error of the sample mean, `sd / sqrt(n)` with the
/// `n - 1` sample deviation. A single value has zero error.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean coverage curve with standard error across repetitions.
///
/// Each element of `repetitions` holds the runs belonging to one repetition
/// (for example one per environment seed); those are averaged first, and the
/// error is taken across the per-repetition averages. All runs must share the
/// same checkpoint steps.
pub fn aggregate_curves(repetitions: &[Vec<&RunLog>]) -> Result<Vec<CurvePoint>> {
    let first = repetitions
        .iter()
        .flatten()
        .next()
        .ok_or_else(|| Error::config("no runs to aggregate"))?;
    let steps: Vec<u64> = first.checkpoints.iter().map(|c| c.step).collect();
    for run in repetitions.iter().flatten() {
        if !run
            .checkpoints
            .iter()
            .map(|c| c.step)
            .eq(steps.iter().copied())
        {
            return Err(Error::config("runs have mismatched evaluation checkpoints"));
        }
    }
    if repetitions.iter().any(Vec::is_empty) {
        return Err(Error::config("empty repetition"));
    }

    let curve = steps
        .iter()
        .enumerate()
        .map(|(i, &step)| {
            let per_rep: Vec<f64> = repetitions
                .iter()
                .map(|runs| {
                    runs.iter().map(|r| r.checkpoints[i].coverage).sum::<f64>() / runs.len() as f64
                })
                .collect();
            let (mean, stderr) = mean_stderr(&per_rep);
            CurvePoint { step, mean, stderr }
        })
        .collect();
    Ok(curve)
}

/// [`aggregate_curves`] with every run as its own repetition.
pub fn aggregate_runs(runs: &[RunLog]) -> Result<Vec<CurvePoint>> {
    let reps: Vec<Vec<&RunLog>> = runs.iter().map(|r| vec![r]).collect();
    aggregate_curves(&reps)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::grid::Action;
    use crate::harness::{Checkpoint, RunConfig, RunLog};

    fn log(coverages: &[f64]) -> RunLog {
        let mut log = RunLog::new(RunConfig::default());
        log.checkpoints = coverages
            .iter()
            .enumerate()
            .map(|(i, &coverage)| Checkpoint {
                step: (i as u64 + 1) * 2000,
                coverage,
            })
            .collect();
        log
    }

    #[test]
    fn goal_at_start_has_zero_path() {
        let map = GridMap::empty(5, 5).unwrap();
        let q = QTable::new(&map, 0.1, 0.99);
        let report = evaluate_coverage(&q, &map, 100, &mut ChaCha8Rng::seed_from_u64(0));
        let start = report
            .per_goal
            .iter()
            .find(|(g, _)| *g == map.start())
            .unwrap();
        assert_eq!(start.1.path_length, Some(0));
        assert_eq!(report.per_goal.len(), 25);
        assert!(report.coverage >= 1.0 / 25.0);
    }

    #[test]
    fn hand_built_policy_reaches_goal() {
        let map = GridMap::empty(5, 5).unwrap();
        let mut q = QTable::new(&map, 0.1, 0.99);
        let g = Pos::new(3, 1);
        q.set(Pos::new(1, 1), Action::Right, g, 0.98);
        q.set(Pos::new(2, 1), Action::Right, g, 0.99);
        let out = greedy_rollout(&q, &map, g, 10, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(out.path_length, Some(2));
        let out = greedy_rollout(&q, &map, g, 1, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(!out.reached);
    }

    #[test]
    fn heatmap_counts() {
        let map = GridMap::empty(3, 3).unwrap();
        let mut h = Heatmap::new(&map);
        h.record_visit(Pos::new(1, 1));
        assert_eq!(h.get(Pos::new(1, 1)), 1);
        for _ in 0..4 {
            h.record_visit(Pos::new(2, 3));
        }
        assert_eq!(h.get(Pos::new(2, 3)), 4);
        assert_eq!(h.total(), 5);
        let mut csv = Vec::new();
        h.write_csv(&mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert_eq!(csv.lines().count(), 5);
        assert_eq!(csv.lines().nth(3).unwrap(), "0,0,4,0,0");
    }

    #[test]
    fn single_run_has_zero_error() {
        let curve = aggregate_runs(&[log(&[0.2, 0.5])]).unwrap();
        assert!(curve.iter().all(|p| p.stderr == 0.0));
        assert_eq!(curve[1].mean, 0.5);
    }

    #[test]
    fn two_runs_mean_and_error() {
        let curve = aggregate_runs(&[log(&[0.4]), log(&[0.6])]).unwrap();
        assert!((curve[0].mean - 0.5).abs() < 1e-12);
        assert!((curve[0].stderr - 0.1).abs() < 1e-12);
    }

    #[test]
    fn order_does_not_matter() {
        let a = aggregate_runs(&[log(&[0.1, 0.3]), log(&[0.7, 0.2]), log(&[0.4, 0.9])]).unwrap();
        let b = aggregate_runs(&[log(&[0.4, 0.9]), log(&[0.1, 0.3]), log(&[0.7, 0.2])]).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p.step, q.step);
            assert!((p.mean - q.mean).abs() < 1e-15);
            assert!((p.stderr - q.stderr).abs() < 1e-15);
        }
    }

    #[test]
    fn seeds_are_averaged_before_error() {
        let (a, b, c, d) = (log(&[0.2]), log(&[0.4]), log(&[0.6]), log(&[0.8]));
        let curve = aggregate_curves(&[vec![&a, &b], vec![&c, &d]]).unwrap();
        // per-repetition means 0.3 and 0.7
        assert!((curve[0].mean - 0.5).abs() < 1e-12);
        assert!((curve[0].stderr - 0.2).abs() < 1e-12);
    }

    #[test]
    fn mismatched_checkpoints_rejected() {
        assert!(matches!(
            aggregate_runs(&[log(&[0.4]), log(&[0.6, 0.7])]),
            Err(Error::Config(_))
        ));
        assert!(aggregate_runs(&[]).is_err());
    }
}
