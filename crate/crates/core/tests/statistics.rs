//! Frequency checks on the stochastic pieces. Bounds are 4-5 sigma so a
//! fixed seed passing is not luck.

use postexplore::explorer::should_post_explore;
use postexplore::{
    select_action, Action, GoalSpace, GridMap, PeDuration, PeMode, PeSchedule, Pos, QTable,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DRAWS: usize = 200_000;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Pearson statistic against a uniform expectation.
fn chi_squared(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum()
}

#[test]
fn goal_sampling_is_uniform_over_distinct_goals() {
    let map = GridMap::empty(4, 4).unwrap();
    let mut gs = GoalSpace::new(&map);
    let goals: Vec<Pos> = map
        .positions()
        .filter(|&p| map.cell(p) == postexplore::Cell::Free)
        .collect();
    for (i, &g) in goals.iter().enumerate() {
        // Visit counts must not bias sampling.
        for _ in 0..=i * 3 {
            gs.add_observation(g);
        }
    }
    let mut counts = vec![0usize; goals.len()];
    let mut r = rng(1);
    for _ in 0..DRAWS {
        let g = gs.sample_goal(&mut r).unwrap();
        counts[goals.iter().position(|&x| x == g).unwrap()] += 1;
    }
    // 15 degrees of freedom; p < 1e-5 threshold.
    assert!(chi_squared(&counts) < 49.0, "{counts:?}");
}

#[test]
fn full_epsilon_is_uniform_over_actions() {
    let map = GridMap::empty(3, 3).unwrap();
    let mut q = QTable::new(&map, 0.1, 0.99);
    let (s, g) = (Pos::new(2, 2), Pos::new(3, 3));
    q.set(s, Action::Right, g, 0.9);
    let mut counts = [0usize; 4];
    let mut r = rng(2);
    for _ in 0..DRAWS {
        counts[select_action(&q, s, g, 1.0, &mut r).index()] += 1;
    }
    // 3 degrees of freedom; p < 1e-5 threshold.
    assert!(chi_squared(&counts) < 25.9, "{counts:?}");
}

#[test]
fn greedy_ties_split_evenly() {
    let map = GridMap::empty(3, 3).unwrap();
    let mut q = QTable::new(&map, 0.1, 0.99);
    let (s, g) = (Pos::new(2, 2), Pos::new(3, 3));
    q.set(s, Action::Down, g, 0.5);
    q.set(s, Action::Right, g, 0.5);
    q.set(s, Action::Up, g, 0.2);
    let mut counts = [0usize; 4];
    let mut r = rng(3);
    for _ in 0..DRAWS {
        counts[select_action(&q, s, g, 0.0, &mut r).index()] += 1;
    }
    assert_eq!(counts[Action::Up.index()] + counts[Action::Left.index()], 0);
    let down = counts[Action::Down.index()] as f64 / DRAWS as f64;
    let sigma = (0.25 / DRAWS as f64).sqrt();
    assert!((down - 0.5).abs() < 5.0 * sigma, "{down}");
}

#[test]
fn gated_rate_follows_visit_count() {
    let map = GridMap::empty(3, 3).unwrap();
    let mut gs = GoalSpace::new(&map);
    let goal = Pos::new(2, 2);
    for _ in 0..4 {
        gs.add_observation(goal);
    }
    for (beta, p) in [(1.0, 0.25), (0.5, 0.5), (0.0, 1.0)] {
        let schedule = PeSchedule {
            mode: PeMode::NoveltyGated(beta),
            duration: PeDuration::Fixed(1),
        };
        let mut r = rng(4);
        let hits = (0..DRAWS)
            .filter(|_| should_post_explore(&schedule, &gs, goal, true, &mut r))
            .count();
        let rate = hits as f64 / DRAWS as f64;
        let sigma = (p * (1.0 - p) / DRAWS as f64).sqrt().max(1e-12);
        assert!(
            (rate - p).abs() <= 5.0 * sigma,
            "beta {beta}: {rate} vs {p}"
        );
    }
}
