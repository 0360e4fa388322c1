use std::collections::{BTreeSet, HashSet, VecDeque};

use postexplore::grid::{bfs_distances, reachable_cells};
use postexplore::{step, Action, Cell, EnvFamily, EnvState, GridMap, Pos};
use proptest::prelude::*;

fn flood(map: &GridMap) -> BTreeSet<Pos> {
    let mut seen = BTreeSet::from([map.start()]);
    let mut queue = VecDeque::from([map.start()]);
    while let Some(p) = queue.pop_front() {
        for n in [
            Pos::new(p.x, p.y - 1),
            Pos::new(p.x, p.y + 1),
            Pos::new(p.x - 1, p.y),
            Pos::new(p.x + 1, p.y),
        ] {
            if map.cell(n) == Cell::Free && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen
}

#[test]
fn four_rooms_layout() {
    let map = EnvFamily::FourRooms.build(0).unwrap();
    assert_eq!((map.width(), map.height()), (19, 19));
    assert_eq!(map.start(), Pos::new(14, 14));
    assert_eq!(map.count(Cell::Lava), 0);
    let reach = flood(&map);
    assert_eq!(reach.len(), 260);
    assert_eq!(reach, reachable_cells(&map, map.start()));
    for door in [
        Pos::new(9, 4),
        Pos::new(9, 14),
        Pos::new(4, 9),
        Pos::new(14, 9),
    ] {
        assert_eq!(map.cell(door), Cell::Free, "{door}");
    }
    assert_eq!(
        map.to_text(),
        EnvFamily::FourRooms.build(42).unwrap().to_text()
    );
}

#[test]
fn lava_crossing_rivers() {
    let mut layouts = HashSet::new();
    for seed in 0..10 {
        let map = EnvFamily::LavaCrossing.build(seed).unwrap();
        let n = map.width();
        let lava_in = |cells: Vec<Pos>| {
            cells
                .into_iter()
                .filter(|&p| map.cell(p) == Cell::Lava)
                .count()
        };
        let mut rivers = 0;
        for c in 1..n - 1 {
            let col = lava_in((1..n - 1).map(|y| Pos::new(c, y)).collect());
            let row = lava_in((1..n - 1).map(|x| Pos::new(x, c)).collect());
            for count in [col, row] {
                if count >= n - 3 {
                    assert_eq!(c % 2, 0, "seed {seed}: river on odd line {c}");
                    assert_eq!(
                        count,
                        n - 3,
                        "seed {seed}: river on line {c} must have one gap"
                    );
                    rivers += 1;
                }
            }
        }
        assert_eq!(rivers, 5, "seed {seed}");
        assert!(
            flood(&map).contains(&Pos::new(n - 2, n - 2)),
            "seed {seed}: goal corner unreachable"
        );
        layouts.insert(map.to_text());
    }
    assert_eq!(layouts.len(), 10);
}

#[test]
fn lava_gap_has_single_crossing() {
    for seed in 0..10 {
        let map = EnvFamily::LavaGap.build(seed).unwrap();
        let gaps: Vec<usize> = (1..6)
            .filter(|&y| map.cell(Pos::new(3, y)) == Cell::Free)
            .collect();
        assert_eq!(gaps.len(), 1, "seed {seed}");
        assert_eq!(map.count(Cell::Lava), 4);
        assert!(flood(&map).contains(&Pos::new(5, 5)));
    }
}

#[test]
fn generation_is_seeded() {
    for family in EnvFamily::ALL {
        assert_eq!(family.build(3).unwrap(), family.build(3).unwrap());
    }
}

#[test]
fn bfs_matches_flood_fill() {
    for family in EnvFamily::ALL {
        let map = family.build(1).unwrap();
        let d = bfs_distances(&map, map.start());
        let reached: BTreeSet<Pos> = map
            .positions()
            .filter(|&p| d[map.index(p)].is_some())
            .collect();
        assert_eq!(reached, flood(&map), "{family}");
    }
}

fn any_action() -> impl Strategy<Value = Action> {
    (0..4usize).prop_map(Action::from_index)
}

proptest! {
    #[test]
    fn walks_never_enter_walls(seed in 0u64..50, family in 0..3usize, actions in prop::collection::vec(any_action(), 1..200)) {
        let map = EnvFamily::ALL[family].build(seed).unwrap();
        let mut state = map.reset();
        for a in actions {
            let next = step(&map, state, a);
            prop_assert_ne!(map.cell(next.pos), Cell::Wall);
            let moved = a.shift(state.pos);
            if map.cell(moved) == Cell::Wall {
                prop_assert_eq!(next, state);
            } else {
                prop_assert_eq!(next.pos, moved);
                prop_assert_eq!(next.terminal, map.cell(moved) == Cell::Lava);
            }
            state = if next.terminal { EnvState::at(map.start()) } else { next };
        }
    }

    #[test]
    fn map_text_round_trips(seed in 0u64..100) {
        let map = EnvFamily::LavaCrossing.build(seed).unwrap();
        let back: GridMap = map.to_text().parse().unwrap();
        prop_assert_eq!(back.to_text(), map.to_text());
    }
}
