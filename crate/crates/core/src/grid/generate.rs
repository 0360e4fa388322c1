//! Layouts for the three environment families.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{reachable_cells, Cell, GridMap, Pos};
use crate::error::{Error, Result};

const LAVA_CROSSING_SIZE: usize = 11;
const LAVA_CROSSING_RIVERS: usize = 5;
const LAVA_CROSSING_ATTEMPTS: usize = 1000;
const LAVA_GAP_SIZE: usize = 7;
const FOUR_ROOMS_SIZE: usize = 19;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvFamily {
    FourRooms,
    LavaCrossing,
    LavaGap,
}

impl EnvFamily {
    pub const ALL: [EnvFamily; 3] = [
        EnvFamily::FourRooms,
        EnvFamily::LavaCrossing,
        EnvFamily::LavaGap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnvFamily::FourRooms => "four_rooms",
            EnvFamily::LavaCrossing => "lava_crossing",
            EnvFamily::LavaGap => "lava_gap",
        }
    }

    /// Whether the layout depends on the environment seed.
    pub fn is_procedural(self) -> bool {
        !matches!(self, EnvFamily::FourRooms)
    }

    pub fn build(self, env_seed: u64) -> Result<GridMap> {
        match self {
            EnvFamily::FourRooms => Ok(build_four_rooms()),
            EnvFamily::LavaCrossing => build_lava_crossing(env_seed),
            EnvFamily::LavaGap => Ok(build_lava_gap(env_seed)),
        }
    }
}

impl fmt::Display for EnvFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EnvFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::config(format!("unknown env_family {s:?}")))
    }
}

fn walled(size: usize) -> Vec<Cell> {
    let mut cells = vec![Cell::Free; size * size];
    for i in 0..size {
        cells[i] = Cell::Wall;
        cells[(size - 1) * size + i] = Cell::Wall;
        cells[i * size] = Cell::Wall;
        cells[i * size + size - 1] = Cell::Wall;
    }
    cells
}

/// The single fixed 19x19 four-room layout. Walls run along row 9 and
/// column 9 with one doorway per wall segment; the start is in the
/// bottom-right room.
pub fn build_four_rooms() -> GridMap {
    let n = FOUR_ROOMS_SIZE;
    let mid = n / 2;
    let mut cells = walled(n);
    for i in 0..n {
        cells[mid * n + i] = Cell::Wall;
        cells[i * n + mid] = Cell::Wall;
    }
    for door in [
        Pos::new(mid, 4),
        Pos::new(mid, 14),
        Pos::new(4, mid),
        Pos::new(14, mid),
    ] {
        cells[door.y * n + door.x] = Cell::Free;
    }
    GridMap::new(n, n, cells, Pos::new(14, 14), None).expect("four-rooms layout is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum River {
    /// Lava column at this x.
    Vertical(usize),
    /// Lava row at this y.
    Horizontal(usize),
}

/// 11x11 map crossed by five lava rivers on distinct even rows or columns,
/// each with a single opening. Layouts are redrawn until the far corner
/// (9, 9) is reachable from the start (1, 1).
pub fn build_lava_crossing(env_seed: u64) -> Result<GridMap> {
    let n = LAVA_CROSSING_SIZE;
    let mut rng = ChaCha8Rng::seed_from_u64(env_seed);
    let corner = Pos::new(n - 2, n - 2);

    let lines: Vec<River> = (2..n - 1)
        .step_by(2)
        .flat_map(|c| [River::Vertical(c), River::Horizontal(c)])
        .collect();

    for _ in 0..LAVA_CROSSING_ATTEMPTS {
        let rivers: Vec<River> = lines
            .choose_multiple(&mut rng, LAVA_CROSSING_RIVERS)
            .copied()
            .collect();
        let mut cells = walled(n);
        for river in &rivers {
            for i in 1..n - 1 {
                let p = river_cell(*river, i);
                cells[p.y * n + p.x] = Cell::Lava;
            }
        }
        for river in &rivers {
            // Openings avoid crossings so every river keeps exactly one gap.
            let crossings: Vec<usize> = rivers
                .iter()
                .filter_map(|other| match (*river, *other) {
                    (River::Vertical(_), River::Horizontal(y)) => Some(y),
                    (River::Horizontal(_), River::Vertical(x)) => Some(x),
                    _ => None,
                })
                .collect();
            let candidates: Vec<usize> = (1..n - 1).filter(|i| !crossings.contains(i)).collect();
            let i = candidates[rng.gen_range(0..candidates.len())];
            let p = river_cell(*river, i);
            cells[p.y * n + p.x] = Cell::Free;
        }
        let map = GridMap::new(n, n, cells, Pos::new(1, 1), Some(env_seed));
        if let Ok(map) = map {
            if reachable_cells(&map, map.start()).contains(&corner) {
                return Ok(map);
            }
        }
    }
    Err(Error::Generation {
        family: "lava_crossing",
        env_seed,
        attempts: LAVA_CROSSING_ATTEMPTS,
    })
}

fn river_cell(river: River, i: usize) -> Pos {
    match river {
        River::Vertical(x) => Pos::new(x, i),
        River::Horizontal(y) => Pos::new(i, y),
    }
}

/// 7x7 map split by a lava column at x = 3 with one gap at a seeded row.
pub fn build_lava_gap(env_seed: u64) -> GridMap {
    let n = LAVA_GAP_SIZE;
    let mut rng = ChaCha8Rng::seed_from_u64(env_seed);
    let mut cells = walled(n);
    let col = 3;
    let gap = rng.gen_range(1..n - 1);
    for y in 1..n - 1 {
        if y != gap {
            cells[y * n + col] = Cell::Lava;
        }
    }
    GridMap::new(n, n, cells, Pos::new(1, 1), Some(env_seed)).expect("lava-gap layout is valid")
}
