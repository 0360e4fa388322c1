//! Deterministic gridworld dynamics.
//!
//! A [`GridMap`] is an immutable grid of [`Cell`]s with a fixed start cell.
//! The agent's state is its position alone; the four cardinal [`Action`]s move
//! it one cell. Walls block movement, lava ends the episode.

mod generate;

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generate::{build_four_rooms, build_lava_crossing, build_lava_gap, EnvFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub x: usize,
    pub y: usize,
}

impl Pos {
    pub const fn new(x: usize, y: usize) -> Self {
        Pos { x, y }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Free,
    Wall,
    Lava,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn from_index(i: usize) -> Action {
        Action::ALL[i]
    }

    /// Position one cell away in this direction. `y` grows downwards.
    ///
    /// Callers only shift interior cells, which the wall border guarantees
    /// have in-bounds neighbours.
    pub const fn shift(self, p: Pos) -> Pos {
        match self {
            Action::Up => Pos::new(p.x, p.y - 1),
            Action::Down => Pos::new(p.x, p.y + 1),
            Action::Left => Pos::new(p.x - 1, p.y),
            Action::Right => Pos::new(p.x + 1, p.y),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EnvState {
    pub pos: Pos,
    pub terminal: bool,
}

impl EnvState {
    pub const fn at(pos: Pos) -> Self {
        EnvState {
            pos,
            terminal: false,
        }
    }
}

/// Static world: a row-major grid of cells plus the start cell.
///
/// Invariants checked by [`GridMap::new`]: the outer border is wall, the start
/// is free, and at least one other free cell is reachable from the start.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridMap {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
    start: Pos,
    env_seed: Option<u64>,
}

impl GridMap {
    pub fn new(
        width: usize,
        height: usize,
        cells: Vec<Cell>,
        start: Pos,
        env_seed: Option<u64>,
    ) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(Error::Map(format!("{width}x{height} grid has no interior")));
        }
        if cells.len() != width * height {
            return Err(Error::Map(format!(
                "expected {} cells, got {}",
                width * height,
                cells.len()
            )));
        }
        let map = GridMap {
            width,
            height,
            cells,
            start,
            env_seed,
        };
        for y in 0..height {
            for x in 0..width {
                let border = x == 0 || y == 0 || x == width - 1 || y == height - 1;
                if border && map.cell(Pos::new(x, y)) != Cell::Wall {
                    return Err(Error::Map(format!("border cell ({x}, {y}) is not a wall")));
                }
            }
        }
        if !map.in_bounds(start) || map.cell(start) != Cell::Free {
            return Err(Error::Map(format!("start {start} is not a free cell")));
        }
        if reachable_cells(&map, start).len() < 2 {
            return Err(Error::Map(format!("start {start} is enclosed")));
        }
        Ok(map)
    }

    /// Fully free interior of the given size, surrounded by a wall border, with
    /// the start in the top-left interior corner.
    pub fn empty(interior_width: usize, interior_height: usize) -> Result<Self> {
        let (w, h) = (interior_width + 2, interior_height + 2);
        let mut cells = vec![Cell::Free; w * h];
        for y in 0..h {
            for x in 0..w {
                if x == 0 || y == 0 || x == w - 1 || y == h - 1 {
                    cells[y * w + x] = Cell::Wall;
                }
            }
        }
        GridMap::new(w, h, cells, Pos::new(1, 1), None)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn start(&self) -> Pos {
        self.start
    }

    pub fn env_seed(&self) -> Option<u64> {
        self.env_seed
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.x < self.width && p.y < self.height
    }

    #[inline]
    pub fn index(&self, p: Pos) -> usize {
        p.y * self.width + p.x
    }

    #[inline]
    pub fn pos(&self, index: usize) -> Pos {
        Pos::new(index % self.width, index / self.width)
    }

    #[inline]
    pub fn cell(&self, p: Pos) -> Cell {
        self.cells[self.index(p)]
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn positions(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.cells.len()).map(|i| self.pos(i))
    }

    pub fn count(&self, kind: Cell) -> usize {
        self.cells.iter().filter(|&&c| c == kind).count()
    }

    pub fn reset(&self) -> EnvState {
        EnvState::at(self.start)
    }

    /// Plain-text rendering: `#` wall, `.` free, `L` lava, `S` start. One line
    /// per row, each terminated by `\n`.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                let p = Pos::new(x, y);
                out.push(if p == self.start {
                    'S'
                } else {
                    match self.cell(p) {
                        Cell::Free => '.',
                        Cell::Wall => '#',
                        Cell::Lava => 'L',
                    }
                });
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for GridMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for GridMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rows: Vec<&str> = s
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty())
            .collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut cells = Vec::with_capacity(width * height);
        let mut start = None;
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::Map(format!("row {y} is not {width} cells wide")));
            }
            for (x, ch) in row.chars().enumerate() {
                cells.push(match ch {
                    '#' => Cell::Wall,
                    '.' => Cell::Free,
                    'L' => Cell::Lava,
                    'S' => {
                        if start.replace(Pos::new(x, y)).is_some() {
                            return Err(Error::Map("more than one start cell".into()));
                        }
                        Cell::Free
                    }
                    other => return Err(Error::Map(format!("unknown cell character {other:?}"))),
                });
            }
        }
        let start = start.ok_or_else(|| Error::Map("no start cell".into()))?;
        GridMap::new(width, height, cells, start, None)
    }
}

/// One environment transition. Bumping into a wall leaves the agent in place;
/// entering lava moves it onto the lava cell and ends the episode.
///
/// Panics if `state` is already terminal.
#[inline]
pub fn step(map: &GridMap, state: EnvState, action: Action) -> EnvState {
    assert!(
        !state.terminal,
        "step called on a terminal state at {}",
        state.pos
    );
    let target = action.shift(state.pos);
    match map.cell(target) {
        Cell::Wall => state,
        Cell::Lava => EnvState {
            pos: target,
            terminal: true,
        },
        Cell::Free => EnvState::at(target),
    }
}

/// Free neighbours of a free cell, in [`Action::ALL`] order.
fn free_neighbours(map: &GridMap, p: Pos) -> impl Iterator<Item = Pos> + '_ {
    Action::ALL
        .into_iter()
        .map(move |a| a.shift(p))
        .filter(move |&q| map.cell(q) == Cell::Free)
}

/// BFS distances through free cells, indexed by [`GridMap::index`]. Lava is
/// impassable.
pub fn bfs_distances(map: &GridMap, from: Pos) -> Vec<Option<u32>> {
    let mut dist = vec![None; map.num_cells()];
    if map.cell(from) != Cell::Free {
        return dist;
    }
    dist[map.index(from)] = Some(0);
    let mut queue = VecDeque::from([from]);
    while let Some(p) = queue.pop_front() {
        let d = dist[map.index(p)].unwrap_or_default();
        for q in free_neighbours(map, p) {
            let slot = &mut dist[map.index(q)];
            if slot.is_none() {
                *slot = Some(d + 1);
                queue.push_back(q);
            }
        }
    }
    dist
}

/// Free cells reachable from `from` by 4-neighbour moves, including `from`.
pub fn reachable_cells(map: &GridMap, from: Pos) -> BTreeSet<Pos> {
    bfs_distances(map, from)
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_some())
        .map(|(i, _)| map.pos(i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAVA_FIXTURE: &str = "\
#####
#S.L#
#...#
#...#
#####
";

    #[test]
    fn wall_bump_is_identity() {
        let map = GridMap::empty(3, 3).unwrap();
        let s = EnvState::at(Pos::new(1, 1));
        assert_eq!(step(&map, s, Action::Up), s);
        assert_eq!(step(&map, s, Action::Left), s);
    }

    #[test]
    fn lava_is_terminal() {
        let map: GridMap = LAVA_FIXTURE.parse().unwrap();
        let s = step(&map, EnvState::at(Pos::new(2, 1)), Action::Right);
        assert_eq!(
            s,
            EnvState {
                pos: Pos::new(3, 1),
                terminal: true
            }
        );
    }

    #[test]
    fn free_move_translates() {
        let map = GridMap::empty(3, 3).unwrap();
        let s = step(&map, EnvState::at(Pos::new(1, 1)), Action::Right);
        assert_eq!(s, EnvState::at(Pos::new(2, 1)));
        let s = step(&map, s, Action::Down);
        assert_eq!(s, EnvState::at(Pos::new(2, 2)));
    }

    #[test]
    #[should_panic(expected = "terminal")]
    fn stepping_terminal_panics() {
        let map = GridMap::empty(3, 3).unwrap();
        let s = EnvState {
            pos: Pos::new(1, 1),
            terminal: true,
        };
        step(&map, s, Action::Right);
    }

    #[test]
    fn reachable_full_interior() {
        let map = GridMap::empty(3, 3).unwrap();
        assert_eq!(reachable_cells(&map, map.start()).len(), 9);
    }

    #[test]
    fn reachable_stops_at_lava_wall() {
        let map: GridMap = "\
######
#S.L.#
#..L.#
#..L.#
######
"
        .parse()
        .unwrap();
        let reach = reachable_cells(&map, map.start());
        assert_eq!(reach.len(), 6);
        assert!(reach.iter().all(|p| p.x < 3));
    }

    #[test]
    fn text_round_trip() {
        let map: GridMap = LAVA_FIXTURE.parse().unwrap();
        assert_eq!(map.to_text(), LAVA_FIXTURE);
        assert_eq!(map.start(), Pos::new(1, 1));
        assert_eq!(map.count(Cell::Lava), 1);
    }

    #[test]
    fn rejects_bad_maps() {
        assert!("###\n#S.\n###\n".parse::<GridMap>().is_err());
        assert!("####\n#..#\n####\n".parse::<GridMap>().is_err());
        assert!("###\n#S#\n###\n".parse::<GridMap>().is_err());
        assert!("#####\n#SL.#\n#####\n".parse::<GridMap>().is_err());
        assert!("####\n#S?#\n####\n".parse::<GridMap>().is_err());
    }

    #[test]
    fn bfs_distances_on_empty_map() {
        let map = GridMap::empty(4, 3).unwrap();
        let d = bfs_distances(&map, map.start());
        assert_eq!(d[map.index(Pos::new(4, 3))], Some(5));
        assert_eq!(d[map.index(Pos::new(0, 0))], None);
    }
}
