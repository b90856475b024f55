use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Environment, Phase, StepOutcome, TabularMdp};
use crate::{Error, Result};

const LAYOUT: [&str; 13] = [
    "wwwwwwwwwwwww",
    "w     w     w",
    "w     w     w",
    "w           w",
    "w     w     w",
    "w     w     w",
    "ww wwww     w",
    "w     www www",
    "w     w     w",
    "w     w     w",
    "w           w",
    "w     w     w",
    "wwwwwwwwwwwww",
];

/// The east hallway, between the two right-hand rooms.
const DEFAULT_GOAL: Cell = Cell { row: 7, col: 9 };

pub const DEFAULT_DISCOUNT: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Room {
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
}

impl Room {
    pub const ALL: [Room; 4] = [Room::TopLeft, Room::TopRight, Room::BottomLeft, Room::BottomRight];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::Up, Move::Down, Move::Left, Move::Right];

    fn apply(self, cell: Cell) -> Cell {
        match self {
            Move::Up => Cell { row: cell.row - 1, col: cell.col },
            Move::Down => Cell { row: cell.row + 1, col: cell.col },
            Move::Left => Cell { row: cell.row, col: cell.col - 1 },
            Move::Right => Cell { row: cell.row, col: cell.col + 1 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FourRoomsConfig {
    pub action_success_prob: f64,
    /// Move-success probability after the transfer mutation.
    pub transfer_action_success_prob: f64,
    pub max_episode_steps: usize,
}

impl Default for FourRoomsConfig {
    fn default() -> Self {
        FourRoomsConfig {
            action_success_prob: 2.0 / 3.0,
            transfer_action_success_prob: 0.5,
            max_episode_steps: 1000,
        }
    }
}

/// Four-room gridworld with 104 navigable cells and one hallway per wall.
///
/// States are indices into the row-major list of navigable cells.
#[derive(Debug, Clone)]
pub struct FourRoomsEnv {
    config: FourRoomsConfig,
    cells: Vec<Cell>,
    index: Vec<Option<usize>>,
    goal: usize,
    action_success_prob: f64,
    phase: Phase,
    seed: u64,
}

fn check_prob(name: &'static str, p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value: p, expected: "(0, 1]" })
    }
}

impl FourRoomsEnv {
    pub fn new(config: FourRoomsConfig, seed: u64) -> Result<Self> {
        check_prob("action_success_prob", config.action_success_prob)?;
        check_prob("transfer_action_success_prob", config.transfer_action_success_prob)?;
        if config.max_episode_steps == 0 {
            return Err(Error::OutOfRange {
                name: "max_episode_steps",
                value: 0.0,
                expected: ">= 1",
            });
        }
        let width = LAYOUT[0].len();
        let mut cells = Vec::new();
        let mut index = vec![None; LAYOUT.len() * width];
        for (row, line) in LAYOUT.iter().enumerate() {
            for (col, ch) in line.chars().enumerate() {
                if ch != 'w' {
                    index[row * width + col] = Some(cells.len());
                    cells.push(Cell { row, col });
                }
            }
        }
        let mut env = FourRoomsEnv {
            action_success_prob: config.action_success_prob,
            config,
            cells,
            index,
            goal: 0,
            phase: Phase::Source,
            seed,
        };
        env.goal = env.state_of(DEFAULT_GOAL).expect("default goal is navigable");
        Ok(env)
    }

    pub fn config(&self) -> &FourRoomsConfig {
        &self.config
    }

    pub fn n_states(&self) -> usize {
        self.cells.len()
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    /// Moves the goal; used by tests and transfer.
    pub fn set_goal(&mut self, state: usize) {
        assert!(state < self.cells.len());
        self.goal = state;
    }

    pub fn action_success_prob(&self) -> f64 {
        self.action_success_prob
    }

    pub fn cell(&self, state: usize) -> Cell {
        self.cells[state]
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn state_of(&self, cell: Cell) -> Option<usize> {
        let width = LAYOUT[0].len();
        if cell.row >= LAYOUT.len() || cell.col >= width {
            return None;
        }
        self.index[cell.row * width + cell.col]
    }

    /// The four hallway cells, ordered top, left, right, bottom.
    pub fn hallways(&self) -> [usize; 4] {
        [
            Cell { row: 3, col: 6 },
            Cell { row: 6, col: 2 },
            Cell { row: 7, col: 9 },
            Cell { row: 10, col: 6 },
        ]
        .map(|c| self.state_of(c).expect("hallway is navigable"))
    }

    /// Room containing `state`, or `None` for hallway cells.
    pub fn room_of(&self, state: usize) -> Option<Room> {
        if self.hallways().contains(&state) {
            return None;
        }
        let Cell { row, col } = self.cells[state];
        Some(match (col < 6, row) {
            (true, r) if r < 6 => Room::TopLeft,
            (true, _) => Room::BottomLeft,
            (false, r) if r < 7 => Room::TopRight,
            (false, _) => Room::BottomRight,
        })
    }

    pub fn room_states(&self, room: Room) -> Vec<usize> {
        (0..self.n_states()).filter(|&s| self.room_of(s) == Some(room)).collect()
    }

    /// Hallways bordering `room`, in [`Self::hallways`] order.
    pub fn room_hallways(&self, room: Room) -> [usize; 2] {
        let [top, left, right, bottom] = self.hallways();
        match room {
            Room::TopLeft => [top, left],
            Room::TopRight => [top, right],
            Room::BottomLeft => [left, bottom],
            Room::BottomRight => [right, bottom],
        }
    }

    /// Deterministic successor of `state` under `action`; walls leave the state unchanged.
    pub fn neighbor(&self, state: usize, action: usize) -> usize {
        let target = Move::ALL[action].apply(self.cells[state]);
        self.state_of(target).unwrap_or(state)
    }

    /// Breadth-first distances (in moves) from every cell to `target`.
    pub fn distances_to(&self, target: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n_states()];
        let mut queue = std::collections::VecDeque::from([target]);
        dist[target] = 0;
        while let Some(s) = queue.pop_front() {
            for a in 0..4 {
                let n = self.neighbor(s, a);
                if dist[n] == usize::MAX {
                    dist[n] = dist[s] + 1;
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    /// Exact MDP with move noise encoded in the transition tensor. The goal
    /// is absorbing with zero reward.
    pub fn to_tabular(&self) -> TabularMdp {
        let n = self.n_states();
        let mut transition = vec![0.0; n * 4 * n];
        let mut reward = vec![0.0; n * 4];
        let slip = (1.0 - self.action_success_prob) / 3.0;
        for s in 0..n {
            for a in 0..4 {
                let row = &mut transition[(s * 4 + a) * n..(s * 4 + a + 1) * n];
                if s == self.goal {
                    row[s] = 1.0;
                    continue;
                }
                for executed in 0..4 {
                    let p = if executed == a { self.action_success_prob } else { slip };
                    row[self.neighbor(s, executed)] += p;
                }
                reward[s * 4 + a] = row[self.goal];
            }
        }
        let mut start_dist = vec![1.0 / (n - 1) as f64; n];
        start_dist[self.goal] = 0.0;
        let mut terminal = vec![false; n];
        terminal[self.goal] = true;
        TabularMdp {
            n_states: n,
            n_actions: 4,
            transition,
            reward,
            start_dist,
            terminal,
            discount: DEFAULT_DISCOUNT,
        }
    }
}

impl Environment for FourRoomsEnv {
    type State = usize;

    fn n_actions(&self) -> usize {
        4
    }

    fn max_episode_steps(&self) -> usize {
        self.config.max_episode_steps
    }

    fn phase(&self) -> Phase {
        self.phase
    }

    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let s = rng.random_range(0..self.n_states() - 1);
        if s >= self.goal {
            s + 1
        } else {
            s
        }
    }

    fn step<R: Rng + ?Sized>(&self, &state: &usize, action: usize, rng: &mut R) -> Result<StepOutcome<usize>> {
        if action >= 4 {
            return Err(Error::InvalidAction { action, n_actions: 4 });
        }
        if state == self.goal {
            return Err(Error::TerminalState);
        }
        let executed = if rng.random::<f64>() < self.action_success_prob {
            action
        } else {
            // uniform over the three other moves
            let k = rng.random_range(0..3);
            if k >= action {
                k + 1
            } else {
                k
            }
        };
        let next_state = self.neighbor(state, executed);
        let done = next_state == self.goal;
        Ok(StepOutcome { next_state, reward: if done { 1.0 } else { 0.0 }, done })
    }

    fn is_terminal(&self, &state: &usize) -> bool {
        state == self.goal
    }

    fn observe(&self, &state: &usize) -> Vec<f64> {
        let c = self.cells[state];
        vec![c.row as f64, c.col as f64]
    }

    /// Relocates the goal to a uniformly drawn bottom-left cell and lowers
    /// the move-success probability.
    fn apply_transfer(&mut self) -> Result<()> {
        if self.phase == Phase::Transfer {
            return Err(Error::TransferAlreadyApplied);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let room = self.room_states(Room::BottomLeft);
        self.goal = room[rng.random_range(0..room.len())];
        self.action_success_prob = self.config.transfer_action_success_prob;
        self.phase = Phase::Transfer;
        Ok(())
    }
}
