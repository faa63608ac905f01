//! Instance generators.
//!
//! `gen_fig1` and `gen_det_hallway` are the two small worked examples. The
//! Hallway, Escape and RockSample families are stand-ins: their layouts,
//! observation structure and sensing model are our own, so state counts do
//! not match any published table.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ActionId, ModelError, ObsSymbol, Pomdp, PomdpBuilder, Prob, StateId};

fn p(n: u64, d: u64) -> Prob {
    Prob::new(n, d)
}

/// The three-cell treasure grid.
///
/// Cells `c0 c1 c2`, start in `c0`, treasure in `c2`. Moving past either end
/// or grabbing anywhere but `c2` loses. No observation is declared and every
/// state is undefined.
pub fn gen_fig1() -> Pomdp {
    let mut b = PomdpBuilder::new();
    let cells: Vec<StateId> = (0..3).map(|i| b.add_state(&format!("c{i}")).unwrap()).collect();
    let win = b.add_state("win").unwrap();
    let lose = b.add_state("lose").unwrap();
    let left = b.add_action("move-left").unwrap();
    let right = b.add_action("move-right").unwrap();
    let grab = b.add_action("grab-treasure").unwrap();
    for i in 0..3 {
        let l = if i == 0 { lose } else { cells[i - 1] };
        let r = if i == 2 { lose } else { cells[i + 1] };
        let g = if i == 2 { win } else { lose };
        b.step(cells[i], left, l).step(cells[i], right, r).step(cells[i], grab, g);
    }
    for s in [win, lose] {
        for a in [left, right, grab] {
            b.step(s, a, s);
        }
    }
    b.set_initial(cells[0]).add_target(win);
    b.build().expect("treasure grid is well formed")
}

/// Cell class of a grid layout.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Cell {
    Free,
    Wall,
    Trap,
    /// Start cell; `None` means every heading (or no heading when the grid is
    /// not oriented).
    Start(Option<Heading>),
    Goal,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Heading {
    N,
    E,
    S,
    W,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::N, Heading::E, Heading::S, Heading::W];

    fn delta(self) -> (isize, isize) {
        match self {
            Heading::N => (-1, 0),
            Heading::E => (0, 1),
            Heading::S => (1, 0),
            Heading::W => (0, -1),
        }
    }

    fn left(self) -> Heading {
        Heading::ALL[(self as usize + 3) % 4]
    }

    fn right(self) -> Heading {
        Heading::ALL[(self as usize + 1) % 4]
    }

    fn name(self) -> &'static str {
        match self {
            Heading::N => "N",
            Heading::E => "E",
            Heading::S => "S",
            Heading::W => "W",
        }
    }
}

/// A rectangular grid world. Row 0 is the top row.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    /// Row-major cells.
    pub cells: Vec<Cell>,
    /// Probability that an action has no effect.
    pub p_fail: Prob,
    /// States carry a heading; actions are forward, turn-left, turn-right.
    /// Otherwise actions are the compass moves N, E, S, W.
    pub oriented: bool,
    /// Bumping into a wall or the border moves to a losing `crash` state
    /// instead of leaving the state unchanged.
    pub crash_on_wall: bool,
    /// Weight of a front sensor (`blocked` or `clear`); the rest is `⊥`.
    /// `None` leaves every state undefined.
    pub sensor: Option<Prob>,
}

impl GridSpec {
    /// Parse an ASCII layout, top row first: `.` free, `#` wall, `x` trap,
    /// `g` goal, `+` start, and `^ > v <` start with a heading.
    pub fn parse(layout: &str) -> Result<Self, ModelError> {
        let rows: Vec<&str> = layout
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut cells = Vec::with_capacity(width * height);
        for (r, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(ModelError::OutOfRange(format!("layout row {r} has a different width")));
            }
            for ch in row.chars() {
                cells.push(match ch {
                    '.' => Cell::Free,
                    '#' => Cell::Wall,
                    'x' => Cell::Trap,
                    'g' => Cell::Goal,
                    '+' => Cell::Start(None),
                    '^' => Cell::Start(Some(Heading::N)),
                    '>' => Cell::Start(Some(Heading::E)),
                    'v' => Cell::Start(Some(Heading::S)),
                    '<' => Cell::Start(Some(Heading::W)),
                    other => {
                        return Err(ModelError::OutOfRange(format!("unknown layout symbol {other:?}")))
                    }
                });
            }
        }
        Ok(Self {
            width,
            height,
            cells,
            p_fail: Prob::zero(),
            oriented: false,
            crash_on_wall: false,
            sensor: None,
        })
    }

    fn cell(&self, r: usize, c: usize) -> Cell {
        self.cells[r * self.width + c]
    }

    fn neighbor(&self, r: usize, c: usize, h: Heading) -> Option<(usize, usize)> {
        let (dr, dc) = h.delta();
        let nr = r.checked_add_signed(dr)?;
        let nc = c.checked_add_signed(dc)?;
        if nr >= self.height || nc >= self.width || self.cell(nr, nc) == Cell::Wall {
            return None;
        }
        Some((nr, nc))
    }
}

/// Grid world from a [`GridSpec`].
///
/// Free and start cells become states named `r{row}c{col}` (suffixed with
/// `_{heading}` when oriented). All goal cells lead to one absorbing `goal`
/// state and all traps to one absorbing `trap` state. Several start states
/// are entered from a fresh `init` state uniformly under every action.
pub fn gen_hallway(spec: &GridSpec) -> Result<Pomdp, ModelError> {
    if spec.width == 0 || spec.height == 0 || spec.cells.len() != spec.width * spec.height {
        return Err(ModelError::OutOfRange("grid dimensions".into()));
    }
    if spec.p_fail >= Prob::one() {
        return Err(ModelError::OutOfRange("failure probability must be below 1".into()));
    }
    if !spec.cells.contains(&Cell::Goal) {
        return Err(ModelError::EmptyTargets);
    }
    let headings: &[Heading] = if spec.oriented { &Heading::ALL } else { &[Heading::N] };
    let mut b = PomdpBuilder::new();
    let actions: Vec<ActionId> = if spec.oriented {
        ["forward", "turn-left", "turn-right"]
            .iter()
            .map(|n| b.add_action(n).unwrap())
            .collect()
    } else {
        Heading::ALL.iter().map(|h| b.add_action(h.name()).unwrap()).collect()
    };
    let (blocked, clear) = if spec.sensor.is_some() {
        (Some(b.add_observation("blocked")?), Some(b.add_observation("clear")?))
    } else {
        (None, None)
    };

    let mut ids: BTreeMap<(usize, usize, Heading), StateId> = BTreeMap::new();
    let mut starts = Vec::new();
    for r in 0..spec.height {
        for c in 0..spec.width {
            let cell = spec.cell(r, c);
            if !matches!(cell, Cell::Free | Cell::Start(_)) {
                continue;
            }
            for &h in headings {
                let name = if spec.oriented {
                    format!("r{r}c{c}_{}", h.name())
                } else {
                    format!("r{r}c{c}")
                };
                let s = b.add_state(&name)?;
                ids.insert((r, c, h), s);
                if let Cell::Start(dir) = cell {
                    if !spec.oriented || dir.is_none_or(|d| d == h) {
                        starts.push(s);
                    }
                }
            }
        }
    }
    if starts.is_empty() {
        return Err(ModelError::OutOfRange("layout has no start cell".into()));
    }
    let goal = b.add_state("goal")?;
    let trap = b.add_state("trap")?;
    let crash = if spec.crash_on_wall {
        Some(b.add_state("crash")?)
    } else {
        None
    };

    let success = Prob::one() - spec.p_fail;
    let target_of = |r: usize, c: usize, h: Heading| match spec.cell(r, c) {
        Cell::Goal => goal,
        Cell::Trap => trap,
        _ => ids[&(r, c, h)],
    };
    for (&(r, c, h), &s) in &ids {
        for (ai, &a) in actions.iter().enumerate() {
            let moved = if spec.oriented {
                match ai {
                    0 => match spec.neighbor(r, c, h) {
                        Some((nr, nc)) => target_of(nr, nc, h),
                        None => crash.unwrap_or(s),
                    },
                    1 => ids[&(r, c, h.left())],
                    _ => ids[&(r, c, h.right())],
                }
            } else {
                match spec.neighbor(r, c, Heading::ALL[ai]) {
                    Some((nr, nc)) => target_of(nr, nc, h),
                    None => crash.unwrap_or(s),
                }
            };
            let mut dist = vec![(moved, success)];
            if !spec.p_fail.is_zero() {
                dist.push((s, spec.p_fail));
            }
            b.transition(s, a, dist);
        }
        if let (Some(w), Some(blocked), Some(clear)) = (spec.sensor, blocked, clear) {
            let front = if spec.oriented { h } else { Heading::N };
            let z = if spec.neighbor(r, c, front).is_some() { clear } else { blocked };
            let mut d = vec![(ObsSymbol::Obs(z), w)];
            if w < Prob::one() {
                d.push((ObsSymbol::Bot, Prob::one() - w));
            }
            b.observe(s, d);
        }
    }
    let sinks: Vec<StateId> = [Some(goal), Some(trap), crash].into_iter().flatten().collect();
    for &s in &sinks {
        for &a in &actions {
            b.step(s, a, s);
        }
    }
    let initial = if starts.len() == 1 {
        starts[0]
    } else {
        let init = b.add_state("init")?;
        let w = Prob::new(1, starts.len() as u64);
        for &a in &actions {
            b.transition(init, a, starts.iter().map(|&s| (s, w)).collect());
        }
        init
    };
    b.set_initial(initial).add_target(goal);
    b.build()
}

/// The 5x4 deterministic hallway: two corridors leading down from the two
/// start cells to a bottom row with a goal in each corner and a trap in the
/// middle. Bumping into a wall crashes. No observation is declared.
pub fn gen_det_hallway() -> Pomdp {
    let mut spec = GridSpec::parse(DET_HALLWAY).expect("static layout");
    spec.crash_on_wall = true;
    gen_hallway(&spec).expect("static layout is well formed")
}

const DET_HALLWAY: &str = "
#+#+#
#.#.#
#.#.#
g.x.g
";

/// Preset stand-ins for the Hallway family: oriented grids whose actions
/// fail with probability 1/10, with a front sensor of weight 1/2.
pub fn hallway_preset(n: usize) -> Result<Pomdp, ModelError> {
    let layout = match n {
        1 => "
            #######
            #+...g#
            #.#x#.#
            #.....#
            #######
        ",
        2 => "
            #########
            #+..x..g#
            #.##.##.#
            #.......#
            #########
        ",
        3 => "
            ###########
            #+...#...g#
            #.##.x.##.#
            #.........#
            #.##.#.##.#
            #+...#....#
            ###########
        ",
        _ => return Err(ModelError::OutOfRange(format!("no hallway preset {n}"))),
    };
    let mut spec = GridSpec::parse(layout)?;
    spec.p_fail = p(1, 10);
    spec.oriented = true;
    spec.sensor = Some(p(1, 2));
    gen_hallway(&spec)
}

/// Escape on an `n x n` grid.
///
/// The robot starts in the south-west corner and must reach the escape cell
/// in the north-west corner. A pursuer starts in the south-east corner and
/// after every robot move steps uniformly to one of its (clamped) neighbors
/// or stays. Meeting the pursuer moves to the losing `captured` state.
/// Robot moves into the border have no effect. No observation is declared.
pub fn gen_escape(n: usize) -> Result<Pomdp, ModelError> {
    if n < 2 {
        return Err(ModelError::OutOfRange("escape grid needs n >= 2".into()));
    }
    let escape = (0, n - 1);
    let moves: [(isize, isize); 4] = [(0, 1), (0, -1), (1, 0), (-1, 0)];
    let clamp = |(x, y): (usize, usize), (dx, dy): (isize, isize)| {
        let nx = x.checked_add_signed(dx).filter(|&v| v < n).unwrap_or(x);
        let ny = y.checked_add_signed(dy).filter(|&v| v < n).unwrap_or(y);
        (nx, ny)
    };
    let mut b = PomdpBuilder::new();
    let actions: Vec<ActionId> = ["N", "S", "E", "W"]
        .iter()
        .map(|a| b.add_action(a).unwrap())
        .collect();
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).collect();
    let mut ids = BTreeMap::new();
    for &r in cells.iter().filter(|&&r| r != escape) {
        for &a in cells.iter().filter(|&&a| a != r) {
            let s = b.add_state(&format!("r{}_{}a{}_{}", r.0, r.1, a.0, a.1))?;
            ids.insert((r, a), s);
        }
    }
    let goal = b.add_state("escaped")?;
    let captured = b.add_state("captured")?;
    for (&(r, a), &s) in &ids {
        for (ai, &act) in actions.iter().enumerate() {
            let nr = clamp(r, moves[ai]);
            if nr == escape {
                b.step(s, act, goal);
                continue;
            }
            if nr == a {
                b.step(s, act, captured);
                continue;
            }
            let mut dist: BTreeMap<StateId, u64> = BTreeMap::new();
            for d in [(0, 0), (0, 1), (0, -1), (1, 0), (-1, 0)] {
                let na = clamp(a, d);
                let t = if na == nr { captured } else { ids[&(nr, na)] };
                *dist.entry(t).or_insert(0) += 1;
            }
            b.transition(s, act, dist.into_iter().map(|(t, c)| (t, p(c, 5))).collect());
        }
    }
    for s in [goal, captured] {
        for &a in &actions {
            b.step(s, a, s);
        }
    }
    b.set_initial(ids[&((0, 0), (n - 1, 0))]).add_target(goal);
    b.build()
}

const ROCKS: [(usize, usize); 9] = [
    (0, 0),
    (2, 2),
    (0, 2),
    (2, 0),
    (1, 1),
    (1, 0),
    (0, 1),
    (2, 1),
    (1, 2),
];

/// RockSample on a 3x3 grid with `rocks` rocks (at most 9).
///
/// A fresh `init` state draws the rock qualities uniformly among the
/// configurations with at least two good rocks (all configurations when
/// there is a single rock). The rover starts in the centre; moves into the
/// border have no effect. Sampling a bad rock loses, sampling a fresh good
/// rock collects it, and re-sampling a collected rock does nothing with
/// probability 1/2 and spoils it with probability 1/2. Collecting two good
/// rocks wins. No observation is declared.
pub fn gen_rocksample(rocks: usize) -> Result<Pomdp, ModelError> {
    if rocks == 0 || rocks > ROCKS.len() {
        return Err(ModelError::OutOfRange(format!("rock count {rocks} not in 1..=9")));
    }
    let moves: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, 1), (0, -1)];
    let mut b = PomdpBuilder::new();
    let mut actions: Vec<ActionId> = ["N", "S", "E", "W"]
        .iter()
        .map(|a| b.add_action(a).unwrap())
        .collect();
    let sample = b.add_action("sample")?;
    actions.push(sample);

    let configs: Vec<u32> = (0u32..1 << rocks)
        .filter(|q| rocks < 2 || q.count_ones() >= 2)
        .collect();
    let mut ids: BTreeMap<(usize, u32, u32), StateId> = BTreeMap::new();
    for &q in &configs {
        for pos in 0..9 {
            // collected rocks are good; at most one is held before winning
            for c in core::iter::once(0).chain((0..rocks).map(|i| 1u32 << i)) {
                if c & !q != 0 {
                    continue;
                }
                let s = b.add_state(&format!("p{pos}q{q:0w$b}c{c:0w$b}", w = rocks))?;
                ids.insert((pos, q, c), s);
            }
        }
    }
    let goal = b.add_state("goal")?;
    let lose = b.add_state("lose")?;
    let init = b.add_state("init")?;
    let rock_at = |pos: usize| ROCKS[..rocks].iter().position(|&(r, c)| r * 3 + c == pos);
    for (&(pos, q, c), &s) in &ids {
        for (ai, &a) in actions.iter().enumerate() {
            if a != sample {
                let (dr, dc) = moves[ai];
                let (r, col) = (pos / 3, pos % 3);
                let nr = r.checked_add_signed(dr).filter(|&v| v < 3).unwrap_or(r);
                let ncol = col.checked_add_signed(dc).filter(|&v| v < 3).unwrap_or(col);
                b.step(s, a, ids[&(nr * 3 + ncol, q, c)]);
                continue;
            }
            match rock_at(pos) {
                None => {
                    b.step(s, a, s);
                }
                Some(i) if q & (1 << i) == 0 => {
                    b.step(s, a, lose);
                }
                Some(i) if c & (1 << i) != 0 => {
                    b.transition(s, a, vec![(s, p(1, 2)), (ids[&(pos, q, 0)], p(1, 2))]);
                }
                Some(i) => {
                    let t = if c != 0 { goal } else { ids[&(pos, q, 1 << i)] };
                    b.step(s, a, t);
                }
            }
        }
    }
    let w = p(1, configs.len() as u64);
    for &a in &actions {
        b.transition(init, a, configs.iter().map(|&q| (ids[&(4, q, 0)], w)).collect());
        b.step(goal, a, goal).step(lose, a, lose);
    }
    b.set_initial(init).add_target(goal);
    b.build()
}

/// Shape of a random instance from [`gen_random`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct RandomSpec {
    /// Number of states including the goal (at least 1).
    pub states: usize,
    pub actions: usize,
    pub observations: usize,
    /// Upper bound on the successors of one state-action pair.
    pub max_successors: usize,
}

/// Seeded random POMDP. State 0 is initial and the last state is the
/// absorbing goal. Each state's observation is one of: undefined, a single
/// declared observation, a declared observation mixed with `⊥`, or two
/// declared observations.
pub fn gen_random(spec: RandomSpec, seed: u64) -> Pomdp {
    assert!(spec.states >= 1 && spec.actions >= 1 && spec.max_successors >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = PomdpBuilder::new();
    let states: Vec<StateId> = (0..spec.states)
        .map(|i| b.add_state(&format!("s{i}")).unwrap())
        .collect();
    let actions: Vec<ActionId> = (0..spec.actions)
        .map(|i| b.add_action(&format!("a{i}")).unwrap())
        .collect();
    let obs: Vec<_> = (0..spec.observations)
        .map(|i| b.add_observation(&format!("z{i}")).unwrap())
        .collect();
    let goal = *states.last().unwrap();
    for &s in &states {
        for &a in &actions {
            if s == goal {
                b.step(s, a, s);
                continue;
            }
            let k = rng.gen_range(1..=spec.max_successors.min(spec.states));
            let mut dist: BTreeMap<StateId, u64> = BTreeMap::new();
            for _ in 0..k {
                let t = states[rng.gen_range(0..spec.states)];
                *dist.entry(t).or_insert(0) += rng.gen_range(1..=3);
            }
            let total: u64 = dist.values().sum();
            b.transition(s, a, dist.into_iter().map(|(t, w)| (t, p(w, total))).collect());
        }
        if obs.is_empty() {
            continue;
        }
        let z = |rng: &mut ChaCha8Rng| ObsSymbol::Obs(obs[rng.gen_range(0..obs.len())]);
        let d = match rng.gen_range(0..4) {
            0 => continue,
            1 => vec![(z(&mut rng), Prob::one())],
            2 => vec![(z(&mut rng), p(1, 3)), (ObsSymbol::Bot, p(2, 3))],
            _ => vec![(z(&mut rng), p(1, 2)), (z(&mut rng), p(1, 2))],
        };
        b.observe(s, d);
    }
    b.set_initial(states[0]).add_target(goal);
    b.build().expect("random instances are well formed")
}

/// Copy of `p` with every positive transition and observation weight
/// replaced by a fresh random positive weight; supports are unchanged.
pub fn perturb_weights(p: &Pomdp, seed: u64) -> Pomdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reweigh = |n: usize, rng: &mut ChaCha8Rng| -> Vec<Prob> {
        let ws: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=7)).collect();
        let total: u64 = ws.iter().sum();
        ws.into_iter().map(|w| Prob::new(w, total)).collect()
    };
    let mut delta = Vec::with_capacity(p.num_states() * p.num_actions());
    for s in p.states() {
        for a in p.actions() {
            let t = p.transition(s, a);
            let ws = reweigh(t.len(), &mut rng);
            delta.push(t.iter().zip(ws).map(|(&(s2, _), w)| (s2, w)).collect());
        }
    }
    let per_state = p
        .states()
        .map(|s| {
            let d = p.obs_fn().dist(s);
            let ws = reweigh(d.len(), &mut rng);
            d.iter().zip(ws).map(|(&(z, _), w)| (z, w)).collect()
        })
        .collect();
    Pomdp::from_parts(
        p.state_names().to_vec(),
        p.action_names().to_vec(),
        p.obs_names().to_vec(),
        delta,
        p.initial(),
        p.goal(),
        crate::model::PartialObsFn::new(per_state),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;

    fn next(p: &Pomdp, s: &str, a: &str) -> String {
        let s = p.state_by_name(s).unwrap();
        let a = p.action_by_name(a).unwrap();
        let t = p.transition(s, a);
        assert_eq!(t.len(), 1);
        p.state_name(t[0].0).into()
    }

    #[test]
    fn fig1_shape() {
        let p = gen_fig1();
        assert_eq!(p.num_states(), 5);
        assert_eq!(p.num_actions(), 3);
        assert!(p.validate().is_empty());
        assert_eq!(next(&p, "c0", "move-left"), "lose");
        assert_eq!(next(&p, "c2", "grab-treasure"), "win");
        assert_eq!(next(&p, "c1", "grab-treasure"), "lose");
        assert_eq!(p.state_name(p.goal()), "win");
    }

    #[test]
    fn det_hallway_shape() {
        let p = gen_det_hallway();
        assert!(p.validate().is_empty());
        // 8 corridor and floor cells, goal, trap, crash, init
        assert_eq!(p.num_states(), 12);
        assert_eq!(next(&p, "r3c1", "W"), "goal");
        assert_eq!(next(&p, "r3c1", "E"), "trap");
        assert_eq!(next(&p, "r1c1", "E"), "crash");
        assert_eq!(next(&p, "r0c3", "N"), "crash");
        let init = p.initial();
        assert_eq!(p.state_name(init), "init");
        assert_eq!(p.successors(init, ActionId(0)).count(), 2);
    }

    #[test]
    fn corridor_with_failure() {
        let mut spec = GridSpec::parse(">g").unwrap();
        spec.oriented = true;
        spec.p_fail = p(1, 2);
        let m = gen_hallway(&spec).unwrap();
        assert_eq!(m.state_name(m.initial()), "r0c0_E");
        let fwd = m.action_by_name("forward").unwrap();
        let t = m.transition(m.initial(), fwd);
        assert_eq!(t.len(), 2);
        assert!(t.iter().any(|&(s, w)| s == m.goal() && w == p(1, 2)));
    }

    #[test]
    fn presets_validate() {
        for n in 1..=3 {
            let m = hallway_preset(n).unwrap();
            assert!(m.validate().is_empty(), "preset {n}");
        }
        assert!(hallway_preset(4).is_err());
    }

    #[test]
    fn escape_counts() {
        for n in 2..=6 {
            let m = gen_escape(n).unwrap();
            let cells = n * n;
            assert_eq!(m.num_states(), (cells - 1) * (cells - 1) + 2, "n={n}");
            assert!(m.validate().is_empty());
        }
        assert_eq!(gen_escape(6).unwrap().num_states(), 1227);
    }

    #[test]
    fn rocksample_validates() {
        for r in 1..=4 {
            assert!(gen_rocksample(r).unwrap().validate().is_empty(), "rocks={r}");
        }
        assert!(gen_rocksample(0).is_err());
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(gen_escape(3).unwrap(), gen_escape(3).unwrap());
        assert_eq!(gen_rocksample(2).unwrap(), gen_rocksample(2).unwrap());
        let spec = RandomSpec {
            states: 4,
            actions: 2,
            observations: 2,
            max_successors: 2,
        };
        assert_eq!(gen_random(spec, 9), gen_random(spec, 9));
    }

    #[test]
    fn perturbation_keeps_supports() {
        let spec = RandomSpec {
            states: 5,
            actions: 2,
            observations: 2,
            max_successors: 3,
        };
        for seed in 0..20 {
            let a = gen_random(spec, seed);
            let b = perturb_weights(&a, seed + 100);
            assert!(b.validate().is_empty());
            for s in a.states() {
                for act in a.actions() {
                    let sa: Vec<_> = a.successors(s, act).collect();
                    let sb: Vec<_> = b.successors(s, act).collect();
                    assert_eq!(sa, sb);
                }
                let za: Vec<_> = a.obs_fn().dist(s).iter().map(|e| e.0).collect();
                let zb: Vec<_> = b.obs_fn().dist(s).iter().map(|e| e.0).collect();
                assert_eq!(za, zb);
            }
        }
    }
}
