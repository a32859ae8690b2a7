//! Long-horizon household corridor world.
//!
//! Rooms are joined by hallways of different lengths (stored in tenths of a
//! unit so all plan arithmetic is exact). The agent must find and take a key,
//! open the locked door to the vault, take the object stored there and place
//! it in the receptacle room. Dead-end trap rooms and slightly longer detour
//! rooms hang off the main corridor.
//!
//! The remaining optimal plan cost `Δ` counts hallway length for moves and one
//! unit for each interaction, so a detour step that still makes partial
//! progress scores between a wasted and an optimal step.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{normalize, Difficulty, EnvDescription, EnvError, EnvKind, EnvView, Environment, StepOutcome};
use crate::policy::FeatureMap;

/// Cost of a non-movement action, in tenths.
const INTERACTION_COST: u32 = 10;
const INF: u32 = u32::MAX / 4;

const ROOM_NAMES: [&str; 24] = [
    "foyer", "kitchen", "pantry", "study", "library", "cellar", "attic", "bedroom", "bathroom", "garage",
    "workshop", "laundry", "gallery", "office", "storeroom", "nursery", "conservatory", "parlor", "scullery",
    "armory", "chapel", "greenhouse", "loft", "solarium",
];
const OBJECTS: [&str; 6] = ["statue", "vase", "candlestick", "globe", "lantern", "clock"];
const RECEPTACLES: [&str; 5] = ["shelf", "cabinet", "mantel", "dresser", "sideboard"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hallway {
    pub a: usize,
    pub b: usize,
    /// Length in tenths of a unit, at least 10.
    pub length: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subgoal {
    FindKey,
    TakeKey,
    OpenDoor,
    TakeObject,
    PlaceObject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorTask {
    pub id: String,
    pub rooms: Vec<String>,
    pub hallways: Vec<Hallway>,
    pub start_room: usize,
    pub key_room: usize,
    /// Room holding the locked door; the door leads to `vault_room`.
    pub door_room: usize,
    pub vault_room: usize,
    pub object: String,
    pub receptacle: String,
    pub receptacle_room: usize,
    pub trap_rooms: Vec<usize>,
    pub subgoal_sequence: Vec<Subgoal>,
    /// Number of actions in the optimal plan.
    pub plan_length: usize,
}

impl CorridorTask {
    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: String| Err(EnvError::InvalidTask(format!("{}: {m}", self.id)));
        let n = self.rooms.len();
        for r in [self.start_room, self.key_room, self.door_room, self.vault_room, self.receptacle_room] {
            if r >= n {
                return bad(format!("room index {r} out of range"));
            }
        }
        for h in &self.hallways {
            if h.a >= n || h.b >= n || h.a == h.b || h.length < 10 {
                return bad(format!("bad hallway {h:?}"));
            }
        }
        let vault_links: Vec<&Hallway> = self
            .hallways
            .iter()
            .filter(|h| h.a == self.vault_room || h.b == self.vault_room)
            .collect();
        if vault_links.len() != 1 || !connects(vault_links[0], self.door_room, self.vault_room) {
            return bad("vault must be reachable only through the door".into());
        }
        if [self.start_room, self.key_room, self.receptacle_room].contains(&self.vault_room) {
            return bad("start, key and receptacle must lie outside the vault".into());
        }
        let layout = Layout::new(self);
        if layout.plan(&Progress::initial(self)).0 >= INF {
            return bad("goal unreachable".into());
        }
        Ok(())
    }

    pub fn initial_placement(&self) -> Vec<(String, String)> {
        vec![
            ("key".into(), self.rooms[self.key_room].clone()),
            (self.object.clone(), self.rooms[self.vault_room].clone()),
            (self.receptacle.clone(), self.rooms[self.receptacle_room].clone()),
        ]
    }
}

fn connects(h: &Hallway, x: usize, y: usize) -> bool {
    (h.a == x && h.b == y) || (h.a == y && h.b == x)
}

/// All-pairs (cost, hop count) with the door closed and open.
#[derive(Debug)]
struct Layout {
    closed: Vec<Vec<(u32, u32)>>,
    open: Vec<Vec<(u32, u32)>>,
    door_length: u32,
    degree: Vec<usize>,
}

impl Layout {
    fn new(task: &CorridorTask) -> Self {
        let n = task.rooms.len();
        let is_door = |h: &Hallway| connects(h, task.door_room, task.vault_room);
        let closed = all_pairs(n, task.hallways.iter().filter(|h| !is_door(h)));
        let open = all_pairs(n, task.hallways.iter());
        let door_length = task.hallways.iter().find(|h| is_door(h)).map_or(INF, |h| h.length);
        let mut degree = vec![0; n];
        for h in &task.hallways {
            degree[h.a] += 1;
            degree[h.b] += 1;
        }
        Self {
            closed,
            open,
            door_length,
            degree,
        }
    }

    /// Remaining optimal (cost, action count) from `p`.
    fn plan(&self, p: &Progress) -> (u32, u32) {
        let t = &p.task_rooms;
        let add = |a: (u32, u32), b: (u32, u32)| (a.0.saturating_add(b.0).min(INF), a.1 + b.1);
        let act = (INTERACTION_COST, 1);
        let deliver = add(self.open[t.vault][t.receptacle], act);
        if p.placed {
            (0, 0)
        } else if p.holding {
            add(self.open[p.room][t.receptacle], act)
        } else if p.door_open {
            add(add(self.open[p.room][t.vault], act), deliver)
        } else {
            let through_door = add(add(act, (self.door_length, 1)), add(act, deliver));
            if p.has_key {
                add(self.closed[p.room][t.door], through_door)
            } else {
                let to_key = add(self.closed[p.room][t.key], act);
                add(add(to_key, self.closed[t.key][t.door]), through_door)
            }
        }
    }
}

fn all_pairs<'a>(n: usize, edges: impl Iterator<Item = &'a Hallway>) -> Vec<Vec<(u32, u32)>> {
    let mut d = vec![vec![(INF, 0u32); n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = (0, 0);
    }
    for h in edges {
        let e = (h.length, 1);
        if e < d[h.a][h.b] {
            d[h.a][h.b] = e;
            d[h.b][h.a] = e;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if d[i][k].0 >= INF {
                continue;
            }
            for j in 0..n {
                if d[k][j].0 >= INF {
                    continue;
                }
                let via = (d[i][k].0 + d[k][j].0, d[i][k].1 + d[k][j].1);
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct TaskRooms {
    key: usize,
    door: usize,
    vault: usize,
    receptacle: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Progress {
    task_rooms: TaskRooms,
    room: usize,
    has_key: bool,
    door_open: bool,
    holding: bool,
    placed: bool,
}

impl Progress {
    fn initial(task: &CorridorTask) -> Self {
        Self {
            task_rooms: TaskRooms {
                key: task.key_room,
                door: task.door_room,
                vault: task.vault_room,
                receptacle: task.receptacle_room,
            },
            room: task.start_room,
            has_key: false,
            door_open: false,
            holding: false,
            placed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Act {
    Go(usize),
    TakeKey,
    OpenDoor,
    TakeObject,
    Place,
    Look,
}

pub(super) fn generate(id: String, difficulty: &Difficulty, seed: u64) -> Result<CorridorTask, EnvError> {
    let (lo, hi) = difficulty.plan_length;
    if lo < 6 || lo > hi {
        return Err(EnvError::InvalidTask(format!(
            "plan length range {lo}..={hi} (minimum is 6)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plan_length = rng.gen_range(lo..=hi);
    let moves = plan_length - 6;
    let a = rng.gen_range(0..=moves);
    let b = rng.gen_range(0..=moves - a);
    let c = moves - a - b;
    let mut sign = || if rng.gen_bool(0.5) { 1i64 } else { -1 };
    let key_pos = 0i64;
    let start_pos = key_pos + sign() * a as i64;
    let door_pos = key_pos + sign() * b as i64;
    let recep_pos = door_pos + sign() * c as i64;
    let lo_pos = [start_pos, key_pos, door_pos, recep_pos].into_iter().min().expect("non-empty");
    let hi_pos = [start_pos, key_pos, door_pos, recep_pos].into_iter().max().expect("non-empty");
    let pad_left = rng.gen_range(0..=1);
    let pad_right = rng.gen_range(0..=1);
    let spine = (hi_pos - lo_pos) as usize + 1 + pad_left + pad_right;
    let at = |p: i64| (p - lo_pos) as usize + pad_left;

    let mut hallways = Vec::new();
    for i in 0..spine.saturating_sub(1) {
        hallways.push(Hallway {
            a: i,
            b: i + 1,
            length: rng.gen_range(10..=20),
        });
    }
    let mut n = spine;
    // detours: strictly longer two-hallway bypasses of a spine hallway
    for i in 0..spine.saturating_sub(1) {
        if rng.gen_bool(0.4) {
            let direct = hallways[i].length;
            let second = rng.gen_range(10..=20);
            let first = rng.gen_range(10..=20).max(direct + 1 - second.min(direct));
            hallways.push(Hallway { a: i, b: n, length: first });
            hallways.push(Hallway { a: n, b: i + 1, length: second });
            n += 1;
        }
    }
    let mut trap_rooms = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let host = rng.gen_range(0..spine);
        hallways.push(Hallway {
            a: host,
            b: n,
            length: rng.gen_range(10..=20),
        });
        trap_rooms.push(n);
        n += 1;
    }
    let door_room = at(door_pos);
    let vault_room = n;
    hallways.push(Hallway {
        a: door_room,
        b: vault_room,
        length: rng.gen_range(10..=15),
    });
    n += 1;

    let mut names: Vec<String> = ROOM_NAMES.iter().map(|s| s.to_string()).collect();
    for i in (1..names.len()).rev() {
        let j = rng.gen_range(0..=i);
        names.swap(i, j);
    }
    let mut rooms: Vec<String> = (0..n - 1)
        .map(|i| {
            if i < names.len() {
                names[i].clone()
            } else {
                format!("{} {}", names[i % names.len()], i / names.len() + 1)
            }
        })
        .collect();
    rooms.push("vault".into());

    let task = CorridorTask {
        id,
        rooms,
        hallways,
        start_room: at(start_pos),
        key_room: at(key_pos),
        door_room,
        vault_room,
        object: OBJECTS[rng.gen_range(0..OBJECTS.len())].into(),
        receptacle: RECEPTACLES[rng.gen_range(0..RECEPTACLES.len())].into(),
        receptacle_room: at(recep_pos),
        trap_rooms,
        subgoal_sequence: vec![
            Subgoal::FindKey,
            Subgoal::TakeKey,
            Subgoal::OpenDoor,
            Subgoal::TakeObject,
            Subgoal::PlaceObject,
        ],
        plan_length,
    };
    task.validate()?;
    let check = CorridorEnv::new(task.clone(), usize::MAX)?;
    if check.optimal_plan_length() != plan_length {
        return Err(EnvError::InvalidTask(format!(
            "generated plan has {} actions, wanted {plan_length}",
            check.optimal_plan_length()
        )));
    }
    Ok(task)
}

#[derive(Debug, Clone)]
pub struct CorridorEnv {
    task: Arc<CorridorTask>,
    layout: Arc<Layout>,
    neighbors: Arc<Vec<Vec<(usize, u32)>>>,
    max_steps: usize,
    progress: Progress,
    prev_room: Option<usize>,
    visited: Vec<bool>,
    steps_taken: usize,
    done: bool,
    last_observation: String,
}

impl CorridorEnv {
    pub fn new(task: CorridorTask, max_steps: usize) -> Result<Self, EnvError> {
        task.validate()?;
        let layout = Layout::new(&task);
        let mut neighbors = vec![Vec::new(); task.rooms.len()];
        for h in &task.hallways {
            neighbors[h.a].push((h.b, h.length));
            neighbors[h.b].push((h.a, h.length));
        }
        for n in &mut neighbors {
            n.sort();
        }
        let progress = Progress::initial(&task);
        let env = Self {
            visited: vec![false; task.rooms.len()],
            layout: Arc::new(layout),
            neighbors: Arc::new(neighbors),
            max_steps,
            progress,
            prev_room: None,
            steps_taken: 0,
            done: false,
            last_observation: String::new(),
            task: Arc::new(task),
        };
        let optimal = env.optimal_plan_length();
        if optimal > max_steps {
            return Err(EnvError::InvalidTask(format!(
                "optimal plan needs {optimal} steps but the budget is {max_steps}"
            )));
        }
        Ok(env)
    }

    pub fn task(&self) -> &CorridorTask {
        &self.task
    }

    pub fn room(&self) -> usize {
        self.progress.room
    }

    /// Remaining optimal plan cost Δ in tenths.
    pub fn remaining_cost(&self) -> u32 {
        self.layout.plan(&self.progress).0
    }

    pub fn optimal_plan_length(&self) -> usize {
        self.layout.plan(&self.progress).1 as usize
    }

    fn door_open_between(&self, x: usize, y: usize) -> bool {
        let t = &self.task;
        let is_door = (x == t.door_room && y == t.vault_room) || (y == t.door_room && x == t.vault_room);
        !is_door || self.progress.door_open
    }

    fn admissible(&self) -> Vec<(String, Act)> {
        let t = &self.task;
        let p = &self.progress;
        let mut out = Vec::new();
        for &(r, _) in &self.neighbors[p.room] {
            if self.door_open_between(p.room, r) {
                out.push((format!("go to {}", t.rooms[r]), Act::Go(r)));
            }
        }
        if p.room == t.key_room && !p.has_key {
            out.push(("take key".into(), Act::TakeKey));
        }
        if p.room == t.door_room && p.has_key && !p.door_open {
            out.push(("open door".into(), Act::OpenDoor));
        }
        if p.room == t.vault_room && !p.holding && !p.placed {
            out.push((format!("take {}", t.object), Act::TakeObject));
        }
        if p.holding && p.room == t.receptacle_room {
            out.push((format!("place {} in {}", t.object, t.receptacle), Act::Place));
        }
        out.push(("look".into(), Act::Look));
        out
    }

    fn resolve(&self, action: &str) -> Result<Act, EnvError> {
        let want = normalize(action);
        self.admissible()
            .into_iter()
            .find(|(s, _)| *s == want)
            .map(|(_, a)| a)
            .ok_or_else(|| EnvError::InadmissibleAction(action.to_string()))
    }

    fn apply(&self, p: &Progress, act: &Act) -> Progress {
        let mut next = p.clone();
        match act {
            Act::Go(r) => next.room = *r,
            Act::TakeKey => next.has_key = true,
            Act::OpenDoor => next.door_open = true,
            Act::TakeObject => next.holding = true,
            Act::Place => {
                next.holding = false;
                next.placed = true;
            }
            Act::Look => {}
        }
        next
    }

    fn action_cost(&self, act: &Act) -> u32 {
        match act {
            Act::Go(r) => self.neighbors[self.progress.room]
                .iter()
                .find(|(x, _)| x == r)
                .map_or(INTERACTION_COST, |(_, l)| *l),
            _ => INTERACTION_COST,
        }
    }

    /// Δ before minus Δ after, in tenths.
    fn progress_of(&self, act: &Act) -> i64 {
        let before = self.layout.plan(&self.progress).0 as i64;
        let after = self.layout.plan(&self.apply(&self.progress, act)).0 as i64;
        before - after
    }

    fn describe_room(&self) -> String {
        let t = &self.task;
        let p = &self.progress;
        let mut items = Vec::new();
        if p.room == t.key_room && !p.has_key {
            items.push("a key".to_string());
        }
        if p.room == t.vault_room && !p.holding && !p.placed {
            items.push(format!("the {}", t.object));
        }
        if p.room == t.receptacle_room {
            items.push(format!("the {}", t.receptacle));
        }
        if p.room == t.door_room {
            let state = if p.door_open { "an open" } else { "a locked" };
            items.push(format!("{state} door to the {}", t.rooms[t.vault_room]));
        }
        let seen = if items.is_empty() {
            "nothing of note".to_string()
        } else {
            items.join(", ")
        };
        let exits: Vec<&str> = self.neighbors[p.room]
            .iter()
            .filter(|(r, _)| self.door_open_between(p.room, *r))
            .map(|(r, _)| t.rooms[*r].as_str())
            .collect();
        let actions: Vec<String> = self.admissible().into_iter().map(|(s, _)| s).collect();
        format!(
            "You are in the {}. You see {seen}. Exits: {}.\nAdmissible actions: {}",
            t.rooms[p.room],
            exits.join(", "),
            actions.join("; ")
        )
    }
}

impl FeatureMap for CorridorEnv {
    fn feature_map_id(&self) -> &'static str {
        "corridor-v1"
    }

    fn feature_dim(&self) -> usize {
        6
    }

    /// `[progress per unit cost, is interaction, returns to previous room,
    ///   enters unvisited room, enters dead end, is look]`
    fn features(&self, action: &str) -> Vec<f64> {
        let mut f = vec![0.0; 6];
        let Ok(act) = self.resolve(action) else {
            return f;
        };
        f[0] = (self.progress_of(&act) as f64 / self.action_cost(&act) as f64).clamp(-1.0, 1.0);
        match act {
            Act::Go(r) => {
                f[2] = if self.prev_room == Some(r) { 1.0 } else { 0.0 };
                f[3] = if self.visited[r] { 0.0 } else { 1.0 };
                f[4] = if self.layout.degree[r] == 1 { 1.0 } else { 0.0 };
            }
            Act::Look => f[5] = 1.0,
            _ => f[1] = 1.0,
        }
        f
    }
}

impl EnvView for CorridorEnv {
    fn candidates(&self) -> Vec<String> {
        self.admissible().into_iter().map(|(s, _)| s).collect()
    }

    fn state_text(&self) -> String {
        format!(
            "Task: put the {} in the {}.\nStep {} of {}\n{}",
            self.task.object,
            self.task.receptacle,
            self.steps_taken,
            self.max_steps,
            self.describe_room()
        )
    }

    /// `clamp(round(5 + 5·(Δ_before − Δ_after)), 0, 10)` with Δ in units.
    fn oracle_step_value(&self, action: &str) -> Result<u8, EnvError> {
        let act = self.resolve(action)?;
        let gain = self.progress_of(&act) as f64 / 10.0;
        Ok((5.0 + 5.0 * gain).round().clamp(0.0, 10.0) as u8)
    }

    fn describe(&self) -> EnvDescription {
        let t = &self.task;
        let halls: Vec<String> = t
            .hallways
            .iter()
            .map(|h| format!("{} - {} ({:.1})", t.rooms[h.a], t.rooms[h.b], h.length as f64 / 10.0))
            .collect();
        EnvDescription {
            kind: EnvKind::Corridor,
            task_description: format!("Put the {} in the {}.", t.object, t.receptacle),
            environment_config: format!(
                "Rooms: {}. Hallways: {}. The {} is behind a locked door that needs a key. Step budget: {}.",
                t.rooms.join(", "),
                halls.join(", "),
                t.rooms[t.vault_room],
                self.max_steps
            ),
        }
    }

    fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    fn max_steps(&self) -> usize {
        self.max_steps
    }

    fn is_done(&self) -> bool {
        self.done
    }

    fn last_observation(&self) -> &str {
        &self.last_observation
    }
}

impl Environment for CorridorEnv {
    fn reset(&mut self, _seed: u64) -> Result<String, EnvError> {
        self.progress = Progress::initial(&self.task);
        self.prev_room = None;
        self.visited = vec![false; self.task.rooms.len()];
        self.visited[self.task.start_room] = true;
        self.steps_taken = 0;
        self.done = false;
        self.last_observation = format!(
            "Your task is to put the {} in the {}.\n{}",
            self.task.object,
            self.task.receptacle,
            self.describe_room()
        );
        Ok(self.last_observation.clone())
    }

    fn step(&mut self, action: &str) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        let act = self.resolve(action)?;
        let before = self.progress.room;
        self.progress = self.apply(&self.progress, &act);
        self.steps_taken += 1;
        let mut obs = match &act {
            Act::Go(r) => {
                self.prev_room = Some(before);
                self.visited[*r] = true;
                format!("You walk to the {}.", self.task.rooms[*r])
            }
            Act::TakeKey => "You pick up the key.".to_string(),
            Act::OpenDoor => "You unlock and open the door.".to_string(),
            Act::TakeObject => format!("You pick up the {}.", self.task.object),
            Act::Place => format!("You place the {} in the {}.", self.task.object, self.task.receptacle),
            Act::Look => "You look around.".to_string(),
        };
        let success = self.progress.placed;
        if success || self.steps_taken >= self.max_steps {
            self.done = true;
        }
        if !self.done {
            obs.push('\n');
            obs.push_str(&self.describe_room());
        } else if !success {
            obs.push_str("\nStep budget exhausted.");
        }
        self.last_observation = obs.clone();
        Ok(StepOutcome {
            observation: obs,
            done: self.done,
            success,
        })
    }

    fn rng_stream_position(&self) -> u64 {
        0
    }

    fn verify_success(&self) -> bool {
        self.progress.placed && !self.progress.holding && self.progress.room == self.task.receptacle_room
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Five rooms: a(0) - b(1) - c(2) - d(3), trap t(4) off b, vault v(5)
    /// behind d. Start a, key c, receptacle a.
    pub(crate) fn five_room() -> CorridorTask {
        let h = |a, b, length| Hallway { a, b, length };
        CorridorTask {
            id: "five".into(),
            rooms: ["a", "b", "c", "d", "t", "v"].iter().map(|s| s.to_string()).collect(),
            hallways: vec![h(0, 1, 10), h(1, 2, 10), h(2, 3, 10), h(1, 4, 10), h(3, 5, 10)],
            start_room: 0,
            key_room: 2,
            door_room: 3,
            vault_room: 5,
            object: "vase".into(),
            receptacle: "shelf".into(),
            receptacle_room: 0,
            trap_rooms: vec![4],
            subgoal_sequence: vec![],
            plan_length: 12,
        }
    }

    #[test]
    fn five_room_values() {
        let mut env = CorridorEnv::new(five_room(), 50).unwrap();
        let obs = env.reset(0).unwrap();
        assert!(obs.contains("Admissible actions: go to b; look"));
        // a→b→c, take, c→d, open, d→v, take, v→d→c→b→a, place
        assert_eq!(env.optimal_plan_length(), 12);
        assert_eq!(env.oracle_step_value("go to b").unwrap(), 10);
        assert_eq!(env.oracle_step_value("look").unwrap(), 5);
        env.step("go to b").unwrap();
        assert_eq!(env.oracle_step_value("go to t").unwrap(), 0);
        let out = env.step("go to t").unwrap();
        assert!(!out.done);
        assert!(matches!(env.step("open door"), Err(EnvError::InadmissibleAction(_))));
    }

    #[test]
    fn scripted_optimal_plan_succeeds() {
        let mut env = CorridorEnv::new(five_room(), 50).unwrap();
        env.reset(0).unwrap();
        let plan = [
            "go to b", "go to c", "take key", "go to d", "open door", "go to v", "take vase", "go to d", "go to c",
            "go to b", "go to a", "place vase in shelf",
        ];
        for (i, a) in plan.iter().enumerate() {
            assert!(env.oracle_step_value(a).unwrap() >= 8, "step {i} {a}");
            let out = env.step(a).unwrap();
            assert_eq!(out.done, i == plan.len() - 1);
        }
        assert!(env.verify_success());
    }

    #[test]
    fn generator_hits_requested_plan_length() {
        for s in 0..40 {
            let d = Difficulty {
                plan_length: (12, 12),
                ..Difficulty::default()
            };
            let t = generate(format!("c{s}"), &d, s).unwrap();
            let env = CorridorEnv::new(t, 50).unwrap();
            assert_eq!(env.optimal_plan_length(), 12);
        }
    }

    #[test]
    fn plan_too_long_for_budget_rejected() {
        assert!(CorridorEnv::new(five_room(), 10).is_err());
    }
}
