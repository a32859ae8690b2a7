//! Optimal plan length and cost of corridor states against Dijkstra over the
//! explicit (room, key, door, holding, placed) state space, built from the
//! task description alone.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use proceed::env::{generate_tasks, CorridorEnv, CorridorTask, Difficulty, EnvKind, EnvView, Environment, Task};

const INTERACTION: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct State {
    room: usize,
    key: bool,
    door: bool,
    holding: bool,
    placed: bool,
}

fn is_door(t: &CorridorTask, a: usize, b: usize) -> bool {
    (a == t.door_room && b == t.vault_room) || (b == t.door_room && a == t.vault_room)
}

fn successors(t: &CorridorTask, s: State) -> Vec<(State, u32)> {
    let mut out = Vec::new();
    for h in &t.hallways {
        for (x, y) in [(h.a, h.b), (h.b, h.a)] {
            if x == s.room && (!is_door(t, x, y) || s.door) {
                out.push((State { room: y, ..s }, h.length));
            }
        }
    }
    if s.room == t.key_room && !s.key {
        out.push((State { key: true, ..s }, INTERACTION));
    }
    if s.room == t.door_room && s.key && !s.door {
        out.push((State { door: true, ..s }, INTERACTION));
    }
    if s.room == t.vault_room && !s.holding && !s.placed {
        out.push((State { holding: true, ..s }, INTERACTION));
    }
    if s.holding && s.room == t.receptacle_room {
        out.push((State { holding: false, placed: true, ..s }, INTERACTION));
    }
    out
}

/// Lexicographically smallest (cost, action count) to a placed state.
fn dijkstra(t: &CorridorTask, start: State) -> (u32, usize) {
    let mut best: HashMap<State, (u32, usize)> = HashMap::new();
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(((0u32, 0usize), start)));
    best.insert(start, (0, 0));
    while let Some(Reverse((d, s))) = heap.pop() {
        if best.get(&s).is_some_and(|b| *b < d) {
            continue;
        }
        if s.placed {
            return d;
        }
        for (n, c) in successors(t, s) {
            let nd = (d.0 + c, d.1 + 1);
            if best.get(&n).is_none_or(|b| nd < *b) {
                best.insert(n, nd);
                heap.push(Reverse((nd, n)));
            }
        }
    }
    panic!("goal unreachable");
}

fn track(t: &CorridorTask, s: State, action: &str) -> State {
    if let Some(room) = action.strip_prefix("go to ") {
        let r = t.rooms.iter().position(|x| x == room).unwrap();
        return State { room: r, ..s };
    }
    match action {
        "take key" => State { key: true, ..s },
        "open door" => State { door: true, ..s },
        "look" => s,
        a if a.starts_with("take ") => State { holding: true, ..s },
        a if a.starts_with("place ") => State { holding: false, placed: true, ..s },
        a => panic!("unexpected action {a}"),
    }
}

#[test]
fn plan_matches_state_space_search_along_random_walks() {
    let difficulty = Difficulty {
        plan_length: (8, 16),
        ..Difficulty::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    for task in generate_tasks(EnvKind::Corridor, 60, &difficulty, 2).unwrap() {
        let Task::Corridor(t) = task else { unreachable!() };
        let mut env = CorridorEnv::new(t.clone(), 50).unwrap();
        env.reset(0).unwrap();
        let mut s = State {
            room: t.start_room,
            key: false,
            door: false,
            holding: false,
            placed: false,
        };
        let (cost, len) = dijkstra(&t, s);
        assert_eq!(len, t.plan_length, "{}", t.id);
        assert_eq!((env.remaining_cost(), env.optimal_plan_length()), (cost, len));
        while !env.is_done() {
            let c = env.candidates();
            let a = c[rng.gen_range(0..c.len())].clone();
            env.step(&a).unwrap();
            s = track(&t, s, &a);
            assert_eq!(env.room(), s.room);
            let (cost, len) = if s.placed { (0, 0) } else { dijkstra(&t, s) };
            assert_eq!((env.remaining_cost(), env.optimal_plan_length()), (cost, len), "{} after {a}", t.id);
            checked += 1;
        }
    }
    assert!(checked > 500);
}

#[test]
fn oracle_value_tracks_plan_cost_change() {
    // value = clamp(round(5 + 5·(Δbefore − Δafter)/10), 0, 10)
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for task in generate_tasks(EnvKind::Corridor, 20, &Difficulty::default(), 3).unwrap() {
        let Task::Corridor(t) = task else { unreachable!() };
        let mut env = CorridorEnv::new(t, 50).unwrap();
        env.reset(0).unwrap();
        while !env.is_done() {
            let before = env.remaining_cost() as f64;
            for a in env.candidates() {
                let mut probe = env.clone();
                probe.step(&a).unwrap();
                let after = probe.remaining_cost() as f64;
                let want = (5.0 + 5.0 * (before - after) / 10.0).round().clamp(0.0, 10.0) as u8;
                assert_eq!(env.oracle_step_value(&a).unwrap(), want, "{a}");
            }
            let c = env.candidates();
            env.step(&c[rng.gen_range(0..c.len())]).unwrap();
        }
    }
}
