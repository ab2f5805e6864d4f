#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use geo_mapf::envgen::{generate_instance, InstanceSpec, WorldSpec};
use geo_mapf::geometry::{AgentRadius, Point2};
use geo_mapf::instance::Instance;
use geo_mapf::roadmap::VertexId;

/// Joint state: every agent's vertex plus whether it has stopped for good.
type State = (Vec<VertexId>, Vec<bool>);

/// Exact minimum flowtime by Dijkstra over the joint product graph. A
/// parked agent stays at its goal forever and costs nothing; each other
/// agent costs one per step. Every joint step is checked with a dense
/// sampled disc test rather than the library's swept-disc predicate.
pub fn joint_optimum(inst: &Instance) -> Option<usize> {
    joint_optimal_plan(inst).map(|(cost, _)| cost)
}

/// As [`joint_optimum`], also returning one optimal plan, one path per agent
/// ending at the step the agent stops.
pub fn joint_optimal_plan(inst: &Instance) -> Option<(usize, Vec<Vec<VertexId>>)> {
    let m = inst.num_agents();
    let rm = &inst.roadmap;
    let r2 = 2.0 * inst.radius.get();
    let start: State = (inst.starts.clone(), vec![false; m]);
    let mut dist: HashMap<State, usize> = HashMap::from([(start.clone(), 0)]);
    let mut heap = BinaryHeap::from([Reverse((0usize, start.clone()))]);
    let mut parent: HashMap<State, State> = HashMap::new();

    while let Some(Reverse((d, (pos, done)))) = heap.pop() {
        if dist.get(&(pos.clone(), done.clone())).is_some_and(|&best| best < d) {
            continue;
        }
        if done.iter().all(|&x| x) {
            return Some((d, unwind(&parent, (pos, done), &start)));
        }
        let here: State = (pos.clone(), done.clone());
        let mut relax = |next: State, cost: usize, heap: &mut BinaryHeap<Reverse<(usize, State)>>| {
            let nd = d + cost;
            if dist.get(&next).is_none_or(|&old| nd < old) {
                dist.insert(next.clone(), nd);
                parent.insert(next.clone(), here.clone());
                heap.push(Reverse((nd, next)));
            }
        };
        // an agent standing at its goal may stop there, at no cost
        for a in 0..m {
            if !done[a] && pos[a] == inst.goals[a] {
                let mut nd = done.clone();
                nd[a] = true;
                relax((pos.clone(), nd), 0, &mut heap);
            }
        }
        // one joint step
        let choices: Vec<Vec<VertexId>> = (0..m)
            .map(|a| if done[a] { vec![pos[a]] } else { rm.successors(pos[a]).to_vec() })
            .collect();
        let active = done.iter().filter(|&&x| !x).count();
        let mut idx = vec![0usize; m];
        'outer: loop {
            let next: Vec<VertexId> = (0..m).map(|a| choices[a][idx[a]]).collect();
            let clear = (0..m).all(|i| {
                (i + 1..m).all(|j| {
                    sampled_distance(
                        rm.position(pos[i]),
                        rm.position(next[i]),
                        rm.position(pos[j]),
                        rm.position(next[j]),
                    ) >= r2
                })
            });
            if clear {
                relax((next, done.clone()), active, &mut heap);
            }
            for a in 0..m {
                idx[a] += 1;
                if idx[a] < choices[a].len() {
                    continue 'outer;
                }
                idx[a] = 0;
            }
            break;
        }
    }
    None
}

fn unwind(parent: &HashMap<State, State>, end: State, start: &State) -> Vec<Vec<VertexId>> {
    let mut chain = vec![end];
    while chain.last().unwrap() != start {
        let prev = parent[chain.last().unwrap()].clone();
        chain.push(prev);
    }
    chain.reverse();
    let m = start.0.len();
    let mut paths: Vec<Vec<VertexId>> = (0..m).map(|a| vec![start.0[a]]).collect();
    for w in chain.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.0 == b.0 && a.1 != b.1 {
            continue; // an agent stopped
        }
        for ag in 0..m {
            if !a.1[ag] {
                paths[ag].push(b.0[ag]);
            }
        }
    }
    paths
}

fn lerp(a: Point2, b: Point2, u: f64) -> Point2 {
    Point2::new(a.x + u * (b.x - a.x), a.y + u * (b.y - a.y))
}

/// Minimum distance between two segments by grid search with zooming over
/// the parameter square. The objective is convex, so the zoom converges to
/// the true minimum; returned values never undershoot it.
pub fn sampled_distance(a0: Point2, a1: Point2, b0: Point2, b1: Point2) -> f64 {
    let f = |u: f64, v: f64| lerp(a0, a1, u).distance(&lerp(b0, b1, v));
    let (mut cu, mut cv, mut half) = (0.5f64, 0.5f64, 0.5f64);
    let mut best = f64::INFINITY;
    let mut steps = 100;
    for _ in 0..40 {
        let (lo_u, lo_v) = ((cu - half).max(0.0), (cv - half).max(0.0));
        let (hi_u, hi_v) = ((cu + half).min(1.0), (cv + half).min(1.0));
        let (mut bu, mut bv) = (cu, cv);
        for i in 0..=steps {
            let u = lo_u + (hi_u - lo_u) * i as f64 / steps as f64;
            for j in 0..=steps {
                let v = lo_v + (hi_v - lo_v) * j as f64 / steps as f64;
                let d = f(u, v);
                if d < best {
                    best = d;
                    bu = u;
                    bv = v;
                }
            }
        }
        cu = bu;
        cv = bv;
        half *= 0.25;
        steps = 20;
    }
    best
}

/// Small Box instances with two agents for the optimality suite.
pub fn small_box_instance(seed: u64) -> Option<Instance> {
    let vertices = 8 + (seed % 8) as usize;
    let spec = InstanceSpec {
        world: WorldSpec::boxes(10, seed),
        vertices,
        k: 8,
        agents: 2,
        radius: AgentRadius::new(0.05).unwrap(),
    };
    generate_instance(&spec).ok()
}

/// Mixed Maze and Box instances with 2 to 4 agents.
pub fn mixed_instance(seed: u64) -> Option<Instance> {
    let agents = 2 + (seed % 3) as usize;
    let world = if seed.is_multiple_of(2) {
        WorldSpec::maze(5, seed)
    } else {
        WorldSpec::boxes(10, seed)
    };
    let spec = InstanceSpec {
        world,
        vertices: 100,
        k: 8,
        agents,
        radius: AgentRadius::new(0.05).unwrap(),
    };
    generate_instance(&spec).ok()
}
