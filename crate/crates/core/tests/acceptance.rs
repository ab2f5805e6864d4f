//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use geo_mapf::envgen::{generate_instance, InstanceSpec, WorldSpec};
use geo_mapf::geometry::{segment_segment_distance, swept_discs_disjoint, AgentRadius, Point2, Segment2};
use geo_mapf::highlevel::{
    cbs_solve, focal_solve, validate_solution, ConflictCountPsi, CostPsi, SolveOptions, Solved,
};
use geo_mapf::instance::Instance;
use geo_mapf::lowlevel::Path;

const ORACLE_SUITE: usize = 30;
const BOUND_SUITE: usize = 50;
const FUZZ_RUNS: usize = 200;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: &str, title: &str, o: &Outcome) {
    println!("{} [{id}] {title}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

/// Solutions gathered along the way for the validator criterion.
type Collected = Vec<(Instance, Vec<Path>)>;

fn oracle_suite() -> Vec<(u64, Instance, usize)> {
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < ORACLE_SUITE {
        seed += 1;
        let Some(inst) = common::small_box_instance(seed) else { continue };
        // the oracle decides feasibility on its own
        if let Some(opt) = common::joint_optimum(&inst) {
            out.push((seed, inst, opt));
        }
    }
    out
}

fn optimality(suite: &[(u64, Instance, usize)], sols: &mut Collected) -> (Outcome, Vec<Option<usize>>) {
    let mut mismatches = Vec::new();
    let mut cbs = Vec::new();
    for (seed, inst, opt) in suite {
        match cbs_solve(inst, &SolveOptions::with_timeout(Duration::from_secs(20))) {
            Ok(s) => {
                if s.flowtime != *opt {
                    mismatches.push(format!("seed {seed}: cbs {} vs optimum {opt}", s.flowtime));
                }
                cbs.push(Some(s.flowtime));
                sols.push((inst.clone(), s.solution));
            }
            Err(e) => {
                mismatches.push(format!("seed {seed}: cbs failed ({e}), optimum {opt}"));
                cbs.push(None);
            }
        }
    }
    let detail = if mismatches.is_empty() {
        format!("{}/{} instances match the joint-state optimum", suite.len(), suite.len())
    } else {
        format!(
            "{}/{} match; {}",
            suite.len() - mismatches.len(),
            suite.len(),
            mismatches.join("; ")
        )
    };
    (
        Outcome {
            pass: mismatches.is_empty(),
            detail,
        },
        cbs,
    )
}

fn degeneracy(suite: &[(u64, Instance, usize)], cbs: &[Option<usize>], sols: &mut Collected) -> Outcome {
    let mut bad = Vec::new();
    for ((seed, inst, _), c) in suite.iter().zip(cbs) {
        let f = focal_solve(inst, 1.0, &mut CostPsi, &SolveOptions::with_timeout(Duration::from_secs(20)));
        match (f, c) {
            (Ok(f), Some(c)) if f.flowtime == *c => sols.push((inst.clone(), f.solution)),
            (Ok(f), c) => {
                bad.push(format!("seed {seed}: focal {} vs cbs {c:?}", f.flowtime));
                sols.push((inst.clone(), f.solution));
            }
            (Err(e), c) => bad.push(format!("seed {seed}: focal failed ({e}), cbs {c:?}")),
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            format!("{}/{} flowtimes identical", suite.len(), suite.len())
        } else {
            bad.join("; ")
        },
    }
}

struct BoundRun {
    cbs: Solved,
    focal: Solved,
}

fn bound_suite(sols: &mut Collected) -> (Outcome, Vec<BoundRun>, Duration) {
    let started = Instant::now();
    let limit = Duration::from_secs(2);
    let mut runs = Vec::new();
    let mut skipped = 0;
    let mut seed = 1000;
    while runs.len() < BOUND_SUITE && seed < 2000 {
        seed += 1;
        let Some(inst) = common::mixed_instance(seed) else { continue };
        let c = cbs_solve(&inst, &SolveOptions::with_timeout(limit));
        let opts = SolveOptions {
            timeout: Some(limit),
            audit: true,
            record_tree: false,
        };
        let f = focal_solve(&inst, 1.1, &mut ConflictCountPsi, &opts);
        match (c, f) {
            (Ok(c), Ok(f)) => {
                sols.push((inst.clone(), c.solution.clone()));
                sols.push((inst.clone(), f.solution.clone()));
                runs.push(BoundRun { cbs: c, focal: f });
            }
            _ => skipped += 1,
        }
    }
    let elapsed = started.elapsed();
    let violations: Vec<String> = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.focal.flowtime as f64 > 1.1 * r.cbs.flowtime as f64)
        .map(|(i, r)| format!("#{i}: focal {} > 1.1 × {}", r.focal.flowtime, r.cbs.flowtime))
        .collect();
    let worst = runs
        .iter()
        .map(|r| r.focal.flowtime as f64 / r.cbs.flowtime.max(1) as f64)
        .fold(1.0, f64::max);
    let pass = runs.len() == BOUND_SUITE && violations.is_empty() && elapsed < Duration::from_secs(300);
    let detail = format!(
        "{} co-solved ({skipped} skipped), worst ratio {worst:.4}, {} bound violations, {:.1}s{}",
        runs.len(),
        violations.len(),
        elapsed.as_secs_f64(),
        if violations.is_empty() { String::new() } else { format!(": {}", violations.join("; ")) }
    );
    (Outcome { pass, detail }, runs, elapsed)
}

fn focal_discipline(runs: &[BoundRun]) -> Outcome {
    let checks: u64 = runs.iter().map(|r| r.focal.stats.audit_checks).sum();
    let failures: u64 = runs.iter().map(|r| r.focal.stats.audit_failures).sum();
    let updates: u64 = runs.iter().map(|r| r.focal.stats.lb_updates).sum();
    Outcome {
        pass: !runs.is_empty() && checks > 0 && failures == 0,
        detail: format!("{checks} checks, {updates} LB updates, {failures} failures over {} runs", runs.len()),
    }
}

fn fuzz(sols: &mut Collected) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF022);
    let mut solved = 0;
    for run in 0..FUZZ_RUNS {
        let seed = rng.gen::<u64>();
        let world = if rng.gen_bool(0.5) {
            WorldSpec::maze(rng.gen_range(2..=5), seed)
        } else {
            WorldSpec::boxes(rng.gen_range(0..=12), seed)
        };
        let spec = InstanceSpec {
            world,
            vertices: rng.gen_range(6..=40),
            k: rng.gen_range(2..=8),
            agents: rng.gen_range(1..=4),
            radius: AgentRadius::new(rng.gen_range(0.02..0.07)).unwrap(),
        };
        let Ok(inst) = generate_instance(&spec) else { continue };
        let opts = SolveOptions::with_timeout(Duration::from_millis(300));
        let result = match run % 4 {
            0 => cbs_solve(&inst, &opts),
            1 => focal_solve(&inst, 1.0 + rng.gen_range(0.0..0.5), &mut ConflictCountPsi, &opts),
            2 => focal_solve(&inst, f64::INFINITY, &mut ConflictCountPsi, &opts),
            _ => focal_solve(&inst, 1.0, &mut CostPsi, &opts),
        };
        if let Ok(s) = result {
            solved += 1;
            sols.push((inst, s.solution));
        }
    }
    solved
}

fn validator(sols: &Collected, fuzz_solved: usize) -> Outcome {
    let mut total = 0;
    let mut first = None;
    for (inst, sol) in sols {
        let v = validate_solution(inst, sol);
        total += v.len();
        if first.is_none() {
            first = v.into_iter().next();
        }
    }
    Outcome {
        pass: total == 0,
        detail: format!(
            "{} solutions ({fuzz_solved} from {FUZZ_RUNS} fuzz runs), {total} violations{}",
            sols.len(),
            first.map(|v| format!(", first: {v}")).unwrap_or_default()
        ),
    }
}

fn random_segment(rng: &mut ChaCha8Rng) -> Segment2 {
    let p = |rng: &mut ChaCha8Rng| Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let a = p(rng);
    let b = match rng.gen_range(0..10) {
        0 => a,
        1 => Point2::new(a.x + rng.gen_range(-1.0..1.0), a.y),
        _ => p(rng),
    };
    Segment2::new(a, b)
}

fn geometry() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6E0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let s1 = random_segment(&mut rng);
        let s2 = if rng.gen_range(0..10) == 0 {
            // parallel, offset copy
            let d = Point2::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
            Segment2::new(Point2::new(s1.a.x + d.x, s1.a.y + d.y), Point2::new(s1.b.x + d.x, s1.b.y + d.y))
        } else {
            random_segment(&mut rng)
        };
        let exact = segment_segment_distance(&s1, &s2);
        let sampled = common::sampled_distance(s1.a, s1.b, s2.a, s2.b);
        worst = worst.max((exact - sampled).abs());
    }
    let mut monotone_failures = 0;
    for _ in 0..1000 {
        let s1 = random_segment(&mut rng);
        let s2 = random_segment(&mut rng);
        let d = segment_segment_distance(&s1, &s2);
        // radii straddling the contact radius d/2
        let lo = rng.gen_range(0.0..1.0) * d.max(1e-3);
        let hi = lo + rng.gen_range(0.0..1.0) * d.max(1e-3);
        let (r1, r2) = (AgentRadius::new(lo.max(1e-9)).unwrap(), AgentRadius::new(hi.max(2e-9)).unwrap());
        if swept_discs_disjoint(&s1, &s2, r2) && !swept_discs_disjoint(&s1, &s2, r1) {
            monotone_failures += 1;
        }
    }
    let elapsed = started.elapsed();
    Outcome {
        pass: worst <= 1e-4 && monotone_failures == 0 && elapsed < Duration::from_secs(10),
        detail: format!(
            "max |exact − sampled| = {worst:.2e} on 1000 pairs, {monotone_failures} monotonicity failures on 1000 triples, {:.2}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    // cargo passes libtest flags such as --list; nothing to list here
    if args.iter().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut sols: Collected = Vec::new();

    let suite = oracle_suite();
    let (c1, cbs) = optimality(&suite, &mut sols);
    let c6 = degeneracy(&suite, &cbs, &mut sols);
    let (c2, runs, _) = bound_suite(&mut sols);
    let fuzz_solved = fuzz(&mut sols);
    let c3 = validator(&sols, fuzz_solved);
    let c4 = focal_discipline(&runs);
    let c5 = geometry();

    let all = [
        ("1", "CBS flowtime equals the joint-state optimum", &c1),
        ("2", "focal w=1.1 with conflict count stays within 1.1 × CBS", &c2),
        ("3", "validator finds no violations", &c3),
        ("4", "focal discipline holds at every selection and LB update", &c4),
        ("5", "segment distance and swept-disc monotonicity", &c5),
        ("6", "focal w=1 with cost ψ reproduces CBS", &c6),
    ];
    let mut results = Vec::new();
    for (id, title, o) in all {
        report(id, title, o);
        results.push(o.pass);
    }

    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
