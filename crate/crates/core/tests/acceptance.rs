//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use hioaw::composition::{check_compatible, verify_decomposition};
use hioaw::refinement::{
    check_simulation, check_trace_inclusion, identity_relation, product_relation, reachable_states,
    simulation_implies_inclusion, FiniteInstance, Verdict,
};
use hioaw::tracefile::trace_string;
use hioaw::value::ActionSet;
use hioaw::{AvSequence, Scheduler, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn trajectory_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cases = 1000;
    for i in 0..cases {
        let (nvars, steps) = (rng.gen_range(1..6), rng.gen_range(0..15));
        let t = random_trajectory(&mut rng, nvars, steps, true);
        let keep = random_subset(&mut rng, t.vars());
        let (a, b) = (rng.gen_range(0..=steps), rng.gen_range(0..=steps));
        let (lo, hi) = (a.min(b), a.max(b));
        let dt = t.dt();
        let window = t.restrict_interval(dt.time(lo), dt.time(hi)).map_err(|e| e.to_string())?;
        let left = window.project(&keep);
        let right = t.project(&keep).restrict_interval(dt.time(lo), dt.time(hi)).map_err(|e| e.to_string())?;
        ensure(left == right && left.samples() == &oracle_project(&oracle_window(&t, lo, hi), &keep)[..], || {
            format!("restriction case {i}")
        })?;
    }
    for i in 0..cases {
        let (nvars, steps) = (rng.gen_range(1..6), rng.gen_range(0..15));
        let t = random_trajectory(&mut rng, nvars, steps, true);
        let keep = random_subset(&mut rng, t.vars());
        let k = rng.gen_range(0..=steps);
        let at = t.dt().time(k);
        let left = t.suffix(at).map_err(|e| e.to_string())?.project(&keep);
        let right = t.project(&keep).suffix(at).map_err(|e| e.to_string())?;
        ensure(left == right && left.samples() == &oracle_project(&oracle_window(&t, k, steps), &keep)[..], || {
            format!("suffix case {i}")
        })?;
    }
    for i in 0..cases {
        let nvars = rng.gen_range(1..6);
        let lens: Vec<usize> = (0..rng.gen_range(1..5)).map(|_| rng.gen_range(0..5)).collect();
        let parts: Vec<Trajectory> = lens.iter().map(|&n| random_trajectory(&mut rng, nvars, n, true)).collect();
        let keep = random_subset(&mut rng, parts[0].vars());
        let whole = Trajectory::concat(&parts).map_err(|e| e.to_string())?;
        let projected: Vec<Trajectory> = parts.iter().map(|p| p.project(&keep)).collect();
        let joined = Trajectory::concat(&projected).map_err(|e| e.to_string())?;
        ensure(whole.project(&keep) == joined && whole.samples() == &oracle_concat(&parts)[..], || {
            format!("concat case {i}")
        })?;
    }
    Ok(format!("{cases} cases each of restriction, suffix and concatenation"))
}

fn padding_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let runs = 500;
    let mut cut_total = 0;
    for i in 0..runs {
        let a = build_hybrid(&random_shape(&mut rng, &format!("p{i}"), None, None));
        let steps = rng.gen_range(1..30);
        let alpha = random_run(&mut rng, &a, steps);
        let cuts = random_cuts(&mut rng, &alpha);
        cut_total += cuts.len();
        let gamma = alpha.pad_steps(&cuts).map_err(|e| e.to_string())?;
        ensure(gamma.trace(a.sig()) == alpha.trace(a.sig()), || format!("run {i}: trace changed by padding"))?;
        let keep: ActionSet = a.sig().all_actions().into_iter().filter(|_| rng.gen_bool(0.5)).collect();
        let vars = random_subset(&mut rng, &a.sig().all_vars());
        ensure(gamma.restrict(&keep, &vars) == alpha.restrict(&keep, &vars), || format!("run {i}: restriction"))?;
        let (back, found) = gamma.unpad(&a.sig().internals()).map_err(|e| e.to_string())?;
        ensure(back == alpha && found == cuts, || format!("run {i}: unpad"))?;
        let other = build_hybrid(&random_shape(&mut rng, &format!("q{i}"), None, None));
        let beta = random_run(&mut rng, &other, alpha.steps());
        let aligned = AvSequence::align(&[alpha.clone(), beta]).map_err(|e| e.to_string())?;
        let lens = |s: &AvSequence| s.trajectories().iter().map(|t| t.steps()).collect::<Vec<_>>();
        ensure(lens(&aligned[0]) == lens(&aligned[1]), || format!("run {i}: alignment lengths"))?;
    }
    Ok(format!("{runs} executions, {cut_total} cuts"))
}

fn composition_closure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let corpus = corpus(&mut rng, 16);
    ensure(corpus.len() >= 20, || format!("corpus has {} pairs", corpus.len()))?;
    for e in &corpus {
        ensure(check_compatible(&e.a, &e.b).compatible(), || format!("{}: incompatible", e.label))?;
        let bad: Vec<_> = e.composite.validate().into_iter().filter(|f| !f.is_warning()).collect();
        ensure(bad.is_empty(), || format!("{}: {bad:?}", e.label))?;
    }
    let probes = 200;
    for i in 0..probes {
        let e = &corpus[i % corpus.len()];
        let steps = rng.gen_range(1..25);
        let alpha = corpus_run(&mut rng, e, steps);
        let t = &alpha.trajectories()[rng.gen_range(0..alpha.trajectories().len())];
        let n = t.steps();
        let (a, b) = (rng.gen_range(0..=n), rng.gen_range(0..=n));
        let (lo, hi) = (a.min(b), a.max(b));
        let probe = match i % 3 {
            0 => t.prefix_steps(hi),
            1 => t.suffix_steps(lo),
            _ => {
                let mid = rng.gen_range(lo..=hi);
                let left = t.suffix_steps(lo).prefix_steps(mid - lo);
                Trajectory::concat([&left, &t.suffix_steps(mid).prefix_steps(hi - mid)]).map_err(|e| e.to_string())?
            }
        };
        reproduced(&e.composite, &probe).map_err(|m| format!("probe {i} on {}: {m}", e.label))?;
    }
    Ok(format!("{} compatible pairs, {probes} probes", corpus.len()))
}

fn decomposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let corpus = corpus(&mut rng, 16);
    let runs = 100;
    for i in 0..runs {
        let e = &corpus[i % corpus.len()];
        let steps = rng.gen_range(1..25);
        let alpha = corpus_run(&mut rng, e, steps);
        verify_decomposition(&e.composite, &alpha, TOL).map_err(|m| format!("run {i} on {}: {m}", e.label))?;
        let beta = alpha.trace(e.composite.sig());
        for c in [&e.a, &e.b] {
            let sig = c.sig();
            let left = beta.restrict(&sig.external_actions(), &sig.external_vars());
            let right = alpha.restrict(&sig.all_actions(), &sig.all_vars()).trace(sig);
            ensure(left == right, || format!("run {i} on {}: trace projection", e.label))?;
        }
    }
    Ok(format!("{runs} composite executions"))
}

fn refinement() -> Outcome {
    const DEPTH: usize = 4;
    let verdict = |v: Result<Verdict, _>| v.map_err(|e: hioaw::refinement::RefinementError| e.to_string());

    // identity simulation on every finite corpus instance
    let mut instances: Vec<FiniteInstance> = Vec::new();
    for p in known_pairs() {
        instances.push(instance(&p.a));
        instances.push(instance(&p.b));
    }
    for t in triples() {
        instances.extend([instance(&t.a1), instance(&t.a2), instance(&t.b)]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for e in corpus(&mut rng, 16).into_iter().filter(|e| e.routes.is_empty()) {
        instances.extend([e.a, e.b, e.composite].map(|a| FiniteInstance::new(a, dt())));
    }
    for x in &instances {
        let r = identity_relation(x).map_err(|e| e.to_string())?;
        let v = verdict(check_simulation(x, x, &r, DEPTH))?;
        ensure(v.holds(), || format!("identity on {}: {v}", x.automaton.name()))?;
    }

    let pairs = known_pairs();
    ensure(pairs.len() >= 10, || "too few known pairs".into())?;
    for p in &pairs {
        let (a, b) = (instance(&p.a), instance(&p.b));
        let report = simulation_implies_inclusion(&a, &b, &relation_of(p), DEPTH).map_err(|e| e.to_string())?;
        let inc = verdict(check_trace_inclusion(&a, &b, DEPTH))?;
        ensure(report.simulation.holds() == p.simulation && inc.holds() == p.inclusion, || {
            format!("{}: simulation {}, inclusion {inc}", p.label, report.simulation)
        })?;
        ensure(!matches!(inc, Verdict::Inconclusive(_)), || format!("{}: inconclusive", p.label))?;
        if let Some(v) = &report.inclusion {
            ensure(v.holds(), || format!("{}: simulation without inclusion", p.label))?;
        }
    }

    let triples = triples();
    ensure(triples.len() >= 5, || "too few triples".into())?;
    for (i, t) in triples.iter().enumerate() {
        let (a1, a2) = (instance(&t.a1), instance(&t.a2));
        let r: Vec<_> = t.relation.iter().map(|(x, y)| (t.a1.state(x), t.a2.state(y))).collect();
        ensure(verdict(check_simulation(&a1, &a2, &r, DEPTH))?.holds(), || format!("triple {i}: base"))?;
        let b = t.b.build().map_err(|e| e.to_string())?;
        let compose =
            |a: &FiniteInstance| hioaw::composition::compose(&a.automaton, &b).map(|c| FiniteInstance::new(c, dt()));
        let (c1, c2) = (compose(&a1).map_err(|e| e.to_string())?, compose(&a2).map_err(|e| e.to_string())?);
        let inc = verdict(check_trace_inclusion(&c1, &c2, DEPTH))?;
        ensure(inc.holds(), || format!("triple {i}: composite inclusion {inc}"))?;
        let context = reachable_states(&instance(&t.b)).map_err(|e| e.to_string())?;
        let sim = verdict(check_simulation(&c1, &c2, &product_relation(&r, &context), DEPTH))?;
        ensure(sim.holds(), || format!("triple {i}: lifted simulation {sim}"))?;
    }
    Ok(format!(
        "identity on {} instances, {} known pairs, {} triples at depth {DEPTH}",
        instances.len(),
        pairs.len(),
        triples.len()
    ))
}

fn car_scenario() -> Outcome {
    let g = scenario_grid();
    let head_on = (car("1", 20.0, 25.0, 0.0, 1000.0), car("2", 30.0, 25.0, PI, 1200.0));
    let others = [
        (car("1", 20.0, 25.0, 0.0, 800.0), car("2", 20.0, 28.0, 0.0, 900.0)),
        (car("1", 20.0, 25.0, 0.0, 1000.0), car("2", 26.0, 25.0, 0.0, 1500.0)),
        (car("1", 20.0, 20.0, PI / 2.0, 1000.0), car("2", 26.0, 26.0, PI, 1000.0)),
    ];
    // (a) pressure mass, (b) paint support, (c) collision step against the oracle
    let (world, run) = run_cars(&head_on.0, &head_on.1, &g, 120, &Scheduler::Urgent);
    check_car_run([&head_on.0, &head_on.1], &g, &run).map_err(|m| format!("head-on: {m}"))?;
    for (p1, p2) in &others {
        let (_, r) = run_cars(p1, p2, &g, 80, &Scheduler::Urgent);
        check_car_run([p1, p2], &g, &r).map_err(|m| format!("{:?} vs {:?}: {m}", p1.position, p2.position))?;
    }
    // (d) both stop apart
    let end = run.last().last_sample();
    ensure(end.f64("vel_1") == Some(0.0) && end.f64("vel_2") == Some(0.0), || "head-on: a car still moves".into())?;
    let (f1, f2) =
        (hioaw::cars::pose_of(&head_on.0, end).footprint(&g), hioaw::cars::pose_of(&head_on.1, end).footprint(&g));
    ensure(f1.is_disjoint(&f2), || "head-on: footprints overlap".into())?;
    // (e) reruns
    let sched = Scheduler::Random { seed: 7, fire_probability: 0.5 };
    let vars = world.sig().automaton_vars();
    let (_, r1) = run_cars(&head_on.0, &head_on.1, &g, 120, &sched);
    let (_, r2) = run_cars(&head_on.0, &head_on.1, &g, 120, &sched);
    ensure(trace_string(&r1, &vars) == trace_string(&r2, &vars), || "reruns differ".into())?;
    Ok(format!("head-on plus {} configurations on a 200x200 grid", others.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 6] = [
        ("trajectory algebra laws", Duration::from_secs(5), trajectory_laws),
        ("padding laws", Duration::from_secs(10), padding_laws),
        ("composition closure", Duration::from_secs(30), composition_closure),
        ("decomposition and trace projection", Duration::from_secs(30), decomposition),
        ("refinement", Duration::from_secs(60), refinement),
        ("car scenario", Duration::from_secs(20), car_scenario),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = f();
        let took = start.elapsed();
        let line = match result {
            Ok(detail) if took <= *limit => {
                format!("PASS [{}] {name}: {detail} ({:.2}s, limit {}s)", i + 1, took.as_secs_f64(), limit.as_secs())
            }
            Ok(detail) => format!(
                "FAIL [{}] {name}: {detail}, but took {:.2}s, limit {}s",
                i + 1,
                took.as_secs_f64(),
                limit.as_secs()
            ),
            Err(why) => format!("FAIL [{}] {name}: {why} ({:.2}s)", i + 1, took.as_secs_f64()),
        };
        if line.starts_with("FAIL") {
            failed += 1;
        }
        println!("{line}");
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
