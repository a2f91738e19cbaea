mod common;

use std::f64::consts::PI;

use common::*;
use hioaw::cars::{pose_of, CarParams};
use hioaw::tracefile::trace_string;
use hioaw::Scheduler;

fn head_on() -> (CarParams, CarParams) {
    (car("1", 20.0, 25.0, 0.0, 1000.0), car("2", 30.0, 25.0, PI, 1200.0))
}

#[test]
fn head_on_cars_stop_where_the_oracle_says() {
    let g = scenario_grid();
    let (p1, p2) = head_on();
    let (world, run) = run_cars(&p1, &p2, &g, 120, &Scheduler::Urgent);
    check_car_run([&p1, &p2], &g, &run).unwrap();
    let acts: Vec<String> = run.actions().map(|a| a.to_string()).collect();
    assert!(acts.contains(&"collision_1".into()) && acts.contains(&"collision_2".into()), "{acts:?}");
    let end = run.last().last_sample();
    assert_eq!((end.f64("vel_1"), end.f64("vel_2")), (Some(0.0), Some(0.0)));
    assert!(pose_of(&p1, end).footprint(&g).is_disjoint(&pose_of(&p2, end).footprint(&g)));
    assert!(world.check_fragment(&run, true).is_ok());
}

#[test]
fn other_configurations_agree_with_the_oracle() {
    let g = scenario_grid();
    let cases = [
        (car("1", 20.0, 25.0, 0.0, 800.0), car("2", 20.0, 28.0, 0.0, 900.0)),
        (car("1", 20.0, 25.0, 0.0, 1000.0), car("2", 26.0, 25.0, 0.0, 1500.0)),
        (car("1", 20.0, 20.0, PI / 2.0, 1000.0), car("2", 26.0, 26.0, PI, 1000.0)),
        (car("1", 10.0, 10.0, 0.0, 500.0), car("2", 40.0, 40.0, PI, 700.0)),
    ];
    for (p1, p2) in &cases {
        let (_, run) = run_cars(p1, p2, &g, 80, &Scheduler::Urgent);
        check_car_run([p1, p2], &g, &run).unwrap_or_else(|e| panic!("{} vs {}: {e}", p1.tag, p2.tag));
    }
}

#[test]
fn ground_only_hardens() {
    let g = scenario_grid();
    let (p1, p2) = head_on();
    let (_, run) = run_cars(&p1, &p2, &g, 60, &Scheduler::Urgent);
    let mut prev: Option<hioaw::world::Region> = None;
    for t in run.trajectories() {
        for s in t.samples() {
            let ground = s.field("g").unwrap().support();
            if let Some(p) = &prev {
                assert!(p.difference(&ground).is_empty());
            }
            prev = Some(ground);
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let g = scenario_grid();
    let (p1, p2) = head_on();
    let sched = Scheduler::Random { seed: 42, fire_probability: 0.5 };
    let (world, a) = run_cars(&p1, &p2, &g, 60, &sched);
    let (_, b) = run_cars(&p1, &p2, &g, 60, &sched);
    let vars = world.sig().automaton_vars();
    assert_eq!(trace_string(&a, &vars), trace_string(&b, &vars));
    assert_eq!(a, b);
}
