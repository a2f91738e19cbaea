//! Execution dumps as CSV (`time,kind,name,value`) and field snapshots.

use std::io::{self, Write};

use crate::automaton::{AvSequence, Event};
use crate::fmt::g9;
use crate::trajectory::{TimeStep, Trajectory};
use crate::value::{Valuation, Value, VarSet, VarType};
use crate::Hioaw;

pub const HEADER: &str = "time,kind,name,value";
const EPSILON: &str = "epsilon";

/// One row per sample of each variable in `vars` and one per action. The
/// first sample after an action shares the action's time.
pub fn write_trace<W: Write>(mut out: W, seq: &AvSequence, vars: &VarSet) -> io::Result<()> {
    writeln!(out, "{HEADER}")?;
    let dt = seq.dt();
    let mut base = 0;
    for (i, t) in seq.trajectories().iter().enumerate() {
        if i > 0 {
            let name = match &seq.events()[i - 1] {
                Event::Action(a) => a.as_str(),
                Event::Epsilon => EPSILON,
            };
            writeln!(out, "{},action,{},", g9(dt.time(base)), name)?;
        }
        for (k, s) in t.samples().iter().enumerate() {
            let time = g9(dt.time(base + k));
            for (n, v) in s.iter().filter(|(n, _)| vars.contains(*n)) {
                writeln!(out, "{time},traj_sample,{n},{v}")?;
            }
        }
        base += t.steps();
    }
    Ok(())
}

pub fn trace_string(seq: &AvSequence, vars: &VarSet) -> String {
    let mut buf = Vec::new();
    write_trace(&mut buf, seq, vars).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

fn parse_value(text: &str, ty: &VarType) -> Option<Value> {
    match ty {
        VarType::Real => text.parse().ok().map(Value::Scalar),
        VarType::Bool => text.parse().ok().map(Value::Boolean),
        VarType::Label => Some(Value::Label(text.to_string())),
        VarType::Field { .. } => None,
    }
}

/// Reads a dump back as an execution of `a`. Variables absent from the
/// dump are filled in: outputs from the dynamics, inputs with identities.
pub fn read_trace(text: &str, a: &Hioaw, dt: TimeStep) -> Result<AvSequence, String> {
    let sig = a.sig();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        _ => return Err(format!("missing header `{HEADER}`")),
    }
    let mut pieces: Vec<Vec<(usize, Valuation)>> = vec![Vec::new()];
    let mut events = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.splitn(4, ',').collect();
        let [time, kind, name, value] = cols.as_slice() else {
            return Err(format!("line {line_no}: expected four columns"));
        };
        let t: f64 = time.parse().map_err(|_| format!("line {line_no}: bad time `{time}`"))?;
        let step = dt.steps(t).map_err(|e| format!("line {line_no}: {e}"))?;
        match *kind {
            "action" => {
                events.push(if *name == EPSILON { Event::Epsilon } else { Event::Action((*name).into()) });
                pieces.push(Vec::new());
            }
            "traj_sample" => {
                let ty = sig.type_of(name).ok_or_else(|| format!("line {line_no}: unknown variable `{name}`"))?;
                let v =
                    parse_value(value, ty).ok_or_else(|| format!("line {line_no}: bad value `{value}` for {name}"))?;
                let piece = pieces.last_mut().expect("nonempty");
                match piece.last_mut() {
                    Some((s, val)) if *s == step => {
                        val.insert(*name, v);
                    }
                    Some((s, _)) if *s > step => return Err(format!("line {line_no}: time goes backwards")),
                    _ => piece.push((step, Valuation::from_pairs([(*name, v)]))),
                }
            }
            other => return Err(format!("line {line_no}: unknown kind `{other}`")),
        }
    }
    let (xv, uv) = (sig.internals(), sig.inputs());
    let identity = sig.identity_valuation(&uv);
    let mut trajs = Vec::with_capacity(pieces.len());
    for (i, piece) in pieces.into_iter().enumerate() {
        let Some(first) = piece.first().map(|(s, _)| *s) else {
            return Err(format!("piece {i} has no samples"));
        };
        let mut samples = Vec::with_capacity(piece.len());
        for (k, (step, given)) in piece.into_iter().enumerate() {
            if step != first + k {
                return Err(format!("piece {i} skips a sample near step {step}"));
            }
            let mut u = identity.clone();
            u.extend_from(&given.project(&uv));
            let mut s = a.sample(&given.project(&xv), &u);
            s.extend_from(&given);
            samples.push(s);
        }
        trajs.push(Trajectory::new(sig.all_vars(), dt, samples, true).map_err(|e| e.to_string())?);
    }
    AvSequence::new(trajs, events).map_err(|e| e.to_string())
}

/// The last sample at absolute time `t` (after any actions at `t`).
pub fn sample_at_time(seq: &AvSequence, t: f64) -> Result<&Valuation, String> {
    let dt = seq.dt();
    let step = dt.steps(t).map_err(|e| e.to_string())?;
    if step > seq.steps() {
        return Err(format!("time {} is past the end of the run ({})", g9(t), g9(seq.ltime())));
    }
    let mut base = 0;
    let mut found = None;
    for tr in seq.trajectories() {
        if step >= base && step <= base + tr.steps() {
            found = Some(&tr.samples()[step - base]);
        }
        base += tr.steps();
    }
    found.ok_or_else(|| format!("no sample at time {}", g9(t)))
}

/// File name of the snapshot of `var` at `t`.
pub fn snapshot_name(var: &str, t: f64) -> String {
    format!("snapshot_{var}_t{}.csv", g9(t))
}
