//! Uniformly sampled trajectories and their algebra: prefix, suffix,
//! projection, concatenation, interval restriction and group sum.
//!
//! A trajectory over a variable set `V` is a sequence of valuations; sample
//! `k` is the value at time `k * dt`. Its domain always starts at 0.

use std::cmp::Ordering;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::value::{Valuation, Value, VarName, VarSet};
use crate::world::{FieldError, FieldSlice, SpatioTemporalField};

/// Relative slack when snapping a time onto the sample grid.
const ALIGN_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("time {t} lies outside the domain [0, {end}]")]
    TimeOutOfDomain { t: f64, end: f64 },
    #[error("time {t} is not a multiple of the time step {dt}")]
    GridMisaligned { t: f64, dt: f64 },
    #[error("variable sets differ")]
    VarSetMismatch,
    #[error("trajectory {index} is open but not last")]
    OpenNonFinalPart { index: usize },
    #[error("trajectories have different time domains")]
    DomainMismatch,
    #[error("time steps differ")]
    TimeStepMismatch,
    #[error("variable {var} has no group sum: {detail}")]
    NonSummableType { var: VarName, detail: String },
    #[error("a trajectory needs at least one sample")]
    Empty,
    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),
    #[error("variable {0} is not carried by the trajectory")]
    UnknownVar(VarName),
    #[error("variable {0} is not a world field")]
    NotAField(VarName),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Sampling period of a trajectory, in seconds.
///
/// Compares by bit pattern.
#[derive(Debug, Clone, Copy)]
pub struct TimeStep(f64);

impl TimeStep {
    pub fn new(seconds: f64) -> Result<Self, TrajectoryError> {
        if seconds.is_finite() && seconds > 0.0 {
            Ok(TimeStep(seconds))
        } else {
            Err(TrajectoryError::InvalidTimeStep(seconds))
        }
    }

    pub fn seconds(self) -> f64 {
        self.0
    }

    pub fn time(self, steps: usize) -> f64 {
        steps as f64 * self.0
    }

    /// Number of steps equal to `t`, or an error when `t` is negative or
    /// falls between samples.
    pub fn steps(self, t: f64) -> Result<usize, TrajectoryError> {
        if !t.is_finite() || t < -ALIGN_TOL * self.0 {
            return Err(TrajectoryError::TimeOutOfDomain { t, end: f64::INFINITY });
        }
        let k = (t / self.0).round();
        if (k * self.0 - t).abs() > ALIGN_TOL * t.abs().max(1.0) {
            return Err(TrajectoryError::GridMisaligned { t, dt: self.0 });
        }
        Ok(k.max(0.0) as usize)
    }
}

impl PartialEq for TimeStep {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}

impl Eq for TimeStep {}

impl Hash for TimeStep {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state)
    }
}

impl PartialOrd for TimeStep {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TimeStep {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Trajectory {
    vars: VarSet,
    dt: TimeStep,
    samples: Vec<Valuation>,
    closed: bool,
}

impl Trajectory {
    pub fn new(vars: VarSet, dt: TimeStep, samples: Vec<Valuation>, closed: bool) -> Result<Self, TrajectoryError> {
        if samples.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        if samples.iter().any(|s| !s.has_vars(&vars)) {
            return Err(TrajectoryError::VarSetMismatch);
        }
        Ok(Trajectory { vars, dt, samples, closed })
    }

    /// Builds a closed trajectory whose variable set is taken from the first sample.
    pub fn from_samples(dt: TimeStep, samples: Vec<Valuation>) -> Result<Self, TrajectoryError> {
        let vars = samples.first().ok_or(TrajectoryError::Empty)?.var_set();
        Self::new(vars, dt, samples, true)
    }

    /// The zero-length trajectory holding only `v`.
    pub fn point(v: Valuation, dt: TimeStep) -> Self {
        Trajectory { vars: v.var_set(), dt, samples: vec![v], closed: true }
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn dt(&self) -> TimeStep {
        self.dt
    }

    pub fn samples(&self) -> &[Valuation] {
        &self.samples
    }

    pub fn sample(&self, k: usize) -> Option<&Valuation> {
        self.samples.get(k)
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn with_closed(mut self, closed: bool) -> Self {
        self.closed = closed;
        self
    }

    /// Number of time steps covered; 0 for a point trajectory.
    pub fn steps(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn ltime(&self) -> f64 {
        self.dt.time(self.steps())
    }

    pub fn is_point(&self) -> bool {
        self.samples.len() == 1
    }

    pub fn fval(&self) -> &Valuation {
        &self.samples[0]
    }

    /// Last valuation; defined for closed trajectories only.
    pub fn lval(&self) -> Option<&Valuation> {
        if self.closed {
            self.samples.last()
        } else {
            None
        }
    }

    /// Last stored sample regardless of closedness.
    pub fn last_sample(&self) -> &Valuation {
        self.samples.last().expect("trajectories are nonempty")
    }

    pub fn at(&self, t: f64) -> Result<&Valuation, TrajectoryError> {
        let k = self.index(t)?;
        Ok(&self.samples[k])
    }

    fn index(&self, t: f64) -> Result<usize, TrajectoryError> {
        let k = self.dt.steps(t).map_err(|e| match e {
            TrajectoryError::TimeOutOfDomain { t, .. } => TrajectoryError::TimeOutOfDomain { t, end: self.ltime() },
            other => other,
        })?;
        if k > self.steps() {
            return Err(TrajectoryError::TimeOutOfDomain { t, end: self.ltime() });
        }
        Ok(k)
    }

    /// Restriction to `[0, t]`; the result is closed.
    pub fn prefix(&self, t: f64) -> Result<Trajectory, TrajectoryError> {
        let k = self.index(t)?;
        Ok(self.prefix_steps(k))
    }

    pub fn prefix_steps(&self, k: usize) -> Trajectory {
        assert!(k <= self.steps(), "prefix beyond the domain");
        Trajectory { vars: self.vars.clone(), dt: self.dt, samples: self.samples[..=k].to_vec(), closed: true }
    }

    /// Restriction to `[t, ∞)` shifted back to start at 0.
    pub fn suffix(&self, t: f64) -> Result<Trajectory, TrajectoryError> {
        let k = self.index(t)?;
        Ok(self.suffix_steps(k))
    }

    pub fn suffix_steps(&self, k: usize) -> Trajectory {
        assert!(k <= self.steps(), "suffix beyond the domain");
        Trajectory { vars: self.vars.clone(), dt: self.dt, samples: self.samples[k..].to_vec(), closed: self.closed }
    }

    /// Restriction to `[lo, hi]`, re-based so that `lo` maps to 0.
    pub fn restrict_interval(&self, lo: f64, hi: f64) -> Result<Trajectory, TrajectoryError> {
        let b = self.index(hi)?;
        let a = self.index(lo)?;
        if a > b {
            return Err(TrajectoryError::TimeOutOfDomain { t: lo, end: hi });
        }
        Ok(self.sub_steps(a, b))
    }

    /// Samples `a..=b`, re-based; closed.
    pub fn sub_steps(&self, a: usize, b: usize) -> Trajectory {
        assert!(a <= b && b <= self.steps(), "sub-trajectory beyond the domain");
        Trajectory { vars: self.vars.clone(), dt: self.dt, samples: self.samples[a..=b].to_vec(), closed: true }
    }

    /// Pointwise restriction of every sample to `vars`.
    pub fn project(&self, vars: &VarSet) -> Trajectory {
        let kept: VarSet = self.vars.intersection(vars).cloned().collect();
        let samples = if kept.len() == self.vars.len() {
            self.samples.clone()
        } else {
            self.samples.iter().map(|s| s.project(&kept)).collect()
        };
        Trajectory { vars: kept, dt: self.dt, samples, closed: self.closed }
    }

    /// Concatenation of `parts`. At each junction the last valuation of the
    /// earlier part is kept and the first valuation of the later part dropped.
    pub fn concat<'a, I>(parts: I) -> Result<Trajectory, TrajectoryError>
    where
        I: IntoIterator<Item = &'a Trajectory>,
    {
        let mut iter = parts.into_iter();
        let first = iter.next().ok_or(TrajectoryError::Empty)?;
        let mut out = first.clone();
        let mut index = 0;
        for part in iter {
            index += 1;
            if !out.closed {
                return Err(TrajectoryError::OpenNonFinalPart { index: index - 1 });
            }
            if part.vars != out.vars {
                return Err(TrajectoryError::VarSetMismatch);
            }
            if part.dt != out.dt {
                return Err(TrajectoryError::TimeStepMismatch);
            }
            out.samples.extend_from_slice(&part.samples[1..]);
            out.closed = part.closed;
        }
        Ok(out)
    }

    /// Sum over a shared time domain: variables carried by one side are
    /// copied, shared variables are added with their group operation.
    pub fn sum(a: &Trajectory, b: &Trajectory) -> Result<Trajectory, TrajectoryError> {
        if a.dt != b.dt {
            return Err(TrajectoryError::TimeStepMismatch);
        }
        if a.samples.len() != b.samples.len() || a.closed != b.closed {
            return Err(TrajectoryError::DomainMismatch);
        }
        let vars: VarSet = a.vars.union(&b.vars).cloned().collect();
        let samples =
            a.samples.iter().zip(&b.samples).map(|(x, y)| sum_valuations(x, y)).collect::<Result<Vec<_>, _>>()?;
        Ok(Trajectory { vars, dt: a.dt, samples, closed: a.closed })
    }

    /// True iff `self` is `other` restricted to an initial part of its domain.
    pub fn is_prefix_of(&self, other: &Trajectory) -> bool {
        self.vars == other.vars
            && self.dt == other.dt
            && self.samples.len() <= other.samples.len()
            && self.samples.iter().zip(&other.samples).all(|(a, b)| a == b)
            && (self.samples.len() < other.samples.len() || self.closed == other.closed || self.closed)
    }

    /// Sample-wise equality with `tol` slack on real field cells.
    pub fn approx_eq(&self, other: &Trajectory, tol: f64) -> bool {
        self.vars == other.vars
            && self.dt == other.dt
            && self.closed == other.closed
            && self.samples.len() == other.samples.len()
            && self.samples.iter().zip(&other.samples).all(|(a, b)| a.approx_eq(b, tol))
    }

    /// The slices of world variable `name` over the whole trajectory.
    pub fn field(&self, name: &str) -> Result<SpatioTemporalField, TrajectoryError> {
        let slices = self
            .samples
            .iter()
            .map(|s| match s.get(name) {
                Some(Value::Field(f)) => Ok(f.clone()),
                Some(_) => Err(TrajectoryError::NotAField(name.into())),
                None => Err(TrajectoryError::UnknownVar(name.into())),
            })
            .collect::<Result<Vec<FieldSlice>, _>>()?;
        Ok(SpatioTemporalField::new(self.dt, slices)?)
    }
}

fn sum_valuations(a: &Valuation, b: &Valuation) -> Result<Valuation, TrajectoryError> {
    let mut out = a.clone();
    for (name, vb) in b {
        match a.get(name.as_str()) {
            None => {
                out.insert(name.clone(), vb.clone());
            }
            Some(va) => {
                let s = va
                    .try_add(vb)
                    .map_err(|e| TrajectoryError::NonSummableType { var: name.clone(), detail: e.to_string() })?;
                out.insert(name.clone(), s);
            }
        }
    }
    Ok(out)
}
