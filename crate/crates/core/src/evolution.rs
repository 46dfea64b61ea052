//! Time integration of the parabolic competition system, the monotone
//! transform to cooperative coordinates, and the time-t solution map
//! with its order-preservation tests.
//!
//! The default scheme is IMEX: backward-Euler diffusion (one periodic
//! tridiagonal-with-corners solve per species and step) with explicit
//! reaction and competition terms. Its fixed points solve exactly the
//! same discrete stationary equations as the Newton solvers, so
//! steady states are preserved to solver accuracy. A fully explicit
//! scheme is available as well; its per-node update is a pure stencil
//! computation, which makes the one-period shift equivariance of the
//! solution map bit-exact on tiled coefficients.

use crate::error::{Error, Result};
use crate::grid::{Field, PeriodicGrid};
use crate::linalg::CyclicTridiag;
use crate::model::{ReactionFields, ReactionSpec, Species, SystemParams};
use crate::stationary::StatePair;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Imex,
    Explicit,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Steps between recorded snapshots.
    pub record_every: usize,
}

/// Upper bound on dt for the explicit reaction update: half the
/// inverse of the largest reaction rate, with the carrying-capacity
/// bounds `a_i` standing in for `max u_i~`.
pub fn reaction_stability_bound(params: &SystemParams, spec: &ReactionSpec) -> f64 {
    let report_scale = spec
        .capacity_bound(Species::One)
        .max(spec.capacity_bound(Species::Two));
    let m_max = {
        // max f_i(0, .) over the audit grid, both species.
        let grid = PeriodicGrid::new(spec.period(), 2048).expect("audit grid");
        Species::BOTH
            .iter()
            .flat_map(|&i| grid.nodes().map(move |x| spec.f(i, 0.0, x)))
            .fold(0.0_f64, f64::max)
    };
    0.5 / (m_max + params.k * report_scale * params.alpha.max(1.0))
}

/// Default step size: `1e-3` capped by half the reaction stability
/// bound, so the explicit part always sits well inside its region.
pub fn default_dt(params: &SystemParams, spec: &ReactionSpec) -> f64 {
    (0.5 * reaction_stability_bound(params, spec)).min(1e-3)
}

/// Telemetry of the positivity clamp. Negative undershoots are set to
/// zero on every step; undershoots larger than roundoff (1e-14) are
/// counted, and a step that clamps more than 0.1% of its nodes is
/// recorded as an instability warning.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct ClampStats {
    pub total_clamped: u64,
    pub worst_step_fraction: f64,
    pub warnings: u64,
}

/// Reusable integrator for one grid, parameter set and step size.
pub struct Stepper {
    fields: ReactionFields,
    params: SystemParams,
    dt: f64,
    scheme: Scheme,
    solver1: Option<CyclicTridiag>,
    solver2: Option<CyclicTridiag>,
    clamps: ClampStats,
}

impl Stepper {
    pub fn new(spec: &ReactionSpec, params: &SystemParams, grid: &PeriodicGrid, dt: f64, scheme: Scheme) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        let bound = reaction_stability_bound(params, spec);
        if dt > bound {
            return Err(Error::Config(format!(
                "dt = {dt:.3e} exceeds the reaction stability bound {bound:.3e}"
            )));
        }
        if scheme == Scheme::Explicit {
            let diff_bound = grid.dx() * grid.dx() / (2.0 * params.d.max(1.0));
            if dt > diff_bound {
                return Err(Error::Config(format!(
                    "dt = {dt:.3e} exceeds the explicit diffusion bound {diff_bound:.3e}"
                )));
            }
        }
        let fields = spec.sample(grid)?;
        let (solver1, solver2) = match scheme {
            Scheme::Imex => {
                let n = grid.len();
                let w1 = dt / (grid.dx() * grid.dx());
                let w2 = params.d * dt / (grid.dx() * grid.dx());
                let s1 = CyclicTridiag::factor(&vec![1.0 + 2.0 * w1; n], -w1)?;
                let s2 = CyclicTridiag::factor(&vec![1.0 + 2.0 * w2; n], -w2)?;
                (Some(s1), Some(s2))
            }
            Scheme::Explicit => (None, None),
        };
        Ok(Self {
            fields,
            params: *params,
            dt,
            scheme,
            solver1,
            solver2,
            clamps: ClampStats::default(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.fields.grid
    }

    pub fn clamp_stats(&self) -> ClampStats {
        self.clamps
    }

    fn reaction(&self, u1: &[f64], u2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let k = self.params.k;
        let ak = self.params.alpha * k;
        let n = u1.len();
        let mut r1 = vec![0.0; n];
        let mut r2 = vec![0.0; n];
        for j in 0..n {
            r1[j] = u1[j] * (self.fields.mu1[j] - self.fields.nu1[j] * u1[j]) - k * u1[j] * u2[j];
            r2[j] = u2[j] * (self.fields.mu2[j] - self.fields.nu2[j] * u2[j]) - ak * u1[j] * u2[j];
        }
        (r1, r2)
    }

    fn clamp(&mut self, v: &mut [f64]) -> usize {
        let mut counted = 0;
        for x in v.iter_mut() {
            if *x < 0.0 {
                if *x < -1e-14 {
                    counted += 1;
                }
                *x = 0.0;
            }
        }
        counted
    }

    /// One time step. Nonnegativity is restored by clamping; see
    /// [`ClampStats`] for the telemetry contract.
    pub fn step(&mut self, state: &StatePair) -> Result<StatePair> {
        let n = self.fields.grid.len();
        let u1 = state.u1.values();
        let u2 = state.u2.values();
        let (r1, r2) = self.reaction(u1, u2);
        let (mut next1, mut next2) = match self.scheme {
            Scheme::Imex => {
                let rhs1: Vec<f64> = (0..n).map(|j| u1[j] + self.dt * r1[j]).collect();
                let rhs2: Vec<f64> = (0..n).map(|j| u2[j] + self.dt * r2[j]).collect();
                let s1 = self.solver1.as_ref().expect("imex solver present");
                let s2 = self.solver2.as_ref().expect("imex solver present");
                (s1.solve(&rhs1)?, s2.solve(&rhs2)?)
            }
            Scheme::Explicit => {
                let dx2 = self.fields.grid.dx() * self.fields.grid.dx();
                let w1 = self.dt / dx2;
                let w2 = self.params.d * self.dt / dx2;
                let mut n1 = vec![0.0; n];
                let mut n2 = vec![0.0; n];
                for j in 0..n {
                    let lap1 = u1[(j + n - 1) % n] - 2.0 * u1[j] + u1[(j + 1) % n];
                    let lap2 = u2[(j + n - 1) % n] - 2.0 * u2[j] + u2[(j + 1) % n];
                    n1[j] = u1[j] + w1 * lap1 + self.dt * r1[j];
                    n2[j] = u2[j] + w2 * lap2 + self.dt * r2[j];
                }
                (n1, n2)
            }
        };
        let clamped = self.clamp(&mut next1) + self.clamp(&mut next2);
        if clamped > 0 {
            self.clamps.total_clamped += clamped as u64;
            let fraction = clamped as f64 / (2 * n) as f64;
            self.clamps.worst_step_fraction = self.clamps.worst_step_fraction.max(fraction);
            if fraction > 1e-3 {
                self.clamps.warnings += 1;
            }
        }
        Ok(StatePair {
            u1: Field::new(self.fields.grid, next1)?,
            u2: Field::new(self.fields.grid, next2)?,
        })
    }
}

/// Recorded integration history.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StatePair>,
}

pub fn integrate(stepper: &mut Stepper, initial: &StatePair, t_end: f64, record_every: usize) -> Result<Trajectory> {
    if record_every == 0 {
        return Err(Error::Usage("record_every must be positive".into()));
    }
    let steps = (t_end / stepper.dt()).round().max(1.0) as usize;
    let mut times = vec![0.0];
    let mut states = vec![initial.clone()];
    let mut current = initial.clone();
    for s in 1..=steps {
        current = stepper.step(&current)?;
        if s % record_every == 0 || s == steps {
            times.push(s as f64 * stepper.dt());
            states.push(current.clone());
        }
    }
    Ok(Trajectory { times, states })
}

/// Time-t solution map: integrates the competitive system and returns
/// the state; in the transformed coordinates `(u1, u2~ - u2)` this is
/// the cooperative semiflow evaluated at time t.
pub fn poincare_map(stepper: &mut Stepper, initial: &StatePair, t: f64) -> Result<StatePair> {
    if !(t > 0.0) {
        return Err(Error::Usage(format!("map time must be positive, got {t}")));
    }
    let steps = (t / stepper.dt()).round().max(1.0) as usize;
    let mut current = initial.clone();
    for _ in 0..steps {
        current = stepper.step(&current)?;
    }
    Ok(current)
}

/// Monotone transform `v2 = u2~ - u2`; the map is an involution, so
/// the same call inverts it.
pub fn transform_j(u2: &Field, u2_tilde: &Field) -> Field {
    Field::new(
        u2.grid(),
        u2_tilde
            .values()
            .iter()
            .zip(u2.values())
            .map(|(t, v)| t - v)
            .collect(),
    )
    .expect("transform of finite fields is finite")
}

/// Cooperative (transformed) partial order: `a <= b` iff
/// `a.u1 <= b.u1` and `a.u2 >= b.u2` nodewise.
pub fn cooperative_leq(a: &StatePair, b: &StatePair) -> bool {
    a.u1
        .values()
        .iter()
        .zip(b.u1.values())
        .all(|(x, y)| x <= y)
        && a.u2
            .values()
            .iter()
            .zip(b.u2.values())
            .all(|(x, y)| x >= y)
}

/// Integrates an ordered pair and reports whether the strict
/// cooperative order holds at every node at time t (tolerance 1e-12).
/// The inputs must satisfy `a <= b` cooperatively with `a != b`.
pub fn comparison_test(stepper: &mut Stepper, a: &StatePair, b: &StatePair, t: f64) -> Result<bool> {
    if !cooperative_leq(a, b) {
        return Err(Error::Usage("comparison inputs are not cooperatively ordered".into()));
    }
    if a == b {
        return Err(Error::Usage("comparison requires distinct states".into()));
    }
    let qa = poincare_map(stepper, a, t)?;
    let qb = poincare_map(stepper, b, t)?;
    let tol = 1e-12;
    let strict = qa
        .u1
        .values()
        .iter()
        .zip(qb.u1.values())
        .all(|(x, y)| y - x > tol)
        && qa
            .u2
            .values()
            .iter()
            .zip(qb.u2.values())
            .all(|(x, y)| x - y > tol);
    Ok(strict)
}
