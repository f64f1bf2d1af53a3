//! Fixed-step RK4 integration of the mixed-order oscillator network
//!
//! ```text
//! M_i dd_i/dt^2 + D_i dd_i/dt = w_i + xi_i(t) - sum_j p_ij   (synchronous machines)
//!                D_i dd_i/dt = w_i + xi_i(t) - sum_j p_ij   (inverters and loads)
//! p_ij = |V_i||V_j| (1/x_ij) sin(d_i - d_j)
//! ```
//!
//! The state holds every angle plus the frequency of each second-order bus.

mod coherence;

use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use coherence::{coherence, coherence_matrix, CoherenceConfig, CoherenceMatrix, CoherenceRow};

use crate::error::{Error, Result};
use crate::netmodel::{IndexedBranch, Network, OperatingPoint};
use crate::powerflow::omega_sync;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DisturbanceKind {
    /// Uniform(-amplitude, amplitude), redrawn every `hold` seconds.
    RandomPiecewise { hold: f64 },
    /// Constant `amplitude` over the whole window.
    Step,
}

/// Additive injection disturbance `xi(t)` at one bus.
#[derive(Debug, Clone, PartialEq)]
pub struct Disturbance {
    pub bus: usize,
    pub start_time: f64,
    pub duration: f64,
    pub amplitude: f64,
    pub seed: u64,
    pub kind: DisturbanceKind,
}

impl Disturbance {
    fn check(&self, dt: f64) -> Result<()> {
        if !(self.duration > 0.0) || !(self.start_time >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "disturbance at bus {} needs duration > 0, start >= 0 and a finite amplitude",
                self.bus
            )));
        }
        if let DisturbanceKind::RandomPiecewise { hold } = self.kind {
            if !(hold >= dt) {
                return Err(Error::InvalidArgument(format!(
                    "hold interval {hold} s is shorter than dt = {dt} s"
                )));
            }
        }
        Ok(())
    }
}

/// Disturbance with its random levels drawn up front.
struct ActiveDisturbance {
    bus: usize,
    start: f64,
    end: f64,
    hold: f64,
    levels: Vec<f64>,
}

impl ActiveDisturbance {
    fn new(d: &Disturbance, network: &Network) -> Result<ActiveDisturbance> {
        let bus = network
            .index_of(d.bus)
            .ok_or_else(|| Error::InvalidArgument(format!("disturbance bus {} does not exist", d.bus)))?;
        let (hold, levels) = match d.kind {
            DisturbanceKind::Step => (d.duration, vec![d.amplitude]),
            DisturbanceKind::RandomPiecewise { hold } => {
                let count = (d.duration / hold).ceil() as usize + 1;
                let mut rng = ChaCha8Rng::seed_from_u64(d.seed);
                let levels = (0..count)
                    .map(|_| d.amplitude * (2.0 * rng.random::<f64>() - 1.0))
                    .collect();
                (hold, levels)
            }
        };
        Ok(ActiveDisturbance {
            bus,
            start: d.start_time,
            end: d.start_time + d.duration,
            hold,
            levels,
        })
    }

    fn value(&self, t: f64) -> f64 {
        if t < self.start || t >= self.end {
            return 0.0;
        }
        let slot = ((t - self.start) / self.hold) as usize;
        self.levels[slot.min(self.levels.len() - 1)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub t_end: f64,
    pub dt: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { t_end: 10.0, dt: 1e-3 }
    }
}

impl SimConfig {
    fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need dt > 0 and t_end > 0 (dt = {}, t_end = {})",
                self.dt, self.t_end
            )));
        }
        Ok((self.t_end / self.dt).round().max(1.0) as usize)
    }
}

/// Sampled solution on a uniform grid; row `s` of each matrix is time `times[s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub bus_ids: Vec<usize>,
    pub times: Vec<f64>,
    pub angles: DMatrix<f64>,
    pub frequencies: DMatrix<f64>,
}

impl Trajectory {
    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(self.bus_ids.iter().map(|id| format!("delta_{id}")));
        header.extend(self.bus_ids.iter().map(|id| format!("freq_{id}")));
        w.write_record(&header)?;
        for (s, t) in self.times.iter().enumerate() {
            let mut rec = vec![crate::io::fmt_f64(*t)];
            rec.extend(self.angles.row(s).iter().map(|x| crate::io::fmt_f64(*x)));
            rec.extend(self.frequencies.row(s).iter().map(|x| crate::io::fmt_f64(*x)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Model {
    n: usize,
    branches: Vec<IndexedBranch>,
    v_mag: Vec<f64>,
    omega: Vec<f64>,
    damping: Vec<f64>,
    inertia: Vec<f64>,
    /// Position of each second-order bus's frequency in the state, if any.
    velocity_slot: Vec<Option<usize>>,
    disturbances: Vec<ActiveDisturbance>,
}

impl Model {
    fn injections(&self, t: f64, angles: &[f64]) -> Vec<f64> {
        let mut net = self.omega.clone();
        for d in &self.disturbances {
            net[d.bus] += d.value(t);
        }
        for br in &self.branches {
            let p = self.v_mag[br.from] * self.v_mag[br.to] * br.susceptance * (angles[br.from] - angles[br.to]).sin();
            net[br.from] -= p;
            net[br.to] += p;
        }
        net
    }

    fn derivative(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let (angles, velocities) = y.split_at(self.n);
        let net = self.injections(t, angles);
        for i in 0..self.n {
            match self.velocity_slot[i] {
                Some(s) => {
                    let v = velocities[s];
                    dy[i] = v;
                    dy[self.n + s] = (net[i] - self.damping[i] * v) / self.inertia[i];
                }
                None => dy[i] = net[i] / self.damping[i],
            }
        }
    }

    fn frequencies(&self, t: f64, y: &[f64]) -> Vec<f64> {
        let mut dy = vec![0.0; y.len()];
        self.derivative(t, y, &mut dy);
        dy.truncate(self.n);
        dy
    }
}

/// Simulate from the operating point's angles with every second-order bus
/// starting at the synchronous frequency.
pub fn simulate(
    network: &Network,
    op: &OperatingPoint,
    disturbances: &[Disturbance],
    config: &SimConfig,
) -> Result<Trajectory> {
    let ws = omega_sync(network);
    simulate_with_initial_velocity(network, op, disturbances, config, &vec![ws; network.n()])
}

/// Simulate with explicit initial frequencies; entries for first-order buses
/// are ignored since their frequency is determined by the angles.
pub fn simulate_with_initial_velocity(
    network: &Network,
    op: &OperatingPoint,
    disturbances: &[Disturbance],
    config: &SimConfig,
    initial_velocity: &[f64],
) -> Result<Trajectory> {
    let n = network.n();
    let steps = config.steps()?;
    if op.n() != n || initial_velocity.len() != n {
        return Err(Error::InvalidArgument(format!(
            "state dimensions do not match the {n}-bus network"
        )));
    }
    for d in disturbances {
        d.check(config.dt)?;
    }
    let mut velocity_slot = vec![None; n];
    let mut next = 0;
    for (i, b) in network.buses.iter().enumerate() {
        if b.is_second_order() {
            velocity_slot[i] = Some(next);
            next += 1;
        }
    }
    let model = Model {
        n,
        branches: network.indexed_branches(),
        v_mag: op.v_mag.clone(),
        omega: network.injections(),
        damping: network.dampings(),
        inertia: network.inertias(),
        velocity_slot,
        disturbances: disturbances
            .iter()
            .map(|d| ActiveDisturbance::new(d, network))
            .collect::<Result<_>>()?,
    };

    let mut y = op.v_ang.clone();
    y.extend(
        (0..n)
            .filter(|&i| model.velocity_slot[i].is_some())
            .map(|i| initial_velocity[i]),
    );
    let dim = y.len();
    let dt = config.dt;

    let mut times = Vec::with_capacity(steps + 1);
    let mut angles = DMatrix::zeros(steps + 1, n);
    let mut freqs = DMatrix::zeros(steps + 1, n);
    let mut record = |s: usize, t: f64, y: &[f64]| {
        times.push(t);
        let f = model.frequencies(t, y);
        for i in 0..n {
            angles[(s, i)] = y[i];
            freqs[(s, i)] = f[i];
        }
    };
    record(0, 0.0, &y);

    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];
    for s in 0..steps {
        let t = s as f64 * dt;
        model.derivative(t, &y, &mut k1);
        for j in 0..dim {
            tmp[j] = y[j] + 0.5 * dt * k1[j];
        }
        model.derivative(t + 0.5 * dt, &tmp, &mut k2);
        for j in 0..dim {
            tmp[j] = y[j] + 0.5 * dt * k2[j];
        }
        model.derivative(t + 0.5 * dt, &tmp, &mut k3);
        for j in 0..dim {
            tmp[j] = y[j] + dt * k3[j];
        }
        model.derivative(t + dt, &tmp, &mut k4);
        for j in 0..dim {
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let t_next = (s + 1) as f64 * dt;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::IntegrationFailure {
                step: s + 1,
                time: t_next,
            });
        }
        record(s + 1, t_next, &y);
    }
    Ok(Trajectory {
        bus_ids: network.bus_ids(),
        times,
        angles,
        frequencies: freqs,
    })
}

/// Frequency deviations `e_i(t) = dd_i/dt - w_sync` on a window of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyDeviation {
    pub times: Vec<f64>,
    /// One column per bus.
    pub values: DMatrix<f64>,
}

pub fn frequency_deviation(traj: &Trajectory, network: &Network, window: (f64, f64)) -> Result<FrequencyDeviation> {
    let (t0, tf) = window;
    let slack = 1e-9 * traj.dt();
    let first = traj.times[0];
    let last = *traj.times.last().expect("trajectories are non-empty");
    if !(t0 < tf) || t0 < first - slack || tf > last + slack {
        return Err(Error::InvalidArgument(format!(
            "window [{t0}, {tf}] is not inside the simulated interval [{first}, {last}]"
        )));
    }
    let rows: Vec<usize> = (0..traj.times.len())
        .filter(|&s| traj.times[s] >= t0 - slack && traj.times[s] <= tf + slack)
        .collect();
    if rows.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "window [{t0}, {tf}] holds fewer than two samples"
        )));
    }
    let ws = omega_sync(network);
    Ok(FrequencyDeviation {
        times: rows.iter().map(|&s| traj.times[s]).collect(),
        values: traj.frequencies.select_rows(&rows).map(|f| f - ws),
    })
}
