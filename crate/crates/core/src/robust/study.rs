//! Randomized operating-point study: perturb load injections, re-dispatch
//! generation proportionally, and track how the selected `k` and the bus
//! assignments respond.

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::cluster::{cluster_with_eigen, relative_spectral_gaps, select_k, ClusterOptions, Partition};
use crate::dyngraph::{build_dynamic_graph, DynamicGraph};
use crate::error::{Error, Result};
use crate::geig::{generalized_eig, EigenSolution};
use crate::netmodel::Network;
use crate::powerflow::{rebalance_injections, solve_angles, PowerFlowOptions};

/// Largest `k` for which label alignment tries every permutation.
const EXHAUSTIVE_ALIGNMENT_MAX_K: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub n_scenarios: usize,
    /// Standard deviation of the load perturbation, MW.
    pub sigma_mw: f64,
    /// Scenario `s` draws from seed `base_seed + s`.
    pub base_seed: u64,
    pub k_max: usize,
    pub cluster: ClusterOptions,
    pub power_flow: PowerFlowOptions,
}

impl StudyConfig {
    pub fn new(n_scenarios: usize, sigma_mw: f64, base_seed: u64, k_max: usize) -> StudyConfig {
        StudyConfig {
            n_scenarios,
            sigma_mw,
            base_seed,
            k_max,
            cluster: ClusterOptions {
                seed: base_seed,
                ..Default::default()
            },
            power_flow: PowerFlowOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioRecord {
    pub scenario: usize,
    pub seed: u64,
    pub converged: bool,
    pub selected_k: Option<usize>,
    /// Largest relative spectral gap.
    pub gap: Option<f64>,
    pub max_line_angle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapStatistics {
    pub mean: f64,
    /// Unbiased sample variance (divisor `count - 1`).
    pub variance: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessStudy {
    pub n_scenarios: usize,
    pub sigma_mw: f64,
    pub base_seed: u64,
    pub k_max: usize,
    pub failures: usize,
    /// Number of successful scenarios selecting each `k`.
    pub selected_k_histogram: BTreeMap<usize, usize>,
    pub modal_k: usize,
    /// Distribution of the largest relative spectral gap.
    pub gap: GapStatistics,
    pub bus_ids: Vec<usize>,
    /// Nominal partition at the modal `k`; scenario labels are aligned to it.
    pub nominal_assignment: Vec<usize>,
    /// `assignment_frequency[b][c]`: share of successful scenarios placing
    /// bus `b` in cluster `c`.
    pub assignment_frequency: Vec<Vec<f64>>,
    /// Share of successful scenarios placing each bus in its nominal cluster.
    pub nominal_agreement: Vec<f64>,
    #[serde(skip)]
    pub scenarios: Vec<ScenarioRecord>,
}

impl RobustnessStudy {
    pub fn successes(&self) -> usize {
        self.n_scenarios - self.failures
    }

    pub fn write_scenarios_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scenario", "seed", "converged", "selected_k", "gap", "max_line_angle"])?;
        let opt = |x: Option<f64>| x.map(crate::io::fmt_f64).unwrap_or_default();
        for s in &self.scenarios {
            w.write_record([
                s.scenario.to_string(),
                s.seed.to_string(),
                s.converged.to_string(),
                s.selected_k.map(|k| k.to_string()).unwrap_or_default(),
                opt(s.gap),
                opt(s.max_line_angle),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Solved {
    graph: DynamicGraph,
    eigen: EigenSolution,
    selected_k: usize,
    gap: f64,
    max_line_angle: f64,
}

fn solve_scenario(network: &Network, loads: &[(usize, f64)], config: &StudyConfig) -> Result<Option<Solved>> {
    let net = rebalance_injections(network, loads)?;
    let report = solve_angles(&net, &config.power_flow)?;
    if !report.converged {
        return Ok(None);
    }
    let graph = build_dynamic_graph(&net, &report.operating_point);
    let eigen = generalized_eig(graph.laplacian().matrix(), &graph.node_weights)?;
    let gaps = relative_spectral_gaps(&eigen.eigenvalues, config.k_max)?;
    let selected_k = select_k(&gaps).expect("k_max >= 2 yields at least one gap");
    let gap = gaps
        .iter()
        .find(|(k, _)| *k == selected_k)
        .expect("selected from gaps")
        .1;
    Ok(Some(Solved {
        graph,
        eigen,
        selected_k,
        gap,
        max_line_angle: report.max_line_angle,
    }))
}

fn perturbed_loads(network: &Network, seed: u64, sigma_pu: f64) -> Vec<(usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma_pu).expect("sigma is finite and non-negative");
    let mut loads: Vec<&crate::netmodel::Bus> = network.buses.iter().filter(|b| !b.kind.is_generation()).collect();
    loads.sort_by_key(|b| b.id);
    loads
        .into_iter()
        .map(|b| (b.id, b.p_inject + normal.sample(&mut rng)))
        .collect()
}

/// Map each label of `scenario` to a nominal label so that the number of
/// buses keeping their nominal label is maximal.
fn align_labels(nominal: &[usize], scenario: &[usize], k: usize) -> Vec<usize> {
    let mut overlap = vec![vec![0usize; k]; k];
    for (&a, &b) in nominal.iter().zip(scenario) {
        overlap[b][a] += 1;
    }
    if k <= EXHAUSTIVE_ALIGNMENT_MAX_K {
        let mut perm: Vec<usize> = (0..k).collect();
        let mut best = perm.clone();
        let mut best_score = 0;
        let mut first = true;
        permute(&mut perm, 0, &mut |p| {
            let score: usize = (0..k).map(|b| overlap[b][p[b]]).sum();
            if first || score > best_score {
                best_score = score;
                best.copy_from_slice(p);
                first = false;
            }
        });
        best
    } else {
        let mut map = vec![usize::MAX; k];
        let mut taken = vec![false; k];
        let mut cells: Vec<(usize, usize, usize)> = (0..k)
            .flat_map(|b| (0..k).map(move |a| (b, a, 0)))
            .map(|(b, a, _)| (b, a, overlap[b][a]))
            .collect();
        cells.sort_by(|x, y| y.2.cmp(&x.2).then(x.0.cmp(&y.0)).then(x.1.cmp(&y.1)));
        for (b, a, _) in cells {
            if map[b] == usize::MAX && !taken[a] {
                map[b] = a;
                taken[a] = true;
            }
        }
        map
    }
}

/// Visit every permutation of `p[start..]` in lexicographic order of swaps.
fn permute(p: &mut Vec<usize>, start: usize, visit: &mut dyn FnMut(&[usize])) {
    if start == p.len() {
        visit(p);
        return;
    }
    for i in start..p.len() {
        p.swap(start, i);
        permute(p, start + 1, visit);
        p.swap(start, i);
    }
}

/// Run the randomized study. Load perturbations are Gaussian with standard
/// deviation `sigma_mw` MW, converted with the network's MVA base.
pub fn scenario_study(network: &Network, config: &StudyConfig) -> Result<RobustnessStudy> {
    if !(config.sigma_mw >= 0.0 && config.sigma_mw.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sigma_mw must be >= 0 (got {})",
            config.sigma_mw
        )));
    }
    if config.n_scenarios == 0 {
        return Err(Error::InvalidArgument("at least one scenario is required".into()));
    }
    if network.generator_indices().is_empty() {
        return Err(Error::InvalidArgument(
            "the study needs at least one generation bus".into(),
        ));
    }
    let sigma_pu = config.sigma_mw / network.base_mva;

    let solved: Vec<Result<Option<Solved>>> = (0..config.n_scenarios)
        .into_par_iter()
        .map(|s| {
            let seed = config.base_seed.wrapping_add(s as u64);
            solve_scenario(network, &perturbed_loads(network, seed, sigma_pu), config)
        })
        .collect();

    let mut records = Vec::with_capacity(config.n_scenarios);
    let mut histogram = BTreeMap::new();
    let mut kept = Vec::new();
    for (s, result) in solved.into_iter().enumerate() {
        let seed = config.base_seed.wrapping_add(s as u64);
        let record = match result {
            Ok(Some(sol)) => {
                *histogram.entry(sol.selected_k).or_insert(0usize) += 1;
                let rec = ScenarioRecord {
                    scenario: s,
                    seed,
                    converged: true,
                    selected_k: Some(sol.selected_k),
                    gap: Some(sol.gap),
                    max_line_angle: Some(sol.max_line_angle),
                };
                kept.push(sol);
                rec
            }
            Ok(None) => ScenarioRecord {
                scenario: s,
                seed,
                converged: false,
                selected_k: None,
                gap: None,
                max_line_angle: None,
            },
            Err(e) => {
                log::warn!("scenario {s} failed: {e}");
                ScenarioRecord {
                    scenario: s,
                    seed,
                    converged: false,
                    selected_k: None,
                    gap: None,
                    max_line_angle: None,
                }
            }
        };
        records.push(record);
    }
    if kept.is_empty() {
        return Err(Error::Numerical(format!("all {} scenarios failed", config.n_scenarios)));
    }
    let failures = config.n_scenarios - kept.len();
    let modal_k = histogram
        .iter()
        .fold((0, 0), |best, (&k, &c)| if c > best.1 { (k, c) } else { best })
        .0;

    let gaps: Vec<f64> = kept.iter().map(|s| s.gap).collect();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let variance = if gaps.len() > 1 {
        gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (gaps.len() - 1) as f64
    } else {
        0.0
    };

    let nominal = solve_scenario(network, &[], config)?
        .ok_or_else(|| Error::Numerical("nominal power flow did not converge".into()))?;
    let nominal_partition = cluster_with_eigen(&nominal.graph, nominal.eigen, modal_k, &config.cluster)?.partition;

    let partitions: Vec<Partition> = kept
        .into_par_iter()
        .map(|s| cluster_with_eigen(&s.graph, s.eigen, modal_k, &config.cluster).map(|o| o.partition))
        .collect::<Result<_>>()?;

    let n = network.n();
    let mut counts = vec![vec![0usize; modal_k]; n];
    for p in &partitions {
        let map = align_labels(&nominal_partition.assignment, &p.assignment, modal_k);
        for (b, &label) in p.assignment.iter().enumerate() {
            counts[b][map[label]] += 1;
        }
    }
    let total = partitions.len() as f64;
    let assignment_frequency: Vec<Vec<f64>> = counts
        .iter()
        .map(|row| row.iter().map(|&c| c as f64 / total).collect())
        .collect();
    let nominal_agreement = (0..n)
        .map(|b| assignment_frequency[b][nominal_partition.assignment[b]])
        .collect();

    Ok(RobustnessStudy {
        n_scenarios: config.n_scenarios,
        sigma_mw: config.sigma_mw,
        base_seed: config.base_seed,
        k_max: config.k_max,
        failures,
        selected_k_histogram: histogram,
        modal_k,
        gap: GapStatistics {
            mean,
            variance,
            count: gaps.len(),
        },
        bus_ids: network.bus_ids(),
        nominal_assignment: nominal_partition.assignment,
        assignment_frequency,
        nominal_agreement,
        scenarios: records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alignment_recovers_permutation() {
        let nominal = [0, 0, 1, 1, 2, 2];
        let scenario = [2, 2, 0, 0, 1, 1];
        let map = align_labels(&nominal, &scenario, 3);
        let mapped: Vec<usize> = scenario.iter().map(|&l| map[l]).collect();
        assert_eq!(mapped, nominal);
    }

    #[test]
    fn greedy_alignment_for_large_k() {
        let nominal: Vec<usize> = (0..9).flat_map(|c| [c, c]).collect();
        let scenario: Vec<usize> = nominal.iter().map(|&c| (c + 4) % 9).collect();
        let map = align_labels(&nominal, &scenario, 9);
        let mapped: Vec<usize> = scenario.iter().map(|&l| map[l]).collect();
        assert_eq!(mapped, nominal);
    }

    #[test]
    fn alignment_prefers_majority() {
        let nominal = [0, 0, 0, 1, 1];
        let scenario = [1, 1, 0, 0, 0];
        let map = align_labels(&nominal, &scenario, 2);
        assert_eq!(map, vec![1, 0]);
    }

    #[test]
    fn permutations_are_complete() {
        let mut seen = Vec::new();
        permute(&mut vec![0, 1, 2, 3], 0, &mut |p| seen.push(p.to_vec()));
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 24);
    }
}
