use anyhow::Result;
use serde::Serialize;

use gencluster::cluster::{
    brute_force_partition, cluster_with_eigen, default_k_max, relative_spectral_gaps, select_k, write_gaps_csv,
    ClusterOptions, ClusterOutcome, PartitionReport,
};
use gencluster::dyngraph::{build_dynamic_graph, DynamicGraph};
use gencluster::geig::{generalized_eig, EigenSolution};
use gencluster::io::fmt_f64;
use gencluster::powerflow::omega_sync;
use gencluster::robust::{scenario_study, StudyConfig};
use gencluster::sim::{
    coherence_matrix, simulate, CoherenceConfig, CoherenceMatrix, Disturbance, DisturbanceKind, SimConfig,
};
use gencluster::Error;

use crate::args::{
    ClusterArgs, CoherenceArgs, DisturbanceArgs, DisturbanceShape, EigsArgs, KChoice, OracleArgs, RobustnessArgs,
    SimulateArgs,
};
use crate::input::{load, Loaded};
use crate::output::Outputs;

struct Spectrum {
    graph: DynamicGraph,
    eigen: EigenSolution,
}

fn spectrum(loaded: &Loaded) -> Result<Spectrum> {
    let graph = build_dynamic_graph(&loaded.network, &loaded.op);
    let eigen = generalized_eig(graph.laplacian().matrix(), &graph.node_weights)?;
    Ok(Spectrum { graph, eigen })
}

struct Clustered {
    outcome: ClusterOutcome,
    gaps: Vec<(usize, f64)>,
    auto_k: bool,
}

fn cluster_spectrum(s: Spectrum, choice: &KChoice, seed: u64) -> Result<Clustered> {
    let n = s.eigen.n();
    let k_max = choice.kmax.unwrap_or_else(|| default_k_max(n));
    let (k, gaps, auto_k) = match choice.k {
        Some(k) => {
            let gaps = relative_spectral_gaps(&s.eigen.eigenvalues, k_max).unwrap_or_else(|e| {
                log::warn!("relative spectral gaps unavailable: {e}");
                Vec::new()
            });
            (k, gaps, false)
        }
        None => {
            let gaps = relative_spectral_gaps(&s.eigen.eigenvalues, k_max)?;
            let k =
                select_k(&gaps).ok_or_else(|| Error::InvalidArgument(format!("no k to select with kmax = {k_max}")))?;
            log::info!("selected k = {k}");
            (k, gaps, true)
        }
    };
    let options = ClusterOptions {
        seed,
        ..Default::default()
    };
    let outcome = cluster_with_eigen(&s.graph, s.eigen, k, &options)?;
    if !outcome.quality.all_connected() {
        log::warn!("some clusters are not connected in the dynamic graph");
    }
    Ok(Clustered { outcome, gaps, auto_k })
}

pub fn cluster(args: &ClusterArgs) -> Result<Vec<std::path::PathBuf>> {
    let loaded = load(&args.common)?;
    let mut out = Outputs::new(&args.common)?;
    let s = spectrum(&loaded)?;
    let bus_ids = loaded.network.bus_ids();
    out.table("eigenvalues", |w| s.eigen.write_spectrum_csv(w))?;
    out.table("graph_edges", |w| s.graph.write_edges_csv(&bus_ids, w))?;
    out.table("graph_nodes", |w| s.graph.write_nodes_csv(&bus_ids, w))?;
    let c = cluster_spectrum(s, &args.k, args.common.seed)?;
    out.table("gaps", |w| write_gaps_csv(&c.gaps, w))?;
    out.table("embedding", |w| c.outcome.embedding.write_csv(&bus_ids, w))?;
    out.json(
        "partition.json",
        &PartitionReport::new(bus_ids, &c.outcome, c.auto_k, &c.gaps),
    )?;
    Ok(out.written().to_vec())
}

fn disturbance_kind(d: &DisturbanceArgs) -> DisturbanceKind {
    match d.disturbance {
        DisturbanceShape::Step => DisturbanceKind::Step,
        DisturbanceShape::Random => DisturbanceKind::RandomPiecewise { hold: d.dt_hold },
    }
}

#[derive(Serialize)]
struct SimulationSummary {
    disturbed_bus: usize,
    omega_sync: f64,
    peak_frequency_deviation: f64,
    final_frequency_deviation: f64,
    resynchronized: bool,
}

pub fn simulate_cmd(args: &SimulateArgs) -> Result<Vec<std::path::PathBuf>> {
    let loaded = load(&args.common)?;
    let net = &loaded.network;
    let bus = match args.bus {
        Some(id) => {
            net.index_of(id)
                .ok_or_else(|| Error::InvalidArgument(format!("bus {id} does not exist")))?;
            id
        }
        None => *net.bus_ids().iter().min().expect("network has buses"),
    };
    let d = &args.disturbance;
    let disturbance = Disturbance {
        bus,
        start_time: d.onset,
        duration: d.duration,
        amplitude: d.amplitude,
        seed: args.common.seed,
        kind: disturbance_kind(d),
    };
    let traj = simulate(
        net,
        &loaded.op,
        &[disturbance],
        &SimConfig {
            t_end: d.t_end,
            dt: d.dt,
        },
    )?;
    let ws = omega_sync(net);
    let dev = |row: usize| {
        traj.frequencies
            .row(row)
            .iter()
            .fold(0.0f64, |a, f| a.max((f - ws).abs()))
    };
    let peak = (0..traj.times.len()).map(dev).fold(0.0, f64::max);
    let last = dev(traj.times.len() - 1);

    let mut out = Outputs::new(&args.common)?;
    out.table("trajectory", |w| traj.write_csv(w))?;
    out.json(
        "simulation.json",
        &SimulationSummary {
            disturbed_bus: bus,
            omega_sync: ws,
            peak_frequency_deviation: peak,
            final_frequency_deviation: last,
            resynchronized: last < peak / 10.0,
        },
    )?;
    Ok(out.written().to_vec())
}

#[derive(Serialize)]
struct CoherenceSidecar {
    k: usize,
    mean_intra_cluster: f64,
    mean_inter_cluster: f64,
    rows: Vec<gencluster::sim::CoherenceRow>,
}

pub fn coherence_cmd(args: &CoherenceArgs) -> Result<Vec<std::path::PathBuf>> {
    let loaded = load(&args.common)?;
    let c = cluster_spectrum(spectrum(&loaded)?, &args.k, args.common.seed)?;
    let d = &args.disturbance;
    let config = CoherenceConfig {
        sim: SimConfig {
            t_end: d.t_end,
            dt: d.dt,
        },
        onset: d.onset,
        duration: d.duration,
        amplitude: d.amplitude,
        kind: disturbance_kind(d),
        base_seed: args.common.seed,
    };
    let m: CoherenceMatrix = coherence_matrix(&loaded.network, &loaded.op, &c.outcome.partition, &config)?;
    let (intra, inter) = m.block_means();
    log::info!("mean coherence: intra-cluster {intra:.4}, inter-cluster {inter:.4}");

    let mut out = Outputs::new(&args.common)?;
    out.table("coherence", |w| m.write_csv(w))?;
    out.json(
        "coherence_clusters.json",
        &CoherenceSidecar {
            k: c.outcome.partition.k,
            mean_intra_cluster: intra,
            mean_inter_cluster: inter,
            rows: m.sidecar(),
        },
    )?;
    Ok(out.written().to_vec())
}

pub fn oracle(args: &OracleArgs) -> Result<Vec<std::path::PathBuf>> {
    let loaded = load(&args.common)?;
    let s = spectrum(&loaded)?;
    let l = s.graph.laplacian();
    let n = s.eigen.n();
    if args.kmax < 2 || args.kmax > n {
        return Err(Error::InvalidArgument(format!("kmax must be in 2..={n}")).into());
    }
    let options = ClusterOptions {
        seed: args.common.seed,
        ..Default::default()
    };
    let mut rows = Vec::new();
    for k in 2..=args.kmax {
        let (_, rho_star) = brute_force_partition(l.matrix(), &s.graph.node_weights, k)?;
        let spectral = cluster_with_eigen(&s.graph, s.eigen.clone(), k, &options)?;
        rows.push((k, s.eigen.eigenvalues[k - 1], rho_star, spectral.quality.rho_hat));
    }
    let mut out = Outputs::new(&args.common)?;
    out.table("rho_comparison", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["k", "lambda_k", "rho_star", "rho_hat"])?;
        for &(k, lambda, star, hat) in &rows {
            w.write_record([k.to_string(), fmt_f64(lambda), fmt_f64(star), fmt_f64(hat)])?;
        }
        w.flush()?;
        Ok(())
    })?;
    Ok(out.written().to_vec())
}

pub fn robustness(args: &RobustnessArgs) -> Result<Vec<std::path::PathBuf>> {
    let loaded = load(&args.common)?;
    let k_max = args.kmax.unwrap_or_else(|| default_k_max(loaded.network.n()));
    let config = StudyConfig::new(args.scenarios, args.sigma_mw, args.common.seed, k_max);
    let study = scenario_study(&loaded.network, &config)?;
    log::info!(
        "modal k = {} over {} successful scenarios ({} failed)",
        study.modal_k,
        study.successes(),
        study.failures
    );
    let mut out = Outputs::new(&args.common)?;
    out.json("study.json", &study)?;
    out.table("scenarios", |w| study.write_scenarios_csv(w))?;
    Ok(out.written().to_vec())
}

pub fn eigs(args: &EigsArgs) -> Result<Vec<std::path::PathBuf>> {
    let loaded = load(&args.common)?;
    let s = spectrum(&loaded)?;
    let mut out = Outputs::new(&args.common)?;
    out.table("spectrum", |w| s.eigen.write_spectrum_csv(w))?;
    Ok(out.written().to_vec())
}
