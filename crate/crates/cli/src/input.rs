use std::fs;
use std::path::Path;

use gencluster::netmodel::{parse_matpower_case, parse_network_json, sample_dynamic_parameters, DynamicRanges};
use gencluster::powerflow::{balance_and_solve, power_flow_residual, PowerFlowOptions};
use gencluster::{Error, Network, OperatingPoint};

use crate::args::{Common, Format};

/// Residual above which stored angles are reported as inconsistent.
const STORED_RESIDUAL_WARNING: f64 = 1e-6;

pub struct Loaded {
    pub network: Network,
    pub op: OperatingPoint,
}

fn infer_format(path: &Path) -> Result<Format, Error> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("m") => Ok(Format::Matpower),
        Some("json") => Ok(Format::Json),
        _ => Err(Error::InvalidArgument(format!(
            "cannot infer the format of {}; pass --format",
            path.display()
        ))),
    }
}

pub fn ranges(common: &Common) -> DynamicRanges {
    let mut r = DynamicRanges::default();
    if let Some(x) = common.inertia {
        r.gen_inertia = (x.0, x.1);
    }
    if let Some(x) = common.damping_gen {
        r.gen_damping = (x.0, x.1);
    }
    if let Some(x) = common.damping_load {
        r.load_damping = (x.0, x.1);
    }
    r
}

/// Read the network and settle on an operating point.
///
/// MATPOWER cases always get sampled dynamic parameters. JSON networks keep
/// theirs unless `--resample` or a range flag is given. JSON angles are used
/// when every bus has one. Otherwise, and always for MATPOWER cases,
/// generation is rebalanced and the angle equations are solved.
pub fn load(common: &Common) -> Result<Loaded, Error> {
    let path = &common.case;
    let format = match common.format {
        Some(f) => f,
        None => infer_format(path)?,
    };
    let text =
        fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    let resample_requested =
        common.resample || common.inertia.is_some() || common.damping_gen.is_some() || common.damping_load.is_some();

    let network = match format {
        Format::Matpower => {
            let parsed = parse_matpower_case(&text)?;
            if !parsed.warnings.is_empty() {
                log::info!(
                    "{} parser warnings; first: {}",
                    parsed.warnings.len(),
                    parsed.warnings[0]
                );
            }
            for w in &parsed.warnings {
                log::debug!("{w}");
            }
            sample_dynamic_parameters(&parsed.network, common.seed, &ranges(common))?
        }
        Format::Json => {
            let net = parse_network_json(&text)?;
            if resample_requested {
                sample_dynamic_parameters(&net, common.seed, &ranges(common))?
            } else {
                net
            }
        }
    };

    if format == Format::Json && network.buses.iter().all(|b| b.v_ang.is_some()) {
        let op = network.stored_operating_point().expect("network has buses");
        let residual = power_flow_residual(&network, &op)
            .iter()
            .fold(0.0f64, |a, r| a.max(r.abs()));
        if residual > STORED_RESIDUAL_WARNING {
            log::warn!("stored angles leave a power-flow residual of {residual:e} p.u.");
        }
        return Ok(Loaded { network, op });
    }
    let (solved, report) = balance_and_solve(&network, &PowerFlowOptions::default())?;
    log::info!(
        "power flow converged in {} iterations; max line angle {:.4} rad",
        report.iterations,
        report.max_line_angle
    );
    if !report.secure {
        log::warn!("operating point lies outside the security region");
    }
    Ok(Loaded {
        network: solved,
        op: report.operating_point,
    })
}
