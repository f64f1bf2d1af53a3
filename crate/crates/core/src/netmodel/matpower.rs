//! Reader for the subset of the MATPOWER case format needed by the lossless
//! model: `mpc.baseMVA`, `mpc.bus`, `mpc.gen` and `mpc.branch`.
//!
//! Resistance, line charging and bus shunts are dropped; every dropped
//! quantity is reported in [`ParsedCase::warnings`].

use std::collections::HashMap;

use super::{merge_parallel_branches, validate_network, Branch, Bus, BusKind, Network};
use crate::error::{Error, Result};

// Column positions (0-based) in the MATPOWER layout.
const BUS_I: usize = 0;
const PD: usize = 2;
const GS: usize = 4;
const BS: usize = 5;
const VM: usize = 7;
const VA: usize = 8;
const GEN_BUS: usize = 0;
const PG: usize = 1;
const GEN_STATUS: usize = 7;
const F_BUS: usize = 0;
const T_BUS: usize = 1;
const BR_R: usize = 2;
const BR_X: usize = 3;
const BR_B: usize = 4;
const TAP: usize = 8;
const BR_STATUS: usize = 10;

const DEFAULT_DAMPING: f64 = 1.0;

/// Result of reading a case file.
#[derive(Debug, Clone)]
pub struct ParsedCase {
    pub network: Network,
    /// Modelling simplifications applied while reading, one line each.
    pub warnings: Vec<String>,
}

#[derive(Debug, Default)]
struct Table {
    start_line: usize,
    rows: Vec<(usize, Vec<f64>)>,
}

/// Parse MATPOWER case text into a lossless [`Network`].
///
/// Injections are `(sum PG - PD) / baseMVA`. Buses hosting an in-service
/// generator become [`BusKind::SynchronousGenerator`]; all others are loads.
/// Dynamic parameters are placeholders (inertia 0, damping 1) until
/// [`super::sample_dynamic_parameters`] is applied.
pub fn parse_matpower_case(text: &str) -> Result<ParsedCase> {
    let (base_mva, tables, last_line) = scan(text)?;
    let missing = |name: &str| Error::Parse {
        line: last_line,
        message: format!("missing mpc.{name} table"),
    };
    let bus_table = tables.get("bus").ok_or_else(|| missing("bus"))?;
    let gen_table = tables.get("gen").ok_or_else(|| missing("gen"))?;
    let branch_table = tables.get("branch").ok_or_else(|| missing("branch"))?;
    let base_mva = base_mva.unwrap_or(100.0);

    let mut warnings = Vec::new();
    let mut buses = Vec::with_capacity(bus_table.rows.len());
    let mut index = HashMap::new();
    require_columns(bus_table, "bus", PD + 1)?;
    for (line, row) in &bus_table.rows {
        let id = integer(row[BUS_I], *line, "BUS_I")?;
        let gs = row.get(GS).copied().unwrap_or(0.0);
        let bs = row.get(BS).copied().unwrap_or(0.0);
        if gs != 0.0 {
            warnings.push(format!(
                "bus {id}: shunt conductance GS = {gs} ignored (lossless model)"
            ));
        }
        if bs != 0.0 {
            warnings.push(format!("bus {id}: shunt susceptance BS = {bs} ignored"));
        }
        let v_mag = row.get(VM).copied().unwrap_or(1.0);
        let v_ang = row.get(VA).map(|deg| deg.to_radians());
        if index.insert(id, buses.len()).is_some() {
            return Err(Error::Parse {
                line: *line,
                message: format!("duplicate bus id {id}"),
            });
        }
        buses.push(Bus {
            id,
            kind: BusKind::Load,
            v_mag,
            v_ang,
            p_inject: -row[PD] / base_mva,
            inertia: 0.0,
            damping: DEFAULT_DAMPING,
        });
    }

    require_columns(gen_table, "gen", PG + 1)?;
    for (line, row) in &gen_table.rows {
        let bus_id = integer(row[GEN_BUS], *line, "GEN_BUS")?;
        if row.get(GEN_STATUS).is_some_and(|&s| s <= 0.0) {
            warnings.push(format!(
                "generator at bus {bus_id} (line {line}) out of service; dropped"
            ));
            continue;
        }
        let Some(&pos) = index.get(&bus_id) else {
            return Err(Error::Parse {
                line: *line,
                message: format!("generator references unknown bus {bus_id}"),
            });
        };
        buses[pos].kind = BusKind::SynchronousGenerator;
        buses[pos].p_inject += row[PG] / base_mva;
    }

    require_columns(branch_table, "branch", BR_X + 1)?;
    let mut branches = Vec::with_capacity(branch_table.rows.len());
    let mut bad_reactance = Vec::new();
    for (k, (line, row)) in branch_table.rows.iter().enumerate() {
        let id = k + 1;
        let from_bus = integer(row[F_BUS], *line, "F_BUS")?;
        let to_bus = integer(row[T_BUS], *line, "T_BUS")?;
        if row.get(BR_STATUS).is_some_and(|&s| s <= 0.0) {
            warnings.push(format!("branch {id} ({from_bus}-{to_bus}) out of service; dropped"));
            continue;
        }
        let (r, x) = (row[BR_R], row[BR_X]);
        if r != 0.0 {
            warnings.push(format!(
                "branch {id} ({from_bus}-{to_bus}): resistance r = {r} ignored (lossless model)"
            ));
        }
        if let Some(&b) = row.get(BR_B) {
            if b != 0.0 {
                warnings.push(format!(
                    "branch {id} ({from_bus}-{to_bus}): line charging b = {b} ignored"
                ));
            }
        }
        if let Some(&tap) = row.get(TAP) {
            if tap != 0.0 && tap != 1.0 {
                warnings.push(format!(
                    "branch {id} ({from_bus}-{to_bus}): tap ratio {tap} treated as 1"
                ));
            }
        }
        if !(x > 0.0 && x.is_finite()) {
            bad_reactance.push(format!("branch {id}: reactance must be > 0 (line {line}, x = {x})"));
        }
        branches.push(Branch {
            id,
            from_bus,
            to_bus,
            reactance: x,
        });
    }
    if !bad_reactance.is_empty() {
        return Err(Error::Validation(bad_reactance));
    }

    let before = branches.len();
    let branches = merge_parallel_branches(branches);
    if branches.len() < before {
        warnings.push(format!("{} parallel branch(es) merged", before - branches.len()));
    }

    let network = Network {
        base_mva,
        buses,
        branches,
    };
    let violations = validate_network(&network);
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    Ok(ParsedCase { network, warnings })
}

fn scan(text: &str) -> Result<(Option<f64>, HashMap<String, Table>, usize)> {
    let mut base_mva = None;
    let mut tables: HashMap<String, Table> = HashMap::new();
    let mut current: Option<(String, Table)> = None;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.split('%').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }

        let body = match current.as_mut() {
            Some(_) => line,
            None => {
                let Some(rest) = line.strip_prefix("mpc.") else {
                    continue;
                };
                let Some((name, value)) = rest.split_once('=') else {
                    continue;
                };
                let name = name.trim();
                let value = value.trim();
                if let Some(after) = value.strip_prefix('[') {
                    current = Some((
                        name.to_string(),
                        Table {
                            start_line: line_no,
                            rows: Vec::new(),
                        },
                    ));
                    after
                } else {
                    if name == "baseMVA" {
                        let v = value.trim_end_matches(';').trim();
                        base_mva = Some(v.parse::<f64>().map_err(|_| Error::Parse {
                            line: line_no,
                            message: format!("invalid baseMVA value '{v}'"),
                        })?);
                    }
                    continue;
                }
            }
        };

        let (content, closes) = match body.split_once(']') {
            Some((before, _)) => (before, true),
            None => (body, false),
        };
        if let Some((_, table)) = current.as_mut() {
            for segment in content.split(';') {
                let tokens: Vec<&str> = segment
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                    .collect();
                if tokens.is_empty() {
                    continue;
                }
                let row = tokens
                    .iter()
                    .map(|t| {
                        t.parse::<f64>().map_err(|_| Error::Parse {
                            line: line_no,
                            message: format!("invalid number '{t}'"),
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                table.rows.push((line_no, row));
            }
        }
        if closes {
            let (name, table) = current.take().expect("inside a table");
            tables.insert(name, table);
        }
    }
    if let Some((name, table)) = current {
        return Err(Error::Parse {
            line: table.start_line,
            message: format!("unterminated mpc.{name} table"),
        });
    }
    Ok((base_mva, tables, last_line))
}

fn require_columns(table: &Table, name: &str, min: usize) -> Result<()> {
    let Some((_, first)) = table.rows.first() else {
        return Err(Error::Parse {
            line: table.start_line,
            message: format!("mpc.{name} table is empty"),
        });
    };
    let width = first.len();
    for (line, row) in &table.rows {
        if row.len() != width {
            return Err(Error::Parse {
                line: *line,
                message: format!("mpc.{name} row has {} columns, expected {width}", row.len()),
            });
        }
    }
    if width < min {
        return Err(Error::Parse {
            line: table.start_line,
            message: format!("mpc.{name} needs at least {min} columns, found {width}"),
        });
    }
    Ok(())
}

fn integer(value: f64, line: usize, column: &str) -> Result<usize> {
    if value >= 1.0 && value.fract() == 0.0 && value < usize::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(Error::Parse {
            line,
            message: format!("{column} must be a positive integer (got {value})"),
        })
    }
}
