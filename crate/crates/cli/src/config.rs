//! Resolved run configuration and the INI reader for `simulate`.

use std::collections::BTreeMap;
use std::path::Path;

use kinetic_net::asymptotic::Case;
use kinetic_net::coupling::BoundaryKind;
use kinetic_net::hermite::MAX_HALF_NODES;
use kinetic_net::solver::{Bump, InitialData, Scheme};
use kinetic_net::{Collision, Error, Result};
use serde::{Deserialize, Serialize};

/// One bump of initial data, `amplitudes` on the equilibrium block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpConfig {
    pub center: f64,
    pub width: f64,
    pub amplitudes: Vec<f64>,
}

impl BumpConfig {
    /// Parses `center,width,a0,a1,..`.
    pub fn parse(s: &str) -> Result<Self> {
        let v = parse_list(s)?;
        if v.len() < 3 {
            return Err(Error::config(format!(
                "bump `{s}` needs center, width and at least one amplitude"
            )));
        }
        Ok(Self {
            center: v[0],
            width: v[1],
            amplitudes: v[2..].to_vec(),
        })
    }

    fn to_bump(&self) -> Bump {
        Bump {
            center: self.center,
            width: self.width,
            amplitudes: self.amplitudes.clone(),
        }
    }
}

pub fn initial_data(bumps: &[BumpConfig]) -> Option<InitialData> {
    if bumps.is_empty() {
        None
    } else {
        Some(InitialData {
            bumps: bumps.iter().map(BumpConfig::to_bump).collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryChoice {
    B1,
    B2,
    Network,
}

impl std::str::FromStr for BoundaryChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "b1" => Ok(Self::B1),
            "b2" => Ok(Self::B2),
            "network" => Ok(Self::Network),
            other => Err(Error::config(format!(
                "unknown boundary `{other}` (b1, b2 or network)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub n_half: usize,
    pub collision: String,
    pub boundary: BoundaryChoice,
    pub edges: usize,
    pub epsilon: f64,
    pub scheme: String,
    pub final_time: f64,
    pub cfl: f64,
    pub length: Option<f64>,
    pub cells: Option<usize>,
    pub cells_per_eps: usize,
    pub snapshots: Vec<f64>,
    /// Data for every edge unless overridden in `per_edge`.
    pub initial: Vec<BumpConfig>,
    pub per_edge: BTreeMap<usize, Vec<BumpConfig>>,
}

impl SimulateConfig {
    pub fn collision(&self) -> Result<Collision> {
        self.collision.parse()
    }

    pub fn scheme(&self) -> Result<Scheme> {
        self.scheme.parse()
    }

    pub fn boundary_kind(&self) -> Result<BoundaryKind> {
        match self.boundary {
            BoundaryChoice::B1 => Ok(BoundaryKind::B1),
            BoundaryChoice::B2 => BoundaryKind::b2(self.edges),
            BoundaryChoice::Network => Err(Error::config(
                "a full network has no single boundary matrix",
            )),
        }
    }

    pub fn edge_count(&self) -> usize {
        if self.boundary == BoundaryChoice::Network {
            self.edges
        } else {
            1
        }
    }

    pub fn edge_data(&self, edge: usize, block: usize) -> InitialData {
        let bumps = self.per_edge.get(&edge).unwrap_or(&self.initial);
        initial_data(bumps).unwrap_or_else(|| InitialData::default_for(block))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConfig {
    pub case: String,
    pub n_half: usize,
    pub edges: usize,
    pub epsilon: f64,
    pub order: Option<usize>,
    pub final_time: f64,
    pub outer_spacing: f64,
    pub z_max: f64,
    pub dz: f64,
    pub snapshots: Vec<f64>,
    pub initial: Vec<BumpConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub case: String,
    pub eps_list: Vec<f64>,
    pub n_half: usize,
    pub edges: usize,
    pub final_time: f64,
    pub cells_per_eps: usize,
    pub cfl: f64,
    pub scheme: String,
    pub order: Option<usize>,
    pub residual_times: usize,
    pub richardson: bool,
    /// Also run the full-network study for the case's collision operator.
    pub network: bool,
    pub plot: bool,
    pub initial: Vec<BumpConfig>,
}

/// Everything a run depends on; stored in the manifest and replayable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum RunConfig {
    Quadrature { n_half: usize },
    Check { n_half: usize, edges: Option<usize> },
    Simulate(SimulateConfig),
    Asymptotic(AsymptoticConfig),
    Converge(SweepConfig),
    Residual(SweepConfig),
}

impl RunConfig {
    pub fn name(&self) -> &'static str {
        match self {
            RunConfig::Quadrature { .. } => "quadrature",
            RunConfig::Check { .. } => "check",
            RunConfig::Simulate(_) => "simulate",
            RunConfig::Asymptotic(_) => "asymptotic",
            RunConfig::Converge(_) => "converge",
            RunConfig::Residual(_) => "residual",
        }
    }

    /// Cheap checks of every precondition that does not need a solve.
    pub fn validate(&self) -> Result<()> {
        match self {
            RunConfig::Quadrature { n_half } => check_n(*n_half),
            RunConfig::Check { n_half, edges } => {
                check_n(*n_half)?;
                if let Some(e) = edges {
                    BoundaryKind::b2(*e)?;
                }
                Ok(())
            }
            RunConfig::Simulate(s) => {
                check_n(s.n_half)?;
                let c = s.collision()?;
                s.scheme()?;
                if c == Collision::Q2 && s.n_half < 2 {
                    return Err(Error::config("the Q2 operator needs N ≥ 2"));
                }
                if s.boundary != BoundaryChoice::B1 {
                    BoundaryKind::b2(s.edges)?;
                }
                check_eps(s.epsilon)?;
                check_time(s.final_time, &s.snapshots)?;
                if !(s.cfl > 0.0 && s.cfl <= 1.0) {
                    return Err(Error::config(format!(
                        "cfl must be in (0, 1], got {}",
                        s.cfl
                    )));
                }
                if s.cells.is_none() && s.cells_per_eps == 0 {
                    return Err(Error::config("cells_per_eps must be positive"));
                }
                if let Some(l) = s.length {
                    if !(l > 0.0) {
                        return Err(Error::config("length must be positive"));
                    }
                }
                if let Some(&e) = s.per_edge.keys().find(|&&e| e >= s.edge_count()) {
                    return Err(Error::config(format!(
                        "initial data for edge {e}, but only {} edges",
                        s.edge_count()
                    )));
                }
                let block = c.block_size();
                for e in 0..s.edge_count() {
                    s.edge_data(e, block).validate(block)?;
                }
                Ok(())
            }
            RunConfig::Asymptotic(a) => {
                let case: Case = a.case.parse()?;
                check_n(a.n_half)?;
                check_eps(a.epsilon)?;
                check_time(a.final_time, &a.snapshots)?;
                case.resolve_order(a.order)?;
                if let Some(d) = initial_data(&a.initial) {
                    d.validate(case.collision().block_size())?;
                }
                Ok(())
            }
            RunConfig::Converge(s) | RunConfig::Residual(s) => {
                let case: Case = s.case.parse()?;
                check_n(s.n_half)?;
                s.scheme.parse::<Scheme>()?;
                case.resolve_order(s.order)?;
                if s.eps_list.len() < 3 {
                    return Err(Error::config("an ε sweep needs at least 3 values"));
                }
                for &e in &s.eps_list {
                    check_eps(e)?;
                }
                if let Some(d) = initial_data(&s.initial) {
                    d.validate(case.collision().block_size())?;
                }
                Ok(())
            }
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_HALF_NODES {
        return Err(Error::config(format!(
            "N must be in 1..={MAX_HALF_NODES}, got {n}"
        )));
    }
    Ok(())
}

fn check_eps(e: f64) -> Result<()> {
    if !(e > 0.0 && e < 1.0) {
        return Err(Error::config(format!("ε must lie in (0, 1), got {e}")));
    }
    Ok(())
}

fn check_time(t: f64, snaps: &[f64]) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::config(format!(
            "final time must be positive, got {t}"
        )));
    }
    if let Some(s) = snaps.iter().find(|&&s| !(0.0..=t).contains(&s)) {
        return Err(Error::config(format!("snapshot time {s} outside [0, {t}]")));
    }
    Ok(())
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::config(format!("`{t}` is not a number")))
        })
        .collect()
}

const SYSTEM_KEYS: &[&str] = &["N", "collision", "boundary", "edges", "epsilon", "scheme"];
const GRID_KEYS: &[&str] = &[
    "final_time",
    "cfl",
    "length",
    "cells",
    "cells_per_eps",
    "snapshots",
];

/// Reads a `simulate` config. Sections `[system]`, `[grid]`, `[initial]`;
/// unknown sections or keys are errors.
pub fn load_simulate(path: &Path) -> Result<SimulateConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    parse_simulate(&text)
}

pub fn parse_simulate(text: &str) -> Result<SimulateConfig> {
    let ini =
        ini::Ini::load_from_str(text).map_err(|e| Error::config(format!("config syntax: {e}")))?;
    let mut sys = BTreeMap::new();
    let mut grid = BTreeMap::new();
    let mut init = BTreeMap::new();
    for (section, props) in ini.iter() {
        let (target, allowed): (&mut BTreeMap<String, String>, Option<&[&str]>) = match section {
            Some("system") => (&mut sys, Some(SYSTEM_KEYS)),
            Some("grid") => (&mut grid, Some(GRID_KEYS)),
            Some("initial") => (&mut init, None),
            None if props.is_empty() => continue,
            None => return Err(Error::config("keys outside a section")),
            Some(other) => return Err(Error::config(format!("unknown section [{other}]"))),
        };
        for (k, v) in props.iter() {
            let known = match allowed {
                Some(list) => list.contains(&k),
                None => initial_key(k).is_some(),
            };
            if !known {
                return Err(Error::config(format!(
                    "unknown key `{k}` in [{}]",
                    section.unwrap_or("")
                )));
            }
            if target.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::config(format!("duplicate key `{k}`")));
            }
        }
    }

    let n_half = need(&sys, "N", "system")?;
    let epsilon = need(&sys, "epsilon", "system")?;
    let final_time = opt(&grid, "final_time")?.unwrap_or(1.0);
    let snapshots = match grid.get("snapshots") {
        Some(s) => parse_list(s)?,
        None => vec![0.0, final_time],
    };

    let mut initial = BumpParts::default();
    let mut per_edge: BTreeMap<usize, BumpParts> = BTreeMap::new();
    for (k, v) in &init {
        let (field, edge) = initial_key(k).expect("checked above");
        let parts = match edge {
            Some(e) => per_edge.entry(e).or_default(),
            None => &mut initial,
        };
        match field {
            "center" => parts.center = Some(parse_num(k, v)?),
            "width" => parts.width = Some(parse_num(k, v)?),
            _ => parts.amplitudes = Some(parse_list(v)?),
        }
    }

    Ok(SimulateConfig {
        n_half,
        collision: sys.get("collision").cloned().unwrap_or_else(|| "q1".into()),
        boundary: sys
            .get("boundary")
            .map_or(Ok(BoundaryChoice::B1), |s| s.parse())?,
        edges: opt(&sys, "edges")?.unwrap_or(3),
        epsilon,
        scheme: sys
            .get("scheme")
            .cloned()
            .unwrap_or_else(|| "upwind".into()),
        final_time,
        cfl: opt(&grid, "cfl")?.unwrap_or(0.9),
        length: opt(&grid, "length")?,
        cells: opt(&grid, "cells")?,
        cells_per_eps: opt(&grid, "cells_per_eps")?.unwrap_or(16),
        snapshots,
        initial: initial.finish("[initial]")?,
        per_edge: per_edge
            .into_iter()
            .map(|(e, p)| Ok((e, p.finish(&format!("edge {e}"))?)))
            .collect::<Result<_>>()?,
    })
}

#[derive(Default)]
struct BumpParts {
    center: Option<f64>,
    width: Option<f64>,
    amplitudes: Option<Vec<f64>>,
}

impl BumpParts {
    fn finish(self, what: &str) -> Result<Vec<BumpConfig>> {
        match (self.center, self.width, self.amplitudes) {
            (None, None, None) => Ok(Vec::new()),
            (Some(center), Some(width), Some(amplitudes)) => Ok(vec![BumpConfig {
                center,
                width,
                amplitudes,
            }]),
            _ => Err(Error::config(format!(
                "{what}: center, width and amplitudes must be given together"
            ))),
        }
    }
}

/// `center`, `width`, `amplitudes`, optionally suffixed `.i` for edge `i`.
fn initial_key(k: &str) -> Option<(&'static str, Option<usize>)> {
    let (base, edge) = match k.split_once('.') {
        Some((b, e)) => (b, Some(e.parse::<usize>().ok()?)),
        None => (k, None),
    };
    let field = ["center", "width", "amplitudes"]
        .into_iter()
        .find(|f| *f == base)?;
    Some((field, edge))
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::config(format!("bad value `{v}` for `{key}`")))
}

fn opt<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    map.get(key).map(|v| parse_num(key, v)).transpose()
}

fn need<T: std::str::FromStr>(
    map: &BTreeMap<String, String>,
    key: &str,
    section: &str,
) -> Result<T> {
    opt(map, key)?.ok_or_else(|| Error::config(format!("missing `{key}` in [{section}]")))
}
