//! Flat `key = value` run configuration, CSV time series and snapshots, and
//! the JSON run manifest.
//!
//! Configuration keys and defaults:
//!
//! | key           | default        | range                                 |
//! |---------------|----------------|---------------------------------------|
//! | `n`           | 2              | >= 2                                  |
//! | `mode`        | `axisymmetric` | `axisymmetric` or `full2d` (n = 2)    |
//! | `nphi`        | 128            | >= 4                                  |
//! | `ntheta`      | 64             | even, >= 4 (full2d only)              |
//! | `dt_safety`   | 0.4            | (0, 1)                                |
//! | `t_max`       | 50             | > 0                                   |
//! | `grad_tol`    | 1e-10          | > 0                                   |
//! | `audit_every` | 200            | >= 1                                  |
//! | `init.name`   | `constant`     | `constant`, `zonal`, `bump`, `random_smooth` |
//! | `init.gamma0` | 0              | all initial conditions                |
//! | `init.amplitude` | 0.1         | zonal, bump, random_smooth            |
//! | `init.k`      | 1              | zonal                                 |
//! | `init.phi_c`, `init.theta_c` | 0 | bump                                |
//! | `init.width`  | 0.3            | bump                                  |
//! | `init.seed`   | 0              | random_smooth                         |
//! | `init.cutoff` | 4              | random_smooth                         |
//! | `out.dir`     | unset          | output directory for `run`            |
//!
//! Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::diagnostics::{CapFit, FlowAudit};
use crate::error::{Error, Result};
use crate::flow::{FlowConfig, InitialCondition, StopReason};
use crate::grid::{GridDescription, GridMode, HemisphereGrid, RadialField};
use crate::surface::PointwiseGeometry;

pub const TIMESERIES_HEADER: &str = "time,volume,area,minkowski1_residual,minkowski2_residual,max_grad_sq,\
curvature_spread,gamma_min,gamma_max,area_rate_mismatch,dissipation";

const SNAPSHOT_MAGIC: &str = "# capflow snapshot v1";

/// Shortest format that still round-trips every `f64` exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

const INIT_KEYS: [(&str, &[&str]); 4] = [
    ("constant", &["gamma0"]),
    ("zonal", &["gamma0", "amplitude", "k"]),
    ("bump", &["gamma0", "amplitude", "phi_c", "theta_c", "width"]),
    ("random_smooth", &["gamma0", "amplitude", "seed", "cutoff"]),
];

const TOP_KEYS: [&str; 10] = [
    "n",
    "mode",
    "nphi",
    "ntheta",
    "dt_safety",
    "t_max",
    "grad_tol",
    "audit_every",
    "init.name",
    "out.dir",
];

struct Entries(BTreeMap<String, String>);

impl Entries {
    fn take<T: FromStr>(&mut self, key: &str, default: T, expected: &str) -> Result<T> {
        match self.0.remove(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|_| Error::config(key, format!("expected {expected}, got {raw:?}"))),
        }
    }
}

pub fn parse_config(text: &str) -> Result<FlowConfig> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(format!("config line {}", lineno + 1), "expected `key = value`"))?;
        let key = key.trim().to_string();
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::config(key, "given more than once"));
        }
    }

    let init_name = map.get("init.name").cloned().unwrap_or_else(|| "constant".into());
    let params = INIT_KEYS
        .iter()
        .find(|(name, _)| *name == init_name)
        .map(|(_, p)| *p)
        .ok_or_else(|| {
            Error::config(
                "init.name",
                format!("expected one of constant, zonal, bump, random_smooth, got {init_name:?}"),
            )
        })?;
    for key in map.keys() {
        let known = TOP_KEYS.contains(&key.as_str()) || key.strip_prefix("init.").is_some_and(|p| params.contains(&p));
        if !known {
            return Err(Error::config(key, format!("unknown key (init.name = {init_name})")));
        }
    }

    let mut e = Entries(map);
    let n = e.take("n", 2usize, "an integer >= 2")?;
    let mode = e.take("mode", GridMode::Axisymmetric, "axisymmetric or full2d")?;
    let mut config = FlowConfig::new(
        n,
        mode,
        e.take("nphi", 128usize, "a positive integer")?,
        InitialCondition::Constant { gamma0: 0.0 },
    );
    config.ntheta = e.take("ntheta", config.ntheta, "an even integer >= 4")?;
    config.dt_safety = e.take("dt_safety", config.dt_safety, "a number in (0, 1)")?;
    config.t_max = e.take("t_max", config.t_max, "a positive number")?;
    config.grad_tol = e.take("grad_tol", config.grad_tol, "a positive number")?;
    config.audit_every = e.take("audit_every", config.audit_every, "a positive integer")?;
    config.out_dir = e.0.remove("out.dir").map(PathBuf::from);

    let gamma0 = e.take("init.gamma0", 0.0, "a number")?;
    let amplitude = e.take("init.amplitude", 0.1, "a number")?;
    config.initial_condition = match init_name.as_str() {
        "constant" => InitialCondition::Constant { gamma0 },
        "zonal" => InitialCondition::Zonal {
            gamma0,
            amplitude,
            k: e.take("init.k", 1, "a nonnegative integer")?,
        },
        "bump" => InitialCondition::Bump {
            gamma0,
            amplitude,
            phi_c: e.take("init.phi_c", 0.0, "a number")?,
            theta_c: e.take("init.theta_c", 0.0, "a number")?,
            width: e.take("init.width", 0.3, "a positive number")?,
        },
        _ => InitialCondition::RandomSmooth {
            gamma0,
            amplitude,
            seed: e.take("init.seed", 0, "a nonnegative integer")?,
            cutoff: e.take("init.cutoff", 4, "a nonnegative integer")?,
        },
    };

    for (key, value) in [("init.gamma0", gamma0), ("init.amplitude", amplitude)] {
        if !value.is_finite() {
            return Err(Error::config(key, "must be finite"));
        }
    }
    config.validate()?;
    HemisphereGrid::new(config.mode, config.n, config.nphi, config.ntheta).map_err(|err| match err {
        Error::InvalidGrid(msg) => Error::config(if msg.contains("ntheta") { "ntheta" } else { "nphi" }, msg),
        other => other,
    })?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<FlowConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

pub fn timeseries_to_string(audits: &[FlowAudit]) -> String {
    let mut out = String::from(TIMESERIES_HEADER);
    out.push('\n');
    for a in audits {
        let row = [
            a.time,
            a.volume,
            a.area,
            a.minkowski1_residual,
            a.minkowski2_residual,
            a.max_grad_sq,
            a.curvature_spread,
            a.gamma_min,
            a.gamma_max,
            a.area_rate_mismatch,
            a.dissipation,
        ];
        let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_timeseries(audits: &[FlowAudit], path: &Path) -> Result<()> {
    if audits.is_empty() {
        return Err(Error::DegenerateInput("no audits to write".into()));
    }
    write_file(path, &timeseries_to_string(audits))
}

pub fn parse_timeseries(text: &str) -> Result<Vec<FlowAudit>> {
    let mut lines = text.lines();
    if lines.next() != Some(TIMESERIES_HEADER) {
        return Err(Error::parse("time series", "unexpected header"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let v = parse_row(line, 11, &format!("time series row {}", i + 1))?;
            Ok(FlowAudit {
                time: v[0],
                volume: v[1],
                area: v[2],
                minkowski1_residual: v[3],
                minkowski2_residual: v[4],
                max_grad_sq: v[5],
                curvature_spread: v[6],
                gamma_min: v[7],
                gamma_max: v[8],
                area_rate_mismatch: v[9],
                dissipation: v[10],
            })
        })
        .collect()
}

fn parse_row(line: &str, width: usize, context: &str) -> Result<Vec<f64>> {
    let v = line
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::parse(context, e.to_string()))?;
    if v.len() != width {
        return Err(Error::parse(
            context,
            format!("expected {width} columns, got {}", v.len()),
        ));
    }
    Ok(v)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn snapshot_to_string(field: &RadialField, step: u64) -> Result<String> {
    let grid = field.grid();
    let d = grid.description();
    let mut out = String::new();
    let _ = writeln!(out, "{SNAPSHOT_MAGIC}");
    let _ = writeln!(out, "# mode = {}", d.mode.as_str());
    let _ = writeln!(out, "# n = {}", d.n);
    let _ = writeln!(out, "# nphi = {}", d.nphi);
    let _ = writeln!(out, "# ntheta = {}", d.ntheta);
    let _ = writeln!(out, "# dphi = {}", fmt_f64(d.dphi));
    let _ = writeln!(out, "# dtheta = {}", fmt_f64(d.dtheta));
    let _ = writeln!(out, "# time = {}", fmt_f64(field.time));
    let _ = writeln!(out, "# step = {step}");
    let full = d.mode == GridMode::Full2d;
    out.push_str(if full {
        "phi,theta,gamma,rho,height,H,support\n"
    } else {
        "phi,gamma,rho,height,H,support\n"
    });
    for (k, jet) in field.jets().iter().enumerate() {
        let g = PointwiseGeometry::from_jet(jet, d.n)?;
        let (phi, theta) = grid.coords(k);
        let mut cells = vec![fmt_f64(phi)];
        if full {
            cells.push(fmt_f64(theta));
        }
        for x in [jet.gamma, g.rho, g.height, g.mean_curvature, g.support] {
            cells.push(fmt_f64(x));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_snapshot(field: &RadialField, step: u64, path: &Path) -> Result<()> {
    write_file(path, &snapshot_to_string(field, step)?)
}

/// Rebuilds the field and step counter stored in a snapshot.
pub fn parse_snapshot(text: &str) -> Result<(RadialField, u64)> {
    let mut lines = text.lines();
    if lines.next() != Some(SNAPSHOT_MAGIC) {
        return Err(Error::parse("snapshot", "missing snapshot marker"));
    }
    let mut header = BTreeMap::new();
    let mut columns = None;
    for line in lines.by_ref() {
        match line.strip_prefix("# ") {
            Some(entry) => {
                let (k, v) = entry
                    .split_once(" = ")
                    .ok_or_else(|| Error::parse("snapshot header", format!("bad line {line:?}")))?;
                header.insert(k.to_string(), v.to_string());
            }
            None => {
                columns = Some(line);
                break;
            }
        }
    }
    let field_of = |key: &str| {
        header
            .get(key)
            .ok_or_else(|| Error::parse("snapshot header", format!("missing {key}")))
    };
    let num = |key: &str| -> Result<usize> {
        field_of(key)?
            .parse()
            .map_err(|_| Error::parse("snapshot header", format!("bad {key}")))
    };
    let mode: GridMode = field_of("mode")?.parse()?;
    let grid = Arc::new(HemisphereGrid::new(mode, num("n")?, num("nphi")?, num("ntheta")?)?);
    let time: f64 = field_of("time")?
        .parse()
        .map_err(|_| Error::parse("snapshot header", "bad time"))?;
    let step: u64 = field_of("step")?
        .parse()
        .map_err(|_| Error::parse("snapshot header", "bad step"))?;
    let width = if mode == GridMode::Full2d { 7 } else { 6 };
    if columns.map(|c| c.split(',').count()) != Some(width) {
        return Err(Error::parse("snapshot", "unexpected column header"));
    }
    let gamma_col = width - 5;
    let values = lines
        .enumerate()
        .map(|(i, l)| Ok(parse_row(l, width, &format!("snapshot row {}", i + 1))?[gamma_col]))
        .collect::<Result<Vec<f64>>>()?;
    Ok((RadialField::new(grid, values, time)?, step))
}

pub fn read_snapshot(path: &Path) -> Result<(RadialField, u64)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_snapshot(&text)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub config: FlowConfig,
    pub grid: GridDescription,
    pub started: String,
    pub finished: String,
    pub stopped_reason: StopReason,
    pub steps: u64,
    pub final_time: f64,
    pub cap_fit: Option<CapFit>,
    /// Every file written by the run, relative to the output directory.
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::parse("manifest", e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_json()?)
    }
}
