//! Run configuration: a flat key=value file merged with command-line
//! overrides, then validated. Every error names the offending line or flag.

use std::fmt;
use std::path::{Path, PathBuf};

use escat_core::geometry::Surface;
use nalgebra::Vector3;

use crate::Cli;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Solve,
    PointsourceTest,
    PlanewaveSelfconvergence,
    ConvergenceTable,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Incidence {
    PointSource,
    PlaneElastic,
    PlaneP,
    PlaneS,
}

impl Incidence {
    pub fn is_plane(self) -> bool {
        self != Incidence::PointSource
    }
}

/// Fully resolved run description. Invariants: every order >= 1, omega > 0,
/// mu > 0, lambda + mu > 0, nprime (when set) >= max order + 1.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub geometry: String,
    pub omega: f64,
    pub lambda: f64,
    pub mu: f64,
    /// Ansatz orders to run; exactly one in `solve` mode, a table row each
    /// otherwise.
    pub orders: Vec<usize>,
    /// Inner quadrature order; per-run default is 2n + 1.
    pub nprime: Option<usize>,
    pub mode: Mode,
    pub incidence: Incidence,
    pub direction: Vector3<f64>,
    pub polarization: Vector3<f64>,
    /// Scales the incident field; 0 is allowed and yields the zero solution.
    pub amplitude: f64,
    pub source: Vector3<f64>,
    pub obs_grid: (usize, usize),
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub reference_n: Option<usize>,
    pub cache_dir: PathBuf,
    pub coeffs_out: Option<PathBuf>,
}

/// Where a value came from, for diagnostics.
#[derive(Clone, Debug)]
enum At {
    File { path: String, line: usize },
    Flag(&'static str),
    Missing,
}

impl fmt::Display for At {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            At::File { path, line } => write!(f, "{path} line {line}"),
            At::Flag(name) => write!(f, "--{name}"),
            At::Missing => write!(f, "config"),
        }
    }
}

#[derive(Debug)]
pub struct ConfigError {
    at: String,
    msg: String,
}

impl ConfigError {
    fn new(at: &At, msg: impl Into<String>) -> Self {
        Self {
            at: at.to_string(),
            msg: msg.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.at, self.msg)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

/// One optional value plus its provenance; flags overwrite file entries,
/// duplicate file entries are refused.
#[derive(Default)]
struct Slot {
    value: Option<(String, At)>,
}

impl Slot {
    fn set_from_file(&mut self, value: &str, at: At) -> Result<()> {
        if let Some((_, At::File { line, .. })) = &self.value {
            return Err(ConfigError::new(
                &at,
                format!("duplicate key (first set on line {line})"),
            ));
        }
        self.value = Some((value.to_string(), at));
        Ok(())
    }

    fn set_from_flag(&mut self, value: Option<&str>, name: &'static str) {
        if let Some(v) = value {
            self.value = Some((v.to_string(), At::Flag(name)));
        }
    }

    fn parse<T>(&self, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match &self.value {
            None => Ok(None),
            Some((raw, at)) => parse(raw).map(Some).map_err(|msg| ConfigError::new(at, msg)),
        }
    }
}

#[derive(Default)]
struct Builder {
    geometry: Slot,
    omega: Slot,
    lambda: Slot,
    mu: Slot,
    n: Slot,
    nprime: Slot,
    mode: Slot,
    incidence: Slot,
    direction: Slot,
    polarization: Slot,
    amplitude: Slot,
    source: Slot,
    obs_grid: Slot,
    out: Slot,
    threads: Slot,
    reference_n: Slot,
    cache_dir: Slot,
    coeffs_out: Slot,
}

impl Builder {
    fn slot(&mut self, key: &str) -> Option<&mut Slot> {
        match key {
            "geometry" => Some(&mut self.geometry),
            "omega" => Some(&mut self.omega),
            "lambda" => Some(&mut self.lambda),
            "mu" => Some(&mut self.mu),
            "n" => Some(&mut self.n),
            "nprime" => Some(&mut self.nprime),
            "mode" => Some(&mut self.mode),
            "incidence" => Some(&mut self.incidence),
            "direction" => Some(&mut self.direction),
            "polarization" => Some(&mut self.polarization),
            "amplitude" => Some(&mut self.amplitude),
            "source" => Some(&mut self.source),
            "obs_grid" => Some(&mut self.obs_grid),
            "out" => Some(&mut self.out),
            "threads" => Some(&mut self.threads),
            "reference_n" => Some(&mut self.reference_n),
            "cache_dir" => Some(&mut self.cache_dir),
            "coeffs_out" => Some(&mut self.coeffs_out),
            _ => None,
        }
    }

    fn read_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            at: path.display().to_string(),
            msg: format!("cannot read config file: {e}"),
        })?;
        for (idx, raw_line) in text.lines().enumerate() {
            let at = At::File {
                path: path.display().to_string(),
                line: idx + 1,
            };
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::new(&at, "expected key = value"));
            };
            let key = key.trim().to_ascii_lowercase().replace('-', "_");
            let value = value.trim();
            if value.is_empty() {
                return Err(ConfigError::new(&at, format!("key '{key}' has an empty value")));
            }
            match self.slot(&key) {
                Some(slot) => slot.set_from_file(value, at)?,
                None => {
                    return Err(ConfigError::new(&at, format!("unknown key '{key}'")));
                }
            }
        }
        Ok(())
    }

    fn apply_flags(&mut self, cli: &Cli) {
        self.geometry.set_from_flag(cli.geometry.as_deref(), "geometry");
        self.omega.set_from_flag(cli.omega.as_deref(), "omega");
        self.lambda.set_from_flag(cli.lambda.as_deref(), "lambda");
        self.mu.set_from_flag(cli.mu.as_deref(), "mu");
        self.n.set_from_flag(cli.n.as_deref(), "n");
        self.nprime.set_from_flag(cli.nprime.as_deref(), "nprime");
        self.mode.set_from_flag(cli.mode.as_deref(), "mode");
        self.incidence.set_from_flag(cli.incidence.as_deref(), "incidence");
        self.direction.set_from_flag(cli.direction.as_deref(), "direction");
        self.polarization
            .set_from_flag(cli.polarization.as_deref(), "polarization");
        self.amplitude.set_from_flag(cli.amplitude.as_deref(), "amplitude");
        self.source.set_from_flag(cli.source.as_deref(), "source");
        self.obs_grid.set_from_flag(cli.obs_grid.as_deref(), "obs-grid");
        self.out.set_from_flag(cli.out.as_deref(), "out");
        self.threads.set_from_flag(cli.threads.as_deref(), "threads");
        self.reference_n
            .set_from_flag(cli.reference_n.as_deref(), "reference-n");
        self.cache_dir.set_from_flag(cli.cache_dir.as_deref(), "cache-dir");
        self.coeffs_out.set_from_flag(cli.coeffs_out.as_deref(), "coeffs-out");
    }

    fn finish(self) -> Result<RunConfig> {
        let missing = At::Missing;
        let require = |slot: &Slot, key: &str| -> Result<(String, At)> {
            slot.value.clone().ok_or_else(|| {
                ConfigError::new(
                    &missing,
                    format!("mandatory key '{key}' is missing (set it in the file or with --{key})"),
                )
            })
        };

        let (geometry, geo_at) = require(&self.geometry, "geometry")?;
        Surface::by_name(&geometry).map_err(|e| ConfigError::new(&geo_at, e.to_string()))?;

        let (mode_raw, mode_at) = require(&self.mode, "mode")?;
        let mode = parse_mode(&mode_raw).map_err(|m| ConfigError::new(&mode_at, m))?;

        let (orders_raw, orders_at) = require(&self.n, "n")?;
        let orders = parse_orders(&orders_raw).map_err(|m| ConfigError::new(&orders_at, m))?;
        if mode == Mode::Solve && orders.len() != 1 {
            return Err(ConfigError::new(
                &orders_at,
                format!("mode 'solve' takes a single order, got {}", orders.len()),
            ));
        }

        let omega = self
            .omega
            .parse(|s| parse_f64_pi(s).and_then(positive("omega")))?
            .unwrap_or(std::f64::consts::PI);
        let lambda = self.lambda.parse(|s| parse_f64_pi(s))?.unwrap_or(2.0);
        let mu = self.mu.parse(|s| parse_f64_pi(s).and_then(positive("mu")))?.unwrap_or(1.0);
        if lambda + mu <= 0.0 {
            return Err(ConfigError::new(
                &missing,
                format!("lambda + mu must be positive, got {lambda} + {mu}"),
            ));
        }

        let nprime = self.nprime.parse(parse_usize)?;
        if let Some(np) = nprime {
            let nmax = *orders.iter().max().expect("orders nonempty");
            if np < nmax + 1 {
                return Err(ConfigError::new(
                    &missing,
                    format!("nprime = {np} must be at least max order + 1 = {}", nmax + 1),
                ));
            }
        }

        let incidence = match self.incidence.parse(|s| parse_incidence(s))? {
            Some(inc) => inc,
            None => match mode {
                Mode::PointsourceTest => Incidence::PointSource,
                _ => Incidence::PlaneElastic,
            },
        };
        if mode == Mode::PointsourceTest && incidence != Incidence::PointSource {
            return Err(ConfigError::new(
                &missing,
                "mode 'pointsource-test' runs the manufactured point-source problem; \
                 leave 'incidence' unset or set it to pointsource",
            ));
        }
        if mode == Mode::PlanewaveSelfconvergence && !incidence.is_plane() {
            return Err(ConfigError::new(
                &missing,
                "mode 'planewave-selfconvergence' needs a plane-wave incidence",
            ));
        }

        let reference_n = self.reference_n.parse(parse_usize)?;
        let needs_reference =
            mode == Mode::PlanewaveSelfconvergence || (mode == Mode::ConvergenceTable && incidence.is_plane());
        if needs_reference {
            let nmax = *orders.iter().max().expect("orders nonempty");
            match reference_n {
                None => {
                    return Err(ConfigError::new(
                        &missing,
                        "self-convergence against a reference needs 'reference_n' (--reference-n)",
                    ));
                }
                Some(ns) if ns <= nmax => {
                    return Err(ConfigError::new(
                        &missing,
                        format!("reference_n = {ns} must exceed the largest run order {nmax}"),
                    ));
                }
                Some(_) => {}
            }
        }

        let direction = self
            .direction
            .parse(parse_vec3)?
            .unwrap_or_else(|| Vector3::new(0.0, 0.0, 1.0));
        let polarization = self
            .polarization
            .parse(parse_vec3)?
            .unwrap_or_else(|| Vector3::new(1.0, 0.0, 0.0));
        let source = self
            .source
            .parse(parse_vec3)?
            .unwrap_or_else(|| Vector3::new(0.0, 0.05, 0.0866));
        if incidence.is_plane() && direction.norm() == 0.0 {
            return Err(ConfigError::new(&missing, "direction must be a nonzero vector"));
        }
        if polarization.norm() == 0.0 {
            return Err(ConfigError::new(&missing, "polarization must be a nonzero vector"));
        }
        if incidence == Incidence::PlaneS {
            let d = direction.normalize();
            let tangential = polarization - d * d.dot(&polarization);
            if tangential.norm() <= 1e-12 * polarization.norm() {
                return Err(ConfigError::new(
                    &missing,
                    "plane-s polarization is parallel to the propagation direction",
                ));
            }
        }

        let amplitude = self
            .amplitude
            .parse(|s| parse_f64_pi(s).and_then(finite("amplitude")))?
            .unwrap_or(1.0);

        let obs_grid = self.obs_grid.parse(parse_grid)?.unwrap_or((26, 50));
        let threads = self
            .threads
            .parse(|s| parse_usize(s).and_then(at_least_one("threads")))?;

        let out = self
            .out
            .parse(|s| Ok(PathBuf::from(s)))?
            .unwrap_or_else(|| match mode {
                Mode::Solve => PathBuf::from("farfield.csv"),
                _ => PathBuf::from("convergence.csv"),
            });
        let cache_dir = self
            .cache_dir
            .parse(|s| Ok(PathBuf::from(s)))?
            .unwrap_or_else(|| PathBuf::from("escat-refs"));
        let coeffs_out = self.coeffs_out.parse(|s| Ok(PathBuf::from(s)))?;

        Ok(RunConfig {
            geometry,
            omega,
            lambda,
            mu,
            orders,
            nprime,
            mode,
            incidence,
            direction,
            polarization,
            amplitude,
            source,
            obs_grid,
            out,
            threads,
            reference_n,
            cache_dir,
            coeffs_out,
        })
    }
}

/// Merge the optional config file with flag overrides and validate.
pub fn build(cli: &Cli) -> Result<RunConfig> {
    let mut b = Builder::default();
    if let Some(path) = &cli.config {
        b.read_file(path)?;
    }
    b.apply_flags(cli);
    b.finish()
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    match s.to_ascii_lowercase().as_str() {
        "solve" => Ok(Mode::Solve),
        "pointsource-test" => Ok(Mode::PointsourceTest),
        "planewave-selfconvergence" => Ok(Mode::PlanewaveSelfconvergence),
        "convergence-table" => Ok(Mode::ConvergenceTable),
        other => Err(format!(
            "unknown mode '{other}' (expected solve, pointsource-test, \
             planewave-selfconvergence, or convergence-table)"
        )),
    }
}

fn parse_incidence(s: &str) -> std::result::Result<Incidence, String> {
    match s.to_ascii_lowercase().as_str() {
        "pointsource" => Ok(Incidence::PointSource),
        "planewave" => Ok(Incidence::PlaneElastic),
        "plane-p" => Ok(Incidence::PlaneP),
        "plane-s" => Ok(Incidence::PlaneS),
        other => Err(format!(
            "unknown incidence '{other}' (expected pointsource, planewave, plane-p, or plane-s)"
        )),
    }
}

/// Plain float, or a pi multiple written as "pi", "8pi", "0.5pi".
fn parse_f64_pi(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    let val = if let Some(prefix) = t.strip_suffix("pi") {
        let factor = if prefix.is_empty() {
            1.0
        } else {
            prefix
                .parse::<f64>()
                .map_err(|_| format!("invalid number '{s}' (expected e.g. 3.5 or 8pi)"))?
        };
        factor * std::f64::consts::PI
    } else {
        t.parse::<f64>()
            .map_err(|_| format!("invalid number '{s}' (expected e.g. 3.5 or 8pi)"))?
    };
    if !val.is_finite() {
        return Err(format!("number '{s}' is not finite"));
    }
    Ok(val)
}

fn positive(name: &'static str) -> impl Fn(f64) -> std::result::Result<f64, String> {
    move |v| {
        if v > 0.0 {
            Ok(v)
        } else {
            Err(format!("{name} must be positive, got {v}"))
        }
    }
}

fn finite(name: &'static str) -> impl Fn(f64) -> std::result::Result<f64, String> {
    move |v| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("{name} must be finite"))
        }
    }
}

fn at_least_one(name: &'static str) -> impl Fn(usize) -> std::result::Result<usize, String> {
    move |v| {
        if v >= 1 {
            Ok(v)
        } else {
            Err(format!("{name} must be at least 1"))
        }
    }
}

fn parse_usize(s: &str) -> std::result::Result<usize, String> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| format!("invalid integer '{s}'"))
}

/// Comma-separated ansatz orders, each >= 1.
fn parse_orders(s: &str) -> std::result::Result<Vec<usize>, String> {
    let orders: Vec<usize> = s
        .split(',')
        .map(|p| parse_usize(p))
        .collect::<std::result::Result<_, _>>()?;
    if orders.is_empty() {
        return Err("expected at least one order".into());
    }
    if orders.contains(&0) {
        return Err("orders must be at least 1".into());
    }
    Ok(orders)
}

fn parse_vec3(s: &str) -> std::result::Result<Vector3<f64>, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated components, got '{s}'"));
    }
    let mut v = [0.0; 3];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = parse_f64_pi(part)?;
    }
    Ok(Vector3::new(v[0], v[1], v[2]))
}

/// Observation grid as NTHETAxNPHI, e.g. 26x50.
fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let lowered = s.to_ascii_lowercase();
    let Some((a, b)) = lowered.split_once('x') else {
        return Err(format!("expected NTHETAxNPHI (e.g. 26x50), got '{s}'"));
    };
    let nt = parse_usize(a)?;
    let np = parse_usize(b)?;
    if nt == 0 || np == 0 {
        return Err("observation grid counts must be at least 1".into());
    }
    Ok((nt, np))
}
