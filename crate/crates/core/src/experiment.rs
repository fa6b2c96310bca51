//! Config-driven experiment recipes: parse a `key = value` file, sweep one
//! parameter, aggregate over trials, fit the log-log exponent and write CSVs.
//!
//! ```text
//! # throughput of MPT_MPR against t
//! kind = throughput
//! mode = MPT_MPR
//! n = 4000
//! m = 3
//! t = 0.06, 0.0814, 0.1105, 0.15
//! trials = 10
//! expected_slope = 3
//! tolerance = 0.4
//! ```
//!
//! Exactly one of `n`, `t`, `m` may list several values; it becomes the
//! abscissa. `gain` sweeps `n` with `t = t_factor * sqrt(ln n / n)` and fits
//! the rate ratio against `ln n`. Every trial draws its network from
//! `sub_seed(seed, trial)`, so sweep points share their random streams.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::capacity::{simulate, AggregateRow, SimConfig, ThroughputReport};
use crate::cells::{build_cell_graph, build_grid, simultaneous_links};
use crate::cut::{count_property_p, cut_capacity, Cut, CutAxis, CutRow, PropertyPRow};
use crate::error::{Error, Result};
use crate::geom::{fmt_sig, generate_network, sub_seed};
use crate::protocol::Mode;
use crate::scaling::{fit_samples, ScalingResult};
use crate::trees::{emst_trial_length, memtc_count, random_sessions, Router};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Emst,
    Links,
    Memtc,
    Throughput,
    Cut,
    PropertyP,
    Gain,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Emst,
        ExperimentKind::Links,
        ExperimentKind::Memtc,
        ExperimentKind::Throughput,
        ExperimentKind::Cut,
        ExperimentKind::PropertyP,
        ExperimentKind::Gain,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Emst => "emst",
            ExperimentKind::Links => "links",
            ExperimentKind::Memtc => "memtc",
            ExperimentKind::Throughput => "throughput",
            ExperimentKind::Cut => "cut",
            ExperimentKind::PropertyP => "property_p",
            ExperimentKind::Gain => "gain",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown experiment kind '{s}'")))
    }
}

/// Sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    N,
    T,
    M,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::N => "n",
            Axis::T => "t",
            Axis::M => "m",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// `None` until set by the file or by the caller.
    pub kind: Option<ExperimentKind>,
    pub modes: Vec<Mode>,
    pub n: Vec<usize>,
    pub t: Vec<f64>,
    pub m: Vec<usize>,
    pub delta: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub slots: Option<usize>,
    pub warmup: Option<usize>,
    pub window: Option<usize>,
    /// Sessions routed per trial by `memtc`.
    pub sessions: usize,
    pub cut_axis: CutAxis,
    pub cut_pos: f64,
    pub t_factor: f64,
    /// One expected slope per fit, or a single value for all of them.
    pub expected_slope: Vec<f64>,
    pub tolerance: Option<f64>,
    pub min_r2: Option<f64>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            kind: None,
            modes: Vec::new(),
            n: Vec::new(),
            t: Vec::new(),
            m: Vec::new(),
            delta: vec![0.0],
            trials: 10,
            seed: 1,
            out: None,
            slots: None,
            warmup: None,
            window: None,
            sessions: 20,
            cut_axis: CutAxis::Vertical,
            cut_pos: 0.5,
            t_factor: 2.0,
            expected_slope: Vec::new(),
            tolerance: None,
            min_r2: None,
        }
    }
}

fn list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| format!("'{s}': {e}")))
        .collect()
}

fn one<T: FromStr>(v: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    v.trim()
        .parse::<T>()
        .map_err(|e| format!("'{}': {e}", v.trim()))
}

impl ExperimentSpec {
    /// Parses the `key = value` format. Blank lines and `#` comments are
    /// skipped; list values are comma separated. Unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = ExperimentSpec::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Config { line: i + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(err(format!("'{key}' has no value")));
            }
            spec.set(key, value).map_err(err)?;
        }
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config {
            line: 0,
            msg: format!("{}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        match key {
            "kind" => self.kind = Some(one(v)?),
            "mode" | "modes" => self.modes = list(v)?,
            "n" => self.n = list(v)?,
            "t" => self.t = list(v)?,
            "m" => self.m = list(v)?,
            "delta" => self.delta = list(v)?,
            "trials" => self.trials = one(v)?,
            "seed" => self.seed = one(v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "slots" => self.slots = Some(one(v)?),
            "warmup" => self.warmup = Some(one(v)?),
            "window" => self.window = Some(one(v)?),
            "sessions" => self.sessions = one(v)?,
            "cut_axis" => self.cut_axis = one(v)?,
            "cut_pos" => self.cut_pos = one(v)?,
            "t_factor" => self.t_factor = one(v)?,
            "expected_slope" => self.expected_slope = list(v)?,
            "tolerance" => self.tolerance = Some(one(v)?),
            "min_r2" => self.min_r2 = Some(one(v)?),
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.kind
            .ok_or_else(|| Error::invalid("experiment kind not set"))
    }

    fn modes_or(&self, default: &[Mode]) -> Vec<Mode> {
        if self.modes.is_empty() {
            default.to_vec()
        } else {
            self.modes.clone()
        }
    }

    fn ns(&self) -> Vec<usize> {
        if self.n.is_empty() {
            vec![4000]
        } else {
            self.n.clone()
        }
    }

    fn ms(&self) -> Vec<usize> {
        if self.m.is_empty() {
            vec![3]
        } else {
            self.m.clone()
        }
    }

    /// The swept parameter: the only one of `n`, `t`, `m` with several
    /// values. `emst` always sweeps `m` and `gain` always sweeps `n`.
    pub fn axis(&self) -> Result<Axis> {
        let kind = self.kind()?;
        let multi: Vec<Axis> = [
            (Axis::N, self.n.len()),
            (Axis::T, self.t.len()),
            (Axis::M, self.m.len()),
        ]
        .into_iter()
        .filter(|&(_, k)| k > 1)
        .map(|(a, _)| a)
        .collect();
        let axis = match kind {
            ExperimentKind::Emst => Axis::M,
            ExperimentKind::Gain => Axis::N,
            _ => match multi.as_slice() {
                [a] => *a,
                [] => {
                    return Err(Error::invalid(
                        "no swept parameter: give n, t or m several values",
                    ))
                }
                _ => return Err(Error::invalid("only one of n, t, m may be swept")),
            },
        };
        if multi.iter().any(|&a| a != axis) {
            return Err(Error::invalid(format!(
                "{kind} sweeps {} only; other parameters take one value",
                axis.as_str()
            )));
        }
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.kind()?;
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.delta.is_empty() {
            return Err(Error::invalid("delta needs a value"));
        }
        if let Some(&d) = self.delta.iter().find(|&&d| !(d >= 0.0 && d.is_finite())) {
            return Err(Error::invalid(format!("delta {d} must be >= 0")));
        }
        let axis = self.axis()?;
        let points = match axis {
            Axis::N => self.ns().len(),
            Axis::T => self.t.len(),
            Axis::M => self.ms().len(),
        };
        if points < 3 {
            return Err(Error::invalid(format!(
                "sweep over {} needs at least 3 values, got {points}",
                axis.as_str()
            )));
        }
        let needs_t = !matches!(
            kind,
            ExperimentKind::Emst | ExperimentKind::PropertyP | ExperimentKind::Gain
        );
        if needs_t && self.t.is_empty() {
            return Err(Error::invalid(format!("{kind} needs t")));
        }
        if let Some(&t) = self.t.iter().find(|&&t| !(t > 0.0 && t <= 2f64.sqrt())) {
            return Err(Error::invalid(format!("t = {t} not in (0, sqrt 2]")));
        }
        if self.ns().iter().any(|&n| n < 2) {
            return Err(Error::invalid("n must be at least 2"));
        }
        if self.ms().contains(&0) {
            return Err(Error::invalid("m must be at least 1"));
        }
        if kind == ExperimentKind::Emst && self.ms().iter().any(|&m| m < 2) {
            return Err(Error::invalid("emst needs m >= 2"));
        }
        if kind == ExperimentKind::Memtc && self.sessions == 0 {
            return Err(Error::invalid("sessions must be at least 1"));
        }
        if !(self.t_factor > 0.0) {
            return Err(Error::invalid("t_factor must be positive"));
        }
        Cut::new(self.cut_axis, self.cut_pos)?;
        if let Some(tol) = self.tolerance {
            if !(tol >= 0.0) {
                return Err(Error::invalid("tolerance must be >= 0"));
            }
            if self.expected_slope.is_empty() {
                return Err(Error::invalid("tolerance given without expected_slope"));
            }
        }
        Ok(())
    }

    fn t_for_n(&self, n: usize) -> f64 {
        let nf = n as f64;
        (self.t_factor * (nf.ln() / nf).sqrt()).min(2f64.sqrt())
    }
}

/// One fitted curve: a mode and delta for the simulation kinds, the kind
/// name otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub label: String,
    pub result: ScalingResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub label: String,
    pub slope: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub r2: f64,
    pub pass: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: slope {:.4} expected {} +/- {} (r2 {:.4})",
            if self.pass { "PASS" } else { "FAIL" },
            self.label,
            self.slope,
            self.expected,
            self.tolerance,
            self.r2
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub kind: ExperimentKind,
    pub axis: Axis,
    pub fits: Vec<Fit>,
    pub files: Vec<PathBuf>,
}

impl ExperimentOutcome {
    /// Compares every fit against the spec's expected slopes. Empty when
    /// the spec sets none.
    pub fn checks(&self, spec: &ExperimentSpec) -> Result<Vec<Check>> {
        if spec.expected_slope.is_empty() {
            return Ok(Vec::new());
        }
        let k = spec.expected_slope.len();
        if k != 1 && k != self.fits.len() {
            return Err(Error::invalid(format!(
                "{k} expected slopes for {} fits",
                self.fits.len()
            )));
        }
        let tol = spec.tolerance.unwrap_or(0.0);
        Ok(self
            .fits
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let expected = spec.expected_slope[if k == 1 { 0 } else { i }];
                let r2_ok = spec.min_r2.is_none_or(|r| f.result.r2 >= r);
                Check {
                    label: f.label.clone(),
                    slope: f.result.slope,
                    expected,
                    tolerance: tol,
                    r2: f.result.r2,
                    pass: f.result.slope_within(expected, tol) && r2_ok,
                }
            })
            .collect())
    }
}

/// Parameters of one sweep point.
#[derive(Debug, Clone, Copy)]
struct Point3 {
    n: usize,
    t: f64,
    m: usize,
}

struct Group {
    label: String,
    mode: Option<Mode>,
    delta: f64,
}

/// Runs the spec and writes its CSVs under `spec.out` when set.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let kind = spec.kind()?;
    let axis = spec.axis()?;
    let ns = spec.ns();
    let ms = spec.ms();
    let ts = spec.t.clone();
    let first_t = ts.first().copied().unwrap_or(0.0);
    let points: Vec<Point3> = match axis {
        Axis::N => ns
            .iter()
            .map(|&n| Point3 {
                n,
                t: if kind == ExperimentKind::Gain {
                    spec.t_for_n(n)
                } else {
                    first_t
                },
                m: ms[0],
            })
            .collect(),
        Axis::T => ts
            .iter()
            .map(|&t| Point3 {
                n: ns[0],
                t,
                m: ms[0],
            })
            .collect(),
        Axis::M => ms
            .iter()
            .map(|&m| Point3 {
                n: ns[0],
                t: first_t,
                m,
            })
            .collect(),
    };
    let x_of = |p: &Point3| match (kind, axis) {
        (ExperimentKind::Gain, _) => (p.n as f64).ln(),
        (_, Axis::N) => p.n as f64,
        (_, Axis::T) => p.t,
        (_, Axis::M) => p.m as f64,
    };

    let modes: Vec<Option<Mode>> = match kind {
        ExperimentKind::Throughput => spec
            .modes_or(&[Mode::MptMpr])
            .into_iter()
            .map(Some)
            .collect(),
        ExperimentKind::Cut => spec.modes_or(&Mode::ALL).into_iter().map(Some).collect(),
        _ => vec![None],
    };
    let deltas: Vec<f64> = if matches!(kind, ExperimentKind::Emst | ExperimentKind::PropertyP) {
        vec![spec.delta[0]]
    } else {
        spec.delta.clone()
    };
    let mut groups = Vec::new();
    for &mode in &modes {
        for &delta in &deltas {
            let mut label = match mode {
                Some(m) => m.to_string(),
                None => kind.to_string(),
            };
            if deltas.len() > 1 {
                label.push_str(&format!(" delta={}", fmt_sig(delta, 6)));
            }
            groups.push(Group { label, mode, delta });
        }
    }

    let jobs: Vec<(usize, usize, usize)> = (0..groups.len())
        .flat_map(|g| (0..points.len()).flat_map(move |p| (0..spec.trials).map(move |k| (g, p, k))))
        .collect();
    let results: Vec<TrialOutput> = jobs
        .par_iter()
        .map(|&(g, p, k)| {
            let grp = &groups[g];
            let pt = points[p];
            trial(spec, kind, grp, pt, k).map_err(|e| {
                e.context(format!(
                    "{} at n={} t={} m={} trial {k}",
                    grp.label,
                    pt.n,
                    fmt_sig(pt.t, 6),
                    pt.m
                ))
            })
        })
        .collect::<Result<_>>()?;

    let per_group = points.len() * spec.trials;
    let xs: Vec<f64> = points.iter().map(x_of).collect();
    let mut fits = Vec::new();
    for (g, grp) in groups.iter().enumerate() {
        let chunk = &results[g * per_group..(g + 1) * per_group];
        let samples: Vec<Vec<f64>> = chunk
            .chunks(spec.trials)
            .map(|c| c.iter().map(|r| r.value).collect())
            .collect();
        let result = fit_samples(&xs, &samples).map_err(|e| e.context(grp.label.clone()))?;
        fits.push(Fit {
            label: grp.label.clone(),
            result,
        });
    }

    let files = match &spec.out {
        Some(dir) => write_outputs(dir, spec, kind, &groups, &points, &results, &fits)?,
        None => Vec::new(),
    };
    Ok(ExperimentOutcome {
        kind,
        axis,
        fits,
        files,
    })
}

/// What one trial produced: the value that is fitted and the rows behind it.
struct TrialOutput {
    value: f64,
    rows: Rows,
}

enum Rows {
    None,
    Links { best_slot: u32, links: usize },
    Memtc(Vec<usize>),
    Throughput(Box<ThroughputReport>),
    Cut(CutRow),
    PropertyP(PropertyPRow),
    Gain { t: f64, ptp: f64, mpt_mpr: f64 },
}

fn sim_config(spec: &ExperimentSpec, pt: Point3, delta: f64, seed: u64) -> SimConfig {
    let mut c = SimConfig::new(pt.n, pt.t, pt.m, seed);
    c.delta = delta;
    if let Some(s) = spec.slots {
        c.slots = s;
    }
    c.warmup = spec.warmup;
    c.window = spec.window;
    c
}

fn trial(
    spec: &ExperimentSpec,
    kind: ExperimentKind,
    grp: &Group,
    pt: Point3,
    k: usize,
) -> Result<TrialOutput> {
    let seed = sub_seed(spec.seed, k as u64);
    let out = |value: f64, rows: Rows| Ok(TrialOutput { value, rows });
    match kind {
        ExperimentKind::Emst => out(emst_trial_length(pt.m, spec.seed, k)?, Rows::None),
        ExperimentKind::Links => {
            let net = generate_network(pt.n, seed)?;
            let s = simultaneous_links(&net, pt.t, grp.delta)?;
            out(
                s.links as f64,
                Rows::Links {
                    best_slot: s.best_slot,
                    links: s.links,
                },
            )
        }
        ExperimentKind::Memtc => {
            let net = generate_network(pt.n, seed)?;
            let sessions = random_sessions(&net, pt.m, sub_seed(seed, 1))?;
            let grid = build_grid(pt.t)?;
            let graph = build_cell_graph(&net, &grid, pt.t);
            let router = Router::new(&net, &grid, &graph);
            let counts = sessions
                .iter()
                .take(spec.sessions)
                .map(|s| router.route(s).map(|tree| memtc_count(&tree, &grid)))
                .collect::<Result<Vec<usize>>>()?;
            let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
            out(mean, Rows::Memtc(counts))
        }
        ExperimentKind::Throughput => {
            let mode = grp.mode.expect("throughput groups carry a mode");
            let report = simulate(&sim_config(spec, pt, grp.delta, seed), mode)?;
            out(report.mean, Rows::Throughput(Box::new(report)))
        }
        ExperimentKind::Cut => {
            let mode = grp.mode.expect("cut groups carry a mode");
            let net = generate_network(pt.n, seed)?;
            let cut = Cut::new(spec.cut_axis, spec.cut_pos)?;
            let links = cut_capacity(&net, &cut, mode, pt.t, grp.delta)?;
            out(
                links as f64,
                Rows::Cut(CutRow {
                    mode,
                    n: pt.n,
                    t: pt.t,
                    cut,
                    links,
                }),
            )
        }
        ExperimentKind::PropertyP => {
            let net = generate_network(pt.n, seed)?;
            let sessions = random_sessions(&net, pt.m, sub_seed(seed, 1))?;
            let cut = Cut::new(spec.cut_axis, spec.cut_pos)?;
            let count = count_property_p(&net, &sessions, &cut);
            let fraction = count as f64 / sessions.len() as f64;
            out(
                count as f64,
                Rows::PropertyP(PropertyPRow {
                    n: pt.n,
                    m: pt.m,
                    seed,
                    fraction,
                }),
            )
        }
        ExperimentKind::Gain => {
            let cfg = sim_config(spec, pt, grp.delta, seed);
            let ptp = simulate(&cfg, Mode::Ptp)?.mean;
            let mpt_mpr = simulate(&cfg, Mode::MptMpr)?.mean;
            if ptp <= 0.0 {
                return Err(Error::InvalidData(
                    "PTP delivered nothing; raise slots".into(),
                ));
            }
            out(
                mpt_mpr / ptp,
                Rows::Gain {
                    t: pt.t,
                    ptp,
                    mpt_mpr,
                },
            )
        }
    }
}

fn create(dir: &Path, name: &str, files: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path)?;
    files.push(path);
    Ok(BufWriter::new(f))
}

fn write_outputs(
    dir: &Path,
    spec: &ExperimentSpec,
    kind: ExperimentKind,
    groups: &[Group],
    points: &[Point3],
    results: &[TrialOutput],
    fits: &[Fit],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let per_group = points.len() * spec.trials;
    let at = |i: usize| {
        (
            &groups[i / per_group],
            points[(i % per_group) / spec.trials],
            i % spec.trials,
        )
    };

    match kind {
        ExperimentKind::Emst => {
            let mut w = create(dir, "emst.csv", &mut files)?;
            writeln!(w, "m,trial,length")?;
            for (i, r) in results.iter().enumerate() {
                let (_, p, k) = at(i);
                writeln!(w, "{},{k},{}", p.m, fmt_sig(r.value, 12))?;
            }
            w.flush()?;
        }
        ExperimentKind::Links => {
            let mut w = create(dir, "links.csv", &mut files)?;
            writeln!(w, "n,t,delta,slot,links")?;
            for (i, r) in results.iter().enumerate() {
                let (g, p, _) = at(i);
                if let Rows::Links { best_slot, links } = r.rows {
                    writeln!(
                        w,
                        "{},{},{},{best_slot},{links}",
                        p.n,
                        fmt_sig(p.t, 12),
                        fmt_sig(g.delta, 12)
                    )?;
                }
            }
            w.flush()?;
        }
        ExperimentKind::Memtc => {
            let mut w = create(dir, "memtc.csv", &mut files)?;
            writeln!(w, "n,t,m,trial,session_id,cells")?;
            for (i, r) in results.iter().enumerate() {
                let (_, p, k) = at(i);
                if let Rows::Memtc(counts) = &r.rows {
                    for (s, c) in counts.iter().enumerate() {
                        writeln!(w, "{},{},{},{k},{s},{c}", p.n, fmt_sig(p.t, 12), p.m)?;
                    }
                }
            }
            w.flush()?;
        }
        ExperimentKind::Throughput => {
            let mut w = create(dir, "throughput.csv", &mut files)?;
            let mut header = true;
            let mut aggregates = Vec::new();
            for chunk in results.chunks(spec.trials) {
                let reports: Vec<ThroughputReport> = chunk
                    .iter()
                    .filter_map(|r| match &r.rows {
                        Rows::Throughput(rep) => Some((**rep).clone()),
                        _ => None,
                    })
                    .collect();
                for rep in &reports {
                    rep.write_csv(&mut w, header)?;
                    header = false;
                }
                aggregates.push(AggregateRow::from_reports(&reports)?);
            }
            w.flush()?;
            let mut a = create(dir, "aggregate.csv", &mut files)?;
            AggregateRow::write_csv(&aggregates, &mut a)?;
            a.flush()?;
        }
        ExperimentKind::Cut => {
            let rows: Vec<CutRow> = results
                .iter()
                .filter_map(|r| match &r.rows {
                    Rows::Cut(row) => Some(row.clone()),
                    _ => None,
                })
                .collect();
            let mut w = create(dir, "cut.csv", &mut files)?;
            CutRow::write_csv(&rows, &mut w)?;
            w.flush()?;
        }
        ExperimentKind::PropertyP => {
            let rows: Vec<PropertyPRow> = results
                .iter()
                .filter_map(|r| match &r.rows {
                    Rows::PropertyP(row) => Some(row.clone()),
                    _ => None,
                })
                .collect();
            let mut w = create(dir, "property_p.csv", &mut files)?;
            PropertyPRow::write_csv(&rows, &mut w)?;
            w.flush()?;
        }
        ExperimentKind::Gain => {
            let mut w = create(dir, "gain.csv", &mut files)?;
            writeln!(w, "n,t,m,trial,ptp_rate,mpt_mpr_rate,ratio")?;
            for (i, r) in results.iter().enumerate() {
                let (_, p, k) = at(i);
                if let Rows::Gain { t, ptp, mpt_mpr } = r.rows {
                    writeln!(
                        w,
                        "{},{},{},{k},{},{},{}",
                        p.n,
                        fmt_sig(t, 12),
                        p.m,
                        fmt_sig(ptp, 12),
                        fmt_sig(mpt_mpr, 12),
                        fmt_sig(r.value, 12)
                    )?;
                }
            }
            w.flush()?;
        }
    }

    let mut w = create(dir, "fit.csv", &mut files)?;
    writeln!(w, "label,x,mean,stderr")?;
    for f in fits {
        for p in &f.result.points {
            writeln!(
                w,
                "{},{},{},{}",
                f.label,
                fmt_sig(p.x, 12),
                fmt_sig(p.mean, 12),
                fmt_sig(p.stderr, 12)
            )?;
        }
    }
    w.flush()?;
    let mut w = create(dir, "summary.csv", &mut files)?;
    writeln!(w, "label,slope,intercept,r2")?;
    for f in fits {
        writeln!(
            w,
            "{},{},{},{}",
            f.label,
            fmt_sig(f.result.slope, 12),
            fmt_sig(f.result.intercept, 12),
            fmt_sig(f.result.r2, 12)
        )?;
    }
    w.flush()?;
    Ok(files)
}
