//! Sparsity cuts: multicast-to-unicast reduction, property-P counting and
//! greedy lower-bound witnesses for the number of links that can cross a
//! bisecting line in one slot.
//!
//! The crossing constructions tile the cut line into segments:
//!
//! * PTP: at most one link per `(1 + delta) t` segment, shortest first.
//! * MPT: per `t` segment, a hub transmitter on the `R` side closest to the
//!   line, linked to every receiver across the cut within `t`. MPR is the
//!   mirror image, with a hub receiver on the far side.
//! * MPT_MPR: disks of radius `t / 2` centred on the line every
//!   `(2 + delta) t`; inside each, every `R` node sends to every far node.
//!
//! Each tiling is admitted link by link through [`Admission`] in its own
//! mode, so anything that would break feasibility is skipped. A mode also
//! runs the tilings of the more restricted modes it subsumes and keeps the
//! largest set, which makes the counts monotone in the mode. The hub tiling is one possible realisation, not a
//! maximum.

use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geom::{fmt_sig, CommRange, NetworkInstance, NodeId, Point};
use crate::protocol::{is_feasible, Admission, Mode, TransmissionSet};
use crate::trees::MulticastSession;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CutAxis {
    /// The line `x = pos`; `R` is the left part.
    Vertical,
    /// The line `y = pos`; `R` is the lower part.
    Horizontal,
}

impl CutAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            CutAxis::Vertical => "vertical",
            CutAxis::Horizontal => "horizontal",
        }
    }
}

impl FromStr for CutAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vertical" | "v" | "x" => Ok(CutAxis::Vertical),
            "horizontal" | "h" | "y" => Ok(CutAxis::Horizontal),
            other => Err(Error::invalid(format!("unknown cut axis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cut {
    axis: CutAxis,
    pos: f64,
}

impl Cut {
    /// Positions are limited to `[0.25, 0.75]` so both sides keep a
    /// constant share of the square.
    pub fn new(axis: CutAxis, pos: f64) -> Result<Self> {
        if !(0.25..=0.75).contains(&pos) {
            return Err(Error::invalid(format!(
                "cut position {pos} not in [0.25, 0.75]"
            )));
        }
        Ok(Cut { axis, pos })
    }

    pub fn middle(axis: CutAxis) -> Self {
        Cut { axis, pos: 0.5 }
    }

    pub fn axis(&self) -> CutAxis {
        self.axis
    }

    pub fn pos(&self) -> f64 {
        self.pos
    }

    /// Signed distance from the line, negative inside `R`.
    fn offset(&self, p: Point) -> f64 {
        match self.axis {
            CutAxis::Vertical => p.x - self.pos,
            CutAxis::Horizontal => p.y - self.pos,
        }
    }

    /// Coordinate along the line.
    fn along(&self, p: Point) -> f64 {
        match self.axis {
            CutAxis::Vertical => p.y,
            CutAxis::Horizontal => p.x,
        }
    }

    fn point_at(&self, along: f64) -> Point {
        match self.axis {
            CutAxis::Vertical => Point::new(self.pos, along),
            CutAxis::Horizontal => Point::new(along, self.pos),
        }
    }

    /// Whether `p` lies in `R`. Points on the line belong to `R^c`.
    pub fn in_r(&self, p: Point) -> bool {
        self.offset(p) < 0.0
    }

    pub fn separates(&self, a: Point, b: Point) -> bool {
        self.in_r(a) != self.in_r(b)
    }
}

impl Default for Cut {
    fn default() -> Self {
        Cut::middle(CutAxis::Vertical)
    }
}

/// A session has property P when its source and at least one destination
/// lie on opposite sides of the cut.
pub fn has_property_p(net: &NetworkInstance, session: &MulticastSession, cut: &Cut) -> bool {
    let s = net.point(session.source);
    session
        .destinations
        .iter()
        .any(|&d| cut.separates(s, net.point(d)))
}

pub fn count_property_p(net: &NetworkInstance, sessions: &[MulticastSession], cut: &Cut) -> usize {
    sessions
        .iter()
        .filter(|s| has_property_p(net, s, cut))
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnicastPair {
    pub session: usize,
    pub source: NodeId,
    pub destination: NodeId,
    pub crosses: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UnicastReduction {
    pub pairs: Vec<UnicastPair>,
}

impl UnicastReduction {
    pub fn crossing(&self) -> impl Iterator<Item = &UnicastPair> {
        self.pairs.iter().filter(|p| p.crosses)
    }
}

/// One destination per session: the lowest-id destination across the cut
/// when there is one, otherwise the lowest-id destination.
pub fn reduce_to_unicast(
    net: &NetworkInstance,
    sessions: &[MulticastSession],
    cut: &Cut,
) -> UnicastReduction {
    let pairs = sessions
        .iter()
        .map(|s| {
            let src = net.point(s.source);
            let across = s
                .destinations
                .iter()
                .copied()
                .filter(|&d| cut.separates(src, net.point(d)))
                .min();
            let first = s
                .destinations
                .iter()
                .copied()
                .min()
                .expect("validated session");
            UnicastPair {
                session: s.id,
                source: s.source,
                destination: across.unwrap_or(first),
                crosses: across.is_some(),
            }
        })
        .collect();
    UnicastReduction { pairs }
}

/// Nodes within `band` of the line, split by side and sorted along it.
struct Band {
    r: Vec<(f64, NodeId)>,
    rc: Vec<(f64, NodeId)>,
}

impl Band {
    fn new(net: &NetworkInstance, cut: &Cut, band: f64) -> Self {
        let mut r = Vec::new();
        let mut rc = Vec::new();
        for id in net.ids() {
            let p = net.point(id);
            if cut.offset(p).abs() <= band {
                let e = (cut.along(p), id);
                if cut.in_r(p) {
                    r.push(e);
                } else {
                    rc.push(e);
                }
            }
        }
        let key = |a: &(f64, NodeId), b: &(f64, NodeId)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        r.sort_by(key);
        rc.sort_by(key);
        Band { r, rc }
    }

    /// Entries of `side` with along-coordinate in `[lo, hi)`.
    fn slice(side: &[(f64, NodeId)], lo: f64, hi: f64) -> &[(f64, NodeId)] {
        let a = side.partition_point(|e| e.0 < lo);
        let b = side.partition_point(|e| e.0 < hi);
        &side[a..b]
    }
}

fn segments(len: f64) -> impl Iterator<Item = (f64, f64)> {
    let k = (1.0 / len).ceil() as usize;
    (0..k).map(move |i| {
        (
            i as f64 * len,
            ((i + 1) as f64 * len).min(1.0 + f64::EPSILON),
        )
    })
}

fn ptp_tiling(adm: &mut Admission<'_>, net: &NetworkInstance, cut: &Cut, t: f64, delta: f64) {
    let band = Band::new(net, cut, t);
    let t2 = t * t;
    for (lo, hi) in segments((1.0 + delta) * t) {
        let txs = Band::slice(&band.r, lo, hi);
        let rxs = Band::slice(&band.rc, lo - t, hi + t);
        let mut pairs: Vec<(f64, NodeId, NodeId)> = Vec::new();
        for &(_, a) in txs {
            let pa = net.point(a);
            for &(_, b) in rxs {
                let d2 = pa.dist2(&net.point(b));
                if d2 <= t2 {
                    pairs.push((d2, a, b));
                }
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        for (_, a, b) in pairs {
            if adm.try_admit(a, b) {
                break;
            }
        }
    }
}

/// Hub per `t` segment. With `hub_sends` the hub is an `R` transmitter,
/// otherwise an `R^c` receiver fed from `R`.
fn hub_tiling(adm: &mut Admission<'_>, net: &NetworkInstance, cut: &Cut, t: f64, hub_sends: bool) {
    let band = Band::new(net, cut, t);
    let t2 = t * t;
    let (hubs, others) = if hub_sends {
        (&band.r, &band.rc)
    } else {
        (&band.rc, &band.r)
    };
    for (lo, hi) in segments(t) {
        let hub = Band::slice(hubs, lo, hi)
            .iter()
            .map(|&(_, id)| id)
            .min_by(|&a, &b| {
                let (da, db) = (
                    cut.offset(net.point(a)).abs(),
                    cut.offset(net.point(b)).abs(),
                );
                da.total_cmp(&db).then(a.cmp(&b))
            });
        let Some(hub) = hub else { continue };
        let ph = net.point(hub);
        let along = cut.along(ph);
        for &(_, o) in Band::slice(others, along - t, along + t) {
            if ph.dist2(&net.point(o)) > t2 {
                continue;
            }
            if hub_sends {
                adm.try_admit(hub, o);
            } else {
                adm.try_admit(o, hub);
            }
        }
    }
}

fn disk_tiling(adm: &mut Admission<'_>, net: &NetworkInstance, cut: &Cut, t: f64, delta: f64) {
    let radius = t / 2.0;
    let band = Band::new(net, cut, radius);
    let r2 = radius * radius;
    let spacing = (2.0 + delta) * t;
    let mut k = 0usize;
    loop {
        let along = radius + k as f64 * spacing;
        if along > 1.0 {
            break;
        }
        k += 1;
        let c = cut.point_at(along);
        let inside = |side: &[(f64, NodeId)]| -> Vec<NodeId> {
            Band::slice(side, along - radius, along + radius + f64::EPSILON)
                .iter()
                .map(|&(_, id)| id)
                .filter(|&id| net.point(id).dist2(&c) <= r2)
                .collect()
        };
        let txs = inside(&band.r);
        let rxs = inside(&band.rc);
        for &a in &txs {
            for &b in &rxs {
                adm.try_admit(a, b);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Construction {
    Ptp,
    HubTx,
    HubRx,
    Disks,
}

impl Construction {
    /// The mode the tiling is admitted under.
    fn native(self) -> Mode {
        match self {
            Construction::Ptp => Mode::Ptp,
            Construction::HubTx => Mode::Mpt,
            Construction::HubRx => Mode::Mpr,
            Construction::Disks => Mode::MptMpr,
        }
    }
}

fn constructions(mode: Mode) -> &'static [Construction] {
    use Construction::*;
    match mode {
        Mode::Ptp => &[Ptp],
        Mode::Mpt => &[Ptp, HubTx],
        Mode::Mpr => &[Ptp, HubRx],
        Mode::MptMpr => &[Ptp, HubTx, HubRx, Disks],
    }
}

/// Largest crossing set found by the tilings available to `mode`, checked
/// with [`is_feasible`]. Every link has its transmitter in `R` and its
/// receiver in `R^c`.
pub fn cut_transmission_set(
    net: &NetworkInstance,
    cut: &Cut,
    mode: Mode,
    t: f64,
    delta: f64,
) -> Result<TransmissionSet> {
    let range = CommRange::new(t)?;
    let mut best: Option<TransmissionSet> = None;
    for &c in constructions(mode) {
        let mut adm = Admission::new(net, c.native(), range, delta)?;
        match c {
            Construction::Ptp => ptp_tiling(&mut adm, net, cut, t, delta),
            Construction::HubTx => hub_tiling(&mut adm, net, cut, t, true),
            Construction::HubRx => hub_tiling(&mut adm, net, cut, t, false),
            Construction::Disks => disk_tiling(&mut adm, net, cut, t, delta),
        }
        let ts = adm.to_transmission_set().with_mode(mode);
        if best.as_ref().is_none_or(|b| ts.len() > b.len()) {
            best = Some(ts);
        }
    }
    let ts = best.expect("every mode has a construction");
    if !is_feasible(&ts, net)? {
        return Err(Error::InvalidData(format!(
            "{mode} cut construction produced an infeasible set"
        )));
    }
    Ok(ts)
}

/// Number of links crossing the cut in [`cut_transmission_set`].
pub fn cut_capacity(
    net: &NetworkInstance,
    cut: &Cut,
    mode: Mode,
    t: f64,
    delta: f64,
) -> Result<usize> {
    let ts = cut_transmission_set(net, cut, mode, t, delta)?;
    Ok(ts
        .links()
        .iter()
        .filter(|l| cut.separates(net.point(l.tx), net.point(l.rx)))
        .count())
}

/// Per-session rate allowed by the cut with network coding: the crossing
/// order divided by the `n` sessions that must use it. Unit constants.
pub fn nc_upper_bound_rate(mode: Mode, n: usize, t: f64) -> f64 {
    let n = n as f64;
    match mode {
        Mode::Ptp => 1.0 / (n * t),
        Mode::Mpt | Mode::Mpr => t,
        Mode::MptMpr => n * t.powi(3),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutRow {
    pub mode: Mode,
    pub n: usize,
    pub t: f64,
    pub cut: Cut,
    pub links: usize,
}

impl CutRow {
    pub const HEADER: &'static str = "mode,n,t,cut_axis,cut_pos,links";

    pub fn write_csv<W: Write>(rows: &[CutRow], mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::HEADER)?;
        for r in rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.mode,
                r.n,
                fmt_sig(r.t, 12),
                r.cut.axis.as_str(),
                fmt_sig(r.cut.pos, 12),
                r.links
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyPRow {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub fraction: f64,
}

impl PropertyPRow {
    pub const HEADER: &'static str = "n,m,seed,fraction";

    pub fn write_csv<W: Write>(rows: &[PropertyPRow], mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::HEADER)?;
        for r in rows {
            writeln!(w, "{},{},{},{}", r.n, r.m, r.seed, fmt_sig(r.fraction, 12))?;
        }
        Ok(())
    }
}
