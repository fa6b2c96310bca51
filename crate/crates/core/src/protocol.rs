//! Protocol-model feasibility for the four transceiver modes.
//!
//! All modes share one geometric rule: a link `(i, j)` needs
//! `|X_i - X_j| <= range`, and every transmitter `k` with
//! `|X_k - X_j| < (1 + delta) * range` must itself be linked to receiver `j`.
//! Nodes are half-duplex. The modes differ only in how many links a node
//! may take part in:
//!
//! | mode      | links per transmitter | links per receiver |
//! |-----------|-----------------------|--------------------|
//! | `Ptp`     | 1 (and no other role) | 1                  |
//! | `Mpt`     | any                   | 1                  |
//! | `Mpr`     | 1                     | any                |
//! | `MptMpr`  | any                   | any                |
//!
//! Because the interference rule is symmetric in `(k, j)`, reversing every
//! link maps an `Mpt`-feasible set onto an `Mpr`-feasible one.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geom::{fmt_sig, CommRange, NetworkInstance, NodeId, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Ptp,
    Mpt,
    Mpr,
    MptMpr,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Ptp, Mode::Mpt, Mode::Mpr, Mode::MptMpr];

    pub fn multi_tx(self) -> bool {
        matches!(self, Mode::Mpt | Mode::MptMpr)
    }

    pub fn multi_rx(self) -> bool {
        matches!(self, Mode::Mpr | Mode::MptMpr)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Ptp => "PTP",
            Mode::Mpt => "MPT",
            Mode::Mpr => "MPR",
            Mode::MptMpr => "MPT_MPR",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s
            .trim()
            .to_ascii_uppercase()
            .replace(['+', '-'], "_")
            .as_str()
        {
            "PTP" => Ok(Mode::Ptp),
            "MPT" => Ok(Mode::Mpt),
            "MPR" => Ok(Mode::Mpr),
            "MPT_MPR" => Ok(Mode::MptMpr),
            other => Err(Error::invalid(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Link {
    pub tx: NodeId,
    pub rx: NodeId,
}

impl Link {
    pub fn new(tx: impl Into<NodeId>, rx: impl Into<NodeId>) -> Result<Self> {
        let (tx, rx) = (tx.into(), rx.into());
        if tx == rx {
            return Err(Error::invalid(format!("self link at node {tx}")));
        }
        Ok(Link { tx, rx })
    }

    pub fn reversed(self) -> Link {
        Link {
            tx: self.rx,
            rx: self.tx,
        }
    }
}

/// A set of distinct directed links claimed to be active in one slot.
#[derive(Debug, Clone)]
pub struct TransmissionSet {
    links: Vec<Link>,
    seen: HashSet<Link>,
    pub mode: Mode,
    pub range: CommRange,
    /// Guard factor; the interference radius is `(1 + delta) * range`.
    pub delta: f64,
}

impl TransmissionSet {
    pub fn new(mode: Mode, range: CommRange, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) {
            return Err(Error::invalid(format!("delta {delta} must be >= 0")));
        }
        Ok(TransmissionSet {
            links: Vec::new(),
            seen: HashSet::new(),
            mode,
            range,
            delta,
        })
    }

    pub fn with_links(
        mode: Mode,
        range: CommRange,
        delta: f64,
        links: impl IntoIterator<Item = Link>,
    ) -> Result<Self> {
        let mut ts = TransmissionSet::new(mode, range, delta)?;
        for l in links {
            if !ts.insert(l) {
                return Err(Error::invalid(format!("duplicate link {}->{}", l.tx, l.rx)));
            }
        }
        Ok(ts)
    }

    /// Adds a link; returns false if it was already present.
    pub fn insert(&mut self, link: Link) -> bool {
        if self.seen.insert(link) {
            self.links.push(link);
            true
        } else {
            false
        }
    }

    pub fn contains(&self, link: &Link) -> bool {
        self.seen.contains(link)
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Same links with every direction flipped, in `mode`.
    pub fn reversed(&self, mode: Mode) -> TransmissionSet {
        let mut out = TransmissionSet::new(mode, self.range, self.delta).expect("delta checked");
        for l in &self.links {
            out.insert(l.reversed());
        }
        out
    }

    pub fn with_mode(&self, mode: Mode) -> TransmissionSet {
        let mut out = self.clone();
        out.mode = mode;
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# mode={} range={} delta={}",
            self.mode,
            fmt_sig(self.range.t(), 12),
            self.delta
        )?;
        writeln!(w, "tx,rx")?;
        for l in &self.links {
            writeln!(w, "{},{}", l.tx, l.rx)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut mode = None;
        let mut range = None;
        let mut delta = None;
        let mut links = Vec::new();
        let mut header_seen = false;
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| Error::InvalidData(format!("bad header item {kv}")))?;
                    let num = || {
                        v.parse::<f64>()
                            .map_err(|_| Error::InvalidData(format!("bad number {v}")))
                    };
                    match k {
                        "mode" => mode = Some(v.parse::<Mode>()?),
                        "range" => range = Some(CommRange::new(num()?)?),
                        "delta" => delta = Some(num()?),
                        _ => {}
                    }
                }
            } else if line == "tx,rx" {
                header_seen = true;
            } else if !line.is_empty() {
                let (a, b) = line
                    .split_once(',')
                    .ok_or_else(|| Error::InvalidData(format!("bad link row {line}")))?;
                let p = |s: &str| {
                    s.trim()
                        .parse::<u32>()
                        .map(NodeId)
                        .map_err(|_| Error::InvalidData(format!("bad node id {s}")))
                };
                links.push(Link::new(p(a)?, p(b)?)?);
            }
        }
        if !header_seen {
            return Err(Error::InvalidData("missing tx,rx header".into()));
        }
        let missing = |what: &str| Error::InvalidData(format!("missing {what} in comment header"));
        TransmissionSet::with_links(
            mode.ok_or_else(|| missing("mode"))?,
            range.ok_or_else(|| missing("range"))?,
            delta.ok_or_else(|| missing("delta"))?,
            links,
        )
    }
}

/// Spatial hash over a subset of nodes, cell side `h`.
#[derive(Debug, Clone)]
pub(crate) struct Buckets {
    h: f64,
    dim: usize,
    cells: Vec<Vec<u32>>,
    dirty: Vec<usize>,
}

impl Buckets {
    pub(crate) fn new(h: f64) -> Self {
        let dim = ((1.0 / h).ceil() as usize).clamp(1, 4096);
        Buckets {
            h,
            dim,
            cells: vec![Vec::new(); dim * dim],
            dirty: Vec::new(),
        }
    }

    fn coord(&self, v: f64) -> usize {
        ((v / self.h) as usize).min(self.dim - 1)
    }

    pub(crate) fn insert(&mut self, id: u32, p: Point) {
        let c = self.coord(p.y) * self.dim + self.coord(p.x);
        if self.cells[c].is_empty() {
            self.dirty.push(c);
        }
        self.cells[c].push(id);
    }

    /// Calls `f` for every stored id whose bucket is within one of `p`'s.
    /// Callers filter by exact distance; the bucket side must be at least
    /// the query radius.
    pub(crate) fn near(&self, p: Point, mut f: impl FnMut(u32) -> bool) -> bool {
        let (cx, cy) = (self.coord(p.x), self.coord(p.y));
        for y in cy.saturating_sub(1)..=(cy + 1).min(self.dim - 1) {
            for x in cx.saturating_sub(1)..=(cx + 1).min(self.dim - 1) {
                for &id in &self.cells[y * self.dim + x] {
                    if !f(id) {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub(crate) fn clear(&mut self) {
        for c in self.dirty.drain(..) {
            self.cells[c].clear();
        }
    }
}

struct Geometry {
    r2: f64,
    g2: f64,
    g: f64,
}

impl Geometry {
    fn new(range: CommRange, delta: f64) -> Self {
        let r = range.t();
        let g = (1.0 + delta) * r;
        Geometry {
            r2: r * r,
            g2: g * g,
            g,
        }
    }
}

/// Checks a transmission set against the protocol model on `net`.
///
/// Errors only when a link names a node that is not in `net`.
pub fn is_feasible(ts: &TransmissionSet, net: &NetworkInstance) -> Result<bool> {
    let n = net.n();
    for l in ts.links() {
        if l.tx.index() >= n || l.rx.index() >= n {
            return Err(Error::invalid(format!(
                "link {}->{} names a node outside 0..{n}",
                l.tx, l.rx
            )));
        }
    }
    if ts.is_empty() {
        return Ok(true);
    }
    let geo = Geometry::new(ts.range, ts.delta);

    let mut out_deg: HashMap<NodeId, usize> = HashMap::new();
    let mut in_deg: HashMap<NodeId, usize> = HashMap::new();
    for l in ts.links() {
        if net.point(l.tx).dist2(&net.point(l.rx)) > geo.r2 {
            return Ok(false);
        }
        *out_deg.entry(l.tx).or_default() += 1;
        *in_deg.entry(l.rx).or_default() += 1;
    }
    if out_deg.keys().any(|k| in_deg.contains_key(k)) {
        return Ok(false);
    }
    let max_out = if ts.mode.multi_tx() { usize::MAX } else { 1 };
    let max_in = if ts.mode.multi_rx() { usize::MAX } else { 1 };
    if out_deg.values().any(|&d| d > max_out) || in_deg.values().any(|&d| d > max_in) {
        return Ok(false);
    }

    let mut txs = Buckets::new(geo.g);
    for &k in out_deg.keys() {
        txs.insert(k.0, net.point(k));
    }
    for &j in in_deg.keys() {
        let pj = net.point(j);
        let ok = txs.near(pj, |k| {
            let k = NodeId(k);
            net.point(k).dist2(&pj) >= geo.g2 || ts.contains(&Link { tx: k, rx: j })
        });
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Idle,
    Tx,
    Rx,
}

/// Greedy, incremental construction of a feasible transmission set.
///
/// [`Admission::try_admit`] accepts a link iff the admitted set plus the
/// new link stays feasible under [`is_feasible`]. In `MptMpr` mode a
/// receiver is implicitly linked to every transmitter inside its guard
/// radius (it decodes them all); those decode links are not counted by
/// [`Admission::len`] but are included by [`Admission::to_transmission_set`].
#[derive(Debug, Clone)]
pub struct Admission<'a> {
    net: &'a NetworkInstance,
    mode: Mode,
    range: CommRange,
    delta: f64,
    r2: f64,
    g2: f64,
    role: Vec<Role>,
    out_deg: Vec<u32>,
    in_deg: Vec<u32>,
    txs: Buckets,
    rxs: Buckets,
    explicit: HashSet<Link>,
    order: Vec<Link>,
    touched: Vec<u32>,
}

impl<'a> Admission<'a> {
    pub fn new(net: &'a NetworkInstance, mode: Mode, range: CommRange, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) {
            return Err(Error::invalid(format!("delta {delta} must be >= 0")));
        }
        let geo = Geometry::new(range, delta);
        let n = net.n();
        Ok(Admission {
            net,
            mode,
            range,
            delta,
            r2: geo.r2,
            g2: geo.g2,
            role: vec![Role::Idle; n],
            out_deg: vec![0; n],
            in_deg: vec![0; n],
            txs: Buckets::new(geo.g),
            rxs: Buckets::new(geo.g),
            explicit: HashSet::new(),
            order: Vec::new(),
            touched: Vec::new(),
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Number of explicitly admitted links.
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn links(&self) -> &[Link] {
        &self.order
    }

    pub fn is_transmitter(&self, id: NodeId) -> bool {
        self.role[id.index()] == Role::Tx
    }

    pub fn is_receiver(&self, id: NodeId) -> bool {
        self.role[id.index()] == Role::Rx
    }

    /// Whether `id` could still start transmitting (it is not a receiver and,
    /// for single-link transmit modes, has no link yet).
    pub fn can_transmit(&self, id: NodeId) -> bool {
        match self.role[id.index()] {
            Role::Rx => false,
            Role::Tx => self.mode.multi_tx(),
            Role::Idle => true,
        }
    }

    fn interferes(&self, k: Point, j: Point) -> bool {
        k.dist2(&j) < self.g2
    }

    pub fn try_admit(&mut self, tx: NodeId, rx: NodeId) -> bool {
        if tx == rx {
            return false;
        }
        let (ti, ri) = (tx.index(), rx.index());
        let (pt, pr) = (self.net.point(tx), self.net.point(rx));
        if pt.dist2(&pr) > self.r2 {
            return false;
        }
        if self.role[ti] == Role::Rx || self.role[ri] == Role::Tx {
            return false;
        }
        let link = Link { tx, rx };
        if self.explicit.contains(&link) {
            return false;
        }
        if !self.mode.multi_tx() && self.out_deg[ti] > 0 {
            return false;
        }
        if !self.mode.multi_rx() && self.in_deg[ri] > 0 {
            return false;
        }
        let new_tx = self.role[ti] == Role::Idle;
        let new_rx = self.role[ri] == Role::Idle;
        let net = self.net;

        if new_tx {
            // Existing receivers in the guard zone of the new transmitter.
            let ok = self.rxs.near(pt, |j| {
                if j == rx.0 {
                    return true;
                }
                let pj = net.point(NodeId(j));
                if !self.interferes(pt, pj) {
                    return true;
                }
                // Under MPT_MPR the receiver decodes tx as long as it is in range.
                self.mode == Mode::MptMpr && pt.dist2(&pj) <= self.r2
            });
            if !ok {
                return false;
            }
        }
        if new_rx {
            let ok = self.txs.near(pr, |k| {
                if k == tx.0 {
                    return true;
                }
                let pk = net.point(NodeId(k));
                if !self.interferes(pk, pr) {
                    return true;
                }
                self.mode == Mode::MptMpr && pk.dist2(&pr) <= self.r2
            });
            if !ok {
                return false;
            }
        }
        // An existing receiver already has every nearby transmitter linked
        // to it, and the new transmitter is about to be.

        if new_tx {
            self.role[ti] = Role::Tx;
            self.txs.insert(tx.0, pt);
            self.touched.push(tx.0);
        }
        if new_rx {
            self.role[ri] = Role::Rx;
            self.rxs.insert(rx.0, pr);
            self.touched.push(rx.0);
        }
        self.out_deg[ti] += 1;
        self.in_deg[ri] += 1;
        self.explicit.insert(link);
        self.order.push(link);
        true
    }

    /// The admitted set as a [`TransmissionSet`], decode links included.
    pub fn to_transmission_set(&self) -> TransmissionSet {
        let mut ts =
            TransmissionSet::new(self.mode, self.range, self.delta).expect("delta checked");
        for &l in &self.order {
            ts.insert(l);
        }
        if self.mode == Mode::MptMpr {
            for &j in &self.touched {
                let j = NodeId(j);
                if self.role[j.index()] != Role::Rx {
                    continue;
                }
                let pj = self.net.point(j);
                self.txs.near(pj, |k| {
                    let pk = self.net.point(NodeId(k));
                    if self.interferes(pk, pj) {
                        ts.insert(Link {
                            tx: NodeId(k),
                            rx: j,
                        });
                    }
                    true
                });
            }
        }
        ts
    }

    /// Forgets every admitted link, keeping allocations.
    pub fn clear(&mut self) {
        for &i in &self.touched {
            let i = i as usize;
            self.role[i] = Role::Idle;
            self.out_deg[i] = 0;
            self.in_deg[i] = 0;
        }
        self.touched.clear();
        self.txs.clear();
        self.rxs.clear();
        self.explicit.clear();
        self.order.clear();
    }
}

/// Largest exhaustive instance accepted by [`max_feasible_brute`].
pub const BRUTE_FORCE_LIMIT: usize = 12;

/// Maximum-cardinality feasible set by exhaustive search.
///
/// A feasible set is pinned down by which nodes transmit and which receive:
/// every in-range (transmitter, receiver) pair inside the guard radius must
/// be a link, and no pair beyond the range can be. So the search walks all
/// `3^n` idle/transmit/receive assignments, takes every in-range pair of
/// the assignment, and keeps the largest set that [`is_feasible`] accepts.
/// Pairs at exactly `range` with `delta == 0` are always included.
pub fn max_feasible_brute(
    net: &NetworkInstance,
    mode: Mode,
    range: CommRange,
    delta: f64,
) -> Result<TransmissionSet> {
    let n = net.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeLimit {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let r2 = range.t() * range.t();
    let in_range: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| i != j && net.points()[i].dist2(&net.points()[j]) <= r2)
                .collect()
        })
        .collect();

    let mut best = TransmissionSet::new(mode, range, delta)?;
    let mut roles = vec![0u8; n];
    let total = 3usize.pow(n as u32);
    let mut links = Vec::new();
    for code in 0..total {
        let mut c = code;
        for r in roles.iter_mut() {
            *r = (c % 3) as u8;
            c /= 3;
        }
        let txs: Vec<usize> = (0..n).filter(|&i| roles[i] == 1).collect();
        let rxs: Vec<usize> = (0..n).filter(|&i| roles[i] == 2).collect();
        if txs.is_empty() || rxs.is_empty() {
            continue;
        }
        links.clear();
        for &k in &txs {
            for &j in &rxs {
                if in_range[k][j] {
                    links.push(Link {
                        tx: NodeId::from(k),
                        rx: NodeId::from(j),
                    });
                }
            }
        }
        if links.len() <= best.len() {
            continue;
        }
        // Every chosen node must actually take part in a link.
        let covered = txs.iter().all(|&k| links.iter().any(|l| l.tx.index() == k))
            && rxs.iter().all(|&j| links.iter().any(|l| l.rx.index() == j));
        if !covered {
            continue;
        }
        let ts = TransmissionSet::with_links(mode, range, delta, links.iter().copied())?;
        if is_feasible(&ts, net)? {
            best = ts;
        }
    }
    Ok(best)
}

/// Order-level bound on simultaneous transceptions per communication
/// region: 1, `n t^2`, `n t^2`, `n^2 t^4` (unit constants).
pub fn taa_upper_bound(mode: Mode, n: usize, t: f64) -> f64 {
    let nt2 = n as f64 * t * t;
    match mode {
        Mode::Ptp => 1.0,
        Mode::Mpt | Mode::Mpr => nt2,
        Mode::MptMpr => nt2 * nt2,
    }
}
