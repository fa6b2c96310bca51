//! Slot-level multicast throughput simulation and closed-form capacity
//! orders.
//!
//! Every session's packets flow down its routing tree cell by cell. A copy
//! that has reached relay vertex `y` may sit at any node of `y`'s cell;
//! from there it is sent either straight to the next vertex's node (for
//! destinations), to any node of the next vertex's cell (for relays), or,
//! when the holder is out of range of those, handed to `y`'s own node.
//!
//! In each slot the cells of the current TDMA group are active. Their
//! holders, longest queue first with ties by id, greedily request links for
//! their oldest packets;
//! a link is kept iff the slot's link set stays feasible for the mode.
//! Receptions take effect at the end of the slot.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::io::Write;

use crate::cells::{build_cell_graph_from, build_grid, build_schedule, CellId, Occupancy};
use crate::error::{Error, Result};
use crate::geom::{fmt_sig, generate_network, sub_seed, CommRange, NetworkInstance, NodeId};
use crate::protocol::{Admission, Mode};
use crate::scaling::mean_stderr;
use crate::trees::{random_sessions, MulticastSession, Router, RoutingTree, VertexKind};

/// Upper bound on the automatic warm-up.
pub const MAX_WARMUP: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub t: f64,
    pub delta: f64,
    pub m: usize,
    /// Every node sources a session; otherwise only node 0 does.
    pub every_node_source: bool,
    /// Measured slots, after warm-up.
    pub slots: usize,
    /// Warm-up slots; `None` runs until the network has delivered one full
    /// window per source, and at least `L^2 (5 + depth)` slots.
    pub warmup: Option<usize>,
    /// Outstanding packets per source; `None` picks [`SimConfig::auto_window`].
    pub window: Option<usize>,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(n: usize, t: f64, m: usize, seed: u64) -> Self {
        SimConfig {
            n,
            t,
            delta: 0.0,
            m,
            every_node_source: true,
            slots: 4 * 16,
            warmup: None,
            window: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        CommRange::new(self.t)?;
        let l = crate::cells::compute_l(self.delta)? as usize;
        if self.m == 0 {
            return Err(Error::invalid("m must be at least 1"));
        }
        if self.n <= self.m {
            return Err(Error::invalid(format!(
                "need n > m, got n = {}, m = {}",
                self.n, self.m
            )));
        }
        if self.slots < l * l {
            return Err(Error::invalid(format!(
                "measured slots {} shorter than one schedule cycle ({})",
                self.slots,
                l * l
            )));
        }
        if self.window == Some(0) {
            return Err(Error::invalid("window must be at least 1"));
        }
        Ok(())
    }

    /// Packets per source kept in flight when no window is set: four times
    /// a source's share of what its cell can send per activation. A cell of
    /// `k` nodes carries O(1) links under PTP, O(k) under MPT or MPR and
    /// O(k^2) under MPT_MPR.
    pub fn auto_window(&self, mode: Mode) -> usize {
        let per_cell = self.n as f64 * self.t * self.t / 2.0;
        match mode {
            Mode::Ptp => 1,
            Mode::Mpt | Mode::Mpr => 4,
            Mode::MptMpr => ((4.0 * per_cell).ceil() as usize).max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport {
    pub mode: Mode,
    pub config: SimConfig,
    /// Fully delivered packets per slot, per session, in the measured window.
    pub rates: Vec<f64>,
    pub mean: f64,
    pub injected: Vec<u64>,
    pub delivered: Vec<u64>,
    pub warmup: usize,
    pub window: usize,
    pub max_depth: usize,
}

impl ThroughputReport {
    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> Result<()> {
        if header {
            writeln!(w, "mode,nc,n,t,delta,m,seed,session_id,rate")?;
        }
        let c = &self.config;
        for (s, r) in self.rates.iter().enumerate() {
            writeln!(
                w,
                "{},false,{},{},{},{},{},{},{}",
                self.mode,
                c.n,
                fmt_sig(c.t, 12),
                fmt_sig(c.delta, 12),
                c.m,
                c.seed,
                s,
                fmt_sig(*r, 12)
            )?;
        }
        Ok(())
    }
}

/// Mean rate over seeds at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub mode: Mode,
    pub n: usize,
    pub t: f64,
    pub m: usize,
    pub mean_rate: f64,
    pub stderr: f64,
}

impl AggregateRow {
    pub fn from_reports(reports: &[ThroughputReport]) -> Result<Self> {
        let first = reports
            .first()
            .ok_or_else(|| Error::invalid("no reports to aggregate"))?;
        let means: Vec<f64> = reports.iter().map(|r| r.mean).collect();
        let (mean_rate, stderr) = mean_stderr(&means);
        Ok(AggregateRow {
            mode: first.mode,
            n: first.config.n,
            t: first.config.t,
            m: first.config.m,
            mean_rate,
            stderr,
        })
    }

    pub fn write_csv<W: Write>(rows: &[AggregateRow], mut w: W) -> Result<()> {
        writeln!(w, "mode,n,t,m,mean_rate,stderr")?;
        for r in rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.mode,
                r.n,
                fmt_sig(r.t, 12),
                r.m,
                fmt_sig(r.mean_rate, 12),
                fmt_sig(r.stderr, 12)
            )?;
        }
        Ok(())
    }
}

/// Generates the network and sessions from `config.seed` and simulates.
pub fn simulate(config: &SimConfig, mode: Mode) -> Result<ThroughputReport> {
    config.validate()?;
    let net = generate_network(config.n, config.seed)?;
    let mut sessions = random_sessions(&net, config.m, sub_seed(config.seed, 1))?;
    if !config.every_node_source {
        sessions.truncate(1);
    }
    simulate_on(&net, &sessions, config, mode)
}

/// Simulates fixed sessions on a fixed network; `config.n` and
/// `config.m` are taken from the inputs.
pub fn simulate_on(
    net: &NetworkInstance,
    sessions: &[MulticastSession],
    config: &SimConfig,
    mode: Mode,
) -> Result<ThroughputReport> {
    let mut config = *config;
    config.n = net.n();
    config.m = sessions.first().map_or(config.m, |s| s.m());
    config.validate()?;
    let grid = build_grid(config.t)?;
    let schedule = build_schedule(&grid, config.delta)?;
    let occ = Occupancy::new(net, &grid);
    let cell_graph = build_cell_graph_from(net, &occ, config.t);
    let router = Router::new(net, &grid, &cell_graph);
    let trees = sessions
        .iter()
        .map(|s| router.route(s))
        .collect::<Result<Vec<_>>>()?;
    let max_depth = trees.iter().map(RoutingTree::depth).max().unwrap_or(0);
    let cycle = schedule.num_slots() as usize;
    let min_warmup = cycle * (5 + max_depth);
    let window = config.window.unwrap_or_else(|| config.auto_window(mode));

    let active: Vec<Vec<CellId>> = (0..schedule.num_slots())
        .map(|s| {
            schedule
                .cells_in_slot(s)
                .into_iter()
                .filter(|&c| occ.is_occupied(c))
                .collect()
        })
        .collect();

    let mut engine = Engine {
        net,
        occ: &occ,
        trees: &trees,
        t2: config.t * config.t,
        admission: Admission::new(net, mode, CommRange::new(config.t)?, config.delta)?,
        holdings: vec![BTreeMap::new(); net.n()],
        load: vec![0; net.n()],
        reach_cache: HashMap::new(),
        packets: Vec::new(),
        free: Vec::new(),
        outstanding: vec![0; trees.len()],
        next_seq: vec![0; trees.len()],
        injected: vec![0; trees.len()],
        delivered: vec![0; trees.len()],
        measuring: false,
        completed: 0,
    };

    let turnover = (window * trees.len()) as u64;
    let mut slot = 0usize;
    let warmup = match config.warmup {
        Some(w) => w,
        None => loop {
            if (slot >= min_warmup && engine.completed >= turnover) || slot >= MAX_WARMUP {
                break slot;
            }
            engine.inject(slot as u32, window);
            engine.run_slot(&active[slot % cycle]);
            slot += 1;
        },
    };
    while slot < warmup {
        engine.inject(slot as u32, window);
        engine.run_slot(&active[slot % cycle]);
        slot += 1;
    }
    engine.measuring = true;
    for _ in 0..config.slots {
        engine.inject(slot as u32, window);
        engine.run_slot(&active[slot % cycle]);
        slot += 1;
    }
    let rates: Vec<f64> = engine
        .delivered
        .iter()
        .map(|&d| d as f64 / config.slots as f64)
        .collect();
    let mean = if rates.is_empty() {
        0.0
    } else {
        rates.iter().sum::<f64>() / rates.len() as f64
    };
    Ok(ThroughputReport {
        mode,
        config,
        rates,
        mean,
        injected: engine.injected,
        delivered: engine.delivered,
        warmup,
        window,
        max_depth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Target {
    /// The child's own node.
    Node(NodeId),
    /// Any node of the child's cell.
    Cell(CellId),
    /// A node of the holder's cell that is in range of this node.
    NearNode(NodeId),
    /// A node of the holder's cell that reaches this cell.
    NearCell(CellId),
}

impl Target {
    fn is_handoff(self) -> bool {
        matches!(self, Target::NearNode(_) | Target::NearCell(_))
    }
}

/// A packet copy waiting to cross tree edge `vertex -> child`.
/// Field order gives the age priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Entry {
    inject: u32,
    seq: u32,
    session: u32,
    pid: u32,
    vertex: u32,
    child: u32,
}

#[derive(Debug, Clone, Copy)]
struct Packet {
    session: u32,
    remaining: u32,
}

struct Transfer {
    rx: NodeId,
    entry: Entry,
    handoff: bool,
}

type Group = BinaryHeap<Reverse<Entry>>;

struct Engine<'a> {
    net: &'a NetworkInstance,
    occ: &'a Occupancy,
    trees: &'a [RoutingTree],
    t2: f64,
    admission: Admission<'a>,
    holdings: Vec<BTreeMap<Target, Group>>,
    /// Queued plus incoming copies per node.
    load: Vec<u32>,
    reach_cache: HashMap<(NodeId, CellId), bool>,
    packets: Vec<Packet>,
    free: Vec<u32>,
    outstanding: Vec<u32>,
    next_seq: Vec<u32>,
    injected: Vec<u64>,
    delivered: Vec<u64>,
    measuring: bool,
    completed: u64,
}

impl Engine<'_> {
    fn in_range(&self, a: NodeId, b: NodeId) -> bool {
        self.net.point(a).dist2(&self.net.point(b)) <= self.t2
    }

    fn inject(&mut self, slot: u32, window: usize) {
        for s in 0..self.trees.len() {
            while (self.outstanding[s] as usize) < window {
                let tree = &self.trees[s];
                let pkt = Packet {
                    session: s as u32,
                    remaining: tree.session().m() as u32,
                };
                let pid = match self.free.pop() {
                    Some(pid) => {
                        self.packets[pid as usize] = pkt;
                        pid
                    }
                    None => {
                        self.packets.push(pkt);
                        (self.packets.len() - 1) as u32
                    }
                };
                let seq = self.next_seq[s];
                self.next_seq[s] += 1;
                self.outstanding[s] += 1;
                self.injected[s] += 1;
                let root = Entry {
                    inject: slot,
                    seq,
                    session: s as u32,
                    pid,
                    vertex: 0,
                    child: 0,
                };
                self.arrive(tree.node(0), root, 0);
            }
        }
    }

    /// `holder` now has the copy for vertex `v`.
    fn arrive(&mut self, holder: NodeId, entry: Entry, v: usize) {
        let tree = &self.trees[entry.session as usize];
        if tree.kind(v) == VertexKind::Dest {
            debug_assert_eq!(holder, tree.node(v));
            let p = &mut self.packets[entry.pid as usize];
            p.remaining -= 1;
            if p.remaining == 0 {
                let s = p.session as usize;
                self.outstanding[s] -= 1;
                self.completed += 1;
                if self.measuring {
                    self.delivered[s] += 1;
                }
                self.free.push(entry.pid);
            }
        }
        for &c in tree.children(v) {
            let e = Entry {
                vertex: v as u32,
                child: c as u32,
                ..entry
            };
            self.place(holder, e);
        }
    }

    /// Queues `entry` at `holder`, or resolves it on the spot when the
    /// holder is the child's own node.
    fn place(&mut self, holder: NodeId, entry: Entry) {
        let tree = &self.trees[entry.session as usize];
        let z = entry.child as usize;
        let nz = tree.node(z);
        if holder == nz {
            self.arrive(holder, entry, z);
            return;
        }
        let target = if tree.kind(z) == VertexKind::Dest {
            if self.in_range(holder, nz) {
                Target::Node(nz)
            } else {
                Target::NearNode(nz)
            }
        } else {
            let cz = tree.cell(z);
            if self.reaches(holder, cz) {
                Target::Cell(cz)
            } else {
                Target::NearCell(cz)
            }
        };
        self.load[holder.index()] += 1;
        self.holdings[holder.index()]
            .entry(target)
            .or_default()
            .push(Reverse(entry));
    }

    fn reaches(&mut self, holder: NodeId, cell: CellId) -> bool {
        if let Some(&r) = self.reach_cache.get(&(holder, cell)) {
            return r;
        }
        let r = self
            .occ
            .members(cell)
            .iter()
            .any(|&w| w != holder && self.in_range(holder, w));
        self.reach_cache.insert((holder, cell), r);
        r
    }

    /// Receivers for `target` from `holder`, least loaded first so that
    /// copies spread over the cell.
    fn candidates(&mut self, holder: NodeId, target: Target) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = match target {
            Target::Node(w) => {
                return if self.in_range(holder, w) {
                    vec![w]
                } else {
                    Vec::new()
                };
            }
            Target::Cell(c) => self
                .occ
                .members(c)
                .iter()
                .copied()
                .filter(|&w| w != holder && self.in_range(holder, w))
                .collect(),
            Target::NearNode(z) => self
                .occ
                .members(self.occ.cell_of(holder))
                .iter()
                .copied()
                .filter(|&w| w != holder && self.in_range(w, z))
                .collect(),
            Target::NearCell(c) => {
                let own: Vec<NodeId> = self.occ.members(self.occ.cell_of(holder)).to_vec();
                own.into_iter()
                    .filter(|&w| w != holder && self.reaches(w, c))
                    .collect()
            }
        };
        // Inside the holder's own (active) cell, prefer receivers that already
        // receive or hold nothing: any other node would lose its turn.
        let own = self.occ.cell_of(holder);
        let blocking = |e: &Self, w: NodeId| {
            u8::from(
                e.occ.cell_of(w) == own
                    && !e.admission.is_receiver(w)
                    && !e.holdings[w.index()].is_empty(),
            )
        };
        if v.iter().any(|&w| blocking(self, w) == 0) {
            v.retain(|&w| blocking(self, w) == 0);
        }
        v.sort_by_key(|&w| (self.load[w.index()], w));
        v
    }

    fn run_slot(&mut self, active: &[CellId]) {
        self.admission.clear();
        let mut transfers = Vec::new();
        let mut order = Vec::new();
        for &cell in active {
            order.clear();
            order.extend(
                self.occ
                    .members(cell)
                    .iter()
                    .copied()
                    .filter(|h| !self.holdings[h.index()].is_empty()),
            );
            order.sort_by_key(|&h| (Reverse(self.load[h.index()]), h));
            for &h in &order {
                if self.holdings[h.index()].is_empty() || !self.admission.can_transmit(h) {
                    continue;
                }
                self.serve_holder(h, &mut transfers);
            }
        }
        for tr in transfers {
            self.load[tr.rx.index()] -= 1;
            if tr.handoff {
                self.place(tr.rx, tr.entry);
            } else {
                self.arrive(tr.rx, tr.entry, tr.entry.child as usize);
            }
        }
    }

    fn serve_holder(&mut self, h: NodeId, transfers: &mut Vec<Transfer>) {
        let mut groups = std::mem::take(&mut self.holdings[h.index()]);
        let mut order: BinaryHeap<Reverse<(Entry, Target)>> = groups
            .iter()
            .filter_map(|(&k, g)| g.peek().map(|e| Reverse((e.0, k))))
            .collect();
        let mut cursors: HashMap<Target, (Vec<NodeId>, usize)> = HashMap::new();
        while let Some(Reverse((_, target))) = order.pop() {
            if !self.admission.can_transmit(h) {
                break;
            }
            let (cands, pos) = cursors
                .entry(target)
                .or_insert_with(|| (self.candidates(h, target), 0));
            let mut sent = None;
            while *pos < cands.len() {
                let rx = cands[*pos];
                *pos += 1;
                if self.admission.try_admit(h, rx) {
                    sent = Some(rx);
                    break;
                }
            }
            let Some(rx) = sent else { continue };
            let group = groups.get_mut(&target).expect("group present");
            let Reverse(entry) = group.pop().expect("nonempty group");
            self.load[h.index()] -= 1;
            self.load[rx.index()] += 1;
            transfers.push(Transfer {
                rx,
                entry,
                handoff: target.is_handoff(),
            });
            if *pos < cands.len() {
                if let Some(next) = group.peek() {
                    order.push(Reverse((next.0, target)));
                }
            }
        }
        groups.retain(|_, g| !g.is_empty());
        self.holdings[h.index()] = groups;
    }
}

/// Order of the per-session multicast capacity with unit constants.
///
/// | mode | without NC | with NC |
/// |---|---|---|
/// | PTP | `1/(sqrt(m) n t)` | `1/(n t)` |
/// | MPT, MPR | `t` | `t` |
/// | MPT_MPR | `n t^3 / sqrt(m)` | `n t^3 / sqrt(m)` |
pub fn theoretical_capacity(mode: Mode, nc: bool, n: usize, t: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    let (n, sm) = (n as f64, (m as f64).sqrt());
    Ok(match mode {
        Mode::Ptp if nc => 1.0 / (n * t),
        Mode::Ptp => 1.0 / (sm * n * t),
        Mode::Mpt | Mode::Mpr => t,
        Mode::MptMpr => n * t.powi(3) / sm,
    })
}

/// Throughput gain of MPT_MPR over PTP, `n^2 t^4`.
pub fn gain_vs_ptp(n: usize, t: f64, m: usize) -> Result<f64> {
    Ok(theoretical_capacity(Mode::MptMpr, false, n, t, m)?
        / theoretical_capacity(Mode::Ptp, false, n, t, m)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;

    fn cfg(n: usize, t: f64, m: usize) -> SimConfig {
        SimConfig {
            slots: 160,
            ..SimConfig::new(n, t, m, 3)
        }
    }

    #[test]
    fn one_cell_pair_gets_one_link_per_cycle() {
        let net =
            NetworkInstance::from_points(vec![Point::new(0.1, 0.1), Point::new(0.12, 0.11)], 0)
                .unwrap();
        let s = vec![MulticastSession::new(0, NodeId(0), vec![NodeId(1)]).unwrap()];
        for mode in Mode::ALL {
            let mut c = cfg(2, 0.2, 1);
            c.window = Some(3);
            let r = simulate_on(&net, &s, &c, mode).unwrap();
            assert!(
                (r.rates[0] - 1.0 / 16.0).abs() < 1e-12,
                "{mode}: {}",
                r.rates[0]
            );
        }
    }

    #[test]
    fn deterministic_and_conserving() {
        let c = cfg(300, 0.2, 2);
        let a = simulate(&c, Mode::MptMpr).unwrap();
        let b = simulate(&c, Mode::MptMpr).unwrap();
        assert_eq!(a, b);
        for s in 0..a.rates.len() {
            assert!(a.delivered[s] <= a.injected[s]);
            assert!(a.rates[s] >= 0.0);
        }
        let mean = a.rates.iter().sum::<f64>() / a.rates.len() as f64;
        assert!((mean - a.mean).abs() < 1e-15);
        assert!(a.mean > 0.0);
    }

    #[test]
    fn rejects_short_window() {
        let mut c = cfg(100, 0.2, 2);
        c.slots = 10;
        assert!(simulate(&c, Mode::Ptp).is_err());
    }

    #[test]
    fn theory_examples() {
        for (n, t, m) in [(1000, 0.1, 1), (10_000, 0.05, 4), (500, 0.3, 9)] {
            assert_eq!(
                theoretical_capacity(Mode::MptMpr, true, n, t, m).unwrap(),
                theoretical_capacity(Mode::MptMpr, false, n, t, m).unwrap()
            );
        }
        let p = theoretical_capacity(Mode::Ptp, true, 10_000, 0.03035, 1).unwrap();
        assert!((p - 0.003295).abs() < 5e-7);
        let g = gain_vs_ptp(10_000, 0.03035, 3).unwrap();
        assert!((g - 84.86).abs() < 0.02);
        assert!(theoretical_capacity(Mode::Mpt, false, 10, 0.1, 0).is_err());
    }

    #[test]
    fn report_csv_layout() {
        let c = cfg(60, 0.4, 1);
        let r = simulate(&c, Mode::Ptp).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("mode,nc,n,t,delta,m,seed,session_id,rate")
        );
        assert!(lines
            .next()
            .unwrap()
            .starts_with("PTP,false,60,0.4,0,1,3,0,"));
        assert_eq!(text.lines().count(), 61);
    }
}
