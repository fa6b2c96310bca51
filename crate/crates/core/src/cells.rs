//! Cell grid, TDMA slot groups and the per-cell transceiver disks.
//!
//! The unit square is cut into square cells of side `t / sqrt 2`, so any
//! two nodes sharing a cell are within range of each other. Cells whose
//! column and row indices agree modulo `L` share a TDMA slot; with
//! `L = ceil(1 + sqrt 2 (2 + delta))` the transceiver disks of same-slot
//! cells never interfere.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::SQRT_2;
use std::io::Write;

use crate::error::{Error, Result};
use crate::geom::{connectivity_range, fmt_sig, CommRange, NetworkInstance, NodeId, Point};
use crate::protocol::{Link, Mode, TransmissionSet};

/// Column `i` (along x) and row `j` (along y) of a grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId {
    pub i: u32,
    pub j: u32,
}

impl CellId {
    pub fn new(i: u32, j: u32) -> Self {
        CellId { i, j }
    }

    /// Chebyshev distance in cells.
    pub fn chebyshev(self, other: CellId) -> u32 {
        self.i.abs_diff(other.i).max(self.j.abs_diff(other.j))
    }

    /// Manhattan distance in cells.
    pub fn manhattan(self, other: CellId) -> u32 {
        self.i.abs_diff(other.i) + self.j.abs_diff(other.j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGrid {
    t: f64,
    side: f64,
    dim: u32,
}

impl CellGrid {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn cols(&self) -> u32 {
        self.dim
    }

    pub fn rows(&self) -> u32 {
        self.dim
    }

    pub fn num_cells(&self) -> usize {
        (self.dim * self.dim) as usize
    }

    /// Cell containing `p`; points on the far edge of the square fall in the
    /// last column/row.
    pub fn cell_of(&self, p: Point) -> CellId {
        let f = |v: f64| ((v / self.side) as u32).min(self.dim - 1);
        CellId::new(f(p.x), f(p.y))
    }

    pub fn index(&self, c: CellId) -> usize {
        (c.j * self.dim + c.i) as usize
    }

    pub fn cell_at(&self, index: usize) -> CellId {
        CellId::new(index as u32 % self.dim, index as u32 / self.dim)
    }

    pub fn contains(&self, i: i64, j: i64) -> bool {
        i >= 0 && j >= 0 && i < self.dim as i64 && j < self.dim as i64
    }

    /// Centre of the full (unclipped) cell square.
    pub fn center(&self, c: CellId) -> Point {
        Point::new(
            (c.i as f64 + 0.5) * self.side,
            (c.j as f64 + 0.5) * self.side,
        )
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.num_cells()).map(|k| self.cell_at(k))
    }
}

pub fn build_grid(t: f64) -> Result<CellGrid> {
    CommRange::new(t)?;
    let side = t / SQRT_2;
    // Snap away round-off so t = sqrt 2 gives exactly one cell.
    let ratio = 1.0 / side;
    let dim = if (ratio - ratio.round()).abs() < 1e-9 {
        ratio.round()
    } else {
        ratio.ceil()
    } as u32;
    Ok(CellGrid {
        t,
        side,
        dim: dim.max(1),
    })
}

/// Node membership of each cell, ids ascending.
#[derive(Debug, Clone)]
pub struct Occupancy {
    grid: CellGrid,
    members: Vec<Vec<NodeId>>,
    cell_of: Vec<CellId>,
}

impl Occupancy {
    pub fn new(net: &NetworkInstance, grid: &CellGrid) -> Self {
        let mut members = vec![Vec::new(); grid.num_cells()];
        let mut cell_of = Vec::with_capacity(net.n());
        for id in net.ids() {
            let c = grid.cell_of(net.point(id));
            members[grid.index(c)].push(id);
            cell_of.push(c);
        }
        Occupancy {
            grid: *grid,
            members,
            cell_of,
        }
    }

    pub fn grid(&self) -> &CellGrid {
        &self.grid
    }

    pub fn members(&self, c: CellId) -> &[NodeId] {
        &self.members[self.grid.index(c)]
    }

    pub fn cell_of(&self, id: NodeId) -> CellId {
        self.cell_of[id.index()]
    }

    pub fn is_occupied(&self, c: CellId) -> bool {
        !self.members(c).is_empty()
    }

    pub fn occupied(&self) -> impl Iterator<Item = CellId> + '_ {
        self.grid.cells().filter(|&c| self.is_occupied(c))
    }

    /// Cells within `reach` cells of `c` in both axes, clipped to the grid.
    pub fn block(&self, c: CellId, reach: u32) -> impl Iterator<Item = CellId> + '_ {
        let dim = self.grid.dim;
        let lo = move |v: u32| v.saturating_sub(reach);
        let hi = move |v: u32| (v + reach).min(dim - 1);
        (lo(c.j)..=hi(c.j)).flat_map(move |j| (lo(c.i)..=hi(c.i)).map(move |i| CellId::new(i, j)))
    }
}

pub fn compute_l(delta: f64) -> Result<u32> {
    if !(delta >= 0.0) {
        return Err(Error::invalid(format!("delta {delta} must be >= 0")));
    }
    Ok((1.0 + SQRT_2 * (2.0 + delta)).ceil() as u32)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdmaSchedule {
    l: u32,
    grid: CellGrid,
}

impl TdmaSchedule {
    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn num_slots(&self) -> u32 {
        self.l * self.l
    }

    pub fn slot_of(&self, c: CellId) -> u32 {
        (c.i % self.l) * self.l + (c.j % self.l)
    }

    pub fn cells_in_slot(&self, slot: u32) -> Vec<CellId> {
        self.grid
            .cells()
            .filter(|&c| self.slot_of(c) == slot)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "cell_i,cell_j,slot")?;
        for c in self.grid.cells() {
            writeln!(w, "{},{},{}", c.i, c.j, self.slot_of(c))?;
        }
        Ok(())
    }
}

pub fn build_schedule(grid: &CellGrid, delta: f64) -> Result<TdmaSchedule> {
    Ok(TdmaSchedule {
        l: compute_l(delta)?,
        grid: *grid,
    })
}

/// Occupied cells, joined when some pair of their nodes is within range.
#[derive(Debug, Clone, Default)]
pub struct CellGraph {
    adjacency: BTreeMap<CellId, BTreeSet<CellId>>,
}

impl CellGraph {
    pub fn vertices(&self) -> impl Iterator<Item = CellId> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn contains(&self, c: CellId) -> bool {
        self.adjacency.contains_key(&c)
    }

    pub fn neighbors(&self, c: CellId) -> impl Iterator<Item = CellId> + '_ {
        self.adjacency.get(&c).into_iter().flatten().copied()
    }

    pub fn has_edge(&self, a: CellId, b: CellId) -> bool {
        self.adjacency.get(&a).is_some_and(|s| s.contains(&b))
    }

    pub fn edges(&self) -> impl Iterator<Item = (CellId, CellId)> + '_ {
        self.adjacency
            .iter()
            .flat_map(|(&a, s)| s.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
    }

    pub fn num_edges(&self) -> usize {
        self.edges().count()
    }

    pub fn is_connected(&self) -> bool {
        let cells: Vec<CellId> = self.vertices().collect();
        if cells.len() <= 1 {
            return true;
        }
        let pos: BTreeMap<CellId, usize> = cells.iter().enumerate().map(|(k, &c)| (c, k)).collect();
        let mut dsu = DisjointSets::new(cells.len());
        for (a, b) in self.edges() {
            dsu.union(pos[&a], pos[&b]);
        }
        dsu.components() == 1
    }
}

pub fn build_cell_graph(net: &NetworkInstance, grid: &CellGrid, t: f64) -> CellGraph {
    let occ = Occupancy::new(net, grid);
    build_cell_graph_from(net, &occ, t)
}

pub(crate) fn build_cell_graph_from(net: &NetworkInstance, occ: &Occupancy, t: f64) -> CellGraph {
    let t2 = t * t;
    let mut adjacency: BTreeMap<CellId, BTreeSet<CellId>> = BTreeMap::new();
    // A pair within t can sit at most two cells apart per axis (side = t/sqrt 2).
    let reach = (t / occ.grid.side).ceil() as u32;
    for a in occ.occupied() {
        adjacency.entry(a).or_default();
        for b in occ.block(a, reach) {
            if b <= a || !occ.is_occupied(b) {
                continue;
            }
            let linked = occ.members(a).iter().any(|&u| {
                let pu = net.point(u);
                occ.members(b)
                    .iter()
                    .any(|&v| net.point(v).dist2(&pu) <= t2)
            });
            if linked {
                adjacency.entry(a).or_default().insert(b);
                adjacency.entry(b).or_default().insert(a);
            }
        }
    }
    CellGraph { adjacency }
}

/// Split axis for a transceiver disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitAxis {
    /// Split by the vertical line through the centre: left transmits.
    Vertical,
    /// Split by the horizontal line through the centre: below transmits.
    Horizontal,
}

/// Transmitters and receivers of the disk of radius `t/2` around `center`.
/// Nodes exactly on the split line go to the transmitter side.
pub(crate) fn split_disk(
    net: &NetworkInstance,
    candidates: impl Iterator<Item = NodeId>,
    center: Point,
    t: f64,
    axis: SplitAxis,
) -> (Vec<NodeId>, Vec<NodeId>) {
    let r2 = (t / 2.0) * (t / 2.0);
    let mut txs = Vec::new();
    let mut rxs = Vec::new();
    for id in candidates {
        let p = net.point(id);
        if p.dist2(&center) > r2 {
            continue;
        }
        let (v, c) = match axis {
            SplitAxis::Vertical => (p.x, center.x),
            SplitAxis::Horizontal => (p.y, center.y),
        };
        if v <= c {
            txs.push(id);
        } else {
            rxs.push(id);
        }
    }
    txs.sort_unstable();
    rxs.sort_unstable();
    (txs, rxs)
}

pub(crate) fn bipartite_links<'a>(
    txs: &'a [NodeId],
    rxs: &'a [NodeId],
) -> impl Iterator<Item = Link> + 'a {
    txs.iter()
        .flat_map(move |&tx| rxs.iter().map(move |&rx| Link { tx, rx }))
}

/// Complete bipartite `MptMpr` set inside the disk of radius `t/2` around
/// `center`: nodes left of (or on) the vertical line through `center`
/// transmit to every node right of it.
///
/// Centres closer than `t/2` to the border are accepted; the disk is then
/// clipped by the square and holds fewer nodes.
pub fn disk_bipartite_assignment(
    net: &NetworkInstance,
    center: Point,
    t: f64,
) -> Result<TransmissionSet> {
    let range = CommRange::new(t)?;
    let (txs, rxs) = split_disk(net, net.ids(), center, t, SplitAxis::Vertical);
    TransmissionSet::with_links(Mode::MptMpr, range, 0.0, bipartite_links(&txs, &rxs))
}

/// Per-slot simultaneous link counts of the disk construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotLinks {
    /// Slot with the most links (lowest index on ties).
    pub best_slot: u32,
    /// Links in `best_slot`.
    pub links: usize,
    /// Link total for every slot.
    pub per_slot: Vec<usize>,
    /// Link count of every disk, over all slots.
    pub per_disk: Vec<usize>,
}

impl SlotLinks {
    pub fn mean_per_disk(&self) -> f64 {
        if self.per_disk.is_empty() {
            return 0.0;
        }
        self.per_disk.iter().sum::<usize>() as f64 / self.per_disk.len() as f64
    }

    pub fn write_csv<W: Write>(
        &self,
        mut w: W,
        n: usize,
        t: f64,
        delta: f64,
        header: bool,
    ) -> Result<()> {
        if header {
            writeln!(w, "n,t,delta,slot,links")?;
        }
        for (slot, links) in self.per_slot.iter().enumerate() {
            writeln!(w, "{n},{},{delta},{slot},{links}", fmt_sig(t, 12))?;
        }
        Ok(())
    }
}

/// The union of disk assignments over one slot's occupied cells, in
/// `mode` (the disk construction is built for `MptMpr`).
pub fn slot_transmission_set(
    net: &NetworkInstance,
    occ: &Occupancy,
    schedule: &TdmaSchedule,
    slot: u32,
    delta: f64,
) -> Result<TransmissionSet> {
    let grid = occ.grid();
    let t = grid.t();
    let mut ts = TransmissionSet::new(Mode::MptMpr, CommRange::new(t)?, delta)?;
    for c in schedule.cells_in_slot(slot) {
        if !occ.is_occupied(c) {
            continue;
        }
        let candidates = occ.block(c, 1).flat_map(|b| occ.members(b).iter().copied());
        let (txs, rxs) = split_disk(net, candidates, grid.center(c), t, SplitAxis::Vertical);
        for l in bipartite_links(&txs, &rxs) {
            ts.insert(l);
        }
    }
    Ok(ts)
}

/// Disk links in every TDMA slot; one disk per occupied cell, at its centre.
pub fn simultaneous_links(net: &NetworkInstance, t: f64, delta: f64) -> Result<SlotLinks> {
    if net.n() >= 2 {
        let floor = connectivity_range(net.n(), 1.0)?;
        if t < floor {
            return Err(Error::invalid(format!(
                "t = {t} below the connectivity range {floor:.5}"
            )));
        }
    }
    let grid = build_grid(t)?;
    let schedule = build_schedule(&grid, delta)?;
    let occ = Occupancy::new(net, &grid);
    let mut per_slot = vec![0usize; schedule.num_slots() as usize];
    let mut per_disk = Vec::new();
    for c in grid.cells() {
        if !occ.is_occupied(c) {
            continue;
        }
        let candidates = occ.block(c, 1).flat_map(|b| occ.members(b).iter().copied());
        let (txs, rxs) = split_disk(net, candidates, grid.center(c), t, SplitAxis::Vertical);
        let k = txs.len() * rxs.len();
        per_slot[schedule.slot_of(c) as usize] += k;
        per_disk.push(k);
    }
    let (best_slot, links) =
        per_slot
            .iter()
            .enumerate()
            .fold((0, 0), |acc, (s, &k)| if k > acc.1 { (s, k) } else { acc });
    Ok(SlotLinks {
        best_slot: best_slot as u32,
        links,
        per_slot,
        per_disk,
    })
}

/// Simultaneous links in the busiest slot of the disk construction.
pub fn count_simultaneous_links(net: &NetworkInstance, t: f64, delta: f64) -> Result<usize> {
    Ok(simultaneous_links(net, t, delta)?.links)
}

#[derive(Debug, Clone)]
pub(crate) struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        match self.rank[a].cmp(&self.rank[b]) {
            std::cmp::Ordering::Less => self.parent[a] = b,
            std::cmp::Ordering::Greater => self.parent[b] = a,
            std::cmp::Ordering::Equal => {
                self.parent[b] = a;
                self.rank[a] += 1;
            }
        }
        true
    }

    pub(crate) fn components(&mut self) -> usize {
        (0..self.parent.len())
            .filter(|&x| self.find(x) == x)
            .count()
    }
}
