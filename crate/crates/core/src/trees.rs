//! Multicast sessions, Euclidean minimum spanning trees and cell-routed
//! multicast trees.
//!
//! A session's routing tree follows the EMST of its source and
//! destinations. Each EMST edge is walked as a staircase of axis-adjacent
//! cells; in every cell the lowest-id node within range of the previous
//! hop becomes the relay.

use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::io::Write;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cells::{CellGraph, CellGrid, CellId, DisjointSets, Occupancy};
use crate::error::{Error, Result};
use crate::geom::{fmt_sig, sub_seed, union_of_disks_area, NetworkInstance, NodeId, Point};
use crate::scaling::{fit_samples, ScalingResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MulticastSession {
    pub id: usize,
    pub source: NodeId,
    pub destinations: Vec<NodeId>,
}

impl MulticastSession {
    pub fn new(id: usize, source: NodeId, destinations: Vec<NodeId>) -> Result<Self> {
        if destinations.is_empty() {
            return Err(Error::invalid(format!("session {id} has no destinations")));
        }
        let mut seen = BTreeSet::new();
        seen.insert(source);
        for &d in &destinations {
            if !seen.insert(d) {
                return Err(Error::invalid(format!(
                    "session {id}: node {d} repeated among source and destinations"
                )));
            }
        }
        Ok(MulticastSession {
            id,
            source,
            destinations,
        })
    }

    pub fn m(&self) -> usize {
        self.destinations.len()
    }

    /// Source first, then destinations.
    pub fn members(&self) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::once(self.source).chain(self.destinations.iter().copied())
    }
}

/// One session per node: node `i` multicasts to `m` other nodes drawn
/// uniformly without replacement. Destinations are listed in id order.
pub fn random_sessions(
    net: &NetworkInstance,
    m: usize,
    seed: u64,
) -> Result<Vec<MulticastSession>> {
    let n = net.n();
    if m == 0 || m >= n {
        return Err(Error::invalid(format!(
            "need 1 <= m < n, got m = {m}, n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|s| {
            let mut dests: Vec<NodeId> = sample(&mut rng, n - 1, m)
                .into_iter()
                .map(|k| NodeId::from(if k >= s { k + 1 } else { k }))
                .collect();
            dests.sort_unstable();
            MulticastSession::new(s, NodeId::from(s), dests)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanTree {
    pub vertices: Vec<Point>,
    /// `(parent, child)` pairs, rooted at vertex 0.
    pub edges: Vec<(usize, usize)>,
    pub total_length: f64,
}

impl EuclideanTree {
    pub fn recomputed_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|&(a, b)| self.vertices[a].distance(&self.vertices[b]))
            .sum()
    }

    /// Whether `edges` form a spanning tree of `vertices`.
    pub fn is_spanning_tree(&self) -> bool {
        let k = self.vertices.len();
        if self.edges.len() + 1 != k {
            return false;
        }
        let mut dsu = DisjointSets::new(k);
        self.edges
            .iter()
            .all(|&(a, b)| a < k && b < k && dsu.union(a, b))
    }
}

/// Exact EMST by Prim's algorithm on the complete graph, `O(k^2)`.
/// Ties go to the lowest vertex index.
pub fn emst(points: &[Point]) -> Result<EuclideanTree> {
    let k = points.len();
    if k == 0 {
        return Err(Error::invalid("emst needs at least one point"));
    }
    let mut in_tree = vec![false; k];
    let mut best = vec![f64::INFINITY; k];
    let mut link = vec![0usize; k];
    let mut edges = Vec::with_capacity(k - 1);
    let mut total = 0.0;
    in_tree[0] = true;
    for v in 1..k {
        best[v] = points[0].dist2(&points[v]);
    }
    for _ in 1..k {
        let mut pick = usize::MAX;
        for v in 0..k {
            if !in_tree[v] && (pick == usize::MAX || best[v] < best[pick]) {
                pick = v;
            }
        }
        in_tree[pick] = true;
        edges.push((link[pick], pick));
        total += points[link[pick]].distance(&points[pick]);
        for v in 0..k {
            if !in_tree[v] {
                let d = points[pick].dist2(&points[v]);
                if d < best[v] {
                    best[v] = d;
                    link[v] = pick;
                }
            }
        }
    }
    Ok(EuclideanTree {
        vertices: points.to_vec(),
        edges,
        total_length: total,
    })
}

pub(crate) fn random_points<R: Rng>(k: usize, rng: &mut R) -> Vec<Point> {
    (0..k)
        .map(|_| {
            let x: f64 = rng.gen();
            let y: f64 = rng.gen();
            Point::new(x, y)
        })
        .collect()
}

/// EMST length of `m` uniform points; trial `k` of a study seeded `seed`.
pub fn emst_trial_length(m: usize, seed: u64, trial: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, ((m as u64) << 32) | trial as u64));
    emst(&random_points(m, &mut rng)).map(|t| t.total_length)
}

/// Mean EMST length of `m` uniform points, per `m`, with the log-log fit.
pub fn emst_scaling_study(ms: &[usize], trials: usize, seed: u64) -> Result<ScalingResult> {
    if trials < 30 {
        return Err(Error::invalid(format!(
            "need at least 30 trials, got {trials}"
        )));
    }
    if let Some(&m) = ms.iter().find(|&&m| m < 2) {
        return Err(Error::invalid(format!("emst study needs m >= 2, got {m}")));
    }
    let samples: Vec<Vec<f64>> = ms
        .iter()
        .map(|&m| {
            (0..trials)
                .map(|trial| emst_trial_length(m, seed, trial))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = ms.iter().map(|&m| m as f64).collect();
    fit_samples(&xs, &samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexKind {
    Source,
    Relay,
    Dest,
}

impl VertexKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VertexKind::Source => "source",
            VertexKind::Relay => "relay",
            VertexKind::Dest => "dest",
        }
    }
}

impl fmt::Display for VertexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Node-level multicast tree rooted at the session source (vertex 0).
///
/// A destination that also forwards for others keeps the `Dest` kind.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingTree {
    session: MulticastSession,
    nodes: Vec<NodeId>,
    points: Vec<Point>,
    cells: Vec<CellId>,
    kinds: Vec<VertexKind>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
}

impl RoutingTree {
    pub fn session(&self) -> &MulticastSession {
        &self.session
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, v: usize) -> NodeId {
        self.nodes[v]
    }

    pub fn point(&self, v: usize) -> Point {
        self.points[v]
    }

    pub fn cell(&self, v: usize) -> CellId {
        self.cells[v]
    }

    pub fn kind(&self, v: usize) -> VertexKind {
        self.kinds[v]
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn vertex_of(&self, id: NodeId) -> Option<usize> {
        self.nodes.iter().position(|&x| x == id)
    }

    /// `(parent, child)` vertex pairs in child order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).filter_map(|v| self.parent[v].map(|p| (p, v)))
    }

    pub fn relay_nodes(&self) -> Vec<NodeId> {
        (0..self.len())
            .filter(|&v| self.kinds[v] == VertexKind::Relay)
            .map(|v| self.nodes[v])
            .collect()
    }

    /// Distinct cells holding relays, in cell order.
    pub fn relay_cells(&self) -> Vec<CellId> {
        (0..self.len())
            .filter(|&v| self.kinds[v] == VertexKind::Relay)
            .map(|v| self.cells[v])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Hops on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.len()];
        let mut best = 0;
        // Parents are always created before their children.
        for v in 1..self.len() {
            depth[v] = depth[self.parent[v].expect("non-root vertex has a parent")] + 1;
            best = best.max(depth[v]);
        }
        best
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges()
            .map(|(a, b)| self.points[a].distance(&self.points[b]))
            .fold(0.0, f64::max)
    }

    pub fn spans_session(&self) -> bool {
        self.session
            .members()
            .all(|id| self.vertex_of(id).is_some())
    }

    /// One row per edge; `kind` is the kind of the edge's child vertex.
    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> Result<()> {
        if header {
            writeln!(w, "edge_src_x,edge_src_y,edge_dst_x,edge_dst_y,kind")?;
        }
        for (a, b) in self.edges() {
            let (p, q) = (self.points[a], self.points[b]);
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_sig(p.x, 12),
                fmt_sig(p.y, 12),
                fmt_sig(q.x, 12),
                fmt_sig(q.y, 12),
                self.kinds[b]
            )?;
        }
        Ok(())
    }
}

/// Reusable routing state for one network and range.
#[derive(Debug, Clone)]
pub struct Router<'a> {
    net: &'a NetworkInstance,
    occ: Occupancy,
    t2: f64,
    component: HashMap<CellId, usize>,
}

impl<'a> Router<'a> {
    pub fn new(net: &'a NetworkInstance, grid: &CellGrid, cell_graph: &CellGraph) -> Self {
        let occ = Occupancy::new(net, grid);
        let mut component = HashMap::new();
        let mut label = 0;
        for start in cell_graph.vertices() {
            if component.contains_key(&start) {
                continue;
            }
            let mut queue = VecDeque::from([start]);
            component.insert(start, label);
            while let Some(c) = queue.pop_front() {
                for d in cell_graph.neighbors(c) {
                    if let Entry::Vacant(e) = component.entry(d) {
                        e.insert(label);
                        queue.push_back(d);
                    }
                }
            }
            label += 1;
        }
        let t = grid.t();
        Router {
            net,
            occ,
            t2: t * t,
            component,
        }
    }

    pub fn occupancy(&self) -> &Occupancy {
        &self.occ
    }

    pub fn route(&self, session: &MulticastSession) -> Result<RoutingTree> {
        let fail = |reason: String| Error::RoutingFailure {
            session: session.id,
            reason,
        };
        for id in session.members() {
            if id.index() >= self.net.n() {
                return Err(fail(format!("node {id} not in the network")));
            }
        }
        let root = self.component.get(&self.occ.cell_of(session.source));
        for d in &session.destinations {
            if self.component.get(&self.occ.cell_of(*d)) != root {
                return Err(fail(format!("destination {d} unreachable from the source")));
            }
        }

        let members: Vec<NodeId> = session.members().collect();
        let pts: Vec<Point> = members.iter().map(|&id| self.net.point(id)).collect();
        let mst = emst(&pts)?;
        let mut adj = vec![Vec::new(); members.len()];
        for &(a, b) in &mst.edges {
            adj[a].push(b);
            adj[b].push(a);
        }

        let mut b = Builder::new(self, session.clone());
        b.add(session.source, None, VertexKind::Source);
        let mut seen = vec![false; members.len()];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(a) = queue.pop_front() {
            let mut next = adj[a].clone();
            next.sort_unstable();
            for c in next {
                if seen[c] {
                    continue;
                }
                seen[c] = true;
                let from = b.index[&members[a]];
                b.walk(from, members[c]).map_err(&fail)?;
                queue.push_back(c);
            }
        }
        Ok(b.finish())
    }

    /// Breadth-first path of range-`t` hops from `u` to `target`,
    /// excluding `u`.
    fn shortest_path(&self, u: NodeId, target: NodeId) -> Option<Vec<NodeId>> {
        let mut prev: HashMap<NodeId, NodeId> = HashMap::new();
        prev.insert(u, u);
        let mut queue = VecDeque::from([u]);
        while let Some(a) = queue.pop_front() {
            if a == target {
                let mut path = vec![a];
                let mut c = a;
                while prev[&c] != u {
                    c = prev[&c];
                    path.push(c);
                }
                path.reverse();
                return Some(path);
            }
            let pa = self.net.point(a);
            let near: Vec<NodeId> = self
                .occ
                .block(self.occ.cell_of(a), 2)
                .flat_map(|c| self.occ.members(c).iter().copied())
                .filter(|&w| self.net.point(w).dist2(&pa) <= self.t2)
                .collect();
            for w in near {
                if let Entry::Vacant(e) = prev.entry(w) {
                    e.insert(a);
                    queue.push_back(w);
                }
            }
        }
        None
    }

    /// Next relay from `u` toward `target`, if any.
    fn next_hop(&self, u: NodeId, target: NodeId) -> Option<NodeId> {
        let pu = self.net.point(u);
        let pv = self.net.point(target);
        let cu = self.occ.cell_of(u);
        let cv = self.occ.cell_of(target);
        let within = |c: CellId| {
            self.occ
                .members(c)
                .iter()
                .copied()
                .find(|&w| w != u && self.net.point(w).dist2(&pu) <= self.t2)
        };

        // Staircase: step along the axis with more cells left, x first.
        let di = cv.i as i64 - cu.i as i64;
        let dj = cv.j as i64 - cu.j as i64;
        let step = if di.abs() >= dj.abs() {
            CellId::new((cu.i as i64 + di.signum()) as u32, cu.j)
        } else {
            CellId::new(cu.i, (cu.j as i64 + dj.signum()) as u32)
        };
        if let Some(w) = within(step) {
            return Some(w);
        }

        // Empty or out-of-reach cell: any cell closer to the target.
        let here = cu.manhattan(cv);
        let mut closer: Vec<CellId> = self
            .occ
            .block(cu, 2)
            .filter(|c| c.manhattan(cv) < here)
            .collect();
        closer.sort_by_key(|c| (c.manhattan(cv), c.chebyshev(cu), c.j, c.i));
        if let Some(w) = closer.into_iter().find_map(within) {
            return Some(w);
        }

        // Geographic fallback: the in-range node nearest the target.
        let du = pu.dist2(&pv);
        self.occ
            .block(cu, 2)
            .flat_map(|c| self.occ.members(c).iter().copied())
            .filter(|&w| w != u && self.net.point(w).dist2(&pu) <= self.t2)
            .map(|w| (self.net.point(w).dist2(&pv), w))
            .filter(|&(d, _)| d < du)
            .min_by(|a, b| a.partial_cmp(b).expect("finite distances"))
            .map(|(_, w)| w)
    }
}

struct Builder<'r, 'a> {
    router: &'r Router<'a>,
    session: MulticastSession,
    nodes: Vec<NodeId>,
    kinds: Vec<VertexKind>,
    parent: Vec<Option<usize>>,
    index: HashMap<NodeId, usize>,
}

impl<'r, 'a> Builder<'r, 'a> {
    fn new(router: &'r Router<'a>, session: MulticastSession) -> Self {
        Builder {
            router,
            session,
            nodes: Vec::new(),
            kinds: Vec::new(),
            parent: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn add(&mut self, id: NodeId, parent: Option<usize>, kind: VertexKind) -> usize {
        let v = self.nodes.len();
        self.nodes.push(id);
        self.kinds.push(kind);
        self.parent.push(parent);
        self.index.insert(id, v);
        v
    }

    fn walk(&mut self, from: usize, target: NodeId) -> std::result::Result<(), String> {
        let net = self.router.net;
        let grid = self.router.occ.grid();
        let pv = net.point(target);
        let cap = 4 * (grid.cols() + grid.rows()) as usize + 16;
        let mut u = from;
        for _ in 0..cap {
            if let Some(&v) = self.index.get(&target) {
                self.kinds[v] = VertexKind::Dest;
                return Ok(());
            }
            let pu = net.point(self.nodes[u]);
            if pu.dist2(&pv) <= self.router.t2 {
                self.add(target, Some(u), VertexKind::Dest);
                return Ok(());
            }
            let Some(w) = self.router.next_hop(self.nodes[u], target) else {
                return self.follow_shortest(u, target);
            };
            u = self.step(u, w);
        }
        self.follow_shortest(u, target)
    }

    fn step(&mut self, u: usize, w: NodeId) -> usize {
        match self.index.get(&w) {
            Some(&iw) => iw,
            None => self.add(w, Some(u), VertexKind::Relay),
        }
    }

    /// Fallback when the greedy walk stalls: fewest-hop path over range-`t`
    /// hops.
    fn follow_shortest(&mut self, mut u: usize, target: NodeId) -> std::result::Result<(), String> {
        let from = self.nodes[u];
        let Some(path) = self.router.shortest_path(from, target) else {
            return Err(format!("no path from node {from} toward {target}"));
        };
        for w in path {
            if w == target {
                match self.index.get(&target) {
                    Some(&v) => self.kinds[v] = VertexKind::Dest,
                    None => {
                        self.add(target, Some(u), VertexKind::Dest);
                    }
                }
                return Ok(());
            }
            u = self.step(u, w);
        }
        unreachable!("paths end at their target")
    }

    fn finish(self) -> RoutingTree {
        let net = self.router.net;
        let occ = &self.router.occ;
        let mut children = vec![Vec::new(); self.nodes.len()];
        for (v, p) in self.parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(v);
            }
        }
        RoutingTree {
            points: self.nodes.iter().map(|&id| net.point(id)).collect(),
            cells: self.nodes.iter().map(|&id| occ.cell_of(id)).collect(),
            session: self.session,
            nodes: self.nodes,
            kinds: self.kinds,
            parent: self.parent,
            children,
        }
    }
}

/// Routes one session. For many sessions over the same network, build a
/// [`Router`] once instead.
pub fn route_session(
    session: &MulticastSession,
    net: &NetworkInstance,
    grid: &CellGrid,
    cell_graph: &CellGraph,
) -> Result<RoutingTree> {
    Router::new(net, grid, cell_graph).route(session)
}

/// Distinct cells holding a tree vertex.
pub fn memtc_count(tree: &RoutingTree, grid: &CellGrid) -> usize {
    (0..tree.len())
        .map(|v| grid.cell_of(tree.point(v)))
        .collect::<BTreeSet<_>>()
        .len()
}

/// Area of the union of range-`t` disks around the source and the relays.
/// Destinations are left out even when they forward.
pub fn mamt_area(tree: &RoutingTree, t: f64, resolution: usize) -> Result<f64> {
    let centers: Vec<Point> = (0..tree.len())
        .filter(|&v| tree.kind(v) != VertexKind::Dest)
        .map(|v| tree.point(v))
        .collect();
    union_of_disks_area(&centers, t, resolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::{build_cell_graph, build_grid};
    use crate::geom::generate_network;

    #[test]
    fn emst_trivial_cases() {
        let one = emst(&[Point::new(0.0, 0.0)]).unwrap();
        assert_eq!(one.edges.len(), 0);
        assert_eq!(one.total_length, 0.0);
        let two = emst(&[Point::new(0.0, 0.0), Point::new(1.0, 1.0)]).unwrap();
        assert_eq!(two.edges, vec![(0, 1)]);
        assert!((two.total_length - 2f64.sqrt()).abs() < 1e-15);
        assert!(emst(&[]).is_err());
    }

    #[test]
    fn emst_square_with_centre() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(0.5, 0.5),
        ];
        let t = emst(&pts).unwrap();
        assert!(t.is_spanning_tree());
        assert!((t.total_length - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((t.recomputed_length() - t.total_length).abs() < 1e-12);
    }

    #[test]
    fn sessions_are_valid() {
        let net = generate_network(50, 1).unwrap();
        let s = random_sessions(&net, 3, 9).unwrap();
        assert_eq!(s.len(), 50);
        for (i, x) in s.iter().enumerate() {
            assert_eq!(x.source, NodeId::from(i));
            assert_eq!(x.m(), 3);
            assert!(!x.destinations.contains(&x.source));
        }
        assert_eq!(s, random_sessions(&net, 3, 9).unwrap());
        assert!(random_sessions(&net, 50, 9).is_err());
        assert!(MulticastSession::new(0, NodeId(1), vec![NodeId(1)]).is_err());
        assert!(MulticastSession::new(0, NodeId(1), vec![]).is_err());
    }

    #[test]
    fn single_cell_session_has_no_relays() {
        let net = NetworkInstance::from_points(
            vec![
                Point::new(0.51, 0.51),
                Point::new(0.52, 0.53),
                Point::new(0.54, 0.52),
            ],
            0,
        )
        .unwrap();
        let t = 0.2;
        let grid = build_grid(t).unwrap();
        let cg = build_cell_graph(&net, &grid, t);
        let s = MulticastSession::new(0, NodeId(0), vec![NodeId(1), NodeId(2)]).unwrap();
        let tree = route_session(&s, &net, &grid, &cg).unwrap();
        assert!(tree.relay_nodes().is_empty());
        assert_eq!(memtc_count(&tree, &grid), 1);
        let area = mamt_area(&tree, t, 400).unwrap();
        assert!((area - std::f64::consts::PI * t * t).abs() / area < 0.02);
    }

    #[test]
    fn straight_row_uses_about_five_relays() {
        // Dense row of nodes along y = 0.1.
        let mut pts = vec![Point::new(0.1, 0.1), Point::new(0.9, 0.1)];
        for k in 0..80 {
            pts.push(Point::new(
                0.1 + 0.01 * k as f64,
                0.1 + 0.001 * (k % 3) as f64,
            ));
        }
        let net = NetworkInstance::from_points(pts, 0).unwrap();
        let t = 0.2;
        let grid = build_grid(t).unwrap();
        let cg = build_cell_graph(&net, &grid, t);
        let s = MulticastSession::new(0, NodeId(0), vec![NodeId(1)]).unwrap();
        let tree = route_session(&s, &net, &grid, &cg).unwrap();
        assert!(tree.spans_session());
        assert!(tree.max_edge_length() <= t);
        let cells = tree.relay_cells();
        assert!((4..=6).contains(&cells.len()), "{cells:?}");
        assert!(cells.iter().all(|c| c.j == 0));
    }

    #[test]
    fn disconnected_destination_fails() {
        let net =
            NetworkInstance::from_points(vec![Point::new(0.05, 0.05), Point::new(0.95, 0.95)], 0)
                .unwrap();
        let t = 0.1;
        let grid = build_grid(t).unwrap();
        let cg = build_cell_graph(&net, &grid, t);
        let s = MulticastSession::new(4, NodeId(0), vec![NodeId(1)]).unwrap();
        match route_session(&s, &net, &grid, &cg) {
            Err(Error::RoutingFailure { session, .. }) => assert_eq!(session, 4),
            other => panic!("expected routing failure, got {other:?}"),
        }
    }

    #[test]
    fn random_trees_respect_range() {
        let net = generate_network(2000, 4).unwrap();
        let t = 0.08;
        let grid = build_grid(t).unwrap();
        let cg = build_cell_graph(&net, &grid, t);
        let router = Router::new(&net, &grid, &cg);
        for s in random_sessions(&net, 4, 1).unwrap().iter().take(100) {
            let tree = router.route(s).unwrap();
            assert!(tree.spans_session());
            assert!(tree.max_edge_length() <= t);
            assert!(memtc_count(&tree, &grid) <= tree.len());
            for d in &s.destinations {
                assert_eq!(tree.kind(tree.vertex_of(*d).unwrap()), VertexKind::Dest);
            }
        }
    }

    #[test]
    fn tree_csv_rows() {
        let net =
            NetworkInstance::from_points(vec![Point::new(0.5, 0.5), Point::new(0.55, 0.5)], 0)
                .unwrap();
        let grid = build_grid(0.2).unwrap();
        let cg = build_cell_graph(&net, &grid, 0.2);
        let s = MulticastSession::new(0, NodeId(0), vec![NodeId(1)]).unwrap();
        let tree = route_session(&s, &net, &grid, &cg).unwrap();
        let mut buf = Vec::new();
        tree.write_csv(&mut buf, true).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "edge_src_x,edge_src_y,edge_dst_x,edge_dst_y,kind\n0.5,0.5,0.55,0.5,dest\n"
        );
    }
}
