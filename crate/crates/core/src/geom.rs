//! Random geometric network instances on the unit square.
//!
//! Node placement uses `ChaCha8Rng` from `rand_chacha` 0.3, seeded with
//! `SeedableRng::seed_from_u64(seed)`. Each node draws `x` then `y` as
//! `f64` samples from `rand`'s `Standard` distribution on `[0, 1)`, in
//! node-id order. Two builds using this revision of the crate reproduce
//! identical instances from the same `(n, seed)`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A position in the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Checked constructor for coordinates that must lie in `[0, 1]^2`.
    pub fn in_unit_square(x: f64, y: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(Error::invalid(format!(
                "point ({x}, {y}) outside the unit square"
            )));
        }
        Ok(Point { x, y })
    }

    pub fn distance(&self, other: &Point) -> f64 {
        distance(*self, *other)
    }

    pub(crate) fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Index of a node within a [`NetworkInstance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A common transmission range. `t` and the point-to-point range `r` are
/// the same quantity under two names.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommRange {
    t: f64,
}

impl CommRange {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0 && t <= 2f64.sqrt()) {
            return Err(Error::invalid(format!("range {t} not in (0, sqrt 2]")));
        }
        Ok(CommRange { t })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r(&self) -> f64 {
        self.t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkInstance {
    points: Vec<Point>,
    seed: u64,
}

impl NetworkInstance {
    /// Builds an instance from explicit positions. Used by tests and by the
    /// CSV reader; `seed` is carried along for provenance only.
    pub fn from_points(points: Vec<Point>, seed: u64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("network needs at least one node"));
        }
        for p in &points {
            Point::in_unit_square(p.x, p.y)?;
        }
        Ok(NetworkInstance { points, seed })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, id: NodeId) -> Point {
        self.points[id.index()]
    }

    pub fn get(&self, id: NodeId) -> Option<Point> {
        self.points.get(id.index()).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.points.len()).map(NodeId::from)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "node_id,x,y")?;
        for (i, p) in self.points.iter().enumerate() {
            writeln!(w, "{},{},{}", i, fmt_sig(p.x, 12), fmt_sig(p.y, 12))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, seed: u64) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?;
        if header.as_deref().map(str::trim) != Some("node_id,x,y") {
            return Err(Error::InvalidData("missing node_id,x,y header".into()));
        }
        let mut points = Vec::new();
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::InvalidData(format!(
                    "row {}: expected 3 fields",
                    row + 1
                )));
            }
            let id: usize = fields[0]
                .parse()
                .map_err(|_| Error::InvalidData(format!("row {}: bad node id", row + 1)))?;
            if id != points.len() {
                return Err(Error::InvalidData(format!(
                    "row {}: node ids out of order",
                    row + 1
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidData(format!("row {}: bad coordinate {s}", row + 1)))
            };
            points.push(Point::new(parse(fields[1])?, parse(fields[2])?));
        }
        NetworkInstance::from_points(points, seed)
    }
}

/// Places `n` nodes independently and uniformly on the unit square.
pub fn generate_network(n: usize, seed: u64) -> Result<NetworkInstance> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            let x: f64 = rng.gen();
            let y: f64 = rng.gen();
            Point::new(x, y)
        })
        .collect();
    Ok(NetworkInstance { points, seed })
}

/// Independent seed for stream `stream` of a base seed (splitmix64 finaliser).
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        ^ stream
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(0x6a09_e667_f3bc_c909);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn distance(p: Point, q: Point) -> f64 {
    (p.x - q.x).hypot(p.y - q.y)
}

/// `c * sqrt(ln n / n)`, the range at which a uniform network stays
/// connected w.h.p. The logarithm is natural.
pub fn connectivity_range(n: usize, c: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("connectivity range needs n >= 2"));
    }
    let n = n as f64;
    Ok(c * (n.ln() / n).sqrt())
}

/// Nodes within `radius` of `center` (inclusive), in id order.
///
/// The disk is not wrapped or renormalised near the border: a disk that
/// pokes out of the unit square simply covers fewer nodes.
pub fn nodes_in_disk(net: &NetworkInstance, center: Point, radius: f64) -> Vec<NodeId> {
    let r2 = radius * radius;
    net.points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.dist2(&center) <= r2)
        .map(|(i, _)| NodeId::from(i))
        .collect()
}

/// Raster estimate of the area of a union of equal disks, clipped to the
/// unit square.
///
/// The square is sampled at the centres of a `resolution x resolution`
/// pixel grid. Each pixel row is covered by a union of x-intervals, so the
/// cost is `O(resolution * k log k)` for `k` disks rather than per pixel.
pub fn union_of_disks_area(centers: &[Point], radius: f64, resolution: usize) -> Result<f64> {
    if resolution < 100 {
        return Err(Error::invalid("resolution must be at least 100"));
    }
    if !(radius >= 0.0) {
        return Err(Error::invalid("radius must be nonnegative"));
    }
    if centers.is_empty() {
        return Ok(0.0);
    }
    let h = 1.0 / resolution as f64;
    let r2 = radius * radius;
    let mut intervals: Vec<(f64, f64)> = Vec::with_capacity(centers.len());
    let mut covered: u64 = 0;
    for row in 0..resolution {
        let y = (row as f64 + 0.5) * h;
        intervals.clear();
        for c in centers {
            let dy = y - c.y;
            let rem = r2 - dy * dy;
            if rem >= 0.0 {
                let half = rem.sqrt();
                intervals.push((c.x - half, c.x + half));
            }
        }
        if intervals.is_empty() {
            continue;
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut cur = intervals[0];
        for &iv in &intervals[1..] {
            if iv.0 <= cur.1 {
                cur.1 = cur.1.max(iv.1);
            } else {
                covered += pixels_in(cur, h, resolution);
                cur = iv;
            }
        }
        covered += pixels_in(cur, h, resolution);
    }
    Ok(covered as f64 * h * h)
}

// Pixel centres (k + 0.5) h with lo <= centre <= hi, k in [0, res).
fn pixels_in((lo, hi): (f64, f64), h: f64, res: usize) -> u64 {
    let first = ((lo / h) - 0.5).ceil().max(0.0);
    let last = ((hi / h) - 0.5).floor().min(res as f64 - 1.0);
    if last < first {
        0
    } else {
        (last - first) as u64 + 1
    }
}

/// Formats `x` in plain decimal notation rounded to `sig` significant
/// digits, without trailing zeros.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i64;
    let decimals = (sig as i64 - 1 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Area of a disk of radius `r` around `c`, clipped to the unit square,
/// computed by fine rasterisation. Handy as a reference in tests.
pub fn clipped_disk_area(c: Point, r: f64) -> f64 {
    union_of_disks_area(&[c], r, 2000).unwrap_or(PI * r * r)
}
