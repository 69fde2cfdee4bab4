//! Brute-force shortest weighted paths on a 2D grid.
//!
//! Nodes sit on a regular lattice; each node links to its 8 or 16 stencil
//! neighbours, and an edge costs the exact line integral of `W` along the
//! straight segment. With `r² = q(t)` quadratic along a segment, the integral
//! of `ln q` has a closed form, so edge costs carry no quadrature error. Every
//! graph path is then a real polyline, and the graph optimum bounds the
//! continuous infimum from above. Doubling the resolution nests the coarse
//! lattice in the fine one, so the cost can only go down.
//!
//! The node exactly at the origin, where `W = +∞`, is removed from the graph.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{NaoError, Result};
use crate::prior::{PriorSpec, SeedPoint};

pub const MIN_RESOLUTION: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stencil {
    #[serde(rename = "8")]
    Eight,
    #[serde(rename = "16")]
    Sixteen,
}

impl Stencil {
    pub fn from_count(n: u32) -> Result<Self> {
        match n {
            8 => Ok(Stencil::Eight),
            16 => Ok(Stencil::Sixteen),
            _ => Err(NaoError::invalid(format!("stencil must be 8 or 16, got {n}"))),
        }
    }

    fn offsets(self) -> &'static [(i64, i64)] {
        const SIXTEEN: [(i64, i64); 16] = [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
            (1, 2),
            (2, 1),
            (-1, 2),
            (-2, 1),
            (1, -2),
            (2, -1),
            (-1, -2),
            (-2, -1),
        ];
        match self {
            Stencil::Eight => &SIXTEEN[..8],
            Stencil::Sixteen => &SIXTEEN,
        }
    }
}

/// A square-celled lattice over `[min, max]²` with `resolution` cells per axis
/// (`resolution + 1` nodes per axis).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min_corner: [f64; 2],
    pub max_corner: [f64; 2],
    pub resolution: usize,
    pub stencil: Stencil,
}

impl GridSpec {
    pub fn new(min_corner: [f64; 2], max_corner: [f64; 2], resolution: usize, stencil: Stencil) -> Result<Self> {
        let g = GridSpec {
            min_corner,
            max_corner,
            resolution,
            stencil,
        };
        g.validate()?;
        Ok(g)
    }

    /// A grid centred on the origin, large enough to hold both endpoints and
    /// the mode circle with a 30% margin.
    pub fn around(spec: &PriorSpec, a: &[f64], b: &[f64], resolution: usize, stencil: Stencil) -> Result<Self> {
        let reach = a.iter().chain(b).fold(spec.mode_radius(), |m, x| m.max(x.abs()));
        let half = 1.3 * reach;
        GridSpec::new([-half, -half], [half, half], resolution, stencil)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.min_corner.iter().chain(&self.max_corner).all(|x| x.is_finite());
        if !finite || self.max_corner[0] <= self.min_corner[0] || self.max_corner[1] <= self.min_corner[1] {
            return Err(NaoError::invalid(
                "grid max corner must strictly dominate the min corner",
            ));
        }
        if self.resolution < MIN_RESOLUTION {
            return Err(NaoError::invalid(format!(
                "grid resolution must be >= {MIN_RESOLUTION}, got {}",
                self.resolution
            )));
        }
        Ok(())
    }

    fn step(&self) -> [f64; 2] {
        let r = self.resolution as f64;
        [
            (self.max_corner[0] - self.min_corner[0]) / r,
            (self.max_corner[1] - self.min_corner[1]) / r,
        ]
    }

    fn side(&self) -> usize {
        self.resolution + 1
    }

    fn node(&self, ix: usize, iy: usize) -> [f64; 2] {
        let [hx, hy] = self.step();
        [self.min_corner[0] + ix as f64 * hx, self.min_corner[1] + iy as f64 * hy]
    }

    pub fn cell_diagonal(&self) -> f64 {
        let [hx, hy] = self.step();
        hx.hypot(hy)
    }

    fn contains(&self, p: &[f64]) -> bool {
        (self.min_corner[0]..=self.max_corner[0]).contains(&p[0])
            && (self.min_corner[1]..=self.max_corner[1]).contains(&p[1])
    }

    fn snap(&self, p: &[f64]) -> (usize, usize) {
        let [hx, hy] = self.step();
        let ix = ((p[0] - self.min_corner[0]) / hx).round() as usize;
        let iy = ((p[1] - self.min_corner[1]) / hy).round() as usize;
        (ix.min(self.resolution), iy.min(self.resolution))
    }
}

/// Exact `∫ W` along the segment `u → v` in the plane.
pub fn edge_cost(spec: &PriorSpec, u: [f64; 2], v: [f64; 2]) -> f64 {
    let e = [v[0] - u[0], v[1] - u[1]];
    let a = e[0] * e[0] + e[1] * e[1];
    if a == 0.0 {
        return 0.0;
    }
    let len = a.sqrt();
    let b = 2.0 * (u[0] * e[0] + u[1] * e[1]);
    let c = u[0] * u[0] + u[1] * u[1];
    // r²(t) = a·t² + b·t + c = a·((t + b/2a)² + ρ²), ρ = |u × e| / a.
    let mean_q = a / 3.0 + b / 2.0 + c;
    let rho = (u[0] * e[1] - u[1] * e[0]).abs() / a;
    let s0 = b / (2.0 * a);
    let s1 = s0 + 1.0;
    let antiderivative = |s: f64| -> f64 {
        let sq = s * s + rho * rho;
        let log_term = if sq == 0.0 { 0.0 } else { s * sq.ln() };
        let atan_term = if rho > 0.0 { 2.0 * rho * (s / rho).atan() } else { 0.0 };
        log_term - 2.0 * s + atan_term
    };
    let mean_ln_q = a.ln() + antiderivative(s1) - antiderivative(s0);
    let dm1 = (spec.dim() - 1) as f64;
    len * (spec.log_normalizer() + 0.5 * mean_q - 0.5 * dm1 * mean_ln_q)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub cost: f64,
    pub polyline: Vec<[f64; 2]>,
    pub snapped_a: [f64; 2],
    pub snapped_b: [f64; 2],
    /// Distance moved by each endpoint when snapped to the lattice; at most
    /// half a cell diagonal.
    pub snap_error: [f64; 2],
    pub grid: GridSpec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Frontier {
    cost: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from the node nearest `a` to the node nearest `b`.
pub fn grid_shortest_path(spec: &PriorSpec, grid: &GridSpec, a: &SeedPoint, b: &SeedPoint) -> Result<OracleResult> {
    if spec.dim() != 2 || a.dim() != 2 || b.dim() != 2 {
        return Err(NaoError::invalid("the grid oracle works in two dimensions only"));
    }
    grid.validate()?;
    let (pa, pb) = (a.as_slice(), b.as_slice());
    if !grid.contains(pa) || !grid.contains(pb) {
        return Err(NaoError::invalid("endpoints must lie inside the grid bounds"));
    }
    let side = grid.side();
    let index = |(ix, iy): (usize, usize)| iy * side + ix;
    let (sa, sb) = (grid.snap(pa), grid.snap(pb));
    let (start, goal) = (index(sa), index(sb));
    let node_at = |i: usize| grid.node(i % side, i / side);
    let tiny = 1e-9 * grid.cell_diagonal();
    let blocked = |p: [f64; 2]| p[0].abs() < tiny && p[1].abs() < tiny;

    let snapped_a = node_at(start);
    let snapped_b = node_at(goal);
    if blocked(snapped_a) || blocked(snapped_b) {
        return Err(NaoError::invalid(
            "an endpoint snaps to the origin node, where W is infinite",
        ));
    }
    let snap_error = [
        (snapped_a[0] - pa[0]).hypot(snapped_a[1] - pa[1]),
        (snapped_b[0] - pb[0]).hypot(snapped_b[1] - pb[1]),
    ];
    let mut result = OracleResult {
        cost: 0.0,
        polyline: vec![snapped_a],
        snapped_a,
        snapped_b,
        snap_error,
        grid: *grid,
    };
    if start == goal {
        return Ok(result);
    }

    let total = side * side;
    let mut dist = vec![f64::INFINITY; total];
    let mut parent = vec![usize::MAX; total];
    let mut done = vec![false; total];
    let mut heap = BinaryHeap::new();
    dist[start] = 0.0;
    heap.push(Frontier { cost: 0.0, node: start });
    let offsets = grid.stencil.offsets();

    while let Some(Frontier { cost, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        if node == goal {
            break;
        }
        let (ix, iy) = ((node % side) as i64, (node / side) as i64);
        let here = node_at(node);
        for &(dx, dy) in offsets {
            let (jx, jy) = (ix + dx, iy + dy);
            if jx < 0 || jy < 0 || jx >= side as i64 || jy >= side as i64 {
                continue;
            }
            let next = index((jx as usize, jy as usize));
            if done[next] {
                continue;
            }
            let there = node_at(next);
            if blocked(there) {
                continue;
            }
            let candidate = cost + edge_cost(spec, here, there);
            if candidate < dist[next] {
                dist[next] = candidate;
                parent[next] = node;
                heap.push(Frontier {
                    cost: candidate,
                    node: next,
                });
            }
        }
    }
    if !dist[goal].is_finite() {
        return Err(NaoError::invalid("no grid path between the endpoints"));
    }

    let mut chain = vec![goal];
    let mut cur = goal;
    while cur != start {
        cur = parent[cur];
        chain.push(cur);
    }
    chain.reverse();
    result.cost = dist[goal];
    result.polyline = chain.into_iter().map(node_at).collect();
    Ok(result)
}
