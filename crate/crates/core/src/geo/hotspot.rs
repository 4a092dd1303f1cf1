//! Hotspot cells above a density quantile, merged into polygons.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::kde::DensitySurface;
use crate::error::{Error, Result};

type Ring = Vec<[f64; 2]>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HotspotPolygon {
    /// Closed, counter-clockwise.
    pub exterior: Ring,
    /// Closed, clockwise.
    pub holes: Vec<Ring>,
    pub cell_count: usize,
    pub peak_density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hotspots {
    pub quantile: f64,
    /// Density at or above which a cell is selected.
    pub threshold: f64,
    /// Selected `(col, row)` cells in row-major order.
    pub cells: Vec<(usize, usize)>,
    pub polygons: Vec<HotspotPolygon>,
}

/// Selects cells whose density is at least the `quantile` of the positive
/// densities and merges 4-connected selections into polygons.
///
/// The quantile is the lower order statistic at rank `⌊q (m − 1)⌋` of the
/// `m` positive values, so `q = 0` selects every positive cell.
pub fn hotspots(surface: &DensitySurface, quantile: f64) -> Result<Hotspots> {
    if !(0.0..=1.0).contains(&quantile) {
        return Err(Error::InvalidParameter(format!("quantile {quantile} outside [0, 1]")));
    }
    let mut positive: Vec<f64> = surface.values.iter().copied().filter(|v| *v > 0.0).collect();
    if positive.is_empty() {
        return Err(Error::DegenerateSurface("no cell has positive density".into()));
    }
    positive.sort_by(f64::total_cmp);
    let rank = (quantile * (positive.len() - 1) as f64).floor() as usize;
    let threshold = positive[rank];

    let grid = &surface.grid;
    let selected: Vec<bool> = surface.values.iter().map(|&v| v > 0.0 && v >= threshold).collect();
    let cells: Vec<(usize, usize)> = (0..grid.n_rows)
        .flat_map(|r| (0..grid.n_cols).map(move |c| (c, r)))
        .filter(|&(c, r)| selected[r * grid.n_cols + c])
        .collect();

    let polygons = components(&selected, grid.n_cols, grid.n_rows)
        .into_iter()
        .flat_map(|comp| {
            let peak = comp
                .iter()
                .map(|&(c, r)| surface.value(c, r))
                .fold(0.0, f64::max);
            let n = comp.len();
            trace_polygons(&comp)
                .into_iter()
                .map(move |(ext, holes)| {
                    let to_xy = |ring: Vec<(i64, i64)>| -> Ring {
                        ring.into_iter()
                            .map(|(i, j)| {
                                [
                                    grid.origin_x + i as f64 * grid.cell_size,
                                    grid.origin_y + j as f64 * grid.cell_size,
                                ]
                            })
                            .collect()
                    };
                    HotspotPolygon {
                        exterior: to_xy(ext),
                        holes: holes.into_iter().map(to_xy).collect(),
                        cell_count: n,
                        peak_density: peak,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();

    Ok(Hotspots {
        quantile,
        threshold,
        cells,
        polygons,
    })
}

/// 4-connected components in row-major discovery order.
pub fn components(selected: &[bool], n_cols: usize, n_rows: usize) -> Vec<Vec<(usize, usize)>> {
    let mut label = vec![usize::MAX; selected.len()];
    let mut out = Vec::new();
    for start in 0..selected.len() {
        if !selected[start] || label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([start]);
        label[start] = id;
        while let Some(i) = queue.pop_front() {
            let (c, r) = (i % n_cols, i / n_cols);
            comp.push((c, r));
            let mut visit = |j: usize| {
                if selected[j] && label[j] == usize::MAX {
                    label[j] = id;
                    queue.push_back(j);
                }
            };
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < n_cols {
                visit(i + 1);
            }
            if r > 0 {
                visit(i - n_cols);
            }
            if r + 1 < n_rows {
                visit(i + n_cols);
            }
        }
        comp.sort_by_key(|&(c, r)| (r, c));
        out.push(comp);
    }
    out
}

type Vertex = (i64, i64);

/// Traces the boundary of one component on the cell-corner lattice. Edges
/// keep the component on their left, so exteriors come out counter-clockwise
/// and holes clockwise. At a corner shared by two diagonal cells the trace
/// turns left, keeping diagonal neighbours apart.
fn trace_polygons(comp: &[(usize, usize)]) -> Vec<(Vec<Vertex>, Vec<Vec<Vertex>>)> {
    let inside: BTreeSet<Vertex> = comp.iter().map(|&(c, r)| (c as i64, r as i64)).collect();
    let mut out_edges: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
    let mut add = |a: Vertex, b: Vertex| out_edges.entry(a).or_default().push(b);
    for &(c, r) in &inside {
        if !inside.contains(&(c, r - 1)) {
            add((c, r), (c + 1, r));
        }
        if !inside.contains(&(c + 1, r)) {
            add((c + 1, r), (c + 1, r + 1));
        }
        if !inside.contains(&(c, r + 1)) {
            add((c + 1, r + 1), (c, r + 1));
        }
        if !inside.contains(&(c - 1, r)) {
            add((c, r + 1), (c, r));
        }
    }

    let mut rings: Vec<Vec<Vertex>> = Vec::new();
    while let Some((&start, _)) = out_edges.iter().find(|(_, v)| !v.is_empty()) {
        let mut ring = vec![start];
        let mut prev = start;
        let mut cur = take_edge(&mut out_edges, start, None);
        while cur != start {
            ring.push(cur);
            let dir = (cur.0 - prev.0, cur.1 - prev.1);
            let next = take_edge(&mut out_edges, cur, Some(dir));
            prev = cur;
            cur = next;
        }
        rings.push(simplify(ring));
    }

    let (exteriors, holes): (Vec<_>, Vec<_>) = rings.into_iter().partition(|r| signed_area(r) > 0);
    let mut polys: Vec<(Vec<Vertex>, Vec<Vec<Vertex>>)> =
        exteriors.into_iter().map(|e| (e, Vec::new())).collect();
    for hole in holes {
        let target = if polys.len() == 1 {
            0
        } else {
            let probe = hole_probe(&hole);
            polys
                .iter()
                .position(|(e, _)| contains_point(e, probe))
                .unwrap_or(0)
        };
        polys[target].1.push(hole);
    }
    for (ext, holes) in &mut polys {
        close(ext);
        holes.iter_mut().for_each(close);
    }
    polys
}

fn take_edge(edges: &mut BTreeMap<Vertex, Vec<Vertex>>, at: Vertex, heading: Option<Vertex>) -> Vertex {
    let options = edges.get_mut(&at).expect("boundary is closed");
    let k = match (heading, options.len()) {
        (Some((dx, dy)), n) if n > 1 => {
            let left = (at.0 - dy, at.1 + dx);
            options.iter().position(|&v| v == left).unwrap_or(0)
        }
        _ => 0,
    };
    options.swap_remove(k)
}

fn simplify(ring: Vec<Vertex>) -> Vec<Vertex> {
    let n = ring.len();
    (0..n)
        .filter(|&i| {
            let a = ring[(i + n - 1) % n];
            let b = ring[i];
            let c = ring[(i + 1) % n];
            (b.0 - a.0) * (c.1 - b.1) - (b.1 - a.1) * (c.0 - b.0) != 0
        })
        .map(|i| ring[i])
        .collect()
}

fn close<T: Copy>(ring: &mut Vec<T>) {
    if let Some(&first) = ring.first() {
        ring.push(first);
    }
}

/// Twice the signed area.
fn signed_area(ring: &[Vertex]) -> i64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum()
}

/// A point just inside a clockwise hole: the centre of the empty cell to the
/// right of its first edge, in doubled lattice coordinates.
fn hole_probe(hole: &[Vertex]) -> (i64, i64) {
    let (a, b) = (hole[0], hole[1]);
    let (dx, dy) = ((b.0 - a.0).signum(), (b.1 - a.1).signum());
    // Right-hand normal of the edge direction.
    let (nx, ny) = (dy, -dx);
    (a.0 + b.0 + nx, a.1 + b.1 + ny)
}

/// Even-odd test in doubled coordinates, so probe points never sit on an edge.
fn contains_point(ring: &[Vertex], p: (i64, i64)) -> bool {
    let mut inside = false;
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        let (ax, ay, bx, by) = (2 * a.0, 2 * a.1, 2 * b.0, 2 * b.1);
        if (ay > p.1) != (by > p.1) {
            let x_cross = ax as f64 + (p.1 - ay) as f64 * (bx - ax) as f64 / (by - ay) as f64;
            if (p.0 as f64) < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}
