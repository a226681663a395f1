//! Triangular P1 meshes: generation, node ordering and a plain text format.

use crate::error::{Error, Result};
use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub level: usize,
    pub nodes: Vec<[f64; 2]>,
    /// Counter-clockwise triangles.
    pub triangles: Vec<[usize; 3]>,
    /// Closed node loops per boundary component, outer first, each ordered
    /// along the tangent `tau` with the inward normal on its left.
    pub boundary: Vec<Vec<usize>>,
}

pub fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

/// Grading `t -> t (1 + (1 - t) / 4)`: slope 1.25 at the centre, 0.75 at the
/// boundary.
fn disc_grading(t: f64) -> f64 {
    t * (1.0 + 0.25 * (1.0 - t))
}

fn annulus_grading(t: f64) -> f64 {
    t - 0.25 / (2.0 * PI) * (2.0 * PI * t).sin()
}

impl Mesh {
    /// Concentric-ring mesh of `D(0, radius)`. Ring `j` carries `6 j` equally
    /// spaced nodes; level `l` has `2^l` rings, and every level contains the
    /// vertices of the coarser ones.
    pub fn disc(radius: f64, level: usize) -> Self {
        let n = 1usize << level;
        let mut nodes = vec![[0.0, 0.0]];
        let base = |j: usize| if j == 0 { 0 } else { 1 + 3 * j * (j - 1) };
        for j in 1..=n {
            let r = radius * disc_grading(j as f64 / n as f64);
            let m = 6 * j;
            for k in 0..m {
                let th = 2.0 * PI * k as f64 / m as f64;
                nodes.push([r * th.cos(), r * th.sin()]);
            }
        }
        let mut triangles = Vec::with_capacity(6 * n * n);
        for j in 1..=n {
            let outer = |i: usize| base(j) + i % (6 * j);
            let inner = |i: usize| if j == 1 { 0 } else { base(j - 1) + i % (6 * (j - 1)) };
            for s in 0..6 {
                for i in 0..j {
                    triangles.push([outer(s * j + i), outer(s * j + i + 1), inner(s * (j - 1) + i)]);
                }
                for i in 0..j.saturating_sub(1) {
                    triangles.push([inner(s * (j - 1) + i), outer(s * j + i + 1), inner(s * (j - 1) + i + 1)]);
                }
            }
        }
        let boundary = vec![(base(n)..base(n) + 6 * n).collect()];
        let mut mesh = Self { level, nodes, triangles, boundary };
        mesh.orient();
        mesh
    }

    /// Structured mesh of the annulus with `2^l` radial layers and `12 * 2^l`
    /// angular sectors. The inner loop runs clockwise.
    pub fn annulus(inner: f64, outer: f64, level: usize) -> Self {
        let nr = 1usize << level;
        let nt = 12 * nr;
        let mut nodes = Vec::with_capacity((nr + 1) * nt);
        for j in 0..=nr {
            let r = inner + (outer - inner) * annulus_grading(j as f64 / nr as f64);
            for k in 0..nt {
                let th = 2.0 * PI * k as f64 / nt as f64;
                nodes.push([r * th.cos(), r * th.sin()]);
            }
        }
        let id = |j: usize, k: usize| j * nt + k % nt;
        let mut triangles = Vec::with_capacity(2 * nr * nt);
        for j in 0..nr {
            for k in 0..nt {
                let (a, b, c, d) = (id(j, k), id(j, k + 1), id(j + 1, k + 1), id(j + 1, k));
                if (j + k) % 2 == 0 {
                    triangles.push([a, b, c]);
                    triangles.push([a, c, d]);
                } else {
                    triangles.push([a, b, d]);
                    triangles.push([b, c, d]);
                }
            }
        }
        let outer_loop = (0..nt).map(|k| id(nr, k)).collect();
        let inner_loop = (0..nt).map(|k| id(0, (nt - k) % nt)).collect();
        let mut mesh = Self { level, nodes, triangles, boundary: vec![outer_loop, inner_loop] };
        mesh.orient();
        mesh
    }

    /// Image of the mesh under a planar map.
    pub fn mapped(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let mut out = self.clone();
        out.nodes = self.nodes.iter().map(|&p| f(p)).collect();
        out.orient();
        out
    }

    fn orient(&mut self) {
        for t in &mut self.triangles {
            if signed_area(self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]) < 0.0 {
                t.swap(1, 2);
            }
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    /// Longest edge.
    pub fn h_max(&self) -> f64 {
        let d = |a: usize, b: usize| {
            let (p, q) = (self.nodes[a], self.nodes[b]);
            (p[0] - q[0]).hypot(p[1] - q[1])
        };
        self.triangles.iter().map(|&[a, b, c]| d(a, b).max(d(b, c)).max(d(c, a))).fold(0.0, f64::max)
    }

    /// Fails on the first triangle whose area is not positive relative to
    /// `h_max^2`.
    pub fn check(&self) -> Result<()> {
        let h = self.h_max();
        for t in 0..self.triangles.len() {
            let a = self.area(t);
            if !(a > 1e-12 * h * h) {
                return Err(Error::DegenerateElement { index: t, area: a });
            }
        }
        Ok(())
    }

    /// Boundary edges of component `j` as consecutive node pairs.
    pub fn boundary_edges(&self, j: usize) -> Vec<(usize, usize)> {
        let lp = &self.boundary[j];
        (0..lp.len()).map(|i| (lp[i], lp[(i + 1) % lp.len()])).collect()
    }

    pub fn boundary_nodes(&self) -> Vec<bool> {
        let mut is_b = vec![false; self.nodes.len()];
        for lp in &self.boundary {
            for &i in lp {
                is_b[i] = true;
            }
        }
        is_b
    }

    /// Polygonal length of each boundary loop.
    pub fn boundary_lengths(&self) -> Vec<f64> {
        (0..self.boundary.len())
            .map(|j| {
                self.boundary_edges(j)
                    .iter()
                    .map(|&(a, b)| (self.nodes[a][0] - self.nodes[b][0]).hypot(self.nodes[a][1] - self.nodes[b][1]))
                    .sum()
            })
            .collect()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &[a, b, c] in &self.triangles {
            for (p, q) in [(a, b), (b, c), (c, a)] {
                adj[p].push(q);
                adj[q].push(p);
            }
        }
        for v in &mut adj {
            v.sort_unstable();
            v.dedup();
        }
        adj
    }

    /// Reverse Cuthill-McKee ordering from a pseudo-peripheral node.
    /// Returns `order` with `order[new] = old`.
    pub fn rcm_order(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let n = adj.len();
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        for seed in 0..n {
            if visited[seed] {
                continue;
            }
            let start = pseudo_peripheral(&adj, seed);
            let mut queue = VecDeque::from([start]);
            visited[start] = true;
            while let Some(v) = queue.pop_front() {
                order.push(v);
                let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
                nb.sort_by_key(|&w| (adj[w].len(), w));
                for w in nb {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
        order.reverse();
        order
    }

    /// Half-bandwidth of the node graph under `position[old] = new`.
    pub fn bandwidth(&self, position: &[usize]) -> usize {
        self.triangles
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(p, q)| position[p].abs_diff(position[q]))
            .max()
            .unwrap_or(0)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "fluxcount-mesh 1");
        let _ = writeln!(s, "level {}", self.level);
        let _ = writeln!(s, "nodes {}", self.nodes.len());
        for p in &self.nodes {
            let _ = writeln!(s, "{:e} {:e}", p[0], p[1]);
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "boundary {}", self.boundary.len());
        for lp in &self.boundary {
            let ids: Vec<String> = lp.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(s, "{} {}", lp.len(), ids.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let bad = |line: usize, msg: &str| Error::InvalidInput(format!("mesh line {}: {msg}", line + 1));
        let mut next = |what: &str| lines.next().ok_or_else(|| Error::InvalidInput(format!("mesh ended before {what}")));
        let (ln, head) = next("header")?;
        if head.trim() != "fluxcount-mesh 1" {
            return Err(bad(ln, "expected header `fluxcount-mesh 1`"));
        }
        let keyword = |(ln, l): (usize, &str), key: &str| -> Result<usize> {
            let mut it = l.split_whitespace();
            if it.next() != Some(key) {
                return Err(bad(ln, &format!("expected `{key} <count>`")));
            }
            it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad(ln, "missing count"))
        };
        let level = keyword(next("level")?, "level")?;
        let nn = keyword(next("nodes")?, "nodes")?;
        let mut nodes = Vec::with_capacity(nn);
        for _ in 0..nn {
            let (ln, l) = next("node")?;
            let v: Vec<f64> = l.split_whitespace().map(|x| x.parse().map_err(|_| bad(ln, "bad coordinate"))).collect::<Result<_>>()?;
            if v.len() != 2 {
                return Err(bad(ln, "node needs two coordinates"));
            }
            nodes.push([v[0], v[1]]);
        }
        let nt = keyword(next("triangles")?, "triangles")?;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (ln, l) = next("triangle")?;
            let v: Vec<usize> = l.split_whitespace().map(|x| x.parse().map_err(|_| bad(ln, "bad index"))).collect::<Result<_>>()?;
            if v.len() != 3 || v.iter().any(|&i| i >= nn) {
                return Err(bad(ln, "triangle needs three valid node indices"));
            }
            triangles.push([v[0], v[1], v[2]]);
        }
        let nb = keyword(next("boundary")?, "boundary")?;
        let mut boundary = Vec::with_capacity(nb);
        for _ in 0..nb {
            let (ln, l) = next("boundary loop")?;
            let v: Vec<usize> = l.split_whitespace().map(|x| x.parse().map_err(|_| bad(ln, "bad index"))).collect::<Result<_>>()?;
            if v.is_empty() || v[0] + 1 != v.len() || v[1..].iter().any(|&i| i >= nn) {
                return Err(bad(ln, "boundary loop must be `<k> i_1 ... i_k` with valid indices"));
            }
            boundary.push(v[1..].to_vec());
        }
        let mesh = Self { level, nodes, triangles, boundary };
        mesh.check()?;
        Ok(mesh)
    }
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> (Vec<usize>, usize) {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut far = start;
    while let Some(v) = queue.pop_front() {
        far = v;
        for &w in &adj[v] {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    (dist, far)
}

fn pseudo_peripheral(adj: &[Vec<usize>], seed: usize) -> usize {
    let mut v = seed;
    let mut ecc = 0;
    loop {
        let (dist, _) = bfs_levels(adj, v);
        let e = dist.iter().filter(|&&d| d != usize::MAX).max().copied().unwrap_or(0);
        let cand = (0..adj.len()).filter(|&w| dist[w] == e).min_by_key(|&w| (adj[w].len(), w)).unwrap_or(v);
        if e <= ecc {
            return v;
        }
        ecc = e;
        v = cand;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_counts_and_area() {
        for level in 0..5 {
            let m = Mesh::disc(1.0, level);
            let n = 1usize << level;
            assert_eq!(m.num_nodes(), 1 + 3 * n * (n + 1));
            assert_eq!(m.triangles.len(), 6 * n * n);
            m.check().unwrap();
            let polygon = 0.5 * (6 * n) as f64 * (2.0 * PI / (6 * n) as f64).sin();
            assert!((m.total_area() - polygon).abs() < 1e-12);
        }
        assert_eq!(Mesh::disc(1.0, 5).num_nodes(), 3169);
    }

    #[test]
    fn disc_levels_are_nested() {
        let coarse = Mesh::disc(1.0, 2);
        let fine = Mesh::disc(1.0, 3);
        for p in &coarse.nodes {
            assert!(fine.nodes.iter().any(|q| (p[0] - q[0]).hypot(p[1] - q[1]) < 1e-13));
        }
    }

    #[test]
    fn annulus_orientation_and_loops() {
        let m = Mesh::annulus(0.5, 1.0, 2);
        m.check().unwrap();
        // outer loop counter-clockwise, inner loop clockwise
        let winding = |lp: &Vec<usize>| -> f64 {
            (0..lp.len())
                .map(|i| {
                    let p = m.nodes[lp[i]];
                    let q = m.nodes[lp[(i + 1) % lp.len()]];
                    p[0] * q[1] - p[1] * q[0]
                })
                .sum()
        };
        assert!(winding(&m.boundary[0]) > 0.0);
        assert!(winding(&m.boundary[1]) < 0.0);
    }

    #[test]
    fn rcm_reduces_bandwidth() {
        let m = Mesh::disc(1.0, 4);
        let identity: Vec<usize> = (0..m.num_nodes()).collect();
        let order = m.rcm_order();
        let mut pos = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            pos[old] = new;
        }
        assert!(m.bandwidth(&pos) < m.bandwidth(&identity));
    }

    #[test]
    fn text_round_trip() {
        let m = Mesh::annulus(0.5, 1.0, 1);
        let back = Mesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back.triangles, m.triangles);
        assert_eq!(back.boundary, m.boundary);
        for (p, q) in m.nodes.iter().zip(&back.nodes) {
            assert!((p[0] - q[0]).abs() < 1e-15 && (p[1] - q[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn malformed_text_reports_line() {
        let err = Mesh::from_text("fluxcount-mesh 1\nlevel 0\nnodes 1\n0 zero\n").unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
    }
}
