use std::collections::BTreeMap;
use std::io::{self, Write};

use petgraph::unionfind::UnionFind;

use super::EdgeGrid;

/// Connected components of the open-edge graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReport {
    /// Component id of every vertex: the smallest vertex index in its component.
    pub labels: Vec<usize>,
    /// Size of each component keyed by its id.
    pub component_sizes: BTreeMap<usize, usize>,
    /// Some component touches both `u = 0` and `u = n`.
    pub spans_x: bool,
    /// Some component touches both `v = 0` and `v = n`.
    pub spans_y: bool,
    /// Size of the component holding the window centre `(n/2, n/2)`.
    pub origin_component_size: usize,
}

impl ClusterReport {
    pub fn component_count(&self) -> usize {
        self.component_sizes.len()
    }

    /// Writes `vertex_u,vertex_v,component_id` rows in vertex order.
    pub fn write_csv<W: Write>(&self, n: usize, mut out: W) -> io::Result<()> {
        writeln!(out, "vertex_u,vertex_v,component_id")?;
        for (vertex, label) in self.labels.iter().enumerate() {
            writeln!(out, "{},{},{}", vertex % (n + 1), vertex / (n + 1), label)?;
        }
        Ok(())
    }
}

pub fn cluster(grid: &EdgeGrid) -> ClusterReport {
    let n = grid.n();
    let count = grid.vertex_count();
    let mut uf = UnionFind::<usize>::new(count);
    for (u, v) in grid.open_h_edges() {
        uf.union(grid.vertex(u, v), grid.vertex(u + 1, v));
    }
    for (u, v) in grid.open_v_edges() {
        uf.union(grid.vertex(u, v), grid.vertex(u, v + 1));
    }

    let roots = uf.into_labeling();
    let mut smallest = vec![usize::MAX; count];
    let mut labels = Vec::with_capacity(count);
    for (vertex, &root) in roots.iter().enumerate() {
        if smallest[root] == usize::MAX {
            smallest[root] = vertex;
        }
        labels.push(smallest[root]);
    }

    let mut component_sizes = BTreeMap::new();
    for &label in &labels {
        *component_sizes.entry(label).or_insert(0) += 1;
    }

    let spans = |on_low: &dyn Fn(usize) -> usize, on_high: &dyn Fn(usize) -> usize| {
        let mut low = vec![false; count];
        for k in 0..=n {
            low[labels[on_low(k)]] = true;
        }
        (0..=n).any(|k| low[labels[on_high(k)]])
    };
    let spans_x = spans(&|k| grid.vertex(0, k), &|k| grid.vertex(n, k));
    let spans_y = spans(&|k| grid.vertex(k, 0), &|k| grid.vertex(k, n));
    let origin_component_size = component_sizes[&labels[grid.vertex(n / 2, n / 2)]];

    ClusterReport {
        labels,
        component_sizes,
        spans_x,
        spans_y,
        origin_component_size,
    }
}
