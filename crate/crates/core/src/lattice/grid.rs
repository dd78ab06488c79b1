use bitvec::prelude::*;

use crate::generators::{LayerSequence, RealizationSpec};

/// The x- and y-layer sequences a realization was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPair {
    pub x: LayerSequence,
    pub y: LayerSequence,
}

/// Open/closed state of every nearest-neighbour edge in the window `[0, n]²`.
///
/// Horizontal edge `(u, v)` joins `(u, v)` and `(u+1, v)` for `u < n`, `v <= n`;
/// vertical edge `(u, v)` joins `(u, v)` and `(u, v+1)` for `u <= n`, `v < n`.
/// Vertices are numbered row-major, `u + (n+1) v`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGrid {
    n: usize,
    open_h: BitVec<u64, Lsb0>,
    open_v: BitVec<u64, Lsb0>,
    provenance: Option<RealizationSpec>,
    layers: Option<LayerPair>,
}

impl EdgeGrid {
    pub fn closed(n: usize) -> Self {
        Self::filled(n, false)
    }

    pub fn open(n: usize) -> Self {
        Self::filled(n, true)
    }

    fn filled(n: usize, state: bool) -> Self {
        assert!(n >= 1, "window size must be at least 1");
        let count = n * (n + 1);
        Self {
            n,
            open_h: BitVec::repeat(state, count),
            open_v: BitVec::repeat(state, count),
            provenance: None,
            layers: None,
        }
    }

    pub fn with_provenance(mut self, spec: RealizationSpec) -> Self {
        self.provenance = Some(spec);
        self
    }

    pub fn with_layers(mut self, layers: LayerPair) -> Self {
        self.layers = Some(layers);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> u32 {
        2
    }

    pub fn provenance(&self) -> Option<&RealizationSpec> {
        self.provenance.as_ref()
    }

    pub fn layers(&self) -> Option<&LayerPair> {
        self.layers.as_ref()
    }

    pub fn vertex_count(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    #[inline]
    pub fn vertex(&self, u: usize, v: usize) -> usize {
        u + (self.n + 1) * v
    }

    #[inline]
    pub fn coords(&self, vertex: usize) -> (usize, usize) {
        (vertex % (self.n + 1), vertex / (self.n + 1))
    }

    #[inline]
    fn h_index(&self, u: usize, v: usize) -> usize {
        debug_assert!(u < self.n && v <= self.n);
        u + self.n * v
    }

    #[inline]
    fn v_index(&self, u: usize, v: usize) -> usize {
        debug_assert!(u <= self.n && v < self.n);
        u + (self.n + 1) * v
    }

    #[inline]
    pub fn is_open_h(&self, u: usize, v: usize) -> bool {
        self.open_h[self.h_index(u, v)]
    }

    #[inline]
    pub fn is_open_v(&self, u: usize, v: usize) -> bool {
        self.open_v[self.v_index(u, v)]
    }

    pub fn set_h(&mut self, u: usize, v: usize, open: bool) {
        let i = self.h_index(u, v);
        self.open_h.set(i, open);
    }

    pub fn set_v(&mut self, u: usize, v: usize, open: bool) {
        let i = self.v_index(u, v);
        self.open_v.set(i, open);
    }

    pub fn open_h_count(&self) -> usize {
        self.open_h.count_ones()
    }

    pub fn open_v_count(&self) -> usize {
        self.open_v.count_ones()
    }

    /// Calls `f` with every vertex joined to `vertex` by an open edge.
    #[inline]
    pub fn for_each_neighbor(&self, vertex: usize, mut f: impl FnMut(usize)) {
        let (u, v) = self.coords(vertex);
        let stride = self.n + 1;
        if u > 0 && self.is_open_h(u - 1, v) {
            f(vertex - 1);
        }
        if u < self.n && self.is_open_h(u, v) {
            f(vertex + 1);
        }
        if v > 0 && self.is_open_v(u, v - 1) {
            f(vertex - stride);
        }
        if v < self.n && self.is_open_v(u, v) {
            f(vertex + stride);
        }
    }

    /// Open neighbours of `vertex` in the fixed order left, right, down, up.
    pub fn neighbors(&self, vertex: usize) -> ([usize; 4], usize) {
        let mut out = [0; 4];
        let mut len = 0;
        self.for_each_neighbor(vertex, |w| {
            out[len] = w;
            len += 1;
        });
        (out, len)
    }

    pub fn degree(&self, vertex: usize) -> usize {
        let mut k = 0;
        self.for_each_neighbor(vertex, |_| k += 1);
        k
    }

    /// Open horizontal edges as `(u, v)` pairs, row by row.
    pub fn open_h_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.open_h.iter_ones().map(move |i| (i % self.n, i / self.n))
    }

    pub fn open_v_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.open_v
            .iter_ones()
            .map(move |i| (i % (self.n + 1), i / (self.n + 1)))
    }

    /// Mirror in the diagonal: horizontal edge `(u, v)` becomes vertical edge `(v, u)`.
    ///
    /// Layer metadata is swapped between the axes; provenance is dropped.
    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut t = Self::closed(n);
        for (u, v) in self.open_h_edges() {
            t.set_v(v, u, true);
        }
        for (u, v) in self.open_v_edges() {
            t.set_h(v, u, true);
        }
        if let Some(pair) = &self.layers {
            let mut x = pair.y.clone();
            let mut y = pair.x.clone();
            x.axis = crate::generators::Axis::X;
            y.axis = crate::generators::Axis::Y;
            t.layers = Some(LayerPair { x, y });
        }
        t
    }

    /// True when every edge open in `other` is open here.
    pub fn contains(&self, other: &EdgeGrid) -> bool {
        self.n == other.n
            && other.open_h.iter_ones().all(|i| self.open_h[i])
            && other.open_v.iter_ones().all(|i| self.open_v[i])
    }

    /// Same edge states, ignoring provenance and layer metadata.
    pub fn same_edges(&self, other: &EdgeGrid) -> bool {
        self.n == other.n && self.open_h == other.open_h && self.open_v == other.open_v
    }
}
