//! Sampling of layer sequences and edge states.
//!
//! Along each axis the lattice is cut into layers. The layer covering
//! position 0 carries a size-biased badness and a uniform integer offset, all
//! other layers carry iid plain badness labels. Layer `i` of badness `ℓ`
//! occupies edge positions `[start, start + S(ℓ))` and every one of its
//! columns is a copy of the original column `i`.
//!
//! Randomness is counter based (see [`crate::seeding`]): badness of layer `i`,
//! the offset, and the state of original edge `(c, r)` are each a pure
//! function of `(seed, tag, indices)`, so enlarging the window never changes
//! the part already seen.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{EdgeGrid, LayerPair};
use crate::params::{ModelParams, ParamsError, Validation, DEFAULT_SERIES_TOL, WIDTH_LIMIT};
use crate::seeding::{mix64, stream, unit_f64};

const TAG_AXIS_X: u64 = 0x58;
const TAG_AXIS_Y: u64 = 0x59;
const TAG_LAYER: u64 = 1;
const TAG_ORIGIN: u64 = 2;
const TAG_OFFSET: u64 = 3;
const TAG_EDGE_H: u64 = 4;
const TAG_EDGE_V: u64 = 5;
const TAG_COLUMN_P: u64 = 6;

/// Default cap on the number of edges of a generated window (2 n (n+1)).
pub const DEFAULT_MAX_EDGES: u64 = 1 << 33;

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("window size n must be at least 1")]
    EmptyWindow,
    #[error("window n = {n} has {edges} edges, above the cap of {cap}")]
    MemoryBudget { n: u64, edges: u64, cap: u64 },
    #[error("invalid column distribution: {0}")]
    Distribution(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    fn tag(self) -> u64 {
        match self {
            Axis::X => TAG_AXIS_X,
            Axis::Y => TAG_AXIS_Y,
        }
    }

    pub fn other(self) -> Axis {
        match self {
            Axis::X => Axis::Y,
            Axis::Y => Axis::X,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
        })
    }
}

/// One layer: `width` consecutive copies of an original column (or row).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layer {
    pub badness: u32,
    pub width: u64,
    /// Position of the layer's first edge; may be negative.
    pub start: i64,
    /// `S(badness)` exceeded the integer range and `width` was capped.
    pub saturated: bool,
}

impl Layer {
    pub fn end(&self) -> i64 {
        self.start + self.width as i64
    }

    pub fn contains(&self, position: i64) -> bool {
        self.start <= position && position < self.end()
    }
}

/// Consecutive layers along one axis covering at least positions `[0, n]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSequence {
    pub axis: Axis,
    /// Whether widths follow `S(ℓ)`; plain RSL layers all have width 1.
    pub elongated: bool,
    /// Index of `layers[0]`. The layer covering position 0 has index 0.
    pub first_index: i64,
    pub layers: Vec<Layer>,
    /// Position of coordinate 0 inside its layer.
    pub origin_offset: u64,
}

impl LayerSequence {
    pub fn layer(&self, index: i64) -> Option<&Layer> {
        usize::try_from(index - self.first_index)
            .ok()
            .and_then(|i| self.layers.get(i))
    }

    pub fn origin_layer(&self) -> &Layer {
        self.layer(0).expect("origin layer is always sampled")
    }

    /// Index of the layer covering `position`.
    pub fn index_at(&self, position: i64) -> Option<i64> {
        let i = self.layers.partition_point(|l| l.end() <= position);
        (i < self.layers.len() && self.layers[i].contains(position)).then(|| i as i64 + self.first_index)
    }

    /// Layer index for every position `0..=n`.
    pub fn index_map(&self, n: usize) -> Vec<i64> {
        let mut out = Vec::with_capacity(n + 1);
        let mut k = self.layers.partition_point(|l| l.end() <= 0);
        for pos in 0..=n as i64 {
            while self.layers[k].end() <= pos {
                k += 1;
            }
            out.push(k as i64 + self.first_index);
        }
        out
    }

    /// Layers with `start >= 0` that end at or before position `limit`, left to right.
    pub fn layers_inside(&self, limit: i64) -> impl Iterator<Item = (i64, &Layer)> {
        self.layers
            .iter()
            .enumerate()
            .map(move |(i, l)| (i as i64 + self.first_index, l))
            .filter(move |(_, l)| l.start >= 0 && l.end() <= limit)
    }
}

/// Source of badness labels and widths for [`sample_layer_sequence`].
pub trait BadnessLaw {
    /// Draws a plain label from 64 random bits.
    fn sample_plain(&self, bits: u64) -> u32;
    /// Draws a size-biased label from 64 random bits.
    fn sample_size_biased(&self, bits: u64) -> u32;
    /// Layer width, `None` when it overflows.
    fn width(&self, badness: u32) -> Option<u64>;
}

/// Geometric badness law with elongation `S(ℓ)` for a parameter set.
#[derive(Debug, Clone)]
pub struct LayerLaw {
    params: ModelParams,
    log_q: f64,
    log_q_sigma: f64,
    /// `cdf[k] = P(N'₀ <= k+1)`, up to the truncation point of the width series.
    size_biased_cdf: Vec<f64>,
    mean_width: f64,
}

impl LayerLaw {
    pub fn new(params: &ModelParams) -> Self {
        let mean_width = params.mean_layer_width(DEFAULT_SERIES_TOL);
        let mut size_biased_cdf = Vec::new();
        let mut acc = 0.0;
        let mut badness = 1u32;
        loop {
            acc += params.size_biased_pmf_given_mean(badness, mean_width);
            size_biased_cdf.push(acc.min(1.0));
            if params.width_series_tail(badness, Default::default()) < DEFAULT_SERIES_TOL * 1e-3 {
                break;
            }
            badness += 1;
        }
        Self {
            params: *params,
            log_q: params.q.ln(),
            log_q_sigma: params.sigma * params.q.ln(),
            size_biased_cdf,
            mean_width,
        }
    }

    pub fn mean_width(&self) -> f64 {
        self.mean_width
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
}

/// `1 + ⌊ln U / ln r⌋` for `U` uniform on `(0, 1]`: geometric with `P(N > k) = r^k`.
fn geometric(bits: u64, log_ratio: f64) -> u32 {
    let u = 1.0 - unit_f64(bits);
    let k = (u.ln() / log_ratio).floor();
    if k >= (u32::MAX - 1) as f64 {
        u32::MAX
    } else {
        1 + k as u32
    }
}

impl BadnessLaw for LayerLaw {
    fn sample_plain(&self, bits: u64) -> u32 {
        geometric(bits, self.log_q)
    }

    fn sample_size_biased(&self, bits: u64) -> u32 {
        let u = unit_f64(bits);
        let k = self.size_biased_cdf.partition_point(|&c| c <= u);
        if k < self.size_biased_cdf.len() {
            return k as u32 + 1;
        }
        // Beyond the table the weights decay like (q^σ)^ℓ.
        let last = self.size_biased_cdf.len() as u32;
        last.saturating_add(geometric(mix64(bits ^ 0xA5A5), self.log_q_sigma))
    }

    fn width(&self, badness: u32) -> Option<u64> {
        self.params.layer_width(badness).ok()
    }
}

fn capped_width<L: BadnessLaw + ?Sized>(law: &L, badness: u32) -> (u64, bool) {
    match law.width(badness) {
        Some(w) => (w.max(1), false),
        None => (WIDTH_LIMIT as u64, true),
    }
}

/// Samples the layers along `axis` covering positions `[0, n]`.
///
/// With `elongated = false` every layer has width 1, the origin layer is
/// plain and the offset is 0 (the stationary plain RSL).
pub fn sample_layer_sequence<L: BadnessLaw + ?Sized>(
    law: &L,
    n: u64,
    axis: Axis,
    seed: u64,
    elongated: bool,
) -> LayerSequence {
    let axis_tag = axis.tag();
    let plain_badness = |index: i64| law.sample_plain(stream(seed, &[axis_tag, TAG_LAYER, index as u64]));
    let width_of = |badness: u32| {
        if elongated {
            capped_width(law, badness)
        } else {
            (1, false)
        }
    };

    let origin_badness = if elongated {
        law.sample_size_biased(stream(seed, &[axis_tag, TAG_ORIGIN]))
    } else {
        plain_badness(0)
    };
    let (origin_width, origin_saturated) = width_of(origin_badness);
    let origin_offset = if elongated {
        let u = unit_f64(stream(seed, &[axis_tag, TAG_OFFSET]));
        ((u * origin_width as f64) as u64).min(origin_width - 1)
    } else {
        0
    };
    let origin = Layer {
        badness: origin_badness,
        width: origin_width,
        start: -(origin_offset as i64),
        saturated: origin_saturated,
    };

    let left_badness = plain_badness(-1);
    let (left_width, left_saturated) = width_of(left_badness);
    let left = Layer {
        badness: left_badness,
        width: left_width,
        start: origin.start - left_width as i64,
        saturated: left_saturated,
    };

    let mut layers = vec![left, origin];
    let mut index = 1i64;
    while layers.last().unwrap().end() <= n as i64 {
        let badness = plain_badness(index);
        let (width, saturated) = width_of(badness);
        let start = layers.last().unwrap().end();
        layers.push(Layer {
            badness,
            width,
            start,
            saturated,
        });
        index += 1;
    }
    LayerSequence {
        axis,
        elongated,
        first_index: -1,
        layers,
        origin_offset,
    }
}

/// Law of the per-column open probability `P_i` in the one-directional model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ColumnLaw {
    #[default]
    Uniform,
    Constant { value: f64 },
    Beta { alpha: f64, beta: f64 },
}

impl ColumnLaw {
    fn check(&self) -> Result<(), GenerationError> {
        match *self {
            ColumnLaw::Uniform => Ok(()),
            ColumnLaw::Constant { value } if (0.0..=1.0).contains(&value) => Ok(()),
            ColumnLaw::Beta { alpha, beta } if alpha > 0.0 && beta > 0.0 => Ok(()),
            other => Err(GenerationError::Distribution(format!("{other:?}"))),
        }
    }

    fn sample(&self, bits: u64) -> f64 {
        match *self {
            ColumnLaw::Uniform => unit_f64(bits),
            ColumnLaw::Constant { value } => value,
            ColumnLaw::Beta { alpha, beta } => {
                let mut rng = ChaCha8Rng::seed_from_u64(bits);
                Beta::new(alpha, beta)
                    .expect("checked parameters")
                    .sample(&mut rng)
            }
        }
    }
}

impl fmt::Display for ColumnLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnLaw::Uniform => write!(f, "uniform"),
            ColumnLaw::Constant { value } => write!(f, "const:{value}"),
            ColumnLaw::Beta { alpha, beta } => write!(f, "beta:{alpha}:{beta}"),
        }
    }
}

impl FromStr for ColumnLaw {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.parse::<f64>().map_err(|e| format!("{t}: {e}"));
        match parts.as_slice() {
            ["uniform"] => Ok(ColumnLaw::Uniform),
            ["const", v] => Ok(ColumnLaw::Constant { value: num(v)? }),
            ["beta", a, b] => Ok(ColumnLaw::Beta {
                alpha: num(a)?,
                beta: num(b)?,
            }),
            _ => Err(format!("unknown column law `{s}`")),
        }
    }
}

/// Which lattice model a realization is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelKind {
    /// Elongated, filled and stationarized.
    Ersl,
    /// Elongated and stationarized, without filling.
    RslElongatedUnfilled,
    /// The plain randomly stretched lattice.
    RslPlain,
    /// Independent edges open with probability `p0`.
    Bernoulli { p0: f64 },
    /// Every edge open.
    Full,
    /// All vertical edges open, horizontal column `i` open with probability `P_i`.
    OneDirectional {
        #[serde(default)]
        column_law: ColumnLaw,
    },
}

impl ModelKind {
    /// Whether realizations carry layer metadata.
    pub fn has_layers(&self) -> bool {
        matches!(
            self,
            ModelKind::Ersl | ModelKind::RslElongatedUnfilled | ModelKind::RslPlain
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Ersl => write!(f, "ersl"),
            ModelKind::RslElongatedUnfilled => write!(f, "rsl_elongated_unfilled"),
            ModelKind::RslPlain => write!(f, "rsl_plain"),
            ModelKind::Bernoulli { p0 } => write!(f, "bernoulli({p0})"),
            ModelKind::Full => write!(f, "full"),
            ModelKind::OneDirectional { column_law } => write!(f, "one_directional({column_law})"),
        }
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let inner = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
        };
        match s {
            "ersl" => return Ok(ModelKind::Ersl),
            "rsl_elongated_unfilled" => return Ok(ModelKind::RslElongatedUnfilled),
            "rsl_plain" => return Ok(ModelKind::RslPlain),
            "full" => return Ok(ModelKind::Full),
            "one_directional" => {
                return Ok(ModelKind::OneDirectional {
                    column_law: ColumnLaw::Uniform,
                })
            }
            _ => {}
        }
        if let Some(p0) = inner("bernoulli") {
            let p0 = p0.parse::<f64>().map_err(|e| format!("{p0}: {e}"))?;
            return Ok(ModelKind::Bernoulli { p0 });
        }
        if let Some(law) = inner("one_directional") {
            return Ok(ModelKind::OneDirectional {
                column_law: law.parse()?,
            });
        }
        Err(format!("unknown model kind `{s}`"))
    }
}

/// Everything needed to reproduce one realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealizationSpec {
    pub params: ModelParams,
    pub n: u64,
    pub seed: u64,
    pub model: ModelKind,
    /// Parameter validation mode; not part of the serialized form.
    #[serde(skip)]
    pub validation: Validation,
}

impl RealizationSpec {
    pub fn new(params: ModelParams, n: u64, seed: u64, model: ModelKind) -> Self {
        Self {
            params,
            n,
            seed,
            model,
            validation: Validation::Strict,
        }
    }

    pub fn with_validation(mut self, validation: Validation) -> Self {
        self.validation = validation;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_n(mut self, n: u64) -> Self {
        self.n = n;
        self
    }
}

pub fn generate_window(spec: &RealizationSpec) -> Result<EdgeGrid, GenerationError> {
    generate_window_capped(spec, DEFAULT_MAX_EDGES)
}

/// Builds the edge grid of `spec` on `[0, n]²`, refusing windows with more
/// than `max_edges` edges.
pub fn generate_window_capped(spec: &RealizationSpec, max_edges: u64) -> Result<EdgeGrid, GenerationError> {
    if spec.n == 0 {
        return Err(GenerationError::EmptyWindow);
    }
    let edges = 2u64
        .checked_mul(spec.n)
        .and_then(|x| x.checked_mul(spec.n + 1))
        .unwrap_or(u64::MAX);
    if edges > max_edges {
        return Err(GenerationError::MemoryBudget {
            n: spec.n,
            edges,
            cap: max_edges,
        });
    }
    let n = spec.n as usize;
    let grid = match spec.model {
        ModelKind::Full => EdgeGrid::open(n),
        ModelKind::Bernoulli { p0 } => {
            if !(0.0..=1.0).contains(&p0) {
                return Err(GenerationError::Distribution(format!("bernoulli p0 = {p0}")));
            }
            bernoulli(n, spec.seed, p0)
        }
        ModelKind::OneDirectional { column_law } => one_directional(n, spec.seed, column_law)?,
        ModelKind::Ersl | ModelKind::RslElongatedUnfilled | ModelKind::RslPlain => {
            spec.params.validate_with(spec.validation)?;
            let law = LayerLaw::new(&spec.params);
            stretched(&law, spec, spec.model)
        }
    };
    Ok(grid.with_provenance(*spec))
}

fn bernoulli(n: usize, seed: u64, p0: f64) -> EdgeGrid {
    let mut grid = EdgeGrid::closed(n);
    for v in 0..=n {
        for u in 0..n {
            let bits = stream(seed, &[TAG_EDGE_H, u as u64, v as u64]);
            grid.set_h(u, v, unit_f64(bits) < p0);
        }
    }
    for v in 0..n {
        for u in 0..=n {
            let bits = stream(seed, &[TAG_EDGE_V, u as u64, v as u64]);
            grid.set_v(u, v, unit_f64(bits) < p0);
        }
    }
    grid
}

/// All vertical edges open; horizontal edges of column `u` open independently
/// with a column probability drawn from `law`.
pub fn generate_one_directional(n: usize, seed: u64, law: ColumnLaw) -> Result<EdgeGrid, GenerationError> {
    let spec = RealizationSpec::new(
        ModelParams::moderate(),
        n as u64,
        seed,
        ModelKind::OneDirectional { column_law: law },
    );
    generate_window(&spec)
}

/// Probability drawn for horizontal column `u` of the one-directional model.
pub fn one_directional_column_probability(seed: u64, law: ColumnLaw, u: usize) -> f64 {
    law.sample(stream(seed, &[TAG_COLUMN_P, u as u64]))
}

fn one_directional(n: usize, seed: u64, law: ColumnLaw) -> Result<EdgeGrid, GenerationError> {
    law.check()?;
    let mut grid = EdgeGrid::closed(n);
    for u in 0..n {
        let p_col = one_directional_column_probability(seed, law, u);
        for v in 0..=n {
            let bits = stream(seed, &[TAG_EDGE_H, u as u64, v as u64]);
            grid.set_h(u, v, unit_f64(bits) < p_col);
        }
    }
    for v in 0..n {
        for u in 0..=n {
            grid.set_v(u, v, true);
        }
    }
    Ok(grid)
}

/// Whether vertex position `w` lies in the closed span `[start, end]` of a
/// layer with badness at most `cutoff`.
fn closed_span_good(seq: &LayerSequence, index: &[i64], w: usize, cutoff: u32) -> bool {
    let i = index[w];
    let layer = seq.layer(i).unwrap();
    if layer.badness <= cutoff {
        return true;
    }
    layer.start == w as i64 && seq.layer(i - 1).is_some_and(|prev| prev.badness <= cutoff)
}

fn stretched(law: &LayerLaw, spec: &RealizationSpec, kind: ModelKind) -> EdgeGrid {
    let n = spec.n as usize;
    let params = &spec.params;
    let elongated = kind != ModelKind::RslPlain;
    let filled = kind == ModelKind::Ersl;
    let xs = sample_layer_sequence(law, spec.n, Axis::X, spec.seed, elongated);
    let ys = sample_layer_sequence(law, spec.n, Axis::Y, spec.seed, elongated);
    let x_index = xs.index_map(n);
    let y_index = ys.index_map(n);
    let x_open_p: Vec<f64> = x_index
        .iter()
        .map(|&i| params.p.powi(xs.layer(i).unwrap().badness.min(i32::MAX as u32) as i32))
        .collect();
    let y_open_p: Vec<f64> = y_index
        .iter()
        .map(|&i| params.p.powi(ys.layer(i).unwrap().badness.min(i32::MAX as u32) as i32))
        .collect();
    let cutoff = params.fill_cutoff;
    let x_layer_good: Vec<bool> = x_index
        .iter()
        .map(|&i| xs.layer(i).unwrap().badness <= cutoff)
        .collect();
    let y_layer_good: Vec<bool> = y_index
        .iter()
        .map(|&i| ys.layer(i).unwrap().badness <= cutoff)
        .collect();
    let x_span_good: Vec<bool> = (0..=n).map(|w| closed_span_good(&xs, &x_index, w, cutoff)).collect();
    let y_span_good: Vec<bool> = (0..=n).map(|w| closed_span_good(&ys, &y_index, w, cutoff)).collect();

    let mut grid = EdgeGrid::closed(n);
    let seed = spec.seed;
    // Horizontal edge (u, v) copies original edge (column of u, row of v).
    for v in 0..=n {
        let row = y_index[v] as u64;
        let mut u = 0;
        while u < n {
            let column = x_index[u];
            let open = unit_f64(stream(seed, &[TAG_EDGE_H, column as u64, row])) < x_open_p[u];
            while u < n && x_index[u] == column {
                let fill = filled && x_layer_good[u] && y_span_good[v];
                grid.set_h(u, v, open || fill);
                u += 1;
            }
        }
    }
    // Vertical edge (u, v) copies original edge (column of vertex u, row of v).
    for v in 0..n {
        let row = y_index[v] as u64;
        let mut u = 0;
        while u <= n {
            let column = x_index[u];
            let open = unit_f64(stream(seed, &[TAG_EDGE_V, column as u64, row])) < y_open_p[v];
            while u <= n && x_index[u] == column {
                let fill = filled && x_span_good[u] && y_layer_good[v];
                grid.set_v(u, v, open || fill);
                u += 1;
            }
        }
    }
    grid.with_layers(LayerPair { x: xs, y: ys })
}

/// Monte Carlo estimate of the probability that the horizontal edge nearest
/// the window centre is open. Returns `(mean, standard error)`.
pub fn annealed_edge_open_probability(
    template: &RealizationSpec,
    reps: u64,
    seed_base: u64,
) -> Result<(f64, f64), GenerationError> {
    assert!(reps >= 1);
    let n = template.n as usize;
    let (u, v) = ((n - 1) / 2, n / 2);
    let hits: u64 = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let seed = crate::seeding::seed_for(seed_base, rep, template.n, "annealed");
            let grid = generate_window(&template.with_seed(seed))?;
            Ok(grid.is_open_h(u, v) as u64)
        })
        .sum::<Result<u64, GenerationError>>()?;
    let mean = hits as f64 / reps as f64;
    let se = if reps > 1 {
        (mean * (1.0 - mean) / (reps - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok((mean, se))
}
