use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::generators::Axis;
use crate::lattice::{cluster, EdgeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    None,
    #[default]
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Target relative residual `|b - Ax| / |b|`.
    pub tol: f64,
    /// Iteration cap; `None` means `20 (n+1)²`.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

/// Minimizer of the Dirichlet energy with `V = 0` on the low face and `V = 1`
/// on the high face of `boundary_axis`.
///
/// Energies use the per-edge convention: each open edge contributes
/// `(ΔV)²` once.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSolution {
    pub n: usize,
    /// Potential per vertex, row-major `u + (n+1) v`.
    pub potential: Vec<f64>,
    pub energy: f64,
    /// `n^{2-d} · energy`.
    pub normalized_energy: f64,
    pub iterations: usize,
    /// True relative residual of the reduced system at exit.
    pub relative_residual: f64,
    pub boundary_axis: Axis,
}

/// Per-edge Dirichlet energy of an arbitrary potential.
pub fn energy(grid: &EdgeGrid, potential: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (u, v) in grid.open_h_edges() {
        let d = potential[grid.vertex(u + 1, v)] - potential[grid.vertex(u, v)];
        sum += d * d;
    }
    for (u, v) in grid.open_v_edges() {
        let d = potential[grid.vertex(u, v + 1)] - potential[grid.vertex(u, v)];
        sum += d * d;
    }
    sum
}

pub(crate) fn normalization(n: usize, d: u32) -> f64 {
    (n as f64).powi(2 - d as i32)
}

/// Max over vertices strictly between the two faces of `|Σ_{w ~ z} (V(w) - V(z))|`.
pub fn harmonic_residual(solution: &DirichletSolution, grid: &EdgeGrid) -> f64 {
    let n = grid.n();
    let v = &solution.potential;
    let mut worst: f64 = 0.0;
    for z in 0..grid.vertex_count() {
        let (a, b) = grid.coords(z);
        let along = match solution.boundary_axis {
            Axis::X => a,
            Axis::Y => b,
        };
        if along == 0 || along == n {
            continue;
        }
        let mut r = 0.0;
        grid.for_each_neighbor(z, |w| r += v[w] - v[z]);
        worst = worst.max(r.abs());
    }
    worst
}

/// Classification of vertices for the reduced system.
pub(crate) struct Reduction {
    /// Potential with face values and constant components filled in.
    pub potential: Vec<f64>,
    /// Vertices whose potential is unknown.
    pub free: Vec<usize>,
}

/// Splits vertices into fixed and free: face vertices take their face value,
/// components touching only one face take that face's value, components
/// touching neither are pinned to 0. `labels` gives a component id per vertex.
pub(crate) fn reduce(grid: &EdgeGrid, labels: &[usize]) -> Reduction {
    let n = grid.n();
    let count = grid.vertex_count();
    let mut low = vec![false; count];
    let mut high = vec![false; count];
    for v in 0..=n {
        low[labels[grid.vertex(0, v)]] = true;
        high[labels[grid.vertex(n, v)]] = true;
    }
    let mut potential = vec![0.0; count];
    let mut free = Vec::new();
    for z in 0..count {
        let (u, _) = grid.coords(z);
        let c = labels[z];
        potential[z] = if u == 0 {
            0.0
        } else if u == n {
            1.0
        } else if low[c] && high[c] {
            free.push(z);
            0.0
        } else if high[c] {
            1.0
        } else {
            0.0
        };
    }
    Reduction { potential, free }
}

const NONE: u32 = u32::MAX;

/// Reduced Laplacian on the free vertices in compact form.
struct ReducedSystem {
    diag: Vec<f64>,
    neighbors: Vec<[u32; 4]>,
    rhs: Vec<f64>,
}

impl ReducedSystem {
    fn build(grid: &EdgeGrid, reduction: &Reduction) -> Self {
        let mut slot = vec![NONE; grid.vertex_count()];
        for (i, &z) in reduction.free.iter().enumerate() {
            slot[z] = i as u32;
        }
        let m = reduction.free.len();
        let mut diag = Vec::with_capacity(m);
        let mut neighbors = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for &z in &reduction.free {
            let mut deg = 0.0;
            let mut nb = [NONE; 4];
            let mut k = 0;
            let mut b = 0.0;
            grid.for_each_neighbor(z, |w| {
                deg += 1.0;
                if slot[w] == NONE {
                    b += reduction.potential[w];
                } else {
                    nb[k] = slot[w];
                    k += 1;
                }
            });
            diag.push(deg);
            neighbors.push(nb);
            rhs.push(b);
        }
        Self { diag, neighbors, rhs }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = self.diag[i] * x[i];
            for &j in &self.neighbors[i] {
                if j == NONE {
                    break;
                }
                acc -= x[j as usize];
            }
            *o = acc;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradient. Returns `(iterations, true relative residual)`.
fn conjugate_gradient(
    system: &ReducedSystem,
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    preconditioner: Preconditioner,
) -> Result<(usize, f64), SolverError> {
    let m = x.len();
    let b_norm = dot(&system.rhs, &system.rhs).sqrt();
    if m == 0 || b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok((0, 0.0));
    }
    let precondition = |r: &[f64], z: &mut [f64]| match preconditioner {
        Preconditioner::None => z.copy_from_slice(r),
        Preconditioner::Jacobi => {
            for i in 0..r.len() {
                z[i] = r[i] / system.diag[i];
            }
        }
    };

    let mut ax = vec![0.0; m];
    system.apply(x, &mut ax);
    let mut r: Vec<f64> = system.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z = vec![0.0; m];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; m];
    let mut iterations = 0;
    let mut rel = dot(&r, &r).sqrt() / b_norm;
    while rel > tol {
        if iterations >= max_iter {
            return Err(SolverError::NotConverged {
                iterations,
                residual: rel,
            });
        }
        system.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..m {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        // Refresh the recursive residual now and then to limit drift.
        if iterations % 500 == 0 {
            system.apply(x, &mut ax);
            for i in 0..m {
                r[i] = system.rhs[i] - ax[i];
            }
        }
        rel = dot(&r, &r).sqrt() / b_norm;
        precondition(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..m {
            p[i] = z[i] + beta * p[i];
        }
    }
    system.apply(x, &mut ax);
    let true_rel = system
        .rhs
        .iter()
        .zip(&ax)
        .map(|(b, a)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt()
        / b_norm;
    Ok((iterations, true_rel))
}

/// Minimizes the Dirichlet energy over potentials fixed to 0 and 1 on the two
/// faces orthogonal to `axis`, by conjugate gradient on the reduced system of
/// the components touching both faces.
pub fn solve_dirichlet(grid: &EdgeGrid, axis: Axis, config: &SolverConfig) -> Result<DirichletSolution, SolverError> {
    if axis == Axis::Y {
        let mut sol = solve_dirichlet(&grid.transpose(), Axis::X, config)?;
        sol.potential = transpose_potential(grid.n(), &sol.potential);
        sol.boundary_axis = Axis::Y;
        return Ok(sol);
    }
    let n = grid.n();
    let labels = cluster(grid).labels;
    let reduction = reduce(grid, &labels);
    let system = ReducedSystem::build(grid, &reduction);
    let mut x = vec![0.5; reduction.free.len()];
    let max_iter = config.max_iter.unwrap_or(20 * (n + 1) * (n + 1));
    let (iterations, relative_residual) =
        conjugate_gradient(&system, &mut x, config.tol, max_iter, config.preconditioner)?;
    let mut potential = reduction.potential;
    for (&z, &value) in reduction.free.iter().zip(&x) {
        potential[z] = value;
    }
    let energy = energy(grid, &potential);
    Ok(DirichletSolution {
        n,
        normalized_energy: normalization(n, grid.dimension()) * energy,
        potential,
        energy,
        iterations,
        relative_residual,
        boundary_axis: Axis::X,
    })
}

pub(crate) fn transpose_potential(n: usize, potential: &[f64]) -> Vec<f64> {
    let stride = n + 1;
    let mut out = vec![0.0; potential.len()];
    for v in 0..stride {
        for u in 0..stride {
            out[u + stride * v] = potential[v + stride * u];
        }
    }
    out
}
