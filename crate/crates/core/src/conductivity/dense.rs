use nalgebra::{DMatrix, DVector};

use super::solver::{energy, normalization, reduce, DirichletSolution};
use super::SolverError;
use crate::generators::Axis;
use crate::lattice::EdgeGrid;

/// Largest vertex count accepted by [`dense_oracle`].
pub const DENSE_VERTEX_CAP: usize = 10_000;

/// Component labels by depth-first search, independent of the union-find path.
fn dfs_labels(grid: &EdgeGrid) -> Vec<usize> {
    let count = grid.vertex_count();
    let mut labels = vec![usize::MAX; count];
    let mut stack = Vec::new();
    for root in 0..count {
        if labels[root] != usize::MAX {
            continue;
        }
        labels[root] = root;
        stack.push(root);
        while let Some(z) = stack.pop() {
            grid.for_each_neighbor(z, |w| {
                if labels[w] == usize::MAX {
                    labels[w] = root;
                    stack.push(w);
                }
            });
        }
    }
    labels
}

/// Brute-force solve of the same problem as [`super::solve_dirichlet`]:
/// assembles the constrained quadratic form densely and factors it.
pub fn dense_oracle(grid: &EdgeGrid, axis: Axis) -> Result<DirichletSolution, SolverError> {
    let count = grid.vertex_count();
    if count > DENSE_VERTEX_CAP {
        return Err(SolverError::SizeCap {
            vertices: count,
            cap: DENSE_VERTEX_CAP,
        });
    }
    if axis == Axis::Y {
        let mut sol = dense_oracle(&grid.transpose(), Axis::X)?;
        sol.potential = super::solver::transpose_potential(grid.n(), &sol.potential);
        sol.boundary_axis = Axis::Y;
        return Ok(sol);
    }
    let n = grid.n();
    let reduction = reduce(grid, &dfs_labels(grid));
    let m = reduction.free.len();
    let mut slot = vec![usize::MAX; count];
    for (i, &z) in reduction.free.iter().enumerate() {
        slot[z] = i;
    }

    // Gradient of ½ Σ_edges (V_a - V_b)² in the free variables.
    let mut matrix = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    let mut add_edge = |a: usize, b: usize| match (slot[a], slot[b]) {
        (usize::MAX, usize::MAX) => {}
        (i, usize::MAX) => {
            matrix[(i, i)] += 1.0;
            rhs[i] += reduction.potential[b];
        }
        (usize::MAX, j) => {
            matrix[(j, j)] += 1.0;
            rhs[j] += reduction.potential[a];
        }
        (i, j) => {
            matrix[(i, i)] += 1.0;
            matrix[(j, j)] += 1.0;
            matrix[(i, j)] -= 1.0;
            matrix[(j, i)] -= 1.0;
        }
    };
    for (u, v) in grid.open_h_edges() {
        add_edge(grid.vertex(u, v), grid.vertex(u + 1, v));
    }
    for (u, v) in grid.open_v_edges() {
        add_edge(grid.vertex(u, v), grid.vertex(u, v + 1));
    }

    let x = if m == 0 {
        DVector::zeros(0)
    } else {
        let cholesky = matrix.clone().cholesky().ok_or(SolverError::Singular)?;
        cholesky.solve(&rhs)
    };
    let residual = if m == 0 || rhs.norm() == 0.0 {
        0.0
    } else {
        (&rhs - &matrix * &x).norm() / rhs.norm()
    };
    let mut potential = reduction.potential;
    for (i, &z) in reduction.free.iter().enumerate() {
        potential[z] = x[i];
    }
    let energy = energy(grid, &potential);
    Ok(DirichletSolution {
        n,
        normalized_energy: normalization(n, grid.dimension()) * energy,
        potential,
        energy,
        iterations: 0,
        relative_residual: residual,
        boundary_axis: Axis::X,
    })
}
