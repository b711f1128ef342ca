//! Standard analysis dictionaries.

use crate::ballgeo::Dictionary;
use crate::error::{Error, Result};
use crate::linalg::{intersect_null_spaces, Matrix, Tolerances};

/// `D = I_n` (plain Lasso).
pub fn identity_dict(n: usize) -> Result<Dictionary> {
    Dictionary::new(Matrix::identity(n, n), Tolerances::default())
}

/// Forward differences on `n` points: `(D*x)_i = x_{i+1} - x_i`, `p = n - 1`.
pub fn difference_dict(n: usize) -> Result<Dictionary> {
    if n < 2 {
        return Err(Error::input("difference operator needs at least two points"));
    }
    let dstar = Matrix::from_fn(n - 1, n, |i, j| {
        if j == i {
            -1.0
        } else if j == i + 1 {
            1.0
        } else {
            0.0
        }
    });
    Dictionary::from_dstar(dstar, Tolerances::default())
}

/// Incidence matrix: one column per edge `(u, v)` with `+1` at `u` and `-1`
/// at `v`.
pub fn incidence_dict(edges: &[(usize, usize)], n_vertices: usize) -> Result<Dictionary> {
    if edges.is_empty() {
        return Err(Error::input("graph has no edges"));
    }
    let mut d = Matrix::zeros(n_vertices, edges.len());
    for (k, &(u, v)) in edges.iter().enumerate() {
        if u >= n_vertices || v >= n_vertices || u == v {
            return Err(Error::input(format!("invalid edge ({u}, {v})")));
        }
        d[(u, k)] = 1.0;
        d[(v, k)] = -1.0;
    }
    Dictionary::new(d, Tolerances::default())
}

/// Edges of the complete graph on `n` vertices in lexicographic order.
pub fn complete_graph_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
}

/// Identity atoms followed by forward differences, `p = 2n - 1`.
pub fn fused_lasso_dict(n: usize) -> Result<Dictionary> {
    if n < 2 {
        return Err(Error::input("fused Lasso needs at least two points"));
    }
    let dstar = Matrix::from_fn(2 * n - 1, n, |i, j| {
        if i < n {
            if i == j {
                1.0
            } else {
                0.0
            }
        } else {
            let k = i - n;
            if j == k {
                -1.0
            } else if j == k + 1 {
                1.0
            } else {
                0.0
            }
        }
    });
    Dictionary::from_dstar(dstar, Tolerances::default())
}

/// Number of connected components of a graph (isolated vertices included).
pub fn component_count(edges: &[(usize, usize)], n_vertices: usize) -> usize {
    let mut parent: Vec<usize> = (0..n_vertices).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut count = n_vertices;
    for &(u, v) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
            count -= 1;
        }
    }
    count
}

/// `Ker Φ ∩ Ker D* = {0}`. For incidence dictionaries this says that `Φ` is
/// not blind to vectors constant on each connected component, and it is
/// exactly the condition for a compact solution set.
pub fn measurement_sees_lineality(dict: &Dictionary, phi: &Matrix) -> Result<bool> {
    if phi.ncols() != dict.n() {
        return Err(Error::input("measurement matrix has the wrong column count"));
    }
    Ok(intersect_null_spaces(&[phi, dict.dstar()], dict.tol())?.ncols() == 0)
}
