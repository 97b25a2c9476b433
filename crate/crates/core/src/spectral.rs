//! Normalized symmetric Laplacian, a dense Jacobi eigensolver and per-edge
//! eigenfeatures.

use ndarray::{s, Array1, Array2};

use crate::error::{Error, Result};

/// Absolute tolerance on symmetry of solver input.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Off-diagonal Frobenius norm at which Jacobi sweeps stop.
pub const OFF_DIAGONAL_TOL: f64 = 1e-12;
const SIGN_TOL: f64 = 1e-12;

/// `L = I - D^{-1/2} A D^{-1/2}` as a dense `n x n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianMatrix(pub Array2<f64>);

/// Eigenvalues in descending order; column `j` of `vectors` pairs with
/// `values[j]`. Each column has unit norm and its first entry above
/// `1e-12` in magnitude is positive.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSystem {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Isolated nodes (degree 0) get an all-zero row and column, diagonal
/// included.
pub fn normalized_laplacian(adjacency: &Array2<f64>, degree: &Array2<f64>) -> Result<LaplacianMatrix> {
    let n = adjacency.nrows();
    if adjacency.ncols() != n || degree.dim() != (n, n) {
        return Err(Error::Shape(format!(
            "adjacency {:?} and degree {:?} must be equal square matrices",
            adjacency.dim(),
            degree.dim()
        )));
    }
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d = degree[[i, i]];
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        if inv_sqrt[i] == 0.0 {
            continue;
        }
        l[[i, i]] = 1.0;
        for j in 0..n {
            let a = adjacency[[i, j]];
            if a != 0.0 && inv_sqrt[j] != 0.0 {
                l[[i, j]] -= a * inv_sqrt[i] * inv_sqrt[j];
            }
        }
    }
    Ok(LaplacianMatrix(l))
}

/// Full eigendecomposition of a real symmetric matrix by cyclic Jacobi
/// rotations.
pub fn symmetric_eigen(matrix: &Array2<f64>) -> Result<EigenSystem> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::Shape(format!("expected a square matrix, got {:?}", matrix.dim())));
    }
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((matrix[[i, j]] - matrix[[j, i]]).abs());
        }
    }
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }

    let mut a = matrix.clone();
    let mut v = Array2::<f64>::eye(n);
    let max_rotations = 100 * n * n;
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    let mut rotations = 0usize;

    loop {
        let off = off_diagonal_norm(&a);
        if off <= OFF_DIAGONAL_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                if rotations >= max_rotations {
                    return Err(Error::NoConvergence(max_rotations));
                }
                rotations += 1;
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    // descending by eigenvalue; ties keep the solver's column order
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[j, j]].total_cmp(&a[[i, i]]).then(i.cmp(&j)));

    let values = Array1::from_iter(order.iter().map(|&i| a[[i, i]]));
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src).to_owned();
        if let Some(first) = col.iter().copied().find(|x| x.abs() > SIGN_TOL) {
            if first < 0.0 {
                col.mapv_inplace(|x| -x);
            }
        }
        vectors.column_mut(dst).assign(&col);
    }
    Ok(EigenSystem { values, vectors })
}

fn off_diagonal_norm(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[[i, j]] * a[[i, j]];
            }
        }
    }
    sum.sqrt()
}

/// Annihilates `a[p][q]` with one plane rotation and accumulates it into `v`.
fn rotate(a: &mut Array2<f64>, v: &mut Array2<f64>, p: usize, q: usize) {
    let n = a.nrows();
    let apq = a[[p, q]];
    let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        let akp = a[[k, p]];
        let akq = a[[k, q]];
        a[[k, p]] = c * akp - s * akq;
        a[[k, q]] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[[p, k]];
        let aqk = a[[q, k]];
        a[[p, k]] = c * apk - s * aqk;
        a[[q, k]] = s * apk + c * aqk;
    }
    a[[p, q]] = 0.0;
    a[[q, p]] = 0.0;

    for k in 0..n {
        let vkp = v[[k, p]];
        let vkq = v[[k, q]];
        v[[k, p]] = c * vkp - s * vkq;
        v[[k, q]] = s * vkp + c * vkq;
    }
}

/// Rows `u` and `v` of the eigenvector matrix, restricted to the `m`
/// columns of largest eigenvalue, concatenated: `[Λ[u][..m] ; Λ[v][..m]]`.
pub fn edge_eigenfeatures(es: &EigenSystem, u: usize, v: usize, m: usize) -> Result<Vec<f64>> {
    let n = es.dim();
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "eigenfeature width m = {m} must lie in 1..={n}"
        )));
    }
    for i in [u, v] {
        if i >= n {
            return Err(Error::NodeOutOfRange { index: i, nodes: n });
        }
    }
    let mut out = Vec::with_capacity(2 * m);
    out.extend(es.vectors.slice(s![u, ..m]).iter());
    out.extend(es.vectors.slice(s![v, ..m]).iter());
    Ok(out)
}
