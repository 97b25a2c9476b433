use ndarray::{Array1, Array2};
use proptest::prelude::*;

use gnp::graph::{Edge, Graph, NodeAttr};
use gnp::spectral::{normalized_laplacian, symmetric_eigen, EigenSystem};

/// Eigenvalues of a symmetric 2x2 matrix, descending.
fn roots2(a: f64, b: f64, d: f64) -> Vec<f64> {
    let mean = (a + d) / 2.0;
    let r = (((a - d) / 2.0).powi(2) + b * b).sqrt();
    vec![mean + r, mean - r]
}

/// Roots of the characteristic cubic of a symmetric 3x3 matrix via the
/// trigonometric method, descending.
fn roots3(m: &Array2<f64>) -> Vec<f64> {
    let p1 = m[[0, 1]].powi(2) + m[[0, 2]].powi(2) + m[[1, 2]].powi(2);
    let q = (m[[0, 0]] + m[[1, 1]] + m[[2, 2]]) / 3.0;
    if p1 == 0.0 {
        let mut d = vec![m[[0, 0]], m[[1, 1]], m[[2, 2]]];
        d.sort_by(|a, b| b.partial_cmp(a).unwrap());
        return d;
    }
    let p2 = (m[[0, 0]] - q).powi(2) + (m[[1, 1]] - q).powi(2) + (m[[2, 2]] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = (m - &(Array2::<f64>::eye(3) * q)) / p;
    let det = b[[0, 0]] * (b[[1, 1]] * b[[2, 2]] - b[[1, 2]] * b[[2, 1]])
        - b[[0, 1]] * (b[[1, 0]] * b[[2, 2]] - b[[1, 2]] * b[[2, 0]])
        + b[[0, 2]] * (b[[1, 0]] * b[[2, 1]] - b[[1, 1]] * b[[2, 0]]);
    let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    vec![l1, 3.0 * q - l1 - l3, l3]
}

fn check_decomposition(m: &Array2<f64>, es: &EigenSystem, tol: f64) {
    let n = m.nrows();
    let v = &es.vectors;
    let gram = v.t().dot(v);
    let rebuilt = v.dot(&Array2::from_diag(&es.values)).dot(&v.t());
    for i in 0..n {
        for j in 0..n {
            let eye = if i == j { 1.0 } else { 0.0 };
            assert!((gram[[i, j]] - eye).abs() < tol, "orthonormality at ({i},{j})");
            assert!((rebuilt[[i, j]] - m[[i, j]]).abs() < tol, "reconstruction at ({i},{j})");
        }
    }
    for w in es.values.windows(2) {
        assert!(w[0] >= w[1], "not descending: {:?}", es.values);
    }
}

#[test]
fn every_small_integer_2x2_matches_closed_form() {
    for a in -2..=2 {
        for b in -2..=2 {
            for d in -2..=2 {
                let m = Array2::from_shape_vec((2, 2), vec![a as f64, b as f64, b as f64, d as f64]).unwrap();
                let es = symmetric_eigen(&m).unwrap();
                for (x, y) in es.values.iter().zip(roots2(a as f64, b as f64, d as f64)) {
                    assert!((x - y).abs() < 1e-10, "{m:?}: {x} vs {y}");
                }
                check_decomposition(&m, &es, 1e-10);
            }
        }
    }
}

#[test]
fn every_small_integer_3x3_matches_characteristic_roots() {
    let vals = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let mut count = 0;
    for &a in &vals {
        for &b in &vals {
            for &c in &vals {
                for &d in &vals {
                    for &e in &vals {
                        for &f in &vals {
                            let m = Array2::from_shape_vec((3, 3), vec![a, b, c, b, d, e, c, e, f]).unwrap();
                            let es = symmetric_eigen(&m).unwrap();
                            for (x, y) in es.values.iter().zip(roots3(&m)) {
                                // repeated roots make the trigonometric oracle itself lose digits
                                assert!((x - y).abs() < 1e-7, "{m:?}: {:?} vs {:?}", es.values, roots3(&m));
                            }
                            check_decomposition(&m, &es, 1e-10);
                            count += 1;
                        }
                    }
                }
            }
        }
    }
    assert_eq!(count, 15_625);
}

fn graph_from_bits(n: usize, bits: &[bool]) -> Graph {
    let mut edges = Vec::new();
    let mut k = 0;
    for u in 0..n {
        for v in u + 1..n {
            if bits[k % bits.len()] {
                edges.push(Edge::new(u, v, None));
            }
            k += 1;
        }
    }
    Graph::new(vec![NodeAttr { label: 0 }; n], edges).unwrap()
}

fn laplacian_of(g: &Graph) -> Array2<f64> {
    let all: Vec<usize> = (0..g.edge_count()).collect();
    let (a, d) = g.adjacency_and_degree(&all).unwrap();
    normalized_laplacian(&a, &d).unwrap().0
}

#[test]
fn cycle_spectrum_is_known() {
    // C_n: eigenvalues 1 - cos(2 pi k / n)
    for n in [3usize, 4, 7, 12] {
        let edges = (0..n).map(|i| Edge::new(i, (i + 1) % n, None)).collect();
        let g = Graph::new(vec![NodeAttr { label: 0 }; n], edges).unwrap();
        let es = symmetric_eigen(&laplacian_of(&g)).unwrap();
        let mut expected: Vec<f64> = (0..n)
            .map(|k| 1.0 - (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (x, y) in es.values.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-10, "C{n}: {x} vs {y}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn laplacians_reconstruct_up_to_fifty_nodes(n in 1usize..=50, bits in proptest::collection::vec(proptest::bool::weighted(0.2), 1..64)) {
        let g = graph_from_bits(n, &bits);
        let l = laplacian_of(&g);
        let es = symmetric_eigen(&l).unwrap();
        check_decomposition(&l, &es, 1e-9);
        for &x in &es.values {
            prop_assert!((-1e-10..=2.0 + 1e-10).contains(&x));
        }
        // the trace equals the number of non-isolated nodes
        let active = g.degrees().iter().filter(|&&d| d > 0).count() as f64;
        prop_assert!((es.values.sum() - active).abs() < 1e-9);
        // sign convention: first non-negligible entry of each vector is positive
        for j in 0..n {
            let col: Array1<f64> = es.vectors.column(j).to_owned();
            let first = col.iter().find(|x| x.abs() > 1e-12).copied().unwrap_or(1.0);
            prop_assert!(first > 0.0);
        }
    }

    #[test]
    fn random_symmetric_matrices_decompose(n in 1usize..=12, entries in proptest::collection::vec(-5.0f64..5.0, 144)) {
        let mut m = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                m[[i, j]] = entries[i * 12 + j];
                m[[j, i]] = entries[i * 12 + j];
            }
        }
        let es = symmetric_eigen(&m).unwrap();
        check_decomposition(&m, &es, 1e-9);
    }
}
