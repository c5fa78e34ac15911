//! Dense eigenvalue oracle and spectrum helpers.

use crate::error::{Error, Result};
use crate::matrix::{imag_norm, to_real, CMat, C64};

/// Eigenvalues of a square matrix. Exactly real input goes through real
/// arithmetic, so conjugate pairs stay paired.
pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Dimension(format!("eigenvalues of a {}x{} matrix", n, m.ncols())));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if !m.iter().all(|z| z.is_finite()) {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    let out = if imag_norm(m) == 0.0 {
        let r = to_real(m);
        faer::Mat::<f64>::from_fn(n, n, |i, j| r[(i, j)]).eigenvalues()
    } else {
        faer::Mat::<C64>::from_fn(n, n, |i, j| m[(i, j)]).eigenvalues()
    };
    out.map_err(|e| Error::Eigen(format!("eigenvalue iteration failed: {e:?}")))
}

/// Largest modulus in a list of eigenvalues, floored at one.
pub fn spectral_scale(values: &[C64]) -> f64 {
    values.iter().fold(1.0f64, |acc, z| acc.max(z.norm()))
}

/// Single-linkage clusters of points closer than `radius`. Returns index groups
/// in order of first appearance.
pub fn cluster(values: &[C64], radius: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let next = p[j];
            p[j] = r;
            j = next;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, g)) => g.push(i),
            None => groups.push((r, vec![i])),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

/// Replaces every cluster of computed eigenvalues by copies of its mean. The
/// mean of the eigenvalues split off a defective eigenvalue is far better
/// conditioned than the individual values.
pub fn cluster_means(values: &[C64], radius: f64) -> Vec<C64> {
    let mut out = values.to_vec();
    for g in cluster(values, radius) {
        let mean = g.iter().map(|&i| values[i]).sum::<C64>() / C64::new(g.len() as f64, 0.0);
        for &i in &g {
            out[i] = mean;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{c, from_real, jordan_block};

    #[test]
    fn real_matrix_gives_conjugate_pair() {
        let m = from_real(2, 2, &[0.0, -2.0, 2.0, 0.0]);
        let mut e = eigenvalues(&m).unwrap();
        e.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((e[0] - c(0.0, -2.0)).norm() < 1e-14);
        assert!((e[1] - c(0.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn cluster_mean_recovers_defective_eigenvalue() {
        let j = jordan_block(c(1.5, 0.5), 3);
        let e = eigenvalues(&j).unwrap();
        for z in cluster_means(&e, 1e-3) {
            assert!((z - c(1.5, 0.5)).norm() < 1e-12);
        }
    }

    #[test]
    fn clustering_is_transitive() {
        let v = [c(0.0, 0.0), c(0.9, 0.0), c(1.8, 0.0), c(5.0, 0.0)];
        let g = cluster(&v, 1.0);
        assert_eq!(g, vec![vec![0, 1, 2], vec![3]]);
    }
}
