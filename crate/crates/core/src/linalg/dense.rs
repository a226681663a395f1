use super::C64;
use nalgebra::DMatrix;

/// Ascending eigenvalues and eigenvectors (columns) of a Hermitian matrix.
pub fn hermitian_eigen(a: DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = nalgebra::linalg::SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Ascending eigenvalues of the Hermitian pencil `(k, m)` with `m` positive
/// definite, with `m`-orthonormal eigenvectors.
pub fn generalized_hermitian_eigen(k: &DMatrix<C64>, m: &DMatrix<C64>) -> Option<(Vec<f64>, DMatrix<C64>)> {
    let chol = nalgebra::linalg::Cholesky::new(m.clone())?;
    let l = chol.l();
    let linv = l.clone().try_inverse()?;
    let mut c = &linv * k * linv.adjoint();
    // symmetrize against roundoff
    c = (&c + c.adjoint()) * C64::new(0.5, 0.0);
    let (values, y) = hermitian_eigen(c);
    let x = linv.adjoint() * y;
    Some((values, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generalized_diagonal_pencil() {
        let k = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(2.0, 0.0), C64::new(-3.0, 0.0)]));
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(4.0, 0.0), C64::new(1.0, 0.0)]));
        let (v, _) = generalized_hermitian_eigen(&k, &m).unwrap();
        assert!((v[0] + 3.0).abs() < 1e-14 && (v[1] - 0.5).abs() < 1e-14);
    }
}
