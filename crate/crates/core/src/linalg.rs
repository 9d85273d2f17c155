//! Small dense linear-algebra helpers on `f64`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Counts of negative, zero and positive eigenvalues of a symmetric matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

impl Inertia {
    pub fn of_eigenvalues(ev: impl IntoIterator<Item = f64>, tol: f64) -> Self {
        let mut out = Inertia::default();
        for l in ev {
            if l < -tol {
                out.negative += 1;
            } else if l > tol {
                out.positive += 1;
            } else {
                out.zero += 1;
            }
        }
        out
    }

    pub fn add(self, o: Inertia) -> Inertia {
        Inertia {
            negative: self.negative + o.negative,
            zero: self.zero + o.zero,
            positive: self.positive + o.positive,
        }
    }
}

/// Sorted eigenvalues of the symmetric part of `m`.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

pub fn inertia(m: &DMatrix<f64>, tol: f64) -> Inertia {
    if m.nrows() == 0 {
        return Inertia::default();
    }
    Inertia::of_eigenvalues(sym_eigenvalues(m), tol)
}

/// Orthonormal basis of the column span of a full-rank `m`.
pub fn orthonormal_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().qr().q()
}

/// Singular values in ascending order together with the matching right singular vectors.
pub fn svd_ascending(m: &DMatrix<f64>) -> (Vec<f64>, Vec<DVector<f64>>) {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| {
        svd.singular_values[a]
            .partial_cmp(&svd.singular_values[b])
            .unwrap()
    });
    let sv = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let vecs = idx.iter().map(|&i| vt.row(i).transpose()).collect();
    (sv, vecs)
}

pub fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    m.singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Spectral norm.
pub fn norm2(m: &DMatrix<f64>) -> f64 {
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Solve a symmetric positive definite system, falling back to LU.
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    match a.clone().cholesky() {
        Some(ch) => Some(ch.solve(b)),
        None => a.clone().lu().solve(b),
    }
}
