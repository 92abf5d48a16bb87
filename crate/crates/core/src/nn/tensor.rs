//! Row-major tensor storage and the matrix kernels behind the layers.

use super::{NnError, Scalar};

/// A dense row-major tensor.
///
/// Images use channel-last `(N, H, W, C)` order, so a flattened image is
/// already contiguous and a conv output written one spatial row at a time
/// lands in place.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    dims: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            dims: dims.to_vec(),
            data: vec![T::zero(); dims.iter().product()],
        }
    }

    pub fn from_vec(dims: &[usize], data: Vec<T>) -> Result<Self, NnError> {
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(NnError::ShapeMismatch(format!(
                "{} values for dims {:?}",
                data.len(),
                dims
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Reinterprets the value buffer under new dimensions of equal volume.
    pub fn reshaped(mut self, dims: &[usize]) -> Result<Self, NnError> {
        let expected: usize = dims.iter().product();
        if expected != self.data.len() {
            return Err(NnError::ShapeMismatch(format!(
                "cannot reshape {:?} into {:?}",
                self.dims, dims
            )));
        }
        self.dims = dims.to_vec();
        Ok(self)
    }

    /// Leading dimension, the batch size for activations.
    pub fn batch(&self) -> usize {
        self.dims.first().copied().unwrap_or(0)
    }

    /// Per-item value count (everything but the leading dimension).
    pub fn item_len(&self) -> usize {
        self.dims.iter().skip(1).product()
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|&v| U::from_f64(v.to_f64s())).collect(),
        }
    }
}

/// `out[c x r] = transpose of src[r x c]`.
pub fn transpose<T: Scalar>(src: &[T], rows: usize, cols: usize, out: &mut [T]) {
    debug_assert_eq!(src.len(), rows * cols);
    debug_assert_eq!(out.len(), rows * cols);
    for r in 0..rows {
        let row = &src[r * cols..(r + 1) * cols];
        for (c, &v) in row.iter().enumerate() {
            out[c * rows + r] = v;
        }
    }
}

/// `c[m x n] += a[m x k] * b[k x n]`.
///
/// The accumulation order over `k` is fixed, so results do not depend on
/// how callers parallelize across output rows.
pub fn matmul_accumulate<T: Scalar>(
    a: &[T],
    b: &[T],
    m: usize,
    k: usize,
    n: usize,
    c: &mut [T],
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let c_row = &mut c[i * n..(i + 1) * n];
        for (p, &alpha) in a_row.iter().enumerate() {
            let b_row = &b[p * n..(p + 1) * n];
            for (cv, &bv) in c_row.iter_mut().zip(b_row) {
                *cv = alpha.mul_add(bv, *cv);
            }
        }
    }
}

/// `c[k x n] = a^T * b` for `a[m x k]`, `b[m x n]`.
pub fn matmul_transpose_a<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    let mut at = vec![T::zero(); m * k];
    transpose(a, m, k, &mut at);
    let mut c = vec![T::zero(); k * n];
    matmul_accumulate(&at, b, k, m, n, &mut c);
    c
}

/// `c[m x k] = a * b^T` for `a[m x n]`, `b[k x n]`.
pub fn matmul_transpose_b<T: Scalar>(a: &[T], b: &[T], m: usize, n: usize, k: usize) -> Vec<T> {
    let mut bt = vec![T::zero(); n * k];
    transpose(b, k, n, &mut bt);
    let mut c = vec![T::zero(); m * k];
    matmul_accumulate(a, &bt, m, n, k, &mut c);
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_volume() {
        assert!(Tensor::<f32>::from_vec(&[2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::<f32>::from_vec(&[2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn matmul_matches_hand_computation() {
        // [1 2; 3 4] * [5 6; 7 8] = [19 22; 43 50]
        let a = [1.0f64, 2.0, 3.0, 4.0];
        let b = [5.0f64, 6.0, 7.0, 8.0];
        let mut c = [0.0f64; 4];
        matmul_accumulate(&a, &b, 2, 2, 2, &mut c);
        assert_eq!(c, [19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn transposed_variants_agree_with_plain_matmul() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let (m, k, n) = (4, 3, 5);
        let a: Vec<f64> = (0..m * k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..k * n).map(|_| rng.random_range(-1.0..1.0)).collect();

        let mut c = vec![0.0; m * n];
        matmul_accumulate(&a, &b, m, k, n, &mut c);

        // a^T path: (a^T)^T * b should equal a * b
        let mut at = vec![0.0; m * k];
        transpose(&a, m, k, &mut at);
        let c_tn = matmul_transpose_a(&at, &b, k, m, n);
        for (x, y) in c.iter().zip(&c_tn) {
            assert!((x - y).abs() < 1e-12);
        }

        // b^T path
        let mut bt = vec![0.0; k * n];
        transpose(&b, k, n, &mut bt);
        let c_nt = matmul_transpose_b(&a, &bt, m, k, n);
        for (x, y) in c.iter().zip(&c_nt) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn reshape_preserves_data() {
        let t = Tensor::<f32>::from_vec(&[2, 6], (0..12).map(|v| v as f32).collect()).unwrap();
        let r = t.clone().reshaped(&[2, 2, 3]).unwrap();
        assert_eq!(r.data(), t.data());
        assert!(t.reshaped(&[5, 5]).is_err());
    }
}
