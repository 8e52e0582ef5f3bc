//! Dense row-major f64 tensors of rank <= 3 and the few matrix products
//! the layers need. Heavy products go through `matrixmultiply::dgemm`,
//! which is single-threaded and deterministic for fixed inputs.

use std::fmt;

#[derive(Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor{:?}", self.shape)
    }
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Tensor {
        assert!(shape.len() <= 3, "rank must be <= 3");
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Tensor {
        assert!(shape.len() <= 3, "rank must be <= 3");
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape/value count mismatch"
        );
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Rows of a rank-2 tensor.
    pub fn rows(&self) -> usize {
        assert_eq!(self.rank(), 2);
        self.shape[0]
    }

    /// Columns of a rank-2 tensor.
    pub fn cols(&self) -> usize {
        assert_eq!(self.rank(), 2);
        self.shape[1]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[r * c..(r + 1) * c]
    }

    /// Reinterprets as rank 2 without copying values.
    pub fn reshape(mut self, shape: &[usize]) -> Tensor {
        assert_eq!(shape.iter().product::<usize>(), self.data.len());
        self.shape = shape.to_vec();
        self
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// c = a @ b for row-major a [m,k] and b [k,n].
pub fn matmul(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k) = (a.rows(), a.cols());
    let (k2, n) = (b.rows(), b.cols());
    assert_eq!(k, k2, "inner dimensions differ");
    let mut c = Tensor::zeros(&[m, n]);
    gemm(m, k, n, a.data(), k as isize, 1, b.data(), n as isize, 1, c.data_mut());
    c
}

/// c = aᵀ @ b for a [k,m] and b [k,n].
pub fn matmul_at_b(a: &Tensor, b: &Tensor) -> Tensor {
    let (k, m) = (a.rows(), a.cols());
    let (k2, n) = (b.rows(), b.cols());
    assert_eq!(k, k2, "inner dimensions differ");
    let mut c = Tensor::zeros(&[m, n]);
    gemm(m, k, n, a.data(), 1, m as isize, b.data(), n as isize, 1, c.data_mut());
    c
}

/// c = a @ bᵀ for a [m,k] and b [n,k].
pub fn matmul_a_bt(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k) = (a.rows(), a.cols());
    let (n, k2) = (b.rows(), b.cols());
    assert_eq!(k, k2, "inner dimensions differ");
    let mut c = Tensor::zeros(&[m, n]);
    gemm(m, k, n, a.data(), k as isize, 1, b.data(), 1, k as isize, c.data_mut());
    c
}

#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_small() {
        let a = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = Tensor::from_vec(&[3, 2], vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let c = matmul(&a, &b);
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn transposed_products_agree_with_plain() {
        let a = Tensor::from_vec(&[3, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = Tensor::from_vec(&[3, 4], (0..12).map(|v| v as f64).collect());
        // aᵀ b computed two ways
        let direct = matmul_at_b(&a, &b);
        let mut at = Tensor::zeros(&[2, 3]);
        for i in 0..3 {
            for j in 0..2 {
                at.data_mut()[j * 3 + i] = a.data()[i * 2 + j];
            }
        }
        let expect = matmul(&at, &b);
        assert_eq!(direct.data(), expect.data());

        // a bᵀ with b as [4,2]
        let b2 = Tensor::from_vec(&[4, 2], (0..8).map(|v| v as f64).collect());
        let direct = matmul_a_bt(&a, &b2);
        let mut b2t = Tensor::zeros(&[2, 4]);
        for i in 0..4 {
            for j in 0..2 {
                b2t.data_mut()[j * 4 + i] = b2.data()[i * 2 + j];
            }
        }
        let expect = matmul(&a, &b2t);
        assert_eq!(direct.data(), expect.data());
    }
}
