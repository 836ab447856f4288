//! Dense real tensors with mode-0-fastest storage, matricization and pairwise contraction.
//!
//! Modes are indexed from zero throughout the crate. The mode-`k` unfolding follows the
//! Kolda–Bader convention: mode `k` indexes the rows and the remaining modes, in increasing
//! order with earlier modes varying fastest, index the columns. Because storage is also
//! mode-0-fastest, the mode-0 unfolding is a reinterpretation of the value buffer.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Column-major real matrix. Tensor unfoldings land here.
pub type Matrix = DMatrix<f64>;

/// Floor on the denominator of [`DenseTensor::relative_change`].
pub const RELATIVE_CHANGE_FLOOR: f64 = 1e-30;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::ShapeMismatch("a tensor needs at least one mode".into()));
    }
    if dims.contains(&0) {
        return Err(Error::ShapeMismatch(format!("zero-length mode in {dims:?}")));
    }
    Ok(())
}

/// Strides of a mode-0-fastest layout.
pub(crate) fn strides_of(dims: &[usize]) -> Vec<usize> {
    let mut strides = Vec::with_capacity(dims.len());
    let mut acc = 1;
    for &d in dims {
        strides.push(acc);
        acc *= d;
    }
    strides
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        check_dims(&dims)?;
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "dims {dims:?} need {len} values, got {}",
                data.len()
            )));
        }
        Ok(DenseTensor { dims, data })
    }

    /// All-zero tensor. Panics on an empty dimension list or a zero-length mode.
    pub fn zeros(dims: &[usize]) -> Self {
        check_dims(dims).expect("invalid tensor dims");
        DenseTensor {
            dims: dims.to_vec(),
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn filled(dims: &[usize], value: f64) -> Self {
        let mut t = Self::zeros(dims);
        t.data.fill(value);
        t
    }

    /// Builds a tensor by evaluating `f` at every multi-index, in storage order.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(dims);
        let mut idx = vec![0usize; dims.len()];
        for v in t.data.iter_mut() {
            *v = f(&idx);
            increment(&mut idx, dims);
        }
        t
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut off = 0;
        let mut stride = 1;
        for (&i, &d) in idx.iter().zip(&self.dims) {
            debug_assert!(i < d);
            off += i * stride;
            stride *= d;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let off = self.offset(idx);
        self.data[off] = value;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        DenseTensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &DenseTensor, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.expect_same_dims(other)?;
        Ok(DenseTensor {
            dims: self.dims.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn expect_same_dims(&self, other: &DenseTensor) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::ShapeMismatch(format!(
                "dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    /// Reorders modes: mode `j` of the result is mode `perm[j]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        check_partition(perm, &[], self.order())?;
        let out_dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let in_strides = strides_of(&self.dims);
        let src_strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
        if perm.iter().enumerate().all(|(j, &p)| j == p) {
            return Ok(self.clone());
        }

        let mut data = Vec::with_capacity(self.data.len());
        let inner = out_dims[0];
        let inner_stride = src_strides[0];
        let outer_dims = &out_dims[1..];
        let outer_strides = &src_strides[1..];
        let mut idx = vec![0usize; outer_dims.len()];
        let outer_count: usize = outer_dims.iter().product();
        let mut base = 0usize;
        for _ in 0..outer_count {
            data.extend((0..inner).map(|i| self.data[base + i * inner_stride]));
            // odometer over the outer modes, tracking the source offset incrementally
            for m in 0..outer_dims.len() {
                idx[m] += 1;
                base += outer_strides[m];
                if idx[m] < outer_dims[m] {
                    break;
                }
                base -= outer_strides[m] * outer_dims[m];
                idx[m] = 0;
            }
        }
        Ok(DenseTensor {
            dims: out_dims,
            data,
        })
    }

    /// Mode-`mode` unfolding: `dims[mode]` rows, product of the other dims as columns.
    pub fn unfold(&self, mode: usize) -> Result<Matrix> {
        if mode >= self.order() {
            return Err(Error::InvalidMode {
                mode,
                order: self.order(),
            });
        }
        let cols: Vec<usize> = (0..self.order()).filter(|&j| j != mode).collect();
        self.unfold_general(&[mode], &cols)
    }

    /// Inverse of [`DenseTensor::unfold`].
    pub fn fold(m: &Matrix, mode: usize, dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        if mode >= dims.len() {
            return Err(Error::InvalidMode {
                mode,
                order: dims.len(),
            });
        }
        let cols: Vec<usize> = (0..dims.len()).filter(|&j| j != mode).collect();
        Self::fold_general(m, &[mode], &cols, dims)
    }

    /// Generalized unfolding: permute to `(row_modes, col_modes)` and reshape. Inside each
    /// group the first-listed mode varies fastest.
    pub fn unfold_general(&self, row_modes: &[usize], col_modes: &[usize]) -> Result<Matrix> {
        check_partition(row_modes, col_modes, self.order())?;
        let rows: usize = row_modes.iter().map(|&m| self.dims[m]).product();
        let cols: usize = col_modes.iter().map(|&m| self.dims[m]).product();
        let perm: Vec<usize> = row_modes.iter().chain(col_modes).copied().collect();
        let permuted = self.permute(&perm)?;
        Ok(Matrix::from_vec(rows, cols, permuted.data))
    }

    /// Inverse of [`DenseTensor::unfold_general`].
    pub fn fold_general(
        m: &Matrix,
        row_modes: &[usize],
        col_modes: &[usize],
        dims: &[usize],
    ) -> Result<Self> {
        check_dims(dims)?;
        check_partition(row_modes, col_modes, dims.len())?;
        let rows: usize = row_modes.iter().map(|&k| dims[k]).product();
        let cols: usize = col_modes.iter().map(|&k| dims[k]).product();
        if m.nrows() != rows || m.ncols() != cols {
            return Err(Error::ShapeMismatch(format!(
                "matrix is {}x{}, dims {dims:?} with rows {row_modes:?} need {rows}x{cols}",
                m.nrows(),
                m.ncols()
            )));
        }
        let perm: Vec<usize> = row_modes.iter().chain(col_modes).copied().collect();
        let permuted_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
        let permuted = DenseTensor {
            dims: permuted_dims,
            data: m.as_slice().to_vec(),
        };
        let mut inverse = vec![0; perm.len()];
        for (j, &p) in perm.iter().enumerate() {
            inverse[p] = j;
        }
        permuted.permute(&inverse)
    }

    /// Sums over the paired modes `(mode in self, mode in other)`. The result carries the
    /// free modes of `self` in order, then those of `other`. A full contraction yields dims `[1]`.
    pub fn contract(&self, other: &DenseTensor, axes: &[(usize, usize)]) -> Result<Self> {
        let mut a_pairs = Vec::with_capacity(axes.len());
        let mut b_pairs = Vec::with_capacity(axes.len());
        for &(ma, mb) in axes {
            if ma >= self.order() {
                return Err(Error::InvalidMode {
                    mode: ma,
                    order: self.order(),
                });
            }
            if mb >= other.order() {
                return Err(Error::InvalidMode {
                    mode: mb,
                    order: other.order(),
                });
            }
            if self.dims[ma] != other.dims[mb] {
                return Err(Error::ShapeMismatch(format!(
                    "contracted modes {ma} ({}) and {mb} ({}) differ in length",
                    self.dims[ma], other.dims[mb]
                )));
            }
            a_pairs.push(ma);
            b_pairs.push(mb);
        }
        let a_free: Vec<usize> = (0..self.order()).filter(|m| !a_pairs.contains(m)).collect();
        let b_free: Vec<usize> = (0..other.order()).filter(|m| !b_pairs.contains(m)).collect();

        let a_mat = self.unfold_general(&a_free, &a_pairs)?;
        let b_mat = other.unfold_general(&b_pairs, &b_free)?;
        let product = a_mat * b_mat;

        let mut dims: Vec<usize> = a_free
            .iter()
            .map(|&m| self.dims[m])
            .chain(b_free.iter().map(|&m| other.dims[m]))
            .collect();
        if dims.is_empty() {
            dims.push(1);
        }
        DenseTensor::new(dims, product.as_slice().to_vec())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖self − reference‖_F / max(‖reference‖_F, 1e-30)`.
    pub fn relative_change(&self, reference: &DenseTensor) -> Result<f64> {
        self.expect_same_dims(reference)?;
        let diff: f64 = self
            .data
            .iter()
            .zip(&reference.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        Ok(diff / reference.frobenius_norm().max(RELATIVE_CHANGE_FLOOR))
    }
}

/// Advances a mode-0-fastest multi-index. Wraps to zero after the last index.
pub(crate) fn increment(idx: &mut [usize], dims: &[usize]) {
    for (i, &d) in idx.iter_mut().zip(dims) {
        *i += 1;
        if *i < d {
            return;
        }
        *i = 0;
    }
}

fn check_partition(rows: &[usize], cols: &[usize], order: usize) -> Result<()> {
    let mut seen = vec![false; order];
    let ok = rows.len() + cols.len() == order
        && rows.iter().chain(cols).all(|&m| {
            if m >= order || seen[m] {
                false
            } else {
                seen[m] = true;
                true
            }
        });
    if ok {
        Ok(())
    } else {
        Err(Error::NotAPermutation {
            rows: rows.to_vec(),
            cols: cols.to_vec(),
            order,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn index_valued(dims: &[usize]) -> DenseTensor {
        let n: usize = dims.iter().product();
        DenseTensor::new(dims.to_vec(), (0..n).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn mode0_unfolding_of_index_tensor() {
        // t[i1,i2,i3] = i1 + 2 i2 + 4 i3
        let t = index_valued(&[2, 2, 2]);
        let m = t.unfold(0).unwrap();
        assert_eq!(m.nrows(), 2);
        assert_eq!(m.ncols(), 4);
        let row0: Vec<f64> = m.row(0).iter().copied().collect();
        let row1: Vec<f64> = m.row(1).iter().copied().collect();
        assert_eq!(row0, vec![0.0, 2.0, 4.0, 6.0]);
        assert_eq!(row1, vec![1.0, 3.0, 5.0, 7.0]);
    }

    #[test]
    fn mode1_unfolding_places_entries_kolda_bader() {
        let t = DenseTensor::from_fn(&[2, 3, 4], |i| (100 * i[0] + 10 * i[1] + i[2]) as f64);
        let m = t.unfold(1).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (3, 8));
        for i0 in 0..2 {
            for i1 in 0..3 {
                for i2 in 0..4 {
                    assert_eq!(m[(i1, i0 + 2 * i2)], t.get(&[i0, i1, i2]));
                }
            }
        }
    }

    #[test]
    fn vector_unfolds_to_column() {
        let t = DenseTensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap();
        let m = t.unfold(0).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (3, 1));
        assert_eq!(m.as_slice(), t.as_slice());
    }

    #[test]
    fn invalid_mode_rejected() {
        let t = DenseTensor::zeros(&[2, 2]);
        assert!(matches!(t.unfold(2), Err(Error::InvalidMode { .. })));
    }

    #[test]
    fn fold_scalar_like() {
        let m = Matrix::from_element(1, 1, 5.0);
        let t = DenseTensor::fold(&m, 0, &[1, 1]).unwrap();
        assert_eq!(t.dims(), &[1, 1]);
        assert_eq!(t.as_slice(), &[5.0]);
    }

    #[test]
    fn fold_with_mismatched_dims_fails() {
        let m = Matrix::zeros(2, 4);
        assert!(matches!(
            DenseTensor::fold(&m, 0, &[2, 3]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn general_unfold_matches_mode_unfold() {
        let t = index_valued(&[2, 3, 4, 2]);
        for k in 0..4 {
            let rest: Vec<usize> = (0..4).filter(|&j| j != k).collect();
            assert_eq!(t.unfold_general(&[k], &rest).unwrap(), t.unfold(k).unwrap());
        }
    }

    #[test]
    fn general_unfold_transposes_matrix() {
        let t = index_valued(&[2, 3]);
        let m = t.unfold_general(&[1], &[0]).unwrap();
        assert_eq!(m, t.unfold(0).unwrap().transpose());
    }

    #[test]
    fn general_fold_rejects_bad_input() {
        let m = Matrix::zeros(3, 3);
        assert!(DenseTensor::fold_general(&m, &[0], &[1], &[3, 4]).is_err());
        assert!(matches!(
            DenseTensor::fold_general(&m, &[0], &[0], &[3, 3]),
            Err(Error::NotAPermutation { .. })
        ));
    }

    #[test]
    fn singleton_modes_pass_through() {
        let t = index_valued(&[1, 4, 1]);
        let m = t.unfold_general(&[2, 1], &[0]).unwrap();
        assert_eq!(m.as_slice(), t.as_slice());
        let back = DenseTensor::fold_general(&m, &[2, 1], &[0], &[1, 4, 1]).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn contraction_dot_and_matmul() {
        let a = DenseTensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap();
        let b = DenseTensor::new(vec![3], vec![4.0, 5.0, 6.0]).unwrap();
        let dot = a.contract(&b, &[(0, 0)]).unwrap();
        assert_eq!(dot.dims(), &[1]);
        assert_eq!(dot.as_slice(), &[32.0]);

        let x = index_valued(&[2, 3]);
        let y = index_valued(&[3, 4]);
        let xy = x.contract(&y, &[(1, 0)]).unwrap();
        let expect = x.unfold(0).unwrap() * y.unfold(0).unwrap();
        assert_eq!(xy.dims(), &[2, 4]);
        assert_eq!(xy.as_slice(), expect.as_slice());
    }

    #[test]
    fn contraction_length_mismatch() {
        let a = DenseTensor::zeros(&[2, 3]);
        let b = DenseTensor::zeros(&[2, 3]);
        assert!(matches!(
            a.contract(&b, &[(1, 0)]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn norms() {
        let ones = DenseTensor::filled(&[2, 2], 1.0);
        assert_eq!(ones.frobenius_norm(), 2.0);
        let t = index_valued(&[3, 2]);
        assert_eq!(t.relative_change(&t).unwrap(), 0.0);
        assert!((t.scale(2.0).relative_change(&t).unwrap() - 1.0).abs() < 1e-15);
        assert!(t.relative_change(&ones).is_err());
        let z = DenseTensor::zeros(&[2]);
        assert_eq!(z.relative_change(&z).unwrap(), 0.0);
    }

    fn arb_tensor(max_order: usize, max_dim: usize) -> impl Strategy<Value = DenseTensor> {
        prop::collection::vec(1..=max_dim, 1..=max_order).prop_flat_map(|dims| {
            let n: usize = dims.iter().product();
            prop::collection::vec(-10.0f64..10.0, n)
                .prop_map(move |data| DenseTensor::new(dims.clone(), data).unwrap())
        })
    }

    proptest! {
        #[test]
        fn fold_inverts_unfold(t in arb_tensor(5, 4), k in 0usize..5) {
            let k = k % t.order();
            let m = t.unfold(k).unwrap();
            prop_assert_eq!(m.nrows(), t.dims()[k]);
            prop_assert_eq!(DenseTensor::fold(&m, k, t.dims()).unwrap(), t);
        }

        #[test]
        fn general_fold_inverts_general_unfold(
            t in arb_tensor(5, 4),
            keys in prop::collection::vec(any::<u32>(), 5),
            split in 0usize..6,
        ) {
            let mut modes: Vec<usize> = (0..t.order()).collect();
            modes.sort_by_key(|&m| keys[m]);
            let split = split.min(modes.len());
            let (rows, cols) = modes.split_at(split);
            let m = t.unfold_general(rows, cols).unwrap();
            let back = DenseTensor::fold_general(&m, rows, cols, t.dims()).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
