//! Slow reference implementations for cross-checking the solver.
//!
//! Nothing here calls into [`crate::solver`] or [`crate::metrics`]: every
//! quantity is rebuilt from explicit tensors, Kronecker products and scalar
//! loops, so agreement between the two paths is meaningful. All flat
//! layouts are column-major (first index fastest), matching `vec(·)`.

use nalgebra::DMatrix;

use crate::data::AugmentedViews;
use crate::error::{Error, Result};
use crate::solver::CpWeights;

/// Default cap on materialized tensor entries.
pub const DEFAULT_TENSOR_CAP: usize = 1_000_000;
/// Default cap on the side length `M·R` of a dense `H`.
pub const DEFAULT_H_CAP: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(dims: Vec<usize>) -> Self {
        let len = dims.iter().product();
        Self {
            dims,
            values: vec![0.0; len],
        }
    }

    pub fn from_values(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if dims.iter().product::<usize>() != values.len() {
            return Err(Error::Shape(format!(
                "{} values for dims {dims:?}",
                values.len()
            )));
        }
        Ok(Self { dims, values })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn offset(&self, index: &[usize]) -> usize {
        let mut off = 0;
        let mut stride = 1;
        for (i, d) in index.iter().zip(&self.dims) {
            off += i * stride;
            stride *= d;
        }
        off
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.values[self.offset(index)]
    }

    /// The multi-index for a flat column-major offset.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        self.dims
            .iter()
            .map(|&d| {
                let i = flat % d;
                flat /= d;
                i
            })
            .collect()
    }
}

/// `x^(1) ∘ x^(2) ∘ … ∘ x^(M)`.
pub fn outer_product(vectors: &[Vec<f64>]) -> Result<DenseTensor> {
    if vectors.is_empty() || vectors.iter().any(|v| v.is_empty()) {
        return Err(Error::Shape("outer product needs non-empty vectors".into()));
    }
    let mut t = DenseTensor::zeros(vectors.iter().map(|v| v.len()).collect());
    for flat in 0..t.values.len() {
        let idx = t.multi_index(flat);
        t.values[flat] = idx.iter().zip(vectors).map(|(&i, v)| v[i]).product();
    }
    Ok(t)
}

/// Sum of elementwise products over all multi-indices.
pub fn tensor_inner(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    if a.dims != b.dims {
        return Err(Error::Shape(format!(
            "inner product of {:?} and {:?}",
            a.dims, b.dims
        )));
    }
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum())
}

/// `Σ_r w_r^(1) ∘ … ∘ w_r^(V+1)` as an explicit tensor.
pub fn materialize_cp(w: &CpWeights, cap: usize) -> Result<DenseTensor> {
    let factors: Vec<&DMatrix<f64>> = w
        .view_factors
        .iter()
        .chain(std::iter::once(&w.cluster_factor))
        .collect();
    let dims: Vec<usize> = factors.iter().map(|m| m.nrows()).collect();
    let entries: usize = dims.iter().product();
    if entries > cap {
        return Err(Error::SizeCap { entries, cap });
    }
    let mut out = DenseTensor::zeros(dims);
    for r in 0..w.rank() {
        let cols: Vec<Vec<f64>> = factors
            .iter()
            .map(|m| (0..m.nrows()).map(|i| m[(i, r)]).collect())
            .collect();
        let term = outer_product(&cols)?;
        for (o, t) in out.values.iter_mut().zip(&term.values) {
            *o += t;
        }
    }
    Ok(out)
}

/// `⟨𝒵_n ∘ e_k, 𝒲⟩` with `𝒵_n = z_n^(1) ∘ … ∘ z_n^(V)`.
pub fn full_tensor_predict(
    z: &AugmentedViews,
    w_full: &DenseTensor,
    n: usize,
    k: usize,
) -> Result<f64> {
    let v_count = z.num_views();
    if w_full.dims.len() != v_count + 1 {
        return Err(Error::Shape(
            "weight tensor order does not match views".into(),
        ));
    }
    for (v, zv) in z.views().iter().enumerate() {
        if w_full.dims[v] != zv.nrows() {
            return Err(Error::Shape(format!("mode {v} size mismatch")));
        }
    }
    let kk = w_full.dims[v_count];
    if k >= kk || n >= z.num_instances() {
        return Err(Error::Shape(format!(
            "instance {n} / cluster {k} out of range"
        )));
    }
    let mut vectors: Vec<Vec<f64>> = z
        .views()
        .iter()
        .map(|zv| (0..zv.nrows()).map(|d| zv[(d, n)]).collect())
        .collect();
    let mut e_k = vec![0.0; kk];
    e_k[k] = 1.0;
    vectors.push(e_k);
    tensor_inner(&outer_product(&vectors)?, w_full)
}

/// Every `f̂_{n,k}` through the full tensor.
pub fn full_tensor_scores(z: &AugmentedViews, w_full: &DenseTensor) -> Result<DMatrix<f64>> {
    let k = *w_full.dims.last().unwrap_or(&0);
    let n = z.num_instances();
    let mut out = DMatrix::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            out[(i, j)] = full_tensor_predict(z, w_full, i, j)?;
        }
    }
    Ok(out)
}

/// Naive triple-loop product.
pub fn matmul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.nrows(), "matmul inner dimension");
    let mut out = DMatrix::zeros(a.nrows(), b.ncols());
    for j in 0..b.ncols() {
        for l in 0..a.ncols() {
            let blj = b[(l, j)];
            if blj == 0.0 {
                continue;
            }
            for i in 0..a.nrows() {
                out[(i, j)] += a[(i, l)] * blj;
            }
        }
    }
    out
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = a[(i, j)] * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Column stacking.
pub fn vec_of(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn diag_of(v: &[f64]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(v.len(), v.len());
    for (i, &x) in v.iter().enumerate() {
        out[(i, i)] = x;
    }
    out
}

fn transpose(m: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.ncols(), m.nrows(), |i, j| m[(j, i)])
}

/// `I⊗D + (I⊗A) diag(vec B) (Cᵀ⊗I) diag(vec B) (I⊗Aᵀ)` with `D = γ diag(d)`.
pub fn dense_h(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d_diag: &[f64],
    gamma: f64,
    cap: usize,
) -> Result<DMatrix<f64>> {
    let (m, n) = a.shape();
    let r = b.ncols();
    if b.nrows() != n || c.shape() != (r, r) || d_diag.len() != m {
        return Err(Error::Shape("dense H operand shapes".into()));
    }
    if m * r > cap {
        return Err(Error::SizeCap {
            entries: m * r,
            cap,
        });
    }
    let i_r = DMatrix::identity(r, r);
    let i_n = DMatrix::identity(n, n);
    let d: Vec<f64> = d_diag.iter().map(|x| gamma * x).collect();
    let reg = kron(&i_r, &diag_of(&d));
    let vb = diag_of(&vec_of(b));
    let left = kron(&i_r, a);
    let mid = kron(&transpose(c), &i_n);
    let right = kron(&i_r, &transpose(a));
    let inter = matmul(&matmul(&matmul(&matmul(&left, &vb), &mid), &vb), &right);
    Ok(reg + inter)
}

/// Objective by explicit sums over instances, clusters, ranks and features.
pub fn scalar_objective(z: &AugmentedViews, w: &CpWeights, f: &DMatrix<f64>, gamma: f64) -> f64 {
    let n = z.num_instances();
    let k = w.cluster_factor.nrows();
    let r = w.rank();
    let mut fit = 0.0;
    for i in 0..n {
        for kk in 0..k {
            let mut pred = 0.0;
            for rr in 0..r {
                let mut prod = w.cluster_factor[(kk, rr)];
                for (zv, wv) in z.views().iter().zip(&w.view_factors) {
                    let mut dot = 0.0;
                    for d in 0..zv.nrows() {
                        dot += zv[(d, i)] * wv[(d, rr)];
                    }
                    prod *= dot;
                }
                pred += prod;
            }
            fit += (pred - f[(i, kk)]).powi(2);
        }
    }
    let mut reg = 0.0;
    for m in w
        .view_factors
        .iter()
        .chain(std::iter::once(&w.cluster_factor))
    {
        for i in 0..m.nrows() {
            let mut s = 0.0;
            for j in 0..m.ncols() {
                s += m[(i, j)] * m[(i, j)];
            }
            reg += s.sqrt();
        }
    }
    fit + gamma * reg
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Accuracy maximized over every injective relabeling (exponential).
pub fn brute_force_accuracy(truth: &[usize], pred: &[usize]) -> f64 {
    assert_eq!(truth.len(), pred.len());
    let kt = truth.iter().max().map_or(0, |m| m + 1);
    let kp = pred.iter().max().map_or(0, |m| m + 1);
    let size = kt.max(kp);
    let slots: Vec<usize> = (0..size).collect();
    let mut best = 0;
    for perm in permutations(&slots) {
        // perm[p] is the class assigned to predicted label p.
        let hits = truth
            .iter()
            .zip(pred)
            .filter(|(&t, &p)| perm[p] == t)
            .count();
        best = best.max(hits);
    }
    best as f64 / truth.len() as f64
}

/// NMI through `I = H(T) + H(P) − H(T, P)` on the joint table.
pub fn contingency_nmi(truth: &[usize], pred: &[usize]) -> f64 {
    assert_eq!(truth.len(), pred.len());
    let n = truth.len() as f64;
    let kt = truth.iter().max().map_or(0, |m| m + 1);
    let kp = pred.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![vec![0.0; kp]; kt];
    for (&t, &p) in truth.iter().zip(pred) {
        joint[t][p] += 1.0;
    }
    let h = |ps: &mut dyn Iterator<Item = f64>| -> f64 {
        ps.filter(|&c| c > 0.0)
            .map(|c| -(c / n) * (c / n).ln())
            .sum()
    };
    let ht = h(&mut joint.iter().map(|row| row.iter().sum::<f64>()));
    let hp = h(&mut (0..kp).map(|p| joint.iter().map(|row| row[p]).sum::<f64>()));
    let hj = h(&mut joint.iter().flatten().copied());
    if ht == 0.0 && hp == 0.0 {
        return 1.0;
    }
    if ht == 0.0 || hp == 0.0 {
        return 0.0;
    }
    (ht + hp - hj) / (ht * hp).sqrt()
}

/// Every set partition of `0..n` as a restricted-growth label string.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for l in 0..=max + 1 {
            prefix.push(l);
            let next_max = if l > max { l } else { max };
            grow(prefix, next_max, n, out);
            prefix.pop();
        }
    }
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut prefix = vec![0];
    grow(&mut prefix, 0, n, &mut out);
    out
}
