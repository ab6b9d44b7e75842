//! Pointwise tensor calculus on coordinate charts.
//!
//! Index layout conventions used by every tensor in the crate:
//!
//! * `Γ[k, i, j] = Γ^k_{ij}`.
//! * `R[i, j, k, l] = R^l_{ijk}` with `R(∂_i, ∂_j)∂_k = R^l_{ijk} ∂_l` and
//!   `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y]`; the lowered form is
//!   `R_{ijkl} = g(R(∂_i, ∂_j)∂_k, ∂_l)`. Round spheres have
//!   `R_{ijkl} = g_{jk}g_{il} − g_{ik}g_{jl}`.
//! * Covariant derivatives prepend the derivative slot: `(∇T)[m, ...]`.

mod chart;
mod fd;
mod frame;
mod local;

pub use chart::{MetricChart, MetricField};
pub use fd::{fd_oracle, FdQuantity};
pub(crate) use frame::bilinear;
pub use frame::{orthonormal_frame, orthonormal_frame_at, FrameKind, PointFrame};
pub(crate) use local::contract_divergence;
pub use local::{
    christoffel, covariant_derivative, nabla_jets, riemann, suspension, CurvaturePack, LocalJets, PACK_ORDER,
};

use crate::scalar::{C64, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variance {
    Up,
    Down,
}

/// Dense component array with a variance signature. Components are stored
/// row-major, slot 0 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T = C64> {
    n: usize,
    slots: Vec<Variance>,
    data: Vec<T>,
}

pub type TensorAtPoint = Tensor<C64>;

/// Calls `f` with every multi-index of `rank` slots over `0..n`, row-major.
pub fn for_each_index(n: usize, rank: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; rank];
    let total = n.pow(rank as u32);
    for _ in 0..total {
        f(&idx);
        for s in (0..rank).rev() {
            idx[s] += 1;
            if idx[s] < n {
                break;
            }
            idx[s] = 0;
        }
    }
}

impl<T: Clone> Tensor<T> {
    pub fn from_fn(n: usize, slots: &[Variance], mut f: impl FnMut(&[usize]) -> T) -> Self {
        let mut data = Vec::with_capacity(n.pow(slots.len() as u32));
        for_each_index(n, slots.len(), |idx| data.push(f(idx)));
        Tensor { n, slots: slots.to_vec(), data }
    }

    pub fn try_from_fn<E>(n: usize, slots: &[Variance], mut f: impl FnMut(&[usize]) -> Result<T, E>) -> Result<Self, E> {
        let mut data = Vec::with_capacity(n.pow(slots.len() as u32));
        let mut err = None;
        for_each_index(n, slots.len(), |idx| {
            if err.is_none() {
                match f(idx) {
                    Ok(v) => data.push(v),
                    Err(e) => err = Some(e),
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(Tensor { n, slots: slots.to_vec(), data }),
        }
    }

    pub fn from_data(n: usize, slots: &[Variance], data: Vec<T>) -> Self {
        assert_eq!(data.len(), n.pow(slots.len() as u32), "component count must be n^rank");
        Tensor { n, slots: slots.to_vec(), data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Variance] {
        &self.slots
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.slots.len());
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    #[inline]
    pub fn get(&self, idx: &[usize]) -> &T {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: T) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Tensor<U> {
        Tensor { n: self.n, slots: self.slots.clone(), data: self.data.iter().map(f).collect() }
    }
}

impl Tensor<C64> {
    pub fn zeros(n: usize, slots: &[Variance]) -> Self {
        Tensor::from_data(n, slots, vec![ZERO; n.pow(slots.len() as u32)])
    }

    pub fn norm(&self) -> f64 {
        crate::scalar::frobenius(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        crate::scalar::max_abs(&self.data)
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.slots, other.slots);
        Tensor { n: self.n, slots: self.slots.clone(), data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.slots, other.slots);
        Tensor { n: self.n, slots: self.slots.clone(), data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    /// Contracts slot `slot` with the matrix `m` (n×n row-major):
    /// `out[.., a, ..] = Σ_b m[a][b] · T[.., b, ..]`, switching its variance.
    fn contract_slot(&self, slot: usize, m: &[C64], new_variance: Variance) -> Self {
        let mut slots = self.slots.clone();
        slots[slot] = new_variance;
        let n = self.n;
        let mut src = vec![0; self.rank()];
        Tensor::from_fn(n, &slots, |idx| {
            src.copy_from_slice(idx);
            let mut acc = ZERO;
            for b in 0..n {
                src[slot] = b;
                acc += m[idx[slot] * n + b] * self.data[self.offset(&src)];
            }
            acc
        })
    }

    /// Lowers an upper slot with the metric values `g` (n×n).
    pub fn lower(&self, slot: usize, g: &[C64]) -> crate::Result<Self> {
        if self.slots[slot] != Variance::Up {
            return Err(crate::Error::VarianceMismatch(format!("slot {slot} is already covariant")));
        }
        Ok(self.contract_slot(slot, g, Variance::Down))
    }

    /// Raises a lower slot with the inverse metric values `ginv` (n×n).
    pub fn raise(&self, slot: usize, ginv: &[C64]) -> crate::Result<Self> {
        if self.slots[slot] != Variance::Down {
            return Err(crate::Error::VarianceMismatch(format!("slot {slot} is already contravariant")));
        }
        Ok(self.contract_slot(slot, ginv, Variance::Up))
    }

    /// Full contraction with one vector per slot (upper slots take covectors).
    pub fn eval(&self, args: &[&[C64]]) -> C64 {
        assert_eq!(args.len(), self.rank());
        let mut acc = ZERO;
        for_each_index(self.n, self.rank(), |idx| {
            let mut term = self.data[self.offset(idx)];
            if term == ZERO {
                return;
            }
            for (s, &i) in idx.iter().enumerate() {
                term *= args[s][i];
            }
            acc += term;
        });
        acc
    }

    /// Components in a frame: covariant slots take frame vectors, contravariant
    /// slots take the dual coframe `θ^a = ε_a g(e_a, ·)`.
    pub fn in_frame(&self, frame: &PointFrame, g: &[C64]) -> Self {
        let n = self.n;
        let coframe: Vec<Vec<C64>> = (0..n)
            .map(|a| {
                (0..n)
                    .map(|i| {
                        let mut s = ZERO;
                        for j in 0..n {
                            s += g[i * n + j] * frame.vectors[a][j];
                        }
                        s * frame.eps[a]
                    })
                    .collect()
            })
            .collect();
        Tensor::from_fn(n, &self.slots, |idx| {
            let args: Vec<&[C64]> = idx
                .iter()
                .zip(&self.slots)
                .map(|(&a, v)| match v {
                    Variance::Down => frame.vectors[a].as_slice(),
                    Variance::Up => coframe[a].as_slice(),
                })
                .collect();
            self.eval(&args)
        })
    }
}

pub(crate) const D: Variance = Variance::Down;
pub(crate) const U: Variance = Variance::Up;
