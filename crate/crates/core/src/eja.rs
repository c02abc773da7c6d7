//! Euclidean Jordan algebra arithmetic for orthant and second-order cones.
//!
//! A [`ConeDescriptor`] is an ordered product of blocks. Orthant blocks carry
//! the componentwise product; a second-order block of parameter `d` lives in
//! `R^{d+1}` with coordinates `(u; u0)` (scalar part last) and product
//!
//! ```text
//! (u; u0) ∘ (v; v0) = (v0·u + u0·v; uᵀv + u0·v0) / √2
//! ```
//!
//! so its identity is `(0; √2)`, its trace is `√2·u0`, and its eigenvalues are
//! `(u0 ± ‖u‖)/√2`. Everything acts blockwise on products.
//!
//! Elements store one contiguous coordinate array; the descriptor keeps a run
//! table (kind, count, offset) so that hot loops walk uniform slices.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::math::exp;
use crate::par;

const SQRT_2: f64 = core::f64::consts::SQRT_2;
const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// `(λ_min, λ_max)`.
pub(crate) type SpectralRange = (f64, f64);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EjaError {
    #[error("a cone needs at least one block")]
    EmptyCone,
    #[error("block dimension must be at least 1")]
    ZeroDimension,
    #[error("operands belong to different cones")]
    ConeMismatch,
    #[error("expected {expected} coordinates, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("coordinate {index} is not finite")]
    NonFinite { index: usize },
    #[error("trace {0} is not positive")]
    NonPositiveTrace(f64),
    #[error("exponential overflowed")]
    Overflow,
}

/// One factor of a product cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    /// `R^d_+`, ambient dimension `d`, rank `d`.
    Orthant(usize),
    /// `Q^{d+1}`, ambient dimension `d + 1`, rank 2.
    SecondOrder(usize),
}

impl BlockKind {
    pub fn rank(self) -> usize {
        match self {
            BlockKind::Orthant(d) => d,
            BlockKind::SecondOrder(_) => 2,
        }
    }

    pub fn ambient_dim(self) -> usize {
        match self {
            BlockKind::Orthant(d) => d,
            BlockKind::SecondOrder(d) => d + 1,
        }
    }

    fn dim_param(self) -> usize {
        match self {
            BlockKind::Orthant(d) | BlockKind::SecondOrder(d) => d,
        }
    }

    /// Length of the smallest independent unit of work: a coordinate for an
    /// orthant, a whole block for a second-order cone.
    fn atom_len(self) -> usize {
        match self {
            BlockKind::Orthant(_) => 1,
            BlockKind::SecondOrder(d) => d + 1,
        }
    }
}

/// A maximal run of identical consecutive blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub kind: BlockKind,
    pub count: usize,
    pub offset: usize,
}

impl Run {
    pub fn len(&self) -> usize {
        self.kind.ambient_dim() * self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    fn atoms(&self) -> usize {
        self.len() / self.kind.atom_len()
    }
}

/// Shape of a symmetric cone: an ordered product of orthant and
/// second-order blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeDescriptor {
    runs: Vec<Run>,
    rank: usize,
    dim: usize,
}

impl ConeDescriptor {
    pub fn new<I: IntoIterator<Item = BlockKind>>(blocks: I) -> Result<Self, EjaError> {
        let mut runs: Vec<Run> = Vec::new();
        let (mut rank, mut dim) = (0, 0);
        for kind in blocks {
            if kind.dim_param() == 0 {
                return Err(EjaError::ZeroDimension);
            }
            match runs.last_mut() {
                Some(run) if run.kind == kind => run.count += 1,
                _ => runs.push(Run { kind, count: 1, offset: dim }),
            }
            rank += kind.rank();
            dim += kind.ambient_dim();
        }
        if runs.is_empty() {
            return Err(EjaError::EmptyCone);
        }
        Ok(Self { runs, rank, dim })
    }

    pub fn orthant(d: usize) -> Result<Self, EjaError> {
        Self::new([BlockKind::Orthant(d)])
    }

    pub fn second_order(d: usize) -> Result<Self, EjaError> {
        Self::new([BlockKind::SecondOrder(d)])
    }

    /// `count` copies of the same block.
    pub fn repeated(kind: BlockKind, count: usize) -> Result<Self, EjaError> {
        if count == 0 {
            return Err(EjaError::EmptyCone);
        }
        if kind.dim_param() == 0 {
            return Err(EjaError::ZeroDimension);
        }
        Ok(Self {
            runs: vec![Run { kind, count, offset: 0 }],
            rank: kind.rank() * count,
            dim: kind.ambient_dim() * count,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn block_count(&self) -> usize {
        self.runs.iter().map(|r| r.count).sum()
    }

    /// Every block with its coordinate offset, in order.
    pub fn blocks(&self) -> impl Iterator<Item = (BlockKind, usize)> + '_ {
        self.runs.iter().flat_map(|run| {
            let step = run.kind.ambient_dim();
            (0..run.count).map(move |k| (run.kind, run.offset + k * step))
        })
    }
}

/// A point of the algebra attached to a cone descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct EjaElement {
    cone: Arc<ConeDescriptor>,
    coords: Vec<f64>,
}

/// Eigenvalues with their Jordan frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub frame: Vec<EjaElement>,
}

impl SpectralDecomposition {
    /// `Σ λᵢ qᵢ`.
    pub fn reconstruct(&self) -> EjaElement {
        let mut acc = EjaElement::zeros(self.frame[0].cone.clone());
        for (lambda, q) in self.eigenvalues.iter().zip(&self.frame) {
            acc.axpy(*lambda, q).expect("frame shares one cone");
        }
        acc
    }
}

impl EjaElement {
    pub fn new(cone: Arc<ConeDescriptor>, coords: Vec<f64>) -> Result<Self, EjaError> {
        if coords.len() != cone.ambient_dim() {
            return Err(EjaError::LengthMismatch { expected: cone.ambient_dim(), got: coords.len() });
        }
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(EjaError::NonFinite { index });
        }
        Ok(Self { cone, coords })
    }

    /// Skips validation; callers guarantee length and finiteness.
    pub(crate) fn from_raw(cone: Arc<ConeDescriptor>, coords: Vec<f64>) -> Self {
        debug_assert_eq!(coords.len(), cone.ambient_dim());
        Self { cone, coords }
    }

    pub fn zeros(cone: Arc<ConeDescriptor>) -> Self {
        let n = cone.ambient_dim();
        Self { cone, coords: vec![0.0; n] }
    }

    /// The algebra identity `e`: ones on orthant blocks, `(0; √2)` on
    /// second-order blocks.
    pub fn identity(cone: Arc<ConeDescriptor>) -> Self {
        let mut coords = vec![0.0; cone.ambient_dim()];
        for (kind, offset) in cone.blocks() {
            match kind {
                BlockKind::Orthant(d) => coords[offset..offset + d].fill(1.0),
                BlockKind::SecondOrder(d) => coords[offset + d] = SQRT_2,
            }
        }
        Self { cone, coords }
    }

    pub fn cone(&self) -> &Arc<ConeDescriptor> {
        &self.cone
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub(crate) fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    fn same_cone(&self, other: &Self) -> Result<(), EjaError> {
        if Arc::ptr_eq(&self.cone, &other.cone) || self.cone == other.cone {
            Ok(())
        } else {
            Err(EjaError::ConeMismatch)
        }
    }

    fn runs(&self) -> impl Iterator<Item = (Run, &[f64])> + '_ {
        self.cone.runs.iter().map(|run| (*run, &self.coords[run.offset..run.offset + run.len()]))
    }

    pub fn jordan_mul(&self, other: &Self) -> Result<Self, EjaError> {
        self.same_cone(other)?;
        let mut out = vec![0.0; self.coords.len()];
        for run in &self.cone.runs {
            let range = run.offset..run.offset + run.len();
            let (x, y, o) = (&self.coords[range.clone()], &other.coords[range.clone()], &mut out[range]);
            match run.kind {
                BlockKind::Orthant(_) => {
                    for ((o, a), b) in o.iter_mut().zip(x).zip(y) {
                        *o = a * b;
                    }
                }
                BlockKind::SecondOrder(d) => {
                    for ((o, a), b) in o.chunks_mut(d + 1).zip(x.chunks(d + 1)).zip(y.chunks(d + 1)) {
                        let (a0, b0) = (a[d], b[d]);
                        let mut cross = 0.0;
                        for k in 0..d {
                            o[k] = FRAC_1_SQRT_2 * (b0 * a[k] + a0 * b[k]);
                            cross += a[k] * b[k];
                        }
                        o[d] = FRAC_1_SQRT_2 * (cross + a0 * b0);
                    }
                }
            }
        }
        Ok(Self::from_raw(self.cone.clone(), out))
    }

    /// Sum of eigenvalues: coordinate sum on orthant blocks, `√2·u0` on
    /// second-order blocks.
    pub fn trace(&self) -> f64 {
        let mut total = 0.0;
        for (run, x) in self.runs() {
            let atom = run.kind.atom_len();
            let parts = par::map_chunks(run.atoms(), |r| match run.kind {
                BlockKind::Orthant(_) => crate::math::sum(&x[r]),
                BlockKind::SecondOrder(d) => x[r.start * atom..r.end * atom].chunks(atom).map(|b| SQRT_2 * b[d]).sum(),
            });
            total += parts.into_iter().sum::<f64>();
        }
        total
    }

    /// `Tr(x ∘ y)`. With the scaling of the second-order product this is the
    /// plain dot product of the coordinate arrays on every block.
    pub fn inner(&self, other: &Self) -> Result<f64, EjaError> {
        self.same_cone(other)?;
        let mut total = 0.0;
        for run in &self.cone.runs {
            let range = run.offset..run.offset + run.len();
            let (x, y) = (&self.coords[range.clone()], &other.coords[range]);
            let atom = run.kind.atom_len();
            let parts = par::map_chunks(run.atoms(), |r| {
                let s = r.start * atom..r.end * atom;
                crate::math::dot(&x[s.clone()], &y[s])
            });
            total += parts.into_iter().sum::<f64>();
        }
        Ok(total)
    }

    /// Eigenvalues in frame order: orthant coordinates in order, `λ₊` then
    /// `λ₋` for each second-order block.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.cone.rank);
        for (run, x) in self.runs() {
            match run.kind {
                BlockKind::Orthant(_) => out.extend_from_slice(x),
                BlockKind::SecondOrder(d) => {
                    for b in x.chunks(d + 1) {
                        let (hi, lo) = soc_eigenvalues(b);
                        out.push(hi);
                        out.push(lo);
                    }
                }
            }
        }
        out
    }

    pub fn spectral(&self) -> SpectralDecomposition {
        let eigenvalues = self.eigenvalues();
        let n = self.coords.len();
        let mut frame = Vec::with_capacity(self.cone.rank);
        for (kind, offset) in self.cone.blocks() {
            match kind {
                BlockKind::Orthant(d) => {
                    for k in 0..d {
                        let mut q = vec![0.0; n];
                        q[offset + k] = 1.0;
                        frame.push(Self::from_raw(self.cone.clone(), q));
                    }
                }
                BlockKind::SecondOrder(d) => {
                    let block = &self.coords[offset..offset + d + 1];
                    let dir = soc_direction(block);
                    for sign in [1.0, -1.0] {
                        let mut q = vec![0.0; n];
                        for k in 0..d {
                            q[offset + k] = sign * FRAC_1_SQRT_2 * dir[k];
                        }
                        q[offset + d] = FRAC_1_SQRT_2;
                        frame.push(Self::from_raw(self.cone.clone(), q));
                    }
                }
            }
        }
        SpectralDecomposition { eigenvalues, frame }
    }

    /// `(λ_min, λ_max)` in one pass.
    pub fn eigen_range(&self) -> (f64, f64) {
        let mut acc = (f64::INFINITY, f64::NEG_INFINITY);
        let merge = |a: (f64, f64), b: (f64, f64)| (a.0.min(b.0), a.1.max(b.1));
        for (run, x) in self.runs() {
            let atom = run.kind.atom_len();
            let parts = par::map_chunks(run.atoms(), |r| {
                let s = &x[r.start * atom..r.end * atom];
                let init = (f64::INFINITY, f64::NEG_INFINITY);
                match run.kind {
                    BlockKind::Orthant(_) => s.iter().fold(init, |a, &v| (a.0.min(v), a.1.max(v))),
                    BlockKind::SecondOrder(_) => s.chunks(atom).fold(init, |a, b| {
                        let (hi, lo) = soc_eigenvalues(b);
                        (a.0.min(lo), a.1.max(hi))
                    }),
                }
            });
            acc = parts.into_iter().fold(acc, merge);
        }
        acc
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigen_range().0
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigen_range().1
    }

    /// Largest eigenvalue magnitude.
    pub fn inf_norm(&self) -> f64 {
        let (lo, hi) = self.eigen_range();
        hi.abs().max(lo.abs())
    }

    /// The Löwner extension of `exp`: `Σ exp(λᵢ) qᵢ`.
    pub fn exp_map(&self) -> Result<Self, EjaError> {
        let mut out = Self::zeros(self.cone.clone());
        self.exp_shifted_into(1.0, 0.0, &mut out.coords);
        if out.coords.iter().any(|c| !c.is_finite()) {
            return Err(EjaError::Overflow);
        }
        Ok(out)
    }

    /// `exp(scale·x) / Tr(exp(scale·x))`.
    ///
    /// The quotient is invariant under `x ↦ x + c·e`, so the largest
    /// eigenvalue is subtracted before exponentiating and the result never
    /// overflows for finite input.
    pub fn normalized_exp(&self, scale: f64) -> Result<Self, EjaError> {
        let mut out = Self::zeros(self.cone.clone());
        self.normalized_exp_into(scale, self.eigen_range(), &mut out)?;
        Ok(out)
    }

    /// Writes `exp(scale·x) / Tr(·)` into `out`, given `(λ_min, λ_max)` of
    /// `self`.
    pub(crate) fn normalized_exp_into(&self, scale: f64, range: (f64, f64), out: &mut Self) -> Result<(), EjaError> {
        let shift = if scale >= 0.0 { scale * range.1 } else { scale * range.0 };
        if !shift.is_finite() {
            return Err(EjaError::Overflow);
        }
        let tr = self.exp_shifted_into(scale, shift, &mut out.coords);
        debug_assert!(tr >= 1.0 - 1e-12, "the top eigenvalue maps to exp(0)");
        let inv = 1.0 / tr;
        par::for_each_chunk_mut(&mut out.coords, 1, |_, s| s.iter_mut().for_each(|c| *c *= inv));
        Ok(())
    }

    /// Writes the coordinates of `exp(scale·x − shift·e)` into `out` and
    /// returns their trace.
    fn exp_shifted_into(&self, scale: f64, shift: f64, out: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for run in &self.cone.runs {
            let range = run.offset..run.offset + run.len();
            let x = &self.coords[range.clone()];
            let atom = run.kind.atom_len();
            let parts = par::map_chunks_mut(&mut out[range], atom, |first, o| {
                let x = &x[first * atom..first * atom + o.len()];
                match run.kind {
                    BlockKind::Orthant(_) => {
                        let mut tr = 0.0;
                        for (o, v) in o.iter_mut().zip(x) {
                            *o = exp(scale * v - shift);
                            tr += *o;
                        }
                        tr
                    }
                    BlockKind::SecondOrder(d) => {
                        let mut tr = 0.0;
                        for (o, b) in o.chunks_mut(atom).zip(x.chunks(atom)) {
                            let nrm = scale.abs() * crate::math::norm2(&b[..d]);
                            let center = scale * b[d];
                            let hi = exp((center + nrm) * FRAC_1_SQRT_2 - shift);
                            let lo = exp((center - nrm) * FRAC_1_SQRT_2 - shift);
                            if nrm > 0.0 {
                                let coef = FRAC_1_SQRT_2 * (hi - lo) * scale / nrm;
                                for k in 0..d {
                                    o[k] = coef * b[k];
                                }
                            } else {
                                o[..d].fill(0.0);
                            }
                            o[d] = FRAC_1_SQRT_2 * (hi + lo);
                            tr += hi + lo;
                        }
                        tr
                    }
                }
            });
            total += parts.into_iter().sum::<f64>();
        }
        total
    }

    /// `x / Tr(x)`.
    pub fn trace_normalize(&self) -> Result<Self, EjaError> {
        let tr = self.trace();
        if !(tr > 0.0) {
            return Err(EjaError::NonPositiveTrace(tr));
        }
        Ok(self.scale(1.0 / tr))
    }

    pub fn add(&self, other: &Self) -> Result<Self, EjaError> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, EjaError> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_raw(self.cone.clone(), self.coords.iter().map(|c| c * factor).collect())
    }

    /// `self += a·x`.
    pub fn axpy(&mut self, a: f64, x: &Self) -> Result<(), EjaError> {
        self.same_cone(x)?;
        par::for_each_chunk_mut(&mut self.coords, 1, |first, s| {
            for (c, v) in s.iter_mut().zip(&x.coords[first..]) {
                *c += a * v;
            }
        });
        Ok(())
    }

    /// `self += a·x` in one pass, returning `(λ_min, λ_max)` of the updated
    /// `self` and of `x`.
    pub(crate) fn axpy_with_ranges(&mut self, a: f64, x: &Self) -> Result<(SpectralRange, SpectralRange), EjaError> {
        self.same_cone(x)?;
        let empty = (f64::INFINITY, f64::NEG_INFINITY);
        let merge = |a: (f64, f64), lo: f64, hi: f64| (a.0.min(lo), a.1.max(hi));
        let (mut own, mut other) = (empty, empty);
        for run in &self.cone.runs {
            let span = run.offset..run.offset + run.len();
            let xs = &x.coords[span.clone()];
            let atom = run.kind.atom_len();
            let parts = par::map_chunks_mut(&mut self.coords[span], atom, |first, s| {
                let xs = &xs[first * atom..first * atom + s.len()];
                let (mut own, mut other) = (empty, empty);
                match run.kind {
                    BlockKind::Orthant(_) => {
                        for (c, v) in s.iter_mut().zip(xs) {
                            *c += a * v;
                            own = merge(own, *c, *c);
                            other = merge(other, *v, *v);
                        }
                    }
                    BlockKind::SecondOrder(_) => {
                        for (c, v) in s.chunks_mut(atom).zip(xs.chunks(atom)) {
                            for (ci, vi) in c.iter_mut().zip(v) {
                                *ci += a * vi;
                            }
                            let (hi, lo) = soc_eigenvalues(c);
                            own = merge(own, lo, hi);
                            let (hi, lo) = soc_eigenvalues(v);
                            other = merge(other, lo, hi);
                        }
                    }
                }
                (own, other)
            });
            for (o, x) in parts {
                own = merge(own, o.0, o.1);
                other = merge(other, x.0, x.1);
            }
        }
        Ok((own, other))
    }
}

/// `(λ₊, λ₋)` of one second-order block.
#[inline]
fn soc_eigenvalues(block: &[f64]) -> (f64, f64) {
    let d = block.len() - 1;
    let nrm = crate::math::norm2(&block[..d]);
    ((block[d] + nrm) * FRAC_1_SQRT_2, (block[d] - nrm) * FRAC_1_SQRT_2)
}

/// Unit direction of the vector part, `e₁` when it vanishes.
fn soc_direction(block: &[f64]) -> Vec<f64> {
    let d = block.len() - 1;
    let nrm = crate::math::norm2(&block[..d]);
    if nrm > 0.0 {
        block[..d].iter().map(|c| c / nrm).collect()
    } else {
        let mut v = vec![0.0; d];
        v[0] = 1.0;
        v
    }
}
