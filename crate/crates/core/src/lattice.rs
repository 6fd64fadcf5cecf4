//! Cubic lattices on `[-L, L]^3`, fourth-order stencils and quadrature.
//!
//! Storage is row-major with axis 1 slowest: node `(i, j, k)` lives at
//! `(i * n + j) * n + k`. Parallel kernels split the data into axis-1 slabs;
//! reductions sum each slab in a fixed order and then combine the slab sums
//! pairwise, so results do not depend on the number of threads.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::{Mat4, Spinor, C64, ZERO};
use crate::dkg_solver::CaseId;
use crate::error::{Error, Result};

/// Smallest admissible number of points per axis.
pub const MIN_POINTS: usize = 17;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    ZeroPad,
    Periodic,
}

impl BoundaryMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zero-pad" | "zeropad" | "zero_pad" | "zero" => Ok(BoundaryMode::ZeroPad),
            "periodic" => Ok(BoundaryMode::Periodic),
            other => Err(Error::Config(format!("unknown boundary mode '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundaryMode::ZeroPad => "zero-pad",
            BoundaryMode::Periodic => "periodic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub h: f64,
    pub half_width: f64,
    pub boundary: BoundaryMode,
}

impl GridSpec {
    /// `h = 2L/(n-1)` in zero-pad mode, `h = 2L/n` in periodic mode.
    pub fn new(n: usize, half_width: f64, boundary: BoundaryMode) -> Result<Self> {
        if n < MIN_POINTS {
            return Err(Error::InvalidGrid(format!("n = {n} < {MIN_POINTS}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half width {half_width}")));
        }
        let h = match boundary {
            BoundaryMode::ZeroPad => 2.0 * half_width / (n - 1) as f64,
            BoundaryMode::Periodic => 2.0 * half_width / n as f64,
        };
        Ok(GridSpec {
            n,
            h,
            half_width,
            boundary,
        })
    }

    pub fn zero_pad(n: usize, half_width: f64) -> Result<Self> {
        Self::new(n, half_width, BoundaryMode::ZeroPad)
    }

    pub fn periodic(n: usize, half_width: f64) -> Result<Self> {
        Self::new(n, half_width, BoundaryMode::Periodic)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unindex(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    #[inline]
    pub fn radius(&self, idx: usize) -> f64 {
        let x = self.position(idx);
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }

    /// One-dimensional trapezoid factor of node `i` (without `h`).
    #[inline]
    pub fn trapezoid(&self, i: usize) -> f64 {
        match self.boundary {
            BoundaryMode::ZeroPad if i == 0 || i + 1 == self.n => 0.5,
            _ => 1.0,
        }
    }

    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.h
    }

    /// Distance from the origin to the start of the two-shell pad layer.
    pub fn pad_radius(&self) -> f64 {
        self.half_width - 2.0 * self.h
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.n == other.n && self.boundary == other.boundary && (self.h - other.h).abs() <= 1e-15 * self.h
    }
}

/// `<s> = sqrt(1 + s^2)`.
#[inline]
pub fn japanese(s: f64) -> f64 {
    (1.0 + s * s).sqrt()
}

/// Polynomial bump `(1 - |x - c|^2 / w^2)^10` on the ball of radius `w`.
pub fn poly_bump(x: [f64; 3], c: [f64; 3], w: f64) -> f64 {
    let s2 = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2)) / (w * w);
    if s2 >= 1.0 {
        0.0
    } else {
        (1.0 - s2).powi(10)
    }
}

/// Values that can be stored on a lattice and differentiated.
pub trait FieldValue:
    Copy + Send + Sync + Default + PartialEq + Add<Output = Self> + Sub<Output = Self> + Neg<Output = Self> + Mul<f64, Output = Self> + AddAssign + std::fmt::Debug + 'static
{
    fn zero() -> Self;
    /// Euclidean magnitude.
    fn magnitude(&self) -> f64;
    fn finite(&self) -> bool;
    /// Conjugate-linear pairing `conj(self) other`.
    fn pair(&self, other: &Self) -> C64;
    /// Matrix correction term of the hatted vector fields; zero for scalars.
    fn spin(&self, m: &Mat4) -> Self;
    /// Number of f64 words per value in snapshot payloads.
    const WORDS: usize;
    fn write_words(&self, out: &mut Vec<f64>);
    fn read_words(words: &[f64]) -> Self;
}

impl FieldValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
    fn pair(&self, other: &Self) -> C64 {
        C64::new(self * other, 0.0)
    }
    fn spin(&self, _m: &Mat4) -> Self {
        0.0
    }
    const WORDS: usize = 1;
    fn write_words(&self, out: &mut Vec<f64>) {
        out.push(*self);
    }
    fn read_words(words: &[f64]) -> Self {
        words[0]
    }
}

impl FieldValue for C64 {
    fn zero() -> Self {
        ZERO
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn pair(&self, other: &Self) -> C64 {
        self.conj() * other
    }
    fn spin(&self, _m: &Mat4) -> Self {
        ZERO
    }
    const WORDS: usize = 2;
    fn write_words(&self, out: &mut Vec<f64>) {
        out.push(self.re);
        out.push(self.im);
    }
    fn read_words(words: &[f64]) -> Self {
        C64::new(words[0], words[1])
    }
}

impl FieldValue for Spinor {
    fn zero() -> Self {
        Spinor::zero()
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
    fn pair(&self, other: &Self) -> C64 {
        self.dot(other)
    }
    fn spin(&self, m: &Mat4) -> Self {
        m.apply(self)
    }
    const WORDS: usize = 8;
    fn write_words(&self, out: &mut Vec<f64>) {
        for c in self.0.iter() {
            out.push(c.re);
            out.push(c.im);
        }
    }
    fn read_words(words: &[f64]) -> Self {
        let mut s = Spinor::zero();
        for (a, c) in s.0.iter_mut().enumerate() {
            *c = C64::new(words[2 * a], words[2 * a + 1]);
        }
        s
    }
}

/// Neighbour values `f(-2), f(-1), f(+1), f(+2)` along one axis.
#[inline(always)]
fn taps<T: FieldValue>(data: &[T], grid: &GridSpec, idx: usize, c: usize, stride: usize) -> [T; 4] {
    let n = grid.n;
    if c >= 2 && c + 2 < n {
        return [data[idx - 2 * stride], data[idx - stride], data[idx + stride], data[idx + 2 * stride]];
    }
    let base = idx - c * stride;
    let get = |off: isize| -> T {
        let p = c as isize + off;
        match grid.boundary {
            BoundaryMode::Periodic => {
                let q = p.rem_euclid(n as isize) as usize;
                data[base + q * stride]
            }
            BoundaryMode::ZeroPad => {
                if p < 0 || p >= n as isize {
                    T::zero()
                } else {
                    data[base + p as usize * stride]
                }
            }
        }
    };
    [get(-2), get(-1), get(1), get(2)]
}

#[inline(always)]
fn coords_strides(grid: &GridSpec, idx: usize) -> ([usize; 3], [usize; 3]) {
    let n = grid.n;
    (grid.unindex(idx), [n * n, n, 1])
}

/// Fourth-order first derivative along `axis` (0-based) at node `idx`.
#[inline(always)]
pub fn d1_at<T: FieldValue>(data: &[T], grid: &GridSpec, idx: usize, axis: usize) -> T {
    let (c, s) = coords_strides(grid, idx);
    let [m2, m1, p1, p2] = taps(data, grid, idx, c[axis], s[axis]);
    (m2 - p2 + (p1 - m1) * 8.0) * (1.0 / (12.0 * grid.h))
}

/// Fourth-order second derivative along `axis` (0-based) at node `idx`.
#[inline(always)]
pub fn d2_at<T: FieldValue>(data: &[T], grid: &GridSpec, idx: usize, axis: usize) -> T {
    let (c, s) = coords_strides(grid, idx);
    let [m2, m1, p1, p2] = taps(data, grid, idx, c[axis], s[axis]);
    ((m1 + p1) * 16.0 - (m2 + p2) - data[idx] * 30.0) * (1.0 / (12.0 * grid.h * grid.h))
}

/// Gradient at a node (0-based axes).
#[inline(always)]
pub fn grad_at<T: FieldValue>(data: &[T], grid: &GridSpec, idx: usize) -> [T; 3] {
    [d1_at(data, grid, idx, 0), d1_at(data, grid, idx, 1), d1_at(data, grid, idx, 2)]
}

/// Laplacian at a node.
#[inline(always)]
pub fn laplacian_at<T: FieldValue>(data: &[T], grid: &GridSpec, idx: usize) -> T {
    d2_at(data, grid, idx, 0) + d2_at(data, grid, idx, 1) + d2_at(data, grid, idx, 2)
}

/// Pairwise sum with a fixed split pattern.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        len => {
            let mid = len / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

/// Trapezoid quadrature of a node function; bit-stable across thread counts.
pub fn integrate_fn<F>(grid: &GridSpec, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let n = grid.n;
    let slabs: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let wi = grid.trapezoid(i);
            let mut rows = Vec::with_capacity(n);
            for j in 0..n {
                let wj = grid.trapezoid(j);
                let mut acc = 0.0;
                let base = grid.index(i, j, 0);
                for k in 0..n {
                    acc += grid.trapezoid(k) * f(base + k);
                }
                rows.push(wi * wj * acc);
            }
            pairwise_sum(&rows)
        })
        .collect();
    pairwise_sum(&slabs) * grid.cell_volume()
}

pub fn integrate(f: &Lattice<f64>) -> f64 {
    integrate_fn(&f.grid, |i| f.data[i])
}

/// Maximum of a node function over an optional mask.
pub fn max_fn<F>(grid: &GridSpec, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let n = grid.n;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let base = i * n * n;
            (0..n * n).map(|q| f(base + q)).fold(0.0f64, |a, b| if b > a || b.is_nan() { b } else { a })
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0f64, |a, b| if b > a || b.is_nan() { b } else { a })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lattice<T> {
    pub grid: GridSpec,
    pub data: Vec<T>,
}

pub type ScalarLattice = Lattice<f64>;
pub type ComplexLattice = Lattice<C64>;
pub type SpinorLattice = Lattice<Spinor>;

impl<T: FieldValue> Lattice<T> {
    pub fn zeros(grid: GridSpec) -> Self {
        Lattice {
            grid,
            data: vec![T::zero(); grid.len()],
        }
    }

    pub fn from_vec(grid: GridSpec, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidGrid(format!("data length {} != n^3 = {}", data.len(), grid.len())));
        }
        Ok(Lattice { grid, data })
    }

    /// Samples a function of position.
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn([f64; 3]) -> T + Sync,
    {
        Self::from_index_fn(grid, |idx| f(grid.position(idx)))
    }

    pub fn from_index_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn(usize) -> T + Sync,
    {
        let n2 = grid.n * grid.n;
        let mut data = vec![T::zero(); grid.len()];
        data.par_chunks_mut(n2).enumerate().for_each(|(i, slab)| {
            let base = i * n2;
            for (q, v) in slab.iter_mut().enumerate() {
                *v = f(base + q);
            }
        });
        Lattice { grid, data }
    }

    pub fn map<U: FieldValue, F>(&self, f: F) -> Lattice<U>
    where
        F: Fn(&T) -> U + Sync,
    {
        Lattice::from_index_fn(self.grid, |i| f(&self.data[i]))
    }

    pub fn zip_map<U: FieldValue, V: FieldValue, F>(&self, other: &Lattice<U>, f: F) -> Result<Lattice<V>>
    where
        F: Fn(&T, &U) -> V + Sync,
    {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Lattice::from_index_fn(self.grid, |i| f(&self.data[i], &other.data[i])))
    }

    /// Fourth-order derivative along `axis` in 1..=3 of order 1 or 2.
    pub fn dx(&self, axis: usize, order: u8) -> Lattice<T> {
        assert!((1..=3).contains(&axis), "axis must be 1, 2 or 3");
        let a = axis - 1;
        match order {
            1 => Lattice::from_index_fn(self.grid, |i| d1_at(&self.data, &self.grid, i, a)),
            2 => Lattice::from_index_fn(self.grid, |i| d2_at(&self.data, &self.grid, i, a)),
            _ => panic!("derivative order must be 1 or 2"),
        }
    }

    /// `dx` that refuses fields whose support reaches the zero-pad layer.
    pub fn dx_checked(&self, axis: usize, order: u8) -> Result<Lattice<T>> {
        if self.support_touches_boundary() {
            return Err(Error::SupportTouchesBoundary);
        }
        Ok(self.dx(axis, order))
    }

    pub fn laplacian(&self) -> Lattice<T> {
        Lattice::from_index_fn(self.grid, |i| laplacian_at(&self.data, &self.grid, i))
    }

    pub fn max_norm(&self) -> f64 {
        max_fn(&self.grid, |i| self.data[i].magnitude())
    }

    /// Max-norm over the outermost two shells.
    pub fn pad_max(&self) -> f64 {
        let n = self.grid.n;
        let edge = |c: usize| c < 2 || c + 2 >= n;
        max_fn(&self.grid, |idx| {
            let [i, j, k] = self.grid.unindex(idx);
            if edge(i) || edge(j) || edge(k) {
                self.data[idx].magnitude()
            } else {
                0.0
            }
        })
    }

    /// True in zero-pad mode when the outer two shells exceed `1e-12 max|f|`.
    pub fn support_touches_boundary(&self) -> bool {
        if self.grid.boundary == BoundaryMode::Periodic {
            return false;
        }
        let m = self.max_norm();
        m > 0.0 && self.pad_max() > 1e-12 * m
    }

    pub fn is_finite(&self) -> bool {
        self.data.par_iter().all(|v| v.finite())
    }

    pub fn scale(&self, s: f64) -> Lattice<T> {
        self.map(|v| *v * s)
    }

    pub fn add(&self, other: &Lattice<T>) -> Result<Lattice<T>> {
        self.zip_map(other, |a, b| *a + *b)
    }

    pub fn sub(&self, other: &Lattice<T>) -> Result<Lattice<T>> {
        self.zip_map(other, |a, b| *a - *b)
    }

    /// `sum_x |f|^2` quadrature.
    pub fn l2_sqr(&self) -> f64 {
        integrate_fn(&self.grid, |i| {
            let m = self.data[i].magnitude();
            m * m
        })
    }

    pub fn l2(&self) -> f64 {
        self.l2_sqr().sqrt()
    }

    /// Cyclic shift by `cells` along `axis` in 1..=3 (wrapping).
    pub fn shift(&self, axis: usize, cells: isize) -> Lattice<T> {
        let n = self.grid.n as isize;
        Lattice::from_index_fn(self.grid, |idx| {
            let mut c = self.grid.unindex(idx).map(|v| v as isize);
            c[axis - 1] = (c[axis - 1] - cells).rem_euclid(n);
            self.data[self.grid.index(c[0] as usize, c[1] as usize, c[2] as usize)]
        })
    }

    /// Rotation by 90 degrees about the x3 axis: `f'(x1, x2, x3) = f(x2, -x1, x3)`.
    pub fn rotate_x3(&self) -> Lattice<T> {
        let n = self.grid.n;
        Lattice::from_index_fn(self.grid, |idx| {
            let [i, j, k] = self.grid.unindex(idx);
            self.data[self.grid.index(j, n - 1 - i, k)]
        })
    }
}

impl Lattice<f64> {
    pub fn integrate(&self) -> f64 {
        integrate(self)
    }
}

/// Geometric weights of one time slice.
#[derive(Clone, Debug)]
pub struct RadialWeights {
    pub t: f64,
    pub r: ScalarLattice,
    pub omega: [ScalarLattice; 3],
    /// `<t - r>`
    pub bracket_minus: ScalarLattice,
    /// `<t + r>`
    pub bracket_plus: ScalarLattice,
    pub t_minus_r: ScalarLattice,
}

/// Unit direction at a position; zero at the origin.
#[inline]
pub fn omega_at(x: [f64; 3]) -> [f64; 3] {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if r == 0.0 {
        [0.0; 3]
    } else {
        [x[0] / r, x[1] / r, x[2] / r]
    }
}

pub fn radial_weights(grid: &GridSpec, t: f64) -> RadialWeights {
    let g = *grid;
    let r = Lattice::from_index_fn(g, |i| g.radius(i));
    let omega = [0, 1, 2].map(|a| Lattice::from_fn(g, |x| omega_at(x)[a]));
    RadialWeights {
        t,
        bracket_minus: r.map(|&r| japanese(t - r)),
        bracket_plus: r.map(|&r| japanese(t + r)),
        t_minus_r: r.map(|&r| t - r),
        r,
        omega,
    }
}

/// The auxiliary wave field and its time derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxField {
    pub big_psi: SpinorLattice,
    pub big_psi_t: SpinorLattice,
}

/// One time slice of the coupled system.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub grid: GridSpec,
    pub case: CaseId,
    pub psi: SpinorLattice,
    pub phi: ScalarLattice,
    pub phi_t: ScalarLattice,
    pub aux: Option<AuxField>,
}

impl FieldState {
    pub fn zeros(grid: GridSpec, t: f64, case: CaseId) -> Self {
        FieldState {
            t,
            grid,
            case,
            psi: Lattice::zeros(grid),
            phi: Lattice::zeros(grid),
            phi_t: Lattice::zeros(grid),
            aux: None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.psi.is_finite()
            && self.phi.is_finite()
            && self.phi_t.is_finite()
            && self.aux.as_ref().is_none_or(|a| a.big_psi.is_finite() && a.big_psi_t.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(x: [f64; 3], c: [f64; 3], w: f64) -> f64 {
        let s2 = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2)) / (w * w);
        if s2 >= 1.0 {
            0.0
        } else {
            (1.0 - s2).powi(8)
        }
    }

    #[test]
    fn grid_spacing_conventions() {
        let g = GridSpec::zero_pad(17, 4.0).unwrap();
        assert_eq!(g.h, 0.5);
        assert_eq!(g.coord(16), 4.0);
        let p = GridSpec::periodic(32, 4.0).unwrap();
        assert_eq!(p.h, 0.25);
        assert!(GridSpec::zero_pad(16, 1.0).is_err());
    }

    #[test]
    fn constant_has_zero_derivative() {
        let g = GridSpec::periodic(17, 1.0).unwrap();
        let f = Lattice::from_fn(g, |_| 3.5f64);
        for a in 1..=3 {
            assert!(f.dx(a, 1).max_norm() < 1e-12);
            assert!(f.dx(a, 2).max_norm() < 1e-10);
        }
    }

    #[test]
    fn polynomials_are_exact_in_interior() {
        let g = GridSpec::zero_pad(21, 2.0).unwrap();
        let f = Lattice::from_fn(g, |x| x[1]);
        let q = Lattice::from_fn(g, |x| x[2].powi(4) - x[2].powi(3));
        let d = f.dx(2, 1);
        let dq = q.dx(3, 1);
        let ddq = q.dx(3, 2);
        for idx in 0..g.len() {
            let [i, j, k] = g.unindex(idx);
            let x = g.position(idx);
            let inner = |c: usize| (2..g.n - 2).contains(&c);
            if inner(i) && inner(j) {
                assert!((d.data[idx] - 1.0).abs() < 1e-12);
            }
            if inner(k) {
                assert!((dq.data[idx] - (4.0 * x[2].powi(3) - 3.0 * x[2].powi(2))).abs() < 1e-10);
                assert!((ddq.data[idx] - (12.0 * x[2].powi(2) - 6.0 * x[2])).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn periodic_sine_fourth_order() {
        let errs: Vec<f64> = [20usize, 40, 80]
            .iter()
            .map(|&n| {
                let g = GridSpec::periodic(n, std::f64::consts::PI).unwrap();
                let f = Lattice::from_fn(g, |x| (2.0 * x[0]).sin());
                let d = f.dx(1, 1);
                max_fn(&g, |i| (d.data[i] - 2.0 * (2.0 * g.position(i)[0]).cos()).abs())
            })
            .collect();
        let p1 = (errs[0] / errs[1]).log2();
        let p2 = (errs[1] / errs[2]).log2();
        assert!(p1 > 3.7 && p2 > 3.7, "{errs:?}");
        assert!((errs[1] / errs[2] - 16.0).abs() < 1.0);
    }

    #[test]
    fn quadrature_matches_refined_value() {
        let f = |n: usize| {
            let g = GridSpec::zero_pad(n, 2.0).unwrap();
            Lattice::from_fn(g, |x| bump(x, [0.1, -0.2, 0.05], 1.5)).integrate()
        };
        let coarse = f(49);
        let fine = f(97);
        assert!(((coarse - fine) / fine).abs() < 1e-6);
    }

    #[test]
    fn quadrature_zero_and_linear() {
        let g = GridSpec::zero_pad(17, 1.0).unwrap();
        assert_eq!(Lattice::<f64>::zeros(g).integrate(), 0.0);
        let a = Lattice::from_fn(g, |x| x[0].cos() + x[1]);
        let b = Lattice::from_fn(g, |x| x[2] * x[2]);
        let s = a.add(&b).unwrap().integrate();
        let rel = (s - a.integrate() - b.integrate()).abs() / s.abs();
        assert!(rel < 1e-13);
    }

    #[test]
    fn quadrature_translation_invariant() {
        let g = GridSpec::zero_pad(41, 2.0).unwrap();
        let f = Lattice::from_fn(g, |x| bump(x, [0.0; 3], 1.2));
        let s = f.shift(2, 1);
        let rel = (s.integrate() - f.integrate()).abs() / f.integrate();
        assert!(rel < 1e-12);
    }

    #[test]
    fn radial_weight_examples() {
        let g = GridSpec::zero_pad(21, 10.0).unwrap();
        let w = radial_weights(&g, 10.0);
        let origin = g.index(10, 10, 10);
        assert_eq!(w.r.data[origin], 0.0);
        assert_eq!([w.omega[0].data[origin], w.omega[1].data[origin], w.omega[2].data[origin]], [0.0; 3]);
        let node = g.index(13, 14, 10);
        assert!((w.r.data[node] - 5.0).abs() < 1e-14);
        assert!((w.bracket_minus.data[node] - 26f64.sqrt()).abs() < 1e-14);
        let mirror = g.index(7, 6, 10);
        assert_eq!(w.r.data[node], w.r.data[mirror]);
    }

    #[test]
    fn boundary_flag() {
        let g = GridSpec::zero_pad(21, 2.0).unwrap();
        let inside = Lattice::from_fn(g, |x| bump(x, [0.0; 3], 1.0));
        assert!(!inside.support_touches_boundary());
        assert!(inside.dx_checked(1, 1).is_ok());
        let wide = Lattice::from_fn(g, |x| (-x[0] * x[0]).exp());
        assert!(wide.support_touches_boundary());
        assert!(wide.dx_checked(1, 1).is_err());
    }

    #[test]
    fn rotation_is_a_permutation() {
        let g = GridSpec::zero_pad(17, 1.0).unwrap();
        let f = Lattice::from_fn(g, |x| x[0] + 2.0 * x[1]);
        let r = f.rotate_x3();
        for idx in 0..g.len() {
            let x = g.position(idx);
            assert!((r.data[idx] - (x[1] - 2.0 * x[0])).abs() < 1e-12);
        }
    }
}
