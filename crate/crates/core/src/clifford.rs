//! Dirac matrices in the standard (Dirac) representation and the pointwise
//! spinor identities used throughout the crate.
//!
//! Matrices are dense row-major 4x4 complex arrays. Every entry of the
//! representation is one of `0, ±1, ±i`, so products of gamma matrices are
//! exact in floating point and the algebraic identities below hold to rounding
//! of the (random) spinor arithmetic only.

use std::sync::OnceLock;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::report::IdentityReport;

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Minkowski signature `g = diag(-1, 1, 1, 1)`.
pub const METRIC: [f64; 4] = [-1.0, 1.0, 1.0, 1.0];

/// Dense 4x4 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat4(pub [[C64; 4]; 4]);

impl Mat4 {
    pub const fn zero() -> Self {
        Mat4([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        Self::scalar(ONE)
    }

    pub fn scalar(c: C64) -> Self {
        let mut m = Self::zero();
        for k in 0..4 {
            m.0[k][k] = c;
        }
        m
    }

    /// Assemble from four 2x2 blocks `[[a, b], [c, d]]`.
    pub fn from_blocks(a: [[C64; 2]; 2], b: [[C64; 2]; 2], c: [[C64; 2]; 2], d: [[C64; 2]; 2]) -> Self {
        let mut m = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] = a[i][j];
                m.0[i][j + 2] = b[i][j];
                m.0[i + 2][j] = c[i][j];
                m.0[i + 2][j + 2] = d[i][j];
            }
        }
        m
    }

    /// Hermitian conjugate `A* = conj(A)^T`.
    pub fn adjoint(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut m = *self;
        for row in m.0.iter_mut() {
            for x in row.iter_mut() {
                *x *= c;
            }
        }
        m
    }

    pub fn apply(&self, v: &Spinor) -> Spinor {
        let mut out = [ZERO; 4];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.0[i];
            *o = row[0] * v.0[0] + row[1] * v.0[1] + row[2] * v.0[2] + row[3] * v.0[3];
        }
        Spinor(out)
    }

    /// Entrywise max-norm.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .map(|x| x.norm())
            .fold(0.0, f64::max)
    }
}

impl Mul for Mat4 {
    type Output = Mat4;
    fn mul(self, rhs: Mat4) -> Mat4 {
        let mut m = Mat4::zero();
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = ZERO;
                for k in 0..4 {
                    acc += self.0[i][k] * rhs.0[k][j];
                }
                m.0[i][j] = acc;
            }
        }
        m
    }
}

impl Add for Mat4 {
    type Output = Mat4;
    fn add(self, rhs: Mat4) -> Mat4 {
        let mut m = self;
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] += rhs.0[i][j];
            }
        }
        m
    }
}

impl Sub for Mat4 {
    type Output = Mat4;
    fn sub(self, rhs: Mat4) -> Mat4 {
        self + rhs.scale(-ONE)
    }
}

/// A value in C^4.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Spinor(pub [C64; 4]);

impl Spinor {
    pub const fn zero() -> Self {
        Spinor([ZERO; 4])
    }

    pub fn new(c: [C64; 4]) -> Self {
        Spinor(c)
    }

    pub fn from_real(c: [f64; 4]) -> Self {
        Spinor(c.map(|x| C64::new(x, 0.0)))
    }

    /// Conjugate-linear in `self`: returns `self* other`.
    pub fn dot(&self, other: &Spinor) -> C64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, c: C64) -> Spinor {
        Spinor(self.0.map(|x| x * c))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn random<R: Rng>(rng: &mut R) -> Spinor {
        let mut s = Spinor::zero();
        for c in s.0.iter_mut() {
            *c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        s
    }
}

impl Index<usize> for Spinor {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Spinor {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

impl Add for Spinor {
    type Output = Spinor;
    #[inline]
    fn add(self, rhs: Spinor) -> Spinor {
        Spinor([
            self.0[0] + rhs.0[0],
            self.0[1] + rhs.0[1],
            self.0[2] + rhs.0[2],
            self.0[3] + rhs.0[3],
        ])
    }
}

impl Sub for Spinor {
    type Output = Spinor;
    #[inline]
    fn sub(self, rhs: Spinor) -> Spinor {
        Spinor([
            self.0[0] - rhs.0[0],
            self.0[1] - rhs.0[1],
            self.0[2] - rhs.0[2],
            self.0[3] - rhs.0[3],
        ])
    }
}

impl Neg for Spinor {
    type Output = Spinor;
    #[inline]
    fn neg(self) -> Spinor {
        Spinor(self.0.map(|x| -x))
    }
}

impl Mul<f64> for Spinor {
    type Output = Spinor;
    #[inline]
    fn mul(self, rhs: f64) -> Spinor {
        Spinor(self.0.map(|x| x * rhs))
    }
}

impl AddAssign for Spinor {
    #[inline]
    fn add_assign(&mut self, rhs: Spinor) {
        for k in 0..4 {
            self.0[k] += rhs.0[k];
        }
    }
}

impl SubAssign for Spinor {
    #[inline]
    fn sub_assign(&mut self, rhs: Spinor) {
        for k in 0..4 {
            self.0[k] -= rhs.0[k];
        }
    }
}

/// Unit vector `omega = x / r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction([f64; 3]);

impl Direction {
    pub const TOLERANCE: f64 = 1e-14;

    pub fn new(omega: [f64; 3]) -> Result<Self> {
        let n2: f64 = omega.iter().map(|x| x * x).sum();
        if (n2 - 1.0).abs() > Self::TOLERANCE || !n2.is_finite() {
            return Err(Error::NonUnitDirection(n2.sqrt()));
        }
        Ok(Direction(omega))
    }

    /// Normalizes a nonzero vector.
    pub fn from_vector(x: [f64; 3]) -> Result<Self> {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if r == 0.0 || !r.is_finite() {
            return Err(Error::NonUnitDirection(r));
        }
        Ok(Direction([x[0] / r, x[1] / r, x[2] / r]))
    }

    pub fn random<R: Rng>(rng: &mut R) -> Self {
        loop {
            let v = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let r2: f64 = v.iter().map(|x: &f64| x * x).sum();
            if r2 > 1e-4 && r2 <= 1.0 {
                return Self::from_vector(v).expect("nonzero");
            }
        }
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// The gamma matrices, `gamma5 = i g0 g1 g2 g3` and `upsilon = i g0 g5`.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaSet {
    pub gamma: [Mat4; 4],
    pub gamma5: Mat4,
    pub upsilon: Mat4,
    pub metric: [f64; 4],
    /// `gamma^0 gamma^a` for a = 1..3 (index 0..2); Hermitian.
    pub alpha: [Mat4; 3],
}

fn pauli() -> [[[C64; 2]; 2]; 3] {
    let z = ZERO;
    [
        [[z, ONE], [ONE, z]],
        [[z, -I], [I, z]],
        [[ONE, z], [z, -ONE]],
    ]
}

/// Builds the explicit representation: `gamma^0 = diag(I2, -I2)` and
/// `gamma^a` with off-diagonal blocks `(sigma_a, -sigma_a)`.
pub fn build_gamma_set() -> GammaSet {
    let z2 = [[ZERO; 2]; 2];
    let i2 = [[ONE, ZERO], [ZERO, ONE]];
    let mi2 = [[-ONE, ZERO], [ZERO, -ONE]];
    let g0 = Mat4::from_blocks(i2, z2, z2, mi2);
    let s = pauli();
    let neg = |b: [[C64; 2]; 2]| b.map(|r| r.map(|x| -x));
    let ga = |a: usize| Mat4::from_blocks(z2, s[a], neg(s[a]), z2);
    let gamma = [g0, ga(0), ga(1), ga(2)];
    let gamma5 = (gamma[0] * gamma[1] * gamma[2] * gamma[3]).scale(I);
    let upsilon = (gamma[0] * gamma5).scale(I);
    let alpha = [gamma[0] * gamma[1], gamma[0] * gamma[2], gamma[0] * gamma[3]];
    GammaSet {
        gamma,
        gamma5,
        upsilon,
        metric: METRIC,
        alpha,
    }
}

impl GammaSet {
    /// `omega_a gamma^0 gamma^a`.
    pub fn radial_alpha(&self, omega: [f64; 3]) -> Mat4 {
        let mut m = Mat4::zero();
        for a in 0..3 {
            m = m + self.alpha[a].scale(C64::new(omega[a], 0.0));
        }
        m
    }

    /// `I4 ± omega_a gamma^0 gamma^a` for a raw (possibly zero) omega.
    pub fn projector(&self, omega: [f64; 3], sign: Sign) -> Mat4 {
        Mat4::identity() + self.radial_alpha(omega).scale(C64::new(sign.value(), 0.0))
    }

    /// `(I4 ± omega_a gamma^0 gamma^a) v` without the unit-length check; the
    /// lattice code uses this with the `omega = 0` origin convention.
    pub fn project_raw(&self, v: &Spinor, omega: [f64; 3], sign: Sign) -> Spinor {
        let s = sign.value();
        let mut out = *v;
        for a in 0..3 {
            if omega[a] != 0.0 {
                out += self.alpha[a].apply(v) * (s * omega[a]);
            }
        }
        out
    }

    /// `gamma^0 v` with the diagonal structure exploited.
    pub fn gamma0_apply(&self, v: &Spinor) -> Spinor {
        self.gamma[0].apply(v)
    }
}

/// Shared immutable gamma set.
pub fn gammas() -> &'static GammaSet {
    static SET: OnceLock<GammaSet> = OnceLock::new();
    SET.get_or_init(build_gamma_set)
}

pub fn project_pm(gs: &GammaSet, v: &Spinor, w: &Direction, sign: Sign) -> Spinor {
    gs.project_raw(v, w.components(), sign)
}

/// `v1* gamma^0 v2`.
pub fn bilinear_gamma0(gs: &GammaSet, v1: &Spinor, v2: &Spinor) -> C64 {
    v1.dot(&gs.gamma0_apply(v2))
}

/// `|[v1]_+* gamma^0 [v2]_+|`, which vanishes identically.
pub fn plus_annihilation_residual(gs: &GammaSet, v1: &Spinor, v2: &Spinor, w: &Direction) -> f64 {
    let p1 = project_pm(gs, v1, w, Sign::Plus);
    let p2 = project_pm(gs, v2, w, Sign::Plus);
    bilinear_gamma0(gs, &p1, &p2).norm()
}

/// Default seed of the sampled identity checks.
pub const DEFAULT_SEED: u64 = 0x5eed_d1ac;
/// Default number of random samples per sampled identity.
pub const DEFAULT_SAMPLES: usize = 1000;

/// Residuals of the Clifford and conjugation relations:
/// `{g^mu, g^nu} = -2 g_{mu nu} I4` and `(g^mu)* = -g_{mu nu} g^nu`.
pub fn verify_clifford(gs: &GammaSet) -> Vec<IdentityReport> {
    let mut anti = 0.0f64;
    for mu in 0..4 {
        for nu in 0..4 {
            let ac = gs.gamma[mu] * gs.gamma[nu] + gs.gamma[nu] * gs.gamma[mu];
            let expected = if mu == nu {
                Mat4::scalar(C64::new(-2.0 * gs.metric[mu], 0.0))
            } else {
                Mat4::zero()
            };
            anti = anti.max((ac - expected).max_abs());
        }
    }
    let mut conj = 0.0f64;
    for mu in 0..4 {
        let expected = gs.gamma[mu].scale(C64::new(-gs.metric[mu], 0.0));
        conj = conj.max((gs.gamma[mu].adjoint() - expected).max_abs());
    }
    let g5 = &gs.gamma5;
    let mut g5_anti = 0.0f64;
    for mu in 0..4 {
        g5_anti = g5_anti.max((*g5 * gs.gamma[mu] + gs.gamma[mu] * *g5).max_abs());
    }
    let ups_alt = (gs.gamma[1] * gs.gamma[2] * gs.gamma[3]).scale(-ONE);
    vec![
        IdentityReport::exact("clifford_anticommutator", anti, 16, None),
        IdentityReport::exact("gamma_conjugation", conj, 4, None),
        IdentityReport::exact("gamma5_hermitian", (g5.adjoint() - *g5).max_abs(), 1, None),
        IdentityReport::exact("gamma5_square", (*g5 * *g5 - Mat4::identity()).max_abs(), 1, None),
        IdentityReport::exact("gamma5_anticommutes", g5_anti, 4, None),
        IdentityReport::exact("upsilon_two_forms", (gs.upsilon - ups_alt).max_abs(), 1, None),
    ]
}

/// Matrix identities: `(I4 - w_a g0 ga)(g0 - g^b w_b) = 0`,
/// `Upsilon g^mu g5 + g5 (g^mu)* Upsilon = 0` and `[g5 v]_- = g5 [v]_-`.
pub fn misc_matrix_identities(gs: &GammaSet, w: &Direction) -> Vec<IdentityReport> {
    let om = w.components();
    let mut gb = Mat4::zero();
    for a in 0..3 {
        gb = gb + gs.gamma[a + 1].scale(C64::new(om[a], 0.0));
    }
    let annihilation = (gs.projector(om, Sign::Minus) * (gs.gamma[0] - gb)).max_abs();
    let mut ups = 0.0f64;
    for mu in 0..4 {
        let m = gs.upsilon * gs.gamma[mu] * gs.gamma5 + gs.gamma5 * gs.gamma[mu].adjoint() * gs.upsilon;
        ups = ups.max(m.max_abs());
    }
    let comm = (gs.projector(om, Sign::Minus) * gs.gamma5 - gs.gamma5 * gs.projector(om, Sign::Minus)).max_abs();
    vec![
        IdentityReport::exact("minus_projector_annihilates_null_symbol", annihilation, 1, None),
        IdentityReport::exact("upsilon_gamma5_conjugation", ups, 4, None),
        IdentityReport::exact("gamma5_commutes_with_minus_projection", comm, 1, None),
    ]
}

/// All sampled spinor identities on `samples` seeded random `(v1, v2, omega)`.
pub fn sampled_spinor_identities(gs: &GammaSet, samples: usize, seed: u64) -> Vec<IdentityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plus_annihilation = 0.0f64;
    let mut minus_norm = 0.0f64;
    let mut sum_projections = 0.0f64;
    let mut bilinear_split = 0.0f64;
    let mut g5_projection = 0.0f64;
    let mut matrix = 0.0f64;
    for _ in 0..samples {
        let v1 = Spinor::random(&mut rng);
        let v2 = Spinor::random(&mut rng);
        let w = Direction::random(&mut rng);
        let om = w.components();
        let scale = v1.norm() * v2.norm();

        plus_annihilation = plus_annihilation.max(plus_annihilation_residual(gs, &v1, &v2, &w) / scale);

        let m = project_pm(gs, &v1, &w, Sign::Minus);
        let p = project_pm(gs, &v1, &w, Sign::Plus);
        let rad = v1.dot(&gs.radial_alpha(om).apply(&v1)).re;
        let rhs = 2.0 * v1.norm_sqr() - 2.0 * rad;
        minus_norm = minus_norm.max((m.norm_sqr() - rhs).abs() / v1.norm_sqr());

        sum_projections = sum_projections.max(((p + m) - v1 * 2.0).norm() / v1.norm());

        let lhs = bilinear_gamma0(gs, &v1, &v1);
        let split = (bilinear_gamma0(gs, &m, &p) + bilinear_gamma0(gs, &p, &m) + bilinear_gamma0(gs, &m, &m)) * 0.25;
        bilinear_split = bilinear_split.max((lhs - split).norm() / v1.norm_sqr());

        let g5v = gs.gamma5.apply(&v1);
        let lhs5 = project_pm(gs, &g5v, &w, Sign::Minus);
        let rhs5 = gs.gamma5.apply(&m);
        g5_projection = g5_projection.max((lhs5 - rhs5).norm() / v1.norm());

        for r in misc_matrix_identities(gs, &w) {
            matrix = matrix.max(r.max_residual);
        }
    }
    let s = Some(seed);
    vec![
        IdentityReport::exact("plus_plus_gamma0_annihilation", plus_annihilation, samples, s),
        IdentityReport::exact("minus_projection_norm", minus_norm, samples, s),
        IdentityReport::exact("projection_sum_is_twice_identity", sum_projections, samples, s),
        IdentityReport::exact("gamma0_bilinear_split", bilinear_split, samples, s),
        IdentityReport::exact("gamma5_minus_projection", g5_projection, samples, s),
        IdentityReport::exact("direction_matrix_identities", matrix, samples, s),
    ]
}

/// The full exact-algebra suite reported by `verify-algebra`.
pub fn algebra_suite(samples: usize, seed: u64) -> Vec<IdentityReport> {
    let gs = build_gamma_set();
    let mut out = verify_clifford(&gs);
    out.extend(sampled_spinor_identities(&gs, samples, seed));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn gamma0_is_diagonal() {
        let gs = build_gamma_set();
        let expect = [1.0, 1.0, -1.0, -1.0];
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { c(expect[i], 0.0) } else { ZERO };
                assert_eq!(gs.gamma[0].0[i][j], want);
            }
        }
    }

    #[test]
    fn gamma1_rows() {
        let gs = build_gamma_set();
        let rows = [
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(gs.gamma[1].0[i][j], c(rows[i][j], 0.0));
            }
        }
    }

    #[test]
    fn gamma5_squares_to_identity() {
        let gs = build_gamma_set();
        assert_eq!(gs.gamma5 * gs.gamma5, Mat4::identity());
    }

    #[test]
    fn anticommutator_examples() {
        let gs = build_gamma_set();
        let g = &gs.gamma;
        assert_eq!(g[0] * g[0] + g[0] * g[0], Mat4::scalar(c(2.0, 0.0)));
        assert_eq!(g[1] * g[2] + g[2] * g[1], Mat4::zero());
        assert_eq!(g[1] * g[1], Mat4::scalar(c(-1.0, 0.0)));
    }

    #[test]
    fn projection_examples() {
        let gs = build_gamma_set();
        let v = Spinor::from_real([1.0, 0.0, 0.0, 0.0]);
        let w = Direction::new([0.0, 0.0, 1.0]).unwrap();
        assert_eq!(project_pm(&gs, &v, &w, Sign::Minus), Spinor::from_real([1.0, 0.0, -1.0, 0.0]));
        assert_eq!(project_pm(&gs, &v, &w, Sign::Plus), Spinor::from_real([1.0, 0.0, 1.0, 0.0]));
        assert_eq!(project_pm(&gs, &Spinor::zero(), &w, Sign::Plus), Spinor::zero());
    }

    #[test]
    fn non_unit_direction_rejected() {
        assert!(Direction::new([1.0, 1.0, 0.0]).is_err());
        assert!(Direction::new([0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn plus_annihilation_examples() {
        let gs = build_gamma_set();
        let v = Spinor::from_real([1.0, 0.0, 0.0, 0.0]);
        let w = Direction::new([0.0, 0.0, 1.0]).unwrap();
        assert_eq!(plus_annihilation_residual(&gs, &v, &v, &w), 0.0);
        assert_eq!(plus_annihilation_residual(&gs, &Spinor::zero(), &v, &w), 0.0);
    }

    #[test]
    fn bilinear_examples() {
        let gs = build_gamma_set();
        let e1 = Spinor::from_real([1.0, 0.0, 0.0, 0.0]);
        let e3 = Spinor::from_real([0.0, 0.0, 1.0, 0.0]);
        assert_eq!(bilinear_gamma0(&gs, &e1, &e1), ONE);
        assert_eq!(bilinear_gamma0(&gs, &e3, &e3), -ONE);
    }

    #[test]
    fn misc_identity_examples() {
        let gs = build_gamma_set();
        let w = Direction::new([1.0, 0.0, 0.0]).unwrap();
        for r in misc_matrix_identities(&gs, &w) {
            assert_eq!(r.max_residual, 0.0, "{}", r.identity_name);
        }
        // mu = 0 instance by hand
        let m = gs.upsilon * gs.gamma[0] * gs.gamma5 + gs.gamma5 * gs.gamma[0] * gs.upsilon;
        assert_eq!(m, Mat4::zero());
        // [g5 v]_- = g5 [v]_- for v = (1, i, 0, 0), omega = e2
        let v = Spinor::new([ONE, I, ZERO, ZERO]);
        let w = Direction::new([0.0, 1.0, 0.0]).unwrap();
        let lhs = project_pm(&gs, &gs.gamma5.apply(&v), &w, Sign::Minus);
        let rhs = gs.gamma5.apply(&project_pm(&gs, &v, &w, Sign::Minus));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn upsilon_is_hermitian() {
        let gs = build_gamma_set();
        assert_eq!(gs.upsilon.adjoint(), gs.upsilon);
        for a in 0..3 {
            assert_eq!(gs.alpha[a].adjoint(), gs.alpha[a]);
        }
    }

    #[test]
    fn whole_suite_is_exact_to_rounding() {
        for r in algebra_suite(DEFAULT_SAMPLES, DEFAULT_SEED) {
            assert!(r.max_residual <= 1e-13, "{} = {}", r.identity_name, r.max_residual);
        }
    }
}
