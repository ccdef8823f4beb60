//! The ℤ₂×ℤ₂ product-measure example at finite truncation.
//!
//! Each site carries X_i = {0,1}² with law ν(k,l) = p_kl. The function space of
//! n sites is written in the orthonormal basis e_x = χ_x/√μ(x). Site i is the
//! base-4 digit 2·x⁽⁰⁾_i + x⁽¹⁾_i, site 1 most significant, so a single site is
//! ordered (00, 01, 10, 11).
//!
//! The matrix picture reshapes a vector into a 2ⁿ×2ⁿ matrix. Its row index holds
//! the x⁽⁰⁾ bits and its column index the x⁽¹⁾ bits, site 1 first. In that
//! picture π⁽⁰⁾ acts by left multiplication and π⁽¹⁾ by right multiplication.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, Vector4};
use rand::Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::wreath::{Permutation, WreathElement};

const SUM_TOL: f64 = 1e-9;
const DET_TOL: f64 = 1e-12;
const SPAN_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbMatrix {
    p: [[f64; 2]; 2],
}

impl ProbMatrix {
    pub fn new(p: [[f64; 2]; 2]) -> Result<Self> {
        let flat = [p[0][0], p[0][1], p[1][0], p[1][1]];
        if flat.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidParams("p entries must be finite and non-negative".into()));
        }
        let s: f64 = flat.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidParams(format!("p entries sum to {s}, expected 1")));
        }
        Ok(Self { p })
    }

    pub fn from_flat(v: [f64; 4]) -> Result<Self> {
        Self::new([[v[0], v[1]], [v[2], v[3]]])
    }

    /// Accepts `{"p": [[p00, p01], [p10, p11]]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            p: [[f64; 2]; 2],
        }
        let doc: Doc = serde_json::from_str(text).map_err(|e| Error::Config(format!("p: {e}")))?;
        Self::new(doc.p)
    }

    /// Strictly positive entries summing to one. With `singular` the matrix is a
    /// product a⊗b, so det = 0.
    pub fn random<R: Rng>(rng: &mut R, singular: bool) -> Self {
        let p = if singular {
            let a: f64 = rng.gen_range(0.1..0.9);
            let b: f64 = rng.gen_range(0.1..0.9);
            [[a * b, a * (1.0 - b)], [(1.0 - a) * b, (1.0 - a) * (1.0 - b)]]
        } else {
            let w: Vec<f64> = (0..4).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = w.iter().sum();
            [[w[0] / s, w[1] / s], [w[2] / s, w[3] / s]]
        };
        Self::new(p).expect("normalized")
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.p[k][l]
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.p
    }

    pub fn strictly_positive(&self) -> bool {
        self.p.iter().flatten().all(|&x| x > 0.0)
    }

    pub fn det(&self) -> f64 {
        self.p[0][0] * self.p[1][1] - self.p[0][1] * self.p[1][0]
    }

    /// det p and det 𝔍(𝕀) vanish together for non-negative entries.
    pub fn nonzero_det(&self) -> bool {
        self.det().abs() > DET_TOL
    }

    fn require_positive(&self) -> Result<()> {
        if self.strictly_positive() {
            Ok(())
        } else {
            Err(Error::Precondition("p has a zero entry, so μ is not quasi-invariant".into()))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SiteOperators {
    pub o0: Matrix4<f64>,
    pub o1: Matrix4<f64>,
}

impl SiteOperators {
    pub fn gamma0(b: u8) -> Matrix4<f64> {
        let s = if b % 2 == 1 { -1.0 } else { 1.0 };
        Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, s, s))
    }

    pub fn gamma1(b: u8) -> Matrix4<f64> {
        let s = if b % 2 == 1 { -1.0 } else { 1.0 };
        Matrix4::from_diagonal(&Vector4::new(1.0, s, 1.0, s))
    }
}

fn off0(p: &ProbMatrix) -> f64 {
    (p.get(0, 0) * p.get(1, 0)).sqrt() + (p.get(0, 1) * p.get(1, 1)).sqrt()
}

fn off1(p: &ProbMatrix) -> f64 {
    (p.get(0, 0) * p.get(0, 1)).sqrt() + (p.get(1, 0) * p.get(1, 1)).sqrt()
}

/// Single-site limits of the Cesàro averages over transpositions.
pub fn site_operators(p: &ProbMatrix, require_positive: bool) -> Result<SiteOperators> {
    if require_positive {
        p.require_positive()?;
    }
    let (a0, d0, c0) = (p.get(0, 0) + p.get(0, 1), p.get(1, 0) + p.get(1, 1), off0(p));
    let (a1, d1, c1) = (p.get(0, 0) + p.get(1, 0), p.get(0, 1) + p.get(1, 1), off1(p));
    #[rustfmt::skip]
    let o0 = Matrix4::new(
        a0, 0.0, c0, 0.0,
        0.0, a0, 0.0, c0,
        c0, 0.0, d0, 0.0,
        0.0, c0, 0.0, d0,
    );
    #[rustfmt::skip]
    let o1 = Matrix4::new(
        a1, c1, 0.0, 0.0,
        c1, d1, 0.0, 0.0,
        0.0, 0.0, a1, c1,
        0.0, 0.0, c1, d1,
    );
    Ok(SiteOperators { o0, o1 })
}

/// 𝔍: Σ a_mn e_mn ↦ [[a00, a01], [a10, a11]].
pub fn iso(v: &Vector4<f64>) -> Matrix2<f64> {
    Matrix2::new(v[0], v[1], v[2], v[3])
}

pub fn iso_inv(a: &Matrix2<f64>) -> Vector4<f64> {
    Vector4::new(a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)])
}

/// 𝔍(𝕀).
pub fn xi_site(p: &ProbMatrix) -> Matrix2<f64> {
    Matrix2::new(p.get(0, 0).sqrt(), p.get(0, 1).sqrt(), p.get(1, 0).sqrt(), p.get(1, 1).sqrt())
}

pub fn l_form(p: &ProbMatrix) -> Matrix2<f64> {
    let c = off0(p);
    Matrix2::new(p.get(0, 0) + p.get(0, 1), c, c, p.get(1, 0) + p.get(1, 1))
}

pub fn r_form(p: &ProbMatrix) -> Matrix2<f64> {
    let c = off1(p);
    Matrix2::new(p.get(0, 0) + p.get(1, 0), c, c, p.get(0, 1) + p.get(1, 1))
}

fn sign2() -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, 0.0, -1.0)
}

#[derive(Clone, Debug)]
pub struct LrCheck {
    pub j: Matrix2<f64>,
    pub l_form: Matrix2<f64>,
    pub r_form: Matrix2<f64>,
    /// Max residuals of: O0 ↔ left L, O1 ↔ right R, γ⁽⁰⁾ ↔ left sign, γ⁽¹⁾ ↔ right sign.
    pub residuals: [f64; 4],
    /// |𝔍(𝕀)𝔍(𝕀)* − L| and |𝔍(𝕀)*𝔍(𝕀) − R|.
    pub gram_residuals: [f64; 2],
}

impl LrCheck {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().chain(&self.gram_residuals).fold(0.0, |m, &x| m.max(x))
    }
}

pub fn iso_and_lr(p: &ProbMatrix) -> Result<LrCheck> {
    let ops = site_operators(p, false)?;
    let (l, r) = (l_form(p), r_form(p));
    let (g0, g1) = (SiteOperators::gamma0(1), SiteOperators::gamma1(1));
    let mut residuals = [0.0f64; 4];
    for b in 0..4 {
        let v = Vector4::from_fn(|i, _| if i == b { 1.0 } else { 0.0 });
        let a = iso(&v);
        let pairs = [
            (iso(&(ops.o0 * v)), l * a),
            (iso(&(ops.o1 * v)), a * r),
            (iso(&(g0 * v)), sign2() * a),
            (iso(&(g1 * v)), a * sign2()),
        ];
        for (k, (x, y)) in pairs.iter().enumerate() {
            residuals[k] = residuals[k].max((x - y).abs().max());
        }
    }
    let j = xi_site(p);
    let gram_residuals = [(j * j.transpose() - l).abs().max(), (j.transpose() * j - r).abs().max()];
    Ok(LrCheck { j, l_form: l, r_form: r, residuals, gram_residuals })
}

// ---------------------------------------------------------------------------
// Function space on n sites

fn dim(n: usize) -> usize {
    1usize << (2 * n)
}

fn digit(idx: usize, site: usize, n: usize) -> usize {
    (idx >> (2 * (n - site))) & 3
}

/// 𝕀 = Σ √μ(x) e_x, the constant function.
pub fn unit_vector(p: &ProbMatrix, n: usize) -> DVector<f64> {
    DVector::from_fn(dim(n), |idx, _| {
        (1..=n).map(|i| {
            let d = digit(idx, i, n);
            p.get(d >> 1, d & 1)
        }).product::<f64>().sqrt()
    })
}

/// Applies a 4×4 matrix to site `k` of a function-space vector.
pub fn apply_site(v: &DVector<f64>, n: usize, k: usize, m: &Matrix4<f64>) -> DVector<f64> {
    let shift = 2 * (n - k);
    let mut out = DVector::zeros(v.len());
    for idx in 0..v.len() {
        let x = v[idx];
        if x == 0.0 {
            continue;
        }
        let d = (idx >> shift) & 3;
        let base = idx & !(3 << shift);
        for r in 0..4 {
            let c = m[(r, d)];
            if c != 0.0 {
                out[base | (r << shift)] += c * x;
            }
        }
    }
    out
}

/// π_μ on the 4ⁿ-dimensional space: e_y ↦ sign[y]·e_{target[y]}.
#[derive(Clone, Debug, PartialEq)]
pub struct PiOperator {
    pub n: usize,
    target: Vec<u32>,
    sign: Vec<i8>,
}

impl PiOperator {
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for (y, &x) in v.iter().enumerate() {
            out[self.target[y] as usize] += f64::from(self.sign[y]) * x;
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.target.len(), self.target.len());
        for (y, (&t, &s)) in self.target.iter().zip(&self.sign).enumerate() {
            m[(t as usize, y)] = f64::from(s);
        }
        m
    }
}

fn z2_bits(g: &WreathElement, n: usize) -> Result<(Permutation, Vec<u8>)> {
    if g.group().order() != 2 {
        return Err(Error::Precondition("the type-III lab needs Γ = ℤ₂".into()));
    }
    if g.max_support() > n {
        return Err(Error::Precondition(format!("support {} exceeds n = {n}", g.max_support())));
    }
    let e = g.group().e();
    let bits = (1..=n).map(|i| u8::from(g.gamma(i) != e)).collect();
    Ok((g.perm.inverse(), bits))
}

/// π_μ((g0, g1)) for ℤ₂ wreath elements supported in 1..=n.
///
/// In the e-basis the Radon–Nikodym factor cancels against the normalization and
/// π(s) e_y = e_{a_s⁻¹(y)}, so the operator is a signed permutation.
pub fn rep_pi_mu(p: &ProbMatrix, g0: &WreathElement, g1: &WreathElement, n: usize) -> Result<PiOperator> {
    p.require_positive()?;
    let (s0inv, b0) = z2_bits(g0, n)?;
    let (s1inv, b1) = z2_bits(g1, n)?;
    let mut target = Vec::with_capacity(dim(n));
    let mut sign = Vec::with_capacity(dim(n));
    for y in 0..dim(n) {
        let mut parity = 0u8;
        let mut x = 0usize;
        for j in 1..=n {
            let d = digit(y, j, n);
            parity ^= (b0[j - 1] & (d >> 1) as u8) ^ (b1[j - 1] & (d & 1) as u8);
            let hi = digit(y, s0inv.apply(j), n) >> 1;
            let lo = digit(y, s1inv.apply(j), n) & 1;
            x = (x << 2) | (hi << 1) | lo;
        }
        target.push(x as u32);
        sign.push(if parity == 1 { -1 } else { 1 });
    }
    Ok(PiOperator { n, target, sign })
}

/// (1/n)Σ_{l=1}^n π⁽⁰⁾((k,l)) against O0 at site k, on local probe vectors.
///
/// The probes are 𝕀 and seeded random vectors on sites 1..=max(k,2) tensored with
/// 𝕀 elsewhere; the limit holds strongly, so only such vectors converge. Returns
/// the largest ‖average·v − O0·v‖ over the probes.
pub fn cesaro_gap<R: Rng>(p: &ProbMatrix, k: usize, n: usize, probes: usize, rng: &mut R) -> Result<f64> {
    let m = k.max(2);
    if k == 0 || n < m {
        return Err(Error::Precondition(format!("need 1 ≤ k and n ≥ {m}")));
    }
    let ops = site_operators(p, true)?;
    let group = std::sync::Arc::new(crate::finite_group::build_group(&crate::finite_group::GroupDescriptor::Cyclic(2))?);
    let e = WreathElement::identity(group.clone());
    let transpositions: Vec<PiOperator> = (1..=n)
        .map(|l| rep_pi_mu(p, &WreathElement::from_perm(group.clone(), Permutation::transposition(k, l)), &e, n))
        .collect::<Result<_>>()?;
    let tail = unit_vector(p, n - m);
    let mut vectors = vec![unit_vector(p, n)];
    for _ in 0..probes {
        let w = DVector::from_fn(dim(m), |_, _| rng.gen_range(-1.0..1.0)).normalize();
        vectors.push(w.kronecker(&tail));
    }
    let mut worst = 0.0f64;
    for v in &vectors {
        let mut avg = DVector::zeros(v.len());
        for t in &transpositions {
            avg += t.apply(v);
        }
        avg /= n as f64;
        worst = worst.max((avg - apply_site(v, n, k, &ops.o0)).norm());
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Matrix picture

/// Reshapes a function-space vector into the 2ⁿ×2ⁿ matrix picture.
pub fn to_matrix(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    let side = 1usize << n;
    let mut m = DMatrix::zeros(side, side);
    for (idx, &x) in v.iter().enumerate() {
        let (mut r, mut c) = (0usize, 0usize);
        for i in 1..=n {
            let d = digit(idx, i, n);
            r = (r << 1) | (d >> 1);
            c = (c << 1) | (d & 1);
        }
        m[(r, c)] = x;
    }
    m
}

pub fn from_matrix(m: &DMatrix<f64>, n: usize) -> DVector<f64> {
    DVector::from_fn(dim(n), |idx, _| {
        let (mut r, mut c) = (0usize, 0usize);
        for i in 1..=n {
            let d = digit(idx, i, n);
            r = (r << 1) | (d >> 1);
            c = (c << 1) | (d & 1);
        }
        m[(r, c)]
    })
}

/// I ⊗ … ⊗ a ⊗ … ⊗ I with `a` at site `i` (1-based).
pub fn site_embed(n: usize, i: usize, a: &Matrix2<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::from_element(1, 1, 1.0);
    for j in 1..=n {
        let f = if j == i { DMatrix::from_fn(2, 2, |r, c| a[(r, c)]) } else { DMatrix::identity(2, 2) };
        out = out.kronecker(&f);
    }
    out
}

fn kron_all(n: usize, a: &Matrix2<f64>) -> DMatrix<f64> {
    let f = DMatrix::from_fn(2, 2, |r, c| a[(r, c)]);
    (0..n).fold(DMatrix::from_element(1, 1, 1.0), |acc, _| acc.kronecker(&f))
}

/// ξ = 𝔍(𝕀)^{⊗n} as a 2ⁿ×2ⁿ matrix.
pub fn xi_matrix(p: &ProbMatrix, n: usize) -> DMatrix<f64> {
    kron_all(n, &xi_site(p))
}

/// The left-multiplication matrix of π⁽⁰⁾(g): row-bit permutation times a sign diagonal.
pub fn left_matrix(g: &WreathElement, n: usize) -> Result<DMatrix<f64>> {
    let (sinv, bits) = z2_bits(g, n)?;
    let side = 1usize << n;
    let bit = |r: usize, i: usize| (r >> (n - i)) & 1;
    let mut m = DMatrix::zeros(side, side);
    for r in 0..side {
        let parity = (1..=n).fold(0usize, |acc, i| acc ^ (bits[i - 1] as usize & bit(r, i)));
        let t = (1..=n).fold(0usize, |acc, j| (acc << 1) | bit(r, sinv.apply(j)));
        m[(t, r)] = if parity == 1 { -1.0 } else { 1.0 };
    }
    Ok(m)
}

fn left_generators(p: &ProbMatrix, n: usize) -> Vec<DMatrix<f64>> {
    (1..=n).flat_map(|i| [site_embed(n, i, &l_form(p)), site_embed(n, i, &sign2())]).collect()
}

fn right_generators(p: &ProbMatrix, n: usize) -> Vec<DMatrix<f64>> {
    (1..=n).flat_map(|i| [site_embed(n, i, &r_form(p)), site_embed(n, i, &sign2())]).collect()
}

/// Dimension of the span of the orbit of `start` under the generated algebra.
fn orbit_dim(start: &DMatrix<f64>, gens: &[DMatrix<f64>], left: bool) -> usize {
    let mut basis: Vec<DMatrix<f64>> = Vec::new();
    let mut queue = vec![start.clone()];
    while let Some(mut w) = queue.pop() {
        for b in &basis {
            let c = b.dot(&w);
            w -= b * c;
        }
        let norm = w.norm();
        if norm <= SPAN_TOL {
            continue;
        }
        let w = w / norm;
        for g in gens {
            queue.push(if left { g * &w } else { &w * g });
        }
        basis.push(w);
    }
    basis.len()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CyclicReport {
    pub n: usize,
    pub full_dim: usize,
    /// Dimension of the left algebra applied to ξ.
    pub left_dim: usize,
    /// Dimension of the right algebra applied to ξ; full means ξ separates the left algebra.
    pub right_dim: usize,
    pub det: f64,
    pub cyclic: bool,
    pub separating: bool,
}

impl CyclicReport {
    /// Cyclic and separating exactly when det ≠ 0.
    pub fn verdict_matches_det(&self) -> bool {
        (self.cyclic && self.separating) == (self.det.abs() > DET_TOL)
    }
}

pub fn cyclic_separating_check(p: &ProbMatrix, n: usize) -> Result<CyclicReport> {
    if n == 0 || n > 3 {
        return Err(Error::Precondition("cyclic check needs 1 ≤ n ≤ 3".into()));
    }
    let xi = xi_matrix(p, n);
    let full_dim = dim(n);
    let left_dim = orbit_dim(&xi, &left_generators(p, n), true);
    let right_dim = orbit_dim(&xi, &right_generators(p, n), false);
    Ok(CyclicReport {
        n,
        full_dim,
        left_dim,
        right_dim,
        det: p.det(),
        cyclic: left_dim == full_dim,
        separating: right_dim == full_dim,
    })
}

/// Dimension of the commutant of the left and right generators acting together.
/// A value of 1 means they generate every operator on the 4ⁿ-dimensional space.
pub fn commutant_dim(p: &ProbMatrix, n: usize) -> Result<usize> {
    if n == 0 || n > 2 {
        return Err(Error::Precondition("commutant check needs 1 ≤ n ≤ 2".into()));
    }
    let side = 1usize << n;
    let id = DMatrix::<f64>::identity(side, side);
    // Row-major vec: vec(AX) = (A⊗I)vec(X), vec(XB) = (I⊗Bᵀ)vec(X).
    let mut ops: Vec<DMatrix<f64>> = left_generators(p, n).iter().map(|a| a.kronecker(&id)).collect();
    ops.extend(right_generators(p, n).iter().map(|b| id.kronecker(&b.transpose())));
    let big = dim(n);
    let id_big = DMatrix::<f64>::identity(big, big);
    let mut gram = DMatrix::<f64>::zeros(big * big, big * big);
    for g in &ops {
        let k = id_big.kronecker(&g.transpose()) - g.kronecker(&id_big);
        gram += k.transpose() * &k;
    }
    let eig = gram.symmetric_eigenvalues();
    let top = eig.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1.0);
    Ok(eig.iter().filter(|&&x| x.abs() <= 1e-9 * top).count())
}

// ---------------------------------------------------------------------------
// Modular operator

#[derive(Clone, Debug)]
pub struct ModularReport {
    pub n: usize,
    /// Δ on the row-major flattening of the matrix picture.
    pub delta: DMatrix<f64>,
    /// max over left matrix units a of |Δ(aξ) − M a M⁻¹ ξ|, M = ⊗ L-form.
    pub formula_residual: f64,
    /// |Δξ − ξ|.
    pub fixed_residual: f64,
    /// |Δ·(SF) − I| / (|Δ|·|SF|), with SF = Δ⁻¹. The spread of Δ grows like
    /// cond(L)^{2n}, so the unscaled residual is not meaningful at a fixed cutoff.
    pub inverse_residual: f64,
    /// |F − Sᵀ|, the adjoint relation F = S*.
    pub adjoint_residual: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

impl ModularReport {
    pub fn is_identity(&self, tol: f64) -> bool {
        (&self.delta - DMatrix::identity(self.delta.nrows(), self.delta.ncols())).abs().max() <= tol
    }
}

fn unit_matrix(side: usize, idx: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(side, side);
    m[(idx / side, idx % side)] = 1.0;
    m
}

fn flatten(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.len(), m.transpose().iter().copied())
}

fn operator_of(side: usize, f: impl Fn(&DMatrix<f64>) -> DMatrix<f64>) -> DMatrix<f64> {
    let big = side * side;
    let mut out = DMatrix::zeros(big, big);
    for b in 0..big {
        out.set_column(b, &flatten(&f(&unit_matrix(side, b))));
    }
    out
}

/// S(aξ) = a*ξ and F(ξa') = ξa'* on the matrix picture, Δ = FS.
///
/// All data are real, so S and F are real-linear and their matrices are built
/// column by column on matrix units.
pub fn modular_operator(p: &ProbMatrix, n: usize) -> Result<ModularReport> {
    if n == 0 || n > 3 {
        return Err(Error::Precondition("modular operator needs 1 ≤ n ≤ 3".into()));
    }
    if !p.nonzero_det() {
        return Err(Error::Precondition("vector not separating: det p = 0".into()));
    }
    let side = 1usize << n;
    let xi = xi_matrix(p, n);
    // Inverting the 2×2 site factor keeps far more digits than inverting ξ itself.
    let j_inv = xi_site(p).try_inverse().ok_or_else(|| Error::Precondition("vector not separating".into()))?;
    let xi_inv = kron_all(n, &j_inv);
    let xi_inv_t = xi_inv.transpose();
    let s_map = |x: &DMatrix<f64>| &xi_inv_t * x.transpose() * &xi;
    let f_map = |y: &DMatrix<f64>| &xi * y.transpose() * &xi_inv_t;
    let s = operator_of(side, s_map);
    let f = operator_of(side, f_map);
    let delta = &f * &s;
    let delta_inv = &s * &f;

    let m = kron_all(n, &l_form(p));
    let m_inv = kron_all(n, &l_form(p).try_inverse().ok_or_else(|| Error::Precondition("L-form is singular".into()))?);
    let mut formula_residual = 0.0f64;
    for b in 0..side * side {
        let a = unit_matrix(side, b);
        let lhs = &delta * flatten(&(&a * &xi));
        let rhs = flatten(&(&m * &a * &m_inv * &xi));
        formula_residual = formula_residual.max((lhs - rhs).abs().max());
    }
    let fixed_residual = (&delta * flatten(&xi) - flatten(&xi)).abs().max();
    let big = side * side;
    let inverse_residual = (&delta * &delta_inv - DMatrix::identity(big, big)).abs().max()
        / (delta.abs().max() * delta_inv.abs().max());
    let adjoint_residual = (&f - s.transpose()).abs().max();
    let sym = (&delta + delta.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    Ok(ModularReport {
        n,
        formula_residual,
        fixed_residual,
        inverse_residual,
        adjoint_residual,
        min_eigenvalue: eig.min(),
        max_eigenvalue: eig.max(),
        delta,
    })
}

// ---------------------------------------------------------------------------
// The state φ(g) = ⟨π⁽⁰⁾(g)𝕀, 𝕀⟩

pub fn phi(p: &ProbMatrix, g: &WreathElement, n: usize) -> Result<f64> {
    let e = WreathElement::identity(g.group().clone());
    let one = unit_vector(p, n);
    Ok(rep_pi_mu(p, g, &e, n)?.apply(&one).dot(&one))
}

#[derive(Clone, Debug, PartialEq)]
pub struct KmsReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// |φ(sg) − φ(gs)| for a permutation s.
pub fn kms_trace_check(p: &ProbMatrix, n: usize, s: &Permutation, g: &WreathElement) -> Result<KmsReport> {
    let sw = WreathElement::from_perm(g.group().clone(), s.clone());
    let lhs = phi(p, &sw.multiply(g)?, n)?;
    let rhs = phi(p, &g.multiply(&sw)?, n)?;
    Ok(KmsReport { lhs, rhs, residual: (lhs - rhs).abs() })
}

/// First pair (g, h) in a fixed enumeration of elements supported in 1..=n with
/// |φ(gh) − φ(hg)| > `min_gap`, i.e. a witness that φ is not central.
pub fn centrality_witness(
    p: &ProbMatrix,
    n: usize,
    min_gap: f64,
) -> Result<Option<(WreathElement, WreathElement, f64)>> {
    let group = std::sync::Arc::new(crate::finite_group::build_group(&crate::finite_group::GroupDescriptor::Cyclic(2))?);
    let elements = crate::wreath::enumerate_elements(&group, n);
    for g in &elements {
        for h in &elements {
            let gap = (phi(p, &g.multiply(h)?, n)? - phi(p, &h.multiply(g)?, n)?).abs();
            if gap > min_gap {
                return Ok(Some((g.clone(), h.clone(), gap)));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_group::{build_group, GroupDescriptor};
    use crate::sampling;
    use crate::wreath::parse_element;

    fn z2() -> std::sync::Arc<crate::finite_group::Group> {
        std::sync::Arc::new(build_group(&GroupDescriptor::Cyclic(2)).unwrap())
    }

    fn generic() -> ProbMatrix {
        ProbMatrix::new([[0.4, 0.1], [0.2, 0.3]]).unwrap()
    }

    #[test]
    fn prob_matrix_validation() {
        assert!(ProbMatrix::new([[0.5, 0.5], [0.1, 0.0]]).is_err());
        assert!(ProbMatrix::new([[-0.1, 0.6], [0.25, 0.25]]).is_err());
        let p = ProbMatrix::from_json(r#"{"p": [[0.4, 0.1], [0.2, 0.3]]}"#).unwrap();
        assert_eq!(p, generic());
        assert!(p.strictly_positive() && p.nonzero_det());
        assert!(ProbMatrix::from_json(r#"{"q": 1}"#).is_err());
        let uniform = ProbMatrix::from_flat([0.25; 4]).unwrap();
        assert!(!uniform.nonzero_det());
    }

    #[test]
    fn site_operator_shapes() {
        let uniform = ProbMatrix::from_flat([0.25; 4]).unwrap();
        let ops = site_operators(&uniform, true).unwrap();
        for (r, c) in [(0, 0), (0, 2), (1, 1), (1, 3), (2, 0), (2, 2), (3, 1), (3, 3)] {
            assert!((ops.o0[(r, c)] - 0.5).abs() < 1e-15);
        }
        assert_eq!(ops.o0[(0, 1)], 0.0);
        assert_eq!(SiteOperators::gamma0(1), Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, -1.0, -1.0)));
        let mut rng = sampling::rng(3);
        for _ in 0..20 {
            let p = ProbMatrix::random(&mut rng, false);
            let ops = site_operators(&p, true).unwrap();
            assert_eq!(ops.o0, ops.o0.transpose());
            assert_eq!(ops.o1, ops.o1.transpose());
            assert!((ops.o0 * ops.o1 - ops.o1 * ops.o0).abs().max() < 1e-14);
        }
        let degenerate = ProbMatrix::new([[1.0, 0.0], [0.0, 0.0]]).unwrap();
        assert!(site_operators(&degenerate, true).is_err());
        assert!(site_operators(&degenerate, false).is_ok());
    }

    #[test]
    fn lr_identities_hold() {
        let mut rng = sampling::rng(11);
        for i in 0..20 {
            let p = ProbMatrix::random(&mut rng, i % 5 == 0);
            assert!(iso_and_lr(&p).unwrap().max_residual() <= 1e-12);
        }
        let uniform = iso_and_lr(&ProbMatrix::from_flat([0.25; 4]).unwrap()).unwrap();
        assert!((uniform.l_form - Matrix2::from_element(0.5)).abs().max() < 1e-15);
        let j = iso_and_lr(&generic()).unwrap().j;
        assert!((j.determinant() - 0.2050).abs() < 1e-4);
        assert!((j.determinant() - (0.12f64.sqrt() - 0.02f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn pi_mu_is_a_unitary_homomorphism() {
        let g = z2();
        let p = generic();
        let n = 3;
        let mut rng = sampling::rng(5);
        let one = unit_vector(&p, n);
        assert!((one.norm() - 1.0).abs() < 1e-14);
        let id = WreathElement::identity(g.clone());
        let ident = rep_pi_mu(&p, &id, &id, n).unwrap().to_dense();
        assert_eq!(ident, DMatrix::identity(64, 64));
        for _ in 0..20 {
            let (a0, a1, b0, b1) = (
                sampling::random_element(&mut rng, &g, n),
                sampling::random_element(&mut rng, &g, n),
                sampling::random_element(&mut rng, &g, n),
                sampling::random_element(&mut rng, &g, n),
            );
            let pa = rep_pi_mu(&p, &a0, &a1, n).unwrap().to_dense();
            let pb = rep_pi_mu(&p, &b0, &b1, n).unwrap().to_dense();
            let pab = rep_pi_mu(&p, &a0.multiply(&b0).unwrap(), &a1.multiply(&b1).unwrap(), n).unwrap().to_dense();
            assert!((&pa * &pb - &pab).abs().max() < 1e-12);
            assert!((&pa * pa.transpose() - DMatrix::identity(64, 64)).abs().max() < 1e-12);
            let left = rep_pi_mu(&p, &a0, &id, n).unwrap().to_dense();
            let right = rep_pi_mu(&p, &id, &b1, n).unwrap().to_dense();
            assert!((&left * &right - &right * &left).abs().max() < 1e-12);
        }
        let big = parse_element("(1 2)", &g).unwrap();
        assert!(rep_pi_mu(&p, &big, &id, 1).is_err());
    }

    #[test]
    fn gamma_action_is_diagonal_sign() {
        let g = z2();
        let p = generic();
        let n = 2;
        let id = WreathElement::identity(g.clone());
        let x = parse_element("[2:g]", &g).unwrap();
        let dense = rep_pi_mu(&p, &x, &id, n).unwrap().to_dense();
        let expected = DMatrix::<f64>::identity(4, 4).kronecker(&DMatrix::from_fn(4, 4, |r, c| SiteOperators::gamma0(1)[(r, c)]));
        assert_eq!(dense, expected);
        let dense1 = rep_pi_mu(&p, &id, &x, n).unwrap().to_dense();
        let expected1 = DMatrix::<f64>::identity(4, 4).kronecker(&DMatrix::from_fn(4, 4, |r, c| SiteOperators::gamma1(1)[(r, c)]));
        assert_eq!(dense1, expected1);
    }

    #[test]
    fn left_picture_matches_function_space() {
        let g = z2();
        let p = generic();
        let n = 3;
        let mut rng = sampling::rng(9);
        for _ in 0..10 {
            let a = sampling::random_element(&mut rng, &g, n);
            let b = sampling::random_element(&mut rng, &g, n);
            let v = DVector::from_fn(64, |_, _| rng.gen_range(-1.0..1.0));
            let x = to_matrix(&v, n);
            assert_eq!(from_matrix(&x, n), v);
            let lhs = rep_pi_mu(&p, &a, &b, n).unwrap().apply(&v);
            let rhs = from_matrix(&(left_matrix(&a, n).unwrap() * x * left_matrix(&b, n).unwrap().transpose()), n);
            assert!((lhs - rhs).abs().max() < 1e-14);
        }
        assert!((to_matrix(&unit_vector(&p, n), n) - xi_matrix(&p, n)).abs().max() < 1e-15);
    }

    #[test]
    fn cesaro_average_approaches_site_operator() {
        let p = generic();
        let gaps: Vec<f64> = [4, 6, 8]
            .iter()
            .map(|&n| cesaro_gap(&p, 1, n, 3, &mut sampling::rng(21)).unwrap())
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
        assert!(gaps[2] < 0.5, "{gaps:?}");
    }

    #[test]
    fn cyclic_verdict_follows_det() {
        let r = cyclic_separating_check(&generic(), 2).unwrap();
        assert_eq!((r.left_dim, r.right_dim), (16, 16));
        assert!(r.cyclic && r.separating && r.verdict_matches_det());
        let u = cyclic_separating_check(&ProbMatrix::from_flat([0.25; 4]).unwrap(), 1).unwrap();
        assert!(u.left_dim < 4 && !u.cyclic && u.verdict_matches_det());
        let mut rng = sampling::rng(2);
        for i in 0..20 {
            let p = ProbMatrix::random(&mut rng, i % 2 == 0);
            for n in 1..=2 {
                assert!(cyclic_separating_check(&p, n).unwrap().verdict_matches_det());
            }
        }
    }

    #[test]
    fn generators_act_irreducibly() {
        assert_eq!(commutant_dim(&generic(), 1).unwrap(), 1);
        assert_eq!(commutant_dim(&generic(), 2).unwrap(), 1);
        let diagonal = ProbMatrix::new([[0.5, 0.0], [0.0, 0.5]]).unwrap();
        assert!(commutant_dim(&diagonal, 1).unwrap() > 1);
    }

    #[test]
    fn left_and_right_algebras_commute() {
        let p = generic();
        for n in 1..=3 {
            for a in left_generators(&p, n) {
                for b in right_generators(&p, n) {
                    let x = DMatrix::from_fn(1 << n, 1 << n, |r, c| (r * 7 + c * 3) as f64);
                    assert!(((&a * &x) * &b - &a * (&x * &b)).abs().max() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn modular_formula_holds() {
        for n in 1..=3 {
            let r = modular_operator(&generic(), n).unwrap();
            assert!(r.formula_residual <= 1e-10, "n={n} {}", r.formula_residual);
            assert!(r.fixed_residual <= 1e-10 && r.inverse_residual <= 1e-10 && r.adjoint_residual <= 1e-10, "n={n} {} {} {}", r.fixed_residual, r.inverse_residual, r.adjoint_residual);
            assert!(r.min_eigenvalue > 0.0);
        }
        assert!(modular_operator(&ProbMatrix::from_flat([0.25; 4]).unwrap(), 1).is_err());
    }

    #[test]
    fn modular_single_site_diag_example() {
        let p = generic();
        let r = modular_operator(&p, 1).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let xi = xi_matrix(&p, 1);
        let m = kron_all(1, &l_form(&p));
        let lhs = &r.delta * flatten(&(&a * &xi));
        let rhs = flatten(&(&m * &a * m.clone().try_inverse().unwrap() * &xi));
        assert!((lhs - rhs).abs().max() <= 1e-12);
    }

    #[test]
    fn modular_operator_trivial_only_for_tracial_state() {
        let tracial = ProbMatrix::new([[0.5, 0.0], [0.0, 0.5]]).unwrap();
        assert!(modular_operator(&tracial, 2).unwrap().is_identity(1e-12));
        let symmetric = ProbMatrix::new([[0.3, 0.2], [0.2, 0.3]]).unwrap();
        let r = modular_operator(&symmetric, 1).unwrap();
        assert!(!r.is_identity(1e-3));
        assert!(r.max_eigenvalue / r.min_eigenvalue > 10.0);
    }

    #[test]
    fn state_is_central_for_permutations_only() {
        let g = z2();
        let p = generic();
        let s = Permutation::transposition(1, 2);
        let x = parse_element("(2 3)[1:g]", &g).unwrap();
        assert!(kms_trace_check(&p, 3, &s, &x).unwrap().residual <= 1e-12);
        assert_eq!(kms_trace_check(&p, 3, &Permutation::identity(), &x).unwrap().residual, 0.0);
        let mut rng = sampling::rng(4);
        for _ in 0..30 {
            let s = sampling::random_perm(&mut rng, 3, 0);
            let x = sampling::random_element(&mut rng, &g, 3);
            assert!(kms_trace_check(&p, 3, &s, &x).unwrap().residual <= 1e-12);
        }
        let (a, b, gap) = centrality_witness(&p, 2, 1e-6).unwrap().expect("witness");
        assert!(gap > 1e-6);
        let lhs = phi(&p, &a.multiply(&b).unwrap(), 2).unwrap();
        let rhs = phi(&p, &b.multiply(&a).unwrap(), 2).unwrap();
        assert!((lhs - rhs).abs() > 1e-6);
        let g1 = parse_element("[1:g]", &g).unwrap();
        let h = parse_element("(1 2)[1:g]", &g).unwrap();
        let gap = phi(&p, &h.multiply(&g1).unwrap(), 2).unwrap() - phi(&p, &g1.multiply(&h).unwrap(), 2).unwrap();
        let c = l_form(&p)[(0, 1)];
        assert!((gap - 4.0 * c * c).abs() < 1e-12);
    }
}
