//! Finite truncation of the tensor-product realization of a Thoma character.
//!
//! Each site carries a left leg and a right leg. A left leg is either a basis
//! vector of some block H^{α_k} or H^{β_k}, or a basis vector of a residual
//! copy H^{0c} tagged with its home site c. A right leg is a block basis vector
//! or empty. The reference vector at site m is
//!
//! η^{(m)} = Σ_k √α_k Σ_j e_j⊗e_j + Σ_k √β_k Σ_j e_j⊗e_j + √δ ξ^{(0m)}⊗∅.
//!
//! π(γ) acts on left legs (ϱ^{block}(γ_m), or the GNS action of tr₀ on residual
//! legs). π(s) moves left legs from m to s(m), leaves right legs in place and
//! multiplies by the sorting sign of the β legs. Sites nobody has touched stay
//! as an unexpanded η placeholder; a placeholder crossed an odd number of times
//! by moving β legs becomes P·η, with P the parity operator that negates the β
//! components.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::BuildHasherDefault;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::finite_group::{CMat, Group, C64};
use crate::thoma::{ThomaParams, Tr0};
use crate::wreath::{GammaTuple, Permutation, WreathElement};

/// Largest number of expanded terms a single computation may hold.
pub const TERM_BUDGET: usize = 10_000_000;

type Terms = HashMap<Vec<Site>, C64, BuildHasherDefault<DefaultHasher>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Site {
    /// η^{(m)}, or P·η^{(m)} when twisted
    Eta { twisted: bool },
    /// encoded basis symbol
    Sym(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeftLeg {
    Pair { block: usize, index: usize },
    Residual { copy: usize, basis: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RightLeg {
    Pair { block: usize, index: usize },
    Empty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SiteSymbol {
    pub left: LeftLeg,
    pub right: RightLeg,
}

impl SiteSymbol {
    pub fn pair(left_block: usize, left_index: usize, right_block: usize, right_index: usize) -> Self {
        Self {
            left: LeftLeg::Pair { block: left_block, index: left_index },
            right: RightLeg::Pair { block: right_block, index: right_index },
        }
    }

    pub fn residual(copy: usize, basis: usize) -> Self {
        Self { left: LeftLeg::Residual { copy, basis }, right: RightLeg::Empty }
    }
}

#[derive(Clone, Debug)]
struct Block {
    rep: usize,
    dim: usize,
    offset: usize,
    amp: f64,
    odd: bool,
}

/// A superposition of product basis configurations on sites 1..=sites, with η
/// on every later site.
#[derive(Clone, Debug)]
pub struct ProductState {
    sites: usize,
    terms: Terms,
}

impl ProductState {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    fn add(&mut self, cfg: Vec<Site>, amp: C64) {
        if amp == C64::new(0.0, 0.0) {
            return;
        }
        *self.terms.entry(cfg).or_insert(C64::new(0.0, 0.0)) += amp;
    }

    fn empty(sites: usize) -> Self {
        Self { sites, terms: Terms::default() }
    }

    /// a·self + b·other
    pub fn combine(&self, a: C64, other: &Self, b: C64) -> Self {
        let mut out = Self::empty(self.sites.max(other.sites));
        for (c, &v) in &self.terms {
            out.add(c.clone(), v * a);
        }
        for (c, &v) in &other.terms {
            out.add(c.clone(), v * b);
        }
        out
    }

    fn check_budget(&self) -> Result<()> {
        if self.terms.len() > TERM_BUDGET {
            return Err(Error::Budget { needed: self.terms.len() as u128, limit: TERM_BUDGET as u128 });
        }
        Ok(())
    }
}

/// The realization data for one parameter set at a fixed truncation.
#[derive(Clone, Debug)]
pub struct Realization {
    group: Arc<Group>,
    blocks: Vec<Block>,
    left_block: Vec<usize>,
    p: usize,
    res_dim: usize,
    res_mats: Vec<CMat>,
    xi: Vec<C64>,
    sqrt_delta: f64,
    sites: usize,
    /// ⟨Pη, η⟩
    tau: f64,
}

impl Realization {
    pub fn new(params: &ThomaParams, sites: usize) -> Result<Self> {
        if sites == 0 {
            return Err(Error::Precondition("at least one site".into()));
        }
        let group = params.group().clone();
        let mut blocks = Vec::new();
        let mut offset = 0;
        for (odd, side) in [(false, &params.alpha), (true, &params.beta)] {
            for &(w, rep) in side.iter() {
                let dim = group.irreps[rep].dim;
                blocks.push(Block { rep, dim, offset, amp: w.sqrt(), odd });
                offset += dim;
            }
        }
        let p = offset;
        let left_block = blocks.iter().enumerate().flat_map(|(b, bl)| std::iter::repeat(b).take(bl.dim)).collect();
        let (res_dim, res_mats, xi) = residual_space(&group, &params.tr0);
        let tau = blocks.iter().map(|b| (if b.odd { -1.0 } else { 1.0 }) * b.amp * b.amp * b.dim as f64).sum::<f64>()
            + params.delta;
        let code_space = (p + sites * res_dim) * (p + 1);
        if code_space > u32::MAX as usize {
            return Err(Error::Precondition("symbol space too large".into()));
        }
        Ok(Self { group, blocks, left_block, p, res_dim, res_mats, xi, sqrt_delta: params.delta.sqrt(), sites, tau })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    fn encode_raw(&self, left: usize, right: usize) -> u32 {
        (left * (self.p + 1) + right) as u32
    }

    fn decode_raw(&self, code: u32) -> (usize, usize) {
        let c = code as usize;
        (c / (self.p + 1), c % (self.p + 1))
    }

    pub fn encode(&self, s: &SiteSymbol) -> Result<u32> {
        let left = match s.left {
            LeftLeg::Pair { block, index } => {
                let b = self.blocks.get(block).filter(|b| index < b.dim).ok_or_else(|| Error::Precondition("bad left leg".into()))?;
                b.offset + index
            }
            LeftLeg::Residual { copy, basis } => {
                if copy == 0 || copy > self.sites || basis >= self.res_dim {
                    return Err(Error::Precondition("bad residual leg".into()));
                }
                self.p + (copy - 1) * self.res_dim + basis
            }
        };
        let right = match s.right {
            RightLeg::Pair { block, index } => {
                let b = self.blocks.get(block).filter(|b| index < b.dim).ok_or_else(|| Error::Precondition("bad right leg".into()))?;
                b.offset + index
            }
            RightLeg::Empty => self.p,
        };
        Ok(self.encode_raw(left, right))
    }

    pub fn decode(&self, code: u32) -> SiteSymbol {
        let (l, r) = self.decode_raw(code);
        let left = if l < self.p {
            let b = self.left_block[l];
            LeftLeg::Pair { block: b, index: l - self.blocks[b].offset }
        } else {
            let k = l - self.p;
            LeftLeg::Residual { copy: k / self.res_dim + 1, basis: k % self.res_dim }
        };
        let right = if r < self.p {
            let b = self.left_block[r];
            RightLeg::Pair { block: b, index: r - self.blocks[b].offset }
        } else {
            RightLeg::Empty
        };
        SiteSymbol { left, right }
    }

    fn left_odd(&self, left: usize) -> bool {
        left < self.p && self.blocks[self.left_block[left]].odd
    }

    /// Components of η^{(site)} (or P·η^{(site)}), as (code, coefficient).
    fn eta_components(&self, site: usize, twisted: bool) -> Vec<(u32, C64)> {
        let mut out = Vec::new();
        for b in &self.blocks {
            let a = if twisted && b.odd { -b.amp } else { b.amp };
            for j in 0..b.dim {
                out.push((self.encode_raw(b.offset + j, b.offset + j), C64::new(a, 0.0)));
            }
        }
        if self.sqrt_delta > 0.0 {
            for (k, &x) in self.xi.iter().enumerate() {
                if x != C64::new(0.0, 0.0) {
                    out.push((self.encode_raw(self.p + (site - 1) * self.res_dim + k, self.p), x * self.sqrt_delta));
                }
            }
        }
        out
    }

    /// The site vector η^{(site)} in symbol form.
    pub fn eta_site(&self, site: usize) -> Vec<(SiteSymbol, C64)> {
        self.eta_components(site, false).into_iter().map(|(c, a)| (self.decode(c), a)).collect()
    }

    /// Coefficient of a basis symbol in η^{(site)}.
    fn eta_coef(&self, site: usize, code: u32) -> C64 {
        let (l, r) = self.decode_raw(code);
        if l < self.p {
            if l == r {
                return C64::new(self.blocks[self.left_block[l]].amp, 0.0);
            }
            return C64::new(0.0, 0.0);
        }
        let k = l - self.p;
        if r == self.p && k / self.res_dim + 1 == site {
            return self.xi[k % self.res_dim] * self.sqrt_delta;
        }
        C64::new(0.0, 0.0)
    }

    fn twist_sign(&self, code: u32, twisted: bool) -> f64 {
        if twisted && self.left_odd(self.decode_raw(code).0) { -1.0 } else { 1.0 }
    }

    /// ⟨a, b⟩ at one site.
    fn site_inner(&self, site: usize, a: Site, b: Site) -> C64 {
        match (a, b) {
            (Site::Eta { twisted: x }, Site::Eta { twisted: y }) => C64::new(if x == y { 1.0 } else { self.tau }, 0.0),
            (Site::Sym(c), Site::Eta { twisted }) => (self.eta_coef(site, c) * self.twist_sign(c, twisted)).conj(),
            (Site::Eta { twisted }, Site::Sym(c)) => self.eta_coef(site, c) * self.twist_sign(c, twisted),
            (Site::Sym(c), Site::Sym(d)) => C64::new(if c == d { 1.0 } else { 0.0 }, 0.0),
        }
    }

    /// η̌ truncated to the realization's sites.
    pub fn build_eta(&self) -> ProductState {
        let mut s = ProductState::empty(self.sites);
        s.add(vec![Site::Eta { twisted: false }; self.sites], C64::new(1.0, 0.0));
        s
    }

    /// η̌ with the listed sites replaced by basis symbols.
    pub fn basis_state(&self, symbols: &[(usize, SiteSymbol)]) -> Result<ProductState> {
        let mut cfg = vec![Site::Eta { twisted: false }; self.sites];
        for (site, sym) in symbols {
            if *site == 0 || *site > self.sites {
                return Err(Error::Precondition(format!("site {site} outside 1..={}", self.sites)));
            }
            cfg[site - 1] = Site::Sym(self.encode(sym)?);
        }
        let mut s = ProductState::empty(self.sites);
        s.add(cfg, C64::new(1.0, 0.0));
        Ok(s)
    }

    fn expand(&self, cfg: &[Site], amp: C64, sites: &[usize]) -> Result<Vec<(Vec<Site>, C64)>> {
        let per_site = self.eta_components(1, false).len().max(1) as u128;
        let needed = sites
            .iter()
            .filter(|&&i| matches!(cfg[i - 1], Site::Eta { .. }))
            .try_fold(1u128, |acc, _| acc.checked_mul(per_site))
            .unwrap_or(u128::MAX);
        if needed > TERM_BUDGET as u128 {
            return Err(Error::Budget { needed, limit: TERM_BUDGET as u128 });
        }
        let mut out = vec![(cfg.to_vec(), amp)];
        for &i in sites {
            if let Site::Eta { twisted } = cfg[i - 1] {
                let comps = self.eta_components(i, twisted);
                out = out
                    .into_iter()
                    .flat_map(|(c, a)| {
                        comps.iter().map(move |&(code, coef)| {
                            let mut c2 = c.clone();
                            c2[i - 1] = Site::Sym(code);
                            (c2, a * coef)
                        })
                    })
                    .collect();
            }
        }
        Ok(out)
    }

    fn check_sites(&self, max: usize) -> Result<()> {
        if max > self.sites {
            return Err(Error::Precondition(format!("support {max} exceeds truncation {}", self.sites)));
        }
        Ok(())
    }

    pub fn apply_gamma(&self, state: &ProductState, gamma: &GammaTuple) -> Result<ProductState> {
        self.check_sites(gamma.max_support())?;
        let positions: Vec<usize> = gamma.entries().keys().copied().collect();
        let mut out = ProductState::empty(self.sites);
        for (cfg, &amp) in &state.terms {
            for (c, a) in self.expand(cfg, amp, &positions)? {
                let mut parts = vec![(c, a)];
                for (&i, &x) in gamma.entries() {
                    let mut next = Vec::with_capacity(parts.len() * 2);
                    for (c, a) in parts {
                        let Site::Sym(code) = c[i - 1] else { unreachable!("expanded above") };
                        let (l, r) = self.decode_raw(code);
                        if l < self.p {
                            let b = &self.blocks[self.left_block[l]];
                            let m = &self.group.irreps[b.rep].images[x];
                            let j = l - b.offset;
                            for i2 in 0..b.dim {
                                let v = m[(i2, j)];
                                if v != C64::new(0.0, 0.0) {
                                    let mut c2 = c.clone();
                                    c2[i - 1] = Site::Sym(self.encode_raw(b.offset + i2, r));
                                    next.push((c2, a * v));
                                }
                            }
                        } else {
                            let k = l - self.p;
                            let (copy0, b0) = (k / self.res_dim, k % self.res_dim);
                            let m = &self.res_mats[x];
                            for b2 in 0..self.res_dim {
                                let v = m[(b2, b0)];
                                if v != C64::new(0.0, 0.0) {
                                    let mut c2 = c.clone();
                                    c2[i - 1] = Site::Sym(self.encode_raw(self.p + copy0 * self.res_dim + b2, r));
                                    next.push((c2, a * v));
                                }
                            }
                        }
                    }
                    parts = next;
                }
                for (c, a) in parts {
                    out.add(c, a);
                }
            }
            out.check_budget()?;
        }
        Ok(out)
    }

    pub fn apply_perm(&self, state: &ProductState, s: &Permutation) -> Result<ProductState> {
        if s.is_identity() {
            return Ok(state.clone());
        }
        self.check_sites(s.max_support())?;
        let moved: Vec<usize> = s.support().collect();
        let moved_set: BTreeSet<usize> = moved.iter().copied().collect();
        let lo = moved[0];
        let hi = *moved.last().unwrap();
        let mut out = ProductState::empty(self.sites);
        for (cfg, &amp) in &state.terms {
            for (mut c, mut a) in self.expand(cfg, amp, &moved)? {
                let legs: Vec<(usize, usize, usize)> = moved
                    .iter()
                    .map(|&i| {
                        let Site::Sym(code) = c[i - 1] else { unreachable!("expanded above") };
                        let (l, r) = self.decode_raw(code);
                        (i, l, r)
                    })
                    .collect();
                let odd: Vec<(usize, usize)> =
                    legs.iter().filter(|&&(_, l, _)| self.left_odd(l)).map(|&(i, _, _)| (i, s.apply(i))).collect();
                let mut flips = 0usize;
                for x in 0..odd.len() {
                    for y in x + 1..odd.len() {
                        if odd[y].1 < odd[x].1 {
                            flips += 1;
                        }
                    }
                }
                if !odd.is_empty() {
                    for f in lo..=hi {
                        if moved_set.contains(&f) {
                            continue;
                        }
                        let cross = odd.iter().filter(|&&(from, to)| from.min(to) < f && f < from.max(to)).count();
                        if cross % 2 == 1 {
                            match c[f - 1] {
                                Site::Eta { twisted } => c[f - 1] = Site::Eta { twisted: !twisted },
                                Site::Sym(code) => {
                                    if self.left_odd(self.decode_raw(code).0) {
                                        flips += 1;
                                    }
                                }
                            }
                        }
                    }
                }
                if flips % 2 == 1 {
                    a = -a;
                }
                let rights: BTreeMap<usize, usize> = legs.iter().map(|&(i, _, r)| (i, r)).collect();
                for &(i, l, _) in &legs {
                    let to = s.apply(i);
                    c[to - 1] = Site::Sym(self.encode_raw(l, rights[&to]));
                }
                out.add(c, a);
            }
            out.check_budget()?;
        }
        Ok(out)
    }

    /// π(g) = π(s)·π(γ)
    pub fn apply_element(&self, state: &ProductState, g: &WreathElement) -> Result<ProductState> {
        if !crate::wreath::same_group(&self.group, g.group()) {
            return Err(Error::GroupMismatch);
        }
        self.check_sites(g.max_support())?;
        let v = self.apply_gamma(state, &g.tuple)?;
        self.apply_perm(&v, &g.perm)
    }

    /// ⟨state, η̌⟩
    pub fn inner_eta(&self, state: &ProductState) -> C64 {
        let eta = Site::Eta { twisted: false };
        state
            .terms
            .iter()
            .map(|(cfg, &a)| cfg.iter().enumerate().fold(a, |acc, (i, &s)| acc * self.site_inner(i + 1, s, eta)))
            .sum()
    }

    /// ⟨a, b⟩ by pairwise contraction; intended for small states.
    pub fn inner(&self, a: &ProductState, b: &ProductState) -> C64 {
        let mut total = C64::new(0.0, 0.0);
        for (ca, &xa) in &a.terms {
            for (cb, &xb) in &b.terms {
                let mut v = xa * xb.conj();
                for i in 0..self.sites {
                    v *= self.site_inner(i + 1, ca[i], cb[i]);
                    if v == C64::new(0.0, 0.0) {
                        break;
                    }
                }
                total += v;
            }
        }
        total
    }

    pub fn norm(&self, a: &ProductState) -> f64 {
        self.inner(a, a).re.max(0.0).sqrt()
    }

    /// ‖a − b‖ computed in the orthonormal symbol basis.
    ///
    /// `norm` of a difference loses half the digits to cancellation between
    /// non-orthogonal η terms; expanding every η site first avoids that.
    pub fn distance(&self, a: &ProductState, b: &ProductState) -> Result<f64> {
        let all: Vec<usize> = (1..=self.sites).collect();
        let mut diff = ProductState::empty(self.sites);
        for (state, sign) in [(a, 1.0), (b, -1.0)] {
            for (cfg, &amp) in &state.terms {
                for (c, x) in self.expand(cfg, amp * sign, &all)? {
                    diff.add(c, x);
                }
            }
            diff.check_budget()?;
        }
        Ok(diff.terms.values().map(|x| x.norm_sqr()).sum::<f64>().sqrt())
    }

    /// (1/n)·Σ_{l=1}^{n} π((k,l))·state, the l = k term being the identity.
    pub fn okounkov_apply(&self, k: usize, n: usize, state: &ProductState) -> Result<ProductState> {
        if k == 0 || k > n || n > self.sites {
            return Err(Error::Precondition(format!("need 1 ≤ k ≤ n ≤ {} (k={k}, n={n})", self.sites)));
        }
        let w = C64::new(1.0 / n as f64, 0.0);
        let mut out = ProductState::empty(self.sites);
        for l in 1..=n {
            let v = if l == k { state.clone() } else { self.apply_perm(state, &Permutation::transposition(k, l))? };
            for (c, a) in v.terms {
                out.add(c, a * w);
            }
            out.check_budget()?;
        }
        Ok(out)
    }
}

/// GNS data (dimension, unitary action, cyclic unit vector) of tr₀.
fn residual_space(group: &Group, tr0: &Tr0) -> (usize, Vec<CMat>, Vec<C64>) {
    let n = group.order();
    let one = C64::new(1.0, 0.0);
    match tr0 {
        Tr0::Trivial => (1, vec![CMat::from_element(1, 1, one); n], vec![one]),
        Tr0::Regular => {
            let t = &group.table;
            let mats = (0..n)
                .map(|g| {
                    let mut m = CMat::zeros(n, n);
                    for x in 0..n {
                        m[(t.mul(g, x), x)] = one;
                    }
                    m
                })
                .collect();
            let mut xi = vec![C64::new(0.0, 0.0); n];
            xi[t.identity()] = one;
            (n, mats, xi)
        }
        Tr0::Mix(parts) => {
            // ⊕ H^{ϱ_i}⊗H^{ϱ_i} with ϱ_i on the first factor, ξ = ⊕ √(c_i/d_i) Σ_a e_a⊗e_a.
            let dims: Vec<usize> = parts.iter().map(|&(r, _)| group.irreps[r].dim).collect();
            let total: usize = dims.iter().map(|d| d * d).sum();
            let mut xi = vec![C64::new(0.0, 0.0); total];
            let mut mats = vec![CMat::zeros(total, total); n];
            let mut off = 0;
            for (&(r, c), &d) in parts.iter().zip(&dims) {
                for a in 0..d {
                    xi[off + a * d + a] = C64::new((c / d as f64).sqrt(), 0.0);
                }
                for (g, m) in mats.iter_mut().enumerate() {
                    let rho = &group.irreps[r].images[g];
                    for a in 0..d {
                        for a2 in 0..d {
                            for b in 0..d {
                                m[(off + a2 * d + b, off + a * d + b)] = rho[(a2, a)];
                            }
                        }
                    }
                }
                off += d * d;
            }
            (total, mats, xi)
        }
    }
}

/// ⟨π(g)η̌, η̌⟩ computed by expanding η over the first `m` sites.
pub fn matrix_element(params: &ThomaParams, g: &WreathElement, m: usize) -> Result<C64> {
    if g.max_support() > m {
        return Err(Error::Precondition(format!("truncation {m} below support {}", g.max_support())));
    }
    let r = Realization::new(params, m.max(1))?;
    let v = r.apply_element(&r.build_eta(), g)?;
    Ok(r.inner_eta(&v))
}

/// Sorting sign of the sequence (s(j_1), s(j_2), …) for j_1 < j_2 < … the
/// positions whose left leg lies in a β block.
pub fn fermionic_sign(s: &Permutation, odd_positions: &[usize]) -> i32 {
    let mut pos: Vec<usize> = odd_positions.to_vec();
    pos.sort_unstable();
    let img: Vec<usize> = pos.iter().map(|&j| s.apply(j)).collect();
    let inv = (0..img.len()).flat_map(|a| (a + 1..img.len()).map(move |b| (a, b))).filter(|&(a, b)| img[a] > img[b]).count();
    if inv % 2 == 0 { 1 } else { -1 }
}

/// One factor of an operator word acting on η̌.
#[derive(Clone, Debug)]
pub enum Factor {
    Elem(WreathElement),
    /// Ô_k = (1/n) Σ_{l=1}^{n} π((k,l))
    Okounkov(usize),
}

/// Exact ⟨F_1 F_2 ⋯ F_r η̌, η̌⟩ with Okounkov averages over l ∈ 1..=n.
///
/// The averages are expanded over equality patterns of the summation indices:
/// an index either hits one of the finitely many named sites or a fresh site,
/// and all fresh sites give the same matrix element, so each pattern is
/// weighted by the number of ways to choose distinct fresh sites.
pub struct Expectation<'a> {
    params: &'a ThomaParams,
    n: usize,
    cache: HashMap<WreathElement, C64>,
}

impl<'a> Expectation<'a> {
    pub fn new(params: &'a ThomaParams, n: usize) -> Self {
        Self { params, n, cache: HashMap::new() }
    }

    pub fn eval(&mut self, word: &[Factor]) -> Result<C64> {
        let mut named = BTreeSet::new();
        for f in word {
            match f {
                Factor::Elem(g) => {
                    named.extend(g.perm.support());
                    named.extend(g.tuple.entries().keys().copied());
                }
                Factor::Okounkov(k) => {
                    named.insert(*k);
                }
            }
        }
        if named.iter().any(|&i| i == 0 || i > self.n) {
            return Err(Error::Precondition(format!("named sites must lie in 1..={}", self.n)));
        }
        let named: Vec<usize> = named.into_iter().collect();
        let fresh_base = named.last().copied().unwrap_or(0);
        let r = word.iter().filter(|f| matches!(f, Factor::Okounkov(_))).count();
        let mut total = C64::new(0.0, 0.0);
        let mut choice = vec![0usize; r];
        self.recurse(word, &named, fresh_base, 0, 0, 1.0, &mut choice, &mut total)?;
        Ok(total / (self.n as f64).powi(r as i32))
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &mut self,
        word: &[Factor],
        named: &[usize],
        fresh_base: usize,
        depth: usize,
        fresh: usize,
        weight: f64,
        choice: &mut Vec<usize>,
        total: &mut C64,
    ) -> Result<()> {
        if depth == choice.len() {
            let group = self.params.group().clone();
            let mut g = WreathElement::identity(group);
            let mut idx = 0;
            for f in word {
                let h = match f {
                    Factor::Elem(x) => x.clone(),
                    Factor::Okounkov(k) => {
                        let l = choice[idx];
                        idx += 1;
                        WreathElement::from_perm(g.group().clone(), Permutation::transposition(*k, l))
                    }
                };
                g = g.multiply(&h)?;
            }
            let v = match self.cache.get(&g) {
                Some(v) => *v,
                None => {
                    let v = matrix_element(self.params, &g, g.max_support())?;
                    self.cache.insert(g, v);
                    v
                }
            };
            *total += v * weight;
            return Ok(());
        }
        for &site in named {
            choice[depth] = site;
            self.recurse(word, named, fresh_base, depth + 1, fresh, weight, choice, total)?;
        }
        for j in 0..fresh {
            choice[depth] = fresh_base + 1 + j;
            self.recurse(word, named, fresh_base, depth + 1, fresh, weight, choice, total)?;
        }
        let available = self.n as f64 - named.len() as f64 - fresh as f64;
        if available > 0.0 {
            choice[depth] = fresh_base + 1 + fresh;
            self.recurse(word, named, fresh_base, depth + 1, fresh + 1, weight * available, choice, total)?;
        }
        Ok(())
    }
}

fn okounkov_power(k: usize, q: usize) -> impl Iterator<Item = Factor> {
    std::iter::repeat(Factor::Okounkov(k)).take(q)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub measured: f64,
    pub predicted: f64,
    pub gap: f64,
}

/// Σ α_k^{q+1}·dim + (−1)^q Σ β_k^{q+1}·dim
pub fn predicted_moment(params: &ThomaParams, q: usize) -> f64 {
    let e = q as i32 + 1;
    let a: f64 = params.alpha.iter().map(|&(w, r)| w.powi(e) * params.rep(r).dim as f64).sum();
    let b: f64 = params.beta.iter().map(|&(w, r)| w.powi(e) * params.rep(r).dim as f64).sum();
    a + if q % 2 == 0 { b } else { -b }
}

/// ⟨Ô_k^q η̌, η̌⟩ against its large-n limit.
pub fn moment_check(params: &ThomaParams, k: usize, q: usize, n: usize) -> Result<MomentReport> {
    if q == 0 || q > 4 {
        return Err(Error::Precondition("q must lie in 1..=4".into()));
    }
    let word: Vec<Factor> = okounkov_power(k, q).collect();
    let measured = Expectation::new(params, n).eval(&word)?.re;
    let predicted = predicted_moment(params, q);
    Ok(MomentReport { measured, predicted, gap: (measured - predicted).abs() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorizationReport {
    pub lhs: C64,
    pub rhs: C64,
    pub residual: f64,
    /// 1/n, the expected order of the residual
    pub scale: f64,
}

/// Compares ⟨π(g)·Π_j Ô_j^{r_j} η̌, η̌⟩ with the product over orbits p of
/// ⟨π(γ^{(i(p))}) Ô_{i(p)}^{|p|−1+Σ_{j∈p} r_j} η̌, η̌⟩, where γ^{(i(p))} carries
/// the cycle product of p at i(p) = min(p).
pub fn factorization_check(params: &ThomaParams, g: &WreathElement, r: &BTreeMap<usize, usize>, n: usize) -> Result<FactorizationReport> {
    let mut ex = Expectation::new(params, n);
    let mut word = vec![Factor::Elem(g.clone())];
    for (&j, &rj) in r {
        word.extend(okounkov_power(j, rj));
    }
    let lhs = ex.eval(&word)?;
    let mut orbits = g.orbits();
    for &j in r.keys() {
        if !orbits.iter().any(|o| o.contains(&j)) {
            orbits.push(vec![j]);
        }
    }
    let e = params.group().e();
    let mut rhs = C64::new(1.0, 0.0);
    for o in &orbits {
        let i = o[0];
        let x = g.cycle_product_from(i);
        let gamma = WreathElement::from_tuple(params.group().clone(), GammaTuple::from_entries([(i, x)], e)?);
        let power = o.len() - 1 + o.iter().map(|j| r.get(j).copied().unwrap_or(0)).sum::<usize>();
        let mut w = vec![Factor::Elem(gamma)];
        w.extend(okounkov_power(i, power));
        rhs *= ex.eval(&w)?;
    }
    Ok(FactorizationReport { lhs, rhs, residual: (lhs - rhs).norm(), scale: 1.0 / n as f64 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    pub probe_vectors: usize,
    pub pruned: usize,
}

/// Eigenvalues of Ô_k compressed to the Krylov span {Ô_k^j η̌ : j < probe_dim}.
pub fn spectral_scan(params: &ThomaParams, k: usize, n: usize, probe_dim: usize) -> Result<SpectralReport> {
    let e = params.group().e();
    spectral_scan_with(params, k, n, probe_dim, &[e])
}

/// Eigenvalues of Ô_k compressed to span{π(γ)Ô_k^j η̌ : γ ∈ `twists` at site k, j < probe_dim}.
pub fn spectral_scan_with(params: &ThomaParams, k: usize, n: usize, probe_dim: usize, twists: &[usize]) -> Result<SpectralReport> {
    let group = params.group().clone();
    let e = group.e();
    if probe_dim == 0 || twists.is_empty() || twists.iter().any(|&x| x >= group.order()) {
        return Err(Error::Precondition("empty or invalid probe set".into()));
    }
    let probes: Vec<(usize, usize)> = (0..probe_dim).flat_map(|j| twists.iter().map(move |&x| (x, j))).collect();
    let elem = |x: usize| -> Result<WreathElement> {
        Ok(WreathElement::from_tuple(group.clone(), GammaTuple::from_entries([(k, x)], e)?))
    };
    let mut ex = Expectation::new(params, n);
    let m = probes.len();
    let mut gram = DMatrix::<C64>::zeros(m, m);
    let mut comp = DMatrix::<C64>::zeros(m, m);
    let t = &group.table;
    for (a, &(xa, ja)) in probes.iter().enumerate() {
        for (b, &(xb, jb)) in probes.iter().enumerate() {
            // ⟨v_b, v_a⟩ = ⟨Ô^{ja} π(x_a⁻¹ x_b) Ô^{jb} η̌, η̌⟩
            let mut w: Vec<Factor> = okounkov_power(k, ja).collect();
            w.push(Factor::Elem(elem(t.mul(t.inv(xa), xb))?));
            w.extend(okounkov_power(k, jb));
            gram[(a, b)] = ex.eval(&w)?;
            let mut w: Vec<Factor> = okounkov_power(k, ja).collect();
            w.push(Factor::Elem(elem(t.inv(xa))?));
            w.push(Factor::Okounkov(k));
            w.push(Factor::Elem(elem(xb)?));
            w.extend(okounkov_power(k, jb));
            comp[(a, b)] = ex.eval(&w)?;
        }
    }
    let (eigenvalues, kept) = compressed_spectrum(&gram, &comp, 1e-9);
    Ok(SpectralReport { eigenvalues, probe_vectors: m, pruned: m - kept })
}

/// Eigenvalues of A restricted to the range of the Gram matrix G, dropping
/// directions with Gram eigenvalue below `rel_tol`·max.
pub fn compressed_spectrum(gram: &DMatrix<C64>, comp: &DMatrix<C64>, rel_tol: f64) -> (Vec<f64>, usize) {
    let ge = gram.clone().symmetric_eigen();
    let top = ge.eigenvalues.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..ge.eigenvalues.len()).filter(|&i| ge.eigenvalues[i] > rel_tol * top).collect();
    let w = DMatrix::<C64>::from_fn(gram.nrows(), keep.len(), |r, c| {
        ge.eigenvectors[(r, keep[c])] / ge.eigenvalues[keep[c]].sqrt()
    });
    let h = w.adjoint() * comp * &w;
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    (ev, keep.len())
}

/// ‖(Ô_k π(γ) − π(γ) Ô_k) η̌‖ for γ supported at site k.
pub fn commutator_decay(params: &ThomaParams, k: usize, gamma: &GammaTuple, n: usize) -> Result<f64> {
    if gamma.entries().keys().any(|&i| i != k) {
        return Err(Error::Precondition(format!("γ must be supported at site {k}")));
    }
    let g = WreathElement::from_tuple(params.group().clone(), gamma.clone());
    let gi = g.inverse();
    let (o, x, xi) = (Factor::Okounkov(k), Factor::Elem(g), Factor::Elem(gi));
    // C*C with C = Ô π(γ) − π(γ) Ô
    let words = [
        (1.0, vec![xi.clone(), o.clone(), o.clone(), x.clone()]),
        (-1.0, vec![xi.clone(), o.clone(), x.clone(), o.clone()]),
        (-1.0, vec![o.clone(), xi.clone(), o.clone(), x.clone()]),
        (1.0, vec![o.clone(), xi, x, o]),
    ];
    norm_from_words(params, n, &words)
}

/// ‖(Ô_k Ô_l − Ô_l Ô_k) η̌‖
pub fn okounkov_commutator(params: &ThomaParams, k: usize, l: usize, n: usize) -> Result<f64> {
    let (a, b) = (Factor::Okounkov(k), Factor::Okounkov(l));
    // C = ÔkÔl − ÔlÔk is anti-self-adjoint, so C*C = −C².
    let words = [
        (1.0, vec![b.clone(), a.clone(), a.clone(), b.clone()]),
        (-1.0, vec![b.clone(), a.clone(), b.clone(), a.clone()]),
        (-1.0, vec![a.clone(), b.clone(), a.clone(), b.clone()]),
        (1.0, vec![a.clone(), b.clone(), b.clone(), a]),
    ];
    norm_from_words(params, n, &words)
}

fn norm_from_words(params: &ThomaParams, n: usize, words: &[(f64, Vec<Factor>)]) -> Result<f64> {
    let mut ex = Expectation::new(params, n);
    let mut sq = C64::new(0.0, 0.0);
    for (c, w) in words {
        sq += ex.eval(w)? * *c;
    }
    Ok(sq.re.max(0.0).sqrt())
}

/// ⟨Ô_k^q η̌, η̌⟩ by explicit state evolution; a cross-check on [`Expectation`].
pub fn moment_by_states(params: &ThomaParams, k: usize, q: usize, n: usize) -> Result<C64> {
    let r = Realization::new(params, n)?;
    let mut v = r.build_eta();
    for _ in 0..q {
        v = r.okounkov_apply(k, n, &v)?;
    }
    Ok(r.inner_eta(&v))
}

/// Dense unit vector helper for tests and the CLI: ‖η^{(site)}‖².
pub fn eta_site_norm_sq(r: &Realization, site: usize) -> f64 {
    r.eta_site(site).iter().map(|(_, a)| a.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_group::{build_group, GroupDescriptor};
    use crate::thoma::{evaluate, standard_z2_params};
    use crate::wreath::parse_element;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn eta_is_unit() {
        let p = standard_z2_params();
        let r = Realization::new(&p, 4).unwrap();
        for site in 1..=4 {
            assert!((eta_site_norm_sq(&r, site) - 1.0).abs() < 1e-12);
        }
        let z2 = p.group().clone();
        let only_res = ThomaParams::new(z2, vec![], vec![], Tr0::Regular).unwrap();
        let r = Realization::new(&only_res, 2).unwrap();
        let comps = r.eta_site(2);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].0, SiteSymbol::residual(2, 0));
        assert!(close(r.inner(&r.build_eta(), &r.build_eta()), C64::new(1.0, 0.0), 1e-15));
    }

    #[test]
    fn standard_matrix_elements() {
        let p = standard_z2_params();
        let g = p.group().clone();
        let cases = [("e", 1.0), ("(1 2 3)[1:g]", -0.109375), ("[1:g]", -0.25), ("(1 2)", 0.1875), ("(1 2 3)", 0.140625)];
        for (s, want) in cases {
            let el = parse_element(s, &g).unwrap();
            let v = matrix_element(&p, &el, 3).unwrap();
            assert!(close(v, C64::new(want, 0.0), 1e-12), "{s}: {v}");
        }
        assert!(matrix_element(&p, &parse_element("(1 5)", &g).unwrap(), 3).is_err());
    }

    #[test]
    fn truncation_independent() {
        let p = standard_z2_params();
        let g = parse_element("(1 3)(2 4)[2:g,4:g]", p.group()).unwrap();
        let base = matrix_element(&p, &g, 4).unwrap();
        for m in 5..8 {
            assert!(close(matrix_element(&p, &g, m).unwrap(), base, 1e-12));
        }
    }

    #[test]
    fn pure_tuple_product_formula() {
        let s3 = Arc::new(build_group(&GroupDescriptor::Symmetric3).unwrap());
        let p = ThomaParams::named(s3.clone(), &[(0.3, "standard")], &[(0.2, "sign")], Tr0::Regular).unwrap();
        let g = parse_element("[1:r,2:t12,3:e]", &s3).unwrap();
        let per = |x: usize| {
            let mut v = p.tr0_at(x) * p.delta;
            for &(w, r) in p.alpha.iter().chain(&p.beta) {
                v += p.chi(r, x) * w;
            }
            v
        };
        let want = per(g.gamma(1)) * per(g.gamma(2));
        assert!(close(matrix_element(&p, &g, 3).unwrap(), want, 1e-12));
    }

    #[test]
    fn beta_swap_sign() {
        let p = standard_z2_params();
        let r = Realization::new(&p, 3).unwrap();
        // block 1 is the β block (trivial rep)
        let sym = SiteSymbol::pair(1, 0, 1, 0);
        let v = r.basis_state(&[(1, sym), (2, sym)]).unwrap();
        let w = r.apply_perm(&v, &Permutation::transposition(1, 2)).unwrap();
        assert!(close(r.inner(&w, &v), C64::new(-1.0, 0.0), 1e-15));
        let asym = SiteSymbol::pair(0, 0, 0, 0);
        let v = r.basis_state(&[(1, asym), (2, asym)]).unwrap();
        let w = r.apply_perm(&v, &Permutation::transposition(1, 2)).unwrap();
        assert!(close(r.inner(&w, &v), C64::new(1.0, 0.0), 1e-15));
    }

    #[test]
    fn crossing_sign_matches_sorting_sign() {
        let p = standard_z2_params();
        let r = Realization::new(&p, 5).unwrap();
        let beta = SiteSymbol::pair(1, 0, 1, 0);
        let alpha = SiteSymbol::pair(0, 0, 0, 0);
        let mut rng = crate::sampling::rng(11);
        for mask in 0u32..32 {
            let syms: Vec<(usize, SiteSymbol)> =
                (1..=5).map(|i| (i, if mask >> (i - 1) & 1 == 1 { beta } else { alpha })).collect();
            let odd: Vec<usize> = (1..=5).filter(|i| mask >> (i - 1) & 1 == 1).collect();
            let v = r.basis_state(&syms).unwrap();
            for _ in 0..5 {
                let s = crate::sampling::random_perm(&mut rng, 5, 0);
                let w = r.apply_perm(&v, &s).unwrap();
                assert_eq!(w.len(), 1);
                let (_, amp) = w.terms.iter().next().unwrap();
                assert_eq!(amp.re as i32, fermionic_sign(&s, &odd));
            }
        }
    }

    #[test]
    fn residual_copies_are_orthogonal() {
        let z2 = Arc::new(build_group(&GroupDescriptor::Cyclic(2)).unwrap());
        let p = ThomaParams::new(z2, vec![], vec![], Tr0::Regular).unwrap();
        let r = Realization::new(&p, 3).unwrap();
        let moved = r.apply_perm(&r.build_eta(), &Permutation::transposition(1, 3)).unwrap();
        assert!(close(r.inner_eta(&moved), C64::new(0.0, 0.0), 0.0));
    }

    #[test]
    fn homomorphism_and_unitarity_on_states() {
        let s3 = Arc::new(build_group(&GroupDescriptor::Symmetric3).unwrap());
        let p = ThomaParams::named(s3.clone(), &[(0.3, "standard")], &[(0.2, "sign")], Tr0::Regular).unwrap();
        let r = Realization::new(&p, 3).unwrap();
        let mut rng = crate::sampling::rng(5);
        let base = crate::sampling::random_element(&mut rng, &s3, 3);
        let v = r.apply_element(&r.build_eta(), &base).unwrap();
        for _ in 0..10 {
            let g = crate::sampling::random_element(&mut rng, &s3, 3);
            let h = crate::sampling::random_element(&mut rng, &s3, 3);
            let lhs = r.apply_element(&r.apply_element(&v, &h).unwrap(), &g).unwrap();
            let rhs = r.apply_element(&v, &g.multiply(&h).unwrap()).unwrap();
            assert!(r.distance(&lhs, &rhs).unwrap() <= 1e-10);
            assert!((r.norm(&lhs) - r.norm(&v)).abs() <= 1e-10);
        }
    }

    #[test]
    fn oracle_against_formula_s3() {
        let s3 = Arc::new(build_group(&GroupDescriptor::Symmetric3).unwrap());
        let p = ThomaParams::named(s3.clone(), &[(0.3, "standard")], &[(0.2, "sign")], Tr0::Regular).unwrap();
        let mut rng = crate::sampling::rng(9);
        for _ in 0..20 {
            let g = crate::sampling::random_element(&mut rng, &s3, 4);
            let a = matrix_element(&p, &g, 4).unwrap();
            let b = evaluate(&p, &g).unwrap();
            assert!(close(a, b, 1e-9), "{g}: {a} vs {b}");
        }
    }

    #[test]
    fn expectation_matches_state_evolution() {
        let p = standard_z2_params();
        for n in [1, 2, 3, 5] {
            for q in 1..=3 {
                let by_states = moment_by_states(&p, 1, q, n).unwrap();
                let by_patterns = Expectation::new(&p, n).eval(&vec![Factor::Okounkov(1); q]).unwrap();
                assert!(close(by_states, by_patterns, 1e-12), "n={n} q={q}");
            }
        }
        // n = 1: only the identity term
        assert!(close(moment_by_states(&p, 1, 1, 1).unwrap(), C64::new(1.0, 0.0), 1e-15));
    }

    #[test]
    fn first_moment_closed_form() {
        let p = standard_z2_params();
        for n in [4, 8, 16] {
            let m = moment_check(&p, 1, 1, n).unwrap();
            let want = (1.0 - 1.0 / n as f64) * 0.1875 + 1.0 / n as f64;
            assert!((m.measured - want).abs() < 1e-12);
        }
        assert_eq!(predicted_moment(&p, 1), 0.1875);
        assert_eq!(predicted_moment(&p, 2), 0.140625);
    }

    #[test]
    fn spectral_weights_reproduce_moments() {
        let p = standard_z2_params();
        for q in 1..=4 {
            let s: f64 = p.spectral_weights().iter().map(|&(x, w)| w * x.powi(q as i32)).sum();
            assert!((s - predicted_moment(&p, q)).abs() < 1e-15);
        }
    }

    fn dist_to(points: &[f64], x: f64) -> f64 {
        points.iter().map(|p| (p - x).abs()).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn spectral_scan_approaches_atoms() {
        let p = standard_z2_params();
        let atoms = [0.5, -0.25, 0.0];
        let mut last = f64::INFINITY;
        for n in [16, 32, 64] {
            let s = spectral_scan(&p, 1, n, 3).unwrap();
            assert_eq!(s.eigenvalues.len(), 3);
            let worst = s.eigenvalues.iter().map(|&x| dist_to(&atoms, x)).fold(0.0, f64::max);
            assert!(worst <= 1.5 / (n as f64).sqrt(), "n={n}: {:?}", s.eigenvalues);
            assert!(worst < last);
            last = worst;
        }
    }

    #[test]
    fn spectral_scan_edge_params() {
        let z2 = standard_z2_params().group().clone();
        let full = ThomaParams::named(z2.clone(), &[(1.0, "trivial")], &[], Tr0::Regular).unwrap();
        let s = spectral_scan(&full, 1, 16, 2).unwrap();
        assert_eq!(s.pruned, 1);
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-12);
        let res = ThomaParams::new(z2, vec![], vec![], Tr0::Regular).unwrap();
        for n in [8, 32] {
            let s = spectral_scan(&res, 1, n, 2).unwrap();
            assert!(s.eigenvalues.iter().all(|x| x.abs() <= 1.5 / (n as f64).sqrt()));
        }
    }

    #[test]
    fn gamma_commutator_decays_like_inverse_sqrt() {
        // the l-terms of the commutator are almost orthogonal, so n·‖·‖² settles
        let p = standard_z2_params();
        let g = GammaTuple::from_entries([(1, 1)], 0).unwrap();
        let c: Vec<f64> = [8, 16, 32].iter().map(|&n| commutator_decay(&p, 1, &g, n).unwrap()).collect();
        assert!(c[0] > c[1] && c[1] > c[2]);
        let ratio = c[1] / c[2];
        assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.1, "{ratio}");
        assert!((c[2] * c[2] * 32.0 - c[1] * c[1] * 16.0).abs() < 0.1);
    }

    #[test]
    fn okounkov_pair_commutator_decays_like_inverse_n() {
        let p = standard_z2_params();
        let a = okounkov_commutator(&p, 1, 2, 16).unwrap();
        let b = okounkov_commutator(&p, 1, 2, 32).unwrap();
        assert!((a / b / 2.0 - 1.0).abs() < 0.25, "{a} {b}");
    }

    #[test]
    fn factorization_trivial_cases() {
        let p = standard_z2_params();
        let g = parse_element("(1 2 3)[2:g]", p.group()).unwrap();
        let f = factorization_check(&p, &g, &BTreeMap::new(), 8).unwrap();
        // single cycle, no Okounkov factors: lhs is φ(g), rhs ⟨π(γ̃)Ô²⟩
        assert!((f.lhs - evaluate(&p, &g).unwrap()).norm() < 1e-12);
        let h = parse_element("(1 2)(3 4 5)[4:g]", p.group()).unwrap();
        let lhs = matrix_element(&p, &h, 5).unwrap();
        let a = matrix_element(&p, &parse_element("(1 2)", p.group()).unwrap(), 2).unwrap();
        let b = matrix_element(&p, &parse_element("(3 4 5)[4:g]", p.group()).unwrap(), 5).unwrap();
        assert!((lhs - a * b).norm() < 1e-12);
    }

    #[test]
    fn moment_gap_shrinks() {
        let p = standard_z2_params();
        for q in 1..=2 {
            let a = moment_check(&p, 1, q, 16).unwrap();
            let b = moment_check(&p, 1, q, 32).unwrap();
            assert!(a.gap < 3.0 / 16.0 && b.gap < a.gap);
        }
        assert!(moment_check(&p, 1, 5, 8).is_err());
    }

    #[test]
    fn budget_guard_trips() {
        let s3 = Arc::new(build_group(&GroupDescriptor::Symmetric3).unwrap());
        let p = ThomaParams::named(s3.clone(), &[(0.3, "standard")], &[(0.2, "sign")], Tr0::Regular).unwrap();
        let r = Realization::new(&p, 14).unwrap();
        let cycle: Vec<usize> = (1..=14).collect();
        let g = WreathElement::from_perm(s3, Permutation::from_cycles(&[cycle]).unwrap());
        assert!(matches!(r.apply_element(&r.build_eta(), &g), Err(Error::Budget { .. })));
    }

    #[test]
    fn commutator_of_identity_vanishes() {
        let p = standard_z2_params();
        assert_eq!(commutator_decay(&p, 1, &GammaTuple::identity(), 8).unwrap(), 0.0);
    }
}
