//! Indecomposable characters of Γ≀S∞ given by Thoma-type parameters, the
//! abelian specialisation, the classical restriction to S∞, and checks of the
//! character axioms.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_rational::Ratio;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::finite_group::{character_of, dual_group, resolve_group, validate_rep, Group, MatrixRep, C64};
use crate::wreath::{orbit_count, same_group, Permutation, WreathElement};

/// Tolerance on Σα·dim + Σβ·dim ≤ 1 and on probability vectors.
pub const WEIGHT_TOL: f64 = 1e-12;

/// The residual normalised trace tr₀.
#[derive(Clone, Debug, PartialEq)]
pub enum Tr0 {
    /// δ_{x,e}
    Regular,
    /// constant 1
    Trivial,
    /// Σ cᵢ·χᵢ(x)/dim χᵢ over (irrep index, cᵢ), cᵢ ≥ 0 summing to 1.
    Mix(Vec<(usize, f64)>),
}

#[derive(Clone, Debug)]
pub struct ThomaParams {
    group: Arc<Group>,
    /// (weight, irrep index into `group.irreps`)
    pub alpha: Vec<(f64, usize)>,
    pub beta: Vec<(f64, usize)>,
    pub tr0: Tr0,
    pub delta: f64,
    chars: Vec<Vec<C64>>,
    tr0_values: Vec<C64>,
}

impl ThomaParams {
    pub fn new(group: Arc<Group>, alpha: Vec<(f64, usize)>, beta: Vec<(f64, usize)>, tr0: Tr0) -> Result<Self> {
        let nrep = group.irreps.len();
        let mut mass = 0.0;
        for (label, seq) in [("alpha", &alpha), ("beta", &beta)] {
            for (k, &(w, r)) in seq.iter().enumerate() {
                if !(w > 0.0 && w <= 1.0) {
                    return Err(Error::InvalidParams(format!("{label}[{k}] weight {w} outside (0, 1]")));
                }
                if k > 0 && w > seq[k - 1].0 {
                    return Err(Error::InvalidParams(format!("{label} weights must be non-increasing")));
                }
                let rep = group.irreps.get(r).ok_or_else(|| Error::InvalidParams(format!("{label}[{k}]: no irrep {r}")))?;
                let report = validate_rep(&group.table, rep);
                if !report.ok() || !report.irreducible {
                    return Err(Error::InvalidParams(format!("{label}[{k}]: {} is not irreducible", rep.name)));
                }
                mass += w * rep.dim as f64;
            }
        }
        if mass > 1.0 + WEIGHT_TOL {
            return Err(Error::InvalidParams(format!("Σα·dim + Σβ·dim = {mass} exceeds 1")));
        }
        let order = group.order();
        let tr0_values: Vec<C64> = match &tr0 {
            Tr0::Regular => (0..order).map(|x| C64::new(if x == group.e() { 1.0 } else { 0.0 }, 0.0)).collect(),
            Tr0::Trivial => vec![C64::new(1.0, 0.0); order],
            Tr0::Mix(parts) => {
                let total: f64 = parts.iter().map(|p| p.1).sum();
                if parts.iter().any(|p| p.1 < 0.0) || (total - 1.0).abs() > WEIGHT_TOL {
                    return Err(Error::InvalidParams("tr0 mix coefficients must be ≥ 0 and sum to 1".into()));
                }
                let mut v = vec![C64::new(0.0, 0.0); order];
                for &(r, c) in parts {
                    let rep = group.irreps.get(r).ok_or_else(|| Error::InvalidParams(format!("tr0: no irrep {r}")))?;
                    for (x, chi) in character_of(rep).into_iter().enumerate() {
                        v[x] += chi * (c / rep.dim as f64);
                    }
                }
                v
            }
        };
        let chars = (0..nrep).map(|r| character_of(&group.irreps[r])).collect();
        Ok(Self { group, alpha, beta, tr0, delta: (1.0 - mass).max(0.0), chars, tr0_values })
    }

    /// Builds parameters from irrep names.
    pub fn named(group: Arc<Group>, alpha: &[(f64, &str)], beta: &[(f64, &str)], tr0: Tr0) -> Result<Self> {
        let find = |n: &str| {
            group
                .irreps
                .iter()
                .position(|r| r.name == n)
                .ok_or_else(|| Error::InvalidParams(format!("unknown irrep '{n}' for {}", group.name)))
        };
        let a = alpha.iter().map(|&(w, n)| Ok((w, find(n)?))).collect::<Result<_>>()?;
        let b = beta.iter().map(|&(w, n)| Ok((w, find(n)?))).collect::<Result<_>>()?;
        Self::new(group.clone(), a, b, tr0)
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    pub fn rep(&self, r: usize) -> &MatrixRep {
        &self.group.irreps[r]
    }

    /// Unnormalised character of irrep `r` at x.
    pub fn chi(&self, r: usize, x: usize) -> C64 {
        self.chars[r][x]
    }

    pub fn tr0_at(&self, x: usize) -> C64 {
        self.tr0_values[x]
    }

    /// Contribution of one orbit of length `len` with cycle product `x`.
    pub fn orbit_factor(&self, len: usize, x: usize) -> C64 {
        let mut v = if len == 1 { self.tr0_values[x] * self.delta } else { C64::new(0.0, 0.0) };
        let sign = if len % 2 == 1 { 1.0 } else { -1.0 };
        for &(w, r) in &self.alpha {
            v += self.chars[r][x] * w.powi(len as i32);
        }
        for &(w, r) in &self.beta {
            v += self.chars[r][x] * (sign * w.powi(len as i32));
        }
        v
    }

    /// Spectral data: (point, mass) with masses α_k·dim at α_k, β_k·dim at −β_k, δ at 0.
    pub fn spectral_weights(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self.alpha.iter().map(|&(w, r)| (w, w * self.rep(r).dim as f64)).collect();
        out.extend(self.beta.iter().map(|&(w, r)| (-w, w * self.rep(r).dim as f64)));
        out.push((0.0, self.delta));
        out
    }

    pub fn to_json(&self) -> Value {
        let side = |v: &[(f64, usize)]| -> Vec<Value> {
            v.iter().map(|&(w, r)| json!({"weight": w, "irrep": self.rep(r).name})).collect()
        };
        let tr0 = match &self.tr0 {
            Tr0::Regular => json!("regular"),
            Tr0::Trivial => json!("trivial"),
            Tr0::Mix(parts) => json!({"mix": parts.iter().map(|&(r, c)| json!({"irrep": self.rep(r).name, "coef": c})).collect::<Vec<_>>()}),
        };
        json!({"group": self.group.name, "alpha": side(&self.alpha), "beta": side(&self.beta), "tr0": tr0})
    }
}

/// Γ = ℤ₂, α = (0.5, sign), β = (0.25, trivial), tr₀ regular, δ = 0.25.
pub fn standard_z2_params() -> ThomaParams {
    let g = Arc::new(crate::finite_group::build_group(&crate::finite_group::GroupDescriptor::Cyclic(2)).unwrap());
    ThomaParams::named(g, &[(0.5, "sign")], &[(0.25, "trivial")], Tr0::Regular).unwrap()
}

fn pbad(field: &str) -> Error {
    Error::Config(format!("params: missing or malformed field '{field}'"))
}

/// Parses the params format; `group` may be supplied to override the file's
/// group reference.
pub fn params_from_json(v: &Value, group: Option<Arc<Group>>) -> Result<ThomaParams> {
    let group = match group {
        Some(g) => g,
        None => {
            let r = v.get("group").and_then(Value::as_str).ok_or_else(|| pbad("group"))?;
            Arc::new(resolve_group(r)?)
        }
    };
    let find = |n: &str, field: &str| {
        group
            .irreps
            .iter()
            .position(|r| r.name == n)
            .ok_or_else(|| Error::Config(format!("params: field '{field}' names unknown irrep '{n}'")))
    };
    let mut sides = Vec::new();
    for field in ["alpha", "beta"] {
        let mut out = Vec::new();
        if let Some(arr) = v.get(field) {
            for item in arr.as_array().ok_or_else(|| pbad(field))? {
                let w = item.get("weight").and_then(Value::as_f64).ok_or_else(|| pbad(&format!("{field}.weight")))?;
                let n = item.get("irrep").and_then(Value::as_str).ok_or_else(|| pbad(&format!("{field}.irrep")))?;
                out.push((w, find(n, field)?));
            }
        }
        sides.push(out);
    }
    let tr0 = match v.get("tr0") {
        None => Tr0::Regular,
        Some(Value::String(s)) if s == "regular" => Tr0::Regular,
        Some(Value::String(s)) if s == "trivial" => Tr0::Trivial,
        Some(Value::Object(o)) => {
            let arr = o.get("mix").and_then(Value::as_array).ok_or_else(|| pbad("tr0.mix"))?;
            let mut parts = Vec::new();
            for item in arr {
                let n = item.get("irrep").and_then(Value::as_str).ok_or_else(|| pbad("tr0.mix.irrep"))?;
                let c = item.get("coef").and_then(Value::as_f64).ok_or_else(|| pbad("tr0.mix.coef"))?;
                parts.push((find(n, "tr0")?, c));
            }
            Tr0::Mix(parts)
        }
        Some(_) => return Err(pbad("tr0")),
    };
    let beta = sides.pop().unwrap();
    let alpha = sides.pop().unwrap();
    ThomaParams::new(group, alpha, beta, tr0).map_err(|e| Error::Config(format!("params: {e}")))
}

/// φ(g) = Π_p [δ_p·δ·tr₀(γ̃(p)) + Σ_k α_k^{|p|} Tr_{α_k}(γ̃(p)) + (−1)^{|p|−1} Σ_k β_k^{|p|} Tr_{β_k}(γ̃(p))]
/// over the orbits of g that carry something nontrivial.
pub fn evaluate(params: &ThomaParams, g: &WreathElement) -> Result<C64> {
    if !same_group(params.group(), g.group()) {
        return Err(Error::GroupMismatch);
    }
    Ok(g.orbits()
        .iter()
        .map(|o| params.orbit_factor(o.len(), g.cycle_product_from(o[0])))
        .product())
}

/// Parameters for abelian Γ in terms of the dual group.
#[derive(Clone, Debug)]
pub struct AbelianParams {
    group: Arc<Group>,
    dual: Vec<Vec<C64>>,
    /// probability vector over dual-character indices
    pub mu: Vec<f64>,
    pub alpha: Vec<(f64, usize)>,
    pub beta: Vec<(f64, usize)>,
}

impl AbelianParams {
    pub fn new(group: Arc<Group>, mu: Vec<f64>, alpha: Vec<(f64, usize)>, beta: Vec<(f64, usize)>) -> Result<Self> {
        let dual: Vec<Vec<C64>> = dual_group(&group.table)?.into_iter().map(|d| d.values).collect();
        if mu.len() != dual.len() || mu.iter().any(|&m| m < 0.0) || (mu.iter().sum::<f64>() - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidParams("mu must be a probability vector over the dual group".into()));
        }
        let mass: f64 = alpha.iter().chain(&beta).map(|p| p.0).sum();
        if mass > 1.0 + WEIGHT_TOL {
            return Err(Error::InvalidParams(format!("Σα + Σβ = {mass} exceeds 1")));
        }
        if alpha.iter().chain(&beta).any(|&(w, c)| w <= 0.0 || c >= dual.len()) {
            return Err(Error::InvalidParams("weights must be positive and reference dual characters".into()));
        }
        Ok(Self { group, dual, mu, alpha, beta })
    }

    pub fn dual(&self) -> &[Vec<C64>] {
        &self.dual
    }

    /// The same character expressed as [`ThomaParams`]: the dual characters
    /// become 1-dimensional irreps and tr₀ becomes the μ-mixture.
    pub fn to_thoma(&self) -> Result<ThomaParams> {
        let irreps = self.dual.iter().enumerate().map(|(i, v)| MatrixRep::one_dim(format!("dual{i}"), v)).collect();
        let g = Arc::new(Group::new(self.group.name.clone(), self.group.table.clone(), irreps)?);
        let mix = self.mu.iter().enumerate().filter(|p| *p.1 > 0.0).map(|(i, &m)| (i, m)).collect();
        let mut alpha = self.alpha.clone();
        let mut beta = self.beta.clone();
        alpha.sort_by(|a, b| b.0.total_cmp(&a.0));
        beta.sort_by(|a, b| b.0.total_cmp(&a.0));
        ThomaParams::new(g, alpha, beta, Tr0::Mix(mix))
    }
}

pub fn evaluate_abelian(params: &AbelianParams, g: &WreathElement) -> Result<C64> {
    if !same_group(&params.group, g.group()) {
        return Err(Error::GroupMismatch);
    }
    let t = &params.group.table;
    let delta = 1.0 - params.alpha.iter().chain(&params.beta).map(|p| p.0).sum::<f64>();
    let mut val = C64::new(1.0, 0.0);
    for o in g.orbits() {
        let prod = o.iter().fold(t.identity(), |acc, &j| t.mul(acc, g.gamma(j)));
        let len = o.len() as i32;
        let mut f = C64::new(0.0, 0.0);
        if len == 1 {
            let integral: C64 = params.mu.iter().zip(&params.dual).map(|(m, d)| d[prod] * *m).sum();
            f += integral * delta;
        }
        for &(w, c) in &params.alpha {
            f += params.dual[c][prod] * w.powi(len);
        }
        let sign = if len % 2 == 1 { 1.0 } else { -1.0 };
        for &(w, c) in &params.beta {
            f += params.dual[c][prod] * (sign * w.powi(len));
        }
        val *= f;
    }
    Ok(val)
}

/// Value on a permutation of the given cycle type with all γ trivial:
/// Π_{l>1} (Σ α'^l + (−1)^{l−1} Σ β'^l), α' repeating α_k dim(ϱ^{α_k}) times.
pub fn thoma_classical(params: &ThomaParams, cycle_type: &[usize]) -> f64 {
    cycle_type
        .iter()
        .filter(|&&l| l > 1)
        .map(|&l| {
            let a: f64 = params.alpha.iter().map(|&(w, r)| params.rep(r).dim as f64 * w.powi(l as i32)).sum();
            let b: f64 = params.beta.iter().map(|&(w, r)| params.rep(r).dim as f64 * w.powi(l as i32)).sum();
            a + if l % 2 == 1 { b } else { -b }
        })
        .product()
}

/// Smallest eigenvalue of the Hermitian matrix M[j,k] = φ(g_j·g_k⁻¹).
pub fn gram_psd(params: &ThomaParams, elements: &[WreathElement]) -> Result<f64> {
    if elements.len() > 64 {
        return Err(Error::Precondition("at most 64 elements".into()));
    }
    let n = elements.len();
    if n == 0 {
        return Ok(f64::INFINITY);
    }
    let inv: Vec<WreathElement> = elements.iter().map(|g| g.inverse()).collect();
    let mut m = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            m[(j, k)] = evaluate(params, &elements[j].multiply(&inv[k])?)?;
        }
    }
    let eig = m.symmetric_eigen();
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// |φ(gh) − φ(hg)|
pub fn centrality_residual(params: &ThomaParams, g: &WreathElement, h: &WreathElement) -> Result<f64> {
    Ok((evaluate(params, &g.multiply(h)?)? - evaluate(params, &h.multiply(g)?)?).norm())
}

/// |φ(g) − Π_p φ(s_p·γ(p))|
pub fn check_multiplicativity(params: &ThomaParams, g: &WreathElement) -> Result<f64> {
    let whole = evaluate(params, g)?;
    let mut prod = C64::new(1.0, 0.0);
    for f in g.cycle_decompose() {
        prod *= evaluate(params, &f.element)?;
    }
    Ok((whole - prod).norm())
}

pub type Q = Ratio<i128>;

/// Coefficients c_k of Σ_{s∈S_m} (±1)^s t^{#orbits(s)}, indexed by k = 0..=m.
/// Signed uses sgn(s); unsigned uses +1 for every s.
pub fn orbit_polynomial(m: usize, signed: bool) -> Result<Vec<i128>> {
    if m == 0 || m > 8 {
        return Err(Error::Precondition(format!("m = {m} outside 1..=8")));
    }
    let mut coef = vec![0i128; m + 1];
    for_each_permutation(m, |p| {
        let orbits = orbit_count(p, m).expect("support within 1..m");
        let sign = if signed && (m - orbits) % 2 == 1 { -1 } else { 1 };
        coef[orbits] += sign;
    });
    Ok(coef)
}

/// Σ_{s∈S_m} sgn(s)·ν^{#orbits(s)} by exhaustive summation.
pub fn alternating_sum(nu: f64, m: usize) -> Result<f64> {
    let c = orbit_polynomial(m, true)?;
    Ok(c.iter().enumerate().map(|(k, &ck)| ck as f64 * nu.powi(k as i32)).sum())
}

/// Unsigned companion Σ_{s∈S_m} ν^{#orbits(s)}.
pub fn unsigned_sum(nu: f64, m: usize) -> Result<f64> {
    let c = orbit_polynomial(m, false)?;
    Ok(c.iter().enumerate().map(|(k, &ck)| ck as f64 * nu.powi(k as i32)).sum())
}

/// Exact evaluation of the orbit polynomial at a rational point.
pub fn orbit_sum_exact(nu: Q, m: usize, signed: bool) -> Result<Q> {
    let c = orbit_polynomial(m, signed)?;
    let mut acc = Q::from_integer(0);
    for &ck in c.iter().rev() {
        acc = acc * nu + Q::from_integer(ck);
    }
    Ok(acc)
}

/// Coefficients of ν(ν−1)⋯(ν−m+1) (signed) or ν(ν+1)⋯(ν+m−1).
pub fn factorial_polynomial(m: usize, signed: bool) -> Vec<i128> {
    let mut p = vec![1i128];
    for j in 0..m as i128 {
        let shift = if signed { -j } else { j };
        let mut next = vec![0i128; p.len() + 1];
        for (k, &c) in p.iter().enumerate() {
            next[k + 1] += c;
            next[k] += c * shift;
        }
        p = next;
    }
    p
}

/// Checks Σ sgn(s) t^{#orbits} = t(t−1)⋯(t−m+1) (or the unsigned analogue)
/// coefficient-wise in exact integer arithmetic.
pub fn check_alt_identity(m: usize, signed: bool) -> Result<bool> {
    Ok(orbit_polynomial(m, signed)? == factorial_polynomial(m, signed))
}

/// Visits all permutations of {1..m} (Heap's algorithm).
pub fn for_each_permutation(m: usize, mut f: impl FnMut(&Permutation)) {
    let mut a: Vec<usize> = (1..=m).collect();
    let mut c = vec![0usize; m];
    let visit = |a: &[usize], f: &mut dyn FnMut(&Permutation)| {
        let p = Permutation::from_images((1..=a.len()).zip(a.iter().copied())).expect("arrangement of 1..m");
        f(&p);
    };
    visit(&a, &mut f);
    let mut i = 0;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            visit(&a, &mut f);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}
