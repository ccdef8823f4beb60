//! Finite base groups: multiplication tables, conjugacy classes, unitary
//! matrix representations and, for abelian groups, the dual group.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

/// Tolerance for homomorphism, unitarity and ⟨χ,χ⟩ checks.
pub const REP_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct GroupTable {
    order: usize,
    mult: Vec<Vec<usize>>,
    identity: usize,
    inv: Vec<usize>,
    element_names: Vec<String>,
    aliases: Vec<(String, usize)>,
}

impl GroupTable {
    /// Validates `mult` as a group law and derives identity and inverses.
    pub fn new(mult: Vec<Vec<usize>>, names: Option<Vec<String>>) -> Result<Self> {
        let n = mult.len();
        if n == 0 {
            return Err(Error::InvalidGroup("empty table".into()));
        }
        for (r, row) in mult.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidGroup(format!("row {r} has length {} (expected {n})", row.len())));
            }
            let mut seen = vec![false; n];
            for &x in row {
                if x >= n || seen[x] {
                    return Err(Error::InvalidGroup(format!("row {r} is not a permutation of 0..{n}")));
                }
                seen[x] = true;
            }
        }
        for c in 0..n {
            let mut seen = vec![false; n];
            for row in &mult {
                if seen[row[c]] {
                    return Err(Error::InvalidGroup(format!("column {c} is not a permutation of 0..{n}")));
                }
                seen[row[c]] = true;
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| mult[e][x] == x && mult[x][e] == x))
            .ok_or_else(|| Error::InvalidGroup("no identity element".into()))?;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if mult[mult[a][b]][c] != mult[a][mult[b][c]] {
                        return Err(Error::InvalidGroup(format!("not associative on triple ({a}, {b}, {c})")));
                    }
                }
            }
        }
        let inv = (0..n)
            .map(|a| (0..n).find(|&b| mult[a][b] == identity).unwrap())
            .collect();
        let element_names = match names {
            Some(v) => {
                if v.len() != n {
                    return Err(Error::InvalidGroup(format!("{} element names for order {n}", v.len())));
                }
                v
            }
            None => (0..n).map(|i| i.to_string()).collect(),
        };
        Ok(Self { order: n, mult, identity, inv, element_names, aliases: Vec::new() })
    }

    /// Extra labels accepted by [`GroupTable::lookup`].
    pub fn with_aliases(mut self, aliases: Vec<(String, usize)>) -> Self {
        self.aliases = aliases;
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mult[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }

    /// g·x·g⁻¹
    pub fn conj(&self, g: usize, x: usize) -> usize {
        self.mul(self.mul(g, x), self.inv(g))
    }

    pub fn mult_table(&self) -> &[Vec<usize>] {
        &self.mult
    }

    pub fn name(&self, a: usize) -> &str {
        &self.element_names[a]
    }

    /// Resolves an element label: its stored name, `e` for the identity, or a
    /// bare index.
    pub fn lookup(&self, label: &str) -> Option<usize> {
        if let Some(i) = self.element_names.iter().position(|s| s == label) {
            return Some(i);
        }
        if let Some((_, i)) = self.aliases.iter().find(|(a, _)| a == label) {
            return Some(*i);
        }
        if label == "e" {
            return Some(self.identity);
        }
        label.parse::<usize>().ok().filter(|&i| i < self.order)
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|a| (0..self.order).all(|b| self.mult[a][b] == self.mult[b][a]))
    }

    pub fn pow(&self, a: usize, k: usize) -> usize {
        (0..k).fold(self.identity, |acc, _| self.mul(acc, a))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConjClasses {
    pub class_of: Vec<usize>,
    pub representatives: Vec<usize>,
}

impl ConjClasses {
    pub fn count(&self) -> usize {
        self.representatives.len()
    }

    pub fn members(&self, class: usize) -> Vec<usize> {
        (0..self.class_of.len()).filter(|&x| self.class_of[x] == class).collect()
    }
}

/// Orbits of the conjugation action; class ids ordered by smallest member.
pub fn conjugacy_classes(t: &GroupTable) -> ConjClasses {
    let n = t.order();
    let mut class_of = vec![usize::MAX; n];
    let mut representatives = Vec::new();
    for x in 0..n {
        if class_of[x] != usize::MAX {
            continue;
        }
        let id = representatives.len();
        representatives.push(x);
        for g in 0..n {
            class_of[t.conj(g, x)] = id;
        }
    }
    ConjClasses { class_of, representatives }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixRep {
    pub name: String,
    pub dim: usize,
    pub images: Vec<CMat>,
}

impl MatrixRep {
    pub fn one_dim(name: impl Into<String>, values: &[C64]) -> Self {
        Self {
            name: name.into(),
            dim: 1,
            images: values.iter().map(|&v| CMat::from_element(1, 1, v)).collect(),
        }
    }

    pub fn trivial(order: usize) -> Self {
        Self::one_dim("trivial", &vec![C64::new(1.0, 0.0); order])
    }
}

/// Unnormalised trace of every image.
pub fn character_of(rep: &MatrixRep) -> Vec<C64> {
    rep.images.iter().map(|m| m.trace()).collect()
}

/// ⟨χ,ψ⟩ = (1/N) Σ χ(x) conj(ψ(x)).
pub fn char_inner(chi: &[C64], psi: &[C64]) -> C64 {
    let s: C64 = chi.iter().zip(psi).map(|(a, b)| a * b.conj()).sum();
    s / chi.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepReport {
    pub homomorphism_residual: f64,
    pub unitarity_residual: f64,
    pub char_norm: f64,
    pub irreducible: bool,
    pub problems: Vec<String>,
}

impl RepReport {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
    }
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Checks a representation against the group table; never fails, the report
/// lists every problem found.
pub fn validate_rep(t: &GroupTable, rep: &MatrixRep) -> RepReport {
    let mut problems = Vec::new();
    if rep.images.len() != t.order() {
        problems.push(format!("{} images for group of order {}", rep.images.len(), t.order()));
        return RepReport {
            homomorphism_residual: f64::INFINITY,
            unitarity_residual: f64::INFINITY,
            char_norm: 0.0,
            irreducible: false,
            problems,
        };
    }
    if let Some(i) = rep.images.iter().position(|m| m.nrows() != rep.dim || m.ncols() != rep.dim) {
        problems.push(format!("image {i} is not {d}x{d}", d = rep.dim));
        return RepReport {
            homomorphism_residual: f64::INFINITY,
            unitarity_residual: f64::INFINITY,
            char_norm: 0.0,
            irreducible: false,
            problems,
        };
    }
    let n = t.order();
    let mut hom = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            let d = &rep.images[t.mul(x, y)] - &rep.images[x] * &rep.images[y];
            hom = hom.max(max_abs(&d));
        }
    }
    let id = CMat::identity(rep.dim, rep.dim);
    let unit = rep
        .images
        .iter()
        .map(|m| max_abs(&(m * m.adjoint() - &id)))
        .fold(0.0, f64::max);
    let chi = character_of(rep);
    let norm = char_inner(&chi, &chi).re;
    let irreducible = (norm - 1.0).abs() <= REP_TOL;
    if hom > REP_TOL {
        problems.push(format!("homomorphism residual {hom:e}"));
    }
    if unit > REP_TOL {
        problems.push(format!("unitarity residual {unit:e}"));
    }
    RepReport { homomorphism_residual: hom, unitarity_residual: unit, char_norm: norm, irreducible, problems }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualCharacter {
    pub values: Vec<C64>,
}

/// All multiplicative characters of an abelian group.
///
/// Built by extending characters along a chain of subgroups H ⊂ ⟨H, x⟩: if k
/// is minimal with x^k ∈ H, a character χ of H extends in exactly k ways,
/// one for each k-th root of χ(x^k).
pub fn dual_group(t: &GroupTable) -> Result<Vec<DualCharacter>> {
    if !t.is_abelian() {
        return Err(Error::InvalidGroup("dual group requested for a non-abelian group".into()));
    }
    let n = t.order();
    let mut in_h = vec![false; n];
    in_h[t.identity()] = true;
    let mut h = vec![t.identity()];
    let mut chars: Vec<Vec<Option<C64>>> = vec![{
        let mut v = vec![None; n];
        v[t.identity()] = Some(C64::new(1.0, 0.0));
        v
    }];
    while let Some(x) = (0..n).find(|&x| !in_h[x]) {
        let mut k = 1;
        let mut xk = x;
        while !in_h[xk] {
            xk = t.mul(xk, x);
            k += 1;
        }
        let mut next = Vec::with_capacity(chars.len() * k);
        for chi in &chars {
            let c = chi[xk].unwrap();
            let base = C64::from_polar(1.0, c.arg() / k as f64);
            for r in 0..k {
                let zeta = base * C64::from_polar(1.0, 2.0 * PI * r as f64 / k as f64);
                let mut ext = chi.clone();
                let mut xj = t.identity();
                let mut zj = C64::new(1.0, 0.0);
                for _ in 0..k {
                    for &hh in &h {
                        ext[t.mul(hh, xj)] = Some(chi[hh].unwrap() * zj);
                    }
                    xj = t.mul(xj, x);
                    zj *= zeta;
                }
                next.push(ext);
            }
        }
        let mut h_next = Vec::with_capacity(h.len() * k);
        let mut xj = t.identity();
        for _ in 0..k {
            for &hh in &h {
                h_next.push(t.mul(hh, xj));
            }
            xj = t.mul(xj, x);
        }
        for &y in &h_next {
            in_h[y] = true;
        }
        h = h_next;
        chars = next;
    }
    Ok(chars
        .into_iter()
        .map(|c| DualCharacter { values: c.into_iter().map(|v| snap(v.unwrap())).collect() })
        .collect())
}

/// Rounds values within 1e-14 of ±1 or ±i onto them.
fn snap(z: C64) -> C64 {
    for u in [C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0)] {
        if (z - u).norm() < 1e-14 {
            return u;
        }
    }
    z
}

/// A base group together with its classes and a list of irreducible unitary
/// representations.
#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    pub name: String,
    pub table: GroupTable,
    pub classes: ConjClasses,
    pub irreps: Vec<MatrixRep>,
}

impl Group {
    /// Validates the table and every supplied representation.
    pub fn new(name: impl Into<String>, table: GroupTable, irreps: Vec<MatrixRep>) -> Result<Self> {
        for rep in &irreps {
            let r = validate_rep(&table, rep);
            if !r.ok() {
                return Err(Error::InvalidRep(format!("{}: {}", rep.name, r.problems.join("; "))));
            }
        }
        let classes = conjugacy_classes(&table);
        Ok(Self { name: name.into(), table, classes, irreps })
    }

    pub fn order(&self) -> usize {
        self.table.order()
    }

    pub fn irrep(&self, name: &str) -> Option<&MatrixRep> {
        self.irreps.iter().find(|r| r.name == name)
    }

    pub fn class_of(&self, x: usize) -> usize {
        self.classes.class_of[x]
    }

    pub fn e(&self) -> usize {
        self.table.identity()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupDescriptor {
    Cyclic(usize),
    Symmetric3,
    Klein4,
}

impl GroupDescriptor {
    /// Accepts `cyclic N`, `zN`, `symmetric 3`, `s3`, `klein4`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim().to_ascii_lowercase();
        let compact: String = t.split_whitespace().collect();
        if compact == "symmetric3" || compact == "s3" {
            return Ok(Self::Symmetric3);
        }
        if compact == "klein4" || compact == "v4" {
            return Ok(Self::Klein4);
        }
        let digits = compact.strip_prefix("cyclic").or_else(|| compact.strip_prefix('z'));
        if let Some(d) = digits {
            if let Ok(n) = d.parse::<usize>() {
                return Ok(Self::Cyclic(n));
            }
        }
        Err(Error::Config(format!("unknown group descriptor '{text}'")))
    }
}

pub fn build_group(desc: &GroupDescriptor) -> Result<Group> {
    match *desc {
        GroupDescriptor::Cyclic(n) => cyclic(n),
        GroupDescriptor::Symmetric3 => symmetric3(),
        GroupDescriptor::Klein4 => klein4(),
    }
}

fn cyclic(n: usize) -> Result<Group> {
    if n == 0 || n > 64 {
        return Err(Error::InvalidGroup(format!("cyclic order {n} outside 1..=64")));
    }
    let mult = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
    let names = (0..n)
        .map(|k| match k {
            0 => "e".to_string(),
            1 => "g".to_string(),
            _ => format!("g{k}"),
        })
        .collect();
    let table = GroupTable::new(mult, Some(names))?.with_aliases(vec![("g1".into(), 1 % n)]);
    let irreps = (0..n)
        .map(|j| {
            let vals: Vec<C64> = (0..n).map(|x| root_of_unity(j * x, n)).collect();
            let name = match (n, j) {
                (_, 0) => "trivial".to_string(),
                (2, 1) => "sign".to_string(),
                _ => format!("chi{j}"),
            };
            MatrixRep::one_dim(name, &vals)
        })
        .collect();
    Group::new(format!("cyclic {n}"), table, irreps)
}

/// exp(2πi k/n), snapped to exact values on the real and imaginary axes.
pub fn root_of_unity(k: usize, n: usize) -> C64 {
    let k = k % n;
    if 4 * k % n == 0 {
        return match 4 * k / n {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
    }
    C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)
}

/// Permutations of {0,1,2} in lexicographic order; product is composition
/// (ab)(i) = a(b(i)).
fn symmetric3() -> Result<Group> {
    let perms: Vec<[usize; 3]> = vec![[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let names = ["e", "t23", "t12", "r", "r2", "t13"].iter().map(|s| s.to_string()).collect();
    let idx = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
    let mult = perms
        .iter()
        .map(|a| perms.iter().map(|b| idx([a[b[0]], a[b[1]], a[b[2]]])).collect())
        .collect();
    let table = GroupTable::new(mult, Some(names))?;
    let one = C64::new(1.0, 0.0);
    let sign: Vec<C64> = perms
        .iter()
        .map(|p| {
            let inversions = (0..3).flat_map(|i| (i + 1..3).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
            if inversions % 2 == 0 { one } else { -one }
        })
        .collect();
    // Permutation matrices compressed to the orthogonal complement of (1,1,1).
    let s2 = 2f64.sqrt();
    let s6 = 6f64.sqrt();
    let basis = nalgebra::Matrix3x2::new(1.0 / s2, 1.0 / s6, -1.0 / s2, 1.0 / s6, 0.0, -2.0 / s6);
    let standard = perms
        .iter()
        .map(|p| {
            let mut pm = nalgebra::Matrix3::<f64>::zeros();
            for i in 0..3 {
                pm[(p[i], i)] = 1.0;
            }
            let m = basis.transpose() * pm * basis;
            CMat::from_fn(2, 2, |r, c| C64::new(m[(r, c)], 0.0))
        })
        .collect();
    let irreps = vec![
        MatrixRep::trivial(6),
        MatrixRep::one_dim("sign", &sign),
        MatrixRep { name: "standard".into(), dim: 2, images: standard },
    ];
    Group::new("symmetric 3", table, irreps)
}

/// ℤ₂×ℤ₂ with index 2a+b for the pair (a,b).
fn klein4() -> Result<Group> {
    let mult = (0..4).map(|x: usize| (0..4).map(|y: usize| x ^ y).collect()).collect();
    let names = ["00", "01", "10", "11"].iter().map(|s| s.to_string()).collect();
    let table = GroupTable::new(mult, Some(names))?;
    let irreps = (0..4)
        .map(|c: usize| {
            let vals: Vec<C64> = (0..4)
                .map(|x: usize| if (c & x).count_ones() % 2 == 0 { C64::new(1.0, 0.0) } else { C64::new(-1.0, 0.0) })
                .collect();
            let name = if c == 0 { "trivial".to_string() } else { format!("chi{}{}", c >> 1, c & 1) };
            MatrixRep::one_dim(name, &vals)
        })
        .collect();
    Group::new("klein4", table, irreps)
}

fn bad(field: &str) -> Error {
    Error::Config(format!("group file: missing or malformed field '{field}'"))
}

/// Parses the group file format
/// `{"name", "order", "mult", "irreps": [{"name", "dim", "matrices"}]}`
/// with an optional `"elements"` list of names.
pub fn group_from_json(v: &Value) -> Result<Group> {
    let name = v.get("name").and_then(Value::as_str).ok_or_else(|| bad("name"))?;
    let order = v.get("order").and_then(Value::as_u64).ok_or_else(|| bad("order"))? as usize;
    let mult: Vec<Vec<usize>> = v
        .get("mult")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("mult"))?
        .iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| bad("mult"))?
                .iter()
                .map(|x| x.as_u64().map(|u| u as usize).ok_or_else(|| bad("mult")))
                .collect()
        })
        .collect::<Result<_>>()?;
    if mult.len() != order {
        return Err(Error::Config(format!("group file: order {order} but mult has {} rows", mult.len())));
    }
    let names = match v.get("elements") {
        Some(e) => Some(
            e.as_array()
                .ok_or_else(|| bad("elements"))?
                .iter()
                .map(|s| s.as_str().map(str::to_string).ok_or_else(|| bad("elements")))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    let table = GroupTable::new(mult, names)?;
    let mut irreps = Vec::new();
    for r in v.get("irreps").and_then(Value::as_array).ok_or_else(|| bad("irreps"))? {
        let rname = r.get("name").and_then(Value::as_str).ok_or_else(|| bad("irreps.name"))?;
        let dim = r.get("dim").and_then(Value::as_u64).ok_or_else(|| bad("irreps.dim"))? as usize;
        let mats = r.get("matrices").and_then(Value::as_array).ok_or_else(|| bad("irreps.matrices"))?;
        let mut images = Vec::new();
        for m in mats {
            let rows = m.as_array().ok_or_else(|| bad("irreps.matrices"))?;
            if rows.len() != dim {
                return Err(Error::Config(format!("irrep {rname}: matrix with {} rows, dim {dim}", rows.len())));
            }
            let mut cm = CMat::zeros(dim, dim);
            for (i, row) in rows.iter().enumerate() {
                let entries = row.as_array().filter(|a| a.len() == dim).ok_or_else(|| bad("irreps.matrices"))?;
                for (j, z) in entries.iter().enumerate() {
                    let pair = z.as_array().filter(|a| a.len() == 2).ok_or_else(|| bad("irreps.matrices"))?;
                    let re = pair[0].as_f64().ok_or_else(|| bad("irreps.matrices"))?;
                    let im = pair[1].as_f64().ok_or_else(|| bad("irreps.matrices"))?;
                    cm[(i, j)] = C64::new(re, im);
                }
            }
            images.push(cm);
        }
        let rep = MatrixRep { name: rname.to_string(), dim, images };
        let report = validate_rep(&table, &rep);
        if !report.irreducible {
            return Err(Error::InvalidRep(format!("{rname}: ⟨χ,χ⟩ = {} (not irreducible)", report.char_norm)));
        }
        irreps.push(rep);
    }
    Group::new(name, table, irreps)
}

pub fn group_to_json(g: &Group) -> Value {
    let irreps: Vec<Value> = g
        .irreps
        .iter()
        .map(|r| {
            let mats: Vec<Value> = r
                .images
                .iter()
                .map(|m| {
                    Value::Array(
                        (0..r.dim)
                            .map(|i| Value::Array((0..r.dim).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect()))
                            .collect(),
                    )
                })
                .collect();
            json!({"name": r.name, "dim": r.dim, "matrices": mats})
        })
        .collect();
    let names: Vec<&str> = (0..g.order()).map(|i| g.table.name(i)).collect();
    json!({
        "name": g.name,
        "order": g.order(),
        "mult": g.table.mult_table(),
        "elements": names,
        "irreps": irreps,
    })
}

/// Resolves a group reference: a built-in descriptor or a path to a group file.
pub fn resolve_group(reference: &str) -> Result<Group> {
    if let Ok(d) = GroupDescriptor::parse(reference) {
        return build_group(&d);
    }
    let text = std::fs::read_to_string(reference)
        .map_err(|e| Error::Config(format!("group '{reference}': not a built-in name and unreadable as a file ({e})")))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("group file {reference}: {e}")))?;
    group_from_json(&v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(n: usize) -> Group {
        build_group(&GroupDescriptor::Cyclic(n)).unwrap()
    }

    #[test]
    fn cyclic_tables() {
        let g2 = z(2);
        assert_eq!(g2.table.mult_table(), &[vec![0, 1], vec![1, 0]]);
        assert_eq!(g2.e(), 0);
        let g3 = z(3);
        assert_eq!((0..3).map(|x| g3.table.inv(x)).collect::<Vec<_>>(), vec![0, 2, 1]);
        assert!(build_group(&GroupDescriptor::Cyclic(65)).is_err());
    }

    #[test]
    fn s3_matches_brute_force_composition() {
        let g = build_group(&GroupDescriptor::Symmetric3).unwrap();
        assert_eq!(g.order(), 6);
        // Independent tabulation: act on the list [0,1,2] directly.
        let all: Vec<Vec<usize>> = vec![
            vec![0, 1, 2], vec![0, 2, 1], vec![1, 0, 2], vec![1, 2, 0], vec![2, 0, 1], vec![2, 1, 0],
        ];
        for (a, pa) in all.iter().enumerate() {
            for (b, pb) in all.iter().enumerate() {
                let c: Vec<usize> = (0..3).map(|i| pa[pb[i]]).collect();
                assert_eq!(all[g.table.mul(a, b)], c);
            }
        }
    }

    #[test]
    fn class_partitions() {
        let s3 = build_group(&GroupDescriptor::Symmetric3).unwrap();
        let sizes: Vec<usize> = (0..s3.classes.count()).map(|c| s3.classes.members(c).len()).collect();
        assert_eq!(sizes, vec![1, 3, 2]);
        assert_eq!(z(2).classes.count(), 2);
        assert_eq!(build_group(&GroupDescriptor::Klein4).unwrap().classes.count(), 4);
    }

    #[test]
    fn rejects_bad_tables() {
        let e = GroupTable::new(vec![vec![0, 1], vec![1, 1]], None).unwrap_err();
        assert!(e.to_string().contains("row 1"));
        // Latin square without associativity: the loop of order 5 below.
        let l = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        let e = GroupTable::new(l, None).unwrap_err();
        assert!(e.to_string().contains("triple"), "{e}");
        let no_id = vec![vec![0, 2, 1], vec![2, 1, 0], vec![1, 0, 2]];
        assert!(GroupTable::new(no_id, None).is_err());
    }

    #[test]
    fn characters_and_reports() {
        let g2 = z(2);
        let sign = g2.irrep("sign").unwrap();
        assert_eq!(character_of(sign)[1], C64::new(-1.0, 0.0));
        assert_eq!(character_of(g2.irrep("trivial").unwrap())[1], C64::new(1.0, 0.0));
        let s3 = build_group(&GroupDescriptor::Symmetric3).unwrap();
        let std = s3.irrep("standard").unwrap();
        assert!((character_of(std)[0].re - 2.0).abs() < 1e-15);
        for rep in &s3.irreps {
            let r = validate_rep(&s3.table, rep);
            assert!(r.ok() && r.irreducible, "{r:?}");
        }
        let r = validate_rep(&g2.table, &MatrixRep::trivial(2));
        assert_eq!((r.homomorphism_residual, r.unitarity_residual), (0.0, 0.0));
        // trivial ⊕ sign
        let sum = MatrixRep {
            name: "sum".into(),
            dim: 2,
            images: vec![CMat::identity(2, 2), CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]))],
        };
        let r = validate_rep(&g2.table, &sum);
        assert!(r.ok());
        assert!((r.char_norm - 2.0).abs() < 1e-12 && !r.irreducible);
    }

    #[test]
    fn character_is_class_function() {
        let s3 = build_group(&GroupDescriptor::Symmetric3).unwrap();
        for rep in &s3.irreps {
            let chi = character_of(rep);
            for x in 0..6 {
                for g in 0..6 {
                    assert!((chi[x] - chi[s3.table.conj(g, x)]).norm() <= 1e-12);
                }
            }
        }
    }

    fn assert_orthonormal_dual(t: &GroupTable) {
        let d = dual_group(t).unwrap();
        assert_eq!(d.len(), t.order());
        for (i, a) in d.iter().enumerate() {
            for x in 0..t.order() {
                for y in 0..t.order() {
                    assert!((a.values[t.mul(x, y)] - a.values[x] * a.values[y]).norm() < 1e-10);
                }
            }
            for (j, b) in d.iter().enumerate() {
                let ip = char_inner(&a.values, &b.values);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn dual_groups() {
        let d2 = dual_group(&z(2).table).unwrap();
        assert_eq!(d2[1].values, vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]);
        let d3 = dual_group(&z(3).table).unwrap();
        for c in &d3 {
            for v in &c.values {
                assert!((v.powu(3) - 1.0).norm() < 1e-12);
            }
        }
        for n in [1, 2, 3, 4, 6, 12] {
            assert_orthonormal_dual(&z(n).table);
        }
        let k4 = build_group(&GroupDescriptor::Klein4).unwrap();
        assert_orthonormal_dual(&k4.table);
        for c in dual_group(&k4.table).unwrap() {
            assert!(c.values.iter().all(|v| v.im.abs() < 1e-12));
        }
        let s3 = build_group(&GroupDescriptor::Symmetric3).unwrap();
        assert!(dual_group(&s3.table).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s3 = build_group(&GroupDescriptor::Symmetric3).unwrap();
        let back = group_from_json(&group_to_json(&s3)).unwrap();
        assert_eq!(back.table.mult_table(), s3.table.mult_table());
        assert_eq!(back.table.name(3), "r");
        assert_eq!(back.irreps.len(), 3);
    }

    #[test]
    fn descriptors() {
        assert_eq!(GroupDescriptor::parse("cyclic 5").unwrap(), GroupDescriptor::Cyclic(5));
        assert_eq!(GroupDescriptor::parse("Z3").unwrap(), GroupDescriptor::Cyclic(3));
        assert_eq!(GroupDescriptor::parse("symmetric 3").unwrap(), GroupDescriptor::Symmetric3);
        assert!(GroupDescriptor::parse("dihedral 4").is_err());
    }
}
