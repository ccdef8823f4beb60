//! Exact arithmetic in Γ≀S∞ with finite support.
//!
//! An element is stored as g = s·γ with s a finitely supported permutation of
//! the positive integers and γ a finitely supported Γ-sequence. The product is
//! (s_g·γ_g)(s_h·γ_h) = s_g s_h · γ' with γ'_i = γ_g[s_h(i)]·γ_h[i], which is the
//! commutation rule s·γ·s⁻¹ = (γ_{s⁻¹(1)}, γ_{s⁻¹(2)}, …) written out.
//! Positions are 1-based and permutations compose as functions, (s∘t)(i) = s(t(i)).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::finite_group::Group;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    map: BTreeMap<usize, usize>,
}

impl Permutation {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Builds a permutation from `(i, s(i))` pairs; fixed points may be listed.
    pub fn from_images(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut targets = BTreeSet::new();
        for (i, j) in pairs {
            if i == 0 || j == 0 {
                return Err(Error::Precondition("positions are 1-based".into()));
            }
            if map.insert(i, j).is_some() || !targets.insert(j) {
                return Err(Error::Precondition(format!("position {i} or {j} used twice")));
            }
        }
        let dom: BTreeSet<usize> = map.keys().copied().collect();
        if dom != targets {
            return Err(Error::Precondition("images do not form a bijection of a finite set".into()));
        }
        map.retain(|i, j| i != j);
        Ok(Self { map })
    }

    /// Product of disjoint cycles, each given as `[a, s(a), s²(a), …]`.
    pub fn from_cycles(cycles: &[Vec<usize>]) -> Result<Self> {
        let mut pairs = Vec::new();
        for c in cycles {
            for (k, &a) in c.iter().enumerate() {
                pairs.push((a, c[(k + 1) % c.len()]));
            }
        }
        Self::from_images(pairs)
    }

    pub fn transposition(k: usize, l: usize) -> Self {
        if k == l {
            return Self::identity();
        }
        Self::from_images([(k, l), (l, k)]).expect("distinct positive positions")
    }

    pub fn apply(&self, i: usize) -> usize {
        *self.map.get(&i).unwrap_or(&i)
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self { map: self.map.iter().map(|(&i, &j)| (j, i)).collect() }
    }

    /// (self ∘ t)(i) = self(t(i)).
    pub fn compose(&self, t: &Self) -> Self {
        let mut map = BTreeMap::new();
        for &i in self.map.keys().chain(t.map.keys()) {
            let j = self.apply(t.apply(i));
            if j != i {
                map.insert(i, j);
            }
        }
        Self { map }
    }

    /// Moved points, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.map.keys().copied()
    }

    pub fn max_support(&self) -> usize {
        self.map.keys().next_back().copied().unwrap_or(0)
    }

    /// Nontrivial cycles, each starting at its minimum, ordered by minimum.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &start in self.map.keys() {
            if seen.contains(&start) {
                continue;
            }
            let mut cyc = vec![start];
            seen.insert(start);
            let mut j = self.apply(start);
            while j != start {
                seen.insert(j);
                cyc.push(j);
                j = self.apply(j);
            }
            out.push(cyc);
        }
        out
    }

    pub fn sign(&self) -> i32 {
        let even = self.cycles().iter().map(|c| c.len() - 1).sum::<usize>() % 2 == 0;
        if even { 1 } else { -1 }
    }

    pub fn images(&self) -> &BTreeMap<usize, usize> {
        &self.map
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "e");
        }
        for c in self.cycles() {
            let parts: Vec<String> = c.iter().map(|x| x.to_string()).collect();
            write!(f, "({})", parts.join(" "))?;
        }
        Ok(())
    }
}

/// Finitely supported Γ-sequence; entries equal to the identity are not stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GammaTuple {
    map: BTreeMap<usize, usize>,
}

impl GammaTuple {
    pub fn identity() -> Self {
        Self::default()
    }

    /// `e` is the identity index of the base group; such entries are dropped.
    pub fn from_entries(entries: impl IntoIterator<Item = (usize, usize)>, e: usize) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, x) in entries {
            if i == 0 {
                return Err(Error::Precondition("positions are 1-based".into()));
            }
            if x != e {
                map.insert(i, x);
            }
        }
        Ok(Self { map })
    }

    pub fn get(&self, i: usize, e: usize) -> usize {
        *self.map.get(&i).unwrap_or(&e)
    }

    pub fn entries(&self) -> &BTreeMap<usize, usize> {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }

    pub fn max_support(&self) -> usize {
        self.map.keys().next_back().copied().unwrap_or(0)
    }

    /// Restriction to the given positions.
    pub fn restrict(&self, positions: &[usize]) -> Self {
        Self { map: positions.iter().filter_map(|p| self.map.get(p).map(|&x| (*p, x))).collect() }
    }
}

/// An element s·γ of Γ≀S∞.
#[derive(Clone, Debug)]
pub struct WreathElement {
    group: Arc<Group>,
    pub perm: Permutation,
    pub tuple: GammaTuple,
}

impl PartialEq for WreathElement {
    fn eq(&self, other: &Self) -> bool {
        self.perm == other.perm && self.tuple == other.tuple && same_group(&self.group, &other.group)
    }
}

impl Eq for WreathElement {}

impl std::hash::Hash for WreathElement {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.perm.hash(state);
        self.tuple.hash(state);
    }
}

pub fn same_group(a: &Arc<Group>, b: &Arc<Group>) -> bool {
    Arc::ptr_eq(a, b) || a.table == b.table
}

impl WreathElement {
    pub fn new(group: Arc<Group>, perm: Permutation, tuple: GammaTuple) -> Self {
        Self { group, perm, tuple }
    }

    pub fn identity(group: Arc<Group>) -> Self {
        Self::new(group, Permutation::identity(), GammaTuple::identity())
    }

    pub fn from_perm(group: Arc<Group>, perm: Permutation) -> Self {
        Self::new(group, perm, GammaTuple::identity())
    }

    pub fn from_tuple(group: Arc<Group>, tuple: GammaTuple) -> Self {
        Self::new(group, Permutation::identity(), tuple)
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    pub fn is_identity(&self) -> bool {
        self.perm.is_identity() && self.tuple.is_identity()
    }

    /// γ_i, the identity index outside the support.
    pub fn gamma(&self, i: usize) -> usize {
        self.tuple.get(i, self.group.e())
    }

    /// Largest position moved by s or carrying a nontrivial entry (0 for e).
    pub fn max_support(&self) -> usize {
        self.perm.max_support().max(self.tuple.max_support())
    }

    pub fn multiply(&self, h: &Self) -> Result<Self> {
        if !same_group(&self.group, &h.group) {
            return Err(Error::GroupMismatch);
        }
        Ok(self.mul_unchecked(h))
    }

    pub(crate) fn mul_unchecked(&self, h: &Self) -> Self {
        let t = &self.group.table;
        let perm = self.perm.compose(&h.perm);
        let hinv = h.perm.inverse();
        let positions: BTreeSet<usize> =
            h.tuple.map.keys().copied().chain(self.tuple.map.keys().map(|&j| hinv.apply(j))).collect();
        let entries = positions.into_iter().map(|i| (i, t.mul(self.gamma(h.perm.apply(i)), h.gamma(i))));
        let tuple = GammaTuple::from_entries(entries, t.identity()).expect("positions are positive");
        Self { group: self.group.clone(), perm, tuple }
    }

    /// (s·γ)⁻¹ = s⁻¹·γ' with γ'_i = γ_{s⁻¹(i)}⁻¹.
    pub fn inverse(&self) -> Self {
        let t = &self.group.table;
        let perm = self.perm.inverse();
        let entries = self.tuple.map.iter().map(|(&j, &x)| (self.perm.apply(j), t.inv(x)));
        let tuple = GammaTuple::from_entries(entries, t.identity()).expect("positions are positive");
        Self { group: self.group.clone(), perm, tuple }
    }

    /// h·self·h⁻¹
    pub fn conjugate_by(&self, h: &Self) -> Result<Self> {
        h.multiply(self)?.multiply(&h.inverse())
    }

    /// Orbits carrying something nontrivial: cycles of s, plus fixed points with
    /// γ_k ≠ e as singletons. Each orbit is listed as `[k, s(k), s²(k), …]`
    /// with k its minimum; orbits are ordered by minimum.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let mut out = self.perm.cycles();
        for &k in self.tuple.map.keys() {
            if self.perm.apply(k) == k {
                out.push(vec![k]);
            }
        }
        out.sort_by_key(|o| o[0]);
        out
    }

    /// Commuting factors s_p·γ(p) whose product is `self`.
    pub fn cycle_decompose(&self) -> Vec<CycleFactor> {
        self.orbits()
            .into_iter()
            .map(|orbit| {
                let perm = if orbit.len() > 1 {
                    Permutation::from_cycles(std::slice::from_ref(&orbit)).expect("orbit of a permutation")
                } else {
                    Permutation::identity()
                };
                let tuple = self.tuple.restrict(&orbit);
                CycleFactor { element: Self::new(self.group.clone(), perm, tuple), orbit }
            })
            .collect()
    }

    /// Cycle product over the orbit `p` with base point k = min(p):
    /// γ_k·γ_{s⁻¹(k)}·γ_{s⁻²(k)}⋯γ_{s^{-|p|+1}(k)}.
    ///
    /// This ordering is the one whose conjugacy class is invariant under
    /// conjugation in Γ≀S∞ for the product rule above. For abelian Γ it agrees
    /// with the forward product γ_k·γ_{s(k)}⋯.
    pub fn cycle_product(&self, p: &[usize]) -> Result<usize> {
        let set: BTreeSet<usize> = p.iter().copied().collect();
        let k = *set.iter().next().ok_or_else(|| Error::Precondition("empty orbit".into()))?;
        let mut orbit = BTreeSet::from([k]);
        let mut j = self.perm.apply(k);
        while j != k {
            orbit.insert(j);
            j = self.perm.apply(j);
        }
        if orbit != set || set.len() != p.len() {
            return Err(Error::Precondition(format!("{p:?} is not an orbit of {}", self.perm)));
        }
        Ok(self.cycle_product_from(k))
    }

    /// Cycle product with an arbitrary base point on its orbit.
    pub fn cycle_product_from(&self, k: usize) -> usize {
        let t = &self.group.table;
        let sinv = self.perm.inverse();
        let mut acc = self.gamma(k);
        let mut j = sinv.apply(k);
        while j != k {
            acc = t.mul(acc, self.gamma(j));
            j = sinv.apply(j);
        }
        acc
    }

    /// The multiset of (|p|, class(γ̃(p))) over orbits, dropping (1, class(e)).
    pub fn invariant(&self) -> ConjInvariant {
        let g = &self.group;
        let mut pairs: Vec<(usize, usize)> = self
            .orbits()
            .into_iter()
            .map(|o| (o.len(), g.class_of(self.cycle_product_from(o[0]))))
            .filter(|&(l, c)| !(l == 1 && c == g.class_of(g.e())))
            .collect();
        pairs.sort_unstable();
        ConjInvariant { pairs }
    }

    /// Conjugates by a Γ-tuple so that each orbit carries at most one
    /// nontrivial entry, sitting at s^{|p|−1}(i) with i = min(p). Returns the
    /// conjugator c and c·g·c⁻¹.
    pub fn normal_form(&self) -> (GammaTuple, Self) {
        let t = &self.group.table;
        let mut entries = Vec::new();
        for orbit in self.perm.cycles() {
            // c_{i} = e, c_{s(j)} = c_j·γ_j⁻¹ along the orbit.
            let mut c = t.identity();
            for w in orbit.windows(2) {
                c = t.mul(c, t.inv(self.gamma(w[0])));
                entries.push((w[1], c));
            }
        }
        let conj = GammaTuple::from_entries(entries, t.identity()).expect("positive positions");
        let c = Self::from_tuple(self.group.clone(), conj.clone());
        let normalized = c.mul_unchecked(self).mul_unchecked(&c.inverse());
        (conj, normalized)
    }

    /// s(l) = l and γ_l = e for all l ≤ n.
    pub fn in_gn_infty(&self, n: usize) -> bool {
        self.perm.support().all(|i| i > n) && self.tuple.map.keys().all(|&i| i > n)
    }

    /// Renders in the element grammar; `parse_element` inverts this.
    pub fn format(&self) -> String {
        let t = &self.group.table;
        let mut s = String::new();
        if !self.perm.is_identity() {
            s.push_str(&self.perm.to_string());
        }
        if !self.tuple.is_identity() {
            let labels: Vec<String> = self.tuple.map.iter().map(|(i, &x)| format!("{i}:{}", t.name(x))).collect();
            s.push('[');
            s.push_str(&labels.join(","));
            s.push(']');
        }
        if s.is_empty() {
            s.push('e');
        }
        s
    }
}

impl fmt::Display for WreathElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleFactor {
    pub orbit: Vec<usize>,
    pub element: WreathElement,
}

/// Canonical finite form of the conjugacy invariant: sorted (length, class id).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConjInvariant {
    pub pairs: Vec<(usize, usize)>,
}

/// Finds γ̃ with γ̃·a·γ̃⁻¹ = b for two elements sharing one cycle as their
/// permutation part, or `None` if they are not conjugate.
pub fn same_cycle_conjugator(a: &WreathElement, b: &WreathElement) -> Result<Option<GammaTuple>> {
    if !same_group(a.group(), b.group()) {
        return Err(Error::GroupMismatch);
    }
    if a.perm != b.perm {
        return Err(Error::Precondition("permutation parts differ".into()));
    }
    let cycles = a.perm.cycles();
    let orbit: Vec<usize> = match cycles.len() {
        1 => cycles[0].clone(),
        0 => {
            let pos: BTreeSet<usize> = a.tuple.map.keys().chain(b.tuple.map.keys()).copied().collect();
            if pos.len() > 1 {
                return Err(Error::Precondition("tuples live on more than one fixed point".into()));
            }
            pos.into_iter().collect()
        }
        _ => return Err(Error::Precondition("permutation part is not a single cycle".into())),
    };
    for t in [&a.tuple, &b.tuple] {
        if t.map.keys().any(|k| !orbit.contains(k)) {
            return Err(Error::Precondition("tuple supported outside the cycle".into()));
        }
    }
    let g = a.group().clone();
    let t = &g.table;
    if orbit.is_empty() {
        return Ok(Some(GammaTuple::identity()));
    }
    let (ca, na) = a.normal_form();
    let (cb, nb) = b.normal_form();
    let last = *orbit.last().unwrap();
    let (xa, xb) = (na.gamma(last), nb.gamma(last));
    let Some(y) = (0..t.order()).find(|&y| t.conj(y, xa) == xb) else {
        return Ok(None);
    };
    // cb⁻¹ · (y on the orbit) · ca
    let ca = WreathElement::from_tuple(g.clone(), ca);
    let cb = WreathElement::from_tuple(g.clone(), cb);
    let yt = WreathElement::from_tuple(
        g.clone(),
        GammaTuple::from_entries(orbit.iter().map(|&i| (i, y)), t.identity())?,
    );
    let c = cb.inverse().mul_unchecked(&yt).mul_unchecked(&ca);
    debug_assert!(c.perm.is_identity());
    Ok(Some(c.tuple))
}

/// Block swap ω_m^{(n)}: exchanges n+1..n+m with n+m+1..n+2m.
pub fn omega(n: usize, m: usize) -> Permutation {
    omega2(n, m, m)
}

/// ω_{l,m}^{(n)}: i ↦ i+m on n+1..n+l and i ↦ i−l on n+l+1..n+l+m.
pub fn omega2(n: usize, l: usize, m: usize) -> Permutation {
    let pairs = (n + 1..=n + l + m).map(|i| if i <= n + l { (i, i + m) } else { (i, i - l) });
    Permutation::from_images(pairs).expect("block swap is a bijection")
}

/// ω_M^{(n)} = ω_{m,M−m}^{(n+m)} · ω_m^{(n)} · ω_{M−m,M}^{(n+m)} for M > m ≥ 1.
pub fn omega_identity_holds(n: usize, m: usize, big_m: usize) -> bool {
    assert!(big_m > m && m >= 1, "needs M > m ≥ 1");
    let rhs = omega2(n + m, m, big_m - m).compose(&omega(n, m)).compose(&omega2(n + m, big_m - m, big_m));
    omega(n, big_m) == rhs
}

/// All |Γ|ⁿ·n! elements of Γ≀S_n: permutations in lexicographic order of their
/// image lists, then Γ-tuples in little-endian base-|Γ| order.
pub fn enumerate_elements(group: &Arc<Group>, n: usize) -> Vec<WreathElement> {
    let mut perms = Vec::new();
    let mut cur: Vec<usize> = (1..=n).collect();
    loop {
        perms.push(Permutation::from_images((1..=n).zip(cur.iter().copied())).expect("bijection"));
        let Some(i) = (1..cur.len()).rev().find(|&i| cur[i - 1] < cur[i]) else { break };
        let j = (i..cur.len()).rev().find(|&j| cur[j] > cur[i - 1]).expect("pivot exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    let order = group.order();
    let tuples = order.pow(n as u32);
    let mut out = Vec::with_capacity(perms.len() * tuples);
    for perm in &perms {
        for code in 0..tuples {
            let mut c = code;
            let entries = (1..=n).map(|i| {
                let x = c % order;
                c /= order;
                (i, x)
            });
            let tuple = GammaTuple::from_entries(entries.collect::<Vec<_>>(), group.e()).expect("positive positions");
            out.push(WreathElement::new(group.clone(), perm.clone(), tuple));
        }
    }
    out
}

/// Conjugacy class labels of a finite subgroup listed in full, by brute force:
/// label\[i\] = label\[j\] iff h·elements\[i\]·h⁻¹ = elements\[j\] for some listed h.
pub fn brute_force_classes(elements: &[WreathElement]) -> Vec<usize> {
    let index: HashMap<&WreathElement, usize> = elements.iter().enumerate().map(|(i, g)| (g, i)).collect();
    let mut label = vec![usize::MAX; elements.len()];
    let mut next = 0;
    for i in 0..elements.len() {
        if label[i] != usize::MAX {
            continue;
        }
        for h in elements {
            let c = h.mul_unchecked(&elements[i]).mul_unchecked(&h.inverse());
            label[index[&c]] = next;
        }
        next += 1;
    }
    label
}

/// Number of orbits of s on {1, …, m}, fixed points included.
pub fn orbit_count(s: &Permutation, m: usize) -> Result<usize> {
    if s.max_support() > m {
        return Err(Error::Precondition(format!("support of {s} exceeds {m}")));
    }
    let moved: usize = s.cycles().iter().map(|c| c.len()).sum();
    Ok(m - moved + s.cycles().len())
}

/// Parses `e`, `(1 2 3)(4 5)[1:g,4:h]` or a bare label list `[2:g]`.
pub fn parse_element(text: &str, group: &Arc<Group>) -> Result<WreathElement> {
    Parser { s: text.as_bytes(), pos: 0 }.element(group)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn int(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some(b'-') {
            return self.err("positions must be positive");
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected a position");
        }
        let v: usize = std::str::from_utf8(&self.s[start..self.pos]).unwrap().parse().map_err(|_| Error::Parse {
            pos: start,
            msg: "position out of range".into(),
        })?;
        if v == 0 {
            self.pos = start;
            return self.err("positions are 1-based");
        }
        Ok(v)
    }

    fn element(&mut self, group: &Arc<Group>) -> Result<WreathElement> {
        self.skip_ws();
        if self.peek() == Some(b'e') {
            self.pos += 1;
            self.skip_ws();
            if self.pos != self.s.len() {
                return self.err("trailing input after 'e'");
            }
            return Ok(WreathElement::identity(group.clone()));
        }
        let mut cycles: Vec<Vec<usize>> = Vec::new();
        let mut used = BTreeSet::new();
        loop {
            self.skip_ws();
            if self.peek() != Some(b'(') {
                break;
            }
            self.pos += 1;
            let mut cyc = Vec::new();
            loop {
                self.skip_ws();
                if self.peek() == Some(b')') {
                    self.pos += 1;
                    break;
                }
                let at = self.pos;
                let v = self.int()?;
                if !used.insert(v) {
                    self.pos = at;
                    return self.err(format!("position {v} appears twice in the cycles"));
                }
                cyc.push(v);
            }
            if cyc.len() < 2 {
                return self.err("a cycle needs at least two positions");
            }
            cycles.push(cyc);
        }
        let e = group.e();
        let mut entries = BTreeMap::new();
        self.skip_ws();
        if self.peek() == Some(b'[') {
            self.pos += 1;
            loop {
                let at = self.pos;
                let p = self.int()?;
                self.expect(b':')?;
                self.skip_ws();
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_' || c == b'-') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
                if name.is_empty() {
                    return self.err("expected a group element label");
                }
                let Some(x) = group.table.lookup(name) else {
                    self.pos = start;
                    return self.err(format!("'{name}' is not an element of {}", group.name));
                };
                if entries.insert(p, x).is_some() {
                    self.pos = at;
                    return self.err(format!("position {p} labelled twice"));
                }
                self.skip_ws();
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b']') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return self.err("expected ',' or ']'"),
                }
            }
        } else if cycles.is_empty() {
            return self.err("expected 'e', a cycle or a label list");
        }
        self.skip_ws();
        if self.pos != self.s.len() {
            return self.err("trailing input");
        }
        let perm = Permutation::from_cycles(&cycles)?;
        let tuple = GammaTuple::from_entries(entries, e)?;
        Ok(WreathElement::new(group.clone(), perm, tuple))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_group::{build_group, GroupDescriptor};

    fn grp(d: GroupDescriptor) -> Arc<Group> {
        Arc::new(build_group(&d).unwrap())
    }

    fn el(g: &Arc<Group>, s: &str) -> WreathElement {
        parse_element(s, g).unwrap()
    }

    /// Oracle: the monomial action (i, x) ↦ (s(i), γ_i·x) on positions × Γ.
    fn act(g: &WreathElement, i: usize, x: usize) -> (usize, usize) {
        (g.perm.apply(i), g.group().table.mul(g.gamma(i), x))
    }

    #[test]
    fn product_matches_monomial_action() {
        let z2 = grp(GroupDescriptor::Cyclic(2));
        let p = el(&z2, "(1 2)[1:g]").multiply(&el(&z2, "(2 3)[2:g]")).unwrap();
        assert_eq!(p, el(&z2, "(1 2 3)[1:g,2:g]"));
        let s3 = grp(GroupDescriptor::Symmetric3);
        let a = el(&s3, "(1 3 2)[1:t12,2:r,4:t13]");
        let b = el(&s3, "(2 4)[2:r2,3:t23]");
        let ab = a.multiply(&b).unwrap();
        for i in 1..6 {
            for x in 0..6 {
                let (j, y) = act(&b, i, x);
                assert_eq!(act(&ab, i, x), act(&a, j, y));
            }
        }
    }

    #[test]
    fn inverse_and_identity() {
        let s3 = grp(GroupDescriptor::Symmetric3);
        let e = WreathElement::identity(s3.clone());
        let g = el(&s3, "(1 2 3)[1:t12]");
        assert_eq!(g.multiply(&e).unwrap(), g);
        assert!(g.multiply(&g.inverse()).unwrap().is_identity());
        assert!(g.inverse().multiply(&g).unwrap().is_identity());
        assert_eq!(e.inverse(), e);
        let pure = el(&s3, "[1:r,3:t12]");
        assert_eq!(pure.inverse(), el(&s3, "[1:r2,3:t12]"));
    }

    #[test]
    fn mismatched_groups() {
        let a = el(&grp(GroupDescriptor::Cyclic(2)), "(1 2)");
        let b = el(&grp(GroupDescriptor::Cyclic(3)), "(1 2)");
        assert_eq!(a.multiply(&b), Err(Error::GroupMismatch));
    }

    #[test]
    fn decomposition_examples() {
        let z2 = grp(GroupDescriptor::Cyclic(2));
        assert!(WreathElement::identity(z2.clone()).cycle_decompose().is_empty());
        let g = el(&z2, "(1 2)(3 4)[3:g]");
        let f = g.cycle_decompose();
        assert_eq!(f.len(), 2);
        assert_eq!(f[0].element, el(&z2, "(1 2)"));
        assert_eq!(f[1].element, el(&z2, "(3 4)[3:g]"));
        let t = el(&z2, "[1:g,5:g]").cycle_decompose();
        assert_eq!(t.iter().map(|c| c.orbit.clone()).collect::<Vec<_>>(), vec![vec![1], vec![5]]);
    }

    #[test]
    fn cycle_products() {
        let s3 = grp(GroupDescriptor::Symmetric3);
        let t = &s3.table;
        let (a, b, c) = (t.lookup("t12").unwrap(), t.lookup("r").unwrap(), t.lookup("t13").unwrap());
        let g = el(&s3, "(1 2 3)[1:t12,2:r,3:t13]");
        // base point 1, walking backwards along s: γ_1 γ_3 γ_2
        assert_eq!(g.cycle_product(&[1, 2, 3]).unwrap(), t.mul(t.mul(a, c), b));
        for k in [2, 3] {
            assert_eq!(s3.class_of(g.cycle_product_from(k)), s3.class_of(g.cycle_product_from(1)));
        }
        assert!(g.cycle_product(&[1, 2]).is_err());
        let z2 = grp(GroupDescriptor::Cyclic(2));
        assert_eq!(el(&z2, "[4:g]").cycle_product(&[4]).unwrap(), 1);
    }

    #[test]
    fn invariant_examples() {
        let z2 = grp(GroupDescriptor::Cyclic(2));
        assert!(WreathElement::identity(z2.clone()).invariant().pairs.is_empty());
        assert_eq!(el(&z2, "(1 2 3)[1:g]").invariant().pairs, vec![(3, 1)]);
        assert_eq!(el(&z2, "(1 2 3)[1:g,2:g]").invariant().pairs, vec![(3, 0)]);
    }

    #[test]
    fn normal_form_examples() {
        let s3 = grp(GroupDescriptor::Symmetric3);
        let t = &s3.table;
        let (a, b) = (t.lookup("t12").unwrap(), t.lookup("r").unwrap());
        let g = el(&s3, "(1 2)[1:t12,2:r]");
        let (c, n) = g.normal_form();
        assert_eq!(n.perm, g.perm);
        assert_eq!(n.gamma(1), t.identity());
        assert_eq!(n.gamma(2), t.mul(b, a));
        let cw = WreathElement::from_tuple(s3.clone(), c);
        assert_eq!(g.conjugate_by(&cw).unwrap(), n);
        let already = el(&s3, "(1 2 3)[3:r]");
        assert!(already.normal_form().0.is_identity());
    }

    #[test]
    fn contigu_examples() {
        let z3 = grp(GroupDescriptor::Cyclic(3));
        let a = el(&z3, "(1 2)[1:g]");
        let b = el(&z3, "(1 2)[2:g]");
        let c = same_cycle_conjugator(&a, &b).unwrap().unwrap();
        assert_eq!(a.conjugate_by(&WreathElement::from_tuple(z3.clone(), c)).unwrap(), b);
        assert_eq!(same_cycle_conjugator(&a, &a).unwrap(), Some(GammaTuple::identity()));
        let z2 = grp(GroupDescriptor::Cyclic(2));
        assert_eq!(same_cycle_conjugator(&el(&z2, "(1 2)[1:g]"), &el(&z2, "(1 2)")).unwrap(), None);
        assert!(same_cycle_conjugator(&el(&z2, "(1 2)(3 4)"), &el(&z2, "(1 2)(3 4)")).is_err());
        assert!(same_cycle_conjugator(&el(&z2, "(1 2)"), &el(&z2, "(1 2)[3:g]")).is_err());
    }

    #[test]
    fn contigu_agrees_with_search_over_gamma_squared() {
        let s3 = grp(GroupDescriptor::Symmetric3);
        let e = s3.e();
        for x in 0..6 {
            for y in 0..6 {
                for u in 0..6 {
                    for v in 0..6 {
                        let a = WreathElement::new(s3.clone(), Permutation::transposition(1, 2), GammaTuple::from_entries([(1, x), (2, y)], e).unwrap());
                        let b = WreathElement::new(s3.clone(), Permutation::transposition(1, 2), GammaTuple::from_entries([(1, u), (2, v)], e).unwrap());
                        let brute = (0..36).any(|k| {
                            let c = WreathElement::from_tuple(s3.clone(), GammaTuple::from_entries([(1, k / 6), (2, k % 6)], e).unwrap());
                            a.conjugate_by(&c).unwrap() == b
                        });
                        let found = same_cycle_conjugator(&a, &b).unwrap();
                        assert_eq!(found.is_some(), brute);
                        if let Some(c) = found {
                            assert_eq!(a.conjugate_by(&WreathElement::from_tuple(s3.clone(), c)).unwrap(), b);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn omega_examples() {
        let w = omega(1, 2);
        let img: Vec<usize> = (1..=7).map(|i| w.apply(i)).collect();
        assert_eq!(img, vec![1, 4, 5, 2, 3, 6, 7]);
        assert!(w.compose(&w).is_identity());
        let lhs = omega(0, 3);
        let rhs = omega2(1, 1, 2).compose(&omega(0, 1)).compose(&omega2(1, 2, 3));
        assert_eq!(lhs, rhs);
        for n in 0..=4 {
            for big_m in 2..=6 {
                for m in 1..big_m {
                    assert!(omega_identity_holds(n, m, big_m), "n={n} m={m} M={big_m}");
                }
            }
        }
    }

    #[test]
    fn orbit_counts() {
        assert_eq!(orbit_count(&Permutation::identity(), 5).unwrap(), 5);
        assert_eq!(orbit_count(&Permutation::from_cycles(&[vec![1, 2, 3]]).unwrap(), 3).unwrap(), 1);
        assert_eq!(orbit_count(&Permutation::from_cycles(&[vec![1, 2], vec![3, 4]]).unwrap(), 6).unwrap(), 4);
        assert!(orbit_count(&Permutation::transposition(1, 7), 6).is_err());
    }

    #[test]
    fn gn_infty() {
        let z2 = grp(GroupDescriptor::Cyclic(2));
        assert!(WreathElement::identity(z2.clone()).in_gn_infty(3));
        assert!(!el(&z2, "(1 2)").in_gn_infty(2));
        assert!(el(&z2, "(5 6)[7:g]").in_gn_infty(4));
    }

    #[test]
    fn parsing() {
        let z3 = grp(GroupDescriptor::Cyclic(3));
        let g = el(&z3, "(1 2 3)[1:g1,3:g2]");
        assert_eq!((g.gamma(1), g.gamma(3)), (1, 2));
        assert!(el(&z3, "e").is_identity());
        assert_eq!(el(&z3, "(1 2)(3 4)[2:g1]").format(), "(1 2)(3 4)[2:g]");
        assert_eq!(el(&z3, " (3 1 2) [ 1 : g , 2:2 ]").format(), "(1 2 3)[1:g,2:g2]");
        for bad in ["(1 0)", "(1 2)[1:x]", "(1 2", "(1)", "(1 2)(2 3)", "[1:g,1:g]", "(1 -2)", "", "e e"] {
            assert!(matches!(parse_element(bad, &z3), Err(Error::Parse { .. })), "{bad}");
        }
        match parse_element("(1 2)[1:q]", &z3) {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn enumeration_and_brute_force_classes() {
        let g = Arc::new(build_group(&GroupDescriptor::Cyclic(2)).unwrap());
        let all = enumerate_elements(&g, 3);
        assert_eq!(all.len(), 48);
        let distinct: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(distinct.len(), 48);
        let labels = brute_force_classes(&all);
        // ℤ₂≀S₃ = hyperoctahedral group B₃ has 10 classes (bipartitions of 3).
        assert_eq!(labels.iter().max().unwrap() + 1, 10);
        for i in 0..all.len() {
            for j in 0..all.len() {
                assert_eq!(labels[i] == labels[j], all[i].invariant() == all[j].invariant());
            }
        }
    }
}
