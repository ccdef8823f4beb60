//! Double cosets K_n(∞)\G×G/K_n(∞): marked pair graphs, admissible diagrams,
//! and the two multiplication routes.
//!
//! A pair g = (s₁γ′, s₂γ″) is drawn with lower vertex i → upper s₂(i) marked
//! (0, γ″_i) and lower −i → upper −s₁(i) marked (0, γ′_i). Diagrams are stored
//! in coherent orientation: positive edges forward, negative edges reversed
//! (with inverted marking), return edges as drawn. Every path then starts in
//! u⁺ ∪ o⁻ and ends in u⁻ ∪ o⁺. Only at display time is a bare negative edge
//! (weight 0, both ends in the window) turned back to its original direction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::finite_group::Group;
use crate::wreath::{omega, parse_element, same_group, GammaTuple, Permutation, WreathElement};

/// (k/2, γ): weight in half units and a group element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking {
    pub halves: u32,
    pub gamma: usize,
}

impl Marking {
    pub fn new(halves: u32, gamma: usize) -> Self {
        Self { halves, gamma }
    }

    /// self·other
    pub fn mul(self, other: Self, group: &Group) -> Self {
        Self { halves: self.halves + other.halves, gamma: group.table.mul(self.gamma, other.gamma) }
    }

    pub fn inverse_gamma(self, group: &Group) -> Self {
        Self { halves: self.halves, gamma: group.table.inv(self.gamma) }
    }
}

pub fn format_halves(h: u32) -> String {
    if h % 2 == 0 { (h / 2).to_string() } else { format!("{h}/2") }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Row {
    /// underlined vertices (bottom line)
    Lower,
    /// overlined vertices (top line)
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    pub row: Row,
    pub index: i64,
}

impl Vertex {
    pub fn lower(index: i64) -> Self {
        Self { row: Row::Lower, index }
    }

    pub fn upper(index: i64) -> Self {
        Self { row: Row::Upper, index }
    }

    /// DOT node name, e.g. "u+3" or "o-2".
    pub fn name(&self) -> String {
        let r = match self.row {
            Row::Lower => 'u',
            Row::Upper => 'o',
        };
        format!("{r}{:+}", self.index)
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// An element (s₁γ′, s₂γ″) of G×G.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PairElement {
    pub neg: WreathElement,
    pub pos: WreathElement,
}

impl PairElement {
    pub fn new(neg: WreathElement, pos: WreathElement) -> Result<Self> {
        if !same_group(neg.group(), pos.group()) {
            return Err(Error::GroupMismatch);
        }
        Ok(Self { neg, pos })
    }

    pub fn identity(group: Arc<Group>) -> Self {
        Self { neg: WreathElement::identity(group.clone()), pos: WreathElement::identity(group) }
    }

    /// g ↦ (e, g)
    pub fn embed(g: WreathElement) -> Self {
        Self { neg: WreathElement::identity(g.group().clone()), pos: g }
    }

    pub fn diagonal(g: WreathElement) -> Self {
        Self { neg: g.clone(), pos: g }
    }

    pub fn group(&self) -> &Arc<Group> {
        self.pos.group()
    }

    pub fn multiply(&self, h: &Self) -> Result<Self> {
        Ok(Self { neg: self.neg.multiply(&h.neg)?, pos: self.pos.multiply(&h.pos)? })
    }

    pub fn inverse(&self) -> Self {
        Self { neg: self.neg.inverse(), pos: self.pos.inverse() }
    }

    pub fn max_support(&self) -> usize {
        self.neg.max_support().max(self.pos.max_support())
    }

    pub fn format(&self) -> String {
        format!("{} | {}", self.neg.format(), self.pos.format())
    }
}

/// "a | b" is the pair (a, b); a single element g is read as (e, g).
pub fn parse_pair(text: &str, group: &Arc<Group>) -> Result<PairElement> {
    match text.split_once('|') {
        Some((a, b)) => PairElement::new(parse_element(a.trim(), group)?, parse_element(b.trim(), group)?),
        None => Ok(PairElement::embed(parse_element(text.trim(), group)?)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedPairGraph {
    pub n_range: usize,
    /// lower i → (upper j, marking), for i ∈ ±1..±N
    pub edges: BTreeMap<i64, (i64, Marking)>,
}

pub fn graph_of(g: &PairElement, n_range: usize) -> Result<MarkedPairGraph> {
    if g.max_support() > n_range {
        return Err(Error::Precondition(format!("N = {n_range} below support {}", g.max_support())));
    }
    let mut edges = BTreeMap::new();
    for i in 1..=n_range {
        let ii = i as i64;
        edges.insert(ii, (g.pos.perm.apply(i) as i64, Marking::new(0, g.pos.gamma(i))));
        edges.insert(-ii, (-(g.neg.perm.apply(i) as i64), Marking::new(0, g.neg.gamma(i))));
    }
    Ok(MarkedPairGraph { n_range, edges })
}

/// gr(top·bottom): bottom's upper line glued to top's lower line.
pub fn compose_graphs(top: &MarkedPairGraph, bottom: &MarkedPairGraph, group: &Group) -> Result<MarkedPairGraph> {
    if top.n_range != bottom.n_range {
        return Err(Error::Precondition("graphs of different range".into()));
    }
    let edges = bottom
        .edges
        .iter()
        .map(|(&i, &(k, mh))| {
            let (j, mg) = top.edges[&k];
            (i, (j, mg.mul(mh, group)))
        })
        .collect();
    Ok(MarkedPairGraph { n_range: top.n_range, edges })
}

/// Admissible diagram at level n. Equality is exact equality of edges with
/// their markings and of the circle multiset.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AdmissibleDiagram {
    pub n: usize,
    /// initial vertex → (terminal vertex, marking), coherent orientation
    pub edges: BTreeMap<Vertex, (Vertex, Marking)>,
    /// (weight in halves, conjugacy class id) → multiplicity; (1, class(e)) omitted
    pub circles: BTreeMap<(u32, usize), usize>,
}

fn add_circle(circles: &mut BTreeMap<(u32, usize), usize>, halves: u32, gamma: usize, group: &Group) {
    let class = group.class_of(gamma);
    if halves == 2 && class == group.class_of(group.e()) {
        return;
    }
    *circles.entry((halves, class)).or_insert(0) += 1;
}

/// θ_n(g) by the four-step construction.
pub fn theta(g: &PairElement, n: usize) -> Result<AdmissibleDiagram> {
    let group = g.group().clone();
    let big = g.max_support().max(n) + 2;
    let gr = graph_of(g, big)?;
    let nn = n as i64;
    // reverse lookup for negative edges: upper −j ← lower −i
    let mut neg_from: BTreeMap<i64, (i64, Marking)> = BTreeMap::new();
    for (&i, &(j, m)) in &gr.edges {
        if i < 0 {
            neg_from.insert(j, (i, m));
        }
    }
    let step = |v: Vertex| -> Option<(Vertex, Marking)> {
        match (v.row, v.index > 0) {
            (Row::Lower, true) => {
                let (j, m) = gr.edges[&v.index];
                Some((Vertex::upper(j), m))
            }
            (Row::Upper, false) => {
                let (i, m) = neg_from[&v.index];
                Some((Vertex::lower(i), m.inverse_gamma(&group)))
            }
            (Row::Lower, false) if -v.index > nn => Some((Vertex::lower(-v.index), Marking::new(1, group.e()))),
            (Row::Upper, true) if v.index > nn => Some((Vertex::upper(-v.index), Marking::new(1, group.e()))),
            _ => None,
        }
    };
    let mut visited: BTreeSet<Vertex> = BTreeSet::new();
    let mut edges = BTreeMap::new();
    let starts = (1..=nn).map(Vertex::lower).chain((1..=nn).map(|j| Vertex::upper(-j)));
    for s in starts {
        let mut v = s;
        let mut acc = Marking::new(0, group.e());
        visited.insert(v);
        while let Some((w, m)) = step(v) {
            acc = m.mul(acc, &group);
            v = w;
            visited.insert(v);
        }
        edges.insert(s, (v, acc));
    }
    let mut circles = BTreeMap::new();
    let all = (1..=big as i64).flat_map(|i| [Vertex::lower(i), Vertex::lower(-i), Vertex::upper(i), Vertex::upper(-i)]);
    let outside: Vec<Vertex> = all.filter(|v| v.index.abs() > nn).collect();
    for s in outside {
        if visited.contains(&s) {
            continue;
        }
        let mut v = s;
        let mut acc = Marking::new(0, group.e());
        loop {
            visited.insert(v);
            let (w, m) = step(v).expect("outside vertices have degree two");
            acc = m.mul(acc, &group);
            v = w;
            if v == s {
                break;
            }
        }
        add_circle(&mut circles, acc.halves, acc.gamma, &group);
    }
    Ok(AdmissibleDiagram { n, edges, circles })
}

/// Pastes `top` over `bottom`: bottom's upper window is glued to top's lower window.
pub fn mult_diagram(top: &AdmissibleDiagram, bottom: &AdmissibleDiagram, group: &Group) -> Result<AdmissibleDiagram> {
    if top.n != bottom.n {
        return Err(Error::Precondition(format!("level mismatch: {} vs {}", top.n, bottom.n)));
    }
    // (layer, vertex); layer 0 = bottom, 1 = top; glued vertices live in layer 1 as lower vertices
    let norm = |layer: u8, v: Vertex| -> (u8, Vertex) {
        if layer == 0 && v.row == Row::Upper { (1, Vertex::lower(v.index)) } else { (layer, v) }
    };
    let mut next: BTreeMap<(u8, Vertex), ((u8, Vertex), Marking)> = BTreeMap::new();
    for (layer, d) in [(0u8, bottom), (1u8, top)] {
        for (&a, &(b, m)) in &d.edges {
            next.insert(norm(layer, a), (norm(layer, b), m));
        }
    }
    let glued = |x: &(u8, Vertex)| x.0 == 1 && x.1.row == Row::Lower;
    let mut visited = BTreeSet::new();
    let mut edges = BTreeMap::new();
    let starts: Vec<(u8, Vertex)> = next.keys().copied().filter(|x| !glued(x)).collect();
    for s in starts {
        let mut v = s;
        let mut acc = Marking::new(0, group.e());
        while let Some(&(w, m)) = next.get(&v) {
            visited.insert(v);
            acc = m.mul(acc, group);
            v = w;
            if !glued(&v) {
                break;
            }
        }
        let out = |x: (u8, Vertex)| x.1;
        edges.insert(out(s), (out(v), acc));
    }
    let mut circles = BTreeMap::new();
    for (&c, &k) in top.circles.iter().chain(bottom.circles.iter()) {
        *circles.entry(c).or_insert(0) += k;
    }
    let rest: Vec<(u8, Vertex)> = next.keys().copied().filter(|x| glued(x) && !visited.contains(x)).collect();
    for s in rest {
        if visited.contains(&s) {
            continue;
        }
        let mut v = s;
        let mut acc = Marking::new(0, group.e());
        loop {
            visited.insert(v);
            let (w, m) = next[&v];
            acc = m.mul(acc, group);
            v = w;
            if v == s {
                break;
            }
        }
        add_circle(&mut circles, acc.halves, acc.gamma, group);
    }
    Ok(AdmissibleDiagram { n: top.n, edges, circles })
}

/// A double coset with a stored representative.
#[derive(Clone, Debug)]
pub struct Coset {
    pub rep: PairElement,
    pub diagram: AdmissibleDiagram,
}

impl Coset {
    pub fn new(rep: PairElement, n: usize) -> Result<Self> {
        let diagram = theta(&rep, n)?;
        Ok(Self { rep, diagram })
    }

    pub fn n(&self) -> usize {
        self.diagram.n
    }
}

/// Shift size that separates the outside supports of both factors.
pub fn default_shift(g: &PairElement, h: &PairElement, n: usize) -> usize {
    (g.max_support().max(h.max_support()).max(n) - n).max(1)
}

/// θ_n(g·(ω,ω)·h) with ω = ω_m^{(n)}.
pub fn mult_repr_with(g: &PairElement, h: &PairElement, n: usize, m: usize) -> Result<Coset> {
    let group = g.group().clone();
    let w = WreathElement::from_perm(group, omega(n, m));
    let ww = PairElement::diagonal(w);
    let rep = g.multiply(&ww)?.multiply(h)?;
    Coset::new(rep, n)
}

pub fn mult_repr(a: &Coset, b: &Coset) -> Result<Coset> {
    if a.n() != b.n() {
        return Err(Error::Precondition(format!("level mismatch: {} vs {}", a.n(), b.n())));
    }
    let m = default_shift(&a.rep, &b.rep, a.n());
    mult_repr_with(&a.rep, &b.rep, a.n(), m)
}

pub fn involution(c: &Coset) -> Result<Coset> {
    Coset::new(c.rep.inverse(), c.n())
}

/// Random element of K_n(∞) supported in n+1..=n+extra, as a diagonal pair.
pub fn random_k<R: rand::Rng>(rng: &mut R, group: &Arc<Group>, n: usize, extra: usize) -> PairElement {
    let perm = crate::sampling::random_perm(rng, extra, n);
    let tuple = crate::sampling::random_tuple(rng, group, n + 1..=n + extra);
    PairElement::diagonal(WreathElement::new(group.clone(), perm, tuple))
}

impl AdmissibleDiagram {
    /// Edges as displayed: a bare negative edge keeps the direction it had in gr(g).
    pub fn display_edges(&self, group: &Group) -> Vec<(Vertex, Vertex, Marking)> {
        let mut out: Vec<(Vertex, Vertex, Marking)> = self
            .edges
            .iter()
            .map(|(&a, &(b, m))| {
                if a.row == Row::Upper && b.row == Row::Lower && a.index < 0 && b.index < 0 && m.halves == 0 {
                    (b, a, m.inverse_gamma(group))
                } else {
                    (a, b, m)
                }
            })
            .collect();
        out.sort();
        out
    }

    /// The four allowed source/target sectors of an admissible graph.
    pub fn sectors_ok(&self) -> bool {
        self.edges.iter().all(|(a, (b, _))| {
            let sec = |v: &Vertex| (v.row, v.index > 0);
            matches!(
                (sec(a), sec(b)),
                ((Row::Upper, false), (Row::Lower, false))
                    | ((Row::Lower, true), (Row::Lower, false))
                    | ((Row::Lower, true), (Row::Upper, true))
                    | ((Row::Upper, false), (Row::Upper, true))
            )
        })
    }

    pub fn circle_list(&self) -> Vec<(u32, usize)> {
        self.circles.iter().flat_map(|(&c, &k)| std::iter::repeat(c).take(k)).collect()
    }

    pub fn to_json(&self, group: &Group) -> Value {
        let edges: Vec<Value> = self
            .display_edges(group)
            .into_iter()
            .map(|(a, b, m)| json!({"from": a.name(), "to": b.name(), "weight": format_halves(m.halves), "gamma": group.table.name(m.gamma)}))
            .collect();
        let circles: Vec<Value> = self
            .circle_list()
            .into_iter()
            .map(|(h, c)| json!({"weight": format_halves(h), "class": group.table.name(group.classes.representatives[c])}))
            .collect();
        json!({"n": self.n, "edges": edges, "circles": circles})
    }
}

/// Graphviz rendering; node names "u+3" / "o-2", edge labels "(weight, γ)".
pub fn to_dot(d: &AdmissibleDiagram, group: &Group) -> String {
    let mut s = String::from("digraph diagram {\n  rankdir=BT;\n");
    let n = d.n as i64;
    let cols: Vec<i64> = (1..=n).rev().map(|i| -i).chain(1..=n).collect();
    for (row, rank) in [(Row::Upper, "max"), (Row::Lower, "min")] {
        s.push_str(&format!("  {{ rank={rank};"));
        for &i in &cols {
            let v = Vertex { row, index: i };
            s.push_str(&format!(" \"{}\";", v.name()));
        }
        s.push_str(" }\n");
    }
    for (a, b, m) in d.display_edges(group) {
        s.push_str(&format!(
            "  \"{}\" -> \"{}\" [label=\"({}, {})\"];\n",
            a.name(),
            b.name(),
            format_halves(m.halves),
            group.table.name(m.gamma)
        ));
    }
    for (k, (h, c)) in d.circle_list().into_iter().enumerate() {
        s.push_str(&format!(
            "  \"c{k}\" [shape=circle, label=\"({}, [{}])\"];\n",
            format_halves(h),
            group.table.name(group.classes.representatives[c])
        ));
    }
    s.push_str("}\n");
    s
}

/// The pair (s₁γ₁, s₂γ₂) from image lists s(i) and entries γ_i, positions 1, 2, ….
pub fn pair_from_images(group: &Arc<Group>, s1: &[usize], g1: &[usize], s2: &[usize], g2: &[usize]) -> Result<PairElement> {
    let mk = |s: &[usize], g: &[usize]| -> Result<WreathElement> {
        let perm = Permutation::from_images(s.iter().enumerate().map(|(i, &j)| (i + 1, j)))?;
        let tuple = GammaTuple::from_entries(g.iter().enumerate().map(|(i, &x)| (i + 1, x)), group.e())?;
        Ok(WreathElement::new(group.clone(), perm, tuple))
    };
    PairElement::new(mk(s1, g1)?, mk(s2, g2)?)
}

/// Two worked n = 3 representatives on five points with free Γ entries
/// (γ', γ'') and (δ', δ''). Their product has one weight-1 circle of class
/// γ'₂⁻¹γ''₂δ''₅δ'₅⁻¹ and a weight-1 edge u+3 → o+2.
pub fn example_pairs(
    group: &Arc<Group>,
    gp: &[usize],
    gpp: &[usize],
    dp: &[usize],
    dpp: &[usize],
) -> Result<(PairElement, PairElement)> {
    let g = pair_from_images(group, &[3, 5, 4, 2, 1], gp, &[4, 5, 2, 3, 1], gpp)?;
    let h = pair_from_images(group, &[5, 4, 1, 3, 2], dp, &[5, 4, 1, 3, 2], dpp)?;
    Ok((g, h))
}
