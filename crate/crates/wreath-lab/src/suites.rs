//! Named verification suites behind `wreath-lab verify`.
//!
//! Each suite returns a list of [`Check`]s. Sampling is seeded and samples are
//! drawn sequentially before any parallel evaluation, so results do not depend
//! on the thread count.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::Ratio;
use rand::Rng;
use rayon::prelude::*;

use crate::cosets::{self, Coset, PairElement};
use crate::error::{Error, Result};
use crate::finite_group::{build_group, Group, GroupDescriptor};
use crate::fock;
use crate::report::Check;
use crate::sampling;
use crate::thoma::{self, ThomaParams, Tr0};
use crate::typeiii::{self, ProbMatrix};
use crate::wreath::{self, parse_element, Permutation, WreathElement};

/// Smallest |det p| used for the modular residual check.
pub const MODULAR_MIN_DET: f64 = 0.05;

pub const SUITES: [&str; 6] = ["characters", "conjugacy", "identities", "okounkov", "cosets", "type3"];

/// Named tolerances with defaults; `set` rejects unknown names.
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances(BTreeMap<&'static str, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Self(BTreeMap::from([
            ("oracle", 1e-9),
            ("classical", 1e-12),
            ("gram", 1e-8),
            ("central", 1e-12),
            ("moment", 3.0),
            ("lr", 1e-12),
            ("modular", 1e-10),
            ("kms", 1e-12),
        ]))
    }
}

impl Tolerances {
    pub fn get(&self, key: &str) -> f64 {
        self.0[key]
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        match self.0.get_mut(key) {
            Some(v) if value.is_finite() && value >= 0.0 => {
                *v = value;
                Ok(())
            }
            Some(_) => Err(Error::Config(format!("tol: value for '{key}' must be finite and non-negative"))),
            None => Err(Error::Config(format!(
                "tol: unknown tolerance '{key}' (known: {})",
                self.0.keys().copied().collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &&'static str> {
        self.0.keys()
    }
}

pub fn run_suite(name: &str, seed: u64, tol: &Tolerances) -> Result<Vec<Check>> {
    match name {
        "characters" => characters(seed, tol),
        "conjugacy" => conjugacy(seed),
        "identities" => identities(),
        "okounkov" => okounkov(tol),
        "cosets" => coset_suite(seed),
        "type3" => type3(seed, tol),
        "all" => {
            let mut out = Vec::new();
            for s in SUITES {
                out.extend(run_suite(s, seed, tol)?);
            }
            Ok(out)
        }
        other => Err(Error::Config(format!("suite: unknown suite '{other}' (known: all, {})", SUITES.join(", ")))),
    }
}

fn group(d: GroupDescriptor) -> Arc<Group> {
    Arc::new(build_group(&d).expect("built-in group"))
}

/// Two parameter sets for each of ℤ₂, ℤ₃ and S₃.
pub fn reference_params() -> Vec<(String, ThomaParams)> {
    let z2 = group(GroupDescriptor::Cyclic(2));
    let z3 = group(GroupDescriptor::Cyclic(3));
    let s3 = group(GroupDescriptor::Symmetric3);
    let mk = |g: &Arc<Group>, a: &[(f64, &str)], b: &[(f64, &str)], t: Tr0| {
        ThomaParams::named(g.clone(), a, b, t).expect("reference parameters are valid")
    };
    let sign_s3 = s3.irreps.iter().position(|r| r.name == "sign").expect("S3 sign irrep");
    let std_s3 = s3.irreps.iter().position(|r| r.name == "standard").expect("S3 standard irrep");
    vec![
        ("z2 standard".into(), thoma::standard_z2_params()),
        ("z2 trivial residual".into(), mk(&z2, &[(0.3, "trivial"), (0.2, "sign")], &[(0.15, "sign")], Tr0::Trivial)),
        ("z3 regular".into(), mk(&z3, &[(0.4, "chi1")], &[(0.2, "chi2"), (0.1, "trivial")], Tr0::Regular)),
        ("z3 pure".into(), mk(&z3, &[(0.5, "trivial"), (0.25, "chi2")], &[(0.25, "chi1")], Tr0::Regular)),
        ("s3 regular".into(), mk(&s3, &[(0.3, "standard")], &[(0.2, "sign")], Tr0::Regular)),
        ("s3 mix".into(), mk(&s3, &[(0.1, "sign")], &[(0.15, "standard")], Tr0::Mix(vec![(sign_s3, 0.5), (std_s3, 0.5)]))),
    ]
}

fn characters(seed: u64, tol: &Tolerances) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (name, p) in reference_params() {
        let mut rng = sampling::rng(seed);
        let elems: Vec<WreathElement> = (0..100)
            .map(|_| {
                let support = rng.gen_range(1..=5);
                sampling::random_element(&mut rng, p.group(), support)
            })
            .collect();
        let diffs: Vec<Result<f64>> = elems
            .par_iter()
            .map(|g| Ok((thoma::evaluate(&p, g)? - fock::matrix_element(&p, g, g.max_support().max(1))?).norm()))
            .collect();
        let worst = diffs.into_iter().collect::<Result<Vec<f64>>>()?.into_iter().fold(0.0, f64::max);
        out.push(Check::at_most(format!("oracle agreement [{name}]"), worst, tol.get("oracle")));

        let gram_elems: Vec<WreathElement> = (0..20).map(|_| sampling::random_element(&mut rng, p.group(), 4)).collect();
        out.push(Check::at_least(format!("gram min eigenvalue [{name}]"), thoma::gram_psd(&p, &gram_elems)?, -tol.get("gram")));
        let mut central = 0.0f64;
        for w in gram_elems.windows(2) {
            central = central.max(thoma::centrality_residual(&p, &w[0], &w[1])?);
        }
        out.push(Check::at_most(format!("centrality residual [{name}]"), central, tol.get("central")));
    }
    let p = thoma::standard_z2_params();
    let mut worst = 0.0f64;
    for l in 2..=6 {
        let cycle = WreathElement::from_perm(p.group().clone(), Permutation::from_cycles(&[(1..=l).collect()])?);
        let direct = thoma::evaluate(&p, &cycle)?.re;
        let powers: f64 = p.alpha.iter().map(|&(w, r)| p.rep(r).dim as f64 * w.powi(l as i32)).sum::<f64>()
            + if l % 2 == 1 { 1.0 } else { -1.0 } * p.beta.iter().map(|&(w, r)| p.rep(r).dim as f64 * w.powi(l as i32)).sum::<f64>();
        worst = worst.max((thoma::thoma_classical(&p, &[l]) - powers).abs()).max((direct - powers).abs());
    }
    out.push(Check::at_most("single-cycle power sums", worst, tol.get("classical")));
    Ok(out)
}

/// Invariant equality against brute-force conjugacy in ℤ₂≀S₄.
pub fn conjugacy_mismatches(seed: u64, pairs: usize) -> usize {
    let g = group(GroupDescriptor::Cyclic(2));
    let all = wreath::enumerate_elements(&g, 4);
    let labels = wreath::brute_force_classes(&all);
    let invariants: Vec<_> = all.iter().map(|x| x.invariant()).collect();
    let mut rng = sampling::rng(seed);
    (0..pairs)
        .filter(|_| {
            let (i, j) = (rng.gen_range(0..all.len()), rng.gen_range(0..all.len()));
            (labels[i] == labels[j]) != (invariants[i] == invariants[j])
        })
        .count()
}

fn conjugacy(seed: u64) -> Result<Vec<Check>> {
    let mismatches = conjugacy_mismatches(seed, 2000);
    Ok(vec![Check::at_most("conjugacy invariant vs brute force (mismatches)", mismatches as f64, 0.0)])
}

fn identities() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut exact = true;
    for m in 1..=7 {
        for signed in [true, false] {
            exact &= thoma::check_alt_identity(m, signed)?;
            for nu in [Ratio::new(3, 2), Ratio::new(-7, 3), Ratio::from_integer(5)] {
                let want = (0..m as i128).fold(Ratio::from_integer(1), |acc, j| {
                    acc * if signed { nu - Ratio::from_integer(j) } else { nu + Ratio::from_integer(j) }
                });
                exact &= thoma::orbit_sum_exact(nu, m, signed)? == want;
            }
        }
    }
    out.push(Check::holds("alternating and unsigned orbit sums (exact, m <= 7)", exact));
    out.push(Check::at_most("alternating_sum(1.5, 3)", thoma::alternating_sum(1.5, 3)?, -1e-12));
    let mut min_integer = f64::INFINITY;
    for m in 1..=7 {
        for k in 0..=m {
            min_integer = min_integer.min(thoma::alternating_sum(k as f64, m)?);
        }
    }
    out.push(Check::at_least("alternating_sum(k, m), integer k <= m <= 7", min_integer, 0.0));
    let omega_ok = (0..=4).all(|n| (2..=6).all(|big| (1..big).all(|m| wreath::omega_identity_holds(n, m, big))));
    out.push(Check::holds("omega identity, 1 <= m < M <= 6, 0 <= n <= 4", omega_ok));
    Ok(out)
}

/// The three factorization cases: (element, Okounkov exponents).
pub fn factorization_cases(p: &ThomaParams) -> Result<Vec<(WreathElement, BTreeMap<usize, usize>)>> {
    Ok(vec![
        (parse_element("(1 2)", p.group())?, BTreeMap::from([(1, 1)])),
        (parse_element("(1 2 3)[1:g]", p.group())?, BTreeMap::new()),
        (parse_element("(1 2)(3 4)[3:g]", p.group())?, BTreeMap::from([(1, 1)])),
    ])
}

fn okounkov(tol: &Tolerances) -> Result<Vec<Check>> {
    let p = thoma::standard_z2_params();
    let mut out = Vec::new();
    for q in 1..=2 {
        let a = fock::moment_check(&p, 1, q, 16)?;
        let b = fock::moment_check(&p, 1, q, 32)?;
        out.push(Check::at_most(format!("moment q={q} gap at n=16"), a.gap, tol.get("moment") / 16.0));
        out.push(Check::holds(format!("moment q={q} gap shrinks 16 -> 32"), b.gap < a.gap)
            .with_detail(format!("{:.4e} -> {:.4e}", a.gap, b.gap)));
    }
    for (g, r) in factorization_cases(&p)? {
        let res: Vec<f64> = [8, 16, 32]
            .iter()
            .map(|&n| fock::factorization_check(&p, &g, &r, n).map(|f| f.residual))
            .collect::<Result<_>>()?;
        let decreasing = res.windows(2).all(|w| w[1] < w[0]);
        out.push(Check::holds(format!("factorization residual decreasing [{}]", g.format()), decreasing)
            .with_detail(format!("{:.3e}, {:.3e}, {:.3e}", res[0], res[1], res[2])));
    }
    Ok(out)
}

fn random_pair<R: Rng>(rng: &mut R, g: &Arc<Group>) -> PairElement {
    let (la, lb) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
    let a = sampling::random_element(rng, g, la);
    let b = sampling::random_element(rng, g, lb);
    PairElement::new(a, b).expect("same group")
}

fn coset_suite(seed: u64) -> Result<Vec<Check>> {
    let g = group(GroupDescriptor::Symmetric3);
    let t = &g.table;
    let mut rng = sampling::rng(seed);
    let mut out = Vec::new();

    let mut agree = 0;
    for _ in 0..100 {
        let n = rng.gen_range(0..=3);
        let (a, b) = (Coset::new(random_pair(&mut rng, &g), n)?, Coset::new(random_pair(&mut rng, &g), n)?);
        if cosets::mult_diagram(&a.diagram, &b.diagram, &g)? == cosets::mult_repr(&a, &b)?.diagram {
            agree += 1;
        }
    }
    out.push(Check::at_least("diagram product = representative product (of 100)", agree as f64, 100.0));

    let mut invariant = 0;
    let mut total = 0;
    for _ in 0..5 {
        let n = rng.gen_range(0..=3);
        let x = random_pair(&mut rng, &g);
        let d = cosets::theta(&x, n)?;
        for _ in 0..100 {
            let k1 = cosets::random_k(&mut rng, &g, n, 4);
            let k2 = cosets::random_k(&mut rng, &g, n, 4);
            total += 1;
            if cosets::theta(&k1.multiply(&x)?.multiply(&k2)?, n)? == d {
                invariant += 1;
            }
        }
    }
    out.push(Check::at_least(format!("theta invariant under translations (of {total})"), invariant as f64, total as f64));

    let n = 3;
    let gamma = parse_element("[1:r,2:t12,3:r2]", &g)?;
    let cg = Coset::new(PairElement::embed(gamma), n)?;
    let mut commute = true;
    for i in 1..=n {
        let tr = WreathElement::from_perm(g.clone(), Permutation::transposition(i, n + 1));
        let ct = Coset::new(PairElement::embed(tr), n)?;
        commute &= cosets::mult_diagram(&cg.diagram, &ct.diagram, &g)? == cosets::mult_diagram(&ct.diagram, &cg.diagram, &g)?;
    }
    out.push(Check::holds("transposition and gamma cosets commute", commute));

    let mut markings = true;
    for _ in 0..20 {
        let mut pick = || -> Vec<usize> { (0..5).map(|_| rng.gen_range(0..g.order())).collect() };
        let (gp, gpp, dp, dpp) = (pick(), pick(), pick(), pick());
        let (a, b) = cosets::example_pairs(&g, &gp, &gpp, &dp, &dpp)?;
        let pasted = cosets::mult_diagram(&Coset::new(a, 3)?.diagram, &Coset::new(b, 3)?.diagram, &g)?;
        let prod = |xs: &[usize]| xs.iter().fold(g.e(), |acc, &x| t.mul(acc, x));
        let circle = prod(&[t.inv(gp[1]), gpp[1], dpp[4], t.inv(dp[4])]);
        let want: Vec<(u32, usize)> = if g.class_of(circle) == g.class_of(g.e()) { vec![] } else { vec![(2, g.class_of(circle))] };
        let edge = prod(&[gpp[2], dpp[3], t.inv(dp[3]), t.inv(gp[2]), gpp[0], dpp[2]]);
        markings &= pasted.circle_list() == want
            && pasted.edges.get(&cosets::Vertex::lower(3)) == Some(&(cosets::Vertex::upper(2), cosets::Marking::new(2, edge)));
    }
    out.push(Check::holds("worked product: weight-1 circle class and boxed edge marking", markings));
    Ok(out)
}

fn type3(seed: u64, tol: &Tolerances) -> Result<Vec<Check>> {
    let mut rng = sampling::rng(seed);
    let mut out = Vec::new();
    let ps: Vec<ProbMatrix> = (0..20).map(|i| ProbMatrix::random(&mut rng, i % 4 == 3)).collect();
    let lr = ps.iter().map(|p| typeiii::iso_and_lr(p).map(|r| r.max_residual())).collect::<Result<Vec<_>>>()?;
    out.push(Check::at_most("lr identities (20 p)", lr.into_iter().fold(0.0, f64::max), tol.get("lr")));
    let mut verdicts = true;
    for p in &ps {
        for n in 1..=2 {
            verdicts &= typeiii::cyclic_separating_check(p, n)?.verdict_matches_det();
        }
    }
    out.push(Check::holds("cyclic/separating verdict matches det (n <= 2)", verdicts));
    let mut modular = 0.0f64;
    // The absolute residual grows like ε·cond(𝔍)^{4n}; near-singular p cannot meet a fixed cutoff.
    for p in ps.iter().filter(|p| p.det().abs() >= MODULAR_MIN_DET).take(3) {
        for n in 1..=3 {
            modular = modular.max(typeiii::modular_operator(p, n)?.formula_residual);
        }
    }
    out.push(Check::at_most("modular formula residual (n <= 3, |det p| >= 0.05)", modular, tol.get("modular")));
    let z2 = group(GroupDescriptor::Cyclic(2));
    let p = ps[0];
    let mut kms = 0.0f64;
    for _ in 0..30 {
        let s = sampling::random_perm(&mut rng, 3, 0);
        let g = sampling::random_element(&mut rng, &z2, 3);
        kms = kms.max(typeiii::kms_trace_check(&p, 3, &s, &g)?.residual);
    }
    out.push(Check::at_most("S-infinity centrality residual", kms, tol.get("kms")));
    match typeiii::centrality_witness(&p, 2, 1e-6)? {
        Some((a, b, gap)) => out.push(
            Check::at_least("full centrality fails (witness gap)", gap, 1e-6).with_detail(format!("g = {a}, h = {b}")),
        ),
        None => out.push(Check::holds("full centrality fails (witness found)", false)),
    }
    Ok(out)
}
