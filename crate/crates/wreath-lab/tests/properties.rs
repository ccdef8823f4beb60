//! Property tests for the invariants the library promises.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use wreath_lab::cosets::{self, Coset, PairElement};
use wreath_lab::finite_group::{build_group, character_of, dual_group, validate_rep, Group, GroupDescriptor};
use wreath_lab::fock::{self, Realization};
use wreath_lab::sampling::{self, SeededRng};
use wreath_lab::suites::reference_params;
use wreath_lab::thoma::{self, ThomaParams};
use wreath_lab::typeiii::{self, ProbMatrix};
use wreath_lab::wreath::{parse_element, WreathElement};

fn group(d: GroupDescriptor) -> Arc<Group> {
    Arc::new(build_group(&d).unwrap())
}

fn groups() -> Vec<Arc<Group>> {
    vec![
        group(GroupDescriptor::Cyclic(2)),
        group(GroupDescriptor::Cyclic(3)),
        group(GroupDescriptor::Symmetric3),
        group(GroupDescriptor::Klein4),
    ]
}

fn draw(rng: &mut SeededRng, g: &Arc<Group>, max_support: usize) -> WreathElement {
    use rand::Rng;
    let s = rng.gen_range(1..=max_support);
    sampling::random_element(rng, g, s)
}

fn pick_params(i: usize) -> ThomaParams {
    let mut all = reference_params();
    all.swap_remove(i % all.len()).1
}

fn pair(rng: &mut SeededRng, g: &Arc<Group>) -> PairElement {
    let a = draw(rng, g, 4);
    let b = draw(rng, g, 4);
    PairElement::new(a, b).unwrap()
}

#[test]
fn builtin_reps_are_homomorphisms_and_characters_are_class_functions() {
    for g in groups() {
        for rep in &g.irreps {
            let r = validate_rep(&g.table, rep);
            assert!(r.homomorphism_residual <= 1e-10 && r.irreducible, "{} {}", g.name, rep.name);
            let chi = character_of(rep);
            for x in 0..g.order() {
                assert!((chi[x] - chi[g.table.conj((x + 1) % g.order(), x)]).norm() <= 1e-12);
            }
        }
    }
}

#[test]
fn abelian_duals_are_orthonormal() {
    for g in groups().into_iter().filter(|g| g.table.is_abelian()) {
        let duals = dual_group(&g.table).unwrap();
        assert_eq!(duals.len(), g.order());
        for (i, a) in duals.iter().enumerate() {
            for (j, b) in duals.iter().enumerate() {
                let ip: C64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y.conj()).sum::<C64>() / g.order() as f64;
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).norm() <= 1e-10);
            }
        }
    }
}

proptest! {
    #[test]
    fn group_axioms(seed in any::<u64>(), gi in 0usize..4) {
        let g = &groups()[gi];
        let mut rng = sampling::rng(seed);
        let (a, b, c) = (draw(&mut rng, g, 6), draw(&mut rng, g, 6), draw(&mut rng, g, 6));
        let ab_c = a.multiply(&b).unwrap().multiply(&c).unwrap();
        let a_bc = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        prop_assert_eq!(ab_c, a_bc);
        prop_assert!(a.multiply(&a.inverse()).unwrap().is_identity());
        prop_assert_eq!(WreathElement::identity(g.clone()).multiply(&a).unwrap(), a.clone());
    }

    #[test]
    fn cycle_factors_commute_and_multiply_back(seed in any::<u64>(), gi in 0usize..4) {
        let g = &groups()[gi];
        let mut rng = sampling::rng(seed);
        let x = draw(&mut rng, g, 7);
        let factors = x.cycle_decompose();
        let mut prod = WreathElement::identity(g.clone());
        for f in &factors {
            prod = prod.multiply(&f.element).unwrap();
            for h in &factors {
                prop_assert_eq!(f.element.multiply(&h.element).unwrap(), h.element.multiply(&f.element).unwrap());
            }
        }
        prop_assert_eq!(prod, x);
    }

    #[test]
    fn invariant_is_a_conjugation_invariant(seed in any::<u64>(), gi in 0usize..4) {
        let g = &groups()[gi];
        let mut rng = sampling::rng(seed);
        let (x, h) = (draw(&mut rng, g, 6), draw(&mut rng, g, 6));
        prop_assert_eq!(x.conjugate_by(&h).unwrap().invariant(), x.invariant());
    }

    #[test]
    fn normal_form_is_a_sparse_conjugate(seed in any::<u64>(), gi in 0usize..4) {
        let g = &groups()[gi];
        let mut rng = sampling::rng(seed);
        let x = draw(&mut rng, g, 6);
        let (c, y) = x.normal_form();
        let c = WreathElement::from_tuple(g.clone(), c);
        prop_assert_eq!(&c.multiply(&x).unwrap().multiply(&c.inverse()).unwrap(), &y);
        prop_assert_eq!(y.invariant(), x.invariant());
        for orbit in y.orbits() {
            prop_assert!(orbit.iter().filter(|&&i| y.gamma(i) != g.e()).count() <= 1);
        }
    }

    #[test]
    fn format_round_trips(seed in any::<u64>(), gi in 0usize..4) {
        let g = &groups()[gi];
        let mut rng = sampling::rng(seed);
        let x = draw(&mut rng, g, 6);
        prop_assert_eq!(parse_element(&x.format(), g).unwrap(), x);
    }

    #[test]
    fn character_values_are_central(seed in any::<u64>(), pi in 0usize..6) {
        let p = pick_params(pi);
        let mut rng = sampling::rng(seed);
        let (x, h) = (draw(&mut rng, p.group(), 6), draw(&mut rng, p.group(), 6));
        let a = thoma::evaluate(&p, &x).unwrap();
        prop_assert!((thoma::evaluate(&p, &x.conjugate_by(&h).unwrap()).unwrap() - a).norm() <= 1e-12);
        prop_assert!((thoma::evaluate(&p, &x.normal_form().1).unwrap() - a).norm() <= 1e-12);
        prop_assert!(a.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn classical_restriction_agrees(seed in any::<u64>(), pi in 0usize..6) {
        let p = pick_params(pi);
        let mut rng = sampling::rng(seed);
        let s = sampling::random_perm(&mut rng, 7, 0);
        let cycle_type: Vec<usize> = s.cycles().iter().map(Vec::len).collect();
        let x = WreathElement::from_perm(p.group().clone(), s);
        prop_assert!((thoma::evaluate(&p, &x).unwrap().re - thoma::thoma_classical(&p, &cycle_type)).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gram_matrices_are_psd(seed in any::<u64>(), pi in 0usize..6) {
        let p = pick_params(pi);
        let mut rng = sampling::rng(seed);
        let elems: Vec<WreathElement> = (0..12).map(|_| draw(&mut rng, p.group(), 4)).collect();
        prop_assert!(thoma::gram_psd(&p, &elems).unwrap() >= -1e-8);
    }

    #[test]
    fn realization_is_a_unitary_homomorphism(seed in any::<u64>(), pi in 0usize..6) {
        let p = pick_params(pi);
        let r = Realization::new(&p, 3).unwrap();
        let mut rng = sampling::rng(seed);
        let v = r.apply_element(&r.build_eta(), &draw(&mut rng, p.group(), 3)).unwrap();
        let (g, h) = (draw(&mut rng, p.group(), 3), draw(&mut rng, p.group(), 3));
        let lhs = r.apply_element(&r.apply_element(&v, &h).unwrap(), &g).unwrap();
        let rhs = r.apply_element(&v, &g.multiply(&h).unwrap()).unwrap();
        prop_assert!(r.distance(&lhs, &rhs).unwrap() <= 1e-10);
        prop_assert!((r.norm(&lhs) - r.norm(&v)).abs() <= 1e-10);
    }

    #[test]
    fn matrix_elements_do_not_depend_on_truncation(seed in any::<u64>(), pi in 0usize..6) {
        let p = pick_params(pi);
        let mut rng = sampling::rng(seed);
        let x = draw(&mut rng, p.group(), 4);
        let m = x.max_support().max(1);
        let base = fock::matrix_element(&p, &x, m).unwrap();
        for extra in 1..=2 {
            prop_assert!((fock::matrix_element(&p, &x, m + extra).unwrap() - base).norm() <= 1e-12);
        }
        prop_assert!((thoma::evaluate(&p, &x).unwrap() - base).norm() <= 1e-9);
    }

    #[test]
    fn coset_product_is_independent_of_shift_and_representatives(seed in any::<u64>(), n in 0usize..=3) {
        let g = group(GroupDescriptor::Symmetric3);
        let mut rng = sampling::rng(seed);
        let (a, b) = (pair(&mut rng, &g), pair(&mut rng, &g));
        let m = cosets::default_shift(&a, &b, n);
        let base = cosets::mult_repr_with(&a, &b, n, m).unwrap().diagram;
        prop_assert_eq!(&cosets::mult_repr_with(&a, &b, n, m + 2).unwrap().diagram, &base);
        let a2 = cosets::random_k(&mut rng, &g, n, 3).multiply(&a).unwrap().multiply(&cosets::random_k(&mut rng, &g, n, 3)).unwrap();
        let b2 = cosets::random_k(&mut rng, &g, n, 3).multiply(&b).unwrap();
        let m2 = cosets::default_shift(&a2, &b2, n);
        prop_assert_eq!(&cosets::mult_repr_with(&a2, &b2, n, m2).unwrap().diagram, &base);
        let (ca, cb) = (Coset::new(a, n).unwrap(), Coset::new(b, n).unwrap());
        prop_assert_eq!(&cosets::mult_diagram(&ca.diagram, &cb.diagram, &g).unwrap(), &base);
    }

    #[test]
    fn involution_is_an_anti_automorphism(seed in any::<u64>(), n in 0usize..=3) {
        let g = group(GroupDescriptor::Symmetric3);
        let mut rng = sampling::rng(seed);
        let (a, b) = (Coset::new(pair(&mut rng, &g), n).unwrap(), Coset::new(pair(&mut rng, &g), n).unwrap());
        let twice = cosets::involution(&cosets::involution(&a).unwrap()).unwrap();
        prop_assert_eq!(&twice.diagram, &a.diagram);
        let lhs = cosets::involution(&cosets::mult_repr(&a, &b).unwrap()).unwrap();
        let rhs = cosets::mult_repr(&cosets::involution(&b).unwrap(), &cosets::involution(&a).unwrap()).unwrap();
        prop_assert_eq!(lhs.diagram, rhs.diagram);
    }

    #[test]
    fn lr_identities_on_random_p(seed in any::<u64>(), singular in any::<bool>()) {
        let mut rng = sampling::rng(seed);
        let p = ProbMatrix::random(&mut rng, singular);
        prop_assert!(typeiii::iso_and_lr(&p).unwrap().max_residual() <= 1e-12);
        prop_assert!(typeiii::cyclic_separating_check(&p, 2).unwrap().verdict_matches_det());
    }

    #[test]
    fn pi_mu_is_a_unitary_homomorphism(seed in any::<u64>()) {
        let z2 = group(GroupDescriptor::Cyclic(2));
        let mut rng = sampling::rng(seed);
        let p = ProbMatrix::random(&mut rng, false);
        prop_assume!(p.strictly_positive());
        let n = 3;
        let mut e = || sampling::random_element(&mut rng, &z2, n);
        let (a0, a1, b0, b1) = (e(), e(), e(), e());
        let id = WreathElement::identity(z2.clone());
        let rep = |x: &WreathElement, y: &WreathElement| typeiii::rep_pi_mu(&p, x, y, n).unwrap().to_dense();
        let (pa, pb) = (rep(&a0, &a1), rep(&b0, &b1));
        let pab = rep(&a0.multiply(&b0).unwrap(), &a1.multiply(&b1).unwrap());
        prop_assert!((&pa * &pb - &pab).abs().max() <= 1e-10);
        prop_assert!((&pa * pa.transpose() - DMatrix::identity(64, 64)).abs().max() <= 1e-10);
        let (left, right) = (rep(&a0, &id), rep(&id, &b1));
        prop_assert!((&left * &right - &right * &left).abs().max() == 0.0);
    }

    #[test]
    fn state_is_central_for_permutations(seed in any::<u64>()) {
        let z2 = group(GroupDescriptor::Cyclic(2));
        let mut rng = sampling::rng(seed);
        let p = ProbMatrix::random(&mut rng, false);
        prop_assume!(p.strictly_positive());
        let s = sampling::random_perm(&mut rng, 3, 0);
        let x = sampling::random_element(&mut rng, &z2, 3);
        prop_assert!(typeiii::kms_trace_check(&p, 3, &s, &x).unwrap().residual <= 1e-12);
    }
}
