
use ncmech::algebra::{pauli, Algebra, Element, Parity};
use ncmech::calculus::Isomorphism;
use ncmech::linalg::{self, c, expm, random_hermitian, seeded, CMat, CVec, I, ONE, ZERO};
use ncmech::states::*;
use ncmech::superclassical::{g3_ansatz, GrassmannElement};
use ncmech::symplectic::SymplecticStructure;
use ncmech::Error;
use rand::Rng;

fn m2() -> Algebra {
    Algebra::matrix(2).unwrap()
}

fn ket(v: &[C]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|&(a, b)| c(a, b)))
}
type C = (f64, f64);

fn random_pure<R: Rng>(alg: &Algebra, rng: &mut R) -> State {
    let n = alg.realization().unwrap().size();
    State::vector(alg, &linalg::random_cvec(rng, n)).unwrap()
}

fn random_density<R: Rng>(rng: &mut R, n: usize) -> CMat {
    let a = linalg::random_cmat(rng, n);
    let r = &a * a.adjoint();
    let t = r.trace();
    r / t
}

#[test]
fn make_state_examples() {
    let a = m2();
    let mixed = State::density(&a, CMat::identity(2, 2) * c(0.5, 0.0)).unwrap();
    assert_eq!(mixed.pure, Some(false));
    let up = State::vector(&a, &ket(&[(1.0, 0.0), (0.0, 0.0)])).unwrap();
    assert_eq!(up.pure, Some(true));
    let mut bad = CMat::zeros(2, 2);
    bad[(0, 0)] = c(1.5, 0.0);
    bad[(1, 1)] = c(-0.5, 0.0);
    match State::density(&a, bad) {
        Err(Error::InvalidState { witness: Some(w), .. }) => {
            assert!((w[1][0].abs() - 1.0).abs() < 1e-12 && w[0][0].abs() < 1e-12);
        }
        other => panic!("expected rejection, got {other:?}"),
    }
    assert!(State::density(&a, CMat::identity(2, 2)).is_err());
    let g3 = Algebra::grassmann(3).unwrap();
    let s = State::berezin(&g3, &g3_ansatz([ZERO; 3])).unwrap();
    assert_eq!(s.expectation(&g3.unit()).unwrap(), ONE);
    // linear term breaks positivity on even test elements too
    assert!(State::berezin(&g3, &g3_ansatz([ZERO, ZERO, c(0.3, 0.0)])).is_err());
}

#[test]
fn expectation_examples() {
    let a = m2();
    let up = State::vector(&a, &ket(&[(1.0, 0.0), (0.0, 0.0)])).unwrap();
    assert!((up.expectation(&pauli(&a, 'z')).unwrap() - ONE).norm() < 1e-15);
    assert!((up.expectation(&a.unit()).unwrap() - ONE).norm() < 1e-15);
    let g = Algebra::graded_matrix(1, 1).unwrap();
    let s = State::density(&g, CMat::identity(2, 2) * c(0.5, 0.0)).unwrap();
    for i in 0..4 {
        if g.basis_parity(i).is_odd() {
            assert_eq!(s.expectation(&g.basis(i)).unwrap(), ZERO);
        }
    }
    // densities with odd coherences are not states of a graded algebra
    let plus = ket(&[(0.5f64.sqrt(), 0.0), (0.5f64.sqrt(), 0.0)]);
    assert!(State::vector(&g, &plus).is_err());
    // functionals are projected onto the even part
    let f = State::functional(&g, CVec::from_column_slice(&[c(0.5, 0.0), c(0.3, 0.0), c(0.3, 0.0), c(0.5, 0.0)])).unwrap();
    assert_eq!(f.expectation(&g.basis(1)).unwrap(), ZERO);
    let other = Algebra::matrix(3).unwrap();
    assert!(s.expectation(&other.unit()).is_err());
}

#[test]
fn states_satisfy_invariants() {
    let mut rng = seeded(1);
    for alg in [m2(), Algebra::matrix(3).unwrap(), Algebra::graded_matrix(2, 1).unwrap()] {
        let n = alg.realization().unwrap().size();
        let grading = alg.realization().unwrap().grading.clone();
        for _ in 0..5 {
            let mut rho = random_density(&mut rng, n);
            // graded algebras: keep only the even block structure
            for i in 0..n {
                for j in 0..n {
                    if grading[(i, i)] != grading[(j, j)] {
                        rho[(i, j)] = ZERO;
                    }
                }
            }
            let s = State::density(&alg, rho).unwrap();
            for _ in 0..200 {
                let x = alg.random(&mut rng, Some(Parity::Even));
                let xx = alg.mul(&alg.involution(&x).unwrap(), &x).unwrap();
                let v = s.expectation(&xx).unwrap();
                assert!(v.re >= -1e-10 && v.im.abs() < 1e-10);
            }
        }
    }
}

#[test]
fn convex_mixtures_are_states() {
    let mut rng = seeded(2);
    let a = Algebra::matrix(3).unwrap();
    for _ in 0..10 {
        let states: Vec<State> = (0..4).map(|_| random_pure(&a, &mut rng)).collect();
        let mut w: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let m = mixture(&a, &states, &w).unwrap();
        assert_eq!(m.pure, Some(false));
    }
}

#[test]
fn transform_examples() {
    let mut rng = seeded(3);
    let a = m2();
    let phi = State::density(&a, random_density(&mut rng, 2)).unwrap();
    let id = Isomorphism::identity(&a);
    let same = transform_state(&a, &id, &phi).unwrap();
    assert!(linalg::dist(same.values(), phi.values()) < 1e-14);
    for _ in 0..5 {
        let u = linalg::random_unitary(&mut rng, 2);
        let iso = Isomorphism::unitary_conjugation(&a, &u).unwrap();
        let t = transform_state(&a, &iso, &phi).unwrap();
        for _ in 0..50 {
            let x = a.random(&mut rng, None);
            let rhs = phi.expectation(&a.element(iso.apply(&x.coeffs))).unwrap();
            assert!((t.expectation(&x).unwrap() - rhs).norm() < 1e-12);
        }
        assert!(t.density_matrix().is_some());
    }
}

#[test]
fn transformed_states_remain_states() {
    let mut rng = seeded(4);
    let a = Algebra::matrix(3).unwrap();
    for _ in 0..10 {
        let phi = random_pure(&a, &mut rng);
        let iso = Isomorphism::unitary_conjugation(&a, &linalg::random_unitary(&mut rng, 3)).unwrap();
        let t = transform_state(&a, &iso, &phi).unwrap();
        assert_eq!(t.pure, Some(true));
        assert!((t.expectation(&a.unit()).unwrap() - ONE).norm() < 1e-12);
    }
}

#[test]
fn infinitesimal_transform_first_order() {
    let mut rng = seeded(5);
    let a = m2();
    let q = SymplecticStructure::quantum(&a, 1.0).unwrap();
    let phi = State::density(&a, random_density(&mut rng, 2)).unwrap();
    let gm = random_hermitian(&mut rng, 2);
    let g = a.element(a.from_matrix(&gm).unwrap());
    let eps = 1e-4;
    let approx = transform_state_infinitesimal(&q, &g, eps, &phi).unwrap();
    // exact: Φ_ε = exp(ε Y_G) is conjugation by exp(iεG/ħ)
    let u = expm(&(gm * (I * c(eps, 0.0))));
    let iso = Isomorphism::unitary_conjugation(&a, &u).unwrap();
    let exact = transform_state(&a, &iso, &phi).unwrap();
    let err = linalg::dist(exact.values(), approx.values());
    assert!(err <= 1e-6, "first-order error {err:e}");
}

#[test]
fn transition_probabilities() {
    let mut rng = seeded(6);
    let a = Algebra::matrix(3).unwrap();
    let u = linalg::random_cvec(&mut rng, 3).normalize();
    let v = linalg::random_cvec(&mut rng, 3).normalize();
    let (su, sv) = (State::vector(&a, &u).unwrap(), State::vector(&a, &v).unwrap());
    assert!((transition_probability(&su, &su).unwrap() - 1.0).abs() < 1e-12);
    let w = transition_probability(&su, &sv).unwrap();
    assert!((w - u.dotc(&v).norm_sqr()).abs() < 1e-12);
    assert!((w - transition_probability(&sv, &su).unwrap()).abs() < 1e-15);
    let e0 = State::vector(&a, &ket(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0)])).unwrap();
    let e1 = State::vector(&a, &ket(&[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0)])).unwrap();
    assert!(transition_probability(&e0, &e1).unwrap().abs() < 1e-15);
    let f = State::functional(&a, su.values().clone()).unwrap();
    assert!(transition_probability(&f, &su).is_err());
}

#[test]
fn pobvm_examples() {
    let a = m2();
    let z = pauli(&a, 'z');
    let m = Pobvm::spectral(&a, &z).unwrap();
    assert_eq!(m.labels.len(), 2);
    let s = 0.5f64.sqrt();
    let plus = State::vector(&a, &ket(&[(s, 0.0), (s, 0.0)])).unwrap();
    let all: Vec<&str> = m.labels.iter().map(|l| l.as_str()).collect();
    assert!((m.probability(&all, &plus).unwrap() - 1.0).abs() < 1e-12);
    let up = m.labels.iter().find(|l| l.starts_with('1')).unwrap().clone();
    let down = m.labels.iter().find(|l| l.starts_with('-')).unwrap().clone();
    assert!((m.probability(&[&up], &plus).unwrap() - 0.5).abs() < 1e-12);
    assert!(m.probability(&[], &plus).unwrap().abs() < 1e-15);
    assert!(m.probability(&["sideways"], &plus).is_err());
    let mut rng = seeded(7);
    for _ in 0..20 {
        let phi = random_pure(&a, &mut rng);
        let (pu, pd) = (m.probability(&[&up], &phi).unwrap(), m.probability(&[&down], &phi).unwrap());
        assert!((0.0..=1.0).contains(&pu) && (0.0..=1.0).contains(&pd));
        assert!((m.probability(&[&up, &down], &phi).unwrap() - pu - pd).abs() < 1e-14);
        assert!((pu + pd - 1.0).abs() < 1e-12);
    }
    // effects must be positive and sum to I
    let half = a.unit().scale(c(0.5, 0.0));
    assert!(Pobvm::new(&a, vec!["a".into(), "b".into()], vec![half.clone(), half.clone()]).is_ok());
    assert!(Pobvm::new(&a, vec!["a".into(), "a".into()], vec![half.clone(), half.clone()]).is_err());
    assert!(Pobvm::new(&a, vec!["a".into()], vec![half.clone()]).is_err());
    let neg = &a.unit() + &z.scale(c(1.5, 0.0));
    assert!(Pobvm::new(&a, vec!["a".into(), "b".into()], vec![neg.clone(), &a.unit() - &neg]).is_err());
}

#[test]
fn cc_full_matrix_algebra_holds() {
    let mut rng = seeded(8);
    for alg in [m2(), Algebra::matrix(3).unwrap()] {
        let v = cc_check(&alg, &FamilySpec::Full, &FamilySpec::Full, &mut rng).unwrap();
        assert!(v.holds, "{v:?}");
        assert_eq!(v.mode, CcMode::ConstructiveRandomized);
    }
}

#[test]
fn cc_single_state_fails_clause_one() {
    let mut rng = seeded(9);
    let a = m2();
    let up = State::vector(&a, &ket(&[(1.0, 0.0), (0.0, 0.0)])).unwrap();
    let v = cc_check(&a, &FamilySpec::Full, &FamilySpec::List(vec![up.clone()]), &mut rng).unwrap();
    assert!(!v.holds);
    assert_eq!(v.failed_clause, Some(1));
    match v.witness.unwrap() {
        CcWitness::Observables { a: x, b: y } => {
            let to = |w: &Vec<[f64; 2]>| a.element(CVec::from_iterator(4, w.iter().map(|p| c(p[0], p[1]))));
            let (x, y) = (to(&x), to(&y));
            assert!(x.dist(&y) > 0.1);
            assert!((up.expectation(&x).unwrap() - up.expectation(&y).unwrap()).norm() < 1e-12);
        }
        w => panic!("unexpected witness {w:?}"),
    }
}

#[test]
fn cc_explicit_lists() {
    let mut rng = seeded(10);
    let a = m2();
    let (x, y, z) = (pauli(&a, 'x'), pauli(&a, 'y'), pauli(&a, 'z'));
    // σx and σz only: |+y⟩ and |-y⟩ look identical
    let v = cc_check(&a, &FamilySpec::List(vec![x.clone(), z.clone()]), &FamilySpec::Full, &mut rng).unwrap();
    assert!(!v.holds);
    assert_eq!(v.failed_clause, Some(2));
    match v.witness.unwrap() {
        CcWitness::States { a: u, b: w } => {
            let to = |w: &Vec<[f64; 2]>| CVec::from_iterator(2, w.iter().map(|p| c(p[0], p[1])));
            let (su, sw) = (State::vector(&a, &to(&u)).unwrap(), State::vector(&a, &to(&w)).unwrap());
            for o in [&x, &z] {
                assert!((su.expectation(o).unwrap() - sw.expectation(o).unwrap()).norm() < 1e-10);
            }
            assert!((su.expectation(&y).unwrap() - sw.expectation(&y).unwrap()).norm() > 1.0);
        }
        w => panic!("unexpected witness {w:?}"),
    }
    let all = FamilySpec::List(vec![x.clone(), y.clone(), z.clone()]);
    assert!(cc_check(&a, &all, &FamilySpec::Full, &mut rng).unwrap().holds);
    let s = 0.5f64.sqrt();
    let states = vec![
        State::vector(&a, &ket(&[(1.0, 0.0), (0.0, 0.0)])).unwrap(),
        State::vector(&a, &ket(&[(s, 0.0), (s, 0.0)])).unwrap(),
    ];
    let v = cc_check(&a, &FamilySpec::List(vec![x.clone(), z.clone()]), &FamilySpec::List(states.clone()), &mut rng).unwrap();
    assert!(v.holds);
    assert_eq!(v.mode, CcMode::Exhaustive);
    let v = cc_check(&a, &FamilySpec::List(vec![y.clone()]), &FamilySpec::List(states), &mut rng).unwrap();
    assert!(!v.holds);
}

#[test]
fn cc_fails_for_g3() {
    let mut rng = seeded(11);
    let g3 = Algebra::grassmann(3).unwrap();
    let s = State::berezin(&g3, &g3_ansatz([ZERO; 3])).unwrap();
    let v = cc_check(&g3, &FamilySpec::Full, &FamilySpec::List(vec![s.clone()]), &mut rng).unwrap();
    assert!(!v.holds);
    let theta12 = GrassmannElement::theta(0, 3, 1).unwrap().mul(&GrassmannElement::theta(0, 3, 2).unwrap()).unwrap();
    let one = GrassmannElement::constant(0, 3, ONE);
    let f = one.add(&theta12).unwrap().to_element(&g3).unwrap();
    let f2 = one.add(&theta12.scale(c(2.0, 0.0))).unwrap().to_element(&g3).unwrap();
    match v.witness.unwrap() {
        CcWitness::Observables { a, b } => {
            let to = |w: &Vec<[f64; 2]>| g3.element(CVec::from_iterator(8, w.iter().map(|p| c(p[0], p[1]))));
            assert!(to(&a).dist(&f) < 1e-15);
            assert!(to(&b).dist(&f2) < 1e-15);
        }
        w => panic!("unexpected witness {w:?}"),
    }
    assert_eq!(s.expectation(&f).unwrap(), ONE);
    assert_eq!(s.expectation(&f2).unwrap(), ONE);
}

#[test]
fn gns_examples() {
    let a = m2();
    let up = State::vector(&a, &ket(&[(1.0, 0.0), (0.0, 0.0)])).unwrap();
    let r = gns(&a, &up).unwrap();
    assert_eq!((r.dim, r.null_dim, r.commutant_dim), (2, 2, 1));
    assert!(r.irreducible);
    let tr = State::density(&a, CMat::identity(2, 2) * c(0.5, 0.0)).unwrap();
    let r = gns(&a, &tr).unwrap();
    assert_eq!((r.dim, r.null_dim, r.commutant_dim), (4, 0, 4));
    assert!(!r.irreducible);
    let mut rng = seeded(12);
    for alg in [m2(), Algebra::matrix(3).unwrap()] {
        for _ in 0..3 {
            let n = alg.realization().unwrap().size();
            let phi = State::density(&alg, random_density(&mut rng, n)).unwrap();
            let r = gns(&alg, &phi).unwrap();
            assert!(r.product_residual <= 1e-9 && r.involution_residual <= 1e-9);
            for _ in 0..100 {
                let x: Element = alg.random(&mut rng, None);
                assert!((r.vector_state(&x.coeffs) - phi.expectation(&x).unwrap()).norm() <= 1e-10);
            }
        }
    }
}

#[test]
fn gns_rejects_non_positive_functionals() {
    let a = m2();
    let bad = ncmech::states::State::functional(&a, CVec::from_column_slice(&[c(1.5, 0.0), ZERO, ZERO, c(-0.5, 0.0)]));
    assert!(bad.is_err());
}

#[test]
fn faithfulness_escalation() {
    for alg in [m2(), Algebra::matrix(3).unwrap(), Algebra::block_diagonal(&[1, 2]).unwrap()] {
        let states = escalation_states(&alg).unwrap();
        let single = faithful_direct_sum(&alg, &states[..1]).unwrap();
        let all = faithful_direct_sum(&alg, &states).unwrap();
        assert!(all.faithful, "{all:?}");
        assert!(all.min_basis_norm >= single.min_basis_norm);
    }
    // a single vector state misses one block of a block algebra
    let b = Algebra::block_diagonal(&[1, 2]).unwrap();
    let first = State::vector(&b, &ket(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0)])).unwrap();
    assert!(!faithful_direct_sum(&b, &[first]).unwrap().faithful);
}

#[test]
fn serialization() {
    let a = m2();
    let s = State::vector(&a, &ket(&[(0.6, 0.0), (0.0, 0.8)])).unwrap();
    let json = serde_json::to_string(&s).unwrap();
    let back: State = serde_json::from_str(&json).unwrap();
    assert_eq!(back, s);
    let r = gns(&a, &s).unwrap();
    let back: GnsResult = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back.dim, r.dim);
}
