use std::sync::Arc;

use ncmech::algebra::{pauli, Algebra, Element, Parity};
use ncmech::calculus::{inner_derivation, Calculus, Isomorphism};
use ncmech::linalg::{self, c, expm, random_hermitian, seeded, CMat, I};
use ncmech::states::State;
use ncmech::symplectic::*;
use ncmech::Error;
use rand::Rng;

fn m2() -> Algebra {
    Algebra::matrix(2).unwrap()
}

fn random_homogeneous<R: Rng>(alg: &Algebra, rng: &mut R) -> Element {
    alg.random_homogeneous(rng)
}

fn parity(alg: &Algebra, a: &Element) -> Parity {
    alg.vec_parity(&a.coeffs).unwrap()
}

#[test]
fn canonical_form_examples() {
    let a = m2();
    let ss = SymplecticStructure::canonical(&a).unwrap();
    let (x, y, z) = (pauli(&a, 'x'), pauli(&a, 'y'), pauli(&a, 'z'));
    let dx = inner_derivation(&a, &x).unwrap();
    let dy = inner_derivation(&a, &y).unwrap();
    let v = ss.cx.eval(&ss.omega, &[dx.clone(), dy]).unwrap();
    assert!(linalg::dist(&v, &(&z.coeffs * c(0.0, 2.0))) < 1e-12);
    assert!(linalg::max_abs(ss.cx.eval(&ss.omega, &[dx.clone(), dx]).unwrap().as_slice()) < 1e-12);
    let star = ss.cx.star(&ss.omega).unwrap();
    assert!(star.dist(&ss.omega.scale(c(-1.0, 0.0))) < 1e-12);
    assert!(ss.closedness_residual().unwrap() <= 1e-10);
    assert!(ss.is_nondegenerate());
}

#[test]
fn canonical_form_rejects_nonspecial() {
    for alg in [Algebra::functions_on_points(3).unwrap(), Algebra::grassmann(2).unwrap()] {
        assert!(matches!(SymplecticStructure::canonical(&alg), Err(Error::NotSpecial(_))));
    }
    // outer derivations: block algebras have a nontrivial center but only inner derivations,
    // the graded M_{1|1} and M_{2|1} are special
    assert!(SymplecticStructure::canonical(&Algebra::graded_matrix(1, 1).unwrap()).is_ok());
}

#[test]
fn quantum_form_examples() {
    let a = m2();
    let hbar = 0.7;
    let q = SymplecticStructure::quantum(&a, hbar).unwrap();
    let q2 = SymplecticStructure::quantum(&a, 2.0 * hbar).unwrap();
    let dx = inner_derivation(&a, &pauli(&a, 'x')).unwrap();
    let dy = inner_derivation(&a, &pauli(&a, 'y')).unwrap();
    let v = q.cx.eval(&q.omega, &[dx, dy]).unwrap();
    assert!(linalg::dist(&v, &(&pauli(&a, 'z').coeffs * c(2.0 * hbar, 0.0))) < 1e-12);
    assert!(q2.omega.dist(&q.omega.scale(c(2.0, 0.0))) < 1e-12);
    assert!(q.reality_residual().unwrap() < 1e-12);
    for alg in [Algebra::matrix(3).unwrap(), Algebra::graded_matrix(1, 1).unwrap(), Algebra::graded_matrix(2, 1).unwrap()] {
        let q = SymplecticStructure::quantum(&alg, 1.3).unwrap();
        assert!(q.reality_residual().unwrap() < 1e-12, "ω_Q real on {:?}", alg.kind());
    }
    assert!(SymplecticStructure::quantum(&a, 0.0).is_err());
    assert!(SymplecticStructure::quantum(&a, -1.0).is_err());
    assert_eq!(q.kind, FormKind::Quantum { hbar });
}

#[test]
fn hamiltonian_derivation_examples() {
    let mut rng = seeded(11);
    for alg in [m2(), Algebra::matrix(3).unwrap(), Algebra::graded_matrix(1, 1).unwrap(), Algebra::graded_matrix(2, 1).unwrap()] {
        let can = SymplecticStructure::canonical(&alg).unwrap();
        let hbar = 1.7;
        let q = SymplecticStructure::quantum(&alg, hbar).unwrap();
        for _ in 0..20 {
            let a = random_homogeneous(&alg, &mut rng);
            let da = inner_derivation(&alg, &a).unwrap();
            let y = can.hamiltonian(&a).unwrap();
            assert!(y.dist(&da) < 1e-10);
            assert_eq!(y.parity, parity(&alg, &a));
            let yq = q.hamiltonian(&a).unwrap();
            assert!(yq.dist(&da.scale(c(0.0, -hbar).inv())) < 1e-10);
            // i_Y ω = -dA
            let lhs = q.cx.interior(&yq, &q.omega).unwrap();
            let rhs = q.cx.d_element(&a).unwrap().scale(c(-1.0, 0.0));
            assert!(lhs.dist(&rhs) <= 1e-9);
        }
    }
}

#[test]
fn degenerate_form_is_rejected() {
    let a = m2();
    let cx = Calculus::inner(&a);
    let zero = cx.zero(2, Parity::Even);
    let ss = SymplecticStructure::new(cx, zero, FormKind::Custom).unwrap();
    assert!(!ss.is_nondegenerate());
    assert!(matches!(ss.hamiltonian(&pauli(&a, 'x')), Err(Error::Degenerate(_))));
}

#[test]
fn poisson_examples() {
    let a = m2();
    let hbar = 0.3;
    let q = SymplecticStructure::quantum(&a, hbar).unwrap();
    let pb = q.poisson(&pauli(&a, 'x'), &pauli(&a, 'y')).unwrap();
    assert!(pb.dist(&pauli(&a, 'z').scale(c(-2.0 / hbar, 0.0))) < 1e-12);
    let mut rng = seeded(3);
    for _ in 0..20 {
        let x = a.random(&mut rng, None);
        assert!(q.poisson(&x, &a.unit()).unwrap().max_abs() < 1e-12);
        let (p, r, s) = (a.random(&mut rng, None), a.random(&mut rng, None), a.random(&mut rng, None));
        let lhs = q.poisson(&p, &a.mul(&r, &s).unwrap()).unwrap();
        let rhs = &a.mul(&q.poisson(&p, &r).unwrap(), &s).unwrap() + &a.mul(&r, &q.poisson(&p, &s).unwrap()).unwrap();
        assert!(lhs.dist(&rhs) < 1e-10);
        // {A,B}_Q = (-iħ)^-1 [A,B]
        let comm = a.supercommutator(&p, &r).unwrap().scale(c(0.0, -hbar).inv());
        assert!(q.poisson(&p, &r).unwrap().dist(&comm) < 1e-10);
    }
}

/// Super-Jacobi, Leibniz, reality and `[Y_A, Y_B] = Y_{A,B}` over random homogeneous elements.
fn identity_residuals(alg: &Algebra, hbar: f64, n: usize, seed: u64) -> [f64; 4] {
    let q = SymplecticStructure::quantum(alg, hbar).unwrap();
    let mut rng = seeded(seed);
    let mut r = [0.0f64; 4];
    for _ in 0..n {
        let (a, b, cc) = (alg.random_homogeneous(&mut rng), alg.random_homogeneous(&mut rng), alg.random_homogeneous(&mut rng));
        let (ea, eb, ec) = (parity(alg, &a), parity(alg, &b), parity(alg, &cc));
        let pb = |x: &Element, y: &Element| q.poisson(x, y).unwrap();
        let jac = &(&pb(&a, &pb(&b, &cc)).scale(c(ea.eta(ec), 0.0)) + &pb(&b, &pb(&cc, &a)).scale(c(eb.eta(ea), 0.0)))
            + &pb(&cc, &pb(&a, &b)).scale(c(ec.eta(eb), 0.0));
        r[0] = r[0].max(jac.max_abs());
        let lhs = pb(&a, &alg.mul(&b, &cc).unwrap());
        let rhs = &alg.mul(&pb(&a, &b), &cc).unwrap() + &alg.mul(&b, &pb(&a, &cc)).unwrap().scale(c(ea.eta(eb), 0.0));
        r[1] = r[1].max(lhs.dist(&rhs));
        let left = alg.involution(&pb(&a, &b)).unwrap();
        let right = pb(&alg.involution(&b).unwrap(), &alg.involution(&a).unwrap()).scale(c(-ea.eta(eb), 0.0));
        r[2] = r[2].max(left.dist(&right));
        let ya = q.hamiltonian(&a).unwrap();
        let yb = q.hamiltonian(&b).unwrap();
        let yab = q.hamiltonian(&pb(&a, &b)).unwrap();
        r[3] = r[3].max(ya.bracket(&yb).dist(&yab));
    }
    r
}

#[test]
fn poisson_identities() {
    for (i, alg) in [m2(), Algebra::matrix(3).unwrap(), Algebra::graded_matrix(1, 1).unwrap(), Algebra::graded_matrix(2, 1).unwrap()]
        .iter()
        .enumerate()
    {
        let r = identity_residuals(alg, 1.0, 200, 100 + i as u64);
        for (name, v) in ["jacobi", "leibniz", "reality", "bracket"].iter().zip(r) {
            assert!(v <= 1e-9, "{name} residual {v:e} on {:?}", alg.kind());
        }
    }
}

#[test]
fn canonical_pairs_do_not_exist_in_matrix_algebras() {
    // Tr {A,B} = 0 for commutator brackets, so {A,B} = I is impossible.
    let a = m2();
    let q = SymplecticStructure::quantum(&a, 1.0).unwrap();
    let mut rng = seeded(4);
    for _ in 0..20 {
        let (x, y) = (a.random(&mut rng, None), a.random(&mut rng, None));
        assert!(!q.is_canonical_pair(&x, &y, 1e-9).unwrap());
        let m = a.to_matrix(&q.poisson(&x, &y).unwrap().coeffs).unwrap();
        assert!(m.trace().norm() < 1e-12);
    }
}

fn precession(hbar: f64, omega: f64) -> (Algebra, HamiltonianSystem) {
    let a = m2();
    let q = Arc::new(SymplecticStructure::quantum(&a, hbar).unwrap());
    let h = spin_precession(&a, hbar, omega);
    let hs = HamiltonianSystem::new(q, h).unwrap();
    (a, hs)
}

#[test]
fn heisenberg_precession() {
    let (hbar, omega) = (0.8, 1.3);
    let (a, hs) = precession(hbar, omega);
    let (x, y) = (pauli(&a, 'x'), pauli(&a, 'y'));
    for &t in &[0.0, 0.4, 1.0, 3.7] {
        let want = &x.scale(c((omega * t).cos(), 0.0)) - &y.scale(c((omega * t).sin(), 0.0));
        let closed = hs.evolve_heisenberg(&x, t, Method::ClosedForm).unwrap();
        assert!(closed.dist(&want) < 1e-12, "t = {t}");
        if t > 0.0 {
            let rk = hs.evolve_heisenberg(&x, t, Method::Rk4 { steps: 10_000 }).unwrap();
            assert!(rk.dist(&closed) <= 1e-8);
        }
        // matrix-exponential conjugation oracle
        let u = expm(&(a.to_matrix(&hs.h.coeffs).unwrap() * (I * c(t / hbar, 0.0))));
        let m = &u * a.to_matrix(&x.coeffs).unwrap() * u.adjoint();
        assert!(linalg::max_abs_mat(&(a.to_matrix(&closed.coeffs).unwrap() - m)) < 1e-12);
    }
    let ht = hs.evolve_heisenberg(&hs.h, 5.0, Method::ClosedForm).unwrap();
    assert!(ht.dist(&hs.h) < 1e-12);
    assert_eq!(hs.evolve_heisenberg(&x, 0.0, Method::ClosedForm).unwrap(), x);
    assert!(hs.evolve_heisenberg(&x, 1.0, Method::Rk4 { steps: 0 }).is_err());
    assert!((hs.spectrum_min().unwrap() + hbar * omega / 2.0).abs() < 1e-12);
}

#[test]
fn hamiltonian_must_be_even_and_self_adjoint() {
    let a = m2();
    let q = Arc::new(SymplecticStructure::quantum(&a, 1.0).unwrap());
    let bad = a.element(pauli(&a, 'x').coeffs * I);
    assert!(HamiltonianSystem::new(q.clone(), bad).is_err());
    let g = Algebra::graded_matrix(1, 1).unwrap();
    let qg = Arc::new(SymplecticStructure::quantum(&g, 1.0).unwrap());
    assert!(HamiltonianSystem::new(qg, g.basis(1)).is_err());
}

#[test]
fn closed_form_needs_known_structure() {
    let a = m2();
    let q = SymplecticStructure::quantum(&a, 1.0).unwrap();
    let custom = Arc::new(SymplecticStructure::new(q.cx.clone(), q.omega.scale(c(2.0, 0.0)), FormKind::Custom).unwrap());
    let hs = HamiltonianSystem::new(custom, pauli(&a, 'z')).unwrap();
    assert!(hs.evolve_heisenberg(&pauli(&a, 'x'), 1.0, Method::ClosedForm).is_err());
    let rk = hs.evolve_heisenberg(&pauli(&a, 'x'), 1.0, Method::Rk4 { steps: 1000 }).unwrap();
    // doubling ω halves the flow speed: H = σz = (ħω/2)σz with ω = 2, evolved at half speed
    let want = &pauli(&a, 'x').scale(c(1f64.cos(), 0.0)) - &pauli(&a, 'y').scale(c(1f64.sin(), 0.0));
    assert!(rk.dist(&want) < 1e-10);
}

#[test]
fn liouville_examples() {
    let (hbar, omega) = (0.8, 1.3);
    let (a, hs) = precession(hbar, omega);
    let s = 1.0 / 2f64.sqrt();
    let plus = State::vector(&a, &linalg::CVec::from_column_slice(&[c(s, 0.0), c(s, 0.0)])).unwrap();
    for &t in &[0.0, 0.5, 2.0] {
        let st = hs.evolve_liouville(&plus, t).unwrap();
        let ex = st.expectation(&pauli(&a, 'x')).unwrap();
        assert!((ex.re - (omega * t).cos()).abs() < 1e-12);
        assert!(ex.im.abs() < 1e-12);
    }
    let up = State::vector(&a, &linalg::CVec::from_column_slice(&[c(1.0, 0.0), c(0.0, 0.0)])).unwrap();
    let st = hs.evolve_liouville(&up, 3.0).unwrap();
    assert!(linalg::dist(st.values(), up.values()) < 1e-12);
}

#[test]
fn liouville_heisenberg_duality() {
    let mut rng = seeded(21);
    for alg in [m2(), Algebra::matrix(3).unwrap()] {
        let n = alg.realization().unwrap().size();
        let q = Arc::new(SymplecticStructure::quantum(&alg, 0.9).unwrap());
        for _ in 0..5 {
            let h = alg.element(alg.from_matrix(&random_hermitian(&mut rng, n)).unwrap());
            let hs = HamiltonianSystem::new(q.clone(), h).unwrap();
            let psi = linalg::random_cvec(&mut rng, n);
            let phi = State::vector(&alg, &psi).unwrap();
            let functional = State::functional(&alg, phi.values().clone()).unwrap();
            let t = 1.0;
            let (rho_t, fun_t) = (hs.evolve_liouville(&phi, t).unwrap(), hs.evolve_liouville(&functional, t).unwrap());
            for _ in 0..10 {
                let x = alg.random(&mut rng, None);
                let xt = hs.evolve_heisenberg(&x, t, Method::ClosedForm).unwrap();
                let rhs = phi.expectation(&xt).unwrap();
                assert!((rho_t.expectation(&x).unwrap() - rhs).norm() <= 1e-8);
                assert!((fun_t.expectation(&x).unwrap() - rhs).norm() <= 1e-8);
            }
        }
    }
}

#[test]
fn symmetry_implies_conservation() {
    let mut rng = seeded(5);
    let alg = Algebra::matrix(3).unwrap();
    let q = Arc::new(SymplecticStructure::quantum(&alg, 1.0).unwrap());
    let hm = random_hermitian(&mut rng, 3);
    let h = alg.element(alg.from_matrix(&hm).unwrap());
    // G = H² + 2H commutes with H
    let g = alg.element(alg.from_matrix(&(&hm * &hm + &hm * c(2.0, 0.0))).unwrap());
    assert!(q.poisson(&g, &h).unwrap().max_abs() <= 1e-12);
    let hs = HamiltonianSystem::new(q, h).unwrap();
    for k in 0..=20 {
        let t = 0.5 * k as f64;
        assert!(hs.evolve_heisenberg(&g, t, Method::ClosedForm).unwrap().dist(&g) <= 1e-8);
    }
}

#[test]
fn canonical_transformation_preserves_commutator() {
    let mut rng = seeded(6);
    let alg = Algebra::matrix(3).unwrap();
    let u = linalg::random_unitary(&mut rng, 3);
    let phi = Isomorphism::unitary_conjugation(&alg, &u).unwrap();
    for _ in 0..20 {
        let (a, b) = (alg.random(&mut rng, None), alg.random(&mut rng, None));
        let lhs = phi.apply(&(alg.supercommutator(&a, &b).unwrap().coeffs * I));
        let (pa, pb) = (alg.element(phi.apply(&a.coeffs)), alg.element(phi.apply(&b.coeffs)));
        let rhs = alg.supercommutator(&pa, &pb).unwrap().coeffs * I;
        assert!(linalg::dist(&lhs, &rhs) < 1e-12);
    }
}

#[test]
fn infinitesimal_pullback_matches_lie_derivative() {
    let mut rng = seeded(8);
    let alg = m2();
    let cx = Calculus::inner(&alg);
    let w = cx.random(&mut rng, 2, Parity::Even);
    let hm = random_hermitian(&mut rng, 2);
    let g = alg.element(alg.from_matrix(&(hm.clone() * I)).unwrap());
    let lie = cx.lie(&inner_derivation(&alg, &g).unwrap(), &w).unwrap();
    let mut pts = Vec::new();
    for k in 0..4 {
        let eps = 1e-2 / 2f64.powi(k);
        let u: CMat = expm(&(hm.clone() * (I * c(eps, 0.0))));
        let iso = Isomorphism::unitary_conjugation(&alg, &u).unwrap();
        let pulled = cx.pullback(&iso, &cx, &w).unwrap();
        let rem = pulled.sub(&w).add(&lie.scale(c(eps, 0.0)));
        pts.push((eps.ln(), rem.max_abs().ln()));
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!(slope >= 1.9, "slope {slope}");
}
