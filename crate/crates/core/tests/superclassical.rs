use ncmech::algebra::{Algebra, Parity};
use ncmech::calculus::check_superderivation;
use ncmech::linalg::{c, seeded, ZERO};
use ncmech::superclassical::*;
use rand::Rng;

fn th(n: usize, a: usize) -> GrassmannElement {
    GrassmannElement::theta(0, n, a).unwrap()
}

fn parity_of(f: &GrassmannElement) -> Parity {
    f.parity().unwrap()
}

#[test]
fn odd_partial_examples() {
    let f = th(2, 1).mul(&th(2, 2)).unwrap();
    assert_eq!(f.odd_partial(Side::Left, 1).unwrap(), th(2, 2));
    assert_eq!(f.odd_partial(Side::Right, 1).unwrap(), th(2, 2).scale(c(-1.0, 0.0)));
    assert_eq!(f.odd_partial(Side::Left, 2).unwrap(), th(2, 1).scale(c(-1.0, 0.0)));
    assert_eq!(f.odd_partial(Side::Right, 2).unwrap(), th(2, 1));
    assert!(f.odd_partial(Side::Left, 3).is_err());
    assert!(f.odd_partial(Side::Left, 0).is_err());
}

#[test]
fn left_right_relation_and_leibniz() {
    let mut rng = seeded(1);
    let (m, n) = (2, 4);
    for _ in 0..100 {
        let pf = if rng.gen_bool(0.5) { Parity::Odd } else { Parity::Even };
        let pg = if rng.gen_bool(0.5) { Parity::Odd } else { Parity::Even };
        let f = GrassmannElement::random(&mut rng, m, n, 2, 6, Some(pf));
        let g = GrassmannElement::random(&mut rng, m, n, 2, 6, Some(pg));
        let (ef, eg) = (parity_of(&f), parity_of(&g));
        let fg = f.mul(&g).unwrap();
        for a in 0..m + n {
            let ea = if a < m { Parity::Even } else { Parity::Odd };
            // ∂_r f = (-1)^{ε_A(ε_f+ε_A)} ∂_l f
            let s = ea.eta(ef + ea);
            let r = f.partial(Side::Right, a).unwrap();
            let l = f.partial(Side::Left, a).unwrap().scale(c(s, 0.0));
            assert!(r.dist(&l) < 1e-14);
            // ∂_l(fg) = (∂_l f) g + (-1)^{ε_A ε_f} f ∂_l g
            let lhs = fg.partial(Side::Left, a).unwrap();
            let rhs = f
                .partial(Side::Left, a)
                .unwrap()
                .mul(&g)
                .unwrap()
                .add(&f.mul(&g.partial(Side::Left, a).unwrap()).unwrap().scale(c(ea.eta(ef), 0.0)))
                .unwrap();
            assert!(lhs.dist(&rhs) < 1e-12);
            // ∂_r(fg) = f ∂_r g + (-1)^{ε_A ε_g} (∂_r f) g
            let lhs = fg.partial(Side::Right, a).unwrap();
            let rhs = f
                .mul(&g.partial(Side::Right, a).unwrap())
                .unwrap()
                .add(&f.partial(Side::Right, a).unwrap().mul(&g).unwrap().scale(c(ea.eta(eg), 0.0)))
                .unwrap();
            assert!(lhs.dist(&rhs) < 1e-12);
        }
    }
}

#[test]
fn vector_fields_are_superderivations() {
    let mut rng = seeded(2);
    let n = 3;
    let alg = Algebra::grassmann(n).unwrap();
    for px in [Parity::Even, Parity::Odd] {
        for _ in 0..10 {
            // X^A has parity ε_X + ε_A with ε_A odd
            let comps: Vec<GrassmannElement> =
                (0..n).map(|_| GrassmannElement::random(&mut rng, 0, n, 0, 4, Some(px + Parity::Odd))).collect();
            let op = vector_field_op(n, &comps).unwrap();
            let (ok, res) = check_superderivation(&alg, &op, px);
            assert!(ok, "residual {res:e}");
        }
    }
}

#[test]
fn super_poisson_examples() {
    let pb = SuperPBMatrix::canonical(1, 0);
    let q = GrassmannElement::x(2, 0, 1).unwrap();
    let p = GrassmannElement::x(2, 0, 2).unwrap();
    assert_eq!(pb.bracket(&p, &q).unwrap(), GrassmannElement::constant(2, 0, c(1.0, 0.0)));
    assert_eq!(pb.bracket(&q, &p).unwrap(), GrassmannElement::constant(2, 0, c(-1.0, 0.0)));
    let odd = SuperPBMatrix::canonical(0, 2);
    let t1 = th(2, 1);
    let v = odd.bracket(&t1, &t1).unwrap();
    assert_eq!(v, GrassmannElement::constant(0, 2, c(-1.0, 0.0)));
    assert!(odd.bracket(&t1, &th(2, 2)).unwrap().is_zero());
    assert!(pb.bracket(&t1, &q).is_err());
}

#[test]
fn super_pb_matrix_validation() {
    use ncmech::linalg::CMat;
    let mut bad = CMat::zeros(2, 2);
    bad[(0, 1)] = c(1.0, 0.0);
    bad[(1, 0)] = c(1.0, 0.0);
    assert!(SuperPBMatrix::new(2, 0, bad).is_err());
    assert!(SuperPBMatrix::new(2, 0, CMat::zeros(2, 2)).is_err());
    let mut mixed = CMat::identity(3, 3);
    mixed[(0, 2)] = c(0.5, 0.0);
    assert!(SuperPBMatrix::new(1, 2, mixed).is_err());
}

#[test]
fn super_jacobi_on_cubic_polynomials() {
    let mut rng = seeded(3);
    // two canonical pairs plus a generic symmetric odd block
    let mut lower = SuperPBMatrix::canonical(2, 3).lower().clone();
    lower[(4, 5)] = c(0.3, 0.0);
    lower[(5, 4)] = c(0.3, 0.0);
    lower[(6, 6)] = c(-2.0, 0.0);
    let pb = SuperPBMatrix::new(4, 3, lower).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..40 {
        let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
            let p = if rng.gen_bool(0.5) { Parity::Odd } else { Parity::Even };
            GrassmannElement::random(rng, 4, 3, 3, 5, Some(p))
        };
        let (f, g, h) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
        let (ef, eg, eh) = (parity_of(&f), parity_of(&g), parity_of(&h));
        let br = |a: &GrassmannElement, b: &GrassmannElement| pb.bracket(a, b).unwrap();
        let s = br(&f, &br(&g, &h))
            .scale(c(ef.eta(eh), 0.0))
            .add(&br(&g, &br(&h, &f)).scale(c(eg.eta(ef), 0.0)))
            .unwrap()
            .add(&br(&h, &br(&f, &g)).scale(c(eh.eta(eg), 0.0)))
            .unwrap();
        worst = worst.max(s.max_abs());
    }
    assert!(worst <= 1e-12, "super-Jacobi residual {worst:e}");
}

#[test]
fn classical_bracket_matches_coordinate_formula() {
    let mut rng = seeded(4);
    let pb = SuperPBMatrix::canonical(1, 0);
    for _ in 0..50 {
        let f = GrassmannElement::random(&mut rng, 2, 0, 4, 6, None);
        let g = GrassmannElement::random(&mut rng, 2, 0, 4, 6, None);
        let (fq, fp) = (f.even_partial(1).unwrap(), f.even_partial(2).unwrap());
        let (gq, gp) = (g.even_partial(1).unwrap(), g.even_partial(2).unwrap());
        let want = fp.mul(&gq).unwrap().sub(&fq.mul(&gp).unwrap()).unwrap();
        assert!(pb.bracket(&f, &g).unwrap().dist(&want) <= 1e-12);
    }
}

#[test]
fn harmonic_oscillator_conserves_energy() {
    let pb = SuperPBMatrix::canonical(1, 0);
    let (mass, k) = (1.3, 0.7);
    let q = GrassmannElement::x(2, 0, 1).unwrap();
    let p = GrassmannElement::x(2, 0, 2).unwrap();
    let h = p.mul(&p).unwrap().scale(c(0.5 / mass, 0.0)).add(&q.mul(&q).unwrap().scale(c(0.5 * k, 0.0))).unwrap();
    let energy = |x: &[f64]| h.eval_even(x).unwrap()[&0].re;
    let x0 = [1.0, 0.2];
    let e0 = energy(&x0);
    for k in 1..=10 {
        let x = pb.hamilton_flow(&h, &x0, k as f64, 1000 * k).unwrap();
        assert!((energy(&x) - e0).abs() <= 1e-6);
    }
    // dq/dt = p/m: exact solution
    let w = (k / mass).sqrt();
    let x = pb.hamilton_flow(&h, &x0, 2.0, 4000).unwrap();
    let want_q = x0[0] * (w * 2.0).cos() + x0[1] / (mass * w) * (w * 2.0).sin();
    assert!((x[0] - want_q).abs() < 1e-9);
}

#[test]
fn berezin_examples() {
    let rho = g3_ansatz([ZERO; 3]);
    assert_eq!(berezin_expectation(&rho, &GrassmannElement::constant(0, 3, c(1.0, 0.0))).unwrap(), c(1.0, 0.0));
    let t12 = th(3, 1).mul(&th(3, 2)).unwrap();
    assert_eq!(berezin_expectation(&rho, &t12).unwrap(), ZERO);
    // wrong parity or normalization
    let bad = rho.add(&GrassmannElement::constant(0, 3, c(0.1, 0.0))).unwrap();
    assert!(berezin_expectation(&bad, &t12).is_err());
    assert!(berezin_expectation(&rho.scale(c(2.0, 0.0)), &t12).is_err());
    // integration convention: ∫θ¹θ²θ³ = -1
    let top = th(3, 1).mul(&th(3, 2)).unwrap().mul(&th(3, 3)).unwrap();
    assert_eq!(top.berezin().unwrap(), c(-1.0, 0.0));
}

#[test]
fn positivity_scan_detects_linear_term() {
    let mut rng = seeded(5);
    let good = positivity_scan(&g3_ansatz([ZERO; 3]), &mut rng, 100, 1e-12).unwrap();
    assert!(good.feasible);
    let bad = positivity_scan(&g3_ansatz([ZERO, ZERO, c(0.2, 0.0)]), &mut rng, 100, 1e-12).unwrap();
    assert!(!bad.feasible);
    assert!(bad.witness.is_some());
    // analytic value for f = aθ¹ + bθ²
    for (a, b, c3) in [(c(1.0, 0.0), c(0.0, 1.0), c(0.2, 0.0)), (c(0.3, -0.2), c(1.1, 0.4), c(-0.5, 0.7))] {
        let rho = g3_ansatz([ZERO, ZERO, c3]);
        let f = th(3, 1).scale(a).add(&th(3, 2).scale(b)).unwrap();
        let v = berezin_expectation(&rho, &f.mul(&f.star()).unwrap()).unwrap();
        assert!((v - g3_linear_closed_form(a, b, c3)).norm() < 1e-14);
    }
}

#[test]
fn g3_has_a_unique_state() {
    let mut rng = seeded(6);
    let r = g3_unique_density(&mut rng).unwrap();
    assert_eq!(r.constraint_rank, 6);
    let rho = GrassmannElement::from_table(&r.density).unwrap();
    assert!(rho.dist(&g3_ansatz([ZERO; 3])) < 1e-12);
    assert!(r.positivity.feasible);
}

#[test]
fn json_round_trip() {
    let mut rng = seeded(7);
    let f = GrassmannElement::random(&mut rng, 2, 3, 2, 5, None);
    let json = f.to_json();
    let t: GrassmannTable = serde_json::from_str(&json).unwrap();
    assert_eq!(GrassmannElement::from_table(&t).unwrap(), f);
}
