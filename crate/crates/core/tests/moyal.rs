use ncmech::linalg::{c, seeded, C64};
use ncmech::moyal::*;
use ncmech::Error;

fn poly(terms: &[((u32, u32), (f64, f64))]) -> PhasePolynomial {
    PhasePolynomial::from_terms(terms.iter().map(|&(k, (re, im))| (k, c(re, im))))
}

#[test]
fn star_examples() {
    let h = 0.37;
    let (x, p) = (PhasePolynomial::x(), PhasePolynomial::p());
    assert_eq!(star(&x, &p, h), poly(&[((1, 1), (1.0, 0.0)), ((0, 0), (0.0, h / 2.0))]));
    let mut rng = seeded(11);
    let f = PhasePolynomial::random(&mut rng, 4, 6);
    assert!(star(&f, &PhasePolynomial::one(), h).dist(&f) == 0.0);
    assert!(star(&PhasePolynomial::one(), &f, h).dist(&f) == 0.0);
    let x2 = PhasePolynomial::monomial(2, 0, c(1.0, 0.0));
    let p2 = PhasePolynomial::monomial(0, 2, c(1.0, 0.0));
    let want = poly(&[((2, 2), (1.0, 0.0)), ((1, 1), (0.0, 2.0 * h)), ((0, 0), (-h * h / 2.0, 0.0))]);
    assert!(star(&x2, &p2, h).dist(&want) < 1e-15);
}

#[test]
fn moyal_bracket_examples() {
    let (x, p) = (PhasePolynomial::x(), PhasePolynomial::p());
    for h in [1e-3, 0.5, 1.0, 7.0] {
        assert_eq!(moyal_bracket(&p, &x, h), PhasePolynomial::one());
    }
    let mut rng = seeded(12);
    let f = PhasePolynomial::random(&mut rng, 4, 8);
    assert!(moyal_bracket(&f, &f, 0.3).is_zero());
    // {x², p²}: exact for quadratics, equal to the classical bracket −4xp
    let x2 = PhasePolynomial::monomial(2, 0, c(1.0, 0.0));
    let p2 = PhasePolynomial::monomial(0, 2, c(1.0, 0.0));
    let cl = PhasePolynomial::monomial(1, 1, c(-4.0, 0.0));
    assert_eq!(classical_pb(&x2, &p2), cl);
    for h in [1e-1, 1e-3, 1e-6] {
        assert!(moyal_bracket(&x2, &p2, h).dist(&cl) < 1e-12);
    }
}

#[test]
fn associativity_on_random_triples() {
    let mut rng = seeded(13);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let f = PhasePolynomial::random(&mut rng, 4, 5);
        let g = PhasePolynomial::random(&mut rng, 4, 5);
        let k = PhasePolynomial::random(&mut rng, 4, 5);
        let h = 0.8;
        worst = worst.max(star(&star(&f, &g, h), &k, h).dist(&star(&f, &star(&g, &k, h), h)));
    }
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn bracket_jacobi_and_reality() {
    let mut rng = seeded(14);
    let h = 0.6;
    for _ in 0..50 {
        let f = PhasePolynomial::random(&mut rng, 4, 5);
        let g = PhasePolynomial::random(&mut rng, 4, 5);
        let k = PhasePolynomial::random(&mut rng, 3, 5);
        let b = |u: &PhasePolynomial, v: &PhasePolynomial| moyal_bracket(u, v, h);
        let jac = b(&f, &b(&g, &k)).add(&b(&g, &b(&k, &f))).add(&b(&k, &b(&f, &g)));
        assert!(jac.max_abs() <= 1e-10 * (1.0 + f.max_abs() * g.max_abs() * k.max_abs()) * 100.0, "{:e}", jac.max_abs());
        // (f ⋆ g)* = g* ⋆ f* and the bracket of real symbols is real
        assert!(star(&f, &g, h).conj().dist(&star(&g.conj(), &f.conj(), h)) < 1e-12);
        let (fr, gr) = (PhasePolynomial::random_real(&mut rng, 4, 5), PhasePolynomial::random_real(&mut rng, 4, 5));
        assert!(moyal_bracket(&fr, &gr, h).is_real(1e-12));
    }
}

#[test]
fn classical_limit() {
    let (x, p) = (PhasePolynomial::x(), PhasePolynomial::p());
    let hbars: Vec<f64> = (0..13).map(|k| 10f64.powf(-4.0 + 0.25 * k as f64)).collect();
    let r = classical_limit_report(&x, &p, &hbars).unwrap();
    assert_eq!(PhasePolynomial::from_table(&r.leading), PhasePolynomial::monomial(1, 1, c(1.0, 0.0)));
    assert!(r.slope.is_none());
    let x2 = PhasePolynomial::monomial(2, 0, c(1.0, 0.0));
    let p2 = PhasePolynomial::monomial(0, 2, c(1.0, 0.0));
    let r = classical_limit_report(&x2, &p2, &hbars).unwrap();
    assert_eq!(PhasePolynomial::from_table(&r.first_order), PhasePolynomial::monomial(1, 1, c(0.0, 2.0)));
    assert_eq!(r.first_order_residual, 0.0);
    assert!((r.slope.unwrap() - 2.0).abs() <= 0.05);
    let mut rng = seeded(15);
    for _ in 0..30 {
        let f = PhasePolynomial::random(&mut rng, 4, 6);
        let g = PhasePolynomial::random(&mut rng, 4, 6);
        let r = classical_limit_report(&f, &g, &hbars).unwrap();
        assert!(r.leading_residual <= 1e-14 && r.first_order_residual <= 1e-14 && r.bracket_limit_residual <= 1e-14);
        if let Some(s) = r.slope {
            assert!((s - 2.0).abs() <= 0.05, "slope {s}");
        }
        // numerical limit of the bracket
        let m = moyal_bracket(&f, &g, 1e-5);
        assert!(m.dist(&classical_pb(&f, &g)) <= 1e-8);
    }
    assert!(matches!(classical_limit_report(&x, &p, &[0.0]), Err(Error::InvalidArgument(_))));
}

#[test]
fn hbar_symbols_stay_regular() {
    let mut rng = seeded(16);
    let f = HbarSymbol { orders: vec![PhasePolynomial::random(&mut rng, 3, 4), PhasePolynomial::random(&mut rng, 2, 3)] };
    let g = HbarSymbol { orders: vec![PhasePolynomial::random(&mut rng, 3, 4), PhasePolynomial::zero(), PhasePolynomial::random(&mut rng, 2, 3)] };
    let h = 0.45;
    assert!(f.star(&g).at(h).dist(&star(&f.at(h), &g.at(h), h)) < 1e-12);
    let m = f.moyal(&g).unwrap();
    assert!(m.at(h).dist(&moyal_bracket(&f.at(h), &g.at(h), h)) < 1e-12);
    assert!(m.limit().dist(&classical_pb(&f.limit(), &g.limit())) < 1e-14);
    // products of regular symbols tend to the pointwise product
    assert!(f.star(&g).limit().dist(&f.limit().mul(&g.limit())) < 1e-14);
}

#[test]
fn hamiltonian_flows() {
    // anharmonic H_W conserved along trajectories driven by the Moyal bracket
    let h = weyl_hamiltonian(1.3, &[0.0, 0.2, 0.5, 0.0, 0.1]).unwrap();
    let traj = moyal_trajectory(&h, 0.7, (0.8, -0.3), 10.0, 4000).unwrap();
    let e0 = h.eval(traj[0].0, traj[0].1).re;
    let drift = traj.iter().map(|&(x, p)| (h.eval(x, p).re - e0).abs()).fold(0.0, f64::max);
    assert!(drift <= 1e-6, "{drift:e}");
    assert!(weyl_hamiltonian(0.0, &[]).is_err());
    // oscillator: linear symbols follow the classical trajectory
    let ho = weyl_hamiltonian(1.0, &[0.0, 0.0, 0.5]).unwrap();
    let (x, p) = (PhasePolynomial::x(), PhasePolynomial::p());
    for h_ in [0.1, 1.0] {
        assert!(moyal_bracket(&ho, &x, h_).dist(&classical_pb(&ho, &x)) < 1e-15);
        assert!(moyal_bracket(&ho, &p, h_).dist(&classical_pb(&ho, &p)) < 1e-15);
    }
    let t = 1.7;
    let xt = evolve_symbol(&ho, &x, 0.3, t, 400).unwrap();
    let want = x.scale(c(t.cos(), 0.0)).add(&p.scale(c(t.sin(), 0.0)));
    assert!(xt.dist(&want) <= 1e-9);
    let traj = moyal_trajectory(&ho, 0.3, (1.0, 0.5), t, 400).unwrap();
    let (xe, pe) = *traj.last().unwrap();
    assert!((xe - (t.cos() + 0.5 * t.sin())).abs() <= 1e-9);
    assert!((pe - (0.5 * t.cos() - t.sin())).abs() <= 1e-9);
}

#[test]
fn integral_form_agrees_with_series() {
    // radial Gaussians: e^{-a r²} ⋆ e^{-b r²} = e^{-(a+b) r²/(1+ħ²ab)} / (1+ħ²ab)
    let (a, b, h) = (0.7, 1.3, 1.0);
    let f = move |x: f64, p: f64| c((-a * (x * x + p * p)).exp(), 0.0);
    let g = move |x: f64, p: f64| c((-b * (x * x + p * p)).exp(), 0.0);
    let got = star_integral(f, g, (0.4, 0.2), h, (5.0, 14.0), 44);
    let d = 1.0 + h * h * a * b;
    assert!((got - c((-(a + b) * 0.2 / d).exp() / d, 0.0)).norm() <= 1e-8);
    // off-centre separable pair against the Groenewold series with Hermite derivatives
    let h = 0.3;
    let (fx0, gp0) = (0.3, -0.4);
    let f = move |x: f64, p: f64| c((-(x - fx0).powi(2) - p * p).exp(), 0.0);
    let g = move |x: f64, p: f64| c((-x * x - (p - gp0).powi(2)).exp(), 0.0);
    let pt = (0.1, -0.2);
    let got = star_integral(f, g, pt, h, (4.5, 12.0), 48);
    let want = gaussian_star_series(fx0, gp0, pt, h, 24);

    assert!((got - want).norm() <= 1e-8, "{got} vs {want}");
    // and the commutator has the sign fixed by x ⋆ p − p ⋆ x = iħ
    let back = star_integral(g, f, pt, h, (4.5, 12.0), 48);
    let (x, p) = pt;
    let (fx, fp) = (-2.0 * (x - fx0) * f(x, p).re, -2.0 * p * f(x, p).re);
    let (gx, gp) = (-2.0 * x * g(x, p).re, -2.0 * (p - gp0) * g(x, p).re);
    let first = C64::new(0.0, h * (fx * gp - fp * gx));
    let comm = got - back;
    assert!(comm.im * first.im > 0.0 && (comm - first).norm() <= 0.5 * first.norm(), "{comm} vs {first}");
}

fn hermite(k: u32, t: f64) -> f64 {
    let (mut a, mut b) = (1.0, 2.0 * t);
    if k == 0 {
        return a;
    }
    for n in 1..k {
        let next = 2.0 * t * b - 2.0 * n as f64 * a;
        a = b;
        b = next;
    }
    b
}

/// dᵏ/dt e^{−(t−s)²} = (−1)ᵏ Hₖ(t−s) e^{−(t−s)²}
fn gauss_d(k: u32, t: f64, s: f64) -> f64 {
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    sign * hermite(k, t - s) * (-(t - s).powi(2)).exp()
}

fn gaussian_star_series(fx0: f64, gp0: f64, (x, p): (f64, f64), h: f64, order: u32) -> C64 {
    let mut total = C64::new(0.0, 0.0);
    let mut pref = C64::new(1.0, 0.0);
    for n in 0..=order {
        if n > 0 {
            pref *= C64::new(0.0, h / 2.0) / n as f64;
        }
        let mut s = 0.0;
        for k in 0..=n {
            let binom: f64 = (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let df = gauss_d(n - k, x, fx0) * gauss_d(k, p, 0.0);
            let dg = gauss_d(k, x, 0.0) * gauss_d(n - k, p, gp0);
            s += sign * binom * df * dg;
        }
        total += pref * s;
    }
    total
}

#[test]
fn wigner_of_the_ground_state() {
    for hbar in [1.0, 0.25] {
        let xs = phase_grid(hbar, 1.0, DEFAULT_POINTS);
        let w = wigner_function(&gaussian_state(&xs, hbar), &xs, hbar).unwrap();
        assert!(w.max_imag <= 1e-9);
        assert!((w.normalization() - 1.0).abs() <= 1e-3);
        let mut worst: f64 = 0.0;
        for (i, &x) in w.xs.iter().enumerate() {
            for (j, &p) in w.ps.iter().enumerate() {
                worst = worst.max((w.at(i, j) - 2.0 * (-(x * x + p * p) / hbar).exp()).abs());
            }
        }
        assert!(worst <= 1e-9, "{worst:e}");
        let (peak, px, pp) = w.max_value();
        assert!((peak - 2.0).abs() < 1e-3 && px.abs() < 0.05 * hbar.sqrt() && pp.abs() < 0.05 * hbar.sqrt());
        let e = |f: PhasePolynomial| weyl_expectation(&f, &w).unwrap();
        assert!((e(PhasePolynomial::one()) - 1.0).abs() <= 1e-4);
        assert!((e(PhasePolynomial::monomial(2, 0, c(1.0, 0.0))) - hbar / 2.0).abs() <= 1e-4);
        let r2 = PhasePolynomial::monomial(2, 0, c(1.0, 0.0)).add(&PhasePolynomial::monomial(0, 2, c(1.0, 0.0)));
        assert!((e(r2) - hbar).abs() <= 1e-4);
    }
}

#[test]
fn wigner_of_other_states() {
    let hbar = 0.5;
    let xs = phase_grid(hbar, 2.0, 401);
    let (x0, p0) = (0.6, -0.4);
    let w = wigner_function(&coherent_state(&xs, hbar, x0, p0), &xs, hbar).unwrap();
    let e = |f: PhasePolynomial| weyl_expectation(&f, &w).unwrap();
    assert!((e(PhasePolynomial::x()) - x0).abs() <= 1e-6);
    assert!((e(PhasePolynomial::p()) - p0).abs() <= 1e-6);
    // symmetrized xp has symbol xp
    assert!((e(PhasePolynomial::monomial(1, 1, c(1.0, 0.0))) - x0 * p0).abs() <= 1e-6);
    let w1 = wigner_function(&first_excited_state(&xs, hbar), &xs, hbar).unwrap();
    let mid = xs.len() / 2;
    assert!((w1.at(mid, mid) + 2.0).abs() <= 1e-6);
    let r2 = PhasePolynomial::monomial(2, 0, c(0.5, 0.0)).add(&PhasePolynomial::monomial(0, 2, c(0.5, 0.0)));
    assert!((weyl_expectation(&r2, &w1).unwrap() - 1.5 * hbar).abs() <= 1e-6);
    let csv = w1.to_csv();
    assert!(csv.starts_with("x,p,W\n"));
    assert_eq!(csv.lines().count(), 1 + xs.len() * xs.len());
}

#[test]
fn wigner_errors() {
    let hbar = 1.0;
    // truncated grid: ψ still large at the edges
    let xs: Vec<f64> = (0..101).map(|i| -2.0 + 0.04 * i as f64).collect();
    assert!(matches!(wigner_function(&gaussian_state(&xs, hbar), &xs, hbar), Err(Error::Grid(_))));
    // unnormalized input
    let xs = phase_grid(hbar, 1.0, 201);
    let psi: Vec<C64> = gaussian_state(&xs, hbar).iter().map(|z| z * 1.1).collect();
    assert!(matches!(wigner_function(&psi, &xs, hbar), Err(Error::Grid(_))));
    // a coarse grid fails the Richardson comparison
    let xs = phase_grid(hbar, 1.0, 25);
    let w = wigner_function(&gaussian_state(&xs, hbar), &xs, hbar).unwrap();
    assert!(matches!(weyl_expectation(&PhasePolynomial::one(), &w), Err(Error::Grid(_))));
    let w = wigner_function(&gaussian_state(&phase_grid(hbar, 1.0, 201), hbar), &phase_grid(hbar, 1.0, 201), hbar).unwrap();
    assert!(matches!(weyl_expectation(&PhasePolynomial::monomial(2, 0, c(0.0, 1.0)), &w), Err(Error::InvalidArgument(_))));
}
