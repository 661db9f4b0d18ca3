//! Weyl symbols on a two-dimensional phase space `(x, p)`: the Groenewold star
//! product, Moyal brackets, their ħ → 0 behaviour, and Wigner functions of
//! sampled wave functions.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, C64, ZERO};

const PRUNE: f64 = 1e-300;

/// Polynomial symbol `Σ c_ab xᵃ pᵇ`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhasePolynomial {
    terms: BTreeMap<(u32, u32), C64>,
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn falling(a: u32, k: u32) -> f64 {
    (0..k).map(|i| (a - i) as f64).product()
}

fn fact(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

impl PhasePolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(z: C64) -> Self {
        Self::monomial(0, 0, z)
    }

    pub fn one() -> Self {
        Self::constant(c(1.0, 0.0))
    }

    pub fn x() -> Self {
        Self::monomial(1, 0, c(1.0, 0.0))
    }

    pub fn p() -> Self {
        Self::monomial(0, 1, c(1.0, 0.0))
    }

    pub fn monomial(a: u32, b: u32, z: C64) -> Self {
        let mut f = Self::zero();
        f.push(a, b, z);
        f
    }

    pub fn from_terms<I: IntoIterator<Item = ((u32, u32), C64)>>(it: I) -> Self {
        let mut f = Self::zero();
        for ((a, b), z) in it {
            f.push(a, b, z);
        }
        f
    }

    fn push(&mut self, a: u32, b: u32, z: C64) {
        let e = self.terms.entry((a, b)).or_insert(ZERO);
        *e += z;
        if e.norm() <= PRUNE {
            self.terms.remove(&(a, b));
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &C64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, a: u32, b: u32) -> C64 {
        self.terms.get(&(a, b)).copied().unwrap_or(ZERO)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(a, b)| a + b).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (&(a, b), &z) in &o.terms {
            r.push(a, b, z);
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(c(-1.0, 0.0)))
    }

    pub fn scale(&self, z: C64) -> Self {
        Self::from_terms(self.terms.iter().map(|(&k, &v)| (k, v * z)))
    }

    /// Pointwise product.
    pub fn mul(&self, o: &Self) -> Self {
        let mut r = Self::zero();
        for (&(a, b), &u) in &self.terms {
            for (&(a2, b2), &v) in &o.terms {
                r.push(a + a2, b + b2, u * v);
            }
        }
        r
    }

    pub fn conj(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|(&k, v)| (k, v.conj())))
    }

    /// `∂ₓᵏ ∂ₚˡ`.
    pub fn deriv(&self, k: u32, l: u32) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|((a, b), _)| *a >= k && *b >= l)
                .map(|(&(a, b), &z)| ((a - k, b - l), z * falling(a, k) * falling(b, l))),
        )
    }

    pub fn eval(&self, x: f64, p: f64) -> C64 {
        self.terms.iter().map(|(&(a, b), &z)| z * x.powi(a as i32) * p.powi(b as i32)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn dist(&self, o: &Self) -> f64 {
        self.sub(o).max_abs()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.terms.values().all(|z| z.im.abs() <= tol)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, deg: u32, terms: usize) -> Self {
        let mut f = Self::zero();
        for _ in 0..terms {
            let a = rng.gen_range(0..=deg);
            let b = rng.gen_range(0..=deg - a);
            f.push(a, b, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        f
    }

    pub fn random_real<R: Rng + ?Sized>(rng: &mut R, deg: u32, terms: usize) -> Self {
        let f = Self::random(rng, deg, terms);
        Self::from_terms(f.terms.iter().map(|(&k, z)| (k, c(z.re, 0.0))))
    }

    pub fn to_table(&self) -> Vec<PhaseTerm> {
        self.terms.iter().map(|(&(a, b), z)| PhaseTerm { x: a, p: b, coeff: [z.re, z.im] }).collect()
    }

    pub fn from_table(t: &[PhaseTerm]) -> Self {
        Self::from_terms(t.iter().map(|e| ((e.x, e.p), c(e.coeff[0], e.coeff[1]))))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTerm {
    pub x: u32,
    pub p: u32,
    pub coeff: [f64; 2],
}

/// `{f, g}_cl = ∂ₚf ∂ₓg − ∂ₓf ∂ₚg`.
pub fn classical_pb(f: &PhasePolynomial, g: &PhasePolynomial) -> PhasePolynomial {
    f.deriv(0, 1).mul(&g.deriv(1, 0)).sub(&f.deriv(1, 0).mul(&g.deriv(0, 1)))
}

/// ħ-free coefficients `T_n` of `f ⋆ g = Σ ħⁿ T_n`.
pub fn star_series(f: &PhasePolynomial, g: &PhasePolynomial) -> Vec<PhasePolynomial> {
    let top = f.degree().min(g.degree());
    (0..=top)
        .map(|n| {
            let mut t = PhasePolynomial::zero();
            for k in 0..=n {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let term = f.deriv(n - k, k).mul(&g.deriv(k, n - k));
                t = t.add(&term.scale(c(sign * binom(n, k), 0.0)));
            }
            // (i/2)ⁿ / n!
            let i_pow = match n % 4 {
                0 => c(1.0, 0.0),
                1 => c(0.0, 1.0),
                2 => c(-1.0, 0.0),
                _ => c(0.0, -1.0),
            };
            t.scale(i_pow / (2f64.powi(n as i32) * fact(n)))
        })
        .collect()
}

/// Groenewold series, exact on polynomials: `f ⋆ g = Σ (iħ/2)ⁿ/n! f (←∂ₓ→∂ₚ − ←∂ₚ→∂ₓ)ⁿ g`.
pub fn star(f: &PhasePolynomial, g: &PhasePolynomial, hbar: f64) -> PhasePolynomial {
    star_series(f, g)
        .iter()
        .enumerate()
        .fold(PhasePolynomial::zero(), |acc, (n, t)| acc.add(&t.scale(c(hbar.powi(n as i32), 0.0))))
}

/// `(−iħ)⁻¹(f ⋆ g − g ⋆ f)`. Only odd orders survive and their prefactors are real,
/// so the sum is formed directly: `Σ_{n odd} (−1)^{(n+1)/2} ħ^{n−1} / (2^{n−1} n!) · Λⁿ(f, g)`.
pub fn moyal_bracket(f: &PhasePolynomial, g: &PhasePolynomial, hbar: f64) -> PhasePolynomial {
    let top = f.degree().min(g.degree());
    let mut out = PhasePolynomial::zero();
    for n in (1..=top).step_by(2) {
        let mut t = PhasePolynomial::zero();
        for k in 0..=n {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            t = t.add(&f.deriv(n - k, k).mul(&g.deriv(k, n - k)).scale(c(sign * binom(n, k), 0.0)));
        }
        let sign = if n % 4 == 1 { -1.0 } else { 1.0 };
        let w = sign * hbar.powi(n as i32 - 1) / (2f64.powi(n as i32 - 1) * fact(n));
        out = out.add(&t.scale(c(w, 0.0)));
    }
    out
}

/// Symbols whose coefficients are polynomials in ħ with nonnegative powers;
/// `orders[k]` multiplies ħᵏ. This is the decidable stand-in for the regular class.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HbarSymbol {
    pub orders: Vec<PhasePolynomial>,
}

impl HbarSymbol {
    pub fn classical(f: PhasePolynomial) -> Self {
        HbarSymbol { orders: vec![f] }
    }

    pub fn at(&self, hbar: f64) -> PhasePolynomial {
        self.orders
            .iter()
            .enumerate()
            .fold(PhasePolynomial::zero(), |acc, (k, t)| acc.add(&t.scale(c(hbar.powi(k as i32), 0.0))))
    }

    pub fn limit(&self) -> PhasePolynomial {
        self.orders.first().cloned().unwrap_or_default()
    }

    /// Star product with exact ħ bookkeeping.
    pub fn star(&self, o: &Self) -> Self {
        let mut orders: Vec<PhasePolynomial> = Vec::new();
        for (i, f) in self.orders.iter().enumerate() {
            for (j, g) in o.orders.iter().enumerate() {
                for (n, t) in star_series(f, g).into_iter().enumerate() {
                    let k = i + j + n;
                    if orders.len() <= k {
                        orders.resize(k + 1, PhasePolynomial::zero());
                    }
                    orders[k] = orders[k].add(&t);
                }
            }
        }
        HbarSymbol { orders }
    }

    /// Moyal bracket; the commutator has no ħ⁰ part, so the division by −iħ keeps powers nonnegative.
    pub fn moyal(&self, o: &Self) -> Result<Self> {
        let fg = self.star(o);
        let gf = o.star(self);
        let n = fg.orders.len().max(gf.orders.len());
        let get = |s: &HbarSymbol, k: usize| s.orders.get(k).cloned().unwrap_or_default();
        let comm: Vec<_> = (0..n).map(|k| get(&fg, k).sub(&get(&gf, k))).collect();
        if comm.first().is_some_and(|t| t.max_abs() > 1e-12) {
            return Err(Error::Internal("commutator has an ħ⁰ part".into()));
        }
        let orders = comm.into_iter().skip(1).map(|t| t.scale(c(0.0, 1.0))).collect();
        Ok(HbarSymbol { orders })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LimitPoint {
    pub hbar: f64,
    pub remainder: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassicalLimitReport {
    pub leading: Vec<PhaseTerm>,
    pub first_order: Vec<PhaseTerm>,
    /// max |leading − fg|, exact arithmetic up to rounding.
    pub leading_residual: f64,
    /// max |first − (−i/2){f,g}_cl|.
    pub first_order_residual: f64,
    pub points: Vec<LimitPoint>,
    /// Log-log slope of the remainder norm; `None` when the remainder vanishes.
    pub slope: Option<f64>,
    pub bracket_limit_residual: f64,
}

/// Splits `f ⋆ g` into `fg`, the ħ¹ term and a remainder whose size is fitted against ħ.
pub fn classical_limit_report(f: &PhasePolynomial, g: &PhasePolynomial, hbars: &[f64]) -> Result<ClassicalLimitReport> {
    if hbars.iter().any(|&h| h <= 0.0) {
        return Err(Error::InvalidArgument("ħ values must be positive".into()));
    }
    let series = star_series(f, g);
    let leading = series[0].clone();
    let first = series.get(1).cloned().unwrap_or_default();
    let fg = f.mul(g);
    let pb = classical_pb(f, g);
    let mut points = Vec::with_capacity(hbars.len());
    for &h in hbars {
        let rem = star(f, g, h).sub(&fg).sub(&first.scale(c(h, 0.0)));
        points.push(LimitPoint { hbar: h, remainder: rem.max_abs() });
    }
    let fit: Vec<(f64, f64)> = points.iter().filter(|q| q.remainder > 0.0).map(|q| (q.hbar.ln(), q.remainder.ln())).collect();
    let slope = (fit.len() >= 2 && fit.len() == points.len()).then(|| {
        let n = fit.len() as f64;
        let mx = fit.iter().map(|q| q.0).sum::<f64>() / n;
        let my = fit.iter().map(|q| q.1).sum::<f64>() / n;
        let sxy: f64 = fit.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum();
        let sxx: f64 = fit.iter().map(|q| (q.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    // {f,g}_M → {f,g}_cl: the ħ⁰ coefficient of the exact bracket
    let m = HbarSymbol::classical(f.clone()).moyal(&HbarSymbol::classical(g.clone()))?;
    Ok(ClassicalLimitReport {
        leading: leading.to_table(),
        first_order: first.to_table(),
        leading_residual: leading.dist(&fg),
        first_order_residual: first.dist(&pb.scale(c(0.0, -0.5))),
        points,
        slope,
        bracket_limit_residual: m.limit().dist(&pb),
    })
}

/// RK4 for the symbol flow `df/dt = {H, f}_M`.
pub fn evolve_symbol(h: &PhasePolynomial, f: &PhasePolynomial, hbar: f64, t: f64, steps: usize) -> Result<PhasePolynomial> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be positive".into()));
    }
    let dt = t / steps as f64;
    let rhs = |u: &PhasePolynomial| moyal_bracket(h, u, hbar);
    let mut u = f.clone();
    for _ in 0..steps {
        let k1 = rhs(&u);
        let k2 = rhs(&u.add(&k1.scale(c(dt / 2.0, 0.0))));
        let k3 = rhs(&u.add(&k2.scale(c(dt / 2.0, 0.0))));
        let k4 = rhs(&u.add(&k3.scale(c(dt, 0.0))));
        let inc = k1.add(&k2.scale(c(2.0, 0.0))).add(&k3.scale(c(2.0, 0.0))).add(&k4);
        u = u.add(&inc.scale(c(dt / 6.0, 0.0)));
    }
    Ok(u)
}

/// Phase-space trajectory driven by `(ẋ, ṗ) = ({H, x}_M, {H, p}_M)`, RK4.
pub fn moyal_trajectory(h: &PhasePolynomial, hbar: f64, start: (f64, f64), t: f64, steps: usize) -> Result<Vec<(f64, f64)>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be positive".into()));
    }
    let vx = moyal_bracket(h, &PhasePolynomial::x(), hbar);
    let vp = moyal_bracket(h, &PhasePolynomial::p(), hbar);
    let field = |x: f64, p: f64| (vx.eval(x, p).re, vp.eval(x, p).re);
    let dt = t / steps as f64;
    let (mut x, mut p) = start;
    let mut out = vec![(x, p)];
    for _ in 0..steps {
        let k1 = field(x, p);
        let k2 = field(x + dt / 2.0 * k1.0, p + dt / 2.0 * k1.1);
        let k3 = field(x + dt / 2.0 * k2.0, p + dt / 2.0 * k2.1);
        let k4 = field(x + dt * k3.0, p + dt * k3.1);
        x += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        p += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        out.push((x, p));
    }
    Ok(out)
}

/// `H_W = p²/2m + V(x)` with `V = Σ vₖ xᵏ`.
pub fn weyl_hamiltonian(mass: f64, potential: &[f64]) -> Result<PhasePolynomial> {
    if mass <= 0.0 {
        return Err(Error::InvalidArgument("mass must be positive".into()));
    }
    let mut h = PhasePolynomial::monomial(0, 2, c(0.5 / mass, 0.0));
    for (k, &v) in potential.iter().enumerate() {
        h = h.add(&PhasePolynomial::monomial(k as u32, 0, c(v, 0.0)));
    }
    Ok(h)
}

/// Twisted-product integral at a single phase point, by tensor trapezoid quadrature:
/// `(2π)⁻² ∬ exp[−iσ(ξ−η, τ)] A(η + ħτ/4) B(η − ħτ/4) dη dτ`, `σ(ξ, ξ') = p x' − x p'`.
pub fn star_integral<F, G>(a: F, b: G, point: (f64, f64), hbar: f64, half_width: (f64, f64), n: usize) -> C64
where
    F: Fn(f64, f64) -> C64 + Sync,
    G: Fn(f64, f64) -> C64 + Sync,
{
    let (x, p) = point;
    let (le, lt) = half_width;
    let he = 2.0 * le / (n - 1) as f64;
    let ht = 2.0 * lt / (n - 1) as f64;
    let axis = |l: f64, h: f64| (0..n).map(move |i| -l + h * i as f64);
    let eta: Vec<f64> = axis(le, he).collect();
    let tau: Vec<f64> = axis(lt, ht).collect();
    let w = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let total: C64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = ZERO;
            for j in 0..n {
                let (ex, ep) = (eta[i], eta[j]);
                let (ux, up) = (x - ex, p - ep);
                for k in 0..n {
                    for l in 0..n {
                        let (tx, tp) = (tau[k], tau[l]);
                        let phase = -(up * tx - ux * tp);
                        let val = a(ex + hbar * tx / 4.0, ep + hbar * tp / 4.0) * b(ex - hbar * tx / 4.0, ep - hbar * tp / 4.0);
                        acc += val * C64::from_polar(w(j) * w(k) * w(l), phase);
                    }
                }
            }
            acc * w(i)
        })
        .collect::<Vec<C64>>()
        .into_iter()
        .sum();
    total * he * he * ht * ht / (4.0 * PI * PI)
}

/// Wigner function samples; `values[i * n + j]` is `W(xs[i], ps[j])`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WignerGrid {
    pub hbar: f64,
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    pub values: Vec<f64>,
    pub max_imag: f64,
}

pub const DEFAULT_POINTS: usize = 512;
const BOUNDARY_TOL: f64 = 1e-8;
const NORM_TOL: f64 = 1e-6;
const RICHARDSON_TOL: f64 = 1e-3;

/// `[−L, L]` with `L = 8√ħ · max(1, spread)`, where spread is σₓ in units of the
/// oscillator ground-state width `√(ħ/2)`.
pub fn phase_grid(hbar: f64, spread: f64, n: usize) -> Vec<f64> {
    let l = 8.0 * hbar.sqrt() * spread.max(1.0);
    let h = 2.0 * l / (n - 1) as f64;
    (0..n).map(|i| -l + h * i as f64).collect()
}

/// Oscillator ground state (m = ω = 1) sampled on `xs`.
pub fn gaussian_state(xs: &[f64], hbar: f64) -> Vec<C64> {
    coherent_state(xs, hbar, 0.0, 0.0)
}

/// Displaced ground state centred at `(x0, p0)`.
pub fn coherent_state(xs: &[f64], hbar: f64, x0: f64, p0: f64) -> Vec<C64> {
    let norm = (PI * hbar).powf(-0.25);
    xs.iter()
        .map(|&x| C64::from_polar(norm * (-(x - x0).powi(2) / (2.0 * hbar)).exp(), p0 * x / hbar))
        .collect()
}

/// First excited oscillator state; its Wigner function is negative at the origin.
pub fn first_excited_state(xs: &[f64], hbar: f64) -> Vec<C64> {
    let norm = (PI * hbar).powf(-0.25) * (2.0 / hbar).sqrt();
    xs.iter().map(|&x| c(norm * x * (-x * x / (2.0 * hbar)).exp(), 0.0)).collect()
}

fn trapezoid_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i == n - 1 {
        0.5
    } else {
        1.0
    }
}

/// `W(x, p) = ∫ e^{−ipy/ħ} ψ(x + y/2) ψ*(x − y/2) dy`, evaluated on the square grid
/// spanned by `xs` (also used as the momentum axis). The pairing measure is `dx dp / 2πħ`.
pub fn wigner_function(psi: &[C64], xs: &[f64], hbar: f64) -> Result<WignerGrid> {
    let n = xs.len();
    if hbar <= 0.0 {
        return Err(Error::InvalidArgument("ħ must be positive".into()));
    }
    if n < 3 || psi.len() != n {
        return Err(Error::InvalidArgument("ψ and grid lengths differ or grid too small".into()));
    }
    let h = (xs[n - 1] - xs[0]) / (n - 1) as f64;
    if xs.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0)) || h <= 0.0 {
        return Err(Error::InvalidArgument("grid must be uniform and increasing".into()));
    }
    let edge = psi[0].norm().max(psi[n - 1].norm());
    if edge >= BOUNDARY_TOL {
        return Err(Error::Grid(format!("|ψ| = {edge:e} at the boundary")));
    }
    let mass: f64 = psi.iter().enumerate().map(|(i, z)| trapezoid_weight(i, n) * z.norm_sqr()).sum::<f64>() * h;
    if (mass - 1.0).abs() > NORM_TOL {
        return Err(Error::Grid(format!("ψ not normalized on the grid (mass {mass})")));
    }
    let ps = xs.to_vec();
    // y = 2kh keeps x ± y/2 on grid nodes; trapezoid in y with step 2h
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let kmax = i.min(n - 1 - i);
            let pairs: Vec<(f64, C64)> = (0..=kmax).map(|k| (2.0 * k as f64 * h, psi[i + k] * psi[i - k].conj())).collect();
            let mut row = Vec::with_capacity(n);
            let mut imag: f64 = 0.0;
            for &p in &ps {
                let mut acc = pairs[0].1;
                for &(y, z) in &pairs[1..] {
                    let e = C64::from_polar(1.0, -p * y / hbar);
                    // the ±y terms are conjugate partners
                    acc += e * z + e.conj() * z.conj();
                }
                let w = acc * 2.0 * h;
                imag = imag.max(w.im.abs());
                row.push(w.re);
            }
            (row, imag)
        })
        .collect();
    let max_imag = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let values = rows.into_iter().flat_map(|r| r.0).collect();
    Ok(WignerGrid { hbar, xs: xs.to_vec(), ps, values, max_imag })
}

impl WignerGrid {
    pub fn n(&self) -> usize {
        self.xs.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ps.len() + j]
    }

    fn quadrature(&self, stride: usize, f: &(dyn Fn(f64, f64) -> f64 + Sync)) -> f64 {
        let (nx, np) = (self.xs.len(), self.ps.len());
        let hx = (self.xs[nx - 1] - self.xs[0]) / (nx - 1) as f64 * stride as f64;
        let hp = (self.ps[np - 1] - self.ps[0]) / (np - 1) as f64 * stride as f64;
        let ix: Vec<usize> = (0..nx).step_by(stride).collect();
        let ip: Vec<usize> = (0..np).step_by(stride).collect();
        let s: f64 = ix
            .par_iter()
            .enumerate()
            .map(|(a, &i)| {
                let wa = trapezoid_weight(a, ix.len());
                ip.iter().enumerate().map(|(b, &j)| wa * trapezoid_weight(b, ip.len()) * f(self.xs[i], self.ps[j]) * self.at(i, j)).sum::<f64>()
            })
            // ordered reduction keeps reports bit-reproducible
            .collect::<Vec<f64>>()
            .into_iter()
            .sum();
        s * hx * hp / (2.0 * PI * self.hbar)
    }

    /// `∬ W dx dp / 2πħ`.
    pub fn normalization(&self) -> f64 {
        self.quadrature(1, &|_, _| 1.0)
    }

    pub fn max_value(&self) -> (f64, f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for (i, &x) in self.xs.iter().enumerate() {
            for (j, &p) in self.ps.iter().enumerate() {
                if self.at(i, j) > best.0 {
                    best = (self.at(i, j), x, p);
                }
            }
        }
        best
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,p,W\n");
        for (i, x) in self.xs.iter().enumerate() {
            for (j, p) in self.ps.iter().enumerate() {
                let _ = writeln!(s, "{x:.12e},{p:.12e},{:.12e}", self.at(i, j));
            }
        }
        s
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeylExpectation {
    pub value: f64,
    pub coarse: f64,
    pub richardson: f64,
}

/// `∬ A_W W dx dp / 2πħ` with a half-resolution Richardson check. On an even grid the
/// coarse pass drops the last node, where W has already decayed.
pub fn weyl_expectation_report(a: &PhasePolynomial, w: &WignerGrid) -> Result<WeylExpectation> {
    if !a.is_real(0.0) {
        return Err(Error::InvalidArgument("observable symbol must have real coefficients".into()));
    }
    let f = |x: f64, p: f64| a.eval(x, p).re;
    let fine = w.quadrature(1, &f);
    let coarse = w.quadrature(2, &f);
    if (fine - coarse).abs() > RICHARDSON_TOL {
        return Err(Error::Grid(format!("Richardson disagreement {:e}", (fine - coarse).abs())));
    }
    Ok(WeylExpectation { value: fine, coarse, richardson: (4.0 * fine - coarse) / 3.0 })
}

pub fn weyl_expectation(a: &PhasePolynomial, w: &WignerGrid) -> Result<f64> {
    weyl_expectation_report(a, w).map(|r| r.value)
}
