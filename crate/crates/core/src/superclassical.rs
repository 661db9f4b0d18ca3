//! Functions on superspaces `R^{m|n}`: polynomials in even coordinates `x¹..xᵐ`
//! times monomials in odd generators `θ¹..θⁿ`. Odd monomials are bit-sets with
//! generators multiplied in ascending order.
//!
//! Berezin integration uses `∫ θⁿ⋯θ²θ¹ = 1`, i.e. the coefficient of the ascending
//! top monomial `θ¹⋯θⁿ` times `(-1)^(n(n-1)/2)`.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, Element, Parity};
use crate::linalg::{self, c, CMat, CVec, C64, ZERO};
use crate::{Error, Result};

const ZERO_TOL: f64 = 0.0;

/// Key of a term: odd bit-set plus the exponents of the even variables.
type Key = (u64, Vec<u32>);

#[derive(Clone, Debug, PartialEq)]
pub struct GrassmannElement {
    m: usize,
    n: usize,
    terms: BTreeMap<Key, C64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Side {
    Left,
    Right,
}

/// Sign of moving the generators of `a` past those of `b` into ascending order.
fn merge_sign(a: u64, b: u64) -> f64 {
    let mut count = 0u32;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros();
        count += (a >> (j + 1)).count_ones();
        bb &= bb - 1;
    }
    linalg::sign(count % 2 == 1)
}

impl GrassmannElement {
    pub fn zero(m: usize, n: usize) -> GrassmannElement {
        GrassmannElement { m, n, terms: BTreeMap::new() }
    }

    pub fn constant(m: usize, n: usize, z: C64) -> GrassmannElement {
        let mut f = GrassmannElement::zero(m, n);
        f.add_term(0, vec![0; m], z);
        f
    }

    /// The odd generator `θ^α`, `α` counted from 1.
    pub fn theta(m: usize, n: usize, alpha: usize) -> Result<GrassmannElement> {
        if alpha == 0 || alpha > n {
            return Err(Error::InvalidArgument(format!("odd generator index {alpha} out of 1..={n}")));
        }
        let mut f = GrassmannElement::zero(m, n);
        f.add_term(1 << (alpha - 1), vec![0; m], c(1.0, 0.0));
        Ok(f)
    }

    /// The even coordinate `x^i`, `i` counted from 1.
    pub fn x(m: usize, n: usize, i: usize) -> Result<GrassmannElement> {
        if i == 0 || i > m {
            return Err(Error::InvalidArgument(format!("even coordinate index {i} out of 1..={m}")));
        }
        let mut e = vec![0; m];
        e[i - 1] = 1;
        let mut f = GrassmannElement::zero(m, n);
        f.add_term(0, e, c(1.0, 0.0));
        Ok(f)
    }

    /// Single term `z x^exps θ^bits`.
    pub fn monomial(m: usize, n: usize, bits: u64, exps: Vec<u32>, z: C64) -> Result<GrassmannElement> {
        if exps.len() != m || (n < 64 && bits >> n != 0) {
            return Err(Error::InvalidArgument("monomial does not fit the superspace".into()));
        }
        let mut f = GrassmannElement::zero(m, n);
        f.add_term(bits, exps, z);
        Ok(f)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Key, &C64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, bits: u64, exps: &[u32]) -> C64 {
        self.terms.get(&(bits, exps.to_vec())).copied().unwrap_or(ZERO)
    }

    fn add_term(&mut self, bits: u64, exps: Vec<u32>, z: C64) {
        if z.norm() <= ZERO_TOL {
            return;
        }
        let key = (bits, exps);
        let v = self.terms.entry(key.clone()).or_insert(ZERO);
        *v += z;
        if v.norm() <= ZERO_TOL {
            self.terms.remove(&key);
        }
    }

    fn same(&self, o: &GrassmannElement) -> Result<()> {
        if self.m != o.m || self.n != o.n {
            return Err(Error::InvalidArgument(format!(
                "superspace mismatch: {}|{} vs {}|{}",
                self.m, self.n, o.m, o.n
            )));
        }
        Ok(())
    }

    pub fn add(&self, o: &GrassmannElement) -> Result<GrassmannElement> {
        self.same(o)?;
        let mut r = self.clone();
        for ((b, e), z) in &o.terms {
            r.add_term(*b, e.clone(), *z);
        }
        Ok(r)
    }

    pub fn sub(&self, o: &GrassmannElement) -> Result<GrassmannElement> {
        self.add(&o.scale(c(-1.0, 0.0)))
    }

    pub fn scale(&self, z: C64) -> GrassmannElement {
        let mut r = GrassmannElement::zero(self.m, self.n);
        for ((b, e), v) in &self.terms {
            r.add_term(*b, e.clone(), v * z);
        }
        r
    }

    pub fn mul(&self, o: &GrassmannElement) -> Result<GrassmannElement> {
        self.same(o)?;
        let mut r = GrassmannElement::zero(self.m, self.n);
        for ((b1, e1), z1) in &self.terms {
            for ((b2, e2), z2) in &o.terms {
                if b1 & b2 != 0 {
                    continue;
                }
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                r.add_term(b1 | b2, e, z1 * z2 * merge_sign(*b1, *b2));
            }
        }
        Ok(r)
    }

    /// Conjugates coefficients; generators and coordinates are self-adjoint.
    pub fn star(&self) -> GrassmannElement {
        let mut r = GrassmannElement::zero(self.m, self.n);
        for ((b, e), z) in &self.terms {
            r.add_term(*b, e.clone(), z.conj());
        }
        r
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn dist(&self, o: &GrassmannElement) -> f64 {
        self.sub(o).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
    }

    /// `None` for inhomogeneous elements; zero counts as even.
    pub fn parity(&self) -> Option<Parity> {
        let mut found: Option<Parity> = None;
        for (b, _) in self.terms.keys() {
            let p = Parity::from_bit((b.count_ones() % 2) as u8);
            match found {
                None => found = Some(p),
                Some(q) if q != p => return None,
                _ => {}
            }
        }
        Some(found.unwrap_or(Parity::Even))
    }

    pub fn part(&self, p: Parity) -> GrassmannElement {
        let mut r = GrassmannElement::zero(self.m, self.n);
        for ((b, e), z) in &self.terms {
            if (b.count_ones() % 2 == 1) == p.is_odd() {
                r.add_term(*b, e.clone(), *z);
            }
        }
        r
    }

    /// `∂/∂θ^α` from the left (sign = parity of generators before `θ^α`) or the right
    /// (sign = parity of generators after it).
    pub fn odd_partial(&self, side: Side, alpha: usize) -> Result<GrassmannElement> {
        if alpha == 0 || alpha > self.n {
            return Err(Error::InvalidArgument(format!("odd generator index {alpha} out of 1..={}", self.n)));
        }
        let bit = 1u64 << (alpha - 1);
        let mut r = GrassmannElement::zero(self.m, self.n);
        for ((b, e), z) in &self.terms {
            if b & bit == 0 {
                continue;
            }
            let before = (b & (bit - 1)).count_ones();
            let after = (b >> alpha).count_ones();
            let k = match side {
                Side::Left => before,
                Side::Right => after,
            };
            r.add_term(b & !bit, e.clone(), z * linalg::sign(k % 2 == 1));
        }
        Ok(r)
    }

    /// `∂/∂x^i`.
    pub fn even_partial(&self, i: usize) -> Result<GrassmannElement> {
        if i == 0 || i > self.m {
            return Err(Error::InvalidArgument(format!("even coordinate index {i} out of 1..={}", self.m)));
        }
        let mut r = GrassmannElement::zero(self.m, self.n);
        for ((b, e), z) in &self.terms {
            let k = e[i - 1];
            if k == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i - 1] -= 1;
            r.add_term(*b, e2, z * k as f64);
        }
        Ok(r)
    }

    /// Derivative along superspace coordinate `A` (0-based; even coordinates first).
    pub fn partial(&self, side: Side, a: usize) -> Result<GrassmannElement> {
        if a < self.m {
            self.even_partial(a + 1)
        } else {
            self.odd_partial(side, a - self.m + 1)
        }
    }

    /// Value at an even point: remaining Grassmann coefficients (bit-set -> value).
    pub fn eval_even(&self, x: &[f64]) -> Result<BTreeMap<u64, C64>> {
        if x.len() != self.m {
            return Err(Error::InvalidArgument("point dimension mismatch".into()));
        }
        let mut out = BTreeMap::new();
        for ((b, e), z) in &self.terms {
            let v: f64 = e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product();
            *out.entry(*b).or_insert(ZERO) += z * v;
        }
        Ok(out)
    }

    /// Coefficients in the basis of `Algebra::grassmann(n)` (no even variables).
    pub fn to_element(&self, alg: &Algebra) -> Result<Element> {
        if self.m != 0 || alg.dim() != 1usize << self.n {
            return Err(Error::AlgebraMismatch);
        }
        let mut v = CVec::zeros(alg.dim());
        for ((b, _), z) in &self.terms {
            v[*b as usize] += z;
        }
        Ok(alg.element(v))
    }

    pub fn from_coeffs(n: usize, v: &CVec) -> Result<GrassmannElement> {
        if v.len() != 1usize << n {
            return Err(Error::InvalidArgument("coefficient vector length must be 2^n".into()));
        }
        let mut f = GrassmannElement::zero(0, n);
        for (b, z) in v.iter().enumerate() {
            f.add_term(b as u64, vec![], *z);
        }
        Ok(f)
    }

    /// Berezin integral over the odd generators.
    pub fn berezin(&self) -> Result<C64> {
        if self.m != 0 {
            return Err(Error::InvalidArgument("even variables present; use berezin_box".into()));
        }
        Ok(self.coeff(top(self.n), &[]) * top_sign(self.n))
    }

    /// Berezin integral times the integral over the box `∏[lo_i, hi_i]` in the even variables.
    pub fn berezin_box(&self, bounds: &[(f64, f64)]) -> Result<C64> {
        if bounds.len() != self.m {
            return Err(Error::InvalidArgument("one interval per even variable".into()));
        }
        let t = top(self.n);
        let mut acc = ZERO;
        for ((b, e), z) in &self.terms {
            if *b != t {
                continue;
            }
            let mut v = 1.0;
            for (&k, &(lo, hi)) in e.iter().zip(bounds) {
                let k1 = k as i32 + 1;
                v *= (hi.powi(k1) - lo.powi(k1)) / k1 as f64;
            }
            acc += z * v;
        }
        Ok(acc * top_sign(self.n))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_table()).expect("serializable")
    }

    pub fn to_table(&self) -> GrassmannTable {
        GrassmannTable {
            m: self.m,
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|((b, e), z)| GrassmannTerm { monomial_bits: *b, exponents: e.clone(), coeff: [z.re, z.im] })
                .collect(),
        }
    }

    pub fn from_table(t: &GrassmannTable) -> Result<GrassmannElement> {
        let mut f = GrassmannElement::zero(t.m, t.n);
        for term in &t.terms {
            let g = GrassmannElement::monomial(t.m, t.n, term.monomial_bits, term.exponents.clone(), c(term.coeff[0], term.coeff[1]))?;
            f = f.add(&g)?;
        }
        Ok(f)
    }

    /// Random polynomial with total even degree `≤ deg` and up to `terms` terms.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize, deg: u32, terms: usize, parity: Option<Parity>) -> GrassmannElement {
        let mut f = GrassmannElement::zero(m, n);
        for _ in 0..terms {
            let mut bits: u64 = rng.gen_range(0..(1u64 << n));
            if let Some(p) = parity {
                if (bits.count_ones() % 2 == 1) != p.is_odd() {
                    if n == 0 {
                        continue;
                    }
                    bits ^= 1;
                }
            }
            let mut e = vec![0u32; m];
            let mut left = rng.gen_range(0..=deg);
            while left > 0 && m > 0 {
                e[rng.gen_range(0..m)] += 1;
                left -= 1;
            }
            f.add_term(bits, e, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        f
    }
}

fn top(n: usize) -> u64 {
    if n == 0 {
        0
    } else {
        (1u64 << n) - 1
    }
}

fn top_sign(n: usize) -> f64 {
    linalg::sign((n * n.saturating_sub(1) / 2) % 2 == 1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GrassmannTerm {
    pub monomial_bits: u64,
    pub exponents: Vec<u32>,
    pub coeff: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrassmannTable {
    pub m: usize,
    pub n: usize,
    pub terms: Vec<GrassmannTerm>,
}

/// Constant super-Poisson structure `_Aω_B` on `R^{m|n}` and its inverse `^Aω^B`.
#[derive(Clone, Debug)]
pub struct SuperPBMatrix {
    m: usize,
    n: usize,
    lower: CMat,
    upper: CMat,
}

impl SuperPBMatrix {
    /// `lower` must be antisymmetric on the even block, symmetric on the odd block,
    /// zero on the mixed blocks and invertible.
    pub fn new(m: usize, n: usize, lower: CMat) -> Result<SuperPBMatrix> {
        let s = m + n;
        if lower.nrows() != s || lower.ncols() != s {
            return Err(Error::InvalidArgument(format!("matrix must be {s}x{s}")));
        }
        let mut worst: f64 = 0.0;
        for a in 0..s {
            for b in 0..s {
                let (ea, eb) = (a < m, b < m);
                let r = match (ea, eb) {
                    (true, true) => (lower[(a, b)] + lower[(b, a)]).norm(),
                    (false, false) => (lower[(a, b)] - lower[(b, a)]).norm(),
                    _ => lower[(a, b)].norm(),
                };
                worst = worst.max(r);
            }
        }
        if worst > 1e-12 {
            return Err(Error::InvalidArgument(format!("block symmetry violated (residual {worst:e})")));
        }
        let upper = lower.clone().try_inverse().ok_or(Error::Degenerate(0.0))?;
        if linalg::max_abs_mat(&(&lower * &upper - CMat::identity(s, s))) > 1e-10 {
            return Err(Error::Degenerate(linalg::max_abs_mat(&(&lower * &upper - CMat::identity(s, s)))));
        }
        Ok(SuperPBMatrix { m, n, lower, upper })
    }

    /// Canonical pairs `(q_k, p_k)` ordered `q¹,p¹,q²,p²,..` with `{p, q} = 1`, and a unit odd block.
    pub fn canonical(pairs: usize, n: usize) -> SuperPBMatrix {
        let m = 2 * pairs;
        let mut lower = CMat::zeros(m + n, m + n);
        for k in 0..pairs {
            lower[(2 * k, 2 * k + 1)] = c(-1.0, 0.0);
            lower[(2 * k + 1, 2 * k)] = c(1.0, 0.0);
        }
        for a in m..m + n {
            lower[(a, a)] = c(1.0, 0.0);
        }
        SuperPBMatrix::new(m, n, lower).expect("canonical matrix is valid")
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn lower(&self) -> &CMat {
        &self.lower
    }

    pub fn upper(&self) -> &CMat {
        &self.upper
    }

    /// `{f, g} = -(∂_r f/∂ξ^B) ^Bω^A (∂_l g/∂ξ^A)`.
    pub fn bracket(&self, f: &GrassmannElement, g: &GrassmannElement) -> Result<GrassmannElement> {
        if f.dims() != (self.m, self.n) || g.dims() != (self.m, self.n) {
            return Err(Error::InvalidArgument("function does not live on this superspace".into()));
        }
        let s = self.m + self.n;
        let df: Vec<GrassmannElement> = (0..s).map(|b| f.partial(Side::Right, b)).collect::<Result<_>>()?;
        let dg: Vec<GrassmannElement> = (0..s).map(|a| g.partial(Side::Left, a)).collect::<Result<_>>()?;
        let mut out = GrassmannElement::zero(self.m, self.n);
        for b in 0..s {
            if df[b].is_zero() {
                continue;
            }
            for a in 0..s {
                let w = self.upper[(b, a)];
                if w.norm() == 0.0 || dg[a].is_zero() {
                    continue;
                }
                out = out.add(&df[b].mul(&dg[a])?.scale(-w))?;
            }
        }
        Ok(out)
    }

    /// Hamilton's equations `dξ/dt = {H, ξ}` for a purely even system, integrated by RK4.
    pub fn hamilton_flow(&self, h: &GrassmannElement, xi0: &[f64], t: f64, steps: usize) -> Result<Vec<f64>> {
        if self.n != 0 || xi0.len() != self.m || steps == 0 {
            return Err(Error::InvalidArgument("flow needs an even system, a full initial point and steps > 0".into()));
        }
        let field: Vec<GrassmannElement> = (0..self.m)
            .map(|a| self.bracket(h, &GrassmannElement::x(self.m, 0, a + 1)?))
            .collect::<Result<_>>()?;
        let eval = |x: &[f64]| -> Vec<f64> {
            field.iter().map(|f| f.eval_even(x).map(|v| v.get(&0).copied().unwrap_or(ZERO).re).unwrap_or(f64::NAN)).collect()
        };
        let hstep = t / steps as f64;
        let mut x = xi0.to_vec();
        let axpy = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + s * b).collect() };
        for _ in 0..steps {
            let k1 = eval(&x);
            let k2 = eval(&axpy(&x, &k1, hstep / 2.0));
            let k3 = eval(&axpy(&x, &k2, hstep / 2.0));
            let k4 = eval(&axpy(&x, &k3, hstep));
            for i in 0..self.m {
                x[i] += hstep / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        Ok(x)
    }
}

/// Operator on `grassmann(n)` coefficients of the vector field `Σ_A X^A ∂_{l,A}`.
pub fn vector_field_op(n: usize, components: &[GrassmannElement]) -> Result<CMat> {
    if components.len() != n {
        return Err(Error::InvalidArgument("one component per odd generator".into()));
    }
    let d = 1usize << n;
    let mut op = CMat::zeros(d, d);
    for j in 0..d {
        let mut basis = CVec::zeros(d);
        basis[j] = c(1.0, 0.0);
        let e = GrassmannElement::from_coeffs(n, &basis)?;
        let mut acc = GrassmannElement::zero(0, n);
        for (a, xa) in components.iter().enumerate() {
            acc = acc.add(&xa.mul(&e.odd_partial(Side::Left, a + 1)?)?)?;
        }
        for ((b, _), z) in acc.terms() {
            op[(*b as usize, j)] += z;
        }
    }
    Ok(op)
}

/// `∫ f ρ`.
pub fn berezin_expectation(rho: &GrassmannElement, f: &GrassmannElement) -> Result<C64> {
    check_density(rho)?;
    f.mul(rho)?.berezin()
}

fn check_density(rho: &GrassmannElement) -> Result<()> {
    let (m, n) = rho.dims();
    if m != 0 {
        return Err(Error::InvalidArgument("Berezin states here have no even variables".into()));
    }
    let want = Parity::from_bit((n % 2) as u8);
    let p = rho.part(want + Parity::Odd);
    if !p.is_zero() {
        return Err(Error::InvalidState { reason: format!("density must have parity of n = {n}"), witness: None });
    }
    let norm = rho.berezin()?;
    if (norm - c(1.0, 0.0)).norm() > 1e-12 {
        return Err(Error::InvalidState { reason: format!("∫ρ = {norm} ≠ 1"), witness: None });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PositivityReport {
    pub feasible: bool,
    pub samples: usize,
    /// Most negative real part or largest imaginary part seen, as `[re, im]` of `φ(f f*)`.
    pub worst_value: [f64; 2],
    pub witness: Option<GrassmannTable>,
}

/// Test elements: odd linear `Σ a_α θ^α`, even `a + Σ b_{αβ} θ^α θ^β`, on a coefficient grid plus random samples.
pub fn test_family<R: Rng + ?Sized>(n: usize, rng: &mut R, random: usize) -> Vec<GrassmannElement> {
    let grid = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0), c(0.5, 0.5)];
    let mut out = Vec::new();
    let theta = |a: usize| GrassmannElement::theta(0, n, a).expect("in range");
    for a1 in 1..=n {
        for a2 in a1 + 1..=n {
            for &x in &grid {
                for &y in &grid {
                    out.push(theta(a1).scale(x).add(&theta(a2).scale(y)).expect("same space"));
                    let pair = theta(a1).mul(&theta(a2)).expect("same space");
                    out.push(GrassmannElement::constant(0, n, x).add(&pair.scale(y)).expect("same space"));
                }
            }
        }
    }
    for _ in 0..random {
        let mut lin = GrassmannElement::zero(0, n);
        let mut quad = GrassmannElement::constant(0, n, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        for a1 in 1..=n {
            lin = lin.add(&theta(a1).scale(c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))).expect("same space");
            for a2 in a1 + 1..=n {
                let pair = theta(a1).mul(&theta(a2)).expect("same space");
                quad = quad.add(&pair.scale(c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))).expect("same space");
            }
        }
        out.push(lin);
        out.push(quad);
    }
    out
}

/// Checks `φ(f f*)` real and nonnegative over the test family.
pub fn positivity_scan<R: Rng + ?Sized>(rho: &GrassmannElement, rng: &mut R, random: usize, tol: f64) -> Result<PositivityReport> {
    check_density(rho)?;
    let n = rho.dims().1;
    let family = test_family(n, rng, random);
    let values: Vec<C64> = family
        .par_iter()
        .map(|f| f.mul(&f.star()).and_then(|g| berezin_expectation(rho, &g)))
        .collect::<Result<_>>()?;
    let mut worst = c(0.0, 0.0);
    let mut witness = None;
    let mut badness = 0.0;
    for (f, v) in family.iter().zip(&values) {
        let b = v.im.abs().max(-v.re);
        if b > badness {
            badness = b;
            worst = *v;
            witness = Some(f.to_table());
        }
    }
    let feasible = badness <= tol;
    Ok(PositivityReport { feasible, samples: family.len(), worst_value: [worst.re, worst.im], witness: if feasible { None } else { witness } })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct G3Report {
    /// Rank of the real-linear constraints on the six real parameters of `c_α`.
    pub constraint_rank: usize,
    pub density: GrassmannTable,
    pub positivity: PositivityReport,
}

/// `ρ = θ³θ²θ¹ + Σ c_α θ^α`.
pub fn g3_ansatz(cs: [C64; 3]) -> GrassmannElement {
    let t = |a| GrassmannElement::theta(0, 3, a).expect("in range");
    let mut rho = t(3).mul(&t(2)).and_then(|x| x.mul(&t(1))).expect("same space");
    for (a, z) in cs.iter().enumerate() {
        rho = rho.add(&t(a + 1).scale(*z)).expect("same space");
    }
    rho
}

/// Scans the three-parameter odd ansatz: `φ(f f*)` must be real for every test element,
/// which is real-linear in `(Re c, Im c)`. Full rank leaves only `c = 0`.
pub fn g3_unique_density<R: Rng + ?Sized>(rng: &mut R) -> Result<G3Report> {
    let base = g3_ansatz([ZERO; 3]);
    let family = test_family(3, rng, 50);
    let mut rows: Vec<[f64; 6]> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for f in &family {
        let g = f.mul(&f.star())?;
        let v0 = (g.mul(&base)?).berezin()?;
        let mut row = [0.0; 6];
        for a in 0..3 {
            let t = GrassmannElement::theta(0, 3, a + 1)?;
            let l = g.mul(&t)?.berezin()?;
            // Im(c l) = Re(c) Im(l) + Im(c) Re(l)
            row[a] = l.im;
            row[3 + a] = l.re;
        }
        rows.push(row);
        rhs.push(-v0.im);
    }
    let a = nalgebra::DMatrix::from_fn(rows.len(), 6, |i, j| rows[i][j]);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10 * smax.max(1e-300)).count();
    let b = nalgebra::DVector::from_vec(rhs);
    let sol = svd.solve(&b, 1e-10 * smax).map_err(|e| Error::Internal(e.to_string()))?;
    let cs = [c(sol[0], sol[3]), c(sol[1], sol[4]), c(sol[2], sol[5])];
    let rho = g3_ansatz(cs);
    let positivity = positivity_scan(&rho, rng, 200, 1e-12)?;
    Ok(G3Report { constraint_rank: rank, density: rho.to_table(), positivity })
}

/// `φ(f f*)` for `f = aθ¹ + bθ²` under the ansatz: `f f* = 2i Im(a b̄) θ¹θ²`, so `-2i Im(a b̄) c₃`.
pub fn g3_linear_closed_form(a: C64, b: C64, c3: C64) -> C64 {
    c(0.0, -2.0) * (a * b.conj()).im * c3
}

