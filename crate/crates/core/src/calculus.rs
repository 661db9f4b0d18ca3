//! Superderivations and the derivation-based cochain calculus.
//!
//! Cochains are stored densely over ordered index tuples of a [`DerivationFamily`].
//! Arbitrary derivations are evaluated by expanding them in the family.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rand::Rng;

use crate::algebra::{Algebra, AlgebraId, Element, Parity};
use crate::linalg::{self, c, max_abs, max_abs_mat, CMat, CVec, C64, ONE, ZERO};
use crate::{Error, Result};

/// Residual tolerance for the Leibniz test and for family expansions.
pub const DERIVATION_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Derivation {
    pub alg: AlgebraId,
    pub op: CMat,
    pub parity: Parity,
}

impl Derivation {
    pub fn apply(&self, a: &CVec) -> CVec {
        &self.op * a
    }

    /// `[X, Y] = XY - η_XY YX` as operators.
    pub fn bracket(&self, y: &Derivation) -> Derivation {
        let s = c(self.parity.eta(y.parity), 0.0);
        Derivation { alg: self.alg, op: &self.op * &y.op - (&y.op * &self.op) * s, parity: self.parity + y.parity }
    }

    pub fn scale(&self, z: C64) -> Derivation {
        Derivation { alg: self.alg, op: &self.op * z, parity: self.parity }
    }

    pub fn add(&self, y: &Derivation) -> Derivation {
        Derivation { alg: self.alg, op: &self.op + &y.op, parity: self.parity }
    }

    pub fn dist(&self, y: &Derivation) -> f64 {
        max_abs_mat(&(&self.op - &y.op))
    }

    /// `X*(A) = [X(A*)]*`.
    pub fn star(&self, alg: &Algebra) -> Derivation {
        let j = alg.involution_matrix();
        let op = j * self.op.map(|z| z.conj()) * j.map(|z| z.conj());
        Derivation { alg: self.alg, op, parity: self.parity }
    }
}

/// `D_A = [A, ·]` for homogeneous `A`.
pub fn inner_derivation(alg: &Algebra, a: &Element) -> Result<Derivation> {
    alg.owns(a)?;
    let p = a.parity.or_else(|| alg.vec_parity(&a.coeffs)).ok_or(Error::Inhomogeneous)?;
    let d = alg.dim();
    let mut op = CMat::zeros(d, d);
    for j in 0..d {
        op.set_column(j, &alg.supercomm_vec(&a.coeffs, &alg.basis(j).coeffs));
    }
    Ok(Derivation { alg: alg.id(), op, parity: p })
}

/// Maximal residual of `X∘μ(A) - η μ(A)∘X - μ(X(A))` over basis elements `A`.
pub fn leibniz_residual(alg: &Algebra, op: &CMat, parity: Parity) -> f64 {
    let d = alg.dim();
    let mut worst: f64 = 0.0;
    for a in 0..d {
        let ea = alg.basis(a).coeffs;
        let la = alg.left_op(&ea);
        let s = c(parity.eta(alg.basis_parity(a)), 0.0);
        let lhs = op * &la - (&la * op) * s;
        let rhs = alg.left_op(&(op * &ea));
        worst = worst.max(max_abs_mat(&(lhs - rhs)));
    }
    worst
}

/// Returns whether `op` is a superderivation of the given parity, with the residual.
pub fn check_superderivation(alg: &Algebra, op: &CMat, parity: Parity) -> (bool, f64) {
    let r = leibniz_residual(alg, op, parity);
    (r <= DERIVATION_TOL * max_abs_mat(op).max(1.0), r)
}

/// Basis of all superderivations of the given parity, from the linear Leibniz system.
pub fn superderivation_space(alg: &Algebra, parity: Parity) -> Vec<CMat> {
    let d = alg.dim();
    let lefts: Vec<CMat> = (0..d).map(|a| alg.left_op(&alg.basis(a).coeffs)).collect();
    let unknowns: Vec<(usize, usize)> = (0..d)
        .flat_map(|k| (0..d).map(move |j| (k, j)))
        .filter(|&(k, j)| alg.basis_parity(k) == alg.basis_parity(j) + parity)
        .collect();
    if unknowns.is_empty() {
        return Vec::new();
    }
    let mut sys = CMat::zeros(d * d * d, unknowns.len());
    for (col, &(k, j)) in unknowns.iter().enumerate() {
        for (a, la) in lefts.iter().enumerate() {
            let s = parity.eta(alg.basis_parity(a));
            // X = E_kj: X L_a - s L_a X - δ_ja L_k
            let mut m = CMat::zeros(d, d);
            for col2 in 0..d {
                m[(k, col2)] += la[(j, col2)];
            }
            for row in 0..d {
                m[(row, j)] -= la[(row, k)] * s;
            }
            if j == a {
                m -= &lefts[k];
            }
            for (r, z) in m.iter().enumerate() {
                sys[(a * d * d + r, col)] = *z;
            }
        }
    }
    let ns = linalg::null_space(&sys, 1e-10);
    (0..ns.ncols())
        .map(|n| {
            let mut x = CMat::zeros(d, d);
            for (r, &(k, j)) in unknowns.iter().enumerate() {
                x[(k, j)] = ns[(r, n)];
            }
            x
        })
        .collect()
}

/// Special: noncommutative, every superderivation inner. Returns (dim SDer, dim A - dim Z).
pub fn derivation_dimensions(alg: &Algebra) -> (usize, usize) {
    let sder = superderivation_space(alg, Parity::Even).len() + superderivation_space(alg, Parity::Odd).len();
    (sder, alg.dim() - alg.graded_center().dim())
}

pub fn is_special(alg: &Algebra) -> bool {
    let (sder, inner) = derivation_dimensions(alg);
    inner > 0 && sder == inner
}

/// A verified superalgebra isomorphism, given by its coefficient matrix.
#[derive(Clone, Debug)]
pub struct Isomorphism {
    pub from: AlgebraId,
    pub to: AlgebraId,
    pub map: CMat,
    pub inverse: CMat,
}

impl Isomorphism {
    pub fn verify(src: &Algebra, dst: &Algebra, map: CMat) -> Result<Isomorphism> {
        let d = src.dim();
        if dst.dim() != d || map.shape() != (d, d) {
            return Err(Error::NotAnIsomorphism { check: "dimension".into(), residual: f64::INFINITY });
        }
        let inverse = map
            .clone()
            .try_inverse()
            .ok_or(Error::NotAnIsomorphism { check: "invertible".into(), residual: f64::INFINITY })?;
        let fail = |check: &str, residual: f64| Error::NotAnIsomorphism { check: check.into(), residual };
        let tol = 1e-9;
        let r = linalg::dist(&(&map * src.unit_coeffs()), dst.unit_coeffs());
        if r > tol {
            return Err(fail("unit", r));
        }
        for i in 0..d {
            let img = map.column(i).into_owned();
            let p = src.basis_parity(i);
            let wrong = dst.part(&img, p + Parity::Odd);
            if max_abs(wrong.as_slice()) > tol {
                return Err(fail("parity", max_abs(wrong.as_slice())));
            }
            let r = linalg::dist(&(&map * src.star_vec(&src.basis(i).coeffs)), &dst.star_vec(&img));
            if r > tol {
                return Err(fail("involution", r));
            }
            for j in 0..d {
                let lhs = &map * src.mul_vec(&src.basis(i).coeffs, &src.basis(j).coeffs);
                let rhs = dst.mul_vec(&img, &map.column(j).into_owned());
                let r = linalg::dist(&lhs, &rhs);
                if r > tol {
                    return Err(fail("product", r));
                }
            }
        }
        Ok(Isomorphism { from: src.id(), to: dst.id(), map, inverse })
    }

    pub fn identity(alg: &Algebra) -> Isomorphism {
        let d = alg.dim();
        Isomorphism { from: alg.id(), to: alg.id(), map: CMat::identity(d, d), inverse: CMat::identity(d, d) }
    }

    /// `A ↦ U A U†` on an algebra with a matrix realization.
    pub fn unitary_conjugation(alg: &Algebra, u: &CMat) -> Result<Isomorphism> {
        let d = alg.dim();
        let mut map = CMat::zeros(d, d);
        for j in 0..d {
            let m = alg.to_matrix(&alg.basis(j).coeffs)?;
            map.set_column(j, &alg.from_matrix(&(u * m * u.adjoint()))?);
        }
        Isomorphism::verify(alg, alg, map)
    }

    pub fn apply(&self, a: &CVec) -> CVec {
        &self.map * a
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &Isomorphism) -> Isomorphism {
        Isomorphism { from: first.from, to: self.to, map: &self.map * &first.map, inverse: &first.inverse * &self.inverse }
    }
}

/// `(Φ_* X)(B) = Φ(X(Φ⁻¹ B))`.
pub fn pushforward(iso: &Isomorphism, x: &Derivation) -> Result<Derivation> {
    if x.alg != iso.from {
        return Err(Error::AlgebraMismatch);
    }
    Ok(Derivation { alg: iso.to, op: &iso.map * &x.op * &iso.inverse, parity: x.parity })
}

/// A list of homogeneous, linearly independent derivations spanning a Lie sub-superalgebra.
#[derive(Debug)]
pub struct DerivationFamily {
    id: u64,
    alg: AlgebraId,
    members: Vec<Derivation>,
    span: CMat,
    brackets: Vec<Vec<CVec>>,
    closure_residual: f64,
    generators: Option<Vec<Element>>,
}

impl DerivationFamily {
    pub fn new(alg: &Algebra, members: Vec<Derivation>) -> Result<DerivationFamily> {
        let d = alg.dim();
        for m in &members {
            if m.alg != alg.id() || m.op.shape() != (d, d) {
                return Err(Error::AlgebraMismatch);
            }
            let (ok, r) = check_superderivation(alg, &m.op, m.parity);
            if !ok {
                return Err(Error::InvalidArgument(format!("family member fails the Leibniz rule (residual {r:e})")));
            }
        }
        let span = CMat::from_fn(d * d, members.len(), |r, k| members[k].op.as_slice()[r]);
        if linalg::rank(&span, 1e-10) < members.len() {
            return Err(Error::InvalidArgument("family members are linearly dependent".into()));
        }
        let mut h = DefaultHasher::new();
        alg.id().hash(&mut h);
        for m in &members {
            m.parity.hash(&mut h);
            for z in m.op.iter() {
                z.re.to_bits().hash(&mut h);
                z.im.to_bits().hash(&mut h);
            }
        }
        let mut fam = DerivationFamily {
            id: h.finish(),
            alg: alg.id(),
            members,
            span,
            brackets: Vec::new(),
            closure_residual: 0.0,
            generators: None,
        };
        let m = fam.members.len();
        let mut brackets = vec![vec![CVec::zeros(m); m]; m];
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let b = fam.members[i].bracket(&fam.members[j]);
                let (x, r) = fam.expand_raw(&b.op);
                worst = worst.max(r);
                brackets[i][j] = x;
            }
        }
        fam.brackets = brackets;
        fam.closure_residual = worst;
        Ok(fam)
    }

    /// Inner derivations `D_{e_i}`, greedily reduced to an independent set (i.e. modulo the center).
    pub fn inner(alg: &Algebra) -> DerivationFamily {
        let d = alg.dim();
        let mut chosen: Vec<Derivation> = Vec::new();
        let mut gens: Vec<Element> = Vec::new();
        let mut cols: Vec<CVec> = Vec::new();
        for i in 0..d {
            let x = inner_derivation(alg, &alg.basis(i)).expect("basis elements are homogeneous");
            if max_abs_mat(&x.op) < 1e-12 {
                continue;
            }
            cols.push(linalg::flatten(&x.op));
            let m = CMat::from_columns(&cols);
            if linalg::rank(&m, 1e-10) == cols.len() {
                chosen.push(x);
                gens.push(alg.basis(i));
            } else {
                cols.pop();
            }
        }
        let mut fam = DerivationFamily::new(alg, chosen).expect("inner derivations form a family");
        fam.generators = Some(gens);
        fam
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn alg(&self) -> AlgebraId {
        self.alg
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Derivation] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &Derivation {
        &self.members[i]
    }

    /// For inner families: the elements `A_k` with `X_k = D_{A_k}`.
    pub fn generators(&self) -> Option<&[Element]> {
        self.generators.as_deref()
    }

    pub fn closure_residual(&self) -> f64 {
        self.closure_residual
    }

    pub fn is_closed(&self) -> bool {
        self.closure_residual <= 1e-9
    }

    fn expand_raw(&self, op: &CMat) -> (CVec, f64) {
        let (x, r) = linalg::lstsq(&self.span, &linalg::flatten(op));
        (x, r / op.norm().max(1.0))
    }

    /// Coefficients of `x` in the family.
    pub fn expand(&self, x: &Derivation) -> Result<CVec> {
        if x.alg != self.alg {
            return Err(Error::AlgebraMismatch);
        }
        let (v, r) = self.expand_raw(&x.op);
        if r > 1e-9 {
            return Err(Error::NotInFamily(r));
        }
        Ok(v)
    }

    pub fn combine(&self, coeffs: &CVec, parity: Parity) -> Derivation {
        let d = self.members.first().map(|m| m.op.nrows()).unwrap_or(0);
        let mut op = CMat::zeros(d, d);
        for (k, m) in self.members.iter().enumerate() {
            if coeffs[k] != ZERO {
                op += &m.op * coeffs[k];
            }
        }
        Derivation { alg: self.alg, op, parity }
    }

    /// Coefficients of `[X_i, X_j]`.
    pub fn bracket_coeffs(&self, i: usize, j: usize) -> Result<&CVec> {
        if !self.is_closed() {
            return Err(Error::FamilyNotClosed(self.closure_residual));
        }
        Ok(&self.brackets[i][j])
    }
}

/// `κ_σ γ(σ; s)`: the sign relating `ω(X_σ(1), ..)` to `ω(X_1, ..)`.
pub fn permutation_sign(sigma: &[usize], parities: &[Parity]) -> f64 {
    let p = sigma.len();
    let mut inv = vec![0; p];
    for (pos, &s) in sigma.iter().enumerate() {
        inv[s] = pos;
    }
    let mut sign = 1.0;
    for j in 0..p {
        for k in j + 1..p {
            if inv[j] > inv[k] {
                sign = -sign;
                sign *= parities[j].eta(parities[k]);
            }
        }
    }
    sign
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// A graded-skew multilinear algebra-valued map on the family, stored over all ordered tuples.
#[derive(Clone, Debug)]
pub struct Cochain {
    pub degree: usize,
    pub parity: Parity,
    family: u64,
    m: usize,
    comps: Vec<CVec>,
}

impl Cochain {
    pub fn value(&self, tuple: &[usize]) -> &CVec {
        &self.comps[self.index(tuple)]
    }

    fn index(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &t| acc * self.m + t)
    }

    pub fn components(&self) -> &[CVec] {
        &self.comps
    }

    pub fn family_id(&self) -> u64 {
        self.family
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(|v| max_abs(v.as_slice())).fold(0.0, f64::max)
    }

    pub fn dist(&self, o: &Cochain) -> f64 {
        assert_eq!(self.comps.len(), o.comps.len(), "cochain shapes differ");
        self.comps.iter().zip(&o.comps).map(|(a, b)| linalg::dist(a, b)).fold(0.0, f64::max)
    }

    pub fn scale(&self, z: C64) -> Cochain {
        let mut out = self.clone();
        for v in &mut out.comps {
            *v *= z;
        }
        out
    }

    pub fn add(&self, o: &Cochain) -> Cochain {
        assert_eq!(self.comps.len(), o.comps.len(), "cochain shapes differ");
        let mut out = self.clone();
        for (v, w) in out.comps.iter_mut().zip(&o.comps) {
            *v += w;
        }
        out
    }

    pub fn sub(&self, o: &Cochain) -> Cochain {
        self.add(&o.scale(-ONE))
    }
}

fn tuples(m: usize, p: usize) -> Vec<Vec<usize>> {
    let total = m.pow(p as u32);
    (0..total)
        .map(|mut idx| {
            let mut t = vec![0; p];
            for k in (0..p).rev() {
                t[k] = idx % m;
                idx /= m;
            }
            t
        })
        .collect()
}

/// Sorts `tuple` ascending by adjacent swaps. Returns the sign picked up by graded skew symmetry,
/// or `None` when an even derivation repeats (the value is forced to zero).
fn canonical(tuple: &[usize], parity: &dyn Fn(usize) -> Parity) -> (Vec<usize>, Option<f64>) {
    let mut t = tuple.to_vec();
    let mut sign = 1.0;
    for i in 0..t.len() {
        for j in 0..t.len() - 1 - i {
            if t[j] > t[j + 1] {
                sign *= -parity(t[j]).eta(parity(t[j + 1]));
                t.swap(j, j + 1);
            }
        }
    }
    for w in t.windows(2) {
        if w[0] == w[1] && parity(w[0]) == Parity::Even {
            return (t, None);
        }
    }
    (t, Some(sign))
}

/// An algebra together with a derivation family: the setting for all cochain operations.
#[derive(Clone, Debug)]
pub struct Calculus {
    pub alg: Arc<Algebra>,
    pub family: Arc<DerivationFamily>,
}

impl Calculus {
    pub fn new(alg: Arc<Algebra>, family: Arc<DerivationFamily>) -> Result<Calculus> {
        if family.alg() != alg.id() {
            return Err(Error::AlgebraMismatch);
        }
        Ok(Calculus { alg, family })
    }

    /// Calculus over the inner derivations.
    pub fn inner(alg: &Algebra) -> Calculus {
        let fam = DerivationFamily::inner(alg);
        Calculus { alg: Arc::new(alg.clone()), family: Arc::new(fam) }
    }

    pub fn m(&self) -> usize {
        self.family.len()
    }

    fn eps(&self, k: usize) -> Parity {
        self.family.member(k).parity
    }

    fn same(&self, w: &Cochain) -> Result<()> {
        if w.family != self.family.id() {
            return Err(Error::FamilyMismatch);
        }
        Ok(())
    }

    fn build(&self, degree: usize, parity: Parity, comps: Vec<CVec>) -> Cochain {
        Cochain { degree, parity, family: self.family.id(), m: self.m(), comps }
    }

    pub fn zero(&self, degree: usize, parity: Parity) -> Cochain {
        let n = self.m().pow(degree as u32);
        self.build(degree, parity, vec![CVec::zeros(self.alg.dim()); n])
    }

    /// The 0-cochain `A`.
    pub fn zero_form(&self, a: &Element) -> Result<Cochain> {
        self.alg.owns(a)?;
        let p = a.parity.or_else(|| self.alg.vec_parity(&a.coeffs)).ok_or(Error::Inhomogeneous)?;
        Ok(self.build(0, p, vec![a.coeffs.clone()]))
    }

    /// Cochain from its values on family tuples; rejects values that are not graded-skew.
    pub fn from_fn(&self, degree: usize, parity: Parity, f: impl Fn(&[usize]) -> CVec) -> Result<Cochain> {
        let comps: Vec<CVec> = tuples(self.m(), degree).iter().map(|t| f(t)).collect();
        let w = self.build(degree, parity, comps);
        let r = self.skew_residual(&w);
        if r > 1e-10 * w.max_abs().max(1.0) {
            return Err(Error::InvalidArgument(format!("values are not graded skew-symmetric (residual {r:e})")));
        }
        Ok(w)
    }

    /// Maximal violation of `ω(..,X,Y,..) = -η_XY ω(..,Y,X,..)` and of the parity rule.
    pub fn skew_residual(&self, w: &Cochain) -> f64 {
        let eps = |k: usize| self.eps(k);
        let mut worst: f64 = 0.0;
        for t in tuples(self.m(), w.degree) {
            let v = w.value(&t);
            let (ct, sign) = canonical(&t, &eps);
            let expected = match sign {
                Some(s) => w.value(&ct) * c(s, 0.0),
                None => CVec::zeros(v.len()),
            };
            worst = worst.max(linalg::dist(v, &expected));
            let p = t.iter().fold(w.parity, |acc, &k| acc + eps(k));
            let wrong = self.alg.part(v, p + Parity::Odd);
            worst = worst.max(max_abs(wrong.as_slice()));
        }
        worst
    }

    /// Random homogeneous cochain of the given degree and parity.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R, degree: usize, parity: Parity) -> Cochain {
        let eps = |k: usize| self.eps(k);
        let d = self.alg.dim();
        let all = tuples(self.m(), degree);
        let mut canon_vals: std::collections::HashMap<Vec<usize>, CVec> = Default::default();
        let mut comps = Vec::with_capacity(all.len());
        for t in &all {
            let (ct, sign) = canonical(t, &eps);
            let v = match sign {
                None => CVec::zeros(d),
                Some(s) => {
                    let base = canon_vals
                        .entry(ct.clone())
                        .or_insert_with(|| {
                            let p = ct.iter().fold(parity, |acc, &k| acc + eps(k));
                            self.alg.part(&linalg::random_cvec(rng, d), p)
                        })
                        .clone();
                    base * c(s, 0.0)
                }
            };
            comps.push(v);
        }
        self.build(degree, parity, comps)
    }

    /// Value on arbitrary derivations, expanded multilinearly in the family.
    pub fn eval(&self, w: &Cochain, args: &[Derivation]) -> Result<CVec> {
        self.same(w)?;
        if args.len() != w.degree {
            return Err(Error::InvalidArgument("wrong number of arguments".into()));
        }
        let coeffs: Vec<CVec> = args.iter().map(|x| self.family.expand(x)).collect::<Result<_>>()?;
        Ok(self.eval_coeffs(w, &coeffs))
    }

    fn eval_coeffs(&self, w: &Cochain, coeffs: &[CVec]) -> CVec {
        let mut out = CVec::zeros(self.alg.dim());
        for t in tuples(self.m(), w.degree) {
            let mut z = ONE;
            for (slot, &k) in t.iter().enumerate() {
                z *= coeffs[slot][k];
                if z == ZERO {
                    break;
                }
            }
            if z != ZERO {
                out += w.value(&t) * z;
            }
        }
        out
    }

    /// Value with one slot replaced by a coefficient vector over the family.
    fn eval_with_slot(&self, w: &Cochain, t: &[usize], slot: usize, coeffs: &CVec) -> CVec {
        let mut out = CVec::zeros(self.alg.dim());
        let mut tt = t.to_vec();
        for k in 0..self.m() {
            if coeffs[k] != ZERO {
                tt[slot] = k;
                out += w.value(&tt) * coeffs[k];
            }
        }
        out
    }

    pub fn wedge(&self, a: &Cochain, b: &Cochain) -> Result<Cochain> {
        self.same(a)?;
        self.same(b)?;
        let (p, q) = (a.degree, b.degree);
        let n = p + q;
        let perms = permutations(n);
        let norm = c(1.0 / (factorial(p) * factorial(q)), 0.0);
        let comps = tuples(self.m(), n)
            .iter()
            .map(|t| {
                let eps: Vec<Parity> = t.iter().map(|&k| self.eps(k)).collect();
                let mut acc = CVec::zeros(self.alg.dim());
                for sigma in &perms {
                    let ts: Vec<usize> = sigma.iter().map(|&i| t[i]).collect();
                    let sum_eps = sigma[..p].iter().filter(|&&i| eps[i].is_odd()).count();
                    let s = permutation_sign(sigma, &eps) * linalg::sign(b.parity.is_odd() && sum_eps % 2 == 1);
                    let va = a.value(&ts[..p]);
                    let vb = b.value(&ts[p..]);
                    acc += self.alg.mul_vec(va, vb) * c(s, 0.0);
                }
                acc * norm
            })
            .collect();
        Ok(self.build(n, a.parity + b.parity, comps))
    }

    /// Lie derivative of a cochain along a homogeneous derivation.
    pub fn lie(&self, y: &Derivation, w: &Cochain) -> Result<Cochain> {
        self.same(w)?;
        let m = self.m();
        let yx: Vec<CVec> = (0..m)
            .map(|k| self.family.expand(&y.bracket(self.family.member(k))))
            .collect::<Result<_>>()?;
        let comps = tuples(m, w.degree)
            .iter()
            .map(|t| {
                let mut acc = y.apply(w.value(t));
                let mut before = w.parity;
                for (i, &k) in t.iter().enumerate() {
                    let s = linalg::sign(y.parity.is_odd() && before.is_odd());
                    acc -= self.eval_with_slot(w, t, i, &yx[k]) * c(s, 0.0);
                    before = before + self.eps(k);
                }
                acc
            })
            .collect();
        Ok(self.build(w.degree, w.parity + y.parity, comps))
    }

    /// `(i_X ω)(X_1, ..) = ω(X, X_1, ..)`; zero on 0-forms.
    pub fn interior(&self, x: &Derivation, w: &Cochain) -> Result<Cochain> {
        self.same(w)?;
        if w.degree == 0 {
            return Ok(self.zero(0, w.parity + x.parity));
        }
        let a = self.family.expand(x)?;
        let comps = tuples(self.m(), w.degree - 1)
            .iter()
            .map(|t| {
                let mut full = vec![0];
                full.extend_from_slice(t);
                self.eval_with_slot(w, &full, 0, &a)
            })
            .collect();
        Ok(self.build(w.degree - 1, w.parity + x.parity, comps))
    }

    /// Exterior derivative; the family must be closed under brackets.
    pub fn d(&self, w: &Cochain) -> Result<Cochain> {
        self.same(w)?;
        let m = self.m();
        let p = w.degree;
        if p > 0 && !self.family.is_closed() {
            return Err(Error::FamilyNotClosed(self.family.closure_residual()));
        }
        let comps = tuples(m, p + 1)
            .iter()
            .map(|t| {
                let eps: Vec<Parity> = t.iter().map(|&k| self.eps(k)).collect();
                let mut acc = CVec::zeros(self.alg.dim());
                let mut before = w.parity;
                for i in 0..=p {
                    let a_i = eps[i].is_odd() && before.is_odd();
                    let s = linalg::sign((i % 2 == 1) ^ a_i);
                    let rest: Vec<usize> = t.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &v)| v).collect();
                    acc += self.family.member(t[i]).apply(w.value(&rest)) * c(s, 0.0);
                    before = before + eps[i];
                }
                for i in 0..=p {
                    for j in i + 1..=p {
                        let mid = (i + 1..j).filter(|&k| eps[k].is_odd()).count();
                        let b_ij = eps[j].is_odd() && mid % 2 == 1;
                        let s = linalg::sign((j % 2 == 1) ^ b_ij);
                        let br = &self.family.brackets[t[i]][t[j]];
                        let rest: Vec<usize> = t.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &v)| v).collect();
                        acc += self.eval_with_slot(w, &rest, i, br) * c(s, 0.0);
                    }
                }
                acc
            })
            .collect();
        Ok(self.build(p + 1, w.parity, comps))
    }

    /// `ω*(X_1, ..) = [ω(X_1*, ..)]*`.
    pub fn star(&self, w: &Cochain) -> Result<Cochain> {
        self.same(w)?;
        let starred: Vec<CVec> = self
            .family
            .members()
            .iter()
            .map(|x| self.family.expand(&x.star(&self.alg)))
            .collect::<Result<_>>()?;
        let comps = tuples(self.m(), w.degree)
            .iter()
            .map(|t| {
                let coeffs: Vec<CVec> = t.iter().map(|&k| starred[k].clone()).collect();
                self.alg.star_vec(&self.eval_coeffs(w, &coeffs))
            })
            .collect();
        Ok(self.build(w.degree, w.parity, comps))
    }

    /// `(Φ*ω)(X_1, ..) = Φ⁻¹[ω(Φ_*X_1, ..)]` with `ω` living on `target`.
    pub fn pullback(&self, iso: &Isomorphism, target: &Calculus, w: &Cochain) -> Result<Cochain> {
        target.same(w)?;
        if iso.from != self.alg.id() || iso.to != target.alg.id() {
            return Err(Error::AlgebraMismatch);
        }
        let pushed: Vec<CVec> = self
            .family
            .members()
            .iter()
            .map(|x| target.family.expand(&pushforward(iso, x)?))
            .collect::<Result<_>>()?;
        let comps = tuples(self.m(), w.degree)
            .iter()
            .map(|t| {
                let coeffs: Vec<CVec> = t.iter().map(|&k| pushed[k].clone()).collect();
                &iso.inverse * target.eval_coeffs(w, &coeffs)
            })
            .collect();
        Ok(self.build(w.degree, w.parity, comps))
    }

    /// Max over family tuples of `|ω(.., K X_i, ..) - K ω(.., X_i, ..)|` for central `K`,
    /// or `None` when `K X_i` leaves the family span.
    pub fn z_linearity_residual(&self, w: &Cochain, k: &Element) -> Result<Option<f64>> {
        self.same(w)?;
        if w.degree == 0 {
            return Ok(Some(0.0));
        }
        let lk = self.alg.left_op(&k.coeffs);
        let mut kx = Vec::new();
        for x in self.family.members() {
            let prod = Derivation { alg: x.alg, op: &lk * &x.op, parity: x.parity };
            match self.family.expand(&prod) {
                Ok(v) => kx.push(v),
                Err(Error::NotInFamily(_)) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        let mut worst: f64 = 0.0;
        for t in tuples(self.m(), w.degree) {
            let lhs = self.eval_with_slot(w, &t, 0, &kx[t[0]]);
            let rhs = self.alg.mul_vec(&k.coeffs, w.value(&t));
            worst = worst.max(linalg::dist(&lhs, &rhs));
        }
        Ok(Some(worst))
    }

    /// `d` applied to an element: `(dA)(X) = η_XA X(A)`.
    pub fn d_element(&self, a: &Element) -> Result<Cochain> {
        self.d(&self.zero_form(a)?)
    }

    pub fn member_parity(&self, k: usize) -> Parity {
        self.eps(k)
    }
}
