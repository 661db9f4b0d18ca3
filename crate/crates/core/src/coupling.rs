//! Coupled systems: symplectic structures and Poisson brackets on graded tensor products.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, Element, Parity};
use crate::calculus::{Calculus, Derivation, DerivationFamily};
use crate::linalg::{self, c, kron, max_abs, CMat, CVec, C64, I, ONE, ZERO};
use crate::states::State;
use crate::superclassical::{GrassmannElement, SuperPBMatrix};
use crate::symplectic::{Method, SymplecticStructure};
use crate::{Error, Result};

/// Verdict threshold for λ fits and supercommutativity.
pub const FIT_TOL: f64 = 1e-9;
pub const COMMUTATIVE_TOL: f64 = 1e-12;

/// An algebra with a Poisson bracket, given as the operator of `B ↦ {A, B}`.
pub trait PoissonFactor: Send + Sync {
    fn alg(&self) -> &Algebra;
    fn bracket_op(&self, a: &CVec) -> Result<CMat>;
    fn describe(&self) -> String;
}

impl PoissonFactor for SymplecticStructure {
    fn alg(&self) -> &Algebra {
        SymplecticStructure::alg(self)
    }

    fn bracket_op(&self, a: &CVec) -> Result<CMat> {
        self.hamiltonian_op(a)
    }

    fn describe(&self) -> String {
        format!("{:?} on {:?}", self.kind, SymplecticStructure::alg(self).kind())
    }
}

/// Grassmann algebra `G_n` with a constant super-Poisson structure on its odd generators.
#[derive(Clone, Debug)]
pub struct GrassmannPoisson {
    alg: Algebra,
    pb: SuperPBMatrix,
}

impl GrassmannPoisson {
    pub fn new(pb: SuperPBMatrix) -> Result<GrassmannPoisson> {
        let (m, n) = pb.dims();
        if m != 0 {
            return Err(Error::InvalidArgument("only odd coordinates fit a finite algebra".into()));
        }
        Ok(GrassmannPoisson { alg: Algebra::grassmann(n)?, pb })
    }

    /// Unit odd block on `n` generators.
    pub fn canonical(n: usize) -> Result<GrassmannPoisson> {
        GrassmannPoisson::new(SuperPBMatrix::canonical(0, n))
    }

    pub fn pb(&self) -> &SuperPBMatrix {
        &self.pb
    }
}

impl PoissonFactor for GrassmannPoisson {
    fn alg(&self) -> &Algebra {
        &self.alg
    }

    fn bracket_op(&self, a: &CVec) -> Result<CMat> {
        let n = self.pb.dims().1;
        let d = self.alg.dim();
        let f = GrassmannElement::from_coeffs(n, a)?;
        let mut op = CMat::zeros(d, d);
        for j in 0..d {
            let mut e = CVec::zeros(d);
            e[j] = ONE;
            let g = GrassmannElement::from_coeffs(n, &e)?;
            let b = self.pb.bracket(&f, &g)?.to_element(&self.alg)?;
            op.set_column(j, &b.coeffs);
        }
        Ok(op)
    }

    fn describe(&self) -> String {
        format!("super-Poisson on G{}", self.pb.dims().1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "camelCase")]
pub enum Verdict {
    ExistsCommutative,
    ExistsQuantum { lambda: [f64; 2] },
    NoneExistsMixed,
    MismatchedParameters { lambda1: [f64; 2], lambda2: [f64; 2] },
    /// A noncommutative factor whose bracket is not a multiple of the supercommutator.
    NonQuantumFactor { side: u8 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FactorFit {
    pub supercommutative: bool,
    pub max_supercommutator: f64,
    /// Least-squares `λ` in `λ{A,C} = -[A,C]`, absent when the bracket vanishes identically.
    pub lambda: Option<[f64; 2]>,
    pub residual: f64,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompatibilityReport {
    #[serde(flatten)]
    pub verdict: Verdict,
    pub left: FactorFit,
    pub right: FactorFit,
}

impl CompatibilityReport {
    pub fn exists(&self) -> bool {
        matches!(self.verdict, Verdict::ExistsCommutative | Verdict::ExistsQuantum { .. })
    }

    pub fn lambda(&self) -> Option<C64> {
        match self.verdict {
            Verdict::ExistsCommutative => Some(ZERO),
            Verdict::ExistsQuantum { lambda } => Some(c(lambda[0], lambda[1])),
            _ => None,
        }
    }
}

/// Fits `λ` over all basis pairs.
pub fn fit_lambda(f: &dyn PoissonFactor) -> Result<FactorFit> {
    let alg = f.alg();
    let d = alg.dim();
    let ops: Vec<CMat> = (0..d).map(|i| f.bracket_op(&alg.basis(i).coeffs)).collect::<Result<_>>()?;
    let mut num = ZERO;
    let mut den = 0.0;
    let mut pairs = Vec::with_capacity(d * d);
    let mut max_comm: f64 = 0.0;
    for (i, op) in ops.iter().enumerate() {
        for j in 0..d {
            let b = op.column(j).into_owned();
            let s = -alg.supercomm_vec(&alg.basis(i).coeffs, &alg.basis(j).coeffs);
            max_comm = max_comm.max(max_abs(s.as_slice()));
            num += b.dotc(&s);
            den += b.norm_squared();
            pairs.push((b, s));
        }
    }
    let supercommutative = max_comm <= COMMUTATIVE_TOL;
    let (lambda, residual) = if den == 0.0 {
        (None, max_comm)
    } else {
        let l = num / den;
        let r = pairs.iter().fold(0.0f64, |m, (b, s)| m.max(max_abs((b * l - s).as_slice())));
        (Some([l.re, l.im]), r)
    };
    Ok(FactorFit { supercommutative, max_supercommutator: max_comm, lambda, residual, description: f.describe() })
}

/// Classifies the pair of factors by whether a natural product symplectic structure exists.
pub fn compatibility(left: &dyn PoissonFactor, right: &dyn PoissonFactor) -> Result<CompatibilityReport> {
    let (l, r) = (fit_lambda(left)?, fit_lambda(right)?);
    let verdict = match (l.supercommutative, r.supercommutative) {
        (true, true) => Verdict::ExistsCommutative,
        (true, false) | (false, true) => Verdict::NoneExistsMixed,
        (false, false) => {
            if l.lambda.is_none() || l.residual > FIT_TOL {
                Verdict::NonQuantumFactor { side: 1 }
            } else if r.lambda.is_none() || r.residual > FIT_TOL {
                Verdict::NonQuantumFactor { side: 2 }
            } else {
                let (a, b) = (l.lambda.unwrap(), r.lambda.unwrap());
                let (za, zb) = (c(a[0], a[1]), c(b[0], b[1]));
                if (za - zb).norm() <= FIT_TOL * za.norm().max(1.0) {
                    Verdict::ExistsQuantum { lambda: a }
                } else {
                    Verdict::MismatchedParameters { lambda1: a, lambda2: b }
                }
            }
        }
    };
    Ok(CompatibilityReport { verdict, left: l, right: r })
}

/// `(S⊗T)(e_k⊗f_l) = η(ε_T, ε_{e_k}) S(e_k)⊗T(f_l)` on the tensor coefficient space.
pub fn koszul_kron(left: &Algebra, s: &CMat, t: &CMat, t_parity: Parity) -> CMat {
    let (d1, d2) = (left.dim(), t.nrows());
    let mut out = kron(s, t);
    if t_parity.is_odd() {
        for k in 0..d1 {
            if left.basis_parity(k).is_odd() {
                for l in 0..d2 {
                    let col = k * d2 + l;
                    out.column_mut(col).neg_mut();
                }
            }
        }
    }
    out
}

/// Poisson bracket on `A₁⊗A₂`:
/// `{A⊗B, C⊗D} = η_BC [{A,C}⊗BD + AC⊗{B,D} + λ{A,C}⊗{B,D}]`.
pub struct ProductPoisson {
    pub alg: Arc<Algebra>,
    pub left: Arc<dyn PoissonFactor>,
    pub right: Arc<dyn PoissonFactor>,
    pub report: CompatibilityReport,
    lambda: C64,
    basis_ops: Vec<CMat>,
}

impl std::fmt::Debug for ProductPoisson {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProductPoisson").field("report", &self.report).finish()
    }
}

impl ProductPoisson {
    pub fn new(left: Arc<dyn PoissonFactor>, right: Arc<dyn PoissonFactor>) -> Result<ProductPoisson> {
        let report = compatibility(left.as_ref(), right.as_ref())?;
        let lambda = report
            .lambda()
            .ok_or_else(|| Error::NoProductStructure(format!("{:?}", report.verdict)))?;
        let alg = Arc::new(Algebra::tensor(left.alg(), right.alg())?);
        let (a1, a2) = (left.alg(), right.alg());
        let b1: Vec<CMat> = (0..a1.dim()).map(|i| left.bracket_op(&a1.basis(i).coeffs)).collect::<Result<_>>()?;
        let b2: Vec<CMat> = (0..a2.dim()).map(|j| right.bracket_op(&a2.basis(j).coeffs)).collect::<Result<_>>()?;
        let mut basis_ops = Vec::with_capacity(alg.dim());
        for i in 0..a1.dim() {
            let l1 = a1.left_op(&a1.basis(i).coeffs);
            for j in 0..a2.dim() {
                let pj = a2.basis_parity(j);
                let l2 = a2.left_op(&a2.basis(j).coeffs);
                let op = koszul_kron(a1, &b1[i], &(l2 + &b2[j] * lambda), pj) + koszul_kron(a1, &l1, &b2[j], pj);
                basis_ops.push(op);
            }
        }
        Ok(ProductPoisson { alg, left, right, report, lambda, basis_ops })
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    /// Operator of `Y ↦ {X, Y}`.
    pub fn bracket_op(&self, x: &CVec) -> CMat {
        let d = self.alg.dim();
        let mut op = CMat::zeros(d, d);
        for (k, b) in self.basis_ops.iter().enumerate() {
            if x[k] != ZERO {
                op += b * x[k];
            }
        }
        op
    }

    pub fn poisson_vec(&self, x: &CVec, y: &CVec) -> CVec {
        self.bracket_op(x) * y
    }

    pub fn poisson(&self, x: &Element, y: &Element) -> Result<Element> {
        self.alg.owns(x)?;
        self.alg.owns(y)?;
        Ok(self.alg.element(self.poisson_vec(&x.coeffs, &y.coeffs)))
    }

    /// `A⊗B` as a tensor-algebra element.
    pub fn pure_tensor(&self, a: &CVec, b: &CVec) -> Element {
        self.alg.element(a.kronecker(b))
    }

    /// The symmetric form: `η_BC[{A,C}⊗(BD + η_BD DB)/2 + (AC + η_AC CA)/2⊗{B,D}]`.
    pub fn symmetric_form(&self, a: &CVec, b: &CVec, cc: &CVec, d: &CVec) -> Result<CVec> {
        let (a1, a2) = (self.left.alg(), self.right.alg());
        let pa = a1.vec_parity(a).ok_or(Error::Inhomogeneous)?;
        let pb = a2.vec_parity(b).ok_or(Error::Inhomogeneous)?;
        let pc = a1.vec_parity(cc).ok_or(Error::Inhomogeneous)?;
        let pd = a2.vec_parity(d).ok_or(Error::Inhomogeneous)?;
        let half = c(0.5, 0.0);
        let ac = self.left.bracket_op(a)? * cc;
        let bd = self.right.bracket_op(b)? * d;
        let sym2 = (a2.mul_vec(b, d) + a2.mul_vec(d, b) * c(pb.eta(pd), 0.0)) * half;
        let sym1 = (a1.mul_vec(a, cc) + a1.mul_vec(cc, a) * c(pa.eta(pc), 0.0)) * half;
        Ok((ac.kronecker(&sym2) + sym1.kronecker(&bd)) * c(pb.eta(pc), 0.0))
    }

    /// `Y_{A⊗B} = Y_A⊗μ(B) + μ(A)⊗Y_B + λ' Y_A⊗Y_B` for homogeneous `A`, `B` and a chosen `λ'`.
    pub fn product_derivation(&self, a: &CVec, b: &CVec, lambda: C64) -> Result<Derivation> {
        let (a1, a2) = (self.left.alg(), self.right.alg());
        let pa = a1.vec_parity(a).ok_or(Error::Inhomogeneous)?;
        let pb = a2.vec_parity(b).ok_or(Error::Inhomogeneous)?;
        let (ya, yb) = (self.left.bracket_op(a)?, self.right.bracket_op(b)?);
        let op = koszul_kron(a1, &ya, &(a2.left_op(b) + &yb * lambda), pb) + koszul_kron(a1, &a1.left_op(a), &yb, pb);
        Ok(Derivation { alg: self.alg.id(), op, parity: pa + pb })
    }

    /// Coupled Hamiltonian `H₁⊗I + I⊗H₂ + Σ F_i⊗G_i`.
    pub fn hamiltonian(&self, h1: &Element, h2: &Element, hint: &[(Element, Element)]) -> Result<Element> {
        let (a1, a2) = (self.left.alg(), self.right.alg());
        a1.owns(h1)?;
        a2.owns(h2)?;
        let mut h = h1.coeffs.kronecker(a2.unit_coeffs()) + a1.unit_coeffs().kronecker(&h2.coeffs);
        for (f, g) in hint {
            a1.owns(f)?;
            a2.owns(g)?;
            h += f.coeffs.kronecker(&g.coeffs);
        }
        Ok(self.alg.element(h))
    }
}

/// Product symplectic form `ω₁⊗I + I⊗ω₂` on the family `{X⊗id, id⊗Y}`.
pub struct ProductSymplectic {
    pub report: CompatibilityReport,
    pub structure: Option<SymplecticStructure>,
    /// Number of members coming from the left factor.
    pub left_members: usize,
}

pub fn product_symplectic(ss1: &SymplecticStructure, ss2: &SymplecticStructure) -> Result<ProductSymplectic> {
    let report = compatibility(ss1, ss2)?;
    if !report.exists() {
        return Ok(ProductSymplectic { report, structure: None, left_members: 0 });
    }
    let (a1, a2) = (ss1.alg().clone(), ss2.alg().clone());
    let alg = Arc::new(Algebra::tensor(&a1, &a2)?);
    let (d1, d2) = (a1.dim(), a2.dim());
    let mut members = Vec::new();
    for x in ss1.cx.family.members() {
        members.push(Derivation { alg: alg.id(), op: kron(&x.op, &CMat::identity(d2, d2)), parity: x.parity });
    }
    for y in ss2.cx.family.members() {
        members.push(Derivation { alg: alg.id(), op: koszul_kron(&a1, &CMat::identity(d1, d1), &y.op, y.parity), parity: y.parity });
    }
    let m1 = ss1.cx.m();
    let fam = Arc::new(DerivationFamily::new(&alg, members)?);
    let cx = Calculus::new(alg.clone(), fam)?;
    let (u1, u2) = (a1.unit_coeffs().clone(), a2.unit_coeffs().clone());
    let omega = cx.from_fn(2, Parity::Even, |t| {
        let (i, j) = (t[0], t[1]);
        if i < m1 && j < m1 {
            ss1.omega.value(&[i, j]).kronecker(&u2)
        } else if i >= m1 && j >= m1 {
            u1.kronecker(ss2.omega.value(&[i - m1, j - m1]))
        } else {
            CVec::zeros(d1 * d2)
        }
    })?;
    let structure = SymplecticStructure::new(cx, omega, crate::symplectic::FormKind::Custom)?;
    Ok(ProductSymplectic { report, structure: Some(structure), left_members: m1 })
}

/// Coupled Hamiltonian system on a product with its flow generator.
pub struct CoupledSystem {
    pub product: Arc<ProductPoisson>,
    pub h: Element,
    generator: CMat,
}

impl CoupledSystem {
    pub fn new(product: Arc<ProductPoisson>, h1: &Element, h2: &Element, hint: &[(Element, Element)]) -> Result<CoupledSystem> {
        let h = product.hamiltonian(h1, h2, hint)?;
        if product.alg.vec_parity(&h.coeffs) != Some(Parity::Even) {
            return Err(Error::InvalidArgument("coupled Hamiltonian must be even".into()));
        }
        let generator = product.bracket_op(&h.coeffs);
        Ok(CoupledSystem { product, h, generator })
    }

    pub fn generator(&self) -> &CMat {
        &self.generator
    }

    pub fn evolve(&self, x: &Element, t: f64, method: Method) -> Result<Element> {
        self.product.alg.owns(x)?;
        let v = match method {
            Method::ClosedForm => linalg::expm(&(&self.generator * c(t, 0.0))) * &x.coeffs,
            Method::Rk4 { steps } if steps > 0 => crate::symplectic::rk4_linear(&self.generator, &x.coeffs, t, steps),
            Method::Rk4 { .. } => return Err(Error::InvalidArgument("step count must be positive".into())),
        };
        Ok(self.product.alg.element(v))
    }

    /// Liouville picture through the transposed flow.
    pub fn evolve_state(&self, phi: &State, t: f64) -> Result<State> {
        if phi.alg != self.product.alg.id() {
            return Err(Error::AlgebraMismatch);
        }
        let flow = linalg::expm(&(&self.generator * c(t, 0.0)));
        State::from_values_like(&self.product.alg, phi, flow.transpose() * phi.values())
    }

    /// Unitary `e^{-iHt/ħ}` in the tensor realization when the product is quantum with `λ = iħ`.
    pub fn unitary(&self, t: f64) -> Result<CMat> {
        let lambda = self.product.lambda();
        let hbar = (lambda / I).re;
        if lambda.re.abs() > 1e-12 || hbar <= 0.0 {
            return Err(Error::InvalidArgument("unitary picture needs λ = iħ with ħ > 0".into()));
        }
        let hm = self.product.alg.to_matrix(&self.h.coeffs)?;
        Ok(linalg::expm(&(hm * (-I * c(t / hbar, 0.0)))))
    }
}

/// Block-diagonal super-Poisson structure on `R^{m₁+m₂ | n₁+n₂}`, coordinates ordered
/// (even₁, even₂, odd₁, odd₂).
pub fn superclassical_product(pb1: &SuperPBMatrix, pb2: &SuperPBMatrix) -> Result<SuperPBMatrix> {
    let ((m1, n1), (m2, n2)) = (pb1.dims(), pb2.dims());
    let (m, n) = (m1 + m2, n1 + n2);
    let map1 = |a: usize| if a < m1 { a } else { m + (a - m1) };
    let map2 = |a: usize| if a < m2 { m1 + a } else { m + n1 + (a - m2) };
    let mut lower = CMat::zeros(m + n, m + n);
    for a in 0..m1 + n1 {
        for b in 0..m1 + n1 {
            lower[(map1(a), map1(b))] = pb1.lower()[(a, b)];
        }
    }
    for a in 0..m2 + n2 {
        for b in 0..m2 + n2 {
            lower[(map2(a), map2(b))] = pb2.lower()[(a, b)];
        }
    }
    SuperPBMatrix::new(m, n, lower)
}

/// Embeds functions of either factor into the product superspace.
pub fn embed(f: &GrassmannElement, total: (usize, usize), even_offset: usize, odd_offset: usize) -> Result<GrassmannElement> {
    let (m, n) = total;
    let mut out = GrassmannElement::zero(m, n);
    for ((bits, exps), z) in f.terms() {
        let mut e = vec![0u32; m];
        e[even_offset..even_offset + exps.len()].copy_from_slice(exps);
        out = out.add(&GrassmannElement::monomial(m, n, bits << odd_offset, e, *z)?)?;
    }
    Ok(out)
}

/// Commutative product bracket `η_ug [{f,g}₁ uv + fg {u,v}₂]` computed factorwise and embedded.
pub fn superclassical_product_bracket(
    pb1: &SuperPBMatrix,
    pb2: &SuperPBMatrix,
    (f, u): (&GrassmannElement, &GrassmannElement),
    (g, v): (&GrassmannElement, &GrassmannElement),
) -> Result<GrassmannElement> {
    let ((m1, n1), (m2, n2)) = (pb1.dims(), pb2.dims());
    let total = (m1 + m2, n1 + n2);
    let e1 = |x: &GrassmannElement| embed(x, total, 0, 0);
    let e2 = |x: &GrassmannElement| embed(x, total, m1, n1);
    let pu = u.parity().ok_or(Error::Inhomogeneous)?;
    let pg = g.parity().ok_or(Error::Inhomogeneous)?;
    let t1 = e1(&pb1.bracket(f, g)?)?.mul(&e2(&u.mul(v)?)?)?;
    let t2 = e1(&f.mul(g)?)?.mul(&e2(&pb2.bracket(u, v)?)?)?;
    Ok(t1.add(&t2)?.scale(c(pu.eta(pg), 0.0)))
}
