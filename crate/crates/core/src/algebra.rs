//! Finite-dimensional associative unital *-superalgebras given by structure constants.
//!
//! Basis elements are homogeneous. Products are stored sparsely: `prod[i][j]`
//! lists the nonzero `(k, c_ijk)` with `e_i e_j = sum_k c_ijk e_k`. The involution
//! is antilinear: `A* = J conj(a)` where column `j` of `J` holds the coordinates of `e_j*`.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, c, herm_eig, max_abs, null_space, CMat, CVec, C64, I, ONE, ZERO};
use crate::{Error, Result};

/// Tolerance used when validating built algebras.
pub const STRUCTURE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn from_bit(b: u8) -> Parity {
        if b % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }

    pub fn is_odd(self) -> bool {
        self == Parity::Odd
    }

    /// `(-1)^(self * other)`, the Koszul sign η.
    pub fn eta(self, other: Parity) -> f64 {
        linalg::sign(self.is_odd() && other.is_odd())
    }
}

impl Add for Parity {
    type Output = Parity;
    fn add(self, o: Parity) -> Parity {
        Parity::from_bit(self.bit() + o.bit())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum AlgebraKind {
    Matrix { n: usize },
    GradedMatrix { p: usize, q: usize },
    Grassmann { n: usize },
    Tensor { left: Box<AlgebraKind>, right: Box<AlgebraKind> },
    Custom { name: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlgebraId(pub u64);

/// A faithful matrix picture of the algebra: basis matrices plus the grading operator
/// (`+1` on even rows, `-1` on odd rows of the defining space).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixRealization {
    pub basis: Vec<CMat>,
    pub grading: CMat,
}

impl MatrixRealization {
    pub fn size(&self) -> usize {
        self.grading.nrows()
    }
}

#[derive(Clone, Debug)]
pub struct Algebra {
    id: AlgebraId,
    kind: AlgebraKind,
    labels: Vec<String>,
    parity: Vec<Parity>,
    prod: Vec<Vec<Vec<(usize, C64)>>>,
    unit: CVec,
    involution: CMat,
    realization: Option<MatrixRealization>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub alg: AlgebraId,
    pub coeffs: CVec,
    pub parity: Option<Parity>,
}

impl Element {
    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn scale(&self, z: C64) -> Element {
        Element { alg: self.alg, coeffs: &self.coeffs * z, parity: self.parity }
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(self.coeffs.as_slice())
    }

    pub fn dist(&self, other: &Element) -> f64 {
        linalg::dist(&self.coeffs, &other.coeffs)
    }

    fn combine(&self, o: &Element, coeffs: CVec) -> Element {
        assert_eq!(self.alg, o.alg, "elements of different algebras");
        let parity = if self.parity == o.parity { self.parity } else { None };
        Element { alg: self.alg, coeffs, parity }
    }
}

impl Add for &Element {
    type Output = Element;
    fn add(self, o: &Element) -> Element {
        self.combine(o, &self.coeffs + &o.coeffs)
    }
}

impl Sub for &Element {
    type Output = Element;
    fn sub(self, o: &Element) -> Element {
        self.combine(o, &self.coeffs - &o.coeffs)
    }
}

impl Neg for &Element {
    type Output = Element;
    fn neg(self) -> Element {
        self.scale(-ONE)
    }
}

impl Mul<C64> for &Element {
    type Output = Element;
    fn mul(self, z: C64) -> Element {
        self.scale(z)
    }
}

#[derive(Clone, Debug)]
pub struct Center {
    pub even: Vec<Element>,
    pub odd: Vec<Element>,
}

impl Center {
    pub fn dim(&self) -> usize {
        self.even.len() + self.odd.len()
    }
}

#[derive(Clone, Debug)]
pub struct Sector {
    pub dim: usize,
    /// Projection onto the sector in the defining matrix space.
    pub projection: CMat,
    /// The same projection as a central element of the algebra.
    pub central: Element,
}

/// Maximal residuals of the defining axioms.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AxiomResiduals {
    pub associativity: f64,
    pub unit: f64,
    pub parity: f64,
    pub antihomomorphism: f64,
    pub involutive: f64,
    pub unit_star: f64,
}

impl AxiomResiduals {
    pub fn max(&self) -> f64 {
        [self.associativity, self.unit, self.parity, self.antihomomorphism, self.involutive, self.unit_star]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn odd_pairs_sign(a: usize, b: usize) -> f64 {
    // number of pairs (i in a, j in b) with i > j
    let mut count = 0;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros();
        count += (a >> (j + 1)).count_ones();
        bb &= bb - 1;
    }
    linalg::sign(count % 2 == 1)
}

fn grassmann_label(mask: usize) -> String {
    if mask == 0 {
        return "1".into();
    }
    (0..usize::BITS)
        .filter(|b| mask >> b & 1 == 1)
        .map(|b| format!("θ{}", b + 1))
        .collect()
}

impl Algebra {
    fn assemble(
        kind: AlgebraKind,
        labels: Vec<String>,
        parity: Vec<Parity>,
        prod: Vec<Vec<Vec<(usize, C64)>>>,
        unit: CVec,
        involution: CMat,
        realization: Option<MatrixRealization>,
    ) -> Algebra {
        let mut h = DefaultHasher::new();
        format!("{kind:?}").hash(&mut h);
        parity.hash(&mut h);
        for row in &prod {
            for list in row {
                for (k, z) in list {
                    k.hash(&mut h);
                    z.re.to_bits().hash(&mut h);
                    z.im.to_bits().hash(&mut h);
                }
                usize::MAX.hash(&mut h);
            }
        }
        for z in involution.iter() {
            z.re.to_bits().hash(&mut h);
            z.im.to_bits().hash(&mut h);
        }
        Algebra { id: AlgebraId(h.finish()), kind, labels, parity, prod, unit, involution, realization }
    }

    /// Builds an algebra spanned by the given homogeneous matrices. The involution is the
    /// conjugate transpose on even elements and `i` times it on odd ones, which is what the
    /// graded antihomomorphism rule requires of supermatrices.
    pub fn from_matrix_basis(
        kind: AlgebraKind,
        labels: Vec<String>,
        basis: Vec<CMat>,
        parity: Vec<Parity>,
        grading: CMat,
    ) -> Result<Algebra> {
        let d = basis.len();
        if d == 0 || parity.len() != d || labels.len() != d {
            return Err(Error::InvalidArgument("basis, parity and labels must agree in length".into()));
        }
        let n = grading.nrows();
        let coords = |m: &CMat| -> Result<CVec> {
            coordinates(&basis, m).map_err(|res| Error::InvalidAlgebra { check: "closure".into(), residual: res })
        };
        let mut prod = vec![vec![Vec::new(); d]; d];
        for i in 0..d {
            for j in 0..d {
                let x = coords(&(&basis[i] * &basis[j]))?;
                prod[i][j] = sparse(&x);
            }
        }
        let unit = coords(&CMat::identity(n, n))?;
        let mut involution = CMat::zeros(d, d);
        for j in 0..d {
            let mut s = basis[j].adjoint();
            if parity[j].is_odd() {
                s *= I;
            }
            involution.set_column(j, &coords(&s)?);
        }
        let realization = Some(MatrixRealization { basis, grading });
        let alg = Algebra::assemble(kind, labels, parity, prod, unit, involution, realization);
        alg.check()?;
        Ok(alg)
    }

    /// M_n(C) on the matrix-unit basis `E_ij` (row-major), optionally graded with
    /// `p` even rows followed by `q` odd rows.
    pub fn matrix_graded(n: usize, grading: Option<(usize, usize)>) -> Result<Algebra> {
        if n == 0 {
            return Err(Error::InvalidArgument("matrix size must be positive".into()));
        }
        let p = match grading {
            Some((p, q)) if p + q != n => {
                return Err(Error::InvalidArgument(format!("grading ({p},{q}) does not add up to {n}")))
            }
            Some((p, _)) => p,
            None => n,
        };
        let mut basis = Vec::with_capacity(n * n);
        let mut labels = Vec::with_capacity(n * n);
        let mut parity = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut e = CMat::zeros(n, n);
                e[(i, j)] = ONE;
                basis.push(e);
                labels.push(format!("E{}{}", i + 1, j + 1));
                parity.push(Parity::from_bit(((i >= p) ^ (j >= p)) as u8));
            }
        }
        let grading_op = CMat::from_diagonal(&CVec::from_fn(n, |i, _| if i < p { ONE } else { -ONE }));
        let kind = match grading {
            Some((p, q)) => AlgebraKind::GradedMatrix { p, q },
            None => AlgebraKind::Matrix { n },
        };
        Algebra::from_matrix_basis(kind, labels, basis, parity, grading_op)
    }

    pub fn matrix(n: usize) -> Result<Algebra> {
        Algebra::matrix_graded(n, None)
    }

    pub fn graded_matrix(p: usize, q: usize) -> Result<Algebra> {
        Algebra::matrix_graded(p + q, Some((p, q)))
    }

    /// Direct sum of full matrix blocks, acting block-diagonally on C^(sum of sizes).
    pub fn block_diagonal(sizes: &[usize]) -> Result<Algebra> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidArgument("block sizes must be positive".into()));
        }
        let n: usize = sizes.iter().sum();
        let mut basis = Vec::new();
        let mut labels = Vec::new();
        let mut off = 0;
        for (b, &s) in sizes.iter().enumerate() {
            for i in 0..s {
                for j in 0..s {
                    let mut e = CMat::zeros(n, n);
                    e[(off + i, off + j)] = ONE;
                    basis.push(e);
                    labels.push(format!("B{}E{}{}", b + 1, i + 1, j + 1));
                }
            }
            off += s;
        }
        let parity = vec![Parity::Even; basis.len()];
        let name = format!(
            "blocks({})",
            sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
        );
        Algebra::from_matrix_basis(AlgebraKind::Custom { name }, labels, basis, parity, CMat::identity(n, n))
    }

    /// The commutative algebra of functions on `n` points (diagonal matrices).
    pub fn functions_on_points(n: usize) -> Result<Algebra> {
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one point".into()));
        }
        let basis = (0..n)
            .map(|i| {
                let mut e = CMat::zeros(n, n);
                e[(i, i)] = ONE;
                e
            })
            .collect();
        let labels = (0..n).map(|i| format!("χ{}", i + 1)).collect();
        Algebra::from_matrix_basis(
            AlgebraKind::Custom { name: format!("functions({n})") },
            labels,
            basis,
            vec![Parity::Even; n],
            CMat::identity(n, n),
        )
    }

    /// Grassmann algebra on `n` generators; basis index = bit-set of generators.
    pub fn grassmann(n: usize) -> Result<Algebra> {
        if n == 0 || n > 16 {
            return Err(Error::InvalidArgument("Grassmann generator count must be in 1..=16".into()));
        }
        let d = 1usize << n;
        let mut prod = vec![vec![Vec::new(); d]; d];
        for (a, row) in prod.iter_mut().enumerate() {
            for (b, entry) in row.iter_mut().enumerate() {
                if a & b == 0 {
                    entry.push((a | b, c(odd_pairs_sign(a, b), 0.0)));
                }
            }
        }
        let parity = (0..d).map(|m| Parity::from_bit((m.count_ones() % 2) as u8)).collect();
        let labels = (0..d).map(grassmann_label).collect();
        let mut unit = CVec::zeros(d);
        unit[0] = ONE;
        let alg = Algebra::assemble(
            AlgebraKind::Grassmann { n },
            labels,
            parity,
            prod,
            unit,
            CMat::identity(d, d),
            None,
        );
        alg.check()?;
        Ok(alg)
    }

    /// Graded tensor product: `(A⊗B)(C⊗D) = (-1)^(ε_B ε_C) AC⊗BD`, basis `(i, j) -> i*d2 + j`.
    pub fn tensor(left: &Algebra, right: &Algebra) -> Result<Algebra> {
        let (d1, d2) = (left.dim(), right.dim());
        let d = d1 * d2;
        let mut prod = vec![vec![Vec::new(); d]; d];
        for i in 0..d1 {
            for j in 0..d2 {
                for k in 0..d1 {
                    for l in 0..d2 {
                        let s = right.parity[j].eta(left.parity[k]);
                        let mut list = Vec::new();
                        for &(m, a) in &left.prod[i][k] {
                            for &(n, b) in &right.prod[j][l] {
                                list.push((m * d2 + n, a * b * s));
                            }
                        }
                        prod[i * d2 + j][k * d2 + l] = list;
                    }
                }
            }
        }
        let mut labels = Vec::with_capacity(d);
        let mut parity = Vec::with_capacity(d);
        for i in 0..d1 {
            for j in 0..d2 {
                labels.push(format!("{}⊗{}", left.labels[i], right.labels[j]));
                parity.push(left.parity[i] + right.parity[j]);
            }
        }
        let unit = left.unit.kronecker(&right.unit);
        let involution = left.involution.kronecker(&right.involution);
        let realization = match (&left.realization, &right.realization) {
            (Some(l), Some(r)) => {
                let mut basis = Vec::with_capacity(d);
                for a in &l.basis {
                    for b in &r.basis {
                        basis.push(a.kronecker(b));
                    }
                }
                // A⊗B is realized by (A Γ^(ε_B)) ⊗ B with Γ the left grading operator.
                for i in 0..d1 {
                    for j in 0..d2 {
                        if right.parity[j].is_odd() {
                            basis[i * d2 + j] = (&l.basis[i] * &l.grading).kronecker(&r.basis[j]);
                        }
                    }
                }
                Some(MatrixRealization { basis, grading: l.grading.kronecker(&r.grading) })
            }
            _ => None,
        };
        let kind = AlgebraKind::Tensor { left: Box::new(left.kind.clone()), right: Box::new(right.kind.clone()) };
        let alg = Algebra::assemble(kind, labels, parity, prod, unit, involution, realization);
        alg.check()?;
        Ok(alg)
    }

    pub fn id(&self) -> AlgebraId {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.parity.len()
    }

    pub fn kind(&self) -> &AlgebraKind {
        &self.kind
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn parities(&self) -> &[Parity] {
        &self.parity
    }

    pub fn basis_parity(&self, i: usize) -> Parity {
        self.parity[i]
    }

    pub fn unit_coeffs(&self) -> &CVec {
        &self.unit
    }

    pub fn involution_matrix(&self) -> &CMat {
        &self.involution
    }

    pub fn realization(&self) -> Option<&MatrixRealization> {
        self.realization.as_ref()
    }

    /// Nonzero structure constants `(k, c_ijk)` of `e_i e_j`.
    pub fn structure(&self, i: usize, j: usize) -> &[(usize, C64)] {
        &self.prod[i][j]
    }

    pub fn structure_dense(&self) -> Vec<Vec<Vec<C64>>> {
        let d = self.dim();
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        let mut v = vec![ZERO; d];
                        for &(k, z) in &self.prod[i][j] {
                            v[k] += z;
                        }
                        v
                    })
                    .collect()
            })
            .collect()
    }

    // ---- coefficient-level operations ----

    pub fn mul_vec(&self, a: &CVec, b: &CVec) -> CVec {
        let d = self.dim();
        let mut out = CVec::zeros(d);
        for i in 0..d {
            if a[i] == ZERO {
                continue;
            }
            for j in 0..d {
                if b[j] == ZERO {
                    continue;
                }
                let ab = a[i] * b[j];
                for &(k, z) in &self.prod[i][j] {
                    out[k] += ab * z;
                }
            }
        }
        out
    }

    /// Matrix of `B ↦ A B`.
    pub fn left_op(&self, a: &CVec) -> CMat {
        let d = self.dim();
        let mut m = CMat::zeros(d, d);
        for i in 0..d {
            if a[i] == ZERO {
                continue;
            }
            for j in 0..d {
                for &(k, z) in &self.prod[i][j] {
                    m[(k, j)] += a[i] * z;
                }
            }
        }
        m
    }

    /// Matrix of `B ↦ B A`.
    pub fn right_op(&self, a: &CVec) -> CMat {
        let d = self.dim();
        let mut m = CMat::zeros(d, d);
        for j in 0..d {
            if a[j] == ZERO {
                continue;
            }
            for i in 0..d {
                for &(k, z) in &self.prod[i][j] {
                    m[(k, i)] += a[j] * z;
                }
            }
        }
        m
    }

    /// Diagonal ±1 operator of the grading on coefficient space.
    pub fn parity_op(&self) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(
            self.dim(),
            self.parity.iter().map(|p| c(linalg::sign(p.is_odd()), 0.0)),
        ))
    }

    pub fn star_vec(&self, a: &CVec) -> CVec {
        &self.involution * a.map(|z| z.conj())
    }

    pub fn split(&self, a: &CVec) -> (CVec, CVec) {
        let mut even = a.clone();
        let mut odd = a.clone();
        for (i, p) in self.parity.iter().enumerate() {
            if p.is_odd() {
                even[i] = ZERO;
            } else {
                odd[i] = ZERO;
            }
        }
        (even, odd)
    }

    pub fn part(&self, a: &CVec, p: Parity) -> CVec {
        let (e, o) = self.split(a);
        match p {
            Parity::Even => e,
            Parity::Odd => o,
        }
    }

    /// Parity of a coefficient vector if homogeneous (zero counts as even).
    pub fn vec_parity(&self, a: &CVec) -> Option<Parity> {
        let (e, o) = self.split(a);
        let scale = 1e-12 * max_abs(a.as_slice()).max(1e-300);
        let (ze, zo) = (max_abs(e.as_slice()) <= scale, max_abs(o.as_slice()) <= scale);
        match (ze, zo) {
            (_, true) => Some(Parity::Even),
            (true, false) => Some(Parity::Odd),
            _ => None,
        }
    }

    /// Supercommutator, extended bilinearly over homogeneous parts.
    pub fn supercomm_vec(&self, a: &CVec, b: &CVec) -> CVec {
        let ao = self.part(a, Parity::Odd);
        let bo = self.part(b, Parity::Odd);
        // ab - ba, with the odd-odd piece flipped to +
        self.mul_vec(a, b) - self.mul_vec(b, a) + self.mul_vec(&bo, &ao) * c(2.0, 0.0)
    }

    // ---- element-level API ----

    pub fn element(&self, coeffs: CVec) -> Element {
        assert_eq!(coeffs.len(), self.dim(), "coefficient length");
        let parity = self.vec_parity(&coeffs);
        Element { alg: self.id, coeffs, parity }
    }

    pub fn basis(&self, i: usize) -> Element {
        let mut v = CVec::zeros(self.dim());
        v[i] = ONE;
        Element { alg: self.id, coeffs: v, parity: Some(self.parity[i]) }
    }

    pub fn unit(&self) -> Element {
        Element { alg: self.id, coeffs: self.unit.clone(), parity: Some(Parity::Even) }
    }

    pub fn zero(&self) -> Element {
        Element { alg: self.id, coeffs: CVec::zeros(self.dim()), parity: Some(Parity::Even) }
    }

    pub fn scalar(&self, z: C64) -> Element {
        self.unit().scale(z)
    }

    pub fn owns(&self, a: &Element) -> Result<()> {
        if a.alg != self.id || a.dim() != self.dim() {
            return Err(Error::AlgebraMismatch);
        }
        Ok(())
    }

    pub fn mul(&self, a: &Element, b: &Element) -> Result<Element> {
        self.owns(a)?;
        self.owns(b)?;
        let coeffs = self.mul_vec(&a.coeffs, &b.coeffs);
        let parity = match (a.parity, b.parity) {
            (Some(p), Some(q)) => Some(p + q),
            _ => self.vec_parity(&coeffs),
        };
        Ok(Element { alg: self.id, coeffs, parity })
    }

    pub fn supercommutator(&self, a: &Element, b: &Element) -> Result<Element> {
        self.owns(a)?;
        self.owns(b)?;
        Ok(self.element(self.supercomm_vec(&a.coeffs, &b.coeffs)))
    }

    pub fn involution(&self, a: &Element) -> Result<Element> {
        self.owns(a)?;
        Ok(Element { alg: self.id, coeffs: self.star_vec(&a.coeffs), parity: a.parity })
    }

    /// Random element supported on basis elements of the given parity (or all, for `None`).
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R, parity: Option<Parity>) -> Element {
        let mut v = linalg::random_cvec(rng, self.dim());
        if let Some(p) = parity {
            v = self.part(&v, p);
        }
        self.element(v)
    }

    pub fn random_homogeneous<R: Rng + ?Sized>(&self, rng: &mut R) -> Element {
        let has_odd = self.parity.iter().any(|p| p.is_odd());
        let p = if has_odd && rng.gen_bool(0.5) { Parity::Odd } else { Parity::Even };
        self.random(rng, Some(p))
    }

    pub fn is_supercommutative(&self, tol: f64) -> bool {
        self.max_supercommutator() <= tol
    }

    pub fn max_supercommutator(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let e = |k| self.basis(k).coeffs;
                worst = worst.max(max_abs(self.supercomm_vec(&e(i), &e(j)).as_slice()));
            }
        }
        worst
    }

    // ---- matrix realization ----

    pub fn to_matrix(&self, a: &CVec) -> Result<CMat> {
        let r = self.realization.as_ref().ok_or(Error::NoMatrixRealization)?;
        let n = r.size();
        let mut m = CMat::zeros(n, n);
        for (k, b) in r.basis.iter().enumerate() {
            if a[k] != ZERO {
                m += b * a[k];
            }
        }
        Ok(m)
    }

    pub fn from_matrix(&self, m: &CMat) -> Result<CVec> {
        let r = self.realization.as_ref().ok_or(Error::NoMatrixRealization)?;
        coordinates(&r.basis, m)
            .map_err(|res| Error::InvalidArgument(format!("matrix is not in the algebra (residual {res:e})")))
    }

    // ---- structure analysis ----

    pub fn axiom_residuals(&self) -> AxiomResiduals {
        let d = self.dim();
        let mut r = AxiomResiduals::default();
        let e = |k: usize| {
            let mut v = CVec::zeros(d);
            v[k] = ONE;
            v
        };
        for i in 0..d {
            for j in 0..d {
                for &(k, z) in &self.prod[i][j] {
                    let p = self.parity[i] + self.parity[j];
                    if self.parity[k] != p {
                        r.parity = r.parity.max(z.norm());
                    }
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                let eij = self.mul_vec(&e(i), &e(j));
                for k in 0..d {
                    let lhs = self.mul_vec(&eij, &e(k));
                    let rhs = self.mul_vec(&e(i), &self.mul_vec(&e(j), &e(k)));
                    r.associativity = r.associativity.max(linalg::dist(&lhs, &rhs));
                }
            }
        }
        for i in 0..d {
            let ei = e(i);
            r.unit = r
                .unit
                .max(linalg::dist(&self.mul_vec(&self.unit, &ei), &ei))
                .max(linalg::dist(&self.mul_vec(&ei, &self.unit), &ei));
            r.involutive = r.involutive.max(linalg::dist(&self.star_vec(&self.star_vec(&ei)), &ei));
            for j in 0..d {
                let ej = e(j);
                let lhs = self.star_vec(&self.mul_vec(&ei, &ej));
                let rhs = self.mul_vec(&self.star_vec(&ej), &self.star_vec(&ei))
                    * c(self.parity[i].eta(self.parity[j]), 0.0);
                r.antihomomorphism = r.antihomomorphism.max(linalg::dist(&lhs, &rhs));
            }
        }
        // antilinearity is built in; check I* = I
        r.unit_star = linalg::dist(&self.star_vec(&self.unit), &self.unit);
        r
    }

    /// Fails with the first axiom whose residual exceeds [`STRUCTURE_TOL`].
    pub fn check(&self) -> Result<()> {
        let r = self.axiom_residuals();
        for (name, v) in [
            ("associativity", r.associativity),
            ("unit", r.unit),
            ("parity", r.parity),
            ("antihomomorphism", r.antihomomorphism),
            ("involutive", r.involutive),
            ("unit_star", r.unit_star),
        ] {
            if v > STRUCTURE_TOL {
                return Err(Error::InvalidAlgebra { check: name.into(), residual: v });
            }
        }
        Ok(())
    }

    /// Basis of the graded center, split by parity.
    pub fn graded_center(&self) -> Center {
        let d = self.dim();
        let mut out = Center { even: Vec::new(), odd: Vec::new() };
        for p in [Parity::Even, Parity::Odd] {
            let idx: Vec<usize> = (0..d).filter(|&i| self.parity[i] == p).collect();
            if idx.is_empty() {
                continue;
            }
            let mut m = CMat::zeros(d * d, idx.len());
            for (col, &i) in idx.iter().enumerate() {
                for j in 0..d {
                    let s = self.supercomm_vec(&self.basis(i).coeffs, &self.basis(j).coeffs);
                    for k in 0..d {
                        m[(j * d + k, col)] = s[k];
                    }
                }
            }
            let ns = null_space(&m, 1e-10);
            for col in 0..ns.ncols() {
                let mut v = CVec::zeros(d);
                for (r, &i) in idx.iter().enumerate() {
                    v[i] = ns[(r, col)];
                }
                let el = Element { alg: self.id, coeffs: v, parity: Some(p) };
                match p {
                    Parity::Even => out.even.push(el),
                    Parity::Odd => out.odd.push(el),
                }
            }
        }
        out
    }

    /// Joint eigenspaces of the (even) center in the defining matrix space.
    pub fn coherent_sectors(&self) -> Result<Vec<Sector>> {
        let r = self.realization.as_ref().ok_or(Error::NoMatrixRealization)?;
        let n = r.size();
        let center = self.graded_center();
        let mats: Vec<CMat> = center.even.iter().map(|z| self.to_matrix(&z.coeffs)).collect::<Result<_>>()?;
        // generic Hermitian combination of the *-closed center
        let mut h = CMat::zeros(n, n);
        for (k, z) in mats.iter().enumerate() {
            let a = 1.0 + 0.618_033_988_7 * (k as f64 + 1.0).sqrt();
            let b = 0.414_213_562_4 * (k as f64 + 2.0).ln();
            h += (z + z.adjoint()) * c(a, 0.0) + (z - z.adjoint()) * c(0.0, b);
        }
        let (vals, vecs) = herm_eig(&h);
        let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, v) in vals.iter().enumerate() {
            match groups.last_mut() {
                Some(g) if (vals[g[0]] - v).abs() <= 1e-8 * scale => g.push(i),
                _ => groups.push(vec![i]),
            }
        }
        let mut sectors = Vec::new();
        for g in groups {
            let mut v = CMat::zeros(n, g.len());
            for (j, &i) in g.iter().enumerate() {
                v.set_column(j, &vecs.column(i));
            }
            let p = &v * v.adjoint();
            for z in &mats {
                let res = linalg::max_abs_mat(&(z * &p - &p * z));
                if res > 1e-8 {
                    return Err(Error::Internal(format!("center not diagonalizable (residual {res:e})")));
                }
            }
            let central = self.element(self.from_matrix(&p)?);
            sectors.push(Sector { dim: g.len(), projection: p, central });
        }
        Ok(sectors)
    }

    // ---- serialization ----

    pub fn descriptor(&self) -> AlgebraDescriptor {
        let pair = |z: &C64| [z.re, z.im];
        AlgebraDescriptor {
            schema: DESCRIPTOR_SCHEMA,
            dim: self.dim(),
            labels: self.labels.clone(),
            parity: self.parity.iter().map(|p| p.bit()).collect(),
            structure: self
                .structure_dense()
                .iter()
                .map(|row| row.iter().map(|v| v.iter().map(pair).collect()).collect())
                .collect(),
            unit: self.unit.iter().map(pair).collect(),
            involution: (0..self.dim())
                .map(|i| (0..self.dim()).map(|j| pair(&self.involution[(i, j)])).collect())
                .collect(),
            kind: self.kind.clone(),
            realization: self.realization.as_ref().map(|r| RealizationDescriptor {
                basis: r
                    .basis
                    .iter()
                    .map(|b| (0..b.nrows()).map(|i| (0..b.ncols()).map(|j| pair(&b[(i, j)])).collect()).collect())
                    .collect(),
                grading: (0..r.size()).map(|i| r.grading[(i, i)].re as i8).collect(),
            }),
        }
    }

    /// Rebuilds and validates an algebra from its descriptor.
    pub fn from_descriptor(d: &AlgebraDescriptor) -> Result<Algebra> {
        if d.schema != DESCRIPTOR_SCHEMA {
            return Err(Error::InvalidArgument(format!("unsupported descriptor schema {}", d.schema)));
        }
        let n = d.dim;
        let shape_ok = d.parity.len() == n
            && d.labels.len() == n
            && d.unit.len() == n
            && d.structure.len() == n
            && d.structure.iter().all(|r| r.len() == n && r.iter().all(|v| v.len() == n))
            && d.involution.len() == n
            && d.involution.iter().all(|r| r.len() == n);
        if !shape_ok || n == 0 {
            return Err(Error::InvalidArgument("descriptor dimensions are inconsistent".into()));
        }
        let z = |p: &[f64; 2]| c(p[0], p[1]);
        let prod = d
            .structure
            .iter()
            .map(|row| row.iter().map(|v| sparse(&CVec::from_iterator(n, v.iter().map(z)))).collect())
            .collect();
        let unit = CVec::from_iterator(n, d.unit.iter().map(z));
        let involution = CMat::from_fn(n, n, |i, j| z(&d.involution[i][j]));
        let realization = d.realization.as_ref().map(|r| MatrixRealization {
            basis: r
                .basis
                .iter()
                .map(|b| CMat::from_fn(b.len(), b.len(), |i, j| z(&b[i][j])))
                .collect(),
            grading: CMat::from_diagonal(&CVec::from_iterator(r.grading.len(), r.grading.iter().map(|&g| c(g as f64, 0.0)))),
        });
        let parity = d.parity.iter().map(|&b| Parity::from_bit(b)).collect();
        let alg = Algebra::assemble(d.kind.clone(), d.labels.clone(), parity, prod, unit, involution, realization);
        alg.check()?;
        Ok(alg)
    }
}

/// Coordinates of `m` in the span of `basis`; exact when the basis consists of
/// distinct matrix units, least squares otherwise. Err carries the residual.
fn coordinates(basis: &[CMat], m: &CMat) -> std::result::Result<CVec, f64> {
    let positions: Option<Vec<usize>> = basis
        .iter()
        .map(|b| {
            let nz: Vec<usize> = (0..b.len()).filter(|&k| b.as_slice()[k] != ZERO).collect();
            (nz.len() == 1 && b.as_slice()[nz[0]] == ONE).then(|| nz[0])
        })
        .collect();
    if let Some(pos) = positions {
        let x = CVec::from_iterator(pos.len(), pos.iter().map(|&k| m.as_slice()[k]));
        let mut rest = m.clone();
        for &k in &pos {
            rest.as_mut_slice()[k] = ZERO;
        }
        let res = max_abs(rest.as_slice());
        return if res > 1e-9 * (1.0 + m.norm()) { Err(res) } else { Ok(x) };
    }
    let n = m.len();
    let b = CMat::from_fn(n, basis.len(), |r, k| basis[k].as_slice()[r]);
    let (x, res) = linalg::lstsq(&b, &linalg::flatten(m));
    if res > 1e-9 * (1.0 + m.norm()) {
        Err(res)
    } else {
        Ok(x)
    }
}

fn sparse(x: &CVec) -> Vec<(usize, C64)> {
    x.iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > 1e-15)
        .map(|(k, z)| (k, *z))
        .collect()
}

pub const DESCRIPTOR_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationDescriptor {
    pub basis: Vec<Vec<Vec<[f64; 2]>>>,
    pub grading: Vec<i8>,
}

/// Versioned JSON form of an algebra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraDescriptor {
    pub schema: u32,
    pub dim: usize,
    pub labels: Vec<String>,
    pub parity: Vec<u8>,
    pub structure: Vec<Vec<Vec<[f64; 2]>>>,
    pub unit: Vec<[f64; 2]>,
    pub involution: Vec<Vec<[f64; 2]>>,
    pub kind: AlgebraKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realization: Option<RealizationDescriptor>,
}

impl AlgebraDescriptor {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("descriptor serializes")
    }

    pub fn from_json(s: &str) -> Result<AlgebraDescriptor> {
        serde_json::from_str(s).map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

/// Pauli matrices in M2 coordinates.
pub fn pauli(alg: &Algebra, which: char) -> Element {
    assert_eq!(alg.dim(), 4, "Pauli matrices live in M2");
    let v = match which {
        'x' => [ZERO, ONE, ONE, ZERO],
        'y' => [ZERO, -I, I, ZERO],
        'z' => [ONE, ZERO, ZERO, -ONE],
        _ => [ONE, ZERO, ZERO, ONE],
    };
    alg.element(CVec::from_column_slice(&v))
}
