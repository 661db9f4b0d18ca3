//! States as positive normalized functionals, PObVMs, compatible completeness and GNS.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, AlgebraId, Element, Parity};
use crate::calculus::Isomorphism;
use crate::linalg::{self, c, herm_eig, max_abs, CMat, CVec, C64, ONE, ZERO};
use crate::superclassical::{GrassmannElement, GrassmannTable};
use crate::symplectic::SymplecticStructure;
use crate::{Error, Result};

pub const POSITIVITY_TOL: f64 = 1e-10;
pub const NORMALIZATION_TOL: f64 = 1e-12;
const POSITIVITY_SAMPLES: usize = 200;
const POSITIVITY_SEED: u64 = 0x5eed_0001;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "data", rename_all = "camelCase")]
pub enum Realization {
    DensityMatrix(CMat),
    Functional(CVec),
    BerezinDensity(GrassmannTable),
    ClassicalDensity(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct State {
    pub alg: AlgebraId,
    pub realization: Realization,
    values: CVec,
    pub pure: Option<bool>,
}

fn invalid(reason: impl Into<String>, witness: Option<&CVec>) -> Error {
    Error::InvalidState { reason: reason.into(), witness: witness.map(|w| w.iter().map(|z| [z.re, z.im]).collect()) }
}

/// `φ(e_i) = Tr(ρ B_i)` for the realization basis.
fn density_values(alg: &Algebra, rho: &CMat) -> Result<CVec> {
    let r = alg.realization().ok_or(Error::NoMatrixRealization)?;
    Ok(CVec::from_iterator(alg.dim(), r.basis.iter().map(|b| (rho * b).trace())))
}

/// Inverse of `density_values`: the matrix `ρ` in the realization span with the given values.
fn density_from_values(alg: &Algebra, values: &CVec) -> Result<CMat> {
    let r = alg.realization().ok_or(Error::NoMatrixRealization)?;
    let n = r.size();
    let mut m = CMat::zeros(alg.dim(), n * n);
    for (i, b) in r.basis.iter().enumerate() {
        for row in 0..n {
            for col in 0..n {
                // Tr(ρ B) = Σ ρ[row,col] B[col,row]
                m[(i, row * n + col)] = b[(col, row)];
            }
        }
    }
    let (x, res) = linalg::lstsq(&m, values);
    if res > 1e-9 * values.norm().max(1.0) {
        return Err(Error::Internal(format!("values have no density preimage (residual {res:e})")));
    }
    Ok(CMat::from_fn(n, n, |row, col| x[row * n + col]))
}

fn berezin_values(alg: &Algebra, n: usize, rho: &GrassmannElement) -> Result<CVec> {
    if alg.dim() != 1usize << n {
        return Err(Error::AlgebraMismatch);
    }
    let mut v = CVec::zeros(alg.dim());
    for i in 0..alg.dim() {
        let mut e = CVec::zeros(alg.dim());
        e[i] = ONE;
        let f = GrassmannElement::from_coeffs(n, &e)?;
        v[i] = crate::superclassical::berezin_expectation(rho, &f)?;
    }
    Ok(v)
}

fn berezin_from_values(n: usize, values: &CVec) -> Result<GrassmannElement> {
    // ∫ e_I ρ picks the coefficient of the complementary monomial.
    let d = 1usize << n;
    let mut coeffs = CVec::zeros(d);
    for i in 0..d {
        let comp = (d - 1) ^ i;
        let mut e = CVec::zeros(d);
        e[i] = ONE;
        let mut k = CVec::zeros(d);
        k[comp] = ONE;
        let s = GrassmannElement::from_coeffs(n, &e)?.mul(&GrassmannElement::from_coeffs(n, &k)?)?.berezin()?;
        coeffs[comp] = values[i] / s;
    }
    GrassmannElement::from_coeffs(n, &coeffs)
}

fn grassmann_n(alg: &Algebra) -> Option<usize> {
    match alg.kind() {
        crate::algebra::AlgebraKind::Grassmann { n } => Some(*n),
        _ => None,
    }
}

impl State {
    pub fn values(&self) -> &CVec {
        &self.values
    }

    pub fn density(alg: &Algebra, rho: CMat) -> Result<State> {
        make_state(alg, Realization::DensityMatrix(rho))
    }

    pub fn functional(alg: &Algebra, values: CVec) -> Result<State> {
        make_state(alg, Realization::Functional(values))
    }

    pub fn berezin(alg: &Algebra, rho: &GrassmannElement) -> Result<State> {
        make_state(alg, Realization::BerezinDensity(rho.to_table()))
    }

    pub fn classical(alg: &Algebra, weights: Vec<f64>) -> Result<State> {
        make_state(alg, Realization::ClassicalDensity(weights))
    }

    /// Pure state `|ψ⟩⟨ψ|/⟨ψ|ψ⟩`.
    pub fn vector(alg: &Algebra, psi: &CVec) -> Result<State> {
        let n2 = psi.norm_squared();
        if n2 == 0.0 {
            return Err(Error::InvalidArgument("zero vector".into()));
        }
        State::density(alg, psi * psi.adjoint() / c(n2, 0.0))
    }

    /// Validated state with the same realization type as `like` and the given values.
    pub fn from_values_like(alg: &Algebra, like: &State, values: CVec) -> Result<State> {
        let r = match &like.realization {
            Realization::DensityMatrix(_) => Realization::DensityMatrix(density_from_values(alg, &values)?),
            Realization::Functional(_) => Realization::Functional(values),
            Realization::BerezinDensity(t) => Realization::BerezinDensity(berezin_from_values(t.n, &values)?.to_table()),
            Realization::ClassicalDensity(_) => Realization::ClassicalDensity(values.iter().map(|z| z.re).collect()),
        };
        make_state(alg, r)
    }

    pub fn expectation(&self, a: &Element) -> Result<C64> {
        if a.alg != self.alg {
            return Err(Error::AlgebraMismatch);
        }
        Ok(a.coeffs.iter().zip(self.values.iter()).map(|(x, y)| x * y).sum())
    }

    pub fn density_matrix(&self) -> Option<&CMat> {
        match &self.realization {
            Realization::DensityMatrix(r) => Some(r),
            _ => None,
        }
    }
}

/// Smallest `φ(A*A)` over `samples` random even `A`: returns the worst violation and its witness.
fn positivity_probe(alg: &Algebra, values: &CVec, samples: usize) -> (f64, Option<CVec>) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(POSITIVITY_SEED);
    let mut worst = 0.0;
    let mut witness = None;
    for _ in 0..samples {
        let a = alg.random(&mut rng, Some(Parity::Even)).coeffs;
        let aa = alg.mul_vec(&alg.star_vec(&a), &a);
        let v: C64 = aa.iter().zip(values.iter()).map(|(x, y)| x * y).sum();
        let scale = a.norm_squared().max(1e-300);
        let bad = (v.im.abs().max(-v.re)) / scale;
        if bad > worst {
            worst = bad;
            witness = Some(a);
        }
    }
    (worst, witness)
}

fn check_normalization(alg: &Algebra, values: &CVec) -> Result<()> {
    let one: C64 = alg.unit_coeffs().iter().zip(values.iter()).map(|(x, y)| x * y).sum();
    if (one - ONE).norm() > NORMALIZATION_TOL {
        return Err(invalid(format!("φ(I) = {one} ≠ 1"), Some(alg.unit_coeffs())));
    }
    Ok(())
}

fn odd_values_vanish(alg: &Algebra, values: &CVec) -> Result<()> {
    for i in 0..alg.dim() {
        if alg.basis_parity(i).is_odd() && values[i].norm() > NORMALIZATION_TOL {
            return Err(invalid(format!("φ({}) = {} on an odd element", alg.labels()[i], values[i]), Some(&alg.basis(i).coeffs)));
        }
    }
    Ok(())
}

/// Checks PSD and trace of a density matrix and decides purity by rank.
fn check_density(rho: &CMat) -> Result<bool> {
    if rho.nrows() != rho.ncols() {
        return Err(invalid("density matrix must be square", None));
    }
    let scale = linalg::max_abs_mat(rho).max(1.0);
    if !linalg::is_hermitian(rho, 1e-12 * scale) {
        return Err(invalid("density matrix is not Hermitian", None));
    }
    let (vals, vecs) = herm_eig(rho);
    if vals[0] < -POSITIVITY_TOL {
        let v = vecs.column(0).into_owned();
        return Err(invalid(format!("negative eigenvalue {:e}", vals[0]), Some(&v)));
    }
    let top = vals.last().copied().unwrap_or(0.0).max(1e-300);
    Ok(vals.iter().filter(|&&l| l > 1e-10 * top).count() == 1)
}

/// Validates a realization against `alg` and computes the values `φ(e_i)`.
pub fn make_state(alg: &Algebra, realization: Realization) -> Result<State> {
    let (values, pure, realization) = match realization {
        Realization::DensityMatrix(rho) => {
            let r = alg.realization().ok_or(Error::NoMatrixRealization)?;
            if rho.nrows() != r.size() || rho.ncols() != r.size() {
                return Err(invalid(format!("density matrix must be {0}x{0}", r.size()), None));
            }
            let pure = check_density(&rho)?;
            let values = density_values(alg, &rho)?;
            odd_values_vanish(alg, &values)?;
            (values, Some(pure), Realization::DensityMatrix(rho))
        }
        Realization::Functional(mut values) => {
            if values.len() != alg.dim() {
                return Err(invalid(format!("functional needs {} values", alg.dim()), None));
            }
            for i in 0..alg.dim() {
                if alg.basis_parity(i).is_odd() {
                    values[i] = ZERO;
                }
            }
            let pure = match alg.realization() {
                Some(_) => Some(check_density(&density_from_values(alg, &values)?)?),
                None => None,
            };
            (values, pure, Realization::Functional(CVec::zeros(0)))
        }
        Realization::BerezinDensity(t) => {
            let n = grassmann_n(alg).ok_or(Error::AlgebraMismatch)?;
            let rho = GrassmannElement::from_table(&t)?;
            if rho.dims() != (0, n) {
                return Err(Error::AlgebraMismatch);
            }
            (berezin_values(alg, n, &rho)?, None, Realization::BerezinDensity(t))
        }
        Realization::ClassicalDensity(w) => {
            if w.len() != alg.dim() || !alg.is_supercommutative(1e-12) || alg.realization().is_none() {
                return Err(Error::AlgebraMismatch);
            }
            if let Some(bad) = w.iter().position(|&x| x < -POSITIVITY_TOL || !x.is_finite()) {
                return Err(invalid(format!("negative weight at point {}", bad + 1), Some(&alg.basis(bad).coeffs)));
            }
            let values = CVec::from_iterator(w.len(), w.iter().map(|&x| c(x, 0.0)));
            let pure = w.iter().filter(|&&x| x > POSITIVITY_TOL).count() == 1;
            (values, Some(pure), Realization::ClassicalDensity(w))
        }
    };
    check_normalization(alg, &values)?;
    if alg.realization().is_none() {
        let (worst, witness) = positivity_probe(alg, &values, POSITIVITY_SAMPLES);
        if worst > POSITIVITY_TOL {
            return Err(invalid(format!("φ(A*A) fails positivity by {worst:e}"), witness.as_ref()));
        }
    }
    let realization = match realization {
        Realization::Functional(_) => Realization::Functional(values.clone()),
        other => other,
    };
    Ok(State { alg: alg.id(), realization, values, pure })
}

/// `Σ p_i φ_i` as a functional.
pub fn mixture(alg: &Algebra, states: &[State], weights: &[f64]) -> Result<State> {
    if states.len() != weights.len() || states.is_empty() {
        return Err(Error::InvalidArgument("one weight per state".into()));
    }
    let mut v = CVec::zeros(alg.dim());
    for (s, &w) in states.iter().zip(weights) {
        if s.alg != alg.id() {
            return Err(Error::AlgebraMismatch);
        }
        v += &s.values * c(w, 0.0);
    }
    State::from_values_like(alg, &states[0], v)
}

/// Transpose action `⟨Φ̃(φ), A⟩ = ⟨φ, Φ(A)⟩`.
pub fn transform_state(alg: &Algebra, iso: &Isomorphism, phi: &State) -> Result<State> {
    if iso.from != alg.id() || iso.to != alg.id() || phi.alg != alg.id() {
        return Err(Error::AlgebraMismatch);
    }
    let values = iso.map.transpose() * &phi.values;
    State::from_values_like(alg, phi, values)
}

/// First-order transform `φ + ε φ({G, ·})`; returned as an unvalidated functional.
pub fn transform_state_infinitesimal(ss: &SymplecticStructure, g: &Element, eps: f64, phi: &State) -> Result<State> {
    let alg = ss.alg();
    if phi.alg != alg.id() {
        return Err(Error::AlgebraMismatch);
    }
    let l = ss.hamiltonian_op(&g.coeffs)?;
    let values = &phi.values + l.transpose() * &phi.values * c(eps, 0.0);
    Ok(State { alg: alg.id(), realization: Realization::Functional(values.clone()), values, pure: None })
}

pub fn transition_probability(a: &State, b: &State) -> Result<f64> {
    if a.alg != b.alg {
        return Err(Error::AlgebraMismatch);
    }
    match (&a.realization, &b.realization) {
        (Realization::DensityMatrix(r1), Realization::DensityMatrix(r2)) => Ok((r1 * r2).trace().re),
        _ => Err(Error::NoMatrixRealization),
    }
}

/// Positive observable-valued measure on a finite outcome set, given by its singleton effects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Pobvm {
    pub alg: AlgebraId,
    pub labels: Vec<String>,
    pub effects: Vec<CVec>,
}

impl Pobvm {
    pub fn new(alg: &Algebra, labels: Vec<String>, effects: Vec<Element>) -> Result<Pobvm> {
        if labels.len() != effects.len() || labels.is_empty() {
            return Err(Error::InvalidArgument("one effect per outcome".into()));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(Error::InvalidArgument("outcome labels must be distinct".into()));
        }
        let mut total = CVec::zeros(alg.dim());
        for (l, e) in labels.iter().zip(&effects) {
            alg.owns(e)?;
            if alg.realization().is_some() {
                let m = alg.to_matrix(&e.coeffs)?;
                if !linalg::is_hermitian(&m, 1e-12) || herm_eig(&m).0[0] < -POSITIVITY_TOL {
                    return Err(Error::InvalidArgument(format!("effect {l} is not positive")));
                }
            }
            total += &e.coeffs;
        }
        let r = linalg::dist(&total, alg.unit_coeffs());
        if r > 1e-10 {
            return Err(Error::InvalidArgument(format!("effects do not sum to I (residual {r:e})")));
        }
        Ok(Pobvm { alg: alg.id(), labels, effects: effects.into_iter().map(|e| e.coeffs).collect() })
    }

    /// Projective measurement onto the eigenspaces of a self-adjoint matrix element.
    pub fn spectral(alg: &Algebra, a: &Element) -> Result<Pobvm> {
        let m = alg.to_matrix(&a.coeffs)?;
        if !linalg::is_hermitian(&m, 1e-12 * linalg::max_abs_mat(&m).max(1.0)) {
            return Err(Error::InvalidArgument("observable is not self-adjoint".into()));
        }
        let (vals, vecs) = herm_eig(&m);
        let mut groups: Vec<(f64, CMat)> = Vec::new();
        for (k, &l) in vals.iter().enumerate() {
            let v = vecs.column(k).into_owned();
            let p = &v * v.adjoint();
            match groups.last_mut() {
                Some((l0, proj)) if (l - *l0).abs() <= 1e-9 * l.abs().max(1.0) => *proj += p,
                _ => groups.push((l, p)),
            }
        }
        let labels = groups.iter().map(|(l, _)| format!("{l:.6}")).collect();
        let effects = groups.iter().map(|(_, p)| alg.from_matrix(p).map(|v| alg.element(v))).collect::<Result<_>>()?;
        Pobvm::new(alg, labels, effects)
    }

    /// `ν(E)` for a subset of outcome labels.
    pub fn event(&self, subset: &[&str]) -> Result<CVec> {
        let d = self.effects[0].len();
        let mut v = CVec::zeros(d);
        let mut seen = Vec::new();
        for s in subset {
            let k = self
                .labels
                .iter()
                .position(|l| l == s)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown outcome {s}")))?;
            if !seen.contains(&k) {
                seen.push(k);
                v += &self.effects[k];
            }
        }
        Ok(v)
    }

    /// `p_φ(E) = φ(ν(E))`.
    pub fn probability(&self, subset: &[&str], phi: &State) -> Result<f64> {
        if phi.alg != self.alg {
            return Err(Error::AlgebraMismatch);
        }
        let v = self.event(subset)?;
        Ok(v.iter().zip(phi.values.iter()).map(|(x, y)| x * y).sum::<C64>().re)
    }
}

// ---- compatible completeness ----

#[derive(Clone, Debug)]
pub enum FamilySpec<T> {
    Full,
    List(Vec<T>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CcMode {
    ConstructiveRandomized,
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum CcWitness {
    /// Two distinct observables no listed state tells apart.
    Observables { a: Vec<[f64; 2]>, b: Vec<[f64; 2]> },
    /// Two distinct states no listed observable tells apart.
    States { a: Vec<[f64; 2]>, b: Vec<[f64; 2]> },
    /// Self-adjoint direction invisible to the listed observables when no pure pair was found.
    Direction { k: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CcVerdict {
    pub holds: bool,
    pub mode: CcMode,
    /// 1: states separate observables; 2: observables separate states.
    pub failed_clause: Option<u8>,
    pub witness: Option<CcWitness>,
    pub detail: String,
}

fn pairs(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// Real basis of the even self-adjoint elements, built from `(e_i + e_i*)/2` and `i(e_i - e_i*)/2`.
pub fn observable_basis(alg: &Algebra) -> Vec<CVec> {
    let d = alg.dim();
    let mut basis: Vec<CVec> = Vec::new();
    let mut real_rows: Vec<Vec<f64>> = Vec::new();
    let realify = |v: &CVec| -> Vec<f64> { v.iter().flat_map(|z| [z.re, z.im]).collect() };
    for i in 0..d {
        if alg.basis_parity(i).is_odd() {
            continue;
        }
        let e = alg.basis(i).coeffs;
        let s = alg.star_vec(&e);
        for cand in [(&e + &s) * c(0.5, 0.0), (&e - &s) * c(0.0, 0.5)] {
            if max_abs(cand.as_slice()) < 1e-12 {
                continue;
            }
            let mut rows = real_rows.clone();
            rows.push(realify(&cand));
            let m = nalgebra::DMatrix::from_fn(rows.len(), 2 * d, |r, k| rows[r][k]);
            let sv = m.svd(false, false).singular_values;
            let smax = sv.max();
            if sv.iter().filter(|&&x| x > 1e-10 * smax).count() == rows.len() {
                real_rows = rows;
                basis.push(cand);
            }
        }
    }
    basis
}

fn eval(values: &CVec, a: &CVec) -> C64 {
    a.iter().zip(values.iter()).map(|(x, y)| x * y).sum()
}

/// Unit vectors used by the polarization argument, restricted to homogeneous blocks.
fn polarization_states(alg: &Algebra) -> Result<Vec<CVec>> {
    let r = alg.realization().ok_or(Error::NoMatrixRealization)?;
    let n = r.size();
    let even = |k: usize| r.grading[(k, k)].re > 0.0;
    let mut out = Vec::new();
    let s = 1.0 / 2f64.sqrt();
    for j in 0..n {
        let mut v = CVec::zeros(n);
        v[j] = ONE;
        out.push(v);
        for k in j + 1..n {
            if even(j) != even(k) {
                continue;
            }
            let mut a = CVec::zeros(n);
            a[j] = c(s, 0.0);
            a[k] = c(s, 0.0);
            out.push(a.clone());
            a[k] = c(0.0, s);
            out.push(a);
        }
    }
    Ok(out)
}

fn random_block_vector<R: Rng + ?Sized>(alg: &Algebra, rng: &mut R) -> Result<CVec> {
    let r = alg.realization().ok_or(Error::NoMatrixRealization)?;
    let n = r.size();
    let mut v = linalg::random_cvec(rng, n);
    let block = rng.gen_bool(0.5);
    let has_odd = (0..n).any(|k| r.grading[(k, k)].re < 0.0);
    for k in 0..n {
        let even = r.grading[(k, k)].re > 0.0;
        if has_odd && even != block {
            v[k] = ZERO;
        }
    }
    if v.norm() == 0.0 {
        v[0] = ONE;
    }
    Ok(v.normalize())
}

/// Real vector in the null space of a real matrix, from a complex null vector of unknown phase.
fn real_null_column(null: &CMat, col: usize) -> Vec<f64> {
    let v = null.column(col);
    let pivot = v.iter().fold(ZERO, |b, z| if z.norm() > b.norm() { *z } else { b });
    let phase = if pivot.norm() > 0.0 { pivot / pivot.norm() } else { ONE };
    v.iter().map(|z| (z / phase).re).collect()
}

fn real_rank(rows: &[Vec<f64>], cols: usize) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = nalgebra::DMatrix::from_fn(rows.len(), cols, |r, k| rows[r][k]);
    let sv = m.svd(false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&x| x > 1e-10 * smax).count()
}

/// Clause (i) against explicit states: find an observable `K ≠ 0` with `φ(K) = 0` for all listed states.
fn clause_one_list(alg: &Algebra, obs: &[CVec], states: &[CVec]) -> Option<CcWitness> {
    let unit = alg.unit_coeffs().clone();
    let null_under = |k: &CVec| states.iter().all(|v| eval(v, k).norm() <= 1e-10);
    let proportional_to_unit = |k: &CVec| {
        let z = eval(&unit, k) / unit.norm_squared();
        linalg::dist(k, &(&unit * z)) < 1e-12
    };
    for k in obs {
        if null_under(k) && !proportional_to_unit(k) {
            return Some(CcWitness::Observables { a: pairs(&(&unit + k)), b: pairs(&(&unit + k * c(2.0, 0.0))) });
        }
    }
    // Generic kernel element of the real map K -> (φ_s(K))_s.
    let m = obs.len();
    let rows: Vec<Vec<f64>> = states.iter().map(|v| obs.iter().map(|k| eval(v, k).re).collect()).collect();
    if real_rank(&rows, m) >= m {
        return None;
    }
    let a = CMat::from_fn(rows.len(), m, |r, k| c(rows[r][k], 0.0));
    let null = linalg::null_space(&a, 1e-10);
    let coeffs = real_null_column(&null, 0);
    let mut k = CVec::zeros(alg.dim());
    for (j, o) in obs.iter().enumerate() {
        k += o * c(coeffs[j], 0.0);
    }
    Some(CcWitness::Observables { a: pairs(&(&unit + &k)), b: pairs(&(&unit + &k * c(2.0, 0.0))) })
}

/// Clause (ii) against explicit observables and full pure states (matrix case).
fn clause_two_full_states(alg: &Algebra, obs: &[CVec]) -> Result<Option<CcWitness>> {
    let r = alg.realization().ok_or(Error::NoMatrixRealization)?;
    let n = r.size();
    let full = observable_basis(alg);
    let realify = |v: &CVec| -> Vec<f64> { v.iter().flat_map(|z| [z.re, z.im]).collect() };
    let mut rows: Vec<Vec<f64>> = obs.iter().map(realify).collect();
    rows.push(realify(alg.unit_coeffs()));
    let span = real_rank(&rows, 2 * alg.dim());
    if span >= full.len() {
        return Ok(None);
    }
    // K ⟂ span(obs ∪ I) in the Hilbert-Schmidt product, then look for a ±λ eigenpair.
    let mats: Vec<CMat> = rows
        .iter()
        .map(|row| {
            let v = CVec::from_iterator(alg.dim(), row.chunks(2).map(|p| c(p[0], p[1])));
            alg.to_matrix(&v)
        })
        .collect::<Result<_>>()?;
    let fm: Vec<CMat> = full.iter().map(|v| alg.to_matrix(v)).collect::<Result<_>>()?;
    let g = CMat::from_fn(mats.len(), fm.len(), |i, j| c((mats[i].adjoint() * &fm[j]).trace().re, 0.0));
    let null = linalg::null_space(&g, 1e-10);
    let direction = |col: usize| {
        let coeffs = real_null_column(&null, col);
        let mut k = CMat::zeros(n, n);
        let mut dir = CVec::zeros(alg.dim());
        for (j, f) in fm.iter().enumerate() {
            k += f * c(coeffs[j], 0.0);
            dir += &full[j] * c(coeffs[j], 0.0);
        }
        (k, dir)
    };
    for col in 0..null.ncols() {
        let (k, _) = direction(col);
        let (vals, vecs) = herm_eig(&k);
        let top = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let nz: Vec<usize> = (0..n).filter(|&i| vals[i].abs() > 1e-9 * top).collect();
        if nz.len() == 2 && (vals[nz[0]] + vals[nz[1]]).abs() < 1e-9 * top {
            let (u, v) = (vecs.column(nz[0]).into_owned(), vecs.column(nz[1]).into_owned());
            return Ok(Some(CcWitness::States { a: pairs(&u), b: pairs(&v) }));
        }
    }
    let (_, dir) = direction(0);
    Ok(Some(CcWitness::Direction { k: pairs(&dir) }))
}

/// Compatible completeness: (i) pure states separate observables, (ii) observables separate pure states.
pub fn cc_check<R: Rng + ?Sized>(
    alg: &Algebra,
    observables: &FamilySpec<Element>,
    pure_states: &FamilySpec<State>,
    rng: &mut R,
) -> Result<CcVerdict> {
    let full_obs = observable_basis(alg);
    let obs: Vec<CVec> = match observables {
        FamilySpec::Full => full_obs.clone(),
        FamilySpec::List(l) => {
            for a in l {
                alg.owns(a)?;
            }
            l.iter().map(|a| a.coeffs.clone()).collect()
        }
    };
    let state_values: Vec<CVec> = match pure_states {
        FamilySpec::Full => {
            polarization_states(alg)?.iter().map(|v| State::vector(alg, v).map(|s| s.values)).collect::<Result<_>>()?
        }
        FamilySpec::List(l) => {
            for s in l {
                if s.alg != alg.id() {
                    return Err(Error::AlgebraMismatch);
                }
            }
            l.iter().map(|s| s.values.clone()).collect()
        }
    };
    let mode = match (observables, pure_states) {
        (FamilySpec::List(_), FamilySpec::List(_)) => CcMode::Exhaustive,
        _ => CcMode::ConstructiveRandomized,
    };
    let fail = |clause: u8, witness: CcWitness, detail: String| CcVerdict {
        holds: false,
        mode,
        failed_clause: Some(clause),
        witness: Some(witness),
        detail,
    };

    // Clause (i).
    match observables {
        FamilySpec::Full => {
            if let Some(w) = clause_one_list(alg, &full_obs, &state_values) {
                return Ok(fail(1, w, "listed states do not separate all observables".into()));
            }
        }
        FamilySpec::List(_) => {
            for i in 0..obs.len() {
                for j in i + 1..obs.len() {
                    let diff = &obs[i] - &obs[j];
                    if max_abs(diff.as_slice()) <= 1e-12 {
                        continue;
                    }
                    let separated = match pure_states {
                        FamilySpec::List(_) => state_values.iter().any(|v| eval(v, &diff).norm() > 1e-10),
                        // polarization: some unit vector sees any nonzero operator
                        FamilySpec::Full => linalg::max_abs_mat(&alg.to_matrix(&diff)?) > 1e-12,
                    };
                    if !separated {
                        return Ok(fail(
                            1,
                            CcWitness::Observables { a: pairs(&obs[i]), b: pairs(&obs[j]) },
                            format!("observables {i} and {j} are not separated"),
                        ));
                    }
                }
            }
        }
    }

    // Clause (ii).
    match (observables, pure_states) {
        (_, FamilySpec::List(_)) => {
            for i in 0..state_values.len() {
                for j in i + 1..state_values.len() {
                    let diff = &state_values[i] - &state_values[j];
                    if max_abs(diff.as_slice()) <= 1e-12 {
                        continue;
                    }
                    if !obs.iter().any(|k| eval(&diff, k).norm() > 1e-10) {
                        return Ok(fail(
                            2,
                            CcWitness::States { a: pairs(&state_values[i]), b: pairs(&state_values[j]) },
                            format!("states {i} and {j} are not separated"),
                        ));
                    }
                }
            }
        }
        (FamilySpec::List(_), FamilySpec::Full) => {
            if let Some(w) = clause_two_full_states(alg, &obs)? {
                return Ok(fail(2, w, "listed observables do not separate all pure states".into()));
            }
        }
        (FamilySpec::Full, FamilySpec::Full) => {}
    }

    // Randomized confirmation for infinite families.
    let mut detail = match mode {
        CcMode::Exhaustive => "all listed pairs separated".to_string(),
        CcMode::ConstructiveRandomized => "constructive argument".to_string(),
    };
    if mode == CcMode::ConstructiveRandomized && alg.realization().is_some() {
        let trials = 100;
        for _ in 0..trials {
            let u = random_block_vector(alg, rng)?;
            let v = random_block_vector(alg, rng)?;
            let (su, sv) = (State::vector(alg, &u)?, State::vector(alg, &v)?);
            let diff = &su.values - &sv.values;
            if max_abs(diff.as_slice()) > 1e-9 && !obs.iter().any(|k| eval(&diff, k).norm() > 1e-10) {
                return Ok(fail(2, CcWitness::States { a: pairs(&u), b: pairs(&v) }, "random pure states not separated".into()));
            }
        }
        detail.push_str(&format!(" plus {trials} random pure-state pairs"));
    }
    Ok(CcVerdict { holds: true, mode, failed_clause: None, witness: None, detail })
}

// ---- GNS ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GnsResult {
    pub dim: usize,
    /// `π(e_i)` for every basis element.
    pub operators: Vec<CMat>,
    pub cyclic: CVec,
    pub irreducible: bool,
    pub commutant_dim: usize,
    pub null_dim: usize,
    pub product_residual: f64,
    pub involution_residual: f64,
}

impl GnsResult {
    pub fn represent(&self, a: &CVec) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (k, op) in self.operators.iter().enumerate() {
            if a[k] != ZERO {
                m += op * a[k];
            }
        }
        m
    }

    /// `⟨χ, π(A) χ⟩`.
    pub fn vector_state(&self, a: &CVec) -> C64 {
        self.cyclic.dotc(&(self.represent(a) * &self.cyclic))
    }
}

/// Null-space dimension of `T ↦ [π_k, T]` over all `k`.
pub fn commutant_dim(ops: &[CMat]) -> usize {
    let r = match ops.first() {
        Some(o) => o.nrows(),
        None => return 0,
    };
    let id = CMat::identity(r, r);
    let mut stack = CMat::zeros(ops.len() * r * r, r * r);
    for (k, p) in ops.iter().enumerate() {
        // vec(P T - T P) = (I ⊗ P - P^T ⊗ I) vec(T) for column-major vec.
        let block = linalg::kron(&id, p) - linalg::kron(&p.transpose(), &id);
        stack.view_mut((k * r * r, 0), (r * r, r * r)).copy_from(&block);
    }
    linalg::null_space(&stack, 1e-10).ncols()
}

pub fn gns(alg: &Algebra, phi: &State) -> Result<GnsResult> {
    if phi.alg != alg.id() {
        return Err(Error::AlgebraMismatch);
    }
    let d = alg.dim();
    let stars: Vec<CVec> = (0..d).map(|i| alg.star_vec(&alg.basis(i).coeffs)).collect();
    let gram = CMat::from_fn(d, d, |i, j| eval(&phi.values, &alg.mul_vec(&stars[i], &alg.basis(j).coeffs)));
    if !linalg::is_hermitian(&gram, 1e-10 * linalg::max_abs_mat(&gram).max(1.0)) {
        return Err(invalid("Gram matrix is not Hermitian", None));
    }
    let (vals, vecs) = herm_eig(&gram);
    let top = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if vals[0] < -1e-10 * top.max(1.0) {
        return Err(invalid(format!("Gram matrix has negative eigenvalue {:e}", vals[0]), Some(&vecs.column(0).into_owned())));
    }
    let keep: Vec<usize> = (0..d).filter(|&k| vals[k] > 1e-10 * top).collect();
    let r = keep.len();
    let vr = CMat::from_fn(d, r, |i, a| vecs[(i, keep[a])]);
    let sq = CVec::from_iterator(r, keep.iter().map(|&k| c(vals[k].sqrt(), 0.0)));
    // π(e_k) = Λ^½ V_r† L_k V_r Λ^-½
    let operators: Vec<CMat> = (0..d)
        .map(|k| {
            let lk = alg.left_op(&alg.basis(k).coeffs);
            let mut m = vr.adjoint() * lk * &vr;
            for a in 0..r {
                for b in 0..r {
                    m[(a, b)] *= sq[a] / sq[b];
                }
            }
            m
        })
        .collect();
    let cv = vr.adjoint() * &gram * alg.unit_coeffs();
    let cyclic = CVec::from_iterator(r, cv.iter().zip(sq.iter()).map(|(x, s)| x / s));
    let mut res = GnsResult {
        dim: r,
        operators,
        cyclic,
        irreducible: false,
        commutant_dim: 0,
        null_dim: d - r,
        product_residual: 0.0,
        involution_residual: 0.0,
    };
    let mut pr: f64 = 0.0;
    let mut ir: f64 = 0.0;
    for i in 0..d {
        ir = ir.max(linalg::max_abs_mat(&(res.represent(&stars[i]) - res.operators[i].adjoint())));
        for j in 0..d {
            let prod = alg.mul_vec(&alg.basis(i).coeffs, &alg.basis(j).coeffs);
            pr = pr.max(linalg::max_abs_mat(&(res.represent(&prod) - &res.operators[i] * &res.operators[j])));
        }
    }
    res.product_residual = pr;
    res.involution_residual = ir;
    res.commutant_dim = commutant_dim(&res.operators);
    res.irreducible = res.commutant_dim == 1;
    Ok(res)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FaithfulnessReport {
    pub states: usize,
    pub total_dim: usize,
    /// Smallest operator norm of `⊕π_j(e_i)` over basis elements.
    pub min_basis_norm: f64,
    pub faithful: bool,
}

/// Pure states `φ_i` with `φ_i(e_i* e_i) ≠ 0`, one per basis element (matrix realization).
pub fn escalation_states(alg: &Algebra) -> Result<Vec<State>> {
    (0..alg.dim())
        .map(|i| {
            let e = alg.basis(i).coeffs;
            let m = alg.to_matrix(&alg.mul_vec(&alg.star_vec(&e), &e))?;
            let h = (&m + m.adjoint()) * c(0.5, 0.0);
            let (vals, vecs) = herm_eig(&h);
            let k = (0..vals.len()).fold(0, |b, k| if vals[k].abs() > vals[b].abs() { k } else { b });
            State::vector(alg, &vecs.column(k).into_owned())
        })
        .collect()
}

/// GNS representations of the given states summed directly; checks every basis element is represented faithfully.
pub fn faithful_direct_sum(alg: &Algebra, states: &[State]) -> Result<FaithfulnessReport> {
    let reps: Vec<GnsResult> = states.iter().map(|s| gns(alg, s)).collect::<Result<_>>()?;
    let mut min_norm = f64::INFINITY;
    for i in 0..alg.dim() {
        let norm2: f64 = reps.iter().map(|r| r.operators[i].norm_squared()).sum();
        min_norm = min_norm.min(norm2.sqrt());
    }
    Ok(FaithfulnessReport {
        states: states.len(),
        total_dim: reps.iter().map(|r| r.dim).sum(),
        min_basis_norm: min_norm,
        faithful: min_norm >= 1e-10,
    })
}
