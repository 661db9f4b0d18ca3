//! Measurement with a classically described apparatus: pointer observables on
//! phase-space domains, the interference functional and its suppression, the
//! resulting reduced state, and the Stern-Gerlach numbers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::Algebra;
use crate::coupling::{CoupledSystem, ProductPoisson};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, C64, I, ZERO};
use crate::moyal::{moyal_bracket, star, PhasePolynomial};
use crate::states::State;
use crate::symplectic::SymplecticStructure;

const NORM_TOL: f64 = 1e-12;
const PROJECTOR_TOL: f64 = 1e-10;

/// Axis-aligned box in apparatus phase space; infinite bounds allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub bounds: Vec<(f64, f64)>,
}

impl Domain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Domain> {
        if bounds.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidArgument("domain bounds must satisfy lo < hi".into()));
        }
        Ok(Domain { bounds })
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.bounds.len() && self.bounds.iter().zip(point).all(|((lo, hi), &x)| *lo <= x && x < *hi)
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| hi - lo).product()
    }

    fn overlap(&self, o: &Domain) -> f64 {
        self.bounds
            .iter()
            .zip(&o.bounds)
            .map(|((a, b), (c, d))| (b.min(*d) - a.max(*c)).max(0.0))
            .product()
    }
}

/// `J = Σ bⱼ Pⱼ` with classical counterpart `J^cl = Σ b′ⱼ χ_{Dⱼ}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointerModel {
    pub labels: Vec<String>,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub domains: Vec<Domain>,
}

fn distinct(v: &[f64]) -> bool {
    v.iter().enumerate().all(|(j, a)| v[..j].iter().all(|b| a != b))
}

impl PointerModel {
    pub fn new(labels: Vec<String>, values: Vec<f64>, weights: Vec<f64>, domains: Vec<Domain>) -> Result<PointerModel> {
        let n = labels.len();
        if values.len() != n || weights.len() != n || domains.len() != n || n == 0 {
            return Err(Error::InvalidArgument("pointer labels, values, weights and domains must have equal nonzero length".into()));
        }
        if !distinct(&values) || !distinct(&weights) {
            return Err(Error::InvalidArgument("pointer values must be pairwise distinct".into()));
        }
        let dim = domains[0].bounds.len();
        if domains.iter().any(|d| d.bounds.len() != dim) {
            return Err(Error::InvalidArgument("domains live in different phase spaces".into()));
        }
        for j in 0..n {
            for k in 0..j {
                if domains[j].overlap(&domains[k]) > 0.0 {
                    return Err(Error::InvalidArgument(format!("domains {k} and {j} overlap")));
                }
            }
        }
        Ok(PointerModel { labels, values, weights, domains })
    }

    /// Domain index of a phase point, `None` for the ready domain.
    pub fn locate(&self, point: &[f64]) -> Option<usize> {
        self.domains.iter().position(|d| d.contains(point))
    }

    /// `J^cl(point)`.
    pub fn classical(&self, point: &[f64]) -> f64 {
        self.locate(point).map_or(0.0, |j| self.weights[j])
    }

    /// `∫ J^cl ρⱼ^cl` with `ρⱼ^cl = χ_{Dⱼ}/V(Dⱼ)`.
    pub fn pointer_expectation(&self, j: usize) -> Result<f64> {
        let d = self.domains.get(j).ok_or_else(|| Error::InvalidArgument(format!("no pointer domain {j}")))?;
        let v = d.volume();
        if !v.is_finite() {
            return Err(Error::InvalidArgument("uniform density needs a finite domain".into()));
        }
        Ok(self.domains.iter().zip(&self.weights).map(|(dk, w)| w * d.overlap(dk)).sum::<f64>() / v)
    }

    /// `Σ bⱼ Pⱼ` for orthogonal projectors of a matrix apparatus.
    pub fn quantum_form(&self, projectors: &[CMat]) -> Result<CMat> {
        check_projectors(projectors)?;
        if projectors.len() != self.values.len() {
            return Err(Error::InvalidArgument("one projector per pointer position".into()));
        }
        let n = projectors[0].nrows();
        Ok(projectors.iter().zip(&self.values).fold(CMat::zeros(n, n), |acc, (p, &b)| acc + p * c(b, 0.0)))
    }
}

fn check_projectors(ps: &[CMat]) -> Result<()> {
    let n = ps.first().map(|p| p.nrows()).ok_or_else(|| Error::InvalidArgument("no projectors".into()))?;
    for (j, p) in ps.iter().enumerate() {
        if p.nrows() != n || p.ncols() != n {
            return Err(Error::InvalidArgument("projector sizes differ".into()));
        }
        let r = linalg::max_abs_mat(&(p * p - p)).max(linalg::max_abs_mat(&(p - p.adjoint())));
        if r > PROJECTOR_TOL {
            return Err(Error::InvalidArgument(format!("P{j} is not an orthogonal projector ({r:e})")));
        }
        for q in &ps[..j] {
            if linalg::max_abs_mat(&(p * q)) > PROJECTOR_TOL {
                return Err(Error::InvalidArgument("pointer projectors are not mutually orthogonal".into()));
            }
        }
    }
    Ok(())
}

/// Ready-state density over the dimensionless variable `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Profile {
    /// Uniform on `[0, 1]`.
    Uniform,
    /// Piecewise-linear density through the samples `(s, ρ)`.
    Sampled { s: Vec<f64>, rho: Vec<f64> },
}

impl Profile {
    fn validate(&self) -> Result<()> {
        let Profile::Sampled { s, rho } = self else { return Ok(()) };
        if s.len() != rho.len() || s.len() < 2 {
            return Err(Error::InvalidArgument("profile needs at least two (s, ρ) samples".into()));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) || rho.iter().any(|&r| r < 0.0 || !r.is_finite()) {
            return Err(Error::InvalidArgument("profile samples must be increasing in s with ρ ≥ 0".into()));
        }
        let mass: f64 = s.windows(2).zip(rho.windows(2)).map(|(x, r)| 0.5 * (x[1] - x[0]) * (r[0] + r[1])).sum();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!("profile integrates to {mass}, not 1")));
        }
        Ok(())
    }

    /// `|∫ ρ(s) e^{iκs} ds|`; exact for both profile kinds (segment-wise for sampled ones).
    pub fn oscillation(&self, kappa: f64) -> f64 {
        match self {
            Profile::Uniform if kappa == 0.0 => 1.0,
            Profile::Uniform => 2.0 * (kappa / 2.0).sin().abs() / kappa.abs(),
            Profile::Sampled { s, rho } => s
                .windows(2)
                .zip(rho.windows(2))
                .map(|(x, r)| linear_segment(x[0], x[1], r[0], r[1], kappa))
                .sum::<C64>()
                .norm(),
        }
    }
}

/// `∫_a^b (linear ρ) e^{iκs} ds` in closed form.
fn linear_segment(a: f64, b: f64, ra: f64, rb: f64, kappa: f64) -> C64 {
    let h = b - a;
    let theta = kappa * h;
    if theta.abs() < 1e-4 {
        // series in θ keeps the small-κ limit accurate
        let mid = 0.5 * (ra + rb);
        let slope = rb - ra;
        let base = C64::from_polar(h, kappa * a);
        let t = c(0.0, theta);
        return base * (mid + t * (mid / 2.0 + slope / 12.0) + t * t * (mid / 6.0 + slope / 24.0));
    }
    // ∫_0^h (ra + (rb−ra) u/h) e^{iκ(a+u)} du
    let e = C64::from_polar(1.0, theta);
    let ik = c(0.0, kappa);
    let i0 = (e - 1.0) / ik;
    let i1 = (e * h) / ik - (e - 1.0) / (ik * ik);
    C64::from_polar(1.0, kappa * a) * (i0 * ra + i1 * ((rb - ra) / h))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasurementModel {
    pub eigenvalues: Vec<f64>,
    pub amplitudes: Vec<[f64; 2]>,
    pub k_mean: f64,
    pub tau: f64,
    pub hbar: f64,
    pub profile: Profile,
}

impl MeasurementModel {
    pub fn new(eigenvalues: Vec<f64>, amplitudes: Vec<C64>, k_mean: f64, tau: f64, hbar: f64, profile: Profile) -> Result<MeasurementModel> {
        if eigenvalues.is_empty() || eigenvalues.len() != amplitudes.len() {
            return Err(Error::InvalidArgument("one amplitude per eigenvalue".into()));
        }
        if !distinct(&eigenvalues) {
            return Err(Error::InvalidArgument("measured eigenvalues must be nondegenerate".into()));
        }
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!("amplitudes have Σ|c|² = {norm}")));
        }
        if !(tau > 0.0) || !(hbar > 0.0) {
            return Err(Error::InvalidArgument("τ and ħ must be positive".into()));
        }
        if k_mean == 0.0 || !k_mean.is_finite() {
            return Err(Error::DegenerateModel("apparatus coupling mean ⟨K⟩₀ vanishes".into()));
        }
        profile.validate()?;
        Ok(MeasurementModel { eigenvalues, amplitudes: amplitudes.iter().map(|z| [z.re, z.im]).collect(), k_mean, tau, hbar, profile })
    }

    pub fn amplitude(&self, j: usize) -> C64 {
        c(self.amplitudes[j][0], self.amplitudes[j][1])
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `ηⱼₖ = (λₖ − λⱼ)⟨K⟩₀τ`.
    pub fn eta(&self, j: usize, k: usize) -> f64 {
        (self.eigenvalues[k] - self.eigenvalues[j]) * self.k_mean * self.tau
    }

    pub fn kappa(&self, j: usize, k: usize) -> f64 {
        self.eta(j, k) / self.hbar
    }

    /// `∫ ρ₀(s) e^{iηⱼₖ s/ħ} ds` with its phase, used for the decohered state.
    fn phase_integral(&self, j: usize, k: usize) -> C64 {
        let kappa = self.kappa(j, k);
        match &self.profile {
            Profile::Uniform if kappa == 0.0 => c(1.0, 0.0),
            Profile::Uniform => (C64::from_polar(1.0, kappa) - 1.0) / c(0.0, kappa),
            Profile::Sampled { s, rho } => {
                s.windows(2).zip(rho.windows(2)).map(|(x, r)| linear_segment(x[0], x[1], r[0], r[1], kappa)).sum()
            }
        }
    }
}

pub fn interference_magnitude(mm: &MeasurementModel, j: usize, k: usize) -> Result<f64> {
    if j == k {
        return Err(Error::InvalidArgument("interference needs j ≠ k".into()));
    }
    if j >= mm.len() || k >= mm.len() {
        return Err(Error::InvalidArgument("outcome index out of range".into()));
    }
    Ok(mm.profile.oscillation(mm.kappa(j, k)))
}

/// Uniform-profile bound `min(1, 2/|κ|)`.
pub fn suppression_bound(kappa: f64) -> f64 {
    if kappa == 0.0 {
        1.0
    } else {
        (2.0 / kappa.abs()).min(1.0)
    }
}

pub const RESIDUAL_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReducedState {
    pub probabilities: Vec<f64>,
    pub residual: f64,
    /// Outcome forced with certainty, if any.
    pub deterministic: Option<usize>,
    /// Residual at or below the threshold: the state is the projection outcome.
    pub von_neumann: bool,
    /// System density after averaging the phases over the ready domain (eigenbasis of F).
    pub decohered: Vec<Vec<[f64; 2]>>,
}

pub fn reduced_final_state(mm: &MeasurementModel) -> ReducedState {
    let n = mm.len();
    let probabilities: Vec<f64> = (0..n).map(|j| mm.amplitude(j).norm_sqr()).collect();
    let mut residual: f64 = 0.0;
    let mut decohered = vec![vec![[0.0; 2]; n]; n];
    for j in 0..n {
        for k in 0..n {
            let cjk = mm.amplitude(j) * mm.amplitude(k).conj();
            let z = if j == k { cjk } else { cjk * mm.phase_integral(j, k) };
            decohered[j][k] = [z.re, z.im];
            if j != k {
                residual = residual.max(cjk.norm() * mm.profile.oscillation(mm.kappa(j, k)));
            }
        }
    }
    let deterministic = probabilities.iter().position(|&p| p == 1.0);
    ReducedState { probabilities, residual, deterministic, von_neumann: residual <= RESIDUAL_THRESHOLD, decohered }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepPoint {
    pub kappa: f64,
    pub magnitude: f64,
    pub bound: f64,
}

/// Log-spaced κ sweep of the uniform-profile interference magnitude.
pub fn suppression_sweep(kmin: f64, kmax: f64, points: usize) -> Result<Vec<SweepPoint>> {
    if !(kmin > 0.0 && kmax > kmin) || points < 2 {
        return Err(Error::InvalidArgument("sweep needs 0 < κmin < κmax and at least two points".into()));
    }
    let (l0, l1) = (kmin.log10(), kmax.log10());
    Ok((0..points)
        .into_par_iter()
        .map(|i| {
            let kappa = 10f64.powf(l0 + (l1 - l0) * i as f64 / (points - 1) as f64);
            SweepPoint { kappa, magnitude: Profile::Uniform.oscillation(kappa), bound: suppression_bound(kappa) }
        })
        .collect())
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("kappa,magnitude\n");
    for p in points {
        let _ = writeln!(s, "{:.12e},{:.12e}", p.kappa, p.magnitude);
    }
    s
}

/// CGS data for the Stern-Gerlach estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SternGerlachParams {
    pub mu: f64,
    pub b1: f64,
    pub z1: f64,
    pub z2: f64,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub vx: f64,
    pub hbar: f64,
}

impl SternGerlachParams {
    /// Silver atoms: μ ≈ μ_B, |dB/dz| ~ 10⁵ G/cm, 1 mm gap, 3 cm magnet, 20 cm flight, 500 m/s.
    pub fn silver_beam() -> Self {
        SternGerlachParams { mu: 0.9e-20, b1: 1e5, z1: 0.0, z2: 0.1, x1: 0.0, x2: 3.0, x3: 23.0, vx: 5e4, hbar: 1.1e-27 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.z2 > self.z1) || !(self.x3 > self.x2 && self.x2 > self.x1) {
            return Err(Error::InvalidArgument("geometry must satisfy z₂ > z₁ and x₃ > x₂ > x₁".into()));
        }
        if !(self.mu > 0.0 && self.vx > 0.0 && self.hbar > 0.0) || self.b1 == 0.0 || !self.b1.is_finite() {
            return Err(Error::InvalidArgument("μ, v_x, ħ must be positive and b₁ nonzero".into()));
        }
        Ok(())
    }

    /// Spin-½ model with `λ = ±ħ/2` and `⟨K⟩₀ = μ|b₁|(z₂−z₁)/ħ`, so that `|η₁₂|` is the estimate.
    pub fn measurement_model(&self, amplitudes: [C64; 2]) -> Result<MeasurementModel> {
        self.validate()?;
        let tau = (self.x3 - self.x1) / self.vx;
        let k = self.mu * self.b1.abs() * (self.z2 - self.z1) / self.hbar;
        MeasurementModel::new(vec![self.hbar / 2.0, -self.hbar / 2.0], amplitudes.to_vec(), k, tau, self.hbar, Profile::Uniform)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SternGerlachReport {
    pub tau: f64,
    pub eta: f64,
    pub ratio: f64,
    /// Interference magnitude at `κ = |η|/ħ` for the uniform profile.
    pub suppression: f64,
}

/// `τ = (x₃−x₁)/v_x`, `|η| = μ|b₁|(z₂−z₁)τ`.
pub fn stern_gerlach(sg: &SternGerlachParams) -> Result<SternGerlachReport> {
    sg.validate()?;
    let tau = (sg.x3 - sg.x1) / sg.vx;
    let eta = sg.mu * sg.b1.abs() * (sg.z2 - sg.z1) * tau;
    let ratio = eta / sg.hbar;
    Ok(SternGerlachReport { tau, eta, ratio, suppression: Profile::Uniform.oscillation(ratio) })
}

/// Fully quantum apparatus on `M_n`: ready vector, coupling `K`, pointer projectors.
#[derive(Clone, Debug)]
pub struct MatrixApparatus {
    pub ready: CVec,
    pub k: CMat,
    pub projectors: Vec<CMat>,
}

impl MatrixApparatus {
    pub fn new(ready: CVec, k: CMat, projectors: Vec<CMat>) -> Result<MatrixApparatus> {
        let n = ready.len();
        if k.nrows() != n || k.ncols() != n || !linalg::is_hermitian(&k, 1e-12) {
            return Err(Error::InvalidArgument("K must be Hermitian of the apparatus size".into()));
        }
        check_projectors(&projectors)?;
        if projectors[0].nrows() != n {
            return Err(Error::InvalidArgument("projector size differs from the apparatus".into()));
        }
        Ok(MatrixApparatus { ready: ready.normalize(), k, projectors })
    }

    /// Two-level apparatus whose pointer states are `(|0⟩ ∓ |1⟩)/√2` and whose ready state `|0⟩`
    /// is not a pointer state; `K = σ_y`. For `λ = ∓λ₀` and `τλ₀/ħ = π/4` the transfer is exact.
    pub fn qubit_pointer() -> MatrixApparatus {
        let s = 0.5f64.sqrt();
        let plus = CVec::from_column_slice(&[c(s, 0.0), c(s, 0.0)]);
        let minus = CVec::from_column_slice(&[c(s, 0.0), c(-s, 0.0)]);
        let k = CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
        let ready = CVec::from_column_slice(&[c(1.0, 0.0), ZERO]);
        MatrixApparatus { ready, k, projectors: vec![&minus * minus.adjoint(), &plus * plus.adjoint()] }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixMeasurement {
    pub probabilities: Vec<f64>,
    /// max over sectors of `‖Tr_A[(I⊗Pⱼ)Φ_f] − |cⱼ|²|ψⱼ⟩⟨ψⱼ|‖`.
    pub conditional_residual: f64,
    /// Off-diagonal system coherence left after the sector traces.
    pub coherence: f64,
}

/// Evolves `|ψ⟩⟨ψ| ⊗ ready` under `H = F⊗K` through the coupled-system flow and reads the
/// outcome statistics off explicit pointer-sector traces. Amplitudes and projectors are
/// indexed by the eigenvalues of `F` in ascending order.
pub fn matrix_measurement(f: &CMat, amplitudes: &[C64], app: &MatrixApparatus, tau: f64, hbar: f64) -> Result<MatrixMeasurement> {
    let ns = f.nrows();
    let na = app.ready.len();
    if amplitudes.len() != ns || !linalg::is_hermitian(f, 1e-12) {
        return Err(Error::InvalidArgument("F must be Hermitian with one amplitude per eigenvector".into()));
    }
    let (vals, vecs) = linalg::herm_eig(f);
    if !distinct(&vals) || vals.windows(2).any(|w| (w[1] - w[0]).abs() < 1e-9) {
        return Err(Error::InvalidArgument("F must be nondegenerate".into()));
    }
    if app.projectors.len() != ns {
        return Err(Error::InvalidArgument("one pointer sector per eigenvalue".into()));
    }
    let a_s = Algebra::matrix(ns)?;
    let a_a = Algebra::matrix(na)?;
    let product = Arc::new(ProductPoisson::new(
        Arc::new(SymplecticStructure::quantum(&a_s, hbar)?),
        Arc::new(SymplecticStructure::quantum(&a_a, hbar)?),
    )?);
    let fe = a_s.element(a_s.from_matrix(f)?);
    let ke = a_a.element(a_a.from_matrix(&app.k)?);
    let sys = CoupledSystem::new(product.clone(), &a_s.zero(), &a_a.zero(), &[(fe, ke)])?;
    let psi = (0..ns).fold(CVec::zeros(ns), |acc, j| acc + vecs.column(j) * amplitudes[j]);
    let phi_in = State::vector(&product.alg, &psi.kronecker(&app.ready))?;
    let phi_f = sys.evolve_state(&phi_in, tau)?;
    let mut probabilities = Vec::with_capacity(ns);
    let mut conditional_residual: f64 = 0.0;
    let mut sector_sum = CMat::zeros(ns, ns);
    for (j, p) in app.projectors.iter().enumerate() {
        // Tr_A[(I⊗Pⱼ)Φ_f] through expectations of E_ab ⊗ Pⱼ
        let mut block = CMat::zeros(ns, ns);
        for a in 0..ns {
            for b in 0..ns {
                let mut e = CMat::zeros(ns, ns);
                e[(b, a)] = c(1.0, 0.0);
                let op = linalg::kron(&e, p);
                block[(a, b)] = phi_f.expectation(&product.alg.element(product.alg.from_matrix(&op)?))?;
            }
        }
        probabilities.push(block.trace().re);
        let v = vecs.column(j).into_owned();
        let want = &v * v.adjoint() * c(amplitudes[j].norm_sqr(), 0.0);
        conditional_residual = conditional_residual.max(linalg::max_abs_mat(&(&block - want)));
        sector_sum += block;
    }
    let eig = vecs.adjoint() * sector_sum * &vecs;
    let coherence = (0..ns).flat_map(|a| (0..ns).filter(move |&b| b != a).map(move |b| (a, b))).map(|(a, b)| eig[(a, b)].norm()).fold(0.0, f64::max);
    Ok(MatrixMeasurement { probabilities, conditional_residual, coherence })
}

/// Matrix-valued phase-space symbol `Σ M_ab xᵃpᵇ`, the mixed quantum/Weyl product algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSymbol {
    pub dim: usize,
    pub terms: BTreeMap<(u32, u32), CMat>,
}

impl OperatorSymbol {
    pub fn tensor(m: &CMat, f: &PhasePolynomial) -> OperatorSymbol {
        let mut terms = BTreeMap::new();
        for (&k, &z) in f.terms() {
            terms.insert(k, m * z);
        }
        OperatorSymbol { dim: m.nrows(), terms }
    }

    pub fn add(&self, o: &OperatorSymbol) -> OperatorSymbol {
        let mut terms = self.terms.clone();
        for (k, m) in &o.terms {
            let e = terms.entry(*k).or_insert_with(|| CMat::zeros(self.dim, self.dim));
            *e += m;
        }
        OperatorSymbol { dim: self.dim, terms }
    }

    pub fn scale(&self, z: C64) -> OperatorSymbol {
        OperatorSymbol { dim: self.dim, terms: self.terms.iter().map(|(k, m)| (*k, m * z)).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(linalg::max_abs_mat).fold(0.0, f64::max)
    }

    pub fn dist(&self, o: &OperatorSymbol) -> f64 {
        self.add(&o.scale(c(-1.0, 0.0))).max_abs()
    }
}

/// `{F⊗K, A⊗J}` split into commutator and anticommutator halves:
/// `(−iħ)⁻¹([F,A]⊗(K⋆J + J⋆K)/2) + (FA + AF)/2 ⊗ {K,J}_M`.
pub fn bracket_expansion(f: &CMat, k: &PhasePolynomial, a: &CMat, j: &PhasePolynomial, hbar: f64) -> OperatorSymbol {
    let inv = c(0.0, -hbar).inv();
    let comm = (f * a - a * f) * inv;
    let anti = (f * a + a * f) * c(0.5, 0.0);
    let sym = star(k, j, hbar).add(&star(j, k, hbar)).scale(c(0.5, 0.0));
    OperatorSymbol::tensor(&comm, &sym).add(&OperatorSymbol::tensor(&anti, &moyal_bracket(k, j, hbar)))
}

/// Direct `(−iħ)⁻¹(FA⊗K⋆J − AF⊗J⋆K)`.
pub fn bracket_direct(f: &CMat, k: &PhasePolynomial, a: &CMat, j: &PhasePolynomial, hbar: f64) -> OperatorSymbol {
    let inv = c(0.0, -hbar).inv();
    OperatorSymbol::tensor(&(f * a), &star(k, j, hbar))
        .add(&OperatorSymbol::tensor(&(a * f), &star(j, k, hbar)).scale(c(-1.0, 0.0)))
        .scale(inv)
}

/// Classical-apparatus approximation `(−iħ)⁻¹ K J [F,A]`.
pub fn bracket_classical(f: &CMat, k: &PhasePolynomial, a: &CMat, j: &PhasePolynomial, hbar: f64) -> OperatorSymbol {
    OperatorSymbol::tensor(&((f * a - a * f) * c(0.0, -hbar).inv()), &k.mul(j))
}
