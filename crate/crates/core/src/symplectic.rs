//! Symplectic structures on superalgebras: canonical and quantum forms,
//! Hamiltonian derivations, Poisson brackets and time evolution.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, Element, Parity};
use crate::calculus::{self, Calculus, Cochain, Derivation};
use crate::linalg::{self, c, max_abs, CMat, CVec, I};
use crate::states::{Realization, State};
use crate::{Error, Result};

/// Residual gate of the nondegeneracy solve.
pub const SOLVE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum FormKind {
    Canonical,
    Quantum { hbar: f64 },
    Custom,
}

#[derive(Clone, Debug)]
pub struct SymplecticStructure {
    pub cx: Calculus,
    pub omega: Cochain,
    pub kind: FormKind,
    pairing: CMat,
    rank: usize,
}

impl SymplecticStructure {
    /// Wraps a closed even 2-form. Nondegeneracy is checked when a Hamiltonian derivation is requested.
    pub fn new(cx: Calculus, omega: Cochain, kind: FormKind) -> Result<SymplecticStructure> {
        if omega.degree != 2 || omega.parity != Parity::Even {
            return Err(Error::InvalidArgument("a symplectic form is an even 2-form".into()));
        }
        let dw = cx.d(&omega)?.max_abs();
        if dw > 1e-10 * omega.max_abs().max(1.0) {
            return Err(Error::InvalidArgument(format!("form is not closed (residual {dw:e})")));
        }
        let (m, d) = (cx.m(), cx.alg.dim());
        let mut pairing = CMat::zeros(m * d, m);
        for k in 0..m {
            for l in 0..m {
                let v = omega.value(&[k, l]);
                for comp in 0..d {
                    pairing[(l * d + comp, k)] = v[comp];
                }
            }
        }
        let rank = linalg::rank(&pairing, 1e-10);
        Ok(SymplecticStructure { cx, omega, kind, pairing, rank })
    }

    /// `ω_c(D_A, D_B) = [A, B]` on the inner derivations of a special algebra.
    pub fn canonical(alg: &Algebra) -> Result<SymplecticStructure> {
        let (sder, inner) = calculus::derivation_dimensions(alg);
        if inner == 0 {
            return Err(Error::NotSpecial("algebra is supercommutative".into()));
        }
        if sder != inner {
            return Err(Error::NotSpecial(format!("{sder} superderivations but only {inner} inner ones")));
        }
        let cx = Calculus::inner(alg);
        let gens = cx.family.generators().expect("inner family").to_vec();
        let a = cx.alg.clone();
        let omega = cx.from_fn(2, Parity::Even, |t| a.supercomm_vec(&gens[t[0]].coeffs, &gens[t[1]].coeffs))?;
        SymplecticStructure::new(cx, omega, FormKind::Canonical)
    }

    /// `ω_Q = -iħ ω_c`.
    pub fn quantum(alg: &Algebra, hbar: f64) -> Result<SymplecticStructure> {
        if !(hbar > 0.0) {
            return Err(Error::InvalidArgument("ħ must be positive".into()));
        }
        let can = SymplecticStructure::canonical(alg)?;
        let omega = can.omega.scale(c(0.0, -hbar));
        SymplecticStructure::new(can.cx, omega, FormKind::Quantum { hbar })
    }

    pub fn alg(&self) -> &Arc<Algebra> {
        &self.cx.alg
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.rank == self.cx.m() && self.cx.m() > 0
    }

    /// `|ω* - ω|`: zero for real forms.
    pub fn reality_residual(&self) -> Result<f64> {
        Ok(self.cx.star(&self.omega)?.dist(&self.omega))
    }

    pub fn closedness_residual(&self) -> Result<f64> {
        Ok(self.cx.d(&self.omega)?.max_abs())
    }

    /// Family coefficients of `Y_A` solving `i_{Y_A} ω = -dA`, for homogeneous `A`.
    fn solve(&self, a: &CVec, p: Parity) -> Result<CVec> {
        if !self.is_nondegenerate() {
            return Err(Error::Degenerate(self.cx.m() as f64 - self.rank as f64));
        }
        let alg = &self.cx.alg;
        let d = alg.dim();
        let m = self.cx.m();
        let mut rhs = CVec::zeros(m * d);
        for l in 0..m {
            let x = self.cx.family.member(l);
            let v = x.apply(a) * c(-x.parity.eta(p), 0.0);
            for comp in 0..d {
                rhs[l * d + comp] = v[comp];
            }
        }
        let (y, res) = linalg::lstsq(&self.pairing, &rhs);
        if res > SOLVE_TOL * rhs.norm().max(1.0) {
            return Err(Error::Internal(format!("Hamiltonian equation inconsistent (residual {res:e})")));
        }
        Ok(y)
    }

    /// The Hamiltonian derivation `Y_A` of a homogeneous element.
    pub fn hamiltonian(&self, a: &Element) -> Result<Derivation> {
        self.cx.alg.owns(a)?;
        let p = a.parity.or_else(|| self.cx.alg.vec_parity(&a.coeffs)).ok_or(Error::Inhomogeneous)?;
        let y = self.solve(&a.coeffs, p)?;
        Ok(self.cx.family.combine(&y, p))
    }

    /// Operator of `B ↦ {A, B}`, extended linearly over the homogeneous parts of `A`.
    pub fn hamiltonian_op(&self, a: &CVec) -> Result<CMat> {
        let d = self.cx.alg.dim();
        let mut op = CMat::zeros(d, d);
        for p in [Parity::Even, Parity::Odd] {
            let part = self.cx.alg.part(a, p);
            if max_abs(part.as_slice()) == 0.0 {
                continue;
            }
            let y = self.solve(&part, p)?;
            op += self.cx.family.combine(&y, p).op;
        }
        Ok(op)
    }

    pub fn poisson_vec(&self, a: &CVec, b: &CVec) -> Result<CVec> {
        Ok(self.hamiltonian_op(a)? * b)
    }

    /// `{A, B} = Y_A(B)`.
    pub fn poisson(&self, a: &Element, b: &Element) -> Result<Element> {
        self.cx.alg.owns(a)?;
        self.cx.alg.owns(b)?;
        Ok(self.cx.alg.element(self.poisson_vec(&a.coeffs, &b.coeffs)?))
    }

    /// `{A, B} = I` up to `tol`.
    pub fn is_canonical_pair(&self, a: &Element, b: &Element, tol: f64) -> Result<bool> {
        Ok(self.poisson(a, b)?.dist(&self.cx.alg.unit()) <= tol)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "camelCase")]
pub enum Method {
    ClosedForm,
    Rk4 { steps: usize },
}

/// Integrates `dv/dt = L v` with classical RK4.
pub fn rk4_linear(l: &CMat, v0: &CVec, t: f64, steps: usize) -> CVec {
    let h = c(t / steps as f64, 0.0);
    let half = c(0.5, 0.0);
    let mut v = v0.clone();
    for _ in 0..steps {
        let k1 = l * &v;
        let k2 = l * (&v + &k1 * h * half);
        let k3 = l * (&v + &k2 * h * half);
        let k4 = l * (&v + &k3 * h);
        v += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * (h / c(6.0, 0.0));
    }
    v
}

#[derive(Clone, Debug)]
pub struct HamiltonianSystem {
    pub ss: Arc<SymplecticStructure>,
    pub h: Element,
    generator: CMat,
}

impl HamiltonianSystem {
    /// `H` must be even and self-adjoint.
    pub fn new(ss: Arc<SymplecticStructure>, h: Element) -> Result<HamiltonianSystem> {
        let alg = ss.alg().clone();
        alg.owns(&h)?;
        if alg.vec_parity(&h.coeffs) != Some(Parity::Even) {
            return Err(Error::InvalidArgument("Hamiltonian must be even".into()));
        }
        let r = linalg::dist(&alg.star_vec(&h.coeffs), &h.coeffs);
        if r > 1e-12 * h.max_abs().max(1.0) {
            return Err(Error::InvalidArgument(format!("Hamiltonian is not self-adjoint (residual {r:e})")));
        }
        let generator = ss.hamiltonian_op(&h.coeffs)?;
        Ok(HamiltonianSystem { ss, h, generator })
    }

    /// Operator of `A ↦ {H, A}`.
    pub fn generator(&self) -> &CMat {
        &self.generator
    }

    /// Smallest eigenvalue of `H` in the matrix realization (the only place boundedness is checkable).
    pub fn spectrum_min(&self) -> Result<f64> {
        let m = self.ss.alg().to_matrix(&self.h.coeffs)?;
        Ok(linalg::herm_eig(&m).0[0])
    }

    pub fn flow(&self, t: f64) -> CMat {
        linalg::expm(&(&self.generator * c(t, 0.0)))
    }

    /// Heisenberg picture `dA/dt = {H, A}`.
    pub fn evolve_heisenberg(&self, a: &Element, t: f64, method: Method) -> Result<Element> {
        let alg = self.ss.alg();
        alg.owns(a)?;
        let v = match method {
            Method::ClosedForm => {
                if self.ss.kind == FormKind::Custom {
                    return Err(Error::InvalidArgument("closed form needs a canonical or quantum structure".into()));
                }
                self.flow(t) * &a.coeffs
            }
            Method::Rk4 { steps } => {
                if steps == 0 {
                    return Err(Error::InvalidArgument("step count must be positive".into()));
                }
                rk4_linear(&self.generator, &a.coeffs, t, steps)
            }
        };
        Ok(alg.element(v))
    }

    /// Liouville picture: `<φ(t), A> = <φ, A(t)>`. Density matrices under a quantum form evolve by
    /// unitary conjugation; everything else through the transposed flow.
    pub fn evolve_liouville(&self, phi: &State, t: f64) -> Result<State> {
        let alg = self.ss.alg();
        if phi.alg != alg.id() {
            return Err(Error::AlgebraMismatch);
        }
        if let (FormKind::Quantum { hbar }, Realization::DensityMatrix(rho)) = (&self.ss.kind, &phi.realization) {
            let hm = alg.to_matrix(&self.h.coeffs)?;
            let u = linalg::expm(&(hm * (-I * c(t / hbar, 0.0))));
            return State::density(alg, u.clone() * rho * u.adjoint());
        }
        let values = self.flow(t).transpose() * phi.values();
        State::from_values_like(alg, phi, values)
    }
}

/// Spin-½ precession Hamiltonian `(ħω/2) σz` on M2.
pub fn spin_precession(alg: &Algebra, hbar: f64, omega: f64) -> Element {
    crate::algebra::pauli(alg, 'z').scale(c(hbar * omega / 2.0, 0.0))
}

