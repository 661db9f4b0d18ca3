//! WebAssembly bindings for the browser demo in `www/`.

use ncmech::measurement::{self, SternGerlachParams};
use ncmech::moyal;
use wasm_bindgen::prelude::*;

/// Sampled Wigner function, row-major in `x`.
#[wasm_bindgen]
pub struct WignerView {
    xs: Vec<f64>,
    values: Vec<f64>,
    normalization: f64,
    min: f64,
    max: f64,
}

#[wasm_bindgen]
impl WignerView {
    pub fn n(&self) -> usize {
        self.xs.len()
    }

    /// Grid coordinates, shared by `x` and `p`.
    pub fn axis(&self) -> Vec<f64> {
        self.xs.clone()
    }

    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

/// `kind` is `ground`, `excited` or `coherent`; the displacement applies to `coherent` only.
#[wasm_bindgen]
pub fn wigner(kind: &str, hbar: f64, x0: f64, p0: f64, n: usize) -> Result<WignerView, JsError> {
    wigner_view(kind, hbar, x0, p0, n).map_err(js)
}

pub fn wigner_view(kind: &str, hbar: f64, x0: f64, p0: f64, n: usize) -> Result<WignerView, String> {
    if !(hbar > 0.0) || n < 16 {
        return Err("need ħ > 0 and at least 16 grid points".into());
    }
    let spread = match kind {
        "coherent" => 1.0 + x0.abs().max(p0.abs()) / hbar.sqrt() / 4.0,
        _ => 1.0,
    };
    let xs = moyal::phase_grid(hbar, spread, n);
    let psi = match kind {
        "ground" => moyal::gaussian_state(&xs, hbar),
        "excited" => moyal::first_excited_state(&xs, hbar),
        "coherent" => moyal::coherent_state(&xs, hbar, x0, p0),
        other => return Err(format!("unknown state `{other}`")),
    };
    let w = moyal::wigner_function(&psi, &xs, hbar).map_err(|e| e.to_string())?;
    let min = w.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = w.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(WignerView { normalization: w.normalization(), xs: w.xs, values: w.values, min, max })
}

#[wasm_bindgen]
pub struct Curve {
    kappa: Vec<f64>,
    magnitude: Vec<f64>,
    bound: Vec<f64>,
}

#[wasm_bindgen]
impl Curve {
    pub fn kappa(&self) -> Vec<f64> {
        self.kappa.clone()
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.magnitude.clone()
    }

    pub fn bound(&self) -> Vec<f64> {
        self.bound.clone()
    }
}

/// Uniform-profile interference magnitude over a log-spaced κ range.
#[wasm_bindgen]
pub fn suppression_curve(kmin: f64, kmax: f64, points: usize) -> Result<Curve, JsError> {
    curve(kmin, kmax, points).map_err(js)
}

pub fn curve(kmin: f64, kmax: f64, points: usize) -> Result<Curve, String> {
    let sweep = measurement::suppression_sweep(kmin, kmax, points).map_err(|e| e.to_string())?;
    Ok(Curve {
        kappa: sweep.iter().map(|p| p.kappa).collect(),
        magnitude: sweep.iter().map(|p| p.magnitude).collect(),
        bound: sweep.iter().map(|p| p.bound).collect(),
    })
}

#[wasm_bindgen]
#[derive(Clone, Copy, Debug)]
pub struct SternGerlach {
    pub tau: f64,
    pub eta: f64,
    pub ratio: f64,
    pub suppression: f64,
}

/// CGS inputs: moment, gradient, gap, magnet length, flight length, speed, ħ.
#[wasm_bindgen]
pub fn stern_gerlach(mu: f64, b1: f64, gap: f64, magnet: f64, flight: f64, vx: f64, hbar: f64) -> Result<SternGerlach, JsError> {
    estimate(mu, b1, gap, magnet, flight, vx, hbar).map_err(js)
}

pub fn estimate(mu: f64, b1: f64, gap: f64, magnet: f64, flight: f64, vx: f64, hbar: f64) -> Result<SternGerlach, String> {
    let sg = SternGerlachParams { mu, b1, z1: 0.0, z2: gap, x1: 0.0, x2: magnet, x3: magnet + flight, vx, hbar };
    let r = measurement::stern_gerlach(&sg).map_err(|e| e.to_string())?;
    Ok(SternGerlach { tau: r.tau, eta: r.eta, ratio: r.ratio, suppression: r.suppression })
}

/// Default inputs in the order taken by `stern_gerlach`.
#[wasm_bindgen]
pub fn stern_gerlach_preset() -> Vec<f64> {
    let p = SternGerlachParams::silver_beam();
    vec![p.mu, p.b1, p.z2 - p.z1, p.x2 - p.x1, p.x3 - p.x2, p.vx, p.hbar]
}
