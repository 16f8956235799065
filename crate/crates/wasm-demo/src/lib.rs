//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Two things to play with: where a unit impulse spreads under the
//! anisotropic graph filter, the uniform graph filter and a Gaussian; and
//! how well a truncated Chebyshev series tracks the heat kernel.

pub mod explore;

use wasm_bindgen::prelude::*;

use crate::explore::{Explorer, Smoother};

fn js_err(e: wmgf_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    inner: Explorer,
}

#[wasm_bindgen]
impl Demo {
    /// Builds the crossing-bundle slab and both of its graphs.
    #[wasm_bindgen(constructor)]
    pub fn new() -> Result<Demo, JsError> {
        Ok(Demo {
            inner: Explorer::new().map_err(js_err)?,
        })
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.inner.width()
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.inner.height()
    }

    #[wasm_bindgen(js_name = maskSlice)]
    pub fn mask_slice(&self) -> Vec<f64> {
        self.inner.mask_slice()
    }

    /// Heat-kernel response on the ODF-weighted graph.
    #[wasm_bindgen(js_name = graphImpulse)]
    pub fn graph_impulse(&self, x: usize, y: usize, tau: f64, order: usize) -> Result<Vec<f64>, JsError> {
        self.inner
            .impulse_response(Smoother::Anisotropic, x, y, tau, order)
            .map_err(js_err)
    }

    /// Heat-kernel response on the unit-weight graph of the same mask.
    #[wasm_bindgen(js_name = uniformImpulse)]
    pub fn uniform_impulse(&self, x: usize, y: usize, tau: f64, order: usize) -> Result<Vec<f64>, JsError> {
        self.inner
            .impulse_response(Smoother::Uniform, x, y, tau, order)
            .map_err(js_err)
    }

    #[wasm_bindgen(js_name = gaussianImpulse)]
    pub fn gaussian_impulse(&self, x: usize, y: usize, fwhm_mm: f64) -> Result<Vec<f64>, JsError> {
        self.inner
            .impulse_response(Smoother::Gaussian, x, y, fwhm_mm, 0)
            .map_err(js_err)
    }
}

/// Kernel, approximation and their largest gap, packed for plotting.
#[wasm_bindgen]
pub struct KernelFit {
    inner: explore::KernelFit,
}

#[wasm_bindgen]
impl KernelFit {
    #[wasm_bindgen(getter)]
    pub fn lambdas(&self) -> Vec<f64> {
        self.inner.lambdas.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn exact(&self) -> Vec<f64> {
        self.inner.exact.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn approx(&self) -> Vec<f64> {
        self.inner.approx.clone()
    }

    #[wasm_bindgen(getter, js_name = supError)]
    pub fn sup_error(&self) -> f64 {
        self.inner.sup_error
    }
}

#[wasm_bindgen(js_name = kernelFit)]
pub fn kernel_fit(tau: f64, order: usize, n_points: usize) -> Result<KernelFit, JsError> {
    Ok(KernelFit {
        inner: explore::kernel_fit(tau, order, n_points).map_err(js_err)?,
    })
}
