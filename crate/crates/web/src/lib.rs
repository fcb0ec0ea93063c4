//! wasm-bindgen surface of the demo page.

pub mod demo;

use wasm_bindgen::prelude::*;

fn js(e: String) -> JsError {
    JsError::new(&e)
}

/// A small run stepped from the page.
#[wasm_bindgen]
pub struct Simulation {
    inner: demo::Demo,
}

#[wasm_bindgen]
impl Simulation {
    /// `config` is a run config document, as for the command line.
    #[wasm_bindgen(constructor)]
    pub fn new(config: &str) -> Result<Simulation, JsError> {
        demo::Demo::new(config).map(|inner| Simulation { inner }).map_err(js)
    }

    pub fn width(&self) -> usize {
        self.inner.grid().n1()
    }

    pub fn height(&self) -> usize {
        self.inner.grid().n2()
    }

    pub fn step(&mut self, n: usize) -> Result<f64, JsError> {
        self.inner.step(n).map(|k| k as f64).map_err(js)
    }

    /// RGBA bytes for an `ImageData` of `width x height`.
    pub fn pixels(&self, field: &str) -> Result<Vec<u8>, JsError> {
        self.inner.image(field).map(|(px, _, _)| px).map_err(js)
    }

    /// `[min, max]` of a field.
    pub fn range(&self, field: &str) -> Result<Vec<f64>, JsError> {
        self.inner.image(field).map(|(_, lo, hi)| vec![lo, hi]).map_err(js)
    }

    pub fn status(&self) -> String {
        self.inner.status().to_string()
    }
}

#[wasm_bindgen]
pub fn rayleigh(g: f64, theta_low: f64, theta_high: f64, mu: f64, kappa: f64) -> Result<f64, JsError> {
    demo::rayleigh(g, theta_low, theta_high, mu, kappa).map_err(js)
}

#[wasm_bindgen(js_name = slopeTable)]
pub fn slope_table(mu: f64, kappa: f64) -> Result<String, JsError> {
    demo::slope_table(mu, kappa).map(|v| v.to_string()).map_err(js)
}

/// JSON with `x`, `p`, the mode coefficients and the sample moments.
#[wasm_bindgen]
pub fn perturbation(seed: u32, c: f64, samples: usize) -> Result<String, JsError> {
    demo::perturbation(seed as u64, c, samples).map(|v| v.to_string()).map_err(js)
}
