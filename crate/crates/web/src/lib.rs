//! Browser bindings: run a transport model, classify one `(rho_d, b)`
//! point, and colour a coarse stability map.

use wasm_bindgen::prelude::*;

use stemflow::grid::GridSpec;
use stemflow::pde_full::FullModel;
use stemflow::pde_reduced::{ReducedModel, ReducedVariant};
use stemflow::scan::{self, Axis, Regime};
use stemflow::spectral::RootSearch;
use stemflow::{PopulationTrace, Preset, RescaledParameters};

fn params(d: f64) -> Result<RescaledParameters, String> {
    Preset::PhMinus
        .parameters()
        .with_d(d)
        .rescale()
        .map_err(|e| e.to_string())
}

/// Flattened `[t, A, Omega, t, A, Omega, ...]` samples of one model run.
pub fn run_model(model: &str, d: f64, days: f64, a0: f64) -> Result<Vec<f64>, String> {
    if !(days > 0.0 && days <= 400.0) {
        return Err("days must lie in (0, 400]".into());
    }
    let p = params(d)?;
    let spec = GridSpec::uniform(1);
    let every = (days / 400.0).max(0.25);
    let trace: PopulationTrace = if model == "approx0" {
        let mut m = FullModel::new(p, spec).map_err(|e| e.to_string())?;
        let mut s = m.initial_state(a0);
        m.simulate(&mut s, days, every).map_err(|e| e.to_string())?
    } else {
        let variant = match model {
            "approx1" => ReducedVariant::Approx1,
            "approx2" => ReducedVariant::Approx2,
            "approx3" => ReducedVariant::Approx3,
            "approx4" => ReducedVariant::Approx4,
            other => return Err(format!("unknown model `{other}`")),
        };
        let mut m = ReducedModel::new(p, spec, variant).map_err(|e| e.to_string())?;
        let mut s = m.initial_state(a0);
        m.simulate(&mut s, days, every).map_err(|e| e.to_string())?
    };
    Ok(trace.points.iter().flat_map(|q| [q.t, q.alpha, q.omega]).collect())
}

/// JSON summary of the regime at `(rho_d, b)` with the remaining
/// parameters of the default preset.
pub fn classify_json(rho_d: f64, b: f64) -> Result<String, String> {
    if !(rho_d > 0.0 && b > 0.0) {
        return Err("rho_d and b must be positive".into());
    }
    let v = scan::classify_point(rho_d, b, &params(1.05)?, &RootSearch::default());
    let root = match v.rightmost {
        Some(z) => format!("{{\"re\":{},\"im\":{}}}", z.re, z.im),
        None => "null".into(),
    };
    let error = match &v.error {
        Some(e) => format!("\"{}\"", e.replace('\\', "\\\\").replace('"', "\\\"")),
        None => "null".into(),
    };
    Ok(format!(
        "{{\"regime\":\"{}\",\"nonzero_exists\":{},\"rightmost\":{root},\"error\":{error}}}",
        v.regime, v.nonzero_exists
    ))
}

/// Regime codes (0 unstable-periodic, 1 stable-nonzero, 2 stable-zero,
/// 3 indeterminate) on an `n x n` grid of the default window, row-major
/// from the lowest `b`.
pub fn region_codes(n: usize) -> Result<Vec<u8>, String> {
    if !(2..=40).contains(&n) {
        return Err("n must lie in 2..=40".into());
    }
    let (rho, b) = scan::default_axes();
    let rho = Axis::new(rho.lo, rho.hi, n).map_err(|e| e.to_string())?;
    let b = Axis::new(b.lo, b.hi, n).map_err(|e| e.to_string())?;
    let map = scan::region_map(rho, b, &params(1.05)?, &RootSearch::default(), Some(1))
        .map_err(|e| e.to_string())?;
    Ok(map
        .cells
        .iter()
        .map(|c| Regime::ALL.iter().position(|r| *r == c.regime).unwrap_or(3) as u8)
        .collect())
}

#[wasm_bindgen]
pub fn simulate(model: &str, d: f64, days: f64, a0: f64) -> Result<Vec<f64>, JsValue> {
    run_model(model, d, days, a0).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn classify(rho_d: f64, b: f64) -> Result<String, JsValue> {
    classify_json(rho_d, b).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn stability_map(n: usize) -> Result<Vec<u8>, JsValue> {
    region_codes(n).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_triples() {
        let v = run_model("approx4", 1.05, 5.0, 1.0).unwrap();
        assert_eq!(v.len() % 3, 0);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[1], 1.0);
    }

    #[test]
    fn unknown_model_is_rejected() {
        assert!(run_model("approx9", 1.05, 5.0, 1.0).is_err());
        assert!(run_model("approx4", 1.05, -1.0, 1.0).is_err());
    }

    #[test]
    fn default_point_is_stable() {
        let s = classify_json(0.188421, 0.42).unwrap();
        assert!(s.starts_with("{\"regime\":\"stable-nonzero\""), "{s}");
    }

    #[test]
    fn small_map_has_all_three_regimes() {
        let codes = region_codes(6).unwrap();
        assert_eq!(codes.len(), 36);
        for k in 0..3 {
            assert!(codes.contains(&k), "{codes:?}");
        }
    }
}
