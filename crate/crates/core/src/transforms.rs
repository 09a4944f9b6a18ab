//! Driver maps between the geometric, ordinary, log-quadratic and two-driver forms.
//!
//! Each map returns a new [`DriverSpec`] with one more [`TransformRecord`] in its
//! lineage and a growth bundle inherited from the source.

use std::sync::Arc;

use crate::driver::{DriverSpec, Family, PushKind, ScalarFn, TransformRecord, VolatilityMap};
use crate::error::{Error, Result};

fn sq(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum()
}

fn record(name: &str, source: Family, target: Family, driver_map: &str, push: PushKind) -> TransformRecord {
    TransformRecord { name: name.into(), source, target, driver_map: driver_map.into(), push_forward: push }
}

/// `f(t, y, z) = f̃(t, eʸ, z) + |z|²/2`; solutions map by `Y' = ln Y`.
pub fn gbsde_to_ordinary(ft: &DriverSpec) -> Result<DriverSpec> {
    ft.require(Family::Geometric)?;
    let g = ft.f.clone();
    let f: ScalarFn = Arc::new(move |t, y, z| g(t, y.exp(), z) + 0.5 * sq(z));
    let rec = record("gbsde_to_ordinary", Family::Geometric, Family::Ordinary, "f(t,y,z) = f~(t,e^y,z) + |z|^2/2", PushKind::Log);
    Ok(ft.derived(Family::Ordinary, f, ft.coefficients.shift_delta(0.5), rec))
}

/// `f̃(t, y, z) = f(t, ln y, z) − |z|²/2`; solutions map by `Y' = eʸ`.
pub fn ordinary_to_gbsde(f: &DriverSpec) -> Result<DriverSpec> {
    f.require(Family::Ordinary)?;
    let g = f.f.clone();
    let ft: ScalarFn = Arc::new(move |t, y, z| if y > 0.0 { g(t, y.ln(), z) - 0.5 * sq(z) } else { f64::NAN });
    let shifted = f.coefficients.shift_delta(-f.coefficients.delta.min(0.5));
    let rec = record("ordinary_to_gbsde", Family::Ordinary, Family::Geometric, "f~(t,y,z) = f(t,ln y,z) - |z|^2/2", PushKind::Exp);
    Ok(f.derived(Family::Geometric, ft, shifted, rec))
}

/// `ḡ(t, y, z) = y f̃(t, y, z/y)`; solutions map by `Z̄ = Y Z̃`.
pub fn gbsde_to_lnq(ft: &DriverSpec) -> Result<DriverSpec> {
    ft.require(Family::Geometric)?;
    let g = ft.f.clone();
    let f: ScalarFn = Arc::new(move |t, y, z| {
        if y > 0.0 {
            let zr: Vec<f64> = z.iter().map(|v| v / y).collect();
            y * g(t, y, &zr)
        } else {
            f64::NAN
        }
    });
    let rec = record("gbsde_to_lnq", Family::Geometric, Family::LnQ, "g(t,y,z) = y f~(t,y,z/y)", PushKind::ScaleZByY);
    Ok(ft.derived(Family::LnQ, f, ft.coefficients.clone(), rec))
}

/// `f̃(t, y, z) = ḡ(t, y, y z) / y`, inverse of [`gbsde_to_lnq`].
pub fn lnq_to_gbsde(g: &DriverSpec) -> Result<DriverSpec> {
    g.require(Family::LnQ)?;
    let h = g.f.clone();
    let f: ScalarFn = Arc::new(move |t, y, z| {
        if y > 0.0 {
            let zs: Vec<f64> = z.iter().map(|v| v * y).collect();
            h(t, y, &zs) / y
        } else {
            f64::NAN
        }
    });
    let rec = record("lnq_to_gbsde", Family::LnQ, Family::Geometric, "f~(t,y,z) = g(t,y,yz)/y", PushKind::DivideZByY);
    Ok(g.derived(Family::Geometric, f, g.coefficients.clone(), rec))
}

/// `g'(t, y, z) = e^{−y} g(t, eʸ, eʸ z) + |z|²/2`; solutions map by `Y' = ln Y, Z' = Z/Y`.
/// The quadratic coefficient becomes `δ + ½`.
pub fn lnq_to_quadratic(g: &DriverSpec) -> Result<DriverSpec> {
    g.require(Family::LnQ)?;
    let h = g.f.clone();
    let f: ScalarFn = Arc::new(move |t, y, z| {
        let e = y.exp();
        let zs: Vec<f64> = z.iter().map(|v| v * e).collect();
        h(t, e, &zs) / e + 0.5 * sq(z)
    });
    let rec = record(
        "lnq_to_quadratic",
        Family::LnQ,
        Family::Ordinary,
        "g'(t,y,z) = e^-y g(t,e^y,e^y z) + |z|^2/2",
        PushKind::LogRelative,
    );
    Ok(g.derived(Family::Ordinary, f, g.coefficients.shift_delta(0.5), rec))
}

/// `g(t, y, z) = y (g'(t, ln y, z/y) − |z/y|²/2)`, inverse of [`lnq_to_quadratic`].
pub fn quadratic_to_lnq(f: &DriverSpec) -> Result<DriverSpec> {
    f.require(Family::Ordinary)?;
    let h = f.f.clone();
    let g: ScalarFn = Arc::new(move |t, y, z| {
        if y > 0.0 {
            let zr: Vec<f64> = z.iter().map(|v| v / y).collect();
            y * (h(t, y.ln(), &zr) - 0.5 * sq(&zr))
        } else {
            f64::NAN
        }
    });
    let shifted = f.coefficients.shift_delta(-f.coefficients.delta.min(0.5));
    let rec = record("quadratic_to_lnq", Family::Ordinary, Family::LnQ, "g(t,y,z) = y (g'(t,ln y,z/y) - |z/y|^2/2)", PushKind::ExpScaled);
    Ok(f.derived(Family::LnQ, g, shifted, rec))
}

/// Sample points used to certify the volatility map of a two-driver equation.
fn certification_points(horizon: f64, dim: usize) -> Vec<(f64, f64, Vec<f64>)> {
    let ys = [0.1, 0.35, 1.0, 2.7, 10.0];
    let mags = [0.05, 0.5, 2.0, 5.0];
    let ts = [0.0, 0.5 * horizon, horizon];
    let mut out = Vec::new();
    for &t in &ts {
        for &y in &ys {
            for &r in &mags {
                for d in 0..dim {
                    for s in [-1.0, 1.0] {
                        let mut z = vec![0.25 * r; dim];
                        z[d] = s * r;
                        out.push((t, y, z));
                    }
                }
            }
        }
    }
    out
}

/// Largest `K` with `|g₂(t, y, z)| ≥ K y |z|` on the certification points.
pub fn certify_lower_constant(map: &VolatilityMap, horizon: f64, dim: usize) -> (f64, (f64, f64, Vec<f64>)) {
    let mut best = (f64::INFINITY, (0.0, 0.0, vec![0.0; dim]));
    for (t, y, z) in certification_points(horizon, dim) {
        let v = (map.g2)(t, y, &z);
        let ratio = sq(&v).sqrt() / (y * sq(&z).sqrt());
        if ratio < best.0 || !ratio.is_finite() {
            best = (if ratio.is_finite() { ratio } else { 0.0 }, (t, y, z));
        }
    }
    best
}

/// Reduce `Y = X + ∫g₁ − ∫g₂ dW` to log-quadratic form `g(t, y, v) = g₁(t, y, g₂⁻¹(t, y, v))`.
/// Verifies the inverse and the lower bound on sampled points; the bundle becomes `(α, β, γ/K, δ/K²)`.
pub fn twodriver_reduce(spec: &DriverSpec, dim: usize) -> Result<DriverSpec> {
    spec.require(Family::TwoDriver)?;
    let map = spec
        .volatility
        .clone()
        .ok_or_else(|| Error::Transform("two-driver spec has no volatility map".into()))?;
    let horizon = spec.coefficients.horizon;
    for (t, y, z) in certification_points(horizon, dim) {
        let v = (map.g2)(t, y, &z);
        let back = (map.g2_inv)(t, y, &v);
        let err = back.iter().zip(&z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if !(err <= 1e-9 * sq(&z).sqrt().max(1.0)) {
            return Err(Error::Transform(format!(
                "g2_inv(g2(z)) != z at t={t}, y={y}, z={z:?}: error {err:e}"
            )));
        }
    }
    let (k_cert, witness) = certify_lower_constant(&map, horizon, dim);
    let k = match map.k_lower {
        Some(k) => {
            if !(k > 0.0) {
                return Err(Error::Transform(format!("declared K = {k} must be positive")));
            }
            if k_cert < k * (1.0 - 1e-12) {
                return Err(Error::Transform(format!(
                    "|g2| >= K y |z| fails for K = {k} at t={}, y={}, z={:?} (ratio {k_cert})",
                    witness.0, witness.1, witness.2
                )));
            }
            k
        }
        None => {
            if !(k_cert > 0.0) {
                return Err(Error::Transform(format!(
                    "g2 vanishes for nonzero z at t={}, y={}, z={:?}",
                    witness.0, witness.1, witness.2
                )));
            }
            k_cert
        }
    };
    let (g1, inv) = (spec.f.clone(), map.g2_inv.clone());
    let g: ScalarFn = Arc::new(move |t, y, v| g1(t, y, &inv(t, y, v)));
    let rec = record(
        "twodriver_reduce",
        Family::TwoDriver,
        Family::LnQ,
        "g(t,y,v) = g1(t,y,g2_inv(t,y,v))",
        PushKind::Volatility,
    );
    let mut out = spec.derived(Family::LnQ, g, spec.coefficients.rescale_z(k), rec);
    out.volatility = Some(map);
    Ok(out)
}

/// Lift a log-quadratic driver to two-driver form `g₁(t, y, z) = g(t, y, g₂(t, y, z))`.
pub fn lnq_to_twodriver(g: &DriverSpec, map: VolatilityMap) -> Result<DriverSpec> {
    g.require(Family::LnQ)?;
    let (h, g2) = (g.f.clone(), map.g2.clone());
    let g1: ScalarFn = Arc::new(move |t, y, z| h(t, y, &g2(t, y, z)));
    let k = map.k_lower.unwrap_or(1.0);
    let rec = record("lnq_to_twodriver", Family::LnQ, Family::TwoDriver, "g1(t,y,z) = g(t,y,g2(t,y,z))", PushKind::VolatilityInverse);
    let mut out = g.derived(Family::TwoDriver, g1, g.coefficients.rescale_z(1.0 / k), rec);
    out.volatility = Some(map);
    Ok(out)
}

/// The volatility map `g₂ = y z` of a geometric equation written in two-driver form.
pub fn proportional_volatility() -> VolatilityMap {
    VolatilityMap {
        g2: Arc::new(|_, y, z| z.iter().map(|v| y * v).collect()),
        g2_inv: Arc::new(|_, y, v| v.iter().map(|x| x / y).collect()),
        k_lower: Some(1.0),
    }
}

/// Two-driver form `g₁ = y f̃(t, y, z)`, `g₂ = y z` of a geometric driver.
pub fn gbsde_to_twodriver(ft: &DriverSpec) -> Result<DriverSpec> {
    ft.require(Family::Geometric)?;
    let g = ft.f.clone();
    let g1: ScalarFn = Arc::new(move |t, y, z| y * g(t, y, z));
    let rec = record("gbsde_to_twodriver", Family::Geometric, Family::TwoDriver, "g1 = y f~(t,y,z), g2 = y z", PushKind::ScaleZByY);
    let mut out = ft.derived(Family::TwoDriver, g1, ft.coefficients.clone(), rec);
    out.volatility = Some(proportional_volatility());
    Ok(out)
}
