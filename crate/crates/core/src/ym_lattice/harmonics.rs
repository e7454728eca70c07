use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{kernel, GaugeField};
use crate::sphere_mesh::Vec3;
use crate::{Error, Result};

pub const MAX_DEGREE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeAmplitude {
    pub l: usize,
    pub m: i64,
    pub amplitude: f64,
}

/// Orthonormal real spherical harmonic `Y_lm` at a unit vector, without the
/// Condon-Shortley phase. Negative `m` selects the `sin(|m|φ)` branch.
pub fn real_spherical_harmonic(l: usize, m: i64, x: Vec3) -> f64 {
    let am = m.unsigned_abs() as usize;
    assert!(am <= l, "|m| must not exceed l");
    let z = x[2].clamp(-1.0, 1.0);
    let phi = x[1].atan2(x[0]);
    let s = (1.0 - z * z).max(0.0).sqrt();

    // Normalized associated Legendre functions, upward in l from P̄_mm.
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for k in 1..=am {
        pmm *= ((2 * k + 1) as f64 / (2 * k) as f64).sqrt() * s;
    }
    let value = if l == am {
        pmm
    } else {
        let mut p_prev = pmm;
        let mut p = z * ((2 * am + 3) as f64).sqrt() * pmm;
        for ll in am + 2..=l {
            let (lf, mf) = (ll as f64, am as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            let next = a * (z * p - b * p_prev);
            p_prev = p;
            p = next;
        }
        p
    };
    match m {
        0 => value,
        m if m > 0 => std::f64::consts::SQRT_2 * value * (am as f64 * phi).cos(),
        _ => std::f64::consts::SQRT_2 * value * (am as f64 * phi).sin(),
    }
}

/// Projection of the scalar curvature `H_f` of a rank-one field onto the
/// real spherical harmonics with `l ≤ l_max`, by area-weighted quadrature
/// at face centroids: `a_lm = Σ_f area_f H_f Y_lm(c_f)`.
pub fn heat_mode_projection(field: &GaugeField, l_max: usize) -> Result<Vec<ModeAmplitude>> {
    if field.rank() != 1 {
        return Err(Error::NotApplicable(format!("mode projection needs rank 1, got {}", field.rank())));
    }
    if l_max > MAX_DEGREE {
        return Err(Error::Domain(format!("l_max {l_max} exceeds {MAX_DEGREE}")));
    }
    let mesh = field.mesh();
    let curv = kernel::curvature::<1>(mesh, field.links_flat())?;
    let mut out = Vec::with_capacity((l_max + 1) * (l_max + 1));
    for l in 0..=l_max {
        for m in -(l as i64)..=(l as i64) {
            let mut acc = 0.0;
            for (c, x) in curv.iter().zip(mesh.centroids()) {
                acc += c.theta[0] * real_spherical_harmonic(l, m, *x);
            }
            out.push(ModeAmplitude { l, m, amplitude: acc });
        }
    }
    Ok(out)
}

/// `‖a_l‖ = √(Σ_m a_lm²)` for each degree present.
pub fn mode_norms(amps: &[ModeAmplitude]) -> Vec<f64> {
    let l_max = amps.iter().map(|a| a.l).max().unwrap_or(0);
    let mut out = vec![0.0; l_max + 1];
    for a in amps {
        out[a.l] += a.amplitude * a.amplitude;
    }
    out.iter_mut().for_each(|v| *v = v.sqrt());
    out
}
