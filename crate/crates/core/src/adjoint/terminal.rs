use super::{AdjointSettings, AdjointState, CostWeights, DesiredState, TerminalForm};
use crate::error::Result;
use crate::levelset::{
    compute_curvature, compute_normals, extend_velocity, gradient_of, sample_field,
    ExtensionSettings, LevelSet, NormalField, PhaseGeometry,
};

pub fn terminal_theta(temperature: &[f64], desired: &DesiredState, weights: &CostWeights) -> Vec<f64> {
    temperature
        .iter()
        .zip(&desired.temperature)
        .map(|(t, d)| weights.beta1 * (t - d))
        .collect()
}

fn gradient_field(ls: &LevelSet, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let g = ls.grid();
    let mut gx = vec![0.0; g.len()];
    let mut gy = vec![0.0; g.len()];
    for k in 0..g.len() {
        let (i, j) = g.coords(k);
        let (a, b) = gradient_of(g, f, i, j);
        gx[k] = a;
        gy[k] = b;
    }
    (gx, gy)
}

/// `psi = -(beta2/2) (d_n g + kappa g) / |grad phi|` at every segment
/// midpoint of the final front.
pub fn terminal_psi_segments(
    ls: &LevelSet,
    geom: &PhaseGeometry,
    normals: &NormalField,
    desired: &DesiredState,
    weights: &CostWeights,
    form: TerminalForm,
) -> Vec<f64> {
    if weights.beta2 == 0.0 || geom.segments.is_empty() {
        return vec![0.0; geom.segments.len()];
    }
    let g = *ls.grid();
    let phi = ls.phi();
    let (kappa, _) = compute_curvature(ls);
    let (fx, fy) = gradient_field(ls, phi);
    let (dx, dy) = gradient_field(ls, &desired.phi);
    geom.segments
        .iter()
        .map(|s| {
            let [x, y] = s.midpoint();
            let at = |f: &[f64]| sample_field(&g, f, x, y);
            let n = s.normal;
            let pf = ls.sample(x, y);
            let pd = at(&desired.phi);
            let dn_f = at(&fx) * n[0] + at(&fy) * n[1];
            let dn_d = at(&dx) * n[0] + at(&dy) * n[1];
            let (gval, dng) = match form {
                TerminalForm::Desired => (pd * pd, 2.0 * pd * dn_d),
                TerminalForm::Difference => {
                    let e = pf - pd;
                    (e * e, 2.0 * e * (dn_f - dn_d))
                }
                TerminalForm::Displayed => (pf * pf, 2.0 * pf * dn_f),
            };
            let grad = at(&normals.grad_norm).max(1e-8);
            -0.5 * weights.beta2 * (dng + at(&kappa) * gval) / grad
        })
        .collect()
}

/// Adjoint state at the final time: `Theta = beta1 (T - T_d)` and the
/// front values of `psi` extended along the normals.
pub fn terminal_state(
    ls: &LevelSet,
    temperature: &[f64],
    time: f64,
    desired: &DesiredState,
    weights: &CostWeights,
    settings: &AdjointSettings,
    extension: &ExtensionSettings,
) -> Result<AdjointState> {
    let geom = PhaseGeometry::build(ls);
    let normals = compute_normals(ls);
    let seg = terminal_psi_segments(ls, &geom, &normals, desired, weights, settings.terminal_form);
    let psi = if seg.iter().all(|v| *v == 0.0) {
        ls.grid().zeros()
    } else {
        extend_velocity(ls, &geom, &normals, &seg, extension)?.field
    };
    Ok(AdjointState {
        theta: terminal_theta(temperature, desired, weights),
        psi,
        time,
    })
}
