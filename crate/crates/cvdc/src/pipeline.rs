//! Glue between the scalar closed forms and the Gaussian circuit engine.
//!
//! [`engine_noise_budget`] measures the reference setup end to end: build the
//! netlist, evolve vacuum through it, read the joint and controller currents,
//! feed the controller current forward, and add the modulation terms the same
//! way the closed forms do. Agreement of this route with
//! [`crate::analysis::closed_form_variances`] is the toolkit's central
//! cross-validation.

use crate::analysis::ExperimentParams;
use crate::circuit::{build_experiment_setup, run_circuit, SetupParams};
use crate::detection::{bell_currents, claire_current, feedforward_combine, NoiseBudget};
use crate::gaussian::{GaussianState, QuadratureForm};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Gaussian(#[from] crate::gaussian::GaussianError),
    #[error(transparent)]
    Detection(#[from] crate::detection::DetectionError),
    #[error(transparent)]
    Analysis(#[from] crate::analysis::AnalysisError),
}

/// Circuit-level parameters of an experiment parameter set.
pub fn setup_params(p: &ExperimentParams) -> SetupParams {
    SetupParams {
        r: p.r,
        xi1_sq: p.xi1_sq,
        xi2_sq: p.xi2_sq,
        eta_sq: p.eta_sq,
        g: p.g,
    }
}

/// State at the detection plane (before detector efficiencies).
pub fn experiment_state(p: &ExperimentParams) -> Result<GaussianState, PipelineError> {
    p.validate()?;
    let spec = build_experiment_setup(&setup_params(p))?;
    Ok(run_circuit(&spec)?)
}

/// State with the detector efficiency applied as a channel on every mode;
/// plain quadrature forms on it reproduce the measured currents, which is
/// what the Monte Carlo sampler draws from.
pub fn detected_state(p: &ExperimentParams) -> Result<GaussianState, PipelineError> {
    let eta = setup_params(p).eta();
    let mut state = experiment_state(p)?;
    for mode in 0..state.n_modes() {
        state = state.loss(mode, eta)?;
    }
    Ok(state)
}

/// The three current forms on the detected state: amplitude sum, phase
/// difference, and the fed-forward sum carrying the electronic gain on the
/// controller quadrature.
pub fn detected_forms(p: &ExperimentParams) -> (QuadratureForm, QuadratureForm, QuadratureForm) {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let sum = QuadratureForm::zeros(3).with_x(0, c).with_x(1, c);
    let diff = QuadratureForm::zeros(3).with_y(0, c).with_y(1, -c);
    let g_elec = p.g * (p.xi2_sq / p.xi1_sq).sqrt();
    let helped = sum.clone().with_x(2, g_elec);
    (sum, diff, helped)
}

/// Noise budget measured through the circuit engine. Modulation variances
/// enter as the same `V/2` terms the closed forms carry, calibrated at the
/// detection plane.
pub fn engine_noise_budget(p: &ExperimentParams) -> Result<NoiseBudget, PipelineError> {
    let state = experiment_state(p)?;
    engine_noise_budget_on(&state, p)
}

/// Same measurement on an already-evolved state (modes: sender 0, receiver 1,
/// controller 2).
pub fn engine_noise_budget_on(
    state: &GaussianState,
    p: &ExperimentParams,
) -> Result<NoiseBudget, PipelineError> {
    let params = setup_params(p);
    let eta = params.eta();
    let (sum, diff) = bell_currents(state, 0, 1, eta)?;
    let controller = claire_current(state, 2, eta)?;
    let helped = feedforward_combine(state, &sum, &controller, p.g, params.xi1(), params.xi2())?;
    Ok(NoiseBudget {
        v_sum: sum.variance_linear() + 0.5 * p.v_xs,
        v_diff: diff.variance_linear() + 0.5 * p.v_ys,
        v_sum_helped: helped.variance_linear() + 0.5 * p.v_xs,
        g_used: p.g,
    })
}
