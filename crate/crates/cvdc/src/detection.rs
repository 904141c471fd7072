//! Photocurrent detection: converts a Gaussian state plus detector
//! efficiencies into shot-noise-normalized noise powers.
//!
//! The joint (Bell-type) station imposes a pi/2 relative phase between two
//! bright modes and combines them on a 50/50 splitter, so the sum of the two
//! photodiode currents reads the amplitude sum `(X_i + X_j)/sqrt(2)` and the
//! difference reads the phase difference `(Y_i - Y_j)/sqrt(2)`. Detector
//! inefficiency is the same attenuation channel as optical loss: a current
//! measured with amplitude efficiency `eta` carries `eta` times the mode
//! quadrature plus `sqrt(1 - eta^2)` of an independent detector vacuum.
//!
//! All variances here are linear and SNL-relative: vacuum input gives exactly
//! 1. Decibels are `10*log10` of that ratio throughout.

use crate::gaussian::{GaussianError, GaussianState, QuadratureForm};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectionError {
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error("parameter {name} = {value} outside its domain")]
    ParamOutOfDomain { name: &'static str, value: f64 },
    #[error("electronics level {enl} at or above the measured power {measured}")]
    SignalBelowElectronicsFloor { measured: f64, enl: f64 },
    #[error("electronics level {0} must sit below the shot noise limit")]
    ElectronicsAboveShotNoise(f64),
}

/// Linear power ratio to decibels.
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Decibels to linear power ratio.
pub fn from_db(db: f64) -> f64 {
    10.0f64.powf(db / 10.0)
}

/// A detected photocurrent: the post-efficiency quadrature form it reads on
/// the pre-detection state, the detector-vacuum power admixed by the
/// inefficiency, the shot-noise reference of the ideal form, and the
/// resulting SNL-normalized variance.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredCurrent {
    form: QuadratureForm,
    vacuum_power: f64,
    snl_ref: f64,
    variance_linear: f64,
}

impl MeasuredCurrent {
    fn measure(
        state: &GaussianState,
        ideal_form: QuadratureForm,
        eta: f64,
    ) -> Result<Self, DetectionError> {
        check_unit_interval("eta", eta)?;
        let snl_ref = ideal_form.snl_reference();
        let form = ideal_form.scaled(eta);
        let vacuum_power = (1.0 - eta * eta) * snl_ref;
        let raw = state.variance_of(&form)? + vacuum_power;
        Ok(Self {
            form,
            vacuum_power,
            snl_ref,
            variance_linear: raw / snl_ref,
        })
    }

    /// Efficiency-scaled coefficients of the current on the circuit state.
    pub fn form(&self) -> &QuadratureForm {
        &self.form
    }

    /// Vacuum variance of the ideal (pre-efficiency) form.
    pub fn snl_reference(&self) -> f64 {
        self.snl_ref
    }

    /// SNL-normalized noise power of the current.
    pub fn variance_linear(&self) -> f64 {
        self.variance_linear
    }

    pub fn variance_db(&self) -> f64 {
        to_db(self.variance_linear)
    }
}

fn check_unit_interval(name: &'static str, value: f64) -> Result<(), DetectionError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(DetectionError::ParamOutOfDomain { name, value });
    }
    Ok(())
}

/// Sum form `(X_i + X_j)/sqrt(2)` read by the joint station (0-based modes).
pub fn bell_sum_form(n_modes: usize, i: usize, j: usize) -> QuadratureForm {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    QuadratureForm::zeros(n_modes).with_x(i, c).with_x(j, c)
}

/// Difference form `(Y_i - Y_j)/sqrt(2)` read by the joint station.
pub fn bell_diff_form(n_modes: usize, i: usize, j: usize) -> QuadratureForm {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    QuadratureForm::zeros(n_modes).with_y(i, c).with_y(j, -c)
}

/// Joint sum and difference currents of modes `i`, `j` (0-based) measured
/// with detector amplitude efficiency `eta`.
pub fn bell_currents(
    state: &GaussianState,
    i: usize,
    j: usize,
    eta: f64,
) -> Result<(MeasuredCurrent, MeasuredCurrent), DetectionError> {
    let n = state.n_modes();
    let sum = MeasuredCurrent::measure(state, bell_sum_form(n, i, j), eta)?;
    let diff = MeasuredCurrent::measure(state, bell_diff_form(n, i, j), eta)?;
    Ok((sum, diff))
}

/// SNL-normalized variances `(v_sum, v_diff)` of the joint station.
pub fn bell_variances(
    state: &GaussianState,
    i: usize,
    j: usize,
    eta: f64,
) -> Result<(f64, f64), DetectionError> {
    let (sum, diff) = bell_currents(state, i, j, eta)?;
    Ok((sum.variance_linear(), diff.variance_linear()))
}

/// Amplitude-quadrature current of mode `i` (0-based) with efficiency `eta`.
pub fn claire_current(
    state: &GaussianState,
    i: usize,
    eta: f64,
) -> Result<MeasuredCurrent, DetectionError> {
    let form = QuadratureForm::zeros(state.n_modes()).with_x(i, 1.0);
    MeasuredCurrent::measure(state, form, eta)
}

/// Feed-forward combination: adds the controller current, scaled by the
/// electronic gain `g * xi2 / xi1`, onto the sum current. The variance is
/// computed from the joint covariance on `state` (the two currents are
/// correlated through the entangled modes), and stays normalized to the sum
/// current's own shot-noise reference. `xi1`, `xi2` are the amplitude
/// transmissivities of the two arms.
pub fn feedforward_combine(
    state: &GaussianState,
    sum: &MeasuredCurrent,
    controller: &MeasuredCurrent,
    g: f64,
    xi1: f64,
    xi2: f64,
) -> Result<MeasuredCurrent, DetectionError> {
    if !g.is_finite() || g < 0.0 {
        return Err(DetectionError::ParamOutOfDomain {
            name: "g",
            value: g,
        });
    }
    if !(xi1 > 0.0 && xi1 <= 1.0) {
        return Err(DetectionError::ParamOutOfDomain {
            name: "xi1",
            value: xi1,
        });
    }
    check_unit_interval("xi2", xi2)?;
    let g_elec = g * xi2 / xi1;
    let form = sum.form.add(&controller.form.scaled(g_elec))?;
    let vacuum_power = sum.vacuum_power + g_elec * g_elec * controller.vacuum_power;
    let raw = state.variance_of(&form)? + vacuum_power;
    Ok(MeasuredCurrent {
        form,
        vacuum_power,
        snl_ref: sum.snl_ref,
        variance_linear: raw / sum.snl_ref,
    })
}

/// Remove an additive electronics noise floor from a measured SNL-relative
/// power: both the trace and the shot-noise reference contain `enl`, so the
/// corrected power is `(measured - enl) / (1 - enl)`.
pub fn enl_correct(measured_linear: f64, enl_linear: f64) -> Result<f64, DetectionError> {
    if !measured_linear.is_finite() || measured_linear <= 0.0 {
        return Err(DetectionError::ParamOutOfDomain {
            name: "measured",
            value: measured_linear,
        });
    }
    if !enl_linear.is_finite() || enl_linear < 0.0 {
        return Err(DetectionError::ParamOutOfDomain {
            name: "enl",
            value: enl_linear,
        });
    }
    if enl_linear >= 1.0 {
        return Err(DetectionError::ElectronicsAboveShotNoise(enl_linear));
    }
    if enl_linear >= measured_linear {
        return Err(DetectionError::SignalBelowElectronicsFloor {
            measured: measured_linear,
            enl: enl_linear,
        });
    }
    Ok((measured_linear - enl_linear) / (1.0 - enl_linear))
}

/// The three benchmark noise powers produced by the receiver station, linear
/// and SNL-relative, together with the feed-forward gain they were taken at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    /// Amplitude-sum noise power without the controller's help.
    pub v_sum: f64,
    /// Phase-difference noise power.
    pub v_diff: f64,
    /// Amplitude-sum noise power with the controller current fed forward.
    pub v_sum_helped: f64,
    /// Feed-forward gain used for `v_sum_helped`.
    pub g_used: f64,
}

impl NoiseBudget {
    pub fn v_sum_db(&self) -> f64 {
        to_db(self.v_sum)
    }

    pub fn v_diff_db(&self) -> f64 {
        to_db(self.v_diff)
    }

    pub fn v_sum_helped_db(&self) -> f64 {
        to_db(self.v_sum_helped)
    }

    /// Largest absolute difference of the three powers against `other`.
    pub fn max_deviation(&self, other: &NoiseBudget) -> f64 {
        (self.v_sum - other.v_sum)
            .abs()
            .max((self.v_diff - other.v_diff).abs())
            .max((self.v_sum_helped - other.v_sum_helped).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_experiment_setup, run_circuit, SetupParams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const R_EXP: f64 = 0.674;

    fn experiment_state(params: &SetupParams) -> GaussianState {
        run_circuit(&build_experiment_setup(params).unwrap()).unwrap()
    }

    fn ideal(r: f64) -> SetupParams {
        SetupParams {
            r,
            xi1_sq: 1.0,
            xi2_sq: 1.0,
            eta_sq: 1.0,
            g: std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    #[test]
    fn vacuum_bell_station_sits_at_shot_noise() {
        let vac = GaussianState::vacuum(3).unwrap();
        for eta in [1.0, 0.9746794344808963, 0.5, 0.0] {
            let (v_sum, v_diff) = bell_variances(&vac, 0, 1, eta).unwrap();
            assert_relative_eq!(v_sum, 1.0, epsilon = 1e-12);
            assert_relative_eq!(v_diff, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn vacuum_amplitude_detector_sits_at_shot_noise() {
        let vac = GaussianState::vacuum(3).unwrap();
        for eta in [1.0, 0.8, 0.1] {
            let c = claire_current(&vac, 2, eta).unwrap();
            assert_relative_eq!(c.variance_linear(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn experimental_bell_variances_match_quoted_values() {
        let p = SetupParams::default();
        let state = experiment_state(&p);
        let (v_sum, v_diff) = bell_variances(&state, 0, 1, p.eta()).unwrap();
        assert!((v_sum - 0.760).abs() < 5e-4, "v_sum = {v_sum}");
        assert!((v_diff - 0.479).abs() < 5e-4, "v_diff = {v_diff}");
    }

    #[test]
    fn ideal_bell_variances_match_scalar_forms() {
        let state = experiment_state(&ideal(R_EXP));
        let (v_sum, v_diff) = bell_variances(&state, 0, 1, 1.0).unwrap();
        let e2r = (2.0 * R_EXP).exp();
        let f2r = (-2.0 * R_EXP).exp();
        assert_relative_eq!(v_sum, (e2r + 8.0 * f2r + 3.0) / 12.0, epsilon = 1e-12);
        assert_relative_eq!(v_diff, (3.0 * f2r + 1.0) / 4.0, epsilon = 1e-12);
        assert!((v_sum - 0.744).abs() < 5e-4);
        assert!((v_diff - 0.445).abs() < 5e-4);
    }

    #[test]
    fn ideal_controller_current_matches_component_decomposition() {
        // Coefficients (1/sqrt3, -1/sqrt6, 1/sqrt2) on the squeezed,
        // antisqueezed and vacuum components of the controller mode.
        let state = experiment_state(&ideal(R_EXP));
        let c = claire_current(&state, 2, 1.0).unwrap();
        let expected = (-2.0 * R_EXP).exp() / 3.0 + (2.0 * R_EXP).exp() / 6.0 + 0.5;
        assert_relative_eq!(c.variance_linear(), expected, epsilon = 1e-12);
        assert!((expected - 1.2282).abs() < 5e-4);
    }

    #[test]
    fn controller_current_at_zero_squeezing_is_shot_noise() {
        let state = experiment_state(&ideal(0.0));
        let c = claire_current(&state, 2, 1.0).unwrap();
        assert_relative_eq!(c.variance_linear(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_gain_feedforward_returns_sum_current() {
        let p = SetupParams::default();
        let state = experiment_state(&p);
        let (sum, _) = bell_currents(&state, 0, 1, p.eta()).unwrap();
        let ctrl = claire_current(&state, 2, p.eta()).unwrap();
        let combined = feedforward_combine(&state, &sum, &ctrl, 0.0, p.xi1(), p.xi2()).unwrap();
        assert_relative_eq!(
            combined.variance_linear(),
            sum.variance_linear(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn experimental_feedforward_matches_quoted_value() {
        let p = SetupParams::default();
        let state = experiment_state(&p);
        let (sum, _) = bell_currents(&state, 0, 1, p.eta()).unwrap();
        let ctrl = claire_current(&state, 2, p.eta()).unwrap();
        let helped = feedforward_combine(&state, &sum, &ctrl, p.g, p.xi1(), p.xi2()).unwrap();
        assert!(
            (helped.variance_linear() - 0.469).abs() < 5e-4,
            "helped = {}",
            helped.variance_linear()
        );
    }

    #[test]
    fn feedforward_at_optimal_gain_matches_minimized_value() {
        let p = SetupParams::default();
        let state = experiment_state(&p);
        let (sum, _) = bell_currents(&state, 0, 1, p.eta()).unwrap();
        let ctrl = claire_current(&state, 2, p.eta()).unwrap();
        let helped = feedforward_combine(&state, &sum, &ctrl, 0.53369, p.xi1(), p.xi2()).unwrap();
        assert!(
            (helped.variance_linear() - 0.4346).abs() < 5e-4,
            "helped = {}",
            helped.variance_linear()
        );
    }

    #[test]
    fn ideal_feedforward_collapses_to_pure_squeezing_decay() {
        for k in 0..=8 {
            let r = 0.25 * k as f64;
            let p = ideal(r);
            let state = experiment_state(&p);
            let (sum, _) = bell_currents(&state, 0, 1, 1.0).unwrap();
            let ctrl = claire_current(&state, 2, 1.0).unwrap();
            let helped = feedforward_combine(&state, &sum, &ctrl, p.g, 1.0, 1.0).unwrap();
            assert!(
                (helped.variance_linear() - 1.5 * (-2.0 * r).exp()).abs() < 1e-12,
                "r={r}"
            );
        }
    }

    #[test]
    fn feedforward_rejects_bad_parameters() {
        let p = SetupParams::default();
        let state = experiment_state(&p);
        let (sum, _) = bell_currents(&state, 0, 1, p.eta()).unwrap();
        let ctrl = claire_current(&state, 2, p.eta()).unwrap();
        assert!(feedforward_combine(&state, &sum, &ctrl, f64::NAN, p.xi1(), p.xi2()).is_err());
        assert!(feedforward_combine(&state, &sum, &ctrl, -0.2, p.xi1(), p.xi2()).is_err());
        assert!(feedforward_combine(&state, &sum, &ctrl, 0.5, 0.0, p.xi2()).is_err());
    }

    #[test]
    fn bell_station_rejects_bad_efficiency() {
        let vac = GaussianState::vacuum(3).unwrap();
        assert!(bell_variances(&vac, 0, 1, 1.2).is_err());
        assert!(bell_variances(&vac, 0, 1, -0.1).is_err());
    }

    #[test]
    fn enl_correction_reproduces_trace_bookkeeping() {
        let enl = from_db(-7.83);
        let corrected_two = enl_correct(from_db(-0.969), enl).unwrap();
        let corrected_three = enl_correct(from_db(-2.540), enl).unwrap();
        assert!((corrected_two - 0.7604).abs() < 5e-4, "{corrected_two}");
        assert!((corrected_three - 0.4699).abs() < 5e-4, "{corrected_three}");
        assert!((to_db(corrected_two) + 1.19).abs() < 0.01);
        assert!((to_db(corrected_three) + 3.28).abs() < 0.01);
        let gap = to_db(corrected_two) - to_db(corrected_three);
        assert!((gap - 2.09).abs() < 0.01, "gap = {gap}");
    }

    #[test]
    fn enl_correction_fixes_shot_noise_reference() {
        for enl in [0.0, 0.1, from_db(-7.83)] {
            assert_relative_eq!(enl_correct(1.0, enl).unwrap(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn enl_correction_rejects_degenerate_input() {
        assert!(matches!(
            enl_correct(0.2, 0.2),
            Err(DetectionError::SignalBelowElectronicsFloor { .. })
        ));
        assert!(matches!(
            enl_correct(1.5, 1.2),
            Err(DetectionError::ElectronicsAboveShotNoise(_))
        ));
        assert!(enl_correct(0.5, -0.1).is_err());
    }

    #[test]
    fn feedforward_minimizer_tracks_closed_form_gain_across_params() {
        // The measured variance is a convex quadratic in g; its numerical
        // argmin must land on the closed-form optimal gain for any mix of
        // squeezing and efficiencies.
        let golden_min = |f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64| -> f64 {
            let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
            let (mut a, mut b) = (hi - inv_phi * (hi - lo), lo + inv_phi * (hi - lo));
            let (mut fa, mut fb) = (f(a), f(b));
            while hi - lo > 1e-9 {
                if fa < fb {
                    hi = b;
                    b = a;
                    fb = fa;
                    a = hi - inv_phi * (hi - lo);
                    fa = f(a);
                } else {
                    lo = a;
                    a = b;
                    fa = fb;
                    b = lo + inv_phi * (hi - lo);
                    fb = f(b);
                }
            }
            0.5 * (lo + hi)
        };
        for (r, xi1_sq, xi2_sq, eta_sq) in [
            (0.3, 0.987, 0.937, 0.95),
            (0.674, 0.987, 0.937, 0.95),
            (1.2, 0.9, 0.8, 0.85),
            (2.0, 1.0, 1.0, 1.0),
            (0.674, 0.95, 0.99, 0.9),
        ] {
            let p = SetupParams {
                r,
                xi1_sq,
                xi2_sq,
                eta_sq,
                g: std::f64::consts::FRAC_1_SQRT_2,
            };
            let state = experiment_state(&p);
            let (sum, _) = bell_currents(&state, 0, 1, p.eta()).unwrap();
            let ctrl = claire_current(&state, 2, p.eta()).unwrap();
            let variance_at = |g: f64| {
                feedforward_combine(&state, &sum, &ctrl, g, p.xi1(), p.xi2())
                    .unwrap()
                    .variance_linear()
            };
            let numeric = golden_min(&variance_at, 0.0, 2.0);
            let formula = crate::analysis::optimal_gain(&crate::analysis::ExperimentParams {
                r,
                xi1_sq,
                xi2_sq,
                eta_sq,
                g: p.g,
                v_xs: 0.0,
                v_ys: 0.0,
                sigma_sq: 0.0,
            })
            .unwrap();
            assert!(
                (numeric - formula).abs() < 1e-6,
                "r={r}, xi1_sq={xi1_sq}, xi2_sq={xi2_sq}, eta_sq={eta_sq}: argmin {numeric} vs formula {formula}"
            );
        }
    }

    #[test]
    fn helped_current_never_exceeds_plain_sum_at_optimal_gain() {
        for k in 0..=20 {
            let r = 0.1 * k as f64;
            let p = SetupParams {
                r,
                ..SetupParams::default()
            };
            let state = experiment_state(&p);
            let (sum, _) = bell_currents(&state, 0, 1, p.eta()).unwrap();
            let ctrl = claire_current(&state, 2, p.eta()).unwrap();
            let g_opt = crate::analysis::optimal_gain(&crate::analysis::ExperimentParams {
                r,
                xi1_sq: p.xi1_sq,
                xi2_sq: p.xi2_sq,
                eta_sq: p.eta_sq,
                g: p.g,
                v_xs: 0.0,
                v_ys: 0.0,
                sigma_sq: 0.0,
            })
            .unwrap();
            let helped = feedforward_combine(&state, &sum, &ctrl, g_opt, p.xi1(), p.xi2())
                .unwrap()
                .variance_linear();
            if r == 0.0 {
                assert_relative_eq!(g_opt, 0.0, epsilon = 1e-15);
                assert_relative_eq!(helped, sum.variance_linear(), epsilon = 1e-12);
            } else {
                assert!(helped < sum.variance_linear(), "r = {r}");
            }
        }
    }

    proptest! {
        #[test]
        fn enl_correction_is_monotone(
            measured in 0.3f64..3.0,
            delta in 0.01f64..0.5,
            enl in 0.0f64..0.25,
        ) {
            let lower = enl_correct(measured, enl).unwrap();
            let higher = enl_correct(measured + delta, enl).unwrap();
            prop_assert!(higher > lower);
            // Larger floor implies smaller corrected value for measured < 1.
            if measured < 1.0 && enl + 0.02 < measured {
                let more_floor = enl_correct(measured, enl + 0.02).unwrap();
                prop_assert!(more_floor < lower);
            }
            prop_assert!((enl_correct(measured, 0.0).unwrap() - measured).abs() < 1e-15);
        }
    }
}
