//! Serializable report shapes emitted by the CLI. Field order is the JSON
//! order, so serialized output is stable; doubles round-trip exactly.

use cvdc::analysis::{CapacityNoise, CapacityPoint, ExperimentParams};
use cvdc::detection::{to_db, NoiseBudget};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: Option<u64>,
    pub netlist_sha256: String,
}

/// A noise budget with its decibel views attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub v_sum: f64,
    pub v_diff: f64,
    pub v_sum_helped: f64,
    pub g_used: f64,
    pub v_sum_db: f64,
    pub v_diff_db: f64,
    pub v_sum_helped_db: f64,
}

impl From<&NoiseBudget> for BudgetReport {
    fn from(b: &NoiseBudget) -> Self {
        Self {
            v_sum: b.v_sum,
            v_diff: b.v_diff,
            v_sum_helped: b.v_sum_helped,
            g_used: b.g_used,
            v_sum_db: to_db(b.v_sum),
            v_diff_db: to_db(b.v_diff),
            v_sum_helped_db: to_db(b.v_sum_helped),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub nbar: f64,
    pub c_helped: f64,
    pub c_unhelped: f64,
    pub c_coherent: f64,
    pub c_squeezed: f64,
}

impl From<&CapacityPoint> for CapacityReport {
    fn from(c: &CapacityPoint) -> Self {
        Self {
            nbar: c.nbar,
            c_helped: c.helped,
            c_unhelped: c.unhelped,
            c_coherent: c.coherent,
            c_squeezed: c.squeezed,
        }
    }
}

/// Full report of the benchmark run: both computation routes, their largest
/// disagreement, the gain analysis, and a capacity point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub params: ExperimentParams,
    pub closed_form: BudgetReport,
    pub engine: BudgetReport,
    pub max_deviation: f64,
    pub optimal_gain: f64,
    pub v_sum_helped_at_optimal_gain: f64,
    pub squeezing_db: f64,
    pub capacities: CapacityReport,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorReading {
    Bell {
        modes: [usize; 2],
        eta: f64,
        v_sum: f64,
        v_sum_db: f64,
        v_diff: f64,
        v_diff_db: f64,
    },
    Amplitude {
        mode: usize,
        eta: f64,
        variance: f64,
        variance_db: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub n_modes: usize,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub symplectic_eigenvalues: Vec<f64>,
    pub detectors: Vec<DetectorReading>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub params: ExperimentParams,
    pub noise: CapacityNoise,
    pub nbar_helped_vs_coherent: f64,
    pub nbar_unhelped_vs_coherent: f64,
    pub nbar_helped_vs_squeezed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub measured_db: f64,
    pub enl_db: f64,
    pub corrected_linear: f64,
    pub corrected_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub current: String,
    pub analytic: f64,
    pub sampled: f64,
    pub std_error: f64,
    pub z_score: f64,
}

/// Pulse-code round trip over one noise floor: empirical error rate with its
/// 95% Wilson interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerReport {
    pub noise_variance: f64,
    pub depth: f64,
    pub bits: usize,
    pub errors: usize,
    pub ber: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub params: ExperimentParams,
    pub seed: u64,
    pub samples: usize,
    pub estimates: Vec<EstimateReport>,
    pub bpcm: Vec<BerReport>,
    pub provenance: Provenance,
}
