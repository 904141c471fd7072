//! Small numeric utilities: bracketed bisection and compensated summation.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BisectError {
    #[error("no sign change on [{lo}, {hi}] (f(lo)={flo}, f(hi)={fhi})")]
    NoSignChange {
        lo: f64,
        hi: f64,
        flo: f64,
        fhi: f64,
    },
    #[error("invalid bracket [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },
}

/// Bracketed bisection: returns `x` with `f(x) = 0` located to within `tol`
/// (absolute, on `x`). Requires `f(lo)` and `f(hi)` to have opposite signs.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64, BisectError>
where
    F: Fn(f64) -> f64,
{
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(BisectError::InvalidBracket { lo, hi });
    }
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(BisectError::NoSignChange { lo, hi, flo, fhi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket exhausted at floating-point resolution
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Neumaier-compensated sum. Keeps the running error of each addition in a
/// separate accumulator so the result does not depend on magnitude ordering
/// beyond one ulp.
pub fn compensated_sum<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let root = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((root - std::f64::consts::SQRT_2).abs() < 1e-10);
    }

    #[test]
    fn bisect_rejects_same_sign_bracket() {
        let err = bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-9).unwrap_err();
        assert!(matches!(err, BisectError::NoSignChange { .. }));
    }

    #[test]
    fn bisect_rejects_reversed_bracket() {
        let err = bisect(|x| x, 1.0, -1.0, 1e-9).unwrap_err();
        assert!(matches!(err, BisectError::InvalidBracket { .. }));
    }

    #[test]
    fn bisect_honors_exact_endpoint_roots() {
        assert_eq!(bisect(|x| x, 0.0, 1.0, 1e-9).unwrap(), 0.0);
        assert_eq!(bisect(|x| x - 1.0, 0.0, 1.0, 1e-9).unwrap(), 1.0);
    }

    #[test]
    fn compensated_sum_recovers_cancelled_tail() {
        // 1 + 1e16 - 1e16 loses the leading 1 with naive summation order.
        let values = [1.0, 1e16, -1e16];
        assert_eq!(compensated_sum(values.iter().copied()), 1.0);
    }

    #[test]
    fn compensated_sum_matches_exact_small_case() {
        let values: Vec<f64> = (1..=1000).map(|k| k as f64).collect();
        assert_eq!(compensated_sum(values.iter().copied()), 500_500.0);
    }
}
