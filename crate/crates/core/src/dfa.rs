//! First-order detrended fluctuation analysis.
//!
//! The series is centred and integrated into a profile, the profile is cut
//! into non-overlapping boxes of length `n` from the front, an OLS line is
//! removed from each box, and the RMS of the residuals gives `F(n)`. The
//! Hurst exponent is the slope of `ln F(n)` against `ln n`.

use thiserror::Error;

use crate::Scalar;

/// Smallest box length for which a detrended residual is informative.
pub const MIN_SCALE: usize = 4;
/// Shortest series [`estimate_hurst`] accepts: one box of [`MIN_SCALE`] at `N / 4`.
pub const MIN_SERIES_LEN: usize = 4 * MIN_SCALE;
/// Fewest usable scales in a log-log fit.
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DfaError {
    #[error("series has {len} observations, at least {min} required")]
    TooShort { len: usize, min: usize },
    #[error("series contains a non-finite value at {index}")]
    NonFinite { index: usize },
    #[error("scale {scale} outside [{min}, {max}]")]
    ScaleOutOfRange { scale: usize, min: usize, max: usize },
    #[error("infeasible scale grid: {0}")]
    Grid(String),
    #[error("{usable} usable fluctuation points, at least {required} required")]
    TooFewPoints { usable: usize, required: usize },
}

/// Integrated, mean-centred series `y(i) = Σ_{k≤i} (x(k) - x̄)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DfaProfile<T> {
    pub values: Vec<T>,
    pub source_mean: T,
}

impl<T> DfaProfile<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationPoint<T> {
    pub scale: usize,
    pub fluctuation: T,
    pub boxes_used: usize,
}

/// Power-law fit `F(n) ≈ c · n^H` in log-log space.
#[derive(Debug, Clone, PartialEq)]
pub struct HurstFit<T> {
    pub hurst: T,
    pub log_constant: T,
    /// Points entering the regression (zero fluctuations removed).
    pub points: Vec<FluctuationPoint<T>>,
    pub r_squared: T,
    /// Points discarded because `F(n) = 0`.
    pub dropped_points: usize,
}

impl<T: Scalar> HurstFit<T> {
    pub fn constant(&self) -> T {
        self.log_constant.exp()
    }

    /// `true` when `H` falls outside `[0, 1]`; such fits are kept but suspect.
    pub fn is_flagged(&self) -> bool {
        self.hurst < T::zero() || self.hurst > T::one()
    }
}

/// Scale grid used by [`estimate_hurst`]. `max_scale = None` means `N / 4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DfaConfig {
    pub min_scale: usize,
    pub max_scale: Option<usize>,
    pub scale_count: usize,
}

impl Default for DfaConfig {
    fn default() -> Self {
        Self {
            min_scale: MIN_SCALE,
            max_scale: None,
            scale_count: 20,
        }
    }
}

pub fn profile<T: Scalar>(series: &[T]) -> Result<DfaProfile<T>, DfaError> {
    if series.is_empty() {
        return Err(DfaError::TooShort { len: 0, min: 1 });
    }
    if let Some(index) = series.iter().position(|x| !x.is_finite()) {
        return Err(DfaError::NonFinite { index });
    }
    let mean = series.iter().copied().sum::<T>() / T::of_usize(series.len());
    let values = series
        .iter()
        .scan(T::zero(), |acc, &x| {
            *acc = *acc + (x - mean);
            Some(*acc)
        })
        .collect();
    Ok(DfaProfile {
        values,
        source_mean: mean,
    })
}

/// Sum of squared residuals after removing the OLS line through
/// `(0, y_0), (1, y_1), ...`.
fn box_residual_ss<T: Scalar>(y: &[T]) -> T {
    let n = y.len();
    let nf = T::of_usize(n);
    let x_mean = T::of_usize(n - 1) / T::of(2.0);
    // Σ (x - x̄)² for x = 0..n-1
    let sxx = nf * (nf * nf - T::one()) / T::of(12.0);
    let y_mean = y.iter().copied().sum::<T>() / nf;
    let sxy = y
        .iter()
        .enumerate()
        .map(|(i, &v)| (T::of_usize(i) - x_mean) * (v - y_mean))
        .sum::<T>();
    let slope = sxy / sxx;
    y.iter()
        .enumerate()
        .map(|(i, &v)| {
            let r = v - y_mean - slope * (T::of_usize(i) - x_mean);
            r * r
        })
        .sum()
}

/// `F(n)` over `floor(N / n)` front-anchored boxes. The trailing remainder is
/// excluded and the mean square is taken over covered points only.
pub fn fluctuation<T: Scalar>(
    profile: &DfaProfile<T>,
    scale: usize,
) -> Result<FluctuationPoint<T>, DfaError> {
    let max = profile.len() / 4;
    if scale < MIN_SCALE || scale > max {
        return Err(DfaError::ScaleOutOfRange {
            scale,
            min: MIN_SCALE,
            max,
        });
    }
    let boxes = profile.len() / scale;
    let ss: T = profile
        .values
        .chunks_exact(scale)
        .map(box_residual_ss)
        .sum();
    let covered = T::of_usize(boxes * scale);
    Ok(FluctuationPoint {
        scale,
        fluctuation: (ss / covered).sqrt(),
        boxes_used: boxes,
    })
}

/// Roughly log-spaced integer scales in `[min_scale, max_scale]`, both
/// endpoints included, deduplicated and ascending. At most `count` entries.
pub fn scale_grid(
    length: usize,
    min_scale: usize,
    max_scale: usize,
    count: usize,
) -> Result<Vec<usize>, DfaError> {
    if min_scale < MIN_SCALE {
        return Err(DfaError::Grid(format!(
            "min_scale {min_scale} below {MIN_SCALE}"
        )));
    }
    if max_scale > length / 4 {
        return Err(DfaError::Grid(format!(
            "max_scale {max_scale} above length/4 = {}",
            length / 4
        )));
    }
    if min_scale > max_scale {
        return Err(DfaError::Grid(format!(
            "min_scale {min_scale} above max_scale {max_scale}"
        )));
    }
    if count < MIN_FIT_POINTS {
        return Err(DfaError::Grid(format!(
            "count {count} below {MIN_FIT_POINTS}"
        )));
    }
    let lo = (min_scale as f64).ln();
    let hi = (max_scale as f64).ln();
    let step = (hi - lo) / (count - 1) as f64;
    let mut scales: Vec<usize> = (0..count)
        .map(|i| {
            let s = (lo + step * i as f64).exp().round() as usize;
            s.clamp(min_scale, max_scale)
        })
        .collect();
    scales[0] = min_scale;
    scales[count - 1] = max_scale;
    scales.dedup();
    Ok(scales)
}

/// OLS regression of `ln F(n)` on `ln n`.
pub fn fit_hurst<T: Scalar>(points: &[FluctuationPoint<T>]) -> Result<HurstFit<T>, DfaError> {
    let usable: Vec<FluctuationPoint<T>> = points
        .iter()
        .copied()
        .filter(|p| p.fluctuation > T::zero() && p.fluctuation.is_finite())
        .collect();
    let dropped_points = points.len() - usable.len();
    if usable.len() < MIN_FIT_POINTS {
        return Err(DfaError::TooFewPoints {
            usable: usable.len(),
            required: MIN_FIT_POINTS,
        });
    }
    let xs: Vec<T> = usable.iter().map(|p| T::of_usize(p.scale).ln()).collect();
    let ys: Vec<T> = usable.iter().map(|p| p.fluctuation.ln()).collect();
    let k = T::of_usize(xs.len());
    let x_mean = xs.iter().copied().sum::<T>() / k;
    let y_mean = ys.iter().copied().sum::<T>() / k;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(&ys) {
        let (dx, dy) = (x - x_mean, y - y_mean);
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    if sxx <= T::zero() {
        return Err(DfaError::TooFewPoints {
            usable: 1,
            required: MIN_FIT_POINTS,
        });
    }
    let hurst = sxy / sxx;
    let log_constant = y_mean - hurst * x_mean;
    let ss_res: T = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let r = y - log_constant - hurst * x;
            r * r
        })
        .sum();
    let r_squared = if syy > T::zero() {
        (T::one() - ss_res / syy).max(T::zero()).min(T::one())
    } else {
        T::one()
    };
    Ok(HurstFit {
        hurst,
        log_constant,
        points: usable,
        r_squared,
        dropped_points,
    })
}

/// Profile, fluctuation over the configured grid, and scaling fit.
pub fn estimate_hurst<T: Scalar>(series: &[T], config: &DfaConfig) -> Result<HurstFit<T>, DfaError> {
    if series.len() < MIN_SERIES_LEN {
        return Err(DfaError::TooShort {
            len: series.len(),
            min: MIN_SERIES_LEN,
        });
    }
    let prof = profile(series)?;
    let max_scale = config.max_scale.unwrap_or(series.len() / 4);
    let scales = scale_grid(series.len(), config.min_scale, max_scale, config.scale_count)?;
    let points = scales
        .into_iter()
        .map(|s| fluctuation(&prof, s))
        .collect::<Result<Vec<_>, _>>()?;
    fit_hurst(&points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn point(scale: usize, fluctuation: f64) -> FluctuationPoint<f64> {
        FluctuationPoint {
            scale,
            fluctuation,
            boxes_used: 1,
        }
    }

    /// Least squares by solving the 2x2 normal equations with Cramer's rule.
    fn normal_equations_ss(y: &[f64]) -> f64 {
        let n = y.len() as f64;
        let sx: f64 = (0..y.len()).map(|i| i as f64).sum();
        let sxx: f64 = (0..y.len()).map(|i| (i * i) as f64).sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = y.iter().enumerate().map(|(i, v)| i as f64 * v).sum();
        let det = n * sxx - sx * sx;
        let a = (sy * sxx - sx * sxy) / det;
        let b = (n * sxy - sx * sy) / det;
        y.iter()
            .enumerate()
            .map(|(i, v)| (v - a - b * i as f64).powi(2))
            .sum()
    }

    #[test]
    fn constant_series_profile_is_zero() {
        let p = profile(&[3.5, 3.5, 3.5, 3.5]).unwrap();
        assert_eq!(p.values, vec![0.0; 4]);
        assert_eq!(p.source_mean, 3.5);
    }

    #[test]
    fn alternating_profile() {
        assert_eq!(profile(&[1.0, -1.0, 1.0, -1.0]).unwrap().values, vec![1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn ramp_profile() {
        let p = profile(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p.values, vec![-1.0, -1.0, 0.0]);
        assert_eq!(p.source_mean, 2.0);
    }

    #[test]
    fn empty_and_non_finite_rejected() {
        assert!(matches!(profile::<f64>(&[]), Err(DfaError::TooShort { .. })));
        assert_eq!(profile(&[1.0, f64::NAN]), Err(DfaError::NonFinite { index: 1 }));
    }

    #[test]
    fn linear_boxes_have_zero_fluctuation() {
        let prof = DfaProfile {
            values: (0..32).map(|i| 0.25 * i as f64 - 3.0).collect(),
            source_mean: 0.0,
        };
        let f = fluctuation(&prof, 8).unwrap();
        assert!(f.fluctuation < 1e-12);
        assert_eq!(f.boxes_used, 4);
    }

    #[test]
    fn zigzag_profile_matches_normal_equations() {
        let values = vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0];
        // Pad to 16 so that scale 4 is within N/4.
        let mut padded = values.clone();
        padded.extend_from_slice(&values);
        let prof = DfaProfile {
            values: padded.clone(),
            source_mean: 0.0,
        };
        let f = fluctuation(&prof, 4).unwrap();
        let ss: f64 = padded.chunks(4).map(normal_equations_ss).sum();
        // Each box [1,2,1,2]: slope 0.2, residuals [-0.2, 0.6, -0.6, 0.2], SS = 0.8.
        assert_relative_eq!(ss, 4.0 * 0.8, epsilon = 1e-12);
        assert_relative_eq!(f.fluctuation, (ss / 16.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn remainder_is_excluded() {
        let prof = profile(&(0..37).map(|i| ((i * 7) % 5) as f64).collect::<Vec<_>>()).unwrap();
        let f = fluctuation(&prof, 9).unwrap();
        assert_eq!(f.boxes_used, 4);
        let ss: f64 = prof.values[..36].chunks(9).map(normal_equations_ss).sum();
        assert_relative_eq!(f.fluctuation, (ss / 36.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn scale_bounds_enforced() {
        let prof = profile(&[0.0f64; 64]).unwrap();
        assert!(fluctuation(&prof, 3).is_err());
        assert!(fluctuation(&prof, 17).is_err());
        assert!(fluctuation(&prof, 16).is_ok());
    }

    #[test]
    fn grid_contracts() {
        let g = scale_grid(1024, 4, 256, 4).unwrap();
        assert_eq!(g.first(), Some(&4));
        assert_eq!(g.last(), Some(&256));
        assert!(g.windows(2).all(|w| w[0] < w[1]));

        let g = scale_grid(1024, 4, 256, 16).unwrap();
        assert!(g.len() <= 16);
        assert!(g.windows(2).all(|w| w[0] < w[1]));

        let g = scale_grid(64, 4, 16, 8).unwrap();
        assert!(g.iter().all(|&s| (4..=16).contains(&s)));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn infeasible_grids_rejected() {
        assert!(scale_grid(1024, 3, 256, 8).is_err());
        assert!(scale_grid(1024, 4, 257, 8).is_err());
        assert!(scale_grid(1024, 64, 32, 8).is_err());
        assert!(scale_grid(1024, 4, 256, 3).is_err());
    }

    #[test]
    fn exact_square_root_law() {
        let pts: Vec<_> = [4, 8, 16, 32, 64]
            .iter()
            .map(|&n| point(n, (n as f64).sqrt()))
            .collect();
        let fit = fit_hurst(&pts).unwrap();
        assert_relative_eq!(fit.hurst, 0.5, epsilon = 1e-12);
        assert_relative_eq!(fit.constant(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_linear_law() {
        let pts: Vec<_> = [4, 6, 10, 20].iter().map(|&n| point(n, 2.0 * n as f64)).collect();
        let fit = fit_hurst(&pts).unwrap();
        assert_relative_eq!(fit.hurst, 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.log_constant, 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn out_of_range_exponent_is_flagged_not_rejected() {
        let pts: Vec<_> = [4, 8, 16, 32].iter().map(|&n| point(n, (n as f64).powf(1.3))).collect();
        let fit = fit_hurst(&pts).unwrap();
        assert!(fit.is_flagged());
        assert_relative_eq!(fit.hurst, 1.3, epsilon = 1e-12);
    }

    #[test]
    fn zero_points_dropped_and_counted() {
        let mut pts: Vec<_> = [4, 8, 16, 32].iter().map(|&n| point(n, n as f64)).collect();
        pts.push(point(64, 0.0));
        let fit = fit_hurst(&pts).unwrap();
        assert_eq!(fit.dropped_points, 1);
        assert_eq!(fit.points.len(), 4);

        pts[0].fluctuation = 0.0;
        assert_eq!(
            fit_hurst(&pts),
            Err(DfaError::TooFewPoints {
                usable: 3,
                required: 4
            })
        );
    }

    #[test]
    fn generic_over_f32() {
        let pts: Vec<FluctuationPoint<f32>> = [4usize, 8, 16, 32]
            .iter()
            .map(|&n| FluctuationPoint {
                scale: n,
                fluctuation: (n as f32).powf(0.7),
                boxes_used: 1,
            })
            .collect();
        let fit = fit_hurst(&pts).unwrap();
        assert!((fit.hurst - 0.7).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn fit_r_squared_in_unit_interval(fs in prop::collection::vec(0.01f64..100.0, 4..20)) {
            let pts: Vec<_> = fs.iter().enumerate().map(|(i, &f)| point(4 + 3 * i, f)).collect();
            let fit = fit_hurst(&pts).unwrap();
            prop_assert!((0.0..=1.0).contains(&fit.r_squared));
        }

        #[test]
        fn profile_ends_at_zero(xs in prop::collection::vec(-10.0f64..10.0, 1..500)) {
            let p = profile(&xs).unwrap();
            prop_assert_eq!(p.len(), xs.len());
            prop_assert!(p.values.last().unwrap().abs() < 1e-9);
        }
    }
}
