//! Heat-pool feature extraction: convexity, Gaussian-weighted intensity,
//! and the combined combustion-state descriptor.
//!
//! Pool convexity is the area ratio of the blue-layer contour to its convex
//! hull. Pool intensity sums a per-pixel product of a bivariate Gaussian
//! decay centered on the torch-flame centroid and a constant color weight,
//! then scales by the calibration baseline and saturates. The combustion
//! state blends the two: `s = lambda * c + (1 - lambda) * i`.

use crate::contour::{convex_hull, polygon_area, Contour};
use crate::error::{Error, Result};
use crate::image::{ColorCode, QuantizedImage};

/// Floor keeping normalized intensity inside (0, 1] even for an all-black
/// frame; the harness raises pool-lost separately.
pub const INTENSITY_FLOOR: f64 = 1e-6;

/// Torch-flame centroid and baseline intensity measured before cutting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub centroid: (f64, f64),
    pub baseline_intensity: f64,
}

/// Gaussian decay widths, per-color weights, and the saturation multiple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityParams {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub w_red: f64,
    pub w_green: f64,
    pub w_blue: f64,
    pub i_sat: f64,
}

impl Default for IntensityParams {
    fn default() -> Self {
        IntensityParams {
            sigma_x: 30.0,
            sigma_y: 30.0,
            w_red: 0.01,
            w_green: 0.04,
            w_blue: 0.16,
            i_sat: 10.0,
        }
    }
}

impl IntensityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_x > 0.0) || !(self.sigma_y > 0.0) {
            return Err(Error::ConfigValidation(
                "sigma_x and sigma_y must be > 0".into(),
            ));
        }
        if !(0.0 < self.w_red && self.w_red < self.w_green && self.w_green < self.w_blue) {
            return Err(Error::ConfigValidation(
                "color weights must satisfy 0 < w_red < w_green < w_blue".into(),
            ));
        }
        if !(self.i_sat >= 1.0) {
            return Err(Error::ConfigValidation("i_sat must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-frame pool descriptor. `state == lambda*convexity +
/// (1-lambda)*intensity` holds exactly by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolFeatures {
    pub convexity: f64,
    pub intensity: f64,
    pub state: f64,
    pub lambda: f64,
}

impl PoolFeatures {
    pub fn new(convexity: f64, intensity: f64, lambda: f64) -> Result<Self> {
        if !(convexity > 0.0 && convexity <= 1.0) || !(intensity > 0.0 && intensity <= 1.0) {
            return Err(Error::invalid("convexity and intensity must be in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::invalid("lambda must be in [0, 1]"));
        }
        Ok(PoolFeatures {
            convexity,
            intensity,
            state: combustion_state(convexity, intensity, lambda),
            lambda,
        })
    }
}

/// Area ratio of the pool contour against its convex hull, in (0, 1].
pub fn pool_convexity(pool: &Contour) -> Result<f64> {
    let hull = convex_hull(pool).map_err(|_| {
        Error::FeatureUnavailable("degenerate pool contour (collinear points)".into())
    })?;
    let hull_area = polygon_area(&hull);
    if hull_area <= 0.0 {
        return Err(Error::FeatureUnavailable("zero-area hull".into()));
    }
    Ok((polygon_area(pool) / hull_area).min(1.0))
}

/// Bivariate Gaussian decay factor for a pixel, 1.0 at the flame centroid.
pub fn gaussian_weight(p: (f64, f64), cal: &Calibration, params: &IntensityParams) -> f64 {
    let dx = p.0 - cal.centroid.0;
    let dy = p.1 - cal.centroid.1;
    (-dx * dx / (2.0 * params.sigma_x * params.sigma_x)
        - dy * dy / (2.0 * params.sigma_y * params.sigma_y))
        .exp()
}

/// Constant per-color weight; black pixels contribute nothing.
pub fn color_weight(code: ColorCode, params: &IntensityParams) -> f64 {
    match code {
        ColorCode::Black => 0.0,
        ColorCode::Red => params.w_red,
        ColorCode::Green => params.w_green,
        ColorCode::Blue => params.w_blue,
    }
}

/// Absolute intensity: sum over all pixels of Gaussian decay times color
/// weight. Zero only for an all-black frame.
///
/// Row and column Gaussian factors are precomputed; `exp(a)*exp(b)` matches
/// the direct `exp(a+b)` evaluation to a few ulps.
pub fn raw_intensity(img: &QuantizedImage, cal: &Calibration, params: &IntensityParams) -> f64 {
    let col_factor: Vec<f64> = (0..img.width())
        .map(|x| {
            let dx = x as f64 - cal.centroid.0;
            (-dx * dx / (2.0 * params.sigma_x * params.sigma_x)).exp()
        })
        .collect();
    let row_factor: Vec<f64> = (0..img.height())
        .map(|y| {
            let dy = y as f64 - cal.centroid.1;
            (-dy * dy / (2.0 * params.sigma_y * params.sigma_y)).exp()
        })
        .collect();

    let mut sum = 0.0;
    let codes = img.codes();
    for (y, &row) in row_factor.iter().enumerate() {
        let base = y * img.width() as usize;
        for x in 0..img.width() as usize {
            let w = color_weight(codes[base + x], params);
            if w > 0.0 {
                sum += row * col_factor[x] * w;
            }
        }
    }
    sum
}

/// Estimates the flame centroid and baseline intensity from frames showing
/// the bare torch flame. The centroid is the color-weighted mean pixel
/// position averaged over frames; the baseline is the mean raw intensity
/// computed with that centroid.
pub fn calibrate(frames: &[QuantizedImage], params: &IntensityParams) -> Result<Calibration> {
    if frames.is_empty() {
        return Err(Error::CalibrationFailed("no calibration frames".into()));
    }
    let mut cx = 0.0;
    let mut cy = 0.0;
    for (idx, frame) in frames.iter().enumerate() {
        let mut wsum = 0.0;
        let mut xsum = 0.0;
        let mut ysum = 0.0;
        let codes = frame.codes();
        for y in 0..frame.height() as usize {
            let base = y * frame.width() as usize;
            for x in 0..frame.width() as usize {
                let w = color_weight(codes[base + x], params);
                if w > 0.0 {
                    wsum += w;
                    xsum += w * x as f64;
                    ysum += w * y as f64;
                }
            }
        }
        if wsum <= 0.0 {
            return Err(Error::CalibrationFailed(format!(
                "calibration frame {idx} is all black"
            )));
        }
        cx += xsum / wsum;
        cy += ysum / wsum;
    }
    let n = frames.len() as f64;
    let cal = Calibration {
        centroid: (cx / n, cy / n),
        baseline_intensity: 1.0,
    };
    let baseline = frames
        .iter()
        .map(|f| raw_intensity(f, &cal, params))
        .sum::<f64>()
        / n;
    if baseline <= 0.0 {
        return Err(Error::CalibrationFailed("zero baseline intensity".into()));
    }
    Ok(Calibration {
        baseline_intensity: baseline,
        ..cal
    })
}

/// Scales by the baseline, saturates at `i_sat` times the baseline, and
/// normalizes into (0, 1].
pub fn normalized_intensity(raw: f64, cal: &Calibration, params: &IntensityParams) -> f64 {
    let relative = raw / cal.baseline_intensity;
    (relative.min(params.i_sat) / params.i_sat).max(INTENSITY_FLOOR)
}

/// Combustion-state descriptor `s = lambda*c + (1-lambda)*i`.
pub fn combustion_state(c: f64, i: f64, lambda: f64) -> f64 {
    lambda * c + (1.0 - lambda) * i
}

/// Smallest shoelace area accepted as a heat pool; stray sparks and
/// specks below this are not a pool.
pub const MIN_POOL_AREA: f64 = 10.0;

/// Full per-frame measurement: blue-layer contour selection, convexity,
/// and normalized intensity, blended into the combustion state.
pub fn measure_frame(
    img: &QuantizedImage,
    cal: &Calibration,
    params: &IntensityParams,
    select: crate::contour::SelectParams,
    lambda: f64,
) -> Result<PoolFeatures> {
    let contours = crate::contour::extract_contours(img, ColorCode::Blue);
    let pool = crate::contour::select_pool_contour(&contours, cal.centroid, select)
        .ok_or_else(|| Error::FeatureUnavailable("no pool contour".into()))?;
    if polygon_area(pool) < MIN_POOL_AREA {
        return Err(Error::FeatureUnavailable("pool contour too small".into()));
    }
    let c = pool_convexity(pool)?;
    let i = normalized_intensity(raw_intensity(img, cal, params), cal, params);
    PoolFeatures::new(c, i, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::Contour;
    use crate::image::QuantizedImage;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn params() -> IntensityParams {
        IntensityParams::default()
    }

    fn cal_at(x: f64, y: f64) -> Calibration {
        Calibration {
            centroid: (x, y),
            baseline_intensity: 1.0,
        }
    }

    fn frame_with(blue: &[(u32, u32)], size: u32) -> QuantizedImage {
        let mut codes = vec![ColorCode::Black; (size * size) as usize];
        for &(x, y) in blue {
            codes[(y * size + x) as usize] = ColorCode::Blue;
        }
        QuantizedImage::from_codes(size, size, codes).unwrap()
    }

    #[test]
    fn convexity_of_convex_polygon_is_one() {
        let tri = Contour::new(vec![(0.0, 0.0), (10.0, 0.0), (4.0, 8.0)]).unwrap();
        assert_relative_eq!(pool_convexity(&tri).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn convexity_of_notched_square_is_exact() {
        // 20x20 square with a triangular notch removing 25% of the area:
        // wedge from (0,0) to (20,0) reaching depth 10 at the middle.
        // Both areas computed by exact shoelace: 300 / 400 = 0.75.
        let notched = Contour::new(vec![
            (0.0, 0.0),
            (10.0, 10.0),
            (20.0, 0.0),
            (20.0, 20.0),
            (0.0, 20.0),
        ])
        .unwrap();
        assert_relative_eq!(pool_convexity(&notched).unwrap(), 0.75, epsilon = 1e-12);
    }

    #[test]
    fn deeper_notches_rank_lower() {
        let c_for_depth = |depth: f64| {
            let poly = Contour::new(vec![
                (0.0, 0.0),
                (10.0, depth),
                (20.0, 0.0),
                (20.0, 20.0),
                (0.0, 20.0),
            ])
            .unwrap();
            pool_convexity(&poly).unwrap()
        };
        let deep = c_for_depth(12.0);
        let moderate = c_for_depth(5.0);
        let clean = c_for_depth(0.5);
        assert!(deep < moderate && moderate < clean);
    }

    #[test]
    fn convexity_error_on_collinear_contour() {
        let line = Contour::new(vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]).unwrap();
        assert!(matches!(
            pool_convexity(&line),
            Err(Error::FeatureUnavailable(_))
        ));
    }

    #[test]
    fn gaussian_weight_values() {
        let cal = cal_at(64.0, 64.0);
        let p = params();
        assert_relative_eq!(gaussian_weight((64.0, 64.0), &cal, &p), 1.0);
        assert_relative_eq!(
            gaussian_weight((64.0 + 30.0, 64.0), &cal, &p),
            (-0.5f64).exp(),
            epsilon = 1e-12
        );
        // Direct-evaluation oracle at (3 sigma, 4 sigma).
        assert_relative_eq!(
            gaussian_weight((64.0 + 90.0, 64.0 + 120.0), &cal, &p),
            (-12.5f64).exp(),
            epsilon = 1e-18
        );
    }

    #[test]
    fn color_weights_match_defaults() {
        let p = params();
        assert_eq!(color_weight(ColorCode::Black, &p), 0.0);
        assert_eq!(color_weight(ColorCode::Red, &p), 0.01);
        assert_eq!(color_weight(ColorCode::Green, &p), 0.04);
        assert_eq!(color_weight(ColorCode::Blue, &p), 0.16);
    }

    #[test]
    fn raw_intensity_all_black_is_zero() {
        let img = frame_with(&[], 32);
        assert_eq!(raw_intensity(&img, &cal_at(16.0, 16.0), &params()), 0.0);
    }

    #[test]
    fn raw_intensity_single_blue_pixel_at_centroid() {
        let img = frame_with(&[(16, 16)], 32);
        assert_relative_eq!(
            raw_intensity(&img, &cal_at(16.0, 16.0), &params()),
            0.16,
            epsilon = 1e-15
        );
    }

    #[test]
    fn raw_intensity_matches_brute_force_oracle() {
        // Independent oracle: per-pixel exp(a+b) evaluation in a plain
        // double loop, against the row/column-factored implementation.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let p = params();
        for _ in 0..100 {
            let size = 48u32;
            let codes: Vec<ColorCode> = (0..size * size)
                .map(|_| match rng.gen_range(0..4) {
                    0 => ColorCode::Black,
                    1 => ColorCode::Red,
                    2 => ColorCode::Green,
                    _ => ColorCode::Blue,
                })
                .collect();
            let img = QuantizedImage::from_codes(size, size, codes).unwrap();
            let cal = cal_at(rng.gen_range(0.0..48.0), rng.gen_range(0.0..48.0));

            let mut oracle = 0.0;
            for y in 0..size {
                for x in 0..size {
                    oracle += gaussian_weight((x as f64, y as f64), &cal, &p)
                        * color_weight(img.get(x, y), &p);
                }
            }
            let fast = raw_intensity(&img, &cal, &p);
            assert!(
                (fast - oracle).abs() <= 1e-9 * oracle.abs().max(1.0),
                "fast={fast} oracle={oracle}"
            );
        }
    }

    #[test]
    fn calibrate_single_pixel() {
        let img = frame_with(&[(40, 60)], 128);
        let cal = calibrate(&[img], &params()).unwrap();
        assert_eq!(cal.centroid, (40.0, 60.0));
        assert_relative_eq!(cal.baseline_intensity, 0.16, epsilon = 1e-15);
    }

    #[test]
    fn calibrate_symmetric_disc_centroid() {
        let mut blue = Vec::new();
        for y in 0..128u32 {
            for x in 0..128u32 {
                let d2 = (x as f64 - 64.0).powi(2) + (y as f64 - 64.0).powi(2);
                if d2 <= 6.0 * 6.0 + 6.0 {
                    blue.push((x, y));
                }
            }
        }
        let img = frame_with(&blue, 128);
        let cal = calibrate(&[img], &params()).unwrap();
        assert!((cal.centroid.0 - 64.0).abs() < 0.5);
        assert!((cal.centroid.1 - 64.0).abs() < 0.5);
    }

    #[test]
    fn calibrate_two_frames_averages_centroids() {
        let disc = |cx: i64| {
            let mut blue = Vec::new();
            for y in 0..128i64 {
                for x in 0..128i64 {
                    if (x - cx).pow(2) + (y - 64).pow(2) <= 25 {
                        blue.push((x as u32, y as u32));
                    }
                }
            }
            frame_with(&blue, 128)
        };
        let cal = calibrate(&[disc(64), disc(66)], &params()).unwrap();
        assert_relative_eq!(cal.centroid.0, 65.0, epsilon = 1e-9);
        assert_relative_eq!(cal.centroid.1, 64.0, epsilon = 1e-9);
    }

    #[test]
    fn calibrate_rejects_all_black_frame() {
        let good = frame_with(&[(10, 10)], 32);
        let bad = frame_with(&[], 32);
        assert!(matches!(
            calibrate(&[good, bad], &params()),
            Err(Error::CalibrationFailed(_))
        ));
    }

    #[test]
    fn normalized_intensity_baseline_and_saturation() {
        let cal = Calibration {
            centroid: (0.0, 0.0),
            baseline_intensity: 4.0,
        };
        let p = params();
        // Intensity equal to the torch flame baseline.
        assert_relative_eq!(normalized_intensity(4.0, &cal, &p), 0.1);
        // Saturation boundary and clamp above it.
        assert_relative_eq!(normalized_intensity(40.0, &cal, &p), 1.0);
        assert_relative_eq!(normalized_intensity(100.0, &cal, &p), 1.0);
        // Floor keeps the value positive.
        assert!(normalized_intensity(0.0, &cal, &p) >= INTENSITY_FLOOR);
    }

    #[test]
    fn combustion_state_examples() {
        assert_relative_eq!(combustion_state(0.95, 0.25, 0.5), 0.6);
        assert_relative_eq!(combustion_state(0.7, 0.2, 1.0), 0.7);
        assert_relative_eq!(combustion_state(0.7, 0.2, 0.0), 0.2);
    }

    #[test]
    fn params_validation() {
        let mut p = params();
        p.w_green = 0.2; // above w_blue
        assert!(p.validate().is_err());
        let mut p = params();
        p.i_sat = 0.5;
        assert!(p.validate().is_err());
        let mut p = params();
        p.sigma_x = 0.0;
        assert!(p.validate().is_err());
        assert!(params().validate().is_ok());
    }

    proptest! {
        #[test]
        fn saturation_is_monotone_and_flat_beyond_sat(a in 0.0f64..50.0, b in 0.0f64..50.0) {
            let cal = Calibration { centroid: (0.0, 0.0), baseline_intensity: 2.0 };
            let p = params();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(normalized_intensity(lo, &cal, &p) <= normalized_intensity(hi, &cal, &p));
            prop_assert!(normalized_intensity(2.0 * p.i_sat + lo, &cal, &p) == 1.0);
        }

        #[test]
        fn state_is_bounded_by_components(c in 0.01f64..=1.0, i in 0.01f64..=1.0, l in 0.0f64..=1.0) {
            let s = combustion_state(c, i, l);
            prop_assert!(s >= c.min(i) - 1e-12 && s <= c.max(i) + 1e-12);
        }

        #[test]
        fn gaussian_blob_contribution_decays_with_distance(d in 0.0f64..40.0) {
            // A fixed blob contributes strictly less as it moves away.
            let p = params();
            let cal = cal_at(64.0, 64.0);
            let blob = |off: f64| {
                let blue: Vec<(u32, u32)> = (0..3u32)
                    .flat_map(|dy| (0..3u32).map(move |dx| (64 + off as u32 + dx, 64 + dy)))
                    .collect();
                raw_intensity(&frame_with(&blue, 192), &cal, &p)
            };
            prop_assert!(blob(d) > blob(d + 4.0));
        }
    }

    #[test]
    fn pool_features_invariants() {
        let f = PoolFeatures::new(0.95, 0.25, 0.5).unwrap();
        assert_relative_eq!(f.state, 0.6);
        assert!(PoolFeatures::new(0.0, 0.5, 0.5).is_err());
        assert!(PoolFeatures::new(0.5, 1.5, 0.5).is_err());
        assert!(PoolFeatures::new(0.5, 0.5, 1.5).is_err());
    }
}
