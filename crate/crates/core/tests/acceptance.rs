//! Acceptance suite: one test per release criterion, each printing a
//! PASS line on success. Tolerances are pinned in the assertions.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use torchpilot::cli::{cmd_run, cmd_suite};
use torchpilot::config::RunConfig;
use torchpilot::contour::{convex_hull, extract_contours, polygon_area, Contour};
use torchpilot::control::{
    apply_velocity_update, control_accel, lyapunov, state_error, ControllerParams,
};
use torchpilot::features::{
    calibrate, color_weight, gaussian_weight, normalized_intensity, raw_intensity,
};
use torchpilot::harness::{Mode, Phase};
use torchpilot::image::{quantize, ChannelCutoffs, ColorCode, QuantizedImage, RgbImage};
use torchpilot::plant::{
    render, step_with_velocity, NoiseConfig, PlantConfig, PlantState, PlateSpec, RenderConfig,
};

fn pass(n: u32, name: &str) {
    println!("ACCEPTANCE {n} ({name}): PASS");
}

#[test]
fn criterion_1_parameter_fidelity() {
    let cfg = RunConfig::default();
    assert_eq!(cfg.controller.gain, 200.0);
    assert_eq!(cfg.controller.desired_convexity, 0.95);
    assert_eq!(cfg.controller.desired_intensity, 0.25);
    assert_eq!(cfg.controller.v_max, 2.0);
    assert_eq!(cfg.controller.a_max, 0.8);
    assert_eq!(cfg.intensity.sigma_x, 30.0);
    assert_eq!(cfg.intensity.sigma_y, 30.0);
    assert_eq!(cfg.intensity.w_red, 0.01);
    assert_eq!(cfg.intensity.w_green, 0.04);
    assert_eq!(cfg.intensity.w_blue, 0.16);
    assert_eq!(cfg.intensity.i_sat, 10.0);
    assert_eq!(cfg.controller.lambda, 0.5);
    // The derived reference state follows from the reference pair.
    assert_eq!(cfg.controller.desired_state(), 0.6);
    pass(1, "parameter fidelity");
}

#[test]
fn criterion_2_controlled_mode_success() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::default();
    let started = Instant::now();
    let results = cmd_suite(&cfg, dir.path(), false).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "suite took {elapsed:.1} s");
    assert_eq!(results.len(), 9);
    for r in results.iter().filter(|r| r.mode == Mode::Controlled) {
        assert_eq!(
            r.success_ratio, 1.0,
            "controlled cut incomplete on {} in",
            r.thickness_in
        );
        assert!(!r.aborted);
    }
    pass(2, "controlled-mode success");
}

#[test]
fn criterion_3_failure_mode_directionality() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::default();
    let results = cmd_suite(&cfg, dir.path(), false).unwrap();
    let ratio = |mode: Mode, th: f64| {
        results
            .iter()
            .find(|r| r.mode == mode && (r.thickness_in - th).abs() < 1e-9)
            .map(|r| r.success_ratio)
            .unwrap()
    };
    // Thin plate: excess heat widens the cut instead of spoiling it.
    assert_eq!(ratio(Mode::Slow, 0.250), 1.0);
    // The two thicker plates fail in both open-loop modes.
    for th in [0.375, 0.500] {
        assert!(ratio(Mode::Slow, th) < 1.0, "slow should reseal {th}");
        assert!(ratio(Mode::Fast, th) < 1.0, "fast should extinguish {th}");
    }
    // The fast failures come from pool extinguishment.
    for r in results.iter().filter(|r| r.mode == Mode::Fast) {
        assert!(r.aborted);
    }
    pass(3, "failure-mode directionality");
}

#[test]
fn criterion_4_tracking() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::default();
    let ctrl = cfg.controller.controller_params();
    for plate_index in 0..3 {
        let setup = cfg
            .experiment_setup(Mode::Controlled, plate_index, None)
            .unwrap();
        let _ = &dir;
        let result = torchpilot::harness::run_experiment(&setup).unwrap();
        assert!(!result.aborted);
        let t0 = result.combustion_start.unwrap();
        let mut post_window_rows = 0;
        for rec in result
            .telemetry
            .iter()
            .filter(|r| r.phase == Phase::Combustion)
        {
            // Velocity never reaches the cap at any point of the run.
            assert!(
                rec.velocity / ctrl.v_max < 1.0,
                "velocity railed at t={}",
                rec.t
            );
            if rec.t - t0 >= 10.0 {
                post_window_rows += 1;
                assert!(
                    (rec.s - rec.s_star).abs() <= 0.05,
                    "tracking error {} at t={}",
                    (rec.s - rec.s_star).abs(),
                    rec.t
                );
                // Past the engagement transient the clamp is never hit.
                assert!(
                    rec.accel.abs() / ctrl.a_max < 1.0,
                    "acceleration railed at t={}",
                    rec.t
                );
            }
        }
        assert!(post_window_rows > 50, "run too short to judge tracking");
    }
    pass(4, "tracking");
}

#[test]
fn criterion_5_lyapunov_descent() {
    let plant = PlantConfig::default();
    let base = PlateSpec::default_set(0.6, &plant).unwrap()[1];
    let plate = PlateSpec::calibrated(
        base.thickness_in,
        base.path_length_cm,
        0.1, // low-lag plant
        base.v_star,
        base.tail_ratio,
        0.0,
        0.6,
        &plant,
    )
    .unwrap();
    let ctrl = ControllerParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);

    for trial in 0..20 {
        let v0: f64 = rng.gen_range(0.0..=ctrl.v_max);
        let mut st = PlantState::new(&plate, &plant);
        st.pool_heat = plant.preheat_fraction * plant.s0;
        st.preheated = true;
        let mut v_cmd = v0;
        let mut t = 0.0;
        let mut prev: Option<f64> = None;
        while t < 14.0 {
            // Noiseless measurement limit: the controller sees the pool
            // state directly.
            let e = state_error(ctrl.desired_state, st.pool_heat);
            let a = control_accel(e, &ctrl);
            v_cmd = apply_velocity_update(v_cmd, a, &ctrl);
            st = step_with_velocity(&st, v_cmd, ctrl.dt, &plate, &plant).unwrap();
            t += ctrl.dt;
            let v_now = lyapunov(state_error(ctrl.desired_state, st.pool_heat));
            if t >= 2.0 {
                if let Some(p) = prev {
                    assert!(
                        v_now <= p + 1e-6,
                        "trial {trial} (v0={v0:.3}): V rose by {} at t={t:.2}",
                        v_now - p
                    );
                }
                prev = Some(v_now);
            }
        }
    }
    pass(5, "lyapunov descent");
}

#[test]
fn criterion_6_intensity_oracle_equivalence() {
    let params = RunConfig::default().intensity.intensity_params();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let size = 64u32;
        let codes: Vec<ColorCode> = (0..size * size)
            .map(|_| match rng.gen_range(0..4) {
                0 => ColorCode::Black,
                1 => ColorCode::Red,
                2 => ColorCode::Green,
                _ => ColorCode::Blue,
            })
            .collect();
        let img = QuantizedImage::from_codes(size, size, codes).unwrap();
        let cal = torchpilot::features::Calibration {
            centroid: (
                rng.gen_range(0.0..size as f64),
                rng.gen_range(0.0..size as f64),
            ),
            baseline_intensity: 1.0,
        };
        // Brute-force double loop, evaluating the Gaussian per pixel.
        let mut oracle = 0.0;
        for y in 0..size {
            for x in 0..size {
                oracle += gaussian_weight((x as f64, y as f64), &cal, &params)
                    * color_weight(img.get(x, y), &params);
            }
        }
        let fast = raw_intensity(&img, &cal, &params);
        let rel = (fast - oracle).abs() / oracle.abs().max(f64::MIN_POSITIVE);
        assert!(rel <= 1e-9, "relative error {rel}");
    }
    pass(6, "intensity oracle equivalence");
}

/// Rasterizes a disc with the project's half-pixel-biased membership.
fn disc_image(r: f64, cx: f64, cy: f64, size: u32) -> QuantizedImage {
    let mut codes = vec![ColorCode::Black; (size * size) as usize];
    for y in 0..size {
        for x in 0..size {
            let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
            if d2 <= r * r + r {
                codes[(y * size + x) as usize] = ColorCode::Blue;
            }
        }
    }
    QuantizedImage::from_codes(size, size, codes).unwrap()
}

/// Even-odd point-in-polygon for rasterizing test shapes.
fn inside(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let n = poly.len();
    let mut odd = false;
    for i in 0..n {
        let (x0, y0) = poly[i];
        let (x1, y1) = poly[(i + 1) % n];
        if (y0 > y) != (y1 > y) {
            let t = (y - y0) / (y1 - y0);
            if x < x0 + t * (x1 - x0) {
                odd = !odd;
            }
        }
    }
    odd
}

/// Coverage-style rasterization: a pixel is lit when most of its footprint
/// lies inside the shape, like a camera pixel integrating light. Sampled
/// on a 3x3 subgrid.
fn rasterize_polygon(poly: &[(f64, f64)], size: u32) -> QuantizedImage {
    let mut codes = vec![ColorCode::Black; (size * size) as usize];
    for y in 0..size {
        for x in 0..size {
            let mut hits = 0;
            for sy in -1..=1i32 {
                for sx in -1..=1i32 {
                    if inside(poly, x as f64 + sx as f64 / 3.0, y as f64 + sy as f64 / 3.0) {
                        hits += 1;
                    }
                }
            }
            if hits >= 5 {
                codes[(y * size + x) as usize] = ColorCode::Blue;
            }
        }
    }
    QuantizedImage::from_codes(size, size, codes).unwrap()
}

fn measured_convexity(img: &QuantizedImage) -> f64 {
    let contours = extract_contours(img, ColorCode::Blue);
    assert_eq!(contours.len(), 1, "expected a single shape");
    let hull = convex_hull(&contours[0]).unwrap();
    polygon_area(&contours[0]) / polygon_area(&hull)
}

/// Side-40 square with a triangular notch removing 25% of its area,
/// centered at the origin, rotated by `angle` and scaled by `scale`.
fn notched_square(angle: f64, scale: f64) -> Vec<(f64, f64)> {
    let base = [
        (-30.0, -30.0),
        (0.0, 0.0), // notch apex: wedge from the top edge to the center
        (30.0, -30.0),
        (30.0, 30.0),
        (-30.0, 30.0),
    ];
    base.iter()
        .map(|&(x, y)| {
            let (sx, sy) = (x * scale, y * scale);
            (
                sx * angle.cos() - sy * angle.sin(),
                sx * angle.sin() + sy * angle.cos(),
            )
        })
        .collect()
}

fn raster_convexity_of(poly: &[(f64, f64)], size: u32) -> f64 {
    let c = (size / 2) as f64;
    let shifted: Vec<(f64, f64)> = poly.iter().map(|&(x, y)| (x + c, y + c)).collect();
    measured_convexity(&rasterize_polygon(&shifted, size))
}

#[test]
fn criterion_7_convexity_suite() {
    // Rasterized convex discs stay measurably convex.
    for &r in &[10.0f64, 20.0, 40.0] {
        let size = (2.0 * r + 24.0) as u32;
        let c = (size / 2) as f64;
        let conv = measured_convexity(&disc_image(r, c, c, size));
        assert!(conv >= 0.98, "disc r={r}: convexity {conv}");
    }

    // A square losing 25% of its area to a notch measures 0.75 +/- 0.02.
    let notched = raster_convexity_of(&notched_square(0.0, 1.0), 160);
    assert!(
        (notched - 0.75).abs() <= 0.02,
        "notched square convexity {notched}"
    );

    // Pose and dimension invariance: 8 rotations and two scale factors
    // stay within 2% of the unrotated value.
    for k in 0..8 {
        let angle = k as f64 * std::f64::consts::FRAC_PI_4 / 2.0;
        let rotated = raster_convexity_of(&notched_square(angle, 1.0), 160);
        assert!(
            (rotated - notched).abs() / notched < 0.02,
            "rotation {k}: {rotated} vs {notched}"
        );
    }
    for &scale in &[0.5, 2.0] {
        let scaled = raster_convexity_of(&notched_square(0.0, scale), 300);
        assert!(
            (scaled - notched).abs() / notched < 0.02,
            "scale {scale}: {scaled} vs {notched}"
        );
    }

    // Deeper defects rank strictly lower, mirroring the reference ordering.
    let depth_c = |apex: f64| {
        let poly = vec![
            (-30.0, -30.0),
            (0.0, -30.0 + apex),
            (30.0, -30.0),
            (30.0, 30.0),
            (-30.0, 30.0),
        ];
        raster_convexity_of(&poly, 160)
    };
    let deep = depth_c(45.0);
    let moderate = depth_c(18.0);
    let clean = depth_c(2.0);
    assert!(
        deep < moderate && moderate < clean,
        "ordering {deep} {moderate} {clean}"
    );
    pass(7, "convexity suite");
}

#[test]
fn criterion_8_quantization() {
    let plant = PlantConfig::default();
    let plate = PlateSpec::default_set(0.6, &plant).unwrap()[1];
    let rc = RenderConfig::default();
    let noise = NoiseConfig::default();
    let cutoffs = ChannelCutoffs::default();

    let mut st = PlantState::new(&plate, &plant);
    st.preheated = true;
    st.position = 4.0;
    for (k, h) in [0.2, 0.45, 0.6, 0.85, 1.0].into_iter().enumerate() {
        st.pool_heat = h;
        for cal_mode in [false, true] {
            let frame = render(&st, cal_mode, &noise, 31 * k as u64, &rc, &plant);
            let q = quantize(&frame, cutoffs).unwrap();
            // Exact pixel-count partition over the four codes.
            let counts = q.histogram();
            assert_eq!(
                counts.iter().sum::<usize>(),
                (q.width() * q.height()) as usize
            );
            // Rendering to primaries and re-quantizing is a fixed point.
            let again = quantize(&q.to_rgb(), cutoffs).unwrap();
            assert_eq!(q, again);
        }
    }
    pass(8, "quantization");
}

#[test]
fn criterion_9_calibration() {
    let cfg = RunConfig::default();
    let plant = cfg.plant.plant_config();
    let plate = cfg.build_plates().unwrap()[0];
    let rc = cfg.plant.render_config();
    let params = cfg.intensity.intensity_params();
    let cutoffs = cfg.vision.cutoffs();
    let noise_off = NoiseConfig {
        enabled: false,
        ..cfg.noise.noise_config()
    };

    let st = PlantState::new(&plate, &plant);
    let frames: Vec<QuantizedImage> = (0..cfg.vision.calibration_frames)
        .map(|k| {
            quantize(
                &render(&st, true, &noise_off, k as u64, &rc, &plant),
                cutoffs,
            )
            .unwrap()
        })
        .collect();
    let cal = calibrate(&frames, &params).unwrap();

    let (fx, fy) = rc.flame_center();
    assert!(
        (cal.centroid.0 - fx).abs() <= 1.0 && (cal.centroid.1 - fy).abs() <= 1.0,
        "centroid {:?} vs flame center ({fx},{fy})",
        cal.centroid
    );
    assert!(cal.baseline_intensity > 0.0);

    // Re-measuring a calibration frame reads exactly one baseline unit.
    let relative = raw_intensity(&frames[0], &cal, &params) / cal.baseline_intensity;
    assert!(
        (relative - 1.0).abs() <= 1e-6,
        "relative intensity {relative}"
    );
    // And the normalized value sits at 1/i_sat.
    let i = normalized_intensity(raw_intensity(&frames[0], &cal, &params), &cal, &params);
    assert!((i - 1.0 / params.i_sat).abs() <= 1e-7);
    pass(9, "calibration");
}

#[test]
fn criterion_10_determinism() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    // A shorter path keeps the dump small; determinism is unaffected.
    for plate in &mut cfg.plates {
        plate.path_length_cm = 5.0;
    }
    cmd_run(&cfg, dir_a.path(), true).unwrap();
    cmd_run(&cfg, dir_b.path(), true).unwrap();

    let rel = "controlled_0.375";
    for name in ["telemetry.csv"] {
        let a = std::fs::read(dir_a.path().join(rel).join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(rel).join(name)).unwrap();
        assert_eq!(a, b, "{name} differs");
    }
    let a_sum = std::fs::read(dir_a.path().join("summary.csv")).unwrap();
    let b_sum = std::fs::read(dir_b.path().join("summary.csv")).unwrap();
    assert_eq!(a_sum, b_sum);

    let frames_a = dir_a.path().join(rel).join("frames");
    let frames_b = dir_b.path().join(rel).join("frames");
    let mut names: Vec<_> = std::fs::read_dir(&frames_a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        let a = std::fs::read(frames_a.join(&name)).unwrap();
        let b = std::fs::read(frames_b.join(&name)).unwrap();
        assert_eq!(a, b, "frame {name:?} differs");
    }
    pass(10, "determinism");
}

#[test]
fn ground_truth_vision_consistency() {
    // Supporting sweep for the tracking criteria: with noise off, the
    // measured combustion state is monotone in pool heat and within 0.05
    // of it across the working range.
    let cfg = RunConfig::default();
    let plant = cfg.plant.plant_config();
    let plate = cfg.build_plates().unwrap()[1];
    let rc = cfg.plant.render_config();
    let params = cfg.intensity.intensity_params();
    let cutoffs = cfg.vision.cutoffs();
    let noise_off = NoiseConfig {
        enabled: false,
        ..cfg.noise.noise_config()
    };

    let mut st = PlantState::new(&plate, &plant);
    let cal_frames: Vec<QuantizedImage> = (0..10)
        .map(|k| quantize(&render(&st, true, &noise_off, k, &rc, &plant), cutoffs).unwrap())
        .collect();
    let cal = calibrate(&cal_frames, &params).unwrap();

    let mut prev = 0.0;
    for k in 0..=8 {
        let h = 0.2 + 0.1 * k as f64;
        st.pool_heat = h;
        let q = quantize(&render(&st, false, &noise_off, 5, &rc, &plant), cutoffs).unwrap();
        let f = torchpilot::features::measure_frame(
            &q,
            &cal,
            &params,
            cfg.vision.select_params(),
            cfg.controller.lambda,
        )
        .unwrap();
        assert!((f.state - h).abs() <= 0.05, "h={h}: s={}", f.state);
        assert!(f.state > prev, "not monotone at h={h}");
        prev = f.state;
    }
}
