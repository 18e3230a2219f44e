use wavespeed_core::{
    extract_contours, measure_speed, CoefficientField, ModelSpec, Protocol, ScalarGrid,
};

fn unscaled() -> Protocol {
    Protocol {
        rescaled: false,
        ..Protocol::default()
    }
}

fn speed(spec: &ModelSpec, p: &Protocol) -> f64 {
    let run = measure_speed(spec, p).unwrap();
    assert!(run.estimate.is_valid(), "{:?}", run.estimate.flags);
    run.estimate.speed
}

#[test]
fn rescaled_and_direct_frames_agree() {
    let spec = ModelSpec::symmetric(2.0, 4.0);
    let a = speed(&spec, &Protocol::default());
    let b = speed(&spec, &unscaled());
    assert!(a < -0.1, "{a}");
    assert!((a - b).abs() < 0.01, "{a} vs {b}");
}

#[test]
fn swapping_the_diffusions_mirrors_the_front() {
    // u diffusing at 4 and v at 1 is the d = 4 system reflected in x
    let mut swapped = ModelSpec::symmetric(2.0, 1.0);
    swapped.d_u = CoefficientField::constant(4.0);
    let c = speed(&ModelSpec::symmetric(2.0, 4.0), &unscaled());
    let m = speed(&swapped, &unscaled());
    assert!((c + m).abs() < 0.01, "{c} vs {m}");
}

#[test]
fn stronger_competition_speeds_up_the_faster_diffuser() {
    let p = Protocol::default();
    let slow = speed(&ModelSpec::symmetric(1.5, 4.0), &p);
    let fast = speed(&ModelSpec::symmetric(5.0, 4.0), &p);
    assert!(fast < slow && slow < 0.0, "{slow} {fast}");
}

#[test]
fn contour_of_a_plane_is_a_straight_line() {
    let xs: Vec<f64> = (0..11).map(|i| i as f64).collect();
    let grid = ScalarGrid::from_fn(xs.clone(), xs, |x, y| x - y).unwrap();
    let set = extract_contours(&grid, &[0.5]);
    let lines = set.for_level(0.5).unwrap();
    assert_eq!(lines.len(), 1);
    for &(x, y) in &lines[0].points {
        assert!((x - y - 0.5).abs() < 1e-12);
    }
}
