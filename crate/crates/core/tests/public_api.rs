//! Hand-derived values checked through the public API and the f64 aliases.

use approx::assert_relative_eq;
use rbo::geometry::{distance_to_graph, is_unreachable, offset_value, Reach, ThetaGrid};
use rbo::landscape::Landscape;
use rbo::optimizer::{lift, project_footpoint, run, StepSize};
use rbo::{AffineBump, AmbientPoint, ProjectionConfig, Quadratic, Rbo};

fn square() -> Quadratic {
    Quadratic::parabola(2.0).unwrap()
}

fn tight(gamma: f64) -> ProjectionConfig {
    ProjectionConfig {
        gamma: StepSize::Fixed(gamma),
        max_iters: 10_000,
        grad_tol: 1e-10,
        ..ProjectionConfig::default()
    }
}

#[test]
fn footpoint_follows_the_warm_start_basin() {
    // Stationarity of |p - (0, 2)|² on θ²: 2θ(2θ² - 3) = 0.
    let c = AmbientPoint::new(vec![0.0], 2.0);
    let right = project_footpoint(&square(), &c, &[1.0], &tight(0.05)).unwrap();
    let left = project_footpoint(&square(), &c, &[-1.0], &tight(0.05)).unwrap();
    assert_relative_eq!(right.point.theta[0], 1.5f64.sqrt(), epsilon = 1e-8);
    assert_relative_eq!(left.point.theta[0], -(1.5f64.sqrt()), epsilon = 1e-8);
    assert_eq!(right.point.y, right.point.theta[0].powi(2));
    assert!(right.residual <= 1e-10);
}

#[test]
fn point_on_graph_projects_to_itself() {
    let c = AmbientPoint::new(vec![0.7], 0.49);
    let fp = project_footpoint(&square(), &c, &[0.7], &ProjectionConfig::default()).unwrap();
    assert!(fp.iterations <= 1);
    assert_relative_eq!(fp.point.theta[0], 0.7, epsilon = 1e-12);
}

#[test]
fn grid_distance_to_parabola() {
    let grid = ThetaGrid::new(vec![-3.0], vec![3.0], 1e-4);
    let d = distance_to_graph(&square(), &AmbientPoint::new(vec![0.0], 2.0), &grid).unwrap();
    assert_relative_eq!(d, 1.75f64.sqrt(), epsilon = 1e-6);
}

#[test]
fn lift_places_the_center_along_the_normal() {
    let at_min = lift(&square(), &[0.0], 1.0).unwrap();
    assert_eq!((at_min.center.theta[0], at_min.center.y), (0.0, 1.0));
    // ν(1) = (-2, 1)/√5, so ρ = √5 moves the center by (-2, 1).
    let s = lift(&square(), &[1.0], 5f64.sqrt()).unwrap();
    assert_relative_eq!(s.center.theta[0], -1.0, epsilon = 1e-12);
    assert_relative_eq!(s.center.y, 2.0, epsilon = 1e-12);
}

#[test]
fn offset_of_a_line_is_a_parallel_line() {
    let line = AffineBump::affine(vec![1.0], 0.0).unwrap();
    let v = offset_value(&line, 2.0, 0.0, 2.0 / 2000.0).unwrap();
    assert_relative_eq!(v, 2.0 * 2f64.sqrt(), epsilon = 1e-6);
}

#[test]
fn vertex_of_two_theta_squared() {
    // Osculating radius at the vertex is 1/4.
    let f = Quadratic::parabola(4.0).unwrap();
    let small = is_unreachable(&f, 0.0, 0.2, 1e-3, 1e-4).unwrap();
    let large = is_unreachable(&f, 0.0, 0.3, 1e-3, 1e-4).unwrap();
    assert_eq!(small.verdict, Reach::Reachable);
    assert_eq!(large.verdict, Reach::Unreachable);
}

#[test]
fn rbo_on_a_line_moves_like_gd() {
    let line = AffineBump::affine(vec![1.0], 0.5).unwrap();
    let eta = 0.25;
    // Each inner iteration contracts by 1 - γ(1 + a²) = 0.9, so 100 default
    // iterations stop about 7e-6 short of the exact footpoint.
    let cfg = ProjectionConfig {
        max_iters: 1_000,
        grad_tol: 1e-12,
        ..ProjectionConfig::default()
    };
    let t = run(&Rbo::new(0.7, eta, cfg).unwrap(), &line, &[2.0], 8).unwrap();
    let thetas: Vec<f64> = t.thetas().map(|th| th[0]).collect();
    for w in thetas.windows(2) {
        assert_relative_eq!(w[1] - w[0], -eta, epsilon = 1e-9);
    }
}

#[test]
fn rbo_runs_in_single_precision() {
    let f = rbo::landscape::Quadratic::<f32>::parabola(1.0).unwrap();
    let opt =
        rbo::optimizer::Rbo::<f32>::new(0.5, 0.1, rbo::optimizer::ProjectionConfig::default())
            .unwrap();
    let t = run(&opt, &f, &[1.0f32], 50).unwrap();
    assert!(t.aborted.is_none());
    for r in &t.records {
        let p = rbo::geometry::AmbientPoint::new(r.theta.clone(), r.loss);
        assert!((r.center.distance(&p) - 0.5).abs() <= 1e-5);
    }
    assert!(f.eval(&t.last().theta) < f.eval(&[1.0]));
}
