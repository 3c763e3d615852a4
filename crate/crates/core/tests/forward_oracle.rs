use enclosure::forward::{exact_series_constant, solve_forward, ConstantSeries, ForwardMedium, Resolution, RightBc};
use enclosure::medium::{LayeredMedium, SmoothMedium};

fn sup_error(nx: usize, nt: usize) -> f64 {
    let m = LayeredMedium::homogeneous(1.0, 1.0).unwrap();
    let sol =
        solve_forward(ForwardMedium::Layered(&m), &|_| 1.0, RightBc::NeumannZero, 1.0, Resolution { nx, nt }).unwrap();
    let exact = exact_series_constant(1.0, 1.0, 1.0, nt, 100_000).unwrap();
    sol.record.temp_left.iter().zip(&exact.temp_left).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[test]
fn default_resolution_matches_series() {
    let r = Resolution::default_for(1.0, 1.0);
    let err = sup_error(r.nx, r.nt);
    println!("sup-norm error at nx={} nt={}: {err:.3e}", r.nx, r.nt);
    assert!(err <= 1e-6);
}

#[test]
fn final_time_relative_error() {
    let m = LayeredMedium::homogeneous(1.0, 1.0).unwrap();
    let r = Resolution::default_for(1.0, 1.0);
    let sol = solve_forward(ForwardMedium::Layered(&m), &|_| 1.0, RightBc::NeumannZero, 1.0, r).unwrap();
    let exact = ConstantSeries::new(1.0, 1.0, 100_000).unwrap().u(0.0, 1.0);
    let got = *sol.record.temp_left.last().unwrap();
    assert!(((got - exact) / exact).abs() <= 1e-6, "{got} vs {exact}");
}

#[test]
fn smooth_constant_medium_matches_layered() {
    let l = LayeredMedium::homogeneous(1.0, 2.0).unwrap();
    let s = SmoothMedium::from_expr(1.0, "2").unwrap();
    let r = Resolution { nx: 100, nt: 50 };
    let a = solve_forward(ForwardMedium::Layered(&l), &|_| 1.0, RightBc::Robin(0.5), 0.3, r).unwrap();
    let b = solve_forward(ForwardMedium::Smooth { medium: &s, a: 1.0 }, &|_| 1.0, RightBc::Robin(0.5), 0.3, r).unwrap();
    for (x, y) in a.record.temp_left.iter().zip(&b.record.temp_left) {
        assert!((x - y).abs() < 1e-13);
    }
}

fn convergence_factor(flux: &dyn Fn(f64) -> f64, t_from: f64) -> f64 {
    let m = LayeredMedium::new(vec![0.0, 0.25, 1.0], vec![1.0, 4.0]).unwrap();
    let horizon = 0.5;
    let run = |nx: usize, nt: usize| {
        solve_forward(ForwardMedium::Layered(&m), flux, RightBc::Robin(1.0), horizon, Resolution { nx, nt })
            .unwrap()
            .record
    };
    let fine = run(3200, 1600);
    let err = |nx: usize, nt: usize| {
        let r = run(nx, nt);
        let stride = 1600 / nt;
        r.temp_left
            .iter()
            .enumerate()
            .filter(|(i, _)| r.times[*i] >= t_from * horizon)
            .map(|(i, v)| (v - fine.temp_left[i * stride]).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(400, 200), err(800, 400));
    println!("errors {e1:.3e} -> {e2:.3e}, factor {:.3}", e1 / e2);
    e1 / e2
}

#[test]
fn self_convergence_is_second_order_for_smooth_onset() {
    let factor = convergence_factor(&|t| t * t, 0.0);
    assert!((factor - 4.0).abs() <= 0.5);
}

#[test]
fn self_convergence_is_second_order_away_from_switch_on() {
    let factor = convergence_factor(&|_| 1.0, 0.25);
    assert!((factor - 4.0).abs() <= 0.5);
}

#[test]
fn self_convergence_with_switch_on_is_at_least_order_three_halves() {
    let factor = convergence_factor(&|_| 1.0, 0.0);
    assert!(factor >= 2.0f64.powf(1.5) * 0.95);
}
