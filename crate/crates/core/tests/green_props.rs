use disconj_core::green::build_green_on;
use disconj_core::{
    build_green, cauchy_solution, parse, verify_sign, GreenGrid, GridSpec, Parity, ProblemDef,
};

fn problem(coeffs: &[&str]) -> ProblemDef {
    ProblemDef::new(
        coeffs.iter().map(|c| parse(c).unwrap()).collect(),
        (0.0, 1.0),
        0.0,
    )
    .unwrap()
}

/// `∫ g(t, s) f(s) ds` by the midpoint rule on the s-nodes.
fn apply(gg: &GreenGrid, ti: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (gg.t[gg.t.len() - 1] - gg.t[0]) / gg.s.len() as f64;
    gg.s.iter()
        .enumerate()
        .map(|(si, &s)| gg.value(ti, si) * f(s) * h)
        .sum()
}

#[test]
fn clamped_beam_reproduces_polynomial_solution() {
    // u'''' = 24 with u = u' = 0 at both ends: u = t^2 (1 - t)^2
    let gg = build_green(
        &problem(&["0", "0", "0", "0"]),
        0.0,
        2,
        256,
        &GridSpec::default(),
    )
    .unwrap();
    for (ti, &t) in gg.t.iter().enumerate() {
        let want = t * t * (1.0 - t) * (1.0 - t);
        assert!(
            (apply(&gg, ti, |_| 24.0) - want).abs() < 1e-5 / 16.0,
            "t={t}"
        );
    }
}

#[test]
fn shifted_dirichlet_reproduces_trigonometric_solution() {
    // u'' + 4u = 1, u(0) = u(1) = 0
    let gg = build_green(&problem(&["0", "0"]), 4.0, 1, 256, &GridSpec::default()).unwrap();
    let b = -(1.0 - 2f64.cos()) / (4.0 * 2f64.sin());
    for (ti, &t) in gg.t.iter().enumerate() {
        let want = (1.0 - (2.0 * t).cos()) / 4.0 + b * (2.0 * t).sin();
        assert!((apply(&gg, ti, |_| 1.0) - want).abs() < 1e-5, "t={t}");
    }
}

#[test]
fn third_order_reproduction_with_variable_forcing() {
    // u = t^2 (t - 1)^2 has u(0) = u'(0) = 0, u(1) = 0 and u''' = 24 t - 12
    let gg = build_green(
        &problem(&["0", "0", "0"]),
        0.0,
        2,
        256,
        &GridSpec::default(),
    )
    .unwrap();
    for (ti, &t) in gg.t.iter().enumerate() {
        let want = t * t * (t - 1.0) * (t - 1.0);
        assert!(
            (apply(&gg, ti, |s| 24.0 * s - 12.0) - want).abs() < 1e-5,
            "t={t}"
        );
    }
}

#[test]
fn dirichlet_kernel_is_symmetric() {
    let nodes: Vec<f64> = (1..40)
        .map(|i| i as f64 / 40.0 + 0.003 * (i % 3) as f64)
        .collect();
    for m in [0.0, 4.0, -9.0] {
        let gg = build_green_on(
            &problem(&["0", "0"]),
            m,
            1,
            nodes.clone(),
            nodes.clone(),
            &GridSpec::default(),
        )
        .unwrap();
        for i in 0..nodes.len() {
            for j in 0..nodes.len() {
                assert!(
                    (gg.value(i, j) - gg.value(j, i)).abs() < 1e-8,
                    "M={m} ({i}, {j})"
                );
            }
        }
    }
}

#[test]
fn cauchy_kernel_solves_the_equation() {
    // integrated residual: each state component is the integral of the next,
    // and v'' changes by the integral of -cos(10 t) v'' - M v
    let p = problem(&["cos(10*t)", "0", "0"]);
    let m = 3.0;
    let s = 0.2;
    let v = cauchy_solution(&p, m, s, &GridSpec::default()).unwrap();
    let gauss = [
        (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
        (-0.538_469_310_105_683, 0.478_628_670_499_366_5),
        (0.0, 0.568_888_888_888_888_9),
        (0.538_469_310_105_683, 0.478_628_670_499_366_5),
        (0.906_179_845_938_664, 0.236_926_885_056_189_1),
    ];
    let panels = 400;
    let h = (1.0 - s) / panels as f64;
    let mut integral = [0.0f64; 3];
    let mut scale = 0.0f64;
    let start = v.state(s);
    for i in 0..panels {
        let mid = s + (i as f64 + 0.5) * h;
        for &(x, w) in &gauss {
            let t = mid + 0.5 * h * x;
            let st = v.state(t);
            integral[0] += 0.5 * h * w * st[1];
            integral[1] += 0.5 * h * w * st[2];
            integral[2] += 0.5 * h * w * (-(10.0 * t).cos() * st[2] - m * st[0]);
            scale = scale.max(st.iter().fold(0.0f64, |a, b| a.max(b.abs())));
        }
        let t = s + (i + 1) as f64 * h;
        let st = v.state(t);
        for d in 0..3 {
            assert!(
                (st[d] - start[d] - integral[d]).abs() < 1e-8 * scale,
                "t={t} d={d}"
            );
        }
    }
}

#[test]
fn sign_law_inside_the_interval_for_every_k() {
    // u'''' + 50u'' + 200u is disconjugate; sign of g is (-1)^(n-k)
    let p = problem(&["0", "50", "0", "0"]);
    for k in 1..4 {
        let gg = build_green(&p, 200.0, k, 64, &GridSpec::default()).unwrap();
        let r = verify_sign(&gg, 1e-7);
        assert!(r.pass, "k={k}: {r:?}");
        let sign = if (4 - k) % 2 == 0 { 1.0 } else { -1.0 };
        assert!(
            gg.values.iter().all(|&v| sign * v >= -1e-7 * gg.scale()),
            "k={k}"
        );
        assert_eq!(
            r.parity,
            if sign > 0.0 {
                Parity::Even
            } else {
                Parity::Odd
            }
        );
    }
}

#[test]
fn sign_law_fails_where_the_equation_is_not_disconjugate() {
    let p = problem(&["0", "50", "0", "0"]);
    let gg = build_green(&p, 0.0, 2, 64, &GridSpec::default()).unwrap();
    let r = verify_sign(&gg, 1e-7);
    assert!(!r.pass);
    assert!(r.worst_at.is_some());
}

#[test]
fn boundary_traces_and_jump() {
    let p = problem(&["cos(10*t)", "1", "t"]);
    for k in 1..3 {
        let gg = build_green(&p, 5.0, k, 32, &GridSpec::default()).unwrap();
        assert!(
            gg.boundary_residual < 1e-8,
            "k={k}: {}",
            gg.boundary_residual
        );
        assert!(gg.jump_error < 1e-8, "k={k}: {}", gg.jump_error);
    }
}
