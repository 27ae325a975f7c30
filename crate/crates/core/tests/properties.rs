mod common;

use coophunt_core::equilibria::{self, CountBound, EquilibriumKind};
use coophunt_core::model::{self, Params, State};
use coophunt_core::ns::{self, Direction};
use coophunt_core::sim::{self, Attractor};
use coophunt_core::stability::{self, StabilityTag};
use proptest::prelude::*;

fn params(l: f64, b: f64, a: f64) -> Params {
    Params::new(l, b, a).unwrap()
}

fn any_params() -> impl Strategy<Value = Params> {
    (0.1..30.0f64, 0.01..10.0f64, 0.0..30.0f64).prop_map(|(l, b, a)| params(l, b, a))
}

fn growing_params() -> impl Strategy<Value = Params> {
    (1.05..30.0f64, 0.005..5.0f64, 0.0..30.0f64).prop_map(|(l, b, a)| params(l, b, a))
}

mod map {
    use super::*;

    proptest! {
        #[test]
        fn stays_in_quadrant(p in any_params(), x in 0.0..1e3f64, y in 0.0..1e3f64) {
            let s = model::step(State::new(x, y), &p).unwrap();
            prop_assert!(s.x >= 0.0 && s.y >= 0.0);
        }

        #[test]
        fn axes_are_invariant(p in any_params(), v in 0.0..1e3f64) {
            prop_assert_eq!(model::step(State::new(v, 0.0), &p).unwrap().y, 0.0);
            prop_assert_eq!(model::step(State::new(0.0, v), &p).unwrap(), State::ORIGIN);
        }

        #[test]
        fn orbits_enter_absorbing_box(
            l in 1.05..20.0f64, b in 0.01..3.0f64, a in 0.0..20.0f64,
            x in 0.0..50.0f64, y in 0.0..50.0f64,
        ) {
            let p = params(l, b, a);
            let xb = l - 1.0;
            let o = model::orbit(State::new(x, y), &p, 1500).unwrap();
            for s in &o[1000..] {
                prop_assert!(s.x <= xb + 1e-9 && s.y <= b * xb + 1e-9, "{s:?}");
            }
        }

        #[test]
        fn no_cooperation_matches_reference(
            l in 0.1..50.0f64, b in 0.01..10.0f64, x in 0.0..100.0f64, y in 0.0..100.0f64,
        ) {
            let s = model::step(State::new(x, y), &params(l, b, 0.0)).unwrap();
            let (rx, ry) = common::no_cooperation_map(x, y, l, b);
            prop_assert_eq!(s.x.to_bits(), rx.to_bits());
            prop_assert_eq!(s.y.to_bits(), ry.to_bits());
        }
    }
}

mod isoclines {
    use super::*;

    fn fd_slope(f: impl Fn(f64) -> f64, y: f64) -> f64 {
        let h = 1e-6 * y.max(1e-3);
        (f(y + h) - f(y - h)) / (2.0 * h)
    }

    proptest! {
        #[test]
        fn monotone_for_weak_cooperation(l in 1.05..30.0f64, b in 0.01..5.0f64, a in 0.0..0.5f64) {
            let p = params(l, b, a);
            let yc = equilibria::y_c(&p).unwrap();
            for i in 1..=400 {
                let y = yc * i as f64 / 400.0;
                prop_assert!(fd_slope(|t| equilibria::isocline_h(t, &p), y) >= -1e-9);
                prop_assert!(fd_slope(|t| equilibria::isocline_f(t, &p), y) < 0.0);
            }
        }

        #[test]
        fn h_dips_once_for_strong_cooperation(b in 0.01..5.0f64, a in 0.55..30.0f64) {
            let p = params(5.0, b, a);
            let slopes: Vec<f64> = (1..=4000)
                .map(|i| fd_slope(|t| equilibria::isocline_h(t, &p), 5.0 * i as f64 / 4000.0))
                .collect();
            let changes = slopes.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count();
            prop_assert_eq!(changes, 1);
            prop_assert!(slopes[0] < 0.0);
        }
    }
}

mod steady_states {
    use super::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn solver_count_matches_sign_change_oracle(p in growing_params()) {
            let eqs = equilibria::interior_equilibria(&p).unwrap();
            let simple = eqs.iter().filter(|e| e.multiplicity == 1).count();
            let oracle = common::sign_change_count(&p, 16384, equilibria::BOUNDARY_GUARD);
            prop_assert_eq!(simple, oracle);
            let bound = equilibria::regime(&p).unwrap().predicted_count_bound;
            prop_assert!(bound.admits(eqs.len()), "{:?} vs {}", bound, eqs.len());
        }

        #[test]
        fn interior_states_are_fixed_points(p in growing_params()) {
            let yc = equilibria::y_c(&p).unwrap();
            for e in equilibria::interior_equilibria(&p).unwrap() {
                prop_assert_eq!(e.kind, EquilibriumKind::Interior);
                prop_assert!(e.state.x > 0.0 && e.state.y > 0.0 && e.state.y < yc);
                prop_assert!(e.residual <= 1e-9, "{}", e.residual);
                let s = model::step(e.state, &p).unwrap();
                prop_assert!(s.distance_inf(&e.state) <= 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn unique_state_moves_with_beta(l in 1.2..20.0f64, a in 0.0..20.0f64, r in 1.05..3.0f64) {
            let xb = l - 1.0;
            let mut prev: Option<State> = None;
            for i in 0..6 {
                let p = params(l, r * (1.0 + 0.2 * i as f64) / xb, a);
                let eqs = equilibria::interior_equilibria(&p).unwrap();
                prop_assert_eq!(eqs.len(), 1);
                let s = eqs[0].state;
                if let Some(q) = prev {
                    prop_assert!(s.x < q.x && s.y > q.y);
                }
                prev = Some(s);
            }
        }

        #[test]
        fn regime_rows(p in growing_params()) {
            let r = equilibria::regime(&p).unwrap();
            let want = if r.boundary {
                r.predicted_count_bound
            } else if r.maximal_reproductive_number > 1.0 {
                CountBound::Exactly(1)
            } else if r.cooperation_excess <= 0.0 {
                CountBound::Exactly(0)
            } else {
                CountBound::AtMostTwo
            };
            prop_assert_eq!(r.predicted_count_bound, want);
        }

        #[test]
        fn tangency_opens_two_state_window(l in 1.2..20.0f64, extra in 0.5..20.0f64) {
            let a = 0.5 * ((3.0 * l - 1.0) / (l - 1.0) + extra);
            let t = equilibria::beta_star(l, a).unwrap();
            prop_assert!(t.residual_value.abs() <= 1e-9 && t.residual_slope.abs() <= 1e-9);
            let xb = l - 1.0;
            prop_assert!(t.beta_star < 1.0 / xb);
            let below = params(l, t.beta_star * (1.0 - 1e-4), a);
            prop_assert_eq!(equilibria::interior_equilibria(&below).unwrap().len(), 0);
            let inside = params(l, 0.5 * (t.beta_star + 1.0 / xb), a);
            prop_assert_eq!(equilibria::interior_equilibria(&inside).unwrap().len(), 2);
            prop_assert!(equilibria::ordering_check(&inside).unwrap());
        }
    }
}

mod linear_stability {
    use super::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn det_increases_along_curve(p in growing_params()) {
            let yc = equilibria::y_c(&p).unwrap();
            let mut prev = stability::det_j_interior(0.0, &p);
            for i in 1..2048 {
                let d = stability::det_j_interior(yc * i as f64 / 2048.0, &p);
                prop_assert!(d > prev);
                prev = d;
            }
        }
    }

    proptest! {
        #[test]
        fn closed_forms_match_jacobian(p in growing_params()) {
            for e in equilibria::interior_equilibria(&p).unwrap() {
                let j = stability::jacobian(e.state, &p);
                let y = e.state.y;
                prop_assert!((stability::det_j_interior(y, &p) - j.det).abs() <= 1e-9 * j.det.abs().max(1.0));
                prop_assert!((stability::V(y, &p) - (1.0 + j.det - j.tr)).abs() <= 1e-9 * j.det.abs().max(1.0));
                prop_assert!(-j.tr < 1.0 + j.det);
                prop_assert!(j.a11 > 0.0 && -j.a12 > 0.0 && j.a21 > 0.0 && j.a22 > 0.0);
                let det = j.a11 * j.a22 - j.a12 * j.a21;
                prop_assert!((det - j.det).abs() <= 1e-12 * det.abs());
                for z in j.eigenvalues {
                    prop_assert!((z * z - z * j.tr + j.det).norm() < 1e-10 * (1.0 + j.det.abs() + j.tr.abs()));
                }
            }
        }

        #[test]
        fn weak_cooperation_keeps_v_positive(l in 1.05..20.0f64, a in 0.0..0.5f64, r in 1.01..10.0f64) {
            let p = params(l, r / (l - 1.0), a);
            let eqs = equilibria::interior_equilibria(&p).unwrap();
            prop_assert_eq!(eqs.len(), 1);
            prop_assert!(stability::V(eqs[0].state.y, &p) > 0.0);
        }

        #[test]
        fn y_d_and_y_t_lie_inside(p in growing_params()) {
            let c = stability::critical_set(&p).unwrap();
            let yd = c.y_d.unwrap();
            prop_assert!(0.0 < yd && yd < c.y_c);
            prop_assert!((stability::det_j_interior(yd, &p) - 1.0).abs() <= 1e-10);
            if let Some(yt) = c.y_t {
                prop_assert!(0.0 < yt && yt < c.y_c);
                prop_assert!(stability::V(yt / 2.0, &p) < 0.0);
                prop_assert!(stability::V(0.5 * (yt + c.y_c), &p) > 0.0);
            }
        }

        #[test]
        fn classification_agrees_with_jury(p in growing_params()) {
            for c in stability::analyze(&p).unwrap() {
                let sink_by_jury = c.class.jury[0] && c.class.jury[1];
                if c.class.tag != StabilityTag::NonHyperbolic {
                    prop_assert_eq!(c.class.tag == StabilityTag::Sink, sink_by_jury);
                }
            }
        }
    }
}

mod normal_form {
    use super::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn coefficients_match_numerical_derivatives(l in 2.0..10.0f64, a in 0.0..0.5f64, d in -0.02..0.02f64) {
            let bd = stability::beta_d(l, a).unwrap();
            let p = params(l, bd * (1.0 + d), a);
            let r = ns::c_star(&p).unwrap();
            let o = common::coefficients(common::fixed_point(r.equilibrium, &p), &p);
            let pairs = r.b.iter().zip(o.b.iter())
                .chain(r.c.iter().zip(o.c.iter()))
                .chain(r.k.iter().zip(o.k.iter()))
                .chain(r.l.iter().zip(o.l.iter()));
            for (x, y) in pairs {
                prop_assert!(common::close(*x, *y, 1e-5), "{} vs {}", x, y);
            }
            for (x, y) in [(r.xi20, o.xi20), (r.xi11, o.xi11), (r.xi02, o.xi02), (r.xi21, o.xi21)] {
                prop_assert!(common::close(x.re, y.re, 1e-5) && common::close(x.im, y.im, 1e-5), "{} vs {}", x, y);
            }
        }

        #[test]
        fn report_invariants_at_beta_d(l in 1.5..15.0f64, a in 0.0..3.0f64) {
            let r = ns::neimark_sacker(l, a, None).unwrap();
            prop_assert!((r.mu * r.mu + r.omega * r.omega - 1.0).abs() <= 1e-9);
            prop_assert!(r.omega > 0.0 && r.transversality > 0.0);
            let clear = [2.0, -2.0, 0.0, -1.0].iter().all(|t| (r.jacobian.tr - t).abs() >= 1e-6);
            prop_assert_eq!(r.resonance_clear, clear);
            let want = if !clear || r.c_star.abs() < 1e-10 {
                Direction::Inconclusive
            } else if r.c_star > 0.0 {
                Direction::Supercritical
            } else {
                Direction::Subcritical
            };
            prop_assert_eq!(r.direction, want);
        }
    }
}

mod orbits {
    use super::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn classification_is_deterministic(p in growing_params(), x in 0.01..5.0f64, y in 0.01..5.0f64) {
            let a = sim::classify_orbit(State::new(x, y), &p, 2000, 1000).unwrap();
            let b = sim::classify_orbit(State::new(x, y), &p, 2000, 1000).unwrap();
            prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
        }

        #[test]
        fn tails_respect_the_absorbing_box(p in growing_params(), x in 0.01..5.0f64, y in 0.01..5.0f64) {
            let s = sim::classify_orbit(State::new(x, y), &p, 1000, 2000).unwrap();
            let xb = p.lambda - 1.0;
            prop_assert!(s.tail_max_x <= xb + 1e-9 && s.tail_max_y <= p.beta * xb + 1e-9);
        }

        #[test]
        fn sinks_attract_nearby_orbits(l in 2.0..10.0f64, a in 0.0..0.5f64, f in 0.1..0.8f64) {
            let bd = stability::beta_d(l, a).unwrap();
            let lo = 1.3 / (l - 1.0);
            prop_assume!(bd * 0.95 > lo);
            let p = params(l, lo + f * (bd * 0.95 - lo), a);
            for c in stability::analyze(&p).unwrap() {
                if c.equilibrium.kind == EquilibriumKind::Interior && c.class.tag == StabilityTag::Sink {
                    let e = c.equilibrium.state;
                    let s = sim::classify_orbit(State::new(e.x + 7e-4, e.y - 7e-4), &p, 20_000, 5_000).unwrap();
                    match s.attractor {
                        Attractor::FixedPoint { state } => prop_assert!(state.distance_inf(&e) < 1e-6),
                        other => prop_assert!(false, "{:?}", other),
                    }
                }
            }
        }
    }
}
