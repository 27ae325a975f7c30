//! Independent oracles shared by the integration tests. Nothing here calls
//! the closed-form coefficient, Jacobian or root-finding code of the crate.
#![allow(dead_code)]

use coophunt_core::{Params, State};
use num_complex::Complex64;

/// The map written out directly.
pub fn map(x: f64, y: f64, p: &Params) -> (f64, f64) {
    let e = (-(y + p.alpha * y * y)).exp();
    (p.lambda * x / (1.0 + x) * e, p.beta * x * (1.0 - e))
}

/// The map on complex arguments.
fn map_c(x: Complex64, y: Complex64, p: &Params) -> (Complex64, Complex64) {
    let e = (-(y + y * y * p.alpha)).exp();
    let one = Complex64::new(1.0, 0.0);
    (x * p.lambda / (one + x) * e, x * p.beta * (one - e))
}

const RING: usize = 32;

/// Taylor coefficients `t[i][j]` of `u^i v^j` (i, j ≤ 3) of a function
/// analytic near the origin and real on real arguments, from samples on the
/// torus `|u| = r1, |v| = r2` (Cauchy integral by the trapezoidal rule).
fn taylor_c(f: &dyn Fn(Complex64, Complex64) -> Complex64, r1: f64, r2: f64) -> [[f64; 4]; 4] {
    let root =
        |k: usize| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / RING as f64);
    let mut t = [[Complex64::new(0.0, 0.0); 4]; 4];
    for a in 0..RING {
        for b in 0..RING {
            let val = f(root(a) * r1, root(b) * r2);
            for (i, row) in t.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    *cell += val * root((RING * 4 - i * a % RING - j * b % RING) % RING);
                }
            }
        }
    }
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = t[i][j].re / (RING * RING) as f64 / (r1.powi(i as i32) * r2.powi(j as i32));
        }
    }
    out
}

/// Nearby interior steady state by Newton on `step(s) = s`, with a
/// finite-difference Jacobian.
pub fn fixed_point(guess: State, p: &Params) -> State {
    let (mut x, mut y) = (guess.x, guess.y);
    for _ in 0..100 {
        let (fx, fy) = map(x, y, p);
        let (gx, gy) = (fx - x, fy - y);
        let h = 1e-7;
        let (fxp, fyp) = map(x + h, y, p);
        let (fxm, fym) = map(x - h, y, p);
        let (fxq, fyq) = map(x, y + h, p);
        let (fxn, fyn) = map(x, y - h, p);
        let j11 = (fxp - fxm) / (2.0 * h) - 1.0;
        let j21 = (fyp - fym) / (2.0 * h);
        let j12 = (fxq - fxn) / (2.0 * h);
        let j22 = (fyq - fyn) / (2.0 * h) - 1.0;
        let det = j11 * j22 - j12 * j21;
        let dx = (gx * j22 - j12 * gy) / det;
        let dy = (j11 * gy - j21 * gx) / det;
        x -= dx;
        y -= dy;
        if dx.abs().max(dy.abs()) < 1e-15 {
            break;
        }
    }
    State::new(x, y)
}

pub struct Oracle {
    pub a: [[f64; 2]; 2],
    pub mu: f64,
    pub omega: f64,
    pub b: [f64; 7],
    pub c: [f64; 4],
    pub k: [f64; 7],
    pub l: [f64; 7],
    pub xi20: Complex64,
    pub xi11: Complex64,
    pub xi02: Complex64,
    pub xi21: Complex64,
}

/// Radius of the sampling circles in the shifted `(X, Y)` coordinates.
pub const RADIUS: f64 = 0.25;

/// Every normal-form coefficient at the steady state `e`, by numerical
/// differentiation of the map alone.
pub fn coefficients(e: State, p: &Params) -> Oracle {
    let shifted = |dx: Complex64, dy: Complex64| map_c(dx + e.x, dy + e.y, p);
    let tf = taylor_c(&|dx, dy| shifted(dx, dy).0 - e.x, RADIUS, RADIUS);
    let tg = taylor_c(&|dx, dy| shifted(dx, dy).1 - e.y, RADIUS, RADIUS);

    let a = [[tf[1][0], tf[0][1]], [tg[1][0], tg[0][1]]];
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let mu = 0.5 * tr;
    let omega = (det - mu * mu).sqrt();

    let b = [
        tf[2][0], tf[1][1], tf[0][2], tf[3][0], tf[2][1], tf[1][2], tf[0][3],
    ];
    let c = [tg[1][1], tg[0][2], tg[0][3], tg[1][2]];

    // conjugate by L = [[a12, 0], [mu - a11, -omega]]
    let a12 = a[0][1];
    let m = mu - a[0][0];
    let to_xy = |u: Complex64, v: Complex64| (u * a12, u * m - v * omega);
    let ft = |u, v| {
        let (dx, dy) = to_xy(u, v);
        (shifted(dx, dy).0 - e.x) / a12
    };
    let gt = |u, v| {
        let (dx, dy) = to_xy(u, v);
        let (fx, gy) = shifted(dx, dy);
        ((fx - e.x) * m / a12 - (gy - e.y)) / omega
    };
    let ru = RADIUS / (a12.abs().max(m.abs() + omega));
    let tu = taylor_c(&ft, ru, ru);
    let tv = taylor_c(&gt, ru, ru);

    let k = [
        tu[2][0], tu[0][2], tu[1][1], tu[3][0], tu[0][3], tu[2][1], tu[1][2],
    ]
    .map(|v| v * a12);
    let l = [
        tv[2][0], tv[0][2], tv[1][1], tv[3][0], tv[0][3], tv[2][1], tv[1][2],
    ];

    // partial derivatives from Taylor coefficients
    let (fuu, fuv, fvv) = (2.0 * tu[2][0], tu[1][1], 2.0 * tu[0][2]);
    let (fuuu, fuuv, fuvv, fvvv) = (
        6.0 * tu[3][0],
        2.0 * tu[2][1],
        2.0 * tu[1][2],
        6.0 * tu[0][3],
    );
    let (guu, guv, gvv) = (2.0 * tv[2][0], tv[1][1], 2.0 * tv[0][2]);
    let (guuu, guuv, guvv, gvvv) = (
        6.0 * tv[3][0],
        2.0 * tv[2][1],
        2.0 * tv[1][2],
        6.0 * tv[0][3],
    );

    Oracle {
        a,
        mu,
        omega,
        b,
        c,
        k,
        l,
        xi20: Complex64::new(fuu - fvv + 2.0 * guv, guu - gvv - 2.0 * fuv) / 8.0,
        xi11: Complex64::new(fuu + fvv, guu + gvv) / 4.0,
        xi02: Complex64::new(fuu - fvv - 2.0 * guv, guu - gvv + 2.0 * fuv) / 8.0,
        xi21: Complex64::new(fuuu + fuvv + guuv + gvvv, guuu + guvv - fuuv - fvvv) / 16.0,
    }
}

/// Relative agreement with a floor for values that are zero analytically.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-9
}

/// Sign changes of `w(y) - y` on `n` uniform points over `(eps, y_c - eps)`,
/// with `y_c` found by bisection on `e^{y(1+αy)} = λ`.
pub fn sign_change_count(p: &Params, n: usize, eps: f64) -> usize {
    let yc = y_c_bisect(p.lambda, p.alpha);
    let g = |y: f64| {
        let e = (-(y + p.alpha * y * y)).exp();
        p.beta * (p.lambda * e - 1.0) * (1.0 - e) - y
    };
    let mut count = 0;
    let mut prev = g(eps);
    for i in 1..n {
        let y = eps + (yc - 2.0 * eps) * i as f64 / (n - 1) as f64;
        let v = g(y);
        if (prev < 0.0 && v > 0.0) || (prev > 0.0 && v < 0.0) {
            count += 1;
        }
        if v != 0.0 {
            prev = v;
        }
    }
    count
}

pub fn y_c_bisect(lambda: f64, alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, lambda.ln().max(1e-300));
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if (mid * (1.0 + alpha * mid)).exp() < lambda {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// No-cooperation map coded on its own, with the same elementary functions
/// as the crate so results can be compared bit for bit.
pub fn no_cooperation_map(x: f64, y: f64, lambda: f64, beta: f64) -> (f64, f64) {
    let survive = libm::exp(-y);
    let eaten = -libm::expm1(-y);
    (lambda * x / (1.0 + x) * survive, beta * x * eaten)
}
