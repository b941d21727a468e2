//! Numerical quadrature: Gauss-Legendre nodes, a globally adaptive
//! Gauss-Kronrod (G7, K15) integrator, tail substitution for infinite
//! upper limits, and an oscillatory integrator based on splitting at the
//! sine zeros followed by Euler-type series acceleration.

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // initial guess (Chebyshev-like)
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(z) by recurrence
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j as f64 + 1.0) * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * pp * pp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK QK15).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss-Kronrod panel: returns (kronrod, |kronrod - gauss|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        res_k += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    (res_k * h, ((res_k - res_g) * h).abs())
}

/// Result of an adaptive quadrature run.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Globally adaptive integration of `f` over `[a, b]`: repeatedly bisect
/// the segment with the largest error estimate.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    epsabs: f64,
    epsrel: f64,
    max_segments: usize,
) -> QuadResult {
    #[derive(Debug)]
    struct Seg {
        a: f64,
        b: f64,
        val: f64,
        err: f64,
    }
    let (val, err) = gk15(&f, a, b);
    let mut segs = vec![Seg { a, b, val, err }];
    loop {
        let total: f64 = segs.iter().map(|s| s.val).sum();
        let toterr: f64 = segs.iter().map(|s| s.err).sum();
        let target = epsabs.max(epsrel * total.abs());
        if toterr <= target {
            return QuadResult {
                value: total,
                error: toterr,
                converged: true,
            };
        }
        if segs.len() >= max_segments {
            return QuadResult {
                value: total,
                error: toterr,
                converged: false,
            };
        }
        // split the worst segment (ties broken by left endpoint for determinism)
        let mut worst = 0;
        for (i, s) in segs.iter().enumerate() {
            if s.err > segs[worst].err
                || (s.err == segs[worst].err && s.a < segs[worst].a)
            {
                worst = i;
            }
        }
        let Seg { a, b, .. } = segs.swap_remove(worst);
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            // interval exhausted at machine precision
            let (val, err) = gk15(&f, a, b);
            segs.push(Seg { a, b, val, err: 0.0 });
            let _ = (val, err);
            continue;
        }
        let (v1, e1) = gk15(&f, a, m);
        let (v2, e2) = gk15(&f, m, b);
        segs.push(Seg { a, b: m, val: v1, err: e1 });
        segs.push(Seg { a: m, b, val: v2, err: e2 });
    }
}

/// Integrate `f` over `[a, infinity)` with the substitution `r = a/u`,
/// `u` in `(0, 1]`; requires `a > 0`.
pub fn adaptive_tail<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    epsabs: f64,
    epsrel: f64,
    max_segments: usize,
) -> QuadResult {
    assert!(a > 0.0, "tail substitution requires a positive lower limit");
    let g = move |u: f64| {
        let r = a / u;
        f(r) * a / (u * u)
    };
    // avoid u = 0 exactly; the integrand must decay fast enough that the
    // remainder below u_min is negligible at the requested tolerance
    adaptive(g, 1e-300_f64.max(f64::MIN_POSITIVE), 1.0, epsabs, epsrel, max_segments)
}

/// Sum an (eventually alternating) sequence of segment integrals with
/// iterated averaging (Euler transform). Returns (sum, error estimate).
pub fn euler_accelerate(terms: &[f64]) -> (f64, f64) {
    if terms.is_empty() {
        return (0.0, 0.0);
    }
    if terms.len() == 1 {
        return (terms[0], terms[0].abs());
    }
    let mut partial: Vec<f64> = Vec::with_capacity(terms.len());
    let mut acc = 0.0;
    for &t in terms {
        acc += t;
        partial.push(acc);
    }
    let mut prev_est = *partial.last().unwrap();
    let mut est = prev_est;
    while partial.len() > 1 {
        for i in 0..partial.len() - 1 {
            partial[i] = 0.5 * (partial[i] + partial[i + 1]);
        }
        partial.pop();
        prev_est = est;
        est = *partial.last().unwrap();
    }
    (est, (est - prev_est).abs().max(f64::EPSILON * est.abs()))
}

/// Integrate `sin(freq * r) * g(r)` over `[a, infinity)` for `freq > 0` and
/// a smooth, decaying `g`: the range is split at the sine zeros
/// `r_n = n*pi/freq`, each panel is integrated with Gauss-Kronrod, and the
/// alternating panel series is summed with Euler acceleration.
pub fn oscillatory_sin_tail<G: Fn(f64) -> f64>(
    g: G,
    freq: f64,
    a: f64,
    epsabs: f64,
    epsrel: f64,
    max_panels: usize,
) -> QuadResult {
    assert!(freq > 0.0 && a >= 0.0);
    let period = std::f64::consts::PI / freq;
    let f = |r: f64| (freq * r).sin() * g(r);
    let mut terms: Vec<f64> = Vec::new();
    let mut lo = a;
    let mut panel_err = 0.0;
    let n0 = (a / period).floor() as usize + 1;
    for n in n0..n0 + max_panels {
        let hi = n as f64 * period;
        if hi <= lo {
            continue;
        }
        let r = adaptive(&f, lo, hi, epsabs * 1e-2, epsrel * 1e-2, 60);
        terms.push(r.value);
        panel_err += r.error;
        lo = hi;
        // stop extending once the raw terms are far below target
        if terms.len() >= 8 && r.value.abs() < epsabs * 1e-3 {
            break;
        }
    }
    let head: f64 = terms.iter().take(4).sum();
    let (tail, tail_err) = euler_accelerate(&terms[terms.len().min(4)..]);
    let value = head + tail;
    let error = tail_err + panel_err;
    QuadResult {
        value,
        error,
        converged: error <= epsabs.max(epsrel * value.abs()) * 10.0,
    }
}
