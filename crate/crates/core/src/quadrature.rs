//! Gauss–Legendre rules and a vector-valued adaptive Gauss–Kronrod (7/15)
//! integrator.

use rayon::prelude::*;
use serde::Serialize;

/// Nodes and weights of the `p`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes ascending.
pub fn gauss_legendre(p: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; p];
    let mut w = vec![0.0; p];
    let pf = p as f64;
    for i in 0..p.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (pf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=p {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if p == 0 {
                break;
            }
            let (pn, pn1) = if p == 1 { (z, 1.0) } else { (p1, p0) };
            dp = pf * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[p - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[p - 1 - i] = wi;
    }
    (x, w)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
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

#[derive(Clone, Copy, Debug, Serialize)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-300,
            max_intervals: 4000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuadResult<const D: usize> {
    pub value: [f64; D],
    pub error: [f64; D],
    pub intervals: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
struct Piece<const D: usize> {
    a: f64,
    b: f64,
    value: [f64; D],
    error: [f64; D],
}

fn gk15<const D: usize, F: Fn(f64) -> [f64; D]>(f: &F, a: f64, b: f64) -> Piece<D> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = [0.0; D];
    let mut g = [0.0; D];
    for d in 0..D {
        k[d] = WGK[7] * fc[d];
        g[d] = WG[3] * fc[d];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for d in 0..D {
            let s = f1[d] + f2[d];
            k[d] += WGK[j] * s;
            if j % 2 == 1 {
                g[d] += WG[j / 2] * s;
            }
        }
    }
    let mut value = [0.0; D];
    let mut error = [0.0; D];
    for d in 0..D {
        value[d] = k[d] * h;
        error[d] = ((k[d] - g[d]) * h).abs();
        if !value[d].is_finite() {
            error[d] = f64::INFINITY;
        }
    }
    Piece { a, b, value, error }
}

/// Integrates a vector-valued function over `[breaks[0], breaks.last()]`,
/// starting from the given partition and bisecting the worst pieces in
/// rounds until every component meets `max(rel_tol·|I|, abs_tol)`.
///
/// Pieces are evaluated in parallel; the result does not depend on the
/// number of threads.
pub fn integrate<const D: usize, F>(f: F, breaks: &[f64], opts: &QuadOptions) -> QuadResult<D>
where
    F: Fn(f64) -> [f64; D] + Sync,
{
    let mut pieces: Vec<Piece<D>> = breaks
        .par_windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&f, w[0], w[1]))
        .collect();
    loop {
        let mut value = [0.0; D];
        let mut error = [0.0; D];
        for p in &pieces {
            for d in 0..D {
                value[d] += p.value[d];
                error[d] += p.error[d];
            }
        }
        let target: [f64; D] =
            std::array::from_fn(|d| (opts.rel_tol * value[d].abs()).max(opts.abs_tol));
        let done = (0..D).all(|d| error[d] <= target[d]);
        let blown = (0..D).any(|d| !value[d].is_finite());
        if done || blown || pieces.len() >= opts.max_intervals {
            return QuadResult {
                value,
                error,
                intervals: pieces.len(),
                converged: done && !blown,
            };
        }
        // score pieces by their worst normalized error; split the ones that
        // carry the top half of the total
        let score = |p: &Piece<D>| (0..D).map(|d| p.error[d] / target[d]).fold(0.0, f64::max);
        let mut order: Vec<usize> = (0..pieces.len()).collect();
        order.sort_by(|&i, &j| {
            score(&pieces[j])
                .total_cmp(&score(&pieces[i]))
                .then(i.cmp(&j))
        });
        let total: f64 = pieces.iter().map(score).sum();
        let mut acc = 0.0;
        let mut split = Vec::new();
        for &i in &order {
            if acc >= 0.5 * total || pieces.len() + split.len() >= opts.max_intervals {
                break;
            }
            let sc = score(&pieces[i]);
            if sc <= 0.0 {
                break;
            }
            acc += sc;
            split.push(i);
        }
        if split.is_empty() {
            split.push(order[0]);
        }
        split.sort_unstable();
        let halves: Vec<(Piece<D>, Piece<D>)> = split
            .par_iter()
            .map(|&i| {
                let p = pieces[i];
                let m = 0.5 * (p.a + p.b);
                (gk15(&f, p.a, m), gk15(&f, m, p.b))
            })
            .collect();
        let mut next = Vec::with_capacity(pieces.len() + split.len());
        let mut si = 0;
        for (i, p) in pieces.iter().enumerate() {
            if si < split.len() && split[si] == i {
                next.push(halves[si].0);
                next.push(halves[si].1);
                si += 1;
            } else {
                next.push(*p);
            }
        }
        pieces = next;
    }
}

/// Breakpoints `lo, 2lo, 4lo, …, hi` (dyadic grading toward `lo`).
pub fn graded_breaks(lo: f64, hi: f64) -> Vec<f64> {
    let mut b = vec![lo];
    let mut x = lo * 2.0;
    while x < hi {
        b.push(x);
        x *= 2.0;
    }
    b.push(hi);
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for p in [1, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(p);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * p - 1;
            let got: f64 = x
                .iter()
                .zip(&w)
                .map(|(x, w)| w * x.powi(deg as i32 - 1))
                .sum();
            let want = if (deg - 1) % 2 == 0 {
                2.0 / deg as f64
            } else {
                0.0
            };
            assert!((got - want).abs() < 1e-13, "p={p}");
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let r = integrate(
            |t| [t.powf(-0.5), t.ln()],
            &graded_breaks(1e-12, 1.0),
            &QuadOptions::default(),
        );
        assert!(r.converged);
        assert!((r.value[0] - (2.0 - 2e-6)).abs() < 1e-7);
        assert!((r.value[1] + 1.0).abs() < 1e-6);
    }
}
