//! Derivative-free maximizers shared by the feasibility searches.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of a unimodal `f` on `[a, b]`. The endpoints
/// are also evaluated, so a monotone `f` returns its boundary maximum.
pub(crate) fn golden_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (fa, fb) = (f(a), f(b));
    let mut best = if fb > fa { (b, fb) } else { (a, fa) };
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    for (x, fx) in [(x1, f1), (x2, f2)] {
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Point `i` (0-based, skipping the origin) of the Halton sequence in `dim <= 8` dimensions.
pub(crate) fn halton(i: usize, dim: usize) -> Vec<f64> {
    const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    (0..dim)
        .map(|d| {
            let base = PRIMES[d];
            let (mut n, mut f, mut r) = (i + 1, 1.0, 0.0);
            while n > 0 {
                f /= base as f64;
                r += f * (n % base) as f64;
                n /= base;
            }
            r
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct PatternOpts {
    pub step: f64,
    pub min_step: f64,
    pub contraction: f64,
    pub max_evals: usize,
    /// Stop as soon as the objective reaches this value.
    pub target: Option<f64>,
}

impl Default for PatternOpts {
    fn default() -> Self {
        PatternOpts { step: 0.5, min_step: 1e-5, contraction: 0.5, max_evals: 20_000, target: None }
    }
}

/// Compass-plus-diagonal pattern search maximizing `f` inside the box `[lo, hi]`.
/// Returns the best point, its value, and the number of evaluations.
pub(crate) fn pattern_max<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &PatternOpts,
) -> (Vec<f64>, f64, usize) {
    let dim = x0.len();
    let clamp = |x: &mut Vec<f64>| {
        for k in 0..dim {
            x[k] = x[k].clamp(lo[k], hi[k]);
        }
    };
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for k in 0..dim {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; dim];
            d[k] = s;
            dirs.push(d);
        }
    }
    for j in 0..(1usize << dim) {
        dirs.push((0..dim).map(|k| if j >> k & 1 == 1 { 1.0 } else { -1.0 }).collect());
    }
    let mut x = x0.to_vec();
    clamp(&mut x);
    let mut fx = f(&x);
    let mut evals = 1;
    let mut step = opts.step;
    while step >= opts.min_step && evals < opts.max_evals {
        if opts.target.is_some_and(|t| fx >= t) {
            break;
        }
        let mut improved = false;
        for d in &dirs {
            let mut y: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + step * b).collect();
            clamp(&mut y);
            let fy = f(&y);
            evals += 1;
            if fy > fx {
                x = y;
                fx = fy;
                improved = true;
                break;
            }
        }
        if !improved {
            step *= opts.contraction;
        }
    }
    (x, fx, evals)
}
