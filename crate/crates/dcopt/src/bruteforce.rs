//! Brute-force grid minimizers for low-dimensional validation.
//!
//! Used by tests to certify solver output against an oracle that makes no
//! convexity assumptions: scan a box on a uniform grid, then repeatedly zoom
//! into a shrunken window around the incumbent.

/// Minimizes `f` over `[lo, hi]` by grid scan with `points` samples per round
/// and `rounds` zoom refinements. Returns `(argmin, min)`.
pub fn grid_min_1d<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    points: usize,
    rounds: usize,
) -> (f64, f64) {
    assert!(points >= 3 && hi > lo);
    let mut best_x = lo;
    let mut best_v = f64::INFINITY;
    for _ in 0..rounds {
        let step = (hi - lo) / (points - 1) as f64;
        for i in 0..points {
            let x = lo + step * i as f64;
            let v = f(x);
            if v < best_v {
                best_v = v;
                best_x = x;
            }
        }
        // Zoom to a window of two grid cells around the incumbent.
        let w = 2.0 * step;
        lo = best_x - w;
        hi = best_x + w;
    }
    (best_x, best_v)
}

/// Minimizes `f` over the box `[lo, hi]²` by grid scan with `points²` samples
/// per round and `rounds` zoom refinements. Returns `(argmin, min)`.
pub fn grid_min_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    lo: [f64; 2],
    hi: [f64; 2],
    points: usize,
    rounds: usize,
) -> ([f64; 2], f64) {
    assert!(points >= 3);
    let mut lo = lo;
    let mut hi = hi;
    let mut best = [lo[0], lo[1]];
    let mut best_v = f64::INFINITY;
    for _ in 0..rounds {
        let s0 = (hi[0] - lo[0]) / (points - 1) as f64;
        let s1 = (hi[1] - lo[1]) / (points - 1) as f64;
        for i in 0..points {
            for j in 0..points {
                let x = lo[0] + s0 * i as f64;
                let y = lo[1] + s1 * j as f64;
                let v = f(x, y);
                if v < best_v {
                    best_v = v;
                    best = [x, y];
                }
            }
        }
        let w0 = 2.0 * s0;
        let w1 = 2.0 * s1;
        lo = [best[0] - w0, best[1] - w1];
        hi = [best[0] + w0, best[1] + w1];
    }
    (best, best_v)
}
