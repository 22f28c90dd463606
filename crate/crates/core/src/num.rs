// Small numeric helpers shared by the solvers.

/// `flow * cost`, with a zero flow contributing nothing even on an
/// infinite-cost link.
#[inline]
pub(crate) fn share(flow: f64, cost: f64) -> f64 {
    if flow == 0.0 {
        0.0
    } else {
        flow * cost
    }
}

/// Sup-norm distance between two equally shaped nested vectors.
pub(crate) fn sup_dist(a: &[alloc::vec::Vec<f64>], b: &[alloc::vec::Vec<f64>]) -> f64 {
    let mut d: f64 = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            d = d.max((x - y).abs());
        }
    }
    d
}

/// Bisection for the sign change of a monotone nondecreasing function on
/// `[lo, hi]`, assuming `f(lo) < 0 < f(hi)`. `None` if `f` returns NaN.
pub(crate) fn bisect_increasing(mut lo: f64, mut hi: f64, mut f: impl FnMut(f64) -> f64) -> Option<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v.is_nan() {
            return None;
        }
        if v > 0.0 {
            hi = mid;
        } else if v < 0.0 {
            lo = mid;
        } else {
            return Some(mid);
        }
    }
    Some(0.5 * (lo + hi))
}

/// Evenly spaced grid with exact endpoints.
pub(crate) fn linspace(start: f64, stop: f64, n: usize) -> alloc::vec::Vec<f64> {
    match n {
        0 => alloc::vec::Vec::new(),
        1 => alloc::vec![start],
        _ => (0..n)
            .map(|k| if k == n - 1 { stop } else { start + (stop - start) * (k as f64) / ((n - 1) as f64) })
            .collect(),
    }
}

/// Subdivisions used when a grid cell has a root at one endpoint.
const REFINE_POINTS: usize = 33;

/// Roots of `g` on `[lo, hi]` found by scanning `n` grid points: exact
/// grid zeros plus bisected sign changes. A cell with a zero at one end
/// is rescanned on a finer grid, since a second root may hide beside it.
/// Points where `g` is undefined are skipped.
pub(crate) fn scan_roots(lo: f64, hi: f64, n: usize, g: &impl Fn(f64) -> Option<f64>) -> alloc::vec::Vec<f64> {
    let mut roots = alloc::vec::Vec::new();
    scan_into(lo, hi, n, g, 2, &mut roots);
    roots
}

fn scan_into(
    lo: f64,
    hi: f64,
    n: usize,
    g: &impl Fn(f64) -> Option<f64>,
    depth: u32,
    roots: &mut alloc::vec::Vec<f64>,
) {
    const ZERO: f64 = 1e-12;
    let grid = linspace(lo, hi, n);
    let values: alloc::vec::Vec<Option<f64>> = grid.iter().map(|&x| g(x)).collect();
    for k in 0..grid.len() {
        let Some(v) = values[k] else { continue };
        if v.abs() < ZERO {
            roots.push(grid[k]);
        }
        let Some(w) = values.get(k + 1).copied().flatten() else { continue };
        if (v.abs() < ZERO) != (w.abs() < ZERO) {
            if depth > 0 {
                scan_into(grid[k], grid[k + 1], REFINE_POINTS, g, depth - 1, roots);
            }
            continue;
        }
        if v.abs() < ZERO || (v > 0.0) == (w > 0.0) {
            continue;
        }
        // orient so the bracketed function is negative on the left
        let sign = if v < 0.0 { 1.0 } else { -1.0 };
        if let Some(x) = bisect_increasing(grid[k], grid[k + 1], |x| g(x).map_or(f64::NAN, |y| sign * y)) {
            roots.push(x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scan_finds_root_hidden_beside_grid_zero() {
        let g = |x: f64| Some(x * (x - 0.004));
        let roots = scan_roots(0.0, 1.0, 11, &g);
        assert!(roots.contains(&0.0));
        assert!(roots.iter().any(|r| (r - 0.004).abs() < 1e-12));
    }

    #[test]
    fn scan_skips_undefined_points() {
        let g = |x: f64| if x > 0.5 { None } else { Some(x - 0.25) };
        let roots = scan_roots(0.0, 1.0, 11, &g);
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 0.25).abs() < 1e-12);
    }
}
