use rayon::prelude::*;

use super::{Point, ScalarField, TorusGrid, VectorField};
use crate::error::{invalid, Result};

/// Applies `f(idx)` to every cell, filling each axis-0 slab in parallel.
pub(crate) fn fill_cells(grid: &TorusGrid, f: impl Fn(usize) -> f64 + Sync) -> Vec<f64> {
    let slab = grid.slab_len();
    let mut out = vec![0.0; grid.len()];
    out.par_chunks_mut(slab).enumerate().for_each(|(s, chunk)| {
        let base = s * slab;
        for (j, v) in chunk.iter_mut().enumerate() {
            *v = f(base + j);
        }
    });
    out
}

/// Second-order `(2d + 1)`-point Laplacian with periodic wrap.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let g = *f.grid();
    let inv_h2 = 1.0 / (g.h() * g.h());
    let v = &f.data;
    let data = fill_cells(&g, |i| {
        let mut acc = -2.0 * g.dim() as f64 * v[i];
        for axis in 0..g.dim() {
            acc += v[g.neighbor(i, axis, 1)] + v[g.neighbor(i, axis, -1)];
        }
        acc * inv_h2
    });
    ScalarField { grid: g, data }
}

/// Centered first differences along every axis.
pub fn gradient(f: &ScalarField) -> VectorField {
    let g = *f.grid();
    let scale = 0.5 / g.h();
    let v = &f.data;
    let comps = (0..g.dim())
        .map(|axis| fill_cells(&g, |i| (v[g.neighbor(i, axis, 1)] - v[g.neighbor(i, axis, -1)]) * scale))
        .collect();
    VectorField { grid: g, comps }
}

/// One-sided forward differences. Paired with [`backward_divergence`] this
/// reproduces [`laplacian`] exactly.
pub fn forward_gradient(f: &ScalarField) -> VectorField {
    let g = *f.grid();
    let inv_h = 1.0 / g.h();
    let v = &f.data;
    let comps = (0..g.dim())
        .map(|axis| fill_cells(&g, |i| (v[g.neighbor(i, axis, 1)] - v[i]) * inv_h))
        .collect();
    VectorField { grid: g, comps }
}

pub fn backward_divergence(u: &VectorField) -> ScalarField {
    let g = *u.grid();
    let inv_h = 1.0 / g.h();
    let data = fill_cells(&g, |i| {
        (0..g.dim())
            .map(|axis| (u.comps[axis][i] - u.comps[axis][g.neighbor(i, axis, -1)]) * inv_h)
            .sum()
    });
    ScalarField { grid: g, data }
}

/// Minimum-image distance on the unit torus.
pub fn periodic_distance(a: &Point, b: &Point, d: usize) -> f64 {
    (0..d)
        .map(|k| {
            let mut dx = (a[k] - b[k]).rem_euclid(1.0);
            if dx > 0.5 {
                dx -= 1.0;
            }
            dx * dx
        })
        .sum::<f64>()
        .sqrt()
}

/// `h^d` times the sum of `f` over grid points strictly within `radius` of
/// `center` (periodic distance).
pub fn ball_sum(f: &ScalarField, center: &[f64], radius: f64) -> Result<f64> {
    let g = *f.grid();
    let d = g.dim();
    if center.len() < d {
        return Err(invalid(format!("center has {} coordinates, need {d}", center.len())));
    }
    if !(radius > 0.0 && radius <= 0.5) {
        return Err(invalid(format!("ball radius must lie in (0, 1/2], got {radius}")));
    }
    let h = g.h();
    let n = g.n() as isize;
    let mut lo = [0isize; 3];
    let mut hi = [0isize; 3];
    for k in 0..d {
        lo[k] = ((center[k] - radius) / h).ceil() as isize;
        hi[k] = ((center[k] + radius) / h).floor() as isize;
    }
    let r2 = radius * radius;
    let mut total = 0.0;
    let mut visit = |c: &[isize; 3]| {
        let mut dist2 = 0.0;
        let mut idx = 0usize;
        for k in 0..d {
            let dx = c[k] as f64 * h - center[k];
            dist2 += dx * dx;
            idx = idx * g.n() + c[k].rem_euclid(n) as usize;
        }
        if dist2 < r2 {
            total += f.data[idx];
        }
    };
    let mut c = [0isize; 3];
    if d == 2 {
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                c[0] = i;
                c[1] = j;
                visit(&c);
            }
        }
    } else {
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for l in lo[2]..=hi[2] {
                    c = [i, j, l];
                    visit(&c);
                }
            }
        }
    }
    Ok(total * g.cell_volume())
}

/// Lattice translation: `out(i) = f(i - shift)`.
pub fn translate(f: &ScalarField, shift: &[isize]) -> ScalarField {
    let g = *f.grid();
    let n = g.n() as isize;
    let data = fill_cells(&g, |i| {
        let c = g.coords(i);
        let mut src = [0usize; 3];
        for k in 0..g.dim() {
            src[k] = (c[k] as isize - shift[k]).rem_euclid(n) as usize;
        }
        f.data[g.index(&src)]
    });
    ScalarField { grid: g, data }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn grid2(n: usize) -> TorusGrid {
        TorusGrid::new(2, n).unwrap()
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        let f = ScalarField::constant(grid2(16), 3.5);
        assert!(laplacian(&f).data.iter().all(|&v| v == 0.0));
        let gr = gradient(&f);
        assert!(gr.comps.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_cosine_eigenvalue() {
        let g = grid2(64);
        let h = g.h();
        let f = ScalarField::from_fn(g, |p| (TAU * p[0]).cos());
        let lam = -(2.0 / (h * h)) * (1.0 - (TAU * h).cos());
        let l = laplacian(&f);
        for (a, b) in l.data.iter().zip(&f.data) {
            assert!((a - lam * b).abs() < 1e-9, "{a} vs {}", lam * b);
        }
    }

    #[test]
    fn laplacian_second_order() {
        let err = |n: usize| {
            let g = grid2(n);
            let f = ScalarField::from_fn(g, |p| (TAU * p[0]).sin() * (TAU * p[1]).cos());
            let l = laplacian(&f);
            l.data
                .iter()
                .zip(&f.data)
                .map(|(a, b)| (a + 2.0 * TAU * TAU * b).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn gradient_symbol_and_antisymmetry() {
        let g = grid2(64);
        let h = g.h();
        let f = ScalarField::from_fn(g, |p| (TAU * p[0]).sin() / TAU);
        let gr = gradient(&f);
        let expect = (TAU * h).sin() / (TAU * h);
        assert!((gr.comps[0][0] - expect).abs() < 1e-12);
        let c = ScalarField::from_fn(g, |p| (TAU * p[0]).cos());
        let gc = gradient(&c);
        // odd about x = 1/2: value at 1/2 + k h is minus the value at 1/2 - k h
        for k in 1..10 {
            let a = gc.comps[0][g.index(&[32 + k, 5])];
            let b = gc.comps[0][g.index(&[32 - k, 5])];
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_of_forward_gradient_is_laplacian() {
        for d in [2, 3] {
            let g = TorusGrid::new(d, 16).unwrap();
            let f = ScalarField::from_fn(g, |p| (TAU * p[0]).sin() * (3.0 * TAU * p[1]).cos() + p[d - 1] * p[0]);
            let a = backward_divergence(&forward_gradient(&f));
            let b = laplacian(&f);
            for (x, y) in a.data.iter().zip(&b.data) {
                assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0) * 256.0, "{x} {y}");
            }
        }
    }

    #[test]
    fn ball_sum_area() {
        let g = grid2(256);
        let one = ScalarField::constant(g, 1.0);
        let r = 0.25;
        let area = ball_sum(&one, &[0.5, 0.5], r).unwrap();
        let tol = 4.0 * g.h() * TAU * r;
        assert!((area - PI * r * r).abs() < tol, "area {area}");
        // off-grid point with a radius smaller than half a cell sees no cells
        let off = [0.5 + 0.5 * g.h(), 0.5 + 0.5 * g.h()];
        assert_eq!(ball_sum(&one, &off, 0.4 * g.h()).unwrap(), 0.0);
        assert!(ball_sum(&one, &[0.5, 0.5], 0.6).is_err());
        assert!(ball_sum(&one, &[0.5, 0.5], 0.0).is_err());
        // wraps across the seam
        let seam = ball_sum(&one, &[0.0, 0.0], r).unwrap();
        assert!((seam - area).abs() < 1e-12);
    }

    #[test]
    fn operators_commute_with_translation() {
        let g = TorusGrid::new(3, 8).unwrap();
        let f = ScalarField::from_fn(g, |p| (TAU * p[0]).sin() + p[1] * p[1] + (TAU * p[2]).cos() * p[0]);
        let shift = [3isize, -2, 5];
        let lhs = laplacian(&translate(&f, &shift));
        let rhs = translate(&laplacian(&f), &shift);
        assert_eq!(lhs, rhs);
        let gl = gradient(&translate(&f, &shift));
        let gr = gradient(&f);
        for k in 0..3 {
            let t = translate(&gr.component(k), &shift);
            assert_eq!(gl.comps[k], t.data);
        }
    }

    proptest::proptest! {
        #[test]
        fn ball_sum_monotone_in_radius(r1 in 0.01f64..0.5, r2 in 0.01f64..0.5, cx in 0.0f64..1.0, cy in 0.0f64..1.0) {
            let g = grid2(32);
            let f = ScalarField::from_fn(g, |p| 1.0 + (TAU * p[0]).sin().abs());
            let (a, b) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            proptest::prop_assert!(ball_sum(&f, &[cx, cy], a).unwrap() <= ball_sum(&f, &[cx, cy], b).unwrap());
        }
    }
}
