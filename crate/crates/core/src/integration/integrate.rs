//! Perspective depth-from-normal integration in log-depth.
//!
//! For a pixel with ray `r = K^-1 (u, v, 1)` and normal `n`, the surface
//! `X = d r` satisfies `n . dX/du = 0`, which gives
//! `d ln d / du = -n_x / (fx n.r)` and `d ln d / dv = -n_y / (fy n.r)`.
//! Every pair of 4-connected valid pixels contributes one equation
//! `z_q - z_p = (g_p + g_q) / 2`; the normal equations (a graph Laplacian)
//! are solved with Jacobi-preconditioned conjugate gradients and the result is
//! shifted so the median depth equals the anchor.

use crate::error::{Error, Result};
use crate::geometry::field::{check_dims, median};
use crate::geometry::{DepthMap, Grid, Intrinsics, NormalMap};
use crate::scalar::Real;

/// Integrated depth with solver diagnostics.
#[derive(Clone, Debug)]
pub struct Integration<T> {
    pub depth: DepthMap<T>,
    /// RMS residual of the gradient equations.
    pub residual: T,
    pub iterations: usize,
}

/// Minimum `cos` between the normal and the reversed viewing ray.
const MIN_FACING: f64 = 1e-3;

struct Edge<T> {
    p: usize,
    q: usize,
    rhs: T,
}

fn log_gradients<T: Real>(normals: &NormalMap<T>, k: &Intrinsics<T>) -> Grid<Option<(T, T)>> {
    let (w, h) = normals.dims();
    Grid::from_fn(w, h, |x, y| {
        let n = normals.get(x, y)?;
        let r = k.ray(T::from_usize_lossy(x), T::from_usize_lossy(y));
        let nr = n.dot(&r);
        if !(-nr > T::lit(MIN_FACING) * r.norm()) {
            return None;
        }
        Some((-n.x / (k.fx * nr), -n.y / (k.fy * nr)))
    })
}

fn build_edges<T: Real>(grads: &Grid<Option<(T, T)>>) -> Vec<Edge<T>> {
    let (w, h) = grads.dims();
    let half = T::lit(0.5);
    let mut edges = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let Some((gu, gv)) = *grads.get(x, y) else { continue };
            let p = grads.index(x, y);
            if x + 1 < w {
                if let Some((gu2, _)) = *grads.get(x + 1, y) {
                    edges.push(Edge {
                        p,
                        q: p + 1,
                        rhs: (gu + gu2) * half,
                    });
                }
            }
            if y + 1 < h {
                if let Some((_, gv2)) = *grads.get(x, y + 1) {
                    edges.push(Edge {
                        p,
                        q: p + w,
                        rhs: (gv + gv2) * half,
                    });
                }
            }
        }
    }
    edges
}

/// Applies `L + diag(screen)`.
fn apply_laplacian<T: Real>(edges: &[Edge<T>], screen: &[T], z: &[T], out: &mut [T]) {
    for ((o, s), zi) in out.iter_mut().zip(screen).zip(z) {
        *o = *s * *zi;
    }
    for e in edges {
        let diff = z[e.q] - z[e.p];
        out[e.q] += diff;
        out[e.p] -= diff;
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

/// Solves `(L + S) z = A^T b + S t` by preconditioned conjugate gradients,
/// starting from `z`. `degree` holds the diagonal of `L + S`. Returns the
/// iteration count.
fn solve<T: Real>(edges: &[Edge<T>], screen: &[T], target: &[T], degree: &[T], z: &mut [T], tol: T, max_iter: usize) -> usize {
    let n = z.len();
    let mut rhs: Vec<T> = screen.iter().zip(target).map(|(s, t)| *s * *t).collect();
    for e in edges {
        rhs[e.q] += e.rhs;
        rhs[e.p] -= e.rhs;
    }
    let mut lz = vec![T::zero(); n];
    apply_laplacian(edges, screen, z, &mut lz);
    let mut r: Vec<T> = rhs.iter().zip(&lz).map(|(b, a)| *b - *a).collect();
    let precond = |v: &[T], out: &mut [T]| {
        for i in 0..n {
            out[i] = if degree[i] > T::zero() { v[i] / degree[i] } else { T::zero() };
        }
    };
    let mut s = vec![T::zero(); n];
    precond(&r, &mut s);
    let mut p = s.clone();
    let mut rs = dot(&r, &s);
    let b_norm = dot(&rhs, &rhs).sqrt().max(T::lit(1e-30));
    let mut ap = vec![T::zero(); n];
    for it in 0..max_iter {
        if dot(&r, &r).sqrt() <= tol * b_norm {
            return it;
        }
        apply_laplacian(edges, screen, &p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            return it;
        }
        let alpha = rs / pap;
        for i in 0..n {
            z[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precond(&r, &mut s);
        let rs_new = dot(&r, &s);
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = s[i] + beta * p[i];
        }
    }
    max_iter
}

/// Integrates a normal map into depth whose median equals `anchor_depth`.
pub fn integrate_normals<T: Real>(normals: &NormalMap<T>, intrinsics: &Intrinsics<T>, anchor_depth: T) -> Result<Integration<T>> {
    integrate_normals_from(normals, intrinsics, anchor_depth, None)
}

/// As [`integrate_normals`], warm-starting the solver from `guess`.
pub fn integrate_normals_from<T: Real>(
    normals: &NormalMap<T>,
    intrinsics: &Intrinsics<T>,
    anchor_depth: T,
    guess: Option<&DepthMap<T>>,
) -> Result<Integration<T>> {
    integrate(normals, intrinsics, anchor_depth, guess, None)
}

/// As [`integrate_normals_from`], with every pixel where `target` is valid
/// also pulled towards it: the energy gains `weight (ln d - ln target)^2`
/// per pixel. The result is still median-anchored.
pub fn integrate_normals_screened<T: Real>(
    normals: &NormalMap<T>,
    intrinsics: &Intrinsics<T>,
    anchor_depth: T,
    guess: Option<&DepthMap<T>>,
    target: &DepthMap<T>,
    weight: T,
) -> Result<Integration<T>> {
    if !(weight >= T::zero()) || !weight.is_finite() {
        return Err(Error::invalid("screening weight must be non-negative"));
    }
    integrate(normals, intrinsics, anchor_depth, guess, Some((target, weight)))
}

fn integrate<T: Real>(
    normals: &NormalMap<T>,
    intrinsics: &Intrinsics<T>,
    anchor_depth: T,
    guess: Option<&DepthMap<T>>,
    screen: Option<(&DepthMap<T>, T)>,
) -> Result<Integration<T>> {
    check_dims(normals.dims(), intrinsics.dims())?;
    if !(anchor_depth > T::zero()) || !anchor_depth.is_finite() {
        return Err(Error::invalid("anchor depth must be positive"));
    }
    let (w, h) = normals.dims();
    let grads = log_gradients(normals, intrinsics);
    let edges = build_edges(&grads);
    if edges.is_empty() {
        return Err(Error::SolverFailure {
            reason: "no usable gradient constraints (normals missing or grazing)".into(),
            iterations: 0,
            residual: f64::NAN,
            constraints: 0,
        });
    }
    let n = w * h;
    let mut degree = vec![T::zero(); n];
    for e in &edges {
        degree[e.p] += T::one();
        degree[e.q] += T::one();
    }
    let mut weights = vec![T::zero(); n];
    let mut target = vec![T::zero(); n];
    if let Some((t, weight)) = screen {
        check_dims(t.dims(), normals.dims())?;
        for i in 0..n {
            if let Some(d) = t.get(i % w, i / w) {
                weights[i] = weight;
                target[i] = d.ln();
            }
        }
    }
    let mut z = vec![T::zero(); n];
    if let Some(g) = guess {
        check_dims(g.dims(), normals.dims())?;
        for (i, zi) in z.iter_mut().enumerate() {
            if let Some(d) = g.get(i % w, i / w) {
                *zi = d.ln();
            }
        }
    }
    // f32 cannot resolve a tighter relative residual
    let tol = if T::default_epsilon() > T::lit(1e-10) { T::lit(1e-6) } else { T::lit(1e-11) };
    let diagonal: Vec<T> = degree.iter().zip(&weights).map(|(d, s)| *d + *s).collect();
    let iterations = solve(&edges, &weights, &target, &diagonal, &mut z, tol, 20 * n.max(100));

    let mut sq = T::zero();
    for e in &edges {
        let r = z[e.q] - z[e.p] - e.rhs;
        sq += r * r;
    }
    let residual = (sq / T::from_usize_lossy(edges.len())).sqrt();

    let mut logs: Vec<T> = (0..n).filter(|i| degree[*i] > T::zero()).map(|i| z[i]).collect();
    let med = median(&mut logs).expect("edges imply nodes");
    let values: Vec<T> = (0..n)
        .map(|i| {
            if degree[i] > T::zero() {
                anchor_depth * (z[i] - med).exp()
            } else {
                T::zero()
            }
        })
        .collect();
    if !residual.is_finite() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverFailure {
            reason: "non-finite solution".into(),
            iterations,
            residual: residual.as_f64(),
            constraints: edges.len(),
        });
    }
    let depth = DepthMap::from_values(Grid::new(w, h, values)?);
    Ok(Integration {
        depth,
        residual,
        iterations,
    })
}
