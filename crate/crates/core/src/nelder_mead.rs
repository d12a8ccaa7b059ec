//! Derivative-free Nelder–Mead simplex minimization.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Edge length of the initial right-angled simplex.
    pub initial_step: f64,
    /// Converged once every vertex is within `tol` of the best vertex in
    /// every coordinate.
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadResult<const D: usize> {
    pub x: [f64; D],
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The guard passed to [`nelder_mead`] rejected the best vertex.
    pub aborted: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn lerp<const D: usize>(from: &[f64; D], to: &[f64; D], t: f64) -> [f64; D] {
    std::array::from_fn(|i| from[i] + t * (to[i] - from[i]))
}

/// Minimizes `f` from `x0`. `keep_going` sees the current best vertex after
/// every iteration; returning `false` stops the search unconverged.
pub fn nelder_mead<const D: usize>(
    mut f: impl FnMut(&[f64; D]) -> f64,
    x0: [f64; D],
    opts: &NelderMeadOptions,
    keep_going: impl Fn(&[f64; D]) -> bool,
) -> NelderMeadResult<D> {
    let mut simplex: Vec<([f64; D], f64)> = Vec::with_capacity(D + 1);
    simplex.push((x0, f(&x0)));
    for i in 0..D {
        let mut v = x0;
        v[i] += opts.initial_step;
        simplex.push((v, f(&v)));
    }
    let mut iterations = 0;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0];
        let spread_ok = simplex[1..]
            .iter()
            .all(|(v, _)| v.iter().zip(&best.0).all(|(a, b)| (a - b).abs() < opts.tol));
        let done = |converged, aborted| NelderMeadResult {
            x: best.0,
            f: best.1,
            iterations,
            converged,
            aborted,
        };
        if spread_ok {
            return done(true, false);
        }
        if !keep_going(&best.0) {
            return done(false, true);
        }
        if iterations >= opts.max_iter {
            return done(false, false);
        }
        iterations += 1;

        let centroid: [f64; D] =
            std::array::from_fn(|i| simplex[..D].iter().map(|(v, _)| v[i]).sum::<f64>() / D as f64);
        let (worst, f_worst) = simplex[D];
        let f_second = simplex[D - 1].1;

        let reflected = lerp(&centroid, &worst, -REFLECT);
        let f_reflected = f(&reflected);
        if f_reflected < best.1 {
            let expanded = lerp(&centroid, &worst, -REFLECT * EXPAND);
            let f_expanded = f(&expanded);
            simplex[D] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
            continue;
        }
        if f_reflected < f_second {
            simplex[D] = (reflected, f_reflected);
            continue;
        }
        let (contracted, accept) = if f_reflected < f_worst {
            let c = lerp(&centroid, &reflected, CONTRACT);
            let fc = f(&c);
            ((c, fc), fc <= f_reflected)
        } else {
            let c = lerp(&centroid, &worst, CONTRACT);
            let fc = f(&c);
            ((c, fc), fc < f_worst)
        };
        if accept {
            simplex[D] = contracted;
            continue;
        }
        let anchor = best.0;
        for vertex in simplex.iter_mut().skip(1) {
            let v = lerp(&anchor, &vertex.0, SHRINK);
            *vertex = (v, f(&v));
        }
    }
}
