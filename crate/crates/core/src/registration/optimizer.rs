use crate::error::{Error, Result};

const ALPHA: f64 = 1.0;
const GAMMA: f64 = 2.0;
const RHO: f64 = 0.5;
const SIGMA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop once `f_worst - f_best` falls below this.
    pub f_tol: f64,
    /// Optional second stop: every vertex within `x_tol * scale[j]` of the
    /// best vertex in every coordinate.
    pub x_tol: Option<f64>,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            f_tol: 1e-8,
            x_tol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Downhill simplex minimization.
///
/// The initial simplex is `x0` plus `x0 + scale[j] e_j` for each coordinate.
pub fn nelder_mead<F>(
    mut objective: F,
    x0: &[f64],
    scale: &[f64],
    opts: &NelderMeadOptions,
) -> Result<NelderMeadResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 || scale.len() != n {
        return Err(Error::InvalidArgument(format!(
            "nelder_mead needs a non-empty start and one step per parameter ({} vs {})",
            n,
            scale.len()
        )));
    }
    if scale.iter().any(|s| !(s.is_finite() && *s != 0.0)) {
        return Err(Error::InvalidArgument("simplex steps must be finite and non-zero".into()));
    }

    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evaluations: &mut usize| -> Result<f64> {
        *evaluations += 1;
        let f = objective(x);
        if f.is_finite() {
            Ok(f)
        } else {
            Err(Error::Optimizer(format!("objective returned {f} at {x:?}")))
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for j in 0..n {
        let mut v = x0.to_vec();
        v[j] += scale[j];
        simplex.push(v);
    }
    let mut fvals = Vec::with_capacity(n + 1);
    for v in &simplex {
        fvals.push(eval(v, &mut evaluations)?);
    }

    let mut order: Vec<usize> = (0..=n).collect();
    let mut iterations = 0usize;
    let mut converged = false;
    let mut centroid = vec![0.0; n];
    loop {
        // Stable sort keeps x0 first among equal values.
        order.sort_by(|&a, &b| fvals[a].total_cmp(&fvals[b]));
        let best = order[0];
        let worst = order[n];
        let second = order[n - 1];

        if fvals[worst] - fvals[best] < opts.f_tol {
            converged = true;
            break;
        }
        if let Some(xt) = opts.x_tol {
            let small = simplex.iter().all(|v| {
                v.iter()
                    .zip(&simplex[best])
                    .zip(scale)
                    .all(|((a, b), s)| (a - b).abs() <= xt * s.abs())
            });
            if small {
                converged = true;
                break;
            }
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n as f64);

        let along = |t: f64, from: &[f64]| -> Vec<f64> {
            centroid.iter().zip(from).map(|(c, x)| c + t * (x - c)).collect()
        };

        let xr = along(-ALPHA, &simplex[worst]);
        let fr = eval(&xr, &mut evaluations)?;
        if fr < fvals[best] {
            let xe = along(GAMMA, &xr);
            let fe = eval(&xe, &mut evaluations)?;
            if fe < fr {
                simplex[worst] = xe;
                fvals[worst] = fe;
            } else {
                simplex[worst] = xr;
                fvals[worst] = fr;
            }
            continue;
        }
        if fr < fvals[second] {
            simplex[worst] = xr;
            fvals[worst] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < fvals[worst] {
            let xc = along(RHO, &xr);
            let fc = eval(&xc, &mut evaluations)?;
            let ok = fc <= fr;
            (xc, fc, ok)
        } else {
            let xc = along(RHO, &simplex[worst]);
            let fc = eval(&xc, &mut evaluations)?;
            let ok = fc < fvals[worst];
            (xc, fc, ok)
        };
        if accept {
            simplex[worst] = xc;
            fvals[worst] = fc;
            continue;
        }
        let xb = simplex[best].clone();
        for &i in &order[1..] {
            let v: Vec<f64> = xb
                .iter()
                .zip(&simplex[i])
                .map(|(b, x)| b + SIGMA * (x - b))
                .collect();
            fvals[i] = eval(&v, &mut evaluations)?;
            simplex[i] = v;
        }
    }

    let best = order[0];
    Ok(NelderMeadResult {
        x: simplex[best].clone(),
        f: fvals[best],
        iterations,
        evaluations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let opts = NelderMeadOptions {
            f_tol: 1e-12,
            ..Default::default()
        };
        let r = nelder_mead(
            |p| (p[0] - 3.0).powi(2) + (p[1] + 1.0).powi(2),
            &[0.0, 0.0],
            &[1.0, 1.0],
            &opts,
        )
        .unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 3.0).abs() < 1e-5 && (r.x[1] + 1.0).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn rosenbrock_valley() {
        let r = nelder_mead(
            |p| 100.0 * (p[1] - p[0] * p[0]).powi(2) + (1.0 - p[0]).powi(2),
            &[-1.2, 1.0],
            &[0.1, 0.1],
            &NelderMeadOptions::default(),
        )
        .unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] - 1.0).abs() < 1e-3, "{:?}", r.x);
    }

    #[test]
    fn best_never_worsens() {
        let start = [2.0, -3.0, 0.5];
        let f = |p: &[f64]| p.iter().map(|x| x.powi(4) - x * x).sum::<f64>();
        let r = nelder_mead(f, &start, &[0.5; 3], &NelderMeadOptions::default()).unwrap();
        assert!(r.f <= f(&start));
    }

    #[test]
    fn constant_objective_returns_start() {
        let r = nelder_mead(|_| 4.0, &[1.5, -2.0], &[0.1, 0.1], &NelderMeadOptions::default())
            .unwrap();
        assert_eq!(r.x, vec![1.5, -2.0]);
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
    }

    #[test]
    fn non_finite_aborts() {
        let e = nelder_mead(
            |p| if p[0] > 0.5 { f64::NAN } else { p[0] * p[0] },
            &[0.0],
            &[1.0],
            &NelderMeadOptions::default(),
        );
        assert!(matches!(e, Err(Error::Optimizer(_))));
    }

    #[test]
    fn bad_steps_rejected() {
        assert!(nelder_mead(|_| 0.0, &[0.0, 0.0], &[1.0], &NelderMeadOptions::default()).is_err());
        assert!(nelder_mead(|_| 0.0, &[0.0], &[0.0], &NelderMeadOptions::default()).is_err());
    }

    #[test]
    fn iteration_cap_is_respected() {
        let opts = NelderMeadOptions {
            max_iterations: 5,
            ..Default::default()
        };
        let r = nelder_mead(|p| p[0] * p[0] + 10.0 * p[1] * p[1], &[5.0, 5.0], &[1.0, 1.0], &opts)
            .unwrap();
        assert_eq!(r.iterations, 5);
        assert!(!r.converged);
        assert!(r.f < 275.0);
    }
}
