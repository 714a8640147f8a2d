//! Small bounded local optimizers used for hyperparameter estimation and
//! acquisition refinement.

/// Bounded Nelder-Mead minimization. Iterates are clamped to `bounds`
/// (lower, upper per coordinate). Returns the best point and value found.
pub(crate) fn nelder_mead<F>(
    f: F,
    x0: &[f64],
    init_step: f64,
    bounds: &[(f64, f64)],
    max_iter: usize,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let clamp = |x: &mut Vec<f64>| {
        for i in 0..n {
            x[i] = x[i].clamp(bounds[i].0, bounds[i].1);
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        let span = bounds[i].1 - bounds[i].0;
        v[i] += init_step * span.min(1.0);
        clamp(&mut v);
        if v == simplex[0] {
            v[i] -= 2.0 * init_step * span.min(1.0);
            clamp(&mut v);
        }
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    for _ in 0..max_iter {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let best = idx[0];
        let worst = idx[n];
        let second_worst = idx[n - 1];

        if (values[worst] - values[best]).abs()
            <= 1e-12 * (1.0 + values[best].abs())
        {
            break;
        }

        // centroid of all but worst
        let mut centroid = vec![0.0; n];
        for (k, v) in simplex.iter().enumerate() {
            if k == worst {
                continue;
            }
            for i in 0..n {
                centroid[i] += v[i] / n as f64;
            }
        }

        let blend = |a: f64| -> Vec<f64> {
            let mut v = vec![0.0; n];
            for i in 0..n {
                v[i] = centroid[i] + a * (centroid[i] - simplex[worst][i]);
            }
            let mut v = v;
            clamp(&mut v);
            v
        };

        let refl = blend(1.0);
        let f_refl = f(&refl);
        if f_refl < values[best] {
            let exp = blend(2.0);
            let f_exp = f(&exp);
            if f_exp < f_refl {
                simplex[worst] = exp;
                values[worst] = f_exp;
            } else {
                simplex[worst] = refl;
                values[worst] = f_refl;
            }
        } else if f_refl < values[second_worst] {
            simplex[worst] = refl;
            values[worst] = f_refl;
        } else {
            let contr = blend(-0.5);
            let f_contr = f(&contr);
            if f_contr < values[worst] {
                simplex[worst] = contr;
                values[worst] = f_contr;
            } else {
                // shrink toward best
                let best_pt = simplex[best].clone();
                for k in 0..=n {
                    if k == best {
                        continue;
                    }
                    for i in 0..n {
                        simplex[k][i] = best_pt[i] + 0.5 * (simplex[k][i] - best_pt[i]);
                    }
                    values[k] = f(&simplex[k]);
                }
            }
        }
    }

    let mut best = 0;
    for k in 1..=n {
        if values[k] < values[best] {
            best = k;
        }
    }
    (simplex[best].clone(), values[best])
}

/// Projected gradient ascent with backtracking, for maximizing a smooth
/// criterion over a box. `grad_f` returns (value, gradient).
pub(crate) fn gradient_ascent<F>(
    grad_f: F,
    x0: &[f64],
    bounds: &[(f64, f64)],
    max_iter: usize,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = grad_f(&x);
    let mut step = 0.1;
    for _ in 0..max_iter {
        let gnorm: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm < 1e-14 {
            break;
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut xn = vec![0.0; n];
            for i in 0..n {
                xn[i] = (x[i] + step * g[i] / gnorm).clamp(bounds[i].0, bounds[i].1);
            }
            let (fxn, gn) = grad_f(&xn);
            if fxn > fx {
                x = xn;
                fx = fxn;
                g = gn;
                step *= 1.5;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved || step < 1e-12 {
            break;
        }
    }
    (x, fx)
}
