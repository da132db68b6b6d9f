//! Deterministic derivative-free optimizers: golden-section line search and
//! a fixed-rule Nelder–Mead simplex. No randomness anywhere — identical
//! inputs yield bit-identical iterates.

/// Minimizes `f` on `[a, b]` by golden-section search until the bracket is
/// smaller than `tol`. Returns (argmin, min).
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    if fc <= fd && fc <= fx {
        (c, fc)
    } else if fd <= fx {
        (d, fd)
    } else {
        (x, fx)
    }
}

/// Nelder–Mead simplex minimization with standard coefficients
/// (reflect 1, expand 2, contract 1/2, shrink 1/2).
///
/// Terminates when the function-value spread falls below `ftol` or after
/// `max_iter` iterations. Fully deterministic: ties in vertex ordering are
/// resolved by original index.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    step: f64,
    ftol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    for _ in 0..max_iter {
        // Order vertices by value (stable for determinism).
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];
        if (values[worst] - values[best]).abs() < ftol {
            break;
        }
        // Centroid of all but the worst.
        let mut centroid = vec![0.0; n];
        for &i in order.iter().take(n) {
            for k in 0..n {
                centroid[k] += simplex[i][k] / n as f64;
            }
        }
        let lerp = |from: &[f64], t: f64| -> Vec<f64> {
            (0..n)
                .map(|k| centroid[k] + t * (from[k] - centroid[k]))
                .collect()
        };
        let reflected = lerp(&simplex[worst], -1.0);
        let fr = f(&reflected);
        if fr < values[best] {
            let expanded = lerp(&simplex[worst], -2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contracted = if fr < values[worst] {
                lerp(&simplex[worst], -0.5)
            } else {
                lerp(&simplex[worst], 0.5)
            };
            let fcv = f(&contracted);
            if fcv < values[worst].min(fr) {
                simplex[worst] = contracted;
                values[worst] = fcv;
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[best].clone();
                for i in 0..=n {
                    if i == best {
                        continue;
                    }
                    for k in 0..n {
                        simplex[i][k] = anchor[k] + 0.5 * (simplex[i][k] - anchor[k]);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..=n {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best].clone(), values[best])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_quadratic() {
        let (x, fx) = golden_section(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-8);
        assert!((x - 0.3).abs() < 1e-6);
        assert!(fx < 1e-12);
    }

    #[test]
    fn golden_section_endpoint_minimum() {
        let (x, _) = golden_section(|x| -x, 0.0, 1.0, 1e-8);
        assert!((x - 1.0).abs() < 1e-6);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let f = |v: &[f64]| {
            let (x, y) = (v[0], v[1]);
            (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2)
        };
        let (x, fx) = nelder_mead(f, &[-1.2, 1.0], 0.5, 1e-12, 5000);
        assert!(fx < 1e-8, "fx = {fx}");
        assert!((x[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn nelder_mead_deterministic() {
        let f = |v: &[f64]| v.iter().map(|x| (x - 0.2).cos()).sum::<f64>();
        let a = nelder_mead(f, &[0.5, 0.7, 0.9], 0.3, 1e-10, 500);
        let b = nelder_mead(f, &[0.5, 0.7, 0.9], 0.3, 1e-10, 500);
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }
}
