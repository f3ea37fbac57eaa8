//! Shared helpers for the integration suites: an eigenvalue oracle that is
//! independent of the library's LAPACK path (characteristic polynomial via
//! Faddeev-LeVerrier, roots via Durand-Kerner), multiset comparison,
//! multinomial consistency bounds, and the seeded random-network suite.
#![allow(dead_code)]

use gibbswalk::bayesnet::BayesianNetwork;
use gibbswalk::fixtures;
use ndarray::Array2;
use num_complex::Complex64;

/// Coefficients c_0..c_n (monic, c_n = 1) of det(lambda I - A) by the
/// Faddeev-LeVerrier trace recurrence. Exact arithmetic except for the
/// divisions by k, so it shares nothing with an eigensolver.
pub fn char_poly(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut mk = Array2::<f64>::eye(n);
    for k in 1..=n {
        mk = a.dot(&mk);
        let c = -mk.diag().sum() / k as f64;
        coeffs[n - k] = c;
        for i in 0..n {
            mk[[i, i]] += c;
        }
    }
    coeffs
}

/// All complex roots of a monic real polynomial by Durand-Kerner, after
/// peeling off exact zero roots (trailing coefficients that vanish at the
/// polynomial's own scale). Intended for the small chains in this suite
/// (degree <= 8), where the method is reliably convergent.
pub fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut work: Vec<f64> = coeffs.to_vec();
    let mut roots = Vec::new();
    while work.len() > 1 && work[0].abs() <= 1e-10 * scale {
        roots.push(Complex64::new(0.0, 0.0));
        work.remove(0);
    }
    let deg = work.len() - 1;
    if deg == 0 {
        return roots;
    }
    // Monic normalization, then simultaneous iteration from a spiral of
    // non-symmetric starting points.
    let lead = work[deg];
    for c in &mut work {
        *c /= lead;
    }
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..deg).map(|k| seed.powu(k as u32 + 1)).collect();
    let eval = |x: Complex64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in work.iter().rev() {
            acc = acc * x + c;
        }
        acc
    };
    for _ in 0..1000 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if j != i {
                    denom *= z[i] - z[j];
                }
            }
            let step = eval(z[i]) / denom;
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-14 {
            break;
        }
    }
    roots.extend(z);
    roots
}

/// Eigenvalues of a small real matrix via the polynomial route.
pub fn eig_oracle(a: &Array2<f64>) -> Vec<Complex64> {
    poly_roots(&char_poly(a))
}

/// Greedy matching distance between two eigenvalue multisets: the largest
/// gap after pairing each left value with its nearest unused right value.
pub fn multiset_distance(left: &[Complex64], right: &[Complex64]) -> f64 {
    assert_eq!(left.len(), right.len());
    let mut used = vec![false; right.len()];
    let mut worst = 0.0f64;
    for l in left {
        let mut best = f64::INFINITY;
        let mut best_j = usize::MAX;
        for (j, r) in right.iter().enumerate() {
            if !used[j] {
                let d = (l - r).norm();
                if d < best {
                    best = d;
                    best_j = j;
                }
            }
        }
        used[best_j] = true;
        worst = worst.max(best);
    }
    worst
}

/// Per-bin 3-sigma multinomial consistency of counts against probabilities.
/// Zero-probability bins must be exactly empty.
pub fn within_three_sigma(counts: &[u64], probs: &[f64], shots: u64) -> Result<(), String> {
    if counts.len() != probs.len() {
        return Err(format!(
            "bin mismatch: {} counts vs {} probabilities",
            counts.len(),
            probs.len()
        ));
    }
    for (i, (&c, &p)) in counts.iter().zip(probs).enumerate() {
        if p < 1e-15 {
            if c != 0 {
                return Err(format!("bin {i}: {c} counts in a zero-probability bin"));
            }
            continue;
        }
        let mu = shots as f64 * p;
        let sigma = (shots as f64 * p * (1.0 - p)).sqrt();
        let dev = (c as f64 - mu).abs();
        if dev > 3.0 * sigma {
            return Err(format!(
                "bin {i}: count {c} deviates {:.2} sigma from mean {mu:.1}",
                dev / sigma
            ));
        }
    }
    Ok(())
}

/// 25 reproducible random networks, 2..=6 binary nodes (<= 6 qubits each).
pub fn seeded_suite() -> Vec<(String, BayesianNetwork)> {
    (0..25u64)
        .map(|i| {
            let n = 2 + (i as usize % 5);
            (format!("seeded-{i}-n{n}"), fixtures::seeded_net(100 + i, n))
        })
        .collect()
}

/// Least-squares slope of ln(y) against ln(x).
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Two-node network with an explicit edge whose sweep kernel is
/// nevertheless reversible: the child's CPT rows coincide, which is the
/// only way a two-node systematic sweep gets a symmetric hybrid kernel.
pub fn reversible_pair() -> BayesianNetwork {
    BayesianNetwork::new(vec![
        gibbswalk::NodeSpec {
            name: "x0".into(),
            cardinality: 2,
            parents: vec![],
            cpt: vec![vec![0.3, 0.7]],
        },
        gibbswalk::NodeSpec {
            name: "x1".into(),
            cardinality: 2,
            parents: vec![0],
            cpt: vec![vec![0.4, 0.6], vec![0.4, 0.6]],
        },
    ])
    .unwrap()
}
