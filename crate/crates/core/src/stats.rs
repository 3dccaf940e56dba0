//! Small numerical helpers: moments, correlations, and the Student t
//! distribution via the regularized incomplete beta function.

use crate::real::Real;

pub fn mean<F: Real>(xs: &[F]) -> F {
    if xs.is_empty() {
        return F::zero();
    }
    xs.iter().copied().sum::<F>() / F::from_count(xs.len())
}

/// Standard deviation with divisor `n - 1`. `None` for fewer than two values.
pub fn sample_std<F: Real>(xs: &[F]) -> Option<F> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let ss: F = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    Some((ss / F::from_count(xs.len() - 1)).sqrt())
}

/// Pearson correlation; 0 when either side has zero variance.
pub fn pearson<F: Real>(xs: &[F], ys: &[F]) -> F {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = F::zero();
    let mut sxx = F::zero();
    let mut syy = F::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
        syy = syy + (y - my) * (y - my);
    }
    if sxx == F::zero() || syy == F::zero() {
        return F::zero();
    }
    (sxy / (sxx.sqrt() * syy.sqrt()))
        .max(-F::one())
        .min(F::one())
}

/// 1-based ranks; tied values share their average rank.
pub fn average_ranks<F: Real>(xs: &[F]) -> Vec<F> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("finite values"));
    let mut ranks = vec![F::zero(); xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && xs[idx[j]] == xs[idx[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let avg = F::from_count(i + 1 + j) / F::lit(2.0);
        for &k in &idx[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

pub fn spearman<F: Real>(xs: &[F], ys: &[F]) -> F {
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Lanczos approximation (g = 7, n = 9) of `ln Γ(x)` for `x > 0`.
pub fn ln_gamma<F: Real>(x: F) -> F {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let half = F::lit(0.5);
    if x < half {
        // reflection
        let pi = F::lit(std::f64::consts::PI);
        return (pi / (pi * x).sin()).ln() - ln_gamma(F::one() - x);
    }
    let x = x - F::one();
    let mut a = F::lit(COEF[0]);
    let t = x + F::lit(7.5);
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a = a + F::lit(c) / (x + F::from_count(i));
    }
    F::lit(0.5 * (2.0 * std::f64::consts::PI).ln()) + (x + half) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf<F: Real>(a: F, b: F, x: F) -> F {
    let tiny = F::lit(1e-300).max(F::min_positive_value());
    let tol = F::lit(1e-15).max(F::epsilon());
    let one = F::one();
    let two = F::lit(2.0);
    let (qab, qap, qam) = (a + b, a + one, a - one);
    let mut c = one;
    let mut d = one - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = d.recip();
    let mut h = d;
    for m in 1..=10_000usize {
        let m = F::from_count(m);
        let m2 = two * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        h = h * d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let delta = d * c;
        h = h * delta;
        if (delta - one).abs() < tol {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)` for `a, b > 0`, `x` in [0, 1].
pub fn regularized_incomplete_beta<F: Real>(x: F, a: F, b: F) -> F {
    if x <= F::zero() {
        return F::zero();
    }
    if x >= F::one() {
        return F::one();
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (F::one() - x).ln();
    let front = ln_front.exp();
    // the continued fraction converges fast for x < (a + 1) / (a + b + 2)
    if x < (a + F::one()) / (a + b + F::lit(2.0)) {
        front * beta_cf(a, b, x) / a
    } else {
        F::one() - front * beta_cf(b, a, F::one() - x) / b
    }
}

/// Two-sided p-value of a Student t statistic with `dof` degrees of freedom:
/// `P(|T| >= |t|) = I_{dof / (dof + t^2)}(dof / 2, 1 / 2)`.
pub fn student_t_two_sided_p<F: Real>(t: F, dof: F) -> F {
    if t.is_infinite() {
        return F::zero();
    }
    let x = dof / (dof + t * t);
    regularized_incomplete_beta(x, dof / F::lit(2.0), F::lit(0.5))
        .max(F::zero())
        .min(F::one())
}
