//! Reference computations that share no numerics with the library paths
//! they check.

use statrs::function::gamma::ln_gamma;

/// Double-exponential quadrature of `h(x, 1 - x)` over (0, 1).
///
/// Both arguments are supplied so integrands with endpoint singularities
/// can be evaluated without cancellation.
pub fn tanh_sinh<F: Fn(f64, f64) -> f64>(h: F, rel: f64) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let node = |t: f64| {
        let s = half_pi * t.sinh();
        let e = (-2.0 * s.abs()).exp();
        // x = (1 + tanh s)/2 written without cancellation at either end
        let small = e / (1.0 + e);
        let (x, y) = if s >= 0.0 { (1.0 - small, small) } else { (small, 1.0 - small) };
        let w = half_pi * t.cosh() * 2.0 * small * (1.0 - small);
        if x <= 0.0 || y <= 0.0 || w == 0.0 {
            0.0
        } else {
            w * h(x, y)
        }
    };
    let t_max = 6.5;
    let mut step = 0.5;
    let mut sum = node(0.0);
    let mut k = 1;
    while k as f64 * step <= t_max {
        let t = k as f64 * step;
        sum += node(t) + node(-t);
        k += 1;
    }
    let mut estimate = sum * step;
    for _ in 0..14 {
        step /= 2.0;
        let mut k = 1;
        while k as f64 * step <= t_max {
            let t = k as f64 * step;
            sum += node(t) + node(-t);
            k += 2;
        }
        let next = sum * step;
        if (next - estimate).abs() <= rel * next.abs() && step < 0.05 {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// `lambda_{b,k} = int_0^1 x^{k-2} (1-x)^{b-k} Lambda(dx)` for the
/// Beta(2 - alpha, alpha) measure, by quadrature of the density.
pub fn merger_rate_by_quadrature(alpha: f64, b: usize, k: usize) -> f64 {
    let ln_norm = ln_gamma(2.0 - alpha) + ln_gamma(alpha) - ln_gamma(2.0);
    let p = k as f64 - 1.0 - alpha;
    let q = (b - k) as f64 + alpha - 1.0;
    // scale by the value at the mode so the quadrature works near 1
    let mode = if p + q > 0.0 { (p / (p + q)).clamp(1e-300, 1.0 - 1e-16) } else { 0.5 };
    let ln_peak = if p > 0.0 { p * mode.ln() } else { 0.0 } + if q > 0.0 { q * (1.0 - mode).ln() } else { 0.0 };
    let scaled = tanh_sinh(|x, y| (p * x.ln() + q * y.ln() - ln_peak).exp(), 1e-13);
    scaled * (ln_peak - ln_norm).exp()
}

fn ln_choose(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Law of the number of blocks lost at a merger among `j` blocks, indexed by loss.
pub fn step_law(alpha: f64, j: usize) -> Vec<f64> {
    let w: Vec<f64> = (2..=j).map(|k| (ln_choose(j, k)).exp() * merger_rate_by_quadrature(alpha, j, k)).collect();
    let total: f64 = w.iter().sum();
    let mut out = vec![0.0];
    out.extend(w.iter().map(|v| v / total));
    out
}

/// Every block-count sequence from `n` down to 1 with its probability.
pub fn enumerate_paths(alpha: f64, n: usize) -> Vec<(Vec<usize>, f64)> {
    let laws: Vec<Vec<f64>> = (0..=n).map(|j| if j >= 2 { step_law(alpha, j) } else { Vec::new() }).collect();
    let mut out = Vec::new();
    let mut stack = vec![(vec![n], 1.0)];
    while let Some((path, prob)) = stack.pop() {
        let x = *path.last().expect("non-empty path");
        if x == 1 {
            out.push((path, prob));
            continue;
        }
        for (loss, &p) in laws[x].iter().enumerate().skip(1) {
            let mut next = path.clone();
            next.push(x - loss);
            stack.push((next, prob * p));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Limit scales of the four worked examples in closed form.
pub fn example_sigma(example: u8, alpha: f64) -> f64 {
    use std::f64::consts::PI;
    let a = alpha;
    let g = |x: f64| ln_gamma(x).exp();
    let s = 2.0 * (PI * a / 2.0).sin();
    match example {
        1 => (PI * (a - 1.0).powf(1.0 + a) / (s * g(a) * g(2.0 - a))).powf(1.0 / a),
        2 => (PI * a.powf(a) * (a - 1.0).powf(1.0 + a) * g(a).powf(a - 1.0) / (s * g(2.0 - a) * (1.0 + a - a * a)))
            .powf(1.0 / a),
        3 => (PI * a.powf(a) * (a - 1.0).powf(1.0 + a) * (2.0 - a).powf(a) * g(a).powf(a - 1.0) / (s * g(2.0 - a)))
            .powf(1.0 / a),
        4 => {
            let r = ln_gamma((a + 1.0 - a * a) / (a - 1.0)) - ln_gamma(2.0 - a) - ln_gamma(a / (a - 1.0));
            (2.0 - a).powi(2) * (PI * a / s * r.exp()).powf(1.0 / a)
        }
        _ => panic!("examples are numbered 1 to 4"),
    }
}

/// Exact `E tau_j`, `E L_j` and `E l_j` for `j = 0..=n`, by first-step
/// recursion over the block-counting chain.
///
/// The external length is `j` times the time until a tagged lineage first
/// takes part in a merger; a merger of `k` out of `j` blocks misses it with
/// probability `(j - k)/j`.
pub fn exact_means(ctx: &ebc_core::RatesContext, n: usize) -> ebc_core::Result<Vec<(f64, f64, f64)>> {
    let mut tau = vec![0.0; n + 1];
    let mut length = vec![0.0; n + 1];
    let mut tagged = vec![0.0; n + 1];
    for j in 2..=n {
        let pmf = ctx.merger_size_pmf(j)?;
        let hold = 1.0 / ctx.total_rate(j)?;
        let (mut t, mut l, mut e) = (1.0, j as f64 * hold, hold);
        for (idx, p) in pmf.iter().enumerate() {
            let next = j - (idx + 1);
            t += p * tau[next];
            l += p * length[next];
            e += p * (next as f64 - 1.0) / j as f64 * tagged[next];
        }
        tau[j] = t;
        length[j] = l;
        tagged[j] = e;
    }
    Ok((0..=n).map(|j| (tau[j], length[j], j as f64 * tagged[j])).collect())
}
