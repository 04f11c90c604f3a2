use super::StatError;

/// ln(n choose j) for j = 0..=n via the multiplicative recurrence.
fn ln_binomials(n: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0f64;
    out.push(0.0);
    for j in 1..=n {
        acc += ((n - j + 1) as f64).ln() - (j as f64).ln();
        out.push(acc);
    }
    out
}

/// P(X >= k) for X ~ Binomial(n, p), summed in log space.
pub fn binomial_upper_tail(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    upper_tail_with(&ln_binomials(n), k, n, p)
}

fn upper_tail_with(ln_c: &[f64], k: u64, n: u64, p: f64) -> f64 {
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let terms: Vec<f64> = (k..=n)
        .map(|j| ln_c[j as usize] + j as f64 * lp + (n - j) as f64 * lq)
        .collect();
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: f64 = terms.iter().map(|t| (t - peak).exp()).sum();
    (peak + scaled.ln()).exp().min(1.0)
}

/// Exact one-sided lower confidence bound on a binomial rate: 0 when no
/// violations were seen, otherwise the `p` at which `P(X >= k) = alpha`.
pub fn violation_rate_lower_bound(k: u64, n: u64, alpha: f64) -> Result<f64, StatError> {
    if n == 0 {
        return Err(StatError::Domain("n must be at least 1".into()));
    }
    if k > n {
        return Err(StatError::Domain(format!("k = {k} exceeds n = {n}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatError::Domain(format!(
            "alpha = {alpha} must lie strictly between 0 and 1"
        )));
    }
    if k == 0 {
        return Ok(0.0);
    }
    if k == n {
        return Ok(alpha.powf(1.0 / n as f64));
    }
    let ln_c = ln_binomials(n);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    // The tail is increasing in p; 200 halvings exhaust f64 resolution.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if upper_tail_with(&ln_c, k, n, mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
