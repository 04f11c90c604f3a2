use super::StatError;

/// Relative slack when deciding whether a table is "as extreme" as the
/// observed one, absorbing rounding in the log-factorial sums.
const TIE_TOLERANCE: f64 = 1e-9;

fn ln_factorials(n: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0f64;
    out.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        out.push(acc);
    }
    out
}

/// Two-sided Fisher exact test for the table `[[a, b], [c, d]]`: the total
/// probability, under fixed margins, of every table no more likely than the
/// observed one.
pub fn fisher_exact_two_sided(a: u64, b: u64, c: u64, d: u64) -> Result<f64, StatError> {
    let (r1, r2, c1) = (a + b, c + d, a + c);
    let total = r1 + r2;
    if r1 == 0 || r2 == 0 {
        return Err(StatError::Domain(
            "both rows need at least one trial".into(),
        ));
    }
    let lf = ln_factorials(total);
    let c2 = total - c1;
    let fixed =
        lf[r1 as usize] + lf[r2 as usize] + lf[c1 as usize] + lf[c2 as usize] - lf[total as usize];
    let ln_p = |x: u64| {
        let (xa, xb, xc) = (x, r1 - x, c1 - x);
        let xd = r2 - xc;
        fixed - lf[xa as usize] - lf[xb as usize] - lf[xc as usize] - lf[xd as usize]
    };
    let lo = c1.saturating_sub(r2);
    let hi = c1.min(r1);
    let observed = ln_p(a);
    let cutoff = observed + TIE_TOLERANCE.ln_1p();
    // Normalising by the enumerated total cancels rounding in `fixed`, so a
    // test that includes every table yields exactly 1.
    let logs: Vec<f64> = (lo..=hi).map(ln_p).collect();
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut included, mut all) = (0.0f64, 0.0f64);
    for lp in logs {
        let weight = (lp - peak).exp();
        all += weight;
        if lp <= cutoff {
            included += weight;
        }
    }
    Ok((included / all).clamp(0.0, 1.0))
}
