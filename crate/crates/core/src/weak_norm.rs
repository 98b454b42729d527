//! Weak and strong `l^p` norms of finitely supported functions.

use crate::error::{Error, Result};

/// Weak `l^p` norm: `max_k k^(1/p) a_k` over the values sorted decreasingly.
///
/// For finite support this equals the least `C` with
/// `#{|f| > lambda} <= C^p / lambda^p` for every `lambda > 0`.
///
/// ```
/// use hypfill::weak_norm::weak_lp_norm;
/// assert_eq!(weak_lp_norm(&[1.0; 4], 2.0), 2.0);
/// assert_eq!(weak_lp_norm(&[8.0, 4.0, 2.0, 1.0], 2.0), 8.0);
/// ```
pub fn weak_lp_norm(values: &[f64], p: f64) -> f64 {
    let mut sorted: Vec<f64> = values.iter().map(|v| v.abs()).filter(|v| *v > 0.0).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted
        .iter()
        .enumerate()
        .map(|(k, a)| ((k + 1) as f64).powf(1.0 / p) * a)
        .fold(0.0, f64::max)
}

/// `p`-th power of the weak norm, `max_k k a_k^p`, computed without the root.
pub fn weak_lp_power(values: &[f64], p: f64) -> f64 {
    let mut sorted: Vec<f64> = values.iter().map(|v| v.abs()).filter(|v| *v > 0.0).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted
        .iter()
        .enumerate()
        .map(|(k, a)| (k + 1) as f64 * a.powf(p))
        .fold(0.0, f64::max)
}

/// `(sum |f_i|^p)^(1/p)`.
pub fn lp_norm(values: &[f64], p: f64) -> f64 {
    lp_power(values, p).powf(1.0 / p)
}

/// `sum |f_i|^p`.
pub fn lp_power(values: &[f64], p: f64) -> f64 {
    values.iter().map(|v| v.abs().powf(p)).sum()
}

/// Weighted `sum w_i |f_i|^p`.
pub fn weighted_lp_power(values: &[f64], weights: &[f64], p: f64) -> f64 {
    values.iter().zip(weights).map(|(v, w)| w * v.abs().powf(p)).sum()
}

/// Default ceiling for the bounded-multiplicity transfer: `N^(1 + 1/p)`.
///
/// If every `s_h` is at most the sum of at most `N` entries of `t`, and every
/// entry of `t` feeds at most `N` of the `s_h`, then `s_h > lambda` forces some
/// `t_k > lambda / N`, and at most `N` indices `h` share that `k`.
pub fn transfer_ceiling(p: f64, n: usize) -> f64 {
    (n as f64).powf(1.0 + 1.0 / p)
}

/// Outcome of [`check_bounded_multiplicity_transfer`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    /// Largest row or column multiplicity of the relation.
    pub multiplicity: usize,
    /// `weak(s) / weak(t)`, or 0 when both vanish.
    pub ratio: f64,
    pub ceiling: f64,
    pub passed: bool,
}

/// Checks `weak(s) <= C(p, N) weak(t)` for a relation `(h, k)` meaning
/// `k` belongs to `J_h`.
///
/// Verifies the multiplicity bound `max_mult` and the sum condition
/// `s_h <= sum_{k in J_h} t_k` first. `ceiling` defaults to
/// [`transfer_ceiling`].
pub fn check_bounded_multiplicity_transfer(
    s: &[f64],
    t: &[f64],
    relation: &[(usize, usize)],
    p: f64,
    max_mult: usize,
    ceiling: Option<f64>,
) -> Result<TransferReport> {
    if p <= 1.0 {
        return Err(Error::InvalidArgument(format!("p = {p} must exceed 1")));
    }
    let mut row = vec![0usize; s.len()];
    let mut col = vec![0usize; t.len()];
    let mut sums = vec![0.0f64; s.len()];
    for &(h, k) in relation {
        if h >= s.len() || k >= t.len() {
            return Err(Error::InvalidArgument(format!("relation pair ({h}, {k}) out of range")));
        }
        row[h] += 1;
        col[k] += 1;
        sums[h] += t[k].abs();
    }
    let mult = row.iter().chain(&col).copied().max().unwrap_or(0);
    if mult > max_mult {
        return Err(Error::InvalidRelation { found: mult, allowed: max_mult });
    }
    for (h, (&sh, &bound)) in s.iter().zip(&sums).enumerate() {
        if sh.abs() > bound * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::PreconditionViolation(format!(
                "s[{h}] = {sh} exceeds the related sum {bound}"
            )));
        }
    }
    let ws = weak_lp_norm(s, p);
    let wt = weak_lp_norm(t, p);
    let ratio = if ws == 0.0 { 0.0 } else { ws / wt };
    let ceiling = ceiling.unwrap_or_else(|| transfer_ceiling(p, max_mult.max(1)));
    Ok(TransferReport { multiplicity: mult, ratio, ceiling, passed: ratio <= ceiling * (1.0 + 1e-12) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_examples() {
        assert_eq!(weak_lp_norm(&[3.5], 2.0), 3.5);
        assert_eq!(weak_lp_norm(&[1.0, 1.0, 1.0, 1.0], 2.0), 2.0);
        assert_eq!(weak_lp_norm(&[8.0, 4.0, 2.0, 1.0], 2.0), 8.0);
        assert!((lp_norm(&[8.0, 4.0, 2.0, 1.0], 2.0) - 85f64.sqrt()).abs() < 1e-12);
        assert_eq!(lp_norm(&[0.0; 5], 3.0), 0.0);
        assert_eq!(lp_norm(&[2.5], 1.7), 2.5);
    }

    #[test]
    fn power_matches_norm() {
        let v = [0.3, 1.2, 0.7, 0.7, 0.01];
        for p in [1.0, 1.5, 2.0, 3.0] {
            let a = weak_lp_power(&v, p);
            let b = weak_lp_norm(&v, p).powf(p);
            assert!((a - b).abs() < 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn transfer_identity_and_zero() {
        let t = [0.5, 0.25, 1.0];
        let rel: Vec<(usize, usize)> = (0..3).map(|i| (i, i)).collect();
        let r = check_bounded_multiplicity_transfer(&t, &t, &rel, 2.0, 1, None).unwrap();
        assert!(r.ratio <= 1.0 && r.passed);
        let z = [0.0; 3];
        let r = check_bounded_multiplicity_transfer(&z, &z, &rel, 2.0, 1, None).unwrap();
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn transfer_errors() {
        let t = [1.0, 1.0];
        let s = [3.0];
        let rel = [(0, 0), (0, 1)];
        assert!(matches!(
            check_bounded_multiplicity_transfer(&s, &t, &rel, 2.0, 2, None),
            Err(Error::PreconditionViolation(_))
        ));
        assert!(matches!(
            check_bounded_multiplicity_transfer(&[2.0], &t, &rel, 2.0, 1, None),
            Err(Error::InvalidRelation { found: 2, allowed: 1 })
        ));
    }
}
