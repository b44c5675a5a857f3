//! Small least-squares helpers: straight-line fits in log-log coordinates and
//! a dense QR solver for tall systems with a handful of columns.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

/// Result of fitting `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub rms: f64,
    pub points: usize,
}

pub fn line_fit(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs[..n].iter().sum::<f64>() / nf;
    let my = ys[..n].iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs[..n].iter().zip(&ys[..n]) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs[..n]
        .iter()
        .zip(&ys[..n])
        .map(|(x, y)| {
            let r = y - slope * x - intercept;
            r * r
        })
        .sum();
    Some(LineFit {
        slope,
        intercept,
        rms: (rss / nf).sqrt(),
        points: n,
    })
}

/// Fits `|v| ~ C x^p` by least squares on `ln|v|` against `ln x`. Points with
/// zero or non-finite values are skipped.
pub fn log_log_fit(xs: &[f64], vs: &[f64]) -> Option<LineFit> {
    let mut lx = Vec::with_capacity(xs.len());
    let mut lv = Vec::with_capacity(xs.len());
    for (&x, &v) in xs.iter().zip(vs) {
        let a = v.abs();
        if x > 0.0 && a > 0.0 && a.is_finite() {
            lx.push(x.ln());
            lv.push(a.ln());
        }
    }
    line_fit(&lx, &lv)
}

/// Minimises `|A c - b|_2` where `A` is given column by column.
/// Returns `None` when the columns are numerically dependent.
pub fn least_squares(columns: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let m = columns.len();
    if m == 0 {
        return Some(Vec::new());
    }
    let rows = rhs.len();
    if columns.iter().any(|c| c.len() != rows) || rows < m {
        return None;
    }
    // Modified Gram-Schmidt.
    let mut q: Vec<Vec<f64>> = columns.to_vec();
    let mut r = vec![vec![0.0; m]; m];
    let scale = columns
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    if !(scale > 0.0) {
        return None;
    }
    for k in 0..m {
        for j in 0..k {
            let dot: f64 = q[j].iter().zip(&q[k]).map(|(a, b)| a * b).sum();
            r[j][k] = dot;
            let (head, tail) = q.split_at_mut(k);
            for (t, s) in tail[0].iter_mut().zip(&head[j]) {
                *t -= dot * s;
            }
        }
        let norm = q[k].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-13 * scale {
            return None;
        }
        r[k][k] = norm;
        for v in q[k].iter_mut() {
            *v /= norm;
        }
    }
    let qtb: Vec<f64> = q
        .iter()
        .map(|col| col.iter().zip(rhs).map(|(a, b)| a * b).sum())
        .collect();
    let mut c = vec![0.0; m];
    for k in (0..m).rev() {
        let mut acc = qtb[k];
        for j in k + 1..m {
            acc -= r[k][j] * c[j];
        }
        c[k] = acc / r[k][k];
    }
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law_exponent() {
        let xs: Vec<f64> = (1..40).map(|k| 10f64.powf(k as f64 / 10.0)).collect();
        let vs: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-1.75)).collect();
        let fit = log_log_fit(&xs, &vs).unwrap();
        assert!((fit.slope + 1.75).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-11);
        assert!(fit.rms < 1e-12);
    }

    #[test]
    fn least_squares_exact_system() {
        let xs: Vec<f64> = (0..10).map(|k| k as f64 * 0.3).collect();
        let ones = vec![1.0; xs.len()];
        let b: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let c = least_squares(&[ones, xs], &b).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-12 && (c[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn dependent_columns_rejected() {
        let a = vec![1.0, 2.0, 3.0];
        let b = vec![2.0, 4.0, 6.0];
        assert!(least_squares(&[a, b], &[1.0, 1.0, 1.0]).is_none());
    }
}
