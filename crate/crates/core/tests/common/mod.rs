#![allow(dead_code)]

use mnl_ltr::inference::Matrix;

/// Every ordered selection of `k` distinct items out of `n`.
pub fn arrangements(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, k: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                go(n, k, cur, used, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(n, k, &mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Best total weight over all assignments of rows to distinct columns.
pub fn brute_force_assignment(w: &Matrix<f64>) -> f64 {
    arrangements(w.cols(), w.rows())
        .iter()
        .map(|a| a.iter().enumerate().map(|(k, &j)| w[(k, j)]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}
