//! Multiset comparison of eigenvalue lists.

use num_complex::Complex64;

/// Greedy minimal-weight matching between two equally sized multisets.
///
/// All pairwise distances are sorted and pairs accepted in ascending order
/// while both endpoints are free. Returns the pairs `(i, j, |a_i - b_j|)`
/// in order of acceptance, or `None` when the lengths differ.
pub fn greedy_matching(a: &[Complex64], b: &[Complex64]) -> Option<Vec<(usize, usize, f64)>> {
    if a.len() != b.len() {
        return None;
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut out = Vec::with_capacity(a.len());
    for (d, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            out.push((i, j, d));
            if out.len() == a.len() {
                break;
            }
        }
    }
    Some(out)
}

/// Largest matched distance, `+inf` when the multisets have different sizes.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    match greedy_matching(a, b) {
        Some(m) => m.iter().map(|p| p.2).fold(0.0, f64::max),
        None => f64::INFINITY,
    }
}
