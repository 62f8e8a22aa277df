//! Dense vector helpers over `&[f64]`.
//!
//! Estimates are plain `Vec<f64>`; every reduction here sums in index order so
//! that results do not depend on how callers schedule work.

pub type Vector = Vec<f64>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vector {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vector {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vector {
    a.iter().map(|x| x * s).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vector {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

/// Arithmetic mean of a nonempty list of equal-length vectors.
pub fn mean(points: &[Vector]) -> Vector {
    assert!(!points.is_empty(), "mean of empty point list");
    let n = points[0].len();
    let mut acc = vec![0.0; n];
    for p in points {
        for (a, x) in acc.iter_mut().zip(p) {
            *a += x;
        }
    }
    let inv = 1.0 / points.len() as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    acc
}

/// Weighted combination `sum_j weights[j] * points[j]`, summed in `j` order.
pub fn combine(weights: impl IntoIterator<Item = f64>, points: &[Vector]) -> Vector {
    let n = points.first().map_or(0, Vec::len);
    let mut acc = vec![0.0; n];
    for (w, p) in weights.into_iter().zip(points) {
        if w == 0.0 {
            continue;
        }
        for (a, x) in acc.iter_mut().zip(p) {
            *a += w * x;
        }
    }
    acc
}

pub fn is_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Largest pairwise distance `max_{i,j} |x^i - x^j|`.
pub fn max_pairwise_dist(points: &[Vector]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            worst = worst.max(dist(p, q));
        }
    }
    worst
}
