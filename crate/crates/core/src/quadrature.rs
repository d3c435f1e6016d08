//! Quadrature rules on the reference simplex and on time intervals.
//!
//! Simplex rules are stored in barycentric coordinates with weights that sum
//! to one, so a cell integral is `|K| * sum_q w_q f(x_q)`.

/// Quadrature rule on the reference simplex.
#[derive(Debug, Clone)]
pub struct SimplexRule {
    /// Barycentric coordinates of each point (`dim + 1` used entries).
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl SimplexRule {
    /// Rule exact for polynomials of total degree 5: the 7-point
    /// Radon rule on triangles, a collapsed 4x4x4 Gauss rule on tetrahedra.
    pub fn degree5(dim: usize) -> Self {
        if dim == 2 {
            let s15 = 15f64.sqrt();
            let r1 = (6.0 - s15) / 21.0;
            let r2 = (6.0 + s15) / 21.0;
            let w1 = (155.0 - s15) / 1200.0;
            let w2 = (155.0 + s15) / 1200.0;
            let mut points = vec![[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0]];
            let mut weights = vec![9.0 / 40.0];
            for (r, w) in [(r1, w1), (r2, w2)] {
                let s = 1.0 - 2.0 * r;
                points.extend([[s, r, r, 0.0], [r, s, r, 0.0], [r, r, s, 0.0]]);
                weights.extend([w, w, w]);
            }
            Self { points, weights }
        } else {
            Self::collapsed(dim, 4)
        }
    }

    /// Collapsed (Duffy) tensor Gauss-Legendre rule with `m` points per
    /// direction; exact for total degree `2m - dim` or better.
    pub fn collapsed(dim: usize, m: usize) -> Self {
        let (x, w) = gauss_legendre(m);
        // map to [0, 1]
        let x: Vec<f64> = x.iter().map(|t| 0.5 * (t + 1.0)).collect();
        let w: Vec<f64> = w.iter().map(|t| 0.5 * t).collect();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        if dim == 2 {
            for i in 0..m {
                for j in 0..m {
                    let (u, v) = (x[i], x[j]);
                    let (px, py) = (u, v * (1.0 - u));
                    points.push([1.0 - px - py, px, py, 0.0]);
                    // reference area 1/2
                    weights.push(w[i] * w[j] * (1.0 - u) * 2.0);
                }
            }
        } else {
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        let (u, v, s) = (x[i], x[j], x[k]);
                        let px = u;
                        let py = v * (1.0 - u);
                        let pz = s * (1.0 - u) * (1.0 - v);
                        points.push([1.0 - px - py - pz, px, py, pz]);
                        // reference volume 1/6
                        weights.push(w[i] * w[j] * w[k] * (1.0 - u).powi(2) * (1.0 - v) * 6.0);
                    }
                }
            }
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton on the Legendre
/// recurrence).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pn1) = if n == 1 { (z, 1.0) } else { (p1, p0) };
            let dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                let mut q0 = 1.0;
                let mut q1 = z;
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let (qn, qn1) = if n == 1 { (z, 1.0) } else { (q1, q0) };
                let d = n as f64 * (z * qn - qn1) / (z * z - 1.0);
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * d * d);
                break;
            }
        }
    }
    (x, w)
}

/// Gauss points and weights on `[a, b]` (weights sum to `b - a`).
pub fn gauss_interval(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| (a + half * (xi + 1.0), half * wi))
        .collect()
}
