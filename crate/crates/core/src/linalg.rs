//! Small dense helpers for 2×2 and 3×3 problems, plus closed-form polynomial roots.

use num_complex::Complex64;

pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn mat_vec(a: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

pub fn trace(a: &Mat3) -> f64 {
    a[0][0] + a[1][1] + a[2][2]
}

pub fn det3(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Sum of the principal 2×2 minors.
pub fn minor_sum(a: &Mat3) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0] + a[0][0] * a[2][2] - a[0][2] * a[2][0] + a[1][1] * a[2][2]
        - a[1][2] * a[2][1]
}

/// Monic characteristic polynomial `ρ³ + c₂ρ² + c₁ρ + c₀`, returned as `[c₂, c₁, c₀]`.
pub fn char_poly(a: &Mat3) -> [f64; 3] {
    [-trace(a), minor_sum(a), -det3(a)]
}

/// Gaussian elimination with partial pivoting. Returns `None` for a singular matrix.
pub fn solve3(a: &Mat3, b: &[f64; 3]) -> Option<[f64; 3]> {
    let mut m = *a;
    let mut rhs = *b;
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col] == 0.0 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - s) / m[row][row];
    }
    Some(x)
}

pub fn inverse3(a: &Mat3) -> Option<Mat3> {
    let mut inv = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut e = [0.0; 3];
        e[j] = 1.0;
        let col = solve3(a, &e)?;
        for i in 0..3 {
            inv[i][j] = col[i];
        }
    }
    Some(inv)
}

/// Roots of `ρ² + bρ + c`, cancellation-free.
pub fn quadratic_roots(b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let q = -0.5 * (b + b.signum() * s);
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        }
        let (r1, r2) = (q, c / q);
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        [Complex64::new(hi, 0.0), Complex64::new(lo, 0.0)]
    } else {
        let re = -0.5 * b;
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

/// Roots of the monic cubic `ρ³ + aρ² + bρ + c`.
///
/// Cardano/trigonometric closed form followed by one Newton polish per root.
/// Ordering: a single real root first when a complex pair exists (then the
/// pair with positive imaginary part first); otherwise descending real roots.
pub fn cubic_roots(a: f64, b: f64, c: f64) -> [Complex64; 3] {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = 0.25 * q * q + p * p * p / 27.0;

    let mut roots = if disc > 0.0 {
        let s = disc.sqrt();
        // choose the larger-magnitude branch for u to avoid cancellation
        let u = (-0.5 * q + if q <= 0.0 { s } else { -s }).cbrt();
        let v = if u != 0.0 { -p / (3.0 * u) } else { 0.0 };
        let t = u + v;
        let re = -0.5 * t - shift;
        let im = 0.5 * 3f64.sqrt() * (u - v).abs();
        [
            Complex64::new(t - shift, 0.0),
            Complex64::new(re, im),
            Complex64::new(re, -im),
        ]
    } else if p == 0.0 {
        let t = (-q).cbrt();
        [Complex64::new(t - shift, 0.0); 3]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mut r = [0.0; 3];
        for (k, slot) in r.iter_mut().enumerate() {
            *slot = m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift;
        }
        r.sort_by(|x, y| y.total_cmp(x));
        [
            Complex64::new(r[0], 0.0),
            Complex64::new(r[1], 0.0),
            Complex64::new(r[2], 0.0),
        ]
    };

    for root in roots.iter_mut() {
        let z = *root;
        let f = ((z + a) * z + b) * z + c;
        let df = (3.0 * z + 2.0 * a) * z + b;
        if df.norm() > 0.0 {
            let polished = z - f / df;
            let f_new = ((polished + a) * polished + b) * polished + c;
            if f_new.norm() <= f.norm() {
                *root = polished;
            }
        }
    }
    // a real root stays real and conjugate pairs stay paired
    if disc > 0.0 {
        roots[0].im = 0.0;
        let re = 0.5 * (roots[1].re + roots[2].re);
        let im = 0.5 * (roots[1].im - roots[2].im);
        roots[1] = Complex64::new(re, im.abs());
        roots[2] = Complex64::new(re, -im.abs());
    } else {
        for r in roots.iter_mut() {
            r.im = 0.0;
        }
    }
    roots
}

/// Max-modulus residual of the cubic at each root.
pub fn cubic_residual(a: f64, b: f64, c: f64, roots: &[Complex64; 3]) -> f64 {
    roots
        .iter()
        .map(|&z| (((z + a) * z + b) * z + c).norm())
        .fold(0.0, f64::max)
}
