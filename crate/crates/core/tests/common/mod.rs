//! Independent reference implementations used to cross-check the library.
#![allow(dead_code)]

use num_complex::Complex64;
use platoon_shield::numerics::Matrix;

fn mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let p = b[0].len();
    let mut out = vec![vec![0.0; p]; n];
    for i in 0..n {
        for k in 0..b.len() {
            let aik = a[i][k];
            for j in 0..p {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn add(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
        .collect()
}

fn eye(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Matrix {
    let cols = rows.first().map_or(0, Vec::len);
    Matrix::from_row_major(rows.len(), cols, rows.concat()).expect("rectangular finite rows")
}

fn inf_norm(a: &[Vec<f64>]) -> f64 {
    a.iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// 30-term Taylor series with halving until `‖A·h‖∞ ≤ 0.5`, then repeated
/// squaring. Also returns `Γ(h) = ∫₀ʰ e^{As} ds · B` via the doubling rule
/// `Γ(2h) = Φ(h)Γ(h) + Γ(h)`.
pub fn taylor_zoh(a: &Matrix, b: &Matrix, t: f64) -> (Matrix, Matrix) {
    let ar = to_rows(a);
    let br = to_rows(b);
    let n = ar.len();
    let mut s = 0u32;
    while inf_norm(&ar) * t.abs() / 2f64.powi(s as i32) > 0.5 {
        s += 1;
    }
    let h = t / 2f64.powi(s as i32);
    let ah: Vec<Vec<f64>> = ar.iter().map(|r| r.iter().map(|x| x * h).collect()).collect();
    // Φ = Σ (Ah)^k / k!, Ψ = Σ (Ah)^k h / (k+1)!
    let mut phi = eye(n);
    let mut psi: Vec<Vec<f64>> = eye(n).iter().map(|r| r.iter().map(|x| x * h).collect()).collect();
    let mut term = eye(n);
    for k in 1..=30 {
        term = mul(&term, &ah);
        let c = 1.0 / k as f64;
        term.iter_mut().flatten().for_each(|x| *x *= c);
        phi = add(&phi, &term);
        let scaled: Vec<Vec<f64>> = term
            .iter()
            .map(|r| r.iter().map(|x| x * h / (k + 1) as f64).collect())
            .collect();
        psi = add(&psi, &scaled);
    }
    let mut gamma = mul(&psi, &br);
    for _ in 0..s {
        gamma = add(&mul(&phi, &gamma), &gamma);
        phi = mul(&phi, &phi);
    }
    (from_rows(&phi), from_rows(&gamma))
}

pub fn taylor_expm(a: &Matrix, t: f64) -> Matrix {
    taylor_zoh(a, &Matrix::zeros(a.rows(), 1), t).0
}

/// Characteristic polynomial coefficients `[1, c1, …, cn]` of
/// `det(sI − A)` by Faddeev–LeVerrier.
pub fn char_poly(a: &Matrix) -> Vec<f64> {
    let ar = to_rows(a);
    let n = ar.len();
    let mut coeffs = vec![1.0];
    let mut m = vec![vec![0.0; n]; n];
    for k in 1..=n {
        let am = mul(&ar, &m);
        let c_prev = coeffs[k - 1];
        m = add(&am, &eye(n).iter().map(|r| r.iter().map(|x| x * c_prev).collect()).collect::<Vec<_>>());
        let am = mul(&ar, &m);
        let tr: f64 = (0..n).map(|i| am[i][i]).sum();
        coeffs.push(-tr / k as f64);
    }
    coeffs
}

/// Roots of a monic polynomial by Durand–Kerner iteration.
pub fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let eval = |z: Complex64| coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
    let radius = 1.0 + coeffs[1..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * radius.min(10.0)).collect();
    for _ in 0..5000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = eval(z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm() / (1.0 + z[i].norm()));
        }
        if delta < 1e-15 {
            break;
        }
    }
    z
}

pub fn oracle_abscissa(a: &Matrix) -> f64 {
    poly_roots(&char_poly(a))
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Classical RK4 integration of `ẋ = Ax + Bu` with `u` held constant.
pub fn rk4_step(a: &Matrix, b: &Matrix, x: &[f64], u: &[f64], t: f64, substeps: usize) -> Vec<f64> {
    let bu = b.mul_vec(u).expect("input length");
    let f = |x: &[f64]| -> Vec<f64> {
        let ax = a.mul_vec(x).expect("state length");
        ax.iter().zip(&bu).map(|(p, q)| p + q).collect()
    };
    let h = t / substeps as f64;
    let mut x = x.to_vec();
    for _ in 0..substeps {
        let k1 = f(&x);
        let x2: Vec<f64> = x.iter().zip(&k1).map(|(x, k)| x + 0.5 * h * k).collect();
        let k2 = f(&x2);
        let x3: Vec<f64> = x.iter().zip(&k2).map(|(x, k)| x + 0.5 * h * k).collect();
        let k3 = f(&x3);
        let x4: Vec<f64> = x.iter().zip(&k3).map(|(x, k)| x + h * k).collect();
        let k4 = f(&x4);
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

/// `max |a − b|` scaled by `max(1, max |b|)`.
pub fn scaled_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.max_abs_diff(b) / b.max_abs().max(1.0)
}

/// Random Hurwitz `n×n` matrix and `n×m` input matrix: Gaussian entries,
/// shifted left so the spectral abscissa sits at `-margin`.
pub fn random_stable<R: rand::Rng>(rng: &mut R, n: usize, m: usize, margin: f64) -> (Matrix, Matrix) {
    use rand_distr::{Distribution, StandardNormal};
    let mut draw = |k: usize| -> Vec<f64> { (0..k).map(|_| StandardNormal.sample(&mut *rng)).collect() };
    let a0 = Matrix::from_row_major(n, n, draw(n * n)).expect("finite");
    let b = Matrix::from_row_major(n, m, draw(n * m)).expect("finite");
    let shift = oracle_abscissa(&a0) + margin;
    let a = &a0 - &Matrix::identity(n).scale(shift);
    (a, b)
}

/// `σ_max(C(jωI − A)⁻¹B + D)` by complex Gaussian elimination and power
/// iteration on `GᴴG`.
pub fn oracle_sigma(a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix, omega: f64) -> f64 {
    let n = a.rows();
    let m = b.cols();
    let p = c.rows();
    // Solve (jωI − A) X = B column by column.
    let mut g = vec![vec![Complex64::new(0.0, 0.0); m]; p];
    for col in 0..m {
        let mut aug: Vec<Vec<Complex64>> = (0..n)
            .map(|i| {
                let mut row: Vec<Complex64> = (0..n)
                    .map(|j| {
                        let diag = if i == j { Complex64::new(0.0, omega) } else { Complex64::new(0.0, 0.0) };
                        diag - a[(i, j)]
                    })
                    .collect();
                row.push(Complex64::new(b[(i, col)], 0.0));
                row
            })
            .collect();
        for k in 0..n {
            let piv = (k..n)
                .max_by(|&x, &y| aug[x][k].norm().total_cmp(&aug[y][k].norm()))
                .unwrap();
            aug.swap(k, piv);
            for i in k + 1..n {
                let f = aug[i][k] / aug[k][k];
                for j in k..=n {
                    let t = aug[k][j];
                    aug[i][j] -= f * t;
                }
            }
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut s = aug[i][n];
            for j in i + 1..n {
                s -= aug[i][j] * x[j];
            }
            x[i] = s / aug[i][i];
        }
        for (r, row) in g.iter_mut().enumerate() {
            row[col] = (0..n).map(|i| x[i] * c[(r, i)]).sum::<Complex64>() + d[(r, col)];
        }
    }
    let mut v = vec![Complex64::new(1.0, 0.3); m];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let gv: Vec<Complex64> = g.iter().map(|r| r.iter().zip(&v).map(|(x, y)| x * y).sum()).collect();
        let w: Vec<Complex64> = (0..m)
            .map(|j| (0..p).map(|i| g[i][j].conj() * gv[i]).sum())
            .collect();
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let next = norm / vn;
        v = w.iter().map(|z| z / norm).collect();
        if (next - lambda).abs() <= 1e-15 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

/// Dense log-grid maximum of the oracle σ_max, refined by golden-section
/// search around the best grid point.
pub fn oracle_peak_gain(a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix) -> f64 {
    let s = |w: f64| oracle_sigma(a, b, c, d, w);
    let mut best = (s(0.0), 0.0);
    let points = 20_000;
    let grid: Vec<f64> = (0..points)
        .map(|k| 10f64.powf(-5.0 + 10.0 * k as f64 / (points - 1) as f64))
        .collect();
    let mut best_k = None;
    for (k, &w) in grid.iter().enumerate() {
        let v = s(w);
        if v > best.0 {
            best = (v, w);
            best_k = Some(k);
        }
    }
    if let Some(k) = best_k {
        let (mut lo, mut hi) = (grid[k.saturating_sub(1)], grid[(k + 1).min(points - 1)]);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let x1 = hi - phi * (hi - lo);
            let x2 = lo + phi * (hi - lo);
            if s(x1) >= s(x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        best.0 = best.0.max(s(0.5 * (lo + hi)));
    }
    best.0
}

/// Outcome of [`frame_sweep`].
#[derive(Debug, Clone, Default)]
pub struct FrameSweep {
    pub frames: usize,
    pub attacked_frames: usize,
    pub fusion_violations: usize,
    /// Largest `|û − u| / (3‖ν‖∞)` seen.
    pub worst_fusion_ratio: f64,
    pub subset_checks: usize,
    pub subset_violations: usize,
    /// Largest `|mean_J − u| / ‖ν‖∞` over attack-free subsets.
    pub worst_subset_ratio: f64,
}

/// Randomized frames: `N ∈ {3, 5, 7}`, `q` drawn from `1..=(N−1)/2`, up to
/// `q` attacked channels, uniform channel noise within per-channel bounds.
/// Two thirds of the frames inject Gaussian magnitudes with std 5, 50 or
/// 500; the rest collude, pushing every attacked channel to one common
/// value within `4‖ν‖∞` of the true command.
pub fn frame_sweep(frames: usize, seed: u64) -> FrameSweep {
    use platoon_shield::channel_set::{combinations, ChannelSet};
    use platoon_shield::fusion::{fuse, noise_bound_inf, subset_average};
    use platoon_shield::rng::{stream_rng, StreamPurpose};
    use platoon_shield::v2v_link::{transmit, AttackKind, AttackPolicy, ChannelModel, MagnitudeDistribution};
    use rand::Rng;

    let mut out = FrameSweep {
        frames,
        ..FrameSweep::default()
    };
    let mut rng = stream_rng(seed, "frame-sweep", StreamPurpose::Link, 0);
    for f in 0..frames {
        let n = [3usize, 5, 7][f % 3];
        let q = rng.random_range(1..=(n - 1) / 2);
        let channels: Vec<ChannelModel> =
            (0..n).map(|_| ChannelModel::uniform(rng.random_range(0.001..1.0))).collect();
        let attacked = rng.random_range(0..=q);
        let support = ChannelSet::from_indices(rand::seq::index::sample(&mut rng, n, attacked)).unwrap();
        let u: f64 = rng.random_range(-30.0..30.0);
        let bound = noise_bound_inf(&channels);
        let mode = (f / 3) % 4;
        let magnitude = match mode {
            0 => MagnitudeDistribution::Gaussian { mean: 0.0, std: 5.0 },
            1 => MagnitudeDistribution::Gaussian { mean: 0.0, std: 50.0 },
            2 => MagnitudeDistribution::Gaussian { mean: 0.0, std: 500.0 },
            _ => MagnitudeDistribution::Constant(0.0),
        };
        let policy = AttackPolicy {
            kind: AttackKind::FixedSet(support),
            q,
            magnitude,
        };
        let mut frame = transmit(u, &channels, &policy, f, &mut rng).unwrap();
        if mode == 3 {
            let target = u + rng.random_range(-4.0..4.0) * bound;
            for j in support.iter() {
                frame.values[j] = target;
            }
        }
        if !support.is_empty() {
            out.attacked_frames += 1;
        }
        let fused = fuse(&frame.values, q).unwrap();
        let slack = 1e-12 * (1.0 + u.abs());
        let err = (fused.u_hat - u).abs();
        out.worst_fusion_ratio = out.worst_fusion_ratio.max(err / (3.0 * bound));
        if err > 3.0 * bound + slack {
            out.fusion_violations += 1;
        }
        let clean = ChannelSet::all(n).difference(frame.true_attack_support);
        for k in 1..=n {
            for j in combinations(n, k) {
                if j.is_subset_of(clean) {
                    out.subset_checks += 1;
                    let e = (subset_average(&frame.values, j).unwrap() - u).abs();
                    out.worst_subset_ratio = out.worst_subset_ratio.max(e / bound);
                    if e > bound + slack {
                        out.subset_violations += 1;
                    }
                }
            }
        }
    }
    out
}
