use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{div_h, Field, State, Trajectory};
use crate::mesh::Face;

/// `(Σ_K |K| |v_K|^p)^{1/p}` with the Euclidean norm inside each cell.
pub fn lp_norm(v: &Field, p: f64) -> f64 {
    assert!(p >= 1.0, "lp_norm needs p >= 1");
    let c = v.components();
    let vol = v.mesh().cell_volume();
    let sum: f64 = v
        .values()
        .chunks_exact(c)
        .map(|cell| {
            let mag2: f64 = cell.iter().map(|x| x * x).sum();
            if p == 2.0 {
                mag2
            } else {
                mag2.sqrt().powf(p)
            }
        })
        .sum();
    (vol * sum).powf(1.0 / p)
}

pub fn linf_norm(v: &Field) -> f64 {
    v.values()
        .chunks_exact(v.components())
        .map(|cell| cell.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// `∫ f·g` for piecewise constants.
pub fn inner_product_l2(f: &Field, g: &Field) -> f64 {
    debug_assert_eq!(f.values().len(), g.values().len());
    let dot: f64 = f.values().iter().zip(g.values()).map(|(a, b)| a * b).sum();
    dot * f.mesh().cell_volume()
}

/// Discrete `‖∇_D v‖_{L²}`: `(Σ_σ |σ| h |⟦v⟧/h|²)^{1/2}`, all components.
pub fn w12_seminorm(v: &Field) -> f64 {
    gradient_energy(v).sqrt()
}

pub(crate) fn gradient_energy(v: &Field) -> f64 {
    let mesh = v.mesh();
    let c = v.components();
    let weight = mesh.face_area() / mesh.h();
    let vals = v.values();
    let mut sum = 0.0;
    for Face { inner, outer, .. } in mesh.faces() {
        for comp in 0..c {
            let j = vals[outer * c + comp] - vals[inner * c + comp];
            sum += j * j;
        }
    }
    weight * sum
}

/// `μ‖∇_D u‖² + η‖div_h u‖²` for a velocity field.
pub(crate) fn viscous_dissipation(u: &Field, mu: f64, eta: f64) -> f64 {
    let mut out = mu * gradient_energy(u);
    if eta != 0.0 {
        let div = div_h(u);
        out += eta * lp_norm(&div, 2.0).powi(2);
    }
    out
}

/// `(Σ_k Δt_k ‖v^k‖^r)^{1/r}` over `[0, T]`, reading the trajectory as
/// piecewise constant with `states[k]` on `[t_k, t_{k+1})`.
pub fn bochner_norm(traj: &Trajectory, r: f64, spatial: impl Fn(&State) -> f64) -> f64 {
    assert!(r >= 1.0, "bochner_norm needs r >= 1");
    let sum: f64 = traj
        .times
        .windows(2)
        .zip(&traj.states)
        .map(|(t, s)| (t[1] - t[0]) * spatial(s).powf(r))
        .sum();
    sum.powf(1.0 / r)
}

/// Diagnostic `W^{-k,2}` norm,
/// `(Σ_ξ (1 + |πξ|²)^{-k} |v̂(ξ)|²)^{1/2}`, where `v̂` are the Fourier
/// coefficients of the cell values against the orthonormal basis
/// `2^{-d/2} exp(iπ ξ·x)` of the period-2 torus. Weights never exceed one,
/// so the result is bounded by the `L²` norm.
pub fn neg_sobolev_norm(v: &Field, k: u32) -> f64 {
    let mesh = v.mesh();
    let d = mesh.dim();
    let n = mesh.cells_per_axis();
    let c = v.components();
    let scale = mesh.cell_volume() / 2f64.powf(d as f64 / 2.0);
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let mut total = 0.0;
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for comp in 0..c {
        let mut data: Vec<Complex64> = (0..mesh.num_cells())
            .map(|cell| Complex64::new(v.values()[cell * c + comp], 0.0))
            .collect();
        let strides: Vec<usize> = (0..d).map(|a| n.pow((d - 1 - a) as u32)).collect();
        for &stride in &strides {
            for start in 0..mesh.num_cells() {
                if (start / stride) % n != 0 {
                    continue;
                }
                for (i, l) in line.iter_mut().enumerate() {
                    *l = data[start + i * stride];
                }
                fft.process(&mut line);
                for (i, l) in line.iter().enumerate() {
                    data[start + i * stride] = *l;
                }
            }
        }
        for (idx, coeff) in data.iter().enumerate() {
            let mut xi2 = 0.0;
            for &stride in &strides {
                let i = (idx / stride) % n;
                let xi = if i <= n / 2 {
                    i as f64
                } else {
                    i as f64 - n as f64
                };
                xi2 += xi * xi;
            }
            let weight = (1.0 + std::f64::consts::PI.powi(2) * xi2).powi(-(k as i32));
            // |e^{-iπξ·x_K}| phase offsets do not affect the modulus
            total += weight * (scale * coeff.norm()).powi(2);
        }
    }
    total.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::StepDiagnostics;
    use crate::mesh::{GaussLegendre, TorusMesh};
    use proptest::prelude::*;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn mesh(n: usize) -> Arc<TorusMesh> {
        Arc::new(TorusMesh::new(n, 2).unwrap())
    }

    #[test]
    fn single_cell_indicator() {
        let m = mesh(4);
        let mut vals = vec![0.0; 16];
        vals[5] = 1.0;
        let v = Field::from_values(m, 1, vals).unwrap();
        assert!((lp_norm(&v, 2.0) - 0.5).abs() < 1e-15);
        assert_eq!(linf_norm(&v), 1.0);
    }

    #[test]
    fn constant_field_norms() {
        let v = Field::constant(mesh(8), &[-3.0]).unwrap();
        for p in [1.0, 1.4, 2.0, 3.5] {
            let expected = 3.0 * 4f64.powf(1.0 / p);
            assert!((lp_norm(&v, p) - expected).abs() < 1e-13 * expected);
        }
    }

    #[test]
    fn lp_matches_flat_reference_sum() {
        let m = mesh(8);
        let mut state = 0x2545F4914F6CDD1Du64;
        let vals: Vec<f64> = (0..128)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        let v = Field::from_values(m, 2, vals.clone()).unwrap();
        for p in [1.0, 1.4, 2.0, 4.0] {
            // reverse summation order, explicit sqrt
            let mut acc = 0.0;
            for k in (0..64).rev() {
                let mag = (vals[2 * k].powi(2) + vals[2 * k + 1].powi(2)).sqrt();
                acc += 0.0625 * mag.powf(p);
            }
            let reference = acc.powf(1.0 / p);
            assert!((lp_norm(&v, p) - reference).abs() <= 1e-14 * reference);
        }
    }

    #[test]
    fn seminorm_of_sine() {
        let m = mesh(128);
        let v = m
            .project(&GaussLegendre::new(3), 2, |x, out| {
                out[0] = (PI * x[0]).sin();
                out[1] = 0.0;
            })
            .unwrap();
        let exact = PI * 2f64.sqrt();
        assert!((w12_seminorm(&v) - exact).abs() < 0.05 * exact);
        assert_eq!(
            w12_seminorm(&Field::constant(mesh(4), &[1.0, 2.0]).unwrap()),
            0.0
        );
    }

    fn constant_trajectory(norm_values: &[f64], dt: f64) -> Trajectory {
        let m = mesh(2);
        let vol_sqrt = 2.0; // L² norm of the constant 1 on T²
        let states: Vec<State> = norm_values
            .iter()
            .map(|&c| State::uniform(m.clone(), c / vol_sqrt, &[0.0, 0.0]).unwrap())
            .collect();
        let mut t = Trajectory::new(states[0].clone(), 0.0);
        for (k, s) in states.iter().enumerate().skip(1) {
            t.push(k as f64 * dt, s.clone(), StepDiagnostics::default());
        }
        t
    }

    #[test]
    fn bochner_two_steps() {
        // states 0 and 1 cover [0, 0.05) and [0.05, 0.1); the last state is the endpoint
        let t = constant_trajectory(&[1.0, 2.0, 7.0], 0.05);
        let got = bochner_norm(&t, 2.0, |s| lp_norm(&s.rho, 2.0));
        assert!((got - 0.5).abs() < 1e-14);
    }

    #[test]
    fn bochner_of_constant_in_time() {
        let t = constant_trajectory(&[3.0; 5], 0.025);
        for r in [1.0, 2.0, 3.0] {
            let got = bochner_norm(&t, r, |s| lp_norm(&s.rho, 2.0));
            assert!((got - 0.1f64.powf(1.0 / r) * 3.0).abs() < 1e-13);
        }
    }

    #[test]
    fn neg_sobolev_trivial_cases() {
        assert_eq!(neg_sobolev_norm(&Field::zeros(mesh(8), 1), 2), 0.0);
        let c = Field::constant(mesh(8), &[-1.5]).unwrap();
        assert!((neg_sobolev_norm(&c, 2) - 1.5 * 2.0).abs() < 1e-13);
    }

    #[test]
    fn neg_sobolev_single_cosine_mode() {
        let m = mesh(64);
        let vals: Vec<f64> = (0..m.num_cells())
            .map(|k| (PI * m.cell_center(k)[0]).cos())
            .collect();
        let v = Field::from_values(m, 1, vals).unwrap();
        // modes ξ = (±1, 0), each with |v̂| = 2^{d/2} / 2 = 1
        let expected = (2.0 * (1.0 + PI * PI).powi(-2)).sqrt();
        assert!((neg_sobolev_norm(&v, 2) - expected).abs() < 1e-10);
    }

    #[test]
    fn neg_sobolev_bounded_and_monotone() {
        let m = mesh(16);
        let v = m
            .project(&GaussLegendre::new(2), 2, |x, out| {
                out[0] = (3.0 * x[0]).sin() + x[1];
                out[1] = (PI * x[1]).cos() * 2.0;
            })
            .unwrap();
        let l2 = lp_norm(&v, 2.0);
        // k = 0 is Parseval
        assert!((neg_sobolev_norm(&v, 0) - l2).abs() < 1e-12 * l2);
        let mut prev = l2;
        for k in 1..5 {
            let cur = neg_sobolev_norm(&v, k);
            assert!(cur <= prev + 1e-15);
            prev = cur;
        }
    }

    proptest! {
        #[test]
        fn lp_homogeneous(vals in proptest::collection::vec(-10.0f64..10.0, 16), alpha in -5.0f64..5.0, p in 1.0f64..4.0) {
            let v = Field::from_values(mesh(4), 1, vals).unwrap();
            let scaled = v.scaled(alpha).unwrap();
            let lhs = lp_norm(&scaled, p);
            let rhs = alpha.abs() * lp_norm(&v, p);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }
    }
}
