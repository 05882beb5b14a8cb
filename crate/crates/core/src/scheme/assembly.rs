//! Residual and analytic Jacobian of one implicit Euler step.
//!
//! Unknowns are interleaved per cell as `(ϱ, m_1, .., m_d)`. Testing the
//! scheme with the indicator of cell `K` (and `e_i 1_K` for momentum) gives
//! one residual block per cell:
//!
//! ```text
//! R_ϱ,K   = |K| (ϱ_K - ϱ_K^old)/Δt + Σ_σ s_Kσ |σ| F_h(ϱ, u)
//! R_m,K,i = |K| (m_K,i - m_K,i^old)/Δt + Σ_σ s_Kσ |σ| (F_h(m_i, u) + ⟨p⟩ n_i)
//!           + μ/h Σ_σ |σ| (u_K,i - u_L,i)
//!           + η ∫ div_h u div_h (e_i 1_K) - |K| ϱ_K g_K,i
//! ```
//!
//! with `s_Kσ = ±1` turning the global face normal into the outward normal
//! of `K`.

use std::sync::Arc;

use super::linear::BlockMatrix;
use super::{FluidParams, SchemeConfig};
use crate::error::{Error, Result};
use crate::field::{Eos, State};
use crate::mesh::TorusMesh;

/// Precomputed coefficients for residual and Jacobian evaluation on a mesh.
#[derive(Debug, Clone)]
pub struct Assembler {
    mesh: Arc<TorusMesh>,
    nd: usize,
    mu: f64,
    eta: f64,
    eos: Eos,
    g: Option<Vec<f64>>,
    h_eps: f64,
    h: f64,
    vol: f64,
    area: f64,
    /// Sign applied to face contributions on the out-cell; `-1` for the
    /// conservative scheme. Flipped only by mutation checks.
    out_sign: f64,
}

impl Assembler {
    pub fn new(mesh: Arc<TorusMesh>, params: &FluidParams, cfg: &SchemeConfig) -> Result<Self> {
        if let Some(g) = &params.g {
            mesh.check_same(g.mesh())?;
        }
        let d = mesh.dim();
        let h = mesh.h();
        Ok(Self {
            nd: d + 1,
            mu: params.mu,
            eta: params.eta(d),
            eos: params.eos,
            g: params.g.as_ref().map(|g| g.values().to_vec()),
            h_eps: h.powf(cfg.epsilon),
            h,
            vol: mesh.cell_volume(),
            area: mesh.face_area(),
            out_sign: -1.0,
            mesh,
        })
    }

    /// Breaks flux conservativity by adding face contributions to both
    /// adjacent cells with the same sign. Exists so the invariant suite can
    /// demonstrate that it detects a broken scheme.
    #[doc(hidden)]
    pub fn with_flux_sign_mutation(mut self) -> Self {
        self.out_sign = 1.0;
        self
    }

    pub fn mesh(&self) -> &Arc<TorusMesh> {
        &self.mesh
    }

    pub fn unknowns(&self) -> usize {
        self.mesh.num_cells() * self.nd
    }

    /// Block sparsity pattern of the Jacobian.
    pub fn pattern(&self) -> BlockMatrix {
        let mesh = &self.mesh;
        let d = mesh.dim();
        let rows = (0..mesh.num_cells())
            .map(|k| {
                let mut r = vec![k];
                for a in 0..d {
                    let (p, m) = (mesh.plus(k, a), mesh.minus(k, a));
                    r.push(p);
                    r.push(m);
                    if self.eta != 0.0 {
                        for b in 0..d {
                            r.extend([
                                mesh.plus(p, b),
                                mesh.minus(p, b),
                                mesh.plus(m, b),
                                mesh.minus(m, b),
                            ]);
                        }
                    }
                }
                r
            })
            .collect();
        BlockMatrix::from_pattern(self.nd, rows)
    }

    /// Velocities `m/ϱ`; returns the first cell with `ϱ <= 0` as an error.
    fn velocities(&self, x: &[f64]) -> std::result::Result<Vec<f64>, usize> {
        let d = self.nd - 1;
        let mut u = vec![0.0; self.mesh.num_cells() * d];
        for (k, cell) in x.chunks_exact(self.nd).enumerate() {
            let rho = cell[0];
            if !(rho > 0.0) {
                return Err(k);
            }
            for i in 0..d {
                u[k * d + i] = cell[1 + i] / rho;
            }
        }
        Ok(u)
    }

    fn divergence(&self, u: &[f64]) -> Vec<f64> {
        let d = self.nd - 1;
        let mut div = vec![0.0; self.mesh.num_cells()];
        if self.eta == 0.0 {
            return div;
        }
        let r = 0.5 / self.h;
        for f in self.mesh.faces() {
            let flux = r * (u[f.inner * d + f.axis] + u[f.outer * d + f.axis]);
            div[f.inner] += flux;
            div[f.outer] -= flux;
        }
        div
    }

    /// Residual of the step `x_old -> x` over `dt`. On a nonpositive density
    /// the offending cell is returned instead.
    pub fn residual_into(
        &self,
        x: &[f64],
        x_old: &[f64],
        dt: f64,
        out: &mut [f64],
    ) -> std::result::Result<(), usize> {
        let nd = self.nd;
        let d = nd - 1;
        let u = self.velocities(x)?;
        let div = self.divergence(&u);
        let time_coef = self.vol / dt;
        for (k, ((o, xn), xo)) in out
            .chunks_exact_mut(nd)
            .zip(x.chunks_exact(nd))
            .zip(x_old.chunks_exact(nd))
            .enumerate()
        {
            o[0] = time_coef * (xn[0] - xo[0]);
            for i in 0..d {
                o[1 + i] = time_coef * (xn[1 + i] - xo[1 + i]);
                if let Some(g) = &self.g {
                    o[1 + i] -= self.vol * xn[0] * g[k * d + i];
                }
            }
        }
        let visc = self.mu * self.area / self.h;
        let eta_coef = 0.5 * self.eta * self.area;
        let s = self.out_sign;
        let mut face_res = [0.0; 4];
        for f in self.mesh.faces() {
            let (a_cell, b_cell, axis) = (f.inner, f.outer, f.axis);
            let xa = &x[a_cell * nd..(a_cell + 1) * nd];
            let xb = &x[b_cell * nd..(b_cell + 1) * nd];
            let ua = &u[a_cell * d..(a_cell + 1) * d];
            let ub = &u[b_cell * d..(b_cell + 1) * d];
            let w = 0.5 * (ua[axis] + ub[axis]);
            let diff = self.h_eps + 0.5 * w.abs();
            for c in 0..nd {
                face_res[c] = self.area * (0.5 * (xa[c] + xb[c]) * w - diff * (xb[c] - xa[c]));
            }
            face_res[1 + axis] +=
                self.area * 0.5 * (self.eos.pressure(xa[0]) + self.eos.pressure(xb[0]));
            for c in 0..nd {
                out[a_cell * nd + c] += face_res[c];
                out[b_cell * nd + c] += s * face_res[c];
            }
            for i in 0..d {
                let v = visc * (ua[i] - ub[i]);
                out[a_cell * nd + 1 + i] += v;
                out[b_cell * nd + 1 + i] -= v;
            }
            if self.eta != 0.0 {
                out[a_cell * nd + 1 + axis] -= eta_coef * div[b_cell];
                out[b_cell * nd + 1 + axis] += eta_coef * div[a_cell];
            }
        }
        Ok(())
    }

    /// Jacobian of [`Self::residual_into`] with respect to `x`.
    pub fn jacobian_into(&self, x: &[f64], dt: f64, jac: &mut BlockMatrix) -> Result<()> {
        let nd = self.nd;
        let d = nd - 1;
        let u = self.velocities(x).map_err(|cell| Error::DensityFloor {
            cell,
            rho: x[cell * nd],
        })?;
        jac.clear();
        let time_coef = self.vol / dt;
        for k in 0..self.mesh.num_cells() {
            let pos = jac.find(k, k);
            for c in 0..nd {
                jac.add(pos, c, c, time_coef);
            }
            if let Some(g) = &self.g {
                for i in 0..d {
                    jac.add(pos, 1 + i, 0, -self.vol * g[k * d + i]);
                }
            }
        }
        // ∂u_i/∂x for a cell: only the ϱ and m_i entries are nonzero
        let du = |cell: usize, i: usize| -> (f64, f64) {
            let rho = x[cell * nd];
            (-u[cell * d + i] / rho, 1.0 / rho)
        };
        let visc = self.mu * self.area / self.h;
        let s = self.out_sign;
        let mut da = [[0.0; 4]; 4];
        let mut db = [[0.0; 4]; 4];
        for f in self.mesh.faces() {
            let (a_cell, b_cell, axis) = (f.inner, f.outer, f.axis);
            let xa = &x[a_cell * nd..(a_cell + 1) * nd];
            let xb = &x[b_cell * nd..(b_cell + 1) * nd];
            let w = 0.5 * (u[a_cell * d + axis] + u[b_cell * d + axis]);
            let diff = self.h_eps + 0.5 * w.abs();
            let sg = if w > 0.0 {
                1.0
            } else if w < 0.0 {
                -1.0
            } else {
                0.0
            };
            let (dwa_rho, dwa_m) = du(a_cell, axis);
            let (dwb_rho, dwb_m) = du(b_cell, axis);
            for c in 0..nd {
                // convective flux of component c; ∂w enters through ⟨r⟩ - ½ sg ⟦r⟧
                let coef = 0.5 * (xa[c] + xb[c]) - 0.5 * sg * (xb[c] - xa[c]);
                da[c] = [0.0; 4];
                db[c] = [0.0; 4];
                da[c][0] += coef * 0.5 * dwa_rho;
                da[c][1 + axis] += coef * 0.5 * dwa_m;
                db[c][0] += coef * 0.5 * dwb_rho;
                db[c][1 + axis] += coef * 0.5 * dwb_m;
                da[c][c] += 0.5 * w + diff;
                db[c][c] += 0.5 * w - diff;
            }
            da[1 + axis][0] += 0.5 * self.eos.pressure_derivative(xa[0]);
            db[1 + axis][0] += 0.5 * self.eos.pressure_derivative(xb[0]);

            let paa = jac.find(a_cell, a_cell);
            let pab = jac.find(a_cell, b_cell);
            let pba = jac.find(b_cell, a_cell);
            let pbb = jac.find(b_cell, b_cell);
            for r in 0..nd {
                for c in 0..nd {
                    jac.add(paa, r, c, self.area * da[r][c]);
                    jac.add(pab, r, c, self.area * db[r][c]);
                    jac.add(pba, r, c, s * self.area * da[r][c]);
                    jac.add(pbb, r, c, s * self.area * db[r][c]);
                }
            }
            for i in 0..d {
                let (ua_rho, ua_m) = du(a_cell, i);
                let (ub_rho, ub_m) = du(b_cell, i);
                jac.add(paa, 1 + i, 0, visc * ua_rho);
                jac.add(paa, 1 + i, 1 + i, visc * ua_m);
                jac.add(pab, 1 + i, 0, -visc * ub_rho);
                jac.add(pab, 1 + i, 1 + i, -visc * ub_m);
                jac.add(pbb, 1 + i, 0, visc * ub_rho);
                jac.add(pbb, 1 + i, 1 + i, visc * ub_m);
                jac.add(pba, 1 + i, 0, -visc * ua_rho);
                jac.add(pba, 1 + i, 1 + i, -visc * ua_m);
            }
            if self.eta != 0.0 {
                let coef = 0.5 * self.eta * self.area;
                self.add_div_derivative(jac, a_cell, axis, b_cell, -coef, &du);
                self.add_div_derivative(jac, b_cell, axis, a_cell, coef, &du);
            }
        }
        Ok(())
    }

    /// Adds `scale * ∂(div_h u)_L / ∂x` to row `(row_cell, 1 + comp)`.
    fn add_div_derivative(
        &self,
        jac: &mut BlockMatrix,
        row_cell: usize,
        comp: usize,
        l: usize,
        scale: f64,
        du: &impl Fn(usize, usize) -> (f64, f64),
    ) {
        let r = 0.5 / self.h;
        for b in 0..self.nd - 1 {
            for (m, sign) in [(self.mesh.plus(l, b), 1.0), (self.mesh.minus(l, b), -1.0)] {
                let (d_rho, d_m) = du(m, b);
                let pos = jac.find(row_cell, m);
                jac.add(pos, 1 + comp, 0, scale * sign * r * d_rho);
                jac.add(pos, 1 + comp, 1 + b, scale * sign * r * d_m);
            }
        }
    }
}

/// Per-cell residual (`d + 1` entries per cell) of the implicit step from
/// `s_old` to `s_new` over `dt`.
pub fn residual(
    s_new: &State,
    s_old: &State,
    params: &FluidParams,
    cfg: &SchemeConfig,
    dt: f64,
) -> Result<Vec<f64>> {
    s_new.mesh().check_same(s_old.mesh())?;
    let asm = Assembler::new(s_new.mesh().clone(), params, cfg)?;
    let x = s_new.to_interleaved();
    let x_old = s_old.to_interleaved();
    let mut out = vec![0.0; x.len()];
    asm.residual_into(&x, &x_old, dt, &mut out)
        .map_err(|cell| Error::DensityFloor {
            cell,
            rho: x[cell * asm.nd],
        })?;
    Ok(out)
}
