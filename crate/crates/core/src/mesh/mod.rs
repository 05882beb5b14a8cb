//! Uniform periodic meshes of the torus `[-1, 1]^d` and projection of
//! pointwise data onto cell averages.

mod quadrature;

pub use quadrature::GaussLegendre;

use crate::error::{Error, Result};
use crate::field::Field;

/// Side length of the torus along every axis.
pub const TORUS_LENGTH: f64 = 2.0;

/// Uniform cube mesh of the periodic torus with `n` cells per axis.
///
/// Cells are numbered lexicographically in their multi-index
/// `(i_0, ..., i_{d-1})`, with the last axis varying fastest. Every cell owns
/// the `d` faces on its positive side, so face `cell * d + axis` has `cell`
/// as its in-cell, the periodic neighbour `cell + e_axis` as its out-cell and
/// unit normal `+e_axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusMesh {
    d: usize,
    n: usize,
    h: f64,
    num_cells: usize,
    strides: Vec<usize>,
    plus: Vec<usize>,
    minus: Vec<usize>,
}

/// One oriented face of a [`TorusMesh`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub index: usize,
    pub axis: usize,
    pub inner: usize,
    pub outer: usize,
}

impl TorusMesh {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidMesh(format!(
                "need at least 2 cells per axis, got {n}"
            )));
        }
        if !(2..=3).contains(&d) {
            return Err(Error::InvalidMesh(format!("unsupported dimension {d}")));
        }
        let num_cells = n.pow(d as u32);
        let strides: Vec<usize> = (0..d).map(|a| n.pow((d - 1 - a) as u32)).collect();
        let mut plus = vec![0; num_cells * d];
        let mut minus = vec![0; num_cells * d];
        for cell in 0..num_cells {
            for axis in 0..d {
                let stride = strides[axis];
                let i = (cell / stride) % n;
                let base = cell - i * stride;
                plus[cell * d + axis] = base + ((i + 1) % n) * stride;
                minus[cell * d + axis] = base + ((i + n - 1) % n) * stride;
            }
        }
        Ok(Self {
            d,
            n,
            h: TORUS_LENGTH / n as f64,
            num_cells,
            strides,
            plus,
            minus,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn cells_per_axis(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn num_faces(&self) -> usize {
        self.num_cells * self.d
    }

    /// `|K| = h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.d as i32)
    }

    /// `|σ| = h^(d-1)`.
    pub fn face_area(&self) -> f64 {
        self.h.powi(self.d as i32 - 1)
    }

    /// Total volume of the torus, `2^d`.
    pub fn volume(&self) -> f64 {
        TORUS_LENGTH.powi(self.d as i32)
    }

    pub fn same_shape(&self, other: &TorusMesh) -> bool {
        self.d == other.d && self.n == other.n
    }

    pub fn check_same(&self, other: &TorusMesh) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::MeshMismatch {
                expected_d: self.d,
                expected_n: self.n,
                found_d: other.d,
                found_n: other.n,
            })
        }
    }

    pub fn multi_index(&self, cell: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for (i, &s) in idx.iter_mut().zip(&self.strides) {
            *i = (cell / s) % self.n;
        }
        idx
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.strides)
            .map(|(&i, &s)| (i % self.n) * s)
            .sum()
    }

    /// Periodic neighbour of `cell` one step along `+axis`.
    #[inline]
    pub fn plus(&self, cell: usize, axis: usize) -> usize {
        self.plus[cell * self.d + axis]
    }

    /// Periodic neighbour of `cell` one step along `-axis`.
    #[inline]
    pub fn minus(&self, cell: usize, axis: usize) -> usize {
        self.minus[cell * self.d + axis]
    }

    /// Lower corner of the cell; coordinates live in `[-1, 1)`.
    pub fn cell_origin(&self, cell: usize) -> [f64; 3] {
        let idx = self.multi_index(cell);
        let mut x = [0.0; 3];
        for a in 0..self.d {
            x[a] = -1.0 + idx[a] as f64 * self.h;
        }
        x
    }

    pub fn cell_center(&self, cell: usize) -> [f64; 3] {
        let mut x = self.cell_origin(cell);
        for xa in x.iter_mut().take(self.d) {
            *xa += 0.5 * self.h;
        }
        x
    }

    #[inline]
    pub fn face(&self, index: usize) -> Face {
        let inner = index / self.d;
        let axis = index % self.d;
        Face {
            index,
            axis,
            inner,
            outer: self.plus[index],
        }
    }

    pub fn faces(&self) -> impl Iterator<Item = Face> + '_ {
        (0..self.num_faces()).map(move |i| self.face(i))
    }

    /// The `2d` faces bounding `cell`, each paired with the sign that turns
    /// the global `+e_axis` normal into the outward normal of `cell`.
    pub fn cell_faces(&self, cell: usize) -> impl Iterator<Item = (Face, f64)> + '_ {
        (0..self.d).flat_map(move |axis| {
            let own = self.face(cell * self.d + axis);
            let other = self.face(self.minus(cell, axis) * self.d + axis);
            [(own, 1.0), (other, -1.0)]
        })
    }

    /// Cell average of `f` over every cell, integrated with a tensor-product
    /// Gauss-Legendre rule.
    pub fn project_scalar<F>(&self, quad: &GaussLegendre, f: F) -> Result<Field>
    where
        F: Fn(&[f64]) -> f64,
    {
        self.project(quad, 1, |x, out| out[0] = f(x))
    }

    /// Cell averages of a `components`-valued function.
    pub fn project<F>(&self, quad: &GaussLegendre, components: usize, f: F) -> Result<Field>
    where
        F: Fn(&[f64], &mut [f64]),
    {
        let d = self.d;
        let q = quad.len();
        let points = q.pow(d as u32);
        let mut values = vec![0.0; self.num_cells * components];
        let mut x = [0.0; 3];
        let mut buf = vec![0.0; components];
        let weight_total: f64 = (0..points)
            .map(|p| {
                let mut rem = p;
                (0..d)
                    .map(|_| {
                        let k = rem % q;
                        rem /= q;
                        0.5 * quad.weights()[k]
                    })
                    .product::<f64>()
            })
            .sum();
        for cell in 0..self.num_cells {
            let origin = self.cell_origin(cell);
            let acc = &mut values[cell * components..(cell + 1) * components];
            for p in 0..points {
                let mut weight = 1.0;
                let mut rem = p;
                for a in 0..d {
                    let k = rem % q;
                    rem /= q;
                    x[a] = origin[a] + 0.5 * self.h * (quad.nodes()[k] + 1.0);
                    weight *= 0.5 * quad.weights()[k];
                }
                buf.iter_mut().for_each(|b| *b = 0.0);
                f(&x[..d], &mut buf);
                for (c, v) in buf.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::NonFinite {
                            value: *v,
                            context: format!("projection at x={:?}", &x[..d]),
                        });
                    }
                    acc[c] += weight * v;
                }
            }
            acc.iter_mut().for_each(|a| *a /= weight_total);
        }
        Field::from_values(std::sync::Arc::new(self.clone()), components, values)
    }
}
