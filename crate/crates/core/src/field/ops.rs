use std::sync::Arc;

use super::Field;
use crate::mesh::{Face, TorusMesh};

/// `⟨v⟩ = (v^in + v^out) / 2` for one component.
#[inline]
pub fn avg(v: &Field, face: Face, component: usize) -> f64 {
    let c = v.components();
    0.5 * (v.values()[face.inner * c + component] + v.values()[face.outer * c + component])
}

/// `⟦v⟧ = v^out - v^in` for one component.
#[inline]
pub fn jump(v: &Field, face: Face, component: usize) -> f64 {
    let c = v.components();
    v.values()[face.outer * c + component] - v.values()[face.inner * c + component]
}

/// Face-indexed data, one entry per face and component. The direction of
/// each entry is the face normal `+e_axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceData {
    pub mesh: Arc<TorusMesh>,
    pub components: usize,
    pub values: Vec<f64>,
}

/// `(∇_D r)_σ = ⟦r⟧ / h · n`, componentwise for vector fields.
pub fn grad_d(r: &Field) -> FaceData {
    let mesh = r.mesh().clone();
    let c = r.components();
    let inv_h = 1.0 / mesh.h();
    let mut values = Vec::with_capacity(mesh.num_faces() * c);
    for face in mesh.faces() {
        for comp in 0..c {
            values.push(jump(r, face, comp) * inv_h);
        }
    }
    FaceData {
        mesh,
        components: c,
        values,
    }
}

/// `(div_h v)_K = Σ_{σ∈∂K} |σ|/|K| ⟨v⟩·n_K`.
///
/// # Panics
/// If `v` does not have `d` components.
pub fn div_h(v: &Field) -> Field {
    let mesh = v.mesh().clone();
    let d = mesh.dim();
    assert_eq!(v.components(), d, "div_h needs a vector field");
    let ratio = mesh.face_area() / mesh.cell_volume();
    let mut out = vec![0.0; mesh.num_cells()];
    for face in mesh.faces() {
        let flux = ratio * avg(v, face, face.axis);
        out[face.inner] += flux;
        out[face.outer] -= flux;
    }
    Field::from_raw(mesh, 1, out)
}
