/// Dissipative upwind flux
/// `F_h(r, v) = ⟨r⟩⟨v⟩·n - (h^ε + ½|⟨v⟩·n|) ⟦r⟧`.
///
/// `r` and `v_normal` are `(in, out)` pairs; `v_normal` holds `v·n` on each
/// side of the face.
#[inline]
pub fn upwind_flux(r: (f64, f64), v_normal: (f64, f64), h: f64, epsilon: f64) -> f64 {
    let w = 0.5 * (v_normal.0 + v_normal.1);
    let r_avg = 0.5 * (r.0 + r.1);
    let r_jump = r.1 - r.0;
    r_avg * w - (h.powf(epsilon) + 0.5 * w.abs()) * r_jump
}
