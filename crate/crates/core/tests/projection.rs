use std::sync::Arc;

use mcnsfv_core::mesh::GaussLegendre;
use mcnsfv_core::TorusMesh;
use proptest::prelude::*;

proptest! {
    // Projecting a function that is constant on every cell returns its values.
    #[test]
    fn projection_of_piecewise_constant_is_identity(
        values in proptest::collection::vec(-5.0f64..5.0, 36),
    ) {
        let n = 6;
        let mesh = Arc::new(TorusMesh::new(n, 2).unwrap());
        let h = mesh.h();
        let lookup = |x: &[f64]| {
            let i = (((x[0] + 1.0) / h).floor() as usize).min(n - 1);
            let j = (((x[1] + 1.0) / h).floor() as usize).min(n - 1);
            values[i * n + j]
        };
        let f = mesh.project_scalar(&GaussLegendre::default(), lookup).unwrap();
        for (got, want) in f.values().iter().zip(&values) {
            prop_assert!((got - want).abs() <= 4.0 * f64::EPSILON * want.abs().max(1.0));
        }
    }
}
