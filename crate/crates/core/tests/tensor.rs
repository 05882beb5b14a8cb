use std::sync::Arc;

use mcnsfv_core::mc::tensor_moment_error_l2;
use mcnsfv_core::random_data::rng_stream;
use mcnsfv_core::verify::explicit_tensor_moment_error;
use mcnsfv_core::{Field, TorusMesh};
use rand::Rng;

fn ensemble(mesh: &Arc<TorusMesh>, seed: u64, len: usize) -> Vec<Field> {
    let mut rng = rng_stream(seed, 0, 1);
    (0..len)
        .map(|_| {
            let v = (0..mesh.num_cells())
                .map(|_| rng.random_range(-1.0..1.5))
                .collect();
            Field::from_values(mesh.clone(), 1, v).unwrap()
        })
        .collect()
}

#[test]
fn gram_identity_on_four_cells() {
    let mesh = Arc::new(TorusMesh::new(2, 2).unwrap());
    let a = ensemble(&mesh, 1, 3);
    let b = ensemble(&mesh, 2, 3);
    let e = tensor_moment_error_l2(&a, &b, 2).unwrap();
    let brute = explicit_tensor_moment_error(&a, &b, 2);
    assert!(
        (e - brute).abs() <= 1e-12 * brute.max(1.0),
        "{e} vs {brute}"
    );
}

#[test]
fn gram_identity_up_to_eight_cells() {
    for (n, d) in [(2, 2), (2, 3)] {
        let mesh = Arc::new(TorusMesh::new(n, d).unwrap());
        for seed in 0..20 {
            let a = ensemble(&mesh, 10 + seed, 1 + seed as usize % 4);
            let b = ensemble(&mesh, 100 + seed, 2 + seed as usize % 3);
            for k in 1..=3 {
                let e = tensor_moment_error_l2(&a, &b, k).unwrap();
                let brute = explicit_tensor_moment_error(&a, &b, k);
                assert!(
                    (e - brute).abs() <= 1e-10 * brute,
                    "n={n} d={d} k={k}: {e} vs {brute}"
                );
            }
        }
    }
}
