// Scratch benchmark for the dense kernels on POD-sized problems.

use nalgebra::DMatrix;
use std::time::Instant;

fn main() {
    let m = 1001;
    let n = 2047;
    let y = DMatrix::<f64>::from_fn(n, m, |i, j| ((i * 31 + j * 17) % 97) as f64 / 97.0);

    let t0 = Instant::now();
    let g = y.transpose() * &y;
    println!("gemm {}x{}x{}: {:?}", m, n, m, t0.elapsed());

    let g = (&g + g.transpose()) * 0.5;
    let t0 = Instant::now();
    let eig = g.clone().symmetric_eigen();
    println!(
        "symmetric_eigen {0}x{0}: {1:?} (lambda_max={2:.3e})",
        m,
        t0.elapsed(),
        eig.eigenvalues.max()
    );

    let x = DMatrix::<f64>::from_fn(1001, 209, |i, j| ((i * 13 + j * 7) % 89) as f64 / 89.0);
    let t0 = Instant::now();
    let svd = x.svd(true, true);
    println!(
        "svd 1001x209: {:?} (sigma_max={:.3e})",
        t0.elapsed(),
        svd.singular_values.max()
    );
}
