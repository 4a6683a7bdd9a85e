//! Realize an ND kernel as points of Euclidean space and read back the
//! distances.

use coarsekit::embeddings::{embedding_from_nd, squared_distance_kernel};
use coarsekit::kernels::KernelMatrix;

fn main() -> coarsekit::error::Result<()> {
    // |i − j| on four collinear points: realizable as √|i − j|
    let rows: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| (i as f64 - j as f64).abs()).collect()).collect();
    let labels = (0..4).map(|i| format!("x{i}")).collect();
    let n = KernelMatrix::from_rows(labels, &rows)?;

    let coords = embedding_from_nd(&n, "x0", 1e-9)?;
    println!("{}", coords.to_csv());

    let back = squared_distance_kernel(&coords);
    let err = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .map(|(i, j)| (back.get(i, j) - n.get(i, j)).abs())
        .fold(0.0, f64::max);
    println!("largest reconstruction error {err:e}");
    Ok(())
}
