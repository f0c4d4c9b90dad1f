//! Published first-20 Dirichlet eigenvalues of the catalog shapes.

use crate::geometry::ShapeId;

/// Column order of [`EIGENVALUES`].
pub const COLUMNS: [ShapeId; 9] = ShapeId::TABLE;

#[rustfmt::skip]
pub const EIGENVALUES: [[f64; 9]; 20] = [
    //  a      c      d      e      f      g      h      i      j
    [19.33, 19.66, 19.39, 19.64, 19.58, 19.39, 19.33, 19.39, 19.39],
    [47.53, 48.95, 47.58, 48.94, 48.59, 47.86, 47.54, 47.58, 47.58],
    [49.32, 49.35, 49.33, 49.35, 49.33, 49.32, 49.32, 49.33, 49.33],
    [78.83, 78.75, 77.85, 78.90, 78.54, 78.85, 78.84, 77.85, 77.85],
    [93.12, 97.87, 94.41, 97.69, 97.09, 94.48, 93.12, 94.40, 94.41],
    [98.70, 98.71, 98.67, 98.71, 98.66, 98.71, 98.71, 98.67, 98.67],
    [126.1, 127.8, 125.2, 127.9, 127.3, 126.9, 126.1, 125.2, 125.2],
    [128.0, 128.3, 128.0, 128.3, 128.0, 128.1, 128.0, 128.0, 127.7],
    [151.7, 166.1, 154.1, 165.8, 164.6, 158.5, 151.6, 150.4, 128.0],
    [167.7, 167.8, 167.8, 167.8, 167.8, 167.7, 167.7, 156.8, 153.6],
    [167.8, 177.5, 176.5, 177.1, 177.0, 175.8, 171.8, 167.8, 167.8],
    [175.3, 193.9, 182.3, 196.9, 183.4, 196.5, 176.1, 176.7, 167.8],
    [191.7, 196.1, 196.1, 197.5, 195.3, 197.4, 196.4, 185.3, 176.7],
    [196.4, 197.5, 197.4, 239.6, 197.4, 229.6, 197.4, 197.1, 185.4],
    [197.4, 245.1, 229.1, 244.4, 244.1, 245.9, 204.5, 197.4, 195.2],
    [218.8, 246.8, 246.0, 246.8, 246.2, 250.7, 235.5, 218.5, 195.5],
    [245.7, 254.3, 249.2, 254.1, 252.4, 256.7, 245.8, 242.8, 197.4],
    [246.7, 256.7, 256.6, 256.7, 256.6, 284.6, 250.5, 246.1, 214.8],
    [252.5, 284.7, 269.6, 285.8, 259.3, 285.5, 256.7, 250.6, 229.0],
    [256.6, 286.3, 285.9, 286.3, 283.2, 304.1, 278.7, 256.6, 245.9],
];

/// The 20 tabulated eigenvalues of `shape`, if it has a column.
pub fn reference_eigenvalues(shape: ShapeId) -> Option<[f64; 20]> {
    let col = COLUMNS.iter().position(|s| *s == shape)?;
    Some(std::array::from_fn(|n| EIGENVALUES[n][col]))
}
