//! Synthetic fixtures shared by the acceptance suite.

use std::path::PathBuf;

use mca_core::DataMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

/// Index of the extreme row in [`outlier_dataset`].
pub const OUTLIER_ROW: usize = 50;

/// 50 independent standard-normal rows of (S, X, Y) followed by one row at
/// 10 in all three columns.
pub fn outlier_dataset(seed: u64) -> DataMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<f64>> = (0..50).map(|_| (0..3).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).collect();
    rows.push(vec![10.0, 10.0, 10.0]);
    DataMatrix::from_rows(&["S", "X", "Y"], &rows).unwrap()
}

/// A qPCR-like table of 87 cells.
#[derive(Debug)]
pub struct QpcrFixture {
    pub csv: String,
    /// Ids of the two cells treated as outliers.
    pub outliers: [String; 2],
}

/// Genes are Gapdh, Nanog, Fgf5, Oct4, Sox2. Two cells have a missing
/// value, two are outliers. Among the remaining 83, the 20 highest Nanog
/// values carry no Fgf5 and 15 of the others express Fgf5.
pub fn qpcr_fixture(seed: u64) -> QpcrFixture {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut nanog: Vec<f64> = (0..83).map(|k| 0.05 + k as f64 * 0.02 + rng.random::<f64>() * 0.01).collect();
    nanog.sort_by(f64::total_cmp);
    // the lowest 63 Nanog cells hold all 15 Fgf5 expressers
    let mut fgf5_positive: Vec<bool> = (0..63).map(|k| k < 15).collect();
    fgf5_positive.shuffle(&mut rng);
    fgf5_positive.extend([false; 20]);

    let mut cells: Vec<String> = (0..83)
        .map(|k| {
            let fgf5 = if fgf5_positive[k] { 0.1 + rng.random::<f64>() } else { 0.0 };
            format!(
                "{:.4},{:.4},{:.4},{:.4},{:.4}",
                0.8 + 0.4 * rng.random::<f64>(),
                nanog[k],
                fgf5,
                rng.random::<f64>(),
                rng.random::<f64>()
            )
        })
        .collect();
    cells.push("1.0,NA,0.0,0.5,0.5".into());
    cells.push("1.0,0.5,0.0,,0.5".into());
    // extreme Nanog with detected Fgf5: would change both compartments if kept
    cells.push("1.0,9.0,2.0,0.5,0.5".into());
    cells.push("1.0,8.0,3.0,0.5,0.5".into());
    cells.shuffle(&mut rng);

    let mut csv = String::from("cell,Gapdh,Nanog,Fgf5,Oct4,Sox2\n");
    let mut outliers = Vec::new();
    for (k, c) in cells.iter().enumerate() {
        let id = format!("c{k:02}");
        if c.starts_with("1.0,9.0") || c.starts_with("1.0,8.0") {
            outliers.push(id.clone());
        }
        csv.push_str(&format!("{id},{c}\n"));
    }
    QpcrFixture { csv, outliers: [outliers[0].clone(), outliers[1].clone()] }
}

/// Path of the `mca` binary next to the running test executable.
pub fn mca_binary() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?;
    let bin = dir.join(format!("mca{}", std::env::consts::EXE_SUFFIX));
    bin.exists().then_some(bin)
}
