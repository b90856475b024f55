use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{AugmentedChain, StationaryPair, TabularOptions};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ACheck {
    /// Φᵀ D (I − γP) Φ with D = diag(d).
    pub a: DMatrix<f64>,
    /// Same matrix with D built from the decomposition weights
    /// Σ_ō d̄(ō,s) p(o|s,ō).
    pub a_moc: DMatrix<f64>,
    /// Smallest eigenvalue of (A + Aᵀ)/2.
    pub lambda_min: f64,
    /// max |A − A_moc| entrywise.
    pub moc_max_diff: f64,
}

/// Identity features over the pairs of `chain`.
pub fn one_hot_features(chain: &AugmentedChain) -> DMatrix<f64> {
    DMatrix::identity(chain.size(), chain.size())
}

/// Builds A for the feature matrix `phi` (one row per state-option pair)
/// and its multi-update weighted twin. Rejects rank-deficient features.
pub fn expected_a_check(
    pair: &StationaryPair,
    phi: &DMatrix<f64>,
    chain: &AugmentedChain,
    options: &TabularOptions,
    discount: f64,
) -> Result<ACheck> {
    let n = chain.size();
    if phi.nrows() != n {
        return Err(Error::DimensionMismatch { context: "feature rows", expected: n, got: phi.nrows() });
    }
    let cols = phi.ncols();
    let rank = phi.clone().svd(false, false).rank(1e-10);
    if rank < cols {
        return Err(Error::RankDeficient { rank, cols });
    }
    let no = chain.n_options;
    let weights_moc = DVector::from_fn(n, |i, _| {
        let (s, o) = (i / no, i % no);
        (0..no).map(|prev| pair.d_bar[(prev, s)] * options.arrival(s, prev, o)).sum::<f64>()
    });
    let step = (DMatrix::identity(n, n) - &chain.matrix * discount) * phi;
    let weighted = |w: &DVector<f64>| {
        let mut scaled = phi.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= w[i];
        }
        scaled.transpose() * &step
    };
    let a = weighted(&pair.d);
    let a_moc = weighted(&weights_moc);
    let sym = (&a + a.transpose()) * 0.5;
    let lambda_min = SymmetricEigen::new(sym).eigenvalues.min();
    let moc_max_diff = (&a - &a_moc).amax();
    Ok(ACheck { a, a_moc, lambda_min, moc_max_diff })
}
