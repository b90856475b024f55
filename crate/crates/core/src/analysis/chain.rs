use nalgebra::{DMatrix, DVector};

use super::TabularOptions;
use crate::env::TabularMdp;
use crate::{Error, Result};

pub const STATIONARY_MAX_ITERATIONS: usize = 200_000;

/// Markov chain over state-option pairs, row `s * n_options + o`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedChain {
    pub n_states: usize,
    pub n_options: usize,
    pub matrix: DMatrix<f64>,
    /// P^{π_o}(s'|s) as `kernel[o]` with rows s, columns s'.
    pub kernel: Vec<DMatrix<f64>>,
}

impl AugmentedChain {
    pub fn index(&self, s: usize, o: usize) -> usize {
        s * self.n_options + o
    }

    pub fn size(&self) -> usize {
        self.n_states * self.n_options
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPair {
    /// d(s,o), indexed like the chain.
    pub d: DVector<f64>,
    /// d̄(ō,s) laid out `[ō][s]`.
    pub d_bar: DMatrix<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Plain iteration stalled (a periodic chain) and the lazy chain was used.
    pub lazy: bool,
}

/// Entry `((s,o),(s',o'))` is `p(o'|s',o) · P^{π_o}(s'|s)`. Rejects option
/// tables with a zero meta-policy entry or a termination of 0 or 1.
pub fn build_augmented_chain(mdp: &TabularMdp, options: &TabularOptions) -> Result<AugmentedChain> {
    options.check_assumption()?;
    build_augmented_chain_unchecked(mdp, options)
}

/// [`build_augmented_chain`] without the positivity check.
pub fn build_augmented_chain_unchecked(mdp: &TabularMdp, options: &TabularOptions) -> Result<AugmentedChain> {
    if mdp.n_states != options.n_states || mdp.n_actions != options.n_actions {
        return Err(Error::DimensionMismatch {
            context: "options vs mdp",
            expected: mdp.n_states * mdp.n_actions,
            got: options.n_states * options.n_actions,
        });
    }
    let (ns, no) = (mdp.n_states, options.n_options);
    let kernel: Vec<DMatrix<f64>> = (0..no)
        .map(|o| {
            let rows: Vec<f64> = (0..ns).flat_map(|s| options.state_kernel(mdp, o, s)).collect();
            DMatrix::from_row_slice(ns, ns, &rows)
        })
        .collect();
    let mut matrix = DMatrix::zeros(ns * no, ns * no);
    for s in 0..ns {
        for o in 0..no {
            for next in 0..ns {
                let p = kernel[o][(s, next)];
                if p == 0.0 {
                    continue;
                }
                for o_next in 0..no {
                    matrix[(s * no + o, next * no + o_next)] = p * options.arrival(next, o, o_next);
                }
            }
        }
    }
    Ok(AugmentedChain { n_states: ns, n_options: no, matrix, kernel })
}

/// Number of nodes reachable from node 0 along positive entries of `m`
/// (or of its transpose).
fn reach(m: &DMatrix<f64>, transpose: bool) -> usize {
    let n = m.nrows();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            let w = if transpose { m[(j, i)] } else { m[(i, j)] };
            if w > 0.0 && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().filter(|&x| x).count()
}

/// Errors unless every pair communicates with every other.
pub fn check_irreducible(chain: &AugmentedChain) -> Result<()> {
    let total = chain.size();
    let reachable = reach(&chain.matrix, false).min(reach(&chain.matrix, true));
    if reachable < total {
        return Err(Error::ReducibleChain { reachable, total });
    }
    Ok(())
}

fn power_iterate(p: &DMatrix<f64>, tolerance: f64) -> (DVector<f64>, f64, usize) {
    let n = p.nrows();
    let pt = p.transpose();
    let mut d = DVector::from_element(n, 1.0 / n as f64);
    let mut residual = f64::INFINITY;
    for it in 1..=STATIONARY_MAX_ITERATIONS {
        let mut next = &pt * &d;
        let total = next.sum();
        next /= total;
        residual = (&next - &d).amax();
        d = next;
        if residual < tolerance {
            return (d, residual, it);
        }
    }
    (d, residual, STATIONARY_MAX_ITERATIONS)
}

/// Stationary distribution of the chain by power iteration, plus the
/// arrival marginal d̄(ō,s) = Σ_s̄ d(s̄,ō) P^{π_ō}(s|s̄).
///
/// `tolerance` bounds ‖dᵀP − d‖∞. If plain iteration stalls, the lazy chain
/// (I + P)/2 is iterated instead: it is aperiodic and has the same
/// stationary distribution.
pub fn stationary_distribution(chain: &AugmentedChain, tolerance: f64) -> Result<StationaryPair> {
    check_irreducible(chain)?;
    let n = chain.size();
    let (mut d, mut residual, mut iterations) = power_iterate(&chain.matrix, tolerance);
    let mut lazy = false;
    if residual >= tolerance {
        let halved = (&chain.matrix + DMatrix::identity(n, n)) * 0.5;
        let (d2, _, i2) = power_iterate(&halved, tolerance / 2.0);
        iterations += i2;
        residual = (chain.matrix.tr_mul(&d2) - &d2).amax();
        if residual >= tolerance {
            return Err(Error::NotConverged { iterations, residual });
        }
        (d, lazy) = (d2, true);
    }
    let (ns, no) = (chain.n_states, chain.n_options);
    let mut d_bar = DMatrix::zeros(no, ns);
    for o in 0..no {
        for from in 0..ns {
            let w = d[from * no + o];
            for s in 0..ns {
                d_bar[(o, s)] += w * chain.kernel[o][(from, s)];
            }
        }
    }
    Ok(StationaryPair { d, d_bar, residual, iterations, lazy })
}

/// max over (s,o) of |d(s,o) − Σ_ō d̄(ō,s) p(o|s,ō)|.
pub fn verify_decomposition(pair: &StationaryPair, options: &TabularOptions) -> f64 {
    let (ns, no) = (options.n_states, options.n_options);
    let mut worst: f64 = 0.0;
    for s in 0..ns {
        for o in 0..no {
            let mixed: f64 = (0..no).map(|prev| pair.d_bar[(prev, s)] * options.arrival(s, prev, o)).sum();
            worst = worst.max((pair.d[s * no + o] - mixed).abs());
        }
    }
    worst
}
