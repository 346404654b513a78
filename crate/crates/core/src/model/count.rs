use crate::error::{Error, Result};

use super::{ModelVariant, SupportMatrix};

/// Number of free parameters of a directed model.
///
/// `support` is only read for `pi`, `deltapi` (block co-occurrence) and `sep`
/// (blocks per network); pass a full matrix otherwise.
pub fn count_params(
    variant: ModelVariant,
    q: usize,
    support: &SupportMatrix,
    m: usize,
) -> Result<usize> {
    count_params_for(variant, q, support, m, true)
}

/// As [`count_params`], with undirected networks counting only the upper
/// triangle of the connectivity matrix.
pub fn count_params_for(
    variant: ModelVariant,
    q: usize,
    support: &SupportMatrix,
    m: usize,
    directed: bool,
) -> Result<usize> {
    if q == 0 || m == 0 {
        return Err(Error::Params("Q and M must be positive".into()));
    }
    let square = |k: usize| if directed { k * k } else { k * (k + 1) / 2 };
    let check = || -> Result<()> {
        if support.n_networks() != m || support.n_blocks() != q {
            return Err(Error::Support(format!(
                "support is {}x{}, expected {m}x{q}",
                support.n_networks(),
                support.n_blocks()
            )));
        }
        Ok(())
    };
    let pi_part = || -> usize { (0..m).map(|k| support.block_count(k) - 1).sum() };
    let alpha_part = || {
        if directed {
            support.n_co_occurring()
        } else {
            support.n_co_occurring_unordered()
        }
    };
    Ok(match variant {
        ModelVariant::Iid => (q - 1) + square(q),
        ModelVariant::Delta => (q - 1) + square(q) + (m - 1),
        ModelVariant::Pi => {
            check()?;
            pi_part() + alpha_part()
        }
        ModelVariant::DeltaPi => {
            check()?;
            pi_part() + alpha_part() + (m - 1)
        }
        ModelVariant::Sep => {
            check()?;
            (0..m)
                .map(|k| {
                    let qm = support.block_count(k);
                    (qm - 1) + square(qm)
                })
                .sum()
        }
    })
}
