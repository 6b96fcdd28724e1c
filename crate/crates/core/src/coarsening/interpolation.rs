use crate::error::{Error, Result};
use crate::knn::AffinityGraph;
use crate::sparse::Csr;

/// Fine-to-coarse interpolation operator `P` (|V_f| x |C|).
///
/// Coarse column `c` is anchored at fine seed `seeds[c]`; seeds are numbered
/// in increasing node order.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationMatrix {
    matrix: Csr,
    by_column: Csr,
    seeds: Vec<usize>,
    coarse_of: Vec<Option<usize>>,
}

impl InterpolationMatrix {
    pub fn identity(n: usize) -> Self {
        InterpolationMatrix {
            matrix: Csr::identity(n),
            by_column: Csr::identity(n),
            seeds: (0..n).collect(),
            coarse_of: (0..n).map(Some).collect(),
        }
    }

    pub(crate) fn from_parts(matrix: Csr, seeds: Vec<usize>) -> Self {
        let mut coarse_of = vec![None; matrix.n_rows()];
        for (c, &s) in seeds.iter().enumerate() {
            coarse_of[s] = Some(c);
        }
        InterpolationMatrix {
            by_column: matrix.transpose(),
            matrix,
            seeds,
            coarse_of,
        }
    }

    pub fn matrix(&self) -> &Csr {
        &self.matrix
    }

    pub fn n_fine(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn n_coarse(&self) -> usize {
        self.matrix.n_cols()
    }

    /// Fine seed anchoring each coarse node.
    pub fn seeds(&self) -> &[usize] {
        &self.seeds
    }

    /// Coarse index of a fine seed, `None` for F nodes.
    pub fn coarse_index(&self, fine: usize) -> Option<usize> {
        self.coarse_of[fine]
    }

    /// Fine nodes with a nonzero share in coarse node `c`, ascending.
    pub fn aggregate(&self, c: usize) -> &[usize] {
        self.by_column.row_indices(c)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.matrix.row(i)
    }

    pub fn is_identity(&self) -> bool {
        self.n_fine() == self.n_coarse()
            && (0..self.n_fine()).all(|i| {
                let mut r = self.matrix.row(i);
                r.next() == Some((i, 1.0)) && r.next().is_none()
            })
    }

    /// Triplets `(fine_row, coarse_col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.matrix.triplets()
    }
}

/// Builds `P` from a seed set.
///
/// Seed rows are unit vectors. An F row spreads over its seed neighbors; only
/// the `caliber` heaviest are kept (ties: lower node index) and renormalized.
pub fn build_interpolation(g: &AffinityGraph, is_seed: &[bool], caliber: usize) -> Result<InterpolationMatrix> {
    let n = g.n_nodes();
    if is_seed.len() != n {
        return Err(Error::InvalidInput("seed flags do not match graph size".into()));
    }
    if caliber == 0 {
        return Err(Error::InvalidInput("caliber must be at least 1".into()));
    }
    let seeds: Vec<usize> = (0..n).filter(|&i| is_seed[i]).collect();
    let mut coarse_of = vec![usize::MAX; n];
    for (c, &s) in seeds.iter().enumerate() {
        coarse_of[s] = c;
    }
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        if is_seed[i] {
            rows.push(vec![(coarse_of[i], 1.0)]);
            continue;
        }
        let mut nbrs: Vec<(usize, f64)> = g.neighbors(i).filter(|&(j, _)| is_seed[j]).collect();
        if nbrs.is_empty() {
            return Err(Error::Internal(format!("F node {i} has no seed neighbor")));
        }
        nbrs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        nbrs.truncate(caliber);
        let total: f64 = nbrs.iter().map(|&(_, w)| w).sum();
        let mut row: Vec<(usize, f64)> = nbrs.iter().map(|&(j, w)| (coarse_of[j], w / total)).collect();
        row.sort_by_key(|&(c, _)| c);
        rows.push(row);
    }
    Ok(InterpolationMatrix::from_parts(Csr::from_rows(seeds.len(), rows), seeds))
}
