use crate::knn::AffinityGraph;

/// Future volumes with the sum restricted to nodes flagged in `in_f`.
///
/// `theta_i = v_i + sum_{j in F, j ~ i} v_j * w_ji / sum_k w_jk`. A node with
/// no incident weight contributes nothing.
pub fn future_volumes_restricted(g: &AffinityGraph, in_f: &[bool]) -> Vec<f64> {
    let mut theta = g.volumes().to_vec();
    for j in 0..g.n_nodes() {
        if !in_f[j] {
            continue;
        }
        let total = g.weighted_degree(j);
        if total <= 0.0 {
            continue;
        }
        let share = g.volume(j) / total;
        for (i, w) in g.neighbors(j) {
            theta[i] += share * w;
        }
    }
    theta
}

/// Future volumes with every node in F.
pub fn future_volumes(g: &AffinityGraph) -> Vec<f64> {
    future_volumes_restricted(g, &vec![true; g.n_nodes()])
}

/// Seed selection for one coarsening step.
///
/// 1. nodes whose future volume exceeds `eta` times the mean become seeds;
/// 2. future volumes are recomputed over the remaining F nodes;
/// 3. F is scanned by decreasing future volume (ties: lower index) and a node
///    becomes a seed when its coupling to the current seeds,
///    `sum_{j in C} w_ij / sum_j w_ij`, is at most `q`.
///
/// Nodes without incident weight have coupling 0 and always become seeds. Any
/// F node still lacking a seed neighbor at the end is promoted as well.
///
/// Returns the seed flags indexed by node.
pub fn select_seeds(g: &AffinityGraph, q: f64, eta: f64) -> Vec<bool> {
    let n = g.n_nodes();
    let mut is_seed = vec![false; n];
    if n == 0 {
        return is_seed;
    }
    let theta = future_volumes(g);
    let mean = theta.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        if theta[i] > eta * mean {
            is_seed[i] = true;
        }
    }
    let in_f: Vec<bool> = is_seed.iter().map(|s| !s).collect();
    let theta = future_volumes_restricted(g, &in_f);
    let mut order: Vec<usize> = (0..n).filter(|&i| in_f[i]).collect();
    order.sort_by(|&a, &b| theta[b].total_cmp(&theta[a]).then(a.cmp(&b)));

    let mut seed_weight = vec![0.0; n];
    for i in (0..n).filter(|&i| is_seed[i]) {
        for (j, w) in g.neighbors(i) {
            seed_weight[j] += w;
        }
    }
    for i in order {
        let total = g.weighted_degree(i);
        let coupling = if total > 0.0 { seed_weight[i] / total } else { 0.0 };
        if coupling <= q {
            is_seed[i] = true;
            for (j, w) in g.neighbors(i) {
                seed_weight[j] += w;
            }
        }
    }
    for i in 0..n {
        if !is_seed[i] && !g.neighbor_ids(i).iter().any(|&j| is_seed[j]) {
            is_seed[i] = true;
        }
    }
    is_seed
}
