use serde::{Deserialize, Serialize};

/// Which variable family a column belongs to, with its local indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRef {
    Assign { l: usize, c: usize, u: usize },
    Illuminate { l: usize, t: usize },
    Fill { l: usize, c: usize, u: usize },
    Product { l: usize, c: usize, u: usize, t: usize },
    UserRatio { l: usize },
    ClusterRatio,
    Theta,
}

/// Flat column layout of the BH-CA model.
///
/// Blocks, in column order: `a[l][c][u]`, `z[l][t]`, `beta[l][c][u]`,
/// `q[l][c][u][t]`, `tU[l]`, `tL`, `theta`. Each block is lexicographic in
/// its index tuple. `a` and `beta` carry no slot index: assignment and
/// fill-rate hold for the whole hopping window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableCatalog {
    carriers: Vec<usize>,
    users: Vec<usize>,
    slots: usize,
    /// Start of cluster `l` inside the `a`/`beta` blocks.
    pair_start: Vec<usize>,
    pairs_total: usize,
    z_start: usize,
    beta_start: usize,
    q_start: usize,
    tu_start: usize,
    tl: usize,
    theta: usize,
    total: usize,
}

impl VariableCatalog {
    pub fn new(carriers: Vec<usize>, users: Vec<usize>, slots: usize) -> Self {
        assert_eq!(carriers.len(), users.len());
        let mut pair_start = Vec::with_capacity(carriers.len());
        let mut acc = 0;
        for (nc, nu) in carriers.iter().zip(&users) {
            pair_start.push(acc);
            acc += nc * nu;
        }
        let pairs_total = acc;
        let clusters = carriers.len();
        let z_start = pairs_total;
        let beta_start = z_start + clusters * slots;
        let q_start = beta_start + pairs_total;
        let tu_start = q_start + pairs_total * slots;
        let tl = tu_start + clusters;
        Self {
            carriers,
            users,
            slots,
            pair_start,
            pairs_total,
            z_start,
            beta_start,
            q_start,
            tu_start,
            tl,
            theta: tl + 1,
            total: tl + 2,
        }
    }

    pub fn num_clusters(&self) -> usize {
        self.carriers.len()
    }

    pub fn carriers(&self, l: usize) -> usize {
        self.carriers[l]
    }

    pub fn users(&self, l: usize) -> usize {
        self.users[l]
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Number of (l, c, u) triples, the shared index space of `a` and `beta`.
    pub fn num_assignments(&self) -> usize {
        self.pairs_total
    }

    fn triple(&self, l: usize, c: usize, u: usize) -> usize {
        debug_assert!(c < self.carriers[l] && u < self.users[l]);
        self.pair_start[l] + c * self.users[l] + u
    }

    pub fn a(&self, l: usize, c: usize, u: usize) -> usize {
        self.triple(l, c, u)
    }

    pub fn z(&self, l: usize, t: usize) -> usize {
        debug_assert!(t < self.slots);
        self.z_start + l * self.slots + t
    }

    pub fn beta(&self, l: usize, c: usize, u: usize) -> usize {
        self.beta_start + self.triple(l, c, u)
    }

    pub fn q(&self, l: usize, c: usize, u: usize, t: usize) -> usize {
        debug_assert!(t < self.slots);
        self.q_start + self.triple(l, c, u) * self.slots + t
    }

    pub fn t_user(&self, l: usize) -> usize {
        self.tu_start + l
    }

    pub fn t_cluster(&self) -> usize {
        self.tl
    }

    pub fn theta(&self) -> usize {
        self.theta
    }

    fn untriple(&self, k: usize) -> (usize, usize, usize) {
        let l = self.pair_start.partition_point(|&s| s <= k) - 1;
        let r = k - self.pair_start[l];
        (l, r / self.users[l], r % self.users[l])
    }

    /// Inverse of the column layout.
    pub fn describe(&self, col: usize) -> Option<VarRef> {
        if col >= self.total {
            return None;
        }
        Some(if col < self.z_start {
            let (l, c, u) = self.untriple(col);
            VarRef::Assign { l, c, u }
        } else if col < self.beta_start {
            let k = col - self.z_start;
            VarRef::Illuminate {
                l: k / self.slots,
                t: k % self.slots,
            }
        } else if col < self.q_start {
            let (l, c, u) = self.untriple(col - self.beta_start);
            VarRef::Fill { l, c, u }
        } else if col < self.tu_start {
            let k = col - self.q_start;
            let (l, c, u) = self.untriple(k / self.slots);
            VarRef::Product {
                l,
                c,
                u,
                t: k % self.slots,
            }
        } else if col < self.tl {
            VarRef::UserRatio {
                l: col - self.tu_start,
            }
        } else if col == self.tl {
            VarRef::ClusterRatio
        } else {
            VarRef::Theta
        })
    }

    /// Export name of a column: 1-based indices, underscore separated.
    pub fn name(&self, col: usize) -> String {
        match self.describe(col).expect("column in range") {
            VarRef::Assign { l, c, u } => format!("a_{}_{}_{}", l + 1, c + 1, u + 1),
            VarRef::Illuminate { l, t } => format!("z_{}_{}", l + 1, t + 1),
            VarRef::Fill { l, c, u } => format!("beta_{}_{}_{}", l + 1, c + 1, u + 1),
            VarRef::Product { l, c, u, t } => {
                format!("q_{}_{}_{}_{}", l + 1, c + 1, u + 1, t + 1)
            }
            VarRef::UserRatio { l } => format!("tU_{}", l + 1),
            VarRef::ClusterRatio => "tL".to_string(),
            VarRef::Theta => "theta".to_string(),
        }
    }
}
