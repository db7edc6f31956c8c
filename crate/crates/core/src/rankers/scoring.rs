use crate::choice::softmax_into;
use crate::environment::EmbeddingTable;
use crate::slate::{ItemId, UserId};

/// Per-user lookup of `x(u, s)ᵀ w_i` split by slot, so a slate's qualities and
/// caps cost `O(M²)` instead of `O(M² d)`.
pub(crate) struct SlateScorer {
    m: usize,
    n: usize,
    // [position][slot][item]
    q: Vec<f64>,
    b: Vec<f64>,
}

impl SlateScorer {
    /// `theta[i]` and `phi[i]` are slate-level parameter vectors of position `i`.
    /// An empty `phi` means caps are identically zero.
    pub(crate) fn build(
        quality: &EmbeddingTable,
        popularity: &EmbeddingTable,
        user: UserId,
        theta: &[Vec<f64>],
        phi: &[Vec<f64>],
    ) -> Self {
        let m = theta.len();
        let n = quality.items;
        SlateScorer {
            m,
            n,
            q: slot_table(quality, user, theta, m, n),
            b: if phi.is_empty() {
                vec![0.0; m * m * n]
            } else {
                slot_table(popularity, user, phi, m, n)
            },
        }
    }

    fn fill(&self, table: &[f64], slate: &[usize], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let base = i * self.m * self.n;
            *o = slate
                .iter()
                .enumerate()
                .map(|(j, &item)| table[base + j * self.n + item])
                .sum();
        }
    }

    pub(crate) fn quality(&self, slate: &[usize], out: &mut [f64]) {
        self.fill(&self.q, slate, out);
    }

    pub(crate) fn caps(&self, slate: &[usize], out: &mut [f64]) {
        self.fill(&self.b, slate, out);
    }

    /// `Σ_i (q_i + c·b_i) z_i(q + b + κ)`: value once every shown item is saturated.
    pub(crate) fn saturated_value(&self, slate: &[usize], kappa: &[f64], c: f64) -> f64 {
        let m = self.m;
        let mut q = [0.0; 16];
        let mut b = [0.0; 16];
        let mut d = [0.0; 16];
        let mut z = [0.0; 16];
        if m > 16 {
            let mut q = vec![0.0; m];
            let mut b = vec![0.0; m];
            self.quality(slate, &mut q);
            self.caps(slate, &mut b);
            let d: Vec<f64> = (0..m).map(|i| q[i] + b[i] + kappa[i]).collect();
            let mut z = vec![0.0; m];
            softmax_into(&d, &mut z);
            return (0..m).map(|i| (q[i] + c * b[i]) * z[i]).sum();
        }
        self.quality(slate, &mut q[..m]);
        self.caps(slate, &mut b[..m]);
        for i in 0..m {
            d[i] = q[i] + b[i] + kappa[i];
        }
        softmax_into(&d[..m], &mut z[..m]);
        (0..m).map(|i| (q[i] + c * b[i]) * z[i]).sum()
    }
}

fn slot_table(table: &EmbeddingTable, user: UserId, params: &[Vec<f64>], m: usize, n: usize) -> Vec<f64> {
    let d = table.dim;
    let mut out = vec![0.0; m * m * n];
    for (i, w) in params.iter().enumerate() {
        for j in 0..m {
            let block = &w[j * d..(j + 1) * d];
            for item in 0..n {
                let x = table.get(user, ItemId(item));
                out[(i * m + j) * n + item] = crate::environment::dot(x, block);
            }
        }
    }
    out
}
