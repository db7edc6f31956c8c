use serde::{Deserialize, Serialize};

use crate::environment::{dot, EnvironmentInstance, NormBounds};
use crate::error::{Error, Result};

/// Shape of the stacked parameter `ψ`.
///
/// Storage is position-major: block `i` holds `(θ_i, φ_i)`, so the
/// dispositions are `δ_i = x(u, s)ᵀ ψ_i + κ_i` with `x = (x_q, x_p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLayout {
    pub slate_size: usize,
    /// Slate-level quality feature length `M · d_q`.
    pub quality_dim: usize,
    /// Slate-level popularity feature length `M · d_p`; 0 for a model without popularity.
    pub popularity_dim: usize,
}

impl ParamLayout {
    pub fn for_instance(env: &EnvironmentInstance, with_popularity: bool) -> Self {
        ParamLayout {
            slate_size: env.slate_size(),
            quality_dim: env.quality_dim(),
            popularity_dim: if with_popularity { env.popularity_dim() } else { 0 },
        }
    }

    /// Length of one position block, also the length of `x(u, s)`.
    pub fn block_dim(&self) -> usize {
        self.quality_dim + self.popularity_dim
    }

    pub fn len(&self) -> usize {
        self.slate_size * self.block_dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    layout: ParamLayout,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn zeros(layout: ParamLayout) -> Self {
        ParamVector {
            layout,
            values: vec![0.0; layout.len()],
        }
    }

    pub fn from_values(layout: ParamLayout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::invalid(format!(
                "parameter vector has {} values, layout needs {}",
                values.len(),
                layout.len()
            )));
        }
        Ok(ParamVector { layout, values })
    }

    /// Stacks per-position `θ_i` and `φ_i` (each `φ_i` may be empty when the
    /// layout has no popularity block).
    pub fn from_blocks(layout: ParamLayout, theta: &[Vec<f64>], phi: &[Vec<f64>]) -> Result<Self> {
        if theta.len() != layout.slate_size {
            return Err(Error::invalid("one θ block per position is required"));
        }
        let mut values = Vec::with_capacity(layout.len());
        for i in 0..layout.slate_size {
            if theta[i].len() != layout.quality_dim {
                return Err(Error::invalid(format!("θ_{} has the wrong length", i + 1)));
            }
            values.extend_from_slice(&theta[i]);
            if layout.popularity_dim > 0 {
                let p = phi
                    .get(i)
                    .filter(|p| p.len() == layout.popularity_dim)
                    .ok_or_else(|| Error::invalid(format!("φ_{} has the wrong length", i + 1)))?;
                values.extend_from_slice(p);
            }
        }
        Ok(ParamVector { layout, values })
    }

    /// Ground truth `ψ*` of an instance in the given layout.
    pub fn from_instance(env: &EnvironmentInstance, with_popularity: bool) -> Self {
        let layout = ParamLayout::for_instance(env, with_popularity);
        Self::from_blocks(layout, env.theta_star(), env.phi_star()).expect("instance shapes are validated")
    }

    pub fn layout(&self) -> ParamLayout {
        self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn block(&self, i: usize) -> &[f64] {
        let d = self.layout.block_dim();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn theta(&self, i: usize) -> &[f64] {
        &self.block(i)[..self.layout.quality_dim]
    }

    pub fn phi(&self, i: usize) -> &[f64] {
        &self.block(i)[self.layout.quality_dim..]
    }

    pub fn thetas(&self) -> Vec<Vec<f64>> {
        (0..self.layout.slate_size).map(|i| self.theta(i).to_vec()).collect()
    }

    pub fn phis(&self) -> Vec<Vec<f64>> {
        if self.layout.popularity_dim == 0 {
            return Vec::new();
        }
        (0..self.layout.slate_size).map(|i| self.phi(i).to_vec()).collect()
    }

    pub fn norm(&self) -> f64 {
        dot(&self.values, &self.values).sqrt()
    }

    pub fn distance(&self, other: &ParamVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `δ_i = xᵀ ψ_i + κ_i`.
    pub fn dispositions_into(&self, x: &[f64], kappa: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(x, self.block(i)) + kappa[i];
        }
    }

    /// Whether `‖θ_i‖ ≤ L_q` and `‖φ_i‖ ≤ L_p` hold up to `slack`.
    pub fn is_feasible(&self, bounds: NormBounds, slack: f64) -> bool {
        (0..self.layout.slate_size).all(|i| {
            let t = self.theta(i);
            let p = self.phi(i);
            dot(t, t).sqrt() <= bounds.quality + slack && dot(p, p).sqrt() <= bounds.popularity + slack
        })
    }

    /// Euclidean projection onto the product of norm balls.
    pub fn project_to_balls(&mut self, bounds: NormBounds) {
        project_slice_to_balls(&mut self.values, self.layout, bounds);
    }
}

pub(crate) fn project_slice_to_balls(values: &mut [f64], layout: ParamLayout, bounds: NormBounds) {
    let d = layout.block_dim();
    let dq = layout.quality_dim;
    for block in values.chunks_mut(d.max(1)) {
        let (t, p) = block.split_at_mut(dq);
        clip(t, bounds.quality);
        clip(p, bounds.popularity);
    }
}

fn clip(v: &mut [f64], radius: f64) {
    let n = dot(v, v).sqrt();
    if n > radius {
        let s = radius / n;
        v.iter_mut().for_each(|x| *x *= s);
    }
}
