//! Joint draws over a registry.
//!
//! Each draw takes three uniforms per registry id, in id order: a life, a
//! storage indicator and a residual. A component id contributes its life; a
//! standby id contributes its storage and residual uniforms. Two systems over
//! the same registry therefore see the same component lives, and identical
//! systems produce identical lifetimes.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{Node, Registry, SystemSpec, Topology};
use crate::error::{Error, Result};
use crate::stream::{DrawStream, UniformStream};

struct JointDraw {
    life: Vec<f64>,
    storage: Vec<f64>,
    residual: Vec<f64>,
}

fn joint_draw<S: UniformStream + ?Sized>(registry: &Registry, stream: &mut S) -> JointDraw {
    let n = registry.len();
    let mut d = JointDraw { life: Vec::with_capacity(n), storage: Vec::with_capacity(n), residual: Vec::with_capacity(n) };
    for law in registry.values() {
        d.life.push(law.time_at_log_sf(stream.uniform().ln()));
        d.storage.push(stream.uniform());
        d.residual.push(stream.uniform());
    }
    d
}

fn index_of(registry: &Registry, id: &str) -> usize {
    registry.keys().position(|k| k == id).expect("system ids are resolved at construction")
}

fn lifetime(spec: &SystemSpec, draw: &JointDraw) -> f64 {
    let reg = spec.registry();
    let lives = spec.nodes().iter().map(|node| match node {
        Node::Plain { id, .. } => draw.life[index_of(reg, id)],
        Node::Standby { component, standby, composite } => {
            let (c, s) = (index_of(reg, component), index_of(reg, standby));
            composite.lifetime_from_draws(draw.life[c], draw.storage[s], draw.residual[s])
        }
    });
    match spec.topology() {
        Topology::Series => lives.fold(f64::INFINITY, f64::min),
        Topology::Parallel => lives.fold(0.0, f64::max),
    }
}

fn shared_registry(a: &SystemSpec, b: &SystemSpec) -> Result<()> {
    if Arc::ptr_eq(a.registry(), b.registry()) || a.registry() == b.registry() {
        Ok(())
    } else {
        let ka: Vec<_> = a.registry().keys().collect();
        let kb: Vec<_> = b.registry().keys().collect();
        Err(Error::RegistryMismatch(format!("{ka:?} vs {kb:?}")))
    }
}

/// Lifetimes of `a` and `b` on one joint draw of the shared registry.
pub fn coupled_sample<S: UniformStream + ?Sized>(a: &SystemSpec, b: &SystemSpec, stream: &mut S) -> Result<(f64, f64)> {
    shared_registry(a, b)?;
    let draw = joint_draw(a.registry(), stream);
    Ok((lifetime(a, &draw), lifetime(b, &draw)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoupledCounts {
    pub draws: u64,
    /// Draws with `T_a > T_b`.
    pub a_wins: u64,
    /// Draws with `T_b > T_a`. Ties count for neither.
    pub b_wins: u64,
}

impl CoupledCounts {
    /// Estimate of `P(T_a > T_b) - P(T_b > T_a)` and its standard error.
    pub fn difference(&self) -> (f64, f64) {
        let n = self.draws as f64;
        let (pa, pb) = (self.a_wins as f64 / n, self.b_wins as f64 / n);
        let d = pa - pb;
        // Per-draw score is +1, -1 or 0.
        let var = (pa + pb - d * d) * n / (n - 1.0).max(1.0);
        (d, (var / n).sqrt())
    }
}

/// Counts strict wins over draws `0..n` keyed by `seed`; independent of the
/// number of worker threads.
pub fn coupled_counts(a: &SystemSpec, b: &SystemSpec, n: u64, seed: u64) -> Result<CoupledCounts> {
    shared_registry(a, b)?;
    let (a_wins, b_wins) = (0..n)
        .into_par_iter()
        .map(|i| {
            let draw = joint_draw(a.registry(), &mut DrawStream::new(seed, i));
            let (ta, tb) = (lifetime(a, &draw), lifetime(b, &draw));
            ((ta > tb) as u64, (tb > ta) as u64)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    Ok(CoupledCounts { draws: n, a_wins, b_wins })
}

/// Fraction of `n` draws with system lifetime above each `t`.
pub fn empirical_survival(spec: &SystemSpec, ts: &[f64], n: u64, seed: u64) -> Vec<f64> {
    let counts = (0..n)
        .into_par_iter()
        .fold(
            || vec![0u64; ts.len()],
            |mut acc, i| {
                let v = lifetime(spec, &joint_draw(spec.registry(), &mut DrawStream::new(seed, i)));
                for (c, &t) in acc.iter_mut().zip(ts) {
                    *c += (v > t) as u64;
                }
                acc
            },
        )
        .reduce(|| vec![0u64; ts.len()], |mut x, y| {
            x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
            x
        });
    counts.into_iter().map(|c| c as f64 / n as f64).collect()
}
