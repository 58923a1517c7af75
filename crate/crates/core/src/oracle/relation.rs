use std::sync::Arc;

use rayon::prelude::*;

use super::pool::{image, InstancePool, Mask};
use crate::error::{MapError, Result};
use crate::model::Instance;

/// A mapping restricted to a source pool and a target pool: one bit per
/// pair of pool members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingRelation {
    source: Arc<InstancePool>,
    target: Arc<InstancePool>,
    words: usize,
    bits: Vec<u64>,
}

impl MappingRelation {
    pub fn empty(source: Arc<InstancePool>, target: Arc<InstancePool>) -> Self {
        let words = target.size().div_ceil(64);
        let bits = vec![0; words * source.size()];
        MappingRelation {
            source,
            target,
            words,
            bits,
        }
    }

    /// Builds a relation row by row; `fill` receives a source mask and a
    /// zeroed row to set bits in. Rows are computed in parallel.
    pub(crate) fn build(
        source: Arc<InstancePool>,
        target: Arc<InstancePool>,
        fill: impl Fn(Mask, &mut [u64]) -> Result<()> + Sync,
    ) -> Result<Self> {
        let mut rel = MappingRelation::empty(source, target);
        let words = rel.words;
        rel.bits
            .par_chunks_mut(words)
            .enumerate()
            .map(|(i, row)| fill(i as Mask, row))
            .collect::<Result<Vec<()>>>()?;
        Ok(rel)
    }

    pub fn full(source: Arc<InstancePool>, target: Arc<InstancePool>) -> Self {
        let mut rel = MappingRelation::empty(source, target);
        let n = rel.target.size();
        for row in rel.bits.chunks_mut(rel.words) {
            fill_prefix(row, n);
        }
        rel
    }

    pub fn identity(pool: Arc<InstancePool>) -> Self {
        let mut rel = MappingRelation::empty(pool.clone(), pool);
        for i in 0..rel.source.size() as Mask {
            rel.insert(i, i);
        }
        rel
    }

    /// All pairs `(I1, I2)` with `I1 ⊆ I2`.
    pub fn id_bar(pool: Arc<InstancePool>) -> Self {
        let mut rel = MappingRelation::empty(pool.clone(), pool);
        let k = rel.source.fact_count();
        for (i, row) in rel.bits.chunks_mut(rel.words).enumerate() {
            set_bit(row, i as Mask);
            up_close(row, k);
        }
        rel
    }

    /// `I → I'`: a homomorphism that fixes constants maps `I` into `I'`.
    pub fn homomorphisms(pool: Arc<InstancePool>) -> Self {
        let maps = pool.null_maps();
        let k = pool.fact_count();
        MappingRelation::build(pool.clone(), pool, |i, row| {
            for m in &maps {
                set_bit(row, image(m, i));
            }
            up_close(row, k);
            Ok(())
        })
        .expect("infallible")
    }

    pub fn source(&self) -> &Arc<InstancePool> {
        &self.source
    }

    pub fn target(&self) -> &Arc<InstancePool> {
        &self.target
    }

    pub fn contains(&self, i: Mask, j: Mask) -> bool {
        get_bit(self.row(i), j)
    }

    pub fn insert(&mut self, i: Mask, j: Mask) {
        let w = self.words;
        set_bit(&mut self.bits[i as usize * w..(i as usize + 1) * w], j);
    }

    pub fn row(&self, i: Mask) -> &[u64] {
        &self.bits[i as usize * self.words..(i as usize + 1) * self.words]
    }

    /// Targets related to `i`, in increasing mask order.
    pub fn targets(&self, i: Mask) -> impl Iterator<Item = Mask> + '_ {
        ones(self.row(i))
    }

    /// All pairs, ordered by source mask and then target mask.
    pub fn pairs(&self) -> impl Iterator<Item = (Mask, Mask)> + '_ {
        (0..self.source.size() as Mask).flat_map(move |i| self.targets(i).map(move |j| (i, j)))
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn in_domain(&self, i: Mask) -> bool {
        self.row(i).iter().any(|&w| w != 0)
    }

    /// Every source pool member has some related target.
    pub fn is_total(&self) -> bool {
        (0..self.source.size() as Mask).all(|i| self.in_domain(i))
    }

    /// The targets of `a` are among the targets of `b`.
    pub fn row_subset(&self, a: Mask, b: Mask) -> bool {
        self.row(a).iter().zip(self.row(b)).all(|(x, y)| x & !y == 0)
    }

    pub fn pair(&self, i: Mask, j: Mask) -> (Instance, Instance) {
        (self.source.instance(i), self.target.instance(j))
    }

    /// Relational composition: `(I1, I3)` such that some middle `I2` has
    /// `(I1, I2)` here and `(I2, I3)` in `other`.
    pub fn compose(&self, other: &MappingRelation) -> Result<MappingRelation> {
        if self.target != other.source {
            return Err(MapError::Pool(format!(
                "cannot compose: middle pools over {} and {} differ",
                self.target.schema().name(),
                other.source.schema().name()
            )));
        }
        MappingRelation::build(self.source.clone(), other.target.clone(), |i, row| {
            for j in self.targets(i) {
                for (o, w) in row.iter_mut().zip(other.row(j)) {
                    *o |= w;
                }
            }
            Ok(())
        })
    }

    pub fn transpose(&self) -> MappingRelation {
        let mut out = MappingRelation::empty(self.target.clone(), self.source.clone());
        for (i, j) in self.pairs() {
            out.insert(j, i);
        }
        out
    }

    /// `→ ∘ R ∘ →`: closes both sides under homomorphisms within the pools.
    pub fn extend(&self) -> MappingRelation {
        let tmaps = self.target.null_maps();
        let kt = self.target.fact_count();
        let right = MappingRelation::build(self.source.clone(), self.target.clone(), |i, row| {
            for j in self.targets(i) {
                for m in &tmaps {
                    set_bit(row, image(m, j));
                }
            }
            up_close(row, kt);
            Ok(())
        })
        .expect("infallible");
        let above = MappingRelation::homomorphisms(self.source.clone());
        above.compose(&right).expect("same pools")
    }

    /// The least pair, in source-then-target mask order, on which the two
    /// relations differ, with whether it belongs to `self`.
    pub fn first_difference(&self, other: &MappingRelation) -> Option<(Mask, Mask, bool)> {
        if self.source != other.source || self.target != other.target {
            return None;
        }
        for i in 0..self.source.size() as Mask {
            for (w, (x, y)) in self.row(i).iter().zip(other.row(i)).enumerate() {
                let diff = x ^ y;
                if diff != 0 {
                    let bit = diff.trailing_zeros();
                    let j = (w as Mask) * 64 + bit as Mask;
                    return Some((i, j, x >> bit & 1 == 1));
                }
            }
        }
        None
    }
}

pub(crate) fn get_bit(row: &[u64], j: Mask) -> bool {
    row[(j / 64) as usize] >> (j % 64) & 1 == 1
}

pub(crate) fn set_bit(row: &mut [u64], j: Mask) {
    row[(j / 64) as usize] |= 1 << (j % 64);
}

pub(crate) fn ones(row: &[u64]) -> impl Iterator<Item = Mask> + '_ {
    row.iter().enumerate().flat_map(|(w, &word)| {
        let mut rest = word;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let bit = rest.trailing_zeros() as Mask;
            rest &= rest - 1;
            Some(w as Mask * 64 + bit)
        })
    })
}

fn fill_prefix(row: &mut [u64], n: usize) {
    for (w, word) in row.iter_mut().enumerate() {
        let lo = w * 64;
        *word = if n >= lo + 64 {
            u64::MAX
        } else if n > lo {
            (1u64 << (n - lo)) - 1
        } else {
            0
        };
    }
}

/// Adds every superset of a member to a set of masks over `k` facts.
pub(crate) fn up_close(row: &mut [u64], k: usize) {
    const LOW: [u64; 6] = [
        0x5555_5555_5555_5555,
        0x3333_3333_3333_3333,
        0x0f0f_0f0f_0f0f_0f0f,
        0x00ff_00ff_00ff_00ff,
        0x0000_ffff_0000_ffff,
        0x0000_0000_ffff_ffff,
    ];
    for b in 0..k {
        if b < 6 {
            for w in row.iter_mut() {
                *w |= (*w & LOW[b]) << (1 << b);
            }
        } else {
            let step = 1usize << (b - 6);
            for w in 0..row.len() {
                if w & step == 0 {
                    row[w | step] |= row[w];
                }
            }
        }
    }
    if k < 6 {
        row[0] &= (1u64 << (1 << k)) - 1;
    }
}
