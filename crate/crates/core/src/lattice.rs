//! Periodic rings and tori.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::MAX_SITES;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    Ring(usize),
    Torus(usize, usize),
}

/// Sites, nearest-neighbour edges and the wrapped graph distance.
///
/// Torus sites are row-major: site `x + Lx * y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    kind: LatticeKind,
    edges: Vec<(usize, usize)>,
}

impl Lattice {
    pub fn new(kind: LatticeKind) -> Result<Self> {
        let edges = match kind {
            LatticeKind::Ring(n) => {
                ensure!(n >= 3, Input, "a ring needs at least 3 sites, got {n}");
                ensure!(n <= MAX_SITES, Resource, "{n} sites exceeds the {MAX_SITES}-site limit");
                (0..n).map(|i| (i, (i + 1) % n)).collect()
            }
            LatticeKind::Torus(lx, ly) => {
                ensure!(lx >= 3 && ly >= 3, Input, "a torus needs Lx, Ly >= 3, got {lx}x{ly}");
                ensure!(lx * ly <= MAX_SITES, Resource, "{} sites exceeds the {MAX_SITES}-site limit", lx * ly);
                let mut e = Vec::with_capacity(2 * lx * ly);
                for y in 0..ly {
                    for x in 0..lx {
                        let s = x + lx * y;
                        e.push((s, (x + 1) % lx + lx * y));
                        e.push((s, x + lx * ((y + 1) % ly)));
                    }
                }
                e
            }
        };
        Ok(Self { kind, edges })
    }

    pub fn ring(n: usize) -> Result<Self> {
        Self::new(LatticeKind::Ring(n))
    }

    pub fn torus(lx: usize, ly: usize) -> Result<Self> {
        Self::new(LatticeKind::Torus(lx, ly))
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn n_sites(&self) -> usize {
        match self.kind {
            LatticeKind::Ring(n) => n,
            LatticeKind::Torus(lx, ly) => lx * ly,
        }
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        match self.kind {
            LatticeKind::Ring(_) => (site, 0),
            LatticeKind::Torus(lx, _) => (site % lx, site / lx),
        }
    }

    /// Shortest-path length on the periodic lattice graph.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        fn wrap(d: usize, l: usize) -> usize {
            d.min(l - d)
        }
        match self.kind {
            LatticeKind::Ring(n) => wrap(a.abs_diff(b), n),
            LatticeKind::Torus(lx, ly) => {
                let (xa, ya) = self.coords(a);
                let (xb, yb) = self.coords(b);
                wrap(xa.abs_diff(xb), lx) + wrap(ya.abs_diff(yb), ly)
            }
        }
    }

    /// Two-colouring parity of a site (`x + y` mod 2).
    pub fn sublattice(&self, site: usize) -> usize {
        let (x, y) = self.coords(site);
        (x + y) % 2
    }

    pub fn is_bipartite(&self) -> bool {
        match self.kind {
            LatticeKind::Ring(n) => n % 2 == 0,
            LatticeKind::Torus(lx, ly) => lx % 2 == 0 && ly % 2 == 0,
        }
    }
}
