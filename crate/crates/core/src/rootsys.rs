//! Simply-laced root systems: roots, weights, Weyl reflections, special
//! subsets, microweight orbits, affine roots and A3 subsystems.
//!
//! Roots are stored as integer coefficient vectors in the simple-root basis
//! and weights as integer Dynkin labels. The Bourbaki coordinate realization
//! is kept alongside for export and as an independent route to pairings.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RootError {
    #[error("unsupported root system {0}")]
    UnsupportedType(String),
    #[error("weight {0:?} is not a microweight")]
    NotMicroweight(Vec<i64>),
    #[error("node {0} out of range")]
    BadNode(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum RootType {
    A,
    D,
    E,
}

/// Index into [`RootSystem::roots`].
pub type Root = usize;

/// A weight in Dynkin labels: `labels[i] = ⟨λ, α_{i+1}⟩`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Weight(pub Vec<i64>);

impl Weight {
    pub fn zero(rank: usize) -> Self {
        Weight(vec![0; rank])
    }

    pub fn add(&self, o: &Weight) -> Weight {
        Weight(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, o: &Weight) -> Weight {
        Weight(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> Weight {
        Weight(self.0.iter().map(|a| -a).collect())
    }

    pub fn scale(&self, c: i64) -> Weight {
        Weight(self.0.iter().map(|a| a * c).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct AffineRoot {
    pub root: Root,
    pub level: i64,
}

/// Extended Dynkin diagram data: the nodes joined to the affine node 0, the
/// node `j` joined to 0, and the microweight node `k` (1-based numbering).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtendedDiagramMarks {
    pub node0_neighbours: Vec<usize>,
    pub j: usize,
    pub k: usize,
}

#[derive(Debug)]
pub struct RootSystem {
    pub ty: RootType,
    pub rank: usize,
    /// `cartan[i][j] = ⟨α_i, α_j⟩`, symmetric for simply-laced types.
    pub cartan: Vec<Vec<i64>>,
    /// Simple-root coefficients; positive roots first, then their negatives
    /// in the same order.
    pub roots: Vec<Vec<i64>>,
    pub n_pos: usize,
    index: HashMap<Vec<i64>, Root>,
    cartan_inv: Vec<Vec<Rational64>>,
    /// Ambient coordinates of the simple roots.
    simple_coords: Vec<Vec<Rational64>>,
}

fn r(n: i64) -> Rational64 {
    Rational64::from_integer(n)
}

fn half(n: i64) -> Rational64 {
    Rational64::new(n, 2)
}

fn unit_vec(dim: usize, i: usize, c: i64) -> Vec<Rational64> {
    let mut v = vec![r(0); dim];
    v[i] = r(c);
    v
}

fn diff_vec(dim: usize, i: usize, j: usize) -> Vec<Rational64> {
    let mut v = unit_vec(dim, i, 1);
    v[j] -= r(1);
    v
}

/// Simple roots in the standard Bourbaki realization.
fn bourbaki_simple_roots(ty: RootType, rank: usize) -> Vec<Vec<Rational64>> {
    match ty {
        RootType::A => (0..rank).map(|i| diff_vec(rank + 1, i, i + 1)).collect(),
        RootType::D => {
            let mut s: Vec<_> = (0..rank - 1).map(|i| diff_vec(rank, i, i + 1)).collect();
            let mut last = unit_vec(rank, rank - 2, 1);
            last[rank - 1] = r(1);
            s.push(last);
            s
        }
        RootType::E => {
            let mut a1 = vec![half(-1); 8];
            a1[0] = half(1);
            a1[7] = half(1);
            let mut a2 = unit_vec(8, 0, 1);
            a2[1] = r(1);
            let mut s = vec![a1, a2, diff_vec(8, 1, 0)];
            for i in 2..7 {
                s.push(diff_vec(8, i, i - 1));
            }
            s.truncate(rank);
            s
        }
    }
}

pub fn dot(a: &[Rational64], b: &[Rational64]) -> Rational64 {
    a.iter().zip(b).fold(r(0), |acc, (x, y)| acc + x * y)
}

fn invert(m: &[Vec<i64>]) -> Vec<Vec<Rational64>> {
    let n = m.len();
    let mut a: Vec<Vec<Rational64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut v: Vec<Rational64> = row.iter().map(|&x| r(x)).collect();
            v.extend((0..n).map(|j| if i == j { r(1) } else { r(0) }));
            v
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !a[i][c].is_zero()).expect("Cartan matrix is invertible");
        a.swap(c, p);
        let pv = a[c][c];
        for x in a[c].iter_mut() {
            *x /= pv;
        }
        for i in 0..n {
            if i != c && !a[i][c].is_zero() {
                let f = a[i][c];
                let row_c = a[c].clone();
                for (x, y) in a[i].iter_mut().zip(row_c) {
                    *x -= f * y;
                }
            }
        }
    }
    a.into_iter().map(|row| row[n..].to_vec()).collect()
}

impl RootSystem {
    pub fn build(ty: RootType, rank: usize) -> Result<Arc<RootSystem>, RootError> {
        let ok = match ty {
            RootType::A => rank >= 1,
            RootType::D => rank >= 4,
            RootType::E => (6..=8).contains(&rank),
        };
        if !ok {
            return Err(RootError::UnsupportedType(format!("{ty:?}{rank}")));
        }
        let simple_coords = bourbaki_simple_roots(ty, rank);
        let cartan: Vec<Vec<i64>> = (0..rank)
            .map(|i| {
                (0..rank)
                    .map(|j| {
                        let d = dot(&simple_coords[i], &simple_coords[j]);
                        assert!(d.is_integer());
                        d.to_integer()
                    })
                    .collect()
            })
            .collect();

        // Positive roots layer by layer: β + α_i is a root iff the α_i-string
        // through β extends upward, i.e. r − ⟨β, α_i⟩ > 0 where r counts the
        // steps down.
        let pair = |m: &[i64], i: usize| -> i64 { m.iter().zip(&cartan).map(|(c, row)| c * row[i]).sum() };
        let mut found: BTreeSet<Vec<i64>> = BTreeSet::new();
        let mut layer: Vec<Vec<i64>> = (0..rank)
            .map(|i| {
                let mut v = vec![0; rank];
                v[i] = 1;
                v
            })
            .collect();
        while !layer.is_empty() {
            found.extend(layer.iter().cloned());
            let mut next = BTreeSet::new();
            for b in &layer {
                for i in 0..rank {
                    let mut down = 0;
                    let mut probe = b.clone();
                    loop {
                        probe[i] -= 1;
                        if found.contains(&probe) {
                            down += 1;
                        } else {
                            break;
                        }
                    }
                    if down - pair(b, i) > 0 {
                        let mut up = b.clone();
                        up[i] += 1;
                        next.insert(up);
                    }
                }
            }
            layer = next.into_iter().collect();
        }
        let mut pos: Vec<Vec<i64>> = found.into_iter().collect();
        pos.sort_by(|a, b| {
            let (ha, hb): (i64, i64) = (a.iter().sum(), b.iter().sum());
            ha.cmp(&hb).then_with(|| b.cmp(a))
        });
        let n_pos = pos.len();
        let mut roots = pos.clone();
        roots.extend(pos.iter().map(|v| v.iter().map(|x| -x).collect::<Vec<_>>()));
        let index = roots.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let cartan_inv = invert(&cartan);
        Ok(Arc::new(RootSystem { ty, rank, cartan, roots, n_pos, index, cartan_inv, simple_coords }))
    }

    /// Parse labels like `A4`, `D5`, `E7`.
    pub fn parse_label(s: &str) -> Result<(RootType, usize), RootError> {
        let bad = || RootError::UnsupportedType(s.to_string());
        let mut chars = s.trim().chars();
        let ty = match chars.next().map(|c| c.to_ascii_uppercase()) {
            Some('A') => RootType::A,
            Some('D') => RootType::D,
            Some('E') => RootType::E,
            _ => return Err(bad()),
        };
        let rank: usize = chars.as_str().parse().map_err(|_| bad())?;
        Ok((ty, rank))
    }

    pub fn label(&self) -> String {
        format!("{:?}{}", self.ty, self.rank)
    }

    pub fn num_roots(&self) -> usize {
        self.roots.len()
    }

    /// Root index of the simple root `α_i`, `i` 1-based.
    pub fn simple(&self, i: usize) -> Root {
        assert!((1..=self.rank).contains(&i), "simple root index {i} out of range");
        i - 1
    }

    pub fn neg(&self, a: Root) -> Root {
        if a < self.n_pos {
            a + self.n_pos
        } else {
            a - self.n_pos
        }
    }

    pub fn is_positive(&self, a: Root) -> bool {
        a < self.n_pos
    }

    pub fn height(&self, a: Root) -> i64 {
        self.roots[a].iter().sum()
    }

    /// Collection order: ascending height, ties by index.
    pub fn order_key(&self, a: Root) -> (i64, Root) {
        (self.height(a), a)
    }

    pub fn highest_root(&self) -> Root {
        self.n_pos - 1
    }

    /// Coefficient `m_i(α)`, `i` 1-based.
    pub fn coeff(&self, a: Root, i: usize) -> i64 {
        self.roots[a][i - 1]
    }

    pub fn find(&self, coeffs: &[i64]) -> Option<Root> {
        self.index.get(coeffs).copied()
    }

    pub fn sum(&self, a: Root, b: Root) -> Option<Root> {
        let v: Vec<i64> = self.roots[a].iter().zip(&self.roots[b]).map(|(x, y)| x + y).collect();
        self.find(&v)
    }

    pub fn diff(&self, a: Root, b: Root) -> Option<Root> {
        self.sum(a, self.neg(b))
    }

    /// `⟨α, β⟩` for roots.
    pub fn root_pairing(&self, a: Root, b: Root) -> i64 {
        let (ma, mb) = (&self.roots[a], &self.roots[b]);
        let mut s = 0;
        for i in 0..self.rank {
            if ma[i] == 0 {
                continue;
            }
            for j in 0..self.rank {
                s += ma[i] * self.cartan[i][j] * mb[j];
            }
        }
        s
    }

    /// `⟨λ, β⟩` for a weight.
    pub fn pairing(&self, w: &Weight, b: Root) -> i64 {
        w.0.iter().zip(&self.roots[b]).map(|(l, m)| l * m).sum()
    }

    /// Dynkin labels of a root.
    pub fn root_weight(&self, a: Root) -> Weight {
        Weight((0..self.rank).map(|i| self.root_pairing(a, self.simple(i + 1))).collect())
    }

    /// Fundamental weight `ϖ_i`, `i` 1-based.
    pub fn fundamental(&self, i: usize) -> Weight {
        let mut v = vec![0; self.rank];
        v[i - 1] = 1;
        Weight(v)
    }

    pub fn reflect_root(&self, a: Root, b: Root) -> Root {
        let p = self.root_pairing(b, a);
        let v: Vec<i64> = self.roots[b].iter().zip(&self.roots[a]).map(|(y, x)| y - p * x).collect();
        self.find(&v).expect("root system is reflection-closed")
    }

    pub fn reflect_weight(&self, a: Root, w: &Weight) -> Weight {
        w.sub(&self.root_weight(a).scale(self.pairing(w, a)))
    }

    /// Simple-root coordinates of a weight (exact rationals).
    pub fn weight_in_root_basis(&self, w: &Weight) -> Vec<Rational64> {
        (0..self.rank)
            .map(|i| (0..self.rank).fold(r(0), |acc, j| acc + self.cartan_inv[i][j] * r(w.0[j])))
            .collect()
    }

    /// `(λ, ρ)`, the height function used to order weights.
    pub fn weight_height(&self, w: &Weight) -> Rational64 {
        self.weight_in_root_basis(w).into_iter().fold(r(0), |a, b| a + b)
    }

    /// Inner product of two weights.
    pub fn weight_dot(&self, a: &Weight, b: &Weight) -> Rational64 {
        let ca = self.weight_in_root_basis(a);
        ca.iter().zip(&b.0).fold(r(0), |acc, (x, l)| acc + x * r(*l))
    }

    /// Ambient Bourbaki coordinates of a root.
    pub fn root_coords(&self, a: Root) -> Vec<Rational64> {
        let dim = self.simple_coords[0].len();
        let mut v = vec![r(0); dim];
        for (m, s) in self.roots[a].iter().zip(&self.simple_coords) {
            for (x, y) in v.iter_mut().zip(s) {
                *x += r(*m) * y;
            }
        }
        v
    }

    /// Ambient Bourbaki coordinates of a weight.
    pub fn weight_coords(&self, w: &Weight) -> Vec<Rational64> {
        let c = self.weight_in_root_basis(w);
        let dim = self.simple_coords[0].len();
        let mut v = vec![r(0); dim];
        for (m, s) in c.iter().zip(&self.simple_coords) {
            for (x, y) in v.iter_mut().zip(s) {
                *x += m * y;
            }
        }
        v
    }

    pub fn simple_root_coords(&self) -> &[Vec<Rational64>] {
        &self.simple_coords
    }

    /// `(Σ_k⁺, Δ_k, Σ_k⁻)` split by the sign of `m_k`, `k` 1-based.
    pub fn special_subsets(&self, k: usize) -> (Vec<Root>, Vec<Root>, Vec<Root>) {
        let (mut plus, mut delta, mut minus) = (Vec::new(), Vec::new(), Vec::new());
        for a in 0..self.num_roots() {
            match self.coeff(a, k).signum() {
                1 => plus.push(a),
                0 => delta.push(a),
                _ => minus.push(a),
            }
        }
        (plus, delta, minus)
    }

    pub fn is_microweight(&self, w: &Weight) -> bool {
        (0..self.n_pos).all(|a| (0..=1).contains(&self.pairing(w, a)))
    }

    /// W-orbit of a microweight, sorted by decreasing height (ties by labels,
    /// descending), so the orbit's highest weight comes first.
    pub fn weight_orbit(&self, w: &Weight) -> Result<Vec<Weight>, RootError> {
        if !self.is_microweight(w) {
            return Err(RootError::NotMicroweight(w.0.clone()));
        }
        let mut seen: BTreeSet<Weight> = BTreeSet::new();
        let mut queue = VecDeque::from([w.clone()]);
        seen.insert(w.clone());
        while let Some(x) = queue.pop_front() {
            for i in 1..=self.rank {
                let y = self.reflect_weight(self.simple(i), &x);
                if seen.insert(y.clone()) {
                    queue.push_back(y);
                }
            }
        }
        let mut out: Vec<Weight> = seen.into_iter().collect();
        out.sort_by(|a, b| self.weight_height(b).cmp(&self.weight_height(a)).then_with(|| b.cmp(a)));
        Ok(out)
    }

    /// `λ > μ`: the difference is a nonzero nonnegative integer combination
    /// of simple roots.
    pub fn weight_greater(&self, l: &Weight, m: &Weight) -> bool {
        let c = self.weight_in_root_basis(&l.sub(m));
        c.iter().all(|x| x.is_integer() && *x >= r(0)) && c.iter().any(|x| !x.is_zero())
    }

    /// Marks of the extended diagram for D, E6 and E7.
    pub fn extended_marks(&self) -> Result<ExtendedDiagramMarks, RootError> {
        let k = match (self.ty, self.rank) {
            (RootType::D, _) => 1,
            (RootType::E, 6) => 1,
            (RootType::E, 7) => 7,
            _ => return Err(RootError::UnsupportedType(format!("no extended marks for {}", self.label()))),
        };
        let amax = self.highest_root();
        let node0_neighbours: Vec<usize> =
            (1..=self.rank).filter(|&i| self.root_pairing(amax, self.simple(i)) != 0).collect();
        assert_eq!(node0_neighbours.len(), 1, "affine node has a single neighbour in D/E");
        debug_assert_eq!(self.coeff(amax, k), 1);
        Ok(ExtendedDiagramMarks { j: node0_neighbours[0], node0_neighbours, k })
    }

    /// Nodes joined to the affine node 0 (those with `⟨α_max, α_i⟩ ≠ 0`).
    pub fn joined_to_node0(&self, i: usize) -> bool {
        self.root_pairing(self.highest_root(), self.simple(i)) != 0
    }

    /// A3 root subsystems, each as a sorted list of its 12 roots.
    pub fn a3_subsystems(&self) -> Vec<Vec<Root>> {
        let n = self.num_roots();
        let mut found: BTreeSet<Vec<Root>> = BTreeSet::new();
        for b2 in 0..n {
            for b1 in 0..n {
                if self.root_pairing(b1, b2) != -1 {
                    continue;
                }
                for b3 in b1 + 1..n {
                    if self.root_pairing(b2, b3) != -1 || self.root_pairing(b1, b3) != 0 {
                        continue;
                    }
                    let s12 = self.sum(b1, b2).unwrap();
                    let s23 = self.sum(b2, b3).unwrap();
                    let s123 = self.sum(s12, b3).unwrap();
                    let mut set: Vec<Root> = [b1, b2, b3, s12, s23, s123].iter().flat_map(|&a| [a, self.neg(a)]).collect();
                    set.sort_unstable();
                    found.insert(set);
                }
            }
        }
        found.into_iter().collect()
    }

    /// Prenilpotency of a pair of real affine roots.
    pub fn prenilpotent(&self, a: AffineRoot, b: AffineRoot) -> bool {
        a.root != self.neg(b.root)
    }
}

impl fmt::Display for RootSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

pub fn format_rational_vec(v: &[Rational64]) -> String {
    let parts: Vec<String> = v
        .iter()
        .map(|x| if x.denom().is_one() { x.numer().to_string() } else { format!("{}/{}", x.numer(), x.denom()) })
        .collect();
    format!("({})", parts.join(", "))
}

impl PartialEq for RootSystem {
    fn eq(&self, o: &Self) -> bool {
        self.ty == o.ty && self.rank == o.rank
    }
}

impl Eq for RootSystem {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_counts() {
        for (ty, rank, n) in [(RootType::A, 2, 6), (RootType::A, 4, 20), (RootType::D, 4, 24), (RootType::D, 5, 40), (RootType::E, 6, 72), (RootType::E, 7, 126), (RootType::E, 8, 240)] {
            assert_eq!(RootSystem::build(ty, rank).unwrap().num_roots(), n);
        }
    }

    #[test]
    fn a2_pairing() {
        let rs = RootSystem::build(RootType::A, 2).unwrap();
        assert_eq!(rs.root_pairing(0, 1), -1);
        assert_eq!(rs.root_pairing(0, 0), 2);
    }

    #[test]
    fn marks() {
        let e7 = RootSystem::build(RootType::E, 7).unwrap();
        let m = e7.extended_marks().unwrap();
        assert_eq!((m.j, m.k), (1, 7));
        let e6 = RootSystem::build(RootType::E, 6).unwrap();
        let m = e6.extended_marks().unwrap();
        assert_eq!((m.j, m.k), (2, 1));
        let d5 = RootSystem::build(RootType::D, 5).unwrap();
        let m = d5.extended_marks().unwrap();
        assert_eq!((m.j, m.k), (2, 1));
        assert!(RootSystem::build(RootType::A, 3).unwrap().extended_marks().is_err());
    }

    #[test]
    fn orbit_sizes() {
        for (ty, rank, k, n) in [(RootType::A, 3, 1, 4), (RootType::D, 4, 1, 8), (RootType::D, 4, 4, 8), (RootType::E, 6, 1, 27), (RootType::E, 7, 7, 56)] {
            let rs = RootSystem::build(ty, rank).unwrap();
            assert_eq!(rs.weight_orbit(&rs.fundamental(k)).unwrap().len(), n);
        }
    }
}
