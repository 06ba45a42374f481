//! Chevalley structure constants, microweight representations and the
//! matrix-level decompositions built on them.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::ring::{Elem, Ring, RingDescriptor, RingError, RingHom};
use crate::rootsys::{Root, RootError, RootSystem, RootType, Weight};
use crate::steinberg::{word_from_coords, StWord, WordError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChevError {
    #[error(transparent)]
    Root(#[from] RootError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("matrix is not in the expected subgroup: {0}")]
    NotInSubgroup(String),
    #[error("no decomposition found: {0}")]
    NoDecomposition(String),
    #[error("unsupported ring for this decomposition: {0}")]
    UnsupportedRing(String),
}

/// Structure constants `N_{α,β}` (`[e_α, e_β] = N_{α,β} e_{α+β}`) normalized
/// by `N = +1` on extraspecial pairs, and the signs `η_{α,β}` with
/// `w_α(u)·x_β(b)·w_α(u)⁻¹ = x_{s_α β}(η_{α,β}·u^{−⟨β,α⟩}·b)`.
#[derive(Clone, Debug)]
pub struct ChevalleyBasis {
    pub rs: Arc<RootSystem>,
    n: Vec<i8>,
    eta: Vec<i8>,
}

impl ChevalleyBasis {
    pub fn build(rs: &Arc<RootSystem>) -> Arc<ChevalleyBasis> {
        let m = rs.num_roots();
        let mut memo: HashMap<(Root, Root), i64> = HashMap::new();
        let mut n = vec![0i8; m * m];
        for a in 0..m {
            for b in 0..m {
                n[a * m + b] = structure(rs, a, b, &mut memo) as i8;
            }
        }
        let mut eta = vec![0i8; m * m];
        for a in 0..m {
            for b in 0..m {
                let e = if b == a || b == rs.neg(a) {
                    -1
                } else {
                    match rs.root_pairing(b, a) {
                        0 => 1,
                        -1 => n[a * m + b] as i64,
                        1 => -(n[rs.neg(a) * m + b] as i64),
                        _ => unreachable!("simply-laced pairings"),
                    }
                };
                eta[a * m + b] = e as i8;
            }
        }
        Arc::new(ChevalleyBasis { rs: rs.clone(), n, eta })
    }

    /// `N_{α,β}`, zero when `α+β ∉ Φ`.
    pub fn n(&self, a: Root, b: Root) -> i64 {
        self.n[a * self.rs.num_roots() + b] as i64
    }

    pub fn eta(&self, a: Root, b: Root) -> i64 {
        self.eta[a * self.rs.num_roots() + b] as i64
    }

    /// The ordered pair `(ξ, η)`, `ξ ≺ η`, with `ξ + η = γ` and `ξ` minimal.
    pub fn extraspecial(&self, g: Root) -> Option<(Root, Root)> {
        extraspecial(&self.rs, g)
    }
}

fn extraspecial(rs: &RootSystem, g: Root) -> Option<(Root, Root)> {
    (0..rs.n_pos).find_map(|x| rs.diff(g, x).filter(|&y| rs.is_positive(y) && x < y).map(|y| (x, y)))
}

fn structure(rs: &RootSystem, a: Root, b: Root, memo: &mut HashMap<(Root, Root), i64>) -> i64 {
    let Some(g) = rs.sum(a, b) else { return 0 };
    if let Some(&v) = memo.get(&(a, b)) {
        return v;
    }
    let (pa, pb) = (rs.is_positive(a), rs.is_positive(b));
    let v = if pa && pb {
        if a > b {
            -structure(rs, b, a, memo)
        } else {
            let (xi, et) = extraspecial(rs, g).expect("positive sum has an extraspecial pair");
            if (a, b) == (xi, et) {
                1
            } else {
                let (nxi, net) = (rs.neg(xi), rs.neg(et));
                let mut t = 0;
                if rs.diff(b, xi).is_some() {
                    t += structure(rs, b, nxi, memo) * structure(rs, a, net, memo);
                }
                if rs.diff(a, xi).is_some() {
                    t += structure(rs, nxi, a, memo) * structure(rs, b, net, memo);
                }
                t
            }
        }
    } else if !pa && !pb {
        -structure(rs, rs.neg(a), rs.neg(b), memo)
    } else {
        // a + b + c = 0 gives N_{a,b} = N_{b,c} = N_{c,a}.
        let c = rs.neg(g);
        if rs.is_positive(b) == rs.is_positive(c) {
            structure(rs, b, c, memo)
        } else {
            structure(rs, c, a, memo)
        }
    };
    memo.insert((a, b), v);
    v
}

/// Square matrix over a ring, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupMatrix {
    pub ring: Ring,
    pub n: usize,
    pub data: Vec<Elem>,
}

impl GroupMatrix {
    pub fn identity(ring: &Ring, n: usize) -> Self {
        let mut data = vec![ring.zero(); n * n];
        for i in 0..n {
            data[i * n + i] = ring.one();
        }
        GroupMatrix { ring: ring.clone(), n, data }
    }

    pub fn diagonal(ring: &Ring, d: Vec<Elem>) -> Self {
        let n = d.len();
        let mut m = GroupMatrix { ring: ring.clone(), n, data: vec![ring.zero(); n * n] };
        for (i, x) in d.into_iter().enumerate() {
            m.data[i * n + i] = x;
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> &Elem {
        &self.data[r * self.n + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Elem) {
        self.data[r * self.n + c] = v;
    }

    pub fn mul(&self, o: &GroupMatrix) -> GroupMatrix {
        let n = self.n;
        let ring = &self.ring;
        let mut out = vec![ring.zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = &self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &o.data[k * n + j];
                    if !b.is_zero() {
                        out[i * n + j] = ring.mul_add(a, b, &out[i * n + j]);
                    }
                }
            }
        }
        GroupMatrix { ring: ring.clone(), n, data: out }
    }

    pub fn is_identity(&self) -> bool {
        self.first_difference(&GroupMatrix::identity(&self.ring, self.n)).is_none()
    }

    /// First `(row, col)` where the two matrices differ.
    pub fn first_difference(&self, o: &GroupMatrix) -> Option<(usize, usize)> {
        (0..self.n * self.n).find(|&i| self.data[i] != o.data[i]).map(|i| (i / self.n, i % self.n))
    }

    pub fn map(&self, h: &RingHom) -> Result<GroupMatrix, RingError> {
        let data = self.data.iter().map(|e| h.apply(e)).collect::<Result<Vec<_>, _>>()?;
        Ok(GroupMatrix { ring: h.target.clone(), n: self.n, data })
    }

    /// For a matrix with exactly one nonzero entry in each row and column,
    /// the map column ↦ row of that entry.
    pub fn monomial_pattern(&self) -> Option<Vec<usize>> {
        let n = self.n;
        let mut perm = vec![usize::MAX; n];
        let mut used = vec![false; n];
        for c in 0..n {
            for r in 0..n {
                if !self.get(r, c).is_zero() {
                    if perm[c] != usize::MAX || used[r] {
                        return None;
                    }
                    perm[c] = r;
                    used[r] = true;
                }
            }
            if perm[c] == usize::MAX {
                return None;
            }
        }
        Some(perm)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|r| (0..self.n).all(|c| r == c || self.get(r, c).is_zero()))
    }

    pub fn column(&self, c: usize) -> Vec<Elem> {
        (0..self.n).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn render(&self) -> Vec<Vec<String>> {
        (0..self.n).map(|r| (0..self.n).map(|c| self.ring.render(self.get(r, c))).collect()).collect()
    }
}

/// A microweight representation: one orbit block, or for type D the two
/// blocks `[ϖ_k, ϖ_other]` needed for faithfulness on the simply connected
/// group. The basis is each block's orbit in decreasing height, so `U⁺` acts
/// by upper unitriangular matrices. All structure is ring independent.
#[derive(Debug)]
pub struct MicroweightRep {
    pub rs: Arc<RootSystem>,
    pub basis: Arc<ChevalleyBasis>,
    pub k: usize,
    pub weights: Vec<Weight>,
    pub blocks: Vec<Range<usize>>,
    /// `action[α]` lists `(src, dst, s)` with `e_α v_src = s·v_dst`.
    pub action: Vec<Vec<(usize, usize, i64)>>,
    index: HashMap<(usize, Weight), usize>,
    block_of: Vec<usize>,
    /// `refl[i][idx]`: index of `s_{α_{i+1}}` applied to weight `idx`.
    refl: Vec<Vec<usize>>,
    /// For each simple root a pair `(μ, μ + α_i)` in block 0.
    simple_pair: Vec<(usize, usize)>,
    root_by_label: HashMap<Weight, Root>,
    /// Integer combinations of weights giving each fundamental weight.
    torus_combo: Vec<Vec<(usize, i64)>>,
}

impl MicroweightRep {
    pub fn new(rs: &Arc<RootSystem>, k: usize) -> Result<Arc<MicroweightRep>, ChevError> {
        if !(1..=rs.rank).contains(&k) {
            return Err(RootError::BadNode(k).into());
        }
        let hw = rs.fundamental(k);
        if !rs.is_microweight(&hw) {
            return Err(RootError::NotMicroweight(hw.0).into());
        }
        let mut highs = vec![hw];
        if rs.ty == RootType::D {
            let other = if k == 1 { rs.rank } else { 1 };
            highs.push(rs.fundamental(other));
        }
        let basis = ChevalleyBasis::build(rs);
        let m = rs.num_roots();
        let mut weights = Vec::new();
        let mut blocks = Vec::new();
        let mut index = HashMap::new();
        let mut block_of = Vec::new();
        for (b, h) in highs.iter().enumerate() {
            let orbit = rs.weight_orbit(h)?;
            let start = weights.len();
            for w in orbit {
                index.insert((b, w.clone()), weights.len());
                block_of.push(b);
                weights.push(w);
            }
            blocks.push(start..weights.len());
        }
        let dim = weights.len();
        let mut action: Vec<Vec<(usize, usize, i64)>> = vec![Vec::new(); m];
        for (b, range) in blocks.iter().enumerate() {
            // f[γ][μ] for positive γ: e_γ v_μ = f·v_{μ+γ}.
            let mut f = vec![vec![0i64; dim]; rs.n_pos];
            let find = |w: &Weight| index.get(&(b, w.clone())).copied();
            for mu in range.clone() {
                if mu == range.start {
                    continue;
                }
                let wm = &weights[mu];
                // Spanning-tree parent: v_μ = e_{−β} v_p with p = μ + β.
                let (beta, p) = (0..rs.rank)
                    .find_map(|i| find(&wm.add(&rs.root_weight(i))).map(|p| (i, p)))
                    .expect("non-top orbit weight has a parent");
                for g in 0..rs.n_pos {
                    let gw = rs.root_weight(g);
                    let Some(mg) = find(&wm.add(&gw)) else { continue };
                    let mut t = 0;
                    if find(&weights[p].add(&gw)).is_some() {
                        t += f[g][p] * f[beta][mg];
                    }
                    if g == beta {
                        t += 1;
                    }
                    if let Some(gb) = rs.diff(g, beta) {
                        t += basis.n(g, rs.neg(beta)) * f[gb][p];
                    }
                    debug_assert!(t == 1 || t == -1, "microweight action coefficient must be ±1");
                    f[g][mu] = t;
                }
            }
            for g in 0..rs.n_pos {
                let gw = rs.root_weight(g);
                for mu in range.clone() {
                    if let Some(mg) = find(&weights[mu].add(&gw)) {
                        action[g].push((mu, mg, f[g][mu]));
                        action[rs.neg(g)].push((mg, mu, f[g][mu]));
                    }
                }
            }
        }
        let refl = (1..=rs.rank)
            .map(|i| (0..dim).map(|x| index[&(block_of[x], rs.reflect_weight(rs.simple(i), &weights[x]))]).collect())
            .collect();
        let simple_pair = (0..rs.rank)
            .map(|i| {
                action[i].iter().find(|(src, _, _)| block_of[*src] == 0).map(|&(s, d, _)| (s, d)).expect("simple root acts on block 0")
            })
            .collect();
        let root_by_label = (0..m).map(|a| (rs.root_weight(a), a)).collect();
        let torus_combo = torus_combinations(&weights, rs.rank);
        Ok(Arc::new(MicroweightRep {
            rs: rs.clone(),
            basis,
            k,
            weights,
            blocks,
            action,
            index,
            block_of,
            refl,
            simple_pair,
            root_by_label,
            torus_combo,
        }))
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weight_index(&self, block: usize, w: &Weight) -> Option<usize> {
        self.index.get(&(block, w.clone())).copied()
    }

    pub fn block_of(&self, idx: usize) -> usize {
        self.block_of[idx]
    }

    /// Index of the highest weight vector `v⁺` of block 0.
    pub fn top(&self) -> usize {
        0
    }

    pub fn identity(&self, ring: &Ring) -> GroupMatrix {
        GroupMatrix::identity(ring, self.dim())
    }

    /// `ρ(x_α(a)) = 1 + a·E_α` (`E_α² = 0` on microweight modules).
    pub fn rho_x(&self, ring: &Ring, a: Root, c: &Elem) -> GroupMatrix {
        let mut m = self.identity(ring);
        self.right_mul_x(&mut m, a, c);
        m
    }

    /// `m ← m·ρ(x_α(c))`: column `src` gains `c·s·column dst`.
    pub fn right_mul_x(&self, m: &mut GroupMatrix, a: Root, c: &Elem) {
        if c.is_zero() {
            return;
        }
        let n = m.n;
        let ring = m.ring.clone();
        let negc = ring.neg(c);
        for &(src, dst, s) in &self.action[a] {
            let f = if s == 1 { c } else { &negc };
            for r in 0..n {
                let x = &m.data[r * n + dst];
                if !x.is_zero() {
                    m.data[r * n + src] = ring.mul_add(f, x, &m.data[r * n + src]);
                }
            }
        }
    }

    /// `m ← ρ(x_α(c))·m`: row `dst` gains `c·s·row src`.
    pub fn left_mul_x(&self, m: &mut GroupMatrix, a: Root, c: &Elem) {
        if c.is_zero() {
            return;
        }
        let n = m.n;
        let ring = m.ring.clone();
        let negc = ring.neg(c);
        for &(src, dst, s) in &self.action[a] {
            let f = if s == 1 { c } else { &negc };
            for col in 0..n {
                let x = &m.data[src * n + col];
                if !x.is_zero() {
                    m.data[dst * n + col] = ring.mul_add(f, x, &m.data[dst * n + col]);
                }
            }
        }
    }

    pub fn eval(&self, w: &StWord) -> GroupMatrix {
        let mut m = self.identity(&w.ring);
        self.eval_into(&mut m, w);
        m
    }

    /// `m ← m·ρ(w)`.
    pub fn eval_into(&self, m: &mut GroupMatrix, w: &StWord) {
        for l in &w.letters {
            self.right_mul_x(m, l.root, &l.coeff);
        }
    }

    /// The Lie algebra operator `E_α` with integer entries.
    pub fn lie_matrix(&self, a: Root) -> Vec<Vec<i64>> {
        let n = self.dim();
        let mut e = vec![vec![0; n]; n];
        for &(src, dst, s) in &self.action[a] {
            e[dst][src] = s;
        }
        e
    }

    /// `H_ω(u)`: diagonal with entry `u^{(ω, λ − μ₀)}`, `μ₀` the lowest
    /// weight of the block containing `λ`.
    pub fn weight_torus(&self, ring: &Ring, omega: &Weight, u: &Elem) -> Result<GroupMatrix, RingError> {
        let mut d = Vec::with_capacity(self.dim());
        for (b, range) in self.blocks.iter().enumerate() {
            let low = &self.weights[range.end - 1];
            for x in range.clone() {
                debug_assert_eq!(self.block_of[x], b);
                let coords = self.rs.weight_in_root_basis(&self.weights[x].sub(low));
                let e: i64 = coords.iter().zip(&omega.0).map(|(c, o)| c.to_integer() * o).sum();
                d.push(ring.pow(u, e)?);
            }
        }
        Ok(GroupMatrix::diagonal(ring, d))
    }

    /// `ρ(∏ h_{α_i}(t_i))`: diagonal entry `∏ t_i^{⟨λ, α_i⟩}`.
    pub fn torus_matrix(&self, ring: &Ring, t: &[Elem]) -> Result<GroupMatrix, RingError> {
        let d = self
            .weights
            .iter()
            .map(|w| {
                w.0.iter().zip(t).try_fold(ring.one(), |acc, (&e, ti)| Ok(ring.mul(&acc, &ring.pow(ti, e)?)))
            })
            .collect::<Result<Vec<_>, RingError>>()?;
        Ok(GroupMatrix::diagonal(ring, d))
    }

    /// Read `t_i` with `m = ρ(∏ h_{α_i}(t_i))` from a diagonal matrix.
    pub fn factor_torus(&self, m: &GroupMatrix) -> Result<Vec<Elem>, ChevError> {
        if !m.is_diagonal() {
            return Err(ChevError::NotInSubgroup("torus part is not diagonal".into()));
        }
        let ring = &m.ring;
        let t = self
            .torus_combo
            .iter()
            .map(|combo| {
                combo.iter().try_fold(ring.one(), |acc, &(x, e)| Ok::<_, RingError>(ring.mul(&acc, &ring.pow(m.get(x, x), e)?)))
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| ChevError::NotInSubgroup("torus entries are not units".into()))?;
        if &self.torus_matrix(ring, &t)? != m {
            return Err(ChevError::NotInSubgroup("diagonal matrix is not in the torus".into()));
        }
        Ok(t)
    }

    /// Read root coordinates of a matrix in `ρ(U(S))` by peeling factors
    /// in the given order, which must list the roots of `S` by ascending
    /// absolute height.
    pub fn peel(&self, m: &GroupMatrix, order: &[Root]) -> Result<Vec<(Root, Elem)>, ChevError> {
        let mut m = m.clone();
        let ring = m.ring.clone();
        let mut out = Vec::new();
        for &a in order {
            let &(src, dst, s) = &self.action[a][0];
            let e = m.get(dst, src).clone();
            let c = if s == 1 { e } else { ring.neg(&e) };
            if !c.is_zero() {
                self.left_mul_x(&mut m, a, &ring.neg(&c));
                out.push((a, c));
            }
        }
        if !m.is_identity() {
            return Err(ChevError::NotInSubgroup("matrix is not in the unipotent subgroup".into()));
        }
        Ok(out)
    }

    pub fn positive_order(&self) -> Vec<Root> {
        let mut v: Vec<Root> = (0..self.rs.n_pos).collect();
        v.sort_by_key(|&a| self.rs.order_key(a));
        v
    }

    /// Negative roots by ascending absolute height.
    pub fn negative_order(&self) -> Vec<Root> {
        self.positive_order().into_iter().map(|a| self.rs.neg(a)).collect()
    }

    /// Reduced word (1-based simple indices, `w = s_{j1}·s_{j2}⋯`) of the
    /// Weyl element whose action on weights is `perm` (weight index ↦ index).
    pub fn weyl_word_from_perm(&self, perm: &[usize]) -> Vec<usize> {
        let rs = &self.rs;
        let mut p = perm.to_vec();
        let mut rec = Vec::new();
        'outer: loop {
            for i in 0..rs.rank {
                let (mu, nu) = self.simple_pair[i];
                let img = self.weights[p[nu]].sub(&self.weights[p[mu]]);
                let r = self.root_by_label[&img];
                if !rs.is_positive(r) {
                    rec.push(i + 1);
                    p = (0..p.len()).map(|x| p[self.refl[i][x]]).collect();
                    continue 'outer;
                }
            }
            break;
        }
        rec.reverse();
        rec
    }

    /// Permutation of weight indices induced by `s_{j1}⋯s_{jm}`.
    pub fn weyl_perm(&self, word: &[usize]) -> Vec<usize> {
        let mut p: Vec<usize> = (0..self.dim()).collect();
        for &j in word.iter().rev() {
            p = p.iter().map(|&x| self.refl[j - 1][x]).collect();
        }
        p
    }

    /// `ẇ = ∏ w_{α_j}(1)` for a word in simple reflections.
    pub fn weyl_lift(&self, ring: &Ring, word: &[usize]) -> StWord {
        let mut w = StWord::empty(&self.rs, ring);
        for &j in word {
            w = w.concat(&StWord::w(&self.rs, ring, self.rs.simple(j), &ring.one()).expect("1 is a unit"));
        }
        w
    }

    pub fn torus_word(&self, ring: &Ring, t: &[Elem]) -> Result<StWord, WordError> {
        let mut w = StWord::empty(&self.rs, ring);
        for (i, ti) in t.iter().enumerate() {
            if !ring.is_one(ti) {
                w = w.concat(&StWord::h(&self.rs, ring, self.rs.simple(i + 1), ti)?);
            }
        }
        Ok(w)
    }

    /// Bruhat decomposition `g = u·ẇ·h·v·level` over a field or a finite
    /// local ring `ℤ/p^e`. Over a field `level = 1`; otherwise the pieces
    /// are lifts of the residue decomposition and `level ≡ 1` modulo the
    /// maximal ideal.
    pub fn bruhat(&self, g: &GroupMatrix) -> Result<Bruhat, ChevError> {
        let ring = g.ring.clone();
        let Some((p, _)) = ring.local_residue() else {
            return Err(ChevError::UnsupportedRing(ring.to_string()));
        };
        let field = RingDescriptor::integers_mod(p)?;
        let red = RingHom::reduction(&ring, &field)?;
        let gbar = g.map(&red)?;
        let (a, perm, pmat) = normalized_elimination(&gbar)?;
        let n = self.dim();
        // P = N·B with N[perm[j]][j] = P[perm[j]][j].
        let mut nmat = GroupMatrix { ring: field.clone(), n, data: vec![field.zero(); n * n] };
        let mut bmat = GroupMatrix { ring: field.clone(), n, data: vec![field.zero(); n * n] };
        for j in 0..n {
            let piv = pmat.get(perm[j], j).clone();
            let inv = field.inv(&piv).expect("pivot in a field");
            nmat.set(perm[j], j, piv);
            for c in 0..n {
                bmat.set(j, c, field.mul(&inv, pmat.get(perm[j], c)));
            }
        }
        let u = self.peel(&a, &self.positive_order())?;
        let v = self.peel(&bmat, &self.positive_order())?;
        let weyl_word = self.weyl_word_from_perm(&perm);
        let wdot = self.weyl_lift(&field, &weyl_word);
        let hmat = self.eval(&wdot.inverse()).mul(&nmat);
        let torus = self.factor_torus(&hmat)?;
        // Residues of ℤ/p^e are represented by the same integers as ℤ/p.
        let lift = |e: &Elem| e.clone();
        let u: Vec<(Root, Elem)> = u.iter().map(|(r, c)| (*r, lift(c))).collect();
        let v: Vec<(Root, Elem)> = v.iter().map(|(r, c)| (*r, lift(c))).collect();
        let torus: Vec<Elem> = torus.iter().map(lift).collect();
        let mut b = Bruhat { u, weyl_word, torus, v, level: self.identity(&ring) };
        let prefix = b.prefix_word(self, &ring)?;
        let mut level = self.eval(&prefix.inverse());
        level = level.mul(g);
        b.level = level;
        Ok(b)
    }

    /// Gauss decomposition `g = h·u⁺·u⁻·u⁺′` over a field or local ring.
    /// `u⁺′` is the identity when `g` is already in the big cell; otherwise
    /// it is searched for among random elements of `U⁺`.
    pub fn gauss<R: Rng>(&self, g: &GroupMatrix, rng: &mut R, attempts: usize) -> Result<Gauss, ChevError> {
        let ring = g.ring.clone();
        if !ring.is_finite() && !ring.is_prime_field() && ring.local_residue().is_none() {
            return Err(ChevError::UnsupportedRing(ring.to_string()));
        }
        let elements = ring.elements();
        for attempt in 0..attempts.max(1) {
            let mut uprime = Vec::new();
            if attempt > 0 {
                let els = elements.as_ref().ok_or_else(|| ChevError::UnsupportedRing(ring.to_string()))?;
                for a in self.positive_order() {
                    let c = els[rng.gen_range(0..els.len())].clone();
                    if !c.is_zero() {
                        uprime.push((a, c));
                    }
                }
            }
            let up_word = word_from_coords(&self.rs, &ring, &uprime);
            let mut mprime = g.clone();
            self.eval_into(&mut mprime, &up_word.inverse());
            if let Some((bmat, lmat)) = upper_lower(&mprime) {
                let n = self.dim();
                let diag: Vec<Elem> = (0..n).map(|i| bmat.get(i, i).clone()).collect();
                let hmat = GroupMatrix::diagonal(&ring, diag.clone());
                let Ok(torus) = self.factor_torus(&hmat) else { continue };
                let mut uplus = bmat.clone();
                for i in 0..n {
                    let inv = ring.inv(&diag[i]).expect("unit pivot");
                    for c in 0..n {
                        uplus.set(i, c, ring.mul(&inv, bmat.get(i, c)));
                    }
                }
                let (Ok(u_plus), Ok(u_minus)) = (self.peel(&uplus, &self.positive_order()), self.peel(&lmat, &self.negative_order())) else {
                    continue;
                };
                return Ok(Gauss { torus, u_plus, u_minus, u_plus2: uprime });
            }
        }
        Err(ChevError::NoDecomposition(format!("no Gauss decomposition found in {attempts} attempts")))
    }

    /// Chevalley–Matsumoto factorization `g = u⁻·stab` with
    /// `u⁻ ∈ U(Σ_k⁻)` and `stab·v⁺ ∈ (unit)·v⁺`. Needs the `v⁺`-coefficient
    /// of `g·v⁺` to be a unit.
    pub fn chevalley_matsumoto(&self, g: &GroupMatrix) -> Result<ChevalleyMatsumoto, ChevError> {
        let ring = g.ring.clone();
        let top = self.top();
        let c = g.get(top, top).clone();
        let cinv = ring.inv(&c).ok_or_else(|| ChevError::NoDecomposition("v⁺-coefficient is not a unit".into()))?;
        let (_, _, minus) = self.rs.special_subsets(self.k);
        let mut u_minus = Vec::new();
        for &b in &minus {
            // e_β v⁺ = s·v_{ϖ_k + β}.
            let &(src, dst, s) = self.action[b].iter().find(|(src, _, _)| *src == top).expect("β ∈ Σ⁻ lowers v⁺");
            debug_assert_eq!(src, top);
            let y = ring.mul(g.get(dst, top), &cinv);
            let coef = if s == 1 { y } else { ring.neg(&y) };
            if !coef.is_zero() {
                u_minus.push((b, coef));
            }
        }
        let uw = word_from_coords(&self.rs, &ring, &u_minus);
        let stab = self.eval(&uw.inverse()).mul(g);
        let col = stab.column(top);
        if col.iter().enumerate().any(|(r, e)| r != top && !e.is_zero()) {
            return Err(ChevError::NotInSubgroup("g·v⁺ is not in the U(Σ⁻)-orbit of the v⁺ line".into()));
        }
        Ok(ChevalleyMatsumoto { u_minus, stab })
    }

    /// Orthogonal roots `β_i ∈ Σ_k⁻` and units `v_i` with
    /// `ρ(∏ w_{β_i}(v_i))·v^λ = u⁻¹·v⁺`. For `λ = ϖ_k` this is `h_β(u)`,
    /// returned as the pair list `[(β, u), (β, −1)]` read as `w_β(u)·w_β(−1)`.
    pub fn w_lambda_u(&self, ring: &Ring, lambda: &Weight, u: &Elem) -> Result<Vec<(Root, Elem)>, ChevError> {
        let rs = &self.rs;
        let lidx = self.weight_index(0, lambda).ok_or_else(|| ChevError::NotInSubgroup("λ is not a weight of block 0".into()))?;
        if !ring.is_unit(u) {
            return Err(WordError::NonUnit(ring.render(u)).into());
        }
        let (_, _, minus) = rs.special_subsets(self.k);
        if lidx == self.top() {
            return Ok(vec![(minus[0], u.clone()), (minus[0], ring.from_i64(-1))]);
        }
        let target = lambda.sub(&self.weights[self.top()]);
        let combo = orthogonal_decomposition(rs, &minus, &target)
            .ok_or_else(|| ChevError::NoDecomposition("λ − ϖ_k is not a sum of orthogonal roots of Σ⁻".into()))?;
        let ones: Vec<(Root, Elem)> = combo.iter().map(|&b| (b, ring.one())).collect();
        let c = self.w_product_coefficient(ring, &ones, lidx)?;
        let mut out = ones;
        let last = out.len() - 1;
        out[last].1 = ring.mul(&c, u);
        debug_assert_eq!(
            self.w_product_coefficient(ring, &out, lidx)?,
            ring.inv(u).unwrap(),
            "w_λ(u) must send v^λ to u⁻¹·v⁺"
        );
        Ok(out)
    }

    /// Coefficient of `v⁺` in `ρ(∏ w_{β_i}(v_i))·v^λ` (must be the only entry).
    fn w_product_coefficient(&self, ring: &Ring, ws: &[(Root, Elem)], lidx: usize) -> Result<Elem, ChevError> {
        let w = self.w_product_word(ring, ws)?;
        let col = self.eval(&w).column(lidx);
        if col.iter().enumerate().any(|(r, e)| r != self.top() && !e.is_zero()) {
            return Err(ChevError::NoDecomposition("w_λ does not map v^λ to the v⁺ line".into()));
        }
        Ok(col[self.top()].clone())
    }

    pub fn w_product_word(&self, ring: &Ring, ws: &[(Root, Elem)]) -> Result<StWord, ChevError> {
        let mut w = StWord::empty(&self.rs, ring);
        for (b, v) in ws {
            w = w.concat(&StWord::w(&self.rs, ring, *b, v)?);
        }
        Ok(w)
    }

    /// `g ∈ Stab(v^λ)`: the column of `λ` is the basis vector `e_λ`.
    pub fn stabilizes(&self, g: &GroupMatrix, lidx: usize) -> bool {
        (0..g.n).all(|r| {
            let e = g.get(r, lidx);
            if r == lidx {
                g.ring.is_one(e)
            } else {
                e.is_zero()
            }
        })
    }
}

/// Smallest set of mutually orthogonal roots of `pool` summing to `target`.
fn orthogonal_decomposition(rs: &RootSystem, pool: &[Root], target: &Weight) -> Option<Vec<Root>> {
    fn go(rs: &RootSystem, pool: &[Root], start: usize, left: usize, rem: &Weight, chosen: &mut Vec<Root>) -> bool {
        if left == 0 {
            return rem.0.iter().all(|&x| x == 0);
        }
        for i in start..pool.len() {
            let b = pool[i];
            if chosen.iter().any(|&c| rs.root_pairing(b, c) != 0) {
                continue;
            }
            chosen.push(b);
            if go(rs, pool, i + 1, left - 1, &rem.sub(&rs.root_weight(b)), chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    (1..=rs.rank).find_map(|n| {
        let mut chosen = Vec::new();
        go(rs, pool, 0, n, target, &mut chosen).then_some(chosen)
    })
}

/// Integer combinations of the weight vectors equal to each unit vector,
/// by unimodular row reduction of the label matrix.
fn torus_combinations(weights: &[Weight], rank: usize) -> Vec<Vec<(usize, i64)>> {
    let nw = weights.len();
    let mut rows: Vec<(Vec<i64>, Vec<i64>)> = weights
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let mut c = vec![0; nw];
            c[i] = 1;
            (w.0.clone(), c)
        })
        .collect();
    let sub = |a: &mut (Vec<i64>, Vec<i64>), b: &(Vec<i64>, Vec<i64>), q: i64| {
        for (x, y) in a.0.iter_mut().zip(&b.0) {
            *x -= q * y;
        }
        for (x, y) in a.1.iter_mut().zip(&b.1) {
            *x -= q * y;
        }
    };
    let mut pivots: Vec<usize> = Vec::new();
    for col in 0..rank {
        let free: Vec<usize> = (0..nw).filter(|r| !pivots.contains(r)).collect();
        loop {
            let piv = free.iter().copied().filter(|&r| rows[r].0[col] != 0).min_by_key(|&r| rows[r].0[col].abs());
            let Some(piv) = piv else { panic!("weights do not span the weight lattice") };
            let mut done = true;
            for &r in &free {
                if r != piv && rows[r].0[col] != 0 {
                    let q = rows[r].0[col].div_euclid(rows[piv].0[col]);
                    let pr = rows[piv].clone();
                    sub(&mut rows[r], &pr, q);
                    if rows[r].0[col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                pivots.push(piv);
                break;
            }
        }
    }
    for col in (0..rank).rev() {
        let p = pivots[col];
        let d = rows[p].0[col];
        assert!(d.abs() == 1, "weights generate the full weight lattice");
        if d == -1 {
            rows[p].0.iter_mut().for_each(|x| *x = -*x);
            rows[p].1.iter_mut().for_each(|x| *x = -*x);
        }
        for &q in &pivots[..col] {
            let c = rows[q].0[col];
            if c != 0 {
                let pr = rows[p].clone();
                sub(&mut rows[q], &pr, c);
            }
        }
    }
    pivots
        .iter()
        .map(|&p| rows[p].1.iter().enumerate().filter(|(_, &c)| c != 0).map(|(i, &c)| (i, c)).collect())
        .collect()
}

/// Over a field: `M = A·P` with `A` upper unitriangular in
/// `U ∩ N·U⁻·N⁻¹` and `P` having distinct leading columns. Returns
/// `(A, perm, P)` where `perm[j]` is the row whose leading column is `j`.
fn normalized_elimination(m: &GroupMatrix) -> Result<(GroupMatrix, Vec<usize>, GroupMatrix), ChevError> {
    let ring = m.ring.clone();
    let n = m.n;
    let mut p = m.clone();
    let mut assigned = vec![false; n];
    let mut perm = vec![0; n];
    let mut ops: Vec<(usize, usize, Elem)> = Vec::new();
    for j in 0..n {
        let piv = (0..n).rev().find(|&i| !assigned[i] && !p.get(i, j).is_zero()).ok_or_else(|| ChevError::NotInSubgroup("singular matrix".into()))?;
        let inv = ring.inv(p.get(piv, j)).ok_or_else(|| ChevError::UnsupportedRing(ring.to_string()))?;
        for i in 0..piv {
            if assigned[i] || p.get(i, j).is_zero() {
                continue;
            }
            let c = ring.neg(&ring.mul(p.get(i, j), &inv));
            for col in 0..n {
                let x = p.get(piv, col).clone();
                if !x.is_zero() {
                    let v = ring.mul_add(&c, &x, p.get(i, col));
                    p.set(i, col, v);
                }
            }
            ops.push((i, piv, c));
        }
        assigned[piv] = true;
        perm[j] = piv;
    }
    // A⁻¹ = E_k⋯E_1, so A = E_1⁻¹⋯E_k⁻¹; E⁻¹ on the right subtracts c·col i from col piv.
    let mut a = GroupMatrix::identity(&ring, n);
    for (i, piv, c) in ops {
        for r in 0..n {
            let x = a.get(r, i).clone();
            if !x.is_zero() {
                let v = ring.sub(a.get(r, piv), &ring.mul(&c, &x));
                a.set(r, piv, v);
            }
        }
    }
    Ok((a, perm, p))
}

/// `M = B·L` with `B` upper triangular and `L` lower unitriangular, if the
/// trailing pivots are units.
fn upper_lower(m: &GroupMatrix) -> Option<(GroupMatrix, GroupMatrix)> {
    let ring = m.ring.clone();
    let n = m.n;
    let mut b = m.clone();
    // Column ops col i += c·col r (i < r) accumulate L⁻¹; track L directly
    // by applying the inverse row ops in reverse order afterwards.
    let mut ops: Vec<(usize, usize, Elem)> = Vec::new();
    for r in (0..n).rev() {
        let inv = ring.inv(b.get(r, r))?;
        for i in 0..r {
            if b.get(r, i).is_zero() {
                continue;
            }
            let c = ring.neg(&ring.mul(b.get(r, i), &inv));
            for row in 0..=r {
                let x = b.get(row, r).clone();
                if !x.is_zero() {
                    let v = ring.mul_add(&c, &x, b.get(row, i));
                    b.set(row, i, v);
                }
            }
            ops.push((r, i, c));
        }
    }
    // M·E_1⋯E_k = B with E = 1 + c·e_{r,i}; L = E_k⁻¹⋯E_1⁻¹.
    let mut l = GroupMatrix::identity(&ring, n);
    for (r, i, c) in ops.into_iter().rev() {
        // l ← l·(1 − c·e_{r,i}): column i gets −c·column r.
        for row in 0..n {
            let x = l.get(row, r).clone();
            if !x.is_zero() {
                let v = ring.sub(l.get(row, i), &ring.mul(&c, &x));
                l.set(row, i, v);
            }
        }
    }
    Some((b, l))
}

#[derive(Clone, Debug)]
pub struct Bruhat {
    pub u: Vec<(Root, Elem)>,
    pub weyl_word: Vec<usize>,
    pub torus: Vec<Elem>,
    pub v: Vec<(Root, Elem)>,
    pub level: GroupMatrix,
}

impl Bruhat {
    /// `u·ẇ·h·v` as a word.
    pub fn prefix_word(&self, rep: &MicroweightRep, ring: &Ring) -> Result<StWord, WordError> {
        Ok(word_from_coords(&rep.rs, ring, &self.u)
            .concat(&rep.weyl_lift(ring, &self.weyl_word))
            .concat(&rep.torus_word(ring, &self.torus)?)
            .concat(&word_from_coords(&rep.rs, ring, &self.v)))
    }

    pub fn reconstruct(&self, rep: &MicroweightRep) -> Result<GroupMatrix, WordError> {
        let ring = self.level.ring.clone();
        Ok(rep.eval(&self.prefix_word(rep, &ring)?).mul(&self.level))
    }
}

#[derive(Clone, Debug)]
pub struct Gauss {
    pub torus: Vec<Elem>,
    pub u_plus: Vec<(Root, Elem)>,
    pub u_minus: Vec<(Root, Elem)>,
    pub u_plus2: Vec<(Root, Elem)>,
}

impl Gauss {
    pub fn word(&self, rep: &MicroweightRep, ring: &Ring) -> Result<StWord, WordError> {
        Ok(rep
            .torus_word(ring, &self.torus)?
            .concat(&word_from_coords(&rep.rs, ring, &self.u_plus))
            .concat(&word_from_coords(&rep.rs, ring, &self.u_minus))
            .concat(&word_from_coords(&rep.rs, ring, &self.u_plus2)))
    }
}

#[derive(Clone, Debug)]
pub struct ChevalleyMatsumoto {
    pub u_minus: Vec<(Root, Elem)>,
    pub stab: GroupMatrix,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::RootType;

    fn lie_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
        let n = a.len();
        let mut c = vec![vec![0; n]; n];
        for i in 0..n {
            for k in 0..n {
                if a[i][k] != 0 {
                    for j in 0..n {
                        c[i][j] += a[i][k] * b[k][j];
                    }
                }
            }
        }
        c
    }

    fn bracket(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
        let ab = lie_mul(a, b);
        let ba = lie_mul(b, a);
        ab.iter().zip(&ba).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect()).collect()
    }

    fn check_lie(ty: RootType, rank: usize, k: usize) {
        let rs = RootSystem::build(ty, rank).unwrap();
        let rep = MicroweightRep::new(&rs, k).unwrap();
        let m = rs.num_roots();
        let e: Vec<_> = (0..m).map(|a| rep.lie_matrix(a)).collect();
        for a in 0..m {
            assert!(lie_mul(&e[a], &e[a]).iter().flatten().all(|&x| x == 0));
            for b in 0..m {
                let br = bracket(&e[a], &e[b]);
                if b == rs.neg(a) {
                    for (i, w) in rep.weights.iter().enumerate() {
                        assert_eq!(br[i][i], rs.pairing(w, a));
                    }
                    continue;
                }
                let expected: Vec<Vec<i64>> = match rs.sum(a, b) {
                    Some(s) => e[s].iter().map(|r| r.iter().map(|x| x * rep.basis.n(a, b)).collect()).collect(),
                    None => vec![vec![0; rep.dim()]; rep.dim()],
                };
                assert_eq!(br, expected, "{} bracket {a},{b}", rs.label());
            }
        }
    }

    #[test]
    fn representations_satisfy_lie_relations() {
        check_lie(RootType::A, 3, 1);
        check_lie(RootType::D, 4, 1);
        check_lie(RootType::D, 5, 5);
        check_lie(RootType::E, 6, 1);
        check_lie(RootType::E, 7, 7);
    }

    #[test]
    fn eta_matches_conjugation_in_rep() {
        let rs = RootSystem::build(RootType::D, 4).unwrap();
        let rep = MicroweightRep::new(&rs, 1).unwrap();
        let ring = RingDescriptor::integers_mod(7).unwrap();
        let u = ring.from_i64(3);
        let b = ring.from_i64(2);
        for a in 0..rs.num_roots() {
            let w = StWord::w(&rs, &ring, a, &u).unwrap();
            for beta in 0..rs.num_roots() {
                let lhs = rep.eval(&StWord::x(&rs, &ring, beta, b.clone()).conj_by(&w));
                let coef = ring.mul(&ring.mul(&ring.from_i64(rep.basis.eta(a, beta)), &ring.pow(&u, -rs.root_pairing(beta, a)).unwrap()), &b);
                let rhs = rep.rho_x(&ring, rs.reflect_root(a, beta), &coef);
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn bruhat_and_gauss_reconstruct() {
        use rand::SeedableRng;
        let rs = RootSystem::build(RootType::A, 3).unwrap();
        let rep = MicroweightRep::new(&rs, 1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for m in [5u64, 25] {
            let ring = RingDescriptor::integers_mod(m).unwrap();
            for _ in 0..20 {
                let mut w = StWord::empty(&rs, &ring);
                for _ in 0..12 {
                    w.push(rng.gen_range(0..rs.num_roots()), ring.from_i64(rng.gen_range(0..m as i64)));
                }
                let g = rep.eval(&w);
                let b = rep.bruhat(&g).unwrap();
                assert_eq!(b.reconstruct(&rep).unwrap(), g);
                let ga = rep.gauss(&g, &mut rng, 200).unwrap();
                assert_eq!(rep.eval(&ga.word(&rep, &ring).unwrap()), g);
            }
        }
    }
}
