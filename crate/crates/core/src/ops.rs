//! Sparse second-quantized operators over a [`BasisIndex`].
//!
//! Operators are stored in compressed-row form and tagged with the id of the
//! basis they were built on, so mixing operators from different bases is an
//! error rather than silent garbage.

use std::collections::BTreeMap;
use std::io::Write;

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::basis::{Atom, BasisIndex, BasisState, Mode, Orbital, Slot, Spin};
use crate::linalg::{CMatrix, C64, ONE, ZERO};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Annihilate,
    Create,
}

/// Direction of an electronic transition: `Lower` moves the electron from
/// the upper slot of the pair to the lower one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    Lower,
    Raise,
}

/// Nuclear tunnelling operators: `Lower` is σ_n (k=1 → k=0).
pub type NuclearKind = Transition;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    basis_id: u64,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseOperator {
    /// Build from `(row, col, value)` triplets. Duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(
        dim: usize,
        basis_id: u64,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Result<SparseOperator> {
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); dim];
        for (r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::IndexOutOfRange {
                    index: r.max(c),
                    dim,
                });
            }
            *rows[r].entry(c).or_insert(ZERO) += v;
        }
        Ok(Self::from_rows(dim, basis_id, rows))
    }

    fn from_rows(dim: usize, basis_id: u64, rows: Vec<BTreeMap<usize, C64>>) -> SparseOperator {
        let mut indptr = Vec::with_capacity(dim + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v != ZERO {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        SparseOperator {
            dim,
            basis_id,
            indptr,
            indices,
            values,
        }
    }

    pub fn zero(dim: usize, basis_id: u64) -> SparseOperator {
        SparseOperator {
            dim,
            basis_id,
            indptr: vec![0; dim + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(dim: usize, basis_id: u64) -> SparseOperator {
        SparseOperator {
            dim,
            basis_id,
            indptr: (0..=dim).collect(),
            indices: (0..dim).collect(),
            values: vec![ONE; dim],
        }
    }

    /// Operator defined by its action on each basis state: `f(s)` returns
    /// the image as a list of `(state, amplitude)`. Images leaving the basis
    /// are dropped (hard cutoff).
    pub fn from_action<F>(idx: &BasisIndex, f: F) -> SparseOperator
    where
        F: Fn(&BasisState) -> Vec<(BasisState, C64)>,
    {
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); idx.len()];
        for (j, s) in idx.states().iter().enumerate() {
            for (t, a) in f(s) {
                if let Some(i) = idx.find(&t) {
                    *rows[i].entry(j).or_insert(ZERO) += a;
                }
            }
        }
        Self::from_rows(idx.len(), idx.id(), rows)
    }

    /// Diagonal operator `Σ_s f(s) |s⟩⟨s|`.
    pub fn diagonal(idx: &BasisIndex, f: impl Fn(&BasisState) -> f64) -> SparseOperator {
        Self::from_action(idx, |s| vec![(*s, C64::new(f(s), 0.0))])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis_id(&self) -> u64 {
        self.basis_id
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn check_basis(&self, id: u64) -> Result<()> {
        if self.basis_id != id {
            return Err(Error::BasisMismatch {
                expected: id,
                found: self.basis_id,
            });
        }
        Ok(())
    }

    fn check_same(&self, other: &SparseOperator) -> Result<()> {
        other.check_basis(self.basis_id)?;
        if self.dim != other.dim {
            return Err(Error::Shape(format!("{} vs {}", self.dim, other.dim)));
        }
        Ok(())
    }

    /// Nonzeros of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    /// All nonzeros as `(row, col, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.row(i).find(|&(c, _)| c == j).map_or(ZERO, |(_, v)| v)
    }

    pub fn transpose(&self) -> SparseOperator {
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); self.dim];
        for (i, j, v) in self.entries() {
            rows[j].insert(i, v);
        }
        Self::from_rows(self.dim, self.basis_id, rows)
    }

    pub fn adjoint(&self) -> SparseOperator {
        let mut t = self.transpose();
        t.values.iter_mut().for_each(|v| *v = v.conj());
        t
    }

    pub fn scale(&self, c: C64) -> SparseOperator {
        if c == ZERO {
            return SparseOperator::zero(self.dim, self.basis_id);
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn scale_re(&self, c: f64) -> SparseOperator {
        self.scale(C64::new(c, 0.0))
    }

    pub fn add(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.check_same(other)?;
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); self.dim];
        for (i, j, v) in self.entries().chain(other.entries()) {
            *rows[i].entry(j).or_insert(ZERO) += v;
        }
        Ok(Self::from_rows(self.dim, self.basis_id, rows))
    }

    pub fn sub(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.add(&other.scale_re(-1.0))
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.check_same(other)?;
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); self.dim];
        for (i, row) in rows.iter_mut().enumerate() {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    *row.entry(j).or_insert(ZERO) += a * b;
                }
            }
        }
        Ok(Self::from_rows(self.dim, self.basis_id, rows))
    }

    /// Sum of operators sharing a basis; `None` on an empty list.
    pub fn sum<'a>(ops: impl IntoIterator<Item = &'a SparseOperator>) -> Result<Option<SparseOperator>> {
        let mut acc: Option<SparseOperator> = None;
        for op in ops {
            acc = Some(match acc {
                None => op.clone(),
                Some(a) => a.add(op)?,
            });
        }
        Ok(acc)
    }

    pub fn apply(&self, v: &ArrayView1<C64>) -> Result<Array1<C64>> {
        if v.len() != self.dim {
            return Err(Error::Shape(format!("vector of length {} vs operator {}", v.len(), self.dim)));
        }
        Ok(Array1::from_iter(
            (0..self.dim).map(|i| self.row(i).map(|(j, a)| a * v[j]).sum::<C64>()),
        ))
    }

    /// `self · m` for a dense square `m`.
    pub fn mul_dense(&self, m: &ArrayView2<C64>) -> Result<CMatrix> {
        self.check_dense(m)?;
        let n = m.ncols();
        let mut out = CMatrix::zeros((self.dim, n));
        for i in 0..self.dim {
            for (k, a) in self.row(i) {
                let src = m.row(k);
                out.row_mut(i).zip_mut_with(&src, |o, s| *o += a * s);
            }
        }
        Ok(out)
    }

    /// `m · self` for a dense square `m`.
    pub fn dense_mul(&self, m: &ArrayView2<C64>) -> Result<CMatrix> {
        self.check_dense(m)?;
        let mut out = CMatrix::zeros((m.nrows(), self.dim));
        for (k, j, a) in self.entries() {
            let src = m.column(k);
            out.column_mut(j).zip_mut_with(&src, |o, s| *o += s * a);
        }
        Ok(out)
    }

    /// `A ρ A†`.
    pub fn sandwich(&self, rho: &ArrayView2<C64>) -> Result<CMatrix> {
        let left = self.mul_dense(rho)?;
        self.adjoint().dense_mul(&left.view())
    }

    /// The dense matrix `A ρ A†` used by the dissipator; alias kept for the
    /// operator-algebra vocabulary.
    pub fn apply_to_matrix(&self, rho: &ArrayView2<C64>) -> Result<CMatrix> {
        self.sandwich(rho)
    }

    fn check_dense(&self, m: &ArrayView2<C64>) -> Result<()> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::Shape(format!(
                "{}x{} matrix vs operator of dimension {}",
                m.nrows(),
                m.ncols(),
                self.dim
            )));
        }
        Ok(())
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut out = CMatrix::zeros((self.dim, self.dim));
        for (i, j, v) in self.entries() {
            out[[i, j]] = v;
        }
        out
    }

    /// Restrict an operator built over `full` to the sub-basis `sub`,
    /// discarding matrix elements that leave it.
    pub fn restrict(&self, full: &BasisIndex, sub: &BasisIndex) -> Result<SparseOperator> {
        self.check_basis(full.id())?;
        let map: Vec<Option<usize>> = full.states().iter().map(|s| sub.find(s)).collect();
        let triplets = self.entries().filter_map(|(i, j, v)| Some((map[i]?, map[j]?, v)));
        SparseOperator::from_triplets(sub.len(), sub.id(), triplets)
    }

    /// Restriction to an arbitrary ordered list of positions; the result is
    /// tagged with `basis_id`.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize], basis_id: u64) -> Result<SparseOperator> {
        if rows.len() != cols.len() {
            return Err(Error::Shape("submatrix must be square".into()));
        }
        let mut col_pos = vec![usize::MAX; self.dim];
        for (p, &c) in cols.iter().enumerate() {
            col_pos[c] = p;
        }
        let mut triplets = Vec::new();
        for (p, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                if col_pos[c] != usize::MAX {
                    triplets.push((p, col_pos[c], v));
                }
            }
        }
        SparseOperator::from_triplets(rows.len(), basis_id, triplets)
    }

    /// Write the documented triplet format: one `row col re im` line per
    /// nonzero, preceded by a `# dim nnz basis_id` header.
    pub fn write_triplets(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "# {} {} {:#x}", self.dim, self.nnz(), self.basis_id)?;
        for (i, j, v) in self.entries() {
            writeln!(w, "{i} {j} {:e} {:e}", v.re, v.im)?;
        }
        Ok(())
    }
}

fn ladder_amp(n: u8) -> C64 {
    C64::new((n as f64).sqrt(), 0.0)
}

/// Photon annihilation or creation on one mode.
pub fn photon_op(mode: Mode, kind: Ladder, idx: &BasisIndex) -> SparseOperator {
    let m = mode.index();
    SparseOperator::from_action(idx, |s| {
        let p = s.photons[m];
        match kind {
            Ladder::Annihilate if p > 0 => vec![(s.with_photon(mode, p - 1), ladder_amp(p))],
            Ladder::Create if p < idx.spec().photon_max[m] => {
                vec![(s.with_photon(mode, p + 1), ladder_amp(p + 1))]
            }
            _ => vec![],
        }
    })
}

/// Photon number operator `a†a` of one mode (diagonal, exact integers).
pub fn photon_number(mode: Mode, idx: &BasisIndex) -> SparseOperator {
    SparseOperator::diagonal(idx, |s| s.photon(mode) as f64)
}

/// Move one electron from `upper` to `lower` (or back), Pauli-blocked.
fn hop(upper: Slot, lower: Slot, kind: Transition, idx: &BasisIndex) -> SparseOperator {
    let (from, to) = match kind {
        Transition::Lower => (upper, lower),
        Transition::Raise => (lower, upper),
    };
    SparseOperator::from_action(idx, |s| {
        if s.occupied(from) && !s.occupied(to) {
            vec![(s.with_slot(from, false).with_slot(to, true), ONE)]
        } else {
            vec![]
        }
    })
}

/// σ_ω (Φ₁ → Φ₀) or σ_ω† for one spin, in the molecular-slot encoding.
pub fn molecular_transition(spin: Spin, kind: Transition, idx: &BasisIndex) -> SparseOperator {
    hop(Slot::antibonding(spin), Slot::bonding(spin), kind, idx)
}

/// σ_{Ω,i} (or₀ → or₋₁) or its adjoint on atom `i` for one spin.
pub fn atomic_transition(atom: Atom, spin: Spin, kind: Transition, idx: &BasisIndex) -> SparseOperator {
    hop(
        Slot::new(atom, Orbital::Excited, spin),
        Slot::new(atom, Orbital::Ground, spin),
        kind,
        idx,
    )
}

/// σ_{Ωˢ,i}: ↑ → ↓ flip on atom `i`, summed over both orbitals.
pub fn spin_transition(atom: Atom, kind: Transition, idx: &BasisIndex) -> SparseOperator {
    let branch = |orb| {
        hop(
            Slot::new(atom, orb, Spin::Up),
            Slot::new(atom, orb, Spin::Down),
            kind,
            idx,
        )
    };
    branch(Orbital::Excited)
        .add(&branch(Orbital::Ground))
        .expect("branches share a basis")
}

/// σ_n (k=1 → k=0) or σ_n†.
pub fn nuclear_op(kind: NuclearKind, idx: &BasisIndex) -> SparseOperator {
    let (from, to) = match kind {
        Transition::Lower => (1, 0),
        Transition::Raise => (0, 1),
    };
    SparseOperator::from_action(idx, |s| {
        if s.nucleus == from {
            vec![(s.with_nucleus(to), ONE)]
        } else {
            vec![]
        }
    })
}

/// Projector onto a nuclear sector.
pub fn nuclear_projector(k: u8, idx: &BasisIndex) -> SparseOperator {
    SparseOperator::diagonal(idx, |s| if s.nucleus == k { 1.0 } else { 0.0 })
}

/// Annihilation operator of a lone truncated bosonic mode with levels
/// `0..=n_max`, outside any configuration basis (`basis_id` 0).
pub fn single_mode_ladder(n_max: usize, kind: Ladder) -> SparseOperator {
    let triplets = (1..=n_max).map(|p| {
        let a = C64::new((p as f64).sqrt(), 0.0);
        match kind {
            Ladder::Annihilate => (p - 1, p, a),
            Ladder::Create => (p, p - 1, a),
        }
    });
    SparseOperator::from_triplets(n_max + 1, 0, triplets).expect("indices in range")
}
