//! Concrete fibers of tensor bundles over R^m.
//!
//! A fiber stores projected tensors through their components at
//! *representative index tuples*: weakly increasing tuples inside symmetric
//! factors, strictly increasing inside alternating ones. For alternating
//! powers this is the determinant convention (`dx1 ∧ dx2` has full components
//! ±1, storage component 1). Trace-free bundles keep the ambient
//! `Λ^k T* ⊗ T` storage and carry the contraction, its section, and a
//! canonical kernel basis explicitly; true coordinates on the kernel are read
//! off at the free columns of the contraction's echelon form.
//!
//! Index entries are 0-based internally; display is 1-based.

use num_traits::Zero;
use std::collections::BTreeMap;

use crate::bundle::{BundleSpec, GroupKind, Variance};
use crate::error::{Error, Result};
use crate::rational::{rat, Rational};

#[derive(Clone, Debug)]
pub struct Fiber {
    bundle: BundleSpec,
    m: usize,
    tuples: Vec<Vec<usize>>,
    index: BTreeMap<Vec<usize>, usize>,
    trace: Option<TraceFreeData>,
}

/// Contraction data for `C^k` inside `Λ^k T* ⊗ T`.
#[derive(Clone, Debug)]
pub struct TraceFreeData {
    /// Contraction to the `Λ^(k-1) T*` fiber, rows indexed by its storage.
    pub contraction: Vec<Vec<Rational>>,
    /// Section of the contraction (wedging against the identity tensor).
    pub inclusion: Vec<Vec<Rational>>,
    /// Canonical kernel basis; `kernel[j]` is a storage vector.
    pub kernel: Vec<Vec<Rational>>,
    /// Storage positions at which kernel coordinates can be read directly.
    pub free_cols: Vec<usize>,
}

impl Fiber {
    pub fn new(bundle: &BundleSpec, m: usize) -> Result<Fiber> {
        let mut tf_degree = None;
        if bundle.is_trace_free() {
            tf_degree = Some(bundle.vector_valued_form_degree().ok_or_else(|| {
                Error::InvalidBundle("trace-free flag on a non vector-valued-form shape".into())
            })?);
        }
        let tuples = enumerate_storage_tuples(bundle, m);
        let index = tuples
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let mut fiber = Fiber { bundle: bundle.clone(), m, tuples, index, trace: None };
        // for k > m the ambient bundle is already zero, so there is nothing
        // to split off and no trace data to build
        if tf_degree.map_or(false, |k| k <= m) {
            fiber.trace = Some(fiber.build_trace_data()?);
        }
        Ok(fiber)
    }

    pub fn bundle(&self) -> &BundleSpec {
        &self.bundle
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Length of component arrays (ambient storage for trace-free bundles).
    pub fn storage_dim(&self) -> usize {
        self.tuples.len()
    }

    /// True fiber dimension after all projections.
    pub fn dim(&self) -> usize {
        match &self.trace {
            Some(t) => t.kernel.len(),
            None => self.tuples.len(),
        }
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn tuple(&self, i: usize) -> &[usize] {
        &self.tuples[i]
    }

    pub fn tuple_index(&self, t: &[usize]) -> Option<usize> {
        self.index.get(t).copied()
    }

    pub fn trace_data(&self) -> Option<&TraceFreeData> {
        self.trace.as_ref()
    }

    pub fn zero_vec(&self) -> Vec<Rational> {
        vec![rat(0); self.storage_dim()]
    }

    /// Representative tuple of an arbitrary slot assignment, with the
    /// alternation sign. `None` when an alternating factor repeats an index.
    pub fn rep_with_sign(&self, full: &[usize]) -> Option<(usize, i64)> {
        let mut rep = Vec::with_capacity(full.len());
        let mut sign = 1i64;
        let mut offset = 0;
        for f in self.bundle.factors() {
            let block = &full[offset..offset + f.arity];
            offset += f.arity;
            let mut sorted: Vec<usize> = block.to_vec();
            match f.kind {
                GroupKind::Symmetric => sorted.sort_unstable(),
                GroupKind::Alternating => {
                    let s = sort_count_sign(&mut sorted)?;
                    sign *= s;
                }
            }
            rep.extend(sorted);
        }
        self.index.get(&rep).map(|&i| (i, sign))
    }

    /// Expands storage components to the full `m^slots` tensor array, indexed
    /// by mixed-radix slot tuples.
    pub fn include(&self, storage: &[Rational]) -> Vec<Rational> {
        let slots = self.bundle.total_slots();
        let total = self.m.pow(slots as u32);
        let mut out = vec![rat(0); total];
        let mut tuple = vec![0usize; slots];
        for flat in 0..total {
            decode_tuple(flat, self.m, &mut tuple);
            if let Some((idx, sign)) = self.rep_with_sign(&tuple) {
                if !storage[idx].is_zero() {
                    out[flat] = storage[idx].clone() * rat(sign);
                }
            }
        }
        out
    }

    /// Applies the full projector (group averaging, then the trace-free
    /// correction) to a raw tensor array and returns storage components.
    pub fn project(&self, full: &[Rational]) -> Result<Vec<Rational>> {
        let slots = self.bundle.total_slots();
        let expected = self.m.pow(slots as u32);
        if full.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: full.len() });
        }
        let mut storage = self.zero_vec();
        for (i, t) in self.tuples.iter().enumerate() {
            storage[i] = self.group_average_at(full, t);
        }
        Ok(self.project_storage(&storage))
    }

    /// Value of the group-averaging projector at one tuple.
    fn group_average_at(&self, full: &[Rational], tuple: &[usize]) -> Rational {
        let mut blocks: Vec<Vec<(Vec<usize>, i64)>> = Vec::new();
        let mut offset = 0;
        for f in self.bundle.factors() {
            let block = tuple[offset..offset + f.arity].to_vec();
            offset += f.arity;
            blocks.push(permutations_with_sign(&block, f.kind));
        }
        let mut acc = rat(0);
        let mut total_perms = 1usize;
        for b in &blocks {
            total_perms *= b.len().max(1);
        }
        let mut assignment: Vec<usize> = vec![0; blocks.len()];
        loop {
            let mut flat_tuple = Vec::with_capacity(tuple.len());
            let mut sign = 1i64;
            for (bi, b) in blocks.iter().enumerate() {
                let (perm, s) = &b[assignment[bi]];
                flat_tuple.extend(perm.iter().copied());
                sign *= s;
            }
            let flat = encode_tuple(&flat_tuple, self.m);
            if !full[flat].is_zero() {
                acc += full[flat].clone() * rat(sign);
            }
            // advance mixed-radix assignment
            let mut bi = 0;
            loop {
                if bi == blocks.len() {
                    let norm = rat(total_perms as i64);
                    return acc / norm;
                }
                assignment[bi] += 1;
                if assignment[bi] < blocks[bi].len() {
                    break;
                }
                assignment[bi] = 0;
                bi += 1;
            }
        }
    }

    /// Trace-free correction on storage coordinates (identity otherwise).
    pub fn project_storage(&self, storage: &[Rational]) -> Vec<Rational> {
        match &self.trace {
            None => storage.to_vec(),
            Some(t) => {
                let traced = mat_vec(&t.contraction, storage);
                let back = mat_vec(&t.inclusion, &traced);
                storage
                    .iter()
                    .zip(back)
                    .map(|(s, b)| s.clone() - b)
                    .collect()
            }
        }
    }

    /// Coordinates of a storage vector with respect to the true fiber basis.
    /// For trace-free bundles the vector must lie in the contraction kernel.
    pub fn storage_to_coords(&self, storage: &[Rational]) -> Vec<Rational> {
        match &self.trace {
            None => storage.to_vec(),
            Some(t) => t.free_cols.iter().map(|&c| storage[c].clone()).collect(),
        }
    }

    /// Inverse of [`storage_to_coords`] on the true fiber.
    pub fn coords_to_storage(&self, coords: &[Rational]) -> Vec<Rational> {
        match &self.trace {
            None => coords.to_vec(),
            Some(t) => {
                let mut out = self.zero_vec();
                for (j, c) in coords.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    for (i, b) in t.kernel[j].iter().enumerate() {
                        if !b.is_zero() {
                            out[i] += c * b;
                        }
                    }
                }
                out
            }
        }
    }

    /// Matrix of the derived gl(m) action of the elementary matrix `E_{j,l}`
    /// (`E e_l = e_j`) on storage coordinates: `+E` on upper slots, minus the
    /// contragredient on lower slots. Preserves the trace-free subspace.
    pub fn gl_matrix(&self, j: usize, l: usize) -> Vec<Vec<Rational>> {
        let n = self.storage_dim();
        let mut mat = vec![vec![rat(0); n]; n];
        let variances = self.bundle.slot_variances();
        // Row-based: (G v)_τ reads the included input at slot-substituted
        // tuples, which counts repeated symmetric indices correctly.
        for (row, tuple) in self.tuples.iter().enumerate() {
            for (slot, &entry) in tuple.iter().enumerate() {
                match variances[slot] {
                    Variance::Upper => {
                        // (E v)^{..j..} picks up v^{..l..}
                        if entry == j {
                            let mut t = tuple.clone();
                            t[slot] = l;
                            if let Some((col, sign)) = self.rep_with_sign(&t) {
                                mat[row][col] += rat(sign);
                            }
                        }
                    }
                    Variance::Lower => {
                        if entry == l {
                            let mut t = tuple.clone();
                            t[slot] = j;
                            if let Some((col, sign)) = self.rep_with_sign(&t) {
                                mat[row][col] -= rat(sign);
                            }
                        }
                    }
                }
            }
        }
        mat
    }

    fn build_trace_data(&self) -> Result<TraceFreeData> {
        let k = self.bundle.vector_valued_form_degree().unwrap();
        let m = self.m;
        let target = Fiber::new(&BundleSpec::forms(k - 1), m)?;
        let rows = target.storage_dim();
        let cols = self.storage_dim();
        // contraction(s)_J = c_k * sum_a sgn((a,J) -> sorted) s^{(sorted, a)}
        let c_k = Rational::new(
            num_bigint::BigInt::from(if k % 2 == 1 { 1 } else { -1 }),
            num_bigint::BigInt::from((m - k + 1) as i64),
        );
        let mut contraction = vec![vec![rat(0); cols]; rows];
        for (row, j_tuple) in target.tuples().iter().enumerate() {
            for a in 0..m {
                if j_tuple.contains(&a) {
                    continue;
                }
                let mut ins: Vec<usize> = Vec::with_capacity(k + 1);
                ins.push(a);
                ins.extend(j_tuple.iter().copied());
                let mut sorted = ins.clone();
                let sign = match sort_count_sign(&mut sorted) {
                    Some(s) => s,
                    None => continue,
                };
                let mut full = sorted;
                full.push(a);
                if let Some(&col) = self.index.get(&full) {
                    contraction[row][col] += c_k.clone() * rat(sign);
                }
            }
        }
        // inclusion(f)^{(I,a)} = sgn((I\a, a) -> I) f_{I\a} for a in I
        let mut inclusion = vec![vec![rat(0); rows]; cols];
        for (col_row, tuple) in self.tuples.iter().enumerate() {
            let (i_part, a) = (&tuple[..k], tuple[k]);
            if !i_part.contains(&a) {
                continue;
            }
            let rest: Vec<usize> = i_part.iter().copied().filter(|&x| x != a).collect();
            let mut arranged = rest.clone();
            arranged.push(a);
            let mut sorted = arranged.clone();
            let sign = sort_count_sign(&mut sorted).unwrap();
            debug_assert_eq!(sorted, i_part);
            if let Some(&r) = target.index.get(&rest) {
                inclusion[col_row][r] += rat(sign);
            }
        }
        // Sanity: the contraction splits, contraction * inclusion = identity.
        for i in 0..rows {
            for j in 0..rows {
                let mut acc = rat(0);
                for c in 0..cols {
                    acc += contraction[i][c].clone() * inclusion[c][j].clone();
                }
                let expect = if i == j { rat(1) } else { rat(0) };
                debug_assert_eq!(acc, expect, "contraction section failed at ({i},{j})");
                let _ = (acc, expect);
            }
        }
        let (kernel, free_cols) = kernel_basis(&contraction, cols);
        Ok(TraceFreeData { contraction, inclusion, kernel, free_cols })
    }
}

/// Dense nullspace with canonical reduced-echelon structure: basis vector `j`
/// has entry 1 at `free_cols[j]` and 0 at every other free column.
fn kernel_basis(mat: &[Vec<Rational>], cols: usize) -> (Vec<Vec<Rational>>, Vec<usize>) {
    let mut rref: Vec<Vec<Rational>> = mat.to_vec();
    let rows = rref.len();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; cols];
    let mut r = 0;
    for c in 0..cols {
        if r >= rows {
            break;
        }
        let pivot_row = (r..rows).find(|&i| !rref[i][c].is_zero());
        let Some(p) = pivot_row else { continue };
        rref.swap(r, p);
        let inv = rref[r][c].clone();
        for x in rref[r].iter_mut() {
            *x = x.clone() / inv.clone();
        }
        for i in 0..rows {
            if i != r && !rref[i][c].is_zero() {
                let f = rref[i][c].clone();
                for cc in 0..cols {
                    let sub = rref[r][cc].clone() * f.clone();
                    rref[i][cc] -= sub;
                }
            }
        }
        pivot_of_col[c] = Some(r);
        r += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|&c| pivot_of_col[c].is_none()).collect();
    let mut basis = Vec::with_capacity(free.len());
    for &fc in &free {
        let mut v = vec![rat(0); cols];
        v[fc] = rat(1);
        for c in 0..cols {
            if let Some(pr) = pivot_of_col[c] {
                v[c] = -rref[pr][fc].clone();
            }
        }
        basis.push(v);
    }
    (basis, free)
}

fn mat_vec(mat: &[Vec<Rational>], v: &[Rational]) -> Vec<Rational> {
    mat.iter()
        .map(|row| {
            let mut acc = rat(0);
            for (a, b) in row.iter().zip(v) {
                if !a.is_zero() && !b.is_zero() {
                    acc += a * b;
                }
            }
            acc
        })
        .collect()
}

fn sort_count_sign(v: &mut [usize]) -> Option<i64> {
    // insertion sort, counting swaps; None on duplicates
    let mut sign = 1i64;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
        if j > 0 && v[j - 1] == v[j] {
            return None;
        }
    }
    Some(sign)
}

fn decode_tuple(mut flat: usize, m: usize, out: &mut [usize]) {
    for slot in (0..out.len()).rev() {
        out[slot] = flat % m;
        flat /= m;
    }
}

fn encode_tuple(tuple: &[usize], m: usize) -> usize {
    let mut flat = 0;
    for &t in tuple {
        flat = flat * m + t;
    }
    flat
}

fn permutations_with_sign(block: &[usize], kind: GroupKind) -> Vec<(Vec<usize>, i64)> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..block.len()).collect();
    loop {
        let arranged: Vec<usize> = perm.iter().map(|&i| block[i]).collect();
        let sign = match kind {
            GroupKind::Symmetric => 1,
            GroupKind::Alternating => permutation_sign(&perm),
        };
        out.push((arranged, sign));
        if !next_permutation(&mut perm) {
            break;
        }
    }
    if out.is_empty() {
        out.push((vec![], 1));
    }
    out
}

fn permutation_sign(perm: &[usize]) -> i64 {
    let mut sign = 1i64;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                sign = -sign;
            }
        }
    }
    sign
}

fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

fn enumerate_storage_tuples(bundle: &BundleSpec, m: usize) -> Vec<Vec<usize>> {
    let mut per_factor: Vec<Vec<Vec<usize>>> = Vec::new();
    for f in bundle.factors() {
        let tuples = match f.kind {
            GroupKind::Symmetric => weakly_increasing(m, f.arity),
            GroupKind::Alternating => strictly_increasing(m, f.arity),
        };
        per_factor.push(tuples);
    }
    let mut out: Vec<Vec<usize>> = vec![vec![]];
    for tuples in &per_factor {
        let mut next = Vec::with_capacity(out.len() * tuples.len());
        for prefix in &out {
            for t in tuples {
                let mut combined = prefix.clone();
                combined.extend(t.iter().copied());
                next.push(combined);
            }
        }
        out = next;
    }
    out
}

fn weakly_increasing(m: usize, arity: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(arity);
    fn rec(m: usize, arity: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == arity {
            out.push(current.clone());
            return;
        }
        for v in start..m {
            current.push(v);
            rec(m, arity, v, current, out);
            current.pop();
        }
    }
    rec(m, arity, 0, &mut current, &mut out);
    out
}

fn strictly_increasing(m: usize, arity: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(arity);
    fn rec(m: usize, arity: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == arity {
            out.push(current.clone());
            return;
        }
        for v in start..m {
            current.push(v);
            rec(m, arity, v + 1, current, out);
            current.pop();
        }
    }
    rec(m, arity, 0, &mut current, &mut out);
    out
}

/// A fiberwise bilinear operation, stored as a sparse 3-tensor of structure
/// constants: `out[o] += coeff * a[i] * b[j]` for each entry `(o, i, j, coeff)`.
#[derive(Clone, Debug)]
pub struct BilinearFiberMap {
    pub out_dim: usize,
    pub entries: Vec<(usize, usize, usize, Rational)>,
}

impl BilinearFiberMap {
    pub fn apply(&self, a: &[Rational], b: &[Rational]) -> Vec<Rational> {
        let mut out = vec![rat(0); self.out_dim];
        for (o, i, j, c) in &self.entries {
            if !a[*i].is_zero() && !b[*j].is_zero() {
                out[*o] += c * &a[*i] * &b[*j];
            }
        }
        out
    }
}

/// Wedge of exterior forms (or multivectors) in storage coordinates:
/// the shuffle formula of the determinant convention.
pub fn wedge_map(a: &Fiber, b: &Fiber, out: &Fiber) -> Result<BilinearFiberMap> {
    let (va, ka) = a
        .bundle()
        .as_alt_power()
        .ok_or_else(|| Error::NotAFormBundle(a.bundle().to_string()))?;
    let (vb, kb) = b
        .bundle()
        .as_alt_power()
        .ok_or_else(|| Error::NotAFormBundle(b.bundle().to_string()))?;
    let (vo, ko) = out
        .bundle()
        .as_alt_power()
        .ok_or_else(|| Error::NotAFormBundle(out.bundle().to_string()))?;
    if ka > 0 && kb > 0 && va != vb {
        return Err(Error::BundleMismatch("wedge of mixed variance".into()));
    }
    if ko != ka + kb || (ko > 0 && ka > 0 && vo != va) || (ko > 0 && kb > 0 && vo != vb) {
        return Err(Error::BundleMismatch(format!(
            "wedge target {} does not match {} ∧ {}",
            out.bundle(),
            a.bundle(),
            b.bundle()
        )));
    }
    let mut entries = Vec::new();
    for (ia, ta) in a.tuples().iter().enumerate() {
        for (ib, tb) in b.tuples().iter().enumerate() {
            let mut joined: Vec<usize> = ta.iter().chain(tb.iter()).copied().collect();
            let sign = match sort_count_sign(&mut joined) {
                Some(s) => s,
                None => continue,
            };
            if let Some(io) = out.tuple_index(&joined) {
                entries.push((io, ia, ib, rat(sign)));
            }
        }
    }
    Ok(BilinearFiberMap { out_dim: out.storage_dim(), entries })
}

/// Insertion of a vector into the first slot of a form:
/// `(i_X ω)_J = Σ_a X^a ω_{(a,J)}`.
pub fn insertion_map(form: &Fiber, out: &Fiber) -> Result<BilinearFiberMap> {
    let (v, k) = form
        .bundle()
        .as_alt_power()
        .ok_or_else(|| Error::NotAFormBundle(form.bundle().to_string()))?;
    if v != Variance::Lower || k == 0 {
        return Err(Error::NotAFormBundle(format!(
            "insertion needs a form of positive degree, got {}",
            form.bundle()
        )));
    }
    let mut entries = Vec::new();
    for (ij, tj) in out.tuples().iter().enumerate() {
        for a in 0..form.m() {
            let mut ins = Vec::with_capacity(k);
            ins.push(a);
            ins.extend(tj.iter().copied());
            let mut sorted = ins.clone();
            let sign = match sort_count_sign(&mut sorted) {
                Some(s) => s,
                None => continue,
            };
            if let Some(iform) = form.tuple_index(&sorted) {
                // argument order: (vector, form)
                entries.push((ij, a, iform, rat(sign)));
            }
        }
    }
    Ok(BilinearFiberMap { out_dim: out.storage_dim(), entries })
}

/// Full contraction of `σ ∈ E* ⊗ Λ^m T*` against `s ∈ E`, landing in
/// `Λ^m T*` storage. Slot `j` of the dual block pairs with slot `j` of `E`.
pub fn pairing_map(sigma: &Fiber, e: &Fiber, out: &Fiber) -> Result<BilinearFiberMap> {
    let m = e.m();
    let expected = e.bundle().dual_density(m)?;
    if sigma.bundle() != &expected {
        return Err(Error::BundleMismatch(format!(
            "pairing expects kernel values in {expected}, got {}",
            sigma.bundle()
        )));
    }
    if out.bundle() != &BundleSpec::forms(m) {
        return Err(Error::BundleMismatch("pairing lands in top-degree forms".into()));
    }
    let e_slots = e.bundle().total_slots();
    let mut entries: BTreeMap<(usize, usize, usize), Rational> = BTreeMap::new();
    // Expand both storage bases to full tensors and contract; fibers are tiny.
    for (is, ts) in sigma.tuples().iter().enumerate() {
        let mut storage = sigma.zero_vec();
        storage[is] = rat(1);
        let full_sigma = sigma.include(&storage);
        for (ie, te) in e.tuples().iter().enumerate() {
            let _ = (ts, te);
            let mut se = e.zero_vec();
            se[ie] = rat(1);
            let full_e = e.include(&se);
            // out_full[T_M] = Σ_{T_pair} σ_full[(T_pair, T_M)] e_full[T_pair]
            let m_slots = m; // Λ^m block has m slots
            let total_pair = m.pow(e_slots as u32);
            let total_m = m.pow(m_slots as u32);
            let mut out_full = vec![rat(0); total_m];
            let mut pair_tuple = vec![0usize; e_slots];
            for pair_flat in 0..total_pair {
                decode_tuple(pair_flat, m, &mut pair_tuple);
                if full_e[pair_flat].is_zero() {
                    continue;
                }
                for m_flat in 0..total_m {
                    let sigma_flat = pair_flat * total_m + m_flat;
                    if !full_sigma[sigma_flat].is_zero() {
                        out_full[m_flat] += full_sigma[sigma_flat].clone() * full_e[pair_flat].clone();
                    }
                }
            }
            let projected = out.project(&out_full)?;
            for (io, c) in projected.into_iter().enumerate() {
                if !c.is_zero() {
                    *entries.entry((io, is, ie)).or_insert_with(|| rat(0)) += c;
                }
            }
        }
    }
    let entries = entries
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|((o, i, j), c)| (o, i, j, c))
        .collect();
    Ok(BilinearFiberMap { out_dim: out.storage_dim(), entries })
}
