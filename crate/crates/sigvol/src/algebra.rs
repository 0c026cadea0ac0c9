//! Dense arithmetic on the truncated free tensor algebra over a d-letter
//! alphabet.
//!
//! Elements are stored densely, one complex coefficient per word of length
//! `<= order`, indexed by the canonical integer index
//!
//! ```text
//! index(ø) = 0,   index(w·i) = d · index(w) + i,   i in {1, .., d},
//! ```
//!
//! so that for `d = 2` the words of length `n` occupy the contiguous range
//! `[2^n - 1, 2^(n+1) - 2]` and an element of order `M` holds
//! `2^(M+1) - 1` coefficients. Concatenation of word indices is then plain
//! positional arithmetic: `index(uv) = index(u) * d^|v| + index(v)`.
//!
//! Shuffle products are driven by index tables (triples with an integer
//! multiplicity) built once per `(d, order)` and cached process-wide; the
//! backward Riccati solver hits these tables thousands of times per node.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SigVolError};

/// Number of words of length exactly `n` over a `d`-letter alphabet.
pub fn words_at_level(d: u8, n: usize) -> usize {
    (d as usize).pow(n as u32)
}

/// Index of the first word of length `n`: `(d^n - 1) / (d - 1)`.
pub fn level_start(d: u8, n: usize) -> usize {
    let d = d as usize;
    ((d.pow(n as u32)) - 1) / (d - 1)
}

/// Total number of words of length `<= order`.
pub fn word_count(d: u8, order: usize) -> usize {
    level_start(d, order + 1)
}

/// Length of the word with the given index.
pub fn level_of(d: u8, index: usize) -> usize {
    let mut n = 0;
    while index >= level_start(d, n + 1) {
        n += 1;
    }
    n
}

/// A word over the alphabet `{1, .., d}`; the empty word is allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    letters: Vec<u8>,
}

impl Word {
    pub fn empty() -> Self {
        Word { letters: vec![] }
    }

    pub fn new(letters: impl Into<Vec<u8>>) -> Self {
        Word {
            letters: letters.into(),
        }
    }

    pub fn letter(i: u8) -> Self {
        Word { letters: vec![i] }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    /// Canonical integer index with respect to alphabet size `d`.
    pub fn index(&self, d: u8) -> usize {
        self.letters
            .iter()
            .fold(0usize, |acc, &i| acc * d as usize + i as usize)
    }

    /// Inverse of [`Word::index`]: recover the word from its index.
    pub fn from_index(d: u8, mut index: usize) -> Self {
        let mut letters = Vec::new();
        while index > 0 {
            let i = ((index - 1) % d as usize) as u8 + 1;
            letters.push(i);
            index = (index - 1) / d as usize;
        }
        letters.reverse();
        Word { letters }
    }

    /// Parse the text form: a string of digits, or `"e"` for the empty word.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "e" || s.is_empty() {
            return Ok(Word::empty());
        }
        let mut letters = Vec::with_capacity(s.len());
        for c in s.chars() {
            let i = c
                .to_digit(10)
                .ok_or_else(|| SigVolError::InvalidParameter(format!("bad word '{s}'")))?;
            if i == 0 {
                return Err(SigVolError::InvalidParameter(format!(
                    "letters are 1-based, got 0 in '{s}'"
                )));
            }
            letters.push(i as u8);
        }
        Ok(Word { letters })
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            write!(f, "e")
        } else {
            for &i in &self.letters {
                write!(f, "{i}")?;
            }
            Ok(())
        }
    }
}

/// Last letter of the word with index `idx >= 1`.
#[inline]
fn last_letter(d: u8, idx: usize) -> usize {
    (idx - 1) % d as usize + 1
}

/// Index of the word with the last letter removed (`idx >= 1`).
#[inline]
fn parent(d: u8, idx: usize) -> usize {
    (idx - 1) / d as usize
}

/// One shuffle-table entry: `out += mult * a[a_idx] * b[b_idx]`.
#[derive(Debug, Clone, Copy)]
pub struct ShuffleEntry {
    pub a_idx: u32,
    pub b_idx: u32,
    pub out_idx: u32,
    pub mult: u32,
}

/// Precomputed shuffle product operator for all word pairs with combined
/// length `<= order`. Entries are sorted by output level so a truncated
/// application is a prefix scan.
pub struct ShuffleTable {
    pub d: u8,
    pub order: usize,
    entries: Vec<ShuffleEntry>,
    /// `entry_end[n]` = number of entries with output level `< n + 1`.
    entry_end: Vec<usize>,
}

impl ShuffleTable {
    fn build(d: u8, order: usize) -> Self {
        type ExpansionMemo = HashMap<(usize, usize), Arc<Vec<(usize, u32)>>>;
        // Expand u ⧢ v recursively; memoize on the (unordered) index pair.
        fn expand(
            d: u8,
            u: usize,
            v: usize,
            memo: &mut ExpansionMemo,
        ) -> Arc<Vec<(usize, u32)>> {
            if u == 0 {
                return Arc::new(vec![(v, 1)]);
            }
            if v == 0 {
                return Arc::new(vec![(u, 1)]);
            }
            let key = (u.min(v), u.max(v));
            if let Some(hit) = memo.get(&key) {
                return hit.clone();
            }
            let (iu, ju) = (last_letter(d, u), last_letter(d, v));
            let (pu, pv) = (parent(d, u), parent(d, v));
            let left = expand(d, pu, v, memo);
            let right = expand(d, u, pv, memo);
            let mut acc: HashMap<usize, u32> = HashMap::new();
            for &(w, m) in left.iter() {
                *acc.entry(w * d as usize + iu).or_insert(0) += m;
            }
            for &(w, m) in right.iter() {
                *acc.entry(w * d as usize + ju).or_insert(0) += m;
            }
            let mut out: Vec<(usize, u32)> = acc.into_iter().collect();
            out.sort_unstable();
            let out = Arc::new(out);
            memo.insert(key, out.clone());
            out
        }

        let mut memo = HashMap::new();
        let mut entries: Vec<ShuffleEntry> = Vec::new();
        for la in 0..=order {
            for lb in 0..=order - la {
                let (a0, a1) = (level_start(d, la), level_start(d, la + 1));
                let (b0, b1) = (level_start(d, lb), level_start(d, lb + 1));
                for a in a0..a1 {
                    for b in b0..b1 {
                        for &(w, m) in expand(d, a, b, &mut memo).iter() {
                            entries.push(ShuffleEntry {
                                a_idx: a as u32,
                                b_idx: b as u32,
                                out_idx: w as u32,
                                mult: m,
                            });
                        }
                    }
                }
            }
        }
        entries.sort_unstable_by_key(|e| e.out_idx);
        let mut entry_end = vec![0usize; order + 1];
        for (lvl, end) in entry_end.iter_mut().enumerate() {
            let cutoff = word_count(d, lvl) as u32;
            *end = entries.partition_point(|e| e.out_idx < cutoff);
        }
        ShuffleTable {
            d,
            order,
            entries,
            entry_end,
        }
    }

    /// Entries producing outputs of level `<= out_order`.
    pub fn entries_up_to(&self, out_order: usize) -> &[ShuffleEntry] {
        let end = self.entry_end[out_order.min(self.order)];
        &self.entries[..end]
    }

    /// `out += a ⧢ b` truncated at `out_order`, written into `out`
    /// (which must have length `>= word_count(d, out_order)`).
    pub fn apply_into(
        &self,
        a: &[Complex64],
        b: &[Complex64],
        out_order: usize,
        out: &mut [Complex64],
    ) {
        let na = a.len() as u32;
        let nb = b.len() as u32;
        for e in self.entries_up_to(out_order) {
            if e.a_idx < na && e.b_idx < nb {
                out[e.out_idx as usize] +=
                    a[e.a_idx as usize] * b[e.b_idx as usize] * (e.mult as f64);
            }
        }
    }
}

/// Process-wide cache of shuffle tables keyed by `(d, order)`.
pub fn shuffle_table(d: u8, order: usize) -> Arc<ShuffleTable> {
    type TableCache = Mutex<HashMap<(u8, usize), Arc<ShuffleTable>>>;
    static CACHE: OnceLock<TableCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    // Reuse a bigger table when one is already cached.
    if let Some((_, t)) = guard
        .iter()
        .find(|((dd, oo), _)| *dd == d && *oo >= order)
    {
        return t.clone();
    }
    guard
        .entry((d, order))
        .or_insert_with(|| Arc::new(ShuffleTable::build(d, order)))
        .clone()
}

/// An element of the truncated tensor algebra: one complex coefficient per
/// word of length `<= order`. Real elements carry a zero imaginary part.
#[derive(Clone, PartialEq)]
pub struct TensorElement {
    d: u8,
    order: usize,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for TensorElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TensorElement(d={}, M={}; ", self.d, self.order)?;
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm_sqr() > 0.0 {
                if !first {
                    write!(f, " + ")?;
                }
                write!(f, "({c})·{}", Word::from_index(self.d, i))?;
                first = false;
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

impl TensorElement {
    /// The zero element.
    pub fn zero(d: u8, order: usize) -> Self {
        TensorElement {
            d,
            order,
            coeffs: vec![Complex64::ZERO; word_count(d, order)],
        }
    }

    /// The unit ø (empty word with coefficient one).
    pub fn unit(d: u8, order: usize) -> Self {
        let mut t = Self::zero(d, order);
        t.coeffs[0] = Complex64::ONE;
        t
    }

    /// `c · w` for a single word.
    pub fn from_word(d: u8, order: usize, w: &Word, c: Complex64) -> Self {
        let mut t = Self::zero(d, order);
        if w.len() <= order {
            t.coeffs[w.index(d)] = c;
        }
        t
    }

    pub fn from_terms(d: u8, order: usize, terms: &[(&str, f64)]) -> Result<Self> {
        let mut t = Self::zero(d, order);
        for (w, c) in terms {
            let w = Word::parse(w)?;
            if w.len() <= order {
                t.coeffs[w.index(d)] += Complex64::new(*c, 0.0);
            }
        }
        Ok(t)
    }

    pub fn alphabet_size(&self) -> u8 {
        self.d
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at a word (zero beyond the truncation order).
    pub fn coeff(&self, w: &Word) -> Complex64 {
        if w.len() > self.order {
            Complex64::ZERO
        } else {
            self.coeffs[w.index(self.d)]
        }
    }

    pub fn set_coeff(&mut self, w: &Word, c: Complex64) {
        assert!(w.len() <= self.order, "word beyond truncation order");
        self.coeffs[w.index(self.d)] = c;
    }

    /// Scalar coefficient at the empty word.
    pub fn scalar(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.im.abs() <= tol)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Change the truncation order, padding with zeros or dropping levels.
    pub fn resized(&self, order: usize) -> Self {
        let mut t = Self::zero(self.d, order);
        let n = t.coeffs.len().min(self.coeffs.len());
        t.coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        t
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut t = self.clone();
        for x in &mut t.coeffs {
            *x *= c;
        }
        t
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_alphabet(other)?;
        let order = self.order.max(other.order);
        let mut t = self.resized(order);
        for (i, c) in other.coeffs.iter().enumerate() {
            t.coeffs[i] += c;
        }
        Ok(t)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale_real(-1.0))
    }

    pub fn conj(&self) -> Self {
        let mut t = self.clone();
        for x in &mut t.coeffs {
            *x = x.conj();
        }
        t
    }

    fn check_alphabet(&self, other: &Self) -> Result<()> {
        if self.d != other.d {
            return Err(SigVolError::AlphabetMismatch(self.d, other.d));
        }
        Ok(())
    }

    /// Shuffle product truncated at `out_order`.
    pub fn shuffle(&self, other: &Self, out_order: usize) -> Result<Self> {
        self.check_alphabet(other)?;
        let table = shuffle_table(self.d, out_order);
        let mut out = Self::zero(self.d, out_order);
        table.apply_into(&self.coeffs, &other.coeffs, out_order, &mut out.coeffs);
        Ok(out)
    }

    /// Concatenation (graded tensor-product convolution) truncated at
    /// `out_order`.
    pub fn concat(&self, other: &Self, out_order: usize) -> Result<Self> {
        self.check_alphabet(other)?;
        let d = self.d as usize;
        let mut out = Self::zero(self.d, out_order);
        let max_la = self.order.min(out_order);
        for la in 0..=max_la {
            let max_lb = other.order.min(out_order - la);
            for lb in 0..=max_lb {
                let (a0, a1) = (level_start(self.d, la), level_start(self.d, la + 1));
                let (b0, b1) = (level_start(self.d, lb), level_start(self.d, lb + 1));
                let shift = d.pow(lb as u32);
                // index(uv) = index(u) * d^|v| + index(v)
                for a in a0..a1 {
                    let ca = self.coeffs[a];
                    if ca == Complex64::ZERO {
                        continue;
                    }
                    let base = a * shift;
                    for b in b0..b1 {
                        out.coeffs[base + b] += ca * other.coeffs[b];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Append a single word on the right: `self ⊗ w`; the truncation order
    /// grows by the word length.
    pub fn concat_word(&self, w: &Word) -> Self {
        let rhs = Self::from_word(self.d, w.len(), w, Complex64::ONE);
        self.concat(&rhs, self.order + w.len()).expect("same alphabet")
    }

    /// Suffix-stripping projection: `(l proj u)^v = l^(vu)`.
    pub fn project(&self, u: &Word) -> Self {
        let k = u.len();
        if k > self.order {
            return Self::zero(self.d, 0);
        }
        let d = self.d as usize;
        let new_order = self.order - k;
        let shift = d.pow(k as u32);
        let u_idx = u.index(self.d);
        let mut out = Self::zero(self.d, new_order);
        for lv in 0..=new_order {
            let (v0, v1) = (level_start(self.d, lv), level_start(self.d, lv + 1));
            for v in v0..v1 {
                out.coeffs[v] = self.coeffs[v * shift + u_idx];
            }
        }
        out
    }

    /// Resolvent `Σ_n self^{⊗n}` truncated at `out_order`.
    ///
    /// Requires a vanishing scalar term; the result `r` satisfies
    /// `r = ø + r ⊗ self` up to truncation.
    pub fn resolvent(&self, out_order: usize) -> Result<Self> {
        let s = self.scalar();
        if s.norm() != 0.0 {
            return Err(SigVolError::NonZeroScalarTerm(s.norm()));
        }
        let unit = Self::unit(self.d, out_order);
        let mut r = unit.clone();
        for _ in 0..out_order {
            r = unit.add(&r.concat(self, out_order)?)?;
        }
        Ok(r)
    }

    /// Shuffle exponential `Σ_n self^{⧢n} / n!` truncated at `out_order`.
    ///
    /// Requires a vanishing scalar term. When `self` is a linear combination
    /// of single letters this coincides with the resolvent.
    pub fn shuffle_exp(&self, out_order: usize) -> Result<Self> {
        let s = self.scalar();
        if s.norm() != 0.0 {
            return Err(SigVolError::NonZeroScalarTerm(s.norm()));
        }
        let mut acc = Self::unit(self.d, out_order);
        let mut term = Self::unit(self.d, out_order);
        for n in 1..=out_order {
            term = term.shuffle(self, out_order)?.scale_real(1.0 / n as f64);
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }

    /// k-fold shuffle power; `k = 0` gives the unit ø.
    pub fn shuffle_pow(&self, k: usize, out_order: usize) -> Result<Self> {
        let mut acc = Self::unit(self.d, out_order);
        for _ in 0..k {
            acc = acc.shuffle(self, out_order)?;
        }
        Ok(acc)
    }

    /// Bracket `Σ_v self^v other^v`, silently truncated to the smaller of the
    /// two orders.
    pub fn bracket(&self, other: &Self) -> Complex64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Bracket against a real coefficient vector (dense, same indexing).
    pub fn bracket_real(&self, other: &[f64]) -> Complex64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (c, &x) in self.coeffs.iter().zip(other) {
            re += c.re * x;
            im += c.im * x;
        }
        Complex64::new(re, im)
    }

    /// Sparse text form: `{word, re, im}` triples for the non-zero words.
    pub fn to_sparse(&self) -> Vec<SparseTerm> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(i, c)| SparseTerm {
                word: Word::from_index(self.d, i).to_string(),
                re: c.re,
                im: c.im,
            })
            .collect()
    }

    pub fn from_sparse(d: u8, order: usize, terms: &[SparseTerm]) -> Result<Self> {
        let mut t = Self::zero(d, order);
        for term in terms {
            let w = Word::parse(&term.word)?;
            if w.len() > order {
                return Err(SigVolError::InvalidParameter(format!(
                    "word '{}' beyond order {order}",
                    term.word
                )));
            }
            t.coeffs[w.index(d)] += Complex64::new(term.re, term.im);
        }
        Ok(t)
    }
}

/// One `{word, re, im}` entry of the sparse interchange format; omitted
/// words are zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparseTerm {
    pub word: String,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// A tensor-valued function of time on a strictly increasing grid, evaluated
/// by the nearest-left grid value (piecewise constant).
#[derive(Debug, Clone)]
pub struct TimeDependentTensor {
    grid: Vec<f64>,
    values: Vec<TensorElement>,
}

impl TimeDependentTensor {
    pub fn constant(value: TensorElement) -> Self {
        TimeDependentTensor {
            grid: vec![0.0],
            values: vec![value],
        }
    }

    pub fn new(grid: Vec<f64>, values: Vec<TensorElement>) -> Result<Self> {
        if grid.is_empty() || grid.len() != values.len() {
            return Err(SigVolError::InvalidParameter(
                "grid/values length mismatch".into(),
            ));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SigVolError::NonIncreasingGrid);
        }
        let d = values[0].alphabet_size();
        let order = values[0].order();
        if values
            .iter()
            .any(|v| v.alphabet_size() != d || v.order() != order)
        {
            return Err(SigVolError::InvalidParameter(
                "all values must share alphabet and order".into(),
            ));
        }
        Ok(TimeDependentTensor { grid, values })
    }

    pub fn is_constant(&self) -> bool {
        self.values.len() == 1
    }

    pub fn order(&self) -> usize {
        self.values[0].order()
    }

    pub fn alphabet_size(&self) -> u8 {
        self.values[0].alphabet_size()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[TensorElement] {
        &self.values
    }

    /// Nearest-left evaluation; times before the first grid point clamp to
    /// the first value.
    pub fn at(&self, t: f64) -> &TensorElement {
        let pos = self.grid.partition_point(|&g| g <= t);
        &self.values[pos.saturating_sub(1)]
    }

    pub fn map(&self, f: impl Fn(&TensorElement) -> TensorElement) -> Self {
        TimeDependentTensor {
            grid: self.grid.clone(),
            values: self.values.iter().map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn word_index_round_trip() {
        for d in [2u8, 3, 4] {
            for idx in 0..word_count(d, 4) {
                let w = Word::from_index(d, idx);
                assert_eq!(w.index(d), idx);
            }
        }
        // level ranges for d = 2: [2^n - 1, 2^(n+1) - 2]
        for n in 0..6 {
            assert_eq!(level_start(2, n), (1 << n) - 1);
        }
    }

    #[test]
    fn word_parse_display() {
        assert_eq!(Word::parse("e").unwrap(), Word::empty());
        assert_eq!(Word::parse("12").unwrap(), Word::new(vec![1, 2]));
        assert_eq!(Word::new(vec![2, 2, 1]).to_string(), "221");
        assert!(Word::parse("10").is_err());
    }

    #[test]
    fn shuffle_riffle_example_d4() {
        // 12 ⧢ 34 = 1234 + 1324 + 3124 + 1342 + 3142 + 3412
        let a = TensorElement::from_word(4, 2, &Word::new(vec![1, 2]), c(1.0));
        let b = TensorElement::from_word(4, 2, &Word::new(vec![3, 4]), c(1.0));
        let s = a.shuffle(&b, 4).unwrap();
        for w in ["1234", "1324", "3124", "1342", "3142", "3412"] {
            assert_eq!(s.coeff(&Word::parse(w).unwrap()), c(1.0), "missing {w}");
        }
        let total: Complex64 = s.coeffs().iter().sum();
        assert_eq!(total, c(6.0));
    }

    #[test]
    fn shuffle_unit_and_self() {
        let a = TensorElement::from_terms(2, 3, &[("1", 2.0), ("21", -1.0), ("e", 0.5)]).unwrap();
        let unit = TensorElement::unit(2, 3);
        let s = a.shuffle(&unit, 3).unwrap();
        assert_eq!(s, a.resized(3));

        // 12 ⧢ 12 = 2·1212 + 4·1122 (six riffle interleavings)
        let w12 = TensorElement::from_word(2, 2, &Word::new(vec![1, 2]), c(1.0));
        let s = w12.shuffle(&w12, 4).unwrap();
        assert_eq!(s.coeff(&Word::parse("1212").unwrap()), c(2.0));
        assert_eq!(s.coeff(&Word::parse("1122").unwrap()), c(4.0));
        let total: Complex64 = s.coeffs().iter().sum();
        assert_eq!(total, c(6.0));
    }

    #[test]
    fn concat_examples() {
        let a = TensorElement::from_terms(2, 2, &[("1", 1.0)]).unwrap();
        let unit = TensorElement::unit(2, 2);
        assert_eq!(unit.concat(&a, 2).unwrap(), a.resized(2));
        assert_eq!(a.concat(&unit, 2).unwrap(), a.resized(2));

        // (1)⊗(1) = 11
        let s = a.concat(&a, 2).unwrap();
        assert_eq!(s.coeff(&Word::parse("11").unwrap()), c(1.0));

        // (2ø + 1)⊗(2) = 2·2 + 12
        let lhs = TensorElement::from_terms(2, 1, &[("e", 2.0), ("1", 1.0)]).unwrap();
        let two = TensorElement::from_terms(2, 1, &[("2", 1.0)]).unwrap();
        let s = lhs.concat(&two, 2).unwrap();
        assert_eq!(s.coeff(&Word::parse("2").unwrap()), c(2.0));
        assert_eq!(s.coeff(&Word::parse("12").unwrap()), c(1.0));
        assert_eq!(s.coeff(&Word::parse("11").unwrap()), c(0.0));
    }

    #[test]
    fn concat_associative() {
        let a = TensorElement::from_terms(2, 2, &[("1", 1.0), ("22", 0.5)]).unwrap();
        let b = TensorElement::from_terms(2, 2, &[("2", -2.0), ("e", 1.0)]).unwrap();
        let cc = TensorElement::from_terms(2, 2, &[("12", 3.0), ("1", 0.25)]).unwrap();
        let lhs = a.concat(&b, 4).unwrap().concat(&cc, 4).unwrap();
        let rhs = a.concat(&b.concat(&cc, 4).unwrap(), 4).unwrap();
        for (x, y) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            assert_abs_diff_eq!(x.re, y.re, epsilon = 1e-14);
        }
    }

    #[test]
    fn projection_example_d3() {
        // l = 4ø + 3·1 − 1·12 + 2·2212  (d = 3)
        let l = TensorElement::from_terms(
            3,
            4,
            &[("e", 4.0), ("1", 3.0), ("12", -1.0), ("2212", 2.0)],
        )
        .unwrap();
        let p1 = l.project(&Word::letter(1));
        assert_eq!(p1.coeff(&Word::empty()), c(3.0));
        let p2 = l.project(&Word::letter(2));
        assert_eq!(p2.coeff(&Word::parse("1").unwrap()), c(-1.0));
        assert_eq!(p2.coeff(&Word::parse("221").unwrap()), c(2.0));
        let p3 = l.project(&Word::letter(3));
        assert_eq!(p3.max_abs(), 0.0);
        // projection by the empty word is the identity
        assert_eq!(l.project(&Word::empty()), l);
    }

    #[test]
    fn projection_inverts_concat() {
        let a = TensorElement::from_terms(2, 2, &[("1", 1.5), ("21", -0.5), ("e", 2.0)]).unwrap();
        let u = Word::parse("12").unwrap();
        let cat = a.concat(&TensorElement::from_word(2, 2, &u, c(1.0)), 4).unwrap();
        assert_eq!(cat.project(&u), a.resized(2));
    }

    #[test]
    fn remark_decomposition() {
        // l = l^ø ø + Σ_i (l proj i)·i
        let l = TensorElement::from_terms(
            2,
            3,
            &[("e", 0.7), ("1", -1.0), ("12", 2.0), ("221", 0.3), ("2", 0.1)],
        )
        .unwrap();
        let mut rec = TensorElement::from_word(2, 3, &Word::empty(), l.scalar());
        for i in 1..=2 {
            let w = Word::letter(i);
            rec = rec.add(&l.project(&w).concat_word(&w)).unwrap();
        }
        assert_eq!(rec, l);
    }

    #[test]
    fn resolvent_geometric_series() {
        let kappa = 0.7;
        let l = TensorElement::from_terms(2, 1, &[("1", -kappa)]).unwrap();
        let r = l.resolvent(3).unwrap();
        assert_abs_diff_eq!(r.coeff(&Word::empty()).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.coeff(&Word::parse("1").unwrap()).re, -kappa, epsilon = 1e-15);
        assert_abs_diff_eq!(
            r.coeff(&Word::parse("11").unwrap()).re,
            kappa * kappa,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            r.coeff(&Word::parse("111").unwrap()).re,
            -kappa * kappa * kappa,
            epsilon = 1e-15
        );
        // r = ø + r ⊗ l up to truncation
        let rhs = TensorElement::unit(2, 3)
            .add(&r.concat(&l, 3).unwrap())
            .unwrap();
        assert_eq!(r, rhs);

        // resolvent of zero is the unit
        let zero = TensorElement::zero(2, 2);
        assert_eq!(zero.resolvent(2).unwrap(), TensorElement::unit(2, 2));

        // nonzero scalar term is rejected
        assert!(TensorElement::unit(2, 2).resolvent(2).is_err());
    }

    #[test]
    fn shuffle_exp_matches_series() {
        // (κ·1)^⧢n / n! = κ^n · 1^n, so that the bracket against a signature
        // sums to exp(κt)
        let kappa = 1.3;
        let l = TensorElement::from_terms(2, 1, &[("1", kappa)]).unwrap();
        let e = l.shuffle_exp(5).unwrap();
        for n in 0..=5usize {
            let w = Word::new(vec![1; n]);
            assert_abs_diff_eq!(e.coeff(&w).re, kappa.powi(n as i32), epsilon = 1e-12);
        }

        // shuffle_exp(η·2) at order 2 = ø + η·2 + η²·22
        let eta = 0.4;
        let l2 = TensorElement::from_terms(2, 1, &[("2", eta)]).unwrap();
        let e2 = l2.shuffle_exp(2).unwrap();
        assert_abs_diff_eq!(e2.coeff(&Word::empty()).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e2.coeff(&Word::parse("2").unwrap()).re, eta, epsilon = 1e-15);
        assert_abs_diff_eq!(
            e2.coeff(&Word::parse("22").unwrap()).re,
            eta * eta,
            epsilon = 1e-15
        );

        assert_eq!(
            TensorElement::zero(2, 3).shuffle_exp(3).unwrap(),
            TensorElement::unit(2, 3)
        );
    }

    #[test]
    fn resolvent_equals_shuffle_exp_on_letters() {
        // holds whenever the argument is supported on single letters
        let l = TensorElement::from_terms(2, 1, &[("1", -0.8), ("2", 0.45)]).unwrap();
        let r = l.resolvent(6).unwrap();
        let e = l.shuffle_exp(6).unwrap();
        for (x, y) in r.coeffs().iter().zip(e.coeffs()) {
            assert_abs_diff_eq!(x.re, y.re, epsilon = 1e-12);
            assert_abs_diff_eq!(x.im, y.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn shuffle_pow_examples() {
        let a = TensorElement::from_terms(2, 2, &[("2", 1.0)]).unwrap();
        assert_eq!(a.shuffle_pow(0, 2).unwrap(), TensorElement::unit(2, 2));
        assert_eq!(a.shuffle_pow(1, 2).unwrap(), a.resized(2));
        let sq = a.shuffle_pow(2, 2).unwrap();
        assert_eq!(sq.coeff(&Word::parse("22").unwrap()), c(2.0));
    }

    #[test]
    fn bracket_truncates_to_smaller_order() {
        let l = TensorElement::from_terms(2, 3, &[("e", 2.0), ("111", 5.0)]).unwrap();
        let s = TensorElement::from_terms(2, 1, &[("e", 1.0), ("1", 1.0)]).unwrap();
        assert_eq!(l.bracket(&s), c(2.0));
    }

    #[test]
    fn sparse_round_trip() {
        let l = TensorElement::from_terms(2, 3, &[("e", 1.0), ("12", -2.5), ("221", 0.125)])
            .unwrap();
        let sparse = l.to_sparse();
        let back = TensorElement::from_sparse(2, 3, &sparse).unwrap();
        assert_eq!(l, back);
    }

    #[test]
    fn time_dependent_nearest_left() {
        let v0 = TensorElement::from_terms(2, 1, &[("e", 1.0)]).unwrap();
        let v1 = TensorElement::from_terms(2, 1, &[("e", 2.0)]).unwrap();
        let tt = TimeDependentTensor::new(vec![0.0, 1.0], vec![v0.clone(), v1.clone()]).unwrap();
        assert_eq!(tt.at(-0.5), &v0);
        assert_eq!(tt.at(0.0), &v0);
        assert_eq!(tt.at(0.99), &v0);
        assert_eq!(tt.at(1.0), &v1);
        assert_eq!(tt.at(5.0), &v1);
        assert!(TimeDependentTensor::new(vec![0.0, 0.0], vec![v0, v1]).is_err());
    }

    #[test]
    fn alphabet_mismatch_rejected() {
        let a = TensorElement::zero(2, 2);
        let b = TensorElement::zero(3, 2);
        assert!(a.shuffle(&b, 2).is_err());
        assert!(a.concat(&b, 2).is_err());
        assert!(a.add(&b).is_err());
    }
}
