//! Boolean functions `f: Z_N -> Z_2` on `n`-bit arguments and the function
//! classes the protocols are promised over.
//!
//! A [`BoolFunc`] is stored as a packed truth table, bit `j` holding `f(j)`.
//! Argument indices are plain integers; bit positions inside an index follow
//! the usual binary convention, and Hamming distances are popcounts of XORs.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported argument width. `2^24` truth-table bits is 2 MiB.
pub const MAX_BITS: usize = 24;

/// Largest width for which whole classes can be listed exhaustively.
pub const MAX_ENUM_BITS: usize = 4;

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BoolFunc {
    n: usize,
    words: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionClass {
    Constant,
    /// Exactly `N/2` arguments map to 1.
    #[serde(rename = "balanced")]
    BalancedW,
    /// Member of `C_N`: `N/4` ones (in `f` or its complement), no two of them
    /// at Hamming distance 1.
    #[serde(rename = "cn")]
    ClassCN,
    Other,
}

impl fmt::Display for FunctionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FunctionClass::Constant => "constant",
            FunctionClass::BalancedW => "balanced",
            FunctionClass::ClassCN => "cn",
            FunctionClass::Other => "other",
        })
    }
}

impl FromStr for FunctionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(FunctionClass::Constant),
            "balanced" => Ok(FunctionClass::BalancedW),
            "cn" => Ok(FunctionClass::ClassCN),
            "other" => Ok(FunctionClass::Other),
            _ => Err(Error::parse(format!("unknown function class '{s}'"))),
        }
    }
}

fn check_bits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_BITS {
        return Err(Error::invalid(format!(
            "argument width n = {n} outside 1..={MAX_BITS}"
        )));
    }
    Ok(())
}

fn word_count(len: usize) -> usize {
    len.div_ceil(WORD)
}

impl BoolFunc {
    /// All-zero function on `n` bits.
    pub fn zeros(n: usize) -> Result<Self> {
        check_bits(n)?;
        Ok(BoolFunc {
            n,
            words: vec![0; word_count(1 << n)],
        })
    }

    /// All-one function on `n` bits.
    pub fn ones(n: usize) -> Result<Self> {
        Ok(Self::zeros(n)?.complement())
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize) -> bool) -> Result<Self> {
        let mut out = Self::zeros(n)?;
        for j in 0..out.len() {
            if f(j) {
                out.set(j, true);
            }
        }
        Ok(out)
    }

    /// Builds a function from its truth table; `table.len()` must be a power
    /// of two `2^n` with `n >= 1` and every entry 0 or 1.
    pub fn from_table(table: &[u8]) -> Result<Self> {
        let len = table.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::invalid(format!(
                "truth table length {len} is not 2^n with n >= 1"
            )));
        }
        let n = len.trailing_zeros() as usize;
        if let Some(bad) = table.iter().find(|&&b| b > 1) {
            return Err(Error::invalid(format!("truth table entry {bad} is not 0 or 1")));
        }
        Self::from_fn(n, |j| table[j] == 1)
    }

    /// Function whose one-set is `ones`.
    pub fn from_ones(n: usize, ones: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut out = Self::zeros(n)?;
        for j in ones {
            out.check_index(j)?;
            out.set(j, true);
        }
        Ok(out)
    }

    /// Number of argument bits.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Domain size `N = 2^n`.
    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                bound: self.len(),
            });
        }
        Ok(())
    }

    /// `f(j)`. Panics if `j >= N`.
    #[inline]
    pub fn eval(&self, j: usize) -> bool {
        assert!(j < self.len(), "argument {j} out of range for n = {}", self.n);
        self.words[j / WORD] >> (j % WORD) & 1 == 1
    }

    pub fn value(&self, j: usize) -> Result<u8> {
        self.check_index(j)?;
        Ok(self.eval(j) as u8)
    }

    /// `(-1)^f(j)`.
    #[inline]
    pub fn sign(&self, j: usize) -> f64 {
        if self.eval(j) {
            -1.0
        } else {
            1.0
        }
    }

    /// The oracle phases `(-1)^f(j)` for every argument.
    pub fn signs(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.sign(j)).collect()
    }

    fn set(&mut self, j: usize, v: bool) {
        let (w, b) = (j / WORD, j % WORD);
        if v {
            self.words[w] |= 1 << b;
        } else {
            self.words[w] &= !(1 << b);
        }
    }

    /// Truth table as 0/1 bytes, argument 0 first.
    pub fn table(&self) -> Vec<u8> {
        (0..self.len()).map(|j| self.eval(j) as u8).collect()
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Arguments where `f(j) = 1`, ascending.
    pub fn ones_iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&j| self.eval(j))
    }

    /// `I(f) = ((#ones) - (#zeros)) / 2`, always an integer since `N` is even.
    pub fn imbalance(&self) -> i64 {
        self.count_ones() as i64 - (self.len() / 2) as i64
    }

    pub fn complement(&self) -> BoolFunc {
        let mut out = self.clone();
        for w in &mut out.words {
            *w = !*w;
        }
        out.mask_tail();
        out
    }

    fn mask_tail(&mut self) {
        let len = self.len();
        if len % WORD != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << (len % WORD)) - 1;
        }
    }

    /// Transposition of arguments `l` and `m`: `g(l) = f(m)`, `g(m) = f(l)`.
    pub fn permute(&self, l: usize, m: usize) -> Result<BoolFunc> {
        self.check_index(l)?;
        self.check_index(m)?;
        let mut out = self.clone();
        let (fl, fm) = (self.eval(l), self.eval(m));
        out.set(l, fm);
        out.set(m, fl);
        Ok(out)
    }

    /// Extends `f` on `n` bits to `f'` on `n + 1` bits, equal to `f` on the
    /// lower half of the domain and zero on the upper half.
    pub fn lift(&self) -> Result<BoolFunc> {
        check_bits(self.n + 1)?;
        let mut out = BoolFunc::zeros(self.n + 1)?;
        out.words[..self.words.len()].copy_from_slice(&self.words);
        Ok(out)
    }

    pub fn is_constant(&self) -> bool {
        let ones = self.count_ones();
        ones == 0 || ones == self.len()
    }

    pub fn is_balanced(&self) -> bool {
        self.count_ones() == self.len() / 2
    }

    /// Membership in `C_N`. Requires `n >= 2` so that `N/4` is integral.
    pub fn is_in_cn(&self) -> Result<bool> {
        if self.n < 2 {
            return Err(Error::ClassUndefined { n: self.n });
        }
        let quarter = self.len() / 4;
        let ones = self.count_ones();
        Ok(if ones == quarter {
            self.ones_separated()
        } else if self.len() - ones == quarter {
            self.complement().ones_separated()
        } else {
            false
        })
    }

    /// No two arguments in the one-set are at Hamming distance 1.
    fn ones_separated(&self) -> bool {
        self.ones_iter()
            .all(|j| (0..self.n).all(|b| !self.eval(j ^ (1 << b))))
    }

    /// Priority order: Constant, BalancedW, ClassCN, Other.
    pub fn classify(&self) -> FunctionClass {
        if self.is_constant() {
            FunctionClass::Constant
        } else if self.is_balanced() {
            FunctionClass::BalancedW
        } else if self.n >= 2 && self.is_in_cn().unwrap_or(false) {
            FunctionClass::ClassCN
        } else {
            FunctionClass::Other
        }
    }

    /// Truth table as an unpadded 0/1 string, argument 0 first.
    pub fn to_bit_string(&self) -> String {
        (0..self.len())
            .map(|j| if self.eval(j) { '1' } else { '0' })
            .collect()
    }

    /// `0x`-prefixed hex of `sum_j f(j) 2^j`, padded to `ceil(N/4)` digits.
    pub fn to_hex(&self) -> String {
        let digits = self.len().div_ceil(4);
        let mut s = String::with_capacity(digits + 2);
        s.push_str("0x");
        for d in (0..digits).rev() {
            let mut nibble = 0u32;
            for b in 0..4 {
                let j = 4 * d + b;
                if j < self.len() && self.eval(j) {
                    nibble |= 1 << b;
                }
            }
            s.push(char::from_digit(nibble, 16).unwrap());
        }
        s
    }

    fn from_hex(n: usize, hex: &str) -> Result<Self> {
        let mut out = Self::zeros(n)?;
        let digits = hex.trim_start_matches("0x").trim_start_matches("0X");
        if digits.is_empty() {
            return Err(Error::parse("empty hex truth table"));
        }
        for (d, ch) in digits.chars().rev().enumerate() {
            let nibble = ch
                .to_digit(16)
                .ok_or_else(|| Error::parse(format!("invalid hex digit '{ch}'")))?;
            for b in 0..4 {
                if nibble >> b & 1 == 1 {
                    let j = 4 * d + b;
                    if j >= out.len() {
                        return Err(Error::parse(format!(
                            "hex value sets argument {j} beyond N = {}",
                            out.len()
                        )));
                    }
                    out.set(j, true);
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for BoolFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len() <= 64 {
            write!(f, "BoolFunc(n={}, {})", self.n, self.to_bit_string())
        } else {
            write!(f, "BoolFunc(n={}, ones={})", self.n, self.count_ones())
        }
    }
}

/// Two-line text form: `n=<int>` then the truth table bits, argument 0 first.
impl fmt::Display for BoolFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n={}", self.n)?;
        writeln!(f, "{}", self.to_bit_string())
    }
}

impl FromStr for BoolFunc {
    type Err = Error;

    /// Accepts the header line followed by either a 0/1 string of length
    /// `2^n` or a `0x` hex form (bit `j` of the value is `f(j)`).
    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::parse("empty function file"))?;
        let n: usize = header
            .strip_prefix("n=")
            .ok_or_else(|| Error::parse(format!("expected 'n=<int>' header, got '{header}'")))?
            .trim()
            .parse()
            .map_err(|e| Error::parse(format!("bad bit count: {e}")))?;
        check_bits(n)?;
        let body = lines
            .next()
            .ok_or_else(|| Error::parse("missing truth table line"))?;
        if lines.next().is_some() {
            return Err(Error::parse("trailing content after truth table"));
        }
        if body.starts_with("0x") || body.starts_with("0X") {
            return Self::from_hex(n, body);
        }
        if body.len() != 1 << n {
            return Err(Error::parse(format!(
                "truth table has {} bits, expected {}",
                body.len(),
                1usize << n
            )));
        }
        let mut out = Self::zeros(n)?;
        for (j, ch) in body.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => out.set(j, true),
                _ => return Err(Error::parse(format!("invalid truth table char '{ch}'"))),
            }
        }
        Ok(out)
    }
}

/// Hamming distance between the `n`-bit representations of `j` and `k`.
pub fn hamming(j: usize, k: usize, n: usize) -> Result<u32> {
    let bound = 1usize
        .checked_shl(n as u32)
        .ok_or_else(|| Error::invalid(format!("bit count {n} too large")))?;
    for idx in [j, k] {
        if idx >= bound {
            return Err(Error::IndexOutOfRange { index: idx, bound });
        }
    }
    Ok((j ^ k).count_ones())
}

/// Lists every member of `class` on `n` bits once, in lexicographic order of
/// truth tables read from argument 0.
pub fn enumerate_class(n: usize, class: FunctionClass) -> Result<ClassIter> {
    check_bits(n)?;
    if class == FunctionClass::ClassCN && n < 2 {
        return Err(Error::ClassUndefined { n });
    }
    if class != FunctionClass::Constant && n > MAX_ENUM_BITS {
        return Err(Error::Infeasible {
            what: "exhaustive class enumeration",
            n,
            limit: MAX_ENUM_BITS,
        });
    }
    Ok(ClassIter {
        n,
        class,
        next: 0,
        end: if class == FunctionClass::Constant {
            2
        } else {
            1u64 << (1 << n)
        },
    })
}

/// Iterator returned by [`enumerate_class`].
#[derive(Debug, Clone)]
pub struct ClassIter {
    n: usize,
    class: FunctionClass,
    next: u64,
    end: u64,
}

impl ClassIter {
    fn table_from_rank(&self, v: u64) -> BoolFunc {
        let len = 1usize << self.n;
        BoolFunc::from_fn(self.n, |j| v >> (len - 1 - j) & 1 == 1).expect("validated width")
    }
}

impl Iterator for ClassIter {
    type Item = BoolFunc;

    fn next(&mut self) -> Option<BoolFunc> {
        if self.class == FunctionClass::Constant {
            let out = match self.next {
                0 => BoolFunc::zeros(self.n).ok(),
                1 => BoolFunc::ones(self.n).ok(),
                _ => None,
            };
            self.next += 1;
            return out;
        }
        while self.next < self.end {
            let f = self.table_from_rank(self.next);
            self.next += 1;
            if f.classify() == self.class {
                return Some(f);
            }
        }
        None
    }
}

/// All `2^(2^n)` functions on `n` bits, lexicographic. Same size guard as
/// [`enumerate_class`].
pub fn enumerate_all(n: usize) -> Result<impl Iterator<Item = BoolFunc>> {
    check_bits(n)?;
    if n > MAX_ENUM_BITS {
        return Err(Error::Infeasible {
            what: "exhaustive function enumeration",
            n,
            limit: MAX_ENUM_BITS,
        });
    }
    let len = 1usize << n;
    Ok((0..1u64 << len).map(move |v| {
        BoolFunc::from_fn(n, |j| v >> (len - 1 - j) & 1 == 1).expect("validated width")
    }))
}

/// `k`-th argument (ascending) whose bit parity is even.
fn even_parity_member(k: usize) -> usize {
    (k << 1) | (k.count_ones() as usize & 1)
}

/// Random member of `C_N`: `N/4` ones drawn uniformly from the even-parity
/// arguments, all of which are pairwise at even Hamming distance.
pub fn sample_cn(n: usize, seed: u64) -> Result<BoolFunc> {
    check_bits(n)?;
    if n < 2 {
        return Err(Error::ClassUndefined { n });
    }
    let len = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, len / 2, len / 4);
    BoolFunc::from_ones(n, picks.iter().map(even_parity_member))
}

/// Deterministic member of `C_N`: ones on the first `N/4` even-parity
/// arguments.
pub fn canonical_cn(n: usize) -> Result<BoolFunc> {
    check_bits(n)?;
    if n < 2 {
        return Err(Error::ClassUndefined { n });
    }
    BoolFunc::from_ones(n, (0..(1usize << n) / 4).map(even_parity_member))
}

/// Canonical balanced function: ones on the upper half of the domain.
pub fn canonical_balanced(n: usize) -> Result<BoolFunc> {
    let half = (1usize << n) / 2;
    BoolFunc::from_fn(n, |j| j >= half)
}

/// Uniformly random balanced function.
pub fn sample_balanced(n: usize, seed: u64) -> Result<BoolFunc> {
    check_bits(n)?;
    let len = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, len, len / 2);
    BoolFunc::from_ones(n, picks.iter())
}
