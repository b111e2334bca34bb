//! Words in a unitary `U` and an isometry `V` with `UV = e^{2πiθ}VU`, their
//! normal forms `λ·U^j V^m V*^n`, and a matrix model on `ℂ^{N+1} ⊗ ℂ^{2M+1}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::operator::ComplexMatrix;

pub type Q = Ratio<i64>;

/// Rotation angle `θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Angle {
    Rational(Q),
    Real(f64),
}

impl Angle {
    pub fn value(&self) -> f64 {
        match self {
            Angle::Rational(q) => q.to_f64().unwrap(),
            Angle::Real(x) => *x,
        }
    }
}

/// `p/q` or an integer gives an exact angle; anything else must be a float.
impl std::str::FromStr for Angle {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = || Error::InvalidArgument(format!("cannot read angle {text:?}"));
        if let Some((n, d)) = text.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            return Ok(Angle::Rational(Q::new(n, d)));
        }
        if let Ok(n) = text.parse::<i64>() {
            return Ok(Angle::Rational(Q::from_integer(n)));
        }
        text.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(Angle::Real)
            .ok_or_else(bad)
    }
}

/// The unit scalar `e^{2πi(q + bθ)}` with `q ∈ [0, 1)` rational. When `θ`
/// is rational the `θ`-part is folded into `q` and comparison is exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Phase {
    q: Q,
    theta: i64,
}

impl Default for Phase {
    fn default() -> Self {
        Self::ONE
    }
}

fn frac(q: Q) -> Q {
    q - q.floor()
}

impl Phase {
    pub const ONE: Phase = Phase {
        q: Ratio::new_raw(0, 1),
        theta: 0,
    };

    pub fn rational(q: Q) -> Self {
        Self {
            q: frac(q),
            theta: 0,
        }
    }

    /// `e^{2πi·bθ}`.
    pub fn theta(b: i64) -> Self {
        Self {
            q: Q::zero(),
            theta: b,
        }
    }

    pub fn q(&self) -> Q {
        self.q
    }

    pub fn theta_multiple(&self) -> i64 {
        self.theta
    }

    pub fn conj(self) -> Self {
        Self {
            q: frac(-self.q),
            theta: -self.theta,
        }
    }

    /// Folds the `θ`-multiple into `q` when the angle is rational.
    pub fn fold(self, angle: Angle) -> Self {
        match angle {
            Angle::Rational(t) => Self::rational(self.q + t * self.theta),
            Angle::Real(_) => self,
        }
    }

    pub fn value(&self, angle: Angle) -> Complex64 {
        let folded = self.fold(angle);
        let mut x = folded.q.to_f64().unwrap();
        if folded.theta != 0 {
            x += folded.theta as f64 * angle.value();
        }
        Complex64::from_polar(1.0, 2.0 * PI * x)
    }

    pub fn is_one(&self) -> bool {
        self.q.is_zero() && self.theta == 0
    }
}

impl Mul for Phase {
    type Output = Self;

    fn mul(self, other: Self) -> Self {
        Self {
            q: frac(self.q + other.q),
            theta: self.theta + other.theta,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e({}/{}", self.q.numer(), self.q.denom())?;
        match self.theta {
            0 => {}
            1 => f.write_str("+θ")?,
            -1 => f.write_str("-θ")?,
            b => write!(f, "{b:+}θ")?,
        }
        f.write_str(")")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    U,
    UStar,
    V,
    VStar,
}

impl Letter {
    fn is_u(self) -> bool {
        matches!(self, Letter::U | Letter::UStar)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Letter::U => "U",
            Letter::UStar => "U*",
            Letter::V => "V",
            Letter::VStar => "V*",
        })
    }
}

/// Unreduced product of letters with a unit prefactor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawWord {
    pub letters: Vec<Letter>,
    pub scalar: Phase,
}

impl RawWord {
    pub fn new(letters: Vec<Letter>) -> Self {
        Self {
            letters,
            scalar: Phase::ONE,
        }
    }
}

impl fmt::Display for RawWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if !self.scalar.is_one() {
            parts.push(self.scalar.to_string());
        }
        parts.extend(self.letters.iter().map(ToString::to_string));
        if parts.is_empty() {
            parts.push("1".into());
        }
        f.write_str(&parts.join(" "))
    }
}

/// Normal form `λ·U^j V^m V*^n`; negative `j` stands for `U*^{|j|}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub phase: Phase,
    pub u: i64,
    pub v: u32,
    pub v_star: u32,
}

impl Monomial {
    pub fn to_raw(&self) -> RawWord {
        let mut letters = Vec::new();
        let u = if self.u >= 0 {
            Letter::U
        } else {
            Letter::UStar
        };
        letters.extend(std::iter::repeat_n(u, self.u.unsigned_abs() as usize));
        letters.extend(std::iter::repeat_n(Letter::V, self.v as usize));
        letters.extend(std::iter::repeat_n(Letter::VStar, self.v_star as usize));
        RawWord {
            letters,
            scalar: self.phase,
        }
    }
}

fn power(f: &mut fmt::Formatter<'_>, base: &str, e: u64) -> fmt::Result {
    match e {
        0 => Ok(()),
        1 => write!(f, " {base}"),
        _ => write!(f, " {base}^{e}"),
    }
}

/// Always `e(p/q)` first, then the letters; the empty monomial prints as `1`.
impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.phase)?;
        let u = if self.u >= 0 { "U" } else { "U*" };
        power(f, u, self.u.unsigned_abs())?;
        power(f, "V", self.v as u64)?;
        power(f, "V*", self.v_star as u64)?;
        if self.u == 0 && self.v == 0 && self.v_star == 0 {
            f.write_str(" 1")?;
        }
        Ok(())
    }
}

/// Finite linear combination of normal-form monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossedWord {
    terms: BTreeMap<(i64, u32, u32), Complex64>,
    angle: Angle,
}

impl CrossedWord {
    pub fn zero(angle: Angle) -> Self {
        Self {
            terms: BTreeMap::new(),
            angle,
        }
    }

    pub fn from_monomial(m: &Monomial, angle: Angle) -> Self {
        let mut w = Self::zero(angle);
        w.add_term(m.u, m.v, m.v_star, m.phase.value(angle));
        w
    }

    pub fn add_term(&mut self, u: i64, v: u32, v_star: u32, c: Complex64) {
        let entry = self
            .terms
            .entry((u, v, v_star))
            .or_insert(Complex64::zero());
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&(u, v, v_star));
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(i64, u32, u32), &Complex64)> {
        self.terms.iter()
    }

    pub fn angle(&self) -> Angle {
        self.angle
    }
}

fn rewrite_pair(a: Letter, b: Letter) -> Option<(Vec<Letter>, i64)> {
    use Letter::*;
    match (a, b) {
        (V, U) => Some((vec![U, V], -1)),
        (V, UStar) => Some((vec![UStar, V], 1)),
        (VStar, U) => Some((vec![U, VStar], 1)),
        (VStar, UStar) => Some((vec![UStar, VStar], -1)),
        (VStar, V) | (U, UStar) | (UStar, U) => Some((Vec::new(), 0)),
        _ => None,
    }
}

fn redexes(letters: &[Letter]) -> Vec<usize> {
    letters
        .windows(2)
        .enumerate()
        .filter(|(_, w)| rewrite_pair(w[0], w[1]).is_some())
        .map(|(i, _)| i)
        .collect()
}

/// Rewrites until no rule applies, letting `choose` pick among the current
/// redex positions. Returns the normal form and the number of rule
/// applications.
pub fn normalize_with(
    word: &RawWord,
    angle: Angle,
    mut choose: impl FnMut(&[usize]) -> usize,
) -> (Monomial, usize) {
    let mut letters = word.letters.clone();
    let mut theta = 0i64;
    let mut steps = 0usize;
    loop {
        let positions = redexes(&letters);
        if positions.is_empty() {
            break;
        }
        let i = positions[choose(&positions) % positions.len()];
        let (replacement, dt) = rewrite_pair(letters[i], letters[i + 1]).expect("redex");
        letters.splice(i..i + 2, replacement);
        theta += dt;
        steps += 1;
    }
    // Irreducible words are U-powers followed by V^m V*^n.
    let u_len = letters.iter().take_while(|l| l.is_u()).count();
    let u: i64 = letters[..u_len]
        .iter()
        .map(|l| if *l == Letter::U { 1 } else { -1 })
        .sum();
    let v = letters[u_len..]
        .iter()
        .take_while(|l| **l == Letter::V)
        .count();
    let v_star = letters.len() - u_len - v;
    debug_assert!(letters[u_len + v..].iter().all(|l| *l == Letter::VStar));
    let phase = word.scalar.mul(Phase::theta(theta)).fold(angle);
    (
        Monomial {
            phase,
            u,
            v: v as u32,
            v_star: v_star as u32,
        },
        steps,
    )
}

/// Leftmost-innermost normal form.
pub fn normalize_word(word: &RawWord, angle: Angle) -> Monomial {
    normalize_with(word, angle, |_| 0).0
}

/// Number of rule applications under the leftmost strategy.
pub fn normalize_steps(word: &RawWord, angle: Angle) -> usize {
    normalize_with(word, angle, |_| 0).1
}

/// Parses `SCALAR? FACTOR*` where `FACTOR := ('U'|'U*'|'V'|'V*') ('^' INT)?`
/// and `SCALAR := 'e(' sum of rationals and integer multiples of θ ')'`.
/// The word `1` is the empty product.
pub fn parse_word(text: &str) -> Result<RawWord> {
    let mut p = Parser { src: text, pos: 0 };
    p.skip_ws();
    let mut scalar = Phase::ONE;
    if p.peek() == Some('e') {
        p.bump();
        p.expect('(')?;
        scalar = p.phase_expr()?;
        p.expect(')')?;
    }
    let mut letters = Vec::new();
    let mut saw_one = false;
    loop {
        p.skip_ws();
        let start = p.pos;
        let base = match p.peek() {
            None => break,
            Some('1') if letters.is_empty() && !saw_one => {
                p.bump();
                saw_one = true;
                continue;
            }
            Some('U') => Letter::U,
            Some('V') => Letter::V,
            Some(c) => return Err(p.error(start, format!("unexpected '{c}'"))),
        };
        if saw_one {
            return Err(p.error(start, "'1' cannot be followed by letters".into()));
        }
        p.bump();
        let letter = if p.peek() == Some('*') {
            p.bump();
            match base {
                Letter::U => Letter::UStar,
                _ => Letter::VStar,
            }
        } else {
            base
        };
        let exp = if p.peek() == Some('^') {
            p.bump();
            let at = p.pos;
            let e = p.integer()?;
            if e < 0 {
                return Err(p.error(at, "negative exponent".into()));
            }
            e as usize
        } else {
            1
        };
        letters.extend(std::iter::repeat_n(letter, exp));
    }
    if letters.is_empty() && !saw_one && scalar.is_one() && text.trim().is_empty() {
        return Err(Error::Syntax {
            position: 0,
            message: "empty word".into(),
        });
    }
    Ok(RawWord { letters, scalar })
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) {
        if let Some(c) = self.peek() {
            self.pos += c.len_utf8();
        }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn error(&self, position: usize, message: String) -> Error {
        Error::Syntax { position, message }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(self.pos, format!("expected '{c}'")))
        }
    }

    fn integer(&mut self) -> Result<i64> {
        let start = self.pos;
        if self.peek() == Some('-') {
            self.bump();
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        self.src[start..self.pos]
            .parse()
            .map_err(|_| self.error(start, "expected an integer".into()))
    }

    fn theta_symbol(&mut self) -> bool {
        let rest = &self.src[self.pos..];
        for sym in ["θ", "theta"] {
            if rest.starts_with(sym) {
                self.pos += sym.len();
                return true;
            }
        }
        false
    }

    /// term (('+'|'-') term)*
    fn phase_expr(&mut self) -> Result<Phase> {
        let mut acc = Phase::ONE;
        let mut sign = 1i64;
        self.skip_ws();
        if self.peek() == Some('-') {
            self.bump();
            sign = -1;
        }
        loop {
            self.skip_ws();
            let start = self.pos;
            let term = if self.theta_symbol() {
                Phase::theta(sign)
            } else if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                let n = self.integer()?;
                self.skip_ws();
                if self.peek() == Some('/') {
                    self.bump();
                    self.skip_ws();
                    let at = self.pos;
                    let d = self.integer()?;
                    if d <= 0 {
                        return Err(self.error(at, "denominator must be positive".into()));
                    }
                    Phase::rational(Q::new(sign * n, d))
                } else {
                    if self.peek() == Some('*') {
                        self.bump();
                        self.skip_ws();
                    }
                    if self.theta_symbol() {
                        Phase::theta(sign * n)
                    } else {
                        Phase::rational(Q::from_integer(sign * n))
                    }
                }
            } else {
                return Err(self.error(start, "expected a rational or θ".into()));
            };
            acc = acc.mul(term);
            self.skip_ws();
            match self.peek() {
                Some('+') => sign = 1,
                Some('-') => sign = -1,
                _ => return Ok(acc),
            }
            self.bump();
        }
    }
}

/// Basis index of `(n, k)` in `ℂ^{N+1} ⊗ ℂ^{2M+1}`, `k ∈ [−M, M]`.
fn index(n: usize, k: i64, m_cut: usize) -> usize {
    n * (2 * m_cut + 1) + (k + m_cut as i64) as usize
}

/// Applies one letter to the basis vector `(n, k)`.
fn act(
    letter: Letter,
    n: usize,
    k: i64,
    theta: f64,
    n_cut: usize,
    m_cut: i64,
) -> Option<(usize, i64, Complex64)> {
    match letter {
        Letter::U => (k < m_cut).then(|| {
            (
                n,
                k + 1,
                Complex64::from_polar(1.0, 2.0 * PI * n as f64 * theta),
            )
        }),
        Letter::UStar => (k > -m_cut).then(|| {
            (
                n,
                k - 1,
                Complex64::from_polar(1.0, -2.0 * PI * n as f64 * theta),
            )
        }),
        Letter::V => (n < n_cut).then(|| (n + 1, k, Complex64::new(1.0, 0.0))),
        Letter::VStar => (n > 0).then(|| (n - 1, k, Complex64::new(1.0, 0.0))),
    }
}

/// Matrix of a word: `U` multiplies block `n` by `e^{2πinθ}` and shifts the
/// Fourier mode `k ↦ k+1`; `V` shifts `n ↦ n+1`. Both are truncated.
pub fn eval_word(
    word: &RawWord,
    angle: Angle,
    n_cut: usize,
    m_cut: usize,
) -> Result<ComplexMatrix> {
    if n_cut < 2 || m_cut < 2 {
        return Err(Error::InvalidArgument("cutoffs must be at least 2".into()));
    }
    let side = (n_cut + 1) * (2 * m_cut + 1);
    if side > crate::operator::MAX_DIM {
        return Err(Error::BudgetExceeded {
            what: "word matrix dimension",
            needed: side as u128,
            limit: crate::operator::MAX_DIM as u128,
        });
    }
    let mut out = ComplexMatrix::zeros(side, side);
    for col in 0..side {
        if let Some((row, c)) = apply_word(word, angle, n_cut, m_cut, col) {
            out[(row, col)] += c;
        }
    }
    Ok(out)
}

/// Image of the basis vector `col` under the truncated word: a single basis
/// vector with a coefficient, or `None` when a truncation kills it.
pub fn apply_word(
    word: &RawWord,
    angle: Angle,
    n_cut: usize,
    m_cut: usize,
    col: usize,
) -> Option<(usize, Complex64)> {
    let width = 2 * m_cut + 1;
    let (n, k) = (col / width, (col % width) as i64 - m_cut as i64);
    if n > n_cut {
        return None;
    }
    let theta = angle.value();
    let start = (n, k, word.scalar.value(angle));
    let (nn, kk, c) = word
        .letters
        .iter()
        .rev()
        .try_fold(start, |(nn, kk, c), &letter| {
            act(letter, nn, kk, theta, n_cut, m_cut as i64).map(|(a, b, z)| (a, b, c * z))
        })?;
    Some((index(nn, kk, m_cut), c))
}

pub fn eval_monomial(
    m: &Monomial,
    angle: Angle,
    n_cut: usize,
    m_cut: usize,
) -> Result<ComplexMatrix> {
    eval_word(&m.to_raw(), angle, n_cut, m_cut)
}

/// Basis indices with `n ∈ n_lo..=n_hi` and `|k| ≤ k_max`.
pub fn interior_columns(n_lo: usize, n_hi: usize, k_max: usize, m_cut: usize) -> Vec<usize> {
    (n_lo..=n_hi)
        .flat_map(|n| (-(k_max as i64)..=k_max as i64).map(move |k| index(n, k, m_cut)))
        .collect()
}
