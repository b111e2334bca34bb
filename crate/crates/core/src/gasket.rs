//! Sierpiński gasket: cells and oriented edges, the coverings `p` and `φ`,
//! edge difference quotients and the level counting of the edge Dirac.
//!
//! Points are stored in the lattice basis `(1, 0)`, `(1/2, √3/2)`, where
//! every vertex and every rotation by a multiple of 120° is dyadic-exact.

use std::io::Write;
use std::ops::{Add, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::ComplexMatrix;
use crate::spectral::{nat_spectrum, tensor_spectrum, WeightedSpectrum};

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// Depth of the address search used for membership.
pub const MEMBERSHIP_DEPTH: u32 = 24;
/// Tolerance of membership tests at the outermost level.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Branch values closer than this are treated as equal.
pub const BRANCH_TOL: f64 = 1e-12;
/// Largest edge list [`enumerate_edges`] will build.
pub const EDGE_BUDGET: u128 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatticePoint {
    pub a: f64,
    pub b: f64,
}

impl LatticePoint {
    pub const fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn from_cartesian(x: f64, y: f64) -> Self {
        let b = y / SQRT3_2;
        Self { a: x - b / 2.0, b }
    }

    pub fn cartesian(self) -> [f64; 2] {
        [self.a + self.b / 2.0, self.b * SQRT3_2]
    }

    pub fn scale(self, c: f64) -> Self {
        Self {
            a: c * self.a,
            b: c * self.b,
        }
    }

    /// Euclidean distance.
    pub fn dist(self, o: Self) -> f64 {
        let [x, y] = self.sub(o).cartesian();
        x.hypot(y)
    }

    /// Counter-clockwise rotation by `turns·120°` about `center`.
    pub fn rotate(self, center: Self, turns: u32) -> Self {
        let mut d = self.sub(center);
        for _ in 0..turns % 3 {
            d = Self {
                a: -d.a - d.b,
                b: d.a,
            };
        }
        center.add(d)
    }
}

/// `v₀ = (0,0)`, `v₁` the apex, `v₂ = (1,0)`.
impl Add for LatticePoint {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            a: self.a + o.a,
            b: self.b + o.b,
        }
    }
}

impl Sub for LatticePoint {
    type Output = Self;

    fn sub(self, o: Self) -> Self {
        Self {
            a: self.a - o.a,
            b: self.b - o.b,
        }
    }
}

pub const VERTICES: [LatticePoint; 3] = [
    LatticePoint::new(0.0, 0.0),
    LatticePoint::new(0.0, 1.0),
    LatticePoint::new(1.0, 0.0),
];

/// `w_j(x) = v_j + (x − v_j)/2`.
pub fn ifs_map(j: usize, x: LatticePoint) -> LatticePoint {
    x.add(VERTICES[j]).scale(0.5)
}

/// `w₀ⁿ` for `n ≥ 0`, `w₀^{−n}` for negative `n`.
pub fn w0_power(n: i32, x: LatticePoint) -> LatticePoint {
    x.scale(2f64.powi(-n))
}

/// The point `w_{i₁}∘…∘w_{i_k}(v_corner)`.
pub fn address_point(word: &[u8], corner: usize) -> LatticePoint {
    word.iter()
        .rev()
        .fold(VERTICES[corner], |x, &j| ifs_map(j as usize, x))
}

fn in_triangle(x: LatticePoint, tol: f64) -> bool {
    x.a >= -tol && x.b >= -tol && x.a + x.b <= 1.0 + tol
}

fn in_gasket_rec(x: LatticePoint, depth: u32, tol: f64) -> bool {
    if !in_triangle(x, tol) {
        return false;
    }
    if depth == 0 {
        return true;
    }
    (0..3).any(|j| {
        let y = x.scale(2.0).sub(VERTICES[j]);
        in_triangle(y, 2.0 * tol) && in_gasket_rec(y, depth - 1, 2.0 * tol)
    })
}

/// Membership in `K_n = w₀^{−n}K` by address decomposition.
pub fn in_gasket(x: LatticePoint, level: u32) -> bool {
    in_gasket_rec(w0_power(level as i32, x), MEMBERSHIP_DEPTH, MEMBERSHIP_TOL)
}

fn pick_branch(
    candidates: impl Iterator<Item = LatticePoint>,
    x: LatticePoint,
) -> Result<LatticePoint> {
    let values: Vec<LatticePoint> = candidates.collect();
    let first = *values
        .first()
        .ok_or_else(|| Error::OutsideDomain(format!("({}, {}) lies in no branch", x.a, x.b)))?;
    if let Some(bad) = values.iter().find(|v| v.dist(first) > BRANCH_TOL) {
        return Err(Error::Consistency(format!(
            "branches disagree at ({}, {}): ({}, {}) vs ({}, {})",
            x.a, x.b, first.a, first.b, bad.a, bad.b
        )));
    }
    Ok(first)
}

/// Branch `j` of `K₁ → K`: the identity on `K`, and on `v_j + K` the
/// rotation about `v_j` folding that copy onto `K`.
fn fold_branch(j: usize, x: LatticePoint) -> LatticePoint {
    match j {
        0 => x,
        1 => x.rotate(VERTICES[1], 2),
        _ => x.rotate(VERTICES[2], 1),
    }
}

/// The covering `p: K₁ → K`.
pub fn covering_p(x: LatticePoint) -> Result<LatticePoint> {
    pick_branch(
        (0..3)
            .filter(|&j| in_gasket(x.sub(VERTICES[j]), 0))
            .map(|j| fold_branch(j, x)),
        x,
    )
}

/// The self-covering `φ: K → K`, decided on the cells `w_j(K)`.
pub fn covering_phi(x: LatticePoint) -> Result<LatticePoint> {
    pick_branch(
        (0..3)
            .filter(|&j| in_gasket(x.scale(2.0).sub(VERTICES[j]), 0))
            .map(|j| fold_branch(j, x.scale(2.0))),
        x,
    )
}

/// `p_n = w₀^{−(n−1)}∘p∘w₀^{n−1}: K_n → K_{n−1}`, `n ≥ 1`.
pub fn covering_p_level(n: u32, x: LatticePoint) -> Result<LatticePoint> {
    if n == 0 {
        return Err(Error::InvalidArgument("p_n needs n ≥ 1".into()));
    }
    let k = n as i32 - 1;
    Ok(w0_power(-k, covering_p(w0_power(k, x))?))
}

/// `φ_n = w₀^{−n}∘φ∘w₀ⁿ: K_n → K_n`.
pub fn covering_phi_level(n: u32, x: LatticePoint) -> Result<LatticePoint> {
    let k = n as i32;
    Ok(w0_power(-k, covering_phi(w0_power(k, x))?))
}

/// `p_{m+1}∘…∘p_L: K_L → K_m`.
pub fn covering_chain(m: u32, level: u32, x: LatticePoint) -> Result<LatticePoint> {
    (m + 1..=level)
        .rev()
        .try_fold(x, |y, n| covering_p_level(n, y))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoveringReport {
    pub samples: usize,
    /// `max |p(x) − φ(w₀x)|` over `x ∈ K₁`.
    pub identity_defect: f64,
    /// `max |p_n∘φ_n(x) − φ_{n−1}∘p_n(x)|` over `x ∈ K_n`, for `n = 1..`.
    pub diagram_defects: Vec<f64>,
}

impl CoveringReport {
    pub fn max_defect(&self) -> f64 {
        self.diagram_defects
            .iter()
            .copied()
            .fold(self.identity_defect, f64::max)
    }
}

/// Checks the covering identities on points of `K`, rescaled to each level.
pub fn covering_check(points: &[LatticePoint], n_max: u32) -> Result<CoveringReport> {
    let mut identity_defect = 0.0f64;
    let mut diagram_defects = vec![0.0f64; n_max as usize];
    for &pt in points {
        let x = w0_power(-1, pt);
        identity_defect = identity_defect.max(covering_p(x)?.dist(covering_phi(pt)?));
        for n in 1..=n_max {
            let x = w0_power(-(n as i32), pt);
            let lhs = covering_p_level(n, covering_phi_level(n, x)?)?;
            let rhs = covering_phi_level(n - 1, covering_p_level(n, x)?)?;
            let slot = &mut diagram_defects[n as usize - 1];
            *slot = slot.max(lhs.dist(rhs));
        }
    }
    Ok(CoveringReport {
        samples: points.len(),
        identity_defect,
        diagram_defects,
    })
}

/// Oriented edge `w_word(v_i) → w_word(v_j)` of `K_N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub word: Vec<u8>,
    pub i: u8,
    pub j: u8,
    pub src: LatticePoint,
    pub dst: LatticePoint,
    pub length: f64,
}

impl Edge {
    pub fn reversed(&self) -> Self {
        Self {
            i: self.j,
            j: self.i,
            src: self.dst,
            dst: self.src,
            ..self.clone()
        }
    }
}

/// Number of oriented edges of `K_N` with length at least `2^{−m}`.
pub fn edge_count(out_level: u32, depth: u32) -> u128 {
    (0..=out_level + depth).map(|l| 6 * 3u128.pow(l)).sum()
}

/// All oriented edges of `K_N` of length `2^{N−ℓ}`, `ℓ = 0..=N+m`.
pub fn enumerate_edges(out_level: u32, depth: u32) -> Result<Vec<Edge>> {
    let needed = edge_count(out_level, depth);
    if needed > EDGE_BUDGET {
        return Err(Error::BudgetExceeded {
            what: "gasket edges",
            needed,
            limit: EDGE_BUDGET,
        });
    }
    let mut edges = Vec::with_capacity(needed as usize);
    let outer = 2f64.powi(out_level as i32);
    let mut stack = vec![(Vec::<u8>::new(), LatticePoint::new(0.0, 0.0), 1.0f64)];
    while let Some((word, origin, size)) = stack.pop() {
        let corner = |v: usize| origin.add(VERTICES[v].scale(size)).scale(outer);
        for i in 0..3u8 {
            for j in (0..3u8).filter(|&j| j != i) {
                edges.push(Edge {
                    word: word.clone(),
                    i,
                    j,
                    src: corner(i as usize),
                    dst: corner(j as usize),
                    length: outer * size,
                });
            }
        }
        if word.len() < (out_level + depth) as usize {
            for c in (0..3u8).rev() {
                let mut w = word.clone();
                w.push(c);
                stack.push((
                    w,
                    origin.add(VERTICES[c as usize].scale(size / 2.0)),
                    size / 2.0,
                ));
            }
        }
    }
    Ok(edges)
}

/// CSV with columns `word,i,j,x_src,y_src,x_dst,y_dst,length`.
pub fn write_edges_csv<W: Write>(edges: &[Edge], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let fmt = |e: csv::Error| Error::Format(e.to_string());
    w.write_record([
        "word", "i", "j", "x_src", "y_src", "x_dst", "y_dst", "length",
    ])
    .map_err(fmt)?;
    for e in edges {
        let word: String = e.word.iter().map(|d| char::from(b'0' + d)).collect();
        let [xs, ys] = e.src.cartesian();
        let [xd, yd] = e.dst.cartesian();
        w.write_record([
            word,
            e.i.to_string(),
            e.j.to_string(),
            format!("{xs:.16e}"),
            format!("{ys:.16e}"),
            format!("{xd:.16e}"),
            format!("{yd:.16e}"),
            format!("{:.16e}", e.length),
        ])
        .map_err(fmt)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

/// Real function of Cartesian coordinates.
#[derive(Clone)]
pub struct GasketFunction {
    label: String,
    eval: Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for GasketFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GasketFunction")
            .field("label", &self.label)
            .finish()
    }
}

impl GasketFunction {
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn x_coordinate() -> Self {
        Self::new("x", |p| p[0])
    }

    pub fn y_coordinate() -> Self {
        Self::new("y", |p| p[1])
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: LatticePoint) -> f64 {
        (self.eval)(x.cartesian())
    }

    /// `f∘w₀^k`.
    pub fn pullback_w0(&self, k: u32) -> Self {
        let inner = Arc::clone(&self.eval);
        let c = 2f64.powi(-(k as i32));
        Self::new(format!("{}∘w0^{k}", self.label), move |p| {
            inner([c * p[0], c * p[1]])
        })
    }

    /// `f∘p_{m+1}∘…∘p_L`, defined on `K_L`; panics outside the domain.
    pub fn pullback_chain(&self, m: u32, level: u32) -> Self {
        let inner = Arc::clone(&self.eval);
        Self::new(format!("{}∘p[{m}..{level}]", self.label), move |p| {
            let x = LatticePoint::from_cartesian(p[0], p[1]);
            let y = covering_chain(m, level, x).expect("point outside K_L");
            inner(y.cartesian())
        })
    }
}

/// `max_e |f(e⁺) − f(e⁻)| / l(e)`.
pub fn edge_commutator_norm(f: &GasketFunction, edges: &[Edge]) -> f64 {
    edges
        .iter()
        .map(|e| (f.eval(e.dst) - f.eval(e.src)).abs() / e.length)
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GasketScalingReport {
    pub function: String,
    pub k: u32,
    pub pulled_norm: f64,
    pub base_norm: f64,
    pub ratio: f64,
    pub expected: f64,
    pub passed: bool,
}

/// `‖[D, f∘w₀^k]‖` on edges of depth `m` against `‖[D, f]‖` on depth `m − k`.
pub fn pullback_scaling_check(
    f: &GasketFunction,
    k: u32,
    out_level: u32,
    depth: u32,
) -> Result<GasketScalingReport> {
    if k > depth {
        return Err(Error::InvalidArgument(format!(
            "shift {k} exceeds depth {depth}"
        )));
    }
    let pulled_norm = edge_commutator_norm(&f.pullback_w0(k), &enumerate_edges(out_level, depth)?);
    let base_norm = edge_commutator_norm(f, &enumerate_edges(out_level, depth - k)?);
    let ratio = pulled_norm / base_norm;
    let expected = 2f64.powi(-(k as i32));
    Ok(GasketScalingReport {
        function: f.label().to_owned(),
        k,
        pulled_norm,
        base_norm,
        ratio,
        expected,
        passed: (ratio - expected).abs() <= 1e-12,
    })
}

/// `{(2^{−j}, 6·3^{N−j}) : j = −m..N}`.
pub fn gasket_spectrum(out_level: u32, depth: u32) -> Result<WeightedSpectrum> {
    let points = (-(depth as i32)..=out_level as i32)
        .map(|j| (2f64.powi(-j), 6.0 * 3f64.powi(out_level as i32 - j)))
        .collect();
    Ok(
        WeightedSpectrum::new(points, format!("gasket(N={out_level},m={depth})"))?
            .with_exact_below(2f64.powi(depth as i32 + 1)),
    )
}

pub fn crossed_gasket_spectrum(
    out_level: u32,
    depth: u32,
    nat_cutoff: usize,
) -> Result<WeightedSpectrum> {
    tensor_spectrum(
        &gasket_spectrum(out_level, depth)?,
        &nat_spectrum(nat_cutoff)?,
    )
}

fn sample_diag(f: &GasketFunction, points: &[LatticePoint]) -> ComplexMatrix {
    ComplexMatrix::diag(
        &points
            .iter()
            .map(|&x| Complex64::new(f.eval(x), 0.0))
            .collect::<Vec<_>>(),
    )
}

/// Blocks `π(α⁻ⁿ(f))` and `π(α⁻ⁿ(α(f)))` for `f ∈ C(K)`, `n = 0..=N`:
/// `α⁻ⁿ(f) = f∘w₀ⁿ` on `K_n`, `α(f) = f∘φ`, and every level is evaluated
/// on `points ⊂ K_L` through the covering chain down to its own level.
pub fn covariant_blocks(
    f: &GasketFunction,
    n_max: u32,
    level: u32,
    points: &[LatticePoint],
) -> Result<(Vec<ComplexMatrix>, Vec<ComplexMatrix>)> {
    if level < n_max {
        return Err(Error::InvalidArgument(format!(
            "sample level {level} below cutoff {n_max}"
        )));
    }
    if let Some(x) = points.iter().find(|&&x| !in_gasket(x, level)) {
        return Err(Error::OutsideDomain(format!(
            "({}, {}) not in K_{level}",
            x.a, x.b
        )));
    }
    let inner = f.clone();
    let alpha_f = GasketFunction::new(format!("{}∘φ", f.label()), move |p| {
        let x = LatticePoint::from_cartesian(p[0], p[1]);
        inner.eval(covering_phi(x).expect("point outside K"))
    });
    let mut blocks = Vec::with_capacity(n_max as usize + 1);
    let mut blocks_alpha = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        blocks.push(sample_diag(
            &f.pullback_w0(n).pullback_chain(n, level),
            points,
        ));
        blocks_alpha.push(sample_diag(
            &alpha_f.pullback_w0(n).pullback_chain(n, level),
            points,
        ));
    }
    Ok((blocks, blocks_alpha))
}
