//! Problem encodings: variable layout, the convex set `C₀`, the quadratic
//! family `P_F`, the objective and the recovery rule.
//!
//! Row orders are fixed per formulation and documented on each builder.
//! Equality constraints are kept as equality rows.

use serde::Serialize;

use crate::cone::PolyhedralCone;
use crate::error::{Error, Result};
use crate::instance::{patterns, verify_solution, LcpInstance};
use crate::lp::scalar::{self, Scalar};
use crate::polytope::FacetList;
use crate::quadratic::QuadraticFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulationKind {
    BigM,
    MipAlpha,
    LcpAlpha,
    LcpAlphaImplicit,
    CpAlpha,
}

impl FormulationKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::BigM => "big_m",
            Self::MipAlpha => "mip_alpha",
            Self::LcpAlpha => "lcp_alpha",
            Self::LcpAlphaImplicit => "lcp_alpha_implicit",
            Self::CpAlpha => "cp_alpha",
        }
    }

    /// Whether the layout carries binary coordinates (`m < n`).
    pub fn has_binaries(self) -> bool {
        matches!(self, Self::BigM | Self::MipAlpha)
    }
}

impl std::str::FromStr for FormulationKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "big_m" | "bigm" => Ok(Self::BigM),
            "mip_alpha" => Ok(Self::MipAlpha),
            "lcp_alpha" | "lcp_alpha_explicit" => Ok(Self::LcpAlpha),
            "lcp_alpha_implicit" => Ok(Self::LcpAlphaImplicit),
            "cp_alpha" => Ok(Self::CpAlpha),
            other => Err(format!("unknown formulation {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub name: &'static str,
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VariableLayout {
    pub blocks: Vec<Block>,
    /// Coordinates `m..n` (zero-based) are the binary ones.
    pub m: usize,
    pub n: usize,
}

impl VariableLayout {
    fn new(spec: &[(&'static str, usize)], m: usize) -> Self {
        let mut blocks = Vec::new();
        let mut start = 0;
        for &(name, len) in spec {
            blocks.push(Block { name, start, len });
            start += len;
        }
        Self {
            blocks,
            m,
            n: start,
        }
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn index(&self, name: &str, i: usize) -> usize {
        let b = self
            .block(name)
            .unwrap_or_else(|| panic!("no block {name}"));
        assert!(i < b.len);
        b.start + i
    }

    pub fn binaries(&self) -> std::ops::Range<usize> {
        self.m..self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Recovery {
    None,
    DivideByAlpha,
    StripZ,
}

/// `coef·v + constant`; homogenized as `coef·v + constant·λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm<T = f64> {
    pub coef: Vec<T>,
    pub constant: T,
}

impl<T: Scalar> AffineForm<T> {
    pub fn eval(&self, v: &[T]) -> T {
        scalar::dot(&self.coef, v) + self.constant.clone()
    }
}

/// How `F` splits into polyhedral pieces inside `C₀`.
#[derive(Debug, Clone, PartialEq)]
pub enum Disjunction<T = f64> {
    /// Each listed coordinate is 0 or 1.
    Binary(Vec<usize>),
    /// For each `i`, `x_i(v) = 0` or `s_i(v) = 0`.
    Complementarity,
    /// For each facet subset `S`: `b_kᵀx = 0` for `k ∈ S` and
    /// `s ∈ cone(b_k : k ∈ S)`.
    ConeFaces { facets: Vec<Vec<T>> },
}

/// One polyhedral piece of `F`, possibly with auxiliary variables appended
/// after the bundle's `n` coordinates.
#[derive(Debug, Clone)]
pub struct Piece<T = f64> {
    pub label: Vec<u8>,
    pub facets: FacetList<T>,
}

#[derive(Debug, Clone)]
pub struct FormulationBundle<T = f64> {
    pub kind: FormulationKind,
    pub layout: VariableLayout,
    pub c0: FacetList<T>,
    pub pf: Vec<QuadraticFunction>,
    pub objective: Vec<T>,
    pub recovery: Recovery,
    /// `x_i` and `s_i` as affine functions of `v`.
    pub x_forms: Vec<AffineForm<T>>,
    pub s_forms: Vec<AffineForm<T>>,
    pub disjunction: Disjunction<T>,
    /// Problem data `(A, q)` for recovery; `A = M` for LCPs.
    pub data_a: Vec<Vec<f64>>,
    pub data_q: Vec<f64>,
    pub cone: Option<PolyhedralCone>,
}

fn unit<T: Scalar>(n: usize, i: usize, s: T) -> Vec<T> {
    FacetList::unit(n, i, s)
}

fn binary_pf(n: usize, coords: impl Iterator<Item = usize>) -> Vec<QuadraticFunction> {
    let mut pf = Vec::new();
    for i in coords {
        let mut q = vec![0.0; n];
        let mut qm = vec![vec![0.0; n]; n];
        // v_i² - v_i and -v_i² + v_i
        q[i] = -0.5;
        qm[i][i] = 1.0;
        pf.push(QuadraticFunction::new(0.0, q.clone(), qm.clone()));
        q[i] = 0.5;
        qm[i][i] = -1.0;
        pf.push(QuadraticFunction::new(0.0, q, qm));
    }
    pf
}

/// `(η̄ + Aᵀη, ηᵀq + 1)`: coefficients of `η̄ᵀx + ηᵀ(Ax + qα) + α ≤ 1`.
pub fn normalization_row<T: Scalar>(
    eta_bar: &[T],
    eta: &[T],
    a: &[Vec<T>],
    q: &[T],
) -> (Vec<T>, T) {
    let ell = q.len();
    let x = (0..ell)
        .map(|j| {
            (0..ell).fold(eta_bar[j].clone(), |acc, i| {
                acc + eta[i].clone() * a[i][j].clone()
            })
        })
        .collect();
    (x, scalar::dot(eta, q) + T::one())
}

/// Variables `(x, z)`, `m = ℓ`, `n = 2ℓ`. Rows per index `i`, in order:
/// `-(Mx+q)_i ≤ 0`, `(Mx+q)_i + r z_i ≤ r`, `-z_i ≤ 0`, `z_i ≤ 1`,
/// `-x_i ≤ 0`, `x_i - r z_i ≤ 0`.
pub fn build_big_m<T: Scalar>(inst: &LcpInstance, r: f64) -> Result<FormulationBundle<T>> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Formulation(format!(
            "radius must be positive, got {r}"
        )));
    }
    let ell = inst.ell;
    let layout = VariableLayout::new(&[("x", ell), ("z", ell)], ell);
    let n = layout.n;
    let m: Vec<Vec<T>> = inst.m_as();
    let q: Vec<T> = inst.q_as();
    let rr = T::from_f64(r);
    let mut c0 = FacetList::new(n);
    let mx_row = |i: usize, sign: T| -> Vec<T> {
        let mut row = vec![T::zero(); n];
        for j in 0..ell {
            row[j] = sign.clone() * m[i][j].clone();
        }
        row
    };
    for i in 0..ell {
        c0.push_le(mx_row(i, -T::one()), q[i].clone());
        let mut row = mx_row(i, T::one());
        row[ell + i] = rr.clone();
        c0.push_le(row, rr.clone() - q[i].clone());
        c0.push_le(unit(n, ell + i, -T::one()), T::zero());
        c0.push_le(unit(n, ell + i, T::one()), T::one());
        c0.push_le(unit(n, i, -T::one()), T::zero());
        let mut row = unit(n, i, T::one());
        row[ell + i] = -rr.clone();
        c0.push_le(row, T::zero());
    }
    let x_forms = (0..ell)
        .map(|i| AffineForm {
            coef: unit(n, i, T::one()),
            constant: T::zero(),
        })
        .collect();
    let s_forms = (0..ell)
        .map(|i| AffineForm {
            coef: mx_row(i, T::one()),
            constant: q[i].clone(),
        })
        .collect();
    Ok(FormulationBundle {
        kind: FormulationKind::BigM,
        pf: binary_pf(n, layout.binaries()),
        disjunction: Disjunction::Binary(layout.binaries().collect()),
        layout,
        c0,
        objective: vec![T::zero(); n],
        recovery: Recovery::StripZ,
        x_forms,
        s_forms,
        data_a: inst.m.clone(),
        data_q: inst.q.clone(),
        cone: None,
    })
}

/// Variables `(α, x, z)`, `m = ℓ+1`, `n = 2ℓ+1`. Rows per index `i`:
/// `-(Mx+qα)_i ≤ 0`, `(Mx+qα)_i + z_i ≤ 1`, `-x_i ≤ 0`, `x_i - z_i ≤ 0`;
/// then `-α ≤ 0`, `α ≤ 1`. With `normalized`, the row
/// `eᵀ(M+I)x + (eᵀq+1)α ≤ 1` is appended, which places the `(x, α)`
/// projection of `C₀` inside the `C₀` of [`build_lcp_alpha`].
pub fn build_mip_alpha<T: Scalar>(inst: &LcpInstance, normalized: bool) -> FormulationBundle<T> {
    let ell = inst.ell;
    let layout = VariableLayout::new(&[("alpha", 1), ("x", ell), ("z", ell)], ell + 1);
    let n = layout.n;
    let m: Vec<Vec<T>> = inst.m_as();
    let q: Vec<T> = inst.q_as();
    let s_row = |i: usize| -> Vec<T> {
        let mut row = vec![T::zero(); n];
        row[0] = q[i].clone();
        row[1..=ell].clone_from_slice(&m[i][..ell]);
        row
    };
    let mut c0 = FacetList::new(n);
    for i in 0..ell {
        c0.push_le(s_row(i).into_iter().map(|v| -v).collect(), T::zero());
        let mut row = s_row(i);
        row[1 + ell + i] = T::one();
        c0.push_le(row, T::one());
        c0.push_le(unit(n, 1 + i, -T::one()), T::zero());
        let mut row = unit(n, 1 + i, T::one());
        row[1 + ell + i] = -T::one();
        c0.push_le(row, T::zero());
    }
    c0.push_le(unit(n, 0, -T::one()), T::zero());
    c0.push_le(unit(n, 0, T::one()), T::one());
    if normalized {
        let e = vec![T::one(); ell];
        let (cx, ca) = normalization_row(&e, &e, &m, &q);
        let mut row = vec![T::zero(); n];
        row[0] = ca;
        row[1..=ell].clone_from_slice(&cx);
        c0.push_le(row, T::one());
    }
    let x_forms = (0..ell)
        .map(|i| AffineForm {
            coef: unit(n, 1 + i, T::one()),
            constant: T::zero(),
        })
        .collect();
    let s_forms = (0..ell)
        .map(|i| AffineForm {
            coef: s_row(i),
            constant: T::zero(),
        })
        .collect();
    FormulationBundle {
        kind: FormulationKind::MipAlpha,
        pf: binary_pf(n, layout.binaries()),
        disjunction: Disjunction::Binary(layout.binaries().collect()),
        layout,
        c0,
        objective: unit(n, 0, T::one()),
        recovery: Recovery::DivideByAlpha,
        x_forms,
        s_forms,
        data_a: inst.m.clone(),
        data_q: inst.q.clone(),
        cone: None,
    }
}

/// With `explicit_s`: variables `(x, s, α)` with equality rows
/// `s_i - (Mx+qα)_i = 0`, then rows `-s ≤ 0`, `-x ≤ 0`, `-α ≤ 0` and the
/// normalization `eᵀ(M+I)x + (eᵀq+1)α ≤ 1`; `P_F` is empty.
///
/// Otherwise variables `(α, x)` with rows `-x ≤ 0`, `-(Mx+qα) ≤ 0`,
/// `-α ≤ 0` and the normalization, and `P_F = {x_i(Mx+qα)_i ≤ 0}`.
pub fn build_lcp_alpha<T: Scalar>(inst: &LcpInstance, explicit_s: bool) -> FormulationBundle<T> {
    if explicit_s {
        build_lcp_alpha_explicit(inst)
    } else {
        let ell = inst.ell;
        let mut b = build_cp_rows(
            &PolyhedralCone::orthant(ell),
            &inst.m,
            &inst.q,
            &vec![1.0; ell],
            &vec![1.0; ell],
        );
        b.kind = FormulationKind::LcpAlphaImplicit;
        b.disjunction = Disjunction::Complementarity;
        b.pf = complementarity_pf(&inst.m, &inst.q, false);
        b.cone = None;
        b
    }
}

fn build_lcp_alpha_explicit<T: Scalar>(inst: &LcpInstance) -> FormulationBundle<T> {
    let ell = inst.ell;
    let layout = VariableLayout::new(&[("x", ell), ("s", ell), ("alpha", 1)], 2 * ell + 1);
    let n = layout.n;
    let m: Vec<Vec<T>> = inst.m_as();
    let q: Vec<T> = inst.q_as();
    let alpha = 2 * ell;
    let mut c0 = FacetList::new(n);
    for i in 0..ell {
        let mut row = vec![T::zero(); n];
        row[ell + i] = T::one();
        for j in 0..ell {
            row[j] = -m[i][j].clone();
        }
        row[alpha] = -q[i].clone();
        c0.push_eq(row, T::zero());
    }
    for i in 0..ell {
        c0.push_le(unit(n, ell + i, -T::one()), T::zero());
    }
    for i in 0..ell {
        c0.push_le(unit(n, i, -T::one()), T::zero());
    }
    c0.push_le(unit(n, alpha, -T::one()), T::zero());
    let e = vec![T::one(); ell];
    let (cx, ca) = normalization_row(&e, &e, &m, &q);
    let mut row = vec![T::zero(); n];
    row[..ell].clone_from_slice(&cx);
    row[alpha] = ca;
    c0.push_le(row, T::one());
    let x_forms = (0..ell)
        .map(|i| AffineForm {
            coef: unit(n, i, T::one()),
            constant: T::zero(),
        })
        .collect();
    let s_forms = (0..ell)
        .map(|i| AffineForm {
            coef: unit(n, ell + i, T::one()),
            constant: T::zero(),
        })
        .collect();
    FormulationBundle {
        kind: FormulationKind::LcpAlpha,
        layout,
        c0,
        pf: Vec::new(),
        objective: unit(n, alpha, T::one()),
        recovery: Recovery::DivideByAlpha,
        x_forms,
        s_forms,
        disjunction: Disjunction::Complementarity,
        data_a: inst.m.clone(),
        data_q: inst.q.clone(),
        cone: None,
    }
}

/// Per-index terms `x_i(Ax + qα)_i` over `(α, x)`, or with `both` the
/// signed pair `±⟨x, Ax + qα⟩`.
fn complementarity_pf(a: &[Vec<f64>], q: &[f64], both: bool) -> Vec<QuadraticFunction> {
    let ell = q.len();
    let n = ell + 1;
    let term = |i: usize| {
        let mut qm = vec![vec![0.0; n]; n];
        for j in 0..ell {
            qm[1 + i][1 + j] += 0.5 * a[i][j];
            qm[1 + j][1 + i] += 0.5 * a[i][j];
        }
        qm[1 + i][0] += 0.5 * q[i];
        qm[0][1 + i] += 0.5 * q[i];
        qm
    };
    if !both {
        return (0..ell)
            .map(|i| QuadraticFunction::new(0.0, vec![0.0; n], term(i)))
            .collect();
    }
    let mut total = vec![vec![0.0; n]; n];
    for i in 0..ell {
        let t = term(i);
        for r in 0..n {
            for c in 0..n {
                total[r][c] += t[r][c];
            }
        }
    }
    let neg = total
        .iter()
        .map(|r| r.iter().map(|v| -v).collect())
        .collect();
    vec![
        QuadraticFunction::new(0.0, vec![0.0; n], total),
        QuadraticFunction::new(0.0, vec![0.0; n], neg),
    ]
}

/// Variables `(α, x)`. Rows: `-Bx ≤ 0`, `-Gᵀ(Ax+qα) ≤ 0`, `-α ≤ 0`, then
/// `η̄ᵀx + ηᵀ(Ax+qα) + α ≤ 1`.
fn build_cp_rows<T: Scalar>(
    cone: &PolyhedralCone,
    a: &[Vec<f64>],
    q: &[f64],
    eta: &[f64],
    eta_bar: &[f64],
) -> FormulationBundle<T> {
    let ell = q.len();
    let layout = VariableLayout::new(&[("alpha", 1), ("x", ell)], ell + 1);
    let n = layout.n;
    let at: Vec<Vec<T>> = a
        .iter()
        .map(|r| r.iter().map(|&v| T::from_f64(v)).collect())
        .collect();
    let qt: Vec<T> = q.iter().map(|&v| T::from_f64(v)).collect();
    let s_row = |i: usize| -> Vec<T> {
        let mut row = vec![T::zero(); n];
        row[0] = qt[i].clone();
        row[1..=ell].clone_from_slice(&at[i][..ell]);
        row
    };
    let mut c0 = FacetList::new(n);
    for b in &cone.facets {
        let mut row = vec![T::zero(); n];
        for j in 0..ell {
            row[1 + j] = -T::from_f64(b[j]);
        }
        c0.push_le(row, T::zero());
    }
    for g in &cone.generators {
        // -gᵀ(Ax + qα) ≤ 0
        let mut row = vec![T::zero(); n];
        for (i, gi) in g.iter().enumerate() {
            if *gi == 0.0 {
                continue;
            }
            let gi = T::from_f64(*gi);
            for (slot, v) in row.iter_mut().zip(s_row(i)) {
                *slot = slot.clone() - gi.clone() * v;
            }
        }
        c0.push_le(row, T::zero());
    }
    c0.push_le(unit(n, 0, -T::one()), T::zero());
    let eta_t: Vec<T> = eta.iter().map(|&v| T::from_f64(v)).collect();
    let eta_bar_t: Vec<T> = eta_bar.iter().map(|&v| T::from_f64(v)).collect();
    let (cx, ca) = normalization_row(&eta_bar_t, &eta_t, &at, &qt);
    let mut row = vec![T::zero(); n];
    row[0] = ca;
    row[1..].clone_from_slice(&cx);
    c0.push_le(row, T::one());

    let x_forms = (0..ell)
        .map(|i| AffineForm {
            coef: unit(n, 1 + i, T::one()),
            constant: T::zero(),
        })
        .collect();
    let s_forms = (0..ell)
        .map(|i| AffineForm {
            coef: s_row(i),
            constant: T::zero(),
        })
        .collect();
    FormulationBundle {
        kind: FormulationKind::CpAlpha,
        layout,
        c0,
        pf: complementarity_pf(a, q, true),
        objective: unit(n, 0, T::one()),
        recovery: Recovery::DivideByAlpha,
        x_forms,
        s_forms,
        // for the orthant the face pieces are exactly the complementarity
        // patterns, so reuse them and keep the LCP bundle bit for bit
        disjunction: if *cone == PolyhedralCone::orthant(ell) {
            Disjunction::Complementarity
        } else {
            Disjunction::ConeFaces {
                facets: cone
                    .facets
                    .iter()
                    .map(|b| b.iter().map(|&v| T::from_f64(v)).collect())
                    .collect(),
            }
        },
        data_a: a.to_vec(),
        data_q: q.to_vec(),
        cone: Some(cone.clone()),
    }
}

/// Complementarity over a pointed polyhedral cone `K`:
/// `x ∈ K`, `Ax + qα ∈ K*`, `α ≥ 0`, `η̄ᵀx + ηᵀ(Ax+qα) + α ≤ 1` and
/// `P_F = {±⟨x, Ax + qα⟩}`. `η` must be interior to `K` and `η̄` interior
/// to `K*`.
pub fn build_cp_alpha<T: Scalar>(
    cone: &PolyhedralCone,
    a: &[Vec<f64>],
    q: &[f64],
    eta: &[f64],
    eta_bar: &[f64],
) -> Result<FormulationBundle<T>> {
    let ell = cone.dim;
    if q.len() != ell || a.len() != ell || a.iter().any(|r| r.len() != ell) {
        return Err(Error::Formulation("cone and data dimensions differ".into()));
    }
    cone.check()?;
    if cone.interior_margin(eta) < 1e-9 {
        return Err(Error::Cone("eta is not interior to K".into()));
    }
    if cone.dual_interior_margin(eta_bar) < 1e-9 {
        return Err(Error::Cone("eta_bar is not interior to K*".into()));
    }
    Ok(build_cp_rows(cone, a, q, eta, eta_bar))
}

/// A recovered solution pair and whether it passes the membership checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recovered {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub verified: bool,
}

fn affine(a: &[Vec<f64>], q: &[f64], x: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(q)
        .map(|(row, qi)| row.iter().zip(x).map(|(p, r)| p * r).sum::<f64>() + qi)
        .collect()
}

impl<T: Scalar> FormulationBundle<T> {
    pub fn n(&self) -> usize {
        self.layout.n
    }

    pub fn ell(&self) -> usize {
        self.x_forms.len()
    }

    pub fn instance(&self) -> Option<LcpInstance> {
        match self.kind {
            FormulationKind::CpAlpha => None,
            _ => Some(LcpInstance {
                ell: self.ell(),
                m: self.data_a.clone(),
                q: self.data_q.clone(),
            }),
        }
    }

    /// The pieces whose union is `F`.
    pub fn pieces(&self) -> Vec<Piece<T>> {
        let n = self.n();
        let ell = self.ell();
        match &self.disjunction {
            Disjunction::Binary(coords) => patterns(coords.len())
                .into_iter()
                .map(|label| {
                    let mut f = self.c0.clone();
                    for (&c, &tag) in coords.iter().zip(&label) {
                        f.push_eq(
                            unit(n, c, T::one()),
                            if tag == 1 { T::one() } else { T::zero() },
                        );
                    }
                    Piece { label, facets: f }
                })
                .collect(),
            Disjunction::Complementarity => patterns(ell)
                .into_iter()
                .map(|label| {
                    let mut f = self.c0.clone();
                    for (i, &tag) in label.iter().enumerate() {
                        let form = if tag == 0 {
                            &self.x_forms[i]
                        } else {
                            &self.s_forms[i]
                        };
                        f.push_eq(form.coef.clone(), -form.constant.clone());
                    }
                    Piece { label, facets: f }
                })
                .collect(),
            Disjunction::ConeFaces { facets } => patterns(facets.len())
                .into_iter()
                .map(|label| {
                    let chosen: Vec<usize> = (0..facets.len()).filter(|&k| label[k] == 1).collect();
                    let dim = n + chosen.len();
                    let pad = |row: &[T]| -> Vec<T> {
                        let mut r = row.to_vec();
                        r.resize(dim, T::zero());
                        r
                    };
                    let mut f = FacetList::new(dim);
                    for row in &self.c0.rows {
                        f.push_le(pad(&row.coef), row.rhs.clone());
                    }
                    for row in &self.c0.equalities {
                        f.push_eq(pad(&row.coef), row.rhs.clone());
                    }
                    for (slot, &k) in chosen.iter().enumerate() {
                        // b_kᵀx = 0
                        let mut row = vec![T::zero(); dim];
                        for j in 0..ell {
                            for (c, xc) in row.iter_mut().zip(&self.x_forms[j].coef) {
                                *c = c.clone() + facets[k][j].clone() * xc.clone();
                            }
                        }
                        f.push_eq(row, T::zero());
                        f.push_le(unit(dim, n + slot, -T::one()), T::zero());
                    }
                    for j in 0..ell {
                        // s_j(v) - Σ μ_k b_kj = 0
                        let mut row = pad(&self.s_forms[j].coef);
                        for (slot, &k) in chosen.iter().enumerate() {
                            row[n + slot] = -facets[k][j].clone();
                        }
                        f.push_eq(row, -self.s_forms[j].constant.clone());
                    }
                    Piece { label, facets: f }
                })
                .collect(),
        }
    }

    /// Maps a relaxation point back to a problem solution.
    pub fn recover(&self, point: &[f64], tol: f64) -> Result<Recovered> {
        let ell = self.ell();
        let pick = |forms: &[AffineForm<T>]| -> Vec<f64> {
            forms
                .iter()
                .map(|f| {
                    f.coef
                        .iter()
                        .zip(point)
                        .map(|(c, v)| c.to_f64() * v)
                        .sum::<f64>()
                        + f.constant.to_f64()
                })
                .collect()
        };
        let x_raw = pick(&self.x_forms);
        match self.recovery {
            Recovery::None | Recovery::StripZ => {
                let s = affine(&self.data_a, &self.data_q, &x_raw);
                let verified = self.check_pair(&x_raw, &s, tol);
                Ok(Recovered {
                    x: x_raw,
                    s,
                    verified,
                })
            }
            Recovery::DivideByAlpha => {
                let a_idx = self.layout.index("alpha", 0);
                let alpha = point[a_idx];
                if alpha <= tol {
                    return Err(Error::AlphaTooSmall { alpha });
                }
                let x: Vec<f64> = x_raw.iter().map(|v| v / alpha).collect();
                let s = affine(&self.data_a, &self.data_q, &x);
                debug_assert_eq!(x.len(), ell);
                let verified = self.check_pair(&x, &s, tol);
                Ok(Recovered { x, s, verified })
            }
        }
    }

    fn check_pair(&self, x: &[f64], s: &[f64], tol: f64) -> bool {
        match &self.cone {
            Some(k) => {
                let gap: f64 = x.iter().zip(s).map(|(a, b)| a * b).sum();
                k.contains(x, tol) && k.dual_contains(s, tol) && gap.abs() <= tol
            }
            None => {
                let inst = LcpInstance {
                    ell: self.ell(),
                    m: self.data_a.clone(),
                    q: self.data_q.clone(),
                };
                verify_solution(&inst, x, tol)
            }
        }
    }

    pub fn to_f64(&self) -> FormulationBundle<f64> {
        let conv = |v: &[T]| scalar::to_f64_vec(v);
        let facets = |f: &FacetList<T>| FacetList {
            dim: f.dim,
            rows: f
                .rows
                .iter()
                .map(|r| crate::lp::LinearRow::new(conv(&r.coef), r.rhs.to_f64()))
                .collect(),
            equalities: f
                .equalities
                .iter()
                .map(|r| crate::lp::LinearRow::new(conv(&r.coef), r.rhs.to_f64()))
                .collect(),
        };
        let forms = |fs: &[AffineForm<T>]| {
            fs.iter()
                .map(|f| AffineForm {
                    coef: conv(&f.coef),
                    constant: f.constant.to_f64(),
                })
                .collect()
        };
        FormulationBundle {
            kind: self.kind,
            layout: self.layout.clone(),
            c0: facets(&self.c0),
            pf: self.pf.clone(),
            objective: conv(&self.objective),
            recovery: self.recovery,
            x_forms: forms(&self.x_forms),
            s_forms: forms(&self.s_forms),
            disjunction: match &self.disjunction {
                Disjunction::Binary(c) => Disjunction::Binary(c.clone()),
                Disjunction::Complementarity => Disjunction::Complementarity,
                Disjunction::ConeFaces { facets } => Disjunction::ConeFaces {
                    facets: facets.iter().map(|b| conv(b)).collect(),
                },
            },
            data_a: self.data_a.clone(),
            data_q: self.data_q.clone(),
            cone: self.cone.clone(),
        }
    }

    pub fn dump(&self) -> BundleDump {
        let f = self.to_f64();
        BundleDump {
            formulation: f.kind,
            layout: f.layout,
            rows: f
                .c0
                .rows
                .iter()
                .map(|r| RowDump {
                    coef: r.coef.clone(),
                    rhs: r.rhs,
                })
                .collect(),
            equalities: f
                .c0
                .equalities
                .iter()
                .map(|r| RowDump {
                    coef: r.coef.clone(),
                    rhs: r.rhs,
                })
                .collect(),
            pf: f.pf,
            objective: f.objective,
            recovery: f.recovery,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RowDump {
    pub coef: Vec<f64>,
    pub rhs: f64,
}

/// JSON view of a bundle: rows are `coef · v ≤ rhs` (or `=` for
/// `equalities`).
#[derive(Debug, Clone, Serialize)]
pub struct BundleDump {
    pub formulation: FormulationKind,
    pub layout: VariableLayout,
    pub rows: Vec<RowDump>,
    pub equalities: Vec<RowDump>,
    pub pf: Vec<QuadraticFunction>,
    pub objective: Vec<f64>,
    pub recovery: Recovery,
}

/// Builds a float bundle by name with default parameters.
pub fn build_named(kind: FormulationKind, inst: &LcpInstance) -> Result<FormulationBundle> {
    Ok(match kind {
        FormulationKind::BigM => build_big_m(inst, inst.default_bound())?,
        FormulationKind::MipAlpha => build_mip_alpha(inst, false),
        FormulationKind::LcpAlpha => build_lcp_alpha(inst, true),
        FormulationKind::LcpAlphaImplicit => build_lcp_alpha(inst, false),
        FormulationKind::CpAlpha => {
            let k = PolyhedralCone::orthant(inst.ell);
            build_cp_alpha(&k, &inst.m, &inst.q, &k.default_eta(), &k.default_eta_bar())?
        }
    })
}
