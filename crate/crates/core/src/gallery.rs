//! Named, parameterized example systems with the facts expected of them.
//!
//! Differential examples are discretized by finite differences and ℓ²
//! examples are truncated; facts are asserted at the discrete level only.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::association::{
    build_operator, check_associated, check_m_accretive, domain_subspace, equality, kernel_t, vja_subspace,
};
use crate::dynamics::{invariance_check, resolvent, InvarianceOptions, ProjectionSpec};
use crate::error::{Error, Result};
use crate::fov::{check_condition_iii, check_j_elliptic, default_omega_grid};
use crate::model::{normalize, FormSystem, RawProblem};
use crate::numerics::encoding::{matrix, vector};
use crate::numerics::linalg::{
    block2, c, diag_real, from_real_rows, identity, inverse, min_hermitian_eigenvalue, real,
    sigma_min, spectral_norm,
};
use crate::numerics::{image, kernel, orthonormal_range, ComplexMatrix, ComplexVector, Subspace, ToleranceConfig};
use crate::structure::{cond3_report, radical, reduce_ker_t, restrict};

pub type Params = BTreeMap<String, Value>;

/// Names accepted by [`example`].
pub const CATALOGUE: &[&str] = &[
    "multival",
    "zero_form_rank1",
    "welldef_nonmacc_truncated",
    "gen_inverse",
    "signdiff",
    "deriv_halfline",
    "deriv_line",
    "invar_block",
    "kerT_nontrivial",
    "dirichlet_laplacian",
];

/// A checkable statement about a gallery system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fact {
    ConditionI,
    TInvertible { expected: bool },
    Associated { expected: bool },
    MAccretive,
    DjaEqualsKerJ,
    KerTEqualsKerJ,
    KerTDim { dim: usize },
    /// `reduce_ker_t` leaves `dim` coordinates and preserves `j(D_j(a))`.
    ReducedDim { dim: usize },
    OperatorEquals {
        #[serde(with = "matrix")]
        expected: ComplexMatrix,
        tol: f64,
    },
    TInverseEquals {
        #[serde(with = "matrix")]
        expected: ComplexMatrix,
        tol: f64,
    },
    VjaEquals { subspace: Subspace },
    ConditionIii { expected: bool },
    Decomposition { expected: bool },
    RestrictionCond3 { expected: bool },
    /// `|Re a(u,u)| <= tol |u|_V^2` on random raw vectors.
    Conservative { samples: usize, tol: f64 },
    /// `iA` is Hermitian in `H`.
    SkewAdjointOperator { tol: f64 },
    /// `T0_raw v = 0` for the given raw vector.
    RawKernelVector {
        #[serde(with = "vector")]
        vector: ComplexVector,
        tol: f64,
    },
    RadicalDim { dim: usize },
    SubspaceInvariant { subspace: Subspace },
    /// `(lambda + A)^{-1} = (lambda + R)^{-1} [[I, 2R(lambda + R)^{-1}], [0, I]]`.
    BlockResolvent { lambdas: Vec<f64>, r: Vec<f64>, tol: f64 },
    OrthantInvariant,
    JElliptic { omega: f64, mu: f64, tol: f64 },
    RestrictionAssociated { coords: Vec<usize>, expected: bool },
    RestrictionOperator {
        coords: Vec<usize>,
        #[serde(with = "matrix")]
        expected: ComplexMatrix,
        tol: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedFact {
    pub id: String,
    pub fact: Fact,
}

/// A quantity computed and reported but not asserted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    SigmaMinT,
    InverseTNorm,
    /// `Re a(u,u) / |u|_H^2` for the profile `x e^{-x}` on the grid.
    BoundaryResidual,
}

#[derive(Debug, Clone)]
pub struct GalleryCase {
    pub name: String,
    /// Effective parameters, defaults filled in.
    pub parameters: Params,
    pub raw: RawProblem,
    pub system: FormSystem,
    /// Raw `V` coordinates to normalized ones.
    pub change_of_basis: ComplexMatrix,
    pub expected_facts: Vec<ExpectedFact>,
    pub probes: Vec<Probe>,
    /// Grid nodes of discretized cases.
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactOutcome {
    pub id: String,
    pub passed: bool,
    /// Slack of the check; negative when it fails.
    pub margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedValue {
    pub name: String,
    /// `None` when the probe could not be evaluated.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub name: String,
    pub parameters: Params,
    pub facts: Vec<FactOutcome>,
    pub recorded: Vec<RecordedValue>,
    pub passed: bool,
}

struct ParamReader<'a> {
    given: &'a Params,
    used: BTreeSet<&'a str>,
    effective: Params,
}

impl<'a> ParamReader<'a> {
    fn new(given: &'a Params) -> Self {
        ParamReader { given, used: BTreeSet::new(), effective: Params::new() }
    }

    fn take(&mut self, name: &'static str, default: Value) -> Value {
        let v = match self.given.get_key_value(name) {
            Some((k, v)) => {
                self.used.insert(k.as_str());
                v.clone()
            }
            None => default,
        };
        self.effective.insert(name.to_string(), v.clone());
        v
    }

    fn usize(&mut self, name: &'static str, default: usize, min: usize) -> Result<usize> {
        let v = self.take(name, Value::from(default));
        match v.as_u64() {
            Some(n) if n as usize >= min => Ok(n as usize),
            _ => Err(Error::InvalidInput(format!("parameter {name} must be an integer >= {min}, got {v}"))),
        }
    }

    fn real(&mut self, name: &'static str, default: f64) -> Result<f64> {
        let v = self.take(name, Value::from(default));
        v.as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::InvalidInput(format!("parameter {name} must be a number, got {v}")))
    }

    fn reals(&mut self, name: &'static str, default: &[f64]) -> Result<Vec<f64>> {
        let v = self.take(name, Value::from(default.to_vec()));
        let bad = || Error::InvalidInput(format!("parameter {name} must be a list of numbers, got {v}"));
        let items = v.as_array().ok_or_else(bad)?;
        items.iter().map(|x| x.as_f64().filter(|x| x.is_finite()).ok_or_else(bad)).collect()
    }

    fn matrix(&mut self, name: &'static str, default: Value) -> Result<ComplexMatrix> {
        let v = self.take(name, default);
        parse_matrix_value(&v).map_err(|e| Error::InvalidInput(format!("parameter {name}: {e}")))
    }

    fn finish(self) -> Result<Params> {
        if let Some(k) = self.given.keys().find(|k| !self.used.contains(k.as_str())) {
            return Err(Error::InvalidInput(format!("unknown parameter {k}")));
        }
        Ok(self.effective)
    }
}

/// A matrix given as rows whose entries are numbers or `[re, im]` pairs.
pub fn parse_matrix_value(v: &Value) -> std::result::Result<ComplexMatrix, String> {
    let rows = v.as_array().ok_or("expected an array of rows")?;
    let ncols = rows.first().and_then(Value::as_array).map_or(0, Vec::len);
    let mut m = ComplexMatrix::zeros(rows.len(), ncols);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or("expected an array of rows")?;
        if row.len() != ncols {
            return Err("rows have different lengths".into());
        }
        for (k, e) in row.iter().enumerate() {
            m[(i, k)] = match e {
                Value::Number(x) => real(x.as_f64().ok_or("bad number")?),
                Value::Array(p) if p.len() == 2 => {
                    let re = p[0].as_f64().ok_or("bad number")?;
                    let im = p[1].as_f64().ok_or("bad number")?;
                    c(re, im)
                }
                _ => return Err(format!("bad entry {e}")),
            };
            if !(m[(i, k)].re.is_finite() && m[(i, k)].im.is_finite()) {
                return Err("non-finite entry".into());
            }
        }
    }
    Ok(m)
}

fn fact(id: &str, fact: Fact) -> ExpectedFact {
    ExpectedFact { id: id.to_string(), fact }
}

struct Built {
    raw: RawProblem,
    facts: Vec<ExpectedFact>,
    probes: Vec<Probe>,
    grid: Option<Vec<f64>>,
}

impl Built {
    fn plain(t0: ComplexMatrix, j: ComplexMatrix, facts: Vec<ExpectedFact>) -> Self {
        Built { raw: RawProblem::plain(t0, j), facts, probes: Vec::new(), grid: None }
    }
}

/// Builds the named case.
pub fn example(name: &str, params: &Params) -> Result<GalleryCase> {
    let mut p = ParamReader::new(params);
    let built = match name {
        "multival" => multival(),
        "zero_form_rank1" => zero_form_rank1(),
        "welldef_nonmacc_truncated" => welldef_nonmacc(p.usize("N", 3, 3)?),
        "gen_inverse" => gen_inverse(&p.matrix("B", Value::from(vec![vec![1.0]]))?)?,
        "signdiff" => {
            let n = p.usize("N", 50, 1)?;
            let a = p.real("a", -1.0)?;
            let b = p.real("b", 1.0)?;
            signdiff(n, a, b)?
        }
        "deriv_halfline" => {
            let n = p.usize("N", 50, 2)?;
            deriv_halfline(n, positive(p.real("L", 5.0)?, "L")?)
        }
        "deriv_line" => {
            let n = p.usize("N", 64, 3)?;
            deriv_line(n, positive(p.real("L", 4.0)?, "L")?)
        }
        "invar_block" => invar_block(&p.reals("R", &[1.0, 2.0, 3.0])?)?,
        "kerT_nontrivial" => ker_t_nontrivial(),
        "dirichlet_laplacian" => dirichlet_laplacian(p.usize("N", 20, 1)?),
        _ => {
            return Err(Error::InvalidInput(format!(
                "unknown gallery case {name}; known: {}",
                CATALOGUE.join(", ")
            )))
        }
    };
    let parameters = p.finish()?;
    let (system, change_of_basis) = normalize(&built.raw)?;
    system.require_standing_assumptions()?;
    Ok(GalleryCase {
        name: name.to_string(),
        parameters,
        raw: built.raw,
        system,
        change_of_basis,
        expected_facts: built.facts,
        probes: built.probes,
        grid: built.grid,
    })
}

fn positive(x: f64, name: &str) -> Result<f64> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(Error::InvalidInput(format!("parameter {name} must be positive")))
    }
}

fn multival() -> Built {
    let t0 = from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
    let j = from_real_rows(&[&[0.0, 1.0]]);
    Built::plain(
        t0,
        j,
        vec![
            fact("t_invertible", Fact::TInvertible { expected: true }),
            fact("not_associated", Fact::Associated { expected: false }),
            fact("dja_equals_ker_j", Fact::DjaEqualsKerJ),
        ],
    )
}

fn zero_form_rank1() -> Built {
    Built::plain(
        ComplexMatrix::zeros(2, 2),
        from_real_rows(&[&[1.0, 0.0]]),
        vec![
            fact("associated", Fact::Associated { expected: true }),
            fact("m_accretive", Fact::MAccretive),
            fact("operator_zero", Fact::OperatorEquals { expected: ComplexMatrix::zeros(1, 1), tol: 1e-12 }),
            fact("ker_t_equals_ker_j", Fact::KerTEqualsKerJ),
            fact("ker_t_dim", Fact::KerTDim { dim: 1 }),
        ],
    )
}

/// `T0 e1 = -e2`, `T0 e2 = e1`, `T0 ek = ek / k`, link row `(0, 1, 1/2, ..., 1/(N-1))`.
fn welldef_nonmacc(n: usize) -> Built {
    let mut t0 = ComplexMatrix::zeros(n, n);
    t0[(0, 1)] = real(1.0);
    t0[(1, 0)] = real(-1.0);
    for k in 3..=n {
        t0[(k - 1, k - 1)] = real(1.0 / k as f64);
    }
    let j = ComplexMatrix::from_fn(1, n, |_, k| if k == 0 { real(0.0) } else { real(1.0 / k as f64) });
    let mut b = Built::plain(
        t0,
        j,
        vec![
            fact("associated", Fact::Associated { expected: true }),
            fact("m_accretive", Fact::MAccretive),
            fact("restriction_e1_e2_not_associated", Fact::RestrictionAssociated { coords: vec![1, 2], expected: false }),
            fact(
                "restriction_e3_operator",
                Fact::RestrictionOperator { coords: vec![3], expected: from_real_rows(&[&[4.0 / 3.0]]), tol: 1e-12 },
            ),
        ],
    );
    b.probes = vec![Probe::SigmaMinT, Probe::InverseTNorm];
    b
}

/// `T0 = [[B, -I], [I, 0]]`, link `[0 I]` on `H x H`.
fn gen_inverse(bm: &ComplexMatrix) -> Result<Built> {
    let n = bm.nrows();
    if n == 0 || bm.ncols() != n {
        return Err(Error::InvalidInput("B must be a nonempty square matrix".into()));
    }
    let tol = ToleranceConfig::default();
    let scale = spectral_norm(bm).max(1.0);
    if min_hermitian_eigenvalue(bm).0 < -tol.residual_tol * scale {
        return Err(Error::InvalidInput("B must be accretive".into()));
    }
    let i = identity(n);
    let z = ComplexMatrix::zeros(n, n);
    let t0 = block2(bm, &(-&i), &i, &z);
    let j = crate::numerics::linalg::hstack(&[&z, &i]);
    let ipb = inverse(&(&i + bm)).ok_or_else(|| Error::InvalidInput("I + B is singular".into()))?;
    let t_inv = block2(&ipb, &ipb, &(-&ipb), &(&ipb * bm));
    let graph = orthonormal_range(&ComplexMatrix::from_fn(2 * n, n, |r, k| if r < n { i[(r, k)] } else { bm[(r - n, k)] }), &tol);
    let injective = kernel(bm, &tol).is_zero();
    let mut facts = vec![
        fact("t_inverse_formula", Fact::TInverseEquals { expected: t_inv, tol: 1e-10 }),
        fact("vja_is_graph_of_b", Fact::VjaEquals { subspace: graph }),
        fact("condition_iii", Fact::ConditionIii { expected: true }),
        fact("associated_iff_b_injective", Fact::Associated { expected: injective }),
        fact("decomposition_iff_b_injective", Fact::Decomposition { expected: injective }),
        fact("restriction_cond3_iff_b_injective", Fact::RestrictionCond3 { expected: injective }),
    ];
    if injective {
        let binv = inverse(bm).ok_or_else(|| Error::degenerate("B is injective but not invertible"))?;
        facts.push(fact("operator_is_b_inverse", Fact::OperatorEquals { expected: binv, tol: 1e-10 }));
    }
    Ok(Built::plain(t0, j, facts))
}

/// Interior nodes on `(a, b)`; when `0` lies inside it is made a node and
/// both sides are uniform.
fn signdiff_grid(n: usize, a: f64, b: f64) -> Vec<f64> {
    if a < 0.0 && b > 0.0 && n >= 1 {
        let cells = n + 1;
        let left = (((cells as f64) * (-a) / (b - a)).round() as usize).clamp(1, cells - 1);
        let right = cells - left;
        let mut x: Vec<f64> = (1..left).map(|k| a + (-a) * k as f64 / left as f64).collect();
        x.push(0.0);
        x.extend((1..right).map(|k| b * k as f64 / right as f64));
        x
    } else {
        let h = (b - a) / (n + 1) as f64;
        (1..=n).map(|k| a + h * k as f64).collect()
    }
}

/// Forward differences on interior nodes with zero boundary values:
/// one row per cell.
fn difference_matrix(nodes: &[f64], a: f64, b: f64) -> (ComplexMatrix, Vec<f64>) {
    let n = nodes.len();
    let mut pts = vec![a];
    pts.extend_from_slice(nodes);
    pts.push(b);
    let h: Vec<f64> = pts.windows(2).map(|w| w[1] - w[0]).collect();
    let mut d = ComplexMatrix::zeros(n + 1, n);
    for (cell, &hc) in h.iter().enumerate() {
        if cell < n {
            d[(cell, cell)] = real(1.0 / hc);
        }
        if cell > 0 {
            d[(cell, cell - 1)] = real(-1.0 / hc);
        }
    }
    (d, h)
}

/// `a(u, v) = i sum_c h_c sign_c (Du)_c conj((Dv)_c)` with the discrete
/// H¹₀ inner product on `V` and lumped L² on `H`.
fn signdiff(n: usize, a: f64, b: f64) -> Result<Built> {
    if !(a < b) {
        return Err(Error::InvalidInput("signdiff needs a < b".into()));
    }
    let nodes = signdiff_grid(n, a, b);
    let (d, h) = difference_matrix(&nodes, a, b);
    let mid = |cell: usize| {
        let l = if cell == 0 { a } else { nodes[cell - 1] };
        let r = if cell == n { b } else { nodes[cell] };
        0.5 * (l + r)
    };
    let weights: Vec<f64> = (0..=n).map(|c| h[c] * mid(c).signum()).collect();
    let dt = d.transpose();
    let s = &dt * diag_real(&weights) * &d;
    let k = &dt * diag_real(&h) * &d;
    let t0 = s.map(|z| c(0.0, z.re));
    let mass: Vec<f64> = (0..n).map(|k| 0.5 * (h[k] + h[k + 1])).collect();

    let mut facts = vec![
        fact("conservative", Fact::Conservative { samples: 1000, tol: 1e-12 }),
        fact("associated", Fact::Associated { expected: true }),
        fact("m_accretive", Fact::MAccretive),
        fact("i_a_hermitian", Fact::SkewAdjointOperator { tol: 1e-9 }),
    ];
    let straddles = a < 0.0 && b > 0.0;
    let symmetric = straddles && (a + b).abs() <= 1e-14 * (b - a);
    if symmetric {
        let hat = ComplexVector::from_iterator(n, nodes.iter().map(|&x| real(1.0 - x.abs() / b)));
        facts.push(fact("hat_in_kernel", Fact::RawKernelVector { vector: hat, tol: 1e-10 }));
        facts.push(fact("radical_dim", Fact::RadicalDim { dim: 1 }));
    } else {
        facts.push(fact("radical_dim", Fact::RadicalDim { dim: 0 }));
    }
    let raw = RawProblem {
        dim_v: n,
        dim_h: n,
        t0_raw: t0,
        j_raw: identity(n),
        gram_v: Some(k),
        gram_h: Some(diag_real(&mass)),
        tolerances: ToleranceConfig::default(),
    };
    Ok(Built { raw, facts, probes: vec![Probe::SigmaMinT], grid: Some(nodes) })
}

fn dirichlet_stiffness(n: usize, periodic: bool) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        m[(k, k)] = real(2.0);
        if k + 1 < n {
            m[(k, k + 1)] = real(-1.0);
            m[(k + 1, k)] = real(-1.0);
        }
    }
    if periodic && n >= 3 {
        m[(0, n - 1)] = real(-1.0);
        m[(n - 1, 0)] = real(-1.0);
    }
    m
}

/// `a(u, v) = -sum_k (u_{k+1} - u_k) conj(v_k)` on `(0, L)`, zero at both ends.
fn deriv_halfline(n: usize, l: f64) -> Built {
    let h = l / (n + 1) as f64;
    let mut t0 = identity(n);
    for k in 0..n - 1 {
        t0[(k, k + 1)] = real(-1.0);
    }
    let gram_v = identity(n) * real(h) + dirichlet_stiffness(n, false) * real(1.0 / h);
    let raw = RawProblem {
        dim_v: n,
        dim_h: n,
        t0_raw: t0,
        j_raw: identity(n),
        gram_v: Some(gram_v),
        gram_h: Some(identity(n) * real(h)),
        tolerances: ToleranceConfig::default(),
    };
    let facts = vec![
        fact("accretive", Fact::ConditionI),
        fact("associated", Fact::Associated { expected: true }),
        fact("m_accretive", Fact::MAccretive),
    ];
    let grid = (1..=n).map(|k| h * k as f64).collect();
    Built { raw, facts, probes: vec![Probe::BoundaryResidual, Probe::SigmaMinT], grid: Some(grid) }
}

/// Periodic upwind difference on `(-L, L)`: `a(u, v) = sum_k (u_k - u_{k-1}) conj(v_k)`.
fn deriv_line(n: usize, l: f64) -> Built {
    let h = 2.0 * l / n as f64;
    let mut t0 = identity(n);
    for k in 0..n {
        t0[(k, (k + n - 1) % n)] = real(-1.0);
    }
    let gram_v = identity(n) * real(h) + dirichlet_stiffness(n, true) * real(1.0 / h);
    let raw = RawProblem {
        dim_v: n,
        dim_h: n,
        t0_raw: t0,
        j_raw: identity(n),
        gram_v: Some(gram_v),
        gram_h: Some(identity(n) * real(h)),
        tolerances: ToleranceConfig::default(),
    };
    let facts = vec![
        fact("accretive", Fact::ConditionI),
        fact("associated", Fact::Associated { expected: true }),
        fact("m_accretive", Fact::MAccretive),
        fact("positive_semigroup", Fact::OrthantInvariant),
    ];
    let grid = (0..n).map(|k| -l + h * k as f64).collect();
    Built { raw, facts, probes: vec![Probe::SigmaMinT], grid: Some(grid) }
}

/// `V = H1 x H2` with `|(u1, u2)|^2 = |u1|^2 + |R u2|^2`, link `(u1, u1 + u2)`
/// and operator `[[R, -2R], [0, R]]`.
fn invar_block(r: &[f64]) -> Result<Built> {
    if r.is_empty() || r.iter().any(|&x| !(x >= 1.0)) {
        return Err(Error::InvalidInput("R must be a nonempty list of entries >= 1".into()));
    }
    let k = r.len();
    let rm = diag_real(r);
    let i = identity(k);
    let z = ComplexMatrix::zeros(k, k);
    let r2: Vec<f64> = r.iter().map(|x| x * x).collect();
    let raw = RawProblem {
        dim_v: 2 * k,
        dim_h: 2 * k,
        t0_raw: block2(&z, &(-&rm), &rm, &rm),
        j_raw: block2(&i, &z, &i, &i),
        gram_v: Some(block2(&i, &z, &z, &diag_real(&r2))),
        gram_h: None,
        tolerances: ToleranceConfig::default(),
    };
    let a = block2(&rm, &(&rm * real(-2.0)), &z, &rm);
    let first: Vec<usize> = (0..k).collect();
    let facts = vec![
        fact("condition_iii", Fact::ConditionIii { expected: true }),
        fact("operator", Fact::OperatorEquals { expected: a, tol: 1e-10 }),
        fact("first_block_invariant", Fact::SubspaceInvariant { subspace: Subspace::coordinate(2 * k, &first) }),
        fact("block_resolvent", Fact::BlockResolvent { lambdas: vec![1.0, 2.0], r: r.to_vec(), tol: 1e-10 }),
    ];
    Ok(Built { raw, facts, probes: Vec::new(), grid: None })
}

fn ker_t_nontrivial() -> Built {
    Built::plain(
        ComplexMatrix::zeros(3, 3),
        from_real_rows(&[&[1.0, 0.0, 0.0]]),
        vec![
            fact("ker_t_dim", Fact::KerTDim { dim: 2 }),
            fact("reduced_dim", Fact::ReducedDim { dim: 1 }),
            fact("associated", Fact::Associated { expected: true }),
            fact("operator_zero", Fact::OperatorEquals { expected: ComplexMatrix::zeros(1, 1), tol: 1e-12 }),
        ],
    )
}

/// `a(u, v) = (1/h) sum (u_k - u_{k+1}) conj(v_k - v_{k+1})`, `h = 1/(N+1)`, lumped L² on `H`.
fn dirichlet_laplacian(n: usize) -> Built {
    let h = 1.0 / (n + 1) as f64;
    let t0 = dirichlet_stiffness(n, false) * real(1.0 / h);
    // eigenvalues of the stiffness matrix in closed form
    let mu = 4.0 / h * (std::f64::consts::PI * h / 2.0).sin().powi(2);
    let raw = RawProblem {
        dim_v: n,
        dim_h: n,
        t0_raw: t0,
        j_raw: identity(n),
        gram_v: None,
        gram_h: Some(identity(n) * real(h)),
        tolerances: ToleranceConfig::default(),
    };
    let facts = vec![
        fact("j_elliptic", Fact::JElliptic { omega: 0.0, mu, tol: 1e-8 }),
        fact("associated", Fact::Associated { expected: true }),
        fact("m_accretive", Fact::MAccretive),
        fact("positive_semigroup", Fact::OrthantInvariant),
    ];
    let grid = (1..=n).map(|k| h * k as f64).collect();
    Built { raw, facts, probes: vec![Probe::SigmaMinT], grid: Some(grid) }
}

/// Parses `e1,e3` into 1-based coordinate indices.
pub fn parse_restrict(spec: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidInput(format!("bad restriction {spec:?}; expected e.g. e1,e3"));
    let out = spec
        .split(',')
        .map(|s| {
            s.trim()
                .strip_prefix('e')
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|&k| k >= 1)
                .ok_or_else(bad)
        })
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// The span of raw coordinate vectors (1-based), in normalized coordinates.
pub fn restriction_subspace(case: &GalleryCase, coords: &[usize]) -> Result<Subspace> {
    let n = case.raw.dim_v;
    if let Some(&k) = coords.iter().find(|&&k| k == 0 || k > n) {
        return Err(Error::InvalidInput(format!("coordinate e{k} outside 1..{n}")));
    }
    let e = ComplexMatrix::from_fn(n, coords.len(), |r, col| if r + 1 == coords[col] { real(1.0) } else { real(0.0) });
    let w = orthonormal_range(&(&case.change_of_basis * e), case.system.tolerances());
    if w.dim() != coords.len() {
        return Err(Error::InvalidInput("restriction coordinates are dependent in V".into()));
    }
    Ok(w)
}

/// The case's system restricted to the span of the given raw coordinates.
pub fn restrict_case(case: &GalleryCase, coords: &[usize]) -> Result<FormSystem> {
    restrict(&case.system, &restriction_subspace(case, coords)?)
}

fn outcome(id: &str, passed: bool, margin: f64, detail: impl Into<String>) -> FactOutcome {
    FactOutcome { id: id.to_string(), passed, margin, detail: detail.into() }
}

fn within(id: &str, dev: f64, tol: f64, what: &str) -> FactOutcome {
    outcome(id, dev <= tol, tol - dev, format!("{what} deviation {dev:.3e} (tolerance {tol:.1e})"))
}

fn operator_matrix(fs: &FormSystem) -> Result<ComplexMatrix> {
    build_operator(fs)?
        .full_matrix()
        .ok_or_else(|| Error::degenerate("operator is not defined on all of H"))
}

fn evaluate(case: &GalleryCase, ef: &ExpectedFact) -> Result<FactOutcome> {
    let fs = &case.system;
    let tol = fs.tolerances();
    let id = ef.id.as_str();
    let cert_outcome = |cert: &crate::Certificate, expected: bool| {
        let ok = cert.is_holds() == expected;
        outcome(id, ok, if ok { cert.margin.abs() } else { -cert.margin.abs() }, format!("{} {:?}", cert.operation, cert.verdict))
    };
    Ok(match &ef.fact {
        Fact::ConditionI => cert_outcome(&fs.condition_i(), true),
        Fact::TInvertible { expected } => cert_outcome(&check_condition_iii(fs).certificate, *expected),
        Fact::ConditionIii { expected } => cert_outcome(&check_condition_iii(fs).certificate, *expected),
        Fact::Associated { expected } => cert_outcome(&check_associated(fs)?.associated, *expected),
        Fact::MAccretive => cert_outcome(&check_m_accretive(fs)?, true),
        Fact::DjaEqualsKerJ => cert_outcome(
            &equality("dja_equals_ker_j", &domain_subspace(fs)?, &kernel(fs.j(), tol), tol)?,
            true,
        ),
        Fact::KerTEqualsKerJ => cert_outcome(&equality("ker_t_equals_ker_j", &kernel_t(fs), &kernel(fs.j(), tol), tol)?, true),
        Fact::KerTDim { dim } => {
            let d = kernel_t(fs).dim();
            outcome(id, d == *dim, if d == *dim { 0.0 } else { -1.0 }, format!("dim ker T = {d}"))
        }
        Fact::ReducedDim { dim } => {
            let (hat, _) = reduce_ker_t(fs)?;
            let before = image(fs.j(), &domain_subspace(fs)?, tol)?;
            let after = image(hat.j(), &domain_subspace(&hat)?, tol)?;
            let same = equality("j_dja_preserved", &before, &after, tol)?;
            let ok = hat.dim_v() == *dim && same.is_holds();
            outcome(id, ok, if ok { same.margin } else { -1.0 }, format!("reduced dim {}, image preserved: {}", hat.dim_v(), same.is_holds()))
        }
        Fact::OperatorEquals { expected, tol: t } => {
            let a = operator_matrix(fs)?;
            if a.shape() != expected.shape() {
                return Ok(outcome(id, false, -1.0, "operator has the wrong shape"));
            }
            within(id, spectral_norm(&(a - expected)), *t, "operator")
        }
        Fact::TInverseEquals { expected, tol: t } => {
            // T0 and J are in raw coordinates here since no Gram matrices are involved
            let ti = inverse(&fs.derived_t()).ok_or_else(|| Error::degenerate("T is singular"))?;
            within(id, spectral_norm(&(ti - expected)), *t, "T inverse")
        }
        Fact::VjaEquals { subspace } => cert_outcome(&equality("vja_equals", &vja_subspace(fs)?, subspace, tol)?, true),
        Fact::Decomposition { expected } => cert_outcome(&cond3_report(fs)?.decomposition, *expected),
        Fact::RestrictionCond3 { expected } => cert_outcome(&cond3_report(fs)?.restriction_cond3, *expected),
        Fact::Conservative { samples, tol: t } => {
            let g = case.raw.gram_v.clone().unwrap_or_else(|| identity(case.raw.dim_v));
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let n = case.raw.dim_v;
            let mut worst = 0.0f64;
            for _ in 0..*samples {
                let u = ComplexVector::from_fn(n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                let form = (u.adjoint() * &case.raw.t0_raw * &u)[(0, 0)];
                let vnorm = (u.adjoint() * &g * &u)[(0, 0)].re;
                worst = worst.max(form.re.abs() / vnorm);
            }
            within(id, worst, *t, "max |Re a(u,u)| / |u|_V^2")
        }
        Fact::SkewAdjointOperator { tol: t } => {
            let ia = operator_matrix(fs)? * Complex64::i();
            within(id, spectral_norm(&(&ia - ia.adjoint())), *t, "Hermitian defect of iA")
        }
        Fact::RawKernelVector { vector: v, tol: t } => within(id, (&case.raw.t0_raw * v).norm(), *t, "T0 residual"),
        Fact::RadicalDim { dim } => {
            let r = radical(fs)?;
            outcome(id, r.dim() == *dim, if r.dim() == *dim { 0.0 } else { -1.0 }, format!("dim radical = {}", r.dim()))
        }
        Fact::SubspaceInvariant { subspace } => {
            let op = build_operator(fs)?;
            let rep = invariance_check(&op, &ProjectionSpec::Subspace(subspace.clone()), &InvarianceOptions::default(), tol)?;
            let ok = rep.semigroup.holds && rep.resolvent.holds && rep.operator.holds && rep.equivalent;
            let m = rep.semigroup.margin.min(rep.resolvent.margin).min(rep.operator.margin);
            outcome(id, ok, m, "semigroup, resolvent and operator criteria")
        }
        Fact::OrthantInvariant => {
            let op = build_operator(fs)?;
            let rep = invariance_check(&op, &ProjectionSpec::NonnegOrthant, &InvarianceOptions::default(), tol)?;
            let sign = rep.sign_certificate.as_ref().is_some_and(|c| c.is_holds());
            let ok = rep.semigroup.holds && rep.resolvent.holds && rep.operator.holds && rep.equivalent && sign;
            let m = rep.semigroup.margin.min(rep.resolvent.margin).min(rep.operator.margin);
            outcome(id, ok, m, "orthant: sampled criteria and sign structure")
        }
        Fact::BlockResolvent { lambdas, r, tol: t } => {
            let op = build_operator(fs)?;
            let k = r.len();
            let i = identity(k);
            let z = ComplexMatrix::zeros(k, k);
            let mut worst = 0.0f64;
            for &l in lambdas {
                let inv: Vec<f64> = r.iter().map(|x| 1.0 / (l + x)).collect();
                let d = diag_real(&inv);
                let off = diag_real(r) * real(2.0) * &d;
                let formula = &block2(&d, &z, &z, &d) * &block2(&i, &off, &z, &i);
                worst = worst.max(spectral_norm(&(resolvent(&op, l)? - formula)));
            }
            within(id, worst, *t, "block resolvent")
        }
        Fact::JElliptic { omega, mu, tol: t } => match check_j_elliptic(fs, &default_omega_grid())? {
            Some(je) => {
                let dev = (je.omega - omega).abs() + (je.mu - mu).abs() / mu.abs().max(1.0);
                within(id, dev, *t, &format!("omega = {}, mu = {:.6e}", je.omega, je.mu))
            }
            None => outcome(id, false, -1.0, "no omega on the grid gives ellipticity"),
        },
        Fact::RestrictionAssociated { coords, expected } => {
            let sub = restrict_case(case, coords)?;
            cert_outcome(&check_associated(&sub)?.associated, *expected)
        }
        Fact::RestrictionOperator { coords, expected, tol: t } => {
            let a = operator_matrix(&restrict_case(case, coords)?)?;
            if a.shape() != expected.shape() {
                return Ok(outcome(id, false, -1.0, "operator has the wrong shape"));
            }
            within(id, spectral_norm(&(a - expected)), *t, "restricted operator")
        }
    })
}

fn probe_value(case: &GalleryCase, p: Probe) -> Result<f64> {
    let fs = &case.system;
    Ok(match p {
        Probe::SigmaMinT => sigma_min(&fs.derived_t()),
        Probe::InverseTNorm => spectral_norm(&inverse(&fs.derived_t()).ok_or_else(|| Error::degenerate("T is singular"))?),
        Probe::BoundaryResidual => {
            let grid = case.grid.as_ref().ok_or_else(|| Error::precondition("case has no grid"))?;
            let u = ComplexVector::from_iterator(grid.len(), grid.iter().map(|&x| real(x * (-x).exp())));
            let form = (u.adjoint() * &case.raw.t0_raw * &u)[(0, 0)].re;
            let g = case.raw.gram_h.clone().unwrap_or_else(|| identity(grid.len()));
            form / (u.adjoint() * g * &u)[(0, 0)].re
        }
    })
}

/// Evaluates every expected fact and probe. Failures, including errors
/// raised while checking, become report entries.
pub fn run_case(case: &GalleryCase) -> CaseReport {
    let facts: Vec<FactOutcome> = case
        .expected_facts
        .iter()
        .map(|ef| evaluate(case, ef).unwrap_or_else(|e| outcome(&ef.id, false, f64::MIN, format!("error: {e}"))))
        .collect();
    let recorded = case
        .probes
        .iter()
        .map(|&p| RecordedValue {
            name: serde_json::to_value(p).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            value: probe_value(case, p).ok(),
        })
        .collect();
    let passed = facts.iter().all(|f| f.passed);
    CaseReport { name: case.name.clone(), parameters: case.parameters.clone(), facts, recorded, passed }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub sigma_min_t: f64,
}

/// `sigma_min(T)` of signdiff discretizations over mesh sizes.
pub fn signdiff_trend(ns: &[usize], a: f64, b: f64) -> Result<Vec<TrendPoint>> {
    ns.iter()
        .map(|&n| {
            let mut p = Params::new();
            p.insert("N".into(), Value::from(n));
            p.insert("a".into(), Value::from(a));
            p.insert("b".into(), Value::from(b));
            let case = example("signdiff", &p)?;
            Ok(TrendPoint { n, a, b, sigma_min_t: sigma_min(&case.system.derived_t()) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::hermitian_eigen;

    fn run(name: &str, params: &[(&str, Value)]) -> CaseReport {
        let p: Params = params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        let r = run_case(&example(name, &p).unwrap());
        for f in &r.facts {
            assert!(f.passed, "{name}: {} failed: {}", f.id, f.detail);
        }
        r
    }

    #[test]
    fn every_case_builds_with_defaults_and_passes() {
        for name in CATALOGUE {
            run(name, &[]);
        }
    }

    #[test]
    fn welldef_restriction_to_e3() {
        let case = example("welldef_nonmacc_truncated", &Params::from([("N".into(), Value::from(3))])).unwrap();
        let a = operator_matrix(&restrict_case(&case, &parse_restrict("e3").unwrap()).unwrap()).unwrap();
        assert!((a[(0, 0)] - real(4.0 / 3.0)).norm() <= 1e-12);
    }

    #[test]
    fn gen_inverse_singular_b() {
        let b = serde_json::json!([[1, 0], [0, 0]]);
        run("gen_inverse", &[("B", b)]);
    }

    #[test]
    fn signdiff_asymmetric_interval() {
        run("signdiff", &[("N", Value::from(30)), ("a", Value::from(-1.0)), ("b", Value::from(2.0))]);
        run("signdiff", &[("N", Value::from(10)), ("a", Value::from(0.5)), ("b", Value::from(2.0))]);
    }

    #[test]
    fn hat_vector_sits_on_the_grid() {
        let nodes = signdiff_grid(50, -1.0, 1.0);
        assert_eq!(nodes.len(), 50);
        assert!(nodes.contains(&0.0));
    }

    #[test]
    fn stiffness_minimum_matches_eigen_oracle() {
        let h = 1.0 / 21.0;
        let (ev, _) = hermitian_eigen(&(dirichlet_stiffness(20, false) * real(1.0 / h)));
        let closed = 4.0 / h * (std::f64::consts::PI * h / 2.0).sin().powi(2);
        assert!((ev[0] - closed).abs() < 1e-10);
    }

    #[test]
    fn bad_parameters() {
        assert!(example("nope", &Params::new()).is_err());
        assert!(example("multival", &Params::from([("N".into(), Value::from(3))])).is_err());
        assert!(example("welldef_nonmacc_truncated", &Params::from([("N".into(), Value::from(2))])).is_err());
        assert!(example("invar_block", &Params::from([("R".into(), serde_json::json!([0.5]))])).is_err());
        assert!(parse_restrict("x3").is_err());
        assert_eq!(parse_restrict("e1, e3").unwrap(), vec![1, 3]);
    }

    #[test]
    fn matrix_values() {
        let m = parse_matrix_value(&serde_json::json!([[1, [0, 2]]])).unwrap();
        assert_eq!(m[(0, 1)], c(0.0, 2.0));
        assert!(parse_matrix_value(&serde_json::json!([[1], [1, 2]])).is_err());
    }
}
