//! Dense algebraic curvature tensors on `R^n`.
//!
//! Components are stored as a flat `n^4` array with `(i, j, k, l)` at offset
//! `i n^3 + j n^2 + k n + l`. The sign convention is `K(X, Y) = R(X, Y, X, Y)`
//! for orthonormal `X, Y`, so the round sphere has positive components
//! `R_{ijij}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Default max-norm tolerance for the symmetry checks.
pub const DEFAULT_SYM_TOL: f64 = 1e-9;
/// Gram-determinant threshold below which a plane is considered degenerate.
pub const DEGENERATE_PLANE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor {
    n: usize,
    comps: Vec<f64>,
    sym_tol: f64,
}

/// Max-norm residuals of the three defining symmetries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryResiduals {
    pub antisymmetry: f64,
    pub pair: f64,
    pub bianchi: f64,
}

impl SymmetryResiduals {
    pub fn max(&self) -> f64 {
        self.antisymmetry.max(self.pair).max(self.bianchi)
    }
}

#[inline]
pub(crate) fn offset(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * n + j) * n + k) * n + l
}

fn check_raw(raw: &[f64], n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidDimension(n, "curvature tensors need n >= 2"));
    }
    let expected = n.pow(4);
    if raw.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: raw.len(),
        });
    }
    if let Some(pos) = raw.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(pos));
    }
    Ok(())
}

/// Symmetry residuals of an arbitrary `n^4` array.
pub fn symmetry_residuals(raw: &[f64], n: usize) -> SymmetryResiduals {
    let at = |i, j, k, l| raw[offset(n, i, j, k, l)];
    let mut res = SymmetryResiduals {
        antisymmetry: 0.0,
        pair: 0.0,
        bianchi: 0.0,
    };
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = at(i, j, k, l);
                    res.antisymmetry = res
                        .antisymmetry
                        .max((v + at(j, i, k, l)).abs())
                        .max((v + at(i, j, l, k)).abs());
                    res.pair = res.pair.max((v - at(k, l, i, j)).abs());
                    res.bianchi = res
                        .bianchi
                        .max((v + at(i, k, l, j) + at(i, l, j, k)).abs());
                }
            }
        }
    }
    res
}

/// Orthogonal projection of a raw array onto the algebraic curvature tensors.
///
/// Averages over the eight index permutations generated by the two
/// antisymmetries and the pair exchange, then removes the totally
/// antisymmetric part `b(S)_{ijkl} = (S_{ijkl} + S_{iklj} + S_{iljk}) / 3`.
pub fn project_curvature(raw: &[f64], n: usize) -> Result<CurvatureTensor> {
    check_raw(raw, n)?;
    let at = |i, j, k, l| raw[offset(n, i, j, k, l)];
    let mut sym = vec![0.0; raw.len()];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    sym[offset(n, i, j, k, l)] = 0.125
                        * (at(i, j, k, l) - at(j, i, k, l) - at(i, j, l, k)
                            + at(j, i, l, k)
                            + at(k, l, i, j)
                            - at(l, k, i, j)
                            - at(k, l, j, i)
                            + at(l, k, j, i));
                }
            }
        }
    }
    let s = |i, j, k, l| sym[offset(n, i, j, k, l)];
    let mut comps = vec![0.0; raw.len()];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let alt = (s(i, j, k, l) + s(i, k, l, j) + s(i, l, j, k)) / 3.0;
                    comps[offset(n, i, j, k, l)] = s(i, j, k, l) - alt;
                }
            }
        }
    }
    Ok(CurvatureTensor {
        n,
        comps,
        sym_tol: DEFAULT_SYM_TOL,
    })
}

impl CurvatureTensor {
    /// Wraps components that must already satisfy the symmetries.
    pub fn from_components(n: usize, comps: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(n, comps, DEFAULT_SYM_TOL)
    }

    pub fn with_tolerance(n: usize, comps: Vec<f64>, sym_tol: f64) -> Result<Self> {
        check_raw(&comps, n)?;
        if !(sym_tol >= 0.0) {
            return Err(Error::InvalidOptions(format!("sym_tol {sym_tol} must be >= 0")));
        }
        let res = symmetry_residuals(&comps, n);
        for (kind, residual) in [
            ("antisymmetry", res.antisymmetry),
            ("pair", res.pair),
            ("first Bianchi", res.bianchi),
        ] {
            if residual > sym_tol {
                return Err(Error::SymmetryViolation {
                    kind,
                    residual,
                    tol: sym_tol,
                });
            }
        }
        Ok(Self { n, comps, sym_tol })
    }

    /// Internal constructor for outputs of symmetry-preserving operations.
    pub(crate) fn from_trusted(n: usize, comps: Vec<f64>) -> Self {
        debug_assert_eq!(comps.len(), n.pow(4));
        Self {
            n,
            comps,
            sym_tol: DEFAULT_SYM_TOL,
        }
    }

    pub fn zeros(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n, "curvature tensors need n >= 2"));
        }
        Ok(Self::from_trusted(n, vec![0.0; n.pow(4)]))
    }

    /// Projection of a seeded standard-normal array; deterministic per seed.
    pub fn random(seed: u64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n, "curvature tensors need n >= 2"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..n.pow(4))
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        project_curvature(&raw, n)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &[f64] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<f64> {
        self.comps
    }

    pub fn sym_tol(&self) -> f64 {
        self.sym_tol
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.comps[offset(self.n, i, j, k, l)]
    }

    pub fn residuals(&self) -> SymmetryResiduals {
        symmetry_residuals(&self.comps, self.n)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Max-norm distance to another tensor of the same dimension.
    pub fn max_diff(&self, other: &Self) -> Result<f64> {
        self.require_dim(other.n)?;
        Ok(self
            .comps
            .iter()
            .zip(&other.comps)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    pub(crate) fn require_dim(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: n,
            });
        }
        Ok(())
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::from_trusted(self.n, self.comps.iter().map(|v| a * v).collect())
    }

    /// Componentwise `a R1 + b R2`.
    pub fn combine(a: f64, first: &Self, b: f64, second: &Self) -> Result<Self> {
        first.require_dim(second.n)?;
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidOptions(format!(
                "mixing coefficients must be finite, got ({a}, {b})"
            )));
        }
        Ok(Self::from_trusted(
            first.n,
            first
                .comps
                .iter()
                .zip(&second.comps)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        ))
    }

    /// `R(a, b, c, d)` for arbitrary vectors.
    pub fn eval(&self, a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
        let n = self.n;
        let mut total = 0.0;
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            let mut si = 0.0;
            for j in 0..n {
                if b[j] == 0.0 {
                    continue;
                }
                let mut sj = 0.0;
                for k in 0..n {
                    if c[k] == 0.0 {
                        continue;
                    }
                    let base = offset(n, i, j, k, 0);
                    let row = &self.comps[base..base + n];
                    let sk: f64 = row.iter().zip(d).map(|(r, x)| r * x).sum();
                    sj += c[k] * sk;
                }
                si += b[j] * sj;
            }
            total += a[i] * si;
        }
        total
    }

    /// Contracts the last three slots against `vs`:
    /// `P[i][b][c][d] = sum_{jkl} R_{ijkl} vs[b]_j vs[c]_k vs[d]_l`,
    /// stored flat with length `n * m^3` where `m = vs.len()`.
    pub fn contract_last3(&self, vs: &[&[f64]]) -> Vec<f64> {
        let n = self.n;
        let m = vs.len();
        // stage 1: A[i][j][k][d]
        let mut s1 = vec![0.0; n * n * n * m];
        for ijk in 0..n * n * n {
            let row = &self.comps[ijk * n..ijk * n + n];
            for (d, v) in vs.iter().enumerate() {
                s1[ijk * m + d] = row.iter().zip(v.iter()).map(|(r, x)| r * x).sum();
            }
        }
        // stage 2: B[i][j][c][d]
        let mut s2 = vec![0.0; n * n * m * m];
        for ij in 0..n * n {
            for (c, v) in vs.iter().enumerate() {
                for d in 0..m {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += v[k] * s1[(ij * n + k) * m + d];
                    }
                    s2[(ij * m + c) * m + d] = acc;
                }
            }
        }
        // stage 3: P[i][b][c][d]
        let mut out = vec![0.0; n * m * m * m];
        for i in 0..n {
            for (b, v) in vs.iter().enumerate() {
                for cd in 0..m * m {
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += v[j] * s2[(i * n + j) * m * m + cd];
                    }
                    out[(i * m + b) * m * m + cd] = acc;
                }
            }
        }
        out
    }

    /// Components `R(v_a, v_b, v_c, v_d)` for all index quadruples of `vs`.
    pub fn in_frame(&self, vs: &[&[f64]]) -> Vec<f64> {
        let n = self.n;
        let m = vs.len();
        let p = self.contract_last3(vs);
        let mut out = vec![0.0; m.pow(4)];
        for (a, v) in vs.iter().enumerate() {
            for bcd in 0..m * m * m {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += v[i] * p[i * m * m * m + bcd];
                }
                out[a * m * m * m + bcd] = acc;
            }
        }
        out
    }

    /// Sectional curvature of `span(x, y)`.
    pub fn sectional(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.require_dim(x.len())?;
        self.require_dim(y.len())?;
        let xx: f64 = x.iter().map(|v| v * v).sum();
        let yy: f64 = y.iter().map(|v| v * v).sum();
        let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let gram = xx * yy - xy * xy;
        if !(gram > DEGENERATE_PLANE_TOL) {
            return Err(Error::DegeneratePlane(gram));
        }
        Ok(self.eval(x, y, x, y) / gram)
    }

    /// `Ric_{jl} = sum_i R_{ijil}`, row-major `n x n`.
    pub fn ricci(&self) -> Vec<f64> {
        let n = self.n;
        let mut ric = vec![0.0; n * n];
        for j in 0..n {
            for l in 0..n {
                ric[j * n + l] = (0..n).map(|i| self.get(i, j, i, l)).sum();
            }
        }
        ric
    }

    pub fn scalar(&self) -> f64 {
        let n = self.n;
        let ric = self.ricci();
        (0..n).map(|i| ric[i * n + i]).sum()
    }

    /// The tensor expressed in a new orthonormal basis given by `basis`
    /// (row `p` is the `p`-th basis vector).
    pub fn change_basis(&self, basis: &[Vec<f64>]) -> Result<Self> {
        if basis.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: basis.len(),
            });
        }
        let refs: Vec<&[f64]> = basis.iter().map(|v| v.as_slice()).collect();
        for v in &refs {
            self.require_dim(v.len())?;
        }
        Ok(Self::from_trusted(self.n, self.in_frame(&refs)))
    }
}
