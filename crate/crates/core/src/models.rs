//! Model curvature tensors: round spheres, complex projective space with the
//! Fubini–Study metric, metric products, and flat padding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{offset, CurvatureTensor};

/// Standard complex structure on `R^{2m}` as a row-major `2m x 2m` matrix:
/// `J e_{2k} = e_{2k+1}`, `J e_{2k+1} = -e_{2k}`.
pub fn complex_structure(m: usize) -> Vec<f64> {
    let n = 2 * m;
    let mut j = vec![0.0; n * n];
    for k in 0..m {
        j[(2 * k + 1) * n + 2 * k] = 1.0;
        j[(2 * k) * n + 2 * k + 1] = -1.0;
    }
    j
}

#[inline]
fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Constant curvature `kappa`: `R_{ijkl} = kappa (d_ik d_jl - d_il d_jk)`.
pub fn sphere(n: usize, kappa: f64) -> Result<CurvatureTensor> {
    if n < 2 {
        return Err(Error::InvalidDimension(n, "sphere needs n >= 2"));
    }
    if !kappa.is_finite() {
        return Err(Error::InvalidOptions(format!("curvature scale {kappa} not finite")));
    }
    let mut comps = vec![0.0; n.pow(4)];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            comps[offset(n, i, j, i, j)] = kappa;
            comps[offset(n, i, j, j, i)] = -kappa;
        }
    }
    Ok(CurvatureTensor::from_trusted(n, comps))
}

/// Kähler tensor of constant holomorphic sectional curvature `c` on
/// `R^{2m}`:
/// `(c/4)(d_ik d_jl - d_il d_jk + J_ik J_jl - J_il J_jk + 2 J_ij J_kl)`.
pub fn complex_projective(m: usize, c: f64) -> Result<CurvatureTensor> {
    if m < 2 {
        return Err(Error::InvalidDimension(m, "complex projective model needs m >= 2"));
    }
    if !c.is_finite() {
        return Err(Error::InvalidOptions(format!("holomorphic scale {c} not finite")));
    }
    let n = 2 * m;
    let jm = complex_structure(m);
    let jj = |a: usize, b: usize| jm[a * n + b];
    let q = c / 4.0;
    let mut comps = vec![0.0; n.pow(4)];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = delta(i, k) * delta(j, l) - delta(i, l) * delta(j, k)
                        + jj(i, k) * jj(j, l)
                        - jj(i, l) * jj(j, k)
                        + 2.0 * jj(i, j) * jj(k, l);
                    comps[offset(n, i, j, k, l)] = q * v;
                }
            }
        }
    }
    Ok(CurvatureTensor::from_trusted(n, comps))
}

/// Curvature of a Riemannian product: block direct sum, mixed components zero.
pub fn product(first: &CurvatureTensor, second: &CurvatureTensor) -> CurvatureTensor {
    let (n1, n2) = (first.dim(), second.dim());
    let n = n1 + n2;
    let mut comps = vec![0.0; n.pow(4)];
    for i in 0..n1 {
        for j in 0..n1 {
            for k in 0..n1 {
                for l in 0..n1 {
                    comps[offset(n, i, j, k, l)] = first.get(i, j, k, l);
                }
            }
        }
    }
    for i in 0..n2 {
        for j in 0..n2 {
            for k in 0..n2 {
                for l in 0..n2 {
                    comps[offset(n, n1 + i, n1 + j, n1 + k, n1 + l)] = second.get(i, j, k, l);
                }
            }
        }
    }
    CurvatureTensor::from_trusted(n, comps)
}

/// Product with flat `R^k`; the flat directions are appended last.
pub fn pad_euclidean(r: &CurvatureTensor, k: usize) -> CurvatureTensor {
    if k == 0 {
        return r.clone();
    }
    let n = r.dim() + k;
    let mut comps = vec![0.0; n.pow(4)];
    let m = r.dim();
    for i in 0..m {
        for j in 0..m {
            for a in 0..m {
                let src = offset(m, i, j, a, 0);
                let dst = offset(n, i, j, a, 0);
                comps[dst..dst + m].copy_from_slice(&r.components()[src..src + m]);
            }
        }
    }
    CurvatureTensor::from_trusted(n, comps)
}

/// Declarative description of a model tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Sphere {
        n: usize,
        kappa: f64,
    },
    ComplexProjective {
        m: usize,
        c: f64,
    },
    Product {
        first: Box<ModelSpec>,
        second: Box<ModelSpec>,
    },
    PadEuclidean {
        base: Box<ModelSpec>,
        k: usize,
    },
    Combination {
        a: f64,
        first: Box<ModelSpec>,
        b: f64,
        second: Box<ModelSpec>,
    },
    Random {
        n: usize,
        seed: u64,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<CurvatureTensor> {
        match self {
            ModelSpec::Sphere { n, kappa } => sphere(*n, *kappa),
            ModelSpec::ComplexProjective { m, c } => complex_projective(*m, *c),
            ModelSpec::Product { first, second } => Ok(product(&first.build()?, &second.build()?)),
            ModelSpec::PadEuclidean { base, k } => Ok(pad_euclidean(&base.build()?, *k)),
            ModelSpec::Combination { a, first, b, second } => {
                CurvatureTensor::combine(*a, &first.build()?, *b, &second.build()?)
            }
            ModelSpec::Random { n, seed } => CurvatureTensor::random(*seed, *n),
        }
    }
}
