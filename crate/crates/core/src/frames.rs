//! Orthonormal frames in `R^n` and the group actions used on them.
//!
//! A [`Frame`] holds `k` orthonormal row vectors. Most of the crate works
//! with 4-frames; the sectional-curvature minimizer uses 2-frames.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::models::complex_structure;

/// Construction tolerance on `max |G - I|` for the Gram matrix `G`.
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Relative residual below which Gram–Schmidt reports rank deficiency.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    n: usize,
    rows: Vec<Vec<f64>>,
}

/// The pair `(lambda, mu)` in `[-1, 1]^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    lambda: f64,
    mu: f64,
}

impl Weights {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&lambda) || !(-1.0..=1.0).contains(&mu) {
            return Err(Error::InvalidWeights { lambda, mu });
        }
        Ok(Self { lambda, mu })
    }

    pub const fn unit() -> Self {
        Self {
            lambda: 1.0,
            mu: 1.0,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Uniform `size x size` grid over `[-1, 1]^2`, lambda-major.
    pub fn grid(size: usize) -> Vec<Weights> {
        let pts: Vec<f64> = if size <= 1 {
            vec![1.0]
        } else {
            (0..size)
                .map(|i| (-1.0 + 2.0 * i as f64 / (size - 1) as f64).clamp(-1.0, 1.0))
                .collect()
        };
        pts.iter()
            .flat_map(|&l| pts.iter().map(move |&m| Weights { lambda: l, mu: m }))
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gram–Schmidt with one reorthogonalization pass, in place.
pub(crate) fn gram_schmidt(rows: &mut [Vec<f64>]) -> Result<()> {
    for a in 0..rows.len() {
        let (done, rest) = rows.split_at_mut(a);
        let v = &mut rest[0];
        let norm0 = dot(v, v).sqrt();
        if !norm0.is_finite() || norm0 == 0.0 {
            return Err(Error::RankDeficient(norm0));
        }
        for _ in 0..2 {
            for u in done.iter() {
                let c = dot(u, v);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = dot(v, v).sqrt();
        if norm <= RANK_TOL * norm0 {
            return Err(Error::RankDeficient(norm / norm0));
        }
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(())
}

/// `max |G - I|` over the Gram matrix of the rows.
pub fn gram_residual(rows: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0_f64;
    for (a, u) in rows.iter().enumerate() {
        for (b, v) in rows.iter().enumerate() {
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((dot(u, v) - target).abs());
        }
    }
    worst
}

impl Frame {
    /// Validates rows that are claimed to be orthonormal already.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = Self::check_shape(&rows)?;
        let res = gram_residual(&rows);
        if !(res <= ORTHONORMAL_TOL) {
            return Err(Error::NotOrthonormal(res));
        }
        Ok(Self { n, rows })
    }

    fn check_shape(rows: &[Vec<f64>]) -> Result<usize> {
        let n = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.is_empty() || rows.len() > n {
            return Err(Error::InvalidDimension(
                rows.len(),
                "frame needs between 1 and n rows",
            ));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        if let Some(pos) = rows.iter().flatten().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(n)
    }

    /// Gram–Schmidt of the given rows, keeping the flag they span.
    pub fn orthonormalize(mut rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = Self::check_shape(&rows)?;
        gram_schmidt(&mut rows)?;
        Ok(Self { n, rows })
    }

    /// Orthonormalized standard-normal `k x n` draw, deterministic per seed.
    pub fn random(seed: u64, n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidDimension(n, "random frame needs 1 <= k <= n"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let rows: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
                .collect();
            if let Ok(f) = Self::orthonormalize(rows) {
                return Ok(f);
            }
        }
    }

    /// Random orthonormal 4-frame.
    pub fn random4(seed: u64, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidDimension(n, "4-frames need n >= 4"));
        }
        Self::random(seed, n, 4)
    }

    /// The first `k` standard basis vectors.
    pub fn standard(n: usize, k: usize) -> Result<Self> {
        Self::from_indices(n, &(0..k).collect::<Vec<_>>())
    }

    /// Frame of standard basis vectors `e_{idx[0]}, e_{idx[1]}, ...`.
    pub fn from_indices(n: usize, idx: &[usize]) -> Result<Self> {
        let rows = idx
            .iter()
            .map(|&i| {
                if i >= n {
                    return Err(Error::InvalidDimension(i, "basis index out of range"));
                }
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.rows[a]
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.rows
    }

    pub fn gram_residual(&self) -> f64 {
        gram_residual(&self.rows)
    }

    pub(crate) fn require_four(&self) -> Result<()> {
        if self.rows.len() != 4 {
            return Err(Error::InvalidDimension(self.rows.len(), "expected a 4-frame"));
        }
        Ok(())
    }

    /// Reorders the rows: output row `a` is input row `perm[a]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.rows.len() {
            return Err(Error::DimensionMismatch {
                expected: self.rows.len(),
                found: perm.len(),
            });
        }
        Self::new(perm.iter().map(|&p| self.rows[p].clone()).collect())
    }

    /// Orthogonal projector onto the span of the rows, row-major `n x n`.
    pub fn projector(&self) -> Vec<f64> {
        let n = self.n;
        let mut p = vec![0.0; n * n];
        for r in &self.rows {
            for i in 0..n {
                for j in 0..n {
                    p[i * n + j] += r[i] * r[j];
                }
            }
        }
        p
    }

    /// Completes the frame to an orthonormal basis of `R^n` by Gram–Schmidt
    /// against the standard basis vectors in index order.
    pub fn complete_basis(&self) -> Result<Vec<Vec<f64>>> {
        const SKIP_TOL: f64 = 1e-8;
        let n = self.n;
        let mut basis = self.rows.clone();
        for i in 0..n {
            if basis.len() == n {
                break;
            }
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            for _ in 0..2 {
                for u in &basis {
                    let c = dot(u, &v);
                    v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
                }
            }
            let norm = dot(&v, &v).sqrt();
            if norm > SKIP_TOL {
                v.iter_mut().for_each(|x| *x /= norm);
                basis.push(v);
            }
        }
        if basis.len() != n {
            return Err(Error::RankDeficient(basis.len() as f64));
        }
        Ok(basis)
    }

    /// Applies a row-major `n x n` matrix to every row.
    pub(crate) fn mapped(&self, u: &[f64]) -> Result<Self> {
        let n = self.n;
        let rows = self
            .rows
            .iter()
            .map(|r| (0..n).map(|i| dot(&u[i * n..(i + 1) * n], r)).collect())
            .collect();
        Self::new(rows)
    }
}

/// Embeds a 4-frame of `R^n` into `R^n x R^2`:
/// `(e1, 0, 0)`, `(mu e2, 0, sqrt(1 - mu^2))`, `(e3, 0, 0)`,
/// `(lambda e4, sqrt(1 - lambda^2), 0)`.
pub fn lift_frame(frame: &Frame, w: Weights) -> Result<Frame> {
    frame.require_four()?;
    let n = frame.dim();
    let pad = |v: &[f64], scale: f64, a: f64, b: f64| {
        let mut out: Vec<f64> = v.iter().map(|x| scale * x).collect();
        out.push(a);
        out.push(b);
        out
    };
    let s_mu = (1.0 - w.mu * w.mu).max(0.0).sqrt();
    let s_lambda = (1.0 - w.lambda * w.lambda).max(0.0).sqrt();
    let rows = vec![
        pad(frame.row(0), 1.0, 0.0, 0.0),
        pad(frame.row(1), w.mu, 0.0, s_mu),
        pad(frame.row(2), 1.0, 0.0, 0.0),
        pad(frame.row(3), w.lambda, s_lambda, 0.0),
    ];
    debug_assert_eq!(rows[0].len(), n + 2);
    Frame::new(rows)
}

/// The frames `(e1,e2,e3,e4)`, `(e2,e3,e1,e4)`, `(e3,e1,e2,e4)`.
pub fn cyclic_frames(frame: &Frame) -> Result<[Frame; 3]> {
    frame.require_four()?;
    Ok([
        frame.clone(),
        frame.permuted(&[1, 2, 0, 3])?,
        frame.permuted(&[2, 0, 1, 3])?,
    ])
}

/// Row-major matrix helpers shared by the holonomy code.
fn to_dmatrix(n: usize, a: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, a)
}

fn from_dmatrix(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = m[(i, j)];
        }
    }
    out
}

fn orthogonality_residual(n: usize, u: &[f64]) -> f64 {
    let m = to_dmatrix(n, u);
    (m.transpose() * &m - DMatrix::identity(n, n)).amax()
}

fn random_skew(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    (&b - b.transpose()) * 0.5
}

/// `exp(A)` for a seeded skew-symmetric `A` commuting with the standard
/// complex structure on `R^{2m}`; an element of `U(m)` as a row-major
/// `2m x 2m` orthogonal matrix.
pub fn random_unitary(seed: u64, m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::InvalidDimension(m, "unitary group needs m >= 1"));
    }
    let n = 2 * m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = random_skew(&mut rng, n);
    let j = to_dmatrix(n, &complex_structure(m));
    // average over {I, J}-conjugation: A = (B - J B J) / 2
    let a = (&b - &j * &b * &j) * 0.5;
    Ok(from_dmatrix(&a.exp()))
}

/// Independent rotations in consecutive coordinate blocks of the given sizes.
pub fn random_block_rotation(seed: u64, blocks: &[usize]) -> Result<Vec<f64>> {
    let n: usize = blocks.iter().sum();
    if n == 0 || blocks.contains(&0) {
        return Err(Error::InvalidOptions("block sizes must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DMatrix::zeros(n, n);
    let mut start = 0;
    for &b in blocks {
        let rot = random_skew(&mut rng, b).exp();
        out.view_mut((start, start), (b, b)).copy_from(&rot);
        start += b;
    }
    Ok(from_dmatrix(&out))
}

/// Seeded rotation of `R^n` with no block structure.
pub fn random_rotation(seed: u64, n: usize) -> Result<Vec<f64>> {
    random_block_rotation(seed, &[n])
}

/// Applies an arbitrary orthogonal `n x n` matrix to every row.
pub fn orthogonal_action(frame: &Frame, u: &[f64]) -> Result<Frame> {
    let n = frame.dim();
    if u.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: u.len(),
        });
    }
    let orth = orthogonality_residual(n, u);
    if !(orth <= ORTHONORMAL_TOL) {
        return Err(Error::NotUnitary { orth, comm: 0.0 });
    }
    frame.mapped(u)
}

/// Applies a `U(m)` element (orthogonal, commuting with `J`) to every row.
pub fn unitary_action(frame: &Frame, u: &[f64]) -> Result<Frame> {
    let n = frame.dim();
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidDimension(n, "unitary action needs even dimension"));
    }
    if u.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: u.len(),
        });
    }
    let orth = orthogonality_residual(n, u);
    let um = to_dmatrix(n, u);
    let j = to_dmatrix(n, &complex_structure(n / 2));
    let comm = (&um * &j - &j * &um).amax();
    if !(orth <= ORTHONORMAL_TOL && comm <= ORTHONORMAL_TOL) {
        return Err(Error::NotUnitary { orth, comm });
    }
    frame.mapped(u)
}

/// Applies an orthogonal matrix that is block diagonal for `blocks`.
pub fn block_action(frame: &Frame, u: &[f64], blocks: &[usize]) -> Result<Frame> {
    let n = frame.dim();
    if blocks.iter().sum::<usize>() != n || u.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: blocks.iter().sum(),
        });
    }
    let mut block_of = Vec::with_capacity(n);
    for (b, &size) in blocks.iter().enumerate() {
        block_of.extend(std::iter::repeat_n(b, size));
    }
    let off_block = (0..n * n)
        .filter(|&ij| block_of[ij / n] != block_of[ij % n])
        .fold(0.0_f64, |m, ij| m.max(u[ij].abs()));
    let orth = orthogonality_residual(n, u);
    if !(orth <= ORTHONORMAL_TOL && off_block <= ORTHONORMAL_TOL) {
        return Err(Error::IncompatibleGroup(format!(
            "not a block rotation: orthogonality {orth:e}, off-block {off_block:e}"
        )));
    }
    frame.mapped(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn orthonormalize_exact_cases() {
        let e = |i: usize| {
            let mut v = vec![0.0; 4];
            v[i] = 1.0;
            v
        };
        let f = Frame::orthonormalize(vec![e(0), e(1), e(2), e(3)]).unwrap();
        assert_eq!(f.rows(), &[e(0), e(1), e(2), e(3)]);
        let mut v = e(0);
        v[1] = 1.0;
        let f = Frame::orthonormalize(vec![e(0), v, e(2), e(3)]).unwrap();
        for a in 0..4 {
            assert!(max_abs_diff(f.row(a), &e(a)) < 1e-15);
        }
    }

    #[test]
    fn orthonormalize_keeps_orthonormal_input() {
        let f = Frame::random4(3, 7).unwrap();
        let g = Frame::orthonormalize(f.rows().to_vec()).unwrap();
        for a in 0..4 {
            assert!(max_abs_diff(f.row(a), g.row(a)) < 1e-14);
        }
    }

    #[test]
    fn orthonormalize_rejects_rank_deficiency() {
        let rows = vec![
            vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        ];
        assert!(matches!(Frame::orthonormalize(rows), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn new_rejects_non_orthonormal() {
        let rows = vec![vec![1.0, 0.0, 0.0], vec![0.1, 1.0, 0.0]];
        assert!(matches!(Frame::new(rows), Err(Error::NotOrthonormal(_))));
    }

    #[test]
    fn random_frames_are_seeded() {
        let a = Frame::random4(5, 6).unwrap();
        assert_eq!(a, Frame::random4(5, 6).unwrap());
        assert_ne!(a, Frame::random4(6, 6).unwrap());
        assert!(a.gram_residual() < 1e-12);
        assert!(Frame::random4(0, 3).is_err());
    }

    #[test]
    fn weights_validation_and_grid() {
        assert!(Weights::new(1.0, -1.0).is_ok());
        assert!(Weights::new(1.01, 0.0).is_err());
        let g = Weights::grid(21);
        assert_eq!(g.len(), 441);
        assert_eq!(g[0], Weights::new(-1.0, -1.0).unwrap());
        assert_eq!(g[440], Weights::unit());
        assert!((g[10 * 21 + 10].lambda()).abs() < 1e-15);
    }

    #[test]
    fn lift_special_weights() {
        let f = Frame::random4(1, 5).unwrap();
        let l = lift_frame(&f, Weights::unit()).unwrap();
        for a in 0..4 {
            assert_eq!(&l.row(a)[..5], f.row(a));
            assert_eq!(&l.row(a)[5..], &[0.0, 0.0]);
        }
        let l = lift_frame(&f, Weights::new(0.0, 1.0).unwrap()).unwrap();
        let mut want = vec![0.0; 7];
        want[5] = 1.0;
        assert_eq!(l.row(3), want.as_slice());
        let l = lift_frame(&f, Weights::new(0.6, -0.8).unwrap()).unwrap();
        assert!(l.gram_residual() < 1e-14);
    }

    #[test]
    fn cyclic_frames_share_span() {
        let f = Frame::random4(9, 6).unwrap();
        let cyc = cyclic_frames(&f).unwrap();
        let p0 = f.projector();
        for g in &cyc {
            assert!(g.gram_residual() < 1e-14);
            assert!(max_abs_diff(&g.projector(), &p0) < 1e-12);
        }
        // the permutation (1,2,0) has order three
        let thrice = cyc[1]
            .permuted(&[1, 2, 0, 3])
            .unwrap()
            .permuted(&[1, 2, 0, 3])
            .unwrap();
        assert_eq!(thrice, f);
    }

    #[test]
    fn random_unitary_residuals() {
        for seed in 0..5 {
            let u = random_unitary(seed, 3).unwrap();
            let um = to_dmatrix(6, &u);
            let j = to_dmatrix(6, &complex_structure(3));
            assert!(orthogonality_residual(6, &u) < 1e-10);
            assert!((&um * &j - &j * &um).amax() < 1e-10);
        }
    }

    #[test]
    fn identity_action_and_gram_preservation() {
        let f = Frame::random4(2, 4).unwrap();
        let id = from_dmatrix(&DMatrix::identity(4, 4));
        assert_eq!(unitary_action(&f, &id).unwrap(), f);
        let u = random_unitary(4, 2).unwrap();
        assert!(unitary_action(&f, &u).unwrap().gram_residual() < 1e-12);
        let not_unitary = random_rotation(1, 4).unwrap();
        assert!(matches!(
            unitary_action(&f, &not_unitary),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn block_action_checks_structure() {
        let f = Frame::random4(2, 4).unwrap();
        let u = random_block_rotation(3, &[2, 2]).unwrap();
        assert!(block_action(&f, &u, &[2, 2]).is_ok());
        let r = random_rotation(3, 4).unwrap();
        assert!(matches!(
            block_action(&f, &r, &[2, 2]),
            Err(Error::IncompatibleGroup(_))
        ));
    }

    #[test]
    fn basis_completion_is_orthonormal() {
        let f = Frame::random4(8, 7).unwrap();
        let basis = f.complete_basis().unwrap();
        assert_eq!(basis.len(), 7);
        assert!(gram_residual(&basis) < 1e-13);
        assert_eq!(&basis[..4], f.rows());
    }
}
