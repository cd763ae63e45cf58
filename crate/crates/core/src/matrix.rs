//! Dense symmetric matrices and the random ensembles built from profiles.

use std::io::Write;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::synth_gaussian_field;
use crate::profile::{Profile, RadialFunction, SpectralDensity};
use crate::rng::{Role, StreamKey};

pub const MAX_DIM: usize = 4096;

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("matrix dimension must be positive".into()));
    }
    if n > MAX_DIM {
        return Err(Error::SizeLimit {
            what: "matrix dimension N",
            requested: n,
            limit: MAX_DIM,
        });
    }
    Ok(())
}

/// A dense N×N matrix with entries(i,j) == entries(j,i) exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    data: Array2<f64>,
}

impl SymmetricMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (r, c) = data.dim();
        if r != c {
            return Err(Error::Malformed(format!("matrix is {r}x{c}, not square")));
        }
        check_dim(r)?;
        for i in 0..r {
            for j in 0..i {
                if data[[i, j]] != data[[j, i]] {
                    return Err(Error::Malformed(format!(
                        "matrix is not symmetric at ({}, {}): {} vs {}",
                        i + 1,
                        j + 1,
                        data[[i, j]],
                        data[[j, i]]
                    )));
                }
            }
        }
        Ok(Self { data })
    }

    /// Fills the lower triangle (diagonal included) row by row from `f(i, j)`,
    /// i ≥ j, 0-based, and mirrors it.
    fn from_lower(n: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|i| (0..=i).map(|j| f(i, j)).collect()).collect();
        let mut data = Array2::zeros((n, n));
        for (i, row) in rows.into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                data[[i, j]] = v;
                data[[j, i]] = v;
            }
        }
        Self { data }
    }

    pub fn identity(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self { data: Array2::eye(n) })
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        check_dim(values.len())?;
        Ok(Self {
            data: Array2::from_diag(&ndarray::Array1::from(values.to_vec())),
        })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[[i, j]]
    }

    pub fn trace(&self) -> f64 {
        self.data.diag().sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Indices of rows that are identically zero.
    pub fn zero_rows(&self) -> Vec<usize> {
        self.data
            .rows()
            .into_iter()
            .enumerate()
            .filter(|(_, r)| r.iter().all(|v| *v == 0.0))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_dim(self, other)?;
        Ok(Self {
            data: &self.data + &other.data,
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { data: &self.data * c }
    }

    /// Debug dump: first line N, then one comma-separated row per line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.n())?;
        for row in self.data.rows() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

fn same_dim(a: &SymmetricMatrix, b: &SymmetricMatrix) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::Malformed(format!("dimension mismatch: {} vs {}", a.n(), b.n())));
    }
    Ok(())
}

fn lattice(i: usize, n: usize) -> f64 {
    (i + 1) as f64 / (n + 1) as f64
}

/// A_{f,N}(i,j) = f(i/(N+1), j/(N+1)), 1 ≤ i,j ≤ N.
pub fn profile_matrix(f: &Profile, n: usize) -> Result<SymmetricMatrix> {
    check_dim(n)?;
    let m = SymmetricMatrix::from_lower(n, |i, j| f.value(lattice(i, n), lattice(j, n)));
    if let Some(v) = m.data.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::ProfileValidity(format!("profile matrix has entry {v}")));
    }
    Ok(m)
}

/// Scaled Wigner matrix: X_{ij}/√N with the upper triangle (diagonal included)
/// drawn row by row from the stream `key`.
pub fn wigner(n: usize, key: StreamKey) -> Result<SymmetricMatrix> {
    check_dim(n)?;
    let mut rng = key.rng();
    let scale = 1.0 / (n as f64).sqrt();
    let mut data = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let x: f64 = rng.sample(StandardNormal);
            data[[i, j]] = x * scale;
            data[[j, i]] = x * scale;
        }
    }
    Ok(SymmetricMatrix { data })
}

pub fn hadamard(a: &SymmetricMatrix, b: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    same_dim(a, b)?;
    Ok(SymmetricMatrix {
        data: &a.data * &b.data,
    })
}

/// Which random matrix to build.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    /// A_f ∘ W.
    Hadamard(Profile),
    /// A_{f_k} ∘ W with the same W as the untruncated model.
    HadamardTruncated { profile: Profile, k: u32 },
    /// R W R with R = diag(r(i/(N+1))).
    Sandwich(RadialFunction),
    /// T_N(i,j) = (G_ij + G_ji)/√N for a synthesized stationary field G.
    GaussianProcess { density: SpectralDensity, k: usize },
    /// The pair U = A_{f+α} ∘ W and V + αY with V = A_{√(f²+2αf)} ∘ W on the
    /// same W and an independent Wigner Y.
    Shifted { profile: Profile, alpha: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub model: Model,
    pub n: usize,
    pub seed: u64,
    pub replicate: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Assembled {
    Single(SymmetricMatrix),
    Pair { u: SymmetricMatrix, v_plus_y: SymmetricMatrix },
}

impl Assembled {
    pub fn single(self) -> Result<SymmetricMatrix> {
        match self {
            Assembled::Single(m) => Ok(m),
            Assembled::Pair { .. } => Err(Error::Malformed("expected a single matrix, got a pair".into())),
        }
    }
}

impl EnsembleSpec {
    pub fn new(model: Model, n: usize, seed: u64, replicate: u64) -> Self {
        Self {
            model,
            n,
            seed,
            replicate,
        }
    }

    fn key(&self, role: Role) -> StreamKey {
        StreamKey::new(self.seed, role, self.replicate)
    }
}

pub fn assemble(spec: &EnsembleSpec) -> Result<Assembled> {
    let n = spec.n;
    check_dim(n)?;
    let w = || wigner(n, spec.key(Role::Wigner));
    let m = match &spec.model {
        Model::Hadamard(f) => hadamard(&profile_matrix(f, n)?, &w()?)?,
        Model::HadamardTruncated { profile, k } => hadamard(&profile_matrix(&profile.truncate(*k)?, n)?, &w()?)?,
        Model::Sandwich(r) => sandwich(r, &w()?)?,
        Model::GaussianProcess { density, k } => {
            let g = synth_gaussian_field(density, n, *k, spec.key(Role::Field))?;
            let scale = 1.0 / (n as f64).sqrt();
            let v = g.values();
            SymmetricMatrix::from_lower(n, |i, j| (v[[i, j]] + v[[j, i]]) * scale)
        }
        Model::Shifted { profile, alpha } => {
            let w = w()?;
            let u = hadamard(&profile_matrix(&profile.shifted(*alpha)?, n)?, &w)?;
            let v = hadamard(&profile_matrix(&profile.remainder(*alpha)?, n)?, &w)?;
            let y = wigner(n, spec.key(Role::Independent))?;
            return Ok(Assembled::Pair {
                u,
                v_plus_y: v.add(&y.scaled(*alpha))?,
            });
        }
    };
    Ok(Assembled::Single(m))
}

/// R W R with R = diag(r(i/(N+1))), formed entrywise as (r_i r_j) W_ij.
pub fn sandwich(r: &RadialFunction, w: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let n = w.n();
    let rv: Vec<f64> = (0..n).map(|i| r.value(lattice(i, n))).collect();
    if let Some(v) = rv.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::ProfileValidity(format!("radial function takes the value {v}")));
    }
    Ok(SymmetricMatrix::from_lower(n, |i, j| (rv[i] * rv[j]) * w.data[[i, j]]))
}

/// (1/N) Tr(Mⁿ) by repeated multiplication: with P_k = M^k,
/// Tr(M^{2k}) = ‖P_k‖²_F and Tr(M^{2k+1}) = Σ P_k ∘ P_{k+1}.
pub fn trace_moment(m: &SymmetricMatrix, n: usize) -> Result<f64> {
    trace_moments(m, n).map(|v| v[n - 1])
}

/// (1/N) Tr(M^k) for k = 1..=n_max.
pub fn trace_moments(m: &SymmetricMatrix, n_max: usize) -> Result<Vec<f64>> {
    if n_max == 0 {
        return Err(Error::Domain("moment order must be at least 1".into()));
    }
    let size = m.n() as f64;
    let mut powers = vec![m.data.clone()];
    while powers.len() < n_max / 2 + 1 {
        let next = powers.last().unwrap().dot(&m.data);
        powers.push(next);
    }
    let out = (1..=n_max)
        .map(|k| {
            let t = if k == 1 {
                m.trace()
            } else {
                let a = &powers[k / 2 - 1];
                let b = &powers[k.div_ceil(2) - 1];
                a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>()
            };
            t / size
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::parse_profile;
    use ndarray::array;

    #[test]
    fn profile_matrix_examples() {
        let a = profile_matrix(&Profile::constant(0.7).unwrap(), 3).unwrap();
        assert!(a.data().iter().all(|v| *v == 0.7));
        let a = profile_matrix(&parse_profile("x+y").unwrap(), 2).unwrap();
        let want = array![[2.0 / 3.0, 1.0], [1.0, 4.0 / 3.0]];
        for (x, y) in a.data().iter().zip(want.iter()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn wigner_is_deterministic() {
        let key = StreamKey::new(3, Role::Wigner, 0);
        assert_eq!(wigner(20, key).unwrap(), wigner(20, key).unwrap());
        assert_ne!(wigner(20, key).unwrap(), wigner(20, StreamKey::new(3, Role::Wigner, 1)).unwrap());
    }

    #[test]
    fn hadamard_examples() {
        let a = SymmetricMatrix::new(array![[1.0, 2.0], [2.0, 3.0]]).unwrap();
        let b = SymmetricMatrix::new(array![[5.0, 6.0], [6.0, 7.0]]).unwrap();
        assert_eq!(hadamard(&a, &b).unwrap().data(), &array![[5.0, 12.0], [12.0, 21.0]]);
        let ones = SymmetricMatrix::new(Array2::ones((2, 2))).unwrap();
        assert_eq!(hadamard(&a, &ones).unwrap(), a);
        assert!(hadamard(&a, &SymmetricMatrix::identity(3).unwrap()).is_err());
        assert!(SymmetricMatrix::new(array![[1.0, 2.0], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn trace_moment_examples() {
        let i = SymmetricMatrix::identity(4).unwrap();
        for n in 1..6 {
            assert_eq!(trace_moment(&i, n).unwrap(), 1.0);
        }
        let d = SymmetricMatrix::diagonal(&[1.0, 2.0, 3.0]).unwrap();
        assert!((trace_moment(&d, 2).unwrap() - 14.0 / 3.0).abs() < 1e-15);
        assert!((trace_moment(&d, 3).unwrap() - 12.0).abs() < 1e-15);
    }

    #[test]
    fn size_guard() {
        assert!(matches!(wigner(MAX_DIM + 1, StreamKey::new(0, Role::Wigner, 0)), Err(Error::SizeLimit { .. })));
    }
}
