//! Real orthonormal eigenvectors of the centered DFT.
//!
//! The vectors are eigenvectors of a symmetric tridiagonal matrix that commutes
//! with the centered DFT and with the reversal operator. Solving the even and odd
//! halves separately keeps every vector exactly (anti)symmetric, which is what
//! makes it an eigenvector of the transform rather than a mixture.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub const CACHE_MAGIC: &[u8; 8] = b"FRFTEIGB";
pub const CACHE_VERSION: u32 = 1;

/// Centered-DFT eigenbasis of size `N`, ordered by Hermite index.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    n: usize,
    /// Row-major `V[n][k]`; column `k` is the eigenvector with Hermite index `hermite[k]`.
    vectors: Vec<f64>,
    hermite: Vec<usize>,
}

impl EigenBasis {
    pub fn new(n_samples: usize) -> Result<Self> {
        build_eigenbasis(n_samples)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Row-major `N×N` matrix.
    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    pub fn hermite_indices(&self) -> &[usize] {
        &self.hermite
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.vectors[row * self.n + col]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, k)).collect()
    }

    /// Eigen-coefficients `Vᵀ s`.
    pub fn analyze(&self, signal: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(signal.len())?;
        let n = self.n;
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for (row, s) in self.vectors.chunks_exact(n).zip(signal) {
            for ((r, i), v) in re.iter_mut().zip(im.iter_mut()).zip(row) {
                *r += v * s.re;
                *i += v * s.im;
            }
        }
        Ok(re.into_iter().zip(im).map(|(r, i)| Complex64::new(r, i)).collect())
    }

    /// `V · diag(e^{-j α p_k}) · c` for eigen-coefficients `c`.
    pub fn synthesize(&self, coeffs: &[Complex64], angle_rad: f64) -> Result<Vec<Complex64>> {
        self.check_len(coeffs.len())?;
        let rotated: Vec<Complex64> = coeffs
            .iter()
            .zip(&self.hermite)
            .map(|(c, &p)| c * self.eigen_phase(p, angle_rad))
            .collect();
        let (re, im): (Vec<f64>, Vec<f64>) = rotated.iter().map(|c| (c.re, c.im)).unzip();
        Ok(self
            .vectors
            .chunks_exact(self.n)
            .map(|row| {
                let mut acc_re = 0.0;
                let mut acc_im = 0.0;
                for ((v, r), i) in row.iter().zip(&re).zip(&im) {
                    acc_re += v * r;
                    acc_im += v * i;
                }
                Complex64::new(acc_re, acc_im)
            })
            .collect())
    }

    fn eigen_phase(&self, p: usize, angle_rad: f64) -> Complex64 {
        // Reduce p·α modulo 2π before the exponential; p can reach ~10³.
        let phase = (p as f64 * angle_rad).rem_euclid(2.0 * PI);
        Complex64::from_polar(1.0, -phase)
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(invalid!(
                "signal length {len} does not match eigenbasis size {}",
                self.n
            ));
        }
        Ok(())
    }

    /// Writes the little-endian cache file: magic, `u32` N, `u32` version, then
    /// `V` as column-major `f64`.
    pub fn write_cache(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let n = u32::try_from(self.n).map_err(|_| invalid!("basis too large to cache"))?;
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&n.to_le_bytes())?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        for k in 0..self.n {
            for r in 0..self.n {
                w.write_all(&self.get(r, k).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_cache(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..8] != CACHE_MAGIC {
            return Err(Error::Format("eigenbasis cache: bad magic".into()));
        }
        let n = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let version = u32::from_le_bytes(header[12..16].try_into().unwrap());
        if version != CACHE_VERSION {
            return Err(Error::Format(format!(
                "eigenbasis cache: unsupported version {version}"
            )));
        }
        if n < 2 {
            return Err(Error::Format(format!("eigenbasis cache: invalid size {n}")));
        }
        let mut vectors = vec![0.0; n * n];
        let mut buf = [0u8; 8];
        for k in 0..n {
            for row in 0..n {
                r.read_exact(&mut buf)?;
                vectors[row * n + k] = f64::from_le_bytes(buf);
            }
        }
        Ok(Self {
            n,
            vectors,
            hermite: (0..n).collect(),
        })
    }
}

/// Diagonal and off-diagonal of the tridiagonal matrix commuting with the centered DFT.
pub(crate) fn commuting_tridiagonal(n: usize) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    let diag = (0..n)
        .map(|i| -((2 * i + 1) as f64 * PI / nf).cos())
        .collect();
    let off = (0..n.saturating_sub(1))
        .map(|i| (PI * (i + 1) as f64 / nf).sin().powi(2))
        .collect();
    (diag, off)
}

struct Eigenpair {
    value: f64,
    vector: Vec<f64>,
}

fn solve_block(
    diag: &[f64],
    off: &[f64],
    expand: impl Fn(&[f64]) -> Vec<f64>,
) -> Vec<Eigenpair> {
    let m = diag.len();
    if m == 0 {
        return Vec::new();
    }
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = diag[i];
    }
    for (i, &b) in off.iter().enumerate() {
        t[(i, i + 1)] = b;
        t[(i + 1, i)] = b;
    }
    let eig = SymmetricEigen::new(t);
    (0..m)
        .map(|j| {
            let u: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
            Eigenpair {
                value: eig.eigenvalues[j],
                vector: expand(&u),
            }
        })
        .collect()
}

pub fn build_eigenbasis(n_samples: usize) -> Result<EigenBasis> {
    if n_samples < 2 {
        return Err(invalid!("eigenbasis needs at least 2 samples, got {n_samples}"));
    }
    let n = n_samples;
    let (a, b) = commuting_tridiagonal(n);
    let h = n / 2;
    let s = std::f64::consts::FRAC_1_SQRT_2;

    let mut pairs = Vec::with_capacity(n);
    if n % 2 == 0 {
        // Even N: the two halves couple only through b[h-1].
        let mut de = a[..h].to_vec();
        let mut d_o = a[..h].to_vec();
        de[h - 1] += b[h - 1];
        d_o[h - 1] -= b[h - 1];
        let mirror = |u: &[f64], sign: f64| {
            let mut v = vec![0.0; n];
            for (i, &x) in u.iter().enumerate() {
                v[i] = x * s;
                v[n - 1 - i] = sign * x * s;
            }
            v
        };
        pairs.extend(solve_block(&de, &b[..h - 1], |u| mirror(u, 1.0)));
        pairs.extend(solve_block(&d_o, &b[..h - 1], |u| mirror(u, -1.0)));
    } else {
        // Odd N: the centre sample belongs to the even half only.
        let de = a[..=h].to_vec();
        let mut oe = b[..h].to_vec();
        oe[h - 1] *= std::f64::consts::SQRT_2;
        pairs.extend(solve_block(&de, &oe, |u| {
            let mut v = vec![0.0; n];
            for i in 0..h {
                v[i] = u[i] * s;
                v[n - 1 - i] = u[i] * s;
            }
            v[h] = u[h];
            v
        }));
        pairs.extend(solve_block(&a[..h], &b[..h - 1], |u| {
            let mut v = vec![0.0; n];
            for (i, &x) in u.iter().enumerate() {
                v[i] = x * s;
                v[n - 1 - i] = -x * s;
            }
            v
        }));
    }

    // Descending eigenvalue order is ascending Hermite order.
    pairs.sort_by(|x, y| y.value.total_cmp(&x.value));
    let mut vectors = vec![0.0; n * n];
    for (k, pair) in pairs.iter_mut().enumerate() {
        let peak = pair.vector.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let lead = pair
            .vector
            .iter()
            .find(|x| x.abs() > 1e-6 * peak)
            .copied()
            .unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for (r, x) in pair.vector.iter().enumerate() {
            vectors[r * n + k] = sign * x;
        }
    }
    Ok(EigenBasis {
        n,
        vectors,
        hermite: (0..n).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::centered_dft_entry;

    fn residuals(basis: &EigenBasis) -> Vec<f64> {
        let n = basis.len();
        (0..n)
            .map(|k| {
                let v = basis.column(k);
                let lambda = Complex64::from_polar(
                    1.0,
                    -PI * basis.hermite_indices()[k] as f64 / 2.0,
                );
                let mut err = 0.0;
                for r in 0..n {
                    let cv: Complex64 =
                        (0..n).map(|c| centered_dft_entry(n, r, c) * v[c]).sum();
                    err += (cv - lambda * v[r]).norm_sqr();
                }
                err.sqrt()
            })
            .collect()
    }

    #[test]
    fn tridiagonal_commutes_with_centered_dft() {
        for n in [5, 8, 13] {
            let (a, b) = commuting_tridiagonal(n);
            let t = |i: usize, j: usize| -> f64 {
                if i == j {
                    a[i]
                } else if i + 1 == j {
                    b[i]
                } else if j + 1 == i {
                    b[j]
                } else {
                    0.0
                }
            };
            for i in 0..n {
                for j in 0..n {
                    let tc: Complex64 = (0..n).map(|k| centered_dft_entry(n, k, j) * t(i, k)).sum();
                    let ct: Complex64 = (0..n).map(|k| centered_dft_entry(n, i, k) * t(k, j)).sum();
                    assert!((tc - ct).norm() < 1e-12, "n={n} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn orthonormal_small() {
        let basis = build_eigenbasis(4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = (0..4).map(|r| basis.get(r, i) * basis.get(r, j)).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn columns_are_centered_dft_eigenvectors() {
        for n in [2, 3, 7, 16, 33] {
            let basis = build_eigenbasis(n).unwrap();
            for (k, r) in residuals(&basis).into_iter().enumerate() {
                assert!(r <= 1e-8, "n={n} k={k} residual={r}");
            }
        }
    }

    #[test]
    fn sign_convention_and_determinism() {
        let a = build_eigenbasis(24).unwrap();
        let b = build_eigenbasis(24).unwrap();
        assert_eq!(a, b);
        for k in 0..24 {
            let col = a.column(k);
            let peak = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let lead = col.iter().find(|x| x.abs() > 1e-6 * peak).unwrap();
            assert!(*lead > 0.0);
        }
    }

    #[test]
    fn rejects_tiny_sizes() {
        assert!(matches!(build_eigenbasis(1), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_eigenbasis(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn cache_round_trip_and_header() {
        let basis = build_eigenbasis(10).unwrap();
        let mut bytes = Vec::new();
        basis.write_to(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 16 + 8 * 100);
        assert_eq!(&bytes[..8], b"FRFTEIGB");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 10);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 1);
        // Column-major: the second f64 is V[1][0].
        let second = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
        assert_eq!(second, basis.get(1, 0));
        let back = EigenBasis::read_from(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, basis);

        bytes[0] = b'X';
        assert!(matches!(
            EigenBasis::read_from(&mut bytes.as_slice()),
            Err(Error::Format(_))
        ));
    }
}
