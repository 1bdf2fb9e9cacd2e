//! Uniform random samples on [-1, 1]^d, target functions, noise and error
//! metrics.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`). Point `j` of a draw
//! with seed `s` uses the generator seeded by `s` on stream `j`, so the
//! output never depends on evaluation order or thread count. Noise uses a
//! seed derived from `s` by SplitMix64 so it is independent of the points.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::polybasis::check_unit;
use crate::prolate::ProlateBasis1D;
use crate::scalar::Real;

/// SplitMix64 finalizer; used to derive independent sub-seeds.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const TAG_NOISE: u64 = 0x006e_6f69_7365;
const TAG_TEST: u64 = 0x7465_7374;

/// Generator for substream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `m` i.i.d. uniform points in [-1, 1]^d, flattened row by row.
pub fn draw_uniform<T: Real>(d: usize, m: usize, seed: u64) -> Result<Vec<T>> {
    if m == 0 {
        return invalid("number of points must be at least 1");
    }
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    let mut out = vec![T::zero(); d * m];
    out.par_chunks_mut(d).enumerate().for_each(|(j, p)| {
        let mut rng = stream_rng(seed, j as u64);
        for c in p.iter_mut() {
            let u: f64 = rng.gen();
            *c = T::lit(2.0 * u - 1.0);
        }
    });
    Ok(out)
}

/// Lookup table target: values at exactly the listed points.
#[derive(Clone, Debug)]
pub struct TableTarget<T> {
    d: usize,
    values: Vec<Complex<T>>,
    index: HashMap<Vec<u64>, usize>,
}

impl<T: Real> TableTarget<T> {
    pub fn new(d: usize, points: &[T], values: Vec<Complex<T>>) -> Result<Self> {
        if d == 0 || points.len() != d * values.len() {
            return Err(Error::DimensionMismatch { expected: d * values.len(), got: points.len() });
        }
        let index = points
            .chunks(d)
            .enumerate()
            .map(|(i, p)| (key(p), i))
            .collect();
        Ok(TableTarget { d, values, index })
    }
}

fn key<T: Real>(p: &[T]) -> Vec<u64> {
    p.iter().map(|c| c.to_f64_lossy().to_bits()).collect()
}

#[derive(Clone, Debug)]
pub enum TargetFunction<T> {
    /// `e^{−πx²}`
    G1,
    /// `e^{4πix}`
    G2,
    /// `e^{−π(x²+y²+0.2xy)}`
    G3,
    /// `cos(10x)·e^{−πx²}`
    F1,
    /// `cos(0.2x)cos(0.2y)·e^{−π(x²+y²)}`
    F2,
    /// Tensor Slepian function `φ_{w,ν}`.
    BasisElement { basis: Arc<ProlateBasis1D<T>>, nu: Vec<usize> },
    Table(Arc<TableTarget<T>>),
}

impl<T: Real> TargetFunction<T> {
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "g1" => Self::G1,
            "g2" => Self::G2,
            "g3" => Self::G3,
            "f1" => Self::F1,
            "f2" => Self::F2,
            other => return invalid(format!("unknown target function '{other}'")),
        })
    }

    pub fn name(&self) -> String {
        match self {
            Self::G1 => "g1".into(),
            Self::G2 => "g2".into(),
            Self::G3 => "g3".into(),
            Self::F1 => "f1".into(),
            Self::F2 => "f2".into(),
            Self::BasisElement { nu, .. } => format!("basis_element{nu:?}"),
            Self::Table(_) => "custom_table".into(),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Self::G1 | Self::G2 | Self::F1 => 1,
            Self::G3 | Self::F2 => 2,
            Self::BasisElement { nu, .. } => nu.len(),
            Self::Table(t) => t.d,
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            Self::G2 => false,
            Self::Table(t) => t.values.iter().all(|v| v.im == T::zero()),
            _ => true,
        }
    }

    pub fn evaluate(&self, y: &[T]) -> Result<Complex<T>> {
        if y.len() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), got: y.len() });
        }
        for &c in y {
            check_unit(c)?;
        }
        self.eval_unchecked(y)
    }

    fn eval_unchecked(&self, y: &[T]) -> Result<Complex<T>> {
        let pi = T::PI();
        let re = |v: T| Complex::new(v, T::zero());
        Ok(match self {
            Self::G1 => re((-pi * y[0] * y[0]).exp()),
            Self::G2 => Complex::from_polar(T::one(), T::lit(4.0) * pi * y[0]),
            Self::G3 => {
                let (x, z) = (y[0], y[1]);
                re((-pi * (x * x + z * z + T::lit(0.2) * x * z)).exp())
            }
            Self::F1 => re((T::lit(10.0) * y[0]).cos() * (-pi * y[0] * y[0]).exp()),
            Self::F2 => {
                let (x, z) = (y[0], y[1]);
                let c = T::lit(0.2);
                re((c * x).cos() * (c * z).cos() * (-pi * (x * x + z * z)).exp())
            }
            Self::BasisElement { basis, nu } => {
                let mut v = T::one();
                for (&j, &c) in nu.iter().zip(y) {
                    v *= basis.evaluate(j, c)?;
                }
                re(v)
            }
            Self::Table(t) => match t.index.get(&key(y)) {
                Some(&i) => t.values[i],
                None => return invalid("point not present in the custom table"),
            },
        })
    }

    /// Values at a flat list of points, in parallel.
    pub fn evaluate_points(&self, points: &[T]) -> Result<Vec<Complex<T>>> {
        let d = self.dimension();
        if !points.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch { expected: d, got: points.len() % d });
        }
        points.par_chunks(d).map(|p| self.evaluate(p)).collect()
    }
}

/// Noise model; `e = (η_j)/√m` is stored on the sample set.
#[derive(Clone, Debug, Default)]
pub enum NoiseSpec<T> {
    #[default]
    Zero,
    /// User-supplied `η`, one entry per point.
    Fixed(Vec<Complex<T>>),
    /// `η_j = level·(N₁ + iN₂)/√2`, so `E‖e‖₂² = level²`.
    ComplexGaussian { level: T },
    /// `η_j = level·N`, real.
    RealGaussian { level: T },
    /// Complex Gaussian rescaled so that `‖e‖₂ = norm` exactly.
    ScaledToNorm { norm: T },
}

impl<T: Real> NoiseSpec<T> {
    fn draw(&self, m: usize, seed: u64) -> Result<Vec<Complex<T>>> {
        let gauss = |complex: bool| -> Vec<Complex<T>> {
            let nseed = derive_seed(seed, TAG_NOISE);
            (0..m)
                .into_par_iter()
                .map(|j| {
                    let mut rng = stream_rng(nseed, j as u64);
                    let a: f64 = rng.sample(StandardNormal);
                    let b: f64 = rng.sample(StandardNormal);
                    if complex {
                        let s = std::f64::consts::FRAC_1_SQRT_2;
                        Complex::new(T::lit(a * s), T::lit(b * s))
                    } else {
                        Complex::new(T::lit(a), T::zero())
                    }
                })
                .collect()
        };
        Ok(match self {
            Self::Zero => vec![Complex::new(T::zero(), T::zero()); m],
            Self::Fixed(v) => {
                if v.len() != m {
                    return Err(Error::DimensionMismatch { expected: m, got: v.len() });
                }
                v.clone()
            }
            Self::ComplexGaussian { level } => gauss(true).into_iter().map(|z| z * *level).collect(),
            Self::RealGaussian { level } => gauss(false).into_iter().map(|z| z * *level).collect(),
            Self::ScaledToNorm { norm } => {
                let eta = gauss(true);
                let mf = T::from_usize_lossy(m);
                let cur = (eta.iter().map(|z| z.norm_sqr()).sum::<T>() / mf).sqrt();
                let s = if cur > T::zero() { *norm / cur } else { T::zero() };
                eta.into_iter().map(|z| z * s).collect()
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet<T> {
    pub d: usize,
    pub points: Vec<T>,
    pub values: Vec<Complex<T>>,
    /// `e = (η_j)/√m`.
    pub noise: Vec<Complex<T>>,
    pub seed: u64,
}

impl<T: Real> SampleSet<T> {
    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn point(&self, j: usize) -> &[T] {
        &self.points[j * self.d..(j + 1) * self.d]
    }

    /// `‖e‖₂`.
    pub fn noise_norm(&self) -> T {
        self.noise.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Writes columns `x1..xd, re_value, im_value` with round-trip floats.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.d).map(|k| format!("x{k}")).collect();
        header.push("re_value".into());
        header.push("im_value".into());
        wtr.write_record(&header)?;
        for j in 0..self.m() {
            let mut rec: Vec<String> = self.point(j).iter().map(|c| c.to_string()).collect();
            rec.push(self.values[j].re.to_string());
            rec.push(self.values[j].im.to_string());
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads the CSV layout written by [`Self::write_csv`]. Noise is unknown
    /// after import and set to zero; the seed is set to zero.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        let d = header.len().checked_sub(2).filter(|&d| d >= 1).ok_or_else(|| {
            Error::Parse("sample CSV needs x1..xd, re_value, im_value".into())
        })?;
        for (k, h) in header.iter().take(d).enumerate() {
            if h != format!("x{}", k + 1) {
                return Err(Error::Parse(format!("unexpected column '{h}'")));
            }
        }
        if &header[d] != "re_value" || &header[d + 1] != "im_value" {
            return Err(Error::Parse("missing re_value/im_value columns".into()));
        }
        let parse = |s: &str| -> Result<T> {
            let v: f64 = s.trim().parse().map_err(|_| Error::Parse(format!("bad number '{s}'")))?;
            Ok(T::lit(v))
        };
        let mut points = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            for k in 0..d {
                let c = parse(&rec[k])?;
                check_unit(c)?;
                points.push(c);
            }
            values.push(Complex::new(parse(&rec[d])?, parse(&rec[d + 1])?));
        }
        let m = values.len();
        Ok(SampleSet { d, points, values, noise: vec![Complex::new(T::zero(), T::zero()); m], seed: 0 })
    }
}

/// Training set: uniform points from `seed`, values `f(y_j) + η_j`.
pub fn make_training_set<T: Real>(
    f: &TargetFunction<T>,
    d: usize,
    m: usize,
    seed: u64,
    noise: &NoiseSpec<T>,
) -> Result<SampleSet<T>> {
    if f.dimension() != d {
        return Err(Error::DimensionMismatch { expected: f.dimension(), got: d });
    }
    let points = draw_uniform::<T>(d, m, seed)?;
    let clean = f.evaluate_points(&points)?;
    let eta = noise.draw(m, seed)?;
    let sm = T::from_usize_lossy(m).sqrt();
    let values = clean.iter().zip(&eta).map(|(&v, &e)| v + e).collect();
    let noise = eta.into_iter().map(|e| e / sm).collect();
    Ok(SampleSet { d, points, values, noise, seed })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TestSize {
    /// `⌈ratio·m_train⌉` points.
    Ratio(f64),
    Fixed(usize),
}

impl Default for TestSize {
    fn default() -> Self {
        TestSize::Ratio(0.2)
    }
}

impl TestSize {
    pub fn count(&self, m_train: usize) -> Result<usize> {
        match *self {
            TestSize::Ratio(r) if r > 0.0 && r.is_finite() => Ok(((r * m_train as f64).ceil() as usize).max(1)),
            TestSize::Ratio(r) => invalid(format!("test ratio must be positive, got {r}")),
            TestSize::Fixed(0) => invalid("fixed test size must be positive"),
            TestSize::Fixed(k) => Ok(k),
        }
    }
}

/// Independent noiseless test draw.
pub fn make_test_set<T: Real>(
    f: &TargetFunction<T>,
    d: usize,
    m_train: usize,
    size: TestSize,
    seed: u64,
) -> Result<SampleSet<T>> {
    let m = size.count(m_train)?;
    make_training_set(f, d, m, derive_seed(seed, TAG_TEST), &NoiseSpec::Zero)
}

/// `√((1/m) Σ |a_j − b_j|²)`.
pub fn rmse<T: Real>(truth: &[Complex<T>], pred: &[Complex<T>]) -> Result<T> {
    if truth.is_empty() {
        return invalid("rmse of empty vectors");
    }
    if truth.len() != pred.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), got: pred.len() });
    }
    let s: T = truth.iter().zip(pred).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok((s / T::from_usize_lossy(truth.len())).sqrt())
}

/// Real-valued convenience form of [`rmse`].
pub fn rmse_real<T: Real>(truth: &[T], pred: &[T]) -> Result<T> {
    if truth.is_empty() {
        return invalid("rmse of empty vectors");
    }
    if truth.len() != pred.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), got: pred.len() });
    }
    let s: T = truth.iter().zip(pred).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok((s / T::from_usize_lossy(truth.len())).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_examples() {
        let g1 = TargetFunction::<f64>::G1.evaluate(&[0.0]).unwrap();
        assert_eq!(g1, Complex::new(1.0, 0.0));
        let g2 = TargetFunction::<f64>::G2.evaluate(&[0.25]).unwrap();
        assert!((g2 - Complex::new(-1.0, 0.0)).norm() < 1e-15);
        let f2 = TargetFunction::<f64>::F2.evaluate(&[0.0, 0.0]).unwrap();
        assert_eq!(f2, Complex::new(1.0, 0.0));
        assert!(TargetFunction::<f64>::F2.evaluate(&[0.0]).is_err());
    }

    #[test]
    fn rmse_examples() {
        let z = Complex::new(0.0, 0.0);
        let t = [z, z];
        let p = [Complex::new(1.0, 0.0), Complex::new(-1.0, 0.0)];
        assert_eq!(rmse(&t, &p).unwrap(), 1.0);
        assert_eq!(rmse(&p, &p).unwrap(), 0.0);
        assert!(rmse::<f64>(&[], &[]).is_err());
        assert!(rmse(&t, &p[..1]).is_err());
    }

    #[test]
    fn test_sizes() {
        assert_eq!(TestSize::Ratio(0.2).count(1000).unwrap(), 200);
        assert_eq!(TestSize::Ratio(0.2).count(7).unwrap(), 2);
        assert_eq!(TestSize::Fixed(1000).count(7).unwrap(), 1000);
        assert!(TestSize::Ratio(0.0).count(7).is_err());
    }

    #[test]
    fn zero_points_rejected() {
        assert!(draw_uniform::<f64>(2, 0, 1).is_err());
    }
}
