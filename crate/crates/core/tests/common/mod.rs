//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use fmean_qcrb::hermitian::{c, CMatrix, Domain, HermitianMatrix};
use fmean_qcrb::mean::{MeanSpec, WeightMatrix};
use fmean_qcrb::qfi::QfiMatrix;
use fmean_qcrb::states::random::{gaussian_complex, gaussian_real};
use nalgebra::DMatrix;
use rand::Rng;

pub const EXPONENTS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

/// `X X† / n + floor·I` with Gaussian `X`; real when `complex` is false.
pub fn positive<R: Rng>(r: &mut R, n: usize, complex: bool, floor: f64) -> HermitianMatrix {
    let x = if complex {
        gaussian_complex(r, n, n)
    } else {
        gaussian_real(r, n, n).map(|v| c(v, 0.0))
    };
    let m = &x * x.adjoint() / c(n as f64, 0.0) + CMatrix::identity(n, n) * c(floor, 0.0);
    HermitianMatrix::symmetrized(m)
}

/// Rank-`rank` real PSD matrix, unnormalized.
pub fn real_psd<R: Rng>(r: &mut R, n: usize, rank: usize) -> DMatrix<f64> {
    let x = gaussian_real(r, n, rank);
    &x * x.transpose()
}

/// Random real weight, of random rank.
pub fn weight<R: Rng>(r: &mut R, n: usize) -> WeightMatrix {
    let rank = r.random_range(1..=n);
    WeightMatrix::new(real_psd(r, n, rank)).unwrap()
}

pub fn spec(s: f64, w: &WeightMatrix) -> MeanSpec {
    MeanSpec::new(s, w.clone()).unwrap()
}

pub fn power(h: &HermitianMatrix, s: f64) -> HermitianMatrix {
    h.apply(|x| x.powf(s), Domain::Positive, "power").unwrap()
}

pub fn log(h: &HermitianMatrix) -> HermitianMatrix {
    h.apply(f64::ln, Domain::Positive, "ln").unwrap()
}

/// `A ⪰ B ⪰ εI` with `ε = 1e-3`.
pub fn ordered_pair<R: Rng>(r: &mut R, n: usize) -> (HermitianMatrix, HermitianMatrix) {
    let b = positive(r, n, true, 1e-3);
    let noise = positive(r, n, true, 0.0).scale(r.random::<f64>());
    (b.add(&noise).unwrap(), b)
}

/// Random positive-definite QFI: real SLD kind or complex RLD kind.
pub fn information<R: Rng>(r: &mut R, n: usize, rld: bool) -> QfiMatrix {
    let f = positive(r, n, rld, 0.05);
    if rld {
        QfiMatrix::rld(f).unwrap()
    } else {
        QfiMatrix::sld(f).unwrap()
    }
}

/// A real error covariance with `E ⪰ F⁻¹`: `Re F⁻¹ + ‖Im F⁻¹‖_op I + noise`,
/// where the noise may be absent (the bound is then tight for real `F`).
pub fn error_above<R: Rng>(r: &mut R, f: &QfiMatrix) -> HermitianMatrix {
    let n = f.n_params();
    let inv = f.matrix().inverse().unwrap();
    let im = HermitianMatrix::symmetrized(inv.imag_part().map(|v| c(0.0, v)));
    let op = im.eigenvalues().iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let rank = r.random_range(0..=n);
    let noise = if rank == 0 {
        DMatrix::zeros(n, n)
    } else {
        real_psd(r, n, rank) * r.random::<f64>()
    };
    let e = inv.real_part() + DMatrix::identity(n, n) * op + noise;
    HermitianMatrix::from_real(&e).unwrap()
}
