use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const PROJECTOR_TOL: f64 = 1e-12;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Two-qubit density matrix in the basis `|ab>` with index `2a + b`;
/// Alice holds the first qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Matrix4<C64>);

impl DensityMatrix {
    pub fn new(m: Matrix4<C64>) -> Result<Self> {
        if (m - m.adjoint()).iter().any(|z| z.norm() > HERMITIAN_TOL) {
            return Err(Error::InvalidState("not Hermitian".into()));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min_eig = m
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {min_eig})"
            )));
        }
        Ok(Self(m))
    }

    /// 16 entries, row-major.
    pub fn from_entries(entries: &[C64]) -> Result<Self> {
        if entries.len() != 16 {
            return Err(Error::InvalidState(format!(
                "expected 16 entries, got {}",
                entries.len()
            )));
        }
        Self::new(Matrix4::from_row_slice(entries))
    }

    /// `|psi><psi|` for a normalized pure state.
    pub fn pure(psi: [C64; 4]) -> Result<Self> {
        let v = nalgebra::Vector4::from(psi);
        Self::new(v * v.adjoint())
    }

    /// `(|01> + |10>) / sqrt(2)`.
    pub fn psi_plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::pure([c(0.0), c(h), c(h), c(0.0)]).expect("valid pure state")
    }

    /// `(I - |psi+><psi+|) / 3`, separable.
    pub fn psi_plus_complement() -> Self {
        let p = Self::psi_plus().0;
        Self::new((Matrix4::identity() - p) / c(3.0)).expect("valid state")
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix4::identity() / c(4.0))
    }

    /// `w |psi+><psi+| + (1 - w) I/4`.
    pub fn werner(w: f64) -> Result<Self> {
        Self::mixture(&[(w, &Self::psi_plus()), (1.0 - w, &Self::maximally_mixed())])
    }

    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let mut m = Matrix4::zeros();
        for (w, rho) in parts {
            m += rho.0 * c(*w);
        }
        Self::new(m)
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.0
    }

    /// Row-major entries.
    pub fn entries(&self) -> Vec<C64> {
        self.0.transpose().iter().copied().collect()
    }
}

/// Projective qubit measurement; outcome `k` corresponds to `projectors[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSetting {
    projectors: Vec<Matrix2<C64>>,
}

impl MeasurementSetting {
    pub fn new(projectors: Vec<Matrix2<C64>>) -> Result<Self> {
        if projectors.is_empty() {
            return Err(Error::InvalidMeasurement("no projectors".into()));
        }
        let mut sum = Matrix2::zeros();
        for (k, p) in projectors.iter().enumerate() {
            if (p - p.adjoint()).iter().any(|z| z.norm() > PROJECTOR_TOL) {
                return Err(Error::InvalidMeasurement(format!(
                    "projector {k} not Hermitian"
                )));
            }
            if (p * p - p).iter().any(|z| z.norm() > PROJECTOR_TOL) {
                return Err(Error::InvalidMeasurement(format!(
                    "projector {k} not idempotent"
                )));
            }
            sum += p;
        }
        if (sum - Matrix2::identity())
            .iter()
            .any(|z| z.norm() > PROJECTOR_TOL)
        {
            return Err(Error::InvalidMeasurement(
                "projectors do not sum to identity".into(),
            ));
        }
        Ok(Self { projectors })
    }

    /// Spin measurement along the unit vector `n`: outcome 0 is the `+1`
    /// eigenspace of `n . sigma`.
    pub fn along(n: [f64; 3]) -> Result<Self> {
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if norm.is_nan() || norm <= 0.0 {
            return Err(Error::InvalidMeasurement("zero direction".into()));
        }
        let [x, y, z] = n.map(|v| v / norm);
        let ns = Matrix2::new(c(z), C64::new(x, -y), C64::new(x, y), c(-z));
        let id = Matrix2::identity();
        Self::new(vec![(id + ns) / c(2.0), (id - ns) / c(2.0)])
    }

    /// Direction `(sin t, 0, cos t)` in the x-z plane.
    pub fn xz_angle(theta: f64) -> Self {
        Self::along([theta.sin(), 0.0, theta.cos()]).expect("unit direction")
    }

    pub fn num_outcomes(&self) -> usize {
        self.projectors.len()
    }

    pub fn projectors(&self) -> &[Matrix2<C64>] {
        &self.projectors
    }
}

/// Per-setting measurements of both parties.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMeasurements {
    pub alice: Vec<MeasurementSetting>,
    pub bob: Vec<MeasurementSetting>,
}

impl LocalMeasurements {
    /// CHSH-game optimal settings for `psi+`: Alice measures `sigma_z`,
    /// `sigma_x`; Bob measures `(sigma_x - sigma_z)/sqrt(2)` and
    /// `-(sigma_x + sigma_z)/sqrt(2)`. Every setting pair then wins with
    /// probability `1/2 + 1/(2 sqrt 2)`.
    pub fn tsirelson() -> Self {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
        Self {
            alice: vec![
                MeasurementSetting::xz_angle(0.0),
                MeasurementSetting::xz_angle(FRAC_PI_2),
            ],
            bob: vec![
                MeasurementSetting::xz_angle(3.0 * FRAC_PI_4),
                MeasurementSetting::xz_angle(-3.0 * FRAC_PI_4),
            ],
        }
    }

    /// Both parties measure `sigma_z` for setting 0 and `sigma_x` for setting 1.
    pub fn pauli_zx() -> Self {
        use std::f64::consts::FRAC_PI_2;
        let pair = vec![
            MeasurementSetting::xz_angle(0.0),
            MeasurementSetting::xz_angle(FRAC_PI_2),
        ];
        Self {
            alice: pair.clone(),
            bob: pair,
        }
    }
}

/// `P(a, b) = Tr[(P_a (x) P_b) rho]`, row-major in `(a, b)`.
pub fn born_probability(
    state: &DensityMatrix,
    ma: &MeasurementSetting,
    mb: &MeasurementSetting,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(ma.num_outcomes() * mb.num_outcomes());
    for pa in &ma.projectors {
        for pb in &mb.projectors {
            let joint: Matrix4<C64> = pa.kronecker(pb);
            let p = (joint * state.0).trace().re;
            out.push(if p < 0.0 && p > -1e-12 { 0.0 } else { p });
        }
    }
    out
}
