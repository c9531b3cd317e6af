//! Rough spherical kernels and the smooth objects derived from them.
//!
//! An angular profile Ω is stored as equispaced samples on the unit sphere
//! (two values for `n = 1`, `N` angles for `n = 2`) and looked up by nearest
//! sample, so the profile is piecewise constant and genuinely non-smooth.
//!
//! From Ω this module builds
//! * the homogeneous kernel `K(x) = Ω(x/|x|) / |x|^n`,
//! * the annulus restriction `Ω_0 = K χ_{1 ≤ |x| ≤ 2}` and its Fourier transform,
//! * the mollified profile `Ω_ε`, the radial average of `Ω_0 * φ_ε`,
//! * the annular pieces `K_j(x) = ψ(2^-j |x|) K(x)`,
//! * the Dini modulus `min(1, t/ε)` of the mollified kernel.

use std::f64::consts::{LN_2, PI, TAU};
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of nodes per dimension for kernel quadratures.
pub const DEFAULT_QUADRATURE_POINTS: usize = 1 << 12;

/// Default angular resolution of the two-dimensional presets.
pub const DEFAULT_ANGLES: usize = 64;

/// Zero-mean angular profile Ω on `S^{n-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereKernel {
    dim: usize,
    samples: Vec<f64>,
    sup_norm: f64,
}

impl SphereKernel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Angle of sample `k` (n = 2).
    pub fn sample_angle(&self, k: usize) -> f64 {
        TAU * k as f64 / self.samples.len() as f64
    }

    /// Ω at the direction of a nonzero vector. Nearest sample for `n = 2`,
    /// sign for `n = 1` (`samples[0]` is Ω(+1), `samples[1]` is Ω(-1)).
    pub fn omega_dir(&self, x: &[f64]) -> f64 {
        if self.dim == 1 {
            return if x[0] > 0.0 { self.samples[0] } else { self.samples[1] };
        }
        self.omega_angle(x[1].atan2(x[0]))
    }

    /// Ω at angle θ (n = 2).
    pub fn omega_angle(&self, theta: f64) -> f64 {
        let n = self.samples.len();
        let t = theta.rem_euclid(TAU);
        let k = (t * n as f64 / TAU).round() as usize % n;
        self.samples[k]
    }

    pub fn from_spec(spec: &KernelSpec) -> Result<Self> {
        if let Some(samples) = &spec.samples {
            return project_zero_mean(samples, spec.dimension);
        }
        let preset = spec
            .preset
            .ok_or_else(|| Error::InvalidInput("kernel spec needs `samples` or `preset`".into()))?;
        preset_kernel(
            preset,
            spec.dimension,
            spec.angles.unwrap_or(DEFAULT_ANGLES),
            spec.seed.unwrap_or(0),
        )
    }
}

/// Subtracts the uniform mean from raw samples.
pub fn project_zero_mean(raw: &[f64], dim: usize) -> Result<SphereKernel> {
    if raw.is_empty() {
        return Err(Error::InvalidInput("empty sample list".into()));
    }
    match dim {
        1 if raw.len() != 2 => {
            return Err(Error::InvalidInput("n = 1 needs exactly two samples".into()))
        }
        2 if raw.len() < 8 || !raw.len().is_power_of_two() => {
            return Err(Error::InvalidInput(format!(
                "n = 2 needs a power of two >= 8 samples, got {}",
                raw.len()
            )))
        }
        1 | 2 => {}
        _ => return Err(Error::InvalidInput(format!("dimension {dim} not in {{1,2}}"))),
    }
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let samples: Vec<f64> = raw.iter().map(|v| v - mean).collect();
    let sup_norm = samples.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    Ok(SphereKernel { dim, samples, sup_norm })
}

/// Named angular profiles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `sign(cos θ)`; the Hilbert kernel `1/x` when `n = 1`.
    Hilbert,
    /// `cos θ`.
    Cos,
    /// `sign(cos 3θ)`.
    SignBands,
    /// Independent ±1 per sample, then mean-projected.
    RandomRademacher,
}

/// JSON kernel description: explicit samples or a preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<usize>,
}

impl KernelSpec {
    pub fn preset(dimension: usize, preset: Preset) -> Self {
        Self { dimension, samples: None, preset: Some(preset), seed: None, angles: None }
    }
}

pub fn preset_kernel(preset: Preset, dim: usize, angles: usize, seed: u64) -> Result<SphereKernel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = if dim == 1 {
        match preset {
            Preset::RandomRademacher => {
                let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                vec![s, -s]
            }
            _ => vec![1.0, -1.0],
        }
    } else {
        (0..angles)
            .map(|k| {
                let t = TAU * k as f64 / angles as f64;
                match preset {
                    Preset::Hilbert => sign(t.cos()),
                    Preset::Cos => t.cos(),
                    Preset::SignBands => sign((3.0 * t).cos()),
                    Preset::RandomRademacher => {
                        if rng.gen::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                }
            })
            .collect()
    };
    project_zero_mean(&raw, dim)
}

fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn norm_pow_n(x: &[f64]) -> f64 {
    if x.len() == 1 {
        x[0].abs()
    } else {
        x[0] * x[0] + x[1] * x[1]
    }
}

/// `K(x) = Ω(x/|x|) / |x|^n`.
pub fn kernel_value(omega: &SphereKernel, x: &[f64]) -> Result<f64> {
    let r = norm_pow_n(&x[..omega.dim]);
    if r == 0.0 {
        return Err(Error::Singularity);
    }
    Ok(omega.omega_dir(x) / r)
}

/// Unchecked variant for hot loops; `x` must be nonzero.
#[inline]
pub(crate) fn kernel_value_unchecked(omega: &SphereKernel, x: &[f64]) -> f64 {
    omega.omega_dir(x) / norm_pow_n(&x[..omega.dim])
}

/// Normalizing constant `c_n` of `φ(x) = c_n exp(-1/(1-|x|^2))`.
pub fn bump_constant(dim: usize) -> f64 {
    static C: OnceLock<[f64; 2]> = OnceLock::new();
    let c = C.get_or_init(|| {
        let m = 1 << 16;
        let dr = 1.0 / m as f64;
        let (mut i1, mut i2) = (0.0, 0.0);
        for i in 0..m {
            let r = (i as f64 + 0.5) * dr;
            let b = (-1.0 / (1.0 - r * r)).exp();
            i1 += 2.0 * b * dr;
            i2 += TAU * r * b * dr;
        }
        [1.0 / i1, 1.0 / i2]
    });
    c[dim - 1]
}

/// The mollifier `φ_ε(x) = ε^-n φ(x/ε)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub epsilon: f64,
}

impl MollifierSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::Parameter(format!("epsilon = {epsilon} not in (0,1]")));
        }
        Ok(Self { epsilon })
    }

    /// `φ_ε` as a function of `|x|`.
    pub fn eval_radial(&self, r: f64, dim: usize) -> f64 {
        let s = r / self.epsilon;
        if s >= 1.0 {
            return 0.0;
        }
        bump_constant(dim) * (-1.0 / (1.0 - s * s)).exp() / self.epsilon.powi(dim as i32)
    }
}

/// Midpoint-rule resolutions for kernel integrals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Nodes per dimension for the one-dimensional and Fourier integrals.
    pub points: usize,
    /// Nodes per dimension for the angular mollification density (n = 2).
    pub radial: usize,
    /// Nodes of the tabulated angular density (n = 2).
    pub angles: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { points: DEFAULT_QUADRATURE_POINTS, radial: 256, angles: 512 }
    }
}

/// `Ω_ε` evaluated once and reusable at any direction.
///
/// For `n = 2` the radial average of `Ω_0 * φ_ε` is an angular convolution
/// `Ω_ε(θ) = ∫ Ω(θ - α) w_ε(α) dα` with the probability density
/// `w_ε(α) = (1/log 2) ∫_1^2 ∫_0^∞ φ_ε(t e_α - ρ e_0) t dt dρ/ρ`,
/// supported in `|α| ≤ asin ε`. The density is tabulated on a grid and its
/// cumulative distribution integrates the piecewise constant Ω exactly sector
/// by sector.
#[derive(Clone, Debug)]
pub struct MollifiedOmega {
    omega: SphereKernel,
    epsilon: f64,
    // n = 1: total mass of the discretized φ_ε; n = 2: CDF table on [-a_max, a_max].
    mass: f64,
    a_max: f64,
    cdf: Vec<f64>,
}

impl MollifiedOmega {
    pub fn new(omega: &SphereKernel, m: MollifierSpec, quad: &QuadratureConfig) -> Result<Self> {
        let eps = MollifierSpec::new(m.epsilon)?.epsilon;
        if omega.dim == 1 {
            return Ok(Self {
                omega: omega.clone(),
                epsilon: eps,
                mass: 1.0,
                a_max: 0.0,
                cdf: Vec::new(),
            });
        }
        let a_max = eps.asin();
        let na = quad.angles.max(16);
        let da = 2.0 * a_max / na as f64;
        let density: Vec<f64> = (0..na)
            .map(|i| angular_density(-a_max + (i as f64 + 0.5) * da, m, quad.radial))
            .collect();
        let mut cdf = Vec::with_capacity(na + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for d in &density {
            acc += d * da;
            cdf.push(acc);
        }
        for c in cdf.iter_mut() {
            *c /= acc;
        }
        Ok(Self { omega: omega.clone(), epsilon: eps, mass: acc, a_max, cdf })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Total mass of the tabulated angular density before normalization.
    pub fn density_mass(&self) -> f64 {
        self.mass
    }

    fn cdf_at(&self, a: f64) -> f64 {
        if a <= -self.a_max {
            return 0.0;
        }
        if a >= self.a_max {
            return 1.0;
        }
        let n = self.cdf.len() - 1;
        let s = (a + self.a_max) / (2.0 * self.a_max) * n as f64;
        let i = (s.floor() as usize).min(n - 1);
        let f = s - i as f64;
        self.cdf[i] * (1.0 - f) + self.cdf[i + 1] * f
    }

    /// `Ω_ε` at angle θ (n = 2).
    pub fn at_angle(&self, theta: f64) -> f64 {
        let n = self.omega.samples.len();
        let width = TAU / n as f64;
        let center = (theta.rem_euclid(TAU) / width).round() as i64;
        let reach = (self.a_max / width).ceil() as i64 + 1;
        let mut v = 0.0;
        for d in -reach..=reach {
            let k = center + d;
            let idx = k.rem_euclid(n as i64) as usize;
            let rel = wrap_angle(theta - k as f64 * width);
            let p = self.cdf_at(rel + width / 2.0) - self.cdf_at(rel - width / 2.0);
            v += self.omega.samples[idx] * p;
        }
        v
    }

    /// `Ω_ε` at the direction of `x`.
    pub fn at_dir(&self, x: &[f64]) -> f64 {
        if self.omega.dim == 1 {
            return self.omega.omega_dir(x) * self.mass;
        }
        self.at_angle(x[1].atan2(x[0]))
    }

    /// `K_ε(x) = Ω_ε(x/|x|) / |x|^n`.
    pub fn kernel(&self, x: &[f64]) -> f64 {
        self.at_dir(x) / norm_pow_n(&x[..self.omega.dim])
    }

    pub fn omega(&self) -> &SphereKernel {
        &self.omega
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// `w_ε(α)`: the inner `t` integral is reduced to `2 ρ cos α ∫_0^w φ_ε(√(u²+d²)) du`
/// with `d = ρ |sin α|`, `w = √(ε² - d²)`.
fn angular_density(alpha: f64, m: MollifierSpec, nodes: usize) -> f64 {
    let eps = m.epsilon;
    let dr = 1.0 / nodes as f64;
    let mut outer = 0.0;
    for i in 0..nodes {
        let rho = 1.0 + (i as f64 + 0.5) * dr;
        let d = rho * alpha.sin().abs();
        if d >= eps {
            continue;
        }
        let w = (eps * eps - d * d).sqrt();
        let du = w / nodes as f64;
        let mut inner = 0.0;
        for j in 0..nodes {
            let u = (j as f64 + 0.5) * du;
            inner += m.eval_radial((u * u + d * d).sqrt(), 2);
        }
        inner *= du;
        outer += 2.0 * rho * alpha.cos() * inner / rho;
    }
    outer * dr / LN_2
}

/// `Ω_ε(θ)` for a direction θ (a unit vector; for `n = 1` the sign).
///
/// For `n = 1` the radial integral of `Ω_0(tθ - y)` over `t > 0` is done in
/// closed form and the outer integral against `φ_ε(y)` by the midpoint rule.
pub fn mollified_omega(
    omega: &SphereKernel,
    m: MollifierSpec,
    theta: &[f64],
    quad: &QuadratureConfig,
) -> Result<f64> {
    let m = MollifierSpec::new(m.epsilon)?;
    if omega.dim == 1 {
        let dir = if theta[0] > 0.0 { 1.0 } else { -1.0 };
        let n = quad.points;
        let dy = 2.0 * m.epsilon / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let y = -m.epsilon + (i as f64 + 0.5) * dy;
            acc += m.eval_radial(y.abs(), 1) * ray_integral_1d(omega, dir, y);
        }
        return Ok(acc * dy / LN_2);
    }
    Ok(MollifiedOmega::new(omega, m, quad)?.at_dir(theta))
}

/// `∫_0^∞ Ω_0(t·dir - y) dt` for `n = 1`.
fn ray_integral_1d(omega: &SphereKernel, dir: f64, y: f64) -> f64 {
    // u = t·dir - y ranges over (-y, ∞) for dir = +1 and (-∞, -y) for dir = -1.
    let (lo, hi) = if dir > 0.0 { (-y, f64::INFINITY) } else { (f64::NEG_INFINITY, -y) };
    let mut s = 0.0;
    for (a, b, val) in [(1.0f64, 2.0f64, omega.samples[0]), (-2.0, -1.0, omega.samples[1])] {
        let l = a.max(lo);
        let u = b.min(hi);
        if u > l {
            s += val * (u.abs().max(l.abs()) / u.abs().min(l.abs())).ln();
        }
    }
    s
}

/// Smooth transition `h = 1` on `(0, 1]`, `0` on `[2, ∞)`, glued from `exp(-1/s)`.
pub fn transition(t: f64) -> f64 {
    fn g(s: f64) -> f64 {
        if s > 0.0 {
            (-1.0 / s).exp()
        } else {
            0.0
        }
    }
    if t <= 1.0 {
        return 1.0;
    }
    if t >= 2.0 {
        return 0.0;
    }
    let a = g(2.0 - t);
    a / (a + g(t - 1.0))
}

/// `ψ(t) = h(t) - h(2t)`, supported in `[1/2, 2]`; its dyadic dilates sum to one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RadialCutoff;

impl RadialCutoff {
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        transition(t) - transition(2.0 * t)
    }
}

/// `K_j(x) = ψ(2^-j |x|) K(x)`.
pub fn annular_piece_value(
    omega: &SphereKernel,
    psi: &RadialCutoff,
    j: i32,
    x: &[f64],
) -> Result<f64> {
    let k = kernel_value(omega, x)?;
    let r = x[..omega.dim].iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(psi.eval(r * 2f64.powi(-j)) * k)
}

/// Midpoint approximation of `∫ Ω_0(x) e^{-2πi x·ξ} dx`.
pub fn omega0_fourier(omega: &SphereKernel, xi: &[f64], quad: &QuadratureConfig) -> Complex64 {
    let n = quad.points;
    let dr = 1.0 / n as f64;
    if omega.dim == 1 {
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let u = 1.0 + (i as f64 + 0.5) * dr;
            let ph = TAU * u * xi[0];
            let e = Complex64::new(ph.cos(), -ph.sin());
            s += (e * omega.samples[0] + e.conj() * omega.samples[1]) / u;
        }
        return s * dr;
    }
    let ns = omega.samples.len();
    let sub = (n / ns).max(1);
    let dw = TAU / (ns * sub) as f64;
    let mut s = Complex64::new(0.0, 0.0);
    for k in 0..ns {
        let val = omega.samples[k];
        if val == 0.0 {
            continue;
        }
        let mut sector = Complex64::new(0.0, 0.0);
        for m in 0..sub {
            let w = omega.sample_angle(k) - PI / ns as f64 + (m as f64 + 0.5) * dw;
            let proj = w.cos() * xi[0] + w.sin() * xi[1];
            for i in 0..n {
                let rho = 1.0 + (i as f64 + 0.5) * dr;
                let ph = TAU * rho * proj;
                sector += Complex64::new(ph.cos(), -ph.sin()) / rho;
            }
        }
        s += sector * val;
    }
    s * dr * dw
}

/// Dini modulus `ω(t) = min(1, t/ε)` of the mollified kernel (constants set to one).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiniModulus {
    pub epsilon: f64,
    pub dini_constant: f64,
}

impl DiniModulus {
    pub fn omega(&self, t: f64) -> f64 {
        (t / self.epsilon).min(1.0)
    }
}

pub fn dini_of_mollified(epsilon: f64) -> Result<DiniModulus> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Parameter(format!("epsilon = {epsilon} not in (0,1]")));
    }
    Ok(DiniModulus { epsilon, dini_constant: 1.0 + (1.0 / epsilon).ln() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hilbert1() -> SphereKernel {
        project_zero_mean(&[1.0, -1.0], 1).unwrap()
    }

    #[test]
    fn projection_examples() {
        let k = project_zero_mean(&[1.0; 16], 2).unwrap();
        assert!(k.samples().iter().all(|&v| v == 0.0));
        let raw: Vec<f64> = (0..32).map(|k| (TAU * k as f64 / 32.0).cos()).collect();
        let k = project_zero_mean(&raw, 2).unwrap();
        for (a, b) in k.samples().iter().zip(&raw) {
            assert!((a - b).abs() < 1e-15);
        }
        let k = project_zero_mean(&[2.0, 0.0], 1).unwrap();
        assert_eq!(k.samples(), &[1.0, -1.0]);
        assert!(project_zero_mean(&[], 2).is_err());
        assert!(project_zero_mean(&[1.0; 12], 2).is_err());
    }

    #[test]
    fn kernel_value_examples() {
        assert_eq!(kernel_value(&hilbert1(), &[2.0]).unwrap(), 0.5);
        let cos = preset_kernel(Preset::Cos, 2, 64, 0).unwrap();
        assert_relative_eq!(kernel_value(&cos, &[2.0, 0.0]).unwrap(), 0.25, max_relative = 1e-15);
        assert!(matches!(kernel_value(&cos, &[0.0, 0.0]), Err(Error::Singularity)));
    }

    #[test]
    fn homogeneity_is_exact() {
        let k = preset_kernel(Preset::RandomRademacher, 2, 64, 3).unwrap();
        for x in [[0.3, -1.7], [2.2, 0.01], [-0.5, -0.5]] {
            let a = kernel_value(&k, &x).unwrap();
            let b = kernel_value(&k, &[2.0 * x[0], 2.0 * x[1]]).unwrap();
            assert_eq!(a, 4.0 * b);
        }
    }

    #[test]
    fn mollified_one_dimensional_is_omega_itself() {
        let q = QuadratureConfig::default();
        let m = MollifierSpec::new(0.25).unwrap();
        let coarse = mollified_omega(&hilbert1(), m, &[1.0], &q).unwrap();
        let fine = mollified_omega(
            &hilbert1(),
            m,
            &[1.0],
            &QuadratureConfig { points: 10 * q.points, ..q },
        )
        .unwrap();
        assert!((coarse - fine).abs() < 1e-6);
        assert!((coarse - 1.0).abs() < 1e-9);
        let unit = mollified_omega(&hilbert1(), MollifierSpec { epsilon: 1.0 }, &[1.0], &q).unwrap();
        assert!((unit - 1.0).abs() < 1e-9);
        assert!(mollified_omega(&hilbert1(), MollifierSpec { epsilon: 1.5 }, &[1.0], &q).is_err());
    }

    #[test]
    fn angular_density_is_a_probability() {
        let k = preset_kernel(Preset::Hilbert, 2, 64, 0).unwrap();
        let q = QuadratureConfig { radial: 128, angles: 256, ..Default::default() };
        for eps in [0.25, 0.0625] {
            let mo = MollifiedOmega::new(&k, MollifierSpec::new(eps).unwrap(), &q).unwrap();
            assert!((mo.density_mass() - 1.0).abs() < 1e-3, "mass {}", mo.density_mass());
        }
    }

    #[test]
    fn mollified_sup_bound() {
        let q = QuadratureConfig { radial: 64, angles: 128, ..Default::default() };
        let bound = 9.0 / (2.0 * LN_2);
        for preset in [Preset::Hilbert, Preset::SignBands, Preset::RandomRademacher] {
            let k = preset_kernel(preset, 2, 64, 7).unwrap();
            let mo = MollifiedOmega::new(&k, MollifierSpec::new(0.3).unwrap(), &q).unwrap();
            for i in 0..400 {
                let v = mo.at_angle(TAU * i as f64 / 400.0);
                assert!(v.abs() <= bound * k.sup_norm());
                assert!(v.abs() <= k.sup_norm() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let psi = RadialCutoff;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let t = 10f64.powf(rng.gen_range(-3.0..3.0));
            let s: f64 = (-20..=20).map(|j| psi.eval(2f64.powi(-j) * t)).sum();
            assert!((s - 1.0).abs() <= 1e-12);
        }
        assert_eq!(psi.eval(0.49), 0.0);
        assert_eq!(psi.eval(2.01), 0.0);
    }

    #[test]
    fn annular_piece_examples() {
        let k = hilbert1();
        let psi = RadialCutoff;
        assert_eq!(annular_piece_value(&k, &psi, 0, &[4.0]).unwrap(), 0.0);
        let x = [1.0];
        let s: f64 = [-1, 0].iter().map(|&j| annular_piece_value(&k, &psi, j, &x).unwrap()).sum();
        assert_relative_eq!(s, kernel_value(&k, &x).unwrap(), max_relative = 1e-15);
        // h(1.5) = 1/2 by the symmetry of the glue, h(3) = 0.
        let v = annular_piece_value(&k, &psi, 0, &[1.5]).unwrap();
        assert_relative_eq!(v, 0.5 / 1.5, max_relative = 1e-15);
    }

    #[test]
    fn fourier_of_annulus_vanishes_at_zero() {
        let q = QuadratureConfig::default();
        assert!(omega0_fourier(&hilbert1(), &[0.0], &q).norm() < 1e-10);
        let k = preset_kernel(Preset::SignBands, 2, 64, 0).unwrap();
        let q2 = QuadratureConfig { points: 256, ..q };
        assert!(omega0_fourier(&k, &[0.0, 0.0], &q2).norm() < 1e-10);
        let a = omega0_fourier(&k, &[0.7, -1.3], &q2);
        let b = omega0_fourier(&k, &[-0.7, 1.3], &q2);
        assert!((a - b.conj()).norm() < 1e-10);
    }

    #[test]
    fn fourier_refinement_at_xi_ten() {
        let q = QuadratureConfig::default();
        let coarse = omega0_fourier(&hilbert1(), &[10.0], &q);
        let fine = omega0_fourier(&hilbert1(), &[10.0], &QuadratureConfig { points: 10 * q.points, ..q });
        assert!((coarse.norm() - fine.norm()).abs() < 1e-6);
    }

    #[test]
    fn dini_examples() {
        assert_eq!(dini_of_mollified(1.0).unwrap().dini_constant, 1.0);
        assert_relative_eq!(dini_of_mollified(0.1).unwrap().dini_constant, 3.302585, epsilon = 1e-6);
        let d = dini_of_mollified(0.5).unwrap();
        assert_relative_eq!(d.dini_constant, 1.693147, epsilon = 1e-6);
        assert!(d.dini_constant <= 2.0 * (2.0f64 / 0.5).ln());
        assert!(dini_of_mollified(0.0).is_err());
        assert_eq!(d.omega(0.25), 0.5);
    }

    #[test]
    fn spec_json_forms() {
        let s: KernelSpec = serde_json::from_str(r#"{"dimension": 1, "samples": [2, 0]}"#).unwrap();
        assert_eq!(SphereKernel::from_spec(&s).unwrap().samples(), &[1.0, -1.0]);
        let s: KernelSpec =
            serde_json::from_str(r#"{"dimension": 2, "preset": "random-rademacher", "seed": 5}"#).unwrap();
        let k = SphereKernel::from_spec(&s).unwrap();
        assert_eq!(k.samples().len(), DEFAULT_ANGLES);
        assert!(k.mean().abs() <= 1e-12 * k.sup_norm());
    }
}
