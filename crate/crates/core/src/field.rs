//! Boson sector: quadrature discretization of the momentum shell
//! kappa <= |k| <= Lambda and the truncated occupation-number Fock space
//! with ladder-operator actions.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Radial placement of the quadrature shells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Log,
    Linear,
}

/// Coupling amplitude profile. `Nelson` is 1/sqrt(2|k|) with omega = |k|;
/// `Generalized` uses omega = |k|^mu and amplitude |k|^(-nu).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Profile {
    Nelson,
    Generalized { mu: f64, nu: f64 },
}

/// One quadrature mode of the discretized field.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Mode {
    /// wavevector (always a 3-vector; the boson measure is d^3 k)
    pub k: [f64; 3],
    /// dispersion omega(k)
    pub omega: f64,
    /// momentum-volume quadrature weight
    pub weight: f64,
    /// coupling amplitude (2pi)^(-3/2) * rho(|k|)
    pub amp: f64,
}

impl Mode {
    pub fn k_norm(&self) -> f64 {
        (self.k[0] * self.k[0] + self.k[1] * self.k[1] + self.k[2] * self.k[2]).sqrt()
    }

    /// Discrete coupling strength g = amp * sqrt(weight).
    pub fn g(&self) -> f64 {
        self.amp * self.weight.sqrt()
    }
}

/// Quadrature discretization of the momentum shell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeSet {
    pub kappa: f64,
    pub lambda: f64,
    pub shells: usize,
    pub directions: usize,
    pub spacing: Spacing,
    pub profile: Profile,
    pub modes: Vec<Mode>,
}

fn direction_set(d: usize) -> Result<Vec<[f64; 3]>> {
    match d {
        1 => Ok(vec![[0.0, 0.0, 1.0]]),
        6 => Ok(vec![
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ]),
        12 => {
            // vertices of a regular icosahedron, normalized
            let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
            let n = (1.0 + phi * phi).sqrt();
            let a = 1.0 / n;
            let b = phi / n;
            Ok(vec![
                [0.0, a, b],
                [0.0, -a, b],
                [0.0, a, -b],
                [0.0, -a, -b],
                [a, b, 0.0],
                [-a, b, 0.0],
                [a, -b, 0.0],
                [-a, -b, 0.0],
                [b, 0.0, a],
                [-b, 0.0, a],
                [b, 0.0, -a],
                [-b, 0.0, -a],
            ])
        }
        _ => Err(Error::Unsupported(format!(
            "directions-per-shell must be 1, 6 or 12 (got {d})"
        ))),
    }
}

/// Build the quadrature modes for the shell kappa <= |k| <= Lambda.
///
/// Each of the `shells` radial bins carries its exact momentum volume
/// 4 pi (r_{s+1}^3 - r_s^3)/3, split equally over the direction set, and is
/// represented at the geometric (log spacing) or arithmetic (linear) midpoint.
pub fn build_modes(
    kappa: f64,
    lambda: f64,
    shells: usize,
    directions: usize,
    spacing: Spacing,
    profile: Profile,
) -> Result<ModeSet> {
    if !(kappa > 0.0 && kappa < lambda) {
        return Err(Error::CutoffOrder { kappa, lambda });
    }
    assert!(shells >= 1);
    let dirs = direction_set(directions)?;

    let edges: Vec<f64> = (0..=shells)
        .map(|s| {
            let t = s as f64 / shells as f64;
            match spacing {
                Spacing::Log => kappa * (lambda / kappa).powf(t),
                Spacing::Linear => kappa + (lambda - kappa) * t,
            }
        })
        .collect();

    let mut modes = Vec::with_capacity(shells * directions);
    for s in 0..shells {
        let (a, b) = (edges[s], edges[s + 1]);
        let r = match spacing {
            Spacing::Log => (a * b).sqrt(),
            Spacing::Linear => 0.5 * (a + b),
        };
        let shell_volume = 4.0 * std::f64::consts::PI * (b.powi(3) - a.powi(3)) / 3.0;
        let w = shell_volume / directions as f64;
        let (omega, rho) = match profile {
            Profile::Nelson => (r, 1.0 / (2.0 * r).sqrt()),
            Profile::Generalized { mu, nu } => (r.powf(mu), r.powf(-nu)),
        };
        let amp = TWO_PI.powf(-1.5) * rho;
        for dir in &dirs {
            modes.push(Mode {
                k: [dir[0] * r, dir[1] * r, dir[2] * r],
                omega,
                weight: w,
                amp,
            });
        }
    }

    Ok(ModeSet {
        kappa,
        lambda,
        shells,
        directions,
        spacing,
        profile,
        modes,
    })
}

impl ModeSet {
    /// Total quadrature weight; equals the shell volume by construction.
    pub fn total_weight(&self) -> f64 {
        self.modes.iter().map(|m| m.weight).sum()
    }

    pub fn shell_volume(&self) -> f64 {
        4.0 * std::f64::consts::PI * (self.lambda.powi(3) - self.kappa.powi(3)) / 3.0
    }

    /// sum_j g_j^2, the discrete ||lambda_{kappa,0}||^2.
    pub fn coupling_norm_sq(&self) -> f64 {
        self.modes.iter().map(|m| m.g() * m.g()).sum()
    }

    /// sum_j g_j^2 / omega_j, the discrete ||lambda_{kappa,0}/sqrt(omega)||^2.
    pub fn coupling_over_omega(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let g = m.g();
                g * g / m.omega
            })
            .sum()
    }

    /// sum_j g_j^2 / omega_j^2.
    pub fn coupling_over_omega_sq(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let g = m.g();
                g * g / (m.omega * m.omega)
            })
            .sum()
    }

    /// Content hash for provenance tracking.
    pub fn provenance(&self) -> u64 {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(self.kappa.to_le_bytes());
        hasher.update(self.lambda.to_le_bytes());
        hasher.update(self.shells.to_le_bytes());
        hasher.update(self.directions.to_le_bytes());
        for m in &self.modes {
            for c in m.k {
                hasher.update(c.to_le_bytes());
            }
            hasher.update(m.omega.to_le_bytes());
            hasher.update(m.weight.to_le_bytes());
            hasher.update(m.amp.to_le_bytes());
        }
        let out = hasher.finalize();
        u64::from_le_bytes(out[..8].try_into().unwrap())
    }

    /// CSV audit dump: kx, ky, kz, omega, weight, amp.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "kx,ky,kz,omega,weight,amp")?;
        for m in &self.modes {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                m.k[0], m.k[1], m.k[2], m.omega, m.weight, m.amp
            )?;
        }
        Ok(())
    }
}

/// Enumerated bosonic occupation configurations under per-mode and total caps.
#[derive(Debug, Clone)]
pub struct FockSpace {
    pub modes: usize,
    pub n_max: usize,
    pub total_max: usize,
    /// lexicographically ordered; the vacuum is config 0
    pub configs: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

/// Generous default budget; overridable through `enumerate_fock_bounded`.
pub const DEFAULT_FOCK_BUDGET: usize = 4_000_000;

pub fn enumerate_fock(modes: usize, n_max: usize, total_max: usize) -> Result<FockSpace> {
    enumerate_fock_bounded(modes, n_max, total_max, DEFAULT_FOCK_BUDGET)
}

/// Number of occupation tuples under the caps, by dynamic programming
/// (generating-function coefficient evaluation).
pub fn fock_dimension(modes: usize, n_max: usize, total_max: usize) -> usize {
    // coeffs of prod_{j=1..K} (1 + x + ... + x^{n_max}) truncated at total_max
    let mut coeff = vec![0usize; total_max + 1];
    coeff[0] = 1;
    for _ in 0..modes {
        let mut next = vec![0usize; total_max + 1];
        for (deg, &c) in coeff.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for add in 0..=n_max.min(total_max - deg) {
                next[deg + add] = next[deg + add].saturating_add(c);
            }
        }
        coeff = next;
    }
    coeff.iter().sum()
}

pub fn enumerate_fock_bounded(
    modes: usize,
    n_max: usize,
    total_max: usize,
    budget: usize,
) -> Result<FockSpace> {
    assert!(modes >= 1 && n_max >= 1 && total_max >= 1);
    let dim = fock_dimension(modes, n_max, total_max);
    if dim > budget {
        return Err(Error::Capacity { dim, budget });
    }

    let mut configs = Vec::with_capacity(dim);
    let mut current = vec![0u8; modes];
    enumerate_rec(&mut configs, &mut current, 0, n_max, total_max);
    // lexicographic order over tuples, vacuum first
    configs.sort();
    debug_assert_eq!(configs[0], vec![0u8; modes]);
    debug_assert_eq!(configs.len(), dim);

    let index = configs
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), i))
        .collect();
    Ok(FockSpace {
        modes,
        n_max,
        total_max,
        configs,
        index,
    })
}

fn enumerate_rec(
    out: &mut Vec<Vec<u8>>,
    current: &mut Vec<u8>,
    pos: usize,
    n_max: usize,
    remaining: usize,
) {
    if pos == current.len() {
        out.push(current.clone());
        return;
    }
    for n in 0..=n_max.min(remaining) {
        current[pos] = n as u8;
        enumerate_rec(out, current, pos + 1, n_max, remaining - n);
    }
    current[pos] = 0;
}

impl FockSpace {
    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn ordinal(&self, config: &[u8]) -> Option<usize> {
        self.index.get(config).copied()
    }

    pub fn total_occupation(&self, ordinal: usize) -> usize {
        self.configs[ordinal].iter().map(|&n| n as usize).sum()
    }

    /// Lowering: (a_j v)(c) = sqrt(n_j + 1) v(c + e_j); zero past the caps.
    pub fn apply_annihilation(&self, mode: usize, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim());
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        let mut scratch = vec![0u8; self.modes];
        for (ord, config) in self.configs.iter().enumerate() {
            let n = config[mode] as usize;
            if n + 1 > self.n_max || self.total_occupation(ord) + 1 > self.total_max {
                continue;
            }
            scratch.copy_from_slice(config);
            scratch[mode] += 1;
            if let Some(src) = self.ordinal(&scratch) {
                out[ord] = ((n + 1) as f64).sqrt() * v[src];
            }
        }
        out
    }

    /// Raising: adjoint of the lowering action on the truncated space.
    pub fn apply_creation(&self, mode: usize, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim());
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        let mut scratch = vec![0u8; self.modes];
        for (ord, config) in self.configs.iter().enumerate() {
            let n = config[mode] as usize;
            if n == 0 {
                continue;
            }
            scratch.copy_from_slice(config);
            scratch[mode] -= 1;
            if let Some(src) = self.ordinal(&scratch) {
                out[ord] = (n as f64).sqrt() * v[src];
            }
        }
        out
    }

    /// Content hash for provenance tracking.
    pub fn provenance(&self) -> u64 {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(self.modes.to_le_bytes());
        hasher.update(self.n_max.to_le_bytes());
        hasher.update(self.total_max.to_le_bytes());
        hasher.update(self.dim().to_le_bytes());
        let out = hasher.finalize();
        u64::from_le_bytes(out[..8].try_into().unwrap())
    }

    /// Number operator: diagonal with entry sum_j n_j.
    pub fn apply_number(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim());
        self.configs
            .iter()
            .zip(v)
            .map(|(c, x)| {
                let n: usize = c.iter().map(|&n| n as usize).sum();
                *x * n as f64
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn weights_partition_the_shell() {
        for spacing in [Spacing::Log, Spacing::Linear] {
            let ms = build_modes(0.1, 1.0, 32, 6, spacing, Profile::Nelson).unwrap();
            let rel = (ms.total_weight() - ms.shell_volume()).abs() / ms.shell_volume();
            assert!(rel < 1e-12, "relative weight defect {rel}");
            for m in &ms.modes {
                let r = m.k_norm();
                assert!(r >= 0.1 - 1e-12 && r <= 1.0 + 1e-12);
                assert!(m.omega > 0.0);
            }
        }
    }

    #[test]
    fn cutoff_order_is_enforced() {
        assert!(matches!(
            build_modes(1.0, 0.5, 4, 1, Spacing::Log, Profile::Nelson),
            Err(Error::CutoffOrder { .. })
        ));
        assert!(matches!(
            build_modes(0.0, 0.5, 4, 1, Spacing::Log, Profile::Nelson),
            Err(Error::CutoffOrder { .. })
        ));
    }

    #[test]
    fn narrow_shell_weight_vanishes() {
        let ms = build_modes(1.0 - 1e-9, 1.0, 1, 1, Spacing::Linear, Profile::Nelson).unwrap();
        assert!(ms.total_weight() < 1e-7);
    }

    /// Frozen expected values of the two analytic shell integrals:
    ///   integral chi^2/(2 omega) d^3k   = (L^2 - k^2)/(8 pi^2)   ~ 0.012538
    ///   integral chi^2/(2 omega^3) d^3k = log(L/k)/(4 pi^2)      ~ 0.058326
    #[test]
    fn analytic_shell_integrals() {
        let ms = build_modes(0.1, 1.0, 32, 1, Spacing::Log, Profile::Nelson).unwrap();
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;

        let g2 = ms.coupling_norm_sq();
        let exact = (1.0 - 0.01) / (8.0 * pi2);
        assert!((exact - 0.012538).abs() < 1e-5);
        assert!((g2 - exact).abs() / exact < 0.02, "got {g2}, want {exact}");

        let g2w2 = ms.coupling_over_omega_sq();
        let exact = (10.0f64).ln() / (4.0 * pi2);
        assert!((exact - 0.058326).abs() < 1e-5);
        assert!((g2w2 - exact).abs() / exact < 0.02, "got {g2w2}, want {exact}");
    }

    /// Quadrature error scales like 1/S^2 for the radial moments used by the
    /// bound constants.
    #[test]
    fn quadrature_second_order_in_shells() {
        let exact = |p: f64, a: f64, b: f64| -> f64 {
            // 4 pi * integral_a^b r^(2+p) dr
            let q = 3.0 + p;
            if q.abs() < 1e-12 {
                4.0 * std::f64::consts::PI * (b / a).ln()
            } else {
                4.0 * std::f64::consts::PI * (b.powf(q) - a.powf(q)) / q
            }
        };
        for p in [0.0, 1.0, -1.0, -3.0] {
            let mut errs = Vec::new();
            for shells in [8usize, 16, 32] {
                let ms = build_modes(0.1, 1.0, shells, 1, Spacing::Log, Profile::Nelson).unwrap();
                let quad: f64 = ms
                    .modes
                    .iter()
                    .map(|m| m.weight * m.k_norm().powf(p))
                    .sum();
                errs.push((quad - exact(p, 0.1, 1.0)).abs() / exact(p, 0.1, 1.0).abs());
            }
            // doubling S should reduce the error by about 4x
            assert!(
                errs[2] < errs[0] / 8.0 || errs[2] < 1e-12,
                "p={p}: errors {errs:?}"
            );
        }
    }

    #[test]
    fn fock_dims_match_enumeration() {
        assert_eq!(enumerate_fock(1, 3, 3).unwrap().dim(), 4);
        let fs = enumerate_fock(2, 2, 2).unwrap();
        assert_eq!(fs.dim(), 6);
        let expect: Vec<Vec<u8>> =
            vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 1], vec![2, 0]];
        assert_eq!(fs.configs, expect);
        assert_eq!(enumerate_fock(4, 1, 2).unwrap().dim(), 11);
    }

    #[test]
    fn vacuum_is_ordinal_zero() {
        let fs = enumerate_fock(3, 2, 4).unwrap();
        assert_eq!(fs.ordinal(&[0, 0, 0]), Some(0));
        assert_eq!(fs.dim(), fock_dimension(3, 2, 4));
    }

    #[test]
    fn capacity_budget_is_enforced() {
        assert!(matches!(
            enumerate_fock_bounded(20, 5, 5, 1000),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn annihilation_on_vacuum_and_single_mode() {
        let fs = enumerate_fock(1, 3, 3).unwrap();
        let mut vac = vec![c(0.0, 0.0); fs.dim()];
        vac[0] = c(1.0, 0.0);
        let a_vac = fs.apply_annihilation(0, &vac);
        assert!(a_vac.iter().all(|x| x.norm() == 0.0));

        // a |n=2> = sqrt(2) |n=1>
        let n2 = fs.ordinal(&[2]).unwrap();
        let n1 = fs.ordinal(&[1]).unwrap();
        let mut v = vec![c(0.0, 0.0); fs.dim()];
        v[n2] = c(1.0, 0.0);
        let av = fs.apply_annihilation(0, &v);
        assert!((av[n1] - c(2.0f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn creation_is_adjoint_of_annihilation() {
        let fs = enumerate_fock(3, 2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rand_vec = |rng: &mut ChaCha8Rng| -> Vec<Complex64> {
            (0..fs.dim())
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect()
        };
        for mode in 0..3 {
            let u = rand_vec(&mut rng);
            let v = rand_vec(&mut rng);
            let lhs = dot(&fs.apply_creation(mode, &u), &v);
            let rhs = dot(&u, &fs.apply_annihilation(mode, &v));
            assert!((lhs - rhs).norm() < 1e-13);
        }
    }

    #[test]
    fn number_equals_sum_of_mode_norms() {
        let fs = enumerate_fock(3, 2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v: Vec<Complex64> = (0..fs.dim())
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let nv = fs.apply_number(&v);
        let direct = dot(&v, &nv).re;
        let summed: f64 = (0..3)
            .map(|j| {
                let av = fs.apply_annihilation(j, &v);
                dot(&av, &av).re
            })
            .sum();
        assert!((direct - summed).abs() < 1e-12);

        // N on a (1,1,0) basis vector has eigenvalue 2
        let ord = fs.ordinal(&[1, 1, 0]).unwrap();
        let mut basis = vec![c(0.0, 0.0); fs.dim()];
        basis[ord] = c(1.0, 0.0);
        let nb = fs.apply_number(&basis);
        assert!((nb[ord] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn interior_commutator_is_identity() {
        let fs = enumerate_fock(2, 3, 6).unwrap();
        // [a, a^dag] = 1 on configs with n_j < n_max and total < total_max
        for (ord, config) in fs.configs.iter().enumerate() {
            if config[0] as usize + 1 > fs.n_max - 1 {
                continue;
            }
            if fs.total_occupation(ord) + 1 >= fs.total_max {
                continue;
            }
            let mut v = vec![c(0.0, 0.0); fs.dim()];
            v[ord] = c(1.0, 0.0);
            let ad_a = fs.apply_creation(0, &fs.apply_annihilation(0, &v));
            let a_ad = fs.apply_annihilation(0, &fs.apply_creation(0, &v));
            let comm = a_ad[ord] - ad_a[ord];
            assert!((comm - c(1.0, 0.0)).norm() < 1e-14, "config {config:?}");
        }
    }
}
