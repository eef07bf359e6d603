//! Coupled Hamiltonian on (atomic levels) tensor (truncated Fock space),
//! the exactly solvable van Hove (frozen-particle) oracle, and the analytic
//! self-energy bracket.

use crate::atomic::{
    assemble_schrodinger, plane_wave_matrix, solve_atomic, AtomicBasis, GridSpec, PotentialSpec,
};
use crate::error::{Error, Result};
use crate::field::{enumerate_fock, FockSpace, ModeSet, Profile, Spacing};
use crate::sparse::{CooMatrix, CsrMatrix};
use crate::spectral::{lanczos_ground, GroundState};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Complete description of one coupled run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    /// coupling constant (real, any sign)
    pub q: f64,
    pub potential: PotentialSpec,
    pub grid: GridSpec,
    /// atomic levels kept (M)
    pub levels: usize,
    pub kappa: f64,
    pub lambda: f64,
    pub shells: usize,
    pub directions: usize,
    pub spacing: Spacing,
    pub profile: Profile,
    /// per-mode occupancy cap
    pub n_max: usize,
    /// total-number cap
    pub total_max: usize,
    pub eig_tol: f64,
    pub solve_tol: f64,
    pub max_matvecs: usize,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.q.is_finite() {
            return Err(Error::Config {
                field: "q".into(),
                message: format!("coupling must be finite (got {})", self.q),
            });
        }
        if self.levels == 0 {
            return Err(Error::Config {
                field: "levels".into(),
                message: "at least one atomic level is required".into(),
            });
        }
        if !(self.kappa > 0.0 && self.kappa < self.lambda) {
            return Err(Error::CutoffOrder {
                kappa: self.kappa,
                lambda: self.lambda,
            });
        }
        if self.eig_tol <= 0.0 || self.solve_tol <= 0.0 {
            return Err(Error::Config {
                field: "eig_tol".into(),
                message: "tolerances must be positive".into(),
            });
        }
        self.grid.validate()
    }

    pub fn build_modes(&self) -> Result<ModeSet> {
        crate::field::build_modes(
            self.kappa,
            self.lambda,
            self.shells,
            self.directions,
            self.spacing,
            self.profile,
        )
    }
}

/// Index bookkeeping for vectors on (atomic levels) tensor (Fock space).
/// The atomic index runs fastest: component (a, c) sits at c * levels + a.
#[derive(Debug, Clone)]
pub struct CoupledSpace {
    pub levels: usize,
    pub fock: FockSpace,
}

impl CoupledSpace {
    pub fn dim(&self) -> usize {
        self.levels * self.fock.dim()
    }

    /// (I tensor a_j) v.
    pub fn apply_annihilation(&self, mode: usize, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim());
        let m = self.levels;
        let fock = &self.fock;
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        let mut scratch = vec![0u8; fock.modes];
        for (ord, config) in fock.configs.iter().enumerate() {
            let n = config[mode] as usize;
            if n + 1 > fock.n_max || fock.total_occupation(ord) + 1 > fock.total_max {
                continue;
            }
            scratch.copy_from_slice(config);
            scratch[mode] += 1;
            if let Some(src) = fock.ordinal(&scratch) {
                let f = ((n + 1) as f64).sqrt();
                for a in 0..m {
                    out[ord * m + a] = f * v[src * m + a];
                }
            }
        }
        out
    }

    /// (I tensor N) v, with N the total number operator.
    pub fn apply_number(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim());
        let m = self.levels;
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for (ord, _) in self.fock.configs.iter().enumerate() {
            let n = self.fock.total_occupation(ord) as f64;
            for a in 0..m {
                out[ord * m + a] = v[ord * m + a] * n;
            }
        }
        out
    }

    /// (A tensor I) v for an atomic-sector matrix A.
    pub fn apply_atomic(&self, a_mat: &DMatrix<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim());
        let m = self.levels;
        assert_eq!(a_mat.nrows(), m);
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for ord in 0..self.fock.dim() {
            for a in 0..m {
                let mut s = Complex64::new(0.0, 0.0);
                for b in 0..m {
                    s += a_mat[(a, b)] * v[ord * m + b];
                }
                out[ord * m + a] = s;
            }
        }
        out
    }

    /// Expectation of A tensor I: sum over configs of psi_c^dag A psi_c.
    pub fn atomic_expectation(&self, a_mat: &DMatrix<f64>, v: &[Complex64]) -> f64 {
        assert_eq!(v.len(), self.dim());
        let m = self.levels;
        assert_eq!(a_mat.nrows(), m);
        let mut s = 0.0;
        for ord in 0..self.fock.dim() {
            for a in 0..m {
                for b in 0..m {
                    s += a_mat[(a, b)] * (v[ord * m + a].conj() * v[ord * m + b]).re;
                }
            }
        }
        s
    }

    /// Mass on the truncation boundary: |psi|^2 summed over configs with
    /// total occupation equal to the cap, marginal over the atomic index.
    pub fn tail_weight(&self, v: &[Complex64]) -> f64 {
        assert_eq!(v.len(), self.dim());
        let m = self.levels;
        let mut s = 0.0;
        for ord in 0..self.fock.dim() {
            if self.fock.total_occupation(ord) == self.fock.total_max {
                for a in 0..m {
                    s += v[ord * m + a].norm_sqr();
                }
            }
        }
        s
    }
}

/// Assembled coupled Hamiltonian with its building blocks.
#[derive(Debug, Clone)]
pub struct NelsonMatrix {
    pub matrix: CsrMatrix<Complex64>,
    pub space: CoupledSpace,
    pub modes: ModeSet,
    /// plane-wave matrices W(k_j) in the atomic eigenbasis, one per mode
    pub plane_waves: Vec<DMatrix<Complex64>>,
    pub atomic_energies: Vec<f64>,
    pub q: f64,
    pub basis_hash: u64,
    pub modes_hash: u64,
    pub fock_hash: u64,
}

impl NelsonMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    pub fn e_at(&self) -> f64 {
        self.atomic_energies[0]
    }

    /// Reject cross-configuration mixing: the supplied components must be the
    /// ones this matrix was assembled from.
    pub fn check_provenance(&self, basis: &AtomicBasis, modes: &ModeSet, fock: &FockSpace) -> Result<()> {
        if basis.provenance() != self.basis_hash {
            return Err(Error::Provenance("atomic basis hash mismatch".into()));
        }
        if modes.provenance() != self.modes_hash {
            return Err(Error::Provenance("mode set hash mismatch".into()));
        }
        if fock.provenance() != self.fock_hash {
            return Err(Error::Provenance("Fock space hash mismatch".into()));
        }
        Ok(())
    }
}

/// H = diag(E_a) tensor I + I tensor diag(sum_j n_j omega_j)
///   + q sum_j g_j (W(k_j)^dag tensor a_j + W(k_j) tensor a_j^dag).
pub fn assemble_hamiltonian(
    q: f64,
    basis: &AtomicBasis,
    modes: &ModeSet,
    fock: &FockSpace,
) -> Result<NelsonMatrix> {
    let m = basis.m();
    let fdim = fock.dim();
    let dim = m
        .checked_mul(fdim)
        .ok_or_else(|| Error::Unsupported("coupled dimension overflows usize".into()))?;
    assert_eq!(fock.modes, modes.modes.len());

    let plane_waves: Vec<DMatrix<Complex64>> = modes
        .modes
        .iter()
        .map(|mode| plane_wave_matrix(basis, mode.k))
        .collect();

    let mut coo = CooMatrix::<Complex64>::new(dim);

    // boson-diagonal part: atomic energies plus the free field energy
    for (ord, config) in fock.configs.iter().enumerate() {
        let field_energy: f64 = config
            .iter()
            .zip(&modes.modes)
            .map(|(&n, mode)| n as f64 * mode.omega)
            .sum();
        for a in 0..m {
            coo.push(
                ord * m + a,
                ord * m + a,
                Complex64::new(basis.energies[a] + field_energy, 0.0),
            );
        }
    }

    // interaction: q g_j (W^dag tensor a_j + W tensor a_j^dag); the a_j block
    // connects config c (row) to c + e_j (column), and Hermiticity is kept by
    // pushing each entry together with its conjugate transpose
    if q != 0.0 {
        let mut scratch = vec![0u8; fock.modes];
        for (j, mode) in modes.modes.iter().enumerate() {
            let g = mode.g();
            let w = &plane_waves[j];
            for (ord, config) in fock.configs.iter().enumerate() {
                let n = config[j] as usize;
                if n + 1 > fock.n_max || fock.total_occupation(ord) + 1 > fock.total_max {
                    continue;
                }
                scratch.copy_from_slice(config);
                scratch[j] += 1;
                let Some(upper) = fock.ordinal(&scratch) else {
                    continue;
                };
                let f = q * g * ((n + 1) as f64).sqrt();
                for a in 0..m {
                    for b in 0..m {
                        // W^dag_{ab} = conj(W_{ba})
                        let v = w[(b, a)].conj() * f;
                        if v.norm_sqr() == 0.0 {
                            continue;
                        }
                        coo.push(ord * m + a, upper * m + b, v);
                        coo.push(upper * m + b, ord * m + a, v.conj());
                    }
                }
            }
        }
    }

    Ok(NelsonMatrix {
        matrix: coo.into_csr(),
        space: CoupledSpace {
            levels: m,
            fock: fock.clone(),
        },
        modes: modes.clone(),
        plane_waves,
        atomic_energies: basis.energies.clone(),
        q,
        basis_hash: basis.provenance(),
        modes_hash: modes.provenance(),
        fock_hash: fock.provenance(),
    })
}

/// Frozen-particle (van Hove) model: one atomic level, every W(k) replaced by
/// the identity. Exactly solvable; serves as the closed-form oracle.
pub fn assemble_van_hove(
    modes: &ModeSet,
    fock: &FockSpace,
    e_at: f64,
    q: f64,
) -> Result<NelsonMatrix> {
    assert_eq!(fock.modes, modes.modes.len());
    let fdim = fock.dim();
    let mut coo = CooMatrix::<Complex64>::new(fdim);

    for (ord, config) in fock.configs.iter().enumerate() {
        let field_energy: f64 = config
            .iter()
            .zip(&modes.modes)
            .map(|(&n, mode)| n as f64 * mode.omega)
            .sum();
        coo.push(ord, ord, Complex64::new(e_at + field_energy, 0.0));
    }

    if q != 0.0 {
        let mut scratch = vec![0u8; fock.modes];
        for (j, mode) in modes.modes.iter().enumerate() {
            let g = mode.g();
            for (ord, config) in fock.configs.iter().enumerate() {
                let n = config[j] as usize;
                if n + 1 > fock.n_max || fock.total_occupation(ord) + 1 > fock.total_max {
                    continue;
                }
                scratch.copy_from_slice(config);
                scratch[j] += 1;
                let Some(upper) = fock.ordinal(&scratch) else {
                    continue;
                };
                let v = Complex64::new(q * g * ((n + 1) as f64).sqrt(), 0.0);
                coo.push(ord, upper, v);
                coo.push(upper, ord, v);
            }
        }
    }

    let identity = DMatrix::<Complex64>::identity(1, 1);
    Ok(NelsonMatrix {
        matrix: coo.into_csr(),
        space: CoupledSpace {
            levels: 1,
            fock: fock.clone(),
        },
        modes: modes.clone(),
        plane_waves: vec![identity; modes.modes.len()],
        atomic_energies: vec![e_at],
        q,
        basis_hash: 0,
        modes_hash: modes.provenance(),
        fock_hash: fock.provenance(),
    })
}

/// Closed form for the van Hove model (displaced oscillators).
#[derive(Debug, Clone, Serialize)]
pub struct VanHoveClosedForm {
    pub energy: f64,
    pub n_expect: f64,
    /// coherent displacements alpha_j = -q g_j / omega_j
    pub displacements: Vec<f64>,
}

pub fn van_hove_closed_form(modes: &ModeSet, e_at: f64, q: f64) -> VanHoveClosedForm {
    let mut energy = e_at;
    let mut n_expect = 0.0;
    let mut displacements = Vec::with_capacity(modes.modes.len());
    for mode in &modes.modes {
        let g = mode.g();
        energy -= q * q * g * g / mode.omega;
        n_expect += q * q * g * g / (mode.omega * mode.omega);
        displacements.push(-q * g / mode.omega);
    }
    VanHoveClosedForm {
        energy,
        n_expect,
        displacements,
    }
}

/// Variational self-energy bracket:
/// E_at - q^2 sum_j g_j^2 / omega_j <= E <= E_at.
///
/// The lower constant is the omega-weighted coupling norm: completing the
/// square mode by mode gives omega a'a + q g (W'a + W a') >=
/// -(q^2 g^2/omega) W'W >= -q^2 g^2/omega since ||W|| <= 1, and the van Hove
/// model attains it exactly. The unweighted sum_j g_j^2 is NOT a valid lower
/// constant (the van Hove ground energy already sits below it whenever
/// omega < 1 somewhere on the shell).
pub fn self_energy_bracket(modes: &ModeSet, e_at: f64, q: f64) -> (f64, f64) {
    (e_at - q * q * modes.coupling_over_omega(), e_at)
}

/// Solve the lowest eigenpair of a coupled matrix and attach the Fock
/// truncation tail weight.
pub fn solve_ground(h: &NelsonMatrix, tol: f64, max_matvecs: usize) -> Result<GroundState> {
    let mut gs = lanczos_ground(&h.matrix, tol, max_matvecs)?;
    gs.tail_weight = h.space.tail_weight(&gs.psi);
    Ok(gs)
}

/// Everything the downstream checks need from one configuration.
pub struct BuiltModel {
    pub config: ModelConfig,
    pub basis: AtomicBasis,
    pub modes: ModeSet,
    pub fock: FockSpace,
    pub matrix: NelsonMatrix,
}

/// Assemble the full pipeline for a configuration: atomic solve, quadrature
/// modes, Fock enumeration, coupled matrix.
pub fn build_model(cfg: &ModelConfig) -> Result<BuiltModel> {
    cfg.validate()?;
    let h_at = assemble_schrodinger(&cfg.potential, &cfg.grid)?;
    let basis = solve_atomic(&h_at, &cfg.grid, cfg.levels, cfg.eig_tol)?;
    let modes = cfg.build_modes()?;
    let fock = enumerate_fock(modes.modes.len(), cfg.n_max, cfg.total_max)?;
    let matrix = assemble_hamiltonian(cfg.q, &basis, &modes, &fock)?;
    Ok(BuiltModel {
        config: cfg.clone(),
        basis,
        modes,
        fock,
        matrix,
    })
}
