//! Particle sector: external potentials, the finite-difference Schrödinger
//! operator on a Dirichlet box, its lowest eigenstates, and matrix elements
//! of position functions and plane waves in the truncated eigenbasis.
//!
//! Natural units throughout: mass 1, hbar 1. Grid inner products are plain
//! node sums times h^d, matching the finite-difference operator.

use crate::error::{Error, Result};
use crate::sparse::{CooMatrix, CsrMatrix};
use crate::spectral::lanczos_add_pair;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Potential class from the non-existence theory: C1 is confining
/// (|x|^2 <= c1 V + c2), C2 decays at infinity with a negative-energy
/// bound state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PotentialClass {
    C1,
    C2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    Harmonic { omega0: f64 },
    GaussianWell { v0: f64, sigma: f64 },
    Tabulated { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(flatten)]
    pub kind: PotentialKind,
    pub declared_class: PotentialClass,
    /// constants of the C1 inequality |x|^2 <= c1 V(x) + c2
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

impl PotentialSpec {
    pub fn harmonic(omega0: f64) -> Self {
        assert!(omega0 > 0.0);
        PotentialSpec {
            kind: PotentialKind::Harmonic { omega0 },
            declared_class: PotentialClass::C1,
            c1: Some(2.0 / (omega0 * omega0)),
            c2: Some(0.0),
        }
    }

    pub fn gaussian_well(v0: f64, sigma: f64) -> Self {
        assert!(v0 > 0.0 && sigma > 0.0);
        PotentialSpec {
            kind: PotentialKind::GaussianWell { v0, sigma },
            declared_class: PotentialClass::C2,
            c1: None,
            c2: None,
        }
    }

    pub fn tabulated(values: Vec<f64>, class: PotentialClass) -> Self {
        PotentialSpec {
            kind: PotentialKind::Tabulated { values },
            declared_class: class,
            c1: None,
            c2: None,
        }
    }

    pub fn evaluate(&self, node: usize, position: &[f64]) -> f64 {
        match &self.kind {
            PotentialKind::Harmonic { omega0 } => {
                let r2: f64 = position.iter().map(|x| x * x).sum();
                0.5 * omega0 * omega0 * r2
            }
            PotentialKind::GaussianWell { v0, sigma } => {
                let r2: f64 = position.iter().map(|x| x * x).sum();
                -v0 * (-r2 / (2.0 * sigma * sigma)).exp()
            }
            PotentialKind::Tabulated { values } => values.get(node).copied().unwrap_or(f64::NAN),
        }
    }
}

/// Regular grid on the box [-L, L]^d with Dirichlet boundary. `points` is odd
/// so the origin is a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dimension: usize,
    pub half_extent: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(dimension: usize, half_extent: f64, points: usize) -> Result<Self> {
        let g = GridSpec {
            dimension,
            half_extent,
            points,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, message: String| {
            Err(Error::Config {
                field: format!("grid.{field}"),
                message,
            })
        };
        if self.dimension != 1 && self.dimension != 3 {
            return fail("dimension", format!("must be 1 or 3, got {}", self.dimension));
        }
        if !(self.half_extent > 0.0) {
            return fail("half_extent", "must be positive".into());
        }
        if self.points < 9 || self.points % 2 == 0 {
            return fail("points", format!("must be odd and >= 9, got {}", self.points));
        }
        if (self.points as f64).powi(self.dimension as i32) > u32::MAX as f64 {
            return fail("points", "total node count exceeds the index type".into());
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / (self.points as f64 - 1.0)
    }

    pub fn num_nodes(&self) -> usize {
        self.points.pow(self.dimension as u32)
    }

    /// d-component node position.
    pub fn position(&self, node: usize) -> Vec<f64> {
        let n = self.points;
        let h = self.spacing();
        let coord = |i: usize| -self.half_extent + i as f64 * h;
        match self.dimension {
            1 => vec![coord(node)],
            3 => {
                let iz = node % n;
                let iy = (node / n) % n;
                let ix = node / (n * n);
                vec![coord(ix), coord(iy), coord(iz)]
            }
            _ => unreachable!(),
        }
    }

    pub fn radius(&self, node: usize) -> f64 {
        self.position(node).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Quadrature measure of one node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dimension as i32)
    }
}

/// Central-difference Schrödinger operator -1/2 Laplacian + V with Dirichlet
/// boundary (implicit zeros outside the box).
pub fn assemble_schrodinger(potential: &PotentialSpec, grid: &GridSpec) -> Result<CsrMatrix<f64>> {
    grid.validate()?;
    let n = grid.points;
    let h = grid.spacing();
    let inv_h2 = 1.0 / (h * h);
    let nodes = grid.num_nodes();
    let mut coo = CooMatrix::<f64>::new(nodes);

    for node in 0..nodes {
        let pos = grid.position(node);
        let v = potential.evaluate(node, &pos);
        if !v.is_finite() {
            return Err(Error::InvalidPotential {
                node,
                position: pos,
            });
        }
        coo.push(node, node, grid.dimension as f64 * inv_h2 + v);
        // neighbor stencil, one axis at a time
        match grid.dimension {
            1 => {
                if node > 0 {
                    coo.push(node, node - 1, -0.5 * inv_h2);
                }
                if node + 1 < n {
                    coo.push(node, node + 1, -0.5 * inv_h2);
                }
            }
            3 => {
                let iz = node % n;
                let iy = (node / n) % n;
                let ix = node / (n * n);
                let strides = [(ix, n * n), (iy, n), (iz, 1)];
                for (i, stride) in strides {
                    if i > 0 {
                        coo.push(node, node - stride, -0.5 * inv_h2);
                    }
                    if i + 1 < n {
                        coo.push(node, node + stride, -0.5 * inv_h2);
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    Ok(coo.into_csr())
}

/// Lowest-M eigenpairs of the grid Schrödinger operator. Orbitals are
/// orthonormal in the h^d-weighted grid inner product, energies ascending,
/// each orbital's largest-magnitude component made positive.
#[derive(Debug, Clone)]
pub struct AtomicBasis {
    pub grid: GridSpec,
    pub energies: Vec<f64>,
    pub orbitals: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

impl AtomicBasis {
    pub fn m(&self) -> usize {
        self.energies.len()
    }

    pub fn e_at(&self) -> f64 {
        self.energies[0]
    }

    /// Grammian in the grid inner product; identity to 1e-10 by construction.
    pub fn gram(&self) -> DMatrix<f64> {
        let m = self.m();
        let hd = self.grid.cell_volume();
        let mut g = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                g[(a, b)] = hd
                    * self.orbitals[a]
                        .iter()
                        .zip(&self.orbitals[b])
                        .map(|(x, y)| x * y)
                        .sum::<f64>();
            }
        }
        g
    }

    /// Content hash for provenance tracking.
    pub fn provenance(&self) -> u64 {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(self.grid.dimension.to_le_bytes());
        hasher.update(self.grid.half_extent.to_le_bytes());
        hasher.update(self.grid.points.to_le_bytes());
        for e in &self.energies {
            hasher.update(e.to_le_bytes());
        }
        let out = hasher.finalize();
        u64::from_le_bytes(out[..8].try_into().unwrap())
    }
}

const DEGENERACY_TOL: f64 = 1e-6;
const MAX_MULTIPLET_EXTENSION: usize = 4;

/// Solve for the lowest `m` eigenpairs. If the requested cut splits a
/// degenerate multiplet, the basis is extended upward to keep it whole.
pub fn solve_atomic(h_at: &CsrMatrix<f64>, grid: &GridSpec, m: usize, tol: f64) -> Result<AtomicBasis> {
    assert!(m >= 1);
    assert!(m < h_at.dim, "basis must be much smaller than the grid");
    let budget = 400_000;

    let mut pairs = Vec::new();
    let mut matvecs = 0usize;
    for target in 0..m {
        lanczos_add_pair(h_at, &mut pairs, target, tol, budget, &mut matvecs, usize::MAX)?;
    }
    pairs.sort_by(|a, b| a.value.total_cmp(&b.value));

    // Probe past the cut so a degenerate multiplet is never split. The probe
    // gets a bounded restart budget: in a dense near-continuum spectrum it may
    // not converge, in which case the cut is taken as-is.
    while pairs.len() < (m + MAX_MULTIPLET_EXTENSION).min(h_at.dim - 1) {
        let seed = pairs.len();
        if lanczos_add_pair(h_at, &mut pairs, seed, tol, budget, &mut matvecs, 6).is_err() {
            break;
        }
        pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
        let scale = pairs.last().map(|p| p.value.abs().max(1.0)).unwrap();
        let cut = pairs.len() - 1;
        if (pairs[cut].value - pairs[cut - 1].value).abs() >= DEGENERACY_TOL * scale {
            // genuine gap above the last kept level
            pairs.truncate(cut);
            break;
        }
    }
    pairs.truncate((m + MAX_MULTIPLET_EXTENSION).min(pairs.len()));

    let hd_sqrt = grid.cell_volume().sqrt();
    let mut energies = Vec::with_capacity(pairs.len());
    let mut orbitals = Vec::with_capacity(pairs.len());
    let mut residuals = Vec::with_capacity(pairs.len());
    for p in pairs {
        energies.push(p.value);
        residuals.push(p.residual);
        let mut orb: Vec<f64> = p.vector.iter().map(|x| x / hd_sqrt).collect();
        // deterministic sign: largest-magnitude component positive
        let mut pivot = 0usize;
        for (i, x) in orb.iter().enumerate() {
            if x.abs() > orb[pivot].abs() {
                pivot = i;
            }
        }
        if orb[pivot] < 0.0 {
            for x in orb.iter_mut() {
                *x = -*x;
            }
        }
        orbitals.push(orb);
    }

    Ok(AtomicBasis {
        grid: *grid,
        energies,
        orbitals,
        residuals,
    })
}

/// Class verification report.
#[derive(Debug, Clone, Serialize)]
pub struct ClassReport {
    pub class: PotentialClass,
    pub e_at: f64,
    /// C1 constants, when applicable
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    /// smallest ground-orbital component after the global sign fix (C2)
    pub min_ground_component: Option<f64>,
    /// sup of |V| outside increasing radii (C2 decay diagnostic)
    pub tail_sup: Vec<(f64, f64)>,
}

/// Verify the declared class conditions on the solved grid.
pub fn validate_class(potential: &PotentialSpec, basis: &AtomicBasis) -> Result<ClassReport> {
    let grid = &basis.grid;
    match potential.declared_class {
        PotentialClass::C1 => {
            let (c1, c2) = match (potential.c1, potential.c2) {
                (Some(c1), Some(c2)) if c1 > 0.0 && c2 >= 0.0 => (c1, c2),
                _ => {
                    return Err(Error::Config {
                        field: "potential.c1".into(),
                        message: "class C1 requires positive constants c1, c2".into(),
                    })
                }
            };
            for node in 0..grid.num_nodes() {
                let pos = grid.position(node);
                let r2: f64 = pos.iter().map(|x| x * x).sum();
                let v = potential.evaluate(node, &pos);
                if r2 > c1 * v + c2 + 1e-9 {
                    return Err(Error::ClassViolation {
                        class: "C1".into(),
                        detail: format!("|x|^2 = {r2} > c1 V + c2 = {}", c1 * v + c2),
                        node,
                        position: pos,
                    });
                }
            }
            Ok(ClassReport {
                class: PotentialClass::C1,
                e_at: basis.e_at(),
                c1: Some(c1),
                c2: Some(c2),
                min_ground_component: None,
                tail_sup: Vec::new(),
            })
        }
        PotentialClass::C2 => {
            if basis.e_at() >= 0.0 {
                return Err(Error::ClassViolation {
                    class: "C2".into(),
                    detail: format!("E_at = {} is not negative (no bound state)", basis.e_at()),
                    node: 0,
                    position: grid.position(0),
                });
            }
            // decay of |V| outside increasing radii
            let radii: Vec<f64> = (1..=4)
                .map(|i| grid.half_extent * i as f64 / 4.0)
                .collect();
            let mut tail_sup = Vec::new();
            for &rad in &radii {
                let mut sup = 0.0f64;
                for node in 0..grid.num_nodes() {
                    let pos = grid.position(node);
                    if grid.radius(node) > rad {
                        sup = sup.max(potential.evaluate(node, &pos).abs());
                    }
                }
                tail_sup.push((rad, sup));
            }
            for w in tail_sup.windows(2) {
                if w[1].1 > w[0].1 + 1e-12 {
                    return Err(Error::ClassViolation {
                        class: "C2".into(),
                        detail: format!(
                            "sup |V| outside radius {} grew to {}",
                            w[1].0, w[1].1
                        ),
                        node: 0,
                        position: grid.position(0),
                    });
                }
            }
            // ground-orbital nonnegativity up to the sign convention; reported
            let min_component = basis.orbitals[0]
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            Ok(ClassReport {
                class: PotentialClass::C2,
                e_at: basis.e_at(),
                c1: None,
                c2: None,
                min_ground_component: Some(min_component),
                tail_sup,
            })
        }
    }
}

/// Matrix of e^{-i k.x} in the eigenbasis. A one-dimensional particle couples
/// along the z axis, matching the default (+z) direction set.
pub fn plane_wave_matrix(basis: &AtomicBasis, k: [f64; 3]) -> DMatrix<Complex64> {
    let grid = &basis.grid;
    let m = basis.m();
    let hd = grid.cell_volume();
    let nodes = grid.num_nodes();

    let mut phases = Vec::with_capacity(nodes);
    for node in 0..nodes {
        let pos = grid.position(node);
        let dot = match grid.dimension {
            1 => k[2] * pos[0],
            3 => k[0] * pos[0] + k[1] * pos[1] + k[2] * pos[2],
            _ => unreachable!(),
        };
        phases.push(Complex64::new(0.0, -dot).exp());
    }

    let mut w = DMatrix::<Complex64>::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            let mut s = Complex64::new(0.0, 0.0);
            for node in 0..nodes {
                s += basis.orbitals[a][node] * phases[node] * basis.orbitals[b][node];
            }
            w[(a, b)] = s * hd;
        }
    }
    w
}

/// Position-function matrices in the eigenbasis.
#[derive(Debug, Clone)]
pub struct AtomicOperators {
    /// |x|^2
    pub x2: DMatrix<f64>,
    /// |x|
    pub abs_x: DMatrix<f64>,
    /// e^{c |x|}
    pub exp_abs_x: DMatrix<f64>,
    pub exp_rate: f64,
    /// componentwise position matrices, one per particle axis
    pub x_mean: Vec<DMatrix<f64>>,
}

fn project_diagonal(basis: &AtomicBasis, f: impl Fn(usize) -> f64) -> DMatrix<f64> {
    let m = basis.m();
    let hd = basis.grid.cell_volume();
    let nodes = basis.grid.num_nodes();
    let mut out = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let mut s = 0.0;
            for node in 0..nodes {
                s += basis.orbitals[a][node] * f(node) * basis.orbitals[b][node];
            }
            s *= hd;
            out[(a, b)] = s;
            out[(b, a)] = s;
        }
    }
    out
}

/// Matrices of |x|, |x|^2 and e^{c|x|} by node-wise multiplication and
/// projection onto the eigenbasis.
pub fn position_moment_matrices(basis: &AtomicBasis, c: f64) -> Result<AtomicOperators> {
    assert!(c >= 0.0);
    let grid = basis.grid;
    let corner = grid.half_extent * (grid.dimension as f64).sqrt();
    if c * corner > 700.0 {
        return Err(Error::Overflow { c, corner });
    }
    let radii: Vec<f64> = (0..grid.num_nodes()).map(|n| grid.radius(n)).collect();
    let x2 = project_diagonal(basis, |n| radii[n] * radii[n]);
    let abs_x = project_diagonal(basis, |n| radii[n]);
    let exp_abs_x = project_diagonal(basis, |n| (c * radii[n]).exp());
    let x_mean = (0..grid.dimension)
        .map(|axis| project_diagonal(basis, |n| grid.position(n)[axis]))
        .collect();
    Ok(AtomicOperators {
        x2,
        abs_x,
        exp_abs_x,
        exp_rate: c,
        x_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic_1d() -> (PotentialSpec, GridSpec) {
        (
            PotentialSpec::harmonic(1.0),
            GridSpec::new(1, 10.0, 201).unwrap(),
        )
    }

    #[test]
    fn harmonic_1d_ground_energy() {
        let (v, g) = harmonic_1d();
        let h = assemble_schrodinger(&v, &g).unwrap();
        let basis = solve_atomic(&h, &g, 1, 1e-9).unwrap();
        assert!(
            (basis.e_at() - 0.5).abs() < 1e-3,
            "E0 = {}, want 0.5",
            basis.e_at()
        );
    }

    #[test]
    fn harmonic_1d_matches_dense_diagonalization() {
        let v = PotentialSpec::harmonic(1.0);
        let g = GridSpec::new(1, 8.0, 101).unwrap();
        let h = assemble_schrodinger(&v, &g).unwrap();
        let basis = solve_atomic(&h, &g, 3, 1e-10).unwrap();

        // dense oracle on the same matrix
        let n = g.num_nodes();
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for row in 0..n {
            for idx in h.row_ptr[row]..h.row_ptr[row + 1] {
                dense[(row, h.cols[idx] as usize)] = h.vals[idx];
            }
        }
        let mut evs: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().cloned().collect();
        evs.sort_by(f64::total_cmp);
        for (a, b) in basis.energies.iter().zip(&evs) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn free_particle_is_nonnegative() {
        let v = PotentialSpec::tabulated(vec![0.0; 41], PotentialClass::C2);
        let g = GridSpec::new(1, 5.0, 41).unwrap();
        let h = assemble_schrodinger(&v, &g).unwrap();
        let basis = solve_atomic(&h, &g, 1, 1e-9).unwrap();
        assert!(basis.e_at() >= 0.0);
    }

    #[test]
    fn harmonic_3d_spectrum_with_degenerate_multiplet() {
        let v = PotentialSpec::harmonic(1.0);
        let g = GridSpec::new(3, 6.0, 21).unwrap();
        let h = assemble_schrodinger(&v, &g).unwrap();
        let basis = solve_atomic(&h, &g, 4, 1e-7).unwrap();
        assert!((basis.e_at() - 1.5).abs() < 0.05, "E0 = {}", basis.e_at());
        // central differences on h = 0.6 bias the levels down by ~0.1
        for a in 1..4 {
            assert!(
                (basis.energies[a] - 2.5).abs() < 0.15,
                "E{a} = {}",
                basis.energies[a]
            );
            // the multiplet itself is exactly degenerate on the cubic grid
            assert!((basis.energies[a] - basis.energies[1]).abs() < 1e-6);
        }
        // Gram matrix is the identity
        let gram = basis.gram();
        for a in 0..basis.m() {
            for b in 0..basis.m() {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((gram[(a, b)] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gaussian_well_binds_and_validates_c2() {
        let v = PotentialSpec::gaussian_well(5.0, 1.0);
        let g = GridSpec::new(3, 6.0, 21).unwrap();
        let h = assemble_schrodinger(&v, &g).unwrap();
        let basis = solve_atomic(&h, &g, 1, 1e-8).unwrap();
        assert!(basis.e_at() < 0.0, "E_at = {}", basis.e_at());
        let report = validate_class(&v, &basis).unwrap();
        assert_eq!(report.class, PotentialClass::C2);
        assert!(report.e_at < 0.0);
    }

    #[test]
    fn shallow_well_has_no_bound_state() {
        let v = PotentialSpec::gaussian_well(0.01, 0.1);
        let g = GridSpec::new(3, 4.0, 17).unwrap();
        let h = assemble_schrodinger(&v, &g).unwrap();
        let basis = solve_atomic(&h, &g, 1, 1e-8).unwrap();
        assert!(matches!(
            validate_class(&v, &basis),
            Err(Error::ClassViolation { .. })
        ));
    }

    #[test]
    fn harmonic_class_c1_accepted() {
        let (v, g) = harmonic_1d();
        let h = assemble_schrodinger(&v, &g).unwrap();
        let basis = solve_atomic(&h, &g, 1, 1e-9).unwrap();
        let report = validate_class(&v, &basis).unwrap();
        assert_eq!(report.c1, Some(2.0));
        assert_eq!(report.c2, Some(0.0));
    }

    #[test]
    fn invalid_potential_is_rejected() {
        let mut values = vec![0.0; 201];
        values[7] = f64::NAN;
        let v = PotentialSpec::tabulated(values, PotentialClass::C2);
        let g = GridSpec::new(1, 10.0, 201).unwrap();
        assert!(matches!(
            assemble_schrodinger(&v, &g),
            Err(Error::InvalidPotential { node: 7, .. })
        ));
    }

    #[test]
    fn plane_wave_at_zero_is_identity() {
        let (v, g) = harmonic_1d();
        let h = assemble_schrodinger(&v, &g).unwrap();
        let basis = solve_atomic(&h, &g, 2, 1e-9).unwrap();
        let w = plane_wave_matrix(&basis, [0.0, 0.0, 0.0]);
        for a in 0..2 {
            for b in 0..2 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((w[(a, b)] - Complex64::new(want, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn plane_wave_conjugate_pair_and_contraction() {
        let (v, g) = harmonic_1d();
        let h = assemble_schrodinger(&v, &g).unwrap();
        let basis = solve_atomic(&h, &g, 2, 1e-9).unwrap();
        let k = [0.0, 0.0, 1.0];
        let km = [0.0, 0.0, -1.0];
        let w = plane_wave_matrix(&basis, k);
        let wm = plane_wave_matrix(&basis, km);
        for a in 0..2 {
            for b in 0..2 {
                assert!((wm[(a, b)] - w[(b, a)].conj()).norm() < 1e-12);
            }
        }
        // contraction: singular values <= 1
        let svd = w.clone().svd(false, false);
        for s in svd.singular_values.iter() {
            assert!(*s <= 1.0 + 1e-8, "singular value {s}");
        }
        // row of a contraction
        let row: f64 = w[(0, 0)].norm_sqr() + w[(0, 1)].norm_sqr();
        assert!(row <= 1.0 + 1e-10);
    }

    #[test]
    fn dipole_error_bound_nodewise() {
        // ||(e^{-ikx} - 1) v|| <= |k| || |x| v || on grid vectors,
        // from |e^{i theta} - 1| <= |theta| node-wise
        let (v, g) = harmonic_1d();
        let h = assemble_schrodinger(&v, &g).unwrap();
        let basis = solve_atomic(&h, &g, 3, 1e-9).unwrap();
        let hd = g.cell_volume();
        for kz in [0.3, 1.0, 2.5] {
            for orb in &basis.orbitals {
                let mut lhs = 0.0;
                let mut rhs = 0.0;
                for node in 0..g.num_nodes() {
                    let x = g.position(node)[0];
                    let phase = Complex64::new(0.0, -kz * x).exp() - Complex64::new(1.0, 0.0);
                    lhs += phase.norm_sqr() * orb[node] * orb[node] * hd;
                    rhs += (kz * x).powi(2) * orb[node] * orb[node] * hd;
                }
                assert!(lhs.sqrt() <= rhs.sqrt() + 1e-12);
            }
        }
    }

    #[test]
    fn oscillator_variance_and_jensen() {
        let (v, g) = harmonic_1d();
        let h = assemble_schrodinger(&v, &g).unwrap();
        let basis = solve_atomic(&h, &g, 2, 1e-9).unwrap();
        let ops = position_moment_matrices(&basis, 0.0).unwrap();
        // <x^2> = 1/(2 omega0) = 0.5 on the ground orbital
        assert!((ops.x2[(0, 0)] - 0.5).abs() < 1e-2);
        // c = 0: exp matrix is the Gram matrix = identity
        for a in 0..2 {
            for b in 0..2 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ops.exp_abs_x[(a, b)] - want).abs() < 1e-10);
            }
        }
        // Jensen: <|x|>^2 <= <x^2> on every basis vector
        for a in 0..2 {
            assert!(ops.abs_x[(a, a)].powi(2) <= ops.x2[(a, a)] + 1e-12);
        }
    }

    #[test]
    fn projection_consistency() {
        // for a vector in the span, X2 reproduces the direct grid quadrature
        let (v, g) = harmonic_1d();
        let h = assemble_schrodinger(&v, &g).unwrap();
        let basis = solve_atomic(&h, &g, 3, 1e-10).unwrap();
        let ops = position_moment_matrices(&basis, 0.0).unwrap();
        let coeff = [0.6, -0.5, 0.624_499_799_839_84]; // unit vector
        let hd = g.cell_volume();
        let mut grid_vec = vec![0.0; g.num_nodes()];
        for (a, &ca) in coeff.iter().enumerate() {
            for (i, x) in basis.orbitals[a].iter().enumerate() {
                grid_vec[i] += ca * x;
            }
        }
        let direct: f64 = (0..g.num_nodes())
            .map(|n| {
                let x = g.position(n)[0];
                x * x * grid_vec[n] * grid_vec[n] * hd
            })
            .sum();
        let mut projected = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                projected += coeff[a] * ops.x2[(a, b)] * coeff[b];
            }
        }
        assert!((direct - projected).abs() < 1e-10);
    }

    #[test]
    fn exp_overflow_is_reported() {
        let (v, g) = harmonic_1d();
        let h = assemble_schrodinger(&v, &g).unwrap();
        let basis = solve_atomic(&h, &g, 1, 1e-9).unwrap();
        assert!(matches!(
            position_moment_matrices(&basis, 100.0),
            Err(Error::Overflow { .. })
        ));
    }
}
