//! Seeded random problem instances.
//!
//! Entries are complex with real and imaginary parts uniform in [-1, 1].
//! Generators that take a seed are reproducible across runs and platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dare::DareState;
use crate::matrixkit::{c64, lu_factor, orthonormal_basis, spectral_radius, DenseMatrix};
use crate::nme::NmeState;
use crate::pencil::PencilState;
use crate::stein::SteinState;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Random square matrix with spectral norm of order `scale`.
pub fn small(rng: &mut impl Rng, n: usize, scale: f64) -> DenseMatrix {
    random_matrix(rng, n, n).scale_real(scale / (n as f64).sqrt())
}

/// `MᴴM / n` for random `M`; positive definite with probability one.
pub fn random_psd(rng: &mut impl Rng, n: usize) -> DenseMatrix {
    let m = random_matrix(rng, n, n);
    (m.adjoint() * m).scale_real(1.0 / n as f64).hermitian_part()
}

/// `M` rescaled to spectral radius `rho`.
pub fn with_spectral_radius(m: &DenseMatrix, rho: f64) -> DenseMatrix {
    let current = spectral_radius(m).expect("square input");
    m.scale_real(rho / current)
}

pub fn random_stein_state(rng: &mut impl Rng, m: usize, n: usize) -> SteinState {
    SteinState {
        a: small(rng, m, 0.5),
        b: small(rng, n, 0.5),
        c: random_matrix(rng, m, n),
    }
}

/// Square Stein problem with `ρ(A) = ρ(B) = sqrt(rho_product)`.
pub fn stein_instance(seed: u64, n: usize, rho_product: f64) -> SteinState {
    let mut rng = rng(seed);
    let each = rho_product.sqrt();
    let a = with_spectral_radius(&random_matrix(&mut rng, n, n), each);
    let b = with_spectral_radius(&random_matrix(&mut rng, n, n), each);
    let c = random_matrix(&mut rng, n, n);
    SteinState { a, b, c }
}

pub fn random_pencil_state(rng: &mut impl Rng, n: usize) -> PencilState {
    let i = DenseMatrix::identity(n);
    PencilState {
        a: &i + small(rng, n, 0.3),
        b: &i + small(rng, n, 0.3),
    }
}

/// Pencil with prescribed eigenvalues and a known stable subspace.
#[derive(Debug, Clone)]
pub struct PencilInstance {
    pub state: PencilState,
    /// Orthonormal basis of the span of eigenvectors with `|λ| < 1`.
    pub stable_basis: DenseMatrix,
    /// Eigenvector matrix; column `j` belongs to `eigenvalues[j]`.
    pub eigenvectors: DenseMatrix,
}

/// `A = W·D·V⁻¹`, `B = W·V⁻¹` with `D = diag(eigenvalues)` and well
/// conditioned random `W`, `V`.
pub fn conjugated_pencil(seed: u64, eigenvalues: &[f64]) -> PencilInstance {
    let n = eigenvalues.len();
    let mut rng = rng(seed);
    let i = DenseMatrix::identity(n);
    let w = &i + small(&mut rng, n, 0.3);
    let v = &i + small(&mut rng, n, 0.3);
    let v_inv = lu_factor(&v).expect("perturbed identity").inverse();
    let d = DenseMatrix::from_real_diagonal(eigenvalues);
    let stable: Vec<usize> = (0..n).filter(|&j| eigenvalues[j].abs() < 1.0).collect();
    let cols = DenseMatrix::from_fn(n, stable.len(), |r, c| v.get(r, stable[c]));
    PencilInstance {
        state: PencilState { a: &w * d * &v_inv, b: &w * &v_inv },
        stable_basis: orthonormal_basis(&cols),
        eigenvectors: v,
    }
}

pub fn random_nme_state(rng: &mut impl Rng, n: usize) -> NmeState {
    NmeState {
        a: small(rng, n, 0.3),
        b: small(rng, n, 0.3),
        p: small(rng, n, 0.2),
        q: DenseMatrix::identity(n).scale_real(3.0) + small(rng, n, 0.2),
    }
}

/// `(Q, A, B, X)` with `X = I + MᴴM/n` Hermitian positive definite and
/// `Q = X + A·X⁻¹·B`, so `X` solves `X = Q − A·X⁻¹·B`.
pub fn constructed_nme(seed: u64, n: usize) -> (DenseMatrix, DenseMatrix, DenseMatrix, DenseMatrix) {
    let mut rng = rng(seed);
    let x = DenseMatrix::identity(n) + random_psd(&mut rng, n);
    let a = small(&mut rng, n, 0.3);
    let b = small(&mut rng, n, 0.3);
    let x_inv_b = lu_factor(&x).and_then(|f| f.solve(&b)).expect("positive definite");
    let q = &x + &a * x_inv_b;
    (q, a, b, x)
}

pub fn random_dare_state(rng: &mut impl Rng, n: usize) -> DareState {
    DareState {
        a: small(rng, n, 0.5),
        g: random_psd(rng, n),
        h: random_psd(rng, n),
    }
}

/// `(A, G, H)` with `A` of spectral radius about one and positive definite
/// `G`, `H`.
pub fn dare_instance(seed: u64, n: usize) -> DareState {
    let mut rng = rng(seed);
    DareState {
        a: small(&mut rng, n, 1.0),
        g: random_psd(&mut rng, n),
        h: random_psd(&mut rng, n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixkit::{hermitian_eigenvalues, relative_error};

    #[test]
    fn seeded_generators_are_reproducible() {
        assert_eq!(stein_instance(9, 4, 0.8), stein_instance(9, 4, 0.8));
        assert_ne!(stein_instance(9, 4, 0.8), stein_instance(10, 4, 0.8));
    }

    #[test]
    fn stein_instance_has_requested_radius() {
        let p = stein_instance(1, 8, 0.8);
        let prod = spectral_radius(&p.a).unwrap() * spectral_radius(&p.b).unwrap();
        assert!((prod - 0.8).abs() < 1e-12);
    }

    #[test]
    fn psd_is_positive_definite() {
        let mut r = rng(2);
        let g = random_psd(&mut r, 6);
        assert_eq!(g.hermitian_defect(), 0.0);
        assert!(hermitian_eigenvalues(&g).unwrap()[0] > 0.0);
    }

    #[test]
    fn conjugated_pencil_eigenpairs() {
        let eig = [0.3, 0.6, 1.5, 2.0];
        let inst = conjugated_pencil(4, &eig);
        let (a, b) = (&inst.state.a, &inst.state.b);
        for (j, &l) in eig.iter().enumerate() {
            let v = inst.eigenvectors.columns(j, 1);
            assert!(relative_error(&(a * &v), &(b * &v).scale_real(l)) < 1e-13);
        }
        let u = &inst.stable_basis;
        assert_eq!(u.shape(), (4, 2));
        assert!(relative_error(&DenseMatrix::identity(2), &(u.adjoint() * u)) < 1e-14);
    }

    #[test]
    fn constructed_nme_is_solved() {
        let (q, a, b, x) = constructed_nme(5, 6);
        let xinv = lu_factor(&x).unwrap().inverse();
        assert!(relative_error(&x, &(q - a * xinv * b)) < 1e-13);
    }
}
