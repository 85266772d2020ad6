//! Random inputs for property checks: Hermitian matrices in the open
//! Gelfand-Tsetlin cone and random torus elements.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::gt::{a_modulus_sq, rebuild, GtCoordinates, SpectrumTable, TorusElement};
use crate::linalg::{c64, CMatrix, HermitianMatrix};

/// Samples are rejected when the cone gap is below `GAP_FACTOR (1 + ||A||)`.
pub const GAP_FACTOR: f64 = 0.05;
const MAX_TRIES: usize = 100_000;

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Level by level, so most rejections stop early.
fn accept(a: &HermitianMatrix) -> bool {
    let n = a.dim();
    let tol = GAP_FACTOR * (1.0 + a.norm());
    let mut lo = a.leading(1).eigenvalues_desc();
    for k in 2..=n {
        let hi = a.leading(k).eigenvalues_desc();
        for i in 0..k - 1 {
            if hi[i] - lo[i] < tol || lo[i] - hi[i + 1] < tol {
                return false;
            }
        }
        lo = hi;
    }
    true
}

fn rejection<R: Rng + ?Sized>(rng: &mut R, mut draw: impl FnMut(&mut R) -> HermitianMatrix) -> HermitianMatrix {
    for _ in 0..MAX_TRIES {
        let a = draw(rng);
        if accept(&a) {
            return a;
        }
    }
    panic!("no sample in the open cone after {MAX_TRIES} draws");
}

/// `(G + G^dagger) / 2` with `E|G_ij|^2 = 1`.
pub fn gue<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g = CMatrix::from_fn(n, n, |_, _| c64(s * normal(rng), s * normal(rng)));
    HermitianMatrix::symmetrized(g)
}

/// A GUE draw in the open cone.
pub fn herm0<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix {
    rejection(rng, |r| gue(r, n))
}

/// Real symmetric sample in the open cone.
///
/// Rejection on `(G + G^T) / 2` almost never succeeds for `n >= 6`, so only the
/// top spectrum comes from such a draw. Lower levels are drawn uniformly in
/// their interlacing intervals, keeping the same margin, and the matrix is
/// rebuilt with every `a^(k)_i` real of random sign.
pub fn sym0<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix {
    for _ in 0..MAX_TRIES {
        let g = CMatrix::from_fn(n, n, |_, _| c64(normal(rng), 0.0));
        let top = HermitianMatrix::symmetrized(g).eigenvalues_desc();
        let norm = top.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let tol = GAP_FACTOR * (1.0 + norm);
        if top.windows(2).any(|w| w[0] - w[1] <= 2.0 * tol) {
            continue;
        }
        let mut rows = vec![top];
        for k in (1..n).rev() {
            let hi = &rows[0];
            let lo: Vec<f64> = (0..k).map(|i| rng.random_range(hi[i + 1] + tol..hi[i] - tol)).collect();
            rows.insert(0, lo);
        }
        let t = SpectrumTable::new(rows).expect("interlacing by construction");
        let moduli: Vec<Vec<f64>> = (1..n)
            .map(|k| (0..k).map(|i| a_modulus_sq(&t, k, i + 1).sqrt()).collect())
            .collect();
        let angles = moduli
            .iter()
            .map(|m| m.iter().map(|_| if rng.random_bool(0.5) { 0.0 } else { PI }).collect())
            .collect();
        let coords = GtCoordinates {
            actions: t,
            angles,
            moduli,
        };
        let a = HermitianMatrix::symmetrized(rebuild(&coords).expect("open cone").matrix().map(|z| c64(z.re, 0.0)));
        if accept(&a) {
            return a;
        }
    }
    panic!("no real symmetric sample after {MAX_TRIES} draws");
}

/// A cone sample rescaled to spectral norm uniform in `[cap / 2, cap]`.
pub fn herm0_capped<R: Rng + ?Sized>(rng: &mut R, n: usize, cap: f64) -> HermitianMatrix {
    rejection(rng, |r| {
        let a = gue(r, n);
        let target = cap * r.random_range(0.5..=1.0);
        HermitianMatrix::symmetrized(a.matrix() * c64(target / a.norm().max(f64::MIN_POSITIVE), 0.0))
    })
}

/// Angles uniform on `[0, 2 pi)` at every level.
pub fn torus<R: Rng + ?Sized>(rng: &mut R, n: usize) -> TorusElement {
    let levels = (1..n)
        .map(|k| (0..k).map(|_| rng.random_range(0.0..2.0 * PI)).collect())
        .collect();
    TorusElement::new(levels).expect("levels have the right lengths")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn acceptance_matches_cone_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let a = gue(&mut rng, 3);
            let gap = crate::gt::gt_map(&a).cone_gap().0;
            assert_eq!(accept(&a), gap >= GAP_FACTOR * (1.0 + a.norm()));
        }
    }

    #[test]
    fn samples_are_in_the_cone() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=6 {
            let a = herm0(&mut rng, n);
            assert!(accept(&a));
            let s = sym0(&mut rng, n);
            assert!(s.is_real(0.0));
            let c = herm0_capped(&mut rng, n, 1.5);
            assert!(c.norm() <= 1.5 + 1e-12);
        }
    }

    #[test]
    fn seeded_draws_repeat() {
        let a = herm0(&mut ChaCha8Rng::seed_from_u64(9), 4);
        let b = herm0(&mut ChaCha8Rng::seed_from_u64(9), 4);
        assert_eq!(a, b);
    }
}
