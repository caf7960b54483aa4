use super::DensityMatrix;
use crate::{Error, Result};

/// Single-qubit amplitude damping with decay probability `p`, applied to
/// every qubit independently.
///
/// Kraus operators K0 = diag(1, √(1−p)), K1 = √p |0⟩⟨1|.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DampingChannel {
    p: f64,
}

impl DampingChannel {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!(
                "damping probability {p} outside [0, 1]"
            )));
        }
        Ok(DampingChannel { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Apply the channel to qubit `q` only.
    pub fn apply_to_qubit(&self, rho: &mut DensityMatrix, q: usize) {
        let n = rho.n_qubits();
        let dim = rho.dim();
        let stride = 1usize << (n - 1 - q);
        let keep = (1.0 - self.p).sqrt();
        let p = self.p;
        let e = rho.entries_mut();
        for r0 in (0..dim).filter(|i| i & stride == 0) {
            let r1 = r0 | stride;
            for c0 in (0..dim).filter(|i| i & stride == 0) {
                let c1 = c0 | stride;
                let excited = e[r1 * dim + c1];
                e[r0 * dim + c0] += excited * p;
                e[r1 * dim + c1] = excited * (1.0 - p);
                e[r0 * dim + c1] *= keep;
                e[r1 * dim + c0] *= keep;
            }
        }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        let mut out = rho.clone();
        for q in 0..rho.n_qubits() {
            self.apply_to_qubit(&mut out, q);
        }
        out
    }
}

/// ρ ↦ (E_AD)^{⊗n}(ρ).
pub fn apply_amplitude_damping(rho: &DensityMatrix, channel: DampingChannel) -> DensityMatrix {
    channel.apply(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{build_ghz, StateVector, C64};

    type M2 = [[C64; 2]; 2];

    fn mul(a: &M2, b: &M2) -> M2 {
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }

    fn dag(a: &M2) -> M2 {
        [
            [a[0][0].conj(), a[1][0].conj()],
            [a[0][1].conj(), a[1][1].conj()],
        ]
    }

    // Oracle: explicit K0 ρ K0† + K1 ρ K1† with 2x2 matrices.
    fn kraus_sum(rho: &M2, p: f64) -> M2 {
        let z = C64::new(0.0, 0.0);
        let k0 = [
            [C64::new(1.0, 0.0), z],
            [z, C64::new((1.0 - p).sqrt(), 0.0)],
        ];
        let k1 = [[z, C64::new(p.sqrt(), 0.0)], [z, z]];
        let a = mul(&mul(&k0, rho), &dag(&k0));
        let b = mul(&mul(&k1, rho), &dag(&k1));
        [
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ]
    }

    #[test]
    fn excited_state_decays() {
        let rho = DensityMatrix::from_pure(&StateVector::basis_state(1, 1).unwrap());
        let out = apply_amplitude_damping(&rho, DampingChannel::new(0.05).unwrap());
        let one = [
            [C64::new(0.0, 0.0); 2],
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        ];
        let oracle = kraus_sum(&one, 0.05);
        for r in 0..2 {
            for c in 0..2 {
                assert!((out.get(r, c) - oracle[r][c]).norm() < 1e-15);
            }
        }
        assert!((out.get(0, 0).re - 0.05).abs() < 1e-12);
        assert!((out.get(1, 1).re - 0.95).abs() < 1e-12);
    }

    #[test]
    fn coherent_single_qubit_matches_kraus_oracle() {
        let s =
            StateVector::from_amplitudes(1, vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let rho = DensityMatrix::from_pure(&s);
        let m = [
            [rho.get(0, 0), rho.get(0, 1)],
            [rho.get(1, 0), rho.get(1, 1)],
        ];
        for p in [0.0, 0.05, 0.3, 1.0] {
            let out = DampingChannel::new(p).unwrap().apply(&rho);
            let oracle = kraus_sum(&m, p);
            for r in 0..2 {
                for c in 0..2 {
                    assert!((out.get(r, c) - oracle[r][c]).norm() < 1e-15, "p={p}");
                }
            }
        }
    }

    #[test]
    fn ground_state_is_fixed() {
        let rho = DensityMatrix::from_pure(&StateVector::basis_state(1, 0).unwrap());
        for p in [0.0, 0.3, 1.0] {
            assert_eq!(DampingChannel::new(p).unwrap().apply(&rho), rho);
        }
    }

    #[test]
    fn damped_ghz6_is_a_mixed_density_matrix() {
        let rho = DensityMatrix::from_pure(&build_ghz(6, None).unwrap());
        let out = DampingChannel::new(0.05).unwrap().apply(&rho);
        assert!((out.trace().re - 1.0).abs() < 1e-10);
        assert!(out.purity() < 1.0 - 1e-3);
        assert_eq!(out.hermiticity_error(), 0.0);
        out.validate().unwrap();
    }

    #[test]
    fn zero_damping_is_identity() {
        let rho = DensityMatrix::from_pure(&build_ghz(4, Some(&"XYZX".parse().unwrap())).unwrap());
        let out = DampingChannel::new(0.0).unwrap().apply(&rho);
        for (a, b) in out.entries().iter().zip(rho.entries()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_out_of_range_probability() {
        assert!(DampingChannel::new(-0.1).is_err());
        assert!(DampingChannel::new(1.5).is_err());
    }
}
