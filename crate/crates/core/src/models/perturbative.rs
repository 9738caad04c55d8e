//! First-order predictions and the degenerate-subspace screen.

use nalgebra::{Complex, ComplexField, DMatrix};

use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::qcore::{Eigensystem, QuantumState};
use crate::scalar::Real;
use crate::tolerance::ToleranceConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbativePrediction {
    /// Expected pointer shift, `pointer_response · ⟨ν|Q_S|ν⟩`.
    pub shift: f64,
    /// `c` such that the system-orthogonal part of the first-order state
    /// correction has norm `c/T`.
    pub correction_coefficient: f64,
    /// Index of the initial system level in ascending `H_S` order.
    pub system_level: usize,
}

/// Eigenbasis of `H_A` in which `Q_A` is diagonal inside each degenerate cluster.
fn adapted_apparatus_basis<R: Real>(s: &Scenario<R>, gap: f64) -> Result<(Vec<f64>, DMatrix<Complex<R>>)> {
    let eig = Eigensystem::of_matrix(s.h_apparatus.matrix())?;
    let values: Vec<f64> = eig.values.iter().map(|v| v.as_f64()).collect();
    let mut vectors = eig.vectors;
    let q = s.q_apparatus.matrix();
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end] - values[end - 1] < gap {
            end += 1;
        }
        if end - start > 1 {
            let block = vectors.columns(start, end - start).into_owned();
            let restricted = block.adjoint() * q * &block;
            let local = Eigensystem::of_matrix(&restricted)?;
            let rotated = &block * &local.vectors;
            vectors.columns_mut(start, end - start).copy_from(&rotated);
        }
        start = end;
    }
    Ok((values, vectors))
}

pub fn perturbative_prediction<R: Real>(s: &Scenario<R>) -> Result<PerturbativePrediction> {
    perturbative_prediction_with(s, &ToleranceConfig::default())
}

/// Shift and first-order correction coefficient for a non-degenerate
/// eigenstate input; fails with [`Error::Degeneracy`] when a degenerate
/// pair of product levels is connected by `Q_A Q_S`.
pub fn perturbative_prediction_with<R: Real>(s: &Scenario<R>, tol: &ToleranceConfig) -> Result<PerturbativePrediction> {
    let sys = Eigensystem::of_matrix(s.h_system.matrix())?;
    let es: Vec<f64> = sys.values.iter().map(|v| v.as_f64()).collect();
    let app_eig = Eigensystem::of_matrix(s.h_apparatus.matrix())?;
    let range = (app_eig.values.last().unwrap().as_f64() - app_eig.values[0].as_f64())
        + (es.last().unwrap() - es[0]);
    let gap = if range > 0.0 { tol.gap_relative * range } else { 1e-12 };

    // which H_S level is the initial system state
    let phi = s.system_initial.amplitudes();
    let overlaps: Vec<f64> = (0..sys.len()).map(|k| sys.vectors.column(k).dotc(phi).modulus_squared().as_f64()).collect();
    let (nu, best) = overlaps
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    if 1.0 - best > tol.eigenstate {
        return Err(Error::NotEigenstate(1.0 - best));
    }
    if let Some(&(other, _)) = es
        .iter()
        .enumerate()
        .filter(|&(k, e)| k != nu && (e - es[nu]).abs() < gap)
        .collect::<Vec<_>>()
        .first()
    {
        return Err(Error::Degeneracy {
            gap: (es[other] - es[nu]).abs(),
            element: f64::NAN,
            system_from: nu,
            system_to: other,
            apparatus_from: 0,
            apparatus_to: 0,
        });
    }

    let q_s = s.q_system.matrix();
    let vs = &sys.vectors;
    let qs_eig = vs.adjoint() * q_s * vs;
    let nu_state = QuantumState::new(s.system_space().clone(), vs.column(nu).into_owned())?;
    let shift = s.pointer_response * s.q_system.expectation(&nu_state)?;

    let (ea, va) = adapted_apparatus_basis(s, gap)?;
    let qa_eig = va.adjoint() * s.q_apparatus.matrix() * &va;
    let d = va.adjoint() * s.apparatus_initial.amplitudes();
    let weights: Vec<f64> = d.iter().map(|z| z.modulus_squared().as_f64()).collect();

    let mut c2 = 0.0;
    for (b, &wb) in weights.iter().enumerate() {
        if wb < 1e-14 {
            continue;
        }
        let e_nb = es[nu] + ea[b];
        for mu in 0..es.len() {
            let s_el = qs_eig[(mu, nu)].modulus().as_f64();
            for (a, &e_a) in ea.iter().enumerate() {
                if mu == nu && a == b {
                    continue;
                }
                let element = s_el * qa_eig[(a, b)].modulus().as_f64();
                let de = e_nb - (es[mu] + e_a);
                if de.abs() < gap {
                    if element > tol.matrix_element {
                        return Err(Error::Degeneracy {
                            gap: de.abs(),
                            element,
                            system_from: nu,
                            system_to: mu,
                            apparatus_from: b,
                            apparatus_to: a,
                        });
                    }
                    continue;
                }
                if mu != nu {
                    c2 += wb * (element / de).powi(2);
                }
            }
        }
    }
    Ok(PerturbativePrediction { shift, correction_coefficient: c2.sqrt(), system_level: nu })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        build_aav_spin, build_degenerate_oscillators, build_degenerate_spin_oscillator, build_momentum_coupled,
        OscillatorParams, PacketParams, SpinFieldParams,
    };
    use std::f64::consts::FRAC_PI_3;

    fn packet() -> PacketParams {
        PacketParams { width: 1.0, center: 0.0, momentum: 0.0, extent: 20.0, points: 64 }
    }

    #[test]
    fn aav_shift_and_coefficient() {
        let p = SpinFieldParams::in_plane(1.0, 1.0, 0.1, FRAC_PI_3);
        let s = build_aav_spin::<f64>(&p, &packet()).unwrap();
        let pred = perturbative_prediction(&s).unwrap();
        assert!((pred.shift - 0.05).abs() < 1e-12);
        // c² = ⟨x²⟩ (μB_i sin θ)² / (2μB₀)²
        let x = s.q_apparatus.expectation(&s.apparatus_initial).unwrap();
        assert!(x.abs() < 1e-12);
        let x2 = s.q_apparatus.matrix() * s.q_apparatus.matrix();
        let x2 = s.apparatus_initial.amplitudes().dotc(&(x2 * s.apparatus_initial.amplitudes())).re;
        let want = x2 * (0.1 * FRAC_PI_3.sin()).powi(2) / 4.0;
        assert!((pred.correction_coefficient.powi(2) - want).abs() < 1e-12);
    }

    #[test]
    fn commuting_observable_gives_eigenvalue() {
        // Q_S ∥ H_S: n = ñ, the shift is the eigenvalue of Q_S with the response sign
        let p = SpinFieldParams::in_plane(1.0, 1.0, 0.3, 0.0);
        let s = build_aav_spin::<f64>(&p, &packet()).unwrap();
        let pred = perturbative_prediction(&s).unwrap();
        assert_eq!(pred.shift, 0.3);
        assert!(pred.correction_coefficient < 1e-14);
    }

    #[test]
    fn momentum_coupled_passes_screen() {
        let p = SpinFieldParams::in_plane(1.0, 1.0, 0.1, 0.7);
        let s = build_momentum_coupled::<f64>(&p, &packet(), 1.0).unwrap();
        let pred = perturbative_prediction(&s).unwrap();
        assert!((pred.shift - 0.1 * 0.7f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_oscillators_fail_screen() {
        let p = OscillatorParams { mass: 1.0, frequency: 1.0, fock_dim: 8 };
        let s = build_degenerate_oscillators::<f64>(&p, &p, 1).unwrap();
        match perturbative_prediction(&s) {
            Err(Error::Degeneracy { element, .. }) => assert!((element - 0.5).abs() < 1e-12),
            other => panic!("expected degeneracy error, got {other:?}"),
        }
    }

    #[test]
    fn spin_oscillator_screen_depends_on_direction() {
        let p = OscillatorParams { mass: 1.0, frequency: 1.0, fock_dim: 8 };
        let along_z = build_degenerate_spin_oscillator::<f64>(&p, 0.5, [0.0, 0.0, 1.0]).unwrap();
        assert!(perturbative_prediction(&along_z).is_ok());
        let along_x = build_degenerate_spin_oscillator::<f64>(&p, 0.5, [1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(perturbative_prediction(&along_x), Err(Error::Degeneracy { .. })));
    }
}
