//! The fixed bumps: the odd dyadic piece `ψ` of `1/t`, the plateau cutoff `χ`
//! and the frequency bump `φ̂`, all built from one mollified step.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BumpError {
    #[error("cutoff index s must be >= 1, got {0}")]
    ShellIndex(i32),
}

/// Smoothness guaranteed by the construction; `u32::MAX` stands for C^∞.
pub const SMOOTHNESS_ORDER: u32 = u32::MAX;

/// Largest value of `|ψ|` allowed by the construction (`1/|t| ≤ 4` on the support).
pub const PSI_SUP_BOUND: f64 = 4.0;

#[inline]
fn h(v: f64) -> f64 {
    if v > 0.0 {
        (-1.0 / v).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 for `v ≤ 0`, 1 for `v ≥ 1`, C^∞ in between.
#[inline]
pub fn smooth_step(v: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else if v >= 1.0 {
        1.0
    } else {
        let a = h(v);
        a / (a + h(1.0 - v))
    }
}

/// Even cutoff, 1 on `|t| ≤ 1/2` and 0 on `|t| ≥ 1`.
#[inline]
fn eta(t: f64) -> f64 {
    smooth_step(2.0 * (1.0 - t.abs()))
}

/// `ρ(t) = η(t) − η(2t)`, even, supported in `1/4 ≤ |t| ≤ 1`.
#[inline]
pub fn rho(t: f64) -> f64 {
    eta(t) - eta(2.0 * t)
}

/// `ψ(t) = ρ(t)/t`.
#[inline]
pub fn psi(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        rho(t) / t
    }
}

/// `ψ_k(t) = 2^{-k} ψ(2^{-k} t)`, supported in `2^{k-2} ≤ |t| ≤ 2^k`.
#[inline]
pub fn psi_k(k: i32, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    rho(t * 2f64.powi(-k)) / t
}

/// `χ`: even, 1 on `|t| ≤ 1/10`, 0 on `|t| ≥ 1/5`.
#[inline]
pub fn chi(t: f64) -> f64 {
    smooth_step((0.2 - t.abs()) * 10.0)
}

/// `χ_s(t) = χ(10^s t)`.
pub fn chi_s(s: i32, t: f64) -> Result<f64, BumpError> {
    if s < 1 {
        return Err(BumpError::ShellIndex(s));
    }
    Ok(chi(t * 10f64.powi(s)))
}

/// Frequency bump with `1_{[-1/8,1/8]} ≤ φ̂ ≤ 1_{[-1/4,1/4]}`.
#[inline]
pub fn phi_hat(xi: f64) -> f64 {
    smooth_step((0.25 - xi.abs()) * 8.0)
}

/// The three bumps as one value, for callers that want to pass the family around.
#[derive(Debug, Clone, Copy, Default)]
pub struct BumpFamily;

impl BumpFamily {
    pub fn psi(&self, t: f64) -> f64 {
        psi(t)
    }
    pub fn chi(&self, t: f64) -> f64 {
        chi(t)
    }
    pub fn phi_hat(&self, xi: f64) -> f64 {
        phi_hat(xi)
    }
    pub fn smoothness_order(&self) -> u32 {
        SMOOTHNESS_ORDER
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn psi_k_examples() {
        assert_eq!(psi_k(0, 0.1), 0.0);
        assert_eq!(psi_k(3, -5.0), -psi_k(3, 5.0));
        let v = psi_k(0, 0.6);
        assert!((v - (1.0 / 0.6 - psi_k(1, 0.6))).abs() <= 1e-12);
        assert!(v != 0.0 && psi_k(1, 0.6) != 0.0);
    }

    #[test]
    fn chi_s_examples() {
        assert_eq!(chi_s(1, 0.0).unwrap(), 1.0);
        assert_eq!(chi_s(2, 0.01).unwrap(), 0.0);
        let v = chi_s(1, 0.015).unwrap();
        assert!(v > 0.0 && v < 1.0);
        assert_eq!(chi_s(0, 0.0), Err(BumpError::ShellIndex(0)));
    }

    #[test]
    fn phi_hat_examples() {
        assert_eq!(phi_hat(0.0), 1.0);
        assert_eq!(phi_hat(0.3), 0.0);
        let v = phi_hat(3.0 / 16.0);
        assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn supports_and_sandwiches_on_dense_grid() {
        let n = 200_000;
        for i in 0..=n {
            let t = -1.5 + 3.0 * i as f64 / n as f64;
            let a = t.abs();
            let p = psi(t);
            if a < 0.25 || a > 1.0 {
                assert_eq!(p, 0.0, "psi({t})");
            }
            assert!(p.abs() <= PSI_SUP_BOUND);
            let c = chi(t);
            assert!((0.0..=1.0).contains(&c));
            if a <= 0.1 {
                assert_eq!(c, 1.0);
            }
            if a >= 0.2 {
                assert_eq!(c, 0.0);
            }
            let f = phi_hat(t);
            assert!((0.0..=1.0).contains(&f));
            if a <= 0.125 {
                assert_eq!(f, 1.0);
            }
            if a >= 0.25 {
                assert_eq!(f, 0.0);
            }
        }
    }

    #[test]
    fn dyadic_resolution_is_exact() {
        for big_k in 2..=30 {
            let top = 2f64.powi(big_k - 2);
            let mut t = 1.0;
            while t <= top {
                for &x in &[t, -t, t * 1.37, t * 1.999] {
                    if x.abs() > top {
                        continue;
                    }
                    let s: f64 = (0..=big_k).map(|k| psi_k(k, x)).sum();
                    assert!((s - 1.0 / x).abs() <= 1e-12, "K={big_k} t={x}");
                }
                t *= 2.0;
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn symmetries(t in -3.0f64..3.0, k in -6i32..20) {
            prop_assert!((psi(-t) + psi(t)).abs() <= 1e-14);
            prop_assert!((psi_k(k, -t) + psi_k(k, t)).abs() <= 1e-14);
            prop_assert!((chi(-t) - chi(t)).abs() <= 1e-14);
            prop_assert!((phi_hat(-t) - phi_hat(t)).abs() <= 1e-14);
        }

        #[test]
        fn psi_k_support(k in -4i32..24, u in -1.5f64..1.5) {
            let t = u * 2f64.powi(k);
            let v = psi_k(k, t);
            let lo = 2f64.powi(k - 2);
            let hi = 2f64.powi(k);
            if t.abs() < lo || t.abs() > hi {
                prop_assert_eq!(v, 0.0);
            }
        }
    }
}
