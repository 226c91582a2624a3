use super::field::SpaceTimeField;
use super::grid::DiscreteSetup;

/// Quadrature norms of a space-time field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    /// `L^2(Q_T)`
    pub l2_qt: f64,
    /// `L^2(q_T)`, weighted by the control mask
    pub l2_window: f64,
    pub linf: f64,
}

/// Trapezoidal in time, dual-cell midpoint in space.
pub fn norms(setup: &DiscreteSetup, field: &SpaceTimeField) -> Norms {
    Norms {
        l2_qt: inner(setup, field, field).sqrt(),
        l2_window: window_inner(setup, field, field).sqrt(),
        linf: field.max_abs(),
    }
}

/// `L^2(Q_T)` inner product.
pub fn inner(setup: &DiscreteSetup, a: &SpaceTimeField, b: &SpaceTimeField) -> f64 {
    let dx = setup.dx();
    (0..=setup.nt())
        .map(|n| {
            let s: f64 = a.level(n).iter().zip(b.level(n)).map(|(x, y)| x * y).sum();
            setup.time_weight(n) * dx * s
        })
        .sum()
}

/// `L^2(q_T)` inner product.
pub fn window_inner(setup: &DiscreteSetup, a: &SpaceTimeField, b: &SpaceTimeField) -> f64 {
    let dx = setup.dx();
    let mask = setup.omega_mask();
    (0..=setup.nt())
        .map(|n| {
            let s: f64 = a
                .level(n)
                .iter()
                .zip(b.level(n))
                .zip(mask)
                .map(|((x, y), m)| m * x * y)
                .sum();
            setup.time_weight(n) * dx * s
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::grid::Interval;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn setup(nx: usize, t: f64) -> DiscreteSetup {
        DiscreteSetup::new(nx, t, Interval::new(0.2, 0.8).unwrap(), 0.9).unwrap()
    }

    #[test]
    fn constant_field() {
        let s = setup(31, 2.0);
        let one = SpaceTimeField::constant(&s, 1.0);
        let nrm = norms(&s, &one);
        // the interior nodes cover 1 - dx of the string; the half cells at
        // the walls carry the Dirichlet zero
        assert!((nrm.l2_qt - (2.0 * (1.0 - s.dx())).sqrt()).abs() < 1e-12);
        assert!((nrm.l2_window - (0.6f64 * 2.0).sqrt()).abs() <= s.dx());
        assert_eq!(nrm.linf, 1.0);
    }

    #[test]
    fn sine_profile() {
        let s = setup(63, 1.0);
        let f = SpaceTimeField::from_fn(&s, |x, _| (PI * x).sin());
        let nrm = norms(&s, &f);
        assert!((nrm.l2_qt - 0.5f64.sqrt()).abs() < 10.0 * s.dx() * s.dx());
    }

    fn field_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
        let len = 16 * 23;
        (
            prop::collection::vec(-10.0f64..10.0, len),
            prop::collection::vec(-10.0f64..10.0, len),
            -5.0f64..5.0,
        )
    }

    proptest! {
        #[test]
        fn norms_are_homogeneous_and_subadditive((a, b, alpha) in field_strategy()) {
            let s = DiscreteSetup::with_steps(16, 22, 1.0, Interval::new(0.2, 0.8).unwrap()).unwrap();
            let mut fa = SpaceTimeField::zeros(&s);
            fa.values_mut().copy_from_slice(&a);
            let mut fb = SpaceTimeField::zeros(&s);
            fb.values_mut().copy_from_slice(&b);
            let na = norms(&s, &fa);
            let nb = norms(&s, &fb);
            let sum = fa.zip_map(&fb, |x, y| x + y);
            let ns = norms(&s, &sum);
            let tol = 1e-12;
            prop_assert!(ns.l2_qt <= na.l2_qt + nb.l2_qt + tol);
            prop_assert!(ns.l2_window <= na.l2_window + nb.l2_window + tol);
            prop_assert!(ns.linf <= na.linf + nb.linf + tol);
            let scaled = norms(&s, &fa.map(|x| alpha * x));
            prop_assert!((scaled.l2_qt - alpha.abs() * na.l2_qt).abs() <= 1e-12 * (1.0 + na.l2_qt));
            prop_assert!((scaled.l2_window - alpha.abs() * na.l2_window).abs() <= 1e-12 * (1.0 + na.l2_window));
            prop_assert!((scaled.linf - alpha.abs() * na.linf).abs() <= 1e-12 * (1.0 + na.linf));
        }
    }
}
