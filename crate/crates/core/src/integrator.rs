use nalgebra::SVector;

/// One classical fourth-order Runge-Kutta step with the input held constant
/// over the step.
pub fn rk4_step<const N: usize, const M: usize, E, F>(
    rhs: F,
    state: &SVector<f64, N>,
    u: &SVector<f64, M>,
    dt: f64,
) -> Result<SVector<f64, N>, E>
where
    F: Fn(&SVector<f64, N>, &SVector<f64, M>) -> Result<SVector<f64, N>, E>,
{
    let k1 = rhs(state, u)?;
    let k2 = rhs(&(state + k1 * (0.5 * dt)), u)?;
    let k3 = rhs(&(state + k2 * (0.5 * dt)), u)?;
    let k4 = rhs(&(state + k3 * dt), u)?;
    Ok(state + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{SMatrix, Vector1, Vector2};
    use std::convert::Infallible;

    fn decay(x: &Vector1<f64>, _u: &Vector1<f64>) -> Result<Vector1<f64>, Infallible> {
        Ok(-x)
    }

    #[test]
    fn zero_rhs_leaves_state_unchanged() {
        let x = Vector2::new(1.5, -2.0);
        let y = rk4_step(|_, _: &Vector1<f64>| Ok::<_, Infallible>(Vector2::zeros()), &x, &Vector1::zeros(), 0.3).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn exponential_decay_single_step() {
        let y = rk4_step(decay, &Vector1::new(1.0), &Vector1::zeros(), 0.1).unwrap();
        assert!((y[0] - 0.904_837_5).abs() < 1e-7);
        assert!((y[0] - (-0.1f64).exp()).abs() < 1e-7);
    }

    #[test]
    fn global_error_is_fourth_order() {
        let err = |dt: f64| {
            let steps = (1.0 / dt).round() as usize;
            let mut x = Vector1::new(1.0);
            for _ in 0..steps {
                x = rk4_step(decay, &x, &Vector1::zeros(), dt).unwrap();
            }
            (x[0] - (-1.0f64).exp()).abs()
        };
        let (e1, e2, e3) = (err(0.2), err(0.1), err(0.05));
        for ratio in [e1 / e2, e2 / e3] {
            assert!((ratio - 16.0).abs() < 1.5, "ratio {ratio}");
        }
    }

    #[test]
    fn linear_system_matches_fourth_order_taylor() {
        let a = SMatrix::<f64, 2, 2>::new(-0.3, 1.2, -0.7, 0.1);
        let x0 = Vector2::new(0.4, -1.1);
        let dt = 0.25;
        let y = rk4_step(|x, _: &Vector1<f64>| Ok::<_, Infallible>(a * x), &x0, &Vector1::zeros(), dt).unwrap();
        let ah = a * dt;
        let mut taylor = SMatrix::<f64, 2, 2>::identity();
        let mut term = SMatrix::<f64, 2, 2>::identity();
        for k in 1..=4 {
            term = term * ah / k as f64;
            taylor += term;
        }
        let expected = taylor * x0;
        assert!((y - expected).amax() < 1e-15);
    }
}
