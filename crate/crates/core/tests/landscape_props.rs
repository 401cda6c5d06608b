use proptest::prelude::*;
use superaccel::landscape::{
    finite_diff_gradient, linreg_hessian_spectrum, linreg_landscape, make_linreg_dataset, parabola, synth2d,
    Landscape, DEFAULT_FD_STEP,
};
use superaccel::linalg::sup_norm;

fn gradient_matches<L: Landscape>(l: &L, point: &[f64]) -> Result<(), TestCaseError> {
    let analytic = l.try_gradient(point).unwrap();
    let fd = finite_diff_gradient(l, point, DEFAULT_FD_STEP).unwrap();
    let err = analytic.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let bound = (1e-6 * sup_norm(&analytic)).max(1e-8);
    prop_assert!(err < bound, "at {point:?}: {analytic:?} vs {fd:?}");
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn parabola_gradient(k in 0.01f64..10.0, x in -10.0f64..10.0) {
        gradient_matches(&parabola(k).unwrap(), &[x])?;
    }

    #[test]
    fn synth2d_gradient(a in -4.0f64..4.0, b in -4.0f64..4.0) {
        gradient_matches(&synth2d().unwrap(), &[a, b])?;
    }

    #[test]
    fn linreg_gradient(theta in prop::collection::vec(-1.0f64..1.0, 6)) {
        let ds = make_linreg_dataset(5, 40, 3).unwrap();
        gradient_matches(&linreg_landscape(&ds), &theta)?;
    }

    #[test]
    fn linreg_is_quadratic(theta in prop::collection::vec(-2.0f64..2.0, 6), seed in 0u64..1000) {
        let ds = make_linreg_dataset(5, 30, seed).unwrap();
        let l = linreg_landscape(&ds);
        let zero = vec![0.0; 6];
        let g0 = l.try_gradient(&zero).unwrap();
        let h = superaccel::landscape::linreg_hessian(&ds);
        let ht = h.mul_vec(&theta);
        let quad: f64 = theta.iter().zip(&ht).map(|(a, b)| a * b).sum::<f64>() * 0.5;
        let lin: f64 = g0.iter().zip(&theta).map(|(a, b)| a * b).sum();
        let lhs = l.value(&theta);
        let rest = lhs - l.value(&zero) - lin - quad;
        let scale = lhs.abs().max(l.value(&zero).abs()).max(quad.abs());
        prop_assert!(rest.abs() <= 1e-10 * scale, "{rest} vs scale {scale}");
    }

    #[test]
    fn spectrum_eigenpairs(nf in 1usize..12, seed in 0u64..1000) {
        let ds = make_linreg_dataset(nf, 50, seed).unwrap();
        let h = superaccel::landscape::linreg_hessian(&ds);
        let report = linreg_hessian_spectrum(&ds).unwrap();
        for (lambda, v) in report.eigenvalues.iter().zip(&report.eigenvectors) {
            let hv = h.mul_vec(v);
            let res: f64 = hv.iter().zip(v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(res < 1e-9, "residual {res}");
        }
        prop_assert!(report.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn synth2d_coercive() {
    let l = synth2d().unwrap();
    for j in 0..16 {
        let phi = j as f64 * std::f64::consts::PI / 8.0;
        let near = l.value(&[10.0 * phi.cos(), 10.0 * phi.sin()]);
        let far = l.value(&[1e3 * phi.cos(), 1e3 * phi.sin()]);
        assert!(far > near && far > 1e12, "direction {j}: {far}");
    }
    let min = l.minimum_hint().unwrap();
    assert!(l.value(min) >= 0.0);
}
