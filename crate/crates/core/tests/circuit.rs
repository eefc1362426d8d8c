use metasurf::ris::{
    reflection_coefficient, reflection_coefficient_tractable, reflection_derivative,
};
use metasurf::scenario::RisCircuitParams;
use num_complex::Complex64;

const GOLDEN: &str = include_str!("data/reflection_golden.csv");

fn rows() -> Vec<[f64; 6]> {
    GOLDEN
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            [v[0], v[1], v[2], v[3], v[4], v[5]]
        })
        .collect()
}

#[test]
fn coefficient_matches_reference_table() {
    let p = RisCircuitParams::paper_default();
    let rows = rows();
    assert_eq!(rows.len(), 165);
    for [f, c, re, im, _, _] in rows {
        let want = Complex64::new(re, im);
        for got in [
            reflection_coefficient(f, c, &p).unwrap(),
            reflection_coefficient_tractable(f, c, &p).unwrap(),
        ] {
            assert!((got - want).norm() < 1e-12, "f={f} c={c}: {got} vs {want}");
        }
    }
}

#[test]
fn derivative_matches_reference_table() {
    let p = RisCircuitParams::paper_default();
    for [f, c, _, _, dre, dim] in rows() {
        let want = Complex64::new(dre, dim);
        let got = reflection_derivative(f, c, &p).unwrap();
        assert!(
            (got - want).norm() <= 1e-9 * want.norm(),
            "f={f} c={c}: {got} vs {want}"
        );
    }
}

#[test]
fn lossless_element_has_unit_modulus() {
    let p = RisCircuitParams {
        r: 0.0,
        ..RisCircuitParams::paper_default()
    };
    for [f, c, ..] in rows() {
        let phi = reflection_coefficient_tractable(f, c, &p).unwrap();
        assert!((phi.norm() - 1.0).abs() < 1e-12);
    }
}
