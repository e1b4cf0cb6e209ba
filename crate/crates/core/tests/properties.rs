use std::f64::consts::PI;

use cavity_ctl::prelude::*;
use cavity_ctl::scatter::stack_matrix;
use proptest::prelude::*;

fn layer() -> impl Strategy<Value = Layer> {
    (0.01f64..3.0, 1.0f64..9.0, 0.5f64..2.0).prop_map(|(d, eps, mu)| Layer::new(d, eps, mu).unwrap())
}

fn stack() -> impl Strategy<Value = LayerStack> {
    (-5.0f64..5.0, prop::collection::vec(layer(), 1..6)).prop_map(|(o, l)| LayerStack::new(o, l).unwrap())
}

fn envelope(t_max: f64) -> SpectralEnvelope {
    let grid = make_frequency_grid(1.0, 0.25, 257, t_max).unwrap();
    smoothed_rect_spectrum(&grid, 1.0, 60.0 / (2.0 * PI), 0.25).unwrap()
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn flux_and_reciprocity(s in stack(), omega in 0.3f64..2.0) {
        let a = stack_scattering(&s, omega).unwrap();
        prop_assert!((a.reflectance() + a.transmittance() - 1.0).abs() < 1e-10);
        prop_assert!(close(a.t_left, a.t_right, 1e-10));
        prop_assert!((a.r_left.norm() - a.r_right.norm()).abs() < 1e-10);
    }

    #[test]
    fn transfer_matrices_compose(l in prop::collection::vec(layer(), 2..6), cut in 1usize..5, omega in 0.3f64..2.0) {
        let whole = LayerStack::new(0.0, l.clone()).unwrap();
        let cut = cut.min(l.len() - 1);
        let left = whole.substack(0..cut);
        let right = whole.substack(cut..l.len());
        // Substacks keep their absolute positions, so the matrices chain directly.
        let m = stack_matrix(&whole, omega);
        let p = stack_matrix(&right, omega) * stack_matrix(&left, omega);
        let scale = m.m22.norm().max(1.0);
        for (a, b) in [(m.m11, p.m11), (m.m12, p.m12), (m.m21, p.m21), (m.m22, p.m22)] {
            prop_assert!(close(a, b, 1e-10 * scale), "{a} vs {b}");
        }
    }

    #[test]
    fn splitting_a_layer_is_invisible(d in 0.05f64..3.0, n in 1.0f64..4.0, f in 0.1f64..0.9, omega in 0.3f64..2.0) {
        let one = LayerStack::new(0.0, vec![Layer::dielectric(d, n).unwrap()]).unwrap();
        let two = LayerStack::new(0.0, vec![Layer::dielectric(f * d, n).unwrap(), Layer::dielectric((1.0 - f) * d, n).unwrap()]).unwrap();
        let a = stack_scattering(&one, omega).unwrap();
        let b = stack_scattering(&two, omega).unwrap();
        prop_assert!(close(a.r_left, b.r_left, 1e-12));
        prop_assert!(close(a.t_left, b.t_left, 1e-12));
    }

    #[test]
    fn superposition_is_linear(re in -2.0f64..2.0, im in -2.0f64..2.0, c in -3.0f64..3.0, x in 20.0f64..60.0, t in 0.0f64..40.0) {
        let st = LayerStack::new(30.0, vec![Layer::dielectric(0.1, 2.5).unwrap(), Layer::dielectric(5.0, 1.0).unwrap(), Layer::dielectric(0.1, 2.5).unwrap()]).unwrap();
        let lead = PulseInjection::lead(envelope(80.0), 10.0);
        let second = lead.with_transform(Complex64::new(re, im), 12.0);
        let scaled = lead.with_transform(Complex64::new(re, im) * c, 12.0);
        let s1 = Synthesizer::new(&st, &[lead.clone(), second], Normalization::Lead).unwrap();
        let s2 = Synthesizer::new(&st, &[lead.clone(), scaled], Normalization::Lead).unwrap();
        let s0 = Synthesizer::new(&st, &[lead], Normalization::Lead).unwrap();
        let base = s0.value(x, t);
        let lhs = s2.value(x, t) - base;
        let rhs = (s1.value(x, t) - base) * c;
        prop_assert!(close(lhs, rhs, 1e-12 * (1.0 + rhs.norm())), "{lhs} vs {rhs}");
    }

    #[test]
    fn free_space_translation(x in -10.0f64..10.0, t in 0.0f64..60.0) {
        let lead = PulseInjection::lead(envelope(80.0), 0.0);
        let s = Synthesizer::new(&LayerStack::vacuum(), &[lead], Normalization::Lead).unwrap();
        prop_assert!(close(s.value(x + t, t), s.value(x, 0.0), 1e-9));
    }

    #[test]
    fn delay_is_a_time_shift(d in 0.0f64..30.0, x in -10.0f64..30.0, t in 0.0f64..40.0) {
        let lead = PulseInjection::lead(envelope(80.0), 0.0);
        let late = lead.with_transform(Complex64::new(1.0, 0.0), d);
        let a = Synthesizer::new(&LayerStack::vacuum(), &[lead], Normalization::Lead).unwrap();
        let b = Synthesizer::new(&LayerStack::vacuum(), &[late], Normalization::Lead).unwrap();
        prop_assert!(close(b.value(x, t + d), a.value(x, t), 1e-10));
    }

    #[test]
    fn distance_is_bounded(p11 in 0.0f64..1.0, p22 in 0.0f64..1.0, frac in 0.0f64..=1.0, phase in 0.0f64..(2.0 * PI)) {
        let p12 = Complex64::from_polar(frac * (p11 * p22).sqrt(), phase);
        let p = OverlapMatrix { t: 0.0, p11, p22, p12 };
        prop_assert!(p.schwarz_gap() >= -1e-15);
        let d = hs_distance(&p).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn coarser_sampling_never_adds_backflow(d in prop::collection::vec(0.0f64..1.0, 3..200)) {
        let region = RegionSpec::new("A", 0.0, 1.0).unwrap();
        let series = |d: Vec<f64>| DistanceSeries {
            t_grid: (0..d.len()).map(|i| i as f64).collect(),
            overlaps: Vec::new(),
            d,
            region: region.clone(),
            tau_m: None,
        };
        let fine = nonmarkov_content(&series(d.clone())).unwrap();
        let coarse = nonmarkov_content(&series(d.iter().step_by(2).cloned().collect())).unwrap();
        prop_assert!(coarse.total <= fine.total + 1e-15);
        prop_assert!(fine.id.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn geometric_sum_matches_series(ar in -2.0f64..2.0, ai in -2.0f64..2.0, xr in -0.99f64..0.99, n in 1u32..40) {
        let a = Complex64::new(ar, ai);
        let x = Complex64::new(xr, 0.0);
        let seq = vec![a; n as usize];
        let g = geometric_sum(a, x, n);
        prop_assert!((g - weighted_sum(&seq, x)).abs() <= 1e-9 * (1.0 + g));
    }
}

#[test]
fn energy_is_conserved_through_a_resonator() {
    let st = LayerStack::new(30.0, vec![Layer::dielectric(0.1, 2.5).unwrap(), Layer::dielectric(7.5, 1.0).unwrap(), Layer::dielectric(0.1, 2.5).unwrap()]).unwrap();
    let lead = PulseInjection::lead(envelope(110.0), 10.0);
    let s = Synthesizer::new(&st, &[lead], Normalization::Lead).unwrap();
    let whole = RegionSpec::new("all", -150.0, 200.0).unwrap();
    let nodes = cavity_ctl::media::sample_positions(&st, whole.x_lo, whole.x_hi, 24.0);
    let tg = TimeGrid::new(0.0, 10.0, 11).unwrap();
    let e = s.region_energy_series(&nodes, &whole, &tg).unwrap();
    for (i, v) in e.iter().enumerate() {
        // Energy density n^2|Ψ|^2 inside the mirrors is not counted, so allow their share.
        assert!((v - 1.0).abs() < 2e-2, "t = {}: {v}", tg.at(i));
    }
}

#[test]
fn region_energy_is_additive() {
    let lead = PulseInjection::lead(envelope(80.0), 0.0);
    let x: Vec<f64> = (0..=800).map(|i| -20.0 + 0.05 * i as f64).collect();
    let tg = TimeGrid::new(0.0, 5.0, 5).unwrap();
    let field = assemble_field(&LayerStack::vacuum(), &[lead], &x, &tg).unwrap();
    let all = RegionSpec::new("all", -20.0, 20.0).unwrap();
    let left = RegionSpec::new("l", -20.0, 1.5).unwrap();
    let right = RegionSpec::new("r", 1.5, 20.0).unwrap();
    for i in 0..tg.len {
        let t = tg.at(i);
        let sum = region_energy(&field, &left, t).unwrap() + region_energy(&field, &right, t).unwrap();
        assert!((region_energy(&field, &all, t).unwrap() - sum).abs() < 1e-12);
    }
}
