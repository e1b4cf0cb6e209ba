//! Single quarter-wave mirror and the resonator built from two of them:
//! numeric transmission against the closed forms.

use cavity_ctl::prelude::*;

fn main() -> Result<()> {
    let spec = FabryPerotSpec { n_r: 2.5, cavity_length: 15.0, left_length: 160.0, right_length: 120.0 };
    let l_m = spec.mirror_thickness();
    let mirror = LayerStack::new(0.0, vec![Layer::dielectric(l_m, spec.n_r)?])?;
    let resonator = build_fabry_perot(&spec)?;
    let res = resonance_constants(&spec)?;

    println!("# omega  |t_mirror|^2  analytic  |t_total|^2  lorentzian");
    for i in 0..=40 {
        let omega = 0.99 + 0.0005 * i as f64;
        let tm = stack_scattering(&mirror, omega)?.transmittance();
        let tt = stack_scattering(&resonator, omega)?.transmittance();
        let g = res.linewidth();
        let lz = lorentzian_spectrum(omega, 1.0, g, 0.25 * g * g);
        println!("{omega:.4} {tm:.6} {:.6} {tt:.6} {lz:.6}", mirror_transmission(spec.n_r, l_m, 1.0 / omega));
    }
    println!("# Q = {:.1}, tau_Q = {:.2} tau0, r = {:.5}", res.q, res.tau_q, res.r);
    Ok(())
}
