use std::path::PathBuf;

use cavity_ctl::analytic::cavity_amplitudes;
use cavity_ctl::pulse::TimeGrid;
use cavity_ctl::scenario::Scenario;

#[test]
fn cavity_energy_follows_the_ray_model() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/fig6_confine.toml");
    let p = Scenario::from_path(&path).unwrap().prepare().unwrap();
    let res = p.resonance.unwrap();
    let schedule = p.schedule.as_ref().unwrap();
    let slots = 8;
    let ray = cavity_amplitudes(res.r, res.t, schedule, slots).unwrap();

    // The lead's centre reaches the left mirror at t_c; after slot s the packet
    // is mid-cavity a quarter round trip later.
    let t_c = p.stack.start() - p.lead.center0;
    let quarter = 0.25 * res.tau_rt;
    let tg = TimeGrid::new(t_c + quarter, 2.0 * quarter, slots).unwrap();
    let synth = p.synthesizer(true).unwrap();
    let b = p.region("B").unwrap();
    let field = synth.region_energy_series(&p.x_nodes(), b, &tg).unwrap();

    for (s, (amp, e)) in ray.iter().zip(&field).enumerate() {
        let expected = amp.norm_sqr();
        assert!(
            (e / expected - 1.0).abs() < 0.10,
            "slot {s}: cavity energy {e:.4}, ray model {expected:.4}"
        );
    }
    // Energy grows while the controls act.
    assert!(field[5] > 2.0 * field[0]);
}
