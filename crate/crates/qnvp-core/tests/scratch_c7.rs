use qnvp_core::evolve::{integrate, ModelKind, RunConfig};
use qnvp_core::field::ScalarField;
use qnvp_core::grid::{TorusGrid, VelocityGrid};
use qnvp_core::params::PhysParams;
use qnvp_core::phase::{Discretization, PhaseGrid};
use qnvp_core::qnvp::QnvpState;
use qnvp_core::synth::{band_limited_scalar, band_limited_vector, discrete_maxwellian};

#[test]
fn probe_c7() {
    let disc = Discretization::new(PhaseGrid::new(
        TorusGrid::new(32).unwrap(),
        VelocityGrid::new(32, 6.0).unwrap(),
    ));
    let grid = disc.grid();
    let qops = disc.qops();
    let b = ScalarField::from_fn(grid.q, |x, _| 1.0 + 0.3 * x.cos());
    let params = PhysParams::new(0.7, 1.0, 0.1, b).unwrap();
    let rho_base = discrete_maxwellian(grid, disc.vops(), 1.0, 1.0).unwrap();
    let bump = band_limited_scalar(grid.q, 4, 7);
    let mut amp = bump.scaled(0.2 / bump.max_abs());
    amp.add_scalar(1.0);
    let rho = rho_base.mul_q(&amp);
    let raw = band_limited_vector(grid.q, 4, 8);
    let init = QnvpState::new(qops, 1.0, raw.scaled(0.3 / raw.max_abs()), rho).unwrap();
    for dt in [1e-3, 5e-4] {
        let t0 = std::time::Instant::now();
        let cfg = RunConfig::new(dt, 1.0, (0.1 / dt).round() as usize, ModelKind::Qnvp).unwrap();
        let (series, end) = integrate(&disc, &params, init.clone(), &cfg);
        end.unwrap();
        let h = series.channel("H").unwrap();
        let m = series.channel("mass").unwrap();
        let dmax = series
            .channel("div_norm")
            .unwrap()
            .iter()
            .fold(0.0f64, |a, v| a.max(*v));
        println!(
            "dt={dt:e}: H drift {:e}, mass drift {:e}, max div {:e}, wall {:?}",
            ((h[h.len() - 1] - h[0]) / h[0]).abs(),
            ((m[m.len() - 1] - m[0]) / m[0]).abs(),
            dmax,
            t0.elapsed()
        );
    }
}
