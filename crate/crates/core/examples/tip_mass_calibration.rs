//! How a rotor mass at the arm tip moves the frequencies, and the section
//! height that puts the first mode at a chosen frequency.
use flexquad::config::Config;
use flexquad::modal::{calibrate_section_height, solve_frequency_roots};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>6} {:>9} {:>9} {:>9}", "m_bar", "beta1", "beta2", "beta3");
    for mr in [0.0, 0.1, 0.5, 1.0, 5.0] {
        let b = solve_frequency_roots(mr, 3)?;
        println!("{mr:>6.2} {:>9.5} {:>9.5} {:>9.5}", b[0], b[1], b[2]);
    }

    let beam = Config::default_config().beam;
    for tip_mass in [0.0, 0.01, 0.03] {
        let h = calibrate_section_height(beam.length, beam.density, beam.youngs_modulus, beam.width, tip_mass, 131.0)?;
        let mut cfg = Config::default_config();
        cfg.beam.height = h;
        cfg.beam.tip_mass = tip_mass;
        let basis = cfg.modal_basis()?;
        let w: Vec<String> = basis.modes.iter().map(|m| format!("{:.1}", m.omega)).collect();
        println!("tip mass {tip_mass:.3} kg -> height {:.4} mm, omega = [{}] rad/s", h * 1e3, w.join(", "));
    }
    Ok(())
}
