//! Arm mode table for the shipped configuration, plus the orthogonality check.
use flexquad::config::Config;
use flexquad::modal::orthogonality_gram;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = Config::default_config();
    let basis = cfg.modal_basis()?;
    println!("mass ratio {:.4}, damping sigma' = {:.4} 1/s", basis.beam.mass_ratio(), basis.sigma_prime);
    println!("{:>3} {:>10} {:>12} {:>10} {:>10}", "j", "beta_bar", "omega", "gamma", "W(L)");
    for m in &basis.modes {
        println!("{:>3} {:>10.5} {:>12.3} {:>10.4} {:>10.4}", m.index, m.beta_bar, m.omega, m.gamma_bar, m.tip_value);
    }
    let gram = orthogonality_gram(&basis);
    println!("mass-weighted Gram matrix:\n{gram:.3e}");
    Ok(())
}
