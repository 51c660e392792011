//! Coarse text rendering of the operator-gain stability map.
use flexquad::config::Config;
use flexquad::delay::{stability_map, SweepRange};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = Config::default_config();
    let problem = cfg.stability_problem()?;
    let kp = SweepRange::new(0.05, 1.5, 30)?;
    let tp = SweepRange::new(0.01, 1.0, 15)?;
    let map = stability_map(&problem, &kp, &tp, &cfg.root_options())?;
    println!("rows: Tp from 1.0 down to 0.01; columns: Kp from 0.05 to 1.5 ('.' stable, '#' unstable)");
    for j in (0..tp.count).rev() {
        let line: String = (0..kp.count).map(|i| if map.cell(i, j).is_stable() { '.' } else { '#' }).collect();
        println!("{:>5.2} {line}", tp.values()[j]);
    }
    println!("{} stable, {} unstable", map.stable_count(), map.unstable_count());
    Ok(())
}
