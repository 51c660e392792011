//! Altitude flown by a delayed human operator model around the adaptive loop.
use flexquad::config::Config;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = Config::default_config();
    cfg.operator.enabled = true;
    let root = cfg.stability_problem()?.root_at(cfg.operator.kp, cfg.operator.tp, &cfg.root_options())?;
    println!(
        "operator Kp = {}, Tp = {}, delay {} s: rightmost root {:.4} {:+.4}i",
        cfg.operator.kp, cfg.operator.tp, cfg.operator.delay, root.root.re, root.root.im
    );
    let res = cfg.pipeline()?.run()?;
    for t in [10.0, 20.0, 40.0, 60.0, 70.0] {
        let k = res.times.iter().position(|&s| s >= t - 1e-9).unwrap_or(res.times.len() - 1);
        println!("t = {:>5.1} s  z = {:>8.4}  z_cmd = {:>8.4}", res.times[k], res.rigid[k][2], res.references[k][2]);
    }
    Ok(())
}
