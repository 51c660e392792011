//! Anomaly scenario flown with a standard and a closed-loop reference model.
use flexquad::adaptive::ReferenceKind;
use flexquad::config::Config;
use flexquad::scenario::{tip_rms, tracking_metric};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = Config::default_config();
    println!("{:<5} {:>10} {:>10} {:>10} {:>10} {:>11} {:>9}", "", "me_x", "me_y", "me_z", "me_psi", "tip_rms", "|theta|");
    for kind in [ReferenceKind::Mrac, ReferenceKind::Crm] {
        cfg.controller.mode = kind;
        let res = cfg.pipeline()?.run()?;
        let (a, b) = (res.window_start(), res.end_time());
        let me = tracking_metric(&res, a, b)?;
        println!(
            "{:<5} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e} {:>11.5e} {:>9.4}",
            format!("{kind:?}"),
            me[0],
            me[1],
            me[2],
            me[3],
            tip_rms(&res, a, b)?,
            res.theta_max
        );
    }
    Ok(())
}
