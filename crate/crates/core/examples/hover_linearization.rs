//! Hover trim, the linear model about it, and a check of the linear model
//! against the nonlinear equations for a small attitude offset.
use flexquad::dynamics::{linearize_hover, rigid_derivatives, Mixer, QuadrotorParams, RigidState};
use flexquad::integrate::rk4_step;
use flexquad::linalg::eigenvalues;
use nalgebra::DVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = QuadrotorParams::default();
    let mixer = Mixer::new(&p)?;
    let trim = p.hover_input();
    let alloc = mixer.allocate(&trim);
    println!("hover input {:?}", trim.as_slice());
    println!("rotor speeds {:.2?} rad/s", alloc.speeds.as_slice());

    let lin = linearize_hover(&p);
    let open_loop: Vec<String> = eigenvalues(&lin.a_p).iter().map(|l| format!("{:.1}", l.re)).collect();
    println!("open-loop eigenvalues (real parts): {}", open_loop.join(" "));

    let mut x0 = DVector::zeros(12);
    x0[3] = 0.02;
    x0[4] = -0.01;
    let (mut xn, mut xl) = (x0.clone(), x0);
    for _ in 0..1000 {
        xn = rk4_step(&xn, 1e-3, |_, x| {
            let d = rigid_derivatives(&RigidState::from_slice(x.as_slice()), &trim, alloc.gyro_speed, &p);
            DVector::from_column_slice(d.to_vector().as_slice())
        });
        xl = rk4_step(&xl, 1e-3, |_, x| &lin.a_p * x);
    }
    println!("after 1 s: nonlinear x = {:.5}, y = {:.5}; linear x = {:.5}, y = {:.5}", xn[0], xn[1], xl[0], xl[1]);
    println!("largest state difference {:.2e}", (xn - xl).amax());
    Ok(())
}
