use flexquad::config::Config;
use flexquad::dynamics::{
    euler_rate_map, euler_rate_map_inverse, linearize_hover, rigid_derivatives, rotation_body_to_inertial, Mixer,
    QuadrotorParams, RigidState, RIGID_STATES,
};
use flexquad::integrate::rk4_step;
use nalgebra::{DVector, Matrix3, Vector3, Vector4};
use proptest::prelude::*;

fn nonlinear_rhs<'a>(params: &'a QuadrotorParams, mixer: &Mixer, u: Vector4<f64>) -> impl Fn(&DVector<f64>) -> DVector<f64> + 'a {
    let mixer = *mixer;
    move |x| {
        let alloc = mixer.allocate(&u);
        let d = rigid_derivatives(&RigidState::from_slice(x.as_slice()), &alloc.applied, alloc.gyro_speed, params);
        DVector::from_column_slice(d.to_vector().as_slice())
    }
}

#[test]
fn hover_input_balances_gravity() {
    let p = QuadrotorParams::default();
    let u = p.hover_input();
    assert_eq!(u, Vector4::new(p.mass * p.gravity, 0.0, 0.0, 0.0));
    let alloc = Mixer::new(&p).unwrap().allocate(&u);
    assert!(!alloc.saturated);
    assert!(alloc.forces.iter().all(|f| (f - u[0] / 4.0).abs() < 1e-15));
    assert!(alloc.gyro_speed.abs() < 1e-9);
}

#[test]
fn negative_thrust_request_is_clipped_and_flagged() {
    let p = QuadrotorParams::default();
    let mixer = Mixer::new(&p).unwrap();
    let alloc = mixer.allocate(&Vector4::new(0.1, 5.0, 0.0, 0.0));
    assert!(alloc.saturated);
    assert!(alloc.forces.iter().all(|f| *f >= 0.0));
    assert!((alloc.applied - mixer.force_map * alloc.forces).norm() < 1e-15);
}

#[test]
fn mixing_rejects_negative_speed() {
    let mixer = Mixer::new(&QuadrotorParams::default()).unwrap();
    assert!(mixer.mix_rotor_speeds(&[1.0, -1.0, 1.0, 1.0]).is_err());
}

#[test]
fn pitch_singularity_is_rejected() {
    assert!(euler_rate_map_inverse(&Vector3::new(0.0, std::f64::consts::FRAC_PI_2, 0.0)).is_err());
}

#[test]
fn rigid_motion_ignores_arm_model_size() {
    let run = |modes: usize| {
        let mut cfg = Config::default_config();
        cfg.beam.n_modes = modes;
        cfg.scenario.duration = 3.0;
        cfg.scenario.anomaly.as_mut().unwrap().time = 1.0;
        cfg.pipeline().unwrap().run().unwrap()
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.rigid, b.rigid);
    assert_eq!(a.commands, b.commands);
    assert_ne!(a.tips, b.tips);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn allocation_round_trips_through_rotor_speeds(
        du in proptest::array::uniform4(-0.3f64..0.3),
    ) {
        let p = QuadrotorParams::default();
        let mixer = Mixer::new(&p).unwrap();
        let u = p.hover_input() + Vector4::new(du[0], du[1] * 0.1, du[2] * 0.1, du[3] * 0.01);
        let alloc = mixer.allocate(&u);
        prop_assert!(!alloc.saturated);
        let speeds = [alloc.speeds[0], alloc.speeds[1], alloc.speeds[2], alloc.speeds[3]];
        let (back, gyro) = mixer.mix_rotor_speeds(&speeds).unwrap();
        prop_assert!((back - u).norm() < 1e-12 * u.norm());
        prop_assert!((gyro - alloc.gyro_speed).abs() < 1e-12);
        prop_assert!((mixer.force_map * mixer.force_map_inv - nalgebra::Matrix4::identity()).norm() < 1e-12);
    }

    #[test]
    fn rotation_is_proper_orthonormal(
        phi in -3.0f64..3.0, theta in -1.5f64..1.5, psi in -3.0f64..3.0,
    ) {
        let r = rotation_body_to_inertial(&Vector3::new(phi, theta, psi));
        prop_assert!((r.transpose() * r - Matrix3::identity()).norm() < 1e-12);
        prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        let a = Vector3::new(phi, theta, psi);
        let m = euler_rate_map(&a) * euler_rate_map_inverse(&a).unwrap();
        prop_assert!((m - Matrix3::identity()).norm() < 1e-9);
    }

    #[test]
    fn linearization_tracks_small_perturbations(
        dir in proptest::collection::vec(-1.0f64..1.0, RIGID_STATES),
        du in proptest::array::uniform4(-0.01f64..0.01),
    ) {
        let p = QuadrotorParams::default();
        let mixer = Mixer::new(&p).unwrap();
        let lin = linearize_hover(&p);
        let trim = p.hover_input();
        let du = Vector4::new(du[0] * trim[0], du[1] * 1e-2, du[2] * 1e-2, du[3] * 1e-3);
        let f = nonlinear_rhs(&p, &mixer, trim + du);
        let bu = &lin.b_p * DVector::from_column_slice(du.as_slice());
        // Initial offset of norm 0.01 from hover.
        let dir = DVector::from_vec(dir);
        prop_assume!(dir.norm() > 1e-3);
        let x0 = &dir * (0.01 / dir.norm());
        let (mut xn, mut xl) = (x0.clone(), x0);
        let dt = 1e-3;
        for _ in 0..1000 {
            xn = rk4_step(&xn, dt, |_, x| f(x));
            xl = rk4_step(&xl, dt, |_, x| &lin.a_p * x + &bu);
        }
        let d = &xn - &xl;
        prop_assert!(d.norm() < 1e-3, "diff {:?}", d.as_slice());
    }
}
