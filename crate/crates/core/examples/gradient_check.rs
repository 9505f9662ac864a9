//! Analytic gradients against central finite differences at a random point.

use pddgp::channel::{random_phases, ScenarioConfig, SystemDims, LANE_INIT_PHASE};
use pddgp::experiments::build_problem;
use pddgp::gradients::{finite_diff_gradient, finite_diff_gradient_hermitian, grad_theta, grad_x, FD_STEP};
use pddgp::objective::{augmented_objective, DualState, PhaseVector, SlackVector, TransmitCovariance};

fn main() -> pddgp::Result<()> {
    let scenario = ScenarioConfig::default().with_receivers(2);
    let dims = SystemDims { n_t: 2, n_r: 2, n_p: 2, n_i: 4, k: 2 };
    let pb = build_problem(&scenario, &dims, 0)?;
    let ch = &pb.channels;
    let theta = PhaseVector::new(random_phases(3, 0, LANE_INIT_PHASE, dims.n_i))?;
    let x = TransmitCovariance::isotropic(dims.n_t, pb.p_max);
    let slack = SlackVector::new(vec![0.5, 1.0])?;
    let dual = DualState::new(vec![0.1, -0.2], 10.0)?;

    let g = grad_theta(&x, &theta, &slack, &dual, ch, &pb.thresholds)?;
    let fd = finite_diff_gradient(
        |t| {
            // Off the unit circle the objective is still smooth in theta.
            let ev = pddgp::objective::Evaluation::at(ch, t, x.as_matrix()).unwrap();
            ev.augmented(slack.as_slice(), &dual, &pb.thresholds)
        },
        theta.as_vector(),
        FD_STEP,
    );
    println!("theta: relative error {:.2e}", (&g - &fd).norm() / fd.norm());

    let gx = grad_x(&x, &theta, &slack, &dual, ch, &pb.thresholds)?;
    let fdx = finite_diff_gradient_hermitian(
        |m| {
            let ev = pddgp::objective::Evaluation::at(ch, theta.as_vector(), m).unwrap();
            ev.augmented(slack.as_slice(), &dual, &pb.thresholds)
        },
        x.as_matrix(),
        FD_STEP,
    );
    println!("X:     relative error {:.2e}", (&gx - &fdx).norm() / fdx.norm());
    println!(
        "objective at the point: {:.6}",
        augmented_objective(&x, &theta, &slack, &dual, ch, &pb.thresholds)?
    );
    Ok(())
}
