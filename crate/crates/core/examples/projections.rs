//! The two feasible-set projections and the slack maximizer.

use nalgebra::DMatrix;
use pddgp::channel::C64;
use pddgp::objective::DualState;
use pddgp::projections::{project_covariance, project_phase, slack_from_interference, water_level};

fn main() -> pddgp::Result<()> {
    let theta = nalgebra::DVector::from_vec(vec![C64::new(3.0, 4.0), C64::new(0.0, 0.0), C64::new(-0.1, 0.0)]);
    println!("phase projection: {:?}", project_phase(&theta).angles());

    // Indefinite Hermitian input with too much power.
    let w = DMatrix::from_row_slice(
        2,
        2,
        &[C64::new(2.0, 0.0), C64::new(0.5, 1.0), C64::new(0.5, -1.0), C64::new(-1.0, 0.0)],
    );
    let x = project_covariance(&w, 1.0)?;
    println!("projected covariance (trace {:.6}):\n{}", x.trace(), x.as_matrix());

    println!("water level for eigenvalues [3, 1, -2], budget 1: {}", water_level(&[3.0, 1.0, -2.0], 1.0));

    let dual = DualState::new(vec![0.0, 0.0], 1.0)?;
    let s = slack_from_interference(&[0.5, 2.0], &[1.0, 1.0], &dual);
    println!("slack for I = [0.5, 2.0], P = [1, 1]: {:?}", s.as_slice());
    Ok(())
}
