//! The lp proximal operator on a few inputs, and how p controls shrinkage.

use lpgcn::prox::{contraction_bound, project_ball, prox_lp, prox_scalar, DEFAULT_PROX_TOL};
use lpgcn::{Result, P_GRID};
use ndarray::array;

fn main() -> Result<()> {
    let lam = 0.5;
    println!("prox of lam*|w|^p with lam = {lam}");
    println!("{:>8} {:>10} {:>10} {:>10}", "p", "v=0.3", "v=1.0", "v=-3.0");
    for p in P_GRID {
        let out: Vec<f64> = [0.3, 1.0, -3.0]
            .iter()
            .map(|&v| prox_scalar(v, lam, p, DEFAULT_PROX_TOL))
            .collect::<Result<_>>()?;
        println!("{p:>8} {:>10.6} {:>10.6} {:>10.6}", out[0], out[1], out[2]);
    }

    let v = array![0.002, -0.5, 1.5, 0.0004];
    let w = prox_lp(v.view(), 0.01, 1.001, DEFAULT_PROX_TOL)?;
    println!("\nnear p=1 small coordinates snap to zero: {v} -> {w}");
    println!("contraction bound at |v|=1.5: {:.6}", contraction_bound(1.5, 0.01, 1.001));

    let projected = project_ball(array![3.0, 4.0].view(), 1.0);
    println!("projection of (3,4) onto the unit ball: {projected}");
    Ok(())
}
