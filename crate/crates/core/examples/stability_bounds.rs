//! Evaluates the minimizer radius, the stability constant C_{p,lambda}, and
//! the uniform stability and generalization bounds across p.

use lpgcn::bounds::{c_p_lambda, generalization_bound, minimizer_radius, stability_beta, BoundInputs};
use lpgcn::{Result, P_GRID};

fn main() -> Result<()> {
    let (b, lambda, eta) = (1.0, 0.1, 0.01);
    println!("{:>7} {:>12} {:>10} {:>12} {:>12}", "p", "radius", "C", "ln beta_n", "gen (T=1)");
    for p in P_GRID {
        let inputs = BoundInputs {
            a_l: 1.0,
            a_sigma: 0.25,
            lambda_g_max: 1.0,
            g_e: 1.0,
            eta,
            n: 500,
            t: 200,
            p,
            lambda,
            lambda_t: eta * lambda,
            b_bound: b,
            delta: 0.05,
        };
        let beta = stability_beta(&inputs)?;
        // The bound compounds geometrically in T; one step keeps it finite.
        let one_step = stability_beta(&BoundInputs { t: 1, ..inputs })?;
        let gen = generalization_bound(one_step.value, b, inputs.n, inputs.delta)?;
        println!(
            "{p:>7} {:>12.4} {:>10.4e} {:>12.4} {:>12.4e}",
            minimizer_radius(b, lambda, p),
            c_p_lambda(p, lambda, eta * lambda, b),
            beta.ln_value,
            gen
        );
    }
    Ok(())
}
