//! Tour of the library on the two built-in systems: dimension, certified
//! packing values, the counting recursion, a z-sequence, and the
//! oscillation report.
//!
//! Run with: cargo run --release -p frakt-core --example quickstart

use frakt_core::*;

fn main() -> Result<()> {
    let sys = FractalSystem::fibonacci_cantor();
    println!(
        "quarter-half system: dimension {:.12}, sigma {}",
        sys.dimension(),
        sys.sigma()
    );

    match sys.ratio_structure(1e-10)? {
        RatioStructure::Dependent(es) => {
            println!("ratio structure: base {:.6}, exponents {:?}", es.base, es.exponents)
        }
        RatioStructure::Independent => println!("ratios independent"),
    }

    let opts = SweepOptions::for_system(&sys);
    println!("\ncertified best-packing distances:");
    for n in [2usize, 3, 5, 8, 13, 21] {
        let b = packing_distance_bounds(&sys, n, &opts)?;
        println!(
            "  delta(A, {n:>2}) = {} (exact: {})",
            rational::format_rational(&b.lower),
            b.exact
        );
    }

    let rep = count_recursion_check(&sys, 1, 12, &opts)?;
    println!(
        "\ncounting recursion above J = {}: all pass = {}",
        rep.j_threshold,
        rep.all_pass()
    );

    let cantor = FractalSystem::middle_third_cantor();
    let zs = z_sequence(&cantor, 2.0, 1, 6, &DepthSchedule::Default, 4, 1)?;
    println!("\nmiddle-third Cantor z-sequence (s = 2, ell = 1):");
    for e in &zs.entries {
        println!("  n = {} N = {:>3} z = {:.6}", e.n, e.n_points, e.z);
    }

    let osc = packing_oscillation(&sys, 14, &opts)?;
    println!(
        "\noscillation of delta(A,N) N^(1/d): liminf ~ {:.6}, limsup ~ {:.6}, ratio {:.4}",
        osc.liminf_est, osc.limsup_est, osc.ratio
    );
    println!(
        "contraction constants delta(A, R_n + 1)/r^n stay <= {:.4} < 1",
        osc.max_contraction_constant
    );
    Ok(())
}
