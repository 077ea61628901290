//! Conjugate triplets, assumption checks and Yosida approximants.
use bernstein_calculus::bernstein::{classify_conjugate, BernsteinSpec};

fn main() -> bernstein_calculus::Result<()> {
    let inf = f64::INFINITY;
    println!("{:>4} {:>4} {:>5} {:>5} -> {:>3} {:>7} {:>7}", "a", "b", "m0", "m1", "row", "a*", "b*");
    for (a, b, m0, m1) in [(0.0, 0.0, inf, inf), (0.0, 0.0, 4.0, 2.0), (1.0, 0.0, 3.0, 7.0), (0.0, 2.0, 1.0, 2.0), (1.0, 2.0, 3.0, 4.0)] {
        let c = classify_conjugate(a, b, m0, m1)?;
        println!("{a:>4} {b:>4} {m0:>5} {m1:>5} -> {:>3} {:>7.4} {:>7.4}", c.case_id, c.a_star, c.b_star);
    }

    let spec = BernsteinSpec::mixture(vec![(1.0, 0.3), (1.0, 0.7)])?;
    let report = spec.check_assumptions();
    println!("\nmixture: a1 {} a2 {} ({})", report.a1_pass, report.a2_pass, report.notes);
    println!("f(2) = {:.6}, conjugate 2/f(2) = {:.6}", spec.eval(2.0)?, spec.conjugate_eval(2.0)?);
    for n in [1, 10, 100, 1000] {
        println!("yosida n = {n:>4}: f_n(2) = {:.6}", spec.yosida_approx(n)?.eval(2.0)?);
    }
    Ok(())
}
