// Focused closure-reduction debugging.
use prolong_core::exterior::{Reducer, ReduceOutcome};
use prolong_core::problem::load_bundled;

#[test]
fn debug_theta1_closure() {
    let def = load_bundled("ishimori-compact").expect("load");
    let ctx = &def.ctx;
    let (name, gen) = &def.ideal.generators[0];
    println!("generator {name}: {}", ctx.print_form(gen));
    let dg = ctx.exterior_derivative(gen);
    println!("d{name}: {}", ctx.print_form(&dg));
    let t = std::time::Instant::now();
    let reducer = Reducer { ctx, degree_bound: 2 };
    match reducer.reduce(&dg, &def.ideal).unwrap() {
        ReduceOutcome::Member { certificate } => {
            println!("MEMBER with {} multiplier terms ({:?})", certificate.len(), t.elapsed());
        }
        ReduceOutcome::Remainder { remainder, certificate } => {
            println!("REMAINDER ({} cert terms, {:?}): {}", certificate.len(), t.elapsed(), ctx.print_form(&remainder));
        }
        ReduceOutcome::Inconclusive { detail } => println!("INCONCLUSIVE: {detail}"),
    }
}
