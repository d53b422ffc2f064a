use prolong_core::exterior::{Reducer, ReduceOutcome};
use prolong_core::problem::load_bundled;

#[test]
fn debug_all_closures() {
    let def = load_bundled("ishimori-compact").expect("load");
    let ctx = &def.ctx;
    for (name, gen) in &def.ideal.generators {
        let dg = ctx.exterior_derivative(gen);
        if dg.is_zero() {
            println!("{name}: exact (d = 0)");
            continue;
        }
        let t = std::time::Instant::now();
        let reducer = Reducer { ctx, degree_bound: 2 };
        match reducer.reduce_adaptive(&dg, &def.ideal, 3).unwrap() {
            ReduceOutcome::Member { certificate } => {
                println!("{name}: MEMBER {} terms {:?}", certificate.len(), t.elapsed());
            }
            ReduceOutcome::Remainder { remainder, .. } => {
                println!("{name}: REMAINDER {:?}: {}", t.elapsed(), ctx.print_form(&remainder));
            }
            ReduceOutcome::Inconclusive { detail } => println!("{name}: INCONCLUSIVE {detail}"),
        }
    }
}
