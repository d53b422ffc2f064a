use prolong_core::exterior::{Reducer, ReduceOutcome};
use prolong_core::problem::load_bundled;

#[test]
fn debug_noncompact_gamma3_rounds() {
    let def = load_bundled("ishimori-noncompact").expect("load");
    let ctx = &def.ctx;
    let (_, gen) = def.ideal.generators.iter().find(|(n, _)| n == "gamma3").unwrap();
    let mut current = ctx.exterior_derivative(gen);
    let reducer = Reducer { ctx, degree_bound: 2 };
    for round in 0..5 {
        match reducer.reduce_adaptive(&current, &def.ideal, 1).unwrap() {
            ReduceOutcome::Member { certificate } => {
                println!("round {round}: MEMBER ({} terms)", certificate.len());
                return;
            }
            ReduceOutcome::Remainder { remainder, certificate } => {
                println!("round {round}: {} cert terms, remainder: {}", certificate.len(), ctx.print_form(&remainder));
                if remainder == current { println!("NO PROGRESS"); return; }
                current = remainder;
            }
            ReduceOutcome::Inconclusive { detail } => { println!("INCONCLUSIVE {detail}"); return; }
        }
    }
}
