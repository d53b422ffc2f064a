//! Formal solutions: section-derivative symbols, triangular elimination
//! rules, and the pullback of forms onto the (x, y, t) base.

use crate::error::JetError;
use crate::expr::{Binding, Expr, ExprCtx};
use crate::exterior::DifferentialForm;
use crate::symbol::SymbolId;
use std::collections::BTreeMap;

/// Which rule layers a pullback applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RuleLayers {
    pub contact: bool,
    pub symmetry: bool,
    pub pivots: bool,
}

impl RuleLayers {
    /// Contact identifications only (S_x = P and friends).
    pub const CONTACT: RuleLayers = RuleLayers {
        contact: true,
        symmetry: false,
        pivots: false,
    };
    /// Contact plus cross-derivative symmetries; no PDE pivots. This is
    /// the layer for reading off the equation residuals.
    pub const RESIDUAL: RuleLayers = RuleLayers {
        contact: true,
        symmetry: true,
        pivots: false,
    };
    /// Contact plus PDE pivots, keeping the mixed derivatives as separate
    /// slots: the layer for constraint extraction on integral elements.
    pub const EXTRACT: RuleLayers = RuleLayers {
        contact: true,
        symmetry: false,
        pivots: true,
    };
    /// Everything.
    pub const FULL: RuleLayers = RuleLayers {
        contact: true,
        symmetry: true,
        pivots: true,
    };
}

/// Derivative bookkeeping for the pullback: every fibre, jet and
/// pseudopotential symbol has one section-derivative symbol per base
/// coordinate, and three layers of substitution rules. `contact` holds the
/// contact identifications (S_x = P, phi_x = alpha), `symmetry` the
/// cross-derivative identifications (P_y = Q_x, alpha_y = mu_x), `pivots`
/// the PDE rules (the time pivot from the spin equation, the alpha_x pivot
/// from the potential equation).
#[derive(Clone, Debug, Default)]
pub struct FormalJet {
    pub coords: Vec<SymbolId>,
    /// (fibre symbol, coord index) -> derivative symbol
    pub deriv: BTreeMap<(SymbolId, usize), SymbolId>,
    pub contact: Vec<(SymbolId, Expr)>,
    pub symmetry: Vec<(SymbolId, Expr)>,
    pub pivots: Vec<(SymbolId, Expr)>,
}

impl FormalJet {
    pub fn deriv_symbol(&self, v: SymbolId, coord: usize) -> Option<SymbolId> {
        self.deriv.get(&(v, coord)).copied()
    }

    fn all_rules(&self) -> impl Iterator<Item = &(SymbolId, Expr)> {
        self.contact
            .iter()
            .chain(self.symmetry.iter())
            .chain(self.pivots.iter())
    }

    /// The rule set must be triangular: no replacement may mention a symbol
    /// eliminated by any rule (one simultaneous pass suffices then), and
    /// every eliminated symbol has exactly one rule.
    pub fn validate(&self, ctx: &ExprCtx) -> Result<(), JetError> {
        let lhs: Vec<SymbolId> = self.all_rules().map(|(s, _)| *s).collect();
        let mut seen = std::collections::BTreeSet::new();
        for s in &lhs {
            if !seen.insert(*s) {
                return Err(JetError::NotTriangular(ctx.table.name(*s).to_string()));
            }
        }
        for (s, rhs) in self.all_rules() {
            for sup in ctx.support_symbols(rhs) {
                if lhs.contains(&sup) {
                    return Err(JetError::NotTriangular(format!(
                        "{} appears in the rule for {}",
                        ctx.table.name(sup),
                        ctx.table.name(*s)
                    )));
                }
            }
        }
        Ok(())
    }

    fn binding(&self, layers: RuleLayers) -> Binding {
        let mut b = Binding::new();
        if layers.contact {
            for (s, e) in &self.contact {
                b.symbols.insert(*s, e.clone());
            }
        }
        if layers.symmetry {
            for (s, e) in &self.symmetry {
                b.symbols.insert(*s, e.clone());
            }
        }
        if layers.pivots {
            for (s, e) in &self.pivots {
                b.symbols.insert(*s, e.clone());
            }
        }
        b
    }

    /// Apply the elimination rules to a scalar coefficient.
    pub fn eliminate(
        &self,
        ctx: &ExprCtx,
        e: &Expr,
        layers: RuleLayers,
    ) -> Result<Expr, JetError> {
        let b = self.binding(layers);
        ctx.substitute(e, &b)
            .map_err(|err| JetError::NotTriangular(err.to_string()))
    }
}

/// Pull a form back onto the base: every fibre covector `dv` becomes
/// `v_x dx + v_y dy + v_t dt` and the jet rules then eliminate the pivot
/// symbols. The result is a form in the base covectors only.
pub fn pullback_on_solutions(
    ctx: &ExprCtx,
    jet: &FormalJet,
    form: &DifferentialForm,
    layers: RuleLayers,
) -> Result<DifferentialForm, JetError> {
    let base: Vec<SymbolId> = jet.coords.clone();
    let mut out = DifferentialForm::zero(form.degree);
    for (tuple, coeff) in &form.comps {
        // expand each covector: base covectors stay, fibre covectors spread
        // over the three base directions
        let mut partials: Vec<Vec<(SymbolId, Expr)>> = Vec::new();
        for &cv in tuple {
            let sym = ctx.covector_symbol(cv);
            if base.contains(&sym) {
                partials.push(vec![(sym, ctx.one())]);
            } else {
                let mut spread = Vec::new();
                for (ci, &c) in base.iter().enumerate() {
                    let Some(d) = jet.deriv_symbol(sym, ci) else {
                        return Err(JetError::MissingRule(format!(
                            "{}_{}",
                            ctx.table.name(sym),
                            ctx.table.name(c)
                        )));
                    };
                    spread.push((c, ctx.sym(d)));
                }
                partials.push(spread);
            }
        }
        // distribute the product over the spread choices
        let mut acc: Vec<(Vec<SymbolId>, Expr)> = vec![(vec![], coeff.clone())];
        for spread in partials {
            let mut next = Vec::new();
            for (tuple_so_far, c) in &acc {
                for (base_sym, factor) in &spread {
                    let mut t = tuple_so_far.clone();
                    t.push(*base_sym);
                    next.push((t, ctx.mul(c, factor)));
                }
            }
            acc = next;
        }
        for (syms, c) in acc {
            let covs: Vec<crate::exterior::Covector> =
                syms.iter().map(|&s| ctx.covector(s)).collect();
            let Some((sorted, sign)) = sort_tuple(covs) else {
                continue;
            };
            let mut v = c;
            if sign < 0 {
                v = ctx.neg(&v);
            }
            let entry = out.comps.entry(sorted).or_insert_with(|| ctx.zero());
            *entry = ctx.add(entry, &v);
        }
    }
    // eliminate and normalize coefficients
    let mut reduced = DifferentialForm::zero(out.degree);
    for (tuple, coeff) in &out.comps {
        let e = jet.eliminate(ctx, coeff, layers)?;
        let e = ctx.normalize(&e);
        if !e.terms.is_empty() {
            reduced.comps.insert(tuple.clone(), e);
        }
    }
    Ok(reduced)
}

fn sort_tuple(
    mut t: Vec<crate::exterior::Covector>,
) -> Option<(Vec<crate::exterior::Covector>, i32)> {
    let mut sign = 1;
    for i in 1..t.len() {
        let mut j = i;
        while j > 0 && t[j - 1] > t[j] {
            t.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    for w in t.windows(2) {
        if w[0] == w[1] {
            return None;
        }
    }
    Some((t, sign))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::ParamRing;
    use crate::symbol::{SymbolRole, SymbolTable};

    #[test]
    fn pullback_of_fibre_covector() {
        let mut t = SymbolTable::new();
        let x = t.declare("x", SymbolRole::IndependentCoordinate, None).unwrap();
        let y = t.declare("y", SymbolRole::IndependentCoordinate, None).unwrap();
        let tt = t.declare("t", SymbolRole::IndependentCoordinate, None).unwrap();
        let s1 = t.declare("S1", SymbolRole::FibreVariable, Some(1)).unwrap();
        let s1x = t.declare("S1_x", SymbolRole::SectionDerivative, None).unwrap();
        let s1y = t.declare("S1_y", SymbolRole::SectionDerivative, None).unwrap();
        let s1t = t.declare("S1_t", SymbolRole::SectionDerivative, None).unwrap();
        t.freeze();
        let ctx = ExprCtx::new(t, ParamRing::default());
        let mut jet = FormalJet {
            coords: vec![x, y, tt],
            ..Default::default()
        };
        jet.deriv.insert((s1, 0), s1x);
        jet.deriv.insert((s1, 1), s1y);
        jet.deriv.insert((s1, 2), s1t);
        let _ = s1y;
        // dS1 ^ dy -> S1_x dx^dy + S1_t dt^dy; stored rank-sorted (t < x < y)
        let form = ctx.wedge(&ctx.d_symbol(s1), &ctx.d_symbol(y));
        let pb = pullback_on_solutions(&ctx, &jet, &form, RuleLayers::CONTACT).unwrap();
        let mut dxdy = vec![ctx.covector(x), ctx.covector(y)];
        dxdy.sort();
        let mut dtdy = vec![ctx.covector(tt), ctx.covector(y)];
        dtdy.sort();
        assert_eq!(pb.comps[&dxdy], ctx.sym(s1x));
        assert_eq!(pb.comps[&dtdy], ctx.sym(s1t));
    }
}
