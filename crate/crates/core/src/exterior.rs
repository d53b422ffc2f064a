//! Graded exterior algebra over the chart.
//!
//! Every declared non-parameter symbol contributes one covector; a
//! [`DifferentialForm`] maps strictly increasing covector tuples to scalar
//! coefficients. The exterior derivative treats every fibre, jet and
//! pseudopotential symbol as an independent coordinate of the prolonged
//! space, and abstract functions differentiate through their declared
//! arguments (`dH = sum H_v dv`).

use crate::error::ExteriorError;
use crate::expr::{Expr, ExprCtx};
use crate::param::Coeff;
use crate::symbol::SymbolId;
use std::collections::BTreeMap;

/// `d<symbol>`, identified by the symbol it differentiates. The covector
/// order is the symbol order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Covector(pub u32); // symbol order-rank

/// Exterior form of homogeneous degree; degree 0 is a bare scalar stored
/// under the empty tuple.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DifferentialForm {
    pub degree: usize,
    pub comps: BTreeMap<Vec<Covector>, Expr>,
}

impl DifferentialForm {
    pub fn zero(degree: usize) -> Self {
        DifferentialForm {
            degree,
            comps: BTreeMap::new(),
        }
    }

    pub fn scalar(e: Expr) -> Self {
        let mut f = DifferentialForm::zero(0);
        if !e.terms.is_empty() {
            f.comps.insert(vec![], e);
        }
        f
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }
}

/// Sort a covector tuple into strictly increasing order, returning the
/// permutation sign; `None` if a covector repeats.
fn sort_tuple(mut t: Vec<Covector>) -> Option<(Vec<Covector>, i32)> {
    let mut sign = 1;
    // insertion sort, counting transpositions
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

impl ExprCtx {
    pub fn covector(&self, s: SymbolId) -> Covector {
        Covector(self.table.rank(s))
    }

    pub fn covector_symbol(&self, c: Covector) -> SymbolId {
        self.table.id_at_rank(c.0)
    }

    /// 1-form `d s`.
    pub fn d_symbol(&self, s: SymbolId) -> DifferentialForm {
        let mut f = DifferentialForm::zero(1);
        f.comps.insert(vec![self.covector(s)], self.one());
        f
    }

    pub fn form_add(&self, a: &DifferentialForm, b: &DifferentialForm) -> DifferentialForm {
        debug_assert_eq!(a.degree, b.degree, "adding forms of mixed degree");
        let mut out = a.clone();
        for (k, e) in &b.comps {
            let entry = out
                .comps
                .entry(k.clone())
                .or_insert_with(|| self.zero());
            *entry = self.add(entry, e);
            if entry.terms.is_empty() {
                out.comps.remove(k);
            }
        }
        out
    }

    pub fn form_neg(&self, a: &DifferentialForm) -> DifferentialForm {
        let mut out = a.clone();
        for e in out.comps.values_mut() {
            *e = self.neg(e);
        }
        out
    }

    pub fn form_sub(&self, a: &DifferentialForm, b: &DifferentialForm) -> DifferentialForm {
        self.form_add(a, &self.form_neg(b))
    }

    pub fn form_scale(&self, e: &Expr, a: &DifferentialForm) -> DifferentialForm {
        let mut out = DifferentialForm::zero(a.degree);
        for (k, c) in &a.comps {
            let v = self.normalize(&self.mul(e, c));
            if !v.terms.is_empty() {
                out.comps.insert(k.clone(), v);
            }
        }
        out
    }

    pub fn form_normalize(&self, a: &DifferentialForm) -> DifferentialForm {
        let mut out = DifferentialForm::zero(a.degree);
        for (k, c) in &a.comps {
            let v = self.normalize(c);
            if !v.terms.is_empty() {
                out.comps.insert(k.clone(), v);
            }
        }
        out
    }

    /// Graded-commutative wedge product.
    pub fn wedge(&self, a: &DifferentialForm, b: &DifferentialForm) -> DifferentialForm {
        let mut out = DifferentialForm::zero(a.degree + b.degree);
        for (ka, ea) in &a.comps {
            for (kb, eb) in &b.comps {
                let mut tuple = ka.clone();
                tuple.extend(kb.iter().copied());
                let Some((tuple, sign)) = sort_tuple(tuple) else {
                    continue;
                };
                let mut v = self.mul(ea, eb);
                if sign < 0 {
                    v = self.neg(&v);
                }
                let entry = out
                    .comps
                    .entry(tuple)
                    .or_insert_with(|| self.zero());
                *entry = self.add(entry, &v);
            }
        }
        out.comps.retain(|_, e| !e.terms.is_empty());
        out
    }

    /// Exterior derivative over all declared non-parameter symbols,
    /// including abstract-function partials.
    pub fn exterior_derivative(&self, a: &DifferentialForm) -> DifferentialForm {
        let mut out = DifferentialForm::zero(a.degree + 1);
        for (k, e) in &a.comps {
            // d(coefficient) ^ (existing tuple)
            for s in self.support_all(e) {
                let de = self.differentiate(e, s);
                if de.terms.is_empty() {
                    continue;
                }
                let mut tuple = vec![self.covector(s)];
                tuple.extend(k.iter().copied());
                let Some((tuple, sign)) = sort_tuple(tuple) else {
                    continue;
                };
                let v = if sign < 0 { self.neg(&de) } else { de };
                let entry = out
                    .comps
                    .entry(tuple)
                    .or_insert_with(|| self.zero());
                *entry = self.add(entry, &v);
            }
        }
        out.comps.retain(|_, e| !e.terms.is_empty());
        self.form_normalize(&out)
    }

    /// Every symbol the expression can differentiate against: explicit
    /// symbol occurrences plus declared arguments of abstract functions.
    fn support_all(&self, e: &Expr) -> Vec<SymbolId> {
        let mut set = std::collections::BTreeSet::new();
        for sy in self.support_symbols(e) {
            set.insert(sy);
        }
        for f in self.support_fns(e) {
            for &arg in &self.table.fn_decl(f).args {
                set.insert(arg);
            }
        }
        set.into_iter().collect()
    }

    pub fn print_form(&self, a: &DifferentialForm) -> String {
        if a.comps.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (k, e) in &a.comps {
            let covs: Vec<String> = k
                .iter()
                .map(|&c| format!("d{}", self.table.name(self.covector_symbol(c))))
                .collect();
            if covs.is_empty() {
                parts.push(format!("({})", self.print(e)));
            } else {
                parts.push(format!("({}) {}", self.print(e), covs.join("^")));
            }
        }
        parts.join(" + ")
    }
}

/// Named list of generator forms (vector-valued generators stored
/// componentwise at load time).
#[derive(Clone, Debug, Default)]
pub struct ExteriorIdeal {
    pub generators: Vec<(String, DifferentialForm)>,
}

impl ExteriorIdeal {
    pub fn push(&mut self, name: &str, f: DifferentialForm) {
        assert!(!f.is_zero(), "ideal generators must be nonzero");
        self.generators.push((name.to_string(), f));
    }
}

/// One multiplier in a membership certificate: `generator_index`, the
/// covector tuple of the multiplier form and its scalar coefficient, i.e.
/// the certificate asserts `target = sum coeff * (dv_tuple ^ generator)`.
#[derive(Clone, Debug)]
pub struct MultiplierTerm {
    pub generator: usize,
    pub tuple: Vec<Covector>,
    pub coeff: Expr,
}

#[derive(Clone, Debug)]
pub enum ReduceOutcome {
    /// Remainder zero: membership certified within the multiplier class.
    Member { certificate: Vec<MultiplierTerm> },
    /// Nonzero remainder that the multiplier class provably cannot clear.
    Remainder {
        remainder: DifferentialForm,
        certificate: Vec<MultiplierTerm>,
    },
    /// The linear system needed a division the polynomial multiplier class
    /// cannot provide; distinct from a nonmembership claim.
    Inconclusive { detail: String },
}

/// Ideal reduction by linear elimination over monomial supports.
///
/// Multipliers are polynomial-coefficient forms built over a finite basis:
/// for every generator and every covector tuple of complementary degree,
/// an unknown polynomial with monomials drawn from the target's and the
/// generators' coefficient monomials up to `degree_bound`. Matching
/// coefficients of every (covector tuple x monomial) pair gives an exact
/// linear system over Q(i), solved by Gaussian elimination.
pub struct Reducer<'a> {
    pub ctx: &'a ExprCtx,
    pub degree_bound: u32,
}

impl<'a> Reducer<'a> {
    pub fn new(ctx: &'a ExprCtx) -> Self {
        Reducer {
            ctx,
            degree_bound: 3,
        }
    }

    /// Dress bare monomials with the involutive parameter factors
    /// (multiplier coefficients may need eps2 / kappa^2 factors to meet
    /// parameter-weighted generator terms).
    fn dress(&self, bare: &[crate::expr::TermKey]) -> Vec<crate::expr::TermKey> {
        let ctx = self.ctx;
        let mut monomials = Vec::new();
        let mut seen: std::collections::BTreeSet<crate::expr::TermKey> =
            std::collections::BTreeSet::new();
        for eps in 0..=1u32 {
            for kap in [0u32, 2] {
                let (params, unit) = ctx.ring.normalize_pow(&crate::param::ParamPow {
                    zeta: 0,
                    kappa: kap,
                    eps2: eps,
                });
                if !unit.is_one() && !unit.is_zero() {
                    // concrete -1 values fold into the coefficient,
                    // making this dressing redundant
                    continue;
                }
                for m in bare {
                    let mut key = m.clone();
                    key.params = params.clone();
                    if seen.insert(key.clone()) {
                        monomials.push(key);
                    }
                }
            }
        }
        monomials
    }

    fn base_covectors(&self, target: &DifferentialForm) -> Vec<Covector> {
        let ctx = self.ctx;
        let mut covs: std::collections::BTreeSet<Covector> = std::collections::BTreeSet::new();
        for id in ctx.table.ids() {
            if ctx.table.symbol(id).role == crate::symbol::SymbolRole::IndependentCoordinate {
                covs.insert(ctx.covector(id));
            }
        }
        for k in target.comps.keys() {
            covs.extend(k.iter().copied());
        }
        covs.into_iter().collect()
    }

    pub fn reduce(
        &self,
        target: &DifferentialForm,
        ideal: &ExteriorIdeal,
    ) -> Result<ReduceOutcome, ExteriorError> {
        let ctx = self.ctx;
        let target = ctx.form_normalize(target);
        if target.is_zero() {
            return Ok(ReduceOutcome::Member {
                certificate: vec![],
            });
        }
        // monomial basis: closed over the symbols appearing in target and
        // generators, up to the degree bound
        let mut sym_ranks: std::collections::BTreeSet<u32> = std::collections::BTreeSet::new();
        let mut collect = |f: &DifferentialForm| {
            for e in f.comps.values() {
                for k in e.terms.keys() {
                    for &(r, _) in &k.powers {
                        sym_ranks.insert(r);
                    }
                }
            }
        };
        collect(&target);
        for (_, g) in &ideal.generators {
            collect(g);
        }
        let ranks: Vec<u32> = sym_ranks.into_iter().collect();
        let monomials = self.dress(&enumerate_monomials(&ranks, self.degree_bound));
        let covs = self.base_covectors(&target);
        self.reduce_with_basis(&target, ideal, &monomials, &covs)
    }

    /// Iterated reduction: after each round the next multiplier basis is
    /// built from the divisors of the remainder's coefficient monomials,
    /// which admits the higher-degree structured multipliers without a full
    /// high-degree enumeration. Certificates compose additively.
    pub fn reduce_adaptive(
        &self,
        target: &DifferentialForm,
        ideal: &ExteriorIdeal,
        rounds: usize,
    ) -> Result<ReduceOutcome, ExteriorError> {
        let ctx = self.ctx;
        let mut current = ctx.form_normalize(target);
        let mut certificate: Vec<MultiplierTerm> = Vec::new();
        for round in 0..rounds.max(1) {
            if current.is_zero() {
                return Ok(ReduceOutcome::Member { certificate });
            }
            let outcome = if round == 0 {
                self.reduce(&current, ideal)?
            } else {
                // divisor basis of the current remainder, extended by one
                // extra symbol from the generator coefficient alphabet (the
                // structured eliminations multiply remainder coefficients
                // by single chart symbols)
                let mut divisors: std::collections::BTreeSet<crate::expr::TermKey> =
                    std::collections::BTreeSet::new();
                for e in current.comps.values() {
                    for k in e.terms.keys() {
                        enumerate_divisors(&k.powers, &mut divisors);
                    }
                }
                let mut alphabet: std::collections::BTreeSet<u32> =
                    std::collections::BTreeSet::new();
                for (_, g) in &ideal.generators {
                    for e in g.comps.values() {
                        for k in e.terms.keys() {
                            for &(r, _) in &k.powers {
                                alphabet.insert(r);
                            }
                        }
                    }
                }
                let mut bare: std::collections::BTreeSet<crate::expr::TermKey> =
                    divisors.clone();
                for d in &divisors {
                    for &r in &alphabet {
                        let mut powers: std::collections::BTreeMap<u32, u32> =
                            d.powers.iter().copied().collect();
                        *powers.entry(r).or_insert(0) += 1;
                        bare.insert(crate::expr::TermKey {
                            params: Default::default(),
                            powers: powers.into_iter().collect(),
                            fns: vec![],
                        });
                    }
                }
                let bare: Vec<crate::expr::TermKey> = bare.into_iter().collect();
                let monomials = self.dress(&bare);
                let covs = self.base_covectors(&current);
                self.reduce_with_basis(&current, ideal, &monomials, &covs)?
            };
            match outcome {
                ReduceOutcome::Member {
                    certificate: mut cert,
                } => {
                    certificate.append(&mut cert);
                    return Ok(ReduceOutcome::Member { certificate });
                }
                ReduceOutcome::Remainder {
                    remainder,
                    certificate: mut cert,
                } => {
                    certificate.append(&mut cert);
                    // stop when no progress was made
                    if remainder == current {
                        return Ok(ReduceOutcome::Remainder {
                            remainder,
                            certificate,
                        });
                    }
                    current = remainder;
                }
                inc @ ReduceOutcome::Inconclusive { .. } => return Ok(inc),
            }
        }
        Ok(ReduceOutcome::Remainder {
            remainder: current,
            certificate,
        })
    }

    pub fn reduce_with_basis(
        &self,
        target: &DifferentialForm,
        ideal: &ExteriorIdeal,
        monomials: &[crate::expr::TermKey],
        covs: &[Covector],
    ) -> Result<ReduceOutcome, ExteriorError> {
        let ctx = self.ctx;
        let target = ctx.form_normalize(target);
        if target.is_zero() {
            return Ok(ReduceOutcome::Member {
                certificate: vec![],
            });
        }

        // unknown index: (generator, multiplier tuple, monomial) -> column
        #[derive(Clone)]
        struct Unknown {
            generator: usize,
            tuple: Vec<Covector>,
            monomial: crate::expr::TermKey,
        }
        let mut unknowns: Vec<Unknown> = Vec::new();
        for (gi, (_, g)) in ideal.generators.iter().enumerate() {
            if g.degree > target.degree {
                continue;
            }
            let mdeg = target.degree - g.degree;
            for tuple in enumerate_tuples(covs, mdeg) {
                for m in monomials {
                    unknowns.push(Unknown {
                        generator: gi,
                        tuple: tuple.clone(),
                        monomial: m.clone(),
                    });
                }
            }
        }
        if unknowns.is_empty() {
            return Ok(ReduceOutcome::Remainder {
                remainder: target,
                certificate: vec![],
            });
        }

        // rows: (target covector tuple, coefficient term monomial) -> row
        // build sparse linear system  A u = b  over Coeff
        let mut row_index: BTreeMap<(Vec<Covector>, crate::expr::TermKey), usize> = BTreeMap::new();
        let mut rows: Vec<BTreeMap<usize, Coeff>> = Vec::new();
        let mut rhs: Vec<Coeff> = Vec::new();

        let mut row_of = |key: (Vec<Covector>, crate::expr::TermKey),
                          rows: &mut Vec<BTreeMap<usize, Coeff>>,
                          rhs: &mut Vec<Coeff>|
         -> usize {
            *row_index.entry(key).or_insert_with(|| {
                rows.push(BTreeMap::new());
                rhs.push(Coeff::zero());
                rows.len() - 1
            })
        };

        for (tuple, e) in &target.comps {
            for (tk, c) in &e.terms {
                let r = row_of((tuple.clone(), tk.clone()), &mut rows, &mut rhs);
                rhs[r] = rhs[r].add(c);
            }
        }

        // column -> rows that touch it, maintained through elimination
        let mut col_rows: Vec<std::collections::BTreeSet<usize>> =
            vec![std::collections::BTreeSet::new(); unknowns.len()];
        for (col, u) in unknowns.iter().enumerate() {
            let g = &ideal.generators[u.generator].1;
            // (monomial * dv_tuple) ^ g
            let mut mono_expr = Expr::default();
            mono_expr.terms.insert(u.monomial.clone(), Coeff::one());
            let mut mult = DifferentialForm::zero(u.tuple.len());
            mult.comps.insert(u.tuple.clone(), mono_expr);
            let prod = ctx.form_normalize(&ctx.wedge(&mult, g));
            for (tuple, e) in &prod.comps {
                for (tk, c) in &e.terms {
                    let r = row_of((tuple.clone(), tk.clone()), &mut rows, &mut rhs);
                    let entry = rows[r].entry(col).or_insert_with(Coeff::zero);
                    *entry = entry.add(c);
                    col_rows[col].insert(r);
                }
            }
        }

        // Gaussian elimination over the exact field
        let ncols = unknowns.len();
        let mut used_rows: Vec<bool> = vec![false; rows.len()];
        let mut solution: Vec<Coeff> = vec![Coeff::zero(); ncols];

        // forward pass choosing pivots column by column
        let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
        for col in 0..ncols {
            let prow = col_rows[col]
                .iter()
                .copied()
                .find(|&r| {
                    !used_rows[r] && rows[r].get(&col).map(|c| !c.is_zero()).unwrap_or(false)
                });
            let Some(prow) = prow else {
                continue;
            };
            used_rows[prow] = true;
            pivots.push((prow, col));
            let pval = rows[prow][&col].clone();
            let prow_data: Vec<(usize, Coeff)> = rows[prow]
                .iter()
                .map(|(k, v)| (*k, v.clone()))
                .collect();
            let prhs = rhs[prow].clone();
            let touching: Vec<usize> = col_rows[col]
                .iter()
                .copied()
                .filter(|&r| r != prow)
                .collect();
            for r in touching {
                let Some(f) = rows[r].get(&col).cloned() else {
                    continue;
                };
                if f.is_zero() {
                    continue;
                }
                let ratio = f.div(&pval);
                for (k, v) in &prow_data {
                    let entry = rows[r].entry(*k).or_insert_with(Coeff::zero);
                    *entry = entry.sub(&ratio.mul(v));
                    if entry.is_zero() {
                        rows[r].remove(k);
                    } else {
                        col_rows[*k].insert(r);
                    }
                }
                rhs[r] = rhs[r].sub(&ratio.mul(&prhs));
            }
        }

        // back-substitute (system is diagonal on pivot columns now)
        for &(prow, col) in &pivots {
            let pval = rows[prow][&col].clone();
            solution[col] = rhs[prow].div(&pval);
        }

        // assemble certificate and remainder = target - sum(mult ^ g)
        let mut certificate: Vec<MultiplierTerm> = Vec::new();
        let mut acc = DifferentialForm::zero(target.degree);
        for (col, u) in unknowns.iter().enumerate() {
            if solution[col].is_zero() {
                continue;
            }
            let mut mono_expr = Expr::default();
            mono_expr
                .terms
                .insert(u.monomial.clone(), solution[col].clone());
            certificate.push(MultiplierTerm {
                generator: u.generator,
                tuple: u.tuple.clone(),
                coeff: mono_expr.clone(),
            });
            let mut mult = DifferentialForm::zero(u.tuple.len());
            mult.comps.insert(u.tuple.clone(), mono_expr);
            let prod = ctx.wedge(&mult, &ideal.generators[u.generator].1);
            acc = ctx.form_add(&acc, &prod);
        }
        let remainder = ctx.form_normalize(&ctx.form_sub(&target, &acc));
        if remainder.is_zero() {
            Ok(ReduceOutcome::Member { certificate })
        } else {
            Ok(ReduceOutcome::Remainder {
                remainder,
                certificate,
            })
        }
    }
}

fn enumerate_monomials(ranks: &[u32], max_degree: u32) -> Vec<crate::expr::TermKey> {
    // all power products over `ranks` with total degree <= max_degree
    let mut out = vec![crate::expr::TermKey::unit()];
    let mut frontier: Vec<Vec<(u32, u32)>> = vec![vec![]];
    for d in 0..max_degree {
        let _ = d;
    }
    // breadth-first growth, deduplicated by the sorted exponent vector
    let mut seen: std::collections::BTreeSet<Vec<(u32, u32)>> =
        std::collections::BTreeSet::new();
    seen.insert(vec![]);
    for _ in 0..max_degree {
        let mut next = Vec::new();
        for powers in &frontier {
            for &r in ranks {
                let mut p: BTreeMap<u32, u32> = powers.iter().copied().collect();
                *p.entry(r).or_insert(0) += 1;
                let v: Vec<(u32, u32)> = p.into_iter().collect();
                if seen.insert(v.clone()) {
                    out.push(crate::expr::TermKey {
                        params: Default::default(),
                        powers: v.clone(),
                        fns: vec![],
                    });
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    out
}

/// All divisor monomials of a power product (including 1 and itself).
fn enumerate_divisors(
    powers: &[(u32, u32)],
    out: &mut std::collections::BTreeSet<crate::expr::TermKey>,
) {
    fn rec(
        powers: &[(u32, u32)],
        idx: usize,
        cur: &mut Vec<(u32, u32)>,
        out: &mut std::collections::BTreeSet<crate::expr::TermKey>,
    ) {
        if idx == powers.len() {
            out.insert(crate::expr::TermKey {
                params: Default::default(),
                powers: cur.iter().copied().filter(|&(_, p)| p > 0).collect(),
                fns: vec![],
            });
            return;
        }
        let (r, pmax) = powers[idx];
        for p in 0..=pmax {
            cur.push((r, p));
            rec(powers, idx + 1, cur, out);
            cur.pop();
        }
    }
    rec(powers, 0, &mut Vec::new(), out);
}

fn enumerate_tuples(covs: &[Covector], degree: usize) -> Vec<Vec<Covector>> {
    if degree == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    fn rec(covs: &[Covector], degree: usize, start: usize, cur: &mut Vec<Covector>, out: &mut Vec<Vec<Covector>>) {
        if cur.len() == degree {
            out.push(cur.clone());
            return;
        }
        for i in start..covs.len() {
            cur.push(covs[i]);
            rec(covs, degree, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(covs, degree, 0, &mut Vec::new(), &mut out);
    out
}

/// Per-generator closedness verdict.
#[derive(Clone, Debug)]
pub enum ClosednessVerdict {
    Closed { certificate: Vec<MultiplierTerm> },
    NotReduced { remainder: DifferentialForm },
    Inconclusive { detail: String },
}

/// Runs `reduce(d g, I)` for every generator.
pub fn closedness_check(
    ctx: &ExprCtx,
    ideal: &ExteriorIdeal,
    degree_bound: u32,
) -> Vec<(String, ClosednessVerdict)> {
    let reducer = Reducer { ctx, degree_bound };
    let mut out = Vec::new();
    for (name, g) in &ideal.generators {
        let dg = ctx.exterior_derivative(g);
        let verdict = if dg.is_zero() {
            ClosednessVerdict::Closed {
                certificate: vec![],
            }
        } else {
            match reducer.reduce_adaptive(&dg, ideal, 3) {
                Ok(ReduceOutcome::Member { certificate }) => {
                    ClosednessVerdict::Closed { certificate }
                }
                Ok(ReduceOutcome::Remainder { remainder, .. }) => {
                    ClosednessVerdict::NotReduced { remainder }
                }
                Ok(ReduceOutcome::Inconclusive { detail }) => {
                    ClosednessVerdict::Inconclusive { detail }
                }
                Err(e) => ClosednessVerdict::Inconclusive {
                    detail: e.to_string(),
                },
            }
        };
        out.push((name.clone(), verdict));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::ParamRing;
    use crate::symbol::{SymbolRole, SymbolTable};

    fn small_ctx() -> (ExprCtx, Vec<SymbolId>) {
        let mut t = SymbolTable::new();
        let x = t.declare("x", SymbolRole::IndependentCoordinate, None).unwrap();
        let y = t.declare("y", SymbolRole::IndependentCoordinate, None).unwrap();
        let tt = t.declare("t", SymbolRole::IndependentCoordinate, None).unwrap();
        let s1 = t.declare("S1", SymbolRole::FibreVariable, Some(1)).unwrap();
        t.freeze();
        (ExprCtx::new(t, ParamRing::default()), vec![x, y, tt, s1])
    }

    #[test]
    fn wedge_antisymmetry() {
        let (c, ids) = small_ctx();
        let dx = c.d_symbol(ids[0]);
        let dy = c.d_symbol(ids[1]);
        let a = c.wedge(&dx, &dy);
        let b = c.wedge(&dy, &dx);
        assert_eq!(a, c.form_neg(&b));
    }

    #[test]
    fn d_of_s1_dx() {
        let (c, ids) = small_ctx();
        let s1dx = c.form_scale(&c.sym(ids[3]), &c.d_symbol(ids[0]));
        let d = c.exterior_derivative(&s1dx);
        let expect = c.wedge(&c.d_symbol(ids[3]), &c.d_symbol(ids[0]));
        assert_eq!(d, expect);
    }

    #[test]
    fn dd_zero_on_scalar() {
        let (c, ids) = small_ctx();
        let f = c.mul(&c.sym(ids[3]), &c.sym(ids[0]));
        let df = c.exterior_derivative(&DifferentialForm::scalar(f));
        let ddf = c.exterior_derivative(&df);
        assert!(ddf.is_zero());
    }

    #[test]
    fn trivial_memberships() {
        let (c, ids) = small_ctx();
        let dx = c.d_symbol(ids[0]);
        let mut ideal = ExteriorIdeal::default();
        ideal.push("dx", dx.clone());
        // d(dx) = 0 -> closed
        let res = closedness_check(&c, &ideal, 2);
        assert!(matches!(res[0].1, ClosednessVerdict::Closed { .. }));
    }

    #[test]
    fn non_membership_has_remainder() {
        let (c, ids) = small_ctx();
        // ideal { S1 dx }: d(S1 dx) = dS1 ^ dx has no polynomial multiplier
        let g = c.form_scale(&c.sym(ids[3]), &c.d_symbol(ids[0]));
        let mut ideal = ExteriorIdeal::default();
        ideal.push("g", g);
        let res = closedness_check(&c, &ideal, 3);
        assert!(matches!(res[0].1, ClosednessVerdict::NotReduced { .. }));
    }
}
