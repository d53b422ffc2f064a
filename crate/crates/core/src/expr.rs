//! Canonical multivariate differential polynomials.
//!
//! An [`Expr`] is a fully expanded sum of terms. Each term is a coefficient
//! in Q(i), a parameter monomial, a power product over declared symbols and
//! a product of abstract-function derivative instances. Terms are kept in a
//! fixed graded-lexicographic order, so structural equality is equality in
//! the polynomial ring and zero has the unique empty representation.

use crate::error::ExprError;
use crate::param::{Coeff, ParamPow, ParamRing};
use crate::symbol::{FnId, SymbolId, SymbolTable};
use num::Zero;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

/// One occurrence of an abstract function, possibly differentiated.
/// `deriv[k]` is the partial-derivative order w.r.t. the k-th declared
/// argument; mixed partials commute by construction.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FnInstance {
    pub fn_id: FnId,
    pub deriv: Vec<u32>,
}

impl FnInstance {
    pub fn base(fn_id: FnId, arity: usize) -> Self {
        FnInstance {
            fn_id,
            deriv: vec![0; arity],
        }
    }

    pub fn total_deriv(&self) -> u32 {
        self.deriv.iter().sum()
    }

    pub fn is_base(&self) -> bool {
        self.deriv.iter().all(|&d| d == 0)
    }
}

/// Monomial part of a term. `powers` maps symbol order-rank to exponent,
/// sorted by rank with all exponents positive; `fns` is sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct TermKey {
    pub params: ParamPow,
    pub powers: Vec<(u32, u32)>,
    pub fns: Vec<FnInstance>,
}

impl TermKey {
    pub fn unit() -> Self {
        TermKey::default()
    }

    pub fn is_unit(&self) -> bool {
        self.params.is_unit() && self.powers.is_empty() && self.fns.is_empty()
    }

    pub fn degree(&self) -> u32 {
        let sym: u32 = self.powers.iter().map(|&(_, p)| p).sum();
        let fns: u32 = self.fns.iter().map(|f| 1 + f.total_deriv()).sum();
        sym + fns
    }

    pub fn pow_of(&self, rank: u32) -> u32 {
        self.powers
            .iter()
            .find(|&&(r, _)| r == rank)
            .map(|&(_, p)| p)
            .unwrap_or(0)
    }

    /// Merge two monomials (no param folding; the caller folds via the ring).
    fn mul_powers(&self, other: &Self) -> (Vec<(u32, u32)>, Vec<FnInstance>) {
        let mut powers: BTreeMap<u32, u32> = self.powers.iter().copied().collect();
        for &(r, p) in &other.powers {
            *powers.entry(r).or_insert(0) += p;
        }
        let mut fns = self.fns.clone();
        fns.extend(other.fns.iter().cloned());
        fns.sort();
        (powers.into_iter().collect(), fns)
    }

    /// Does `self` contain the monomial `pat` as a factor (symbols only)?
    fn divisible_by_pattern(&self, pat: &[(u32, u32)]) -> bool {
        pat.iter().all(|&(r, p)| self.pow_of(r) >= p)
    }

    fn divide_pattern(&self, pat: &[(u32, u32)]) -> TermKey {
        let mut powers: BTreeMap<u32, u32> = self.powers.iter().copied().collect();
        for &(r, p) in pat {
            let e = powers.get_mut(&r).expect("pattern divides");
            *e -= p;
            if *e == 0 {
                powers.remove(&r);
            }
        }
        TermKey {
            params: self.params.clone(),
            powers: powers.into_iter().collect(),
            fns: self.fns.clone(),
        }
    }
}

impl PartialOrd for TermKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TermKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        // graded first
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        // lexicographic on the exponent vectors: the term owning the
        // earlier-ranked symbol (or the higher power there) sorts higher
        let mut ia = self.powers.iter();
        let mut ib = other.powers.iter();
        loop {
            match (ia.next(), ib.next()) {
                (Some(&(ra, pa)), Some(&(rb, pb))) => {
                    if ra != rb {
                        // earlier rank present = lex-greater
                        return if ra < rb {
                            Ordering::Greater
                        } else {
                            Ordering::Less
                        };
                    }
                    if pa != pb {
                        return pa.cmp(&pb);
                    }
                }
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (None, None) => break,
            }
        }
        match self.fns.cmp(&other.fns) {
            Ordering::Equal => {}
            o => return o,
        }
        (self.params.zeta, self.params.kappa, self.params.eps2).cmp(&(
            other.params.zeta,
            other.params.kappa,
            other.params.eps2,
        ))
    }
}

/// Canonical polynomial: term monomial -> coefficient, no zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Expr {
    pub terms: BTreeMap<TermKey, Coeff>,
}

/// Monomial rewrite in quotient mode: whenever a term is divisible by
/// `pattern` (a pure symbol-power pattern), the pattern factor is replaced by
/// `replacement`. Rules are tried in list order against terms in descending
/// term order until a fixpoint.
#[derive(Clone, Debug)]
pub struct RewriteRule {
    pub name: String,
    pub pattern: Vec<(u32, u32)>,
    pub replacement: Expr,
}

/// Everything expression operations need: the frozen symbol table, the
/// parameter ring and the problem's quotient rewrite rules.
#[derive(Clone, Debug)]
pub struct ExprCtx {
    pub table: SymbolTable,
    pub ring: ParamRing,
    pub quotient: Vec<RewriteRule>,
    pub quotient_mode: bool,
}

impl ExprCtx {
    pub fn new(table: SymbolTable, ring: ParamRing) -> Self {
        ExprCtx {
            table,
            ring,
            quotient: Vec::new(),
            quotient_mode: false,
        }
    }

    pub fn rank_of(&self, id: SymbolId) -> u32 {
        self.table.rank(id)
    }

    // ---- constructors ----

    pub fn zero(&self) -> Expr {
        Expr::default()
    }

    pub fn from_coeff(&self, c: Coeff) -> Expr {
        let mut e = Expr::default();
        if !c.is_zero() {
            e.terms.insert(TermKey::unit(), c);
        }
        e
    }

    pub fn one(&self) -> Expr {
        self.from_coeff(Coeff::one())
    }

    pub fn int(&self, n: i64) -> Expr {
        self.from_coeff(Coeff::from_int(n))
    }

    pub fn sym(&self, id: SymbolId) -> Expr {
        let mut e = Expr::default();
        e.terms.insert(
            TermKey {
                params: ParamPow::unit(),
                powers: vec![(self.rank_of(id), 1)],
                fns: vec![],
            },
            Coeff::one(),
        );
        e
    }

    pub fn param(&self, pow: ParamPow) -> Expr {
        let (p, c) = self.ring.normalize_pow(&pow);
        let mut e = Expr::default();
        e.terms.insert(
            TermKey {
                params: p,
                powers: vec![],
                fns: vec![],
            },
            c,
        );
        e
    }

    pub fn kappa2(&self) -> Expr {
        self.param(ParamPow {
            zeta: 0,
            kappa: 2,
            eps2: 0,
        })
    }

    pub fn eps2(&self) -> Expr {
        self.param(ParamPow {
            zeta: 0,
            kappa: 0,
            eps2: 1,
        })
    }

    pub fn fn_instance(&self, inst: FnInstance) -> Expr {
        let mut e = Expr::default();
        e.terms.insert(
            TermKey {
                params: ParamPow::unit(),
                powers: vec![],
                fns: vec![inst],
            },
            Coeff::one(),
        );
        e
    }

    // ---- ring operations ----

    pub fn add(&self, a: &Expr, b: &Expr) -> Expr {
        let mut out = a.clone();
        for (k, c) in &b.terms {
            let entry = out.terms.entry(k.clone()).or_insert_with(Coeff::zero);
            *entry = entry.add(c);
            if entry.is_zero() {
                out.terms.remove(k);
            }
        }
        out
    }

    pub fn sub(&self, a: &Expr, b: &Expr) -> Expr {
        self.add(a, &self.neg(b))
    }

    pub fn neg(&self, a: &Expr) -> Expr {
        let mut out = a.clone();
        for c in out.terms.values_mut() {
            *c = c.neg();
        }
        out
    }

    pub fn scale(&self, a: &Expr, c: &Coeff) -> Expr {
        if c.is_zero() {
            return Expr::default();
        }
        let mut out = a.clone();
        for v in out.terms.values_mut() {
            *v = v.mul(c);
        }
        out
    }

    pub fn mul(&self, a: &Expr, b: &Expr) -> Expr {
        let mut out = Expr::default();
        for (ka, ca) in &a.terms {
            for (kb, cb) in &b.terms {
                let (params, unit) = self.ring.mul(&ka.params, &kb.params);
                let (powers, fns) = ka.mul_powers(kb);
                let key = TermKey {
                    params,
                    powers,
                    fns,
                };
                let c = ca.mul(cb).mul(&unit);
                let entry = out.terms.entry(key).or_insert_with(Coeff::zero);
                *entry = entry.add(&c);
            }
        }
        out.terms.retain(|_, c| !c.is_zero());
        out
    }

    pub fn pow(&self, a: &Expr, n: u32) -> Expr {
        let mut out = self.one();
        for _ in 0..n {
            out = self.mul(&out, a);
        }
        out
    }

    /// Canonical normal form: parameter involutions are folded during
    /// multiplication, so this re-folds raw params, applies the quotient
    /// rewrites (when enabled) and drops zero coefficients. Idempotent.
    pub fn normalize(&self, e: &Expr) -> Expr {
        let mut cur = Expr::default();
        for (k, c) in &e.terms {
            let (params, unit) = self.ring.normalize_pow(&k.params);
            let key = TermKey {
                params,
                powers: k.powers.clone(),
                fns: k.fns.clone(),
            };
            let v = c.mul(&unit);
            let entry = cur.terms.entry(key).or_insert_with(Coeff::zero);
            *entry = entry.add(&v);
        }
        cur.terms.retain(|_, c| !c.is_zero());
        if !self.quotient_mode || self.quotient.is_empty() {
            return cur;
        }
        // rewrite to fixpoint; rules strictly decrease a lexicographic
        // (S3-degree, pivot-variable degree) measure, so this terminates
        let mut guard = 0usize;
        'outer: loop {
            guard += 1;
            assert!(guard < 100_000, "quotient rewriting did not terminate");
            for (key, coeff) in cur.terms.iter().rev() {
                for rule in &self.quotient {
                    if key.divisible_by_pattern(&rule.pattern) {
                        let key = key.clone();
                        let coeff = coeff.clone();
                        let rest = key.divide_pattern(&rule.pattern);
                        cur.terms.remove(&key);
                        let mut rest_expr = Expr::default();
                        rest_expr.terms.insert(rest, coeff);
                        let replaced = self.mul_no_rewrite(&rest_expr, &rule.replacement);
                        cur = self.add_raw(&cur, &replaced);
                        continue 'outer;
                    }
                }
            }
            break;
        }
        cur
    }

    fn add_raw(&self, a: &Expr, b: &Expr) -> Expr {
        self.add(a, b)
    }

    fn mul_no_rewrite(&self, a: &Expr, b: &Expr) -> Expr {
        self.mul(a, b)
    }

    pub fn is_zero(&self, e: &Expr) -> bool {
        self.normalize(e).terms.is_empty()
    }

    // ---- calculus ----

    /// Partial derivative w.r.t. a declared symbol. Linear, satisfies the
    /// product rule; on abstract-function instances it increments the
    /// derivative multi-index when `s` is an argument, else contributes 0.
    pub fn differentiate(&self, e: &Expr, s: SymbolId) -> Expr {
        let rank = self.rank_of(s);
        let mut out = Expr::default();
        for (k, c) in &e.terms {
            // symbol power parts
            for (idx, &(r, p)) in k.powers.iter().enumerate() {
                if r != rank {
                    continue;
                }
                let mut powers = k.powers.clone();
                if p == 1 {
                    powers.remove(idx);
                } else {
                    powers[idx] = (r, p - 1);
                }
                let key = TermKey {
                    params: k.params.clone(),
                    powers,
                    fns: k.fns.clone(),
                };
                let coeff = c.mul(&Coeff::from_int(p as i64));
                let entry = out.terms.entry(key).or_insert_with(Coeff::zero);
                *entry = entry.add(&coeff);
            }
            // abstract function parts
            for (i, inst) in k.fns.iter().enumerate() {
                let decl = self.table.fn_decl(inst.fn_id);
                let Some(pos) = decl.args.iter().position(|&a| a == s) else {
                    continue;
                };
                let mut fns = k.fns.clone();
                fns[i].deriv[pos] += 1;
                fns.sort();
                let key = TermKey {
                    params: k.params.clone(),
                    powers: k.powers.clone(),
                    fns,
                };
                let entry = out.terms.entry(key).or_insert_with(Coeff::zero);
                *entry = entry.add(c);
            }
        }
        out.terms.retain(|_, c| !c.is_zero());
        self.normalize(&out)
    }

    // ---- substitution ----

    /// Simultaneous substitution of symbols and abstract functions, followed
    /// by normalize. Function bindings replace derivative instances by the
    /// corresponding derivatives of the replacement expression.
    pub fn substitute(&self, e: &Expr, binding: &Binding) -> Result<Expr, ExprError> {
        binding.check_acyclic(self)?;
        let mut out = Expr::default();
        for (k, c) in &e.terms {
            let mut term = self.from_coeff(c.clone());
            term = self.mul(
                &term,
                &self.param(k.params.clone()),
            );
            for &(r, p) in &k.powers {
                let id = self.table.id_at_rank(r);
                let factor = match binding.symbols.get(&id) {
                    Some(rep) => rep.clone(),
                    None => self.sym(id),
                };
                term = self.mul(&term, &self.pow(&factor, p));
            }
            for inst in &k.fns {
                let factor = match binding.fns.get(&inst.fn_id) {
                    Some(rep) => {
                        // derivative instance -> derivative of the replacement
                        let decl = self.table.fn_decl(inst.fn_id);
                        let mut rep = rep.clone();
                        for (pos, &ord) in inst.deriv.iter().enumerate() {
                            for _ in 0..ord {
                                rep = self.differentiate(&rep, decl.args[pos]);
                            }
                        }
                        rep
                    }
                    None => self.fn_instance(inst.clone()),
                };
                term = self.mul(&term, &factor);
            }
            out = self.add(&out, &term);
        }
        Ok(self.normalize(&out))
    }

    // ---- support ----

    pub fn support_symbols(&self, e: &Expr) -> BTreeSet<SymbolId> {
        let mut s = BTreeSet::new();
        for k in e.terms.keys() {
            for &(r, _) in &k.powers {
                s.insert(self.table.id_at_rank(r));
            }
        }
        s
    }

    pub fn support_fns(&self, e: &Expr) -> BTreeSet<FnId> {
        let mut s = BTreeSet::new();
        for k in e.terms.keys() {
            for f in &k.fns {
                s.insert(f.fn_id);
            }
        }
        s
    }

    /// Coefficient of `sym^1` treating the rest of the term as coefficient;
    /// only terms linear in `sym` are collected (used by sector collection).
    pub fn coefficient_of_linear(&self, e: &Expr, s: SymbolId) -> Expr {
        let rank = self.rank_of(s);
        let mut out = Expr::default();
        for (k, c) in &e.terms {
            if k.pow_of(rank) == 1 {
                let rest = k.divide_pattern(&[(rank, 1)]);
                out.terms.insert(rest, c.clone());
            }
        }
        out
    }

    /// Split `e` into (part free of all `syms`, part containing any of them).
    pub fn split_by_symbols(&self, e: &Expr, syms: &BTreeSet<SymbolId>) -> (Expr, Expr) {
        let ranks: BTreeSet<u32> = syms.iter().map(|&s| self.rank_of(s)).collect();
        let mut free = Expr::default();
        let mut dep = Expr::default();
        for (k, c) in &e.terms {
            if k.powers.iter().any(|&(r, _)| ranks.contains(&r)) {
                dep.terms.insert(k.clone(), c.clone());
            } else {
                free.terms.insert(k.clone(), c.clone());
            }
        }
        (free, dep)
    }

    // ---- printing ----

    pub fn print(&self, e: &Expr) -> String {
        if e.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (k, c)) in e.terms.iter().rev().enumerate() {
            let mut mag = c.clone();
            let negative = mag.im.is_zero() && mag.re < num::BigRational::from_integer(0.into());
            if negative {
                mag = mag.neg();
            }
            if i == 0 {
                if negative {
                    out.push         ('-');
                }
            } else if negative {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            let mut factors: Vec<String> = Vec::new();
            if !mag.is_one() || (k.powers.is_empty() && k.fns.is_empty() && k.params.is_unit()) {
                factors.push(format!("{}", mag));
            }
            if !k.params.is_unit() {
                factors.push(self.print_params(&k.params));
            }
            for &(r, p) in &k.powers {
                let name = self.table.name(self.table.id_at_rank(r));
                if p == 1 {
                    factors.push(name.to_string());
                } else {
                    factors.push(format!("{name}^{p}"));
                }
            }
            for f in &k.fns {
                factors.push(self.print_fn_instance(f));
            }
            out.push_str(&factors.join("*"));
        }
        out
    }

    fn print_params(&self, p: &ParamPow) -> String {
        let mut parts: Vec<String> = Vec::new();
        if p.zeta > 0 {
            parts.push(if p.zeta == 1 {
                "zeta".into()
            } else {
                format!("zeta^{}", p.zeta)
            });
        }
        if p.kappa > 0 {
            let pairs = p.kappa / 2;
            let odd = p.kappa % 2 == 1;
            if odd {
                parts.push("kappa".into());
            }
            if pairs == 1 {
                parts.push("k2".into());
            } else if pairs > 1 {
                parts.push(format!("k2^{pairs}"));
            }
        }
        if p.eps2 > 0 {
            parts.push(if p.eps2 == 1 {
                "eps2".into()
            } else {
                format!("eps2^{}", p.eps2)
            });
        }
        parts.join("*")
    }

    pub fn print_fn_instance(&self, f: &FnInstance) -> String {
        let decl = self.table.fn_decl(f.fn_id);
        let mut s = decl.name.clone();
        for (pos, &ord) in f.deriv.iter().enumerate() {
            for _ in 0..ord {
                let _ = write!(s, "_d{{{}}}", self.table.name(decl.args[pos]));
            }
        }
        let args: Vec<&str> = decl.args.iter().map(|&a| self.table.name(a)).collect();
        let _ = write!(s, "({})", args.join(","));
        s
    }
}

/// Simultaneous substitution data.
#[derive(Clone, Debug, Default)]
pub struct Binding {
    pub symbols: BTreeMap<SymbolId, Expr>,
    pub fns: BTreeMap<FnId, Expr>,
}

impl Binding {
    pub fn new() -> Self {
        Binding::default()
    }

    pub fn bind_symbol(mut self, s: SymbolId, e: Expr) -> Self {
        self.symbols.insert(s, e);
        self
    }

    pub fn bind_fn(mut self, f: FnId, e: Expr) -> Self {
        self.fns.insert(f, e);
        self
    }

    /// Conservative acyclicity: no replacement may mention a bound key.
    fn check_acyclic(&self, ctx: &ExprCtx) -> Result<(), ExprError> {
        for (id, rep) in &self.symbols {
            let sup = ctx.support_symbols(rep);
            if sup.iter().any(|s| self.symbols.contains_key(s)) {
                return Err(ExprError::CyclicBinding(ctx.table.name(*id).to_string()));
            }
            let fsup = ctx.support_fns(rep);
            if fsup.iter().any(|f| self.fns.contains_key(f)) {
                return Err(ExprError::CyclicBinding(ctx.table.name(*id).to_string()));
            }
        }
        for (fid, rep) in &self.fns {
            let fsup = ctx.support_fns(rep);
            if fsup.iter().any(|f| self.fns.contains_key(f)) {
                return Err(ExprError::CyclicBinding(
                    ctx.table.fn_name(*fid).to_string(),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::SymbolRole;

    fn ctx() -> (ExprCtx, SymbolId, SymbolId) {
        let mut t = SymbolTable::new();
        let s1 = t.declare("S1", SymbolRole::FibreVariable, Some(1)).unwrap();
        let s2 = t.declare("S2", SymbolRole::FibreVariable, Some(2)).unwrap();
        t.freeze();
        (ExprCtx::new(t, ParamRing::default()), s1, s2)
    }

    #[test]
    fn commutativity_cancels() {
        let (c, s1, s2) = ctx();
        let a = c.mul(&c.sym(s1), &c.sym(s2));
        let b = c.mul(&c.sym(s2), &c.sym(s1));
        assert!(c.is_zero(&c.sub(&a, &b)));
    }

    #[test]
    fn binomial_identity() {
        let (c, s1, s2) = ctx();
        let sum = c.add(&c.sym(s1), &c.sym(s2));
        let sq = c.pow(&sum, 2);
        let expand = c.add(
            &c.add(&c.pow(&c.sym(s1), 2), &c.pow(&c.sym(s2), 2)),
            &c.scale(&c.mul(&c.sym(s1), &c.sym(s2)), &Coeff::from_int(2)),
        );
        assert!(c.is_zero(&c.sub(&sq, &expand)));
    }

    #[test]
    fn power_rule() {
        let (c, s1, s2) = ctx();
        // d(S1^2 S2)/dS1 = 2 S1 S2
        let e = c.mul(&c.pow(&c.sym(s1), 2), &c.sym(s2));
        let d = c.differentiate(&e, s1);
        let expect = c.scale(&c.mul(&c.sym(s1), &c.sym(s2)), &Coeff::from_int(2));
        assert_eq!(d, expect);
    }
}
