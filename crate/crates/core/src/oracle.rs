//! Seeded floating-point oracle.
//!
//! Every symbolic-zero claim is re-checked numerically at random points.
//! The point stream is generated by splitmix64 (a public PRNG with 64-bit
//! state), indexed as `f(seed, point index)`, so parallel evaluation order
//! cannot change verdicts and identical seeds give bit-identical streams.
//! Abstract functions are instantiated as random polynomials of degree at
//! most two in each declared argument; their derivative instances evaluate
//! as derivatives of that polynomial. The oracle is one-directional:
//! symbolic zero must imply numeric zero, never the converse.

use crate::error::OracleError;
use crate::expr::{Expr, ExprCtx, FnInstance};
use crate::liealg::LieValued;
use crate::param::{rational_to_f64, SquareValue};
use crate::symbol::{FnId, SymbolId, SymbolRole};
use std::collections::BTreeMap;

/// splitmix64 step.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Uniform in [-1, 1].
fn unit_sample(state: &mut u64) -> f64 {
    let u = splitmix64(state);
    (u >> 11) as f64 / ((1u64 << 53) as f64) * 2.0 - 1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct C64 {
    pub re: f64,
    pub im: f64,
}

impl C64 {
    pub fn new(re: f64, im: f64) -> Self {
        C64 { re, im }
    }

    pub fn add(self, o: C64) -> C64 {
        C64::new(self.re + o.re, self.im + o.im)
    }

    pub fn mul(self, o: C64) -> C64 {
        C64::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }

    pub fn scale(self, s: f64) -> C64 {
        C64::new(self.re * s, self.im * s)
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn powu(self, mut n: u32) -> C64 {
        let mut acc = C64::new(1.0, 0.0);
        let mut base = self;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            n >>= 1;
        }
        acc
    }
}

/// Random degree-<=2 polynomial in the declared arguments: monomial
/// exponent vector -> complex coefficient.
#[derive(Clone, Debug)]
pub struct PolyInstance {
    pub coeffs: Vec<(Vec<u32>, C64)>,
}

impl PolyInstance {
    fn random(arity: usize, state: &mut u64, complex: bool) -> Self {
        let mut coeffs = Vec::new();
        // sparse instantiation: constant, each linear, a few quadratics
        let mut push = |exps: Vec<u32>, state: &mut u64| {
            let re = unit_sample(state);
            let im = if complex { unit_sample(state) } else { 0.0 };
            coeffs.push((exps, C64::new(re, im)));
        };
        push(vec![0; arity], state);
        for k in 0..arity {
            let mut e = vec![0; arity];
            e[k] = 1;
            push(e, state);
        }
        for k in 0..arity {
            let mut e = vec![0; arity];
            e[k] = 2;
            push(e, state);
            if k + 1 < arity {
                let mut e2 = vec![0; arity];
                e2[k] = 1;
                e2[k + 1] = 1;
                push(e2, state);
            }
        }
        PolyInstance { coeffs }
    }

    /// Evaluate the partial derivative with multi-index `deriv` at `args`.
    fn eval_deriv(&self, deriv: &[u32], args: &[C64]) -> C64 {
        let mut acc = C64::default();
        'terms: for (exps, c) in &self.coeffs {
            let mut factor = 1.0;
            let mut rem: Vec<u32> = exps.clone();
            for (k, &d) in deriv.iter().enumerate() {
                if rem[k] < d {
                    continue 'terms;
                }
                for j in 0..d {
                    factor *= (rem[k] - j) as f64;
                }
                rem[k] -= d;
            }
            let mut term = c.scale(factor);
            for (k, &e) in rem.iter().enumerate() {
                term = term.mul(args[k].powu(e));
            }
            acc = acc.add(term);
        }
        acc
    }
}

/// One fully bound evaluation point.
#[derive(Clone, Debug)]
pub struct EvaluationPoint {
    pub symbols: BTreeMap<SymbolId, C64>,
    pub fns: BTreeMap<FnId, PolyInstance>,
    pub kappa2: f64,
    pub eps2: f64,
    /// square root of kappa2 used for the bare parameter
    pub kappa: C64,
    pub zeta: C64,
}

/// Point-stream configuration. When `constrain` names the spin components
/// (and optionally tangent pairs), samples are projected onto the variety
/// `Sigma S . S = kappa^2`, `Sigma S . P = 0`, `Sigma S . Q = 0`.
#[derive(Clone, Debug, Default)]
pub struct SampleSpec {
    /// (S1,S2,S3) component symbols, if the problem has the spin constraint
    pub spin: Option<[SymbolId; 3]>,
    /// vectors to be projected tangent to the spin sphere/hyperboloid
    pub tangents: Vec<[SymbolId; 3]>,
    pub complex: bool,
}

pub struct Oracle<'a> {
    pub ctx: &'a ExprCtx,
    pub seed: u64,
    pub spec: SampleSpec,
}

impl<'a> Oracle<'a> {
    pub fn new(ctx: &'a ExprCtx, seed: u64) -> Self {
        Oracle {
            ctx,
            seed,
            spec: SampleSpec::default(),
        }
    }

    /// Deterministic point `index` of the stream for `seed`.
    pub fn point(&self, index: u64) -> EvaluationPoint {
        let mut state = self
            .seed
            .wrapping_mul(0x9E3779B97F4A7C15)
            .wrapping_add(index.wrapping_mul(0xD1B54A32D192ED03))
            .wrapping_add(0x853C49E6748FEA9B);
        // burn a few outputs to decorrelate close seeds
        for _ in 0..4 {
            splitmix64(&mut state);
        }
        let kappa2 = match self.ctx.ring.kappa2 {
            SquareValue::Minus => -1.0,
            _ => 1.0,
        };
        let eps2 = match self.ctx.ring.eps2 {
            SquareValue::Minus => -1.0,
            _ => 1.0,
        };
        let kappa = if kappa2 >= 0.0 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 1.0)
        };
        let mut symbols = BTreeMap::new();
        for id in self.ctx.table.ids() {
            let role = self.ctx.table.symbol(id).role;
            if role == SymbolRole::Parameter {
                continue;
            }
            let re = unit_sample(&mut state);
            let im = if self.spec.complex {
                unit_sample(&mut state)
            } else {
                0.0
            };
            symbols.insert(id, C64::new(re, im));
        }
        // project onto the constraint variety when requested
        if let Some(spin) = self.spec.spin {
            let s1 = symbols[&spin[0]].re;
            let s2 = symbols[&spin[1]].re;
            if kappa2 > 0.0 {
                // sphere S1^2 + S2^2 + S3^2 = 1
                let mut s3 = symbols[&spin[2]].re;
                let mut n = (s1 * s1 + s2 * s2 + s3 * s3).sqrt();
                if n < 1e-6 {
                    s3 = 1.0;
                    n = 1.0;
                }
                symbols.insert(spin[0], C64::new(s1 / n, 0.0));
                symbols.insert(spin[1], C64::new(s2 / n, 0.0));
                symbols.insert(spin[2], C64::new(s3 / n, 0.0));
            } else {
                // hyperboloid sheet S3 >= 1: S1^2 + S2^2 - S3^2 = -1
                let s3 = (1.0 + s1 * s1 + s2 * s2).sqrt();
                symbols.insert(spin[0], C64::new(s1, 0.0));
                symbols.insert(spin[1], C64::new(s2, 0.0));
                symbols.insert(spin[2], C64::new(s3, 0.0));
            }
            let sv = [
                symbols[&spin[0]],
                symbols[&spin[1]],
                symbols[&spin[2]],
            ];
            for tan in &self.spec.tangents {
                // v -> v - kappa2 * (Sigma S . v) S keeps Sigma S . v' = 0
                let v = [symbols[&tan[0]], symbols[&tan[1]], symbols[&tan[2]]];
                let sigma_dot =
                    sv[0].re * v[0].re + sv[1].re * v[1].re + kappa2 * sv[2].re * v[2].re;
                for k in 0..3 {
                    let adj = v[k].re - kappa2 * sigma_dot * sv[k].re;
                    symbols.insert(tan[k], C64::new(adj, v[k].im));
                }
            }
        }
        let mut fns = BTreeMap::new();
        for f in self.ctx.table.fn_ids() {
            let arity = self.ctx.table.fn_decl(f).args.len();
            fns.insert(f, PolyInstance::random(arity, &mut state, self.spec.complex));
        }
        let zeta = C64::new(unit_sample(&mut state), unit_sample(&mut state));
        EvaluationPoint {
            symbols,
            fns,
            kappa2,
            eps2,
            kappa,
            zeta,
        }
    }

    pub fn eval_expr(&self, e: &Expr, p: &EvaluationPoint) -> Result<C64, OracleError> {
        let ctx = self.ctx;
        let mut acc = C64::default();
        for (k, c) in &e.terms {
            let mut term = C64::new(rational_to_f64(&c.re), rational_to_f64(&c.im));
            term = term.mul(p.zeta.powu(k.params.zeta));
            term = term.mul(p.kappa.powu(k.params.kappa));
            term = term.mul(C64::new(p.eps2, 0.0).powu(k.params.eps2));
            for &(rank, pow) in &k.powers {
                let id = ctx.table.id_at_rank(rank);
                let v = p
                    .symbols
                    .get(&id)
                    .copied()
                    .ok_or_else(|| OracleError::UnboundSymbol(ctx.table.name(id).into()))?;
                term = term.mul(v.powu(pow));
            }
            for inst in &k.fns {
                term = term.mul(self.eval_fn(inst, p)?);
            }
            acc = acc.add(term);
        }
        Ok(acc)
    }

    fn eval_fn(&self, inst: &FnInstance, p: &EvaluationPoint) -> Result<C64, OracleError> {
        let decl = self.ctx.table.fn_decl(inst.fn_id);
        let poly = p
            .fns
            .get(&inst.fn_id)
            .ok_or_else(|| OracleError::UnboundFn(decl.name.clone()))?;
        let mut args = Vec::with_capacity(decl.args.len());
        for &a in &decl.args {
            let v = p
                .symbols
                .get(&a)
                .copied()
                .ok_or_else(|| OracleError::UnboundSymbol(self.ctx.table.name(a).into()))?;
            args.push(v);
        }
        Ok(poly.eval_deriv(&inst.deriv, &args))
    }

    /// Largest term magnitude, for the condition-aware tolerance scale.
    fn largest_term(&self, e: &Expr, p: &EvaluationPoint) -> f64 {
        let mut max = 0.0f64;
        for (k, c) in &e.terms {
            let mut single = Expr::default();
            single.terms.insert(k.clone(), c.clone());
            if let Ok(v) = self.eval_expr(&single, p) {
                max = max.max(v.abs());
            }
        }
        max
    }
}

/// Outcome of a randomized zero test.
#[derive(Clone, Debug)]
pub struct ZeroVerdict {
    pub target: String,
    pub points: u64,
    pub tol: f64,
    pub max_abs: f64,
    pub zero_consistent: bool,
    /// index of the first offending point, if any
    pub witness: Option<u64>,
}

/// Zero-testable payloads.
pub enum ZeroTarget<'t> {
    Expr(&'t Expr),
    /// tested coefficient-wise per Lyndon word
    Lie(&'t LieValued),
    Form(&'t crate::exterior::DifferentialForm),
}

pub fn random_zero_test(
    oracle: &Oracle,
    name: &str,
    target: ZeroTarget,
    n: u64,
    tol: f64,
) -> Result<ZeroVerdict, OracleError> {
    assert!(n >= 1);
    let exprs: Vec<&Expr> = match &target {
        ZeroTarget::Expr(e) => vec![e],
        ZeroTarget::Lie(l) => l.terms.values().collect(),
        ZeroTarget::Form(f) => f.comps.values().collect(),
    };
    let mut max_abs = 0.0f64;
    let mut witness = None;
    for idx in 0..n {
        let p = oracle.point(idx);
        for e in &exprs {
            let v = oracle.eval_expr(e, &p)?.abs();
            let scale = 1.0 + oracle.largest_term(e, &p);
            let rel = v / scale;
            if rel > max_abs {
                max_abs = rel;
            }
            if rel >= tol && witness.is_none() {
                witness = Some(idx);
            }
        }
    }
    Ok(ZeroVerdict {
        target: name.to_string(),
        points: n,
        tol,
        max_abs,
        zero_consistent: witness.is_none(),
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::ParamRing;
    use crate::symbol::SymbolTable;

    fn ctx() -> (ExprCtx, SymbolId) {
        let mut t = SymbolTable::new();
        let s1 = t.declare("S1", SymbolRole::FibreVariable, Some(1)).unwrap();
        t.freeze();
        (ExprCtx::new(t, ParamRing::default()), s1)
    }

    #[test]
    fn determinism() {
        let (c, s1) = ctx();
        let o1 = Oracle::new(&c, 42);
        let o2 = Oracle::new(&c, 42);
        let e = c.pow(&c.sym(s1), 3);
        let a = o1.eval_expr(&e, &o1.point(7)).unwrap();
        let b = o2.eval_expr(&e, &o2.point(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_expr_is_zero_consistent() {
        let (c, _) = ctx();
        let o = Oracle::new(&c, 1);
        let z = c.zero();
        let v = random_zero_test(&o, "zero", ZeroTarget::Expr(&z), 10, 1e-9).unwrap();
        assert!(v.zero_consistent);
    }

    #[test]
    fn nonzero_polynomial_fails_with_witness() {
        let (c, s1) = ctx();
        let o = Oracle::new(&c, 5);
        let e = c.sym(s1);
        let v = random_zero_test(&o, "S1", ZeroTarget::Expr(&e), 100, 1e-9).unwrap();
        assert!(!v.zero_consistent);
        assert!(v.witness.is_some());
    }

    #[test]
    fn simplification_is_numerically_sound() {
        let (c, s1) = ctx();
        let o = Oracle::new(&c, 9);
        // (S1+1)^2 - S1^2 - 2S1 - 1 == 0
        let e = c.sub(
            &c.pow(&c.add(&c.sym(s1), &c.one()), 2),
            &c.add(
                &c.add(&c.pow(&c.sym(s1), 2), &c.scale(&c.sym(s1), &crate::param::Coeff::from_int(2))),
                &c.one(),
            ),
        );
        let v = random_zero_test(&o, "binomial", ZeroTarget::Expr(&e), 50, 1e-9).unwrap();
        assert!(v.zero_consistent);
    }
}
