//! 3-vectors of scalar expressions and the diagonal spin metric.

use crate::expr::{Expr, ExprCtx};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vec3(pub [Expr; 3]);

impl Vec3 {
    pub fn new(a: Expr, b: Expr, c: Expr) -> Self {
        Vec3([a, b, c])
    }

    pub fn zero(ctx: &ExprCtx) -> Self {
        Vec3([ctx.zero(), ctx.zero(), ctx.zero()])
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Vec3 {
        Vec3([f(&self.0[0]), f(&self.0[1]), f(&self.0[2])])
    }
}

/// Diagonal metric diag(1, 1, kappa^2). Entries are parameter monomials;
/// applying it twice is the identity under kappa^4 = 1.
#[derive(Clone, Debug)]
pub struct Metric;

impl Metric {
    pub fn entry(ctx: &ExprCtx, i: usize) -> Expr {
        match i {
            0 | 1 => ctx.one(),
            2 => ctx.kappa2(),
            _ => unreachable!("metric index out of range"),
        }
    }

    pub fn apply(ctx: &ExprCtx, v: &Vec3) -> Vec3 {
        Vec3([
            v.0[0].clone(),
            v.0[1].clone(),
            ctx.mul(&Metric::entry(ctx, 2), &v.0[2]),
        ])
    }
}

pub fn add(ctx: &ExprCtx, a: &Vec3, b: &Vec3) -> Vec3 {
    Vec3([
        ctx.add(&a.0[0], &b.0[0]),
        ctx.add(&a.0[1], &b.0[1]),
        ctx.add(&a.0[2], &b.0[2]),
    ])
}

pub fn scale(ctx: &ExprCtx, e: &Expr, v: &Vec3) -> Vec3 {
    v.map(|c| ctx.mul(e, c))
}

pub fn dot(ctx: &ExprCtx, a: &Vec3, b: &Vec3) -> Expr {
    let mut acc = ctx.zero();
    for i in 0..3 {
        acc = ctx.add(&acc, &ctx.mul(&a.0[i], &b.0[i]));
    }
    ctx.normalize(&acc)
}

/// `sum_i sigma_i a_i b_i` with sigma = (1, 1, kappa^2).
pub fn metric_dot(ctx: &ExprCtx, a: &Vec3, b: &Vec3) -> Expr {
    let mut acc = ctx.zero();
    for i in 0..3 {
        let m = Metric::entry(ctx, i);
        acc = ctx.add(&acc, &ctx.mul(&m, &ctx.mul(&a.0[i], &b.0[i])));
    }
    ctx.normalize(&acc)
}

/// Componentwise Levi-Civita product with eps_{123} = +1.
pub fn cross(ctx: &ExprCtx, a: &Vec3, b: &Vec3) -> Vec3 {
    let c0 = ctx.sub(
        &ctx.mul(&a.0[1], &b.0[2]),
        &ctx.mul(&a.0[2], &b.0[1]),
    );
    let c1 = ctx.sub(
        &ctx.mul(&a.0[2], &b.0[0]),
        &ctx.mul(&a.0[0], &b.0[2]),
    );
    let c2 = ctx.sub(
        &ctx.mul(&a.0[0], &b.0[1]),
        &ctx.mul(&a.0[1], &b.0[0]),
    );
    Vec3([ctx.normalize(&c0), ctx.normalize(&c1), ctx.normalize(&c2)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::ParamRing;
    use crate::symbol::{SymbolRole, SymbolTable};

    fn ctx() -> (ExprCtx, Vec3, Vec3) {
        let mut t = SymbolTable::new();
        let mut s = Vec::new();
        let mut p = Vec::new();
        for i in 1..=3 {
            s.push(
                t.declare(&format!("S{i}"), SymbolRole::FibreVariable, Some(i as u8))
                    .unwrap(),
            );
        }
        for i in 1..=3 {
            p.push(
                t.declare(&format!("P{i}"), SymbolRole::JetVariable, Some(i as u8))
                    .unwrap(),
            );
        }
        t.freeze();
        let ctx = ExprCtx::new(t, ParamRing::default());
        let sv = Vec3::new(ctx.sym(s[0]), ctx.sym(s[1]), ctx.sym(s[2]));
        let pv = Vec3::new(ctx.sym(p[0]), ctx.sym(p[1]), ctx.sym(p[2]));
        (ctx, sv, pv)
    }

    #[test]
    fn basis_cross() {
        let (c, _, _) = ctx();
        let e1 = Vec3::new(c.one(), c.zero(), c.zero());
        let e2 = Vec3::new(c.zero(), c.one(), c.zero());
        let e3 = Vec3::new(c.zero(), c.zero(), c.one());
        assert_eq!(cross(&c, &e1, &e2), e3);
    }

    #[test]
    fn cross_self_vanishes() {
        let (c, s, _) = ctx();
        let x = cross(&c, &s, &s);
        assert!(x.0.iter().all(|e| e.terms.is_empty()));
    }

    #[test]
    fn scalar_triple_product() {
        let (c, s, p) = ctx();
        let t = dot(&c, &s, &cross(&c, &s, &p));
        assert!(c.is_zero(&t));
    }

    #[test]
    fn metric_dot_shape() {
        let (c, s, _) = ctx();
        let e = metric_dot(&c, &s, &s);
        assert_eq!(c.print(&e), "S1^2 + S2^2 + k2*S3^2");
    }
}
