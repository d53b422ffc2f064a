//! Free Lie algebra over the generators {X1 < X2 < X3 < Y < Z < K} in the
//! Lyndon basis, Lie-valued expressions with scalar `Expr` coefficients,
//! and the two concrete targets: sl(2,C) with formal `zeta`, and the
//! Z-graded loop algebra `[T_i^(m), T_j^(n)] = i eps_ijk T_k^(m+n)`.
//!
//! Normalization works through the tensor envelope: a bracket tree is
//! expanded into associative words and peeled greedily against the
//! triangular expansion of Lyndon standard bracketings. Antisymmetry and
//! the Jacobi identity are therefore not representable; they are the
//! kernel of the expansion.

use crate::error::ProlongError;
use crate::expr::{Expr, ExprCtx};
use crate::param::Coeff;
use std::collections::BTreeMap;
use std::fmt;

/// Generator index; the declared order is the Lyndon alphabet order.
pub type Gen = u8;

pub const GEN_NAMES: [&str; 6] = ["X1", "X2", "X3", "Y", "Z", "K"];

pub fn gen_by_name(name: &str) -> Option<Gen> {
    GEN_NAMES.iter().position(|&n| n == name).map(|i| i as Gen)
}

/// True iff `w` is a Lyndon word (nonempty, strictly least among its
/// proper suffixes).
pub fn is_lyndon(w: &[Gen]) -> bool {
    if w.is_empty() {
        return false;
    }
    for k in 1..w.len() {
        if w[k..] <= *w {
            return false;
        }
    }
    true
}

/// All Lyndon words over `alphabet_size` letters with length in
/// `1..=max_len`, in lexicographic order (Duval's generation).
pub fn lyndon_words(alphabet_size: u8, max_len: usize) -> Vec<Vec<Gen>> {
    let mut out = Vec::new();
    let mut w: Vec<Gen> = vec![0];
    loop {
        if w.len() <= max_len {
            out.push(w.clone());
        }
        // extend periodically to max_len
        let base = w.clone();
        while w.len() < max_len {
            let c = base[(w.len()) % base.len()];
            w.push(c);
        }
        // increment last non-maximal letter
        while let Some(&last) = w.last() {
            if last == alphabet_size - 1 {
                w.pop();
            } else {
                break;
            }
        }
        if w.is_empty() {
            break;
        }
        *w.last_mut().unwrap() += 1;
        out.sort();
        if false {
            break;
        }
        if w.len() == 1 && w[0] >= alphabet_size {
            break;
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    out.dedup();
    out
}

/// Chen-Fox-Lyndon standard factorization `w = u v`: `v` is the
/// lexicographically least proper suffix.
pub fn standard_factorization(w: &[Gen]) -> (Vec<Gen>, Vec<Gen>) {
    debug_assert!(w.len() >= 2 && is_lyndon(w));
    let mut best = 1;
    for k in 2..w.len() {
        if w[k..] < w[best..] {
            best = k;
        }
    }
    (w[..best].to_vec(), w[best..].to_vec())
}

/// Lie element in the Lyndon basis: Lyndon word -> scalar coefficient.
/// With parameter-only coefficients this is a free-Lie-algebra element;
/// with general `Expr` coefficients it is a Lie-valued expression.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LieValued {
    pub terms: BTreeMap<Vec<Gen>, Expr>,
}

impl LieValued {
    pub fn zero() -> Self {
        LieValued::default()
    }

    pub fn generator(ctx: &ExprCtx, g: Gen) -> Self {
        let mut e = LieValued::default();
        e.terms.insert(vec![g], ctx.one());
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_word_len(&self) -> usize {
        self.terms.keys().map(|w| w.len()).max().unwrap_or(0)
    }
}

/// Associative (tensor) words with scalar coefficients; the computational
/// envelope for Lyndon normalization.
#[derive(Clone, Debug, Default)]
struct Tensor {
    terms: BTreeMap<Vec<Gen>, Expr>,
}

impl Tensor {
    fn add_term(&mut self, ctx: &ExprCtx, w: Vec<Gen>, c: Expr) {
        let entry = self.terms.entry(w).or_insert_with(|| ctx.zero());
        *entry = ctx.add(entry, &c);
        if entry.terms.is_empty() {
            // remove below; BTreeMap entry API holds the borrow
        }
    }

    fn cleanup(&mut self) {
        self.terms.retain(|_, e| !e.terms.is_empty());
    }

    fn concat_mul(ctx: &ExprCtx, a: &Tensor, b: &Tensor) -> Tensor {
        let mut out = Tensor::default();
        for (wa, ca) in &a.terms {
            for (wb, cb) in &b.terms {
                let mut w = wa.clone();
                w.extend_from_slice(wb);
                out.add_term(ctx, w, ctx.mul(ca, cb));
            }
        }
        out.cleanup();
        out
    }

    fn commutator(ctx: &ExprCtx, a: &Tensor, b: &Tensor) -> Tensor {
        let ab = Tensor::concat_mul(ctx, a, b);
        let ba = Tensor::concat_mul(ctx, b, a);
        let mut out = ab;
        for (w, c) in ba.terms {
            out.add_term(ctx, w, ctx.neg(&c));
        }
        out.cleanup();
        out
    }
}

/// Tensor expansion of the standard bracketing of a Lyndon word.
fn bracketing_tensor(ctx: &ExprCtx, w: &[Gen]) -> Tensor {
    if w.len() == 1 {
        let mut t = Tensor::default();
        t.terms.insert(w.to_vec(), ctx.one());
        return t;
    }
    let (u, v) = standard_factorization(w);
    let tu = bracketing_tensor(ctx, &u);
    let tv = bracketing_tensor(ctx, &v);
    Tensor::commutator(ctx, &tu, &tv)
}

fn lie_to_tensor(ctx: &ExprCtx, e: &LieValued) -> Tensor {
    let mut out = Tensor::default();
    for (w, c) in &e.terms {
        let bt = bracketing_tensor(ctx, w);
        for (tw, tc) in &bt.terms {
            out.add_term(ctx, tw.clone(), ctx.mul(c, tc));
        }
    }
    out.cleanup();
    out
}

/// Greedy triangular decomposition of a Lie element given in tensor form.
/// Panics if the input is not a Lie element (internal invariant).
fn tensor_to_lie(ctx: &ExprCtx, mut t: Tensor) -> LieValued {
    let mut out = LieValued::zero();
    let mut guard = 0usize;
    while let Some((w, c)) = t
        .terms
        .iter()
        .min_by(|(wa, _), (wb, _)| wa.len().cmp(&wb.len()).then(wa.cmp(wb)))
        .map(|(w, c)| (w.clone(), c.clone()))
    {
        guard += 1;
        assert!(guard < 100_000, "lyndon decomposition did not terminate");
        assert!(
            is_lyndon(&w),
            "leading word {:?} is not Lyndon; input was not a Lie element",
            w
        );
        let bt = bracketing_tensor(ctx, &w);
        for (tw, tc) in &bt.terms {
            t.add_term(ctx, tw.clone(), ctx.neg(&ctx.mul(&c, tc)));
        }
        t.cleanup();
        let entry = out.terms.entry(w).or_insert_with(|| ctx.zero());
        *entry = ctx.add(entry, &c);
    }
    out.terms.retain(|_, e| !e.terms.is_empty());
    out
}

impl ExprCtx {
    pub fn lie_add(&self, a: &LieValued, b: &LieValued) -> LieValued {
        let mut out = a.clone();
        for (w, c) in &b.terms {
            let entry = out.terms.entry(w.clone()).or_insert_with(|| self.zero());
            *entry = self.add(entry, c);
        }
        out.terms.retain(|_, e| !e.terms.is_empty());
        out
    }

    pub fn lie_neg(&self, a: &LieValued) -> LieValued {
        let mut out = a.clone();
        for c in out.terms.values_mut() {
            *c = self.neg(c);
        }
        out
    }

    pub fn lie_sub(&self, a: &LieValued, b: &LieValued) -> LieValued {
        self.lie_add(a, &self.lie_neg(b))
    }

    pub fn lie_scale(&self, e: &Expr, a: &LieValued) -> LieValued {
        let mut out = LieValued::zero();
        for (w, c) in &a.terms {
            let v = self.normalize(&self.mul(e, c));
            if !v.terms.is_empty() {
                out.terms.insert(w.clone(), v);
            }
        }
        out
    }

    pub fn lie_normalize(&self, a: &LieValued) -> LieValued {
        let mut out = LieValued::zero();
        for (w, c) in &a.terms {
            let v = self.normalize(c);
            if !v.terms.is_empty() {
                out.terms.insert(w.clone(), v);
            }
        }
        out
    }

    /// Bracket, bilinear over scalar coefficients, result in Lyndon normal
    /// form.
    pub fn lie_bracket(&self, a: &LieValued, b: &LieValued) -> LieValued {
        let ta = lie_to_tensor(self, a);
        let tb = lie_to_tensor(self, b);
        let tc = Tensor::commutator(self, &ta, &tb);
        tensor_to_lie(self, tc)
    }

    pub fn print_lie(&self, a: &LieValued) -> String {
        if a.terms.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (w, c) in &a.terms {
            let word = print_word(w);
            let coeff = self.print(c);
            if coeff == "1" {
                parts.push(word);
            } else {
                parts.push(format!("({coeff})*{word}"));
            }
        }
        parts.join(" + ")
    }
}

/// Bracketed rendering of a Lyndon word's standard bracketing.
pub fn print_word(w: &[Gen]) -> String {
    if w.len() == 1 {
        return GEN_NAMES[w[0] as usize].to_string();
    }
    let (u, v) = standard_factorization(w);
    format!("[{},{}]", print_word(&u), print_word(&v))
}

// ---------------------------------------------------------------------------
// concrete targets
// ---------------------------------------------------------------------------

/// Element of sl(2,C) on the basis {X1, X2, X3} with structure constants
/// [X1,X2] = 2 i zeta k2 X3, [X1,X3] = -2 i zeta X2, [X2,X3] = 2 i zeta X1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sl2Element(pub [Expr; 3]);

impl Sl2Element {
    pub fn zero(ctx: &ExprCtx) -> Self {
        Sl2Element([ctx.zero(), ctx.zero(), ctx.zero()])
    }

    pub fn basis(ctx: &ExprCtx, i: usize) -> Self {
        let mut e = Self::zero(ctx);
        e.0[i] = ctx.one();
        e
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|e| e.terms.is_empty())
    }
}

pub fn sl2_add(ctx: &ExprCtx, a: &Sl2Element, b: &Sl2Element) -> Sl2Element {
    Sl2Element([
        ctx.add(&a.0[0], &b.0[0]),
        ctx.add(&a.0[1], &b.0[1]),
        ctx.add(&a.0[2], &b.0[2]),
    ])
}

pub fn sl2_scale(ctx: &ExprCtx, c: &Expr, a: &Sl2Element) -> Sl2Element {
    Sl2Element([
        ctx.normalize(&ctx.mul(c, &a.0[0])),
        ctx.normalize(&ctx.mul(c, &a.0[1])),
        ctx.normalize(&ctx.mul(c, &a.0[2])),
    ])
}

/// Bilinear extension of the three structure relations.
pub fn sl2_bracket(ctx: &ExprCtx, a: &Sl2Element, b: &Sl2Element) -> Sl2Element {
    // two_iz = 2 i zeta
    let two_iz = ctx.scale(
        &ctx.param(crate::param::ParamPow {
            zeta: 1,
            kappa: 0,
            eps2: 0,
        }),
        &Coeff::i().mul(&Coeff::from_int(2)),
    );
    let k2 = ctx.kappa2();
    let mut out = Sl2Element::zero(ctx);
    // pair (i,j) -> basis index and factor
    let table: [(usize, usize, usize, bool); 3] = [
        (0, 1, 2, true),  // [X1,X2] = 2 i zeta k2 X3
        (0, 2, 1, false), // [X1,X3] = -2 i zeta X2
        (1, 2, 0, true),  // [X2,X3] = 2 i zeta X1
    ];
    for &(i, j, k, positive) in &table {
        // coefficient a_i b_j - a_j b_i
        let cross = ctx.sub(&ctx.mul(&a.0[i], &b.0[j]), &ctx.mul(&a.0[j], &b.0[i]));
        let mut c = ctx.mul(&two_iz, &cross);
        if i == 0 && j == 1 {
            c = ctx.mul(&c, &k2);
        }
        if !positive {
            c = ctx.neg(&c);
        }
        out.0[k] = ctx.add(&out.0[k], &c);
    }
    Sl2Element([
        ctx.normalize(&out.0[0]),
        ctx.normalize(&out.0[1]),
        ctx.normalize(&out.0[2]),
    ])
}

/// Finitely supported element of the loop algebra: (direction 1..=3, grade)
/// -> coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LoopElement {
    pub terms: BTreeMap<(u8, i64), Expr>,
}

impl LoopElement {
    pub fn zero() -> Self {
        LoopElement::default()
    }

    pub fn basis(ctx: &ExprCtx, i: u8, m: i64) -> Self {
        let mut e = LoopElement::default();
        e.terms.insert((i, m), ctx.one());
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

pub fn loop_add(ctx: &ExprCtx, a: &LoopElement, b: &LoopElement) -> LoopElement {
    let mut out = a.clone();
    for (k, c) in &b.terms {
        let entry = out.terms.entry(*k).or_insert_with(|| ctx.zero());
        *entry = ctx.add(entry, c);
    }
    out.terms.retain(|_, e| !e.terms.is_empty());
    out
}

pub fn loop_scale(ctx: &ExprCtx, c: &Expr, a: &LoopElement) -> LoopElement {
    let mut out = LoopElement::default();
    for (k, v) in &a.terms {
        let w = ctx.normalize(&ctx.mul(c, v));
        if !w.terms.is_empty() {
            out.terms.insert(*k, w);
        }
    }
    out
}

/// Graded bracket `[T_i^(m), T_j^(n)] = i eps_ijk T_k^(m+n)` with
/// eps_123 = +1.
pub fn loop_bracket(ctx: &ExprCtx, a: &LoopElement, b: &LoopElement) -> LoopElement {
    let mut out = LoopElement::default();
    let iunit = ctx.from_coeff(Coeff::i());
    for ((ia, ma), ca) in &a.terms {
        for ((ib, mb), cb) in &b.terms {
            let (k, sign) = match (ia, ib) {
                (1, 2) => (3u8, 1),
                (2, 1) => (3, -1),
                (2, 3) => (1, 1),
                (3, 2) => (1, -1),
                (3, 1) => (2, 1),
                (1, 3) => (2, -1),
                _ => continue,
            };
            let mut c = ctx.mul(&iunit, &ctx.mul(ca, cb));
            if sign < 0 {
                c = ctx.neg(&c);
            }
            let entry = out
                .terms
                .entry((k, ma + mb))
                .or_insert_with(|| ctx.zero());
            *entry = ctx.add(entry, &c);
        }
    }
    out.terms.retain(|_, e| !e.terms.is_empty());
    out
}

// ---------------------------------------------------------------------------
// morphisms and relation checking
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum TargetElement {
    Sl2(Sl2Element),
    Loop(LoopElement),
}

impl TargetElement {
    pub fn is_zero(&self) -> bool {
        match self {
            TargetElement::Sl2(e) => e.is_zero(),
            TargetElement::Loop(e) => e.is_zero(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetKind {
    Sl2,
    Loop,
}

/// Total assignment of the six free generators to target elements.
#[derive(Clone, Debug)]
pub struct MorphismAssignment {
    pub kind: TargetKind,
    pub images: BTreeMap<Gen, TargetElement>,
}

impl MorphismAssignment {
    pub fn image(&self, g: Gen) -> &TargetElement {
        self.images
            .get(&g)
            .expect("morphism assignment must be total")
    }
}

fn target_add(ctx: &ExprCtx, a: &TargetElement, b: &TargetElement) -> TargetElement {
    match (a, b) {
        (TargetElement::Sl2(x), TargetElement::Sl2(y)) => TargetElement::Sl2(sl2_add(ctx, x, y)),
        (TargetElement::Loop(x), TargetElement::Loop(y)) => {
            TargetElement::Loop(loop_add(ctx, x, y))
        }
        _ => panic!("target mismatch"),
    }
}

fn target_scale(ctx: &ExprCtx, c: &Expr, a: &TargetElement) -> TargetElement {
    match a {
        TargetElement::Sl2(x) => TargetElement::Sl2(sl2_scale(ctx, c, x)),
        TargetElement::Loop(x) => TargetElement::Loop(loop_scale(ctx, c, x)),
    }
}

fn target_bracket(ctx: &ExprCtx, a: &TargetElement, b: &TargetElement) -> TargetElement {
    match (a, b) {
        (TargetElement::Sl2(x), TargetElement::Sl2(y)) => {
            TargetElement::Sl2(sl2_bracket(ctx, x, y))
        }
        (TargetElement::Loop(x), TargetElement::Loop(y)) => {
            TargetElement::Loop(loop_bracket(ctx, x, y))
        }
        _ => panic!("target mismatch"),
    }
}

fn target_zero(ctx: &ExprCtx, kind: TargetKind) -> TargetElement {
    match kind {
        TargetKind::Sl2 => TargetElement::Sl2(Sl2Element::zero(ctx)),
        TargetKind::Loop => TargetElement::Loop(LoopElement::zero()),
    }
}

/// Image of a standard bracketing under the assignment.
fn word_image(ctx: &ExprCtx, w: &[Gen], phi: &MorphismAssignment) -> TargetElement {
    if w.len() == 1 {
        return phi.image(w[0]).clone();
    }
    let (u, v) = standard_factorization(w);
    let iu = word_image(ctx, &u, phi);
    let iv = word_image(ctx, &v, phi);
    target_bracket(ctx, &iu, &iv)
}

/// Lie-algebra map on normal forms: phi([a,b]) = [phi a, phi b], linear in
/// coefficients.
pub fn apply_morphism(
    ctx: &ExprCtx,
    e: &LieValued,
    phi: &MorphismAssignment,
) -> Result<TargetElement, ProlongError> {
    let mut acc = target_zero(ctx, phi.kind);
    for (w, c) in &e.terms {
        let img = word_image(ctx, w, phi);
        acc = target_add(ctx, &acc, &target_scale(ctx, c, &img));
    }
    Ok(acc)
}

/// Named list of elements asserted to vanish.
#[derive(Clone, Debug, Default)]
pub struct RelationSet {
    pub relations: Vec<(String, LieValued)>,
}

impl RelationSet {
    /// Push after normalization, dropping zero and unit-scalar duplicates.
    pub fn push_dedup(&mut self, ctx: &ExprCtx, name: &str, rel: LieValued) {
        let rel = ctx.lie_normalize(&rel);
        if rel.is_zero() {
            return;
        }
        let canon = canonical_scale(ctx, &rel);
        for (_, existing) in &self.relations {
            if canonical_scale(ctx, existing) == canon {
                return;
            }
        }
        self.relations.push((name.to_string(), rel));
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }
}

/// Scale so the coefficient of the least word is +1 when that coefficient
/// is an invertible monomial (rational times involutive parameters).
pub fn canonical_scale(ctx: &ExprCtx, rel: &LieValued) -> LieValued {
    let Some((_, c)) = rel.terms.iter().next() else {
        return rel.clone();
    };
    if c.terms.len() != 1 {
        return rel.clone();
    }
    let (key, coeff) = c.terms.iter().next().unwrap();
    if !key.powers.is_empty() || !key.fns.is_empty() || key.params.zeta != 0 {
        return rel.clone();
    }
    // invert rational * kappa^a * eps2^b
    let inv_param = crate::param::ParamPow {
        zeta: 0,
        kappa: (4 - key.params.kappa % 4) % 4,
        eps2: if ctx.ring.eps2_involutive {
            key.params.eps2 % 2
        } else {
            0
        },
    };
    if !ctx.ring.eps2_involutive && key.params.eps2 != 0 {
        return rel.clone();
    }
    let scale = ctx.scale(&ctx.param(inv_param), &coeff.inv());
    ctx.lie_scale(&scale, rel)
}

/// Per-relation verdict of a homomorphic-image check.
#[derive(Clone, Debug)]
pub struct RelationCheck {
    pub name: String,
    pub zero: bool,
    pub image: String,
}

pub fn check_relations(
    ctx: &ExprCtx,
    rels: &RelationSet,
    phi: &MorphismAssignment,
) -> Result<(bool, Vec<RelationCheck>), ProlongError> {
    let mut all = true;
    let mut out = Vec::new();
    for (name, rel) in &rels.relations {
        let img = apply_morphism(ctx, rel, phi)?;
        let zero = img.is_zero();
        all &= zero;
        out.push(RelationCheck {
            name: name.clone(),
            zero,
            image: print_target(ctx, &img),
        });
    }
    Ok((all, out))
}

pub fn print_target(ctx: &ExprCtx, e: &TargetElement) -> String {
    match e {
        TargetElement::Sl2(x) => {
            if x.is_zero() {
                return "0".into();
            }
            let mut parts = Vec::new();
            for (i, c) in x.0.iter().enumerate() {
                if !c.terms.is_empty() {
                    parts.push(format!("({})*X{}_sl2", ctx.print(c), i + 1));
                }
            }
            parts.join(" + ")
        }
        TargetElement::Loop(x) => {
            if x.is_zero() {
                return "0".into();
            }
            let mut parts = Vec::new();
            for ((i, m), c) in &x.terms {
                parts.push(format!("({})*T({},{})", ctx.print(c), i, m));
            }
            parts.join(" + ")
        }
    }
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetKind::Sl2 => write!(f, "sl2"),
            TargetKind::Loop => write!(f, "loop"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::ParamRing;
    use crate::symbol::SymbolTable;

    fn ctx() -> ExprCtx {
        let mut t = SymbolTable::new();
        t.freeze();
        ExprCtx::new(t, ParamRing::default())
    }

    fn gen(ctx: &ExprCtx, g: Gen) -> LieValued {
        LieValued::generator(ctx, g)
    }

    #[test]
    fn bracket_self_zero() {
        let c = ctx();
        let x1 = gen(&c, 0);
        assert!(c.lie_bracket(&x1, &x1).is_zero());
    }

    #[test]
    fn jacobi_identity() {
        let c = ctx();
        let (x1, x2, x3) = (gen(&c, 0), gen(&c, 1), gen(&c, 2));
        let j = c.lie_add(
            &c.lie_add(
                &c.lie_bracket(&c.lie_bracket(&x1, &x2), &x3),
                &c.lie_bracket(&c.lie_bracket(&x2, &x3), &x1),
            ),
            &c.lie_bracket(&c.lie_bracket(&x3, &x1), &x2),
        );
        assert!(j.is_zero());
    }

    #[test]
    fn lyndon_rewrite_example() {
        // [[X1,X2],X1] = -[X1,[X1,X2]]
        let c = ctx();
        let (x1, x2) = (gen(&c, 0), gen(&c, 1));
        let lhs = c.lie_bracket(&c.lie_bracket(&x1, &x2), &x1);
        let rhs = c.lie_neg(&c.lie_bracket(&x1, &c.lie_bracket(&x1, &x2)));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn witt_counts() {
        let words = lyndon_words(6, 3);
        let len1 = words.iter().filter(|w| w.len() == 1).count();
        let len2 = words.iter().filter(|w| w.len() == 2).count();
        let len3 = words.iter().filter(|w| w.len() == 3).count();
        assert_eq!((len1, len2, len3), (6, 15, 70));
    }

    #[test]
    fn sl2_structure() {
        let c = ctx();
        let x1 = Sl2Element::basis(&c, 0);
        let x2 = Sl2Element::basis(&c, 1);
        let b = sl2_bracket(&c, &x1, &x2);
        // 2 i zeta k2 X3
        assert_eq!(c.print(&b.0[2]), "2*i*zeta*k2");
        assert!(b.0[0].terms.is_empty() && b.0[1].terms.is_empty());
    }

    #[test]
    fn sl2_jacobi() {
        let c = ctx();
        let x1 = Sl2Element::basis(&c, 0);
        let x2 = Sl2Element::basis(&c, 1);
        let x3 = Sl2Element::basis(&c, 2);
        let j = sl2_add(
            &c,
            &sl2_add(
                &c,
                &sl2_bracket(&c, &sl2_bracket(&c, &x1, &x2), &x3),
                &sl2_bracket(&c, &sl2_bracket(&c, &x2, &x3), &x1),
            ),
            &sl2_bracket(&c, &sl2_bracket(&c, &x3, &x1), &x2),
        );
        assert!(j.is_zero());
    }

    #[test]
    fn loop_bracket_grades() {
        let c = ctx();
        let t1 = LoopElement::basis(&c, 1, 1);
        let t2 = LoopElement::basis(&c, 2, 1);
        let b = loop_bracket(&c, &t1, &t2);
        assert_eq!(b.terms.len(), 1);
        let ((k, m), coeff) = b.terms.iter().next().unwrap();
        assert_eq!((*k, *m), (3, 2));
        assert_eq!(c.print(coeff), "i");
        // eps_22k = 0
        let z = loop_bracket(&c, &t2, &LoopElement::basis(&c, 2, 5));
        assert!(z.is_zero());
    }
}
