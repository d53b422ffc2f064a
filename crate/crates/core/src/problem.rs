//! Problem files: symbol declarations, parameter settings, ideal
//! generators, jet rules, ansatz block and golden references. Bundled
//! problems are embedded; external files load from disk with relative
//! golden paths.

use crate::error::ProblemError;
use crate::expr::{ExprCtx, RewriteRule};
use crate::exterior::{DifferentialForm, ExteriorIdeal};
use crate::jet::FormalJet;
use crate::liealg::{
    gen_by_name, LieValued, LoopElement, MorphismAssignment, Sl2Element, TargetElement,
    TargetKind,
};
use crate::oracle::SampleSpec;
use crate::param::{ParamRing, SquareValue};
use crate::prolong::{AnsatzMode, LemmaChart, ProlongationAnsatz};
use crate::symbol::{SymbolId, SymbolRole, SymbolTable};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

/// Fully validated problem definition.
#[derive(Clone, Debug)]
pub struct ProblemDefinition {
    pub name: String,
    pub ctx: ExprCtx,
    pub coords: Vec<SymbolId>,
    pub ideal: ExteriorIdeal,
    pub jet: FormalJet,
    pub ansatz: Option<ProlongationAnsatz>,
    pub lemma_chart: Option<LemmaChart>,
    pub collect_vars: BTreeSet<SymbolId>,
    pub phi_sector: BTreeSet<SymbolId>,
    pub sample: SampleSpec,
    pub closure_degree_bound: u32,
    pub golden: GoldenRefs,
    /// directory for resolving golden paths of disk-loaded problems
    pub base_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Default)]
pub struct GoldenRefs {
    pub constraints: Option<String>,
    pub relations: Option<String>,
    pub paper_relations: Option<String>,
    pub morphism_sl2: Option<String>,
    pub morphism_loop: Option<String>,
}

// ---------------------------------------------------------------------------
// bundled assets
// ---------------------------------------------------------------------------

pub const BUNDLED_PROBLEMS: &[(&str, &str)] = &[
    (
        "ishimori-compact",
        include_str!("../assets/problems/ishimori-compact.prob"),
    ),
    (
        "ishimori-noncompact",
        include_str!("../assets/problems/ishimori-noncompact.prob"),
    ),
    (
        "ishimori-symbolic",
        include_str!("../assets/problems/ishimori-symbolic.prob"),
    ),
    (
        "toy-closed",
        include_str!("../assets/problems/toy-closed.prob"),
    ),
    (
        "toy-nonclosed",
        include_str!("../assets/problems/toy-nonclosed.prob"),
    ),
];

pub const BUNDLED_AUX: &[(&str, &str)] = &[
    (
        "reference-relations.txt",
        include_str!("../assets/golden/reference-relations.txt"),
    ),
    (
        "morphism-sl2.txt",
        include_str!("../assets/golden/morphism-sl2.txt"),
    ),
    (
        "morphism-loop.txt",
        include_str!("../assets/golden/morphism-loop.txt"),
    ),
    (
        "ishimori-compact.relations.txt",
        include_str!("../assets/golden/ishimori-compact.relations.txt"),
    ),
    (
        "ishimori-noncompact.relations.txt",
        include_str!("../assets/golden/ishimori-noncompact.relations.txt"),
    ),
    (
        "ishimori-symbolic.relations.txt",
        include_str!("../assets/golden/ishimori-symbolic.relations.txt"),
    ),
    (
        "ishimori-compact.constraints.txt",
        include_str!("../assets/golden/ishimori-compact.constraints.txt"),
    ),
];

pub fn bundled_problem(name: &str) -> Option<&'static str> {
    BUNDLED_PROBLEMS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

pub fn bundled_aux(name: &str) -> Option<&'static str> {
    BUNDLED_AUX
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

/// Resolve a golden reference either from disk (relative to the problem
/// file) or from the bundled assets.
pub fn resolve_aux(def: &ProblemDefinition, name: &str) -> Result<String, ProblemError> {
    if let Some(dir) = &def.base_dir {
        let p = dir.join(name);
        if p.exists() {
            return Ok(std::fs::read_to_string(p)?);
        }
    }
    bundled_aux(name)
        .map(|s| s.to_string())
        .ok_or_else(|| ProblemError::MissingGolden(name.to_string()))
}

// ---------------------------------------------------------------------------
// loader
// ---------------------------------------------------------------------------

pub fn load_problem(path: &Path) -> Result<ProblemDefinition, ProblemError> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "problem".into());
    let mut def = parse_problem(&name, &text, &path.to_string_lossy())?;
    def.base_dir = path.parent().map(|p| p.to_path_buf());
    Ok(def)
}

pub fn load_bundled(name: &str) -> Result<ProblemDefinition, ProblemError> {
    let text = bundled_problem(name).ok_or_else(|| ProblemError::Parse {
        file: name.into(),
        line: 0,
        msg: format!("no bundled problem named `{name}`"),
    })?;
    parse_problem(name, text, name)
}

fn perr(file: &str, line: usize, msg: impl Into<String>) -> ProblemError {
    ProblemError::Parse {
        file: file.into(),
        line,
        msg: msg.into(),
    }
}

struct Sections {
    // section name -> (line number, line text)
    content: BTreeMap<String, Vec<(usize, String)>>,
}

fn split_sections(text: &str, file: &str) -> Result<Sections, ProblemError> {
    let mut content: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(perr(file, ln + 1, "malformed section header"));
            }
            let name = line[1..line.len() - 1].trim().to_string();
            current = Some(name.clone());
            content.entry(name).or_default();
            continue;
        }
        let Some(sec) = &current else {
            return Err(perr(file, ln + 1, "content before any [section]"));
        };
        content
            .get_mut(sec)
            .unwrap()
            .push((ln + 1, line.to_string()));
    }
    Ok(Sections { content })
}

fn parse_problem(name: &str, text: &str, file: &str) -> Result<ProblemDefinition, ProblemError> {
    let sections = split_sections(text, file)?;

    // ---- parameters ----
    let mut ring = ParamRing::default();
    let mut quotient_on = false;
    let mut spin: Vec<String> = vec![];
    let mut tangents: Vec<Vec<String>> = vec![];
    let mut collect: Vec<String> = vec![];
    let mut phi_sector: Vec<String> = vec![];
    let mut closure_degree_bound = 2u32;
    if let Some(lines) = sections.content.get("parameters") {
        for (ln, line) in lines {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| perr(file, *ln, "expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "kappa2" => {
                    ring.kappa2 = parse_square(value)
                        .ok_or_else(|| perr(file, *ln, "kappa2 must be +1, -1 or symbolic"))?
                }
                "eps2" => {
                    ring.eps2 = parse_square(value)
                        .ok_or_else(|| perr(file, *ln, "eps2 must be +1, -1 or symbolic"))?
                }
                "eps2_involutive" => ring.eps2_involutive = value == "true" || value == "on",
                "quotient" => quotient_on = value == "on" || value == "true",
                "spin" => spin = words(value),
                "tangent" => tangents.push(words(value)),
                "collect" => collect = words(value),
                "phi_sector" => phi_sector = words(value),
                "closure_degree_bound" => {
                    closure_degree_bound = value
                        .parse()
                        .map_err(|_| perr(file, *ln, "bad degree bound"))?
                }
                _ => return Err(perr(file, *ln, format!("unknown parameter `{key}`"))),
            }
        }
    }

    // ---- symbols ----
    let mut table = SymbolTable::new();
    let mut coords: Vec<SymbolId> = vec![];
    let mut fibreish: Vec<SymbolId> = vec![];
    let sym_lines = sections
        .content
        .get("symbols")
        .ok_or_else(|| perr(file, 0, "missing [symbols] section"))?;
    for (ln, line) in sym_lines {
        let (name_part, role_part) = line
            .split_once(':')
            .ok_or_else(|| perr(file, *ln, "expected `name : role [component]`"))?;
        let sym_name = name_part.trim();
        let mut it = role_part.trim().split_whitespace();
        let role_word = it.next().unwrap_or("");
        let component: Option<u8> = it.next().and_then(|c| c.parse().ok());
        let role = match role_word {
            "independent" => SymbolRole::IndependentCoordinate,
            "fibre" => SymbolRole::FibreVariable,
            "jet" => SymbolRole::JetVariable,
            "pseudopotential" => SymbolRole::Pseudopotential,
            other => return Err(perr(file, *ln, format!("unknown role `{other}`"))),
        };
        let id = table
            .declare(sym_name, role, component)
            .map_err(|e| perr(file, *ln, e.to_string()))?;
        match role {
            SymbolRole::IndependentCoordinate => coords.push(id),
            _ => fibreish.push(id),
        }
    }
    if coords.len() != 3 && !fibreish.is_empty() {
        return Err(perr(file, 0, "expected exactly three independent coordinates"));
    }

    // auto-declare section-derivative symbols v_<coord> for every fibre-ish
    // symbol
    let mut deriv_map: BTreeMap<(SymbolId, usize), SymbolId> = BTreeMap::new();
    let coord_names: Vec<String> = coords
        .iter()
        .map(|&c| table.symbol(c).name.clone())
        .collect();
    for &v in &fibreish {
        for (ci, cname) in coord_names.iter().enumerate() {
            let dname = format!("{}_{}", table.symbol(v).name, cname);
            let id = table
                .declare(&dname, SymbolRole::SectionDerivative, None)
                .map_err(|e| perr(file, 0, e.to_string()))?;
            deriv_map.insert((v, ci), id);
        }
    }

    // ---- ansatz function declarations (before freeze) ----
    let mut ansatz_mode: Option<String> = None;
    let mut ansatz_fns: Vec<(String, Vec<String>)> = vec![];
    let mut xi_name: Option<String> = None;
    let mut lemma_s: Vec<String> = vec![];
    let mut lemma_p: Vec<String> = vec![];
    let mut lemma_q: Vec<String> = vec![];
    if let Some(lines) = sections.content.get("ansatz") {
        for (ln, line) in lines {
            if let Some((key, value)) = line.split_once('=') {
                match key.trim() {
                    "mode" => ansatz_mode = Some(value.trim().to_string()),
                    "pseudopotential" => xi_name = Some(value.trim().to_string()),
                    "lemma_s" => lemma_s = words(value),
                    "lemma_p" => lemma_p = words(value),
                    "lemma_q" => lemma_q = words(value),
                    other => {
                        return Err(perr(file, *ln, format!("unknown ansatz key `{other}`")))
                    }
                }
            } else if let Some((fname, args)) = line.split_once(':') {
                ansatz_fns.push((fname.trim().to_string(), words(args)));
            } else {
                return Err(perr(file, *ln, "malformed ansatz line"));
            }
        }
    }
    let mut fn_ids = BTreeMap::new();
    for (fname, args) in &ansatz_fns {
        let mut arg_ids = Vec::new();
        for a in args {
            let id = table
                .lookup(a)
                .ok_or_else(|| perr(file, 0, format!("undeclared ansatz argument `{a}`")))?;
            arg_ids.push(id);
        }
        let fid = table
            .declare_fn(fname, arg_ids)
            .map_err(|e| perr(file, 0, e.to_string()))?;
        fn_ids.insert(fname.clone(), fid);
    }

    table.freeze();
    let mut ctx = ExprCtx::new(table, ring);
    ctx.quotient_mode = quotient_on;

    let lookup = |ctx: &ExprCtx, n: &str| -> Result<SymbolId, ProblemError> {
        ctx.table
            .lookup(n)
            .ok_or_else(|| perr(file, 0, format!("undeclared symbol `{n}`")))
    };

    // quotient rewrite rules from the spin constraint and its tangency
    // differentiations, with the overlap completions that make the
    // reductions used downstream reach zero
    if quotient_on && spin.len() == 3 {
        let s: Vec<SymbolId> = spin
            .iter()
            .map(|n| lookup(&ctx, n))
            .collect::<Result<_, _>>()?;
        let rules = spin_quotient_rules(&ctx, &s, &tangents, file)?;
        ctx.quotient = rules;
    }

    // ---- generators ----
    let mut ideal = ExteriorIdeal::default();
    if let Some(lines) = sections.content.get("generators") {
        for (ln, line) in lines {
            let (gname, form_text) = line
                .split_once(":=")
                .ok_or_else(|| perr(file, *ln, "expected `name := form`"))?;
            let gname = gname.trim();
            for (expanded_name, expanded_text) in expand_vector_shorthand(&ctx, gname, form_text)
            {
                let form = parse_form(&ctx, &expanded_text)
                    .map_err(|e| perr(file, *ln, format!("{e} in `{expanded_text}`")))?;
                let form = ctx.form_normalize(&form);
                if form.is_zero() {
                    return Err(perr(file, *ln, "generator is zero"));
                }
                ideal.push(&expanded_name, form);
            }
        }
    }

    // ---- pivots / jet rules ----
    let mut jet = FormalJet {
        coords: coords.clone(),
        deriv: deriv_map,
        ..Default::default()
    };
    if let Some(lines) = sections.content.get("pivots") {
        for (ln, line) in lines {
            let mut it = line.splitn(2, char::is_whitespace);
            let layer = it.next().unwrap_or("");
            let rest = it.next().unwrap_or("").trim();
            let (lhs, rhs) = rest
                .split_once(":=")
                .ok_or_else(|| perr(file, *ln, "expected `layer lhs := expr`"))?;
            let lhs_id = lookup(&ctx, lhs.trim())?;
            let rhs_expr = ctx
                .parse_expr(rhs.trim())
                .map_err(|e| perr(file, *ln, e.to_string()))?;
            match layer {
                "contact" => jet.contact.push((lhs_id, rhs_expr)),
                "symmetry" => jet.symmetry.push((lhs_id, rhs_expr)),
                "pivot" => jet.pivots.push((lhs_id, rhs_expr)),
                other => return Err(perr(file, *ln, format!("unknown rule layer `{other}`"))),
            }
        }
        jet.validate(&ctx).map_err(|e| perr(file, 0, e.to_string()))?;
    }

    // ---- assembled ansatz ----
    let ansatz = if ansatz_fns.is_empty() {
        None
    } else {
        let xi = lookup(&ctx, xi_name.as_deref().unwrap_or("xi"))?;
        let need = |n: &str| -> Result<crate::symbol::FnId, ProblemError> {
            fn_ids
                .get(n)
                .copied()
                .ok_or_else(|| perr(file, 0, format!("ansatz must declare function `{n}`")))
        };
        let h = need("H")?;
        let f = need("F")?;
        let g = need("G")?;
        let mode = match ansatz_mode.as_deref() {
            Some("formal") | None => AnsatzMode::Formal,
            Some(other) => {
                return Err(perr(file, 0, format!("unsupported ansatz mode `{other}`")))
            }
        };
        // fibre dependencies: declared args of H except xi
        let fibre: Vec<SymbolId> = ctx
            .table
            .fn_decl(h)
            .args
            .iter()
            .copied()
            .filter(|&a| a != xi)
            .collect();
        Some(ProlongationAnsatz {
            mode,
            h,
            f,
            g,
            xi,
            fibre,
        })
    };

    let lemma_chart = if lemma_s.len() == 3 && lemma_p.len() == 3 && lemma_q.len() == 3 {
        let g = |ns: &[String]| -> Result<[SymbolId; 3], ProblemError> {
            Ok([
                lookup(&ctx, &ns[0])?,
                lookup(&ctx, &ns[1])?,
                lookup(&ctx, &ns[2])?,
            ])
        };
        Some(LemmaChart {
            s: g(&lemma_s)?,
            p: g(&lemma_p)?,
            q: g(&lemma_q)?,
        })
    } else {
        None
    };

    // ---- golden ----
    let mut golden = GoldenRefs::default();
    if let Some(lines) = sections.content.get("golden") {
        for (ln, line) in lines {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| perr(file, *ln, "expected `key = file`"))?;
            let v = Some(value.trim().to_string());
            match key.trim() {
                "constraints" => golden.constraints = v,
                "relations" => golden.relations = v,
                "paper_relations" => golden.paper_relations = v,
                "morphism_sl2" => golden.morphism_sl2 = v,
                "morphism_loop" => golden.morphism_loop = v,
                other => return Err(perr(file, *ln, format!("unknown golden key `{other}`"))),
            }
        }
    }

    // ---- oracle sampling spec ----
    let mut sample = SampleSpec::default();
    if quotient_on && spin.len() == 3 {
        sample.spin = Some([
            lookup(&ctx, &spin[0])?,
            lookup(&ctx, &spin[1])?,
            lookup(&ctx, &spin[2])?,
        ]);
        for tan in &tangents {
            if tan.len() == 3 {
                sample.tangents.push([
                    lookup(&ctx, &tan[0])?,
                    lookup(&ctx, &tan[1])?,
                    lookup(&ctx, &tan[2])?,
                ]);
            }
        }
    }

    let collect_vars: BTreeSet<SymbolId> = collect
        .iter()
        .map(|n| lookup(&ctx, n))
        .collect::<Result<_, _>>()?;
    let phi_set: BTreeSet<SymbolId> = phi_sector
        .iter()
        .map(|n| lookup(&ctx, n))
        .collect::<Result<_, _>>()?;

    Ok(ProblemDefinition {
        name: name.to_string(),
        ctx,
        coords,
        ideal,
        jet,
        ansatz,
        lemma_chart,
        collect_vars,
        phi_sector: phi_set,
        sample,
        closure_degree_bound,
        golden,
        base_dir: None,
    })
}

fn parse_square(v: &str) -> Option<SquareValue> {
    match v {
        "+1" | "1" => Some(SquareValue::Plus),
        "-1" => Some(SquareValue::Minus),
        "symbolic" => Some(SquareValue::Symbolic),
        _ => None,
    }
}

fn words(v: &str) -> Vec<String> {
    v.split_whitespace().map(|s| s.to_string()).collect()
}

/// The quotient normal form for the spin variety: the constraint square
/// rewrite, one tangency rewrite per tangent vector, and the overlap
/// completions between them. Rules strictly decrease the lexicographic
/// (S3-degree, leading-tangent-component degree) measure.
fn spin_quotient_rules(
    ctx: &ExprCtx,
    s: &[SymbolId],
    tangents: &[Vec<String>],
    file: &str,
) -> Result<Vec<RewriteRule>, ProblemError> {
    let r = |id: SymbolId| ctx.rank_of(id);
    let k2 = ctx.kappa2();
    let one = ctx.one();
    let s1 = ctx.sym(s[0]);
    let s2 = ctx.sym(s[1]);
    let mut rules = Vec::new();
    // S3^2 -> 1 - k2 S1^2 - k2 S2^2
    let repl = ctx.sub(
        &one,
        &ctx.mul(&k2, &ctx.add(&ctx.mul(&s1, &s1), &ctx.mul(&s2, &s2))),
    );
    rules.push(RewriteRule {
        name: "spin-square".into(),
        pattern: vec![(r(s[2]), 2)],
        replacement: repl,
    });
    for tan in tangents {
        if tan.len() != 3 {
            return Err(perr(file, 0, "tangent must list three components"));
        }
        let v: Vec<SymbolId> = tan
            .iter()
            .map(|n| {
                ctx.table
                    .lookup(n)
                    .ok_or_else(|| perr(file, 0, format!("undeclared tangent `{n}`")))
            })
            .collect::<Result<_, _>>()?;
        let v1 = ctx.sym(v[0]);
        let v2 = ctx.sym(v[1]);
        let v3 = ctx.sym(v[2]);
        // S3 V3 -> -k2 (S1 V1 + S2 V2)
        let repl = ctx.neg(&ctx.mul(
            &k2,
            &ctx.add(&ctx.mul(&s1, &v1), &ctx.mul(&s2, &v2)),
        ));
        rules.push(RewriteRule {
            name: format!("tangency-{}", tan[2]),
            pattern: vec![(r(s[2]), 1), (r(v[2]), 1)],
            replacement: repl,
        });
        // completion of the overlap with the square rule:
        // S1 S3 V1 -> -S2 S3 V2 + (S1^2 + S2^2 - k2) V3
        let repl = ctx.add(
            &ctx.neg(&ctx.mul(&s2, &ctx.mul(&ctx.sym(s[2]), &v2))),
            &ctx.mul(
                &ctx.sub(
                    &ctx.add(&ctx.mul(&s1, &s1), &ctx.mul(&s2, &s2)),
                    &k2,
                ),
                &v3,
            ),
        );
        rules.push(RewriteRule {
            name: format!("tangency-completion-{}", tan[2]),
            pattern: vec![(r(s[0]), 1), (r(s[2]), 1), (r(v[0]), 1)],
            replacement: repl,
        });
    }
    Ok(rules)
}

// ---------------------------------------------------------------------------
// vector shorthand
// ---------------------------------------------------------------------------

/// Expand bare vector tokens (`S`, `P`, `Q`, `dS`, `dP`, `dQ`) into three
/// scalar lines; lines without vector tokens pass through unchanged.
fn expand_vector_shorthand(
    ctx: &ExprCtx,
    name: &str,
    text: &str,
) -> Vec<(String, String)> {
    // vector families: base names whose components 1..3 are all declared
    let mut families: Vec<String> = Vec::new();
    for fam in ["S", "P", "Q"] {
        if (1..=3).all(|i| ctx.table.lookup(&format!("{fam}{i}")).is_some()) {
            families.push(fam.to_string());
        }
    }
    let toks = tokenize_idents(text);
    let has_vector = toks.iter().any(|t| {
        families.contains(t)
            || (t.starts_with('d') && families.contains(&t[1..].to_string()))
    });
    if !has_vector {
        return vec![(name.to_string(), text.to_string())];
    }
    (1..=3)
        .map(|i| {
            let mut out = String::new();
            let mut last = 0;
            for (start, end, tok) in ident_spans(text) {
                out.push_str(&text[last..start]);
                if families.contains(&tok.to_string()) {
                    out.push_str(&format!("{tok}{i}"));
                } else if tok.starts_with('d') && families.contains(&tok[1..].to_string()) {
                    out.push_str(&format!("d{}{}", &tok[1..], i));
                } else {
                    out.push_str(tok);
                }
                last = end;
            }
            out.push_str(&text[last..]);
            (format!("{name}_{i}"), out)
        })
        .collect()
}

fn tokenize_idents(text: &str) -> Vec<String> {
    ident_spans(text)
        .into_iter()
        .map(|(_, _, t)| t.to_string())
        .collect()
}

fn ident_spans(text: &str) -> Vec<(usize, usize, &str)> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, i, &text[start..i]));
        } else {
            i += 1;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// form literals
// ---------------------------------------------------------------------------

/// Parse a form literal: `d <symbol>` and `d<symbol>` produce covectors,
/// `^` is the wedge (a power only between a scalar and an integer), `*`
/// multiplies, degree-0 values are scalars.
pub fn parse_form(ctx: &ExprCtx, text: &str) -> Result<DifferentialForm, String> {
    let mut p = FormParser {
        ctx,
        text,
        bytes: text.as_bytes(),
        pos: 0,
    };
    let f = p.parse_sum()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(format!("trailing input at byte {}", p.pos));
    }
    Ok(f)
}

struct FormParser<'a> {
    ctx: &'a ExprCtx,
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> FormParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn parse_sum(&mut self) -> Result<DifferentialForm, String> {
        let mut acc = self.parse_product()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.parse_product()?;
                    acc = self.add_forms(acc, rhs)?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.parse_product()?;
                    acc = self.add_forms(acc, self.ctx.form_neg(&rhs))?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn add_forms(
        &self,
        a: DifferentialForm,
        b: DifferentialForm,
    ) -> Result<DifferentialForm, String> {
        if a.is_zero() {
            return Ok(b);
        }
        if b.is_zero() {
            return Ok(a);
        }
        if a.degree != b.degree {
            return Err(format!(
                "cannot add forms of degree {} and {}",
                a.degree, b.degree
            ));
        }
        Ok(self.ctx.form_add(&a, &b))
    }

    fn parse_product(&mut self) -> Result<DifferentialForm, String> {
        let mut neg = false;
        while self.peek() == Some(b'-') {
            self.pos += 1;
            neg = !neg;
        }
        let mut acc = self.parse_atom()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.parse_atom()?;
                    acc = self.ctx.wedge(&acc, &rhs);
                }
                Some(b'^') => {
                    self.pos += 1;
                    // scalar ^ integer is a power; anything else is a wedge
                    let save = self.pos;
                    if acc.degree == 0 {
                        if let Some(n) = self.try_integer() {
                            let scalar = acc
                                .comps
                                .get(&vec![])
                                .cloned()
                                .unwrap_or_else(|| self.ctx.zero());
                            acc = DifferentialForm::scalar(self.ctx.pow(&scalar, n));
                            continue;
                        }
                        self.pos = save;
                    }
                    let rhs = self.parse_atom()?;
                    acc = self.ctx.wedge(&acc, &rhs);
                }
                _ => break,
            }
        }
        if neg {
            acc = self.ctx.form_neg(&acc);
        }
        Ok(acc)
    }

    fn try_integer(&mut self) -> Option<u32> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        self.text[start..self.pos].parse().ok()
    }

    fn parse_atom(&mut self) -> Result<DifferentialForm, String> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let f = self.parse_sum()?;
                self.skip_ws();
                if self.bytes.get(self.pos) != Some(&b')') {
                    return Err("expected `)`".into());
                }
                self.pos += 1;
                Ok(f)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.try_integer().ok_or("bad integer")?;
                Ok(DifferentialForm::scalar(self.ctx.int(n as i64)))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_alphanumeric()
                        || self.bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let ident = &self.text[start..self.pos];
                // `d` alone: differential of the next identifier
                if ident == "d" {
                    self.skip_ws();
                    let s2 = self.pos;
                    while self.pos < self.bytes.len()
                        && (self.bytes[self.pos].is_ascii_alphanumeric()
                            || self.bytes[self.pos] == b'_')
                    {
                        self.pos += 1;
                    }
                    let sym = &self.text[s2..self.pos];
                    let id = self
                        .ctx
                        .table
                        .lookup(sym)
                        .ok_or(format!("undeclared symbol `{sym}` after d"))?;
                    return Ok(self.ctx.d_symbol(id));
                }
                // `dXYZ`: covector when the tail is declared
                if let Some(tail) = ident.strip_prefix('d') {
                    if let Some(id) = self.ctx.table.lookup(tail) {
                        if self.ctx.table.lookup(ident).is_none() {
                            return Ok(self.ctx.d_symbol(id));
                        }
                    }
                }
                // otherwise a scalar atom in the expression grammar
                let e = self
                    .ctx
                    .parse_expr(ident)
                    .map_err(|e| e.to_string())?;
                Ok(DifferentialForm::scalar(e))
            }
            other => Err(format!("unexpected token {:?}", other.map(|c| c as char))),
        }
    }
}

// ---------------------------------------------------------------------------
// relation and morphism files
// ---------------------------------------------------------------------------

/// Parse one Lie relation in bracket syntax, e.g.
/// `k2*[X2,[X1,X3]] + [Z,Y]`.
pub fn parse_relation(ctx: &ExprCtx, text: &str) -> Result<LieValued, String> {
    let mut p = RelParser {
        ctx,
        bytes: text.as_bytes(),
        text,
        pos: 0,
    };
    let e = p.parse_sum()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(format!("trailing input in relation `{text}`"));
    }
    Ok(ctx.lie_normalize(&e))
}

struct RelParser<'a> {
    ctx: &'a ExprCtx,
    bytes: &'a [u8],
    text: &'a str,
    pos: usize,
}

impl<'a> RelParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn parse_sum(&mut self) -> Result<LieValued, String> {
        let mut acc = self.parse_term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let t = self.parse_term()?;
                    acc = self.ctx.lie_add(&acc, &t);
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.parse_term()?;
                    acc = self.ctx.lie_sub(&acc, &t);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn parse_term(&mut self) -> Result<LieValued, String> {
        let mut neg = false;
        while self.peek() == Some(b'-') {
            self.pos += 1;
            neg = !neg;
        }
        // scalar prefix factors until a bracket or generator shows up
        let mut coeff = self.ctx.one();
        let lie: LieValued;
        loop {
            match self.peek() {
                Some(b'[') => {
                    lie = self.parse_bracket()?;
                    break;
                }
                Some(c) if c.is_ascii_alphabetic() => {
                    let ident = self.take_ident();
                    if let Some(g) = gen_by_name(&ident) {
                        lie = LieValued::generator(self.ctx, g);
                        break;
                    }
                    let e = self.ctx.parse_expr(&ident).map_err(|e| e.to_string())?;
                    coeff = self.ctx.mul(&coeff, &e);
                }
                Some(c) if c.is_ascii_digit() => {
                    let n = self.take_int()?;
                    coeff = self.ctx.mul(&coeff, &self.ctx.int(n));
                }
                _ => return Err("expected bracket or generator".into()),
            }
            // optional `*` between factors
            if self.peek() == Some(b'*') {
                self.pos += 1;
            }
        }
        let mut out = self.ctx.lie_scale(&coeff, &lie);
        if neg {
            out = self.ctx.lie_neg(&out);
        }
        Ok(out)
    }

    fn parse_bracket(&mut self) -> Result<LieValued, String> {
        // at '['
        self.pos += 1;
        let a = self.parse_sum()?;
        self.skip_ws();
        if self.bytes.get(self.pos) != Some(&b',') {
            return Err("expected `,` in bracket".into());
        }
        self.pos += 1;
        let b = self.parse_sum()?;
        self.skip_ws();
        if self.bytes.get(self.pos) != Some(&b']') {
            return Err("expected `]`".into());
        }
        self.pos += 1;
        Ok(self.ctx.lie_bracket(&a, &b))
    }

    fn take_ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        self.text[start..self.pos].to_string()
    }

    fn take_int(&mut self) -> Result<i64, String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        self.text[start..self.pos]
            .parse()
            .map_err(|_| "bad integer".to_string())
    }
}

/// Parse a relations file: `label: relation` per line.
pub fn parse_relation_file(
    ctx: &ExprCtx,
    text: &str,
) -> Result<Vec<(String, LieValued)>, String> {
    let mut out = Vec::new();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (label, rel_text) = line
            .split_once(':')
            .ok_or_else(|| format!("expected `label: relation` in `{line}`"))?;
        let rel = parse_relation(ctx, rel_text.trim())?;
        out.push((label.trim().to_string(), rel));
    }
    Ok(out)
}

/// Parse a morphism file: a `target: sl2|loop` line then `GEN -> element`
/// lines.
pub fn parse_morphism_file(
    ctx: &ExprCtx,
    text: &str,
) -> Result<MorphismAssignment, String> {
    let mut kind: Option<TargetKind> = None;
    let mut images: BTreeMap<u8, TargetElement> = BTreeMap::new();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("target:") {
            kind = Some(match rest.trim() {
                "sl2" => TargetKind::Sl2,
                "loop" => TargetKind::Loop,
                other => return Err(format!("unknown target `{other}`")),
            });
            continue;
        }
        let (gen_name, elem_text) = line
            .split_once("->")
            .ok_or_else(|| format!("expected `GEN -> element` in `{line}`"))?;
        let g = gen_by_name(gen_name.trim())
            .ok_or_else(|| format!("unknown generator `{}`", gen_name.trim()))?;
        let k = kind.ok_or("target line must come first")?;
        let elem = parse_target_element(ctx, k, elem_text.trim())?;
        images.insert(g, elem);
    }
    let kind = kind.ok_or("missing target line")?;
    for g in 0..6u8 {
        if !images.contains_key(&g) {
            return Err(format!(
                "morphism must be total; missing {}",
                crate::liealg::GEN_NAMES[g as usize]
            ));
        }
    }
    Ok(MorphismAssignment { kind, images })
}

/// `0`, or a sum of `coeff*basis` terms; basis is `T(i,m)` in loop mode and
/// `X1_sl2 | X2_sl2 | X3_sl2` in sl2 mode.
fn parse_target_element(
    ctx: &ExprCtx,
    kind: TargetKind,
    text: &str,
) -> Result<TargetElement, String> {
    let mut sl2 = Sl2Element::zero(ctx);
    let mut lp = LoopElement::zero();
    // split on top-level + and -
    let mut terms: Vec<(bool, String)> = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    let mut neg = false;
    for ch in text.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth -= 1;
                cur.push(ch);
            }
            '+' | '-' if depth == 0 => {
                if !cur.trim().is_empty() {
                    terms.push((neg, cur.trim().to_string()));
                }
                cur = String::new();
                neg = ch == '-';
            }
            _ => cur.push(ch),
        }
    }
    if !cur.trim().is_empty() {
        terms.push((neg, cur.trim().to_string()));
    }
    for (negated, term) in terms {
        if term == "0" {
            continue;
        }
        // factors separated by '*': all but the last are scalar, last is basis
        let factors: Vec<&str> = term.split('*').map(|s| s.trim()).collect();
        let (basis, scalars) = factors.split_last().ok_or("empty term")?;
        let mut coeff = ctx.one();
        for s in scalars {
            let e = ctx.parse_expr(s).map_err(|e| e.to_string())?;
            coeff = ctx.mul(&coeff, &e);
        }
        if negated {
            coeff = ctx.neg(&coeff);
        }
        match kind {
            TargetKind::Sl2 => {
                let idx = match *basis {
                    "X1_sl2" => 0,
                    "X2_sl2" => 1,
                    "X3_sl2" => 2,
                    other => return Err(format!("unknown sl2 basis `{other}`")),
                };
                sl2.0[idx] = ctx.add(&sl2.0[idx], &coeff);
            }
            TargetKind::Loop => {
                let inner = basis
                    .strip_prefix("T(")
                    .and_then(|s| s.strip_suffix(')'))
                    .ok_or_else(|| format!("expected T(i,m), got `{basis}`"))?;
                let (i_s, m_s) = inner.split_once(',').ok_or("expected T(i,m)")?;
                let i: u8 = i_s.trim().parse().map_err(|_| "bad direction index")?;
                let m: i64 = m_s.trim().parse().map_err(|_| "bad grade")?;
                let entry = lp.terms.entry((i, m)).or_insert_with(|| ctx.zero());
                *entry = ctx.add(entry, &coeff);
            }
        }
    }
    Ok(match kind {
        TargetKind::Sl2 => TargetElement::Sl2(Sl2Element([
            ctx.normalize(&sl2.0[0]),
            ctx.normalize(&sl2.0[1]),
            ctx.normalize(&sl2.0[2]),
        ])),
        TargetKind::Loop => {
            lp.terms.retain(|_, e| !e.terms.is_empty());
            TargetElement::Loop(lp)
        }
    })
}
