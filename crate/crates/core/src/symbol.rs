//! Symbol table for one problem: chart symbols with roles, and abstract
//! function declarations with fixed argument lists.
//!
//! The table is frozen once a problem is loaded; all downstream types refer
//! to symbols by id, and the id order (role first, then name) is the
//! lexicographic layer of the term order.

use crate::error::ExprError;
use std::collections::HashMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolRole {
    IndependentCoordinate,
    FibreVariable,
    JetVariable,
    Pseudopotential,
    SectionDerivative,
    Parameter,
}

impl fmt::Display for SymbolRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SymbolRole::IndependentCoordinate => "independent-coordinate",
            SymbolRole::FibreVariable => "fibre-variable",
            SymbolRole::JetVariable => "jet-variable",
            SymbolRole::Pseudopotential => "pseudopotential",
            SymbolRole::SectionDerivative => "section-derivative",
            SymbolRole::Parameter => "parameter",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FnId(pub u32);

#[derive(Clone, Debug)]
pub struct Symbol {
    pub name: String,
    pub role: SymbolRole,
    pub component: Option<u8>,
}

/// Abstract scalar function with a declared, ordered argument list.
/// Differentiation w.r.t. a non-argument yields zero; mixed partials are a
/// multi-index over the argument list (Schwarz symmetry by construction).
#[derive(Clone, Debug)]
pub struct FnDecl {
    pub name: String,
    pub args: Vec<SymbolId>,
}

#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    symbols: Vec<Symbol>,
    by_name: HashMap<String, SymbolId>,
    fns: Vec<FnDecl>,
    fns_by_name: HashMap<String, FnId>,
    /// Sort key: ids reordered so that (role, name) is increasing.
    order_rank: Vec<u32>,
    rank_to_id: Vec<SymbolId>,
    frozen: bool,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(
        &mut self,
        name: &str,
        role: SymbolRole,
        component: Option<u8>,
    ) -> Result<SymbolId, ExprError> {
        assert!(!self.frozen, "symbol table is frozen");
        if self.by_name.contains_key(name) || self.fns_by_name.contains_key(name) {
            return Err(ExprError::Redeclared(name.to_string()));
        }
        let id = SymbolId(self.symbols.len() as u32);
        self.symbols.push(Symbol {
            name: name.to_string(),
            role,
            component,
        });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn declare_fn(&mut self, name: &str, args: Vec<SymbolId>) -> Result<FnId, ExprError> {
        assert!(!self.frozen, "symbol table is frozen");
        if self.by_name.contains_key(name) || self.fns_by_name.contains_key(name) {
            return Err(ExprError::Redeclared(name.to_string()));
        }
        let id = FnId(self.fns.len() as u32);
        self.fns.push(FnDecl {
            name: name.to_string(),
            args,
        });
        self.fns_by_name.insert(name.to_string(), id);
        Ok(id)
    }

    /// Freeze the table and compute the (role, name) order ranks.
    pub fn freeze(&mut self) {
        let mut idx: Vec<usize> = (0..self.symbols.len()).collect();
        idx.sort_by(|&a, &b| {
            let sa = &self.symbols[a];
            let sb = &self.symbols[b];
            sa.role
                .cmp(&sb.role)
                .then_with(|| sa.name.cmp(&sb.name))
        });
        self.order_rank = vec![0; self.symbols.len()];
        self.rank_to_id = vec![SymbolId(0); self.symbols.len()];
        for (rank, &i) in idx.iter().enumerate() {
            self.order_rank[i] = rank as u32;
            self.rank_to_id[rank] = SymbolId(i as u32);
        }
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn lookup(&self, name: &str) -> Option<SymbolId> {
        self.by_name.get(name).copied()
    }

    pub fn lookup_fn(&self, name: &str) -> Option<FnId> {
        self.fns_by_name.get(name).copied()
    }

    pub fn symbol(&self, id: SymbolId) -> &Symbol {
        &self.symbols[id.0 as usize]
    }

    pub fn fn_decl(&self, id: FnId) -> &FnDecl {
        &self.fns[id.0 as usize]
    }

    pub fn name(&self, id: SymbolId) -> &str {
        &self.symbols[id.0 as usize].name
    }

    pub fn fn_name(&self, id: FnId) -> &str {
        &self.fns[id.0 as usize].name
    }

    /// Rank in the fixed (role, name) total order. Requires a frozen table.
    pub fn rank(&self, id: SymbolId) -> u32 {
        debug_assert!(self.frozen);
        self.order_rank[id.0 as usize]
    }

    /// Inverse of [`Self::rank`].
    pub fn id_at_rank(&self, rank: u32) -> SymbolId {
        debug_assert!(self.frozen);
        self.rank_to_id[rank as usize]
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = SymbolId> + '_ {
        (0..self.symbols.len() as u32).map(SymbolId)
    }

    pub fn fn_ids(&self) -> impl Iterator<Item = FnId> + '_ {
        (0..self.fns.len() as u32).map(FnId)
    }

    /// Ids sorted by the term-order rank.
    pub fn ids_in_order(&self) -> Vec<SymbolId> {
        let mut v: Vec<SymbolId> = self.ids().collect();
        v.sort_by_key(|&id| self.rank(id));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unique_names() {
        let mut t = SymbolTable::new();
        t.declare("S1", SymbolRole::FibreVariable, Some(1)).unwrap();
        assert!(t.declare("S1", SymbolRole::Parameter, None).is_err());
    }

    #[test]
    fn rank_orders_by_role_then_name() {
        let mut t = SymbolTable::new();
        let s = t.declare("S1", SymbolRole::FibreVariable, Some(1)).unwrap();
        let x = t.declare("x", SymbolRole::IndependentCoordinate, None).unwrap();
        t.freeze();
        // independent coordinates sort before fibre variables
        assert!(t.rank(x) < t.rank(s));
    }
}
