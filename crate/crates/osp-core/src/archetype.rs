//! Archetype definitions and the registry that owns them.
//!
//! An archetype is a named type in one of four roles — object, node, edge,
//! walker — with an ordered field schema and, for the three spatial roles,
//! attached abilities. Archetypes may extend a single parent of the same
//! role; instances of a child archetype match any ability triggered on an
//! ancestor.

use crate::abilities::{AbilityDef, Phase};
use crate::error::CoreError;
use crate::value::Value;
use std::collections::BTreeMap;
use std::fmt;

/// The four archetype roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchetypeKind {
    Object,
    Node,
    Edge,
    Walker,
}

impl ArchetypeKind {
    pub fn name(self) -> &'static str {
        match self {
            ArchetypeKind::Object => "object",
            ArchetypeKind::Node => "node",
            ArchetypeKind::Edge => "edge",
            ArchetypeKind::Walker => "walker",
        }
    }
}

impl fmt::Display for ArchetypeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Declarable field kinds. Property values must conform to the declared
/// kind both at creation and on every later assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Int,
    Float,
    Str,
    Bool,
    List,
    Map,
    Ref,
}

impl ValueKind {
    pub fn name(self) -> &'static str {
        match self {
            ValueKind::Int => "int",
            ValueKind::Float => "float",
            ValueKind::Str => "str",
            ValueKind::Bool => "bool",
            ValueKind::List => "list",
            ValueKind::Map => "map",
            ValueKind::Ref => "ref",
        }
    }

    /// Parse a kind keyword as it appears in source programs.
    pub fn parse(name: &str) -> Option<ValueKind> {
        Some(match name {
            "int" => ValueKind::Int,
            "float" => ValueKind::Float,
            "str" => ValueKind::Str,
            "bool" => ValueKind::Bool,
            "list" => ValueKind::List,
            "map" => ValueKind::Map,
            "ref" => ValueKind::Ref,
            _ => return None,
        })
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One declared field: name, kind, and the default applied when a creation
/// site omits the field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDef {
    pub name: String,
    pub kind: ValueKind,
    pub default: Value,
}

impl FieldDef {
    pub fn new(name: impl Into<String>, kind: ValueKind) -> FieldDef {
        FieldDef {
            name: name.into(),
            kind,
            default: Value::default_for(kind),
        }
    }

    pub fn with_default(mut self, default: Value) -> FieldDef {
        self.default = default;
        self
    }
}

/// Index of an archetype within its registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArchetypeId(pub u32);

impl fmt::Display for ArchetypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A registered archetype: role, optional parent, own fields, own abilities.
/// Inherited fields and abilities are resolved through the registry.
pub struct ArchetypeDef {
    pub name: String,
    pub kind: ArchetypeKind,
    pub parent: Option<ArchetypeId>,
    pub fields: Vec<FieldDef>,
    pub abilities: Vec<AbilityDef>,
}

impl fmt::Debug for ArchetypeDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ArchetypeDef")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("parent", &self.parent)
            .field("fields", &self.fields)
            .field("abilities", &self.abilities.len())
            .finish()
    }
}

/// The set of archetypes a program declares. Built once, then shared
/// immutably (typically behind an `Arc`) by the system state and engine.
#[derive(Debug, Default)]
pub struct Registry {
    defs: Vec<ArchetypeDef>,
    by_name: BTreeMap<String, ArchetypeId>,
}

impl Registry {
    pub fn new() -> Registry {
        Registry::default()
    }

    /// Register a new archetype. The parent, if any, must already exist and
    /// share the same role; parent chains are therefore acyclic by
    /// construction.
    pub fn add_archetype(
        &mut self,
        name: &str,
        kind: ArchetypeKind,
        parent: Option<ArchetypeId>,
    ) -> Result<ArchetypeId, CoreError> {
        if self.by_name.contains_key(name) {
            return Err(CoreError::DuplicateArchetype(name.to_string()));
        }
        if let Some(pid) = parent {
            let pdef = self.def(pid);
            if pdef.kind != kind {
                return Err(CoreError::BadParent {
                    child: name.to_string(),
                    parent: pdef.name.clone(),
                    reason: format!("roles differ ({} extends {})", kind, pdef.kind),
                });
            }
        }
        let id = ArchetypeId(self.defs.len() as u32);
        self.defs.push(ArchetypeDef {
            name: name.to_string(),
            kind,
            parent,
            fields: Vec::new(),
            abilities: Vec::new(),
        });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    /// Add an own field to an archetype. Rejects duplicates against the
    /// effective (inherited + own) schema and defaults that do not conform.
    pub fn add_field(&mut self, arch: ArchetypeId, field: FieldDef) -> Result<(), CoreError> {
        let name = self.def(arch).name.clone();
        if self
            .effective_fields(arch)
            .iter()
            .any(|f| f.name == field.name)
        {
            return Err(CoreError::DuplicateField {
                archetype: name,
                field: field.name,
            });
        }
        if !field.default.conforms(field.kind) {
            return Err(CoreError::FieldKindMismatch {
                archetype: name,
                field: field.name.clone(),
                expected: field.kind,
                got: field
                    .default
                    .kind()
                    .unwrap_or(ValueKind::Ref),
            });
        }
        self.defs[arch.0 as usize].fields.push(field);
        Ok(())
    }

    /// Attach an ability to an archetype. Objects cannot own abilities, and
    /// the trigger role must be the spatial complement of the owner role:
    /// node/edge owners trigger on walkers, walker owners trigger on nodes
    /// or edges.
    pub fn add_ability(&mut self, owner: ArchetypeId, ability: AbilityDef) -> Result<(), CoreError> {
        let owner_kind = self.def(owner).kind;
        let owner_name = self.def(owner).name.clone();
        let trigger_kind = self.def(ability.trigger).kind;
        let trigger_name = self.def(ability.trigger).name.clone();
        let compatible = match owner_kind {
            ArchetypeKind::Object => {
                return Err(CoreError::AbilityOnObject(owner_name));
            }
            ArchetypeKind::Node | ArchetypeKind::Edge => trigger_kind == ArchetypeKind::Walker,
            ArchetypeKind::Walker => {
                matches!(trigger_kind, ArchetypeKind::Node | ArchetypeKind::Edge)
            }
        };
        if !compatible {
            return Err(CoreError::BadTrigger {
                owner: owner_name,
                ability: ability.name,
                trigger: trigger_name,
                reason: format!(
                    "a {} ability must trigger on {}",
                    owner_kind,
                    if owner_kind == ArchetypeKind::Walker {
                        "a node or edge archetype"
                    } else {
                        "a walker archetype"
                    }
                ),
            });
        }
        self.defs[owner.0 as usize].abilities.push(ability);
        Ok(())
    }

    pub fn lookup(&self, name: &str) -> Option<ArchetypeId> {
        self.by_name.get(name).copied()
    }

    pub fn resolve(&self, name: &str) -> Result<ArchetypeId, CoreError> {
        self.lookup(name)
            .ok_or_else(|| CoreError::UnknownArchetype(name.to_string()))
    }

    pub fn def(&self, id: ArchetypeId) -> &ArchetypeDef {
        &self.defs[id.0 as usize]
    }

    pub fn name(&self, id: ArchetypeId) -> &str {
        &self.def(id).name
    }

    pub fn kind(&self, id: ArchetypeId) -> ArchetypeKind {
        self.def(id).kind
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    /// Ancestry chain from the root ancestor down to (and including) `id`.
    pub fn ancestry(&self, id: ArchetypeId) -> Vec<ArchetypeId> {
        let mut chain = Vec::new();
        let mut cur = Some(id);
        while let Some(a) = cur {
            chain.push(a);
            cur = self.def(a).parent;
        }
        chain.reverse();
        chain
    }

    /// Whether `sub` is `ancestor` or declares it (transitively) as parent.
    pub fn is_subtype(&self, sub: ArchetypeId, ancestor: ArchetypeId) -> bool {
        let mut cur = Some(sub);
        while let Some(a) = cur {
            if a == ancestor {
                return true;
            }
            cur = self.def(a).parent;
        }
        false
    }

    /// The effective field schema: ancestor fields first (root-most first),
    /// then own fields, each group in declaration order.
    pub fn effective_fields(&self, id: ArchetypeId) -> Vec<&FieldDef> {
        let mut fields = Vec::new();
        for a in self.ancestry(id) {
            fields.extend(self.def(a).fields.iter());
        }
        fields
    }

    /// Look up a field in the effective schema.
    pub fn field(&self, id: ArchetypeId, name: &str) -> Option<&FieldDef> {
        self.effective_fields(id)
            .into_iter()
            .find(|f| f.name == name)
    }

    /// Abilities of `owner` for the given phase whose trigger matches the
    /// counterpart archetype, ancestor-declared first, each group in
    /// declaration order. Each entry carries the declaring archetype so
    /// traces can attribute inherited abilities.
    pub fn matching_abilities(
        &self,
        owner: ArchetypeId,
        counterpart: ArchetypeId,
        phase: Phase,
    ) -> Vec<(ArchetypeId, usize)> {
        let mut out = Vec::new();
        for decl in self.ancestry(owner) {
            for (i, ab) in self.def(decl).abilities.iter().enumerate() {
                if ab.phase == phase && self.is_subtype(counterpart, ab.trigger) {
                    out.push((decl, i));
                }
            }
        }
        out
    }

    pub fn ability(&self, decl: ArchetypeId, index: usize) -> &AbilityDef {
        &self.def(decl).abilities[index]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abilities::{AbilityBody, Flow, Invocation};
    use crate::engine::Engine;
    use crate::error::RuntimeError;
    use std::sync::Arc;

    struct Noop;
    impl AbilityBody for Noop {
        fn run(&self, _: &mut Engine, _: &Invocation) -> Result<Flow, RuntimeError> {
            Ok(Flow::Continue)
        }
    }

    fn ability(name: &str, trigger: ArchetypeId, phase: Phase) -> AbilityDef {
        AbilityDef {
            name: name.to_string(),
            trigger,
            phase,
            body: Arc::new(Noop),
        }
    }

    #[test]
    fn parent_must_share_role() {
        let mut reg = Registry::new();
        let n = reg.add_archetype("City", ArchetypeKind::Node, None).unwrap();
        let err = reg
            .add_archetype("Courier", ArchetypeKind::Walker, Some(n))
            .unwrap_err();
        assert!(matches!(err, CoreError::BadParent { .. }));
    }

    #[test]
    fn effective_fields_are_ancestor_first() {
        let mut reg = Registry::new();
        let base = reg.add_archetype("Base", ArchetypeKind::Node, None).unwrap();
        reg.add_field(base, FieldDef::new("a", ValueKind::Int)).unwrap();
        let child = reg
            .add_archetype("Child", ArchetypeKind::Node, Some(base))
            .unwrap();
        reg.add_field(child, FieldDef::new("b", ValueKind::Str)).unwrap();
        let names: Vec<_> = reg
            .effective_fields(child)
            .iter()
            .map(|f| f.name.clone())
            .collect();
        assert_eq!(names, ["a", "b"]);
        // Shadowing an inherited field is a duplicate.
        let err = reg
            .add_field(child, FieldDef::new("a", ValueKind::Int))
            .unwrap_err();
        assert!(matches!(err, CoreError::DuplicateField { .. }));
    }

    #[test]
    fn subtype_matching_walks_the_parent_chain() {
        let mut reg = Registry::new();
        let base = reg.add_archetype("Base", ArchetypeKind::Walker, None).unwrap();
        let mid = reg
            .add_archetype("Mid", ArchetypeKind::Walker, Some(base))
            .unwrap();
        let leaf = reg
            .add_archetype("Leaf", ArchetypeKind::Walker, Some(mid))
            .unwrap();
        assert!(reg.is_subtype(leaf, base));
        assert!(reg.is_subtype(leaf, leaf));
        assert!(!reg.is_subtype(base, leaf));
    }

    #[test]
    fn ability_placement_rules() {
        let mut reg = Registry::new();
        let obj = reg.add_archetype("Plain", ArchetypeKind::Object, None).unwrap();
        let node = reg.add_archetype("Spot", ArchetypeKind::Node, None).unwrap();
        let walker = reg.add_archetype("Agent", ArchetypeKind::Walker, None).unwrap();

        let err = reg
            .add_ability(obj, ability("x", walker, Phase::Entry))
            .unwrap_err();
        assert!(matches!(err, CoreError::AbilityOnObject(_)));

        // Node ability must trigger on a walker, not on another node.
        let err = reg
            .add_ability(node, ability("x", node, Phase::Entry))
            .unwrap_err();
        assert!(matches!(err, CoreError::BadTrigger { .. }));

        reg.add_ability(node, ability("x", walker, Phase::Entry)).unwrap();
        reg.add_ability(walker, ability("y", node, Phase::Exit)).unwrap();
    }

    #[test]
    fn matching_orders_ancestor_declarations_first() {
        let mut reg = Registry::new();
        let spot = reg.add_archetype("Spot", ArchetypeKind::Node, None).unwrap();
        let base = reg.add_archetype("Base", ArchetypeKind::Walker, None).unwrap();
        let child = reg
            .add_archetype("Child", ArchetypeKind::Walker, Some(base))
            .unwrap();
        reg.add_ability(base, ability("from_base", spot, Phase::Entry)).unwrap();
        reg.add_ability(child, ability("from_child", spot, Phase::Entry)).unwrap();

        // A Child walker arriving on a Spot runs the Base-declared ability first.
        let matched = reg.matching_abilities(child, spot, Phase::Entry);
        let names: Vec<_> = matched
            .iter()
            .map(|&(decl, i)| reg.ability(decl, i).name.clone())
            .collect();
        assert_eq!(names, ["from_base", "from_child"]);

        // A Base walker does not inherit downward.
        let matched = reg.matching_abilities(base, spot, Phase::Entry);
        assert_eq!(matched.len(), 1);
    }

    #[test]
    fn trigger_on_ancestor_matches_subtype_counterpart() {
        let mut reg = Registry::new();
        let spot = reg.add_archetype("Spot", ArchetypeKind::Node, None).unwrap();
        let base = reg.add_archetype("Base", ArchetypeKind::Walker, None).unwrap();
        let child = reg
            .add_archetype("Child", ArchetypeKind::Walker, Some(base))
            .unwrap();
        // Spot's ability triggers on Base; a Child counterpart matches it,
        // an unrelated walker does not.
        reg.add_ability(spot, ability("greet", base, Phase::Entry)).unwrap();
        let other = reg.add_archetype("Other", ArchetypeKind::Walker, None).unwrap();
        assert_eq!(reg.matching_abilities(spot, child, Phase::Entry).len(), 1);
        assert_eq!(reg.matching_abilities(spot, other, Phase::Entry).len(), 0);
    }
}
