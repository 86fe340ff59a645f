//! Domain taxonomy, capability dimensions and the catalog document that
//! scopes a deployment.
//!
//! The tree is checked structurally only: single root, no cycles, everything
//! reachable, and priority ranks that never increase in importance towards the
//! root. Whether sibling subdomains are mutually exclusive and collectively
//! exhaustive is left to human review.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::RollupSpec;
use crate::grading::{Rubric, RubricCatalog};
use crate::ids::{DimensionId, NodeId, RubricId};
use crate::scalar::Scalar;

pub const TAXONOMY_SCHEMA: &str = "lalaeval.taxonomy/1";

/// Tolerance applied to every "weights sum to one" check.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Subdomain priority. `P0` is the most important; ordering follows the
/// numeric suffix, so `P0 < P3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Priority {
    P0,
    P1,
    P2,
    P3,
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyNode {
    pub id: NodeId,
    pub name: String,
    #[serde(default)]
    pub parent_id: Option<NodeId>,
    #[serde(default)]
    pub priority: Option<Priority>,
    #[serde(default)]
    pub notes: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("unknown parent node `{0}`")]
    UnknownParent(NodeId),
    #[error("node `{0}` would become its own ancestor")]
    CycleWouldForm(NodeId),
    #[error("priority {child} under ancestor `{ancestor}` with priority {ancestor_priority}")]
    PriorityOrderViolation { child: Priority, ancestor: NodeId, ancestor_priority: Priority },
    #[error("node name must not be empty")]
    EmptyName,
    #[error("node id `{0}` already exists")]
    DuplicateId(NodeId),
    #[error("tree already has root `{0}`")]
    SecondRoot(NodeId),
}

/// One structural problem found by [`TaxonomyTree::validate`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    MissingRoot,
    MultipleRoots { roots: Vec<NodeId> },
    DuplicateId { id: NodeId },
    EmptyName { id: NodeId },
    UnknownParent { id: NodeId, parent: NodeId },
    Cycle { id: NodeId },
    Unreachable { id: NodeId },
    PriorityOrder { id: NodeId, ancestor: NodeId },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaxonomyTree {
    nodes: Vec<TaxonomyNode>,
}

/// Parameters for [`TaxonomyTree::add_node`].
#[derive(Clone, Debug, Default)]
pub struct NewNode {
    /// Explicit id; one is generated when absent.
    pub id: Option<NodeId>,
    pub parent_id: Option<NodeId>,
    pub name: String,
    pub priority: Option<Priority>,
    pub notes: String,
}

impl NewNode {
    pub fn named(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Self::default() }
    }

    pub fn under(mut self, parent: &NodeId) -> Self {
        self.parent_id = Some(parent.clone());
        self
    }

    pub fn with_priority(mut self, priority: Priority) -> Self {
        self.priority = Some(priority);
        self
    }

    pub fn with_id(mut self, id: impl Into<NodeId>) -> Self {
        self.id = Some(id.into());
        self
    }
}

impl TaxonomyTree {
    pub fn new() -> Self {
        Self::default()
    }

    /// Wraps raw nodes without checking them; call [`validate`](Self::validate).
    pub fn from_nodes(nodes: Vec<TaxonomyNode>) -> Self {
        Self { nodes }
    }

    pub fn nodes(&self) -> &[TaxonomyNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, id: &NodeId) -> Option<&TaxonomyNode> {
        self.nodes.iter().find(|n| &n.id == id)
    }

    pub fn root(&self) -> Option<&TaxonomyNode> {
        self.nodes.iter().find(|n| n.parent_id.is_none())
    }

    pub fn children<'a>(&'a self, id: &'a NodeId) -> impl Iterator<Item = &'a TaxonomyNode> + 'a {
        self.nodes.iter().filter(move |n| n.parent_id.as_ref() == Some(id))
    }

    /// Ancestors from the parent upwards. Stops on unknown parents and on
    /// revisits, so it is safe on malformed trees.
    pub fn ancestors<'a>(&'a self, id: &NodeId) -> Vec<&'a TaxonomyNode> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        let mut cursor = self.get(id).and_then(|n| n.parent_id.clone());
        while let Some(pid) = cursor {
            if !seen.insert(pid.clone()) {
                break;
            }
            match self.get(&pid) {
                Some(node) => {
                    out.push(node);
                    cursor = node.parent_id.clone();
                }
                None => break,
            }
        }
        out
    }

    /// Inserts a node, leaving the tree untouched on any error.
    pub fn add_node(&mut self, new: NewNode) -> Result<NodeId, TaxonomyError> {
        if new.name.trim().is_empty() {
            return Err(TaxonomyError::EmptyName);
        }
        let id = match new.id {
            Some(id) => id,
            None => self.fresh_id(),
        };
        if new.parent_id.as_ref() == Some(&id) {
            return Err(TaxonomyError::CycleWouldForm(id));
        }
        if self.get(&id).is_some() {
            return Err(TaxonomyError::DuplicateId(id));
        }
        match &new.parent_id {
            Some(parent) => {
                if self.get(parent).is_none() {
                    return Err(TaxonomyError::UnknownParent(parent.clone()));
                }
            }
            None => {
                if let Some(root) = self.root() {
                    return Err(TaxonomyError::SecondRoot(root.id.clone()));
                }
            }
        }
        if let (Some(priority), Some(parent)) = (new.priority, &new.parent_id) {
            let parent_node = self.get(parent).expect("checked above");
            let chain = std::iter::once(parent_node).chain(self.ancestors(parent));
            for ancestor in chain {
                if let Some(ap) = ancestor.priority {
                    if ap <= priority {
                        return Err(TaxonomyError::PriorityOrderViolation {
                            child: priority,
                            ancestor: ancestor.id.clone(),
                            ancestor_priority: ap,
                        });
                    }
                }
            }
        }
        self.nodes.push(TaxonomyNode {
            id: id.clone(),
            name: new.name,
            parent_id: new.parent_id,
            priority: new.priority,
            notes: new.notes,
        });
        Ok(id)
    }

    /// Copy-on-write variant of [`add_node`](Self::add_node).
    pub fn with_node(&self, new: NewNode) -> Result<(Self, NodeId), TaxonomyError> {
        let mut next = self.clone();
        let id = next.add_node(new)?;
        Ok((next, id))
    }

    fn fresh_id(&self) -> NodeId {
        let mut n = self.nodes.len() + 1;
        loop {
            let candidate = NodeId::new(format!("node-{n}"));
            if self.get(&candidate).is_none() {
                return candidate;
            }
            n += 1;
        }
    }

    /// Structural check. Returns an empty list iff every tree invariant holds.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            out.push(Violation::MissingRoot);
            return out;
        }

        let mut by_id: HashMap<&NodeId, &TaxonomyNode> = HashMap::new();
        for node in &self.nodes {
            if by_id.insert(&node.id, node).is_some() {
                out.push(Violation::DuplicateId { id: node.id.clone() });
            }
            if node.name.trim().is_empty() {
                out.push(Violation::EmptyName { id: node.id.clone() });
            }
        }

        let roots: Vec<NodeId> = self.nodes.iter().filter(|n| n.parent_id.is_none()).map(|n| n.id.clone()).collect();
        match roots.len() {
            0 => out.push(Violation::MissingRoot),
            1 => {}
            _ => out.push(Violation::MultipleRoots { roots: roots.clone() }),
        }

        for node in &self.nodes {
            if let Some(parent) = &node.parent_id {
                if !by_id.contains_key(parent) {
                    out.push(Violation::UnknownParent { id: node.id.clone(), parent: parent.clone() });
                }
            }
        }

        // A node is on a cycle iff walking its parent chain returns to it.
        let mut cyclic = BTreeSet::new();
        for node in &self.nodes {
            let mut seen = HashSet::new();
            let mut cursor = node.parent_id.as_ref();
            while let Some(pid) = cursor {
                if pid == &node.id {
                    cyclic.insert(node.id.clone());
                    break;
                }
                if !seen.insert(pid) {
                    break;
                }
                cursor = by_id.get(pid).and_then(|p| p.parent_id.as_ref());
            }
        }
        out.extend(cyclic.iter().map(|id| Violation::Cycle { id: id.clone() }));

        if roots.len() == 1 {
            let reached: HashSet<NodeId> = self.reachable_from(&roots[0]).into_iter().collect();
            for node in &self.nodes {
                if !reached.contains(&node.id) && !cyclic.contains(&node.id) {
                    out.push(Violation::Unreachable { id: node.id.clone() });
                }
            }
        }

        for node in &self.nodes {
            let Some(p) = node.priority else { continue };
            for ancestor in self.ancestors(&node.id) {
                if ancestor.id == node.id {
                    continue;
                }
                if let Some(ap) = ancestor.priority {
                    if ap <= p {
                        out.push(Violation::PriorityOrder { id: node.id.clone(), ancestor: ancestor.id.clone() });
                    }
                }
            }
        }

        out.sort();
        out.dedup();
        out
    }

    fn reachable_from(&self, root: &NodeId) -> Vec<NodeId> {
        let mut seen = HashSet::new();
        let mut stack = vec![root.clone()];
        let mut order = Vec::new();
        while let Some(id) = stack.pop() {
            if !seen.insert(id.clone()) {
                continue;
            }
            order.push(id.clone());
            let mut kids: Vec<NodeId> = self.children(&id).map(|c| c.id.clone()).collect();
            kids.reverse();
            stack.extend(kids);
        }
        order
    }

    /// Pre-order traversal from the root, children in insertion order.
    pub fn depth_first(&self) -> Vec<&TaxonomyNode> {
        match self.root() {
            Some(root) => self.reachable_from(&root.id).iter().filter_map(|id| self.get(id)).collect(),
            None => Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Simple,
    Intermediate,
    Difficult,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Simple, Difficulty::Intermediate, Difficulty::Difficult];

    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Simple => "simple",
            Difficulty::Intermediate => "intermediate",
            Difficulty::Difficult => "difficult",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionGroup {
    General,
    Domain,
}

impl fmt::Display for DimensionGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DimensionGroup::General => "General",
            DimensionGroup::Domain => "Domain",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapabilityDimension {
    pub id: DimensionId,
    pub name: String,
    pub group: DimensionGroup,
    #[serde(default)]
    pub description: String,
    /// Grading weight `w_j`.
    pub weight: f64,
    pub rubric_id: RubricId,
    #[serde(default)]
    pub difficulty_definitions: BTreeMap<Difficulty, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightScheme {
    Equal,
    Explicit(BTreeMap<DimensionId, f64>),
}

impl WeightScheme {
    /// Explicit scheme taken from each dimension's configured weight.
    pub fn configured(dimensions: &[CapabilityDimension]) -> Self {
        WeightScheme::Explicit(dimensions.iter().map(|d| (d.id.clone(), d.weight)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum WeightError {
    #[error("dimension list is empty")]
    EmptyDimensionList,
    #[error("no weight supplied for dimension `{0}`")]
    MissingWeight(DimensionId),
    #[error("weight for dimension `{0}` is negative or not finite")]
    InvalidWeight(DimensionId),
    #[error("weights sum to {sum}, expected 1")]
    WeightsDoNotSumToOne { sum: f64 },
}

/// Produces the `w_j` map for a dimension selection.
pub fn derive_weights<T: Scalar>(
    dimensions: &[CapabilityDimension],
    scheme: &WeightScheme,
) -> Result<BTreeMap<DimensionId, T>, WeightError> {
    if dimensions.is_empty() {
        return Err(WeightError::EmptyDimensionList);
    }
    let weights: BTreeMap<DimensionId, T> = match scheme {
        WeightScheme::Equal => {
            let share = T::ratio(1, dimensions.len() as u64);
            dimensions.iter().map(|d| (d.id.clone(), share.clone())).collect()
        }
        WeightScheme::Explicit(given) => {
            let mut out = BTreeMap::new();
            for d in dimensions {
                let w = *given.get(&d.id).ok_or_else(|| WeightError::MissingWeight(d.id.clone()))?;
                if !w.is_finite() || w < 0.0 {
                    return Err(WeightError::InvalidWeight(d.id.clone()));
                }
                out.insert(d.id.clone(), T::from_config_f64(w));
            }
            out
        }
    };
    check_weight_sum(weights.values())?;
    Ok(weights)
}

/// Accepts iff the weights sum to one within [`WEIGHT_TOLERANCE`].
pub fn check_weight_sum<'a, T: Scalar>(weights: impl IntoIterator<Item = &'a T>) -> Result<(), WeightError> {
    let sum: T = weights.into_iter().cloned().sum();
    let sum = sum.to_f64();
    if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(WeightError::WeightsDoNotSumToOne { sum });
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeSpec {
    #[serde(default)]
    pub selected_node_ids: Vec<NodeId>,
    #[serde(default)]
    pub priority_order: Vec<(NodeId, Priority)>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CatalogViolation {
    Tree { violation: Violation },
    UnknownScopeNode { id: NodeId },
    RepeatedScopeRank { id: NodeId },
    DuplicateDimension { id: DimensionId },
    MissingRubric { dimension: DimensionId, rubric: RubricId },
    UnknownRollupDimension { group: String, dimension: DimensionId },
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("malformed catalog document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported catalog schema `{0}`")]
    SchemaVersionUnsupported(String),
}

/// Taxonomy, scope and dimension catalog serialized as one document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub schema: String,
    #[serde(default)]
    pub taxonomy: TaxonomyTree,
    #[serde(default)]
    pub scope: ScopeSpec,
    #[serde(default)]
    pub dimensions: Vec<CapabilityDimension>,
    #[serde(default)]
    pub rubrics: RubricCatalog,
    #[serde(default)]
    pub rollups: RollupSpec,
}

impl Default for Catalog {
    fn default() -> Self {
        Self {
            schema: TAXONOMY_SCHEMA.to_owned(),
            taxonomy: TaxonomyTree::default(),
            scope: ScopeSpec::default(),
            dimensions: Vec::new(),
            rubrics: RubricCatalog::default(),
            rollups: RollupSpec::default(),
        }
    }
}

impl Catalog {
    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let schema = value.get("schema").and_then(|s| s.as_str()).unwrap_or_default();
        if schema != TAXONOMY_SCHEMA {
            return Err(CatalogError::SchemaVersionUnsupported(schema.to_owned()));
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }

    pub fn dimension(&self, id: &DimensionId) -> Option<&CapabilityDimension> {
        self.dimensions.iter().find(|d| &d.id == id)
    }

    /// Current version of the rubric bound to a dimension.
    pub fn rubric_for(&self, dimension: &DimensionId) -> Option<&Rubric> {
        self.dimension(dimension).and_then(|d| self.rubrics.current(&d.rubric_id))
    }

    pub fn validate(&self) -> Vec<CatalogViolation> {
        let mut out: Vec<CatalogViolation> =
            self.taxonomy.validate().into_iter().map(|violation| CatalogViolation::Tree { violation }).collect();
        for id in &self.scope.selected_node_ids {
            if self.taxonomy.get(id).is_none() {
                out.push(CatalogViolation::UnknownScopeNode { id: id.clone() });
            }
        }
        let mut ranked = HashSet::new();
        for (id, _) in &self.scope.priority_order {
            if self.taxonomy.get(id).is_none() {
                out.push(CatalogViolation::UnknownScopeNode { id: id.clone() });
            }
            if !ranked.insert(id) {
                out.push(CatalogViolation::RepeatedScopeRank { id: id.clone() });
            }
        }
        let mut seen = HashSet::new();
        for d in &self.dimensions {
            if !seen.insert(&d.id) {
                out.push(CatalogViolation::DuplicateDimension { id: d.id.clone() });
            }
            if self.rubrics.current(&d.rubric_id).is_none() {
                out.push(CatalogViolation::MissingRubric { dimension: d.id.clone(), rubric: d.rubric_id.clone() });
            }
        }
        for group in &self.rollups.groups {
            for member in &group.dimensions {
                if !seen.contains(member) {
                    out.push(CatalogViolation::UnknownRollupDimension {
                        group: group.name.clone(),
                        dimension: member.clone(),
                    });
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> (TaxonomyTree, Vec<NodeId>) {
        let mut t = TaxonomyTree::new();
        let a = t.add_node(NewNode::named("Logistics").with_priority(Priority::P3)).unwrap();
        let b = t.add_node(NewNode::named("Transportation").under(&a).with_priority(Priority::P2)).unwrap();
        let c = t.add_node(NewNode::named("Road Transportation").under(&b).with_priority(Priority::P1)).unwrap();
        let d = t
            .add_node(NewNode::named("Intracity Freight Transportation").under(&c).with_priority(Priority::P0))
            .unwrap();
        (t, vec![a, b, c, d])
    }

    #[test]
    fn accepts_priority_chain_from_p3_down_to_p0() {
        let (t, ids) = chain();
        assert_eq!(t.len(), 4);
        assert!(t.validate().is_empty());
        assert_eq!(t.ancestors(&ids[3]).len(), 3);
    }

    #[test]
    fn rejects_less_important_child_under_p0() {
        let (mut t, ids) = chain();
        let before = t.clone();
        let err = t.add_node(NewNode::named("Vans").under(&ids[3]).with_priority(Priority::P3)).unwrap_err();
        assert!(matches!(err, TaxonomyError::PriorityOrderViolation { child: Priority::P3, .. }));
        assert_eq!(t, before, "failed insert must leave the tree unchanged");
    }

    #[test]
    fn equal_rank_on_a_chain_is_rejected_but_siblings_may_repeat() {
        let (mut t, ids) = chain();
        let err = t.add_node(NewNode::named("Dup").under(&ids[2]).with_priority(Priority::P1)).unwrap_err();
        assert!(matches!(err, TaxonomyError::PriorityOrderViolation { .. }));
        t.add_node(NewNode::named("Intracity and Intercity").under(&ids[1]).with_priority(Priority::P1)).unwrap();
        assert!(t.validate().is_empty());
    }

    #[test]
    fn self_parent_is_a_cycle() {
        let (mut t, _) = chain();
        let err = t.add_node(NewNode::named("Loop").with_id("x").under(&NodeId::new("x"))).unwrap_err();
        assert_eq!(err, TaxonomyError::CycleWouldForm(NodeId::new("x")));
    }

    #[test]
    fn unknown_parent_and_empty_name() {
        let (mut t, _) = chain();
        assert_eq!(
            t.add_node(NewNode::named("Orphan").under(&NodeId::new("nope"))).unwrap_err(),
            TaxonomyError::UnknownParent(NodeId::new("nope"))
        );
        assert_eq!(t.add_node(NewNode::named("  ")).unwrap_err(), TaxonomyError::EmptyName);
        assert!(matches!(t.add_node(NewNode::named("Other root")).unwrap_err(), TaxonomyError::SecondRoot(_)));
    }

    #[test]
    fn with_node_leaves_original_untouched() {
        let (t, ids) = chain();
        let (next, _) = t.with_node(NewNode::named("Warehousing").under(&ids[0])).unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(next.len(), 5);
    }

    fn node(id: &str, parent: Option<&str>, priority: Option<Priority>) -> TaxonomyNode {
        TaxonomyNode {
            id: id.into(),
            name: id.to_uppercase(),
            parent_id: parent.map(NodeId::from),
            priority,
            notes: String::new(),
        }
    }

    #[test]
    fn empty_tree_has_missing_root() {
        assert_eq!(TaxonomyTree::new().validate(), vec![Violation::MissingRoot]);
    }

    #[test]
    fn two_parentless_nodes_are_multiple_roots() {
        let t = TaxonomyTree::from_nodes(vec![node("a", None, None), node("b", None, None)]);
        assert_eq!(t.validate(), vec![Violation::MultipleRoots { roots: vec!["a".into(), "b".into()] }]);
    }

    #[test]
    fn detects_cycles_dangling_parents_and_rank_inversions() {
        let t = TaxonomyTree::from_nodes(vec![
            node("root", None, Some(Priority::P0)),
            node("child", Some("root"), Some(Priority::P2)),
            node("x", Some("y"), None),
            node("y", Some("x"), None),
            node("z", Some("ghost"), None),
        ]);
        let report = t.validate();
        assert!(report.contains(&Violation::Cycle { id: "x".into() }));
        assert!(report.contains(&Violation::Cycle { id: "y".into() }));
        assert!(report.contains(&Violation::UnknownParent { id: "z".into(), parent: "ghost".into() }));
        assert!(report.contains(&Violation::Unreachable { id: "z".into() }));
        assert!(report.contains(&Violation::PriorityOrder { id: "child".into(), ancestor: "root".into() }));
        assert_eq!(report, t.validate());
    }

    fn dims(n: usize) -> Vec<CapabilityDimension> {
        (0..n)
            .map(|i| CapabilityDimension {
                id: DimensionId::new(format!("d{i}")),
                name: format!("Dimension {i}"),
                group: DimensionGroup::General,
                description: String::new(),
                weight: 0.0,
                rubric_id: "r".into(),
                difficulty_definitions: BTreeMap::new(),
            })
            .collect()
    }

    #[test]
    fn equal_weights_split_evenly() {
        let w: BTreeMap<_, f64> = derive_weights(&dims(6), &WeightScheme::Equal).unwrap();
        assert!(w.values().all(|&x| (x - 1.0 / 6.0).abs() < 1e-15));
        let exact: BTreeMap<_, crate::Exact> = derive_weights(&dims(6), &WeightScheme::Equal).unwrap();
        assert!(exact.values().all(|x| *x == crate::Exact::ratio(1, 6)));
    }

    #[test]
    fn explicit_weights_pass_through_or_fail_on_sum() {
        let d = dims(2);
        let ok = WeightScheme::Explicit([(d[0].id.clone(), 0.7), (d[1].id.clone(), 0.3)].into());
        let w: BTreeMap<_, f64> = derive_weights(&d, &ok).unwrap();
        assert_eq!(w[&d[0].id], 0.7);
        assert_eq!(w[&d[1].id], 0.3);

        let bad = WeightScheme::Explicit([(d[0].id.clone(), 0.7), (d[1].id.clone(), 0.4)].into());
        assert!(matches!(derive_weights::<f64>(&d, &bad), Err(WeightError::WeightsDoNotSumToOne { .. })));
        let partial = WeightScheme::Explicit([(d[0].id.clone(), 1.0)].into());
        assert_eq!(derive_weights::<f64>(&d, &partial), Err(WeightError::MissingWeight(d[1].id.clone())));
        assert_eq!(derive_weights::<f64>(&[], &WeightScheme::Equal), Err(WeightError::EmptyDimensionList));
    }
}
