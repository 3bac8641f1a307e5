//! Instance and solution files.
//!
//! JSON in, JSON out, with strict referential validation and field-precise
//! error messages. Node ids must be dense (`0..n`), element ids likewise;
//! undirected kinds list each edge once and are materialized as paired arcs.
//! Solutions carry a digest of the canonical instance bytes so verification
//! refuses mismatched pairs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::coverage::CoverageInstance;
use crate::dst::SteinerInstance;
use crate::graph::{validate_out_tree, NodeId, NodeWeightedDigraph, OutTree};
use crate::reductions::GroupInstance;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("{field}: {message}")]
    Validation { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ParseError {
    ParseError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InstanceKind {
    #[serde(rename = "dcbc")]
    Dcbc,
    #[serde(rename = "ucbc")]
    Ucbc,
    #[serde(rename = "dst")]
    Dst,
    #[serde(rename = "dst-bidirected")]
    DstBidirected,
    #[serde(rename = "csc")]
    Csc,
    #[serde(rename = "gst")]
    Gst,
}

impl InstanceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            InstanceKind::Dcbc => "dcbc",
            InstanceKind::Ucbc => "ucbc",
            InstanceKind::Dst => "dst",
            InstanceKind::DstBidirected => "dst-bidirected",
            InstanceKind::Csc => "csc",
            InstanceKind::Gst => "gst",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: usize,
    pub cost: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub elements: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementSpec {
    pub id: usize,
    pub prize: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub format_version: u32,
    pub kind: InstanceKind,
    /// Orientation flag; used by csc and gst only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directed: Option<bool>,
    pub nodes: Vec<NodeSpec>,
    pub arcs: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub elements: Vec<ElementSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<Vec<usize>>,
    pub root: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terminals: Vec<usize>,
}

/// Fully validated, solver-ready form of an instance file.
#[derive(Debug, Clone)]
pub enum TypedInstance {
    Coverage(CoverageInstance),
    Steiner(SteinerInstance),
    BidirectedSteiner(SteinerInstance),
    Csc(CoverageInstance),
    Gst(GroupInstance),
}

impl InstanceFile {
    pub fn is_directed(&self) -> bool {
        match self.kind {
            InstanceKind::Dcbc | InstanceKind::Dst | InstanceKind::DstBidirected => true,
            InstanceKind::Ucbc => false,
            InstanceKind::Csc | InstanceKind::Gst => self.directed.unwrap_or(false),
        }
    }
}

/// Canonical serialization; identical values produce identical bytes.
pub fn write_instance(file: &InstanceFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("instance files always serialize");
    s.push('\n');
    s
}

pub fn instance_digest(file: &InstanceFile) -> String {
    let bytes = write_instance(file);
    let mut hasher = Sha256::new();
    hasher.update(bytes.as_bytes());
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn parse_instance(text: &str) -> Result<(InstanceFile, TypedInstance), ParseError> {
    let file: InstanceFile =
        serde_json::from_str(text).map_err(|e| ParseError::Json(e.to_string()))?;
    let typed = typed_from_file(&file)?;
    Ok((file, typed))
}

/// Validates every cross-reference and builds the solver-ready instance.
pub fn typed_from_file(file: &InstanceFile) -> Result<TypedInstance, ParseError> {
    if file.format_version != FORMAT_VERSION {
        return Err(invalid(
            "format_version",
            format!("expected {FORMAT_VERSION}, found {}", file.format_version),
        ));
    }
    let n = file.nodes.len();
    if n == 0 {
        return Err(invalid("nodes", "at least one node is required"));
    }
    let mut seen = vec![false; n];
    for (i, node) in file.nodes.iter().enumerate() {
        if node.id >= n {
            return Err(invalid(
                format!("nodes[{i}].id"),
                format!("node ids must be dense 0..{n}, found {}", node.id),
            ));
        }
        if seen[node.id] {
            return Err(invalid(
                format!("nodes[{i}].id"),
                format!("duplicate node id {}", node.id),
            ));
        }
        seen[node.id] = true;
        if node.cost < 0.0 || node.cost.is_nan() {
            return Err(invalid(
                format!("nodes[{i}].cost"),
                format!("cost must be nonnegative, found {}", node.cost),
            ));
        }
    }
    if file.root >= n {
        return Err(invalid("root", format!("unknown node id {}", file.root)));
    }

    match file.kind {
        InstanceKind::Csc | InstanceKind::Gst => {
            if file.directed.is_none() {
                return Err(invalid(
                    "directed",
                    format!("kind {} requires the directed flag", file.kind.as_str()),
                ));
            }
        }
        _ => {
            if file.directed.is_some() {
                return Err(invalid(
                    "directed",
                    format!("kind {} fixes its orientation; drop the flag", file.kind.as_str()),
                ));
            }
        }
    }
    let budgeted = matches!(file.kind, InstanceKind::Dcbc | InstanceKind::Ucbc);
    if budgeted && file.budget.is_none() {
        return Err(invalid("budget", "budgeted kinds require a budget"));
    }
    if !budgeted && file.budget.is_some() {
        return Err(invalid(
            "budget",
            format!("kind {} takes no budget", file.kind.as_str()),
        ));
    }
    let steiner = matches!(file.kind, InstanceKind::Dst | InstanceKind::DstBidirected);
    if steiner && file.terminals.is_empty() {
        return Err(invalid("terminals", "steiner kinds require terminals"));
    }
    if !steiner && !file.terminals.is_empty() {
        return Err(invalid(
            "terminals",
            format!("kind {} takes no terminals", file.kind.as_str()),
        ));
    }
    let grouped = file.kind == InstanceKind::Gst;
    if grouped && file.groups.is_empty() {
        return Err(invalid("groups", "gst requires at least one group"));
    }
    if !grouped && !file.groups.is_empty() {
        return Err(invalid(
            "groups",
            format!("kind {} takes no groups", file.kind.as_str()),
        ));
    }
    let covered = matches!(
        file.kind,
        InstanceKind::Dcbc | InstanceKind::Ucbc | InstanceKind::Csc
    );
    if !covered {
        if !file.elements.is_empty() {
            return Err(invalid(
                "elements",
                format!("kind {} takes no elements", file.kind.as_str()),
            ));
        }
        for (i, node) in file.nodes.iter().enumerate() {
            if !node.elements.is_empty() {
                return Err(invalid(
                    format!("nodes[{i}].elements"),
                    format!("kind {} takes no element coverage", file.kind.as_str()),
                ));
            }
        }
    }

    let m = file.elements.len();
    let mut elem_seen = vec![false; m];
    for (i, e) in file.elements.iter().enumerate() {
        if e.id >= m {
            return Err(invalid(
                format!("elements[{i}].id"),
                format!("element ids must be dense 0..{m}, found {}", e.id),
            ));
        }
        if elem_seen[e.id] {
            return Err(invalid(
                format!("elements[{i}].id"),
                format!("duplicate element id {}", e.id),
            ));
        }
        elem_seen[e.id] = true;
        if e.prize < 0.0 || e.prize.is_nan() {
            return Err(invalid(
                format!("elements[{i}].prize"),
                format!("prize must be nonnegative, found {}", e.prize),
            ));
        }
    }
    for (i, node) in file.nodes.iter().enumerate() {
        for (j, &x) in node.elements.iter().enumerate() {
            if x >= m {
                return Err(invalid(
                    format!("nodes[{i}].elements[{j}]"),
                    format!("unknown element id {x}"),
                ));
            }
        }
    }
    for (i, group) in file.groups.iter().enumerate() {
        if group.is_empty() {
            return Err(invalid(format!("groups[{i}]"), "group is empty"));
        }
        for (j, &v) in group.iter().enumerate() {
            if v >= n {
                return Err(invalid(
                    format!("groups[{i}][{j}]"),
                    format!("unknown node id {v}"),
                ));
            }
        }
    }
    let terminal_set: BTreeSet<usize> = file.terminals.iter().copied().collect();
    for (i, &t) in file.terminals.iter().enumerate() {
        if t >= n {
            return Err(invalid(
                format!("terminals[{i}]"),
                format!("unknown node id {t}"),
            ));
        }
    }
    if terminal_set.len() != file.terminals.len() {
        return Err(invalid("terminals", "terminals must be distinct"));
    }
    if file.kind == InstanceKind::DstBidirected && terminal_set.contains(&file.root) {
        return Err(invalid("root", "root cannot be a sink terminal"));
    }

    // Arc endpoint checks before materializing.
    for (i, &(u, v)) in file.arcs.iter().enumerate() {
        if u >= n || v >= n {
            return Err(invalid(
                format!("arcs[{i}]"),
                format!("endpoint out of range in ({u}, {v})"),
            ));
        }
        if u == v {
            return Err(invalid(format!("arcs[{i}]"), format!("self-loop on {u}")));
        }
        if file.kind == InstanceKind::DstBidirected && terminal_set.contains(&u) {
            return Err(invalid(
                format!("arcs[{i}]"),
                format!("terminal {u} cannot have outgoing arcs"),
            ));
        }
    }

    let mut costs: Vec<f64> = vec![0.0; n];
    for node in &file.nodes {
        costs[node.id] = node.cost;
    }
    let directed_arcs: Vec<(usize, usize)> = match (file.kind, file.is_directed()) {
        (InstanceKind::DstBidirected, _) => {
            let mut arcs = Vec::new();
            for &(u, v) in &file.arcs {
                arcs.push((u, v));
                if !terminal_set.contains(&v) {
                    arcs.push((v, u));
                }
            }
            arcs
        }
        (_, true) => file.arcs.clone(),
        (_, false) => {
            let mut arcs = Vec::new();
            for &(u, v) in &file.arcs {
                arcs.push((u, v));
                arcs.push((v, u));
            }
            arcs
        }
    };
    let graph = NodeWeightedDigraph::new(costs, &directed_arcs)
        .map_err(|e| invalid("arcs", e.to_string()))?;

    let mut covers: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut prizes = vec![0.0; m];
    for node in &file.nodes {
        covers[node.id] = node.elements.iter().copied().collect();
    }
    for e in &file.elements {
        prizes[e.id] = e.prize;
    }

    match file.kind {
        InstanceKind::Dcbc | InstanceKind::Ucbc => {
            let inst = CoverageInstance::new(
                graph,
                file.root,
                file.budget.unwrap(),
                file.kind == InstanceKind::Dcbc,
                prizes,
                covers,
            )
            .map_err(|e| invalid("instance", e.to_string()))?;
            Ok(TypedInstance::Coverage(inst))
        }
        InstanceKind::Csc => {
            let inst = CoverageInstance::new(
                graph,
                file.root,
                0.0,
                file.directed.unwrap(),
                prizes,
                covers,
            )
            .map_err(|e| invalid("instance", e.to_string()))?;
            Ok(TypedInstance::Csc(inst))
        }
        InstanceKind::Dst => {
            let inst = SteinerInstance::new(graph, file.root, terminal_set)
                .map_err(|e| invalid("instance", e.to_string()))?;
            Ok(TypedInstance::Steiner(inst))
        }
        InstanceKind::DstBidirected => {
            let core: BTreeSet<NodeId> = (0..n).filter(|v| !terminal_set.contains(v)).collect();
            let graph = graph
                .with_bidirected_core(core)
                .map_err(|e| invalid("arcs", e.to_string()))?;
            let inst = SteinerInstance::new(graph, file.root, terminal_set)
                .map_err(|e| invalid("instance", e.to_string()))?;
            Ok(TypedInstance::BidirectedSteiner(inst))
        }
        InstanceKind::Gst => {
            let groups: Vec<BTreeSet<NodeId>> = file
                .groups
                .iter()
                .map(|g| g.iter().copied().collect())
                .collect();
            let inst = GroupInstance::new(graph, file.root, groups, file.directed.unwrap())
                .map_err(|e| invalid("instance", e.to_string()))?;
            Ok(TypedInstance::Gst(inst))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    pub format_version: u32,
    pub kind: InstanceKind,
    pub instance_digest: String,
    pub tree_nodes: Vec<usize>,
    pub tree_arcs: Vec<(usize, usize)>,
    pub cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prize: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covered_elements: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp_opt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_violation: Option<f64>,
    /// Stage statistics of the producing run; solver-specific.
    pub stats: serde_json::Value,
}

pub fn write_solution(file: &SolutionFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("solution files always serialize");
    s.push('\n');
    s
}

pub fn parse_solution(text: &str) -> Result<SolutionFile, ParseError> {
    serde_json::from_str(text).map_err(|e| ParseError::Json(e.to_string()))
}

/// Independent re-verification of a solution against its instance: digest,
/// tree validity, recomputed cost and coverage, kind-specific feasibility.
/// Returns the list of problems; empty means the solution checks out.
pub fn verify_solution(file: &InstanceFile, sol: &SolutionFile) -> Vec<String> {
    let mut problems = Vec::new();
    if sol.format_version != FORMAT_VERSION {
        problems.push(format!(
            "solution format_version {} != {FORMAT_VERSION}",
            sol.format_version
        ));
    }
    if sol.kind != file.kind {
        problems.push(format!(
            "solution kind {} does not match instance kind {}",
            sol.kind.as_str(),
            file.kind.as_str()
        ));
    }
    let digest = instance_digest(file);
    if digest != sol.instance_digest {
        problems.push(format!(
            "instance digest mismatch: expected {digest}, solution carries {}",
            sol.instance_digest
        ));
        return problems;
    }
    let typed = match typed_from_file(file) {
        Ok(t) => t,
        Err(e) => {
            problems.push(format!("instance does not validate: {e}"));
            return problems;
        }
    };
    let (graph, root) = match &typed {
        TypedInstance::Coverage(c) | TypedInstance::Csc(c) => (&c.graph, c.root),
        TypedInstance::Steiner(s) | TypedInstance::BidirectedSteiner(s) => (&s.graph, s.root),
        TypedInstance::Gst(g) => (&g.graph, g.root),
    };
    let nodes: BTreeSet<NodeId> = sol.tree_nodes.iter().copied().collect();
    let arcs: BTreeSet<(NodeId, NodeId)> = sol.tree_arcs.iter().copied().collect();
    let recomputed_cost: f64 = nodes
        .iter()
        .filter(|&&v| graph.contains(v))
        .map(|&v| graph.cost(v))
        .sum();
    let tree = OutTree {
        root,
        nodes: nodes.clone(),
        arcs,
        total_cost: recomputed_cost,
    };
    for violation in validate_out_tree(&tree, graph, root) {
        problems.push(format!("tree violation: {violation:?}"));
    }
    if (recomputed_cost - sol.cost).abs() > 1e-9 {
        problems.push(format!(
            "cost mismatch: solution says {}, recomputed {recomputed_cost}",
            sol.cost
        ));
    }
    match &typed {
        TypedInstance::Coverage(c) => {
            let (covered, prize) = c.coverage_of(nodes.iter());
            if let Some(p) = sol.prize {
                if (p - prize).abs() > 1e-9 {
                    problems.push(format!("prize mismatch: solution says {p}, recomputed {prize}"));
                }
            } else {
                problems.push("budgeted solution missing prize".to_string());
            }
            if let Some(list) = &sol.covered_elements {
                let claimed: BTreeSet<usize> = list.iter().copied().collect();
                if claimed != covered {
                    problems.push("covered element list does not match recomputation".to_string());
                }
            }
            let eps = sol.epsilon.unwrap_or(1.0);
            if recomputed_cost > (1.0 + eps) * c.budget + 1e-9 {
                problems.push(format!(
                    "cost {recomputed_cost} exceeds (1+eps)*budget = {}",
                    (1.0 + eps) * c.budget
                ));
            }
        }
        TypedInstance::Csc(c) => {
            let (covered, _) = c.coverage_of(nodes.iter());
            for x in 0..c.element_count() {
                if !covered.contains(&x) {
                    problems.push(format!("element {x} left uncovered"));
                }
            }
        }
        TypedInstance::Steiner(s) | TypedInstance::BidirectedSteiner(s) => {
            for &t in &s.terminals {
                if !nodes.contains(&t) {
                    problems.push(format!("terminal {t} not spanned"));
                }
            }
        }
        TypedInstance::Gst(g) => {
            for (i, group) in g.groups.iter().enumerate() {
                if !group.iter().any(|v| nodes.contains(v)) {
                    problems.push(format!("group {i} untouched"));
                }
            }
        }
    }
    problems
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_dcbc() -> InstanceFile {
        InstanceFile {
            format_version: 1,
            kind: InstanceKind::Dcbc,
            directed: None,
            nodes: vec![
                NodeSpec {
                    id: 0,
                    cost: 0.0,
                    elements: vec![],
                },
                NodeSpec {
                    id: 1,
                    cost: 2.0,
                    elements: vec![0],
                },
            ],
            arcs: vec![(0, 1)],
            elements: vec![ElementSpec { id: 0, prize: 5.0 }],
            groups: vec![],
            root: 0,
            budget: Some(2.0),
            terminals: vec![],
        }
    }

    #[test]
    fn minimal_dcbc_parses() {
        let text = write_instance(&minimal_dcbc());
        let (file, typed) = parse_instance(&text).unwrap();
        assert_eq!(file, minimal_dcbc());
        match typed {
            TypedInstance::Coverage(c) => {
                assert!(c.directed);
                assert_eq!(c.budget, 2.0);
                assert_eq!(c.covers[1], BTreeSet::from([0]));
            }
            _ => panic!("wrong type"),
        }
    }

    #[test]
    fn dangling_element_id_named_in_error() {
        let mut f = minimal_dcbc();
        f.nodes[1].elements = vec![7];
        let err = typed_from_file(&f).unwrap_err();
        assert_eq!(
            err,
            ParseError::Validation {
                field: "nodes[1].elements[0]".to_string(),
                message: "unknown element id 7".to_string(),
            }
        );
    }

    #[test]
    fn round_trip_is_identity() {
        let f = minimal_dcbc();
        let text = write_instance(&f);
        let (parsed, _) = parse_instance(&text).unwrap();
        assert_eq!(write_instance(&parsed), text);
    }

    #[test]
    fn version_checked() {
        let mut f = minimal_dcbc();
        f.format_version = 9;
        assert!(matches!(
            typed_from_file(&f),
            Err(ParseError::Validation { field, .. }) if field == "format_version"
        ));
    }

    #[test]
    fn undirected_kind_materializes_paired_arcs() {
        let mut f = minimal_dcbc();
        f.kind = InstanceKind::Ucbc;
        match typed_from_file(&f).unwrap() {
            TypedInstance::Coverage(c) => {
                assert!(c.graph.has_arc(0, 1));
                assert!(c.graph.has_arc(1, 0));
                assert!(!c.directed);
            }
            _ => panic!("wrong type"),
        }
    }

    #[test]
    fn bidirected_kind_keeps_terminals_as_sinks() {
        let f = InstanceFile {
            format_version: 1,
            kind: InstanceKind::DstBidirected,
            directed: None,
            nodes: vec![
                NodeSpec { id: 0, cost: 0.0, elements: vec![] },
                NodeSpec { id: 1, cost: 1.0, elements: vec![] },
                NodeSpec { id: 2, cost: 0.0, elements: vec![] },
            ],
            arcs: vec![(0, 1), (1, 2)],
            elements: vec![],
            groups: vec![],
            root: 0,
            budget: None,
            terminals: vec![2],
        };
        match typed_from_file(&f).unwrap() {
            TypedInstance::BidirectedSteiner(s) => {
                assert!(s.graph.has_arc(0, 1));
                assert!(s.graph.has_arc(1, 0));
                assert!(s.graph.has_arc(1, 2));
                assert!(!s.graph.has_arc(2, 1));
                assert_eq!(s.graph.bidirected_core().unwrap(), &BTreeSet::from([0, 1]));
            }
            _ => panic!("wrong type"),
        }
    }

    #[test]
    fn csc_requires_directed_flag() {
        let mut f = minimal_dcbc();
        f.kind = InstanceKind::Csc;
        f.budget = None;
        assert!(matches!(
            typed_from_file(&f),
            Err(ParseError::Validation { field, .. }) if field == "directed"
        ));
        f.directed = Some(false);
        assert!(matches!(typed_from_file(&f).unwrap(), TypedInstance::Csc(_)));
    }

    #[test]
    fn verify_accepts_honest_solution_and_flags_tampering() {
        let f = minimal_dcbc();
        let sol = SolutionFile {
            format_version: 1,
            kind: InstanceKind::Dcbc,
            instance_digest: instance_digest(&f),
            tree_nodes: vec![0, 1],
            tree_arcs: vec![(0, 1)],
            cost: 2.0,
            prize: Some(5.0),
            covered_elements: Some(vec![0]),
            epsilon: Some(1.0),
            lp_opt: Some(5.0),
            budget_violation: Some(1.0),
            stats: serde_json::Value::Null,
        };
        assert!(verify_solution(&f, &sol).is_empty());
        let mut bad = sol.clone();
        bad.prize = Some(99.0);
        assert!(!verify_solution(&f, &bad).is_empty());
        let mut wrong_arc = sol.clone();
        wrong_arc.tree_arcs = vec![(1, 0)];
        assert!(!verify_solution(&f, &wrong_arc).is_empty());
    }
}
