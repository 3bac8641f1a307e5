//! Seeded random instance generator.
//!
//! Instances are built on a spanning arborescence backbone from the root so
//! every node is reachable by construction, then densified with extra arcs.
//! All randomness flows through one ChaCha stream per call: a fixed seed
//! yields byte-identical files.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::{ElementSpec, InstanceFile, InstanceKind, NodeSpec, FORMAT_VERSION};
use crate::oracle::{brute_force_csc, OracleError};
use crate::instance::{typed_from_file, TypedInstance};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    BadParams(String),
    #[error("oracle-derived budget failed: {0}")]
    Oracle(#[from] OracleError),
    #[error("generated instance failed validation: {0}")]
    SelfCheck(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetPolicy {
    /// Budget = ceil(fraction * total node cost).
    FractionOfTotal(f64),
    /// Budget = ceil(fraction * exact full-cover cost); needs oracle-sized
    /// instances.
    OracleDerived(f64),
}

#[derive(Debug, Clone)]
pub struct GenParams {
    pub kind: InstanceKind,
    /// Used by csc and gst only.
    pub directed: bool,
    pub nodes: usize,
    /// Ground-set size, group count, or terminal count depending on the kind.
    pub elements: usize,
    /// Fraction of the non-backbone node pairs to add as extra arcs.
    pub density: f64,
    pub cost_range: (u64, u64),
    pub prize_range: (u64, u64),
    pub budget_policy: BudgetPolicy,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            kind: InstanceKind::Dcbc,
            directed: true,
            nodes: 10,
            elements: 6,
            density: 0.15,
            cost_range: (0, 8),
            prize_range: (1, 9),
            budget_policy: BudgetPolicy::FractionOfTotal(0.4),
        }
    }
}

fn sample_int(rng: &mut ChaCha8Rng, range: (u64, u64)) -> f64 {
    rng.gen_range(range.0..=range.1) as f64
}

/// Distinct sample of `k` values from `pool`, result sorted.
fn sample_nodes(rng: &mut ChaCha8Rng, pool: &[usize], k: usize) -> Vec<usize> {
    let mut picked: Vec<usize> = pool.choose_multiple(rng, k).copied().collect();
    picked.sort_unstable();
    picked
}

pub fn generate_instance(params: &GenParams, seed: u64) -> Result<InstanceFile, GenError> {
    let n = params.nodes;
    if n == 0 {
        return Err(GenError::BadParams("at least one node required".into()));
    }
    if !(0.0..=1.0).contains(&params.density) {
        return Err(GenError::BadParams(format!(
            "density {} outside [0, 1]",
            params.density
        )));
    }
    if params.cost_range.0 > params.cost_range.1 || params.prize_range.0 > params.prize_range.1 {
        return Err(GenError::BadParams("empty cost or prize range".into()));
    }
    let steiner = matches!(params.kind, InstanceKind::Dst | InstanceKind::DstBidirected);
    if steiner && (params.elements == 0 || (params.kind == InstanceKind::Dst && params.elements >= n)) {
        return Err(GenError::BadParams(format!(
            "terminal count {} does not fit {} nodes",
            params.elements, n
        )));
    }
    if params.kind == InstanceKind::Gst && params.elements == 0 {
        return Err(GenError::BadParams("gst needs at least one group".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let directed_arcs = params.kind == InstanceKind::Dcbc
        || params.kind == InstanceKind::Dst
        || (matches!(params.kind, InstanceKind::Csc | InstanceKind::Gst) && params.directed);

    // Spanning backbone from node 0, then extra arcs up to the density.
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    for v in 1..n {
        let parent = rng.gen_range(0..v);
        arcs.push((parent, v));
    }
    let mut remaining: Vec<(usize, usize)> = Vec::new();
    if directed_arcs {
        for u in 0..n {
            for v in 0..n {
                if u != v && !arcs.contains(&(u, v)) {
                    remaining.push((u, v));
                }
            }
        }
    } else {
        for u in 0..n {
            for v in u + 1..n {
                if !arcs.contains(&(u, v)) && !arcs.contains(&(v, u)) {
                    remaining.push((u, v));
                }
            }
        }
    }
    let extra = (params.density * remaining.len() as f64).round() as usize;
    arcs.extend(sample_nodes_pairs(&mut rng, &remaining, extra));
    arcs.sort_unstable();

    let costs: Vec<f64> = (0..n).map(|_| sample_int(&mut rng, params.cost_range)).collect();

    let mut file = InstanceFile {
        format_version: FORMAT_VERSION,
        kind: params.kind,
        directed: match params.kind {
            InstanceKind::Csc | InstanceKind::Gst => Some(params.directed),
            _ => None,
        },
        nodes: (0..n)
            .map(|id| NodeSpec {
                id,
                cost: costs[id],
                elements: vec![],
            })
            .collect(),
        arcs,
        elements: vec![],
        groups: vec![],
        root: 0,
        budget: None,
        terminals: vec![],
    };

    match params.kind {
        InstanceKind::Dcbc | InstanceKind::Ucbc | InstanceKind::Csc => {
            let all: Vec<usize> = (0..n).collect();
            for x in 0..params.elements {
                let k = rng.gen_range(1..=3.min(n));
                let coverers = sample_nodes(&mut rng, &all, k);
                for v in coverers {
                    file.nodes[v].elements.push(x);
                }
                file.elements.push(ElementSpec {
                    id: x,
                    prize: sample_int(&mut rng, params.prize_range),
                });
            }
            for node in &mut file.nodes {
                node.elements.sort_unstable();
            }
            if params.kind != InstanceKind::Csc {
                file.budget = Some(pick_budget(params, &file)?);
            }
        }
        InstanceKind::Gst => {
            let all: Vec<usize> = (0..n).collect();
            for _ in 0..params.elements {
                let size = rng.gen_range(1..=3.min(n));
                file.groups.push(sample_nodes(&mut rng, &all, size));
            }
        }
        InstanceKind::Dst => {
            let pool: Vec<usize> = (1..n).collect();
            file.terminals = sample_nodes(&mut rng, &pool, params.elements);
        }
        InstanceKind::DstBidirected => {
            // Append sink terminals fed by random core nodes.
            let k = params.elements;
            let core: Vec<usize> = (0..n).collect();
            for i in 0..k {
                let id = n + i;
                file.nodes.push(NodeSpec {
                    id,
                    cost: sample_int(&mut rng, params.cost_range),
                    elements: vec![],
                });
                let k_in = rng.gen_range(1..=3.min(n));
                let feeders = sample_nodes(&mut rng, &core, k_in);
                for u in feeders {
                    file.arcs.push((u, id));
                }
                file.terminals.push(id);
            }
            file.arcs.sort_unstable();
        }
    }

    match typed_from_file(&file) {
        Ok(_) => Ok(file),
        Err(e) => Err(GenError::SelfCheck(e.to_string())),
    }
}

fn sample_nodes_pairs(
    rng: &mut ChaCha8Rng,
    pool: &[(usize, usize)],
    k: usize,
) -> Vec<(usize, usize)> {
    let mut picked: Vec<(usize, usize)> = pool.choose_multiple(rng, k).copied().collect();
    picked.sort_unstable();
    picked
}

fn pick_budget(params: &GenParams, file: &InstanceFile) -> Result<f64, GenError> {
    let total: f64 = file.nodes.iter().map(|s| s.cost).sum();
    match params.budget_policy {
        BudgetPolicy::FractionOfTotal(f) => {
            if !(0.0..=1.0).contains(&f) {
                return Err(GenError::BadParams(format!("budget fraction {f} outside [0, 1]")));
            }
            // Clamp so the root itself is always affordable.
            Ok((f * total).ceil().max(file.nodes[file.root].cost))
        }
        BudgetPolicy::OracleDerived(f) => {
            if f <= 0.0 {
                return Err(GenError::BadParams(format!("budget fraction {f} must be positive")));
            }
            // Exact full-cover cost as the yardstick.
            let mut probe = file.clone();
            probe.kind = InstanceKind::Csc;
            probe.directed = Some(file.kind == InstanceKind::Dcbc);
            probe.budget = None;
            let typed = typed_from_file(&probe)
                .map_err(|e| GenError::SelfCheck(e.to_string()))?;
            let TypedInstance::Csc(inst) = typed else {
                unreachable!("probe is a csc file");
            };
            let opt = brute_force_csc(&inst, 22)?;
            Ok((f * opt.cost).ceil().max(inst.graph.cost(inst.root)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::write_instance;

    #[test]
    fn fixed_seed_is_byte_identical() {
        let params = GenParams::default();
        let a = write_instance(&generate_instance(&params, 7).unwrap());
        let b = write_instance(&generate_instance(&params, 7).unwrap());
        assert_eq!(a, b);
        let c = write_instance(&generate_instance(&params, 8).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn single_node_instance() {
        let params = GenParams {
            nodes: 1,
            elements: 1,
            ..GenParams::default()
        };
        let f = generate_instance(&params, 0).unwrap();
        assert_eq!(f.nodes.len(), 1);
        assert!(f.arcs.is_empty());
    }

    #[test]
    fn full_density_directed_is_complete() {
        let params = GenParams {
            nodes: 4,
            elements: 2,
            density: 1.0,
            ..GenParams::default()
        };
        let f = generate_instance(&params, 3).unwrap();
        assert_eq!(f.arcs.len(), 12);
    }

    #[test]
    fn full_density_undirected_lists_each_edge_once() {
        let params = GenParams {
            kind: InstanceKind::Ucbc,
            nodes: 4,
            elements: 2,
            density: 1.0,
            ..GenParams::default()
        };
        let f = generate_instance(&params, 3).unwrap();
        assert_eq!(f.arcs.len(), 6);
    }

    #[test]
    fn every_kind_generates_and_validates() {
        for kind in [
            InstanceKind::Dcbc,
            InstanceKind::Ucbc,
            InstanceKind::Dst,
            InstanceKind::DstBidirected,
            InstanceKind::Csc,
            InstanceKind::Gst,
        ] {
            let params = GenParams {
                kind,
                directed: false,
                nodes: 8,
                elements: 3,
                ..GenParams::default()
            };
            let f = generate_instance(&params, 11).unwrap();
            assert_eq!(f.kind, kind);
        }
    }

    #[test]
    fn generator_output_round_trips_through_text() {
        use crate::instance::parse_instance;
        for kind in [
            InstanceKind::Dcbc,
            InstanceKind::Ucbc,
            InstanceKind::Dst,
            InstanceKind::DstBidirected,
            InstanceKind::Csc,
            InstanceKind::Gst,
        ] {
            for seed in [0u64, 17, 255] {
                let params = GenParams {
                    kind,
                    directed: seed % 2 == 0,
                    nodes: 6 + seed as usize % 4,
                    elements: 2 + seed as usize % 3,
                    ..GenParams::default()
                };
                let file = generate_instance(&params, seed).unwrap();
                let text = write_instance(&file);
                let (parsed, _typed) = parse_instance(&text).unwrap();
                assert_eq!(parsed, file, "{} seed {seed}", kind.as_str());
                assert_eq!(write_instance(&parsed), text);
            }
        }
    }

    #[test]
    fn oracle_budget_targets_cover_cost() {
        let params = GenParams {
            budget_policy: BudgetPolicy::OracleDerived(0.5),
            nodes: 7,
            elements: 4,
            ..GenParams::default()
        };
        let f = generate_instance(&params, 5).unwrap();
        assert!(f.budget.unwrap() >= f.nodes[0].cost);
    }
}
