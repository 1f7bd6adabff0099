//! Measurement rewrite rules on graph states, checked against the tableau.
//!
//! Each check prepares the graph state, performs the measurements and compares
//! the resulting state with the one the rule predicts, including the Pauli
//! frame (generator signs) implied by the outcomes.

use rand::Rng;

use super::{Basis, Graph, PauliString, Sign, StabilizerTableau};
use crate::error::{Error, Result};
use crate::simulator::TreeGraph;

/// Graph state of `g` with the generators of `negated` vertices sign-flipped
/// and the `measured` qubits replaced by single-qubit eigenstates.
fn predicted_state(
    g: &Graph,
    negated: &[bool],
    measured: &[(usize, Basis, Sign)],
) -> StabilizerTableau {
    let n = g.num_vertices();
    let mut gens = StabilizerTableau::graph_state(g).generators().to_vec();
    for (v, gen) in gens.iter_mut().enumerate() {
        if negated[v] {
            gen.negate();
        }
    }
    for &(q, basis, s) in measured {
        gens[q] = PauliString::single(n, q, basis, s);
    }
    StabilizerTableau::from_generators(gens).expect("predicted generators form a valid state")
}

/// Vertex whose generator a corrupted run flips: any vertex other than `avoid`.
fn corruption_target(n: usize, avoid: &[usize]) -> Option<usize> {
    (0..n).find(|v| !avoid.contains(v))
}

/// Z measurement of `v` deletes it: the state becomes `|G - v⟩` with the
/// neighbours' generators negated on outcome `-1`. Both outcomes are checked.
pub fn verify_z_removal(g: &Graph, v: usize) -> Result<bool> {
    z_removal(g, v, false)
}

pub(crate) fn z_removal(g: &Graph, v: usize, corrupt: bool) -> Result<bool> {
    if v >= g.num_vertices() {
        return Err(Error::invalid(format!("vertex {v} out of range")));
    }
    let mut rest = g.clone();
    rest.isolate(v);
    let flip = corruption_target(g.num_vertices(), &[v]).filter(|_| corrupt);
    for s in [Sign::Plus, Sign::Minus] {
        let mut t = StabilizerTableau::graph_state(g);
        if let Some(u) = flip {
            t.negate_generator(u);
        }
        let rec = t.measure_forced(v, Basis::Z, s)?;
        let mut negated = vec![false; g.num_vertices()];
        if s.is_minus() {
            g.neighbors(v).for_each(|u| negated[u] = true);
        }
        let expected = predicted_state(&rest, &negated, &[(v, Basis::Z, s)]);
        if rec.deterministic || t.health().is_err() || !t.same_state(&expected) {
            return Ok(false);
        }
    }
    Ok(true)
}

struct Fusion {
    a: usize,
    far: Vec<usize>,
}

fn fusion_shape(g: &Graph, i: usize, j: usize) -> Result<Fusion> {
    let n = g.num_vertices();
    if i >= n || j >= n || i == j || !g.has_edge(i, j) {
        return Err(Error::invalid(format!("({i}, {j}) is not an edge")));
    }
    if g.degree(i) != 2 {
        return Err(Error::invalid(format!(
            "vertex {i} must have exactly two neighbours"
        )));
    }
    let a = g.neighbors(i).find(|&u| u != j).expect("degree two");
    let far: Vec<usize> = g.neighbors(j).filter(|&u| u != i).collect();
    if far.is_empty() {
        return Err(Error::invalid(format!(
            "vertex {j} has no neighbour besides {i}"
        )));
    }
    if g.has_edge(a, j) {
        return Err(Error::invalid(format!(
            "vertices {a} and {j} must not be adjacent"
        )));
    }
    Ok(Fusion { a, far })
}

/// Graph left after X-measuring `i` and `j`, where `N(i) = {a, j}`: both are
/// removed and `a` is bonded (edge toggled) to every other neighbour of `j`.
pub fn fusion_contraction(g: &Graph, i: usize, j: usize) -> Result<Graph> {
    let Fusion { a, far } = fusion_shape(g, i, j)?;
    let mut out = g.clone();
    out.isolate(i);
    out.isolate(j);
    for b in far {
        out.toggle_edge(a, b);
    }
    Ok(out)
}

/// X measurements of adjacent `i` and `j` (`N(i) = {a, j}`, `a ∉ N(j)`) fuse
/// `a` with the far neighbours `B` of `j`. Outcome `s_j = -1` negates `K_a`,
/// `s_i = -1` negates every `K_b`, `b ∈ B`. All four outcome pairs are checked.
pub fn verify_x_fusion(g: &Graph, i: usize, j: usize) -> Result<bool> {
    x_fusion(g, i, j, false)
}

pub(crate) fn x_fusion(g: &Graph, i: usize, j: usize, corrupt: bool) -> Result<bool> {
    let Fusion { a, far } = fusion_shape(g, i, j)?;
    let fused = fusion_contraction(g, i, j)?;
    let flip = corruption_target(g.num_vertices(), &[i, j]).filter(|_| corrupt);
    for si in [Sign::Plus, Sign::Minus] {
        for sj in [Sign::Plus, Sign::Minus] {
            let mut t = StabilizerTableau::graph_state(g);
            if let Some(u) = flip {
                t.negate_generator(u);
            }
            let ri = t.measure_forced(i, Basis::X, si)?;
            let rj = t.measure_forced(j, Basis::X, sj)?;
            let mut negated = vec![false; g.num_vertices()];
            negated[a] = sj.is_minus();
            for &b in &far {
                negated[b] = si.is_minus();
            }
            let expected =
                predicted_state(&fused, &negated, &[(i, Basis::X, si), (j, Basis::X, sj)]);
            if ri.deterministic
                || rj.deterministic
                || t.health().is_err()
                || !t.same_state(&expected)
            {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Attachment gadget `p - c1 - c2 - {first row}` for a tree, with
/// `p = len`, `c1 = len + 1`, `c2 = len + 2`.
pub fn attachment_gadget(tree: &TreeGraph) -> Graph {
    let q = tree.len();
    let mut g = Graph::new(q + 3);
    for v in 0..q {
        let up = tree.parent(v).unwrap_or(q + 2);
        g.add_edge(v, up).expect("tree vertices in range");
    }
    g.add_edge(q, q + 1).expect("in range");
    g.add_edge(q + 1, q + 2).expect("in range");
    g
}

/// Fusing the gadget's connectors bonds `p` directly to the first row, giving
/// the tree attached to `p`, and the fusion frame matches.
pub fn verify_tree_attachment(tree: &TreeGraph) -> Result<bool> {
    tree_attachment(tree, false)
}

pub(crate) fn tree_attachment(tree: &TreeGraph, corrupt: bool) -> Result<bool> {
    let q = tree.len();
    let g = attachment_gadget(tree);
    let fused = fusion_contraction(&g, q + 1, q + 2)?;
    let mut attached = Graph::from_tree(tree);
    let mut padded = Graph::new(q + 3);
    for (a, b) in attached.edges() {
        padded.add_edge(a, b)?;
    }
    attached = padded;
    Ok(fused == attached && x_fusion(&g, q + 1, q + 2, corrupt)?)
}

/// Predicts `Z_u` without touching `u`: X-measure a child `c`, then for every
/// child `g` of `c` either Z-measure it or, if `g` has children, predict its Z
/// recursively. The prediction is `x_c ∏ z_g`.
fn infer_z<R: Rng + ?Sized>(
    t: &mut StabilizerTableau,
    tree: &TreeGraph,
    c: usize,
    rng: &mut R,
) -> Result<Sign> {
    let mut predicted = t.measure(c, Basis::X, rng)?.outcome;
    for &g in tree.children(c) {
        let z = if !tree.children(g).is_empty() && rng.gen_bool(0.5) {
            let kids = tree.children(g);
            let via = kids[rng.gen_range(0..kids.len())];
            infer_z(t, tree, via, rng)?
        } else {
            t.measure(g, Basis::Z, rng)?.outcome
        };
        predicted = predicted * z;
    }
    Ok(predicted)
}

fn check_vertex_with_children(tree: &TreeGraph, v: usize, min_children: usize) -> Result<()> {
    if v >= tree.len() {
        return Err(Error::invalid(format!("vertex {v} out of range")));
    }
    if tree.children(v).len() < min_children {
        return Err(Error::invalid(format!(
            "vertex {v} needs at least {min_children} children"
        )));
    }
    Ok(())
}

/// The indirect Z prediction for `v` agrees with a later direct Z measurement,
/// which must be deterministic. The tree is embedded with its probe root.
pub fn counterfactual_indirect_z<R: Rng + ?Sized>(
    tree: &TreeGraph,
    v: usize,
    rng: &mut R,
) -> Result<bool> {
    counterfactual(tree, v, false, rng)
}

pub(crate) fn counterfactual<R: Rng + ?Sized>(
    tree: &TreeGraph,
    v: usize,
    corrupt: bool,
    rng: &mut R,
) -> Result<bool> {
    check_vertex_with_children(tree, v, 1)?;
    let kids = tree.children(v);
    let c = kids[rng.gen_range(0..kids.len())];
    let mut t = StabilizerTableau::graph_state(&Graph::from_tree(tree));
    if corrupt {
        t.negate_generator(c);
    }
    let predicted = infer_z(&mut t, tree, c, rng)?;
    let direct = t.measure(v, Basis::Z, rng)?;
    Ok(direct.deterministic && direct.outcome == predicted && t.health().is_ok())
}

/// Two predictions for `v` through different children agree with each other
/// and with the direct Z measurement.
pub fn counterfactual_paths_agree<R: Rng + ?Sized>(
    tree: &TreeGraph,
    v: usize,
    rng: &mut R,
) -> Result<bool> {
    paths_agree(tree, v, false, rng)
}

pub(crate) fn paths_agree<R: Rng + ?Sized>(
    tree: &TreeGraph,
    v: usize,
    corrupt: bool,
    rng: &mut R,
) -> Result<bool> {
    check_vertex_with_children(tree, v, 2)?;
    let kids = tree.children(v);
    let first = rng.gen_range(0..kids.len());
    let second = (first + rng.gen_range(1..kids.len())) % kids.len();
    let (red, green) = (kids[first], kids[second]);
    let mut t = StabilizerTableau::graph_state(&Graph::from_tree(tree));
    if corrupt {
        t.negate_generator(red);
    }
    let red_z = infer_z(&mut t, tree, red, rng)?;
    let green_z = infer_z(&mut t, tree, green, rng)?;
    let direct = t.measure(v, Basis::Z, rng)?;
    Ok(red_z == green_z && direct.deterministic && direct.outcome == red_z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::BranchingVector;
    use crate::simulator::build_tree;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tree(s: &str) -> TreeGraph {
        build_tree(&s.parse::<BranchingVector>().unwrap()).unwrap()
    }

    #[test]
    fn z_removal_on_small_graphs() {
        assert!(verify_z_removal(&Graph::path(3), 1).unwrap());
        assert!(verify_z_removal(&Graph::path(5), 0).unwrap());
        let star = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2)]).unwrap();
        for v in 0..4 {
            assert!(verify_z_removal(&star, v).unwrap());
            assert!(!z_removal(&star, v, true).unwrap());
        }
        assert!(verify_z_removal(&Graph::new(1), 0).unwrap());
    }

    #[test]
    fn fusion_on_a_path_shortens_it() {
        let g = Graph::path(5);
        let fused = fusion_contraction(&g, 1, 2).unwrap();
        assert_eq!(fused.edges(), vec![(0, 3), (3, 4)]);
        assert!(verify_x_fusion(&g, 1, 2).unwrap());
        assert!(verify_x_fusion(&g, 3, 2).unwrap());
        assert!(!x_fusion(&g, 1, 2, true).unwrap());
    }

    #[test]
    fn fusion_rejects_other_shapes() {
        let g = Graph::path(4);
        assert!(verify_x_fusion(&g, 0, 1).is_err());
        assert!(verify_x_fusion(&g, 2, 3).is_err());
        assert!(verify_x_fusion(&g, 0, 2).is_err());
        let tri = Graph::from_edges(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
        assert!(verify_x_fusion(&tri, 1, 2).is_err());
    }

    #[test]
    fn tree_attachment_through_connectors() {
        for s in ["1", "3", "2,2", "2,1,2"] {
            assert!(verify_tree_attachment(&tree(s)).unwrap(), "{s}");
            assert!(!tree_attachment(&tree(s), true).unwrap(), "{s}");
        }
    }

    #[test]
    fn counterfactual_measurement_on_trees() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for s in ["1,1", "2,2", "2,2,2", "1,3,1"] {
            let t = tree(s);
            for v in 0..t.len() {
                if t.children(v).is_empty() {
                    assert!(counterfactual_indirect_z(&t, v, &mut rng).is_err());
                    continue;
                }
                for _ in 0..8 {
                    assert!(
                        counterfactual_indirect_z(&t, v, &mut rng).unwrap(),
                        "{s} v={v}"
                    );
                    assert!(!counterfactual(&t, v, true, &mut rng).unwrap(), "{s} v={v}");
                }
            }
        }
    }

    #[test]
    fn red_and_green_predictions_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = tree("2,3,2");
        for v in 0..t.len() {
            if t.children(v).len() < 2 {
                continue;
            }
            for _ in 0..8 {
                assert!(counterfactual_paths_agree(&t, v, &mut rng).unwrap());
                assert!(!paths_agree(&t, v, true, &mut rng).unwrap());
            }
        }
        assert!(counterfactual_paths_agree(&tree("1,1"), 0, &mut rng).is_err());
    }
}
