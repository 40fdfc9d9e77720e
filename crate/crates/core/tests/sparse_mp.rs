use meanfield::ensembles::{Graph, Seed};
use meanfield::sparse_mp::{bp_marginals, bp_step, exact_marginals, run_bp, GraphicalModel, MessageSet};
use meanfield::Error;
use proptest::prelude::*;

fn close(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x - y).abs() <= tol)
}

fn beliefs(model: &GraphicalModel<f64>, iters: usize) -> Vec<Vec<f64>> {
    let run = run_bp(model, iters, 1e-15, 0.0).unwrap();
    bp_marginals(model, &run.messages)
}

/// Random potentials on an arbitrary edge set.
fn loopy(n: usize, edges: Vec<(usize, usize)>, q: usize, seed: u64) -> GraphicalModel<f64> {
    let rng = Seed::new(seed, "loopy").rng();
    let tables = (0..edges.len())
        .map(|e| (0..q * q).map(|k| (rng.normal_at((e * q * q + k) as u64)).exp()).collect())
        .collect();
    GraphicalModel::from_graph(Graph::new(n, edges).unwrap(), q, tables).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exact_on_trees(n in 1usize..9, q in 2usize..4, scale in 0.1f64..2.0, seed in 0u64..1000) {
        let m = GraphicalModel::<f64>::random_tree(n, q, n.max(2) - 1, scale, &Seed::new(seed, "t")).unwrap();
        let run = run_bp(&m, 100, 1e-14, 0.0).unwrap();
        prop_assert!(run.converged);
        prop_assert!(run.iterations <= m.graph().diameter() + 2);
        prop_assert!(close(&bp_marginals(&m, &run.messages), &exact_marginals(&m).unwrap(), 1e-10));
    }

    #[test]
    fn messages_stay_normalized(seed in 0u64..1000, damping in 0.0f64..0.9) {
        let m = loopy(5, vec![(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 1)], 3, seed);
        let mut msgs = MessageSet::uniform(&m);
        for _ in 0..20 {
            msgs = bp_step(&m, &msgs, damping).unwrap();
            prop_assert!(msgs.normalization_error() <= 1e-12);
        }
    }

    #[test]
    fn relabeling_permutes_beliefs(n in 2usize..8, seed in 0u64..1000, shift in 1usize..7) {
        let m = GraphicalModel::<f64>::random_tree(n, 2, n - 1, 1.0, &Seed::new(seed, "p")).unwrap();
        let perm: Vec<usize> = (0..n).map(|v| (v + shift) % n).collect();
        let r = m.relabel(&perm).unwrap();
        let (a, b) = (beliefs(&m, 50), beliefs(&r, 50));
        for v in 0..n {
            for x in 0..2 {
                prop_assert!((a[v][x] - b[perm[v]][x]).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn star_by_hand() {
    // Center 0 with leaves 1, 2, 3 and ψ = [[1, 2], [3, 4]] (rows: center state).
    let psi = vec![1.0f64, 2.0, 3.0, 4.0];
    let m = GraphicalModel::new(4, 2, (1..4).map(|l| (0, l, psi.clone())).collect()).unwrap();
    // One sweep: leaf messages stay uniform; center→leaf ∝ (3², 7²).
    let one = bp_step(&m, &MessageSet::uniform(&m), 0.0).unwrap();
    for d in 0..m.num_directed_edges() {
        let (from, _) = m.directed_edge(d);
        let want = if from == 0 { [9.0 / 58.0, 49.0 / 58.0] } else { [0.5, 0.5] };
        assert!((one.messages[d][0] - want[0]).abs() < 1e-15 && (one.messages[d][1] - want[1]).abs() < 1e-15);
    }
    let b = beliefs(&m, 10);
    // Center ∝ (3³, 7³); leaf ∝ 9 ψ(0, ·) + 49 ψ(1, ·) = (156, 214).
    assert!((b[0][0] - 27.0 / 370.0).abs() < 1e-14);
    assert!((b[2][0] - 156.0 / 370.0).abs() < 1e-14);
}

#[test]
fn chain_by_transfer_matrices() {
    // ψ12 = M = [[1, 2], [1, 3]], ψ23 = N = [[2, 1], [1, 5]]; Z = 36.
    let m = GraphicalModel::new(3, 2, vec![(0, 1, vec![1.0, 2.0, 1.0, 3.0]), (1, 2, vec![2.0, 1.0, 1.0, 5.0])]).unwrap();
    let want = [[15.0, 21.0], [6.0, 30.0], [9.0, 27.0]];
    let b = beliefs(&m, 10);
    for v in 0..3 {
        for x in 0..2 {
            assert!((b[v][x] - want[v][x] / 36.0).abs() < 1e-14, "{b:?}");
        }
    }
    // Giving the second table as (2, 1) transposes it.
    let flipped =
        GraphicalModel::new(3, 2, vec![(0, 1, vec![1.0, 2.0, 1.0, 3.0]), (2, 1, vec![2.0, 1.0, 1.0, 5.0])]).unwrap();
    assert!(close(&beliefs(&flipped, 10), &b, 1e-14));
}

#[test]
fn damped_cycle_converges_to_symmetric_point() {
    let psi = vec![2.0f64, 1.0, 1.0, 2.0];
    let m = GraphicalModel::new(4, 2, (0..4).map(|i| (i, (i + 1) % 4, psi.clone())).collect()).unwrap();
    let run = run_bp(&m, 1000, 1e-12, 0.5).unwrap();
    assert!(run.converged);
    assert!(bp_marginals(&m, &run.messages).iter().flatten().all(|p| (p - 0.5).abs() < 1e-12));
}

#[test]
fn edge_cases() {
    let empty = GraphicalModel::<f64>::new(3, 4, vec![]).unwrap();
    let run = run_bp(&empty, 10, 1e-12, 0.0).unwrap();
    assert!(run.converged && run.iterations == 1);
    assert!(bp_marginals(&empty, &run.messages).iter().flatten().all(|&p| p == 0.25));

    let pair = GraphicalModel::new(2, 2, vec![(0, 1, vec![2.0, 1.0, 1.0, 2.0])]).unwrap();
    assert!(beliefs(&pair, 5).iter().flatten().all(|p| (p - 0.5).abs() < 1e-15));

    let chain = GraphicalModel::new(3, 2, vec![(0, 1, vec![1.0, 2.0, 1.0, 3.0]), (1, 2, vec![2.0, 1.0, 1.0, 5.0])]).unwrap();
    assert_eq!(run_bp(&chain, 100, f64::INFINITY, 0.0).unwrap().iterations, 1);
    assert!(run_bp(&chain, 0, 1e-12, 0.0).is_err());
    assert!(run_bp(&chain, 10, 1e-12, 1.0).is_err());

    let big = GraphicalModel::<f64>::new(8, 10, vec![]).unwrap();
    assert!(matches!(exact_marginals(&big), Err(Error::ResourceLimit(_))));

    assert!(GraphicalModel::<f64>::new(2, 2, vec![(0, 1, vec![1.0, 0.0, 1.0, 1.0])]).is_err());
    assert!(GraphicalModel::<f64>::new(2, 2, vec![(0, 1, vec![1.0, 1.0])]).is_err());
}

#[test]
fn text_format_roundtrip() {
    let m = GraphicalModel::<f64>::random_tree(6, 3, 3, 0.7, &Seed::new(4, "txt")).unwrap();
    let back: GraphicalModel<f64> = m.to_text().parse().unwrap();
    assert_eq!(back, m);
    let commented: GraphicalModel<f64> = "# pair\n2 2\n\n0 1 2 1 1 2\n".parse().unwrap();
    assert_eq!(commented.n(), 2);
}
