use std::sync::Mutex;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pci_core::coloring::{assign_quotients, assign_quotients_partial, greedy_color, repair_range, ColoringGraph};
use pci_core::crt::Mod30Assignment;
use pci_core::evaluate::{count_conflicts, evaluate_plan, objective_of_labels};
use pci_core::graph::{ChangeableSet, InterferenceGraph, PciPlan, MAX_PCI};
use pci_core::instances::{generate_rgg, RggConfig};
use pci_core::io::{parse_instance, InstanceFile};
use pci_core::local_search::{refine, LabelAssignment};
use pci_core::pipeline::{assign_pci_partial, assign_pci_with, stage_mod10, PipelineOptions, Strategy};
use pci_core::simplex::{
    half_sq_distance, kl_divergence, md_step, penalized_objective, solve_from, DescentMethod, PenalizedProblem,
    SimplexAssignment, SolverConfig,
};

fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.gen::<f64>();
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    w
}

fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> InterferenceGraph {
    let mut w = DMatrix::zeros(n, n);
    let mut e1 = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(p) {
                let v = rng.gen::<f64>();
                w[(i, j)] = v;
                w[(j, i)] = v;
                e1.push((i, j));
            }
        }
    }
    InterferenceGraph::new(w, e1, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_stays_within_bounds(seed in any::<u64>(), n in 1usize..8, k in 2usize..5, rho in 0.0f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_symmetric(n, &mut rng);
        let x = SimplexAssignment::random_interior(k, n, &mut rng);
        let f = penalized_objective(&w, &x, rho).unwrap();
        let norm11: f64 = w.iter().sum();
        let shifted = f - rho * n as f64 / 2.0;
        prop_assert!(shifted >= -rho * n as f64 / 2.0 - 1e-9);
        prop_assert!(shifted <= norm11 + 1e-9);
    }

    #[test]
    fn kl_dominates_half_squared_distance(seed in any::<u64>(), n in 1usize..6, k in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = SimplexAssignment::random_interior(k, n, &mut rng);
        let b = SimplexAssignment::random_interior(k, n, &mut rng);
        prop_assert!(kl_divergence(&a, &b).unwrap() + 1e-15 >= half_sq_distance(&a, &b).unwrap());
    }

    #[test]
    fn mirror_step_stays_feasible(seed in any::<u64>(), n in 1usize..6, k in 2usize..5, t in 1e-4f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = SimplexAssignment::random_interior(k, n, &mut rng);
        let g = DMatrix::from_fn(k, n, |_, _| rng.gen_range(-50.0..50.0));
        let y = md_step(&x, &g, t).unwrap();
        for j in 0..n {
            let col = y.matrix().column(j);
            prop_assert!((col.sum() - 1.0).abs() <= 1e-9);
            prop_assert!(col.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn labels_objective_matches_vertex_objective(seed in any::<u64>(), n in 1usize..8, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_symmetric(n, &mut rng);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let x = SimplexAssignment::one_hot(&labels, k).unwrap();
        let a = objective_of_labels(&w, &labels).unwrap();
        let b = penalized_objective(&w, &x, 0.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn refine_never_increases_objective(seed in any::<u64>(), n in 2usize..12, k in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_symmetric(n, &mut rng);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let before = objective_of_labels(&w, &labels).unwrap();
        let out = refine(&w, &LabelAssignment::new(labels, k).unwrap()).unwrap();
        prop_assert!(objective_of_labels(&w, out.labels.labels()).unwrap() <= before + 1e-12);
    }

    #[test]
    fn greedy_coloring_is_proper(seed in any::<u64>(), n in 0usize..30, p in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(p) {
                    edges.push((i, j));
                }
            }
        }
        let g = ColoringGraph::new(n, edges.iter().copied()).unwrap();
        let c = greedy_color(&g);
        for &(i, j) in &edges {
            prop_assert_ne!(c[i], c[j]);
        }
        prop_assert!(c.iter().all(|&x| x <= g.max_degree()));
        prop_assert_eq!(c, greedy_color(&g));
    }

    #[test]
    fn quotients_remove_all_conflicts(seed in any::<u64>(), n in 1usize..40, p in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, &mut rng);
        let r30 = Mod30Assignment::new((0..n).map(|_| rng.gen_range(0..3u8)).collect()).unwrap();
        let q = assign_quotients(&g, &r30).unwrap();
        let raw: Vec<u32> = q.iter().zip(r30.values()).map(|(&q, &r)| 30 * q + r as u32).collect();
        prop_assert_eq!(count_conflicts(&g, &raw, None), (0, 0));
    }

    #[test]
    fn repair_always_lands_in_range(seed in any::<u64>(), n in 1usize..40, p in 0.0f64..0.6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, &mut rng);
        let r30 = Mod30Assignment::new((0..n).map(|_| rng.gen_range(0..30u8)).collect()).unwrap();
        let q: Vec<u32> = (0..n).map(|_| rng.gen_range(0..60)).collect();
        let out = repair_range(&g, &r30, &q).unwrap();
        for i in 0..n {
            prop_assert!(30 * out.q[i] + r30.values()[i] as u32 <= MAX_PCI);
            if 30 * q[i] + r30.values()[i] as u32 <= MAX_PCI {
                prop_assert_eq!(out.q[i], q[i]);
            }
        }
    }

    #[test]
    fn partial_quotients_keep_fixed_cells(seed in any::<u64>(), n in 1usize..40, p in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, &mut rng);
        let r30 = Mod30Assignment::new((0..n).map(|_| rng.gen_range(0..2u8)).collect()).unwrap();
        let mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        let base: Vec<u32> = (0..n).map(|_| rng.gen_range(0..5)).collect();
        let q = assign_quotients_partial(&g, &r30, &mask, &base).unwrap();
        for i in 0..n {
            if !mask[i] {
                prop_assert_eq!(q[i], base[i]);
            }
        }
        let raw: Vec<u32> = q.iter().zip(r30.values()).map(|(&q, &r)| 30 * q + r as u32).collect();
        prop_assert_eq!(count_conflicts(&g, &raw, Some(&mask)), (0, 0));
    }

    #[test]
    fn evaluation_is_invariant_under_cell_relabeling(seed in any::<u64>(), n in 1usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, 0.4, &mut rng);
        let pci: Vec<u32> = (0..n).map(|_| rng.gen_range(0..40)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let mut moved = vec![0; n];
        for i in 0..n {
            moved[perm[i]] = pci[i];
        }
        let a = evaluate_plan(&g, &PciPlan::new(pci).unwrap()).unwrap();
        let b = evaluate_plan(&g.permuted(&perm).unwrap(), &PciPlan::new(moved).unwrap()).unwrap();
        prop_assert_eq!((a.collisions, a.confusions), (b.collisions, b.confusions));
        prop_assert!((a.mod3_interference - b.mod3_interference).abs() <= 1e-9);
        prop_assert!((a.mod30_interference - b.mod30_interference).abs() <= 1e-9);
    }

    #[test]
    fn instance_files_round_trip(seed in any::<u64>(), n in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, 0.5, &mut rng);
        let text = serde_json::to_string(&InstanceFile::from_graph(&g)).unwrap();
        prop_assert_eq!(parse_instance(&text).unwrap(), g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solver_is_label_equivariant(seed in any::<u64>(), n in 3usize..10, k in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_symmetric(n, &mut rng);
        let x0 = SimplexAssignment::random_interior(k, n, &mut rng);
        let mut perm: Vec<usize> = (0..k).collect();
        perm.rotate_left(1);
        let problem = PenalizedProblem::new(&w);
        let config = SolverConfig::default();
        let a = solve_from(&problem, x0.clone(), &config, DescentMethod::Mirror, &mut |_| {}).unwrap();
        let b = solve_from(&problem, x0.permute_labels(&perm), &config, DescentMethod::Mirror, &mut |_| {}).unwrap();
        let expected: Vec<usize> = a.labels.iter().map(|&l| perm[l]).collect();
        prop_assert_eq!(b.labels, expected);
    }

    #[test]
    fn partial_pipeline_keeps_fixed_pcis(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = generate_rgg(&RggConfig { n: 30, radius: 0.25, seed }).unwrap().graph;
        let baseline = PciPlan::new((0..30).map(|_| rng.gen_range(0..=MAX_PCI)).collect()).unwrap();
        let s: Vec<usize> = (0..30).filter(|_| rng.gen_bool(0.3)).collect();
        let set = ChangeableSet::new(&s, baseline.clone()).unwrap();
        let out = assign_pci_partial(&g, &set, &SolverConfig::default().with_seed(seed)).unwrap();
        for i in 0..30 {
            if !set.is_changeable(i) {
                prop_assert_eq!(out.plan.get(i), baseline.get(i));
            }
        }
    }
}

#[test]
fn pipeline_stages_recompose_the_plan() {
    for seed in 0..4 {
        let g = generate_rgg(&RggConfig { n: 80, radius: 0.15, seed }).unwrap().graph;
        let out = assign_pci_with(&g, &SolverConfig::default().with_seed(seed), &PipelineOptions::default()).unwrap();
        let d = out.plan.decompose();
        assert_eq!(d.q, out.stages.q);
        assert_eq!(d.r, out.stages.r30);
        assert_eq!(d.r3, out.stages.r3);
        assert_eq!(d.r10, out.stages.r10);
        assert_eq!(evaluate_plan(&g, &out.plan).unwrap(), out.report);
        if out.stages.repaired_cells == 0 {
            assert_eq!((out.report.collisions, out.report.confusions), (0, 0));
        }
    }
}

#[test]
fn mod10_stage_reads_only_within_partition_weights() {
    let g = generate_rgg(&RggConfig { n: 60, radius: 0.2, seed: 5 }).unwrap().graph;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let r3: Vec<u8> = (0..60).map(|_| rng.gen_range(0..3)).collect();
    let seen = Mutex::new(Vec::new());
    let w = g.weights();
    let observed = |i: usize, j: usize| {
        seen.lock().unwrap().push((i, j));
        w[(i, j)]
    };
    let config = SolverConfig::default().with_seed(5);
    let a = stage_mod10(&r3, &observed, Strategy::GpPmd, &config).unwrap();
    let reads = seen.into_inner().unwrap();
    assert!(!reads.is_empty());
    assert!(reads.iter().all(|&(i, j)| r3[i] == r3[j]));
    // Corrupting cross-partition weights cannot change the result.
    let b = stage_mod10(&r3, &|i, j| if r3[i] == r3[j] { w[(i, j)] } else { f64::NAN }, Strategy::GpPmd, &config)
        .unwrap();
    assert_eq!(a.r10, b.r10);
}

#[test]
fn thread_count_does_not_change_results() {
    let g = generate_rgg(&RggConfig { n: 100, radius: 0.12, seed: 21 }).unwrap().graph;
    let config = SolverConfig::default().with_seed(21);
    for strategy in Strategy::ALL {
        let one = assign_pci_with(&g, &config, &PipelineOptions { strategy, threads: Some(1) }).unwrap();
        let many = assign_pci_with(&g, &config, &PipelineOptions { strategy, threads: Some(4) }).unwrap();
        assert_eq!(one.plan, many.plan, "{strategy}");
        assert_eq!(one.stages, many.stages, "{strategy}");
        assert_eq!(one.traces, many.traces, "{strategy}");
    }
}

#[test]
fn same_seed_same_plan() {
    let g = generate_rgg(&RggConfig { n: 50, radius: 0.2, seed: 2 }).unwrap().graph;
    let config = SolverConfig::default().with_seed(9);
    let a = assign_pci_with(&g, &config, &PipelineOptions::default()).unwrap();
    let b = assign_pci_with(&g, &config, &PipelineOptions::default()).unwrap();
    assert_eq!(a.plan, b.plan);
    assert_eq!(a.stages, b.stages);
}
