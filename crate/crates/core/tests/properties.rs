mod support;

use macc_core::bitset::BitSet;
use macc_core::coloring::{assemble_q, dsatur, repair, validate_coloring, VertexColoring};
use macc_core::combinatorics::binomial;
use macc_core::converse::{
    greedy_converse, ic_converse_dp, ic_converse_enum, permutation_value, DemandSetFamily,
};
use macc_core::delivery::{decode_all, load, make_schedule, DemandVector, FileLibrary};
use macc_core::graph::build_conflict_graph;
use macc_core::interchange::{export_graph_string, import_graph_str, GraphBundle, GraphMeta};
use macc_core::macc::{build_node_placement, derive_retrieve_array, AccessTopology, RetrieveArray};
use macc_core::pda::{build_mn_pda, validate_pda, Cell, PdaArray, ValidationMode};
use num_rational::Ratio;
use proptest::prelude::*;
use support::{brute_ic, chromatic_number, random_instance, retrieve_stars, uncached};

fn retrieve(inst: &support::Instance) -> RetrieveArray {
    let placement = build_node_placement(inst.cache_nodes, inst.t).unwrap();
    derive_retrieve_array(&placement, &inst.topology).unwrap()
}

fn shuffled(n: usize, keys: &[u64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by_key(|&i| (keys[i % keys.len()].wrapping_mul(i as u64 + 1), i));
    idx
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn retrieve_array_matches_oracle(seed in any::<u64>()) {
        let inst = random_instance(seed, 8, 8, 4);
        let u = retrieve(&inst);
        let stars = retrieve_stars(&inst.topology, inst.t);
        prop_assert_eq!(u.rows(), stars.len());
        for (f, row) in stars.iter().enumerate() {
            for (k, &s) in row.iter().enumerate() {
                prop_assert_eq!(u.is_star(f, k), s);
            }
        }
        for k in 0..inst.users {
            let a = inst.topology.access(k).len();
            let expected = binomial(inst.cache_nodes, inst.t)
                - binomial(inst.cache_nodes - a, inst.t);
            prop_assert_eq!(u.column_star_count(k), expected);
        }
    }

    #[test]
    fn conflict_edges_are_exactly_the_unshareable_pairs(seed in any::<u64>()) {
        let inst = random_instance(seed, 5, 5, 3);
        let u = retrieve(&inst);
        prop_assume!(u.rows() * u.cols() <= 200);
        let cg = build_conflict_graph(&u);
        let n = cg.graph().vertex_count();
        for a in 0..n {
            for b in a + 1..n {
                // a and b share color 1, every other vertex is alone
                let colors: Vec<u32> = (0..n)
                    .map(|v| if v == a || v == b { 1 } else { v as u32 + 2 })
                    .collect();
                let shareable = assemble_q(&u, &VertexColoring::from_colors(colors).unwrap()).is_ok();
                prop_assert_eq!(shareable, !cg.graph().is_adjacent(a, b), "pair {} {}", a, b);
            }
        }
    }

    #[test]
    fn validation_is_permutation_invariant(
        k in 2usize..7,
        t_seed in any::<u64>(),
        keys in prop::collection::vec(any::<u64>(), 1..8),
        corrupt in any::<bool>(),
    ) {
        let t = 1 + (t_seed as usize % (k - 1));
        let mut q = build_mn_pda(k, t).unwrap();
        if corrupt {
            // duplicate a code into another null cell of the first row
            let nulls: Vec<usize> = (0..k).filter(|&c| !q.get(0, c).is_star()).collect();
            if nulls.len() >= 2 {
                let code = q.get(0, nulls[0]);
                q.set(0, nulls[1], code);
            }
        }
        let before = validate_pda(&q, ValidationMode::Full).passed();
        let rows = shuffled(q.rows(), &keys);
        let cols = shuffled(q.cols(), &keys[1..].iter().chain(&keys[..1]).copied().collect::<Vec<_>>());
        let p = q.permute(&rows, &cols);
        prop_assert_eq!(validate_pda(&p, ValidationMode::Full).passed(), before);
        prop_assert_eq!(validate_pda(&p, ValidationMode::DeliveryOnly).passed(),
            validate_pda(&q, ValidationMode::DeliveryOnly).passed());
    }

    #[test]
    fn dsatur_and_repair_are_proper(seed in any::<u64>(), noise in prop::collection::vec(1u32..6, 0..400)) {
        let inst = random_instance(seed, 6, 6, 3);
        let u = retrieve(&inst);
        let cg = build_conflict_graph(&u);
        let g = cg.graph();
        let d = dsatur(g);
        prop_assert!(validate_coloring(g, d.colors()).unwrap().is_proper());
        prop_assert!(d.used_colors() <= g.max_degree() + 1);
        prop_assert!(assemble_q(&u, &d).is_ok());

        let n = g.vertex_count();
        let input: Vec<u32> = (0..n).map(|v| noise.get(v).copied().unwrap_or(1)).collect();
        let distinct_in = input.iter().collect::<std::collections::BTreeSet<_>>().len();
        let fixed = repair(g, &input).unwrap();
        prop_assert!(validate_coloring(g, fixed.colors()).unwrap().is_proper());
        prop_assert!(fixed.used_colors() <= distinct_in.max(g.max_degree() + 1));
        prop_assert!(assemble_q(&u, &fixed).is_ok());
    }

    #[test]
    fn duplicated_color_breaks_delivery(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let inst = random_instance(seed, 6, 6, 3);
        let u = retrieve(&inst);
        let cg = build_conflict_graph(&u);
        prop_assume!(cg.graph().edge_count() > 0);
        let (a, b) = cg.graph().edges()[pick.index(cg.graph().edge_count())];
        let mut colors = dsatur(cg.graph()).into_colors();
        colors[b as usize] = colors[a as usize];
        let check = validate_coloring(cg.graph(), &colors).unwrap();
        prop_assert!(!check.is_proper());
        // Compaction may be needed if b held the only copy of its color.
        let coloring = VertexColoring::from_colors(colors).unwrap();
        prop_assert!(assemble_q(&u, &coloring).is_err());
    }

    #[test]
    fn exact_converses_agree_with_brute_force(seed in any::<u64>()) {
        let inst = random_instance(seed, 6, 7, 4);
        let u = retrieve(&inst);
        let family = DemandSetFamily::from_retrieve_array(&u);
        let oracle = brute_ic(&uncached(&retrieve_stars(&inst.topology, inst.t)), u.rows());
        let e = ic_converse_enum(&family).unwrap();
        let d = ic_converse_dp(&family).unwrap();
        prop_assert_eq!(e.bound, oracle);
        prop_assert_eq!(d.bound, oracle);
        prop_assert_eq!(permutation_value(&family, &e.witness).unwrap(), e.bound);
        prop_assert_eq!(permutation_value(&family, &d.witness).unwrap(), d.bound);
        prop_assert_eq!(d.work, 1u64 << inst.users);
    }

    #[test]
    fn enum_and_dp_agree_on_arbitrary_families(
        packets in 1usize..40,
        raw in prop::collection::vec(prop::collection::vec(any::<bool>(), 40), 1..8),
    ) {
        let sets = raw
            .iter()
            .map(|bits| BitSet::from_indices(packets, (0..packets).filter(|&p| bits[p])))
            .collect();
        let family = DemandSetFamily::from_sets(packets, sets).unwrap();
        prop_assert_eq!(ic_converse_enum(&family).unwrap().bound, ic_converse_dp(&family).unwrap().bound);
    }

    #[test]
    fn greedy_below_ic_below_dsatur(seed in any::<u64>()) {
        let inst = random_instance(seed, 7, 7, 4);
        let u = retrieve(&inst);
        let family = DemandSetFamily::from_retrieve_array(&u);
        let g = greedy_converse(&family);
        let ic = ic_converse_dp(&family).unwrap();
        let s = dsatur(build_conflict_graph(&u).graph()).used_colors();
        prop_assert!(g.bound <= ic.bound);
        prop_assert!(ic.bound <= load(s, u.rows()));
        prop_assert_eq!(permutation_value(&family, &g.witness).unwrap(), g.bound);
        let k = inst.users as u64;
        prop_assert_eq!(g.work, k * (k + 1) / 2);
        let max_set = family.sets().iter().map(BitSet::count).max().unwrap_or(0) as u64;
        prop_assert!(ic.bound <= Ratio::new(max_set * k, u.rows() as u64));
    }

    #[test]
    fn wider_access_never_raises_the_converse(seed in any::<u64>(), who in any::<prop::sample::Index>(), node in any::<prop::sample::Index>()) {
        let inst = random_instance(seed, 6, 6, 3);
        let before = ic_converse_dp(&DemandSetFamily::from_retrieve_array(&retrieve(&inst))).unwrap();
        let mut access = inst.topology.access_sets().to_vec();
        let k = who.index(inst.users);
        let l = node.index(inst.cache_nodes);
        if !access[k].contains(&l) {
            access[k].push(l);
            access[k].sort_unstable();
        }
        let wider = support::Instance {
            topology: AccessTopology::new(inst.cache_nodes, access).unwrap(),
            ..inst
        };
        let after = ic_converse_dp(&DemandSetFamily::from_retrieve_array(&retrieve(&wider))).unwrap();
        prop_assert!(after.bound <= before.bound);
    }

    #[test]
    fn delivery_decodes(seed in any::<u64>(), demand_seed in any::<u64>(), bits in 1usize..200) {
        let inst = random_instance(seed, 7, 6, 3);
        let u = retrieve(&inst);
        let q = assemble_q(&u, &dsatur(build_conflict_graph(&u).graph())).unwrap();
        let files = inst.users;
        let demands: Vec<usize> = (0..inst.users)
            .map(|k| (demand_seed.rotate_left(k as u32 * 7) as usize) % files)
            .collect();
        let d = DemandVector::new(files, demands).unwrap();
        let lib = FileLibrary::random(files, u.rows(), bits, seed ^ demand_seed).unwrap();
        let sched = make_schedule(&q, &d, &lib).unwrap();
        prop_assert_eq!(sched.len(), q.code_count());
        let report = decode_all(&sched, &u, &q, &d, &lib).unwrap();
        prop_assert!(report.success());
    }

    #[test]
    fn schedule_is_linear_in_the_library(seed in any::<u64>(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let inst = random_instance(seed, 6, 5, 3);
        let u = retrieve(&inst);
        let q = assemble_q(&u, &dsatur(build_conflict_graph(&u).graph())).unwrap();
        let d = DemandVector::new(inst.users, (0..inst.users).collect()).unwrap();
        let a = FileLibrary::random(inst.users, u.rows(), 64, s1).unwrap();
        let b = FileLibrary::random(inst.users, u.rows(), 64, s2).unwrap();
        let sa = make_schedule(&q, &d, &a).unwrap();
        let sb = make_schedule(&q, &d, &b).unwrap();
        let sab = make_schedule(&q, &d, &a.xor(&b).unwrap()).unwrap();
        for ((x, y), z) in sa.blocks.iter().zip(&sb.blocks).zip(&sab.blocks) {
            let sum: Vec<u64> = x.payload.iter().zip(&y.payload).map(|(p, q)| p ^ q).collect();
            prop_assert_eq!(&sum, &z.payload);
        }
    }

    #[test]
    fn graph_documents_round_trip(seed in any::<u64>()) {
        let inst = random_instance(seed, 6, 6, 3);
        let u = retrieve(&inst);
        let bundle = GraphBundle {
            graph: build_conflict_graph(&u),
            meta: GraphMeta {
                users: inst.users,
                cache_nodes: inst.cache_nodes,
                t: inst.t,
                subpacketization: u.rows(),
                seed,
                topology: inst.topology.to_one_based(),
                generator: String::new(),
            },
        };
        let text = export_graph_string(&bundle).unwrap();
        let back = import_graph_str(&text).unwrap();
        prop_assert_eq!(&back, &bundle);
        prop_assert_eq!(export_graph_string(&back).unwrap(), text);
    }
}

#[test]
fn dsatur_never_beats_the_chromatic_number() {
    let mut checked = 0;
    for seed in 0..300u64 {
        let inst = random_instance(seed, 5, 5, 3);
        let cg = build_conflict_graph(&retrieve(&inst));
        if cg.graph().vertex_count() > 14 {
            continue;
        }
        let chi = chromatic_number(cg.graph());
        let d = dsatur(cg.graph()).used_colors();
        assert!(d >= chi, "seed {seed}: dsatur {d} < chi {chi}");
        // the converse bounds chi / F from below
        let ic = ic_converse_dp(&DemandSetFamily::from_retrieve_array(&retrieve(&inst))).unwrap();
        assert!(ic.bound <= load(chi, cg.rows()), "seed {seed}");
        checked += 1;
    }
    assert!(checked > 100, "only {checked} small instances");
}

#[test]
fn chromatic_oracle_sanity() {
    use macc_core::graph::Graph;
    assert_eq!(chromatic_number(&Graph::complete(5)), 5);
    assert_eq!(chromatic_number(&Graph::from_edges(4, []).unwrap()), 1);
    let c5 = Graph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
    assert_eq!(chromatic_number(&c5), 3);
    let u = RetrieveArray::parse_grid("* . .\n. * .\n. . *").unwrap();
    assert_eq!(chromatic_number(build_conflict_graph(&u).graph()), 3);
}

#[test]
fn mn_pda_text_round_trip() {
    for k in 2..7 {
        for t in 1..k {
            let q = build_mn_pda(k, t).unwrap();
            let back: PdaArray = q.to_string().parse().unwrap();
            assert_eq!(back, q);
            assert!(matches!(back.get(0, 0), Cell::Star));
        }
    }
}
