use std::collections::{BTreeMap, BTreeSet, VecDeque};

use cpgvul::augment::{mutate, AugmentError, MutationKind, MutationOp};
use cpgvul::cfront::{parse_source, render_tokens, tokenize, Ast};
use cpgvul::cpg::{build_cpg, pdg_of, project_pdg, reaching_definitions, statement_cfg, Dependence, EdgeKind, EdgeType, Pdg, PdgEdge};
use cpgvul::ensemble::{metrics, vote};
use cpgvul::ingest::{attach_mutants, match_keywords, split_dataset, CweLabel, FunctionRecord, FunctionRole, GraphRecord};
use cpgvul::slicer::{slice_related, traverse, Direction};
use proptest::prelude::*;

const VARS: [&str; 4] = ["a", "b", "c", "n"];

fn var() -> impl Strategy<Value = &'static str> {
    proptest::sample::select(&VARS[..])
}

fn simple() -> impl Strategy<Value = String> {
    prop_oneof![
        (var(), var()).prop_map(|(x, y)| format!("{x} = {y} + 1;")),
        (var(), var(), var()).prop_map(|(x, y, z)| format!("{x} = {y} * {z};")),
        (var(), var()).prop_map(|(x, y)| format!("{x} += {y};")),
        var().prop_map(|x| format!("{x}++;")),
        (var(), var()).prop_map(|(x, y)| format!("use({x}, {y});")),
        var().prop_map(|x| format!("buf[{x}] = 0;")),
    ]
}

fn block(depth: u32) -> BoxedStrategy<String> {
    let leaf = prop::collection::vec(simple(), 1..4).prop_map(|v| v.join(" "));
    if depth == 0 {
        return leaf.boxed();
    }
    let inner = move || block(depth - 1);
    prop_oneof![
        3 => leaf,
        1 => (var(), inner()).prop_map(|(c, b)| format!("if ({c} > 0) {{ {b} }}")),
        1 => (var(), inner(), inner()).prop_map(|(c, t, e)| format!("if ({c}) {{ {t} }} else {{ {e} }}")),
        1 => (var(), inner()).prop_map(|(c, b)| format!("while ({c} < 10) {{ {b} }}")),
        1 => (var(), inner()).prop_map(|(c, b)| format!("while ({c}) {{ if (n == 3) break; {b} }}")),
        1 => (var(), inner()).prop_map(|(c, b)| format!("for (int i = 0; i < {c}; i++) {{ {b} if (a) continue; }}")),
    ]
    .boxed()
}

fn program() -> impl Strategy<Value = String> {
    prop::collection::vec(block(2), 1..5)
        .prop_map(|parts| format!("int f(int a, int n, char *buf) {{ int b = 0; int c = n; {} return a + b + c; }}", parts.join(" ")))
}

/// Definitions reaching the entry of each statement, found by walking CFG
/// paths from each definition until a strong redefinition of its variable.
fn path_reach(ast: &Ast, cfg: &BTreeSet<(usize, usize)>) -> Vec<BTreeSet<usize>> {
    let rd = reaching_definitions(ast, cfg);
    let n = ast.statement_count();
    let mut succs = vec![Vec::new(); n];
    for &(a, b) in cfg {
        succs[a].push(b);
    }
    let kills = |s: usize, var: &str| ast.statement(s).access.defs.iter().any(|d| d.strong && d.var == var);
    let mut reach = vec![BTreeSet::new(); n];
    for (id, def) in rd.defs.iter().enumerate() {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        match def.stmt {
            Some(s) => queue.extend(succs[s].iter().copied()),
            None if n > 0 => queue.push_back(0),
            None => {}
        }
        while let Some(t) = queue.pop_front() {
            if std::mem::replace(&mut seen[t], true) {
                continue;
            }
            reach[t].insert(id);
            if !kills(t, &def.var) {
                queue.extend(succs[t].iter().copied());
            }
        }
    }
    reach
}

fn random_pdg() -> impl Strategy<Value = Pdg> {
    (1usize..=10).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, any::<bool>()), 0..=2 * n).prop_map(move |es| {
            let edges = es.into_iter().map(|(src, dst, d)| PdgEdge { src, dst, kind: if d { Dependence::Data } else { Dependence::Control } });
            Pdg::new(n, edges.collect::<Vec<_>>()).unwrap()
        })
    })
}

fn subset(n: usize) -> impl Strategy<Value = BTreeSet<usize>> {
    prop::collection::btree_set(0..n, 1..=n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reaching_definitions_match_path_search(src in program()) {
        let ast = parse_source(&src).unwrap();
        let cfg = statement_cfg(&ast);
        let rd = reaching_definitions(&ast, &cfg);
        prop_assert_eq!(rd.reach_in, path_reach(&ast, &cfg));
    }

    #[test]
    fn cpg_edges_are_mirrored_and_project_to_the_pdg(src in program()) {
        let ast = parse_source(&src).unwrap();
        let cpg = build_cpg(&ast, "f");
        let set: BTreeSet<_> = cpg.edges.iter().copied().collect();
        prop_assert_eq!(set.len(), cpg.edges.len());
        for e in &cpg.edges {
            prop_assert!(e.src < cpg.node_count() && e.dst < cpg.node_count());
            prop_assert_eq!(EdgeType::from_code(e.ty.code()), Some(e.ty));
            if e.ty.kind != EdgeKind::Ast {
                let mirror = cpgvul::cpg::CpgEdge { src: e.dst, dst: e.src, ty: e.ty.reversed() };
                prop_assert!(set.contains(&mirror), "{:?} has no mirror", e);
            }
        }
        let pdg = pdg_of(&ast);
        prop_assert_eq!(pdg.stmts, ast.statement_count());
        prop_assert_eq!(&pdg.edges, &project_pdg(&cpg).edges);
        prop_assert!(pdg.edges.iter().all(|e| e.src < pdg.stmts && e.dst < pdg.stmts));
    }

    #[test]
    fn graph_records_survive_json(src in program(), label in 0u8..2) {
        let ast = parse_source(&src).unwrap();
        let g = GraphRecord::from_cpg(&build_cpg(&ast, "f"), label, CweLabel::Cwe835);
        let back: GraphRecord = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn reserialized_source_parses_to_the_same_statements(src in program()) {
        let ast = parse_source(&src).unwrap();
        let again = parse_source(&render_tokens(&ast.reserialize())).unwrap();
        let texts = |a: &Ast| (0..a.statement_count()).map(|s| a.statement_text(s)).collect::<Vec<_>>();
        prop_assert_eq!(texts(&again), texts(&ast));
    }

    #[test]
    fn slices_contain_seeds_and_grow_with_them(pdg in random_pdg(), seed in any::<u64>()) {
        let n = pdg.stmts;
        let small: BTreeSet<usize> = (0..n).filter(|i| (seed >> i) & 1 == 1).collect();
        let small = if small.is_empty() { BTreeSet::from([0]) } else { small };
        let mut large = small.clone();
        large.insert((seed % n as u64) as usize);
        let rs = slice_related(&pdg, &pdg, &small, &BTreeSet::new()).unwrap().related_v;
        let rl = slice_related(&pdg, &pdg, &large, &BTreeSet::new()).unwrap().related_v;
        prop_assert!(small.is_subset(&rs));
        prop_assert!(rs.is_subset(&rl));
        for &s in &small {
            prop_assert!(traverse(s, &pdg, Direction::Backward).unwrap().is_subset(&rs));
        }
    }

    #[test]
    fn traversal_directions_are_converse(pdg in random_pdg(), pick in any::<prop::sample::Index>()) {
        let s = pick.index(pdg.stmts);
        for t in traverse(s, &pdg, Direction::Forward).unwrap() {
            prop_assert!(traverse(t, &pdg, Direction::Backward).unwrap().contains(&s));
        }
    }

    #[test]
    fn both_sides_slice_independently(v in random_pdg(), p in random_pdg()) {
        let dv = BTreeSet::from([0]);
        let dp = BTreeSet::from([p.stmts - 1]);
        let both = slice_related(&v, &p, &dv, &dp).unwrap();
        prop_assert_eq!(&both.related_v, &slice_related(&v, &p, &dv, &BTreeSet::new()).unwrap().related_v);
        prop_assert_eq!(&both.related_p, &slice_related(&v, &p, &BTreeSet::new(), &dp).unwrap().related_p);
    }

    #[test]
    fn vote_is_a_majority(logits in prop::array::uniform5(0.0f64..1.0)) {
        let v = vote(&logits).unwrap();
        let positives = logits.iter().filter(|&&p| p > 0.5).count();
        prop_assert_eq!(v.final_label, u8::from(positives >= 3));
        if let Some(cwe) = v.attributed_cwe {
            let i = cwe.index();
            prop_assert!(logits[i] > 0.5);
            prop_assert!(logits.iter().all(|&p| p <= logits[i]));
        }
    }

    #[test]
    fn seeds_inside_random_subsets_are_related(pdg in random_pdg().prop_flat_map(|p| { let n = p.stmts; (Just(p), subset(n)) })) {
        let (pdg, seeds) = pdg;
        let r = slice_related(&pdg, &pdg, &seeds, &seeds).unwrap();
        prop_assert_eq!(&r.related_v, &r.related_p);
        prop_assert!(seeds.is_subset(&r.related_v));
    }

    #[test]
    fn tokens_round_trip_and_statements_are_dense(src in program()) {
        let ast = parse_source(&src).unwrap();
        let texts = |t: &[cpgvul::cfront::Token]| t.iter().map(|x| x.text.clone()).collect::<Vec<_>>();
        prop_assert_eq!(texts(&ast.reserialize()), texts(&tokenize(&src).unwrap()));
        prop_assert_eq!(&parse_source(&src).unwrap(), &ast);
        let stmt_nodes = ast.nodes.iter().filter(|n| n.kind.is_statement()).count();
        prop_assert_eq!(ast.statement_count(), stmt_nodes);
        let ids: Vec<usize> = ast.statements.iter().map(|&n| ast.node(n).stmt_id.unwrap()).collect();
        prop_assert_eq!(ids, (0..stmt_nodes).collect::<Vec<_>>());
    }

    #[test]
    fn every_pdg_edge_comes_from_a_cpg_edge(src in program()) {
        let ast = parse_source(&src).unwrap();
        let cpg = build_cpg(&ast, "f");
        for e in &pdg_of(&ast).edges {
            let kinds: &[EdgeKind] = match e.kind {
                Dependence::Data => &[EdgeKind::DefineUse, EdgeKind::Reach],
                Dependence::Control => &[EdgeKind::Control],
            };
            let found = cpg.edges.iter().any(|c| {
                kinds.contains(&c.ty.kind) && cpg.stmt_of.get(&c.src) == Some(&e.src) && cpg.stmt_of.get(&c.dst) == Some(&e.dst)
            });
            prop_assert!(found, "{:?}", e);
        }
    }

    #[test]
    fn mutants_parse_keep_frozen_statements_and_repeat(src in program(), mask in any::<u64>(), seed in any::<u64>()) {
        let ast = parse_source(&src).unwrap();
        let frozen: BTreeSet<usize> = (0..ast.statement_count()).filter(|i| (mask >> (i % 64)) & 1 == 1).collect();
        let f_v = FunctionRecord::new("p", "s", CweLabel::Cwe404, FunctionRole::Vulnerable, src.clone());
        for kind in MutationKind::ALL {
            let op = MutationOp { kind, seed };
            let m = match mutate(&f_v, &frozen, op) {
                Err(AugmentError::NoCandidates(_)) => continue,
                other => other.unwrap(),
            };
            prop_assert_eq!(&mutate(&f_v, &frozen, op).unwrap(), &m);
            prop_assert_eq!(m.label, 1);
            let mutant = parse_source(&m.code).unwrap();
            let mut have: BTreeMap<String, usize> = BTreeMap::new();
            for s in 0..mutant.statement_count() {
                *have.entry(mutant.statement_text(s)).or_default() += 1;
            }
            for &s in &frozen {
                let text = ast.statement_text(s);
                let words: Vec<&str> = text.split(' ').collect();
                let want = words
                    .iter()
                    .enumerate()
                    .map(|(i, &w)| if i > 0 && matches!(words[i - 1], "." | "->") { w } else { m.renames.get(w).map_or(w, String::as_str) })
                    .collect::<Vec<_>>()
                    .join(" ");
                let slot = have.get_mut(&want);
                prop_assert!(slot.as_ref().is_some_and(|c| **c > 0), "{} lost `{}`", kind, want);
                *slot.unwrap() -= 1;
            }
        }
    }

    #[test]
    fn keyword_matching_ignores_case(msg in "[a-zA-Z -]{0,40}", pick in 0usize..20) {
        let all: Vec<&str> = CweLabel::ALL.iter().flat_map(|c| c.keywords().iter().copied()).collect();
        let m = format!("{msg} {} fix", all[pick % all.len()]);
        prop_assert_eq!(match_keywords(&m.to_uppercase()), match_keywords(&m));
        prop_assert_eq!(match_keywords(&m.to_lowercase()), match_keywords(&m));
    }

    #[test]
    fn swapping_predictions_and_labels_swaps_precision_and_recall(pairs in prop::collection::vec((0u8..2, 0u8..2), 1..40)) {
        let (p, l): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        let a = metrics(&p, &l).unwrap();
        let b = metrics(&l, &p).unwrap();
        prop_assert_eq!((a.precision, a.recall), (b.recall, b.precision));
        if a.precision + a.recall > 0.0 {
            prop_assert!((a.f1 - 2.0 * a.precision * a.recall / (a.precision + a.recall)).abs() < 1e-15);
        }
    }

    #[test]
    fn splits_keep_pairs_together_and_mutants_in_train(pairs in 5usize..30, seed in any::<u64>()) {
        let mut records = Vec::new();
        for i in 0..pairs {
            let sha = format!("{i:040x}");
            records.push(FunctionRecord::new("proj", &sha, CweLabel::Cwe835, FunctionRole::Vulnerable, "v".into()));
            records.push(FunctionRecord::new("proj", &sha, CweLabel::Cwe835, FunctionRole::Patched, "p".into()));
        }
        let mut split = split_dataset(&records, [6, 2, 2], seed).unwrap();
        let side = |id: &str| [&split.train, &split.validation, &split.test].iter().position(|s| s.iter().any(|x| x == id));
        for r in &records {
            prop_assert!(side(&r.id).is_some());
            let partner = match r.id.strip_suffix("#v") {
                Some(stem) => format!("{stem}#p"),
                None => r.id.replace("#p", "#v"),
            };
            prop_assert_eq!(side(&r.id), side(&partner));
        }
        let total = split.train.len() + split.validation.len() + split.test.len();
        prop_assert_eq!(total, records.len());
        let outside = split.test[0].clone();
        let mut bad = FunctionRecord::new("proj", "x", CweLabel::Cwe835, FunctionRole::Mutated, "m".into());
        bad.parent_id = Some(outside);
        prop_assert!(attach_mutants(&mut split, &[bad]).is_err());
    }
}
