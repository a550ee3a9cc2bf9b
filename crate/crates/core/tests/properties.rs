use std::collections::BTreeSet;

use bmfuse_core::evaluation::{
    brute_force_rates, compute_mapping_table, equal_error_rate, gar_at_far, MappingTable,
};
use bmfuse_core::fusion::{
    calibrate_probability, decide, decision_fusion_counts, fuse_scores, Decision, DecisionRule,
    FusionRule,
};
use bmfuse_core::normalization::{apply_normalization, NormalizationMethod, NormalizationParams};
use bmfuse_core::score::{
    build_multimodal_table, split_score_set, Label, MatcherId, MultimodalScoreTable, Polarity, Row,
    ScoreRecord,
};
use bmfuse_core::synth::{generate_synthetic_table, MatcherProfile, SimConfig};
use proptest::prelude::*;

fn scores(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    // a coarse grid half of the time, so ties are common
    prop_oneof![
        prop::collection::vec(-50.0f64..50.0, 1..max_len),
        prop::collection::vec((0i32..12).prop_map(|k| k as f64 * 0.25), 1..max_len),
    ]
}

fn rate_pairs(t: &MappingTable) -> BTreeSet<(u64, u64)> {
    t.rows()
        .iter()
        .map(|r| (r.far.to_bits(), r.frr.to_bits()))
        .collect()
}

fn table_of(rows: &[(String, String, Vec<f64>)], k: usize) -> MultimodalScoreTable {
    let matchers = (0..k)
        .map(|j| MatcherId::similarity(format!("m{j}")).unwrap())
        .collect();
    MultimodalScoreTable::new(
        matchers,
        rows.iter()
            .map(|(t, q, s)| Row {
                target_id: t.clone(),
                query_id: q.clone(),
                label: Label::from_ids(t, q),
                scores: s.clone(),
            })
            .collect(),
    )
    .unwrap()
}

fn small_table(k: usize) -> impl Strategy<Value = MultimodalScoreTable> {
    prop::collection::vec(
        (0u8..4, 0u8..4, prop::collection::vec(0.0f64..1.0, k)),
        2..30,
    )
    .prop_map(move |rows| {
        let rows: Vec<_> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (a, b, s))| {
                // unique pair per row: suffix with the row index on both sides
                (format!("u{a}-{i}"), format!("u{b}-{i}"), s)
            })
            .collect();
        table_of(&rows, k)
    })
}

proptest! {
    #[test]
    fn sweep_matches_brute_force(g in scores(200), i in scores(200)) {
        let t = compute_mapping_table(&g, &i).unwrap();
        for r in t.rows() {
            let (far, frr) = brute_force_rates(&g, &i, r.threshold).unwrap();
            prop_assert_eq!((r.far, r.frr), (far, frr));
        }
    }

    #[test]
    fn mapping_table_is_monotone(g in scores(100), i in scores(100)) {
        let t = compute_mapping_table(&g, &i).unwrap();
        prop_assert!(t.rows().len() >= 3);
        for w in t.rows().windows(2) {
            prop_assert!(w[0].threshold < w[1].threshold);
            prop_assert!(w[0].far >= w[1].far);
            prop_assert!(w[0].frr <= w[1].frr);
        }
        for r in t.rows() {
            prop_assert_eq!(r.gar, 1.0 - r.frr);
        }
    }

    #[test]
    fn operating_point_respects_budget(g in scores(100), i in scores(100), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let t = compute_mapping_table(&g, &i).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let p_lo = gar_at_far(&t, lo).unwrap();
        let p_hi = gar_at_far(&t, hi).unwrap();
        prop_assert!(p_lo.achieved_far <= lo);
        prop_assert!(p_hi.achieved_far <= hi);
        prop_assert!(p_hi.gar >= p_lo.gar);
        prop_assert!(t.rows().iter().any(|r| r.threshold == p_lo.threshold && r.far == p_lo.achieved_far && r.gar == p_lo.gar));
    }

    #[test]
    fn eer_of_identical_classes_is_half(g in scores(100)) {
        let t = compute_mapping_table(&g, &g).unwrap();
        prop_assert_eq!(equal_error_rate(&t), 0.5);
    }

    #[test]
    fn normalization_keeps_roc(g in scores(100), i in scores(100)) {
        let pooled: Vec<f64> = g.iter().chain(&i).copied().collect();
        let raw = rate_pairs(&compute_mapping_table(&g, &i).unwrap());
        for method in NormalizationMethod::ALL {
            let Ok(p) = NormalizationParams::fit(&pooled, method) else { continue };
            let norm = |v: &Vec<f64>| v.iter().map(|&s| apply_normalization(s, &p).unwrap()).collect::<Vec<_>>();
            let t = compute_mapping_table(&norm(&g), &norm(&i)).unwrap();
            prop_assert_eq!(&rate_pairs(&t), &raw, "{}", method);
        }
    }

    #[test]
    fn minmax_maps_fitted_set_into_unit_interval(v in prop::collection::vec(-1e3f64..1e3, 2..100)) {
        let Ok(p) = NormalizationParams::fit(&v, NormalizationMethod::MinMax) else { return Ok(()) };
        prop_assert_eq!(apply_normalization(p.min, &p).unwrap(), 0.0);
        prop_assert_eq!(apply_normalization(p.max, &p).unwrap(), 1.0);
        for &s in &v {
            let n = apply_normalization(s, &p).unwrap();
            prop_assert!((0.0..=1.0).contains(&n));
        }
    }

    #[test]
    fn zscore_standardizes_fitted_set(v in prop::collection::vec(-1e3f64..1e3, 2..200)) {
        let Ok(p) = NormalizationParams::fit(&v, NormalizationMethod::ZScore) else { return Ok(()) };
        let z: Vec<f64> = v.iter().map(|&s| apply_normalization(s, &p).unwrap()).collect();
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let std = (z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) / p.std;
        prop_assert!(mean.abs() < 1e-12 * scale.max(1.0), "mean {}", mean);
        prop_assert!((std - 1.0).abs() < 1e-9, "std {}", std);
    }

    #[test]
    fn tanh_stays_inside_unit_interval(v in prop::collection::vec(-1e3f64..1e3, 2..50), s in -1e4f64..1e4) {
        let Ok(p) = NormalizationParams::fit(&v, NormalizationMethod::Tanh) else { return Ok(()) };
        // keep 0.01 * z well inside tanh's non-saturated range
        prop_assume!(((s - p.mean) / p.std).abs() < 1500.0);
        let n = apply_normalization(s, &p).unwrap();
        prop_assert!(n > 0.0 && n < 1.0, "{}", n);
    }

    #[test]
    fn transforms_are_increasing_and_pure(v in prop::collection::vec(-100.0f64..100.0, 3..50), a in -100.0f64..100.0, d in 1e-3f64..10.0) {
        for method in NormalizationMethod::ALL {
            let Ok(p) = NormalizationParams::fit(&v, method) else { continue };
            let x = apply_normalization(a, &p).unwrap();
            let y = apply_normalization(a + d, &p).unwrap();
            prop_assert!(x < y, "{}", method);
            prop_assert_eq!(x.to_bits(), apply_normalization(a, &p).unwrap().to_bits());
        }
    }

    #[test]
    fn rules_are_permutation_invariant(row in prop::collection::vec(0.0f64..1.0, 1..6), seed in any::<u64>()) {
        let k = row.len();
        let mut perm: Vec<usize> = (0..k).collect();
        // deterministic shuffle from the seed
        let mut s = seed;
        for i in (1..k).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let permuted: Vec<f64> = perm.iter().map(|&j| row[j]).collect();
        let raw_w: Vec<f64> = (1..=k).map(|j| j as f64).collect();
        let total: f64 = raw_w.iter().sum();
        let w: Vec<f64> = raw_w.iter().map(|x| x / total).collect();
        let w_perm: Vec<f64> = perm.iter().map(|&j| w[j]).collect();
        for rule in [FusionRule::SimpleSum, FusionRule::MinScore, FusionRule::MaxScore, FusionRule::Product] {
            let a = fuse_scores(&row, &rule, None).unwrap();
            let b = fuse_scores(&permuted, &rule, None).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{}", rule);
        }
        if let (Ok(r1), Ok(r2)) = (FusionRule::weighted_sum(w), FusionRule::weighted_sum(w_perm)) {
            let a = fuse_scores(&row, &r1, None).unwrap();
            let b = fuse_scores(&permuted, &r2, None).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn single_matcher_rules_are_identity(s in 0.0f64..1.0) {
        for rule in [FusionRule::SimpleSum, FusionRule::MinScore, FusionRule::MaxScore, FusionRule::Product, FusionRule::WeightedSum(vec![1.0])] {
            prop_assert_eq!(fuse_scores(&[s], &rule, None).unwrap(), s);
        }
    }

    #[test]
    fn mean_between_min_and_max(row in prop::collection::vec(-10.0f64..10.0, 1..8)) {
        let lo = fuse_scores(&row, &FusionRule::MinScore, None).unwrap();
        let mid = fuse_scores(&row, &FusionRule::SimpleSum, None).unwrap();
        let hi = fuse_scores(&row, &FusionRule::MaxScore, None).unwrap();
        prop_assert!(lo <= mid + 1e-12 && mid <= hi + 1e-12);
    }

    #[test]
    fn product_of_posteriors_below_min_posterior(t in small_table(3), x in prop::collection::vec(-0.2f64..1.2, 3)) {
        prop_assume!(t.genuine_count() > 0 && t.impostor_count() > 0);
        let Ok(model) = calibrate_probability(&t, 4, 1.0) else { return Ok(()) };
        let prod = fuse_scores(&x, &FusionRule::ProductOfProbabilities, Some(&model)).unwrap();
        let min_post = model.matchers().iter().zip(&x).map(|(m, &s)| m.posterior(s)).fold(1.0, f64::min);
        prop_assert!(prod <= min_post);
        for m in model.matchers() {
            prop_assert!(m.posteriors().iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn decide_is_monotone(a in -5.0f64..5.0, b in -5.0f64..5.0, t in -5.0f64..5.0) {
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        if decide(lo, t) == Decision::Accept {
            prop_assert_eq!(decide(hi, t), Decision::Accept);
        }
    }

    #[test]
    fn or_rule_contains_each_modality(t in small_table(3), th in prop::collection::vec(0.0f64..1.0, 3)) {
        prop_assume!(t.genuine_count() > 0 && t.impostor_count() > 0);
        let or = decision_fusion_counts(&t, &th, DecisionRule::Or).unwrap();
        let and = decision_fusion_counts(&t, &th, DecisionRule::And).unwrap();
        for (j, m) in t.matchers().iter().enumerate() {
            let set = split_score_set(&t, m.name()).unwrap();
            let (far, frr) = brute_force_rates(&set.genuine, &set.impostor, th[j]).unwrap();
            prop_assert!(or.frr() <= frr && or.far() >= far);
            prop_assert!(and.frr() >= frr && and.far() <= far);
        }
    }

    #[test]
    fn class_counts_partition_rows(t in small_table(2)) {
        prop_assert_eq!(t.genuine_count() + t.impostor_count(), t.rows().len());
        for r in t.rows() {
            prop_assert_eq!(Label::from_ids(&r.target_id, &r.query_id), r.label);
        }
    }
}

#[test]
fn mean_and_sum_rules_give_same_roc() {
    // 20 rows over 3 matchers, hand-picked with ties
    let rows: Vec<(String, String, Vec<f64>)> = (0..20)
        .map(|i| {
            let genuine = i % 3 == 0;
            let (t, q) = if genuine {
                (format!("s{i}"), format!("s{i}"))
            } else {
                (format!("s{i}"), format!("x{i}"))
            };
            let base = ((i * 7) % 11) as f64 / 10.0;
            (
                t,
                q,
                vec![base, ((i * 5) % 4) as f64 / 4.0, 1.0 - base / 2.0],
            )
        })
        .collect();
    let table = table_of(&rows, 3);
    let split = |f: &dyn Fn(&[f64]) -> f64| {
        let (mut g, mut i) = (vec![], vec![]);
        for r in table.rows() {
            let v = f(&r.scores);
            if r.label == Label::Genuine {
                g.push(v)
            } else {
                i.push(v)
            }
        }
        compute_mapping_table(&g, &i).unwrap()
    };
    let mean = split(&|s| fuse_scores(s, &FusionRule::SimpleSum, None).unwrap());
    let sum = split(&|s| s.iter().sum());
    assert_eq!(rate_pairs(&mean), rate_pairs(&sum));
}

#[test]
fn distance_negation_matches_prenegated_similarity() {
    let raw = [3.0, 1.5, 2.2, 0.4, 2.2, 5.0, 0.9, 1.1, 4.4, 0.1];
    let ids = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"];
    let dist = MatcherId::new("m", Polarity::Distance).unwrap();
    let sim = MatcherId::similarity("m").unwrap();
    let recs = |m: &MatcherId, sign: f64| -> Vec<ScoreRecord> {
        raw.iter()
            .enumerate()
            .map(|(k, &s)| {
                let q = if k % 3 == 0 {
                    ids[k]
                } else {
                    ids[(k + 1) % 10]
                };
                ScoreRecord::from_raw(m.clone(), ids[k], q, sign * s).unwrap()
            })
            .collect()
    };
    let a = build_multimodal_table(&recs(&dist, 1.0), std::slice::from_ref(&dist)).unwrap();
    let b = build_multimodal_table(&recs(&sim, -1.0), std::slice::from_ref(&sim)).unwrap();
    let sa = split_score_set(&a, "m").unwrap();
    let sb = split_score_set(&b, "m").unwrap();
    let ta = compute_mapping_table(&sa.genuine, &sa.impostor).unwrap();
    let tb = compute_mapping_table(&sb.genuine, &sb.impostor).unwrap();
    assert_eq!(ta, tb);
}

fn profile(name: &str, gm: f64, gs: f64, im: f64, is: f64) -> MatcherProfile {
    MatcherProfile {
        name: name.into(),
        genuine_mean: gm,
        genuine_std: gs,
        impostor_mean: im,
        impostor_std: is,
        distribution: Default::default(),
    }
}

#[test]
fn gaussian_profile_matches_analytic_gar() {
    use statrs::distribution::{ContinuousCDF, Normal};
    let cfg = SimConfig {
        profiles: vec![profile("m", 1.0, 0.5, 0.0, 0.5)],
        n_genuine_pairs: 10_000,
        n_impostor_pairs: 10_000,
        seed: 11,
    };
    // threshold leaving 10% of N(0, 0.5) above it; GAR is the N(1, 0.5) mass above it
    let impostor = Normal::new(0.0, 0.5).unwrap();
    let genuine = Normal::new(1.0, 0.5).unwrap();
    let threshold = impostor.inverse_cdf(0.9);
    let expected = 1.0 - genuine.cdf(threshold);
    assert!((expected - 0.76376).abs() < 1e-4, "{expected}");

    let table = generate_synthetic_table(&cfg).unwrap();
    let set = split_score_set(&table, "m").unwrap();
    let mapping = compute_mapping_table(&set.genuine, &set.impostor).unwrap();
    let got = gar_at_far(&mapping, 0.10).unwrap().gar;
    assert!(
        (got - expected).abs() <= 0.02,
        "empirical {got} vs analytic {expected}"
    );
}

#[test]
fn separated_classes_have_small_eer() {
    let cfg = SimConfig {
        profiles: vec![profile("m", 1.0, 1.0, 0.0, 1.0)],
        n_genuine_pairs: 10_000,
        n_impostor_pairs: 10_000,
        seed: 5,
    };
    let table = generate_synthetic_table(&cfg).unwrap();
    let set = split_score_set(&table, "m").unwrap();
    let eer = equal_error_rate(&compute_mapping_table(&set.genuine, &set.impostor).unwrap());
    // binomial noise of a rate near 0.5 at n = 1e4 is 0.005
    assert!(eer < 0.5 - 5.0 * 0.005, "{eer}");
}

#[test]
fn synthetic_tables_are_deterministic() {
    let cfg = SimConfig {
        profiles: vec![
            profile("a", 2.0, 1.0, 0.0, 1.0),
            profile("b", 5.0, 2.0, 1.0, 1.0),
        ],
        n_genuine_pairs: 300,
        n_impostor_pairs: 700,
        seed: 99,
    };
    let a = generate_synthetic_table(&cfg).unwrap();
    let b = generate_synthetic_table(&cfg).unwrap();
    assert_eq!(a, b);
    let bits = |t: &MultimodalScoreTable| -> Vec<u64> {
        t.rows()
            .iter()
            .flat_map(|r| r.scores.iter().map(|s| s.to_bits()))
            .collect()
    };
    assert_eq!(bits(&a), bits(&b));
}
