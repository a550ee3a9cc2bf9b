use std::collections::BTreeMap;

use bmfuse::formats::{
    emit_roc_csv, emit_score_csv, matchers_in_order, parse_roc_csv, parse_score_csv,
};
use bmfuse_core::evaluation::RocPoint;
use bmfuse_core::score::{build_multimodal_table, Polarity};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
    ]
}

proptest! {
    #[test]
    fn score_csv_round_trips_bit_exact(
        scores in prop::collection::vec((finite(), finite()), 1..30),
        distance in any::<bool>(),
    ) {
        let mut csv = String::from("matcher,target_id,query_id,score\n");
        for (r, (a, b)) in scores.iter().enumerate() {
            csv.push_str(&format!("face,t{r},q{},{a:?}\n", r % 3));
            csv.push_str(&format!("finger,t{r},q{},{b:?}\n", r % 3));
        }
        let polarity: BTreeMap<String, Polarity> = [
            ("face".to_string(), Polarity::Similarity),
            ("finger".to_string(), if distance { Polarity::Distance } else { Polarity::Similarity }),
        ]
        .into();

        let load = |bytes: &[u8]| {
            let records = parse_score_csv(bytes, Some(&polarity)).unwrap();
            build_multimodal_table(&records, &matchers_in_order(&records)).unwrap()
        };
        let table = load(csv.as_bytes());
        let emitted = emit_score_csv(&table);
        let again = load(emitted.as_bytes());
        prop_assert_eq!(&table, &again);
        prop_assert_eq!(emit_score_csv(&again), emitted);
        for (row, (a, b)) in table.rows().iter().zip(&scores) {
            let b = if distance { -b } else { *b };
            prop_assert_eq!(row.scores[0].to_bits(), a.to_bits());
            prop_assert_eq!(row.scores[1].to_bits(), b.to_bits());
        }
    }

    #[test]
    fn roc_csv_round_trips(points in prop::collection::vec((0.0..=1.0f64, 0.0..=1.0f64), 1..50)) {
        let points: Vec<RocPoint> = points.into_iter().map(|(far, gar)| RocPoint { far, gar }).collect();
        let csv = emit_roc_csv(&points).unwrap();
        prop_assert_eq!(parse_roc_csv(csv.as_bytes()).unwrap(), points);
    }
}
