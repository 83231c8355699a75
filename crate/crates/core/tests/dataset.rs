use proptest::prelude::*;

use tkg_continual::dataset::{
    build_snapshots, parse_quadruples, split_task, Quadruple, SplitRatios, TaskStream, TimeFormat,
    Vocab,
};

fn sorted(mut v: Vec<Quadruple>) -> Vec<Quadruple> {
    v.sort_by_key(|q| (q.timestamp, q.subject, q.relation, q.object));
    v
}

fn quads() -> impl Strategy<Value = Vec<Quadruple>> {
    prop::collection::vec((0..6usize, 0..3usize, 0..6usize, 0..200i64), 1..120)
        .prop_map(|v| v.into_iter().map(|(s, r, o, t)| Quadruple::new(s, r, o, t)).collect())
}

fn vocab(ne: usize, nr: usize) -> Vocab {
    let mut v = Vocab::default();
    for e in 0..ne {
        v.intern_entity(&format!("e{e}"));
    }
    for r in 0..nr {
        v.intern_relation(&format!("r{r}"));
    }
    v
}

proptest! {
    #[test]
    fn snapshots_partition_the_events(events in quads(), window in 1i64..60) {
        let snaps = build_snapshots(&events, window, 0).unwrap();
        let mut all = Vec::new();
        for (i, s) in snaps.iter().enumerate() {
            prop_assert_eq!(s.index, i);
            prop_assert_eq!(s.end - s.start, window);
            if i > 0 {
                prop_assert_eq!(s.start, snaps[i - 1].end);
            }
            for q in &s.events {
                prop_assert!(s.start <= q.timestamp && q.timestamp < s.end);
            }
            all.extend(s.events.iter().copied());
        }
        prop_assert_eq!(sorted(all), sorted(events));
    }

    #[test]
    fn splits_partition_each_snapshot(events in quads(), seed in any::<u64>(), train in 1u32..90) {
        let ratios = SplitRatios::new(train, (100 - train) / 2, 100 - train - (100 - train) / 2).unwrap();
        for snap in build_snapshots(&events, 50, 0).unwrap().iter().filter(|s| !s.events.is_empty()) {
            let task = split_task(snap, ratios, seed).unwrap();
            let sizes = ratios.sizes(snap.events.len());
            prop_assert_eq!([task.train.len(), task.valid.len(), task.test.len()], sizes);
            let mut union = task.train.clone();
            union.extend(&task.valid);
            union.extend(&task.test);
            prop_assert_eq!(sorted(union), sorted(snap.events.clone()));
        }
    }

    #[test]
    fn stream_text_round_trips(events in quads(), seed in any::<u64>()) {
        let mut snaps = build_snapshots(&events, 40, 0).unwrap();
        snaps.retain(|s| !s.events.is_empty());
        for (i, s) in snaps.iter_mut().enumerate() {
            s.index = i;
        }
        let ratios = SplitRatios::new(50, 25, 25).unwrap();
        let a = TaskStream::from_snapshots(&vocab(6, 3), &snaps, ratios, seed).unwrap();
        let b = TaskStream::from_snapshots(&vocab(6, 3), &snaps, ratios, seed).unwrap();
        prop_assert_eq!(a.to_text(), b.to_text());
        let back = TaskStream::from_text(&a.to_text()).unwrap();
        prop_assert_eq!(back, a);
    }
}

#[test]
fn parse_assigns_contiguous_ids_in_first_seen_order() {
    let text = "# comment\nalice\tmeets\tbob\t2014-01-03\nbob\tcalls\tcarol\t2014-01-01\ncarol\tmeets\talice\t2014-02-01\n";
    let (vocab, quads) = parse_quadruples(text, TimeFormat::Auto).unwrap();
    assert_eq!(vocab.num_entities(), 3);
    assert_eq!(vocab.num_relations(), 2);
    assert_eq!(vocab.entity_id("carol"), Some(2));
    assert_eq!(vocab.relation_name(1), Some("calls"));
    assert_eq!(quads[0], Quadruple::new(0, 0, 1, 2));
    assert_eq!(quads[1].timestamp, 0);
    assert_eq!(quads[2].timestamp, 31);
}

#[test]
fn malformed_lines_report_their_number() {
    let err = parse_quadruples("a\tb\tc\t1\na\tb\n", TimeFormat::Auto).unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
}

#[test]
fn empty_windows_between_events_are_kept() {
    let events = [Quadruple::new(0, 0, 1, 0), Quadruple::new(0, 0, 1, 25)];
    let snaps = build_snapshots(&events, 10, 0).unwrap();
    assert_eq!(snaps.len(), 3);
    assert!(snaps[1].events.is_empty());
}
