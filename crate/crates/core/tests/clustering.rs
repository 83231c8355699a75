use proptest::prelude::*;

use tkg_continual::clustering::{
    core_distance, euclidean, hdbscan_fit, mutual_reachability, ClusterConfig, PointSet,
};

fn cloud() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..5).prop_flat_map(|dim| {
        prop::collection::vec(
            prop::collection::vec(prop_oneof![-20i32..20, -3i32..3], dim).prop_map(|v| v.into_iter().map(f64::from).collect()),
            2..40,
        )
    })
}

/// Maps labels to first-appearance order so equal partitions compare equal.
fn canonical(labels: &[Option<usize>]) -> Vec<Option<usize>> {
    let mut seen = Vec::new();
    labels
        .iter()
        .map(|l| {
            l.map(|c| match seen.iter().position(|&x| x == c) {
                Some(i) => i,
                None => {
                    seen.push(c);
                    seen.len() - 1
                }
            })
        })
        .collect()
}

proptest! {
    #[test]
    fn mutual_reachability_dominates_distance(rows in cloud(), k in 1usize..4) {
        let pts = PointSet::from_rows(&rows).unwrap();
        prop_assume!(k < pts.len());
        let core = core_distance(&pts, k).unwrap();
        for a in 0..pts.len() {
            for b in 0..pts.len() {
                let d = euclidean(pts.point(a), pts.point(b));
                let m = mutual_reachability(&pts, &core, a, b);
                prop_assert!(m >= d);
                prop_assert_eq!(m, mutual_reachability(&pts, &core, b, a));
            }
        }
    }

    #[test]
    fn selected_clusters_are_well_formed(rows in cloud(), mcs in 2usize..6) {
        let pts = PointSet::from_rows(&rows).unwrap();
        let res = hdbscan_fit(&pts, ClusterConfig { min_cluster_size: mcs }).unwrap();
        prop_assert_eq!(res.labels.len(), pts.len());
        let mut covered = 0;
        for (i, c) in res.clusters.iter().enumerate() {
            prop_assert!(c.members.len() >= mcs);
            prop_assert!(!c.exemplars.is_empty());
            prop_assert!(c.exemplars.iter().all(|e| c.members.contains(e)));
            for &p in &c.members {
                prop_assert_eq!(res.labels[p], Some(i));
            }
            if i > 0 {
                prop_assert!(res.clusters[i - 1].members.len() >= c.members.len());
            }
            covered += c.members.len();
        }
        prop_assert_eq!(covered, res.labels.iter().filter(|l| l.is_some()).count());
    }

    #[test]
    fn labels_survive_point_reordering(rows in cloud(), mcs in 2usize..6, seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let shuffled: Vec<Vec<f64>> = order.iter().map(|&i| rows[i].clone()).collect();
        let cfg = ClusterConfig { min_cluster_size: mcs };
        let a = hdbscan_fit(&PointSet::from_rows(&rows).unwrap(), cfg).unwrap();
        let b = hdbscan_fit(&PointSet::from_rows(&shuffled).unwrap(), cfg).unwrap();
        let mut back = vec![None; rows.len()];
        for (pos, &i) in order.iter().enumerate() {
            back[i] = b.labels[pos];
        }
        prop_assert_eq!(canonical(&a.labels), canonical(&back));
    }
}

#[test]
fn fewer_points_than_the_minimum_are_noise() {
    let pts = PointSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
    let res = hdbscan_fit(&pts, ClusterConfig { min_cluster_size: 3 }).unwrap();
    assert_eq!(res.num_clusters(), 0);
    assert!(res.labels.iter().all(Option::is_none));
}

#[test]
fn minimum_cluster_size_below_two_is_rejected() {
    let pts = PointSet::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
    assert!(hdbscan_fit(&pts, ClusterConfig { min_cluster_size: 1 }).is_err());
}
